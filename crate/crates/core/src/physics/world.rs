use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::Vec2;
use crate::instruction::{apply_instructions, format_program, ApplyError, ForceSchedule, InstructionProgram, SpriteSource};
use crate::layers::{compute_layer_count, LayerError, LayerSet};
use crate::scene::Scene;

use super::body::{normalize_angle, BodyState, RigidBody};
use super::collision::{detect_collisions, solve_contacts, Contact, SOLVER_ITERATIONS};
use super::shape::{inertia_of, shape_from_mask, ShapeError};
use super::trajectory::{StepRecord, Trajectory};

/// Linear drag coefficient on depth velocity, 1/s.
pub const DEPTH_DRAG: f64 = 0.5;

#[derive(Debug, Error)]
pub enum PhysicsError {
    #[error("non-finite state for body `{body}` at step {step}")]
    NumericalFault { body: String, step: usize },
    #[error("body `{body}`: {source}")]
    Shape {
        body: String,
        #[source]
        source: ShapeError,
    },
    #[error(transparent)]
    Layer(#[from] LayerError),
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Apply(#[from] ApplyError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorldConfig {
    /// Depth drag coefficient c_d (1/s); zero disables depth regulation.
    pub depth_drag: f64,
    pub solver_iterations: usize,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            depth_drag: DEPTH_DRAG,
            solver_iterations: SOLVER_ITERATIONS,
        }
    }
}

/// A contact reported by [`World::step`], identified by body ids.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactReport {
    pub a: String,
    pub b: String,
    pub layer: usize,
    pub point: Vec2,
    pub normal: Vec2,
    pub penetration: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub contacts: Vec<ContactReport>,
    pub narrow_phase_tests: usize,
}

/// The simulation world: bodies sorted by id, their layers and the
/// constant environment.
#[derive(Clone, Debug)]
pub struct World {
    bodies: Vec<RigidBody>,
    layers: LayerSet,
    /// Gravity in px/s².
    gravity: Vec2,
    config: WorldConfig,
    steps_taken: usize,
}

impl World {
    pub fn from_scene(scene: &Scene, config: WorldConfig) -> Result<World, PhysicsError> {
        let ppm = scene.pixels_per_meter;
        let mut bodies = Vec::with_capacity(scene.bodies.len());
        for spec in &scene.bodies {
            let shape_err = |source| PhysicsError::Shape {
                body: spec.id.clone(),
                source,
            };
            let shape = shape_from_mask(&spec.sprite.image).map_err(shape_err)?;
            let inertia = if spec.is_static {
                f64::INFINITY
            } else {
                inertia_of(&shape.hull, spec.mass, ppm).map_err(shape_err)?
            };
            let [vx, vy, vz] = spec.initial_velocity;
            let state = BodyState {
                x: spec.position[0],
                y: spec.position[1],
                z: 0.0,
                theta: normalize_angle(spec.rotation),
                vx,
                vy,
                vz,
                omega: spec.initial_angular_velocity,
            };
            bodies.push(RigidBody::new(
                spec.id.clone(),
                shape.local_polygon(),
                shape.centroid,
                spec.mass,
                inertia,
                spec.friction,
                spec.elasticity,
                spec.is_static,
                spec.depth,
                state,
                ppm,
            ));
        }
        bodies.sort_by(|a, b| a.id.cmp(&b.id));

        let n_dynamic = bodies.iter().filter(|b| !b.is_static).count();
        let layer_count = compute_layer_count(n_dynamic, scene.sim.layer_count_override)?;
        let layers = LayerSet::new(
            bodies
                .iter()
                .filter(|b| !b.is_static)
                .map(|b| (b.id.as_str(), b.depth())),
            bodies
                .iter()
                .filter(|b| b.is_static)
                .map(|b| (b.id.as_str(), b.depth())),
            layer_count,
        );
        let mut world = World {
            bodies,
            layers,
            gravity: Vec2::new(scene.gravity[0] * ppm, scene.gravity[1] * ppm),
            config,
            steps_taken: 0,
        };
        world.sync_layers();
        Ok(world)
    }

    fn sync_layers(&mut self) {
        for b in &mut self.bodies {
            b.layer = self.layers.layer_of(&b.id).expect("every body has a layer");
        }
    }

    pub fn bodies(&self) -> &[RigidBody] {
        &self.bodies
    }

    pub fn body(&self, id: &str) -> Option<&RigidBody> {
        self.bodies.iter().find(|b| b.id == id)
    }

    pub fn body_mut(&mut self, id: &str) -> Option<&mut RigidBody> {
        self.bodies.iter_mut().find(|b| b.id == id)
    }

    pub fn layers(&self) -> &LayerSet {
        &self.layers
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn states(&self) -> BTreeMap<String, BodyState> {
        self.bodies
            .iter()
            .map(|b| (b.id.clone(), b.state))
            .collect()
    }

    /// Advances one fixed step: integrate, resolve contacts layer by layer,
    /// then move bodies whose depth crossed a boundary to their new layer.
    ///
    /// Scheduled forces apply when their interval covers the midpoint of the
    /// step, so interval edges on the step grid are never ambiguous.
    pub fn step(&mut self, dt: f64, schedule: &ForceSchedule) -> Result<StepReport, PhysicsError> {
        let step = self.steps_taken;
        let t_mid = (step as f64 + 0.5) * dt;
        let gravity = self.gravity;
        let drag = self.config.depth_drag;

        for body in self.bodies.iter_mut().filter(|b| !b.is_static) {
            let ppm = body.pixels_per_meter();
            let m = body.mass;
            let (applied, torque) = schedule.at(&body.id, t_mid);
            let fz_drag = -drag * m * body.state.vz;
            body.force = [
                gravity.x / ppm * m + applied[0],
                gravity.y / ppm * m + applied[1],
                applied[2] + fz_drag,
            ];
            body.torque = torque;

            let s = &mut body.state;
            // Gravity enters as an acceleration so free fall is exact in px.
            s.vx += (gravity.x + applied[0] / m * ppm) * dt;
            s.vy += (gravity.y + applied[1] / m * ppm) * dt;
            s.vz += (applied[2] / m - drag * s.vz) * dt;
            s.omega += torque / body.inertia * dt;
            s.x += s.vx * dt;
            s.y += s.vy * dt;
            s.z += s.vz * dt;
            s.theta = normalize_angle(s.theta + s.omega * dt);
        }
        self.check_finite(step)?;

        let mut report = StepReport::default();
        for layer in 0..self.layers.layer_count() {
            let members: Vec<usize> = (0..self.bodies.len())
                .filter(|&i| self.bodies[i].layer == layer)
                .collect();
            if members.len() < 2 {
                continue;
            }
            let detection = detect_collisions(&self.bodies, &members);
            report.narrow_phase_tests += detection.narrow_phase_tests;
            if detection.contacts.is_empty() {
                continue;
            }
            solve_contacts(&mut self.bodies, &detection.contacts, self.config.solver_iterations);
            report
                .contacts
                .extend(detection.contacts.iter().map(|c: &Contact| ContactReport {
                    a: self.bodies[c.a].id.clone(),
                    b: self.bodies[c.b].id.clone(),
                    layer,
                    point: c.point,
                    normal: c.normal,
                    penetration: c.penetration,
                }));
        }
        self.check_finite(step)?;

        let depths: Vec<(String, f64)> = self
            .bodies
            .iter()
            .filter(|b| !b.is_static)
            .map(|b| (b.id.clone(), b.depth()))
            .collect();
        self.layers = self
            .layers
            .reassign(depths.iter().map(|(id, d)| (id.as_str(), *d)));
        self.sync_layers();
        self.steps_taken += 1;
        Ok(report)
    }

    fn check_finite(&self, step: usize) -> Result<(), PhysicsError> {
        match self.bodies.iter().find(|b| !b.state.is_finite()) {
            Some(b) => Err(PhysicsError::NumericalFault {
                body: b.id.clone(),
                step,
            }),
            None => Ok(()),
        }
    }

    pub fn record(&self, step: usize) -> StepRecord {
        StepRecord::capture(step, &self.bodies)
    }
}

/// Applies `program` to `scene` and runs `scene.sim.steps` fixed steps at
/// `1 / scene.sim.hz`, recording every state including the initial one.
pub fn simulate(
    scene: &Scene,
    program: &InstructionProgram,
    sprites: &dyn SpriteSource,
) -> Result<Trajectory, SimulationError> {
    simulate_with(scene, program, sprites, WorldConfig::default())
}

pub fn simulate_with(
    scene: &Scene,
    program: &InstructionProgram,
    sprites: &dyn SpriteSource,
    config: WorldConfig,
) -> Result<Trajectory, SimulationError> {
    let (edited, schedule) = apply_instructions(scene, program, sprites)?;
    let mut world = World::from_scene(&edited, config)?;
    let dt = scene.sim.dt();
    let steps = scene.sim.steps;
    let mut records = Vec::with_capacity(steps + 1);
    records.push(world.record(0));
    for k in 0..steps {
        world.step(dt, &schedule)?;
        records.push(world.record(k + 1));
    }
    Ok(Trajectory {
        dt,
        steps,
        scene_hash: scene.content_hash(),
        program: format_program(program),
        records,
    })
}

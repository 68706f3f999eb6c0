use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Vec2};

/// Augmented 2.5D state of one body.
///
/// Planar quantities are in pixels; depth displacement is in metres and
/// measured from the body's initial depth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// In-plane rotation, normalised to (-π, π].
    pub theta: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub omega: f64,
}

impl BodyState {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }

    pub fn set_position(&mut self, p: Vec2) {
        self.x = p.x;
        self.y = p.y;
    }

    pub fn set_velocity(&mut self, v: Vec2) {
        self.vx = v.x;
        self.vy = v.y;
    }

    pub fn is_finite(&self) -> bool {
        [
            self.x, self.y, self.z, self.theta, self.vx, self.vy, self.vz, self.omega,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Wraps an angle into (-π, π]. In-range angles are returned untouched.
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        theta
    } else {
        PI - (PI - theta).rem_euclid(TAU)
    }
}

/// A simulated rigid body.
#[derive(Clone, Debug, PartialEq)]
pub struct RigidBody {
    pub id: String,
    /// Convex polygon around the centre of mass, pixels, counter-clockwise.
    pub shape: Vec<Vec2>,
    /// Centre of mass in sprite pixel coordinates.
    pub sprite_centroid: Vec2,
    /// Mass in kg; infinite for static bodies.
    pub mass: f64,
    /// Moment of inertia in kg·m²; infinite for static bodies.
    pub inertia: f64,
    pub friction: f64,
    pub elasticity: f64,
    pub is_static: bool,
    /// Absolute depth (m) at step 0.
    pub initial_depth: f64,
    pub state: BodyState,
    pub layer: usize,
    /// Last accumulated external force F_3D (N).
    pub force: [f64; 3],
    /// Last accumulated external torque (N·m).
    pub torque: f64,
    pixels_per_meter: f64,
}

impl RigidBody {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        shape: Vec<Vec2>,
        sprite_centroid: Vec2,
        mass: f64,
        inertia: f64,
        friction: f64,
        elasticity: f64,
        is_static: bool,
        initial_depth: f64,
        state: BodyState,
        pixels_per_meter: f64,
    ) -> Self {
        let (mass, inertia) = if is_static {
            (f64::INFINITY, f64::INFINITY)
        } else {
            (mass, inertia)
        };
        RigidBody {
            id: id.into(),
            shape,
            sprite_centroid,
            mass,
            inertia,
            friction,
            elasticity,
            is_static,
            initial_depth,
            state,
            layer: 0,
            force: [0.0; 3],
            torque: 0.0,
            pixels_per_meter,
        }
    }

    pub fn inv_mass(&self) -> f64 {
        if self.is_static {
            0.0
        } else {
            1.0 / self.mass
        }
    }

    /// Inverse inertia in 1/(kg·px²), the unit the planar solver works in.
    pub fn inv_inertia_px(&self) -> f64 {
        if self.is_static {
            0.0
        } else {
            1.0 / (self.inertia * self.pixels_per_meter * self.pixels_per_meter)
        }
    }

    pub fn pixels_per_meter(&self) -> f64 {
        self.pixels_per_meter
    }

    /// Current absolute depth in metres.
    pub fn depth(&self) -> f64 {
        self.initial_depth + self.state.z
    }

    pub fn world_polygon(&self) -> Vec<Vec2> {
        let (s, c) = self.state.theta.sin_cos();
        let origin = self.state.position();
        self.shape
            .iter()
            .map(|p| Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y) + origin)
            .collect()
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(&self.world_polygon())
    }

    /// Velocity of the material point at world position `p`.
    pub fn point_velocity(&self, p: Vec2) -> Vec2 {
        let r = p - self.state.position();
        self.state.velocity() + Vec2::cross_scalar(self.state.omega, r)
    }

    /// Planar kinetic energy in kg·px²/s².
    pub fn kinetic_energy_px(&self) -> f64 {
        if self.is_static {
            return 0.0;
        }
        let i_px = self.inertia * self.pixels_per_meter * self.pixels_per_meter;
        0.5 * self.mass * self.state.velocity().length_squared()
            + 0.5 * i_px * self.state.omega * self.state.omega
    }

    /// Planar linear momentum in kg·px/s.
    pub fn momentum_px(&self) -> Vec2 {
        if self.is_static {
            Vec2::ZERO
        } else {
            self.state.velocity() * self.mass
        }
    }

    pub(crate) fn apply_impulse(&mut self, impulse: Vec2, at: Vec2) {
        if self.is_static {
            return;
        }
        let r = at - self.state.position();
        let v = self.state.velocity() + impulse * self.inv_mass();
        self.state.set_velocity(v);
        self.state.omega += r.cross(impulse) * self.inv_inertia_px();
    }
}

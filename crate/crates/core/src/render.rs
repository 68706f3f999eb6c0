//! Turns a trajectory back into images.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::compositor::{painter_order, sample_frames, warp_sprite, Canvas, CompositeError, Frame, PremulImage, SpriteInstance};
use crate::geometry::Vec2;
use crate::instruction::{apply_instructions, parse_program, ApplyError, SpriteSource, SyntaxError};
use crate::perspective::{displacement_px, ScaleModel};
use crate::physics::{shape_from_mask, ShapeError, StepRecord, Trajectory};
use crate::relight::{shade, warp_aux_maps, AuxTextures, DimensionMismatch, ShadingInputs};
use crate::scene::Scene;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("trajectory was simulated from scene {expected}, but this scene hashes to {actual}")]
    HashMismatch { expected: String, actual: String },
    #[error("stored program does not parse: {0}")]
    Program(#[from] SyntaxError),
    #[error(transparent)]
    Apply(#[from] ApplyError),
    #[error("body `{body}`: {source}")]
    Shape {
        body: String,
        #[source]
        source: ShapeError,
    },
    #[error("trajectory references unknown body `{0}`")]
    UnknownBody(String),
    #[error("step {0} is not in the trajectory")]
    MissingStep(usize),
    #[error(transparent)]
    Composite(#[from] CompositeError),
    #[error(transparent)]
    Shading(#[from] DimensionMismatch),
}

struct BodyAssets {
    sprite: PremulImage,
    centroid: Vec2,
    initial_depth: f64,
    aux: Option<AuxTextures>,
}

/// Everything needed to draw any step of one trajectory.
pub struct Renderer {
    scene: Scene,
    assets: BTreeMap<String, BodyAssets>,
    records: Vec<StepRecord>,
    relight: bool,
}

impl Renderer {
    /// Checks that `trajectory` came from `scene`, re-applies its program
    /// and prepares per-body textures.
    pub fn new(
        scene: &Scene,
        trajectory: &Trajectory,
        sprites: &dyn SpriteSource,
        relight: bool,
    ) -> Result<Renderer, RenderError> {
        let actual = scene.content_hash();
        if actual != trajectory.scene_hash {
            return Err(RenderError::HashMismatch {
                expected: trajectory.scene_hash.clone(),
                actual,
            });
        }
        let program = parse_program(&trajectory.program)?;
        let (edited, _) = apply_instructions(scene, &program, sprites)?;
        let mut assets = BTreeMap::new();
        for body in &edited.bodies {
            let shape = shape_from_mask(&body.sprite.image).map_err(|source| RenderError::Shape {
                body: body.id.clone(),
                source,
            })?;
            let aux = (body.albedo.is_some() || body.normals.is_some()).then(|| {
                AuxTextures::new(
                    &body.sprite.image,
                    body.albedo.as_ref().map(|a| &a.image),
                    body.normals.as_ref().map(|a| &a.image),
                )
            });
            assets.insert(
                body.id.clone(),
                BodyAssets {
                    sprite: PremulImage::from_rgba8(&body.sprite.image),
                    centroid: shape.centroid,
                    initial_depth: body.depth,
                    aux,
                },
            );
        }
        Ok(Renderer {
            scene: edited,
            assets,
            records: trajectory.records.clone(),
            relight,
        })
    }

    /// Step indices for `n_frames` uniformly sampled frames.
    pub fn frame_steps(&self, n_frames: usize) -> Result<Vec<usize>, RenderError> {
        Ok(sample_frames(self.records.len().saturating_sub(1), n_frames)?)
    }

    /// Renders the state recorded at `step` as frame number `index`.
    pub fn render_step(&self, index: usize, step: usize) -> Result<Frame, RenderError> {
        let record = self.records.get(step).ok_or(RenderError::MissingStep(step))?;
        let ppm = self.scene.pixels_per_meter;
        let scale = ScaleModel::new(self.scene.camera.focal_length);
        let mut instances = Vec::with_capacity(record.bodies.len());
        let mut aux = Vec::with_capacity(record.bodies.len());
        for (id, rec) in &record.bodies {
            let a = self
                .assets
                .get(id)
                .ok_or_else(|| RenderError::UnknownBody(id.clone()))?;
            instances.push(SpriteInstance {
                id,
                sprite: &a.sprite,
                centroid: a.centroid,
                position: Vec2::new(rec.x, rec.y),
                theta: rec.theta,
                depth: a.initial_depth + rec.z,
                displacement_px: displacement_px(rec.z, ppm),
                scale,
            });
            aux.push(a.aux.as_ref());
        }

        let background = &self.scene.background.image;
        let size = background.dimensions();
        let mut canvas = Canvas::new(background);
        let mut shading = self
            .relight
            .then(|| ShadingInputs::empty(size.0, size.1, self.scene.light));
        for idx in painter_order(&instances) {
            let inst = &instances[idx];
            let transform = inst.transform()?;
            let patch = warp_sprite(inst.sprite, &transform, size);
            canvas.blend(&patch);
            if let Some(inputs) = shading.as_mut() {
                accumulate(inputs, &patch, aux[idx], &transform, inst);
            }
        }
        let mut image = canvas.into_image();
        if let Some(mut inputs) = shading {
            normalise(&mut inputs);
            image = shade(&image, &inputs)?;
        }
        Ok(Frame { image, index, step })
    }

    /// Renders `n_frames` uniformly sampled frames in order.
    pub fn render_all(&self, n_frames: usize) -> Result<Vec<Frame>, RenderError> {
        self.frame_steps(n_frames)?
            .into_iter()
            .enumerate()
            .map(|(i, s)| self.render_step(i, s))
            .collect()
    }
}

/// Folds one body into the shading maps with the same over-operator as the
/// colour canvas. Bodies without lighting maps only occlude.
fn accumulate(
    inputs: &mut ShadingInputs,
    patch: &crate::compositor::Patch,
    aux: Option<&AuxTextures>,
    transform: &crate::compositor::AffineTransform,
    inst: &SpriteInstance<'_>,
) {
    let width = inputs.width;
    let warped = aux.map(|t| warp_aux_maps(t, transform, inst.theta, (inputs.width, inputs.height)));
    let depth = inst.depth as f32;
    for j in 0..patch.height {
        for i in 0..patch.width {
            let a = patch.get(i, j)[3];
            if a <= 0.0 {
                continue;
            }
            let k = ((patch.y0 + j) * width + patch.x0 + i) as usize;
            let keep = 1.0 - a;
            match &warped {
                Some((alb, nrm)) => {
                    let (al, nr) = (alb.get(i, j), nrm.get(i, j));
                    for c in 0..3 {
                        inputs.albedo[k][c] = al[c] + keep * inputs.albedo[k][c];
                        inputs.normals[k][c] = nr[c] + keep * inputs.normals[k][c];
                    }
                    inputs.depth[k] = depth * a + keep * inputs.depth[k];
                    inputs.coverage[k] = a + keep * inputs.coverage[k];
                }
                None => {
                    for c in 0..3 {
                        inputs.albedo[k][c] *= keep;
                        inputs.normals[k][c] *= keep;
                    }
                    inputs.depth[k] *= keep;
                    inputs.coverage[k] *= keep;
                }
            }
        }
    }
}

/// Converts the premultiplied accumulators into per-pixel values.
fn normalise(inputs: &mut ShadingInputs) {
    for k in 0..inputs.coverage.len() {
        let cov = inputs.coverage[k];
        if cov > 0.0 {
            for c in 0..3 {
                inputs.albedo[k][c] /= cov;
                inputs.normals[k][c] /= cov;
            }
            inputs.depth[k] /= cov;
        } else {
            inputs.normals[k] = [0.0, 0.0, 1.0];
        }
    }
}

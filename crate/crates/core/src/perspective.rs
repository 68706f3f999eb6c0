//! Perspective-consistent sprite scaling, `S(d) = S_0 · f / (f + d)`.
//!
//! `d` is a body's depth displacement from its initial depth, converted to
//! pixels so that it shares units with the focal length. Always pass the
//! absolute displacement from the initial depth: rescaling an already
//! scaled size by a further increment does not compose to the same value.

use thiserror::Error;

use crate::geometry::Vec2;

/// Smallest admissible `f + d`, in pixels.
pub const SINGULAR_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("depth displacement {displacement} px reaches the camera plane (focal length {focal_length} px)")]
pub struct SingularDepth {
    pub focal_length: f64,
    pub displacement: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleModel {
    /// Focal length in pixels.
    pub focal_length: f64,
    /// Scale at zero displacement.
    pub base_scale: f64,
}

impl ScaleModel {
    pub fn new(focal_length: f64) -> Self {
        ScaleModel {
            focal_length,
            base_scale: 1.0,
        }
    }
}

/// Converts a depth displacement in metres to pixels.
pub fn displacement_px(displacement_m: f64, pixels_per_meter: f64) -> f64 {
    displacement_m * pixels_per_meter
}

/// `S_0 · f / (f + d)` for a displacement `d` in pixels.
pub fn scale_factor(model: &ScaleModel, displacement: f64) -> Result<f64, SingularDepth> {
    let f = model.focal_length;
    let denom = f + displacement;
    if !(denom > SINGULAR_EPSILON) {
        return Err(SingularDepth {
            focal_length: f,
            displacement,
        });
    }
    Ok(model.base_scale * f / denom)
}

/// Axis-aligned box in frame pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledBox {
    pub center: Vec2,
    pub width: f64,
    pub height: f64,
}

impl ScaledBox {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// Sprite extent after perspective scaling, centred on the body's anchor.
pub fn apparent_size(
    sprite_size: (u32, u32),
    anchor: Vec2,
    model: &ScaleModel,
    displacement: f64,
) -> Result<ScaledBox, SingularDepth> {
    let s = scale_factor(model, displacement)?;
    Ok(ScaledBox {
        center: anchor,
        width: sprite_size.0 as f64 * s,
        height: sprite_size.1 as f64 * s,
    })
}

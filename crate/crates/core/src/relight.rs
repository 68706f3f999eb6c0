//! Directional Lambertian relighting with ambient term and reciprocal depth
//! attenuation:
//!
//! ```text
//! X̃ = clamp(Â · (k_a + I_L · max(0, n·l)) / (1 + β d), 0, 1)
//! ```
//!
//! Only covered (foreground) pixels are shaded; the rest pass through.

use image::RgbaImage;
use thiserror::Error;

use crate::compositor::{AffineTransform, Patch, PremulImage};
use crate::scene::DirectionalLight;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{map} is {got:?}, expected {expected:?}")]
pub struct DimensionMismatch {
    pub map: &'static str,
    pub expected: (u32, u32),
    pub got: (u32, u32),
}

/// Per-pixel maps aligned with a composited frame.
#[derive(Clone, Debug)]
pub struct ShadingInputs {
    pub width: u32,
    pub height: u32,
    /// Albedo `Â` in `[0, 1]`.
    pub albedo: Vec<[f32; 3]>,
    /// Surface normals; renormalised before use.
    pub normals: Vec<[f32; 3]>,
    /// Absolute depth in metres.
    pub depth: Vec<f32>,
    /// How much of each pixel belongs to relit bodies; 0 leaves it untouched.
    pub coverage: Vec<f32>,
    pub light: DirectionalLight,
}

impl ShadingInputs {
    /// Inputs that leave every pixel untouched.
    pub fn empty(width: u32, height: u32, light: DirectionalLight) -> Self {
        let n = (width * height) as usize;
        ShadingInputs {
            width,
            height,
            albedo: vec![[0.0; 3]; n],
            normals: vec![[0.0, 0.0, 1.0]; n],
            depth: vec![0.0; n],
            coverage: vec![0.0; n],
            light,
        }
    }
}

/// Shading factor for one surface point.
pub fn shading_factor(normal: [f64; 3], depth: f64, light: &DirectionalLight) -> f64 {
    let len = (normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2]).sqrt();
    let n = if len > 0.0 && len.is_finite() {
        [normal[0] / len, normal[1] / len, normal[2] / len]
    } else {
        [0.0, 0.0, 1.0]
    };
    let l = light.direction;
    let lambert = (n[0] * l[0] + n[1] * l[1] + n[2] * l[2]).max(0.0);
    (light.ambient + light.intensity * lambert) / (1.0 + light.attenuation * depth)
}

/// Relights `frame`. Partially covered pixels blend the relit colour with
/// the composited one by coverage.
pub fn shade(frame: &RgbaImage, inputs: &ShadingInputs) -> Result<RgbaImage, DimensionMismatch> {
    let expected = (inputs.width, inputs.height);
    if frame.dimensions() != expected {
        return Err(DimensionMismatch {
            map: "frame",
            expected,
            got: frame.dimensions(),
        });
    }
    let n = (inputs.width * inputs.height) as usize;
    for (map, len) in [
        ("albedo", inputs.albedo.len()),
        ("normals", inputs.normals.len()),
        ("depth", inputs.depth.len()),
        ("coverage", inputs.coverage.len()),
    ] {
        if len != n {
            return Err(DimensionMismatch {
                map,
                expected,
                got: (len as u32, 1),
            });
        }
    }

    let mut out = frame.clone();
    for (k, px) in out.pixels_mut().enumerate() {
        let cov = inputs.coverage[k].clamp(0.0, 1.0) as f64;
        if cov <= 0.0 {
            continue;
        }
        let nrm = inputs.normals[k].map(f64::from);
        let factor = shading_factor(nrm, inputs.depth[k] as f64, &inputs.light);
        for c in 0..3 {
            let relit = (inputs.albedo[k][c] as f64 * factor).clamp(0.0, 1.0);
            let base = px[c] as f64 / 255.0;
            let v = (1.0 - cov) * base + cov * relit;
            px[c] = (v * 255.0).round().clamp(0.0, 255.0) as u8;
        }
    }
    Ok(out)
}

/// Decodes an RGB-encoded normal map texel (`2c - 1`).
pub fn decode_normal(rgb: [u8; 3]) -> [f64; 3] {
    rgb.map(|c| 2.0 * c as f64 / 255.0 - 1.0)
}

/// Albedo and normal textures premultiplied by sprite alpha, so they warp
/// with the same resampler as the sprite. Channel 3 is the sprite alpha.
#[derive(Clone, Debug)]
pub struct AuxTextures {
    pub albedo: PremulImage,
    pub normals: PremulImage,
}

impl AuxTextures {
    /// Missing albedo falls back to the sprite colour, missing normals face
    /// the camera.
    pub fn new(sprite: &RgbaImage, albedo: Option<&RgbaImage>, normals: Option<&RgbaImage>) -> Self {
        let (w, h) = sprite.dimensions();
        let mut alb = Vec::with_capacity((w * h) as usize);
        let mut nrm = Vec::with_capacity((w * h) as usize);
        for (x, y, p) in sprite.enumerate_pixels() {
            let a = p[3] as f32 / 255.0;
            let src = albedo.map_or(p, |m| m.get_pixel(x, y));
            alb.push([
                src[0] as f32 / 255.0 * a,
                src[1] as f32 / 255.0 * a,
                src[2] as f32 / 255.0 * a,
                a,
            ]);
            let n = normals.map_or([0.0, 0.0, 1.0], |m| {
                let t = m.get_pixel(x, y);
                decode_normal([t[0], t[1], t[2]])
            });
            nrm.push([n[0] as f32 * a, n[1] as f32 * a, n[2] as f32 * a, a]);
        }
        AuxTextures {
            albedo: PremulImage {
                width: w,
                height: h,
                data: alb,
            },
            normals: PremulImage {
                width: w,
                height: h,
                data: nrm,
            },
        }
    }
}

/// Warps albedo and normals with the sprite transform; normals are also
/// rotated in-plane by `theta`.
pub fn warp_aux_maps(
    aux: &AuxTextures,
    transform: &AffineTransform,
    theta: f64,
    frame_size: (u32, u32),
) -> (Patch, Patch) {
    let albedo = crate::compositor::warp_sprite(&aux.albedo, transform, frame_size);
    let mut normals = crate::compositor::warp_sprite(&aux.normals, transform, frame_size);
    let (s, c) = theta.sin_cos();
    let (s, c) = (s as f32, c as f32);
    for n in &mut normals.data {
        let (x, y) = (n[0], n[1]);
        n[0] = c * x - s * y;
        n[1] = s * x + c * y;
    }
    (albedo, normals)
}

//! Motion-guided composition: each sprite is warped by its simulated pose,
//! scaled by perspective about its centroid and alpha-blended over the
//! background far-to-near.
//!
//! All blending happens on premultiplied RGBA in `f32`.

use image::{Rgba, RgbaImage};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::perspective::{scale_factor, ScaleModel, SingularDepth};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompositeError {
    #[error("cannot sample {requested} frames from {available} recorded states")]
    TooManyFrames { requested: usize, available: usize },
    #[error("body `{body}`: {source}")]
    SingularDepth {
        body: String,
        #[source]
        source: SingularDepth,
    },
}

/// Step indices of `n_frames` frames spread uniformly over the `steps + 1`
/// recorded states: `floor(k · (steps + 1) / n_frames)`.
pub fn sample_frames(steps: usize, n_frames: usize) -> Result<Vec<usize>, CompositeError> {
    let available = steps + 1;
    if n_frames > available {
        return Err(CompositeError::TooManyFrames {
            requested: n_frames,
            available,
        });
    }
    Ok((0..n_frames).map(|k| k * available / n_frames).collect())
}

/// Premultiplied RGBA image in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PremulImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<[f32; 4]>,
}

impl PremulImage {
    pub fn from_rgba8(img: &RgbaImage) -> Self {
        let data = img
            .pixels()
            .map(|p| {
                let a = p[3] as f32 / 255.0;
                [
                    p[0] as f32 / 255.0 * a,
                    p[1] as f32 / 255.0 * a,
                    p[2] as f32 / 255.0 * a,
                    a,
                ]
            })
            .collect();
        PremulImage {
            width: img.width(),
            height: img.height(),
            data,
        }
    }

    pub fn get(&self, x: i64, y: i64) -> [f32; 4] {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            [0.0; 4]
        } else {
            self.data[(y as usize) * self.width as usize + x as usize]
        }
    }
}

/// Converts one premultiplied pixel back to straight 8-bit RGBA.
pub fn unpremultiply(p: [f32; 4]) -> Rgba<u8> {
    let a = p[3].clamp(0.0, 1.0);
    let to_u8 = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    if a <= 0.0 {
        return Rgba([0, 0, 0, 0]);
    }
    Rgba([to_u8(p[0] / a), to_u8(p[1] / a), to_u8(p[2] / a), to_u8(a)])
}

/// Alpha-over on premultiplied colour: `src + (1 - α_src) · dst`.
#[inline]
pub fn over(src: [f32; 4], dst: [f32; 4]) -> [f32; 4] {
    let k = 1.0 - src[3];
    [
        src[0] + k * dst[0],
        src[1] + k * dst[1],
        src[2] + k * dst[2],
        src[3] + k * dst[3],
    ]
}

/// 2×3 affine map from sprite pixel coordinates to frame pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineTransform {
    pub matrix: [[f64; 3]; 2],
}

impl AffineTransform {
    pub const IDENTITY: AffineTransform = AffineTransform {
        matrix: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
    };

    /// Rotation by `theta` and uniform scale `scale`, both about the sprite
    /// point `centroid`, which lands on the frame point `position`.
    pub fn pose(centroid: Vec2, position: Vec2, theta: f64, scale: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let (a, b) = (scale * c, -scale * s);
        let (d, e) = (scale * s, scale * c);
        let tx = position.x - (a * centroid.x + b * centroid.y);
        let ty = position.y - (d * centroid.x + e * centroid.y);
        AffineTransform {
            matrix: [[a, b, tx], [d, e, ty]],
        }
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        let m = &self.matrix;
        Vec2::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2],
            m[1][0] * p.x + m[1][1] * p.y + m[1][2],
        )
    }

    pub fn determinant(&self) -> f64 {
        self.matrix[0][0] * self.matrix[1][1] - self.matrix[0][1] * self.matrix[1][0]
    }

    /// `None` when the map is singular.
    pub fn inverse(&self) -> Option<AffineTransform> {
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let [[a, b, tx], [d, e, ty]] = self.matrix;
        let (ia, ib) = (e / det, -b / det);
        let (id, ie) = (-d / det, a / det);
        Some(AffineTransform {
            matrix: [
                [ia, ib, -(ia * tx + ib * ty)],
                [id, ie, -(id * tx + ie * ty)],
            ],
        })
    }
}

/// A warped sprite placed at `(x0, y0)` in the frame. Empty when the sprite
/// lands entirely outside the frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub x0: u32,
    pub y0: u32,
    pub width: u32,
    pub height: u32,
    pub data: Vec<[f32; 4]>,
}

impl Patch {
    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn get(&self, x: u32, y: u32) -> [f32; 4] {
        self.data[(y * self.width + x) as usize]
    }
}

/// Bilinear sample at sprite coordinates `q`, with texel centres at half
/// integers and transparent black outside the image.
fn bilinear(src: &PremulImage, q: Vec2) -> [f32; 4] {
    let u = q.x - 0.5;
    let v = q.y - 0.5;
    let x0 = u.floor();
    let y0 = v.floor();
    let fx = (u - x0) as f32;
    let fy = (v - y0) as f32;
    let (x0, y0) = (x0 as i64, y0 as i64);
    let p00 = src.get(x0, y0);
    let p10 = src.get(x0 + 1, y0);
    let p01 = src.get(x0, y0 + 1);
    let p11 = src.get(x0 + 1, y0 + 1);
    let mut out = [0.0f32; 4];
    for c in 0..4 {
        let top = p00[c] + (p10[c] - p00[c]) * fx;
        let bottom = p01[c] + (p11[c] - p01[c]) * fx;
        out[c] = top + (bottom - top) * fy;
    }
    out
}

/// Inverse-mapped bilinear warp of a premultiplied image into a frame of
/// `frame_size`. The destination box is the transformed sprite's AABB
/// clipped to the frame.
pub fn warp_sprite(src: &PremulImage, transform: &AffineTransform, frame_size: (u32, u32)) -> Patch {
    let empty = Patch {
        x0: 0,
        y0: 0,
        width: 0,
        height: 0,
        data: Vec::new(),
    };
    let Some(inv) = transform.inverse() else {
        return empty;
    };
    let (w, h) = (src.width as f64, src.height as f64);
    let corners = [
        transform.apply(Vec2::new(0.0, 0.0)),
        transform.apply(Vec2::new(w, 0.0)),
        transform.apply(Vec2::new(0.0, h)),
        transform.apply(Vec2::new(w, h)),
    ];
    // Snap away round-off so exact placements do not grow by a pixel.
    const SNAP: f64 = 1e-9;
    let min_x = corners.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let max_x = corners.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let min_y = corners.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let max_y = corners.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    let x_lo = ((min_x + SNAP).floor().max(0.0)) as i64;
    let y_lo = ((min_y + SNAP).floor().max(0.0)) as i64;
    let x_hi = ((max_x - SNAP).ceil().min(frame_size.0 as f64)) as i64;
    let y_hi = ((max_y - SNAP).ceil().min(frame_size.1 as f64)) as i64;
    if x_hi <= x_lo || y_hi <= y_lo {
        return empty;
    }
    let (pw, ph) = ((x_hi - x_lo) as u32, (y_hi - y_lo) as u32);
    let mut data = Vec::with_capacity((pw * ph) as usize);
    for j in 0..ph {
        for i in 0..pw {
            let p = Vec2::new((x_lo + i as i64) as f64 + 0.5, (y_lo + j as i64) as f64 + 0.5);
            data.push(bilinear(src, inv.apply(p)));
        }
    }
    Patch {
        x0: x_lo as u32,
        y0: y_lo as u32,
        width: pw,
        height: ph,
        data,
    }
}

/// One body to draw in a frame.
#[derive(Clone, Copy, Debug)]
pub struct SpriteInstance<'a> {
    pub id: &'a str,
    pub sprite: &'a PremulImage,
    /// Centre of mass in sprite pixel coordinates.
    pub centroid: Vec2,
    pub position: Vec2,
    pub theta: f64,
    /// Current absolute depth (m), used for ordering.
    pub depth: f64,
    /// Depth displacement from the initial depth, in pixels.
    pub displacement_px: f64,
    pub scale: ScaleModel,
}

impl SpriteInstance<'_> {
    pub fn transform(&self) -> Result<AffineTransform, CompositeError> {
        let s = scale_factor(&self.scale, self.displacement_px).map_err(|source| {
            CompositeError::SingularDepth {
                body: self.id.to_string(),
                source,
            }
        })?;
        Ok(AffineTransform::pose(self.centroid, self.position, self.theta, s))
    }
}

/// A rendered frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub image: RgbaImage,
    pub index: usize,
    pub step: usize,
}

/// Far-to-near order: depth descending, then id ascending.
pub fn painter_order(instances: &[SpriteInstance<'_>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..instances.len()).collect();
    order.sort_by(|&a, &b| {
        instances[b]
            .depth
            .total_cmp(&instances[a].depth)
            .then_with(|| instances[a].id.cmp(instances[b].id))
    });
    order
}

/// Premultiplied canvas that remembers which pixels were drawn on, so that
/// untouched pixels can be emitted as the exact background bytes.
pub(crate) struct Canvas<'a> {
    background: &'a RgbaImage,
    pub(crate) data: Vec<[f32; 4]>,
    pub(crate) touched: Vec<bool>,
}

impl<'a> Canvas<'a> {
    pub(crate) fn new(background: &'a RgbaImage) -> Self {
        let premul = PremulImage::from_rgba8(background);
        let n = premul.data.len();
        Canvas {
            background,
            data: premul.data,
            touched: vec![false; n],
        }
    }

    pub(crate) fn blend(&mut self, patch: &Patch) {
        let width = self.background.width();
        for j in 0..patch.height {
            for i in 0..patch.width {
                let src = patch.get(i, j);
                if src[3] <= 0.0 {
                    continue;
                }
                let k = ((patch.y0 + j) * width + patch.x0 + i) as usize;
                self.data[k] = over(src, self.data[k]);
                self.touched[k] = true;
            }
        }
    }

    pub(crate) fn into_image(self) -> RgbaImage {
        let mut out = self.background.clone();
        for (k, px) in out.pixels_mut().enumerate() {
            if self.touched[k] {
                *px = unpremultiply(self.data[k]);
            }
        }
        out
    }
}

/// Composites the instances over `background` in painter's order.
pub fn composite_frame(
    background: &RgbaImage,
    instances: &[SpriteInstance<'_>],
) -> Result<RgbaImage, CompositeError> {
    let mut canvas = Canvas::new(background);
    let size = background.dimensions();
    for idx in painter_order(instances) {
        let inst = &instances[idx];
        let patch = warp_sprite(inst.sprite, &inst.transform()?, size);
        canvas.blend(&patch);
    }
    Ok(canvas.into_image())
}

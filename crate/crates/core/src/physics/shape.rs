//! Collision shapes derived from sprite alpha masks.

use image::RgbaImage;
use thiserror::Error;

use crate::geometry::{self, Vec2};
use crate::scene::OPAQUE_ALPHA;

/// Upper bound on hull vertex count after simplification.
pub const MAX_HULL_VERTICES: usize = 32;
/// Douglas–Peucker tolerance in pixels.
pub const SIMPLIFY_TOLERANCE: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error("alpha mask has no opaque pixel")]
    EmptyMask,
    #[error("polygon has zero area")]
    DegenerateShape,
}

/// Convex collision shape of a sprite, in sprite pixel coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskShape {
    /// Counter-clockwise convex hull, at least three vertices.
    pub hull: Vec<Vec2>,
    pub area: f64,
    /// Area centroid; the body's centre of mass.
    pub centroid: Vec2,
}

impl MaskShape {
    /// Hull vertices relative to the centroid.
    pub fn local_polygon(&self) -> Vec<Vec2> {
        self.hull.iter().map(|&p| p - self.centroid).collect()
    }
}

/// Convex hull of the opaque pixels (alpha > 127), each pixel taken as its
/// unit square, simplified to at most [`MAX_HULL_VERTICES`] vertices.
pub fn shape_from_mask(mask: &RgbaImage) -> Result<MaskShape, ShapeError> {
    let mut corners = Vec::new();
    for y in 0..mask.height() {
        let row: Vec<u32> = (0..mask.width())
            .filter(|&x| mask.get_pixel(x, y)[3] > OPAQUE_ALPHA)
            .collect();
        // Only the extreme pixels of a row can contribute hull corners.
        if let (Some(&first), Some(&last)) = (row.first(), row.last()) {
            for x in [first, last + 1] {
                corners.push(Vec2::new(x as f64, y as f64));
                corners.push(Vec2::new(x as f64, (y + 1) as f64));
            }
        }
    }
    if corners.is_empty() {
        return Err(ShapeError::EmptyMask);
    }
    let hull = geometry::convex_hull(&corners);
    let mut tolerance = SIMPLIFY_TOLERANCE;
    let mut simplified = geometry::simplify_closed(&hull, tolerance);
    while simplified.len() > MAX_HULL_VERTICES {
        tolerance *= 2.0;
        simplified = geometry::simplify_closed(&hull, tolerance);
    }
    let hull = if simplified.len() >= 3 && geometry::signed_area(&simplified) > 0.0 {
        simplified
    } else {
        hull
    };
    let area = geometry::signed_area(&hull);
    let centroid = geometry::centroid(&hull);
    Ok(MaskShape {
        hull,
        area,
        centroid,
    })
}

/// Moment of inertia (kg·m²) about the centroid of a uniform-density
/// polygon given in pixels.
pub fn inertia_of(polygon: &[Vec2], mass: f64, pixels_per_meter: f64) -> Result<f64, ShapeError> {
    let area = geometry::signed_area(polygon);
    if !(area.abs() > 0.0) || polygon.len() < 3 {
        return Err(ShapeError::DegenerateShape);
    }
    let c = geometry::centroid(polygon);
    let centred: Vec<Vec2> = polygon.iter().map(|&p| p - c).collect();
    let second_moment = geometry::polar_second_moment(&centred);
    // Both the moment and the area flip sign with the winding.
    Ok(mass * (second_moment / area) / (pixels_per_meter * pixels_per_meter))
}

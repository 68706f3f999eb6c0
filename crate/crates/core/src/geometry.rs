//! Planar geometry shared by the physics engine and the renderer.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Scalar z-component of the 3-D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// `s × self` for a scalar angular quantity `s` (perpendicular, scaled).
    pub fn cross_scalar(s: f64, v: Vec2) -> Vec2 {
        Vec2::new(-s * v.y, s * v.x)
    }

    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn length(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn length_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn normalized(self) -> Vec2 {
        let len = self.length();
        Vec2::new(self.x / len, self.y / len)
    }

    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, rhs: Vec2) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn from_points(points: &[Vec2]) -> Aabb {
        let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Aabb { min, max }
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }
}

/// Signed area; positive for counter-clockwise winding.
pub fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += poly[i].cross(poly[(i + 1) % n]);
    }
    acc * 0.5
}

/// Area centroid of a simple polygon with nonzero area.
pub fn centroid(poly: &[Vec2]) -> Vec2 {
    let n = poly.len();
    let mut cx = 0.0;
    let mut cy = 0.0;
    let mut a2 = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let w = p.cross(q);
        a2 += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    Vec2::new(cx / (3.0 * a2), cy / (3.0 * a2))
}

/// Polar second moment of area about the origin (∫ r² dA) of a
/// counter-clockwise polygon.
pub fn polar_second_moment(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let w = p.cross(q);
        acc += w * (p.x * p.x + p.x * q.x + q.x * q.x + p.y * p.y + p.y * q.y + q.y * q.y);
    }
    acc / 12.0
}

/// Convex hull by Andrew's monotone chain. Output is counter-clockwise with
/// collinear points removed, starting from the lowest-x (then lowest-y) point.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Vec2, a: Vec2, b: Vec2| (a - o).cross(b - o);
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn point_line_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let len = d.length();
    if len == 0.0 {
        (p - a).length()
    } else {
        (d.cross(p - a)).abs() / len
    }
}

fn douglas_peucker_open(chain: &[Vec2], tolerance: f64, out: &mut Vec<Vec2>) {
    // Appends the simplified chain minus its final point.
    if chain.len() <= 2 {
        out.push(chain[0]);
        return;
    }
    let first = chain[0];
    let last = chain[chain.len() - 1];
    let (mut far_idx, mut far_dist) = (0, -1.0);
    for (i, &p) in chain.iter().enumerate().take(chain.len() - 1).skip(1) {
        let d = point_line_distance(p, first, last);
        if d > far_dist {
            far_idx = i;
            far_dist = d;
        }
    }
    if far_dist > tolerance {
        douglas_peucker_open(&chain[..=far_idx], tolerance, out);
        douglas_peucker_open(&chain[far_idx..], tolerance, out);
    } else {
        out.push(first);
    }
}

/// Douglas–Peucker simplification of a closed polygon. The ring is split at
/// its first vertex and the vertex farthest from it; each half is simplified
/// independently.
pub fn simplify_closed(poly: &[Vec2], tolerance: f64) -> Vec<Vec2> {
    let n = poly.len();
    if n <= 3 {
        return poly.to_vec();
    }
    let mut split = 0;
    let mut best = -1.0;
    for (i, p) in poly.iter().enumerate().skip(1) {
        let d = (*p - poly[0]).length_squared();
        if d > best {
            best = d;
            split = i;
        }
    }
    let mut out = Vec::new();
    douglas_peucker_open(&poly[..=split], tolerance, &mut out);
    let mut second: Vec<Vec2> = poly[split..].to_vec();
    second.push(poly[0]);
    douglas_peucker_open(&second, tolerance, &mut out);
    out
}

/// Result of a separating-axis query between two convex polygons.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Manifold {
    /// Unit normal pointing from the first polygon towards the second.
    pub normal: Vec2,
    pub penetration: f64,
    pub point: Vec2,
}

fn max_separation(reference: &[Vec2], other: &[Vec2]) -> (usize, f64) {
    let n = reference.len();
    let mut best_edge = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        let v1 = reference[i];
        let v2 = reference[(i + 1) % n];
        let normal = edge_normal(v1, v2);
        let s = other
            .iter()
            .map(|&p| normal.dot(p - v1))
            .fold(f64::INFINITY, f64::min);
        if s > best {
            best = s;
            best_edge = i;
        }
    }
    (best_edge, best)
}

/// Outward normal of the edge v1→v2 of a counter-clockwise polygon.
fn edge_normal(v1: Vec2, v2: Vec2) -> Vec2 {
    let e = v2 - v1;
    Vec2::new(e.y, -e.x).normalized()
}

/// Separating-axis test on two counter-clockwise convex polygons given in
/// world coordinates. Returns `None` when an axis separates them or they
/// merely touch.
pub fn collide_polygons(a: &[Vec2], b: &[Vec2]) -> Option<Manifold> {
    let (edge_a, sep_a) = max_separation(a, b);
    if sep_a >= 0.0 {
        return None;
    }
    let (edge_b, sep_b) = max_separation(b, a);
    if sep_b >= 0.0 {
        return None;
    }
    let (reference, incident, ref_edge, sep, flip) = if sep_b > sep_a {
        (b, a, edge_b, sep_b, true)
    } else {
        (a, b, edge_a, sep_a, false)
    };

    let n_ref = reference.len();
    let r1 = reference[ref_edge];
    let r2 = reference[(ref_edge + 1) % n_ref];
    let ref_normal = edge_normal(r1, r2);

    // Incident edge: the one most anti-parallel to the reference normal.
    let n_inc = incident.len();
    let mut inc_edge = 0;
    let mut min_dot = f64::INFINITY;
    for i in 0..n_inc {
        let d = edge_normal(incident[i], incident[(i + 1) % n_inc]).dot(ref_normal);
        if d < min_dot {
            min_dot = d;
            inc_edge = i;
        }
    }
    let mut segment = [incident[inc_edge], incident[(inc_edge + 1) % n_inc]];

    let tangent = (r2 - r1).normalized();
    let clip = |seg: [Vec2; 2], dir: Vec2, offset: f64| -> Option<[Vec2; 2]> {
        // Keep the part of the segment with dir·p <= offset.
        let d0 = dir.dot(seg[0]) - offset;
        let d1 = dir.dot(seg[1]) - offset;
        match (d0 <= 0.0, d1 <= 0.0) {
            (true, true) => Some(seg),
            (false, false) => None,
            _ => {
                let t = d0 / (d0 - d1);
                let cut = seg[0] + (seg[1] - seg[0]) * t;
                if d0 <= 0.0 {
                    Some([seg[0], cut])
                } else {
                    Some([cut, seg[1]])
                }
            }
        }
    };

    let mut point = None;
    if let Some(s) = clip(segment, -tangent, -tangent.dot(r1)) {
        if let Some(s) = clip(s, tangent, tangent.dot(r2)) {
            segment = s;
            let mut sum = Vec2::ZERO;
            let mut count = 0.0;
            for p in segment {
                let depth = ref_normal.dot(p - r1);
                if depth <= 0.0 {
                    // Midway between the two surfaces.
                    sum += p - ref_normal * (depth * 0.5);
                    count += 1.0;
                }
            }
            if count > 0.0 {
                point = Some(sum * (1.0 / count));
            }
        }
    }
    // Fall back to the deepest incident vertex when clipping degenerates.
    let point = point.unwrap_or_else(|| {
        let deepest = incident
            .iter()
            .copied()
            .min_by(|p, q| ref_normal.dot(*p - r1).total_cmp(&ref_normal.dot(*q - r1)))
            .expect("nonempty polygon");
        deepest - ref_normal * (ref_normal.dot(deepest - r1) * 0.5)
    });

    let normal = if flip { -ref_normal } else { ref_normal };
    Some(Manifold {
        normal,
        penetration: -sep,
        point,
    })
}

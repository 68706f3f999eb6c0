//! Layer-local contact detection and sequential-impulse response.
//!
//! Impulses act in the image plane only; depth velocity is never touched.

use crate::geometry::{collide_polygons, Aabb, Vec2};

use super::body::RigidBody;

/// Fraction of penetration (beyond the slop) removed per step.
pub const BAUMGARTE: f64 = 0.2;
/// Penetration in pixels tolerated without positional correction.
pub const PENETRATION_SLOP: f64 = 0.1;
pub const SOLVER_ITERATIONS: usize = 4;

/// A contact between bodies `a` and `b` (indices into the caller's body
/// slice); the normal points from `a` to `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact {
    pub a: usize,
    pub b: usize,
    pub point: Vec2,
    pub normal: Vec2,
    pub penetration: f64,
}

/// Contacts found in one layer plus the number of narrow-phase tests run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Detection {
    pub contacts: Vec<Contact>,
    pub narrow_phase_tests: usize,
}

/// Finds contacts among `members` (indices into `bodies`), all of which the
/// caller guarantees share one layer.
///
/// Broad phase sweeps AABBs sorted by min-x with body id as tie-break; the
/// surviving pairs are tested in (id, id) order with SAT. Pairs of static
/// bodies are skipped.
pub fn detect_collisions(bodies: &[RigidBody], members: &[usize]) -> Detection {
    let polygons: Vec<(usize, Vec<Vec2>, Aabb)> = members
        .iter()
        .map(|&i| {
            let poly = bodies[i].world_polygon();
            let aabb = Aabb::from_points(&poly);
            (i, poly, aabb)
        })
        .collect();
    let mut order: Vec<usize> = (0..polygons.len()).collect();
    order.sort_by(|&p, &q| {
        polygons[p]
            .2
            .min
            .x
            .total_cmp(&polygons[q].2.min.x)
            .then_with(|| bodies[polygons[p].0].id.cmp(&bodies[polygons[q].0].id))
    });

    let mut pairs = Vec::new();
    for (k, &p) in order.iter().enumerate() {
        let box_p = polygons[p].2;
        for &q in &order[k + 1..] {
            let box_q = polygons[q].2;
            if box_q.min.x > box_p.max.x {
                break;
            }
            if !box_p.overlaps(&box_q) {
                continue;
            }
            let (bp, bq) = (&bodies[polygons[p].0], &bodies[polygons[q].0]);
            if bp.is_static && bq.is_static {
                continue;
            }
            if bp.id < bq.id {
                pairs.push((p, q));
            } else {
                pairs.push((q, p));
            }
        }
    }
    pairs.sort_by(|&(a1, b1), &(a2, b2)| {
        let id = |k: usize| &bodies[polygons[k].0].id;
        id(a1).cmp(id(a2)).then_with(|| id(b1).cmp(id(b2)))
    });

    let mut detection = Detection::default();
    for (p, q) in pairs {
        detection.narrow_phase_tests += 1;
        if let Some(m) = collide_polygons(&polygons[p].1, &polygons[q].1) {
            detection.contacts.push(Contact {
                a: polygons[p].0,
                b: polygons[q].0,
                point: m.point,
                normal: m.normal,
                penetration: m.penetration,
            });
        }
    }
    detection
}

/// Precomputed solver data for one contact.
#[derive(Clone, Copy, Debug)]
struct Constraint {
    contact: Contact,
    tangent: Vec2,
    normal_mass: f64,
    tangent_mass: f64,
    target_normal_velocity: f64,
    friction: f64,
    normal_impulse: f64,
    tangent_impulse: f64,
}

fn effective_mass(a: &RigidBody, b: &RigidBody, point: Vec2, dir: Vec2) -> f64 {
    let ra = point - a.state.position();
    let rb = point - b.state.position();
    let rna = ra.cross(dir);
    let rnb = rb.cross(dir);
    let k = a.inv_mass()
        + b.inv_mass()
        + rna * rna * a.inv_inertia_px()
        + rnb * rnb * b.inv_inertia_px();
    if k > 0.0 {
        1.0 / k
    } else {
        0.0
    }
}

fn relative_velocity(a: &RigidBody, b: &RigidBody, point: Vec2) -> Vec2 {
    b.point_velocity(point) - a.point_velocity(point)
}

fn prepare(a: &RigidBody, b: &RigidBody, contact: Contact) -> Constraint {
    let n = contact.normal;
    let tangent = n.perp();
    let vn = relative_velocity(a, b, contact.point).dot(n);
    let restitution = a.elasticity.max(b.elasticity);
    Constraint {
        contact,
        tangent,
        normal_mass: effective_mass(a, b, contact.point, n),
        tangent_mass: effective_mass(a, b, contact.point, tangent),
        target_normal_velocity: if vn < 0.0 { -restitution * vn } else { 0.0 },
        friction: (a.friction * b.friction).sqrt(),
        normal_impulse: 0.0,
        tangent_impulse: 0.0,
    }
}

fn pair_mut(bodies: &mut [RigidBody], i: usize, j: usize) -> (&mut RigidBody, &mut RigidBody) {
    assert_ne!(i, j, "a body cannot collide with itself");
    if i < j {
        let (lo, hi) = bodies.split_at_mut(j);
        (&mut lo[i], &mut hi[0])
    } else {
        let (lo, hi) = bodies.split_at_mut(i);
        (&mut hi[0], &mut lo[j])
    }
}

fn iterate(a: &mut RigidBody, b: &mut RigidBody, c: &mut Constraint) {
    let p = c.contact.point;
    let n = c.contact.normal;

    let vn = relative_velocity(a, b, p).dot(n);
    let delta = -(vn - c.target_normal_velocity) * c.normal_mass;
    let accumulated = (c.normal_impulse + delta).max(0.0);
    let applied = accumulated - c.normal_impulse;
    c.normal_impulse = accumulated;
    a.apply_impulse(-(n * applied), p);
    b.apply_impulse(n * applied, p);

    let vt = relative_velocity(a, b, p).dot(c.tangent);
    let limit = c.friction * c.normal_impulse;
    let delta = -vt * c.tangent_mass;
    let accumulated = (c.tangent_impulse + delta).clamp(-limit, limit);
    let applied = accumulated - c.tangent_impulse;
    c.tangent_impulse = accumulated;
    a.apply_impulse(-(c.tangent * applied), p);
    b.apply_impulse(c.tangent * applied, p);
}

fn correct_positions(a: &mut RigidBody, b: &mut RigidBody, contact: &Contact) {
    let inv_sum = a.inv_mass() + b.inv_mass();
    if inv_sum == 0.0 {
        return;
    }
    let magnitude = (contact.penetration - PENETRATION_SLOP).max(0.0) * BAUMGARTE / inv_sum;
    if magnitude == 0.0 {
        return;
    }
    let shift = contact.normal * magnitude;
    if !a.is_static {
        let p = a.state.position() - shift * a.inv_mass();
        a.state.set_position(p);
    }
    if !b.is_static {
        let p = b.state.position() + shift * b.inv_mass();
        b.state.set_position(p);
    }
}

/// Resolves a set of contacts with sequential impulses: `iterations` passes
/// over all contacts in order, then one positional-correction pass.
///
/// Normal impulses target a post-collision normal velocity of
/// `-e · v_n` with `e = max(e_a, e_b)`; friction impulses are clamped to the
/// Coulomb cone with `μ = sqrt(μ_a μ_b)`.
pub fn solve_contacts(bodies: &mut [RigidBody], contacts: &[Contact], iterations: usize) {
    let mut constraints: Vec<Constraint> = contacts
        .iter()
        .map(|&c| prepare(&bodies[c.a], &bodies[c.b], c))
        .collect();
    for _ in 0..iterations {
        for c in &mut constraints {
            let (a, b) = pair_mut(bodies, c.contact.a, c.contact.b);
            iterate(a, b, c);
        }
    }
    for c in &constraints {
        let (a, b) = pair_mut(bodies, c.contact.a, c.contact.b);
        correct_positions(a, b, &c.contact);
    }
}

/// Resolves a single contact between two bodies.
pub fn resolve_collision(a: &mut RigidBody, b: &mut RigidBody, contact: &Contact) {
    let mut c = prepare(a, b, *contact);
    for _ in 0..SOLVER_ITERATIONS {
        iterate(a, b, &mut c);
    }
    correct_positions(a, b, contact);
}

//! Augmented 2.5D rigid-body engine.
//!
//! Each body carries planar pose and velocity plus a depth displacement and
//! depth velocity. Stepping is semi-implicit Euler at a fixed timestep:
//!
//! ```text
//! v ← v + (F / M) Δt      ω ← ω + (τ / I) Δt
//! t ← t + v Δt            θ ← θ + ω Δt
//! ```
//!
//! Planar forces are gravity and scheduled pushes; along depth a linear drag
//! `F_z = -c_d M v_z` keeps motion smooth. Collisions are detected and
//! resolved only between bodies that share a depth layer.

mod body;
mod collision;
mod shape;
mod trajectory;
mod world;

pub use body::{normalize_angle, BodyState, RigidBody};
pub use collision::{
    detect_collisions, resolve_collision, solve_contacts, Contact, Detection, BAUMGARTE,
    PENETRATION_SLOP, SOLVER_ITERATIONS,
};
pub use shape::{inertia_of, shape_from_mask, MaskShape, ShapeError, MAX_HULL_VERTICES};
pub use trajectory::{BodyRecord, StepRecord, Trajectory};
pub use world::{
    simulate, simulate_with, ContactReport, PhysicsError, SimulationError, StepReport, World,
    WorldConfig, DEPTH_DRAG,
};

//! Depth-layered 2.5D rigid-body animation.
//!
//! A static [`Scene`] plus an [`InstructionProgram`] is simulated into an
//! immutable [`Trajectory`]: planar rigid-body dynamics with an extra depth
//! axis, collisions resolved only between bodies sharing a depth layer.
//! Trajectories are rendered by warping each body's sprite with its
//! simulated pose, scaling it by perspective, compositing far-to-near over
//! the background and optionally relighting it with a directional light.

pub mod compositor;
pub mod geometry;
pub mod hash;
pub mod instruction;
pub mod layers;
pub mod perspective;
pub mod physics;
pub mod relight;
pub mod render;
pub mod scene;

pub use compositor::{composite_frame, sample_frames, warp_sprite, AffineTransform, Frame};
pub use render::{RenderError, Renderer};
pub use instruction::{
    apply_instructions, format_program, parse_program, Command, ForceSchedule, InstructionProgram,
};
pub use layers::{assign_layer, compute_layer_count, partition_depths, LayerSet};
pub use perspective::{scale_factor, ScaleModel};
pub use physics::{simulate, BodyState, Trajectory, World};
pub use relight::{shade, ShadingInputs};
pub use scene::{load_scene, save_scene, validate_scene, BodySpec, Scene};

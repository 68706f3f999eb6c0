#![allow(dead_code)]

use image::{Rgba, RgbaImage};
use physlayer::scene::{Camera, DirectionalLight, ImageAsset, SceneError, SimConfig};
use physlayer::{BodySpec, Scene};

pub fn solid(w: u32, h: u32, rgba: [u8; 4]) -> RgbaImage {
    RgbaImage::from_pixel(w, h, Rgba(rgba))
}

pub fn disc(r: u32, rgba: [u8; 4]) -> RgbaImage {
    let size = 2 * r;
    RgbaImage::from_fn(size, size, |x, y| {
        let dx = x as f64 + 0.5 - r as f64;
        let dy = y as f64 + 0.5 - r as f64;
        if dx * dx + dy * dy <= (r * r) as f64 {
            Rgba(rgba)
        } else {
            Rgba([0, 0, 0, 0])
        }
    })
}

pub fn body(id: &str, sprite: RgbaImage, position: [f64; 2], depth: f64) -> BodySpec {
    BodySpec {
        id: id.to_string(),
        sprite: ImageAsset::new(format!("{id}.png"), sprite),
        position,
        depth,
        rotation: 0.0,
        mass: 1.0,
        friction: 0.5,
        elasticity: 0.5,
        initial_velocity: [0.0; 3],
        initial_angular_velocity: 0.0,
        is_static: false,
        albedo: None,
        normals: None,
    }
}

/// Zero-gravity scene on a black opaque background.
pub fn scene(bodies: Vec<BodySpec>, size: u32) -> Scene {
    Scene {
        background: ImageAsset::new("background.png", solid(size, size, [0, 0, 0, 255])),
        camera: Camera {
            focal_length: 500.0,
            reference_depth: 0.0,
        },
        light: DirectionalLight {
            direction: [0.0, 0.0, 1.0],
            intensity: 1.0,
            ambient: 0.0,
            attenuation: 0.0,
        },
        gravity: [0.0, 0.0],
        pixels_per_meter: 100.0,
        bodies,
        sim: SimConfig {
            width: size,
            height: size,
            ..SimConfig::default()
        },
    }
}

pub fn no_sprites(path: &str) -> Result<RgbaImage, SceneError> {
    Err(SceneError::Invalid(format!("no sprite source for {path}")))
}

//! Static scene description, its JSON file format and physical-property
//! validation.
//!
//! A scene file is a single JSON document whose image assets are PNG files
//! referenced by paths relative to the document. Loading resolves every
//! asset into memory; the resulting [`Scene`] is immutable.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Component, Path, PathBuf};

use image::RgbaImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::ContentHasher;

/// Allowed mass range in kilograms.
pub const MASS_RANGE: (f64, f64) = (0.1, 10.0);
/// Allowed friction coefficient range.
pub const FRICTION_RANGE: (f64, f64) = (0.1, 1.0);
/// Allowed elasticity (restitution) range.
pub const ELASTICITY_RANGE: (f64, f64) = (0.1, 0.9);

/// Alpha strictly above this value counts as opaque.
pub const OPAQUE_ALPHA: u8 = 127;

pub const DEFAULT_STEPS: usize = 160;
pub const DEFAULT_HZ: f64 = 30.0;
pub const DEFAULT_FRAMES: usize = 16;
pub const DEFAULT_FRAME_SIZE: u32 = 512;
pub const DEFAULT_FRICTION: f64 = 0.5;
pub const DEFAULT_ELASTICITY: f64 = 0.5;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("missing field `{field}` in {object}")]
    MissingField { field: String, object: String },
    #[error("asset not found: {}", .0.display())]
    AssetNotFound(PathBuf),
    #[error("malformed image {}: {reason}", .path.display())]
    MalformedImage { path: PathBuf, reason: String },
    #[error("duplicate body id `{0}`")]
    DuplicateBodyId(String),
    #[error("cannot access {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scene document: {0}")]
    Syntax(String),
    #[error("invalid scene: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, SceneError>;

/// A decoded image together with the relative path it was loaded from.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageAsset {
    pub path: String,
    pub image: RgbaImage,
}

impl ImageAsset {
    pub fn new(path: impl Into<String>, image: RgbaImage) -> Self {
        ImageAsset {
            path: path.into(),
            image,
        }
    }

    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    /// Effective focal length in pixels.
    pub focal_length: f64,
    /// Depth (m) recorded as the reference plane for sprite sizes.
    pub reference_depth: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionalLight {
    /// Unit vector from the surface towards the light.
    pub direction: [f64; 3],
    pub intensity: f64,
    pub ambient: f64,
    /// Reciprocal depth attenuation coefficient β (1/m). Zero disables it.
    pub attenuation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub steps: usize,
    pub hz: f64,
    pub frames: usize,
    pub layer_count_override: Option<usize>,
    pub width: u32,
    pub height: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            steps: DEFAULT_STEPS,
            hz: DEFAULT_HZ,
            frames: DEFAULT_FRAMES,
            layer_count_override: None,
            width: DEFAULT_FRAME_SIZE,
            height: DEFAULT_FRAME_SIZE,
        }
    }
}

impl SimConfig {
    pub fn dt(&self) -> f64 {
        1.0 / self.hz
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BodySpec {
    pub id: String,
    pub sprite: ImageAsset,
    /// Frame position (px) of the sprite's mask centroid.
    pub position: [f64; 2],
    /// Initial absolute depth (m).
    pub depth: f64,
    pub rotation: f64,
    pub mass: f64,
    pub friction: f64,
    pub elasticity: f64,
    /// (v_x, v_y) in px/s, v_z in m/s.
    pub initial_velocity: [f64; 3],
    pub initial_angular_velocity: f64,
    pub is_static: bool,
    pub albedo: Option<ImageAsset>,
    pub normals: Option<ImageAsset>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub background: ImageAsset,
    pub camera: Camera,
    pub light: DirectionalLight,
    /// Image-plane gravity in m/s².
    pub gravity: [f64; 2],
    pub pixels_per_meter: f64,
    pub bodies: Vec<BodySpec>,
    pub sim: SimConfig,
}

impl Scene {
    pub fn body(&self, id: &str) -> Option<&BodySpec> {
        self.bodies.iter().find(|b| b.id == id)
    }

    /// Stable digest of the scene document and every decoded asset.
    pub fn content_hash(&self) -> String {
        let mut hasher = ContentHasher::new();
        let doc = serde_json::to_vec(&self.to_file()).expect("scene document serializes");
        hasher.field(&doc);
        let mut hash_asset = |asset: &ImageAsset| {
            hasher
                .field(asset.path.as_bytes())
                .field(&asset.width().to_le_bytes())
                .field(&asset.height().to_le_bytes())
                .field(asset.image.as_raw());
        };
        hash_asset(&self.background);
        for body in &self.bodies {
            hash_asset(&body.sprite);
            if let Some(a) = &body.albedo {
                hash_asset(a);
            }
            if let Some(n) = &body.normals {
                hash_asset(n);
            }
        }
        hasher.finish_hex()
    }

    fn to_file(&self) -> SceneFile {
        SceneFile {
            background: Some(self.background.path.clone()),
            camera: Some(CameraFile {
                focal_length: Some(self.camera.focal_length),
                reference_depth: Some(self.camera.reference_depth),
            }),
            light: Some(LightFile {
                direction: Some(self.light.direction),
                intensity: Some(self.light.intensity),
                ambient: Some(self.light.ambient),
                attenuation: Some(self.light.attenuation),
            }),
            gravity: Some(self.gravity),
            pixels_per_meter: Some(self.pixels_per_meter),
            bodies: Some(self.bodies.iter().map(BodyFile::from_spec).collect()),
            sim: Some(SimFile {
                steps: Some(self.sim.steps),
                hz: Some(self.sim.hz),
                frames: Some(self.sim.frames),
                layer_count_override: self.sim.layer_count_override,
                width: Some(self.sim.width),
                height: Some(self.sim.height),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// On-disk schema. Every field is optional here so that absent required
// fields surface as `MissingField` naming the object, not a serde message.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    background: Option<String>,
    camera: Option<CameraFile>,
    light: Option<LightFile>,
    gravity: Option<[f64; 2]>,
    pixels_per_meter: Option<f64>,
    bodies: Option<Vec<BodyFile>>,
    sim: Option<SimFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraFile {
    focal_length: Option<f64>,
    reference_depth: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LightFile {
    direction: Option<[f64; 3]>,
    intensity: Option<f64>,
    ambient: Option<f64>,
    attenuation: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimFile {
    steps: Option<usize>,
    hz: Option<f64>,
    frames: Option<usize>,
    layer_count_override: Option<usize>,
    width: Option<u32>,
    height: Option<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BodyFile {
    id: Option<String>,
    sprite: Option<String>,
    position: Option<[f64; 2]>,
    depth: Option<f64>,
    rotation: Option<f64>,
    mass: Option<f64>,
    friction: Option<f64>,
    elasticity: Option<f64>,
    initial_velocity: Option<[f64; 3]>,
    initial_angular_velocity: Option<f64>,
    is_static: Option<bool>,
    albedo: Option<String>,
    normals: Option<String>,
}

impl BodyFile {
    fn from_spec(b: &BodySpec) -> BodyFile {
        BodyFile {
            id: Some(b.id.clone()),
            sprite: Some(b.sprite.path.clone()),
            position: Some(b.position),
            depth: Some(b.depth),
            rotation: Some(b.rotation),
            mass: Some(b.mass),
            friction: Some(b.friction),
            elasticity: Some(b.elasticity),
            initial_velocity: Some(b.initial_velocity),
            initial_angular_velocity: Some(b.initial_angular_velocity),
            is_static: Some(b.is_static),
            albedo: b.albedo.as_ref().map(|a| a.path.clone()),
            normals: b.normals.as_ref().map(|a| a.path.clone()),
        }
    }
}

fn require<T>(value: Option<T>, field: &str, object: &str) -> Result<T> {
    value.ok_or_else(|| SceneError::MissingField {
        field: field.to_string(),
        object: object.to_string(),
    })
}

/// Decodes a PNG from disk into RGBA8.
pub fn load_image(path: &Path) -> Result<RgbaImage> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(SceneError::AssetNotFound(path.to_path_buf()))
        }
        Err(source) => {
            return Err(SceneError::Io {
                path: path.to_path_buf(),
                source,
            })
        }
    };
    image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map(|img| img.to_rgba8())
        .map_err(|e| SceneError::MalformedImage {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}

fn load_asset(base: &Path, rel: &str) -> Result<ImageAsset> {
    Ok(ImageAsset::new(rel, load_image(&base.join(rel))?))
}

/// Reads a scene document and every asset it references.
pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    scene_from_str(&text, base)
}

/// Parses a scene document, resolving assets relative to `base`.
pub fn scene_from_str(text: &str, base: &Path) -> Result<Scene> {
    let file: SceneFile =
        serde_json::from_str(text).map_err(|e| SceneError::Syntax(e.to_string()))?;

    let body_files = file.bodies.unwrap_or_default();
    let mut seen = HashSet::new();
    for (i, b) in body_files.iter().enumerate() {
        let id = require(b.id.as_ref(), "id", &format!("bodies[{i}]"))?;
        if !seen.insert(id.clone()) {
            return Err(SceneError::DuplicateBodyId(id.clone()));
        }
    }

    let camera_file = require(file.camera, "camera", "scene")?;
    let camera = Camera {
        focal_length: require(camera_file.focal_length, "focal_length", "camera")?,
        reference_depth: camera_file.reference_depth.unwrap_or(0.0),
    };
    let light_file = require(file.light, "light", "scene")?;
    let light = DirectionalLight {
        direction: require(light_file.direction, "direction", "light")?,
        intensity: light_file.intensity.unwrap_or(1.0),
        ambient: light_file.ambient.unwrap_or(0.0),
        attenuation: light_file.attenuation.unwrap_or(0.0),
    };
    let gravity = require(file.gravity, "gravity", "scene")?;
    let pixels_per_meter = require(file.pixels_per_meter, "pixels_per_meter", "scene")?;
    let defaults = SimConfig::default();
    let sim = match file.sim {
        None => defaults,
        Some(s) => SimConfig {
            steps: s.steps.unwrap_or(defaults.steps),
            hz: s.hz.unwrap_or(defaults.hz),
            frames: s.frames.unwrap_or(defaults.frames),
            layer_count_override: s.layer_count_override,
            width: s.width.unwrap_or(defaults.width),
            height: s.height.unwrap_or(defaults.height),
        },
    };
    let background = load_asset(base, &require(file.background, "background", "scene")?)?;

    let mut bodies = Vec::with_capacity(body_files.len());
    for b in body_files {
        let id = b.id.expect("checked above");
        let object = format!("body `{id}`");
        let sprite = load_asset(base, &require(b.sprite, "sprite", &object)?)?;
        let albedo = b.albedo.map(|p| load_asset(base, &p)).transpose()?;
        let normals = b.normals.map(|p| load_asset(base, &p)).transpose()?;
        bodies.push(BodySpec {
            position: require(b.position, "position", &object)?,
            depth: require(b.depth, "depth", &object)?,
            mass: require(b.mass, "mass", &object)?,
            rotation: b.rotation.unwrap_or(0.0),
            friction: b.friction.unwrap_or(DEFAULT_FRICTION),
            elasticity: b.elasticity.unwrap_or(DEFAULT_ELASTICITY),
            initial_velocity: b.initial_velocity.unwrap_or([0.0; 3]),
            initial_angular_velocity: b.initial_angular_velocity.unwrap_or(0.0),
            is_static: b.is_static.unwrap_or(false),
            id,
            sprite,
            albedo,
            normals,
        });
    }

    let scene = Scene {
        background,
        camera,
        light,
        gravity,
        pixels_per_meter,
        bodies,
        sim,
    };
    check_structure(&scene)?;
    Ok(scene)
}

/// Structural invariants that make a scene unusable when broken. Physical
/// property ranges are not checked here; see [`validate_scene`].
pub fn check_structure(scene: &Scene) -> Result<()> {
    let invalid = |msg: String| Err(SceneError::Invalid(msg));
    if !(scene.pixels_per_meter > 0.0) {
        return invalid(format!(
            "pixels_per_meter must be positive, got {}",
            scene.pixels_per_meter
        ));
    }
    if !(scene.camera.focal_length > 0.0) {
        return invalid(format!(
            "camera focal_length must be positive, got {}",
            scene.camera.focal_length
        ));
    }
    let [lx, ly, lz] = scene.light.direction;
    let norm = (lx * lx + ly * ly + lz * lz).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return invalid(format!("light direction must be unit length, |l| = {norm}"));
    }
    if !(scene.light.intensity >= 0.0) {
        return invalid("light intensity must be non-negative".into());
    }
    if !(0.0..=1.0).contains(&scene.light.ambient) {
        return invalid("light ambient must lie in [0, 1]".into());
    }
    if !(scene.light.attenuation >= 0.0) {
        return invalid("light attenuation must be non-negative".into());
    }
    let sim = &scene.sim;
    if !(sim.hz > 0.0) {
        return invalid(format!("sim hz must be positive, got {}", sim.hz));
    }
    if sim.frames < 1 || sim.steps < sim.frames {
        return invalid(format!(
            "sim requires steps >= frames >= 1, got steps={} frames={}",
            sim.steps, sim.frames
        ));
    }
    if scene.background.width() != sim.width || scene.background.height() != sim.height {
        return invalid(format!(
            "background is {}x{} but frames are {}x{}",
            scene.background.width(),
            scene.background.height(),
            sim.width,
            sim.height
        ));
    }
    let mut seen = HashSet::new();
    for body in &scene.bodies {
        if !seen.insert(body.id.as_str()) {
            return Err(SceneError::DuplicateBodyId(body.id.clone()));
        }
        check_body(body)?;
    }
    Ok(())
}

pub(crate) fn check_body(body: &BodySpec) -> Result<()> {
    let invalid = |msg: String| Err(SceneError::Invalid(msg));
    if !body.is_static && !(body.mass > 0.0) {
        return invalid(format!("body `{}` must have positive mass", body.id));
    }
    if !body.sprite.image.pixels().any(|p| p[3] > OPAQUE_ALPHA) {
        return invalid(format!("body `{}` sprite has no opaque pixel", body.id));
    }
    let dims = body.sprite.image.dimensions();
    for (name, aux) in [("albedo", &body.albedo), ("normals", &body.normals)] {
        if let Some(a) = aux {
            if a.image.dimensions() != dims {
                return invalid(format!(
                    "body `{}` {name} map is {:?}, sprite is {:?}",
                    body.id,
                    a.image.dimensions(),
                    dims
                ));
            }
        }
    }
    Ok(())
}

fn check_relative(rel: &str) -> Result<()> {
    let path = Path::new(rel);
    let ok = path
        .components()
        .all(|c| matches!(c, Component::Normal(_) | Component::CurDir));
    if ok {
        Ok(())
    } else {
        Err(SceneError::Invalid(format!(
            "asset path `{rel}` must be relative and stay inside the scene directory"
        )))
    }
}

fn save_asset(dir: &Path, asset: &ImageAsset) -> Result<()> {
    check_relative(&asset.path)?;
    let target = dir.join(&asset.path);
    if let Some(parent) = target.parent() {
        fs::create_dir_all(parent).map_err(|source| SceneError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    asset
        .image
        .save_with_format(&target, image::ImageFormat::Png)
        .map_err(|e| SceneError::MalformedImage {
            path: target.clone(),
            reason: e.to_string(),
        })
}

/// Writes `scene.json` and every asset (as PNG, at its relative path) into
/// `dir`. Returns the path of the scene document.
pub fn save_scene(scene: &Scene, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| SceneError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    save_asset(dir, &scene.background)?;
    for body in &scene.bodies {
        save_asset(dir, &body.sprite)?;
        for aux in [&body.albedo, &body.normals].into_iter().flatten() {
            save_asset(dir, aux)?;
        }
    }
    let doc = serde_json::to_string_pretty(&scene.to_file()).expect("scene serializes");
    let path = dir.join("scene.json");
    fs::write(&path, doc + "\n").map_err(|source| SceneError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// Physical-property validation

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub body: String,
    pub field: String,
    pub value: f64,
    pub min: f64,
    pub max: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "violation body={} field={} value={} min={} max={}",
            self.body, self.field, self.value, self.min, self.max
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ValidationOutcome {
    /// Strict mode: every out-of-range property. Empty means valid.
    Violations(Vec<Violation>),
    /// Clamp mode: the corrected scene plus one warning per clamped value.
    Clamped {
        scene: Scene,
        warnings: Vec<Violation>,
    },
}

impl ValidationOutcome {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ValidationOutcome::Violations(v) => v,
            ValidationOutcome::Clamped { warnings, .. } => warnings,
        }
    }
}

fn body_fields(body: &mut BodySpec) -> Vec<(&'static str, &mut f64, (f64, f64))> {
    let mut fields = Vec::with_capacity(3);
    // Static bodies never integrate, so their mass is irrelevant.
    if !body.is_static {
        fields.push(("mass", &mut body.mass, MASS_RANGE));
    }
    fields.push(("friction", &mut body.friction, FRICTION_RANGE));
    fields.push(("elasticity", &mut body.elasticity, ELASTICITY_RANGE));
    fields
}

/// Range violations of a single body, optionally clamping them in place.
pub fn check_body_ranges(body: &mut BodySpec, clamp: bool) -> Vec<Violation> {
    let id = body.id.clone();
    let mut out = Vec::new();
    for (field, value, (min, max)) in body_fields(body) {
        if !(*value >= min && *value <= max) {
            out.push(Violation {
                body: id.clone(),
                field: field.to_string(),
                value: *value,
                min,
                max,
            });
            if clamp {
                *value = if *value > max { max } else { min };
            }
        }
    }
    out
}

/// Checks every body's mass, friction and elasticity against the allowed
/// ranges. With `clamp` set, offending values are moved to the nearest range
/// boundary and reported as warnings.
pub fn validate_scene(scene: &Scene, clamp: bool) -> ValidationOutcome {
    let mut copy = scene.clone();
    let mut found = Vec::new();
    for body in &mut copy.bodies {
        found.extend(check_body_ranges(body, clamp));
    }
    if clamp {
        ValidationOutcome::Clamped {
            scene: copy,
            warnings: found,
        }
    } else {
        ValidationOutcome::Violations(found)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgba;
    use tempfile::TempDir;

    fn write_png(dir: &Path, name: &str, w: u32, h: u32, px: [u8; 4]) {
        RgbaImage::from_pixel(w, h, Rgba(px))
            .save(dir.join(name))
            .unwrap();
    }

    fn fixture(doc: &str) -> (TempDir, PathBuf) {
        let dir = TempDir::new().unwrap();
        write_png(dir.path(), "bg.png", 64, 64, [10, 20, 30, 255]);
        write_png(dir.path(), "ball.png", 8, 8, [200, 0, 0, 255]);
        let path = dir.path().join("scene.json");
        fs::write(&path, doc).unwrap();
        (dir, path)
    }

    const HEADER: &str = r#""background": "bg.png",
        "camera": {"focal_length": 500.0, "reference_depth": 2.0},
        "light": {"direction": [0.0, 0.0, 1.0], "intensity": 1.0, "ambient": 0.2},
        "gravity": [0.0, 9.81],
        "pixels_per_meter": 100.0,
        "sim": {"width": 64, "height": 64}"#;

    fn ball(id: &str, mass: f64) -> String {
        format!(
            r#"{{"id": "{id}", "sprite": "ball.png", "position": [10, 10], "depth": 1.0, "mass": {mass}}}"#
        )
    }

    #[test]
    fn empty_body_list_loads() {
        let (_d, path) = fixture(&format!("{{{HEADER}, \"bodies\": []}}"));
        let scene = load_scene(&path).unwrap();
        assert!(scene.bodies.is_empty());
        assert_eq!(scene.background.width(), 64);
    }

    #[test]
    fn omitted_sim_block_uses_defaults() {
        let dir = TempDir::new().unwrap();
        write_png(dir.path(), "bg.png", 512, 512, [0, 0, 0, 255]);
        let doc = r#"{"background": "bg.png",
            "camera": {"focal_length": 500.0},
            "light": {"direction": [0.0, 0.0, 1.0]},
            "gravity": [0.0, 9.81], "pixels_per_meter": 100.0}"#;
        let scene = scene_from_str(doc, dir.path()).unwrap();
        assert_eq!(scene.sim.steps, 160);
        assert_eq!(scene.sim.hz, 30.0);
        assert_eq!(scene.sim.frames, 16);
        assert_eq!((scene.sim.width, scene.sim.height), (512, 512));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let doc = format!("{{{HEADER}, \"bodies\": [{}, {}]}}", ball("ball", 1.0), ball("ball", 2.0));
        let (_d, path) = fixture(&doc);
        match load_scene(&path) {
            Err(SceneError::DuplicateBodyId(id)) => assert_eq!(id, "ball"),
            other => panic!("expected DuplicateBodyId, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_names_field_and_object() {
        let doc = format!(
            r#"{{{HEADER}, "bodies": [{{"id": "cup", "sprite": "ball.png", "position": [1, 1], "mass": 1}}]}}"#
        );
        let (_d, path) = fixture(&doc);
        match load_scene(&path) {
            Err(SceneError::MissingField { field, object }) => {
                assert_eq!(field, "depth");
                assert!(object.contains("cup"));
            }
            other => panic!("expected MissingField, got {other:?}"),
        }
    }

    #[test]
    fn missing_and_malformed_assets() {
        let doc = format!(
            r#"{{{HEADER}, "bodies": [{{"id": "a", "sprite": "nope.png", "position": [1, 1], "depth": 1, "mass": 1}}]}}"#
        );
        let (dir, path) = fixture(&doc);
        assert!(matches!(load_scene(&path), Err(SceneError::AssetNotFound(_))));
        fs::write(dir.path().join("nope.png"), b"not a png").unwrap();
        assert!(matches!(
            load_scene(&path),
            Err(SceneError::MalformedImage { .. })
        ));
    }

    #[test]
    fn background_must_match_frame_size() {
        let doc = HEADER.replace("\"width\": 64", "\"width\": 32");
        let (_d, path) = fixture(&format!("{{{doc}}}"));
        assert!(matches!(load_scene(&path), Err(SceneError::Invalid(_))));
    }

    #[test]
    fn save_and_reload_is_structurally_equal() {
        let doc = format!("{{{HEADER}, \"bodies\": [{}]}}", ball("ball", 1.5));
        let (_d, path) = fixture(&doc);
        let scene = load_scene(&path).unwrap();
        let out = TempDir::new().unwrap();
        let saved = save_scene(&scene, out.path()).unwrap();
        let again = load_scene(saved).unwrap();
        assert_eq!(scene, again);
        assert_eq!(scene.content_hash(), again.content_hash());
    }

    fn scene_with(mass: f64, friction: f64, elasticity: f64) -> Scene {
        let doc = format!("{{{HEADER}, \"bodies\": [{}]}}", ball("ball", 1.0));
        let (_d, path) = fixture(&doc);
        let mut scene = load_scene(&path).unwrap();
        scene.bodies[0].mass = mass;
        scene.bodies[0].friction = friction;
        scene.bodies[0].elasticity = elasticity;
        scene
    }

    #[test]
    fn low_mass_is_a_violation() {
        let scene = scene_with(0.05, 0.5, 0.5);
        let v = validate_scene(&scene, false);
        assert_eq!(
            v,
            ValidationOutcome::Violations(vec![Violation {
                body: "ball".into(),
                field: "mass".into(),
                value: 0.05,
                min: 0.1,
                max: 10.0,
            }])
        );
    }

    #[test]
    fn clamp_moves_elasticity_to_boundary_with_warning() {
        let scene = scene_with(1.0, 0.5, 1.2);
        match validate_scene(&scene, true) {
            ValidationOutcome::Clamped { scene, warnings } => {
                assert_eq!(scene.bodies[0].elasticity, 0.9);
                assert_eq!(warnings.len(), 1);
                assert_eq!(warnings[0].field, "elasticity");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn midpoints_are_valid() {
        let scene = scene_with(5.05, 0.55, 0.5);
        assert_eq!(validate_scene(&scene, false).violations(), &[]);
    }

    #[test]
    fn clamping_is_idempotent() {
        let scene = scene_with(50.0, 0.0, 1.2);
        let once = match validate_scene(&scene, true) {
            ValidationOutcome::Clamped { scene, .. } => scene,
            _ => unreachable!(),
        };
        let twice = match validate_scene(&once, true) {
            ValidationOutcome::Clamped { scene, warnings } => {
                assert!(warnings.is_empty());
                scene
            }
            _ => unreachable!(),
        };
        assert_eq!(once, twice);
    }

    #[test]
    fn static_bodies_skip_mass_range() {
        let mut scene = scene_with(100.0, 0.5, 0.5);
        scene.bodies[0].is_static = true;
        assert!(validate_scene(&scene, false).violations().is_empty());
    }
}

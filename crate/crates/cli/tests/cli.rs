use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use image::{Rgba, RgbaImage};
use physlayer::scene::{Camera, DirectionalLight, ImageAsset, SimConfig};
use physlayer::{save_scene, BodySpec, Scene};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_physlayer"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn ball(id: &str, x: f64, depth: f64, mass: f64) -> BodySpec {
    BodySpec {
        id: id.into(),
        sprite: ImageAsset::new(format!("{id}.png"), RgbaImage::from_pixel(12, 12, Rgba([220, 80, 40, 255]))),
        position: [x, 30.0],
        depth,
        rotation: 0.0,
        mass,
        friction: 0.5,
        elasticity: 0.5,
        initial_velocity: [20.0, 0.0, 0.0],
        initial_angular_velocity: 0.0,
        is_static: false,
        albedo: None,
        normals: Some(ImageAsset::new(format!("{id}_n.png"), RgbaImage::from_pixel(12, 12, Rgba([128, 128, 255, 255])))),
    }
}

fn write_scene(dir: &Path, mass: f64) -> PathBuf {
    let scene = Scene {
        background: ImageAsset::new("bg.png", RgbaImage::from_fn(64, 64, |x, y| Rgba([x as u8, y as u8, 100, 255]))),
        camera: Camera {
            focal_length: 300.0,
            reference_depth: 2.0,
        },
        light: DirectionalLight {
            direction: [0.0, 0.6, 0.8],
            intensity: 1.0,
            ambient: 0.2,
            attenuation: 0.0,
        },
        gravity: [0.0, 9.81],
        pixels_per_meter: 20.0,
        bodies: vec![ball("a", 15.0, 2.0, mass), ball("b", 40.0, 2.1, 1.0)],
        sim: SimConfig {
            width: 64,
            height: 64,
            ..SimConfig::default()
        },
    };
    save_scene(&scene, dir).expect("scene saves")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_reports_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_scene(dir.path(), 1.0);
    let out = run(&["validate", s(&good)]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());

    let bad_dir = dir.path().join("bad");
    fs::create_dir(&bad_dir).unwrap();
    let bad = write_scene(&bad_dir, 0.05);
    let out = run(&["validate", s(&bad)]);
    assert_eq!(code(&out), 2);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("violation body=a field=mass value=0.05"), "{stdout}");

    assert_eq!(code(&run(&["validate", s(&bad), "--clamp"])), 0);
    assert_eq!(code(&run(&["validate", s(&dir.path().join("missing.json"))])), 3);
}

#[test]
fn simulate_and_render_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write_scene(dir.path(), 1.0);
    let prog = dir.path().join("prog.txt");
    fs::write(&prog, "push a force (2, 0, 0) for 0.5s\nspin b torque 0.001 at 1s\n").unwrap();
    let traj = dir.path().join("traj.json");
    let out = run(&["simulate", s(&scene), "--instructions", s(&prog), "--out", s(&traj), "--seed-check"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let t = physlayer::Trajectory::from_json(&fs::read_to_string(&traj).unwrap()).unwrap();
    assert_eq!(t.records.len(), 161);
    assert!(t.records.iter().all(|r| r.bodies.len() == 2));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("traj.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["trajectory_hash"], t.content_hash());

    let frames = dir.path().join("frames");
    let out = run(&["render", s(&traj), s(&scene), "--out", s(&frames)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<String> = fs::read_dir(&frames)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".png"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 16);
    assert_eq!(names[0], "frame_0000.png");
    assert_eq!(names[15], "frame_0015.png");
    let img = image::open(frames.join("frame_0003.png")).unwrap().to_rgba8();
    assert_eq!(img.dimensions(), (64, 64));

    // Re-rendering with a different thread count is byte-identical.
    let again = dir.path().join("again");
    let out = bin()
        .args(["render", s(&traj), s(&scene), "--out", s(&again)])
        .env("PHYSLAYER_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    for n in &names {
        assert_eq!(fs::read(frames.join(n)).unwrap(), fs::read(again.join(n)).unwrap(), "{n}");
    }

    let single = dir.path().join("single");
    assert_eq!(code(&run(&["render", s(&traj), s(&scene), "--out", s(&single), "--frames", "1", "--no-relight"])), 0);
    assert!(single.join("frame_0000.png").exists());
    assert!(!single.join("frame_0001.png").exists());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(single.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["frames"].as_array().unwrap().len(), 1);

    assert_eq!(code(&run(&["render", s(&traj), s(&scene), "--out", s(&single), "--frames", "500"])), 2);
}

#[test]
fn render_refuses_a_different_scene() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write_scene(dir.path(), 1.0);
    let traj = dir.path().join("traj.json");
    assert_eq!(code(&run(&["simulate", s(&scene), "--out", s(&traj)])), 0);
    let other_dir = dir.path().join("other");
    fs::create_dir(&other_dir).unwrap();
    let other = write_scene(&other_dir, 2.0);
    let out = run(&["render", s(&traj), s(&other), "--out", s(&dir.path().join("f"))]);
    assert_eq!(code(&out), 5);
}

#[test]
fn simulate_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write_scene(dir.path(), 1.0);
    let traj = dir.path().join("t.json");
    let prog = dir.path().join("p.txt");

    fs::write(&prog, "spin ghost torque 1").unwrap();
    let out = run(&["simulate", s(&scene), "--instructions", s(&prog), "--out", s(&traj)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("ghost"));

    fs::write(&prog, "push a force (1e308, 0, 0) for 1s").unwrap();
    let out = run(&["simulate", s(&scene), "--instructions", s(&prog), "--out", s(&traj)]);
    assert_eq!(code(&out), 4);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`a`") && err.contains("step"), "{err}");

    fs::write(&prog, "push a force (1, 2) for 1s").unwrap();
    assert_eq!(code(&run(&["simulate", s(&scene), "--instructions", s(&prog), "--out", s(&traj)])), 2);
    assert_eq!(code(&run(&["simulate", s(&dir.path().join("nope.json")), "--out", s(&traj)])), 3);
    assert!(!traj.exists());
}

#[test]
fn parse_command() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.txt");

    fs::write(&p, "").unwrap();
    let out = run(&["parse", s(&p)]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());

    fs::write(&p, "# demo\ninsert ball from \"sprites/ball one.png\" at (10, 20, 1.5) mass 2\npush ball force (1, 0, 0) at 0.5s for 1s\nremove ball\nset gravity (0, 9.81)\n").unwrap();
    let out = run(&["parse", s(&p)]);
    assert_eq!(code(&out), 0);
    let canonical = String::from_utf8(out.stdout).unwrap();
    let original = physlayer::parse_program(&fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(physlayer::parse_program(&canonical).unwrap(), original);

    let out = run(&["parse", s(&p), "--dump-ast"]);
    assert_eq!(code(&out), 0);
    let ast: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(ast["commands"].as_array().unwrap().len(), 4);

    fs::write(&p, "push ball force (1, 0 0)").unwrap();
    let out = run(&["parse", s(&p)]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1, column 23"), "{err}");
}

//! `physlayer`: validate scenes, parse instruction programs, simulate
//! trajectories and render frame sequences.
//!
//! Exit codes: 0 ok, 2 invalid input (range violations, syntax errors,
//! unknown bodies, bad arguments), 3 I/O or malformed files, 4 numerical
//! fault, 5 stale trajectory, 6 seed check mismatch.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use physlayer::instruction::{ApplyError, InstructionProgram};
use physlayer::physics::{PhysicsError, SimulationError};
use physlayer::scene::{SceneError, ValidationOutcome};
use physlayer::{parse_program, simulate, validate_scene, RenderError, Renderer, Scene, Trajectory};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "physlayer", version, about = "Depth-layered 2.5D rigid-body animation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scene file and its physical property ranges.
    Validate {
        scene: PathBuf,
        /// Clamp out-of-range properties instead of failing.
        #[arg(long)]
        clamp: bool,
    },
    /// Simulate a scene and write the trajectory.
    Simulate {
        scene: PathBuf,
        #[arg(long)]
        instructions: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Run twice and fail unless both trajectories hash identically.
        #[arg(long)]
        seed_check: bool,
    },
    /// Render frames from a trajectory.
    Render {
        trajectory: PathBuf,
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 16)]
        frames: usize,
        #[arg(long)]
        no_relight: bool,
    },
    /// Parse an instruction program and print its canonical form.
    Parse {
        instructions: PathBuf,
        #[arg(long)]
        dump_ast: bool,
    },
}

const EXIT_INVALID: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;
const EXIT_STALE: u8 = 5;
const EXIT_NONDETERMINISTIC: u8 = 6;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Failure::new(EXIT_IO, format!("{}: {err}", path.display()))
    }
}

impl From<SceneError> for Failure {
    fn from(err: SceneError) -> Self {
        Failure::new(EXIT_IO, err.to_string())
    }
}

impl From<ApplyError> for Failure {
    fn from(err: ApplyError) -> Self {
        match err {
            ApplyError::Scene(e) => e.into(),
            other => Failure::new(EXIT_INVALID, other.to_string()),
        }
    }
}

impl From<SimulationError> for Failure {
    fn from(err: SimulationError) -> Self {
        match err {
            SimulationError::Apply(e) => e.into(),
            SimulationError::Physics(e @ PhysicsError::NumericalFault { .. }) => Failure::new(EXIT_NUMERICAL, e.to_string()),
            SimulationError::Physics(e @ PhysicsError::Layer(_)) => Failure::new(EXIT_INVALID, e.to_string()),
            SimulationError::Physics(e @ PhysicsError::Shape { .. }) => Failure::new(EXIT_IO, e.to_string()),
        }
    }
}

impl From<RenderError> for Failure {
    fn from(err: RenderError) -> Self {
        let code = match &err {
            RenderError::HashMismatch { .. } => EXIT_STALE,
            RenderError::Apply(ApplyError::Scene(_)) => EXIT_IO,
            RenderError::Apply(_) => EXIT_INVALID,
            RenderError::Composite(physlayer::compositor::CompositeError::TooManyFrames { .. }) => EXIT_INVALID,
            RenderError::Composite(_) => EXIT_NUMERICAL,
            RenderError::Program(_) | RenderError::Shape { .. } | RenderError::UnknownBody(_) | RenderError::MissingStep(_) => EXIT_IO,
            RenderError::Shading(_) => EXIT_IO,
        };
        Failure::new(code, err.to_string())
    }
}

/// Written next to every output after a successful run.
#[derive(Serialize)]
struct RunManifest {
    scene: PathBuf,
    instructions: Option<PathBuf>,
    output_dir: PathBuf,
    trajectory: PathBuf,
    frames: Vec<PathBuf>,
    tool_version: &'static str,
    scene_hash: String,
    trajectory_hash: String,
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Failure::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Failure::io(path, e))
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn scene_dir(scene: &Path) -> PathBuf {
    scene.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn load_program(path: &Path) -> Result<InstructionProgram, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    parse_program(&text).map_err(|e| Failure::new(EXIT_INVALID, format!("{}: syntax error at {e}", path.display())))
}

fn cmd_validate(scene: &Path, clamp: bool) -> Result<(), Failure> {
    let scene = physlayer::load_scene(scene)?;
    match validate_scene(&scene, clamp) {
        ValidationOutcome::Violations(v) if v.is_empty() => Ok(()),
        ValidationOutcome::Violations(v) => {
            for violation in &v {
                println!("{violation}");
            }
            Err(Failure::new(EXIT_INVALID, format!("{} violation(s)", v.len())))
        }
        ValidationOutcome::Clamped { warnings, .. } => {
            for w in &warnings {
                eprintln!("clamped: {w}");
            }
            Ok(())
        }
    }
}

fn checked_scene(path: &Path) -> Result<Scene, Failure> {
    let scene = physlayer::load_scene(path)?;
    match validate_scene(&scene, false) {
        ValidationOutcome::Violations(v) if !v.is_empty() => {
            for violation in &v {
                println!("{violation}");
            }
            Err(Failure::new(EXIT_INVALID, format!("{}: {} violation(s)", path.display(), v.len())))
        }
        _ => Ok(scene),
    }
}

fn cmd_simulate(scene_path: &Path, instructions: Option<&Path>, out: &Path, seed_check: bool) -> Result<(), Failure> {
    let scene = checked_scene(scene_path)?;
    let program = match instructions {
        Some(p) => load_program(p)?,
        None => InstructionProgram::default(),
    };
    let sprites = scene_dir(scene_path);
    let trajectory = simulate(&scene, &program, &sprites)?;
    let hash = trajectory.content_hash();
    if seed_check {
        let again = simulate(&scene, &program, &sprites)?.content_hash();
        if again != hash {
            return Err(Failure::new(EXIT_NONDETERMINISTIC, format!("seed check failed: {hash} != {again}")));
        }
    }
    write_atomic(out, trajectory.to_json().as_bytes())?;
    let output_dir = scene_dir(out);
    write_manifest(
        &manifest_path(out),
        &RunManifest {
            scene: scene_path.to_path_buf(),
            instructions: instructions.map(Path::to_path_buf),
            output_dir,
            trajectory: out.to_path_buf(),
            frames: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION"),
            scene_hash: trajectory.scene_hash.clone(),
            trajectory_hash: hash,
        },
    )?;
    println!("wrote {} ({} steps, {} bodies)", out.display(), trajectory.steps, trajectory.records[0].bodies.len());
    Ok(())
}

/// `traj.json` -> `traj.manifest.json`.
fn manifest_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.manifest.json"))
}

fn thread_pool() -> Result<rayon::ThreadPool, Failure> {
    let threads = match std::env::var("PHYSLAYER_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Failure::new(EXIT_INVALID, format!("PHYSLAYER_THREADS must be a non-negative integer, got `{v}`")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::new(EXIT_IO, e.to_string()))
}

fn cmd_render(traj_path: &Path, scene_path: &Path, out: &Path, frames: usize, relight: bool) -> Result<(), Failure> {
    let text = fs::read_to_string(traj_path).map_err(|e| Failure::io(traj_path, e))?;
    let trajectory = Trajectory::from_json(&text).map_err(|e| Failure::io(traj_path, e))?;
    let scene = physlayer::load_scene(scene_path)?;
    let sprites = scene_dir(scene_path);
    let renderer = Renderer::new(&scene, &trajectory, &sprites, relight)?;
    let steps = renderer.frame_steps(frames)?;
    fs::create_dir_all(out).map_err(|e| Failure::io(out, e))?;

    let pool = thread_pool()?;
    let paths: Vec<PathBuf> = pool.install(|| {
        steps
            .par_iter()
            .enumerate()
            .map(|(index, &step)| {
                let frame = renderer.render_step(index, step)?;
                let path = out.join(format!("frame_{index:04}.png"));
                frame.image.save(&path).map_err(|e| Failure::io(&path, e))?;
                Ok(path)
            })
            .collect::<Result<Vec<_>, Failure>>()
    })?;

    write_manifest(
        &out.join("manifest.json"),
        &RunManifest {
            scene: scene_path.to_path_buf(),
            instructions: None,
            output_dir: out.to_path_buf(),
            trajectory: traj_path.to_path_buf(),
            frames: paths.clone(),
            tool_version: env!("CARGO_PKG_VERSION"),
            scene_hash: trajectory.scene_hash.clone(),
            trajectory_hash: trajectory.content_hash(),
        },
    )?;
    println!("wrote {} frames to {}", paths.len(), out.display());
    Ok(())
}

fn cmd_parse(path: &Path, dump_ast: bool) -> Result<(), Failure> {
    let program = load_program(path)?;
    if dump_ast {
        println!("{}", serde_json::to_string_pretty(&program).expect("AST serializes"));
    } else if !program.commands.is_empty() {
        println!("{}", physlayer::format_program(&program));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { scene, clamp } => cmd_validate(scene, *clamp),
        Command::Simulate {
            scene,
            instructions,
            out,
            seed_check,
        } => cmd_simulate(scene, instructions.as_deref(), out, *seed_check),
        Command::Render {
            trajectory,
            scene,
            out,
            frames,
            no_relight,
        } => cmd_render(trajectory, scene, out, *frames, !*no_relight),
        Command::Parse { instructions, dump_ast } => cmd_parse(instructions, *dump_ast),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

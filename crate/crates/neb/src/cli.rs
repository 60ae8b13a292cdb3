//! Command-line front end: renders a scene with one integrator, or runs the
//! `compare` benchmark over all three at an equal budget.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{Budget, IntegratorKind, RenderConfig};
use crate::integrator::{render, RenderError};
use crate::io::{read_pfm, rmse, tonemap_png, write_pfm, ImageFile};
use crate::scene::{load_scene, Scene};

/// Usage or configuration problem.
pub const EXIT_USAGE: i32 = 2;
/// Scene failed to load or validate.
pub const EXIT_SCENE: i32 = 3;
/// Vertex store too small for the requested resolution and depth.
pub const EXIT_CAPACITY: i32 = 4;

#[derive(Parser)]
#[command(name = "neb", version, about = "CPU renderer built on next event backtracking")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(flatten)]
    args: RenderArgs,
    /// Write the linear HDR result here (PFM).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare against this PFM and print one `rmse=<float>` line.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Also write a tonemapped 8-bit preview here.
    #[arg(long)]
    png: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Render pt, neb and neb+lp at the same budget and print CSV rows.
    Compare {
        #[command(flatten)]
        args: RenderArgs,
        /// Reference PFM for the rmse column; `NaN` without one.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RenderArgs {
    /// Scene file path or `builtin:<name>`.
    #[arg(long, default_value = "builtin:cornell_diffuse")]
    scene: String,
    /// One of `pt`, `neb`, `neb+lp`.
    #[arg(long, default_value = "neb")]
    integrator: String,
    /// Stop after this many iterations (one camera sample per pixel each).
    #[arg(long, conflicts_with = "time")]
    iterations: Option<u32>,
    /// Stop after the first iteration that ends past this many seconds.
    #[arg(long)]
    time: Option<f64>,
    #[arg(long, default_value_t = 512)]
    width: u32,
    #[arg(long, default_value_t = 512)]
    height: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to NEB_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Maximum path length in segments.
    #[arg(long, default_value_t = 10)]
    max_depth: u32,
    /// Merge radius as a fraction of the scene diagonal.
    #[arg(long, default_value_t = 2e-3)]
    radius_scale: f64,
    /// Node budget of the density octree.
    #[arg(long, default_value_t = 1 << 22)]
    octree_capacity: u32,
    /// Light photons per iteration (neb+lp only); pixel count when absent.
    #[arg(long = "n-lp")]
    n_lp: Option<usize>,
}

impl RenderArgs {
    fn budget(&self) -> Budget {
        match (self.iterations, self.time) {
            (Some(n), _) => Budget::Iterations(n),
            (None, Some(s)) => Budget::Seconds(s),
            (None, None) => Budget::Iterations(16),
        }
    }

    fn config(&self, integrator: IntegratorKind) -> Result<RenderConfig, String> {
        let threads = match self.threads {
            Some(t) => t,
            None => match std::env::var("NEB_THREADS") {
                Ok(v) => v
                    .parse()
                    .map_err(|_| format!("NEB_THREADS is not a thread count: {v:?}"))?,
                Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
            },
        };
        let mut config = RenderConfig::new(integrator, self.width, self.height, self.budget());
        config.seed = self.seed;
        config.threads = threads;
        config.max_depth = self.max_depth;
        config.radius_scale = self.radius_scale;
        config.octree_capacity = self.octree_capacity;
        config.n_light_photons = self.n_lp;
        config.validate()?;
        Ok(config)
    }
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run(argv: &[String]) -> i32 {
    run_to(argv, &mut std::io::stdout().lock())
}

/// Like [`run`] but with the report stream injected, for tests.
pub fn run_to(argv: &[String], out: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match cli.command {
        Some(Command::Compare { args, reference }) => compare(&args, reference.as_deref(), out),
        None => render_main(&cli, out),
    }
}

fn render_main(cli: &Cli, out: &mut dyn Write) -> i32 {
    let (kind, scene, config) = match setup(&cli.args) {
        Ok(parts) => parts,
        Err(code) => return code,
    };
    let result = match render_once(&scene, &config, kind) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let rate = result.iterations as f64 / result.wall_seconds.max(1e-9);
    let _ = writeln!(
        out,
        "{}: {} iterations in {:.3} s ({:.2} iterations/s)",
        result.integrator, result.iterations, result.wall_seconds, rate
    );
    if let Some(path) = &cli.out {
        if let Err(e) = write_pfm(&result.image, path) {
            eprintln!("error: {e}");
            return 1;
        }
    }
    if let Some(path) = &cli.png {
        if let Err(e) = tonemap_png(&result.image, path) {
            eprintln!("error: {e}");
            return 1;
        }
    }
    if let Some(path) = &cli.reference {
        match read_pfm(path).and_then(|r| rmse(&result.image, &r)) {
            Ok(value) => {
                let _ = writeln!(out, "rmse={value}");
            }
            Err(e) => {
                eprintln!("error: {e}");
                return 1;
            }
        }
    }
    0
}

fn compare(args: &RenderArgs, reference: Option<&std::path::Path>, out: &mut dyn Write) -> i32 {
    let reference = match reference.map(read_pfm).transpose() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let _ = writeln!(out, "integrator,spp,seconds,rmse");
    for kind in [IntegratorKind::Pt, IntegratorKind::Neb, IntegratorKind::NebLp] {
        // Scene rebuilt per run so every integrator starts from the same state.
        let scene = match load_scene(&args.scene) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_SCENE;
            }
        };
        let config = match args.config(kind) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        };
        let result = match render_once(&scene, &config, kind) {
            Ok(r) => r,
            Err(code) => return code,
        };
        let error = match &reference {
            Some(r) => match rmse(&result.image, r) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 1;
                }
            },
            None => f64::NAN,
        };
        let _ = writeln!(
            out,
            "{},{},{:.3},{:.6}",
            result.integrator, result.iterations, result.wall_seconds, error
        );
    }
    0
}

fn setup(args: &RenderArgs) -> Result<(IntegratorKind, Scene, RenderConfig), i32> {
    let kind = IntegratorKind::parse(&args.integrator).ok_or_else(|| {
        eprintln!(
            "error: unknown integrator {:?}; expected pt, neb or neb+lp",
            args.integrator
        );
        EXIT_USAGE
    })?;
    let scene = load_scene(&args.scene).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_SCENE
    })?;
    let config = args.config(kind).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })?;
    Ok((kind, scene, config))
}

fn render_once(scene: &Scene, config: &RenderConfig, kind: IntegratorKind) -> Result<ImageFile, i32> {
    let start = Instant::now();
    let (film, stats) = render(scene, config).map_err(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })?;
    Ok(ImageFile {
        image: film.mean_image(),
        integrator: kind.name().to_string(),
        iterations: stats.iterations,
        wall_seconds: start.elapsed().as_secs_f64(),
        seed: config.seed,
    })
}

fn exit_code(e: &RenderError) -> i32 {
    match e {
        RenderError::StoreCapacity { .. } => EXIT_CAPACITY,
        RenderError::Config(_) => EXIT_USAGE,
    }
}

//! Command-line front end. The `mvjoint` binary only calls [`run`].

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::camera::CameraParams;
use crate::codec::{decode, encode, CodecConfig};
use crate::depth::{bad_pixel_rate, DepthField, Geometry};
use crate::error::{Error, Result};
use crate::eval::{bjontegaard_rate, emit_plot, parse_curves_csv, run_rd_sweep, run_rd_sweep_with_depth, RdCurve};
use crate::image::{psnr, Image};
use crate::io::{load_image, save_image};
use crate::pipeline::{estimate_from_decoded, reconstruct_with_depth, PipelineOutcome};
use crate::scene::{generate, Scene, SceneKind, SceneSpec};

pub use config::Config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Joint reconstruction of independently compressed multi-view images.
#[derive(Debug, Parser)]
#[command(name = "mvjoint", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Texture seed of a synthetic scene.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// QP' values, comma separated; single-rate commands use the first.
    #[arg(long, global = true, value_delimiter = ',')]
    pub qp: Vec<u32>,
    /// Rectified disparity search range, `MIN:MAX`.
    #[arg(long, global = true, value_parser = parse_range)]
    pub rectified: Option<(i32, i32)>,
    /// Camera JSON files, one per view (selects calibrated mode).
    #[arg(long, global = true, value_delimiter = ',')]
    pub cameras: Vec<PathBuf>,
    /// View images, reference first (overrides the config).
    #[arg(long, global = true, value_delimiter = ',')]
    pub views: Vec<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene with ground truth.
    Synth(SynthArgs),
    /// Compress and decode every view independently.
    Compress,
    /// Estimate depth from (decoded) views.
    Depth,
    /// Jointly reconstruct decoded views.
    Reconstruct(ReconstructArgs),
    /// Score decoded images against originals, or RD curves by delta rate.
    Evaluate(EvaluateArgs),
    /// Rate sweep: RD curves of independent and joint decoding.
    Rd,
    /// Rate sweep plus every per-rate artifact and a report.
    Full,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "two-plane-occlusion")]
    pub kind: SceneKindArg,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long = "num-views", default_value_t = 2)]
    pub num_views: usize,
    /// Background (or only) disparity between neighbouring views.
    #[arg(long, default_value_t = 1)]
    pub shift: i32,
    #[arg(long, default_value_t = 4)]
    pub foreground_shift: i32,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum SceneKindArg {
    TranslatedPlane,
    TwoPlaneOcclusion,
    TexturedRamp,
}

impl From<SceneKindArg> for SceneKind {
    fn from(k: SceneKindArg) -> Self {
        match k {
            SceneKindArg::TranslatedPlane => SceneKind::TranslatedPlane,
            SceneKindArg::TwoPlaneOcclusion => SceneKind::TwoPlaneOcclusion,
            SceneKindArg::TexturedRamp => SceneKind::TexturedRamp,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Depth map written by `depth` (estimated from the views otherwise).
    #[arg(long)]
    pub depth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Decoded or reconstructed images, in view order.
    #[arg(long, value_delimiter = ',')]
    pub decoded: Vec<PathBuf>,
    /// RD CSV; prints the delta rate of each curve against the first.
    #[arg(long)]
    pub curves: Option<PathBuf>,
}

fn parse_range(s: &str) -> std::result::Result<(i32, i32), String> {
    let (a, b) = s.split_once(':').ok_or("expected MIN:MAX")?;
    let a: i32 = a.trim().parse().map_err(|e| format!("bad MIN: {e}"))?;
    let b: i32 = b.trim().parse().map_err(|e| format!("bad MAX: {e}"))?;
    if a > b {
        return Err("MIN exceeds MAX".into());
    }
    Ok((a, b))
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("MVJOINT_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// 2 for usage and config problems, 1 for everything else.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

/// Run a parsed command.
pub fn execute(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.global.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    apply_flags(&mut cfg, &cli.global)?;
    let workers = cli.global.workers.or(cfg.eval.workers);
    if workers == Some(0) {
        return Err(Error::Config("--workers must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let out = &cli.global.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    pool.install(|| match &cli.command {
        Command::Synth(args) => cmd_synth(&cfg, args, cli.global.seed, out),
        Command::Compress => cmd_compress(&cfg, out),
        Command::Depth => cmd_depth(&cfg, out),
        Command::Reconstruct(args) => cmd_reconstruct(&cfg, args, out),
        Command::Evaluate(args) => cmd_evaluate(&cfg, args, out),
        Command::Rd => cmd_rd(&cfg, out),
        Command::Full => cmd_full(&cfg, out),
    })
}

fn apply_flags(cfg: &mut Config, g: &GlobalArgs) -> Result<()> {
    if !g.views.is_empty() {
        cfg.views = Some(g.views.clone());
        cfg.scene = None;
    }
    if !g.cameras.is_empty() {
        cfg.cameras = Some(g.cameras.clone());
    }
    if let Some((min, max)) = g.rectified {
        cfg.rectified = Some(config::Range { min, max });
    }
    if let Some(&q) = g.qp.first() {
        cfg.codec.qp = q;
    }
    if g.qp.len() > 1 {
        cfg.eval.qp = g.qp.clone();
    }
    if let (Some(seed), Some(scene)) = (g.seed, cfg.scene.as_mut()) {
        scene.seed = seed;
    }
    cfg.check()
}

/// Views, optional ground truth and the geometry they are solved with.
pub struct Inputs {
    pub views: Vec<Image>,
    pub scene: Option<Scene>,
    pub geometry: Geometry,
}

/// Load the views named by the config, or generate its scene.
pub fn load_views(cfg: &Config) -> Result<(Vec<Image>, Option<Scene>)> {
    cfg.require_input()?;
    let (views, scene) = match (&cfg.views, &cfg.scene) {
        (Some(paths), _) => (paths.iter().map(load_image).collect::<Result<Vec<_>>>()?, None),
        (None, Some(spec)) => {
            let scene = generate(spec)?;
            (scene.views.clone(), Some(scene))
        }
        (None, None) => unreachable!("checked by require_input"),
    };
    for v in &views[1..] {
        views[0].same_dims(v)?;
    }
    Ok((views, scene))
}

/// [`load_views`] plus the geometry: calibrated when cameras are given,
/// rectified otherwise.
pub fn load_inputs(cfg: &Config) -> Result<Inputs> {
    let (views, scene) = load_views(cfg)?;
    let geometry = if let Some(paths) = &cfg.cameras {
        if paths.len() != views.len() {
            return Err(Error::Config(format!(
                "field `cameras`: {} files for {} views",
                paths.len(),
                views.len()
            )));
        }
        let range = cfg
            .depth_range
            .ok_or_else(|| Error::Config("calibrated mode needs the field `depth_range`".into()))?;
        Geometry::Calibrated {
            cameras: paths.iter().map(CameraParams::load).collect::<Result<Vec<_>>>()?,
            min_depth: range.min,
            max_depth: range.max,
            labels: cfg.depth.labels,
        }
    } else {
        let (min, max) = match (cfg.rectified, &scene) {
            (Some(r), _) => (r.min, r.max),
            (None, Some(s)) => (0, s.max_disparity() + 2),
            (None, None) => {
                return Err(Error::Config(
                    "rectified views need a disparity range (--rectified MIN:MAX or field `rectified`)".into(),
                ))
            }
        };
        Geometry::Rectified {
            min_disparity: min,
            max_disparity: max,
            scales: (1..views.len()).map(|k| k as f64).collect(),
        }
    };
    Ok(Inputs { views, scene, geometry })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| Error::io(path, e))
}

fn view_path(dir: &Path, stem: &str, k: usize) -> PathBuf {
    dir.join(format!("{stem}_{k}.png"))
}

fn cmd_synth(cfg: &Config, args: &SynthArgs, seed: Option<u64>, out: &Path) -> Result<()> {
    let spec = match &cfg.scene {
        Some(s) => s.clone(),
        None => SceneSpec::new(
            args.kind.into(),
            args.width,
            args.height,
            args.shift,
            args.foreground_shift,
            seed.unwrap_or(0),
        )
        .with_views(args.num_views),
    };
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    let scene = generate(&spec)?;
    for (k, v) in scene.views.iter().enumerate() {
        save_image(v, view_path(out, "view", k))?;
    }
    let disparity: Vec<u16> = scene.disparity.iter().map(|&d| d as u16).collect();
    crate::io::save_pgm16(spec.width, spec.height, &disparity, out.join("disparity.pgm"))?;
    save_image(&scene.disparity_image(), out.join("disparity.png"))?;
    for k in 0..scene.holes.len() {
        save_image(&scene.hole_image(k), out.join(format!("holes_{}.pgm", k + 1)))?;
    }
    write_json(&out.join("scene.json"), &spec)?;
    println!("wrote {} views of a {}x{} scene to {}", scene.views.len(), spec.width, spec.height, out.display());
    Ok(())
}

#[derive(Serialize)]
struct CompressSummary {
    qp: u32,
    bits: Vec<f64>,
    psnr: Vec<f64>,
}

fn cmd_compress(cfg: &Config, out: &Path) -> Result<()> {
    let (views, _) = load_views(cfg)?;
    let codec = CodecConfig::new(cfg.codec.qp).map_err(|e| Error::Config(e.to_string()))?;
    let mut summary = CompressSummary {
        qp: codec.qp(),
        bits: Vec::new(),
        psnr: Vec::new(),
    };
    for (k, v) in views.iter().enumerate() {
        let stream = encode(v, codec);
        stream.save(out.join(format!("view_{k}.mvj")))?;
        let decoded = decode(&stream);
        save_image(&decoded, view_path(out, "decoded", k))?;
        summary.bits.push(stream.estimated_bits());
        summary.psnr.push(psnr(v, &decoded)?);
        println!("view {k}: {:.0} bits, {:.3} dB", stream.estimated_bits(), psnr(v, &decoded)?);
    }
    write_json(&out.join("compress.json"), &summary)
}

#[derive(Serialize)]
struct DepthSummary {
    labels: usize,
    bad_pixel_percent: Option<f64>,
    bad_pixel_percent_visible: Option<f64>,
}

/// Percent of reference pixels whose disparity is off by more than one,
/// over all pixels and over those visible in the first other view.
fn disparity_errors(depth: &DepthField, scene: &Scene) -> (f64, f64) {
    let est = depth.disparities(1.0);
    let truth: Vec<f64> = scene.disparity.iter().map(|&d| f64::from(d)).collect();
    let visible = scene.non_occluded(0);
    (
        100.0 * bad_pixel_rate(&est, &truth, None, 1.0),
        100.0 * bad_pixel_rate(&est, &truth, Some(&visible), 1.0),
    )
}

fn save_depth(depth: &DepthField, dir: &Path) -> Result<()> {
    depth.save(dir.join("depth.pgm"))?;
    save_image(&depth.disparity_image(1.0), dir.join("depth.png"))
}

fn cmd_depth(cfg: &Config, out: &Path) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    let depth = estimate_from_decoded(&inputs.views, &inputs.geometry, &cfg.depth.params())?;
    save_depth(&depth, out)?;
    let errors = inputs.scene.as_ref().map(|s| disparity_errors(&depth, s));
    if let Some((all, vis)) = errors {
        println!("bad pixels: {all:.2}% ({vis:.2}% of visible pixels)");
    }
    write_json(
        &out.join("depth.json"),
        &DepthSummary {
            labels: depth.label_count(),
            bad_pixel_percent: errors.map(|e| e.0),
            bad_pixel_percent_visible: errors.map(|e| e.1),
        },
    )
}

fn cmd_reconstruct(cfg: &Config, args: &ReconstructArgs, out: &Path) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    let codec = CodecConfig::new(cfg.codec.qp).map_err(|e| Error::Config(e.to_string()))?;
    let depth = match &args.depth {
        Some(p) => DepthField::load(p)?,
        None => estimate_from_decoded(&inputs.views, &inputs.geometry, &cfg.depth.params())?,
    };
    let params = cfg.solver.params()?;
    let (rec, report) = reconstruct_with_depth(&inputs.views, &depth, &inputs.geometry, codec, &params)?;
    for (k, v) in rec.iter().enumerate() {
        save_image(v, view_path(out, "reconstructed", k))?;
    }
    report.save_csv(out.join("solve.csv"))?;
    println!(
        "{} iterations, objective {:.1}, feasible: {}",
        report.iterations,
        report.final_record().objective,
        report.feasible()
    );
    Ok(())
}

fn cmd_evaluate(cfg: &Config, args: &EvaluateArgs, out: &Path) -> Result<()> {
    if let Some(csv) = &args.curves {
        let text = std::fs::read_to_string(csv).map_err(|e| Error::io(csv, e))?;
        let curves = parse_curves_csv(&text)?;
        let reference = curves.first().ok_or_else(|| Error::Malformed("no curves".into()))?;
        for c in &curves[1..] {
            match bjontegaard_rate(reference, c) {
                Ok(bd) => println!("{} vs {}: {bd:+.2}% rate", c.label(), reference.label()),
                Err(e @ Error::NoOverlap(..)) => println!("{} vs {}: {e}", c.label(), reference.label()),
                Err(e) => return Err(e),
            }
        }
        return Ok(());
    }
    if args.decoded.is_empty() {
        return Err(Error::Config("evaluate needs --decoded or --curves".into()));
    }
    let (views, _) = load_views(cfg)?;
    if args.decoded.len() != views.len() {
        return Err(Error::Config(format!(
            "{} decoded images for {} views",
            args.decoded.len(),
            views.len()
        )));
    }
    let mut scores = Vec::new();
    for (k, (orig, path)) in views.iter().zip(&args.decoded).enumerate() {
        let q = psnr(orig, &load_image(path)?)?;
        println!("view {k}: {q:.3} dB");
        scores.push(q);
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    println!("mean: {mean:.3} dB");
    write_json(&out.join("evaluate.json"), &serde_json::json!({ "psnr": scores, "mean_psnr": mean }))
}

fn sweep_curves(cfg: &Config, inputs: &Inputs) -> Result<(crate::eval::RdSweep, Vec<RdCurve>)> {
    let params = cfg.solver.params()?;
    let sweep = run_rd_sweep(&inputs.views, &cfg.eval.qp, &inputs.geometry, &cfg.depth.params(), &params)?;
    let mut curves = vec![sweep.independent.clone(), sweep.joint.clone()];
    if cfg.eval.true_depth {
        if let Some(scene) = &inputs.scene {
            let (min, max) = match inputs.geometry {
                Geometry::Rectified {
                    min_disparity,
                    max_disparity,
                    ..
                } => (min_disparity, max_disparity),
                Geometry::Calibrated { .. } => unreachable!("scenes are rectified"),
            };
            let truth = scene.truth_field(min, max)?;
            let t = run_rd_sweep_with_depth(&inputs.views, &cfg.eval.qp, &inputs.geometry, &truth, &params)?;
            curves.push(t.joint);
        } else {
            log::warn!("eval.true_depth needs a synthetic scene; skipped");
        }
    }
    Ok((sweep, curves))
}

fn cmd_rd(cfg: &Config, out: &Path) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    let (sweep, curves) = sweep_curves(cfg, &inputs)?;
    emit_plot(&curves, out.join("rd"))?;
    for r in &sweep.runs {
        println!(
            "QP' {:2}: {:8.0} bits, independent {:.3} dB, joint {:.3} dB",
            r.qp,
            r.outcome.total_bits(),
            r.outcome.mean_independent_psnr(),
            r.outcome.mean_joint_psnr()
        );
    }
    println!("delta rate of joint decoding: {:+.2}%", sweep.bd_rate()?);
    Ok(())
}

#[derive(Serialize)]
struct RatePoint {
    qp: u32,
    total_bits: f64,
    independent_psnr: Vec<f64>,
    joint_psnr: Vec<f64>,
    iterations: usize,
    feasible: bool,
    bad_pixel_percent: Option<f64>,
    bad_pixel_percent_visible: Option<f64>,
}

#[derive(Serialize)]
struct FullReport<'a> {
    config: &'a Config,
    bd_rate_percent: f64,
    points: Vec<RatePoint>,
}

fn save_point(dir: &Path, outcome: &PipelineOutcome) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (k, (d, r)) in outcome.decoded.iter().zip(&outcome.reconstructed).enumerate() {
        save_image(d, view_path(dir, "decoded", k))?;
        save_image(r, view_path(dir, "reconstructed", k))?;
    }
    save_depth(&outcome.depth, dir)?;
    outcome.report.save_csv(dir.join("solve.csv"))
}

fn cmd_full(cfg: &Config, out: &Path) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    let (sweep, curves) = sweep_curves(cfg, &inputs)?;
    let plot = emit_plot(&curves, out.join("rd"))?;
    let bd = sweep.bd_rate()?;

    let mut text = String::from("mvjoint report\n\n");
    text += &cfg.parameter_block();
    writeln!(text, "qp = {:?}\n", cfg.eval.qp).unwrap();
    writeln!(text, "QP'   bits      independent  joint      bad px").unwrap();
    let mut points = Vec::new();
    for r in &sweep.runs {
        save_point(&out.join(format!("qp_{:02}", r.qp)), &r.outcome)?;
        let errors = inputs.scene.as_ref().map(|s| disparity_errors(&r.outcome.depth, s));
        writeln!(
            text,
            "{:<5} {:<9.0} {:<12.3} {:<10.3} {}",
            r.qp,
            r.outcome.total_bits(),
            r.outcome.mean_independent_psnr(),
            r.outcome.mean_joint_psnr(),
            errors.map_or("-".to_string(), |e| format!("{:.2}%", e.0))
        )
        .unwrap();
        points.push(RatePoint {
            qp: r.qp,
            total_bits: r.outcome.total_bits(),
            independent_psnr: r.outcome.independent_psnr.clone(),
            joint_psnr: r.outcome.joint_psnr.clone(),
            iterations: r.outcome.report.iterations,
            feasible: r.outcome.report.feasible(),
            bad_pixel_percent: errors.map(|e| e.0),
            bad_pixel_percent_visible: errors.map(|e| e.1),
        });
    }
    writeln!(text, "\ndelta rate of joint decoding: {bd:+.2}%").unwrap();
    writeln!(text, "curves: {} and {}", plot.csv.display(), plot.svg.display()).unwrap();
    std::fs::write(out.join("report.txt"), &text).map_err(|e| Error::io(out.join("report.txt"), e))?;
    write_json(
        &out.join("report.json"),
        &FullReport {
            config: cfg,
            bd_rate_percent: bd,
            points,
        },
    )?;
    print!("{text}");
    Ok(())
}

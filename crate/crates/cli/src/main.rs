use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use sgraph_core::exact::{default_freq_grid, exact_sg, log_grid, spectrum};
use sgraph_core::feedback::{check_feedback, default_tau_grid, negate_then_invert, DEFAULT_RESOLUTION};
use sgraph_core::model::{hash_json, linspace, load_system, Cplx, SweepConfig, SystemModel};
use sgraph_core::presets::preset;
use sgraph_core::regions::{load_regions, rasterize, save_regions, Polyline, SgApproximation, SgMode, Window};
use sgraph_core::sim::{sample_cloud, InputRanges};
use sgraph_core::solve::{default_config, gain_bound, sweep, BarrierBackend};
use sgraph_core::svg::{Plot, BLACK, BLUE, GREEN, GREY, RED};
use sgraph_core::Error;

const PLOT_WIDTH: f64 = 640.0;

#[derive(Parser)]
#[command(name = "sgraph", version, about = "Scaled graphs of LTI, reset and piecewise-linear systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an LMI sweep and write the region set, report, raster and figure.
    Compute(ComputeArgs),
    /// Exact scaled graph of a normal LTI system from its Nyquist spectrum.
    Exact(ExactArgs),
    /// Simulate randomized multi-sine inputs and collect scaled-graph points.
    Sample(SampleArgs),
    /// Check feedback stability of two systems by scaled-graph separation.
    Feedback(FeedbackArgs),
    /// Inverse scaled graph of a region set (optionally of the negated system).
    Invert(InvertArgs),
    /// Draw one or more region sets and optional sample points.
    Render(RenderArgs),
}

#[derive(Args, Serialize)]
struct SystemArgs {
    /// System description (JSON).
    #[arg(long)]
    system: Option<PathBuf>,
    /// Built-in example: ex1, ex1-coarse, ex2, ex3 (also paper-ex1 etc.).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args, Serialize)]
struct PlotArgs {
    /// Raster window re_min:re_max:im_min:im_max.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long, default_value_t = 256)]
    resolution: usize,
}

#[derive(Args, Serialize)]
struct ComputeArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Hard (truncated-horizon) scaled graph instead of the soft one.
    #[arg(long)]
    hard: bool,
    /// Interior disk centers, `start:stop:count`.
    #[arg(long = "lambda-i", allow_hyphen_values = true)]
    lambda_i: Option<String>,
    /// Exterior disk centers, `start:stop:count`.
    #[arg(long = "lambda-e", allow_hyphen_values = true)]
    lambda_e: Option<String>,
    #[command(flatten)]
    plot: PlotArgs,
    #[serde(skip)]
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct ExactArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    plot: PlotArgs,
    #[serde(skip)]
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct SampleArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 500)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Region set to test containment against.
    #[arg(long)]
    regions: Option<PathBuf>,
    #[command(flatten)]
    plot: PlotArgs,
    #[serde(skip)]
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct FeedbackArgs {
    /// Region set of the forward system H1.
    #[arg(long)]
    h1: PathBuf,
    /// Region set of the feedback system H2.
    #[arg(long)]
    h2: PathBuf,
    /// Scalings of H2: `start:stop:count` (log spaced) or a comma list.
    #[arg(long = "tau-grid")]
    tau_grid: Option<String>,
    /// Raster window re_min:re_max:im_min:im_max.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,
    #[serde(skip)]
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct InvertArgs {
    #[arg(long)]
    regions: PathBuf,
    /// Invert the graph of the negated system, as used by the separation test.
    #[arg(long)]
    negate: bool,
    #[serde(skip)]
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct RenderArgs {
    /// Region sets to draw, first one on top.
    #[arg(long, required = true)]
    regions: Vec<PathBuf>,
    /// Sample cloud CSV (re,im,...) to overlay.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long)]
    hard: bool,
    #[command(flatten)]
    plot: PlotArgs,
    #[serde(skip)]
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Bad flags, unreadable or malformed inputs.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() || cause.is::<std::io::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io { .. }
                | Error::Parse(_)
                | Error::Dimension(_)
                | Error::InvalidArgument(_)
                | Error::Unsupported(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

/// Error chain joined with `: `, skipping causes already quoted by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compute(a) => compute(&a),
        Command::Exact(a) => exact(&a),
        Command::Sample(a) => sample(&a),
        Command::Feedback(a) => feedback(&a),
        Command::Invert(a) => invert(&a),
        Command::Render(a) => render(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

// ---------------------------------------------------------------------------
// helpers

struct Loaded {
    model: SystemModel,
    preset: Option<SweepConfig>,
}

fn load(args: &SystemArgs) -> anyhow::Result<Loaded> {
    let preset = args.preset.as_deref().map(preset).transpose()?;
    let model = match (&args.system, &preset) {
        (Some(path), _) => load_system(path)?,
        (None, Some(p)) => p.system.clone(),
        (None, None) => return Err(usage("give --system or --preset")),
    };
    Ok(Loaded {
        model,
        preset: preset.map(|p| p.config),
    })
}

/// `start:stop:count`, evenly spaced.
fn parse_grid(flag: &str, text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || usage(format!("{flag} {text:?}: expected start:stop:count"));
    let [a, b, n] = parts.as_slice() else {
        return Err(bad());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    Ok(linspace(a, b, n))
}

fn parse_tau_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || usage(format!("--tau-grid {text:?}: expected start:stop:count or a comma list"));
        let [a, b, n] = parts.as_slice() else {
            return Err(bad());
        };
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        if n == 0 || !(a > 0.0 && b >= a) {
            return Err(bad());
        }
        let mut g = log_grid(a, b, n);
        if let Some(last) = g.last_mut() {
            *last = b;
        }
        return Ok(g);
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("--tau-grid entry {t:?} is not a number")))
        })
        .collect()
}

fn parse_window(text: Option<&str>) -> anyhow::Result<Option<Window>> {
    Ok(text.map(Window::parse).transpose()?)
}

fn check_resolution(n: usize) -> anyhow::Result<()> {
    if !(16..=4096).contains(&n) {
        return Err(usage(format!("--resolution {n} outside [16, 4096]")));
    }
    Ok(())
}

fn config_hash(command: &str, args: &impl Serialize, extra: serde_json::Value) -> String {
    hash_json(&json!({ "command": command, "args": args, "inputs": extra }))
}

fn prepare_out(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| usage(format!("cannot create output directory {}: {e}", dir.display())))
}

fn write(dir: &Path, name: &str, content: &str) -> anyhow::Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> anyhow::Result<PathBuf> {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    write(dir, name, &(text + "\n"))
}

fn read_regions(path: &Path, mode: SgMode) -> anyhow::Result<SgApproximation> {
    load_regions(path, mode).with_context(|| format!("region set {}", path.display()))
}

fn file_hash(path: &Path) -> anyhow::Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(hash_json(&serde_json::Value::String(text)))
}

/// Padded bounding box of `points`, made square.
fn fit_window(points: &[Cplx]) -> anyhow::Result<Window> {
    let finite: Vec<&Cplx> = points.iter().filter(|z| z.re.is_finite() && z.im.is_finite()).collect();
    if finite.is_empty() {
        return Ok(Window::square(0.0, 1.0)?);
    }
    let lo_re = finite.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let hi_re = finite.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let hi_im = finite.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let half = (0.5 * (hi_re - lo_re)).max(hi_im).max(1e-3) * 1.15;
    Ok(Window::square(0.5 * (lo_re + hi_re), half)?)
}

fn comment(hash: &str, what: &str) -> Vec<(&'static str, String)> {
    vec![("config_hash", hash.to_string()), ("content", what.to_string())]
}

// ---------------------------------------------------------------------------
// commands

fn compute(args: &ComputeArgs) -> anyhow::Result<()> {
    check_resolution(args.plot.resolution)?;
    let window = parse_window(args.plot.window.as_deref())?;
    let loaded = load(&args.system)?;
    let model = &loaded.model;
    let backend = BarrierBackend::default();

    let mut cfg = match (&loaded.preset, &args.lambda_i, &args.lambda_e) {
        (Some(cfg), _, _) => cfg.clone(),
        (None, Some(_), Some(_)) => SweepConfig::default(),
        (None, _, _) => {
            // grids scaled to the gain bound
            let g = gain_bound(model, args.hard, &backend)?
                .ok_or_else(|| anyhow!("no finite gain bound; give --lambda-i and --lambda-e"))?;
            default_config(g, args.hard)
        }
    };
    cfg.hard = args.hard;
    if let Some(g) = &args.lambda_i {
        cfg.lambda_interior = parse_grid("--lambda-i", g)?;
    }
    if let Some(g) = &args.lambda_e {
        cfg.lambda_exterior = parse_grid("--lambda-e", g)?;
    }
    cfg.validate()?;
    prepare_out(&args.out)?;

    let hash = config_hash(
        "compute",
        args,
        json!({ "system": model.content_hash(), "sweep": cfg }),
    );
    let result = sweep(model, &cfg, &backend)?;
    let approx = &result.approximation;

    let regions_path = args.out.join("regions.json");
    save_regions(approx, &regions_path)?;
    let mut report = result.report_json(Some("regions.json"));
    report["config_hash"] = json!(hash);
    write_json(&args.out, "sweep.json", &report)?;

    let gamma = approx.gain_bound().or(result.gamma0).unwrap_or(1.0);
    let window = match window {
        Some(w) => w,
        None => Window::square(0.0, 1.2 * gamma)?,
    };
    let raster = rasterize(approx, &window, args.plot.resolution)?;
    write(&args.out, "raster.csv", &raster.to_csv(&comment(&hash, "region membership at cell centers")))?;

    let (color, label) = if args.hard { (BLUE, "hard") } else { (GREY, "soft") };
    let mut plot = Plot::new(window, PLOT_WIDTH).title(format!(
        "{} {label} scaled graph, {} regions",
        model.kind(),
        approx.len()
    ));
    plot.fill(&raster, color, 0.6);
    plot.curves(&raster.boundary(), BLACK, 1.2);
    if let SystemModel::Lti(sys) = model {
        if let Ok(cloud) = spectrum(sys, &default_freq_grid(sys)) {
            plot.dots(&cloud.points, RED, 0.8);
        }
    }
    write(&args.out, "region.svg", &plot.finish(&comment(&hash, "sweep region")))?;

    println!(
        "{} regions ({} optimal, {} infeasible), gain bound {:.6}, {:.2} s",
        approx.len(),
        result.count(&sgraph_core::solve::SolveStatus::Optimal),
        result.count(&sgraph_core::solve::SolveStatus::Infeasible),
        gamma,
        result.seconds
    );
    Ok(())
}

fn exact(args: &ExactArgs) -> anyhow::Result<()> {
    check_resolution(args.plot.resolution)?;
    let window = parse_window(args.plot.window.as_deref())?;
    let loaded = load(&args.system)?;
    let SystemModel::Lti(sys) = &loaded.model else {
        return Err(Error::Unsupported(format!(
            "exact scaled graphs need an LTI system, got a {} system",
            loaded.model.kind()
        ))
        .into());
    };
    prepare_out(&args.out)?;
    let grid = default_freq_grid(sys);
    let sg = exact_sg(sys, &grid)?;
    let hash = config_hash("exact", args, json!({ "system": loaded.model.content_hash() }));

    let mut csv = format!("# config_hash: {hash}\n# content: exact boundary, branch 0 below the real axis\nbranch,re,im\n");
    for (k, line) in sg.boundary.iter().enumerate() {
        for z in line {
            csv.push_str(&format!("{k},{},{}\n", z.re, z.im));
        }
    }
    write(&args.out, "boundary.csv", &csv)?;

    let samples = sg.boundary_samples();
    let window = match window {
        Some(w) => w,
        None => fit_window(&samples)?,
    };
    let raster = rasterize(&sg, &window, args.plot.resolution)?;
    let mut plot = Plot::new(window, PLOT_WIDTH).title("exact scaled graph");
    plot.fill(&raster, GREY, 0.35);
    let lines: Vec<Polyline> = sg.boundary.clone();
    plot.curves(&lines, BLACK, 1.5);
    if let Some(z) = sg.singleton() {
        plot.dots(&[z], BLACK, 3.0);
    }
    write(&args.out, "exact.svg", &plot.finish(&comment(&hash, "exact scaled graph")))?;
    println!("{} hull vertices, {} boundary points", sg.bk_hull.len(), samples.len());
    Ok(())
}

fn sample(args: &SampleArgs) -> anyhow::Result<()> {
    check_resolution(args.plot.resolution)?;
    if args.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    let window = parse_window(args.plot.window.as_deref())?;
    let loaded = load(&args.system)?;
    let regions = args
        .regions
        .as_deref()
        .map(|p| read_regions(p, SgMode::Soft))
        .transpose()?;
    let regions_hash = args.regions.as_deref().map(file_hash).transpose()?;
    prepare_out(&args.out)?;
    let hash = config_hash(
        "sample",
        args,
        json!({ "system": loaded.model.content_hash(), "regions": regions_hash }),
    );

    let ranges = InputRanges::default();
    let cloud = sample_cloud(&loaded.model, args.count, args.seed, &ranges)?;
    write(&args.out, "cloud.csv", &cloud.to_csv(&comment(&hash, "sampled scaled-graph points")))?;

    let containment = regions.as_ref().map(|r| cloud.containment(r));
    let summary = json!({
        "config_hash": hash,
        "system_hash": loaded.model.content_hash(),
        "count": args.count,
        "seed": args.seed,
        "input_ranges": ranges,
        "points": cloud.samples.len(),
        "untrusted": cloud.untrusted,
        "failed": cloud.failed,
        "max_gain": cloud.trusted().map(|s| s.rho).fold(0.0, f64::max),
        "containment": containment,
    });
    write_json(&args.out, "sample_summary.json", &summary)?;

    let points: Vec<Cplx> = cloud.trusted().flat_map(|s| [s.z(), s.z().conj()]).collect();
    let window = match window {
        Some(w) => w,
        None => match &regions {
            Some(r) => Window::square(0.0, 1.2 * r.gain_bound().unwrap_or(1.0))?,
            None => fit_window(&points)?,
        },
    };
    let mut plot = Plot::new(window, PLOT_WIDTH).title(format!("{} samples, seed {}", args.count, args.seed));
    if let Some(r) = &regions {
        let raster = rasterize(r, &window, args.plot.resolution)?;
        plot.fill(&raster, GREY, 0.5);
        plot.curves(&raster.boundary(), BLACK, 1.0);
    }
    plot.dots(&points, GREEN, 1.6);
    write(&args.out, "samples.svg", &plot.finish(&comment(&hash, "sample cloud")))?;

    println!(
        "{} points, {} untrusted, {} failed",
        cloud.samples.len(),
        cloud.untrusted,
        cloud.failed
    );
    if let Some(c) = containment {
        println!("containment {}/{} (worst margin {:.3e})", c.inside, c.total, c.worst_margin);
        if c.inside < c.total {
            return Err(anyhow!("{} sample points fall outside the region set", c.total - c.inside));
        }
    }
    Ok(())
}

fn feedback(args: &FeedbackArgs) -> anyhow::Result<()> {
    let window = parse_window(args.window.as_deref())?;
    check_resolution(args.resolution)?;
    let tau_grid = match &args.tau_grid {
        Some(t) => parse_tau_grid(t)?,
        None => default_tau_grid(),
    };
    let a1 = read_regions(&args.h1, SgMode::Soft)?;
    let a2 = read_regions(&args.h2, SgMode::Soft)?;
    let inputs = json!({ "h1": file_hash(&args.h1)?, "h2": file_hash(&args.h2)? });
    prepare_out(&args.out)?;
    let hash = config_hash("feedback", args, inputs);

    let report = check_feedback(&a1, &a2, &tau_grid, window.as_ref(), args.resolution)?;
    let mut value = report.to_json();
    value["config_hash"] = json!(hash);
    write_json(&args.out, "feedback.json", &value)?;

    let w = report.window;
    let res = args.resolution.min(512);
    let (inverse, _) = negate_then_invert(&a1)?;
    let scaled = a2.scaled(report.tau_at_min)?;
    let mut plot = Plot::new(w, PLOT_WIDTH).title(format!(
        "inverse graph of -H1 (grey) and tau H2 (blue), tau = {:.4}",
        report.tau_at_min
    ));
    let r1 = rasterize(&inverse, &w, res)?;
    let r2 = rasterize(&scaled, &w, res)?;
    plot.fill(&r1, GREY, 0.5);
    plot.fill(&r2, BLUE, 0.5);
    plot.curves(&r1.boundary(), BLACK, 1.0);
    plot.curves(&r2.boundary(), BLACK, 1.0);
    if let Some([p, q]) = report.closest {
        plot.segment(Cplx::new(p[0], p[1]), Cplx::new(q[0], q[1]), RED);
    }
    write(&args.out, "feedback.svg", &plot.finish(&comment(&hash, "feedback separation overlay")))?;

    match report.gain_bound {
        Some(g) => println!(
            "{:?}: r_min {:.4} at tau {:.4} (+/- {:.2e}), gain bound {:.4}",
            report.verdict, report.r_min, report.tau_at_min, report.uncertainty, g
        ),
        None => println!(
            "{:?}: r_min {:.4} at tau {:.4} (+/- {:.2e}), no gain bound",
            report.verdict, report.r_min, report.tau_at_min, report.uncertainty
        ),
    }
    Ok(())
}

fn invert(args: &InvertArgs) -> anyhow::Result<()> {
    let approx = read_regions(&args.regions, SgMode::Soft)?;
    prepare_out(&args.out)?;
    let hash = config_hash("invert", args, json!({ "regions": file_hash(&args.regions)? }));
    let (image, dropped) = if args.negate {
        negate_then_invert(&approx)?
    } else {
        let regions = approx.regions().map(|r| r.inverted()).collect();
        (SgApproximation::from_regions(regions, approx.mode)?, Vec::new())
    };
    save_regions(&image, args.out.join("inverse_regions.json"))?;
    let regions: Vec<_> = image.regions().copied().collect();
    write_json(
        &args.out,
        "inverse_summary.json",
        &json!({
            "config_hash": hash,
            "negated": args.negate,
            "regions": regions.len(),
            "dropped": dropped,
        }),
    )?;
    println!("{} regions, {} dropped", regions.len(), dropped.len());
    Ok(())
}

fn render(args: &RenderArgs) -> anyhow::Result<()> {
    check_resolution(args.plot.resolution)?;
    let window = parse_window(args.plot.window.as_deref())?;
    let mode = if args.hard { SgMode::Hard } else { SgMode::Soft };
    let sets: Vec<SgApproximation> = args
        .regions
        .iter()
        .map(|p| read_regions(p, mode))
        .collect::<anyhow::Result<_>>()?;
    let points = args.points.as_deref().map(read_points).transpose()?;
    let mut inputs: Vec<String> = args.regions.iter().map(|p| file_hash(p)).collect::<anyhow::Result<_>>()?;
    if let Some(p) = &args.points {
        inputs.push(file_hash(p)?);
    }
    prepare_out(&args.out)?;
    let hash = config_hash("render", args, json!(inputs));

    let window = match window {
        Some(w) => w,
        None => {
            let g = sets
                .iter()
                .filter_map(|s| s.gain_bound())
                .fold(0.0, f64::max);
            Window::square(0.0, 1.2 * if g > 0.0 { g } else { 1.0 })?
        }
    };
    let base = if args.hard { BLUE } else { GREY };
    let mut plot = Plot::new(window, PLOT_WIDTH);
    for (k, set) in sets.iter().enumerate().rev() {
        let raster = rasterize(set, &window, args.plot.resolution)?;
        let color = if k == 0 { base } else { GREEN };
        plot.fill(&raster, color, 0.45);
        plot.curves(&raster.boundary(), BLACK, 1.0);
    }
    if let Some(p) = &points {
        plot.dots(p, RED, 1.6);
    }
    write(&args.out, "render.svg", &plot.finish(&comment(&hash, "region sets")))?;
    Ok(())
}

/// `re,im` from the first two columns of a CSV with a header row; `#` lines
/// are skipped.
fn read_points(path: &Path) -> anyhow::Result<Vec<Cplx>> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (k, line) in text.lines().filter(|l| !l.starts_with('#')).enumerate().skip(1) {
        let mut cols = line.split(',');
        let mut next = || -> anyhow::Result<f64> {
            cols.next()
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| usage(format!("{}: bad row {}", path.display(), k + 1)))
        };
        let (re, im) = (next()?, next()?);
        out.push(Cplx::new(re, im));
    }
    Ok(out)
}

//! Command-line front end: parse geometry/metric/section configs, run the
//! lab operations and emit machine-readable reports plus plot-ready CSV.
//!
//! Exit codes: 0 pass/success, 1 verified failure (e.g. a growth check
//! fails), 2 usage/config error, 3 numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use toric_syz::analysis::{
    fiber_rescale, harmonic_solve, slag_residual, slope_report, slope_topological,
    QuadratureOptions,
};
use toric_syz::config::{GeometryConfig, MetricConfig, SectionConfig};
use toric_syz::error::Error;
use toric_syz::growth::{check_growth, infer_class, infer_class_report, GrowthConfig, GrowthReport, RayEstimate, Verdict};
use toric_syz::kaehler::{LegendrePair, ToricPotential};
use toric_syz::metrics::{guillemin_field, MetricPotential};
use toric_syz::report::Json;
use toric_syz::syz::{inverse_transform, transform, LagrangianSection};

#[derive(Parser)]
#[command(name = "toric-syz", version, about = "Numerical lab for toric mirror sections")]
struct Cli {
    /// Seed for the sampled checks (frozen coordinates, direction cover).
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads permitted for internal loops (evaluation order and
    /// output are deterministic regardless).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Directory for reports and CSV files.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Fan validity: primitivity, smoothness, completeness.
    Fan {
        #[command(subcommand)]
        cmd: FanCmd,
    },
    /// Moment polytope data.
    Polytope {
        #[command(subcommand)]
        cmd: PolytopeCmd,
    },
    /// Reference metric evaluation.
    Metric {
        #[command(subcommand)]
        cmd: MetricCmd,
    },
    /// The transform between metrics and sections.
    Syz {
        #[command(subcommand)]
        cmd: SyzCmd,
    },
    /// Growth-condition verification and class inference.
    Growth {
        #[command(subcommand)]
        cmd: GrowthCmd,
    },
    /// Normalized slope: quadrature against topology.
    Slope(SlopeArgs),
    /// Harmonic section solver.
    Harmonic {
        #[command(subcommand)]
        cmd: HarmonicCmd,
    },
    /// Special-Lagrangian residual evaluation.
    Slag {
        #[command(subcommand)]
        cmd: SlagCmd,
    },
    /// Transform, infer, invert and compare.
    Roundtrip(RoundtripArgs),
}

#[derive(Subcommand)]
enum FanCmd {
    Check(FanCheckArgs),
}

#[derive(Args)]
struct FanCheckArgs {
    #[arg(long)]
    geometry: PathBuf,
}

#[derive(Subcommand)]
enum PolytopeCmd {
    Info(GeometryArgs),
}

#[derive(Subcommand)]
enum MetricCmd {
    Guillemin(GuilleminArgs),
}

#[derive(Subcommand)]
enum SyzCmd {
    Transform(TransformArgs),
    Invert(SectionArgs),
}

#[derive(Subcommand)]
enum GrowthCmd {
    Check(GrowthCheckArgs),
    Infer(GrowthInferArgs),
}

#[derive(Args)]
struct GrowthInferArgs {
    #[command(flatten)]
    src: SectionArgs,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Subcommand)]
enum HarmonicCmd {
    Solve(HarmonicArgs),
}

#[derive(Subcommand)]
enum SlagCmd {
    Residual(SlagArgs),
}

#[derive(Args)]
struct GeometryArgs {
    #[arg(long)]
    geometry: PathBuf,
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Args)]
struct GuilleminArgs {
    #[command(flatten)]
    geo: GeometryArgs,
    /// Divisor entries, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    divisor: Vec<i64>,
    /// Evaluation point, comma separated (defaults to the origin).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    xi: Option<Vec<f64>>,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    geo: GeometryArgs,
    #[arg(long)]
    metric: PathBuf,
    /// Half-width of the sampling box for the CSV export.
    #[arg(long, default_value_t = 6.0)]
    grid_box: f64,
    /// Samples per axis for the CSV export.
    #[arg(long, default_value_t = 41)]
    grid_res: usize,
}

#[derive(Args)]
struct SectionArgs {
    #[command(flatten)]
    geo: GeometryArgs,
    #[arg(long)]
    section: Option<PathBuf>,
    #[arg(long)]
    metric: Option<PathBuf>,
}

#[derive(Args)]
struct GrowthCheckArgs {
    #[command(flatten)]
    src: SectionArgs,
    /// Divisor to check against (defaults to the metric's divisor).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    divisor: Option<Vec<i64>>,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Args)]
struct WindowArgs {
    /// Window start depth for the tail fits.
    #[arg(long, default_value_t = 6.0)]
    t0: f64,
    /// Window sample spacing.
    #[arg(long, default_value_t = 0.5)]
    dt: f64,
    /// Samples per window.
    #[arg(long, default_value_t = 8)]
    window_samples: usize,
}

impl WindowArgs {
    fn apply(&self, cfg: &mut GrowthConfig) -> Result<(), Error> {
        if self.t0 <= 0.0 || self.dt <= 0.0 || self.window_samples < 3 {
            return Err(Error::InvalidInput(
                "window parameters must be positive (at least 3 samples)".into(),
            ));
        }
        cfg.window.t0 = self.t0;
        cfg.window.dt = self.dt;
        cfg.window.m = self.window_samples;
        Ok(())
    }
}

#[derive(Args)]
struct SlopeArgs {
    #[command(flatten)]
    src: SectionArgs,
    /// Divisor of the lift; defaults to the metric's divisor or inference.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    divisor: Option<Vec<i64>>,
}

#[derive(Args)]
struct HarmonicArgs {
    #[command(flatten)]
    geo: GeometryArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    divisor: Vec<i64>,
    #[arg(long, default_value_t = 8.0)]
    grid_box: f64,
    /// Odd samples per axis; 0 picks 257 for curves and 129 for surfaces.
    #[arg(long, default_value_t = 0)]
    grid_res: usize,
}

#[derive(Args)]
struct SlagArgs {
    #[command(flatten)]
    src: SectionArgs,
    #[arg(long, allow_hyphen_values = true)]
    theta: f64,
    /// Rescale the fiber by this factor before evaluating.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 101)]
    per_axis: usize,
}

#[derive(Args)]
struct RoundtripArgs {
    #[command(flatten)]
    geo: GeometryArgs,
    #[arg(long)]
    metric: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}

fn classify(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::MalformedFan(_) | Error::ZeroCoordinate => 2,
        Error::NotAmple(_) | Error::NotExtendable(_) => 1,
        _ => 3,
    }
}

#[derive(Default)]
struct Inputs {
    hashes: Vec<(String, String)>,
}

impl Inputs {
    fn read(&mut self, path: &Path) -> Result<String, Error> {
        let bytes =
            fs::read(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        let mut h = Sha256::new();
        h.update(&bytes);
        self.hashes
            .push((path.display().to_string(), format!("{:x}", h.finalize())));
        String::from_utf8(bytes)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
    }
}

fn load_context(geo: &GeometryArgs, inputs: &mut Inputs) -> Result<ToricPotential, Error> {
    let text = inputs.read(&geo.geometry)?;
    let cfg = GeometryConfig::parse(&text)?;
    let polytope = cfg.polytope()?;
    match &geo.weights {
        Some(wpath) => {
            let wtext = inputs.read(wpath)?;
            let w = toric_syz::config::parse_weights(&wtext, &polytope)?;
            ToricPotential::with_weights(polytope, &w)
        }
        None => ToricPotential::unit_weights(polytope),
    }
}

fn load_section(
    args: &SectionArgs,
    inputs: &mut Inputs,
) -> Result<(ToricPotential, LagrangianSection), Error> {
    let ctx = load_context(&args.geo, inputs)?;
    match (&args.section, &args.metric) {
        (Some(spath), None) => {
            let text = inputs.read(spath)?;
            let cfg = SectionConfig::parse(&text)?;
            let s = cfg.build(&ctx)?;
            Ok((ctx, s))
        }
        (None, Some(mpath)) => {
            let text = inputs.read(mpath)?;
            let cfg = MetricConfig::parse(&text)?;
            let m = cfg.build(&ctx)?;
            let s = transform(&m)?;
            Ok((ctx, s))
        }
        _ => Err(Error::InvalidInput(
            "provide exactly one of --section or --metric".into(),
        )),
    }
}

fn envelope(cli: &Cli, command: &str, inputs: &Inputs) -> Json {
    let mut obj = Json::obj();
    obj.push("tool", Json::Str("toric-syz".into()));
    obj.push("version", Json::Str(env!("CARGO_PKG_VERSION").into()));
    obj.push("command", Json::Str(command.into()));
    obj.push("seed", Json::Int(cli.seed as i64));
    obj.push("threads", Json::Int(cli.threads as i64));
    let mut files = Json::obj();
    for (path, hash) in &inputs.hashes {
        files.push(path, Json::Str(format!("sha256:{hash}")));
    }
    obj.push("inputs", files);
    obj
}

fn write_report(cli: &Cli, name: &str, report: &Json) -> Result<PathBuf, Error> {
    fs::create_dir_all(&cli.output_dir)
        .map_err(|e| Error::InvalidInput(format!("output dir: {e}")))?;
    let path = cli.output_dir.join(name);
    fs::write(&path, report.to_string_pretty())
        .map_err(|e| Error::InvalidInput(format!("writing {}: {e}", path.display())))?;
    Ok(path)
}

fn write_csv(
    cli: &Cli,
    name: &str,
    header: &[&str],
    rows: &[Vec<f64>],
) -> Result<PathBuf, Error> {
    fs::create_dir_all(&cli.output_dir)
        .map_err(|e| Error::InvalidInput(format!("output dir: {e}")))?;
    let path = cli.output_dir.join(name);
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    fs::write(&path, out)
        .map_err(|e| Error::InvalidInput(format!("writing {}: {e}", path.display())))?;
    Ok(path)
}

fn growth_config(cli: &Cli) -> GrowthConfig {
    GrowthConfig {
        seed: cli.seed,
        ..GrowthConfig::default()
    }
}

fn growth_json(report: &GrowthReport) -> Json {
    let mut checks = Vec::new();
    for e in &report.entries {
        let dirs_len = match e.condition {
            1 => 1,
            2 => 3,
            _ => 2,
        };
        let dirs: Vec<i64> = e.dirs[..dirs_len].iter().map(|&d| d as i64 + 1).collect();
        let mut o = Json::obj();
        o.push("cone", Json::Int(e.cone as i64 + 1));
        o.push("condition", Json::Int(e.condition as i64));
        o.push("directions", Json::ints(&dirs));
        o.push("frozen_config", Json::Int(e.frozen_config as i64));
        o.push("limit_lhs", e.limit_lhs.map_or(Json::Null, Json::Num));
        o.push("limit_rhs", e.limit_rhs.map_or(Json::Null, Json::Num));
        o.push("residual", Json::Num(e.residual));
        o.push(
            "verdict",
            Json::Str(
                match e.verdict {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "fail",
                    Verdict::Inconclusive => "inconclusive",
                }
                .into(),
            ),
        );
        if !e.note.is_empty() {
            o.push("note", Json::Str(e.note.clone()));
        }
        checks.push(o);
    }
    let (pass, fail, inconclusive) = report.counts();
    let mut obj = Json::obj();
    obj.push("divisor", Json::ints(&report.divisor));
    obj.push("pass", Json::Bool(report.pass()));
    obj.push("no_failures", Json::Bool(report.no_failures()));
    obj.push("entries_pass", Json::Int(pass as i64));
    obj.push("entries_fail", Json::Int(fail as i64));
    obj.push("entries_inconclusive", Json::Int(inconclusive as i64));
    obj.push("checks", Json::Arr(checks));
    obj
}

fn rays_json(rays: &[RayEstimate]) -> Json {
    Json::Arr(
        rays.iter()
            .map(|r| {
                let mut o = Json::obj();
                o.push("ray", Json::Int(r.ray as i64 + 1));
                o.push("limit", r.limit.map_or(Json::Null, Json::Num));
                o.push("rounded", r.rounded.map_or(Json::Null, Json::Int));
                if !r.note.is_empty() {
                    o.push("note", Json::Str(r.note.clone()));
                }
                o
            })
            .collect(),
    )
}

fn sample_box(dim: usize, half: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    let step = 2.0 * half / (per_axis - 1) as f64;
    match dim {
        1 => {
            for i in 0..per_axis {
                pts.push(vec![-half + step * i as f64]);
            }
        }
        _ => {
            for i in 0..per_axis {
                for j in 0..per_axis {
                    pts.push(vec![-half + step * i as f64, -half + step * j as f64]);
                }
            }
        }
    }
    pts
}

/// Interior polytope grid with the given facet margin.
fn polytope_grid(ctx: &ToricPotential, per_axis: usize, margin: f64) -> Vec<Vec<f64>> {
    let p = ctx.polytope();
    let n = p.dim();
    let lo: Vec<f64> = (0..n)
        .map(|j| p.vertices().iter().map(|v| v[j]).min().unwrap() as f64)
        .collect();
    let hi: Vec<f64> = (0..n)
        .map(|j| p.vertices().iter().map(|v| v[j]).max().unwrap() as f64)
        .collect();
    let mut pts = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let x: Vec<f64> = (0..n)
            .map(|j| lo[j] + (idx[j] as f64 + 0.5) / per_axis as f64 * (hi[j] - lo[j]))
            .collect();
        if p.min_facet_value(&x) >= margin {
            pts.push(x);
        }
        let mut k = n;
        loop {
            if k == 0 {
                return pts;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Error> {
    if cli.threads == 0 {
        return Err(Error::InvalidInput("--threads must be at least 1".into()));
    }
    match &cli.command {
        Commands::Fan {
            cmd: FanCmd::Check(args),
        } => {
            let mut inputs = Inputs::default();
            let text = inputs.read(&args.geometry)?;
            let cfg = GeometryConfig::parse(&text)?;
            let fan = cfg.fan()?;
            let report = fan.validate();
            let mut obj = envelope(cli, "fan check", &inputs);
            obj.push(
                "primitive",
                Json::Arr(report.primitive.iter().map(|&b| Json::Bool(b)).collect()),
            );
            obj.push(
                "cone_unimodular",
                Json::Arr(
                    report
                        .cone_unimodular
                        .iter()
                        .map(|&b| Json::Bool(b))
                        .collect(),
                ),
            );
            obj.push("generators_covered", Json::Bool(report.generators_covered));
            obj.push("complete", Json::Bool(report.complete));
            obj.push("valid", Json::Bool(report.is_valid()));
            let path = write_report(cli, "fan_check.json", &obj)?;
            println!(
                "fan check: {} ({})",
                if report.is_valid() { "valid" } else { "invalid" },
                path.display()
            );
            Ok(if report.is_valid() { 0 } else { 1 })
        }
        Commands::Polytope {
            cmd: PolytopeCmd::Info(args),
        } => {
            let mut inputs = Inputs::default();
            let ctx = load_context(args, &mut inputs)?;
            let p = ctx.polytope();
            let mut obj = envelope(cli, "polytope info", &inputs);
            obj.push("dim", Json::Int(p.dim() as i64));
            obj.push("offsets", Json::ints(p.offsets()));
            obj.push(
                "vertices",
                Json::Arr(p.vertices().iter().map(|v| Json::ints(v)).collect()),
            );
            obj.push(
                "lattice_points",
                Json::Arr(p.lattice_points().iter().map(|v| Json::ints(v)).collect()),
            );
            obj.push("volume", Json::Num(p.volume()));
            let fv: Vec<f64> = (0..p.fan().ray_count())
                .map(|i| p.facet_volume(i))
                .collect();
            obj.push("facet_lattice_volumes", Json::nums(&fv));
            let path = write_report(cli, "polytope_info.json", &obj)?;
            println!(
                "polytope: {} vertices, volume {} ({})",
                p.vertices().len(),
                p.volume(),
                path.display()
            );
            Ok(0)
        }
        Commands::Metric {
            cmd: MetricCmd::Guillemin(args),
        } => {
            let mut inputs = Inputs::default();
            let ctx = load_context(&args.geo, &mut inputs)?;
            let field = guillemin_field(&ctx, &args.divisor)?;
            let xi = args.xi.clone().unwrap_or_else(|| vec![0.0; ctx.dim()]);
            if xi.len() != ctx.dim() {
                return Err(Error::InvalidInput("--xi has the wrong dimension".into()));
            }
            let (v, g, h) = field.eval(&xi)?;
            let mu = ctx.moment_map(&xi)?;
            let mut obj = envelope(cli, "metric guillemin", &inputs);
            obj.push("divisor", Json::ints(&args.divisor));
            obj.push("xi", Json::nums(&xi));
            obj.push("value", Json::Num(v));
            obj.push("gradient", Json::nums(&g));
            obj.push("hessian", Json::nums(&h));
            obj.push("moment_map", Json::nums(&mu));
            let path = write_report(cli, "metric_guillemin.json", &obj)?;
            println!("guillemin potential at {:?}: {} ({})", xi, v, path.display());
            Ok(0)
        }
        Commands::Syz { cmd } => match cmd {
            SyzCmd::Transform(args) => {
                let mut inputs = Inputs::default();
                let ctx = load_context(&args.geo, &mut inputs)?;
                let mtext = inputs.read(&args.metric)?;
                let m = MetricConfig::parse(&mtext)?.build(&ctx)?;
                let s = transform(&m)?;
                let n = ctx.dim();
                let mut rows = Vec::new();
                for p in sample_box(n, args.grid_box, args.grid_res) {
                    if !s.potential().contains(&p) {
                        continue;
                    }
                    let y = s.y(&p)?;
                    let mut row = p.clone();
                    row.extend(y);
                    rows.push(row);
                }
                let mut header: Vec<String> = (1..=n).map(|j| format!("xi_{j}")).collect();
                header.extend((1..=n).map(|j| format!("y_{j}")));
                let hdr: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
                let csv_xi = write_csv(cli, "section_xi.csv", &hdr, &rows)?;

                let lp = LegendrePair::new(ctx.clone());
                let mut rows_x = Vec::new();
                for x in polytope_grid(&ctx, args.grid_res, 1e-2) {
                    let y = s.y_over_polytope(&lp, &x)?;
                    let mut row = x.clone();
                    row.extend(y);
                    rows_x.push(row);
                }
                let mut header_x: Vec<String> = (1..=n).map(|j| format!("x_{j}")).collect();
                header_x.extend((1..=n).map(|j| format!("y_{j}")));
                let hdr_x: Vec<&str> = header_x.iter().map(|s| s.as_str()).collect();
                let csv_x = write_csv(cli, "section_x.csv", &hdr_x, &rows_x)?;

                let class = ctx.polytope().picard_reduce(m.divisor())?;
                let mut obj = envelope(cli, "syz transform", &inputs);
                obj.push("divisor", Json::ints(m.divisor()));
                obj.push("class_canonical", Json::ints(&class.canonical));
                obj.push("xi_csv", Json::Str(csv_xi.display().to_string()));
                obj.push("x_csv", Json::Str(csv_x.display().to_string()));
                let path = write_report(cli, "syz_transform.json", &obj)?;
                println!(
                    "transformed metric with divisor {:?} ({})",
                    m.divisor(),
                    path.display()
                );
                Ok(0)
            }
            SyzCmd::Invert(args) => {
                let mut inputs = Inputs::default();
                let (ctx, s) = load_section(args, &mut inputs)?;
                let cfg = growth_config(cli);
                let mut obj = envelope(cli, "syz invert", &inputs);
                match inverse_transform(&s, &cfg) {
                    Ok((m, report)) => {
                        obj.push("extendable", Json::Bool(true));
                        obj.push("divisor", Json::ints(m.divisor()));
                        let class = ctx.polytope().picard_reduce(m.divisor())?;
                        obj.push("class_canonical", Json::ints(&class.canonical));
                        obj.push("growth", growth_json(&report));
                        let path = write_report(cli, "syz_invert.json", &obj)?;
                        println!(
                            "section is the transform of a metric with divisor {:?} ({})",
                            m.divisor(),
                            path.display()
                        );
                        Ok(0)
                    }
                    Err(Error::NotExtendable(msg)) => {
                        obj.push("extendable", Json::Bool(false));
                        obj.push("reason", Json::Str(msg.clone()));
                        let infer = infer_class_report(&s, &cfg)?;
                        obj.push("ray_estimates", rays_json(&infer.rays));
                        if let Some(g) = &infer.growth {
                            obj.push("growth", growth_json(g));
                        }
                        let path = write_report(cli, "syz_invert.json", &obj)?;
                        println!("section is not extendable ({})", path.display());
                        Ok(1)
                    }
                    Err(e) => Err(e),
                }
            }
        },
        Commands::Growth { cmd } => match cmd {
            GrowthCmd::Check(args) => {
                let mut inputs = Inputs::default();
                let (_, s) = load_section(&args.src, &mut inputs)?;
                let divisor = match (&args.divisor, s.lift_divisor()) {
                    (Some(a), _) => a.clone(),
                    (None, Some(a)) => a.to_vec(),
                    (None, None) => {
                        return Err(Error::InvalidInput(
                            "--divisor is required for raw sections".into(),
                        ))
                    }
                };
                let mut cfg = growth_config(cli);
                args.window.apply(&mut cfg)?;
                let report = check_growth(&s, &divisor, &cfg)?;
                let mut obj = envelope(cli, "growth check", &inputs);
                obj.push("growth", growth_json(&report));
                let path = write_report(cli, "growth_check.json", &obj)?;
                let (p, f, i) = report.counts();
                println!(
                    "growth check vs {:?}: {} ({} pass / {} fail / {} inconclusive) ({})",
                    divisor,
                    if report.pass() { "pass" } else { "fail" },
                    p,
                    f,
                    i,
                    path.display()
                );
                Ok(if report.pass() { 0 } else { 1 })
            }
            GrowthCmd::Infer(args) => {
                let mut inputs = Inputs::default();
                let (_, s) = load_section(&args.src, &mut inputs)?;
                let mut cfg = growth_config(cli);
                args.window.apply(&mut cfg)?;
                let infer = infer_class_report(&s, &cfg)?;
                let mut obj = envelope(cli, "growth infer", &inputs);
                obj.push("ray_estimates", rays_json(&infer.rays));
                match (&infer.divisor, &infer.growth) {
                    (Some(a), Some(g)) => {
                        obj.push("divisor", Json::ints(a));
                        obj.push("growth", growth_json(g));
                        let path = write_report(cli, "growth_infer.json", &obj)?;
                        println!("inferred divisor {:?} ({})", a, path.display());
                        Ok(0)
                    }
                    _ => {
                        obj.push("divisor", Json::Null);
                        if let Some(g) = &infer.growth {
                            obj.push("growth", growth_json(g));
                        }
                        let path = write_report(cli, "growth_infer.json", &obj)?;
                        println!("no divisor class could be inferred ({})", path.display());
                        Ok(1)
                    }
                }
            }
        },
        Commands::Slope(args) => {
            let mut inputs = Inputs::default();
            // a bare --divisor means the reference metric of that divisor
            let (ctx, s) = if args.src.section.is_none() && args.src.metric.is_none() {
                let divisor = args.divisor.clone().ok_or_else(|| {
                    Error::InvalidInput(
                        "provide --section, --metric, or --divisor".into(),
                    )
                })?;
                let ctx = load_context(&args.src.geo, &mut inputs)?;
                let m = MetricPotential::guillemin(ctx.clone(), divisor)?;
                let s = transform(&m)?;
                (ctx, s)
            } else {
                load_section(&args.src, &mut inputs)?
            };
            let divisor = match (&args.divisor, s.lift_divisor()) {
                (Some(a), _) => a.clone(),
                (None, Some(a)) => a.to_vec(),
                (None, None) => {
                    let cfg = growth_config(cli);
                    match infer_class(&s, &cfg)? {
                        Some((a, _)) => a,
                        None => {
                            return Err(Error::NotExtendable(
                                "slope needs a divisor and inference failed".into(),
                            ))
                        }
                    }
                }
            };
            // attach the divisor by writing the section as reference + rest
            let correction = s
                .potential()
                .add(&guillemin_field(&ctx, &divisor)?.negate());
            let m = MetricPotential::new(ctx.clone(), divisor, correction)?;
            let s = transform(&m)?;
            let result = slope_report(&s, &QuadratureOptions::default())?;
            let mut obj = envelope(cli, "slope", &inputs);
            obj.push("divisor", Json::ints(&result.divisor));
            obj.push("quadrature", Json::Num(result.quadrature));
            obj.push("topological", Json::Num(result.topological));
            obj.push(
                "difference",
                Json::Num((result.quadrature - result.topological).abs()),
            );
            obj.push("volume", Json::Num(result.volume));
            obj.push(
                "facet_contributions",
                Json::nums(&result.facet_contributions),
            );
            let path = write_report(cli, "slope.json", &obj)?;
            println!(
                "slope: quadrature {} vs topological {} ({})",
                result.quadrature,
                result.topological,
                path.display()
            );
            Ok(0)
        }
        Commands::Harmonic {
            cmd: HarmonicCmd::Solve(args),
        } => {
            let mut inputs = Inputs::default();
            let ctx = load_context(&args.geo, &mut inputs)?;
            let res = if args.grid_res == 0 {
                if ctx.dim() == 1 {
                    257
                } else {
                    129
                }
            } else {
                args.grid_res
            };
            let sol = harmonic_solve(&ctx, &args.divisor, args.grid_box, res)?;
            let topo = slope_topological(ctx.polytope(), &args.divisor);
            let mut rows = Vec::new();
            let h = 2.0 * args.grid_box / (res - 1) as f64;
            match ctx.dim() {
                1 => {
                    for i in 0..res {
                        let xi = [-args.grid_box + h * i as f64];
                        let f = sol.correction.eval(&xi)?.0;
                        let g = sol.potential.value(&xi)?;
                        rows.push(vec![xi[0], f, g]);
                    }
                }
                _ => {
                    for i in 0..res {
                        for j in 0..res {
                            let xi = [
                                -args.grid_box + h * i as f64,
                                -args.grid_box + h * j as f64,
                            ];
                            let f = sol.correction.eval(&xi)?.0;
                            let g = sol.potential.value(&xi)?;
                            rows.push(vec![xi[0], xi[1], f, g]);
                        }
                    }
                }
            }
            let header: Vec<&str> = if ctx.dim() == 1 {
                vec!["xi_1", "f", "g"]
            } else {
                vec!["xi_1", "xi_2", "f", "g"]
            };
            let csv = write_csv(cli, "harmonic_field.csv", &header, &rows)?;
            let mut obj = envelope(cli, "harmonic solve", &inputs);
            obj.push("divisor", Json::ints(&args.divisor));
            obj.push("lambda", Json::Num(sol.lambda));
            obj.push("topological_slope", Json::Num(topo));
            obj.push("grid_box", Json::Num(args.grid_box));
            obj.push("grid_res", Json::Int(res as i64));
            obj.push("residual_max", Json::Num(sol.residual_max));
            obj.push("residual_rms", Json::Num(sol.residual_rms));
            obj.push("field_csv", Json::Str(csv.display().to_string()));
            let path = write_report(cli, "harmonic_solve.json", &obj)?;
            println!(
                "harmonic: lambda {} (topological slope {}) residual max {} ({})",
                sol.lambda,
                topo,
                sol.residual_max,
                path.display()
            );
            Ok(0)
        }
        Commands::Slag {
            cmd: SlagCmd::Residual(args),
        } => {
            let mut inputs = Inputs::default();
            let (ctx, s) = load_section(&args.src, &mut inputs)?;
            let s = match args.epsilon {
                Some(eps) if eps > 0.0 => fiber_rescale(&s, eps),
                Some(eps) => {
                    return Err(Error::InvalidInput(format!(
                        "--epsilon must be positive, got {eps}"
                    )))
                }
                None => s,
            };
            let r = slag_residual(&s, args.theta, args.per_axis, 1e-2)?;
            let mut rows = Vec::new();
            for (p, v) in r.points.iter().zip(&r.values) {
                let mut row = p.clone();
                row.push(*v);
                rows.push(row);
            }
            let n = ctx.dim();
            let mut header: Vec<String> = (1..=n).map(|j| format!("x_{j}")).collect();
            header.push("residual".into());
            let hdr: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            let csv = write_csv(cli, "slag_residual.csv", &hdr, &rows)?;
            let mut obj = envelope(cli, "slag residual", &inputs);
            obj.push("theta", Json::Num(args.theta));
            if let Some(eps) = args.epsilon {
                obj.push("epsilon", Json::Num(eps));
            }
            obj.push("max_norm", Json::Num(r.max_norm));
            obj.push("points", Json::Int(r.points.len() as i64));
            obj.push("csv", Json::Str(csv.display().to_string()));
            let path = write_report(cli, "slag_residual.json", &obj)?;
            println!("slag residual max {} ({})", r.max_norm, path.display());
            Ok(0)
        }
        Commands::Roundtrip(args) => {
            let mut inputs = Inputs::default();
            let ctx = load_context(&args.geo, &mut inputs)?;
            let mtext = inputs.read(&args.metric)?;
            let m = MetricConfig::parse(&mtext)?.build(&ctx)?;
            let s = transform(&m)?;
            let cfg = growth_config(cli);
            let (m2, report) = inverse_transform(&s, &cfg)?;
            let s2 = transform(&m2)?;
            let class_match = ctx.polytope().picard_equal(m.divisor(), m2.divisor())?;
            let mut worst = 0.0f64;
            for p in sample_box(ctx.dim(), 5.0, 21) {
                if !s.potential().contains(&p) || !s2.potential().contains(&p) {
                    continue;
                }
                let y1 = s.y(&p)?;
                let y2 = s2.y(&p)?;
                for (a, b) in y1.iter().zip(&y2) {
                    worst = worst.max((a - b).abs());
                }
            }
            let pass = class_match && worst <= 1e-8;
            let mut obj = envelope(cli, "roundtrip", &inputs);
            obj.push("divisor", Json::ints(m.divisor()));
            obj.push("recovered_divisor", Json::ints(m2.divisor()));
            obj.push("class_match", Json::Bool(class_match));
            obj.push("y_max_error", Json::Num(worst));
            obj.push("growth", growth_json(&report));
            obj.push("pass", Json::Bool(pass));
            let path = write_report(cli, "roundtrip.json", &obj)?;
            println!(
                "roundtrip: recovered {:?}, y error {} ({})",
                m2.divisor(),
                worst,
                path.display()
            );
            Ok(if pass { 0 } else { 1 })
        }
    }
}

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use niq_core::estimates::{
    all_pairs, box_convolution, default_perturbation, verify_box_lower_bound, verify_first_iterate_lower_bound,
    verify_perturbation_stability, verify_series_ratio, verify_upper_bounds, BoxSpec, EstimateReport, SweepConfig,
};
use niq_core::inflation::{
    choose_params, results_csv, run_experiment, ExperimentOptions, Method, Perturbation, DEFAULT_MARGIN_FACTOR,
};
use niq_core::picard::{time_grid_for, FrameFile, PicardEvaluator, DEFAULT_TIME_FACTOR};
use niq_core::solver::{solve_gdnls, trajectory_frames, PhysicalState, TorusConfig};
use niq_core::spectrum::{make_phi, ParameterSet, RegularityCase, DEFAULT_POINTS_PER_WIDTH};
use niq_core::trees::{count_trees, enumerate_trees_capped, fit_growth_constant, CountTable};
use niq_core::{Error, ErrorClass, SpectralFunction64};

#[derive(Parser)]
#[command(name = "niq", version, about = "Norm-inflation laboratory for the gauged derivative NLS")]
struct Cli {
    /// JSON run configuration; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Count, list or fit ordered trees of a generation.
    Trees(TreesArgs),
    /// Norms of a spectral function or of the block data.
    Norms(DataArgs),
    /// Evaluate a generation, level or truncated series at time T.
    Iterate(IterateArgs),
    /// Run one of the estimate checks.
    Verify(VerifyArgs),
    /// Integrate the gauged equation from spectral data.
    Solve(SolveArgs),
    /// Norm-inflation sweep.
    Inflate(InflateArgs),
}

#[derive(Args)]
struct TreesArgs {
    /// Number of trees in generation (K, P).
    #[arg(long, num_args = 2, value_names = ["K", "P"])]
    count: Option<Vec<usize>>,
    /// Print every tree of generation (K, P).
    #[arg(long, num_args = 2, value_names = ["K", "P"])]
    list: Option<Vec<usize>>,
    /// Count table for k + p <= MAX.
    #[arg(long, value_name = "MAX")]
    table: Option<usize>,
    /// Fitted growth constant C for k + p <= CAP.
    #[arg(long, value_name = "CAP")]
    fit: Option<usize>,
}

/// Block data `φ` from `(s, N, A, R)` or a spectral CSV.
#[derive(Args, Clone, Default)]
struct DataArgs {
    /// Spectral function CSV (xi,re,im) instead of block data.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
    #[arg(long = "N")]
    n: Option<f64>,
    #[arg(long = "A")]
    a: Option<f64>,
    #[arg(long = "R")]
    r: Option<f64>,
    /// Grid points per block width.
    #[arg(long)]
    ppw: Option<usize>,
}

#[derive(Args)]
struct IterateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long = "T")]
    t: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["K", "P"], conflicts_with_all = ["level", "series"])]
    generation: Option<Vec<usize>>,
    #[arg(long, conflicts_with = "series")]
    level: Option<usize>,
    /// Partial sum up to this level.
    #[arg(long)]
    series: Option<usize>,
    #[arg(long)]
    time_factor: Option<f64>,
    /// Write all time frames to this binary file.
    #[arg(long)]
    frames: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// One of 2.5, 2.6, 2.7, 2.8, 2.9, 2.10.
    #[arg(long)]
    lemma: String,
    /// N sweep.
    #[arg(long = "N", num_args = 1..)]
    n: Option<Vec<f64>>,
    #[arg(long)]
    ppw: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long = "T")]
    t: Option<f64>,
    /// Period; default 2π over the data spacing.
    #[arg(long = "L")]
    period: Option<f64>,
    #[arg(long = "M")]
    modes: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// Checkpoint every this many steps.
    #[arg(long)]
    every: Option<usize>,
    #[arg(long)]
    frames: Option<PathBuf>,
}

#[derive(Args)]
struct InflateArgs {
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "N", num_args = 1..)]
    n: Option<Vec<f64>>,
    /// Target n.
    #[arg(long = "n")]
    target: Option<u32>,
    #[arg(long)]
    method: Option<String>,
    /// Radius of the bump ψ; 0 selects ψ = 0.
    #[arg(long)]
    psi_radius: Option<f64>,
    #[arg(long)]
    margin_factor: Option<f64>,
    #[arg(long)]
    ppw: Option<usize>,
    #[arg(long)]
    time_factor: Option<f64>,
    #[arg(long)]
    j_max: Option<usize>,
}

/// Run configuration file. Every entry is optional; flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    s: Option<f64>,
    delta: Option<f64>,
    #[serde(rename = "N")]
    n: Option<NValue>,
    #[serde(rename = "A")]
    a: Option<f64>,
    #[serde(rename = "R")]
    r: Option<f64>,
    #[serde(rename = "T")]
    t: Option<f64>,
    #[serde(rename = "n")]
    target: Option<u32>,
    method: Option<String>,
    psi_radius: Option<f64>,
    margin_factor: Option<f64>,
    points_per_width: Option<usize>,
    time_factor: Option<f64>,
    j_max: Option<usize>,
    #[serde(rename = "L")]
    period: Option<f64>,
    #[serde(rename = "M")]
    modes: Option<usize>,
    dt: Option<f64>,
    every: Option<usize>,
    output: Option<PathBuf>,
    format: Option<Format>,
    threads: Option<usize>,
    /// Accepted for manifest completeness; no computation is stochastic.
    #[allow(dead_code)]
    seed: Option<u64>,
    /// Overrides for the estimate sweep.
    sweep: Option<SweepConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum NValue {
    One(f64),
    Many(Vec<f64>),
}

impl NValue {
    fn first(&self) -> f64 {
        match self {
            NValue::One(v) => *v,
            NValue::Many(v) => v.first().copied().unwrap_or(f64::NAN),
        }
    }
    fn all(&self) -> Vec<f64> {
        match self {
            NValue::One(v) => vec![*v],
            NValue::Many(v) => v.clone(),
        }
    }
}

type Res<T> = Result<T, Error>;

fn need<T>(v: Option<T>, what: &str) -> Res<T> {
    v.ok_or_else(|| Error::Config(format!("missing {what} (flag or config entry)")))
}

fn load_config(path: Option<&Path>) -> Res<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let f = File::open(p)?;
            serde_json::from_reader(BufReader::new(f))
                .map_err(|e| Error::Config(format!("config {}: {e}", p.display())))
        }
    }
}

struct Out {
    path: Option<PathBuf>,
    format: Format,
}

impl Out {
    fn writer(&self) -> Res<Box<dyn Write>> {
        Ok(match &self.path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn text(&self, s: &str) -> Res<()> {
        let mut w = self.writer()?;
        w.write_all(s.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    fn json<T: Serialize>(&self, v: &T) -> Res<()> {
        let s = serde_json::to_string_pretty(v).map_err(|e| Error::Format(e.to_string()))?;
        self.text(&(s + "\n"))
    }

    fn spectrum(&self, f: &SpectralFunction64) -> Res<()> {
        match self.format {
            Format::Json => self.json(f),
            Format::Csv => {
                let mut w = self.writer()?;
                f.write_csv(&mut w)?;
                w.flush()?;
                Ok(())
            }
        }
    }
}

/// `T` only enters the parameter check; `φ` does not depend on it.
fn data(args: &DataArgs, cfg: &RunConfig, t: Option<f64>) -> Res<(SpectralFunction64, f64)> {
    let s = args.s.or(cfg.s).unwrap_or(-1.0);
    if let Some(path) = &args.input {
        let f = SpectralFunction64::read_csv(BufReader::new(File::open(path)?))?;
        return Ok((f, s));
    }
    let n = need(args.n.or(cfg.n.as_ref().map(NValue::first)), "N")?;
    let p = ParameterSet {
        s,
        freq_scale: n,
        block_width: need(args.a.or(cfg.a), "A")?,
        amplitude: need(args.r.or(cfg.r), "R")?,
        time: t.or(cfg.t).unwrap_or(1.0),
        delta: cfg.delta.unwrap_or(0.0),
        case: RegularityCase::from_s(s),
    };
    let ppw = args.ppw.or(cfg.points_per_width).unwrap_or(DEFAULT_POINTS_PER_WIDTH);
    Ok((make_phi(&p, &p.phi_grid(ppw))?, s))
}

fn pair(v: &[usize]) -> (usize, usize) {
    (v[0], v[1])
}

fn trees(a: &TreesArgs, out: &Out) -> Res<()> {
    let mut text = String::new();
    if let Some(v) = &a.count {
        let (k, p) = pair(v);
        text += &format!("{}\n", count_trees(k, p)?);
    }
    if let Some(v) = &a.list {
        let (k, p) = pair(v);
        for t in enumerate_trees_capped(k, p, k + p)? {
            text += &format!("{t}\n");
        }
    }
    if let Some(max) = a.table {
        let table = CountTable::build(max)?;
        text += "k,p,count\n";
        for total in 0..=max {
            for k in 0..=total {
                text += &format!("{k},{},{}\n", total - k, table.get(k, total - k).unwrap_or(0));
            }
        }
    }
    if let Some(cap) = a.fit {
        text += &format!("{}\n", fit_growth_constant(cap)?);
    }
    if text.is_empty() {
        return Err(Error::Config("trees needs one of --count, --list, --table, --fit".into()));
    }
    out.text(&text)
}

fn norms(a: &DataArgs, cfg: &RunConfig, out: &Out) -> Res<()> {
    let (f, s) = data(a, cfg, None)?;
    let rep = f.norms(s);
    match out.format {
        Format::Json => out.json(&rep),
        Format::Csv => out.text(&format!(
            "s,h_s,l2,fl1,fl_inf\n{},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            rep.s, rep.h_s, rep.l2, rep.fl1, rep.fl_inf
        )),
    }
}

fn iterate(a: &IterateArgs, cfg: &RunConfig, out: &Out) -> Res<()> {
    let (phi, _) = data(&a.data, cfg, a.t)?;
    let t = need(a.t.or(cfg.t), "T")?;
    let factor = a.time_factor.or(cfg.time_factor).unwrap_or(DEFAULT_TIME_FACTOR);
    let level = match (&a.generation, a.level, a.series) {
        (Some(g), _, _) => g[0] + g[1],
        (_, Some(j), _) | (_, _, Some(j)) => j,
        _ => return Err(Error::Config("iterate needs --generation, --level or --series".into())),
    };
    let tg = time_grid_for(&phi, t, level, factor)?;
    let mut ev = PicardEvaluator::new(&phi, tg)?.with_cap(level.max(1));
    let full = if let Some(g) = &a.generation {
        ev.generation(g[0], g[1])?
    } else if let Some(j) = a.level {
        ev.level(j)?
    } else {
        let mut sum = ev.level(0)?;
        for j in 1..=level {
            sum = sum.add(&ev.level(j)?)?;
        }
        sum
    };
    if let Some(path) = &a.frames {
        FrameFile::from_space_time(&full).write(BufWriter::new(File::create(path)?))?;
    }
    out.spectrum(&full.final_frame())
}

fn reports_out(reports: &[EstimateReport], out: &Out, preface: &str) -> Res<()> {
    match out.format {
        Format::Json => out.json(&reports),
        Format::Csv => {
            let mut text = preface.to_string();
            for r in reports {
                text += &r.to_table();
                text.push('\n');
            }
            out.text(&text)
        }
    }
}

fn verify(a: &VerifyArgs, cfg: &RunConfig, out: &Out) -> Res<()> {
    let mut sweep = cfg.sweep.clone().unwrap_or_default();
    if let Some(n) = a.n.clone().or(cfg.n.as_ref().map(NValue::all)) {
        sweep.sweep = n;
    }
    if let Some(p) = a.ppw.or(cfg.points_per_width) {
        sweep.points_per_width = p;
    }
    let mut preface = String::new();
    let reports = match a.lemma.as_str() {
        "2.5" | "2.6" => {
            let keep = if a.lemma == "2.5" { 0 } else { 1 };
            verify_upper_bounds(&sweep, &all_pairs())?.into_iter().skip(keep).step_by(2).collect()
        }
        "2.7" => {
            let n = sweep.reference_n;
            let prm = ParameterSet { time: 1e-4 / (n * n), ..sweep.params(n) };
            vec![verify_series_ratio(&prm, sweep.points_per_width, 4.0)?]
        }
        "2.8" => {
            let central = box_convolution(&vec![BoxSpec { center: 0.0, width: 1.0 }; 5], 0.0)?;
            preface = format!("{central:.12}\n");
            vec![verify_box_lower_bound(&[1.0, 4.0, 16.0], 64)?]
        }
        "2.9" => vec![verify_first_iterate_lower_bound(&sweep)?],
        "2.10" => {
            let psi = default_perturbation(&sweep)?;
            vec![verify_perturbation_stability(&sweep, &psi, 1)?]
        }
        other => return Err(Error::Config(format!("unknown check {other:?}; expected 2.5 to 2.10"))),
    };
    reports_out(&reports, out, &preface)
}

fn solve(a: &SolveArgs, cfg: &RunConfig, out: &Out) -> Res<()> {
    let (v0, _) = data(&a.data, cfg, a.t)?;
    let t = need(a.t.or(cfg.t), "T")?;
    let delta = v0.grid.delta_xi;
    let period = a.period.or(cfg.period).unwrap_or(std::f64::consts::TAU / delta);
    let modes = need(a.modes.or(cfg.modes), "M")?;
    let dt = need(a.dt.or(cfg.dt), "dt")?;
    let every = a.every.or(cfg.every).unwrap_or(usize::MAX);
    let c = TorusConfig::new(period, modes, dt)?;
    let traj = solve_gdnls(&PhysicalState::from_spectrum(c, &v0)?, t, every)?;
    if let Some(path) = &a.frames {
        trajectory_frames(&traj)?.write(BufWriter::new(File::create(path)?))?;
    }
    out.spectrum(&traj.last().expect("final state").to_spectrum())
}

fn inflate(a: &InflateArgs, cfg: &RunConfig, out: &Out) -> Res<()> {
    let s = need(a.s.or(cfg.s), "s")?;
    let sweep = need(a.n.clone().or(cfg.n.as_ref().map(NValue::all)), "N")?;
    let delta = match a.delta.or(cfg.delta) {
        Some(d) => d,
        None => default_delta(s),
    };
    let method: Method = a.method.clone().or(cfg.method.clone()).unwrap_or_else(|| "series".into()).parse()?;
    let radius = a.psi_radius.or(cfg.psi_radius).unwrap_or(8.0);
    let psi = if radius == 0.0 { Perturbation::Zero } else { Perturbation::Bump { radius } };
    let d = ExperimentOptions::default();
    let opts = ExperimentOptions {
        points_per_width: a.ppw.or(cfg.points_per_width).unwrap_or(d.points_per_width),
        time_factor: a.time_factor.or(cfg.time_factor).unwrap_or(d.time_factor),
        j_max: a.j_max.or(cfg.j_max).unwrap_or(d.j_max),
        margin_factor: a.margin_factor.or(cfg.margin_factor).unwrap_or(DEFAULT_MARGIN_FACTOR),
        ..d
    };
    choose_params(s, sweep[0], delta)?;
    let res = run_experiment(s, delta, &psi, &sweep, a.target.or(cfg.target).unwrap_or(1), method, &opts)?;
    for r in &res {
        for w in &r.warnings {
            eprintln!("warning N={}: {w}", r.params.freq_scale);
        }
    }
    match out.format {
        Format::Json => out.json(&res),
        Format::Csv => out.text(&results_csv(&res)),
    }
}

/// δ used when none is given: inside the admissible range of each regime.
fn default_delta(s: f64) -> f64 {
    match RegularityCase::from_s(s) {
        RegularityCase::Case1 => (-(s + 0.5) * 10.0 * 0.5).min(1.0),
        RegularityCase::Case2 => 0.75,
        RegularityCase::Case3 => {
            // Largest δ with 2s² − 3δ/2 + 9δs/4 > 0 and 2s + 9δ/4 < 0, halved.
            let a = 2.0 * s * s / (1.5 - 2.25 * s);
            let b = -2.0 * s / 2.25;
            0.5 * a.min(b)
        }
    }
}

fn run(cli: Cli) -> Res<()> {
    let cfg = load_config(cli.config.as_deref())?;
    let threads = cli.threads.or(cfg.threads);
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let out = Out {
        path: cli.output.or(cfg.output.clone()),
        format: cli.format.or(cfg.format).unwrap_or(Format::Csv),
    };
    match &cli.command {
        Command::Trees(a) => trees(a, &out),
        Command::Norms(a) => norms(a, &cfg, &out),
        Command::Iterate(a) => iterate(a, &cfg, &out),
        Command::Verify(a) => verify(a, &cfg, &out),
        Command::Solve(a) => solve(a, &cfg, &out),
        Command::Inflate(a) => inflate(a, &cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.tag());
            eprintln!("{e}");
            ExitCode::from(match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Resource => 3,
                ErrorClass::Accuracy => 4,
            })
        }
    }
}

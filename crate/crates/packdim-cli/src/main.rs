use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use packdim::estimators::{Estimator, ExponentEstimate, Gauge, Method, ScaleGrid};
use packdim::experiment::{config_hash, csv_header_comment, run_suite, write_report, ExperimentConfig};
use packdim::fields::{add_drift, graph_points, sample_with, DriftSpec, FieldSpec, SampleMethod};
use packdim::fractals::{build_tx_system, build_uniform_cantor, extract_e_gamma, tx_table};
use packdim::kernels::{KernelContext, Mode};
use packdim::measures::{DiscreteMeasure, Norm};
use packdim::numerics::Seed;
use packdim::theory::{
    gh_solver, graph_lower, kahane_dims, predict_graph_upper, predict_image, tx_lower, Regime,
};
use packdim::verify::{
    check_eq_ar, check_graph_expectation_bound, check_scale_doubling, doubling_sweep, kernel_chain_sweep,
    parts_sweep, random_cantor_measure, CheckReport, ScaleScan,
};
use packdim::{Error, VERSION};

#[derive(Parser, Serialize)]
#[command(name = "packdim", version, about = "Packing-dimension experiments for Gaussian fields with drift")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file, or directory for `experiment`. Standard output when absent.
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    #[serde(skip)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Sample a field with drift on [0,1] or on the atoms of a measure.
    Simulate(SimulateArgs),
    /// Per-atom scaling exponents of a measure.
    Dim(DimArgs),
    /// Exponent of the F_β profile of a measure.
    Profile(ProfileArgs),
    /// Covering table of the Talagrand–Xiao set A_β.
    Txset(TxsetArgs),
    /// Closed-form dimension predictions for a regime.
    Predict(PredictArgs),
    /// Run property checks.
    Verify(VerifyArgs),
    /// Run configured experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Number of equally spaced times k/points, k = 0..points.
    #[arg(long, default_value_t = 1024, conflicts_with = "times")]
    points: usize,
    /// Measure CSV whose atoms are the sample times.
    #[arg(long)]
    times: Option<PathBuf>,
    /// Drift as JSON, e.g. '{"kind":"constant","c":[1.0]}'.
    #[arg(long, value_parser = parse_drift, default_value = "{\"kind\":\"zero\"}")]
    drift: DriftSpec,
    #[arg(long, value_enum, default_value_t = Sampler::Auto)]
    sampler: Sampler,
    /// Random stream (replica index) under the master seed.
    #[arg(long, default_value_t = 0)]
    replica: u64,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Sampler {
    Auto,
    Cholesky,
    Fft,
}

#[derive(Args, Serialize, Clone)]
struct GridArgs {
    #[arg(long, default_value_t = 2)]
    base: u32,
    #[arg(long)]
    j_min: u32,
    #[arg(long)]
    j_max: u32,
    /// tail-max or regression.
    #[arg(long, default_value = "tail-max")]
    method: Method,
    /// Evaluate every k-th atom.
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

#[derive(Args, Serialize)]
struct DimArgs {
    /// Measure CSV (`x1,…,xm,weight`).
    #[arg(long)]
    measure: PathBuf,
    #[arg(long, value_enum, default_value_t = GaugeKind::Ballmass)]
    gauge: GaugeKind,
    /// Exponent for the F_β profile.
    #[arg(long)]
    beta: Option<f64>,
    /// Domain dimension for G_d; the range dimension is the remainder.
    #[arg(long)]
    n: Option<usize>,
    /// Hurst index for the kernel gauge.
    #[arg(long)]
    alpha: Option<f64>,
    /// Range dimension for the kernel gauge.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Image)]
    mode: ModeArg,
    #[arg(long, value_parser = parse_drift, default_value = "{\"kind\":\"zero\"}")]
    drift: DriftSpec,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum GaugeKind {
    Ballmass,
    Profile,
    Gd,
    Kernel,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Image,
    Graph,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Image => Mode::Image,
            ModeArg::Graph => Mode::Graph,
        }
    }
}

#[derive(Args, Serialize)]
struct ProfileArgs {
    #[arg(long)]
    measure: PathBuf,
    #[arg(long)]
    beta: f64,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Serialize)]
struct TxsetArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 0.25)]
    delta0: f64,
    #[arg(long, default_value_t = 12)]
    levels: usize,
}

#[derive(Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    d: usize,
    /// Packing dimension of the parameter set.
    #[arg(long)]
    beta: f64,
    /// Hausdorff dimension of the parameter set, when it differs.
    #[arg(long)]
    hausdorff_beta: Option<f64>,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    /// Checks to run; all when omitted.
    #[arg(value_enum)]
    checks: Vec<Check>,
    /// Random trials for the sweeping checks; each check has its own default.
    #[arg(long)]
    trials: Option<u64>,
    /// β values for the small-ball ratio scan.
    #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.5, 0.7])]
    beta: Vec<f64>,
    /// Grid density of the small-ball ratio scan.
    #[arg(long, default_value_t = 8)]
    points_per_decade: usize,
    /// Natural-measure resolution for graph-expectation.
    #[arg(long, default_value_t = 10)]
    resolution: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Check {
    KernelChain,
    Doubling,
    ScaleDoubling,
    Parts,
    EqAr,
    GraphExpectation,
    All,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum ExperimentCommand {
    /// Run one config file.
    Run { config: PathBuf },
    /// Run every *.json config in a directory and write summary.csv.
    Suite { dir: PathBuf },
}

fn parse_drift(s: &str) -> Result<DriftSpec, String> {
    serde_json::from_str(s).map_err(|e| format!("bad drift JSON: {e}"))
}

enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("packdim: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("packdim: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> packdim::Result<Outcome> {
    let hash = config_hash(cli);
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a, &hash),
        Command::Dim(a) => dim(cli, a, &hash),
        Command::Profile(a) => {
            let mu = read_measure(&a.measure)?;
            let est = estimator(&a.grid)?;
            estimate_and_emit(cli, &hash, &est, Gauge::Profile(&mu, a.beta))
        }
        Command::Txset(a) => txset(cli, a, &hash),
        Command::Predict(a) => predict(cli, a, &hash),
        Command::Verify(a) => verify(cli, a, &hash),
        Command::Experiment(ExperimentCommand::Run { config }) => {
            let cfg = ExperimentConfig::load(config)?;
            let report = packdim::experiment::run_experiment(&cfg)?;
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir)?;
            write_report(&report, &dir)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.passed { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Experiment(ExperimentCommand::Suite { dir }) => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let rows = run_suite(dir, &out)?;
            for r in &rows {
                let status = if r.pass { "pass" } else { "FAIL" };
                match &r.error {
                    Some(e) => eprintln!("{status} {}: {e}", r.name),
                    None => eprintln!("{status} {}", r.name),
                }
            }
            Ok(if rows.iter().all(|r| r.pass) { Outcome::Pass } else { Outcome::Fail })
        }
    }
}

fn read_measure(path: &Path) -> packdim::Result<DiscreteMeasure> {
    DiscreteMeasure::read_csv(fs::File::open(path)?)
}

fn estimator(g: &GridArgs) -> packdim::Result<Estimator> {
    let grid = ScaleGrid::with_base(g.base, g.j_min, g.j_max)?;
    Ok(Estimator::new(grid, g.method).with_stride(g.stride))
}

/// Writes `text` to `--out` or standard output.
fn emit(cli: &Cli, text: &str) -> packdim::Result<()> {
    match &cli.out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Writes a JSON document next to `--out`, or to standard error.
fn emit_sidecar(cli: &Cli, doc: &Value) -> packdim::Result<()> {
    let text = serde_json::to_string_pretty(doc)? + "\n";
    match &cli.out {
        Some(p) => {
            let mut name = p.as_os_str().to_owned();
            name.push(".json");
            fs::write(PathBuf::from(name), text)?;
        }
        None => eprint!("{text}"),
    }
    Ok(())
}

fn json_doc(hash: &str, body: Value) -> Value {
    let mut doc = json!({ "version": VERSION, "config_hash": hash });
    if let (Some(m), Value::Object(b)) = (doc.as_object_mut(), body) {
        m.extend(b);
    }
    doc
}

fn simulate(cli: &Cli, a: &SimulateArgs, hash: &str) -> packdim::Result<Outcome> {
    let points: Vec<Vec<f64>> = match &a.times {
        Some(p) => read_measure(p)?.atoms().map(<[f64]>::to_vec).collect(),
        None => {
            if a.points < 2 {
                return Err(Error::invalid("need at least 2 points"));
            }
            (0..a.points).map(|k| vec![k as f64 / a.points as f64]).collect()
        }
    };
    let n = points.first().map_or(1, Vec::len);
    let spec = FieldSpec::new(a.alpha, n, a.d)?;
    let method = match a.sampler {
        Sampler::Auto => SampleMethod::Auto,
        Sampler::Cholesky => SampleMethod::Cholesky,
        Sampler::Fft => SampleMethod::Fft,
    };
    let seed = Seed::new(cli.seed).replica(a.replica);
    let path = add_drift(&sample_with(&spec, &points, seed, method)?, &a.drift)?;
    let sidecar = json_doc(hash, json!({ "spec": spec, "drift": a.drift, "seed": seed, "sampler": a.sampler }));
    if cli.format == Format::Json {
        let mut doc = sidecar;
        doc["path"] = json!(path);
        return emit(cli, &(serde_json::to_string_pretty(&doc)? + "\n")).map(|_| Outcome::Pass);
    }
    let mut text = csv_header_comment(hash) + "\n";
    let cols: Vec<String> =
        (1..=n).map(|i| format!("t{i}")).chain((1..=a.d).map(|i| format!("x{i}"))).collect();
    text += &cols.join(",");
    text.push('\n');
    for row in graph_points(&path) {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        text += &cells.join(",");
        text.push('\n');
    }
    emit(cli, &text)?;
    emit_sidecar(cli, &sidecar)?;
    Ok(Outcome::Pass)
}

fn dim(cli: &Cli, a: &DimArgs, hash: &str) -> packdim::Result<Outcome> {
    let mu = read_measure(&a.measure)?;
    let est = estimator(&a.grid)?;
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| Error::invalid(format!("--{flag} is required")));
    match a.gauge {
        GaugeKind::Ballmass => estimate_and_emit(cli, hash, &est, Gauge::BallMass(&mu)),
        GaugeKind::Profile => estimate_and_emit(cli, hash, &est, Gauge::Profile(&mu, need(a.beta, "beta")?)),
        GaugeKind::Gd => {
            let n = a.n.ok_or_else(|| Error::invalid("--n is required"))?;
            let d = mu.dim().checked_sub(n).ok_or_else(|| Error::invalid("--n exceeds the measure dimension"))?;
            estimate_and_emit(cli, hash, &est, Gauge::Gd { mu: &mu, n, d })
        }
        GaugeKind::Kernel => {
            let spec = FieldSpec::new(
                need(a.alpha, "alpha")?,
                mu.dim(),
                a.d.ok_or_else(|| Error::invalid("--d is required"))?,
            )?;
            let ctx = KernelContext::new(spec, a.drift.clone(), mu, a.mode.into())?;
            estimate_and_emit(cli, hash, &est, Gauge::Kernel(&ctx, Norm::Max))
        }
    }
}

fn summary(est: &Estimator, best: Option<&ExponentEstimate>, guard: &str) -> Value {
    json!({
        "estimate": best.map(|b| b.value),
        "method": est.method,
        "window": best.map(|b| b.window),
        "guard_status": guard,
        "witness_atom": best.and_then(|b| b.witness_atom),
        "grid": est.grid,
        "atom_stride": est.atom_stride,
    })
}

fn estimate_and_emit(cli: &Cli, hash: &str, est: &Estimator, gauge: Gauge<'_>) -> packdim::Result<Outcome> {
    let all = match est.per_atom(gauge) {
        Ok(all) => all,
        Err(e @ Error::Resolution { .. }) => {
            let doc = json_doc(hash, summary(est, None, &e.to_string()));
            emit(cli, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
            return Ok(Outcome::Fail);
        }
        Err(e) => return Err(e),
    };
    let best = all.iter().reduce(|a, b| if b.value < a.value { b } else { a });
    let doc = json_doc(hash, summary(est, best, "ok"));
    if cli.format == Format::Json {
        emit(cli, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
        return Ok(Outcome::Pass);
    }
    let mut text = csv_header_comment(hash) + "\natom,scale,V,ratio\n";
    for e in &all {
        let atom = e.witness_atom.unwrap_or_default();
        for row in &e.per_scale {
            let ratio = row.ratio.map(|r| r.to_string()).unwrap_or_default();
            text += &format!("{atom},{},{},{ratio}\n", row.r, row.v);
        }
    }
    emit(cli, &text)?;
    emit_sidecar(cli, &doc)?;
    Ok(Outcome::Pass)
}

fn txset(cli: &Cli, a: &TxsetArgs, hash: &str) -> packdim::Result<Outcome> {
    let rows = tx_table(&build_tx_system(a.beta, a.delta0, a.levels)?)?;
    if cli.format == Format::Json {
        let doc = json_doc(hash, json!({ "beta": a.beta, "delta0": a.delta0, "levels": rows }));
        emit(cli, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
        return Ok(Outcome::Pass);
    }
    let mut text = csv_header_comment(hash) + "\nk,log_inv_delta,log_inv_eta,log_m,ratio_at_eta,ratio_at_delta\n";
    for r in rows {
        text += &format!(
            "{},{},{},{},{},{}\n",
            r.k, r.log_inv_delta, r.log_inv_eta, r.log_m, r.ratio_at_eta, r.ratio_at_delta
        );
    }
    emit(cli, &text)?;
    Ok(Outcome::Pass)
}

fn predict(cli: &Cli, a: &PredictArgs, hash: &str) -> packdim::Result<Outcome> {
    let r = Regime::new(a.alpha, a.d, a.beta)?;
    let mut body = json!({
        "regime": r,
        "image": predict_image(&r)?,
        "graph_upper": predict_graph_upper(&r)?,
    });
    // The lower bounds exist only below the critical dimension.
    if let (Ok(t), Ok(g)) = (tx_lower(&r), graph_lower(&r)) {
        body["tx_lower"] = json!(t);
        body["graph_lower"] = json!(g);
    }
    if let Ok(s) = gh_solver(&r) {
        body["gh"] = json!(s);
    }
    if let Some(h) = a.hausdorff_beta {
        let (image, graph) = kahane_dims(a.alpha, a.d, h)?;
        body["hausdorff"] = json!({ "image": image, "graph": graph });
    }
    let doc = json_doc(hash, body);
    emit(cli, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    Ok(Outcome::Pass)
}

fn verify(cli: &Cli, a: &VerifyArgs, hash: &str) -> packdim::Result<Outcome> {
    let all = a.checks.is_empty() || a.checks.contains(&Check::All);
    let wants = |c: Check| all || a.checks.contains(&c);
    let seed = Seed::new(cli.seed);
    let mut reports: Vec<CheckReport> = Vec::new();
    if wants(Check::KernelChain) {
        reports.push(kernel_chain_sweep(seed, a.trials.unwrap_or(10_000))?);
    }
    if wants(Check::Doubling) {
        reports.push(doubling_sweep(seed, a.trials.unwrap_or(1000))?);
    }
    if wants(Check::ScaleDoubling) {
        let mut merged: Option<CheckReport> = None;
        for i in 0..a.trials.unwrap_or(20) {
            let nu = random_cantor_measure(&mut seed.replica(i).rng(), 6)?;
            let rep = check_scale_doubling(&nu, 0.5, 0.5, &[0.5, 0.25, 0.125], ScaleScan::default())?;
            merged = Some(match merged {
                Some(m) => m.merge(rep),
                None => rep,
            });
        }
        reports.extend(merged);
    }
    if wants(Check::Parts) {
        let sets = a.trials.unwrap_or(20);
        reports.push(parts_sweep(seed, sets, 1)?.merge(parts_sweep(seed, sets, 2)?));
    }
    if wants(Check::EqAr) {
        for &b in &a.beta {
            reports.push(check_eq_ar(b, a.points_per_decade)?);
        }
    }
    if wants(Check::GraphExpectation) {
        let sys = build_uniform_cantor(2, 1.0 / 3.0, a.resolution + 1)?;
        let eg = extract_e_gamma(&sys, 0.3, 2.0 / 3.0)?;
        let spec = FieldSpec::new(0.5, 1, 1)?;
        reports.push(check_graph_expectation_bound(&eg, &spec, a.resolution)?);
    }
    let text = if cli.format == Format::Json {
        let mut t = String::new();
        for r in &reports {
            t += &serde_json::to_string(&json_doc(hash, json!(r)))?;
            t.push('\n');
        }
        t
    } else {
        let mut t = csv_header_comment(hash) + "\nname,trials,violations,worst_ratio,pass\n";
        for r in &reports {
            t += &format!("{},{},{},{},{}\n", r.name, r.trials, r.violations, r.worst_ratio, r.passed());
        }
        t
    };
    emit(cli, &text)?;
    Ok(if reports.iter().all(CheckReport::passed) { Outcome::Pass } else { Outcome::Fail })
}

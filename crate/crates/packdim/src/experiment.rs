//! JSON-configured experiments comparing closed-form predictions with box
//! and kernel estimates.
//!
//! Every CSV written here starts with a `# packdim <version> config <hash>`
//! line, and every JSON document carries the same two fields, where the hash
//! is the SHA-256 of the compact JSON serialization of the parsed config.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::estimators::{densify_polyline, minkowski_regression, Estimator, ExponentEstimate, Gauge, Method, ScaleGrid};
use crate::fields::{add_drift, graph_points, sample, DriftSpec, FieldSpec};
use crate::fractals::{build_tx_system, build_uniform_cantor, natural_measure};
use crate::kernels::{KernelContext, Mode};
use crate::measures::{DiscreteMeasure, Norm};
use crate::numerics::Seed;
use crate::theory::{graph_lower, kahane_dims, predict_graph_upper, predict_image, tx_lower, Regime};
use crate::{Error, Result, VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeConfig {
    pub alpha: f64,
    pub d: usize,
    #[serde(default = "one")]
    pub n: usize,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

/// The parameter set A ⊂ [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    /// [0,1]; paths are sampled at `points` equally spaced times.
    Interval { points: usize },
    /// Uniform Cantor set with `branches` children of ratio `ratio`.
    Cantor { branches: usize, ratio: f64 },
    /// Talagrand–Xiao set A_β.
    Txset { beta: f64, delta0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub regime: RegimeConfig,
    pub set: SetSpec,
    #[serde(default)]
    pub drift: DriftSpec,
    /// Grid exponent for intervals (2^resolution atoms), construction level otherwise.
    pub resolution: usize,
    /// Box-counting grid.
    pub grid: ScaleGrid,
    /// Grid for the kernel estimator; the box grid when absent.
    #[serde(default)]
    pub kernel_grid: Option<ScaleGrid>,
    pub replicas: usize,
    pub seed: u64,
    pub mode: Mode,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "one")]
    pub atom_stride: usize,
    #[serde(default = "yes")]
    pub box_estimate: bool,
    #[serde(default = "yes")]
    pub kernel_estimate: bool,
    pub box_tolerance: f64,
    pub kernel_tolerance: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?).map_err(|e| match e {
            Error::Json(j) => Error::Config(format!("{}: {j}", path.display())),
            other => other,
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact serialization, hex encoded.
    pub fn hash(&self) -> String {
        config_hash(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad("name must be a nonempty file stem".into());
        }
        if self.replicas == 0 && self.box_estimate {
            return bad("replicas must be positive".into());
        }
        if self.regime.n != 1 {
            return bad("only one-dimensional parameter sets are supported".into());
        }
        FieldSpec::new(self.regime.alpha, self.regime.n, self.regime.d).map_err(|e| Error::Config(e.to_string()))?;
        self.drift.validate(self.regime.d).map_err(|e| Error::Config(e.to_string()))?;
        self.grid.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(g) = &self.kernel_grid {
            g.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.atom_stride == 0 {
            return bad("atom_stride must be positive".into());
        }
        if !(self.box_tolerance >= 0.0) || !(self.kernel_tolerance >= 0.0) {
            return bad("tolerances must be nonnegative".into());
        }
        if !self.box_estimate && !self.kernel_estimate {
            return bad("at least one estimator must be enabled".into());
        }
        match self.set {
            SetSpec::Interval { points } if points < 2 => bad("an interval needs at least 2 sample points".into()),
            SetSpec::Interval { .. } if self.resolution > 16 => bad("interval resolution is at most 16".into()),
            _ => Ok(()),
        }
    }

    fn field(&self) -> FieldSpec {
        FieldSpec { hurst: self.regime.alpha, domain_dim: self.regime.n, range_dim: self.regime.d }
    }
}

/// Summary of one estimator across replicas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub value: f64,
    pub method: Method,
    pub grid: ScaleGrid,
    pub replicas: usize,
    pub seed: u64,
    pub per_replica: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionReport {
    pub name: String,
    pub version: String,
    pub config_hash: String,
    /// The prediction the estimates are compared with.
    pub predicted: f64,
    pub predicted_by: String,
    /// Every applicable closed form.
    pub predictions: BTreeMap<String, f64>,
    pub estimated: BTreeMap<String, EstimateSummary>,
    pub gaps: BTreeMap<String, f64>,
    pub pass: BTreeMap<String, bool>,
    pub passed: bool,
    #[serde(skip)]
    pub kernel_table: Option<ExponentEstimate>,
}

struct Built {
    measure: DiscreteMeasure,
    sample_points: Vec<Vec<f64>>,
    connected: bool,
    /// Packing dimension of A (equal to its Hausdorff dimension unless A_β).
    beta: f64,
    tx: bool,
}

fn build_set(cfg: &ExperimentConfig) -> Result<Built> {
    match cfg.set {
        SetSpec::Interval { points } => {
            let m = 1usize << cfg.resolution;
            let atoms = (0..m).map(|i| vec![i as f64 / m as f64]).collect();
            let sample_points = (0..points).map(|i| vec![i as f64 / points as f64]).collect();
            Ok(Built { measure: DiscreteMeasure::uniform(1, atoms)?, sample_points, connected: true, beta: 1.0, tx: false })
        }
        SetSpec::Cantor { branches, ratio } => {
            let sys = build_uniform_cantor(branches, ratio, cfg.resolution)?;
            let beta = sys.similarity_dimension().unwrap_or(0.0).min(1.0);
            let measure = natural_measure(&sys, cfg.resolution)?;
            let sample_points = measure.atoms().map(<[f64]>::to_vec).collect();
            Ok(Built { measure, sample_points, connected: false, beta, tx: false })
        }
        SetSpec::Txset { beta, delta0 } => {
            let sys = build_tx_system(beta, delta0, cfg.resolution)?.realize_explicit(cfg.resolution)?;
            let measure = natural_measure(&sys, cfg.resolution)?;
            let sample_points = measure.atoms().map(<[f64]>::to_vec).collect();
            Ok(Built { measure, sample_points, connected: false, beta, tx: true })
        }
    }
}

fn predictions(cfg: &ExperimentConfig, built: &Built) -> Result<(BTreeMap<String, f64>, String)> {
    let r = Regime::new(cfg.regime.alpha, cfg.regime.d, built.beta)?;
    let mut p = BTreeMap::new();
    p.insert("image".to_string(), predict_image(&r)?);
    p.insert("graph_upper".to_string(), predict_graph_upper(&r)?);
    if r.alpha * (r.d as f64) < 1.0 {
        p.insert("tx_lower".to_string(), tx_lower(&r)?);
        p.insert("graph_lower".to_string(), graph_lower(&r)?);
    }
    if !built.tx {
        let (img, gr) = kahane_dims(r.alpha, r.d, built.beta)?;
        p.insert("hausdorff_image".to_string(), img);
        p.insert("hausdorff_graph".to_string(), gr);
    }
    let key = match (cfg.mode, built.tx) {
        (Mode::Image, false) => "image",
        (Mode::Graph, false) => "graph_upper",
        (Mode::Image, true) => "tx_lower",
        (Mode::Graph, true) => "graph_lower",
    };
    if !p.contains_key(key) {
        return Err(Error::Regime(format!("{key} needs alpha*d < 1")));
    }
    Ok((p, key.to_string()))
}

/// Box-counting estimate for one replica.
fn box_replica(cfg: &ExperimentConfig, built: &Built, replica: usize) -> Result<f64> {
    let seed = Seed::new(cfg.seed).replica(replica as u64);
    let path = sample(&cfg.field(), &built.sample_points, seed)?;
    let path = add_drift(&path, &cfg.drift)?;
    let mut pts = match cfg.mode {
        Mode::Image => path.values,
        Mode::Graph => graph_points(&path),
    };
    if built.connected {
        pts = densify_polyline(&pts, cfg.grid.finest() / 4.0)?;
    }
    Ok(minkowski_regression(&pts, &cfg.grid)?.value)
}

/// Builds the set, simulates the replicas, estimates and compares.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<PredictionReport> {
    cfg.validate()?;
    let built = build_set(cfg).map_err(|e| e.at_stage("set"))?;
    let (predictions, predicted_by) = predictions(cfg, &built).map_err(|e| e.at_stage("predict"))?;
    let predicted = predictions[&predicted_by];
    let mut estimated = BTreeMap::new();
    let mut kernel_table = None;
    if cfg.box_estimate {
        let per_replica: Vec<f64> = (0..cfg.replicas)
            .into_par_iter()
            .map(|i| box_replica(cfg, &built, i))
            .collect::<Result<_>>()
            .map_err(|e| e.at_stage("box"))?;
        let value = per_replica.iter().sum::<f64>() / per_replica.len() as f64;
        estimated.insert(
            "box".to_string(),
            EstimateSummary { value, method: Method::Regression, grid: cfg.grid, replicas: cfg.replicas, seed: cfg.seed, per_replica },
        );
    }
    if cfg.kernel_estimate {
        let grid = cfg.kernel_grid.unwrap_or(cfg.grid);
        let ctx = KernelContext::new(cfg.field(), cfg.drift.clone(), built.measure.clone(), cfg.mode)
            .map_err(|e| e.at_stage("kernel"))?;
        let est = Estimator::new(grid, cfg.method)
            .with_stride(cfg.atom_stride)
            .estimate(Gauge::Kernel(&ctx, Norm::Max))
            .map_err(|e| e.at_stage("kernel"))?;
        estimated.insert(
            "kernel".to_string(),
            EstimateSummary { value: est.value, method: cfg.method, grid, replicas: 0, seed: cfg.seed, per_replica: vec![] },
        );
        kernel_table = Some(est);
    }
    let mut gaps = BTreeMap::new();
    let mut pass = BTreeMap::new();
    for (k, est) in &estimated {
        let gap = (est.value - predicted).abs();
        let tol = if k == "box" { cfg.box_tolerance } else { cfg.kernel_tolerance };
        gaps.insert(k.clone(), gap);
        pass.insert(k.clone(), gap <= tol);
    }
    Ok(PredictionReport {
        name: cfg.name.clone(),
        version: VERSION.to_string(),
        config_hash: cfg.hash(),
        predicted,
        predicted_by,
        predictions,
        passed: pass.values().all(|&p| p),
        estimated,
        gaps,
        pass,
        kernel_table,
    })
}

/// Hex SHA-256 of the compact JSON serialization of `value`.
pub fn config_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("value serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// First line of every CSV output.
pub fn csv_header_comment(config_hash: &str) -> String {
    format!("# packdim {VERSION} config {config_hash}")
}

/// Writes `<name>.json`, `<name>_box.csv` and `<name>_kernel.csv` into `out`.
pub fn write_report(report: &PredictionReport, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let json_path = out.join(format!("{}.json", report.name));
    fs::write(&json_path, serde_json::to_string_pretty(report)? + "\n")?;
    written.push(json_path);
    let head = csv_header_comment(&report.config_hash);
    if let Some(b) = report.estimated.get("box") {
        let path = out.join(format!("{}_box.csv", report.name));
        let mut text = format!("{head}\nreplica,estimate\n");
        for (i, v) in b.per_replica.iter().enumerate() {
            text.push_str(&format!("{i},{v}\n"));
        }
        fs::write(&path, text)?;
        written.push(path);
    }
    if let Some(t) = &report.kernel_table {
        let path = out.join(format!("{}_kernel.csv", report.name));
        let atom = t.witness_atom.map_or(String::new(), |a| a.to_string());
        let mut text = format!("{head}\natom,scale,V,ratio\n");
        for row in &t.per_scale {
            let ratio = row.ratio.map_or(String::new(), |x| x.to_string());
            text.push_str(&format!("{atom},{},{},{ratio}\n", row.r, row.v));
        }
        fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub name: String,
    pub predicted: Option<f64>,
    pub estimate_box: Option<f64>,
    pub estimate_kernel: Option<f64>,
    pub gap: Option<f64>,
    pub pass: bool,
    #[serde(skip)]
    pub error: Option<String>,
}

impl SummaryRow {
    fn from_report(r: &PredictionReport) -> Self {
        SummaryRow {
            name: r.name.clone(),
            predicted: Some(r.predicted),
            estimate_box: r.estimated.get("box").map(|e| e.value),
            estimate_kernel: r.estimated.get("kernel").map(|e| e.value),
            gap: r.gaps.values().copied().reduce(f64::max),
            pass: r.passed,
            error: None,
        }
    }
}

/// Config files (`*.json`) of a directory in file-name order.
pub fn suite_configs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Config(format!("no *.json configs in {}", dir.display())));
    }
    Ok(files)
}

/// Runs every config in `dir`, writes per-experiment outputs and
/// `summary.csv` into `out`. Failing experiments become failing rows.
pub fn run_suite(dir: &Path, out: &Path) -> Result<Vec<SummaryRow>> {
    let files = suite_configs(dir)?;
    let mut rows = Vec::with_capacity(files.len());
    let mut hasher = Sha256::new();
    for file in &files {
        let row = match ExperimentConfig::load(file) {
            Ok(cfg) => {
                hasher.update(cfg.hash().as_bytes());
                match run_experiment(&cfg).and_then(|r| write_report(&r, out).map(|_| r)) {
                    Ok(report) => SummaryRow::from_report(&report),
                    Err(e) => failed_row(&cfg.name, e),
                }
            }
            Err(e) => failed_row(&file.file_stem().unwrap_or_default().to_string_lossy(), e),
        };
        rows.push(row);
    }
    let suite_hash: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    write_summary(&rows, &suite_hash, &out.join("summary.csv"))?;
    Ok(rows)
}

fn failed_row(name: &str, e: Error) -> SummaryRow {
    SummaryRow {
        name: name.to_string(),
        predicted: None,
        estimate_box: None,
        estimate_kernel: None,
        gap: None,
        pass: false,
        error: Some(e.to_string()),
    }
}

pub fn write_summary(rows: &[SummaryRow], config_hash: &str, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = csv_header_comment(config_hash);
    text.push('\n');
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "predicted", "estimate_box", "estimate_kernel", "gap", "pass"])?;
    let f = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for r in rows {
        w.write_record([r.name.clone(), f(r.predicted), f(r.estimate_box), f(r.estimate_kernel), f(r.gap), r.pass.to_string()])?;
    }
    text.push_str(&String::from_utf8(w.into_inner().map_err(|e| Error::Config(e.to_string()))?).expect("csv is utf-8"));
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            name: "small".into(),
            regime: RegimeConfig { alpha: 0.5, d: 1, n: 1 },
            set: SetSpec::Interval { points: 1 << 10 },
            drift: DriftSpec::Zero,
            resolution: 8,
            grid: ScaleGrid::dyadic(2, 6).unwrap(),
            kernel_grid: None,
            replicas: 2,
            seed: 5,
            mode: Mode::Graph,
            method: Method::TailMax,
            atom_stride: 4,
            box_estimate: true,
            kernel_estimate: true,
            box_tolerance: 0.5,
            kernel_tolerance: 0.5,
        }
    }

    #[test]
    fn config_round_trip() {
        let cfg = small_config();
        let text = cfg.to_json_pretty();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_json_pretty(), text);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn zero_replicas_rejected() {
        let mut cfg = small_config();
        cfg.replicas = 0;
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn graph_prediction_and_determinism() {
        let cfg = small_config();
        let a = run_experiment(&cfg).unwrap();
        assert_eq!(a.predicted, 1.5);
        assert_eq!(a.predicted_by, "graph_upper");
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn suite_writes_summary() {
        let dir = tempfile::tempdir().unwrap();
        let cfgs = dir.path().join("cfg");
        fs::create_dir(&cfgs).unwrap();
        assert!(run_suite(&cfgs, dir.path()).is_err());
        fs::write(cfgs.join("small.json"), small_config().to_json_pretty()).unwrap();
        let out = dir.path().join("out");
        let rows = run_suite(&cfgs, &out).unwrap();
        assert_eq!(rows.len(), 1);
        let first = fs::read(out.join("summary.csv")).unwrap();
        let text = String::from_utf8(first.clone()).unwrap();
        assert!(text.starts_with("# packdim "));
        assert_eq!(text.lines().nth(1).unwrap(), "name,predicted,estimate_box,estimate_kernel,gap,pass");
        run_suite(&cfgs, &out).unwrap();
        assert_eq!(fs::read(out.join("summary.csv")).unwrap(), first);
        let box_csv = fs::read_to_string(out.join("small_box.csv")).unwrap();
        assert!(box_csv.starts_with(&csv_header_comment(&small_config().hash())));
    }
}

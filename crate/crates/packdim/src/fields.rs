//! Fractional Brownian motion on finite point sets, drifts and graph maps.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::numerics::{cholesky_psd, Matrix, Seed};
use crate::{Error, Result};

/// Largest point count accepted by [`sample`] on the Cholesky path.
pub const MAX_CHOLESKY_POINTS: usize = 1 << 14;

/// A d-dimensional fBm on ℝⁿ with independent coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub hurst: f64,
    pub domain_dim: usize,
    pub range_dim: usize,
}

impl FieldSpec {
    pub fn new(hurst: f64, domain_dim: usize, range_dim: usize) -> Result<Self> {
        let s = FieldSpec { hurst, domain_dim, range_dim };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::invalid(format!("Hurst index must lie in (0,1), got {}", self.hurst)));
        }
        if self.domain_dim == 0 || self.range_dim == 0 {
            return Err(Error::invalid("domain and range dimensions must be positive"));
        }
        Ok(())
    }
}

fn norm(t: &[f64]) -> f64 {
    t.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(t: &[f64], s: &[f64]) -> f64 {
    t.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Cov(X₀(t), X₀(s)) = ½(|t|^{2α} + |s|^{2α} − |t−s|^{2α}).
pub fn fbm_covariance(t: &[f64], s: &[f64], alpha: f64) -> f64 {
    let h2 = 2.0 * alpha;
    0.5 * (norm(t).powf(h2) + norm(s).powf(h2) - dist(t, s).powf(h2))
}

/// ρ_i(t,s) = |t−s|^α for each of the d coordinates.
pub fn canonical_metric(spec: &FieldSpec, t: &[f64], s: &[f64]) -> Vec<f64> {
    vec![dist(t, s).powf(spec.hurst); spec.range_dim]
}

/// Deterministic drift from a closed catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftSpec {
    #[default]
    Zero,
    /// f(t) = c.
    Constant { c: Vec<f64> },
    /// f(t) = |t|^γ · direction.
    HolderPower { gamma: f64, direction: Vec<f64> },
    /// f_i(t) = Σ_k coeffs[i][k] · t₁^k, a polynomial in the first coordinate.
    Polynomial { coeffs: Vec<Vec<f64>> },
}

impl DriftSpec {
    /// Checks that the drift maps into ℝᵈ.
    pub fn validate(&self, range_dim: usize) -> Result<()> {
        let len = match self {
            DriftSpec::Zero => return Ok(()),
            DriftSpec::Constant { c } => c.len(),
            DriftSpec::HolderPower { gamma, direction } => {
                if !(*gamma > 0.0) {
                    return Err(Error::invalid("Hölder exponent must be positive"));
                }
                direction.len()
            }
            DriftSpec::Polynomial { coeffs } => coeffs.len(),
        };
        if len != range_dim {
            return Err(Error::invalid(format!(
                "drift has {len} components, field has {range_dim}"
            )));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, DriftSpec::Zero)
    }

    /// f(t) ∈ ℝᵈ.
    pub fn eval(&self, t: &[f64], range_dim: usize) -> Vec<f64> {
        match self {
            DriftSpec::Zero => vec![0.0; range_dim],
            DriftSpec::Constant { c } => c.clone(),
            DriftSpec::HolderPower { gamma, direction } => {
                let s = norm(t).powf(*gamma);
                direction.iter().map(|v| s * v).collect()
            }
            DriftSpec::Polynomial { coeffs } => coeffs
                .iter()
                .map(|c| c.iter().rev().fold(0.0, |acc, a| acc * t[0] + a))
                .collect(),
        }
    }
}

/// A realization of the field on a finite point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub seed: Seed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMethod {
    /// Circulant embedding on uniform 1-D grids, Cholesky elsewhere.
    Auto,
    Cholesky,
    Fft,
}

/// Returns (t₀, Δ) when the 1-D points are t₀ + kΔ with t₀ ∈ {0, Δ}.
pub fn uniform_grid(points: &[Vec<f64>]) -> Option<(f64, f64)> {
    if points.len() < 2 || points.iter().any(|p| p.len() != 1) {
        return None;
    }
    let t0 = points[0][0];
    let step = points[1][0] - t0;
    if !(step > 0.0) {
        return None;
    }
    let tol = 1e-9 * step;
    if !(t0 == 0.0 || (t0 - step).abs() <= tol) {
        return None;
    }
    for (k, p) in points.iter().enumerate() {
        if (p[0] - (t0 + k as f64 * step)).abs() > tol {
            return None;
        }
    }
    Some((t0, step))
}

/// Draws the field at `points` with [`SampleMethod::Auto`].
pub fn sample(spec: &FieldSpec, points: &[Vec<f64>], seed: Seed) -> Result<SamplePath> {
    sample_with(spec, points, seed, SampleMethod::Auto)
}

/// Draws the field at `points`. Coordinates are independent; the random
/// stream is consumed coordinate by coordinate.
pub fn sample_with(
    spec: &FieldSpec,
    points: &[Vec<f64>],
    seed: Seed,
    method: SampleMethod,
) -> Result<SamplePath> {
    spec.validate()?;
    if points.iter().any(|p| p.len() != spec.domain_dim || p.iter().any(|x| !x.is_finite())) {
        return Err(Error::invalid("points must be finite and match the domain dimension"));
    }
    let grid = if spec.domain_dim == 1 { uniform_grid(points) } else { None };
    let use_fft = match method {
        SampleMethod::Auto => grid.is_some(),
        SampleMethod::Fft => {
            if grid.is_none() {
                return Err(Error::invalid("FFT sampling needs a uniform 1-D grid starting at 0 or its step"));
            }
            true
        }
        SampleMethod::Cholesky => false,
    };
    let columns = if use_fft {
        let (t0, step) = grid.unwrap();
        sample_fft(spec, points.len(), t0, step, seed)?
    } else {
        sample_cholesky(spec, points, seed)?
    };
    let values = (0..points.len())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    Ok(SamplePath { points: points.to_vec(), values, seed })
}

fn sample_cholesky(spec: &FieldSpec, points: &[Vec<f64>], seed: Seed) -> Result<Vec<Vec<f64>>> {
    if points.len() > MAX_CHOLESKY_POINTS {
        return Err(Error::invalid(format!(
            "{} points exceed the Cholesky limit {MAX_CHOLESKY_POINTS}",
            points.len()
        )));
    }
    // X(0) = 0: zero-variance rows are kept out of the factorization
    let live: Vec<usize> = (0..points.len()).filter(|&i| norm(&points[i]) > 0.0).collect();
    let cov = Matrix::from_fn(live.len(), |a, b| {
        fbm_covariance(&points[live[a]], &points[live[b]], spec.hurst)
    });
    let l = cholesky_psd(&cov)?;
    let mut rng = seed.rng();
    let mut columns = Vec::with_capacity(spec.range_dim);
    for _ in 0..spec.range_dim {
        let z: Vec<f64> = (0..live.len()).map(|_| rng.sample(StandardNormal)).collect();
        let x = l.lower_mul_vec(&z);
        let mut col = vec![0.0; points.len()];
        for (k, &i) in live.iter().enumerate() {
            col[i] = x[k];
        }
        columns.push(col);
    }
    Ok(columns)
}

/// Autocovariance of unit-spaced fractional Gaussian noise.
fn fgn_autocov(k: usize, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Circulant embedding (Davies–Harte). Each complex FFT yields two
/// independent noise vectors in its real and imaginary parts.
fn sample_fft(spec: &FieldSpec, len: usize, t0: f64, step: f64, seed: Seed) -> Result<Vec<Vec<f64>>> {
    let m = if t0 == 0.0 { len - 1 } else { len };
    let size = 2 * m;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(size);

    let mut c: Vec<Complex<f64>> = (0..size)
        .map(|j| {
            let k = if j <= m { j } else { size - j };
            Complex::new(fgn_autocov(k, spec.hurst), 0.0)
        })
        .collect();
    fft.process(&mut c);
    let max_eig = c.iter().map(|z| z.re).fold(0.0, f64::max);
    if c.iter().any(|z| z.re < -1e-10 * max_eig) {
        return Err(Error::NotPositiveSemidefinite { pivot: 0 });
    }
    let sqrt_eig: Vec<f64> = c.iter().map(|z| (z.re.max(0.0) / size as f64).sqrt()).collect();

    let scale = step.powf(spec.hurst);
    let mut rng = seed.rng();
    let mut columns = Vec::with_capacity(spec.range_dim);
    while columns.len() < spec.range_dim {
        let mut w: Vec<Complex<f64>> = sqrt_eig
            .iter()
            .map(|s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(s * re, s * im)
            })
            .collect();
        fft.process(&mut w);
        for part in 0..2 {
            if columns.len() == spec.range_dim {
                break;
            }
            let mut col = Vec::with_capacity(len);
            let mut acc = 0.0;
            if t0 == 0.0 {
                col.push(0.0);
            }
            for z in &w[..m] {
                acc += scale * if part == 0 { z.re } else { z.im };
                col.push(acc);
            }
            columns.push(col);
        }
    }
    Ok(columns)
}

/// values[i] += f(points[i]).
pub fn add_drift(path: &SamplePath, drift: &DriftSpec) -> Result<SamplePath> {
    let d = path.values.first().map_or(0, Vec::len);
    drift.validate(d)?;
    let values = path
        .points
        .iter()
        .zip(&path.values)
        .map(|(t, x)| {
            let f = drift.eval(t, d);
            x.iter().zip(&f).map(|(a, b)| a + b).collect()
        })
        .collect();
    Ok(SamplePath { points: path.points.clone(), values, seed: path.seed })
}

/// Graph points (t, X(t)) ∈ ℝ^{n+d}.
pub fn graph_points(path: &SamplePath) -> Vec<Vec<f64>> {
    path.points
        .iter()
        .zip(&path.values)
        .map(|(t, x)| t.iter().chain(x).copied().collect())
        .collect()
}

//! Scalar foundations: Gaussian distribution function, PSD Cholesky, log-domain
//! magnitudes and the seeded random stream contract.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Standard normal distribution function Φ(z).
///
/// Evaluated through the complementary error function on the tail side, so
/// `Φ(z) + Φ(-z) == 1` up to one rounding.
pub fn gaussian_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z >= 0.0 {
        1.0 - gaussian_sf(z)
    } else {
        gaussian_sf(-z)
    }
}

/// Upper tail 1 − Φ(z), accurate in the far tail.
pub fn gaussian_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// P(ρN ∈ [a − r, a + r]) for a standard normal N.
///
/// For ρ = 0 the law is a point mass at zero, giving 1 when |a| ≤ r and 0 otherwise.
pub fn gaussian_interval_prob(rho: f64, a: f64, r: f64) -> Result<f64> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::invalid(format!("rho must be finite and >= 0, got {rho}")));
    }
    if !(r >= 0.0) || r.is_nan() {
        return Err(Error::invalid(format!("r must be >= 0, got {r}")));
    }
    if !a.is_finite() {
        return Err(Error::invalid(format!("a must be finite, got {a}")));
    }
    Ok(interval_prob_unchecked(rho, a, r))
}

/// Same as [`gaussian_interval_prob`] without argument validation.
#[inline]
pub(crate) fn interval_prob_unchecked(rho: f64, a: f64, r: f64) -> f64 {
    let b = a.abs();
    if rho == 0.0 {
        return if b <= r { 1.0 } else { 0.0 };
    }
    if r == f64::INFINITY {
        return 1.0;
    }
    let lo = (b - r) / rho;
    let hi = (b + r) / rho;
    let p = if lo >= 0.0 {
        gaussian_sf(lo) - gaussian_sf(hi)
    } else {
        1.0 - gaussian_sf(-lo) - gaussian_sf(hi)
    };
    p.clamp(0.0, 1.0)
}

/// Dense square matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::invalid("matrix must be square"));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self) -> bool {
        for i in 0..self.n {
            for j in 0..i {
                let (a, b) = (self.get(i, j), self.get(j, i));
                if a != b && (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return false;
                }
            }
        }
        true
    }

    /// L·Lᵀ for a lower-triangular `self`.
    pub fn mul_lower_transpose(&self) -> Matrix {
        let n = self.n;
        Matrix::from_fn(n, |i, j| {
            let k = i.min(j) + 1;
            self.row(i)[..k]
                .iter()
                .zip(&self.row(j)[..k])
                .map(|(a, b)| a * b)
                .sum()
        })
    }

    /// y = L·z for a lower-triangular `self`.
    pub fn lower_mul_vec(&self, z: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.row(i)[..=i]
                    .iter()
                    .zip(&z[..=i])
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }
}

/// Number of jittered retries after the plain attempt.
pub const JITTER_RETRIES: usize = 4;
/// Base jitter, relative to the mean diagonal entry.
pub const JITTER_BASE: f64 = 1e-12;

/// Cholesky factor of a symmetric positive semidefinite matrix.
///
/// The plain factorization is tried first. On failure the diagonal is
/// shifted by `1e-12 · trace/dim`, then ×10 per retry, for at most
/// [`JITTER_RETRIES`] retries. The error carries the pivot index of the last
/// failed attempt.
pub fn cholesky_psd(matrix: &Matrix) -> Result<Matrix> {
    if !matrix.is_symmetric() {
        return Err(Error::invalid("matrix is not symmetric"));
    }
    let n = matrix.dim();
    if n == 0 {
        return Ok(Matrix::zeros(0));
    }
    let scale = (matrix.trace() / n as f64).abs().max(f64::MIN_POSITIVE);
    let mut last_pivot = 0;
    for attempt in 0..=JITTER_RETRIES {
        let jitter = if attempt == 0 {
            0.0
        } else {
            JITTER_BASE * scale * 10f64.powi(attempt as i32 - 1)
        };
        match cholesky_attempt(matrix, jitter) {
            Ok(l) => return Ok(l),
            Err(p) => last_pivot = p,
        }
    }
    Err(Error::NotPositiveSemidefinite { pivot: last_pivot })
}

fn cholesky_attempt(a: &Matrix, jitter: f64) -> std::result::Result<Matrix, usize> {
    let n = a.dim();
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let s: f64 = l.row(j)[..j].iter().map(|x| x * x).sum();
        let d = a.get(j, j) + jitter - s;
        if !(d > 0.0) || !d.is_finite() {
            return Err(j);
        }
        let ljj = d.sqrt();
        l.set(j, j, ljj);
        for i in (j + 1)..n {
            let (upto_i, from_i) = l.data.split_at_mut(i * n);
            let row_j = &upto_i[j * n..j * n + j];
            let row_i = &mut from_i[..n];
            let dot: f64 = row_i[..j].iter().zip(row_j).map(|(x, y)| x * y).sum();
            row_i[j] = (a.get(i, j) - dot) / ljj;
        }
    }
    Ok(l)
}

/// A positive magnitude stored by its natural logarithm.
///
/// Used for quantities such as 2^-128 or 2^-2^40 that no fixed-width float holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    pub logv: f64,
}

impl LogValue {
    pub fn from_log(logv: f64) -> Result<Self> {
        if !logv.is_finite() {
            return Err(Error::invalid(format!("log value must be finite, got {logv}")));
        }
        Ok(LogValue { logv })
    }

    pub fn from_value(x: f64) -> Result<Self> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::invalid(format!("magnitude must be positive and finite, got {x}")));
        }
        Ok(LogValue { logv: x.ln() })
    }

    pub const ONE: LogValue = LogValue { logv: 0.0 };

    /// The represented magnitude (may underflow to 0 or overflow to ∞).
    pub fn value(self) -> f64 {
        self.logv.exp()
    }

    pub fn ln(self) -> f64 {
        self.logv
    }

    pub fn powf(self, p: f64) -> LogValue {
        LogValue { logv: self.logv * p }
    }

    pub fn recip(self) -> LogValue {
        LogValue { logv: -self.logv }
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        LogValue { logv: self.logv + rhs.logv }
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        LogValue { logv: self.logv - rhs.logv }
    }
}

impl Add for LogValue {
    type Output = LogValue;
    /// Sum of magnitudes, log-sum-exp.
    fn add(self, rhs: LogValue) -> LogValue {
        let (hi, lo) = if self.logv >= rhs.logv { (self, rhs) } else { (rhs, self) };
        LogValue { logv: hi.logv + (lo.logv - hi.logv).exp().ln_1p() }
    }
}

impl Eq for LogValue {}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LogValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.logv.total_cmp(&other.logv)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exp({})", self.logv)
    }
}

/// Seed of a reproducible random stream.
///
/// The generator is ChaCha20 keyed by `master` (little-endian in the first
/// eight key bytes, remaining bytes zero) with the 64-bit stream id set to
/// `stream`. Replica `i` of an experiment uses `stream = i`. Any ChaCha20
/// implementation following this rule reproduces the same bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

impl Seed {
    pub fn new(master: u64) -> Self {
        Seed { master, stream: 0 }
    }

    /// Seed for replica `i` under the same master.
    pub fn replica(self, i: u64) -> Self {
        Seed { master: self.master, stream: i }
    }

    pub fn rng(self) -> ChaCha20Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master.to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(self.stream);
        rng
    }
}

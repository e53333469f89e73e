//! Kernel functionals: I_d, F_β, G_d, the Gaussian product kernel H and its
//! integral against a measure.
//!
//! All kernels use the maximum norm on ℝᵈ and ℝ^{n+d}; the only Euclidean
//! quantity is the distance in F_β.

use serde::{Deserialize, Serialize};

use crate::fields::{DriftSpec, FieldSpec};
use crate::measures::{DiscreteMeasure, Norm};
use crate::numerics::interval_prob_unchecked;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Image,
    Graph,
}

/// A field with drift together with a measure on its parameter space.
#[derive(Debug, Clone)]
pub struct KernelContext {
    pub spec: FieldSpec,
    pub drift: DriftSpec,
    pub measure: DiscreteMeasure,
    pub mode: Mode,
}

impl KernelContext {
    pub fn new(spec: FieldSpec, drift: DriftSpec, measure: DiscreteMeasure, mode: Mode) -> Result<Self> {
        spec.validate()?;
        drift.validate(spec.range_dim)?;
        if measure.dim() != spec.domain_dim {
            return Err(Error::invalid(format!(
                "measure lives in dimension {}, field domain is {}",
                measure.dim(),
                spec.domain_dim
            )));
        }
        Ok(KernelContext { spec, drift, measure, mode })
    }
}

/// I_d(x) = ∏ min{1, |x_i|⁻¹}, with min{1, 0⁻¹} = 1.
pub fn kernel_id(x: &[f64]) -> f64 {
    x.iter()
        .map(|v| {
            let a = v.abs();
            if a <= 1.0 {
                1.0
            } else {
                1.0 / a
            }
        })
        .product()
}

/// I_d((f(y) − f(x))/r).
pub fn kernel_ifd(fx: &[f64], fy: &[f64], r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid("r must be positive"));
    }
    if fx.len() != fy.len() {
        return Err(Error::invalid("dimension mismatch"));
    }
    let z: Vec<f64> = fx.iter().zip(fy).map(|(a, b)| (b - a) / r).collect();
    Ok(kernel_id(&z))
}

#[inline]
fn f_beta_term(dist: f64, beta: f64, r: f64) -> f64 {
    if dist <= r {
        1.0
    } else {
        (r / dist).powf(beta)
    }
}

/// F_β(x, r) = ∫ min{1, r^β |y−x|^{−β}} dμ(y) with Euclidean |·|.
pub fn kernel_f_beta(mu: &DiscreteMeasure, beta: f64, x: &[f64], r: f64) -> Result<f64> {
    if x.len() != mu.dim() {
        return Err(Error::invalid("dimension mismatch"));
    }
    if !(beta > 0.0) || !(r > 0.0) {
        return Err(Error::invalid("beta and r must be positive"));
    }
    Ok(mu
        .atoms()
        .zip(mu.weights())
        .map(|(y, w)| w * f_beta_term(Norm::Euclidean.dist(x, y), beta, r))
        .sum())
}

/// G_d(x, r) = ∫ I_d((y − v)/r) dμ_{u,r}(y) for x = (u, v) ∈ ℝⁿ × ℝᵈ.
pub fn kernel_g_d(mu: &DiscreteMeasure, n: usize, d: usize, x: &[f64], r: f64) -> Result<f64> {
    if d == 0 || n + d != mu.dim() || x.len() != mu.dim() {
        return Err(Error::invalid(format!(
            "need n + d = {} with d >= 1 and a point of that dimension",
            mu.dim()
        )));
    }
    if !(r > 0.0) {
        return Err(Error::invalid("r must be positive"));
    }
    let (u, v) = x.split_at(n);
    let mut total = 0.0;
    for (y, w) in mu.atoms().zip(mu.weights()) {
        if Norm::Max.dist(&y[..n], u) > r {
            continue;
        }
        let k: f64 = y[n..]
            .iter()
            .zip(v)
            .map(|(yi, vi)| {
                let a = (yi - vi).abs();
                if a <= r {
                    1.0
                } else {
                    r / a
                }
            })
            .product();
        total += w * k;
    }
    Ok(total)
}

/// H(t, s, r) = P(‖Z(t) − Z(s)‖_max ≤ r) for Z = X + f, which factorizes over
/// the independent coordinates.
pub fn h_fx(ctx: &KernelContext, t: &[f64], s: &[f64], r: f64) -> Result<f64> {
    let n = ctx.spec.domain_dim;
    if t.len() != n || s.len() != n {
        return Err(Error::invalid("points must lie in the field's domain"));
    }
    if !(r >= 0.0) {
        return Err(Error::invalid("r must be >= 0"));
    }
    let d = ctx.spec.range_dim;
    let ft = ctx.drift.eval(t, d);
    let fs = ctx.drift.eval(s, d);
    let rho = Norm::Euclidean.dist(t, s).powf(ctx.spec.hurst);
    Ok(ft
        .iter()
        .zip(&fs)
        .map(|(a, b)| interval_prob_unchecked(rho, a - b, r))
        .product())
}

/// E μ_Z(B(Z(t), r)) = ∫ H(t, s, r) dμ(s); in graph mode the integral runs
/// over D(t, r) only.
pub fn expected_ball_mass(ctx: &KernelContext, t: &[f64], r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid("r must be positive"));
    }
    if t.len() != ctx.spec.domain_dim {
        return Err(Error::invalid("point must lie in the field's domain"));
    }
    let eval = BallMassEvaluator::new(ctx);
    let ft = ctx.drift.eval(t, ctx.spec.range_dim);
    Ok(eval.profile_at(t, &ft, &[r], Norm::Max)[0])
}

/// Evaluates r ↦ E μ_Z(B(Z(t), r)) on many radii at once, caching the drift at
/// the atoms.
pub struct BallMassEvaluator<'a> {
    ctx: &'a KernelContext,
    drift_at_atoms: Vec<Vec<f64>>,
}

impl<'a> BallMassEvaluator<'a> {
    pub fn new(ctx: &'a KernelContext) -> Self {
        let d = ctx.spec.range_dim;
        let drift_at_atoms = ctx.measure.atoms().map(|s| ctx.drift.eval(s, d)).collect();
        BallMassEvaluator { ctx, drift_at_atoms }
    }

    /// Values at the atom with index `i` for every radius.
    pub fn profile(&self, i: usize, radii: &[f64], norm: Norm) -> Vec<f64> {
        let t = self.ctx.measure.atom(i);
        self.profile_at(t, &self.drift_at_atoms[i], radii, norm)
    }

    /// Values at an arbitrary point `t` with drift value `ft`.
    ///
    /// `norm` selects the ball shape; [`Norm::Max`] is the standard choice and
    /// [`Norm::Euclidean`] exists for norm-robustness comparisons.
    pub fn profile_at(&self, t: &[f64], ft: &[f64], radii: &[f64], norm: Norm) -> Vec<f64> {
        let mu = &self.ctx.measure;
        let alpha = self.ctx.spec.hurst;
        let graph = self.ctx.mode == Mode::Graph;
        let mut out = vec![0.0; radii.len()];
        let mut diff = vec![0.0; ft.len()];
        let rmax = radii.iter().copied().fold(0.0, f64::max);
        for ((s, w), fs) in mu.atoms().zip(mu.weights()).zip(&self.drift_at_atoms) {
            let dt = norm.dist(t, s);
            if graph && dt > rmax {
                continue;
            }
            let rho = Norm::Euclidean.dist(t, s).powf(alpha);
            for (dv, (a, b)) in diff.iter_mut().zip(ft.iter().zip(fs)) {
                *dv = a - b;
            }
            for (o, &r) in out.iter_mut().zip(radii) {
                if graph && dt > r {
                    continue;
                }
                let p = match norm {
                    Norm::Max => diff.iter().map(|a| interval_prob_unchecked(rho, *a, r)).product(),
                    Norm::Euclidean => {
                        let rv = if graph { (r * r - dt * dt).max(0.0).sqrt() } else { r };
                        euclidean_ball_prob(rho, &diff, rv)
                    }
                };
                *o += w * p;
            }
        }
        out
    }
}

/// P(‖ρN + a‖₂ ≤ r) for a standard normal vector N in ℝᵈ (noncentral χ² law).
pub(crate) fn euclidean_ball_prob(rho: f64, a: &[f64], r: f64) -> f64 {
    if a.len() == 1 {
        return interval_prob_unchecked(rho, a[0], r);
    }
    let a2: f64 = a.iter().map(|x| x * x).sum();
    if rho == 0.0 {
        return if a2.sqrt() <= r { 1.0 } else { 0.0 };
    }
    let k = a.len() as f64 / 2.0;
    let x = r * r / (2.0 * rho * rho);
    let half_lambda = a2 / (2.0 * rho * rho);
    if half_lambda == 0.0 {
        return statrs::function::gamma::gamma_lr(k, x);
    }
    // Poisson mixture of central chi-square laws
    let jmax = (half_lambda + 40.0 * half_lambda.sqrt() + 60.0).ceil() as usize;
    let jmode = half_lambda.floor() as usize;
    let log_pois = |j: usize| {
        -half_lambda + j as f64 * half_lambda.ln() - statrs::function::gamma::ln_gamma(j as f64 + 1.0)
    };
    let lo = jmode.saturating_sub(40 + (40.0 * half_lambda.sqrt()) as usize);
    let mut total = 0.0;
    for j in lo..=jmax {
        let w = log_pois(j).exp();
        if w == 0.0 {
            continue;
        }
        total += w * statrs::function::gamma::gamma_lr(k + j as f64, x);
    }
    total.clamp(0.0, 1.0)
}

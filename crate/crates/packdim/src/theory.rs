//! Closed-form dimension predictions for images and graphs of fBm.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hurst index α, range dimension d and packing dimension β of the set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub alpha: f64,
    pub d: usize,
    pub beta: f64,
}

impl Regime {
    pub fn new(alpha: f64, d: usize, beta: f64) -> Result<Self> {
        let r = Regime { alpha, d, beta };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Regime(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if self.d == 0 {
            return Err(Error::Regime("d must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Regime(format!("beta must lie in [0,1], got {}", self.beta)));
        }
        Ok(())
    }

    fn ad(&self) -> f64 {
        self.alpha * self.d as f64
    }

    fn require_subcritical(&self) -> Result<()> {
        self.validate()?;
        if self.ad() >= 1.0 {
            return Err(Error::Regime(format!("need alpha*d < 1, got {}", self.ad())));
        }
        Ok(())
    }
}

/// min{d, β/α}: packing dimension of X(A) when dim A = Dim A = β.
pub fn predict_image(r: &Regime) -> Result<f64> {
    r.validate()?;
    Ok((r.d as f64).min(r.beta / r.alpha))
}

/// min{β/α, β + d(1−α)}: the homogeneous-set value for the graph.
pub fn predict_graph_upper(r: &Regime) -> Result<f64> {
    r.validate()?;
    Ok((r.beta / r.alpha).min(r.beta + r.d as f64 * (1.0 - r.alpha)))
}

/// βd / (αd + β(1 − αd)), lower bound for Dim X(A).
pub fn tx_lower(r: &Regime) -> Result<f64> {
    r.require_subcritical()?;
    if r.beta == 0.0 {
        return Ok(0.0);
    }
    let d = r.d as f64;
    Ok(r.beta * d / (r.ad() + r.beta * (1.0 - r.ad())))
}

/// max{βd/(αd + β(1−αd)), β(d + 1 − αd)}, lower bound for the graph.
pub fn graph_lower(r: &Regime) -> Result<f64> {
    let t = tx_lower(r)?;
    Ok(t.max(r.beta * (r.d as f64 + 1.0 - r.ad())))
}

/// g(x) = β / (α(1−β)x).
pub fn gh_g(r: &Regime, x: f64) -> f64 {
    r.beta / (r.alpha * (1.0 - r.beta) * x)
}

/// h(x) = (1 − 1/x)d on [1, 1/α] and (1−α)d + 1 − 1/(αx) beyond.
pub fn gh_h(r: &Regime, x: f64) -> f64 {
    let d = r.d as f64;
    if x <= 1.0 / r.alpha {
        (1.0 - 1.0 / x) * d
    } else {
        (1.0 - r.alpha) * d + 1.0 - 1.0 / (r.alpha * x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GhSolution {
    pub x_star: f64,
    pub value: f64,
    /// 1 for the crossing in [1, 1/α], 2 beyond.
    pub branch: u8,
}

/// Solves g(x★) = h(x★) on [1, ∞) in closed form.
///
/// With K = β/(α(1−β)) the crossing is x = (K + d)/d on the first branch and
/// x = (K + 1/α)/((1−α)d + 1) on the second; exactly one is consistent.
pub fn gh_solver(r: &Regime) -> Result<GhSolution> {
    r.require_subcritical()?;
    if !(r.beta > 0.0 && r.beta < 1.0) {
        return Err(Error::Regime("beta must lie in (0,1)".into()));
    }
    let d = r.d as f64;
    let k = r.beta / (r.alpha * (1.0 - r.beta));
    let inv_a = 1.0 / r.alpha;
    let x1 = (k + d) / d;
    let x2 = (k + inv_a) / ((1.0 - r.alpha) * d + 1.0);
    let first = (1.0..=inv_a).contains(&x1);
    let second = x2 > inv_a;
    let (x_star, branch) = match (first, second) {
        (true, false) => (x1, 1),
        (false, true) => (x2, 2),
        _ => {
            return Err(Error::DegenerateRegime(format!(
                "no unique crossing (x1 = {x1}, x2 = {x2}, 1/alpha = {inv_a})"
            )))
        }
    };
    let value = gh_g(r, x_star);
    let expected = graph_lower(r)?;
    if (value - expected).abs() > 1e-9 {
        return Err(Error::DegenerateRegime(format!(
            "g(x*) = {value} disagrees with the lower bound {expected}"
        )));
    }
    Ok(GhSolution { x_star, value, branch })
}

/// Dim X(A) = Dim_{αd} A / α.
pub fn predict_image_profile(alpha: f64, d: usize, profile_value: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || d == 0 {
        return Err(Error::Regime("alpha must lie in (0,1) and d >= 1".into()));
    }
    let cap = alpha * d as f64;
    if !(profile_value >= 0.0) || profile_value > cap + 1e-12 {
        return Err(Error::invalid(format!("profile value must lie in [0, {cap}]")));
    }
    Ok(profile_value / alpha)
}

/// Hausdorff dimensions of image and graph: (min{β/α, d}, min{β/α, β + d(1−α)}).
pub fn kahane_dims(alpha: f64, d: usize, hausdorff_beta: f64) -> Result<(f64, f64)> {
    let r = Regime::new(alpha, d, hausdorff_beta)?;
    Ok((predict_image(&r)?, predict_graph_upper(&r)?))
}

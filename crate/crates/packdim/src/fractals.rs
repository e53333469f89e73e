//! Nested-interval Cantor-type sets on the line.
//!
//! [`NestedIntervalSystem`] stores, per level, the child offsets inside a
//! parent interval. Every parent at a level has the same child pattern, so a
//! system with 2^40 intervals still occupies a few kilobytes; explicit
//! endpoints are materialized on demand.
//!
//! [`SymbolicScaleSystem`] keeps log(1/δ_k), log(1/η_k) and log m_k only,
//! which is the only way to handle Talagrand–Xiao sets past the second level:
//! δ_2 is already 2^-128 for β = ½ and the exponents grow like 2^{k²/2}.

use serde::Serialize;

use crate::measures::DiscreteMeasure;
use crate::numerics::LogValue;
use crate::{Error, Result};

/// Largest number of explicit intervals any routine will materialize.
pub const MAX_EXPLICIT: usize = 1 << 22;
/// Interval count limit for [`SymbolicScaleSystem::realize_explicit`].
pub const MAX_REALIZED: u64 = 1_000_000;
/// Largest log(1/δ) accepted by [`SymbolicScaleSystem::realize_explicit`].
pub const MAX_REALIZED_LOG: f64 = 700.0;

const REL_TOL: f64 = 1e-12;
const UNIT_TOL: f64 = 1e-9;

/// One level of a nested system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    /// Common interval length δ_k.
    pub delta: f64,
    /// Smallest distance between sibling intervals (None at level 0).
    pub eta: Option<f64>,
    /// Child left endpoints relative to the parent's left endpoint.
    pub offsets: Vec<f64>,
    /// True when consecutive siblings are separated by exactly `eta`.
    pub uniform_gaps: bool,
}

impl Level {
    pub fn branches(&self) -> usize {
        self.offsets.len()
    }
}

/// Where a system came from; carried along for reporting and for
/// [`extract_e_gamma`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemMeta {
    UniformCantor { branches: usize, ratio: f64, dimension: f64 },
    TalagrandXiao { beta: f64, delta0: f64 },
    Subsystem { base_levels: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestedIntervalSystem {
    pub levels: Vec<Level>,
    pub meta: SystemMeta,
}

impl NestedIntervalSystem {
    /// Index of the deepest level.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn delta(&self, k: usize) -> f64 {
        self.levels[k].delta
    }

    /// Number of level-k intervals as a float (exact below 2^53).
    pub fn count(&self, k: usize) -> f64 {
        self.levels[1..=k].iter().map(|l| l.branches() as f64).product()
    }

    /// Similarity dimension, when the system is a uniform Cantor set.
    pub fn similarity_dimension(&self) -> Option<f64> {
        match self.meta {
            SystemMeta::UniformCantor { dimension, .. } => Some(dimension),
            _ => None,
        }
    }

    /// Left endpoints of all level-k intervals in increasing order.
    pub fn lefts(&self, k: usize) -> Result<Vec<f64>> {
        if k > self.depth() {
            return Err(Error::OutOfRange(format!(
                "level {k} exceeds depth {}",
                self.depth()
            )));
        }
        if self.count(k) > MAX_EXPLICIT as f64 {
            return Err(Error::ScaleUnrepresentable {
                level: k,
                reason: format!("{} intervals exceed the explicit limit", self.count(k)),
            });
        }
        let mut cur = self.levels[0].offsets.clone();
        for level in &self.levels[1..=k] {
            let mut next = Vec::with_capacity(cur.len() * level.branches());
            for &p in &cur {
                next.extend(level.offsets.iter().map(|o| p + o));
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Closed intervals of level k.
    pub fn intervals(&self, k: usize) -> Result<Vec<(f64, f64)>> {
        let d = self.delta(k);
        Ok(self.lefts(k)?.into_iter().map(|a| (a, a + d)).collect())
    }

    /// Checks nesting, disjointness and the gap bookkeeping at every level.
    pub fn check_invariants(&self) -> Result<()> {
        for (k, level) in self.levels.iter().enumerate().skip(1) {
            let parent = self.levels[k - 1].delta;
            let eta = level
                .eta
                .ok_or_else(|| Error::invalid(format!("level {k} lacks a gap")))?;
            let tol = REL_TOL * parent;
            if level.offsets.is_empty() {
                return Err(Error::invalid(format!("level {k} has no children")));
            }
            if level.offsets[0] < -tol {
                return Err(Error::invalid(format!("level {k}: child starts before parent")));
            }
            if level.offsets[level.branches() - 1] + level.delta > parent + tol {
                return Err(Error::invalid(format!("level {k}: child leaves parent")));
            }
            for w in level.offsets.windows(2) {
                let gap = w[1] - w[0] - level.delta;
                if gap < eta - tol {
                    return Err(Error::invalid(format!("level {k}: siblings closer than eta")));
                }
                if level.uniform_gaps && (gap - eta).abs() > tol {
                    return Err(Error::invalid(format!("level {k}: non-uniform sibling gap")));
                }
            }
            if level.uniform_gaps
                && level.branches() as f64 * (eta + level.delta) > parent * (1.0 + 4.0 * REL_TOL) + eta
            {
                return Err(Error::invalid(format!("level {k}: m(η+δ) exceeds parent length")));
            }
        }
        Ok(())
    }
}

/// Self-similar Cantor set in [0,1] with `branches` pieces of ratio `ratio`,
/// evenly spread so the first child starts at the parent's left end and the
/// last ends at its right end.
pub fn build_uniform_cantor(branches: usize, ratio: f64, levels: usize) -> Result<NestedIntervalSystem> {
    if branches < 2 {
        return Err(Error::invalid("need at least two branches"));
    }
    if !(ratio > 0.0) {
        return Err(Error::invalid("ratio must be positive"));
    }
    if branches as f64 * ratio >= 1.0 {
        return Err(Error::GeometryInfeasible(format!(
            "{branches} pieces of ratio {ratio} do not fit"
        )));
    }
    if levels > 40 {
        return Err(Error::invalid("at most 40 levels"));
    }
    let n = branches as f64;
    let mut out = vec![Level { delta: 1.0, eta: None, offsets: vec![0.0], uniform_gaps: true }];
    for k in 1..=levels {
        let parent = out[k - 1].delta;
        let delta = ratio.powi(k as i32);
        let eta = parent * (1.0 - n * ratio) / (n - 1.0);
        let offsets = (0..branches).map(|i| i as f64 * (delta + eta)).collect();
        out.push(Level { delta, eta: Some(eta), offsets, uniform_gaps: true });
    }
    Ok(NestedIntervalSystem {
        levels: out,
        meta: SystemMeta::UniformCantor {
            branches,
            ratio,
            dimension: n.ln() / (1.0 / ratio).ln(),
        },
    })
}

/// One atom per level-k interval, at its left endpoint, with equal weights.
pub fn natural_measure(sys: &NestedIntervalSystem, level: usize) -> Result<DiscreteMeasure> {
    let lefts = sys.lefts(level)?;
    let w = 1.0 / lefts.len() as f64;
    let n = lefts.len();
    DiscreteMeasure::from_flat(1, lefts, vec![w; n])
}

/// Symbolic level data, all in log domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolicLevel {
    /// 1/δ_k.
    pub inv_delta: LogValue,
    /// 1/η_k (None at level 0).
    pub inv_eta: Option<LogValue>,
    /// m_k (1 at level 0).
    pub m: LogValue,
    /// m_k exactly, when it fits in 53 bits.
    pub m_exact: Option<u64>,
}

impl SymbolicLevel {
    pub fn log_inv_delta(&self) -> f64 {
        self.inv_delta.ln()
    }

    pub fn log_inv_eta(&self) -> Option<f64> {
        self.inv_eta.map(LogValue::ln)
    }

    pub fn log_m(&self) -> f64 {
        self.m.ln()
    }
}

/// Log-domain description of a nested system with evenly spaced children.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolicScaleSystem {
    pub beta: f64,
    pub delta0: f64,
    pub levels: Vec<SymbolicLevel>,
    pub meta: SystemMeta,
}

fn floor_snapped(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= REL_TOL * x.abs() {
        r
    } else {
        x.floor()
    }
}

/// Builds the Talagrand–Xiao sequences δ_k, η_k, m_k in log domain.
///
/// With L_k = log(1/δ_k) and H_k = log(1/η_k):
///
/// ```text
/// H_k     = (L_{k-1} + log 2) / (1 - β)
/// log m_k = log ⌊exp(β H_k)⌋       (exact while m_k ≤ 2^53, β H_k beyond)
/// L_k     = max{ H_k + log 2, 2^{k+1} Σ_{j≤k} log m_j }
/// ```
///
/// L_k grows like 2^{k²/2}; around k = 44 it leaves the double range and the
/// builder reports the level as unrepresentable.
pub fn build_tx_system(beta: f64, delta0: f64, levels: usize) -> Result<SymbolicScaleSystem> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid("beta must lie in (0,1)"));
    }
    if !(delta0 > 0.0 && delta0 < 0.5) {
        return Err(Error::invalid("delta0 must lie in (0,1/2)"));
    }
    if levels > 60 {
        return Err(Error::invalid("at most 60 levels"));
    }
    let ln2 = std::f64::consts::LN_2;
    let mut out = vec![SymbolicLevel {
        inv_delta: LogValue::from_value(1.0 / delta0)?,
        inv_eta: None,
        m: LogValue::ONE,
        m_exact: Some(1),
    }];
    let mut sum_logm = 0.0;
    for k in 1..=levels {
        let l_prev = out[k - 1].log_inv_delta();
        let h = (l_prev + ln2) / (1.0 - beta);
        let bh = beta * h;
        let (logm, m_exact) = if bh <= 53.0 * ln2 {
            let m = floor_snapped(bh.exp());
            (m.ln(), Some(m as u64))
        } else {
            (bh, None)
        };
        sum_logm += logm;
        let l = (h + ln2).max(2f64.powi(k as i32 + 1) * sum_logm);
        if !l.is_finite() || l > f64::MAX / 16.0 {
            return Err(Error::ScaleUnrepresentable {
                level: k,
                reason: "log(1/delta_k) overflows double precision".into(),
            });
        }
        out.push(SymbolicLevel {
            inv_delta: LogValue::from_log(l)?,
            inv_eta: Some(LogValue::from_log(h)?),
            m: LogValue::from_log(logm)?,
            m_exact,
        });
    }
    Ok(SymbolicScaleSystem {
        beta,
        delta0,
        levels: out,
        meta: SystemMeta::TalagrandXiao { beta, delta0 },
    })
}

impl SymbolicScaleSystem {
    /// Symbolic form of [`build_uniform_cantor`], usable to any depth ≤ 40.
    pub fn uniform_cantor(branches: usize, ratio: f64, levels: usize) -> Result<Self> {
        let nested = build_uniform_cantor(branches, ratio, 0)?;
        if levels > 40 {
            return Err(Error::invalid("at most 40 levels"));
        }
        let n = branches as f64;
        let lr = (1.0 / ratio).ln();
        let c = (1.0 - n * ratio) / (n - 1.0);
        let mut out = vec![SymbolicLevel {
            inv_delta: LogValue::ONE,
            inv_eta: None,
            m: LogValue::ONE,
            m_exact: Some(1),
        }];
        for k in 1..=levels {
            out.push(SymbolicLevel {
                inv_delta: LogValue::from_log(k as f64 * lr)?,
                inv_eta: Some(LogValue::from_log((k - 1) as f64 * lr - c.ln())?),
                m: LogValue::from_value(n)?,
                m_exact: Some(branches as u64),
            });
        }
        Ok(SymbolicScaleSystem {
            beta: nested.similarity_dimension().unwrap_or(f64::NAN),
            delta0: 1.0,
            levels: out,
            meta: nested.meta,
        })
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// log(m_1 ⋯ m_k).
    pub fn log_count(&self, k: usize) -> f64 {
        self.levels[1..=k].iter().map(|l| l.log_m()).sum()
    }

    /// Checks δ_k < η_k < 1, δ_{k−1} = 2η_k^{1−β} and m_1⋯m_k ≤ δ_k^{−2^{−(k+1)}}
    /// in log form at every level.
    pub fn check_tx_invariants(&self) -> Result<()> {
        let ln2 = std::f64::consts::LN_2;
        for k in 1..self.levels.len() {
            let l = self.levels[k].log_inv_delta();
            let h = self.levels[k].log_inv_eta().unwrap_or(f64::NAN);
            let lp = self.levels[k - 1].log_inv_delta();
            if !(l > h && h > 0.0) {
                return Err(Error::invalid(format!("level {k}: need L_k > H_k > 0")));
            }
            if ((1.0 - self.beta) * h - ln2 - lp).abs() > REL_TOL * lp.abs().max(1.0) * 4.0 {
                return Err(Error::invalid(format!("level {k}: delta_(k-1) != 2 eta_k^(1-beta)")));
            }
            let bound = 2f64.powi(-(k as i32 + 1)) * l;
            if self.log_count(k) > bound * (1.0 + REL_TOL) {
                return Err(Error::invalid(format!("level {k}: m_1...m_k too large")));
            }
        }
        Ok(())
    }

    /// Explicit left-anchored realization of levels 0..=maxlevel.
    pub fn realize_explicit(&self, maxlevel: usize) -> Result<NestedIntervalSystem> {
        if maxlevel > self.depth() {
            return Err(Error::OutOfRange(format!(
                "level {maxlevel} exceeds depth {}",
                self.depth()
            )));
        }
        let mut out = vec![Level {
            delta: (-self.levels[0].log_inv_delta()).exp(),
            eta: None,
            offsets: vec![0.0],
            uniform_gaps: true,
        }];
        let mut count: u64 = 1;
        for k in 1..=maxlevel {
            let lv = &self.levels[k];
            let l = lv.log_inv_delta();
            if l > MAX_REALIZED_LOG {
                return Err(Error::ScaleUnrepresentable {
                    level: k,
                    reason: format!("delta_k = exp(-{l}) is not a normal double"),
                });
            }
            let m = match lv.m_exact {
                Some(m) if m <= MAX_REALIZED => m,
                _ => {
                    return Err(Error::ScaleUnrepresentable {
                        level: k,
                        reason: "branch count exceeds the explicit limit".into(),
                    })
                }
            };
            count = count.saturating_mul(m);
            if count > MAX_REALIZED {
                return Err(Error::ScaleUnrepresentable {
                    level: k,
                    reason: format!("{count} intervals exceed the explicit limit"),
                });
            }
            let delta = (-l).exp();
            let eta = (-lv.log_inv_eta().unwrap_or(0.0)).exp();
            let offsets = (0..m).map(|i| i as f64 * (delta + eta)).collect();
            out.push(Level { delta, eta: Some(eta), offsets, uniform_gaps: true });
        }
        Ok(NestedIntervalSystem { levels: out, meta: self.meta.clone() })
    }
}

/// Sets whose covering numbers N(A, ε) by closed segments of length ε can be
/// computed exactly.
///
/// The count is taken over the level-k intervals with δ_k ≤ ε < δ_{k−1}.
pub trait Coverable {
    /// log N at scale ε, given 1/ε.
    fn covering_count(&self, inv_eps: LogValue) -> Result<LogValue>;
}

/// Level k with δ_k ≤ ε < δ_{k−1}, from log(1/δ_j) values and log(1/ε).
fn level_for_scale(log_inv_delta: &[f64], log_inv_eps: f64) -> Result<usize> {
    let tol = |x: f64| REL_TOL * x.abs().max(1.0);
    let l0 = log_inv_delta[0];
    if log_inv_eps < l0 - tol(l0) {
        return Err(Error::OutOfRange("scale exceeds delta_0".into()));
    }
    for (k, &l) in log_inv_delta.iter().enumerate() {
        if l >= log_inv_eps - tol(l) {
            return Ok(k);
        }
    }
    Err(Error::OutOfRange(format!(
        "scale finer than the deepest level {}",
        log_inv_delta.len() - 1
    )))
}

fn ceil_snapped(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= UNIT_TOL * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Chain steps beyond which a resonant periodic pattern is treated as contiguous.
const CHAIN_LIMIT: u64 = 10_000_000;

/// log of the greedy number of ε-segments covering m evenly spaced children
/// of length b·ε with period a·ε (b ≤ 1).
fn log_children_cover(log_m: f64, m_exact: Option<u64>, a: f64, b: f64) -> f64 {
    if a >= 1.0 - UNIT_TOL {
        return log_m;
    }
    let m_f = log_m.exp();
    let last_end = (m_f - 1.0) * a + b;
    let mut s: u64 = 1;
    loop {
        let e = s as f64;
        if e >= last_end - UNIT_TOL * last_end.max(1.0) {
            return e.ln();
        }
        let i = (e / a).floor();
        let pos = e - i * a;
        if pos >= b - UNIT_TOL {
            let block = i + 1.0;
            return match m_exact {
                Some(m) if (m as f64) <= 2f64.powi(53) => {
                    let block = block as u64;
                    let q = m / block;
                    let rem = m % block;
                    let tail = if rem > 0 {
                        ceil_snapped((rem - 1) as f64 * a + b)
                    } else {
                        0.0
                    };
                    (q as f64 * e + tail).ln()
                }
                _ => log_m - block.ln() + e.ln(),
            };
        }
        s += 1;
        if s > CHAIN_LIMIT {
            return log_m + a.ln();
        }
    }
}

impl Coverable for SymbolicScaleSystem {
    /// Greedy per-parent count times the number of parents. Exact as long as
    /// no segment can bridge two level-(k−1) intervals, that is ε < η_{k−1};
    /// coarser scales are rejected.
    fn covering_count(&self, inv_eps: LogValue) -> Result<LogValue> {
        let ls: Vec<f64> = self.levels.iter().map(|l| l.log_inv_delta()).collect();
        let le = inv_eps.ln();
        let k = level_for_scale(&ls, le)?;
        if k == 0 {
            return Ok(LogValue::ONE);
        }
        if k >= 2 {
            let h_prev = self.levels[k - 1].log_inv_eta().unwrap_or(f64::INFINITY);
            if le <= h_prev * (1.0 - REL_TOL) {
                return Err(Error::OutOfRange(format!(
                    "scale reaches the level-{} gaps; count needs an explicit system",
                    k - 1
                )));
            }
        }
        let lv = &self.levels[k];
        let log_delta = -lv.log_inv_delta();
        let log_eta = -lv.log_inv_eta().unwrap_or(f64::INFINITY);
        let log_p = log_delta.max(log_eta) + (-(log_delta - log_eta).abs()).exp().ln_1p();
        let a = (log_p + le).exp();
        let b = (log_delta + le).exp().min(1.0);
        let per_parent = log_children_cover(lv.log_m(), lv.m_exact, a, b);
        LogValue::from_log(self.log_count(k - 1) + per_parent)
    }
}

impl Coverable for NestedIntervalSystem {
    /// Left-to-right greedy sweep over the explicit level-k intervals.
    fn covering_count(&self, inv_eps: LogValue) -> Result<LogValue> {
        let ls: Vec<f64> = self.levels.iter().map(|l| -l.delta.ln()).collect();
        let k = level_for_scale(&ls, inv_eps.ln())?;
        let eps = (-inv_eps.ln()).exp();
        let n = greedy_cover(&self.intervals(k)?, eps);
        LogValue::from_value(n as f64)
    }
}

/// Number of closed segments of length `eps` a left-to-right greedy sweep
/// needs to cover the sorted intervals.
pub fn greedy_cover(intervals: &[(f64, f64)], eps: f64) -> u64 {
    let mut count = 0u64;
    let mut covered = f64::NEG_INFINITY;
    for &(a, b) in intervals {
        // endpoints built by summing offsets can overshoot by an ulp
        if b <= covered + REL_TOL * eps {
            continue;
        }
        let start = if a > covered { a } else { covered };
        let n = ceil_snapped((b - start) / eps).max(1.0);
        count += n as u64;
        covered = start + n * eps;
    }
    count
}

/// Upper and lower Minkowski ratios over the finest third of a scale grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinkowskiBounds {
    pub limsup: f64,
    pub liminf: f64,
    /// (log(1/ε), log N, log N / log(1/ε)) per grid point.
    pub table: Vec<(f64, f64, f64)>,
}

/// Evaluates log N(A, ε)/log(1/ε) on a grid of decreasing ε (increasing 1/ε).
pub fn minkowski_bounds<S: Coverable + ?Sized>(sys: &S, grid: &[LogValue]) -> Result<MinkowskiBounds> {
    if grid.is_empty() {
        return Err(Error::invalid("empty scale grid"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid must list strictly decreasing scales"));
    }
    if grid[0].ln() <= 0.0 {
        return Err(Error::invalid("grid scales must lie below 1"));
    }
    let mut table = Vec::with_capacity(grid.len());
    for &g in grid {
        let n = sys.covering_count(g)?;
        table.push((g.ln(), n.ln(), n.ln() / g.ln()));
    }
    let tail = table.len().div_ceil(3);
    let ratios = table[table.len() - tail..].iter().map(|r| r.2);
    let limsup = ratios.clone().fold(f64::NEG_INFINITY, f64::max);
    let liminf = ratios.fold(f64::INFINITY, f64::min);
    Ok(MinkowskiBounds { limsup, liminf, table })
}

/// One row of the per-level Talagrand–Xiao table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TxRow {
    pub k: usize,
    pub log_inv_delta: f64,
    pub log_inv_eta: f64,
    pub log_m: f64,
    pub ratio_at_eta: f64,
    pub ratio_at_delta: f64,
}

/// Covering ratios at ε = η_k and ε = δ_k for k = 1..=depth.
pub fn tx_table(sys: &SymbolicScaleSystem) -> Result<Vec<TxRow>> {
    let mut rows = Vec::new();
    for k in 1..=sys.depth() {
        let lv = &sys.levels[k];
        let inv_eta = lv.inv_eta.ok_or_else(|| Error::invalid("missing eta"))?;
        let at_eta = sys.covering_count(inv_eta)?.ln() / inv_eta.ln();
        let at_delta = sys.covering_count(lv.inv_delta)?.ln() / lv.log_inv_delta();
        rows.push(TxRow {
            k,
            log_inv_delta: lv.log_inv_delta(),
            log_inv_eta: inv_eta.ln(),
            log_m: lv.log_m(),
            ratio_at_eta: at_eta,
            ratio_at_delta: at_delta,
        });
    }
    Ok(rows)
}

/// Subset of a uniform Cantor set obtained by level subsampling, with its
/// natural measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EGamma {
    pub system: NestedIntervalSystem,
    /// Cantor level used for each subsystem level (starts with 0).
    pub base_levels: Vec<usize>,
    pub gamma: f64,
    pub theta: f64,
    #[serde(skip)]
    base: NestedIntervalSystem,
}

/// Which of the three structural conditions hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EGammaConditions {
    /// Children are disjoint subintervals of their parent.
    pub nested_disjoint: bool,
    /// η_n^θ < η_{n−1} for every level where both exist.
    pub gap_decay: bool,
    /// μ(I_n) ≤ η_{n−1}^γ for the natural measure.
    pub mass_bound: bool,
}

impl EGammaConditions {
    pub fn all(&self) -> bool {
        self.nested_disjoint && self.gap_decay && self.mass_bound
    }
}

impl EGamma {
    /// The natural measure of the underlying Cantor set at `resolution`.
    /// Its support shrinks to the subsystem limit set as resolution grows.
    pub fn measure(&self, resolution: usize) -> Result<DiscreteMeasure> {
        if resolution > self.base.depth() {
            return Err(Error::OutOfRange(format!(
                "resolution {resolution} exceeds base depth {}",
                self.base.depth()
            )));
        }
        natural_measure(&self.base, resolution)
    }

    pub fn base(&self) -> &NestedIntervalSystem {
        &self.base
    }

    /// Separation η between the children of a level-n interval, if level n+1 exists.
    pub fn eta(&self, n: usize) -> Option<f64> {
        self.system.levels.get(n + 1).and_then(|l| l.eta)
    }

    /// Mass of one level-n interval under the natural measure.
    pub fn interval_mass(&self, n: usize) -> f64 {
        1.0 / self.system.count(n)
    }

    pub fn check_conditions(&self) -> EGammaConditions {
        let nested_disjoint = self.system.check_invariants().is_ok();
        let levels = &self.system.levels;
        let mut gap_decay = true;
        let mut mass_bound = true;
        for n in 1..levels.len() {
            let eta_prev = levels[n].eta.unwrap_or(0.0);
            if let Some(eta_n) = levels.get(n + 1).and_then(|l| l.eta) {
                gap_decay &= eta_n.powf(self.theta) < eta_prev;
            }
            mass_bound &= self.interval_mass(n) <= eta_prev.powf(self.gamma) * (1.0 + REL_TOL);
        }
        EGammaConditions { nested_disjoint, gap_decay, mass_bound }
    }
}

/// Extracts a subsystem E(γ, θ) of a uniform Cantor set.
///
/// Subsystem level n uses Cantor level k_n, the smallest k > k_{n−1} with
/// gap(k)^θ < gap(k_{n−1}) and N^{−k} ≤ gap(k)^γ, where gap(k) is the sibling
/// gap at Cantor level k. Full branching is kept, so the natural measure
/// satisfies the mass bound directly. At least two levels below the root are
/// required.
pub fn extract_e_gamma(sys: &NestedIntervalSystem, gamma: f64, theta: f64) -> Result<EGamma> {
    let (branches, dimension) = match sys.meta {
        SystemMeta::UniformCantor { branches, dimension, .. } => (branches, dimension),
        _ => return Err(Error::invalid("extraction needs a uniform Cantor system")),
    };
    if !(gamma > 0.0) || gamma >= dimension {
        return Err(Error::invalid(format!(
            "gamma must lie in (0, {dimension}), got {gamma}"
        )));
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::invalid("theta must be positive and finite"));
    }
    let gap = |k: usize| sys.levels[k].eta.unwrap_or(f64::NAN);
    let n = branches as f64;
    let mut chosen = vec![0usize];
    let mut k = 1;
    while k <= sys.depth() {
        let prev = *chosen.last().unwrap();
        let decay_ok = prev == 0 || gap(k).powf(theta) < gap(prev);
        let mass_ok = n.powi(-(k as i32)) <= gap(k).powf(gamma) * (1.0 + REL_TOL);
        let width = n.powi((k - prev) as i32);
        if width > MAX_EXPLICIT as f64 {
            break;
        }
        if decay_ok && mass_ok {
            chosen.push(k);
        }
        k += 1;
    }
    if chosen.len() < 3 {
        return Err(Error::DepthExhausted(format!(
            "only {} subsystem levels within depth {} for gamma={gamma}, theta={theta}",
            chosen.len() - 1,
            sys.depth()
        )));
    }
    let mut levels = vec![sys.levels[0].clone()];
    for w in chosen.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mut offsets = vec![0.0];
        for lv in &sys.levels[lo + 1..=hi] {
            let mut next = Vec::with_capacity(offsets.len() * lv.branches());
            for &o in &offsets {
                next.extend(lv.offsets.iter().map(|c| o + c));
            }
            offsets = next;
        }
        levels.push(Level {
            delta: sys.levels[hi].delta,
            eta: Some(gap(hi)),
            offsets,
            uniform_gaps: hi == lo + 1,
        });
    }
    Ok(EGamma {
        system: NestedIntervalSystem {
            levels,
            meta: SystemMeta::Subsystem { base_levels: chosen.clone() },
        },
        base_levels: chosen,
        gamma,
        theta,
        base: sys.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn uniform_cantor_examples() {
        let mt = build_uniform_cantor(2, 1.0 / 3.0, 3).unwrap();
        let l3 = mt.intervals(3).unwrap();
        assert_eq!(l3.len(), 8);
        for (a, b) in &l3 {
            assert!(close(b - a, 1.0 / 27.0, 1e-15));
        }
        assert!(close(mt.similarity_dimension().unwrap(), 0.630_929_753_571_457_4, 1e-15));
        assert!(matches!(build_uniform_cantor(3, 0.5, 2), Err(Error::GeometryInfeasible(_))));
        mt.check_invariants().unwrap();
    }

    #[test]
    fn natural_measure_examples() {
        let mt = build_uniform_cantor(2, 1.0 / 3.0, 4).unwrap();
        let m = natural_measure(&mt, 2).unwrap();
        let want = [0.0, 2.0 / 9.0, 2.0 / 3.0, 8.0 / 9.0];
        assert_eq!(m.len(), 4);
        for (i, w) in want.iter().enumerate() {
            assert!(close(m.atom(i)[0], *w, 1e-15));
            assert_eq!(m.weights()[i], 0.25);
        }
        let m0 = natural_measure(&mt, 0).unwrap();
        assert_eq!(m0.atom(0), &[0.0]);
        assert_eq!(m0.weights(), &[1.0]);
        for k in 0..=4 {
            assert_eq!(natural_measure(&mt, k).unwrap().total_mass(), 1.0);
        }
    }

    #[test]
    fn tx_examples() {
        let tx = build_tx_system(0.5, 0.25, 2).unwrap();
        let ln2 = std::f64::consts::LN_2;
        let l1 = &tx.levels[1];
        assert!(close(l1.log_inv_eta().unwrap(), 6.0 * ln2, 1e-12));
        assert_eq!(l1.m_exact, Some(8));
        assert!(close(l1.log_inv_delta(), 12.0 * ln2, 1e-12));
        let l2 = &tx.levels[2];
        assert!(close(l2.log_inv_eta().unwrap(), 26.0 * ln2, 1e-12));
        assert_eq!(l2.m_exact, Some(8192));
        assert!(close(l2.log_inv_delta(), 128.0 * ln2, 1e-12));
        tx.check_tx_invariants().unwrap();
    }

    #[test]
    fn tx_depth_limit() {
        assert!(build_tx_system(0.5, 0.25, 40).is_ok());
        assert!(matches!(
            build_tx_system(0.5, 0.25, 60),
            Err(Error::ScaleUnrepresentable { .. })
        ));
    }

    #[test]
    fn realize_examples() {
        let tx = build_tx_system(0.5, 0.25, 4).unwrap();
        let r0 = tx.realize_explicit(0).unwrap();
        assert_eq!(r0.intervals(0).unwrap(), vec![(0.0, 0.25)]);
        let r1 = tx.realize_explicit(1).unwrap();
        let iv = r1.intervals(1).unwrap();
        assert_eq!(iv.len(), 8);
        for (a, b) in &iv {
            assert!(close(b - a, 1.0 / 4096.0, 1e-18));
            assert!(*a >= 0.0 && *b <= 0.25);
        }
        r1.check_invariants().unwrap();
        let r2 = tx.realize_explicit(2).unwrap();
        assert_eq!(r2.count(2), 65536.0);
        r2.check_invariants().unwrap();
        match tx.realize_explicit(4) {
            Err(Error::ScaleUnrepresentable { level, .. }) => assert_eq!(level, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn covering_examples() {
        let ln3 = 3f64.ln();
        let mt = SymbolicScaleSystem::uniform_cantor(2, 1.0 / 3.0, 20).unwrap();
        let n = mt.covering_count(LogValue::from_log(3.0 * ln3).unwrap()).unwrap();
        assert!(close(n.ln(), 8f64.ln(), 1e-9));
        let n = mt.covering_count(LogValue::ONE).unwrap();
        assert_eq!(n.ln(), 0.0);
        let tx = build_tx_system(0.5, 0.25, 12).unwrap();
        for k in 1..=12 {
            let n = tx.covering_count(tx.levels[k].inv_delta).unwrap();
            assert!(close(n.ln(), tx.log_count(k), 1e-9 * tx.log_count(k)));
        }
        assert!(matches!(
            tx.covering_count(LogValue::from_value(2.0).unwrap()),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn symbolic_matches_explicit_sweep() {
        let tx = build_tx_system(0.5, 0.25, 2).unwrap();
        let ex = tx.realize_explicit(2).unwrap();
        let mt_s = SymbolicScaleSystem::uniform_cantor(2, 1.0 / 3.0, 8).unwrap();
        let mt_e = build_uniform_cantor(2, 1.0 / 3.0, 8).unwrap();
        let c_s = SymbolicScaleSystem::uniform_cantor(3, 0.2, 6).unwrap();
        let c_e = build_uniform_cantor(3, 0.2, 6).unwrap();
        for i in 0..400 {
            let le = 4f64.ln() + i as f64 * (128.0 * 2f64.ln() - 4f64.ln()) / 400.0;
            let g = LogValue::from_log(le).unwrap();
            if let Ok(s) = tx.covering_count(g) {
                let e = ex.covering_count(g).unwrap();
                assert!(close(s.ln(), e.ln(), 1e-9), "tx at {le}: {} vs {}", s.ln(), e.ln());
            }
        }
        for (s_sys, e_sys, lmax) in [(&mt_s, &mt_e, 8.0 * 3f64.ln()), (&c_s, &c_e, 6.0 * 5f64.ln())] {
            for i in 0..300 {
                let le = i as f64 * lmax / 300.0;
                let g = LogValue::from_log(le).unwrap();
                if let Ok(s) = s_sys.covering_count(g) {
                    let e = e_sys.covering_count(g).unwrap();
                    assert!(close(s.ln(), e.ln(), 1e-9), "at {le}: {} vs {}", s.ln(), e.ln());
                }
            }
        }
    }

    #[test]
    fn minkowski_examples() {
        let ln3 = 3f64.ln();
        let mt = SymbolicScaleSystem::uniform_cantor(2, 1.0 / 3.0, 20).unwrap();
        let grid: Vec<LogValue> = (5..=20)
            .map(|k| LogValue::from_log(k as f64 * ln3).unwrap())
            .collect();
        let b = minkowski_bounds(&mt, &grid).unwrap();
        let dim = 2f64.ln() / ln3;
        assert!(close(b.limsup, dim, 1e-6) && close(b.liminf, dim, 1e-6));
        assert!(minkowski_bounds(&mt, &[]).is_err());

        let tx = build_tx_system(0.5, 0.25, 12).unwrap();
        let mut grid = Vec::new();
        for k in 1..=12 {
            grid.push(tx.levels[k].inv_eta.unwrap());
            grid.push(tx.levels[k].inv_delta);
        }
        let b = minkowski_bounds(&tx, &grid).unwrap();
        assert!((b.limsup - 0.5).abs() <= 0.05, "limsup {}", b.limsup);
        assert!(b.liminf <= 0.05, "liminf {}", b.liminf);
    }

    #[test]
    fn e_gamma_examples() {
        let mt = build_uniform_cantor(2, 1.0 / 3.0, 12).unwrap();
        let e = extract_e_gamma(&mt, 0.3, 2.0).unwrap();
        assert!(e.check_conditions().all());
        let trivial = extract_e_gamma(&mt, 0.01, 1e6).unwrap();
        assert_eq!(trivial.base_levels, (0..=12).collect::<Vec<_>>());
        assert!(trivial.check_conditions().all());
        assert!(extract_e_gamma(&mt, 0.64, 2.0).is_err());

        let e = extract_e_gamma(&build_uniform_cantor(2, 1.0 / 3.0, 20).unwrap(), 0.3, 2.0 / 3.0)
            .unwrap();
        assert_eq!(e.base_levels, vec![0, 1, 2, 4, 7, 11, 17]);
        assert!(e.check_conditions().all());
    }
}

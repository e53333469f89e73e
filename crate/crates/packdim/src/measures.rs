//! Finitely supported probability measures on ℝᵐ.
//!
//! Masses are computed by direct summation over atoms, O(atoms) per query.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on the total mass of a probability measure.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Euclidean,
    Max,
}

impl Norm {
    #[inline]
    pub fn dist(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Norm::Euclidean => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Norm::Max => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        }
    }
}

/// A probability measure with finitely many atoms.
///
/// Atoms are stored row-major in a flat coordinate buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure, checking the probability-measure invariants.
    pub fn new(dim: usize, atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.iter().any(|a| a.len() != dim) {
            return Err(Error::invalid("atom dimension mismatch"));
        }
        Self::from_flat(dim, atoms.into_iter().flatten().collect(), weights)
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if weights.is_empty() {
            return Err(Error::invalid("measure needs at least one atom"));
        }
        if coords.len() != dim * weights.len() {
            return Err(Error::invalid("coordinate count does not match weights"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("non-finite atom coordinate"));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights must be positive and finite"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::invalid(format!("weights sum to {total}, expected 1")));
        }
        let m = DiscreteMeasure { dim, coords, weights };
        if let Some((i, j)) = m.find_duplicate() {
            return Err(Error::invalid(format!("atoms {i} and {j} coincide")));
        }
        Ok(m)
    }

    /// Equal weights on the given distinct points.
    pub fn uniform(dim: usize, atoms: Vec<Vec<f64>>) -> Result<Self> {
        let n = atoms.len();
        Self::new(dim, atoms, vec![1.0 / n as f64; n])
    }

    /// The point mass δ_x.
    pub fn dirac(x: Vec<f64>) -> Result<Self> {
        let dim = x.len();
        Self::new(dim, vec![x], vec![1.0])
    }

    fn find_duplicate(&self) -> Option<(usize, usize)> {
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::with_capacity(self.len());
        for i in 0..self.len() {
            if let Some(&j) = seen.get(&coord_key(self.atom(i))) {
                return Some((j, i));
            }
            seen.insert(coord_key(self.atom(i)), i);
        }
        None
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn atom(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn atoms(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "point has dimension {}, measure has {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// μ(B(x, r)) for the closed ball in the given norm.
    pub fn ball_mass(&self, x: &[f64], r: f64, norm: Norm) -> Result<f64> {
        self.check_point(x)?;
        if !(r >= 0.0) {
            return Err(Error::invalid(format!("radius must be >= 0, got {r}")));
        }
        Ok(self
            .atoms()
            .zip(&self.weights)
            .filter(|(y, _)| norm.dist(x, y) <= r)
            .map(|(_, w)| w)
            .sum())
    }

    /// Mass of the closed box ∏[x_i − h_i, x_i + h_i].
    pub fn rect_mass(&self, x: &[f64], halfwidths: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        if halfwidths.len() != self.dim {
            return Err(Error::invalid("halfwidth count must equal the dimension"));
        }
        if halfwidths.iter().any(|h| !(*h >= 0.0)) {
            return Err(Error::invalid("halfwidths must be >= 0"));
        }
        Ok(rect_sum(&self.coords, &self.weights, self.dim, x, halfwidths))
    }

    /// The unnormalized slice μ(D(u, r) × ·) on the last `dim − n` coordinates.
    pub fn slice(&self, n: usize, u: &[f64], r: f64) -> Result<SliceMeasure> {
        if n >= self.dim {
            return Err(Error::invalid(format!(
                "conditioning dimension {n} must be below {}",
                self.dim
            )));
        }
        if u.len() != n {
            return Err(Error::invalid("conditioning point has wrong dimension"));
        }
        if !(r >= 0.0) {
            return Err(Error::invalid("slice radius must be >= 0"));
        }
        let d = self.dim - n;
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for (y, &w) in self.atoms().zip(&self.weights) {
            if Norm::Max.dist(&y[..n], u) <= r {
                coords.extend_from_slice(&y[n..]);
                weights.push(w);
            }
        }
        let total_mass = weights.iter().sum();
        Ok(SliceMeasure { dim: d, coords, weights, total_mass })
    }

    /// Image measure μ∘h⁻¹; atoms with bitwise-equal images are merged.
    pub fn pushforward<F>(&self, h: F) -> Result<DiscreteMeasure>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let mut out_dim = None;
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut coords = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (i, (x, &w)) in self.atoms().zip(&self.weights).enumerate() {
            let y = h(x);
            if y.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidMap(format!("non-finite image of atom {i}")));
            }
            match out_dim {
                None => out_dim = Some(y.len()),
                Some(k) if k != y.len() => {
                    return Err(Error::InvalidMap("images have varying dimension".into()))
                }
                _ => {}
            }
            match index.get(&coord_key(&y)) {
                Some(&j) => weights[j] += w,
                None => {
                    index.insert(coord_key(&y), weights.len());
                    coords.extend_from_slice(&y);
                    weights.push(w);
                }
            }
        }
        let dim = out_dim.unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidMap("map has zero-dimensional range".into()));
        }
        Ok(DiscreteMeasure { dim, coords, weights })
    }

    /// Smallest pairwise Euclidean distance between atoms (∞ for one atom).
    pub fn min_atom_gap(&self) -> f64 {
        min_pairwise_distance(&self.coords, self.dim)
    }

    /// Reads the `x1,…,xm,weight` CSV format. Lines starting with `#` are skipped.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let m = headers.len().checked_sub(1).filter(|m| *m > 0).ok_or_else(|| {
            Error::invalid("measure CSV needs at least one coordinate column and a weight column")
        })?;
        if headers.get(m) != Some("weight") {
            return Err(Error::invalid("last CSV column must be `weight`"));
        }
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            for (k, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::invalid(format!("cannot parse `{field}` as a number")))?;
                if k < m {
                    coords.push(v);
                } else {
                    weights.push(v);
                }
            }
        }
        Self::from_flat(m, coords, weights)
    }

    /// Writes the `x1,…,xm,weight` CSV format, optionally preceded by a `#` comment line.
    pub fn write_csv<W: Write>(&self, mut writer: W, comment: Option<&str>) -> Result<()> {
        if let Some(c) = comment {
            writeln!(writer, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        header.push("weight".into());
        w.write_record(&header)?;
        for (x, wt) in self.atoms().zip(&self.weights) {
            let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            row.push(wt.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sub-probability measure produced by slicing; not renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceMeasure {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub weights: Vec<f64>,
    pub total_mass: f64,
}

impl SliceMeasure {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        self.coords.chunks_exact(self.dim.max(1))
    }

    /// True when mass was lost by the slice.
    pub fn is_sub_probability(&self) -> bool {
        self.total_mass < 1.0 - MASS_TOL
    }
}

#[inline]
pub(crate) fn rect_sum(coords: &[f64], weights: &[f64], dim: usize, x: &[f64], h: &[f64]) -> f64 {
    coords
        .chunks_exact(dim)
        .zip(weights)
        .filter(|(y, _)| {
            y.iter()
                .zip(x)
                .zip(h)
                .all(|((yi, xi), hi)| (yi - xi).abs() <= *hi)
        })
        .map(|(_, w)| w)
        .sum()
}

fn coord_key(x: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 compare equal, so they must share a key
    x.iter().map(|v| (if *v == 0.0 { 0.0 } else { *v }).to_bits()).collect()
}

/// Smallest Euclidean distance between distinct rows of a flat point buffer.
pub(crate) fn min_pairwise_distance(coords: &[f64], dim: usize) -> f64 {
    let n = coords.len() / dim;
    if n < 2 {
        return f64::INFINITY;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| coords[a * dim].total_cmp(&coords[b * dim]));
    let mut best = f64::INFINITY;
    for (k, &i) in order.iter().enumerate() {
        let xi = &coords[i * dim..(i + 1) * dim];
        for &j in &order[k + 1..] {
            let xj = &coords[j * dim..(j + 1) * dim];
            if xj[0] - xi[0] >= best {
                break;
            }
            best = best.min(Norm::Euclidean.dist(xi, xj));
        }
    }
    best
}

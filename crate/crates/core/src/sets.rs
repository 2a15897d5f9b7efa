//! Finite unions of lattice cells: measures, projections, translation
//! overlaps and the shift search that makes a set nearly disjoint from its
//! coordinate translates.
//!
//! Cell `i` of a set with spacing `h` is `Π_a [i_a h, (i_a + 1) h)`, so every
//! set lives on the lattice through the origin.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::grid::{check_dim, GridFunction, MAX_DIM};

pub type Cell = [i64; MAX_DIM];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSet {
    dim: usize,
    spacing: f64,
    cells: BTreeSet<Cell>,
}

impl DiscreteSet {
    pub fn empty(dim: usize, spacing: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(spacing > 0.0 && spacing.is_finite()) {
            return param(format!("spacing = {spacing} must be positive"));
        }
        Ok(DiscreteSet { dim, spacing, cells: BTreeSet::new() })
    }

    pub fn from_cells(dim: usize, spacing: f64, cells: impl IntoIterator<Item = Cell>) -> Result<Self> {
        let mut s = DiscreteSet::empty(dim, spacing)?;
        for c in cells {
            if c[dim..].iter().any(|&x| x != 0) {
                return param(format!("cell {c:?} has nonzero unused coordinates"));
            }
            s.cells.insert(c);
        }
        Ok(s)
    }

    /// Cells of `Π [lo_a, hi_a)`; the corners must be lattice points.
    pub fn box_set(lo: &[f64], hi: &[f64], spacing: f64) -> Result<Self> {
        let dim = lo.len();
        if hi.len() != dim {
            return param("box corners differ in dimension");
        }
        let mut s = DiscreteSet::empty(dim, spacing)?;
        let mut range = [(0i64, 1i64); MAX_DIM];
        for a in 0..dim {
            let i0 = lattice_index(lo[a], spacing)?;
            let i1 = lattice_index(hi[a], spacing)?;
            if i1 <= i0 {
                return param(format!("box side {a} is empty"));
            }
            range[a] = (i0, i1);
        }
        for i in range[0].0..range[0].1 {
            for j in range[1].0..range[1].1 {
                for k in range[2].0..range[2].1 {
                    s.cells.insert([i, j, k]);
                }
            }
        }
        Ok(s)
    }

    /// Cells whose center lies in the closed ball.
    pub fn ball(center: &[f64], radius: f64, spacing: f64) -> Result<Self> {
        let dim = center.len();
        let mut s = DiscreteSet::empty(dim, spacing)?;
        if !(radius >= 0.0) {
            return param(format!("radius = {radius} must be ≥ 0"));
        }
        let mut range = [(0i64, 0i64); MAX_DIM];
        for a in 0..dim {
            range[a] = (
                ((center[a] - radius) / spacing).floor() as i64 - 1,
                ((center[a] + radius) / spacing).ceil() as i64 + 1,
            );
        }
        for i in range[0].0..=range[0].1 {
            for j in range[1].0..=range[1].1 {
                for k in range[2].0..=range[2].1 {
                    let c = [i, j, k];
                    let d2: f64 = (0..dim)
                        .map(|a| ((c[a] as f64 + 0.5) * spacing - center[a]).powi(2))
                        .sum();
                    if d2 <= radius * radius {
                        s.cells.insert(c);
                    }
                }
            }
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn cells(&self) -> &BTreeSet<Cell> {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, c: &Cell) -> bool {
        self.cells.contains(c)
    }

    pub fn cell_center(&self, c: &Cell) -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim {
            x[a] = (c[a] as f64 + 0.5) * self.spacing;
        }
        x
    }

    /// `|E| = #cells · h^n`.
    pub fn measure(&self) -> f64 {
        self.cells.len() as f64 * self.spacing.powi(self.dim as i32)
    }

    /// `mes_{n−1} Π_k(E)`.
    pub fn projection_measure(&self, k: usize) -> Result<f64> {
        if self.dim == 1 {
            return Err(Error::UnsupportedDimension(
                "projections of a subset of the line are not measured".into(),
            ));
        }
        let a = self.check_axis(k)?;
        let shadow: BTreeSet<Cell> = self
            .cells
            .iter()
            .map(|c| {
                let mut d = *c;
                d[a] = 0;
                d
            })
            .collect();
        Ok(shadow.len() as f64 * self.spacing.powi(self.dim as i32 - 1))
    }

    /// `|{x ∈ E : x + m h e_k ∈ E}|`.
    pub fn overlap(&self, k: usize, shift_cells: usize) -> Result<f64> {
        let a = self.check_axis(k)?;
        Ok(self.overlap_count(a, shift_cells as i64) as f64 * self.spacing.powi(self.dim as i32))
    }

    fn overlap_count(&self, a: usize, m: i64) -> usize {
        self.cells
            .iter()
            .filter(|c| {
                let mut d = **c;
                d[a] += m;
                self.cells.contains(&d)
            })
            .count()
    }

    /// Smallest lattice shift `h ∈ (0, H]`, `H = 2μ²n/(λη)`, with
    /// `Σ_k |{x ∈ E : x + h e_k ∈ E}| < η`. `H` is rounded up to the
    /// lattice.
    pub fn translation_search(&self, mu: f64, lam: f64, eta: f64) -> Result<f64> {
        if !(mu > 0.0 && lam > 0.0 && eta > 0.0) {
            return Err(Error::Contract(format!(
                "mu, lambda, eta must be positive (got {mu}, {lam}, {eta})"
            )));
        }
        let tol = 1e-12;
        if self.measure() > mu * (1.0 + tol) {
            return Err(Error::Contract(format!("|E| = {} exceeds mu = {mu}", self.measure())));
        }
        for k in 1..=self.dim {
            let pk = self.projection_measure(k)?;
            if pk < lam * (1.0 - tol) {
                return Err(Error::Contract(format!(
                    "projection {k} has measure {pk} < lambda = {lam}"
                )));
            }
        }
        let n = self.dim as f64;
        let big_h = 2.0 * mu * mu * n / (lam * eta);
        let m_max = ((big_h / self.spacing) * (1.0 - 1e-12)).ceil().max(1.0) as i64;
        let vol = self.spacing.powi(self.dim as i32);
        for m in 1..=m_max {
            let total: usize = (0..self.dim).map(|a| self.overlap_count(a, m)).sum();
            if (total as f64) * vol < eta {
                return Ok(m as f64 * self.spacing);
            }
        }
        Err(Error::InvariantViolation(format!(
            "no lattice shift up to H = {big_h} brings the overlap below eta = {eta}"
        )))
    }

    fn check_axis(&self, k: usize) -> Result<usize> {
        if k == 0 || k > self.dim {
            return param(format!("axis {k} outside 1..={}", self.dim));
        }
        Ok(k - 1)
    }

    fn check_same_lattice(&self, other: &DiscreteSet) -> Result<()> {
        if self.dim != other.dim {
            return param("sets differ in dimension");
        }
        if ((self.spacing - other.spacing) / self.spacing).abs() > 1e-12 {
            return param(format!(
                "sets live on different lattices (spacing {} vs {})",
                self.spacing, other.spacing
            ));
        }
        Ok(())
    }

    pub fn union(&self, other: &DiscreteSet) -> Result<DiscreteSet> {
        self.check_same_lattice(other)?;
        let mut out = self.clone();
        out.cells.extend(other.cells.iter().copied());
        Ok(out)
    }

    pub fn is_subset(&self, other: &DiscreteSet) -> bool {
        self.cells.is_subset(&other.cells)
    }

    /// Lattice offsets of Euclidean length at most `radius`.
    fn disk_offsets(&self, radius: f64) -> Vec<Cell> {
        let r = (radius / self.spacing * (1.0 + 1e-12)).floor() as i64;
        let rr = (radius / self.spacing).powi(2) * (1.0 + 1e-12);
        let span = |a: usize| if a < self.dim { -r..=r } else { 0..=0 };
        let mut out = Vec::new();
        for i in span(0) {
            for j in span(1) {
                for k in span(2) {
                    if ((i * i + j * j + k * k) as f64) <= rr {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        out
    }

    fn is_interior(&self, c: &Cell) -> bool {
        (0..self.dim).all(|a| {
            let mut lo = *c;
            let mut hi = *c;
            lo[a] -= 1;
            hi[a] += 1;
            self.cells.contains(&lo) && self.cells.contains(&hi)
        })
    }

    /// All cells whose center is within `radius` of a center of `E`.
    pub fn dilate(&self, radius: f64) -> DiscreteSet {
        let offsets = self.disk_offsets(radius);
        let mut out = self.clone();
        for c in self.cells.iter().filter(|c| !self.is_interior(c)) {
            for o in &offsets {
                out.cells.insert([c[0] + o[0], c[1] + o[1], c[2] + o[2]]);
            }
        }
        out
    }

    /// Cells of `E` whose whole `radius`-neighbourhood of centers lies in `E`.
    pub fn erode(&self, radius: f64) -> DiscreteSet {
        let offsets = self.disk_offsets(radius);
        let cells = self
            .cells
            .iter()
            .filter(|c| {
                offsets
                    .iter()
                    .all(|o| self.cells.contains(&[c[0] + o[0], c[1] + o[1], c[2] + o[2]]))
            })
            .copied()
            .collect();
        DiscreteSet { dim: self.dim, spacing: self.spacing, cells }
    }

    /// Inclusive bounding box of the cell indices.
    pub fn bounds(&self) -> Option<(Cell, Cell)> {
        let first = self.cells.iter().next()?;
        let mut lo = *first;
        let mut hi = *first;
        for c in &self.cells {
            for a in 0..MAX_DIM {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
        Some((lo, hi))
    }

    /// Indicator of `E` on its bounding box padded by `pad` cells.
    pub fn indicator(&self, pad: usize) -> Result<GridFunction> {
        let (lo, hi) = self
            .bounds()
            .ok_or_else(|| Error::Parameter("indicator of the empty set".into()))?;
        let dim = self.dim;
        let p = pad as i64;
        let origin: Vec<f64> = (0..dim).map(|a| (lo[a] - p) as f64 * self.spacing).collect();
        let extents: Vec<usize> = (0..dim).map(|a| (hi[a] - lo[a] + 1 + 2 * p) as usize).collect();
        let zero = GridFunction::zeros(dim, &origin, self.spacing, &extents)?;
        let mut samples = vec![0.0; zero.len()];
        for c in &self.cells {
            let mut idx = [0usize; MAX_DIM];
            for a in 0..dim {
                idx[a] = (c[a] - lo[a] + p) as usize;
            }
            samples[zero.flatten(&idx)] = 1.0;
        }
        GridFunction::new(dim, &origin, self.spacing, &extents, samples)
    }

    /// Parses lines `box x0 x1 [y0 y1 [z0 z1]]` and `ball c.. r` into their
    /// union on the lattice of the given spacing. `#` starts a comment.
    pub fn parse(text: &str, spacing: f64) -> Result<DiscreteSet> {
        let mut acc: Option<DiscreteSet> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let kind = words.next().unwrap_or("");
            let nums: Vec<f64> = words
                .map(|w| {
                    w.parse::<f64>().map_err(|_| {
                        Error::Parse(format!("line {}: `{w}` is not a number", lineno + 1))
                    })
                })
                .collect::<Result<_>>()?;
            let piece = match kind {
                "box" => {
                    if nums.is_empty() || nums.len() % 2 != 0 || nums.len() > 2 * MAX_DIM {
                        return Err(Error::Parse(format!(
                            "line {}: box needs 2, 4 or 6 coordinates",
                            lineno + 1
                        )));
                    }
                    let lo: Vec<f64> = nums.iter().step_by(2).copied().collect();
                    let hi: Vec<f64> = nums.iter().skip(1).step_by(2).copied().collect();
                    DiscreteSet::box_set(&lo, &hi, spacing)
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?
                }
                "ball" => {
                    if nums.len() < 2 || nums.len() > MAX_DIM + 1 {
                        return Err(Error::Parse(format!(
                            "line {}: ball needs a center and a radius",
                            lineno + 1
                        )));
                    }
                    let (c, r) = nums.split_at(nums.len() - 1);
                    DiscreteSet::ball(c, r[0], spacing)
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?
                }
                other => {
                    return Err(Error::Parse(format!("line {}: unknown shape `{other}`", lineno + 1)))
                }
            };
            acc = Some(match acc {
                None => piece,
                Some(s) => s
                    .union(&piece)
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?,
            });
        }
        acc.ok_or_else(|| Error::Parse("set description is empty".into()))
    }
}

fn lattice_index(x: f64, spacing: f64) -> Result<i64> {
    let r = x / spacing;
    if (r - r.round()).abs() > 1e-9 * r.abs().max(1.0) {
        return Err(Error::Parameter(format!(
            "coordinate {x} is not on the lattice of spacing {spacing}"
        )));
    }
    Ok(r.round() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(h: f64) -> DiscreteSet {
        DiscreteSet::box_set(&[0.0, 0.0], &[1.0, 1.0], h).unwrap()
    }

    #[test]
    fn measures() {
        let s = square(0.1);
        assert_eq!(s.len(), 100);
        assert!((s.measure() - 1.0).abs() < 1e-12);
        assert_eq!(DiscreteSet::empty(2, 0.1).unwrap().measure(), 0.0);
        let other = DiscreteSet::box_set(&[2.0, 0.0], &[3.0, 1.0], 0.1).unwrap();
        assert!((s.union(&other).unwrap().measure() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn projections() {
        let s = square(0.1);
        assert!((s.projection_measure(1).unwrap() - 1.0).abs() < 1e-12);
        let slab = DiscreteSet::box_set(&[0.0, 0.0], &[1.0, 0.1], 0.1).unwrap();
        assert!((slab.projection_measure(2).unwrap() - 1.0).abs() < 1e-12);
        assert!((slab.projection_measure(1).unwrap() - 0.1).abs() < 1e-12);
        let stacked = s.union(&DiscreteSet::box_set(&[0.0, 1.0], &[1.0, 2.0], 0.1).unwrap()).unwrap();
        assert!((stacked.projection_measure(2).unwrap() - 1.0).abs() < 1e-12);
        let line = DiscreteSet::box_set(&[0.0], &[1.0], 0.1).unwrap();
        assert!(matches!(line.projection_measure(1), Err(Error::UnsupportedDimension(_))));
    }

    #[test]
    fn overlaps() {
        let s = square(0.1);
        assert!((s.overlap(1, 5).unwrap() - 0.5).abs() < 1e-12);
        assert!((s.overlap(1, 0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(s.overlap(1, 20).unwrap(), 0.0);
    }

    #[test]
    fn translation_search_on_square() {
        let s = square(0.01);
        let h = s.translation_search(1.0, 1.0, 0.1).unwrap();
        // 2(1 − h) < 0.1 first at h = 0.96
        assert!((h - 0.96).abs() < 1e-9);
        let h = s.translation_search(1.0, 1.0, 3.0).unwrap();
        assert!((h - 0.01).abs() < 1e-12);
        assert!(matches!(s.translation_search(0.5, 1.0, 0.1), Err(Error::Contract(_))));
    }

    #[test]
    fn thin_cross_defeats_the_shift_bound() {
        let h = 0.01;
        let arm = DiscreteSet::box_set(&[0.0, 0.0], &[1.0, h], h).unwrap();
        let leg = DiscreteSet::box_set(&[0.0, 0.0], &[h, 1.0], h).unwrap();
        let cross = arm.union(&leg).unwrap();
        let mu = cross.measure();
        let eta = mu / 4.0;
        let r = cross.translation_search(mu, 1.0, eta);
        assert!(matches!(r, Err(Error::InvariantViolation(_))));
    }

    #[test]
    fn dilation_and_erosion() {
        let s = square(0.1);
        let d = s.dilate(0.1);
        assert_eq!(d.len(), 100 + 40);
        assert!(s.is_subset(&d));
        let e = s.erode(0.1);
        assert_eq!(e.len(), 64);
        assert_eq!(d.erode(0.1), s);
    }

    #[test]
    fn ball_and_indicator() {
        let b = DiscreteSet::ball(&[0.0, 0.0], 1.0, 0.01).unwrap();
        assert!((b.measure() - std::f64::consts::PI).abs() < 0.01);
        let f = square(0.1).indicator(2).unwrap();
        assert_eq!(f.extents(), &[14, 14]);
        assert!((f.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parser() {
        let s = DiscreteSet::parse("# unit square\nbox 0 1 0 1\n", 0.1).unwrap();
        assert_eq!(s, square(0.1));
        let u = DiscreteSet::parse("box 0 1\nbox 2 3\n", 0.5).unwrap();
        assert_eq!(u.len(), 4);
        assert!(DiscreteSet::parse("box 0 1.05 0 1", 0.1).is_err());
        assert!(DiscreteSet::parse("box 0 1\nbox 0 1 0 1", 0.1).is_err());
        assert!(DiscreteSet::parse("cube 0 1", 0.1).is_err());
        assert!(DiscreteSet::parse("", 0.1).is_err());
        let b = DiscreteSet::parse("ball 0 0 0 1", 0.25).unwrap();
        assert_eq!(b.dim(), 3);
    }
}

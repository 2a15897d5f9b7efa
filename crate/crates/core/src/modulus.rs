//! Partial moduli of continuity `ω_j(f; δ)_p` and the averaged modulus.
//!
//! For a step function the difference integral `∫|f(x+s e_j) − f(x)|^p`
//! is linear in `s` between consecutive lattice shifts, so the modulus is
//! tabulated at shifts `m·h` and interpolated linearly in between. For
//! `p = 1` the interpolant is the exact modulus; for `p > 1` it is a lower
//! envelope of it.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::grid::{check_p, fmt_f64, GridFunction};

/// Number of smallest shifts used by [`derivative_norm_via_modulus`].
pub const DERIVATIVE_SHIFTS: usize = 5;

/// Sampled modulus of continuity: nondecreasing, zero at zero, constant
/// (`plateau`) beyond the last knot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusCurve {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub plateau: f64,
}

impl ModulusCurve {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, plateau: f64) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return param("curve needs equally many knots and values, at least one");
        }
        if knots[0] != 0.0 || values[0] != 0.0 {
            return param("curve must start at (0, 0)");
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return param("knots must be strictly increasing");
        }
        Ok(ModulusCurve { knots, values, plateau })
    }

    pub fn zero() -> Self {
        ModulusCurve { knots: vec![0.0], values: vec![0.0], plateau: 0.0 }
    }

    pub fn last_knot(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.plateau == 0.0 && self.values.iter().all(|&v| v == 0.0)
    }

    /// Linear interpolant; `plateau` beyond the last knot.
    pub fn value(&self, delta: f64) -> f64 {
        if delta <= 0.0 {
            return 0.0;
        }
        let last = self.last_knot();
        if delta >= last {
            return self.plateau;
        }
        let i = self.knots.partition_point(|&k| k <= delta);
        let (t0, t1) = (self.knots[i - 1], self.knots[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (delta - t0) / (t1 - t0)
    }

    /// `∫_0^t ω(u) du` of the interpolant.
    pub fn integral_to(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for w in 0..self.knots.len() - 1 {
            let (t0, t1) = (self.knots[w], self.knots[w + 1]);
            if t0 >= t {
                return acc;
            }
            let (v0, v1) = (self.values[w], self.values[w + 1]);
            let end = t.min(t1);
            let v_end = v0 + (v1 - v0) * (end - t0) / (t1 - t0);
            acc += 0.5 * (v0 + v_end) * (end - t0);
        }
        let last = self.last_knot();
        if t > last {
            acc += self.plateau * (t - last);
        }
        acc
    }

    /// Largest violation of monotonicity, of `value ≤ plateau`, and of
    /// subadditivity `ω(δ+η) ≤ ω(δ) + ω(η)` over knot pairs. Zero means the
    /// curve is a modulus of continuity on its knots.
    pub fn invariant_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for w in self.values.windows(2) {
            defect = defect.max(w[0] - w[1]);
        }
        for &v in &self.values {
            defect = defect.max(v - self.plateau);
        }
        let k = self.knots.len();
        // Full O(k²) scan for small curves, a strided sample of first
        // arguments otherwise.
        let step = if k <= 2048 { 1 } else { k / 1024 };
        for i in (1..k).step_by(step) {
            for j in i..k {
                let s = self.knots[i] + self.knots[j];
                defect = defect.max(self.value(s) - self.values[i] - self.values[j]);
            }
        }
        defect
    }

    /// CSV with columns `delta,value` and a final `plateau,<value>` row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,value\n");
        for (d, v) in self.knots.iter().zip(&self.values) {
            let _ = writeln!(s, "{},{}", fmt_f64(*d), fmt_f64(*v));
        }
        let _ = writeln!(s, "plateau,{}", fmt_f64(self.plateau));
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut knots = Vec::new();
        let mut values = Vec::new();
        let mut plateau = None;
        for line in text.lines().skip(1) {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad curve row `{line}`")))?;
            let v: f64 = b.trim().parse().map_err(|_| Error::Parse(format!("bad value `{b}`")))?;
            if a.trim() == "plateau" {
                plateau = Some(v);
            } else {
                knots.push(a.trim().parse().map_err(|_| Error::Parse(format!("bad delta `{a}`")))?);
                values.push(v);
            }
        }
        let plateau = plateau.ok_or_else(|| Error::Parse("missing plateau row".into()))?;
        ModulusCurve::new(knots, values, plateau)
    }
}

/// `ω_axis(f; δ)_p`: supremum of the difference norm over lattice shifts
/// `m·h ≤ δ`.
pub fn partial_modulus(f: &GridFunction, axis: usize, delta: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if !(delta >= 0.0) {
        return param(format!("delta = {delta} must be ≥ 0"));
    }
    let width = f.support_cells(axis)?;
    let m_max = ((delta / f.spacing()) * (1.0 + 1e-12)).floor().min(width as f64) as usize;
    let a = axis - 1;
    let best = (1..=m_max)
        .into_par_iter()
        .map(|m| f.difference_power_sum(a, m, p))
        .reduce(|| 0.0, f64::max);
    Ok(best.powf(1.0 / p))
}

/// Tabulates `ω_axis(f; ·)_p` at every lattice shift up to the support
/// width `W`, where the plateau is reached.
pub fn curve_of(f: &GridFunction, axis: usize, p: f64) -> Result<ModulusCurve> {
    check_p(p)?;
    let width = f.support_cells(axis)?;
    if width == 0 {
        return Ok(ModulusCurve::zero());
    }
    let a = axis - 1;
    let h = f.spacing();
    let diffs: Vec<f64> = (0..=width)
        .into_par_iter()
        .map(|m| if m == 0 { 0.0 } else { f.difference_power_sum(a, m, p).powf(1.0 / p) })
        .collect();
    let mut values = Vec::with_capacity(diffs.len());
    let mut running: f64 = 0.0;
    for d in diffs {
        running = running.max(d);
        values.push(running);
    }
    let knots = (0..=width).map(|m| m as f64 * h).collect();
    let plateau = running;
    Ok(ModulusCurve { knots, values, plateau })
}

/// All `n` partial curves of `f`.
pub fn curves_of(f: &GridFunction, p: f64) -> Result<Vec<ModulusCurve>> {
    (1..=f.dim()).map(|axis| curve_of(f, axis, p)).collect()
}

/// `ω̄(t) = (1/t) ∫_0^t ω(u) du`.
pub fn averaged_modulus(w: &ModulusCurve, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return param(format!("t = {t} must be positive"));
    }
    Ok(w.integral_to(t) / t)
}

/// `ω_axis(f; +∞)_p`.
pub fn modulus_at_infinity(f: &GridFunction, axis: usize, p: f64) -> Result<f64> {
    Ok(curve_of(f, axis, p)?.plateau)
}

/// `sup ω(δ)/δ` over the [`DERIVATIVE_SHIFTS`] smallest lattice shifts.
pub fn derivative_norm_via_modulus(f: &GridFunction, axis: usize, p: f64) -> Result<f64> {
    ratio_sup(f, axis, p, DERIVATIVE_SHIFTS)
}

/// `sup ω(δ)/δ` over every lattice shift up to the support width.
pub fn derivative_norm_via_modulus_full(f: &GridFunction, axis: usize, p: f64) -> Result<f64> {
    ratio_sup(f, axis, p, usize::MAX)
}

fn ratio_sup(f: &GridFunction, axis: usize, p: f64, max_shifts: usize) -> Result<f64> {
    let curve = curve_of(f, axis, p)?;
    let h = f.spacing();
    let upto = (curve.knots.len() - 1).min(max_shifts);
    Ok((1..=upto)
        .map(|m| curve.values[m] / (m as f64 * h))
        .fold(0.0, f64::max))
}

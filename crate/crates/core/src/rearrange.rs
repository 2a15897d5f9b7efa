//! Distribution function, nonincreasing rearrangement and the maximal
//! average `f**`.
//!
//! A grid function takes finitely many values on cells of equal volume,
//! so `f*` is a step function with finitely many steps and every quantity
//! here is computed in closed form.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::grid::{fmt_f64, GridFunction};
use crate::modulus;

/// The step function `f*` on `(0, ∞)`: value `levels[i]` on
/// `(breakpoints[i-1], breakpoints[i]]` (with `breakpoints[-1] = 0`), zero
/// after the last breakpoint. Left-continuous.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RearrangementProfile {
    pub breakpoints: Vec<f64>,
    pub levels: Vec<f64>,
}

/// `λ_f(y) = |{x : |f(x)| > y}|`.
pub fn distribution(f: &GridFunction, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return param(format!("y = {y} must be positive"));
    }
    let count = f.samples().iter().filter(|v| v.abs() > y).count();
    Ok(count as f64 * f.cell_volume())
}

/// `f*` by a stable descending sort of `|samples|`; ties keep lattice order
/// and equal values merge into one step.
pub fn rearrangement(f: &GridFunction) -> RearrangementProfile {
    let mut vals: Vec<(usize, f64)> = f
        .samples()
        .iter()
        .map(|v| v.abs())
        .enumerate()
        .filter(|(_, v)| *v > 0.0)
        .collect();
    vals.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let vol = f.cell_volume();
    let mut breakpoints: Vec<f64> = Vec::new();
    let mut levels: Vec<f64> = Vec::new();
    let mut count = 0usize;
    for (_, v) in vals {
        count += 1;
        match levels.last() {
            Some(&last) if last == v => *breakpoints.last_mut().unwrap() = count as f64 * vol,
            _ => {
                levels.push(v);
                breakpoints.push(count as f64 * vol);
            }
        }
    }
    RearrangementProfile { breakpoints, levels }
}

impl RearrangementProfile {
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != levels.len() {
            return param("breakpoints and levels differ in length");
        }
        let mut prev = 0.0;
        for &b in &breakpoints {
            if !(b > prev) {
                return param("breakpoints must be positive and increasing");
            }
            prev = b;
        }
        if levels.windows(2).any(|w| w[1] >= w[0]) || levels.iter().any(|&l| !(l > 0.0)) {
            return param("levels must be positive and strictly decreasing");
        }
        Ok(RearrangementProfile { breakpoints, levels })
    }

    /// Measure of the support of `f*`.
    pub fn support(&self) -> f64 {
        self.breakpoints.last().copied().unwrap_or(0.0)
    }

    /// `f*(t)`, left-continuous.
    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.levels.first().copied().unwrap_or(0.0);
        }
        let i = self.breakpoints.partition_point(|&b| b < t);
        self.levels.get(i).copied().unwrap_or(0.0)
    }

    /// `∫_0^t f*(u) du`.
    pub fn primitive(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut left = 0.0;
        for (&b, &l) in self.breakpoints.iter().zip(&self.levels) {
            if t <= left {
                break;
            }
            acc += l * (t.min(b) - left);
            left = b;
        }
        acc
    }

    /// `Σ width·level^p`, which equals `‖f‖_p^p`.
    pub fn power_sum(&self, p: f64) -> f64 {
        let mut left = 0.0;
        let mut acc = 0.0;
        for (&b, &l) in self.breakpoints.iter().zip(&self.levels) {
            acc += (b - left) * l.powf(p);
            left = b;
        }
        acc
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_break,level\n");
        for (b, l) in self.breakpoints.iter().zip(&self.levels) {
            let _ = writeln!(s, "{},{}", fmt_f64(*b), fmt_f64(*l));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut bs = Vec::new();
        let mut ls = Vec::new();
        for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad profile row `{line}`")))?;
            bs.push(a.trim().parse().map_err(|_| Error::Parse(format!("bad t `{a}`")))?);
            ls.push(b.trim().parse().map_err(|_| Error::Parse(format!("bad level `{b}`")))?);
        }
        RearrangementProfile::new(bs, ls)
    }
}

/// `f**(t) = (1/t) ∫_0^t f*(u) du`.
pub fn double_star(profile: &RearrangementProfile, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return param(format!("t = {t} must be positive"));
    }
    Ok(profile.primitive(t) / t)
}

/// `∫_t^∞ (f**(u) − f*(u)) / u du` in closed form.
///
/// On a step `(a, b]` where `f* = c`, the integrand is
/// `(F(a) − c·a)/u²` with `F` the primitive of `f*`; beyond the support it
/// is `F(T)/u²`.
pub fn deriv_tail_integral(profile: &RearrangementProfile, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return param(format!("t = {t} must be positive"));
    }
    let mut acc = 0.0;
    let mut left: f64 = 0.0;
    let mut prim_left = 0.0;
    for (&b, &c) in profile.breakpoints.iter().zip(&profile.levels) {
        if b > t {
            let a = left.max(t);
            let prim_a = prim_left + c * (a - left);
            acc += (prim_a - c * a) * (1.0 / a - 1.0 / b);
        }
        prim_left += c * (b - left);
        left = b;
    }
    let end = left.max(t);
    acc += profile.primitive(end) / end;
    Ok(acc)
}

/// `|f**(t) − ∫_t^∞ (f**(u) − f*(u))/u du|`.
pub fn deriv_identity_gap(profile: &RearrangementProfile, t: f64) -> Result<f64> {
    Ok((double_star(profile, t)? - deriv_tail_integral(profile, t)?).abs())
}

/// The two oscillation estimates for `f** − f*` at `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationBounds {
    /// `f**(t) − f*(t)`
    pub lhs: f64,
    /// `n t^{1/n} Σ_k (D_k f)**(t)`
    pub rhs_sobolev: f64,
    /// `2 t^{-1/p} Σ_k ω_k(f; t^{1/n})_p`
    pub rhs_modulus: f64,
}

pub fn oscillation_bounds(f: &GridFunction, t: f64, p: f64) -> Result<OscillationBounds> {
    if !(t > 0.0) {
        return param(format!("t = {t} must be positive"));
    }
    let prof = rearrangement(f);
    let lhs = double_star(&prof, t)? - prof.value(t);
    let n = f.dim() as f64;
    let mut sob = 0.0;
    let mut md = 0.0;
    for axis in 1..=f.dim() {
        let d = f.partial_derivative(axis)?;
        sob += double_star(&rearrangement(&d), t)?;
        md += modulus::curve_of(f, axis, p)?.value(t.powf(1.0 / n));
    }
    Ok(OscillationBounds {
        lhs,
        rhs_sobolev: n * t.powf(1.0 / n) * sob,
        rhs_modulus: 2.0 * t.powf(-1.0 / p) * md,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set_indicator(cells: usize, h: f64) -> GridFunction {
        GridFunction::new(1, &[0.0], h, &[cells + 2], {
            let mut v = vec![1.0; cells + 2];
            v[0] = 0.0;
            v[cells + 1] = 0.0;
            v
        })
        .unwrap()
    }

    #[test]
    fn distribution_examples() {
        let f = set_indicator(30, 0.1);
        assert!((distribution(&f, 0.5).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(distribution(&f, 1.0).unwrap(), 0.0);
        let two = GridFunction::new(1, &[0.0], 0.5, &[5], vec![2.0, 2.0, 0.0, 1.0, 1.0]).unwrap();
        assert!((distribution(&two, 1.5).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rearrangement_examples() {
        let f = set_indicator(30, 0.1);
        let r = rearrangement(&f);
        assert_eq!(r.levels, vec![1.0]);
        assert!((r.breakpoints[0] - 3.0).abs() < 1e-12);
        let two = GridFunction::new(1, &[0.0], 0.5, &[6], vec![1.0, 2.0, 0.0, -1.0, 2.0, 1.0])
            .unwrap();
        let r = rearrangement(&two);
        assert_eq!(r.levels, vec![2.0, 1.0]);
        assert_eq!(r.breakpoints, vec![1.0, 2.5]);
        // left continuity
        assert_eq!(r.value(1.0), 2.0);
        assert_eq!(r.value(1.0 + 1e-12), 1.0);
        assert_eq!(r.value(3.0), 0.0);
    }

    #[test]
    fn double_star_examples() {
        let r = RearrangementProfile::new(vec![2.0], vec![1.0]).unwrap();
        assert_eq!(double_star(&r, 1.0).unwrap(), 1.0);
        assert_eq!(double_star(&r, 4.0).unwrap(), 0.5);
        let two = RearrangementProfile::new(vec![1.0, 2.0], vec![2.0, 1.0]).unwrap();
        assert_eq!(double_star(&two, 2.0).unwrap(), 1.5);
        assert!(double_star(&two, 0.0).is_err());
    }

    #[test]
    fn deriv_identity_is_exact_on_steps() {
        let r = RearrangementProfile::new(vec![1.0], vec![1.0]).unwrap();
        assert!(deriv_identity_gap(&r, 0.5).unwrap() < 1e-10);
        assert!(deriv_identity_gap(&r, 10.0).unwrap() < 1e-10);
    }

    #[test]
    fn csv_round_trip() {
        let r = RearrangementProfile::new(vec![0.25, 1.5], vec![3.0, 0.5]).unwrap();
        assert_eq!(RearrangementProfile::from_csv(&r.to_csv()).unwrap(), r);
    }

    #[test]
    fn indicator_has_no_oscillation() {
        let f = set_indicator(30, 0.1);
        let b = oscillation_bounds(&f, 1.0, 1.0).unwrap();
        assert_eq!(b.lhs, 0.0);
        assert!(b.rhs_sobolev > 0.0 && b.rhs_modulus > 0.0);
    }
}

//! Besov seminorms `‖f‖_{b^α_{p,q;j}}` and the embedding / partition
//! inequalities between them.
//!
//! The singular integral `∫_0^∞ (t^{-α} ω(t))^q dt/t` is split in three:
//!
//! * head, `t < h`: the first-order model `ω(t) = ω(h)·t/h`, integrated in
//!   closed form (finite because `(1−α)q > 0`);
//! * body, `h ≤ t ≤ W`: the piecewise-linear curve on log-spaced nodes
//!   merged with the lattice knots, so `ω` is linear on every piece;
//! * tail, `t > W`: `ω = plateau`, giving `plateau^q W^{-αq}/(αq)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::grid::{Exponents, GridFunction};
use crate::modulus::{self, ModulusCurve};

/// Relative tolerance for the inequality checks of this module:
/// `rhs − lhs ≥ −INEQ_TOL · max(1, rhs)`.
pub const INEQ_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovQuadrature {
    pub nodes_per_decade: usize,
}

impl Default for BesovQuadrature {
    fn default() -> Self {
        BesovQuadrature { nodes_per_decade: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovEvaluation {
    pub axis: usize,
    pub exponents: Exponents,
    pub value: f64,
    pub head_part: f64,
    pub body_part: f64,
    pub tail_part: f64,
}

impl BesovEvaluation {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("evaluation serializes")
    }
}

/// Head, body and tail of `∫ t^{-αq} ω(t)^q dt/t` for a curve tabulated
/// from the lattice shift `h` up to its last knot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeminormParts {
    pub head: f64,
    pub body: f64,
    pub tail: f64,
}

impl SeminormParts {
    pub fn total(&self) -> f64 {
        self.head + self.body + self.tail
    }
}

// 6-point Gauss–Legendre on [-1, 1].
const GL_X: [f64; 6] = [
    -0.932_469_514_203_152_1,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152_1,
];
const GL_W: [f64; 6] = [
    0.171_324_492_379_170_35,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691_04,
    0.467_913_934_572_691_04,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_35,
];

/// Splits the singular integral of `curve` at exponent `(α, q)`.
pub fn seminorm_parts(
    curve: &ModulusCurve,
    alpha: f64,
    q: f64,
    quad: BesovQuadrature,
) -> Result<SeminormParts> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return param(format!("alpha = {alpha} outside (0, 1)"));
    }
    if !(q >= 1.0 && q.is_finite()) {
        return param(format!("q = {q} must be finite and ≥ 1; use the sup seminorm for q = ∞"));
    }
    if curve.is_zero() {
        return Ok(SeminormParts { head: 0.0, body: 0.0, tail: 0.0 });
    }
    if curve.knots.len() < 2 {
        return param("curve needs at least one positive knot");
    }
    let h = curve.knots[1];
    let w = curve.last_knot();
    let s = alpha * q;
    let head = curve.values[1].powf(q) * h.powf(-s) / ((1.0 - alpha) * q);
    let tail = curve.plateau.powf(q) * w.powf(-s) / s;
    let body = if w > h { body_integral(curve, h, w, alpha, q, quad) } else { 0.0 };
    Ok(SeminormParts { head, body, tail })
}

fn body_nodes(curve: &ModulusCurve, h: f64, w: f64, per_decade: usize) -> Vec<f64> {
    let decades = (w / h).log10();
    let count = ((decades * per_decade as f64).ceil() as usize).max(1);
    let mut nodes: Vec<f64> = (0..=count)
        .map(|i| h * (w / h).powf(i as f64 / count as f64))
        .collect();
    nodes[0] = h;
    nodes[count] = w;
    nodes.extend(curve.knots.iter().copied().filter(|&k| k > h && k < w));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
    nodes
}

fn body_integral(curve: &ModulusCurve, h: f64, w: f64, alpha: f64, q: f64, quad: BesovQuadrature) -> f64 {
    let nodes = body_nodes(curve, h, w, quad.nodes_per_decade);
    let s = alpha * q;
    nodes
        .par_windows(2)
        .map(|seg| {
            let (t0, t1) = (seg[0], seg[1]);
            let (v0, v1) = (curve.value(t0), curve.value(t1));
            let b = (v1 - v0) / (t1 - t0);
            let a = v0 - b * t0;
            if q == 1.0 {
                // ∫ (a + b t) t^{-α-1} dt, written with expm1 so that tiny α
                // and short pieces keep their digits.
                let l = (t1 / t0).ln();
                let dec = -t0.powf(-alpha) * (-alpha * l).exp_m1() / alpha;
                let inc = t0.powf(1.0 - alpha) * ((1.0 - alpha) * l).exp_m1() / (1.0 - alpha);
                a * dec + b * inc
            } else {
                let mid = 0.5 * (t0 + t1);
                let half = 0.5 * (t1 - t0);
                GL_X.iter()
                    .zip(GL_W.iter())
                    .map(|(&x, &wt)| {
                        let t = mid + half * x;
                        wt * (a + b * t).max(0.0).powf(q) * t.powf(-s - 1.0)
                    })
                    .sum::<f64>()
                    * half
            }
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// `‖·‖_{b^α_{p,q;j}}` of the function whose partial modulus is `curve`.
pub fn seminorm_from_curve(curve: &ModulusCurve, alpha: f64, q: f64, quad: BesovQuadrature) -> Result<f64> {
    Ok(seminorm_parts(curve, alpha, q, quad)?.total().powf(1.0 / q))
}

/// `sup_t t^{-α} ω(t)`. On each linear piece `(a + bt)t^{-α}` has no
/// interior maximum, the head model increases up to `h` and the tail
/// decreases, so the knots carry the supremum.
pub fn sup_from_curve(curve: &ModulusCurve, alpha: f64) -> f64 {
    curve
        .knots
        .iter()
        .zip(&curve.values)
        .skip(1)
        .map(|(&t, &v)| v * t.powf(-alpha))
        .fold(0.0, f64::max)
}

pub fn besov_seminorm_axis(f: &GridFunction, axis: usize, e: Exponents) -> Result<BesovEvaluation> {
    besov_seminorm_axis_with(f, axis, e, BesovQuadrature::default())
}

pub fn besov_seminorm_axis_with(
    f: &GridFunction,
    axis: usize,
    e: Exponents,
    quad: BesovQuadrature,
) -> Result<BesovEvaluation> {
    if e.q.is_infinite() {
        return param("q = ∞: use besov_sup_seminorm");
    }
    let curve = modulus::curve_of(f, axis, e.p)?;
    evaluation_from_curve(&curve, axis, e, quad)
}

pub fn evaluation_from_curve(
    curve: &ModulusCurve,
    axis: usize,
    e: Exponents,
    quad: BesovQuadrature,
) -> Result<BesovEvaluation> {
    let parts = seminorm_parts(curve, e.alpha, e.q, quad)?;
    Ok(BesovEvaluation {
        axis,
        exponents: e,
        value: parts.total().powf(1.0 / e.q),
        head_part: parts.head,
        body_part: parts.body,
        tail_part: parts.tail,
    })
}

/// `‖f‖_{b^α_{p,q}} = Σ_k ‖f‖_{b^α_{p,q;k}}` with the per-axis evaluations.
pub fn besov_seminorm(f: &GridFunction, e: Exponents) -> Result<(f64, Vec<BesovEvaluation>)> {
    let evals: Vec<BesovEvaluation> = (1..=f.dim())
        .map(|axis| besov_seminorm_axis(f, axis, e))
        .collect::<Result<_>>()?;
    Ok((evals.iter().map(|ev| ev.value).sum(), evals))
}

/// `sup_{t>0} t^{-α} ω_axis(f; t)_p`.
pub fn besov_sup_seminorm(f: &GridFunction, axis: usize, alpha: f64, p: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return param(format!("alpha = {alpha} outside (0, 1)"));
    }
    Ok(sup_from_curve(&modulus::curve_of(f, axis, p)?, alpha))
}

/// Both sides of the partition bound
/// `‖f‖_{b;j} ≤ q^{-1/q}[(1−α)^{-1/q} T^{1−α} ‖D_j f‖_p + 2 α^{-1/q} T^{-α} ‖f‖_p]`.
pub fn partition_bound_sides(f: &GridFunction, axis: usize, e: Exponents, t_split: f64) -> Result<(f64, f64)> {
    if !(t_split > 0.0) {
        return param(format!("T = {t_split} must be positive"));
    }
    let lhs = besov_seminorm_axis(f, axis, e)?.value;
    let d = f.partial_derivative(axis)?.lp_norm(e.p)?;
    let norm = f.lp_norm(e.p)?;
    let (a, q) = (e.alpha, e.q);
    let rhs = q.powf(-1.0 / q)
        * ((1.0 - a).powf(-1.0 / q) * t_split.powf(1.0 - a) * d
            + 2.0 * a.powf(-1.0 / q) * t_split.powf(-a) * norm);
    Ok((lhs, rhs))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// constant `(αq)^{1/q−1/θ}`
    SmallAlpha,
    /// constant `[(1−α)q]^{1/q−1/θ} (2/(1+α))^{1−q/θ}`
    LargeAlpha,
}

/// The embedding constant `C(α, q, θ)` of the given regime.
pub fn embedding_constant(alpha: f64, q: f64, theta: f64, regime: Regime) -> f64 {
    let expo = 1.0 / q - if theta.is_infinite() { 0.0 } else { 1.0 / theta };
    let ratio = if theta.is_infinite() { 0.0 } else { q / theta };
    match regime {
        Regime::SmallAlpha => (alpha * q).powf(expo),
        Regime::LargeAlpha => {
            ((1.0 - alpha) * q).powf(expo) * (2.0 / (1.0 + alpha)).powf(1.0 - ratio)
        }
    }
}

/// `(‖f‖_{b^α_{p,θ;j}}, C·‖f‖_{b^α_{p,q;j}})`; `θ = ∞` selects the sup
/// seminorm on the left.
pub fn embedding_sides(
    f: &GridFunction,
    axis: usize,
    e: Exponents,
    theta: f64,
    regime: Regime,
) -> Result<(f64, f64)> {
    let curve = modulus::curve_of(f, axis, e.p)?;
    embedding_sides_from_curve(&curve, e, theta, regime)
}

pub fn embedding_sides_from_curve(
    curve: &ModulusCurve,
    e: Exponents,
    theta: f64,
    regime: Regime,
) -> Result<(f64, f64)> {
    if !(theta > e.q) {
        return param(format!("theta = {theta} must exceed q = {}", e.q));
    }
    let quad = BesovQuadrature::default();
    let lhs = if theta.is_infinite() {
        sup_from_curve(curve, e.alpha)
    } else {
        seminorm_from_curve(curve, e.alpha, theta, quad)?
    };
    let base = seminorm_from_curve(curve, e.alpha, e.q, quad)?;
    Ok((lhs, embedding_constant(e.alpha, e.q, theta, regime) * base))
}

/// `x ↦ f(λx)` as a cell function: the samples of `f` on a lattice with
/// spacing `h/λ`. Only `λ = k` and `λ = 1/k` are accepted.
pub fn dilate(f: &GridFunction, lam: f64) -> Result<GridFunction> {
    if !(lam > 0.0 && lam.is_finite()) {
        return param(format!("dilation factor {lam} must be positive"));
    }
    let near_int = |x: f64| (x - x.round()).abs() < 1e-9 && x.round() >= 1.0;
    if near_int(lam) {
        f.rescaled(lam.round())
    } else if near_int(1.0 / lam) {
        f.rescaled(1.0 / (1.0 / lam).round())
    } else {
        Err(Error::Parameter(format!(
            "dilation factor {lam} is neither an integer nor the reciprocal of one"
        )))
    }
}

/// `|‖δ_λ f‖^p − λ^{αp−n} ‖f‖^p| / ‖f‖^p` for the full seminorm.
pub fn scaling_gap(f: &GridFunction, lam: f64, e: Exponents) -> Result<f64> {
    let g = dilate(f, lam)?;
    let (nf, _) = besov_seminorm(f, e)?;
    let (ng, _) = besov_seminorm(&g, e)?;
    if nf == 0.0 {
        return Ok(if ng == 0.0 { 0.0 } else { f64::INFINITY });
    }
    let lhs = ng.powf(e.p);
    let rhs = lam.powf(e.alpha * e.p - f.dim() as f64) * nf.powf(e.p);
    Ok((lhs - rhs).abs() / nf.powf(e.p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn indicator(h: f64) -> GridFunction {
        let n = (1.0 / h).round() as usize;
        GridFunction::new(1, &[0.0], h, &[n], vec![1.0; n]).unwrap()
    }

    fn ex(p: f64, q: f64, a: f64) -> Exponents {
        Exponents::new(1, p, q, a).unwrap()
    }

    #[test]
    fn indicator_seminorm_closed_form() {
        // ω(t) = 2 min(t, 1): ∫_0^1 2 t^{-α} dt + ∫_1^∞ 2 t^{-α-1} dt
        let ev = besov_seminorm_axis(&indicator(0.001), 1, ex(1.0, 1.0, 0.5)).unwrap();
        assert!((ev.value - 8.0).abs() < 0.01 * 8.0);
        assert!((ev.tail_part - 4.0).abs() < 1e-12);
        assert!(ev.head_part >= 0.0 && ev.body_part >= 0.0);
        assert!((ev.value - (ev.head_part + ev.body_part + ev.tail_part)).abs() < 1e-12);
    }

    #[test]
    fn zero_function_has_zero_seminorm() {
        let z = GridFunction::zeros(2, &[0.0, 0.0], 0.1, &[4, 4]).unwrap();
        let (v, _) = besov_seminorm(&z, Exponents::new(2, 2.0, 1.0, 0.3).unwrap()).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(besov_sup_seminorm(&z, 1, 0.3, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn sup_seminorm_of_indicator() {
        let v = besov_sup_seminorm(&indicator(0.01), 1, 0.5, 1.0).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn embedding_examples() {
        let f = indicator(0.001);
        let e = ex(1.0, 1.0, 0.5);
        let (l, r) = embedding_sides(&f, 1, e, f64::INFINITY, Regime::SmallAlpha).unwrap();
        assert!((l - 2.0).abs() < 1e-12);
        assert!((r - 4.0).abs() < 0.04);
        let (l, r) = embedding_sides(&f, 1, e, f64::INFINITY, Regime::LargeAlpha).unwrap();
        assert!(l <= r);
        assert!((r - 0.5 * (2.0 / 1.5) * 8.0).abs() < 0.06);
        assert!(embedding_sides(&f, 1, e, 1.0, Regime::SmallAlpha).is_err());
    }

    #[test]
    fn partition_bound_degenerate_for_zero() {
        let z = GridFunction::zeros(1, &[0.0], 0.1, &[5]).unwrap();
        let (l, r) = partition_bound_sides(&z, 1, ex(1.0, 1.0, 0.5), 1.0).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
    }

    #[test]
    fn dilation_identity_for_unit_interval() {
        let f = indicator(0.001);
        let e = ex(1.0, 1.0, 0.5);
        assert_eq!(scaling_gap(&f, 1.0, e).unwrap(), 0.0);
        assert!(scaling_gap(&f, 2.0, e).unwrap() <= 0.02);
        assert!(scaling_gap(&f, 0.5, e).unwrap() <= 0.02);
        assert!(matches!(dilate(&f, 1.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn dilation_moves_the_lattice() {
        let f = GridFunction::new(1, &[0.0], 0.5, &[3], vec![1.0, 2.0, 3.0]).unwrap();
        let g = dilate(&f, 0.5).unwrap();
        assert_eq!(g.samples(), f.samples());
        assert_eq!(g.spacing(), 1.0);
        for x in [0.1, 0.6, 1.2, 2.9] {
            assert_eq!(g.value_at(&[x]), f.value_at(&[0.5 * x]));
        }
        let back = dilate(&g, 2.0).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn json_carries_all_parts() {
        let ev = besov_seminorm_axis(&indicator(0.01), 1, ex(1.0, 2.0, 0.4)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&ev.to_json()).unwrap();
        for k in ["value", "head_part", "body_part", "tail_part", "exponents", "axis"] {
            assert!(v.get(k).is_some(), "missing {k}");
        }
        assert_eq!(v["exponents"]["q"], 2.0);
    }
}

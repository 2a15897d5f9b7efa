//! α-sweeps of normalized capacities and seminorms, with a least-squares
//! linear extrapolation to the endpoint.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::capacity::{self, AdmissibleFamily};
use crate::error::{param, Result};
use crate::grid::{fmt_f64, GridFunction};
use crate::modulus;
use crate::mollify;
use crate::sets::DiscreteSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ToOne,
    ToZero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub direction: Direction,
    pub p: f64,
    pub q: f64,
    pub n: usize,
    pub alphas: Vec<f64>,
    pub j_values: Vec<f64>,
    pub target: f64,
    pub extrapolated: f64,
    pub relative_error: f64,
    /// Root-mean-square residual of the linear fit.
    pub model_residual: f64,
    pub model: String,
}

/// Points used by the linear extrapolation.
pub const FIT_POINTS: usize = 4;

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,J\n");
        for (a, j) in self.alphas.iter().zip(&self.j_values) {
            let _ = writeln!(s, "{},{}", fmt_f64(*a), fmt_f64(*j));
        }
        s
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "direction": self.direction,
            "p": self.p,
            "q": self.q,
            "n": self.n,
            "target": self.target,
            "extrapolated": self.extrapolated,
            "relative_error": self.relative_error,
            "model_residual": self.model_residual,
            "model": self.model,
        })
    }
}

/// Least-squares line through `(x_i, y_i)`; returns the intercept and the
/// RMS residual.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (intercept, (rss / m).sqrt())
}

fn check_alphas(alphas: &[f64], direction: Direction, min_len: usize) -> Result<()> {
    if alphas.len() < min_len {
        return param(format!("need at least {min_len} alphas, got {}", alphas.len()));
    }
    if alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return param("every alpha must lie in (0, 1)");
    }
    let ok = alphas.windows(2).all(|w| match direction {
        Direction::ToOne => w[1] > w[0],
        Direction::ToZero => w[1] < w[0],
    });
    if !ok {
        return param("alphas must move strictly toward the limit point");
    }
    Ok(())
}

fn finish(
    direction: Direction,
    (p, q, n): (f64, f64, usize),
    alphas: &[f64],
    j_values: Vec<f64>,
    target: f64,
    model: &str,
) -> SweepResult {
    let start = alphas.len().saturating_sub(FIT_POINTS);
    let xs: Vec<f64> = alphas[start..]
        .iter()
        .map(|&a| match direction {
            Direction::ToOne => 1.0 - a,
            Direction::ToZero => a,
        })
        .collect();
    let (extrapolated, model_residual) = linear_fit(&xs, &j_values[start..]);
    SweepResult {
        direction,
        p,
        q,
        n,
        alphas: alphas.to_vec(),
        j_values,
        target,
        extrapolated,
        relative_error: (extrapolated - target).abs() / target.abs().max(1e-30),
        model_residual,
        model: model.into(),
    }
}

/// `J(α) = (1 − α)^{p/q} cap(G; B^α_{p,q})` against
/// `q^{−p/q} cap(G; W¹_p)`, both capacities of the open set `G` taken as
/// suprema over its inner erosions.
pub fn sweep_alpha_to_one(
    g: &DiscreteSet,
    p: f64,
    q: f64,
    alphas: &[f64],
    fam: &AdmissibleFamily,
) -> Result<SweepResult> {
    check_alphas(alphas, Direction::ToOne, FIT_POINTS)?;
    if alphas[0] < 0.8 {
        return param("alphas must lie in [0.8, 1)");
    }
    let ex = capacity::exhaust(g, &|k| {
        let mut vals: Vec<f64> = capacity::besov_capacity_upper_multi(k, p, q, alphas, fam)?
            .into_iter()
            .map(|e| e.value)
            .collect();
        vals.push(capacity::sobolev_capacity_upper(k, p, fam)?.value);
        Ok(vals)
    })?;
    let m = alphas.len();
    let j: Vec<f64> = alphas
        .iter()
        .zip(&ex.supremum[..m])
        .map(|(a, c)| (1.0 - a).powf(p / q) * c)
        .collect();
    let target = q.powf(-p / q) * ex.supremum[m];
    Ok(finish(
        Direction::ToOne,
        (p, q, g.dim()),
        alphas,
        j,
        target,
        "least-squares line in 1 − α over the last 4 points",
    ))
}

/// `J(α) = α^{p/q} cap(K; B^α_{p,q})` against `2n^p q^{−p/q} |K|`.
pub fn sweep_alpha_to_zero(
    k: &DiscreteSet,
    p: f64,
    q: f64,
    alphas: &[f64],
    fam: &AdmissibleFamily,
) -> Result<SweepResult> {
    check_alphas(alphas, Direction::ToZero, FIT_POINTS)?;
    if alphas[0] > 0.2 {
        return param("alphas must lie in (0, 0.2]");
    }
    let n = k.dim();
    let caps = capacity::besov_capacity_upper_multi(k, p, q, alphas, fam)?;
    let j = alphas
        .iter()
        .zip(&caps)
        .map(|(a, c)| a.powf(p / q) * c.value)
        .collect();
    let target = 2.0 * (n as f64).powf(p) * q.powf(-p / q) * k.measure();
    Ok(finish(
        Direction::ToZero,
        (p, q, n),
        alphas,
        j,
        target,
        "least-squares line in α over the last 4 points",
    ))
}

/// `α^{1/q} ‖f‖_{b^α_{p,q}}` against `q^{−1/q} Σ_j ω_j(f; ∞)_p`.
pub fn seminorm_zero_limit(f: &GridFunction, p: f64, q: f64, alphas: &[f64]) -> Result<SweepResult> {
    check_alphas(alphas, Direction::ToZero, FIT_POINTS)?;
    let curves = modulus::curves_of(f, p)?;
    let j = alphas
        .iter()
        .map(|&a| Ok(a.powf(1.0 / q) * capacity::besov_functional(&curves, a, q)?))
        .collect::<Result<Vec<f64>>>()?;
    let target = q.powf(-1.0 / q) * curves.iter().map(|c| c.plateau).sum::<f64>();
    Ok(finish(
        Direction::ToZero,
        (p, q, f.dim()),
        alphas,
        j,
        target,
        "least-squares line in α over the last 4 points",
    ))
}

/// Grid spacing for the norms of the logarithmic example.
pub const LOG_SPACING: f64 = 0.005;

/// Truncation levels of the logarithmic construction.
pub const LOG_EPS_GRID: [f64; 4] = [1.0, 0.5, 0.25, 0.1];

/// `Σ_k ‖D_k f₀‖_n` and `‖f₀‖_n` of the logarithmic example.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogNorms {
    pub n: usize,
    pub deriv_sum: f64,
    pub norm: f64,
}

pub fn log_example_norms(n: usize, spacing: f64) -> Result<LogNorms> {
    let f0 = mollify::example_log(n, spacing)?;
    let p = n as f64;
    Ok(LogNorms {
        n,
        deriv_sum: capacity::sobolev_functional(&f0, p)?,
        norm: f0.lp_norm(p)?,
    })
}

/// `ln(1/γ_ε)` for the dilation that makes `min(εf₀, 1)(γ·)` equal to 1 on
/// the ball of radius `r + 1`: `γ_ε = exp(−ε^{−1/σ})/(r + 1)`.
pub fn log_inverse_gamma(n: usize, r: f64, eps: f64) -> f64 {
    eps.powf(-1.0 / mollify::log_sigma(n)) + (r + 1.0).ln()
}

/// Upper bound for `(1 − α)^{n/q} cap(B_r; B^α_{n,q})` from one member of
/// the logarithmic family:
/// `[ε q^{−1/q}(Σ_k ‖D_k f₀‖_n + n (2/γ_ε)((1 − α)/α)^{1/q} ‖f₀‖_n)]^n`,
/// evaluated in log space since `1/γ_ε` overflows for small `ε`.
pub fn p_equals_n_bound(r: f64, q: f64, alpha: f64, eps: f64, norms: &LogNorms) -> f64 {
    let nf = norms.n as f64;
    let a = norms.deriv_sum.ln();
    let b = (2.0 * nf * norms.norm).ln()
        + log_inverse_gamma(norms.n, r, eps)
        + ((1.0 - alpha) / alpha).ln() / q;
    let hi = a.max(b);
    let lse = hi + ((a - hi).exp() + (b - hi).exp()).ln();
    (nf * (eps.ln() - q.ln() / q + lse)).exp()
}

/// The `p = n = 2` sweep: `J(α)` is the smallest logarithmic-family bound
/// over [`LOG_EPS_GRID`]; `α` increases toward 1.
pub fn sweep_p_equals_n(r: f64, q: f64, alphas: &[f64]) -> Result<SweepResult> {
    check_alphas(alphas, Direction::ToOne, 2)?;
    if !(r > 0.0) {
        return param(format!("radius {r} must be positive"));
    }
    if !(q >= 1.0 && q.is_finite()) {
        return param(format!("q = {q} must be finite and ≥ 1"));
    }
    let norms = log_example_norms(2, LOG_SPACING)?;
    let j = alphas
        .iter()
        .map(|&a| {
            LOG_EPS_GRID
                .iter()
                .map(|&e| p_equals_n_bound(r, q, a, e, &norms))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(finish(
        Direction::ToOne,
        (2.0, q, 2),
        alphas,
        j,
        0.0,
        "partition bound on the logarithmic family; line in 1 − α over the last 4 points",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_a_line() {
        let (c, r) = linear_fit(&[0.1, 0.2, 0.3], &[3.0, 5.0, 7.0]);
        assert!((c - 1.0).abs() < 1e-12 && r < 1e-12);
    }

    #[test]
    fn indicator_seminorm_limit() {
        let f = GridFunction::new(1, &[0.0], 0.001, &[1000], vec![1.0; 1000]).unwrap();
        let s = seminorm_zero_limit(&f, 1.0, 1.0, &[0.1, 0.05, 0.025, 0.0125]).unwrap();
        assert!((s.target - 2.0).abs() < 1e-12);
        assert!(s.relative_error < 0.05, "{s:?}");
        assert_eq!(s.to_csv().lines().count(), 5);
    }

    #[test]
    fn alpha_lists_are_validated() {
        let k = DiscreteSet::box_set(&[0.0], &[1.0], 0.1).unwrap();
        let fam = AdmissibleFamily::for_spacing(0.1);
        assert!(sweep_alpha_to_zero(&k, 1.0, 1.0, &[0.1, 0.05], &fam).is_err());
        assert!(sweep_alpha_to_zero(&k, 1.0, 1.0, &[0.05, 0.1, 0.01, 0.005], &fam).is_err());
        assert!(sweep_p_equals_n(1.0, 1.0, &[0.9]).is_err());
    }

    #[test]
    fn empty_set_sweeps_to_zero() {
        let k = DiscreteSet::empty(2, 0.1).unwrap();
        let fam = AdmissibleFamily::for_spacing(0.1);
        let s = sweep_alpha_to_zero(&k, 1.0, 1.0, &[0.1, 0.05, 0.025, 0.0125], &fam).unwrap();
        assert!(s.j_values.iter().all(|&j| j == 0.0));
        assert_eq!(s.target, 0.0);
        assert_eq!(s.relative_error, 0.0);
    }

    #[test]
    fn log_family_bound_grows_with_eps() {
        let norms = LogNorms { n: 2, deriv_sum: 3.0, norm: 1.0 };
        let a = 1.0 - 1e-12;
        let small = p_equals_n_bound(1.0, 1.0, a, 0.5, &norms);
        let big = p_equals_n_bound(1.0, 1.0, a, 1.0, &norms);
        assert!(small < big);
        assert!(p_equals_n_bound(1.0, 1.0, 0.5, 0.1, &norms).is_infinite());
    }
}

//! Upper bounds for Sobolev and Besov capacities by minimizing over
//! families of admissible functions, weak-type lower bounds, and the exact
//! one-dimensional value.

use serde::{Deserialize, Serialize};

use crate::besov::{seminorm_from_curve, BesovQuadrature};
use crate::error::{param, Error, Result};
use crate::grid::{check_p, Exponents, GridFunction};
use crate::modulus::{self, ModulusCurve};
use crate::mollify::{self, ONE_SNAP};
use crate::sets::DiscreteSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateKind {
    Upper,
    Lower,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "name")]
pub enum Space {
    Sobolev { p: f64 },
    Besov { alpha: f64, p: f64, q: f64 },
}

/// Parameters of the admissible function that realized an upper bound.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub family: String,
    pub tau: Option<f64>,
    pub eps: Option<f64>,
    pub gamma: Option<f64>,
    pub index: Option<usize>,
    /// Admissible functions evaluated during the search.
    pub evaluations: usize,
    pub golden_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub value: f64,
    pub kind: EstimateKind,
    pub space: Space,
    pub witness: Option<Witness>,
    pub derivation: String,
}

impl CapacityEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }
}

/// Admissible functions tried by the upper-bound search:
///
/// * `χ_{K_τ} ∗ φ_τ` for `τ` in `tau_grid`, refined by golden-section
///   search between the neighbours of the best grid point;
/// * the same truncated at `ε` and mollified again at `τ/2`;
/// * cutoff dilations `η(γ(x − c))`, `c` the center of the bounding box of
///   `K`, sampled at spacing `cutoff_spacing/γ`;
/// * explicit candidates, used when admissible.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibleFamily {
    pub tau_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub cutoff_spacing: f64,
    pub explicit: Vec<GridFunction>,
    pub golden_steps: usize,
}

impl AdmissibleFamily {
    /// Smoothed indicators with `τ ∈ {3, 4, 6, 9}·h`.
    pub fn for_spacing(h: f64) -> Self {
        AdmissibleFamily {
            tau_grid: [3.0, 4.0, 6.0, 9.0].iter().map(|m| m * h).collect(),
            eps_grid: Vec::new(),
            gamma_grid: Vec::new(),
            cutoff_spacing: 0.1,
            explicit: Vec::new(),
            golden_steps: 6,
        }
    }

    pub fn empty() -> Self {
        AdmissibleFamily {
            tau_grid: Vec::new(),
            eps_grid: Vec::new(),
            gamma_grid: Vec::new(),
            cutoff_spacing: 0.1,
            explicit: Vec::new(),
            golden_steps: 0,
        }
    }

    fn is_empty(&self) -> bool {
        self.tau_grid.is_empty() && self.gamma_grid.is_empty() && self.explicit.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Member {
    Smoothed { tau: f64 },
    Truncated { tau: f64, eps: f64 },
    Cutoff { gamma: f64 },
    Explicit { index: usize },
}

impl Member {
    fn key(&self) -> (f64, f64, f64, usize) {
        let inf = f64::INFINITY;
        match *self {
            Member::Smoothed { tau } => (tau, inf, inf, 0),
            Member::Truncated { tau, eps } => (tau, eps, inf, 0),
            Member::Cutoff { gamma } => (inf, inf, gamma, 0),
            Member::Explicit { index } => (inf, inf, inf, index + 1),
        }
    }

    fn witness(&self) -> Witness {
        let mut w = Witness::default();
        match *self {
            Member::Smoothed { tau } => {
                w.family = "smoothed-set".into();
                w.tau = Some(tau);
            }
            Member::Truncated { tau, eps } => {
                w.family = "truncated".into();
                w.tau = Some(tau);
                w.eps = Some(eps);
            }
            Member::Cutoff { gamma } => {
                w.family = "cutoff".into();
                w.gamma = Some(gamma);
            }
            Member::Explicit { index } => {
                w.family = "explicit".into();
                w.index = Some(index);
            }
        }
        w
    }
}

/// `0 ≤ f ≤ 1` everywhere and `f = 1` on `K` grown by one cell.
pub fn is_admissible(f: &GridFunction, k: &DiscreteSet) -> bool {
    if f.dim() != k.dim() || f.min_value() < 0.0 || f.max_value() > 1.0 {
        return false;
    }
    let grown = k.dilate(k.spacing());
    grown.cells().iter().all(|c| {
        let x = grown.cell_center(c);
        f.value_at(&x[..k.dim()]) >= 1.0 - ONE_SNAP
    })
}

fn box_center(k: &DiscreteSet) -> Vec<f64> {
    let (lo, hi) = k.bounds().expect("nonempty set");
    (0..k.dim())
        .map(|a| 0.5 * (lo[a] + hi[a] + 1) as f64 * k.spacing())
        .collect()
}

fn build(member: &Member, k: &DiscreteSet, fam: &AdmissibleFamily) -> Result<Option<GridFunction>> {
    let made = match *member {
        Member::Smoothed { tau } => mollify::admissible_from_set(k, tau),
        Member::Truncated { tau, eps } => mollify::admissible_from_set(k, tau)
            .and_then(|f| mollify::truncate(&f, eps))
            .and_then(|f| mollify::mollify(&f, 0.5 * tau))
            .map(|f| f.map(|v| if (v - 1.0).abs() <= ONE_SNAP { 1.0 } else { v.clamp(0.0, 1.0) })),
        Member::Cutoff { gamma } => {
            mollify::dilated_cutoff(k.dim(), gamma, &box_center(k), fam.cutoff_spacing / gamma)
        }
        Member::Explicit { index } => Ok(fam.explicit[index].clone()),
    };
    match made {
        Ok(f) => Ok(is_admissible(&f, k).then_some(f)),
        Err(Error::Resolution(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

struct Evaluated {
    member: Member,
    values: Vec<f64>,
}

/// Minimizes every component of `objective` over the family; `key` picks
/// the component that drives the golden-section refinement.
fn minimize(
    k: &DiscreteSet,
    fam: &AdmissibleFamily,
    key: usize,
    objective: &dyn Fn(&GridFunction) -> Result<Vec<f64>>,
) -> Result<Vec<(f64, Witness)>> {
    if fam.is_empty() {
        return param("admissible family is empty");
    }
    let mut done: Vec<Evaluated> = Vec::new();
    let eval = |m: Member, done: &mut Vec<Evaluated>| -> Result<Option<f64>> {
        if let Some(e) = done.iter().find(|e| e.member == m) {
            return Ok(Some(e.values[key]));
        }
        match build(&m, k, fam)? {
            Some(f) => {
                let values = objective(&f)?;
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvariantViolation(format!(
                        "non-finite capacity functional for {m:?}"
                    )));
                }
                let v = values[key];
                done.push(Evaluated { member: m, values });
                Ok(Some(v))
            }
            None => Ok(None),
        }
    };

    let mut taus = fam.tau_grid.clone();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    let mut coarse: Vec<(f64, f64)> = Vec::new();
    for &tau in &taus {
        if let Some(v) = eval(Member::Smoothed { tau }, &mut done)? {
            coarse.push((tau, v));
        }
        for &eps in &fam.eps_grid {
            eval(Member::Truncated { tau, eps }, &mut done)?;
        }
    }
    for &gamma in &fam.gamma_grid {
        eval(Member::Cutoff { gamma }, &mut done)?;
    }
    for index in 0..fam.explicit.len() {
        eval(Member::Explicit { index }, &mut done)?;
    }

    let mut steps = 0;
    if coarse.len() >= 2 && fam.golden_steps > 0 {
        let best = (0..coarse.len())
            .min_by(|&i, &j| coarse[i].1.total_cmp(&coarse[j].1))
            .expect("nonempty");
        let mut a = coarse[best.saturating_sub(1)].0;
        let mut b = coarse[(best + 1).min(coarse.len() - 1)].0;
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let inf = f64::INFINITY;
        let mut fc = eval(Member::Smoothed { tau: c }, &mut done)?.unwrap_or(inf);
        let mut fd = eval(Member::Smoothed { tau: d }, &mut done)?.unwrap_or(inf);
        for _ in 0..fam.golden_steps {
            steps += 1;
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = eval(Member::Smoothed { tau: c }, &mut done)?.unwrap_or(inf);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = eval(Member::Smoothed { tau: d }, &mut done)?.unwrap_or(inf);
            }
        }
    }

    if done.is_empty() {
        return Err(Error::Resolution(
            "no member of the family is admissible at this resolution".into(),
        ));
    }
    done.sort_by(|x, y| x.member.key().partial_cmp(&y.member.key()).expect("finite keys"));
    let count = done.len();
    let width = done[0].values.len();
    Ok((0..width)
        .map(|j| {
            let best = done
                .iter()
                .fold(None::<&Evaluated>, |acc, e| match acc {
                    Some(b) if b.values[j] <= e.values[j] => Some(b),
                    _ => Some(e),
                })
                .expect("nonempty");
            let mut w = best.member.witness();
            w.evaluations = count;
            w.golden_steps = steps;
            (best.values[j], w)
        })
        .collect())
}

/// `Σ_k ‖D_k f‖_p`.
pub fn sobolev_functional(f: &GridFunction, p: f64) -> Result<f64> {
    let mut s = 0.0;
    for axis in 1..=f.dim() {
        s += f.partial_derivative(axis)?.lp_norm(p)?;
    }
    Ok(s)
}

/// `‖f‖_{b^α_{p,q}}` from cached partial curves.
pub fn besov_functional(curves: &[ModulusCurve], alpha: f64, q: f64) -> Result<f64> {
    let quad = BesovQuadrature::default();
    let mut s = 0.0;
    for c in curves {
        s += seminorm_from_curve(c, alpha, q, quad)?;
    }
    Ok(s)
}

fn empty_estimate(space: Space) -> CapacityEstimate {
    CapacityEstimate {
        value: 0.0,
        kind: EstimateKind::Upper,
        space,
        witness: None,
        derivation: "empty set".into(),
    }
}

pub fn sobolev_capacity_upper(k: &DiscreteSet, p: f64, fam: &AdmissibleFamily) -> Result<CapacityEstimate> {
    check_p(p)?;
    let space = Space::Sobolev { p };
    if k.is_empty() {
        if fam.is_empty() {
            return param("admissible family is empty");
        }
        return Ok(empty_estimate(space));
    }
    let best = minimize(k, fam, 0, &|f| Ok(vec![sobolev_functional(f, p)?.powf(p)]))?;
    let (value, witness) = best.into_iter().next().expect("one component");
    Ok(CapacityEstimate {
        value,
        kind: EstimateKind::Upper,
        space,
        witness: Some(witness),
        derivation: "min over the family of (Σ_k ‖D_k f‖_p)^p".into(),
    })
}

pub fn besov_capacity_upper(k: &DiscreteSet, e: Exponents, fam: &AdmissibleFamily) -> Result<CapacityEstimate> {
    let mut v = besov_capacity_upper_multi(k, e.p, e.q, &[e.alpha], fam)?;
    Ok(v.remove(0))
}

/// Upper bounds for several `α` at once. The partial curves do not depend
/// on `α`, so each admissible function is tabulated once; the refinement
/// follows the last `α` of the list.
pub fn besov_capacity_upper_multi(
    k: &DiscreteSet,
    p: f64,
    q: f64,
    alphas: &[f64],
    fam: &AdmissibleFamily,
) -> Result<Vec<CapacityEstimate>> {
    if alphas.is_empty() {
        return param("no alpha given");
    }
    for &alpha in alphas {
        Exponents::new(k.dim(), p, q, alpha)?;
    }
    let space = |alpha| Space::Besov { alpha, p, q };
    if k.is_empty() {
        if fam.is_empty() {
            return param("admissible family is empty");
        }
        return Ok(alphas.iter().map(|&a| empty_estimate(space(a))).collect());
    }
    let best = minimize(k, fam, alphas.len() - 1, &|f| {
        let curves = modulus::curves_of(f, p)?;
        alphas
            .iter()
            .map(|&a| Ok(besov_functional(&curves, a, q)?.powf(p)))
            .collect()
    })?;
    Ok(best
        .into_iter()
        .zip(alphas)
        .map(|((value, witness), &alpha)| CapacityEstimate {
            value,
            kind: EstimateKind::Upper,
            space: space(alpha),
            witness: Some(witness),
            derivation: "min over the family of (Σ_k ‖f‖_{b^α_{p,q;k}})^p".into(),
        })
        .collect())
}

/// The constant `C` of `f*(t) ≤ C t^{−1/p*} Σ_k ‖D_k f‖_p`:
/// `C = n n′ (1 + a^{−1/p′})`, `a = (1 − 1/n)p′ − 1` (`C = 2nn′` at `p = 1`).
pub fn weak_sobolev_constant(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    let n_conj = nf / (nf - 1.0);
    let second = if p == 1.0 {
        1.0
    } else {
        let p_conj = p / (p - 1.0);
        let a = (1.0 - 1.0 / nf) * p_conj - 1.0;
        a.powf(-1.0 / p_conj)
    };
    nf * n_conj * (1.0 + second)
}

/// `cap(K; W¹_p) ≥ (|K|^{1/p*}/C)^p`, from `λ_f(y) ≥ |K|` for `y < 1`.
pub fn sobolev_capacity_lower(k: &DiscreteSet, p: f64) -> Result<CapacityEstimate> {
    check_p(p)?;
    let n = k.dim();
    if p >= n as f64 {
        return Err(Error::UnsupportedDimension(format!(
            "weak-type lower bound needs p < n (p = {p}, n = {n})"
        )));
    }
    let e = Exponents::new(n, p, 1.0, 0.5)?;
    let p_star = e.p_star().expect("p < n");
    let c = weak_sobolev_constant(n, p);
    let value = (k.measure().powf(1.0 / p_star) / c).powf(p);
    Ok(CapacityEstimate {
        value,
        kind: EstimateKind::Lower,
        space: Space::Sobolev { p },
        witness: None,
        derivation: format!(
            "weak type: |K| ≤ c_{{p,n}} (Σ‖D_k f‖_p)^{{p*}} with c_{{p,n}} = C^{{p*}}, C = {c} \
             (explicit, not sharp), p* = {p_star}"
        ),
    })
}

/// `cap(K; B^α_{p,q}) ≥ [(αq)^{−1/q} |K|^{1/p_α} / (2p_α)]^p`.
pub fn besov_capacity_lower(k: &DiscreteSet, e: Exponents) -> Result<CapacityEstimate> {
    if e.n != k.dim() {
        return param("exponents and set differ in dimension");
    }
    let p_alpha = e.p_alpha().ok_or_else(|| {
        Error::UnsupportedDimension(format!(
            "weak-type lower bound needs αp < n (α = {}, p = {}, n = {})",
            e.alpha, e.p, e.n
        ))
    })?;
    let value = ((e.alpha * e.q).powf(-1.0 / e.q) * k.measure().powf(1.0 / p_alpha)
        / (2.0 * p_alpha))
        .powf(e.p);
    Ok(CapacityEstimate {
        value,
        kind: EstimateKind::Lower,
        space: Space::Besov { alpha: e.alpha, p: e.p, q: e.q },
        witness: None,
        derivation: format!(
            "weak type: λ_f(y) ≤ (2p_α)^{{p_α}} ‖f‖_{{b^α_{{p,∞}}}}^{{p_α}} y^{{−p_α}}, \
             ‖f‖_{{b^α_{{p,∞}}}} ≤ (αq)^{{1/q}} ‖f‖_{{b^α_{{p,q}}}}, p_α = {p_alpha}"
        ),
    })
}

/// `cap(G; W¹_1) = 2` for every nonempty open `G ⊂ ℝ`, given as a union of
/// intervals `(a, b)`.
pub fn exact_1d_w11(intervals: &[(f64, f64)]) -> Result<CapacityEstimate> {
    if intervals.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return param("intervals must be bounded");
    }
    let nonempty = intervals.iter().any(|(a, b)| b > a);
    Ok(CapacityEstimate {
        value: if nonempty { 2.0 } else { 0.0 },
        kind: EstimateKind::Exact,
        space: Space::Sobolev { p: 1.0 },
        witness: None,
        derivation: "total variation of an admissible function on the line is at least 2".into(),
    })
}

/// Erosion depths, in cells, of the inner compact approximations of an
/// open set.
pub const EXHAUSTION_CELLS: [usize; 4] = [8, 4, 2, 1];

/// Running supremum over inner compacts of an open set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exhaustion {
    /// `(erosion cells, |K_j|, values for K_j)`
    pub levels: Vec<(usize, f64, Vec<f64>)>,
    pub supremum: Vec<f64>,
    /// Last two running suprema within 1% of each other, per component.
    pub converged: Vec<bool>,
}

/// Evaluates `estimate` on `G` eroded by 8, 4, 2 and 1 cells and keeps the
/// running supremum of every component.
pub fn exhaust(
    g: &DiscreteSet,
    estimate: &dyn Fn(&DiscreteSet) -> Result<Vec<f64>>,
) -> Result<Exhaustion> {
    let mut levels = Vec::new();
    let mut history: Vec<Vec<f64>> = Vec::new();
    for cells in EXHAUSTION_CELLS {
        let k = g.erode(cells as f64 * g.spacing());
        if k.is_empty() {
            continue;
        }
        let vals = estimate(&k)?;
        let running = match history.last() {
            Some(prev) => prev.iter().zip(&vals).map(|(a, b)| a.max(*b)).collect(),
            None => vals.clone(),
        };
        history.push(running);
        levels.push((cells, k.measure(), vals));
    }
    let supremum = history
        .last()
        .cloned()
        .ok_or_else(|| Error::Resolution("every inner approximation is empty".into()))?;
    let converged = if history.len() >= 2 {
        let prev = &history[history.len() - 2];
        prev.iter()
            .zip(&supremum)
            .map(|(a, b)| (b - a).abs() <= 0.01 * b.abs().max(1e-300))
            .collect()
    } else {
        vec![false; supremum.len()]
    };
    Ok(Exhaustion { levels, supremum, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_anchor() {
        let h = 0.005;
        let k = DiscreteSet::box_set(&[-1.0], &[1.0], h).unwrap();
        let est = sobolev_capacity_upper(&k, 1.0, &AdmissibleFamily::for_spacing(h)).unwrap();
        assert!(est.value >= 2.0 - 1e-9 && est.value <= 2.1, "{}", est.value);
        assert_eq!(est.kind, EstimateKind::Upper);
        let mut fam = AdmissibleFamily::empty();
        fam.explicit.push(mollify::example_fa(1.0 + 2.0 * h, h).unwrap());
        let est = sobolev_capacity_upper(&k, 1.0, &fam).unwrap();
        assert!(est.value >= 2.0 - 1e-9 && est.value <= 2.1);
        assert_eq!(est.witness.unwrap().family, "explicit");
    }

    #[test]
    fn empty_family_is_rejected() {
        let k = DiscreteSet::box_set(&[0.0], &[1.0], 0.1).unwrap();
        assert!(matches!(
            sobolev_capacity_upper(&k, 1.0, &AdmissibleFamily::empty()),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn empty_set_has_zero_capacity() {
        let k = DiscreteSet::empty(2, 0.1).unwrap();
        let e = Exponents::new(2, 1.0, 1.0, 0.5).unwrap();
        let est = besov_capacity_upper(&k, e, &AdmissibleFamily::for_spacing(0.1)).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(sobolev_capacity_lower(&k, 1.0).unwrap().value, 0.0);
        assert_eq!(besov_capacity_lower(&k, e).unwrap().value, 0.0);
    }

    #[test]
    fn lower_bounds_of_the_unit_square() {
        let k = DiscreteSet::box_set(&[0.0, 0.0], &[1.0, 1.0], 0.05).unwrap();
        let lo = sobolev_capacity_lower(&k, 1.0).unwrap();
        assert!((lo.value - 1.0 / 8.0).abs() < 1e-12);
        let big = DiscreteSet::box_set(&[0.0, 0.0], &[2.0, 2.0], 0.05).unwrap();
        let ratio = sobolev_capacity_lower(&big, 1.0).unwrap().value / lo.value;
        assert!((ratio - 2.0).abs() < 1e-12);
        let up = sobolev_capacity_upper(&k, 1.0, &AdmissibleFamily::for_spacing(0.05)).unwrap();
        assert!(lo.value <= up.value);
        assert!(matches!(sobolev_capacity_lower(&k, 2.0), Err(Error::UnsupportedDimension(_))));
        let e = Exponents::new(2, 1.0, 1.0, 0.5).unwrap();
        let bl = besov_capacity_lower(&k, e).unwrap();
        let bu = besov_capacity_upper(&k, e, &AdmissibleFamily::for_spacing(0.05)).unwrap();
        assert!(bl.value > 0.0 && bl.value <= bu.value);
    }

    #[test]
    fn exact_value_on_the_line() {
        assert_eq!(exact_1d_w11(&[(0.0, 1.0)]).unwrap().value, 2.0);
        assert_eq!(exact_1d_w11(&[(-5.0, 5.0)]).unwrap().value, 2.0);
        assert_eq!(exact_1d_w11(&[]).unwrap().value, 0.0);
    }

    #[test]
    fn estimate_json_fields() {
        let k = DiscreteSet::box_set(&[0.0], &[1.0], 0.01).unwrap();
        let est = sobolev_capacity_upper(&k, 1.0, &AdmissibleFamily::for_spacing(0.01)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&est.to_json()).unwrap();
        for key in ["value", "kind", "space", "witness", "derivation"] {
            assert!(v.get(key).is_some());
        }
        assert_eq!(v["kind"], "upper");
    }

    #[test]
    fn exhaustion_keeps_running_supremum() {
        let g = DiscreteSet::box_set(&[-1.0], &[1.0], 0.001).unwrap();
        let ex = exhaust(&g, &|k| Ok(vec![k.measure()])).unwrap();
        assert_eq!(ex.levels.len(), 4);
        assert!((ex.supremum[0] - 1.998).abs() < 1e-9);
        assert!(ex.converged[0]);
    }
}

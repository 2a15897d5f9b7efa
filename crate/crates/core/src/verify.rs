//! Randomized corpus and the full battery of inequality checks, each
//! reported with both sides.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::besov::{embedding_sides_from_curve, seminorm_from_curve, BesovQuadrature, Regime, INEQ_TOL};
use crate::error::Result;
use crate::grid::{Exponents, GridFunction};
use crate::modulus::{self, ModulusCurve};
use crate::mollify;
use crate::rearrange;
use crate::sets::DiscreteSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemberKind {
    Indicator,
    Step,
    Mollified,
    Hat,
    Oscillating,
}

#[derive(Clone, Debug)]
pub struct CorpusMember {
    pub kind: MemberKind,
    pub f: GridFunction,
    pub p: f64,
}

impl CorpusMember {
    pub fn is_smooth(&self) -> bool {
        matches!(self.kind, MemberKind::Mollified | MemberKind::Hat)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub functions: usize,
    pub sets: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { functions: 200, sets: 200, seed: 20_240_611 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub tag: String,
    pub subject: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TagTally {
    pub checks: usize,
    pub failures: usize,
    /// Smallest `rhs − lhs` seen.
    pub min_slack: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tallies: BTreeMap<String, TagTally>,
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn total_checks(&self) -> usize {
        self.tallies.values().map(|t| t.checks).sum()
    }

    /// Records `lhs ≤ rhs` up to `rhs − lhs ≥ −INEQ_TOL·max(1, |rhs|)`.
    pub fn check(&mut self, tag: &str, subject: impl FnOnce() -> String, lhs: f64, rhs: f64) {
        self.check_with(tag, subject, lhs, rhs, INEQ_TOL * rhs.abs().max(1.0));
    }

    pub fn check_with(&mut self, tag: &str, subject: impl FnOnce() -> String, lhs: f64, rhs: f64, tol: f64) {
        let t = self.tallies.entry(tag.to_string()).or_insert(TagTally {
            checks: 0,
            failures: 0,
            min_slack: f64::INFINITY,
        });
        t.checks += 1;
        let slack = rhs - lhs;
        t.min_slack = t.min_slack.min(slack);
        if !(slack >= -tol) {
            t.failures += 1;
            self.violations.push(Violation { tag: tag.to_string(), subject: subject(), lhs, rhs });
        }
    }

    pub fn merge(&mut self, other: Report) {
        for (tag, t) in other.tallies {
            let e = self.tallies.entry(tag).or_insert(TagTally {
                checks: 0,
                failures: 0,
                min_slack: f64::INFINITY,
            });
            e.checks += t.checks;
            e.failures += t.failures;
            e.min_slack = e.min_slack.min(t.min_slack);
        }
        self.violations.extend(other.violations);
    }
}

fn pick_p(rng: &mut ChaCha8Rng) -> f64 {
    [1.0, 1.5, 2.0][rng.gen_range(0..3)]
}

/// Functions cycling through indicators, signed step functions, mollified
/// indicators, hats and oscillating examples, in one and two dimensions.
pub fn function_corpus(count: usize, seed: u64) -> Result<Vec<CorpusMember>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let two_d = rng.gen_bool(0.4);
        let p = pick_p(&mut rng);
        let member = match i % 5 {
            0 => {
                let f = if two_d {
                    let h = 0.05;
                    let lo = [rng.gen_range(0..10) as f64 * h, rng.gen_range(0..10) as f64 * h];
                    let hi = [lo[0] + rng.gen_range(2..12) as f64 * h, lo[1] + rng.gen_range(2..12) as f64 * h];
                    DiscreteSet::box_set(&lo, &hi, h)?.indicator(1)?
                } else {
                    let h = 0.01;
                    let mut s = DiscreteSet::empty(1, h)?;
                    for _ in 0..rng.gen_range(1..4) {
                        let a = rng.gen_range(0..150) as f64 * h;
                        let b = a + rng.gen_range(5..60) as f64 * h;
                        s = s.union(&DiscreteSet::box_set(&[a], &[b], h)?)?;
                    }
                    s.indicator(1)?
                };
                CorpusMember { kind: MemberKind::Indicator, f, p }
            }
            1 => {
                let (dim, h, n) = if two_d { (2, 0.1, 8) } else { (1, 0.02, 40) };
                let count: usize = if dim == 2 { n * n } else { n };
                let samples: Vec<f64> = (0..count)
                    .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-1.0..1.0) })
                    .collect();
                let extents = vec![n; dim];
                let origin = vec![0.0; dim];
                CorpusMember {
                    kind: MemberKind::Step,
                    f: GridFunction::new(dim, &origin, h, &extents, samples)?,
                    p,
                }
            }
            2 => {
                let (k, tau) = if two_d {
                    let h = 0.04;
                    let side = rng.gen_range(5..15) as f64 * h;
                    (DiscreteSet::box_set(&[0.0, 0.0], &[side, side], h)?, h * rng.gen_range(3..6) as f64)
                } else {
                    let h = 0.001;
                    let len = rng.gen_range(200..800) as f64 * h;
                    (DiscreteSet::box_set(&[0.0], &[len], h)?, h * rng.gen_range(20..100) as f64)
                };
                CorpusMember { kind: MemberKind::Mollified, f: mollify::admissible_from_set(&k, tau)?, p }
            }
            3 => {
                let f = if two_d {
                    let h: f64 = 0.04;
                    let w = rng.gen_range(0.3..0.8);
                    let m = (2.0 * w / h).ceil() as usize + 2;
                    GridFunction::from_fn(2, &[-w - h, -w - h], h, &[m, m], |x| {
                        (1.0 - x[0].abs().max(x[1].abs()) / w).max(0.0)
                    })?
                } else {
                    let h: f64 = 0.001;
                    let w = rng.gen_range(0.2..0.7);
                    let m = (2.0 * w / h).ceil() as usize + 2;
                    let amp = rng.gen_range(0.5..2.0);
                    GridFunction::from_fn(1, &[-w - h], h, &[m], |x| amp * (1.0 - x[0].abs() / w).max(0.0))?
                };
                CorpusMember { kind: MemberKind::Hat, f, p }
            }
            _ => {
                let nu = rng.gen_range(1..5);
                let h = [0.1, 0.05, 0.25][rng.gen_range(0..3)];
                CorpusMember { kind: MemberKind::Oscillating, f: mollify::example_oscillating(nu, h)?, p }
            }
        };
        out.push(member);
    }
    Ok(out)
}

/// Planar sets of 20 to 80 cells scattered uniformly over a 12 × 12 window.
pub fn set_corpus(count: usize, seed: u64) -> Result<Vec<DiscreteSet>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e75);
    (0..count)
        .map(|_| {
            let cells = rng.gen_range(20..80);
            let mut picked = Vec::with_capacity(cells);
            for _ in 0..cells {
                picked.push([rng.gen_range(0..12), rng.gen_range(0..12), 0]);
            }
            DiscreteSet::from_cells(2, 0.1, picked)
        })
        .collect()
}

const THETAS: [f64; 3] = [2.0, 4.0, f64::INFINITY];
const ALPHAS: [f64; 3] = [0.1, 0.5, 0.9];
const QS: [f64; 2] = [1.0, 2.0];
const SPLITS: [f64; 3] = [0.5, 1.0, 2.0];

fn check_curve(report: &mut Report, name: &str, m: &CorpusMember, axis: usize, curve: &ModulusCurve) -> Result<()> {
    let f = &m.f;
    let p = m.p;
    let h = f.spacing();
    let norm = f.lp_norm(p)?;
    let nonneg = f.min_value() >= 0.0;
    let indicator = f.samples().iter().all(|&v| v == 0.0 || v == 1.0);
    let support = f.nonzero_count() as f64 * f.cell_volume();
    let d_norm = f.partial_derivative(axis)?.lp_norm(p)?;
    let subj = |what: &str, t: f64| format!("{name} axis {axis} p {p} {what} t={t}");

    let mut prev: Option<(f64, f64)> = None;
    for (i, (&t, &w)) in curve.knots.iter().zip(&curve.values).enumerate().skip(1) {
        let avg = modulus::averaged_modulus(curve, t)?;
        report.check("Lemma 2.1", || subj("averaged ≤ ω", t), avg, w);
        report.check("Lemma 2.1", || subj("ω ≤ 2·averaged", t), w, 2.0 * avg);
        if let Some((pt, pavg)) = prev {
            report.check("Lemma 2.1", || subj("averaged increasing", t), pavg, avg);
            report.check("Lemma 2.1", || subj("averaged/t decreasing", t), avg / t, pavg / pt);
        }
        prev = Some((t, avg));
        report.check("(First)", || subj("ω ≤ 2‖f‖", t), w, 2.0 * norm);
        if nonneg {
            report.check("(posit)", || subj("ω ≤ 2^{1/p}‖f‖", t), w, 2f64.powf(1.0 / p) * norm);
        }
        if indicator {
            report.check("(charact)", || subj("ω ≤ (2|E|)^{1/p}", t), w, (2.0 * support).powf(1.0 / p));
        }
        report.check("(ocenka)", || subj("ω ≤ δ‖D f‖", t), w, i as f64 * h * d_norm);
    }

    if m.is_smooth() {
        let via = modulus::derivative_norm_via_modulus(f, axis, p)?;
        report.check_with("Lemma 2.2", || subj("sup ω/δ vs ‖D f‖", 0.0), (via - d_norm).abs(), 0.02 * d_norm, 0.0);
        let quad = BesovQuadrature::default();
        for &q in &QS {
            for &alpha in &[0.5] {
                let e = Exponents::new(f.dim(), p, q, alpha)?;
                let lhs = seminorm_from_curve(curve, alpha, q, quad)?;
                for &t_split in &SPLITS {
                    let rhs = q.powf(-1.0 / q)
                        * ((1.0 - e.alpha).powf(-1.0 / q) * t_split.powf(1.0 - e.alpha) * d_norm
                            + 2.0 * e.alpha.powf(-1.0 / q) * t_split.powf(-e.alpha) * norm);
                    report.check("Lemma 2.3", || subj(&format!("q {q} T {t_split}"), 0.0), lhs, rhs);
                }
            }
        }
    }

    for &alpha in &ALPHAS {
        for &q in &QS {
            for &theta in THETAS.iter().filter(|&&t| t > q) {
                let e = Exponents::new(f.dim(), p, q, alpha)?;
                for (tag, regime) in [("Lemma 2.4", Regime::SmallAlpha), ("Lemma 2.5", Regime::LargeAlpha)] {
                    let (lhs, rhs) = embedding_sides_from_curve(curve, e, theta, regime)?;
                    report.check(tag, || subj(&format!("alpha {alpha} q {q} theta {theta}"), 0.0), lhs, rhs);
                }
            }
        }
    }
    Ok(())
}

fn check_rearrangement(report: &mut Report, name: &str, m: &CorpusMember) -> Result<()> {
    let f = &m.f;
    let prof = rearrangement_checked(report, name, f)?;
    let top = prof.levels.first().copied().unwrap_or(0.0);
    for i in 1..10 {
        let y = top * i as f64 / 10.0;
        if y <= 0.0 {
            continue;
        }
        let lam = rearrange::distribution(f, y)?;
        report.check("(distrib)", || format!("{name} y={y}"), y, prof.value(lam));
    }
    let supp = prof.support().max(f.cell_volume());
    for frac in [0.1, 0.5, 2.0] {
        let t = frac * supp;
        let gap = rearrange::deriv_identity_gap(&prof, t)?;
        report.check_with("(deriv)", || format!("{name} t={t}"), gap, 1e-8, 0.0);
        let b = rearrange::oscillation_bounds(f, t, m.p)?;
        report.check("(estim1)", || format!("{name} t={t}"), b.lhs, b.rhs_sobolev);
        report.check("(estim2)", || format!("{name} t={t}"), b.lhs, b.rhs_modulus);
    }
    Ok(())
}

fn rearrangement_checked(report: &mut Report, name: &str, f: &GridFunction) -> Result<rearrange::RearrangementProfile> {
    let prof = rearrange::rearrangement(f);
    for p in [1.0, 2.0] {
        let direct = f.lp_norm(p)?.powf(p);
        let sum = prof.power_sum(p);
        report.check_with("equimeasurability", || format!("{name} p={p}"), (sum - direct).abs(), 0.0, 1e-12 * direct.max(1e-300));
    }
    Ok(prof)
}

fn check_set(report: &mut Report, name: &str, e: &DiscreteSet) -> Result<()> {
    let h = e.spacing();
    let mu = e.measure();
    let mut lam = f64::INFINITY;
    for k in 1..=e.dim() {
        let proj = e.projection_measure(k)?;
        lam = lam.min(proj);
        let (lo, hi) = e.bounds().expect("nonempty");
        let span = (hi[k - 1] - lo[k - 1] + 1) as usize;
        let integral: f64 = (1..=span).map(|m| e.overlap(k, m)).sum::<Result<f64>>()? * h;
        report.check("Lemma 2.8 averaging", || format!("{name} axis {k}"), integral, mu * mu / proj);
    }
    let eta = mu / 10.0;
    let big_h = 2.0 * mu * mu * e.dim() as f64 / (lam * eta);
    let bound = ((big_h / h) * (1.0 - 1e-12)).ceil().max(1.0) * h;
    match e.translation_search(mu, lam, eta) {
        Ok(shift) => {
            report.check("Lemma 2.8", || format!("{name} shift ≤ H"), shift, bound);
            let m = (shift / h).round() as usize;
            let total: f64 = (1..=e.dim()).map(|k| e.overlap(k, m)).sum::<Result<f64>>()?;
            report.check_with("Lemma 2.8", || format!("{name} overlap < eta"), total, eta, 0.0);
        }
        Err(_) => report.check_with("Lemma 2.8", || format!("{name} search failed"), 1.0, 0.0, 0.0),
    }
    Ok(())
}

/// Runs every check on the corpus members.
pub fn check_functions(members: &[CorpusMember]) -> Result<Report> {
    use rayon::prelude::*;
    let parts: Vec<Result<Report>> = members
        .par_iter()
        .enumerate()
        .map(|(i, m)| {
            let mut r = Report::default();
            let name = format!("function #{i} ({:?}, n={})", m.kind, m.f.dim());
            for axis in 1..=m.f.dim() {
                let curve = modulus::curve_of(&m.f, axis, m.p)?;
                check_curve(&mut r, &name, m, axis, &curve)?;
            }
            check_rearrangement(&mut r, &name, m)?;
            Ok(r)
        })
        .collect();
    let mut report = Report::default();
    for p in parts {
        report.merge(p?);
    }
    Ok(report)
}

pub fn check_sets(sets: &[DiscreteSet]) -> Result<Report> {
    let mut report = Report::default();
    for (i, e) in sets.iter().enumerate() {
        check_set(&mut report, &format!("set #{i}"), e)?;
    }
    Ok(report)
}

pub fn run_suite(cfg: SuiteConfig) -> Result<Report> {
    let mut report = check_functions(&function_corpus(cfg.functions, cfg.seed)?)?;
    report.merge(check_sets(&set_corpus(cfg.sets, cfg.seed)?)?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic() {
        let a = function_corpus(10, 7).unwrap();
        let b = function_corpus(10, 7).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.f, y.f);
        }
        assert_eq!(set_corpus(5, 7).unwrap(), set_corpus(5, 7).unwrap());
    }

    #[test]
    fn small_suite_passes() {
        let r = run_suite(SuiteConfig { functions: 10, sets: 10, seed: 1 }).unwrap();
        assert!(r.passed(), "{:?}", r.violations.first());
        assert!(r.total_checks() > 100);
    }

    #[test]
    fn report_records_violations() {
        let mut r = Report::default();
        r.check("X", || "s".into(), 2.0, 1.0);
        r.check("X", || "s".into(), 1.0, 1.0);
        assert_eq!(r.tallies["X"].checks, 2);
        assert_eq!(r.violations.len(), 1);
        assert!(!r.passed());
    }
}

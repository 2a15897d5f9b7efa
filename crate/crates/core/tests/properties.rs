use besovcap::besov::{
    embedding_sides_from_curve, partition_bound_sides, seminorm_from_curve, BesovQuadrature,
};
use besovcap::capacity::{self, AdmissibleFamily};
use besovcap::modulus::{self, averaged_modulus, curve_of, partial_modulus};
use besovcap::mollify;
use besovcap::rearrange::{self, rearrangement};
use besovcap::{DiscreteSet, Exponents, GridFunction, ModulusCurve, Regime};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn leq(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + TOL * rhs.abs().max(1.0)
}

fn step_function(nonneg: bool) -> impl Strategy<Value = GridFunction> {
    let lo = if nonneg { 0.0 } else { -2.0 };
    (1usize..=2, prop::sample::select(vec![0.05, 0.1, 0.25]))
        .prop_flat_map(move |(dim, h)| {
            let ext = if dim == 1 { 1usize..40 } else { 1usize..9 };
            (Just(dim), Just(h), prop::collection::vec(ext, dim), -1.0f64..1.0)
        })
        .prop_flat_map(move |(dim, h, extents, shift)| {
            let count: usize = extents.iter().product();
            let vals = prop::collection::vec(prop_oneof![Just(0.0), lo..2.0f64], count);
            (Just(dim), Just(h), Just(extents), Just(shift), vals)
        })
        .prop_map(|(dim, h, extents, shift, vals)| {
            let origin = vec![(shift / h).round() * h; dim];
            GridFunction::new(dim, &origin, h, &extents, vals).unwrap()
        })
}

fn exponent_p() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![1.0, 1.5, 2.0, 3.0])
}

fn planar_set() -> impl Strategy<Value = DiscreteSet> {
    prop::collection::vec((0i64..10, 0i64..10), 1..40).prop_map(|cells| {
        DiscreteSet::from_cells(2, 0.1, cells.into_iter().map(|(a, b)| [a, b, 0])).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_preserves_norms(f in step_function(false), p in exponent_p(), m in -7i64..7) {
        for axis in 1..=f.dim() {
            let g = f.translate(axis, m).unwrap();
            prop_assert_eq!(g.lp_norm(p).unwrap(), f.lp_norm(p).unwrap());
        }
    }

    #[test]
    fn differences_are_bounded_by_the_norm(f in step_function(false), p in exponent_p(), m in 0usize..50) {
        let norm = f.lp_norm(p).unwrap();
        let nonneg = f.min_value() >= 0.0;
        for axis in 1..=f.dim() {
            let d = f.difference_norm(axis, m, p).unwrap();
            prop_assert!(leq(d, 2.0 * norm));
            if nonneg {
                prop_assert!(leq(d, 2f64.powf(1.0 / p) * norm));
            }
        }
    }

    #[test]
    fn nonnegative_differences_obey_the_sharper_bound(f in step_function(true), p in exponent_p(), m in 0usize..50) {
        let norm = f.lp_norm(p).unwrap();
        for axis in 1..=f.dim() {
            prop_assert!(leq(f.difference_norm(axis, m, p).unwrap(), 2f64.powf(1.0 / p) * norm));
        }
    }

    #[test]
    fn difference_norm_is_constant_past_the_support(f in step_function(false), p in exponent_p(), extra in 0usize..5) {
        for axis in 1..=f.dim() {
            let w = f.support_cells(axis).unwrap();
            let at = f.difference_norm(axis, w, p).unwrap();
            let past = f.difference_norm(axis, w + 1 + extra, p).unwrap();
            prop_assert!((at - past).abs() <= 1e-12 * at.max(1.0));
        }
    }

    #[test]
    fn averaged_modulus_sandwich(f in step_function(false), p in exponent_p()) {
        for axis in 1..=f.dim() {
            let c = curve_of(&f, axis, p).unwrap();
            let mut prev: Option<(f64, f64)> = None;
            for (&t, &w) in c.knots.iter().zip(&c.values).skip(1) {
                let avg = averaged_modulus(&c, t).unwrap();
                prop_assert!(leq(avg, w));
                prop_assert!(leq(w, 2.0 * avg));
                if let Some((pt, pavg)) = prev {
                    prop_assert!(leq(pavg, avg));
                    prop_assert!(leq(avg / t, pavg / pt));
                }
                prev = Some((t, avg));
            }
        }
    }

    #[test]
    fn curves_are_moduli(f in step_function(false), p in exponent_p()) {
        for axis in 1..=f.dim() {
            let c = curve_of(&f, axis, p).unwrap();
            prop_assert!(c.invariant_defect() <= 1e-12 * c.plateau.max(1.0));
        }
    }

    #[test]
    fn modulus_grows_at_most_linearly(f in step_function(false), p in exponent_p(), m in 1usize..30) {
        for axis in 1..=f.dim() {
            let d = f.partial_derivative(axis).unwrap().lp_norm(p).unwrap();
            let delta = m as f64 * f.spacing();
            prop_assert!(leq(partial_modulus(&f, axis, delta, p).unwrap(), delta * d));
        }
    }

    #[test]
    fn rearrangement_is_equimeasurable(f in step_function(false), p in exponent_p()) {
        let prof = rearrangement(&f);
        let direct = f.lp_norm(p).unwrap().powf(p);
        prop_assert!((prof.power_sum(p) - direct).abs() <= 1e-12 * direct.max(1e-300));
        let top = prof.levels.first().copied().unwrap_or(0.0);
        for i in 1..8 {
            let y = top * i as f64 / 8.0;
            if y > 0.0 {
                let lam = rearrange::distribution(&f, y).unwrap();
                prop_assert!(leq(y, prof.value(lam)));
            }
        }
    }

    #[test]
    fn double_star_identity_and_oscillation(f in step_function(false), p in exponent_p(), frac in 0.05f64..3.0) {
        let prof = rearrangement(&f);
        let t = frac * prof.support().max(f.cell_volume());
        prop_assert!(rearrange::deriv_identity_gap(&prof, t).unwrap() < 1e-8);
        let b = rearrange::oscillation_bounds(&f, t, p).unwrap();
        prop_assert!(b.lhs >= -1e-12);
        prop_assert!(leq(b.lhs, b.rhs_sobolev));
        prop_assert!(leq(b.lhs, b.rhs_modulus));
    }

    #[test]
    fn embeddings_hold(
        f in step_function(false),
        p in exponent_p(),
        alpha in 0.05f64..0.95,
        q in prop::sample::select(vec![1.0, 1.5, 2.0]),
        theta in prop::sample::select(vec![2.5, 4.0, f64::INFINITY]),
    ) {
        let c = curve_of(&f, 1, p).unwrap();
        let e = Exponents::new(f.dim(), p, q, alpha).unwrap();
        for regime in [Regime::SmallAlpha, Regime::LargeAlpha] {
            let (lhs, rhs) = embedding_sides_from_curve(&c, e, theta, regime).unwrap();
            prop_assert!(leq(lhs, rhs), "{:?}: {} > {}", regime, lhs, rhs);
        }
    }

    #[test]
    fn partition_bound_holds(
        f in step_function(false),
        p in exponent_p(),
        alpha in 0.05f64..0.95,
        split in prop::sample::select(vec![0.5, 1.0, 2.0]),
    ) {
        let e = Exponents::new(f.dim(), p, 1.0, alpha).unwrap();
        for axis in 1..=f.dim() {
            let (lhs, rhs) = partition_bound_sides(&f, axis, e, split).unwrap();
            prop_assert!(leq(lhs, rhs));
        }
    }

    #[test]
    fn quadrature_refinement_is_stable(f in step_function(false), alpha in 0.1f64..0.9, q in 1.0f64..3.0) {
        let c = curve_of(&f, 1, 1.5).unwrap();
        let base = seminorm_from_curve(&c, alpha, q, BesovQuadrature::default()).unwrap();
        let fine = seminorm_from_curve(&c, alpha, q, BesovQuadrature { nodes_per_decade: 128 }).unwrap();
        prop_assert!((base - fine).abs() <= 0.005 * base.max(1e-300));
    }

    #[test]
    fn text_round_trip(f in step_function(false)) {
        prop_assert_eq!(GridFunction::from_text(&f.to_text()).unwrap(), f.clone());
        let c = curve_of(&f, 1, 2.0).unwrap();
        prop_assert_eq!(ModulusCurve::from_csv(&c.to_csv()).unwrap(), c);
        let prof = rearrangement(&f);
        prop_assert_eq!(rearrange::RearrangementProfile::from_csv(&prof.to_csv()).unwrap(), prof);
    }

    #[test]
    fn set_averaging_bound(e in planar_set()) {
        let h = e.spacing();
        let mu = e.measure();
        let (lo, hi) = e.bounds().unwrap();
        for k in 1..=2 {
            let span = (hi[k - 1] - lo[k - 1] + 1) as usize;
            let integral: f64 = (1..=span).map(|m| e.overlap(k, m).unwrap()).sum::<f64>() * h;
            prop_assert!(leq(integral, mu * mu / e.projection_measure(k).unwrap()));
        }
    }

    #[test]
    fn dilation_and_erosion_are_ordered(e in planar_set(), r in 0.0f64..0.35) {
        let grown = e.dilate(r);
        prop_assert!(e.is_subset(&grown));
        prop_assert!(e.erode(r).is_subset(&e));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mollification_contracts(f in step_function(false), p in exponent_p()) {
        let tau = 3.0 * f.spacing();
        let g = mollify::mollify(&f, tau).unwrap();
        prop_assert!(leq(g.lp_norm(p).unwrap(), f.lp_norm(p).unwrap()));
        for axis in 1..=f.dim() {
            let (cf, cg) = (curve_of(&f, axis, p).unwrap(), curve_of(&g, axis, p).unwrap());
            prop_assert!(leq(cg.plateau, cf.plateau));
            for m in 1..cf.knots.len().min(12) {
                let t = cf.knots[m];
                prop_assert!(leq(cg.value(t), cf.value(t)));
            }
        }
    }

    #[test]
    fn smoothed_indicators_are_admissible(e in planar_set(), k in 3usize..6) {
        let f = mollify::admissible_from_set(&e, k as f64 * e.spacing()).unwrap();
        prop_assert!(capacity::is_admissible(&f, &e));
    }

    #[test]
    fn capacity_is_monotone_and_above_the_lower_bound(
        a in 1i64..5, b in 1i64..5, da in 0i64..3, db in 0i64..3,
    ) {
        let h = 0.1;
        let small = DiscreteSet::box_set(&[0.0, 0.0], &[a as f64 * h, b as f64 * h], h).unwrap();
        let big = DiscreteSet::box_set(&[0.0, 0.0], &[(a + da) as f64 * h, (b + db) as f64 * h], h).unwrap();
        let fam = AdmissibleFamily::for_spacing(h);
        let us = capacity::sobolev_capacity_upper(&small, 1.0, &fam).unwrap().value;
        let ub = capacity::sobolev_capacity_upper(&big, 1.0, &fam).unwrap().value;
        prop_assert!(leq(us, ub));
        prop_assert!(leq(capacity::sobolev_capacity_lower(&small, 1.0).unwrap().value, us));
        let e = Exponents::new(2, 1.0, 1.0, 0.5).unwrap();
        let bu = capacity::besov_capacity_upper(&small, e, &fam).unwrap().value;
        prop_assert!(leq(capacity::besov_capacity_lower(&small, e).unwrap().value, bu));
    }
}

#[test]
fn modulus_matches_the_curve_at_knots() {
    let f = mollify::example_oscillating(3, 0.25).unwrap();
    let c = modulus::curve_of(&f, 1, 1.0).unwrap();
    for (m, &t) in c.knots.iter().enumerate().step_by(3) {
        assert!((partial_modulus(&f, 1, t, 1.0).unwrap() - c.values[m]).abs() < 1e-12);
    }
}

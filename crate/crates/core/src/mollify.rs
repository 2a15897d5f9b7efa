//! The standard mollifier, the cutoff `η = φ ∗ χ_{B₂}`, truncation, the
//! smoothed indicators used as admissible functions, and the named example
//! functions.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::grid::{check_dim, GridFunction, MAX_DIM};
use crate::sets::DiscreteSet;

/// Values within this distance of 1 are snapped to 1 after a convolution,
/// so that "equal to 1 near K" survives rounding.
pub const ONE_SNAP: f64 = 1e-12;

fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (1.0 / (r2 - 1.0)).exp()
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub dim: usize,
    pub tau: f64,
    /// `c` in `φ(x) = c·exp(1/(|x|² − 1))`, fixed by the discrete mass.
    pub normalization: f64,
}

/// Half-width in cells of a kernel of radius `radius`.
fn half_cells(radius: f64, spacing: f64) -> usize {
    (radius / spacing * (1.0 + 1e-12)).floor() as usize
}

fn centred(dim: usize, half: usize, spacing: f64) -> (Vec<f64>, Vec<usize>) {
    (
        vec![-(half as f64 + 0.5) * spacing; dim],
        vec![2 * half + 1; dim],
    )
}

fn raw_kernel(dim: usize, tau: f64, spacing: f64) -> Result<GridFunction> {
    check_dim(dim)?;
    if !(spacing > 0.0) {
        return param(format!("spacing = {spacing} must be positive"));
    }
    if !(tau >= 3.0 * spacing * (1.0 - 1e-12)) {
        return Err(Error::Resolution(format!(
            "tau = {tau} is below three cells of spacing {spacing}"
        )));
    }
    let (origin, extents) = centred(dim, half_cells(tau, spacing), spacing);
    GridFunction::from_fn(dim, &origin, spacing, &extents, |x| {
        bump(x.iter().map(|v| (v / tau).powi(2)).sum())
    })
}

pub fn mollifier_spec(dim: usize, tau: f64, spacing: f64) -> Result<MollifierSpec> {
    let raw = raw_kernel(dim, tau, spacing)?;
    let mass = raw.integral() / tau.powi(dim as i32);
    Ok(MollifierSpec { dim, tau, normalization: 1.0 / mass })
}

/// `φ_τ` sampled at cell centers `jh`, `|j_a| ≤ τ/h`, scaled to unit
/// discrete mass.
pub fn standard_mollifier(dim: usize, tau: f64, spacing: f64) -> Result<GridFunction> {
    let raw = raw_kernel(dim, tau, spacing)?;
    let mass = raw.integral();
    Ok(raw.scale(1.0 / mass))
}

/// `f ∗ φ_τ` on the lattice of `f`.
pub fn mollify(f: &GridFunction, tau: f64) -> Result<GridFunction> {
    let k = standard_mollifier(f.dim(), tau, f.spacing())?;
    f.convolve(&k)
}

fn snap_unit(v: f64) -> f64 {
    if (v - 1.0).abs() <= ONE_SNAP {
        1.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// `η = φ ∗ χ_{B₂}` by discrete convolution on the centred lattice.
pub fn cutoff(dim: usize, spacing: f64) -> Result<GridFunction> {
    check_dim(dim)?;
    let half = half_cells(2.0, spacing);
    let (origin, extents) = centred(dim, half, spacing);
    let ball = GridFunction::from_fn(dim, &origin, spacing, &extents, |x| {
        if x.iter().map(|v| v * v).sum::<f64>() < 4.0 {
            1.0
        } else {
            0.0
        }
    })?;
    let k = standard_mollifier(dim, 1.0, spacing)?;
    Ok(ball.convolve(&k)?.map(snap_unit))
}

const PROFILE_POINTS: usize = 12_001;
const PROFILE_RADIUS: f64 = 3.0;

/// Radial profile of the cutoff: `η(x) = P(|x|)`, tabulated on `[0, 3]`
/// from `∫_0^1 φ(s)·|S(x, s) ∩ B₂| ds`.
#[derive(Clone, Debug)]
pub struct CutoffProfile {
    dim: usize,
    table: Vec<f64>,
}

// Composite 6-point Gauss–Legendre on [0, 1] nodes/weights, split at `kink`.
fn gl_nodes(a: f64, b: f64, panels: usize, out: &mut Vec<(f64, f64)>) {
    const X: [f64; 6] = [
        -0.932_469_514_203_152_1,
        -0.661_209_386_466_264_5,
        -0.238_619_186_083_196_9,
        0.238_619_186_083_196_9,
        0.661_209_386_466_264_5,
        0.932_469_514_203_152_1,
    ];
    const W: [f64; 6] = [
        0.171_324_492_379_170_35,
        0.360_761_573_048_138_6,
        0.467_913_934_572_691_04,
        0.467_913_934_572_691_04,
        0.360_761_573_048_138_6,
        0.171_324_492_379_170_35,
    ];
    if b <= a {
        return;
    }
    let w = (b - a) / panels as f64;
    for i in 0..panels {
        let mid = a + (i as f64 + 0.5) * w;
        for k in 0..6 {
            out.push((mid + 0.5 * w * X[k], 0.5 * w * W[k]));
        }
    }
}

/// Measure of `{y : |y − x| = s} ∩ B₂` with `|x| = r`.
fn sphere_in_ball(dim: usize, r: f64, s: f64) -> f64 {
    use std::f64::consts::PI;
    match dim {
        1 => f64::from(u8::from((r + s).abs() < 2.0)) + f64::from(u8::from((r - s).abs() < 2.0)),
        _ => {
            if r + s <= 2.0 {
                if dim == 2 {
                    2.0 * PI * s
                } else {
                    4.0 * PI * s * s
                }
            } else if (r - s).abs() >= 2.0 {
                0.0
            } else if dim == 2 {
                let c = ((r * r + s * s - 4.0) / (2.0 * r * s)).clamp(-1.0, 1.0);
                2.0 * s * c.acos()
            } else {
                PI * s * (4.0 - (r - s).powi(2)) / r
            }
        }
    }
}

fn profile_value(dim: usize, r: f64, nodes: &dyn Fn(f64) -> Vec<(f64, f64)>) -> f64 {
    nodes(r)
        .iter()
        .map(|&(s, w)| w * bump(s * s) * sphere_in_ball(dim, r, s))
        .sum()
}

impl CutoffProfile {
    pub fn new(dim: usize) -> Result<&'static CutoffProfile> {
        check_dim(dim)?;
        static CACHE: [OnceLock<CutoffProfile>; MAX_DIM] =
            [OnceLock::new(), OnceLock::new(), OnceLock::new()];
        Ok(CACHE[dim - 1].get_or_init(|| CutoffProfile::build(dim)))
    }

    fn build(dim: usize) -> CutoffProfile {
        use rayon::prelude::*;
        let nodes = |r: f64| {
            let mut v = Vec::new();
            let kink = if r > 1.0 { (2.0 - r).abs().min(1.0) } else { 1.0 };
            gl_nodes(0.0, kink, 200, &mut v);
            gl_nodes(kink, 1.0, 200, &mut v);
            v
        };
        let mass = profile_value(dim, 0.0, &nodes);
        let step = PROFILE_RADIUS / (PROFILE_POINTS - 1) as f64;
        let table = (0..PROFILE_POINTS)
            .into_par_iter()
            .map(|i| {
                let r = i as f64 * step;
                if r <= 1.0 {
                    1.0
                } else {
                    snap_unit(profile_value(dim, r, &nodes) / mass)
                }
            })
            .collect();
        CutoffProfile { dim, table }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `η` at distance `r` from the origin.
    pub fn value(&self, r: f64) -> f64 {
        if r >= PROFILE_RADIUS {
            return 0.0;
        }
        let u = r.max(0.0) / PROFILE_RADIUS * (PROFILE_POINTS - 1) as f64;
        let i = (u.floor() as usize).min(PROFILE_POINTS - 2);
        let t = u - i as f64;
        self.table[i] * (1.0 - t) + self.table[i + 1] * t
    }
}

/// `x ↦ η(γ(x − c))` sampled at the centers of a lattice of the given
/// spacing, covering its support `|x − c| < 3/γ`.
pub fn dilated_cutoff(dim: usize, gamma: f64, center: &[f64], spacing: f64) -> Result<GridFunction> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return param(format!("gamma = {gamma} must be positive"));
    }
    if center.len() != dim {
        return param("center has the wrong dimension");
    }
    let profile = CutoffProfile::new(dim)?;
    let half = (PROFILE_RADIUS / gamma / spacing).ceil() as usize + 1;
    let (mut origin, extents) = centred(dim, half, spacing);
    for a in 0..dim {
        origin[a] += center[a];
    }
    GridFunction::from_fn(dim, &origin, spacing, &extents, |x| {
        let r2: f64 = (0..dim).map(|a| (x[a] - center[a]).powi(2)).sum();
        profile.value(gamma * r2.sqrt())
    })
}

/// `f_ε = max(f − ε, 0)/(1 − ε)`.
pub fn truncate(f: &GridFunction, eps: f64) -> Result<GridFunction> {
    if !(eps > 0.0 && eps < 1.0) {
        return param(format!("eps = {eps} outside (0, 1)"));
    }
    Ok(f.map(|v| (v - eps).max(0.0) / (1.0 - eps)))
}

/// `f_τ = χ_{K_τ} ∗ φ_τ` with `K_τ` the cells within `2τ` of `K`.
pub fn admissible_from_set(k: &DiscreteSet, tau: f64) -> Result<GridFunction> {
    if k.is_empty() {
        return param("admissible function of the empty set");
    }
    let h = k.spacing();
    let kernel = standard_mollifier(k.dim(), tau, h)?;
    let grown = k.dilate(2.0 * tau);
    Ok(grown.indicator(0)?.convolve(&kernel)?.map(snap_unit))
}

/// `f_a = 1` on `[−a, a]`, `(a/x)²` beyond, cut off at `|x| = R = 100a`.
pub fn example_fa(a: f64, spacing: f64) -> Result<GridFunction> {
    if !(a > 0.0 && a.is_finite()) {
        return param(format!("a = {a} must be positive"));
    }
    let big_r = fa_cut_radius(a);
    let half = (big_r / spacing).ceil() as usize;
    GridFunction::from_fn(1, &[-(half as f64) * spacing], spacing, &[2 * half], |x| {
        let t = x[0].abs();
        if t <= a {
            1.0
        } else if t <= big_r {
            (a / t).powi(2)
        } else {
            0.0
        }
    })
}

pub fn fa_cut_radius(a: f64) -> f64 {
    100.0 * a
}

/// `L¹` mass of `f_a` dropped beyond the cut: `2a²/R`.
pub fn fa_tail_l1(a: f64) -> f64 {
    2.0 * a * a / fa_cut_radius(a)
}

/// `f_ν = Σ_{k=0}^{2ν} (−1)^k χ_{[k, k+1)}`; `1/spacing` must be an integer.
pub fn example_oscillating(nu: usize, spacing: f64) -> Result<GridFunction> {
    if nu == 0 {
        return param("nu must be ≥ 1");
    }
    let per = 1.0 / spacing;
    if !(spacing > 0.0) || (per - per.round()).abs() > 1e-9 * per {
        return param(format!("spacing {spacing} does not divide 1"));
    }
    let per = per.round() as usize;
    let count = (2 * nu + 1) * per;
    let samples = (0..count)
        .map(|i| if (i / per) % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    GridFunction::new(1, &[0.0], spacing, &[count], samples)
}

/// Exponent `σ = (n − 1)/(2n)` of the logarithmic example.
pub fn log_sigma(dim: usize) -> f64 {
    (dim as f64 - 1.0) / (2.0 * dim as f64)
}

/// Radial profile of the logarithmic example: `|ln r|^σ` for
/// `r0 ≤ r ≤ 1/e`, constant below `r0`, linear from 1 down to 0 on
/// `[1/e, 1]`.
pub fn log_profile(dim: usize, r: f64, r0: f64) -> f64 {
    let inv_e = (-1.0f64).exp();
    if r >= 1.0 {
        0.0
    } else if r >= inv_e {
        (1.0 - r) / (1.0 - inv_e)
    } else {
        (-r.max(r0).ln()).powf(log_sigma(dim))
    }
}

/// The unbounded example `f₀ ~ |ln|x||^σ` near 0 on the centred lattice
/// over `[−1, 1]^n`, with inner cap `r0 = spacing`.
pub fn example_log(dim: usize, spacing: f64) -> Result<GridFunction> {
    check_dim(dim)?;
    if dim == 1 {
        return param("the logarithmic example needs n ≥ 2");
    }
    let half = (1.0 / spacing).ceil() as usize;
    let (origin, extents) = centred(dim, half, spacing);
    GridFunction::from_fn(dim, &origin, spacing, &extents, |x| {
        log_profile(dim, x.iter().map(|v| v * v).sum::<f64>().sqrt(), spacing)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // ∫ exp(1/(|x|²−1)) over the unit ball, by high-order quadrature.
    const UNIT_MASS: [f64; 3] = [
        0.443_993_816_168_079_4,
        0.466_512_393_178_330_07,
        0.441_088_887_276_604_4,
    ];

    #[test]
    fn mollifier_has_unit_mass_and_compact_support() {
        let k = standard_mollifier(1, 0.5, 0.01).unwrap();
        assert!((k.integral() - 1.0).abs() < 1e-12);
        assert_eq!(k.value_at(&[0.6]), 0.0);
        assert!(k.min_value() >= 0.0);
        assert!(matches!(standard_mollifier(1, 0.02, 0.01), Err(Error::Resolution(_))));
    }

    #[test]
    fn normalization_matches_quadrature() {
        let s = mollifier_spec(1, 1.0, 1e-4).unwrap();
        assert!((1.0 / s.normalization - UNIT_MASS[0]).abs() < 1e-9);
        let s = mollifier_spec(2, 1.0, 2e-3).unwrap();
        assert!((1.0 / s.normalization - UNIT_MASS[1]).abs() < 1e-6);
    }

    #[test]
    fn cutoff_shape() {
        let eta = cutoff(1, 0.01).unwrap();
        assert_eq!(eta.value_at(&[0.0]), 1.0);
        assert_eq!(eta.value_at(&[0.97]), 1.0);
        assert_eq!(eta.value_at(&[4.0]), 0.0);
        assert!(eta.value_at(&[3.0 + 0.01]) == 0.0);
        assert!((eta.integral() - 4.0).abs() < 0.04);
        assert!(eta.min_value() >= 0.0 && eta.max_value() <= 1.0);
    }

    #[test]
    fn profile_agrees_with_discrete_cutoff() {
        for dim in 1..=2 {
            let h = if dim == 1 { 0.005 } else { 0.04 };
            let eta = cutoff(dim, h).unwrap();
            let prof = CutoffProfile::new(dim).unwrap();
            for r in [0.5, 1.5, 2.0, 2.5, 2.9] {
                let mut x = vec![0.0; dim];
                x[0] = r;
                assert!((eta.value_at(&x) - prof.value(r)).abs() < 0.03, "dim {dim} r {r}");
            }
        }
        let p3 = CutoffProfile::new(3).unwrap();
        assert_eq!(p3.value(1.0), 1.0);
        assert_eq!(p3.value(3.0), 0.0);
        assert!(p3.value(2.0) > 0.3 && p3.value(2.0) < 0.7);
    }

    #[test]
    fn truncation() {
        let f = GridFunction::new(1, &[0.0], 0.1, &[4], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(truncate(&f, 0.5).unwrap(), f);
        let c = GridFunction::new(1, &[0.0], 0.1, &[3], vec![0.3; 3]).unwrap();
        assert!(truncate(&c, 0.5).unwrap().is_zero());
        assert!(truncate(&c, 1.0).is_err());
    }

    #[test]
    fn admissible_function_of_interval() {
        let k = DiscreteSet::box_set(&[0.0], &[1.0], 0.01).unwrap();
        let f = admissible_from_set(&k, 0.1).unwrap();
        assert_eq!(f.value_at(&[0.5]), 1.0);
        assert_eq!(f.value_at(&[-0.05]), 1.0);
        assert_eq!(f.value_at(&[-0.31]), 0.0);
        assert_eq!(f.value_at(&[1.31]), 0.0);
        assert!(f.min_value() >= 0.0 && f.max_value() <= 1.0);
    }

    #[test]
    fn fa_example() {
        let f = example_fa(1.0, 0.01).unwrap();
        assert_eq!(f.value_at(&[0.0]), 1.0);
        let d = f.partial_derivative(1).unwrap().lp_norm(1.0).unwrap();
        assert!((d - 2.0).abs() < 0.02);
        let m = f.lp_norm(1.0).unwrap() + fa_tail_l1(1.0);
        assert!((m - 4.0).abs() < 0.04);
    }

    #[test]
    fn oscillating_example() {
        let f = example_oscillating(1, 0.1).unwrap();
        assert!((f.lp_norm(1.0).unwrap() - 3.0).abs() < 1e-12);
        let f = example_oscillating(2, 0.25).unwrap();
        // 2^{p+1}ν = 8 from the inner intervals, plus 1 at each end
        let d = f.difference_norm(1, 4, 1.0).unwrap();
        assert!(d >= 8.0);
        assert!((d - 10.0).abs() < 1e-12);
        assert!(example_oscillating(0, 0.1).is_err());
        assert!(example_oscillating(1, 0.3).is_err());
    }

    #[test]
    fn log_example() {
        assert_eq!(log_profile(2, 1.0, 0.01), 0.0);
        assert!((log_profile(2, (-1.0f64).exp(), 0.01) - 1.0).abs() < 1e-12);
        assert!(example_log(1, 0.1).is_err());
        let f = example_log(2, 0.02).unwrap();
        assert!(f.samples().iter().all(|v| v.is_finite()));
    }
}

//! Cell-constant functions on a uniform box lattice in R^n, n ≤ 3.
//!
//! A [`GridFunction`] stores one sample per cell; the function is the
//! step function taking that value on the half-open cell
//! `[o + i·h, o + (i+1)·h)` and is zero outside the box. Every integral
//! below is exact for such step functions, and shifts by whole cells are
//! exact isometries of every `L^p` norm.
//!
//! Axes are numbered `1..=n` throughout the crate, matching the
//! coordinate index `k` of the partial derivative `D_k`.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{param, Error, Result};

pub const MAX_DIM: usize = 3;

/// Tolerance, in units of the spacing, for deciding that two origins sit
/// on the same lattice.
const ALIGN_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    dim: usize,
    origin: [f64; MAX_DIM],
    spacing: f64,
    extents: [usize; MAX_DIM],
    samples: Vec<f64>,
}

/// Exponent bundle `(n, p, q, α)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Exponents {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
}

impl Exponents {
    pub fn new(n: usize, p: f64, q: f64, alpha: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&n) {
            return param(format!("dimension n = {n} outside 1..=3"));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return param(format!("p = {p} must be a finite value ≥ 1"));
        }
        if !(q >= 1.0) {
            return param(format!("q = {q} must be ≥ 1"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return param(format!("alpha = {alpha} outside (0, 1)"));
        }
        Ok(Exponents { n, p, q, alpha })
    }

    /// Sobolev exponent `np/(n−p)`, defined for `p < n`.
    pub fn p_star(&self) -> Option<f64> {
        let n = self.n as f64;
        (self.p < n).then(|| n * self.p / (n - self.p))
    }

    /// Besov embedding exponent `np/(n−αp)`, defined for `αp < n`.
    pub fn p_alpha(&self) -> Option<f64> {
        let n = self.n as f64;
        (self.alpha * self.p < n).then(|| n * self.p / (n - self.alpha * self.p))
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Exponents::new(self.n, self.p, self.q, alpha)
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(format!("dim = {dim}, expected 1..=3")))
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        param(format!("p = {p} must be a finite value ≥ 1"))
    }
}

#[inline]
pub(crate) fn pow_abs(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x.abs()
    } else if p == 2.0 {
        x * x
    } else {
        x.abs().powf(p)
    }
}

impl GridFunction {
    pub fn new(
        dim: usize,
        origin: &[f64],
        spacing: f64,
        extents: &[usize],
        samples: Vec<f64>,
    ) -> Result<Self> {
        check_dim(dim)?;
        if origin.len() != dim || extents.len() != dim {
            return param(format!(
                "origin/extents must have {dim} entries, got {}/{}",
                origin.len(),
                extents.len()
            ));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return param(format!("spacing = {spacing} must be positive"));
        }
        if extents.iter().any(|&e| e == 0) {
            return param("every extent must be ≥ 1");
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return param("origin must be finite");
        }
        let count: usize = extents.iter().product();
        if samples.len() != count {
            return param(format!("expected {count} samples, got {}", samples.len()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return param("samples must be finite");
        }
        let mut o = [0.0; MAX_DIM];
        let mut e = [1; MAX_DIM];
        o[..dim].copy_from_slice(origin);
        e[..dim].copy_from_slice(extents);
        Ok(GridFunction { dim, origin: o, spacing, extents: e, samples })
    }

    pub fn zeros(dim: usize, origin: &[f64], spacing: f64, extents: &[usize]) -> Result<Self> {
        let count = extents.iter().product();
        GridFunction::new(dim, origin, spacing, extents, vec![0.0; count])
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(
        dim: usize,
        origin: &[f64],
        spacing: f64,
        extents: &[usize],
        f: impl Fn(&[f64]) -> f64 + Sync,
    ) -> Result<Self> {
        let mut g = GridFunction::zeros(dim, origin, spacing, extents)?;
        let values: Vec<f64> = (0..g.samples.len())
            .into_par_iter()
            .map(|flat| {
                let idx = g.unflatten(flat);
                let x = g.cell_center(&idx);
                f(&x[..dim])
            })
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return param("sampled function produced a non-finite value");
        }
        g.samples = values;
        Ok(g)
    }

    /// Indicator of the box `[lo, hi]` (cells whose center lies inside),
    /// on the lattice through the origin with the given spacing, padded by
    /// `pad` empty cells on every side.
    pub fn indicator_box(lo: &[f64], hi: &[f64], spacing: f64, pad: usize) -> Result<Self> {
        let dim = lo.len();
        if hi.len() != dim {
            return param("box corners differ in dimension");
        }
        let mut origin = vec![0.0; dim];
        let mut extents = vec![0usize; dim];
        for a in 0..dim {
            if hi[a] <= lo[a] {
                return param("empty box");
            }
            let i0 = (lo[a] / spacing).floor() as i64 - pad as i64;
            let i1 = (hi[a] / spacing).ceil() as i64 + pad as i64;
            origin[a] = i0 as f64 * spacing;
            extents[a] = (i1 - i0) as usize;
        }
        GridFunction::from_fn(dim, &origin, spacing, &extents, |x| {
            let inside = (0..dim).all(|a| x[a] >= lo[a] && x[a] <= hi[a]);
            if inside {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents[..self.dim]
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Volume `h^n` of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|&v| v == 0.0)
    }

    pub fn min_value(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn strides(&self) -> [usize; MAX_DIM] {
        let e = self.extents;
        [e[1] * e[2], e[2], 1]
    }

    pub(crate) fn unflatten(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for a in (0..MAX_DIM).rev() {
            idx[a] = flat % self.extents[a];
            flat /= self.extents[a];
        }
        idx
    }

    pub(crate) fn flatten(&self, idx: &[usize; MAX_DIM]) -> usize {
        (idx[0] * self.extents[1] + idx[1]) * self.extents[2] + idx[2]
    }

    pub fn cell_center(&self, idx: &[usize; MAX_DIM]) -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim {
            x[a] = self.origin[a] + (idx[a] as f64 + 0.5) * self.spacing;
        }
        x
    }

    /// Value of the step function at the point `x`.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        let mut idx = [0usize; MAX_DIM];
        for a in 0..self.dim {
            let c = ((x[a] - self.origin[a]) / self.spacing).floor();
            if c < 0.0 || c >= self.extents[a] as f64 {
                return 0.0;
            }
            idx[a] = c as usize;
        }
        self.samples[self.flatten(&idx)]
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        let mut full = [0usize; MAX_DIM];
        full[..self.dim].copy_from_slice(idx);
        self.samples[self.flatten(&full)]
    }

    /// Integer cell offset of `other`'s origin relative to ours, if the two
    /// share spacing and lattice.
    pub fn lattice_offset(&self, other: &GridFunction) -> Option<[i64; MAX_DIM]> {
        if self.dim != other.dim {
            return None;
        }
        if ((self.spacing - other.spacing) / self.spacing).abs() > 1e-12 {
            return None;
        }
        let mut off = [0i64; MAX_DIM];
        for a in 0..self.dim {
            let d = (other.origin[a] - self.origin[a]) / self.spacing;
            let r = d.round();
            if (d - r).abs() > ALIGN_TOL {
                return None;
            }
            off[a] = r as i64;
        }
        Some(off)
    }

    /// Applies `op` to a function on itself and on `other`, over the union
    /// of the two boxes. Both must live on the same lattice.
    pub fn zip_with(
        &self,
        other: &GridFunction,
        op: impl Fn(f64, f64) -> f64,
    ) -> Result<GridFunction> {
        let off = self.lattice_offset(other).ok_or_else(|| {
            Error::Parameter("functions are not on a common lattice".into())
        })?;
        let mut lo = [0i64; MAX_DIM];
        let mut hi = [1i64; MAX_DIM];
        for a in 0..self.dim {
            lo[a] = off[a].min(0);
            hi[a] = (self.extents[a] as i64).max(off[a] + other.extents[a] as i64);
        }
        let mut origin = vec![0.0; self.dim];
        let mut extents = vec![0usize; self.dim];
        for a in 0..self.dim {
            origin[a] = self.origin[a] + lo[a] as f64 * self.spacing;
            extents[a] = (hi[a] - lo[a]) as usize;
        }
        let mut out = GridFunction::zeros(self.dim, &origin, self.spacing, &extents)?;
        for flat in 0..out.samples.len() {
            let idx = out.unflatten(flat);
            let mut a_idx = [0i64; MAX_DIM];
            let mut b_idx = [0i64; MAX_DIM];
            for ax in 0..MAX_DIM {
                let g = idx[ax] as i64 + if ax < self.dim { lo[ax] } else { 0 };
                a_idx[ax] = g;
                b_idx[ax] = g - if ax < self.dim { off[ax] } else { 0 };
            }
            let va = self.sample_signed(&a_idx);
            let vb = other.sample_signed(&b_idx);
            out.samples[flat] = op(va, vb);
        }
        Ok(out)
    }

    fn sample_signed(&self, idx: &[i64; MAX_DIM]) -> f64 {
        let mut u = [0usize; MAX_DIM];
        for a in 0..MAX_DIM {
            if idx[a] < 0 || idx[a] >= self.extents[a] as i64 {
                return 0.0;
            }
            u[a] = idx[a] as usize;
        }
        self.samples[self.flatten(&u)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        let mut out = self.clone();
        for v in &mut out.samples {
            *v = f(*v);
        }
        out
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    /// `(Σ |sample|^p · h^n)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_p(p)?;
        let s: f64 = self.samples.iter().map(|&v| pow_abs(v, p)).sum();
        Ok((s * self.cell_volume()).powf(1.0 / p))
    }

    /// `∫ f` over R^n.
    pub fn integral(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.cell_volume()
    }

    fn check_axis(&self, axis: usize) -> Result<usize> {
        if axis == 0 || axis > self.dim {
            param(format!("axis {axis} outside 1..={}", self.dim))
        } else {
            Ok(axis - 1)
        }
    }

    /// The function `x ↦ f(x + cells·h·e_axis)`. Only the origin moves, so no
    /// mass leaves the box.
    pub fn translate(&self, axis: usize, cells: i64) -> Result<GridFunction> {
        let a = self.check_axis(axis)?;
        let mut out = self.clone();
        out.origin[a] -= cells as f64 * self.spacing;
        Ok(out)
    }

    /// `‖f(· + m·h·e_axis) − f‖_p` for `m = shift_cells ≥ 0`.
    pub fn difference_norm(&self, axis: usize, shift_cells: usize, p: f64) -> Result<f64> {
        check_p(p)?;
        let a = self.check_axis(axis)?;
        Ok(self.difference_power_sum(a, shift_cells, p).powf(1.0 / p))
    }

    /// `∫ |f(x + m h e_a) − f(x)|^p dx` with a zero-based axis.
    pub(crate) fn difference_power_sum(&self, a: usize, m: usize, p: f64) -> f64 {
        let n_a = self.extents[a];
        let stride = self.strides()[a];
        let lines = self.samples.len() / n_a;
        let mut total = 0.0;
        // Lines are enumerated by the flat index of their first cell.
        for line in 0..lines {
            let outer = line / stride;
            let inner = line % stride;
            let base = outer * stride * n_a + inner;
            let at = |i: usize| self.samples[base + i * stride];
            let mut s = 0.0;
            if m >= n_a {
                for i in 0..n_a {
                    s += pow_abs(at(i), p);
                }
                s *= 2.0;
            } else {
                // i in [-m, 0): only the shifted copy is inside
                for i in 0..m {
                    s += pow_abs(at(i), p);
                }
                for i in 0..n_a - m {
                    s += pow_abs(at(i + m) - at(i), p);
                }
                // i in [n_a - m, n_a): only the original is inside
                for i in n_a - m..n_a {
                    s += pow_abs(at(i), p);
                }
            }
            total += s;
        }
        total * self.cell_volume()
    }

    /// Forward difference `(f(x + h e_axis) − f(x)) / h`, on a box grown by
    /// one cell at the low end of the axis.
    pub fn partial_derivative(&self, axis: usize) -> Result<GridFunction> {
        let a = self.check_axis(axis)?;
        let mut extents = self.extents;
        extents[a] += 1;
        let mut origin = self.origin;
        origin[a] -= self.spacing;
        let mut out = GridFunction {
            dim: self.dim,
            origin,
            spacing: self.spacing,
            extents,
            samples: vec![0.0; extents.iter().product()],
        };
        let h = self.spacing;
        for flat in 0..out.samples.len() {
            let idx = out.unflatten(flat);
            let mut here = [0i64; MAX_DIM];
            for ax in 0..MAX_DIM {
                here[ax] = idx[ax] as i64;
            }
            here[a] -= 1;
            let mut next = here;
            next[a] += 1;
            out.samples[flat] = (self.sample_signed(&next) - self.sample_signed(&here)) / h;
        }
        Ok(out)
    }

    /// Discrete convolution `h^n Σ_j f_j g_{k−j}`.
    ///
    /// Sample `k` equals the exact convolution of the two step functions at
    /// the lattice point `o_f + o_g + (k+1)h`, so the result's origin is
    /// `o_f + o_g + h/2` on every axis and each sample sits at its cell
    /// center. A kernel with odd extents centred on 0 keeps the result on
    /// the lattice of `f`.
    pub fn convolve(&self, g: &GridFunction) -> Result<GridFunction> {
        if self.dim != g.dim {
            return param("convolution operands differ in dimension");
        }
        if ((self.spacing - g.spacing) / self.spacing).abs() > 1e-12 {
            return param(format!(
                "convolution needs equal spacing, got {} and {}",
                self.spacing, g.spacing
            ));
        }
        let dim = self.dim;
        let h = self.spacing;
        let mut extents = [1usize; MAX_DIM];
        let mut origin = [0.0; MAX_DIM];
        for a in 0..dim {
            extents[a] = self.extents[a] + g.extents[a] - 1;
            origin[a] = self.origin[a] + g.origin[a] + 0.5 * h;
        }
        // Gather over the operand with fewer nonzero cells.
        let (small, big) = if self.nonzero_count() <= g.nonzero_count() {
            (self, g)
        } else {
            (g, self)
        };
        let taps: Vec<([i64; MAX_DIM], f64)> = small
            .samples
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(flat, &v)| {
                let idx = small.unflatten(flat);
                ([idx[0] as i64, idx[1] as i64, idx[2] as i64], v)
            })
            .collect();
        let mut out = GridFunction {
            dim,
            origin,
            spacing: h,
            extents,
            samples: vec![0.0; extents.iter().product()],
        };
        let vol = self.cell_volume();
        let slab = extents[1] * extents[2];
        out.samples
            .par_chunks_mut(slab)
            .enumerate()
            .for_each(|(i0, chunk)| {
                for (rest, slot) in chunk.iter_mut().enumerate() {
                    let k = [i0 as i64, (rest / extents[2]) as i64, (rest % extents[2]) as i64];
                    let mut acc = 0.0;
                    for (j, v) in &taps {
                        let src = [k[0] - j[0], k[1] - j[1], k[2] - j[2]];
                        let b = big.sample_signed(&src);
                        if b != 0.0 {
                            acc += v * b;
                        }
                    }
                    *slot = acc * vol;
                }
            });
        Ok(out)
    }

    pub fn nonzero_count(&self) -> usize {
        self.samples.iter().filter(|&&v| v != 0.0).count()
    }

    /// Inclusive index range `[first, last]` of nonzero cells along a
    /// zero-based axis, or `None` for the zero function.
    pub(crate) fn support_range(&self, a: usize) -> Option<(usize, usize)> {
        let stride = self.strides()[a];
        let n_a = self.extents[a];
        let mut first = usize::MAX;
        let mut last = 0usize;
        for (flat, &v) in self.samples.iter().enumerate() {
            if v != 0.0 {
                let i = (flat / stride) % n_a;
                first = first.min(i);
                last = last.max(i);
            }
        }
        (first != usize::MAX).then_some((first, last))
    }

    /// Number of cells spanned by the support along `axis`; shifting by at
    /// least this many cells makes `f` and its translate disjoint.
    pub fn support_cells(&self, axis: usize) -> Result<usize> {
        let a = self.check_axis(axis)?;
        Ok(self.support_range(a).map_or(0, |(f, l)| l - f + 1))
    }

    /// Shrinks the box to the bounding box of the nonzero cells (one cell
    /// is kept for the zero function).
    pub fn trimmed(&self) -> GridFunction {
        let mut lo = [0usize; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        for a in 0..MAX_DIM {
            match self.support_range(a) {
                Some((f, l)) => {
                    lo[a] = f;
                    hi[a] = l + 1;
                }
                None => {
                    lo[a] = 0;
                    hi[a] = 1;
                }
            }
        }
        let mut extents = [1usize; MAX_DIM];
        let mut origin = self.origin;
        for a in 0..self.dim {
            extents[a] = hi[a] - lo[a];
            origin[a] += lo[a] as f64 * self.spacing;
        }
        let mut samples = Vec::with_capacity(extents.iter().product());
        for i0 in lo[0]..hi[0] {
            for i1 in lo[1]..hi[1] {
                for i2 in lo[2]..hi[2] {
                    samples.push(self.samples[self.flatten(&[i0, i1, i2])]);
                }
            }
        }
        GridFunction { dim: self.dim, origin, spacing: self.spacing, extents, samples }
    }

    /// Same samples on a lattice whose spacing and origin are divided by
    /// `lambda`, i.e. the exact dilation `x ↦ f(λx)`.
    pub fn rescaled(&self, lambda: f64) -> Result<GridFunction> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return param(format!("dilation factor {lambda} must be positive"));
        }
        let mut out = self.clone();
        out.spacing /= lambda;
        for a in 0..self.dim {
            out.origin[a] /= lambda;
        }
        Ok(out)
    }

    /// Text serialization: a header followed by the samples in row-major
    /// order, 17 significant digits each.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim {}", self.dim);
        let _ = writeln!(s, "origin {}", join_f64(&self.origin[..self.dim]));
        let _ = writeln!(s, "spacing {}", fmt_f64(self.spacing));
        let ext: Vec<String> = self.extents[..self.dim].iter().map(|e| e.to_string()).collect();
        let _ = writeln!(s, "extents {}", ext.join(" "));
        let row = self.extents[self.dim - 1];
        for chunk in self.samples.chunks(row) {
            let _ = writeln!(s, "{}", join_f64(chunk));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<GridFunction> {
        let mut dim = None;
        let mut origin = None;
        let mut spacing = None;
        let mut extents = None;
        let mut samples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut words = line.split_whitespace();
            let head = words.next().unwrap_or_default();
            let perr = |what: &str| Error::Parse(format!("line {}: bad {what}", lineno + 1));
            match head {
                "dim" => {
                    dim = Some(
                        words.next().and_then(|w| w.parse::<usize>().ok()).ok_or_else(|| perr("dim"))?,
                    )
                }
                "origin" => {
                    origin = Some(
                        words.map(|w| w.parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|_| perr("origin"))?,
                    )
                }
                "spacing" => {
                    spacing = Some(
                        words.next().and_then(|w| w.parse::<f64>().ok()).ok_or_else(|| perr("spacing"))?,
                    )
                }
                "extents" => {
                    extents = Some(
                        words.map(|w| w.parse::<usize>()).collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|_| perr("extents"))?,
                    )
                }
                _ => {
                    for w in line.split_whitespace() {
                        samples.push(w.parse::<f64>().map_err(|_| perr("sample"))?);
                    }
                }
            }
        }
        let missing = |k: &str| Error::Parse(format!("missing header field `{k}`"));
        let dim = dim.ok_or_else(|| missing("dim"))?;
        let origin = origin.ok_or_else(|| missing("origin"))?;
        let spacing = spacing.ok_or_else(|| missing("spacing"))?;
        let extents = extents.ok_or_else(|| missing("extents"))?;
        GridFunction::new(dim, &origin, spacing, &extents, samples)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<GridFunction> {
        GridFunction::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// `f64` with 17 significant digits; parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn join_f64(vs: &[f64]) -> String {
    vs.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_indicator(h: f64) -> GridFunction {
        let n = (1.0 / h).round() as usize;
        GridFunction::new(1, &[0.0], h, &[n], vec![1.0; n]).unwrap()
    }

    fn hat(h: f64) -> GridFunction {
        GridFunction::from_fn(1, &[0.0], h, &[(1.0 / h).round() as usize], |x| {
            1.0 - (2.0 * x[0] - 1.0).abs()
        })
        .unwrap()
    }

    #[test]
    fn lp_norm_examples() {
        assert!((unit_indicator(0.01).lp_norm(2.0).unwrap() - 1.0).abs() < 1e-12);
        let z = GridFunction::zeros(2, &[0.0, 0.0], 0.1, &[3, 4]).unwrap();
        assert_eq!(z.lp_norm(3.0).unwrap(), 0.0);
        // midpoint sampling integrates the hat exactly
        assert!((hat(0.01).lp_norm(1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(z.lp_norm(0.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn translate_examples() {
        let f = unit_indicator(0.01);
        assert_eq!(f.translate(1, 0).unwrap(), f);
        let g = f.translate(1, 100).unwrap();
        assert!((g.origin()[0] + 1.0).abs() < 1e-12);
        assert_eq!(g.value_at(&[-0.5]), 1.0);
        assert_eq!(g.value_at(&[0.5]), 0.0);
        assert_eq!(g.lp_norm(1.5).unwrap(), f.lp_norm(1.5).unwrap());
        assert!(f.translate(2, 1).is_err());
    }

    #[test]
    fn difference_norm_examples() {
        let f = unit_indicator(0.01);
        assert!((f.difference_norm(1, 25, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(f.difference_norm(1, 0, 1.0).unwrap(), 0.0);
        assert!((f.difference_norm(1, 200, 1.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn difference_norm_matches_translate_and_subtract() {
        let f = GridFunction::from_fn(2, &[0.0, 0.0], 0.1, &[7, 5], |x| {
            (3.0 * x[0]).sin() - x[1]
        })
        .unwrap();
        for m in [0usize, 1, 3, 6, 9] {
            for axis in 1..=2 {
                let t = f.translate(axis, m as i64).unwrap();
                let d = t.zip_with(&f, |a, b| a - b).unwrap();
                let direct = f.difference_norm(axis, m, 1.5).unwrap();
                assert!((d.lp_norm(1.5).unwrap() - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_derivative_examples() {
        let f = hat(0.001);
        let d = f.partial_derivative(1).unwrap();
        assert!((d.lp_norm(1.0).unwrap() - 2.0 * f.max_value()).abs() < 1e-9);
        assert!((d.lp_norm(1.0).unwrap() - 2.0).abs() < 1e-2);
        let z = GridFunction::zeros(1, &[0.0], 0.1, &[4]).unwrap();
        assert!(z.partial_derivative(1).unwrap().is_zero());
        let ramp = GridFunction::from_fn(1, &[0.0], 0.01, &[100], |x| x[0]).unwrap();
        let d = ramp.partial_derivative(1).unwrap();
        for x in [0.1, 0.5, 0.9] {
            assert!((d.value_at(&[x]) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn convolve_tent_apex() {
        let f = unit_indicator(0.01);
        let c = f.convolve(&f).unwrap();
        // direct summation: the cell containing x = 1 collects 100 overlaps
        let direct: f64 = (0..100).map(|_| 0.01).sum();
        assert!((c.value_at(&[1.0]) - direct).abs() < 1e-12);
        assert!((c.value_at(&[1.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn convolve_with_spike_is_a_shift() {
        let f = hat(0.05);
        let spike = GridFunction::new(1, &[0.0], 0.05, &[1], vec![1.0 / 0.05]).unwrap();
        let c = f.convolve(&spike).unwrap();
        assert_eq!(c.len(), f.len());
        for (a, b) in c.samples().iter().zip(f.samples()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((c.origin()[0] - 0.025).abs() < 1e-12);
    }

    #[test]
    fn convolve_rejects_mismatched_spacing() {
        let f = unit_indicator(0.01);
        let g = unit_indicator(0.02);
        assert!(matches!(f.convolve(&g), Err(Error::Parameter(_))));
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let f = GridFunction::from_fn(2, &[-0.3, 0.1], 0.07, &[5, 3], |x| {
            (x[0] * 7.1).exp() / 3.0 + x[1]
        })
        .unwrap();
        let back = GridFunction::from_text(&f.to_text()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn exponents_derived_values() {
        let e = Exponents::new(2, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(e.p_star(), Some(2.0));
        assert!((e.p_alpha().unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(Exponents::new(2, 3.0, 1.0, 0.5).unwrap().p_star().is_none());
        assert!(Exponents::new(2, 1.0, 1.0, 1.5).is_err());
    }
}

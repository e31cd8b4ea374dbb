//! Uniform cubic B-spline interpolation on cell-centered grids.
//!
//! Coefficients are obtained by exact prefiltering along each axis, either with
//! periodic closure or with not-a-knot closure (two extra coefficients per
//! axis, stored with an offset of one).

use rayon::prelude::*;

/// Pole of the cubic B-spline interpolation filter, `sqrt(3) - 2`.
const POLE: f64 = -0.267_949_192_431_122_7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    Periodic,
    NotAKnot,
}

/// How taps that fall outside the coefficient range are treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extension {
    /// Indices wrap around (periodic closure only).
    Wrap,
    /// Out-of-range taps contribute nothing.
    Zero,
}

#[derive(Clone, Copy, Debug)]
pub struct SplineAxis {
    pub n: usize,
    /// Coordinate of the first sample.
    pub origin: f64,
    pub h: f64,
    pub closure: Closure,
    pub extension: Extension,
}

impl SplineAxis {
    pub fn periodic(n: usize, origin: f64, h: f64) -> Self {
        Self {
            n,
            origin,
            h,
            closure: Closure::Periodic,
            extension: Extension::Wrap,
        }
    }

    pub fn not_a_knot(n: usize, origin: f64, h: f64) -> Self {
        Self {
            n,
            origin,
            h,
            closure: Closure::NotAKnot,
            extension: Extension::Zero,
        }
    }

    pub fn with_extension(mut self, extension: Extension) -> Self {
        self.extension = extension;
        self
    }

    /// Number of stored coefficients along this axis.
    pub fn coeff_len(&self) -> usize {
        match self.closure {
            Closure::Periodic => self.n,
            Closure::NotAKnot => self.n + 2,
        }
    }

    fn offset(&self) -> isize {
        match self.closure {
            Closure::Periodic => 0,
            Closure::NotAKnot => 1,
        }
    }

    /// Weights and coefficient indices (`None` for a dropped tap) at the
    /// fractional sample position `s` (in units of `h`, relative to `origin`).
    #[inline]
    pub fn taps_at_index(&self, s: f64) -> ([f64; 4], [Option<usize>; 4]) {
        let base = s.floor();
        let w = weights(s - base);
        let base = base as isize;
        let len = self.coeff_len() as isize;
        let mut idx = [None; 4];
        for (k, slot) in idx.iter_mut().enumerate() {
            let raw = base - 1 + k as isize;
            *slot = match (self.closure, self.extension) {
                (Closure::Periodic, Extension::Wrap) => Some(raw.rem_euclid(len) as usize),
                _ => {
                    let j = raw + self.offset();
                    if (0..len).contains(&j) {
                        Some(j as usize)
                    } else {
                        None
                    }
                }
            };
        }
        (w, idx)
    }

    #[inline]
    pub fn taps(&self, x: f64) -> ([f64; 4], [Option<usize>; 4]) {
        self.taps_at_index((x - self.origin) / self.h)
    }
}

/// Cubic B-spline weights for taps `i-1, i, i+1, i+2` at fractional offset `f` in `[0,1)`.
#[inline]
pub fn weights(f: f64) -> [f64; 4] {
    let f2 = f * f;
    let f3 = f2 * f;
    let g = 1.0 - f;
    [
        g * g * g / 6.0,
        (3.0 * f3 - 6.0 * f2 + 4.0) / 6.0,
        (-3.0 * f3 + 3.0 * f2 + 3.0 * f + 1.0) / 6.0,
        f3 / 6.0,
    ]
}

/// In-place periodic prefilter: on return `line` holds coefficients `c` with
/// `(c[i-1] + 4 c[i] + c[i+1]) / 6 = f[i]` (indices modulo `n`).
pub fn prefilter_periodic(line: &mut [f64]) {
    let n = line.len();
    if n == 0 {
        return;
    }
    let terms = n.min(48);
    let zn = POLE.powi(n as i32);
    // causal pass
    let mut acc = 0.0;
    let mut zk = 1.0;
    for k in 0..terms {
        acc += zk * line[(n - k) % n];
        zk *= POLE;
    }
    let mut prev = acc / (1.0 - zn);
    let mut causal = vec![0.0; n];
    causal[0] = prev;
    for i in 1..n {
        prev = line[i] + POLE * prev;
        causal[i] = prev;
    }
    // anticausal pass
    let mut acc = 0.0;
    let mut zk = 1.0;
    for k in 0..terms {
        acc += zk * causal[(n - 1 + k) % n];
        zk *= POLE;
    }
    let mut next = acc / (1.0 - zn);
    line[n - 1] = -6.0 * POLE * next;
    for i in (0..n - 1).rev() {
        next = causal[i] + POLE * next;
        line[i] = -6.0 * POLE * next;
    }
}

/// Not-a-knot prefilter for lines of fixed length `n >= 6`.
///
/// Produces `n + 2` coefficients `c[-1..=n]` (stored from index 0).
#[derive(Clone, Debug)]
pub struct NotAKnotSolver {
    n: usize,
    // Thomas elimination factors for the (1,4,1) interior system.
    cprime: Vec<f64>,
    denom: Vec<f64>,
}

impl NotAKnotSolver {
    pub fn new(n: usize) -> Self {
        assert!(n >= 6, "not-a-knot closure needs at least 6 samples");
        let m = n - 4;
        let mut cprime = vec![0.0; m];
        let mut denom = vec![0.0; m];
        for i in 0..m {
            let d = if i == 0 { 4.0 } else { 4.0 - cprime[i - 1] };
            denom[i] = d;
            cprime[i] = 1.0 / d;
        }
        Self { n, cprime, denom }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, f: &[f64], c: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(f.len(), n);
        debug_assert_eq!(c.len(), n + 2);
        let at = |i: isize| (i + 1) as usize;
        let c1 = (8.0 * f[1] - f[0] - f[2]) / 6.0;
        let cn2 = (8.0 * f[n - 2] - f[n - 1] - f[n - 3]) / 6.0;
        // interior unknowns c[2..=n-3]
        let m = n - 4;
        let mut rhs = vec![0.0; m];
        for (k, r) in rhs.iter_mut().enumerate() {
            let i = k + 2;
            *r = 6.0 * f[i];
        }
        rhs[0] -= c1;
        rhs[m - 1] -= cn2;
        // forward sweep
        let mut dprime = vec![0.0; m];
        for k in 0..m {
            let prev = if k == 0 { 0.0 } else { dprime[k - 1] };
            dprime[k] = (rhs[k] - prev) / self.denom[k];
        }
        let mut x = vec![0.0; m];
        x[m - 1] = dprime[m - 1];
        for k in (0..m - 1).rev() {
            x[k] = dprime[k] - self.cprime[k] * x[k + 1];
        }
        c[at(1)] = c1;
        c[at(n as isize - 2)] = cn2;
        for k in 0..m {
            c[at(k as isize + 2)] = x[k];
        }
        c[at(0)] = 6.0 * f[1] - 4.0 * c1 - x[0];
        c[at(-1)] = 6.0 * f[0] - 4.0 * c[at(0)] - c1;
        c[at(n as isize - 1)] = 6.0 * f[n - 2] - 4.0 * cn2 - x[m - 1];
        c[at(n as isize)] = 6.0 * f[n - 1] - 4.0 * c[at(n as isize - 1)] - cn2;
    }
}

/// Prefilter a row-major array along the axes flagged in `closures`
/// (`None` leaves that axis untouched). Returns the coefficient array and its shape.
pub fn prefilter(values: &[f64], shape: &[usize], closures: &[Option<Closure>]) -> (Vec<f64>, Vec<usize>) {
    assert_eq!(shape.len(), closures.len());
    assert_eq!(values.len(), shape.iter().product::<usize>());
    let mut data = values.to_vec();
    let mut cur_shape = shape.to_vec();
    for axis in 0..shape.len() {
        let Some(closure) = closures[axis] else { continue };
        let n = cur_shape[axis];
        let out_n = match closure {
            Closure::Periodic => n,
            Closure::NotAKnot => n + 2,
        };
        let outer: usize = cur_shape[..axis].iter().product();
        let inner: usize = cur_shape[axis + 1..].iter().product();
        let mut out = vec![0.0; outer * out_n * inner];
        let solver = match closure {
            Closure::NotAKnot => Some(NotAKnotSolver::new(n)),
            Closure::Periodic => None,
        };
        out.par_chunks_mut(out_n * inner)
            .zip(data.par_chunks(n * inner))
            .for_each(|(dst, src)| {
                let mut line = vec![0.0; n];
                let mut coef = vec![0.0; out_n];
                for j in 0..inner {
                    for i in 0..n {
                        line[i] = src[i * inner + j];
                    }
                    match &solver {
                        None => {
                            prefilter_periodic(&mut line);
                            coef.copy_from_slice(&line);
                        }
                        Some(s) => s.solve(&line, &mut coef),
                    }
                    for i in 0..out_n {
                        dst[i * inner + j] = coef[i];
                    }
                }
            });
        data = out;
        cur_shape[axis] = out_n;
    }
    (data, cur_shape)
}

/// Tensor-product cubic spline over up to four axes.
#[derive(Clone, Debug)]
pub struct TensorSpline {
    axes: Vec<SplineAxis>,
    strides: Vec<usize>,
    coeffs: Vec<f64>,
}

impl TensorSpline {
    pub fn new(values: &[f64], axes: &[SplineAxis]) -> Self {
        assert!(!axes.is_empty() && axes.len() <= 4);
        let shape: Vec<usize> = axes.iter().map(|a| a.n).collect();
        let closures: Vec<Option<Closure>> = axes.iter().map(|a| Some(a.closure)).collect();
        let (coeffs, cshape) = prefilter(values, &shape, &closures);
        Self::from_coefficients(coeffs, &cshape, axes)
    }

    /// Wrap an already prefiltered coefficient array.
    pub fn from_coefficients(coeffs: Vec<f64>, cshape: &[usize], axes: &[SplineAxis]) -> Self {
        let mut strides = vec![1usize; axes.len()];
        for a in (0..axes.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * cshape[a + 1];
        }
        for (a, ax) in axes.iter().enumerate() {
            assert_eq!(ax.coeff_len(), cshape[a]);
        }
        Self {
            axes: axes.to_vec(),
            strides,
            coeffs,
        }
    }

    pub fn axes(&self) -> &[SplineAxis] {
        &self.axes
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Evaluate at physical coordinates (`x.len()` equals the number of axes).
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let dim = self.axes.len();
        let mut w = [[0.0f64; 4]; 4];
        let mut off = [[0usize; 4]; 4];
        for a in 0..dim {
            let (wa, ia) = self.axes[a].taps(x[a]);
            for k in 0..4 {
                match ia[k] {
                    Some(j) => {
                        w[a][k] = wa[k];
                        off[a][k] = j * self.strides[a];
                    }
                    None => {
                        w[a][k] = 0.0;
                        off[a][k] = 0;
                    }
                }
            }
        }
        gather(&self.coeffs, dim, &w, &off)
    }
}

/// Tensor contraction of per-axis tap weights against a flat coefficient array.
#[inline]
pub fn gather(c: &[f64], dim: usize, w: &[[f64; 4]; 4], off: &[[usize; 4]; 4]) -> f64 {
    match dim {
        1 => (0..4).map(|a| w[0][a] * c[off[0][a]]).sum(),
        2 => {
            let mut s = 0.0;
            for a in 0..4 {
                if w[0][a] == 0.0 {
                    continue;
                }
                let oa = off[0][a];
                let mut t = 0.0;
                for b in 0..4 {
                    t += w[1][b] * c[oa + off[1][b]];
                }
                s += w[0][a] * t;
            }
            s
        }
        3 => {
            let mut s = 0.0;
            for a in 0..4 {
                if w[0][a] == 0.0 {
                    continue;
                }
                let oa = off[0][a];
                let mut sb = 0.0;
                for b in 0..4 {
                    if w[1][b] == 0.0 {
                        continue;
                    }
                    let ob = oa + off[1][b];
                    let mut sc = 0.0;
                    for k in 0..4 {
                        sc += w[2][k] * c[ob + off[2][k]];
                    }
                    sb += w[1][b] * sc;
                }
                s += w[0][a] * sb;
            }
            s
        }
        4 => {
            let mut s = 0.0;
            for a in 0..4 {
                if w[0][a] == 0.0 {
                    continue;
                }
                let oa = off[0][a];
                let mut sb = 0.0;
                for b in 0..4 {
                    if w[1][b] == 0.0 {
                        continue;
                    }
                    let ob = oa + off[1][b];
                    let mut sc = 0.0;
                    for k in 0..4 {
                        if w[2][k] == 0.0 {
                            continue;
                        }
                        let ok = ob + off[2][k];
                        let mut sd = 0.0;
                        for l in 0..4 {
                            sd += w[3][l] * c[ok + off[3][l]];
                        }
                        sc += w[2][k] * sd;
                    }
                    sb += w[1][b] * sc;
                }
                s += w[0][a] * sb;
            }
            s
        }
        _ => unreachable!("tensor splines support at most four axes"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_prefilter_reproduces_samples() {
        for n in [8usize, 9, 64, 100] {
            let f: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() + 0.1 * i as f64 % 3.0).collect();
            let mut c = f.clone();
            prefilter_periodic(&mut c);
            for i in 0..n {
                let r = (c[(i + n - 1) % n] + 4.0 * c[i] + c[(i + 1) % n]) / 6.0;
                assert!((r - f[i]).abs() < 1e-13, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn not_a_knot_reproduces_cubics() {
        let n = 12;
        let h = 0.3;
        let origin = -1.1;
        let p = |x: f64| 0.5 - 1.2 * x + 0.7 * x * x - 0.25 * x * x * x;
        let f: Vec<f64> = (0..n).map(|i| p(origin + i as f64 * h)).collect();
        let spline = TensorSpline::new(&f, &[SplineAxis::not_a_knot(n, origin, h)]);
        for k in 0..200 {
            let x = origin + (n - 1) as f64 * h * k as f64 / 199.0;
            assert!((spline.eval(&[x]) - p(x)).abs() < 1e-11, "x={x}");
        }
    }

    #[test]
    fn periodic_tensor_interpolates_and_converges() {
        let err = |n: usize| {
            let l = 2.0 * std::f64::consts::PI;
            let h = l / n as f64;
            let f = |x: f64, y: f64| (x).sin() * (2.0 * y).cos();
            let mut vals = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    vals[i * n + j] = f(i as f64 * h, j as f64 * h);
                }
            }
            let ax = SplineAxis::periodic(n, 0.0, h);
            let s = TensorSpline::new(&vals, &[ax, ax]);
            assert!((s.eval(&[3.0 * h, 5.0 * h]) - vals[3 * n + 5]).abs() < 1e-13);
            let mut e: f64 = 0.0;
            for k in 0..50 {
                let x = 0.123 + k as f64 * 0.1;
                let y = 0.77 + k as f64 * 0.13;
                e = e.max((s.eval(&[x, y]) - f(x, y)).abs());
            }
            e
        };
        let ratio = err(32) / err(64);
        assert!(ratio > 12.0, "ratio {ratio}");
    }
}

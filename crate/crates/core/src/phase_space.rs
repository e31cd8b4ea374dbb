//! Phase-space grids and profiles, initial data, velocity integration and the
//! free-streaming frame change.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SvpError};
use crate::numerics::fft::{self, FftNd};
use crate::numerics::spline::{self, Closure};
use crate::numerics::sum;
use crate::screened_poisson::{FieldTag, SpatialField, SpatialGrid};

/// Density evaluation switches from the direct to the rescaled formula above this time.
pub const T_SWITCH: f64 = 1.0;
/// Width (in cells) of the velocity guard layer watched by [`pad_guard`].
pub const GUARD_CELLS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub d: usize,
    pub nx: usize,
    pub nv: usize,
    pub lx: f64,
    pub lv: f64,
}

impl PhaseGrid {
    pub fn new(d: usize, nx: usize, nv: usize, lx: f64, lv: f64) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(SvpError::Dimension(d));
        }
        for n in [nx, nv] {
            if !n.is_power_of_two() {
                return Err(SvpError::NonPowerOfTwo(n));
            }
            if n < 8 {
                return Err(SvpError::InvalidGrid(format!("axis length {n} below 8")));
            }
        }
        if !(lx > 0.0 && lx.is_finite() && lv > 0.0 && lv.is_finite()) {
            return Err(SvpError::InvalidGrid(format!("half-widths must be positive, got lx={lx}, lv={lv}")));
        }
        Ok(Self { d, nx, nv, lx, lv })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }

    pub fn dv(&self) -> f64 {
        2.0 * self.lv / self.nv as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.lx + (i as f64 + 0.5) * self.dx()
    }

    pub fn v(&self, j: usize) -> f64 {
        -self.lv + (j as f64 + 0.5) * self.dv()
    }

    /// Number of spatial cells, `nx^d`.
    pub fn n_space(&self) -> usize {
        self.nx.pow(self.d as u32)
    }

    /// Number of velocity cells, `nv^d`.
    pub fn n_vel(&self) -> usize {
        self.nv.pow(self.d as u32)
    }

    pub fn len(&self) -> usize {
        self.n_space() * self.n_vel()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Phase-space cell volume `dx^d dv^d`.
    pub fn cell_volume(&self) -> f64 {
        (self.dx() * self.dv()).powi(self.d as i32)
    }

    /// Full array shape: spatial axes first, then velocity axes.
    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.nx; self.d];
        s.extend(std::iter::repeat_n(self.nv, self.d));
        s
    }

    /// Spatial coordinates of flat spatial index `ix`.
    pub fn x_point(&self, ix: usize) -> [f64; 2] {
        match self.d {
            1 => [self.x(ix), 0.0],
            _ => [self.x(ix / self.nx), self.x(ix % self.nx)],
        }
    }

    /// Velocity coordinates of flat velocity index `iv`.
    pub fn v_point(&self, iv: usize) -> [f64; 2] {
        match self.d {
            1 => [self.v(iv), 0.0],
            _ => [self.v(iv / self.nv), self.v(iv % self.nv)],
        }
    }

    /// The base spatial grid (no growth).
    pub fn spatial(&self) -> SpatialGrid {
        SpatialGrid {
            d: self.d,
            n: self.nx,
            l: self.lx,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Physical,
    Filtered,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Frame::Physical => "physical",
            Frame::Filtered => "filtered",
        }
    }

    pub fn flag(self) -> u32 {
        match self {
            Frame::Physical => 0,
            Frame::Filtered => 1,
        }
    }

    pub fn from_flag(flag: u32) -> Option<Self> {
        match flag {
            0 => Some(Frame::Physical),
            1 => Some(Frame::Filtered),
            _ => None,
        }
    }
}

/// `values[ix * nv^d + iv]` with row-major flat spatial and velocity indices.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseProfile {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
    pub time: f64,
    pub frame: Frame,
}

impl PhaseProfile {
    pub fn zeros(grid: PhaseGrid, frame: Frame) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            time: 0.0,
            frame,
        }
    }

    pub fn from_fn<F: Fn([f64; 2], [f64; 2]) -> f64 + Sync>(grid: PhaseGrid, frame: Frame, f: F) -> Self {
        let nvd = grid.n_vel();
        let values = (0..grid.len())
            .into_par_iter()
            .map(|k| f(grid.x_point(k / nvd), grid.v_point(k % nvd)))
            .collect();
        Self {
            grid,
            values,
            time: 0.0,
            frame,
        }
    }

    pub fn expect_frame(&self, frame: Frame) -> Result<()> {
        if self.frame != frame {
            return Err(SvpError::FrameMismatch {
                expected: frame.name(),
                found: self.frame.name(),
            });
        }
        Ok(())
    }

    pub fn l2_norm(&self) -> f64 {
        (sum::sum_squares(&self.values) * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        sum::max_abs(&self.values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.par_iter_mut().for_each(|x| *x *= c);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub amplitude: f64,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub sigma_x: f64,
    pub sigma_v: f64,
}

impl Bump {
    pub fn centered(d: usize, amplitude: f64, sigma_x: f64, sigma_v: f64) -> Self {
        Self {
            amplitude,
            x0: vec![0.0; d],
            v0: vec![0.0; d],
            sigma_x,
            sigma_v,
        }
    }

    pub fn eval(&self, x: &[f64], v: &[f64]) -> f64 {
        let mut q = 0.0;
        for (a, c) in x.iter().zip(&self.x0) {
            q += (a - c) * (a - c) / (2.0 * self.sigma_x * self.sigma_x);
        }
        for (a, c) in v.iter().zip(&self.v0) {
            q += (a - c) * (a - c) / (2.0 * self.sigma_v * self.sigma_v);
        }
        self.amplitude * (-q).exp()
    }
}

/// Sum of Gaussian bumps `amp * exp(-|x-x0|^2/2sx^2 - |v-v0|^2/2sv^2)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataSpec {
    #[serde(default)]
    pub bumps: Vec<Bump>,
}

impl InitialDataSpec {
    pub fn single(bump: Bump) -> Self {
        Self { bumps: vec![bump] }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        for (i, b) in self.bumps.iter().enumerate() {
            if b.x0.len() != d || b.v0.len() != d {
                return Err(SvpError::Config(format!("bump {i}: centers must have {d} components")));
            }
            if !(b.amplitude.is_finite() && b.sigma_x > 0.0 && b.sigma_v > 0.0) {
                return Err(SvpError::Config(format!("bump {i}: need finite amplitude and positive widths")));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], v: &[f64]) -> f64 {
        self.bumps.iter().map(|b| b.eval(x, v)).sum()
    }

    pub fn is_vacuum(&self) -> bool {
        self.bumps.iter().all(|b| b.amplitude == 0.0)
    }

    /// Exact `L^2(R^d x R^d)` norm.
    pub fn l2_norm(&self, d: usize) -> f64 {
        let overlap = |s1: f64, s2: f64, c1: &[f64], c2: &[f64]| {
            let s = s1 * s1 + s2 * s2;
            let mut r = (2.0 * std::f64::consts::PI * s1 * s1 * s2 * s2 / s).sqrt().powi(d as i32);
            let dist: f64 = c1.iter().zip(c2).map(|(a, b)| (a - b) * (a - b)).sum();
            r *= (-dist / (2.0 * s)).exp();
            r
        };
        let mut total = 0.0;
        for a in &self.bumps {
            for b in &self.bumps {
                total += a.amplitude
                    * b.amplitude
                    * overlap(a.sigma_x, b.sigma_x, &a.x0, &b.x0)
                    * overlap(a.sigma_v, b.sigma_v, &a.v0, &b.v0);
            }
        }
        total.max(0.0).sqrt()
    }
}

/// Sample the initial data at cell centers (physical frame, `t = 0`).
pub fn sample_initial(spec: &InitialDataSpec, grid: PhaseGrid) -> Result<PhaseProfile> {
    spec.validate(grid.d)?;
    for (index, b) in spec.bumps.iter().enumerate() {
        let fits_x = b.x0.iter().all(|c| c.abs() + 4.0 * b.sigma_x <= grid.lx);
        let fits_v = b.v0.iter().all(|c| c.abs() + 4.0 * b.sigma_v <= grid.lv);
        if !(fits_x && fits_v) {
            return Err(SvpError::SupportOverflow { index });
        }
    }
    let d = grid.d;
    Ok(PhaseProfile::from_fn(grid, Frame::Physical, |x, v| spec.eval(&x[..d], &v[..d])))
}

/// `rho(x) = sum_v mu(x, v)^2 dv^d` on the base spatial grid.
pub fn density(profile: &PhaseProfile) -> Result<SpatialField> {
    profile.expect_frame(Frame::Physical)?;
    let g = profile.grid;
    let nvd = g.n_vel();
    let w = g.dv().powi(g.d as i32);
    let values = profile
        .values
        .par_chunks(nvd)
        .map(|slice| {
            let sq: Vec<f64> = slice.iter().map(|x| x * x).collect();
            sum::pairwise(&sq) * w
        })
        .collect();
    Ok(SpatialField {
        grid: g.spatial(),
        values,
        tag: FieldTag::Density,
    })
}

/// First tap and cubic weights for positions `pos0 + k`, `k = 0, 1, ...`
/// (positions in coefficient-index units).
#[derive(Clone, Copy, Debug)]
struct ShiftTaps {
    first: isize,
    w: [f64; 4],
}

impl ShiftTaps {
    fn new(pos0: f64) -> Self {
        let base = pos0.floor();
        Self {
            first: base as isize - 1,
            w: spline::weights(pos0 - base),
        }
    }

    /// Range of output indices `k` for which at least one tap is in `0..len`.
    fn live(&self, len: usize, out_n: usize) -> std::ops::Range<usize> {
        let lo = (-self.first - 3).max(0) as usize;
        let hi = ((len as isize - self.first).max(0) as usize).min(out_n);
        lo.min(hi)..hi
    }

    #[inline]
    fn apply(&self, line: &[f64], stride: usize, k: usize) -> f64 {
        let i0 = self.first + k as isize;
        let len = line.len().div_ceil(stride) as isize;
        if i0 >= 0 && i0 + 3 < len {
            let i0 = i0 as usize;
            let mut s = 0.0;
            for p in 0..4 {
                s += self.w[p] * line[(i0 + p) * stride];
            }
            s
        } else {
            let mut s = 0.0;
            for p in 0..4 {
                let i = i0 + p as isize;
                if i >= 0 && i < len {
                    s += self.w[p] * line[i as usize * stride];
                }
            }
            s
        }
    }
}

/// For each output cell `k` (extent `out_n^d`) accumulate `sum_s (S_s c_s)(k)^2`,
/// where `c_s` is the `s`-th coefficient block (extent `block_n^d`) and `S_s`
/// samples it at shifted positions described by `taps[s]`. Out-of-block taps
/// contribute zero. Each output cell sums slices in a fixed order.
fn sum_squared_shifted(blocks: &[f64], block_n: usize, d: usize, taps: &[[ShiftTaps; 2]], out_n: usize) -> Vec<f64> {
    let bsize = block_n.pow(d as u32);
    debug_assert_eq!(blocks.len(), bsize * taps.len());
    match d {
        1 => (0..out_n)
            .into_par_iter()
            .map(|k| {
                let mut acc = 0.0;
                for (s, t) in taps.iter().enumerate() {
                    let v = t[0].apply(&blocks[s * bsize..(s + 1) * bsize], 1, k);
                    acc += v * v;
                }
                acc
            })
            .collect(),
        2 => {
            let mut out = vec![0.0; out_n * out_n];
            out.par_chunks_mut(out_n).enumerate().for_each(|(k1, row)| {
                let mut tmp = vec![0.0; block_n];
                for (s, t) in taps.iter().enumerate() {
                    let i0 = t[0].first + k1 as isize;
                    if i0 + 3 < 0 || i0 >= block_n as isize {
                        continue;
                    }
                    let block = &blocks[s * bsize..(s + 1) * bsize];
                    tmp.iter_mut().for_each(|x| *x = 0.0);
                    for p in 0..4 {
                        let i = i0 + p as isize;
                        if i < 0 || i >= block_n as isize {
                            continue;
                        }
                        let w = t[0].w[p];
                        let src = &block[i as usize * block_n..(i as usize + 1) * block_n];
                        for (a, b) in tmp.iter_mut().zip(src) {
                            *a += w * b;
                        }
                    }
                    for k2 in t[1].live(block_n, out_n) {
                        let v = t[1].apply(&tmp, 1, k2);
                        row[k2] += v * v;
                    }
                }
            });
            out
        }
        _ => unreachable!(),
    }
}

/// Velocity integral `rho(y, t) = int gamma(y - t v, v, t)^2 dv` of a filtered
/// profile, evaluated on the grown spatial grid `omega`.
///
/// For `t <= T_SWITCH` the integral is taken directly over the velocity grid
/// with `gamma` interpolated in `x`. Beyond that the change of variables
/// `a = y - t v` gives `rho(y) = t^-d P(y / t)` with
/// `P(u) = int gamma(a, u - a/t)^2 da`, computed on a velocity-aligned grid
/// and interpolated.
pub fn density_filtered(gamma: &PhaseProfile, t: f64, omega: &SpatialGrid, boundary_tol: f64) -> Result<SpatialField> {
    gamma.expect_frame(Frame::Filtered)?;
    let g = gamma.grid;
    let d = g.d;
    let dx = g.dx();
    if omega.d != d || (omega.h() - dx).abs() > 1e-12 * dx || omega.n < g.nx || (omega.n - g.nx) % 2 != 0 {
        return Err(SvpError::InvalidGrid("density grid is not aligned with the phase grid".into()));
    }
    if gamma.is_zero() {
        return Ok(SpatialField::zeros(*omega, FieldTag::Density));
    }
    if t <= T_SWITCH {
        Ok(density_direct(gamma, t, omega))
    } else {
        density_rescaled(gamma, t, omega, boundary_tol)
    }
}

fn density_direct(gamma: &PhaseProfile, t: f64, omega: &SpatialGrid) -> SpatialField {
    let g = gamma.grid;
    let d = g.d;
    let (nxd, nvd) = (g.n_space(), g.n_vel());
    // one periodic-prefiltered spatial block per velocity cell
    let mut transposed = vec![0.0; g.len()];
    transposed.par_chunks_mut(nxd).enumerate().for_each(|(iv, block)| {
        for (ix, x) in block.iter_mut().enumerate() {
            *x = gamma.values[ix * nvd + iv];
        }
    });
    let mut shape = vec![g.nv; d];
    shape.extend(std::iter::repeat_n(g.nx, d));
    let mut closures = vec![None; d];
    closures.extend(std::iter::repeat_n(Some(Closure::Periodic), d));
    let (coeffs, _) = spline::prefilter(&transposed, &shape, &closures);

    let offset = ((omega.n - g.nx) / 2) as f64;
    let dx = g.dx();
    let taps: Vec<[ShiftTaps; 2]> = (0..nvd)
        .map(|iv| {
            let v = g.v_point(iv);
            [
                ShiftTaps::new(-offset - t * v[0] / dx),
                ShiftTaps::new(-offset - t * v[1] / dx),
            ]
        })
        .collect();
    let mut values = sum_squared_shifted(&coeffs, g.nx, d, &taps, omega.n);
    let w = g.dv().powi(d as i32);
    values.par_iter_mut().for_each(|x| *x *= w);
    SpatialField {
        grid: *omega,
        values,
        tag: FieldTag::Density,
    }
}

fn density_rescaled(gamma: &PhaseProfile, t: f64, omega: &SpatialGrid, boundary_tol: f64) -> Result<SpatialField> {
    let g = gamma.grid;
    let d = g.d;
    let (nvd, dv, dx) = (g.n_vel(), g.dv(), g.dx());
    check_velocity_edge(gamma, boundary_tol)?;

    let mut shape = vec![g.nx; d];
    shape.extend(std::iter::repeat_n(g.nv, d));
    let mut closures = vec![None; d];
    closures.extend(std::iter::repeat_n(Some(Closure::NotAKnot), d));
    let (coeffs, _) = spline::prefilter(&gamma.values, &shape, &closures);

    // u-grid: the velocity grid extended by `ext` cells on each side
    let ext = (g.lx / (t * dv)).ceil() as usize + 4;
    let nu = g.nv + 2 * ext;
    let taps: Vec<[ShiftTaps; 2]> = (0..g.n_space())
        .map(|ix| {
            let a = g.x_point(ix);
            [
                ShiftTaps::new(1.0 - ext as f64 - a[0] / (t * dv)),
                ShiftTaps::new(1.0 - ext as f64 - a[1] / (t * dv)),
            ]
        })
        .collect();
    let mut p = sum_squared_shifted(&coeffs, g.nv + 2, d, &taps, nu);
    let w = dx.powi(d as i32);
    p.par_iter_mut().for_each(|x| *x *= w);
    debug_assert_eq!(p.len(), nu.pow(d as u32) * if nvd > 0 { 1 } else { 0 });

    let origin = -g.lv + (0.5 - ext as f64) * dv;
    let axis = spline::SplineAxis::not_a_knot(nu, origin, dv);
    let pspline = spline::TensorSpline::new(&p, &vec![axis; d]);
    let scale = t.powi(-(d as i32));
    let values = (0..omega.len())
        .into_par_iter()
        .map(|k| {
            let y = omega.point(k);
            let u = [y[0] / t, y[1] / t];
            scale * pspline.eval(&u[..d])
        })
        .collect();
    Ok(SpatialField {
        grid: *omega,
        values,
        tag: FieldTag::Density,
    })
}

/// The rescaled density extends `gamma` by zero beyond the velocity box; that
/// is only legitimate if the outer two velocity layers are empty.
fn check_velocity_edge(gamma: &PhaseProfile, tol: f64) -> Result<()> {
    let (value, v) = edge_max(gamma, 2);
    if value > tol {
        return Err(SvpError::VSupportExceeded { v, value });
    }
    Ok(())
}

/// Largest `|value|` within `layers` cells of the velocity boundary, with the
/// velocity magnitude where it occurs.
pub fn edge_max(profile: &PhaseProfile, layers: usize) -> (f64, f64) {
    let g = profile.grid;
    let nvd = g.n_vel();
    let near = |j: usize| j < layers || j + layers >= g.nv;
    let in_layer = |iv: usize| match g.d {
        1 => near(iv),
        _ => near(iv / g.nv) || near(iv % g.nv),
    };
    profile
        .values
        .par_iter()
        .enumerate()
        .filter(|(k, _)| in_layer(k % nvd))
        .map(|(k, x)| {
            let v = g.v_point(k % nvd);
            (x.abs(), v[0].abs().max(v[1].abs()))
        })
        .reduce(|| (0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a })
}

/// Abort if the profile has reached the velocity guard layer.
pub fn pad_guard(profile: &PhaseProfile, boundary_tol: f64) -> Result<()> {
    let (value, _) = edge_max(profile, GUARD_CELLS);
    if value >= boundary_tol {
        return Err(SvpError::PadGuard { t: profile.time, value });
    }
    Ok(())
}

/// `gamma(x, v) = mu(x + t v, v)`.
pub fn to_filtered(mu: &PhaseProfile, t: f64) -> Result<PhaseProfile> {
    mu.expect_frame(Frame::Physical)?;
    let mut out = mu.clone();
    out.values = shear(&mu.grid, &mu.values, t);
    out.frame = Frame::Filtered;
    out.time = t;
    Ok(out)
}

/// `mu(x, v) = gamma(x - t v, v)`.
pub fn to_physical(gamma: &PhaseProfile, t: f64) -> Result<PhaseProfile> {
    gamma.expect_frame(Frame::Filtered)?;
    let mut out = gamma.clone();
    out.values = shear(&gamma.grid, &gamma.values, -t);
    out.frame = Frame::Physical;
    out.time = t;
    Ok(out)
}

/// Exact periodic translation `f(x, v) -> f(x + s v, v)` of every velocity slice.
pub fn shear(grid: &PhaseGrid, values: &[f64], s: f64) -> Vec<f64> {
    if s == 0.0 {
        return values.to_vec();
    }
    let d = grid.d;
    let fft = FftNd::new(&grid.shape());
    let mut data = fft::to_complex(values);
    let axes: Vec<usize> = (0..d).collect();
    fft.forward_axes(&mut data, &axes);
    let ks = fft::wavenumbers(grid.nx, grid.dx());
    let nvd = grid.n_vel();
    let nyq = grid.nx / 2;
    data.par_chunks_mut(nvd).enumerate().for_each(|(ix, chunk)| {
        let kj: [usize; 2] = match d {
            1 => [ix, 0],
            _ => [ix / grid.nx, ix % grid.nx],
        };
        for (iv, z) in chunk.iter_mut().enumerate() {
            let v = grid.v_point(iv);
            let mut factor = Complex64::new(1.0, 0.0);
            for a in 0..d {
                let phase = ks[kj[a]] * s * v[a];
                factor *= if kj[a] == nyq {
                    Complex64::new(phase.cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, phase)
                };
            }
            *z *= factor;
        }
    });
    fft.inverse_axes(&mut data, &axes);
    fft::real_part(&data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing() {
        let g = PhaseGrid::new(1, 8, 8, 4.0, 4.0).unwrap();
        assert_eq!((g.dx(), g.dv()), (1.0, 1.0));
        let g = PhaseGrid::new(2, 64, 64, 16.0, 6.0).unwrap();
        assert_eq!((g.dx(), g.dv()), (0.5, 0.1875));
        let e = PhaseGrid::new(1, 7, 8, 4.0, 4.0).unwrap_err();
        assert_eq!(e.kind(), "non-power-of-two");
        assert_eq!(PhaseGrid::new(3, 8, 8, 1.0, 1.0).unwrap_err().kind(), "dimension");
    }

    #[test]
    fn bump_at_edge_overflows() {
        let g = PhaseGrid::new(1, 64, 64, 8.0, 8.0).unwrap();
        let mut b = Bump::centered(1, 1.0, 1.0, 1.0);
        b.x0 = vec![8.0];
        let e = sample_initial(&InitialDataSpec::single(b), g).unwrap_err();
        assert_eq!(e.kind(), "support_overflow");
        let p = sample_initial(&InitialDataSpec::default(), g).unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn density_of_gaussian_at_origin() {
        let g = PhaseGrid::new(1, 64, 64, 8.0, 8.0).unwrap();
        let p = sample_initial(&InitialDataSpec::single(Bump::centered(1, 1.0, 1.0, 1.0)), g).unwrap();
        let rho = density(&p).unwrap();
        // x = 0 sits between the two central cells
        let r = 0.5 * (rho.values[31] + rho.values[32]);
        let expected = std::f64::consts::PI.sqrt() * (-(0.125f64).powi(2)).exp();
        assert!((r - expected).abs() < 1e-10, "{r}");
    }

    fn filtered_density_error(n: usize, t: f64) -> f64 {
        let g = PhaseGrid::new(1, n, n, 8.0, 8.0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut gamma = sample_initial(&InitialDataSpec::single(Bump::centered(1, 1.0, s, s)), g).unwrap();
        gamma.frame = Frame::Filtered;
        let omega = crate::screened_poisson::grow_domain(t, g.lv, &g.spatial());
        let rho = density_filtered(&gamma, t, &omega, 1e-10).unwrap();
        (0..omega.n)
            .map(|k| {
                let y = omega.coord(k);
                let exact = (std::f64::consts::PI / (2.0 * (1.0 + t * t))).sqrt() * (-2.0 * y * y / (1.0 + t * t)).exp();
                (rho.values[k] - exact).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn filtered_density_both_branches_converge() {
        assert!(filtered_density_error(64, 0.0) < 1e-14);
        for t in [0.5, 1.0, 1.5, 3.0] {
            let coarse = filtered_density_error(128, t);
            let fine = filtered_density_error(256, t);
            assert!(fine < 1e-6 && coarse / fine > 12.0, "t={t}: {coarse:e} -> {fine:e}");
        }
    }

    #[test]
    fn frame_mismatch_is_reported() {
        let g = PhaseGrid::new(1, 8, 8, 4.0, 4.0).unwrap();
        let p = PhaseProfile::zeros(g, Frame::Filtered);
        assert_eq!(density(&p).unwrap_err().kind(), "frame_mismatch");
    }
}

//! The screened Poisson equation `(1 - Laplacian) phi = rho`: its Green kernel
//! and a spectral solver on periodic spatial grids.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SvpError};
use crate::numerics::fft::{self, FftNd};
use crate::numerics::quadrature::{adaptive, gauss_legendre_on};
use crate::numerics::sum;

/// Default number of boundary cells that must stay (numerically) free of density.
pub const PADDING_CELLS: usize = 16;

/// Cell-centered periodic spatial grid `[-l, l)^d` with `n` cells per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub d: usize,
    pub n: usize,
    pub l: f64,
}

impl SpatialGrid {
    pub fn h(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.l + (i as f64 + 0.5) * self.h()
    }

    pub fn point(&self, k: usize) -> [f64; 2] {
        match self.d {
            1 => [self.coord(k), 0.0],
            _ => [self.coord(k / self.n), self.coord(k % self.n)],
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.n; self.d]
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.d as i32)
    }
}

/// Spatial grid large enough to hold `x + t v` for every phase point with
/// `|x| <= base.l` and `|v| <= v_max`, plus an 8-cell pad, at the base spacing.
/// The cell count is rounded up to a power of two, which keeps the grid
/// centered and aligned with the base grid.
pub fn grow_domain(t: f64, v_max: f64, base: &SpatialGrid) -> SpatialGrid {
    let h = base.h();
    let target = base.l + t.abs() * v_max + 8.0 * h;
    let cells = (2.0 * target / h - 1e-9).ceil().max(1.0) as usize;
    let n = cells.next_power_of_two().max(base.n);
    SpatialGrid {
        d: base.d,
        n,
        l: 0.5 * n as f64 * h,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldTag {
    Density,
    Potential,
    /// `d^alpha phi` with per-axis derivative counts.
    Derivative([usize; 3]),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpatialField {
    pub grid: SpatialGrid,
    pub values: Vec<f64>,
    pub tag: FieldTag,
}

impl SpatialField {
    pub fn zeros(grid: SpatialGrid, tag: FieldTag) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            tag,
        }
    }

    pub fn max_abs(&self) -> f64 {
        sum::max_abs(&self.values)
    }

    pub fn min(&self) -> f64 {
        self.values.par_iter().cloned().reduce(|| f64::INFINITY, f64::min)
    }

    pub fn l1_norm(&self) -> f64 {
        sum::pairwise_map(self.values.len(), |i| self.values[i].abs()) * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        (sum::sum_squares(&self.values) * self.grid.cell_volume()).sqrt()
    }

    /// Absolute mass within `cells` of the grid boundary.
    pub fn boundary_mass(&self, cells: usize) -> f64 {
        let g = self.grid;
        let near = |i: usize| i < cells || i + cells >= g.n;
        let terms: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let edge = match g.d {
                    1 => near(k),
                    _ => near(k / g.n) || near(k % g.n),
                };
                if edge {
                    v.abs()
                } else {
                    0.0
                }
            })
            .collect();
        sum::pairwise(&terms) * g.cell_volume()
    }
}

/// Green kernel of `1 - Laplacian` on `R^d`,
/// `G_d(x) = (4 pi)^{-d/2} int_0^inf exp(-|x|^2 / 4R) exp(-R) R^{-d/2} dR`,
/// evaluated by Gauss–Legendre quadrature in `s = ln R`.
#[derive(Clone, Debug)]
pub struct GreenKernel {
    d: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GreenKernel {
    pub const N_QUAD: usize = 200;
    pub const S_MIN: f64 = -30.0;
    pub const S_MAX: f64 = 5.0;

    pub fn new(d: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(SvpError::Dimension(d));
        }
        let (nodes, weights) = gauss_legendre_on(Self::N_QUAD, Self::S_MIN, Self::S_MAX);
        Ok(Self { d, nodes, weights })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    fn check(&self, r: f64) -> Result<()> {
        if r < 0.0 || !r.is_finite() || (r == 0.0 && self.d >= 2) {
            return Err(SvpError::KernelSingular(self.d));
        }
        Ok(())
    }

    fn integrate(&self, r: f64, extra: impl Fn(f64) -> f64) -> f64 {
        let half_d = 0.5 * self.d as f64;
        let mut acc = 0.0;
        for (&s, &w) in self.nodes.iter().zip(&self.weights) {
            let big_r = s.exp();
            let e = -r * r / (4.0 * big_r) - big_r + (1.0 - half_d) * s;
            acc += w * e.exp() * extra(big_r);
        }
        acc * (4.0 * PI).powf(-half_d)
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        let mut g = self.integrate(r, |_| 1.0);
        if r == 0.0 {
            // d = 1 only: the integrand is exp(s/2 - e^s), whose tail below S_MIN is 2 e^{S_MIN/2}
            g += 2.0 * (0.5 * Self::S_MIN).exp() / (4.0 * PI).sqrt();
        }
        Ok(g)
    }

    /// Radial derivative `G_d'(r)`.
    pub fn eval_derivative(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        Ok(self.integrate(r, |big_r| -r / (2.0 * big_r)))
    }

    /// `int_{R^d} G_d`, by adaptive quadrature of the radial profile.
    pub fn total_mass(&self) -> f64 {
        let sphere = match self.d {
            1 => 2.0,
            2 => 2.0 * PI,
            _ => 4.0 * PI,
        };
        let d = self.d as i32;
        let f = |u: f64| {
            let r = u.exp();
            self.integrate(r, |_| 1.0) * r.powi(d)
        };
        sphere * adaptive(f, -25.0, 4.5, 1e-12, 1e-14, 500).value
    }
}

/// Spectral representation of `phi = (1 - Laplacian)^{-1} rho` on a periodic grid.
pub struct ScreenedSolution {
    grid: SpatialGrid,
    fft: FftNd,
    phi_hat: Vec<Complex64>,
}

impl ScreenedSolution {
    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn potential(&self) -> SpatialField {
        self.derivative_unchecked([0; 3])
    }

    /// `d^alpha phi`, `|alpha| <= 3`.
    pub fn field_derivative(&self, alpha: &[usize]) -> Result<SpatialField> {
        let order: usize = alpha.iter().sum();
        if order > 3 {
            return Err(SvpError::OrderTooHigh(order));
        }
        Ok(self.derivative_unchecked(multi(alpha)))
    }

    /// `d^alpha d_k phi` (a component of `d^alpha grad phi`), `|alpha| <= 3`.
    pub fn gradient_derivative(&self, alpha: &[usize], k: usize) -> Result<SpatialField> {
        let order: usize = alpha.iter().sum();
        if order > 3 {
            return Err(SvpError::OrderTooHigh(order));
        }
        let mut a = multi(alpha);
        a[k] += 1;
        Ok(self.derivative_unchecked(a))
    }

    fn derivative_unchecked(&self, alpha: [usize; 3]) -> SpatialField {
        let g = self.grid;
        let ks = fft::wavenumbers(g.n, g.h());
        let mut data = self.phi_hat.clone();
        if alpha.iter().any(|&a| a > 0) {
            data.par_iter_mut().enumerate().for_each(|(k, z)| {
                let mut idx = [0usize; 3];
                fft::unravel(k, &g.shape(), &mut idx[..g.d]);
                for a in 0..g.d {
                    *z *= fft::derivative_symbol(idx[a], g.n, ks[idx[a]], alpha[a] as u32);
                }
            });
        }
        self.fft.inverse(&mut data);
        SpatialField {
            grid: g,
            values: fft::real_part(&data),
            tag: if alpha == [0; 3] {
                FieldTag::Potential
            } else {
                FieldTag::Derivative(alpha)
            },
        }
    }
}

fn multi(alpha: &[usize]) -> [usize; 3] {
    let mut a = [0; 3];
    a[..alpha.len()].copy_from_slice(alpha);
    a
}

/// Solve `(1 - Laplacian) phi = rho` after checking that `rho` leaves a
/// `padding_cells` wide boundary layer (numerically) empty, so periodic images
/// do not contaminate the free-space answer.
pub fn solve_screened(rho: &SpatialField, padding_cells: usize, boundary_tol: f64) -> Result<ScreenedSolution> {
    let mass = rho.boundary_mass(padding_cells);
    if mass > boundary_tol {
        return Err(SvpError::SupportMargin { mass, tol: boundary_tol });
    }
    Ok(solve_screened_periodic(rho))
}

/// Periodic solve without the support check.
pub fn solve_screened_periodic(rho: &SpatialField) -> ScreenedSolution {
    let g = rho.grid;
    let fft = FftNd::new(&g.shape());
    let mut data = fft::to_complex(&rho.values);
    fft.forward(&mut data);
    let ks = fft::wavenumbers(g.n, g.h());
    data.par_iter_mut().enumerate().for_each(|(k, z)| {
        let mut idx = [0usize; 3];
        fft::unravel(k, &g.shape(), &mut idx[..g.d]);
        let k2: f64 = idx[..g.d].iter().map(|&i| ks[i] * ks[i]).sum();
        *z /= 1.0 + k2;
    });
    ScreenedSolution {
        grid: g,
        fft,
        phi_hat: data,
    }
}

/// Rows `(r, G_d(r))` for the green-table report.
pub fn green_table(d: usize, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
    let kernel = GreenKernel::new(d)?;
    radii.iter().map(|&r| Ok((r, kernel.eval(r)?))).collect()
}

//! Frozen-profile (linear) decay oracle.
//!
//! For a Gaussian-mixture profile `h`, the density
//! `rho_h(x, t) = int h^2(x - t w, w) dw` is again a Gaussian mixture in `x`,
//! known in closed form. The potential `phi_h = (1 - Laplacian)^{-1} rho_h` and
//! its derivatives follow from the heat-semigroup form of the Green kernel,
//! `phi = int_0^inf e^{-R} e^{R Laplacian} rho dR`, which maps each Gaussian
//! term to a one-dimensional integral over `R`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{fit_decay, log_log_regression, DecayFit};
use crate::error::{Result, SvpError};
use crate::numerics::quadrature::{adaptive, Integral};
use crate::numerics::{bracket, golden_max, hermite_he};
use crate::phase_space::{Bump, InitialDataSpec};

const REL_TOL: f64 = 1e-10;

/// Gaussian-mixture profile with the regularity metadata consulted by the lemma checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticProfile {
    pub d: usize,
    pub bumps: Vec<Bump>,
    /// Number of velocity derivatives known to be controlled.
    pub v_derivative_order: usize,
    /// Order of the controlled spatial moments.
    pub moment_order: usize,
    /// Whether the profile is real-analytic (enables the analytic-norm checks).
    pub analytic: bool,
}

impl AnalyticProfile {
    pub fn new(d: usize, spec: &InitialDataSpec) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(SvpError::Dimension(d));
        }
        spec.validate(d)?;
        Ok(Self {
            d,
            bumps: spec.bumps.clone(),
            v_derivative_order: 3,
            moment_order: d + 1,
            analytic: true,
        })
    }

    /// Single centered isotropic Gaussian.
    pub fn gaussian(d: usize, amplitude: f64, sigma_x: f64, sigma_v: f64) -> Self {
        Self::new(d, &InitialDataSpec::single(Bump::centered(d, amplitude, sigma_x, sigma_v))).expect("valid bump")
    }

    pub fn eval(&self, x: &[f64], v: &[f64]) -> f64 {
        self.bumps.iter().map(|b| b.eval(x, v)).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for b in &mut out.bumps {
            b.amplitude *= c;
        }
        out
    }

    /// All bumps share their phase-space center, so `rho_h` is radial.
    pub fn is_radial(&self) -> bool {
        self.bumps.windows(2).all(|w| w[0].x0 == w[1].x0 && w[0].v0 == w[1].v0)
    }

    /// Closed form of `rho_h(., t)`.
    pub fn density(&self, t: f64) -> GaussianSum {
        let d = self.d;
        let mut terms = Vec::new();
        for (i, p) in self.bumps.iter().enumerate() {
            for q in &self.bumps[i..] {
                let mult = if std::ptr::eq(p, q) { 1.0 } else { 2.0 };
                let (sx2, sq2) = (p.sigma_x.powi(2), q.sigma_x.powi(2));
                let (vx2, vq2) = (p.sigma_v.powi(2), q.sigma_v.powi(2));
                let s2 = 1.0 / (1.0 / sx2 + 1.0 / sq2);
                let q2 = 1.0 / (1.0 / vx2 + 1.0 / vq2);
                let mut abar = [0.0; 3];
                let mut bbar = [0.0; 3];
                let mut dist_x = 0.0;
                let mut dist_v = 0.0;
                for k in 0..d {
                    abar[k] = s2 * (p.x0[k] / sx2 + q.x0[k] / sq2);
                    bbar[k] = q2 * (p.v0[k] / vx2 + q.v0[k] / vq2);
                    dist_x += (p.x0[k] - q.x0[k]).powi(2);
                    dist_v += (p.v0[k] - q.v0[k]).powi(2);
                }
                let coupling = (-dist_x / (2.0 * (sx2 + sq2)) - dist_v / (2.0 * (vx2 + vq2))).exp();
                let var = s2 + t * t * q2;
                let w = mult * p.amplitude * q.amplitude * coupling * ((2.0 * PI).sqrt() * (s2 * q2).sqrt() / var.sqrt()).powi(d as i32);
                let mut c = [0.0; 3];
                for k in 0..d {
                    c[k] = abar[k] + t * bbar[k];
                }
                terms.push(GaussianTerm { weight: w, center: c, var });
            }
        }
        GaussianSum { d, terms }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianTerm {
    pub weight: f64,
    pub center: [f64; 3],
    /// Variance `sigma^2` of `exp(-|y - c|^2 / 2 sigma^2)`.
    pub var: f64,
}

/// `sum_p w_p exp(-|y - c_p|^2 / 2 sigma_p^2)` on `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSum {
    pub d: usize,
    pub terms: Vec<GaussianTerm>,
}

impl GaussianSum {
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|p| {
                let r2: f64 = (0..self.d).map(|k| (y[k] - p.center[k]).powi(2)).sum();
                p.weight * (-r2 / (2.0 * p.var)).exp()
            })
            .sum()
    }

    pub fn sigma_min(&self) -> f64 {
        self.terms.iter().map(|p| p.var.sqrt()).fold(f64::INFINITY, f64::min)
    }

    pub fn sigma_max(&self) -> f64 {
        self.terms.iter().map(|p| p.var.sqrt()).fold(0.0, f64::max)
    }

    /// `d^beta (e^{R Laplacian} rho)(y)`.
    fn smoothed_derivative(&self, beta: &[usize], y: &[f64], big_r: f64) -> f64 {
        let mut acc = 0.0;
        for p in &self.terms {
            let s2 = p.var + 2.0 * big_r;
            let s = s2.sqrt();
            let mut val = p.weight * (p.var / s2).powf(0.5 * self.d as f64);
            let mut r2 = 0.0;
            for k in 0..self.d {
                let z = y[k] - p.center[k];
                r2 += z * z;
                if beta[k] > 0 {
                    val *= (-1.0 / s).powi(beta[k] as i32) * hermite_he(beta[k], z / s);
                }
            }
            acc += val * (-r2 / (2.0 * s2)).exp();
        }
        acc
    }

    /// `d^beta phi(y)` with `phi = (1 - Laplacian)^{-1}` of this sum.
    pub fn potential_derivative(&self, beta: &[usize], y: &[f64]) -> Result<Integral> {
        let order: usize = beta.iter().sum();
        let scale: f64 = self
            .terms
            .iter()
            .map(|p| p.weight.abs() * p.var.powf(-0.5 * order as f64))
            .sum();
        let f = |u: f64| {
            let big_r = u.exp();
            big_r * (-big_r).exp() * self.smoothed_derivative(beta, y, big_r)
        };
        let r = adaptive(f, -40.0, 60f64.ln(), REL_TOL, 1e-15 * scale, 4000);
        if !r.converged {
            return Err(SvpError::Quadrature { error: r.error });
        }
        Ok(r)
    }

    /// `|| d^alpha grad phi ||_{L^2}` (all gradient components), by quadrature in Fourier space.
    pub fn field_l2(&self, alpha: &[usize]) -> Result<Integral> {
        let d = self.d;
        if d > 2 {
            return Err(SvpError::Precondition("Fourier-side L2 norms are implemented for d <= 2".into()));
        }
        let amp: Vec<f64> = self
            .terms
            .iter()
            .map(|p| p.weight * (2.0 * PI * p.var).powf(0.5 * d as f64))
            .collect();
        let power = |xi: &[f64]| -> f64 {
            let k2: f64 = xi.iter().map(|a| a * a).sum();
            let mut s = 0.0;
            for (i, p) in self.terms.iter().enumerate() {
                for (j, q) in self.terms.iter().enumerate() {
                    let phase: f64 = (0..d).map(|k| xi[k] * (p.center[k] - q.center[k])).sum();
                    s += amp[i] * amp[j] * (-(p.var + q.var) * k2 / 2.0).exp() * phase.cos();
                }
            }
            let mono: f64 = (0..d).map(|k| xi[k].powi(2 * alpha[k] as i32)).product();
            s * mono * k2 / (1.0 + k2).powi(2)
        };
        let rmax = 40.0 / self.sigma_min();
        let r = match d {
            1 => {
                let f = |x: f64| power(&[x]) + power(&[-x]);
                let mut r = adaptive(f, 0.0, rmax, REL_TOL, 0.0, 4000);
                r.value /= 2.0 * PI;
                r.error /= 2.0 * PI;
                r
            }
            _ => {
                const NT: usize = 64;
                let f = |rr: f64| {
                    let mut s = 0.0;
                    for k in 0..NT {
                        let th = 2.0 * PI * k as f64 / NT as f64;
                        s += power(&[rr * th.cos(), rr * th.sin()]);
                    }
                    s * rr * 2.0 * PI / NT as f64
                };
                let mut r = adaptive(f, 0.0, rmax, REL_TOL, 0.0, 4000);
                r.value /= 4.0 * PI * PI;
                r.error /= 4.0 * PI * PI;
                r
            }
        };
        if !r.converged {
            return Err(SvpError::Quadrature { error: r.error });
        }
        let value = r.value.max(0.0).sqrt();
        Ok(Integral {
            value,
            error: 0.5 * r.error / value.max(f64::MIN_POSITIVE),
            converged: true,
        })
    }
}

/// `rho_h(x, t)`.
pub fn rho_exact(profile: &AnalyticProfile, x: &[f64], t: f64) -> f64 {
    profile.density(t).eval(x)
}

/// Values of `d^alpha grad phi_h(., t)` (one entry per gradient component) at each point.
pub fn field_oracle(profile: &AnalyticProfile, alpha: &[usize], t: f64, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let rho = profile.density(t);
    let d = profile.d;
    points
        .par_iter()
        .map(|y| {
            (0..d)
                .map(|k| {
                    let mut beta = alpha.to_vec();
                    beta[k] += 1;
                    rho.potential_derivative(&beta, y).map(|r| r.value)
                })
                .collect()
        })
        .collect()
}

/// Supremum of `|f|` over space, with the relative change between the base
/// search resolution and the 4x finer one.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SupEstimate {
    pub value: f64,
    pub sensitivity: f64,
}

fn directions(d: usize) -> Vec<[f64; 3]> {
    match d {
        1 => vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
        2 => (0..=8)
            .map(|k| {
                let th = PI / 16.0 * k as f64;
                [th.cos(), th.sin(), 0.0]
            })
            .collect(),
        _ => {
            let mut dirs = vec![[0.0, 0.0, 1.0]];
            for i in 1..=4 {
                for j in 0..=4 {
                    let th = PI / 8.0 * i as f64;
                    let ph = PI / 8.0 * j as f64;
                    dirs.push([th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
                }
            }
            dirs
        }
    }
}

/// Sup of `|f|` for a field built from `rho`: along rays from the common
/// center for radial densities, over a box grid plus compass refinement otherwise.
fn sup_search<F: Fn(&[f64]) -> Result<f64> + Sync>(rho: &GaussianSum, radial: bool, f: F) -> Result<SupEstimate> {
    let d = rho.d;
    let fine = rho.sigma_min() / 32.0;
    let reach = 6.0 * rho.sigma_max() + 6.0;
    if radial || d == 1 {
        let mut center = [0.0; 3];
        let (lo, hi) = if radial {
            center = rho.terms[0].center;
            (0.0, reach)
        } else {
            let cmin = rho.terms.iter().map(|p| p.center[0]).fold(f64::INFINITY, f64::min);
            let cmax = rho.terms.iter().map(|p| p.center[0]).fold(f64::NEG_INFINITY, f64::max);
            (cmin - reach, cmax + reach)
        };
        let dirs = if radial { directions(d) } else { vec![[1.0, 0.0, 0.0]] };
        let n = ((hi - lo) / fine).ceil() as usize + 1;
        let at = |dir: &[f64; 3], r: f64| -> Vec<f64> { (0..d).map(|k| center[k] + r * dir[k]).collect() };
        let per_dir: Vec<Result<(f64, f64)>> = dirs
            .par_iter()
            .map(|dir| {
                let mut vals = Vec::with_capacity(n);
                for i in 0..n {
                    let r = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                    vals.push(f(&at(dir, r))?.abs());
                }
                let coarse = vals.iter().step_by(4).cloned().fold(0.0, f64::max);
                let (imax, _) = vals
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
                let step = (hi - lo) / (n - 1) as f64;
                let r0 = lo + step * imax as f64;
                let a = (r0 - step).max(lo);
                let b = (r0 + step).min(hi);
                let (_, refined) = golden_max(|r| f(&at(dir, r)).map(f64::abs).unwrap_or(0.0), a, b, 1e-9 * (1.0 + r0.abs()));
                Ok((refined.max(vals[imax]), coarse))
            })
            .collect();
        let mut best = 0.0f64;
        let mut coarse = 0.0f64;
        for r in per_dir {
            let (b, c) = r?;
            best = best.max(b);
            coarse = coarse.max(c);
        }
        return Ok(SupEstimate {
            value: best,
            sensitivity: if best > 0.0 { (best - coarse) / best } else { 0.0 },
        });
    }
    // general d = 2 (or 3) mixture: grid at the base resolution, then compass search
    let base = 4.0 * fine;
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in &rho.terms {
        for k in 0..d {
            lo[k] = lo[k].min(p.center[k] - reach);
            hi[k] = hi[k].max(p.center[k] + reach);
        }
    }
    let counts: Vec<usize> = (0..d).map(|k| ((hi[k] - lo[k]) / base).ceil() as usize + 1).collect();
    let total: usize = counts.iter().product();
    let vals: Vec<(f64, Vec<f64>)> = (0..total)
        .into_par_iter()
        .map(|mut flat| {
            let mut y = vec![0.0; d];
            for k in (0..d).rev() {
                let i = flat % counts[k];
                flat /= counts[k];
                y[k] = lo[k] + base * i as f64;
            }
            let v = f(&y).map(f64::abs).unwrap_or(0.0);
            (v, y)
        })
        .collect();
    let coarse = vals.iter().map(|v| v.0).fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].0.total_cmp(&vals[a].0));
    let mut best = coarse;
    for &start in order.iter().take(3) {
        let mut y = vals[start].1.clone();
        let mut fy = vals[start].0;
        let mut step = base;
        while step > 1e-7 * base {
            let mut moved = false;
            for k in 0..d {
                for sgn in [-1.0, 1.0] {
                    let mut z = y.clone();
                    z[k] += sgn * step;
                    let fz = f(&z)?.abs();
                    if fz > fy {
                        y = z;
                        fy = fz;
                        moved = true;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        best = best.max(fy);
    }
    Ok(SupEstimate {
        value: best,
        sensitivity: if best > 0.0 { (best - coarse) / best } else { 0.0 },
    })
}

/// `sup_x max_k |d^alpha d_k phi_h(x, t)|`.
pub fn field_sup(profile: &AnalyticProfile, alpha: &[usize], t: f64) -> Result<SupEstimate> {
    let rho = profile.density(t);
    let d = profile.d;
    sup_search(&rho, profile.is_radial(), |y| {
        let mut m = 0.0f64;
        for k in 0..d {
            let mut beta = alpha.to_vec();
            beta[k] += 1;
            m = m.max(rho.potential_derivative(&beta, y)?.value.abs());
        }
        Ok(m)
    })
}

/// `sup_x |d^beta phi_h(x, t)|` for a full multi-index `beta`.
pub fn potential_sup(profile: &AnalyticProfile, beta: &[usize], t: f64) -> Result<SupEstimate> {
    let rho = profile.density(t);
    sup_search(&rho, profile.is_radial(), |y| Ok(rho.potential_derivative(beta, y)?.value))
}

/// `sup_x rho_h(x, t)`.
pub fn rho_sup(profile: &AnalyticProfile, t: f64) -> Result<SupEstimate> {
    let rho = profile.density(t);
    sup_search(&rho, profile.is_radial(), |y| Ok(rho.eval(y)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    /// `||grad phi_h||_inf <~ <t>^{-d}` (d >= 3, moments only).
    GradPhiD3,
    /// `||grad phi_h||_inf <~ <t>^{-d-1}` (d >= 3, with a velocity derivative; sharp).
    GradPhiSharpD3,
    /// `||d_k grad phi_h||_inf <~ <t>^{-d-1}` (d >= 3).
    HessianPhiD3,
    /// `||rho_h||_inf <~ <t>^{-2}` (d = 2; sharp).
    RhoSupD2,
    /// `||d^alpha grad phi_h||_inf <~ <t>^{-2-|alpha|+delta}` (d = 2).
    FieldSupD2,
    /// `||d^alpha grad phi_h||_inf <~ <t>^{-3-|alpha|+delta}` (d = 2; sharp for alpha = 0).
    FieldSupSharpD2,
    /// `||d^alpha grad phi_h||_2 <~ <t>^{-1/2-|alpha|}` (d = 2, |alpha| >= 2).
    FieldL2D2,
    /// `<t>^{1+n} ||d^{n+1} phi_h||_inf <~ <t>^{-1/2}` (d = 1, analytic data).
    ForceSeriesD1,
    /// `<t>^{2+n} ||d^{n+2} phi_h||_inf <~ <t>^{-1/2}` (d = 1, analytic data).
    ForceGradientSeriesD1,
}

impl Lemma {
    pub const ALL: [Lemma; 9] = [
        Lemma::GradPhiD3,
        Lemma::GradPhiSharpD3,
        Lemma::HessianPhiD3,
        Lemma::RhoSupD2,
        Lemma::FieldSupD2,
        Lemma::FieldSupSharpD2,
        Lemma::FieldL2D2,
        Lemma::ForceSeriesD1,
        Lemma::ForceGradientSeriesD1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Lemma::GradPhiD3 => "grad_phi_d3",
            Lemma::GradPhiSharpD3 => "grad_phi_sharp_d3",
            Lemma::HessianPhiD3 => "hessian_phi_d3",
            Lemma::RhoSupD2 => "rho_sup_d2",
            Lemma::FieldSupD2 => "field_sup_d2",
            Lemma::FieldSupSharpD2 => "field_sup_sharp_d2",
            Lemma::FieldL2D2 => "field_l2_d2",
            Lemma::ForceSeriesD1 => "force_series_d1",
            Lemma::ForceGradientSeriesD1 => "force_gradient_series_d1",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name() == name)
    }
}

/// Extra parameters of a lemma check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaOptions {
    /// Spatial multi-index `alpha` (d = 2 checks).
    pub alpha: Vec<usize>,
    /// Series index `n` (d = 1 checks).
    pub n: usize,
    /// Number of log-spaced sample times in the window.
    pub samples: usize,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        Self {
            alpha: Vec::new(),
            n: 0,
            samples: 16,
        }
    }
}

struct Requirements {
    dims: std::ops::RangeInclusive<usize>,
    v_order: usize,
    moment: usize,
    analytic: bool,
}

/// Predicted exponent, one-sided slack, sharpness margin, and preconditions.
fn lemma_table(lemma: Lemma, d: usize, alpha: usize) -> (f64, f64, Option<f64>, Requirements) {
    let df = d as f64;
    let a = alpha as f64;
    let req = |dims: std::ops::RangeInclusive<usize>, v_order, moment, analytic| Requirements {
        dims,
        v_order,
        moment,
        analytic,
    };
    match lemma {
        Lemma::GradPhiD3 => (-df, 0.1, None, req(3..=3, 0, d / 2 + 1, false)),
        Lemma::GradPhiSharpD3 => (-df - 1.0, 0.1, Some(0.2), req(3..=3, 1, d + 1, false)),
        Lemma::HessianPhiD3 => (-df - 1.0, 0.1, None, req(3..=3, 1, d + 1, false)),
        Lemma::RhoSupD2 => (-2.0, 0.05, Some(0.05), req(2..=2, 2, 1, false)),
        Lemma::FieldSupD2 => (-2.0 - a, 0.1, None, req(2..=2, alpha + 1, 0, false)),
        Lemma::FieldSupSharpD2 => (-3.0 - a, 0.1, if alpha == 0 { Some(0.2) } else { None }, req(2..=2, alpha + 2, 0, false)),
        Lemma::FieldL2D2 => (-0.5 - a, 0.1, None, req(2..=2, alpha, 0, false)),
        Lemma::ForceSeriesD1 | Lemma::ForceGradientSeriesD1 => (-0.5, 0.05, None, req(1..=1, 0, 0, true)),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub lemma: &'static str,
    pub predicted: f64,
    pub slack: f64,
    /// Lower bound on the exponent when the rate is sharp.
    pub sharp_lower: Option<f64>,
    pub fit: DecayFit,
    pub pass: bool,
    /// `(t, left-hand side)` samples.
    pub series: Vec<(f64, f64)>,
    /// Largest relative change of a sup norm between base and fine search.
    pub sup_sensitivity: f64,
}

/// `n` log-spaced times in `[t1, t2]`.
pub fn log_times(t1: f64, t2: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (t1.ln() + (t2.ln() - t1.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Evaluate the left-hand side of `lemma` over `window`, fit its decay
/// exponent and compare with the predicted (upper-bound) rate.
pub fn verify_lemma(lemma: Lemma, profile: &AnalyticProfile, window: (f64, f64), opts: &LemmaOptions) -> Result<LemmaReport> {
    let d = profile.d;
    let mut alpha = opts.alpha.clone();
    alpha.resize(d, 0);
    let order: usize = alpha.iter().sum();
    let (predicted, slack, sharp, req) = lemma_table(lemma, d, order);
    if !req.dims.contains(&d) {
        return Err(SvpError::Precondition(format!("{} needs d in {:?}, got {d}", lemma.name(), req.dims)));
    }
    if profile.v_derivative_order < req.v_order {
        return Err(SvpError::Precondition(format!(
            "{} needs {} velocity derivatives, profile declares {}",
            lemma.name(),
            req.v_order,
            profile.v_derivative_order
        )));
    }
    if profile.moment_order < req.moment {
        return Err(SvpError::Precondition(format!(
            "{} needs spatial moments of order {}, profile declares {}",
            lemma.name(),
            req.moment,
            profile.moment_order
        )));
    }
    if req.analytic && !profile.analytic {
        return Err(SvpError::Precondition(format!("{} needs analytic data", lemma.name())));
    }
    if lemma == Lemma::FieldL2D2 && order < 2 {
        return Err(SvpError::Precondition("the L2 field bound needs |alpha| >= 2".into()));
    }
    if profile.bumps.is_empty() {
        return Err(SvpError::Precondition("empty profile".into()));
    }
    let times = log_times(window.0, window.1, opts.samples.max(8));
    let mut series = Vec::with_capacity(times.len());
    let mut sensitivity = 0.0f64;
    for &t in &times {
        let (value, sens) = match lemma {
            Lemma::GradPhiD3 | Lemma::GradPhiSharpD3 => {
                let s = field_sup(profile, &[0; 3][..d], t)?;
                (s.value, s.sensitivity)
            }
            Lemma::HessianPhiD3 => {
                let mut best = SupEstimate {
                    value: 0.0,
                    sensitivity: 0.0,
                };
                for k in 0..d {
                    let mut a = vec![0; d];
                    a[k] = 1;
                    let s = field_sup(profile, &a, t)?;
                    if s.value > best.value {
                        best = s;
                    }
                }
                (best.value, best.sensitivity)
            }
            Lemma::RhoSupD2 => {
                let s = rho_sup(profile, t)?;
                (s.value, s.sensitivity)
            }
            Lemma::FieldSupD2 | Lemma::FieldSupSharpD2 => {
                let s = field_sup(profile, &alpha, t)?;
                (s.value, s.sensitivity)
            }
            Lemma::FieldL2D2 => (profile.density(t).field_l2(&alpha)?.value, 0.0),
            Lemma::ForceSeriesD1 => {
                let s = potential_sup(profile, &[opts.n + 1], t)?;
                (bracket(t).powi(1 + opts.n as i32) * s.value, s.sensitivity)
            }
            Lemma::ForceGradientSeriesD1 => {
                let s = potential_sup(profile, &[opts.n + 2], t)?;
                (bracket(t).powi(2 + opts.n as i32) * s.value, s.sensitivity)
            }
        };
        series.push((t, value));
        sensitivity = sensitivity.max(sens.abs());
    }
    let fit = fit_decay(&series, window)?;
    let upper_ok = fit.exponent <= predicted + slack;
    let sharp_lower = sharp.map(|m| predicted - m);
    let lower_ok = sharp_lower.is_none_or(|lo| fit.exponent >= lo);
    Ok(LemmaReport {
        lemma: lemma.name(),
        predicted,
        slack,
        sharp_lower,
        fit,
        pass: upper_ok && lower_ok,
        series,
        sup_sensitivity: sensitivity,
    })
}

/// `int x^power (d^m1 g1)(x) (d^m2 g2)(x) dx` for `g(x) = exp(-(x - c)^2 / 2 s^2)`.
fn hermite_overlap(m1: usize, m2: usize, power: i32, g1: (f64, f64), g2: (f64, f64)) -> f64 {
    let deriv = |m: usize, (c, s): (f64, f64), x: f64| {
        let z = (x - c) / s;
        (-1.0 / s).powi(m as i32) * hermite_he(m, z) * (-0.5 * z * z).exp()
    };
    let lo = (g1.0 - 14.0 * g1.1).min(g2.0 - 14.0 * g2.1);
    let hi = (g1.0 + 14.0 * g1.1).max(g2.0 + 14.0 * g2.1);
    adaptive(
        |x| x.powi(power) * deriv(m1, g1, x) * deriv(m2, g2, x),
        lo,
        hi,
        1e-12,
        1e-300,
        4000,
    )
    .value
}

/// `||h||_{L^2_x H^2_v}` and `||x h||_{L^2}` from one-dimensional overlaps.
pub fn pl_rhs_norms(profile: &AnalyticProfile) -> (f64, f64) {
    let d = profile.d;
    let betas: Vec<Vec<usize>> = match d {
        1 => (0..=2).map(|a| vec![a]).collect(),
        2 => (0..=2).flat_map(|a| (0..=2 - a).map(move |b| vec![a, b])).collect(),
        _ => {
            let mut v = Vec::new();
            for a in 0..=2 {
                for b in 0..=2 - a {
                    for c in 0..=2 - a - b {
                        v.push(vec![a, b, c]);
                    }
                }
            }
            v
        }
    };
    let mut h2 = 0.0;
    let mut mom = 0.0;
    for p in &profile.bumps {
        for q in &profile.bumps {
            let amp = p.amplitude * q.amplitude;
            let gx = |k: usize, power: i32| hermite_overlap(0, 0, power, (p.x0[k], p.sigma_x), (q.x0[k], q.sigma_x));
            let gv = |k: usize, m: usize| hermite_overlap(m, m, 0, (p.v0[k], p.sigma_v), (q.v0[k], q.sigma_v));
            let x0: f64 = (0..d).map(|k| gx(k, 0)).product();
            for beta in &betas {
                let v: f64 = (0..d).map(|k| gv(k, beta[k])).product();
                h2 += amp * x0 * v;
            }
            let v0: f64 = (0..d).map(|k| gv(k, 0)).product();
            for k in 0..d {
                let xk: f64 = (0..d).map(|j| gx(j, if j == k { 2 } else { 0 })).product();
                mom += amp * xk * v0;
            }
        }
    }
    (h2.max(0.0).sqrt(), mom.max(0.0).sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct PlReport {
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: f64,
    /// `t^{1/3} lhs / rhs`.
    pub ratio: Vec<f64>,
    /// Fitted slope of `log ratio` against `log t` (absent if the left side vanishes).
    pub slope: Option<f64>,
    pub pass: bool,
}

/// Resolution of the inner supremum over velocities.
pub const PL_INNER_GRID: usize = 96;
const PL_OUTER_GRID: usize = 48;

/// Check boundedness of `t^{1/3} || sup_u |h(a, u - a/t) - h(a, u)| ||_{L^2_a}`
/// relative to `||h||_{L^2_x H^2_v} + ||x h||` (d = 2).
pub fn pl_inequality_check(profile: &AnalyticProfile, times: &[f64]) -> Result<PlReport> {
    if profile.d != 2 {
        return Err(SvpError::Precondition("the velocity-shift inequality is checked in d = 2".into()));
    }
    if profile.bumps.is_empty() {
        return Err(SvpError::Precondition("empty profile".into()));
    }
    let (h2, mom) = pl_rhs_norms(profile);
    let rhs = h2 + mom;
    let sx = profile.bumps.iter().map(|b| b.sigma_x).fold(0.0, f64::max);
    let sv = profile.bumps.iter().map(|b| b.sigma_v).fold(0.0, f64::max);
    let xr: f64 = profile.bumps.iter().flat_map(|b| b.x0.iter()).map(|c| c.abs()).fold(0.0, f64::max) + 7.0 * sx;
    let vr: f64 = profile.bumps.iter().flat_map(|b| b.v0.iter()).map(|c| c.abs()).fold(0.0, f64::max) + 7.0 * sv;
    let ha = 2.0 * xr / PL_OUTER_GRID as f64;
    let mut lhs = Vec::with_capacity(times.len());
    for &t in times {
        let ur = vr + xr / t;
        let hu = 2.0 * ur / (PL_INNER_GRID - 1) as f64;
        let cells: Vec<f64> = (0..PL_OUTER_GRID * PL_OUTER_GRID)
            .into_par_iter()
            .map(|k| {
                let a = [-xr + (k / PL_OUTER_GRID) as f64 * ha + 0.5 * ha, -xr + (k % PL_OUTER_GRID) as f64 * ha + 0.5 * ha];
                let g = |u: &[f64]| (profile.eval(&a, &[u[0] - a[0] / t, u[1] - a[1] / t]) - profile.eval(&a, u)).abs();
                let mut best = (0.0, [0.0; 2]);
                for i in 0..PL_INNER_GRID {
                    for j in 0..PL_INNER_GRID {
                        let u = [-ur + i as f64 * hu, -ur + j as f64 * hu];
                        let v = g(&u);
                        if v > best.0 {
                            best = (v, u);
                        }
                    }
                }
                // compass refinement of the inner supremum
                let (mut fy, mut y) = best;
                let mut step = hu;
                while step > 1e-8 * hu {
                    let mut moved = false;
                    for axis in 0..2 {
                        for sgn in [-1.0, 1.0] {
                            let mut z = y;
                            z[axis] += sgn * step;
                            let fz = g(&z);
                            if fz > fy {
                                fy = fz;
                                y = z;
                                moved = true;
                            }
                        }
                    }
                    if !moved {
                        step *= 0.5;
                    }
                }
                fy * fy
            })
            .collect();
        let s = crate::numerics::sum::pairwise(&cells) * ha * ha;
        lhs.push(s.sqrt());
    }
    let ratio: Vec<f64> = times.iter().zip(&lhs).map(|(t, l)| t.cbrt() * l / rhs).collect();
    let pts: Vec<(f64, f64)> = times.iter().cloned().zip(ratio.iter().cloned()).collect();
    let slope = if ratio.iter().all(|&r| r > 0.0) {
        Some(log_log_regression(&pts)?.0)
    } else {
        None
    };
    let pass = match slope {
        Some(s) => s <= 0.05,
        None => lhs.iter().all(|&l| l == 0.0),
    };
    Ok(PlReport {
        times: times.to_vec(),
        lhs,
        rhs,
        ratio,
        slope,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_closed_form_example() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = AnalyticProfile::gaussian(1, 1.0, s, s);
        let r = rho_exact(&h, &[0.0], 3.0);
        assert!((r - (PI / 20.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn precondition_table_is_enforced() {
        let mut h = AnalyticProfile::gaussian(3, 1.0, 1.0, 1.0);
        h.v_derivative_order = 0;
        let e = verify_lemma(Lemma::GradPhiSharpD3, &h, (10.0, 100.0), &LemmaOptions::default()).unwrap_err();
        assert_eq!(e.kind(), "precondition");
        let h1 = AnalyticProfile::gaussian(1, 1.0, 1.0, 1.0);
        let e = verify_lemma(Lemma::RhoSupD2, &h1, (10.0, 100.0), &LemmaOptions::default()).unwrap_err();
        assert_eq!(e.kind(), "precondition");
    }

    #[test]
    fn one_dimensional_potential_matches_kernel() {
        // phi = G_1 * rho with G_1 = e^{-|x|}/2, checked against direct quadrature
        let h = AnalyticProfile::gaussian(1, 1.0, 0.8, 0.6);
        let rho = h.density(0.7);
        let y = 0.4;
        let direct = adaptive(|x| 0.5 * (-(y - x).abs()).exp() * rho.eval(&[x]), -30.0, y, 1e-13, 0.0, 2000).value
            + adaptive(|x| 0.5 * (-(y - x).abs()).exp() * rho.eval(&[x]), y, 30.0, 1e-13, 0.0, 2000).value;
        let oracle = rho.potential_derivative(&[0], &[y]).unwrap().value;
        assert!((direct - oracle).abs() < 1e-10 * direct.abs());
    }
}

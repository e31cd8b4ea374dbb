//! Norms, moments, analytic energies, decay fits and the scattering monitor.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Result, SvpError};
use crate::numerics::fft::{self, FftNd};
use crate::numerics::{bracket, sum};
use crate::phase_space::PhaseProfile;
use crate::screened_poisson::ScreenedSolution;

/// Default truncation order of the analytic energies.
pub const N_MAX: usize = 24;
/// Fourier modes below this fraction of the largest one are treated as roundoff
/// when forming high-order derivative norms.
pub const SPECTRAL_NOISE_FLOOR: f64 = 1e-12;
/// Relative size of the last retained series term above which an energy is flagged.
pub const TRUNCATION_FLAG: f64 = 1e-8;

/// `max_v || h(., v) ||_{L^2_x}`.
pub fn z_norm(h: &PhaseProfile) -> f64 {
    let g = h.grid;
    let nvd = g.n_vel();
    let nxd = g.n_space();
    let wx = g.dx().powi(g.d as i32);
    (0..nvd)
        .into_par_iter()
        .map(|iv| {
            let sq: Vec<f64> = (0..nxd).map(|ix| h.values[ix * nvd + iv].powi(2)).collect();
            (sum::pairwise(&sq) * wx).sqrt()
        })
        .reduce(|| 0.0, f64::max)
}

/// `|| x h ||_{L^2_{x,v}}`.
pub fn moment(h: &PhaseProfile) -> f64 {
    let g = h.grid;
    let nvd = g.n_vel();
    let s = sum::pairwise_map(h.values.len(), |k| {
        let x = g.x_point(k / nvd);
        (x[0] * x[0] + x[1] * x[1]) * h.values[k] * h.values[k]
    });
    (s * g.cell_volume()).sqrt()
}

/// `max <x>^m |h|`.
pub fn weighted_sup(h: &PhaseProfile, m: f64) -> f64 {
    let g = h.grid;
    let nvd = g.n_vel();
    h.values
        .par_iter()
        .enumerate()
        .map(|(k, v)| {
            let x = g.x_point(k / nvd);
            (1.0 + x[0] * x[0] + x[1] * x[1]).powf(0.5 * m) * v.abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// `sum_{|beta| <= k} prod xi_i^{2 beta_i}` for `d <= 2` components.
fn multi_weight(xi: &[f64], k: usize) -> f64 {
    match xi.len() {
        1 => (0..=k).map(|j| xi[0].powi(2 * j as i32)).sum(),
        _ => {
            let mut s = 0.0;
            for b1 in 0..=k {
                for b2 in 0..=(k - b1) {
                    s += xi[0].powi(2 * b1 as i32) * xi[1].powi(2 * b2 as i32);
                }
            }
            s
        }
    }
}

/// Fourier transform of a profile over all phase-space axes, for spectral norms.
/// Velocity derivatives treat the profile as periodic on the velocity box.
pub struct Spectrum {
    d: usize,
    shape: Vec<usize>,
    kx: Vec<f64>,
    kv: Vec<f64>,
    coeffs: Vec<Complex64>,
    /// `dx^d dv^d / N`, the Parseval factor.
    scale: f64,
}

impl Spectrum {
    pub fn new(h: &PhaseProfile) -> Self {
        let g = h.grid;
        let shape = g.shape();
        let fft = FftNd::new(&shape);
        let mut coeffs = fft::to_complex(&h.values);
        fft.forward(&mut coeffs);
        Self {
            d: g.d,
            kx: fft::wavenumbers(g.nx, g.dx()),
            kv: fft::wavenumbers(g.nv, g.dv()),
            scale: g.cell_volume() / g.len() as f64,
            shape,
            coeffs,
        }
    }

    fn wavevector(&self, k: usize) -> ([f64; 2], [f64; 2]) {
        let mut idx = [0usize; 4];
        fft::unravel(k, &self.shape, &mut idx[..2 * self.d]);
        let mut x = [0.0; 2];
        let mut v = [0.0; 2];
        for a in 0..self.d {
            x[a] = self.kx[idx[a]];
            v[a] = self.kv[idx[self.d + a]];
        }
        (x, v)
    }

    /// `sqrt(scale * sum |h_hat|^2 w(kx, kv))`.
    pub fn weighted_norm<W: Fn(&[f64], &[f64]) -> f64 + Sync>(&self, w: W) -> f64 {
        let d = self.d;
        let s = sum::pairwise_map(self.coeffs.len(), |k| {
            let (x, v) = self.wavevector(k);
            self.coeffs[k].norm_sqr() * w(&x[..d], &v[..d])
        });
        (s * self.scale).sqrt()
    }

    /// `|| h ||_{H^{kx}_x H^{kv}_v}` (every mixed derivative up to the given orders).
    pub fn sobolev_mixed(&self, kx: usize, kv: usize) -> f64 {
        self.weighted_norm(|x, v| multi_weight(x, kx) * multi_weight(v, kv))
    }

    /// Isotropic `H^k_{x,v}` norm.
    pub fn sobolev_full(&self, k: usize) -> f64 {
        self.weighted_norm(|x, v| {
            let mut xi = [0.0; 4];
            xi[..x.len()].copy_from_slice(x);
            xi[x.len()..x.len() + v.len()].copy_from_slice(v);
            let r2: f64 = xi.iter().map(|a| a * a).sum();
            (0..=k).map(|j| r2.powi(j as i32)).sum::<f64>().max(1.0)
        })
    }

    /// Marginal power `sum |h_hat|^2` against the wavenumber of one axis
    /// (`0` = first spatial axis, `d` = first velocity axis), after zeroing
    /// modes below the relative noise floor.
    fn marginal_power(&self, axis: usize, floor: f64) -> Vec<f64> {
        let n = self.shape[axis];
        let inner: usize = self.shape[axis + 1..].iter().product();
        let peak = self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let cut = floor * peak;
        (0..n)
            .into_par_iter()
            .map(|j| {
                let terms: Vec<f64> = self
                    .coeffs
                    .chunks(n * inner)
                    .flat_map(|block| block[j * inner..(j + 1) * inner].iter())
                    .map(|z| if z.norm() < cut { 0.0 } else { z.norm_sqr() })
                    .collect();
                sum::pairwise(&terms)
            })
            .collect()
    }
}

pub fn sobolev_mixed(h: &PhaseProfile, kx: usize, kv: usize) -> Result<f64> {
    if kx + kv > 3 {
        return Err(SvpError::OrderTooHigh(kx + kv));
    }
    Ok(Spectrum::new(h).sobolev_mixed(kx, kv))
}

/// `z_norm + <t>^{-1/4} (||h||_{L^2_x H^2_v} + ||x h||)`.
pub fn zprime_norm(h: &PhaseProfile, t: f64) -> f64 {
    zprime_from_parts(z_norm(h), Spectrum::new(h).sobolev_mixed(0, 2), moment(h), t)
}

fn zprime_from_parts(z: f64, l2h2: f64, mom: f64, t: f64) -> f64 {
    z + bracket(t).powf(-0.25) * (l2h2 + mom)
}

/// Constant `C` of the discrete embedding `||h||_Z <= C ||h||_{L^2_x H^2_v}`
/// on this velocity grid: `sqrt(sum_eta 1/w(eta) / |velocity box|)`.
pub fn embedding_constant(grid: &crate::phase_space::PhaseGrid) -> f64 {
    let kv = fft::wavenumbers(grid.nv, grid.dv());
    let inv: f64 = match grid.d {
        1 => kv.iter().map(|&a| 1.0 / multi_weight(&[a], 2)).sum(),
        _ => kv
            .iter()
            .flat_map(|&a| kv.iter().map(move |&b| 1.0 / multi_weight(&[a, b], 2)))
            .sum(),
    };
    let vol = (2.0 * grid.lv).powi(grid.d as i32);
    (inv / vol).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    V,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AnalyticEnergy {
    pub value: f64,
    /// Last retained series term.
    pub last_term: f64,
    pub truncation_dominant: bool,
}

/// `sum_{n <= n_max} lambda^n / n! || d^{n+a} h ||_{L^2}` along one axis (d = 1).
pub fn analytic_energy(h: &PhaseProfile, lambda: f64, axis: Axis, a: usize, n_max: usize) -> Result<AnalyticEnergy> {
    analytic_energy_from(&Spectrum::new(h), lambda, axis, a, n_max)
}

pub fn analytic_energy_from(spec: &Spectrum, lambda: f64, axis: Axis, a: usize, n_max: usize) -> Result<AnalyticEnergy> {
    if spec.d != 1 {
        return Err(SvpError::Precondition("analytic energies are defined for d = 1".into()));
    }
    if lambda < 0.0 {
        return Err(SvpError::RadiusExhausted(lambda));
    }
    let (ax, ks) = match axis {
        Axis::X => (0, &spec.kx),
        Axis::V => (1, &spec.kv),
    };
    let power = spec.marginal_power(ax, SPECTRAL_NOISE_FLOOR);
    let mut total = 0.0;
    let mut last = 0.0;
    let mut coef = 1.0; // lambda^n / n!
    for n in 0..=n_max {
        if n > 0 {
            coef *= lambda / n as f64;
        }
        let m = (n + a) as i32;
        let terms: Vec<f64> = power.iter().zip(ks.iter()).map(|(p, k)| p * k.powi(2 * m)).collect();
        let norm = (sum::pairwise(&terms) * spec.scale).sqrt();
        last = coef * norm;
        total += last;
    }
    Ok(AnalyticEnergy {
        value: total,
        last_term: last,
        truncation_dominant: last > TRUNCATION_FLAG * total,
    })
}

/// Shrinking analyticity radius `R - C eps^2 <t>^{1/2}` (negative past the horizon).
pub fn lambda_schedule(r: f64, eps: f64, c: f64, t: f64) -> f64 {
    r - c * eps * eps * bracket(t).sqrt()
}

/// Sup norms of `d^alpha grad phi` for `|alpha| = 0, 1, 2` (max over components
/// and multi-indices) and the `L^2` norm of the full `|alpha| = 3` family.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldNorms {
    pub sup: [f64; 3],
    pub l2_order3: f64,
}

fn multi_indices(d: usize, order: usize) -> Vec<Vec<usize>> {
    match d {
        1 => vec![vec![order]],
        2 => (0..=order).map(|a| vec![a, order - a]).collect(),
        _ => unreachable!(),
    }
}

pub fn field_norms(sol: &ScreenedSolution) -> FieldNorms {
    let d = sol.grid().d;
    let mut out = FieldNorms::default();
    for order in 0..3 {
        for alpha in multi_indices(d, order) {
            for k in 0..d {
                let f = sol.gradient_derivative(&alpha, k).expect("order <= 3");
                out.sup[order] = out.sup[order].max(f.max_abs());
            }
        }
    }
    let mut s = 0.0;
    for alpha in multi_indices(d, 3) {
        for k in 0..d {
            s += sol.gradient_derivative(&alpha, k).expect("order <= 3").l2_norm().powi(2);
        }
    }
    out.l2_order3 = s.sqrt();
    out
}

/// One row of the diagnostics time series.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l2: f64,
    pub z_norm: f64,
    pub zprime_norm: f64,
    /// `L^2_x H^k_v`, k = 1, 2, 3.
    pub l2x_hv: [f64; 3],
    /// `H^k_x L^2_v`, k = 1, 2, 3.
    pub hx_l2v: [f64; 3],
    pub moment: f64,
    pub weighted_sup: f64,
    pub field: FieldNorms,
    pub lambda_t: f64,
    /// `E_x[h], E_x[d_x h], E_v[h], E_v[d_v h]` (d = 1 only).
    pub energies: Option<[f64; 4]>,
    pub energy_truncation_flag: bool,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 22] = [
        "t",
        "l2",
        "z_norm",
        "zprime_norm",
        "l2x_h1v",
        "l2x_h2v",
        "l2x_h3v",
        "h1x_l2v",
        "h2x_l2v",
        "h3x_l2v",
        "moment_x",
        "weighted_sup",
        "grad_phi_sup",
        "d1_grad_phi_sup",
        "d2_grad_phi_sup",
        "d3_grad_phi_l2",
        "lambda_t",
        "energy_x_a0",
        "energy_x_a1",
        "energy_v_a0",
        "energy_v_a1",
        "energy_truncation_flag",
    ];

    /// Values in column order; `None` for columns that do not apply.
    pub fn row(&self) -> Vec<Option<f64>> {
        let mut r = vec![
            Some(self.t),
            Some(self.l2),
            Some(self.z_norm),
            Some(self.zprime_norm),
        ];
        r.extend(self.l2x_hv.iter().map(|&x| Some(x)));
        r.extend(self.hx_l2v.iter().map(|&x| Some(x)));
        r.extend([Some(self.moment), Some(self.weighted_sup)]);
        r.extend(self.field.sup.iter().map(|&x| Some(x)));
        r.extend([Some(self.field.l2_order3), Some(self.lambda_t)]);
        match self.energies {
            Some(e) => r.extend(e.iter().map(|&x| Some(x))),
            None => r.extend([None; 4]),
        }
        r.push(self.energies.map(|_| if self.energy_truncation_flag { 1.0 } else { 0.0 }));
        r
    }
}

/// Parameters of the shrinking-radius energies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    pub radius: f64,
    pub epsilon: f64,
    pub c: f64,
    pub n_max: usize,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            radius: 1.0,
            epsilon: 0.0,
            c: 1.0,
            n_max: N_MAX,
        }
    }
}

/// Build a record for the filtered profile `gamma` at time `t`.
/// `field` carries the field norms of the same state, when they were computed.
pub fn record(gamma: &PhaseProfile, t: f64, field: FieldNorms, moment_order: f64, energy: &EnergyParams) -> DiagnosticsRecord {
    let spec = Spectrum::new(gamma);
    let z = z_norm(gamma);
    let mom = moment(gamma);
    let l2x_hv = [1, 2, 3].map(|k| spec.sobolev_mixed(0, k));
    let hx_l2v = [1, 2, 3].map(|k| spec.sobolev_mixed(k, 0));
    let lambda_t = lambda_schedule(energy.radius, energy.epsilon, energy.c, t);
    let mut flag = false;
    let energies = if gamma.grid.d == 1 && lambda_t >= 0.0 {
        let mut e = [0.0; 4];
        for (slot, (axis, a)) in [(Axis::X, 0), (Axis::X, 1), (Axis::V, 0), (Axis::V, 1)].into_iter().enumerate() {
            let r = analytic_energy_from(&spec, lambda_t, axis, a, energy.n_max).expect("d = 1, lambda >= 0");
            flag |= r.truncation_dominant;
            e[slot] = r.value;
        }
        Some(e)
    } else {
        None
    };
    DiagnosticsRecord {
        t,
        l2: gamma.l2_norm(),
        z_norm: z,
        zprime_norm: zprime_from_parts(z, l2x_hv[1], mom, t),
        l2x_hv,
        hx_l2v,
        moment: mom,
        weighted_sup: weighted_sup(gamma, moment_order),
        field,
        lambda_t,
        energies,
        energy_truncation_flag: flag,
    }
}

/// Least-squares power law `y ~ c t^p` over a time window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub t1: f64,
    pub t2: f64,
    pub exponent: f64,
    /// Half-width of the 95% confidence interval of the exponent.
    pub half_width: f64,
    pub residual_rms: f64,
    pub samples: usize,
}

/// Ordinary least squares of `ln y` on `ln t`: `(slope, intercept, slope std error, residual rms)`.
pub fn log_log_regression(points: &[(f64, f64)]) -> Result<(f64, f64, f64, f64)> {
    for &(t, y) in points {
        if !(y > 0.0 && t > 0.0) {
            return Err(SvpError::LogDomain { t, value: y });
        }
    }
    let n = points.len();
    if n < 2 {
        return Err(SvpError::FitWindow(format!("need at least 2 points, got {n}")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(SvpError::FitWindow("all times coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let rms = (ss / n as f64).sqrt();
    let se = if n > 2 { (ss / (n - 2) as f64 / sxx).sqrt() } else { 0.0 };
    Ok((slope, intercept, se, rms))
}

/// Fit the decay exponent of `series` restricted to `[t1, t2]`.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let (t1, t2) = window;
    if !(t1 > 0.0 && t2 >= 2.0 * t1) {
        return Err(SvpError::FitWindow(format!("window [{t1}, {t2}] spans less than one dyad")));
    }
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= t1 * (1.0 - 1e-12) && t <= t2 * (1.0 + 1e-12))
        .collect();
    if pts.len() < 8 {
        return Err(SvpError::FitWindow(format!("{} samples in window, need 8", pts.len())));
    }
    let (slope, _, se, rms) = log_log_regression(&pts)?;
    let tq = StudentsT::new(0.0, 1.0, (pts.len() - 2) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    Ok(DecayFit {
        t1,
        t2,
        exponent: slope,
        half_width: tq * se,
        residual_rms: rms,
        samples: pts.len(),
    })
}

/// Convergence of filtered snapshots at dyadic times towards a scattering state.
#[derive(Clone, Debug, Serialize)]
pub struct ScatteringReport {
    pub times: Vec<f64>,
    /// `|| gamma(t_{k+1}) - gamma(t_k) ||` in each norm.
    pub delta_l2: Vec<f64>,
    pub delta_h1: Vec<f64>,
    pub delta_z: Vec<f64>,
    /// Fitted exponents of the differences against `t_{k+1}` (absent if any difference vanishes).
    pub exponent_l2: Option<f64>,
    pub exponent_h1: Option<f64>,
    pub exponent_z: Option<f64>,
    /// Richardson estimate of the distance from the last snapshot to the limit.
    pub distance_l2: Option<f64>,
    pub distance_h1: Option<f64>,
    pub distance_z: Option<f64>,
}

fn difference(a: &PhaseProfile, b: &PhaseProfile) -> PhaseProfile {
    let mut out = a.clone();
    out.values.par_iter_mut().zip(&b.values).for_each(|(x, y)| *x -= y);
    out
}

pub fn scattering_monitor(snapshots: &[PhaseProfile]) -> Result<ScatteringReport> {
    if snapshots.len() < 4 {
        return Err(SvpError::InsufficientSnapshots {
            needed: 4,
            got: snapshots.len(),
        });
    }
    let times: Vec<f64> = snapshots.iter().map(|s| s.time).collect();
    for w in times.windows(2) {
        if !(w[0] > 0.0 && (w[1] / w[0] - 2.0).abs() < 1e-9) {
            return Err(SvpError::Precondition(format!("snapshot times {} and {} are not dyadic", w[0], w[1])));
        }
    }
    let mut delta_l2 = Vec::new();
    let mut delta_h1 = Vec::new();
    let mut delta_z = Vec::new();
    for w in snapshots.windows(2) {
        let diff = difference(&w[1], &w[0]);
        delta_l2.push(diff.l2_norm());
        delta_h1.push(Spectrum::new(&diff).sobolev_full(1));
        delta_z.push(z_norm(&diff));
    }
    let fit = |deltas: &[f64]| -> Option<f64> {
        let pts: Vec<(f64, f64)> = times[1..].iter().copied().zip(deltas.iter().copied()).collect();
        log_log_regression(&pts).ok().map(|r| r.0)
    };
    let richardson = |p: Option<f64>, deltas: &[f64]| -> Option<f64> {
        let p = p?;
        if p >= 0.0 {
            return None;
        }
        let q = 2f64.powf(p);
        Some(deltas.last()? * q / (1.0 - q))
    };
    let exponent_l2 = fit(&delta_l2);
    let exponent_h1 = fit(&delta_h1);
    let exponent_z = fit(&delta_z);
    Ok(ScatteringReport {
        distance_l2: richardson(exponent_l2, &delta_l2),
        distance_h1: richardson(exponent_h1, &delta_h1),
        distance_z: richardson(exponent_z, &delta_z),
        times,
        delta_l2,
        delta_h1,
        delta_z,
        exponent_l2,
        exponent_h1,
        exponent_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{Frame, PhaseGrid};

    fn gaussian(grid: PhaseGrid) -> PhaseProfile {
        PhaseProfile::from_fn(grid, Frame::Filtered, |x, v| (-(x[0] * x[0] + v[0] * v[0]) / 2.0).exp())
    }

    #[test]
    fn z_norm_of_gaussian() {
        let g = PhaseGrid::new(1, 128, 128, 8.0, 8.0).unwrap();
        let z = z_norm(&gaussian(g));
        // nearest velocity cell to 0 is v = dv/2
        let expected = std::f64::consts::PI.powf(0.25) * (-(g.dv() / 2.0).powi(2) / 2.0).exp();
        assert!((z - expected).abs() < 1e-12, "{z}");
    }

    #[test]
    fn single_x_mode_sobolev() {
        let g = PhaseGrid::new(1, 32, 32, std::f64::consts::PI, 4.0).unwrap();
        let k = 3.0;
        let h = PhaseProfile::from_fn(g, Frame::Filtered, |x, v| (k * x[0]).sin() * (-v[0] * v[0]).exp());
        let l2 = h.l2_norm();
        let h1 = sobolev_mixed(&h, 1, 0).unwrap();
        assert!((h1 - (1.0 + k * k).sqrt() * l2).abs() < 1e-12 * h1);
        assert_eq!(sobolev_mixed(&h, 2, 2).unwrap_err().kind(), "order_too_high");
    }

    #[test]
    fn energy_of_sine_is_exponential() {
        let g = PhaseGrid::new(1, 32, 32, std::f64::consts::PI, 4.0).unwrap();
        let k = 2.0;
        let h = PhaseProfile::from_fn(g, Frame::Filtered, |x, _| (k * x[0]).sin());
        let lam = 0.3;
        let e = analytic_energy(&h, lam, Axis::X, 0, N_MAX).unwrap();
        let expected = h.l2_norm() * (lam * k).exp();
        assert!((e.value - expected).abs() < 1e-12 * expected);
        assert!(!e.truncation_dominant);
        assert_eq!(analytic_energy(&h, -0.1, Axis::X, 0, N_MAX).unwrap_err().kind(), "radius_exhausted");
    }

    #[test]
    fn exact_power_law_fit() {
        let series: Vec<(f64, f64)> = (0..20).map(|i| 10f64.powf(1.0 + i as f64 / 19.0)).map(|t| (t, 2.5 * t.powi(-3))).collect();
        let fit = fit_decay(&series, (10.0, 100.0)).unwrap();
        assert!((fit.exponent + 3.0).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = series.iter().map(|&(t, _)| (t, 4.0)).collect();
        assert!(fit_decay(&flat, (10.0, 100.0)).unwrap().exponent.abs() < 1e-12);
        let mut bad = series.clone();
        bad[3].1 = 0.0;
        assert_eq!(fit_decay(&bad, (10.0, 100.0)).unwrap_err().kind(), "log_domain");
        assert_eq!(fit_decay(&series, (10.0, 15.0)).unwrap_err().kind(), "fit_window");
    }

    #[test]
    fn lambda_horizon() {
        assert_eq!(lambda_schedule(1.0, 0.0, 1.0, 1e6), 1.0);
        assert!((lambda_schedule(1.0, 0.1, 1.0, 0.0) - 0.99).abs() < 1e-15);
        let t = ((1.0f64 / 0.01).powi(4) - 1.0).sqrt();
        assert!(lambda_schedule(1.0, 0.1, 1.0, t).abs() < 1e-9);
    }

    #[test]
    fn monitor_needs_snapshots() {
        let g = PhaseGrid::new(1, 8, 8, 4.0, 4.0).unwrap();
        let p = PhaseProfile::zeros(g, Frame::Filtered);
        let e = scattering_monitor(&[p.clone(), p]).unwrap_err();
        assert_eq!(e.kind(), "insufficient_snapshots");
    }
}

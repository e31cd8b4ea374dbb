//! Multi-dimensional complex FFTs over flat row-major arrays.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse transforms along every axis of a row-major array.
///
/// The inverse is normalized (`inverse(forward(x)) == x`).
pub struct FftNd {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl FftNd {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self {
            shape: shape.to_vec(),
            forward,
            inverse,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        for axis in 0..self.shape.len() {
            self.transform_axis(data, axis, &self.forward[axis]);
        }
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        for axis in 0..self.shape.len() {
            self.transform_axis(data, axis, &self.inverse[axis]);
        }
        let scale = 1.0 / self.len() as f64;
        data.par_iter_mut().for_each(|z| *z *= scale);
    }

    /// Transform a subset of axes only (the others are left untouched).
    pub fn forward_axes(&self, data: &mut [Complex64], axes: &[usize]) {
        for &axis in axes {
            self.transform_axis(data, axis, &self.forward[axis]);
        }
    }

    pub fn inverse_axes(&self, data: &mut [Complex64], axes: &[usize]) {
        let mut count = 1usize;
        for &axis in axes {
            self.transform_axis(data, axis, &self.inverse[axis]);
            count *= self.shape[axis];
        }
        let scale = 1.0 / count as f64;
        data.par_iter_mut().for_each(|z| *z *= scale);
    }

    fn transform_axis(&self, data: &mut [Complex64], axis: usize, plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len());
        let n = self.shape[axis];
        let inner: usize = self.shape[axis + 1..].iter().product();
        let block = n * inner;
        if inner == 1 {
            data.par_chunks_mut(block).for_each(|line| plan.process(line));
            return;
        }
        data.par_chunks_mut(block).for_each(|chunk| {
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            for j in 0..inner {
                for (i, z) in line.iter_mut().enumerate() {
                    *z = chunk[i * inner + j];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (i, z) in line.iter().enumerate() {
                    chunk[i * inner + j] = *z;
                }
            }
        });
    }
}

/// Angular wavenumbers of an `n`-point periodic grid with spacing `h`, in FFT order.
///
/// The Nyquist entry (for even `n`) is reported as `+pi/h`.
pub fn wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let base = 2.0 * PI / (n as f64 * h);
    (0..n)
        .map(|j| {
            if j <= n / 2 {
                j as f64 * base
            } else {
                (j as f64 - n as f64) * base
            }
        })
        .collect()
}

/// Spectral multiplier of `(d/dx)^order` for one FFT index, with the Nyquist
/// mode of odd derivatives removed so real data stay real.
pub fn derivative_symbol(j: usize, n: usize, k: f64, order: u32) -> Complex64 {
    if order == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if n % 2 == 0 && j == n / 2 && order % 2 == 1 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, k).powu(order)
}

pub fn to_complex(values: &[f64]) -> Vec<Complex64> {
    values.par_iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

pub fn real_part(values: &[Complex64]) -> Vec<f64> {
    values.par_iter().map(|z| z.re).collect()
}

/// Split a flat row-major index into per-axis indices.
#[inline]
pub fn unravel(mut flat: usize, shape: &[usize], out: &mut [usize]) {
    for axis in (0..shape.len()).rev() {
        out[axis] = flat % shape[axis];
        flat /= shape[axis];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_2d() {
        let shape = [8usize, 16];
        let fft = FftNd::new(&shape);
        let orig: Vec<Complex64> = (0..128)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn single_mode_lands_in_one_bin() {
        let n = 16;
        let h = 0.5;
        let ks = wavenumbers(n, h);
        let fft = FftNd::new(&[n]);
        let mut data: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new((ks[3] * i as f64 * h).cos(), 0.0))
            .collect();
        fft.forward(&mut data);
        assert!((data[3].re - n as f64 / 2.0).abs() < 1e-12);
        assert!((data[n - 3].re - n as f64 / 2.0).abs() < 1e-12);
        let rest: f64 = data
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != 3 && *j != n - 3)
            .map(|(_, z)| z.norm())
            .sum();
        assert!(rest < 1e-12);
    }
}

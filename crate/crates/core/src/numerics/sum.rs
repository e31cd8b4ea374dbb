use rayon::prelude::*;

const LEAF: usize = 256;

/// Pairwise (tree) summation. The split points depend only on the length,
/// so the result is identical regardless of the rayon pool size.
pub fn pairwise(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    let (a, b) = xs.split_at(mid);
    if xs.len() >= 1 << 15 {
        let (sa, sb) = rayon::join(|| pairwise(a), || pairwise(b));
        sa + sb
    } else {
        pairwise(a) + pairwise(b)
    }
}

/// Pairwise sum of `f(i)` for `i in 0..n`, evaluated in parallel.
pub fn pairwise_map<F: Fn(usize) -> f64 + Sync>(n: usize, f: F) -> f64 {
    let terms: Vec<f64> = (0..n).into_par_iter().map(&f).collect();
    pairwise(&terms)
}

pub fn sum_squares(xs: &[f64]) -> f64 {
    pairwise_map(xs.len(), |i| xs[i] * xs[i])
}

pub fn max_abs(xs: &[f64]) -> f64 {
    xs.par_iter().map(|x| x.abs()).reduce(|| 0.0, f64::max)
}

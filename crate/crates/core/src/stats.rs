//! Small sample statistics used by the adjudication and ensemble checks.

use rand::Rng;

use crate::real::compensated_sum;

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(xs.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = compensated_sum(xs.iter().map(|&x| (x - mean) * (x - mean))) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn rms(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    (compensated_sum(xs.iter().map(|&x| x * x)) / xs.len() as f64).sqrt()
}

/// Least-squares slope of ln y against ln x.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "log_log_slope: length mismatch");
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Draws `n_boot` resamples (with replacement) of `0..n` and hands each index
/// set to `stat`, returning the statistics in draw order.
pub fn bootstrap<R: Rng, S>(
    rng: &mut R,
    n: usize,
    n_boot: usize,
    mut stat: impl FnMut(&[usize]) -> S,
) -> Vec<S> {
    let mut idx = vec![0usize; n];
    (0..n_boot)
        .map(|_| {
            for slot in idx.iter_mut() {
                *slot = rng.gen_range(0..n);
            }
            stat(&idx)
        })
        .collect()
}

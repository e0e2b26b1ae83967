//! Noncommutative Taylor expansion of f(ρ + ε) and the entropy-production
//! term Σ built from it.
//!
//! The order-n term of the expansion is
//!
//!   f(n, ρ, ε) = Σ_{k_1..k_n} f^(k_1+…+k_n+n)(ρ) / ((k_1+1)(k_1+k_2+2)⋯(k_1+…+k_n+n))
//!                · ad_ρ^{k_1}(ε)/k_1! ⋯ ad_ρ^{k_n}(ε)/k_n!
//!
//! and for f(z) = −z ln z the second-order term with ε ≈ √η B dI gives
//!
//!   Σ(ρ) = η Σ_{k_1,k_2} C(k_1+k_2, k_1) / ((k_1+1)(k_1+k_2+2))
//!            · tr{ (−1/ρ)^{k_1+k_2+1} ad_ρ^{k_1}(B) ad_ρ^{k_2}(B) }.
//!
//! The series is summed in shells K = k_1 + k_2. In the eigenbasis of ρ the
//! shell K contribution of an eigenpair (i, j) is a geometric term in
//! (λ_j − λ_i)/λ_i, so the series converges only when every eigenvalue ratio of
//! ρ is below 2. [`sigma_spectral_oracle`] evaluates the same quantity in closed
//! form through divided differences of ln.

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::opalg::{
    ad_powers, ensure_faithful, hermitian_eig, ComplexMatrix, DensityMatrix, SpectralDecomposition,
};
use crate::real::{compensated_sum, Real};

/// Orders above this use log-magnitude arithmetic for factorials.
pub const LOG_GUARD_ORDER: usize = 20;

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

fn factorial(n: usize) -> f64 {
    (2..=n).map(|i| i as f64).product()
}

/// Binomial coefficient in floating point, through logarithms above the guard order.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    if n <= LOG_GUARD_ORDER {
        factorial(n) / (factorial(k) * factorial(n - k))
    } else {
        (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k))
            .exp()
            .round()
    }
}

/// ln|f^(m)(z)| and the sign of f^(m)(z) for f(z) = −z ln z.
pub fn entropy_derivative_log(m: usize, z: f64) -> (f64, f64) {
    match m {
        0 => {
            let v = -z * z.ln();
            (v.abs().ln(), v.signum())
        }
        1 => {
            let v = -(1.0 + z.ln());
            (v.abs().ln(), v.signum())
        }
        _ => {
            let sign = if (m - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
            (ln_factorial(m - 2) - (m - 1) as f64 * z.ln(), sign)
        }
    }
}

/// m-th derivative of f(z) = −z ln z:
/// f⁰ = −z ln z, f¹ = −(1 + ln z), f^m = (m−2)! (−1/z)^{m−1} for m ≥ 2.
pub fn entropy_derivative<T: Real>(m: usize, z: T) -> Result<T> {
    if !(z > T::zero()) {
        return Err(Error::NotFaithful {
            min_eigenvalue: z.as_f64(),
            floor: 0.0,
        });
    }
    let v = match m {
        0 => -z * z.ln(),
        1 => -(T::one() + z.ln()),
        _ if m <= LOG_GUARD_ORDER => T::lit(factorial(m - 2)) * (-z.recip()).powi((m - 1) as i32),
        _ => {
            let (ln_mag, sign) = entropy_derivative_log(m, z.as_f64());
            T::lit(sign) * T::lit(ln_mag).exp()
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::OrderOverflow {
            order: m,
            z: z.as_f64(),
        })
    }
}

/// Scalar derivatives of the function being expanded.
pub trait DerivativeTable<T> {
    fn derivative(&self, m: usize, z: T) -> Result<T>;
}

/// f(z) = −z ln z
#[derive(Debug, Clone, Copy, Default)]
pub struct EntropyFunction;

impl<T: Real> DerivativeTable<T> for EntropyFunction {
    fn derivative(&self, m: usize, z: T) -> Result<T> {
        entropy_derivative(m, z)
    }
}

/// f^(m)(ρ) through the spectrum.
fn derivative_matrix<T: Real, F: DerivativeTable<T>>(
    spec: &SpectralDecomposition<T>,
    f: &F,
    m: usize,
) -> Result<ComplexMatrix<T>> {
    let vals = spec
        .eigenvalues
        .iter()
        .map(|&x| f.derivative(m, x))
        .collect::<Result<Vec<T>>>()?;
    let shifted = SpectralDecomposition {
        eigenvalues: vals,
        eigenvectors: spec.eigenvectors.clone(),
    };
    Ok(shifted.reconstruct())
}

/// One order of the expansion with its truncation diagnostics.
#[derive(Debug, Clone)]
pub struct PaychaTerm<T> {
    pub matrix: ComplexMatrix<T>,
    /// Max-norm of the contribution of each total order k_1 + … + k_n.
    pub shell_norms: Vec<T>,
    pub converged: bool,
}

/// The order-n term f(n, ρ, ε) truncated at k_1 + … + k_n ≤ `k_max`.
pub fn paycha_term<T: Real, F: DerivativeTable<T>>(
    rho: &ComplexMatrix<T>,
    eps: &ComplexMatrix<T>,
    n: usize,
    k_max: usize,
    f: &F,
) -> Result<PaychaTerm<T>> {
    paycha_term_filtered(rho, eps, n, k_max, f, |_| true)
}

/// As [`paycha_term`], keeping only the index tuples (k_1, …, k_n) accepted by `keep`.
pub fn paycha_term_filtered<T: Real, F: DerivativeTable<T>>(
    rho: &ComplexMatrix<T>,
    eps: &ComplexMatrix<T>,
    n: usize,
    k_max: usize,
    f: &F,
    keep: impl Fn(&[usize]) -> bool,
) -> Result<PaychaTerm<T>> {
    rho.ensure_same_dim(eps)?;
    let spec = hermitian_eig(rho)?;
    ensure_faithful(&spec, Tolerances::default().faithful_floor)?;
    if n == 0 {
        return Ok(PaychaTerm {
            matrix: derivative_matrix(&spec, f, 0)?,
            shell_norms: vec![],
            converged: true,
        });
    }
    let ads = ad_powers(rho, eps, k_max)?;
    let scaled: Vec<ComplexMatrix<T>> = ads
        .iter()
        .enumerate()
        .map(|(k, a)| a.scale_real(T::lit(1.0 / factorial(k))))
        .collect();

    let d = rho.dim();
    let mut shells = vec![ComplexMatrix::zeros(d); k_max + 1];
    let mut ks = vec![0usize; n];
    loop {
        let total: usize = ks.iter().sum();
        if total <= k_max && keep(&ks) {
            let mut denom = 1.0;
            let mut partial = 0;
            for (j, &k) in ks.iter().enumerate() {
                partial += k;
                denom *= (partial + j + 1) as f64;
            }
            let mut prod = derivative_matrix(&spec, f, total + n)?.scale_real(T::lit(1.0 / denom));
            for &k in &ks {
                prod = &prod * &scaled[k];
            }
            shells[total] += &prod;
        }
        // next composition in lexicographic order, skipping totals above k_max
        let mut i = n;
        loop {
            if i == 0 {
                let matrix = shells
                    .iter()
                    .fold(ComplexMatrix::zeros(d), |acc, s| &acc + s);
                let shell_norms: Vec<T> = shells.iter().map(|s| s.max_norm()).collect();
                let converged = shell_norms
                    .last()
                    .is_none_or(|&s| s <= T::lit(Tolerances::default().conv_tol));
                return Ok(PaychaTerm {
                    matrix,
                    shell_norms,
                    converged,
                });
            }
            i -= 1;
            ks[i] += 1;
            if ks.iter().sum::<usize>() <= k_max {
                break;
            }
            ks[i] = 0;
        }
    }
}

/// Which martingale coefficient B enters Σ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SigmaVariant {
    /// B = Lρ + ρL†
    #[serde(rename = "paper")]
    PaperForm,
    /// B = Lρ + ρL† − λρ with λ = tr(ρ(L + L†))
    #[serde(rename = "lambda")]
    WithLambda,
}

impl SigmaVariant {
    pub const ALL: [SigmaVariant; 2] = [SigmaVariant::PaperForm, SigmaVariant::WithLambda];

    pub fn name(self) -> &'static str {
        match self {
            SigmaVariant::PaperForm => "paper",
            SigmaVariant::WithLambda => "lambda",
        }
    }
}

impl std::fmt::Display for SigmaVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The coefficient C(k_1+k_2, k_1) / ((k_1+1)(k_1+k_2+2)) of the Σ series.
pub fn sigma_coefficient(k1: usize, k2: usize) -> f64 {
    let k = k1 + k2;
    binomial(k, k1) / (((k1 + 1) * (k + 2)) as f64)
}

/// Truncation and coefficient settings for the Σ series.
#[derive(Debug, Clone, Copy)]
pub struct SeriesOptions {
    pub k_max: usize,
    pub conv_tol: f64,
    pub faithful_floor: f64,
    /// Shell coefficient for (k_1, k_2); [`sigma_coefficient`] unless perturbed.
    pub coefficient: fn(usize, usize) -> f64,
}

impl SeriesOptions {
    pub fn from_tolerances(tol: &Tolerances) -> Self {
        Self {
            k_max: tol.k_max,
            conv_tol: tol.conv_tol,
            faithful_floor: tol.faithful_floor,
            coefficient: sigma_coefficient,
        }
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self::from_tolerances(&Tolerances::default())
    }
}

/// Truncated Σ series with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaEstimate<T> {
    pub variant: SigmaVariant,
    pub k_max: usize,
    /// Contribution of each shell K = k_1 + k_2.
    pub shells: Vec<T>,
    /// Cumulative sums over shells 0..=K.
    pub partial_sums: Vec<T>,
    /// The K = k_max partial sum.
    pub value: T,
    pub converged: bool,
    /// Geometric extrapolation of the omitted shells (infinite if not contracting).
    pub tail_estimate: T,
    pub diverged: bool,
    /// Spectral oracle, attached when the series diverges.
    pub oracle: Option<T>,
}

/// Diverged once shell magnitudes grow for this many consecutive shells.
const DIVERGENCE_RUN: usize = 3;

impl<T: Real> SigmaEstimate<T> {
    fn from_shells(variant: SigmaVariant, shells: Vec<T>, conv_tol: f64) -> Self {
        let mut partial_sums = Vec::with_capacity(shells.len());
        let mut acc = crate::real::CompensatedSum::new();
        for &s in &shells {
            acc.add(s);
            partial_sums.push(acc.value());
        }
        let k_max = shells.len() - 1;
        let value = partial_sums[k_max];
        let tol = T::lit(conv_tol);
        let converged = k_max >= 1 && (partial_sums[k_max] - partial_sums[k_max - 1]).abs() <= tol;

        let mut run = 0;
        let mut diverged = !value.is_finite();
        for w in shells.windows(2) {
            if w[1].abs() > w[0].abs() && w[1].abs() > tol {
                run += 1;
                if run >= DIVERGENCE_RUN {
                    diverged = true;
                }
            } else {
                run = 0;
            }
        }

        let tail_estimate = if k_max == 0 {
            T::infinity()
        } else {
            let (a, b) = (shells[k_max - 1].abs(), shells[k_max].abs());
            if b == T::zero() {
                T::zero()
            } else if b < a {
                let r = b / a;
                b * r / (T::one() - r)
            } else {
                T::infinity()
            }
        };
        Self {
            variant,
            k_max,
            shells,
            partial_sums,
            value,
            converged,
            tail_estimate,
            diverged,
            oracle: None,
        }
    }

    /// Shell K with K ≥ 1 summed, i.e. everything beyond the commuting part.
    pub fn noncommuting_part(&self) -> T {
        compensated_sum(self.shells.iter().skip(1).copied())
    }
}

/// B for the monitored operator `l` in the given variant.
pub fn martingale_operator<T: Real>(
    rho: &ComplexMatrix<T>,
    l: &ComplexMatrix<T>,
    variant: SigmaVariant,
) -> ComplexMatrix<T> {
    let ld = l.adjoint();
    let b = &(l * rho) + &(rho * &ld);
    match variant {
        SigmaVariant::PaperForm => b,
        SigmaVariant::WithLambda => {
            let lambda = (rho.trace_product(l) + rho.trace_product(&ld)).re;
            let mut b = b;
            b.axpy_real(-lambda, rho);
            b
        }
    }
}

fn faithful_spectrum<T: Real>(
    rho: &DensityMatrix<T>,
    floor: f64,
) -> Result<SpectralDecomposition<T>> {
    let spec = rho.spectrum()?;
    ensure_faithful(&spec, floor)?;
    Ok(spec)
}

/// Shell sums of the Σ series for an explicit B, before the η prefactor.
fn series_shells<T: Real>(
    rho: &ComplexMatrix<T>,
    spec: &SpectralDecomposition<T>,
    b: &ComplexMatrix<T>,
    opts: &SeriesOptions,
) -> Result<Vec<T>> {
    let k_max = opts.k_max;
    let ads = ad_powers(rho, b, k_max)?;
    let mut shells = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        // (−1/ρ)^{K+1}
        let p = spec.map(|x| (-x.recip()).powi((k + 1) as i32));
        let terms = (0..=k).map(|k1| {
            let k2 = k - k1;
            let t = (&p * &ads[k1]).trace_product(&ads[k2]).re;
            T::lit((opts.coefficient)(k1, k2)) * t
        });
        shells.push(compensated_sum(terms));
    }
    Ok(shells)
}

/// Σ series for an explicit martingale operator B.
pub fn sigma_series_for_operator<T: Real>(
    rho: &DensityMatrix<T>,
    b: &ComplexMatrix<T>,
    eta: T,
    variant: SigmaVariant,
    opts: &SeriesOptions,
) -> Result<SigmaEstimate<T>> {
    rho.matrix().ensure_same_dim(b)?;
    let spec = faithful_spectrum(rho, opts.faithful_floor)?;
    let shells: Vec<T> = series_shells(rho.matrix(), &spec, b, opts)?
        .into_iter()
        .map(|s| s * eta)
        .collect();
    let mut est = SigmaEstimate::from_shells(variant, shells, opts.conv_tol);
    if est.diverged {
        est.oracle = Some(sigma_spectral_oracle(rho, b, eta)?);
    }
    Ok(est)
}

/// Σ(ρ) for collapse operator `l` and efficiency `eta`, shells 0..=k_max.
pub fn sigma_series<T: Real>(
    rho: &DensityMatrix<T>,
    l: &ComplexMatrix<T>,
    eta: T,
    k_max: usize,
    variant: SigmaVariant,
) -> Result<SigmaEstimate<T>> {
    sigma_series_with(
        rho,
        l,
        eta,
        variant,
        &SeriesOptions::default().with_k_max(k_max),
    )
}

pub fn sigma_series_with<T: Real>(
    rho: &DensityMatrix<T>,
    l: &ComplexMatrix<T>,
    eta: T,
    variant: SigmaVariant,
    opts: &SeriesOptions,
) -> Result<SigmaEstimate<T>> {
    let b = martingale_operator(rho.matrix(), l, variant);
    sigma_series_for_operator(rho, &b, eta, variant, opts)
}

/// −(η/2) Σ_ij |B̃_ij|² g_ij with g_ij = (ln λ_i − ln λ_j)/(λ_i − λ_j) and
/// g_ii = 1/λ_i, in the eigenbasis of ρ.
pub fn sigma_spectral_oracle<T: Real>(
    rho: &DensityMatrix<T>,
    b: &ComplexMatrix<T>,
    eta: T,
) -> Result<T> {
    rho.matrix().ensure_same_dim(b)?;
    let spec = faithful_spectrum(rho, Tolerances::default().faithful_floor)?;
    let asym = b.asymmetry();
    if asym > T::lit(Tolerances::default().eig_hermitian) * b.max_norm().max(T::one()) {
        return Err(Error::NotHermitian {
            asymmetry: asym.as_f64(),
            tol: Tolerances::default().eig_hermitian,
        });
    }
    Ok(spectral_quadratic(&spec, b) * eta * T::lit(-0.5))
}

/// The oracle for a spectrum already known to be faithful.
pub fn sigma_oracle_from_spectrum<T: Real>(
    spec: &SpectralDecomposition<T>,
    b: &ComplexMatrix<T>,
    eta: T,
) -> T {
    spectral_quadratic(spec, b) * eta * T::lit(-0.5)
}

/// Σ_ij |B̃_ij|² g_ij
fn spectral_quadratic<T: Real>(spec: &SpectralDecomposition<T>, b: &ComplexMatrix<T>) -> T {
    let bt = spec.to_eigenbasis(b);
    let lam = &spec.eigenvalues;
    let n = lam.len();
    let mut acc = crate::real::CompensatedSum::new();
    for i in 0..n {
        for j in 0..n {
            acc.add(bt[(i, j)].norm_sqr() * log_divided_difference(lam[i], lam[j]));
        }
    }
    acc.value()
}

/// (ln a − ln b)/(a − b), and 1/a on the diagonal.
pub fn log_divided_difference<T: Real>(a: T, b: T) -> T {
    if a == b {
        return a.recip();
    }
    // ln(a/b) = ln_1p((a − b)/b) keeps precision for nearby eigenvalues
    ((a - b) / b).ln_1p() / (a - b)
}

/// Σ for the paper-form B evaluated through the regrouped identity
///
///   tr{ρ^{−K−1} ad^{k1}(B) ad^{k2}(B)} = tr{ρ^{−K−1} ad^{k1}(L) ρ² ad^{k2}(L†)}
///     + tr{ρ^{−K} (ad^{k1}(L) ρ ad^{k2}(L) + ad^{k1}(L†) ρ ad^{k2}(L†))}
///     + tr{ρ^{−K+1} ad^{k1}(L†) ad^{k2}(L)}
///
/// which follows from ad^k(Lρ + ρL†) = ad^k(L)ρ + ρ ad^k(L†).
pub fn sigma_regrouped<T: Real>(
    rho: &DensityMatrix<T>,
    l: &ComplexMatrix<T>,
    eta: T,
    k_max: usize,
) -> Result<SigmaEstimate<T>> {
    let opts = SeriesOptions::default().with_k_max(k_max);
    let r = rho.matrix();
    r.ensure_same_dim(l)?;
    let spec = faithful_spectrum(rho, opts.faithful_floor)?;
    let ld = l.adjoint();
    let ad_l = ad_powers(r, l, k_max)?;
    let ad_ld = ad_powers(r, &ld, k_max)?;
    let r2 = r * r;
    let mut shells = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let kk = k as i32;
        let p_outer = spec.map(|x| x.powi(-kk - 1));
        let p_mid = spec.map(|x| x.powi(-kk));
        let p_inner = spec.map(|x| x.powi(-kk + 1));
        let sign = if k % 2 == 0 { -T::one() } else { T::one() };
        let terms = (0..=k).map(|k1| {
            let k2 = k - k1;
            let t1 = (&(&p_outer * &ad_l[k1]) * &r2).trace_product(&ad_ld[k2]);
            let t2 = (&(&p_mid * &ad_l[k1]) * r).trace_product(&ad_l[k2]);
            let t3 = (&(&p_mid * &ad_ld[k1]) * r).trace_product(&ad_ld[k2]);
            let t4 = (&p_inner * &ad_ld[k1]).trace_product(&ad_l[k2]);
            T::lit(sigma_coefficient(k1, k2)) * (t1 + t2 + t3 + t4).re
        });
        shells.push(compensated_sum(terms) * sign * eta);
    }
    let mut est = SigmaEstimate::from_shells(SigmaVariant::PaperForm, shells, opts.conv_tol);
    if est.diverged {
        est.oracle = Some(sigma_spectral_oracle(
            rho,
            &martingale_operator(r, l, SigmaVariant::PaperForm),
            eta,
        )?);
    }
    Ok(est)
}

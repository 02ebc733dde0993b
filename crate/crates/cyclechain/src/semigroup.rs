//! The fractional heat semigroup on the cycle.
//!
//! The cycle Laplacian L has eigenvalues lambda_k = 4 sin^2(pi k / m) with
//! Fourier eigenvectors, so exp(-alpha t L^beta) is computed exactly in the
//! frequency domain: each coefficient is damped by exp(-alpha t lambda_k^beta)
//! and the kernel is the inverse transform of those factors. Everything here
//! is O(m^2) dense arithmetic; the grids this crate targets are small enough
//! that no FFT is warranted.

use num_complex::Complex;

use crate::circle::{unit_roots, CycleIndex, CyclePmf, CycleSize};
use crate::error::{Error, Result};
use crate::float::Float;
use crate::target::GeneratorMatrix;

/// Entries of a computed kernel may undershoot zero by rounding; anything
/// below this floor is treated as a genuine positivity violation.
pub const KERNEL_FLOOR: f64 = -1e-10;

/// Arguments beyond this make exp underflow anyway; the decay factor is
/// short-circuited to zero to avoid feeding huge magnitudes to exp.
const EXP_ARG_MAX: f64 = 700.0;

/// Parameters of the fractional diffusion: grid size, rate scale alpha > 0,
/// fractional order beta in (0, 1], and a nonnegative time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionParams<F> {
    m: CycleSize,
    alpha: F,
    beta: F,
    t: F,
}

impl<F: Float> DiffusionParams<F> {
    /// Validate the parameter set.
    pub fn new(m: CycleSize, alpha: F, beta: F, t: F) -> Result<Self> {
        check_alpha(alpha)?;
        check_beta(beta)?;
        check_time(t)?;
        Ok(DiffusionParams { m, alpha, beta, t })
    }

    pub fn size(&self) -> CycleSize {
        self.m
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    pub fn beta(&self) -> F {
        self.beta
    }

    pub fn t(&self) -> F {
        self.t
    }

    /// The same diffusion evaluated at a different time.
    pub fn at_time(&self, t: F) -> Result<Self> {
        Self::new(self.m, self.alpha, self.beta, t)
    }
}

pub(crate) fn check_alpha<F: Float>(alpha: F) -> Result<()> {
    if !(alpha > F::zero()) || !alpha.is_finite() {
        return Err(Error::InvalidAlpha(alpha.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

pub(crate) fn check_beta<F: Float>(beta: F) -> Result<()> {
    if !(beta > F::zero()) || !(beta <= F::one()) {
        return Err(Error::InvalidBeta(beta.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

pub(crate) fn check_time<F: Float>(t: F) -> Result<()> {
    if !(t >= F::zero()) || !t.is_finite() {
        return Err(Error::InvalidTime(t.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

/// Eigenvalues of the cycle Laplacian, in frequency order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<F> {
    m: CycleSize,
    lambda: Vec<F>,
}

/// Compute the Laplacian spectrum lambda_k = 4 sin^2(pi k / m).
///
/// Values for k > m/2 are mirrored from m - k rather than recomputed, so
/// the symmetry lambda_k = lambda_{m-k} holds bitwise.
pub fn spectrum<F: Float>(m: CycleSize) -> Spectrum<F> {
    let n = m.get();
    let mf = F::from_count(n);
    let four = F::cast(4.0);
    let mut lambda = vec![F::zero(); n];
    for (k, slot) in lambda.iter_mut().enumerate().take(n / 2 + 1) {
        let s = (F::PI() * F::from_count(k) / mf).sin();
        *slot = four * s * s;
    }
    for k in n / 2 + 1..n {
        lambda[k] = lambda[n - k];
    }
    Spectrum { m, lambda }
}

impl<F: Float> Spectrum<F> {
    pub fn size(&self) -> CycleSize {
        self.m
    }

    /// Eigenvalue at frequency `k`, reduced mod m.
    pub fn eigenvalue(&self, k: i64) -> F {
        self.lambda[self.m.wrap(k).get()]
    }

    /// All eigenvalues in frequency order.
    pub fn as_slice(&self) -> &[F] {
        &self.lambda
    }

    /// The smallest nonzero eigenvalue lambda_1, which controls mixing.
    pub fn lambda_star(&self) -> F {
        self.lambda[1]
    }

    /// Eigenvalues raised to the power beta, with 0^beta defined as 0.
    pub fn fractional_powers(&self, beta: F) -> Vec<F> {
        self.lambda
            .iter()
            .map(|&l| if l == F::zero() { F::zero() } else { l.powf(beta) })
            .collect()
    }
}

/// The factor exp(-alpha t lambda^beta) applied to one frequency.
pub(crate) fn decay_factor<F: Float>(alpha: F, t: F, lambda_beta: F) -> F {
    let x = alpha * t * lambda_beta;
    if x > F::cast(EXP_ARG_MAX) {
        F::zero()
    } else {
        (-x).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum KernelData<F> {
    /// Row of state 0; row r is the same vector rotated by r.
    Circulant(Vec<F>),
    /// Dense row-major storage.
    Dense(Vec<F>),
}

/// A stochastic matrix over the cycle states.
///
/// Spectral kernels are circulant and store one row; uniformized
/// exponentials of a general reversible generator store all of them.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel<F> {
    m: CycleSize,
    data: KernelData<F>,
}

impl<F: Float> TransitionKernel<F> {
    pub(crate) fn circulant(m: CycleSize, first_row: Vec<F>) -> Self {
        debug_assert_eq!(m.get(), first_row.len());
        TransitionKernel { m, data: KernelData::Circulant(first_row) }
    }

    pub(crate) fn dense(m: CycleSize, rows: Vec<F>) -> Self {
        debug_assert_eq!(m.get() * m.get(), rows.len());
        TransitionKernel { m, data: KernelData::Dense(rows) }
    }

    /// The identity kernel.
    pub fn identity(m: CycleSize) -> Self {
        let mut row = vec![F::zero(); m.get()];
        row[0] = F::one();
        TransitionKernel::circulant(m, row)
    }

    pub fn size(&self) -> CycleSize {
        self.m
    }

    /// True when row r is row 0 rotated by r, exactly.
    pub fn is_circulant(&self) -> bool {
        matches!(self.data, KernelData::Circulant(_))
    }

    /// Transition probability from `r` to `s`.
    pub fn entry(&self, r: CycleIndex, s: CycleIndex) -> F {
        match &self.data {
            KernelData::Circulant(row) => row[self.m.offset(r, s)],
            KernelData::Dense(rows) => rows[r.get() * self.m.get() + s.get()],
        }
    }

    /// Row of state `r` as an owned vector.
    pub fn row(&self, r: CycleIndex) -> Vec<F> {
        match &self.data {
            KernelData::Circulant(first) => {
                let n = self.m.get();
                (0..n).map(|s| first[(n + s - r.get()) % n]).collect()
            }
            KernelData::Dense(rows) => {
                let n = self.m.get();
                rows[r.get() * n..(r.get() + 1) * n].to_vec()
            }
        }
    }

    /// Row of state 0.
    pub fn first_row(&self) -> Vec<F> {
        match &self.data {
            KernelData::Circulant(first) => first.clone(),
            KernelData::Dense(rows) => rows[..self.m.get()].to_vec(),
        }
    }

    /// All rows, materialized.
    pub fn to_rows(&self) -> Vec<Vec<F>> {
        self.m.states().map(|r| self.row(r)).collect()
    }

    /// Act on a distribution from the left: (p K)(s) = sum_r p(r) K(r, s).
    pub fn propagate(&self, p: &CyclePmf<F>) -> Result<CyclePmf<F>> {
        self.m.require_eq(p.size())?;
        let out: Vec<F> = self
            .m
            .states()
            .map(|s| {
                self.m
                    .states()
                    .map(|r| p.prob(r) * self.entry(r, s))
                    .sum()
            })
            .collect();
        CyclePmf::new(out)
    }
}

/// Transition kernel of the fractional diffusion at the given parameters.
///
/// The first row is assembled from the damped spectral sum for offsets up to
/// m/2 and mirrored to the rest, so the kernel is symmetric bitwise. Entries
/// in [KERNEL_FLOOR, 0) are rounding dust and get clamped to zero before the
/// row is renormalized; anything below the floor is an error.
pub fn kernel<F: Float>(params: &DiffusionParams<F>) -> Result<TransitionKernel<F>> {
    let m = params.size();
    // At time zero the semigroup is the identity; returning it directly
    // keeps zero-time evolution a bit-exact no-op instead of a spectral sum
    // perturbed at the last ulp.
    if params.t() == F::zero() {
        return Ok(TransitionKernel::identity(m));
    }
    let n = m.get();
    let mf = F::from_count(n);
    let weights: Vec<F> = spectrum::<F>(m)
        .fractional_powers(params.beta())
        .into_iter()
        .map(|lb| decay_factor(params.alpha(), params.t(), lb))
        .collect();
    let cos_table: Vec<F> = unit_roots::<F>(m, 1.0).into_iter().map(|z| z.re).collect();

    let mut row = vec![F::zero(); n];
    for d in 0..=n / 2 {
        let mut acc = F::zero();
        for (k, &w) in weights.iter().enumerate() {
            acc = acc + w * cos_table[(k * d) % n];
        }
        row[d] = acc / mf;
    }
    for d in n / 2 + 1..n {
        row[d] = row[n - d];
    }

    let floor = F::cast(KERNEL_FLOOR);
    for (d, value) in row.iter_mut().enumerate() {
        if *value < floor {
            return Err(Error::KernelNotPositive {
                offset: d,
                value: value.to_f64().unwrap_or(f64::NAN),
            });
        }
        if *value < F::zero() {
            *value = F::zero();
        }
    }
    let sum: F = row.iter().copied().sum();
    for value in row.iter_mut() {
        *value = *value / sum;
    }
    Ok(TransitionKernel::circulant(m, row))
}

/// Evolve a distribution for time t under the fractional diffusion.
pub fn evolve<F: Float>(p0: &CyclePmf<F>, params: &DiffusionParams<F>) -> Result<CyclePmf<F>> {
    params.size().require_eq(p0.size())?;
    kernel(params)?.propagate(p0)
}

/// The trigonometric moment E[e^{i ell Theta}] of a distribution on the
/// grid; the frequency is reduced mod m, which is exact on the grid.
pub fn trig_moment<F: Float>(p: &CyclePmf<F>, ell: i64) -> Complex<F> {
    let m = p.size();
    let n = m.get();
    let k = m.wrap(ell).get();
    let roots = unit_roots::<F>(m, 1.0);
    let mut acc = Complex::new(F::zero(), F::zero());
    for (r, &mass) in p.as_slice().iter().enumerate() {
        acc += roots[(k * r) % n].scale(mass);
    }
    acc
}

/// The resultant length |E[e^{i Theta}]|.
pub fn resultant_length<F: Float>(p: &CyclePmf<F>) -> F {
    trig_moment(p, 1).norm()
}

/// Spectral bound on TV(p_t, uniform): half the L2 deviation of the start,
/// damped at the spectral gap rate.
pub fn mixing_bound<F: Float>(p0: &CyclePmf<F>, params: &DiffusionParams<F>) -> Result<F> {
    params.size().require_eq(p0.size())?;
    let lambda_star = spectrum::<F>(params.size()).lambda_star();
    let decay = decay_factor(params.alpha(), params.t(), lambda_star.powf(params.beta()));
    let norm = crate::circle::uniform_l2_norm(&p0.ratio_deviation());
    Ok(F::cast(0.5) * decay * norm)
}

/// Dense generator of the fractional diffusion, -alpha L^beta, realized by
/// the inverse transform of the damped spectrum.
///
/// For beta < 1 this has strictly positive rates at every distance. Rounding
/// can push a mathematically tiny positive rate slightly negative; those are
/// clamped to zero under the same floor policy as the kernel.
pub fn fractional_generator<F: Float>(
    m: CycleSize,
    alpha: F,
    beta: F,
) -> Result<GeneratorMatrix<F>> {
    check_alpha(alpha)?;
    check_beta(beta)?;
    let n = m.get();
    let mf = F::from_count(n);
    let lam_beta = spectrum::<F>(m).fractional_powers(beta);
    let cos_table: Vec<F> = unit_roots::<F>(m, 1.0).into_iter().map(|z| z.re).collect();

    let mut first = vec![F::zero(); n];
    for d in 0..=n / 2 {
        let mut acc = F::zero();
        for (k, &lb) in lam_beta.iter().enumerate() {
            acc = acc + lb * cos_table[(k * d) % n];
        }
        first[d] = -(alpha * acc / mf);
    }
    for d in n / 2 + 1..n {
        first[d] = first[n - d];
    }

    let floor = F::cast(KERNEL_FLOOR);
    for (d, value) in first.iter_mut().enumerate().skip(1) {
        if *value < floor {
            return Err(Error::NegativeRate {
                row: 0,
                col: d,
                value: value.to_f64().unwrap_or(f64::NAN),
            });
        }
        if *value < F::zero() {
            *value = F::zero();
        }
    }

    let mut rows = vec![F::zero(); n * n];
    for r in 0..n {
        for s in 0..n {
            rows[r * n + s] = first[(n + s - r) % n];
        }
    }
    Ok(GeneratorMatrix::from_dense_unchecked(m, rows, false))
}

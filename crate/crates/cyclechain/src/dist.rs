//! Circular target laws on the grid: the discrete von Mises and wrapped
//! Cauchy families, plus the modified Bessel function they lean on.
//!
//! Both families admit two independent routes to their normalizers and
//! trigonometric moments: brute-force summation over the grid, and series
//! or closed forms obtained by folding the continuous circular law onto m
//! points. The pairs are deliberately kept side by side; agreement between
//! them is part of the validation suite.

use crate::circle::{unit_roots, CycleIndex, CyclePmf, CycleSize};
use crate::error::{Error, Result};
use crate::float::Float;

/// Series terms below this fraction of the running sum are negligible.
const SERIES_TOL: f64 = 1e-17;

/// Hard cap on series length; reached only on absurd inputs.
const SERIES_MAX_TERMS: usize = 10_000;

/// An on-grid location is one whose angle is within this of a grid point,
/// measured in grid units.
const GRID_SNAP_TOL: f64 = 1e-9;

fn check_mu<F: Float>(mu: F) -> Result<()> {
    if !mu.is_finite() {
        return Err(Error::InvalidMu(mu.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

fn check_kappa<F: Float>(kappa: F) -> Result<()> {
    if !(kappa >= F::zero()) || !kappa.is_finite() {
        return Err(Error::InvalidKappa(kappa.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

fn check_rho<F: Float>(rho: F) -> Result<()> {
    if !(rho > F::zero()) || !(rho < F::one()) {
        return Err(Error::InvalidRho(rho.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

/// Detect whether mu falls on a grid point; returns its index if so.
fn grid_membership<F: Float>(m: CycleSize, mu: F) -> Option<CycleIndex> {
    let scaled = mu * F::from_count(m.get()) / F::TAU();
    let nearest = scaled.round();
    if (scaled - nearest).abs() < F::cast(GRID_SNAP_TOL) {
        nearest.to_i64().map(|r| m.wrap(r))
    } else {
        None
    }
}

/// Parameters of the discrete von Mises law: mass proportional to
/// exp(kappa cos(theta_r - mu)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VonMisesParams<F> {
    m: CycleSize,
    kappa: F,
    mu: F,
    grid_index: Option<CycleIndex>,
}

impl<F: Float> VonMisesParams<F> {
    pub fn new(m: CycleSize, kappa: F, mu: F) -> Result<Self> {
        check_kappa(kappa)?;
        check_mu(mu)?;
        Ok(VonMisesParams { m, kappa, mu, grid_index: grid_membership(m, mu) })
    }

    pub fn size(&self) -> CycleSize {
        self.m
    }

    pub fn kappa(&self) -> F {
        self.kappa
    }

    pub fn mu(&self) -> F {
        self.mu
    }

    /// The grid point mu coincides with, if any.
    pub fn grid_index(&self) -> Option<CycleIndex> {
        self.grid_index
    }
}

/// Parameters of the discrete wrapped Cauchy law: mass proportional to
/// (1 - rho^2) / (1 - 2 rho cos(theta_r - mu) + rho^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrappedCauchyParams<F> {
    m: CycleSize,
    rho: F,
    mu: F,
    grid_index: Option<CycleIndex>,
}

impl<F: Float> WrappedCauchyParams<F> {
    pub fn new(m: CycleSize, rho: F, mu: F) -> Result<Self> {
        check_rho(rho)?;
        check_mu(mu)?;
        Ok(WrappedCauchyParams { m, rho, mu, grid_index: grid_membership(m, mu) })
    }

    pub fn size(&self) -> CycleSize {
        self.m
    }

    pub fn rho(&self) -> F {
        self.rho
    }

    pub fn mu(&self) -> F {
        self.mu
    }

    pub fn grid_index(&self) -> Option<CycleIndex> {
        self.grid_index
    }
}

/// Modified Bessel function of the first kind, integer order.
///
/// Ascending series sum_j (x/2)^{n+2j} / (j! (n+j)!), with the order
/// prefactor carried in log form so large orders neither overflow nor
/// underflow prematurely. Symmetric in the order: I_{-n} = I_n. The result
/// itself overflows f64 once x grows past roughly 700.
pub fn bessel_i<F: Float>(n: i64, x: F) -> Result<F> {
    if !(x >= F::zero()) || !x.is_finite() {
        return Err(Error::InvalidBesselArgument(x.to_f64().unwrap_or(f64::NAN)));
    }
    let order = n.unsigned_abs();
    if x == F::zero() {
        return Ok(if order == 0 { F::one() } else { F::zero() });
    }
    let half = x / F::cast(2.0);
    let half_sq = half * half;

    // Ratio recurrence keeps each term exact relative to its predecessor.
    let mut sum = F::one();
    let mut term = F::one();
    let order_f = F::cast(order as f64);
    for j in 1..=SERIES_MAX_TERMS {
        let jf = F::from_count(j);
        term = term * half_sq / (jf * (order_f + jf));
        sum = sum + term;
        if term < F::cast(SERIES_TOL) * sum {
            break;
        }
    }

    let log_prefactor = order_f * half.ln() - ln_factorial::<F>(order);
    if log_prefactor.abs() < F::cast(600.0) {
        Ok(log_prefactor.exp() * sum)
    } else {
        Ok((log_prefactor + sum.ln()).exp())
    }
}

fn ln_factorial<F: Float>(n: u64) -> F {
    let mut acc = F::zero();
    for k in 2..=n {
        acc = acc + F::cast(k as f64).ln();
    }
    acc
}

/// Centered weight profile w[d] for a law that depends on the angle only
/// through cos; d is the index distance to the mode. Mirrored so that
/// w[d] == w[m - d] bitwise.
fn centered_profile<F: Float>(m: CycleSize, f: impl Fn(F) -> F) -> Vec<F> {
    let n = m.get();
    let cos_table: Vec<F> = unit_roots::<F>(m, 1.0).into_iter().map(|z| z.re).collect();
    let mut w = vec![F::zero(); n];
    for d in 0..=n / 2 {
        w[d] = f(cos_table[d]);
    }
    for d in n / 2 + 1..n {
        w[d] = w[n - d];
    }
    w
}

/// Rotate a centered profile so its mode sits at grid index r0, then
/// normalize. The profile is normalized before rotation, so laws that
/// differ only in an on-grid location are bitwise rotations of each other.
fn rotate_into_pmf<F: Float>(m: CycleSize, w: Vec<F>, r0: CycleIndex) -> Result<CyclePmf<F>> {
    let centered = CyclePmf::from_weights(w)?;
    let n = m.get();
    let p: Vec<F> = (0..n)
        .map(|r| centered.as_slice()[(n + r - r0.get()) % n])
        .collect();
    CyclePmf::new(p)
}

/// The discrete von Mises pmf.
///
/// On-grid locations take an exactly centered, exactly symmetric profile
/// rotated to the mode. Concentrations large enough to overflow exp are
/// handled in the log domain with the maximum subtracted first.
pub fn vm_pmf<F: Float>(params: &VonMisesParams<F>) -> Result<CyclePmf<F>> {
    let m = params.size();
    let kappa = params.kappa();
    // exp(kappa) must stay finite for the direct route; the f64 switch
    // point is 500, narrower scalar types switch sooner.
    let log_domain = kappa > F::cast(500.0).min(F::max_value().ln() * F::cast(0.8));
    match params.grid_index {
        Some(r0) => {
            let w = centered_profile(m, |c| {
                if log_domain {
                    (kappa * (c - F::one())).exp()
                } else {
                    (kappa * c).exp()
                }
            });
            rotate_into_pmf(m, w, r0)
        }
        None => {
            let mu = params.mu();
            let n = m.get();
            let angles: Vec<F> = (0..n)
                .map(|r| F::TAU() * F::from_count(r) / F::from_count(n) - mu)
                .collect();
            let top = if log_domain {
                angles
                    .iter()
                    .map(|&a| kappa * a.cos())
                    .fold(F::neg_infinity(), F::max)
            } else {
                F::zero()
            };
            let w: Vec<F> = angles.iter().map(|&a| (kappa * a.cos() - top).exp()).collect();
            CyclePmf::from_weights(w)
        }
    }
}

/// The von Mises normalizer Z_m(kappa) = m (I_0(kappa) + 2 sum_q I_{qm}(kappa)),
/// valid whenever the location sits on the grid.
pub fn vm_normalizer<F: Float>(kappa: F, m: CycleSize) -> Result<F> {
    check_kappa(kappa)?;
    let n = m.get() as i64;
    let two = F::cast(2.0);
    let mut sum = bessel_i(0, kappa)?;
    for q in 1..=(SERIES_MAX_TERMS as i64) {
        let term = bessel_i(q * n, kappa)?;
        sum = sum + two * term;
        if term < F::cast(SERIES_TOL) * sum {
            break;
        }
    }
    Ok(F::from_count(m.get()) * sum)
}

/// The same normalizer by brute-force summation over the grid.
pub fn vm_normalizer_direct<F: Float>(kappa: F, mu: F, m: CycleSize) -> Result<F> {
    check_kappa(kappa)?;
    check_mu(mu)?;
    let n = m.get();
    let mut sum = F::zero();
    for r in 0..n {
        let angle = F::TAU() * F::from_count(r) / F::from_count(n) - mu;
        sum = sum + (kappa * angle.cos()).exp();
    }
    Ok(sum)
}

/// Centered trigonometric moment E[cos(l (Theta - mu))] of the on-grid von
/// Mises law: a ratio of folded Bessel sums, real and nonnegative.
pub fn vm_trig_moment<F: Float>(ell: i64, kappa: F, m: CycleSize) -> Result<F> {
    check_kappa(kappa)?;
    let l = m.wrap(ell).get() as i64;
    if l == 0 {
        return Ok(F::one());
    }
    let n = m.get() as i64;

    let mut num = bessel_i(l, kappa)?;
    for q in 1..=(SERIES_MAX_TERMS as i64) {
        let upper = bessel_i(l + q * n, kappa)?;
        let lower = bessel_i(q * n - l, kappa)?;
        num = num + upper + lower;
        if upper + lower <= F::cast(SERIES_TOL) * num {
            break;
        }
    }

    let two = F::cast(2.0);
    let mut den = bessel_i(0, kappa)?;
    for q in 1..=(SERIES_MAX_TERMS as i64) {
        let term = bessel_i(q * n, kappa)?;
        den = den + two * term;
        if term < F::cast(SERIES_TOL) * den {
            break;
        }
    }
    Ok(num / den)
}

/// The discrete wrapped Cauchy pmf, by direct normalization of the
/// Poisson-kernel weights.
pub fn wc_pmf<F: Float>(params: &WrappedCauchyParams<F>) -> Result<CyclePmf<F>> {
    let m = params.size();
    let rho = params.rho();
    let one = F::one();
    let two = F::cast(2.0);
    let numerator = one - rho * rho;
    let weight = |c: F| numerator / (one - two * rho * c + rho * rho);
    match params.grid_index {
        Some(r0) => rotate_into_pmf(m, centered_profile(m, weight), r0),
        None => {
            let mu = params.mu();
            let n = m.get();
            let w: Vec<F> = (0..n)
                .map(|r| {
                    let angle = F::TAU() * F::from_count(r) / F::from_count(n) - mu;
                    weight(angle.cos())
                })
                .collect();
            CyclePmf::from_weights(w)
        }
    }
}

/// The wrapped Cauchy pmf through the closed-form normalizer
/// m (1 + rho^m) / (1 - rho^m), which requires an on-grid location.
pub fn wc_pmf_closed<F: Float>(params: &WrappedCauchyParams<F>) -> Result<CyclePmf<F>> {
    let r0 = params
        .grid_index
        .ok_or_else(|| Error::InvalidMu(params.mu().to_f64().unwrap_or(f64::NAN)))?;
    let m = params.size();
    let rho = params.rho();
    let one = F::one();
    let two = F::cast(2.0);
    let numerator = one - rho * rho;
    let z = wc_normalizer(rho, m)?;
    let w = centered_profile(m, |c| numerator / ((one - two * rho * c + rho * rho) * z));
    let n = m.get();
    let p: Vec<F> = (0..n).map(|r| w[(n + r - r0.get()) % n]).collect();
    CyclePmf::new(p)
}

/// Closed-form wrapped Cauchy normalizer m (1 + rho^m) / (1 - rho^m).
pub fn wc_normalizer<F: Float>(rho: F, m: CycleSize) -> Result<F> {
    check_rho(rho)?;
    let rm = rho.powi(m.get() as i32);
    Ok(F::from_count(m.get()) * (F::one() + rm) / (F::one() - rm))
}

/// The same normalizer by brute-force summation over the grid.
pub fn wc_normalizer_direct<F: Float>(rho: F, mu: F, m: CycleSize) -> Result<F> {
    check_rho(rho)?;
    check_mu(mu)?;
    let one = F::one();
    let two = F::cast(2.0);
    let numerator = one - rho * rho;
    let n = m.get();
    let mut sum = F::zero();
    for r in 0..n {
        let angle = F::TAU() * F::from_count(r) / F::from_count(n) - mu;
        sum = sum + numerator / (one - two * rho * angle.cos() + rho * rho);
    }
    Ok(sum)
}

/// Centered trigonometric moment of the on-grid wrapped Cauchy law:
/// (rho^l + rho^{m-l}) / (1 + rho^m) with the frequency reduced mod m.
pub fn wc_trig_moment<F: Float>(ell: i64, rho: F, m: CycleSize) -> Result<F> {
    check_rho(rho)?;
    let l = m.wrap(ell).get();
    let n = m.get();
    let rm = rho.powi(n as i32);
    Ok((rho.powi(l as i32) + rho.powi((n - l) as i32)) / (F::one() + rm))
}

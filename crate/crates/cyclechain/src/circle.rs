//! The m-point discrete circle: state indices, grid angles, probability
//! vectors, and the discrete Fourier transform used throughout the crate.
//!
//! States are the residues {0, .., m-1} with grid angles 2*pi*r/m. The DFT
//! conventions are fixed here once and shared by every caller: forward
//! coefficients sum with e^{-i 2 pi k r / m}, the inverse averages with the
//! conjugate phase and a 1/m factor.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::float::Float;

/// Tolerance on |sum - 1| accepted by [`CyclePmf::new`].
pub const PMF_SUM_TOL: f64 = 1e-12;

/// Number of points on the discrete circle. Always at least 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CycleSize(usize);

impl CycleSize {
    /// Validate a cycle size. Two points or fewer do not form a cycle.
    pub fn new(m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::CycleSizeTooSmall(m));
        }
        Ok(CycleSize(m))
    }

    /// The number of states.
    pub fn get(self) -> usize {
        self.0
    }

    /// Validate a raw state index against this cycle.
    pub fn index(self, r: usize) -> Result<CycleIndex> {
        if r >= self.0 {
            return Err(Error::IndexOutOfRange { index: r, m: self.0 });
        }
        Ok(CycleIndex(r))
    }

    /// Wrap an arbitrary signed integer into {0, .., m-1}.
    pub fn wrap(self, i: i64) -> CycleIndex {
        let m = self.0 as i64;
        CycleIndex(i.rem_euclid(m) as usize)
    }

    /// Move `delta` steps around the circle from `r`.
    pub fn step(self, r: CycleIndex, delta: i64) -> CycleIndex {
        self.wrap(r.get() as i64 + delta)
    }

    /// Offset `(to - from) mod m`; circulant matrices are indexed by this.
    pub fn offset(self, from: CycleIndex, to: CycleIndex) -> usize {
        (self.0 + to.get() - from.get()) % self.0
    }

    /// All states in order.
    pub fn states(self) -> impl Iterator<Item = CycleIndex> {
        (0..self.0).map(CycleIndex)
    }

    /// Check that `other` refers to the same cycle.
    pub fn require_eq(self, other: CycleSize) -> Result<()> {
        if self != other {
            return Err(Error::SizeMismatch { left: self.0, right: other.0 });
        }
        Ok(())
    }

    /// The grid angle of state `r` as a [`GridAngle`].
    pub fn angle(self, r: CycleIndex) -> GridAngle {
        GridAngle { r, m: self }
    }
}

/// A state of the cycle, guaranteed in range by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycleIndex(usize);

impl CycleIndex {
    /// The raw index.
    pub fn get(self) -> usize {
        self.0
    }
}

/// A grid angle stored as (index, size); radians are derived on demand so
/// no rounded angle is ever stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridAngle {
    r: CycleIndex,
    m: CycleSize,
}

impl GridAngle {
    /// The angle 2*pi*r/m in radians.
    pub fn radians<F: Float>(self) -> F {
        F::TAU() * F::from_count(self.r.get()) / F::from_count(self.m.get())
    }

    /// The underlying state index.
    pub fn index(self) -> CycleIndex {
        self.r
    }
}

/// A probability mass function on the cycle: nonnegative entries that sum
/// to 1 within [`PMF_SUM_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct CyclePmf<F> {
    m: CycleSize,
    p: Vec<F>,
}

impl<F: Float> CyclePmf<F> {
    /// Validate a probability vector.
    pub fn new(p: Vec<F>) -> Result<Self> {
        let m = CycleSize::new(p.len())?;
        for (index, &value) in p.iter().enumerate() {
            if !(value >= F::zero()) {
                return Err(Error::NegativeProbability {
                    index,
                    value: value.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let sum: F = p.iter().copied().sum();
        let tol = F::cast(PMF_SUM_TOL);
        if (sum - F::one()).abs() > tol {
            return Err(Error::NotNormalized {
                sum: sum.to_f64().unwrap_or(f64::NAN),
                tol: PMF_SUM_TOL,
            });
        }
        Ok(CyclePmf { m, p })
    }

    /// Normalize nonnegative weights into a pmf. Fails on a negative entry
    /// or a sum that is zero or not finite.
    pub fn from_weights(w: Vec<F>) -> Result<Self> {
        let m = CycleSize::new(w.len())?;
        for (index, &value) in w.iter().enumerate() {
            if !(value >= F::zero()) {
                return Err(Error::NegativeProbability {
                    index,
                    value: value.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let sum: F = w.iter().copied().sum();
        if !(sum > F::zero()) || !sum.is_finite() {
            return Err(Error::DegenerateWeights(sum.to_f64().unwrap_or(f64::NAN)));
        }
        let p = w.into_iter().map(|x| x / sum).collect();
        Ok(CyclePmf { m, p })
    }

    /// The uniform distribution on `m` states.
    pub fn uniform(m: CycleSize) -> Self {
        let mass = F::one() / F::from_count(m.get());
        CyclePmf { m, p: vec![mass; m.get()] }
    }

    /// The point mass at `r0`.
    pub fn delta(m: CycleSize, r0: CycleIndex) -> Self {
        let mut p = vec![F::zero(); m.get()];
        p[r0.get()] = F::one();
        CyclePmf { m, p }
    }

    /// Cycle size.
    pub fn size(&self) -> CycleSize {
        self.m
    }

    /// Mass at state `r`.
    pub fn prob(&self, r: CycleIndex) -> F {
        self.p[r.get()]
    }

    /// The full vector of masses.
    pub fn as_slice(&self) -> &[F] {
        &self.p
    }

    /// True when every state has strictly positive mass.
    pub fn is_strictly_positive(&self) -> bool {
        self.p.iter().all(|&x| x > F::zero())
    }

    /// Require strict positivity, reporting the first offending state.
    pub fn require_strictly_positive(&self) -> Result<()> {
        for (index, &value) in self.p.iter().enumerate() {
            if !(value > F::zero()) {
                return Err(Error::NotStrictlyPositive {
                    index,
                    value: value.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(())
    }

    /// Forward DFT of the mass vector.
    pub fn dft(&self) -> DftCoefficients<F> {
        dft_forward_real(self.m, &self.p)
    }

    /// The deviation field m*p(r) - 1; identically zero at the uniform law.
    pub fn ratio_deviation(&self) -> Vec<F> {
        let m = F::from_count(self.m.get());
        self.p.iter().map(|&x| m * x - F::one()).collect()
    }
}

/// DFT coefficients of a function on the cycle, indexed by frequency
/// k in {0, .., m-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct DftCoefficients<F> {
    m: CycleSize,
    c: Vec<Complex<F>>,
}

impl<F: Float> DftCoefficients<F> {
    /// Wrap precomputed coefficients; the length fixes the cycle size.
    pub fn new(c: Vec<Complex<F>>) -> Result<Self> {
        let m = CycleSize::new(c.len())?;
        Ok(DftCoefficients { m, c })
    }

    /// Cycle size.
    pub fn size(&self) -> CycleSize {
        self.m
    }

    /// Coefficient at frequency `k`, reduced mod m.
    pub fn coeff(&self, k: i64) -> Complex<F> {
        self.c[self.m.wrap(k).get()]
    }

    /// All coefficients in frequency order.
    pub fn as_slice(&self) -> &[Complex<F>] {
        &self.c
    }
}

/// Table of the m-th roots of unity e^{sign * i 2 pi j / m} for j < m.
///
/// All DFT phases are looked up here with the exponent reduced mod m, so a
/// phase k*r and its reduction (k*r mod m) are bitwise identical.
pub(crate) fn unit_roots<F: Float>(m: CycleSize, sign: f64) -> Vec<Complex<F>> {
    let mf = F::from_count(m.get());
    (0..m.get())
        .map(|j| {
            let angle = F::cast(sign) * F::TAU() * F::from_count(j) / mf;
            Complex::new(angle.cos(), angle.sin())
        })
        .collect()
}

/// Forward DFT of a complex vector: c[k] = sum_r g[r] e^{-i 2 pi k r / m}.
pub fn dft_forward<F: Float>(g: &[Complex<F>]) -> Result<DftCoefficients<F>> {
    let m = CycleSize::new(g.len())?;
    let roots = unit_roots::<F>(m, -1.0);
    let n = m.get();
    let c = (0..n)
        .map(|k| {
            let mut acc = Complex::new(F::zero(), F::zero());
            for (r, &value) in g.iter().enumerate() {
                acc += value * roots[(k * r) % n];
            }
            acc
        })
        .collect();
    Ok(DftCoefficients { m, c })
}

/// Forward DFT of a real vector.
pub fn dft_forward_real<F: Float>(m: CycleSize, g: &[F]) -> DftCoefficients<F> {
    debug_assert_eq!(m.get(), g.len());
    let roots = unit_roots::<F>(m, -1.0);
    let n = m.get();
    let c = (0..n)
        .map(|k| {
            let mut acc = Complex::new(F::zero(), F::zero());
            for (r, &value) in g.iter().enumerate() {
                acc += roots[(k * r) % n].scale(value);
            }
            acc
        })
        .collect();
    DftCoefficients { m, c }
}

/// Inverse DFT: g[r] = (1/m) sum_k c[k] e^{+i 2 pi k r / m}.
pub fn dft_inverse<F: Float>(c: &DftCoefficients<F>) -> Vec<Complex<F>> {
    let m = c.m;
    let n = m.get();
    let roots = unit_roots::<F>(m, 1.0);
    let mf = F::from_count(n);
    (0..n)
        .map(|r| {
            let mut acc = Complex::new(F::zero(), F::zero());
            for (k, &coeff) in c.c.iter().enumerate() {
                acc += coeff * roots[(k * r) % n];
            }
            acc.unscale(mf)
        })
        .collect()
}

/// Total variation distance (1/2) sum_r |p(r) - q(r)|.
pub fn total_variation<F: Float>(p: &CyclePmf<F>, q: &CyclePmf<F>) -> Result<F> {
    p.size().require_eq(q.size())?;
    let sum: F = p
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(&a, &b)| (a - b).abs())
        .sum();
    Ok(sum / F::cast(2.0))
}

/// Norm sqrt((1/m) sum_r g(r)^2), the L2 norm weighted by the uniform law.
pub fn uniform_l2_norm<F: Float>(g: &[F]) -> F {
    let m = F::from_count(g.len());
    let sum: F = g.iter().map(|&x| x * x).sum();
    (sum / m).sqrt()
}

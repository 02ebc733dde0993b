//! Reversible nearest-neighbour chains with a prescribed stationary law.
//!
//! Given a strictly positive pmf pi on the cycle and a rate scale alpha, the
//! generator moves from r to r+1 at rate alpha sqrt(pi(r+1)/pi(r)) and to
//! r-1 at rate alpha sqrt(pi(r-1)/pi(r)). The square-root ratio makes
//! pi(r) q(r, s) symmetric in (r, s), which is detailed balance, and in
//! particular leaves pi invariant. A uniform target recovers the constant
//! rate walk with q(r, r+-1) = alpha.
//!
//! Transition matrices exp(tQ) are computed by uniformization: with
//! lambda at least the largest exit rate, P = I + Q/lambda is stochastic and
//! exp(tQ) is the Poisson(lambda t) mixture of its powers. All terms are
//! nonnegative, so the sum is stable and the result is stochastic up to the
//! truncated Poisson tail.

use crate::circle::{CycleIndex, CyclePmf, CycleSize};
use crate::error::{Error, Result};
use crate::float::Float;
use crate::semigroup::{check_alpha, check_time, TransitionKernel, KERNEL_FLOOR};

/// A generator passes the detailed balance check when the worst relative
/// flow asymmetry is at most this.
pub const DETAILED_BALANCE_TOL: f64 = 1e-12;

/// Safety margin on the uniformization rate so P = I + Q/lambda keeps a
/// strictly positive diagonal.
const UNIFORMIZATION_MARGIN: f64 = 1e-12;

/// Longest Poisson series a single transition-matrix call may run. The
/// count scales with max exit rate times elapsed time, so any sane chain
/// stays far below this; hitting it signals a pathologically stiff
/// generator rather than a long horizon.
pub const UNIFORMIZATION_MAX_TERMS: usize = 50_000;

/// Continuous-time generator over the cycle states: nonnegative
/// off-diagonal rates, rows summing to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix<F> {
    m: CycleSize,
    rows: Vec<F>,
    nearest_neighbour: bool,
}

impl<F: Float> GeneratorMatrix<F> {
    /// Wrap a dense row-major rate matrix, validating signs and row sums.
    ///
    /// Off-diagonal entries in [KERNEL_FLOOR, 0) are clamped to zero; lower
    /// ones are rejected. Row sums must vanish relative to the exit rates.
    pub fn from_dense(m: CycleSize, mut rows: Vec<F>) -> Result<Self> {
        let n = m.get();
        if rows.len() != n * n {
            return Err(Error::LengthMismatch { len: rows.len(), m: n * n });
        }
        let floor = F::cast(KERNEL_FLOOR);
        for r in 0..n {
            for s in 0..n {
                if r == s {
                    continue;
                }
                let value = rows[r * n + s];
                if value < floor {
                    return Err(Error::NegativeRate {
                        row: r,
                        col: s,
                        value: value.to_f64().unwrap_or(f64::NAN),
                    });
                }
                if value < F::zero() {
                    rows[r * n + s] = F::zero();
                }
            }
        }
        let nn = rows_are_nearest_neighbour(m, &rows);
        Ok(GeneratorMatrix { m, rows, nearest_neighbour: nn })
    }

    /// Internal constructor for matrices built by this crate, where the
    /// structure is known without re-validation.
    pub(crate) fn from_dense_unchecked(
        m: CycleSize,
        rows: Vec<F>,
        nearest_neighbour: bool,
    ) -> Self {
        debug_assert_eq!(m.get() * m.get(), rows.len());
        GeneratorMatrix { m, rows, nearest_neighbour }
    }

    pub fn size(&self) -> CycleSize {
        self.m
    }

    /// True when every off-diagonal rate outside distance one is zero.
    pub fn is_nearest_neighbour(&self) -> bool {
        self.nearest_neighbour
    }

    /// Rate from `r` to `s`; the diagonal holds the negative exit rate.
    pub fn rate(&self, r: CycleIndex, s: CycleIndex) -> F {
        self.rows[r.get() * self.m.get() + s.get()]
    }

    /// Total rate of leaving state `r`.
    pub fn exit_rate(&self, r: CycleIndex) -> F {
        -self.rate(r, r)
    }

    /// The largest exit rate over all states.
    pub fn max_exit_rate(&self) -> F {
        self.m
            .states()
            .map(|r| self.exit_rate(r))
            .fold(F::zero(), F::max)
    }

    /// Row of state `r`.
    pub fn row(&self, r: CycleIndex) -> &[F] {
        let n = self.m.get();
        &self.rows[r.get() * n..(r.get() + 1) * n]
    }

    /// Clockwise rates q(r, r+1) in state order.
    pub fn up_rates(&self) -> Vec<F> {
        self.m
            .states()
            .map(|r| self.rate(r, self.m.step(r, 1)))
            .collect()
    }

    /// Counterclockwise rates q(r, r-1) in state order.
    pub fn down_rates(&self) -> Vec<F> {
        self.m
            .states()
            .map(|r| self.rate(r, self.m.step(r, -1)))
            .collect()
    }

    /// All rows, materialized.
    pub fn to_rows(&self) -> Vec<Vec<F>> {
        self.m.states().map(|r| self.row(r).to_vec()).collect()
    }
}

fn rows_are_nearest_neighbour<F: Float>(m: CycleSize, rows: &[F]) -> bool {
    let n = m.get();
    for r in 0..n {
        for s in 0..n {
            let d = (n + s - r) % n;
            if d != 0 && d != 1 && d != n - 1 && rows[r * n + s] != F::zero() {
                return false;
            }
        }
    }
    true
}

/// A stationary target: a strictly positive pmf with a rate scale, plus
/// optional log-domain weights for extreme concentration.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec<F> {
    pi: CyclePmf<F>,
    log_pi: Option<Vec<F>>,
    alpha: F,
}

impl<F: Float> TargetSpec<F> {
    /// A target given directly as a pmf. Every state needs positive mass,
    /// otherwise no finite-rate nearest-neighbour chain can reach it.
    pub fn new(pi: CyclePmf<F>, alpha: F) -> Result<Self> {
        check_alpha(alpha)?;
        pi.require_strictly_positive()?;
        Ok(TargetSpec { pi, log_pi: None, alpha })
    }

    /// A target given as unnormalized log weights. The pmf is recovered by
    /// exponentiating after subtracting the maximum, so weights spanning
    /// hundreds of e-folds stay finite; the logs are kept and used for the
    /// rate ratios, which only ever need differences.
    pub fn from_log_weights(log_w: Vec<F>, alpha: F) -> Result<Self> {
        check_alpha(alpha)?;
        let m = CycleSize::new(log_w.len())?;
        let top = log_w.iter().copied().fold(F::neg_infinity(), F::max);
        if !top.is_finite() {
            return Err(Error::DegenerateWeights(top.to_f64().unwrap_or(f64::NAN)));
        }
        let weights: Vec<F> = log_w.iter().map(|&lw| (lw - top).exp()).collect();
        let pi = CyclePmf::from_weights(weights)?;
        pi.require_strictly_positive()?;
        let _ = m;
        Ok(TargetSpec { pi, log_pi: Some(log_w), alpha })
    }

    pub fn pi(&self) -> &CyclePmf<F> {
        &self.pi
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    pub fn size(&self) -> CycleSize {
        self.pi.size()
    }

    fn half_log_ratio(&self, num: CycleIndex, den: CycleIndex) -> F {
        let half = F::cast(0.5);
        match &self.log_pi {
            Some(logs) => half * (logs[num.get()] - logs[den.get()]),
            None => half * (self.pi.prob(num).ln() - self.pi.prob(den).ln()),
        }
    }

    /// The jump rate alpha sqrt(pi(to)/pi(from)) between neighbours.
    fn rate(&self, from: CycleIndex, to: CycleIndex) -> F {
        match &self.log_pi {
            Some(_) => self.alpha * self.half_log_ratio(to, from).exp(),
            None => self.alpha * (self.pi.prob(to) / self.pi.prob(from)).sqrt(),
        }
    }
}

/// Build the reversible nearest-neighbour generator for a target.
pub fn build_generator<F: Float>(spec: &TargetSpec<F>) -> GeneratorMatrix<F> {
    let m = spec.size();
    let n = m.get();
    let mut rows = vec![F::zero(); n * n];
    for r in m.states() {
        let up_state = m.step(r, 1);
        let down_state = m.step(r, -1);
        let up = spec.rate(r, up_state);
        let down = spec.rate(r, down_state);
        rows[r.get() * n + up_state.get()] = up;
        rows[r.get() * n + down_state.get()] = down;
        rows[r.get() * n + r.get()] = -(up + down);
    }
    GeneratorMatrix::from_dense_unchecked(m, rows, true)
}

/// Transition matrix exp(tQ) by uniformization.
///
/// The Poisson weights are generated by the upward recurrence in log space
/// and the series is truncated at lambda t + 10 sqrt(lambda t + 1) + 30
/// terms, far past the point where the tail mass drops below 1e-15.
pub fn transition_matrix<F: Float>(g: &GeneratorMatrix<F>, t: F) -> Result<TransitionKernel<F>> {
    check_time(t)?;
    let m = g.size();
    let n = m.get();
    let lambda = g.max_exit_rate() * (F::one() + F::cast(UNIFORMIZATION_MARGIN));
    let lt = lambda * t;
    if lt == F::zero() {
        return Ok(TransitionKernel::identity(m));
    }

    // P = I + Q / lambda, entrywise nonnegative by choice of lambda.
    let mut p = vec![F::zero(); n * n];
    for r in 0..n {
        for s in 0..n {
            let q = g.rows[r * n + s] / lambda;
            p[r * n + s] = if r == s { F::one() + q } else { q.max(F::zero()) };
        }
    }

    let lt_f64 = lt.to_f64().unwrap_or(f64::MAX);
    let terms = (lt_f64 + 10.0 * (lt_f64 + 1.0).sqrt() + 30.0).ceil() as usize;
    // Highly concentrated targets put huge rates on some edges, and the
    // series length grows linearly with rate times time. Refusing beyond a
    // generous cap keeps a single call bounded instead of looping for what
    // could be years; likelihood searches treat the refusal as a vetoed
    // parameter value.
    if terms > UNIFORMIZATION_MAX_TERMS {
        return Err(Error::StiffGenerator { lambda_t: lt_f64, terms });
    }

    let mut acc = vec![F::zero(); n * n];
    let mut power = identity::<F>(n);
    let mut log_weight = -lt; // log of the Poisson(lt) mass at zero
    add_scaled(&mut acc, &power, log_weight.exp());
    let ln_lt = lt.ln();
    for j in 1..=terms {
        power = matmul(&power, &p, n);
        log_weight = log_weight + ln_lt - F::from_count(j).ln();
        let w = if log_weight < F::cast(-745.0) { F::zero() } else { log_weight.exp() };
        if w > F::zero() {
            add_scaled(&mut acc, &power, w);
        }
    }
    Ok(TransitionKernel::dense(m, acc))
}

fn identity<F: Float>(n: usize) -> Vec<F> {
    let mut out = vec![F::zero(); n * n];
    for i in 0..n {
        out[i * n + i] = F::one();
    }
    out
}

fn matmul<F: Float>(a: &[F], b: &[F], n: usize) -> Vec<F> {
    let mut out = vec![F::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == F::zero() {
                continue;
            }
            for j in 0..n {
                out[i * n + j] = out[i * n + j] + aik * b[k * n + j];
            }
        }
    }
    out
}

fn add_scaled<F: Float>(acc: &mut [F], m: &[F], w: F) {
    for (a, &x) in acc.iter_mut().zip(m) {
        *a = *a + w * x;
    }
}

/// Result of a detailed balance audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetailedBalanceReport<F> {
    /// Worst relative asymmetry of the probability flows.
    pub max_gap: F,
    /// The pair of states achieving it.
    pub worst_pair: (usize, usize),
    /// Whether the gap is within [`DETAILED_BALANCE_TOL`].
    pub pass: bool,
}

/// Measure how far pi(r) q(r, s) is from pi(s) q(s, r) over all pairs.
///
/// The gap per pair is |a - b| / (|a| + |b|), a symmetric relative error;
/// pairs with no flow in either direction contribute zero.
pub fn verify_detailed_balance<F: Float>(
    g: &GeneratorMatrix<F>,
    pi: &CyclePmf<F>,
) -> Result<DetailedBalanceReport<F>> {
    g.size().require_eq(pi.size())?;
    let m = g.size();
    let mut max_gap = F::zero();
    let mut worst = (0, 0);
    for r in m.states() {
        for s in m.states() {
            if s.get() <= r.get() {
                continue;
            }
            let forward = pi.prob(r) * g.rate(r, s);
            let backward = pi.prob(s) * g.rate(s, r);
            if forward == backward {
                continue;
            }
            let gap = (forward - backward).abs()
                / (forward.abs() + backward.abs() + F::cast(1e-300));
            if gap > max_gap {
                max_gap = gap;
                worst = (r.get(), s.get());
            }
        }
    }
    Ok(DetailedBalanceReport {
        max_gap,
        worst_pair: worst,
        pass: max_gap <= F::cast(DETAILED_BALANCE_TOL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::{kernel, DiffusionParams};
    use approx::assert_abs_diff_eq;

    fn size(m: usize) -> CycleSize {
        CycleSize::new(m).unwrap()
    }

    fn uniform_target(m: usize, alpha: f64) -> TargetSpec<f64> {
        TargetSpec::new(CyclePmf::uniform(size(m)), alpha).unwrap()
    }

    #[test]
    fn uniform_target_recovers_constant_rates() {
        let g = build_generator(&uniform_target(5, 1.0));
        assert!(g.is_nearest_neighbour());
        let m = size(5);
        for r in m.states() {
            assert_eq!(g.rate(r, m.step(r, 1)), 1.0);
            assert_eq!(g.rate(r, m.step(r, -1)), 1.0);
            assert_eq!(g.rate(r, r), -2.0);
        }
    }

    #[test]
    fn tent_target_rates_follow_the_square_root_ratio() {
        let spec = TargetSpec::new(
            CyclePmf::from_weights(vec![1.0, 2.0, 4.0, 2.0, 1.0]).unwrap(),
            1.0,
        )
        .unwrap();
        let g = build_generator(&spec);
        let m = size(5);
        let r0 = m.index(0).unwrap();
        let r1 = m.index(1).unwrap();
        assert_abs_diff_eq!(g.rate(r0, r1), 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(g.rate(r1, r0), 1.0 / 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn generator_rows_sum_to_zero() {
        let spec = TargetSpec::new(
            CyclePmf::from_weights(vec![0.3, 1.2, 0.05, 2.0, 0.7, 0.1]).unwrap(),
            0.8,
        )
        .unwrap();
        let g = build_generator(&spec);
        for r in size(6).states() {
            let sum: f64 = g.row(r).iter().sum();
            assert_abs_diff_eq!(sum, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn rates_lean_toward_the_heavier_neighbour() {
        let spec = TargetSpec::new(
            CyclePmf::from_weights(vec![1.0, 3.0, 1.0, 0.5, 0.1, 0.5]).unwrap(),
            1.0,
        )
        .unwrap();
        let g = build_generator(&spec);
        let m = size(6);
        for r in m.states() {
            let up_mass = spec.pi().prob(m.step(r, 1));
            let down_mass = spec.pi().prob(m.step(r, -1));
            let up = g.rate(r, m.step(r, 1));
            let down = g.rate(r, m.step(r, -1));
            assert_eq!(up > down, up_mass > down_mass);
        }
    }

    #[test]
    fn detailed_balance_holds_for_built_generators() {
        let pi = CyclePmf::from_weights(vec![0.2, 0.9, 1.7, 0.4, 0.05, 1.1, 0.6]).unwrap();
        let spec = TargetSpec::new(pi.clone(), 1.4).unwrap();
        let g = build_generator(&spec);
        let report = verify_detailed_balance(&g, &pi).unwrap();
        assert!(report.pass);
        assert!(report.max_gap <= 1e-14);
    }

    #[test]
    fn detailed_balance_fails_for_a_driven_rotation() {
        // Constant clockwise rate 2 alpha against counterclockwise alpha:
        // each neighbour pair carries flows 2/m and 1/m, a relative gap of
        // (2 - 1) / (2 + 1) = 1/3.
        let m = size(5);
        let n = 5;
        let mut rows = vec![0.0; n * n];
        for r in 0..n {
            rows[r * n + (r + 1) % n] = 2.0;
            rows[r * n + (r + n - 1) % n] = 1.0;
            rows[r * n + r] = -3.0;
        }
        let g = GeneratorMatrix::from_dense(m, rows).unwrap();
        let report = verify_detailed_balance(&g, &CyclePmf::uniform(m)).unwrap();
        assert!(!report.pass);
        assert_abs_diff_eq!(report.max_gap, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn stationarity_pi_q_vanishes() {
        let pi = CyclePmf::from_weights(vec![0.5, 1.0, 2.5, 1.5, 0.8, 0.3, 0.2, 1.9]).unwrap();
        let spec = TargetSpec::new(pi.clone(), 1.0).unwrap();
        let g = build_generator(&spec);
        let m = size(8);
        for s in m.states() {
            let flux: f64 = m.states().map(|r| pi.prob(r) * g.rate(r, s)).sum();
            assert_abs_diff_eq!(flux, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn log_domain_target_matches_direct_construction() {
        let weights: Vec<f64> = vec![0.5, 1.0, 2.5, 1.5, 0.8];
        let pi = CyclePmf::from_weights(weights.clone()).unwrap();
        let direct = build_generator(&TargetSpec::new(pi, 1.0).unwrap());
        let logs: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        let logged = build_generator(&TargetSpec::from_log_weights(logs, 1.0).unwrap());
        let m = size(5);
        for r in m.states() {
            for s in m.states() {
                assert_abs_diff_eq!(direct.rate(r, s), logged.rate(r, s), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn log_domain_target_survives_extreme_concentration() {
        // Weights spanning e^{-800} to 1 underflow as plain numbers, but the
        // rate ratios only need log differences.
        let logs = vec![0.0, -400.0, -800.0, -400.0];
        let spec = TargetSpec::from_log_weights(logs, 1.0);
        assert!(spec.is_err(), "pmf itself underflows to zero mass states");

        // Milder case: spans 600 e-folds but every state keeps positive mass.
        let logs: Vec<f64> = vec![0.0, -350.0, -700.0, -350.0];
        // exp(-700) is positive in f64, so construction succeeds and the
        // rates are exp(+-175) without overflow.
        let spec = TargetSpec::from_log_weights(logs, 1.0).unwrap();
        let g = build_generator(&spec);
        let m = size(4);
        let r0 = m.index(0).unwrap();
        let r1 = m.index(1).unwrap();
        assert_abs_diff_eq!(g.rate(r0, r1).ln(), -175.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.rate(r1, r0).ln(), 175.0, epsilon = 1e-12);
    }

    #[test]
    fn target_requires_strict_positivity() {
        let pi = CyclePmf::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert!(matches!(
            TargetSpec::new(pi, 1.0),
            Err(Error::NotStrictlyPositive { index: 2, .. })
        ));
    }

    #[test]
    fn from_dense_validates_rates() {
        let m = size(3);
        let rows = vec![-1.0, 1.0, 0.0, 0.5, -1.0, 0.5, -0.5, 1.0, -0.5];
        let err = GeneratorMatrix::from_dense(m, rows).unwrap_err();
        assert!(matches!(err, Error::NegativeRate { row: 2, col: 0, .. }));
    }

    #[test]
    fn transition_matrix_at_time_zero_is_identity() {
        let g = build_generator(&uniform_target(6, 1.0));
        let p = transition_matrix(&g, 0.0).unwrap();
        let m = size(6);
        for r in m.states() {
            for s in m.states() {
                assert_eq!(p.entry(r, s), if r == s { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn transition_matrix_rows_are_stochastic() {
        let pi = CyclePmf::from_weights(vec![1.0, 0.2, 3.0, 0.7, 0.9]).unwrap();
        let g = build_generator(&TargetSpec::new(pi, 2.0).unwrap());
        for t in [0.01, 0.5, 5.0, 40.0] {
            let p = transition_matrix(&g, t).unwrap();
            for r in size(5).states() {
                let row = p.row(r);
                assert!(row.iter().all(|&x| x >= 0.0));
                let sum: f64 = row.iter().sum();
                // Rounding accumulates over the hundreds of series terms the
                // largest time needs, so the budget is looser than one ulp
                // per entry.
                assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn uniform_chain_matches_the_spectral_kernel() {
        // The constant rate walk is the beta = 1 diffusion.
        let g = build_generator(&uniform_target(7, 1.3));
        let t = 0.6;
        let p = transition_matrix(&g, t).unwrap();
        let k = kernel(&DiffusionParams::new(size(7), 1.3, 1.0, t).unwrap()).unwrap();
        for r in size(7).states() {
            for s in size(7).states() {
                assert_abs_diff_eq!(p.entry(r, s), k.entry(r, s), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn long_time_rows_converge_to_the_target() {
        let pi = CyclePmf::from_weights(vec![0.4, 1.0, 2.2, 0.9, 0.3, 0.6]).unwrap();
        let g = build_generator(&TargetSpec::new(pi.clone(), 1.0).unwrap());
        let p = transition_matrix(&g, 200.0).unwrap();
        for r in size(6).states() {
            for s in size(6).states() {
                assert_abs_diff_eq!(p.entry(r, s), pi.prob(s), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn stationarity_under_the_transition_matrix() {
        let pi = CyclePmf::from_weights(vec![0.4, 1.0, 2.2, 0.9, 0.3, 0.6]).unwrap();
        let g = build_generator(&TargetSpec::new(pi.clone(), 1.0).unwrap());
        for t in [0.1, 1.0, 10.0] {
            let p = transition_matrix(&g, t).unwrap();
            let out = p.propagate(&pi).unwrap();
            for (a, b) in out.as_slice().iter().zip(pi.as_slice()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn reversibility_carries_to_the_transition_matrix() {
        let pi = CyclePmf::from_weights(vec![0.7, 1.1, 0.2, 1.9, 0.5]).unwrap();
        let g = build_generator(&TargetSpec::new(pi.clone(), 1.0).unwrap());
        let p = transition_matrix(&g, 0.8).unwrap();
        let m = size(5);
        for r in m.states() {
            for s in m.states() {
                let lhs = pi.prob(r) * p.entry(r, s);
                let rhs = pi.prob(s) * p.entry(s, r);
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn fractional_generator_exponentiates_to_the_kernel() {
        let m = size(6);
        let g = crate::semigroup::fractional_generator(m, 1.0, 0.5).unwrap();
        assert!(!g.is_nearest_neighbour());
        let t = 0.8;
        let p = transition_matrix(&g, t).unwrap();
        let k = kernel(&DiffusionParams::new(m, 1.0, 0.5, t).unwrap()).unwrap();
        for r in m.states() {
            for s in m.states() {
                assert_abs_diff_eq!(p.entry(r, s), k.entry(r, s), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn transition_matrix_rejects_negative_time() {
        let g = build_generator(&uniform_target(4, 1.0));
        assert!(matches!(transition_matrix(&g, -1.0), Err(Error::InvalidTime(_))));
    }
}

//! Parameter recovery from discretely observed paths: exact skeleton
//! likelihoods for both chain families, a derivative-free 1-D maximizer,
//! and the moment estimator based on the resultant length.
//!
//! Likelihood evaluations group observations by their time increment and
//! compute one transition kernel per distinct increment, so a regularly
//! sampled skeleton costs a single kernel regardless of its length.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::circle::{unit_roots, CycleIndex, CycleSize};
use crate::error::{Error, Result};
use crate::float::Float;
use crate::semigroup::{check_alpha, check_beta, kernel, spectrum, DiffusionParams};
use crate::target::{transition_matrix, GeneratorMatrix, TargetSpec};
use crate::dist::{vm_pmf, VonMisesParams};

/// Default search bracket for the rate and concentration estimators.
pub const DEFAULT_BRACKET: (f64, f64) = (1e-4, 1e4);

/// Absolute tolerance of the golden-section maximizer.
pub const GOLDEN_TOL: f64 = 1e-8;

/// Time increments are keyed by their value quantized at this resolution
/// when caching kernels; increments closer than this are one kernel.
const DT_QUANTUM: f64 = 1e-12;

/// A discretely observed path: states recorded at nondecreasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonObservations<F> {
    times: Vec<F>,
    states: Vec<usize>,
}

impl<F: Float> SkeletonObservations<F> {
    /// Validate an observation record. Times must be finite and
    /// nondecreasing; repeated times are allowed and represent instant
    /// re-observation.
    pub fn new(times: Vec<F>, states: Vec<usize>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::ObservationShapeMismatch {
                times: times.len(),
                states: states.len(),
            });
        }
        if times.len() < 2 {
            return Err(Error::TooFewObservations(times.len()));
        }
        for (index, &t) in times.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::InvalidTime(t.to_f64().unwrap_or(f64::NAN)));
            }
            if index > 0 && t < times[index - 1] {
                return Err(Error::DecreasingTimes {
                    index,
                    value: t.to_f64().unwrap_or(f64::NAN),
                    prev: times[index - 1].to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(SkeletonObservations { times, states })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[F] {
        &self.times
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    /// Check every recorded state against a cycle size.
    pub fn validated_states(&self, m: CycleSize) -> Result<Vec<CycleIndex>> {
        self.states.iter().map(|&s| m.index(s)).collect()
    }
}

fn quantized_key<F: Float>(dt: F) -> i64 {
    let scaled = dt.to_f64().unwrap_or(f64::MAX) / DT_QUANTUM;
    // Saturating conversion: increments beyond the representable range all
    // land in one bucket, where the kernel is uniform anyway.
    scaled.round() as i64
}

fn floored_ln<F: Float>(p: F) -> F {
    // Transition probabilities are strictly positive for positive time;
    // the floor only absorbs harmless underflow to zero.
    p.max(F::min_positive_value()).ln()
}

/// Log-likelihood of a skeleton under the fractional diffusion.
///
/// Zero increments contribute zero when the state is unchanged and force
/// the likelihood to negative infinity when it is not.
pub fn log_likelihood_diffusion<F: Float>(
    obs: &SkeletonObservations<F>,
    m: CycleSize,
    alpha: F,
    beta: F,
) -> Result<F> {
    check_alpha(alpha)?;
    check_beta(beta)?;
    let states = obs.validated_states(m)?;
    let mut rows: BTreeMap<i64, Vec<F>> = BTreeMap::new();
    let mut ll = F::zero();
    for i in 1..obs.len() {
        let dt = obs.times[i] - obs.times[i - 1];
        let from = states[i - 1];
        let to = states[i];
        if dt == F::zero() {
            if from != to {
                return Ok(F::neg_infinity());
            }
            continue;
        }
        let key = quantized_key(dt);
        if !rows.contains_key(&key) {
            let params = DiffusionParams::new(m, alpha, beta, dt)?;
            rows.insert(key, kernel(&params)?.first_row());
        }
        let row = &rows[&key];
        ll = ll + floored_ln(row[m.offset(from, to)]);
    }
    Ok(ll)
}

/// Log-likelihood of a skeleton under the chain with generator `g`.
pub fn log_likelihood_target<F: Float>(
    obs: &SkeletonObservations<F>,
    g: &GeneratorMatrix<F>,
) -> Result<F> {
    let m = g.size();
    let states = obs.validated_states(m)?;
    let mut kernels = BTreeMap::new();
    let mut ll = F::zero();
    for i in 1..obs.len() {
        let dt = obs.times[i] - obs.times[i - 1];
        let from = states[i - 1];
        let to = states[i];
        if dt == F::zero() {
            if from != to {
                return Ok(F::neg_infinity());
            }
            continue;
        }
        let key = quantized_key(dt);
        if !kernels.contains_key(&key) {
            kernels.insert(key, transition_matrix(g, dt)?);
        }
        ll = ll + floored_ln(kernels[&key].entry(from, to));
    }
    Ok(ll)
}

/// Maximize a unimodal function on [lo, hi] by golden-section search,
/// stopping when the bracket is narrower than `tol`.
pub fn golden_section_max<F: Float>(
    mut f: impl FnMut(F) -> F,
    lo: F,
    hi: F,
    tol: F,
) -> Result<F> {
    if !(lo > F::zero()) || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidBracket {
            lo: lo.to_f64().unwrap_or(f64::NAN),
            hi: hi.to_f64().unwrap_or(f64::NAN),
        });
    }
    let ratio = (F::cast(5.0).sqrt() - F::one()) / F::cast(2.0);
    let mut a = lo;
    let mut b = hi;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    Ok((a + b) / F::cast(2.0))
}

/// Number of geometric grid points used to localize a likelihood peak before
/// golden section refinement.
const SCAN_POINTS: usize = 65;

/// Maximize over a positive bracket: a coarse geometric scan localizes the
/// peak, then golden section refines the winning sub-interval.
///
/// The scan step matters for likelihoods over wide brackets: far from the
/// peak the surface is often flat at machine precision (every kernel has
/// already mixed to uniform), and pure golden section can stall on that
/// plateau instead of descending toward the peak.
fn maximize_over_bracket<F: Float>(
    mut f: impl FnMut(F) -> F,
    lo: F,
    hi: F,
    tol: F,
) -> Result<F> {
    if !(lo > F::zero()) || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidBracket {
            lo: lo.to_f64().unwrap_or(f64::NAN),
            hi: hi.to_f64().unwrap_or(f64::NAN),
        });
    }
    let log_lo = lo.ln();
    let step = (hi.ln() - log_lo) / F::from_count(SCAN_POINTS - 1);
    let grid: Vec<F> = (0..SCAN_POINTS)
        .map(|i| (log_lo + F::from_count(i) * step).exp())
        .collect();
    let mut best = 0;
    let mut best_value = f(grid[0]);
    for (i, &x) in grid.iter().enumerate().skip(1) {
        let value = f(x);
        if value > best_value {
            best = i;
            best_value = value;
        }
    }
    let sub_lo = grid[best.saturating_sub(1)].max(lo);
    let sub_hi = grid[(best + 1).min(SCAN_POINTS - 1)].min(hi);
    golden_section_max(f, sub_lo, sub_hi, tol)
}

/// Maximum likelihood estimate of the rate scale alpha of the fractional
/// diffusion with known beta.
pub fn mle_alpha<F: Float>(
    obs: &SkeletonObservations<F>,
    m: CycleSize,
    beta: F,
    bracket: (F, F),
) -> Result<F> {
    mle_alpha_pooled(std::slice::from_ref(obs), m, beta, bracket)
}

/// Pooled variant of [`mle_alpha`]: maximizes the summed log-likelihood of
/// independent replicate skeletons.
pub fn mle_alpha_pooled<F: Float>(
    obs: &[SkeletonObservations<F>],
    m: CycleSize,
    beta: F,
    bracket: (F, F),
) -> Result<F> {
    check_beta(beta)?;
    if obs.is_empty() {
        return Err(Error::TooFewObservations(0));
    }
    for o in obs {
        o.validated_states(m)?;
    }
    maximize_over_bracket(
        |alpha| {
            obs.iter()
                .map(|o| {
                    log_likelihood_diffusion(o, m, alpha, beta).unwrap_or(F::neg_infinity())
                })
                .sum()
        },
        bracket.0,
        bracket.1,
        F::cast(GOLDEN_TOL),
    )
}

/// Maximum likelihood estimate of the von Mises concentration kappa for a
/// nearest-neighbour chain with known rate scale and location.
pub fn mle_vm_kappa<F: Float>(
    obs: &SkeletonObservations<F>,
    m: CycleSize,
    alpha: F,
    mu: F,
    bracket: (F, F),
) -> Result<F> {
    mle_vm_kappa_pooled(std::slice::from_ref(obs), m, alpha, mu, bracket)
}

/// Pooled variant of [`mle_vm_kappa`]: maximizes the summed log-likelihood
/// of independent replicate skeletons.
pub fn mle_vm_kappa_pooled<F: Float>(
    obs: &[SkeletonObservations<F>],
    m: CycleSize,
    alpha: F,
    mu: F,
    bracket: (F, F),
) -> Result<F> {
    check_alpha(alpha)?;
    if obs.is_empty() {
        return Err(Error::TooFewObservations(0));
    }
    for o in obs {
        o.validated_states(m)?;
    }
    maximize_over_bracket(
        |kappa| {
            let generator = VonMisesParams::new(m, kappa, mu)
                .and_then(|params| vm_pmf(&params))
                .and_then(|pi| TargetSpec::new(pi, alpha))
                .map(|spec| crate::target::build_generator(&spec));
            match generator {
                Ok(g) => obs
                    .iter()
                    .map(|o| log_likelihood_target(o, &g).unwrap_or(F::neg_infinity()))
                    .sum(),
                Err(_) => F::neg_infinity(),
            }
        },
        bracket.0,
        bracket.1,
        F::cast(GOLDEN_TOL),
    )
}

/// Invert the resultant decay R(t) = exp(-alpha t lambda_1^beta): given an
/// observed resultant length, return the implied alpha t product.
pub fn fit_alpha_t<F: Float>(r_hat: F, m: CycleSize, beta: F) -> Result<F> {
    check_beta(beta)?;
    if !(r_hat > F::zero()) || !(r_hat <= F::one()) {
        return Err(Error::InvalidResultant(r_hat.to_f64().unwrap_or(f64::NAN)));
    }
    let gap = spectrum::<F>(m).lambda_star().powf(beta);
    Ok(-r_hat.ln() / gap)
}

/// Empirical trigonometric moment (1/n) sum_j e^{i ell theta_{x_j}} of a
/// batch of draws.
pub fn empirical_trig_moment<F: Float>(
    draws: &[CycleIndex],
    m: CycleSize,
    ell: i64,
) -> Result<Complex<F>> {
    if draws.is_empty() {
        return Err(Error::TooFewObservations(0));
    }
    let n = m.get();
    let k = m.wrap(ell).get();
    let roots = unit_roots::<F>(m, 1.0);
    let mut counts = vec![0usize; n];
    for d in draws {
        counts[d.get()] += 1;
    }
    let total = F::from_count(draws.len());
    let mut acc = Complex::new(F::zero(), F::zero());
    for (r, &count) in counts.iter().enumerate() {
        if count > 0 {
            acc += roots[(k * r) % n].scale(F::from_count(count) / total);
        }
    }
    Ok(acc)
}

/// Empirical resultant length of a batch of draws.
pub fn empirical_resultant<F: Float>(draws: &[CycleIndex], m: CycleSize) -> Result<F> {
    Ok(empirical_trig_moment::<F>(draws, m, 1)?.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::CyclePmf;
    use crate::simulate::{replicate_rng, RngSeed};
    use crate::target::build_generator;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn size(m: usize) -> CycleSize {
        CycleSize::new(m).unwrap()
    }

    fn obs(times: Vec<f64>, states: Vec<usize>) -> SkeletonObservations<f64> {
        SkeletonObservations::new(times, states).unwrap()
    }

    /// Draw a regular skeleton from a transition kernel row by row.
    fn skeleton_from_kernel(
        k: &crate::semigroup::TransitionKernel<f64>,
        x0: usize,
        steps: usize,
        dt: f64,
        seed: u64,
    ) -> SkeletonObservations<f64> {
        let m = k.size();
        let mut rng = replicate_rng(RngSeed(seed), 0);
        let mut times = vec![0.0];
        let mut states = vec![x0];
        let mut x = m.index(x0).unwrap();
        for i in 1..=steps {
            let row = k.row(x);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut next = m.get() - 1;
            for (s, &mass) in row.iter().enumerate() {
                acc += mass;
                if u < acc {
                    next = s;
                    break;
                }
            }
            x = m.index(next).unwrap();
            times.push(i as f64 * dt);
            states.push(next);
        }
        SkeletonObservations::new(times, states).unwrap()
    }

    #[test]
    fn skeleton_validation() {
        assert!(matches!(
            SkeletonObservations::new(vec![0.0, 1.0], vec![0]),
            Err(Error::ObservationShapeMismatch { .. })
        ));
        assert!(matches!(
            SkeletonObservations::new(vec![0.0], vec![0]),
            Err(Error::TooFewObservations(1))
        ));
        assert!(matches!(
            SkeletonObservations::new(vec![0.0, 1.0, 0.5], vec![0, 1, 2]),
            Err(Error::DecreasingTimes { index: 2, .. })
        ));
        assert!(matches!(
            SkeletonObservations::new(vec![0.0, f64::NAN], vec![0, 1]),
            Err(Error::InvalidTime(_))
        ));
        // Repeated times are allowed.
        assert!(SkeletonObservations::new(vec![0.0, 0.0, 1.0], vec![0, 0, 1]).is_ok());
    }

    #[test]
    fn out_of_range_states_are_caught_at_likelihood_time() {
        let o = obs(vec![0.0, 1.0], vec![0, 7]);
        let err = log_likelihood_diffusion(&o, size(4), 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { index: 7, m: 4 }));
    }

    #[test]
    fn zero_increment_contributes_nothing_when_the_state_repeats() {
        let with_repeat = obs(vec![0.0, 0.0, 1.0], vec![2, 2, 3]);
        let without = obs(vec![0.0, 1.0], vec![2, 3]);
        let a = log_likelihood_diffusion(&with_repeat, size(5), 1.0, 1.0).unwrap();
        let b = log_likelihood_diffusion(&without, size(5), 1.0, 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_increment_with_a_state_change_is_impossible() {
        let o = obs(vec![0.0, 0.0], vec![1, 2]);
        let ll = log_likelihood_diffusion(&o, size(5), 1.0, 1.0).unwrap();
        assert_eq!(ll, f64::NEG_INFINITY);
        let g = build_generator(
            &TargetSpec::new(CyclePmf::uniform(size(5)), 1.0).unwrap(),
        );
        assert_eq!(log_likelihood_target(&o, &g).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn long_increment_likelihood_approaches_log_uniform() {
        let o = obs(vec![0.0, 500.0], vec![1, 3]);
        let ll = log_likelihood_diffusion(&o, size(6), 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(ll, (1.0 / 6.0f64).ln(), epsilon = 1e-12);
    }

    #[test]
    fn single_transition_likelihood_is_the_kernel_entry() {
        let m = size(4);
        let o = obs(vec![0.0, 0.3], vec![0, 2]);
        let ll = log_likelihood_diffusion(&o, m, 1.0, 1.0).unwrap();
        let params: DiffusionParams<f64> = DiffusionParams::new(m, 1.0, 1.0, 0.3).unwrap();
        let k = kernel(&params).unwrap();
        let expected = k.entry(m.index(0).unwrap(), m.index(2).unwrap()).ln();
        assert_eq!(ll, expected);
    }

    #[test]
    fn likelihood_is_rotation_invariant() {
        let m = size(7);
        let times = vec![0.0, 0.2, 0.9, 1.4, 2.0];
        let states = vec![0usize, 1, 6, 4, 4];
        let base = obs(times.clone(), states.clone());
        for shift in 1..7usize {
            let rotated: Vec<usize> = states.iter().map(|&s| (s + shift) % 7).collect();
            let o = obs(times.clone(), rotated);
            let a = log_likelihood_diffusion(&base, m, 0.9, 0.6).unwrap();
            let b = log_likelihood_diffusion(&o, m, 0.9, 0.6).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn target_likelihood_of_uniform_chain_matches_the_diffusion() {
        let m = size(5);
        let g = build_generator(&TargetSpec::new(CyclePmf::uniform(m), 1.2).unwrap());
        let o = obs(vec![0.0, 0.4, 0.9, 1.3], vec![0, 1, 4, 2]);
        let target_ll = log_likelihood_target(&o, &g).unwrap();
        let diff_ll = log_likelihood_diffusion(&o, m, 1.2, 1.0).unwrap();
        assert_abs_diff_eq!(target_ll, diff_ll, epsilon = 1e-9);
    }

    #[test]
    fn golden_section_finds_a_quadratic_peak() {
        let peak = golden_section_max(|x: f64| -(x - 3.0) * (x - 3.0), 1e-4, 10.0, 1e-8)
            .unwrap();
        assert_abs_diff_eq!(peak, 3.0, epsilon = 1e-7);
    }

    #[test]
    fn golden_section_rejects_bad_brackets() {
        let f = |x: f64| -x;
        assert!(golden_section_max(f, 0.0, 1.0, 1e-8).is_err());
        assert!(golden_section_max(f, 2.0, 1.0, 1e-8).is_err());
        assert!(golden_section_max(f, 1.0, f64::INFINITY, 1e-8).is_err());
    }

    #[test]
    fn mle_alpha_agrees_with_a_grid_scan() {
        let m = size(4);
        let o = obs(vec![0.0, 1.0, 2.0, 3.0], vec![0, 1, 1, 2]);
        let mle = mle_alpha(&o, m, 1.0, (1e-3, 10.0)).unwrap();
        // Independent route: exhaustive scan over a fine grid.
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 1..30_000 {
            let alpha = i as f64 * 1e-3;
            let ll = log_likelihood_diffusion(&o, m, alpha, 1.0).unwrap();
            if ll > best.0 {
                best = (ll, alpha);
            }
        }
        assert_abs_diff_eq!(mle, best.1, epsilon = 1e-3);
    }

    #[test]
    fn doubling_the_times_halves_the_rate_estimate() {
        let m = size(6);
        let times: Vec<f64> = (0..60).map(|i| i as f64 * 0.25).collect();
        let states: Vec<usize> =
            vec![0, 1, 2, 2, 3, 4, 5, 0, 0, 1, 0, 5, 4, 4, 3, 2, 1, 1, 0, 5].repeat(3);
        let base = SkeletonObservations::new(times.clone(), states.clone()).unwrap();
        let doubled = SkeletonObservations::new(
            times.iter().map(|t| 2.0 * t).collect(),
            states,
        )
        .unwrap();
        let a1 = mle_alpha(&base, m, 0.8, (1e-4, 1e3)).unwrap();
        let a2 = mle_alpha(&doubled, m, 0.8, (1e-4, 1e3)).unwrap();
        assert_abs_diff_eq!(a2, a1 / 2.0, epsilon = 1e-5);
    }

    #[test]
    fn mle_alpha_recovers_a_simulated_rate() {
        let m = size(6);
        let true_alpha = 0.8;
        let dt = 0.1;
        let params = DiffusionParams::new(m, true_alpha, 0.5, dt).unwrap();
        let k = kernel(&params).unwrap();
        let skeleton = skeleton_from_kernel(&k, 0, 1500, dt, 99);
        let estimate = mle_alpha(&skeleton, m, 0.5, (1e-3, 1e2)).unwrap();
        assert_abs_diff_eq!(estimate, true_alpha, epsilon = 0.1);
    }

    #[test]
    fn mle_kappa_recovers_a_simulated_concentration() {
        let m = size(6);
        let true_kappa = 2.0;
        let pi = vm_pmf(&VonMisesParams::new(m, true_kappa, 0.0).unwrap()).unwrap();
        let g = build_generator(&TargetSpec::new(pi, 1.0).unwrap());
        let dt = 0.2;
        let k = transition_matrix(&g, dt).unwrap();
        let skeleton = skeleton_from_kernel(&k, 0, 900, dt, 17);
        let estimate = mle_vm_kappa(&skeleton, m, 1.0, 0.0, (0.05, 20.0)).unwrap();
        assert_abs_diff_eq!(estimate, true_kappa, epsilon = 0.5);
    }

    #[test]
    fn fit_alpha_t_known_points() {
        let m = size(8);
        assert_eq!(fit_alpha_t(1.0, m, 1.0).unwrap(), 0.0);
        let gap: f64 = spectrum::<f64>(m).lambda_star();
        let r = (-gap).exp();
        assert_abs_diff_eq!(fit_alpha_t(r, m, 1.0).unwrap(), 1.0, epsilon = 1e-12);
        let r = (-0.37 * gap.powf(0.5)).exp();
        assert_abs_diff_eq!(fit_alpha_t(r, m, 0.5).unwrap(), 0.37, epsilon = 1e-14);
    }

    #[test]
    fn fit_alpha_t_rejects_degenerate_resultants() {
        let m = size(8);
        assert!(matches!(fit_alpha_t(0.0, m, 1.0), Err(Error::InvalidResultant(_))));
        assert!(matches!(fit_alpha_t(1.2, m, 1.0), Err(Error::InvalidResultant(_))));
        assert!(matches!(fit_alpha_t(f64::NAN, m, 1.0), Err(Error::InvalidResultant(_))));
    }

    #[test]
    fn empirical_moment_counts_correctly() {
        let m = size(4);
        let draws = vec![
            m.index(0).unwrap(),
            m.index(0).unwrap(),
            m.index(1).unwrap(),
            m.index(3).unwrap(),
        ];
        // (1/4)(2 e^{0} + e^{i pi/2} + e^{-i pi/2}) = 1/2.
        let moment = empirical_trig_moment::<f64>(&draws, m, 1).unwrap();
        assert_abs_diff_eq!(moment.re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(moment.im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            empirical_resultant::<f64>(&draws, m).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert!(empirical_trig_moment::<f64>(&[], m, 1).is_err());
    }
}

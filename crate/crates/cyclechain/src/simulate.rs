//! Exact simulation of the chains: full continuous-time paths by the
//! Gillespie algorithm and direct draws from one-time marginals.
//!
//! All randomness flows through a counter-based generator seeded from a
//! single u64; replicate k uses stream k of the same seed, so ensembles
//! are reproducible and individual paths can be regenerated in isolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circle::{CycleIndex, CyclePmf, CycleSize};
use crate::error::{Error, Result};
use crate::float::Float;
use crate::semigroup::{kernel, DiffusionParams, TransitionKernel};
use crate::target::{transition_matrix, GeneratorMatrix};

/// Seed for a reproducible experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSeed(pub u64);

/// The generator for one replicate of an experiment: same seed, stream
/// indexed by the replicate number.
pub fn replicate_rng(seed: RngSeed, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    rng.set_stream(replicate);
    rng
}

/// A single continuous-time trajectory on [0, horizon].
///
/// `states[i]` is the state entered at `jump_times[i]`; the chain sits in
/// `initial` before the first jump and in the last state through the
/// horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath<F> {
    initial: CycleIndex,
    jump_times: Vec<F>,
    states: Vec<CycleIndex>,
    horizon: F,
}

impl<F: Float> SamplePath<F> {
    pub fn initial(&self) -> CycleIndex {
        self.initial
    }

    pub fn jump_times(&self) -> &[F] {
        &self.jump_times
    }

    pub fn states_after_jumps(&self) -> &[CycleIndex] {
        &self.states
    }

    pub fn horizon(&self) -> F {
        self.horizon
    }

    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    /// State occupied at time `t` (right-continuous).
    pub fn state_at(&self, t: F) -> CycleIndex {
        let mut current = self.initial;
        for (time, &state) in self.jump_times.iter().zip(&self.states) {
            if *time <= t {
                current = state;
            } else {
                break;
            }
        }
        current
    }

    /// The final state at the horizon.
    pub fn final_state(&self) -> CycleIndex {
        self.states.last().copied().unwrap_or(self.initial)
    }

    /// Fraction of time spent in each state over [0, horizon].
    pub fn occupation(&self, m: CycleSize) -> Vec<F> {
        let mut time_in = vec![F::zero(); m.get()];
        let mut current = self.initial;
        let mut last = F::zero();
        for (time, &state) in self.jump_times.iter().zip(&self.states) {
            time_in[current.get()] = time_in[current.get()] + (*time - last);
            last = *time;
            current = state;
        }
        time_in[current.get()] = time_in[current.get()] + (self.horizon - last);
        time_in.into_iter().map(|x| x / self.horizon).collect()
    }
}

fn check_horizon<F: Float>(horizon: F) -> Result<()> {
    if !(horizon > F::zero()) || !horizon.is_finite() {
        return Err(Error::InvalidHorizon(horizon.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

/// An exponential holding time with the given rate.
fn exponential<F: Float>(rng: &mut ChaCha8Rng, rate: F) -> F {
    let u: f64 = rng.random();
    // 1 - u is in (0, 1], so the log never sees zero.
    -F::cast((1.0 - u).ln()) / rate
}

/// Pick the jump destination in proportion to the off-diagonal rates.
fn next_state<F: Float>(rng: &mut ChaCha8Rng, g: &GeneratorMatrix<F>, from: CycleIndex) -> CycleIndex {
    let m = g.size();
    let total = g.exit_rate(from);
    let u: f64 = rng.random();
    let threshold = F::cast(u) * total;
    let mut acc = F::zero();
    let mut fallback = from;
    for s in m.states() {
        if s == from {
            continue;
        }
        let rate = g.rate(from, s);
        if rate <= F::zero() {
            continue;
        }
        acc = acc + rate;
        fallback = s;
        if threshold < acc {
            return s;
        }
    }
    // Rounding can leave the threshold marginally above the accumulated
    // total; the last reachable state absorbs that sliver.
    fallback
}

fn simulate_with_rng<F: Float>(
    g: &GeneratorMatrix<F>,
    x0: CycleIndex,
    horizon: F,
    rng: &mut ChaCha8Rng,
) -> SamplePath<F> {
    let mut t = F::zero();
    let mut x = x0;
    let mut jump_times = Vec::new();
    let mut states = Vec::new();
    loop {
        let rate = g.exit_rate(x);
        if !(rate > F::zero()) {
            break; // absorbing state: the path sits here forever
        }
        let dt = exponential(rng, rate);
        if t + dt > horizon {
            break;
        }
        t = t + dt;
        x = next_state(rng, g, x);
        jump_times.push(t);
        states.push(x);
    }
    SamplePath { initial: x0, jump_times, states, horizon }
}

/// Simulate one exact trajectory of the chain with generator `g`.
pub fn simulate_path<F: Float>(
    g: &GeneratorMatrix<F>,
    x0: CycleIndex,
    horizon: F,
    seed: RngSeed,
) -> Result<SamplePath<F>> {
    check_horizon(horizon)?;
    let mut rng = replicate_rng(seed, 0);
    Ok(simulate_with_rng(g, x0, horizon, &mut rng))
}

/// Simulate `n` independent trajectories; replicate k uses stream k.
pub fn simulate_paths<F: Float>(
    g: &GeneratorMatrix<F>,
    x0: CycleIndex,
    horizon: F,
    n: usize,
    seed: RngSeed,
) -> Result<Vec<SamplePath<F>>> {
    check_horizon(horizon)?;
    (0..n)
        .map(|k| {
            let mut rng = replicate_rng(seed, k as u64);
            Ok(simulate_with_rng(g, x0, horizon, &mut rng))
        })
        .collect()
}

/// Inverse-CDF draw from one kernel row.
fn draw_from_row<F: Float>(rng: &mut ChaCha8Rng, row: &[F]) -> usize {
    let u = F::cast(rng.random::<f64>());
    let mut acc = F::zero();
    for (s, &mass) in row.iter().enumerate() {
        acc = acc + mass;
        if u < acc {
            return s;
        }
    }
    row.len() - 1
}

fn sample_from_kernel_row<F: Float>(
    kernel: &TransitionKernel<F>,
    x0: CycleIndex,
    n: usize,
    seed: RngSeed,
) -> Vec<CycleIndex> {
    let m = kernel.size();
    let row = kernel.row(x0);
    let mut rng = replicate_rng(seed, 0);
    (0..n)
        .map(|_| {
            let s = draw_from_row(&mut rng, &row);
            m.wrap(s as i64)
        })
        .collect()
}

/// Draw `n` states from the time-t marginal of the fractional diffusion
/// started at `x0`.
pub fn sample_marginal_diffusion<F: Float>(
    params: &DiffusionParams<F>,
    x0: CycleIndex,
    n: usize,
    seed: RngSeed,
) -> Result<Vec<CycleIndex>> {
    let k = kernel(params)?;
    Ok(sample_from_kernel_row(&k, x0, n, seed))
}

/// Draw `n` states from the time-t marginal of the chain with generator
/// `g` started at `x0`.
pub fn sample_marginal_chain<F: Float>(
    g: &GeneratorMatrix<F>,
    t: F,
    x0: CycleIndex,
    n: usize,
    seed: RngSeed,
) -> Result<Vec<CycleIndex>> {
    let p = transition_matrix(g, t)?;
    Ok(sample_from_kernel_row(&p, x0, n, seed))
}

/// Empirical pmf of a batch of draws.
pub fn empirical_pmf<F: Float>(draws: &[CycleIndex], m: CycleSize) -> Result<CyclePmf<F>> {
    if draws.is_empty() {
        return Err(Error::TooFewObservations(0));
    }
    let mut counts = vec![F::zero(); m.get()];
    for &d in draws {
        counts[d.get()] = counts[d.get()] + F::one();
    }
    CyclePmf::from_weights(counts)
}

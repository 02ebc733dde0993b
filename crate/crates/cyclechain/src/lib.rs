//! Markov dynamics on the discrete circle.
//!
//! The crate covers two families of continuous-time chains on the m-point
//! cycle and the tooling around them:
//!
//! * fractional diffusions generated by -alpha L^beta, where L is the cycle
//!   Laplacian: exact transition kernels, trigonometric moments, and
//!   spectral mixing bounds ([`semigroup`]);
//! * reversible nearest-neighbour chains built to leave a prescribed
//!   circular law invariant, such as a discrete von Mises or wrapped Cauchy
//!   target ([`target`], [`dist`]);
//! * exact path simulation, marginal sampling, and likelihood or
//!   moment-based parameter recovery ([`simulate`], [`estimate`]);
//! * serialization of the file formats shared with the CLI ([`io`]) and a
//!   self-check suite ([`validate`]).
//!
//! All numerics are generic over the scalar type through [`float::Float`];
//! the aliases at the crate root fix `f64`, which is what the CLI and the
//! file formats use.
//!
//! ```
//! use cyclechain::{CycleSize, DiffusionParams, Pmf, evolve, mixing_bound};
//!
//! let m = CycleSize::new(8)?;
//! let params = DiffusionParams::new(m, 1.0, 0.5, 0.3)?;
//! let start = Pmf::delta(m, m.index(0)?);
//! let later = evolve(&start, &params)?;
//! assert!(mixing_bound(&start, &params)? < 1.5);
//! # Ok::<(), cyclechain::Error>(())
//! ```

pub mod circle;
pub mod dist;
pub mod error;
pub mod estimate;
pub mod float;
pub mod io;
pub mod semigroup;
pub mod simulate;
pub mod target;
pub mod validate;

pub use circle::{
    dft_forward, dft_forward_real, dft_inverse, total_variation, uniform_l2_norm, CycleIndex,
    CycleSize, GridAngle, PMF_SUM_TOL,
};
pub use dist::{
    bessel_i, vm_normalizer, vm_normalizer_direct, vm_pmf, vm_trig_moment, wc_normalizer,
    wc_normalizer_direct, wc_pmf, wc_pmf_closed, wc_trig_moment, VonMisesParams,
    WrappedCauchyParams,
};
pub use error::{Error, Result};
pub use estimate::{
    empirical_resultant, empirical_trig_moment, fit_alpha_t, golden_section_max,
    log_likelihood_diffusion, log_likelihood_target, mle_alpha, mle_alpha_pooled,
    mle_vm_kappa, mle_vm_kappa_pooled, SkeletonObservations, DEFAULT_BRACKET, GOLDEN_TOL,
};
pub use semigroup::{
    evolve, fractional_generator, kernel, mixing_bound, resultant_length, spectrum, trig_moment,
    DiffusionParams, Spectrum, TransitionKernel,
};
pub use simulate::{
    empirical_pmf, replicate_rng, sample_marginal_chain, sample_marginal_diffusion,
    simulate_path, simulate_paths, RngSeed, SamplePath,
};
pub use target::{
    build_generator, transition_matrix, verify_detailed_balance, DetailedBalanceReport,
    GeneratorMatrix, TargetSpec, DETAILED_BALANCE_TOL, UNIFORMIZATION_MAX_TERMS,
};
pub use validate::{run_suite, CheckResult, Suite, ValidationReport};

/// Probability vector on the cycle with `f64` entries.
pub type Pmf = circle::CyclePmf<f64>;
/// DFT coefficients with `f64` components.
pub type Dft = circle::DftCoefficients<f64>;
/// Transition kernel with `f64` entries.
pub type Kernel = semigroup::TransitionKernel<f64>;
/// Generator matrix with `f64` entries.
pub type Generator = target::GeneratorMatrix<f64>;
/// Sample path with `f64` jump times.
pub type Path = simulate::SamplePath<f64>;

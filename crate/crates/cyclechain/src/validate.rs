//! Self-check suite: every structural identity the library relies on,
//! evaluated at a caller-chosen grid size and reported with the worst
//! observed error against its pinned tolerance.
//!
//! The suite is deterministic: pseudo-random inputs come from a fixed
//! counter-based generator, so two runs on the same build produce
//! byte-identical reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circle::{
    dft_forward_real, dft_inverse, total_variation, uniform_l2_norm, unit_roots, CyclePmf,
    CycleSize,
};
use crate::dist::{
    bessel_i, vm_normalizer, vm_normalizer_direct, vm_pmf, vm_trig_moment, wc_normalizer,
    wc_normalizer_direct, wc_pmf, wc_trig_moment, VonMisesParams, WrappedCauchyParams,
};
use crate::error::{Error, Result};
use crate::estimate::fit_alpha_t;
use crate::semigroup::{
    evolve, fractional_generator, kernel, mixing_bound, resultant_length, spectrum, trig_moment,
    DiffusionParams,
};
use crate::simulate::{simulate_path, RngSeed};
use crate::target::{
    build_generator, transition_matrix, verify_detailed_balance, TargetSpec,
};

/// Seed of the deterministic inputs used by the suite.
const SUITE_SEED: u64 = 0x00c1_0c1e;

/// Outcome of one named identity check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub max_error: f64,
    pub tolerance: f64,
}

/// Outcome of a full suite run.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub m: usize,
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    /// CSV rendering: one row per check.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,passed,max_error,tolerance\n");
        for check in &self.checks {
            out.push_str(&format!(
                "{},{},{},{}\n",
                check.name, check.passed, check.max_error, check.tolerance
            ));
        }
        out
    }
}

/// Which group of identities to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Core,
    Semigroup,
    Target,
    Dist,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Core => "core",
            Suite::Semigroup => "semigroup",
            Suite::Target => "target",
            Suite::Dist => "dist",
            Suite::All => "all",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "core" => Ok(Suite::Core),
            "semigroup" => Ok(Suite::Semigroup),
            "target" => Ok(Suite::Target),
            "dist" => Ok(Suite::Dist),
            "all" => Ok(Suite::All),
            other => Err(Error::FileFormat(format!(
                "unknown suite {other:?}; expected core, semigroup, target, dist, or all"
            ))),
        }
    }
}

struct Recorder {
    checks: Vec<CheckResult>,
}

impl Recorder {
    fn new() -> Self {
        Recorder { checks: Vec::new() }
    }

    fn record(&mut self, name: &str, max_error: f64, tolerance: f64) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            passed: max_error <= tolerance,
            max_error,
            tolerance,
        });
    }
}

fn suite_rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SUITE_SEED)
}

/// A strictly positive pseudo-random pmf with bounded mass ratios.
fn random_pmf(m: CycleSize, rng: &mut ChaCha8Rng) -> CyclePmf<f64> {
    let w: Vec<f64> = (0..m.get()).map(|_| 0.05 + rng.random::<f64>()).collect();
    CyclePmf::from_weights(w).expect("positive weights always normalize")
}

/// Run one suite at the given grid size.
pub fn run_suite(m: CycleSize, suite: Suite) -> Result<ValidationReport> {
    let mut rec = Recorder::new();
    match suite {
        Suite::Core => check_core(m, &mut rec)?,
        Suite::Semigroup => check_semigroup(m, &mut rec)?,
        Suite::Target => check_target(m, &mut rec)?,
        Suite::Dist => check_dist(m, &mut rec)?,
        Suite::All => {
            check_core(m, &mut rec)?;
            check_semigroup(m, &mut rec)?;
            check_target(m, &mut rec)?;
            check_dist(m, &mut rec)?;
        }
    }
    let passed = rec.checks.iter().all(|c| c.passed);
    Ok(ValidationReport {
        m: m.get(),
        suite: suite.name().to_string(),
        passed,
        checks: rec.checks,
    })
}

fn check_core(m: CycleSize, rec: &mut Recorder) -> Result<()> {
    let mut rng = suite_rng();
    let n = m.get();

    // Forward-then-inverse transform returns the start.
    let p = random_pmf(m, &mut rng);
    let back = dft_inverse(&p.dft());
    let mut err: f64 = 0.0;
    for (r, &mass) in p.as_slice().iter().enumerate() {
        err = err.max((back[r].re - mass).abs()).max(back[r].im.abs());
    }
    rec.record("dft_round_trip", err, 1e-13);

    // Energy in state space equals energy in frequency space.
    let g: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let coeffs = dft_forward_real(m, &g);
    let lhs: f64 = g.iter().map(|x| x * x).sum::<f64>() / n as f64;
    let rhs: f64 =
        coeffs.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / (n * n) as f64;
    rec.record("parseval_identity", (lhs - rhs).abs() / lhs.abs(), 1e-12);

    // Characters are orthonormal under the uniform inner product.
    let roots = unit_roots::<f64>(m, 1.0);
    let mut err: f64 = 0.0;
    for k in 0..n {
        for l in 0..n {
            let mut re = 0.0;
            let mut im = 0.0;
            for r in 0..n {
                let root = roots[((n + k - l) % n * r) % n];
                re += root.re;
                im += root.im;
            }
            re /= n as f64;
            im /= n as f64;
            let expected = if k == l { 1.0 } else { 0.0 };
            err = err.max((re - expected).abs()).max(im.abs());
        }
    }
    rec.record("character_orthogonality", err, 1e-13);

    // The deviation field m p - 1 averages to zero under the uniform law.
    let p = random_pmf(m, &mut rng);
    let mean: f64 = p.ratio_deviation().iter().sum::<f64>() / n as f64;
    rec.record("deviation_mean_zero", mean.abs(), 1e-12);

    // TV between a point mass and uniform is 1 - 1/m.
    let d: CyclePmf<f64> = CyclePmf::delta(m, m.index(0)?);
    let tv = total_variation(&d, &CyclePmf::uniform(m))?;
    rec.record("tv_delta_uniform", (tv - (1.0 - 1.0 / n as f64)).abs(), 1e-15);
    Ok(())
}

fn check_semigroup(m: CycleSize, rec: &mut Recorder) -> Result<()> {
    let mut rng = suite_rng();
    let betas = [0.25, 0.5, 0.75, 1.0];
    let times = [0.01, 0.1, 1.0, 10.0];
    let alpha = 1.0;

    let mut row_err: f64 = 0.0;
    let mut neg_err: f64 = 0.0;
    let mut sym_err: f64 = 0.0;
    for &beta in &betas {
        for &t in &times {
            let k = kernel(&DiffusionParams::new(m, alpha, beta, t)?)?;
            for r in m.states() {
                let row = k.row(r);
                let sum: f64 = row.iter().sum();
                row_err = row_err.max((sum - 1.0).abs());
                for (s, &value) in row.iter().enumerate() {
                    neg_err = neg_err.max(-value.min(0.0));
                    let sidx = m.index(s)?;
                    sym_err = sym_err.max((value - k.entry(sidx, r)).abs());
                }
            }
        }
    }
    rec.record("kernel_rows_stochastic", row_err, 1e-12);
    rec.record("kernel_positivity", neg_err, 0.0);
    rec.record("kernel_symmetry", sym_err, 0.0);

    // One-step and two-half-step evolution agree.
    let p0 = random_pmf(m, &mut rng);
    let mut err: f64 = 0.0;
    for &beta in &betas {
        let t = 0.9;
        let whole = evolve(&p0, &DiffusionParams::new(m, alpha, beta, t)?)?;
        let half = DiffusionParams::new(m, alpha, beta, t / 2.0)?;
        let split = evolve(&evolve(&p0, &half)?, &half)?;
        for (a, b) in whole.as_slice().iter().zip(split.as_slice()) {
            err = err.max((a - b).abs());
        }
    }
    rec.record("semigroup_law", err, 1e-10);

    // Each Fourier coefficient decays by its own factor.
    let mut err: f64 = 0.0;
    let c0 = p0.dft();
    for &beta in &betas {
        let t = 0.7;
        let pt = evolve(&p0, &DiffusionParams::new(m, alpha, beta, t)?)?;
        let ct = pt.dft();
        let lam = spectrum::<f64>(m).fractional_powers(beta);
        for k in 0..m.get() {
            let factor = (-(alpha * t * lam[k])).exp();
            let expected = c0.coeff(k as i64) * factor;
            let got = ct.coeff(k as i64);
            err = err.max((got - expected).norm());
        }
    }
    rec.record("fourier_evolution", err, 1e-12);

    // Trigonometric moments decay at the same spectral rates.
    let mut err: f64 = 0.0;
    for &beta in &betas {
        let t = 0.5;
        let pt = evolve(&p0, &DiffusionParams::new(m, alpha, beta, t)?)?;
        let lam = spectrum::<f64>(m).fractional_powers(beta);
        for ell in 0..m.get() as i64 {
            let factor = (-(alpha * t * lam[ell as usize])).exp();
            let expected = trig_moment(&p0, ell) * factor;
            err = err.max((trig_moment(&pt, ell) - expected).norm());
        }
    }
    rec.record("moment_decay", err, 1e-12);

    // The resultant of a point mass decays exactly at the gap rate.
    let d = CyclePmf::delta(m, m.index(0)?);
    let mut err: f64 = 0.0;
    for &t in &[0.25, 1.0] {
        let pt = evolve(&d, &DiffusionParams::new(m, alpha, 1.0, t)?)?;
        let expected = (-alpha * t * spectrum::<f64>(m).lambda_star()).exp();
        err = err.max((resultant_length(&pt) - expected).abs());
        // And inverting the decay recovers the elapsed alpha t.
        err = err.max((fit_alpha_t(expected, m, 1.0)? - alpha * t).abs());
    }
    rec.record("resultant_decay", err, 1e-12);

    // The TV bound dominates the observed distance, from both point-mass
    // and generic starts.
    let u = CyclePmf::uniform(m);
    let mut excess: f64 = 0.0;
    for start in [d.clone(), random_pmf(m, &mut rng)] {
        for &beta in &[0.5, 1.0] {
            for &t in &[0.0, 0.1, 0.5, 1.0, 2.0, 5.0] {
                let params = DiffusionParams::new(m, alpha, beta, t)?;
                let tv = total_variation(&evolve(&start, &params)?, &u)?;
                let bound = mixing_bound(&start, &params)?;
                excess = excess.max(tv - bound);
            }
        }
    }
    rec.record("mixing_bound_dominates", excess.max(0.0), 1e-15);

    // The L2 deviation contracts at least as fast as the gap factor.
    let mut excess: f64 = 0.0;
    let norm0 = uniform_l2_norm(&p0.ratio_deviation());
    for &beta in &betas {
        for &t in &[0.2, 1.0, 4.0] {
            let params = DiffusionParams::new(m, alpha, beta, t)?;
            let pt = evolve(&p0, &params)?;
            let decay = (-alpha * t * spectrum::<f64>(m).lambda_star().powf(beta)).exp();
            excess = excess.max(uniform_l2_norm(&pt.ratio_deviation()) - decay * norm0);
        }
    }
    rec.record("l2_contraction", excess.max(0.0), 1e-12);

    // The dense fractional generator exponentiates to the spectral kernel.
    let mut err: f64 = 0.0;
    for &beta in &[0.5, 1.0] {
        let g = fractional_generator(m, alpha, beta)?;
        let t = 0.8;
        let via_uniformization = transition_matrix(&g, t)?;
        let via_spectrum = kernel(&DiffusionParams::new(m, alpha, beta, t)?)?;
        for r in m.states() {
            for s in m.states() {
                err = err
                    .max((via_uniformization.entry(r, s) - via_spectrum.entry(r, s)).abs());
            }
        }
    }
    rec.record("uniformization_consistency", err, 1e-10);
    Ok(())
}

fn check_target(m: CycleSize, rec: &mut Recorder) -> Result<()> {
    let mut rng = suite_rng();
    let alpha = 1.0;
    let vm_target = vm_pmf(&VonMisesParams::new(m, 2.0, 0.0)?)?;
    let targets = [
        CyclePmf::uniform(m),
        vm_target,
        random_pmf(m, &mut rng),
    ];

    let mut row_err: f64 = 0.0;
    let mut db_err: f64 = 0.0;
    let mut piq_err: f64 = 0.0;
    let mut stat_err: f64 = 0.0;
    let mut rev_err: f64 = 0.0;
    let mut mono_violations: f64 = 0.0;
    for pi in &targets {
        let spec = TargetSpec::new(pi.clone(), alpha)?;
        let g = build_generator(&spec);
        for r in m.states() {
            let sum: f64 = g.row(r).iter().sum();
            row_err = row_err.max(sum.abs());
            let up = g.rate(r, m.step(r, 1));
            let down = g.rate(r, m.step(r, -1));
            let up_mass = pi.prob(m.step(r, 1));
            let down_mass = pi.prob(m.step(r, -1));
            if (up > down) != (up_mass > down_mass) {
                mono_violations += 1.0;
            }
        }
        db_err = db_err.max(verify_detailed_balance(&g, pi)?.max_gap);
        for s in m.states() {
            let flux: f64 = m.states().map(|r| pi.prob(r) * g.rate(r, s)).sum();
            piq_err = piq_err.max(flux.abs());
        }
        for &t in &[0.1, 1.0, 10.0] {
            let p = transition_matrix(&g, t)?;
            let moved = p.propagate(pi)?;
            for (a, b) in moved.as_slice().iter().zip(pi.as_slice()) {
                stat_err = stat_err.max((a - b).abs());
            }
            for r in m.states() {
                for s in m.states() {
                    rev_err = rev_err
                        .max((pi.prob(r) * p.entry(r, s) - pi.prob(s) * p.entry(s, r)).abs());
                }
            }
        }
    }
    rec.record("generator_row_sums", row_err, 1e-12);
    rec.record("detailed_balance", db_err, 1e-14);
    rec.record("stationarity_flux", piq_err, 1e-12);
    rec.record("stationarity_evolution", stat_err, 1e-10);
    rec.record("transition_reversibility", rev_err, 1e-10);
    rec.record("rate_monotonicity", mono_violations, 0.0);

    // A uniform target gives the constant-rate walk, which is the beta = 1
    // diffusion.
    let g = build_generator(&TargetSpec::new(CyclePmf::uniform(m), alpha)?);
    let mut rate_err: f64 = 0.0;
    for r in m.states() {
        rate_err = rate_err.max((g.rate(r, m.step(r, 1)) - alpha).abs());
        rate_err = rate_err.max((g.rate(r, m.step(r, -1)) - alpha).abs());
    }
    rec.record("uniform_rate_reduction", rate_err, 1e-15);
    let t = 0.6;
    let p = transition_matrix(&g, t)?;
    let k = kernel(&DiffusionParams::new(m, alpha, 1.0, t)?)?;
    let mut err: f64 = 0.0;
    for r in m.states() {
        for s in m.states() {
            err = err.max((p.entry(r, s) - k.entry(r, s)).abs());
        }
    }
    rec.record("uniform_matches_diffusion", err, 1e-10);

    // Simulation reproducibility: same seed, same path.
    let pi = CyclePmf::from_weights((1..=m.get()).map(|r| r as f64).collect())?;
    let g = build_generator(&TargetSpec::new(pi, alpha)?);
    let x0 = m.index(0)?;
    let a = simulate_path(&g, x0, 10.0, RngSeed(7))?;
    let b = simulate_path(&g, x0, 10.0, RngSeed(7))?;
    let reproducible = a == b;
    rec.record("simulation_reproducible", if reproducible { 0.0 } else { 1.0 }, 0.0);
    Ok(())
}

fn check_dist(m: CycleSize, rec: &mut Recorder) -> Result<()> {
    let kappas = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
    let rhos = [0.1, 0.5, 0.9];
    let n = m.get();

    let mut err: f64 = 0.0;
    for order in 1..6i64 {
        for &x in &[0.5, 2.0, 9.0] {
            err = err.max((bessel_i::<f64>(order, x)? - bessel_i::<f64>(-order, x)?).abs());
        }
    }
    rec.record("bessel_order_symmetry", err, 0.0);

    // Series route against periodic-trapezoid quadrature.
    let nodes = 64;
    let quad: f64 = (0..nodes)
        .map(|j| (2.0 * std::f64::consts::PI * j as f64 / nodes as f64).cos().exp())
        .sum::<f64>()
        / nodes as f64;
    rec.record(
        "bessel_quadrature",
        (bessel_i::<f64>(0, 1.0)? - quad).abs(),
        1e-13,
    );

    let mut norm_err: f64 = 0.0;
    let mut moment_err: f64 = 0.0;
    let mut imag_err: f64 = 0.0;
    for &kappa in &kappas {
        let series: f64 = vm_normalizer(kappa, m)?;
        let direct: f64 = vm_normalizer_direct(kappa, 0.0, m)?;
        norm_err = norm_err.max((series - direct).abs() / direct);
        let p = vm_pmf(&VonMisesParams::new(m, kappa, 0.0)?)?;
        for ell in 1..n as i64 {
            let series: f64 = vm_trig_moment(ell, kappa, m)?;
            let from_pmf = trig_moment(&p, ell);
            moment_err = moment_err.max((from_pmf.re - series).abs());
            imag_err = imag_err.max(from_pmf.im.abs());
        }
    }
    rec.record("vm_normalizer_equivalence", norm_err, 1e-12);
    rec.record("vm_moment_equivalence", moment_err, 1e-12);
    rec.record("vm_moment_imaginary_part", imag_err, 1e-13);

    let mut norm_err: f64 = 0.0;
    let mut moment_err: f64 = 0.0;
    for &rho in &rhos {
        let closed: f64 = wc_normalizer(rho, m)?;
        let direct: f64 = wc_normalizer_direct(rho, 0.0, m)?;
        norm_err = norm_err.max((closed - direct).abs() / direct);
        let p = wc_pmf(&WrappedCauchyParams::new(m, rho, 0.0)?)?;
        for ell in 0..n as i64 {
            let closed: f64 = wc_trig_moment(ell, rho, m)?;
            let from_pmf = trig_moment(&p, ell);
            moment_err = moment_err.max((from_pmf.re - closed).abs());
        }
    }
    rec.record("wc_normalizer_equivalence", norm_err, 1e-12);
    rec.record("wc_moment_equivalence", moment_err, 1e-12);

    // On-grid location shifts are bitwise rotations.
    let r1 = m.index(1)?;
    let mu = m.angle(r1).radians::<f64>();
    let mut err: f64 = 0.0;
    let centered = vm_pmf(&VonMisesParams::new(m, 1.5, 0.0)?)?;
    let shifted = vm_pmf(&VonMisesParams::new(m, 1.5, mu)?)?;
    for r in 0..n {
        err = err.max((shifted.as_slice()[r] - centered.as_slice()[(n + r - 1) % n]).abs());
    }
    let centered = wc_pmf(&WrappedCauchyParams::new(m, 0.4, 0.0)?)?;
    let shifted = wc_pmf(&WrappedCauchyParams::new(m, 0.4, mu)?)?;
    for r in 0..n {
        err = err.max((shifted.as_slice()[r] - centered.as_slice()[(n + r - 1) % n]).abs());
    }
    rec.record("shift_covariance", err, 0.0);

    // The root-of-unity filter keeps multiples of m and kills the rest.
    let roots = unit_roots::<f64>(m, 1.0);
    let mut err: f64 = 0.0;
    for freq in 0..3 * n {
        let mut re = 0.0;
        let mut im = 0.0;
        for k in 0..n {
            let root = roots[(k * freq) % n];
            re += root.re;
            im += root.im;
        }
        re /= n as f64;
        im /= n as f64;
        let expected = if freq % n == 0 { 1.0 } else { 0.0 };
        err = err.max(((re - expected).powi(2) + im * im).sqrt());
    }
    rec.record("root_of_unity_filter", err, 1e-12);
    Ok(())
}

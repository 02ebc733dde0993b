//! Command-line interface for Markov dynamics on the discrete circle.
//!
//! Every subcommand validates its flags before touching any file or doing
//! any numerics; flag violations exit with code 2 and a message naming the
//! constraint, runtime failures (unreadable files, numerical errors, failed
//! validation checks) exit with code 1. Results go to stdout as JSON by
//! default or CSV with `--format csv`; diagnostics go to stderr.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cyclechain::io::{
    format_paths_csv, format_pmf_csv, format_pmf_json, generator_dump, kernel_dump,
    load_generator, load_pmf, load_skeletons, load_target_spec,
};
use cyclechain::{
    build_generator, evolve, kernel, mixing_bound, mle_alpha_pooled, mle_vm_kappa_pooled,
    run_suite, sample_marginal_diffusion, simulate_paths, transition_matrix, trig_moment,
    uniform_l2_norm, vm_normalizer, vm_pmf, vm_trig_moment, wc_normalizer, wc_pmf,
    wc_trig_moment, CycleIndex, CycleSize, DiffusionParams, Generator, Kernel, Pmf, RngSeed,
    SkeletonObservations, Suite, VonMisesParams, WrappedCauchyParams, DEFAULT_BRACKET,
};

/// Markov dynamics on the m-point discrete circle: fractional diffusion
/// kernels, circular target chains, exact simulation, and fitting.
#[derive(Parser)]
#[command(name = "cyclechain", version, about)]
struct Cli {
    /// Output format for results printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Diffusion,
    Vm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Core,
    Semigroup,
    Target,
    Dist,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(arg: SuiteArg) -> Suite {
        match arg {
            SuiteArg::Core => Suite::Core,
            SuiteArg::Semigroup => Suite::Semigroup,
            SuiteArg::Target => Suite::Target,
            SuiteArg::Dist => Suite::Dist,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Transition kernel of the fractional diffusion at one time.
    Kernel {
        /// Number of grid points (at least 3).
        #[arg(long)]
        m: usize,
        /// Rate scale (positive).
        #[arg(long)]
        alpha: f64,
        /// Fractional order in (0, 1].
        #[arg(long)]
        beta: f64,
        /// Elapsed time (nonnegative).
        #[arg(long)]
        t: f64,
        /// Emit all m rows instead of only the first.
        #[arg(long)]
        full_matrix: bool,
    },
    /// Evolve a start law under the diffusion for time t.
    Evolve {
        /// Pmf file (JSON {"m": .., "p": [..]} or one probability per line).
        #[arg(long)]
        p0_file: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        t: f64,
        /// Accept masses with any positive sum and renormalize.
        #[arg(long)]
        normalize: bool,
    },
    /// Trigonometric moment of order l of the evolved law.
    Moments {
        #[arg(long)]
        p0_file: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        t: f64,
        /// Moment order (any integer; reduced modulo m).
        #[arg(long)]
        l: i64,
        #[arg(long)]
        normalize: bool,
    },
    /// Spectral bound on the total variation distance to uniform.
    Mixbound {
        #[arg(long)]
        p0_file: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        normalize: bool,
    },
    /// Discrete von Mises pmf.
    VmPmf {
        #[arg(long)]
        m: usize,
        /// Concentration (nonnegative).
        #[arg(long)]
        kappa: f64,
        /// Location in radians.
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
    },
    /// Discrete von Mises normalizing constant.
    VmNorm {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        kappa: f64,
    },
    /// Trigonometric moment of the centered discrete von Mises law.
    VmMoment {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        l: i64,
    },
    /// Discrete wrapped Cauchy pmf.
    WcPmf {
        #[arg(long)]
        m: usize,
        /// Concentration in (0, 1).
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
    },
    /// Discrete wrapped Cauchy normalizing constant.
    WcNorm {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        rho: f64,
    },
    /// Trigonometric moment of the centered discrete wrapped Cauchy law.
    WcMoment {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        l: i64,
    },
    /// Build the reversible nearest-neighbour generator for a target law.
    Gen {
        /// Target file: pmf, {"log_pi": [..]} weights, or a parametric
        /// {"family": "vm"|"wc", ..} spec.
        #[arg(long)]
        target_file: PathBuf,
        #[arg(long)]
        alpha: f64,
        /// Also emit the transition matrix exp(tQ) at this time.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        normalize: bool,
    },
    /// Exact continuous-time paths of a generator chain.
    Simulate {
        /// Generator file, as produced by `gen`.
        #[arg(long)]
        gen_file: PathBuf,
        /// Start state in 0..m.
        #[arg(long)]
        x0: usize,
        /// Time horizon (positive).
        #[arg(long)]
        horizon: f64,
        /// Number of replicate paths.
        #[arg(long)]
        n: usize,
        /// RNG seed (CYCLECHAIN_SEED overrides when set).
        #[arg(long)]
        seed: u64,
    },
    /// Draws from the diffusion marginal at one time.
    Sample {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        x0: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Fit model parameters to skeleton observations by maximum likelihood.
    Fit {
        /// Observations: `time,state` or `replicate,time,state` CSV.
        #[arg(long)]
        obs_file: PathBuf,
        #[arg(long)]
        m: usize,
        /// Fractional order of the diffusion model (ignored by --model vm).
        #[arg(long)]
        beta: f64,
        #[arg(long, value_enum, default_value_t = Model::Diffusion)]
        model: Model,
        /// Search bracket LO,HI (defaults to 0.0001,10000).
        #[arg(long)]
        bracket: Option<String>,
    },
    /// Run the self-check suite and report every identity checked.
    Validate {
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum)]
        suite: SuiteArg,
    },
    /// Emit bar-chart data (angle, probability) for a pmf; always CSV.
    Plot {
        #[arg(long)]
        pmf_file: PathBuf,
        #[arg(long)]
        normalize: bool,
    },
}

enum CliError {
    Usage(String),
    Runtime(String),
    /// A validation run whose report must still reach stdout before the
    /// nonzero exit.
    ValidationFailed { output: String, message: String },
}

type CliResult<T> = Result<T, CliError>;

impl From<cyclechain::Error> for CliError {
    fn from(e: cyclechain::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Attach the file path to errors from loaders, since the library reports
/// only what went wrong, not where.
fn in_file<T>(path: &Path, result: cyclechain::Result<T>) -> CliResult<T> {
    result.map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn require(cond: bool, msg: &str) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(usage(msg))
    }
}

fn check_m(m: usize) -> CliResult<CycleSize> {
    CycleSize::new(m).map_err(|_| usage("m must be an integer of at least 3"))
}

fn check_alpha(alpha: f64) -> CliResult<()> {
    require(alpha > 0.0 && alpha.is_finite(), "alpha must be positive and finite")
}

fn check_beta(beta: f64) -> CliResult<()> {
    require(beta > 0.0 && beta <= 1.0, "beta must lie in (0, 1]")
}

fn check_t(t: f64) -> CliResult<()> {
    require(t >= 0.0 && t.is_finite(), "t must be nonnegative and finite")
}

fn check_kappa(kappa: f64) -> CliResult<()> {
    require(kappa >= 0.0 && kappa.is_finite(), "kappa must be nonnegative and finite")
}

fn check_rho(rho: f64) -> CliResult<()> {
    require(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)")
}

fn check_mu(mu: f64) -> CliResult<()> {
    require(mu.is_finite(), "mu must be finite")
}

fn check_horizon(horizon: f64) -> CliResult<()> {
    require(
        horizon > 0.0 && horizon.is_finite(),
        "horizon must be positive and finite",
    )
}

fn check_n(n: usize) -> CliResult<()> {
    require(n >= 1, "n must be at least 1")
}

fn check_x0(x0: usize, m: CycleSize) -> CliResult<CycleIndex> {
    m.index(x0)
        .map_err(|_| usage(format!("x0 must name a state in 0..{}", m.get())))
}

fn parse_bracket(spec: Option<&str>) -> CliResult<(f64, f64)> {
    let Some(text) = spec else {
        return Ok(DEFAULT_BRACKET);
    };
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(usage("bracket must have the form LO,HI"));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| usage("bracket bounds must be real numbers"))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| usage("bracket bounds must be real numbers"))?;
    require(
        lo > 0.0 && hi > lo && hi.is_finite(),
        "bracket must satisfy 0 < LO < HI",
    )?;
    Ok((lo, hi))
}

/// Effective seed: the CYCLECHAIN_SEED environment variable wins over the
/// --seed flag when set.
fn resolve_seed(flag: u64) -> CliResult<RngSeed> {
    match std::env::var("CYCLECHAIN_SEED") {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map(RngSeed)
            .map_err(|_| usage("CYCLECHAIN_SEED must be an unsigned 64-bit integer")),
        Err(std::env::VarError::NotPresent) => Ok(RngSeed(flag)),
        Err(std::env::VarError::NotUnicode(_)) => {
            Err(usage("CYCLECHAIN_SEED must be valid unicode"))
        }
    }
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string(value).expect("output structs always serialize");
    text.push('\n');
    text
}

fn join_row(row: &[f64]) -> String {
    row.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

#[derive(Serialize)]
struct MomentsOut {
    m: usize,
    alpha: f64,
    beta: f64,
    t: f64,
    l: i64,
    re: f64,
    im: f64,
    modulus: f64,
}

#[derive(Serialize)]
struct MixboundOut {
    m: usize,
    alpha: f64,
    beta: f64,
    t: f64,
    deviation_norm: f64,
    bound: f64,
}

#[derive(Serialize)]
struct VmNormOut {
    m: usize,
    kappa: f64,
    normalizer: f64,
}

#[derive(Serialize)]
struct VmMomentOut {
    m: usize,
    kappa: f64,
    l: i64,
    moment: f64,
}

#[derive(Serialize)]
struct WcNormOut {
    m: usize,
    rho: f64,
    normalizer: f64,
}

#[derive(Serialize)]
struct WcMomentOut {
    m: usize,
    rho: f64,
    l: i64,
    moment: f64,
}

#[derive(Serialize)]
struct PathRecord {
    replicate: u64,
    initial: usize,
    times: Vec<f64>,
    states: Vec<usize>,
}

#[derive(Serialize)]
struct SimulateOut {
    m: usize,
    horizon: f64,
    n: usize,
    seed: u64,
    paths: Vec<PathRecord>,
}

#[derive(Serialize)]
struct SampleOut {
    m: usize,
    alpha: f64,
    beta: f64,
    t: f64,
    x0: usize,
    n: usize,
    seed: u64,
    draws: Vec<usize>,
}

#[derive(Serialize)]
struct FitOut {
    model: &'static str,
    m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa_hat: Option<f64>,
    log_likelihood: f64,
    replicates: usize,
    observations: usize,
}

fn pmf_text(p: &Pmf, format: Format) -> String {
    match format {
        Format::Json => {
            let mut text = format_pmf_json(p);
            text.push('\n');
            text
        }
        Format::Csv => format_pmf_csv(p),
    }
}

fn diffusion_params(
    m: CycleSize,
    alpha: f64,
    beta: f64,
    t: f64,
) -> CliResult<DiffusionParams<f64>> {
    check_alpha(alpha)?;
    check_beta(beta)?;
    check_t(t)?;
    Ok(DiffusionParams::new(m, alpha, beta, t)?)
}

fn run_kernel(
    m: usize,
    alpha: f64,
    beta: f64,
    t: f64,
    full_matrix: bool,
    format: Format,
) -> CliResult<String> {
    let m = check_m(m)?;
    let params = diffusion_params(m, alpha, beta, t)?;
    let k: Kernel = kernel(&params)?;
    Ok(match format {
        Format::Json => json_line(&kernel_dump(&params, &k, full_matrix)),
        Format::Csv => {
            let mut text = String::new();
            if full_matrix {
                for r in m.states() {
                    let _ = writeln!(text, "{}", join_row(&k.row(r)));
                }
            } else {
                let _ = writeln!(text, "{}", join_row(&k.first_row()));
            }
            text
        }
    })
}

fn load_start_law(
    path: &Path,
    alpha: f64,
    beta: f64,
    t: f64,
    normalize: bool,
) -> CliResult<(Pmf, DiffusionParams<f64>)> {
    check_alpha(alpha)?;
    check_beta(beta)?;
    check_t(t)?;
    let p0 = in_file(path, load_pmf(path, normalize))?;
    let params = DiffusionParams::new(p0.size(), alpha, beta, t)?;
    Ok((p0, params))
}

fn run_fit(
    obs_file: &Path,
    m: usize,
    beta: f64,
    model: Model,
    bracket: Option<&str>,
    format: Format,
) -> CliResult<String> {
    let m = check_m(m)?;
    if model == Model::Diffusion {
        check_beta(beta)?;
    }
    let bracket = parse_bracket(bracket)?;
    let records = in_file(obs_file, load_skeletons(obs_file))?;
    let skeletons: Vec<SkeletonObservations<f64>> =
        records.into_iter().map(|(_, obs)| obs).collect();
    let replicates = skeletons.len();
    let observations: usize = skeletons.iter().map(SkeletonObservations::len).sum();
    let out = match model {
        Model::Diffusion => {
            let alpha_hat = mle_alpha_pooled(&skeletons, m, beta, bracket)?;
            let log_likelihood: f64 = skeletons
                .iter()
                .map(|o| {
                    cyclechain::log_likelihood_diffusion(o, m, alpha_hat, beta)
                        .unwrap_or(f64::NEG_INFINITY)
                })
                .sum();
            FitOut {
                model: "diffusion",
                m: m.get(),
                beta: Some(beta),
                alpha: None,
                mu: None,
                alpha_hat: Some(alpha_hat),
                kappa_hat: None,
                log_likelihood,
                replicates,
                observations,
            }
        }
        Model::Vm => {
            // The von Mises target model fixes the rate scale and location;
            // only the concentration is free.
            let (alpha, mu) = (1.0, 0.0);
            let kappa_hat = mle_vm_kappa_pooled(&skeletons, m, alpha, mu, bracket)?;
            let pi = vm_pmf(&VonMisesParams::new(m, kappa_hat, mu)?)?;
            let g = build_generator(&cyclechain::TargetSpec::new(pi, alpha)?);
            let log_likelihood: f64 = skeletons
                .iter()
                .map(|o| {
                    cyclechain::log_likelihood_target(o, &g).unwrap_or(f64::NEG_INFINITY)
                })
                .sum();
            FitOut {
                model: "vm",
                m: m.get(),
                beta: None,
                alpha: Some(alpha),
                mu: Some(mu),
                alpha_hat: None,
                kappa_hat: Some(kappa_hat),
                log_likelihood,
                replicates,
                observations,
            }
        }
    };
    Ok(match format {
        Format::Json => json_line(&out),
        Format::Csv => match model {
            Model::Diffusion => format!(
                "alpha_hat,log_likelihood\n{},{}\n",
                out.alpha_hat.unwrap(),
                out.log_likelihood
            ),
            Model::Vm => format!(
                "kappa_hat,log_likelihood\n{},{}\n",
                out.kappa_hat.unwrap(),
                out.log_likelihood
            ),
        },
    })
}

fn run(cli: &Cli) -> CliResult<String> {
    let format = cli.format;
    match &cli.command {
        Command::Kernel { m, alpha, beta, t, full_matrix } => {
            run_kernel(*m, *alpha, *beta, *t, *full_matrix, format)
        }
        Command::Evolve { p0_file, alpha, beta, t, normalize } => {
            let (p0, params) = load_start_law(p0_file, *alpha, *beta, *t, *normalize)?;
            let out = evolve(&p0, &params)?;
            Ok(pmf_text(&out, format))
        }
        Command::Moments { p0_file, alpha, beta, t, l, normalize } => {
            let (p0, params) = load_start_law(p0_file, *alpha, *beta, *t, *normalize)?;
            let out = evolve(&p0, &params)?;
            let moment = trig_moment(&out, *l);
            let record = MomentsOut {
                m: p0.size().get(),
                alpha: *alpha,
                beta: *beta,
                t: *t,
                l: *l,
                re: moment.re,
                im: moment.im,
                modulus: moment.norm(),
            };
            Ok(match format {
                Format::Json => json_line(&record),
                Format::Csv => format!(
                    "re,im,modulus\n{},{},{}\n",
                    record.re, record.im, record.modulus
                ),
            })
        }
        Command::Mixbound { p0_file, alpha, beta, t, normalize } => {
            let (p0, params) = load_start_law(p0_file, *alpha, *beta, *t, *normalize)?;
            let record = MixboundOut {
                m: p0.size().get(),
                alpha: *alpha,
                beta: *beta,
                t: *t,
                deviation_norm: uniform_l2_norm(&p0.ratio_deviation()),
                bound: mixing_bound(&p0, &params)?,
            };
            Ok(match format {
                Format::Json => json_line(&record),
                Format::Csv => format!(
                    "deviation_norm,bound\n{},{}\n",
                    record.deviation_norm, record.bound
                ),
            })
        }
        Command::VmPmf { m, kappa, mu } => {
            let m = check_m(*m)?;
            check_kappa(*kappa)?;
            check_mu(*mu)?;
            let p = vm_pmf(&VonMisesParams::new(m, *kappa, *mu)?)?;
            Ok(pmf_text(&p, format))
        }
        Command::VmNorm { m, kappa } => {
            let m = check_m(*m)?;
            check_kappa(*kappa)?;
            let record = VmNormOut {
                m: m.get(),
                kappa: *kappa,
                normalizer: vm_normalizer(*kappa, m)?,
            };
            Ok(match format {
                Format::Json => json_line(&record),
                Format::Csv => format!("normalizer\n{}\n", record.normalizer),
            })
        }
        Command::VmMoment { m, kappa, l } => {
            let m = check_m(*m)?;
            check_kappa(*kappa)?;
            let record = VmMomentOut {
                m: m.get(),
                kappa: *kappa,
                l: *l,
                moment: vm_trig_moment(*l, *kappa, m)?,
            };
            Ok(match format {
                Format::Json => json_line(&record),
                Format::Csv => format!("moment\n{}\n", record.moment),
            })
        }
        Command::WcPmf { m, rho, mu } => {
            let m = check_m(*m)?;
            check_rho(*rho)?;
            check_mu(*mu)?;
            let p = wc_pmf(&WrappedCauchyParams::new(m, *rho, *mu)?)?;
            Ok(pmf_text(&p, format))
        }
        Command::WcNorm { m, rho } => {
            let m = check_m(*m)?;
            check_rho(*rho)?;
            let record = WcNormOut {
                m: m.get(),
                rho: *rho,
                normalizer: wc_normalizer(*rho, m)?,
            };
            Ok(match format {
                Format::Json => json_line(&record),
                Format::Csv => format!("normalizer\n{}\n", record.normalizer),
            })
        }
        Command::WcMoment { m, rho, l } => {
            let m = check_m(*m)?;
            check_rho(*rho)?;
            let record = WcMomentOut {
                m: m.get(),
                rho: *rho,
                l: *l,
                moment: wc_trig_moment(*l, *rho, m)?,
            };
            Ok(match format {
                Format::Json => json_line(&record),
                Format::Csv => format!("moment\n{}\n", record.moment),
            })
        }
        Command::Gen { target_file, alpha, t, normalize } => {
            check_alpha(*alpha)?;
            if let Some(t) = t {
                check_t(*t)?;
            }
            let spec = in_file(target_file, load_target_spec(target_file, *alpha, *normalize))?;
            let g = build_generator(&spec);
            let at_time = match t {
                Some(t) => Some((*t, transition_matrix(&g, *t)?)),
                None => None,
            };
            Ok(match format {
                Format::Json => {
                    json_line(&generator_dump(&spec, &g, at_time.as_ref().map(|(t, k)| (*t, k))))
                }
                Format::Csv => {
                    let mut text = String::new();
                    for row in g.to_rows() {
                        let _ = writeln!(text, "{}", join_row(&row));
                    }
                    if let Some((_, p)) = &at_time {
                        let _ = writeln!(text);
                        for row in p.to_rows() {
                            let _ = writeln!(text, "{}", join_row(&row));
                        }
                    }
                    text
                }
            })
        }
        Command::Simulate { gen_file, x0, horizon, n, seed } => {
            check_horizon(*horizon)?;
            check_n(*n)?;
            let seed = resolve_seed(*seed)?;
            let g: Generator = in_file(gen_file, load_generator(gen_file))?;
            let x0 = check_x0(*x0, g.size())?;
            let paths = simulate_paths(&g, x0, *horizon, *n, seed)?;
            Ok(match format {
                Format::Json => {
                    let records: Vec<PathRecord> = paths
                        .iter()
                        .enumerate()
                        .map(|(k, path)| PathRecord {
                            replicate: k as u64,
                            initial: path.initial().get(),
                            times: path.jump_times().to_vec(),
                            states: path
                                .states_after_jumps()
                                .iter()
                                .map(|s| s.get())
                                .collect(),
                        })
                        .collect();
                    json_line(&SimulateOut {
                        m: g.size().get(),
                        horizon: *horizon,
                        n: *n,
                        seed: seed.0,
                        paths: records,
                    })
                }
                Format::Csv => format_paths_csv(&paths),
            })
        }
        Command::Sample { m, alpha, beta, t, x0, n, seed } => {
            let m = check_m(*m)?;
            let params = diffusion_params(m, *alpha, *beta, *t)?;
            let x0 = check_x0(*x0, m)?;
            check_n(*n)?;
            let seed = resolve_seed(*seed)?;
            let draws = sample_marginal_diffusion(&params, x0, *n, seed)?;
            Ok(match format {
                Format::Json => json_line(&SampleOut {
                    m: m.get(),
                    alpha: *alpha,
                    beta: *beta,
                    t: *t,
                    x0: x0.get(),
                    n: *n,
                    seed: seed.0,
                    draws: draws.iter().map(|s| s.get()).collect(),
                }),
                Format::Csv => {
                    let mut text = String::from("state\n");
                    for s in &draws {
                        let _ = writeln!(text, "{}", s.get());
                    }
                    text
                }
            })
        }
        Command::Fit { obs_file, m, beta, model, bracket } => {
            run_fit(obs_file, *m, *beta, *model, bracket.as_deref(), format)
        }
        Command::Validate { m, suite } => {
            let m = check_m(*m)?;
            let report = run_suite(m, Suite::from(*suite))?;
            let output = match format {
                Format::Json => json_line(&report),
                Format::Csv => report.to_csv(),
            };
            if report.passed {
                Ok(output)
            } else {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name.as_str())
                    .collect();
                Err(CliError::ValidationFailed {
                    output,
                    message: format!("validation failed: {}", failed.join(", ")),
                })
            }
        }
        Command::Plot { pmf_file, normalize } => {
            let p = in_file(pmf_file, load_pmf(pmf_file, *normalize))?;
            let m = p.size();
            let mut text = String::from("angle,probability\n");
            for r in m.states() {
                let _ = writeln!(text, "{},{}", m.angle(r).radians::<f64>(), p.prob(r));
            }
            Ok(text)
        }
    }
}

/// Write the payload to stdout; a closed pipe downstream is not an error.
fn write_stdout(text: &str) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => match write_stdout(&text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::ValidationFailed { output, message }) => {
            let _ = write_stdout(&output);
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

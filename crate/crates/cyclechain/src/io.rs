//! File formats shared between the library and the CLI. Everything here is
//! concrete `f64`: files are an interchange surface, not a place for
//! generic numerics.
//!
//! Probability files are JSON objects `{"m": .., "p": [..]}` or bare CSV
//! with one probability per line. Skeleton and path files are CSV with
//! `time,state` columns, optionally prefixed by a header and optionally
//! carrying a leading `replicate` column. Serialization uses the shortest
//! round-trip decimal form, so write-then-read is lossless.

use std::fs;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::circle::{CyclePmf, CycleSize};
use crate::dist::{vm_pmf, wc_pmf, VonMisesParams, WrappedCauchyParams};
use crate::error::{Error, Result};
use crate::estimate::SkeletonObservations;
use crate::semigroup::{DiffusionParams, TransitionKernel};
use crate::simulate::SamplePath;
use crate::target::{build_generator, GeneratorMatrix, TargetSpec};

/// Probability files must sum to 1 within this before being renormalized
/// internally; `normalize` bypasses the gate for arbitrary positive weights.
pub const PMF_FILE_SUM_TOL: f64 = 1e-9;

/// JSON shape of a probability vector on the cycle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmfFile {
    pub m: usize,
    pub p: Vec<f64>,
}

/// JSON shape of a kernel dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelDump {
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub t: f64,
    pub first_row: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

/// JSON shape of a generator dump; also accepted as input wherever a
/// generator file is expected.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorFile {
    pub m: usize,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_pi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates_up: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates_down: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
}

/// JSON shape of a parametric target family.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum DistSpec {
    #[serde(rename = "vm")]
    VonMises {
        m: usize,
        kappa: f64,
        #[serde(default)]
        mu: f64,
    },
    #[serde(rename = "wc")]
    WrappedCauchy {
        m: usize,
        rho: f64,
        #[serde(default)]
        mu: f64,
    },
}

impl DistSpec {
    /// Materialize the pmf the spec describes.
    pub fn pmf(&self) -> Result<CyclePmf<f64>> {
        match *self {
            DistSpec::VonMises { m, kappa, mu } => {
                let m = CycleSize::new(m)?;
                vm_pmf(&VonMisesParams::new(m, kappa, mu)?)
            }
            DistSpec::WrappedCauchy { m, rho, mu } => {
                let m = CycleSize::new(m)?;
                wc_pmf(&WrappedCauchyParams::new(m, rho, mu)?)
            }
        }
    }
}

fn looks_like_json(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

fn validate_lengths(m: usize, len: usize) -> Result<()> {
    if m != len {
        return Err(Error::LengthMismatch { len, m });
    }
    Ok(())
}

/// Build a pmf from raw file entries. Negative entries are rejected even
/// under `normalize`; without it the sum must pass the file gate before
/// the vector is renormalized to machine precision.
fn pmf_from_entries(p: Vec<f64>, normalize: bool) -> Result<CyclePmf<f64>> {
    CycleSize::new(p.len())?;
    for (index, &value) in p.iter().enumerate() {
        if !(value >= 0.0) {
            return Err(Error::NegativeProbability { index, value });
        }
    }
    if normalize {
        return CyclePmf::from_weights(p);
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PMF_FILE_SUM_TOL {
        return Err(Error::NotNormalized { sum, tol: PMF_FILE_SUM_TOL });
    }
    // Keep the entries bit-for-bit when they already satisfy the strict pmf
    // tolerance, so serialize-then-parse is lossless; renormalize only files
    // that merely clear the looser gate.
    CyclePmf::new(p.clone()).or_else(|_| CyclePmf::from_weights(p))
}

/// Parse a probability file: JSON `{"m", "p"}` or CSV with one probability
/// per line.
pub fn parse_pmf(text: &str, normalize: bool) -> Result<CyclePmf<f64>> {
    if looks_like_json(text) {
        let file: PmfFile = serde_json::from_str(text)?;
        validate_lengths(file.m, file.p.len())?;
        pmf_from_entries(file.p, normalize)
    } else {
        let mut p = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let value: f64 = line.parse().map_err(|_| {
                Error::FileFormat(format!(
                    "line {}: expected one probability per line, got {line:?}",
                    lineno + 1
                ))
            })?;
            p.push(value);
        }
        pmf_from_entries(p, normalize)
    }
}

/// Read and parse a probability file.
pub fn load_pmf(path: &FsPath, normalize: bool) -> Result<CyclePmf<f64>> {
    parse_pmf(&fs::read_to_string(path)?, normalize)
}

/// Serialize a pmf as JSON.
pub fn format_pmf_json(p: &CyclePmf<f64>) -> String {
    let file = PmfFile { m: p.size().get(), p: p.as_slice().to_vec() };
    serde_json::to_string(&file).expect("pmf serialization cannot fail")
}

/// Serialize a pmf as CSV, one probability per line.
pub fn format_pmf_csv(p: &CyclePmf<f64>) -> String {
    let mut out = String::new();
    for &x in p.as_slice() {
        out.push_str(&format!("{x}\n"));
    }
    out
}

/// Assemble the JSON dump of a diffusion kernel.
pub fn kernel_dump(
    params: &DiffusionParams<f64>,
    kernel: &TransitionKernel<f64>,
    full_matrix: bool,
) -> KernelDump {
    KernelDump {
        m: params.size().get(),
        alpha: params.alpha(),
        beta: params.beta(),
        t: params.t(),
        first_row: kernel.first_row(),
        matrix: full_matrix.then(|| kernel.to_rows()),
    }
}

/// Assemble the JSON dump of a target generator, optionally with the
/// transition matrix at one time.
pub fn generator_dump(
    spec: &TargetSpec<f64>,
    g: &GeneratorMatrix<f64>,
    at_time: Option<(f64, &TransitionKernel<f64>)>,
) -> GeneratorFile {
    GeneratorFile {
        m: g.size().get(),
        alpha: spec.alpha(),
        pi: Some(spec.pi().as_slice().to_vec()),
        log_pi: None,
        rates_up: Some(g.up_rates()),
        rates_down: Some(g.down_rates()),
        t: at_time.map(|(t, _)| t),
        transition: at_time.map(|(_, k)| k.to_rows()),
    }
}

/// Parse a target file into a rate scale and stationary spec. The file may
/// be a parametric `{"family": ..}` spec, a pmf (JSON or CSV), or a JSON
/// object with `log_pi` weights; `alpha` overrides any rate in the file.
pub fn target_spec_from_text(
    text: &str,
    alpha: f64,
    normalize: bool,
) -> Result<TargetSpec<f64>> {
    if looks_like_json(text) {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let object = value
            .as_object()
            .ok_or_else(|| Error::FileFormat("target file must be a JSON object".into()))?;
        if object.contains_key("family") {
            let spec: DistSpec = serde_json::from_value(value)?;
            return TargetSpec::new(spec.pmf()?, alpha);
        }
        if object.contains_key("log_pi") {
            #[derive(Deserialize)]
            struct LogPiFile {
                m: usize,
                log_pi: Vec<f64>,
            }
            let file: LogPiFile = serde_json::from_value(value)?;
            validate_lengths(file.m, file.log_pi.len())?;
            return TargetSpec::from_log_weights(file.log_pi, alpha);
        }
        if object.contains_key("p") {
            let file: PmfFile = serde_json::from_value(value)?;
            validate_lengths(file.m, file.p.len())?;
            return TargetSpec::new(pmf_from_entries(file.p, normalize)?, alpha);
        }
        if object.contains_key("pi") {
            #[derive(Deserialize)]
            struct PiFile {
                m: usize,
                pi: Vec<f64>,
            }
            let file: PiFile = serde_json::from_value(value)?;
            validate_lengths(file.m, file.pi.len())?;
            return TargetSpec::new(pmf_from_entries(file.pi, normalize)?, alpha);
        }
        Err(Error::FileFormat(
            "target file needs one of: family, p, pi, log_pi".into(),
        ))
    } else {
        TargetSpec::new(parse_pmf(text, normalize)?, alpha)
    }
}

/// Read and parse a target file.
pub fn load_target_spec(path: &FsPath, alpha: f64, normalize: bool) -> Result<TargetSpec<f64>> {
    target_spec_from_text(&fs::read_to_string(path)?, alpha, normalize)
}

/// Reconstruct a generator from its file form. Explicit rates win over a
/// stationary law; with only `pi` or `log_pi` the generator is rebuilt.
pub fn generator_from_text(text: &str) -> Result<GeneratorMatrix<f64>> {
    let file: GeneratorFile = serde_json::from_str(text)?;
    let m = CycleSize::new(file.m)?;
    let n = m.get();
    match (&file.rates_up, &file.rates_down) {
        (Some(up), Some(down)) => {
            validate_lengths(n, up.len())?;
            validate_lengths(n, down.len())?;
            let mut rows = vec![0.0; n * n];
            for r in 0..n {
                let up_rate = up[r];
                let down_rate = down[r];
                rows[r * n + (r + 1) % n] = up_rate;
                rows[r * n + (r + n - 1) % n] = down_rate;
                rows[r * n + r] = -(up_rate + down_rate);
            }
            GeneratorMatrix::from_dense(m, rows)
        }
        _ => {
            let spec = if let Some(log_pi) = file.log_pi {
                validate_lengths(n, log_pi.len())?;
                TargetSpec::from_log_weights(log_pi, file.alpha)?
            } else if let Some(pi) = file.pi {
                validate_lengths(n, pi.len())?;
                TargetSpec::new(pmf_from_entries(pi, false)?, file.alpha)?
            } else {
                return Err(Error::FileFormat(
                    "generator file needs rates_up and rates_down, or pi, or log_pi".into(),
                ));
            };
            Ok(build_generator(&spec))
        }
    }
}

/// Read and parse a generator file.
pub fn load_generator(path: &FsPath) -> Result<GeneratorMatrix<f64>> {
    generator_from_text(&fs::read_to_string(path)?)
}

/// Serialize trajectories as CSV. Single paths get `time,state` rows; an
/// ensemble gets a leading `replicate` column.
pub fn format_paths_csv(paths: &[SamplePath<f64>]) -> String {
    let mut out = String::new();
    let multi = paths.len() > 1;
    if multi {
        out.push_str("replicate,time,state\n");
    } else {
        out.push_str("time,state\n");
    }
    for (k, path) in paths.iter().enumerate() {
        let mut write_row = |time: f64, state: usize| {
            if multi {
                out.push_str(&format!("{k},{time},{state}\n"));
            } else {
                out.push_str(&format!("{time},{state}\n"));
            }
        };
        write_row(0.0, path.initial().get());
        for (&t, &s) in path.jump_times().iter().zip(path.states_after_jumps()) {
            write_row(t, s.get());
        }
    }
    out
}

/// Parse skeleton observations from CSV. Accepts `time,state` rows or
/// `replicate,time,state` rows, with or without a header; returns one
/// observation record per replicate, in replicate order.
pub fn parse_skeletons(text: &str) -> Result<Vec<(u64, SkeletonObservations<f64>)>> {
    let mut groups: Vec<(u64, Vec<f64>, Vec<usize>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<(u64, f64, usize)> = match fields.as_slice() {
            [time, state] => match (time.parse(), state.parse()) {
                (Ok(t), Ok(s)) => Some((0, t, s)),
                _ => None,
            },
            [replicate, time, state] => {
                match (replicate.parse(), time.parse(), state.parse()) {
                    (Ok(r), Ok(t), Ok(s)) => Some((r, t, s)),
                    _ => None,
                }
            }
            _ => None,
        };
        match parsed {
            Some((replicate, time, state)) => {
                match groups.iter_mut().find(|(r, _, _)| *r == replicate) {
                    Some((_, times, states)) => {
                        times.push(time);
                        states.push(state);
                    }
                    None => groups.push((replicate, vec![time], vec![state])),
                }
            }
            None => {
                // The only non-numeric line tolerated is a leading header.
                if lineno == 0 && !fields.is_empty() && fields[0].parse::<f64>().is_err() {
                    continue;
                }
                return Err(Error::FileFormat(format!(
                    "line {}: expected time,state or replicate,time,state, got {line:?}",
                    lineno + 1
                )));
            }
        }
    }
    if groups.is_empty() {
        return Err(Error::FileFormat("observation file has no data rows".into()));
    }
    groups
        .into_iter()
        .map(|(r, times, states)| Ok((r, SkeletonObservations::new(times, states)?)))
        .collect()
}

/// Read and parse an observation file.
pub fn load_skeletons(path: &FsPath) -> Result<Vec<(u64, SkeletonObservations<f64>)>> {
    parse_skeletons(&fs::read_to_string(path)?)
}

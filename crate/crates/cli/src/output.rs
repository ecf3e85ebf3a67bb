//! CSV rows and artifact files.
//!
//! Column order is the field order of each row struct.

use std::io::Write;
use std::path::Path;

use nonconv::bounds::BoundReport;
use nonconv::experiments::{InitFrequencies, SweepRow, TrialRecord};
use serde::Serialize;

use crate::{Failure, Format};

fn join(widths: &[usize]) -> String {
    widths.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("-")
}

/// `trial,seed,method,arch,rejections,dead_layer_init,dead_layer_end,
/// frozen_prefix_len,frozen_prefix_ok,output_constant,risk_init,risk_final,
/// risk_min,reference_optimum,final_gap,risk_constant`
#[derive(Serialize)]
pub struct TrialRow {
    trial: u64,
    seed: u64,
    method: &'static str,
    arch: String,
    rejections: u64,
    /// Deepest certified layer, `0` for none.
    dead_layer_init: usize,
    dead_layer_end: usize,
    frozen_prefix_len: usize,
    frozen_prefix_ok: bool,
    output_constant: Option<bool>,
    risk_init: f64,
    risk_final: f64,
    risk_min: f64,
    reference_optimum: f64,
    final_gap: f64,
    risk_constant: bool,
}

fn deepest(v: &[nonconv::Verdict]) -> usize {
    nonconv::inactivity::deepest_inactive(v).unwrap_or(0)
}

impl From<&TrialRecord> for TrialRow {
    fn from(r: &TrialRecord) -> Self {
        TrialRow {
            trial: r.trial,
            seed: r.seed,
            method: r.method.name(),
            arch: join(&r.arch),
            rejections: r.rejections,
            dead_layer_init: deepest(&r.dead_at_init),
            dead_layer_end: deepest(&r.dead_at_end),
            frozen_prefix_len: r.frozen_prefix_len,
            frozen_prefix_ok: r.frozen_prefix_ok,
            output_constant: r.output_constant,
            risk_init: r.risk_trace[0],
            risk_final: *r.risk_trace.last().expect("nonempty trace"),
            risk_min: r.final_gap + r.reference_optimum,
            reference_optimum: r.reference_optimum,
            final_gap: r.final_gap,
            risk_constant: r.risk_trace_constant(),
        }
    }
}

/// `event,freq,ci_halfwidth,analytic_bound`
#[derive(Serialize)]
pub struct InitRow {
    event: String,
    freq: f64,
    ci_halfwidth: f64,
    analytic_bound: Option<f64>,
}

pub fn init_rows(f: &InitFrequencies) -> Vec<InitRow> {
    let ci = |p: f64| nonconv::experiments::binomial_ci(p, f.n_trials);
    let mut rows: Vec<InitRow> = f
        .layer_freq
        .iter()
        .enumerate()
        .map(|(i, &p)| InitRow {
            event: format!("layer_{}", i + 1),
            freq: p,
            ci_halfwidth: ci(p),
            analytic_bound: None,
        })
        .collect();
    rows.push(InitRow {
        event: "window".into(),
        freq: f.window_freq,
        ci_halfwidth: ci(f.window_freq),
        analytic_bound: Some(f.bounds.layer1_bound),
    });
    rows.push(InitRow {
        event: "deep_witness".into(),
        freq: f.witness_freq,
        ci_halfwidth: ci(f.witness_freq),
        analytic_bound: Some(f.bounds.deep_bound),
    });
    rows.push(InitRow {
        event: "any_layer".into(),
        freq: f.any_layer_freq,
        ci_halfwidth: ci(f.any_layer_freq),
        analytic_bound: Some(f.bounds.combined_bound),
    });
    rows
}

/// `arch,activation,distribution,eta,zeta,gamma,rho,layer1_bound,deep_bound,combined_bound`
#[derive(Serialize)]
pub struct BoundRow {
    arch: String,
    activation: String,
    distribution: String,
    eta: f64,
    zeta: f64,
    gamma: f64,
    /// Empty for `−∞`.
    rho: Option<f64>,
    layer1_bound: f64,
    deep_bound: f64,
    combined_bound: f64,
}

impl From<&BoundReport> for BoundRow {
    fn from(r: &BoundReport) -> Self {
        BoundRow {
            arch: join(&r.arch),
            activation: r.activation.clone(),
            distribution: r.distribution.clone(),
            eta: r.window[0],
            zeta: r.window[1],
            gamma: r.gamma,
            rho: r.rho,
            layer1_bound: r.layer1_bound,
            deep_bound: r.deep_bound,
            combined_bound: r.combined_bound,
        }
    }
}

/// `depth,arch,trials,witness_freq,dead_freq,layer1_bound,deep_bound,
/// combined_bound,within_3sigma,train_trials,train_freq`
#[derive(Serialize)]
pub struct SweepCsvRow {
    depth: usize,
    arch: String,
    trials: usize,
    witness_freq: f64,
    dead_freq: f64,
    layer1_bound: f64,
    deep_bound: f64,
    combined_bound: f64,
    within_3sigma: bool,
    train_trials: usize,
    train_freq: Option<f64>,
}

impl From<&SweepRow> for SweepCsvRow {
    fn from(r: &SweepRow) -> Self {
        SweepCsvRow {
            depth: r.depth,
            arch: join(&r.arch),
            trials: r.trials,
            witness_freq: r.witness_freq,
            dead_freq: r.dead_freq,
            layer1_bound: r.layer1_bound,
            deep_bound: r.deep_bound,
            combined_bound: r.combined_bound,
            within_3sigma: r.within_3sigma,
            train_trials: r.train_trials,
            train_freq: r.train_freq,
        }
    }
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Internal(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| Failure::Internal(format!("csv: {e}")))
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Failure::Internal(format!("json: {e}")))?;
    v.push(b'\n');
    Ok(v)
}

/// Artifacts of one command.
pub struct Artifacts {
    pub stem: &'static str,
    pub csv: Vec<u8>,
    pub json: Vec<u8>,
    pub svg: Option<Vec<u8>>,
}

impl Artifacts {
    pub fn emit(
        &self,
        out_dir: Option<&Path>,
        format: Format,
        plot: bool,
        stdout: &mut dyn Write,
    ) -> Result<(), Failure> {
        if let Some(dir) = out_dir {
            std::fs::create_dir_all(dir)
                .map_err(|e| Failure::Config(format!("cannot create {}: {e}", dir.display())))?;
            write_file(dir, &format!("{}.csv", self.stem), &self.csv)?;
            write_file(dir, &format!("{}.json", self.stem), &self.json)?;
            if plot {
                if let Some(svg) = &self.svg {
                    write_file(dir, &format!("{}.svg", self.stem), svg)?;
                }
            }
        }
        let body = match format {
            Format::Csv => &self.csv,
            Format::Json => &self.json,
        };
        stdout
            .write_all(body)
            .map_err(|e| Failure::Internal(format!("stdout: {e}")))
    }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), Failure> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
}

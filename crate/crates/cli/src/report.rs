//! Report assembly and emission.
//!
//! Every artifact carries the schema tag `sparc-report/1`: the JSON report
//! as a top-level field, each CSV as a leading comment line. Reports hold
//! no timestamps or environment state, so identical (config, seeds) runs
//! produce byte-identical files. Non-finite numbers serialize as JSON
//! `null`; absent optional columns are empty CSV cells. Floats print in
//! the shortest form that parses back to the same value.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sparc_core::{AnalysisProfile, CodeParams, SweepPoint};

use crate::config::{ExperimentConfig, Mode, SeedsSection};

pub const SCHEMA: &str = "sparc-report/1";

/// Library/tool identification embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub tool: &'static str,
    /// Dictionary generator identity; reports are only comparable when it
    /// matches.
    pub generator: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Versions { tool: env!("CARGO_PKG_VERSION"), generator: sparc_core::GENERATOR_ID }
    }
}

/// The realized code dimensions behind a simulation.
#[derive(Debug, Clone, Serialize)]
pub struct CodeSummary {
    pub params: CodeParams,
    pub payload_bits: usize,
    pub realized_rate_nats: f64,
    pub dictionary_bytes: u64,
}

impl CodeSummary {
    pub fn new(params: &CodeParams) -> Self {
        CodeSummary {
            params: params.clone(),
            payload_bits: params.payload_bits(),
            realized_rate_nats: params.realized_rate_nats(),
            dictionary_bytes: params.dictionary_bytes() as u64,
        }
    }
}

/// Outer-code metadata for concatenated runs.
#[derive(Debug, Clone, Serialize)]
pub struct ConcatSummary {
    pub field_size: usize,
    pub n_rs: usize,
    pub k_rs: usize,
    pub t: usize,
    pub delta: f64,
    pub extended: bool,
    /// Field-defining primitive polynomial, hex.
    pub prim_poly: String,
    pub payload_bits: usize,
    pub overall_rate_nats: f64,
}

/// Analysis that could not complete: the staircase never reached its
/// endpoint (rate at or beyond what the knobs support). Reported instead
/// of crashing so infeasible operating points still produce diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisFailure {
    /// Machine-readable failure class, e.g. `accumulation_stall`.
    pub kind: String,
    /// Human-readable diagnostics from the analysis.
    pub message: String,
}

/// One sweep entry: the optimized point for a section size, or the failure
/// that size hit (the sweep continues past failures).
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub b: usize,
    pub capacity_nats: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<SweepPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One Monte Carlo trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub noise_seed: u64,
    pub message_seed: u64,
    pub steps_used: usize,
    pub stop: String,
    /// Unweighted fraction of sections decided incorrectly.
    pub section_mistake_fraction: f64,
    /// Power weight of correctly decided sections.
    pub q_hat: f64,
    /// Power weight of wrongly threshold-accepted sections.
    pub f_hat: f64,
    /// Failed-detection weight plus false-alarm weight.
    pub weighted_mistakes: f64,
    pub erased_sections: usize,
    /// Plain runs: any section mistake. Concatenated runs: outer decode
    /// failure.
    pub block_error: bool,
    /// Cumulative correct-acceptance weight per step.
    pub q_hat_steps: Vec<f64>,
    /// Cumulative false-alarm weight per step.
    pub f_hat_steps: Vec<f64>,
}

/// Summary statistics over the trial records; every field is exactly
/// recomputable from them.
#[derive(Debug, Clone, Serialize)]
pub struct Aggregates {
    pub trials: usize,
    pub mean_section_mistake_fraction: f64,
    pub mean_weighted_mistakes: f64,
    pub max_weighted_mistakes: f64,
    /// Nearest-rank empirical quantiles of the weighted mistake total.
    pub weighted_mistakes_p50: f64,
    pub weighted_mistakes_p90: f64,
    pub weighted_mistakes_p99: f64,
    pub block_error_rate: f64,
    /// Schedule allowance `m f + rem` (present when the rate came from the
    /// analysis).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mistake_budget: Option<f64>,
    /// Fraction of trials with weighted mistakes within the allowance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fraction_within_budget: Option<f64>,
}

/// Nearest-rank quantile of an unsorted sample.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn aggregate(trials: &[TrialRecord], budget: Option<f64>) -> Aggregates {
    let n = trials.len();
    let nf = n as f64;
    let mut weighted: Vec<f64> = trials.iter().map(|t| t.weighted_mistakes).collect();
    weighted.sort_by(f64::total_cmp);
    let within = budget.map(|b| {
        trials.iter().filter(|t| t.weighted_mistakes <= b).count() as f64 / nf
    });
    Aggregates {
        trials: n,
        mean_section_mistake_fraction: trials
            .iter()
            .map(|t| t.section_mistake_fraction)
            .sum::<f64>()
            / nf,
        mean_weighted_mistakes: weighted.iter().sum::<f64>() / nf,
        max_weighted_mistakes: weighted.last().copied().unwrap_or(f64::NAN),
        weighted_mistakes_p50: quantile(&weighted, 0.50),
        weighted_mistakes_p90: quantile(&weighted, 0.90),
        weighted_mistakes_p99: quantile(&weighted, 0.99),
        block_error_rate: trials.iter().filter(|t| t.block_error).count() as f64 / nf,
        mistake_budget: budget,
        fraction_within_budget: within,
    }
}

/// The complete emitted report. Sections not used by the mode are omitted
/// from the JSON.
#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub schema: &'static str,
    pub mode: Mode,
    pub versions: Versions,
    pub seeds: SeedsSection,
    /// Echo of the merged configuration the run resolved.
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<CodeSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concat: Option<ConcatSummary>,
    /// Analysis sidecar: schedule, reliability bound, mistake budget, and
    /// the sampled update curve. Present whenever the mode derived its
    /// rate from the analysis.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisProfile>,
    /// Present when the analysis could not complete at the requested
    /// operating point; mutually exclusive with `analysis`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis_failure: Option<AnalysisFailure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<Vec<TrialRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregates: Option<Aggregates>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepRow>>,
}

impl SimReport {
    pub fn new(mode: Mode, cfg: &ExperimentConfig) -> Self {
        SimReport {
            schema: SCHEMA,
            mode,
            versions: Versions::default(),
            seeds: cfg.seeds.clone(),
            config: cfg.clone(),
            code: None,
            concat: None,
            analysis: None,
            analysis_failure: None,
            trials: None,
            aggregates: None,
            sweep: None,
        }
    }
}

/// Serializable enum -> its snake_case wire name.
fn wire_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

struct Csv {
    buf: String,
}

impl Csv {
    fn new(columns: &str) -> Self {
        Csv { buf: format!("# schema: {SCHEMA}\n{columns}\n") }
    }

    fn row(&mut self, cells: &[String]) {
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)
}

/// Writes the JSON report plus the mode's CSV companions into `dir`,
/// returning every path written.
pub fn emit_report(report: &SimReport, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let json_path = dir.join("report.json");
    let mut json = serde_json::to_vec_pretty(report).expect("report serialization cannot fail");
    json.push(b'\n');
    write_file(&json_path, &json)?;
    written.push(json_path);

    if let Some(trials) = &report.trials {
        let mut csv = Csv::new(
            "trial,noise_seed,message_seed,steps_used,stop,section_mistake_fraction,\
             q_hat,f_hat,weighted_mistakes,erased_sections,block_error",
        );
        for t in trials {
            csv.row(&[
                t.trial.to_string(),
                t.noise_seed.to_string(),
                t.message_seed.to_string(),
                t.steps_used.to_string(),
                t.stop.clone(),
                t.section_mistake_fraction.to_string(),
                t.q_hat.to_string(),
                t.f_hat.to_string(),
                t.weighted_mistakes.to_string(),
                t.erased_sections.to_string(),
                t.block_error.to_string(),
            ]);
        }
        let path = dir.join("trials.csv");
        write_file(&path, csv.buf.as_bytes())?;
        written.push(path);
    }

    if let Some(profile) = &report.analysis {
        // Third column repeats x so the y = x reference line plots straight
        // from the file.
        let mut curve = Csv::new("x,g,y_equals_x");
        for [x, g] in &profile.g_curve {
            curve.row(&[x.to_string(), g.to_string(), x.to_string()]);
        }
        let path = dir.join("g_curve.csv");
        write_file(&path, curve.buf.as_bytes())?;
        written.push(path);

        let sched = &profile.schedule;
        let mut stairs = Csv::new("k,x_prev,x,q_star,q,eta,w,lambda");
        for k in 1..=sched.m {
            stairs.row(&[
                k.to_string(),
                sched.x[k - 1].to_string(),
                sched.x[k].to_string(),
                sched.q_star[k - 1].to_string(),
                sched.q[k - 1].to_string(),
                sched.eta[k - 1].to_string(),
                sched.w[k - 1].to_string(),
                if k >= 2 { sched.lambda[k - 2].to_string() } else { String::new() },
            ]);
        }
        let path = dir.join("staircase.csv");
        write_file(&path, stairs.buf.as_bytes())?;
        written.push(path);
    }

    if let Some(rows) = &report.sweep {
        let mut csv = Csv::new(
            "b,capacity_nats,rate_nats,gap_scaling,feasibility,m,mistake_budget,\
             bound_clipped,alloc_kind,gamma_nats,a,c,r,eta,f,evaluations",
        );
        for row in rows {
            match &row.point {
                Some(p) => csv.row(&[
                    p.b.to_string(),
                    p.capacity_nats.to_string(),
                    p.rate_nats.to_string(),
                    p.gap_scaling.to_string(),
                    wire_name(&p.feasibility),
                    p.m.to_string(),
                    p.mistake_budget.to_string(),
                    p.bound_clipped.to_string(),
                    wire_name(&p.alloc_kind),
                    fmt_opt(p.gamma_nats),
                    p.a.to_string(),
                    fmt_opt(p.c),
                    p.r.to_string(),
                    fmt_opt(p.eta),
                    p.f.to_string(),
                    p.evaluations.to_string(),
                ]),
                // Failed sizes keep their row (the JSON carries the error
                // text); only the feasibility column is filled.
                None => {
                    let mut cells = vec![row.b.to_string(), row.capacity_nats.to_string()];
                    cells.extend(std::iter::repeat_n(String::new(), 2));
                    cells.push("failed".into());
                    cells.extend(std::iter::repeat_n(String::new(), 11));
                    csv.row(&cells);
                }
            }
        }
        let path = dir.join("sweep.csv");
        write_file(&path, csv.buf.as_bytes())?;
        written.push(path);
    }

    Ok(written)
}

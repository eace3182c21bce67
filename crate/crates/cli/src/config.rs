//! Experiment configuration: TOML file + command-line overrides, validated
//! in one pass so every problem is reported together.
//!
//! Units are explicit to prevent silent log-base bugs: rates are given as
//! `rate_nats` or `rate_bits` (exactly one, or neither to derive the rate
//! from the analysis), and the allocation decay as `gamma_nats` or
//! `gamma_frac` (fraction of capacity). Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sparc_core::AllocationKind;

/// What an invocation runs; the CLI verb selects it, and a `mode` key in
/// the file (if present) must agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Montecarlo,
    Analyze,
    Sweep,
    Concat,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Montecarlo => "montecarlo",
            Mode::Analyze => "analyze",
            Mode::Sweep => "sweep",
            Mode::Concat => "concat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum AllocKindCfg {
    Constant,
    Exponential,
    Leveled,
}

impl From<AllocKindCfg> for AllocationKind {
    fn from(k: AllocKindCfg) -> Self {
        match k {
            AllocKindCfg::Constant => AllocationKind::Constant,
            AllocKindCfg::Exponential => AllocationKind::Exponential,
            AllocKindCfg::Leveled => AllocationKind::Leveled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum TacticCfg {
    ConstantEta,
    ConstantExponent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum LambdaCfg {
    /// Combine weights from the analysis schedule.
    Schedule,
    /// Plug-in weights from realized acceptance.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum FinalizeCfg {
    Argmax,
    Erase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SweepSectionsCfg {
    /// Many-section limit per size.
    Continuum,
    /// Finite analysis with L = B at each size.
    LEqualsB,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodeSection {
    /// Number of sections.
    pub l: Option<usize>,
    /// Section size (power of two); also the outer field size in concat
    /// mode.
    pub b: Option<usize>,
    pub snr: Option<f64>,
    /// Rate in nats per channel use. Mutually exclusive with `rate_bits`;
    /// omit both to take the rate from the analysis.
    pub rate_nats: Option<f64>,
    /// Rate in bits per channel use (converted by ln 2).
    pub rate_bits: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllocationSection {
    pub kind: Option<AllocKindCfg>,
    /// Decay parameter in nats. Mutually exclusive with `gamma_frac`.
    pub gamma_nats: Option<f64>,
    /// Decay parameter as a fraction of capacity.
    pub gamma_frac: Option<f64>,
    /// Leveling floor parameter (leveled kind only).
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Threshold offset `a >= 0`.
    pub a: Option<f64>,
    /// Analysis shift; default `0.01 sqrt(2 ln B)`.
    pub h: Option<f64>,
    /// Rate-margin knob `r >= 0`.
    pub r: Option<f64>,
    /// Per-step shortfall (constant-eta tactic).
    pub eta: Option<f64>,
    /// Working per-step false-alarm rate; omitted = derived.
    pub f: Option<f64>,
    pub tactic: Option<TacticCfg>,
    pub bound_sum_target: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoderSection {
    /// Step count; omitted = the schedule's `m`.
    pub max_steps: Option<usize>,
    /// Combine-weight rule; omitted = `schedule` when a schedule exists,
    /// `empirical` otherwise.
    pub lambda: Option<LambdaCfg>,
    pub finalize: Option<FinalizeCfg>,
    /// Per-step nominal false-alarm weight for the empirical rule;
    /// omitted = the schedule's working rate (0 without a schedule).
    pub nominal_false_alarm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloSection {
    pub trials: Option<usize>,
    /// Channel noise variance; the power scale assumes 1, and 0 gives a
    /// noiseless channel.
    pub sigma2: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Section sizes to sweep, each a power of two.
    pub b_list: Option<Vec<usize>>,
    pub sections: Option<SweepSectionsCfg>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConcatSection {
    /// Outer design mistake fraction; `k_rs = ceil((1 - 2 delta) n_rs)`.
    /// Mutually exclusive with `k_rs`.
    pub delta: Option<f64>,
    /// Outer message length in symbols.
    pub k_rs: Option<usize>,
    /// Use the full-field code length `B` instead of `B - 1`.
    pub extended: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedsSection {
    pub dictionary: u64,
    pub noise: u64,
    pub message: u64,
}

impl Default for SeedsSection {
    fn default() -> Self {
        SeedsSection { dictionary: 1, noise: 2, message: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetsSection {
    pub mistake_fraction: f64,
    pub prob_bound: f64,
    pub eval_budget: usize,
}

impl Default for TargetsSection {
    fn default() -> Self {
        TargetsSection { mistake_fraction: 0.10, prob_bound: 1e-3, eval_budget: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitsSection {
    /// Dictionary memory guardrail: configs needing more bytes than this
    /// are refused with the largest feasible section size suggested.
    pub memory_budget_bytes: u64,
}

impl Default for LimitsSection {
    fn default() -> Self {
        LimitsSection { memory_budget_bytes: 2 << 30 }
    }
}

/// The full experiment file. Every field has a default so a config file
/// can state only what it changes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub code: CodeSection,
    pub allocation: AllocationSection,
    pub analysis: AnalysisSection,
    pub decoder: DecoderSection,
    pub montecarlo: MonteCarloSection,
    pub sweep: SweepSection,
    pub concat: ConcatSection,
    pub seeds: SeedsSection,
    pub targets: TargetsSection,
    pub limits: LimitsSection,
}

/// Command-line overrides; every flag mirrors one config key and, when
/// present, replaces the file's value.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Number of sections L.
    #[arg(long)]
    pub l: Option<usize>,
    /// Section size B (power of two).
    #[arg(long)]
    pub b: Option<usize>,
    /// Signal-to-noise ratio P / sigma^2.
    #[arg(long)]
    pub snr: Option<f64>,
    /// Rate in nats per channel use (conflicts with --rate-bits).
    #[arg(long)]
    pub rate_nats: Option<f64>,
    /// Rate in bits per channel use (conflicts with --rate-nats).
    #[arg(long)]
    pub rate_bits: Option<f64>,
    /// Power allocation family.
    #[arg(long)]
    pub alloc: Option<AllocKindCfg>,
    /// Allocation decay in nats (conflicts with --gamma-frac).
    #[arg(long)]
    pub gamma_nats: Option<f64>,
    /// Allocation decay as a fraction of capacity.
    #[arg(long)]
    pub gamma_frac: Option<f64>,
    /// Leveling floor parameter c.
    #[arg(long)]
    pub c: Option<f64>,
    /// Threshold offset a.
    #[arg(long)]
    pub a: Option<f64>,
    /// Analysis shift h.
    #[arg(long)]
    pub h: Option<f64>,
    /// Rate-margin knob r.
    #[arg(long)]
    pub r: Option<f64>,
    /// Per-step shortfall eta.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Working per-step false-alarm rate f.
    #[arg(long)]
    pub f: Option<f64>,
    /// Shortfall tactic.
    #[arg(long)]
    pub tactic: Option<TacticCfg>,
    /// Decoder step count.
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Decoder combine-weight rule.
    #[arg(long)]
    pub lambda: Option<LambdaCfg>,
    /// Undecided-section rule.
    #[arg(long)]
    pub finalize: Option<FinalizeCfg>,
    /// Number of Monte Carlo trials.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Channel noise variance (0 = noiseless).
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Sweep section sizes, comma-separated powers of two.
    #[arg(long, value_delimiter = ',')]
    pub b_list: Option<Vec<usize>>,
    /// Sweep section mode.
    #[arg(long)]
    pub sections: Option<SweepSectionsCfg>,
    /// Outer design mistake fraction delta (conflicts with --k-rs).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Outer message length in symbols.
    #[arg(long)]
    pub k_rs: Option<usize>,
    /// Use the full-field outer code length.
    #[arg(long)]
    pub extended: Option<bool>,
    /// Dictionary base seed.
    #[arg(long)]
    pub seed_dictionary: Option<u64>,
    /// Noise base seed.
    #[arg(long)]
    pub seed_noise: Option<u64>,
    /// Message base seed.
    #[arg(long)]
    pub seed_message: Option<u64>,
    /// Dictionary memory guardrail in bytes.
    #[arg(long)]
    pub memory_budget_bytes: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        macro_rules! take {
            ($src:expr => $dst:expr) => {
                if let Some(v) = $src {
                    $dst = Some(v);
                }
            };
        }
        take!(self.l => cfg.code.l);
        take!(self.b => cfg.code.b);
        take!(self.snr => cfg.code.snr);
        take!(self.rate_nats => cfg.code.rate_nats);
        take!(self.rate_bits => cfg.code.rate_bits);
        take!(self.alloc => cfg.allocation.kind);
        take!(self.gamma_nats => cfg.allocation.gamma_nats);
        take!(self.gamma_frac => cfg.allocation.gamma_frac);
        take!(self.c => cfg.allocation.c);
        take!(self.a => cfg.analysis.a);
        take!(self.h => cfg.analysis.h);
        take!(self.r => cfg.analysis.r);
        take!(self.eta => cfg.analysis.eta);
        take!(self.f => cfg.analysis.f);
        take!(self.tactic => cfg.analysis.tactic);
        take!(self.max_steps => cfg.decoder.max_steps);
        take!(self.lambda => cfg.decoder.lambda);
        take!(self.finalize => cfg.decoder.finalize);
        take!(self.trials => cfg.montecarlo.trials);
        take!(self.sigma2 => cfg.montecarlo.sigma2);
        take!(self.sections => cfg.sweep.sections);
        take!(self.delta => cfg.concat.delta);
        take!(self.k_rs => cfg.concat.k_rs);
        take!(self.extended => cfg.concat.extended);
        if let Some(list) = &self.b_list {
            cfg.sweep.b_list = Some(list.clone());
        }
        if let Some(v) = self.seed_dictionary {
            cfg.seeds.dictionary = v;
        }
        if let Some(v) = self.seed_noise {
            cfg.seeds.noise = v;
        }
        if let Some(v) = self.seed_message {
            cfg.seeds.message = v;
        }
        if let Some(v) = self.memory_budget_bytes {
            cfg.limits.memory_budget_bytes = v;
        }
    }
}

/// How the code rate is determined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateSpec {
    /// Fixed rate in nats.
    Explicit(f64),
    /// Derived from the analysis at the configured knobs.
    FromAnalysis,
}

/// A validated experiment: the echoed config plus pre-resolved fields.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub mode: Mode,
    pub cfg: ExperimentConfig,
    pub rate: RateSpec,
    /// Decay parameter in nats, resolved from either unit.
    pub gamma_nats: Option<f64>,
}

/// Validates the merged config for `mode`, collecting every problem in one
/// pass.
pub fn resolve(cfg: ExperimentConfig, mode: Mode) -> Result<Resolved, Vec<String>> {
    let mut problems = Vec::new();
    macro_rules! flag {
        ($cond:expr, $msg:expr $(,)?) => {
            if $cond {
                problems.push($msg);
            }
        };
    }

    if let Some(file_mode) = cfg.mode {
        flag!(
            file_mode != mode,
            format!(
                "config file sets mode = {} but the {} verb was invoked",
                file_mode.name(),
                mode.name()
            ),
        );
    }

    // Rate units.
    let rate = match (cfg.code.rate_nats, cfg.code.rate_bits) {
        (Some(_), Some(_)) => {
            problems.push("rate_nats and rate_bits are mutually exclusive".into());
            RateSpec::FromAnalysis
        }
        (Some(nats), None) => {
            flag!(!(nats > 0.0), format!("rate_nats = {nats} must be positive"));
            RateSpec::Explicit(nats)
        }
        (None, Some(bits)) => {
            flag!(!(bits > 0.0), format!("rate_bits = {bits} must be positive"));
            RateSpec::Explicit(bits * std::f64::consts::LN_2)
        }
        (None, None) => RateSpec::FromAnalysis,
    };

    // Allocation decay units.
    let capacity = cfg.code.snr.filter(|s| *s > 0.0).map(|s| 0.5 * (1.0 + s).ln());
    let gamma_nats = match (cfg.allocation.gamma_nats, cfg.allocation.gamma_frac) {
        (Some(_), Some(_)) => {
            problems.push("gamma_nats and gamma_frac are mutually exclusive".into());
            None
        }
        (Some(g), None) => {
            flag!(!(g > 0.0), format!("gamma_nats = {g} must be positive"));
            Some(g)
        }
        (None, Some(fr)) => {
            flag!(
                !(fr > 0.0 && fr <= 1.0),
                format!("gamma_frac = {fr} must lie in (0, 1]"),
            );
            capacity.map(|cap| fr * cap)
        }
        (None, None) => None,
    };

    // Allocation family consistency.
    let kind = cfg.allocation.kind.unwrap_or(AllocKindCfg::Constant);
    match kind {
        AllocKindCfg::Constant => {
            flag!(
                gamma_nats.is_some(),
                "allocation decay gamma has no effect with the constant kind".into(),
            );
            flag!(
                cfg.allocation.c.is_some(),
                "leveling parameter c has no effect with the constant kind".into(),
            );
        }
        AllocKindCfg::Exponential => {
            flag!(
                cfg.allocation.c.is_some(),
                "leveling parameter c has no effect with the exponential kind".into(),
            );
        }
        AllocKindCfg::Leveled => {}
    }

    // Scalar ranges (the library re-validates; this pass gives a complete
    // report up front).
    if let Some(b) = cfg.code.b {
        flag!(b < 2 || !b.is_power_of_two(), format!("b = {b} must be a power of two >= 2"));
    }
    if let Some(l) = cfg.code.l {
        flag!(l == 0, "l must be >= 1".into());
    }
    if let Some(snr) = cfg.code.snr {
        flag!(!(snr > 0.0), format!("snr = {snr} must be positive"));
    }
    if let Some(a) = cfg.analysis.a {
        flag!(!(a >= 0.0), format!("a = {a} must be >= 0"));
    }
    if let Some(h) = cfg.analysis.h {
        flag!(!(h > 0.0), format!("h = {h} must be positive"));
    }
    if let Some(r) = cfg.analysis.r {
        flag!(!(r >= 0.0), format!("r = {r} must be >= 0"));
    }
    if let Some(eta) = cfg.analysis.eta {
        flag!(!(eta > 0.0), format!("eta = {eta} must be positive"));
    }
    if let Some(f) = cfg.analysis.f {
        flag!(!(f >= 0.0), format!("f = {f} must be >= 0"));
    }
    if let Some(s2) = cfg.montecarlo.sigma2 {
        flag!(!(s2 >= 0.0), format!("sigma2 = {s2} must be >= 0"));
    }
    if let Some(t) = cfg.montecarlo.trials {
        flag!(t == 0, "trials must be >= 1".into());
    }
    flag!(
        !(cfg.targets.mistake_fraction > 0.0),
        format!("targets.mistake_fraction = {} must be positive", cfg.targets.mistake_fraction),
    );
    flag!(
        !(cfg.targets.prob_bound > 0.0),
        format!("targets.prob_bound = {} must be positive", cfg.targets.prob_bound),
    );
    flag!(cfg.limits.memory_budget_bytes == 0, "limits.memory_budget_bytes must be positive".into());

    // Mode-specific requirements.
    let need = |field: Option<()>, name: &str, problems: &mut Vec<String>| {
        if field.is_none() {
            problems.push(format!("{} mode requires {}", mode.name(), name));
        }
    };
    match mode {
        Mode::Montecarlo | Mode::Concat => {
            need(cfg.code.l.map(|_| ()), "code.l", &mut problems);
            need(cfg.code.b.map(|_| ()), "code.b", &mut problems);
            need(cfg.code.snr.map(|_| ()), "code.snr", &mut problems);
            need(cfg.analysis.a.map(|_| ()), "analysis.a", &mut problems);
            if matches!(rate, RateSpec::Explicit(_)) && cfg.decoder.max_steps.is_none() {
                problems.push(
                    "an explicit rate needs decoder.max_steps (no schedule is derived)".into(),
                );
            }
            if matches!(rate, RateSpec::Explicit(_))
                && matches!(cfg.decoder.lambda, Some(LambdaCfg::Schedule))
            {
                problems.push(
                    "decoder.lambda = schedule needs the rate to come from the analysis".into(),
                );
            }
        }
        Mode::Analyze => {
            need(cfg.code.b.map(|_| ()), "code.b", &mut problems);
            need(cfg.code.snr.map(|_| ()), "code.snr", &mut problems);
            need(cfg.analysis.a.map(|_| ()), "analysis.a", &mut problems);
            flag!(
                matches!(rate, RateSpec::Explicit(_)),
                "analyze mode derives its rate from the analysis; drop rate_nats/rate_bits"
                    .into(),
            );
        }
        Mode::Sweep => {
            need(cfg.code.snr.map(|_| ()), "code.snr", &mut problems);
            match &cfg.sweep.b_list {
                None => problems.push("sweep mode requires sweep.b_list".into()),
                Some(list) => {
                    flag!(list.is_empty(), "sweep.b_list must not be empty".into());
                    for &b in list {
                        flag!(
                            b < 2 || !b.is_power_of_two(),
                            format!("sweep.b_list entry {b} must be a power of two >= 2"),
                        );
                    }
                }
            }
            flag!(
                matches!(rate, RateSpec::Explicit(_)),
                "sweep mode optimizes the rate per size; drop rate_nats/rate_bits".into(),
            );
        }
    }
    if mode == Mode::Concat {
        match (cfg.concat.delta, cfg.concat.k_rs) {
            (Some(_), Some(_)) => {
                problems.push("concat.delta and concat.k_rs are mutually exclusive".into())
            }
            (None, None) => {
                problems.push("concat mode requires concat.delta or concat.k_rs".into())
            }
            (Some(d), None) => {
                flag!(!(0.0..0.5).contains(&d), format!("concat.delta = {d} must lie in [0, 0.5)"))
            }
            (None, Some(k)) => flag!(k == 0, "concat.k_rs must be >= 1".into()),
        }
        if let (Some(l), Some(b)) = (cfg.code.l, cfg.code.b) {
            let extended = cfg.concat.extended.unwrap_or(false);
            let n_rs = if extended { b } else { b.saturating_sub(1) };
            flag!(
                l != n_rs,
                format!(
                    "concat mode needs code.l = outer length {n_rs} (section size {b}, \
                     extended = {extended}), got {l}"
                ),
            );
        }
    }

    // Tactic consistency.
    let tactic = cfg.analysis.tactic.unwrap_or(TacticCfg::ConstantExponent);
    if matches!(tactic, TacticCfg::ConstantEta) {
        flag!(
            cfg.analysis.eta.is_none(),
            "the constant_eta tactic requires analysis.eta".into(),
        );
        flag!(cfg.analysis.f.is_none(), "the constant_eta tactic requires analysis.f".into());
    }

    if problems.is_empty() {
        let mut cfg = cfg;
        cfg.mode = Some(mode);
        Ok(Resolved { mode, cfg, rate, gamma_nats })
    } else {
        Err(problems)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(mode: Mode) -> ExperimentConfig {
        let mut cfg = ExperimentConfig {
            code: CodeSection {
                l: Some(100),
                b: Some(512),
                snr: Some(15.0),
                ..Default::default()
            },
            analysis: AnalysisSection { a: Some(0.8), r: Some(16.0), ..Default::default() },
            ..Default::default()
        };
        cfg.mode = Some(mode);
        if mode == Mode::Sweep {
            cfg.sweep.b_list = Some(vec![64, 128]);
        }
        if mode == Mode::Concat {
            cfg.code.b = Some(16);
            cfg.code.l = Some(15);
            cfg.concat.delta = Some(0.1);
        }
        cfg
    }

    #[test]
    fn minimal_configs_resolve() {
        for mode in [Mode::Montecarlo, Mode::Analyze, Mode::Sweep, Mode::Concat] {
            let resolved = resolve(base(mode), mode).expect("expected valid");
            assert_eq!(resolved.mode, mode);
            assert_eq!(resolved.rate, RateSpec::FromAnalysis);
        }
    }

    #[test]
    fn all_problems_reported_in_one_pass() {
        let mut cfg = base(Mode::Montecarlo);
        cfg.code.rate_nats = Some(0.3);
        cfg.code.rate_bits = Some(0.4);
        cfg.allocation.gamma_nats = Some(0.5);
        cfg.allocation.gamma_frac = Some(0.8);
        cfg.code.b = Some(100);
        cfg.montecarlo.trials = Some(0);
        let problems = resolve(cfg, Mode::Montecarlo).unwrap_err();
        assert!(problems.len() >= 4, "got {problems:?}");
        assert!(problems.iter().any(|p| p.contains("rate_nats and rate_bits")));
        assert!(problems.iter().any(|p| p.contains("gamma_nats and gamma_frac")));
        assert!(problems.iter().any(|p| p.contains("power of two")));
        assert!(problems.iter().any(|p| p.contains("trials")));
    }

    #[test]
    fn rate_units_convert() {
        let mut cfg = base(Mode::Montecarlo);
        cfg.code.rate_bits = Some(1.0);
        cfg.decoder.max_steps = Some(4);
        let resolved = resolve(cfg, Mode::Montecarlo).unwrap();
        match resolved.rate {
            RateSpec::Explicit(nats) => {
                assert!((nats - std::f64::consts::LN_2).abs() < 1e-15)
            }
            other => panic!("expected explicit rate, got {other:?}"),
        }
    }

    #[test]
    fn gamma_fraction_scales_capacity() {
        let mut cfg = base(Mode::Montecarlo);
        cfg.allocation.kind = Some(AllocKindCfg::Leveled);
        cfg.allocation.gamma_frac = Some(0.8);
        cfg.allocation.c = Some(1.0);
        let resolved = resolve(cfg, Mode::Montecarlo).unwrap();
        let cap = 0.5 * 16.0f64.ln();
        assert!((resolved.gamma_nats.unwrap() - 0.8 * cap).abs() < 1e-15);
    }

    #[test]
    fn mode_conflict_is_reported() {
        let cfg = base(Mode::Analyze);
        let problems = resolve(cfg, Mode::Sweep).unwrap_err();
        assert!(problems.iter().any(|p| p.contains("mode")));
    }

    #[test]
    fn unknown_keys_rejected_by_the_format() {
        let err = toml::from_str::<ExperimentConfig>("[code]\nl = 10\nwat = 3\n").unwrap_err();
        assert!(err.to_string().contains("wat"));
    }

    #[test]
    fn explicit_rate_needs_decoder_steps() {
        let mut cfg = base(Mode::Montecarlo);
        cfg.code.rate_nats = Some(0.3);
        let problems = resolve(cfg, Mode::Montecarlo).unwrap_err();
        assert!(problems.iter().any(|p| p.contains("max_steps")));
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut cfg = base(Mode::Montecarlo);
        let over = Overrides {
            snr: Some(7.0),
            trials: Some(5),
            seed_noise: Some(99),
            ..Default::default()
        };
        over.apply(&mut cfg);
        assert_eq!(cfg.code.snr, Some(7.0));
        assert_eq!(cfg.montecarlo.trials, Some(5));
        assert_eq!(cfg.seeds.noise, 99);
    }
}

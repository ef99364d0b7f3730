use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use forecast_instability::dgp::{DgpFamily, DgpSpec};
use forecast_instability::forecasting::{compute_losses, estimate_ols, LossFunction};
use forecast_instability::harness::presets::{self, PresetKind, DEFAULT_REPLICATIONS, DEFAULT_SEED};
use forecast_instability::harness::{evaluate, run_experiment, write_csv, ExperimentSpec, ResultRow, StatSpec};
use forecast_instability::sample::{select_block_size, BlockRule, BlockSizing, SampleDesign, Scheme, VolatilityRegime};
use forecast_instability::teststats::{StatisticKind, VarianceChoice};
use forecast_instability::TestReport64;

use crate::config::{Mode, Settings};
use crate::data::read_dataset;
use crate::error::{CliError, CliResult};

/// Version of every JSON document written by the tool.
pub const SCHEMA_VERSION: u32 = 1;

/// What a command produced: text for stdout, files written, and whether
/// any test rejected.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub rejected: bool,
    pub stdout: String,
    pub files: Vec<PathBuf>,
}

/// Runs the mode selected in `settings` on a pool of `threads` workers
/// if given.
pub fn run(settings: &Settings) -> CliResult<Outcome> {
    match settings.threads {
        Some(0) => Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(|| dispatch(settings)),
        None => dispatch(settings),
    }
}

fn dispatch(s: &Settings) -> CliResult<Outcome> {
    let mode = match (s.mode, &s.input, &s.preset) {
        (Some(m), _, _) => m,
        (None, Some(_), _) => Mode::Test,
        (None, None, Some(_)) => Mode::Reproduce,
        (None, None, None) => return Err(CliError::Usage("no --mode given".into())),
    };
    match mode {
        Mode::Test => cmd_test(s),
        Mode::Simulate => cmd_simulate(s),
        Mode::Reproduce => {
            let name = s
                .preset
                .as_deref()
                .ok_or_else(|| CliError::Usage("reproduce mode needs --preset or a config naming one".into()))?;
            let out = s.out.clone().unwrap_or_else(|| PathBuf::from("."));
            cmd_reproduce(name, s.reps.unwrap_or(DEFAULT_REPLICATIONS), s.seed.unwrap_or(DEFAULT_SEED), &out)
        }
    }
}

fn parse<T: std::str::FromStr<Err = forecast_instability::Error>>(v: Option<&str>, default: T) -> CliResult<T> {
    Ok(v.map(str::parse).transpose()?.unwrap_or(default))
}

fn loss_of(s: &Settings) -> CliResult<LossFunction<f64>> {
    match s.loss.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None | Some("quadratic") => Ok(LossFunction::quadratic()),
        Some("linex") => Ok(LossFunction::linex(1.0, 1.0)?),
        Some(other) => Err(CliError::Usage(format!("unknown loss `{other}`; expected quadratic or linex"))),
    }
}

fn block_rule_of(s: &Settings) -> CliResult<BlockRule> {
    let regime = match s.block_rule.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None | Some("lipschitz") => VolatilityRegime::Lipschitz,
        Some("ito") => VolatilityRegime::Ito,
        Some(other) => return Err(CliError::Usage(format!("unknown block rule `{other}`; expected lipschitz or ito"))),
    };
    let sizing = match s.sizing.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None | Some("length-first") => BlockSizing::LengthFirst,
        Some("count-first") => BlockSizing::CountFirst,
        Some(other) => {
            return Err(CliError::Usage(format!("unknown block sizing `{other}`; expected length-first or count-first")))
        }
    };
    Ok(BlockRule::new(regime, s.epsilon.unwrap_or(0.0))?.with_sizing(sizing))
}

fn stats_of(s: &Settings, default: &[StatisticKind]) -> CliResult<Vec<StatSpec>> {
    let variance: VarianceChoice = parse(s.variance.as_deref(), VarianceChoice::NuL)?;
    let kinds: Vec<StatisticKind> =
        if s.stat.is_empty() { default.to_vec() } else { s.stat.iter().map(|k| k.parse()).collect::<Result<_, _>>()? };
    Ok(kinds.into_iter().map(|k| if k.uses_variance() { StatSpec::studentized(k, variance) } else { StatSpec::new(k) }).collect())
}

fn alpha_of(s: &Settings) -> f64 {
    s.alpha.unwrap_or(0.05)
}

fn write_file(path: &Path, bytes: &[u8], files: &mut Vec<PathBuf>) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    files.push(path.to_path_buf());
    Ok(())
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn to_json<T: Serialize>(v: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Debug, Clone, Serialize)]
pub struct TestSummary {
    pub schema_version: u32,
    pub input: Option<PathBuf>,
    #[serde(rename = "T")]
    pub total_obs: usize,
    #[serde(rename = "T_m")]
    pub in_sample: usize,
    #[serde(rename = "T_n")]
    pub out_sample: usize,
    pub horizon: usize,
    pub scheme: String,
    pub loss: String,
    pub predictors: Vec<String>,
    pub alpha: f64,
    pub any_reject: bool,
    pub reports: Vec<TestReport64>,
}

/// Runs the selected statistics on the data file named in `s.input`.
pub fn test_reports(s: &Settings) -> CliResult<TestSummary> {
    let input = s.input.as_ref().ok_or_else(|| CliError::Usage("test mode needs --input".into()))?;
    let data = read_dataset(input)?;
    let t = data.path.len();
    let design = SampleDesign::new(t, s.tm.unwrap_or(t / 2), s.tau.unwrap_or(1), parse(s.scheme.as_deref(), Scheme::Fixed)?)?;
    let loss = loss_of(s)?;
    let rule = block_rule_of(s)?;
    let stats = stats_of(s, &[StatisticKind::Qmax])?;
    let alpha = alpha_of(s);
    let partition = select_block_size(&design, &rule)?;
    let trace = estimate_ols(&data.path, &design, true)?;
    let series = compute_losses(&data.path, &design, &trace, &loss)?;
    let reports = stats.iter().map(|st| evaluate(&series, &design, &partition, st, alpha)).collect::<Result<Vec<_>, _>>()?;
    Ok(TestSummary {
        schema_version: SCHEMA_VERSION,
        input: Some(input.clone()),
        total_obs: t,
        in_sample: design.in_sample,
        out_sample: design.out_sample,
        horizon: design.horizon,
        scheme: design.scheme.name().into(),
        loss: loss.name().into(),
        predictors: data.predictors,
        alpha,
        any_reject: reports.iter().any(|r| r.reject),
        reports,
    })
}

fn render_reports(sum: &TestSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "T={} T_m={} T_n={} horizon={} scheme={} loss={} alpha={}",
        sum.total_obs, sum.in_sample, sum.out_sample, sum.horizon, sum.scheme, sum.loss, sum.alpha
    );
    let _ = writeln!(
        out,
        "{:<8} {:>6} {:>12} {:>10} {:>9} {:>9}  decision",
        "stat", "norm", "raw", "statistic", "critical", "p-value"
    );
    for r in &sum.reports {
        let norm = r.variance_estimator_used.map_or("-", |v| v.name());
        let _ = writeln!(
            out,
            "{:<8} {:>6} {:>12.6} {:>10.4} {:>9.4} {:>9.4}  {}",
            r.statistic_kind.name(),
            norm,
            r.raw,
            r.transformed,
            r.critical_value,
            r.p_value,
            if r.reject { "reject" } else { "no rejection" }
        );
    }
    if let Some(r) = sum.reports.iter().find(|r| r.m_t > 0) {
        let _ = writeln!(out, "blocks: n_T={} m_T={}", r.n_t, r.m_t);
    }
    out
}

pub fn cmd_test(s: &Settings) -> CliResult<Outcome> {
    let sum = test_reports(s)?;
    let json = to_json(&sum)?;
    let mut outcome = Outcome { rejected: sum.any_reject, ..Default::default() };
    if let Some(dir) = &s.out {
        ensure_dir(dir)?;
        write_file(&dir.join("report.json"), &json, &mut outcome.files)?;
    }
    outcome.stdout = if s.json { String::from_utf8(json).expect("serde_json writes UTF-8") } else { render_reports(&sum) };
    Ok(outcome)
}

/// Experiment described by the settings: an embedded `experiment`
/// object if present, otherwise the individual keys.
pub fn experiment_of(s: &Settings) -> CliResult<ExperimentSpec> {
    let mut spec = match &s.experiment {
        Some(v) => serde_json::from_value::<ExperimentSpec>(v.clone())?,
        None => {
            let family: DgpFamily = s
                .family
                .as_deref()
                .ok_or_else(|| CliError::Usage("simulate mode needs --family, a config with an experiment, or --preset".into()))?
                .parse()?;
            let t = s.total.unwrap_or(200);
            let design =
                SampleDesign::new(t, s.tm.unwrap_or(t / 2), s.tau.unwrap_or(1), parse(s.scheme.as_deref(), Scheme::Fixed)?)?;
            let mut dgp = DgpSpec::new(family);
            dgp.delta = s.delta.unwrap_or(0.0);
            if let Some(l) = s.lambda0 {
                dgp.lambda0 = l;
            }
            dgp.duration = s.duration;
            let default_stats =
                [StatisticKind::GRt, StatisticKind::Bmax, StatisticKind::Qmax, StatisticKind::MBmax, StatisticKind::MQmax];
            let mut spec = ExperimentSpec::new(dgp, design, stats_of(s, &default_stats)?);
            spec.block_rule = block_rule_of(s)?;
            spec.loss = loss_of(s)?;
            spec.replications = DEFAULT_REPLICATIONS;
            spec.base_seed = DEFAULT_SEED;
            spec
        }
    };
    if let Some(r) = s.reps {
        spec.replications = r;
    }
    if let Some(seed) = s.seed {
        spec.base_seed = seed;
    }
    if let Some(a) = s.alpha {
        spec.alphas = vec![a];
    }
    if !s.grid.is_empty() {
        spec.grid = Some(s.grid.clone());
    }
    spec.validate()?;
    Ok(spec)
}

fn render_rows(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<6} {:>5} {:>5} {:>6} {:>7} {:<14} {:>6} {:>8} {:>7} {:>7}",
        "family", "T", "T_m", "delta", "lambda0", "statistic", "alpha", "rate", "mc_se", "errors"
    );
    for r in rows {
        let label = if r.variance_estimator == "none" || r.variance_estimator == "nw" {
            r.statistic.clone()
        } else {
            format!("{}[{}]", r.statistic, r.variance_estimator)
        };
        let _ = writeln!(
            out,
            "{:<6} {:>5} {:>5} {:>6} {:>7} {:<14} {:>6} {:>8.4} {:>7.4} {:>7}",
            r.family, r.total_obs, r.in_sample, r.delta, r.lambda0, label, r.alpha, r.rejection_rate, r.mc_se, r.n_errors
        );
    }
    out
}

pub fn cmd_simulate(s: &Settings) -> CliResult<Outcome> {
    if let (Some(name), None, None) = (&s.preset, &s.experiment, &s.family) {
        let out = s.out.clone().unwrap_or_else(|| PathBuf::from("."));
        return cmd_reproduce(name, s.reps.unwrap_or(DEFAULT_REPLICATIONS), s.seed.unwrap_or(DEFAULT_SEED), &out);
    }
    let spec = experiment_of(s)?;
    let result = run_experiment(&spec)?;
    let dir = s.out.clone().unwrap_or_else(|| PathBuf::from("."));
    ensure_dir(&dir)?;
    let mut outcome = Outcome::default();
    let mut csv = Vec::new();
    write_csv(&result.rows, &mut csv).map_err(|e| CliError::io(&dir, e))?;
    write_file(&dir.join("simulation.csv"), &csv, &mut outcome.files)?;
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": spec,
        "rows": result.rows,
    });
    let json = to_json(&summary)?;
    write_file(&dir.join("simulation_summary.json"), &json, &mut outcome.files)?;
    outcome.stdout = if s.json {
        String::from_utf8(json).expect("serde_json writes UTF-8")
    } else {
        let mut text = render_rows(&result.rows);
        let _ = writeln!(text, "{} replications in {:.2}s", spec.replications, result.runtime_seconds);
        text
    };
    Ok(outcome)
}

/// Runs a named preset and writes `<name>.csv` (one row per statistic,
/// level and break size), `<name>_table.csv` (one row per design),
/// `<name>_summary.json` and `<name>_manifest.json` into `out`.
pub fn cmd_reproduce(name: &str, replications: usize, seed: u64, out: &Path) -> CliResult<Outcome> {
    let preset = presets::preset(name, replications, seed)?;
    let rows = presets::run_preset(&preset)?;
    ensure_dir(out)?;
    let mut outcome = Outcome::default();

    let mut long = Vec::new();
    write_csv(&rows, &mut long).map_err(|e| CliError::io(out, e))?;
    write_file(&out.join(format!("{name}.csv")), &long, &mut outcome.files)?;
    let wide = presets::wide_table(&rows);
    write_file(&out.join(format!("{name}_table.csv")), wide.as_bytes(), &mut outcome.files)?;
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "preset": name,
        "description": preset.description,
        "kind": preset.kind,
        "rows": rows,
    });
    write_file(&out.join(format!("{name}_summary.json")), &to_json(&summary)?, &mut outcome.files)?;
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "preset": name,
        "seed": seed,
        "replications": replications,
        "version": env!("CARGO_PKG_VERSION"),
        "experiments": preset.experiments.len(),
        "files": outcome.files.iter().filter_map(|p| p.file_name()).map(|f| f.to_string_lossy()).collect::<Vec<_>>(),
    });
    write_file(&out.join(format!("{name}_manifest.json")), &to_json(&manifest)?, &mut outcome.files)?;

    let mut text = String::new();
    let _ =
        writeln!(text, "{name}: {} ({} designs, R={replications}, seed={seed})", preset.description, preset.experiments.len());
    if preset.kind == PresetKind::Table {
        text.push_str(&wide);
    }
    for f in &outcome.files {
        let _ = writeln!(text, "wrote {}", f.display());
    }
    outcome.stdout = text;
    Ok(outcome)
}

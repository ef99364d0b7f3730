//! Monte Carlo driver: replicate a design, run the requested tests on
//! every draw, and tally rejection rates.
//!
//! Replication `r` draws from stream `r` of the base seed (see
//! [`crate::dgp::replication_rng`]). The same streams are reused at
//! every point of a break-size grid. Replications run on the ambient
//! rayon pool and are reduced in index order, so results do not depend
//! on the number of threads.

pub mod presets;

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{replication_rng, simulate_with_rng, DgpSpec};
use crate::error::{Error, Result};
use crate::forecasting::{compute_losses, estimate_ols, gr_test, LossFunction};
use crate::sample::{select_block_size, BlockPartition, BlockRule, LossSeries, SampleDesign};
use crate::teststats::{run_test, StatisticKind, TestReport, VarianceChoice};

/// Largest tolerated share of failed replications per statistic.
pub const MAX_FAILURE_SHARE: f64 = 0.01;

/// A statistic together with the source of `ν_L` it is studentized by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatSpec {
    pub kind: StatisticKind,
    #[serde(default)]
    pub variance: Option<VarianceChoice>,
}

impl StatSpec {
    pub fn new(kind: StatisticKind) -> Self {
        StatSpec { kind, variance: None }
    }

    pub fn studentized(kind: StatisticKind, variance: VarianceChoice) -> Self {
        StatSpec { kind, variance: Some(variance) }
    }

    /// Variance choice in effect; `ν̂_L` when unspecified.
    pub fn variance_choice(&self) -> VarianceChoice {
        self.variance.unwrap_or(VarianceChoice::NuL)
    }

    /// Name of the normalizer for output tables.
    pub fn variance_label(&self) -> &'static str {
        match self.kind {
            StatisticKind::GRt => "nw",
            k if k.uses_variance() => match self.variance_choice() {
                VarianceChoice::Q1 if k.is_overlapping() => "mq1",
                v => v.name(),
            },
            _ => "none",
        }
    }

    pub fn label(&self) -> String {
        if self.kind.uses_variance() {
            format!("{}[{}]", self.kind.name(), self.variance_label())
        } else {
            self.kind.name().to_string()
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dgp: DgpSpec,
    pub design: SampleDesign,
    #[serde(default)]
    pub block_rule: BlockRule,
    #[serde(default)]
    pub loss: LossFunction<f64>,
    pub statistics: Vec<StatSpec>,
    pub alphas: Vec<f64>,
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Break magnitudes for a power curve; `None` runs `dgp.delta` only.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default = "default_true")]
    pub intercept: bool,
}

impl ExperimentSpec {
    pub fn new(dgp: DgpSpec, design: SampleDesign, statistics: Vec<StatSpec>) -> Self {
        ExperimentSpec {
            dgp,
            design,
            block_rule: BlockRule::default(),
            loss: LossFunction::default(),
            statistics,
            alphas: vec![0.05],
            replications: 5000,
            base_seed: 0,
            grid: None,
            intercept: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dgp.validate()?;
        self.block_rule.validate()?;
        self.loss.validate()?;
        if self.replications < 100 {
            return Err(Error::InvalidExperiment(format!("{} replications, need at least 100", self.replications)));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::InvalidExperiment("significance levels must be a nonempty list in (0, 1)".into()));
        }
        if self.statistics.is_empty() {
            return Err(Error::InvalidExperiment("no statistics requested".into()));
        }
        if let Some(g) = &self.grid {
            if g.is_empty() || g.iter().any(|d| !d.is_finite()) {
                return Err(Error::InvalidExperiment("break-size grid must be nonempty and finite".into()));
            }
        }
        Ok(())
    }

    fn deltas(&self) -> Vec<f64> {
        self.grid.clone().unwrap_or_else(|| vec![self.dgp.delta])
    }

    /// Break duration column of the output: the short-break length, or
    /// the switching period of recurrent designs.
    fn p_column(&self) -> Option<usize> {
        use crate::dgp::DgpFamily::{P3, P5};
        match self.dgp.family {
            P3 | P5 => Some(self.dgp.switch_period),
            _ => self.dgp.duration,
        }
    }
}

/// Rejection rate of one statistic at one level and break size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub family: String,
    #[serde(rename = "T")]
    pub total_obs: usize,
    #[serde(rename = "T_m")]
    pub in_sample: usize,
    #[serde(rename = "T_n")]
    pub out_sample: usize,
    pub scheme: String,
    pub loss: String,
    pub statistic: String,
    pub variance_estimator: String,
    pub alpha: f64,
    pub delta: f64,
    pub lambda0: f64,
    pub p: Option<usize>,
    pub rejection_rate: f64,
    pub mc_se: f64,
    pub n_reps: usize,
    pub n_errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub runtime_seconds: f64,
}

impl ExperimentResult {
    /// Rejection rate for `kind` at level `alpha` and break size `delta`.
    pub fn rate(&self, kind: StatisticKind, alpha: f64, delta: f64) -> Option<f64> {
        self.row(kind, alpha, delta).map(|r| r.rejection_rate)
    }

    pub fn row(&self, kind: StatisticKind, alpha: f64, delta: f64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.statistic == kind.name() && r.alpha == alpha && r.delta == delta)
    }
}

/// Runs one statistic on a loss series; the t-statistic also needs the
/// design.
pub fn evaluate(
    series: &LossSeries<f64>,
    design: &SampleDesign,
    partition: &BlockPartition,
    stat: &StatSpec,
    alpha: f64,
) -> Result<TestReport<f64>> {
    match stat.kind {
        StatisticKind::GRt => gr_test(series, design, alpha),
        k => run_test(series, partition, k, stat.variance_choice(), alpha),
    }
}

type Outcome = std::result::Result<Vec<bool>, Error>;

fn replicate(spec: &ExperimentSpec, dgp: &DgpSpec, partition: &BlockPartition, r: usize) -> Vec<Outcome> {
    let n = spec.statistics.len();
    let mut rng = replication_rng(spec.base_seed, r as u64);
    let series = simulate_with_rng(dgp, spec.design.total_obs, &mut rng).and_then(|path| {
        let trace = estimate_ols(&path, &spec.design, spec.intercept)?;
        compute_losses(&path, &spec.design, &trace, &spec.loss)
    });
    let series = match series {
        Ok(s) => s,
        Err(e) => return vec![Err(e); n],
    };
    spec.statistics
        .iter()
        .map(|stat| {
            let report = evaluate(&series, &spec.design, partition, stat, spec.alphas[0])?;
            spec.alphas.iter().map(|&a| report.rejects_at(a)).collect::<Result<Vec<bool>>>()
        })
        .collect()
}

fn run_point(spec: &ExperimentSpec, partition: &BlockPartition, delta: f64) -> Result<Vec<ResultRow>> {
    let mut dgp = spec.dgp;
    dgp.delta = delta;
    let outcomes: Vec<Vec<Outcome>> =
        (0..spec.replications).into_par_iter().map(|r| replicate(spec, &dgp, partition, r)).collect();

    let mut rows = Vec::new();
    for (s, stat) in spec.statistics.iter().enumerate() {
        let mut rejections = vec![0usize; spec.alphas.len()];
        let mut errors = 0usize;
        let mut first_error = None;
        for rep in &outcomes {
            match &rep[s] {
                Ok(dec) => {
                    for (count, &d) in rejections.iter_mut().zip(dec) {
                        *count += d as usize;
                    }
                }
                Err(e) => {
                    errors += 1;
                    first_error.get_or_insert_with(|| e.clone());
                }
            }
        }
        if errors as f64 > MAX_FAILURE_SHARE * spec.replications as f64 {
            return Err(Error::TooManyFailures {
                statistic: format!("{} ({})", stat.label(), first_error.map_or_else(String::new, |e| e.to_string())),
                failed: errors,
                total: spec.replications,
            });
        }
        let n_reps = spec.replications - errors;
        for (&alpha, &count) in spec.alphas.iter().zip(&rejections) {
            let (rate, mc_se) = rejection_rate(count, n_reps);
            rows.push(ResultRow {
                family: spec.dgp.family.name().to_string(),
                total_obs: spec.design.total_obs,
                in_sample: spec.design.in_sample,
                out_sample: spec.design.out_sample,
                scheme: spec.design.scheme.name().to_string(),
                loss: spec.loss.name().to_string(),
                statistic: stat.kind.name().to_string(),
                variance_estimator: stat.variance_label().to_string(),
                alpha,
                delta,
                lambda0: spec.dgp.lambda0,
                p: spec.p_column(),
                rejection_rate: rate,
                mc_se,
                n_reps,
                n_errors: errors,
            });
        }
    }
    Ok(rows)
}

/// Share of `rejections` among `n` replications and its binomial
/// standard error `√(p(1-p)/n)`; both are NaN when `n = 0`.
pub fn rejection_rate(rejections: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = rejections as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Runs every replication of `spec` at each break size and returns one
/// row per (break size, statistic, level).
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let start = Instant::now();
    let partition = select_block_size(&spec.design, &spec.block_rule)?;
    let mut rows = Vec::new();
    for delta in spec.deltas() {
        rows.extend(run_point(spec, &partition, delta)?);
    }
    Ok(ExperimentResult { rows, runtime_seconds: start.elapsed().as_secs_f64() })
}

/// [`run_experiment`] over a required break-size grid.
pub fn power_curve(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    if spec.grid.as_ref().is_none_or(|g| g.is_empty()) {
        return Err(Error::InvalidExperiment("a power curve needs a nonempty break-size grid".into()));
    }
    run_experiment(spec)
}

/// Writes result rows as CSV with a header line.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}

//! Named experiment grids: the size and power tables and the power-curve
//! figures of the reference study.
//!
//! Every preset tiles the evaluation sample count-first (see
//! [`BlockSizing::CountFirst`]), which gives the smallest admissible
//! number of blocks used for the published tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{run_experiment, ExperimentSpec, ResultRow, StatSpec};
use crate::dgp::{DgpFamily, DgpSpec};
use crate::error::{Error, Result};
use crate::forecasting::LossFunction;
use crate::sample::{BlockRule, BlockSizing, SampleDesign, Scheme};
use crate::teststats::{StatisticKind, VarianceChoice};

pub const DEFAULT_REPLICATIONS: usize = 5000;
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetKind {
    /// One row per design, break size fixed per panel.
    Table,
    /// Rejection rates over a grid of break sizes.
    Curve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub kind: PresetKind,
    pub experiments: Vec<ExperimentSpec>,
}

/// Names accepted by [`preset`].
pub const PRESET_NAMES: &[&str] = &[
    "table1",
    "table2",
    "tableS3",
    "tableS4",
    "tableS5",
    "tableS6",
    "tableS1-recursive",
    "tableS1-rolling",
    "tableS1-linex",
    "tableP1-recursive",
    "tableP1-recursive-st",
    "tableP1-rolling",
    "tableP1-rolling-st",
    "fig-P1a",
    "fig-P1a-st",
    "fig-P1b",
    "fig-P1b-st",
    "fig-P2",
    "fig-P2-st",
    "fig-P3",
    "fig-P4",
    "fig-P4-st",
    "fig-P5",
    "fig-P6",
    "fig-P7",
    "fig-P8",
];

fn block_rule() -> BlockRule {
    BlockRule::default().with_sizing(BlockSizing::CountFirst)
}

fn core_stats(variance: VarianceChoice) -> Vec<StatSpec> {
    vec![
        StatSpec::new(StatisticKind::GRt),
        StatSpec::new(StatisticKind::Bmax),
        StatSpec::studentized(StatisticKind::Qmax, variance),
        StatSpec::new(StatisticKind::MBmax),
        StatSpec::studentized(StatisticKind::MQmax, variance),
    ]
}

fn power_grid() -> Vec<f64> {
    (0..=12).map(|i| i as f64 * 0.25).collect()
}

struct Setup {
    family: DgpFamily,
    scheme: Scheme,
    loss: LossFunction<f64>,
    stats: Vec<StatSpec>,
    alphas: Vec<f64>,
    replications: usize,
    seed: u64,
}

impl Setup {
    fn new(family: DgpFamily, replications: usize, seed: u64) -> Self {
        Setup {
            family,
            scheme: Scheme::Fixed,
            loss: LossFunction::default(),
            stats: core_stats(VarianceChoice::Q1),
            alphas: vec![0.05],
            replications,
            seed,
        }
    }

    fn experiment(&self, t: usize, t_m: usize, dgp: DgpSpec, grid: Option<Vec<f64>>) -> Result<ExperimentSpec> {
        Ok(ExperimentSpec {
            dgp,
            design: SampleDesign::new(t, t_m, 1, self.scheme)?,
            block_rule: block_rule(),
            loss: self.loss,
            statistics: self.stats.clone(),
            alphas: self.alphas.clone(),
            replications: self.replications,
            base_seed: self.seed,
            grid,
            intercept: true,
        })
    }

    /// Twelve size designs: `T ∈ {100, …, 400}` with a quarter, half and
    /// three quarters of the sample used in-sample.
    fn size_table(mut self) -> Result<Vec<ExperimentSpec>> {
        self.alphas = vec![0.05, 0.10];
        let mut out = Vec::new();
        for t in [100, 200, 300, 400] {
            for t_m in [t / 4, t / 2, 3 * t / 4] {
                out.push(self.experiment(t, t_m, DgpSpec::new(self.family), None)?);
            }
        }
        Ok(out)
    }

    /// Break sizes 0.5 to 2 at `λ₀ = 0.6` with an even split; the
    /// short-lived variant lasts a tenth of the sample.
    fn power_table(self, short: bool) -> Result<Vec<ExperimentSpec>> {
        let mut out = Vec::new();
        for t in [100, 200, 300, 400] {
            let mut dgp = DgpSpec::new(self.family).with_break(0.5, 0.6);
            if short {
                dgp = dgp.with_duration(t / 10);
            }
            out.push(self.experiment(t, t / 2, dgp, Some(vec![0.5, 1.0, 1.5, 2.0]))?);
        }
        Ok(out)
    }

    /// Power curves over `(T, p)` pairs and break dates; `in_frac = None`
    /// puts the forecast origin at the break date.
    fn curves(&self, panels: &[(usize, Option<usize>)], lambdas: &[f64], in_frac: Option<f64>) -> Result<Vec<ExperimentSpec>> {
        let mut out = Vec::new();
        for &(t, p) in panels {
            for &l in lambdas {
                let mut dgp = DgpSpec::new(self.family).with_break(0.0, l);
                match (p, self.family) {
                    (Some(p), DgpFamily::P3 | DgpFamily::P5) => dgp = dgp.with_switch_period(p),
                    (Some(p), _) => dgp = dgp.with_duration(p),
                    (None, _) => {}
                }
                let t_m = (t as f64 * in_frac.unwrap_or(l)).round() as usize;
                out.push(self.experiment(t, t_m, dgp, Some(power_grid()))?);
            }
        }
        Ok(out)
    }
}

fn long(ts: &[usize]) -> Vec<(usize, Option<usize>)> {
    ts.iter().map(|&t| (t, None)).collect()
}

fn short(pairs: &[(usize, usize)]) -> Vec<(usize, Option<usize>)> {
    pairs.iter().map(|&(t, p)| (t, Some(p))).collect()
}

/// Builds the named preset with `replications` draws per design.
pub fn preset(name: &str, replications: usize, seed: u64) -> Result<Preset> {
    use DgpFamily::*;
    let setup = |family| Setup::new(family, replications, seed);
    let nu_l = |family| Setup { stats: core_stats(VarianceChoice::NuL), ..setup(family) };
    let scheme = |family, scheme| Setup { scheme, ..setup(family) };

    let (description, kind, experiments) = match name {
        "table1" => ("size, model S1, fixed scheme", PresetKind::Table, setup(S1).size_table()?),
        "table2" => ("size, model S2 (ARCH errors), variance by nu_L", PresetKind::Table, nu_l(S2).size_table()?),
        "tableS3" => ("size, model S3", PresetKind::Table, setup(S3).size_table()?),
        "tableS4" => ("size, model S4", PresetKind::Table, setup(S4).size_table()?),
        "tableS5" => ("size, model S5", PresetKind::Table, setup(S5).size_table()?),
        "tableS6" => ("size, model S6, variance by nu_L", PresetKind::Table, nu_l(S6).size_table()?),
        "tableS1-recursive" => {
            ("size, model S1, recursive scheme", PresetKind::Table, scheme(S1, Scheme::Recursive).size_table()?)
        }
        "tableS1-rolling" => ("size, model S1, rolling scheme", PresetKind::Table, scheme(S1, Scheme::Rolling).size_table()?),
        "tableS1-linex" => {
            let s = Setup { loss: LossFunction::linex(1.0, 1.0)?, ..scheme(S1, Scheme::Recursive) };
            ("size, model S1, linex loss, recursive scheme", PresetKind::Table, s.size_table()?)
        }
        "tableP1-recursive" => {
            ("power, model P1, recursive scheme", PresetKind::Table, scheme(P1a, Scheme::Recursive).power_table(false)?)
        }
        "tableP1-recursive-st" => (
            "power, model P1 short-lived break, recursive scheme",
            PresetKind::Table,
            scheme(P1a, Scheme::Recursive).power_table(true)?,
        ),
        "tableP1-rolling" => {
            ("power, model P1, rolling scheme", PresetKind::Table, scheme(P1a, Scheme::Rolling).power_table(false)?)
        }
        "tableP1-rolling-st" => (
            "power, model P1 short-lived break, rolling scheme",
            PresetKind::Table,
            scheme(P1a, Scheme::Rolling).power_table(true)?,
        ),
        "fig-P1a" => (
            "power curves, model P1a",
            PresetKind::Curve,
            setup(P1a).curves(&long(&[100, 150, 200, 300]), &[0.7, 0.8], Some(0.4))?,
        ),
        "fig-P1a-st" => (
            "power curves, model P1a, short-lived break",
            PresetKind::Curve,
            setup(P1a).curves(&short(&[(100, 20), (150, 25), (200, 20), (300, 30)]), &[0.7, 0.8], Some(0.4))?,
        ),
        "fig-P1b" => (
            "power curves, model P1b",
            PresetKind::Curve,
            setup(P1b).curves(&long(&[100, 150, 200, 300]), &[0.7, 0.8], Some(0.4))?,
        ),
        "fig-P1b-st" => (
            "power curves, model P1b, short-lived break",
            PresetKind::Curve,
            setup(P1b).curves(&short(&[(100, 20), (150, 25)]), &[0.7, 0.8], Some(0.4))?,
        ),
        "fig-P2" => ("power curves, model P2", PresetKind::Curve, setup(P2).curves(&long(&[100, 200]), &[0.7, 0.8], Some(0.4))?),
        "fig-P2-st" => (
            "power curves, model P2, short-lived break",
            PresetKind::Curve,
            setup(P2).curves(&short(&[(100, 20), (200, 30)]), &[0.7, 0.8], Some(0.4))?,
        ),
        "fig-P3" => {
            let s = setup(P3);
            let mut e = s.curves(&short(&[(200, 30), (300, 40)]), &[0.5, 0.6], None)?;
            e.extend(s.curves(&short(&[(400, 30), (500, 40)]), &[0.7, 0.8], None)?);
            ("power curves, model P3 (recurrent mean breaks)", PresetKind::Curve, e)
        }
        "fig-P4" => {
            let s = setup(P4);
            let mut e = s.curves(&long(&[200, 300]), &[0.6, 0.8], Some(0.3))?;
            e.extend(s.curves(&long(&[400, 500]), &[0.8, 0.9], Some(0.3))?);
            ("power curves, model P4 (variance break)", PresetKind::Curve, e)
        }
        "fig-P4-st" => (
            "power curves, model P4, short-lived break",
            PresetKind::Curve,
            setup(P4).curves(&short(&[(200, 30), (300, 30), (400, 30), (500, 30)]), &[0.6, 0.8], Some(0.3))?,
        ),
        "fig-P5" => (
            "power curves, model P5 (recurrent variance breaks)",
            PresetKind::Curve,
            setup(P5).curves(&short(&[(200, 30), (300, 40)]), &[0.5, 0.6, 0.7, 0.8], None)?,
        ),
        "fig-P6" => (
            "power curves, model P6 (lagged dependent variable)",
            PresetKind::Curve,
            setup(P6).curves(&long(&[200, 300]), &[0.7, 0.8], Some(0.4))?,
        ),
        "fig-P7" => {
            let mut s = setup(P7);
            s.stats.push(StatSpec::studentized(StatisticKind::Qmax, VarianceChoice::NuL));
            s.stats.push(StatSpec::studentized(StatisticKind::MQmax, VarianceChoice::NuL));
            ("power curves, model P7 (ARCH errors)", PresetKind::Curve, s.curves(&long(&[200, 300]), &[0.7, 0.8], Some(0.5))?)
        }
        "fig-P8" => (
            "power curves, model P8 (MA errors)",
            PresetKind::Curve,
            setup(P8).curves(&long(&[200, 300]), &[0.7, 0.8], Some(0.5))?,
        ),
        _ => {
            return Err(Error::UnknownPreset { name: name.to_string(), valid: PRESET_NAMES.join(", ") });
        }
    };
    Ok(Preset { name: name.to_string(), description: description.to_string(), kind, experiments })
}

/// Runs every experiment of the preset in order.
pub fn run_preset(preset: &Preset) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for spec in &preset.experiments {
        rows.extend(run_experiment(spec)?.rows);
    }
    Ok(rows)
}

fn column_label(r: &ResultRow) -> String {
    let stat = if r.variance_estimator == "none" || r.variance_estimator == "nw" {
        r.statistic.clone()
    } else {
        format!("{}[{}]", r.statistic, r.variance_estimator)
    };
    format!("{stat}@{}", r.alpha)
}

fn fmt_p(p: Option<usize>) -> String {
    p.map_or_else(String::new, |p| p.to_string())
}

/// Wide layout: one line per design and break size, one column per
/// statistic and level. Rates are printed to three decimals.
pub fn wide_table(rows: &[ResultRow]) -> String {
    let mut columns: Vec<String> = Vec::new();
    let mut keys: Vec<(usize, usize, usize, String, String, String)> = Vec::new();
    let key = |r: &ResultRow| (r.total_obs, r.in_sample, r.out_sample, r.delta.to_string(), r.lambda0.to_string(), fmt_p(r.p));
    for r in rows {
        let c = column_label(r);
        if !columns.contains(&c) {
            columns.push(c);
        }
        let k = key(r);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut out = String::from("T,T_m,T_n,delta,lambda0,p");
    for c in &columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for k in &keys {
        let _ = write!(out, "{},{},{},{},{},{}", k.0, k.1, k.2, k.3, k.4, k.5);
        for c in &columns {
            let cell = rows.iter().find(|r| key(r) == *k && column_label(r) == *c);
            match cell {
                Some(r) => {
                    let _ = write!(out, ",{:.3}", r.rejection_rate);
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

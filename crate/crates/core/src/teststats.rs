//! Max-type block statistics, their extreme-value normalizations and
//! test decisions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{window_centers, BlockPartition, LossSeries};
use crate::scalar::{max_abs, mean, pop_variance, Scalar};
use crate::variance::{self, VarianceEstimate, VarianceKind};

/// Relative threshold below which a denominator counts as zero.
pub const ZERO_TOL: f64 = 1e-12;

pub(crate) fn negligible<T: Scalar>(x: T, scale: T) -> bool {
    x.abs() <= T::lit(ZERO_TOL) * scale
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticKind {
    Bmax,
    MBmax,
    Qmax,
    MQmax,
    Gmax,
    MGmax,
    QmaxG,
    MQmaxG,
    /// Forecast-breakdown t-statistic on the mean surprise loss.
    GRt,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 9] = [
        StatisticKind::Bmax,
        StatisticKind::MBmax,
        StatisticKind::Qmax,
        StatisticKind::MQmax,
        StatisticKind::Gmax,
        StatisticKind::MGmax,
        StatisticKind::QmaxG,
        StatisticKind::MQmaxG,
        StatisticKind::GRt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StatisticKind::Bmax => "bmax",
            StatisticKind::MBmax => "mbmax",
            StatisticKind::Qmax => "qmax",
            StatisticKind::MQmax => "mqmax",
            StatisticKind::Gmax => "gmax",
            StatisticKind::MGmax => "mgmax",
            StatisticKind::QmaxG => "qmaxg",
            StatisticKind::MQmaxG => "mqmaxg",
            StatisticKind::GRt => "grt",
        }
    }

    pub fn is_overlapping(self) -> bool {
        matches!(self, StatisticKind::MBmax | StatisticKind::MQmax | StatisticKind::MGmax | StatisticKind::MQmaxG)
    }

    /// Whether the statistic is normalized by an estimate of `ν_L`.
    pub fn uses_variance(self) -> bool {
        matches!(self, StatisticKind::Qmax | StatisticKind::MQmax | StatisticKind::QmaxG | StatisticKind::MQmaxG)
    }
}

impl std::fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let key = lower.trim_end_matches("_max").replace(['_', '-'], "");
        let key = match key.as_str() {
            "b" => "bmax",
            "mb" => "mbmax",
            "q" => "qmax",
            "mq" => "mqmax",
            "g" => "gmax",
            "mg" => "mgmax",
            "t" | "tstat" | "gr" => "grt",
            k => k,
        };
        StatisticKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::InvalidExperiment(format!("unknown statistic `{s}`")))
    }
}

/// Source of `ν_L` for the Q-type statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VarianceChoice {
    /// Block-by-block (or window-by-window) surprise-loss dispersion.
    #[serde(rename = "q1")]
    Q1,
    #[serde(rename = "nu2")]
    Nu2,
    #[serde(rename = "nu3")]
    Nu3,
    #[serde(rename = "nu4")]
    Nu4,
    #[serde(rename = "nuL")]
    NuL,
    /// A known value of `ν_L`.
    #[serde(rename = "known")]
    Known(f64),
}

impl VarianceChoice {
    pub fn name(&self) -> &'static str {
        match self {
            VarianceChoice::Q1 => "q1",
            VarianceChoice::Nu2 => "nu2",
            VarianceChoice::Nu3 => "nu3",
            VarianceChoice::Nu4 => "nu4",
            VarianceChoice::NuL => "nuL",
            VarianceChoice::Known(_) => "known",
        }
    }
}

impl std::str::FromStr for VarianceChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "q1" | "mq1" => Ok(VarianceChoice::Q1),
            "nu2" => Ok(VarianceChoice::Nu2),
            "nu3" => Ok(VarianceChoice::Nu3),
            "nu4" => Ok(VarianceChoice::Nu4),
            "nul" => Ok(VarianceChoice::NuL),
            other => other
                .strip_prefix("known:")
                .and_then(|v| v.parse::<f64>().ok())
                .map(VarianceChoice::Known)
                .ok_or_else(|| Error::InvalidExperiment(format!("unknown variance estimator `{s}`"))),
        }
    }
}

/// Per-block means of surprise losses (`B`) and raw losses (`B̄`), and
/// the within-block variance of raw losses (`D`, divisor `n_T`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSummaries<T> {
    pub surprise_means: Vec<T>,
    pub loss_means: Vec<T>,
    pub loss_variances: Vec<T>,
    pub n_t: usize,
    /// Largest absolute raw loss over the blocks, for zero guards.
    pub loss_scale: T,
}

impl<T: Scalar> BlockSummaries<T> {
    pub fn m_t(&self) -> usize {
        self.surprise_means.len()
    }

    /// `B_{b+1} - B_b` for `b = 0..m_T-1`.
    pub fn differences(&self) -> Vec<T> {
        self.surprise_means.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

pub fn block_summaries<T: Scalar>(series: &LossSeries<T>, partition: &BlockPartition) -> Result<BlockSummaries<T>> {
    series.check_covers(partition)?;
    let mut s = BlockSummaries {
        surprise_means: Vec::with_capacity(partition.m_t),
        loss_means: Vec::with_capacity(partition.m_t),
        loss_variances: Vec::with_capacity(partition.m_t),
        n_t: partition.n_t,
        loss_scale: max_abs(&series.values[..partition.covered()]),
    };
    for r in partition.block_ranges() {
        s.surprise_means.push(mean(&series.surprise[r.clone()]));
        s.loss_means.push(mean(&series.values[r.clone()]));
        s.loss_variances.push(pop_variance(&series.values[r]));
    }
    Ok(s)
}

fn check_blocks(m_t: usize) -> Result<()> {
    if m_t < 2 {
        return Err(Error::InvalidBlockCount(m_t));
    }
    Ok(())
}

/// Largest adjacent-block change in mean surprise loss relative to the
/// later block's mean loss.
pub fn b_max<T: Scalar>(s: &BlockSummaries<T>) -> Result<T> {
    check_blocks(s.m_t())?;
    let mut best = T::zero();
    for b in 0..s.m_t() - 1 {
        let den = s.loss_means[b + 1];
        if negligible(den, s.loss_scale) {
            return Err(Error::ZeroDenominator { index: b + 1 });
        }
        best = best.max(((s.surprise_means[b + 1] - s.surprise_means[b]) / den).abs());
    }
    Ok(best)
}

/// `max_b |ΔB_b| / ν`.
pub fn q_max<T: Scalar>(s: &BlockSummaries<T>, nu: T) -> Result<T> {
    check_blocks(s.m_t())?;
    if !(nu > T::zero()) {
        return Err(Error::NonpositiveVariance);
    }
    Ok(max_abs(&s.differences()) / nu)
}

/// `max_b |ΔB_b| / ν_{b+1}` with one normalizer per block.
pub fn q_max_blockwise<T: Scalar>(s: &BlockSummaries<T>, per_block: &[T]) -> Result<T> {
    check_blocks(s.m_t())?;
    if per_block.len() != s.m_t() {
        return Err(Error::InvalidSeries("one normalizer per block required".into()));
    }
    let mut best = T::zero();
    for (b, d) in s.differences().into_iter().enumerate() {
        let nu = per_block[b + 1];
        if !(nu > T::zero()) {
            return Err(Error::NonpositiveVariance);
        }
        best = best.max(d.abs() / nu);
    }
    Ok(best)
}

/// Largest adjacent-block change in mean surprise loss studentized by
/// the later block's within-block loss standard deviation.
pub fn g_max<T: Scalar>(s: &BlockSummaries<T>) -> Result<T> {
    check_blocks(s.m_t())?;
    let mut best = T::zero();
    for (b, d) in s.differences().into_iter().enumerate() {
        let sd = s.loss_variances[b + 1].max(T::zero()).sqrt();
        if negligible(sd, s.loss_scale) {
            return Err(Error::ZeroWithinBlockVariance { index: b + 1 });
        }
        best = best.max(d.abs() / sd);
    }
    Ok(best)
}

/// Means and variances (divisor `n`) of every length-`n` window of `xs`,
/// indexed by window start.
///
/// Each window is summed afresh with the two-pass formula. Running sums
/// would be linear in `xs.len()` but lose relative accuracy whenever a
/// window's variance is small next to its level.
pub(crate) fn window_moments<T: Scalar>(xs: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    xs.windows(n).map(|w| (mean(w), pop_variance(w))).unzip()
}

/// Window-pair quantities for the overlapping statistics at centres
/// `i = n_T..=T_n-n_T`.
pub(crate) struct WindowPairs<T> {
    /// Left minus right window mean of surprise losses.
    pub diffs: Vec<T>,
    pub right_loss_means: Vec<T>,
    pub right_loss_vars: Vec<T>,
    pub right_surprise_vars: Vec<T>,
    pub loss_scale: T,
    pub surprise_scale: T,
}

pub(crate) fn window_pairs<T: Scalar>(series: &LossSeries<T>, n_t: usize) -> Result<WindowPairs<T>> {
    let centers = window_centers(n_t, series.len())?;
    let (sl_means, sl_vars) = window_moments(&series.surprise, n_t);
    let (l_means, l_vars) = window_moments(&series.values, n_t);
    let mut p = WindowPairs {
        diffs: Vec::new(),
        right_loss_means: Vec::new(),
        right_loss_vars: Vec::new(),
        right_surprise_vars: Vec::new(),
        loss_scale: max_abs(&series.values),
        surprise_scale: max_abs(&series.surprise),
    };
    for i in centers {
        // left window starts at i - n_T, right window at i (zero-based)
        p.diffs.push(sl_means[i - n_t] - sl_means[i]);
        p.right_loss_means.push(l_means[i]);
        p.right_loss_vars.push(l_vars[i]);
        p.right_surprise_vars.push(sl_vars[i]);
    }
    Ok(p)
}

/// Overlapping-window version of [`b_max`].
pub fn mb_max<T: Scalar>(series: &LossSeries<T>, n_t: usize) -> Result<T> {
    let p = window_pairs(series, n_t)?;
    let mut best = T::zero();
    for (k, (&d, &den)) in p.diffs.iter().zip(&p.right_loss_means).enumerate() {
        if negligible(den, p.loss_scale) {
            return Err(Error::ZeroDenominator { index: n_t + k });
        }
        best = best.max((d / den).abs());
    }
    Ok(best)
}

/// Overlapping-window version of [`q_max`].
pub fn mq_max<T: Scalar>(series: &LossSeries<T>, n_t: usize, nu: T) -> Result<T> {
    if !(nu > T::zero()) {
        return Err(Error::NonpositiveVariance);
    }
    let p = window_pairs(series, n_t)?;
    Ok(max_abs(&p.diffs) / nu)
}

/// [`mq_max`] with one normalizer per window centre.
pub fn mq_max_windowwise<T: Scalar>(series: &LossSeries<T>, n_t: usize, per_window: &[T]) -> Result<T> {
    let p = window_pairs(series, n_t)?;
    if per_window.len() != p.diffs.len() {
        return Err(Error::InvalidSeries("one normalizer per window centre required".into()));
    }
    let mut best = T::zero();
    for (&d, &nu) in p.diffs.iter().zip(per_window) {
        if !(nu > T::zero()) {
            return Err(Error::NonpositiveVariance);
        }
        best = best.max(d.abs() / nu);
    }
    Ok(best)
}

/// Overlapping-window version of [`g_max`].
pub fn mg_max<T: Scalar>(series: &LossSeries<T>, n_t: usize) -> Result<T> {
    let p = window_pairs(series, n_t)?;
    let mut best = T::zero();
    for (k, (&d, &v)) in p.diffs.iter().zip(&p.right_loss_vars).enumerate() {
        let sd = v.sqrt();
        if negligible(sd, p.loss_scale) {
            return Err(Error::ZeroWithinBlockVariance { index: n_t + k });
        }
        best = best.max(d.abs() / sd);
    }
    Ok(best)
}

/// Centering constant `γ_m = (4 ln m − 2 ln ln m)^{1/2}`.
pub fn gamma(m_t: usize) -> Result<f64> {
    if m_t < 3 {
        return Err(Error::InvalidBlockCount(m_t));
    }
    let lm = (m_t as f64).ln();
    Ok((4.0 * lm - 2.0 * lm.ln()).sqrt())
}

/// Maps a non-overlapping raw statistic to the scale of the
/// extreme-value limit.
pub fn transform_nonoverlapping<T: Scalar>(raw: T, n_t: usize, m_t: usize, kind: StatisticKind) -> Result<T> {
    let g = T::lit(gamma(m_t)?);
    let sl = T::lit((m_t as f64).ln().sqrt());
    let sn = T::of_usize(n_t).sqrt();
    let r2 = T::FRAC_1_SQRT_2();
    match kind {
        StatisticKind::Bmax => Ok(sl * (r2 * sn * raw - g)),
        StatisticKind::Qmax | StatisticKind::QmaxG => Ok(sl * (sn * raw - g)),
        StatisticKind::Gmax => Ok(r2 * sl * (sn * raw - g)),
        k => Err(Error::InvalidExperiment(format!("{k} is not a non-overlapping block statistic"))),
    }
}

/// Maps an overlapping raw statistic to the scale of the extreme-value
/// limit.
pub fn transform_overlapping<T: Scalar>(raw: T, n_t: usize, m_t: usize, kind: StatisticKind) -> Result<T> {
    if m_t < 3 {
        return Err(Error::InvalidBlockCount(m_t));
    }
    let lm = (m_t as f64).ln();
    let shift = T::lit(2.0 * lm + 0.5 * lm.ln() + 3f64.ln());
    let factor = T::lit(lm.sqrt()) * T::of_usize(n_t).sqrt();
    match kind {
        StatisticKind::MBmax | StatisticKind::MGmax => Ok(T::FRAC_1_SQRT_2() * factor * raw - shift),
        StatisticKind::MQmax | StatisticKind::MQmaxG => Ok(factor * raw - shift),
        k => Err(Error::InvalidExperiment(format!("{k} is not an overlapping block statistic"))),
    }
}

/// CDF of the limit law, `exp(−π^{−1/2} e^{−v})`.
pub fn cdf_v(v: f64) -> f64 {
    (-(-v).exp() / std::f64::consts::PI.sqrt()).exp()
}

/// Upper tail `1 − cdf_v(v)`, accurate for large `v`.
pub fn survival_v(v: f64) -> f64 {
    -(-(-v).exp() / std::f64::consts::PI.sqrt()).exp_m1()
}

/// Inverse of [`cdf_v`].
pub fn quantile_v(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::DomainError(format!("probability {q} outside (0, 1)")));
    }
    Ok(-(std::f64::consts::PI.sqrt() * (-q.ln())).ln())
}

pub fn critical_value(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DomainError(format!("significance level {alpha} outside (0, 1)")));
    }
    // 1 - α loses digits for tiny α; use ln(1-α) directly
    Ok(-(std::f64::consts::PI.sqrt() * -(-alpha).ln_1p()).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport<T> {
    pub statistic_kind: StatisticKind,
    pub raw: T,
    pub transformed: T,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub variance_estimator_used: Option<VarianceKind>,
    pub variance_value: Option<T>,
    pub n_t: usize,
    pub m_t: usize,
    pub alpha: f64,
}

impl<T: Scalar> TestReport<T> {
    /// Decision at another significance level.
    pub fn rejects_at(&self, alpha: f64) -> Result<bool> {
        let cv = critical_value_for(self.statistic_kind, alpha)?;
        Ok(self.transformed.as_f64() > cv)
    }

    pub(crate) fn assemble(
        kind: StatisticKind,
        raw: T,
        transformed: T,
        alpha: f64,
        (n_t, m_t): (usize, usize),
        estimate: Option<(VarianceKind, Option<T>)>,
    ) -> Result<Self> {
        let cv = critical_value_for(kind, alpha)?;
        let t = transformed.as_f64();
        let p_value = match kind {
            StatisticKind::GRt => 2.0 * normal_upper(t),
            _ => survival_v(t),
        };
        Ok(TestReport {
            statistic_kind: kind,
            raw,
            transformed,
            critical_value: cv,
            p_value: p_value.clamp(0.0, 1.0),
            reject: t > cv,
            variance_estimator_used: estimate.map(|e| e.0),
            variance_value: estimate.and_then(|e| e.1),
            n_t,
            m_t,
            alpha,
        })
    }
}

fn normal_upper(z: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().sf(z)
}

/// Critical value on the transformed scale: the limit-law quantile for
/// block statistics, the two-sided normal quantile for the t-statistic.
pub fn critical_value_for(kind: StatisticKind, alpha: f64) -> Result<f64> {
    match kind {
        StatisticKind::GRt => {
            use statrs::distribution::{ContinuousCDF, Normal};
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::DomainError(format!("significance level {alpha} outside (0, 1)")));
            }
            Ok(Normal::standard().inverse_cdf(1.0 - alpha / 2.0))
        }
        _ => critical_value(alpha),
    }
}

/// Runs one block statistic end to end.
///
/// The t-statistic needs the sample design and is run by
/// [`crate::forecasting::gr_test`].
pub fn run_test<T: Scalar>(
    series: &LossSeries<T>,
    partition: &BlockPartition,
    kind: StatisticKind,
    variance_choice: VarianceChoice,
    alpha: f64,
) -> Result<TestReport<T>> {
    critical_value(alpha)?;
    series.check_covers(partition)?;
    let (n, m) = (partition.n_t, partition.m_t);
    if m < 3 {
        return Err(Error::InvalidBlockCount(m));
    }
    let mut estimate = None;
    let raw = match kind {
        StatisticKind::Bmax => b_max(&block_summaries(series, partition)?)?,
        StatisticKind::Gmax => g_max(&block_summaries(series, partition)?)?,
        StatisticKind::MBmax => mb_max(series, n)?,
        StatisticKind::MGmax => mg_max(series, n)?,
        StatisticKind::Qmax | StatisticKind::QmaxG => {
            let s = block_summaries(series, partition)?;
            if variance_choice == VarianceChoice::Q1 {
                let v = variance::nu_q1(series, partition)?;
                estimate = Some((v.kind, None));
                q_max_blockwise(&s, v.per_block.as_deref().unwrap_or_default())?
            } else {
                let v = global_variance(series, partition, &s, variance_choice)?;
                estimate = Some((v.kind, Some(v.value)));
                q_max(&s, v.value)?
            }
        }
        StatisticKind::MQmax | StatisticKind::MQmaxG => {
            if variance_choice == VarianceChoice::Q1 {
                let v = variance::nu_mq1(series, n)?;
                estimate = Some((v.kind, None));
                mq_max_windowwise(series, n, v.per_block.as_deref().unwrap_or_default())?
            } else {
                let s = block_summaries(series, partition)?;
                let v = global_variance(series, partition, &s, variance_choice)?;
                estimate = Some((v.kind, Some(v.value)));
                mq_max(series, n, v.value)?
            }
        }
        StatisticKind::GRt => {
            return Err(Error::InvalidExperiment("the t-statistic needs the sample design; use forecasting::gr_test".into()))
        }
    };
    let transformed =
        if kind.is_overlapping() { transform_overlapping(raw, n, m, kind)? } else { transform_nonoverlapping(raw, n, m, kind)? };
    TestReport::assemble(kind, raw, transformed, alpha, (n, m), estimate)
}

fn global_variance<T: Scalar>(
    series: &LossSeries<T>,
    partition: &BlockPartition,
    s: &BlockSummaries<T>,
    choice: VarianceChoice,
) -> Result<VarianceEstimate<T>> {
    match choice {
        VarianceChoice::Nu2 => variance::nu2(s),
        VarianceChoice::Nu3 => variance::nu3(s),
        VarianceChoice::Nu4 => variance::nu4(s),
        VarianceChoice::NuL => variance::nu_l(series, partition),
        VarianceChoice::Known(v) => {
            if !(v > 0.0) {
                return Err(Error::NonpositiveVariance);
            }
            Ok(VarianceEstimate { kind: VarianceKind::Known, value: T::lit(v), per_block: None })
        }
        VarianceChoice::Q1 => unreachable!("per-block normalization handled by the caller"),
    }
}

//! Estimators of the asymptotic scale `ν_L` used to studentize the
//! Q-type statistics, and a Bartlett-kernel long-run variance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{BlockPartition, LossSeries};
use crate::scalar::{max_abs, mean, pop_variance, robust_floor, Scalar};
use crate::teststats::{block_summaries, negligible, window_pairs, BlockSummaries};

/// Third quartile of the standard normal distribution.
pub const PHI_075: f64 = 0.6744897501960817;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarianceKind {
    #[serde(rename = "q1")]
    Q1Block,
    #[serde(rename = "mq1")]
    Mq1Window,
    #[serde(rename = "nu2")]
    Nu2,
    #[serde(rename = "nu3")]
    Nu3,
    #[serde(rename = "nu4")]
    Nu4,
    #[serde(rename = "nuL")]
    NuL,
    #[serde(rename = "known")]
    Known,
    /// Bartlett-kernel long-run variance of the t-statistic.
    #[serde(rename = "nw")]
    NeweyWest,
}

impl VarianceKind {
    pub fn name(self) -> &'static str {
        match self {
            VarianceKind::Q1Block => "q1",
            VarianceKind::Mq1Window => "mq1",
            VarianceKind::Nu2 => "nu2",
            VarianceKind::Nu3 => "nu3",
            VarianceKind::Nu4 => "nu4",
            VarianceKind::NuL => "nuL",
            VarianceKind::Known => "known",
            VarianceKind::NeweyWest => "nw",
        }
    }
}

/// An estimate of `ν_L` on the standard-deviation scale.
///
/// Block-wise estimators fill `per_block` (one entry per block or
/// window centre) and report their root-mean-square in `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate<T> {
    pub kind: VarianceKind,
    pub value: T,
    pub per_block: Option<Vec<T>>,
}

fn rms<T: Scalar>(xs: &[T]) -> T {
    let sq: Vec<T> = xs.iter().map(|&x| x * x).collect();
    mean(&sq).sqrt()
}

/// `ν̂_{Q1,b} = (2 × within-block variance of surprise losses)^{1/2}`.
pub fn nu_q1<T: Scalar>(series: &LossSeries<T>, partition: &BlockPartition) -> Result<VarianceEstimate<T>> {
    series.check_covers(partition)?;
    if partition.m_t < 2 {
        return Err(Error::InvalidBlockCount(partition.m_t));
    }
    let scale = max_abs(&series.surprise[..partition.covered()]);
    let two = T::lit(2.0);
    let mut per = Vec::with_capacity(partition.m_t);
    for (b, r) in partition.block_ranges().into_iter().enumerate() {
        let nu = (two * pop_variance(&series.surprise[r])).sqrt();
        if negligible(nu, scale) {
            return Err(Error::ZeroVariance(format!("surprise losses constant in block {b}")));
        }
        per.push(nu);
    }
    Ok(VarianceEstimate { kind: VarianceKind::Q1Block, value: rms(&per), per_block: Some(per) })
}

/// Overlapping analogue of [`nu_q1`], computed on the right window of
/// each centre `i = n_T..=T_n-n_T`.
pub fn nu_mq1<T: Scalar>(series: &LossSeries<T>, n_t: usize) -> Result<VarianceEstimate<T>> {
    let p = window_pairs(series, n_t)?;
    let two = T::lit(2.0);
    let mut per = Vec::with_capacity(p.diffs.len());
    for (k, &v) in p.right_surprise_vars.iter().enumerate() {
        let nu = (two * v).sqrt();
        if negligible(nu, p.surprise_scale) {
            return Err(Error::ZeroVariance(format!("surprise losses constant in window at centre {}", n_t + k)));
        }
        per.push(nu);
    }
    Ok(VarianceEstimate { kind: VarianceKind::Mq1Window, value: rms(&per), per_block: Some(per) })
}

fn checked_differences<T: Scalar>(s: &BlockSummaries<T>) -> Result<Vec<T>> {
    if s.m_t() < 3 {
        return Err(Error::InvalidBlockCount(s.m_t()));
    }
    let d = s.differences();
    if negligible(max_abs(&d), max_abs(&s.surprise_means)) {
        return Err(Error::ZeroVariance("all adjacent block means coincide".into()));
    }
    Ok(d)
}

/// Mean-absolute-difference estimator
/// `√(π n_T) / (2(m_T−1)) Σ |ΔB|`.
pub fn nu2<T: Scalar>(s: &BlockSummaries<T>) -> Result<VarianceEstimate<T>> {
    let d = checked_differences(s)?;
    let m1 = T::of_usize(d.len());
    let sum = d.iter().fold(T::zero(), |a, &x| a + x.abs());
    let value = (T::PI() * T::of_usize(s.n_t)).sqrt() / (T::lit(2.0) * m1) * sum;
    Ok(VarianceEstimate { kind: VarianceKind::Nu2, value, per_block: None })
}

/// Root-mean-square-difference estimator
/// `√n_T / √(2(m_T−1)) (Σ ΔB²)^{1/2}`.
pub fn nu3<T: Scalar>(s: &BlockSummaries<T>) -> Result<VarianceEstimate<T>> {
    let d = checked_differences(s)?;
    let m1 = T::of_usize(d.len());
    // scale before squaring so tiny or huge losses neither under- nor overflow
    let c = max_abs(&d);
    let ss = d.iter().fold(T::zero(), |a, &x| a + (x / c) * (x / c));
    let value = T::of_usize(s.n_t).sqrt() / (T::lit(2.0) * m1).sqrt() * c * ss.sqrt();
    Ok(VarianceEstimate { kind: VarianceKind::Nu3, value, per_block: None })
}

fn median<T: Scalar>(mut xs: Vec<T>) -> T {
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        (xs[k / 2 - 1] + xs[k / 2]) / T::lit(2.0)
    }
}

/// Median-absolute-difference estimator
/// `√n_T / (√2 Φ_{0.75}) median|ΔB|`.
///
/// `ΔB` has standard deviation `√2 ν / √n_T`, so the median of `|ΔB|`
/// is `Φ_{0.75} √2 ν / √n_T`; dividing by `√2 Φ_{0.75}` makes the
/// estimator consistent for the same `ν` as [`nu2`] and [`nu3`].
pub fn nu4<T: Scalar>(s: &BlockSummaries<T>) -> Result<VarianceEstimate<T>> {
    let d = checked_differences(s)?;
    let med = median(d.into_iter().map(|x| x.abs()).collect());
    let value = T::of_usize(s.n_t).sqrt() / (T::SQRT_2() * T::lit(PHI_075)) * med;
    Ok(VarianceEstimate { kind: VarianceKind::Nu4, value, per_block: None })
}

/// The median estimator with the radical `√(2 Φ_{0.75})`; it targets
/// `ν √Φ_{0.75}` rather than `ν`.
pub fn nu4_radical_form<T: Scalar>(s: &BlockSummaries<T>) -> Result<T> {
    let d = checked_differences(s)?;
    let med = median(d.into_iter().map(|x| x.abs()).collect());
    Ok(T::of_usize(s.n_t).sqrt() / (T::lit(2.0 * PHI_075)).sqrt() * med)
}

/// Self-normalized block ratio
/// `(2(m_T−1))^{-1} Σ_{b≥1} ζ_b²` with
/// `ζ_b = √n_T (A_b − A_{b−1}) / √V_b`, where `A_b` and `V_b` are the
/// mean and variance of raw losses in block `b`.
///
/// The ratio is free of the loss scale; it equals one when the loss
/// sequence is serially uncorrelated.
pub fn nu_l_ratio<T: Scalar>(series: &LossSeries<T>, partition: &BlockPartition) -> Result<T> {
    let s = block_summaries(series, partition)?;
    self_normalized_ratio(&s).map(|(r, _)| r)
}

fn self_normalized_ratio<T: Scalar>(s: &BlockSummaries<T>) -> Result<(T, T)> {
    let m = s.m_t();
    if m < 3 {
        return Err(Error::InvalidBlockCount(m));
    }
    let sn = T::of_usize(s.n_t).sqrt();
    let mut zeta_sq = T::zero();
    let mut pooled = T::zero();
    for b in 1..m {
        let v = s.loss_variances[b];
        if negligible(v.max(T::zero()).sqrt(), s.loss_scale) {
            return Err(Error::ZeroVariance(format!("raw losses constant in block {b}")));
        }
        let z = sn * (s.loss_means[b] - s.loss_means[b - 1]) / v.sqrt();
        zeta_sq += z * z;
        pooled += v;
    }
    let m1 = T::of_usize(m - 1);
    let ratio = zeta_sq / (T::lit(2.0) * m1);
    if !(ratio > T::zero()) {
        return Err(Error::ZeroVariance("all adjacent block loss means coincide".into()));
    }
    Ok((ratio, pooled / m1))
}

/// Block self-normalized estimator of `ν_L`.
///
/// Returns `(ratio · V̄)^{1/2}` where `ratio` is [`nu_l_ratio`] and
/// `V̄` the average within-block loss variance over blocks `1..m_T`.
/// Under serially uncorrelated losses this is the loss standard
/// deviation; serial dependence inflates the ratio accordingly.
pub fn nu_l<T: Scalar>(series: &LossSeries<T>, partition: &BlockPartition) -> Result<VarianceEstimate<T>> {
    let s = block_summaries(series, partition)?;
    let (ratio, pooled) = self_normalized_ratio(&s)?;
    Ok(VarianceEstimate { kind: VarianceKind::NuL, value: (ratio * pooled).sqrt(), per_block: None })
}

/// Truncation lag `⌊T_n^{1/3}⌋`.
pub fn newey_west_lag(t_n: usize) -> usize {
    robust_floor((t_n as f64).cbrt()) as usize
}

/// Bartlett-kernel long-run variance of the demeaned series with
/// divisor `T`; `lag = 0` gives the sample variance.
pub fn newey_west<T: Scalar>(xs: &[T], lag: usize) -> T {
    let n = xs.len();
    let m = mean(xs);
    let d: Vec<T> = xs.iter().map(|&x| x - m).collect();
    let nn = T::of_usize(n);
    let autocov = |j: usize| d[j..].iter().zip(&d[..n - j]).fold(T::zero(), |a, (&u, &v)| a + u * v) / nn;
    let mut lrv = autocov(0);
    for j in 1..=lag.min(n.saturating_sub(1)) {
        let w = T::one() - T::of_usize(j) / T::of_usize(lag + 1);
        lrv += T::lit(2.0) * w * autocov(j);
    }
    lrv
}

//! Sample geometry: estimation/evaluation split, block partitions and
//! the loss series container.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{robust_floor, Scalar};

/// Parameter-estimation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Estimate once on the first `T_m` observations.
    #[default]
    Fixed,
    /// Expanding window starting at the first observation.
    Recursive,
    /// Window of constant width `T_m` ending at the forecast origin.
    Rolling,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Fixed => "fixed",
            Scheme::Recursive => "recursive",
            Scheme::Rolling => "rolling",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fixed" => Ok(Scheme::Fixed),
            "recursive" => Ok(Scheme::Recursive),
            "rolling" => Ok(Scheme::Rolling),
            other => Err(Error::InvalidDesign(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Split of a sample of `T` observations into an estimation part of
/// size `T_m` and `T_n = T - T_m - τ + 1` forecast origins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DesignConfig")]
pub struct SampleDesign {
    pub total_obs: usize,
    pub in_sample: usize,
    pub out_sample: usize,
    pub horizon: usize,
    pub scheme: Scheme,
    pub sampling_interval: f64,
}

/// Serialized form of a design; `out_sample` is derived.
#[derive(Deserialize)]
struct DesignConfig {
    total_obs: usize,
    in_sample: usize,
    #[serde(default = "one")]
    horizon: usize,
    #[serde(default)]
    scheme: Scheme,
    #[serde(default = "unit_interval")]
    sampling_interval: f64,
}

fn one() -> usize {
    1
}

fn unit_interval() -> f64 {
    1.0
}

impl TryFrom<DesignConfig> for SampleDesign {
    type Error = Error;

    fn try_from(c: DesignConfig) -> Result<Self> {
        SampleDesign::new(c.total_obs, c.in_sample, c.horizon, c.scheme)?.with_sampling_interval(c.sampling_interval)
    }
}

impl SampleDesign {
    pub fn new(total_obs: usize, in_sample: usize, horizon: usize, scheme: Scheme) -> Result<Self> {
        if horizon < 1 {
            return Err(Error::InvalidDesign("horizon must be at least 1".into()));
        }
        if in_sample < 2 {
            return Err(Error::InvalidDesign(format!("in-sample size {in_sample} is below 2")));
        }
        let used = in_sample + horizon - 1;
        if total_obs < used + 2 {
            return Err(Error::InvalidDesign(format!(
                "T={total_obs}, T_m={in_sample}, tau={horizon} leaves fewer than 2 forecast origins"
            )));
        }
        Ok(SampleDesign { total_obs, in_sample, out_sample: total_obs - used, horizon, scheme, sampling_interval: 1.0 })
    }

    /// Sets the sampling interval `h` used to normalize losses.
    pub fn with_sampling_interval(mut self, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidDesign(format!("sampling interval {h} must be positive")));
        }
        self.sampling_interval = h;
        Ok(self)
    }

    /// Time span `N = T h`.
    pub fn time_span(&self) -> f64 {
        self.total_obs as f64 * self.sampling_interval
    }

    /// In-sample span `T_m h`.
    pub fn in_sample_span(&self) -> f64 {
        self.in_sample as f64 * self.sampling_interval
    }

    /// Zero-based observation index of the `k`-th forecast origin
    /// (`k = 0..T_n`).
    pub fn origin(&self, k: usize) -> usize {
        self.in_sample - 1 + k
    }

    /// Zero-based observation indices `j` of the regression pairs
    /// `(y_j, X_{j-τ})` available at forecast origin `origin`.
    ///
    /// The same window is used for estimation and for the average
    /// in-sample loss.
    pub fn estimation_window(&self, origin: usize) -> Range<usize> {
        let tau = self.horizon;
        match self.scheme {
            Scheme::Fixed => tau..self.in_sample,
            Scheme::Recursive => tau..origin + 1,
            Scheme::Rolling => (origin + 1 + tau).saturating_sub(self.in_sample).max(tau)..origin + 1,
        }
    }
}

/// How fast volatility may move within a block; sets the growth
/// exponent of the block length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolatilityRegime {
    /// Locally Lipschitz volatility: exponent 2/3.
    Lipschitz,
    /// Itô-semimartingale volatility: exponent 1/2.
    Ito,
}

impl VolatilityRegime {
    pub fn exponent(self) -> f64 {
        match self {
            VolatilityRegime::Lipschitz => 2.0 / 3.0,
            VolatilityRegime::Ito => 0.5,
        }
    }
}

/// Which of `n_T` and `m_T` is fixed first by the growth rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockSizing {
    /// `n_T = ⌊T_n^κ⌋`, then `m_T = ⌊T_n / n_T⌋`.
    #[default]
    LengthFirst,
    /// `m_T = ⌊T_n / ⌊T_n^κ⌋⌋` blocks, then `n_T = ⌊T_n / m_T⌋` so the
    /// blocks cover as much of the sample as possible.
    CountFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockRule {
    pub regime: VolatilityRegime,
    pub epsilon: f64,
    pub min_blocks: usize,
    pub sizing: BlockSizing,
}

impl Default for BlockRule {
    fn default() -> Self {
        BlockRule { regime: VolatilityRegime::Lipschitz, epsilon: 0.0, min_blocks: 3, sizing: BlockSizing::LengthFirst }
    }
}

impl BlockRule {
    pub fn new(regime: VolatilityRegime, epsilon: f64) -> Result<Self> {
        let rule = BlockRule { regime, epsilon, ..Default::default() };
        rule.validate()?;
        Ok(rule)
    }

    pub fn with_sizing(mut self, sizing: BlockSizing) -> Self {
        self.sizing = sizing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(Error::InvalidBlockRule(format!("epsilon {} outside [0, 0.5)", self.epsilon)));
        }
        if self.epsilon >= self.regime.exponent() {
            return Err(Error::InvalidBlockRule("epsilon exceeds the growth exponent".into()));
        }
        if self.min_blocks < 3 {
            return Err(Error::InvalidBlockRule(format!("min_blocks {} is below 3", self.min_blocks)));
        }
        Ok(())
    }

    /// `⌊T_n^{κ-ε}⌋`, floored robustly against rounding just below an
    /// integer.
    pub fn base_length(&self, t_n: usize) -> usize {
        robust_floor((t_n as f64).powf(self.regime.exponent() - self.epsilon)) as usize
    }
}

/// Partition of the first `m_T n_T` evaluation points into `m_T`
/// consecutive blocks of `n_T` points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub n_t: usize,
    pub m_t: usize,
    pub t_n: usize,
}

impl BlockPartition {
    /// Blocks of length `n_t` over `t_n` points; the trailing
    /// `t_n mod n_t` points are dropped.
    pub fn new(t_n: usize, n_t: usize, min_blocks: usize) -> Result<Self> {
        if n_t < 2 {
            return Err(Error::InsufficientSample(format!("block length {n_t} is below 2")));
        }
        let m_t = t_n / n_t;
        if m_t < min_blocks {
            return Err(Error::InsufficientSample(format!(
                "T_n={t_n} with n_T={n_t} gives {m_t} blocks, need at least {min_blocks}"
            )));
        }
        Ok(BlockPartition { n_t, m_t, t_n })
    }

    pub fn block_range(&self, b: usize) -> Range<usize> {
        b * self.n_t..(b + 1) * self.n_t
    }

    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        (0..self.m_t).map(|b| self.block_range(b)).collect()
    }

    /// Number of evaluation points covered by the blocks.
    pub fn covered(&self) -> usize {
        self.m_t * self.n_t
    }
}

/// Block length and count for the design's evaluation sample.
pub fn select_block_size(design: &SampleDesign, rule: &BlockRule) -> Result<BlockPartition> {
    partition_for(design.out_sample, rule)
}

/// [`select_block_size`] from the evaluation-sample size alone.
pub fn partition_for(t_n: usize, rule: &BlockRule) -> Result<BlockPartition> {
    rule.validate()?;
    let base = rule.base_length(t_n);
    if base < 2 {
        return Err(Error::InsufficientSample(format!("T_n={t_n} is too short for blocks of length 2")));
    }
    let n_t = match rule.sizing {
        BlockSizing::LengthFirst => base,
        BlockSizing::CountFirst => {
            let m = t_n / base;
            if m == 0 {
                return Err(Error::InsufficientSample(format!("T_n={t_n} yields no blocks")));
            }
            t_n / m
        }
    };
    BlockPartition::new(t_n, n_t, rule.min_blocks)
}

/// One-based centres `i = n_T, …, T_n - n_T` of the overlapping
/// window pairs; the left window is `i-n_T+1..=i`, the right one
/// `i+1..=i+n_T`.
pub fn overlapping_windows(partition: &BlockPartition, t_n: usize) -> Result<Vec<usize>> {
    window_centers(partition.n_t, t_n).map(|r| r.collect())
}

pub(crate) fn window_centers(n_t: usize, t_n: usize) -> Result<std::ops::RangeInclusive<usize>> {
    if n_t == 0 || t_n < 2 * n_t {
        return Err(Error::InsufficientSample(format!("T_n={t_n} is shorter than two windows of length {n_t}")));
    }
    Ok(n_t..=t_n - n_t)
}

/// Out-of-sample losses and surprise losses, one entry per forecast
/// origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSeries<T> {
    pub values: Vec<T>,
    pub surprise: Vec<T>,
    pub origin_index: usize,
}

impl<T: Scalar> LossSeries<T> {
    pub fn new(values: Vec<T>, surprise: Vec<T>, origin_index: usize) -> Result<Self> {
        if values.len() != surprise.len() {
            return Err(Error::InvalidSeries(format!("{} losses but {} surprise losses", values.len(), surprise.len())));
        }
        if let Some(i) = values.iter().chain(surprise.iter()).position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite entry at position {}", i % values.len().max(1))));
        }
        Ok(LossSeries { values, surprise, origin_index })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Multiplies every loss and surprise loss by `c`.
    pub fn scaled(&self, c: T) -> Self {
        LossSeries {
            values: self.values.iter().map(|&v| v * c).collect(),
            surprise: self.surprise.iter().map(|&v| v * c).collect(),
            origin_index: self.origin_index,
        }
    }

    pub fn check_covers(&self, partition: &BlockPartition) -> Result<()> {
        if partition.covered() > self.len() {
            return Err(Error::InvalidSeries(format!(
                "partition covers {} points but the series has {}",
                partition.covered(),
                self.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_sample_size() {
        let d = SampleDesign::new(200, 100, 1, Scheme::Fixed).unwrap();
        assert_eq!(d.out_sample, 100);
        let d = SampleDesign::new(200, 100, 3, Scheme::Fixed).unwrap();
        assert_eq!(d.out_sample, 98);
        assert!(SampleDesign::new(101, 100, 1, Scheme::Fixed).is_err());
        assert!(SampleDesign::new(100, 1, 1, Scheme::Fixed).is_err());
    }

    #[test]
    fn lipschitz_block_length() {
        let p = partition_for(100, &BlockRule::default()).unwrap();
        assert_eq!((p.n_t, p.m_t), (21, 4));
    }

    #[test]
    fn ito_block_length() {
        let rule = BlockRule::new(VolatilityRegime::Ito, 0.0).unwrap();
        let p = partition_for(100, &rule).unwrap();
        assert_eq!((p.n_t, p.m_t), (10, 10));
    }

    #[test]
    fn too_few_blocks() {
        assert!(matches!(partition_for(8, &BlockRule::default()), Err(Error::InsufficientSample(_))));
    }

    #[test]
    fn count_first_sizing() {
        let rule = BlockRule::default().with_sizing(BlockSizing::CountFirst);
        let p = partition_for(100, &rule).unwrap();
        assert_eq!((p.n_t, p.m_t), (25, 4));
        let p = partition_for(120, &rule).unwrap();
        assert_eq!((p.n_t, p.m_t), (24, 5));
    }

    #[test]
    fn epsilon_shrinks_blocks() {
        let rule = BlockRule::new(VolatilityRegime::Lipschitz, 0.1).unwrap();
        let p = partition_for(1000, &rule).unwrap();
        assert_eq!(p.n_t, (1000f64.powf(2.0 / 3.0 - 0.1)).floor() as usize);
        assert!(BlockRule::new(VolatilityRegime::Lipschitz, 0.5).is_err());
    }

    #[test]
    fn cube_root_floor_is_exact() {
        let rule = BlockRule::new(VolatilityRegime::Lipschitz, 1.0 / 3.0).unwrap();
        assert_eq!(rule.base_length(1000), 10);
    }

    #[test]
    fn windows() {
        let p = BlockPartition::new(30, 10, 3).unwrap();
        let c = overlapping_windows(&p, 30).unwrap();
        assert_eq!(c.len(), 11);
        assert_eq!((c[0], c[10]), (10, 20));
        let p2 = BlockPartition { n_t: 10, m_t: 2, t_n: 20 };
        assert_eq!(overlapping_windows(&p2, 20).unwrap(), vec![10]);
        assert!(overlapping_windows(&p2, 19).is_err());
    }

    #[test]
    fn estimation_windows_by_scheme() {
        let f = SampleDesign::new(20, 10, 1, Scheme::Fixed).unwrap();
        let r = SampleDesign::new(20, 10, 1, Scheme::Recursive).unwrap();
        let w = SampleDesign::new(20, 10, 1, Scheme::Rolling).unwrap();
        let o = f.origin(0);
        assert_eq!(o, 9);
        assert_eq!(f.estimation_window(o), 1..10);
        assert_eq!(r.estimation_window(o), 1..10);
        assert_eq!(w.estimation_window(o), 1..10);
        assert_eq!(f.estimation_window(f.origin(5)), 1..10);
        assert_eq!(r.estimation_window(r.origin(5)), 1..15);
        assert_eq!(w.estimation_window(w.origin(5)), 6..15);
        assert_eq!(w.estimation_window(w.origin(5)).len(), 10 - 1);
    }

    #[test]
    fn loss_series_validation() {
        assert!(LossSeries::new(vec![1.0, 2.0], vec![1.0], 0).is_err());
        assert!(LossSeries::new(vec![1.0, f64::NAN], vec![1.0, 1.0], 0).is_err());
        let s = LossSeries::new(vec![1.0, 2.0], vec![0.5, 1.5], 3).unwrap();
        assert_eq!(s.scaled(2.0).values, vec![2.0, 4.0]);
    }
}

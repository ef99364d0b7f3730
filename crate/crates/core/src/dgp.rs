//! Simulation designs for size and power experiments.
//!
//! Every discrete design has the form
//! `Y_t = μ + β X_{t-1} + (break term) + e_t`, simulated with 200
//! discarded burn-in points. Random draws come from ChaCha8 with one
//! stream per replication: replication `r` of base seed `s` uses
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `r`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Discarded initial observations for every design.
pub const BURN_IN: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DgpFamily {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    P1a,
    P1b,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
    #[serde(rename = "continuous_time")]
    ContinuousTime,
    #[serde(rename = "local_alternative")]
    LocalAlternative,
}

impl DgpFamily {
    pub const ALL: [DgpFamily; 17] = [
        DgpFamily::S1,
        DgpFamily::S2,
        DgpFamily::S3,
        DgpFamily::S4,
        DgpFamily::S5,
        DgpFamily::S6,
        DgpFamily::P1a,
        DgpFamily::P1b,
        DgpFamily::P2,
        DgpFamily::P3,
        DgpFamily::P4,
        DgpFamily::P5,
        DgpFamily::P6,
        DgpFamily::P7,
        DgpFamily::P8,
        DgpFamily::ContinuousTime,
        DgpFamily::LocalAlternative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DgpFamily::S1 => "S1",
            DgpFamily::S2 => "S2",
            DgpFamily::S3 => "S3",
            DgpFamily::S4 => "S4",
            DgpFamily::S5 => "S5",
            DgpFamily::S6 => "S6",
            DgpFamily::P1a => "P1a",
            DgpFamily::P1b => "P1b",
            DgpFamily::P2 => "P2",
            DgpFamily::P3 => "P3",
            DgpFamily::P4 => "P4",
            DgpFamily::P5 => "P5",
            DgpFamily::P6 => "P6",
            DgpFamily::P7 => "P7",
            DgpFamily::P8 => "P8",
            DgpFamily::ContinuousTime => "continuous_time",
            DgpFamily::LocalAlternative => "local_alternative",
        }
    }

    pub fn is_power_design(self) -> bool {
        !matches!(self, DgpFamily::S1 | DgpFamily::S2 | DgpFamily::S3 | DgpFamily::S4 | DgpFamily::S5 | DgpFamily::S6)
    }
}

impl std::fmt::Display for DgpFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DgpFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DgpFamily::ALL
            .iter()
            .copied()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub family: DgpFamily,
    /// Break magnitude.
    #[serde(default)]
    pub delta: f64,
    /// Fractional break date; the break starts after `⌊T λ₀⌋`.
    #[serde(default = "default_lambda0")]
    pub lambda0: f64,
    /// Length of a short-lived break; `None` means it lasts to the end.
    #[serde(default)]
    pub duration: Option<usize>,
    /// Half-period of the recurrent on/off breaks.
    #[serde(default = "default_switch_period")]
    pub switch_period: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_lambda0() -> f64 {
    0.5
}

fn default_switch_period() -> usize {
    30
}

impl DgpSpec {
    pub fn new(family: DgpFamily) -> Self {
        DgpSpec {
            family,
            delta: 0.0,
            lambda0: default_lambda0(),
            duration: None,
            switch_period: default_switch_period(),
            seed: 0,
        }
    }

    pub fn with_break(mut self, delta: f64, lambda0: f64) -> Self {
        self.delta = delta;
        self.lambda0 = lambda0;
        self
    }

    pub fn with_duration(mut self, p: usize) -> Self {
        self.duration = Some(p);
        self
    }

    pub fn with_switch_period(mut self, p: usize) -> Self {
        self.switch_period = p;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0 && self.lambda0 < 1.0) {
            return Err(Error::InvalidDgp(format!("break fraction {} outside (0, 1)", self.lambda0)));
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidDgp("break magnitude must be finite".into()));
        }
        if self.duration == Some(0) {
            return Err(Error::InvalidDgp("break duration must be at least 1".into()));
        }
        if self.switch_period == 0 {
            return Err(Error::InvalidDgp("switch period must be at least 1".into()));
        }
        Ok(())
    }

    /// Last pre-break time `T_b = ⌊T λ₀⌋`.
    pub fn break_date(&self, t: usize) -> usize {
        (t as f64 * self.lambda0).floor() as usize
    }
}

/// Dependent variable and predictors aligned so that `x[k]` is the
/// predictor of `y[k]` one step ahead, i.e. the time-`(k-1)` value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedPath<T> {
    pub y: Vec<T>,
    pub x: Vec<Vec<T>>,
    /// Zero-based index of the first observation affected by a break.
    pub true_break_index: Option<usize>,
}

impl<T: Scalar> SimulatedPath<T> {
    /// Builds a path from data, checking shapes and finiteness.
    pub fn from_data(y: Vec<T>, x: Vec<Vec<T>>) -> Result<Self> {
        if y.len() != x.len() {
            return Err(Error::InvalidSeries(format!("{} responses but {} predictor rows", y.len(), x.len())));
        }
        let q = x.first().map_or(0, |r| r.len());
        for (k, row) in x.iter().enumerate() {
            if row.len() != q {
                return Err(Error::InvalidSeries(format!("predictor row {k} has {} entries, expected {q}", row.len())));
            }
            if !y[k].is_finite() || row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSeries(format!("non-finite value in row {k}")));
            }
        }
        Ok(SimulatedPath { y, x, true_break_index: None })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_predictors(&self) -> usize {
        self.x.first().map_or(0, |r| r.len())
    }
}

/// Generator for replication `r` under base seed `seed`.
pub fn replication_rng(seed: u64, r: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    rng
}

#[derive(Debug, Clone, Copy)]
enum Regressor {
    Iid { mean: f64, sd: f64 },
    Ar { phi: f64, innov_sd: f64 },
    LaggedY,
}

#[derive(Debug, Clone, Copy)]
enum Noise {
    Iid { sd: f64 },
    Arch { omega: f64, a: f64 },
    Ar { phi: f64, innov_sd: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BreakKind {
    None,
    Slope,
    Scale,
    Intercept,
    RecurrentIntercept,
    RecurrentScale,
}

#[derive(Debug, Clone, Copy)]
struct Model {
    mu: f64,
    beta: f64,
    x: Regressor,
    e: Noise,
    brk: BreakKind,
}

const UNIT_AR_SD: f64 = 0.916_515_138_991_168; // sqrt(1 - 0.4^2)

fn model(family: DgpFamily) -> Model {
    use BreakKind as B;
    let s1 = Model { mu: 2.73, beta: -0.44, x: Regressor::Iid { mean: 0.0, sd: 1.0 }, e: Noise::Iid { sd: 1.0 }, brk: B::None };
    let ar_x = Regressor::Ar { phi: 0.4, innov_sd: UNIT_AR_SD };
    let e07 = Noise::Iid { sd: 0.7 };
    let noise_x = Regressor::Iid { mean: 0.0, sd: 1.0 };
    match family {
        DgpFamily::S1 | DgpFamily::ContinuousTime | DgpFamily::LocalAlternative => s1,
        DgpFamily::S2 => Model { e: Noise::Arch { omega: 1.0, a: 0.5 }, ..s1 },
        DgpFamily::S3 => Model { mu: 0.0, beta: 1.0, x: ar_x, e: e07, brk: B::None },
        DgpFamily::S4 => Model { mu: 0.0, beta: 0.4, x: Regressor::LaggedY, e: e07, brk: B::None },
        DgpFamily::S5 => Model { mu: 0.0, beta: 0.3, x: Regressor::LaggedY, e: e07, brk: B::None },
        DgpFamily::S6 => Model { e: Noise::Ar { phi: 0.3, innov_sd: 1.0 }, ..s1 },
        DgpFamily::P1a => Model { brk: B::Slope, ..s1 },
        DgpFamily::P1b => Model { x: Regressor::Iid { mean: 1.0, sd: 1.0 }, brk: B::Slope, ..s1 },
        DgpFamily::P2 => Model { mu: 0.0, beta: 1.0, x: ar_x, e: e07, brk: B::Slope },
        DgpFamily::P3 => Model { mu: 0.0, beta: 0.0, x: noise_x, e: Noise::Iid { sd: 0.8 }, brk: B::RecurrentIntercept },
        DgpFamily::P4 => {
            Model { mu: 0.0, beta: 0.5, x: Regressor::Iid { mean: 1.0, sd: 1.0 }, e: Noise::Iid { sd: 1.0 }, brk: B::Scale }
        }
        DgpFamily::P5 => Model { mu: 0.0, beta: 0.0, x: noise_x, e: e07, brk: B::RecurrentScale },
        DgpFamily::P6 => Model { mu: 0.0, beta: 0.3, x: Regressor::LaggedY, e: e07, brk: B::Intercept },
        DgpFamily::P7 => Model {
            x: Regressor::Iid { mean: 0.0, sd: 1.5f64.sqrt() },
            e: Noise::Arch { omega: 0.5, a: 0.5 },
            brk: B::Slope,
            ..s1
        },
        DgpFamily::P8 => Model {
            mu: 1.0,
            beta: 1.0,
            x: Regressor::Iid { mean: 0.0, sd: 1.4f64.sqrt() },
            e: Noise::Ar { phi: 0.4, innov_sd: 1.0 },
            brk: B::Slope,
        },
    }
}

/// Simulates a path of length `t` from `spec`, using stream 0 of
/// `spec.seed`.
pub fn simulate(spec: &DgpSpec, t: usize) -> Result<SimulatedPath<f64>> {
    simulate_with_rng(spec, t, &mut replication_rng(spec.seed, 0))
}

/// Simulates a path of length `t` from `spec` with an external
/// generator (the spec's own seed is ignored).
pub fn simulate_with_rng<R: Rng + ?Sized>(spec: &DgpSpec, t: usize, rng: &mut R) -> Result<SimulatedPath<f64>> {
    spec.validate()?;
    if t < 20 {
        return Err(Error::InvalidDgp(format!("path length {t} is below 20")));
    }
    match spec.family {
        DgpFamily::ContinuousTime => {
            let tb = spec.break_date(t) as f64;
            let delta = spec.delta;
            let sigma_e = move |s: f64| if s > tb { 1.0 + delta } else { 1.0 };
            let m = ContinuousModel {
                mu_x: &|_| 0.0,
                sigma_x: &|_| 1.0,
                mu_e: &|_| 0.0,
                sigma_e: &sigma_e,
                beta_star: vec![-0.44],
                theta: 0.0,
                horizon: 1,
            };
            let mut path = simulate_continuous(&m, t, 1.0, rng)?;
            path.true_break_index = Some(spec.break_date(t));
            Ok(path)
        }
        DgpFamily::LocalAlternative => {
            let t_m = t / 2;
            let t_n = t - t_m;
            let n_t = crate::sample::BlockRule::default().base_length(t_n).max(2);
            let (lambda0, delta) = (spec.lambda0, spec.delta);
            let mu_beta = move |u: f64| if u > lambda0 { delta } else { 0.0 };
            let mut path = simulate_local_alternative(&mu_beta, t, t_m, n_t, rng)?;
            path.true_break_index = Some(spec.break_date(t));
            Ok(path)
        }
        family => {
            let m = model(family);
            let tb = spec.break_date(t);
            let active = |time: usize| -> f64 {
                if time <= tb {
                    return 0.0;
                }
                let on = match m.brk {
                    BreakKind::RecurrentIntercept | BreakKind::RecurrentScale => {
                        ((time - tb - 1) / spec.switch_period).is_multiple_of(2)
                    }
                    _ => spec.duration.is_none_or(|p| time <= tb + p),
                };
                if on {
                    spec.delta
                } else {
                    0.0
                }
            };
            let mut path = run_model(&m, t, rng, &active, &|_| 0.0);
            if family.is_power_design() {
                path.true_break_index = Some(tb);
            }
            Ok(path)
        }
    }
}

/// Simulates `model` for `t` retained periods. `shift(time)` is the
/// break term at one-based retained time `time` (zero during burn-in);
/// `slope_shift(time)` is added to the slope on top of any break.
fn run_model<R: Rng + ?Sized>(
    m: &Model,
    t: usize,
    rng: &mut R,
    shift: &dyn Fn(usize) -> f64,
    slope_shift: &dyn Fn(usize) -> f64,
) -> SimulatedPath<f64> {
    let total = BURN_IN + t + 1;
    let zx: Vec<f64> = (0..total).map(|_| rng.sample(StandardNormal)).collect();
    let ze: Vec<f64> = (0..total).map(|_| rng.sample(StandardNormal)).collect();

    let mut x = vec![0.0; total];
    for g in 0..total {
        x[g] = match m.x {
            Regressor::Iid { mean, sd } => mean + sd * zx[g],
            Regressor::Ar { phi, innov_sd } => {
                if g == 0 {
                    zx[0] * innov_sd / (1.0 - phi * phi).sqrt()
                } else {
                    phi * x[g - 1] + innov_sd * zx[g]
                }
            }
            Regressor::LaggedY => 0.0,
        };
    }

    let mut e = vec![0.0; total];
    let mut y = vec![0.0; total];
    for g in 0..total {
        let prev_e = if g > 0 { e[g - 1] } else { 0.0 };
        e[g] = match m.e {
            Noise::Iid { sd } => sd * ze[g],
            Noise::Arch { omega, a } => (omega + a * prev_e * prev_e).sqrt() * ze[g],
            Noise::Ar { phi, innov_sd } => phi * prev_e + innov_sd * ze[g],
        };
        // one-based retained time; zero and below are burn-in
        let time = (g + 1).saturating_sub(BURN_IN + 1);
        let (d, slope_extra) = if g > BURN_IN { (shift(time), slope_shift(time)) } else { (0.0, 0.0) };
        let pred = if g == 0 {
            0.0
        } else {
            match m.x {
                Regressor::LaggedY => y[g - 1],
                _ => x[g - 1],
            }
        };
        let mut slope = m.beta + slope_extra;
        let (mut mu, mut err) = (m.mu, e[g]);
        match m.brk {
            BreakKind::Slope => slope += d,
            BreakKind::Scale | BreakKind::RecurrentScale => err *= 1.0 + d,
            BreakKind::Intercept | BreakKind::RecurrentIntercept => mu += d,
            BreakKind::None => {}
        }
        y[g] = mu + slope * pred + err;
    }

    let lagged = match m.x {
        Regressor::LaggedY => &y,
        _ => &x,
    };
    let first = BURN_IN + 1;
    SimulatedPath {
        y: y[first..].to_vec(),
        x: lagged[first - 1..total - 1].iter().map(|&v| vec![v]).collect(),
        true_break_index: None,
    }
}

/// Time-varying coefficients of a continuous-time regression, as
/// functions of calendar time `s ∈ [0, T h]`.
pub struct ContinuousModel<'a> {
    pub mu_x: &'a dyn Fn(f64) -> f64,
    pub sigma_x: &'a dyn Fn(f64) -> f64,
    pub mu_e: &'a dyn Fn(f64) -> f64,
    pub sigma_e: &'a dyn Fn(f64) -> f64,
    pub beta_star: Vec<f64>,
    /// Drift exponent `ϑ ∈ [0, 1/8)`.
    pub theta: f64,
    /// Lag `τ` between predictor and response increments.
    pub horizon: usize,
}

/// Euler–Maruyama increments of the continuous-time model.
///
/// Returns `y[k] = Δ_h Y_{k+1}` and `x[k] = Δ_h X_k` (one predictor per
/// entry of `beta_star`), so row `k` again holds the predictor of the
/// following response. Increments satisfy
/// `Δ_h X_k = μ_X h + σ_X √h Z_k` and
/// `Δ_h Y_k = β*'Δ_h X_{k-τ} + μ_e h^{1-ϑ} + σ_e √h Z'_k`.
pub fn simulate_continuous<R: Rng + ?Sized>(
    m: &ContinuousModel<'_>,
    t: usize,
    h: f64,
    rng: &mut R,
) -> Result<SimulatedPath<f64>> {
    if !(0.0..0.125).contains(&m.theta) {
        return Err(Error::InvalidTheta(m.theta));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidDgp(format!("sampling interval {h} must be positive")));
    }
    if m.horizon < 1 || m.beta_star.is_empty() {
        return Err(Error::InvalidDgp("need a horizon of at least 1 and one predictor".into()));
    }
    let q = m.beta_star.len();
    let tau = m.horizon;
    let sh = h.sqrt();
    // dx[j] holds ΔX_{k} for k = j + 1 - τ, k = 1-τ ..= t
    let mut dx = vec![vec![0.0; q]; t + tau];
    for (j, row) in dx.iter_mut().enumerate() {
        let k = j as f64 + 1.0 - tau as f64;
        let s = ((k - 1.0) * h).max(0.0);
        for v in row.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = (m.mu_x)(s) * h + (m.sigma_x)(s) * sh * z;
        }
    }
    let drift_scale = h.powf(1.0 - m.theta);
    let mut y = Vec::with_capacity(t);
    for k in 1..=t {
        let lagged = &dx[k - 1]; // ΔX_{k-τ}
        let signal: f64 = lagged.iter().zip(&m.beta_star).map(|(a, b)| a * b).sum();
        let z: f64 = rng.sample(StandardNormal);
        let s = k as f64 * h;
        y.push(signal + (m.mu_e)(s) * drift_scale + (m.sigma_e)(s - h) * sh * z);
    }
    // x[k] (zero-based) is ΔX at one-based time k, the lag-one predictor of y[k]
    let x = (0..t).map(|k| dx[k + tau - 1].clone()).collect();
    Ok(SimulatedPath { y, x, true_break_index: None })
}

/// Coefficient offset `(ln(T_n) n_T)^{-1/4}` of a local alternative.
pub fn local_alternative_offset(t_n: usize, n_t: usize) -> f64 {
    ((t_n as f64).ln() * n_t as f64).powf(-0.25)
}

/// The baseline size design with slope
/// `β_t = −0.44 + μ_β(t/T) (ln(T_n) n_T)^{-1/4}`, `T_n = T − T_m`.
pub fn simulate_local_alternative<R: Rng + ?Sized>(
    mu_beta: &dyn Fn(f64) -> f64,
    t: usize,
    t_m: usize,
    n_t: usize,
    rng: &mut R,
) -> Result<SimulatedPath<f64>> {
    if t < 20 || t_m >= t {
        return Err(Error::InvalidDgp(format!("need 20 <= T and T_m < T, got T={t}, T_m={t_m}")));
    }
    let offset = local_alternative_offset(t - t_m, n_t);
    let m = model(DgpFamily::S1);
    let tt = t as f64;
    Ok(run_model(&m, t, rng, &|_| 0.0, &|time| mu_beta(time as f64 / tt) * offset))
}

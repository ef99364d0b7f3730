//! Out-of-sample forecasting: per-origin least squares, losses and
//! surprise losses, and the mean-surprise-loss t-statistic.

use serde::{Deserialize, Serialize};

use crate::dgp::SimulatedPath;
use crate::error::{Error, Result};
use crate::sample::{LossSeries, SampleDesign, Scheme};
use crate::scalar::{max_abs, mean, Scalar};
use crate::teststats::{StatisticKind, TestReport};
use crate::variance::{newey_west, newey_west_lag, VarianceKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossFunction<T> {
    /// `a e²`.
    Quadratic { a: T },
    /// `a1 (exp(a2 e) − a2 e − 1)`.
    Linex { a1: T, a2: T },
    /// `a |e|`.
    AbsoluteError { a: T },
}

impl<T: Scalar> Default for LossFunction<T> {
    fn default() -> Self {
        LossFunction::Quadratic { a: T::one() }
    }
}

impl<T: Scalar> LossFunction<T> {
    pub fn quadratic() -> Self {
        Self::default()
    }

    pub fn linex(a1: T, a2: T) -> Result<Self> {
        let l = LossFunction::Linex { a1, a2 };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            LossFunction::Quadratic { a } | LossFunction::AbsoluteError { a } => a > T::zero(),
            LossFunction::Linex { a1, a2 } => a1 > T::zero() && a2 != T::zero() && a2.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidLoss(format!("invalid parameters in {self:?}")))
        }
    }

    #[inline]
    pub fn evaluate(&self, e: T) -> T {
        match *self {
            LossFunction::Quadratic { a } => a * e * e,
            LossFunction::Linex { a1, a2 } => a1 * ((a2 * e).exp_m1() - a2 * e),
            LossFunction::AbsoluteError { a } => a * e.abs(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossFunction::Quadratic { .. } => "quadratic",
            LossFunction::Linex { .. } => "linex",
            LossFunction::AbsoluteError { .. } => "absolute",
        }
    }
}

/// Coefficients used at each forecast origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorTrace<T> {
    /// Slopes, one row per origin.
    pub beta_hat: Vec<Vec<T>>,
    /// Intercepts, one per origin, when the model has one.
    pub intercepts: Option<Vec<T>>,
}

impl<T: Scalar> EstimatorTrace<T> {
    pub fn forecast(&self, k: usize, x: &[T]) -> T {
        let mut f = self.intercepts.as_ref().map_or(T::zero(), |c| c[k]);
        for (b, &v) in self.beta_hat[k].iter().zip(x) {
            f += *b * v;
        }
        f
    }
}

/// Least squares through Householder QR. `columns` are the regressors;
/// they are overwritten.
fn least_squares<T: Scalar>(mut columns: Vec<Vec<T>>, mut y: Vec<T>, origin: usize) -> Result<Vec<T>> {
    let p = columns.len();
    let n = y.len();
    if n < p + 1 {
        return Err(Error::InsufficientSample(format!(
            "estimation window at origin {origin} has {n} observations for {p} coefficients"
        )));
    }
    for k in 0..p {
        let norm = columns[k][k..].iter().fold(T::zero(), |a, &v| a.hypot(v));
        if norm == T::zero() {
            return Err(Error::SingularDesign { origin });
        }
        let alpha = if columns[k][k] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = columns[k][k..].to_vec();
        v[0] -= alpha;
        let vv = v.iter().fold(T::zero(), |a, &x| a + x * x);
        let reflect = |col: &mut [T]| {
            let dot = v.iter().zip(col.iter()).fold(T::zero(), |a, (&u, &c)| a + u * c);
            let f = T::lit(2.0) * dot / vv;
            for (c, &u) in col.iter_mut().zip(&v) {
                *c -= f * u;
            }
        };
        if vv > T::zero() {
            for col in columns.iter_mut().skip(k) {
                reflect(&mut col[k..]);
            }
            reflect(&mut y[k..]);
        }
    }
    let r: Vec<Vec<T>> = (0..p).map(|i| (0..p).map(|j| if i <= j { columns[j][i] } else { T::zero() }).collect()).collect();
    let sv = singular_values(&r);
    let smax = sv.iter().fold(T::zero(), |a, &s| a.max(s));
    let smin = sv.iter().fold(T::infinity(), |a, &s| a.min(s));
    if !(smax > T::zero()) || smin < T::lit(1e-10) * smax {
        return Err(Error::SingularDesign { origin });
    }
    let mut beta = vec![T::zero(); p];
    for i in (0..p).rev() {
        let mut s = y[i];
        for j in i + 1..p {
            s -= r[i][j] * beta[j];
        }
        beta[i] = s / r[i][i];
    }
    Ok(beta)
}

/// Singular values of a small square matrix by one-sided Jacobi
/// rotations on its columns.
fn singular_values<T: Scalar>(a: &[Vec<T>]) -> Vec<T> {
    let p = a.len();
    let mut cols: Vec<Vec<T>> = (0..p).map(|j| (0..p).map(|i| a[i][j]).collect()).collect();
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let alpha = cols[i].iter().fold(T::zero(), |s, &v| s + v * v);
                let beta = cols[j].iter().fold(T::zero(), |s, &v| s + v * v);
                let gamma = cols[i].iter().zip(&cols[j]).fold(T::zero(), |s, (&u, &v)| s + u * v);
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..p {
                    let (u, v) = (cols[i][k], cols[j][k]);
                    cols[i][k] = c * u - s * v;
                    cols[j][k] = s * u + c * v;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    cols.iter().map(|c| c.iter().fold(T::zero(), |s, &v| s.hypot(v))).collect()
}

fn check_path<T: Scalar>(path: &SimulatedPath<T>, design: &SampleDesign) -> Result<()> {
    if path.len() != design.total_obs {
        return Err(Error::InvalidDesign(format!(
            "path has {} observations but the design expects {}",
            path.len(),
            design.total_obs
        )));
    }
    if path.n_predictors() == 0 {
        return Err(Error::InvalidSeries("no predictors".into()));
    }
    Ok(())
}

/// Row of `x` paired with response `j` at the design's horizon.
#[inline]
fn predictor_row(design: &SampleDesign, j: usize) -> usize {
    j + 1 - design.horizon
}

fn fit_window<T: Scalar>(path: &SimulatedPath<T>, design: &SampleDesign, origin: usize, intercept: bool) -> Result<Vec<T>> {
    let w = design.estimation_window(origin);
    let q = path.n_predictors();
    let mut cols: Vec<Vec<T>> = Vec::with_capacity(q + 1);
    if intercept {
        cols.push(vec![T::one(); w.len()]);
    }
    for c in 0..q {
        cols.push(w.clone().map(|j| path.x[predictor_row(design, j)][c]).collect());
    }
    let y = path.y[w].to_vec();
    least_squares(cols, y, origin)
}

/// Least-squares coefficients at every forecast origin under the
/// design's scheme. `intercept` adds a constant regressor.
pub fn estimate_ols<T: Scalar>(path: &SimulatedPath<T>, design: &SampleDesign, intercept: bool) -> Result<EstimatorTrace<T>> {
    check_path(path, design)?;
    let origins = (0..design.out_sample).map(|k| design.origin(k));
    let fits: Vec<Vec<T>> = match design.scheme {
        Scheme::Fixed => {
            let b = fit_window(path, design, design.origin(0), intercept)?;
            vec![b; design.out_sample]
        }
        _ => origins.map(|o| fit_window(path, design, o, intercept)).collect::<Result<_>>()?,
    };
    let (intercepts, beta_hat) = if intercept {
        (Some(fits.iter().map(|b| b[0]).collect()), fits.into_iter().map(|b| b[1..].to_vec()).collect())
    } else {
        (None, fits)
    };
    Ok(EstimatorTrace { beta_hat, intercepts })
}

/// Out-of-sample losses `L(e/ψ)` with `ψ = √h`, and surprise losses
/// net of the average fitted-residual loss over the scheme's window.
pub fn compute_losses<T: Scalar>(
    path: &SimulatedPath<T>,
    design: &SampleDesign,
    trace: &EstimatorTrace<T>,
    loss: &LossFunction<T>,
) -> Result<LossSeries<T>> {
    check_path(path, design)?;
    loss.validate()?;
    if trace.beta_hat.len() != design.out_sample {
        return Err(Error::InvalidDesign("estimator trace does not match the design".into()));
    }
    let inv_psi = T::one() / T::lit(design.sampling_interval).sqrt();
    let tau = design.horizon;
    let in_sample_avg = |k: usize| -> T {
        let o = design.origin(k);
        let w = design.estimation_window(o);
        let n = T::of_usize(w.len());
        let mut s = T::zero();
        for j in w {
            let e = path.y[j] - trace.forecast(k, &path.x[predictor_row(design, j)]);
            s += loss.evaluate(e * inv_psi);
        }
        s / n
    };
    let fixed_avg = (design.scheme == Scheme::Fixed).then(|| in_sample_avg(0));
    let mut values = Vec::with_capacity(design.out_sample);
    let mut surprise = Vec::with_capacity(design.out_sample);
    for k in 0..design.out_sample {
        let o = design.origin(k);
        let e = path.y[o + tau] - trace.forecast(k, &path.x[o + 1]);
        let l = loss.evaluate(e * inv_psi);
        let avg = fixed_avg.unwrap_or_else(|| in_sample_avg(k));
        values.push(l);
        surprise.push(l - avg);
    }
    LossSeries::new(values, surprise, design.in_sample)
}

/// Variance inflation `1 + λ_hh − 2λ_fh` for estimation error in the
/// in-sample average loss, with `π = T_n / T_m`.
pub fn scheme_factor(design: &SampleDesign) -> f64 {
    let pi = design.out_sample as f64 / design.in_sample as f64;
    let (fh, hh) = match design.scheme {
        Scheme::Fixed => (0.0, pi),
        Scheme::Recursive => {
            let fh = 1.0 - (1.0 + pi).ln() / pi;
            (fh, 2.0 * fh)
        }
        Scheme::Rolling if pi <= 1.0 => (pi / 2.0, pi - pi * pi / 3.0),
        Scheme::Rolling => (1.0 - 1.0 / (2.0 * pi), 1.0 - 1.0 / (3.0 * pi)),
    };
    1.0 + hh - 2.0 * fh
}

/// t-statistic of the mean surprise loss,
/// `√T_n mean(SL) / (λ Ŝ)^{1/2}`, where `Ŝ` is the Bartlett long-run
/// variance of the surprise losses at lag `⌊T_n^{1/3}⌋` and `λ` the
/// [`scheme_factor`].
pub fn gr_tstat<T: Scalar>(series: &LossSeries<T>, design: &SampleDesign) -> Result<T> {
    gr_parts(series, design).map(|(t, _)| t)
}

fn gr_parts<T: Scalar>(series: &LossSeries<T>, design: &SampleDesign) -> Result<(T, T)> {
    let n = series.len();
    if n < 10 {
        return Err(Error::InsufficientSample(format!("t-statistic needs T_n >= 10, got {n}")));
    }
    let s = newey_west(&series.surprise, newey_west_lag(n));
    let scale = max_abs(&series.surprise);
    if !(s > T::lit(1e-12) * scale * scale) {
        return Err(Error::DegenerateVariance);
    }
    let sd = (T::lit(scheme_factor(design)) * s).sqrt();
    Ok((T::of_usize(n).sqrt() * mean(&series.surprise) / sd, sd))
}

/// Two-sided normal test on [`gr_tstat`]; `transformed` is `|t|`.
pub fn gr_test<T: Scalar>(series: &LossSeries<T>, design: &SampleDesign, alpha: f64) -> Result<TestReport<T>> {
    let (t, sd) = gr_parts(series, design)?;
    TestReport::assemble(StatisticKind::GRt, t, t.abs(), alpha, (0, 0), Some((VarianceKind::NeweyWest, Some(sd))))
}

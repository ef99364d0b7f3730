use forecast_instability::forecasting::LossFunction;
use forecast_instability::sample::*;
use forecast_instability::teststats::*;
use forecast_instability::variance::*;
use forecast_instability::Result;
use proptest::prelude::*;

const CHOICES: [VarianceChoice; 5] =
    [VarianceChoice::Q1, VarianceChoice::Nu2, VarianceChoice::Nu3, VarianceChoice::Nu4, VarianceChoice::NuL];

/// Positive losses with a random offset for the surprise losses, plus a
/// block length leaving at least three blocks.
fn series_strategy() -> impl Strategy<Value = (LossSeries<f64>, BlockPartition)> {
    (12usize..80).prop_flat_map(|t_n| (prop::collection::vec(0.05f64..20.0, t_n), 2usize..=t_n / 3, -5.0f64..5.0)).prop_map(
        |(values, n, shift)| {
            let t_n = values.len();
            let surprise = values.iter().map(|v| v - shift).collect();
            (LossSeries::new(values, surprise, 10).unwrap(), BlockPartition::new(t_n, n, 3).unwrap())
        },
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn try_raw(series: &LossSeries<f64>, part: &BlockPartition, kind: StatisticKind, choice: VarianceChoice) -> Result<f64> {
    run_test(series, part, kind, choice, 0.05).map(|r| r.raw)
}

fn raw(series: &LossSeries<f64>, part: &BlockPartition, kind: StatisticKind, choice: VarianceChoice) -> f64 {
    try_raw(series, part, kind, choice).unwrap()
}

/// Every statistic, or the first precondition error (for example a
/// block with no within-block variation).
fn all_raw(series: &LossSeries<f64>, part: &BlockPartition) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for kind in [StatisticKind::Bmax, StatisticKind::Gmax, StatisticKind::MBmax, StatisticKind::MGmax] {
        out.push((kind.name().to_string(), try_raw(series, part, kind, VarianceChoice::NuL)?));
    }
    for kind in [StatisticKind::Qmax, StatisticKind::MQmax, StatisticKind::QmaxG, StatisticKind::MQmaxG] {
        for c in CHOICES {
            out.push((format!("{kind}[{}]", c.name()), try_raw(series, part, kind, c)?));
        }
    }
    Ok(out)
}

fn estimates(series: &LossSeries<f64>, part: &BlockPartition) -> Result<Vec<(&'static str, f64)>> {
    let s = block_summaries(series, part)?;
    Ok(vec![
        ("nu2", nu2(&s)?.value),
        ("nu3", nu3(&s)?.value),
        ("nu4", nu4(&s)?.value),
        ("nuL", nu_l(series, part)?.value),
        ("q1", nu_q1(series, part)?.value),
        ("mq1", nu_mq1(series, part.n_t)?.value),
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn statistics_are_scale_free((series, part) in series_strategy(), c in prop::sample::select(vec![1e-6, 1.0, 1e6])) {
        let (base, base_nu) = (all_raw(&series, &part), estimates(&series, &part));
        prop_assume!(base.is_ok() && base_nu.is_ok());
        let scaled = series.scaled(c);
        // a valid input stays valid under rescaling
        for ((name, a), (_, b)) in base.unwrap().into_iter().zip(all_raw(&scaled, &part).unwrap()) {
            prop_assert!(rel(b, a) <= 1e-10, "{name}: {a} -> {b}");
        }
        for ((name, a), (_, b)) in base_nu.unwrap().into_iter().zip(estimates(&scaled, &part).unwrap()) {
            prop_assert!(rel(b, c * a) <= 1e-12, "{name}: {a} -> {b}");
        }
    }

    #[test]
    fn block_statistics_ignore_order_within_blocks((series, part) in series_strategy(), seed in any::<u64>()) {
        prop_assume!(all_raw(&series, &part).is_ok());
        // reverse or rotate each block, chosen by the seed bits
        let mut values = series.values.clone();
        let mut surprise = series.surprise.clone();
        for (b, r) in part.block_ranges().into_iter().enumerate() {
            if (seed >> (b % 64)) & 1 == 1 {
                values[r.clone()].reverse();
                surprise[r].reverse();
            } else {
                values[r.clone()].rotate_left(1);
                surprise[r].rotate_left(1);
            }
        }
        let shuffled = LossSeries::new(values, surprise, series.origin_index).unwrap();
        for kind in [StatisticKind::Bmax, StatisticKind::Gmax] {
            let (a, b) = (raw(&series, &part, kind, VarianceChoice::NuL), raw(&shuffled, &part, kind, VarianceChoice::NuL));
            prop_assert!(rel(b, a) <= 1e-9, "{kind}: {a} vs {b}");
        }
        for c in CHOICES {
            let (a, b) = (raw(&series, &part, StatisticKind::Qmax, c), raw(&shuffled, &part, StatisticKind::Qmax, c));
            prop_assert!(rel(b, a) <= 1e-9, "qmax[{}]: {a} vs {b}", c.name());
        }
    }

    #[test]
    fn block_length_grows_with_the_sample(t_n in 8usize..20_000, ito in any::<bool>(), eps in 0.0f64..0.2) {
        let regime = if ito { VolatilityRegime::Ito } else { VolatilityRegime::Lipschitz };
        let rule = BlockRule::new(regime, eps).unwrap();
        let (a, b) = (rule.base_length(t_n), rule.base_length(t_n + 1));
        prop_assert!(a <= b);
        if let Ok(p) = partition_for(t_n, &rule) {
            prop_assert!(p.m_t >= 3 && p.n_t >= 2);
            prop_assert!(p.covered() <= t_n && t_n - p.covered() < p.n_t);
        }
    }

    #[test]
    fn overlapping_window_count((n, t_n) in (2usize..100).prop_flat_map(|n| (Just(n), 3 * n..500))) {
        let part = BlockPartition::new(t_n, n, 3).unwrap();
        let centres = overlapping_windows(&part, t_n).unwrap();
        prop_assert_eq!(centres.len(), t_n - 2 * n + 1);
        prop_assert_eq!(centres[0], n);
        prop_assert_eq!(*centres.last().unwrap(), t_n - n);
    }

    #[test]
    fn limit_law_is_a_distribution(v in -20.0f64..40.0, dv in 1e-3f64..5.0) {
        let (a, b) = (cdf_v(v), cdf_v(v + dv));
        prop_assert!((0.0..=1.0).contains(&a) && a <= b);
        prop_assert!((a + survival_v(v) - 1.0).abs() < 1e-12);
        if a > 1e-300 && a < 1.0 {
            // rounding `a` to f64 alone moves the inverse by ε / (a·(−ln a))
            let conditioning = 4.0 * f64::EPSILON / (a * -a.ln());
            let err = (quantile_v(a).unwrap() - v).abs();
            prop_assert!(err <= 1e-12 * v.abs().max(1.0) + conditioning, "v={} error {:e}", v, err);
        }
    }

    #[test]
    fn quantile_inverts_the_distribution_function(q in 1e-12f64..1.0) {
        prop_assume!(q < 1.0);
        let back = cdf_v(quantile_v(q).unwrap());
        prop_assert!((back - q).abs() <= 1e-14 * q.max(1e-300) + 4.0 * f64::EPSILON, "q={} back={}", q, back);
    }

    #[test]
    fn critical_values_fall_as_alpha_grows(a in 1e-6f64..0.5, da in 1e-6f64..0.4) {
        prop_assert!(critical_value(a).unwrap() > critical_value(a + da).unwrap());
        prop_assert!(critical_value_for(StatisticKind::GRt, a).unwrap() > critical_value_for(StatisticKind::GRt, a + da).unwrap());
    }

    #[test]
    fn transforms_are_increasing(r in 0.0f64..5.0, dr in 1e-6f64..1.0, n in 2usize..500, m in 3usize..200) {
        for kind in [StatisticKind::Bmax, StatisticKind::Qmax, StatisticKind::Gmax] {
            prop_assert!(transform_nonoverlapping(r, n, m, kind).unwrap() < transform_nonoverlapping(r + dr, n, m, kind).unwrap());
        }
        for kind in [StatisticKind::MBmax, StatisticKind::MQmax, StatisticKind::MGmax] {
            prop_assert!(transform_overlapping(r, n, m, kind).unwrap() < transform_overlapping(r + dr, n, m, kind).unwrap());
        }
    }

    #[test]
    fn long_run_variance_is_nonnegative(xs in prop::collection::vec(-1e3f64..1e3, 2..200), lag in 0usize..30) {
        prop_assert!(newey_west(&xs, lag) >= -1e-9 * xs.iter().map(|x| x * x).sum::<f64>());
    }

    #[test]
    fn losses_are_nonnegative(e in -30.0f64..30.0, a in 0.1f64..3.0, a2 in 0.1f64..3.0) {
        let losses = [LossFunction::Quadratic { a }, LossFunction::linex(a, a2).unwrap(), LossFunction::AbsoluteError { a }];
        for l in losses {
            prop_assert!(l.evaluate(e) >= 0.0, "{} at {e}", l.name());
        }
    }

    #[test]
    fn decisions_are_monotone_in_alpha((series, part) in series_strategy(), a in 0.001f64..0.2) {
        let r = run_test(&series, &part, StatisticKind::MQmax, VarianceChoice::Q1, 0.05).unwrap();
        if r.rejects_at(a).unwrap() {
            prop_assert!(r.rejects_at(a * 1.5).unwrap());
        }
        prop_assert_eq!(r.reject, r.p_value < 0.05);
    }
}

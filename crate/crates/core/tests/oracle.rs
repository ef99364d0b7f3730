//! Library statistics against the naive loop references on random
//! short series.

mod common;

use common::naive;
use forecast_instability::sample::{BlockPartition, LossSeries};
use forecast_instability::teststats::*;
use forecast_instability::variance::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-12;

struct Case {
    series: LossSeries<f64>,
    part: BlockPartition,
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let t_n = rng.random_range(9..=60);
    let n = rng.random_range(2..=t_n / 3);
    let shift: f64 = rng.random_range(-2.0..2.0);
    let jump = rng.random_range(0..t_n);
    let values: Vec<f64> = (0..t_n)
        .map(|k| {
            let z: f64 = rng.random_range(-2.5..2.5);
            (z + if k >= jump { 0.7 } else { 0.0 }).exp()
        })
        .collect();
    let surprise = values.iter().map(|v| v - shift).collect();
    Case { series: LossSeries::new(values, surprise, 50).unwrap(), part: BlockPartition::new(t_n, n, 3).unwrap() }
}

fn check(label: &str, got: f64, want: f64) {
    let e = naive::rel_err(got, want);
    assert!(e <= TOL, "{label}: {got} vs {want} (relative error {e:e})");
}

#[test]
fn every_statistic_matches_the_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..200 {
        let Case { series, part } = random_case(&mut rng);
        let (n, m) = (part.n_t, part.m_t);
        let sl = &series.surprise;
        let l = &series.values;
        let s = block_summaries(&series, &part).unwrap();
        check("bmax", b_max(&s).unwrap(), naive::b_max(sl, l, n, m));
        check("gmax", g_max(&s).unwrap(), naive::g_max(sl, l, n, m));
        check("qmax", q_max(&s, 1.7).unwrap(), naive::q_max(sl, n, m, 1.7));
        check("mbmax", mb_max(&series, n).unwrap(), naive::mb_max(sl, l, n));
        check("mgmax", mg_max(&series, n).unwrap(), naive::mg_max(sl, l, n));
        check("mqmax", mq_max(&series, n, 0.3).unwrap(), naive::mq_max(sl, l, n, 0.3));

        let q1 = run_test(&series, &part, StatisticKind::Qmax, VarianceChoice::Q1, 0.05).unwrap();
        check("qmax[q1]", q1.raw, naive::q_max_blockwise(sl, n, m));
        let mq1 = run_test(&series, &part, StatisticKind::MQmax, VarianceChoice::Q1, 0.05).unwrap();
        check("mqmax[mq1]", mq1.raw, naive::mq_max_windowwise(sl, l, n));
    }
}

#[test]
fn every_variance_estimator_matches_the_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(62);
    for _ in 0..200 {
        let Case { series, part } = random_case(&mut rng);
        let (n, m) = (part.n_t, part.m_t);
        let sl = &series.surprise;
        let s = block_summaries(&series, &part).unwrap();
        check("nu2", nu2(&s).unwrap().value, naive::nu2(sl, n, m));
        check("nu3", nu3(&s).unwrap().value, naive::nu3(sl, n, m));
        check("nu4", nu4(&s).unwrap().value, naive::nu4(sl, n, m));
        check("nuL", nu_l(&series, &part).unwrap().value, naive::nu_l(&series.values, n, m));

        let q1 = nu_q1(&series, &part).unwrap();
        for (b, v) in q1.per_block.unwrap().iter().enumerate() {
            check("nu_q1", *v, (2.0 * naive::var(&sl[b * n..(b + 1) * n])).sqrt());
        }
        let mq1 = nu_mq1(&series, n).unwrap();
        for (k, v) in mq1.per_block.unwrap().iter().enumerate() {
            let i = n + k;
            check("nu_mq1", *v, (2.0 * naive::var(&sl[i..i + n])).sqrt());
        }

        let lag = rng.random_range(0..8).min(sl.len() - 1);
        check("newey_west", newey_west(sl, lag), naive::newey_west(sl, lag));
    }
}

#[test]
fn studentized_statistics_use_the_selected_estimator() {
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    for _ in 0..50 {
        let Case { series, part } = random_case(&mut rng);
        let (n, m) = (part.n_t, part.m_t);
        let sl = &series.surprise;
        for (choice, nu) in [
            (VarianceChoice::Nu2, naive::nu2(sl, n, m)),
            (VarianceChoice::Nu3, naive::nu3(sl, n, m)),
            (VarianceChoice::Nu4, naive::nu4(sl, n, m)),
            (VarianceChoice::NuL, naive::nu_l(&series.values, n, m)),
            (VarianceChoice::Known(2.5), 2.5),
        ] {
            let q = run_test(&series, &part, StatisticKind::Qmax, choice, 0.05).unwrap();
            check("qmax", q.raw, naive::q_max(sl, n, m, nu));
            let mq = run_test(&series, &part, StatisticKind::MQmax, choice, 0.05).unwrap();
            check("mqmax", mq.raw, naive::mq_max(sl, &series.values, n, nu));
        }
    }
}

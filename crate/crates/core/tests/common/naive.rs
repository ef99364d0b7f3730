//! Direct loop implementations of the block statistics and variance
//! estimators, written from the definitions without shared helpers.
#![allow(dead_code)]

pub fn mean(xs: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in xs {
        s += x;
    }
    s / xs.len() as f64
}

pub fn var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let mut s = 0.0;
    for x in xs {
        s += (x - m) * (x - m);
    }
    s / xs.len() as f64
}

fn block(xs: &[f64], n: usize, b: usize) -> &[f64] {
    &xs[b * n..(b + 1) * n]
}

pub fn b_max(sl: &[f64], l: &[f64], n: usize, m: usize) -> f64 {
    let mut best: f64 = 0.0;
    for b in 0..m - 1 {
        let d = mean(block(sl, n, b + 1)) - mean(block(sl, n, b));
        best = best.max((d / mean(block(l, n, b + 1))).abs());
    }
    best
}

pub fn g_max(sl: &[f64], l: &[f64], n: usize, m: usize) -> f64 {
    let mut best: f64 = 0.0;
    for b in 0..m - 1 {
        let d = mean(block(sl, n, b + 1)) - mean(block(sl, n, b));
        best = best.max(d.abs() / var(block(l, n, b + 1)).sqrt());
    }
    best
}

pub fn q_max(sl: &[f64], n: usize, m: usize, nu: f64) -> f64 {
    let mut best: f64 = 0.0;
    for b in 0..m - 1 {
        let d = mean(block(sl, n, b + 1)) - mean(block(sl, n, b));
        best = best.max(d.abs());
    }
    best / nu
}

/// Q studentized by `√(2 var)` of the surprise losses in the later block.
pub fn q_max_blockwise(sl: &[f64], n: usize, m: usize) -> f64 {
    let mut best: f64 = 0.0;
    for b in 0..m - 1 {
        let d = mean(block(sl, n, b + 1)) - mean(block(sl, n, b));
        best = best.max(d.abs() / (2.0 * var(block(sl, n, b + 1))).sqrt());
    }
    best
}

/// (left mean − right mean of SL, right window of SL, right window of L)
/// for every centre `i = n..=T_n-n`.
fn windows<'a>(sl: &'a [f64], l: &'a [f64], n: usize) -> Vec<(f64, &'a [f64], &'a [f64])> {
    let t_n = sl.len();
    let mut out = Vec::new();
    let mut i = n;
    while i + n <= t_n {
        let left = mean(&sl[i - n..i]);
        let right = mean(&sl[i..i + n]);
        out.push((left - right, &sl[i..i + n], &l[i..i + n]));
        i += 1;
    }
    out
}

pub fn mb_max(sl: &[f64], l: &[f64], n: usize) -> f64 {
    windows(sl, l, n).iter().map(|(d, _, r)| (d / mean(r)).abs()).fold(0.0, f64::max)
}

pub fn mg_max(sl: &[f64], l: &[f64], n: usize) -> f64 {
    windows(sl, l, n).iter().map(|(d, _, r)| d.abs() / var(r).sqrt()).fold(0.0, f64::max)
}

pub fn mq_max(sl: &[f64], l: &[f64], n: usize, nu: f64) -> f64 {
    windows(sl, l, n).iter().map(|(d, _, _)| d.abs()).fold(0.0, f64::max) / nu
}

pub fn mq_max_windowwise(sl: &[f64], l: &[f64], n: usize) -> f64 {
    windows(sl, l, n).iter().map(|(d, s, _)| d.abs() / (2.0 * var(s)).sqrt()).fold(0.0, f64::max)
}

fn diffs(sl: &[f64], n: usize, m: usize) -> Vec<f64> {
    (0..m - 1).map(|b| mean(block(sl, n, b + 1)) - mean(block(sl, n, b))).collect()
}

pub fn nu2(sl: &[f64], n: usize, m: usize) -> f64 {
    let s: f64 = diffs(sl, n, m).iter().map(|d| d.abs()).sum();
    (std::f64::consts::PI * n as f64).sqrt() / (2.0 * (m - 1) as f64) * s
}

pub fn nu3(sl: &[f64], n: usize, m: usize) -> f64 {
    let s: f64 = diffs(sl, n, m).iter().map(|d| d * d).sum();
    (n as f64 * s / (2.0 * (m - 1) as f64)).sqrt()
}

pub fn nu4(sl: &[f64], n: usize, m: usize) -> f64 {
    let mut a: Vec<f64> = diffs(sl, n, m).iter().map(|d| d.abs()).collect();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let k = a.len();
    let med = if k % 2 == 1 { a[k / 2] } else { 0.5 * (a[k / 2 - 1] + a[k / 2]) };
    (n as f64).sqrt() / (2f64.sqrt() * 0.6744897501960817) * med
}

/// Self-normalized ratio times the pooled within-block loss variance,
/// over blocks `1..m`.
pub fn nu_l(l: &[f64], n: usize, m: usize) -> f64 {
    let mut zeta_sq = 0.0;
    let mut pooled = 0.0;
    for b in 1..m {
        let v = var(block(l, n, b));
        let z = (n as f64).sqrt() * (mean(block(l, n, b)) - mean(block(l, n, b - 1))) / v.sqrt();
        zeta_sq += z * z;
        pooled += v;
    }
    let m1 = (m - 1) as f64;
    (zeta_sq / (2.0 * m1) * pooled / m1).sqrt()
}

pub fn newey_west(xs: &[f64], lag: usize) -> f64 {
    let t = xs.len();
    let m = mean(xs);
    let mut total = 0.0;
    for j in 0..=lag {
        let mut g = 0.0;
        for k in j..t {
            g += (xs[k] - m) * (xs[k - j] - m);
        }
        g /= t as f64;
        let w = if j == 0 { 1.0 } else { 2.0 * (1.0 - j as f64 / (lag + 1) as f64) };
        total += w * g;
    }
    total
}

/// Largest relative discrepancy, with `floor` guarding values near zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

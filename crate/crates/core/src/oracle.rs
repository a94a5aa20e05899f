//! Exact small-instance computations for shuffled k-ary randomized response.
//!
//! These are the ground truth the amplification bounds are tested against.

use crate::amplification::delta_mixture;
use crate::numeric::{ln_factorial_table, KahanSum};
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Default party-count cap for histogram enumeration.
pub const DIVERGENCE_MAX_N: u64 = 10;
/// Cap on `m` for the exact clipped expectation and on `n` for the exact mixture.
pub const CLIPPED_MAX_M: u64 = 10_000;
/// Cap on the number of histograms enumerated.
const MAX_HISTOGRAMS: u64 = 5_000_000;

fn check_krr(k: u32, eps0: f64, epsilon: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "randomized response needs k >= 2, got {k}"
        )));
    }
    if !(eps0 >= 0.0 && eps0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "eps0 must be finite and >= 0, got {eps0}"
        )));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be finite and >= 0, got {epsilon}"
        )));
    }
    Ok(())
}

fn krr_gamma(k: u32, eps0: f64) -> f64 {
    k as f64 / (eps0.exp() + k as f64 - 1.0)
}

/// Output pmf of one user holding `x`, indexed by symbol − 1.
fn krr_pmf(k: u32, eps0: f64, x: u32) -> Vec<f64> {
    let g = krr_gamma(k, eps0);
    let mut p = vec![g / k as f64; k as usize];
    p[(x - 1) as usize] += 1.0 - g;
    p
}

fn histogram_count(n: u64, k: u32) -> u64 {
    // C(n+k−1, k−1), saturating.
    let mut c: u128 = 1;
    for i in 1..k as u128 {
        c = c * (n as u128 + i) / i;
        if c > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    c as u64
}

/// All count vectors of length `k` summing to `n`, in lexicographic order.
fn compositions(n: u32, k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; k];
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for c in (0..=left).rev() {
            cur[pos] = c;
            rec(pos + 1, left - c, cur, out);
        }
    }
    rec(0, n, &mut cur, &mut out);
    out
}

/// Convolve one more user with output pmf `p` into a histogram distribution.
fn add_user(dist: &BTreeMap<Vec<u32>, f64>, p: &[f64]) -> BTreeMap<Vec<u32>, f64> {
    let mut next = BTreeMap::new();
    for (counts, w) in dist {
        for (j, &pj) in p.iter().enumerate() {
            let mut c = counts.clone();
            c[j] += 1;
            *next.entry(c).or_insert(0.0) += w * pj;
        }
    }
    next
}

fn check_histogram_size(n: u64, k: u32) -> Result<()> {
    if histogram_count(n, k) > MAX_HISTOGRAMS {
        return Err(Error::Resource(format!("too many histograms for n={n} k={k}")));
    }
    Ok(())
}

fn histogram_map(k: u32, eps0: f64, inputs: &[u32]) -> BTreeMap<Vec<u32>, f64> {
    let mut dist = BTreeMap::new();
    dist.insert(vec![0; k as usize], 1.0);
    for &x in inputs {
        dist = add_user(&dist, &krr_pmf(k, eps0, x));
    }
    dist
}

/// Distribution of the shuffled output for the given inputs, as `(counts, probability)`
/// with counts indexed by symbol − 1. Built by convolving users one at a time.
pub fn krr_histogram_distribution(k: u32, eps0: f64, inputs: &[u32]) -> Result<Vec<(Vec<u32>, f64)>> {
    check_krr(k, eps0, 0.0)?;
    if let Some(&x) = inputs.iter().find(|&&x| x == 0 || x > k) {
        return Err(Error::Domain(format!("symbol {x} outside 1..={k}")));
    }
    check_histogram_size(inputs.len() as u64, k)?;
    Ok(histogram_map(k, eps0, inputs).into_iter().collect())
}

/// `Σ_Y [P(Y) − e^ε P′(Y)]₊` over histograms `Y`, Kahan-summed.
fn hockey_stick(p: &[f64], q: &[f64], epsilon: f64) -> f64 {
    let e = epsilon.exp();
    let mut acc = KahanSum::new();
    for (&a, &b) in p.iter().zip(q) {
        let d = a - e * b;
        if d > 1e-15 {
            acc.add(d);
        }
    }
    acc.value().clamp(0.0, 1.0)
}

/// Divergence between the shuffled outputs on two arbitrary neighbouring datasets
/// that share `common` and differ in one user (`last` versus `last_prime`).
pub fn exact_shuffled_divergence_krr_datasets(
    k: u32,
    eps0: f64,
    epsilon: f64,
    common: &[u32],
    last: u32,
    last_prime: u32,
) -> Result<f64> {
    check_krr(k, eps0, epsilon)?;
    let mut x = common.to_vec();
    x.push(last);
    let mut xp = common.to_vec();
    xp.push(last_prime);
    let p = krr_histogram_distribution(k, eps0, &x)?;
    let q = krr_histogram_distribution(k, eps0, &xp)?;
    debug_assert!(p.iter().zip(&q).all(|(a, b)| a.0 == b.0));
    let pv: Vec<f64> = p.into_iter().map(|(_, w)| w).collect();
    let qv: Vec<f64> = q.into_iter().map(|(_, w)| w).collect();
    Ok(hockey_stick(&pv, &qv, epsilon))
}

/// Exact `δ(ε)` of shuffled k-RR: the largest hockey-stick divergence over all
/// neighbouring datasets of `n` users.
///
/// Relabelling symbols fixes the differing user to `1` versus `2`; the common users then
/// range over all histograms, with counts on the interchangeable symbols `3..=k` sorted.
pub fn exact_shuffled_divergence_krr(n: u64, k: u32, eps0: f64, epsilon: f64) -> Result<f64> {
    exact_shuffled_divergence_krr_capped(n, k, eps0, epsilon, DIVERGENCE_MAX_N)
}

/// [`exact_shuffled_divergence_krr`] with an explicit cap on `n`.
pub fn exact_shuffled_divergence_krr_capped(n: u64, k: u32, eps0: f64, epsilon: f64, max_n: u64) -> Result<f64> {
    check_divergence_args(n, k, eps0, epsilon, max_n)?;
    let mu_x = krr_pmf(k, eps0, 1);
    let mu_xp = krr_pmf(k, eps0, 2);
    let mut worst = 0.0f64;
    for common in compositions((n - 1) as u32, k as usize) {
        if common[2.min(common.len())..].windows(2).any(|w| w[0] < w[1]) {
            continue;
        }
        let inputs: Vec<u32> = common
            .iter()
            .enumerate()
            .flat_map(|(j, &c)| std::iter::repeat_n(j as u32 + 1, c as usize))
            .collect();
        let base = histogram_map(k, eps0, &inputs);
        let p: Vec<f64> = add_user(&base, &mu_x).into_values().collect();
        let q: Vec<f64> = add_user(&base, &mu_xp).into_values().collect();
        worst = worst.max(hockey_stick(&p, &q, epsilon));
    }
    Ok(worst)
}

/// Divergence on the symmetric pair `x = (1,…,1)` versus `x′ = (2,1,…,1)`.
///
/// Not the worst case in general: mixed common inputs, or for `k ≥ 3` a differing user whose
/// symbols both differ from the common one, can be more distinguishable.
pub fn exact_canonical_divergence_krr(n: u64, k: u32, eps0: f64, epsilon: f64) -> Result<f64> {
    check_divergence_args(n, k, eps0, epsilon, DIVERGENCE_MAX_N)?;
    let (p, q) = canonical_pair_distributions(n, k, eps0);
    Ok(hockey_stick(&p, &q, epsilon))
}

fn check_divergence_args(n: u64, k: u32, eps0: f64, epsilon: f64, max_n: u64) -> Result<()> {
    check_krr(k, eps0, epsilon)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if n > max_n {
        return Err(Error::Resource(format!(
            "n = {n}, k = {k} exceeds the enumeration cap (n <= {max_n})"
        )));
    }
    check_histogram_size(n, k)
}

/// Probabilities of every histogram under `x` and `x′`, in composition order.
///
/// The `n − 1` common users give a multinomial; the differing user is one more convolution.
fn canonical_pair_distributions(n: u64, k: u32, eps0: f64) -> (Vec<f64>, Vec<f64>) {
    let lf = ln_factorial_table(n as usize);
    let common = krr_pmf(k, eps0, 1);
    let ln_common: Vec<f64> = common.iter().map(|p| p.ln()).collect();
    let mu_x = krr_pmf(k, eps0, 1);
    let mu_xp = krr_pmf(k, eps0, 2);
    let rest = (n - 1) as usize;
    let ln_multinomial = |c: &[u32]| -> f64 {
        let mut v = lf[rest];
        for (i, &ci) in c.iter().enumerate() {
            v += ci as f64 * ln_common[i] - lf[ci as usize];
        }
        v
    };
    let hists = compositions(n as u32, k as usize);
    let mut p = Vec::with_capacity(hists.len());
    let mut q = Vec::with_capacity(hists.len());
    let mut scratch = vec![0u32; k as usize];
    for y in &hists {
        let (mut a, mut b) = (KahanSum::new(), KahanSum::new());
        for j in 0..k as usize {
            if y[j] == 0 {
                continue;
            }
            scratch.copy_from_slice(y);
            scratch[j] -= 1;
            let w = ln_multinomial(&scratch).exp();
            a.add(mu_x[j] * w);
            b.add(mu_xp[j] * w);
        }
        p.push(a.value());
        q.push(b.value());
    }
    (p, q)
}

/// Total probability mass of the canonical pair's histogram distributions.
pub fn canonical_pair_mass(n: u64, k: u32, eps0: f64) -> Result<(f64, f64)> {
    check_krr(k, eps0, 0.0)?;
    if n == 0 || n > DIVERGENCE_MAX_N {
        return Err(Error::Resource(format!("n = {n} outside 1..={DIVERGENCE_MAX_N}")));
    }
    let (p, q) = canonical_pair_distributions(n, k, eps0);
    let sum = |v: &[f64]| {
        let mut acc = KahanSum::new();
        v.iter().for_each(|&x| acc.add(x));
        acc.value()
    };
    Ok((sum(&p), sum(&q)))
}

fn clipped_expectation_with_table(m: u64, k: u32, eps0: f64, epsilon: f64, lf: &[f64]) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let g = krr_gamma(k, eps0);
    let e = epsilon.exp();
    let kf = k as f64;
    let shift = m as f64 * g * -epsilon.exp_m1();
    let scale = (1.0 - g) * kf;
    let ln_hit = -kf.ln();
    let ln_miss = if k > 2 {
        (1.0 - 2.0 / kf).ln()
    } else {
        f64::NEG_INFINITY
    };
    let mu = m as usize;
    let mut acc = KahanSum::new();
    for nx in 0..=mu {
        let (lo, hi) = if k == 2 { (mu - nx, mu - nx) } else { (0, mu - nx) };
        for nxp in lo..=hi {
            let value = shift + scale * (nx as f64 - e * nxp as f64);
            if value <= 0.0 {
                continue;
            }
            let rest = mu - nx - nxp;
            let rest_term = if rest == 0 { 0.0 } else { rest as f64 * ln_miss };
            let lw = lf[mu] - lf[nx] - lf[nxp] - lf[rest] + (nx + nxp) as f64 * ln_hit + rest_term;
            acc.add(lw.exp() * value);
        }
    }
    acc.value().max(0.0)
}

/// Exact `E[Σ_{i≤m} L_i]₊` for k-RR, `x = 1`, `x′ = 2`.
///
/// `Σ L = mγ(1−e^ε) + (1−γ)k(N_x − e^ε N_x′)` with `(N_x, N_x′)` the counts of the two
/// symbols among `m` uniform blanket draws.
pub fn exact_clipped_expectation_krr(m: u64, k: u32, eps0: f64, epsilon: f64) -> Result<f64> {
    check_krr(k, eps0, epsilon)?;
    if m > CLIPPED_MAX_M {
        return Err(Error::Resource(format!("m = {m} exceeds the cap {CLIPPED_MAX_M}")));
    }
    let lf = ln_factorial_table(m as usize);
    Ok(clipped_expectation_with_table(m, k, eps0, epsilon, &lf))
}

/// The mixture bound evaluated with the exact per-m clipped expectations.
pub fn exact_mixture_delta_krr(n: u64, k: u32, eps0: f64, epsilon: f64) -> Result<f64> {
    check_krr(k, eps0, epsilon)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if n > CLIPPED_MAX_M {
        return Err(Error::Resource(format!("n = {n} exceeds the cap {CLIPPED_MAX_M}")));
    }
    let lf = ln_factorial_table(n as usize);
    delta_mixture(n, krr_gamma(k, eps0), |m| {
        clipped_expectation_with_table(m, k, eps0, epsilon, &lf)
    })
}

//! Numerical helpers shared by the bound and oracle code.

use statrs::function::erf;
use std::f64::consts::{LN_2, PI, SQRT_2};

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        // Neumaier variant: also correct when |x| > |sum|.
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `ln Σ exp(x_i)` with a max shift. Returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    let mut acc = KahanSum::new();
    for &x in xs {
        acc.add((x - max).exp());
    }
    max + acc.value().ln()
}

/// Standard normal CDF, accurate in both tails.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Standard normal quantile.
pub fn std_normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erf::erfc_inv(2.0 * p)
}

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// `φ(u) = (1+u)ln(1+u) − u`, stable near zero.
pub fn bennett_phi(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        u2 / 2.0 - u2 * u / 6.0 + u2 * u2 / 12.0
    } else {
        (1.0 + u) * u.ln_1p() - u
    }
}

/// Table of `ln(i!)` for `i = 0..=n`, built by summation so it is exact to rounding.
pub fn ln_factorial_table(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = KahanSum::new();
    table.push(0.0);
    for i in 1..=n {
        acc.add((i as f64).ln());
        table.push(acc.value());
    }
    table
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln(n!) − ln(√(2πn)(n/e)^n)`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        let mut lf = 0.0;
        let mut i = 2.0;
        while i <= n {
            lf += f64::ln(i);
            i += 1.0;
        }
        return lf - ((n + 0.5) * n.ln() - n + LN_SQRT_2PI);
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/np) + np − x` without cancellation.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        let mut j = 1.0;
        loop {
            ej *= v2;
            let s1 = s + ej / (2.0 * j + 1.0);
            if s1 == s {
                return s1;
            }
            s = s1;
            j += 1.0;
        }
    }
    x * (x / np).ln() + np - x
}

/// `ln[C(n,m) p^m (1−p)^{n−m}]` by the saddle-point expansion; accurate for n up to 10⁹.
pub fn ln_binomial_pmf(m: u64, n: u64, p: f64) -> f64 {
    if m > n {
        return f64::NEG_INFINITY;
    }
    if p == 0.0 {
        return if m == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p == 1.0 {
        return if m == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    let q = 1.0 - p;
    if m == 0 {
        return nf * (-p).ln_1p();
    }
    if m == n {
        return nf * p.ln();
    }
    let x = m as f64;
    let lc = stirlerr(nf) - stirlerr(x) - stirlerr(nf - x) - bd0(x, nf * p) - bd0(nf - x, nf * q);
    let lf = LN_2 + PI.ln() + x.ln() + (-x / nf).ln_1p();
    lc - 0.5 * lf
}

//! Single-message real summation: parameter choice, analyzer and MSE bound.

use crate::randomizers::RandomizerSpec;
use crate::{Error, Histogram, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummationParams {
    /// Blanket-mass parameter; each user sends a uniform symbol with probability `c(k+1)/n`.
    pub c: f64,
    /// Fixed-point precision; messages lie in `{0..k}`.
    pub k: u32,
    pub n: u64,
    pub gamma: f64,
}

impl SummationParams {
    /// `c = 0` is allowed and disables the blanket (no privacy, exact rounding only).
    pub fn new(c: f64, k: u32, n: u64) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParameter("precision k must be >= 1".into()));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(format!("need n >= 2 parties, got {n}")));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("c must be finite and >= 0, got {c}")));
        }
        let gamma = c * (k as f64 + 1.0) / n as f64;
        if gamma >= 1.0 {
            return Err(Error::Infeasible(format!(
                "c(k+1)/n = {gamma} >= 1 for c = {c}, k = {k}, n = {n}; more parties are needed"
            )));
        }
        Ok(Self { c, k, n, gamma })
    }

    pub fn randomizer(&self) -> RandomizerSpec {
        RandomizerSpec::Summation {
            c: self.c,
            k: self.k,
            n: self.n,
        }
    }
}

fn check_budget(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    Ok(())
}

/// Blanket probability that makes shuffled k-RR over `k` symbols `(ε, δ)`-DP:
/// `max{14k ln(2/δ)/((n−1)ε²), 27k/((n−1)ε)}`. Only meaningful when below 1.
pub fn histogram_gamma(k: u32, n: u64, epsilon: f64, delta: f64) -> Result<f64> {
    check_budget(epsilon, delta)?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2 parties, got {n}")));
    }
    let (kf, m) = (k as f64, (n - 1) as f64);
    let by_delta = 14.0 * kf * (2.0 / delta).ln() / (m * epsilon * epsilon);
    let by_eps = 27.0 * kf / (m * epsilon);
    Ok(by_delta.max(by_eps))
}

/// [`histogram_gamma`] that reports an infeasibility error when the value is not below 1.
pub fn histogram_gamma_checked(k: u32, n: u64, epsilon: f64, delta: f64) -> Result<f64> {
    let g = histogram_gamma(k, n, epsilon, delta)?;
    if g >= 1.0 {
        return Err(Error::Infeasible(format!("required blanket probability {g} >= 1")));
    }
    Ok(g)
}

/// `c = max{14 ln(2/δ)/ε², 27/ε}`.
pub fn blanket_mass(epsilon: f64, delta: f64) -> Result<f64> {
    check_budget(epsilon, delta)?;
    Ok((14.0 * (2.0 / delta).ln() / (epsilon * epsilon)).max(27.0 / epsilon))
}

/// `c` from the budget, `k = ⌈(n/c)^{1/3}⌉`, `γ = c(k+1)/n`.
pub fn choose_parameters(epsilon: f64, delta: f64, n: u64) -> Result<SummationParams> {
    let c = blanket_mass(epsilon, delta)?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2 parties, got {n}")));
    }
    let k = (n as f64 / c).cbrt().ceil().max(1.0) as u32;
    SummationParams::new(c, k, n)
}

/// Debiased sum estimate `(ẑ − c(k+1)/2)/(1 − c(k+1)/n)` with `ẑ = (1/k)Σy`.
///
/// The estimate is not clipped to `[0, n]`.
pub fn analyze(messages: &Histogram, params: &SummationParams) -> Result<f64> {
    if messages.total() != params.n {
        return Err(Error::Domain(format!(
            "histogram holds {} messages, expected n = {}",
            messages.total(),
            params.n
        )));
    }
    if let Some(max) = messages.max_symbol() {
        if max > params.k {
            return Err(Error::Domain(format!("message {max} outside 0..={}", params.k)));
        }
    }
    let total: f64 = messages.iter().map(|(s, c)| s as f64 * c as f64).sum();
    let z_hat = total / params.k as f64;
    Ok((z_hat - params.c * (params.k as f64 + 1.0) / 2.0) / (1.0 - params.gamma))
}

/// `n/(1−γ)² · (1/(4k²) + c(k+1)/(2n))`.
pub fn theoretical_mse_bound(params: &SummationParams) -> f64 {
    let (n, k) = (params.n as f64, params.k as f64);
    n / (1.0 - params.gamma).powi(2) * (1.0 / (4.0 * k * k) + params.c * (k + 1.0) / (2.0 * n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_gamma_example() {
        let g = histogram_gamma(2, 1_000_000, 1.0, 0.01).unwrap();
        let want = 2.0 * 14.0 * 200f64.ln() / 999_999.0;
        assert!((g - want).abs() < 1e-18);
        assert!((g - 1.4835e-4).abs() < 1e-7);
        assert!(14.0 * 200f64.ln() > 27.0);
        assert!(histogram_gamma(2, 1_000_000_000, 1.0, 0.01).unwrap() < 1e-6);
        assert!(matches!(
            histogram_gamma_checked(2, 10, 1.0, 0.01),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn parameter_examples() {
        let p = choose_parameters(1.0, 0.01, 1_000_000).unwrap();
        assert!((p.c - 74.176).abs() < 1e-3);
        assert_eq!(p.k, 24);
        assert!((p.gamma - 1.8544e-3).abs() < 1e-7);
        assert!(matches!(choose_parameters(1.0, 0.01, 100), Err(Error::Infeasible(_))));
        assert_eq!(blanket_mass(1.0, 1.0).unwrap(), 27.0);
        assert!(choose_parameters(1.5, 0.01, 1_000_000).is_err());
    }

    #[test]
    fn analyzer_examples() {
        let p = SummationParams::new(0.0, 2, 3).unwrap();
        let h = Histogram::from_symbols([2, 0, 1]);
        assert_eq!(analyze(&h, &p).unwrap(), 1.5);

        let p = SummationParams::new(3.0, 4, 50).unwrap();
        let mut h = Histogram::new();
        h.add(4, 50);
        let want = (50.0 - p.gamma * 50.0 / 2.0) / (1.0 - p.gamma);
        assert!((analyze(&h, &p).unwrap() - want).abs() < 1e-12);

        assert!(matches!(
            analyze(&Histogram::from_symbols([1, 1]), &p),
            Err(Error::Domain(_))
        ));
        let mut h = Histogram::new();
        h.add(5, 50);
        assert!(matches!(analyze(&h, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn mse_bound_examples() {
        let p = choose_parameters(1.0, 0.01, 1_000_000).unwrap();
        let b = theoretical_mse_bound(&p);
        assert!((b - 1366.5).abs() <= 0.5, "b={b}");
        assert!((b - 1_366.295_967_205_471_7).abs() < 1e-8);
        let p = SummationParams::new(0.0, 7, 1000).unwrap();
        assert_eq!(theoretical_mse_bound(&p), 1000.0 / (4.0 * 49.0));
    }

    #[test]
    fn mse_bound_grows_like_cube_root() {
        let b = |n| theoretical_mse_bound(&choose_parameters(1.0, 0.01, n).unwrap());
        let r = b(1_000_000) / b(10_000);
        let base = 100f64.cbrt();
        assert!(r >= 0.75 * base && r <= 1.35 * base, "ratio {r}");
    }

    #[test]
    fn chosen_parameters_meet_histogram_hypothesis() {
        for &(eps, delta) in &[(1.0, 0.01), (0.5, 1e-6), (0.1, 1e-9)] {
            for n in [100_000u64, 10_000_000] {
                let Ok(p) = choose_parameters(eps, delta, n) else {
                    continue;
                };
                let lhs = p.gamma * (n - 1) as f64 / (p.k as f64 + 1.0);
                let need = blanket_mass(eps, delta).unwrap() * (n - 1) as f64 / n as f64;
                assert!(lhs >= need * (1.0 - 1e-12));
            }
        }
    }
}

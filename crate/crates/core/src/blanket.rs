//! Blanket decomposition `μ_x = (1−γ)ν_x + γω` and the privacy amplification variable.

use crate::numeric::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
use crate::randomizers::{density, sample_laplace, RandomizerSpec, Value};
use crate::{Error, Result};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileSource {
    Generic,
    RandomizedResponse,
    Laplace,
}

/// Mean, range and second-moment bound of `L = (μ_x(W) − e^ε μ_x′(W))/ω(W)`.
///
/// `E L = −a = 1 − e^ε`, `b_minus ≤ L ≤ b_plus`, `E L² ≤ c2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlanketProfile {
    pub gamma: f64,
    pub a: f64,
    pub b_minus: f64,
    pub b_plus: f64,
    pub c2: f64,
    pub epsilon: f64,
    pub source: ProfileSource,
}

impl BlanketProfile {
    /// `b₊ − b₋`.
    pub fn width(&self) -> f64 {
        self.b_plus - self.b_minus
    }
}

/// Total variation similarity of the randomizer.
pub fn gamma(spec: &RandomizerSpec) -> Result<f64> {
    spec.validate()?;
    Ok(spec.blanket_probability())
}

/// `e^{−ε₀}`, the similarity every ε₀-LDP randomizer is guaranteed.
pub fn gamma_lower_bound(eps0: f64) -> f64 {
    (-eps0).exp()
}

/// Density (or mass) of the blanket distribution `ω` at `y`.
pub fn blanket_density(spec: &RandomizerSpec, y: Value) -> Result<f64> {
    spec.validate()?;
    spec.check_message(y)?;
    Ok(match (*spec, y) {
        (RandomizerSpec::RandomizedResponse { k, .. }, _) => 1.0 / k as f64,
        (RandomizerSpec::Summation { k, .. }, _) => 1.0 / (k as f64 + 1.0),
        (RandomizerSpec::Laplace { eps0 }, Value::Real(w)) => eps0 / 2.0 * (-eps0 * (w - 0.5).abs()).exp(),
        (RandomizerSpec::Gaussian { sigma }, Value::Real(w)) => {
            let far = w.abs().max((w - 1.0).abs());
            std_normal_pdf(far / sigma) / sigma / spec.blanket_probability()
        }
        _ => unreachable!("message checked above"),
    })
}

/// Draw `W ∼ ω`.
pub fn blanket_sample<R: Rng + ?Sized>(spec: &RandomizerSpec, rng: &mut R) -> Result<Value> {
    spec.validate()?;
    Ok(match *spec {
        RandomizerSpec::RandomizedResponse { k, .. } => Value::Symbol(rng.random_range(1..=k)),
        RandomizerSpec::Summation { k, .. } => Value::Symbol(rng.random_range(0..=k)),
        RandomizerSpec::Laplace { eps0 } => Value::Real(0.5 + sample_laplace(1.0 / eps0, rng)),
        RandomizerSpec::Gaussian { sigma } => {
            // N(0, σ²) conditioned on Z ≥ 1/2, then mirrored about 1/2 half the time.
            let tail = std_normal_cdf(-0.5 / sigma);
            let u: f64 = 1.0 - rng.random::<f64>();
            let z = -sigma * std_normal_quantile(u * tail);
            let z = z.max(0.5);
            Value::Real(if rng.random_bool(0.5) { 1.0 - z } else { z })
        }
    })
}

/// `μ_x(y) / ω(y)`, computed without forming tiny densities for the continuous kinds.
fn likelihood_over_blanket(spec: &RandomizerSpec, x: Value, y: Value) -> Result<f64> {
    match (*spec, x, y) {
        (RandomizerSpec::Laplace { eps0 }, Value::Real(v), Value::Real(w)) => {
            spec.check_input(x)?;
            Ok((eps0 * ((w - 0.5).abs() - (w - v).abs())).exp())
        }
        (RandomizerSpec::Gaussian { sigma }, Value::Real(v), Value::Real(w)) => {
            spec.check_input(x)?;
            let far = w.abs().max((w - 1.0).abs());
            let log_ratio = (far * far - (w - v) * (w - v)) / (2.0 * sigma * sigma);
            Ok(spec.blanket_probability() * log_ratio.exp())
        }
        _ => Ok(density(spec, x, y)? / blanket_density(spec, y)?),
    }
}

/// One draw of the amplification variable `L` for the pair `(x, x′)`.
pub fn amplification_rv_sample<R: Rng + ?Sized>(
    spec: &RandomizerSpec,
    epsilon: f64,
    x: Value,
    x_prime: Value,
    rng: &mut R,
) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be >= 0, got {epsilon}")));
    }
    spec.check_input(x)?;
    spec.check_input(x_prime)?;
    let w = blanket_sample(spec, rng)?;
    let lx = likelihood_over_blanket(spec, x, w)?;
    let lxp = likelihood_over_blanket(spec, x_prime, w)?;
    Ok(lx - epsilon.exp() * lxp)
}

/// Profile valid for any ε₀-LDP randomizer with similarity `gamma` (default `e^{−ε₀}`).
pub fn profile_generic(eps0: f64, epsilon: f64, gamma: Option<f64>) -> Result<BlanketProfile> {
    check_budgets(eps0, epsilon)?;
    let g = gamma.unwrap_or_else(|| gamma_lower_bound(eps0));
    if !(g > 0.0 && g <= 1.0) {
        return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1], got {g}")));
    }
    let e = epsilon.exp();
    Ok(BlanketProfile {
        gamma: g,
        a: epsilon.exp_m1(),
        b_minus: g * (-eps0).exp() * (1.0 - (epsilon + 2.0 * eps0).exp()),
        b_plus: g * eps0.exp() * -(epsilon - 2.0 * eps0).exp_m1(),
        c2: g * eps0.exp() * (e * e + 1.0) - 2.0 * g * g * (epsilon - 2.0 * eps0).exp(),
        epsilon,
        source: ProfileSource::Generic,
    })
}

/// Exact profile of k-ary randomized response.
pub fn profile_krr(k: u32, eps0: f64, epsilon: f64) -> Result<BlanketProfile> {
    check_budgets(eps0, epsilon)?;
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "randomized response needs k >= 2, got {k}"
        )));
    }
    let kf = k as f64;
    let g = RandomizerSpec::RandomizedResponse { k, eps0 }.blanket_probability();
    let e = epsilon.exp();
    let mean = -epsilon.exp_m1();
    Ok(BlanketProfile {
        gamma: g,
        a: epsilon.exp_m1(),
        b_minus: g * mean - (1.0 - g) * kf * e,
        b_plus: g * mean + (1.0 - g) * kf,
        c2: g * (2.0 - g) * mean * mean + (1.0 - g) * (1.0 - g) * kf * (1.0 + e * e),
        epsilon,
        source: ProfileSource::RandomizedResponse,
    })
}

/// Profile of the Laplace mechanism on `[0, 1]`.
pub fn profile_laplace(eps0: f64, epsilon: f64) -> Result<BlanketProfile> {
    check_budgets(eps0, epsilon)?;
    if eps0 <= 0.0 {
        return Err(Error::InvalidParameter("Laplace profile needs eps0 > 0".into()));
    }
    let e = epsilon.exp();
    let h = (eps0 / 2.0).exp();
    Ok(BlanketProfile {
        gamma: 1.0 / h,
        a: epsilon.exp_m1(),
        b_minus: (1.0 - (epsilon + eps0).exp()) / h,
        b_plus: h * -(epsilon - eps0).exp_m1(),
        c2: (e * e + 1.0) / 3.0 * (2.0 * h + (-eps0).exp()) - 2.0 * e * (2.0 / h - (-eps0).exp()),
        epsilon,
        source: ProfileSource::Laplace,
    })
}

fn check_budgets(eps0: f64, epsilon: f64) -> Result<()> {
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

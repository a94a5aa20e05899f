//! Local randomizers and their output densities.

use crate::numeric::std_normal_pdf;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// An input or output of a randomizer: a symbol for the discrete kinds, a real otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Symbol(u32),
    Real(f64),
}

pub type Message = Value;
pub type Input = Value;

impl From<u32> for Value {
    fn from(s: u32) -> Self {
        Value::Symbol(s)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Real(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RandomizerSpec {
    /// k-ary randomized response over symbols `1..=k`.
    RandomizedResponse { k: u32, eps0: f64 },
    /// `x + Lap(1/ε₀)` on inputs in `[0, 1]`.
    Laplace { eps0: f64 },
    /// `x + N(0, σ²)` on inputs in `[0, 1]`.
    Gaussian { sigma: f64 },
    /// Fixed-point encoding to `{0..k}` followed by randomized response with
    /// blanket probability `c(k+1)/n`. `c = 0` disables the blanket.
    Summation { c: f64, k: u32, n: u64 },
}

impl RandomizerSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            RandomizerSpec::RandomizedResponse { k, eps0 } => {
                if k < 2 {
                    return bad(format!("randomized response needs k >= 2, got {k}"));
                }
                if !(eps0 >= 0.0 && eps0.is_finite()) {
                    return bad(format!("eps0 must be finite and >= 0, got {eps0}"));
                }
            }
            RandomizerSpec::Laplace { eps0 } => {
                if !(eps0 > 0.0 && eps0.is_finite()) {
                    return bad(format!("Laplace eps0 must be finite and > 0, got {eps0}"));
                }
            }
            RandomizerSpec::Gaussian { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return bad(format!("sigma must be finite and > 0, got {sigma}"));
                }
            }
            RandomizerSpec::Summation { c, k, n } => {
                if k < 1 || n < 1 {
                    return bad(format!("summation needs k >= 1 and n >= 1, got k={k} n={n}"));
                }
                if !(c >= 0.0 && c.is_finite()) {
                    return bad(format!("c must be finite and >= 0, got {c}"));
                }
                let g = c * (k as f64 + 1.0) / n as f64;
                if g >= 1.0 {
                    return bad(format!("c(k+1)/n = {g} must be below 1"));
                }
            }
        }
        Ok(())
    }

    /// Probability that a response ignores the input.
    pub(crate) fn blanket_probability(&self) -> f64 {
        match *self {
            RandomizerSpec::RandomizedResponse { k, eps0 } => {
                let k = k as f64;
                k / (eps0.exp() + k - 1.0)
            }
            RandomizerSpec::Summation { c, k, n } => c * (k as f64 + 1.0) / n as f64,
            RandomizerSpec::Laplace { eps0 } => (-eps0 / 2.0).exp(),
            RandomizerSpec::Gaussian { sigma } => crate::numeric::std_normal_cdf(-0.5 / sigma) * 2.0,
        }
    }

    fn is_discrete(&self) -> bool {
        matches!(
            self,
            RandomizerSpec::RandomizedResponse { .. } | RandomizerSpec::Summation { .. }
        )
    }

    pub(crate) fn check_input(&self, x: Input) -> Result<()> {
        match (*self, x) {
            (RandomizerSpec::RandomizedResponse { k, .. }, Value::Symbol(s)) => {
                if s == 0 || s > k {
                    return Err(Error::Domain(format!("symbol {s} outside 1..={k}")));
                }
            }
            (RandomizerSpec::RandomizedResponse { .. }, Value::Real(_)) => {
                return Err(Error::Domain("randomized response takes a symbol".into()));
            }
            (_, Value::Real(v)) => {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Domain(format!("input {v} outside [0, 1]")));
                }
            }
            (_, Value::Symbol(_)) => {
                return Err(Error::Domain("this randomizer takes a real input".into()));
            }
        }
        Ok(())
    }

    pub(crate) fn check_message(&self, y: Message) -> Result<()> {
        match (*self, y) {
            (RandomizerSpec::RandomizedResponse { k, .. }, Value::Symbol(s)) => {
                if s == 0 || s > k {
                    return Err(Error::Domain(format!("message {s} outside 1..={k}")));
                }
            }
            (RandomizerSpec::Summation { k, .. }, Value::Symbol(s)) => {
                if s > k {
                    return Err(Error::Domain(format!("message {s} outside 0..={k}")));
                }
            }
            (spec, Value::Real(v)) if !spec.is_discrete() => {
                if v.is_nan() {
                    return Err(Error::Domain("message is NaN".into()));
                }
            }
            _ => return Err(Error::Domain("message type does not match randomizer".into())),
        }
        Ok(())
    }
}

/// Draw one message from `μ_x`.
pub fn randomize<R: Rng + ?Sized>(spec: &RandomizerSpec, x: Input, rng: &mut R) -> Result<Message> {
    spec.validate()?;
    spec.check_input(x)?;
    Ok(match (*spec, x) {
        (RandomizerSpec::RandomizedResponse { k, .. }, Value::Symbol(s)) => {
            if rng.random_bool(spec.blanket_probability()) {
                Value::Symbol(rng.random_range(1..=k))
            } else {
                Value::Symbol(s)
            }
        }
        (RandomizerSpec::Summation { k, .. }, Value::Real(v)) => {
            let xbar = encode_fixed_point(v, k, rng)?;
            if rng.random_bool(spec.blanket_probability()) {
                Value::Symbol(rng.random_range(0..=k))
            } else {
                Value::Symbol(xbar)
            }
        }
        (RandomizerSpec::Laplace { eps0 }, Value::Real(v)) => Value::Real(v + sample_laplace(1.0 / eps0, rng)),
        (RandomizerSpec::Gaussian { sigma }, Value::Real(v)) => {
            let z: f64 = rng.sample(StandardNormal);
            Value::Real(v + sigma * z)
        }
        _ => unreachable!("input checked above"),
    })
}

/// Mass (discrete kinds) or Lebesgue density (continuous kinds) of `μ_x` at `y`.
pub fn density(spec: &RandomizerSpec, x: Input, y: Message) -> Result<f64> {
    spec.validate()?;
    spec.check_input(x)?;
    spec.check_message(y)?;
    Ok(match (*spec, x, y) {
        (RandomizerSpec::RandomizedResponse { k, .. }, Value::Symbol(xs), Value::Symbol(ys)) => {
            let g = spec.blanket_probability();
            let uniform = g / k as f64;
            if xs == ys {
                (1.0 - g) + uniform
            } else {
                uniform
            }
        }
        (RandomizerSpec::Summation { k, .. }, Value::Real(v), Value::Symbol(ys)) => {
            let g = spec.blanket_probability();
            (1.0 - g) * rounding_pmf(v, k, ys) + g / (k as f64 + 1.0)
        }
        (RandomizerSpec::Laplace { eps0 }, Value::Real(v), Value::Real(w)) => {
            eps0 / 2.0 * (-eps0 * (w - v).abs()).exp()
        }
        (RandomizerSpec::Gaussian { sigma }, Value::Real(v), Value::Real(w)) => std_normal_pdf((w - v) / sigma) / sigma,
        _ => unreachable!("types checked above"),
    })
}

/// `xk` split into integer and fractional part, snapping rounding noise at grid points.
fn split_scaled(x: f64, k: u32) -> (u32, f64) {
    let s = x * k as f64;
    let r = s.round();
    if (s - r).abs() <= 4.0 * f64::EPSILON * s.max(1.0) {
        return (r as u32, 0.0);
    }
    let f = s.floor();
    (f as u32, s - f)
}

/// `P[encode_fixed_point(x, k) = j]`.
pub(crate) fn rounding_pmf(x: f64, k: u32, j: u32) -> f64 {
    let (f, r) = split_scaled(x, k);
    if j == f {
        1.0 - r
    } else if j == f + 1 {
        r
    } else {
        0.0
    }
}

/// Randomized rounding of `x ∈ [0,1]` to `{0..k}`: `⌊xk⌋ + Ber(xk − ⌊xk⌋)`.
///
/// Grid points draw no randomness.
pub fn encode_fixed_point<R: Rng + ?Sized>(x: f64, k: u32, rng: &mut R) -> Result<u32> {
    if k < 1 {
        return Err(Error::InvalidParameter("precision k must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("input {x} outside [0, 1]")));
    }
    let (f, r) = split_scaled(x, k);
    if r == 0.0 {
        return Ok(f);
    }
    Ok(f + rng.random_bool(r) as u32)
}

/// Laplace noise with the given scale, by inversion.
pub(crate) fn sample_laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    // u uniform on (-1/2, 1/2]; 1 - 2|u| is then in [0, 1).
    let u: f64 = 0.5 - rng.random::<f64>();
    let tail = 1.0 - 2.0 * u.abs();
    let mag = -scale * if tail > 0.0 { tail.ln() } else { f64::MIN_POSITIVE.ln() };
    if u < 0.0 {
        -mag
    } else {
        mag
    }
}

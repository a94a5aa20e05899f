//! Bisection of the `δ` bounds for the smallest `ε` or the largest `ε₀`.

use super::{efmrtt_epsilon, BoundMethod, Method};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CertifiedBy {
    /// The amplification bound itself certifies the value.
    Amplification,
    /// The bound failed and the value falls back to `ε = ε₀`, true by post-processing.
    Clamp,
}

impl CertifiedBy {
    pub fn as_str(&self) -> &'static str {
        match self {
            CertifiedBy::Amplification => "amplification",
            CertifiedBy::Clamp => "clamp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Lower end of the `ε` bracket.
    pub epsilon_floor: f64,
    /// Upper end of the `ε₀` bracket.
    pub eps0_ceiling: f64,
    /// Absolute bracket width at termination.
    pub tolerance: f64,
    /// Fall back to `ε = ε₀` when the bound cannot certify anything.
    pub allow_clamp: bool,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            epsilon_floor: 1e-6,
            eps0_ceiling: 20.0,
            tolerance: 1e-12,
            allow_clamp: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub value: f64,
    pub certified_by: CertifiedBy,
    /// Width of the final bracket; zero for closed-form answers and bracket endpoints.
    pub bracket_width: f64,
    /// The method's `δ` at the returned value. For an `ε` clamp this is the failing bound
    /// at `ε₀`; for an `ε₀` clamp it is 0, since `ε = ε₀` holds without amplification.
    pub delta_at_value: f64,
    pub evaluations: u32,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok(())
}

/// Smallest `ε ∈ [floor, ε₀]` whose bound is at most `δ`.
///
/// Bisection keeps `bound(lo) > δ ≥ bound(hi)`, so the returned `hi` is always certified.
pub fn calibrate_epsilon(
    method: &Method,
    eps0: f64,
    n: u64,
    delta: f64,
    opts: &CalibrationOptions,
) -> Result<Calibration> {
    check_delta(delta)?;
    if !(eps0 > 0.0 && eps0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "eps0 must be finite and > 0, got {eps0}"
        )));
    }
    let clamp = |bound_at_eps0: f64, evaluations| {
        if opts.allow_clamp {
            Ok(Calibration {
                value: eps0,
                certified_by: CertifiedBy::Clamp,
                bracket_width: 0.0,
                delta_at_value: bound_at_eps0,
                evaluations,
            })
        } else {
            Err(Error::Infeasible(format!(
                "{method} cannot certify delta = {delta} at any epsilon <= eps0 = {eps0} for n = {n}"
            )))
        }
    };

    if method.bound == BoundMethod::Efmrtt {
        let mut eps = efmrtt_epsilon(eps0, n, delta)?;
        // Absorb rounding so the inverse certifies the returned value.
        while method.delta(eps0, eps, n)? > delta {
            eps = eps.next_up();
        }
        if eps > eps0 {
            return clamp(method.delta(eps0, eps0, n)?, 1);
        }
        return Ok(Calibration {
            value: eps,
            certified_by: CertifiedBy::Amplification,
            bracket_width: 0.0,
            delta_at_value: method.delta(eps0, eps, n)?,
            evaluations: 0,
        });
    }

    let bound = |eps: f64| method.delta(eps0, eps, n);
    let mut evaluations = 1;
    let mut hi = eps0;
    let mut f_hi = bound(hi)?;
    if f_hi > delta {
        return clamp(f_hi, evaluations);
    }
    let mut lo = opts.epsilon_floor.min(eps0);
    evaluations += 1;
    let f_lo = bound(lo)?;
    if f_lo <= delta {
        return Ok(Calibration {
            value: lo,
            certified_by: CertifiedBy::Amplification,
            bracket_width: 0.0,
            delta_at_value: f_lo,
            evaluations,
        });
    }
    while hi - lo > opts.tolerance {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        evaluations += 1;
        let f = bound(mid)?;
        if f <= delta {
            hi = mid;
            f_hi = f;
        } else {
            lo = mid;
        }
    }
    Ok(Calibration {
        value: hi,
        certified_by: CertifiedBy::Amplification,
        bracket_width: hi - lo,
        delta_at_value: f_hi,
        evaluations,
    })
}

/// Largest `ε₀ ∈ [ε_target, ceiling]` for which the method certifies `(ε_target, δ)`.
///
/// Mechanism-specific similarities are recomputed at every probe. Bisection keeps
/// `bound(lo) ≤ δ < bound(hi)`, so the returned `lo` is always certified.
pub fn calibrate_epsilon0(
    method: &Method,
    n: u64,
    delta: f64,
    eps_target: f64,
    opts: &CalibrationOptions,
) -> Result<Calibration> {
    check_delta(delta)?;
    if !(eps_target > 0.0 && eps_target.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "target epsilon must be > 0, got {eps_target}"
        )));
    }
    if eps_target >= opts.eps0_ceiling {
        return Err(Error::InvalidParameter(format!(
            "target epsilon {eps_target} is not below the eps0 ceiling {}",
            opts.eps0_ceiling
        )));
    }

    if method.bound == BoundMethod::Efmrtt {
        if n < 1000 {
            return Err(Error::Validity(format!("requires n >= 1000, got n = {n}")));
        }
        if !(delta < 0.01) {
            return Err(Error::Validity(format!("requires δ < 1/100, got delta = {delta}")));
        }
        let mut eps0 = eps_target * (n as f64).sqrt() / (12.0 * (1.0 / delta).ln().sqrt());
        if eps0 >= 0.5 {
            return Err(Error::Validity(format!(
                "the inverse gives eps0 = {eps0}, outside the ε₀ < 1/2 range"
            )));
        }
        while eps0 > 0.0 && method.delta(eps0, eps_target, n)? > delta {
            eps0 = eps0.next_down();
        }
        if eps0 < eps_target {
            return Ok(Calibration {
                value: eps_target,
                certified_by: CertifiedBy::Clamp,
                bracket_width: 0.0,
                delta_at_value: 0.0,
                evaluations: 0,
            });
        }
        return Ok(Calibration {
            value: eps0,
            certified_by: CertifiedBy::Amplification,
            bracket_width: 0.0,
            delta_at_value: method.delta(eps0, eps_target, n)?,
            evaluations: 0,
        });
    }

    let bound = |eps0: f64| method.delta(eps0, eps_target, n);
    let mut lo = eps_target;
    let mut f_lo = bound(lo)?;
    let mut evaluations = 1;
    if f_lo > delta {
        if !opts.allow_clamp {
            return Err(Error::Infeasible(format!(
                "{method} cannot certify (epsilon = {eps_target}, delta = {delta}) for n = {n} at any eps0"
            )));
        }
        return Ok(Calibration {
            value: eps_target,
            certified_by: CertifiedBy::Clamp,
            bracket_width: 0.0,
            delta_at_value: 0.0,
            evaluations,
        });
    }
    let mut hi = opts.eps0_ceiling;
    evaluations += 1;
    let f_hi = bound(hi)?;
    if f_hi <= delta {
        return Ok(Calibration {
            value: hi,
            certified_by: CertifiedBy::Amplification,
            bracket_width: 0.0,
            delta_at_value: f_hi,
            evaluations,
        });
    }
    while hi - lo > opts.tolerance {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        evaluations += 1;
        let f = bound(mid)?;
        if f <= delta {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
    }
    Ok(Calibration {
        value: lo,
        certified_by: CertifiedBy::Amplification,
        bracket_width: hi - lo,
        delta_at_value: f_lo,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplification::{efmrtt_epsilon, Mechanism};

    #[test]
    fn efmrtt_calibration_is_closed_form() {
        let m = Method::from_name("efmrtt", 2).unwrap();
        let c = calibrate_epsilon(&m, 0.2, 100_000, 1e-6, &Default::default()).unwrap();
        let closed = efmrtt_epsilon(0.2, 100_000, 1e-6).unwrap();
        assert!(c.value >= closed && c.value - closed <= 4.0 * f64::EPSILON * closed);
        assert!(m.delta(0.2, c.value, 100_000).unwrap() <= 1e-6);
        assert!((c.value - 0.028_206).abs() < 1e-5);
        assert_eq!(c.evaluations, 0);
    }

    #[test]
    fn generic_beats_efmrtt_at_example_point() {
        let base = efmrtt_epsilon(0.2, 100_000, 1e-6).unwrap();
        for name in ["hoeffding-generic", "bennett-generic"] {
            let m = Method::from_name(name, 2).unwrap();
            let c = calibrate_epsilon(&m, 0.2, 100_000, 1e-6, &Default::default()).unwrap();
            assert_eq!(c.certified_by, CertifiedBy::Amplification);
            assert!(c.value < base, "{name}: {} vs {base}", c.value);
            assert!(c.bracket_width <= 1e-12);
            assert!(m.delta(0.2, c.value, 100_000).unwrap() <= 1e-6);
            assert!(m.delta(0.2, c.value - 1e-9, 100_000).unwrap() > 1e-6);
        }
    }

    #[test]
    fn clamp_fires_for_tiny_n() {
        let m = Method::from_name("hoeffding-generic", 2).unwrap();
        let c = calibrate_epsilon(&m, 1.0, 10, 1e-6, &Default::default()).unwrap();
        assert_eq!(c.certified_by, CertifiedBy::Clamp);
        assert_eq!(c.value, 1.0);
        let strict = CalibrationOptions {
            allow_clamp: false,
            ..Default::default()
        };
        assert!(matches!(
            calibrate_epsilon(&m, 1.0, 10, 1e-6, &strict),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn eps0_calibration_never_goes_below_target() {
        for name in [
            "hoeffding-rr",
            "bennett-rr",
            "hoeffding-laplace",
            "bennett-laplace",
            "bennett-generic",
        ] {
            let m = Method::from_name(name, 3).unwrap();
            for n in [10u64, 1_000, 100_000] {
                let c = calibrate_epsilon0(&m, n, 1e-6, 0.3, &Default::default()).unwrap();
                assert!(c.value >= 0.3, "{name} n={n}");
                if c.certified_by == CertifiedBy::Amplification {
                    assert!(m.delta(c.value, 0.3, n).unwrap() <= 1e-6);
                }
            }
        }
    }

    #[test]
    fn eps0_grows_with_n_when_domain_grows() {
        let mut prev = 0.0;
        for n in [1_000u64, 10_000, 100_000, 1_000_000, 10_000_000] {
            let k = (n as f64).cbrt().ceil() as u32;
            let m = Method::new(BoundMethod::BennettMixture, Mechanism::RandomizedResponse { k });
            let delta = 1.0 / (n as f64 * n as f64);
            let c = calibrate_epsilon0(&m, n, delta, 0.5, &Default::default()).unwrap();
            assert!(c.value > prev, "n={n} eps0={} prev={prev}", c.value);
            prev = c.value;
        }
    }

    #[test]
    fn efmrtt_eps0_inverse() {
        let m = Method::from_name("efmrtt", 2).unwrap();
        let c = calibrate_epsilon0(&m, 1_000_000, 1e-6, 0.01, &Default::default()).unwrap();
        let back = efmrtt_epsilon(c.value, 1_000_000, 1e-6).unwrap();
        assert!((back - 0.01).abs() < 1e-14);
        assert!(m.delta(c.value, 0.01, 1_000_000).unwrap() <= 1e-6);
        assert!(matches!(
            calibrate_epsilon0(&m, 1_000_000, 1e-6, 0.5, &Default::default()),
            Err(Error::Validity(_))
        ));
    }
}

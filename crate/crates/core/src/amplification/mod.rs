//! Certified `δ(ε)` bounds for the shuffled mechanism and their inversion.
//!
//! Every bound goes through the mixture
//! `δ ≤ (1/γn) Σ_{m=1}^{n} C(n,m) γ^m (1−γ)^{n−m} E[Σ_{i≤m} L_i]₊`
//! with a per-m bound on the clipped expectation, except the closed forms.

mod calibrate;

pub use calibrate::{calibrate_epsilon, calibrate_epsilon0, Calibration, CalibrationOptions, CertifiedBy};

use crate::blanket::{profile_generic, profile_krr, profile_laplace, BlanketProfile};
use crate::numeric::{bennett_phi, ln_binomial_pmf, log_sum_exp};
use crate::{Error, Result};
use std::fmt;

/// Above this party count the mixture is summed over a window around its largest term
/// and the two tails are bounded analytically.
pub const EXACT_SUM_LIMIT: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1], got {delta}"
            )));
        }
        Ok(Self { epsilon, delta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundMethod {
    /// Hoeffding per-m bound summed against the binomial in closed form.
    HoeffdingClosed,
    /// Hoeffding per-m bound, capped at `m·b₊`, through the mixture.
    HoeffdingMixture,
    /// Bennett per-m bound, capped at `m·b₊`, through the mixture.
    BennettMixture,
    /// The closed generic bound after substituting the worst-case similarity.
    HoeffdingSimplified,
    /// The earlier `12ε₀√(ln(1/δ)/n)` amplification bound.
    Efmrtt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mechanism {
    /// Any ε₀-LDP randomizer, similarity taken as `e^{−ε₀}`.
    Generic,
    RandomizedResponse {
        k: u32,
    },
    Laplace,
}

impl Mechanism {
    pub fn profile(&self, eps0: f64, epsilon: f64) -> Result<BlanketProfile> {
        match *self {
            Mechanism::Generic => profile_generic(eps0, epsilon, None),
            Mechanism::RandomizedResponse { k } => profile_krr(k, eps0, epsilon),
            Mechanism::Laplace => profile_laplace(eps0, epsilon),
        }
    }

    /// Similarity used by this mechanism's bounds at local budget `eps0`.
    pub fn gamma(&self, eps0: f64) -> f64 {
        match *self {
            Mechanism::Generic => (-eps0).exp(),
            Mechanism::RandomizedResponse { k } => k as f64 / (eps0.exp() + k as f64 - 1.0),
            Mechanism::Laplace => (-eps0 / 2.0).exp(),
        }
    }
}

/// A bound together with the mechanism whose profile feeds it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Method {
    pub bound: BoundMethod,
    pub mechanism: Mechanism,
}

pub const METHOD_NAMES: [&str; 7] = [
    "efmrtt",
    "hoeffding-generic",
    "bennett-generic",
    "hoeffding-rr",
    "bennett-rr",
    "hoeffding-laplace",
    "bennett-laplace",
];

impl Method {
    pub fn new(bound: BoundMethod, mechanism: Mechanism) -> Self {
        Self { bound, mechanism }
    }

    /// Parse one of [`METHOD_NAMES`]; `k` is used by the randomized response methods.
    pub fn from_name(name: &str, k: u32) -> Result<Self> {
        use BoundMethod::*;
        let rr = Mechanism::RandomizedResponse { k };
        let m = match name {
            "efmrtt" => Method::new(Efmrtt, Mechanism::Generic),
            "hoeffding-generic" => Method::new(HoeffdingSimplified, Mechanism::Generic),
            "bennett-generic" => Method::new(BennettMixture, Mechanism::Generic),
            "hoeffding-rr" => Method::new(HoeffdingMixture, rr),
            "bennett-rr" => Method::new(BennettMixture, rr),
            "hoeffding-laplace" => Method::new(HoeffdingMixture, Mechanism::Laplace),
            "bennett-laplace" => Method::new(BennettMixture, Mechanism::Laplace),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown method {other:?}; expected one of {}",
                    METHOD_NAMES.join(", ")
                )))
            }
        };
        if let Mechanism::RandomizedResponse { k } = m.mechanism {
            if k < 2 {
                return Err(Error::InvalidParameter(format!(
                    "randomized response needs k >= 2, got {k}"
                )));
            }
        }
        Ok(m)
    }

    /// Upper bound on the hockey-stick divergence of the shuffled mechanism, in `[0, 1]`.
    pub fn delta(&self, eps0: f64, epsilon: f64, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        match self.bound {
            BoundMethod::Efmrtt => efmrtt_delta(eps0, epsilon, n),
            BoundMethod::HoeffdingSimplified => delta_hoeffding_simplified(epsilon, eps0, n),
            BoundMethod::HoeffdingClosed => {
                let p = self.mechanism.profile(eps0, epsilon)?;
                delta_hoeffding_closed(n, &p)
            }
            BoundMethod::HoeffdingMixture => {
                let p = self.mechanism.profile(eps0, epsilon)?;
                delta_mixture_bound(n, p.gamma, &HoeffdingBound::from_profile(&p)?)
            }
            BoundMethod::BennettMixture => {
                let p = self.mechanism.profile(eps0, epsilon)?;
                delta_mixture_bound(n, p.gamma, &BennettBound::from_profile(&p)?)
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mech = match self.mechanism {
            Mechanism::Generic => "generic",
            Mechanism::RandomizedResponse { .. } => "rr",
            Mechanism::Laplace => "laplace",
        };
        match self.bound {
            BoundMethod::Efmrtt => write!(f, "efmrtt"),
            BoundMethod::HoeffdingSimplified if self.mechanism == Mechanism::Generic => {
                write!(f, "hoeffding-generic")
            }
            BoundMethod::HoeffdingSimplified => write!(f, "hoeffding-simplified-{mech}"),
            BoundMethod::HoeffdingClosed => write!(f, "hoeffding-closed-{mech}"),
            BoundMethod::HoeffdingMixture => write!(f, "hoeffding-{mech}"),
            BoundMethod::BennettMixture => write!(f, "bennett-{mech}"),
        }
    }
}

/// Per-m upper bound on `E[Σ_{i≤m} L_i]₊`, in log space.
///
/// `ln_bound` must be concave in `m`, and either finite for every `m ≥ 1` or `-inf`
/// (zero) for every `m`. The windowed mixture relies on both.
pub trait PerMBound {
    fn ln_bound(&self, m: u64) -> f64;
}

fn check_mean(a: f64) -> Result<()> {
    if !(a > 0.0) {
        return Err(Error::Precondition(format!(
            "negated mean a = e^eps - 1 must be > 0 (epsilon > 0), got {a}"
        )));
    }
    Ok(())
}

/// Hoeffding bound `(b²/4a) e^{−2ma²/b²}` for i.i.d. variables in `[b₋, b₊]` with mean `−a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoeffdingBound {
    pub a: f64,
    pub b_minus: f64,
    pub b_plus: f64,
    /// Also cap at `m·b₊`, the trivial bound.
    pub capped: bool,
}

impl HoeffdingBound {
    pub fn from_profile(p: &BlanketProfile) -> Result<Self> {
        check_mean(p.a)?;
        Ok(Self {
            a: p.a,
            b_minus: p.b_minus,
            b_plus: p.b_plus,
            capped: true,
        })
    }

    fn ln_uncapped(&self, m: u64) -> f64 {
        let b = self.b_plus - self.b_minus;
        if self.b_plus <= 0.0 || b <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (b * b / (4.0 * self.a)).ln() - 2.0 * m as f64 * self.a * self.a / (b * b)
    }
}

impl PerMBound for HoeffdingBound {
    fn ln_bound(&self, m: u64) -> f64 {
        let v = self.ln_uncapped(m);
        if self.capped && v > f64::NEG_INFINITY {
            v.min((m as f64 * self.b_plus).ln())
        } else {
            v
        }
    }
}

/// Bennett bound `b₊/ln(1+ab₊/c2) · exp(−(m c2/b₊²) φ(ab₊/c2))` for i.i.d. variables
/// bounded above by `b₊` with mean `−a` and second moment at most `c2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BennettBound {
    pub a: f64,
    pub b_plus: f64,
    pub c2: f64,
}

impl BennettBound {
    pub fn from_profile(p: &BlanketProfile) -> Result<Self> {
        Self::new(p.a, p.b_plus, p.c2)
    }

    pub fn new(a: f64, b_plus: f64, c2: f64) -> Result<Self> {
        check_mean(a)?;
        if !(c2 > 0.0) {
            return Err(Error::Precondition(format!(
                "second moment bound c2 must be > 0, got {c2}"
            )));
        }
        Ok(Self { a, b_plus, c2 })
    }

    fn ln_uncapped(&self, m: u64) -> f64 {
        if self.b_plus <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let u = self.a * self.b_plus / self.c2;
        self.b_plus.ln() - u.ln_1p().ln() - m as f64 * self.c2 / (self.b_plus * self.b_plus) * bennett_phi(u)
    }
}

impl PerMBound for BennettBound {
    fn ln_bound(&self, m: u64) -> f64 {
        let v = self.ln_uncapped(m);
        if v > f64::NEG_INFINITY {
            v.min((m as f64 * self.b_plus).ln())
        } else {
            v
        }
    }
}

/// `min((b²/4a)e^{−2ma²/b²}, m·b₊)`, zero when `b₊ ≤ 0` or the range is empty.
pub fn hoeffding_clipped_expectation(m: u64, a: f64, b_minus: f64, b_plus: f64) -> Result<f64> {
    check_mean(a)?;
    if b_plus < b_minus {
        return Err(Error::InvalidParameter(format!("empty range [{b_minus}, {b_plus}]")));
    }
    Ok(HoeffdingBound {
        a,
        b_minus,
        b_plus,
        capped: true,
    }
    .ln_bound(m)
    .exp())
}

/// Bennett bound on `E[Σ_{i≤m} L_i]₊`, capped at `m·b₊`; zero when `b₊ ≤ 0`.
pub fn bennett_clipped_expectation(m: u64, a: f64, b_plus: f64, c2: f64) -> Result<f64> {
    Ok(BennettBound::new(a, b_plus, c2)?.ln_bound(m).exp())
}

fn check_mixture_args(n: u64, gamma: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    Ok(())
}

/// Mixture bound with an arbitrary per-m function, summed exactly over `m = 1..=n`.
pub fn delta_mixture<F: Fn(u64) -> f64>(n: u64, gamma: f64, per_m: F) -> Result<f64> {
    check_mixture_args(n, gamma)?;
    let terms: Vec<f64> = (1..=n)
        .map(|m| {
            let v = per_m(m);
            if v > 0.0 {
                ln_binomial_pmf(m, n, gamma) + v.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    Ok(clamp_delta(log_sum_exp(&terms) - (gamma * n as f64).ln()))
}

/// Mixture bound for a structured per-m bound; windowed above [`EXACT_SUM_LIMIT`].
pub fn delta_mixture_bound<B: PerMBound>(n: u64, gamma: f64, bound: &B) -> Result<f64> {
    Ok(clamp_delta(ln_delta_mixture_bound(n, gamma, bound)?))
}

/// Unclamped `ln δ` of [`delta_mixture_bound`].
///
/// Above [`EXACT_SUM_LIMIT`] the log-summand `ln P(Bin(n,γ) = m) + ln B(m)` is concave,
/// so the sum runs outward from its mode until terms drop [`WINDOW_DROP`] below the peak,
/// and each tail is bounded by the geometric series given by the slope at the edge.
pub fn ln_delta_mixture_bound<B: PerMBound>(n: u64, gamma: f64, bound: &B) -> Result<f64> {
    check_mixture_args(n, gamma)?;
    let ln_norm = (gamma * n as f64).ln();
    let term = |m: u64| {
        let b = bound.ln_bound(m);
        if b == f64::NEG_INFINITY {
            b
        } else {
            ln_binomial_pmf(m, n, gamma) + b
        }
    };
    if n <= EXACT_SUM_LIMIT || gamma >= 1.0 {
        let terms: Vec<f64> = (1..=n).map(term).collect();
        return Ok(log_sum_exp(&terms) - ln_norm);
    }
    if bound.ln_bound(1) == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    // Smallest m whose forward difference is non-positive.
    let (mut lo, mut hi) = (1u64, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if term(mid + 1) - term(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let mode = lo;
    let peak = term(mode);
    let floor = peak - WINDOW_DROP;
    let mut terms = vec![peak];
    let mut left = mode;
    while left > 1 {
        let t = term(left - 1);
        if t <= floor {
            // Slopes only grow to the left, so t(m) ≤ t(left-1) - (left-1-m)·s.
            let s = term(left) - t;
            terms.push(t - (-(-s).exp_m1()).ln());
            break;
        }
        terms.push(t);
        left -= 1;
    }
    let mut right = mode;
    while right < n {
        let t = term(right + 1);
        if t <= floor {
            let s = term(right) - t;
            terms.push(t - (-(-s).exp_m1()).ln());
            break;
        }
        terms.push(t);
        right += 1;
    }
    Ok(log_sum_exp(&terms) - ln_norm)
}

/// Log drop below the peak summand at which the window stops and the tails take over.
const WINDOW_DROP: f64 = 60.0;

fn clamp_delta(ln_delta: f64) -> f64 {
    ln_delta.exp().clamp(0.0, 1.0)
}

/// Closed form of the mixture with the uncapped Hoeffding bound:
/// `(1/γn)(b²/4a)(1 − γ(1−e^{−2a²/b²}))ⁿ`.
pub fn delta_hoeffding_closed(n: u64, profile: &BlanketProfile) -> Result<f64> {
    Ok(clamp_delta(ln_delta_hoeffding_closed(n, profile)?))
}

/// Unclamped `ln δ` of [`delta_hoeffding_closed`].
pub fn ln_delta_hoeffding_closed(n: u64, profile: &BlanketProfile) -> Result<f64> {
    check_mean(profile.a)?;
    check_mixture_args(n, profile.gamma)?;
    let b = profile.width();
    if profile.b_plus <= 0.0 || b <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let (a, g, nf) = (profile.a, profile.gamma, n as f64);
    let s = 2.0 * a * a / (b * b);
    let base = (-g * -(-s).exp_m1()).ln_1p();
    Ok((b * b / (4.0 * a)).ln() + nf * base - (g * nf).ln())
}

/// Closed bound for any ε₀-LDP randomizer:
/// `(e^ε+1)²(e^{ε₀}−e^{−ε₀})²/(4n(e^ε−1)) · exp(−Cn·min{e^{−ε₀}, (e^ε−1)²/((e^ε+1)²(e^{ε₀}−e^{−ε₀})²)})`,
/// `C = 1 − e^{−2}`.
pub fn delta_hoeffding_simplified(epsilon: f64, eps0: f64, n: u64) -> Result<f64> {
    Ok(clamp_delta(ln_delta_hoeffding_simplified(epsilon, eps0, n)?))
}

/// Unclamped `ln δ` of [`delta_hoeffding_simplified`].
pub fn ln_delta_hoeffding_simplified(epsilon: f64, eps0: f64, n: u64) -> Result<f64> {
    if !(epsilon > 0.0 && eps0 > 0.0) || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "need epsilon > 0, eps0 > 0, n >= 1; got epsilon={epsilon} eps0={eps0} n={n}"
        )));
    }
    let c = -(-2.0f64).exp_m1();
    let nf = n as f64;
    let spread = (epsilon.exp() + 1.0) * 2.0 * eps0.sinh();
    let spread2 = spread * spread;
    let a = epsilon.exp_m1();
    let rate = (-eps0).exp().min(a * a / spread2);
    Ok((spread2 / (4.0 * nf * a)).ln() - c * nf * rate)
}

fn check_efmrtt(eps0: f64, n: u64) -> Result<()> {
    if !(eps0 < 0.5) {
        return Err(Error::Validity(format!("requires ε₀ < 1/2, got eps0 = {eps0}")));
    }
    if !(eps0 > 0.0) {
        return Err(Error::InvalidParameter(format!("eps0 must be > 0, got {eps0}")));
    }
    if n < 1000 {
        return Err(Error::Validity(format!("requires n >= 1000, got n = {n}")));
    }
    Ok(())
}

/// `12ε₀√(ln(1/δ)/n)`, valid for `ε₀ < 1/2`, `n ≥ 1000`, `δ < 1/100`.
pub fn efmrtt_epsilon(eps0: f64, n: u64, delta: f64) -> Result<f64> {
    check_efmrtt(eps0, n)?;
    if !(delta > 0.0 && delta < 0.01) {
        return Err(Error::Validity(format!("requires δ < 1/100, got delta = {delta}")));
    }
    Ok(12.0 * eps0 * ((1.0 / delta).ln() / n as f64).sqrt())
}

/// The δ certified at `ε` by inverting [`efmrtt_epsilon`]; 1 where it certifies nothing.
fn efmrtt_delta(eps0: f64, epsilon: f64, n: u64) -> Result<f64> {
    check_efmrtt(eps0, n)?;
    let r = epsilon / (12.0 * eps0);
    let delta = (-(n as f64) * r * r).exp();
    Ok(if delta < 0.01 { delta } else { 1.0 })
}

//! Monte Carlo harness for the summation protocol and the amplification variable.
//!
//! Randomness is derived from a master seed by counter: trial `t` gets its own ChaCha key
//! and user `i` within it reads stream `i` of that key. Results therefore do not depend on
//! how trials are scheduled across threads.

use crate::blanket::amplification_rv_sample;
use crate::randomizers::{randomize, Input, RandomizerSpec, Value};
use crate::summation::{analyze, choose_parameters, theoretical_mse_bound, SummationParams};
use crate::{Error, Histogram, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::str::FromStr;

const INPUT_STREAM: u64 = u64::MAX;
const SHUFFLE_STREAM: u64 = u64::MAX - 1;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha key for one trial of a run.
fn trial_key(seed: u64, trial: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    let mut state = splitmix(seed) ^ splitmix(trial.wrapping_add(0x5851_F42D_4C95_7F2D));
    for chunk in key.chunks_mut(8) {
        state = splitmix(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    key
}

fn stream_rng(key: [u8; 32], stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Forget message order: permute, then count.
pub fn shuffle<R: Rng + ?Sized>(messages: &[u32], rng: &mut R) -> Histogram {
    let mut shuffled = messages.to_vec();
    shuffled.shuffle(rng);
    Histogram::from_symbols(shuffled)
}

/// Inputs for [`mse_experiment`], drawn fresh for each trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputDistribution {
    Constant(f64),
    /// `x_i = i/(n−1)`.
    Grid,
    Uniform,
    /// 0 or 1 with probability 1/2 each.
    TwoPoint,
}

impl InputDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> Vec<f64> {
        match *self {
            InputDistribution::Constant(v) => vec![v; n as usize],
            InputDistribution::Grid => {
                let d = (n.max(2) - 1) as f64;
                (0..n).map(|i| i as f64 / d).collect()
            }
            InputDistribution::Uniform => (0..n).map(|_| rng.random::<f64>()).collect(),
            InputDistribution::TwoPoint => (0..n).map(|_| rng.random_bool(0.5) as u8 as f64).collect(),
        }
    }
}

impl FromStr for InputDistribution {
    type Err = Error;

    /// `constant0`, `constant1`, `constant:<v>`, `grid`, `uniform` or `two-point`.
    fn from_str(s: &str) -> Result<Self> {
        let parsed = match s {
            "grid" => InputDistribution::Grid,
            "uniform" => InputDistribution::Uniform,
            "two-point" => InputDistribution::TwoPoint,
            _ => {
                let v = s
                    .strip_prefix("constant:")
                    .or_else(|| s.strip_prefix("constant"))
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown input distribution {s:?}")))?;
                InputDistribution::Constant(v)
            }
        };
        if let InputDistribution::Constant(v) = parsed {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("constant input {v} outside [0, 1]")));
            }
        }
        Ok(parsed)
    }
}

/// One protocol execution with fixed parameters, using trial `trial` of `seed`.
pub fn run_summation_with_params(inputs: &[f64], params: &SummationParams, seed: u64, trial: u64) -> Result<f64> {
    if inputs.len() as u64 != params.n {
        return Err(Error::Domain(format!("{} inputs for n = {}", inputs.len(), params.n)));
    }
    let spec = params.randomizer();
    let key = trial_key(seed, trial);
    let mut messages = Vec::with_capacity(inputs.len());
    for (i, &x) in inputs.iter().enumerate() {
        let mut rng = stream_rng(key, i as u64);
        match randomize(&spec, Value::Real(x), &mut rng)? {
            Value::Symbol(s) => messages.push(s),
            Value::Real(_) => unreachable!("summation messages are symbols"),
        }
    }
    let hist = shuffle(&messages, &mut stream_rng(key, SHUFFLE_STREAM));
    analyze(&hist, params)
}

/// One protocol execution with parameters chosen from `(ε, δ, n)`.
pub fn run_summation(inputs: &[f64], epsilon: f64, delta: f64, seed: u64) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::InvalidParameter("no inputs".into()));
    }
    let params = choose_parameters(epsilon, delta, inputs.len() as u64)?;
    run_summation_with_params(inputs, &params, seed, 0)
}

/// Error `z − Σx` of trial `trial`, inputs drawn from `input`.
pub fn trial_error(params: &SummationParams, input: InputDistribution, seed: u64, trial: u64) -> Result<f64> {
    let mut rng = stream_rng(trial_key(seed, trial), INPUT_STREAM);
    let inputs = input.sample(params.n, &mut rng);
    let truth: f64 = inputs.iter().sum();
    Ok(run_summation_with_params(&inputs, params, seed, trial)? - truth)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub trials: u64,
    pub empirical_mse: f64,
    pub empirical_bias: f64,
    /// Standard error of `empirical_bias`; infinite for a single trial.
    pub bias_stderr: f64,
    /// Standard error of `empirical_mse`; infinite for a single trial.
    pub mse_stderr: f64,
    pub theoretical_bound: f64,
    pub seed: u64,
    pub params: SummationParams,
}

impl ExperimentReport {
    fn from_errors(errors: &[f64], params: SummationParams, seed: u64) -> Self {
        let t = errors.len() as f64;
        let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
        for &e in errors {
            s1 += e;
            s2 += e * e;
            s4 += e * e * e * e;
        }
        let bias = s1 / t;
        let mse = s2 / t;
        let (bias_stderr, mse_stderr) = if errors.len() > 1 {
            let var = (s2 - t * bias * bias) / (t - 1.0);
            let var_sq = (s4 - t * mse * mse) / (t - 1.0);
            ((var.max(0.0) / t).sqrt(), (var_sq.max(0.0) / t).sqrt())
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        ExperimentReport {
            trials: errors.len() as u64,
            empirical_mse: mse,
            empirical_bias: bias,
            bias_stderr,
            mse_stderr,
            theoretical_bound: theoretical_mse_bound(&params),
            seed,
            params,
        }
    }
}

/// Empirical MSE and bias of the protocol over independent trials, run in parallel.
pub fn mse_experiment(
    n: u64,
    input: InputDistribution,
    trials: u64,
    epsilon: f64,
    delta: f64,
    seed: u64,
) -> Result<ExperimentReport> {
    let params = choose_parameters(epsilon, delta, n)?;
    mse_experiment_with_params(&params, input, trials, seed)
}

pub fn mse_experiment_with_params(
    params: &SummationParams,
    input: InputDistribution,
    trials: u64,
    seed: u64,
) -> Result<ExperimentReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let errors = (0..trials)
        .into_par_iter()
        .map(|t| trial_error(params, input, seed, t))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ExperimentReport::from_errors(&errors, *params, seed))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LMoments {
    pub mean: f64,
    pub second_moment: f64,
    pub min_seen: f64,
    pub max_seen: f64,
    /// Sample standard deviation of `L`.
    pub std_dev: f64,
    /// Sample standard deviation of `L²`.
    pub second_moment_std_dev: f64,
    pub samples: u64,
}

/// Sample statistics of the amplification variable for the pair `(x, x′)`.
pub fn empirical_l_moments(
    spec: &RandomizerSpec,
    epsilon: f64,
    x: Input,
    x_prime: Input,
    samples: u64,
    seed: u64,
) -> Result<LMoments> {
    if samples < 1000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..samples {
        let l = amplification_rv_sample(spec, epsilon, x, x_prime, &mut rng)?;
        s1 += l;
        s2 += l * l;
        s4 += l * l * l * l;
        lo = lo.min(l);
        hi = hi.max(l);
    }
    let t = samples as f64;
    let mean = s1 / t;
    let second = s2 / t;
    Ok(LMoments {
        mean,
        second_moment: second,
        min_seen: lo,
        max_seen: hi,
        std_dev: ((s2 - t * mean * mean) / (t - 1.0)).max(0.0).sqrt(),
        second_moment_std_dev: ((s4 - t * second * second) / (t - 1.0)).max(0.0).sqrt(),
        samples,
    })
}

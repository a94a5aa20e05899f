use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shuffle_dp::amplification::{delta_mixture_bound, BennettBound, HoeffdingBound};
use shuffle_dp::blanket::{amplification_rv_sample, profile_krr};
use shuffle_dp::numeric::bennett_phi;
use shuffle_dp::oracle::{
    canonical_pair_mass, exact_canonical_divergence_krr, exact_clipped_expectation_krr, exact_mixture_delta_krr,
    exact_shuffled_divergence_krr, exact_shuffled_divergence_krr_datasets, krr_histogram_distribution,
};
use shuffle_dp::randomizers::{RandomizerSpec, Value};

const LN2: f64 = std::f64::consts::LN_2;
const LN3: f64 = 1.098_612_288_668_109_8;

fn grid() -> Vec<(u64, u32, f64, f64)> {
    let mut cells = Vec::new();
    for n in 1..=8u64 {
        for k in [2u32, 3] {
            for eps0 in [0.5, 1.0, 2.0] {
                for frac in [0.1, 0.3, 0.7] {
                    cells.push((n, k, eps0, frac * eps0));
                }
            }
        }
    }
    cells
}

#[test]
fn histogram_distributions_sum_to_one() {
    for n in 1..=8 {
        for k in [2, 3, 4] {
            for eps0 in [0.0, 0.5, 2.0, 6.0] {
                let (p, q) = canonical_pair_mass(n, k, eps0).unwrap();
                assert!((p - 1.0).abs() < 1e-10 && (q - 1.0).abs() < 1e-10);
                let inputs: Vec<u32> = (0..n as u32).map(|i| 1 + i % k).collect();
                let total: f64 = krr_histogram_distribution(k, eps0, &inputs)
                    .unwrap()
                    .iter()
                    .map(|(_, w)| w)
                    .sum();
                assert!((total - 1.0).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn multinomial_route_matches_user_by_user_convolution() {
    for n in 1..=7u64 {
        for k in [2u32, 3, 4] {
            for &(eps0, eps) in &[(0.5, 0.1), (1.0, 0.3), (2.0, 0.0), (3.0, 1.0)] {
                let fast = exact_canonical_divergence_krr(n, k, eps0, eps).unwrap();
                let common = vec![1u32; n as usize - 1];
                let slow = exact_shuffled_divergence_krr_datasets(k, eps0, eps, &common, 1, 2).unwrap();
                assert!((fast - slow).abs() < 1e-13, "n={n} k={k} {fast} {slow}");
            }
        }
    }
}

#[test]
fn divergence_is_symmetric_in_the_differing_symbols() {
    for n in 2..=6u64 {
        let common_a = vec![1u32; n as usize - 1];
        let common_b = vec![2u32; n as usize - 1];
        for &(eps0, eps) in &[(0.5, 0.05), (1.0, 0.3), (2.0, 1.4)] {
            let d12 = exact_shuffled_divergence_krr_datasets(3, eps0, eps, &common_a, 1, 2).unwrap();
            let d23 = exact_shuffled_divergence_krr_datasets(3, eps0, eps, &common_b, 2, 3).unwrap();
            assert!((d12 - d23).abs() < 1e-14);
        }
    }
}

#[test]
fn worst_case_dominates_and_is_attained_among_all_neighbours() {
    // n = 4, k = 3: every multiset of 3 common inputs and every differing pair.
    let k = 3u32;
    for &(eps0, eps) in &[(0.5, 0.05), (1.0, 0.3), (2.0, 0.6), (1.0, 0.0)] {
        let worst = exact_shuffled_divergence_krr(4, k, eps0, eps).unwrap();
        let mut best = 0.0f64;
        for a in 1..=k {
            for b in a..=k {
                for c in b..=k {
                    for x in 1..=k {
                        for xp in 1..=k {
                            let d = exact_shuffled_divergence_krr_datasets(k, eps0, eps, &[a, b, c], x, xp).unwrap();
                            assert!(d <= worst + 1e-13, "common=({a},{b},{c}) {x}->{xp}: {d} > {worst}");
                            best = best.max(d);
                        }
                    }
                }
            }
        }
        assert!((best - worst).abs() < 1e-13, "{best} vs {worst}");
    }
}

#[test]
fn symmetric_pair_is_not_the_worst_case() {
    let canonical = exact_canonical_divergence_krr(3, 2, 0.5, 0.1).unwrap();
    assert!(exact_shuffled_divergence_krr(3, 2, 0.5, 0.1).unwrap() > canonical + 1e-3);
    let canonical = exact_canonical_divergence_krr(4, 3, 0.5, 0.05).unwrap();
    let spread = exact_shuffled_divergence_krr_datasets(3, 0.5, 0.05, &[1, 1, 1], 2, 3).unwrap();
    assert!(spread > canonical + 0.01, "{spread} vs {canonical}");
    assert!((exact_shuffled_divergence_krr(4, 3, 0.5, 0.05).unwrap() - spread).abs() < 1e-13);
}

#[test]
fn divergence_decreases_in_epsilon_and_vanishes_at_local_budget() {
    for n in 2..=7 {
        for k in [2, 3] {
            for eps0 in [0.5, 1.0, 2.0] {
                let mut prev = f64::INFINITY;
                for i in 0..=20 {
                    let eps = eps0 * i as f64 / 20.0;
                    let d = exact_shuffled_divergence_krr(n, k, eps0, eps).unwrap();
                    assert!(d <= prev + 1e-15);
                    prev = d;
                }
                assert!(prev.abs() < 1e-12);
            }
        }
    }
}

#[test]
fn sandwich_holds_on_the_small_grid() {
    for (n, k, eps0, eps) in grid() {
        let exact = exact_shuffled_divergence_krr(n, k, eps0, eps).unwrap();
        let mix = exact_mixture_delta_krr(n, k, eps0, eps).unwrap();
        let p = profile_krr(k, eps0, eps).unwrap();
        let h = delta_mixture_bound(n, p.gamma, &HoeffdingBound::from_profile(&p).unwrap()).unwrap();
        let b = delta_mixture_bound(n, p.gamma, &BennettBound::from_profile(&p).unwrap()).unwrap();
        assert!(exact <= mix + 1e-12, "n={n} k={k} eps0={eps0} eps={eps}");
        assert!(mix <= h + 1e-12 && mix <= b + 1e-12);
        assert!(h <= 1.0 && b <= 1.0);
    }
}

#[test]
fn mixture_example_at_eight_parties() {
    let mix = exact_mixture_delta_krr(8, 2, LN3, LN2).unwrap();
    let exact = exact_shuffled_divergence_krr(8, 2, LN3, LN2).unwrap();
    assert!(mix >= exact);
}

#[test]
fn clipped_expectation_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for &(m, k, eps0, eps) in &[(1u64, 2u32, LN3, LN2), (5, 3, 1.0, 0.3), (20, 4, 2.0, 0.5)] {
        let spec = RandomizerSpec::RandomizedResponse { k, eps0 };
        let exact = exact_clipped_expectation_krr(m, k, eps0, eps).unwrap();
        let draws = 1_000_000 / m as usize;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let mut total = 0.0;
            for _ in 0..m {
                total += amplification_rv_sample(&spec, eps, Value::Symbol(1), Value::Symbol(2), &mut rng).unwrap();
            }
            let v = total.max(0.0);
            s1 += v;
            s2 += v * v;
        }
        let t = draws as f64;
        let mean = s1 / t;
        let se = ((s2 / t - mean * mean) / t).sqrt();
        assert!(
            (mean - exact).abs() <= 5.0 * se,
            "m={m}: mc {mean} exact {exact} se {se}"
        );
    }
}

/// The Bennett bound with an extra `1/(a·m)` in the prefactor falls below the exact
/// clipped expectation, so it cannot serve as a per-m bound.
#[test]
fn bennett_with_extra_inverse_am_factor_undercuts_exact_value() {
    let (k, eps0, eps, m) = (2u32, 1.0, 0.1, 100u64);
    let p = profile_krr(k, eps0, eps).unwrap();
    let u = p.a * p.b_plus / p.c2;
    let tail = (-(m as f64) * p.c2 / (p.b_plus * p.b_plus) * bennett_phi(u)).exp();
    let with_factor = p.b_plus / (p.a * m as f64 * u.ln_1p()) * tail;
    let without = p.b_plus / u.ln_1p() * tail;
    let exact = exact_clipped_expectation_krr(m, k, eps0, eps).unwrap();
    assert!(with_factor < exact, "{with_factor} vs {exact}");
    assert!(without >= exact);
}

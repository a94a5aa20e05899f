use shuffle_dp::amplification::{calibrate_epsilon0, CalibrationOptions, Method};
use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shuffle-dp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn scratch(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn calibrate_generic_beats_baseline_reference() {
    let out = run(&[
        "calibrate",
        "--method",
        "hoeffding-generic",
        "--eps0",
        "0.2",
        "--n",
        "100000",
        "--delta",
        "1e-6",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(
        text.lines().next().unwrap(),
        "n,epsilon0,epsilon,delta,method,gamma,certified_by"
    );
    let row = &rows(&text)[0];
    assert_eq!(row[0], "100000");
    assert_eq!(row[4], "hoeffding-generic");
    assert_eq!(row[6], "amplification");
    let eps: f64 = row[2].parse().unwrap();
    assert!(eps < 0.028206, "epsilon {eps}");
}

#[test]
fn calibrate_rejects_baseline_outside_its_validity_range() {
    let out = run(&[
        "calibrate",
        "--method",
        "efmrtt",
        "--eps0",
        "0.6",
        "--n",
        "100000",
        "--delta",
        "1e-6",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ε₀ < 1/2"));
    assert!(out.stdout.is_empty());
}

#[test]
fn calibrate_local_budget_matches_library() {
    for name in ["bennett-rr", "hoeffding-rr"] {
        let out = run(&[
            "calibrate",
            "--method",
            name,
            "--k",
            "2",
            "--eps",
            "0.5",
            "--n",
            "10000",
            "--delta",
            "1e-6",
        ]);
        assert_eq!(out.status.code(), Some(0));
        let row = &rows(&stdout(&out))[0];
        let eps0: f64 = row[1].parse().unwrap();
        let want = calibrate_epsilon0(
            &Method::from_name(name, 2).unwrap(),
            10_000,
            1e-6,
            0.5,
            &CalibrationOptions::default(),
        )
        .unwrap()
        .value;
        assert_eq!(eps0, want, "{name}");
        assert_eq!(row[2].parse::<f64>().unwrap(), 0.5);
    }
}

#[test]
fn calibrate_input_errors_exit_two() {
    let cases: [&[&str]; 5] = [
        &[
            "calibrate",
            "--method",
            "hoeffding-rr",
            "--eps0",
            "1",
            "--eps",
            "0.5",
            "--n",
            "1000",
            "--delta",
            "1e-6",
        ],
        &[
            "calibrate",
            "--method",
            "nope",
            "--eps0",
            "1",
            "--n",
            "1000",
            "--delta",
            "1e-6",
        ],
        &[
            "calibrate",
            "--method",
            "hoeffding-rr",
            "--mechanism",
            "laplace",
            "--eps0",
            "1",
            "--n",
            "1000",
            "--delta",
            "1e-6",
        ],
        &[
            "calibrate",
            "--method",
            "hoeffding-rr",
            "--eps0",
            "1",
            "--n",
            "1000",
            "--delta",
            "2",
        ],
        &[
            "calibrate",
            "--method",
            "hoeffding-generic",
            "--eps0",
            "0.5",
            "--n",
            "10",
            "--delta",
            "1e-9",
            "--no-clamp",
        ],
    ];
    for args in cases {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn sweep_orders_rows_and_is_deterministic() {
    let a = scratch("sweep_a.csv");
    let b = scratch("sweep_b.csv");
    for path in [&a, &b] {
        let out = run(&[
            "sweep",
            "--methods",
            "efmrtt,hoeffding-generic,bennett-generic",
            "--n-grid",
            "1e3,1e4,1e5,1e6",
            "--eps0",
            "0.2",
            "--delta",
            "1e-6",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let table = rows(&text);
    assert_eq!(table.len(), 12);
    let keys: Vec<(String, u64)> = table.iter().map(|r| (r[4].clone(), r[0].parse().unwrap())).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    let eps = |method: &str, n: &str| -> f64 {
        table.iter().find(|r| r[4] == method && r[0] == n).unwrap()[2]
            .parse()
            .unwrap()
    };
    for n in ["1000", "10000", "100000", "1000000"] {
        assert!(eps("hoeffding-generic", n) < eps("efmrtt", n), "n={n}");
        assert!(eps("bennett-generic", n) < eps("efmrtt", n), "n={n}");
    }
}

#[test]
fn sweep_single_point_and_infeasible_cells() {
    let out = run(&["sweep", "--n-grid", "5000", "--eps0", "0.6", "--delta", "1e-6"]);
    assert_eq!(out.status.code(), Some(0));
    let table = rows(&stdout(&out));
    assert_eq!(table.len(), 7);
    let base = table.iter().find(|r| r[4] == "efmrtt").unwrap();
    assert_eq!(base[2], "inf");
    assert_eq!(base[6], "infeasible");
    for r in &table {
        assert!(!r[0].contains('_') && !r[2].contains(' '));
    }
}

#[test]
fn oracle_default_grid_holds() {
    let out = run(&["oracle"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(
        text.lines().next().unwrap(),
        "n,k,eps0,eps,exact,mixture_exact,hoeffding,bennett"
    );
    let table = rows(&text);
    assert_eq!(table.len(), 8 * 2 * 3 * 5);
    for r in &table {
        if r[2] == r[3] {
            assert!(r[4].parse::<f64>().unwrap().abs() < 1e-12, "{r:?}");
        }
    }
}

#[test]
fn oracle_hand_enumerated_cell() {
    let out = run(&[
        "oracle",
        "--n-max",
        "2",
        "--k-set",
        "2",
        "--eps0-grid",
        "ln3",
        "--eps-grid",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let table = rows(&stdout(&out));
    let cell = table.iter().find(|r| r[0] == "2").unwrap();
    assert!((cell[4].parse::<f64>().unwrap() - 0.375).abs() < 1e-12);
}

#[test]
fn oracle_rejects_grid_past_cap() {
    assert_eq!(run(&["oracle", "--n-max", "11"]).status.code(), Some(2));
}

#[test]
fn simulate_mse_is_within_bound() {
    let out = run(&[
        "simulate", "--n", "100000", "--eps", "1", "--delta", "0.01", "--trials", "500", "--dist", "uniform", "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(
        text.lines().next().unwrap(),
        "n,eps,delta,trials,empirical_mse,empirical_bias,theoretical_bound,seed"
    );
    let row = &rows(&text)[0];
    let mse: f64 = row[4].parse().unwrap();
    let bound: f64 = row[6].parse().unwrap();
    assert!(mse <= bound, "{mse} > {bound}");
    assert_eq!(row[7], "7");
}

#[test]
fn simulate_is_deterministic_and_unbiased_on_constant_input() {
    let args = [
        "simulate",
        "--n",
        "20000",
        "--eps",
        "1",
        "--delta",
        "0.01",
        "--trials",
        "200",
        "--dist",
        "constant0",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    let row = &rows(&stdout(&first))[0];
    assert_eq!(row[7], "0");
    let mse: f64 = row[4].parse().unwrap();
    let bias: f64 = row[5].parse().unwrap();
    let se = (mse / 200.0).sqrt();
    assert!(bias.abs() <= 3.0 * se, "bias {bias} se {se}");
}

#[test]
fn simulate_infeasible_exits_two() {
    assert_eq!(
        run(&["simulate", "--n", "100", "--eps", "1", "--delta", "0.01", "--trials", "5"])
            .status
            .code(),
        Some(2)
    );
}

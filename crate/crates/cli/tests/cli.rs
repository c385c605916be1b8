mod common;

use std::fs;

use common::*;
use invlrr::linalg;
use invlrr::solvers::{Mode, RegressionProblem};
use invlrr_cli::harness::{self, SUITES};
use invlrr_cli::matfile::read_matrix;
use tempfile::tempdir;

#[test]
fn gen_data_is_reproducible() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.conf", STANDARD);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run_in("gen-data", &cfg, &a, &[]).code, 0);
    assert_eq!(run_in("gen-data", &cfg, &b, &[]).code, 0);
    for f in ["X.mat", "Y.mat", "Wtrue.mat"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let other = dir.path().join("c");
    assert_eq!(run_in("gen-data", &cfg, &other, &["--seed", "2"]).code, 0);
    assert_ne!(fs::read(a.join("X.mat")).unwrap(), fs::read(other.join("X.mat")).unwrap());
}

#[test]
fn noiseless_invariant_target_is_recovered() {
    let dir = tempdir().unwrap();
    let text = "group = c4_image:3\ndL = 4\nn = 30\nnoise_sigma = 0\ntarget_rank = 2\nr = 2\nmode = constrained\n";
    let cfg = write_config(dir.path(), "s.conf", text);
    assert_eq!(run_in("gen-data", &cfg, dir.path(), &[]).code, 0);
    let solved = run_in("solve", &cfg, dir.path(), &[]);
    assert_eq!(solved.code, 0, "{}", solved.stderr);
    let w = dir.path().join("W.mat");
    let truth = dir.path().join("Wtrue.mat");
    let cmp = invlrr(&["compare", w.to_str().unwrap(), truth.to_str().unwrap()]);
    assert_eq!(cmp.code, 0, "{}", cmp.stderr);
}

#[test]
fn generated_targets_have_full_transformed_rank() {
    let dir = tempdir().unwrap();
    // Two 4-cycles on 8 coordinates: invariant dimension 2.
    write_permutation(dir.path(), "c4.mat", &[1, 2, 3, 0, 5, 6, 7, 4]);
    for seed in 0..20 {
        let out = dir.path().join(format!("s{seed}"));
        let text = format!("group = custom:c4.mat+4\ndL = 5\nn = 40\nnoise_sigma = 0.5\nseed = {seed}\nr = 1\n");
        let cfg = write_config(dir.path(), "g.conf", &text);
        assert_eq!(run_in("gen-data", &cfg, &out, &[]).code, 0);
        let x = read_matrix(&out.join("X.mat")).unwrap();
        let y = read_matrix(&out.join("Y.mat")).unwrap();
        let rep = invlrr_cli::ExperimentConfig::load(&cfg).unwrap().rep().unwrap();
        let p = RegressionProblem::new(x, y, 1).unwrap().with_rep(rep).unwrap();
        let target = p.transformed_target(Mode::Constrained).unwrap().target;
        assert_eq!(linalg::numerical_rank(&target).unwrap(), 2, "seed {seed}");
    }
}

#[test]
fn solve_modes_and_summary() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.conf", &format!("{STANDARD}mode = constrained\n"));
    assert_eq!(run_in("gen-data", &cfg, dir.path(), &[]).code, 0);
    let c_dir = dir.path().join("c");
    let cfg_c = write_config(dir.path(), "c.conf", &format!("{STANDARD}mode = constrained\ndata_dir = .\n"));
    let cons = run_in("solve", &cfg_c, &c_dir, &[]);
    assert_eq!(cons.code, 0, "{}", cons.stderr);
    assert!(field(&cons.stdout, "invariance_residual").parse::<f64>().unwrap() < 1e-9);
    assert_eq!(field(&cons.stdout, "mode"), "constrained");
    assert_eq!(field(&cons.stdout, "warnings"), "none");

    let a_dir = dir.path().join("a");
    let cfg_a = write_config(dir.path(), "a.conf", &format!("{STANDARD}mode = augmented\ndata_dir = .\n"));
    assert_eq!(run_in("solve", &cfg_a, &a_dir, &[]).code, 0);
    let cmp = invlrr(&[
        "compare",
        a_dir.join("W.mat").to_str().unwrap(),
        c_dir.join("W.mat").to_str().unwrap(),
        "--tol",
        "1e-8",
    ]);
    assert_eq!(cmp.code, 0, "{}", cmp.stderr);
}

#[test]
fn missing_input_names_the_file() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.conf", STANDARD);
    let run = run_in("solve", &cfg, dir.path(), &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("X.mat"), "{}", run.stderr);
    assert_eq!(run.stderr.lines().filter(|l| l.starts_with("error")).count(), 1);
}

#[test]
fn path_csv() {
    let dir = tempdir().unwrap();
    let text = format!("{STANDARD}lambda_grid = geom:1e-3:1e6:19\n");
    let cfg = write_config(dir.path(), "p.conf", &text);
    assert_eq!(run_in("gen-data", &cfg, dir.path(), &[]).code, 0);
    let run = run_in("path", &cfg, dir.path(), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (header, rows) = read_csv(&dir.path().join("path.csv"));
    assert_eq!(header, ["lambda", "loss", "invariance_residual", "distance_to_inv"]);
    assert_eq!(rows.len(), 19);
    let lambdas = column(&rows, 0);
    assert!(lambdas.windows(2).all(|w| w[0] < w[1]));
    let dist = column(&rows, 3);
    assert!(dist[18] < dist[0]);
    let first = fs::read(dir.path().join("path.csv")).unwrap();
    assert_eq!(run_in("path", &cfg, dir.path(), &[]).code, 0);
    assert_eq!(fs::read(dir.path().join("path.csv")).unwrap(), first);

    for grid in ["0, 1, 2", "-1, 1", "1, 1"] {
        let bad = write_config(dir.path(), "bad.conf", &format!("{STANDARD}lambda_grid = {grid}\n"));
        assert_eq!(run_in("path", &bad, dir.path(), &[]).code, 1, "{grid}");
    }
}

#[test]
fn critical_points_csv() {
    let dir = tempdir().unwrap();
    write_permutation(dir.path(), "swap.mat", &[1, 0, 3, 2, 5, 4, 7, 6]);
    let base = "group = custom:swap.mat+2\ndL = 5\nn = 24\nnoise_sigma = 1\ninvariant_target = false\nseed = 4\n";
    let cfg = write_config(dir.path(), "c.conf", &format!("{base}r = 2\nmode = constrained\n"));
    assert_eq!(run_in("gen-data", &cfg, dir.path(), &[]).code, 0);
    let run = run_in("critical-points", &cfg, dir.path(), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (header, rows) = read_csv(&dir.path().join("critical.csv"));
    assert_eq!(header, ["index_set", "loss", "is_global_min"]);
    assert_eq!(rows.len(), 6);
    assert_eq!(rows.iter().filter(|r| r[2] == "true").count(), 1);
    assert_eq!(rows[0][0], "{1;2}");
    let losses = column(&rows, 1);
    assert!(losses.windows(2).all(|w| w[0] <= w[1]));

    let reg = write_config(dir.path(), "r.conf", &format!("{base}r = 2\nmode = regularized\nlambda = 0.1\n"));
    assert_eq!(run_in("critical-points", &reg, dir.path(), &[]).code, 0);
    assert_eq!(read_csv(&dir.path().join("critical.csv")).1.len(), 10);

    let zero = write_config(dir.path(), "z.conf", &format!("{base}r = 0\nmode = constrained\n"));
    let run = run_in("critical-points", &zero, dir.path(), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (_, rows) = read_csv(&dir.path().join("critical.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "{}");
}

#[test]
fn degenerate_spectrum_exits_two() {
    let dir = tempdir().unwrap();
    let x = invlrr::Matrix::identity(4, 4);
    let y = invlrr::Matrix::from_fn(2, 4, |i, j| if i == j { 1.0 } else { 0.0 });
    invlrr_cli::matfile::write_matrix(&dir.path().join("X.mat"), &x).unwrap();
    invlrr_cli::matfile::write_matrix(&dir.path().join("Y.mat"), &y).unwrap();
    let cfg = write_config(dir.path(), "d.conf", "group = trivial:4\nr = 1\n");
    let run = run_in("critical-points", &cfg, dir.path(), &[]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.to_lowercase().contains("degenerate"), "{}", run.stderr);
}

#[test]
fn train_csv_and_solver_agreement() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.conf", &format!("{STANDARD}mode = augmented\n"));
    assert_eq!(run_in("gen-data", &cfg, dir.path(), &[]).code, 0);
    let cfg_s = write_config(dir.path(), "s2.conf", &format!("{STANDARD}mode = augmented\ndata_dir = .\n"));
    let solved = run_in("solve", &cfg_s, &dir.path().join("solve"), &[]);
    let loss: f64 = field(&solved.stdout, "loss").parse().unwrap();

    let trained = run_in("train", &cfg, dir.path(), &[]);
    assert_eq!(trained.code, 0, "{}", trained.stderr);
    let (header, rows) = read_csv(&dir.path().join("trainlog.csv"));
    assert_eq!(header, ["epoch", "objective", "w_perp_frob", "invariance_ratio", "accuracy"]);
    assert_eq!(rows.len(), 5000);
    let objective = column(&rows, 1);
    assert!((objective[4999] - loss).abs() < 1e-4);
    assert!(dir.path().join("Wfinal.mat").is_file());

    let hw = write_config(dir.path(), "h.conf", &format!("{STANDARD}mode = hardwired\n").replace("5000", "200"));
    assert_eq!(run_in("train", &hw, dir.path(), &[]).code, 0);
    let (_, rows) = read_csv(&dir.path().join("trainlog.csv"));
    assert!(column(&rows, 2).iter().all(|v| *v <= 1e-12));

    let one = write_config(dir.path(), "o.conf", &format!("{STANDARD}mode = augmented\n").replace("5000", "1"));
    assert_eq!(run_in("train", &one, dir.path(), &[]).code, 0);
    assert_eq!(read_csv(&dir.path().join("trainlog.csv")).1.len(), 1);
}

#[test]
fn divergence_exits_two() {
    let dir = tempdir().unwrap();
    let text = format!("{STANDARD}mode = augmented\n").replace("learning_rate = 0.001", "learning_rate = 1e6");
    let cfg = write_config(dir.path(), "s.conf", &text);
    assert_eq!(run_in("gen-data", &cfg, dir.path(), &[]).code, 0);
    let run = run_in("train", &cfg, dir.path(), &[]);
    assert_eq!(run.code, 2, "{}", run.stderr);
    assert!(run.stderr.contains("diverge"), "{}", run.stderr);
}

#[test]
fn ntk_check_suites() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), "n.conf", "group = c4_image:4\nwidth = 65536\ntrials = 50\nseed = 0\n");
    let run = run_in("ntk-check", &cfg, dir.path(), &[]);
    assert_eq!(run.code, 0, "{}\n{}", run.stdout, run.stderr);
    let (header, rows) = read_csv(&dir.path().join("ntk.csv"));
    assert_eq!(header, ["suite", "trial", "discrepancy", "tolerance", "pass"]);
    for suite in SUITES {
        assert!(rows.iter().any(|r| r[0] == suite), "{suite}");
    }
    assert!(rows.iter().filter(|r| r[0] == "orbit_equality").all(|r| r[2].parse::<f64>().unwrap() < 1e-12));

    let trivial = write_config(dir.path(), "t.conf", "group = trivial:3\nwidth = 4096\ntrials = 10\n");
    let run = run_in("ntk-check", &trivial, dir.path(), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
}

#[test]
fn failing_suite_exits_two_and_names_it() {
    // A width-2 Monte-Carlo estimate cannot sit within 3 standard errors of
    // the limit for every pair.
    let rows = harness::monte_carlo_suite(4, 2, 50, 0).unwrap();
    assert!(rows.iter().any(|r| !r.pass()));
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), "n.conf", "group = c4_image:2\nwidth = 2\ntrials = 50\n");
    let run = run_in("ntk-check", &cfg, dir.path(), &[]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("monte_carlo"), "{}", run.stderr);
}

#[test]
fn usage_and_config_errors_exit_one() {
    assert_eq!(invlrr(&["--help"]).code, 0);
    assert_eq!(invlrr(&[]).code, 1);
    assert_eq!(invlrr(&["frobnicate"]).code, 1);
    assert_eq!(invlrr(&["solve", "--bogus"]).code, 1);
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), "u.conf", "group = c4_image:4\ncolour = red\n");
    let run = run_in("gen-data", &cfg, dir.path(), &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("colour"));
    let missing = dir.path().join("nope.conf");
    assert_eq!(run_in("gen-data", &missing, dir.path(), &[]).code, 1);
    let custom = write_config(dir.path(), "c.conf", "group = custom:absent.mat+3\n");
    let run = run_in("gen-data", &custom, dir.path(), &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("absent.mat"));
}

#[test]
fn compare_mismatch_exits_two() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a.mat");
    let b = dir.path().join("b.mat");
    fs::write(&a, "1 2\n1 2\n").unwrap();
    fs::write(&b, "1 2\n1 2.1\n").unwrap();
    let (sa, sb) = (a.to_str().unwrap(), b.to_str().unwrap());
    assert_eq!(invlrr(&["compare", sa, sa]).code, 0);
    assert_eq!(invlrr(&["compare", sa, sb]).code, 2);
    assert_eq!(invlrr(&["compare", sa, sb, "--tol", "0.1"]).code, 0);
    fs::write(&b, "2 1\n1\n2\n").unwrap();
    assert_eq!(invlrr(&["compare", sa, sb]).code, 2);
}

#[test]
fn singular_data_exits_two() {
    let dir = tempdir().unwrap();
    // Three samples in four dimensions: X Xᵀ is singular.
    let x = invlrr::Matrix::from_fn(4, 3, |i, j| (i + 2 * j) as f64);
    invlrr_cli::matfile::write_matrix(&dir.path().join("X.mat"), &x).unwrap();
    invlrr_cli::matfile::write_matrix(&dir.path().join("Y.mat"), &invlrr::Matrix::zeros(2, 3)).unwrap();
    let cfg = write_config(dir.path(), "s.conf", "group = cyclic_perm:4\nr = 1\n");
    assert_eq!(run_in("solve", &cfg, dir.path(), &[]).code, 2);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use bandit_misspec::environments::{gen_linear, BanditInstance, LinearSpec};
use bandit_misspec::experiments::read_csv;
use bandit_misspec::linalg::Matrix;
use bandit_misspec::RngStream;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bandit-misspec"))
}

fn manifest(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {report}"))
        .parse()
        .unwrap()
}

#[test]
fn help_lists_flags_with_defaults() {
    let cases: [(&str, &[&str]); 5] = [
        (
            "simulate",
            &["--T", "--replications", "--seed", "--quiet", "--out-dir"],
        ),
        (
            "adversarial",
            &[
                "--mode", "--T", "--c", "--boost", "--runs", "--policy", "--csv",
            ],
        ),
        ("check-deviation", &["--subsets", "--beta", "--exhaustive"]),
        ("ingest", &["--rows", "--cols", "--K", "--out", "--seed"]),
        (
            "bounds",
            &[
                "--T", "--N", "--k", "--lambda", "--l1", "--beta", "--c1", "--c2", "--r-p",
            ],
        ),
    ];
    for (cmd, flags) in cases {
        let o = run(&[cmd, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{cmd}");
        let text = stdout(&o);
        for f in flags {
            assert!(text.contains(f), "{cmd} help lacks {f}");
        }
    }
    let text = stdout(&run(&["bounds", "--help"]));
    assert!(text.matches("[default: ").count() >= 15, "{text}");
}

#[test]
fn smoke_config_is_fast_and_writes_three_series() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let o = run(&[
        "--out-dir",
        dir.path().to_str().unwrap(),
        "simulate",
        manifest("configs/smoke.toml").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(start.elapsed().as_secs_f64() < 1.0);
    let series = read_csv(&std::fs::read(dir.path().join("smoke_regret.csv")).unwrap()).unwrap();
    assert_eq!(series.len(), 3);
    assert!(series.values().all(|rows| rows.len() == 10));
    assert!(stdout(&o).contains("rlb"));
}

#[test]
fn shipped_configs_resolve() {
    for name in ["h0.toml", "h1.toml", "smoke.toml"] {
        let path = manifest(&format!("configs/{name}"));
        let (cfg, text) = bandit_misspec::cli::CliConfig::load(&path).unwrap();
        let run = cfg.to_run_config(&text, path.parent().unwrap()).unwrap();
        if name != "smoke.toml" {
            assert_eq!(run.replications, 1000);
            assert_eq!(run.policies.len(), 3);
        }
    }
}

#[test]
fn misspelled_config_key_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(manifest("configs/smoke.toml"))
        .unwrap()
        .replace("kind = \"oful\"", "kind = \"oful\"\nlamda = 0.01");
    let path = dir.path().join("typo.toml");
    std::fs::write(&path, text).unwrap();
    let o = run(&["simulate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("lamda") && err.contains("line 8"), "{err}");
}

#[test]
fn adversarial_modes() {
    assert_eq!(run(&["adversarial", "--T", "0"]).status.code(), Some(1));
    assert_eq!(
        run(&["adversarial", "--mode", "nonsense"]).status.code(),
        Some(1)
    );

    let o = run(&[
        "adversarial",
        "--mode",
        "twoarm",
        "--T",
        "2000",
        "--runs",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(value(&stdout(&o), "suboptimal-play fraction") >= 0.9);

    let o = run(&[
        "adversarial",
        "--mode",
        "sparse",
        "--policy",
        "ucb",
        "--T",
        "2000",
        "--runs",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = stdout(&o);
    let per_round: Vec<f64> = report
        .lines()
        .skip_while(|l| !l.trim_start().starts_with('t'))
        .skip(1)
        .take(3)
        .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(per_round.len(), 3, "{report}");
    assert!(
        per_round[0] > per_round[1] && per_round[1] > per_round[2],
        "{per_round:?}"
    );
}

fn save(inst: &BanditInstance, dir: &Path, name: &str) -> String {
    let p = dir.join(name);
    inst.save(&p).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn check_deviation_reports() {
    let dir = tempfile::tempdir().unwrap();
    let linear = gen_linear(&LinearSpec::new(40, 3), &mut RngStream::new(5)).unwrap();
    let o = run(&[
        "check-deviation",
        &save(&linear, dir.path(), "lin.txt"),
        "--subsets",
        "500",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(value(&stdout(&o), "l_hat").abs() < 1e-6);

    let mut rng = RngStream::new(6);
    let features = Matrix::new(2, 6, (0..12).map(|_| rng.uniform()).collect()).unwrap();
    let small = BanditInstance::from_model(
        features,
        vec![0.3, 0.2],
        vec![0.0, 0.0, 0.7, 0.0, 0.0, 0.0],
        0.1,
    )
    .unwrap();
    let o = run(&[
        "check-deviation",
        &save(&small, dir.path(), "six.txt"),
        "--exhaustive",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = stdout(&o);
    assert_eq!(value(&report, "subsets sampled"), 60.0);

    let o = run(&[
        "check-deviation",
        dir.path().join("absent.txt").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn all_singular_subsets_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let features = Matrix::new(2, 4, vec![1.0, 2.0, 3.0, 4.0, 2.0, 4.0, 6.0, 8.0]).unwrap();
    let inst =
        BanditInstance::from_parts(features, vec![0.1, 0.2, 0.3, 0.4], vec![0.0; 4], 0.1).unwrap();
    let o = run(&[
        "check-deviation",
        &save(&inst, dir.path(), "sing.txt"),
        "--exhaustive",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn ingest_writes_instances() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let letor = manifest("data/synthetic_letor.txt");
    let letor = letor.to_str().unwrap();
    let o = run(&[
        "--out-dir",
        out_dir,
        "ingest",
        letor,
        "--K",
        "4",
        "--out",
        "k4.txt",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        BanditInstance::load(&dir.path().join("k4.txt"))
            .unwrap()
            .n_arms(),
        4
    );

    let o = run(&[
        "--out-dir",
        out_dir,
        "ingest",
        letor,
        "--rlb-k",
        "70",
        "--out",
        "k20.txt",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(value(&report, "mean_abs_residual") > 0.05);
    assert!(report.contains("rlb verdict (k = 70) = H1"), "{report}");

    let o = run(&["ingest", letor, "--rows", "5000"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("only 2000 records"), "{}", stderr(&o));

    assert_eq!(
        run(&["ingest", "/nonexistent/letor.txt"]).status.code(),
        Some(1)
    );
}

#[test]
fn bounds_command() {
    let o = run(&["bounds"]);
    assert_eq!(o.status.code(), Some(0));
    let report = stdout(&o);
    for key in ["oful_small_dev_bound", "rlb_h0_bound", "rlb_h1_bound"] {
        let v = value(&report, key);
        assert!(v.is_finite() && v > 0.0, "{key} = {v}");
    }
    for key in ["delta1", "delta2"] {
        assert!((0.0..=1.0).contains(&value(&report, key)));
    }

    let o = run(&["bounds", "--l1", "0.05"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("k/ln k > b/l1^2"), "{}", stderr(&o));

    let o = run(&["bounds", "--R", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&stdout(&o), "delta1"), 0.0);
}

#[test]
fn quiet_suppresses_the_report() {
    let o = run(&["--quiet", "bounds"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
}

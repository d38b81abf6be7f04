use std::path::Path;
use std::process::{Command, Output};

fn circsense(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circsense"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn phase_is_reproducible_and_feeds_fit_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "phase", "--N", "64", "--s", "2,3,4,5", "--n", "4,8,12,16,24,32", "--trials", "10", "--seed", "7", "--out",
    ];
    let mut a = args.to_vec();
    a.push("a.csv");
    ok(&circsense(&a, dir.path()));
    let mut b = args.to_vec();
    b.push("b.csv");
    ok(&circsense(&b, dir.path()));
    let ca = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(ca, std::fs::read(dir.path().join("b.csv")).unwrap());
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("kind,preset,N,n,s,trial_count,successes,rate,seed"));
    assert_eq!(text.lines().count(), 1 + 4 * 6);

    let fit = ok(&circsense(&["fit", "--in", "a.csv", "--N", "64", "--bootstrap", "100"], dir.path()));
    let v: serde_json::Value = serde_json::from_str(&fit).unwrap();
    assert!(v["q"].as_f64().unwrap().is_finite());
    assert!(v["q_ci_low"].as_f64().unwrap() <= v["q_ci_high"].as_f64().unwrap());

    ok(&circsense(&["plot", "--in", "a.csv", "--N", "64", "--out", "grid.svg"], dir.path()));
    let svg = std::fs::read_to_string(dir.path().join("grid.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn thread_override_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_circsense"))
            .args(["phase", "--N", "32", "--s", "2,3", "--n", "6,12", "--trials", "8", "--seed", "1", "--out", out])
            .env("CIRCSENSE_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap();
        ok(&o);
        std::fs::read(dir.path().join(out)).unwrap()
    };
    assert_eq!(run("1", "one.csv"), run("4", "four.csv"));
}

#[test]
fn gen_then_recover() {
    let dir = tempfile::tempdir().unwrap();
    ok(&circsense(
        &["gen", "--kind", "toeplitz", "--N", "64", "--n", "30", "--s", "3", "--seed", "2", "--out", "inst.json"],
        dir.path(),
    ));
    let inst: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("inst.json")).unwrap()).unwrap();
    assert_eq!(inst["N"], 64);
    assert_eq!(inst["omega"].as_array().unwrap().len(), 30);
    assert_eq!(inst["generator"].as_array().unwrap().len(), 127);
    let res = ok(&circsense(&["recover", "--in", "inst.json"], dir.path()));
    let r: serde_json::Value = serde_json::from_str(&res).unwrap();
    assert_eq!(r["status"], "converged");
    let x_hat: Vec<f64> = r["x_hat"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let x: Vec<f64> = inst["x"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let err: f64 = x_hat.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(err < 1e-6);
}

#[test]
fn analysis_subcommands_write_the_common_schema() {
    let dir = tempfile::tempdir().unwrap();
    let header = "seed,trial,N,n,s,statistic,value,bound";
    let coh = ok(&circsense(&["coherence", "--N", "64", "--n", "16", "--trials", "3"], dir.path()));
    assert!(coh.starts_with(header));
    assert_eq!(coh.lines().count(), 4);
    let cert = ok(&circsense(&["certify", "--N", "64", "--n", "32", "--s", "3", "--trials", "2"], dir.path()));
    assert!(cert.starts_with(header));
    let spec = ok(&circsense(&["spectra", "--N", "64", "--n", "16,32", "--s", "3", "--trials", "2"], dir.path()));
    assert!(spec.starts_with(header));
    assert_eq!(spec.lines().count(), 5);
    let q = ok(&circsense(&["spectra", "--N", "64", "--n", "16,32", "--s", "3", "--trials", "5", "--quantiles"], dir.path()));
    assert!(q.starts_with("kind,preset,support,N,n,s"));
}

#[test]
fn budget_prints_three_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&circsense(&["budget", "--N", "1024", "--s", "8", "--eps", "0.1"], dir.path()));
    for key in ["n_cond2", "n_cond1", "n_required"] {
        assert!(out.contains(key), "{out}");
    }
}

#[test]
fn khintchine_modes() {
    let dir = tempfile::tempdir().unwrap();
    let c = ok(&circsense(&["khintchine", "--mode", "constants", "--m", "1", "--p", "2"], dir.path()));
    let v: serde_json::Value = serde_json::from_str(&c).unwrap();
    assert!((v["b_m"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    for mode in ["chaos", "scalar", "decouple"] {
        let out = ok(&circsense(&["khintchine", "--mode", mode, "--families", "3", "--M", "4"], dir.path()));
        assert!(out.starts_with("family_seed,M,r,t,order,lhs,rhs,ratio,active_term,method"));
        assert_eq!(out.lines().count(), 4);
    }
    let t = ok(&circsense(&["khintchine", "--mode", "tail", "--beta", "4", "--u", "2"], dir.path()));
    let v: serde_json::Value = serde_json::from_str(&t).unwrap();
    assert!((v["bound"].as_f64().unwrap() - 4.0 * (-2.0f64).exp()).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["bogus"],
        vec!["phase", "--N", "16", "--s", "40"],
        vec!["budget", "--N", "16"],
        vec!["recover", "--in", "missing.json"],
        vec!["gen", "--kind", "hankel", "--N", "8", "--s", "1"],
    ] {
        let out = circsense(&args, dir.path());
        assert!(!out.status.success(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

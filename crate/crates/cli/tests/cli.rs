use std::path::Path;
use std::process::{Command, Output};

fn wrates(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wrates")).args(args).current_dir(dir).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn wp_two_point() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), "x1,weight\n0,0.5\n1,0.5\n").unwrap();
    std::fs::write(dir.path().join("b.csv"), "x1,weight\n0.5,1\n").unwrap();
    for method in ["exact", "brute", "one-d"] {
        let out = wrates(&["wp", "a.csv", "b.csv", "-p", "2", "--method", method], dir.path());
        assert_eq!(out.status.code(), Some(0));
        assert!((json(&out)["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    }
    let out = wrates(&["wp", "a.csv", "b.csv", "--plan", "plan.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("plan.csv").exists());
}

#[test]
fn bound_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok =
        wrates(&["bound", "finite-dim", "--k-e", "1", "--alpha", "3", "--d", "1", "-p", "1", "-n", "100"], dir.path());
    assert_eq!(ok.status.code(), Some(0));
    let v = json(&ok);
    assert_eq!(v["applicable"], true);
    assert!(v["inputs"]["alpha"].as_f64() == Some(3.0));
    let inapplicable =
        wrates(&["bound", "finite-dim", "--k-e", "1", "--alpha", "2", "--d", "1", "-p", "1", "-n", "100"], dir.path());
    assert_eq!(inapplicable.status.code(), Some(2));
    assert_eq!(json(&inapplicable)["applicable"], false);
    let bad =
        wrates(&["bound", "finite-dim", "--k-e=-1", "--alpha", "3", "--d", "1", "-p", "1", "-n", "100"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    let usage = wrates(&["bound", "finite-dim", "--alpha", "3"], dir.path());
    assert_eq!(usage.status.code(), Some(1));
}

#[test]
fn gaussian_bound_example() {
    // psi(t) = t^-2, kappa = 4: psi^{-1}(log n / 10) + n^{-1/40} at n = e^40.
    let dir = tempfile::tempdir().unwrap();
    let n = format!("{}", 40f64.exp().round() as u64);
    let out = wrates(
        &[
            "bound",
            "gaussian",
            "--sigma",
            "1",
            "--kappa",
            "4",
            "--t0",
            "2",
            "--psi-scale",
            "1",
            "--psi-exponent",
            "2",
            "-n",
            &n,
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out)["value"].as_f64().unwrap();
    assert!((v - (0.5 + (-1f64).exp())).abs() < 1e-6, "{v}");
}

#[test]
fn experiment_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "p = 1.0\nn_grid = [4, 8, 16]\nreplicates = 4\nseed = 1\n[scenario]\nkind = \"iid_cube\"\ndim = 3\nreference_size = 50\n",
    )
    .unwrap();
    let out = wrates(&["experiment", "c.toml", "--jobs", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out_dir = json(&out)["output_dir"].as_str().unwrap().to_string();
    for f in ["results.csv", "report.json", "plot.svg"] {
        assert!(dir.path().join(&out_dir).join(f).exists());
    }
    std::fs::write(
        dir.path().join("d.toml"),
        "p = 1.0\nn_grid = [4, 8, 16]\nreplicates = 4\nseed = 1\n[scenario]\nkind = \"iid_cube\"\ndim = 1\nreference_size = 50\n",
    )
    .unwrap();
    assert_eq!(wrates(&["experiment", "d.toml"], dir.path()).status.code(), Some(2));
    std::fs::write(dir.path().join("e.toml"), "p = 1.0\n").unwrap();
    assert_eq!(wrates(&["experiment", "e.toml"], dir.path()).status.code(), Some(1));
}

#[test]
fn markov_gap_and_small_ball() {
    let dir = tempfile::tempdir().unwrap();
    let out = wrates(&["markov", "gap", "--grid", "8"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let (l, f) = (v["lambda"].as_f64().unwrap(), v["variance_decay_lambda"].as_f64().unwrap());
    assert!((l - f).abs() < 1e-6);
    let out = wrates(
        &["gaussian", "smallball", "--truncation", "8", "--grid", "8", "--mc", "2000", "--t", "0.5,1,2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["estimates"].as_array().unwrap().len(), 3);
}

#[test]
fn tree_bound_sandwich() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), "x1,x2,weight\n0,0,0.25\n1,0,0.25\n0,1,0.5\n").unwrap();
    std::fs::write(dir.path().join("b.csv"), "x1,x2,weight\n0.5,0.5,0.5\n1,1,0.5\n").unwrap();
    let out = wrates(&["tree-bound", "a.csv", "b.csv", "-p", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let exact = v["exact"].as_f64().unwrap();
    let plan = v["plan_cost"].as_f64().unwrap();
    let bound = v["bound"]["value"].as_f64().unwrap();
    assert!(exact <= plan + 1e-9 && plan <= bound + 1e-9, "{exact} {plan} {bound}");
}

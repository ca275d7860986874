use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn brlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brlab"))
        .args(args)
        .current_dir(dir)
        .env_remove("BRLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn exponent_outside_unit_interval_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", "p = 1.2\n");
    let o = brlab(&["weak-type", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("p ∈ (0,1) required by both theorems"));
}

#[test]
fn odd_exponent_gauge_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", "gauge = ell_3\n");
    let o = brlab(&["omega", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unit sphere not smooth/convex as required"));
}

#[test]
fn oversized_grid_gets_a_suggestion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", "n = 3\nn_side = 2048\n");
    let o = brlab(&["kernel-decay", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("N_side <="), "{}", stderr(&o));
}

#[test]
fn strong_type_at_critical_index_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", "delta = critical\n");
    let o = brlab(&["lp-bound", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("delta > delta(p)"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", "experiment = atoms\n");
    assert_eq!(brlab(&["weak-type", "--config", &cfg], dir.path()).status.code(), Some(2));
    assert_eq!(brlab(&["no-such", "--config", &cfg], dir.path()).status.code(), Some(2));
    assert_eq!(brlab(&["atoms", "--config", "missing.cfg"], dir.path()).status.code(), Some(2));
    let bad = write_config(dir.path(), "bad.cfg", "colour = blue\n");
    assert_eq!(brlab(&["atoms", "--config", &bad], dir.path()).status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_one_and_leaves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    // a kernel box this small cannot sample the frequency shell
    let cfg = write_config(dir.path(), "c.cfg", "n_side = 64\nhalf_width = 1\nk_min = 2\nk_max = 2\n");
    let out = dir.path().join("out");
    let o = brlab(&["kernel-decay", "--config", &cfg, "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("under-resolved"));
    assert!(!out.exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.cfg",
        "experiment = weak-type\nn_side = 128\nradii = 8\nseeds = 2\nscales = 1\ndirections = 64\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let oa = brlab(&["weak-type", "--config", &cfg, "--out", a.to_str().unwrap(), "--seed", "11"], dir.path());
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    let ob = Command::new(env!("CARGO_BIN_EXE_brlab"))
        .args(["weak-type", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "11"])
        .env("BRLAB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(ob.status.code(), Some(0), "{}", stderr(&ob));
    let ta: Vec<_> = tree(&a).into_iter().filter(|(p, _)| p != "run.json").collect();
    let tb: Vec<_> = tree(&b).into_iter().filter(|(p, _)| p != "run.json").collect();
    assert!(ta.iter().any(|(p, _)| p == "report.json"));
    assert!(ta.iter().any(|(p, _)| p.starts_with("curves/")));
    assert!(ta.iter().any(|(p, _)| p.starts_with("fields/")));
    assert_eq!(ta, tb);
    // the run records agree on every checksum
    let record = |d: &Path| -> serde_json::Value {
        serde_json::from_str(&fs::read_to_string(d.join("run.json")).unwrap()).unwrap()
    };
    let (ra, rb) = (record(&a), record(&b));
    assert_eq!(ra["artifacts"], rb["artifacts"]);
    assert_eq!(ra["config_hash"], rb["config_hash"]);

    let oc = brlab(&["weak-type", "--config", &cfg, "--out", dir.path().join("c").to_str().unwrap(), "--seed", "12"], dir.path());
    assert_eq!(oc.status.code(), Some(0));
    let tc: Vec<_> = tree(&dir.path().join("c")).into_iter().filter(|(p, _)| p != "run.json").collect();
    assert_ne!(ta, tc);
}

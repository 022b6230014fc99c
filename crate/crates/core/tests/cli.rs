use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sokoshape"))
}

#[test]
fn solve_corridor() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.xsb");
    fs::write(&path, "#####\n#@$.#\n#####\n").unwrap();
    let out = bin().arg("solve").arg(&path).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("R"));
    assert_eq!(lines.next(), Some("length 1"));
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let stuck = dir.path().join("s.xsb");
    fs::write(&stuck, "#####\n#$  #\n# @.#\n#####\n").unwrap();
    assert_eq!(bin().arg("solve").arg(&stuck).status().unwrap().code(), Some(2));
    let bad = dir.path().join("b.xsb");
    fs::write(&bad, "#####\n#@x.#\n#####\n").unwrap();
    let out = bin().arg("solve").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2, column 3"));
    assert_eq!(bin().args(["solve", "--bogus"]).status().unwrap().code(), Some(1));
}

#[test]
fn generate_then_stats_orders_box_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut means = Vec::new();
    for boxes in ["1", "2"] {
        let out_dir = dir.path().join(format!("b{boxes}"));
        let status = bin()
            .args(["generate", "--seed", "5", "--boxes", boxes, "--count", "30", "--out"])
            .arg(&out_dir)
            .status()
            .unwrap();
        assert!(status.success());
        let manifest = out_dir.join("levels.manifest");
        assert!(fs::read_to_string(&manifest).unwrap().starts_with("# sokoshape "));
        let out = bin().arg("stats").arg(&manifest).output().unwrap();
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("level_0")).count(), 30);
        let mean: f64 = text
            .lines()
            .find_map(|l| l.strip_prefix("# mean = "))
            .unwrap()
            .parse()
            .unwrap();
        means.push(mean);
    }
    assert!(means[1] > means[0], "{means:?}");
}

#[test]
fn train_zero_steps_writes_one_row_and_eval_reads_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let status = bin()
        .args(["train", "--shaping=off", "--total-steps=0", "--seeds", "2", "--checkpoints", "true", "--out"])
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out_dir.join("metrics_seed2.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("2,0,") && rows[1].ends_with(",false"));
    assert!(out_dir.join("summary.txt").exists());

    let levels = dir.path().join("levels");
    assert!(bin().args(["generate", "--out"]).arg(&levels).status().unwrap().success());
    let out = bin()
        .args(["eval", "--checkpoint"])
        .arg(out_dir.join("checkpoints/seed2_step00000000.ckpt"))
        .arg("--levels")
        .arg(levels.join("levels.manifest"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2);
}

#[test]
fn config_file_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "total_steps = 0\nseeds = 1\nwarp_speed = 9\n").unwrap();
    let out = bin().args(["train", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warp_speed"));
}

#[test]
fn help_lists_flags() {
    let out = bin().args(["train", "--help"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for flag in ["--config", "--shaping", "--total-steps", "--learning-rate", "--max-grad-norm", "--seeds"] {
        assert!(text.contains(flag), "{flag}");
    }
}

use std::process::Command;

fn wavefem(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wavefem")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 3] = [
        &["convergence", "--case", "A1", "--levels", "1,2,3"],
        &["cfl-sweep", "--case", "A3", "--hx-list", "0.5,0.25", "--nt", "4,8", "--format", "md"],
        &["stability-sweep", "--q-step", "0.5"],
    ];
    for (k, args) in runs.iter().enumerate() {
        let mut files = Vec::new();
        for rep in 0..2 {
            let path = dir.path().join(format!("run{k}_{rep}.txt"));
            let mut full: Vec<&str> = args.to_vec();
            let p = path.to_str().unwrap().to_string();
            full.extend(["--out", &p]);
            let (code, _, err) = wavefem(&full);
            assert_eq!(code, 0, "{err}");
            files.push(std::fs::read(&path).unwrap());
        }
        assert!(!files[0].is_empty());
        assert_eq!(files[0], files[1], "{args:?}");
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.cfg");
    std::fs::write(&cfg, "command = convergence\ncase = A3\nlevels = 1,2,3,4\nformat = md\n").unwrap();
    let (code, out, err) = wavefem(&["convergence", "--config", cfg.to_str().unwrap(), "--levels", "1,2", "--format", "csv"]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("level,"));
}

#[test]
fn exit_codes_and_messages() {
    let (code, _, err) = wavefem(&["convergence", "--case", "B7"]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown case"));
    assert_eq!(wavefem(&["convergence", "--levels", ""]).0, 1);
    assert_eq!(wavefem(&["stability-sweep", "--q-step", "0"]).0, 1);
    assert_eq!(wavefem(&["frobnicate"]).0, 1);
    assert_eq!(wavefem(&["--help"]).0, 0);
}

#[test]
fn stability_sweep_rows() {
    let (code, out, _) = wavefem(&["stability-sweep", "--q-min", "0", "--q-max", "100", "--q-step", "50"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 4);
    let (_, empty, _) = wavefem(&["stability-sweep", "--q-min", "3", "--q-max", "1"]);
    assert_eq!(empty.lines().count(), 1);
}

#[test]
fn solve_prints_coefficients() {
    let (code, out, _) = wavefem(&["solve", "--case", "A1", "--hx-list", "0.5", "--nt", "2"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "kappa,k,value");
    // 2N unknown time nodes times 8 interior edges
    assert_eq!(lines.len() - 1, 4 * 8);
}

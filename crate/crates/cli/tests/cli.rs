use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn irqracer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irqracer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(cmd: &str, file: &Path, dir: &Path, extra: &[&str]) -> (i32, String) {
    let out = dir.join(format!("{cmd}.json"));
    let mut args = vec![cmd, file.to_str().unwrap(), "--json", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    if cmd == "repair" {
        args.extend(["--out", "/dev/null"]);
    }
    let o = irqracer(&args);
    (o.status.code().unwrap(), fs::read_to_string(out).unwrap_or_default())
}

#[test]
fn reports_match_goldens() {
    let dir = tempfile::tempdir().unwrap();
    let mut checked = 0;
    for entry in fs::read_dir(corpus()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "idl") {
            continue;
        }
        let stem = path.file_stem().unwrap().to_str().unwrap().to_string();
        for cmd in ["detect", "validate", "repair", "oracle"] {
            let golden = corpus().join("expected").join(format!("{stem}.{cmd}.json"));
            let want = fs::read_to_string(&golden).unwrap();
            let (_, got) = json_of(cmd, &path, dir.path(), &[]);
            assert!(got == want, "{} differs from golden", golden.display());
            checked += 1;
        }
    }
    assert_eq!(checked, 28);
}

#[test]
fn exit_codes() {
    let uart = corpus().join("uart.idl");
    let uart = uart.to_str().unwrap();
    assert_eq!(irqracer(&["detect", uart]).status.code(), Some(1));
    assert_eq!(irqracer(&["validate", uart]).status.code(), Some(1));
    assert_eq!(irqracer(&["repair", uart, "--out", "/dev/null"]).status.code(), Some(0));
    assert_eq!(irqracer(&["oracle", uart]).status.code(), Some(0));
    assert_eq!(irqracer(&["detect", "/no/such/file.idl"]).status.code(), Some(2));
    assert_eq!(irqracer(&["detect", uart, "--bogus"]).status.code(), Some(2));
    assert_eq!(irqracer(&["frobnicate", uart]).status.code(), Some(2));
    assert_eq!(irqracer(&["validate", uart, "--timeout", "0"]).status.code(), Some(2));
}

#[test]
fn malformed_program_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.idl");
    fs::write(&bad, "task t prio 1 {\n    x = ;\n}\n").unwrap();
    let o = irqracer(&["detect", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2:9"));
}

#[test]
fn empty_program_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("empty.idl");
    fs::write(&f, "").unwrap();
    let (code, json) = json_of("detect", &f, dir.path(), &[]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["schema"], "irqracer-report/1");
    assert_eq!(v["warnings"].as_array().unwrap().len(), 0);
}

#[test]
fn race_free_repair_copies_input() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("calm.idl");
    let src = "// no sharing\nglobal x;\ntask t prio 5 { x = 1; }\nisr h line 1 prio 1 { output(2); }\n";
    fs::write(&f, src).unwrap();
    let out = dir.path().join("calm.out.idl");
    let o = irqracer(&["repair", f.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(out).unwrap(), src);
}

#[test]
fn uart_repair_output_redetects_clean() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("uart.fixed.idl");
    let uart = corpus().join("uart.idl");
    let o = irqracer(&["repair", uart.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let diff = fs::read_to_string(dir.path().join("uart.fixed.idl.diff")).unwrap();
    assert_eq!(diff.lines().filter(|l| l.starts_with("+ ")).count(), 4);
    let (code, json) = json_of("validate", &out, dir.path(), &[]);
    assert_eq!(code, 0, "{json}");
}

#[test]
fn blocked_instance_exits_zero_partially_repaired() {
    let dir = tempfile::tempdir().unwrap();
    let (code, json) = json_of("repair", &corpus().join("held_lock.idl"), dir.path(), &[]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["repair"]["status"], "PartiallyRepaired");
    assert!(!v["repair"]["surviving"].as_array().unwrap().is_empty());
}

#[test]
fn masked_program_is_refuted() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("masked.idl");
    fs::write(
        &f,
        "global x;\nregister IER width 8 irqctl;\ntask t prio 5 { local a; IER = 0; a = x; output(a); }\nisr h line 1 prio 1 { x = 1; }\n",
    )
    .unwrap();
    let (code, json) = json_of("validate", &f, dir.path(), &[]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let ws = v["warnings"].as_array().unwrap();
    assert!(!ws.is_empty());
    assert!(ws.iter().all(|w| w["status"] == "RefutedDynamic"), "{json}");
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tool.cfg");
    fs::write(&cfg, "seed = 7\nl_max = 50\nirqctl_registers = [\"IER\"]\n").unwrap();
    let uart = corpus().join("uart.idl");
    let (_, json) = json_of(
        "detect",
        &uart,
        dir.path(),
        &["--config", cfg.to_str().unwrap(), "--lmax", "9"],
    );
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["config"]["l_max"], 9);

    fs::write(&cfg, "colour = 3\n").unwrap();
    let o = irqracer(&["detect", uart.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    fs::write(&cfg, "irqctl_registers = [\"NOPE\"]\n").unwrap();
    let o = irqracer(&["detect", uart.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let kb = corpus().join("keyboard.idl");
    let a = json_of("repair", &kb, dir.path(), &["--seed", "3"]).1;
    let b = json_of("repair", &kb, dir.path(), &["--seed", "3"]).1;
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

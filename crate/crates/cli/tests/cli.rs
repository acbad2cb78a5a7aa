//! End-to-end tests of the `prt` binary: exit codes, file outputs, and
//! report determinism across invocations.

use std::path::Path;
use std::process::{Command, Output};

fn prt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const BOM_CONFIG: &str = r#"{
  "memory": { "n": 16, "m": 1, "ports": 1 },
  "field": { "m": 1, "poly": "0x3" },
  "lfsr": { "taps": [1, 1] },
  "schedule": [
    { "init": [0, 1] },
    { "init": [1, 0] },
    { "init": [1, 1] }
  ],
  "universe": { "classes": ["stuck_at"] }
}"#;

#[test]
fn march_pass_and_fail_exit_codes() {
    let pass = prt(&[
        "run-march",
        "--n",
        "16",
        "--test",
        "{a(w0); u(r0,w1); d(r1,w0)}",
    ]);
    assert_eq!(code(&pass), 0);
    assert!(stdout(&pass).contains("PASS"));

    let fail = prt(&[
        "run-march",
        "--n",
        "16",
        "--test",
        "{a(w0); u(r0,w1); d(r1,w0)}",
        "--fault",
        "sa:c3:b0:v1",
    ]);
    assert_eq!(code(&fail), 1);
    assert!(stdout(&fail).contains("FAIL at element 1 op 0 address 3"));
}

#[test]
fn march_trace_reports_every_mismatch() {
    let out = prt(&[
        "run-march",
        "--n",
        "8",
        "--test",
        "{a(w1); u(r1)}",
        "--fault",
        "sa:c2:b0:v0",
        "--trace",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("mismatch"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&prt(&["run-march", "--n", "16"])), 2); // missing --test
    assert_eq!(code(&prt(&["no-such-command"])), 2);
    assert_eq!(
        code(&prt(&["run-march", "--n", "16", "--test", "{u(x0)}"])),
        2
    ); // parse error
    assert_eq!(
        code(&prt(&[
            "run-march",
            "--n",
            "16",
            "--test",
            "{u(w0)}",
            "--fault",
            "bogus"
        ])),
        2
    );
    assert_eq!(
        code(&prt(&["run-prt", "--config", "/no/such/file.json"])),
        2
    );
}

#[test]
fn field_subcommands() {
    let table = prt(&["field", "mul-table", "--m", "4", "--poly", "0x13"]);
    assert_eq!(code(&table), 0);
    // 2 * 8 = 3 in this field: row "2" ends with entries ... 3 1 7 5 b 9 f d
    assert!(stdout(&table).contains("2 | 0 2 4 6 8 a c e 3 1 7 5 b 9 f d"));

    assert_eq!(code(&prt(&["field", "irreducible", "--poly", "0x13"])), 0);
    assert_eq!(code(&prt(&["field", "irreducible", "--poly", "0x15"])), 1);
    assert_eq!(code(&prt(&["field", "irreducible", "--poly", "zz"])), 2);
}

#[test]
fn synth_writes_the_documented_netlist() {
    let out = prt(&["synth", "--m", "4", "--poly", "0x13", "--constant", "2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout(&out),
        "t0 = x0 ^ x3\ny0 = x3\ny1 = t0\ny2 = x1\ny3 = x2\n"
    );

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.txt");
    let out = prt(&[
        "synth",
        "--m",
        "4",
        "--poly",
        "0x13",
        "--constant",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("t0 = "));
}

#[test]
fn lfsr_subcommands() {
    let period = prt(&[
        "lfsr",
        "period",
        "--m",
        "4",
        "--poly",
        "0x13",
        "--generator",
        "1,2,2",
        "--init",
        "1,2",
    ]);
    assert_eq!(code(&period), 0);
    assert_eq!(stdout(&period).trim(), "255");

    let fin = prt(&[
        "lfsr",
        "expected-final",
        "--m",
        "1",
        "--poly",
        "0x3",
        "--taps",
        "1,1",
        "--init",
        "0,1",
        "--n",
        "6",
    ]);
    assert_eq!(stdout(&fin).trim(), "(1,1)");

    // zero state has no period
    let zero = prt(&[
        "lfsr", "period", "--m", "1", "--poly", "0x3", "--taps", "1,1", "--init", "0,0",
    ]);
    assert_eq!(code(&zero), 2);
}

#[test]
fn run_prt_detects_an_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", BOM_CONFIG);
    let pass = prt(&["run-prt", "--config", &config]);
    assert_eq!(code(&pass), 0);
    assert!(stdout(&pass).contains("schedule: PASS"));

    let fail = prt(&["run-prt", "--config", &config, "--fault", "sa:c3:b0:v0"]);
    assert_eq!(code(&fail), 1);
    assert!(stdout(&fail).contains("first detection at iteration 1"));
}

#[test]
fn campaign_writes_deterministic_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", BOM_CONFIG);
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    let csv = dir.path().join("rows.csv");

    let run_a = prt(&[
        "campaign",
        "--config",
        &config,
        "--out",
        out_a.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
        "--min-coverage",
        "1.0",
    ]);
    assert_eq!(code(&run_a), 0, "full stuck-at coverage expected");

    let run_b = prt(&[
        "campaign",
        "--config",
        &config,
        "--serial",
        "--out",
        out_b.to_str().unwrap(),
    ]);
    assert_eq!(code(&run_b), 0);

    // Byte-identical after dropping the volatile timing field.
    let mut a: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_a).unwrap()).unwrap();
    let mut b: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_b).unwrap()).unwrap();
    a["metadata"].as_object_mut().unwrap().remove("timing");
    b["metadata"].as_object_mut().unwrap().remove("timing");
    assert_eq!(a, b);

    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("fault_id,class,params,detected,detected_by\n"));
    assert_eq!(csv_text.lines().count(), 1 + 32); // header + 2*16 stuck-at rows
}

#[test]
fn campaign_threshold_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "c.json",
        &BOM_CONFIG.replace("\"stuck_at\"", "\"stuck_at\", \"transition\""),
    );
    let out = prt(&["campaign", "--config", &config, "--min-coverage", "1.0"]);
    assert_eq!(code(&out), 1); // transitions stay below 1.0
}

#[test]
fn campaign_with_march_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", BOM_CONFIG);
    let out = prt(&[
        "campaign",
        "--config",
        &config,
        "--march",
        "{a(w0); u(r0,w1); d(r1,w0)}",
        "--min-coverage",
        "1.0",
    ]);
    assert_eq!(code(&out), 0);
}

#[test]
fn compare_reports_and_universe_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", BOM_CONFIG);
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    prt(&[
        "campaign",
        "--config",
        &config,
        "--out",
        r1.to_str().unwrap(),
    ]);
    prt(&[
        "campaign",
        "--config",
        &config,
        "--march",
        "{a(w0); u(r0,w1); d(r1,w0)}",
        "--out",
        r2.to_str().unwrap(),
    ]);
    let diff = prt(&[
        "compare",
        "--a",
        r1.to_str().unwrap(),
        "--b",
        r2.to_str().unwrap(),
    ]);
    assert_eq!(code(&diff), 0);
    assert!(stdout(&diff).contains("stuck_at"));

    let self_diff = prt(&[
        "compare",
        "--a",
        r1.to_str().unwrap(),
        "--b",
        r1.to_str().unwrap(),
    ]);
    assert!(stdout(&self_diff).contains("detected only by A: 0"));

    // a report over a different universe cannot be compared
    let other = write_config(
        dir.path(),
        "other.json",
        &BOM_CONFIG.replace("\"n\": 16", "\"n\": 12"),
    );
    let r3 = dir.path().join("r3.json");
    prt(&[
        "campaign",
        "--config",
        &other,
        "--out",
        r3.to_str().unwrap(),
    ]);
    let mismatch = prt(&[
        "compare",
        "--a",
        r1.to_str().unwrap(),
        "--b",
        r3.to_str().unwrap(),
    ]);
    assert_eq!(code(&mismatch), 2);
}

#[test]
fn bad_config_documents_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown_key = write_config(
        dir.path(),
        "bad.json",
        &BOM_CONFIG.replace("\"n\": 16", "\"n\": 16, \"banks\": 2"),
    );
    assert_eq!(code(&prt(&["run-prt", "--config", &unknown_key])), 2);

    let reducible = write_config(
        dir.path(),
        "red.json",
        &BOM_CONFIG
            .replace("\"m\": 1", "\"m\": 4")
            .replace("0x3", "0x15"),
    );
    assert_eq!(code(&prt(&["run-prt", "--config", &reducible])), 2);
}

#[test]
fn shipped_configs_stay_valid() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["bom64.json", "wom16.json", "wom_lanes_dual.json"] {
        let path = root.join(name);
        let out = prt(&["run-prt", "--config", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{name} failed:\n{}", stdout(&out));
        assert!(stdout(&out).contains("schedule: PASS"));
    }
    // And the campaign path accepts them too.
    let out = prt(&[
        "campaign",
        "--config",
        root.join("wom16.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
}

#[test]
fn tdb_search_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "c.json",
        &BOM_CONFIG.replace("\"n\": 16", "\"n\": 9"),
    );
    let args = [
        "tdb-search",
        "--config",
        &config,
        "--trials",
        "8",
        "--seed",
        "5",
    ];
    let first = prt(&args);
    assert_eq!(code(&first), 0);
    assert!(stdout(&first).contains("best coverage"));
    let second = prt(&args);
    assert_eq!(stdout(&first), stdout(&second));
}

use std::path::Path;
use std::process::{Command, Output};

use serde::de::DeserializeOwned;
use serde::Serialize;

use bellstrong::compare::Comparison;
use bellstrong::optimize::SearchResult;
use bellstrong::output::{CsvTable, Document, SimulationRecord, OUTPUT_DIR_ENV};
use bellstrong::report::InequalityReport;
use bellstrong::theorem::TheoremReport;

const BIN: &str = env!("CARGO_BIN_EXE_bellstrong");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove(OUTPUT_DIR_ENV)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

/// Parses a JSON result and checks that writing it back reproduces the
/// emitted bytes.
fn json_doc<T: Serialize + DeserializeOwned>(out: &Output) -> Document<T> {
    let doc: Document<T> = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)));
    let mut again = serde_json::to_vec_pretty(&doc).unwrap();
    again.push(b'\n');
    assert_eq!(
        String::from_utf8(again).unwrap(),
        String::from_utf8_lossy(&out.stdout)
    );
    assert_eq!(doc.schema_version, 1);
    doc
}

fn csv_doc(out: &Output) -> CsvTable {
    let t = CsvTable::parse(&out.stdout).unwrap();
    assert_eq!(t.to_bytes().unwrap(), out.stdout);
    t
}

#[test]
fn evaluate_examples() {
    let out = run(&[
        "evaluate",
        "--inequality",
        "ardehali29",
        "--source",
        "quantum",
    ]);
    assert_eq!(code(&out), 0);
    let doc: Document<InequalityReport> = json_doc(&out);
    assert!((doc.result.lhs + 1.5).abs() < 1e-12);
    assert!(doc.result.violated);
    assert_eq!(doc.config["seed"], 0);
    assert_eq!(doc.config["source"]["eta"], 1.0);
    assert_eq!(doc.config["source"]["method"]["n_nodes"], 4096);

    let out = run(&[
        "evaluate",
        "--inequality",
        "fc31",
        "--source",
        "quantum",
        "--format",
        "csv",
    ]);
    let t = csv_doc(&out);
    assert_eq!(t.column("lhs").unwrap(), vec!["0.353553390593274"]);
    assert_eq!(t.column("seed").unwrap(), vec!["0"]);

    let out = run(&[
        "evaluate",
        "--inequality",
        "ardehali29",
        "--source",
        "lhv:sign",
        "--method",
        "quadrature",
    ]);
    let doc: Document<InequalityReport> = json_doc(&out);
    assert!((doc.result.lhs + 1.0).abs() < 1e-9);
    assert!(!doc.result.violated);
}

#[test]
fn evaluate_not_violated_still_exits_zero() {
    let out = run(&["evaluate", "--inequality", "weak17"]);
    assert_eq!(code(&out), 0);
    let doc: Document<InequalityReport> = json_doc(&out);
    assert!(!doc.result.violated);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["evaluate", "--inequality", "nope"][..],
        &["evaluate"],
        &["evaluate", "--inequality", "chsh", "--source", "lhv:nope"],
        &["evaluate", "--inequality", "chsh", "--source", "somewhere"],
        &["evaluate", "--inequality", "chsh", "--eta", "1.5"],
        &["evaluate", "--inequality", "chsh", "--format", "xml"],
        &[
            "evaluate",
            "--inequality",
            "chsh",
            "--source",
            "lhv:sign",
            "--nodes",
            "3",
        ],
        &["evaluate", "--inequality", "chsh", "--param", "seed"],
        &["optimize", "--grid-step", "7"],
        &["optimize", "--source", "lhv:sign", "--method", "mc"],
        &["no-such-command"],
    ] {
        let out = run(args);
        assert_eq!(
            code(&out),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn failed_assumption_exits_one() {
    // Every count at one pair: the ratio forms have nothing to divide by.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("silent.csv");
    std::fs::write(
        &path,
        "first_deg,second_deg,n_emitted,n_pp,n_pm,n_mp,n_mm,n1_plus,n1_minus,n2_plus,n2_minus\n\
         0,0,100,0,0,0,0,0,0,0,0\n0,120,100,0,0,0,0,0,0,0,0\n",
    )
    .unwrap();
    let src = format!("counts:{}", path.display());
    let out = run(&["evaluate", "--inequality", "ardehali29", "--source", &src]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_is_reproducible_and_evaluable() {
    let dir = tempfile::tempdir().unwrap();
    let sim = |name: &str, workers: &str| {
        let counts = dir.path().join(format!("{name}.csv"));
        let out = run(&[
            "simulate",
            "--inequality",
            "ardehali29",
            "--source",
            "lhv:sign",
            "--emissions",
            "1000000",
            "--seed",
            "42",
            "--workers",
            workers,
            "--counts",
            counts.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        (out, std::fs::read(counts).unwrap())
    };
    let (out, first) = sim("a", "1");
    let (out2, second) = sim("b", "2");
    assert_eq!(first, second);

    let doc: Document<SimulationRecord> = json_doc(&out);
    let doc2: Document<SimulationRecord> = json_doc(&out2);
    assert_eq!(doc.result.counts, doc2.result.counts);
    assert_eq!(doc.config["seed"], 42);
    let r = &doc.result.report;
    assert!(
        (r.lhs + 1.0).abs() <= 3.0 * r.stderr,
        "{} ± {}",
        r.lhs,
        r.stderr
    );
    assert_eq!(r.n_samples, 1_000_000);

    // The counts file is itself a source.
    let src = format!("counts:{}", dir.path().join("a.csv").display());
    let out = run(&["evaluate", "--inequality", "ardehali29", "--source", &src]);
    let again: Document<InequalityReport> = json_doc(&out);
    assert_eq!(again.result.lhs, r.lhs);
    assert_eq!(again.result.stderr, r.stderr);
}

#[test]
fn simulate_tiny_n() {
    let out = run(&[
        "simulate",
        "--inequality",
        "ardehali29",
        "--source",
        "lhv:malus",
        "--emissions",
        "10",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Document<SimulationRecord> = json_doc(&out);
    assert!(doc.result.report.stderr > 0.05);
    assert_eq!(
        code(&run(&[
            "simulate",
            "--inequality",
            "chsh",
            "--emissions",
            "0"
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "simulate",
            "--inequality",
            "chsh",
            "--source",
            "quantum"
        ])),
        2
    );
}

#[test]
fn verify_theorem_outcomes() {
    let out = run(&["verify-theorem"]);
    assert_eq!(code(&out), 0);
    let doc: Document<TheoremReport> = json_doc(&out);
    assert!(doc.result.passed);
    assert_eq!(doc.result.vertices_checked, 16 * 256);
    assert_eq!(doc.config["seed"], 0);

    let out = run(&["verify-theorem", "--mutate-uv-sign"]);
    assert_eq!(code(&out), 1);
    let doc: Document<TheoremReport> = json_doc(&out);
    assert!(doc.result.counterexample.is_some());

    let out = run(&[
        "verify-theorem",
        "--grid",
        "0",
        "--n-random",
        "0",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 0);
    let t = csv_doc(&out);
    assert_eq!(t.column("passed").unwrap(), vec!["true"]);
    assert_eq!(t.column("min_random_z").unwrap(), vec![""]);
}

#[test]
fn optimize_examples() {
    let out = run(&["optimize", "--objective", "ardehali29"]);
    assert_eq!(code(&out), 0);
    let doc: Document<SearchResult> = json_doc(&out);
    assert!((doc.result.report.lhs + 1.5).abs() < 1e-6);
    assert_eq!(doc.config["grid_step"], 5.0);
    assert_eq!(doc.config["refine_iterations"], 6);

    let out = run(&["optimize", "--objective", "chsh", "--format", "csv"]);
    let t = csv_doc(&out);
    let last = t.rows.last().unwrap();
    let col = |name: &str| &last[t.header.iter().position(|h| h == name).unwrap()];
    assert_eq!([col("b"), col("a2"), col("b2")], ["22.5", "45", "67.5"]);
    assert_eq!(col("lhs"), "2.82842712474619");

    let out = run(&[
        "optimize",
        "--objective",
        "ardehali29",
        "--source",
        "lhv:sign",
        "--grid-step",
        "10",
        "--refine-iterations",
        "2",
    ]);
    let doc: Document<SearchResult> = json_doc(&out);
    assert!((doc.result.report.lhs + 1.0).abs() < 1e-9);
}

#[test]
fn compare_round_trips() {
    let out = run(&["compare"]);
    assert_eq!(code(&out), 0);
    let doc: Document<Comparison> = json_doc(&out);
    assert_eq!(doc.result.rows.len(), 7);
    let csv = run(&["compare", "--format", "csv"]);
    let t = csv_doc(&csv);
    assert_eq!(t.rows.len(), 7);
    assert!(t.header.contains(&"factor_ratio".to_string()));
    assert!(t.header.contains(&"excess_ratio".to_string()));
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(
        &cfg,
        "inequality = \"chsh\"\nsource = \"lhv:malus\"\nnodes = 8192\nformat = \"json\"\n",
    );
    let cfg_s = cfg.to_str().unwrap();

    let out = run(&["evaluate", "--config", cfg_s]);
    let doc: Document<InequalityReport> = json_doc(&out);
    assert!((doc.result.lhs - std::f64::consts::SQRT_2).abs() < 1e-9);
    assert_eq!(doc.config["source"]["method"]["n_nodes"], 8192);

    // Flags override the file.
    let out = run(&[
        "evaluate",
        "--config",
        cfg_s,
        "--inequality",
        "ardehali29",
        "--nodes",
        "1024",
    ]);
    let doc: Document<InequalityReport> = json_doc(&out);
    assert!((doc.result.lhs + 0.25).abs() < 1e-9);
    assert_eq!(doc.config["source"]["method"]["n_nodes"], 1024);

    write(&cfg, "inequality = \"chsh\"\nemissions = 5\n");
    assert_eq!(code(&run(&["evaluate", "--config", cfg_s])), 2);
    write(&cfg, "inequality = 3\n");
    assert_eq!(code(&run(&["evaluate", "--config", cfg_s])), 2);
    assert_eq!(
        code(&run(&["evaluate", "--config", "/nonexistent.toml"])),
        2
    );

    write(&cfg, "grid = [0, 1]\nn_random = 10\nseed = 9\n");
    let out = run(&["verify-theorem", "--config", cfg_s]);
    let doc: Document<TheoremReport> = json_doc(&out);
    assert_eq!(doc.result.grid_points, 4);
    assert_eq!(doc.config["seed"], 9);
}

#[test]
fn output_locations() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["compare", "--format", "csv"])
        .env(OUTPUT_DIR_ENV, dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let written = std::fs::read(dir.path().join("compare.csv")).unwrap();
    assert_eq!(CsvTable::parse(&written).unwrap().rows.len(), 7);

    let target = dir.path().join("deep").join("r.json");
    let out = run(&[
        "evaluate",
        "--inequality",
        "chsh",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let doc: Document<InequalityReport> =
        serde_json::from_slice(&std::fs::read(&target).unwrap()).unwrap();
    assert!((doc.result.lhs - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
}

#[test]
fn table_sources() {
    let dir = tempfile::tempdir().unwrap();
    // Quantum joint probabilities for η = 1, Ω = π: pp = mm = C(1 + cos 2δ).
    let c = (1.0f64 / 8.0).powi(2) * (1.0 + 0.25 * 0.25 * 1.5 * 1.5 / 8.0);
    let row = |d: f64| {
        let k = (2.0 * d.to_radians()).cos();
        format!(
            "{d},{},{},{},{}\n",
            c * (1.0 + k),
            c * (1.0 - k),
            c * (1.0 - k),
            c * (1.0 + k)
        )
    };
    let csv_path = dir.path().join("t.csv");
    write(
        &csv_path,
        &format!("diff_deg,pp,pm,mp,mm\n{}{}", row(0.0), row(120.0)),
    );
    let src = format!("table:{}", csv_path.display());
    let out = run(&["evaluate", "--inequality", "ardehali29", "--source", &src]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Document<InequalityReport> = json_doc(&out);
    assert!((doc.result.lhs + 1.5).abs() < 1e-12);

    // No row for 22.5°.
    let out = run(&["evaluate", "--inequality", "chsh", "--source", &src]);
    assert_eq!(code(&out), 2);

    let json_path = dir.path().join("t.json");
    write(
        &json_path,
        r#"[{"diff_deg": 0, "pp": 0.5, "pm": 0, "mp": 0, "mm": 0.5}, {"diff_deg": 120, "pp": 0.125, "pm": 0.375, "mp": 0.375, "mm": 0.125}]"#,
    );
    let src = format!("table:{}", json_path.display());
    let out = run(&["evaluate", "--inequality", "rt32", "--source", &src]);
    let doc: Document<InequalityReport> = json_doc(&out);
    // E(120°) = −1/2, no opposite outcomes at 0°.
    assert!((doc.result.lhs + 1.5).abs() < 1e-12);
}

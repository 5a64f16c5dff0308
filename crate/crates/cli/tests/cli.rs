use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sekit_core::{
    write_certificate, write_matrix, Certificate, CorrMatrix, EsseWitness, Label, SeWitness,
    SmeWitness, SseChain, WitnessPayload,
};
use tempfile::TempDir;

fn sekit(args: &[&str]) -> Output {
    sekit_with_env(args, &[])
}

fn sekit_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sekit"));
    cmd.args(args).env_remove("SEKIT_BUDGET");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("sekit runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn label(name: &str) -> Label {
    Label::new(name).unwrap()
}

fn m(l: &str, rows: &[&[u64]]) -> CorrMatrix {
    CorrMatrix::from_rows(rows).over(&label(l))
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: TempDir::new().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn matrix(&self, name: &str, matrix: &CorrMatrix) -> String {
        self.write(name, &write_matrix(matrix))
    }

    fn cert(&self, name: &str, cert: &Certificate) -> String {
        self.write(name, &write_certificate(cert))
    }

    fn write(&self, name: &str, text: &str) -> String {
        let path = self.path(name);
        fs::write(&path, text).unwrap();
        path.to_str().unwrap().to_string()
    }
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path).unwrap()
}

fn golden_mean() -> CorrMatrix {
    m("G", &[&[1, 1], &[1, 0]])
}

/// `E ~ E` with `R = S = E` at lag 2.
fn golden_self_witness() -> Certificate {
    let e = golden_mean();
    let w = SeWitness {
        r: e.clone(),
        s: e.clone(),
        lag: 2,
    };
    Certificate::new(e.clone(), e, WitnessPayload::Se(w)).unwrap()
}

#[test]
fn search_then_check_full_two_shift() {
    let ws = Workspace::new();
    let full = ws.matrix("full.txt", &m("A", &[&[1, 1], &[1, 1]]));
    let two = ws.matrix("two.txt", &m("B", &[&[2]]));
    let cert = ws.path("cert.toml");
    let cert = cert.to_str().unwrap();
    let out = sekit(&[
        "search",
        "--kind",
        "esse",
        "--left",
        &full,
        "--right",
        &two,
        "--max-inner-dim",
        "2",
        "--max-entry",
        "2",
        "--out",
        cert,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(read(cert).contains("kind = \"esse\""));

    let out = sekit(&[
        "check", "--kind", "esse", "--cert", cert, "--left", &full, "--right", &two,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).starts_with("accepted"));
}

#[test]
fn search_output_is_deterministic() {
    let ws = Workspace::new();
    let g = ws.matrix("g.txt", &golden_mean());
    let run = || {
        stdout(&sekit(&[
            "search", "--kind", "se", "--left", &g, "--right", &g,
        ]))
    };
    let first = run();
    assert!(first.contains("kind = \"se\""));
    assert_eq!(first, run());
}

#[test]
fn check_reports_failing_equation_for_wrong_lag() {
    let ws = Workspace::new();
    let e = golden_mean();
    let wrong = SeWitness {
        r: e.clone(),
        s: e.clone(),
        lag: 1,
    };
    let cert = ws.cert(
        "wrong.toml",
        &Certificate::new(e.clone(), e, WitnessPayload::Se(wrong)).unwrap(),
    );
    let out = sekit(&["check", "--kind", "se", "--cert", &cert]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.starts_with("rejected"), "{text}");
    assert!(text.contains("E^m = R·S"), "{text}");
    assert!(text.contains("(0, 0)"), "{text}");
}

#[test]
fn check_usage_errors() {
    let ws = Workspace::new();
    let missing = ws.path("missing.toml");
    let out = sekit(&[
        "check",
        "--kind",
        "esse",
        "--cert",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("cannot read"));
    assert!(stdout(&out).is_empty());

    let cert = ws.cert("self.toml", &golden_self_witness());
    let out = sekit(&["check", "--kind", "esse", "--cert", &cert]);
    assert_eq!(code(&out), 2);

    let other = ws.matrix("other.txt", &m("G", &[&[2, 1], &[1, 0]]));
    let out = sekit(&["check", "--kind", "se", "--cert", &cert, "--left", &other]);
    assert_eq!(code(&out), 2);

    let garbage = ws.write("garbage.toml", "schema_version = 7\n");
    let out = sekit(&["check", "--kind", "se", "--cert", &garbage]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("schema version 7"));

    assert_eq!(code(&sekit(&["check", "--kind", "bogus"])), 2);
    assert_eq!(code(&sekit(&[])), 2);
}

#[test]
fn sme_search_exhausts_on_non_conjugate_pair() {
    let ws = Workspace::new();
    let g = ws.matrix("g.txt", &golden_mean());
    let full = ws.matrix("full.txt", &m("A", &[&[1, 1], &[1, 1]]));
    let out = sekit(&["search", "--kind", "sme", "--left", &g, "--right", &full]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("not found"));
}

#[test]
fn budget_from_environment_and_flag() {
    let ws = Workspace::new();
    let g = ws.matrix("g.txt", &golden_mean());
    let full = ws.matrix("full.txt", &m("A", &[&[1, 1], &[1, 1]]));
    let args = ["search", "--kind", "se", "--left", &g, "--right", &full];
    let out = sekit_with_env(&args, &[("SEKIT_BUDGET", "5")]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("budget"));

    // An explicit flag wins over the environment.
    let mut with_flag = args.to_vec();
    with_flag.extend(["--budget", "100000000", "--max-lag", "2"]);
    let out = sekit_with_env(&with_flag, &[("SEKIT_BUDGET", "5")]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn convert_sme_to_esse() {
    let ws = Workspace::new();
    let e = m("A", &[&[1, 2], &[0, 3]]);
    let f = m("B", &[&[3, 0], &[2, 1]]);
    let p = CorrMatrix::permutation(label("A"), label("B"), &[1, 0]);
    let cert = ws.cert(
        "sme.toml",
        &Certificate::new(e, f, WitnessPayload::Sme(SmeWitness { p })).unwrap(),
    );
    let out_path = ws.path("esse.toml");
    let out_path = out_path.to_str().unwrap();
    let out = sekit(&[
        "convert", "--from", "sme", "--to", "esse", "--cert", &cert, "--out", out_path,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        code(&sekit(&["check", "--kind", "esse", "--cert", out_path])),
        0
    );

    // Wrong input kind.
    let out = sekit(&[
        "convert", "--from", "chain", "--to", "se", "--cert", &cert, "--out", out_path,
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn convert_chain_to_se() {
    let ws = Workspace::new();
    // [[1,1],[1,1]] over A ~ [2] ~ [[1,1],[1,1]] over C.
    let a = m("A", &[&[1, 1], &[1, 1]]);
    let b = m("B", &[&[2]]);
    let c = m("C", &[&[1, 1], &[1, 1]]);
    let col = |row: &str, col: &str| {
        CorrMatrix::from_rows(&[&[1], &[1]]).with_labels(label(row), label(col))
    };
    let row = |r: &str, c: &str| CorrMatrix::from_rows(&[&[1, 1]]).with_labels(label(r), label(c));
    let chain = SseChain::new(
        vec![a.clone(), b, c.clone()],
        vec![
            EsseWitness {
                r: col("A", "B"),
                s: row("B", "A"),
            },
            EsseWitness {
                r: row("B", "C"),
                s: col("C", "B"),
            },
        ],
    )
    .unwrap();
    let cert = ws.cert(
        "chain.toml",
        &Certificate::new(a, c, WitnessPayload::SseChain(chain)).unwrap(),
    );
    assert_eq!(
        code(&sekit(&["check", "--kind", "sse-chain", "--cert", &cert])),
        0
    );

    let out_path = ws.path("se.toml");
    let out_path = out_path.to_str().unwrap();
    let out = sekit(&[
        "convert", "--from", "chain", "--to", "se", "--cert", &cert, "--out", out_path,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(read(out_path).contains("lag = 2"));
    assert_eq!(
        code(&sekit(&["check", "--kind", "se", "--cert", out_path])),
        0
    );

    // Two links do not make one elementary equivalence.
    let out = sekit(&[
        "convert", "--from", "chain", "--to", "esse", "--cert", &cert, "--out", out_path,
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn compose_lag_two_self_witnesses() {
    let ws = Workspace::new();
    let cert = ws.cert("self.toml", &golden_self_witness());
    let out_path = ws.path("composite.toml");
    let out_path = out_path.to_str().unwrap();
    let out = sekit(&[
        "compose", "--kind", "se", "--cert1", &cert, "--cert2", &cert, "--out", out_path,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(read(out_path).contains("lag = 6"));
    assert_eq!(
        code(&sekit(&["check", "--kind", "se", "--cert", out_path])),
        0
    );
}

#[test]
fn compose_esse_needs_a_permutation_block() {
    let ws = Workspace::new();
    let r = CorrMatrix::from_rows(&[&[1], &[1]]).with_labels(label("A"), label("B"));
    let s = CorrMatrix::from_rows(&[&[1, 1]]).with_labels(label("B"), label("A"));
    let e = m("A", &[&[1, 1], &[1, 1]]);
    let f = m("B", &[&[2]]);
    let forward = Certificate::new(
        e.clone(),
        f.clone(),
        WitnessPayload::Esse(EsseWitness { r, s }),
    )
    .unwrap();
    let back = match forward.witness() {
        WitnessPayload::Esse(w) => w.reversed(),
        _ => unreachable!(),
    };
    let backward = Certificate::new(f, e, WitnessPayload::Esse(back)).unwrap();
    let c1 = ws.cert("fwd.toml", &forward);
    let c2 = ws.cert("back.toml", &backward);
    let out_path = ws.path("x.toml");
    let out_path = out_path.to_str().unwrap();

    let out = sekit(&[
        "compose", "--kind", "esse", "--cert1", &c1, "--cert2", &c2, "--out", out_path,
    ]);
    assert_eq!(code(&out), 1);
    assert!(!Path::new(out_path).exists());

    // F ~ E followed by F ~ E: the middle matrices disagree.
    let out = sekit(&[
        "compose", "--kind", "esse", "--cert1", &c2, "--cert2", &c2, "--out", out_path,
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn invariants_of_two_match_golden_report() {
    let ws = Workspace::new();
    let two = ws.matrix("two.txt", &CorrMatrix::from_rows(&[&[2]]));
    let out = sekit(&["invariants", &two]);
    assert_eq!(code(&out), 0);
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/two.txt");
    assert_eq!(stdout(&out), read(golden));
}

#[test]
fn compare_dilations_exit_codes() {
    let ws = Workspace::new();
    let two = ws.matrix("two.txt", &CorrMatrix::from_rows(&[&[2]]));
    let three = ws.matrix("three.txt", &CorrMatrix::from_rows(&[&[3]]));
    let out = sekit(&["compare-dilations", "--left", &two, "--right", &three]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.starts_with("obstructed: bowen_franks"), "{text}");
    assert!(text.contains("k0"), "{text}");

    let out = sekit(&["compare-dilations", "--left", &two, "--right", &two]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "consistent\n");
}

use std::fs;
use std::process::Command;

use arcqk::bench::{
    performance_profile, read_records_csv, read_records_json, records_to_csv, render_svg,
    write_records_csv, write_records_json, BenchRecord, BenchStatus, Metric,
};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_arcqk"))
}

fn record(name: &str, solver: &str, hvp: usize, ok: bool) -> BenchRecord {
    BenchRecord {
        name: name.to_owned(),
        nvar: 3,
        f: 0.1 + hvp as f64 / 7.0,
        grad_norm: if ok { 1e-7 } else { f64::NAN },
        iter: hvp / 2,
        neval_f: hvp + 1,
        neval_grad: hvp / 3 + 1,
        neval_hvp: hvp,
        elapsed_seconds: hvp as f64 * 1e-3 + 1.0 / 3.0,
        status: if ok { BenchStatus::Success } else { BenchStatus::TimeExceeded },
        solver: solver.to_owned(),
    }
}

/// Records for `solvers` over `problems`, each entry (metric, solved).
fn table(entries: &[Vec<(usize, bool)>]) -> Vec<BenchRecord> {
    let mut out = Vec::new();
    for (p, row) in entries.iter().enumerate() {
        for (s, &(hvp, ok)) in row.iter().enumerate() {
            out.push(record(&format!("p{p}"), &format!("s{s}"), hvp, ok));
        }
    }
    out
}

fn entries() -> impl Strategy<Value = Vec<Vec<(usize, bool)>>> {
    prop::collection::vec(prop::collection::vec((1usize..500, prop::bool::weighted(0.85)), 3), 1..25)
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 64,
        rng_seed: RngSeed::Fixed(0xbe7c),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn profiles_ignore_problem_order(e in entries(), shuffle in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let records = table(&e);
        let base = performance_profile(&records, Metric::NevalHvp).unwrap();
        let mut shuffled = records.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(shuffle));
        prop_assert_eq!(&base, &performance_profile(&shuffled, Metric::NevalHvp).unwrap());
    }

    #[test]
    fn dominated_solver_leaves_other_curves_alone(e in entries(), extra in 1usize..100) {
        let records = table(&e);
        let base = performance_profile(&records, Metric::NevalHvp).unwrap();
        let mut more = records.clone();
        for r in &records {
            if r.solver == "s0" {
                let best = records.iter().filter(|o| o.name == r.name).map(|o| o.neval_hvp).max().unwrap();
                let mut d = r.clone();
                d.solver = "z_dominated".into();
                d.neval_hvp = best + extra;
                more.push(d);
            }
        }
        let grown = performance_profile(&more, Metric::NevalHvp).unwrap();
        for c in &base.curves {
            prop_assert_eq!(Some(c), grown.curve(&c.solver));
        }
    }

    #[test]
    fn csv_json_csv_is_byte_identical(e in entries()) {
        let records = table(&e);
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("r.csv");
        let json_path = dir.path().join("r.json");
        write_records_csv(&records, &csv_path).unwrap();
        let from_csv = read_records_csv(&csv_path).unwrap();
        write_records_json(&from_csv, &json_path).unwrap();
        let from_json = read_records_json(&json_path).unwrap();
        prop_assert!(from_json.iter().zip(&records).all(|(a, b)| a.same_as(b)));
        prop_assert_eq!(records_to_csv(&from_json), fs::read_to_string(&csv_path).unwrap());
    }
}

#[test]
fn hand_profile_renders_two_polylines() {
    let records = vec![
        record("a", "A", 1, true),
        record("b", "A", 2, true),
        record("c", "A", 3, false),
        record("a", "B", 2, true),
        record("b", "B", 1, true),
        record("c", "B", 4, true),
    ];
    let prof = performance_profile(&records, Metric::NevalHvp).unwrap();
    let a = prof.curve("A").unwrap();
    let b = prof.curve("B").unwrap();
    assert_eq!(a.ratios, vec![1.0, 2.0, f64::INFINITY]);
    assert_eq!(b.ratios, vec![1.0, 1.0, 2.0]);
    assert_eq!((a.value(1.0), a.value(2.0), b.value(1.0), b.value(2.0)), (1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.0));
    assert_eq!(render_svg(&prof).matches("<polyline").count(), 2);
}

#[test]
fn cli_solve_prints_a_record() {
    let out = cli().args(["solve", "--problem", "rosenbrock", "--solver", "arcqk"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("rosenbrock (arcqk)") && text.contains("status=success"), "{text}");

    let out = cli()
        .args(["solve", "--problem", "sphere", "--solver", "st", "--param", "delta0=2", "--seed", "4"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("sphere (steihaug_toint)"));
}

#[test]
fn cli_errors_exit_with_code_two() {
    let out = cli().args(["solve", "--problem", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("error"));

    let out = cli().args(["solve", "--problem", "sphere", "--param", "gamma9=1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = cli().args(["solve", "--problem", "sphere", "--param", "eta1=0.9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cli_check_passes_on_the_suite() {
    for name in ["rosenbrock", "wood", "expfit"] {
        let out = cli().args(["check", "--problem", name]).output().unwrap();
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn cli_bench_then_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["bench", "--suite", "sphere,rosenbrock,beale", "--solvers", "arcqk,st", "--seed", "11", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = read_records_json(&dir.path().join("records.json")).unwrap();
    assert_eq!(records.len(), 6);
    let from_csv = read_records_csv(&dir.path().join("records.csv")).unwrap();
    assert!(records.iter().zip(&from_csv).all(|(a, b)| a.same_as(b)));
    for m in ["time", "neval_f", "neval_grad", "neval_hvp"] {
        assert!(dir.path().join(format!("profile_{m}.svg")).exists());
        assert!(dir.path().join(format!("profile_{m}.csv")).exists());
    }

    let svg = dir.path().join("f.svg");
    let out = cli()
        .args(["profile", "--metric", "neval_f", "--in"])
        .arg(dir.path().join("records.json"))
        .arg("--out")
        .arg(&svg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(&svg).unwrap().matches("<polyline").count(), 2);
}

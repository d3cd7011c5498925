//! Acceptance suite: one PASS/FAIL line per criterion, driven through the binary.
//!
//! Run with `cargo test -p iterint-cli --test acceptance`. Exits non-zero if any
//! criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_iterint");

struct Run {
    code: i32,
    summary: Value,
}

fn run(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("ITERINT_THREADS")
        .output()
        .expect("binary runs");
    let command = args[0];
    let summary = fs::read_to_string(dir.join(format!("{command}.json")))
        .map(|s| serde_json::from_str(&s).expect("summary is JSON"))
        .unwrap_or(Value::Null);
    Run {
        code: out.status.code().unwrap_or(-1),
        summary,
    }
}

fn checks(summary: &Value) -> Vec<&Value> {
    summary["checks"].as_array().map(|a| a.iter().collect()).unwrap_or_default()
}

fn describe(c: &Value) -> String {
    let limit: Vec<String> = c["limit"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| format!("{:e}", x.as_f64().unwrap_or(f64::NAN)))
        .collect();
    format!(
        "[{}] {} = {:e} {} {}",
        c["model"].as_str().unwrap_or(""),
        c["name"].as_str().unwrap_or(""),
        c["value"].as_f64().unwrap_or(f64::NAN),
        c["relation"].as_str().unwrap_or(""),
        limit.join(".."),
    )
}

/// Prints the criterion line and the failing checks; returns whether it passed.
fn report(id: u32, title: &str, run: &Run, select: impl Fn(&Value) -> bool) -> bool {
    let selected: Vec<&Value> = checks(&run.summary).into_iter().filter(|c| select(c)).collect();
    let ok_checks = !selected.is_empty() && selected.iter().all(|c| c["pass"] == true);
    let pass = ok_checks && (run.code == 0 || run.code == 1);
    println!(
        "{} {id}: {title} ({} checks, exit {})",
        if pass { "PASS" } else { "FAIL" },
        selected.len(),
        run.code
    );
    for c in selected.iter().filter(|c| c["pass"] != true) {
        println!("       {}", describe(c));
    }
    pass
}

fn all(_: &Value) -> bool {
    true
}

fn named(name: &'static str) -> impl Fn(&Value) -> bool {
    move |c| c["name"] == name
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = |name: &str| tmp.path().join(name);
    let mut results = Vec::new();

    let r = run(&dir("c1"), &["product-check", "--cases", "100", "--basis-level", "3"]);
    results.push(report(1, "product decomposition exact, 100 pairs x 5 families, residual < 1e-10", &r, all));

    let r = run(
        &dir("c2"),
        &["riemann", "--basis-level", "8", "--levels", "2:8", "--model", "gaussian", "--model", "exponential"],
    );
    results.push(report(
        2,
        "Riemann error strictly decreasing over levels 2..8 and < 1e-3 E[Z^2] at level 8",
        &r,
        all,
    ));

    let r = run(&dir("c3"), &["ibp", "--cases", "50", "--basis-level", "3"]);
    results.push(report(3, "integration by parts kernel residual < 1e-10, 50 pairs x 5 families", &r, all));

    let r = run(&dir("c4"), &["norm", "--cases", "20", "--basis-level", "3"]);
    results.push(report(
        4,
        "second moment direct vs formula < 1e-10; baselines 0.5 and 0.25 to 1e-12",
        &r,
        all,
    ));

    let r = run(&dir("c5"), &["square-decomp", "--cases", "20", "--basis-level", "2"]);
    results.push(report(
        5,
        "square decomposition: Gaussian all orders, all families order 4 and order-0 oracle < 1e-9; table complete",
        &r,
        all,
    ));

    let r = run(
        &dir("c6"),
        &["moment-bound", "--basis-level", "12", "--levels", "2:7", "--model", "gaussian", "--model", "exponential"],
    );
    results.push(report(
        6,
        "fourth moment of increments: gap ratio spread < 3, log-log slope in [1.9, 2.1]",
        &r,
        all,
    ));

    let r = run(
        &dir("c7"),
        &[
            "qv", "--basis-level", "10", "--levels", "4:8", "--replicates", "10000", "--seed", "7", "--model", "gaussian",
            "--model", "exponential",
        ],
    );
    results.push(report(
        7,
        "quadratic variation: Gaussian mean within 3 SE of 0.5, residual decreasing, correction helps",
        &r,
        all,
    ));

    let r = run(&dir("c8"), &["martingale", "--cases", "20", "--basis-level", "3"]);
    results.push(report(8, "truncation tails have zero conditional expectation (|coef| < 1e-12)", &r, named("max coefficient of E[tail | past]")));

    let a = run(&dir("c9a"), &["selftest", "--seed", "11", "--threads", "1"]);
    let b = run(&dir("c9b"), &["selftest", "--seed", "11", "--threads", "1"]);
    let c = run(&dir("c9c"), &["selftest", "--seed", "11", "--threads", "8"]);
    let (ba, bb, bc) = (dir_bytes(&dir("c9a")), dir_bytes(&dir("c9b")), dir_bytes(&dir("c9c")));
    let same = !ba.is_empty() && ba == bb && ba == bc;
    let pass = same && a.code == 0 && b.code == 0 && c.code == 0;
    println!(
        "{} 9: selftest reports byte-identical across reruns and 1 vs 8 workers ({} files, exit {}/{}/{})",
        if pass { "PASS" } else { "FAIL" },
        ba.len(),
        a.code,
        b.code,
        c.code
    );
    results.push(pass);

    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}

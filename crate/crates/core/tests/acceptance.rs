//! Acceptance suite: one PASS/FAIL line per criterion on stderr.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use dscert::certifier::{beta_v, check_cv, BisectionStatus, CheckOptions, Verdict};
use dscert::inequality::{dss_sweep, identity_sweep, FieldMode};
use dscert::lattice::{magnetizations, Boundary, BoundaryCondition, BoxGeometry, FieldAssignment, Method};
use dscert::report::{oracle_box, oracle_boxes, strip_volatile};

struct Outcome {
    pass: bool,
    detail: String,
    report: Value,
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn box2(w: usize, h: usize) -> BoxGeometry {
    BoxGeometry::new(2, &[w, h]).unwrap()
}

/// Single-site coefficient in dimension `d`, straight from the two-point
/// conditional law: `½ max_s |tanh β(s+1) − tanh β(s−1)|` over neighbour sums.
fn single_site_k(d: usize, beta: f64) -> f64 {
    let others = 2 * d as i32 - 1;
    (0..=others)
        .map(|ups| {
            let s = (2 * ups - others) as f64;
            0.5 * ((beta * (s + 1.0)).tanh() - (beta * (s - 1.0)).tanh()).abs()
        })
        .fold(0.0, f64::max)
}

/// Root of `2d·k(β) = 1` by plain bisection.
fn single_site_root(d: usize) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if 2.0 * d as f64 * single_site_k(d, mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c1() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut boxes = Vec::new();
    for w in 1..=12 {
        for h in 1..=12 / w {
            let r = check_cv(&box2(w, h), 0.0, &CheckOptions::default()).unwrap();
            let zero = r.coefficients.iter().all(|k| k.value == 0.0);
            pass &= zero && r.verdict == Verdict::Holds;
            boxes.push(json!({"geometry": r.geometry, "sum": r.sum, "verdict": r.verdict}));
        }
    }
    let elapsed = start.elapsed();
    let n = boxes.len();
    Outcome {
        pass: pass && within(elapsed, 1),
        detail: format!("{n} boxes, all k = 0 at beta = 0, {:.3}s", elapsed.as_secs_f64()),
        report: json!({ "boxes": boxes }),
    }
}

fn c2() -> Outcome {
    let start = Instant::now();
    let tol = 1e-7;
    let opts = CheckOptions::default();
    let mut pass = true;
    let mut rows = Vec::new();
    for (dim, extents, expected) in [
        (2, vec![1, 1], 0.5 * 0.5f64.atanh()),
        (3, vec![1, 1, 1], single_site_root(3)),
    ] {
        let g = BoxGeometry::new(dim, &extents).unwrap();
        let r = beta_v(&g, tol, 1.0, 16, &opts).unwrap();
        let hi = r.beta_hi.unwrap_or(f64::INFINITY);
        let ok = r.status == BisectionStatus::Bracketed
            && r.beta_lo - 1e-6 <= expected
            && expected <= hi + 1e-6
            && (r.beta_lo - expected).abs() <= 1e-6
            && (hi - expected).abs() <= 1e-6;
        pass &= ok;
        rows.push(json!({
            "dim": dim, "beta_lo": r.beta_lo, "beta_hi": r.beta_hi, "expected": expected, "ok": ok,
        }));
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: pass && within(elapsed, 1),
        detail: format!(
            "d=2 [{:.7}, {:.7}] vs {:.7}; d=3 [{:.7}, {:.7}] vs {:.7}",
            rows[0]["beta_lo"].as_f64().unwrap(),
            rows[0]["beta_hi"].as_f64().unwrap_or(f64::NAN),
            rows[0]["expected"].as_f64().unwrap(),
            rows[1]["beta_lo"].as_f64().unwrap(),
            rows[1]["beta_hi"].as_f64().unwrap_or(f64::NAN),
            rows[1]["expected"].as_f64().unwrap(),
        ),
        report: json!({ "single_site": rows }),
    }
}

fn c3() -> Outcome {
    let start = Instant::now();
    let betas = [0.1, 0.3, 0.5];
    let boxes = oracle_boxes(6);
    let ids: Vec<String> = boxes.iter().map(|g| g.id()).collect();
    let mut max_delta = 0.0f64;
    let mut comparisons = 0u64;
    let mut reports = Vec::new();
    for g in &boxes {
        let r = oracle_box(g, &betas).unwrap();
        max_delta = max_delta.max(r.max_delta);
        comparisons += r.comparisons;
        reports.push(serde_json::to_value(&r).unwrap());
    }
    let elapsed = start.elapsed();
    let volumes: Vec<usize> = boxes.iter().map(|g| g.volume()).collect();
    Outcome {
        pass: volumes == [1, 2, 4, 6] && comparisons > 0 && max_delta <= 1e-9 && within(elapsed, 300),
        detail: format!(
            "{} boxes {:?}, {comparisons} comparisons, max |fast - exact| = {max_delta:.2e}, {:.1}s",
            boxes.len(),
            ids,
            elapsed.as_secs_f64()
        ),
        report: json!({ "boxes": reports }),
    }
}

fn c4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut has_3x3 = false;
    for _ in 0..100 {
        let (w, h) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        has_3x3 |= w == 3 && h == 3;
        let g = box2(w, h);
        let beta = 1.0 - rng.gen::<f64>();
        let spins: Vec<i32> = (0..g.boundary_len())
            .map(|_| if rng.gen_bool(0.5) { 1 } else { -1 })
            .collect();
        let b = Boundary::Fixed(BoundaryCondition::from_spins(&spins).unwrap());
        let zero = FieldAssignment::zero(g.volume());
        let naive = magnetizations(&g, beta, &zero, &b, Method::Naive).unwrap();
        let transfer = magnetizations(&g, beta, &zero, &b, Method::Transfer).unwrap();
        for (a, c) in naive.iter().zip(&transfer) {
            worst = worst.max((a - c).abs());
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: worst <= 1e-12 && has_3x3 && within(elapsed, 60),
        detail: format!("100 instances, max |naive - transfer| = {worst:.2e}"),
        report: json!({ "max_delta": worst }),
    }
}

fn c5() -> Outcome {
    let start = Instant::now();
    let onsager = dscert::onsager_beta();
    let opts = CheckOptions::default();
    let mut pass = true;
    let mut best_lo = 0.0f64;
    let mut rows = Vec::new();
    for (w, h) in [(1, 1), (2, 2), (2, 3), (3, 3)] {
        let r = beta_v(&box2(w, h), 1e-5, 1.0, 16, &opts).unwrap();
        let hi = r.beta_hi.unwrap_or(f64::INFINITY);
        pass &= r.status == BisectionStatus::Bracketed && hi < onsager && hi < 0.4407;
        best_lo = best_lo.max(r.beta_lo);
        rows.push(json!({
            "geometry": r.geometry,
            "beta_lo": r.beta_lo,
            "beta_hi": r.beta_hi,
            "monotonicity_violations": r.monotonicity_violations,
        }));
    }
    let elapsed = start.elapsed();
    let brackets: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{} [{:.5}, {:.5}]",
                r["geometry"].as_str().unwrap(),
                r["beta_lo"].as_f64().unwrap(),
                r["beta_hi"].as_f64().unwrap_or(f64::NAN)
            )
        })
        .collect();
    Outcome {
        pass: pass && best_lo > 0.27465 && within(elapsed, 1800),
        detail: format!("{}; best beta_lo {best_lo:.5} < {onsager:.7}", brackets.join(", ")),
        report: json!({ "brackets": rows, "best_beta_lo": best_lo }),
    }
}

fn c6() -> Outcome {
    let start = Instant::now();
    let g = box2(3, 4);
    let r = check_cv(&g, 0.3, &CheckOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let mut report = serde_json::to_value(&r).unwrap();
    strip_volatile(&mut report);
    Outcome {
        pass: r.stats.raw == 14 * (1 << 13) && r.stats.reduction >= 0.45 && within(elapsed, 600),
        detail: format!(
            "3x4 at beta=0.3: sum {:.6} vs {} ({:?}), evaluated {} of {} ({:.1}% saved), {:.1}s",
            r.sum,
            r.threshold,
            r.verdict,
            r.stats.evaluated,
            r.stats.raw,
            100.0 * r.stats.reduction,
            elapsed.as_secs_f64()
        ),
        report,
    }
}

fn c7() -> Outcome {
    let start = Instant::now();
    let sweep = dss_sweep(7, 10_000, 3, FieldMode::Uniform).unwrap();
    let elapsed = start.elapsed();
    let violations: Vec<String> = sweep
        .violations
        .iter()
        .map(|t| format!("7:{}", t.index))
        .collect();
    Outcome {
        pass: sweep.min_margin >= -1e-12 && violations.is_empty() && within(elapsed, 300),
        detail: format!(
            "10000 trials, min margin {:.3e}, violations {:?}",
            sweep.min_margin, violations
        ),
        report: serde_json::to_value(&sweep).unwrap(),
    }
}

fn c8() -> Outcome {
    let start = Instant::now();
    let tol = 1e-10;
    let runs = identity_sweep(11, 200, 3, tol).unwrap();
    let elapsed = start.elapsed();
    let residual = runs.iter().map(|r| r.check.residual).fold(0.0, f64::max);
    let gap = runs.iter().map(|r| r.table_gap).fold(0.0, f64::max);
    let small = runs.iter().all(|r| r.extents.iter().product::<usize>() <= 9);
    Outcome {
        pass: runs.len() == 200 && small && residual <= 10.0 * tol && gap <= 1e-12 && within(elapsed, 120),
        detail: format!("200 instances, max residual {residual:.2e}, max table gap {gap:.2e}"),
        report: serde_json::to_value(&runs).unwrap(),
    }
}

const CRITERIA: [(&str, fn() -> Outcome); 8] = [
    ("zero-temperature triviality", c1),
    ("single-site threshold", c2),
    ("transport oracle equivalence", c3),
    ("transfer-matrix correctness", c4),
    ("subcritical bound", c5),
    ("flagship 3x4 run", c6),
    ("covariance inequality sweep", c7),
    ("covariance identity", c8),
];

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

// Written straight to stderr so the lines survive the harness's output capture.
fn report_line(line: String) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn stripped(mut v: Value) -> String {
    strip_volatile(&mut v);
    serde_json::to_string(&v).unwrap()
}

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    let mut reports = Vec::new();
    for (i, (name, run)) in CRITERIA.iter().enumerate() {
        let o = in_pool(4, run);
        report_line(format!(
            "[{}] C{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        ));
        if !o.pass {
            failed.push(i + 1);
        }
        reports.push(stripped(o.report));
    }

    let mut mismatched = Vec::new();
    for threads in [1, 3] {
        for (i, (_, run)) in CRITERIA.iter().enumerate() {
            if stripped(in_pool(threads, run).report) != reports[i] {
                mismatched.push(format!("C{} with {threads} threads", i + 1));
            }
        }
    }
    let ok = mismatched.is_empty();
    report_line(format!(
        "[{}] C9 determinism: reports for C1-C8 under 1, 3 and 4 workers {}",
        if ok { "PASS" } else { "FAIL" },
        if ok { "are byte-identical".to_string() } else { format!("differ: {mismatched:?}") }
    ));
    if !ok {
        failed.push(9);
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

//! Acceptance criteria 1–10, one report line each on stderr.
//!
//! Criteria run one at a time so their runtime limits are measured without
//! contention. Stretch rows of criterion 4 are `#[ignore]`d.

mod common;

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use common::{closed_max, naive_periodic, open_max};
use disclab::discrepancy::{discrepancy, raster_oracle, star_discrepancy, Measure};
use disclab::model::builders::{build_assignment_2d, build_classical_2d, Extras, DEFAULT_EPS};
use disclab::model::check_solution;
use disclab::model::solution::{embed_assignment, embed_classical};
use disclab::pointset::random_set;
use disclab::raster::truncated_heatmap;
use disclab::search::exact::{exact_small_2d, DEFAULT_STARTS};
use disclab::search::lattice::{lattice1_value, lattice2_value};
use disclab::shifts::{admissible_delta, apply_shift, Direction, ShiftMove};
use disclab::tables::{evaluate, load, EvalOptions, RowOutcome, TableId, TableRow};
use disclab::PointSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn report(k: u32, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {k}: {verdict} {detail}");
}

fn run(k: u32, body: impl FnOnce() -> (bool, String)) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let (pass, detail) = body();
    report(k, pass, detail.clone());
    assert!(pass, "criterion {k}: {detail}");
}

fn failing_rows(rows: &[RowOutcome]) -> Vec<String> {
    rows.iter()
        .filter(|r| !r.pass)
        .map(|r| format!("n={} expected {} got {:.6} (|d|={:.2e})", r.n, r.expected, r.computed, r.deviation))
        .collect()
}

fn table_criterion(ids: &[TableId], limit: Duration) -> (bool, String) {
    let start = Instant::now();
    let mut rows = Vec::new();
    for &id in ids {
        rows.extend(evaluate(id, &EvalOptions::default()).unwrap());
    }
    let elapsed = start.elapsed();
    let bad = failing_rows(&rows);
    let fallback: Vec<String> = rows
        .iter()
        .filter(|r| r.fallback_used)
        .map(|r| format!("n={} params {:?} |d|={:.2e}", r.n, r.params, r.deviation))
        .collect();
    let mut detail = format!("{}/{} rows in {elapsed:.2?} (limit {limit:?})", rows.len() - bad.len(), rows.len());
    if !fallback.is_empty() {
        detail += &format!("; fallback tolerance used for {}", fallback.join(", "));
    }
    if !bad.is_empty() {
        detail += &format!("; failing: {}", bad.join("; "));
    }
    (bad.is_empty() && elapsed < limit, detail)
}

fn planar_sets(count: usize, lo: usize, hi: usize, seed: u64) -> Vec<PointSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_set(rng.random_range(lo..=hi), 2, rng.random()).unwrap()).collect()
}

#[test]
fn criterion_01_fibonacci_small() {
    run(1, || table_criterion(&[TableId::Fibonacci], Duration::from_secs(1)));
}

#[test]
fn criterion_02_fibonacci_large() {
    run(2, || table_criterion(&[TableId::FibonacciLarge], Duration::from_secs(5)));
}

/// Half a unit in the last printed decimal of a parameter.
fn half_ulp(text: &str) -> f64 {
    0.5 * 10f64.powi(-(text.split('.').nth(1).map_or(0, str::len) as i32))
}

/// Smallest star discrepancy over the box of parameters that round to the
/// printed ones. Diagnostic only; the verdict uses the printed values.
fn rounding_box_min(id: TableId, row: &TableRow) -> f64 {
    let steps = 60;
    let axis = |k: usize| -> Vec<f64> {
        let (c, h) = (row.params[k], half_ulp(&row.param_text[k]));
        (0..=steps).map(|s| c - h + 2.0 * h * s as f64 / steps as f64).collect()
    };
    match id {
        TableId::Lattice1 => axis(0).into_iter().map(|r| lattice1_value(row.n, r)).fold(f64::INFINITY, f64::min),
        _ => {
            let (a, b) = (axis(0), axis(1));
            a.iter()
                .flat_map(|&r1| b.iter().map(move |&r2| (r1, r2)))
                .map(|(r1, r2)| lattice2_value(row.n, r1, r2))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

#[test]
fn criterion_03_lattices() {
    run(3, || {
        let ids = [TableId::Lattice1, TableId::Lattice2];
        let (pass, mut detail) = table_criterion(&ids, Duration::from_secs(5));
        let mut notes = Vec::new();
        for id in ids {
            let table = load(id);
            for outcome in evaluate(id, &EvalOptions::default()).unwrap().iter().filter(|o| !o.pass) {
                let row = table.rows.iter().find(|r| r.n == outcome.n).unwrap();
                notes.push(format!("{id} n={} {:.6}", row.n, rounding_box_min(id, row)));
            }
        }
        if !notes.is_empty() {
            detail += &format!("; rounding-box minima of failing rows: {}", notes.join(", "));
        }
        (pass, detail)
    });
}

#[test]
fn criterion_04_exact_small() {
    run(4, || {
        let start = Instant::now();
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let mut bad = Vec::new();
        let r1 = exact_small_2d(1, DEFAULT_STARTS, 1).unwrap();
        if (r1.f - golden).abs() > 1e-4 || (star_discrepancy(&r1.points).value - r1.f).abs() > 1e-12 {
            bad.push(format!("n=1 got {:.6}", r1.f));
        }
        let expected = [(2, 0.366), (3, 0.2847), (4, 0.2500), (5, 0.2000), (6, 0.1667)];
        let mut got = vec![format!("1:{:.4}", r1.f)];
        for (n, want) in expected {
            let r = exact_small_2d(n, DEFAULT_STARTS, 1).unwrap();
            let certified = star_discrepancy(&r.points).value;
            got.push(format!("{n}:{:.4}", r.f));
            if (r.f - want).abs() > 1e-3 || (certified - r.f).abs() > 1e-12 {
                bad.push(format!("n={n} expected {want} got {:.6}", r.f));
            }
        }
        let elapsed = start.elapsed();
        let limit = Duration::from_secs(600);
        let mut detail = format!("n=1..6 [{}] in {elapsed:.2?} (limit {limit:?})", got.join(" "));
        if !bad.is_empty() {
            detail += &format!("; failing: {}", bad.join("; "));
        }
        (bad.is_empty() && elapsed < limit, detail)
    });
}

fn stretch(n: usize, want: f64) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let r = exact_small_2d(n, DEFAULT_STARTS, 1).unwrap();
    let elapsed = start.elapsed();
    let pass = (r.f - want).abs() <= 1e-3 && elapsed < Duration::from_secs(7200);
    report(4, pass, format!("stretch n={n} expected {want} got {:.6} in {elapsed:.2?}", r.f));
    assert!(pass);
}

#[test]
#[ignore = "stretch row, long running"]
fn criterion_04_stretch_n7() {
    stretch(7, 0.1500);
}

#[test]
#[ignore = "stretch row, long running"]
fn criterion_04_stretch_n8() {
    stretch(8, 0.1328);
}

#[test]
fn criterion_05_model_round_trip() {
    run(5, || {
        let r = exact_small_2d(5, DEFAULT_STARTS, 1).unwrap();
        let f = star_discrepancy(&r.points).value;
        let classical = build_classical_2d(5, DEFAULT_EPS, Extras::none()).unwrap();
        let assign = build_assignment_2d(5, DEFAULT_EPS, Extras::none()).unwrap();
        let mut outcomes = Vec::new();
        let mut pass = true;
        for (name, feasible_above, feasible_below) in [
            (
                "classical",
                check_solution(&classical, &embed_classical(&r.points, f + 1e-6).unwrap(), 1e-9).unwrap(),
                check_solution(&classical, &embed_classical(&r.points, f - 1e-4).unwrap(), 1e-9).unwrap(),
            ),
            (
                "assignment",
                check_solution(&assign, &embed_assignment(&r.points, f + 1e-6).unwrap(), 1e-9).unwrap(),
                check_solution(&assign, &embed_assignment(&r.points, f - 1e-4).unwrap(), 1e-9).unwrap(),
            ),
        ] {
            pass &= feasible_above.feasible && !feasible_below.feasible;
            outcomes.push(format!(
                "{name}: +1e-6 {} / -1e-4 {} (max violation {:.2e})",
                if feasible_above.feasible { "feasible" } else { "infeasible" },
                if feasible_below.feasible { "feasible" } else { "infeasible" },
                feasible_below.max_violation
            ));
        }
        (pass, format!("certified f={f:.6}; {}", outcomes.join("; ")))
    });
}

#[test]
fn criterion_06_shift_invariants() {
    run(6, || {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sets = planar_sets(1000, 4, 30, 60);
        let (mut a_bad, mut b_bad, mut c_bad, mut c_moved) = (0, 0, 0, 0);
        let mut example = String::new();
        for p in &sets {
            let i = rng.random_range(0..p.len());
            let frac: f64 = rng.random();
            let shift = |direction: Direction, delta: f64| {
                apply_shift(p, &ShiftMove { point_index: i, direction, delta }).unwrap()
            };
            let (x, y) = (p.point(i)[0], p.point(i)[1]);

            let up = if rng.random() { shift(Direction::Up, (1.0 - y) * frac) } else { shift(Direction::Right, (1.0 - x) * frac) };
            if closed_max(&up) > closed_max(p) + 1e-12 {
                a_bad += 1;
            }
            let down = if rng.random() { shift(Direction::Down, y * frac) } else { shift(Direction::Left, x * frac) };
            if open_max(&down) > open_max(p) + 1e-12 {
                b_bad += 1;
            }

            let base = star_discrepancy(p).value;
            for direction in [Direction::Up, Direction::Down, Direction::Left, Direction::Right] {
                let delta = admissible_delta(p, i, direction).unwrap() * frac;
                if delta == 0.0 {
                    continue;
                }
                c_moved += 1;
                let after = star_discrepancy(&shift(direction, delta)).value;
                if after > base + 1e-12 {
                    c_bad += 1;
                    if example.is_empty() {
                        example = format!(" (e.g. n={} {direction:?} shift: {base:.6} -> {after:.6})", p.len());
                    }
                }
            }
        }
        (
            a_bad == 0 && b_bad == 0 && c_bad == 0,
            format!(
                "(a) {a_bad}/1000 violations; (b) {b_bad}/1000 violations; (c) {c_bad}/{c_moved} admissible shifts raised d*{example}"
            ),
        )
    });
}

#[test]
fn criterion_07_lower_bound() {
    run(7, || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut bad = 0;
        let mut worst = f64::INFINITY;
        for k in 0..2000 {
            let (dim, n) = if k < 1000 { (2, rng.random_range(4..=40)) } else { (3, rng.random_range(3..=12)) };
            let p = random_set(n, dim, rng.random()).unwrap();
            let margin = star_discrepancy(&p).value - 1.0 / n as f64;
            worst = worst.min(margin);
            if margin < -1e-12 {
                bad += 1;
            }
        }
        (bad == 0, format!("1000 planar + 1000 spatial sets, {bad} below 1/n, smallest margin {worst:.3e}"))
    });
}

#[test]
fn criterion_08_measure_order() {
    run(8, || {
        let mut bad = 0;
        for p in planar_sets(1000, 1, 20, 80) {
            let v = |m| discrepancy(&p, m).unwrap().value;
            let (star, c4, ext, per) = (v(Measure::Star), v(Measure::Corner4), v(Measure::Extreme), v(Measure::Periodic));
            if star > c4 + 1e-12 || star > ext + 1e-12 || ext > per + 1e-12 {
                bad += 1;
            }
        }
        let mut singles = Vec::new();
        for pt in [(0.5, 0.5), (0.2, 0.7), (0.0, 1.0)] {
            let p = PointSet::from_pairs(&[pt]).unwrap();
            singles.push(discrepancy(&p, Measure::Extreme).unwrap().value == 1.0);
            singles.push(discrepancy(&p, Measure::Periodic).unwrap().value == 1.0);
        }
        let center = PointSet::from_pairs(&[(0.5, 0.5)]).unwrap();
        let c4 = discrepancy(&center, Measure::Corner4).unwrap().value;
        let singles_ok = singles.iter().all(|&b| b) && c4 == 0.75;
        (
            bad == 0 && singles_ok,
            format!("{bad}/1000 order violations; single point extreme/periodic = 1: {}; corner4 of center = {c4}", singles.iter().all(|&b| b)),
        )
    });
}

#[test]
fn criterion_09_oracles() {
    run(9, || {
        let mut raster_bad = 0;
        for p in planar_sets(200, 1, 50, 90) {
            let exact = star_discrepancy(&p).value;
            if (raster_oracle(&p, 2, Measure::Star, true).unwrap() - exact).abs() > 1e-12 {
                raster_bad += 1;
            }
        }
        let mut periodic_bad = 0;
        for p in planar_sets(50, 1, 10, 91) {
            let engine = discrepancy(&p, Measure::Periodic).unwrap().value;
            if (naive_periodic(&p) - engine).abs() > 1e-12 {
                periodic_bad += 1;
            }
        }
        (
            raster_bad == 0 && periodic_bad == 0,
            format!("augmented raster {raster_bad}/200 mismatches; naive periodic {periodic_bad}/50 mismatches"),
        )
    });
}

#[test]
fn criterion_10_truncation() {
    run(10, || {
        let mut bad = 0;
        let mut kept = 0;
        for p in planar_sets(100, 2, 40, 100) {
            let h = truncated_heatmap(&p, 64).unwrap();
            let floor = star_discrepancy(&p).value - 1.0 / p.len() as f64;
            kept += h.values.iter().filter(|&&v| v != 0.0).count();
            if h.values.iter().any(|&v| v != 0.0 && v < floor) {
                bad += 1;
            }
        }
        (bad == 0, format!("{bad}/100 sets with a kept pixel below d* - 1/n ({kept} pixels kept)"))
    });
}

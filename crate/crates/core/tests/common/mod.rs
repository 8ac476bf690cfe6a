//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use disclab::PointSet;

/// Grid values `{coordinates} ∪ {1}` per axis.
fn grid(p: &PointSet, j: usize) -> Vec<f64> {
    let mut v = p.axis(j);
    v.push(1.0);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// `max_q |P ∩ [0,q]|/n − λ([0,q])`.
pub fn closed_max(p: &PointSet) -> f64 {
    let n = p.len() as f64;
    let mut best = f64::NEG_INFINITY;
    for &qx in &grid(p, 0) {
        for &qy in &grid(p, 1) {
            let c = p.points().filter(|x| x[0] <= qx && x[1] <= qy).count() as f64;
            best = best.max(c / n - qx * qy);
        }
    }
    best
}

/// `max_q λ([0,q)) − |P ∩ [0,q)|/n`.
pub fn open_max(p: &PointSet) -> f64 {
    let n = p.len() as f64;
    let mut best = f64::NEG_INFINITY;
    for &qx in &grid(p, 0) {
        for &qy in &grid(p, 1) {
            let c = p.points().filter(|x| x[0] < qx && x[1] < qy).count() as f64;
            best = best.max(qx * qy - c / n);
        }
    }
    best
}

type Arc = (f64, f64, bool);

/// One-dimensional arcs of the circle with endpoints in `{0} ∪ coords ∪ {1}`:
/// membership test and length, closed arcs first.
fn arcs(p: &PointSet, j: usize) -> (Vec<Arc>, Vec<Arc>) {
    let mut e = p.axis(j);
    e.push(0.0);
    e.push(1.0);
    e.sort_by(f64::total_cmp);
    e.dedup();
    let mut closed = Vec::new();
    let mut open = Vec::new();
    for &a in &e {
        for &b in &e {
            // (a, b, wraps)
            if a <= b {
                closed.push((a, b, false));
            } else {
                closed.push((a, b, true));
            }
            if a < b {
                open.push((a, b, false));
            } else {
                open.push((a, b, true));
            }
        }
    }
    (closed, open)
}

fn closed_member(x: f64, (a, b, w): (f64, f64, bool)) -> bool {
    if w {
        x >= a || x <= b
    } else {
        a <= x && x <= b
    }
}

fn open_member(x: f64, (a, b, w): (f64, f64, bool)) -> bool {
    if w {
        x > a || x < b
    } else {
        a < x && x < b
    }
}

fn length((a, b, w): (f64, f64, bool)) -> f64 {
    if w {
        1.0 - a + b
    } else {
        b - a
    }
}

/// Periodic discrepancy by enumerating every torus box spanned by grid
/// values, closed boxes for overfill and open boxes for underfill.
pub fn naive_periodic(p: &PointSet) -> f64 {
    let n = p.len() as f64;
    let (cx, ox) = arcs(p, 0);
    let (cy, oy) = arcs(p, 1);
    let mut best: f64 = 0.0;
    for &ax in &cx {
        for &ay in &cy {
            let c = p.points().filter(|x| closed_member(x[0], ax) && closed_member(x[1], ay)).count() as f64;
            best = best.max(c / n - length(ax) * length(ay));
        }
    }
    for &ax in &ox {
        for &ay in &oy {
            let c = p.points().filter(|x| open_member(x[0], ax) && open_member(x[1], ay)).count() as f64;
            best = best.max(length(ax) * length(ay) - c / n);
        }
    }
    best
}

//! Brute-force reference solvers: dense grids, Levenberg–Marquardt polish,
//! and clustering. They share no geometry with the analytic solvers and are
//! used to cross-check solution counts.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::joint_model::{base_layout, JointParams};
use crate::single_arm::PLANAR_ARM;

/// Shape of a solution set found by brute force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OracleClass {
    /// Isolated solutions, one representative per cluster.
    Finite(Vec<[f64; 2]>),
    /// Both unknowns free: every grid cell solves.
    Continuum,
    /// Finitely many values of the first unknown, each with the second
    /// unknown free over an interval.
    FamilyOverSecond(Vec<f64>),
    /// The refined solutions link into one closed curve.
    Loop(usize),
}

impl OracleClass {
    pub fn finite_count(&self) -> Option<usize> {
        match self {
            OracleClass::Finite(v) => Some(v.len()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    pub grid: usize,
    pub cluster_radius: f64,
    pub accept: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            grid: 2000,
            cluster_radius: 1e-3,
            accept: 1e-8,
        }
    }
}

/// Levenberg–Marquardt on a 2×2 system with forward-difference Jacobian.
/// `project` keeps iterates inside the domain.
fn lm2(
    f: impl Fn([f64; 2]) -> [f64; 2],
    project: impl Fn([f64; 2]) -> [f64; 2],
    x0: [f64; 2],
) -> ([f64; 2], f64) {
    let norm = |r: [f64; 2]| r[0].hypot(r[1]);
    let mut x = x0;
    let mut r = f(x);
    let mut cost = norm(r);
    let mut mu = 1e-3;
    for _ in 0..200 {
        if cost < 1e-15 {
            break;
        }
        let h = 1e-8;
        let mut j = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut xp = x;
            xp[k] += h;
            let rp = f(xp);
            j[0][k] = (rp[0] - r[0]) / h;
            j[1][k] = (rp[1] - r[1]) / h;
        }
        // (JᵀJ + μ I) δ = -Jᵀ r
        let a00 = j[0][0] * j[0][0] + j[1][0] * j[1][0] + mu;
        let a01 = j[0][0] * j[0][1] + j[1][0] * j[1][1];
        let a11 = j[0][1] * j[0][1] + j[1][1] * j[1][1] + mu;
        let g0 = -(j[0][0] * r[0] + j[1][0] * r[1]);
        let g1 = -(j[0][1] * r[0] + j[1][1] * r[1]);
        let det = a00 * a11 - a01 * a01;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let step = [(a11 * g0 - a01 * g1) / det, (a00 * g1 - a01 * g0) / det];
        let trial = project([x[0] + step[0], x[1] + step[1]]);
        let rt = f(trial);
        let ct = norm(rt);
        if ct < cost {
            x = trial;
            r = rt;
            cost = ct;
            mu = (mu * 0.3).max(1e-15);
            if step[0].hypot(step[1]) < 1e-15 {
                break;
            }
        } else {
            mu *= 10.0;
            if mu > 1e12 {
                break;
            }
        }
    }
    (x, cost)
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn local_min(r: &[f64], i: usize, periodic: bool) -> bool {
    let n = r.len();
    let here = r[i].abs();
    let left = match (i, periodic) {
        (0, false) => f64::INFINITY,
        _ => r[(i + n - 1) % n].abs(),
    };
    let right = match (i + 1 == n, periodic) {
        (true, false) => f64::INFINITY,
        _ => r[(i + 1) % n].abs(),
    };
    here <= left && here <= right
}

/// Greedy clustering in order; `dist` measures separation.
fn cluster(
    points: &[[f64; 2]],
    radius: f64,
    dist: impl Fn(&[f64; 2], &[f64; 2]) -> f64,
) -> Vec<[f64; 2]> {
    let mut reps: Vec<[f64; 2]> = Vec::new();
    for p in points {
        if !reps.iter().any(|r| dist(r, p) <= radius) {
            reps.push(*p);
        }
    }
    reps
}

/// All `(θ, p)`, θ over the whole circle and p in `[0, ℓ]`, that put arm 1's
/// distal hinge at `h`: the ball joint `P(θ)` is ℓ from `h` and the Center
/// `(0, 0, p)` is as far from `h` as from the base hinge.
pub fn arm_preimage_oracle(
    params: &JointParams,
    h: &Vec3,
    settings: &OracleSettings,
) -> OracleClass {
    let n = settings.grid;
    let ell = params.ell;
    let base = base_layout(params);
    let b1 = base.hinges[0];
    let rho2 = b1.norm_squared();
    let ball = |theta: f64| base.ball_joint(0, ell, theta);
    let f1 = |theta: f64| ball(theta).distance(h) - ell;
    let f2 = |p: f64| {
        let c = Vec3::new(0.0, 0.0, p);
        c.distance(h) - (p * p + rho2).sqrt()
    };
    let dtheta = TAU / n as f64;
    let dp = ell / (n - 1) as f64;
    let thetas: Vec<f64> = (0..n).map(|i| i as f64 * dtheta).collect();
    let ps: Vec<f64> = (0..n).map(|j| j as f64 * dp).collect();
    let r1: Vec<f64> = thetas.iter().map(|&t| f1(t)).collect();
    let r2: Vec<f64> = ps.iter().map(|&p| f2(p)).collect();

    // Within half a cell of a root the residuals are bounded by their
    // Lipschitz constants: |f1'| ≤ ℓ and |f2'| ≤ 2. Each residual depends on
    // one unknown only, so the candidate cells of the grid are the product of
    // the candidate rows and columns.
    let t_thr = ell * dtheta;
    let p_thr = 2.0 * dp;
    // Every root sits next to a local minimum of |residual| on the grid, so
    // only those nodes seed the polish.
    let rows: Vec<usize> = (0..n)
        .filter(|&i| r1[i].abs() <= t_thr && local_min(&r1, i, true))
        .collect();
    let cols: Vec<usize> = (0..n)
        .filter(|&j| r2[j].abs() <= p_thr && local_min(&r2, j, false))
        .collect();
    if rows.is_empty() || cols.is_empty() {
        return OracleClass::Finite(Vec::new());
    }
    // An unknown is free only if its residual vanishes at every node; a
    // small but nonzero residual (targets just off the base plane) still
    // pins it down.
    let free_theta = r1.iter().all(|r| r.abs() <= settings.accept);
    let free_p = r2.iter().all(|r| r.abs() <= settings.accept);
    if free_theta && free_p {
        return OracleClass::Continuum;
    }
    let candidates: Vec<(usize, usize)> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
        .collect();

    let residual = |x: [f64; 2]| [f1(x[0]), f2(x[1])];
    let project = |x: [f64; 2]| [x[0].rem_euclid(TAU), x[1].clamp(0.0, ell)];
    let dist = |a: &[f64; 2], b: &[f64; 2]| angle_gap(a[0], b[0]).hypot(a[1] - b[1]);

    if free_p {
        // Polish θ alone at a fixed representative p.
        let j = cols[cols.len() / 2];
        let refined: Vec<[f64; 2]> = rows
            .iter()
            .filter_map(|&i| {
                let (x, cost) = lm2(residual, project, [thetas[i], ps[j]]);
                (cost <= settings.accept).then_some(x)
            })
            .collect();
        let reps = cluster(&refined, settings.cluster_radius, |a, b| {
            angle_gap(a[0], b[0])
        });
        let mut out: Vec<f64> = reps.iter().map(|r| r[0]).collect();
        out.sort_by(f64::total_cmp);
        return OracleClass::FamilyOverSecond(out);
    }

    let refined: Vec<[f64; 2]> = candidates
        .par_iter()
        .filter_map(|&(i, j)| {
            let (x, cost) = lm2(residual, project, [thetas[i], ps[j]]);
            (cost <= settings.accept).then_some(x)
        })
        .collect();
    let mut reps = cluster(&refined, settings.cluster_radius, dist);
    reps.sort_by(|a, b| a[0].total_cmp(&b[0]));
    OracleClass::Finite(reps)
}

/// All `(a₁, a₂)` bar directions of the planar chain V0 → V1 → V2 (bars of
/// length ½ from the origin) that put V2 at `target`.
pub fn planar_oracle(target: [f64; 2], settings: &OracleSettings) -> OracleClass {
    let n = settings.grid;
    let step = TAU / n as f64;
    let angle = |i: usize| -PI + i as f64 * step;
    let f = |x: [f64; 2]| {
        [
            PLANAR_ARM * (x[0].cos() + x[1].cos()) - target[0],
            PLANAR_ARM * (x[0].sin() + x[1].sin()) - target[1],
        ]
    };
    // |∇| of each component is at most ½ per angle.
    let thr = PLANAR_ARM * step * 2.0;
    let candidates: Vec<[f64; 2]> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..n).filter_map(move |j| {
                let x = [angle(i), angle(j)];
                let r = f(x);
                (r[0].hypot(r[1]) <= thr).then_some(x)
            })
        })
        .collect();
    let project = |x: [f64; 2]| [x[0], x[1]];
    let refined: Vec<[f64; 2]> = candidates
        .par_iter()
        .filter_map(|&x0| {
            let (x, cost) = lm2(f, project, x0);
            (cost <= settings.accept).then(|| [wrap(x[0]), wrap(x[1])])
        })
        .collect();
    let dist = |a: &[f64; 2], b: &[f64; 2]| angle_gap(a[0], b[0]).hypot(angle_gap(a[1], b[1]));
    let reps = cluster(&refined, settings.cluster_radius, dist);
    if reps.len() >= 32 && is_closed_loop(&reps, 4.0 * step, dist) {
        return OracleClass::Loop(reps.len());
    }
    OracleClass::Finite(reps)
}

fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Whether linking points closer than `link` yields one connected graph in
/// which every point has at least two neighbours.
fn is_closed_loop(
    points: &[[f64; 2]],
    link: f64,
    dist: impl Fn(&[f64; 2], &[f64; 2]) -> f64,
) -> bool {
    let n = points.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dist(&points[i], &points[j]) <= link {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    if adj.iter().any(|a| a.len() < 2) {
        return false;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

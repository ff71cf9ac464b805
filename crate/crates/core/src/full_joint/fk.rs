//! Numerical bridge from three base angles to `(p, φ, branch)`.
//!
//! θ₁ fixes the single-arm base angle; the remaining two unknowns are found
//! by scanning a `(p, φ)` grid per branch for local minima of the θ₂/θ₃
//! mismatch and polishing each with damped Newton steps.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{reconstruct, BranchId, Configuration};
use crate::error::{Error, Result};
use crate::joint_model::{wrap_pi, JointParams};
use crate::single_arm::ControlTriple;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FkSettings {
    pub p_samples: usize,
    pub phi_samples: usize,
    /// Finite-difference step of the Jacobian.
    pub fd_step: f64,
    pub step_tol: f64,
    pub max_iter: usize,
    /// Largest accepted angle residual (radians, Euclidean over θ₂ and θ₃).
    pub accept: f64,
    /// Solutions of one branch closer than this in `(p, φ)` are merged.
    pub merge: f64,
    pub tol: f64,
}

impl Default for FkSettings {
    fn default() -> Self {
        Self {
            p_samples: 200,
            phi_samples: 200,
            fd_step: 1e-7,
            step_tol: 1e-12,
            max_iter: 100,
            accept: 1e-8,
            merge: 1e-6,
            tol: crate::geometry::DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FkSolution {
    pub control: ControlTriple,
    pub branch: BranchId,
    pub configuration: Configuration,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FkReport {
    pub solutions: Vec<FkSolution>,
    /// Seeds whose refinement did not reach the accepted residual.
    pub nonconvergent: usize,
    /// The targets lead to the folded pose, where the distal hinges sit on the
    /// base hinges and the mirror plane is undetermined.
    pub degenerate_fold: bool,
}

/// Smallest plunge for which θ₁ is reachable.
fn plunge_floor(theta: f64, params: &JointParams) -> Option<f64> {
    if theta <= PI {
        return Some(0.0);
    }
    // θ ≤ π + asin(p/d) ⇔ p ≥ ρ tan(θ - π) for θ in (π, 3π/2).
    if theta >= 1.5 * PI {
        return None;
    }
    let p = params.rho() * (theta - PI).tan();
    (p <= params.ell).then_some(p)
}

struct Problem<'a> {
    params: &'a JointParams,
    targets: [f64; 3],
    p_lo: f64,
    p_hi: f64,
    tol: f64,
}

impl Problem<'_> {
    fn config(&self, p: f64, phi: f64, branch: BranchId) -> Option<Configuration> {
        if !(self.p_lo..=self.p_hi).contains(&p) || phi.abs() >= PI {
            return None;
        }
        let report = reconstruct(
            self.params,
            &ControlTriple::new(self.targets[0], p, phi),
            self.tol,
        )
        .ok()?;
        report.branch(branch).cloned()
    }

    fn residual(&self, config: &Configuration) -> [f64; 2] {
        [
            wrap_pi(config.thetas[1] - self.targets[1]),
            wrap_pi(config.thetas[2] - self.targets[2]),
        ]
    }

    fn eval(&self, p: f64, phi: f64, branch: BranchId) -> Option<[f64; 2]> {
        self.config(p, phi, branch).map(|c| self.residual(&c))
    }

    fn clamp(&self, p: f64, phi: f64) -> (f64, f64) {
        let p = p.clamp(self.p_lo, self.p_hi);
        // Keep φ strictly inside (-π, π).
        let phi = wrap_pi(phi).clamp(-PI + 1e-12, PI - 1e-12);
        (p, phi)
    }

    fn jacobian(&self, p: f64, phi: f64, branch: BranchId, h: f64) -> Option<[[f64; 2]; 2]> {
        let mut jac = [[0.0; 2]; 2];
        for (k, (dp, dphi)) in [(h, 0.0), (0.0, h)].into_iter().enumerate() {
            // Central differences, falling back to one-sided steps at the
            // edge of the valid region.
            let fwd = self.eval(p + dp, phi + dphi, branch);
            let bwd = self.eval(p - dp, phi - dphi, branch);
            let col = match (fwd, bwd) {
                (Some(f), Some(b)) => [
                    wrap_pi(f[0] - b[0]) / (2.0 * h),
                    wrap_pi(f[1] - b[1]) / (2.0 * h),
                ],
                (Some(f), None) => {
                    let c = self.eval(p, phi, branch)?;
                    [wrap_pi(f[0] - c[0]) / h, wrap_pi(f[1] - c[1]) / h]
                }
                (None, Some(b)) => {
                    let c = self.eval(p, phi, branch)?;
                    [wrap_pi(c[0] - b[0]) / h, wrap_pi(c[1] - b[1]) / h]
                }
                (None, None) => return None,
            };
            jac[0][k] = col[0];
            jac[1][k] = col[1];
        }
        Some(jac)
    }

    fn refine(
        &self,
        seed: (f64, f64),
        branch: BranchId,
        settings: &FkSettings,
    ) -> Option<(f64, f64, f64)> {
        let (mut p, mut phi) = seed;
        let mut r = self.eval(p, phi, branch)?;
        let mut norm = r[0].hypot(r[1]);
        for _ in 0..settings.max_iter {
            if norm < 1e-15 {
                break;
            }
            let Some(j) = self.jacobian(p, phi, branch, settings.fd_step) else {
                break;
            };
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                break;
            }
            let dp = -(j[1][1] * r[0] - j[0][1] * r[1]) / det;
            let dphi = -(-j[1][0] * r[0] + j[0][0] * r[1]) / det;
            let mut lambda = 1.0;
            let mut improved = false;
            while lambda > 1e-6 {
                let (np, nphi) = self.clamp(p + lambda * dp, phi + lambda * dphi);
                if let Some(nr) = self.eval(np, nphi, branch) {
                    let nn = nr[0].hypot(nr[1]);
                    if nn < norm {
                        let step = (np - p).hypot(nphi - phi);
                        p = np;
                        phi = nphi;
                        r = nr;
                        norm = nn;
                        improved = true;
                        if step < settings.step_tol {
                            return Some((p, phi, norm));
                        }
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !improved {
                break;
            }
        }
        Some((p, phi, norm))
    }
}

/// Finds every `(p, φ, branch)` whose reconstruction has base angles
/// `targets` (radians).
pub fn solve_fk(
    params: &JointParams,
    targets: [f64; 3],
    settings: &FkSettings,
) -> Result<FkReport> {
    for t in targets {
        if !(0.0..TAU).contains(&t) {
            return Err(Error::OutOfRange {
                what: "base angle",
                value: t,
                lo: 0.0,
                hi: TAU,
            });
        }
    }
    if settings.p_samples < 2 || settings.phi_samples < 1 {
        return Err(Error::InvalidSpec(
            "fk grid needs at least 2 x 1 samples".into(),
        ));
    }
    // All ball joints in the base plane force the mirror plane onto it.
    let flat = targets
        .iter()
        .all(|t| t.abs() < 1e-9 || (t - PI).abs() < 1e-9);
    let Some(p_lo) = plunge_floor(targets[0], params) else {
        return if flat {
            Ok(FkReport {
                solutions: Vec::new(),
                nonconvergent: 0,
                degenerate_fold: true,
            })
        } else {
            Err(Error::NoSolution)
        };
    };
    let problem = Problem {
        params,
        targets,
        p_lo,
        p_hi: params.ell,
        tol: settings.tol,
    };
    let (np, nphi) = (settings.p_samples, settings.phi_samples);
    let p_at = |i: usize| p_lo + (params.ell - p_lo) * i as f64 / (np - 1) as f64;
    let phi_at = |j: usize| -PI + TAU * (j + 1) as f64 / (nphi + 1) as f64;

    // Residual norms per branch on the grid; infinite where the branch does not exist.
    let grid: Vec<[f64; 4]> = (0..np * nphi)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / nphi, idx % nphi);
            let mut out = [f64::INFINITY; 4];
            if let Ok(report) = reconstruct(
                params,
                &ControlTriple::new(targets[0], p_at(i), phi_at(j)),
                settings.tol,
            ) {
                for c in &report.configurations {
                    let k = BranchId::ALL.iter().position(|b| *b == c.branch).unwrap();
                    let r = problem.residual(c);
                    out[k] = r[0].hypot(r[1]);
                }
            }
            out
        })
        .collect();

    let mut seeds = Vec::new();
    for (k, branch) in BranchId::ALL.iter().enumerate() {
        for i in 0..np {
            for j in 0..nphi {
                let v = grid[i * nphi + j][k];
                if !v.is_finite() {
                    continue;
                }
                let mut is_min = true;
                'nb: for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let (ni, nj) = (i as i64 + di, j as i64 + dj);
                        if ni < 0 || nj < 0 || ni >= np as i64 || nj >= nphi as i64 {
                            continue;
                        }
                        let w = grid[ni as usize * nphi + nj as usize][k];
                        if w < v || (w == v && (ni, nj) < (i as i64, j as i64)) {
                            is_min = false;
                            break 'nb;
                        }
                    }
                }
                if is_min {
                    seeds.push((*branch, p_at(i), phi_at(j)));
                }
            }
        }
    }

    let refined: Vec<Option<(BranchId, f64, f64, f64)>> = seeds
        .par_iter()
        .map(|&(branch, p, phi)| {
            problem
                .refine((p, phi), branch, settings)
                .map(|(p, phi, res)| (branch, p, phi, res))
        })
        .collect();

    let mut solutions: Vec<FkSolution> = Vec::new();
    let mut nonconvergent = 0;
    let mut degenerate_fold = flat;
    for item in refined {
        let Some((branch, p, phi, residual)) = item else {
            nonconvergent += 1;
            continue;
        };
        if residual > settings.accept {
            nonconvergent += 1;
            continue;
        }
        let Some(configuration) = problem.config(p, phi, branch) else {
            nonconvergent += 1;
            continue;
        };
        if configuration.distal_hinges[0].distance(&configuration.base.hinges[0]) < 1e-6 {
            degenerate_fold = true;
            continue;
        }
        let duplicate = solutions.iter_mut().find(|s| {
            s.branch == branch
                && (s.control.p - p).abs() < settings.merge
                && wrap_pi(s.control.phi - phi).abs() < settings.merge
        });
        match duplicate {
            Some(existing) => {
                if residual < existing.residual {
                    existing.control = configuration.control;
                    existing.configuration = configuration;
                    existing.residual = residual;
                }
            }
            None => solutions.push(FkSolution {
                control: configuration.control,
                branch,
                configuration,
                residual,
            }),
        }
    }
    solutions.sort_by(|a, b| {
        a.branch
            .cmp(&b.branch)
            .then(a.control.p.total_cmp(&b.control.p))
            .then(a.control.phi.total_cmp(&b.control.phi))
    });
    if solutions.is_empty() && !degenerate_fold {
        return Err(Error::NoSolution);
    }
    Ok(FkReport {
        solutions,
        nonconvergent,
        degenerate_fold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::full_joint::Sign;
    use crate::geometry::DEFAULT_TOL;

    fn params(ell: f64, b: f64) -> JointParams {
        JointParams::new(ell, b).unwrap()
    }

    #[test]
    fn recovers_a_known_configuration() {
        let p = params(7.0, 4.0);
        let ctrl = ControlTriple::from_degrees(150.0, 5.8, 20.0);
        let report = reconstruct(&p, &ctrl, DEFAULT_TOL).unwrap();
        for config in &report.configurations {
            let fk = solve_fk(&p, config.thetas, &FkSettings::default()).unwrap();
            assert!(
                fk.solutions.iter().any(|s| s.branch == config.branch
                    && (s.control.p - ctrl.p).abs() < 1e-6
                    && (s.control.phi - ctrl.phi).abs() < 1e-6),
                "branch {} not recovered: {:?}",
                config.branch,
                fk.solutions
                    .iter()
                    .map(|s| (s.branch, s.control))
                    .collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn equal_side_angles_admit_a_symmetric_solution() {
        let p = params(6.0, 4.0);
        let report = reconstruct(&p, &ControlTriple::new(1.4, 2.5, 0.0), DEFAULT_TOL).unwrap();
        let pp = report
            .branch(BranchId::new(Sign::Plus, Sign::Plus))
            .unwrap();
        let fk = solve_fk(&p, pp.thetas, &FkSettings::default()).unwrap();
        assert!(fk.solutions.iter().any(|s| s.control.phi.abs() < 1e-6));
    }

    #[test]
    fn folded_targets_report_the_fold() {
        let p = params(6.0, 4.0);
        let fk = solve_fk(&p, [PI, PI, PI], &FkSettings::default()).unwrap();
        assert!(fk.degenerate_fold);
        assert!(
            fk.solutions.is_empty(),
            "{:?}",
            fk.solutions.iter().map(|s| s.control).collect::<Vec<_>>()
        );
    }

    #[test]
    fn unreachable_targets() {
        let p = params(6.0, 4.0);
        assert!(matches!(
            solve_fk(&p, [5.0, 1.0, 1.0], &FkSettings::default()),
            Err(Error::NoSolution)
        ));
        assert!(solve_fk(&p, [7.0, 1.0, 1.0], &FkSettings::default()).is_err());
    }

    #[test]
    fn output_is_deterministic() {
        let p = params(7.0, 4.0);
        let ctrl = ControlTriple::new(2.0, 3.0, 0.6);
        let target = reconstruct(&p, &ctrl, DEFAULT_TOL).unwrap().configurations[0].thetas;
        let settings = FkSettings {
            p_samples: 60,
            phi_samples: 60,
            ..FkSettings::default()
        };
        let a = solve_fk(&p, target, &settings).unwrap();
        let b = solve_fk(&p, target, &settings).unwrap();
        assert_eq!(a, b);
    }
}

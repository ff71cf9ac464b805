//! Broken-arm workspaces: θ₁ is stuck, `(p, φ)` sweep a grid, and the
//! reachable distal-plate poses are collected and measured.

mod export;

pub use export::{export_cloud, import_csv, import_json, render, revalidate, ExportFormat};

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::full_joint::{pointing, reconstruct, BranchId};
use crate::geometry::Vec3;
use crate::joint_model::{p_bounds, JointParams};
use crate::single_arm::ControlTriple;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchPolicy {
    AllBranches,
    Branch(BranchId),
}

impl BranchPolicy {
    fn accepts(self, id: BranchId) -> bool {
        match self {
            BranchPolicy::AllBranches => true,
            BranchPolicy::Branch(b) => b == id,
        }
    }

    fn attempts(self) -> usize {
        match self {
            BranchPolicy::AllBranches => BranchId::ALL.len(),
            BranchPolicy::Branch(_) => 1,
        }
    }
}

impl fmt::Display for BranchPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchPolicy::AllBranches => f.write_str("all"),
            BranchPolicy::Branch(b) => write!(f, "{b}"),
        }
    }
}

impl FromStr for BranchPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            Ok(BranchPolicy::AllBranches)
        } else {
            s.parse().map(BranchPolicy::Branch)
        }
    }
}

impl Serialize for BranchPolicy {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BranchPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A `(p, φ)` grid at fixed θ₁.
///
/// `p` samples span `p_range` (default `[0, ℓ]`) inclusively. Without a
/// `phi_range` the φ samples are `-π + 2π(k+1)/(n+1)`, evenly spaced and
/// avoiding ±π; with one they span it inclusively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub theta_fixed: f64,
    pub p_samples: usize,
    pub phi_samples: usize,
    #[serde(default)]
    pub p_range: Option<(f64, f64)>,
    #[serde(default)]
    pub phi_range: Option<(f64, f64)>,
    pub branch_policy: BranchPolicy,
}

impl SweepSpec {
    pub fn new(theta_fixed: f64, p_samples: usize, phi_samples: usize) -> Self {
        Self {
            theta_fixed,
            p_samples,
            phi_samples,
            p_range: None,
            phi_range: None,
            branch_policy: BranchPolicy::AllBranches,
        }
    }

    pub fn validate(&self, params: &JointParams) -> Result<()> {
        if !(0.0..TAU).contains(&self.theta_fixed) {
            return Err(Error::InvalidSpec(format!(
                "theta {} outside [0, 2π)",
                self.theta_fixed
            )));
        }
        if self.p_samples < 2 || self.phi_samples < 2 {
            return Err(Error::InvalidSpec(
                "sample counts must be at least 2".into(),
            ));
        }
        let (lo, hi) = p_bounds(params);
        if let Some((a, b)) = self.p_range {
            if !(a.is_finite() && b.is_finite() && lo <= a && a < b && b <= hi) {
                return Err(Error::InvalidSpec(format!(
                    "p range [{a}, {b}] not within [{lo}, {hi}]"
                )));
            }
        }
        if let Some((a, b)) = self.phi_range {
            if !(a.is_finite() && b.is_finite() && -PI < a && a < b && b < PI) {
                return Err(Error::InvalidSpec(format!(
                    "phi range [{a}, {b}] not within (-π, π)"
                )));
            }
        }
        Ok(())
    }

    pub fn p_grid(&self, params: &JointParams) -> Vec<f64> {
        let (lo, hi) = self.p_range.unwrap_or_else(|| p_bounds(params));
        let n = self.p_samples;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    pub fn phi_grid(&self) -> Vec<f64> {
        let n = self.phi_samples;
        match self.phi_range {
            Some((lo, hi)) => (0..n)
                .map(|k| {
                    if k + 1 == n {
                        hi
                    } else {
                        lo + (hi - lo) * k as f64 / (n - 1) as f64
                    }
                })
                .collect(),
            None => (0..n)
                .map(|k| -PI + TAU * (k + 1) as f64 / (n + 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceSample {
    pub control: ControlTriple,
    pub branch: BranchId,
    pub distal_center: Vec3,
    pub pointing: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceCloud {
    pub params: JointParams,
    pub spec: SweepSpec,
    pub samples: Vec<WorkspaceSample>,
    /// Grid cell and branch combinations that did not assemble.
    pub rejected: usize,
}

impl WorkspaceCloud {
    pub fn attempted(&self) -> usize {
        self.spec.p_samples * self.spec.phi_samples * self.spec.branch_policy.attempts()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// [`Error::EmptyWorkspace`] when no grid cell assembled.
    pub fn non_empty(&self) -> Result<&Self> {
        if self.is_empty() {
            Err(Error::EmptyWorkspace)
        } else {
            Ok(self)
        }
    }
}

/// Evaluates the joint on the whole grid. Samples come out in p-major,
/// then φ, then branch order regardless of scheduling.
pub fn sweep_broken_arm(
    params: &JointParams,
    spec: &SweepSpec,
    tol: f64,
) -> Result<WorkspaceCloud> {
    spec.validate(params)?;
    let ps = spec.p_grid(params);
    let phis = spec.phi_grid();
    let cells: Vec<Vec<WorkspaceSample>> = (0..ps.len() * phis.len())
        .into_par_iter()
        .map(|idx| {
            let ctrl = ControlTriple::new(
                spec.theta_fixed,
                ps[idx / phis.len()],
                phis[idx % phis.len()],
            );
            match reconstruct(params, &ctrl, tol) {
                Ok(report) => report
                    .configurations
                    .iter()
                    .filter(|c| spec.branch_policy.accepts(c.branch))
                    .map(|c| WorkspaceSample {
                        control: c.control,
                        branch: c.branch,
                        distal_center: c.distal_center,
                        pointing: pointing(c),
                    })
                    .collect(),
                Err(_) => Vec::new(),
            }
        })
        .collect();
    let samples: Vec<WorkspaceSample> = cells.into_iter().flatten().collect();
    let attempted = ps.len() * phis.len() * spec.branch_policy.attempts();
    Ok(WorkspaceCloud {
        params: *params,
        spec: *spec,
        rejected: attempted - samples.len(),
        samples,
    })
}

/// Area of the unit sphere covered by a set of directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    /// Covered fraction of the full sphere.
    pub fraction: f64,
    /// Requested bin count.
    pub bins: usize,
    /// Actual number of cells in the partition.
    pub cells: usize,
    pub occupied: usize,
    pub scheme: String,
}

/// Partition of the sphere into latitude bands of equal polar height, each
/// split into longitude cells in proportion to its area.
struct SphereBins {
    band_height: f64,
    /// Longitude cells per band and the index of each band's first cell.
    counts: Vec<usize>,
    offsets: Vec<usize>,
    areas: Vec<f64>,
}

impl SphereBins {
    fn new(bins: usize) -> Self {
        let nbands = ((PI * bins as f64).sqrt() / 2.0).round().max(1.0) as usize;
        let band_height = PI / nbands as f64;
        let mut counts = Vec::with_capacity(nbands);
        let mut offsets = Vec::with_capacity(nbands);
        let mut areas = Vec::with_capacity(nbands);
        let mut total = 0;
        for k in 0..nbands {
            let (t0, t1) = (k as f64 * band_height, (k + 1) as f64 * band_height);
            let band = t0.cos() - t1.cos();
            let n = ((bins as f64 * band / 2.0).round() as usize).max(1);
            counts.push(n);
            offsets.push(total);
            areas.push(TAU * band / n as f64);
            total += n;
        }
        Self {
            band_height,
            counts,
            offsets,
            areas,
        }
    }

    fn len(&self) -> usize {
        self.offsets.last().unwrap() + self.counts.last().unwrap()
    }

    fn cell(&self, dir: &Vec3) -> Option<(usize, f64)> {
        let unit = dir.normalized()?;
        let polar = unit.z.clamp(-1.0, 1.0).acos();
        let band = ((polar / self.band_height) as usize).min(self.counts.len() - 1);
        let lon = unit.y.atan2(unit.x).rem_euclid(TAU);
        let n = self.counts[band];
        let slot = ((lon / TAU * n as f64) as usize).min(n - 1);
        Some((self.offsets[band] + slot, self.areas[band]))
    }
}

pub const COVERAGE_SCHEME: &str =
    "equal-height latitude bands, longitude cells proportional to band area";

/// Fraction of the sphere hit by `directions` under a partition of about
/// `bins` equal-area cells.
pub fn direction_coverage(directions: &[Vec3], bins: usize) -> Result<Coverage> {
    if directions.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if bins < 100 {
        return Err(Error::InvalidSpec(format!(
            "need at least 100 bins, got {bins}"
        )));
    }
    let grid = SphereBins::new(bins);
    let mut hit = vec![false; grid.len()];
    let mut area = 0.0;
    let mut occupied = 0;
    for dir in directions {
        if let Some((cell, a)) = grid.cell(dir) {
            if !hit[cell] {
                hit[cell] = true;
                area += a;
                occupied += 1;
            }
        }
    }
    Ok(Coverage {
        fraction: area / (4.0 * PI),
        bins,
        cells: grid.len(),
        occupied,
        scheme: COVERAGE_SCHEME.into(),
    })
}

/// Pointing-direction coverage of a cloud.
pub fn solid_angle_fraction(cloud: &WorkspaceCloud, bins: usize) -> Result<Coverage> {
    let dirs: Vec<Vec3> = cloud.samples.iter().map(|s| s.pointing).collect();
    direction_coverage(&dirs, bins)
}

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{WorkspaceCloud, WorkspaceSample};
use crate::error::{Error, Result};
use crate::full_joint::{pointing, reconstruct, validate, BranchId};
use crate::geometry::Vec3;
use crate::joint_model::JointParams;
use crate::single_arm::ControlTriple;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Ply,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "ply" => Ok(ExportFormat::Ply),
            "json" => Ok(ExportFormat::Json),
            _ => Err(Error::Parse(format!(
                "unknown format {s:?}, expected csv, ply or json"
            ))),
        }
    }
}

const CSV_HEADER: &str = "theta,p,phi,branch,cx,cy,cz,nx,ny,nz";

/// 17 significant digits: enough to round-trip any f64.
fn num(out: &mut String, x: f64) {
    write!(out, "{x:.16e}").unwrap();
}

fn csv(cloud: &WorkspaceCloud) -> String {
    let mut out = String::with_capacity(180 * (cloud.samples.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in &cloud.samples {
        let c = &s.control;
        for x in [c.theta, c.p, c.phi] {
            num(&mut out, x);
            out.push(',');
        }
        out.push_str(&s.branch.label());
        for x in s
            .distal_center
            .to_array()
            .into_iter()
            .chain(s.pointing.to_array())
        {
            out.push(',');
            num(&mut out, x);
        }
        out.push('\n');
    }
    out
}

fn ply(cloud: &WorkspaceCloud) -> String {
    let mut out = String::with_capacity(150 * (cloud.samples.len() + 10));
    out.push_str("ply\nformat ascii 1.0\ncomment distal plate centers with pointing normals\n");
    writeln!(out, "element vertex {}", cloud.samples.len()).unwrap();
    for name in ["x", "y", "z", "nx", "ny", "nz"] {
        writeln!(out, "property double {name}").unwrap();
    }
    out.push_str("end_header\n");
    for s in &cloud.samples {
        let values = s
            .distal_center
            .to_array()
            .into_iter()
            .chain(s.pointing.to_array());
        for (k, x) in values.enumerate() {
            if k > 0 {
                out.push(' ');
            }
            num(&mut out, x);
        }
        out.push('\n');
    }
    out
}

/// The exported document as text.
pub fn render(cloud: &WorkspaceCloud, format: ExportFormat) -> Result<String> {
    Ok(match format {
        ExportFormat::Csv => csv(cloud),
        ExportFormat::Ply => ply(cloud),
        ExportFormat::Json => {
            let mut s = serde_json::to_string(cloud).map_err(|e| Error::Parse(e.to_string()))?;
            s.push('\n');
            s
        }
    })
}

pub fn export_cloud(cloud: &WorkspaceCloud, format: ExportFormat, path: &Path) -> Result<()> {
    let text = render(cloud, format)?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Samples of a CSV export.
pub fn import_csv(path: &Path) -> Result<Vec<WorkspaceSample>> {
    let text = read(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(CSV_HEADER) => {}
        other => return Err(Error::Parse(format!("unexpected CSV header {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(row, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 10 {
                return Err(Error::Parse(format!(
                    "row {}: expected 10 fields, got {}",
                    row + 1,
                    fields.len()
                )));
            }
            let f = |k: usize| {
                fields[k]
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}, column {}: {e}", row + 1, k + 1)))
            };
            Ok(WorkspaceSample {
                control: ControlTriple::new(f(0)?, f(1)?, f(2)?),
                branch: fields[3].parse::<BranchId>()?,
                distal_center: Vec3::new(f(4)?, f(5)?, f(6)?),
                pointing: Vec3::new(f(7)?, f(8)?, f(9)?),
            })
        })
        .collect()
}

pub fn import_json(path: &Path) -> Result<WorkspaceCloud> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(e.to_string()))
}

/// Rebuilds the sample's configuration and returns the largest deviation of
/// its stored distal center and pointing from the rebuilt ones.
pub fn revalidate(params: &JointParams, sample: &WorkspaceSample, tol: f64) -> Result<f64> {
    let report = reconstruct(params, &sample.control, tol)?;
    let config = report
        .branch(sample.branch)
        .ok_or_else(|| Error::Invariant(format!("branch {} missing on rebuild", sample.branch)))?;
    let violations = validate(config, tol);
    if let Some(v) = violations.first() {
        return Err(Error::Invariant(format!(
            "{} off by {:e}",
            v.identity, v.residual
        )));
    }
    Ok(config
        .distal_center
        .distance(&sample.distal_center)
        .max(pointing(config).distance(&sample.pointing)))
}

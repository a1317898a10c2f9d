//! Output files. Every file is written to a temporary file in the target
//! directory and renamed into place.
//!
//! Numbers are printed in Rust's shortest round-trip decimal form, so equal
//! values always produce identical bytes.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::actuation::PressureTable;
use crate::gait::GaitCurveSet;
use crate::ik::{IkSettings, JointTrajectory};
use crate::kinematics::SECTION_COUNT;

pub const SCHEMA_VERSION: u32 = 1;

pub const CURVES_FILE: &str = "curves.csv";
pub const JOINTS_FILE: &str = "joints.csv";
pub const JOINTS_JSON_FILE: &str = "joints.json";
pub const SCHEDULE_FILE: &str = "schedule.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `path` atomically through `fill`.
pub fn write_atomic<F>(path: &Path, fill: F) -> io::Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn channel_names(prefix: &str) -> Vec<String> {
    (1..=SECTION_COUNT)
        .flat_map(|i| (1..=3).map(move |j| format!("{prefix}_{i}{j}")))
        .collect()
}

fn csv_io(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn write_rows<I>(w: &mut dyn Write, header: Vec<String>, rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(&header).map_err(csv_io)?;
    for r in rows {
        out.write_record(&r).map_err(csv_io)?;
    }
    out.flush()
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// `t,point_index,x,y,z,qw,qx,qy,qz`: one row per curve point, positions and
/// local-frame orientations in the robot base frame.
pub fn write_curves_csv(path: &Path, set: &GaitCurveSet) -> io::Result<()> {
    let header = ["t", "point_index", "x", "y", "z", "qw", "qx", "qy", "qz"].map(String::from).to_vec();
    let rows = set.curves.iter().flat_map(|c| {
        let inv = c.body_frame.inverse();
        c.points.iter().zip(&c.source_frames).enumerate().map(move |(k, (p, f))| {
            let q = (inv * *f).quaternion();
            vec![num(c.timestamp), k.to_string(), num(p.x), num(p.y), num(p.z), num(q.w), num(q.i), num(q.j), num(q.k)]
        })
    });
    write_atomic(path, |w| write_rows(w, header, rows))
}

/// `t,l_11,l_12,l_13,…,l_43`: actuator length changes in meters.
pub fn write_joints_csv(path: &Path, traj: &JointTrajectory) -> io::Result<()> {
    let mut header = vec!["t".to_string()];
    header.extend(channel_names("l"));
    let rows = traj.samples.iter().map(|s| {
        let mut r = vec![num(s.timestamp)];
        r.extend(s.joints.actuator_lengths().iter().map(|&v| num(v)));
        r
    });
    write_atomic(path, |w| write_rows(w, header, rows))
}

/// `t,p_11,p_12,p_13,…,p_43`: pressures in bar on the control grid.
pub fn write_schedule_csv(path: &Path, table: &PressureTable) -> io::Result<()> {
    let mut header = vec!["t".to_string()];
    header.extend(channel_names("p"));
    let rows = table.times.iter().zip(&table.rows).map(|(t, row)| {
        let mut r = vec![num(*t)];
        r.extend(row.iter().map(|&v| num(v)));
        r
    });
    write_atomic(path, |w| write_rows(w, header, rows))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::from)?;
        w.write_all(b"\n")
    })
}

/// JSON variant of the joint trajectory with solver metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointsDocument {
    pub schema_version: u32,
    pub solver: IkSettings,
    pub trajectory: JointTrajectory,
}

pub fn read_joints_json(path: &Path) -> io::Result<JointsDocument> {
    let doc: JointsDocument = serde_json::from_slice(&fs::read(path)?).map_err(io::Error::from)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unsupported schema_version {}", doc.schema_version),
        ));
    }
    Ok(doc)
}

//! CSV and JSON artifacts, written atomically.

use std::io::Write;
use std::path::Path;

use dispersive_vdw::integrate::{Diagnostics, TerminalStatus};
use serde::{Deserialize, Serialize};

/// Column order of trajectory CSVs.
pub const TRAJECTORY_COLUMNS: [&str; 10] = [
    "t",
    "norm_w1_H1",
    "norm_w2_L2",
    "norm_u1_H1",
    "norm_u2_L2",
    "energy",
    "mean_abs_u1",
    "mean_abs_u2",
    "cancellation_residual",
    "status",
];

/// Shortest notation carrying 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write `bytes` to a temporary file next to `path`, then rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub norm_w1_h1: f64,
    pub norm_w2_l2: f64,
    pub norm_u1_h1: f64,
    pub norm_u2_l2: f64,
    pub energy: f64,
    pub mean_abs_u1: f64,
    pub mean_abs_u2: f64,
    pub cancellation_residual: f64,
    pub status: String,
}

impl TrajectoryRow {
    pub fn new(t: f64, d: &Diagnostics, status: &str) -> Self {
        TrajectoryRow {
            t,
            norm_w1_h1: d.norm_w1_h1,
            norm_w2_l2: d.norm_w2_l2,
            norm_u1_h1: d.norm_u1_h1,
            norm_u2_l2: d.norm_u2_l2,
            energy: d.energy,
            mean_abs_u1: d.mean_abs_u1,
            mean_abs_u2: d.mean_abs_u2,
            cancellation_residual: d.cancellation_residual,
            status: status.into(),
        }
    }
}

/// Status label of a terminal status in CSV rows.
pub fn status_label(s: &TerminalStatus) -> &'static str {
    match s {
        TerminalStatus::Completed => "completed",
        TerminalStatus::Blowup { .. } => "blowup",
        TerminalStatus::Diverged { .. } => "diverged",
    }
}

/// Rows for a trajectory; intermediate samples are labelled `running`, the
/// last one carries the terminal status.
pub fn trajectory_rows(times: &[f64], diags: &[Diagnostics], status: &TerminalStatus) -> Vec<TrajectoryRow> {
    let n = times.len();
    times
        .iter()
        .zip(diags)
        .enumerate()
        .map(|(i, (&t, d))| {
            TrajectoryRow::new(t, d, if i + 1 == n { status_label(status) } else { "running" })
        })
        .collect()
}

/// Generic CSV table: a header, rows of preformatted cells, and optional
/// trailing `# key,value` comment lines.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>], comments: &[(String, String)]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    let mut out = w.into_inner().expect("in-memory flush");
    for (k, v) in comments {
        out.extend_from_slice(format!("# {k},{v}\n").as_bytes());
    }
    out
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> Vec<u8> {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut c: Vec<String> = [
                r.t,
                r.norm_w1_h1,
                r.norm_w2_l2,
                r.norm_u1_h1,
                r.norm_u2_l2,
                r.energy,
                r.mean_abs_u1,
                r.mean_abs_u2,
                r.cancellation_residual,
            ]
            .iter()
            .map(|x| fmt_f64(*x))
            .collect();
            c.push(r.status.clone());
            c
        })
        .collect();
    csv_bytes(&TRAJECTORY_COLUMNS, &cells, &[])
}

/// Read a trajectory CSV written by [`trajectory_csv`].
pub fn read_trajectory_csv(bytes: &[u8]) -> Result<Vec<TrajectoryRow>, csv::Error> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(bytes);
    r.records()
        .map(|rec| {
            let rec = rec?;
            let f = |i: usize| rec[i].parse::<f64>().unwrap_or(f64::NAN);
            Ok(TrajectoryRow {
                t: f(0),
                norm_w1_h1: f(1),
                norm_w2_l2: f(2),
                norm_u1_h1: f(3),
                norm_u2_l2: f(4),
                energy: f(5),
                mean_abs_u1: f(6),
                mean_abs_u2: f(7),
                cancellation_residual: f(8),
                status: rec[9].to_string(),
            })
        })
        .collect()
}

/// Header, rows and `# key,value` comments of any CSV written by this tool.
pub type CsvTable = (Vec<String>, Vec<Vec<String>>, Vec<(String, String)>);

pub fn read_csv_table(bytes: &[u8]) -> Result<CsvTable, csv::Error> {
    let text = String::from_utf8_lossy(bytes);
    let comments = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once(','))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(bytes);
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()?;
    Ok((header, rows, comments))
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a, C: Serialize, R: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a C,
    pub wall_time_s: f64,
    pub status: &'a str,
    pub outputs: Vec<String>,
    pub result: R,
}

pub fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("serializable report");
    out.push(b'\n');
    out
}

//! Run telemetry and its CSV form.
//!
//! The CSV starts with a `# isp-telemetry v1` line followed by a header row
//! with the columns in [`CSV_COLUMNS`] order. Units: seconds, radians,
//! rad/s, milliradians for the tracking angles, volts, and 0/1 for the
//! detection flag. Measured joint angles and gimbal rates are kept in memory
//! only; rows read back from CSV carry NaN for them.

use std::io::{Read, Write};

use crate::error::{IspError, Result};

pub const CSV_VERSION_LINE: &str = "# isp-telemetry v1";

pub const CSV_COLUMNS: [&str; 18] = [
    "t", "psi", "theta", "wb_x", "wb_y", "wb_z", "wp_x", "wp_y", "wp_z", "ytc", "yte", "ptc", "pte",
    "rate_cmd_y", "rate_cmd_z", "v_yaw", "v_pitch", "detect",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRow {
    pub t: f64,
    pub psi: f64,
    pub theta: f64,
    pub psi_meas: f64,
    pub theta_meas: f64,
    /// Base inertial rate in B.
    pub wb: [f64; 3],
    /// Gimbal inertial rate in G.
    pub wg: [f64; 3],
    /// Platform inertial (line-of-sight) rate in P.
    pub wp: [f64; 3],
    /// Target yaw angle from the initial boresight, mrad.
    pub ytc: f64,
    /// True yaw tracking error, mrad.
    pub yte: f64,
    pub ptc: f64,
    pub pte: f64,
    pub rate_cmd_y: f64,
    pub rate_cmd_z: f64,
    pub v_yaw: f64,
    pub v_pitch: f64,
    /// The last delivered camera frame contained the target.
    pub detect: bool,
}

impl TelemetryRow {
    fn csv_values(&self) -> [f64; 18] {
        [
            self.t,
            self.psi,
            self.theta,
            self.wb[0],
            self.wb[1],
            self.wb[2],
            self.wp[0],
            self.wp[1],
            self.wp[2],
            self.ytc,
            self.yte,
            self.ptc,
            self.pte,
            self.rate_cmd_y,
            self.rate_cmd_z,
            self.v_yaw,
            self.v_pitch,
            if self.detect { 1.0 } else { 0.0 },
        ]
    }

    fn from_csv_values(v: &[f64]) -> Self {
        Self {
            t: v[0],
            psi: v[1],
            theta: v[2],
            psi_meas: f64::NAN,
            theta_meas: f64::NAN,
            wb: [v[3], v[4], v[5]],
            wg: [f64::NAN; 3],
            wp: [v[6], v[7], v[8]],
            ytc: v[9],
            yte: v[10],
            ptc: v[11],
            pte: v[12],
            rate_cmd_y: v[13],
            rate_cmd_z: v[14],
            v_yaw: v[15],
            v_pitch: v[16],
            detect: v[17] != 0.0,
        }
    }
}

/// Named logged signals, for column extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal {
    T,
    Psi,
    Theta,
    Wb(usize),
    Wp(usize),
    Ytc,
    Yte,
    Ptc,
    Pte,
    RateCmdY,
    RateCmdZ,
    VYaw,
    VPitch,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TelemetryLog {
    pub rows: Vec<TelemetryRow>,
    /// Non-fatal notices raised during the run.
    pub warnings: Vec<String>,
}

/// Shortest round-trip formatting with negative zero folded to zero.
fn fmt_value(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

impl TelemetryLog {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, s: Signal) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match s {
                Signal::T => r.t,
                Signal::Psi => r.psi,
                Signal::Theta => r.theta,
                Signal::Wb(i) => r.wb[i],
                Signal::Wp(i) => r.wp[i],
                Signal::Ytc => r.ytc,
                Signal::Yte => r.yte,
                Signal::Ptc => r.ptc,
                Signal::Pte => r.pte,
                Signal::RateCmdY => r.rate_cmd_y,
                Signal::RateCmdZ => r.rate_cmd_z,
                Signal::VYaw => r.v_yaw,
                Signal::VPitch => r.v_pitch,
            })
            .collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.column(Signal::T)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = std::io::BufWriter::new(out);
        writeln!(out, "{CSV_VERSION_LINE}")?;
        writeln!(out, "{}", CSV_COLUMNS.join(","))?;
        let mut line = String::with_capacity(256);
        for r in &self.rows {
            line.clear();
            for (i, v) in r.csv_values().iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&fmt_value(*v));
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parses a log written by [`write_csv`](Self::write_csv). Lines after
    /// the version line that start with `#` are skipped.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut text = String::new();
        let mut input = input;
        input.read_to_string(&mut text)?;
        let mut lines = text.lines();
        match lines.next() {
            Some(l) if l.trim() == CSV_VERSION_LINE => {}
            other => {
                return Err(IspError::Parse(format!(
                    "expected `{CSV_VERSION_LINE}` on the first line, found {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let body = text.split_once('\n').map_or("", |(_, b)| b);
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).comment(Some(b'#')).from_reader(body.as_bytes());
        let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if header != CSV_COLUMNS {
            return Err(IspError::Parse(format!(
                "unexpected telemetry columns: {}",
                header.join(",")
            )));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let vals: std::result::Result<Vec<f64>, _> = rec.iter().map(|f| f.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| IspError::Parse(format!("telemetry row {}: {e}", i + 1)))?;
            if vals.len() != CSV_COLUMNS.len() {
                return Err(IspError::Parse(format!("telemetry row {} has {} fields", i + 1, vals.len())));
            }
            rows.push(TelemetryRow::from_csv_values(&vals));
        }
        Ok(Self { rows, warnings: Vec::new() })
    }

    pub fn read_csv_path(path: &std::path::Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

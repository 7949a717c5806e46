//! File formats: density snapshots and geodesic paths (JSON), diagnostics traces (CSV).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};

pub const SNAPSHOT_VERSION: u32 = 1;

pub const TRACE_HEADER: &str = "t,mass,entropy,dEdt_fd,dissipation,second_moment,kappa,fisher_weighted,sup_rho,sup_Lrho,hessian_value,d2Edt2_fd,cube_norm,eqnpos_value,rate_alpha";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotFile {
    pub version: u32,
    pub n: usize,
    pub r_max: f64,
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<SnapshotFile> {
    let text = fs::read_to_string(path)?;
    let snap: SnapshotFile = serde_json::from_str(&text)?;
    if snap.values.len() != snap.n {
        return Err(Error::usage(format!(
            "snapshot {} declares n = {} but holds {} values",
            path.display(),
            snap.n,
            snap.values.len()
        )));
    }
    Ok(snap)
}

fn cell(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        // shortest round-trip representation
        let _ = write!(out, "{v:e}");
    }
}

/// The trace as CSV text; `error` appends a `#error,<class>,<message>` marker row.
pub fn trace_csv(rows: &[DiagnosticsRecord], error: Option<&Error>) -> String {
    let mut s = String::with_capacity(256 * (rows.len() + 1));
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in rows {
        let cols = [
            Some(r.t),
            Some(r.mass),
            Some(r.entropy),
            r.dedt_fd,
            Some(r.dissipation),
            Some(r.second_moment),
            Some(r.kappa),
            Some(r.fisher_weighted),
            Some(r.sup_rho),
            Some(r.sup_lrho),
            Some(r.hessian_value),
            r.d2edt2_fd,
            Some(r.cube_norm),
            Some(r.eqnpos_value),
            Some(r.rate_alpha),
        ];
        for (k, c) in cols.into_iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            cell(&mut s, c);
        }
        s.push('\n');
    }
    if let Some(e) = error {
        let msg = e.to_string().replace([',', '\n'], ";");
        let _ = writeln!(s, "#error,{},{}", e.class(), msg);
    }
    s
}

fn parse_cell(line: usize, v: &str) -> Result<Option<f64>> {
    if v.is_empty() {
        return Ok(None);
    }
    v.parse()
        .map(Some)
        .map_err(|_| Error::usage(format!("trace line {line}: `{v}` is not a number")))
}

/// Parses a trace written by [`trace_csv`]; marker rows are skipped.
pub fn parse_trace_csv(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_HEADER) {
        return Err(Error::usage("trace header does not match the expected schema"));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let c: Vec<Option<f64>> = line.split(',').map(|v| parse_cell(k + 2, v)).collect::<Result<_>>()?;
        if c.len() != 15 {
            return Err(Error::usage(format!("trace line {} has {} columns", k + 2, c.len())));
        }
        let req = |i: usize| c[i].ok_or_else(|| Error::usage(format!("trace line {}: column {i} is empty", k + 2)));
        rows.push(DiagnosticsRecord {
            t: req(0)?,
            mass: req(1)?,
            entropy: req(2)?,
            dedt_fd: c[3],
            dissipation: req(4)?,
            second_moment: req(5)?,
            kappa: req(6)?,
            fisher_weighted: req(7)?,
            sup_rho: req(8)?,
            sup_lrho: req(9)?,
            hessian_value: req(10)?,
            d2edt2_fd: c[11],
            cube_norm: req(12)?,
            eqnpos_value: req(13)?,
            rate_alpha: req(14)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t,
            mass: 1.0,
            entropy: -4.25,
            dedt_fd: if t > 0.0 { Some(-0.0897) } else { None },
            dissipation: 0.0897,
            second_moment: 1.5,
            kappa: 0.0178846,
            fisher_weighted: 0.3,
            sup_rho: 0.0634,
            sup_lrho: 0.0634,
            hessian_value: 0.003,
            d2edt2_fd: None,
            cube_norm: 0.0122,
            eqnpos_value: -0.01,
            rate_alpha: 0.15,
        }
    }

    #[test]
    fn csv_round_trip_with_empty_fields() {
        let rows = vec![row(0.0), row(0.1 + 0.2)];
        let text = trace_csv(&rows, None);
        assert!(text.starts_with(TRACE_HEADER));
        assert!(text.lines().nth(1).unwrap().contains(",,"));
        assert_eq!(parse_trace_csv(&text).unwrap(), rows);
    }

    #[test]
    fn error_marker_row() {
        let e = Error::Numerical { step: 3, t: 0.5, message: "x, y".into() };
        let text = trace_csv(&[row(0.0)], Some(&e));
        let last = text.lines().last().unwrap();
        assert!(last.starts_with("#error,numerical,"));
        assert_eq!(last.split(',').count(), 3);
        assert_eq!(parse_trace_csv(&text).unwrap().len(), 1);
    }

    #[test]
    fn snapshot_round_trip_and_length_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        let s = SnapshotFile { version: SNAPSHOT_VERSION, n: 3, r_max: 2.0, t: 0.5, values: vec![1.0, 0.5, 0.0] };
        write_json(&p, &s).unwrap();
        assert_eq!(read_snapshot(&p).unwrap(), s);
        let bad = SnapshotFile { n: 4, ..s };
        write_json(&p, &bad).unwrap();
        assert!(matches!(read_snapshot(&p), Err(Error::Usage(_))));
        fs::write(&p, "{").unwrap();
        assert!(matches!(read_snapshot(&p), Err(Error::Json(_))));
    }
}

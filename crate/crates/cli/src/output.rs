use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

pub const TIMESERIES_HEADER: &str = "t,S_h,I_h,R_h,S_v,I_v,D,u";
pub const ADJOINT_HEADER: &str = "t,p1,p2,p3,p4,p5";

/// One row of `timeseries.csv`; `r_h` is `None` for rescaled runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub t: f64,
    pub s_h: f64,
    pub i_h: f64,
    pub r_h: Option<f64>,
    pub s_v: f64,
    pub i_v: f64,
    pub d: f64,
    pub u: f64,
}

/// 17 significant digits, `.` as decimal point, no grouping.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn timeseries_csv(rows: &[Row]) -> String {
    let mut out = String::with_capacity(rows.len() * 200);
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for r in rows {
        let r_h = r.r_h.map(num).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            num(r.t),
            num(r.s_h),
            num(r.i_h),
            r_h,
            num(r.s_v),
            num(r.i_v),
            num(r.d),
            num(r.u)
        );
    }
    out
}

pub fn adjoint_csv(times: &[f64], p: &[[f64; 5]]) -> String {
    let mut out = String::with_capacity(times.len() * 130);
    out.push_str(ADJOINT_HEADER);
    out.push('\n');
    for (t, pi) in times.iter().zip(p) {
        let cols: Vec<String> = std::iter::once(*t).chain(pi.iter().copied()).map(num).collect();
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_text(dir, name, &text)
}

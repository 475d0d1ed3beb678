//! CSV writers with a locale-free, platform-stable numeric format.

use crate::fem::SolveReport;
use std::io::{self, Write};

/// Formats with 9 significant digits, switching to scientific notation below
/// 1e-3 in magnitude. Output never depends on locale, so repeated runs are
/// byte-identical.
pub fn fmt_g9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let a = x.abs();
    if a < 1e-3 {
        format!("{x:.8e}")
    } else {
        let mag = a.log10().floor() as i32;
        let decimals = (8 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    }
}

/// Writes the force-displacement history, one row per accepted step.
pub fn write_force_csv<W: Write>(report: &SolveReport, mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "step,time_s,displacement_mm,force_N,newton_iters,staggered_iters"
    )?;
    for row in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.step,
            fmt_g9(row.time_s),
            fmt_g9(row.displacement_mm),
            fmt_g9(row.force_n),
            row.newton_iters,
            row.staggered_iters
        )?;
    }
    Ok(())
}

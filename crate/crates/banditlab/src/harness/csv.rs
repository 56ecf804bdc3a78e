//! Trajectory CSV emission.
//!
//! Fixed header, rows in t order, floats printed with 12 significant
//! digits. Everything is plain decimal formatting, so the same records
//! always produce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::harness::HarnessError;
use crate::regret::TrajectoryRecord;

pub const CSV_HEADER: &str = "t,regret_total,regret_explore,regret_exploit,regret_comm,epoch,bound";

/// Write records as CSV to any sink.
pub fn write_csv<W: Write>(records: &[TrajectoryRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.t,
            format_sig12(r.total),
            format_sig12(r.explore),
            format_sig12(r.exploit),
            format_sig12(r.comm),
            r.epoch,
            r.bound.map(format_sig12).unwrap_or_default(),
        )?;
    }
    Ok(())
}

/// Write records to a file, surfacing failures with the path attached.
pub fn emit_csv(records: &[TrajectoryRecord], path: &Path) -> Result<(), HarnessError> {
    let wrap = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(wrap)?;
    let mut writer = BufWriter::new(file);
    write_csv(records, &mut writer).map_err(wrap)?;
    writer.flush().map_err(wrap)
}

/// Decimal with 12 significant digits; trailing zeros trimmed, scientific
/// notation only outside [1e-4, 1e12).
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-4..12).contains(&magnitude) {
        let decimals = (11 - magnitude).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let trimmed = s.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    } else {
        format!("{x:.11e}")
    }
}

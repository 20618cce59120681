//! Deformation paths as CSV.

use super::{format_g, IoError};
use crate::framework::Framework;
use crate::snap::DeformationPath;

const AXES: [&str; 3] = ["x", "y", "z"];

/// One row per sample: `t, U, density` and every knot coordinate, with 12
/// significant digits.
pub fn export_trajectory(fw: &Framework, path: &DeformationPath) -> Result<String, IoError> {
    if path.samples.len() < 2 {
        return Err(IoError::EmptyPath);
    }
    let n = fw.dimension();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string(), "U".to_string(), "density".to_string()];
    for id in fw.knot_ids() {
        header.extend(AXES[..n].iter().map(|a| format!("{id}_{a}")));
    }
    w.write_record(&header).map_err(|e| IoError::Csv(e.to_string()))?;
    for s in &path.samples {
        let mut row = vec![format_g(s.t, 12), format_g(s.energy, 12), format_g(s.density, 12)];
        row.extend(s.realization.coords().iter().map(|v| format_g(*v, 12)));
        w.write_record(&row).map_err(|e| IoError::Csv(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

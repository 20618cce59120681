//! Framework documents, reports, trajectory CSV and SVG rendering.

pub mod document;
pub mod report;
pub mod svg;
pub mod trajectory;

use thiserror::Error;

pub use document::{parse_framework, EdgeEntry, FrameworkDocument, KnotEntry, MaterialEntry};
pub use report::{emit_report, parse_report, ReportDocument, ReportFormat, SnapValue};
pub use svg::{knot_trajectories, render_svg, SvgStyle, Trajectory};
pub use trajectory::export_trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    /// Well-formed JSON that violates the document schema.
    #[error("invalid document at line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("invalid framework: {0}")]
    Semantic(String),
    #[error("trajectory needs at least two samples")]
    EmptyPath,
    #[error("rendering supports only planar frameworks, got dimension {0}")]
    UnsupportedDimension(usize),
    #[error("csv: {0}")]
    Csv(String),
}

impl IoError {
    fn from_json(e: serde_json::Error) -> Self {
        let (line, column, message) = (e.line(), e.column(), e.to_string());
        match e.classify() {
            serde_json::error::Category::Data => IoError::Schema { line, column, message },
            _ => IoError::Syntax { line, column, message },
        }
    }
}

/// `%g`-style formatting with `digits` significant digits.
pub(crate) fn format_g(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let s = format!("{:.*e}", digits - 1, v);
    // rounding may bump the exponent, so read it back
    let (mant, e) = s.split_once('e').expect("exponent form");
    let e: i32 = e.parse().expect("integer exponent");
    if e < -4 || e >= digits as i32 {
        let mant = trim_zeros(mant);
        format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
    } else {
        let decimals = (digits as i32 - 1 - e).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

//! Catalog and snappability reports as JSON or aligned text.

use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{format_g, IoError};
use crate::critical::{Classification, CriticalPoint, RealizationCatalog, SolverStats};
use crate::framework::{Framework, Realization};
use crate::snap::{AttemptOutcome, PathStatus, RelaxEvidence, RelaxationResult, RelaxedKind, SnappabilityReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

/// A snappability index; `∞` is written as the string `"infinity"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapValue(pub f64);

impl Serialize for SnapValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() && self.0 > 0.0 {
            s.serialize_str("infinity")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for SnapValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(SnapValue(v)),
            Raw::Str(s) if s == "infinity" => Ok(SnapValue(f64::INFINITY)),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"infinity\", got \"{s}\""))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenSummary {
    pub min: f64,
    pub max: f64,
    pub negative: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationRecord {
    pub name: String,
    pub classification: Classification,
    /// One coordinate vector per knot, in knot order.
    pub coordinates: Vec<Vec<f64>>,
    pub lengths: Vec<f64>,
    pub energy: f64,
    pub density: f64,
    pub eigenvalues: EigenSummary,
    pub gradient_norm: f64,
    pub self_stress_norm: f64,
    pub hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttemptRecord {
    pub saddle: String,
    pub outcome: AttemptOutcome,
    pub degenerate: bool,
    pub status: Option<PathStatus>,
    /// Last parameter value reached by the path.
    pub reached_t: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxedRecord {
    pub classification: RelaxedKind,
    pub coordinates: Vec<Vec<f64>>,
    pub evidence: RelaxEvidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationRecord {
    pub gradient_flow: Option<RelaxedRecord>,
    pub continuation: Option<RelaxedRecord>,
    pub continuation_status: Option<PathStatus>,
    pub boundary_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexRecord {
    pub stable: String,
    pub index: SnapValue,
    pub saddle: Option<String>,
    pub attempts: Vec<AttemptRecord>,
    pub path_status: Option<PathStatus>,
    pub relaxation: Option<RelaxationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnappabilitySection {
    pub framework_index: Option<SnapValue>,
    pub entries: Vec<IndexRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub dimension: usize,
    pub knots: Vec<String>,
    pub area: f64,
    pub total_length: f64,
    pub solver: SolverStats,
    pub stable: Vec<RealizationRecord>,
    pub unstable: Vec<RealizationRecord>,
    pub snappability: Option<SnappabilitySection>,
}

fn knots_of(r: &Realization) -> Vec<Vec<f64>> {
    r.knots()
}

fn record(name: String, p: &CriticalPoint) -> RealizationRecord {
    let eig = &p.hessian_eigenvalues;
    let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    RealizationRecord {
        name,
        classification: p.classification,
        coordinates: knots_of(&p.realization),
        lengths: p.lengths.0.clone(),
        energy: p.energy,
        density: p.density,
        eigenvalues: EigenSummary {
            min: eig.first().copied().unwrap_or(0.0),
            max: eig.last().copied().unwrap_or(0.0),
            negative: eig.iter().filter(|&&v| v < -1e-8 * scale).count(),
            values: eig.clone(),
        },
        gradient_norm: p.gradient_norm,
        self_stress_norm: p.self_stress.norm(),
        hits: p.hits,
    }
}

fn relaxed(r: &RelaxationResult) -> RelaxedRecord {
    RelaxedRecord { classification: r.classification, coordinates: knots_of(&r.realization), evidence: r.evidence }
}

fn stable_name(k: usize) -> String {
    format!("S{}", k + 1)
}

fn unstable_name(k: usize) -> String {
    format!("U{}", k + 1)
}

impl ReportDocument {
    pub fn build(fw: &Framework, catalog: &RealizationCatalog, snap: Option<&SnappabilityReport>) -> Self {
        let snappability = snap.map(|rep| SnappabilitySection {
            framework_index: rep.framework_index.map(SnapValue),
            entries: rep
                .entries
                .iter()
                .map(|e| IndexRecord {
                    stable: stable_name(e.stable),
                    index: SnapValue(e.index),
                    saddle: e.saddle.map(unstable_name),
                    attempts: e
                        .attempts
                        .iter()
                        .map(|a| AttemptRecord {
                            saddle: unstable_name(a.saddle),
                            outcome: a.outcome,
                            degenerate: a.degenerate,
                            status: a.path.as_ref().map(|p| p.status),
                            reached_t: a.path.as_ref().and_then(|p| p.samples.last()).map(|s| s.t),
                            error: a.error.clone(),
                        })
                        .collect(),
                    path_status: e.path.as_ref().map(|p| p.status),
                    relaxation: e.relaxation.as_ref().map(|r| RelaxationRecord {
                        gradient_flow: r.gradient_flow.as_ref().map(relaxed),
                        continuation: r.continuation.as_ref().map(relaxed),
                        continuation_status: r.continuation_path.as_ref().map(|p| p.status),
                        boundary_t: r.continuation_path.as_ref().and_then(|p| p.boundary.as_ref()).map(|b| b.t),
                    }),
                })
                .collect(),
        });
        ReportDocument {
            dimension: fw.dimension(),
            knots: fw.knot_ids().to_vec(),
            area: fw.material().area,
            total_length: fw.total_length(),
            solver: catalog.stats,
            stable: catalog.stable.iter().enumerate().map(|(k, p)| record(stable_name(k), p)).collect(),
            unstable: catalog.unstable.iter().enumerate().map(|(k, p)| record(unstable_name(k), p)).collect(),
            snappability,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "framework: dimension {}, {} knots, A = {}, L = {}",
            self.dimension,
            self.knots.len(),
            format_g(self.area, 12),
            format_g(self.total_length, 12)
        );
        let st = &self.solver;
        let _ = writeln!(
            out,
            "solver: {} paths ({} diverged, {} failed), {} multistart starts, {} endpoints, {} duplicates",
            st.paths_tracked, st.paths_diverged, st.path_failures, st.multistart_starts, st.endpoints, st.duplicates
        );
        for (title, list) in [("stable", &self.stable), ("unstable", &self.unstable)] {
            let _ = writeln!(out, "\n{title} realizations: {}", list.len());
            let _ = writeln!(
                out,
                "{:<6} {:<20} {:>16} {:>16} {:>12}  coordinates",
                "name", "class", "energy", "density", "min eig"
            );
            for r in list {
                let coords: Vec<String> = r
                    .coordinates
                    .iter()
                    .map(|k| format!("({})", k.iter().map(|v| format_g(*v, 8)).collect::<Vec<_>>().join(", ")))
                    .collect();
                let class = serde_json::to_value(r.classification).expect("enum serializes");
                let _ = writeln!(
                    out,
                    "{:<6} {:<20} {:>16} {:>16} {:>12}  {}",
                    r.name,
                    class.as_str().unwrap_or(""),
                    format_g(r.energy, 10),
                    format_g(r.density, 10),
                    format_g(r.eigenvalues.min, 4),
                    coords.join(" ")
                );
            }
        }
        if let Some(s) = &self.snappability {
            let _ = writeln!(out, "\nsnappability");
            let _ = writeln!(out, "{:<6} {:>16} {:<8} attempts", "stable", "index", "saddle");
            for e in &s.entries {
                let _ = writeln!(
                    out,
                    "{:<6} {:>16} {:<8} {}",
                    e.stable,
                    value_text(e.index),
                    e.saddle.as_deref().unwrap_or("-"),
                    e.attempts.len()
                );
            }
            let fi = s.framework_index.map_or_else(|| "none".to_string(), value_text);
            let _ = writeln!(out, "framework index: {fi}");
        }
        out
    }
}

fn value_text(v: SnapValue) -> String {
    if v.0.is_infinite() {
        "infinity".into()
    } else {
        format_g(v.0, 10)
    }
}

/// Serializes a catalog and optional snappability report.
pub fn emit_report(
    fw: &Framework,
    catalog: &RealizationCatalog,
    snap: Option<&SnappabilityReport>,
    format: ReportFormat,
) -> String {
    let doc = ReportDocument::build(fw, catalog, snap);
    match format {
        ReportFormat::Json => doc.to_json(),
        ReportFormat::Text => doc.to_text(),
    }
}

pub fn parse_report(text: &str) -> Result<ReportDocument, IoError> {
    serde_json::from_str(text).map_err(IoError::from_json)
}

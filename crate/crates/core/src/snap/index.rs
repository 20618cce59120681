//! Snappability of stable realizations: the lowest saddle that a straight
//! length segment actually reaches.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::relax::{relax, RelaxConfig, RelaxationReport};
use super::track::{track_segment, BranchHint, DeformationPath, PathStatus, Segment, TrackConfig, TrackMode};
use super::SnapError;
use crate::critical::{Classification, RealizationCatalog, Tolerances};
use crate::framework::{congruent_mod_se, Framework};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttemptOutcome {
    Accepted,
    /// The saddle lies no higher than the start.
    EnergyBelowStart,
    Unreachable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleAttempt {
    /// Index into the catalog's unstable list.
    pub saddle: usize,
    pub outcome: AttemptOutcome,
    pub degenerate: bool,
    pub path: Option<DeformationPath>,
    /// Tracker error, if tracking aborted.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapIndex {
    /// Index into the catalog's stable list.
    pub stable: usize,
    /// `|ΔU|/(A·L)` for the accepted saddle, `∞` if none is reachable.
    pub index: f64,
    pub saddle: Option<usize>,
    pub attempts: Vec<SaddleAttempt>,
    pub path: Option<DeformationPath>,
    pub relaxation: Option<RelaxationReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnappabilityReport {
    pub entries: Vec<SnapIndex>,
    /// Minimum over undeformed stable realizations; `None` if there is none.
    pub framework_index: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapConfig {
    pub track: TrackConfig,
    pub tolerances: Tolerances,
    /// Terminal-to-saddle congruence tolerance.
    pub congruence_tol: f64,
    pub workers: usize,
    /// Relax from each accepted saddle.
    pub relax: bool,
    pub relax_config: RelaxConfig,
}

impl Default for SnapConfig {
    fn default() -> Self {
        SnapConfig {
            track: TrackConfig::default(),
            tolerances: Tolerances::default(),
            congruence_tol: 1e-6,
            workers: 0,
            relax: true,
            relax_config: RelaxConfig::default(),
        }
    }
}

/// Unstable entries by ascending energy, degenerate ones last.
fn candidate_order(catalog: &RealizationCatalog) -> Vec<usize> {
    let mut order: Vec<usize> = (0..catalog.unstable.len()).collect();
    order.sort_by_key(|&k| (catalog.unstable[k].classification == Classification::DegenerateDeformed, k));
    order
}

fn attempt(
    fw: &Framework,
    catalog: &RealizationCatalog,
    stable: usize,
    saddle: usize,
    config: &SnapConfig,
) -> SaddleAttempt {
    let start = &catalog.stable[stable];
    let target = &catalog.unstable[saddle];
    let degenerate = target.classification == Classification::DegenerateDeformed;
    if target.energy <= start.energy + config.tolerances.energy_abs(fw) {
        return SaddleAttempt {
            saddle,
            outcome: AttemptOutcome::EnergyBelowStart,
            degenerate,
            path: None,
            error: None,
        };
    }
    let segment = Segment::new(start.lengths.clone(), target.lengths.clone());
    let track = TrackConfig { hint: BranchHint::Toward(target.realization.clone()), ..config.track.clone() };
    match track_segment(fw, &start.realization, &segment, TrackMode::Forward, &track) {
        Ok(path) => {
            let reached = path.status == PathStatus::ReachedTarget
                && congruent_mod_se(fw, &path.terminal, &target.realization, config.congruence_tol);
            let outcome = if reached { AttemptOutcome::Accepted } else { AttemptOutcome::Unreachable };
            SaddleAttempt { saddle, outcome, degenerate, path: Some(path), error: None }
        }
        Err(e) => SaddleAttempt {
            saddle,
            outcome: AttemptOutcome::Unreachable,
            degenerate,
            path: None,
            error: Some(e.to_string()),
        },
    }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, SnapError> {
    if workers == 0 {
        return Ok(f());
    }
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| SnapError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Snappability index of `catalog.stable[stable]`.
pub fn snappability_index(
    fw: &Framework,
    catalog: &RealizationCatalog,
    stable: usize,
    config: &SnapConfig,
) -> Result<SnapIndex, SnapError> {
    if stable >= catalog.stable.len() {
        return Err(SnapError::NotStable(stable));
    }
    let order = candidate_order(catalog);
    let attempts: Vec<SaddleAttempt> =
        with_pool(config.workers, || order.par_iter().map(|&k| attempt(fw, catalog, stable, k, config)).collect())?;
    let mut ledger = Vec::new();
    let mut accepted = None;
    for a in attempts {
        let done = a.outcome == AttemptOutcome::Accepted;
        ledger.push(a);
        if done {
            accepted = Some(ledger.len() - 1);
            break;
        }
    }
    let start = &catalog.stable[stable];
    let Some(pos) = accepted else {
        return Ok(SnapIndex {
            stable,
            index: f64::INFINITY,
            saddle: None,
            attempts: ledger,
            path: None,
            relaxation: None,
        });
    };
    let saddle = ledger[pos].saddle;
    let target = &catalog.unstable[saddle];
    let path = ledger[pos].path.clone();
    let index = (target.energy - start.energy).abs() / (fw.material().area * fw.total_length());
    let relaxation = match (&path, config.relax, target.classification) {
        (Some(p), true, Classification::Saddle) => {
            // the incoming direction: last sample before the saddle
            let basin = p.samples.iter().rev().nth(1).map_or(&start.realization, |s| &s.realization);
            Some(relax(fw, target, basin, &config.relax_config)?)
        }
        _ => None,
    };
    Ok(SnapIndex { stable, index, saddle: Some(saddle), attempts: ledger, path, relaxation })
}

/// Indices of every stable realization and their minimum over the
/// undeformed ones.
pub fn snappability_report(
    fw: &Framework,
    catalog: &RealizationCatalog,
    config: &SnapConfig,
) -> Result<SnappabilityReport, SnapError> {
    let entries =
        (0..catalog.stable.len()).map(|k| snappability_index(fw, catalog, k, config)).collect::<Result<Vec<_>, _>>()?;
    let framework_index = entries
        .iter()
        .filter(|e| catalog.stable[e.stable].classification == Classification::StableUndeformed)
        .map(|e| e.index)
        .reduce(f64::min);
    Ok(SnappabilityReport { entries, framework_index })
}

/// Minimum snappability index over the undeformed stable realizations.
pub fn framework_snappability(
    fw: &Framework,
    catalog: &RealizationCatalog,
    config: &SnapConfig,
) -> Result<f64, SnapError> {
    let config = SnapConfig { relax: false, ..config.clone() };
    let mut best: Option<f64> = None;
    for (k, p) in catalog.stable.iter().enumerate() {
        if p.classification == Classification::StableUndeformed {
            let s = snappability_index(fw, catalog, k, &config)?.index;
            best = Some(best.map_or(s, |b| b.min(s)));
        }
    }
    best.ok_or(SnapError::NoUndeformedRealization)
}

//! Where a framework goes after passing a saddle.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::track::{track_segment, BranchHint, DeformationPath, PathStatus, Segment, TrackConfig, TrackMode};
use super::SnapError;
use crate::critical::{CriticalPoint, Tolerances};
use crate::energy::{energy_density, energy_gradient, energy_hessian, realization_energy, self_stress};
use crate::framework::{Framework, GaugeChart, Realization};
use crate::rigidity::{length_jacobian, singular_data};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelaxedKind {
    Undeformed,
    DeformedShaky,
    BoundaryOfReality,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxEvidence {
    pub energy: f64,
    pub density: f64,
    pub gradient_norm: f64,
    pub self_stress_norm: f64,
    pub self_stress_residual: f64,
    pub jacobian_sigma_min: f64,
    pub hessian_min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationResult {
    pub realization: Realization,
    pub classification: RelaxedKind,
    pub evidence: RelaxEvidence,
}

/// Outcomes of both relaxation strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationReport {
    /// Energy descent from the saddle; `None` if it did not converge.
    pub gradient_flow: Option<RelaxationResult>,
    /// Segment continuation towards the rest lengths; `None` if the tracker
    /// gave up without reaching either end or a fold.
    pub continuation: Option<RelaxationResult>,
    pub continuation_path: Option<DeformationPath>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxConfig {
    /// Initial displacement along the unstable direction, relative to
    /// `1 + ‖x‖∞`.
    pub perturbation: f64,
    /// Target `‖∇U‖`, relative to `E·A`.
    pub gradient_tol: f64,
    pub max_iters: usize,
    pub track: TrackConfig,
    pub tolerances: Tolerances,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        RelaxConfig {
            perturbation: 1e-3,
            gradient_tol: 1e-9,
            max_iters: 5000,
            track: TrackConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

fn evidence(fw: &Framework, chart: &GaugeChart, r: &Realization) -> Result<RelaxEvidence, SnapError> {
    let energy = realization_energy(fw, r)?.total;
    let stress = self_stress(fw, r)?;
    let j = length_jacobian(fw, chart, r, &fw.deformable_edges());
    let hess = energy_hessian(fw, chart, r)?;
    Ok(RelaxEvidence {
        energy,
        density: energy_density(fw, energy),
        gradient_norm: energy_gradient(fw, chart, r)?.norm(),
        self_stress_norm: stress.norm(),
        self_stress_residual: stress.equilibrium_residual,
        jacobian_sigma_min: singular_data(&j).sigma_min,
        hessian_min_eigenvalue: hess.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min),
    })
}

fn energy_at(fw: &Framework, chart: &GaugeChart, x: &DVector<f64>) -> f64 {
    realization_energy(fw, &chart.embed(x.as_slice())).map_or(f64::INFINITY, |p| p.total)
}

/// Descent with `|H|⁻¹`-scaled steps (Newton in convex regions, escapes
/// along negative curvature otherwise) and Armijo backtracking.
fn descend(
    fw: &Framework,
    chart: &GaugeChart,
    mut x: DVector<f64>,
    config: &RelaxConfig,
) -> Result<Option<DVector<f64>>, SnapError> {
    let tol = config.gradient_tol * fw.material().stiffness();
    let mut u = energy_at(fw, chart, &x);
    for _ in 0..config.max_iters {
        let r = chart.embed(x.as_slice());
        let g = energy_gradient(fw, chart, &r)?;
        if g.norm() <= tol {
            return Ok(Some(x));
        }
        let eig = energy_hessian(fw, chart, &r)?.symmetric_eigen();
        let floor = 1e-8 * eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
        let mut dir = DVector::zeros(x.len());
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            dir -= v * (v.dot(&g) / lam.abs().max(floor));
        }
        let slope = dir.dot(&g);
        if slope.is_nan() || slope >= 0.0 {
            dir = -&g;
        }
        let slope = dir.dot(&g);
        let mut s = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial = &x + &dir * s;
            let ut = energy_at(fw, chart, &trial);
            if ut <= u + 1e-4 * s * slope {
                x = trial;
                u = ut;
                moved = true;
                break;
            }
            s *= 0.5;
        }
        if !moved {
            // no further decrease representable; accept if already stationary enough
            let g = energy_gradient(fw, chart, &chart.embed(x.as_slice()))?;
            return Ok((g.norm() <= 1e3 * tol).then_some(x));
        }
    }
    Ok(None)
}

/// Relaxes a saddle away from the basin it was reached from, by energy
/// descent and by continuing the length segment towards the rest lengths.
pub fn relax(
    fw: &Framework,
    saddle: &CriticalPoint,
    basin: &Realization,
    config: &RelaxConfig,
) -> Result<RelaxationReport, SnapError> {
    let chart = fw.gauge_chart()?;
    let r0 = &saddle.realization;
    let x0 = DVector::from_vec(chart.reduce(r0)?);
    let hess = energy_hessian(fw, &chart, r0)?;
    let eig = hess.symmetric_eigen();
    let scale = eig.eigenvalues.amax();
    let (k, &lmin) =
        eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).ok_or(SnapError::NotASaddle)?;
    if lmin >= -config.tolerances.eigen * scale {
        return Err(SnapError::NotASaddle);
    }
    let xb = DVector::from_vec(chart.reduce(basin)?);
    let mut e = eig.eigenvectors.column(k).into_owned();
    if e.dot(&(&x0 - &xb)) < 0.0 {
        e = -e;
    }
    let start = &x0 + e * (config.perturbation * (1.0 + x0.amax()));
    let energy_tol = config.tolerances.energy_abs(fw);

    let gradient_flow = match descend(fw, &chart, start, config)? {
        Some(x) => {
            let r = chart.embed(x.as_slice());
            let ev = evidence(fw, &chart, &r)?;
            let classification =
                if ev.energy < energy_tol { RelaxedKind::Undeformed } else { RelaxedKind::DeformedShaky };
            Some(RelaxationResult { realization: r, classification, evidence: ev })
        }
        None => None,
    };

    let segment = Segment::new(saddle.lengths.clone(), fw.rest_lengths());
    let track = TrackConfig { hint: BranchHint::AwayFrom(basin.clone()), ..config.track.clone() };
    let path = track_segment(fw, r0, &segment, TrackMode::Continue, &track)?;
    let continuation = match path.status {
        PathStatus::ReachedTarget => Some(RelaxedKind::Undeformed),
        PathStatus::BoundaryOfReality => Some(RelaxedKind::BoundaryOfReality),
        _ => None,
    }
    .map(|classification| -> Result<RelaxationResult, SnapError> {
        Ok(RelaxationResult {
            evidence: evidence(fw, &chart, &path.terminal)?,
            realization: path.terminal.clone(),
            classification,
        })
    })
    .transpose()?;
    Ok(RelaxationReport { gradient_flow, continuation, continuation_path: Some(path) })
}

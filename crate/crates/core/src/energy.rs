//! Hooke-law bar mechanics: strains, forces, strain energy and its
//! derivatives in free coordinates, the P-metric on edge-length space, and
//! force-density self-stresses.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::framework::{distance, EdgeLengthVector, Framework, GaugeChart, Realization};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("lengths must be positive (got l = {l}, L = {rest})")]
    NonPositiveLength { l: f64, rest: f64 },
    #[error("knots {0} and {1} coincide on a shared bar")]
    ZeroEdgeLength(usize, usize),
    #[error("vector of length {got} does not match {expected} edges")]
    DimensionMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Framework(#[from] crate::framework::FrameworkError),
}

/// Engineering strain `(l − L)/L`.
pub fn strain(l: f64, rest: f64) -> Result<f64, EnergyError> {
    if !(l > 0.0 && rest > 0.0) {
        return Err(EnergyError::NonPositiveLength { l, rest });
    }
    Ok((l - rest) / rest)
}

/// Axial force `E·A·(l − L)/L`; positive values stretch the bar.
pub fn bar_force(l: f64, rest: f64, youngs: f64, area: f64) -> Result<f64, EnergyError> {
    Ok(youngs * area * strain(l, rest)?)
}

/// Per-bar mechanics and the total strain energy.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile {
    pub per_bar: Vec<f64>,
    pub total: f64,
    pub strains: Vec<f64>,
    pub stresses: Vec<f64>,
    pub forces: Vec<f64>,
}

/// `U = ½ Σ (E·A/L_ij)(l_ij − L_ij)²`; bars between pinned knots contribute 0.
pub fn total_energy(fw: &Framework, lengths: &EdgeLengthVector) -> Result<EnergyProfile, EnergyError> {
    check_len(lengths.len(), fw.edge_count())?;
    let m = fw.material();
    let b = fw.edge_count();
    let mut p = EnergyProfile {
        per_bar: vec![0.0; b],
        total: 0.0,
        strains: vec![0.0; b],
        stresses: vec![0.0; b],
        forces: vec![0.0; b],
    };
    for (k, (e, &l)) in fw.edges().iter().zip(lengths.as_slice()).enumerate() {
        let eps = strain(l, e.rest_length)?;
        if !fw.is_deformable(k) {
            continue;
        }
        p.strains[k] = eps;
        p.stresses[k] = m.youngs_modulus * eps;
        p.forces[k] = p.stresses[k] * m.area;
        p.per_bar[k] = 0.5 * p.forces[k] * (l - e.rest_length);
    }
    p.total = p.per_bar.iter().sum();
    Ok(p)
}

pub fn realization_energy(fw: &Framework, r: &Realization) -> Result<EnergyProfile, EnergyError> {
    total_energy(fw, &fw.edge_lengths(r))
}

/// Elastic strain energy density `U/(A·L)` with `L` summed over every edge.
pub fn energy_density(fw: &Framework, energy: f64) -> f64 {
    energy / (fw.material().area * fw.total_length())
}

fn check_len(got: usize, expected: usize) -> Result<(), EnergyError> {
    if got != expected {
        return Err(EnergyError::DimensionMismatch { got, expected });
    }
    Ok(())
}

/// Gradient of `U` with respect to the free coordinates of `chart`.
pub fn energy_gradient(fw: &Framework, chart: &GaugeChart, r: &Realization) -> Result<DVector<f64>, EnergyError> {
    let n = fw.dimension();
    let slots = chart.slot_table();
    let stiff = fw.material().stiffness();
    let mut g = DVector::zeros(chart.len());
    for (k, e) in fw.edges().iter().enumerate() {
        if !fw.is_deformable(k) {
            continue;
        }
        let (ki, kj) = (r.knot(e.i), r.knot(e.j));
        let l = distance(ki, kj);
        if l == 0.0 {
            return Err(EnergyError::ZeroEdgeLength(e.i + 1, e.j + 1));
        }
        let coef = stiff / e.rest_length * (l - e.rest_length) / l;
        for a in 0..n {
            let d = coef * (ki[a] - kj[a]);
            if let Some(s) = slots[e.i * n + a] {
                g[s] += d;
            }
            if let Some(s) = slots[e.j * n + a] {
                g[s] -= d;
            }
        }
    }
    Ok(g)
}

/// Analytic Hessian of `U` in free coordinates.
pub fn energy_hessian(fw: &Framework, chart: &GaugeChart, r: &Realization) -> Result<DMatrix<f64>, EnergyError> {
    let n = fw.dimension();
    let slots = chart.slot_table();
    let stiff = fw.material().stiffness();
    let mut h = DMatrix::zeros(chart.len(), chart.len());
    for (k, e) in fw.edges().iter().enumerate() {
        if !fw.is_deformable(k) {
            continue;
        }
        let (ki, kj) = (r.knot(e.i), r.knot(e.j));
        let l = distance(ki, kj);
        if l == 0.0 {
            return Err(EnergyError::ZeroEdgeLength(e.i + 1, e.j + 1));
        }
        let c = stiff / e.rest_length;
        let d: Vec<f64> = (0..n).map(|a| ki[a] - kj[a]).collect();
        // block = c[(1 − L/l) I + (L/l) d dᵀ/l²]
        let iso = c * (1.0 - e.rest_length / l);
        let aniso = c * e.rest_length / (l * l * l);
        for a in 0..n {
            for bb in 0..n {
                let v = aniso * d[a] * d[bb] + if a == bb { iso } else { 0.0 };
                let (ia, ib) = (slots[e.i * n + a], slots[e.i * n + bb]);
                let (ja, jb) = (slots[e.j * n + a], slots[e.j * n + bb]);
                if let (Some(x), Some(y)) = (ia, ib) {
                    h[(x, y)] += v;
                }
                if let (Some(x), Some(y)) = (ja, jb) {
                    h[(x, y)] += v;
                }
                if let (Some(x), Some(y)) = (ia, jb) {
                    h[(x, y)] -= v;
                }
                if let (Some(x), Some(y)) = (ja, ib) {
                    h[(x, y)] -= v;
                }
            }
        }
    }
    Ok(h)
}

/// Diagonal metric `P = diag(E·A/(2 L_ij))` on edge-length space.
#[derive(Debug, Clone, PartialEq)]
pub struct PMetric {
    weights: Vec<f64>,
}

impl PMetric {
    pub fn new(fw: &Framework) -> Self {
        let k = fw.material().stiffness();
        PMetric { weights: fw.edges().iter().map(|e| k / (2.0 * e.rest_length)).collect() }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> Result<f64, EnergyError> {
        check_len(x.len(), self.weights.len())?;
        check_len(y.len(), self.weights.len())?;
        Ok(self.weights.iter().zip(x).zip(y).map(|((w, a), b)| w * a * b).sum())
    }

    pub fn norm(&self, x: &[f64]) -> Result<f64, EnergyError> {
        Ok(self.inner(x, x)?.sqrt())
    }
}

/// `d_P(x, y) = ‖x − y‖_P`.
pub fn p_distance(p: &PMetric, x: &EdgeLengthVector, y: &EdgeLengthVector) -> Result<f64, EnergyError> {
    check_len(x.len(), p.weights.len())?;
    check_len(y.len(), p.weights.len())?;
    let diff: Vec<f64> = x.0.iter().zip(&y.0).map(|(a, b)| a - b).collect();
    p.norm(&diff)
}

/// `d_S(l1, l2) = |d_P(l2, L)² − d_P(l1, L)²|`; vanishes between distinct
/// deformations of equal energy.
pub fn snappability_pseudometric(
    p: &PMetric,
    rest: &EdgeLengthVector,
    l1: &EdgeLengthVector,
    l2: &EdgeLengthVector,
) -> Result<f64, EnergyError> {
    let a = p_distance(p, l2, rest)?;
    let b = p_distance(p, l1, rest)?;
    Ok((a * a - b * b).abs())
}

/// Force densities `ω_ij = F_ij / l_ij` and how well they balance at the
/// free knots.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfStress {
    pub omega: Vec<f64>,
    /// Max over unpinned knots of `‖Σ_j ω_ij (k_i − k_j)‖`.
    pub equilibrium_residual: f64,
}

impl SelfStress {
    pub fn norm(&self) -> f64 {
        self.omega.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

pub fn self_stress(fw: &Framework, r: &Realization) -> Result<SelfStress, EnergyError> {
    let n = fw.dimension();
    let lengths = fw.edge_lengths(r);
    let profile = total_energy(fw, &lengths).map_err(|err| match err {
        EnergyError::NonPositiveLength { .. } => zero_edge(fw, &lengths),
        other => other,
    })?;
    let omega: Vec<f64> = profile.forces.iter().zip(&lengths.0).map(|(f, l)| f / l).collect();
    let mut sums = vec![0.0; fw.knot_count() * n];
    for (e, w) in fw.edges().iter().zip(&omega) {
        for a in 0..n {
            let d = w * (r.knot(e.i)[a] - r.knot(e.j)[a]);
            sums[e.i * n + a] += d;
            sums[e.j * n + a] -= d;
        }
    }
    let equilibrium_residual = (0..fw.knot_count())
        .filter(|k| !fw.is_pinned(*k))
        .map(|k| sums[k * n..(k + 1) * n].iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    Ok(SelfStress { omega, equilibrium_residual })
}

fn zero_edge(fw: &Framework, lengths: &EdgeLengthVector) -> EnergyError {
    let e = fw.edges().iter().zip(&lengths.0).find(|(_, l)| **l <= 0.0).map(|(e, _)| *e).unwrap_or(fw.edges()[0]);
    EnergyError::ZeroEdgeLength(e.i + 1, e.j + 1)
}

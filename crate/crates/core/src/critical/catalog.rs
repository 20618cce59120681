//! Turning raw solver endpoints into classified, deduplicated realizations.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::homotopy::{solve_total_degree, HomotopyConfig, SolutionPoint};
use super::lagrange::{assemble_lagrange_system, LagrangeSystem};
use super::multistart::{solve_multistart, MultistartConfig};
use super::SolverError;
use crate::energy::{energy_density, energy_gradient, energy_hessian, realization_energy, self_stress, SelfStress};
use crate::framework::{EdgeLengthVector, Framework, GaugeChart, Realization};
use crate::linalg::solve_real_in_place;
use crate::rigidity::length_jacobian;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    StableUndeformed,
    StableDeformed,
    Saddle,
    DegenerateDeformed,
}

impl Classification {
    pub fn is_stable(self) -> bool {
        matches!(self, Classification::StableUndeformed | Classification::StableDeformed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Max imaginary part (relative to `1 + ‖x‖∞`) of an endpoint counted as real.
    pub real: f64,
    /// Looser realness bound for endpoints flagged singular; these are only
    /// kept if real polishing converges nearby.
    pub real_singular: f64,
    pub positive: f64,
    /// Energies below `energy·A·L` count as undeformed.
    pub energy: f64,
    /// Eigenvalues within `eigen·max|λ|` of zero count as degenerate.
    pub eigen: f64,
    /// Max-norm distance in gauge coordinates (relative to `1 + ‖x‖∞`).
    pub dedup: f64,
    /// Accepted `‖∇U‖` after polishing, relative to `E·A`.
    pub gradient: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            real: 1e-8,
            real_singular: 1e-3,
            positive: 1e-8,
            energy: 1e-10,
            eigen: 1e-8,
            dedup: 1e-6,
            gradient: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn energy_abs(&self, fw: &Framework) -> f64 {
        self.energy * fw.material().area * fw.total_length()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    /// Realization in gauge (canonical for unpinned frameworks).
    pub realization: Realization,
    /// Free coordinates of `realization`.
    pub coords: Vec<f64>,
    /// Auxiliary lengths and multipliers per deformable edge.
    pub q: Vec<f64>,
    pub lambda: Vec<f64>,
    pub lengths: EdgeLengthVector,
    pub energy: f64,
    pub density: f64,
    pub hessian_eigenvalues: Vec<f64>,
    pub gradient_norm: f64,
    pub classification: Classification,
    pub self_stress: SelfStress,
    /// Solver endpoints merged into this point.
    pub hits: usize,
}

impl CriticalPoint {
    /// Evaluates every derived quantity at an already polished point.
    pub fn at(fw: &Framework, chart: &GaugeChart, coords: Vec<f64>, tol: &Tolerances) -> Option<Self> {
        let realization = chart.embed(&coords);
        let lengths = fw.edge_lengths(&realization);
        if !lengths.all_positive() {
            return None;
        }
        let profile = realization_energy(fw, &realization).ok()?;
        let gradient_norm = energy_gradient(fw, chart, &realization).ok()?.norm();
        let hess = energy_hessian(fw, chart, &realization).ok()?;
        let mut eig: Vec<f64> = hess.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let stiff = fw.material().stiffness();
        let edges = fw.deformable_edges();
        let q: Vec<f64> = edges.iter().map(|&e| lengths.0[e]).collect();
        let lambda = edges
            .iter()
            .zip(&q)
            .map(|(&e, &q)| {
                let rest = fw.edges()[e].rest_length;
                -stiff * (q - rest) / (2.0 * rest * q)
            })
            .collect();
        let classification = classify(fw, profile.total, &eig, tol);
        Some(CriticalPoint {
            self_stress: self_stress(fw, &realization).ok()?,
            realization,
            coords,
            q,
            lambda,
            lengths,
            energy: profile.total,
            density: energy_density(fw, profile.total),
            hessian_eigenvalues: eig,
            gradient_norm,
            classification,
            hits: 1,
        })
    }

    fn is_degenerate(&self) -> bool {
        let scale = self.hessian_eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.hessian_eigenvalues.iter().any(|v| v.abs() <= 1e-6 * scale)
    }
}

/// Second-derivative test with the undeformed override: `U ≈ 0` is the
/// global minimum whatever the Hessian looks like.
pub fn classify(fw: &Framework, energy: f64, eigenvalues: &[f64], tol: &Tolerances) -> Classification {
    if energy < tol.energy_abs(fw) {
        return Classification::StableUndeformed;
    }
    let scale = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eps = tol.eigen * scale;
    if eigenvalues.iter().any(|&v| v < -eps) {
        Classification::Saddle
    } else if eigenvalues.iter().all(|&v| v > eps) {
        Classification::StableDeformed
    } else {
        Classification::DegenerateDeformed
    }
}

/// Newton on `∇U = 0` in free coordinates, then (for undeformed points)
/// Gauss–Newton on `l = L`, which pins down flat directions far better than
/// the cubic gradient can.
pub fn polish_critical_point(fw: &Framework, chart: &GaugeChart, x0: &[f64], tol: &Tolerances) -> Option<Vec<f64>> {
    let m = chart.len();
    let mut x = x0.to_vec();
    let mut best = (f64::INFINITY, x.clone());
    for _ in 0..100 {
        let r = chart.embed(&x);
        let g = energy_gradient(fw, chart, &r).ok()?;
        let gn = g.norm();
        if gn < best.0 {
            best = (gn, x.clone());
        }
        if gn == 0.0 {
            break;
        }
        let h = energy_hessian(fw, chart, &r).ok()?;
        let mut a: Vec<f64> = h.transpose().as_slice().to_vec();
        let mut step: Vec<f64> = g.iter().map(|v| -v).collect();
        if solve_real_in_place(&mut a, m, &mut step).is_none() {
            let s = h.svd(true, true).solve(&(-g), 1e-14).ok()?;
            step = s.as_slice().to_vec();
        }
        x.iter_mut().zip(&step).for_each(|(a, d)| *a += d);
        let sn = step.iter().map(|v| v * v).sum::<f64>().sqrt();
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !sn.is_finite() {
            break;
        }
        if sn <= 1e-15 * (1.0 + xn) {
            let r = chart.embed(&x);
            let g = energy_gradient(fw, chart, &r).ok()?.norm();
            if g < best.0 {
                best = (g, x.clone());
            }
            break;
        }
    }
    let mut x = best.1;
    let r = chart.embed(&x);
    if realization_energy(fw, &r).ok()?.total < tol.energy_abs(fw) {
        x = refine_undeformed(fw, chart, x);
    }
    Some(x)
}

fn refine_undeformed(fw: &Framework, chart: &GaugeChart, mut x: Vec<f64>) -> Vec<f64> {
    let edges = fw.deformable_edges();
    let rest: Vec<f64> = edges.iter().map(|&e| fw.edges()[e].rest_length).collect();
    let resid = |x: &[f64]| -> (DVector<f64>, Realization) {
        let r = chart.embed(x);
        let l = fw.edge_lengths(&r);
        (DVector::from_iterator(edges.len(), edges.iter().zip(&rest).map(|(&e, &l0)| l.0[e] - l0)), r)
    };
    let (mut res, mut r) = resid(&x);
    for _ in 0..60 {
        let j: DMatrix<f64> = length_jacobian(fw, chart, &r, &edges);
        let Ok(step) = j.svd(true, true).solve(&(-&res), 1e-13) else { break };
        let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
        let (tres, tr) = resid(&trial);
        if tres.norm() >= res.norm() {
            break;
        }
        x = trial;
        res = tres;
        r = tr;
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SolverStats {
    pub paths_tracked: usize,
    pub path_failures: usize,
    pub paths_diverged: usize,
    pub multistart_starts: usize,
    pub endpoints: usize,
    pub complex_discarded: usize,
    pub nonpositive_discarded: usize,
    pub polish_failures: usize,
    /// Real critical points merged into an existing entry.
    pub duplicates: usize,
}

/// Keeps real endpoints with positive `q`, polishes them and evaluates
/// energy, Hessian and classification. Output is deduplicated and sorted.
pub fn filter_realizations(
    fw: &Framework,
    sys: &LagrangeSystem,
    solutions: &[SolutionPoint],
    tol: &Tolerances,
    stats: &mut SolverStats,
) -> Vec<CriticalPoint> {
    let layout = &sys.layout;
    let chart = &layout.chart;
    let grad_tol = tol.gradient * fw.material().stiffness();
    let mut points: Vec<CriticalPoint> = Vec::new();
    for p in solutions {
        stats.endpoints += 1;
        let re = p.real_parts();
        let scale = 1.0 + re.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let imag = p.max_imag();
        let real_ok = imag <= tol.real * scale || (p.singular && imag <= tol.real_singular * scale);
        if !real_ok {
            stats.complex_discarded += 1;
            continue;
        }
        if layout.qs(&re).iter().any(|&q| q < tol.positive) {
            stats.nonpositive_discarded += 1;
            continue;
        }
        let x0 = layout.coords(&re);
        let Some(x) = polish_critical_point(fw, chart, x0, tol) else {
            stats.polish_failures += 1;
            continue;
        };
        let drift = x.iter().zip(x0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let drift_tol = if p.singular { 1e-2 } else { 1e-5 };
        if drift > drift_tol * scale {
            stats.polish_failures += 1;
            continue;
        }
        let Ok(canon) = chart.reduce(&chart.embed(&x)) else {
            stats.polish_failures += 1;
            continue;
        };
        let Some(cp) = CriticalPoint::at(fw, chart, canon, tol) else {
            stats.polish_failures += 1;
            continue;
        };
        if cp.gradient_norm > grad_tol {
            stats.polish_failures += 1;
            continue;
        }
        merge(&mut points, cp, tol, stats);
    }
    sort_points(fw, &mut points, tol);
    points
}

fn merge(points: &mut Vec<CriticalPoint>, cp: CriticalPoint, tol: &Tolerances, stats: &mut SolverStats) {
    let scale = 1.0 + cp.coords.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for existing in points.iter_mut() {
        let radius = if existing.is_degenerate() && cp.is_degenerate() && !cp.classification.is_stable() {
            1e-4
        } else {
            tol.dedup
        } * scale;
        let d = existing.coords.iter().zip(&cp.coords).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if d <= radius {
            existing.hits += cp.hits;
            if cp.gradient_norm < existing.gradient_norm {
                let hits = existing.hits;
                *existing = CriticalPoint { hits, ..cp };
            }
            stats.duplicates += 1;
            return;
        }
    }
    points.push(cp);
}

/// Ascending energy (equal within the energy tolerance), then lexicographic
/// gauge coordinates.
pub(crate) fn sort_points(fw: &Framework, points: &mut [CriticalPoint], tol: &Tolerances) {
    let bin = tol.energy_abs(fw);
    let key = |p: &CriticalPoint| (p.energy / bin).round() as i64;
    points.sort_by(|a, b| {
        key(a).cmp(&key(b)).then_with(|| {
            a.coords
                .iter()
                .zip(&b.coords)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        })
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    TotalDegree,
    Multistart,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogConfig {
    pub backend: Backend,
    pub homotopy: HomotopyConfig,
    pub multistart: MultistartConfig,
    pub tolerances: Tolerances,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig {
            backend: Backend::TotalDegree,
            homotopy: HomotopyConfig::default(),
            multistart: MultistartConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl CatalogConfig {
    /// Sets the seed and worker count of both backends.
    pub fn with_seed_and_workers(mut self, seed: u64, workers: usize) -> Self {
        self.homotopy.seed = seed;
        self.homotopy.workers = workers;
        self.multistart.seed = seed;
        self.multistart.workers = workers;
        self
    }
}

/// Stable realizations `S` and unstable realizations `S^c`, each modulo
/// direct isometries (or exactly, for pinned frameworks).
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationCatalog {
    pub stable: Vec<CriticalPoint>,
    pub unstable: Vec<CriticalPoint>,
    pub stats: SolverStats,
}

impl RealizationCatalog {
    pub fn all(&self) -> impl Iterator<Item = &CriticalPoint> {
        self.stable.iter().chain(&self.unstable)
    }
}

pub fn build_catalog(fw: &Framework, config: &CatalogConfig) -> Result<RealizationCatalog, SolverError> {
    let sys = assemble_lagrange_system(fw)?;
    let mut stats = SolverStats::default();
    let mut endpoints = Vec::new();
    if matches!(config.backend, Backend::TotalDegree | Backend::Both) {
        let run = solve_total_degree(&sys.system, &config.homotopy)?;
        stats.paths_tracked = run.stats.paths;
        stats.path_failures = run.stats.failed;
        stats.paths_diverged = run.stats.diverged;
        endpoints.extend(run.points);
    }
    if matches!(config.backend, Backend::Multistart | Backend::Both) {
        stats.multistart_starts = config.multistart.starts;
        endpoints.extend(solve_multistart(fw, &sys, &config.multistart)?);
    }
    let points = filter_realizations(fw, &sys, &endpoints, &config.tolerances, &mut stats);
    let (stable, unstable) = points.into_iter().partition(|p| p.classification.is_stable());
    Ok(RealizationCatalog { stable, unstable, stats })
}

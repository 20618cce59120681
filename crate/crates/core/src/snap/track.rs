//! Continuation of a realization along a straight segment in edge-length
//! space, `l(t) = from + t·(to − from)`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::energy::{energy_density, total_energy, EnergyError};
use crate::framework::{EdgeLengthVector, Framework, FrameworkError, GaugeChart, Realization};
use crate::rigidity::{length_curvature, length_jacobian, singular_data};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackError {
    #[error("start realization has lengths {residual:e} away from the segment start")]
    StartMismatch { residual: f64 },
    #[error("step limit of {limit} exceeded at t = {t}")]
    StepLimitExceeded { limit: usize, t: f64 },
    #[error("segment has {got} lengths, framework has {expected} edges")]
    SegmentSize { got: usize, expected: usize },
    #[error(transparent)]
    Framework(#[from] FrameworkError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// Straight segment between two edge-length vectors (all edges, including
/// bars between pinned knots).
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub from: EdgeLengthVector,
    pub to: EdgeLengthVector,
}

impl Segment {
    pub fn new(from: EdgeLengthVector, to: EdgeLengthVector) -> Self {
        Segment { from, to }
    }

    pub fn at(&self, t: f64) -> EdgeLengthVector {
        self.from.lerp(&self.to, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackMode {
    /// From a stable realization out towards a saddle; paths are checked for
    /// monotone strain.
    Forward,
    /// From a saddle onwards, on the branch chosen by the hint.
    Continue,
}

/// Disambiguates the branches leaving a singular start.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum BranchHint {
    #[default]
    None,
    /// Prefer the branch whose terminal realization is closest to this one.
    Toward(Realization),
    /// Prefer the branch whose first step leads away from this realization.
    AwayFrom(Realization),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackConfig {
    /// Equal subdivisions of `[0, 1]`; one sample is recorded per grid point.
    pub steps: usize,
    /// Smallest step in `t` before the corrector is declared stalled.
    pub min_step: f64,
    /// Max-norm length residual required at `t = 1`.
    pub residual_tol: f64,
    /// Smallest singular value below which a stall marks the boundary of
    /// reality.
    pub singular_tol: f64,
    /// Within this distance of `t = 1` the tracker tries to land on the
    /// target directly.
    pub endgame_window: f64,
    pub max_substeps: usize,
    /// Relative tolerance on the start realization's lengths.
    pub start_tol: f64,
    pub hint: BranchHint,
}

impl Default for TrackConfig {
    fn default() -> Self {
        TrackConfig {
            steps: 200,
            min_step: 1e-6,
            residual_tol: 1e-9,
            singular_tol: 1e-6,
            endgame_window: 1e-3,
            max_substeps: 200_000,
            start_tol: 1e-6,
            hint: BranchHint::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathStatus {
    ReachedTarget,
    BoundaryOfReality,
    CorrectorDiverged,
    MonotonicityViolated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub t: f64,
    pub realization: Realization,
    pub lengths: EdgeLengthVector,
    pub energy: f64,
    pub density: f64,
}

/// An infinitesimally flexible realization where the real path ends.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample {
    pub t: f64,
    pub realization: Realization,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// First-order flex in free coordinates.
    pub flex: Vec<f64>,
    /// Stress coefficients per edge (zero on bars between pinned knots),
    /// unit norm; `Σ_e stress_e ∂l_e/∂x` vanishes to `stress_residual`.
    pub stress: Vec<f64>,
    pub stress_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeformationPath {
    pub mode: TrackMode,
    pub segment: Segment,
    pub samples: Vec<PathSample>,
    pub status: PathStatus,
    pub terminal: Realization,
    pub boundary: Option<BoundarySample>,
}

/// A realization on a segment at parameter `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub t: f64,
    pub realization: Realization,
}

struct Tracker<'a> {
    fw: &'a Framework,
    chart: GaugeChart,
    edges: Vec<usize>,
    from: DVector<f64>,
    delta: DVector<f64>,
    config: &'a TrackConfig,
    scale: f64,
}

enum Run {
    Reached(Vec<PathSample>, DVector<f64>),
    Boundary(Vec<PathSample>, BoundarySample),
    Diverged(Vec<PathSample>, DVector<f64>),
}

impl<'a> Tracker<'a> {
    fn new(fw: &'a Framework, segment: &Segment, config: &'a TrackConfig) -> Result<Self, TrackError> {
        if segment.from.len() != fw.edge_count() || segment.to.len() != fw.edge_count() {
            return Err(TrackError::SegmentSize { got: segment.to.len(), expected: fw.edge_count() });
        }
        let chart = fw.gauge_chart()?;
        let edges = fw.deformable_edges();
        let from = DVector::from_iterator(edges.len(), edges.iter().map(|&e| segment.from.0[e]));
        let to = DVector::from_iterator(edges.len(), edges.iter().map(|&e| segment.to.0[e]));
        let scale = 1.0 + from.amax().max(to.amax());
        Ok(Tracker { fw, chart, edges, delta: &to - &from, from, config, scale })
    }

    fn lengths(&self, x: &DVector<f64>) -> DVector<f64> {
        let l = self.fw.edge_lengths(&self.chart.embed(x.as_slice()));
        DVector::from_iterator(self.edges.len(), self.edges.iter().map(|&e| l.0[e]))
    }

    fn residual(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        self.lengths(x) - (&self.from + &self.delta * t)
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        length_jacobian(self.fw, &self.chart, &self.chart.embed(x.as_slice()), &self.edges)
    }

    /// Gauss–Newton on `l(x) = l(t)`.
    fn correct(&self, mut x: DVector<f64>, t: f64, iters: usize, tol: f64) -> Option<DVector<f64>> {
        for _ in 0..iters {
            let r = self.residual(&x, t);
            if r.amax() <= tol {
                return Some(x);
            }
            let step = self.jacobian(&x).svd(true, true).solve(&(-r), 1e-14).ok()?;
            x += step;
            if !x.iter().all(|v| v.is_finite()) {
                return None;
            }
        }
        (self.residual(&x, t).amax() <= tol).then_some(x)
    }

    fn sample(&self, x: &DVector<f64>, t: f64) -> Result<PathSample, TrackError> {
        let realization = self.chart.embed(x.as_slice());
        let lengths = self.fw.edge_lengths(&realization);
        let energy = total_energy(self.fw, &lengths)?.total;
        Ok(PathSample { t, realization, lengths, energy, density: energy_density(self.fw, energy) })
    }

    fn tight_tol(&self) -> f64 {
        1e-12 * self.scale
    }

    /// Real branches leaving a start point where the length map is singular:
    /// along the flex `v`, `l(x0 + αv) − l(x0)` has stress component
    /// `½α²·uᵀl''[v, v]`, which must match `t·uᵀΔ`.
    fn singular_branches(&self, x0: &DVector<f64>) -> Option<Vec<(DVector<f64>, f64)>> {
        let sd = singular_data(&self.jacobian(x0));
        if sd.sigma_min > 1e-8 * sd.sigma_max {
            return None;
        }
        let r0 = self.chart.embed(x0.as_slice());
        let curv = length_curvature(self.fw, &self.chart, &r0, &self.edges, sd.flex.as_slice());
        let c = sd.stress.dot(&curv);
        let d = sd.stress.dot(&self.delta);
        if c.abs() <= 1e-12 * self.scale {
            return None;
        }
        if c * d <= 0.0 {
            return Some(Vec::new());
        }
        let dt = (0.5 / self.config.steps as f64).min(1e-4);
        let alpha = (2.0 * dt * d / c).sqrt();
        let mut out = Vec::new();
        for sign in [1.0, -1.0] {
            let guess = x0 + &sd.flex * (sign * alpha);
            if let Some(x) = self.correct(guess, dt, 30, self.tight_tol()) {
                out.push((x, dt));
            }
        }
        Some(out)
    }

    fn run(
        &self,
        mut x: DVector<f64>,
        mut t: f64,
        mut samples: Vec<PathSample>,
        budget: &mut usize,
    ) -> Result<Run, TrackError> {
        let cfg = self.config;
        let h_grid = 1.0 / cfg.steps as f64;
        let mut next = ((t / h_grid).floor() as usize + 1).min(cfg.steps);
        let mut h = h_grid;
        while t < 1.0 {
            if *budget == 0 {
                return Err(TrackError::StepLimitExceeded { limit: cfg.max_substeps, t });
            }
            *budget -= 1;
            let grid_t = next as f64 * h_grid;
            let t1 = if t + h >= grid_t { grid_t } else { t + h };
            let dt = t1 - t;
            let j = self.jacobian(&x);
            let tangent = j.svd(true, true).solve(&self.delta, 1e-14).ok();
            let accepted = tangent.and_then(|v| {
                let pred_step = &v * dt;
                let pred = &x + &pred_step;
                let xc = self.correct(pred.clone(), t1, 8, self.tight_tol())?;
                // a correction as large as the step itself means another branch
                let jump = (&xc - &pred).norm();
                (jump <= 0.5 * pred_step.norm() + 1e-10 * self.scale).then_some(xc)
            });
            match accepted {
                Some(xc) => {
                    x = xc;
                    t = t1;
                    if t >= 1.0 {
                        samples.push(self.sample(&x, 1.0)?);
                        return Ok(Run::Reached(samples, x));
                    }
                    if t >= grid_t {
                        samples.push(self.sample(&x, grid_t)?);
                        next += 1;
                    }
                    h = (2.0 * h).min(h_grid);
                    if 1.0 - t <= cfg.endgame_window {
                        if let Some(xe) = self.endgame(&x, t) {
                            samples.push(self.sample(&xe, 1.0)?);
                            return Ok(Run::Reached(samples, xe));
                        }
                    }
                }
                None => {
                    h = dt * 0.5;
                    if h < cfg.min_step {
                        if 1.0 - t <= cfg.endgame_window {
                            if let Some(xe) = self.endgame(&x, t) {
                                samples.push(self.sample(&xe, 1.0)?);
                                return Ok(Run::Reached(samples, xe));
                            }
                        }
                        let state = TrackState { t, realization: self.chart.embed(x.as_slice()) };
                        return Ok(match self.boundary(&state) {
                            // a fold exactly at the target is the usual way to arrive at a saddle
                            Some(b)
                                if self.residual(&self.chart_coords(&b.realization), 1.0).amax()
                                    <= cfg.residual_tol =>
                            {
                                let xb = self.chart_coords(&b.realization);
                                samples.push(self.sample(&xb, 1.0)?);
                                Run::Reached(samples, xb)
                            }
                            Some(b) => {
                                samples.push(self.sample(&self.chart_coords(&b.realization), b.t)?);
                                Run::Boundary(samples, b)
                            }
                            None => Run::Diverged(samples, x),
                        });
                    }
                }
            }
        }
        Ok(Run::Reached(samples, x))
    }

    fn chart_coords(&self, r: &Realization) -> DVector<f64> {
        DVector::from_vec(self.chart.project(r))
    }

    /// Lands on `l(1)` from a point close to it; a singular target (a fold of
    /// the length map) is then sharpened with the fold system.
    fn endgame(&self, x: &DVector<f64>, t: f64) -> Option<DVector<f64>> {
        let mut y = x.clone();
        let mut last = f64::INFINITY;
        for _ in 0..80 {
            let r = self.residual(&y, 1.0);
            let rn = r.amax();
            if rn <= self.tight_tol() || rn >= last {
                break;
            }
            last = rn;
            let step = self.jacobian(&y).svd(true, true).solve(&(-r), 1e-14).ok()?;
            y += step;
        }
        let radius = 10.0 * (1.0 - t).sqrt() * self.scale;
        if (&y - x).amax() > radius || self.residual(&y, 1.0).amax() > self.config.residual_tol {
            return None;
        }
        let sd = singular_data(&self.jacobian(&y));
        if sd.sigma_min < 1e-4 * sd.sigma_max {
            if let Some((z, _)) = self.fold_solve(&y, Some(1.0), &sd.flex) {
                if (&z - &y).amax() <= 1e-3 * self.scale
                    && self.residual(&z, 1.0).amax() <= self.residual(&y, 1.0).amax()
                {
                    return Some(z);
                }
            }
        }
        Some(y)
    }

    /// Newton on the fold system `l(x) = l(t)`, `J(x)v = 0`, `v₀·v = 1`,
    /// with `t` free unless fixed. Solved in the least-squares sense with a
    /// finite-difference Jacobian.
    fn fold_solve(&self, x0: &DVector<f64>, fixed_t: Option<f64>, v0: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
        let m = x0.len();
        let b = self.edges.len();
        let with_t = fixed_t.is_none();
        let nz = 2 * m + usize::from(with_t);
        let split = |z: &DVector<f64>| -> (DVector<f64>, DVector<f64>, f64) {
            let x = z.rows(0, m).into_owned();
            let v = z.rows(m, m).into_owned();
            let t = fixed_t.unwrap_or_else(|| z[2 * m]);
            (x, v, t)
        };
        let eval = |z: &DVector<f64>| -> DVector<f64> {
            let (x, v, t) = split(z);
            let mut out = DVector::zeros(2 * b + 1);
            out.rows_mut(0, b).copy_from(&self.residual(&x, t));
            out.rows_mut(b, b).copy_from(&(self.jacobian(&x) * &v));
            out[2 * b] = v0.dot(&v) - 1.0;
            out
        };
        let mut z = DVector::zeros(nz);
        z.rows_mut(0, m).copy_from(x0);
        z.rows_mut(m, m).copy_from(&(v0 / v0.norm_squared()));
        if with_t {
            // start t from the least-squares fit of l(x0) onto the segment
            let dl = self.lengths(x0) - &self.from;
            z[2 * m] = dl.dot(&self.delta) / self.delta.norm_squared();
        }
        let mut f = eval(&z);
        for _ in 0..40 {
            if f.amax() <= 1e-13 * self.scale {
                break;
            }
            let mut jac = DMatrix::zeros(2 * b + 1, nz);
            for k in 0..nz {
                let hk = 1e-7 * (1.0 + z[k].abs());
                let mut zp = z.clone();
                zp[k] += hk;
                let mut zm = z.clone();
                zm[k] -= hk;
                jac.set_column(k, &((eval(&zp) - eval(&zm)) / (2.0 * hk)));
            }
            let step = jac.svd(true, true).solve(&(-&f), 1e-14).ok()?;
            let trial = &z + &step;
            let ft = eval(&trial);
            if ft.amax().is_nan() || ft.amax() >= f.amax() {
                break;
            }
            z = trial;
            f = ft;
        }
        if f.amax() > 1e-9 * self.scale {
            return None;
        }
        let (x, _, t) = split(&z);
        Some((x, t))
    }

    fn boundary(&self, state: &TrackState) -> Option<BoundarySample> {
        let x = DVector::from_vec(self.chart.reduce(&state.realization).ok()?);
        let sd = singular_data(&self.jacobian(&x));
        if sd.sigma_min > 1e-2 * sd.sigma_max {
            return None;
        }
        let (xs, ts) = self.fold_solve(&x, None, &sd.flex)?;
        if !(0.0..=1.0).contains(&ts) || (ts - state.t).abs() > 1e-2 || (&xs - &x).amax() > 0.1 * self.scale {
            return None;
        }
        let j = self.jacobian(&xs);
        let sd = singular_data(&j);
        if sd.sigma_min >= self.config.singular_tol {
            return None;
        }
        let mut stress = vec![0.0; self.fw.edge_count()];
        for (k, &e) in self.edges.iter().enumerate() {
            stress[e] = sd.stress[k];
        }
        Some(BoundarySample {
            t: ts,
            realization: self.chart.embed(xs.as_slice()),
            sigma_min: sd.sigma_min,
            sigma_max: sd.sigma_max,
            flex: sd.flex.as_slice().to_vec(),
            stress,
            stress_residual: (j.transpose() * &sd.stress).norm(),
        })
    }
}

/// Looks for a boundary of reality at a tracking state on `segment`: a nearby
/// realization where the length map folds (smallest singular value of the
/// constraint Jacobian below `config.singular_tol`). `None` at regular
/// states.
pub fn detect_reality_boundary(
    fw: &Framework,
    segment: &Segment,
    state: &TrackState,
    config: &TrackConfig,
) -> Result<Option<BoundarySample>, TrackError> {
    Ok(Tracker::new(fw, segment, config)?.boundary(state))
}

/// Index of the first sample at which some bar's `|l − L|` decreases by more
/// than a corrector-level tolerance.
pub fn check_monotonicity(fw: &Framework, samples: &[PathSample]) -> Option<usize> {
    let tol = 1e-9 * (1.0 + fw.rest_lengths().0.iter().fold(0.0f64, |m, v| m.max(*v)));
    let rest = fw.rest_lengths();
    let dev = |s: &PathSample| -> Vec<f64> { s.lengths.0.iter().zip(&rest.0).map(|(l, r)| (l - r).abs()).collect() };
    samples.windows(2).position(|w| dev(&w[1]).iter().zip(dev(&w[0])).any(|(b, a)| *b < a - tol)).map(|k| k + 1)
}

/// Tracks `start` along `segment`. The start's lengths must equal
/// `segment.from`.
pub fn track_segment(
    fw: &Framework,
    start: &Realization,
    segment: &Segment,
    mode: TrackMode,
    config: &TrackConfig,
) -> Result<DeformationPath, TrackError> {
    let tracker = Tracker::new(fw, segment, config)?;
    let x0 = DVector::from_vec(tracker.chart.reduce(start)?);
    let mismatch = tracker.residual(&x0, 0.0).amax();
    if mismatch > config.start_tol * tracker.scale {
        return Err(TrackError::StartMismatch { residual: mismatch });
    }
    let mut budget = config.max_substeps;
    let first = vec![tracker.sample(&x0, 0.0)?];
    let runs: Vec<(Run, Option<DVector<f64>>)> = match tracker.singular_branches(&x0) {
        None => vec![(tracker.run(x0.clone(), 0.0, first, &mut budget)?, None)],
        Some(branches) if branches.is_empty() => {
            let state = TrackState { t: 0.0, realization: start.clone() };
            let b = tracker.boundary(&state);
            let run = match b {
                Some(b) => Run::Boundary(first, b),
                None => Run::Diverged(first, x0.clone()),
            };
            vec![(run, None)]
        }
        Some(branches) => {
            let mut out = Vec::new();
            for (xb, tb) in branches {
                let dir = &xb - &x0;
                out.push((tracker.run(xb, tb, first.clone(), &mut budget)?, Some(dir)));
            }
            out
        }
    };
    let pick = choose_branch(&tracker, &runs, &x0, config);
    let (run, _) = runs.into_iter().nth(pick).expect("at least one run");
    let mut path = match run {
        Run::Reached(samples, x) => DeformationPath {
            mode,
            segment: segment.clone(),
            samples,
            status: PathStatus::ReachedTarget,
            terminal: tracker.chart.embed(x.as_slice()),
            boundary: None,
        },
        Run::Boundary(samples, b) => DeformationPath {
            mode,
            segment: segment.clone(),
            samples,
            status: PathStatus::BoundaryOfReality,
            terminal: b.realization.clone(),
            boundary: Some(b),
        },
        Run::Diverged(samples, x) => DeformationPath {
            mode,
            segment: segment.clone(),
            samples,
            status: PathStatus::CorrectorDiverged,
            terminal: tracker.chart.embed(x.as_slice()),
            boundary: None,
        },
    };
    if mode == TrackMode::Forward
        && path.status == PathStatus::ReachedTarget
        && check_monotonicity(fw, &path.samples).is_some()
    {
        path.status = PathStatus::MonotonicityViolated;
    }
    Ok(path)
}

fn choose_branch(
    tracker: &Tracker,
    runs: &[(Run, Option<DVector<f64>>)],
    x0: &DVector<f64>,
    config: &TrackConfig,
) -> usize {
    if runs.len() < 2 {
        return 0;
    }
    let terminal = |run: &Run| -> Option<DVector<f64>> {
        match run {
            Run::Reached(_, x) => Some(x.clone()),
            _ => None,
        }
    };
    match &config.hint {
        BranchHint::Toward(target) => {
            let Ok(goal) = tracker.chart.reduce(target) else { return 0 };
            let goal = DVector::from_vec(goal);
            let dist = |run: &Run| terminal(run).map_or(f64::INFINITY, |x| (x - &goal).amax());
            (0..runs.len()).min_by(|&a, &b| dist(&runs[a].0).total_cmp(&dist(&runs[b].0))).unwrap_or(0)
        }
        BranchHint::AwayFrom(basin) => {
            let Ok(basin) = tracker.chart.reduce(basin) else { return 0 };
            let away = x0 - DVector::from_vec(basin);
            let score = |dir: &Option<DVector<f64>>| dir.as_ref().map_or(f64::NEG_INFINITY, |d| d.dot(&away));
            (0..runs.len()).max_by(|&a, &b| score(&runs[a].1).total_cmp(&score(&runs[b].1))).unwrap_or(0)
        }
        BranchHint::None => runs.iter().position(|(r, _)| matches!(r, Run::Reached(..))).unwrap_or(0),
    }
}

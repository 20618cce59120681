//! Homotopy continuation from a linear-product start system.
//!
//! Each equation of the start system is a product of random complex affine
//! forms, one per unit of the equation's degree in each variable group, so
//! the start system shares the target's multi-homogeneous structure. Paths of
//! `H(x, t) = γ(1 − t)·G(x) + t·F(x)` are tracked from `t = 0` to `t = 1` with
//! an RK4 predictor and a Newton corrector.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::polynomial::{bezout_count, PolynomialSystem};
use super::SolverError;
use crate::linalg::{norm_c, solve_complex_in_place};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// How variables are grouped for the start system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartStructure {
    /// One group holding every variable: total-degree Bézout count.
    TotalDegree,
    /// The system's own variable groups.
    MultiHomogeneous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerSettings {
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// Relative Newton tolerance while tracking.
    pub corrector_tol: f64,
    pub max_corrector_iters: usize,
    /// Largest relative first Newton correction accepted after a predictor step.
    pub max_correction: f64,
    /// Paths whose max-norm exceeds this are declared divergent.
    pub divergence_norm: f64,
    /// Paths stalling near `t = 1` beyond this max-norm are declared divergent.
    pub endgame_norm: f64,
    /// Newton tolerance for the endpoint refinement.
    pub endpoint_tol: f64,
    pub max_steps: usize,
}

impl Default for TrackerSettings {
    fn default() -> Self {
        TrackerSettings {
            initial_step: 0.02,
            max_step: 0.05,
            min_step: 1e-14,
            corrector_tol: 1e-9,
            max_corrector_iters: 3,
            max_correction: 1e-3,
            divergence_norm: 1e8,
            endgame_norm: 1e5,
            endpoint_tol: 1e-12,
            max_steps: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyConfig {
    pub seed: u64,
    pub structure: StartStructure,
    pub max_paths: usize,
    /// Worker threads; 0 picks the rayon default.
    pub workers: usize,
    pub tracker: TrackerSettings,
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        HomotopyConfig {
            seed: 42,
            structure: StartStructure::MultiHomogeneous,
            max_paths: 1_000_000,
            workers: 0,
            tracker: TrackerSettings::default(),
        }
    }
}

/// Converged endpoint of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPoint {
    pub values: Vec<C>,
    /// Max-norm of the target system at `values`.
    pub residual: f64,
    /// Pivot-ratio estimate of the Jacobian condition number.
    pub condition_estimate: f64,
    pub path: usize,
    /// Tracking stalled just short of `t = 1` or the endpoint Jacobian is
    /// numerically singular.
    pub singular: bool,
}

impl SolutionPoint {
    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct HomotopyStats {
    pub paths: usize,
    pub finite: usize,
    pub singular: usize,
    pub diverged: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyRun {
    pub points: Vec<SolutionPoint>,
    pub stats: HomotopyStats,
}

#[derive(Debug, Clone, PartialEq)]
enum PathEnd {
    Finite(SolutionPoint),
    Diverged,
    Failed,
}

fn groups_for(system: &PolynomialSystem, structure: StartStructure) -> Vec<Vec<usize>> {
    match structure {
        StartStructure::TotalDegree => vec![(0..system.variable_count()).collect()],
        StartStructure::MultiHomogeneous => system.groups.clone(),
    }
}

/// Number of paths the chosen start structure produces.
pub fn path_count(system: &PolynomialSystem, structure: StartStructure) -> u128 {
    let groups = groups_for(system, structure);
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    bezout_count(&system.group_degrees(&groups), &sizes)
}

struct LinearForm {
    group: usize,
    coeffs: Vec<C>,
    constant: C,
}

struct StartSystem {
    groups: Vec<Vec<usize>>,
    /// Affine factors of each equation.
    factors: Vec<Vec<LinearForm>>,
    /// For every start solution, the factor index chosen in each equation.
    choices: Vec<Vec<u8>>,
}

fn random_c(rng: &mut ChaCha8Rng) -> C {
    C::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

impl StartSystem {
    fn new(system: &PolynomialSystem, groups: Vec<Vec<usize>>, rng: &mut ChaCha8Rng) -> Self {
        let degrees = system.group_degrees(&groups);
        let factors: Vec<Vec<LinearForm>> = degrees
            .iter()
            .map(|row| {
                let mut fs = Vec::new();
                for (g, &d) in row.iter().enumerate() {
                    for _ in 0..d {
                        let coeffs = (0..groups[g].len()).map(|_| random_c(rng)).collect();
                        fs.push(LinearForm { group: g, coeffs, constant: random_c(rng) });
                    }
                }
                fs
            })
            .collect();
        let mut choices = Vec::new();
        let mut left: Vec<usize> = groups.iter().map(Vec::len).collect();
        let mut cur = Vec::with_capacity(factors.len());
        enumerate(&factors, 0, &mut left, &mut cur, &mut choices);
        StartSystem { groups, factors, choices }
    }

    /// Solves the linear systems selected by `choice`.
    fn solution(&self, choice: &[u8], n: usize) -> Option<Vec<C>> {
        let mut x = vec![ZERO; n];
        for (g, vars) in self.groups.iter().enumerate() {
            let m = vars.len();
            let mut a = Vec::with_capacity(m * m);
            let mut b = Vec::with_capacity(m);
            for (e, &c) in choice.iter().enumerate() {
                let f = &self.factors[e][c as usize];
                if f.group == g {
                    a.extend_from_slice(&f.coeffs);
                    b.push(-f.constant);
                }
            }
            solve_complex_in_place(&mut a, m, &mut b)?;
            for (&v, val) in vars.iter().zip(b) {
                x[v] = val;
            }
        }
        Some(x)
    }

    /// Values and Jacobian (row-major) of the start system.
    fn eval(&self, x: &[C], out: &mut [C], jac: &mut [C]) {
        let n = x.len();
        jac.iter_mut().for_each(|v| *v = ZERO);
        let mut vals = [ZERO; 8];
        for (e, fs) in self.factors.iter().enumerate() {
            for (k, f) in fs.iter().enumerate() {
                let vars = &self.groups[f.group];
                let mut v = f.constant;
                for (c, &var) in f.coeffs.iter().zip(vars) {
                    v += c * x[var];
                }
                vals[k] = v;
            }
            let d = fs.len();
            out[e] = vals[..d].iter().product();
            let row = &mut jac[e * n..(e + 1) * n];
            for (k, f) in fs.iter().enumerate() {
                let others: C = (0..d).filter(|&j| j != k).map(|j| vals[j]).product();
                for (c, &var) in f.coeffs.iter().zip(&self.groups[f.group]) {
                    row[var] += others * c;
                }
            }
        }
    }
}

fn enumerate(factors: &[Vec<LinearForm>], eq: usize, left: &mut [usize], cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if eq == factors.len() {
        if left.iter().all(|&l| l == 0) {
            out.push(cur.clone());
        }
        return;
    }
    // prune: remaining equations must fill the remaining capacity exactly
    let remaining: usize = left.iter().sum();
    if remaining != factors.len() - eq {
        return;
    }
    for (k, f) in factors[eq].iter().enumerate() {
        if left[f.group] == 0 {
            continue;
        }
        left[f.group] -= 1;
        cur.push(k as u8);
        enumerate(factors, eq + 1, left, cur, out);
        cur.pop();
        left[f.group] += 1;
    }
}

struct Tracker<'a> {
    target: &'a PolynomialSystem,
    start: &'a StartSystem,
    gamma: C,
    settings: &'a TrackerSettings,
    n: usize,
    f: Vec<C>,
    fj: Vec<C>,
    g: Vec<C>,
    gj: Vec<C>,
    a: Vec<C>,
    rhs: Vec<C>,
}

impl<'a> Tracker<'a> {
    fn new(target: &'a PolynomialSystem, start: &'a StartSystem, gamma: C, settings: &'a TrackerSettings) -> Self {
        let n = target.variable_count();
        Tracker {
            target,
            start,
            gamma,
            settings,
            n,
            f: vec![ZERO; n],
            fj: vec![ZERO; n * n],
            g: vec![ZERO; n],
            gj: vec![ZERO; n * n],
            a: vec![ZERO; n * n],
            rhs: vec![ZERO; n],
        }
    }

    fn evaluate(&mut self, x: &[C], t: f64) {
        self.target.eval_with_jacobian(x, &mut self.f, &mut self.fj);
        self.start.eval(x, &mut self.g, &mut self.gj);
        let s = self.gamma * (1.0 - t);
        for ((a, fj), gj) in self.a.iter_mut().zip(&self.fj).zip(&self.gj) {
            *a = s * gj + fj * t;
        }
    }

    /// `dx/dt = −H_x⁻¹ H_t`, written into `out`.
    fn velocity(&mut self, x: &[C], t: f64, out: &mut [C]) -> bool {
        self.evaluate(x, t);
        for ((o, f), g) in out.iter_mut().zip(&self.f).zip(&self.g) {
            *o = -(f - self.gamma * g);
        }
        solve_complex_in_place(&mut self.a, self.n, out).is_some()
    }

    /// One Newton step at parameter `t`; returns the step norm.
    fn newton(&mut self, x: &mut [C], t: f64) -> Option<f64> {
        self.evaluate(x, t);
        let s = self.gamma * (1.0 - t);
        for ((r, f), g) in self.rhs.iter_mut().zip(&self.f).zip(&self.g) {
            *r = -(s * g + f * t);
        }
        solve_complex_in_place(&mut self.a, self.n, &mut self.rhs)?;
        for (xi, d) in x.iter_mut().zip(&self.rhs) {
            *xi += d;
        }
        Some(norm_c(&self.rhs))
    }

    fn track(&mut self, x0: Vec<C>, path: usize) -> PathEnd {
        let st = self.settings;
        let n = self.n;
        let mut x = x0;
        let mut t = 0.0f64;
        let mut h = st.initial_step;
        let mut streak = 0;
        let mut k1 = vec![ZERO; n];
        let mut k2 = vec![ZERO; n];
        let mut k3 = vec![ZERO; n];
        let mut k4 = vec![ZERO; n];
        let mut xt = vec![ZERO; n];
        let mut stalled = false;

        for _ in 0..st.max_steps {
            if t >= 1.0 {
                break;
            }
            let dt = h.min(1.0 - t);
            let t1 = if dt == 1.0 - t { 1.0 } else { t + dt };
            let ok = self.velocity(&x, t, &mut k1)
                && {
                    for i in 0..n {
                        xt[i] = x[i] + k1[i] * (0.5 * dt);
                    }
                    self.velocity(&xt, t + 0.5 * dt, &mut k2)
                }
                && {
                    for i in 0..n {
                        xt[i] = x[i] + k2[i] * (0.5 * dt);
                    }
                    self.velocity(&xt, t + 0.5 * dt, &mut k3)
                }
                && {
                    for i in 0..n {
                        xt[i] = x[i] + k3[i] * dt;
                    }
                    self.velocity(&xt, t1, &mut k4)
                };
            let mut accepted = false;
            if ok {
                for i in 0..n {
                    xt[i] = x[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
                }
                let mut prev = f64::INFINITY;
                for k in 0..st.max_corrector_iters {
                    let Some(step) = self.newton(&mut xt, t1) else { break };
                    let scale = 1.0 + norm_c(&xt);
                    // a large or non-contracting correction means the predictor
                    // left the basin of this path
                    if !step.is_finite() || step > 0.5 * prev || (k == 0 && step > st.max_correction * scale) {
                        break;
                    }
                    if step <= st.corrector_tol * scale {
                        accepted = true;
                        break;
                    }
                    prev = step;
                }
            }
            if accepted {
                std::mem::swap(&mut x, &mut xt);
                t = t1;
                streak += 1;
                if streak >= 2 {
                    h = (2.0 * h).min(st.max_step);
                    streak = 0;
                }
                if x.iter().any(|v| v.norm() > st.divergence_norm) {
                    return PathEnd::Diverged;
                }
            } else {
                h *= 0.5;
                streak = 0;
                if h < st.min_step {
                    if 1.0 - t < 1e-6 {
                        stalled = true;
                        break;
                    }
                    return PathEnd::Failed;
                }
            }
        }
        if t < 1.0 && !stalled {
            return PathEnd::Failed;
        }
        self.finish(x, path, stalled)
    }

    /// Newton on the target system until the step stalls.
    fn finish(&mut self, mut x: Vec<C>, path: usize, stalled: bool) -> PathEnd {
        let st = self.settings;
        let mut last = f64::INFINITY;
        for _ in 0..60 {
            let mut trial = x.clone();
            let Some(step) = self.newton(&mut trial, 1.0) else { break };
            if !step.is_finite() || step > 2.0 * last {
                break;
            }
            x = trial;
            if step <= st.endpoint_tol * (1.0 + norm_c(&x)) {
                break;
            }
            last = step;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return PathEnd::Failed;
        }
        let limit = if stalled { st.endgame_norm } else { st.divergence_norm };
        if x.iter().any(|v| v.norm() > limit) {
            return PathEnd::Diverged;
        }
        self.target.eval_with_jacobian(&x, &mut self.f, &mut self.fj);
        let residual = self.f.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        self.a.copy_from_slice(&self.fj);
        self.rhs.iter_mut().for_each(|v| *v = C::new(1.0, 0.0));
        let cond = solve_complex_in_place(&mut self.a, self.n, &mut self.rhs).unwrap_or(f64::INFINITY);
        PathEnd::Finite(SolutionPoint {
            values: x,
            residual,
            condition_estimate: cond,
            path,
            singular: stalled || cond > 1e8,
        })
    }
}

/// Tracks every path of the start system and returns the finite endpoints in
/// path order.
pub fn solve_total_degree(system: &PolynomialSystem, config: &HomotopyConfig) -> Result<HomotopyRun, SolverError> {
    if !system.is_square() {
        return Err(SolverError::NonSquareSystem {
            equations: system.equation_count(),
            variables: system.variable_count(),
        });
    }
    let count = path_count(system, config.structure);
    if count > config.max_paths as u128 {
        return Err(SolverError::PathBudgetExceeded { required: count, budget: config.max_paths });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let gamma = C::from_polar(1.0, theta);
    let start = StartSystem::new(system, groups_for(system, config.structure), &mut rng);
    debug_assert_eq!(start.choices.len() as u128, count);

    let n = system.variable_count();
    let run = |idx: usize| -> PathEnd {
        let Some(x0) = start.solution(&start.choices[idx], n) else {
            return PathEnd::Failed;
        };
        Tracker::new(system, &start, gamma, &config.tracker).track(x0, idx)
    };
    let ends: Vec<PathEnd> = if config.workers == 1 {
        (0..start.choices.len()).map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| SolverError::Backend(e.to_string()))?;
        pool.install(|| (0..start.choices.len()).into_par_iter().map(run).collect())
    };

    let mut stats = HomotopyStats { paths: ends.len(), ..Default::default() };
    let mut points = Vec::new();
    for end in ends {
        match end {
            PathEnd::Finite(p) => {
                stats.finite += 1;
                if p.singular {
                    stats.singular += 1;
                }
                points.push(p);
            }
            PathEnd::Diverged => stats.diverged += 1,
            PathEnd::Failed => stats.failed += 1,
        }
    }
    Ok(HomotopyRun { points, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::polynomial::{Polynomial, Term};

    fn sys(eqs: Vec<Polynomial>, groups: Vec<Vec<usize>>) -> PolynomialSystem {
        let n = groups.iter().map(Vec::len).sum();
        PolynomialSystem { variable_names: (0..n).map(|i| format!("x{i}")).collect(), equations: eqs, groups }
    }

    #[test]
    fn circle_and_line() {
        // x² + y² − 25 = 0, x − y − 1 = 0 → (4, 3), (−3, −4)
        let mut a = Polynomial::new();
        a.push(Term::new(1.0, &[(0, 2)]));
        a.push(Term::new(1.0, &[(1, 2)]));
        a.push(Term::constant(-25.0));
        let mut b = Polynomial::new();
        b.push(Term::new(1.0, &[(0, 1)]));
        b.push(Term::new(-1.0, &[(1, 1)]));
        b.push(Term::constant(-1.0));
        let s = sys(vec![a, b], vec![vec![0, 1]]);
        let run = solve_total_degree(&s, &HomotopyConfig::default()).unwrap();
        assert_eq!(run.stats.paths, 2);
        let mut roots: Vec<(f64, f64)> = run.points.iter().map(|p| (p.values[0].re, p.values[1].re)).collect();
        roots.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!((roots[0].0 + 3.0).abs() < 1e-10 && (roots[0].1 + 4.0).abs() < 1e-10);
        assert!((roots[1].0 - 4.0).abs() < 1e-10 && (roots[1].1 - 3.0).abs() < 1e-10);
    }

    #[test]
    fn diverging_paths_are_counted() {
        // x·y − 1 = 0, x − 2 = 0: Bézout 2, one finite root
        let mut a = Polynomial::new();
        a.push(Term::new(1.0, &[(0, 1), (1, 1)]));
        a.push(Term::constant(-1.0));
        let mut b = Polynomial::new();
        b.push(Term::new(1.0, &[(0, 1)]));
        b.push(Term::constant(-2.0));
        let s = sys(vec![a, b], vec![vec![0], vec![1]]);
        let config = HomotopyConfig { structure: StartStructure::TotalDegree, ..Default::default() };
        let run = solve_total_degree(&s, &config).unwrap();
        assert_eq!(run.stats.paths, 2);
        assert_eq!(run.points.len(), 1);
        assert_eq!(run.stats.diverged, 1);
        assert!((run.points[0].values[1].re - 0.5).abs() < 1e-12);
        // the bilinear grouping has exactly one path
        let config = HomotopyConfig::default();
        assert_eq!(path_count(&s, StartStructure::MultiHomogeneous), 1);
        let run = solve_total_degree(&s, &config).unwrap();
        assert_eq!(run.points.len(), 1);
    }

    #[test]
    fn budget_and_shape_errors() {
        let mut a = Polynomial::new();
        a.push(Term::new(1.0, &[(0, 2)]));
        let s = sys(vec![a.clone()], vec![vec![0]]);
        let config = HomotopyConfig { max_paths: 0, ..Default::default() };
        assert!(matches!(solve_total_degree(&s, &config), Err(SolverError::PathBudgetExceeded { .. })));
        let s = sys(vec![a.clone(), a], vec![vec![0]]);
        assert!(matches!(solve_total_degree(&s, &HomotopyConfig::default()), Err(SolverError::NonSquareSystem { .. })));
    }
}

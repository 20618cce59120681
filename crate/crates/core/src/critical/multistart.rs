//! Real Newton iterations on the Lagrange system from random starts. Not
//! complete, but independent of the homotopy backend.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::homotopy::SolutionPoint;
use super::lagrange::LagrangeSystem;
use super::SolverError;
use crate::framework::Framework;
use crate::linalg::{norm, solve_real_in_place};

#[derive(Debug, Clone, PartialEq)]
pub struct MultistartConfig {
    pub seed: u64,
    pub starts: usize,
    pub workers: usize,
    pub max_iters: usize,
    /// Max-norm residual accepted as converged.
    pub tol: f64,
}

impl Default for MultistartConfig {
    fn default() -> Self {
        MultistartConfig { seed: 42, starts: 2000, workers: 0, max_iters: 80, tol: 1e-11 }
    }
}

/// Centre and half-width of the sampling box: 3× the graph diameter wide,
/// centred on the pins (or the origin).
fn sampling_box(fw: &Framework) -> (Vec<f64>, f64) {
    let n = fw.dimension();
    let mut centre = vec![0.0; n];
    if fw.has_pins() {
        for p in fw.pins().values() {
            for (c, v) in centre.iter_mut().zip(p) {
                *c += v / fw.pins().len() as f64;
            }
        }
    }
    (centre, 1.5 * fw.graph_diameter())
}

fn initial_point(fw: &Framework, sys: &LagrangeSystem, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let layout = &sys.layout;
    let (centre, half) = sampling_box(fw);
    let coords: Vec<f64> =
        layout.chart.free_coords().iter().map(|c| centre[c.axis] + rng.gen_range(-half..half)).collect();
    let r = layout.chart.embed(&coords);
    let lengths = fw.edge_lengths(&r);
    let mut x = coords;
    for &e in &layout.edges {
        let l = lengths.0[e];
        if l <= 0.0 {
            return None;
        }
        x.push(l);
    }
    let b = layout.edges.len();
    x.extend(std::iter::repeat_n(0.0, b));

    // rows other than the λ-rows are affine in λ: F(x, q, λ) = F(x, q, 0) + J_λ λ
    let nv = layout.variable_count();
    let mut f = vec![0.0; nv];
    let mut jac = vec![0.0; nv * nv];
    sys.system.eval_with_jacobian(&x, &mut f, &mut jac);
    let rows = layout.lambda(0);
    let a = DMatrix::from_fn(rows, b, |i, j| jac[i * nv + layout.lambda(j)]);
    let rhs = DVector::from_fn(rows, |i, _| -f[i]);
    let lam = a.svd(true, true).solve(&rhs, 1e-12).ok()?;
    x[layout.lambda(0)..].copy_from_slice(lam.as_slice());
    Some(x)
}

fn newton(sys: &LagrangeSystem, mut x: Vec<f64>, config: &MultistartConfig, bound: f64) -> Option<SolutionPoint> {
    let nv = x.len();
    let mut f = vec![0.0; nv];
    let mut jac = vec![0.0; nv * nv];
    let mut cond = f64::INFINITY;
    for _ in 0..config.max_iters {
        sys.system.eval_with_jacobian(&x, &mut f, &mut jac);
        let res = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !res.is_finite() {
            return None;
        }
        let mut step: Vec<f64> = f.iter().map(|v| -v).collect();
        cond = solve_real_in_place(&mut jac, nv, &mut step)?;
        x.iter_mut().zip(&step).for_each(|(a, d)| *a += d);
        if x.iter().any(|v| v.abs() > bound) {
            return None;
        }
        if norm(&step) <= 1e-14 * (1.0 + norm(&x)) {
            break;
        }
    }
    sys.system.eval(&x, &mut f);
    let residual = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (residual <= config.tol).then(|| SolutionPoint {
        values: x.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        residual,
        condition_estimate: cond,
        path: 0,
        singular: cond > 1e8,
    })
}

/// Converged real solutions, one per distinct point (max-norm 1e-6).
pub fn solve_multistart(
    fw: &Framework,
    sys: &LagrangeSystem,
    config: &MultistartConfig,
) -> Result<Vec<SolutionPoint>, SolverError> {
    let bound = 1e6 * (1.0 + fw.graph_diameter());
    let run = |idx: usize| -> Option<SolutionPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(idx as u64);
        let x0 = initial_point(fw, sys, &mut rng)?;
        let mut p = newton(sys, x0, config, bound)?;
        p.path = idx;
        Some(p)
    };
    let found: Vec<Option<SolutionPoint>> = if config.workers == 1 {
        (0..config.starts).map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| SolverError::Backend(e.to_string()))?;
        pool.install(|| (0..config.starts).into_par_iter().map(run).collect())
    };
    let mut unique: Vec<SolutionPoint> = Vec::new();
    for p in found.into_iter().flatten() {
        let dup = unique
            .iter()
            .any(|u| u.values.iter().zip(&p.values).all(|(a, b)| (a.re - b.re).abs() <= 1e-6 * (1.0 + a.re.abs())));
        if !dup {
            unique.push(p);
        }
    }
    Ok(unique)
}

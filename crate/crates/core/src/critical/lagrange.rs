//! The Lagrange system whose real solutions with positive auxiliary lengths
//! are the critical points of the strain energy.
//!
//! With `Λ_ij = q_ij² − ‖k_i − k_j‖²` the Lagrangian is
//! `F = (E·A/2) Σ (q_ij − L_ij)²/L_ij + Σ λ_ij Λ_ij` and the system collects
//! its partial derivatives in the order: free coordinates, `q`, `λ`.

use crate::framework::{Framework, FrameworkError, GaugeChart, Realization};

use super::polynomial::{Polynomial, PolynomialSystem, Term};

/// Where each unknown lives in the solution vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeLayout {
    pub chart: GaugeChart,
    /// Deformable edges (indices into `Framework::edges`).
    pub edges: Vec<usize>,
}

impl LagrangeLayout {
    pub fn coord_count(&self) -> usize {
        self.chart.len()
    }

    pub fn q(&self, k: usize) -> usize {
        self.chart.len() + k
    }

    pub fn lambda(&self, k: usize) -> usize {
        self.chart.len() + self.edges.len() + k
    }

    pub fn variable_count(&self) -> usize {
        self.chart.len() + 2 * self.edges.len()
    }

    pub fn coords<'a, T>(&self, x: &'a [T]) -> &'a [T] {
        &x[..self.chart.len()]
    }

    pub fn qs<'a, T>(&self, x: &'a [T]) -> &'a [T] {
        &x[self.q(0)..self.lambda(0)]
    }

    pub fn lambdas<'a, T>(&self, x: &'a [T]) -> &'a [T] {
        &x[self.lambda(0)..]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeSystem {
    pub system: PolynomialSystem,
    pub layout: LagrangeLayout,
}

enum Slot {
    Var(usize),
    Fixed(f64),
}

impl LagrangeSystem {
    /// Full variable vector of a real realization: free coordinates, `q = l`
    /// and the multipliers `λ = −E·A (q − L)/(2 L q)` solving the `q` rows.
    pub fn lift(&self, fw: &Framework, r: &Realization) -> Vec<f64> {
        let stiff = fw.material().stiffness();
        let lengths = fw.edge_lengths(r);
        let mut x = self.layout.chart.project(r);
        let q: Vec<f64> = self.layout.edges.iter().map(|&e| lengths.0[e]).collect();
        let lam: Vec<f64> = self
            .layout
            .edges
            .iter()
            .zip(&q)
            .map(|(&e, &q)| {
                let rest = fw.edges()[e].rest_length;
                -stiff * (q - rest) / (2.0 * rest * q)
            })
            .collect();
        x.extend(q);
        x.extend(lam);
        x
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut out = vec![0.0; self.system.equation_count()];
        self.system.eval(x, &mut out);
        out.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Assembles the square Lagrange system in the framework's gauge chart.
/// Bars between pinned knots get no `q`/`λ` variables.
pub fn assemble_lagrange_system(fw: &Framework) -> Result<LagrangeSystem, FrameworkError> {
    let chart = fw.gauge_chart()?;
    let edges = fw.deformable_edges();
    let layout = LagrangeLayout { chart, edges };
    let n = fw.dimension();
    let m = layout.coord_count();
    let nv = layout.variable_count();
    let stiff = fw.material().stiffness();

    let slot = |knot: usize, axis: usize| match layout.chart.slot(knot, axis) {
        Some(s) => Slot::Var(s),
        None => Slot::Fixed(layout.chart.base_value(knot, axis)),
    };

    let mut names: Vec<String> =
        layout.chart.free_coords().iter().map(|c| format!("k{}_{}", c.knot + 1, c.axis + 1)).collect();
    for prefix in ["q", "lambda"] {
        for &e in &layout.edges {
            let edge = fw.edges()[e];
            names.push(format!("{prefix}{}{}", edge.i + 1, edge.j + 1));
        }
    }

    let mut grad_k = vec![Polynomial::new(); m];
    let mut grad_q = Vec::with_capacity(layout.edges.len());
    let mut grad_l = Vec::with_capacity(layout.edges.len());
    for (k, &e) in layout.edges.iter().enumerate() {
        let edge = fw.edges()[e];
        let (qv, lv) = (layout.q(k), layout.lambda(k));
        let rest = edge.rest_length;

        // ∂F/∂k: λ ∂Λ/∂k with ∂Λ/∂k_i = −2(k_i − k_j), ∂Λ/∂k_j = 2(k_i − k_j)
        for a in 0..n {
            let (si, sj) = (slot(edge.i, a), slot(edge.j, a));
            for (own, sign) in [(&si, -2.0), (&sj, 2.0)] {
                let Slot::Var(row) = own else { continue };
                let p = &mut grad_k[*row];
                // sign·λ·(k_i − k_j)
                for (s, c) in [(&si, sign), (&sj, -sign)] {
                    match s {
                        Slot::Var(v) => p.push(Term::new(c, &[(lv, 1), (*v, 1)])),
                        Slot::Fixed(val) => p.push(Term::new(c * val, &[(lv, 1)])),
                    }
                }
            }
        }

        let mut pq = Polynomial::new();
        pq.push(Term::new(stiff / rest, &[(qv, 1)]));
        pq.push(Term::constant(-stiff));
        pq.push(Term::new(2.0, &[(lv, 1), (qv, 1)]));
        grad_q.push(pq);

        let mut pl = Polynomial::new();
        pl.push(Term::new(1.0, &[(qv, 2)]));
        for a in 0..n {
            // −(k_i − k_j)²
            match (slot(edge.i, a), slot(edge.j, a)) {
                (Slot::Var(u), Slot::Var(v)) => {
                    pl.push(Term::new(-1.0, &[(u, 2)]));
                    pl.push(Term::new(-1.0, &[(v, 2)]));
                    pl.push(Term::new(2.0, &[(u, 1), (v, 1)]));
                }
                (Slot::Var(u), Slot::Fixed(c)) | (Slot::Fixed(c), Slot::Var(u)) => {
                    pl.push(Term::new(-1.0, &[(u, 2)]));
                    pl.push(Term::new(2.0 * c, &[(u, 1)]));
                    pl.push(Term::constant(-c * c));
                }
                (Slot::Fixed(c), Slot::Fixed(d)) => pl.push(Term::constant(-(c - d) * (c - d))),
            }
        }
        grad_l.push(pl);
    }

    let mut equations = grad_k;
    equations.extend(grad_q);
    equations.extend(grad_l);
    let groups = vec![(0..layout.lambda(0)).collect(), (layout.lambda(0)..nv).collect()];
    Ok(LagrangeSystem { system: PolynomialSystem { variable_names: names, equations, groups }, layout })
}

//! First-order length constraints: the Jacobian of the bar lengths with
//! respect to free coordinates and its singular data.

use nalgebra::{DMatrix, DVector};

use crate::framework::{distance, Framework, GaugeChart, Realization};

/// `∂l_e/∂x` for the listed edges (rows) and the chart's free coordinates
/// (columns). Rows of coincident knots are left zero.
pub fn length_jacobian(fw: &Framework, chart: &GaugeChart, r: &Realization, edges: &[usize]) -> DMatrix<f64> {
    let n = fw.dimension();
    let slots = chart.slot_table();
    let mut j = DMatrix::zeros(edges.len(), chart.len());
    for (row, &e) in edges.iter().enumerate() {
        let edge = fw.edges()[e];
        let (ki, kj) = (r.knot(edge.i), r.knot(edge.j));
        let l = distance(ki, kj);
        if l == 0.0 {
            continue;
        }
        for a in 0..n {
            let u = (ki[a] - kj[a]) / l;
            if let Some(s) = slots[edge.i * n + a] {
                j[(row, s)] += u;
            }
            if let Some(s) = slots[edge.j * n + a] {
                j[(row, s)] -= u;
            }
        }
    }
    j
}

/// Singular data of a length Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularData {
    pub sigma_max: f64,
    /// Smallest of the `min(rows, cols)` singular values.
    pub sigma_min: f64,
    /// Right singular vector of `sigma_min` (a first-order flex when small).
    pub flex: DVector<f64>,
    /// Left singular vector of `sigma_min` (a stress on the bars when small).
    pub stress: DVector<f64>,
}

pub fn singular_data(j: &DMatrix<f64>) -> SingularData {
    let (rows, cols) = j.shape();
    // pad to square so both null directions are always available
    let n = rows.max(cols);
    let mut sq = DMatrix::zeros(n, n);
    sq.view_mut((0, 0), (rows, cols)).copy_from(j);
    let svd = sq.svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let k = rows.min(cols);
    // among the first k singular values (the padded ones are structural zeros)
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma_max = svd.singular_values[order[0]];
    let idx = order[k.saturating_sub(1)];
    let sigma_min = svd.singular_values[idx];
    let flex = vt.row(idx).transpose().rows(0, cols).into_owned();
    let stress = u.column(idx).rows(0, rows).into_owned();
    SingularData { sigma_max, sigma_min, flex, stress }
}

/// Second derivative of every listed edge length along the free-coordinate
/// direction `v`.
pub fn length_curvature(
    fw: &Framework,
    chart: &GaugeChart,
    r: &Realization,
    edges: &[usize],
    v: &[f64],
) -> DVector<f64> {
    let n = fw.dimension();
    let dv = chart.embed(v);
    // embed() fills fixed coordinates with base values; directions must not
    let mut dir = dv.into_coords();
    for (k, x) in dir.iter_mut().enumerate() {
        if chart.slot(k / n, k % n).is_none() {
            *x = 0.0;
        }
    }
    DVector::from_iterator(
        edges.len(),
        edges.iter().map(|&e| {
            let edge = fw.edges()[e];
            let (ki, kj) = (r.knot(edge.i), r.knot(edge.j));
            let l = distance(ki, kj);
            let mut dd = 0.0;
            let mut proj = 0.0;
            for a in 0..n {
                let w = dir[edge.i * n + a] - dir[edge.j * n + a];
                dd += w * w;
                proj += w * (ki[a] - kj[a]);
            }
            (dd - proj * proj / (l * l)) / l
        }),
    )
}

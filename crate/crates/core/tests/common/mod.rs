#![allow(dead_code)]

use snapframe::energy::{energy_gradient, energy_hessian};
use snapframe::{realization_energy, EdgeSpec, Framework, Material, Realization};

pub fn triangle() -> Framework {
    let e = [EdgeSpec::new(1, 2, 10.0), EdgeSpec::new(1, 3, 7.0), EdgeSpec::new(2, 3, 4.0)];
    Framework::new(2, 3, &e, &[], Material::default()).unwrap()
}

pub fn pinned_triangle() -> Framework {
    let e = [EdgeSpec::new(1, 2, 10.0), EdgeSpec::new(1, 3, 7.0), EdgeSpec::new(2, 3, 4.0)];
    Framework::new(2, 3, &e, &[(1, vec![0.0, 0.0]), (2, vec![10.0, 0.0])], Material::default()).unwrap()
}

pub fn manipulator() -> Framework {
    let e = [
        EdgeSpec::new(1, 4, 4.0),
        EdgeSpec::new(2, 5, 5.0),
        EdgeSpec::new(3, 6, 3.0),
        EdgeSpec::new(4, 5, 3.0),
        EdgeSpec::new(4, 6, 1.0),
        EdgeSpec::new(5, 6, 2.0),
    ];
    let pins = [(1, vec![0.0, 0.0]), (2, vec![3.0, 0.0]), (3, vec![2.0, 1.0])];
    Framework::new(2, 6, &e, &pins, Material::default()).unwrap()
}

/// Regular tetrahedron with unit bars, unpinned, in 3-space.
pub fn tetrahedron() -> Framework {
    let e = [
        EdgeSpec::new(1, 2, 1.0),
        EdgeSpec::new(1, 3, 1.0),
        EdgeSpec::new(1, 4, 1.0),
        EdgeSpec::new(2, 3, 1.0),
        EdgeSpec::new(2, 4, 1.0),
        EdgeSpec::new(3, 4, 1.0),
    ];
    Framework::new(3, 4, &e, &[], Material::default()).unwrap()
}

/// Pinned-triangle realization with the free knot at `(x, y)`.
pub fn pinned_at(fw: &Framework, x: f64, y: f64) -> Realization {
    Realization::new(fw, vec![0.0, 0.0, 10.0, 0.0, x, y]).unwrap()
}

/// Pinned-triangle energy from the closed form, independent of the library's
/// energy routines. Defined at the pins as well.
pub fn pinned_energy(fw: &Framework, x: f64, y: f64) -> f64 {
    let a = fw.material().area;
    let l13 = x.hypot(y);
    let l23 = (x - 10.0).hypot(y);
    0.5 * a * ((l13 - 7.0).powi(2) / 7.0 + (l23 - 4.0).powi(2) / 4.0)
}

/// Local minima and saddles of the pinned-triangle energy on a regular grid.
/// A grid point is a minimum when it is below its 8 neighbours, and a saddle
/// when the sign of `U(neighbour) − U(centre)` changes at least 4 times
/// around the ring.
pub fn grid_critical_points(fw: &Framework, x: (f64, f64), y: (f64, f64), h: f64) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let nx = ((x.1 - x.0) / h).round() as usize + 1;
    let ny = ((y.1 - y.0) / h).round() as usize + 1;
    let px = |i: usize| x.0 + i as f64 * h;
    let py = |j: usize| y.0 + j as f64 * h;
    let mut u = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            u[i * ny + j] = pinned_energy(fw, px(i), py(j));
        }
    }
    const RING: [(isize, isize); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];
    let mut minima = Vec::new();
    let mut saddles = Vec::new();
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let c = u[i * ny + j];
            let d: Vec<f64> = RING
                .iter()
                .map(|&(di, dj)| u[(i as isize + di) as usize * ny + (j as isize + dj) as usize] - c)
                .collect();
            if d.iter().all(|&v| v > 0.0) {
                minima.push([px(i), py(j)]);
                continue;
            }
            let changes = (0..8).filter(|&k| (d[k] > 0.0) != (d[(k + 1) % 8] > 0.0)).count();
            if changes >= 4 {
                saddles.push([px(i), py(j)]);
            }
        }
    }
    (cluster(minima, 0.05), cluster(saddles, 0.05))
}

/// Merges points closer than `radius` into their mean.
fn cluster(points: Vec<[f64; 2]>, radius: f64) -> Vec<[f64; 2]> {
    let mut groups: Vec<Vec<[f64; 2]>> = Vec::new();
    for p in points {
        match groups.iter_mut().find(|g| g.iter().any(|q| (p[0] - q[0]).hypot(p[1] - q[1]) < radius)) {
            Some(g) => g.push(p),
            None => groups.push(vec![p]),
        }
    }
    groups
        .iter()
        .map(|g| {
            let n = g.len() as f64;
            [g.iter().map(|p| p[0]).sum::<f64>() / n, g.iter().map(|p| p[1]).sum::<f64>() / n]
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative errors of the analytic gradient and Hessian of U against
/// central differences (step `1e-6` times the graph diameter) at free
/// coordinates `x`. `None` when some bar is shorter than `0.05`.
pub fn derivative_errors(fw: &Framework, x: &[f64]) -> Option<(f64, f64)> {
    let chart = fw.gauge_chart().unwrap();
    let r = chart.embed(x);
    if fw.edge_lengths(&r).0.iter().any(|&l| l < 0.05) {
        return None;
    }
    let h = 1e-6 * fw.graph_diameter();
    let u = |y: &[f64]| realization_energy(fw, &chart.embed(y)).unwrap().total;
    let grad = energy_gradient(fw, &chart, &r).unwrap();
    let hess = energy_hessian(fw, &chart, &r).unwrap();
    let d = x.len();
    let mut gerr = vec![0.0; d];
    let mut herr = vec![0.0; d * d];
    for i in 0..d {
        let mut p = x.to_vec();
        let mut m = x.to_vec();
        p[i] += h;
        m[i] -= h;
        gerr[i] = grad[i] - (u(&p) - u(&m)) / (2.0 * h);
        let gp = energy_gradient(fw, &chart, &chart.embed(&p)).unwrap();
        let gm = energy_gradient(fw, &chart, &chart.embed(&m)).unwrap();
        for j in 0..d {
            herr[j * d + i] = hess[(j, i)] - (gp[j] - gm[j]) / (2.0 * h);
        }
    }
    let hn: Vec<f64> = hess.iter().copied().collect();
    Some((norm(&gerr) / grad.norm().max(1e-3), norm(&herr) / norm(&hn).max(1e-3)))
}

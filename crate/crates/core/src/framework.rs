//! Bar-joint frameworks, their realizations, and gauge fixing modulo direct
//! isometries.
//!
//! Knots are addressed by 0-based indices internally. The constructor takes
//! 1-based knot numbers so that `(1, 2)` denotes the bar between `K_1` and
//! `K_2`, and string identifiers default to `"K1"`, `"K2"`, ...

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameworkError {
    #[error("ambient dimension {0} is not supported (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("framework needs at least one knot and one edge")]
    Empty,
    #[error("duplicate edge between knots {0} and {1}")]
    DuplicateEdge(usize, usize),
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("knot {0} does not exist")]
    UnknownKnot(usize),
    #[error("edge ({i}, {j}) has non-positive length {length}")]
    NonPositiveLength { i: usize, j: usize, length: f64 },
    #[error("underlying graph is disconnected")]
    DisconnectedGraph,
    #[error("pin of knot {knot} has {got} coordinates, expected {expected}")]
    BadPinDimension { knot: usize, got: usize, expected: usize },
    #[error("material constants must be positive")]
    BadMaterial,
    #[error("unpinned {dimension}-dimensional chart needs at least {needed} knots")]
    InsufficientKnots { dimension: usize, needed: usize },
    #[error("realization has {got} coordinates, expected {expected}")]
    CoordinateCount { got: usize, expected: usize },
    #[error("pinned knot {0} is not at its pin position")]
    PinViolated(usize),
    #[error("knots {0} and {1} coincide although they share an edge")]
    ZeroEdgeLength(usize, usize),
    #[error("cannot fix the gauge: {0}")]
    DegenerateGauge(&'static str),
}

/// Elastic constants shared by all bars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub youngs_modulus: f64,
    pub area: f64,
}

impl Default for Material {
    fn default() -> Self {
        Material { youngs_modulus: 1.0, area: 1.0 }
    }
}

impl Material {
    pub fn with_area(area: f64) -> Self {
        Material { youngs_modulus: 1.0, area }
    }

    /// Axial stiffness numerator `E·A`.
    pub fn stiffness(&self) -> f64 {
        self.youngs_modulus * self.area
    }
}

/// A bar between knots `i < j` (0-based) with rest length `rest_length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub rest_length: f64,
}

/// Edge description as handed to [`Framework::new`], with 1-based knot
/// numbers in either order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSpec {
    pub from: usize,
    pub to: usize,
    pub length: f64,
}

impl EdgeSpec {
    pub fn new(from: usize, to: usize, length: f64) -> Self {
        EdgeSpec { from, to, length }
    }
}

/// Graph, intrinsic metric, pins and material of a bar-joint framework.
#[derive(Debug, Clone, PartialEq)]
pub struct Framework {
    dimension: usize,
    knot_ids: Vec<String>,
    edges: Vec<Edge>,
    pins: BTreeMap<usize, Vec<f64>>,
    material: Material,
}

impl Framework {
    /// Builds a framework with default knot identifiers `K1..Ks`.
    ///
    /// `pins` maps 1-based knot numbers to fixed positions.
    pub fn new(
        dimension: usize,
        knot_count: usize,
        edges: &[EdgeSpec],
        pins: &[(usize, Vec<f64>)],
        material: Material,
    ) -> Result<Self, FrameworkError> {
        let ids = (1..=knot_count).map(|k| format!("K{k}")).collect();
        Self::with_ids(dimension, ids, edges, pins, material)
    }

    pub fn with_ids(
        dimension: usize,
        knot_ids: Vec<String>,
        edges: &[EdgeSpec],
        pins: &[(usize, Vec<f64>)],
        material: Material,
    ) -> Result<Self, FrameworkError> {
        if !(2..=3).contains(&dimension) {
            return Err(FrameworkError::UnsupportedDimension(dimension));
        }
        let s = knot_ids.len();
        if s == 0 || edges.is_empty() {
            return Err(FrameworkError::Empty);
        }
        if !(material.youngs_modulus > 0.0 && material.area > 0.0) {
            return Err(FrameworkError::BadMaterial);
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(edges.len());
        for e in edges {
            for k in [e.from, e.to] {
                if k == 0 || k > s {
                    return Err(FrameworkError::UnknownKnot(k));
                }
            }
            if e.from == e.to {
                return Err(FrameworkError::SelfLoop(e.from, e.to));
            }
            let (i, j) = if e.from < e.to { (e.from, e.to) } else { (e.to, e.from) };
            if !e.length.is_finite() || e.length <= 0.0 {
                return Err(FrameworkError::NonPositiveLength { i, j, length: e.length });
            }
            if !seen.insert((i, j)) {
                return Err(FrameworkError::DuplicateEdge(i, j));
            }
            out.push(Edge { i: i - 1, j: j - 1, rest_length: e.length });
        }
        out.sort_by_key(|e| (e.i, e.j));

        let mut pin_map = BTreeMap::new();
        for (k, p) in pins {
            if *k == 0 || *k > s {
                return Err(FrameworkError::UnknownKnot(*k));
            }
            if p.len() != dimension {
                return Err(FrameworkError::BadPinDimension { knot: *k, got: p.len(), expected: dimension });
            }
            pin_map.insert(k - 1, p.clone());
        }

        let fw = Framework { dimension, knot_ids, edges: out, pins: pin_map, material };
        if !fw.is_connected() {
            return Err(FrameworkError::DisconnectedGraph);
        }
        Ok(fw)
    }

    fn is_connected(&self) -> bool {
        let s = self.knot_count();
        let adj = self.adjacency();
        let mut seen = vec![false; s];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|x| x)
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.knot_count()];
        for e in &self.edges {
            adj[e.i].push((e.j, e.rest_length));
            adj[e.j].push((e.i, e.rest_length));
        }
        adj
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn knot_count(&self) -> usize {
        self.knot_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn knot_ids(&self) -> &[String] {
        &self.knot_ids
    }

    /// Edges in canonical (lexicographic) order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn pins(&self) -> &BTreeMap<usize, Vec<f64>> {
        &self.pins
    }

    pub fn material(&self) -> Material {
        self.material
    }

    pub fn is_pinned(&self, knot: usize) -> bool {
        self.pins.contains_key(&knot)
    }

    pub fn has_pins(&self) -> bool {
        !self.pins.is_empty()
    }

    /// Bars joining two pinned knots cannot deform.
    pub fn is_deformable(&self, edge: usize) -> bool {
        let e = &self.edges[edge];
        !(self.is_pinned(e.i) && self.is_pinned(e.j))
    }

    /// Indices of deformable edges, in canonical order.
    pub fn deformable_edges(&self) -> Vec<usize> {
        (0..self.edge_count()).filter(|&e| self.is_deformable(e)).collect()
    }

    pub fn rest_lengths(&self) -> EdgeLengthVector {
        EdgeLengthVector(self.edges.iter().map(|e| e.rest_length).collect())
    }

    /// `L = Σ L_ij` over all edges, pinned bars included.
    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.rest_length).sum()
    }

    /// Returns a copy with the cross-section replaced.
    pub fn with_area(&self, area: f64) -> Self {
        let mut fw = self.clone();
        fw.material.area = area;
        fw
    }

    /// Uniformly scales rest lengths and pin positions by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut fw = self.clone();
        for e in &mut fw.edges {
            e.rest_length *= c;
        }
        for p in fw.pins.values_mut() {
            for x in p.iter_mut() {
                *x *= c;
            }
        }
        fw
    }

    /// Largest shortest-path distance (weighted by rest length) between two
    /// knots; bounds the diameter of every undeformed realization.
    pub fn graph_diameter(&self) -> f64 {
        let adj = self.adjacency();
        let s = self.knot_count();
        let mut best = 0.0f64;
        for src in 0..s {
            let mut dist = vec![f64::INFINITY; s];
            let mut done = vec![false; s];
            dist[src] = 0.0;
            for _ in 0..s {
                let Some(v) = (0..s).filter(|&v| !done[v]).min_by(|&a, &b| dist[a].total_cmp(&dist[b])) else {
                    break;
                };
                done[v] = true;
                for &(w, l) in &adj[v] {
                    if dist[v] + l < dist[w] {
                        dist[w] = dist[v] + l;
                    }
                }
            }
            best = dist.into_iter().fold(best, f64::max);
        }
        best
    }

    /// Label such as `e12` using 1-based knot numbers.
    pub fn edge_label(&self, edge: usize) -> String {
        let e = &self.edges[edge];
        format!("e{}{}", e.i + 1, e.j + 1)
    }

    pub fn gauge_chart(&self) -> Result<GaugeChart, FrameworkError> {
        GaugeChart::new(self)
    }

    pub fn edge_lengths(&self, r: &Realization) -> EdgeLengthVector {
        EdgeLengthVector(self.edges.iter().map(|e| distance(r.knot(e.i), r.knot(e.j))).collect())
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Knot coordinates, stored knot-major as `s·n` numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    dimension: usize,
    coords: Vec<f64>,
}

impl Realization {
    /// Validates pins and non-degenerate bars.
    pub fn new(framework: &Framework, coords: Vec<f64>) -> Result<Self, FrameworkError> {
        let expected = framework.knot_count() * framework.dimension();
        if coords.len() != expected {
            return Err(FrameworkError::CoordinateCount { got: coords.len(), expected });
        }
        let r = Realization { dimension: framework.dimension(), coords };
        for (&k, p) in framework.pins() {
            if r.knot(k) != p.as_slice() {
                return Err(FrameworkError::PinViolated(k + 1));
            }
        }
        for e in framework.edges() {
            if distance(r.knot(e.i), r.knot(e.j)) <= 0.0 {
                return Err(FrameworkError::ZeroEdgeLength(e.i + 1, e.j + 1));
            }
        }
        Ok(r)
    }

    pub fn from_knots(framework: &Framework, knots: &[Vec<f64>]) -> Result<Self, FrameworkError> {
        Self::new(framework, knots.iter().flatten().copied().collect())
    }

    /// Wraps coordinates without checking framework invariants.
    pub fn from_raw(dimension: usize, coords: Vec<f64>) -> Self {
        Realization { dimension, coords }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn knot_count(&self) -> usize {
        self.coords.len() / self.dimension
    }

    pub fn knot(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dimension..(k + 1) * self.dimension]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn knots(&self) -> Vec<Vec<f64>> {
        self.coords.chunks(self.dimension).map(<[f64]>::to_vec).collect()
    }

    /// Applies `x ↦ R x + t` to every knot; `rotation` is row-major n×n.
    pub fn transformed(&self, rotation: &[f64], translation: &[f64]) -> Self {
        let n = self.dimension;
        let mut out = vec![0.0; self.coords.len()];
        for (dst, src) in out.chunks_mut(n).zip(self.coords.chunks(n)) {
            for a in 0..n {
                dst[a] = (0..n).map(|b| rotation[a * n + b] * src[b]).sum::<f64>() + translation[a];
            }
        }
        Realization { dimension: n, coords: out }
    }

    /// Max-norm distance between coordinate lists.
    pub fn max_deviation(&self, other: &Realization) -> f64 {
        self.coords.iter().zip(&other.coords).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Lengths indexed like [`Framework::edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeLengthVector(pub Vec<f64>);

impl EdgeLengthVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn all_positive(&self) -> bool {
        self.0.iter().all(|&l| l > 0.0)
    }

    /// `self + t·(other − self)`.
    pub fn lerp(&self, other: &EdgeLengthVector, t: f64) -> EdgeLengthVector {
        EdgeLengthVector(self.0.iter().zip(&other.0).map(|(a, b)| a + t * (b - a)).collect())
    }
}

/// One free scalar coordinate `k_{knot, axis}` (both 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct FreeCoord {
    pub knot: usize,
    pub axis: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    /// Free coordinates are the coordinates of all unpinned knots.
    Pinned,
    /// `k_1 = 0`, `k_2` on the positive first axis and, in 3-space, `k_3` in
    /// the upper half of the first coordinate plane.
    Canonical,
}

/// Reduction of knot coordinates to the free coordinates of a framework.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeChart {
    kind: ChartKind,
    dimension: usize,
    knot_count: usize,
    free: Vec<FreeCoord>,
    base: Vec<f64>,
}

impl GaugeChart {
    pub fn new(fw: &Framework) -> Result<Self, FrameworkError> {
        let n = fw.dimension();
        let s = fw.knot_count();
        let mut base = vec![0.0; s * n];
        let mut free = Vec::new();
        let kind = if fw.has_pins() {
            for k in 0..s {
                match fw.pins().get(&k) {
                    Some(p) => base[k * n..(k + 1) * n].copy_from_slice(p),
                    None => free.extend((0..n).map(|axis| FreeCoord { knot: k, axis })),
                }
            }
            ChartKind::Pinned
        } else {
            if s < n {
                return Err(FrameworkError::InsufficientKnots { dimension: n, needed: n });
            }
            for k in 1..s {
                // knot k (0-based) may move along its first min(k, n) axes
                let axes = k.min(n);
                free.extend((0..axes).map(|axis| FreeCoord { knot: k, axis }));
            }
            ChartKind::Canonical
        };
        Ok(GaugeChart { kind, dimension: n, knot_count: s, free, base })
    }

    pub fn kind(&self) -> ChartKind {
        self.kind
    }

    pub fn free_coords(&self) -> &[FreeCoord] {
        &self.free
    }

    pub fn len(&self) -> usize {
        self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free.is_empty()
    }

    /// Position of `(knot, axis)` among the free coordinates, if free.
    pub fn slot(&self, knot: usize, axis: usize) -> Option<usize> {
        self.free.iter().position(|c| c.knot == knot && c.axis == axis)
    }

    /// Table `knot·n + axis → slot` for fast lookups.
    pub fn slot_table(&self) -> Vec<Option<usize>> {
        let mut t = vec![None; self.knot_count * self.dimension];
        for (slot, c) in self.free.iter().enumerate() {
            t[c.knot * self.dimension + c.axis] = Some(slot);
        }
        t
    }

    /// Fixed value of coordinate `(knot, axis)` when not free.
    pub fn base_value(&self, knot: usize, axis: usize) -> f64 {
        self.base[knot * self.dimension + axis]
    }

    pub fn embed(&self, free: &[f64]) -> Realization {
        let mut coords = self.base.clone();
        for (c, &v) in self.free.iter().zip(free) {
            coords[c.knot * self.dimension + c.axis] = v;
        }
        Realization::from_raw(self.dimension, coords)
    }

    /// Reads the free coordinates; the realization must already be in gauge.
    pub fn project(&self, r: &Realization) -> Vec<f64> {
        self.free.iter().map(|c| r.coords()[c.knot * self.dimension + c.axis]).collect()
    }

    /// Moves a realization into the chart: identity for pinned frameworks,
    /// canonical SE(n) representative otherwise.
    pub fn canonicalize(&self, r: &Realization) -> Result<Realization, FrameworkError> {
        match self.kind {
            ChartKind::Pinned => Ok(r.clone()),
            ChartKind::Canonical => canonical_form(r),
        }
    }

    /// Free coordinates of the canonical representative.
    pub fn reduce(&self, r: &Realization) -> Result<Vec<f64>, FrameworkError> {
        Ok(self.project(&self.canonicalize(r)?))
    }
}

/// Canonical representative of `r` modulo direct isometries: `k_1` at the
/// origin, `k_2` on the positive first axis and, for n = 3, `k_3` in the
/// upper half of the first coordinate plane.
pub fn canonical_form(r: &Realization) -> Result<Realization, FrameworkError> {
    let n = r.dimension();
    if r.knot_count() < n {
        return Err(FrameworkError::DegenerateGauge("too few knots"));
    }
    let origin = r.knot(0).to_vec();
    let rel = |k: usize| -> Vec<f64> { r.knot(k).iter().zip(&origin).map(|(a, b)| a - b).collect() };
    let d = rel(1);
    let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(FrameworkError::DegenerateGauge("K1 and K2 coincide"));
    }
    let e1: Vec<f64> = d.iter().map(|x| x / norm).collect();
    let frame: Vec<Vec<f64>> = if n == 2 {
        vec![e1.clone(), vec![-e1[1], e1[0]]]
    } else {
        let p = rel(2);
        let dot: f64 = p.iter().zip(&e1).map(|(a, b)| a * b).sum();
        let w: Vec<f64> = p.iter().zip(&e1).map(|(a, b)| a - dot * b).collect();
        let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if wn <= 1e-12 * (1.0 + p.iter().map(|x| x * x).sum::<f64>().sqrt()) {
            return Err(FrameworkError::DegenerateGauge("K1, K2 and K3 are collinear"));
        }
        let e2: Vec<f64> = w.iter().map(|x| x / wn).collect();
        let e3 = vec![e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2], e1[0] * e2[1] - e1[1] * e2[0]];
        vec![e1.clone(), e2, e3]
    };
    let mut out = Vec::with_capacity(r.coords().len());
    for k in 0..r.knot_count() {
        let p = rel(k);
        for axis in &frame {
            out.push(p.iter().zip(axis).map(|(a, b)| a * b).sum());
        }
    }
    // k_1 and the fixed components are exact zeros by construction
    out[..n].iter_mut().for_each(|x| *x = 0.0);
    out[n + 1..2 * n].iter_mut().for_each(|x| *x = 0.0);
    if n == 3 {
        out[2 * n + 2] = 0.0;
    }
    Ok(Realization::from_raw(n, out))
}

/// Whether a direct isometry maps `r1` onto `r2` up to `tolerance` in every
/// coordinate. Pinned frameworks admit no isometry; their realizations are
/// compared directly. Reflections never identify realizations.
pub fn congruent_mod_se(fw: &Framework, r1: &Realization, r2: &Realization, tolerance: f64) -> bool {
    if fw.has_pins() {
        return r1.max_deviation(r2) <= tolerance;
    }
    match (canonical_form(r1), canonical_form(r2)) {
        (Ok(a), Ok(b)) => a.max_deviation(&b) <= tolerance,
        _ => kabsch_deviation(r1, r2) <= tolerance,
    }
}

/// Max coordinate deviation after the best proper rigid alignment of `r2`
/// onto `r1` (least-squares sense).
fn kabsch_deviation(r1: &Realization, r2: &Realization) -> f64 {
    use nalgebra::{DMatrix, DVector};
    let n = r1.dimension();
    let s = r1.knot_count();
    let a = DMatrix::from_row_slice(s, n, r1.coords());
    let b = DMatrix::from_row_slice(s, n, r2.coords());
    let ca: DVector<f64> = a.row_mean().transpose();
    let cb: DVector<f64> = b.row_mean().transpose();
    let mut a0 = a.clone();
    let mut b0 = b.clone();
    for mut row in a0.row_iter_mut() {
        row -= ca.transpose();
    }
    for mut row in b0.row_iter_mut() {
        row -= cb.transpose();
    }
    let cov = b0.transpose() * &a0;
    let svd = cov.svd(true, true);
    let (Some(u), Some(vt)) = (svd.u, svd.v_t) else {
        return f64::INFINITY;
    };
    let mut d = DMatrix::<f64>::identity(n, n);
    if (u.determinant() * vt.determinant()) < 0.0 {
        d[(n - 1, n - 1)] = -1.0;
    }
    let rot = u * d * vt; // maps centred b rows onto centred a rows: b0 * rot ≈ a0
    let aligned = b0 * rot;
    (aligned - a0).iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

//! Interval and triangle meshes with P1 mass/stiffness matrices, and the
//! nodal [`Field`] type carried through the whole pipeline.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::banded::SymBanded;
use crate::compensated::Accumulator;
use crate::error::{Result, RomError};

/// Geometry-independent view of a P1 discretization.
pub trait Mesh: Send + Sync + fmt::Debug {
    fn n_nodes(&self) -> usize;

    /// Spatial dimension (1 or 2).
    fn dimension(&self) -> usize;

    /// Node coordinates; 1D meshes report `[x, 0.0]`.
    fn point(&self, node: usize) -> [f64; 2];

    /// Consistent P1 mass matrix.
    fn mass(&self) -> &SymBanded;

    /// P1 stiffness matrix of the Laplacian.
    fn stiffness(&self) -> &SymBanded;

    fn lumped_mass(&self) -> &[f64];

    /// Graph distance (in edges) from each node to the nearest boundary node.
    fn boundary_depth(&self) -> &[usize];

    /// Evaluates the P1 interpolant of `values` at `point`, or `None` when the
    /// point lies outside the mesh.
    fn interpolate(&self, values: &[f64], point: [f64; 2]) -> Option<f64>;

    /// L2 inner product of two nodal functions.
    fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass().bilinear(u, v)
    }

    /// Mass-lumped discrete Laplacian `-M_L^{-1} K u`.
    ///
    /// On a 1D grid this is the three-point second difference at interior nodes.
    fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        self.stiffness().matvec(u).iter().zip(self.lumped_mass()).map(|(ku, w)| -ku / w).collect()
    }
}

fn depths_from(adjacency: &[Vec<usize>], boundary: &[usize]) -> Vec<usize> {
    let mut depth = vec![usize::MAX; adjacency.len()];
    let mut queue = VecDeque::new();
    for &b in boundary {
        depth[b] = 0;
        queue.push_back(b);
    }
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v] {
            if depth[w] == usize::MAX {
                depth[w] = depth[v] + 1;
                queue.push_back(w);
            }
        }
    }
    depth
}

/// Partition of the unit interval `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Mesh1D {
    nodes: Vec<f64>,
    mass: SymBanded,
    stiffness: SymBanded,
    lumped: Vec<f64>,
    depth: Vec<usize>,
}

impl Mesh1D {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(RomError::Mesh("need at least one cell".into()));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(RomError::Mesh("interval mesh must start at 0 and end at 1".into()));
        }
        if let Some(w) = nodes.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(RomError::Mesh(format!(
                "nodes must be strictly increasing (cell {w} has width {})",
                nodes[w + 1] - nodes[w]
            )));
        }
        let n = nodes.len();
        let mut mass = SymBanded::zeros(n, 1);
        let mut stiffness = SymBanded::zeros(n, 1);
        for (c, w) in nodes.windows(2).enumerate() {
            let h = w[1] - w[0];
            mass.add(c, c, h / 3.0);
            mass.add(c + 1, c + 1, h / 3.0);
            mass.add(c + 1, c, h / 6.0);
            stiffness.add(c, c, 1.0 / h);
            stiffness.add(c + 1, c + 1, 1.0 / h);
            stiffness.add(c + 1, c, -1.0 / h);
        }
        let lumped = mass.row_sums();
        let depth = (0..n).map(|i| i.min(n - 1 - i)).collect();
        Ok(Self { nodes, mass, stiffness, lumped, depth })
    }

    pub fn uniform(n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(RomError::Mesh("need at least one cell".into()));
        }
        let mut nodes: Vec<f64> = (0..=n_cells).map(|i| i as f64 / n_cells as f64).collect();
        nodes[n_cells] = 1.0;
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Trapezoid quadrature weights (equal to the lumped mass).
    pub fn trapezoid_weights(&self) -> &[f64] {
        &self.lumped
    }

    /// Piecewise-linear interpolation at `x`.
    pub fn interpolate_at(&self, values: &[f64], x: f64) -> Option<f64> {
        if !(0.0..=1.0).contains(&x) {
            return None;
        }
        let c = match self.nodes.partition_point(|&p| p <= x) {
            0 => 0,
            k => (k - 1).min(self.n_cells() - 1),
        };
        let (x0, x1) = (self.nodes[c], self.nodes[c + 1]);
        let t = (x - x0) / (x1 - x0);
        Some((1.0 - t) * values[c] + t * values[c + 1])
    }
}

impl Mesh for Mesh1D {
    fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
    fn dimension(&self) -> usize {
        1
    }
    fn point(&self, node: usize) -> [f64; 2] {
        [self.nodes[node], 0.0]
    }
    fn mass(&self) -> &SymBanded {
        &self.mass
    }
    fn stiffness(&self) -> &SymBanded {
        &self.stiffness
    }
    fn lumped_mass(&self) -> &[f64] {
        &self.lumped
    }
    fn boundary_depth(&self) -> &[usize] {
        &self.depth
    }
    fn interpolate(&self, values: &[f64], point: [f64; 2]) -> Option<f64> {
        self.interpolate_at(values, point[0])
    }
}

/// Side of the rectangular domain a boundary edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    pub fn parse(s: &str) -> Option<Side> {
        match s.to_ascii_lowercase().as_str() {
            "bottom" => Some(Side::Bottom),
            "right" => Some(Side::Right),
            "top" => Some(Side::Top),
            "left" => Some(Side::Left),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryEdge {
    /// Endpoints in counter-clockwise order along the boundary.
    pub nodes: [usize; 2],
    pub length: f64,
    pub normal: [f64; 2],
    pub side: Side,
    pub triangle: usize,
}

impl BoundaryEdge {
    pub fn midpoint(&self, mesh: &Mesh2D) -> [f64; 2] {
        let a = mesh.vertices[self.nodes[0]];
        let b = mesh.vertices[self.nodes[1]];
        [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
    }
}

/// Conforming P1 triangulation of an axis-aligned rectangle.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    bbox: [f64; 4],
    mass: SymBanded,
    stiffness: SymBanded,
    lumped: Vec<f64>,
    depth: Vec<usize>,
    locator: Locator,
}

fn signed_area(p: [[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

impl Mesh2D {
    /// Builds a mesh from vertices and triangles. Clockwise triangles are
    /// reoriented; degenerate ones are rejected.
    pub fn new(vertices: Vec<[f64; 2]>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        if nv < 3 || triangles.is_empty() {
            return Err(RomError::Mesh("empty triangulation".into()));
        }
        for (t, tri) in triangles.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(RomError::Mesh(format!("triangle {t} references a missing vertex")));
            }
            let area = signed_area(tri.map(|v| vertices[v]));
            if area.abs() <= f64::EPSILON * 16.0 {
                return Err(RomError::Mesh(format!("triangle {t} has zero area")));
            }
            if area < 0.0 {
                tri.swap(1, 2);
            }
        }
        let mut bbox = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for v in &vertices {
            bbox[0] = bbox[0].min(v[0]);
            bbox[1] = bbox[1].max(v[0]);
            bbox[2] = bbox[2].min(v[1]);
            bbox[3] = bbox[3].max(v[1]);
        }

        let mut edges: HashMap<(usize, usize), Vec<(usize, usize, usize)>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push((t, a, b));
            }
        }
        let scale = (bbox[1] - bbox[0]).max(bbox[3] - bbox[2]);
        let tol = 1e-10 * scale;
        let mut boundary_edges = Vec::new();
        let mut keys: Vec<_> = edges.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let owners = &edges[&key];
            match owners.len() {
                1 => {
                    let (t, a, b) = owners[0];
                    let (pa, pb) = (vertices[a], vertices[b]);
                    let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
                    let length = dx.hypot(dy);
                    let normal = [dy / length, -dx / length];
                    let side = if (pa[1] - bbox[2]).abs() < tol && (pb[1] - bbox[2]).abs() < tol {
                        Side::Bottom
                    } else if (pa[0] - bbox[1]).abs() < tol && (pb[0] - bbox[1]).abs() < tol {
                        Side::Right
                    } else if (pa[1] - bbox[3]).abs() < tol && (pb[1] - bbox[3]).abs() < tol {
                        Side::Top
                    } else if (pa[0] - bbox[0]).abs() < tol && (pb[0] - bbox[0]).abs() < tol {
                        Side::Left
                    } else {
                        return Err(RomError::Mesh(format!(
                            "edge ({a}, {b}) belongs to one triangle but is not on the \
                             rectangle boundary (non-conforming mesh)"
                        )));
                    };
                    boundary_edges.push(BoundaryEdge { nodes: [a, b], length, normal, side, triangle: t });
                }
                2 => {}
                n => return Err(RomError::Mesh(format!("edge {key:?} is shared by {n} triangles"))),
            }
        }

        let bw = triangles
            .iter()
            .flat_map(|t| [t[0].abs_diff(t[1]), t[1].abs_diff(t[2]), t[0].abs_diff(t[2])])
            .max()
            .unwrap_or(0);
        let mut mass = SymBanded::zeros(nv, bw);
        let mut stiffness = SymBanded::zeros(nv, bw);
        let mut adjacency = vec![Vec::new(); nv];
        for tri in &triangles {
            let p = tri.map(|v| vertices[v]);
            let area = signed_area(p);
            // gradients of barycentric coordinates, scaled by 2*area
            let g = [
                [p[1][1] - p[2][1], p[2][0] - p[1][0]],
                [p[2][1] - p[0][1], p[0][0] - p[2][0]],
                [p[0][1] - p[1][1], p[1][0] - p[0][0]],
            ];
            for a in 0..3 {
                for b in 0..=a {
                    let k = (g[a][0] * g[b][0] + g[a][1] * g[b][1]) / (4.0 * area);
                    stiffness.add(tri[a], tri[b], k);
                    let m = if a == b { area / 6.0 } else { area / 12.0 };
                    mass.add(tri[a], tri[b], m);
                }
                for b in 0..3 {
                    if a != b && !adjacency[tri[a]].contains(&tri[b]) {
                        adjacency[tri[a]].push(tri[b]);
                    }
                }
            }
        }
        let lumped = mass.row_sums();
        let mut bnodes: Vec<usize> = boundary_edges.iter().flat_map(|e| e.nodes).collect();
        bnodes.sort_unstable();
        bnodes.dedup();
        let depth = depths_from(&adjacency, &bnodes);
        let locator = Locator::new(&vertices, &triangles, bbox);
        Ok(Self { vertices, triangles, boundary_edges, bbox, mass, stiffness, lumped, depth, locator })
    }

    /// Structured triangulation of `[0, width] x [0, height]` with `nx * ny`
    /// squares, each cut along its rising diagonal.
    pub fn rectangle(width: f64, height: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || !(width > 0.0) || !(height > 0.0) {
            return Err(RomError::Mesh("rectangle needs positive size and resolution".into()));
        }
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([width * i as f64 / nx as f64, height * j as f64 / ny as f64]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        Self::new(vertices, triangles)
    }

    pub fn unit_square(n: usize) -> Result<Self> {
        Self::rectangle(1.0, 1.0, n, n)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    /// `[xmin, xmax, ymin, ymax]`
    pub fn bounding_box(&self) -> [f64; 4] {
        self.bbox
    }

    /// Smallest edge length, used as the element width for diagnostics.
    pub fn min_edge(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| {
                (0..3).map(move |k| {
                    let a = self.vertices[t[k]];
                    let b = self.vertices[t[(k + 1) % 3]];
                    (a[0] - b[0]).hypot(a[1] - b[1])
                })
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn barycentric(&self, t: usize, p: [f64; 2]) -> [f64; 3] {
        let tri = self.triangles[t];
        let v = tri.map(|i| self.vertices[i]);
        let area = signed_area(v);
        let l1 = signed_area([p, v[1], v[2]]) / area;
        let l2 = signed_area([v[0], p, v[2]]) / area;
        [l1, l2, 1.0 - l1 - l2]
    }
}

impl Mesh for Mesh2D {
    fn n_nodes(&self) -> usize {
        self.vertices.len()
    }
    fn dimension(&self) -> usize {
        2
    }
    fn point(&self, node: usize) -> [f64; 2] {
        self.vertices[node]
    }
    fn mass(&self) -> &SymBanded {
        &self.mass
    }
    fn stiffness(&self) -> &SymBanded {
        &self.stiffness
    }
    fn lumped_mass(&self) -> &[f64] {
        &self.lumped
    }
    fn boundary_depth(&self) -> &[usize] {
        &self.depth
    }
    fn interpolate(&self, values: &[f64], point: [f64; 2]) -> Option<f64> {
        let eps = 1e-12;
        for &t in self.locator.candidates(point) {
            let l = self.barycentric(t, point);
            if l.iter().all(|&x| x >= -eps) {
                let tri = self.triangles[t];
                return Some(l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]]);
            }
        }
        None
    }
}

/// Uniform bucket grid over the bounding box for point location.
#[derive(Debug, Clone)]
struct Locator {
    bbox: [f64; 4],
    n: usize,
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    fn new(vertices: &[[f64; 2]], triangles: &[[usize; 3]], bbox: [f64; 4]) -> Self {
        let n = ((triangles.len() as f64 / 2.0).sqrt().ceil() as usize).clamp(1, 512);
        let mut loc = Self { bbox, n, buckets: vec![Vec::new(); n * n] };
        for (t, tri) in triangles.iter().enumerate() {
            let p = tri.map(|v| vertices[v]);
            let (i0, j0) = loc.cell([p[0][0].min(p[1][0]).min(p[2][0]), p[0][1].min(p[1][1]).min(p[2][1])]);
            let (i1, j1) = loc.cell([p[0][0].max(p[1][0]).max(p[2][0]), p[0][1].max(p[1][1]).max(p[2][1])]);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    loc.buckets[j * n + i].push(t);
                }
            }
        }
        loc
    }

    fn cell(&self, p: [f64; 2]) -> (usize, usize) {
        let fx = (p[0] - self.bbox[0]) / (self.bbox[1] - self.bbox[0]);
        let fy = (p[1] - self.bbox[2]) / (self.bbox[3] - self.bbox[2]);
        let c = |f: f64| ((f * self.n as f64).floor().max(0.0) as usize).min(self.n - 1);
        (c(fx), c(fy))
    }

    fn candidates(&self, p: [f64; 2]) -> &[usize] {
        let tol = 1e-12 * (self.bbox[1] - self.bbox[0]).max(self.bbox[3] - self.bbox[2]);
        if p[0] < self.bbox[0] - tol
            || p[0] > self.bbox[1] + tol
            || p[1] < self.bbox[2] - tol
            || p[1] > self.bbox[3] + tol
        {
            return &[];
        }
        let (i, j) = self.cell(p);
        &self.buckets[j * self.n + i]
    }
}

/// Nodal values of a P1 function on a shared mesh.
#[derive(Debug, Clone)]
pub struct Field<M: Mesh> {
    pub mesh: Arc<M>,
    pub values: Vec<f64>,
}

impl<M: Mesh> Field<M> {
    pub fn new(mesh: Arc<M>, values: Vec<f64>) -> Self {
        assert_eq!(mesh.n_nodes(), values.len(), "field length must match node count");
        Self { mesh, values }
    }

    pub fn zeros(mesh: Arc<M>) -> Self {
        let n = mesh.n_nodes();
        Self::new(mesh, vec![0.0; n])
    }

    /// `sum_k weights[k] * fields[k]`, accumulated in double-double since the
    /// weights of an orthonormalized basis cancel heavily; all fields must share a mesh.
    pub fn combination(fields: &[&Field<M>], weights: &[f64]) -> Self {
        assert_eq!(fields.len(), weights.len());
        assert!(!fields.is_empty());
        let mesh = fields[0].mesh.clone();
        let mut acc = vec![Accumulator::default(); mesh.n_nodes()];
        for (f, &w) in fields.iter().zip(weights) {
            debug_assert!(Arc::ptr_eq(&f.mesh, &mesh));
            for (a, &x) in acc.iter_mut().zip(&f.values) {
                a.add_prod(w, x);
            }
        }
        let values = acc.iter().map(Accumulator::value).collect();
        Self { mesh, values }
    }

    pub fn inner(&self, other: &Field<M>) -> f64 {
        self.mesh.inner(&self.values, &other.values)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// Relative L2 distance `||self - other|| / ||other||`.
    pub fn relative_distance(&self, other: &Field<M>) -> f64 {
        let diff: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        self.mesh.inner(&diff, &diff).max(0.0).sqrt() / other.norm()
    }

    pub fn laplacian(&self) -> Vec<f64> {
        self.mesh.laplacian(&self.values)
    }

    /// Interpolates this field onto the nodes of another mesh.
    pub fn transfer_to<N: Mesh>(&self, target: &Arc<N>) -> Result<Field<N>> {
        let values = (0..target.n_nodes())
            .map(|i| {
                let p = target.point(i);
                self.mesh
                    .interpolate(&self.values, p)
                    .ok_or_else(|| RomError::Mesh(format!("point ({}, {}) lies outside the source mesh", p[0], p[1])))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Field::new(target.clone(), values))
    }
}

/// A forward solution for one source at one spectral value.
#[derive(Debug, Clone)]
pub struct Snapshot<M: Mesh> {
    pub field: Field<M>,
    pub lambda: f64,
    pub source: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_rejects_bad_nodes() {
        assert!(Mesh1D::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(Mesh1D::new(vec![0.1, 1.0]).is_err());
        assert!(Mesh1D::uniform(0).is_err());
    }

    #[test]
    fn interval_mass_integrates_products() {
        let mesh = Mesh1D::new(vec![0.0, 0.1, 0.35, 0.7, 1.0]).unwrap();
        let x: Vec<f64> = mesh.nodes().to_vec();
        let ones = vec![1.0; x.len()];
        // int_0^1 x dx and int_0^1 x^2 dx are exact for P1 products
        assert!((mesh.inner(&ones, &x) - 0.5).abs() < 1e-14);
        assert!((mesh.inner(&x, &x) - 1.0 / 3.0).abs() < 1e-14);
        assert!(mesh.stiffness().matvec(&ones).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn second_difference_of_quadratic() {
        let mesh = Mesh1D::new(vec![0.0, 0.1, 0.3, 0.45, 0.7, 1.0]).unwrap();
        let u: Vec<f64> = mesh.nodes().iter().map(|x| x * x).collect();
        let lap = mesh.laplacian(&u);
        for v in &lap[1..lap.len() - 1] {
            assert!((v - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn square_has_unit_area_and_perimeter() {
        let mesh = Mesh2D::unit_square(8).unwrap();
        let ones = vec![1.0; mesh.n_nodes()];
        assert!((mesh.inner(&ones, &ones) - 1.0).abs() < 1e-13);
        let perimeter: f64 = mesh.boundary_edges().iter().map(|e| e.length).sum();
        assert!((perimeter - 4.0).abs() < 1e-13);
        assert_eq!(mesh.boundary_edges().len(), 32);
        for e in mesh.boundary_edges() {
            let expected = match e.side {
                Side::Bottom => [0.0, -1.0],
                Side::Right => [1.0, 0.0],
                Side::Top => [0.0, 1.0],
                Side::Left => [-1.0, 0.0],
            };
            assert!((e.normal[0] - expected[0]).abs() < 1e-14);
            assert!((e.normal[1] - expected[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn square_laplacian_of_quadratic_interior() {
        let mesh = Mesh2D::unit_square(10).unwrap();
        let u: Vec<f64> = mesh.vertices().iter().map(|p| p[0] * p[0] + 2.0 * p[1] * p[1]).collect();
        let lap = mesh.laplacian(&u);
        for (i, v) in lap.iter().enumerate() {
            if mesh.boundary_depth()[i] > 0 {
                assert!((v - 6.0).abs() < 1e-9, "node {i}: {v}");
            }
        }
    }

    #[test]
    fn hanging_node_is_rejected() {
        // Left square split in two triangles, right square split at a midpoint
        // of the shared edge: the shared edge appears once on each side.
        let v = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 1.0], [1.0, 0.5]];
        let t = vec![[0, 1, 4], [0, 4, 3], [1, 2, 6], [2, 5, 6], [6, 5, 4]];
        let err = Mesh2D::new(v, t).unwrap_err();
        assert!(matches!(err, RomError::Mesh(_)));
    }

    #[test]
    fn transfer_between_nested_meshes_is_exact_for_linears() {
        let fine = Arc::new(Mesh2D::unit_square(12).unwrap());
        let coarse = Arc::new(Mesh2D::unit_square(5).unwrap());
        let u = Field::new(fine.clone(), fine.vertices().iter().map(|p| 1.0 + 2.0 * p[0] - p[1]).collect());
        let v = u.transfer_to(&coarse).unwrap();
        for (p, x) in coarse.vertices().iter().zip(&v.values) {
            assert!((x - (1.0 + 2.0 * p[0] - p[1])).abs() < 1e-12);
        }
    }

    #[test]
    fn depth_counts_rings() {
        let mesh = Mesh2D::unit_square(6).unwrap();
        let d = mesh.boundary_depth();
        assert_eq!(d[0], 0);
        assert_eq!(d[7 + 1], 1);
        assert_eq!(d[3 * 7 + 3], 3);
    }
}

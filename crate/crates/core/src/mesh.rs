//! Structured 2D triangulations and P1 finite-element assembly.
//!
//! Geometry (areas, diameters, adjacency, incidence) is computed once at
//! construction; nothing here depends on the phase field.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

const THIRD: f64 = 1.0 / 3.0;

/// Axis-aligned square `[min.x, min.x + side] x [min.y, min.y + side]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Square {
    pub min: [f64; 2],
    pub side: f64,
}

impl Square {
    /// Square of half-width `half` centred at the origin.
    pub fn centered(half: f64) -> Self {
        Self {
            min: [-half, -half],
            side: 2.0 * half,
        }
    }

    pub fn unit() -> Self {
        Self {
            min: [0.0, 0.0],
            side: 1.0,
        }
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0]
            && p[0] <= self.min[0] + self.side
            && p[1] >= self.min[1]
            && p[1] <= self.min[1] + self.side
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    element_area: Vec<f64>,
    element_diameter: Vec<f64>,
    /// `neighbors[t][k]` is the triangle across the edge opposite local vertex `k`.
    neighbors: Vec<[Option<usize>; 3]>,
    /// Face-adjacent triangle pairs `(a, b)` with `a < b`, sorted.
    interior_edges: Vec<[usize; 2]>,
    node_to_elements: Vec<Vec<usize>>,
    boundary: Vec<bool>,
    boundary_nodes: Vec<usize>,
}

impl Mesh {
    /// Builds a mesh from explicit node coordinates and triangle connectivity.
    ///
    /// Zero-area triangles are accepted here; assembly rejects them.
    pub fn from_parts(nodes: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= nodes.len()) {
                return Err(Error::InvalidConfig(format!(
                    "triangle {t} references node {bad}, mesh has {} nodes",
                    nodes.len()
                )));
            }
        }

        let element_area = triangles
            .iter()
            .map(|tri| signed_area(tri.map(|v| nodes[v])).abs())
            .collect();
        let element_diameter = triangles
            .iter()
            .map(|tri| {
                let p = tri.map(|v| nodes[v]);
                dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]))
            })
            .collect();

        let mut node_to_elements = vec![Vec::new(); nodes.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                node_to_elements[v].push(t);
            }
        }

        // edge (lo, hi) -> (triangle, local vertex opposite the edge)
        let mut edge_owner: HashMap<(usize, usize), (usize, usize)> =
            HashMap::with_capacity(triangles.len() * 2);
        let mut neighbors = vec![[None; 3]; triangles.len()];
        let mut interior_edges = Vec::new();
        let mut boundary = vec![false; nodes.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                let key = (a.min(b), a.max(b));
                match edge_owner.remove(&key) {
                    Some((other, ko)) => {
                        neighbors[t][k] = Some(other);
                        neighbors[other][ko] = Some(t);
                        interior_edges.push([other.min(t), other.max(t)]);
                    }
                    None => {
                        edge_owner.insert(key, (t, k));
                    }
                }
            }
        }
        for &(a, b) in edge_owner.keys() {
            boundary[a] = true;
            boundary[b] = true;
        }
        interior_edges.sort_unstable();
        let boundary_nodes = (0..nodes.len()).filter(|&v| boundary[v]).collect();

        Ok(Self {
            nodes,
            triangles,
            element_area,
            element_diameter,
            neighbors,
            interior_edges,
            node_to_elements,
            boundary,
            boundary_nodes,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn element_area(&self) -> &[f64] {
        &self.element_area
    }

    pub fn element_diameter(&self) -> &[f64] {
        &self.element_diameter
    }

    pub fn neighbors(&self, t: usize) -> &[Option<usize>; 3] {
        &self.neighbors[t]
    }

    pub fn interior_edges(&self) -> &[[usize; 2]] {
        &self.interior_edges
    }

    pub fn elements_of_node(&self, v: usize) -> &[usize] {
        &self.node_to_elements[v]
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn total_area(&self) -> f64 {
        self.element_area.iter().sum()
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t].map(|v| self.nodes[v]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn min_diameter(&self) -> f64 {
        self.element_diameter.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_diameter(&self) -> f64 {
        self.element_diameter.iter().copied().fold(0.0, f64::max)
    }

    /// Mean of `u` over element `t`. For P1 fields this is the vertex mean.
    /// Multiplies by a rounded 1/3 rather than dividing; the sum is within one
    /// ulp of the exact quotient and is much cheaper on the per-step path.
    pub fn element_average(&self, u: &[f64], t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        (u[a] + u[b] + u[c]) * THIRD
    }

    pub fn element_averages(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_elements()];
        self.element_averages_into(u, &mut out);
        out
    }

    pub fn element_averages_into(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.num_nodes());
        for (avg, &[a, b, c]) in out.iter_mut().zip(&self.triangles) {
            *avg = (u[a] + u[b] + u[c]) * THIRD;
        }
    }

    /// `∫_T φ_i dx`: `|T|/3` if `i` is a vertex of `T`, else 0.
    pub fn basis_element_integral(&self, t: usize, i: usize) -> f64 {
        self.element_area[t] * self.basis_element_mean(t, i)
    }

    /// Mean of the hat function `φ_i` over `T`: 1/3 on incident elements, else 0.
    pub fn basis_element_mean(&self, t: usize, i: usize) -> f64 {
        if self.triangles[t].contains(&i) {
            1.0 / 3.0
        } else {
            0.0
        }
    }
}

/// Uniform triangulation of `domain` with `n` cells per side, every cell split
/// along its lower-left to upper-right diagonal.
///
/// Nodes are numbered row by row (`j * (n + 1) + i`); cell `(i, j)` owns
/// elements `2 (j n + i)` and `2 (j n + i) + 1`.
pub fn build_square_mesh(n: usize, domain: Square) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "mesh needs at least one subdivision per side".into(),
        ));
    }
    if !(domain.side > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "domain side must be positive, got {}",
            domain.side
        )));
    }
    let h = domain.side / n as f64;
    let stride = n + 1;
    let mut nodes = Vec::with_capacity(stride * stride);
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([
                domain.min[0] + i as f64 * h,
                domain.min[1] + j as f64 * h,
            ]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = j * stride + i;
            let b = a + 1;
            let c = b + stride;
            let d = a + stride;
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Mesh::from_parts(nodes, triangles)
}

/// Unit-square mesh; shorthand for `build_square_mesh(n, Square::unit())`.
pub fn build_unit_square_mesh(n: usize) -> Result<Mesh> {
    build_square_mesh(n, Square::unit())
}

/// Consistent mass, stiffness and row-sum lumped mass of the P1 space.
#[derive(Clone, Debug)]
pub struct P1Operators {
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub lumped_mass: Vec<f64>,
}

impl P1Operators {
    pub fn num_nodes(&self) -> usize {
        self.lumped_mass.len()
    }
}

pub fn assemble_p1(mesh: &Mesh) -> Result<P1Operators> {
    let n = mesh.num_nodes();
    let mut mass = Vec::with_capacity(9 * mesh.num_elements());
    let mut stiff = Vec::with_capacity(9 * mesh.num_elements());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = tri.map(|v| mesh.nodes[v]);
        let ke = local_stiffness(p).map_err(|area| Error::DegenerateElement { element: t, area })?;
        let area = mesh.element_area[t];
        for a in 0..3 {
            for b in 0..3 {
                let m = if a == b { area / 6.0 } else { area / 12.0 };
                mass.push((tri[a], tri[b], m));
                stiff.push((tri[a], tri[b], ke[a][b]));
            }
        }
    }
    let mass = CsrMatrix::from_triplets(n, mass);
    let stiffness = CsrMatrix::from_triplets(n, stiff);
    let lumped_mass = mass.row_sums();
    Ok(P1Operators {
        mass,
        stiffness,
        lumped_mass,
    })
}

/// Element stiffness `|T| ∇λ_a · ∇λ_b` of a P1 triangle. Returns the area on
/// degenerate input.
pub fn local_stiffness(p: [[f64; 2]; 3]) -> std::result::Result<[[f64; 3]; 3], f64> {
    let area2 = 2.0 * signed_area(p);
    let scale = dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]));
    if !(area2.abs() > 1e-14 * scale * scale) {
        return Err(area2.abs() / 2.0);
    }
    // ∇λ_k = rot(p_{k+2} - p_{k+1}) / (2|T|), orientation-independent up to sign
    let grads: [[f64; 2]; 3] = std::array::from_fn(|k| {
        let a = p[(k + 1) % 3];
        let b = p[(k + 2) % 3];
        [(a[1] - b[1]) / area2, (b[0] - a[0]) / area2]
    });
    let area = area2.abs() / 2.0;
    Ok(std::array::from_fn(|a| {
        std::array::from_fn(|b| area * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]))
    }))
}

fn signed_area(p: [[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

//! Dual graph of the triangulation, interface extraction, component
//! decomposition and inter-component geodesic distances.
//!
//! Components are the connected pieces of the interface set `I = {T : u_T ∈
//! [α, β]}` under face adjacency. An edge has zero weight exactly when both of
//! its triangles lie in `I`, so this is the same as grouping interface
//! elements at graph distance zero.

mod dijkstra;

use rayon::prelude::*;

pub use dijkstra::{floyd_warshall_reference, shortest_paths, ShortestPaths, FLOYD_WARSHALL_LIMIT};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::penalty::BandConfig;
use dijkstra::Dijkstra;

/// Label of elements outside the interface set.
pub const NOT_INTERFACE: usize = usize::MAX;

/// Undirected graph with one vertex per triangle and one edge per shared mesh
/// edge. Edge weights live outside the graph so that several bands can share
/// one topology.
#[derive(Clone, Debug)]
pub struct DualGraph {
    num_vertices: usize,
    edges: Vec<[usize; 2]>,
    geometric: Vec<f64>,
    adj_ptr: Vec<usize>,
    adj: Vec<(usize, usize)>,
}

impl DualGraph {
    /// Graph from an explicit edge list with per-edge geometric factors.
    pub fn from_edges(
        num_vertices: usize,
        edges: Vec<[usize; 2]>,
        geometric: Vec<f64>,
    ) -> Result<Self> {
        if edges.len() != geometric.len() {
            return Err(Error::LengthMismatch {
                expected: edges.len(),
                found: geometric.len(),
            });
        }
        let mut degree = vec![0usize; num_vertices + 1];
        for &[a, b] in &edges {
            if a >= num_vertices || b >= num_vertices || a == b {
                return Err(Error::InvalidConfig(format!(
                    "invalid dual edge ({a}, {b}) for {num_vertices} vertices"
                )));
            }
            degree[a + 1] += 1;
            degree[b + 1] += 1;
        }
        for v in 0..num_vertices {
            degree[v + 1] += degree[v];
        }
        let adj_ptr = degree;
        let mut fill = adj_ptr.clone();
        let mut adj = vec![(0, 0); 2 * edges.len()];
        for (e, &[a, b]) in edges.iter().enumerate() {
            adj[fill[a]] = (b, e);
            fill[a] += 1;
            adj[fill[b]] = (a, e);
            fill[b] += 1;
        }
        for v in 0..num_vertices {
            adj[adj_ptr[v]..adj_ptr[v + 1]].sort_unstable();
        }
        Ok(Self {
            num_vertices,
            edges,
            geometric,
            adj_ptr,
            adj,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// `(diam(T1) + diam(T2)) / 2`, or the configured uniform length scale.
    pub fn geometric_factors(&self) -> &[f64] {
        &self.geometric
    }

    /// `(neighbor, edge id)` pairs, sorted by neighbor.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[self.adj_ptr[v]..self.adj_ptr[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj_ptr[v + 1] - self.adj_ptr[v]
    }
}

/// Dual graph of `mesh`. With `length_scale = Some(h)` every edge uses `h`
/// instead of the mean diameter of its two triangles.
pub fn build_dual_graph(mesh: &Mesh, length_scale: Option<f64>) -> DualGraph {
    let diam = mesh.element_diameter();
    let edges = mesh.interior_edges().to_vec();
    let geometric = edges
        .iter()
        .map(|&[a, b]| length_scale.unwrap_or(0.5 * (diam[a] + diam[b])))
        .collect();
    DualGraph::from_edges(mesh.num_elements(), edges, geometric)
        .expect("mesh interior edges form a valid dual graph")
}

/// `w_e = (F(u_T1) + F(u_T2))/2 · (diam(T1) + diam(T2))/2` for every edge.
pub fn assign_edge_weights(
    graph: &DualGraph,
    element_averages: &[f64],
    band: &BandConfig,
) -> Result<Vec<f64>> {
    let mut weights = vec![0.0; graph.num_edges()];
    assign_edge_weights_into(graph, element_averages, band, &mut weights)?;
    Ok(weights)
}

pub fn assign_edge_weights_into(
    graph: &DualGraph,
    element_averages: &[f64],
    band: &BandConfig,
    weights: &mut [f64],
) -> Result<()> {
    if element_averages.len() != graph.num_vertices() {
        return Err(Error::LengthMismatch {
            expected: graph.num_vertices(),
            found: element_averages.len(),
        });
    }
    if let Some((element, &value)) = element_averages
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite())
    {
        return Err(Error::NonFiniteAverage { element, value });
    }
    for ((w, &[a, b]), &g) in weights.iter_mut().zip(&graph.edges).zip(&graph.geometric) {
        let fa = band.weight(element_averages[a]);
        let fb = band.weight(element_averages[b]);
        *w = 0.5 * (fa + fb) * g;
    }
    Ok(())
}

/// Elements with `alpha <= u_T <= beta`, ascending.
pub fn extract_interface(element_averages: &[f64], alpha: f64, beta: f64) -> Vec<usize> {
    element_averages
        .iter()
        .enumerate()
        .filter(|(_, &u)| alpha <= u && u <= beta)
        .map(|(t, _)| t)
        .collect()
}

/// Interface components, their masses, pairwise distances and connecting paths.
#[derive(Clone, Debug, Default)]
pub struct ComponentDecomposition {
    /// Revision of the phase field this decomposition was computed from.
    pub revision: Option<u64>,
    /// Element ids of each component, ascending. Components are ordered by
    /// their smallest element id.
    pub components: Vec<Vec<usize>>,
    /// Component label per element, [`NOT_INTERFACE`] outside `I`.
    pub labels: Vec<usize>,
    /// `W̄_j`; empty until the penalty module fills it.
    pub masses: Vec<f64>,
    distances: Vec<f64>,
    paths: Vec<Vec<usize>>,
}

impl ComponentDecomposition {
    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn has_distances(&self) -> bool {
        let m = self.num_components();
        self.distances.len() == m * m && (m < 2 || !self.paths.is_empty())
    }

    /// `d̄_ij`; 0 on the diagonal.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[i * self.num_components() + j]
    }

    /// Shortest path `T_0 ∈ C_i, ..., T_L ∈ C_j` for `i < j`.
    pub fn path(&self, i: usize, j: usize) -> &[usize] {
        assert!(i < j, "paths are stored for i < j");
        &self.paths[pair_index(i, j, self.num_components())]
    }

    /// Iterator over `(i, j, d̄_ij, path)` for unordered pairs `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64, &[usize])> + '_ {
        let m = self.num_components();
        (0..m).flat_map(move |i| {
            (i + 1..m).map(move |j| (i, j, self.distance(i, j), self.path(i, j)))
        })
    }
}

fn pair_index(i: usize, j: usize, m: usize) -> usize {
    // row-major index into the strict upper triangle
    i * m - i * (i + 1) / 2 + (j - i - 1)
}

/// Connected components of the subgraph induced on `interface`.
pub fn decompose_components(graph: &DualGraph, interface: &[usize]) -> ComponentDecomposition {
    const PENDING: usize = NOT_INTERFACE - 1;
    let mut labels = vec![NOT_INTERFACE; graph.num_vertices()];
    for &t in interface {
        labels[t] = PENDING;
    }
    let mut sorted;
    let seeds = if interface.windows(2).all(|w| w[0] < w[1]) {
        interface
    } else {
        sorted = interface.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        &sorted
    };

    // seeds are ascending, so each component starts at its smallest element
    let mut count = 0;
    let mut stack = Vec::new();
    for &t in seeds {
        if labels[t] != PENDING {
            continue;
        }
        labels[t] = count;
        stack.push(t);
        while let Some(v) = stack.pop() {
            for &(nb, _) in graph.neighbors(v) {
                if labels[nb] == PENDING {
                    labels[nb] = count;
                    stack.push(nb);
                }
            }
        }
        count += 1;
    }
    let mut components: Vec<Vec<usize>> = vec![Vec::new(); count];
    for &t in seeds {
        components[labels[t]].push(t);
    }

    ComponentDecomposition {
        revision: None,
        components,
        labels,
        ..Default::default()
    }
}

/// Fills `d̄_ij` and `γ̄_ij` by one multi-source Dijkstra sweep per component.
///
/// Each sweep seeds all elements of `C_i` at distance zero and stops once every
/// `C_j`, `j > i`, has been reached; the first settled element of `C_j` is the
/// path endpoint (ties resolved towards smaller element ids).
pub fn component_distances(
    graph: &DualGraph,
    weights: &[f64],
    decomposition: &mut ComponentDecomposition,
) -> Result<()> {
    if weights.len() != graph.num_edges() {
        return Err(Error::LengthMismatch {
            expected: graph.num_edges(),
            found: weights.len(),
        });
    }
    component_distances_by(graph, |e| weights[e], decomposition)
}

/// [`component_distances`] with edge weights evaluated on demand, so that only
/// edges the sweeps actually relax are ever weighted.
pub fn component_distances_by<W>(
    graph: &DualGraph,
    weight: W,
    decomposition: &mut ComponentDecomposition,
) -> Result<()>
where
    W: Fn(usize) -> f64 + Sync,
{
    let m = decomposition.num_components();
    decomposition.distances = vec![0.0; m * m];
    decomposition.paths.clear();
    if m < 2 {
        return Ok(());
    }
    let labels = &decomposition.labels;
    let components = &decomposition.components;

    let sweep = |dj: &mut Dijkstra<'_, &W>, i: usize| -> Result<Vec<(f64, Vec<usize>)>> {
        let mut found: Vec<Option<(usize, f64)>> = vec![None; m];
        let mut remaining = m - 1 - i;
        dj.run(&components[i], |v, d| {
            let label = labels[v];
            if label != NOT_INTERFACE && label > i && found[label].is_none() {
                found[label] = Some((v, d));
                remaining -= 1;
            }
            remaining > 0
        });
        (i + 1..m)
            .map(|j| {
                let (target, d) = found[j].ok_or(Error::Unreachable { from: i, to: j })?;
                let mut path = vec![target];
                let mut v = target;
                while let Some(p) = dj.pred(v) {
                    path.push(p);
                    v = p;
                }
                path.reverse();
                Ok((d, path))
            })
            .collect()
    };

    let rows: Vec<Result<Vec<(f64, Vec<usize>)>>> = if m > 2 && rayon::current_num_threads() > 1 {
        (0..m - 1)
            .into_par_iter()
            .map_init(|| Dijkstra::new(graph, &weight), |dj, i| sweep(dj, i))
            .collect()
    } else {
        let mut dj = Dijkstra::new(graph, &weight);
        (0..m - 1).map(|i| sweep(&mut dj, i)).collect()
    };

    for (i, row) in rows.into_iter().enumerate() {
        for (offset, (d, path)) in row?.into_iter().enumerate() {
            let j = i + 1 + offset;
            decomposition.distances[i * m + j] = d;
            decomposition.distances[j * m + i] = d;
            decomposition.paths.push(path);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_unit_square_mesh;

    fn band() -> BandConfig {
        BandConfig::new(0.85, 0.95, 0.01).unwrap()
    }

    #[test]
    fn dual_edge_counts() {
        let g = build_dual_graph(&build_unit_square_mesh(1).unwrap(), None);
        assert_eq!(g.num_edges(), 1);
        let mesh = build_unit_square_mesh(2).unwrap();
        let g = build_dual_graph(&mesh, None);
        // enumerate shared edges by brute force over triangle pairs
        let tris = mesh.triangles();
        let mut shared = 0;
        for a in 0..tris.len() {
            for b in a + 1..tris.len() {
                let common = tris[a].iter().filter(|v| tris[b].contains(v)).count();
                if common == 2 {
                    shared += 1;
                }
            }
        }
        assert_eq!(shared, 8);
        assert_eq!(g.num_edges(), 8);
        let degree_sum: usize = (0..g.num_vertices()).map(|v| g.degree(v)).sum();
        assert_eq!(degree_sum, 2 * g.num_edges());
    }

    #[test]
    fn weight_examples() {
        let g = DualGraph::from_edges(2, vec![[0, 1]], vec![0.1]).unwrap();
        let b = band();
        assert_eq!(assign_edge_weights(&g, &[0.9, 0.9], &b).unwrap(), vec![0.0]);
        let w = assign_edge_weights(&g, &[-1.0, -1.0], &b).unwrap();
        assert!((w[0] - 0.1).abs() < 1e-15);
        let w = assign_edge_weights(&g, &[-1.0, 0.9], &b).unwrap();
        assert!((w[0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn non_finite_average_rejected() {
        let g = DualGraph::from_edges(2, vec![[0, 1]], vec![0.1]).unwrap();
        assert!(matches!(
            assign_edge_weights(&g, &[0.0, f64::NAN], &band()),
            Err(Error::NonFiniteAverage { element: 1, .. })
        ));
    }

    #[test]
    fn interface_membership_is_closed() {
        assert!(extract_interface(&[0.0; 5], 0.85, 0.95).is_empty());
        assert_eq!(extract_interface(&[0.85, 0.951, 0.95, 0.9], 0.85, 0.95), vec![0, 2, 3]);
    }

    #[test]
    fn empty_interface() {
        let g = DualGraph::from_edges(3, vec![[0, 1], [1, 2]], vec![1.0; 2]).unwrap();
        let mut d = decompose_components(&g, &[]);
        assert_eq!(d.num_components(), 0);
        component_distances(&g, &[1.0, 1.0], &mut d).unwrap();
        assert_eq!(d.pairs().count(), 0);
    }

    #[test]
    fn chain_between_two_components() {
        // 0 | 1 2 | 3 : components {0} and {3}, joined through 1 and 2
        let g = DualGraph::from_edges(4, vec![[0, 1], [1, 2], [2, 3]], vec![1.0; 3]).unwrap();
        let mut d = decompose_components(&g, &[0, 3]);
        assert_eq!(d.num_components(), 2);
        component_distances(&g, &[0.05, 0.02, 0.05], &mut d).unwrap();
        assert!((d.distance(0, 1) - 0.12).abs() < 1e-15);
        assert_eq!(d.distance(1, 0), d.distance(0, 1));
        assert_eq!(d.path(0, 1), &[0, 1, 2, 3]);
    }

    #[test]
    fn single_component_has_empty_table() {
        let g = DualGraph::from_edges(3, vec![[0, 1], [1, 2]], vec![1.0; 2]).unwrap();
        let mut d = decompose_components(&g, &[0, 1, 2]);
        assert_eq!(d.num_components(), 1);
        component_distances(&g, &[0.0, 0.0], &mut d).unwrap();
        assert_eq!(d.pairs().count(), 0);
    }

    #[test]
    fn unreachable_component_reported() {
        let g = DualGraph::from_edges(3, vec![[0, 1]], vec![1.0]).unwrap();
        let mut d = decompose_components(&g, &[0, 2]);
        assert!(matches!(
            component_distances(&g, &[1.0], &mut d),
            Err(Error::Unreachable { from: 0, to: 1 })
        ));
    }

    #[test]
    fn pair_index_is_dense() {
        let m = 5;
        let mut seen = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                seen.push(pair_index(i, j, m));
            }
        }
        assert_eq!(seen, (0..m * (m - 1) / 2).collect::<Vec<_>>());
    }
}

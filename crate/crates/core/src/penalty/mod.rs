//! Discrete connectedness penalty `C̄ = Σ_{i≠j} d̄_ij W̄_i W̄_j` and its
//! variation with respect to the nodal values of the phase field.

mod band;

pub use band::{band_profile, BandConfig, BandProfile};

use crate::connectivity::{
    component_distances_by, decompose_components, extract_interface,
    ComponentDecomposition, DualGraph,
};
use crate::error::{Error, Result};
use crate::field::PhaseField;
use crate::mesh::Mesh;

/// `W̄_j = (1/ε) Σ_{T ∈ C_j} W̃(u_T) |T|`.
pub fn component_masses(
    decomposition: &ComponentDecomposition,
    element_averages: &[f64],
    mesh: &Mesh,
    cfg: &BandConfig,
) -> Vec<f64> {
    let area = mesh.element_area();
    decomposition
        .components
        .iter()
        .map(|c| c.iter().map(|&t| cfg.bump(element_averages[t]) * area[t]).sum::<f64>() / cfg.eps)
        .collect()
}

/// `Σ_{i≠j} d̄_ij W̄_i W̄_j` over ordered pairs; 0 for fewer than two components.
pub fn penalty_energy(decomposition: &ComponentDecomposition) -> f64 {
    if decomposition.num_components() < 2 {
        return 0.0;
    }
    let w = &decomposition.masses;
    decomposition
        .pairs()
        .map(|(i, j, d, _)| 2.0 * d * w[i] * w[j])
        .sum()
}

/// Steps 1–6 of the penalty pipeline for one band: element averages, edge
/// weights, interface, components, masses and (for two or more components)
/// distances and paths.
pub fn analyze_band(
    mesh: &Mesh,
    graph: &DualGraph,
    field: &PhaseField,
    cfg: &BandConfig,
) -> Result<ComponentDecomposition> {
    let averages = mesh.element_averages(field.values());
    analyze_band_with_averages(mesh, graph, field.revision(), &averages, cfg)
}

pub(crate) fn analyze_band_with_averages(
    mesh: &Mesh,
    graph: &DualGraph,
    revision: u64,
    averages: &[f64],
    cfg: &BandConfig,
) -> Result<ComponentDecomposition> {
    if let Some((element, &value)) = averages.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteAverage { element, value });
    }
    let interface = extract_interface(averages, cfg.alpha, cfg.beta);
    let mut decomposition = decompose_components(graph, &interface);
    decomposition.revision = Some(revision);
    decomposition.masses = component_masses(&decomposition, averages, mesh, cfg);
    if decomposition.num_components() >= 2 {
        // same formula as `assign_edge_weights`, evaluated only on relaxed edges
        let (edges, geometric) = (graph.edges(), graph.geometric_factors());
        let weight = |e: usize| {
            let [a, b] = edges[e];
            0.5 * (cfg.weight(averages[a]) + cfg.weight(averages[b])) * geometric[e]
        };
        component_distances_by(graph, weight, &mut decomposition)?;
    }
    Ok(decomposition)
}

/// Nodal vector `G_k = δ_{u;φ_k} C̄`.
///
/// Sums the mass term `Σ_{i≠j} 2 (1/ε) Σ_{T ∈ C_i} W̃'(u_T) ∫_T φ_k · W̄_j d̄_ij`
/// and the distance term `Σ_{i≠j} W̄_i W̄_j δ d̄_ij`, where the variation of
/// each distance is taken along its stored shortest path.
pub fn penalty_variation(
    decomposition: &ComponentDecomposition,
    field: &PhaseField,
    mesh: &Mesh,
    cfg: &BandConfig,
) -> Result<Vec<f64>> {
    match decomposition.revision {
        Some(r) if r == field.revision() => {}
        other => {
            return Err(Error::StaleDecomposition {
                expected: other.unwrap_or(0),
                found: field.revision(),
            })
        }
    }
    let u = field.values();
    if u.len() != mesh.num_nodes() {
        return Err(Error::LengthMismatch {
            expected: mesh.num_nodes(),
            found: u.len(),
        });
    }
    let mut grad = vec![0.0; mesh.num_nodes()];
    let m = decomposition.num_components();
    if m < 2 {
        return Ok(grad);
    }
    debug_assert!(decomposition.has_distances());
    let tris = mesh.triangles();
    let area = mesh.element_area();
    let diam = mesh.element_diameter();
    let masses = &decomposition.masses;
    let mut scatter = |t: usize, value: f64| {
        for &v in &tris[t] {
            grad[v] += value;
        }
    };

    // mass term: ∂C̄/∂W̄_i = Σ_{j≠i} 2 d̄_ij W̄_j
    for (i, comp) in decomposition.components.iter().enumerate() {
        let coef: f64 = (0..m)
            .filter(|&j| j != i)
            .map(|j| 2.0 * decomposition.distance(i, j) * masses[j])
            .sum();
        if coef == 0.0 {
            continue;
        }
        for &t in comp {
            let ut = mesh.element_average(u, t);
            // ∫_T φ_k dx = |T|/3 for each vertex k of T
            scatter(t, coef * cfg.bump_derivative(ut) * area[t] / (3.0 * cfg.eps));
        }
    }

    // distance term, each unordered pair counted for (i, j) and (j, i)
    for (i, j, _, path) in decomposition.pairs() {
        let coef = 2.0 * masses[i] * masses[j];
        if coef == 0.0 {
            continue;
        }
        for step in path.windows(2) {
            let (prev, cur) = (step[0], step[1]);
            let geo = 0.5 * (diam[cur] + diam[prev]);
            // mean of φ_k over an incident element is 1/3
            let d_cur = cfg.weight_derivative(mesh.element_average(u, cur));
            let d_prev = cfg.weight_derivative(mesh.element_average(u, prev));
            scatter(cur, coef * geo * 0.5 * d_cur / 3.0);
            scatter(prev, coef * geo * 0.5 * d_prev / 3.0);
        }
    }
    Ok(grad)
}

/// Result of running the full pipeline for one band.
#[derive(Clone, Debug)]
pub struct BandEvaluation {
    pub decomposition: ComponentDecomposition,
    /// Unscaled `C̄`.
    pub energy: f64,
    /// Unscaled `δC̄`, one entry per node.
    pub variation: Vec<f64>,
}

impl BandEvaluation {
    pub fn num_components(&self) -> usize {
        self.decomposition.num_components()
    }
}

pub fn evaluate_band(
    mesh: &Mesh,
    graph: &DualGraph,
    field: &PhaseField,
    cfg: &BandConfig,
) -> Result<BandEvaluation> {
    let decomposition = analyze_band(mesh, graph, field, cfg)?;
    finish_band(mesh, field, cfg, decomposition)
}

pub(crate) fn finish_band(
    mesh: &Mesh,
    field: &PhaseField,
    cfg: &BandConfig,
    decomposition: ComponentDecomposition,
) -> Result<BandEvaluation> {
    let energy = penalty_energy(&decomposition);
    let variation = penalty_variation(&decomposition, field, mesh, cfg)?;
    Ok(BandEvaluation {
        decomposition,
        energy,
        variation,
    })
}

/// Sum of two band penalties, each scaled by its `a · ε^(-p)`.
#[derive(Clone, Debug)]
pub struct DualBandPenalty {
    pub energy: f64,
    pub variation: Vec<f64>,
    pub first: BandEvaluation,
    pub second: BandEvaluation,
}

/// Runs two independent band pipelines on the same field and adds their scaled
/// energies and variations.
pub fn dual_band_penalty(
    mesh: &Mesh,
    graph: &DualGraph,
    field: &PhaseField,
    first: &BandConfig,
    second: &BandConfig,
) -> Result<DualBandPenalty> {
    let averages = mesh.element_averages(field.values());
    let run = |cfg: &BandConfig| -> Result<BandEvaluation> {
        let d = analyze_band_with_averages(mesh, graph, field.revision(), &averages, cfg)?;
        finish_band(mesh, field, cfg, d)
    };
    let (a, b) = rayon::join(|| run(first), || run(second));
    let (a, b) = (a?, b?);
    let (pa, pb) = (first.prefactor(), second.prefactor());
    let variation = a
        .variation
        .iter()
        .zip(&b.variation)
        .map(|(x, y)| pa * x + pb * y)
        .collect();
    Ok(DualBandPenalty {
        energy: pa * a.energy + pb * b.energy,
        variation,
        first: a,
        second: b,
    })
}

#![allow(dead_code)]

use phasefield_topo::connectivity::{build_dual_graph, DualGraph};
use phasefield_topo::mesh::{assemble_p1, build_square_mesh, Mesh, P1Operators, Square};
use phasefield_topo::penalty::{analyze_band, BandConfig};
use phasefield_topo::PhaseField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random simple graph on `2..=max_vertices` vertices with weights in `[0, 1]`.
pub fn random_graph(rng: &mut ChaCha8Rng, max_vertices: usize) -> (DualGraph, Vec<f64>) {
    let n = rng.gen_range(2..=max_vertices);
    let p = rng.gen_range(0.03..0.3);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                edges.push([a, b]);
            }
        }
    }
    let weights = (0..edges.len()).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let m = edges.len();
    (DualGraph::from_edges(n, edges, vec![1.0; m]).unwrap(), weights)
}

pub struct Fixture {
    pub mesh: Mesh,
    pub ops: P1Operators,
    pub graph: DualGraph,
}

pub fn fixture(n: usize) -> Fixture {
    let mesh = build_square_mesh(n, Square::centered(0.5)).unwrap();
    let ops = assemble_p1(&mesh).unwrap();
    let graph = build_dual_graph(&mesh, None);
    Fixture { mesh, ops, graph }
}

pub fn test_band() -> BandConfig {
    BandConfig::new(0.85, 0.95, 0.03).unwrap()
}

/// Field with `blobs` disjoint disks whose nodes lie in `[0.88, 0.92]` and a
/// background in `[0.2, 0.6]`. Every element average is at least 0.03 away from
/// the band `[0.85, 0.95]` edges, and the random background makes shortest
/// paths unique with probability one. Retries until the band has exactly
/// `blobs` components.
pub fn blob_field(fx: &Fixture, cfg: &BandConfig, blobs: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed);
    loop {
        let mut disks: Vec<([f64; 2], f64)> = Vec::new();
        while disks.len() < blobs {
            let r = rng.gen_range(0.08..0.14);
            let c = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
            let clear = disks
                .iter()
                .all(|(d, s)| (c[0] - d[0]).hypot(c[1] - d[1]) > r + s + 0.1);
            if clear {
                disks.push((c, r));
            }
        }
        let u: Vec<f64> = fx
            .mesh
            .nodes()
            .iter()
            .map(|p| {
                if disks.iter().any(|(c, r)| (p[0] - c[0]).hypot(p[1] - c[1]) < *r) {
                    rng.gen_range(0.88..0.92)
                } else {
                    rng.gen_range(0.2..0.6)
                }
            })
            .collect();
        let d = analyze_band(&fx.mesh, &fx.graph, &PhaseField::new(u.clone()), cfg).unwrap();
        if d.num_components() == blobs {
            return u;
        }
    }
}

/// Central difference of `f` at `u` along `dir` with step `h`.
pub fn directional_fd(f: impl Fn(&[f64]) -> f64, u: &[f64], dir: &[f64], h: f64) -> f64 {
    let shifted = |s: f64| -> Vec<f64> { u.iter().zip(dir).map(|(a, d)| a + s * d).collect() };
    (f(&shifted(h)) - f(&shifted(-h))) / (2.0 * h)
}

pub fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smooth field in `(-1, 1)` with an interface, plus a small random ripple.
pub fn smooth_field(mesh: &Mesh, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (a, b) = (rng.gen_range(2.0..5.0), rng.gen_range(2.0..5.0));
    mesh.nodes()
        .iter()
        .map(|p| (a * p[0] + (b * p[1]).sin()).tanh() * 0.9 + rng.gen_range(-0.05..0.05))
        .collect()
}

/// Worst relative mismatch between the assembled penalty variation and central
/// differences of the re-run pipeline, over nodes whose variation exceeds
/// `1e-3` of the largest one. Returns `(error, nodes tested)`.
pub fn penalty_fd_error(fx: &Fixture, cfg: &BandConfig, u: &[f64], delta: f64) -> (f64, usize) {
    use phasefield_topo::penalty::evaluate_band;
    let energy = |v: &[f64]| {
        evaluate_band(&fx.mesh, &fx.graph, &PhaseField::new(v.to_vec()), cfg)
            .unwrap()
            .energy
    };
    let eval = evaluate_band(&fx.mesh, &fx.graph, &PhaseField::new(u.to_vec()), cfg).unwrap();
    let scale = eval.variation.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let mut worst = 0.0f64;
    let mut tested = 0;
    let mut v = u.to_vec();
    for (k, &g) in eval.variation.iter().enumerate() {
        if g.abs() <= 1e-3 * scale {
            continue;
        }
        v[k] = u[k] + delta;
        let plus = energy(&v);
        v[k] = u[k] - delta;
        let minus = energy(&v);
        v[k] = u[k];
        let fd = (plus - minus) / (2.0 * delta);
        worst = worst.max((fd - g).abs() / g.abs());
        tested += 1;
    }
    (worst, tested)
}

mod common;

use std::collections::BTreeSet;

use phasefield_topo::connectivity::{
    component_distances, decompose_components, shortest_paths, DualGraph, NOT_INTERFACE,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn random_interface(g: &DualGraph, rng: &mut impl Rng, p: f64) -> Vec<usize> {
    (0..g.num_vertices()).filter(|_| rng.gen_bool(p)).collect()
}

fn edge_weight(g: &DualGraph, w: &[f64], a: usize, b: usize) -> f64 {
    g.neighbors(a)
        .iter()
        .filter(|&&(v, _)| v == b)
        .map(|&(_, e)| w[e])
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn components_partition_the_interface(seed in any::<u64>(), p in 0.1f64..0.9) {
        let fx = common::fixture(8);
        let mut rng = common::rng(seed);
        let interface = random_interface(&fx.graph, &mut rng, p);
        let d = decompose_components(&fx.graph, &interface);

        let mut seen = BTreeSet::new();
        for (k, comp) in d.components.iter().enumerate() {
            prop_assert!(!comp.is_empty());
            prop_assert!(comp.windows(2).all(|w| w[0] < w[1]));
            for &t in comp {
                prop_assert!(seen.insert(t));
                prop_assert_eq!(d.labels[t], k);
            }
        }
        prop_assert_eq!(seen.into_iter().collect::<Vec<_>>(), interface.clone());
        // ordered by smallest element
        prop_assert!(d.components.windows(2).all(|w| w[0][0] < w[1][0]));
        for t in 0..fx.graph.num_vertices() {
            if !interface.contains(&t) {
                prop_assert_eq!(d.labels[t], NOT_INTERFACE);
            }
        }
        // adjacent interface elements share a label
        for &[a, b] in fx.graph.edges() {
            if d.labels[a] != NOT_INTERFACE && d.labels[b] != NOT_INTERFACE {
                prop_assert_eq!(d.labels[a], d.labels[b]);
            }
        }
        // each component is connected inside itself
        for comp in &d.components {
            let mut reached = BTreeSet::from([comp[0]]);
            let mut stack = vec![comp[0]];
            while let Some(v) = stack.pop() {
                for &(nb, _) in fx.graph.neighbors(v) {
                    if comp.binary_search(&nb).is_ok() && reached.insert(nb) {
                        stack.push(nb);
                    }
                }
            }
            prop_assert_eq!(reached.len(), comp.len());
        }
    }

    #[test]
    fn decomposition_ignores_input_order(seed in any::<u64>()) {
        let fx = common::fixture(6);
        let mut rng = common::rng(seed);
        let interface = random_interface(&fx.graph, &mut rng, 0.4);
        let mut shuffled = interface.clone();
        shuffled.shuffle(&mut rng);
        let mut doubled = shuffled.clone();
        doubled.extend_from_slice(&interface);
        let a = decompose_components(&fx.graph, &interface);
        let b = decompose_components(&fx.graph, &doubled);
        prop_assert_eq!(a.components, b.components);
        prop_assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn component_distances_are_set_distances(seed in any::<u64>()) {
        let fx = common::fixture(6);
        let mut rng = common::rng(seed);
        let interface = random_interface(&fx.graph, &mut rng, 0.3);
        let weights: Vec<f64> = fx
            .graph
            .edges()
            .iter()
            .map(|&[a, b]| {
                if interface.contains(&a) && interface.contains(&b) { 0.0 } else { rng.gen_range(0.01..1.0) }
            })
            .collect();
        let mut d = decompose_components(&fx.graph, &interface);
        component_distances(&fx.graph, &weights, &mut d).unwrap();
        let m = d.num_components();
        for i in 0..m {
            prop_assert_eq!(d.distance(i, i), 0.0);
            let sp = shortest_paths(&fx.graph, &weights, &d.components[i]);
            for j in 0..m {
                prop_assert_eq!(d.distance(i, j), d.distance(j, i));
                if i == j {
                    continue;
                }
                let best = d.components[j].iter().map(|&t| sp.dist[t]).fold(f64::INFINITY, f64::min);
                prop_assert!((d.distance(i, j) - best).abs() <= 1e-12);
            }
        }
        for (i, j, dist, path) in d.pairs() {
            prop_assert_eq!(d.labels[path[0]], i);
            prop_assert_eq!(d.labels[*path.last().unwrap()], j);
            let len: f64 = path.windows(2).map(|w| edge_weight(&fx.graph, &weights, w[0], w[1])).sum();
            prop_assert!((len - dist).abs() <= 1e-12);
        }
    }
}

#[test]
fn empty_and_full_interfaces() {
    let fx = common::fixture(4);
    assert_eq!(decompose_components(&fx.graph, &[]).num_components(), 0);
    let all: Vec<usize> = (0..fx.graph.num_vertices()).collect();
    assert_eq!(decompose_components(&fx.graph, &all).num_components(), 1);
}

#[test]
fn distances_need_matching_weight_length() {
    let fx = common::fixture(4);
    let mut d = decompose_components(&fx.graph, &[0, 20]);
    assert!(component_distances(&fx.graph, &[1.0], &mut d).is_err());
}

//! Multi-source Dijkstra on the weighted dual graph, plus a Floyd–Warshall
//! reference used by the tests.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::DualGraph;
use crate::error::{Error, Result};

/// Heap key packing `(distance, vertex)` so that `Reverse` ordering pops the
/// smallest distance first and on equal distance the smallest vertex index.
/// Distances are non-negative, where the IEEE bit pattern is monotone.
fn key(dist: f64, vertex: usize) -> Reverse<u128> {
    Reverse(((dist.to_bits() as u128) << 64) | vertex as u128)
}

fn unkey(Reverse(k): Reverse<u128>) -> (f64, usize) {
    (f64::from_bits((k >> 64) as u64), k as u64 as usize)
}

#[derive(Clone, Debug)]
pub struct ShortestPaths {
    pub dist: Vec<f64>,
    pub pred: Vec<Option<usize>>,
}

impl ShortestPaths {
    /// Vertices from a source to `target`, source first. Empty if unreachable.
    pub fn path_to(&self, target: usize) -> Vec<usize> {
        if !self.dist[target].is_finite() {
            return Vec::new();
        }
        let mut path = vec![target];
        let mut v = target;
        while let Some(p) = self.pred[v] {
            path.push(p);
            v = p;
        }
        path.reverse();
        path
    }
}

const NO_PRED: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Slot {
    dist: f64,
    pred: u32,
    settled: bool,
}

const FRESH: Slot = Slot {
    dist: f64::INFINITY,
    pred: NO_PRED,
    settled: false,
};

/// Reusable Dijkstra state. Only the entries touched by the previous run are
/// reset, so repeated short sweeps on a large graph stay cheap.
pub(crate) struct Dijkstra<'g, W> {
    graph: &'g DualGraph,
    weight: W,
    slots: Vec<Slot>,
    touched: Vec<usize>,
    heap: BinaryHeap<Reverse<u128>>,
}

impl<'g, W: Fn(usize) -> f64> Dijkstra<'g, W> {
    /// `weight(e)` is the weight of edge `e`.
    pub(crate) fn new(graph: &'g DualGraph, weight: W) -> Self {
        assert!(graph.num_vertices() < NO_PRED as usize);
        Self {
            graph,
            weight,
            slots: vec![FRESH; graph.num_vertices()],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    pub(crate) fn pred(&self, v: usize) -> Option<usize> {
        let p = self.slots[v].pred;
        (p != NO_PRED).then_some(p as usize)
    }

    /// Settles vertices in order of (distance, index) from `sources`, calling
    /// `visit` on each; stops early once `visit` returns `false`.
    pub(crate) fn run(&mut self, sources: &[usize], mut visit: impl FnMut(usize, f64) -> bool) {
        for &v in &self.touched {
            self.slots[v] = FRESH;
        }
        self.touched.clear();
        self.heap.clear();
        for &s in sources {
            if self.slots[s].dist != 0.0 {
                self.slots[s].dist = 0.0;
                self.touched.push(s);
            }
            self.heap.push(key(0.0, s));
        }
        while let Some(top) = self.heap.pop() {
            let (dist, vertex) = unkey(top);
            if self.slots[vertex].settled {
                continue;
            }
            self.slots[vertex].settled = true;
            if !visit(vertex, dist) {
                return;
            }
            for &(next, edge) in self.graph.neighbors(vertex) {
                let slot = &mut self.slots[next];
                if slot.settled {
                    continue;
                }
                let candidate = dist + (self.weight)(edge);
                if candidate < slot.dist {
                    if slot.dist == f64::INFINITY {
                        self.touched.push(next);
                    }
                    slot.dist = candidate;
                    slot.pred = vertex as u32;
                    self.heap.push(key(candidate, next));
                }
            }
        }
    }
}

/// Shortest distances and predecessor tree from the source set (all at distance 0).
pub fn shortest_paths(graph: &DualGraph, weights: &[f64], sources: &[usize]) -> ShortestPaths {
    let mut d = Dijkstra::new(graph, |e| weights[e]);
    d.run(sources, |_, _| true);
    ShortestPaths {
        dist: d.slots.iter().map(|s| s.dist).collect(),
        pred: (0..d.slots.len()).map(|v| d.pred(v)).collect(),
    }
}

pub const FLOYD_WARSHALL_LIMIT: usize = 200;

/// All-pairs shortest distances by Floyd–Warshall. Test oracle only; refuses
/// graphs above [`FLOYD_WARSHALL_LIMIT`] vertices.
pub fn floyd_warshall_reference(graph: &DualGraph, weights: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = graph.num_vertices();
    if n > FLOYD_WARSHALL_LIMIT {
        return Err(Error::GraphTooLarge {
            vertices: n,
            limit: FLOYD_WARSHALL_LIMIT,
        });
    }
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (e, &[a, b]) in graph.edges().iter().enumerate() {
        let w = weights[e];
        if w < d[a][b] {
            d[a][b] = w;
            d[b][a] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i][k];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let via = dik + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    Ok(d)
}

//! Multi-source shortest paths and randomized low-diameter partitioning by
//! exponential start-time shifts.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::graph::MultiGraph;

/// Rate of the exponential shifts used by [`partition`] at target diameter `d`.
pub fn shift_rate(d: f64, log_n: f64) -> f64 {
    log_n / (d / 2.0)
}

#[derive(Clone, Debug)]
pub struct ShortestPaths {
    /// Distance including the source offset; infinite if unreached.
    pub dist: Vec<f64>,
    /// Winning source vertex, `usize::MAX` if unreached.
    pub source: Vec<usize>,
    /// `(parent vertex, edge index)` on the shortest-path forest.
    pub parent: Vec<Option<(usize, usize)>>,
    /// Vertices in the order they were settled.
    pub order: Vec<usize>,
}

#[derive(PartialEq)]
struct Label {
    dist: f64,
    source: usize,
    vertex: usize,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap
        other
            .dist
            .total_cmp(&self.dist)
            .then(other.source.cmp(&self.source))
            .then(other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from several sources, each starting at its own offset. Ties are
/// broken by `(dist, source id, parent id)`.
pub fn sssp(g: &MultiGraph, sources: &[(usize, f64)]) -> ShortestPaths {
    let n = g.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut source = vec![usize::MAX; n];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();
    for &(s, offset) in sources {
        if (offset, s) < (dist[s], source[s]) {
            dist[s] = offset;
            source[s] = s;
            heap.push(Label { dist: offset, source: s, vertex: s });
        }
    }
    while let Some(Label { dist: d, source: src, vertex: v }) = heap.pop() {
        if done[v] || d != dist[v] || src != source[v] {
            continue;
        }
        done[v] = true;
        order.push(v);
        for &(w, e) in g.neighbors(v) {
            if done[w] {
                continue;
            }
            let cand = d + g.length(e);
            let better = match cand.total_cmp(&dist[w]) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => match src.cmp(&source[w]) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => parent[w].is_some_and(|(p, _)| v < p),
                },
            };
            if better {
                let requeue = cand != dist[w] || src != source[w];
                dist[w] = cand;
                source[w] = src;
                parent[w] = Some((v, e));
                if requeue {
                    heap.push(Label { dist: cand, source: src, vertex: w });
                }
            }
        }
    }
    ShortestPaths { dist, source, parent, order }
}

/// Partition of the vertex set into pieces of radius at most `d/2`, each
/// certified by a shortest-path tree from its root.
#[derive(Clone, Debug)]
pub struct PartitionResult {
    /// Piece index of each vertex.
    pub piece: Vec<usize>,
    /// Root vertex of each piece, in increasing vertex order.
    pub roots: Vec<usize>,
    /// Parent `(vertex, edge index)` in the piece's certificate tree.
    pub parent: Vec<Option<(usize, usize)>>,
    /// Distance from the piece root along the certificate tree.
    pub depth: Vec<f64>,
}

impl PartitionResult {
    pub fn pieces(&self) -> usize {
        self.roots.len()
    }

    /// Edge indices of all certificate trees.
    pub fn tree_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.parent.iter().filter_map(|p| p.map(|(_, e)| e))
    }

    pub fn is_cut(&self, g: &MultiGraph, e: usize) -> bool {
        let edge = g.edge(e);
        self.piece[edge.u] != self.piece[edge.v]
    }

    pub fn cut_edges(&self, g: &MultiGraph) -> Vec<usize> {
        (0..g.m()).filter(|&e| self.is_cut(g, e)).collect()
    }

    pub fn radius(&self, piece: usize) -> f64 {
        self.depth
            .iter()
            .zip(&self.piece)
            .filter(|(_, &p)| p == piece)
            .map(|(&d, _)| d)
            .fold(0.0, f64::max)
    }
}

/// Randomized partition at target diameter `d`. Every vertex draws a shift
/// `δ_u` from `Exp(shift_rate)` truncated to `[0, d/2)` and starts at
/// `d/2 - δ_u`.
/// Each vertex joins the source reaching it first, so every piece has
/// radius at most `d/2` around its root.
pub fn partition<R: Rng + ?Sized>(g: &MultiGraph, d: f64, log_n: f64, rng: &mut R) -> Result<PartitionResult> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(invalid(format!("partition diameter must be positive, got {d}")));
    }
    let n = g.n();
    let half = d / 2.0;
    let rate = shift_rate(d, log_n);
    // inverse CDF of the truncated law
    let mass = -(-rate * half).exp_m1();
    let sources: Vec<(usize, f64)> = (0..n)
        .map(|v| {
            let u: f64 = rng.random();
            let shift = (-(-u * mass).ln_1p() / rate).min(half);
            (v, half - shift)
        })
        .collect();
    let sp = sssp(g, &sources);
    let mut piece = vec![usize::MAX; n];
    let mut roots = Vec::new();
    for v in 0..n {
        if sp.source[v] == v {
            piece[v] = roots.len();
            roots.push(v);
        }
    }
    let mut depth = vec![0.0; n];
    for &v in &sp.order {
        piece[v] = piece[sp.source[v]];
        if let Some((p, e)) = sp.parent[v] {
            depth[v] = depth[p] + g.length(e);
        }
    }
    Ok(PartitionResult { piece, roots, parent: sp.parent, depth })
}

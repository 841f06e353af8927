//! Bottom-up AKPW clustering: forests `A_0 ⊆ A_1 ⊆ ... ⊆ A_s` where round
//! `j` partitions the unit-length quotient over buckets `0..j` at
//! diameter `δ/3`.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::{bucket_by_length, forest_diameters, Edge, MultiGraph, UnionFind};
use crate::partition::{partition, PartitionResult};

const NONE: usize = usize::MAX;

/// Hierarchy of AKPW clusters. Nodes `0..n` are single vertices; every
/// other node is a cluster formed at `level(x)` by merging its children.
#[derive(Clone, Debug)]
pub struct AkpwDecomposition {
    n: usize,
    delta: f64,
    rounds: usize,
    level: Vec<usize>,
    parent: Vec<usize>,
    children: Vec<Vec<usize>>,
    rep: Vec<usize>,
    /// Forest edges added when each node was formed.
    node_edges: Vec<Vec<usize>>,
    /// Graph edges whose endpoints first meet in each node.
    attached: Vec<Vec<usize>>,
    join_level: Vec<usize>,
    connect: Vec<usize>,
    bucket: Vec<usize>,
    participation: Vec<u32>,
}

impl AkpwDecomposition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of rounds `s`; `A_s` spans the graph.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn node_count(&self) -> usize {
        self.level.len()
    }

    pub fn root(&self) -> usize {
        self.level.len() - 1
    }

    pub fn is_vertex(&self, x: usize) -> bool {
        x < self.n
    }

    pub fn level(&self, x: usize) -> usize {
        self.level[x]
    }

    pub fn parent(&self, x: usize) -> Option<usize> {
        (self.parent[x] != NONE).then_some(self.parent[x])
    }

    pub fn children(&self, x: usize) -> &[usize] {
        &self.children[x]
    }

    /// Smallest vertex of the cluster.
    pub fn rep(&self, x: usize) -> usize {
        self.rep[x]
    }

    pub fn node_edges(&self, x: usize) -> &[usize] {
        &self.node_edges[x]
    }

    pub fn attached(&self, x: usize) -> &[usize] {
        &self.attached[x]
    }

    /// Forest edges with the level at which each joined.
    pub fn forest(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.join_level.iter().enumerate().filter(|(_, &j)| j != NONE).map(|(e, &j)| (e, j))
    }

    /// Edge indices of `A_j`.
    pub fn forest_edges(&self, j: usize) -> Vec<usize> {
        self.forest().filter(|&(_, l)| l <= j).map(|(e, _)| e).collect()
    }

    /// Round after which the edge joined the forest, if it did.
    pub fn join_level(&self, e: usize) -> Option<usize> {
        (self.join_level[e] != NONE).then_some(self.join_level[e])
    }

    /// Smallest `j` with both endpoints of edge `e` in one component of `A_j`.
    pub fn edge_connect_level(&self, e: usize) -> usize {
        self.connect[e]
    }

    pub fn bucket(&self, e: usize) -> usize {
        self.bucket[e]
    }

    /// Number of rounds each edge appeared in the quotient graph.
    pub fn participation(&self) -> &[u32] {
        &self.participation
    }

    /// An edge of bucket `i` not yet inside one cluster of `A_{i+1}`.
    pub fn is_akpw_cut(&self, e: usize) -> bool {
        self.connect[e] > self.bucket[e] + 1
    }

    /// Cluster of `A_j` containing vertex `v`.
    pub fn component_at(&self, v: usize, j: usize) -> usize {
        let mut x = v;
        while self.parent[x] != NONE && self.level[self.parent[x]] <= j {
            x = self.parent[x];
        }
        x
    }

    /// Smallest `j` with `u` and `v` in one component of `A_j`; 0 if `u == v`.
    pub fn connect_level(&self, u: usize, v: usize) -> usize {
        self.level[self.lca(u, v)]
    }

    fn lca(&self, u: usize, v: usize) -> usize {
        let (mut a, mut b) = (u, v);
        while a != b {
            if self.level[a] <= self.level[b] && self.parent[a] != NONE {
                a = self.parent[a];
            } else {
                b = self.parent[b];
            }
        }
        a
    }

    /// Forest edges inside cluster `x`.
    pub fn cluster_edges(&self, x: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![x];
        while let Some(y) = stack.pop() {
            out.extend_from_slice(&self.node_edges[y]);
            stack.extend_from_slice(&self.children[y]);
        }
        out
    }

    pub fn cluster_vertices(&self, x: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![x];
        while let Some(y) = stack.pop() {
            if y < self.n {
                out.push(y);
            }
            stack.extend_from_slice(&self.children[y]);
        }
        out
    }

    /// Checks spanning, bucket eligibility of forest edges and the
    /// diameter bound `δ^{j+1}` of every `A_j` component.
    pub fn check(&self, g: &MultiGraph) -> Result<()> {
        let all = self.forest_edges(self.rounds);
        if self.n > 0 && all.len() != self.n - 1 {
            return Err(invalid(format!("A_s has {} edges for {} vertices", all.len(), self.n)));
        }
        for (e, j) in self.forest() {
            if j < self.bucket[e] + 1 {
                return Err(invalid(format!("edge {e} of bucket {} joined at level {j}", self.bucket[e])));
            }
        }
        for j in 0..=self.rounds {
            let forest: Vec<(usize, usize, f64)> = self
                .forest()
                .filter(|&(_, l)| l <= j)
                .map(|(e, _)| (g.edge(e).u, g.edge(e).v, g.length(e)))
                .collect();
            let (_, diam) = forest_diameters(self.n, &forest);
            let bound = self.delta.powi(j as i32 + 1) * (1.0 + 1e-9);
            if let Some(d) = diam.iter().find(|&&d| d > bound) {
                return Err(invalid(format!("A_{j} component diameter {d} exceeds δ^{}", j + 1)));
            }
        }
        Ok(())
    }
}

/// Upper bound on rounds before giving up.
const MAX_ROUNDS: usize = 4096;

/// Builds the AKPW hierarchy of a connected graph with lengths at least 1.
/// Needs `δ > 6` so a unit quotient edge fits inside radius `δ/6`.
pub fn akpw<R: Rng + ?Sized>(g: &MultiGraph, delta: f64, log_n: f64, rng: &mut R) -> Result<AkpwDecomposition> {
    if !(delta > 6.0 && delta.is_finite()) {
        return Err(invalid(format!("AKPW needs δ > 6, got {delta}")));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if delta < 2.0 * crate::C_PARTITION * log_n {
        log::debug!("δ = {delta} below 2 c_P ln n; cut-decay guarantees do not apply");
    }
    let n = g.n();
    let buckets = bucket_by_length(g, delta)?;
    let mut dec = AkpwDecomposition {
        n,
        delta,
        rounds: 0,
        level: vec![0; n],
        parent: vec![NONE; n],
        children: vec![Vec::new(); n],
        rep: (0..n).collect(),
        node_edges: vec![Vec::new(); n],
        attached: vec![Vec::new(); n],
        join_level: vec![NONE; g.m()],
        connect: vec![0; g.m()],
        bucket: (0..g.m()).map(|e| buckets.bucket_of(e)).collect(),
        participation: vec![0; g.m()],
    };
    let mut uf = UnionFind::new(n);
    let mut node_of_root: Vec<usize> = (0..n).collect();
    let mut pool: Vec<usize> = Vec::new();
    let mut round = 0;
    while uf.count() > 1 {
        if round >= MAX_ROUNDS {
            return Err(invalid("AKPW did not converge"));
        }
        pool.extend_from_slice(buckets.bucket(round));
        pool.retain(|&e| !uf.same(g.edge(e).u, g.edge(e).v));
        pool.sort_unstable();
        for &e in &pool {
            dec.participation[e] += 1;
        }
        let (local, members) = unit_quotient(g, &pool, &mut uf);
        let part: PartitionResult = partition(&local, delta / 3.0, log_n, rng)?;
        let mut piece_nodes: Vec<Vec<usize>> = vec![Vec::new(); part.pieces()];
        let mut piece_edges: Vec<Vec<usize>> = vec![Vec::new(); part.pieces()];
        for (x, &root) in members.iter().enumerate() {
            piece_nodes[part.piece[x]].push(node_of_root[root]);
        }
        for le in part.tree_edges() {
            let id = local.edge(le).id;
            dec.join_level[id] = round + 1;
            piece_edges[part.piece[local.edge(le).u]].push(id);
            uf.union(g.edge(id).u, g.edge(id).v);
        }
        for (nodes, edges) in piece_nodes.into_iter().zip(piece_edges) {
            if nodes.len() < 2 {
                continue;
            }
            let id = dec.level.len();
            dec.level.push(round + 1);
            dec.parent.push(NONE);
            dec.rep.push(nodes.iter().map(|&c| dec.rep[c]).min().unwrap());
            for &c in &nodes {
                dec.parent[c] = id;
            }
            dec.children.push(nodes);
            dec.node_edges.push(edges);
            dec.attached.push(Vec::new());
            let r = uf.find(dec.rep[id]);
            node_of_root[r] = id;
        }
        round += 1;
    }
    dec.rounds = round;
    if n == 1 {
        dec.rounds = 0;
    }
    for e in 0..g.m() {
        let edge = g.edge(e);
        let x = dec.lca(edge.u, edge.v);
        dec.connect[e] = dec.level[x];
        dec.attached[x].push(e);
    }
    Ok(dec)
}

/// Unit-length graph over the components touched by `pool`, with the
/// union-find root of each local vertex.
fn unit_quotient(g: &MultiGraph, pool: &[usize], uf: &mut UnionFind) -> (MultiGraph, Vec<usize>) {
    let mut roots: Vec<usize> = pool
        .iter()
        .flat_map(|&e| [uf.find(g.edge(e).u), uf.find(g.edge(e).v)])
        .collect();
    roots.sort_unstable();
    roots.dedup();
    let local_of = |r: usize| roots.binary_search(&r).unwrap();
    let edges: Vec<Edge> = pool
        .iter()
        .map(|&id| Edge {
            u: local_of(uf.find(g.edge(id).u)),
            v: local_of(uf.find(g.edge(id).v)),
            length: 1.0,
            id,
        })
        .collect();
    let local = MultiGraph::from_edges(roots.len(), edges).expect("quotient edges are valid");
    (local, roots)
}

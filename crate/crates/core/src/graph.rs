//! Undirected multigraphs with positive edge lengths, union-find, length
//! bucketing and quotient graphs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// `max(ln n, 1)`, the logarithm used by every length threshold.
pub fn log_n(n: usize) -> f64 {
    (n.max(1) as f64).ln().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
    /// Stable identifier; survives quotients and rescaling.
    pub id: usize,
}

impl Edge {
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Multigraph stored as an edge list plus CSR adjacency. Parallel edges are
/// allowed, self-loops are not.
#[derive(Clone, Debug)]
pub struct MultiGraph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    // (neighbor, edge index)
    adj: Vec<(usize, usize)>,
}

impl MultiGraph {
    /// Builds a graph whose edge ids are the positions in `edges`.
    pub fn new(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let edges = edges
            .iter()
            .enumerate()
            .map(|(id, &(u, v, length))| Edge { u, v, length, id })
            .collect();
        Self::from_edges(n, edges)
    }

    pub fn from_edges(n: usize, edges: Vec<Edge>) -> Result<Self> {
        for (i, e) in edges.iter().enumerate() {
            for x in [e.u, e.v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if e.u == e.v {
                return Err(Error::SelfLoop { edge: i, vertex: e.u });
            }
            if !(e.length > 0.0 && e.length.is_finite()) {
                return Err(Error::BadLength { edge: i, length: e.length });
            }
        }
        Ok(Self::build(n, edges))
    }

    fn build(n: usize, edges: Vec<Edge>) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for e in &edges {
            offsets[e.u + 1] += 1;
            offsets[e.v + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![(0, 0); offsets[n]];
        for (i, e) in edges.iter().enumerate() {
            adj[fill[e.u]] = (e.v, i);
            fill[e.u] += 1;
            adj[fill[e.v]] = (e.u, i);
            fill[e.v] += 1;
        }
        MultiGraph { n, edges, offsets, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn length(&self, i: usize) -> f64 {
        self.edges[i].length
    }

    /// `(neighbor, edge index)` pairs incident to `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn min_length(&self) -> Option<f64> {
        self.edges.iter().map(|e| e.length).reduce(f64::min)
    }

    pub fn max_length(&self) -> Option<f64> {
        self.edges.iter().map(|e| e.length).reduce(f64::max)
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Same topology and ids, lengths replaced by `f(length)`.
    pub fn map_lengths(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { length: f(e.length), ..*e })
            .collect();
        Self::from_edges(self.n, edges)
    }

    /// Parses `u v length` lines; `#` starts a comment. The vertex count is
    /// one more than the largest id unless a `# n <count>` line is present.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut declared_n = None;
        let mut max_id = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                let mut parts = comment.split_whitespace();
                if parts.next() == Some("n") {
                    if let Some(Ok(n)) = parts.next().map(str::parse::<usize>) {
                        declared_n = Some(n);
                    }
                }
                continue;
            }
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: &str| Error::Parse { line: lineno + 1, msg: msg.to_string() };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_err("expected `u v length`"));
            }
            let u: usize = fields[0].parse().map_err(|_| parse_err("bad vertex id"))?;
            let v: usize = fields[1].parse().map_err(|_| parse_err("bad vertex id"))?;
            let l: f64 = fields[2].parse().map_err(|_| parse_err("bad length"))?;
            max_id = Some(max_id.unwrap_or(0).max(u).max(v));
            edges.push((u, v, l));
        }
        let n = declared_n.unwrap_or(max_id.map_or(0, |x| x + 1));
        Self::new(n, &edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# n {}\n", self.n);
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.u, e.v, e.length);
        }
        out
    }
}

/// Result of [`normalize`]: the rescaled graph, the divisor and `Δ`.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub graph: MultiGraph,
    pub min_length: f64,
    pub delta: f64,
}

/// Divides all lengths by the minimum so the shortest edge has length 1.
pub fn normalize(g: &MultiGraph) -> Result<Normalized> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let Some(min) = g.min_length() else {
        return Ok(Normalized { graph: g.clone(), min_length: 1.0, delta: 1.0 });
    };
    let graph = g.map_lengths(|l| l / min)?;
    let delta = graph.max_length().unwrap_or(1.0);
    Ok(Normalized { graph, min_length: min, delta })
}

#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
    count: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n], count: n }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Returns `false` if `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if self.rank[ra] < self.rank[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[lo] = hi;
        if self.rank[lo] == self.rank[hi] {
            self.rank[hi] += 1;
        }
        self.count -= 1;
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Number of components.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Dense component labels numbered by smallest member.
    pub fn labels(&mut self) -> Vec<usize> {
        let n = self.len();
        let mut label_of_root = vec![usize::MAX; n];
        let mut labels = vec![0; n];
        let mut next = 0;
        for v in 0..n {
            let r = self.find(v);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            labels[v] = label_of_root[r];
        }
        labels
    }
}

/// Bucket index `floor(log_base l)`, snapped so exact powers land on their
/// own bucket despite rounding in the logarithm.
pub fn bucket_index(length: f64, base: f64) -> usize {
    let x = length.ln() / base.ln();
    let r = x.round();
    let i = if (x - r).abs() <= 1e-9 * x.abs().max(1.0) { r } else { x.floor() };
    i.max(0.0) as usize
}

/// Edges grouped by `floor(log_base length)`; within a bucket edges are
/// ordered by length, then id.
#[derive(Clone, Debug)]
pub struct LengthBuckets {
    pub base: f64,
    buckets: BTreeMap<usize, Vec<usize>>,
    index: Vec<usize>,
}

impl LengthBuckets {
    pub fn bucket(&self, i: usize) -> &[usize] {
        self.buckets.get(&i).map_or(&[], Vec::as_slice)
    }

    /// Bucket of edge index `e`.
    pub fn bucket_of(&self, e: usize) -> usize {
        self.index[e]
    }

    pub fn max_bucket(&self) -> Option<usize> {
        self.buckets.keys().next_back().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[usize])> {
        self.buckets.iter().map(|(&i, v)| (i, v.as_slice()))
    }
}

/// Groups edges of a normalized graph (lengths >= 1) by length scale.
pub fn bucket_by_length(g: &MultiGraph, base: f64) -> Result<LengthBuckets> {
    if !(base > 1.0 && base.is_finite()) {
        return Err(crate::error::invalid(format!("bucket base must exceed 1, got {base}")));
    }
    let mut order: Vec<usize> = (0..g.m()).collect();
    order.sort_by(|&a, &b| g.length(a).total_cmp(&g.length(b)).then(a.cmp(&b)));
    let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut index = vec![0; g.m()];
    for e in order {
        let l = g.length(e);
        if l < 1.0 {
            return Err(Error::BadLength { edge: e, length: l });
        }
        let i = bucket_index(l, base);
        index[e] = i;
        buckets.entry(i).or_default().push(e);
    }
    Ok(LengthBuckets { base, buckets, index })
}

/// Graph with the components of a union-find contracted to single vertices.
#[derive(Clone, Debug)]
pub struct Quotient {
    /// Edges whose endpoints lie in different components; ids are kept.
    pub graph: MultiGraph,
    /// Union-find root represented by each quotient vertex.
    pub roots: Vec<usize>,
    /// Quotient vertex of each original vertex.
    pub vertex_map: Vec<usize>,
}

/// Contracts the components of `uf`; quotient vertices are ordered by
/// smallest member.
pub fn quotient(g: &MultiGraph, uf: &mut UnionFind) -> Quotient {
    let n = g.n();
    let mut of_root = vec![usize::MAX; n];
    let mut roots = Vec::new();
    let mut vertex_map = vec![0; n];
    for v in 0..n {
        let r = uf.find(v);
        if of_root[r] == usize::MAX {
            of_root[r] = roots.len();
            roots.push(r);
        }
        vertex_map[v] = of_root[r];
    }
    let edges = g
        .edges()
        .iter()
        .filter(|e| vertex_map[e.u] != vertex_map[e.v])
        .map(|e| Edge { u: vertex_map[e.u], v: vertex_map[e.v], ..*e })
        .collect();
    Quotient { graph: MultiGraph::build(roots.len(), edges), roots, vertex_map }
}

/// Weighted diameter of `component` within the sub-forest induced by it.
/// `forest` holds `(u, v, length)` triples over vertices `0..n`.
pub fn component_diameter(n: usize, forest: &[(usize, usize, f64)], component: &[usize]) -> Result<f64> {
    let Some(&start) = component.first() else {
        return Err(Error::EmptySet);
    };
    let mut inside = vec![false; n];
    for &v in component {
        if v >= n {
            return Err(Error::VertexOutOfRange { vertex: v, n });
        }
        inside[v] = true;
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(u, v, l) in forest {
        if u < n && v < n && inside[u] && inside[v] {
            adj[u].push((v, l));
            adj[v].push((u, l));
        }
    }
    let sweep = |src: usize| -> (usize, f64, usize) {
        let mut dist = vec![f64::NAN; n];
        dist[src] = 0.0;
        let mut stack = vec![src];
        let (mut far, mut best, mut reached) = (src, 0.0, 1);
        while let Some(x) = stack.pop() {
            for &(y, l) in &adj[x] {
                if dist[y].is_nan() {
                    dist[y] = dist[x] + l;
                    reached += 1;
                    if dist[y] > best {
                        best = dist[y];
                        far = y;
                    }
                    stack.push(y);
                }
            }
        }
        (far, best, reached)
    };
    let (far, _, reached) = sweep(start);
    let distinct = {
        let mut c = component.to_vec();
        c.sort_unstable();
        c.dedup();
        c.len()
    };
    if reached != distinct {
        return Err(Error::NotConnected);
    }
    Ok(sweep(far).1)
}

/// Components and weighted diameters of every tree in a forest.
/// Returns `(label per vertex, diameter per label)`.
pub fn forest_diameters(n: usize, forest: &[(usize, usize, f64)]) -> (Vec<usize>, Vec<f64>) {
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(u, v, l) in forest {
        adj[u].push((v, l));
        adj[v].push((u, l));
    }
    let mut label = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    let mut stamp = vec![usize::MAX; n];
    let mut diam = Vec::new();
    let mut stack = Vec::new();
    let mut members = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let id = diam.len();
        members.clear();
        label[s] = id;
        stack.push(s);
        while let Some(x) = stack.pop() {
            members.push(x);
            for &(y, _) in &adj[x] {
                if label[y] == usize::MAX {
                    label[y] = id;
                    stack.push(y);
                }
            }
        }
        let mut far = s;
        let mut best = 0.0;
        for (round, src) in [(2 * id, s), (2 * id + 1, usize::MAX)] {
            let src = if src == usize::MAX { far } else { src };
            best = 0.0;
            dist[src] = 0.0;
            stamp[src] = round;
            stack.push(src);
            while let Some(x) = stack.pop() {
                for &(y, l) in &adj[x] {
                    if stamp[y] != round {
                        stamp[y] = round;
                        dist[y] = dist[x] + l;
                        if dist[y] > best {
                            best = dist[y];
                            far = y;
                        }
                        stack.push(y);
                    }
                }
            }
        }
        diam.push(best);
    }
    (label, diam)
}

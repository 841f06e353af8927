//! Top-down refinement inside an AKPW scope, with implicit storage of the
//! AKPW clusters each level reuses.

use rand::Rng;

use crate::akpw::AkpwDecomposition;
use crate::bartal::{BartalDecomposition, Decomposition, DiameterSequence, Level, LevelEdge};
use crate::error::{invalid, Error, Result};
use crate::graph::{log_n, Edge, MultiGraph};
use crate::hierarchy::{HierNode, Hierarchy};
use crate::partition::{partition, sssp};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScopeMode {
    Full,
    /// Edge-tossing variant with `δ = k ln n`.
    Simplified { k: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScopeParams {
    pub q: f64,
    pub delta: f64,
    pub mode: ScopeMode,
}

/// Smallest δ accepted by [`crate::akpw::akpw`] in simplified mode.
pub const MIN_SIMPLIFIED_DELTA: f64 = 8.0;

impl ScopeParams {
    pub fn full(q: f64, delta: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(invalid(format!("q must lie in (0, 1), got {q}")));
        }
        if !(delta > 1.0 && delta.is_finite()) {
            return Err(invalid(format!("δ must exceed 1, got {delta}")));
        }
        Ok(ScopeParams { q, delta, mode: ScopeMode::Full })
    }

    /// `δ = max(k log n, 8)`.
    pub fn simplified(k: f64, log_n: f64) -> Result<Self> {
        if !(k >= 1.0 && k.is_finite()) {
            return Err(invalid(format!("k must be at least 1, got {k}")));
        }
        let delta = (k * log_n).max(MIN_SIMPLIFIED_DELTA);
        Ok(ScopeParams { q: 0.5, delta, mode: ScopeMode::Simplified { k } })
    }

    /// Whether δ is large enough for the cut-decay bounds used by full mode.
    pub fn meets_precondition(&self, log_n: f64) -> bool {
        match self.mode {
            ScopeMode::Full => self.delta >= (crate::C_PARTITION * log_n).powf(1.0 / (1.0 - self.q)),
            ScopeMode::Simplified { .. } => true,
        }
    }

    fn offset(&self) -> f64 {
        match self.mode {
            ScopeMode::Full => 1.0 / (1.0 - self.q) + 1.0,
            ScopeMode::Simplified { .. } => 3.0,
        }
    }
}

/// Largest `j` with `δ^{j + offset} <= d`, where the offset is
/// `1/(1-q) + 1` in full mode and 3 in simplified mode. May be negative.
pub fn scope(d: f64, params: &ScopeParams) -> i64 {
    let x = d.ln() / params.delta.ln() - params.offset();
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as i64
    } else {
        x.floor() as i64
    }
}

/// AKPW cluster referenced by a level instead of storing its edges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterRef {
    /// Hierarchy node the cluster belongs to.
    pub node: usize,
    /// AKPW node id.
    pub cluster: usize,
}

#[derive(Clone, Debug, Default)]
pub struct ImplicitLevel {
    /// AKPW level whose clusters are contracted at this level.
    pub scope: Option<usize>,
    /// `(hierarchy node, edge)`; lengths are before the level scale.
    pub edges: Vec<(usize, LevelEdge)>,
    pub refs: Vec<ClusterRef>,
    /// `(hierarchy node, root vertex)` of each non-trivial component.
    pub roots: Vec<(usize, usize)>,
}

/// Per-run counters of the top-down loop.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    /// Partition calls each edge took part in.
    pub participation: Vec<u32>,
    /// Edges passed to partition at each level.
    pub level_sizes: Vec<usize>,
    /// Edges with raised length at each level.
    pub floating: Vec<usize>,
    /// Edges separated at a level where they were floating.
    pub floating_cut: Vec<bool>,
    /// Floating edges with length in `[d_i/δ^4, d_i/δ^2]`, summed over levels.
    pub floating_narrow_band: usize,
    /// Floating edges with length in `[d_i/δ^5, d_i/log n)`, summed over levels.
    pub floating_wide_band: usize,
}

/// Decomposition whose levels reference AKPW clusters by id. Level `i`
/// lengths are the stored lengths times `scale[i]`.
#[derive(Clone, Debug)]
pub struct ImplicitDecomposition {
    pub diameters: DiameterSequence,
    pub scale: Vec<f64>,
    pub levels: Vec<ImplicitLevel>,
    pub hierarchy: Hierarchy,
    pub cut_level: Vec<usize>,
    /// Ignored edges (simplified mode), sorted.
    pub ignored: Vec<usize>,
    pub trace: Trace,
    base_lengths: Vec<f64>,
    akpw_key: Option<(usize, u64)>,
}

impl Decomposition for ImplicitDecomposition {
    fn diameters(&self) -> &DiameterSequence {
        &self.diameters
    }

    fn cut_levels(&self) -> &[usize] {
        &self.cut_level
    }

    fn rescale(&mut self, factors: &[f64]) {
        self.diameters = self.diameters.scaled(factors);
        for (s, f) in self.scale.iter_mut().zip(factors) {
            *s *= f;
        }
    }
}

fn akpw_key(a: &AkpwDecomposition) -> (usize, u64) {
    (a.node_count(), a.delta().to_bits())
}

impl ImplicitDecomposition {
    pub fn t(&self) -> usize {
        self.levels.len() - 1
    }

    /// Lengths of the decomposed graph before level scaling.
    pub fn base_lengths(&self) -> &[f64] {
        &self.base_lengths
    }

    /// Explicit edges plus cluster references over all levels.
    pub fn stored_size(&self) -> usize {
        self.levels.iter().map(|l| l.edges.len() + l.refs.len()).sum()
    }

    pub(crate) fn check_akpw(&self, akpw: Option<&AkpwDecomposition>) -> Result<()> {
        match (self.akpw_key, akpw) {
            (None, _) => Ok(()),
            (Some(k), Some(a)) if akpw_key(a) == k => Ok(()),
            _ => Err(Error::HierarchyMismatch),
        }
    }

    /// Materializes every level as an explicit forest over `g`, whose edges
    /// must be in the same order as the decomposed graph.
    pub fn expand(&self, g: &MultiGraph, akpw: Option<&AkpwDecomposition>) -> Result<BartalDecomposition> {
        self.check_akpw(akpw)?;
        if g.m() != self.base_lengths.len() {
            return Err(Error::HierarchyMismatch);
        }
        let mut levels = Vec::with_capacity(self.levels.len());
        for (i, lvl) in self.levels.iter().enumerate() {
            let s = self.scale[i];
            let mut edges: Vec<LevelEdge> =
                lvl.edges.iter().map(|(_, le)| LevelEdge { edge: le.edge, length: le.length * s }).collect();
            for r in &lvl.refs {
                let a = akpw.ok_or(Error::HierarchyMismatch)?;
                for e in a.cluster_edges(r.cluster) {
                    edges.push(LevelEdge { edge: e, length: self.base_lengths[e] * s });
                }
            }
            edges.sort_by_key(|le| le.edge);
            let roots = lvl.roots.iter().map(|&(_, r)| r).collect();
            levels.push(Level { edges, roots });
        }
        Ok(BartalDecomposition { diameters: self.diameters.clone(), levels, cut_level: self.cut_level.clone() })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticipationStats {
    pub per_edge: Vec<u32>,
    pub per_level: Vec<usize>,
    pub total: usize,
    pub mean: f64,
    pub max: u32,
}

pub fn participation_stats(trace: &Trace) -> ParticipationStats {
    let total: usize = trace.participation.iter().map(|&c| c as usize).sum();
    let m = trace.participation.len();
    ParticipationStats {
        per_edge: trace.participation.clone(),
        per_level: trace.level_sizes.clone(),
        total,
        mean: if m == 0 { 0.0 } else { total as f64 / m as f64 },
        max: trace.participation.iter().copied().max().unwrap_or(0),
    }
}

/// Two-stage decomposition: level 0 is the spanning AKPW tree, and level
/// `i` partitions `B_{i-1} / A_{scope(i)}` at diameter `d_i / 3` after
/// raising lengths to `δ^{scope(i)+1}` and dropping edges of length at
/// least `d_i / log n`.
pub fn decompose_two_stage<R: Rng + ?Sized>(
    g: &MultiGraph,
    dd: &DiameterSequence,
    akpw: &AkpwDecomposition,
    params: &ScopeParams,
    rng: &mut R,
) -> Result<ImplicitDecomposition> {
    if akpw.delta().to_bits() != params.delta.to_bits() || akpw.n() != g.n() {
        return Err(Error::HierarchyMismatch);
    }
    run_top_down(g, dd, Some(akpw), Some(params), 3.0, rng)
}

/// Smallest `d_0` valid for a decomposition starting at `A_s`.
pub fn initial_diameter(g: &MultiGraph, akpw: &AkpwDecomposition) -> f64 {
    let forest: Vec<(usize, usize, f64)> = akpw
        .forest()
        .map(|(e, _)| (g.edge(e).u, g.edge(e).v, g.length(e)))
        .collect();
    let (_, diam) = crate::graph::forest_diameters(g.n(), &forest);
    let longest = forest.iter().map(|f| f.2).fold(0.0, f64::max);
    diam.iter().copied().fold(0.0, f64::max).max(longest * log_n(g.n())).max(1.0)
}

struct Comp {
    node: usize,
    clusters: Vec<usize>,
    edges: Vec<usize>,
}

struct Engine<'a> {
    g: &'a MultiGraph,
    akpw: Option<&'a AkpwDecomposition>,
    levels: Vec<ImplicitLevel>,
    nodes: Vec<HierNode>,
    leaf_of: Vec<usize>,
    trace: Trace,
    local: Vec<usize>,
}

impl Engine<'_> {
    fn rep(&self, x: usize) -> usize {
        self.akpw.map_or(x, |a| a.rep(x))
    }

    fn is_vertex(&self, x: usize) -> bool {
        x < self.g.n()
    }

    fn cluster_at(&self, v: usize, scope: Option<usize>) -> usize {
        match (self.akpw, scope) {
            (Some(a), Some(j)) => a.component_at(v, j),
            _ => v,
        }
    }

    fn new_node(&mut self, parent: Option<usize>, level: usize, center: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(HierNode::new(parent, level, center));
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        id
    }

    fn new_leaf(&mut self, parent: Option<usize>, level: usize, v: usize, t: usize) {
        let id = self.new_node(parent, level, v);
        self.nodes[id].last = t;
        self.leaf_of[v] = id;
    }

    /// Stores level `i` data of a component and points its node at it.
    fn record(&mut self, i: usize, node: usize, edges: &[LevelEdge], clusters: &[usize], root: usize) {
        let lvl = &mut self.levels[i];
        let e0 = lvl.edges.len();
        lvl.edges.extend(edges.iter().map(|&le| (node, le)));
        let r0 = lvl.refs.len();
        for &c in clusters {
            if c >= self.g.n() {
                lvl.refs.push(ClusterRef { node, cluster: c });
            }
        }
        lvl.roots.push((node, root));
        let (e1, r1) = (lvl.edges.len(), lvl.refs.len());
        let n = &mut self.nodes[node];
        n.last = i;
        n.edges = e0..e1;
        n.refs = r0..r1;
    }

    fn expand_clusters(&self, comp: &mut Comp, scope: Option<usize>) {
        let Some(a) = self.akpw else { return };
        let limit = scope.map_or(0, |j| j);
        let mut out = Vec::with_capacity(comp.clusters.len());
        let mut stack: Vec<usize> = comp.clusters.iter().rev().copied().collect();
        while let Some(x) = stack.pop() {
            if a.is_vertex(x) || (scope.is_some() && a.level(x) <= limit) {
                out.push(x);
            } else {
                comp.edges.extend_from_slice(a.attached(x));
                stack.extend(a.children(x).iter().rev());
            }
        }
        comp.clusters = out;
    }
}

/// Shared top-down loop. Without an AKPW hierarchy it is the plain
/// decomposition with level 0 a shortest-path tree from vertex 0.
pub(crate) fn run_top_down<R: Rng + ?Sized>(
    g: &MultiGraph,
    dd: &DiameterSequence,
    akpw: Option<&AkpwDecomposition>,
    params: Option<&ScopeParams>,
    divisor: f64,
    rng: &mut R,
) -> Result<ImplicitDecomposition> {
    let n = g.n();
    if n == 0 {
        return Err(invalid("graph has no vertices"));
    }
    let t = dd.t();
    let ln = log_n(n);
    let m = g.m();
    let space = akpw.map_or(n, |a| a.node_count());
    let mut eng = Engine {
        g,
        akpw,
        levels: vec![ImplicitLevel::default(); t + 1],
        nodes: Vec::new(),
        leaf_of: vec![usize::MAX; n],
        trace: Trace {
            participation: vec![0; m],
            level_sizes: vec![0; t + 1],
            floating: vec![0; t + 1],
            floating_cut: vec![false; m],
            ..Trace::default()
        },
        local: vec![usize::MAX; space],
    };
    let mut active = Vec::new();
    if n == 1 {
        eng.new_leaf(None, 0, 0, t);
    } else {
        let root = eng.new_node(None, 0, 0);
        match akpw {
            None => {
                let sp = sssp(g, &[(0, 0.0)]);
                let edges: Vec<LevelEdge> = sp
                    .parent
                    .iter()
                    .filter_map(|p| p.map(|(_, e)| LevelEdge { edge: e, length: g.length(e) }))
                    .collect();
                let clusters: Vec<usize> = (0..n).collect();
                eng.record(0, root, &edges, &[], 0);
                active.push(Comp { node: root, clusters, edges: (0..m).collect() });
            }
            Some(a) => {
                let top = a.root();
                eng.levels[0].scope = Some(a.rounds());
                eng.record(0, root, &[], &[top], a.rep(top));
                active.push(Comp { node: root, clusters: vec![top], edges: Vec::new() });
            }
        }
    }

    for i in 1..=t {
        let d = dd[i];
        let thr = d / ln;
        let scope_i = match (akpw, params) {
            (Some(a), Some(p)) => {
                let j = scope(d, p);
                (j >= 0).then(|| (j as usize).min(a.rounds()))
            }
            _ => None,
        };
        eng.levels[i].scope = scope_i;
        let (raise, delta) = match (scope_i, params) {
            (Some(j), Some(p)) => (p.delta.powi(j as i32 + 1), p.delta),
            _ => (0.0, params.map_or(2.0, |p| p.delta)),
        };
        let mut next = Vec::new();
        for mut comp in std::mem::take(&mut active) {
            eng.expand_clusters(&mut comp, scope_i);
            if comp.clusters.len() == 1 {
                let x = comp.clusters[0];
                debug_assert!(!eng.is_vertex(x));
                let center = eng.nodes[comp.node].center;
                eng.record(i, comp.node, &[], &[x], center);
                next.push(comp);
                continue;
            }
            for (k, &c) in comp.clusters.iter().enumerate() {
                eng.local[c] = k;
            }
            let mut kept: Vec<Edge> = Vec::with_capacity(comp.edges.len());
            for &e in &comp.edges {
                let edge = g.edge(e);
                let l = edge.length;
                let raised = l.max(raise);
                if raised >= thr {
                    continue;
                }
                let cu = eng.cluster_at(edge.u, scope_i);
                let cv = eng.cluster_at(edge.v, scope_i);
                debug_assert_ne!(cu, cv);
                if raised > l {
                    eng.trace.floating[i] += 1;
                    if l >= d / delta.powi(4) && l <= d / delta.powi(2) {
                        eng.trace.floating_narrow_band += 1;
                    }
                    if l >= d / delta.powi(5) && l < thr {
                        eng.trace.floating_wide_band += 1;
                    }
                }
                eng.trace.participation[e] += 1;
                kept.push(Edge { u: eng.local[cu], v: eng.local[cv], length: raised, id: e });
            }
            eng.trace.level_sizes[i] += kept.len();
            let k = comp.clusters.len();
            let (piece, pieces, roots, tree): (Vec<usize>, usize, Vec<usize>, Vec<usize>) = if kept.is_empty() {
                ((0..k).collect(), k, (0..k).collect(), Vec::new())
            } else {
                let local = MultiGraph::from_edges(k, kept.clone())?;
                let part = partition(&local, d / divisor, ln, rng)?;
                let tree = part.tree_edges().collect();
                let pieces = part.pieces();
                (part.piece, pieces, part.roots, tree)
            };
            let mut piece_clusters: Vec<Vec<usize>> = vec![Vec::new(); pieces];
            for (x, &c) in comp.clusters.iter().enumerate() {
                piece_clusters[piece[x]].push(c);
            }
            let mut piece_edges: Vec<Vec<usize>> = vec![Vec::new(); pieces];
            for ke in &kept {
                if piece[ke.u] == piece[ke.v] {
                    piece_edges[piece[ke.u]].push(ke.id);
                } else if ke.length > g.length(ke.id) {
                    eng.trace.floating_cut[ke.id] = true;
                }
            }
            let mut piece_tree: Vec<Vec<LevelEdge>> = vec![Vec::new(); pieces];
            for &le in &tree {
                let ke = &kept[le];
                piece_tree[piece[ke.u]].push(LevelEdge { edge: ke.id, length: ke.length });
            }
            for c in &comp.clusters {
                eng.local[*c] = usize::MAX;
            }
            let node = comp.node;
            if pieces == 1 {
                let root = eng.rep(comp.clusters[roots[0]]);
                eng.record(i, node, &piece_tree[0], &comp.clusters, root);
                comp.edges = std::mem::take(&mut piece_edges[0]);
                next.push(comp);
                continue;
            }
            let center = eng.nodes[node].center;
            let center_cluster = eng.cluster_at(center, scope_i);
            let center_piece = comp.clusters.iter().position(|&c| c == center_cluster).map(|x| piece[x]);
            for p in 0..pieces {
                let clusters = std::mem::take(&mut piece_clusters[p]);
                if clusters.len() == 1 && eng.is_vertex(clusters[0]) {
                    eng.new_leaf(Some(node), i, clusters[0], t);
                    continue;
                }
                let root = eng.rep(comp.clusters[roots[p]]);
                let c = if center_piece == Some(p) { center } else { root };
                let child = eng.new_node(Some(node), i, c);
                eng.record(i, child, &piece_tree[p], &clusters, root);
                next.push(Comp { node: child, clusters, edges: std::mem::take(&mut piece_edges[p]) });
            }
        }
        active = next;
    }
    if !active.is_empty() {
        return Err(invalid("last diameter must be below the shortest edge"));
    }
    let hierarchy = Hierarchy { nodes: eng.nodes, leaf_of: eng.leaf_of };
    let cut_level = hierarchy.cut_levels(g);
    let mut ignored = Vec::new();
    if let (Some(a), Some(ScopeParams { mode: ScopeMode::Simplified { .. }, .. })) = (akpw, params) {
        ignored = (0..m).filter(|&e| a.is_akpw_cut(e) || eng.trace.floating_cut[e]).collect();
    }
    Ok(ImplicitDecomposition {
        diameters: dd.clone(),
        scale: vec![1.0; t + 1],
        levels: eng.levels,
        hierarchy,
        cut_level,
        ignored,
        trace: eng.trace,
        base_lengths: g.edges().iter().map(|e| e.length).collect(),
        akpw_key: akpw.map(akpw_key),
    })
}

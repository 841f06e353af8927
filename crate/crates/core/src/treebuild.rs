//! Steiner trees from decompositions: tree contraction, batched contraction
//! of the AKPW tree, and level stitching with persistent centers.

use std::fmt::Write as _;

use crate::akpw::AkpwDecomposition;
use crate::bartal::{validate_decomposition, BartalDecomposition};
use crate::error::{invalid, Error, Result};
use crate::graph::{MultiGraph, UnionFind};
use crate::hierarchy::{HierNode, Hierarchy};
use crate::lca::RootedForest;
use crate::two_stage::ImplicitDecomposition;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeEdge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

/// For each tree edge, the graph path from `π(a)` to `π(b)` as
/// `(graph edge, weight)` pairs in walk order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmbeddingCertificate {
    pub paths: Vec<Vec<(usize, f64)>>,
}

/// Tree over original vertices plus Steiner vertices `n_original..`.
#[derive(Clone, Debug, PartialEq)]
pub struct SteinerTree {
    pub n_original: usize,
    pub edges: Vec<TreeEdge>,
    /// Graph vertex of each tree vertex.
    pub pi: Vec<usize>,
    /// Tree vertex of each graph vertex.
    pub map: Vec<usize>,
    pub certificate: EmbeddingCertificate,
}

impl SteinerTree {
    pub fn n_total(&self) -> usize {
        self.pi.len()
    }

    /// Multiplies lengths by `f` and divides certificate weights by it.
    pub fn rescale(&mut self, f: f64) {
        for e in &mut self.edges {
            e.length *= f;
        }
        for path in &mut self.certificate.paths {
            for (_, w) in path {
                *w /= f;
            }
        }
    }

    /// Text form: optional `#` header lines, `n_total n_original`, edge
    /// lines `u v length`, `map orig tree` lines, `pi tree graph` lines for
    /// Steiner vertices, and `cert i: (e, w) ...` lines when requested.
    pub fn to_text(&self, header: &[String], with_certificate: bool) -> String {
        let mut out = String::new();
        for h in header {
            let _ = writeln!(out, "# {h}");
        }
        let _ = writeln!(out, "{} {}", self.n_total(), self.n_original);
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.a, e.b, e.length);
        }
        for (v, &x) in self.map.iter().enumerate() {
            let _ = writeln!(out, "map {v} {x}");
        }
        for x in 0..self.n_total() {
            if !self.map.get(self.pi[x]).is_some_and(|&y| y == x) {
                let _ = writeln!(out, "pi {} {}", x, self.pi[x]);
            }
        }
        if with_certificate {
            for (i, path) in self.certificate.paths.iter().enumerate() {
                let _ = write!(out, "cert {i}:");
                for (e, w) in path {
                    let _ = write!(out, " ({e}, {w})");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        let mut map: Vec<Option<usize>> = Vec::new();
        let mut pi: Vec<Option<usize>> = Vec::new();
        let mut paths: Vec<Vec<(usize, f64)>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::Parse { line: lineno + 1, msg: msg.to_string() };
            let num = |s: &str| s.parse::<usize>().map_err(|_| err("bad integer"));
            let Some((n_total, n_orig)) = header else {
                let f: Vec<&str> = line.split_whitespace().collect();
                if f.len() != 2 {
                    return Err(err("expected `n_total n_original`"));
                }
                let h = (num(f[0])?, num(f[1])?);
                if h.1 > h.0 {
                    return Err(err("more original than total vertices"));
                }
                header = Some(h);
                map = vec![None; h.1];
                pi = vec![None; h.0];
                continue;
            };
            if let Some(rest) = line.strip_prefix("cert") {
                let (idx, body) = rest.split_once(':').ok_or_else(|| err("expected `cert i:`"))?;
                let idx = num(idx.trim())?;
                if idx != paths.len() {
                    return Err(err("certificate lines out of order"));
                }
                let mut path = Vec::new();
                for item in body.split(')') {
                    let item = item.trim();
                    if item.is_empty() {
                        continue;
                    }
                    let item = item.strip_prefix('(').ok_or_else(|| err("expected `(edge, weight)`"))?;
                    let (e, w) = item.split_once(',').ok_or_else(|| err("expected `(edge, weight)`"))?;
                    let w: f64 = w.trim().parse().map_err(|_| err("bad weight"))?;
                    path.push((num(e.trim())?, w));
                }
                paths.push(path);
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.as_slice() {
                ["map", v, x] => {
                    let (v, x) = (num(v)?, num(x)?);
                    if v >= n_orig || x >= n_total {
                        return Err(err("map entry out of range"));
                    }
                    map[v] = Some(x);
                    pi[x] = Some(v);
                }
                ["pi", x, v] => {
                    let (x, v) = (num(x)?, num(v)?);
                    if x >= n_total || v >= n_orig {
                        return Err(err("pi entry out of range"));
                    }
                    pi[x] = Some(v);
                }
                [a, b, l] => {
                    let (a, b) = (num(a)?, num(b)?);
                    let length: f64 = l.parse().map_err(|_| err("bad length"))?;
                    if a >= n_total || b >= n_total {
                        return Err(err("tree vertex out of range"));
                    }
                    edges.push(TreeEdge { a, b, length });
                }
                _ => return Err(err("unrecognized line")),
            }
        }
        let (_, n_original) = header.ok_or(Error::Parse { line: 0, msg: "missing header".into() })?;
        let map = map
            .into_iter()
            .enumerate()
            .map(|(v, x)| x.ok_or(Error::NotInTree(v)))
            .collect::<Result<Vec<_>>>()?;
        let pi = pi
            .into_iter()
            .enumerate()
            .map(|(x, v)| v.ok_or_else(|| invalid(format!("tree vertex {x} has no graph vertex"))))
            .collect::<Result<Vec<_>>>()?;
        if !paths.is_empty() && paths.len() != edges.len() {
            return Err(invalid("certificate does not cover every tree edge"));
        }
        Ok(SteinerTree { n_original, edges, pi, map, certificate: EmbeddingCertificate { paths } })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractedEdge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
    /// Input edge indices walked from `a` to `b`.
    pub path: Vec<usize>,
}

/// Result of contracting a tree to a terminal set; vertices keep their
/// input labels.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractedTree {
    pub vertices: Vec<usize>,
    pub edges: Vec<ContractedEdge>,
}

impl ContractedTree {
    /// Edges as sorted `(min, max, length)` triples.
    pub fn canonical(&self) -> Vec<(usize, usize, f64)> {
        let mut out: Vec<_> = self.edges.iter().map(|e| (e.a.min(e.b), e.a.max(e.b), e.length)).collect();
        out.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)).then(x.2.total_cmp(&y.2)));
        out
    }
}

/// Removes degree-1 non-terminals and splices degree-2 non-terminals until
/// neither exists. Distances between terminals are preserved and at most
/// `2|S| - 1` vertices remain.
pub fn contract_tree(edges: &[(usize, usize, f64)], terminals: &[usize]) -> Result<ContractedTree> {
    if terminals.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut labels: Vec<usize> = edges.iter().flat_map(|e| [e.0, e.1]).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.is_empty() {
        let mut s = terminals.to_vec();
        s.sort_unstable();
        s.dedup();
        if s.len() > 1 {
            return Err(Error::NotConnected);
        }
        return Ok(ContractedTree { vertices: s, edges: Vec::new() });
    }
    let k = labels.len();
    let idx = |x: usize| labels.binary_search(&x);
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
    for (i, &(a, b, _)) in edges.iter().enumerate() {
        let (a, b) = (idx(a).unwrap(), idx(b).unwrap());
        adj[a].push((b, i));
        adj[b].push((a, i));
    }
    let mut in_s = vec![false; k];
    for &s in terminals {
        in_s[idx(s).map_err(|_| Error::NotInTree(s))?] = true;
    }
    let root = in_s.iter().position(|&x| x).unwrap();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; k];
    let mut seen = vec![false; k];
    let mut order = Vec::with_capacity(k);
    let mut stack = vec![root];
    seen[root] = true;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(w, e) in adj[v].iter().rev() {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some((v, e));
                stack.push(w);
            }
        }
    }
    if (0..k).any(|v| in_s[v] && !seen[v]) {
        return Err(Error::NotConnected);
    }
    if order.len() != k || edges.len() != k - 1 {
        return Err(invalid("input is not a tree"));
    }
    let mut marked = vec![0usize; k];
    let mut has_s = in_s.clone();
    for &v in order.iter().rev() {
        if has_s[v] {
            if let Some((p, _)) = parent[v] {
                has_s[p] = true;
                marked[p] += 1;
            }
        }
    }
    let keep: Vec<bool> = (0..k).map(|v| in_s[v] || marked[v] >= 2).collect();
    let mut vertices = Vec::new();
    let mut out = Vec::new();
    for &v in &order {
        if !keep[v] {
            continue;
        }
        vertices.push(labels[v]);
        let Some(_) = parent[v] else { continue };
        let mut walk = Vec::new();
        let mut x = v;
        loop {
            let (p, e) = parent[x].unwrap();
            walk.push(e);
            x = p;
            if keep[x] {
                break;
            }
        }
        walk.reverse();
        let length = walk.iter().fold(0.0, |acc, &e| acc + edges[e].2);
        out.push(ContractedEdge { a: labels[x], b: labels[v], length, path: walk });
    }
    Ok(ContractedTree { vertices, edges: out })
}

/// Contracts one rooted forest to many terminal sets at once: sort each set
/// by preorder, take LCAs of adjacent terminals in one offline pass, and
/// rebuild each virtual tree with a stack. Paths hold forest edge indices.
pub fn offline_lca_contract(forest: &RootedForest, sets: &[Vec<usize>]) -> Result<Vec<ContractedTree>> {
    let mut sorted: Vec<Vec<usize>> = Vec::with_capacity(sets.len());
    let mut queries = Vec::new();
    for (i, s) in sets.iter().enumerate() {
        if s.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut s = s.clone();
        for &v in &s {
            if v >= forest.n() {
                return Err(Error::VertexOutOfRange { vertex: v, n: forest.n() });
            }
        }
        s.sort_unstable_by_key(|&v| forest.preorder(v));
        s.dedup();
        let tree = forest.tree_of(s[0]);
        if s.iter().any(|&v| forest.tree_of(v) != tree) {
            return Err(Error::SetSpansTrees(i));
        }
        for w in s.windows(2) {
            queries.push((w[0], w[1]));
        }
        sorted.push(s);
    }
    let answers = forest.offline_lca(&queries);
    let mut next_answer = answers.into_iter();
    let mut out = Vec::with_capacity(sets.len());
    for s in sorted {
        let mut gamma = s.clone();
        for _ in 1..s.len() {
            gamma.push(next_answer.next().flatten().expect("same tree"));
        }
        gamma.sort_unstable_by_key(|&v| forest.preorder(v));
        gamma.dedup();
        out.push(virtual_tree(forest, &gamma, &s));
    }
    Ok(out)
}

fn virtual_tree(forest: &RootedForest, gamma: &[usize], terminals: &[usize]) -> ContractedTree {
    let mut edges: Vec<ContractedEdge> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    for &v in gamma {
        while let Some(&top) = stack.last() {
            if forest.is_ancestor(top, v) {
                break;
            }
            stack.pop();
        }
        if let Some(&top) = stack.last() {
            let mut path = forest.path_up(v, top);
            path.reverse();
            let length = path.iter().fold(0.0, |acc, &e| acc + forest.edge_length(e));
            edges.push(ContractedEdge { a: top, b: v, length, path });
        }
        stack.push(v);
    }
    let top = gamma[0];
    let children: Vec<usize> = (0..edges.len()).filter(|&i| edges[i].a == top).collect();
    if children.len() == 2 && !terminals.contains(&top) {
        let (i, j) = (children[0], children[1]);
        let (ei, ej) = (edges[i].clone(), edges[j].clone());
        let mut path: Vec<usize> = ei.path.iter().rev().copied().collect();
        path.extend_from_slice(&ej.path);
        let length = path.iter().fold(0.0, |acc, &e| acc + forest.edge_length(e));
        edges[i] = ContractedEdge { a: ei.b, b: ej.b, length, path };
        edges.remove(j);
        let vertices = gamma.iter().copied().filter(|&v| v != top).collect();
        return ContractedTree { vertices, edges };
    }
    ContractedTree { vertices: gamma.to_vec(), edges }
}

/// Edge of a per-component tree handed to [`contract_tree`], carrying its
/// graph path with certificate weights.
#[derive(Clone, Debug)]
struct InputEdge {
    a: usize,
    b: usize,
    length: f64,
    path: Vec<(usize, f64)>,
}

fn assemble(n: usize, hierarchy: &Hierarchy, inputs: Vec<(usize, Vec<InputEdge>)>) -> Result<SteinerTree> {
    let mut pi: Vec<usize> = (0..n).collect();
    let map: Vec<usize> = (0..n).collect();
    let mut edges = Vec::new();
    let mut paths = Vec::new();
    for (node, inp) in inputs {
        let centers: Vec<usize> = hierarchy.nodes[node].children.iter().map(|&c| hierarchy.nodes[c].center).collect();
        let triples: Vec<(usize, usize, f64)> = inp.iter().map(|e| (e.a, e.b, e.length)).collect();
        let mut ct = contract_tree(&triples, &centers)?;
        ct.vertices.sort_unstable();
        for ce in &mut ct.edges {
            if ce.a > ce.b {
                std::mem::swap(&mut ce.a, &mut ce.b);
                ce.path.reverse();
            }
        }
        ct.edges.sort_by_key(|ce| (ce.a, ce.b));
        let mut id_of = Vec::with_capacity(ct.vertices.len());
        for &x in &ct.vertices {
            let id = if centers.contains(&x) {
                x
            } else {
                pi.push(x);
                pi.len() - 1
            };
            id_of.push((x, id));
        }
        id_of.sort_unstable();
        let tree_id = |x: usize| id_of[id_of.binary_search_by_key(&x, |p| p.0).unwrap()].1;
        for ce in &ct.edges {
            let mut path = Vec::new();
            let mut cur = ce.a;
            for &i in &ce.path {
                let e = &inp[i];
                if e.a == cur {
                    path.extend_from_slice(&e.path);
                    cur = e.b;
                } else {
                    path.extend(e.path.iter().rev());
                    cur = e.a;
                }
            }
            edges.push(TreeEdge { a: tree_id(ce.a), b: tree_id(ce.b), length: ce.length });
            paths.push(path);
        }
    }
    Ok(SteinerTree { n_original: n, edges, pi, map, certificate: EmbeddingCertificate { paths } })
}

/// Component hierarchy of an explicit decomposition together with the
/// level forest inside each splitting component.
fn explicit_hierarchy(g: &MultiGraph, b: &BartalDecomposition) -> (Hierarchy, Vec<(usize, Vec<InputEdge>)>) {
    let n = g.n();
    let t = b.t();
    let mut nodes: Vec<HierNode> = Vec::new();
    let mut leaf_of = vec![usize::MAX; n];
    let mut inputs = Vec::new();
    let level_labels = |i: usize| {
        let mut uf = UnionFind::new(n);
        for le in &b.levels[i].edges {
            uf.union(g.edge(le.edge).u, g.edge(le.edge).v);
        }
        let labels = uf.labels();
        let count = labels.iter().copied().max().map_or(0, |x| x + 1);
        (labels, count)
    };
    let (mut prev, mut prev_count) = level_labels(0);
    let root_center = b.levels[0].roots.first().copied().unwrap_or(0);
    nodes.push(HierNode::new(None, 0, root_center));
    let mut node_of: Vec<usize> = vec![0; prev_count];
    if n == 1 {
        nodes[0].last = t;
        leaf_of[0] = 0;
    }
    let mut size = vec![0usize; prev_count];
    for &l in &prev {
        size[l] += 1;
    }
    let mut open: Vec<bool> = size.iter().map(|&s| s > 1).collect();
    for i in 1..=t {
        let (cur, count) = level_labels(i);
        let mut cur_size = vec![0usize; count];
        let mut parent_of = vec![0usize; count];
        let mut min_vertex = vec![usize::MAX; count];
        for v in 0..n {
            cur_size[cur[v]] += 1;
            parent_of[cur[v]] = prev[v];
            min_vertex[cur[v]] = min_vertex[cur[v]].min(v);
        }
        let mut root_of = min_vertex.clone();
        let mut root_set = vec![false; count];
        for &r in &b.levels[i].roots {
            if !root_set[cur[r]] {
                root_set[cur[r]] = true;
                root_of[cur[r]] = r;
            }
        }
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); prev_count];
        for c in 0..count {
            kids[parent_of[c]].push(c);
        }
        let mut groups: Vec<Vec<InputEdge>> = vec![Vec::new(); prev_count];
        for le in &b.levels[i - 1].edges {
            let e = g.edge(le.edge);
            if open[prev[e.u]] && kids[prev[e.u]].len() >= 2 {
                groups[prev[e.u]].push(InputEdge {
                    a: e.u,
                    b: e.v,
                    length: le.length,
                    path: vec![(le.edge, 1.0 / le.length)],
                });
            }
        }
        let mut next_node = vec![usize::MAX; count];
        for p in 0..prev_count {
            if !open[p] {
                continue;
            }
            let node = node_of[p];
            if kids[p].len() == 1 {
                next_node[kids[p][0]] = node;
                nodes[node].last = i;
                continue;
            }
            let center = nodes[node].center;
            for &c in &kids[p] {
                let id = nodes.len();
                let cen = if cur[center] == c { center } else { root_of[c] };
                nodes.push(HierNode::new(Some(node), i, cen));
                nodes[node].children.push(id);
                if cur_size[c] == 1 {
                    nodes[id].last = t;
                    leaf_of[min_vertex[c]] = id;
                } else {
                    next_node[c] = id;
                }
            }
            inputs.push((node, std::mem::take(&mut groups[p])));
        }
        open = cur_size.iter().map(|&s| s > 1).collect();
        prev = cur;
        prev_count = count;
        node_of = next_node;
    }
    let h = Hierarchy { nodes, leaf_of };
    inputs.sort_by_key(|(node, _)| h.split_key(*node));
    (h, inputs)
}

/// Builds the Steiner tree of a valid explicit decomposition whose levels
/// are jointly a weighted subgraph of `g`.
pub fn build_tree(g: &MultiGraph, b: &BartalDecomposition) -> Result<SteinerTree> {
    let report = validate_decomposition(g, b);
    if let Some(v) = report.first() {
        return Err(Error::InvalidDecomposition(v.to_string()));
    }
    if let Some((e, r)) = b.check_weights(g) {
        return Err(Error::InvalidDecomposition(format!("edge {e} has level weight ratio {r} above 1")));
    }
    let (hierarchy, inputs) = explicit_hierarchy(g, b);
    assemble(g.n(), &hierarchy, inputs)
}

/// Builds the Steiner tree of an implicit decomposition, contracting every
/// referenced AKPW cluster to its attachment vertices with one batched
/// offline-LCA pass over the spanning AKPW tree.
pub fn expand_implicit(
    g: &MultiGraph,
    imp: &ImplicitDecomposition,
    akpw: Option<&AkpwDecomposition>,
) -> Result<SteinerTree> {
    imp.check_akpw(akpw)?;
    if g.m() != imp.base_lengths().len() || imp.hierarchy.leaf_of.len() != g.n() {
        return Err(Error::HierarchyMismatch);
    }
    let base = imp.base_lengths();
    let h = &imp.hierarchy;
    let splitting = h.splitting_nodes();
    let forest_ids: Vec<usize> = akpw.map_or(Vec::new(), |a| a.forest().map(|(e, _)| e).collect());
    let forest_triples: Vec<(usize, usize, f64)> =
        forest_ids.iter().map(|&e| (g.edge(e).u, g.edge(e).v, base[e])).collect();
    let forest = RootedForest::new(g.n(), &forest_triples)?;

    // (node, set index range) of the attachment sets of each splitting node
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut node_sets = Vec::with_capacity(splitting.len());
    for &node in &splitting {
        let hn = &h.nodes[node];
        let lvl = &imp.levels[hn.last];
        let refs = &lvl.refs[hn.refs.clone()];
        let first = sets.len();
        if !refs.is_empty() {
            let a = akpw.ok_or(Error::HierarchyMismatch)?;
            let j = lvl.scope.ok_or(Error::HierarchyMismatch)?;
            let mut clusters: Vec<usize> = refs.iter().map(|r| r.cluster).collect();
            clusters.sort_unstable();
            let mut attach: Vec<Vec<usize>> = vec![Vec::new(); clusters.len()];
            let mut add = |v: usize| {
                if let Ok(k) = clusters.binary_search(&a.component_at(v, j)) {
                    attach[k].push(v);
                }
            };
            for (_, le) in &lvl.edges[hn.edges.clone()] {
                add(g.edge(le.edge).u);
                add(g.edge(le.edge).v);
            }
            for &c in &hn.children {
                add(h.nodes[c].center);
            }
            for mut s in attach {
                s.sort_unstable();
                s.dedup();
                if s.is_empty() {
                    return Err(invalid("referenced cluster has no attachment vertex"));
                }
                sets.push(s);
            }
        }
        node_sets.push(first..sets.len());
    }
    let contracted = offline_lca_contract(&forest, &sets)?;

    let mut inputs = Vec::with_capacity(splitting.len());
    for (&node, range) in splitting.iter().zip(node_sets) {
        let hn = &h.nodes[node];
        let lvl = &imp.levels[hn.last];
        let s = imp.scale[hn.last];
        let mut inp: Vec<InputEdge> = lvl.edges[hn.edges.clone()]
            .iter()
            .map(|(_, le)| {
                let e = g.edge(le.edge);
                let length = le.length * s;
                InputEdge { a: e.u, b: e.v, length, path: vec![(le.edge, 1.0 / length)] }
            })
            .collect();
        for ct in &contracted[range] {
            for ce in &ct.edges {
                let path: Vec<(usize, f64)> = ce
                    .path
                    .iter()
                    .map(|&fe| {
                        let e = forest_ids[fe];
                        (e, 1.0 / (base[e] * s))
                    })
                    .collect();
                let length = ce.path.iter().fold(0.0, |acc, &fe| acc + base[forest_ids[fe]] * s);
                inp.push(InputEdge { a: ce.a, b: ce.b, length, path });
            }
        }
        inputs.push((node, inp));
    }
    assemble(g.n(), h, inputs)
}

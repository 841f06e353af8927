//! Rooted forests with preorder numbering and Tarjan's offline LCA.

use crate::error::{Error, Result};
use crate::graph::UnionFind;

/// Forest over vertices `0..n` given by `(u, v, length)` edges, each tree
/// rooted at its smallest vertex.
#[derive(Clone, Debug)]
pub struct RootedForest {
    n: usize,
    /// `(parent, edge index)`.
    parent: Vec<Option<(usize, usize)>>,
    children: Vec<Vec<usize>>,
    tree: Vec<usize>,
    tin: Vec<usize>,
    tout: Vec<usize>,
    depth: Vec<f64>,
    lengths: Vec<f64>,
}

impl RootedForest {
    pub fn new(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut uf = UnionFind::new(n);
        for (i, &(u, v, _)) in edges.iter().enumerate() {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if !uf.union(u, v) {
                return Err(crate::error::invalid(format!("edge {i} closes a cycle")));
            }
            adj[u].push((v, i));
            adj[v].push((u, i));
        }
        let mut f = RootedForest {
            n,
            parent: vec![None; n],
            children: vec![Vec::new(); n],
            tree: vec![usize::MAX; n],
            tin: vec![0; n],
            tout: vec![0; n],
            depth: vec![0.0; n],
            lengths: edges.iter().map(|e| e.2).collect(),
        };
        let mut clock = 0;
        for r in 0..n {
            if f.tree[r] != usize::MAX {
                continue;
            }
            f.tree[r] = r;
            f.tin[r] = clock;
            clock += 1;
            // (vertex, next adjacency index)
            let mut stack = vec![(r, 0usize)];
            while let Some(top) = stack.last_mut() {
                let (v, k) = *top;
                if k < adj[v].len() {
                    top.1 += 1;
                    let (w, e) = adj[v][k];
                    if f.tree[w] == usize::MAX {
                        f.tree[w] = r;
                        f.parent[w] = Some((v, e));
                        f.children[v].push(w);
                        f.depth[w] = f.depth[v] + f.lengths[e];
                        f.tin[w] = clock;
                        clock += 1;
                        stack.push((w, 0));
                    }
                } else {
                    f.tout[v] = clock;
                    stack.pop();
                }
            }
        }
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn parent(&self, v: usize) -> Option<(usize, usize)> {
        self.parent[v]
    }

    /// Root of the tree containing `v`.
    pub fn tree_of(&self, v: usize) -> usize {
        self.tree[v]
    }

    pub fn preorder(&self, v: usize) -> usize {
        self.tin[v]
    }

    /// Weighted depth from the root.
    pub fn depth(&self, v: usize) -> f64 {
        self.depth[v]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.lengths[e]
    }

    pub fn is_ancestor(&self, a: usize, v: usize) -> bool {
        self.tin[a] <= self.tin[v] && self.tin[v] < self.tout[a]
    }

    /// Answers all queries in one traversal; `None` for vertices in
    /// different trees.
    pub fn offline_lca(&self, queries: &[(usize, usize)]) -> Vec<Option<usize>> {
        let n = self.n;
        let mut by_vertex: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut answer = vec![None; queries.len()];
        for (qi, &(a, b)) in queries.iter().enumerate() {
            if self.tree[a] != self.tree[b] {
                continue;
            }
            if a == b {
                answer[qi] = Some(a);
                continue;
            }
            by_vertex[a].push((b, qi));
            by_vertex[b].push((a, qi));
        }
        let mut uf = UnionFind::new(n);
        let mut ancestor: Vec<usize> = (0..n).collect();
        let mut finished = vec![false; n];
        for r in 0..n {
            if self.tree[r] != r {
                continue;
            }
            let mut stack = vec![(r, 0usize)];
            while let Some(top) = stack.last_mut() {
                let (v, k) = *top;
                if k < self.children[v].len() {
                    top.1 += 1;
                    stack.push((self.children[v][k], 0));
                    continue;
                }
                stack.pop();
                finished[v] = true;
                for &(w, qi) in &by_vertex[v] {
                    if finished[w] && answer[qi].is_none() {
                        answer[qi] = Some(ancestor[uf.find(w)]);
                    }
                }
                if let Some(&(p, _)) = stack.last() {
                    uf.union(p, v);
                    let root = uf.find(p);
                    ancestor[root] = p;
                }
            }
        }
        answer
    }

    /// Edge indices on the path from `v` up to its ancestor `a`, bottom-up.
    pub fn path_up(&self, v: usize, a: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut x = v;
        while x != a {
            let (p, e) = self.parent[x].expect("a is an ancestor of v");
            out.push(e);
            x = p;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lca_on_small_tree() {
        //      0
        //    1   2
        //   3 4   5
        let f = RootedForest::new(
            7,
            &[(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (1, 4, 2.0), (2, 5, 1.0)],
        )
        .unwrap();
        let ans = f.offline_lca(&[(3, 4), (3, 5), (4, 1), (5, 5), (3, 6)]);
        assert_eq!(ans, vec![Some(1), Some(0), Some(1), Some(5), None]);
        assert_eq!(f.depth(4), 3.0);
        assert!(f.is_ancestor(1, 4));
        assert!(!f.is_ancestor(2, 4));
        assert_eq!(f.path_up(4, 0), vec![3, 0]);
    }

    #[test]
    fn rejects_cycles() {
        assert!(RootedForest::new(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).is_err());
    }
}

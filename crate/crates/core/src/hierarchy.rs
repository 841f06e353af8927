//! Laminar component hierarchy of a decomposition, compressed so that a
//! component surviving several levels unchanged is a single node.

use std::ops::Range;

use crate::graph::MultiGraph;

#[derive(Clone, Debug)]
pub struct HierNode {
    pub parent: Option<usize>,
    /// Level at which the component first appears.
    pub level: usize,
    /// Last level at which it is a component; its children appear at `last + 1`.
    pub last: usize,
    /// Center vertex; a child containing it inherits it.
    pub center: usize,
    pub children: Vec<usize>,
    /// Entries of level `last` belonging to this node.
    pub(crate) edges: Range<usize>,
    pub(crate) refs: Range<usize>,
}

impl HierNode {
    pub(crate) fn new(parent: Option<usize>, level: usize, center: usize) -> Self {
        HierNode { parent, level, last: level, center, children: Vec::new(), edges: 0..0, refs: 0..0 }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Hierarchy {
    pub nodes: Vec<HierNode>,
    /// Singleton node of each vertex.
    pub leaf_of: Vec<usize>,
}

impl Hierarchy {
    pub fn lca(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a, b);
        while a != b {
            let (na, nb) = (&self.nodes[a], &self.nodes[b]);
            match na.parent {
                Some(pa) if na.level >= nb.level => a = pa,
                _ => b = nb.parent.expect("nodes share a root"),
            }
        }
        a
    }

    /// Last level at which the endpoints of each edge share a component.
    pub fn cut_levels(&self, g: &MultiGraph) -> Vec<usize> {
        g.edges()
            .iter()
            .map(|e| self.nodes[self.lca(self.leaf_of[e.u], self.leaf_of[e.v])].last)
            .collect()
    }

    /// Nodes with at least two children, ordered by split level then center.
    pub fn splitting_nodes(&self) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.nodes.len()).filter(|&x| self.nodes[x].children.len() >= 2).collect();
        out.sort_by_key(|&x| self.split_key(x));
        out
    }

    /// `(last, center)`, unique among splitting nodes.
    pub fn split_key(&self, x: usize) -> (usize, usize) {
        (self.nodes[x].last, self.nodes[x].center)
    }
}

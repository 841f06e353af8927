//! Bartal decompositions: diameter sequences, explicit level forests,
//! validation, the moment-switching transform and the top-down routine.

use std::fmt::{self, Write as _};

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::{forest_diameters, log_n, MultiGraph, UnionFind};
use crate::two_stage::{self, ImplicitDecomposition};

/// Relative slack used by every floating-point inequality check.
pub const REL_TOL: f64 = 1e-9;

/// `sup ε / (1 - c^{-ε})` over `c ∈ [e, e²]`, `ε ∈ (0, 1]`, attained at
/// `c = e`, `ε = 1`: `e / (e - 1)`.
pub const C_GEO: f64 = 1.581_976_706_869_326_5;

/// Decreasing diameter bounds `d_0 > d_1 > ... > d_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiameterSequence {
    d: Vec<f64>,
}

impl DiameterSequence {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(invalid("diameter sequence is empty"));
        }
        if d.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(invalid("diameters must be positive and finite"));
        }
        if d.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("diameters must strictly decrease"));
        }
        Ok(DiameterSequence { d })
    }

    /// `d_0, d_0/2, ...` down to the first value below 1.
    pub fn halving(d0: f64) -> Result<Self> {
        if !(d0 > 0.0 && d0.is_finite()) {
            return Err(invalid(format!("d_0 must be positive, got {d0}")));
        }
        let mut d = vec![d0];
        while *d.last().unwrap() >= 1.0 {
            let next = d.last().unwrap() / 2.0;
            d.push(next);
        }
        Ok(DiameterSequence { d })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Index of the last level.
    pub fn t(&self) -> usize {
        self.d.len() - 1
    }

    /// Largest ratio `d_{i+1} / d_i`.
    pub fn ratio(&self) -> f64 {
        self.d.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max)
    }

    pub(crate) fn scaled(&self, factors: &[f64]) -> Self {
        DiameterSequence { d: self.d.iter().zip(factors).map(|(d, f)| d * f).collect() }
    }
}

impl std::ops::Index<usize> for DiameterSequence {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.d[i]
    }
}

/// `d_i = 2 n Δ 2^{-i}` until the first value below 1.
pub fn make_diameter_sequence(n: usize, delta: f64) -> Result<DiameterSequence> {
    if n == 0 || !(delta >= 1.0) {
        return Err(invalid(format!("need n >= 1 and Δ >= 1, got n={n}, Δ={delta}")));
    }
    DiameterSequence::halving(2.0 * n as f64 * delta)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelEdge {
    /// Index of the edge in the decomposed graph.
    pub edge: usize,
    pub length: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Level {
    pub edges: Vec<LevelEdge>,
    /// One designated root vertex per non-trivial component.
    pub roots: Vec<usize>,
}

/// Explicit decomposition: every level stores its forest edges with their
/// level lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct BartalDecomposition {
    pub diameters: DiameterSequence,
    pub levels: Vec<Level>,
    /// Last level at which the endpoints of each edge share a component.
    pub cut_level: Vec<usize>,
}

/// Anything carrying diameter bounds and first-cut levels.
pub trait Decomposition {
    fn diameters(&self) -> &DiameterSequence;
    fn cut_levels(&self) -> &[usize];
    /// Multiplies level `i` lengths and `d_i` by `factors[i]`.
    fn rescale(&mut self, factors: &[f64]);
}

impl Decomposition for BartalDecomposition {
    fn diameters(&self) -> &DiameterSequence {
        &self.diameters
    }

    fn cut_levels(&self) -> &[usize] {
        &self.cut_level
    }

    fn rescale(&mut self, factors: &[f64]) {
        self.diameters = self.diameters.scaled(factors);
        for (level, f) in self.levels.iter_mut().zip(factors) {
            for e in &mut level.edges {
                e.length *= f;
            }
        }
    }
}

impl BartalDecomposition {
    pub fn t(&self) -> usize {
        self.levels.len() - 1
    }

    /// Text dump: `level i d_i` followed by `edge u v length` lines.
    pub fn dump(&self, g: &MultiGraph) -> String {
        let mut out = String::new();
        for (i, level) in self.levels.iter().enumerate() {
            let _ = writeln!(out, "level {} {}", i, self.diameters[i]);
            for le in &level.edges {
                let e = g.edge(le.edge);
                let _ = writeln!(out, "edge {} {} {}", e.u, e.v, le.length);
            }
        }
        out
    }

    /// `Σ_i 1/l_i(e)` over levels containing `e`, times `l(e)`. Values above
    /// one break embeddability of the union of levels.
    pub fn weight_ratios(&self, g: &MultiGraph) -> Vec<f64> {
        let mut sum = vec![0.0; g.m()];
        for level in &self.levels {
            for le in &level.edges {
                sum[le.edge] += 1.0 / le.length;
            }
        }
        sum.iter().enumerate().map(|(e, s)| s * g.length(e)).collect()
    }

    /// First edge whose weight ratio exceeds `1 + REL_TOL`.
    pub fn check_weights(&self, g: &MultiGraph) -> Option<(usize, f64)> {
        self.weight_ratios(g)
            .into_iter()
            .enumerate()
            .find(|&(_, r)| r > 1.0 + REL_TOL)
    }
}

/// Recomputes first-cut levels from the level forests.
pub fn first_cut_levels(g: &MultiGraph, levels: &[Level]) -> Vec<usize> {
    let mut cut = vec![0; g.m()];
    let mut alive: Vec<usize> = (0..g.m()).collect();
    for (i, level) in levels.iter().enumerate() {
        let mut uf = UnionFind::new(g.n());
        for le in &level.edges {
            let e = g.edge(le.edge);
            uf.union(e.u, e.v);
        }
        alive.retain(|&e| {
            let edge = g.edge(e);
            if uf.same(edge.u, edge.v) {
                cut[e] = i;
                true
            } else {
                false
            }
        });
    }
    cut
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NotSpanning,
    LastLevelNotEmpty { edges: usize },
    LevelCountMismatch { levels: usize, diameters: usize },
    NotAForest { level: usize, edge: usize },
    UnknownEdge { level: usize, edge: usize },
    ShorterThanGraph { level: usize, edge: usize, length: f64, graph_length: f64 },
    NotLaminar { level: usize, edge: usize },
    TooLong { level: usize, edge: usize, length: f64, bound: f64 },
    DiameterExceeded { level: usize, vertex: usize, diameter: f64, bound: f64 },
    NotDecreasing { level: usize },
    CutLevelMismatch { edge: usize, stored: usize, actual: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotSpanning => write!(f, "level 0 is not a spanning tree"),
            Violation::LastLevelNotEmpty { edges } => write!(f, "last level has {edges} edges"),
            Violation::LevelCountMismatch { levels, diameters } => {
                write!(f, "{levels} levels but {diameters} diameters")
            }
            Violation::NotAForest { level, edge } => write!(f, "level {level}: edge {edge} closes a cycle"),
            Violation::UnknownEdge { level, edge } => write!(f, "level {level}: edge {edge} not in graph"),
            Violation::ShorterThanGraph { level, edge, length, graph_length } => write!(
                f,
                "level {level}: edge {edge} has length {length} below graph length {graph_length}"
            ),
            Violation::NotLaminar { level, edge } => {
                write!(f, "level {level}: edge {edge} joins two components of the previous level")
            }
            Violation::TooLong { level, edge, length, bound } => {
                write!(f, "level {level}: edge {edge} length {length} exceeds {bound}")
            }
            Violation::DiameterExceeded { level, vertex, diameter, bound } => write!(
                f,
                "level {level}: component of vertex {vertex} has diameter {diameter} above {bound}"
            ),
            Violation::NotDecreasing { level } => write!(f, "diameters do not decrease at level {level}"),
            Violation::CutLevelMismatch { edge, stored, actual } => {
                write!(f, "edge {edge}: stored cut level {stored}, actual {actual}")
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first(&self) -> Option<&Violation> {
        self.violations.first()
    }
}

/// Checks the level structure against the graph and diameter bounds:
/// spanning first level and empty last level, level lengths at least the
/// graph lengths, laminarity, edge lengths at most `d_i / log n` and
/// component diameters at most `d_i`. Stored cut levels are compared with
/// a recomputation.
pub fn validate_decomposition(g: &MultiGraph, b: &BartalDecomposition) -> ValidationReport {
    let mut v = Vec::new();
    let n = g.n();
    let dd = b.diameters.as_slice();
    if b.levels.len() != dd.len() {
        v.push(Violation::LevelCountMismatch { levels: b.levels.len(), diameters: dd.len() });
        return ValidationReport { violations: v };
    }
    for i in 1..dd.len() {
        if dd[i] >= dd[i - 1] {
            v.push(Violation::NotDecreasing { level: i });
        }
    }
    let ln = log_n(n);
    let mut prev_label: Option<Vec<usize>> = None;
    for (i, level) in b.levels.iter().enumerate() {
        let mut uf = UnionFind::new(n);
        let mut forest = Vec::with_capacity(level.edges.len());
        let mut level_ok = true;
        for le in &level.edges {
            if le.edge >= g.m() {
                v.push(Violation::UnknownEdge { level: i, edge: le.edge });
                level_ok = false;
                continue;
            }
            let e = g.edge(le.edge);
            if !uf.union(e.u, e.v) {
                v.push(Violation::NotAForest { level: i, edge: le.edge });
                level_ok = false;
            }
            if le.length < e.length * (1.0 - REL_TOL) {
                v.push(Violation::ShorterThanGraph {
                    level: i,
                    edge: le.edge,
                    length: le.length,
                    graph_length: e.length,
                });
            }
            let bound = dd[i] / ln;
            if le.length > bound * (1.0 + REL_TOL) {
                v.push(Violation::TooLong { level: i, edge: le.edge, length: le.length, bound });
            }
            if let Some(prev) = &prev_label {
                if prev[e.u] != prev[e.v] {
                    v.push(Violation::NotLaminar { level: i, edge: le.edge });
                }
            }
            forest.push((e.u, e.v, le.length));
        }
        if i == 0 && (uf.count() != 1 || !level_ok) {
            v.push(Violation::NotSpanning);
        }
        if level_ok {
            let (label, diam) = forest_diameters(n, &forest);
            for (x, &c) in label.iter().enumerate() {
                if diam[c] > dd[i] * (1.0 + REL_TOL) {
                    v.push(Violation::DiameterExceeded { level: i, vertex: x, diameter: diam[c], bound: dd[i] });
                    break;
                }
            }
        }
        prev_label = Some(uf.labels());
    }
    if let Some(last) = b.levels.last() {
        if !last.edges.is_empty() {
            v.push(Violation::LastLevelNotEmpty { edges: last.edges.len() });
        }
    }
    if b.cut_level.len() == g.m() && v.is_empty() {
        let actual = first_cut_levels(g, &b.levels);
        if let Some(e) = (0..g.m()).find(|&e| actual[e] != b.cut_level[e]) {
            v.push(Violation::CutLevelMismatch { edge: e, stored: b.cut_level[e], actual: actual[e] });
        }
    }
    ValidationReport { violations: v }
}

/// `Σ_{i≥0} c^{-iε} = 1 / (1 - c^{-ε})` for `c ∈ [e, e²]`, `ε > 0`.
pub fn geometric_series_bound(c: f64, eps: f64) -> Result<f64> {
    let e = std::f64::consts::E;
    if !(c >= e * (1.0 - 1e-12) && c <= e * e * (1.0 + 1e-12)) {
        return Err(invalid(format!("ratio base {c} outside [e, e^2]")));
    }
    if !(eps > 0.0) {
        return Err(invalid(format!("exponent must be positive, got {eps}")));
    }
    Ok(1.0 / (1.0 - c.powf(-eps)))
}

fn check_moments(p: f64, q: f64) -> Result<()> {
    if !(p > 0.0 && p < q && q < 1.0) {
        return Err(invalid(format!("need 0 < p < q < 1, got p={p}, q={q}")));
    }
    Ok(())
}

/// Scale applied to a level with inner diameter `d_prime`:
/// `(c_geo / (q - p)) (d' / log n)^{(q - p) / p}`.
pub fn moment_scale(d_prime: f64, p: f64, q: f64, log_n: f64) -> f64 {
    C_GEO / (q - p) * (d_prime / log_n).powf((q - p) / p)
}

/// `G'` with lengths `l^{p/q}`.
pub fn switched_graph(g: &MultiGraph, p: f64, q: f64) -> Result<MultiGraph> {
    check_moments(p, q)?;
    g.map_lengths(|l| l.powf(p / q))
}

/// Runs `inner` on `G'` (lengths `l^{p/q}`) and rescales level `i` by
/// [`moment_scale`] of its inner diameter. The union of the returned
/// levels is a weighted subgraph of `g`.
pub fn moment_switch<D, F>(g: &MultiGraph, p: f64, q: f64, inner: F) -> Result<D>
where
    D: Decomposition,
    F: FnOnce(&MultiGraph) -> Result<D>,
{
    let gp = switched_graph(g, p, q)?;
    let mut dec = inner(&gp)?;
    let ln = log_n(g.n());
    let factors: Vec<f64> = dec.diameters().as_slice().iter().map(|&d| moment_scale(d, p, q, ln)).collect();
    dec.rescale(&factors);
    Ok(dec)
}

/// Top-down decomposition: level 0 is a shortest-path tree from vertex 0,
/// then each component of level `i - 1` is partitioned at diameter `d_i`
/// after removing edges of length at least `d_i / log n`.
pub fn decompose_simple<R: Rng + ?Sized>(
    g: &MultiGraph,
    dd: &DiameterSequence,
    rng: &mut R,
) -> Result<BartalDecomposition> {
    let imp = decompose_simple_implicit(g, dd, rng)?;
    imp.expand(g, None)
}

pub(crate) fn decompose_simple_implicit<R: Rng + ?Sized>(
    g: &MultiGraph,
    dd: &DiameterSequence,
    rng: &mut R,
) -> Result<ImplicitDecomposition> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    two_stage::run_top_down(g, dd, None, None, 1.0, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diameter_sequence_examples() {
        let d = make_diameter_sequence(4, 1.0).unwrap();
        assert_eq!(d.as_slice(), &[8.0, 4.0, 2.0, 1.0, 0.5]);
        assert_eq!(d.t(), 4);
        let d = make_diameter_sequence(1, 1.0).unwrap();
        assert_eq!(d.as_slice(), &[2.0, 1.0, 0.5]);
        assert_eq!(d.ratio(), 0.5);
        assert!(make_diameter_sequence(0, 1.0).is_err());
        assert!(DiameterSequence::new(vec![2.0, 2.0]).is_err());
    }

    #[test]
    fn geometric_series_examples() {
        let e = std::f64::consts::E;
        let a = geometric_series_bound(e, 1.0).unwrap();
        assert!((a - 1.58198).abs() < 1e-5);
        let b = geometric_series_bound(e * e, 0.5).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!((geometric_series_bound(e, 60.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(geometric_series_bound(2.0, 1.0).is_err());
        assert!(geometric_series_bound(10.0, 1.0).is_err());
    }

    #[test]
    fn c_geo_is_sup_over_admissible_grid() {
        let e = std::f64::consts::E;
        let mut best: f64 = 0.0;
        for i in 0..=100 {
            let c = e + (e * e - e) * i as f64 / 100.0;
            for j in 1..=200 {
                let eps = j as f64 / 200.0;
                best = best.max(eps * geometric_series_bound(c, eps).unwrap());
            }
        }
        assert!((best - C_GEO).abs() < 1e-12);
        assert!((C_GEO - e / (e - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn moment_switch_length_example() {
        let g = MultiGraph::new(2, &[(0, 1, 8.0)]).unwrap();
        let gp = switched_graph(&g, 0.5, 0.75).unwrap();
        assert!((gp.length(0) - 4.0).abs() < 1e-12);
        assert!(switched_graph(&g, 0.75, 0.5).is_err());
        assert!(switched_graph(&g, 0.5, 1.0).is_err());
    }

    #[test]
    fn simple_decomposition_of_single_edge() {
        let g = MultiGraph::new(2, &[(0, 1, 1.0)]).unwrap();
        let dd = make_diameter_sequence(2, 1.0).unwrap();
        let b = decompose_simple(&g, &dd, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(validate_decomposition(&g, &b).is_valid());
        assert!(b.cut_level[0] < b.t());
    }

    fn path_decomposition() -> (MultiGraph, BartalDecomposition) {
        let g = MultiGraph::new(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let dd = DiameterSequence::new(vec![8.0, 4.0, 0.5]).unwrap();
        let le = |edge| LevelEdge { edge, length: 1.0 };
        let levels = vec![
            Level { edges: vec![le(0), le(1)], roots: vec![0] },
            Level { edges: vec![le(0)], roots: vec![0, 2] },
            Level::default(),
        ];
        let cut_level = first_cut_levels(&g, &levels);
        (g, BartalDecomposition { diameters: dd, levels, cut_level })
    }

    #[test]
    fn validation_accepts_hand_built() {
        let (g, b) = path_decomposition();
        assert!(validate_decomposition(&g, &b).is_valid());
        assert_eq!(b.cut_level, vec![1, 0]);
    }

    #[test]
    fn validation_rejects_nonempty_last_level() {
        let (g, mut b) = path_decomposition();
        b.levels[2].edges.push(LevelEdge { edge: 0, length: 1.0 });
        let r = validate_decomposition(&g, &b);
        assert!(r.violations.iter().any(|v| matches!(v, Violation::LastLevelNotEmpty { .. })));
    }

    #[test]
    fn validation_rejects_non_laminar() {
        let (g, mut b) = path_decomposition();
        b.levels[1].edges = vec![LevelEdge { edge: 0, length: 1.0 }];
        b.levels.insert(2, Level { edges: vec![LevelEdge { edge: 1, length: 1.0 }], roots: vec![] });
        b.diameters = DiameterSequence::new(vec![8.0, 4.0, 2.0, 0.5]).unwrap();
        let r = validate_decomposition(&g, &b);
        assert!(r.violations.iter().any(|v| matches!(v, Violation::NotLaminar { level: 2, edge: 1 })));
    }

    #[test]
    fn validation_rejects_long_edges_and_short_lengths() {
        let (g, mut b) = path_decomposition();
        b.levels[1].edges[0].length = 4.0;
        let r = validate_decomposition(&g, &b);
        assert!(r.violations.iter().any(|v| matches!(v, Violation::TooLong { level: 1, .. })));
        let (g, mut b) = path_decomposition();
        b.levels[0].edges[1].length = 0.5;
        let r = validate_decomposition(&g, &b);
        assert!(r.violations.iter().any(|v| matches!(v, Violation::ShorterThanGraph { .. })));
    }

    #[test]
    fn validation_rejects_non_spanning() {
        let (g, mut b) = path_decomposition();
        b.levels[0].edges.pop();
        let r = validate_decomposition(&g, &b);
        assert_eq!(r.first(), Some(&Violation::NotSpanning));
    }

    #[test]
    fn dump_format() {
        let (g, b) = path_decomposition();
        let text = b.dump(&g);
        assert!(text.starts_with("level 0 8\nedge 0 1 1\nedge 1 2 1\nlevel 1 4\n"));
    }
}

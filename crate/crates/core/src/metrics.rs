//! Stretch measurement, embedding verification, the Laplacian sandwich
//! check and a seeded Monte-Carlo driver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bartal::{Decomposition, REL_TOL};
use crate::error::{invalid, Error, Result};
use crate::graph::MultiGraph;
use crate::lca::RootedForest;
use crate::treebuild::SteinerTree;

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub max: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Summary { mean: 0.0, max: 0.0, p50: 0.0, p90: 0.0, p99: 0.0 };
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |f: f64| v[((v.len() - 1) as f64 * f).round() as usize];
        Summary {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            max: *v.last().unwrap(),
            p50: q(0.5),
            p90: q(0.9),
            p99: q(0.99),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StretchReport {
    pub p: f64,
    pub stretch: Vec<f64>,
    pub lp: Vec<f64>,
    pub summary: Summary,
    pub lp_summary: Summary,
    /// Statistics over edges outside an excluded set, if one was given.
    pub kept: Option<(usize, Summary, Summary)>,
}

impl StretchReport {
    fn new(p: f64, stretch: Vec<f64>) -> Self {
        let lp: Vec<f64> = stretch.iter().map(|s| s.powf(p)).collect();
        let summary = Summary::of(&stretch);
        let lp_summary = Summary::of(&lp);
        StretchReport { p, stretch, lp, summary, lp_summary, kept: None }
    }

    /// Adds statistics over edges not in `excluded`.
    pub fn excluding(mut self, excluded: &[usize]) -> Self {
        let mut skip = vec![false; self.stretch.len()];
        for &e in excluded {
            if e < skip.len() {
                skip[e] = true;
            }
        }
        let s: Vec<f64> = (0..skip.len()).filter(|&e| !skip[e]).map(|e| self.stretch[e]).collect();
        let l: Vec<f64> = (0..skip.len()).filter(|&e| !skip[e]).map(|e| self.lp[e]).collect();
        self.kept = Some((s.len(), Summary::of(&s), Summary::of(&l)));
        self
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("p must lie in (0, 1], got {p}")));
    }
    Ok(())
}

fn tree_forest(t: &SteinerTree) -> Result<RootedForest> {
    let triples: Vec<(usize, usize, f64)> = t.edges.iter().map(|e| (e.a, e.b, e.length)).collect();
    RootedForest::new(t.n_total(), &triples)
}

/// Tree distances between the images of all graph edges' endpoints.
pub fn tree_distances(g: &MultiGraph, t: &SteinerTree) -> Result<Vec<f64>> {
    if t.map.len() != g.n() {
        return Err(Error::NotInTree(t.map.len().min(g.n())));
    }
    let f = tree_forest(t)?;
    let queries: Vec<(usize, usize)> = g.edges().iter().map(|e| (t.map[e.u], t.map[e.v])).collect();
    let lca = f.offline_lca(&queries);
    queries
        .iter()
        .zip(lca)
        .map(|(&(a, b), c)| {
            let c = c.ok_or(Error::NotConnected)?;
            Ok((f.depth(a) - f.depth(c)) + (f.depth(b) - f.depth(c)))
        })
        .collect()
}

/// `str_T(e) = d_T(π(u), π(v)) / l(e)` for every edge.
pub fn tree_stretch(g: &MultiGraph, t: &SteinerTree, p: f64) -> Result<StretchReport> {
    check_p(p)?;
    let dist = tree_distances(g, t)?;
    let stretch = dist.iter().zip(g.edges()).map(|(d, e)| d / e.length).collect();
    Ok(StretchReport::new(p, stretch))
}

/// `d_i / l(e)` at the first-cut level `i` of each edge; the ℓp values are
/// `(d_i / l(e))^p`.
pub fn decomposition_stretch<D: Decomposition>(g: &MultiGraph, b: &D, p: f64) -> Result<StretchReport> {
    check_p(p)?;
    let dd = b.diameters();
    let cut = b.cut_levels();
    if cut.len() != g.m() {
        return Err(invalid("cut levels do not match the graph"));
    }
    let t = dd.t();
    let mut stretch = Vec::with_capacity(g.m());
    for (e, &i) in cut.iter().enumerate() {
        if i >= t {
            return Err(Error::NeverCut(e));
        }
        stretch.push(dd[i] / g.length(e));
    }
    Ok(StretchReport::new(p, stretch))
}

#[derive(Clone, Debug, PartialEq)]
pub enum EmbeddingViolation {
    MissingCertificate,
    Congestion { edge: usize, ratio: f64 },
    Dilation { tree_edge: usize, ratio: f64 },
    BrokenPath { tree_edge: usize },
    SelfLoop { tree_edge: usize },
    BadWeight { tree_edge: usize },
    NotATree,
    BadMap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingReport {
    /// Largest `Σ W / w(e)` over graph edges.
    pub max_congestion: f64,
    /// Largest `Σ 1/W / l_T(e)` over tree edges.
    pub max_dilation: f64,
    pub violations: Vec<EmbeddingViolation>,
}

impl EmbeddingReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that the certificate routes every tree edge along a graph path
/// between the images of its endpoints, with congestion and dilation at
/// most one (up to `REL_TOL`).
pub fn verify_embedding(g: &MultiGraph, t: &SteinerTree) -> EmbeddingReport {
    let mut violations = Vec::new();
    let nt = t.n_total();
    if t.map.len() != g.n()
        || t.pi.iter().any(|&v| v >= g.n())
        || t.map.iter().enumerate().any(|(v, &x)| x >= nt || t.pi[x] != v)
    {
        violations.push(EmbeddingViolation::BadMap);
        return EmbeddingReport { max_congestion: f64::NAN, max_dilation: f64::NAN, violations };
    }
    if t.edges.iter().any(|e| e.a >= nt || e.b >= nt) || tree_forest(t).is_err() || t.edges.len() + 1 != nt.max(1) {
        violations.push(EmbeddingViolation::NotATree);
    }
    if t.certificate.paths.len() != t.edges.len() {
        violations.push(EmbeddingViolation::MissingCertificate);
        return EmbeddingReport { max_congestion: f64::NAN, max_dilation: f64::NAN, violations };
    }
    let mut load = vec![0.0; g.m()];
    let mut max_dilation: f64 = 0.0;
    for (i, (te, path)) in t.edges.iter().zip(&t.certificate.paths).enumerate() {
        let (src, dst) = (t.pi[te.a], t.pi[te.b]);
        if src == dst {
            violations.push(EmbeddingViolation::SelfLoop { tree_edge: i });
            continue;
        }
        let mut cur = src;
        let mut inv = 0.0;
        let mut ok = true;
        for &(e, w) in path {
            if e >= g.m() || !(w > 0.0 && w.is_finite()) {
                violations.push(EmbeddingViolation::BadWeight { tree_edge: i });
                ok = false;
                break;
            }
            let edge = g.edge(e);
            if edge.u == cur {
                cur = edge.v;
            } else if edge.v == cur {
                cur = edge.u;
            } else {
                ok = false;
                break;
            }
            load[e] += w;
            inv += 1.0 / w;
        }
        if !ok || cur != dst {
            violations.push(EmbeddingViolation::BrokenPath { tree_edge: i });
            continue;
        }
        let ratio = inv / te.length;
        max_dilation = max_dilation.max(ratio);
        if ratio > 1.0 + REL_TOL {
            violations.push(EmbeddingViolation::Dilation { tree_edge: i, ratio });
        }
    }
    let mut max_congestion: f64 = 0.0;
    for (e, &l) in load.iter().enumerate() {
        let ratio = l * g.length(e);
        max_congestion = max_congestion.max(ratio);
        if ratio > 1.0 + REL_TOL {
            violations.push(EmbeddingViolation::Congestion { edge: e, ratio });
        }
    }
    EmbeddingReport { max_congestion, max_dilation, violations }
}

/// Largest combined vertex count accepted by [`laplacian_sandwich_check`].
pub const SANDWICH_LIMIT: usize = 400;

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorCheckReport {
    pub size: usize,
    pub trials: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub pass: bool,
}

fn laplacian(n: usize, edges: impl Iterator<Item = (usize, usize, f64)>) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    for (u, v, w) in edges {
        l[(u, u)] += w;
        l[(v, v)] += w;
        l[(u, v)] -= w;
        l[(v, u)] -= w;
    }
    l
}

fn pseudo_inverse(l: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(l);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let cutoff = 1e-10 * lmax;
    let zeros = eig.eigenvalues.iter().filter(|x| x.abs() <= cutoff).count();
    if zeros != 1 {
        return Err(Error::Singular(zeros));
    }
    let inv = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&x| if x.abs() <= cutoff { 0.0 } else { 1.0 / x }),
    );
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&inv) * v.transpose())
}

/// Compares `xᵀ L_G^† x` with `xᵀ Π L_H^† Πᵀ x` on random `x ⊥ 1`, where
/// `H` is `G` plus the tree (Steiner vertices appended) and edge weights
/// are inverse lengths. Passes iff every ratio lies in `[1/2 - tol, 1 + tol]`.
pub fn laplacian_sandwich_check<R: Rng + ?Sized>(
    g: &MultiGraph,
    t: &SteinerTree,
    trials: usize,
    tol: f64,
    rng: &mut R,
) -> Result<OperatorCheckReport> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let n = g.n();
    let steiner = t.n_total().saturating_sub(t.n_original);
    let size = n + steiner;
    if size > SANDWICH_LIMIT {
        return Err(Error::TooLarge { size, limit: SANDWICH_LIMIT });
    }
    if t.map.len() != n {
        return Err(Error::NotInTree(t.map.len().min(n)));
    }
    let mut h_index = vec![usize::MAX; t.n_total()];
    for (v, &x) in t.map.iter().enumerate() {
        h_index[x] = v;
    }
    let mut next = n;
    for slot in h_index.iter_mut().filter(|x| **x == usize::MAX) {
        *slot = next;
        next += 1;
    }
    let g_edges = || g.edges().iter().map(|e| (e.u, e.v, 1.0 / e.length));
    let lg = laplacian(n, g_edges());
    let lh = laplacian(
        size,
        g_edges().chain(t.edges.iter().map(|e| (h_index[e.a], h_index[e.b], 1.0 / e.length))),
    );
    let pg = pseudo_inverse(lg)?;
    let ph = pseudo_inverse(lh)?;
    let ph_block = ph.view((0, 0), (n, n)).into_owned();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..trials {
        let mut x = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let mean = x.mean();
        x.add_scalar_mut(-mean);
        let den = x.dot(&(&pg * &x));
        let num = x.dot(&(&ph_block * &x));
        let r = num / den;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let pass = lo >= 0.5 - tol && hi <= 1.0 + tol;
    Ok(OperatorCheckReport { size, trials, min_ratio: lo, max_ratio: hi, pass })
}

/// Seed of trial `i` derived from `master` by counter-mode splitmix64.
pub fn trial_seed(master: u64, i: u64) -> u64 {
    let mut z = master.wrapping_add(i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fresh generator for trial `i`.
pub fn trial_rng(master: u64, i: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, i))
}

#[derive(Clone, Debug, PartialEq)]
pub struct McStats {
    pub trials: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_err: f64,
    /// Normal-approximation 95% interval.
    pub ci: (f64, f64),
}

impl McStats {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let k = samples.len();
        if k == 0 {
            return Err(Error::NoTrials);
        }
        let mean = samples.iter().sum::<f64>() / k as f64;
        let variance = if k > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64
        } else {
            0.0
        };
        let std_err = (variance / k as f64).sqrt();
        Ok(McStats { trials: k, mean, variance, std_err, ci: (mean - 1.96 * std_err, mean + 1.96 * std_err) })
    }
}

/// Runs `estimator(trial_seed(master, i))` for `i < trials` in parallel and
/// aggregates in trial order.
pub fn monte_carlo<F>(trials: usize, master: u64, estimator: F) -> Result<McStats>
where
    F: Fn(u64) -> f64 + Sync,
{
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let samples: Vec<f64> = (0..trials as u64).into_par_iter().map(|i| estimator(trial_seed(master, i))).collect();
    McStats::from_samples(&samples)
}

/// Vector-valued variant: per-component statistics.
pub fn monte_carlo_vec<F>(trials: usize, master: u64, estimator: F) -> Result<Vec<McStats>>
where
    F: Fn(u64) -> Vec<f64> + Sync,
{
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let samples: Vec<Vec<f64>> =
        (0..trials as u64).into_par_iter().map(|i| estimator(trial_seed(master, i))).collect();
    let width = samples[0].len();
    if samples.iter().any(|s| s.len() != width) {
        return Err(invalid("estimator returned vectors of different lengths"));
    }
    (0..width)
        .map(|j| McStats::from_samples(&samples.iter().map(|s| s[j]).collect::<Vec<_>>()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebuild::{EmbeddingCertificate, TreeEdge};

    fn identity_tree(g: &MultiGraph, tree_edges: &[usize]) -> SteinerTree {
        SteinerTree {
            n_original: g.n(),
            edges: tree_edges
                .iter()
                .map(|&e| TreeEdge { a: g.edge(e).u, b: g.edge(e).v, length: g.length(e) })
                .collect(),
            pi: (0..g.n()).collect(),
            map: (0..g.n()).collect(),
            certificate: EmbeddingCertificate {
                paths: tree_edges.iter().map(|&e| vec![(e, 1.0 / g.length(e))]).collect(),
            },
        }
    }

    #[test]
    fn single_edge_stretch_one() {
        let g = MultiGraph::new(2, &[(0, 1, 2.0)]).unwrap();
        let t = identity_tree(&g, &[0]);
        let r = tree_stretch(&g, &t, 0.5).unwrap();
        assert_eq!(r.stretch, vec![1.0]);
        assert_eq!(r.lp, vec![1.0]);
        assert!(verify_embedding(&g, &t).pass());
    }

    #[test]
    fn path_of_four_around_unit_edge() {
        // cycle 0-1-2-3-4-0 with unit edges; tree = path 0-1-2-3-4
        let g = MultiGraph::new(5, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 0, 1.0)]).unwrap();
        let t = identity_tree(&g, &[0, 1, 2, 3]);
        let r = tree_stretch(&g, &t, 0.5).unwrap();
        assert_eq!(r.stretch[4], 4.0);
        assert_eq!(r.lp[4], 2.0);
        let r = r.excluding(&[4]);
        assert_eq!(r.kept.as_ref().unwrap().1.max, 1.0);
    }

    #[test]
    fn doubled_weight_is_caught() {
        let g = MultiGraph::new(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let mut t = identity_tree(&g, &[0, 1]);
        t.certificate.paths[0][0].1 *= 2.0;
        let r = verify_embedding(&g, &t);
        assert!(r.violations.iter().any(|v| matches!(v, EmbeddingViolation::Congestion { edge: 0, .. })));
        let mut t = identity_tree(&g, &[0, 1]);
        t.edges[0].length = 0.5;
        assert!(!verify_embedding(&g, &t).pass());
        let mut t = identity_tree(&g, &[0, 1]);
        t.certificate.paths[0] = vec![(1, 1.0)];
        assert!(!verify_embedding(&g, &t).pass());
    }

    #[test]
    fn decomposition_stretch_example() {
        use crate::bartal::{BartalDecomposition, DiameterSequence, Level};
        let g = MultiGraph::new(2, &[(0, 1, 1.0)]).unwrap();
        let b = BartalDecomposition {
            diameters: DiameterSequence::new(vec![32.0, 16.0, 0.5]).unwrap(),
            levels: vec![Level::default(); 3],
            cut_level: vec![1],
        };
        let r = decomposition_stretch(&g, &b, 0.5).unwrap();
        assert_eq!(r.lp, vec![4.0]);
        let r = decomposition_stretch(&g, &b, 1.0).unwrap();
        assert_eq!(r.lp, vec![16.0]);
        let b = BartalDecomposition { cut_level: vec![2], ..b };
        assert!(matches!(decomposition_stretch(&g, &b, 0.5), Err(Error::NeverCut(0))));
    }

    #[test]
    fn sandwich_identity_is_one() {
        let g = MultiGraph::new(4, &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 0, 3.0)]).unwrap();
        let mut t = identity_tree(&g, &[0, 1, 2]);
        t.edges.iter_mut().for_each(|e| e.length = 1e12);
        let r = laplacian_sandwich_check(&g, &t, 20, 1e-6, &mut trial_rng(1, 0)).unwrap();
        assert!((r.max_ratio - 1.0).abs() < 1e-6 && (r.min_ratio - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sandwich_steiner_midpoint() {
        // single unit edge, tree = two half-length edges through a Steiner vertex
        let g = MultiGraph::new(2, &[(0, 1, 1.0)]).unwrap();
        let t = SteinerTree {
            n_original: 2,
            edges: vec![TreeEdge { a: 0, b: 2, length: 0.5 }, TreeEdge { a: 2, b: 1, length: 0.5 }],
            pi: vec![0, 1, 0],
            map: vec![0, 1],
            certificate: EmbeddingCertificate { paths: vec![vec![], vec![(0, 2.0)]] },
        };
        let r = laplacian_sandwich_check(&g, &t, 10, 1e-8, &mut trial_rng(2, 0)).unwrap();
        // H: unit edge in parallel with a path of resistance 1, so R_H = 1/2
        assert!((r.min_ratio - 0.5).abs() < 1e-9);
        assert!(r.pass);
    }

    #[test]
    fn monte_carlo_basics() {
        let s = monte_carlo(100, 7, |_| 3.0).unwrap();
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.mean, 3.0);
        let coin = monte_carlo(10_000, 11, |seed| (trial_rng(seed, 0).random::<bool>() as u8) as f64).unwrap();
        assert!((coin.mean - 0.5).abs() <= 0.02);
        assert!(matches!(monte_carlo(0, 1, |_| 0.0), Err(Error::NoTrials)));
        let a = monte_carlo(50, 3, |seed| (seed % 1000) as f64).unwrap();
        let b = monte_carlo(50, 3, |seed| (seed % 1000) as f64).unwrap();
        assert_eq!(a, b);
    }
}

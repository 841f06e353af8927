//! Seeded benchmark graphs.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::MultiGraph;

const MAX_ATTEMPTS: usize = 100;

/// Generator specification, written `path:N`, `cycle:N`, `grid:RxC`,
/// `er:N:M:MAXLEN` or `geometric:N:RADIUS`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GraphSpec {
    Path(usize),
    Cycle(usize),
    Grid(usize, usize),
    /// `m` distinct random pairs with lengths uniform in `[1, maxlen]`
    /// (unit when `maxlen` is 1).
    Er { n: usize, m: usize, maxlen: f64 },
    /// Random points in the unit square joined within `radius`; lengths
    /// grow linearly from 1 to 10 with Euclidean distance.
    Geometric { n: usize, radius: f64 },
}

impl GraphSpec {
    pub fn vertex_count(&self) -> usize {
        match *self {
            GraphSpec::Path(n) | GraphSpec::Cycle(n) => n,
            GraphSpec::Grid(r, c) => r * c,
            GraphSpec::Er { n, .. } | GraphSpec::Geometric { n, .. } => n,
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Path(n) => write!(f, "path:{n}"),
            GraphSpec::Cycle(n) => write!(f, "cycle:{n}"),
            GraphSpec::Grid(r, c) => write!(f, "grid:{r}x{c}"),
            GraphSpec::Er { n, m, maxlen } => write!(f, "er:{n}:{m}:{maxlen}"),
            GraphSpec::Geometric { n, radius } => write!(f, "geometric:{n}:{radius}"),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid(format!("bad graph spec `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        let int = |x: &str| x.parse::<usize>().map_err(|_| bad());
        let real = |x: &str| x.parse::<f64>().map_err(|_| bad());
        match parts.as_slice() {
            ["path", n] => Ok(GraphSpec::Path(int(n)?)),
            ["cycle", n] => Ok(GraphSpec::Cycle(int(n)?)),
            ["grid", rc] => {
                let (r, c) = rc.split_once('x').ok_or_else(bad)?;
                Ok(GraphSpec::Grid(int(r)?, int(c)?))
            }
            ["er", n, m] => Ok(GraphSpec::Er { n: int(n)?, m: int(m)?, maxlen: 1.0 }),
            ["er", n, m, l] => Ok(GraphSpec::Er { n: int(n)?, m: int(m)?, maxlen: real(l)? }),
            ["geometric", n, r] => Ok(GraphSpec::Geometric { n: int(n)?, radius: real(r)? }),
            _ => Err(bad()),
        }
    }
}

pub fn generate(spec: &GraphSpec, seed: u64) -> Result<MultiGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *spec {
        GraphSpec::Path(n) => {
            if n == 0 {
                return Err(invalid("path needs at least one vertex"));
            }
            let edges: Vec<_> = (1..n).map(|i| (i - 1, i, 1.0)).collect();
            MultiGraph::new(n, &edges)
        }
        GraphSpec::Cycle(n) => {
            if n < 3 {
                return Err(invalid("cycle needs at least three vertices"));
            }
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
            MultiGraph::new(n, &edges)
        }
        GraphSpec::Grid(r, c) => {
            if r == 0 || c == 0 {
                return Err(invalid("grid needs positive dimensions"));
            }
            let mut edges = Vec::new();
            for i in 0..r {
                for j in 0..c {
                    let v = i * c + j;
                    if j + 1 < c {
                        edges.push((v, v + 1, 1.0));
                    }
                    if i + 1 < r {
                        edges.push((v, v + c, 1.0));
                    }
                }
            }
            MultiGraph::new(r * c, &edges)
        }
        GraphSpec::Er { n, m, maxlen } => {
            let pairs = n * n.saturating_sub(1) / 2;
            if n == 0 || m + 1 < n || m > pairs || !(maxlen >= 1.0) {
                return Err(invalid(format!("unsatisfiable spec {spec}")));
            }
            for _ in 0..MAX_ATTEMPTS {
                let mut edges = Vec::with_capacity(m);
                for k in sample(&mut rng, pairs, m).into_iter() {
                    let (u, v) = unrank_pair(k);
                    let l = if maxlen > 1.0 { rng.random_range(1.0..=maxlen) } else { 1.0 };
                    edges.push((u, v, l));
                }
                let g = MultiGraph::new(n, &edges)?;
                if g.is_connected() {
                    return Ok(g);
                }
            }
            Err(invalid(format!("{spec} stayed disconnected after {MAX_ATTEMPTS} attempts")))
        }
        GraphSpec::Geometric { n, radius } => {
            if n == 0 || !(radius > 0.0) {
                return Err(invalid(format!("unsatisfiable spec {spec}")));
            }
            for _ in 0..MAX_ATTEMPTS {
                let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        let d = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
                        if d <= radius {
                            edges.push((i, j, 1.0 + 9.0 * d / radius));
                        }
                    }
                }
                let g = MultiGraph::new(n, &edges)?;
                if g.is_connected() {
                    return Ok(g);
                }
            }
            Err(invalid(format!("{spec} stayed disconnected after {MAX_ATTEMPTS} attempts")))
        }
    }
}

/// k-th pair `(u, v)`, `u < v`, in the order (0,1), (0,2), (1,2), (0,3), ...
fn unrank_pair(k: usize) -> (usize, usize) {
    let mut v = ((((8 * k + 1) as f64).sqrt() - 1.0) / 2.0) as usize + 1;
    while v * (v - 1) / 2 > k {
        v -= 1;
    }
    while (v + 1) * v / 2 <= k {
        v += 1;
    }
    (k - v * (v - 1) / 2, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_shapes() {
        let g = generate(&"path:4".parse().unwrap(), 0).unwrap();
        assert_eq!((g.n(), g.m()), (4, 3));
        let g = generate(&"grid:2x2".parse().unwrap(), 0).unwrap();
        assert_eq!((g.n(), g.m()), (4, 4));
        let g = generate(&GraphSpec::Cycle(5), 0).unwrap();
        assert_eq!(g.m(), 5);
    }

    #[test]
    fn er_is_deterministic_and_connected() {
        let spec: GraphSpec = "er:100:300".parse().unwrap();
        let a = generate(&spec, 7).unwrap();
        let b = generate(&spec, 7).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert!(a.is_connected());
        assert_eq!(a.m(), 300);
        assert!(generate(&"er:10:5".parse().unwrap(), 1).is_err());
        assert!(generate(&"er:4:7".parse().unwrap(), 1).is_err());
    }

    #[test]
    fn unrank_covers_pairs() {
        let pairs: Vec<_> = (0..6).map(unrank_pair).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]);
    }

    #[test]
    fn spec_round_trip() {
        for s in ["path:3", "cycle:64", "grid:16x16", "er:100:300:10", "geometric:50:0.3"] {
            assert_eq!(s.parse::<GraphSpec>().unwrap().to_string(), s);
        }
        assert!("grid:3".parse::<GraphSpec>().is_err());
    }
}

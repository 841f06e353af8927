//! End-to-end construction: normalize, switch moments, cluster bottom-up,
//! refine top-down and build the Steiner tree.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::akpw::{akpw, AkpwDecomposition};
use crate::bartal::{moment_switch, DiameterSequence};
use crate::error::{invalid, Result};
use crate::graph::{log_n, normalize, MultiGraph};
use crate::treebuild::{expand_implicit, SteinerTree};
use crate::two_stage::{decompose_two_stage, initial_diameter, ImplicitDecomposition, ScopeParams};
use crate::C_PARTITION;

/// Bound `|S| <= C_IGNORED * m / k` on ignored edges accepted by the
/// simplified pipeline.
pub const C_IGNORED: f64 = 4.0;

/// Simplified-mode attempts before giving up on the ignored-edge bound.
pub const MAX_ATTEMPTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Full,
    Simplified { k: f64 },
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    /// Tree in the units of the input graph.
    pub tree: SteinerTree,
    /// Moment-switched decomposition of the normalized graph.
    pub decomposition: ImplicitDecomposition,
    /// AKPW hierarchy of the switched graph.
    pub akpw: AkpwDecomposition,
    /// Input graph divided by its shortest edge length.
    pub normalized: MultiGraph,
    pub min_length: f64,
    pub p: f64,
    pub q: f64,
    pub params: ScopeParams,
    pub log_n: f64,
    pub attempts: usize,
    /// False if simplified mode exhausted its attempts with too many ignored edges.
    pub ignored_bound_met: bool,
}

/// Full-mode AKPW parameter `δ = (c_P ln n)^{1/(q-p)}`.
pub fn full_delta(p: f64, q: f64, log_n: f64) -> f64 {
    (C_PARTITION * log_n).powf(1.0 / (q - p))
}

pub fn scope_params(p: f64, mode: Mode, log_n: f64) -> Result<ScopeParams> {
    let q = (1.0 + p) / 2.0;
    match mode {
        Mode::Full => ScopeParams::full(q, full_delta(p, q, log_n)),
        Mode::Simplified { k } => ScopeParams::simplified(k, log_n),
    }
}

/// One decomposition attempt on the normalized graph with `q = (1+p)/2`.
pub fn decompose(
    g: &MultiGraph,
    p: f64,
    params: &ScopeParams,
    rng: &mut ChaCha8Rng,
) -> Result<(ImplicitDecomposition, AkpwDecomposition)> {
    let q = (1.0 + p) / 2.0;
    let ln = log_n(g.n());
    let mut hierarchy = None;
    let dec = moment_switch(g, p, q, |gp| {
        let a = akpw(gp, params.delta, ln, rng)?;
        let dd = DiameterSequence::halving(initial_diameter(gp, &a))?;
        let dec = decompose_two_stage(gp, &dd, &a, params, rng)?;
        hierarchy = Some(a);
        Ok(dec)
    })?;
    Ok((dec, hierarchy.expect("inner routine ran")))
}

/// Builds a random embeddable Steiner tree of a connected graph with low
/// expected ℓp-stretch, `0 < p < 1`.
pub fn full_pipeline(g: &MultiGraph, p: f64, mode: Mode, seed: u64) -> Result<PipelineOutput> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("p must lie in (0, 1), got {p}")));
    }
    let nz = normalize(g)?;
    let gn = nz.graph;
    let ln = log_n(gn.n());
    let params = scope_params(p, mode, ln)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0;
    let (dec, a, met) = loop {
        attempts += 1;
        let (dec, a) = decompose(&gn, p, &params, &mut rng)?;
        let met = match mode {
            Mode::Full => true,
            Mode::Simplified { k } => dec.ignored.len() as f64 <= C_IGNORED * gn.m() as f64 / k,
        };
        if met || attempts >= MAX_ATTEMPTS {
            if !met {
                log::warn!("ignored-edge bound not met after {attempts} attempts");
            }
            break (dec, a, met);
        }
    };
    let mut tree = expand_implicit(&gn, &dec, Some(&a))?;
    tree.rescale(nz.min_length);
    Ok(PipelineOutput {
        tree,
        decomposition: dec,
        akpw: a,
        normalized: gn,
        min_length: nz.min_length,
        p,
        q: (1.0 + p) / 2.0,
        params,
        log_n: ln,
        attempts,
        ignored_bound_met: met,
    })
}

//! Benchmark sweeps emitting `graph,n,m,p,seed,metric,value` CSV.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use lowstretch::metrics::StretchReport;
use lowstretch::two_stage::participation_stats;
use lowstretch::*;
use rayon::prelude::*;

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum Suite {
    /// Full-mode ℓp-stretch on growing instances.
    StretchScaling,
    /// Simplified mode: ignored-edge fraction and ℓ1-stretch of kept edges.
    EdgeTossing,
    /// Congestion and dilation of every output tree.
    Embedding,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Comma-separated generator specs; each suite has its own default.
    #[arg(long, value_delimiter = ',')]
    graphs: Vec<GraphSpec>,
    /// Exponents for full mode.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    p: Vec<f64>,
    /// Ignored-edge parameters for the edge-tossing suite.
    #[arg(long, value_delimiter = ',', default_value = "4,16,64")]
    k: Vec<f64>,
    /// Pipeline seeds 0..SEEDS per instance.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Seed of the graph generators.
    #[arg(long, default_value_t = 0)]
    graph_seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub struct CsvOut {
    header: String,
    writer: csv::Writer<Vec<u8>>,
}

impl CsvOut {
    pub fn new(comments: &[String]) -> Self {
        let mut header = String::new();
        for c in comments {
            header.push_str("# ");
            header.push_str(c);
            header.push('\n');
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["graph", "n", "m", "p", "seed", "metric", "value"])
            .expect("writing to memory");
        CsvOut { header, writer }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn row(&mut self, graph: &str, n: usize, m: usize, p: f64, seed: u64, metric: &str, value: f64) {
        self.writer
            .write_record([
                graph.to_string(),
                n.to_string(),
                m.to_string(),
                p.to_string(),
                seed.to_string(),
                metric.to_string(),
                value.to_string(),
            ])
            .expect("writing to memory");
    }

    pub fn finish(self) -> Result<String> {
        let body = String::from_utf8(self.writer.into_inner()?)?;
        Ok(self.header + &body)
    }
}

pub fn summary_rows(r: &StretchReport) -> Vec<(String, f64)> {
    let mut rows = vec![
        ("stretch_mean".to_string(), r.summary.mean),
        ("stretch_max".to_string(), r.summary.max),
        ("stretch_p50".to_string(), r.summary.p50),
        ("stretch_p90".to_string(), r.summary.p90),
        ("stretch_p99".to_string(), r.summary.p99),
        ("lp_mean".to_string(), r.lp_summary.mean),
        ("lp_max".to_string(), r.lp_summary.max),
    ];
    if let Some((kept, s, l)) = &r.kept {
        rows.push(("kept_edges".to_string(), *kept as f64));
        rows.push(("kept_stretch_mean".to_string(), s.mean));
        rows.push(("kept_lp_mean".to_string(), l.mean));
    }
    rows
}

struct Job {
    graph: usize,
    p: f64,
    k: Option<f64>,
    seed: u64,
}

type Rows = Vec<(String, f64)>;

fn measure(suite: Suite, g: &MultiGraph, job: &Job) -> Result<Rows> {
    let mode = match job.k {
        Some(k) => Mode::Simplified { k },
        None => Mode::Full,
    };
    let out = full_pipeline(g, job.p, mode, job.seed)?;
    let mut rows = Vec::new();
    match suite {
        Suite::StretchScaling => {
            let r = tree_stretch(g, &out.tree, job.p)?;
            rows.extend(summary_rows(&r));
            let d = decomposition_stretch(&out.normalized, &out.decomposition, job.p)?;
            rows.push(("decomposition_lp_mean".into(), d.lp_summary.mean));
            rows.push(("tree_vertices".into(), out.tree.n_total() as f64));
            rows.push(("levels".into(), out.decomposition.t() as f64));
            rows.push(("participation_mean".into(), participation_stats(&out.decomposition.trace).mean));
        }
        Suite::EdgeTossing => {
            let k = job.k.expect("edge tossing runs carry k");
            let ignored = &out.decomposition.ignored;
            let r = tree_stretch(g, &out.tree, 1.0)?.excluding(ignored);
            rows.push(("k".into(), k));
            rows.push(("ignored_fraction".into(), ignored.len() as f64 / g.m() as f64));
            rows.push(("attempts".into(), out.attempts as f64));
            rows.push(("bound_met".into(), if out.ignored_bound_met { 1.0 } else { 0.0 }));
            if let Some((kept, s, _)) = r.kept {
                rows.push(("kept_edges".into(), kept as f64));
                rows.push(("kept_l1_mean".into(), s.mean));
            }
        }
        Suite::Embedding => {
            let r = verify_embedding(g, &out.tree);
            rows.push(("max_congestion".into(), r.max_congestion));
            rows.push(("max_dilation".into(), r.max_dilation));
            rows.push(("violations".into(), r.violations.len() as f64));
            rows.push(("tree_vertices".into(), out.tree.n_total() as f64));
        }
    }
    Ok(rows)
}

fn default_graphs(suite: Suite) -> Vec<GraphSpec> {
    match suite {
        Suite::StretchScaling => [16, 32, 64, 128].iter().map(|&s| GraphSpec::Grid(s, s)).collect(),
        Suite::EdgeTossing => vec![GraphSpec::Grid(32, 32), GraphSpec::Er { n: 1024, m: 4096, maxlen: 10.0 }],
        Suite::Embedding => vec![
            GraphSpec::Grid(16, 16),
            GraphSpec::Er { n: 500, m: 2000, maxlen: 10.0 },
            GraphSpec::Geometric { n: 300, radius: 0.12 },
        ],
    }
}

/// Simplified-mode exponent `1 - 1/ln(k ln n)`.
pub fn tossing_exponent(k: f64, n: usize) -> f64 {
    1.0 - 1.0 / (k * log_n(n)).ln().max(2.0)
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let specs = if args.graphs.is_empty() { default_graphs(args.suite) } else { args.graphs.clone() };
    let graphs: Vec<MultiGraph> =
        specs.iter().map(|s| generate(s, args.graph_seed)).collect::<lowstretch::Result<_>>()?;
    let mut jobs = Vec::new();
    for (gi, g) in graphs.iter().enumerate() {
        for seed in 0..args.seeds {
            match args.suite {
                Suite::EdgeTossing => {
                    for &k in &args.k {
                        jobs.push(Job { graph: gi, p: tossing_exponent(k, g.n()), k: Some(k), seed });
                    }
                }
                _ => {
                    for &p in &args.p {
                        jobs.push(Job { graph: gi, p, k: None, seed });
                    }
                }
            }
        }
    }
    let results: Vec<Rows> =
        jobs.par_iter().map(|j| measure(args.suite, &graphs[j.graph], j)).collect::<Result<_>>()?;

    let suite = args.suite.to_possible_value().expect("no skipped variants").get_name().to_string();
    let names: Vec<String> = specs.iter().map(|s| s.to_string()).collect();
    let mut order: Vec<usize> = (0..jobs.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&jobs[a], &jobs[b]);
        (x.graph, x.k.unwrap_or(0.0).to_bits(), x.p.to_bits(), x.seed).cmp(&(
            y.graph,
            y.k.unwrap_or(0.0).to_bits(),
            y.p.to_bits(),
            y.seed,
        ))
    });
    let mut out = CsvOut::new(&[
        format!("lowstretch bench suite={suite} seeds=0..{} graph_seed={}", args.seeds, args.graph_seed),
        format!("graphs={}", names.join(",")),
    ]);
    for i in order {
        let j = &jobs[i];
        let g = &graphs[j.graph];
        for (metric, value) in &results[i] {
            out.row(&names[j.graph], g.n(), g.m(), j.p, j.seed, metric, *value);
        }
    }
    let text = out.finish()?;
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

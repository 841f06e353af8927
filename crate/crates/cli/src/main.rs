use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lowstretch::pipeline::decompose;
use lowstretch::two_stage::participation_stats;
use lowstretch::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod bench;

#[derive(Parser, Debug)]
#[command(name = "lowstretch", version, about = "Low ℓp-stretch embeddable Steiner trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated graph as an edge list.
    Gen {
        /// path:N, cycle:N, grid:RxC, er:N:M[:MAXLEN] or geometric:N:RADIUS
        spec: GraphSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and validate a Bartal decomposition, printing its levels.
    Decompose {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = Method::TwoStage)]
        method: Method,
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print per-level partition counts to stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Run the full pipeline and write the Steiner tree.
    Tree {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave the embedding certificate out of the tree file.
        #[arg(long)]
        no_certificate: bool,
    },
    /// ℓp-stretch of a tree file against its graph, as CSV.
    Stretch {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
    },
    /// Check congestion and dilation of a tree's certificate. Exit 1 on failure.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        tree: PathBuf,
    },
    /// Dense pseudoinverse sandwich check. Exit 1 on failure.
    LaplacianCheck {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sweep instances and seeds, emitting `graph,n,m,p,seed,metric,value` rows.
    Bench(bench::BenchArgs),
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
struct Input {
    /// Edge-list file.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Generator spec, seeded with --seed.
    #[arg(long)]
    gen: Option<GraphSpec>,
}

#[derive(Args, Debug, Clone)]
struct Params {
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Full)]
    mode: ModeArg,
    /// Ignored-edge parameter of the simplified mode.
    #[arg(long, default_value_t = 16.0)]
    k: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Method {
    Simple,
    TwoStage,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum ModeArg {
    Full,
    Simplified,
}

impl Params {
    fn mode(&self) -> Mode {
        match self.mode {
            ModeArg::Full => Mode::Full,
            ModeArg::Simplified => Mode::Simplified { k: self.k },
        }
    }

    fn header(&self) -> String {
        match self.mode {
            ModeArg::Full => format!("p={} mode=full seed={}", self.p, self.seed),
            ModeArg::Simplified => format!("p={} mode=simplified k={} seed={}", self.p, self.k, self.seed),
        }
    }
}

/// Failure of a check rather than of the invocation.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct CheckFailed(String);

fn read_graph(path: &Path) -> Result<MultiGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    MultiGraph::parse_edge_list(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_tree(path: &Path) -> Result<SteinerTree> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SteinerTree::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load(input: &Input, seed: u64) -> Result<(MultiGraph, String)> {
    match (&input.graph, &input.gen) {
        (Some(path), None) => Ok((read_graph(path)?, format!("graph={}", path.display()))),
        (None, Some(spec)) => Ok((generate(spec, seed)?, format!("gen={spec} gen_seed={seed}"))),
        _ => bail!("give exactly one of --graph and --gen"),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { spec, seed, out } => {
            let g = generate(&spec, seed)?;
            let text = format!("# lowstretch gen {spec} seed={seed}\n{}", g.to_edge_list());
            emit(out.as_deref(), &text)
        }
        Command::Decompose { input, method, params, out, trace } => {
            let (g, source) = load(&input, params.seed)?;
            let nz = normalize(&g)?;
            let gn = &nz.graph;
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            let (b, stats) = match method {
                Method::Simple => {
                    let dd = make_diameter_sequence(gn.n(), nz.delta)?;
                    (decompose_simple(gn, &dd, &mut rng)?, None)
                }
                Method::TwoStage => {
                    let ln = log_n(gn.n());
                    let sp = pipeline::scope_params(params.p, params.mode(), ln)?;
                    let (imp, a) = decompose(gn, params.p, &sp, &mut rng)?;
                    let stats = participation_stats(&imp.trace);
                    (imp.expand(gn, Some(&a))?, Some((stats, imp.ignored.len())))
                }
            };
            let report = validate_decomposition(gn, &b);
            if let Some(v) = report.first() {
                return Err(CheckFailed(format!("invalid decomposition: {v}")).into());
            }
            if trace {
                if let Some((s, ignored)) = &stats {
                    eprintln!("participation mean {} max {} total {}", s.mean, s.max, s.total);
                    eprintln!("level sizes {:?}", s.per_level);
                    eprintln!("ignored edges {ignored}");
                }
            }
            let method = match method {
                Method::Simple => "simple",
                Method::TwoStage => "two-stage",
            };
            let text = format!(
                "# lowstretch decompose {source} method={method} {}\n# lengths divided by {}\n{}",
                params.header(),
                nz.min_length,
                b.dump(gn)
            );
            emit(out.as_deref(), &text)
        }
        Command::Tree { input, params, out, no_certificate } => {
            let (g, source) = load(&input, params.seed)?;
            let res = full_pipeline(&g, params.p, params.mode(), params.seed)?;
            let header = vec![
                format!("lowstretch tree {source} {}", params.header()),
                format!("attempts={} ignored={}", res.attempts, res.decomposition.ignored.len()),
            ];
            log::info!("tree with {} vertices, {} levels", res.tree.n_total(), res.decomposition.t());
            emit(out.as_deref(), &res.tree.to_text(&header, !no_certificate))
        }
        Command::Stretch { graph, tree, p } => {
            let g = read_graph(&graph)?;
            let t = read_tree(&tree)?;
            let r = tree_stretch(&g, &t, p)?;
            let name = graph.display().to_string();
            let rows = bench::summary_rows(&r);
            let mut out = bench::CsvOut::new(&[format!("lowstretch stretch graph={name} tree={} p={p}", tree.display())]);
            for (metric, value) in rows {
                out.row(&name, g.n(), g.m(), p, 0, &metric, value);
            }
            emit(None, &out.finish()?)
        }
        Command::Verify { graph, tree } => {
            let g = read_graph(&graph)?;
            let t = read_tree(&tree)?;
            let r = verify_embedding(&g, &t);
            println!("max_congestion {}", r.max_congestion);
            println!("max_dilation {}", r.max_dilation);
            for v in &r.violations {
                println!("violation {v:?}");
            }
            if r.pass() {
                println!("PASS");
                Ok(())
            } else {
                Err(CheckFailed(format!("{} embedding violations", r.violations.len())).into())
            }
        }
        Command::LaplacianCheck { graph, tree, trials, tol, seed } => {
            let g = read_graph(&graph)?;
            let t = read_tree(&tree)?;
            let r = laplacian_sandwich_check(&g, &t, trials, tol, &mut ChaCha8Rng::seed_from_u64(seed))?;
            println!("size {} trials {} min_ratio {} max_ratio {}", r.size, r.trials, r.min_ratio, r.max_ratio);
            if r.pass {
                println!("PASS");
                Ok(())
            } else {
                Err(CheckFailed(format!("ratio outside [1/2 - {tol}, 1 + {tol}]")).into())
            }
        }
        Command::Bench(args) => bench::run(&args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(threads) = std::env::var("LOWSTRETCH_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            log::warn!("could not size thread pool: {e}");
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<CheckFailed>() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

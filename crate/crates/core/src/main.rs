use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use wncoef::graph::BasedGraph;
use wncoef::words::Word;
use wncoef::{ineq, io, lp, pipeline, pullback, Error, Result};

#[derive(Parser)]
#[command(
    name = "wncoef",
    version,
    about = "Exact intersection-ratio coefficients of free-group subgroups"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the folded subgroup graph from a word list.
    Stallings(StallingsArgs),
    /// Compute the coefficient with a fully verified extremal witness.
    Sigma(WordsArgs),
    /// Compute the extremal witness graph and export it.
    Witness(StallingsArgs),
    /// Intersect two subgroup graphs: component table with coset words and
    /// nontrivial intersection certificates.
    Pullback(PullbackArgs),
    /// Check the intersection rank bound on a pair of graphs or a seeded
    /// random corpus.
    Shnc(ShncArgs),
    /// Decide whether sigma times the reduced rank is at most 1.
    StronglyInert(WordsArgs),
    /// Decide whether every overgroup has reduced rank at least as large.
    Compressed(WordsArgs),
    /// Brute-force partner enumeration; a lower bound that must agree with
    /// the solver when the bound is generous enough.
    Oracle(OracleArgs),
    /// Export the inequality system in LP text format.
    ExportLp(ExportArgs),
}

#[derive(Args)]
struct AmbientArgs {
    /// Number of standard generators. The ambient graph gets rank+1 edges.
    #[arg(long, conflicts_with = "m")]
    rank: Option<u32>,
    /// Ambient edge count (at least 3), taking precedence over --rank.
    #[arg(long)]
    m: Option<u32>,
}

impl AmbientArgs {
    fn resolve(&self) -> Result<u32> {
        match (self.rank, self.m) {
            (_, Some(m)) => Ok(m),
            (Some(n), None) => Ok(n + 1),
            (None, None) => Err(Error::Parse(
                "the ambient size is never inferred: pass --rank or --m".into(),
            )),
        }
    }
}

#[derive(Args)]
struct WordsArgs {
    /// Word list file: one word per line, tokens like x2 or x2^-1.
    #[arg(long, visible_alias = "input")]
    words: PathBuf,
    #[command(flatten)]
    ambient: AmbientArgs,
    /// Emit a JSON report instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct StallingsArgs {
    #[command(flatten)]
    common: WordsArgs,
    /// Write a GraphViz rendering to this path.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct PullbackArgs {
    /// First subgroup graph (JSON, base vertex required).
    a: PathBuf,
    /// Second subgroup graph (JSON, base vertex required).
    b: PathBuf,
    /// Write the pullback core as GraphViz to this path.
    #[arg(long)]
    dot: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ShncArgs {
    /// Two subgroup graph files (JSON) for a single pair check.
    #[arg(value_name = "GRAPH", num_args = 0..=2)]
    files: Vec<PathBuf>,
    /// Run a seeded random corpus instead of a file pair.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of random pairs in seeded mode.
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[command(flatten)]
    ambient: AmbientArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: WordsArgs,
    /// Enumerate partner graphs with at most this many vertices.
    #[arg(long, default_value_t = 4)]
    max_vertices: usize,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    common: WordsArgs,
    /// Output path for the LP text file.
    #[arg(long)]
    out: PathBuf,
}

fn emit(v: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&v).expect("json rendering"));
}

fn word_str(w: &Word) -> String {
    if w.is_empty() {
        "1".to_string()
    } else {
        w.to_string()
    }
}

fn load_words(args: &WordsArgs) -> Result<(Vec<Word>, u32)> {
    Ok((io::read_words_file(&args.words)?, args.ambient.resolve()?))
}

fn cmd_stallings(a: StallingsArgs) -> Result<()> {
    let (words, m) = load_words(&a.common)?;
    let based = pipeline::prepare_based(&words, m)?;
    let core = based.graph.core();
    if let Some(p) = &a.dot {
        std::fs::write(p, io::dot_string(&based.graph, Some(based.base)))?;
    }
    if a.common.json {
        emit(io::graph_to_json(&based.graph, Some(based.base)));
    } else {
        println!("m = {m}");
        println!(
            "folded graph: {} vertices, {} stored edges, base vertex {}",
            based.graph.vertex_count(),
            based.graph.edge_count(),
            based.base
        );
        println!(
            "core: {} vertices, {} stored edges, reduced rank {}",
            core.vertex_count(),
            core.edge_count(),
            core.reduced_rank()?
        );
    }
    Ok(())
}

fn cmd_sigma(a: WordsArgs) -> Result<()> {
    let (words, m) = load_words(&a)?;
    let core = pipeline::prepare_core(&words, m)?;
    let (rep, _) = pipeline::sigma_report(&core)?;
    if a.json {
        emit(rep.to_json());
    } else {
        println!("sigma = {}", rep.sigma);
        println!(
            "core graph: {} vertices, {} stored edges, reduced rank {}, m = {}",
            rep.vertices, rep.edges, rep.brr, rep.m
        );
        println!(
            "lp: {} inequalities over {} variables, {} pivots",
            rep.m_inq, rep.n_inq, rep.lp_pivots
        );
        println!(
            "witness: reduced rank {}, {} vertices, {} edges, {}connected, size bound {}",
            rep.witness_brr,
            rep.witness_vertices,
            rep.witness_edges,
            if rep.witness_connected { "" } else { "not " },
            if rep.witness_size_ok { "ok" } else { "exceeded" }
        );
        println!(
            "verified: pullback reduced rank {} = sigma x {} x {}",
            rep.product_brr, rep.brr, rep.witness_brr
        );
        println!("time: {} ms", rep.millis);
    }
    Ok(())
}

fn cmd_witness(a: StallingsArgs) -> Result<()> {
    let (words, m) = load_words(&a.common)?;
    let core = pipeline::prepare_core(&words, m)?;
    let (rep, wit) = pipeline::sigma_report(&core)?;
    if let Some(p) = &a.dot {
        std::fs::write(p, io::dot_string(&wit.graph, None))?;
    }
    if a.common.json {
        emit(json!({
            "sigma": rep.sigma.to_string(),
            "scale": wit.scale,
            "multiset_counts": wit.multiset.counts(),
            "connected": wit.connected,
            "size_bound_ok": wit.size_ok,
            "reduced_rank": wit.witness_brr,
            "pullback_reduced_rank": wit.product_brr,
            "graph": io::graph_to_json(&wit.graph, None),
        }));
    } else {
        println!("sigma = {}", rep.sigma);
        println!(
            "witness: {} vertices, {} stored edges, reduced rank {}",
            wit.graph.vertex_count(),
            wit.graph.edge_count(),
            wit.witness_brr
        );
        println!(
            "multiset: {} instances over {} inequalities (dual scale {})",
            wit.multiset.counts().iter().sum::<u64>(),
            rep.m_inq,
            wit.scale
        );
        println!(
            "verified: pullback reduced rank {} = sigma x {} x {}",
            wit.product_brr, rep.brr, wit.witness_brr
        );
    }
    Ok(())
}

fn read_based(path: &PathBuf) -> Result<BasedGraph> {
    let (graph, base) = io::read_graph_file(path)?;
    let base = base.ok_or_else(|| {
        Error::InvalidGraph(format!("{}: a base vertex is required", path.display()))
    })?;
    Ok(BasedGraph { graph, base })
}

fn cmd_pullback(a: PullbackArgs) -> Result<()> {
    let g1 = read_based(&a.a)?;
    let g2 = read_based(&a.b)?;
    let table = pullback::component_table(&g1, &g2)?;
    if let Some(p) = &a.dot {
        let core = pullback::pullback_core(&g1.graph, &g2.graph)?;
        std::fs::write(p, io::dot_string(core.graph(), None))?;
    }
    let total: u64 = table.iter().map(|c| c.brr).sum();
    let brr1 = g1.graph.core().reduced_rank()?;
    let brr2 = g2.graph.core().reduced_rank()?;
    if a.json {
        emit(json!({
            "components": table.iter().map(|c| json!({
                "reduced_rank": c.brr,
                "vertices": c.vertices,
                "edges": c.edges,
                "coset": c.coset_word.as_ref().map(word_str),
                "certificate": c.intersection_word.as_ref().map(word_str),
            })).collect::<Vec<_>>(),
            "pullback_reduced_rank": total,
            "rank_product": brr1 * brr2,
            "sharp_bound_holds": total <= brr1 * brr2,
        }));
    } else {
        println!("components with nontrivial intersection: {}", table.len());
        for (i, c) in table.iter().enumerate() {
            println!(
                "  [{}] reduced rank {}, {} vertices, {} edges, t = {}, witness = {}",
                i,
                c.brr,
                c.vertices,
                c.edges,
                word_str(c.coset_word.as_ref().expect("filled by component_table")),
                word_str(c.intersection_word.as_ref().expect("filled by component_table")),
            );
        }
        println!("pullback reduced rank: {total}");
        println!(
            "rank product bound: {} - sharp bound {}",
            brr1 * brr2,
            if total <= brr1 * brr2 { "holds" } else { "FAILS" }
        );
    }
    Ok(())
}

fn cmd_shnc(a: ShncArgs) -> Result<()> {
    let mut reports = Vec::new();
    match (a.files.len(), a.seed) {
        (2, None) => {
            let (g1, _) = io::read_graph_file(&a.files[0])?;
            let (g2, _) = io::read_graph_file(&a.files[1])?;
            reports.push(pipeline::shnc_check(&g1.core(), &g2.core())?);
        }
        (0, Some(seed)) => {
            let m = a.ambient.resolve()?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..a.count {
                let g1 = pipeline::random_subgroup_core(&mut rng, m, 3, 6)?;
                let g2 = pipeline::random_subgroup_core(&mut rng, m, 3, 6)?;
                reports.push(pipeline::shnc_check(&g1, &g2)?);
            }
        }
        _ => {
            return Err(Error::Parse(
                "pass exactly two graph files, or --seed with none".into(),
            ))
        }
    }
    let violations: Vec<usize> = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.holds)
        .map(|(i, _)| i)
        .collect();
    if a.json {
        emit(json!({
            "pairs": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            "violations": violations,
        }));
    } else {
        for (i, r) in reports.iter().enumerate() {
            println!(
                "pair {}: rank {} x rank {} -> pullback rank {} ({})",
                i,
                r.brr1,
                r.brr2,
                r.product_brr,
                if r.holds { "ok" } else { "VIOLATION" }
            );
        }
        println!(
            "{}/{} pairs satisfy the sharp intersection bound",
            reports.len() - violations.len(),
            reports.len()
        );
    }
    if !violations.is_empty() {
        return Err(Error::Internal(format!(
            "intersection rank bound violated on {} pair(s)",
            violations.len()
        )));
    }
    Ok(())
}

fn cmd_strongly_inert(a: WordsArgs) -> Result<()> {
    let (words, m) = load_words(&a)?;
    let core = pipeline::prepare_core(&words, m)?;
    let rep = pipeline::strongly_inert(&core)?;
    if a.json {
        emit(rep.to_json());
    } else {
        println!(
            "strongly inert: {} (sigma = {}, reduced rank = {}, product = {})",
            if rep.strongly_inert { "yes" } else { "no" },
            rep.sigma,
            rep.brr,
            rep.product
        );
    }
    Ok(())
}

fn cmd_compressed(a: WordsArgs) -> Result<()> {
    let (words, m) = load_words(&a)?;
    let core = pipeline::prepare_core(&words, m)?;
    let rep = pipeline::is_compressed(&core)?;
    if a.json {
        emit(rep.to_json());
    } else if rep.compressed {
        println!(
            "compressed: yes (reduced rank {}, {} quotients checked)",
            rep.brr, rep.checked
        );
    } else {
        let cex = rep.counterexample.as_ref().expect("present when not compressed");
        println!(
            "compressed: no - a quotient has reduced rank {} < {}",
            cex.reduced_rank()?,
            rep.brr
        );
    }
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let (words, m) = load_words(&a.common)?;
    let core = pipeline::prepare_core(&words, m)?;
    let rep = pipeline::oracle_enumerate(&core, a.max_vertices)?;
    let sys = ineq::build_sli(&core)?;
    let solved = lp::solve_sigma_lp(&sys, core.reduced_rank()?)?;
    if rep.max_ratio > solved.sigma {
        return Err(Error::Internal(format!(
            "enumeration found ratio {} above the solved coefficient {}",
            rep.max_ratio, solved.sigma
        )));
    }
    if a.common.json {
        let mut j = rep.to_json();
        j["sigma"] = json!(solved.sigma.to_string());
        j["attains_sigma"] = json!(rep.max_ratio == solved.sigma);
        emit(j);
    } else {
        println!(
            "enumerated {} partner graphs (<= {} vertices): max ratio {}",
            rep.graphs_checked, a.max_vertices, rep.max_ratio
        );
        println!("single-component bound: {}", rep.component_bound);
        println!(
            "solver sigma = {} -> enumeration {}",
            solved.sigma,
            if rep.max_ratio == solved.sigma {
                "attains it"
            } else {
                "stays below it (bound too small to attain)"
            }
        );
    }
    Ok(())
}

fn cmd_export_lp(a: ExportArgs) -> Result<()> {
    let (words, m) = load_words(&a.common)?;
    let core = pipeline::prepare_core(&words, m)?;
    let sys = ineq::build_sli(&core)?;
    std::fs::write(&a.out, io::lp_text(&sys))?;
    println!(
        "wrote {}: {} inequalities over {} variables",
        a.out.display(),
        sys.m_inq(),
        sys.n_inq()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Stallings(a) => cmd_stallings(a),
        Cmd::Sigma(a) => cmd_sigma(a),
        Cmd::Witness(a) => cmd_witness(a),
        Cmd::Pullback(a) => cmd_pullback(a),
        Cmd::Shnc(a) => cmd_shnc(a),
        Cmd::StronglyInert(a) => cmd_strongly_inert(a),
        Cmd::Compressed(a) => cmd_compressed(a),
        Cmd::Oracle(a) => cmd_oracle(a),
        Cmd::ExportLp(a) => cmd_export_lp(a),
    }
}

fn main() {
    // Die quietly on closed pipes (e.g. `wncoef ... | head`) instead of
    // panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            std::process::exit(0);
        }
        Err(e) => {
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::Utc;
use clap::{Args, Parser, Subcommand, ValueEnum};
use taxoforge_core::embedding::{self, EmbeddingConfig};
use taxoforge_core::evaluation::{
    export_projection, random_tree_similarity_baseline, reference_precision, subtree_similarity, Strategy,
};
use taxoforge_core::expansion::{attach_by_embedding, bootstrap_seed, read_seed};
use taxoforge_core::link_pruning::{
    fit_reference_scorer, generate_pairs, prune_and_reattach, read_pairs, suggest_edges, write_pairs, Decision,
    FeatureExtractor, PruneOptions, ScorerTraining, SuggestionId, SuggestionStatus,
};
use taxoforge_core::recommender::{baseline_candidates, taxonomy_candidates, Method};
use taxoforge_core::taxonomy::{NodeId, NodeKind};

use crate::error::CliError;
use crate::workspace::{write_atomic, Workspace};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "taxoforge", version, about = "Build, curate and query a phrase taxonomy")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Workspace directory holding the taxonomy, model and journal.
    #[arg(long, global = true, env = "TAXOFORGE_WORKSPACE", default_value = ".")]
    pub workspace: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Similarity threshold for attaching phrases and anchoring queries.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Score below which an edge counts as invalid.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    #[arg(long, global = true)]
    pub resolution: Option<u32>,
    #[arg(long, global = true)]
    pub method: Option<String>,
    #[arg(long, global = true)]
    pub query: Option<String>,
    #[arg(long, global = true)]
    pub port: Option<u16>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create the taxonomy from a `category<TAB>kw1|kw2` seed file.
    Bootstrap { seed_file: PathBuf },
    /// Train the subword embedding model on a text corpus.
    TrainEmbeddings(TrainEmbeddingsArgs),
    /// Attach new phrases under their nearest node.
    Expand {
        /// One phrase per line.
        phrases: PathBuf,
        #[arg(long, value_enum, default_value_t = Targets::Category)]
        targets: Targets,
    },
    /// Write labelled (child, parent) pairs drawn from the taxonomy.
    GenPairs {
        #[arg(long, default_value_t = 1)]
        negatives: usize,
    },
    /// Fit the edge scorer on the generated pairs.
    TrainScorer {
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 0.5)]
        lr: f64,
    },
    /// Score every edge and reattach children of invalid ones.
    Prune {
        /// Also score edges directly under the root.
        #[arg(long)]
        include_top_level: bool,
        /// Print the report without saving the taxonomy.
        #[arg(long)]
        dry_run: bool,
    },
    /// Queue scored parent suggestions for new phrases.
    Suggest {
        phrases: PathBuf,
        #[arg(long, default_value_t = 1)]
        top_k: usize,
    },
    /// Inspect and decide queued suggestions.
    Review {
        #[command(subcommand)]
        action: ReviewAction,
    },
    /// Print node, edge, parent, leaf and depth counts.
    Stats,
    /// Precision of proposed parents against the reference ontology.
    EvalPrecision {
        /// One of random, embedding_similarity, taxonomy; all when omitted.
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Mean pairwise cosine of subtrees against random trees of equal size.
    EvalSubtree {
        /// Subtree root label; every top-level category when omitted.
        #[arg(long)]
        node: Option<String>,
        #[arg(long, default_value_t = 5)]
        trials: u64,
    },
    /// Project node embeddings onto two principal components.
    ExportProjection {
        /// Depth of the ancestor used as each row's group.
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Candidate listings for a query.
    Recommend,
    /// Run the HTTP service.
    Serve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Targets {
    Category,
    Keyphrase,
    All,
}

impl Targets {
    fn kinds(self) -> &'static [NodeKind] {
        match self {
            Self::Category => &[NodeKind::Category],
            Self::Keyphrase => &[NodeKind::Keyphrase],
            Self::All => &[NodeKind::Category, NodeKind::Keyphrase],
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainEmbeddingsArgs {
    pub corpus: PathBuf,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub buckets: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum ReviewAction {
    List {
        #[arg(long)]
        status: Option<String>,
    },
    Approve {
        id: u64,
        #[arg(long)]
        note: Option<String>,
    },
    Reject {
        id: u64,
        #[arg(long)]
        note: Option<String>,
    },
}

pub struct Context<'a> {
    pub ws: Workspace,
    pub global: GlobalArgs,
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

impl Context<'_> {
    fn seed(&self) -> u64 {
        self.global.seed.unwrap_or(DEFAULT_SEED)
    }

    fn alpha(&self) -> Result<f64, CliError> {
        let a = self.global.alpha.unwrap_or(self.ws.config.alpha);
        if !(0.0..=1.0).contains(&a) {
            return Err(CliError::Usage(format!("--alpha must lie in [0, 1], got {a}")));
        }
        Ok(a)
    }

    fn threshold(&self) -> Result<f64, CliError> {
        let th = self.global.threshold.unwrap_or(self.ws.config.threshold);
        if !(th > 0.0 && th < 1.0) {
            return Err(CliError::Usage(format!("--threshold must lie in (0, 1), got {th}")));
        }
        Ok(th)
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let f = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::Missing(path.to_path_buf()),
        _ => CliError::io(path, e),
    })?;
    BufReader::new(f)
        .lines()
        .filter(|l| !l.as_ref().is_ok_and(|l| l.trim().is_empty()))
        .collect::<std::io::Result<_>>()
        .map_err(|e| CliError::io(path, e))
}

pub fn dispatch(cmd: Command, cx: &mut Context<'_>) -> Result<(), CliError> {
    match cmd {
        Command::Bootstrap { seed_file } => bootstrap(cx, &seed_file),
        Command::TrainEmbeddings(args) => train_embeddings(cx, args),
        Command::Expand { phrases, targets } => expand(cx, &phrases, targets),
        Command::GenPairs { negatives } => gen_pairs(cx, negatives),
        Command::TrainScorer { epochs, lr } => train_scorer(cx, epochs, lr),
        Command::Prune {
            include_top_level,
            dry_run,
        } => prune(cx, include_top_level, dry_run),
        Command::Suggest { phrases, top_k } => suggest(cx, &phrases, top_k),
        Command::Review { action } => review(cx, action),
        Command::Stats => stats(cx),
        Command::EvalPrecision { strategy } => eval_precision(cx, strategy.as_deref()),
        Command::EvalSubtree { node, trials } => eval_subtree(cx, node.as_deref(), trials),
        Command::ExportProjection { depth, out } => projection(cx, depth, out.as_deref()),
        Command::Recommend => recommend(cx),
        Command::Serve => crate::server::serve_blocking(cx),
    }
}

fn bootstrap(cx: &mut Context<'_>, seed_file: &Path) -> Result<(), CliError> {
    let f = File::open(seed_file).map_err(|e| CliError::io(seed_file, e))?;
    let records = read_seed(BufReader::new(f))?;
    let t = bootstrap_seed(&records)?;
    cx.ws.reset(&t)?;
    let s = t.stats();
    writeln!(
        cx.out,
        "bootstrapped {} categories, {} nodes into {}",
        records.len(),
        s.num_nodes,
        cx.ws.taxonomy_path().display()
    )?;
    Ok(())
}

fn train_embeddings(cx: &mut Context<'_>, a: TrainEmbeddingsArgs) -> Result<(), CliError> {
    let d = EmbeddingConfig::default();
    let cfg = EmbeddingConfig {
        dim: a.dim.unwrap_or(d.dim),
        epochs: a.epochs.unwrap_or(d.epochs),
        window: a.window.unwrap_or(d.window),
        negatives: a.negatives.unwrap_or(d.negatives),
        min_count: a.min_count.unwrap_or(d.min_count),
        buckets: a.buckets.unwrap_or(d.buckets),
        seed: cx.seed(),
        ..d
    };
    if !a.corpus.is_file() {
        return Err(CliError::Missing(a.corpus));
    }
    let model = embedding::train(&a.corpus, &cfg)?;
    write_atomic(&cx.ws.model_path(), |w| Ok(model.save(w)?))?;
    writeln!(
        cx.out,
        "trained {} words, dim {} -> {}",
        model.vocab().len(),
        model.dim(),
        cx.ws.model_path().display()
    )?;
    Ok(())
}

fn expand(cx: &mut Context<'_>, phrases: &Path, targets: Targets) -> Result<(), CliError> {
    let alpha = cx.alpha()?;
    let phrases = read_lines(phrases)?;
    let model = cx.ws.load_model()?;
    let (mut t, queue) = cx.ws.load_session()?.into_parts();
    let report = attach_by_embedding(&mut t, &model, &phrases, alpha, targets.kinds())?;
    cx.ws.commit(&t, &queue)?;
    for a in &report.attached {
        writeln!(cx.out, "attached\t{}\t{}\t{:.6}", a.phrase, a.parent, a.similarity)?;
    }
    for s in &report.skipped {
        writeln!(
            cx.out,
            "skipped\t{}\t{}\t{:.6}",
            s.phrase,
            s.best_label.as_deref().unwrap_or("-"),
            s.best_similarity
        )?;
    }
    writeln!(
        cx.err,
        "{} attached, {} below alpha {alpha}, {} already present",
        report.attached.len(),
        report.skipped.len(),
        report.pre_existing.len()
    )?;
    Ok(())
}

fn gen_pairs(cx: &mut Context<'_>, negatives: usize) -> Result<(), CliError> {
    let t = cx.ws.load_session()?.into_parts().0;
    let set = generate_pairs(&t, negatives, cx.seed())?;
    write_atomic(&cx.ws.pairs_path(), |w| Ok(write_pairs(w, &set.samples)?))?;
    for s in &set.shortfalls {
        writeln!(cx.err, "warning: {} got {} of {} negatives", s.node, s.got, s.wanted)?;
    }
    writeln!(
        cx.out,
        "{} positive, {} negative pairs -> {}",
        set.positives(),
        set.negatives(),
        cx.ws.pairs_path().display()
    )?;
    Ok(())
}

fn train_scorer(cx: &mut Context<'_>, epochs: usize, lr: f64) -> Result<(), CliError> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(CliError::Usage(format!("--lr must be positive, got {lr}")));
    }
    let path = cx.ws.pairs_path();
    let f = File::open(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::Missing(path.clone()),
        _ => CliError::io(&path, e),
    })?;
    let samples = read_pairs(BufReader::new(f))?;
    let model = cx.ws.load_model()?;
    let t = cx.ws.load_session()?.into_parts().0;
    let fx = FeatureExtractor::with_taxonomy(&model, &t);
    let cfg = ScorerTraining {
        epochs,
        lr,
        seed: cx.seed(),
    };
    let trained = fit_reference_scorer(&samples, &fx, &t, &cfg)?;
    write_atomic(&cx.ws.scorer_path(), |w| Ok(trained.scorer.save(w)?))?;
    let first = trained.losses.first().copied().unwrap_or(f64::NAN);
    let last = trained.losses.last().copied().unwrap_or(f64::NAN);
    writeln!(
        cx.out,
        "trained on {} pairs, log-loss {first:.6} -> {last:.6}",
        samples.len()
    )?;
    Ok(())
}

fn prune(cx: &mut Context<'_>, include_top_level: bool, dry_run: bool) -> Result<(), CliError> {
    let opts = PruneOptions {
        threshold: cx.threshold()?,
        exempt_top_level: !include_top_level,
    };
    let model = cx.ws.load_model()?;
    let scorer = cx.ws.load_scorer()?;
    let (mut t, queue) = cx.ws.load_session()?.into_parts();
    let fx = FeatureExtractor::with_taxonomy(&model, &t);
    let report = prune_and_reattach(&mut t, &scorer, &fx, &opts)?;
    if !dry_run {
        cx.ws.commit(&t, &queue)?;
    }
    serde_json::to_writer_pretty(&mut *cx.out, &report)?;
    writeln!(cx.out)?;
    Ok(())
}

fn suggest(cx: &mut Context<'_>, phrases: &Path, top_k: usize) -> Result<(), CliError> {
    if top_k == 0 {
        return Err(CliError::Usage("--top-k must be at least 1".into()));
    }
    let phrases = read_lines(phrases)?;
    let model = cx.ws.load_model()?;
    let scorer = cx.ws.load_scorer()?;
    let mut session = cx.ws.load_session()?;
    let outcome = {
        let fx = FeatureExtractor::with_taxonomy(&model, session.taxonomy());
        suggest_edges(session.taxonomy(), &scorer, &fx, &phrases, top_k)
    };
    let ids = session.submit(&outcome.proposals, Utc::now())?;
    for (id, p) in ids.iter().zip(&outcome.proposals) {
        let parent = session.taxonomy().label(p.parent)?;
        writeln!(cx.out, "{id}\t{}\t{parent}\t{:.6}", p.phrase, p.score)?;
    }
    for s in &outcome.skipped {
        writeln!(cx.err, "skipped {:?}: {}", s.phrase, s.note)?;
    }
    Ok(())
}

pub fn parse_status(s: &str) -> Result<SuggestionStatus, CliError> {
    match s {
        "pending" => Ok(SuggestionStatus::Pending),
        "approved" => Ok(SuggestionStatus::Approved),
        "rejected" => Ok(SuggestionStatus::Rejected),
        _ => Err(CliError::Usage(format!("unknown status {s:?}"))),
    }
}

fn review(cx: &mut Context<'_>, action: ReviewAction) -> Result<(), CliError> {
    let (id, decision, note) = match action {
        ReviewAction::List { status } => {
            let status = status.as_deref().map(parse_status).transpose()?;
            let session = cx.ws.load_session()?;
            let t = session.taxonomy();
            for s in session.queue().iter().filter(|s| status.is_none_or(|st| s.status == st)) {
                let parent = t.label(s.proposed_parent).unwrap_or("?");
                writeln!(cx.out, "{}\t{}\t{}\t{parent}\t{:.6}", s.id, s.status, s.child_label, s.score)?;
            }
            return Ok(());
        }
        ReviewAction::Approve { id, note } => (id, Decision::Approve, note),
        ReviewAction::Reject { id, note } => (id, Decision::Reject, note),
    };
    let mut session = cx.ws.load_session()?;
    let node = session.decide(SuggestionId(id), decision, Utc::now(), note)?;
    match node {
        Some(n) => {
            let t = session.taxonomy();
            let parent = t.parent(n)?.expect("approved node has a parent");
            writeln!(cx.out, "approved {id}: {} ({n}) under {}", t.label(n)?, t.label(parent)?)?;
        }
        None => writeln!(cx.out, "rejected {id}")?,
    }
    Ok(())
}

pub const STATS_HEADER: &str = "# Nodes\t# Edges\t# Parents\t# Leaves\tMax Depth";

fn stats(cx: &mut Context<'_>) -> Result<(), CliError> {
    let t = cx.ws.load_session()?.into_parts().0;
    let s = t.stats();
    writeln!(cx.out, "{STATS_HEADER}")?;
    writeln!(
        cx.out,
        "{}\t{}\t{}\t{}\t{}",
        s.num_nodes, s.num_edges, s.num_parents, s.num_leaves, s.max_depth
    )?;
    Ok(())
}

fn eval_precision(cx: &mut Context<'_>, strategy: Option<&str>) -> Result<(), CliError> {
    let strategies = match strategy {
        Some(s) => vec![s.parse::<Strategy>().map_err(|e| CliError::Usage(e.to_string()))?],
        None => Strategy::ALL.to_vec(),
    };
    let t = cx.ws.load_session()?.into_parts().0;
    let reference = cx.ws.load_reference()?;
    let needs_model = strategies.contains(&Strategy::EmbeddingSimilarity);
    let model = if needs_model {
        Some(cx.ws.load_model()?)
    } else {
        None
    };
    writeln!(cx.out, "strategy\tcorrect\ttotal\tprecision")?;
    for s in strategies {
        let r = reference_precision(&t, &reference, model.as_ref(), s, cx.seed())?;
        writeln!(cx.out, "{}\t{}\t{}\t{:.4}", r.strategy, r.numerator, r.denominator, r.precision)?;
    }
    Ok(())
}

fn eval_subtree(cx: &mut Context<'_>, node: Option<&str>, trials: u64) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let t = cx.ws.load_session()?.into_parts().0;
    let model = cx.ws.load_model()?;
    let roots: Vec<NodeId> = match node {
        Some(label) => {
            let label = taxoforge_core::text::normalize_phrase(label);
            vec![t.find(&label).ok_or(CliError::UnknownLabel(label))?]
        }
        None => t.children(NodeId::ROOT)?.to_vec(),
    };
    let labels: Vec<&str> = t.nodes().skip(1).map(|n| n.label.as_str()).collect();
    writeln!(cx.out, "subtree\tsize\tscore\trandom")?;
    let seed = cx.seed();
    for r in roots {
        let score = match subtree_similarity(&t, &model, r) {
            Ok(s) => s,
            Err(e) => {
                writeln!(cx.err, "skipping {}: {e}", t.label(r)?)?;
                continue;
            }
        };
        let mut total = 0.0;
        for k in 0..trials {
            total += random_tree_similarity_baseline(&labels, &model, score.size, seed.wrapping_add(k))?;
        }
        writeln!(
            cx.out,
            "{}\t{}\t{:.6}\t{:.6}",
            t.label(r)?,
            score.size,
            score.score,
            total / trials as f64
        )?;
    }
    Ok(())
}

fn projection(cx: &mut Context<'_>, depth: usize, out: Option<&Path>) -> Result<(), CliError> {
    let t = cx.ws.load_session()?.into_parts().0;
    let model = cx.ws.load_model()?;
    let p = export_projection(&t, &model, depth, cx.seed())?;
    if p.rank_deficient {
        writeln!(cx.err, "warning: fewer than two nonzero components")?;
    }
    match out {
        Some(path) => {
            write_atomic(path, |w| Ok(p.write(w)?))?;
            writeln!(cx.err, "{} rows -> {}", p.rows.len(), path.display())?;
        }
        None => p.write(&mut *cx.out)?,
    }
    Ok(())
}

fn recommend(cx: &mut Context<'_>) -> Result<(), CliError> {
    let query = cx
        .global
        .query
        .clone()
        .ok_or_else(|| CliError::Usage("recommend needs --query".into()))?;
    let method: Method = match cx.global.method.as_deref() {
        Some(m) => m.parse().map_err(|e: taxoforge_core::recommender::RecommendError| CliError::Usage(e.to_string()))?,
        None => Method::Taxonomy,
    };
    let resolution = cx.global.resolution.unwrap_or(1);
    if resolution == 0 {
        return Err(CliError::Usage("--resolution must be at least 1".into()));
    }
    let alpha = cx.alpha()?;
    let store = cx.ws.load_listings()?;
    let result = match method {
        Method::Baseline => baseline_candidates(&store, &query)?,
        Method::Taxonomy => {
            let t = cx.ws.load_session()?.into_parts().0;
            let model = cx.ws.load_model()?;
            taxonomy_candidates(&store, &t, &model, &query, resolution, alpha)?
        }
    };
    serde_json::to_writer(&mut *cx.out, &result.summary())?;
    writeln!(cx.out)?;
    Ok(())
}

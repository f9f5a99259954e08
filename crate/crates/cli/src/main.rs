//! `rstkit`: command-line front end for rst-core.
//!
//! Exit codes: 0 success, 1 invalid data or failed validation, 2 usage error.
//! Every output starts with a `#` header naming the tool version, the format,
//! the seed (or `-`) and a SHA-256 digest of every input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use rst_core::attention_kernel::{format_matrix, gradient_check, masked_attention, parse_matrix, AttentionInputs};
use rst_core::edu_tracker::{assign_tokens, tokenize, BoundaryRules, TokenAssignment};
use rst_core::eval_metrics::{
    bleu_n, distinct_n, length_stats, ms_jaccard, relation_recall, tokenize_lines, BandMode, BandedRecall,
};
use rst_core::keyphrase_textrank::{extract_keyphrases, fallback_tag, parse_tagged, PageRankParams, TextRankParams};
use rst_core::rst_attention::{context_mask, full_mask, AttentionMaskSet, ContextLayout};
use rst_core::tree_edit::{ted, Variant};
use rst_core::tree_encoding::encode_tree;
use rst_core::tree_sampler::{sample_tree, ConditionalTable, SamplerConstraints, DEFAULT_ALPHA};
use rst_core::{parse_tree, serialize_tree, Relation, RstTree};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "rstkit",
    version,
    about = "RST tree tools: validation, encoding, sampling, masks, edit distance, keyphrases and metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check tree files; prints OK or one violation per line.
    Validate {
        #[arg(required = true)]
        trees: Vec<PathBuf>,
    },
    /// Relation/nuclearity ids and path vectors, one row per parent node.
    Encode {
        tree: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Sample trees from a table fitted on a corpus (or loaded from a file).
    Sample(SampleArgs),
    /// Split a plain-text file into tokens and assign each to a leaf.
    Assign {
        tree: PathBuf,
        text: PathBuf,
        /// Word-per-line list of discourse markers replacing the defaults.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Attention mask for a tree and a token assignment.
    Mask {
        tree: PathBuf,
        assignment: PathBuf,
        /// Only the context columns, without the causal text block.
        #[arg(long)]
        context_only: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Masked scaled dot-product attention on whitespace-separated matrices.
    Attend {
        #[arg(long)]
        q: PathBuf,
        #[arg(long)]
        k: PathBuf,
        #[arg(long)]
        v: PathBuf,
        /// 0/1 mask with one row per query; all ones when omitted.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Also compare analytic gradients with central differences.
        #[arg(long)]
        gradcheck: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Tree edit distance from a reference to a hypothesis tree.
    Ted {
        reference: PathBuf,
        hypothesis: PathBuf,
        #[arg(long, value_enum, default_value_t = VariantArg::Complete)]
        variant: VariantArg,
        /// Print the edit script after the cost line.
        #[arg(long)]
        script: bool,
    },
    /// Rank keyphrases with TextRank.
    Textrank(TextRankArgs),
    /// Corpus metrics for a hypothesis file against a reference file.
    Metrics(MetricsArgs),
    /// Per-relation position recall of hypothesis trees against references.
    Recall {
        reference: PathBuf,
        hypothesis: PathBuf,
        /// Report by EDU-count band of the reference tree.
        #[arg(long)]
        bands: bool,
        /// With --bands, place each tree in the smallest band at or above its
        /// EDU count instead of requiring an exact match.
        #[arg(long, requires = "bands")]
        band_ranges: bool,
    },
    /// Mean word and sentence counts grouped by EDU count.
    Lengths {
        /// One text per line.
        texts: PathBuf,
        /// One EDU count per line, aligned with the texts.
        edu_counts: PathBuf,
    },
}

#[derive(Debug, Args)]
struct OutArg {
    /// Write to this file instead of standard output.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Directory of `.tree` files to fit the table on.
    #[arg(long, required_unless_present = "table", conflicts_with = "table")]
    corpus: Option<PathBuf>,
    /// Previously saved table.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Exact number of EDUs (leaves) per tree.
    #[arg(long)]
    edus: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiply the probability of a relation, e.g. `Contrast=3`.
    #[arg(long, value_parser = parse_boost)]
    boost: Vec<(Relation, f64)>,
    #[arg(long, default_value_t = rst_core::rst_tree::MAX_TREE_DEPTH)]
    max_depth: usize,
    /// Additive smoothing used when fitting.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Number of trees; more than one requires --out-dir.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Write the fitted table here.
    #[arg(long)]
    save_table: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct TextRankArgs {
    /// Tagged-token file, or plain text with --plain.
    input: PathBuf,
    #[arg(long, default_value_t = rst_core::keyphrase_textrank::DEFAULT_WINDOW)]
    window: usize,
    #[arg(long, default_value_t = rst_core::keyphrase_textrank::DEFAULT_TOP)]
    top: usize,
    #[arg(long, default_value_t = rst_core::keyphrase_textrank::DEFAULT_DAMPING)]
    damping: f64,
    #[arg(long, default_value_t = rst_core::keyphrase_textrank::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = rst_core::keyphrase_textrank::DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Input is untagged text; use the built-in heuristic tagger.
    #[arg(long)]
    plain: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    /// Hypothesis corpus, one tokenised text per line.
    #[arg(long)]
    hyp: PathBuf,
    /// Reference corpus, aligned line by line with the hypotheses.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Report Distinct-1 through Distinct-N of the hypotheses.
    #[arg(long)]
    distinct: Option<usize>,
    /// MS-Jaccard up to order N against the references.
    #[arg(long)]
    msj: Option<usize>,
    /// BLEU-N precision against the references.
    #[arg(long)]
    bleu: Option<usize>,
    /// Precomputed GRUEN scores (TSV with a header row) to merge as column means.
    #[arg(long)]
    gruen: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Simple,
    Complex,
    Complete,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Simple => Variant::Simple,
            VariantArg::Complex => Variant::Complex,
            VariantArg::Complete => Variant::Complete,
        }
    }
}

fn parse_boost(s: &str) -> Result<(Relation, f64), String> {
    let (rel, factor) = s.split_once('=').ok_or("expected Relation=factor")?;
    let rel: Relation = rel.parse()?;
    let factor: f64 = factor.parse().map_err(|_| format!("bad factor `{factor}`"))?;
    Ok((rel, factor))
}

/// Named input with its digest, for output headers.
struct Input {
    name: String,
    digest: String,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read(path: &Path, inputs: &mut Vec<Input>) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    inputs.push(Input {
        name: path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned()),
        digest: digest(&bytes),
    });
    String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
}

fn header(format: &str, seed: Option<u64>, inputs: &[Input]) -> String {
    let seed = seed.map_or_else(|| "-".to_string(), |s| s.to_string());
    let inputs: Vec<String> = inputs.iter().map(|i| format!("{}:{}", i.name, i.digest)).collect();
    format!("# rstkit {VERSION} format={format} seed={seed} inputs={}\n", inputs.join(","))
}

fn emit(out: &OutArg, text: &str) -> Result<()> {
    match &out.out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_tree(path: &Path, inputs: &mut Vec<Input>) -> Result<RstTree> {
    let text = read(path, inputs)?;
    let tree = parse_tree(&text).with_context(|| format!("{}", path.display()))?;
    tree.ensure_valid().with_context(|| format!("{} is not a valid tree", path.display()))?;
    Ok(tree)
}

fn validate(paths: &[PathBuf]) -> Result<bool> {
    let mut inputs = Vec::new();
    let mut report = String::new();
    let mut all_ok = true;
    for path in paths {
        let text = read(path, &mut inputs)?;
        let name = path.display();
        match parse_tree(&text) {
            Err(e) => {
                all_ok = false;
                report.push_str(&format!("{name}\t{e}\n"));
            }
            Ok(tree) => {
                let v = tree.validate();
                if v.is_ok() {
                    if paths.len() > 1 {
                        report.push_str(&format!("{name}\tOK\n"));
                    } else {
                        report.push_str("OK\n");
                    }
                } else {
                    all_ok = false;
                    for violation in &v.violations {
                        report.push_str(&format!("{name}\t{violation}\n"));
                    }
                }
            }
        }
    }
    print!("{}{report}", header("validation/1", None, &inputs));
    Ok(all_ok)
}

fn load_corpus(dir: &Path, inputs: &mut Vec<Input>) -> Result<Vec<RstTree>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "tree"));
    paths.sort();
    if paths.is_empty() {
        bail!("{} contains no .tree files", dir.display());
    }
    let mut listing = String::new();
    let mut trees = Vec::with_capacity(paths.len());
    let mut scratch = Vec::new();
    for p in &paths {
        let text = read(p, &mut scratch)?;
        let last = scratch.pop().expect("read records its input");
        listing.push_str(&format!("{}\t{}\n", last.name, last.digest));
        trees.push(parse_tree(&text).with_context(|| format!("{}", p.display()))?);
    }
    inputs.push(Input {
        name: dir.file_name().map_or_else(|| "corpus".to_string(), |n| n.to_string_lossy().into_owned()),
        digest: digest(listing.as_bytes()),
    });
    Ok(trees)
}

fn sample(args: &SampleArgs) -> Result<()> {
    let mut inputs = Vec::new();
    let table = match (&args.corpus, &args.table) {
        (Some(dir), _) => {
            let corpus = load_corpus(dir, &mut inputs)?;
            ConditionalTable::fit(&corpus, args.alpha)?
        }
        (None, Some(path)) => ConditionalTable::from_tsv(&read(path, &mut inputs)?)?,
        (None, None) => bail!("either --corpus or --table is required"),
    };
    if let Some(path) = &args.save_table {
        let text = format!("{}{}", header("rst-cond-table/1", None, &inputs), table.to_tsv());
        fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let mut constraints = SamplerConstraints::default().with_seed(args.seed);
    constraints.target_edu_count = args.edus;
    constraints.max_depth = args.max_depth;
    for &(rel, factor) in &args.boost {
        constraints = constraints.with_boost(rel, factor);
    }
    constraints.check()?;
    if args.count == 0 {
        bail!("--count must be at least 1");
    }
    if args.count > 1 && args.out_dir.is_none() {
        bail!("--count above 1 needs --out-dir");
    }
    let head = header("rst-tree/1", Some(args.seed), &inputs);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.workers.max(1)).build()?;
    let trees: Vec<String> = pool.install(|| {
        (0..args.count)
            .into_par_iter()
            .map(|i| {
                let tree = sample_tree(&table, &constraints, &mut constraints.rng_for(i as u64))?;
                Ok(format!("{head}# sample {i}\n{}", serialize_tree(&tree)))
            })
            .collect::<Result<_>>()
    })?;
    match &args.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            for (i, text) in trees.iter().enumerate() {
                let path = dir.join(format!("sample-{i:04}.tree"));
                fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
            }
            Ok(())
        }
        None => emit(&args.out, &trees[0]),
    }
}

fn assign(tree: &Path, text: &Path, lexicon: Option<&Path>, out: &OutArg) -> Result<()> {
    let mut inputs = Vec::new();
    let tree = load_tree(tree, &mut inputs)?;
    let text = read(text, &mut inputs)?;
    let rules = match lexicon {
        Some(p) => BoundaryRules::from_lexicon(&read(p, &mut inputs)?),
        None => BoundaryRules::default(),
    };
    let tokens = tokenize(&text);
    let assignment = assign_tokens(&tree, &tokens, &rules)?;
    emit(out, &format!("{}{}", header("assignment/1", None, &inputs), assignment.to_tsv()))
}

fn mask(tree: &Path, assignment: &Path, context_only: bool, out: &OutArg) -> Result<()> {
    let mut inputs = Vec::new();
    let tree = load_tree(tree, &mut inputs)?;
    let assignment = TokenAssignment::from_tsv(&read(assignment, &mut inputs)?)?;
    let layout = ContextLayout::standard(&tree);
    let m =
        if context_only { context_mask(&tree, &layout, &assignment)? } else { full_mask(&tree, &layout, &assignment)? };
    emit(out, &format!("{}{}", header("mask/1", None, &inputs), m.to_text()))
}

fn attend(q: &Path, k: &Path, v: &Path, mask: Option<&Path>, gradcheck: bool, out: &OutArg) -> Result<()> {
    let mut inputs = Vec::new();
    let q = parse_matrix(&read(q, &mut inputs)?)?;
    let k = parse_matrix(&read(k, &mut inputs)?)?;
    let v = parse_matrix(&read(v, &mut inputs)?)?;
    let mask = match mask {
        Some(p) => AttentionInputs::mask_from_set(&AttentionMaskSet::from_text(&read(p, &mut inputs)?)?),
        None => ndarray_ones(q.nrows(), k.nrows()),
    };
    let inp = AttentionInputs::new(q, k, v, mask)?;
    let fwd = masked_attention(&inp)?;
    let mut text = header("attention/1", None, &inputs);
    text.push_str("# output\n");
    text.push_str(&format_matrix(&fwd.output));
    text.push_str("# weights\n");
    text.push_str(&format_matrix(&fwd.weights));
    if gradcheck {
        let report = gradient_check(&inp)?;
        text.push_str(&format!("# max relative gradient error\n{:e}\n", report.max_rel_error));
    }
    emit(out, &text)
}

fn ndarray_ones(rows: usize, cols: usize) -> ndarray::Array2<bool> {
    ndarray::Array2::from_elem((rows, cols), true)
}

fn edit_distance(reference: &Path, hypothesis: &Path, variant: Variant, script: bool) -> Result<()> {
    let mut inputs = Vec::new();
    let r = load_tree(reference, &mut inputs)?;
    let h = load_tree(hypothesis, &mut inputs)?;
    let report = ted(&r, &h, variant)?;
    let mut text = header(&format!("ted/1 variant={variant}"), None, &inputs);
    text.push_str(&format!("{}\t{}\n", report.raw_cost, report.normalized));
    if script {
        for op in &report.script {
            text.push_str(&format!("{op}\t{}\n", op.cost()));
        }
    }
    print!("{text}");
    Ok(())
}

fn textrank(args: &TextRankArgs) -> Result<()> {
    let mut inputs = Vec::new();
    let raw = read(&args.input, &mut inputs)?;
    let doc = if args.plain { fallback_tag(&raw) } else { parse_tagged(&raw)? };
    let params = TextRankParams {
        window: args.window,
        pagerank: PageRankParams { damping: args.damping, tol: args.tol, max_iter: args.max_iter },
        top: args.top,
    };
    let ranked = extract_keyphrases(&doc.tokens, &doc.candidate_spans(), &params)?;
    let mut text = header("keyphrases/1", None, &inputs);
    text.push_str("rank\tscore\tstart\tend\tphrase\n");
    for (i, c) in ranked.iter().enumerate() {
        text.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", i + 1, c.score, c.span.start, c.span.end, c.phrase));
    }
    emit(&args.out, &text)
}

fn gruen_means(text: &str) -> Result<Vec<(String, f64)>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let columns: Vec<String> =
        lines.next().context("GRUEN file has no header row")?.split('\t').map(String::from).collect();
    let mut sums = vec![0.0; columns.len()];
    let mut rows = 0usize;
    for (i, line) in lines.enumerate() {
        let values: Vec<&str> = line.split('\t').collect();
        if values.len() != columns.len() {
            bail!("GRUEN row {} has {} fields, expected {}", i + 1, values.len(), columns.len());
        }
        for (s, v) in sums.iter_mut().zip(values) {
            *s += v.trim().parse::<f64>().with_context(|| format!("GRUEN row {}: bad number `{v}`", i + 1))?;
        }
        rows += 1;
    }
    if rows == 0 {
        bail!("GRUEN file has no data rows");
    }
    Ok(columns.into_iter().zip(sums).map(|(c, s)| (c, s / rows as f64)).collect())
}

#[derive(Debug, Clone, Copy)]
enum MetricJob {
    Distinct(usize),
    MsJaccard(usize),
    Bleu(usize),
}

fn metrics(args: &MetricsArgs) -> Result<()> {
    let mut inputs = Vec::new();
    let hyp = tokenize_lines(&read(&args.hyp, &mut inputs)?);
    let reference = match &args.reference {
        Some(p) => Some(tokenize_lines(&read(p, &mut inputs)?)),
        None => None,
    };
    let mut jobs = Vec::new();
    if let Some(n) = args.distinct {
        jobs.extend((1..=n).map(MetricJob::Distinct));
    }
    if let Some(n) = args.msj {
        jobs.push(MetricJob::MsJaccard(n));
    }
    if let Some(n) = args.bleu {
        jobs.push(MetricJob::Bleu(n));
    }
    if jobs.iter().any(|j| !matches!(j, MetricJob::Distinct(_))) && reference.is_none() {
        bail!("--msj and --bleu need --ref");
    }
    let gruen = match &args.gruen {
        Some(p) => gruen_means(&read(p, &mut inputs)?)?,
        None => Vec::new(),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.workers.max(1)).build()?;
    let values: Vec<(String, f64)> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let r = reference.as_deref().unwrap_or(&[]);
                Ok(match *job {
                    MetricJob::Distinct(n) => (format!("distinct-{n}"), distinct_n(&hyp, n)?),
                    MetricJob::MsJaccard(n) => (format!("ms-jaccard-{n}"), ms_jaccard(&hyp, r, n)?),
                    MetricJob::Bleu(n) => (format!("bleu-{n}"), bleu_n(&hyp, r, n)?),
                })
            })
            .collect::<Result<_>>()
    })?;
    let mut text = header("metrics/1", None, &inputs);
    text.push_str("metric\tvalue\n");
    for (name, v) in values {
        text.push_str(&format!("{name}\t{v}\n"));
    }
    for (name, v) in gruen {
        text.push_str(&format!("gruen-{name}\t{v}\n"));
    }
    print!("{text}");
    Ok(())
}

fn recall(reference: &Path, hypothesis: &Path, bands: Option<BandMode>) -> Result<()> {
    let mut inputs = Vec::new();
    let r = load_tree(reference, &mut inputs)?;
    let h = load_tree(hypothesis, &mut inputs)?;
    let body = if let Some(mode) = bands {
        let mut b = BandedRecall::new(mode);
        b.add(&r, &h)?;
        b.to_tsv()
    } else {
        relation_recall(&r, &h)?.to_tsv()
    };
    print!("{}{body}", header("recall/1", None, &inputs));
    Ok(())
}

fn lengths(texts: &Path, counts: &Path) -> Result<()> {
    let mut inputs = Vec::new();
    let texts_raw = read(texts, &mut inputs)?;
    let counts_raw = read(counts, &mut inputs)?;
    let texts: Vec<&str> = texts_raw.lines().collect();
    let counts: Vec<usize> = counts_raw
        .lines()
        .enumerate()
        .map(|(i, l)| l.trim().parse().with_context(|| format!("EDU count line {}: bad number `{l}`", i + 1)))
        .collect::<Result<_>>()?;
    let stats = length_stats(&texts, &counts)?;
    let mut text = header("lengths/1", None, &inputs);
    text.push_str("edus\ttexts\tmean_words\tmean_sentences\n");
    for (edus, b) in stats {
        text.push_str(&format!("{edus}\t{}\t{}\t{}\n", b.texts, b.mean_words, b.mean_sentences));
    }
    print!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Validate { trees } => return validate(&trees),
        Command::Encode { tree, out } => {
            let mut inputs = Vec::new();
            let t = load_tree(&tree, &mut inputs)?;
            let enc = encode_tree(&t)?;
            emit(&out, &format!("{}{}", header("rst-encoding/1", None, &inputs), enc.to_tsv()))?;
        }
        Command::Sample(args) => sample(&args)?,
        Command::Assign { tree, text, lexicon, out } => assign(&tree, &text, lexicon.as_deref(), &out)?,
        Command::Mask { tree, assignment, context_only, out } => mask(&tree, &assignment, context_only, &out)?,
        Command::Attend { q, k, v, mask, gradcheck, out } => attend(&q, &k, &v, mask.as_deref(), gradcheck, &out)?,
        Command::Ted { reference, hypothesis, variant, script } => {
            edit_distance(&reference, &hypothesis, variant.into(), script)?
        }
        Command::Textrank(args) => textrank(&args)?,
        Command::Metrics(args) => metrics(&args)?,
        Command::Recall { reference, hypothesis, bands, band_ranges } => {
            let mode = bands.then_some(if band_ranges { BandMode::Range } else { BandMode::Exact });
            recall(&reference, &hypothesis, mode)?
        }
        Command::Lengths { texts, edu_counts } => lengths(&texts, &edu_counts)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

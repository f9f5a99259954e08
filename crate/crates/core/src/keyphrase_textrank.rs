//! TextRank keyphrase extraction over a POS-filtered lemma graph.
//!
//! Words tagged ADJ, NOUN, PROPN or VERB become graph nodes keyed by lemma.
//! Two lemmas are joined by an edge of weight 1 when their tokens lie fewer
//! than `k` positions apart in the sequence of qualifying tokens. Scores come
//! from the PageRank recurrence
//!
//! ```text
//! S(i) = (1 - d) + d * sum_{j in N(i)} w_ji * S(j) / sum_k w_jk
//! ```
//!
//! and a phrase of `L` words scores `sum S / (L + 1)`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use thiserror::Error;

use crate::edu_tracker::tokenize;

pub const DEFAULT_WINDOW: usize = 4;
pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOP: usize = 10;

#[derive(Debug, Error)]
pub enum TextRankError {
    #[error("window must be at least 1")]
    InvalidWindow,
    #[error("damping must lie in (0, 1), got {0}")]
    InvalidDamping(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("no convergence after {iterations} iterations (last max change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64, scores: BTreeMap<String, f64> },
    #[error("candidate span {start}..{end} lies outside the {len} tokens")]
    SpanOutOfRange { start: usize, end: usize, len: usize },
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
}

/// Universal Dependencies part-of-speech tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PosTag {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

impl PosTag {
    pub const ALL: [PosTag; 17] = [
        PosTag::Adj,
        PosTag::Adp,
        PosTag::Adv,
        PosTag::Aux,
        PosTag::Cconj,
        PosTag::Det,
        PosTag::Intj,
        PosTag::Noun,
        PosTag::Num,
        PosTag::Part,
        PosTag::Pron,
        PosTag::Propn,
        PosTag::Punct,
        PosTag::Sconj,
        PosTag::Sym,
        PosTag::Verb,
        PosTag::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Adj => "ADJ",
            PosTag::Adp => "ADP",
            PosTag::Adv => "ADV",
            PosTag::Aux => "AUX",
            PosTag::Cconj => "CCONJ",
            PosTag::Det => "DET",
            PosTag::Intj => "INTJ",
            PosTag::Noun => "NOUN",
            PosTag::Num => "NUM",
            PosTag::Part => "PART",
            PosTag::Pron => "PRON",
            PosTag::Propn => "PROPN",
            PosTag::Punct => "PUNCT",
            PosTag::Sconj => "SCONJ",
            PosTag::Sym => "SYM",
            PosTag::Verb => "VERB",
            PosTag::X => "X",
        }
    }

    /// Tags whose words enter the graph.
    pub fn qualifies(self) -> bool {
        matches!(self, PosTag::Adj | PosTag::Noun | PosTag::Propn | PosTag::Verb)
    }

    /// Tags allowed inside fallback candidate phrases.
    pub fn in_chunk(self) -> bool {
        matches!(self, PosTag::Adj | PosTag::Noun | PosTag::Propn)
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PosTag::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| format!("unknown POS tag `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub surface: String,
    pub lemma: String,
    pub pos: PosTag,
    /// Word offset within the document.
    pub offset: usize,
}

impl TaggedToken {
    pub fn new(surface: impl Into<String>, lemma: impl Into<String>, pos: PosTag, offset: usize) -> Self {
        TaggedToken { surface: surface.into(), lemma: lemma.into(), pos, offset }
    }
}

/// Undirected co-occurrence graph with unit edge weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordGraph {
    lemmas: Vec<String>,
    ids: BTreeMap<String, usize>,
    neighbors: Vec<BTreeSet<usize>>,
    window: usize,
}

impl WordGraph {
    /// Builds a graph from explicit lemmas and edges. Self loops are dropped.
    pub fn from_edges<S: AsRef<str>>(lemmas: &[S], edges: &[(usize, usize)]) -> Self {
        let mut graph = WordGraph::with_nodes(lemmas.iter().map(|s| s.as_ref().to_string()), 1);
        // ids are assigned in sorted order; translate the caller's indices
        let remap: Vec<usize> = lemmas.iter().map(|s| graph.ids[s.as_ref()]).collect();
        for &(a, b) in edges {
            graph.connect(remap[a], remap[b]);
        }
        graph
    }

    fn with_nodes(lemmas: impl Iterator<Item = String>, window: usize) -> Self {
        let set: BTreeSet<String> = lemmas.collect();
        let lemmas: Vec<String> = set.into_iter().collect();
        let ids = lemmas.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        let neighbors = vec![BTreeSet::new(); lemmas.len()];
        WordGraph { lemmas, ids, neighbors, window }
    }

    fn connect(&mut self, a: usize, b: usize) {
        if a != b {
            self.neighbors[a].insert(b);
            self.neighbors[b].insert(a);
        }
    }

    pub fn len(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn lemmas(&self) -> &[String] {
        &self.lemmas
    }

    pub fn id(&self, lemma: &str) -> Option<usize> {
        self.ids.get(lemma).copied()
    }

    pub fn neighbors(&self, id: usize) -> &BTreeSet<usize> {
        &self.neighbors[id]
    }

    pub fn degree(&self, id: usize) -> usize {
        self.neighbors[id].len()
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        if self.neighbors[a].contains(&b) {
            1.0
        } else {
            0.0
        }
    }

    /// Edges as `(a, b)` with `a < b`, in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }
}

pub fn build_graph(tokens: &[TaggedToken], window: usize) -> Result<WordGraph, TextRankError> {
    if window == 0 {
        return Err(TextRankError::InvalidWindow);
    }
    let filtered: Vec<&str> = tokens.iter().filter(|t| t.pos.qualifies()).map(|t| t.lemma.as_str()).collect();
    let mut graph = WordGraph::with_nodes(filtered.iter().map(|s| s.to_string()), window);
    let ids: Vec<usize> = filtered.iter().map(|l| graph.ids[*l]).collect();
    for i in 0..ids.len() {
        for j in i + 1..ids.len().min(i + window) {
            graph.connect(ids[i], ids[j]);
        }
    }
    Ok(graph)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams { damping: DEFAULT_DAMPING, tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRankResult {
    /// Scores indexed by node id.
    pub scores: Vec<f64>,
    pub iterations: usize,
    /// Max per-node change of each iteration.
    pub changes: Vec<f64>,
}

impl PageRankResult {
    pub fn by_lemma(&self, graph: &WordGraph) -> BTreeMap<String, f64> {
        graph.lemmas.iter().cloned().zip(self.scores.iter().copied()).collect()
    }
}

/// One synchronous update of every score.
pub fn pagerank_step(graph: &WordGraph, scores: &[f64], damping: f64) -> Vec<f64> {
    (0..graph.len())
        .map(|i| {
            let inflow: f64 =
                graph.neighbors[i].iter().map(|&j| graph.weight(j, i) * scores[j] / graph.degree(j) as f64).sum();
            (1.0 - damping) + damping * inflow
        })
        .collect()
}

pub fn pagerank(graph: &WordGraph, params: &PageRankParams) -> Result<PageRankResult, TextRankError> {
    if !(params.damping > 0.0 && params.damping < 1.0) {
        return Err(TextRankError::InvalidDamping(params.damping));
    }
    if params.tol.is_nan() || params.tol <= 0.0 {
        return Err(TextRankError::InvalidTolerance(params.tol));
    }
    let mut scores = vec![1.0; graph.len()];
    let mut changes = Vec::new();
    for iteration in 1..=params.max_iter {
        let next = pagerank_step(graph, &scores, params.damping);
        let change = next.iter().zip(&scores).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        scores = next;
        changes.push(change);
        if change < params.tol {
            return Ok(PageRankResult { scores, iterations: iteration, changes });
        }
    }
    if graph.is_empty() {
        return Ok(PageRankResult { scores, iterations: 0, changes });
    }
    Err(TextRankError::NonConvergence {
        iterations: params.max_iter,
        last_change: changes.last().copied().unwrap_or(f64::INFINITY),
        scores: graph.lemmas.iter().cloned().zip(scores).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyphraseCandidate {
    pub span: Range<usize>,
    pub phrase: String,
    pub lemmas: Vec<String>,
    pub score: f64,
}

impl KeyphraseCandidate {
    pub fn len(&self) -> usize {
        self.span.len()
    }

    pub fn is_empty(&self) -> bool {
        self.span.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextRankParams {
    pub window: usize,
    pub pagerank: PageRankParams,
    pub top: usize,
}

impl Default for TextRankParams {
    fn default() -> Self {
        TextRankParams { window: DEFAULT_WINDOW, pagerank: PageRankParams::default(), top: DEFAULT_TOP }
    }
}

fn check_spans(tokens: &[TaggedToken], spans: &[Range<usize>]) -> Result<(), TextRankError> {
    for s in spans {
        if s.start >= s.end || s.end > tokens.len() {
            return Err(TextRankError::SpanOutOfRange { start: s.start, end: s.end, len: tokens.len() });
        }
    }
    Ok(())
}

/// Scores spans from per-lemma word scores. Tokens that are not graph words
/// contribute 0.
pub fn score_candidates(
    tokens: &[TaggedToken],
    spans: &[Range<usize>],
    word_scores: &BTreeMap<String, f64>,
) -> Result<Vec<KeyphraseCandidate>, TextRankError> {
    check_spans(tokens, spans)?;
    Ok(spans
        .iter()
        .map(|span| {
            let words = &tokens[span.clone()];
            let total: f64 = words
                .iter()
                .filter(|t| t.pos.qualifies())
                .map(|t| word_scores.get(&t.lemma).copied().unwrap_or(0.0))
                .fold(0.0, |acc, s| acc + s);
            KeyphraseCandidate {
                span: span.clone(),
                phrase: words.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" "),
                lemmas: words.iter().map(|t| t.lemma.clone()).collect(),
                score: total / (words.len() as f64 + 1.0),
            }
        })
        .collect())
}

/// Sorts by descending score (ties keep input order), drops candidates whose
/// lemma sequence repeats a higher-ranked one, and keeps the first `top`.
pub fn rank_candidates(mut candidates: Vec<KeyphraseCandidate>, top: usize) -> Vec<KeyphraseCandidate> {
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    candidates.retain(|c| seen.insert(c.lemmas.clone()));
    candidates.truncate(top);
    candidates
}

pub fn extract_keyphrases(
    tokens: &[TaggedToken],
    spans: &[Range<usize>],
    params: &TextRankParams,
) -> Result<Vec<KeyphraseCandidate>, TextRankError> {
    check_spans(tokens, spans)?;
    let graph = build_graph(tokens, params.window)?;
    let ranks = pagerank(&graph, &params.pagerank)?;
    let scored = score_candidates(tokens, spans, &ranks.by_lemma(&graph))?;
    Ok(rank_candidates(scored, params.top))
}

/// Tokens plus sentence boundaries and optional candidate spans.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaggedDocument {
    pub tokens: Vec<TaggedToken>,
    /// Token index at which each sentence starts.
    pub sentence_starts: Vec<usize>,
    pub spans: Vec<Range<usize>>,
}

impl TaggedDocument {
    pub fn sentences(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        for (i, &start) in self.sentence_starts.iter().enumerate() {
            let end = self.sentence_starts.get(i + 1).copied().unwrap_or(self.tokens.len());
            if start < end {
                out.push(start..end);
            }
        }
        out
    }

    /// The given spans, or the fallback chunks when none were supplied.
    pub fn candidate_spans(&self) -> Vec<Range<usize>> {
        if self.spans.is_empty() {
            fallback_candidates(self)
        } else {
            self.spans.clone()
        }
    }
}

/// Maximal runs of ADJ / NOUN / PROPN tokens inside each sentence.
pub fn fallback_candidates(doc: &TaggedDocument) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    for sentence in doc.sentences() {
        let mut start = None;
        for i in sentence.clone() {
            match (doc.tokens[i].pos.in_chunk(), start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    out.push(s..i);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push(s..sentence.end);
        }
    }
    out
}

/// Parses `surface<TAB>lemma<TAB>pos` lines. Blank lines separate sentences;
/// `span<TAB>start<TAB>end` records (end exclusive) list candidate spans.
pub fn parse_tagged(text: &str) -> Result<TaggedDocument, TextRankError> {
    let mut doc = TaggedDocument::default();
    let mut new_sentence = true;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let fail = |reason: String| TextRankError::Format { line, reason };
        if raw.trim().is_empty() {
            new_sentence = true;
            continue;
        }
        if raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields[0] == "span" {
            if fields.len() != 3 {
                return Err(fail("span records need `span<TAB>start<TAB>end`".into()));
            }
            let start: usize = fields[1].parse().map_err(|_| fail(format!("bad span start `{}`", fields[1])))?;
            let end: usize = fields[2].parse().map_err(|_| fail(format!("bad span end `{}`", fields[2])))?;
            doc.spans.push(start..end);
            continue;
        }
        if fields.len() != 3 {
            return Err(fail(format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        let pos: PosTag = fields[2].parse().map_err(fail)?;
        if new_sentence {
            doc.sentence_starts.push(doc.tokens.len());
            new_sentence = false;
        }
        let offset = doc.tokens.len();
        doc.tokens.push(TaggedToken::new(fields[0], fields[1], pos, offset));
    }
    check_spans(&doc.tokens, &doc.spans)?;
    Ok(doc)
}

pub fn format_tagged(doc: &TaggedDocument) -> String {
    let mut out = String::new();
    for (i, t) in doc.tokens.iter().enumerate() {
        if i > 0 && doc.sentence_starts.contains(&i) {
            out.push('\n');
        }
        out.push_str(&format!("{}\t{}\t{}\n", t.surface, t.lemma, t.pos));
    }
    for s in &doc.spans {
        out.push_str(&format!("span\t{}\t{}\n", s.start, s.end));
    }
    out
}

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "his", "her", "its", "our", "their", "some",
    "any", "no", "every", "each", "all",
];
const PRONOUNS: &[&str] = &[
    "i",
    "you",
    "he",
    "she",
    "it",
    "we",
    "they",
    "me",
    "him",
    "us",
    "them",
    "myself",
    "yourself",
    "something",
    "anything",
    "nothing",
    "everything",
    "someone",
    "anyone",
    "who",
    "what",
];
const ADPOSITIONS: &[&str] = &[
    "in", "on", "at", "of", "for", "with", "to", "from", "by", "about", "into", "over", "under", "after", "before",
    "between", "through", "during", "without", "around", "than",
];
const CONJUNCTIONS: &[&str] = &["and", "but", "or", "nor", "yet", "so"];
const SUBORDINATORS: &[&str] = &[
    "because", "although", "though", "while", "if", "unless", "since", "when", "whereas", "whether", "until", "where",
];
const AUXILIARIES: &[&str] = &[
    "is", "am", "are", "was", "were", "be", "been", "being", "have", "has", "had", "do", "does", "did", "will",
    "would", "can", "could", "should", "may", "might", "must", "shall",
];
const PARTICLES: &[&str] = &["not", "n't", "'s", "up", "out", "off"];
const ADVERBS: &[&str] =
    &["very", "too", "also", "just", "really", "then", "now", "here", "there", "always", "never", "often"];

/// Lexicon-and-suffix tagger for untagged text. Good enough for demos, not
/// for evaluation.
pub fn fallback_tag(text: &str) -> TaggedDocument {
    let mut doc = TaggedDocument::default();
    let mut sentence_initial = true;
    for surface in tokenize(text) {
        if sentence_initial {
            doc.sentence_starts.push(doc.tokens.len());
        }
        let pos = guess_tag(&surface, sentence_initial);
        let lemma = guess_lemma(&surface, pos);
        let offset = doc.tokens.len();
        sentence_initial = surface.chars().all(|c| matches!(c, '.' | '!' | '?'));
        doc.tokens.push(TaggedToken::new(surface, lemma, pos, offset));
    }
    doc
}

fn guess_tag(surface: &str, sentence_initial: bool) -> PosTag {
    let lower = surface.to_lowercase();
    let word = lower.as_str();
    if surface.chars().all(|c| c.is_ascii_punctuation()) {
        return PosTag::Punct;
    }
    if surface.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') {
        return PosTag::Num;
    }
    let lists: [(&[&str], PosTag); 9] = [
        (DETERMINERS, PosTag::Det),
        (PRONOUNS, PosTag::Pron),
        (ADPOSITIONS, PosTag::Adp),
        (CONJUNCTIONS, PosTag::Cconj),
        (SUBORDINATORS, PosTag::Sconj),
        (AUXILIARIES, PosTag::Aux),
        (PARTICLES, PosTag::Part),
        (ADVERBS, PosTag::Adv),
        (&["oh", "wow", "hey", "yes", "ok"], PosTag::Intj),
    ];
    for (list, tag) in lists {
        if list.contains(&word) {
            return tag;
        }
    }
    if !sentence_initial && surface.chars().next().is_some_and(char::is_uppercase) {
        return PosTag::Propn;
    }
    if word.len() > 4 && word.ends_with("ly") {
        return PosTag::Adv;
    }
    if word.len() > 4 && (word.ends_with("ing") || word.ends_with("ed")) {
        return PosTag::Verb;
    }
    const ADJ_SUFFIXES: [&str; 8] = ["ous", "ful", "ive", "able", "ible", "al", "ic", "less"];
    if word.len() > 4 && ADJ_SUFFIXES.iter().any(|s| word.ends_with(s)) {
        return PosTag::Adj;
    }
    PosTag::Noun
}

fn guess_lemma(surface: &str, pos: PosTag) -> String {
    let lower = surface.to_lowercase();
    if pos != PosTag::Noun || lower.len() <= 3 {
        return lower;
    }
    if let Some(stem) = lower.strip_suffix("ies") {
        return format!("{stem}y");
    }
    if lower.ends_with('s') && !["ss", "us", "is"].iter().any(|s| lower.ends_with(s)) {
        return lower[..lower.len() - 1].to_string();
    }
    lower
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(spec: &[(&str, PosTag)]) -> Vec<TaggedToken> {
        spec.iter().enumerate().map(|(i, &(w, p))| TaggedToken::new(w, w, p, i)).collect()
    }

    #[test]
    fn graph_window() {
        let t = toks(&[("big", PosTag::Adj), ("dog", PosTag::Noun), ("runs", PosTag::Verb)]);
        let g3 = build_graph(&t, 3).unwrap();
        assert_eq!(g3.edges().len(), 3);
        let g2 = build_graph(&t, 2).unwrap();
        let named: Vec<(&str, &str)> =
            g2.edges().into_iter().map(|(a, b)| (g2.lemmas()[a].as_str(), g2.lemmas()[b].as_str())).collect();
        assert_eq!(named, vec![("big", "dog"), ("dog", "runs")]);
        assert!(matches!(build_graph(&t, 0), Err(TextRankError::InvalidWindow)));
    }

    #[test]
    fn function_words_excluded() {
        let t = toks(&[("the", PosTag::Det), ("dog", PosTag::Noun), ("of", PosTag::Adp), ("cat", PosTag::Noun)]);
        let g = build_graph(&t, 2).unwrap();
        assert_eq!(g.lemmas(), &["cat".to_string(), "dog".to_string()]);
        // distance is counted over qualifying tokens, so dog and cat are adjacent
        assert_eq!(g.edges(), vec![(0, 1)]);
    }

    #[test]
    fn repeated_pairs_keep_unit_weight() {
        let t = toks(&[
            ("a", PosTag::Noun),
            ("b", PosTag::Noun),
            ("a", PosTag::Noun),
            ("b", PosTag::Noun),
            ("a", PosTag::Noun),
        ]);
        let g = build_graph(&t, 2).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.weight(0, 1), 1.0);
        assert_eq!(g.weight(0, 0), 0.0);
    }

    #[test]
    fn isolated_and_pair() {
        let g = WordGraph::from_edges(&["solo"], &[]);
        let r = pagerank(&g, &PageRankParams::default()).unwrap();
        // 1 - d in binary floating point; the decimal 0.15 itself is not representable
        assert_eq!(r.scores[0], 1.0 - 0.85);
        assert!((r.scores[0] - 0.15).abs() <= f64::EPSILON * 0.15);

        let g = WordGraph::from_edges(&["x", "y"], &[(0, 1)]);
        let r = pagerank(&g, &PageRankParams::default()).unwrap();
        assert_eq!(r.scores[0], r.scores[1]);
    }

    #[test]
    fn path_graph_matches_oracle() {
        // a = 0.15 + 0.85 b / 2, b = 0.15 + 0.85 (a + c), a = c solves to 57/74 and 108/74
        let g = WordGraph::from_edges(&["a", "b", "c"], &[(0, 1), (1, 2)]);
        let p = PageRankParams { tol: 1e-10, max_iter: 1000, ..PageRankParams::default() };
        let s = pagerank(&g, &p).unwrap().by_lemma(&g);
        assert!((s["a"] - 57.0 / 74.0).abs() < 1e-8);
        assert!((s["c"] - 57.0 / 74.0).abs() < 1e-8);
        assert!((s["b"] - 108.0 / 74.0).abs() < 1e-8);
    }

    #[test]
    fn non_convergence_reports_scores() {
        let g = WordGraph::from_edges(&["a", "b", "c"], &[(0, 1), (1, 2)]);
        let p = PageRankParams { max_iter: 2, tol: 1e-12, ..PageRankParams::default() };
        match pagerank(&g, &p) {
            Err(TextRankError::NonConvergence { iterations, scores, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(scores.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
        let bad = PageRankParams { damping: 1.0, ..PageRankParams::default() };
        assert!(matches!(pagerank(&g, &bad), Err(TextRankError::InvalidDamping(_))));
    }

    #[test]
    #[allow(clippy::single_range_in_vec_init)]
    fn phrase_scoring() {
        let t = toks(&[("solo", PosTag::Noun)]);
        let scores = BTreeMap::from([("solo".to_string(), 0.15)]);
        let c = score_candidates(&t, &[0..1], &scores).unwrap();
        assert_eq!(c[0].score, 0.15 / 2.0);

        let t = toks(&[("the", PosTag::Det), ("dog", PosTag::Noun)]);
        let scores = BTreeMap::from([("dog".to_string(), 0.9)]);
        let c = score_candidates(&t, &[0..2], &scores).unwrap();
        assert_eq!(c[0].score, 0.9 / 3.0);
        assert!(score_candidates(&t, &[1..3], &scores).is_err());
    }

    #[test]
    fn duplicates_dropped() {
        let t = toks(&[("dog", PosTag::Noun), ("cat", PosTag::Noun), ("dog", PosTag::Noun)]);
        let ranked = extract_keyphrases(&t, &[0..1, 1..2, 2..3], &TextRankParams::default()).unwrap();
        let starts: Vec<usize> = ranked.iter().map(|c| c.span.start).collect();
        assert_eq!(ranked.len(), 2);
        assert!(starts.contains(&0) && !starts.contains(&2));
    }

    #[test]
    fn tagged_file_round_trip() {
        let text = "Big\tbig\tADJ\ndogs\tdog\tNOUN\n\nrun\trun\tVERB\n.\t.\tPUNCT\nspan\t0\t2\n";
        let doc = parse_tagged(text).unwrap();
        assert_eq!(doc.tokens.len(), 4);
        assert_eq!(doc.sentence_starts, vec![0, 2]);
        assert_eq!(doc.spans, vec![0..2]);
        assert_eq!(parse_tagged(&format_tagged(&doc)).unwrap(), doc);
        assert!(parse_tagged("a\tb\n").is_err());
        assert!(parse_tagged("a\ta\tNOPE\n").is_err());
        assert!(parse_tagged("a\ta\tNOUN\nspan\t0\t5\n").is_err());
    }

    #[test]
    fn fallback_chunks_respect_sentences() {
        let doc = fallback_tag("The old harbour was quiet. Fishing boats left early.");
        let spans = fallback_candidates(&doc);
        let phrases: Vec<String> = spans
            .iter()
            .map(|s| doc.tokens[s.clone()].iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" "))
            .collect();
        assert!(phrases.contains(&"old harbour".to_string()) || phrases.contains(&"harbour".to_string()));
        for s in &spans {
            let first = doc.sentence_starts.iter().rev().find(|&&st| st <= s.start).unwrap();
            let next = doc.sentence_starts.iter().find(|&&st| st > s.start).copied().unwrap_or(doc.tokens.len());
            assert!(*first <= s.start && s.end <= next);
        }
    }
}

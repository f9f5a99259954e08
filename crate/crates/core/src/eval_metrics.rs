//! Structural and textual evaluation metrics.
//!
//! Corpora are slices of token sequences; [`tokenize_lines`] turns a corpus
//! file (one whitespace-tokenised text per line) into that shape.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::edu_tracker::count_sentences;
use crate::rst_tree::{Relation, RstTree, TreeError};

/// EDU-count bands used to group recall tables.
pub const RECALL_BANDS: [usize; 5] = [4, 8, 12, 16, 20];

#[derive(Debug, Error)]
pub enum MetricError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("n-gram order must be at least 1")]
    InvalidOrder,
    #[error("corpus has no {0}-grams")]
    EmptyCorpus(usize),
    #[error("length mismatch: {left} vs {right} entries")]
    LengthMismatch { left: usize, right: usize },
}

pub type Corpus = [Vec<String>];

pub fn tokenize_lines(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split_whitespace().map(String::from).collect()).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecallCount {
    pub matched: usize,
    pub reference: usize,
}

impl RecallCount {
    pub fn recall(&self) -> f64 {
        self.matched as f64 / self.reference as f64
    }
}

/// Per-relation recall. Relations without reference nodes are absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecallTable {
    pub counts: BTreeMap<Relation, RecallCount>,
}

impl RecallTable {
    pub fn recall(&self, relation: Relation) -> Option<f64> {
        self.counts.get(&relation).map(RecallCount::recall)
    }

    pub fn merge(&mut self, other: &RecallTable) {
        for (&r, c) in &other.counts {
            let e = self.counts.entry(r).or_default();
            e.matched += c.matched;
            e.reference += c.reference;
        }
    }

    /// `relation<TAB>matched<TAB>reference<TAB>recall` rows.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("relation\tmatched\treference\trecall\n");
        for (r, c) in &self.counts {
            out.push_str(&format!("{r}\t{}\t{}\t{}\n", c.matched, c.reference, c.recall()));
        }
        out
    }
}

pub fn relation_recall(reference: &RstTree, hypothesis: &RstTree) -> Result<RecallTable, MetricError> {
    reference.ensure_valid()?;
    hypothesis.ensure_valid()?;
    let mut table = RecallTable::default();
    for (pos, label) in reference.parents() {
        let entry = table.counts.entry(label.relation).or_default();
        entry.reference += 1;
        if hypothesis.label(*pos).is_some_and(|h| h.relation == label.relation) {
            entry.matched += 1;
        }
    }
    Ok(table)
}

/// How EDU counts map onto [`RECALL_BANDS`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BandMode {
    /// Only trees whose EDU count equals a band value are counted.
    #[default]
    Exact,
    /// Each tree falls into the smallest band at or above its EDU count.
    Range,
}

/// Band of a tree with `edus` leaves, or `None` when it falls outside every band.
pub fn recall_band(edus: usize, mode: BandMode) -> Option<usize> {
    match mode {
        BandMode::Exact => RECALL_BANDS.contains(&edus).then_some(edus),
        BandMode::Range => RECALL_BANDS.iter().copied().find(|&b| edus <= b),
    }
}

/// Recall tables accumulated per EDU-count band of the reference tree.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BandedRecall {
    pub mode: BandMode,
    pub bands: BTreeMap<usize, RecallTable>,
}

impl BandedRecall {
    pub fn new(mode: BandMode) -> Self {
        BandedRecall { mode, bands: BTreeMap::new() }
    }

    pub fn add(&mut self, reference: &RstTree, hypothesis: &RstTree) -> Result<Option<usize>, MetricError> {
        let table = relation_recall(reference, hypothesis)?;
        let band = recall_band(reference.leaf_count(), self.mode);
        if let Some(b) = band {
            self.bands.entry(b).or_default().merge(&table);
        }
        Ok(band)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("band\trelation\tmatched\treference\trecall\n");
        for (b, t) in &self.bands {
            for (r, c) in &t.counts {
                out.push_str(&format!("{b}\t{r}\t{}\t{}\t{}\n", c.matched, c.reference, c.recall()));
            }
        }
        out
    }
}

fn ngrams(seq: &[String], n: usize) -> impl Iterator<Item = &[String]> {
    seq.windows(n)
}

/// n-gram counts of a corpus for every order `1..=max_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramProfile {
    orders: Vec<HashMap<Vec<String>, u64>>,
    totals: Vec<u64>,
}

impl NgramProfile {
    pub fn new(corpus: &Corpus, max_n: usize) -> Result<Self, MetricError> {
        if max_n == 0 {
            return Err(MetricError::InvalidOrder);
        }
        let mut orders = vec![HashMap::new(); max_n];
        let mut totals = vec![0; max_n];
        for seq in corpus {
            for n in 1..=max_n {
                for g in ngrams(seq, n) {
                    *orders[n - 1].entry(g.to_vec()).or_insert(0) += 1;
                    totals[n - 1] += 1;
                }
            }
        }
        Ok(NgramProfile { orders, totals })
    }

    pub fn max_n(&self) -> usize {
        self.orders.len()
    }

    pub fn counts(&self, n: usize) -> &HashMap<Vec<String>, u64> {
        &self.orders[n - 1]
    }

    pub fn total(&self, n: usize) -> u64 {
        self.totals[n - 1]
    }

    pub fn distinct(&self, n: usize) -> usize {
        self.orders[n - 1].len()
    }
}

pub fn distinct_n(corpus: &Corpus, n: usize) -> Result<f64, MetricError> {
    let profile = NgramProfile::new(corpus, n)?;
    let total = profile.total(n);
    if total == 0 {
        return Err(MetricError::EmptyCorpus(n));
    }
    Ok(profile.distinct(n) as f64 / total as f64)
}

/// Σ min / Σ max of the normalised order-`n` frequencies.
fn jaccard_order(a: &NgramProfile, b: &NgramProfile, n: usize) -> f64 {
    let (ta, tb) = (a.total(n) as f64, b.total(n) as f64);
    let (ca, cb) = (a.counts(n), b.counts(n));
    let mut keys: Vec<&Vec<String>> = ca.keys().chain(cb.keys().filter(|k| !ca.contains_key(*k))).collect();
    keys.sort();
    let (mut lo, mut hi) = (0.0, 0.0);
    for k in keys {
        let pa = ca.get(k).map_or(0.0, |&c| c as f64 / ta);
        let pb = cb.get(k).map_or(0.0, |&c| c as f64 / tb);
        lo += pa.min(pb);
        hi += pa.max(pb);
    }
    lo / hi
}

/// Geometric mean over `n = 1..=max_n` of the per-order multiset Jaccard.
pub fn ms_jaccard(a: &Corpus, b: &Corpus, max_n: usize) -> Result<f64, MetricError> {
    let pa = NgramProfile::new(a, max_n)?;
    let pb = NgramProfile::new(b, max_n)?;
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        if pa.total(n) == 0 || pb.total(n) == 0 {
            return Err(MetricError::EmptyCorpus(n));
        }
        let j = jaccard_order(&pa, &pb, n);
        if j == 0.0 {
            return Ok(0.0);
        }
        log_sum += j.ln();
    }
    if log_sum == 0.0 {
        return Ok(1.0);
    }
    Ok((log_sum / max_n as f64).exp())
}

fn order_counts(seq: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut m = HashMap::new();
    for g in ngrams(seq, n) {
        *m.entry(g).or_insert(0) += 1;
    }
    m
}

/// Corpus-level clipped n-gram precision of order `n` times the brevity
/// penalty `exp(1 - r/c)` when the hypotheses are shorter than the references.
pub fn bleu_n(hypotheses: &Corpus, references: &Corpus, n: usize) -> Result<f64, MetricError> {
    if n == 0 {
        return Err(MetricError::InvalidOrder);
    }
    if hypotheses.len() != references.len() {
        return Err(MetricError::LengthMismatch { left: hypotheses.len(), right: references.len() });
    }
    let (mut clipped, mut total) = (0u64, 0u64);
    let (mut hyp_len, mut ref_len) = (0usize, 0usize);
    for (h, r) in hypotheses.iter().zip(references) {
        hyp_len += h.len();
        ref_len += r.len();
        let rc = order_counts(r, n);
        for (g, c) in order_counts(h, n) {
            clipped += c.min(rc.get(g).copied().unwrap_or(0));
            total += c;
        }
    }
    if total == 0 {
        return Err(MetricError::EmptyCorpus(n));
    }
    let precision = clipped as f64 / total as f64;
    let bp = if hyp_len < ref_len { (1.0 - ref_len as f64 / hyp_len as f64).exp() } else { 1.0 };
    Ok(precision * bp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthBucket {
    pub texts: usize,
    pub mean_words: f64,
    pub mean_sentences: f64,
}

/// Mean word and sentence counts grouped by EDU count. Counts with no texts
/// do not appear.
pub fn length_stats<S: AsRef<str>>(
    texts: &[S],
    edu_counts: &[usize],
) -> Result<BTreeMap<usize, LengthBucket>, MetricError> {
    if texts.len() != edu_counts.len() {
        return Err(MetricError::LengthMismatch { left: texts.len(), right: edu_counts.len() });
    }
    let mut sums: BTreeMap<usize, (usize, usize, usize)> = BTreeMap::new();
    for (text, &edus) in texts.iter().zip(edu_counts) {
        let text = text.as_ref();
        let e = sums.entry(edus).or_default();
        e.0 += 1;
        e.1 += text.split_whitespace().count();
        e.2 += count_sentences(text);
    }
    Ok(sums
        .into_iter()
        .map(|(k, (n, w, s))| {
            (k, LengthBucket { texts: n, mean_words: w as f64 / n as f64, mean_sentences: s as f64 / n as f64 })
        })
        .collect())
}

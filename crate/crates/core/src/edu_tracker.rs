//! Rule-based EDU boundary detection and the leaf cursor used while generating.
//!
//! Boundary rules, checked on each token:
//!
//! - **R1** sentence-final punctuation (`.`, `!`, `?`) ends an EDU;
//! - **R2** a comma ends an EDU when the current EDU opened with a marker from
//!   the lexicon (`if`, `because`, ...), or when it is followed by a
//!   coordinating conjunction and a clause-initial word;
//! - **R3** `;` and `:` always end an EDU.
//!
//! A fired boundary takes effect from the next token.

use std::collections::BTreeSet;
use std::ops::Range;
use std::sync::LazyLock;

use thiserror::Error;

use crate::rst_tree::{NodePos, RstTree, TreeError};

pub const DEFAULT_MARKERS: [&str; 10] =
    ["if", "because", "although", "while", "since", "when", "after", "before", "unless", "whereas"];

pub const COORDINATORS: [&str; 6] = ["and", "but", "or", "so", "yet", "nor"];

/// Words that open a finite clause after a coordinator.
pub const CLAUSE_STARTERS: [&str; 21] = [
    "i", "you", "he", "she", "it", "we", "they", "there", "this", "that", "these", "those", "the", "a", "an", "my",
    "our", "your", "his", "her", "their",
];

#[derive(Debug, Error)]
pub enum EduError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("cursor has already moved past the last leaf")]
    FinishedCursor,
    #[error("assignment line {line}: {reason}")]
    Format { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryRule {
    /// R1
    SentenceFinal,
    /// R2, marker-opened EDU
    MarkedClause,
    /// R2, comma + coordinator + clause start
    CoordinatedClause,
    /// R3
    ClauseSeparator,
}

fn is_sentence_final(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| matches!(c, '.' | '!' | '?'))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryRules {
    markers: BTreeSet<String>,
}

impl Default for BoundaryRules {
    fn default() -> Self {
        BoundaryRules::new(DEFAULT_MARKERS)
    }
}

static DEFAULT_RULES: LazyLock<BoundaryRules> = LazyLock::new(BoundaryRules::default);

impl BoundaryRules {
    pub fn new<I, S>(markers: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        BoundaryRules { markers: markers.into_iter().map(|m| m.as_ref().to_lowercase()).collect() }
    }

    /// One marker per line; blank lines and `#` comments are skipped.
    pub fn from_lexicon(text: &str) -> Self {
        BoundaryRules::new(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')))
    }

    pub fn markers(&self) -> &BTreeSet<String> {
        &self.markers
    }

    /// Which rule, if any, fires on `token`. `edu_opener` is the first token
    /// of the EDU the token belongs to; `lookahead` holds the following tokens
    /// when they are known.
    pub fn fires(&self, token: &str, edu_opener: Option<&str>, lookahead: &[&str]) -> Option<BoundaryRule> {
        if is_sentence_final(token) {
            return Some(BoundaryRule::SentenceFinal);
        }
        if token == ";" || token == ":" {
            return Some(BoundaryRule::ClauseSeparator);
        }
        if token != "," {
            return None;
        }
        if edu_opener.is_some_and(|w| self.markers.contains(&w.to_lowercase())) {
            return Some(BoundaryRule::MarkedClause);
        }
        match lookahead {
            [conj, start, ..]
                if COORDINATORS.contains(&conj.to_lowercase().as_str())
                    && CLAUSE_STARTERS.contains(&start.to_lowercase().as_str()) =>
            {
                Some(BoundaryRule::CoordinatedClause)
            }
            _ => None,
        }
    }
}

/// Splits on whitespace and detaches leading/trailing punctuation into tokens
/// of their own.
pub fn tokenize(text: &str) -> Vec<String> {
    const PUNCT: &[char] = &['.', ',', ';', ':', '!', '?', '(', ')', '"'];
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let core_start = word.find(|c: char| !PUNCT.contains(&c));
        let Some(start) = core_start else {
            out.push(word.to_string());
            continue;
        };
        let end = word
            .rfind(|c: char| !PUNCT.contains(&c))
            .map(|i| i + word[i..].chars().next().unwrap().len_utf8())
            .unwrap();
        out.extend(word[..start].chars().map(String::from));
        out.push(word[start..end].to_string());
        let tail = &word[end..];
        if !tail.is_empty() && is_sentence_final(tail) {
            out.push(tail.to_string());
        } else {
            out.extend(tail.chars().map(String::from));
        }
    }
    out
}

/// Number of sentences: R1 boundaries, plus one for trailing text after the
/// last boundary.
pub fn count_sentences(text: &str) -> usize {
    let tokens = tokenize(text);
    let mut count = 0;
    let mut pending = false;
    for t in &tokens {
        if is_sentence_final(t) {
            if pending {
                count += 1;
            }
            pending = false;
        } else {
            pending = true;
        }
    }
    count + usize::from(pending)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub pos: NodePos,
    pub boundary: Option<BoundaryRule>,
}

impl Observation {
    pub fn boundary_fired(&self) -> bool {
        self.boundary.is_some()
    }
}

/// Tracks which leaf the next generated token belongs to.
#[derive(Debug, Clone)]
pub struct EduCursor<'a> {
    tree: &'a RstTree,
    rules: &'a BoundaryRules,
    leaves: Vec<NodePos>,
    current: usize,
    finished: bool,
    opener: Option<String>,
}

impl<'a> EduCursor<'a> {
    /// Starts at the leftmost leaf with the default rule set.
    pub fn new(tree: &'a RstTree) -> Result<Self, EduError> {
        Self::with_rules(tree, &DEFAULT_RULES)
    }

    pub fn with_rules(tree: &'a RstTree, rules: &'a BoundaryRules) -> Result<Self, EduError> {
        let leaves = tree.leaves_in_order()?;
        Ok(EduCursor { tree, rules, leaves, current: 0, finished: false, opener: None })
    }

    pub fn tree(&self) -> &RstTree {
        self.tree
    }

    pub fn leaves(&self) -> &[NodePos] {
        &self.leaves
    }

    pub fn current_index(&self) -> usize {
        self.current
    }

    pub fn current_leaf(&self) -> Option<NodePos> {
        (!self.finished).then(|| self.leaves[self.current])
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn on_last_leaf(&self) -> bool {
        !self.finished && self.current + 1 == self.leaves.len()
    }

    /// Moves to the next leaf, or finishes after the last one.
    pub fn advance(&mut self) {
        if self.finished {
            return;
        }
        if self.current + 1 < self.leaves.len() {
            self.current += 1;
        } else {
            self.finished = true;
        }
        self.opener = None;
    }

    pub fn observe_token(&mut self, token: &str, lookahead: &[&str]) -> Result<Observation, EduError> {
        if self.finished {
            return Err(EduError::FinishedCursor);
        }
        let pos = self.leaves[self.current];
        if self.opener.is_none() {
            self.opener = Some(token.to_string());
        }
        let boundary = self.rules.fires(token, self.opener.as_deref(), lookahead);
        if boundary.is_some() {
            self.advance();
        }
        Ok(Observation { pos, boundary })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenAssignment {
    pub pairs: Vec<(usize, NodePos)>,
    /// Leaves that received no tokens.
    pub unused_leaves: Vec<NodePos>,
}

impl TokenAssignment {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodePos> + '_ {
        self.pairs.iter().map(|(_, p)| *p)
    }

    /// Contiguous token ranges per leaf, in order.
    pub fn spans(&self) -> Vec<(NodePos, Range<usize>)> {
        let mut spans: Vec<(NodePos, Range<usize>)> = Vec::new();
        for &(i, pos) in &self.pairs {
            match spans.last_mut() {
                Some((p, r)) if *p == pos && r.end == i => r.end = i + 1,
                _ => spans.push((pos, i..i + 1)),
            }
        }
        spans
    }

    pub fn to_tsv(&self) -> String {
        self.pairs.iter().map(|(i, p)| format!("{i}\t{p}\n")).collect()
    }

    /// Parses `token_index<TAB>node_pos` lines (`#` comments ignored). Token
    /// indices must run 0, 1, 2, ... in order.
    pub fn from_tsv(text: &str) -> Result<Self, EduError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let fail = |reason: String| EduError::Format { line, reason };
            let (t, p) = raw.split_once('\t').ok_or_else(|| fail("expected `token_index<TAB>node_pos`".into()))?;
            let t: usize = t.trim().parse().map_err(|_| fail(format!("bad token index `{t}`")))?;
            let p: usize = p.trim().parse().map_err(|_| fail(format!("bad node position `{p}`")))?;
            if t != pairs.len() {
                return Err(fail(format!("expected token index {}, found {t}", pairs.len())));
            }
            pairs.push((t, NodePos::new(p).map_err(|e| fail(e.to_string()))?));
        }
        Ok(TokenAssignment { pairs, unused_leaves: Vec::new() })
    }
}

/// Runs the cursor over a whole token list. Boundaries past the last leaf are
/// ignored; leaves never reached are reported in `unused_leaves`.
pub fn assign_tokens<S: AsRef<str>>(
    tree: &RstTree,
    tokens: &[S],
    rules: &BoundaryRules,
) -> Result<TokenAssignment, EduError> {
    let mut cursor = EduCursor::with_rules(tree, rules)?;
    let tokens: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    let mut pairs = Vec::with_capacity(tokens.len());
    for (i, token) in tokens.iter().enumerate() {
        let pos = if cursor.on_last_leaf() {
            cursor.leaves[cursor.current]
        } else {
            let ahead = &tokens[(i + 1).min(tokens.len())..(i + 3).min(tokens.len())];
            cursor.observe_token(token, ahead)?.pos
        };
        pairs.push((i, pos));
    }
    let last_used = pairs.last().map(|(_, p)| *p);
    let reached = match last_used {
        Some(p) => cursor.leaves.iter().position(|l| *l == p).unwrap() + 1,
        None => 0,
    };
    Ok(TokenAssignment { pairs, unused_leaves: cursor.leaves[reached..].to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rst_tree::{NodeLabel, Nuclearity, Relation};

    fn tree_with(parents: &[usize]) -> RstTree {
        RstTree::from_parents(
            parents
                .iter()
                .map(|&p| (NodePos::new(p).unwrap(), NodeLabel::new(Relation::Joint, Nuclearity::NN)))
                .collect(),
        )
    }

    fn pos(i: usize) -> NodePos {
        NodePos::new(i).unwrap()
    }

    #[test]
    fn cursor_starts_at_leftmost_leaf() {
        let t = tree_with(&[0, 2]);
        assert_eq!(EduCursor::new(&t).unwrap().current_leaf(), Some(pos(1)));
        let t = tree_with(&[0]);
        let mut c = EduCursor::new(&t).unwrap();
        assert_eq!(c.current_leaf(), Some(pos(1)));
        c.advance();
        assert_eq!(c.current_leaf(), Some(pos(2)));
        c.advance();
        assert!(c.is_finished());
        assert!(matches!(c.observe_token("x", &[]), Err(EduError::FinishedCursor)));
        assert!(EduCursor::new(&RstTree::default()).is_err());
    }

    #[test]
    fn rules() {
        let rules = BoundaryRules::default();
        assert_eq!(rules.fires(".", Some("we"), &[]), Some(BoundaryRule::SentenceFinal));
        assert_eq!(rules.fires("?!", Some("we"), &[]), Some(BoundaryRule::SentenceFinal));
        assert_eq!(rules.fires(";", None, &[]), Some(BoundaryRule::ClauseSeparator));
        assert_eq!(rules.fires(":", None, &[]), Some(BoundaryRule::ClauseSeparator));
        assert_eq!(rules.fires(",", Some("If"), &[]), Some(BoundaryRule::MarkedClause));
        assert_eq!(rules.fires(",", Some("We"), &["but", "they"]), Some(BoundaryRule::CoordinatedClause));
        assert_eq!(rules.fires(",", Some("We"), &["but", "quickly"]), None);
        assert_eq!(rules.fires(",", Some("apples"), &["pears"]), None);
        assert_eq!(rules.fires("table", Some("the"), &[]), None);
    }

    #[test]
    fn conditional_sentence_splits_in_two() {
        let t = tree_with(&[0]);
        let tokens = ["If", "it", "rains", ",", "we", "stay", "."];
        let mut c = EduCursor::new(&t).unwrap();
        let fired: Vec<bool> =
            tokens[..4].iter().map(|tok| c.observe_token(tok, &[]).unwrap().boundary_fired()).collect();
        assert_eq!(fired, vec![false, false, false, true]);
        assert_eq!(c.current_leaf(), Some(pos(2)));

        let a = assign_tokens(&t, &tokens, &BoundaryRules::default()).unwrap();
        assert_eq!(a.spans(), vec![(pos(1), 0..4), (pos(2), 4..7)]);
        assert!(a.unused_leaves.is_empty());
    }

    #[test]
    fn underflow_and_overflow() {
        let t = tree_with(&[0, 1, 2]);
        let tokens = tokenize("The cat sat. It purred");
        let a = assign_tokens(&t, &tokens, &BoundaryRules::default()).unwrap();
        assert_eq!(a.spans(), vec![(pos(3), 0..4), (pos(4), 4..6)]);
        assert_eq!(a.unused_leaves, vec![pos(5), pos(6)]);

        let t = tree_with(&[0]);
        let tokens = tokenize("One. Two. Three. Four.");
        let a = assign_tokens(&t, &tokens, &BoundaryRules::default()).unwrap();
        assert_eq!(a.spans(), vec![(pos(1), 0..2), (pos(2), 2..8)]);
    }

    #[test]
    fn custom_lexicon() {
        let rules = BoundaryRules::from_lexicon("# markers\nOnce\n\n");
        assert!(rules.markers().contains("once"));
        assert_eq!(rules.fires(",", Some("once"), &[]), Some(BoundaryRule::MarkedClause));
        assert_eq!(rules.fires(",", Some("if"), &[]), None);
    }

    #[test]
    fn tokenizer_and_sentences() {
        assert_eq!(tokenize("If it rains, we stay."), vec!["If", "it", "rains", ",", "we", "stay", "."]);
        assert_eq!(tokenize("Wait... (really)?"), vec!["Wait", "...", "(", "really", ")", "?"]);
        assert_eq!(tokenize(" , "), vec![","]);
        assert_eq!(count_sentences("One two. Three four!"), 2);
        assert_eq!(count_sentences("One two. Three four"), 2);
        assert_eq!(count_sentences(""), 0);
        assert_eq!(count_sentences("..."), 0);
    }

    #[test]
    fn assignment_tsv() {
        let a = TokenAssignment { pairs: vec![(0, pos(1)), (1, pos(1)), (2, pos(2))], unused_leaves: vec![] };
        let tsv = a.to_tsv();
        assert_eq!(tsv, "0\t1\n1\t1\n2\t2\n");
        assert_eq!(TokenAssignment::from_tsv(&tsv).unwrap(), a);
        assert!(TokenAssignment::from_tsv("1\t1\n").is_err());
        assert!(TokenAssignment::from_tsv("0 1\n").is_err());
    }
}

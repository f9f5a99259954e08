//! RST-aware attention masks.
//!
//! Every generated token belongs to a leaf `l`. Its row attends to
//!
//! - the `<rst>`/`<kp>` separator tokens, always;
//! - the RST slot of parent node `p` iff `p` is an ancestor of `l`;
//! - the tokens of a keyphrase anchored at `q` iff `q == l` or `q` is an
//!   ancestor of `l`;
//! - earlier text tokens and itself (plain causal attention).

use std::ops::Range;

use thiserror::Error;

use crate::edu_tracker::TokenAssignment;
use crate::rst_tree::{NodePos, RstTree, TreeError};

#[derive(Debug, Error)]
pub enum MaskError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("layout does not fit the tree: {0}")]
    LayoutMismatch(String),
    #[error("token {token} is assigned to node {pos}, which is not a leaf of the tree")]
    NotALeaf { token: usize, pos: NodePos },
    #[error("mask line {line}: {reason}")]
    Format { line: usize, reason: String },
}

/// Where each piece of context sits in the input sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContextLayout {
    /// `<rst>` / `<kp>` marker positions.
    pub separators: Vec<usize>,
    pub rst_slots: Vec<(usize, NodePos)>,
    pub kp_spans: Vec<(Range<usize>, NodePos)>,
    pub text_start: usize,
}

impl ContextLayout {
    /// `<rst>`, one slot per parent node (ascending position), `<kp>`, then the
    /// whitespace-separated words of each keyphrase in tree order.
    pub fn standard(tree: &RstTree) -> Self {
        let mut layout = ContextLayout::default();
        let mut next = 0;
        layout.separators.push(next);
        next += 1;
        for pos in tree.parents().keys() {
            layout.rst_slots.push((next, *pos));
            next += 1;
        }
        layout.separators.push(next);
        next += 1;
        for kp in tree.keyphrases() {
            let words = kp.phrase.split_whitespace().count().max(1);
            layout.kp_spans.push((next..next + words, kp.pos));
            next += words;
        }
        layout.text_start = next;
        layout
    }

    pub fn check(&self, tree: &RstTree) -> Result<(), MaskError> {
        let mut used = vec![false; self.text_start];
        let mut claim = |i: usize, what: &str| -> Result<(), MaskError> {
            match used.get_mut(i) {
                None => Err(MaskError::LayoutMismatch(format!(
                    "{what} at {i} is not before text start {}",
                    self.text_start
                ))),
                Some(true) => Err(MaskError::LayoutMismatch(format!("{what} at {i} overlaps another context entry"))),
                Some(slot) => {
                    *slot = true;
                    Ok(())
                }
            }
        };
        for &s in &self.separators {
            claim(s, "separator")?;
        }
        for &(slot, pos) in &self.rst_slots {
            claim(slot, "rst slot")?;
            if !tree.is_parent(pos) {
                return Err(MaskError::LayoutMismatch(format!(
                    "rst slot {slot} refers to node {pos}, which is not a parent node"
                )));
            }
        }
        for (span, pos) in &self.kp_spans {
            for i in span.clone() {
                claim(i, "keyphrase token")?;
            }
            if !tree.contains(*pos) {
                return Err(MaskError::LayoutMismatch(format!(
                    "keyphrase span {span:?} refers to node {pos}, which is not in the tree"
                )));
            }
        }
        Ok(())
    }

    fn context_row(&self, leaf: NodePos) -> Vec<u8> {
        let ancestors = leaf.ancestors();
        let mut row = vec![0u8; self.text_start];
        for &s in &self.separators {
            row[s] = 1;
        }
        for &(slot, pos) in &self.rst_slots {
            row[slot] = u8::from(ancestors.contains(&pos));
        }
        for (span, pos) in &self.kp_spans {
            let bit = u8::from(*pos == leaf || ancestors.contains(pos));
            row[span.clone()].fill(bit);
        }
        row
    }
}

/// Dense 0/1 matrix: one row per text token, one column per attended position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttentionMaskSet {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl AttentionMaskSet {
    pub fn from_rows(rows: Vec<Vec<u8>>, cols: usize) -> Self {
        let n = rows.len();
        let bits: Vec<u8> = rows
            .into_iter()
            .flat_map(|r| {
                assert_eq!(r.len(), cols, "ragged mask row");
                r
            })
            .collect();
        AttentionMaskSet { rows: n, cols, bits }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j] == 1
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.bits[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[u8]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn hconcat(&self, right: &AttentionMaskSet) -> AttentionMaskSet {
        assert_eq!(self.rows, right.rows, "row count mismatch");
        let rows = (0..self.rows).map(|i| [self.row(i), right.row(i)].concat()).collect();
        AttentionMaskSet::from_rows(rows, self.cols + right.cols)
    }

    /// Lines of space-separated `0`/`1`.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.bits.len() * 2);
        for row in self.iter_rows() {
            let line: Vec<&str> = row.iter().map(|b| if *b == 1 { "1" } else { "0" }).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, MaskError> {
        let mut rows = Vec::new();
        let mut cols = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let row: Vec<u8> = raw
                .split_whitespace()
                .map(|t| match t {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    other => Err(MaskError::Format { line, reason: format!("expected 0 or 1, found `{other}`") }),
                })
                .collect::<Result<_, _>>()?;
            match cols {
                None => cols = Some(row.len()),
                Some(c) if c != row.len() => {
                    return Err(MaskError::Format {
                        line,
                        reason: format!("row has {} entries, expected {c}", row.len()),
                    })
                }
                _ => {}
            }
            rows.push(row);
        }
        Ok(AttentionMaskSet::from_rows(rows, cols.unwrap_or(0)))
    }
}

fn check_leaf(tree: &RstTree, token: usize, pos: NodePos) -> Result<(), MaskError> {
    let is_leaf = !tree.is_parent(pos) && pos.parent().map(|p| tree.is_parent(p)).unwrap_or(false);
    if is_leaf {
        Ok(())
    } else {
        Err(MaskError::NotALeaf { token, pos })
    }
}

/// Context columns for every assigned text token.
pub fn context_mask(
    tree: &RstTree,
    layout: &ContextLayout,
    assignment: &TokenAssignment,
) -> Result<AttentionMaskSet, MaskError> {
    tree.ensure_valid()?;
    layout.check(tree)?;
    let rows = assignment
        .pairs
        .iter()
        .map(|&(token, leaf)| {
            check_leaf(tree, token, leaf)?;
            Ok(layout.context_row(leaf))
        })
        .collect::<Result<Vec<_>, MaskError>>()?;
    Ok(AttentionMaskSet::from_rows(rows, layout.text_start))
}

/// Causal lower-triangular ones over the text tokens.
pub fn text_mask(assignment: &TokenAssignment) -> AttentionMaskSet {
    let n = assignment.len();
    let rows = (0..n).map(|i| (0..n).map(|j| u8::from(j <= i)).collect()).collect();
    AttentionMaskSet::from_rows(rows, n)
}

pub fn full_mask(
    tree: &RstTree,
    layout: &ContextLayout,
    assignment: &TokenAssignment,
) -> Result<AttentionMaskSet, MaskError> {
    Ok(context_mask(tree, layout, assignment)?.hconcat(&text_mask(assignment)))
}

/// Builds the full mask one generated token at a time. Earlier rows are never
/// recomputed; they only gain a trailing zero per new text column.
#[derive(Debug, Clone)]
pub struct MaskBuilder<'a> {
    tree: &'a RstTree,
    layout: &'a ContextLayout,
    context_rows: Vec<Vec<u8>>,
}

impl<'a> MaskBuilder<'a> {
    pub fn new(tree: &'a RstTree, layout: &'a ContextLayout) -> Result<Self, MaskError> {
        tree.ensure_valid()?;
        layout.check(tree)?;
        Ok(MaskBuilder { tree, layout, context_rows: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.context_rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.context_rows.is_empty()
    }

    /// Appends the row for the next text token, assigned to `leaf`.
    pub fn push(&mut self, leaf: NodePos) -> Result<&[u8], MaskError> {
        check_leaf(self.tree, self.context_rows.len(), leaf)?;
        self.context_rows.push(self.layout.context_row(leaf));
        Ok(self.context_rows.last().unwrap())
    }

    pub fn build(&self) -> AttentionMaskSet {
        let n = self.context_rows.len();
        let rows = self
            .context_rows
            .iter()
            .enumerate()
            .map(|(i, ctx)| {
                let mut row = ctx.clone();
                row.extend((0..n).map(|j| u8::from(j <= i)));
                row
            })
            .collect();
        AttentionMaskSet::from_rows(rows, self.layout.text_start + n)
    }
}

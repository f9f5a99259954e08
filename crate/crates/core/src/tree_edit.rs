//! Positional tree edit distance between RST trees.
//!
//! Only parent nodes are compared. Costs:
//!
//! | edit | cost |
//! |------|------|
//! | relabel relation | 1 |
//! | relabel nuclearity | 1 |
//! | move a node to its empty sibling position | 1 |
//! | delete a childless parent node | 3 |
//! | insert a parent node at a leaf position | 3 |
//!
//! The distance is normalised by `3 * s`, where `s` is the parent count of the
//! reference tree, so values above 1 are possible.
//!
//! Only childless nodes can be deleted or moved, and a move goes to the empty
//! sibling position. Reference nodes are matched in place where that is
//! cheapest; otherwise a node moves to its sibling, and everything left over
//! is deleted or inserted.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::rst_tree::{NodeLabel, NodePos, Nuclearity, Relation, RstTree, TreeError};

pub const RELABEL_COST: u32 = 1;
pub const MOVE_COST: u32 = 1;
pub const DELETE_COST: u32 = 3;
pub const INSERT_COST: u32 = 3;

#[derive(Debug, Error)]
pub enum TedError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("edit #{index} ({op}) cannot be applied: {reason}")]
    Inapplicable { index: usize, op: EditOp, reason: String },
}

/// Which labels take part in the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    /// Node positions only.
    Simple,
    /// Positions and nuclearity.
    Complex,
    /// Positions, nuclearity and relation.
    Complete,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Simple, Variant::Complex, Variant::Complete];

    pub fn compares_nuclearity(self) -> bool {
        self != Variant::Simple
    }

    pub fn compares_relation(self) -> bool {
        self == Variant::Complete
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Simple => "simple",
            Variant::Complex => "complex",
            Variant::Complete => "complete",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown variant `{s}` (expected simple, complex or complete)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    RelabelRelation { pos: NodePos, from: Relation, to: Relation },
    RelabelNuclearity { pos: NodePos, from: Nuclearity, to: Nuclearity },
    SiblingMove { from: NodePos, to: NodePos },
    Delete { pos: NodePos },
    Insert { pos: NodePos, label: NodeLabel },
}

impl EditOp {
    pub fn cost(&self) -> u32 {
        match self {
            EditOp::RelabelRelation { .. } | EditOp::RelabelNuclearity { .. } => RELABEL_COST,
            EditOp::SiblingMove { .. } => MOVE_COST,
            EditOp::Delete { .. } => DELETE_COST,
            EditOp::Insert { .. } => INSERT_COST,
        }
    }

    pub fn position(&self) -> NodePos {
        match *self {
            EditOp::RelabelRelation { pos, .. }
            | EditOp::RelabelNuclearity { pos, .. }
            | EditOp::Delete { pos }
            | EditOp::Insert { pos, .. } => pos,
            EditOp::SiblingMove { from, .. } => from,
        }
    }
}

impl fmt::Display for EditOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditOp::RelabelRelation { pos, from, to } => write!(f, "relabel-relation\t{pos}\t{from}\t{to}"),
            EditOp::RelabelNuclearity { pos, from, to } => write!(f, "relabel-nuclearity\t{pos}\t{from}\t{to}"),
            EditOp::SiblingMove { from, to } => write!(f, "move\t{from}\t{to}"),
            EditOp::Delete { pos } => write!(f, "delete\t{pos}"),
            EditOp::Insert { pos, label } => write!(f, "insert\t{pos}\t{}\t{}", label.relation, label.nuclearity),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TedReport {
    pub variant: Variant,
    pub script: Vec<EditOp>,
    pub raw_cost: u32,
    /// `3 * s`
    pub normalizer: u32,
    pub normalized: f64,
}

fn relabel_cost(from: NodeLabel, to: NodeLabel, variant: Variant) -> u32 {
    let rel = variant.compares_relation() && from.relation != to.relation;
    let nuc = variant.compares_nuclearity() && from.nuclearity != to.nuclearity;
    RELABEL_COST * (u32::from(rel) + u32::from(nuc))
}

fn relabels(pos: NodePos, from: NodeLabel, to: NodeLabel, variant: Variant, out: &mut Vec<EditOp>) {
    if variant.compares_relation() && from.relation != to.relation {
        out.push(EditOp::RelabelRelation { pos, from: from.relation, to: to.relation });
    }
    if variant.compares_nuclearity() && from.nuclearity != to.nuclearity {
        out.push(EditOp::RelabelNuclearity { pos, from: from.nuclearity, to: to.nuclearity });
    }
}

/// How a pair of sibling positions is aligned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairPlan {
    InPlace,
    /// The reference node at the first position moves to the second.
    Move(NodePos, NodePos),
}

#[derive(Default)]
struct Script {
    deletes: Vec<EditOp>,
    moves: Vec<EditOp>,
    relabels: Vec<EditOp>,
    inserts: Vec<EditOp>,
}

struct Aligner<'a> {
    reference: &'a BTreeMap<NodePos, NodeLabel>,
    hypothesis: &'a BTreeMap<NodePos, NodeLabel>,
    variant: Variant,
}

impl Aligner<'_> {
    fn size(map: &BTreeMap<NodePos, NodeLabel>, pos: NodePos) -> u32 {
        if !map.contains_key(&pos) {
            return 0;
        }
        1 + pos.children().map_or(0, |(l, r)| Self::size(map, l) + Self::size(map, r))
    }

    fn delete_cost(&self, pos: NodePos) -> u32 {
        DELETE_COST * Self::size(self.reference, pos)
    }

    fn insert_cost(&self, pos: NodePos) -> u32 {
        INSERT_COST * Self::size(self.hypothesis, pos)
    }

    /// Cost of turning the reference subtree at `pos` into the hypothesis
    /// subtree at `pos` when the node itself stays.
    fn keep_cost(&self, pos: NodePos) -> u32 {
        let relabel = relabel_cost(self.reference[&pos], self.hypothesis[&pos], self.variant);
        relabel + pos.children().map_or(0, |(l, r)| self.pair(l, r).0)
    }

    fn in_place_cost(&self, pos: NodePos) -> u32 {
        match (self.reference.contains_key(&pos), self.hypothesis.contains_key(&pos)) {
            (true, true) => self.keep_cost(pos),
            (true, false) => self.delete_cost(pos),
            (false, true) => self.insert_cost(pos),
            (false, false) => 0,
        }
    }

    /// Moving `from` onto `to`: everything below `from` and whatever the
    /// reference holds at `to` is deleted first, the hypothesis subtree at
    /// `from` and the descendants at `to` are inserted afterwards.
    fn move_cost(&self, from: NodePos, to: NodePos) -> Option<u32> {
        let label = self.reference.get(&from)?;
        let target = self.hypothesis.get(&to)?;
        Some(
            self.delete_cost(from) - DELETE_COST
                + self.delete_cost(to)
                + MOVE_COST
                + relabel_cost(*label, *target, self.variant)
                + self.insert_cost(to)
                - INSERT_COST
                + self.insert_cost(from),
        )
    }

    /// Cheapest alignment of the sibling pair `(a, b)` below a kept parent.
    /// Ties prefer keeping nodes in place.
    fn pair(&self, a: NodePos, b: NodePos) -> (u32, PairPlan) {
        let mut best = (self.in_place_cost(a) + self.in_place_cost(b), PairPlan::InPlace);
        for (from, to) in [(a, b), (b, a)] {
            if let Some(c) = self.move_cost(from, to) {
                if c < best.0 {
                    best = (c, PairPlan::Move(from, to));
                }
            }
        }
        best
    }

    fn emit_delete(&self, pos: NodePos, out: &mut Script) {
        if self.reference.contains_key(&pos) {
            out.deletes.push(EditOp::Delete { pos });
            self.emit_delete_below(pos, out);
        }
    }

    fn emit_delete_below(&self, pos: NodePos, out: &mut Script) {
        if let Some((l, r)) = pos.children() {
            self.emit_delete(l, out);
            self.emit_delete(r, out);
        }
    }

    fn emit_insert(&self, pos: NodePos, out: &mut Script) {
        if let Some(&label) = self.hypothesis.get(&pos) {
            out.inserts.push(EditOp::Insert { pos, label });
            self.emit_insert_below(pos, out);
        }
    }

    fn emit_insert_below(&self, pos: NodePos, out: &mut Script) {
        if let Some((l, r)) = pos.children() {
            self.emit_insert(l, out);
            self.emit_insert(r, out);
        }
    }

    fn emit_keep(&self, pos: NodePos, out: &mut Script) {
        relabels(pos, self.reference[&pos], self.hypothesis[&pos], self.variant, &mut out.relabels);
        if let Some((l, r)) = pos.children() {
            self.emit_pair(l, r, out);
        }
    }

    fn emit_in_place(&self, pos: NodePos, out: &mut Script) {
        match (self.reference.contains_key(&pos), self.hypothesis.contains_key(&pos)) {
            (true, true) => self.emit_keep(pos, out),
            (true, false) => self.emit_delete(pos, out),
            (false, true) => self.emit_insert(pos, out),
            (false, false) => {}
        }
    }

    fn emit_pair(&self, a: NodePos, b: NodePos, out: &mut Script) {
        match self.pair(a, b).1 {
            PairPlan::InPlace => {
                self.emit_in_place(a, out);
                self.emit_in_place(b, out);
            }
            PairPlan::Move(from, to) => {
                self.emit_delete_below(from, out);
                self.emit_delete(to, out);
                out.moves.push(EditOp::SiblingMove { from, to });
                relabels(to, self.reference[&from], self.hypothesis[&to], self.variant, &mut out.relabels);
                self.emit_insert_below(to, out);
                self.emit_insert(from, out);
            }
        }
    }
}

/// Minimum-cost edit script and normalised distance from `reference` to
/// `hypothesis`.
///
/// Moves never cross parents, so the alignment decomposes over sibling pairs:
/// each pair below a kept node is either aligned in place (shared positions
/// kept, the rest deleted or inserted) or one reference node moves onto its
/// sibling after its own subtree and the occupant of the target are cleared.
///
/// The script is ordered so that it can be replayed with [`apply_script`]:
/// deletions deepest-first, then moves, relabels, and insertions top-down.
pub fn ted(reference: &RstTree, hypothesis: &RstTree, variant: Variant) -> Result<TedReport, TedError> {
    reference.ensure_valid()?;
    hypothesis.ensure_valid()?;
    let aligner = Aligner { reference: reference.parents(), hypothesis: hypothesis.parents(), variant };
    let mut parts = Script::default();
    aligner.emit_keep(NodePos::ROOT, &mut parts);

    parts.deletes.sort_by_key(|op| std::cmp::Reverse(op.position()));
    parts.moves.sort_by_key(|op| op.position());
    parts.relabels.sort_by_key(|op| op.position());
    parts.inserts.sort_by_key(|op| op.position());
    let script: Vec<EditOp> =
        parts.deletes.into_iter().chain(parts.moves).chain(parts.relabels).chain(parts.inserts).collect();
    let raw_cost: u32 = script.iter().map(EditOp::cost).sum();
    debug_assert_eq!(raw_cost, aligner.keep_cost(NodePos::ROOT));
    let normalizer = DELETE_COST * reference.parent_count() as u32;
    Ok(TedReport { variant, script, raw_cost, normalizer, normalized: raw_cost as f64 / normalizer as f64 })
}

/// Replays a script on the parent nodes of `tree`. The result carries one
/// text-less EDU per leaf and no keyphrases.
pub fn apply_script(tree: &RstTree, script: &[EditOp]) -> Result<RstTree, TedError> {
    let mut parents: BTreeMap<NodePos, NodeLabel> = tree.parents().clone();
    let has_parent_child = |parents: &BTreeMap<NodePos, NodeLabel>, pos: NodePos| {
        pos.children().map(|(l, r)| parents.contains_key(&l) || parents.contains_key(&r)).unwrap_or(false)
    };
    for (index, op) in script.iter().enumerate() {
        let fail = |reason: &str| TedError::Inapplicable { index, op: *op, reason: reason.to_string() };
        match *op {
            EditOp::RelabelRelation { pos, from, to } => {
                let label = parents.get_mut(&pos).ok_or_else(|| fail("no parent node at this position"))?;
                if label.relation != from {
                    return Err(fail("current relation differs from the script"));
                }
                label.relation = to;
            }
            EditOp::RelabelNuclearity { pos, from, to } => {
                let label = parents.get_mut(&pos).ok_or_else(|| fail("no parent node at this position"))?;
                if label.nuclearity != from {
                    return Err(fail("current nuclearity differs from the script"));
                }
                label.nuclearity = to;
            }
            EditOp::SiblingMove { from, to } => {
                if from.sibling() != Some(to) {
                    return Err(fail("target is not the sibling position"));
                }
                if !parents.contains_key(&from) {
                    return Err(fail("no parent node at this position"));
                }
                if parents.contains_key(&to) {
                    return Err(fail("sibling position is occupied"));
                }
                if has_parent_child(&parents, from) {
                    return Err(fail("node still has parent-node children"));
                }
                let label = parents.remove(&from).unwrap();
                parents.insert(to, label);
            }
            EditOp::Delete { pos } => {
                if pos.is_root() {
                    return Err(fail("the root cannot be deleted"));
                }
                if !parents.contains_key(&pos) {
                    return Err(fail("no parent node at this position"));
                }
                if has_parent_child(&parents, pos) {
                    return Err(fail("only childless parent nodes can be deleted"));
                }
                parents.remove(&pos);
            }
            EditOp::Insert { pos, label } => {
                if parents.contains_key(&pos) {
                    return Err(fail("position is already a parent node"));
                }
                let parent_ok = pos.parent().map(|p| parents.contains_key(&p)).unwrap_or(false);
                if !parent_ok {
                    return Err(fail("position is not a leaf of the current tree"));
                }
                if pos.children().is_none() {
                    return Err(fail("children would fall outside the position range"));
                }
                if label.relation == Relation::Null || !label.nuclearity.has_nucleus() {
                    return Err(fail("inserted labels must not be Null"));
                }
                parents.insert(pos, label);
            }
        }
    }
    Ok(RstTree::from_parents(parents))
}

/// Parent nodes projected onto the labels a variant compares.
pub fn project(tree: &RstTree, variant: Variant) -> BTreeMap<NodePos, (Option<Relation>, Option<Nuclearity>)> {
    tree.parents()
        .iter()
        .map(|(&p, l)| {
            (
                p,
                (
                    variant.compares_relation().then_some(l.relation),
                    variant.compares_nuclearity().then_some(l.nuclearity),
                ),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pos(i: usize) -> NodePos {
        NodePos::new(i).unwrap()
    }

    fn tree(nodes: &[(usize, Relation, Nuclearity)]) -> RstTree {
        RstTree::from_parents(nodes.iter().map(|&(p, r, n)| (pos(p), NodeLabel::new(r, n))).collect())
    }

    use Nuclearity::*;
    use Relation::*;

    #[test]
    fn identical_trees() {
        let t = tree(&[(0, Joint, NN), (1, Elaboration, NS), (4, Contrast, SN)]);
        for v in Variant::ALL {
            let rep = ted(&t, &t, v).unwrap();
            assert_eq!(rep.raw_cost, 0);
            assert_eq!(rep.normalized, 0.0);
            assert!(rep.script.is_empty());
        }
    }

    #[test]
    fn single_nuclearity_relabel() {
        let a = tree(&[(0, Joint, NN), (1, Elaboration, NS), (2, Contrast, NN), (3, Cause, SN)]);
        let b = tree(&[(0, Joint, NN), (1, Elaboration, SN), (2, Contrast, NN), (3, Cause, SN)]);
        assert_eq!(ted(&a, &b, Variant::Simple).unwrap().raw_cost, 0);
        let rep = ted(&a, &b, Variant::Complex).unwrap();
        assert_eq!(rep.raw_cost, 1);
        assert_eq!(rep.normalizer, 12);
        assert_eq!(rep.normalized, 1.0 / 12.0);
        assert_eq!(ted(&a, &b, Variant::Complete).unwrap().normalized, 1.0 / 12.0);
    }

    #[test]
    fn sibling_move_and_relabel() {
        let a = tree(&[(0, Joint, NN), (1, Elaboration, NS)]);
        let b = tree(&[(0, Joint, NN), (2, Contrast, NS)]);
        let rep = ted(&a, &b, Variant::Complete).unwrap();
        assert_eq!(
            rep.script,
            vec![
                EditOp::SiblingMove { from: pos(1), to: pos(2) },
                EditOp::RelabelRelation { pos: pos(2), from: Elaboration, to: Contrast },
            ]
        );
        assert_eq!(rep.raw_cost, 2);
        assert_eq!(ted(&a, &b, Variant::Simple).unwrap().raw_cost, 1);
    }

    #[test]
    fn deletes_and_inserts() {
        let a = tree(&[(0, Joint, NN), (1, Elaboration, NS), (3, Joint, NN), (4, Cause, SN)]);
        let b = tree(&[(0, Joint, NN), (2, Elaboration, NS), (5, Joint, NN)]);
        let rep = ted(&a, &b, Variant::Simple).unwrap();
        // 3 and 4 deleted, 1 moved to 2, 5 inserted
        assert_eq!(rep.raw_cost, 3 + 3 + 1 + 3);
        assert_eq!(rep.normalizer, 12);
        let rebuilt = apply_script(&a, &rep.script).unwrap();
        assert_eq!(project(&rebuilt, Variant::Simple), project(&b, Variant::Simple));
    }

    #[test]
    fn apply_errors() {
        let a = tree(&[(0, Joint, NN), (1, Elaboration, NS), (3, Joint, NN)]);
        assert_eq!(apply_script(&a, &[]).unwrap().parents(), a.parents());
        assert!(matches!(
            apply_script(&a, &[EditOp::Delete { pos: pos(1) }]),
            Err(TedError::Inapplicable { index: 0, .. })
        ));
        assert!(apply_script(&a, &[EditOp::Delete { pos: pos(0) }]).is_err());
        assert!(apply_script(&a, &[EditOp::Delete { pos: pos(3) }]).is_ok());
        assert!(apply_script(&a, &[EditOp::Insert { pos: pos(9), label: NodeLabel::new(Joint, NN) }]).is_err());
        assert!(apply_script(&a, &[EditOp::SiblingMove { from: pos(1), to: pos(2) }]).is_err());
        assert!(apply_script(&a, &[EditOp::RelabelRelation { pos: pos(1), from: Joint, to: Cause }]).is_err());
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("complete".parse::<Variant>().unwrap(), Variant::Complete);
        assert!("full".parse::<Variant>().is_err());
    }
}

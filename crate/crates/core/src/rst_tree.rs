//! Positional binary RST trees.
//!
//! Nodes live in a zero-indexed implicit heap: the root is position 0 and the
//! children of `l` are `2l + 1` (left) and `2l + 2` (right). A tree is stored as
//! the collection of its parent nodes, each labelled with the relation and
//! nuclearity joining its two children. Leaves (EDUs) are implied by the parent
//! set and carry optional text.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Number of addressable node positions (`0..MAX_RST_NODE`).
pub const MAX_RST_NODE: usize = 4094;

/// Length of the path encoding and the deepest level a position may sit at.
pub const MAX_TREE_DEPTH: usize = 12;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("the root node has no parent")]
    RootHasNoParent,
    #[error("node position {0} is out of range (must be < {MAX_RST_NODE})")]
    PositionOutOfRange(usize),
    #[error("invalid tree: {0}")]
    Invalid(ValidationReport),
    #[error("line {line}: malformed record: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: unknown relation `{label}`")]
    UnknownRelation { line: usize, label: String },
    #[error("line {line}: unknown nuclearity `{label}`")]
    UnknownNuclearity { line: usize, label: String },
    #[error("line {line}: duplicate {kind} record for position {pos}")]
    DuplicatePosition { line: usize, kind: &'static str, pos: usize },
}

pub type Result<T, E = TreeError> = std::result::Result<T, E>;

/// Rhetorical relation joining the two children of a parent node.
///
/// The discriminant order is the published label→index table used by the
/// encodings; `Null` (the pad/unclassified label) is always the highest index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Attribution,
    Background,
    Cause,
    Comparison,
    Condition,
    Contrast,
    Elaboration,
    Enablement,
    Evaluation,
    Explanation,
    Joint,
    MannerMeans,
    TopicComment,
    Summary,
    Temporal,
    TopicChange,
    SameUnit,
    TextualOrganization,
    Null,
}

impl Relation {
    pub const ALL: [Relation; 19] = [
        Relation::Attribution,
        Relation::Background,
        Relation::Cause,
        Relation::Comparison,
        Relation::Condition,
        Relation::Contrast,
        Relation::Elaboration,
        Relation::Enablement,
        Relation::Evaluation,
        Relation::Explanation,
        Relation::Joint,
        Relation::MannerMeans,
        Relation::TopicComment,
        Relation::Summary,
        Relation::Temporal,
        Relation::TopicChange,
        Relation::SameUnit,
        Relation::TextualOrganization,
        Relation::Null,
    ];

    /// Every label except the `Null` pad.
    pub fn content() -> impl Iterator<Item = Relation> {
        Self::ALL.into_iter().filter(|r| *r != Relation::Null)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Relation> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Attribution => "Attribution",
            Relation::Background => "Background",
            Relation::Cause => "Cause",
            Relation::Comparison => "Comparison",
            Relation::Condition => "Condition",
            Relation::Contrast => "Contrast",
            Relation::Elaboration => "Elaboration",
            Relation::Enablement => "Enablement",
            Relation::Evaluation => "Evaluation",
            Relation::Explanation => "Explanation",
            Relation::Joint => "Joint",
            Relation::MannerMeans => "Manner-Means",
            Relation::TopicComment => "Topic-Comment",
            Relation::Summary => "Summary",
            Relation::Temporal => "Temporal",
            Relation::TopicChange => "Topic-Change",
            Relation::SameUnit => "Same-Unit",
            Relation::TextualOrganization => "Textual-Organization",
            Relation::Null => "Null",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|r| r.as_str() == s).ok_or_else(|| s.to_string())
    }
}

/// Joint nuclearity of a sibling pair. `Null` is the pad value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Nuclearity {
    NN,
    NS,
    SN,
    Null,
}

impl Nuclearity {
    pub const ALL: [Nuclearity; 4] = [Nuclearity::NN, Nuclearity::NS, Nuclearity::SN, Nuclearity::Null];

    pub fn content() -> impl Iterator<Item = Nuclearity> {
        Self::ALL.into_iter().filter(|n| *n != Nuclearity::Null)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Nuclearity> {
        Self::ALL.get(index).copied()
    }

    /// True when at least one side of the pair is a nucleus.
    pub fn has_nucleus(self) -> bool {
        self != Nuclearity::Null
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Nuclearity::NN => "NN",
            Nuclearity::NS => "NS",
            Nuclearity::SN => "SN",
            Nuclearity::Null => "Null",
        }
    }
}

impl fmt::Display for Nuclearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Nuclearity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| s.to_string())
    }
}

/// A node position in the implicit heap layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePos(u16);

impl NodePos {
    pub const ROOT: NodePos = NodePos(0);

    pub fn new(index: usize) -> Result<NodePos> {
        if index < MAX_RST_NODE {
            Ok(NodePos(index as u16))
        } else {
            Err(TreeError::PositionOutOfRange(index))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_root(self) -> bool {
        self.0 == 0
    }

    /// Number of edges between the root and this position.
    pub fn depth(self) -> usize {
        (usize::BITS - 1 - (self.index() + 1).leading_zeros()) as usize
    }

    pub fn parent(self) -> Result<NodePos> {
        if self.is_root() {
            Err(TreeError::RootHasNoParent)
        } else {
            Ok(NodePos((self.0 - 1) / 2))
        }
    }

    /// `(left, right)` children, or `None` when either would fall outside the
    /// addressable range.
    pub fn children(self) -> Option<(NodePos, NodePos)> {
        let right = 2 * self.index() + 2;
        (right < MAX_RST_NODE).then(|| (NodePos(right as u16 - 1), NodePos(right as u16)))
    }

    pub fn left_child(self) -> Option<NodePos> {
        self.children().map(|(l, _)| l)
    }

    pub fn right_child(self) -> Option<NodePos> {
        self.children().map(|(_, r)| r)
    }

    pub fn is_left_child(self) -> bool {
        self.0 % 2 == 1
    }

    pub fn sibling(self) -> Option<NodePos> {
        if self.is_root() {
            None
        } else if self.is_left_child() {
            NodePos::new(self.index() + 1).ok()
        } else {
            Some(NodePos(self.0 - 1))
        }
    }

    /// Strict ancestors, from the immediate parent up to the root.
    pub fn ancestors(self) -> Vec<NodePos> {
        let mut out = Vec::with_capacity(self.depth());
        let mut cur = self;
        while let Ok(p) = cur.parent() {
            out.push(p);
            cur = p;
        }
        out
    }

    pub fn is_ancestor_of(self, other: NodePos) -> bool {
        let (mut cur, target_depth) = (other, self.depth());
        if cur.depth() <= target_depth {
            return false;
        }
        while cur.depth() > target_depth {
            cur = NodePos((cur.0 - 1) / 2);
        }
        cur == self
    }

    /// Sort key realising left-to-right (in-order) traversal over all positions.
    pub fn in_order_key(self) -> u64 {
        let depth = self.depth();
        let offset = (self.index() + 1 - (1 << depth)) as u64;
        (2 * offset + 1) << (MAX_TREE_DEPTH + 1 - depth)
    }
}

impl fmt::Display for NodePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<usize> for NodePos {
    type Error = TreeError;

    fn try_from(index: usize) -> Result<Self> {
        NodePos::new(index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeLabel {
    pub relation: Relation,
    pub nuclearity: Nuclearity,
}

impl NodeLabel {
    pub fn new(relation: Relation, nuclearity: Nuclearity) -> Self {
        NodeLabel { relation, nuclearity }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edu {
    pub pos: NodePos,
    pub text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Keyphrase {
    pub pos: NodePos,
    pub phrase: String,
}

/// A single broken invariant, with the offending position where there is one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Empty,
    NullRelation(NodePos),
    MissingNucleus(NodePos),
    Orphan(NodePos),
    ChildOutOfRange(NodePos),
    EduNotLeaf(NodePos),
    MissingEdu(NodePos),
    DuplicateEdu(NodePos),
    EduOrder { index: usize, expected: NodePos, found: NodePos },
    KeyphraseOutsideTree(NodePos),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "tree has no root parent node"),
            Violation::NullRelation(p) => write!(f, "node {p}: relation must not be Null"),
            Violation::MissingNucleus(p) => write!(f, "node {p}: nuclearity must contain a nucleus"),
            Violation::Orphan(p) => write!(f, "node {p}: orphan node (parent position is not a parent node)"),
            Violation::ChildOutOfRange(p) => write!(f, "node {p}: children fall outside the position range"),
            Violation::EduNotLeaf(p) => write!(f, "edu {p}: position is not a leaf of the tree"),
            Violation::MissingEdu(p) => write!(f, "leaf {p}: no edu record"),
            Violation::DuplicateEdu(p) => write!(f, "edu {p}: duplicate record"),
            Violation::EduOrder { index, expected, found } => {
                write!(f, "edu #{index}: expected leaf {expected} in left-to-right order, found {found}")
            }
            Violation::KeyphraseOutsideTree(p) => write!(f, "keyphrase at {p}: position is not a node of the tree"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(TreeError::Invalid(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("OK");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// A binary discourse tree stored as its labelled parent nodes plus the EDU
/// and keyphrase annotations.
///
/// Any combination of parts can be represented; use [`RstTree::validate`] to
/// check the structural invariants.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RstTree {
    parents: BTreeMap<NodePos, NodeLabel>,
    edus: Vec<Edu>,
    keyphrases: Vec<Keyphrase>,
}

impl RstTree {
    pub fn from_parts(parents: BTreeMap<NodePos, NodeLabel>, edus: Vec<Edu>, keyphrases: Vec<Keyphrase>) -> Self {
        RstTree { parents, edus, keyphrases }
    }

    /// Builds a tree from its parent nodes, deriving one text-less EDU per leaf.
    pub fn from_parents(parents: BTreeMap<NodePos, NodeLabel>) -> Self {
        let mut tree = RstTree { parents, edus: Vec::new(), keyphrases: Vec::new() };
        tree.edus = tree.derived_leaves().into_iter().map(|pos| Edu { pos, text: None }).collect();
        tree
    }

    pub fn with_keyphrase(mut self, pos: NodePos, phrase: impl Into<String>) -> Self {
        self.keyphrases.push(Keyphrase { pos, phrase: phrase.into() });
        self
    }

    pub fn parents(&self) -> &BTreeMap<NodePos, NodeLabel> {
        &self.parents
    }

    pub fn edus(&self) -> &[Edu] {
        &self.edus
    }

    pub fn edus_mut(&mut self) -> &mut Vec<Edu> {
        &mut self.edus
    }

    pub fn keyphrases(&self) -> &[Keyphrase] {
        &self.keyphrases
    }

    pub fn keyphrases_mut(&mut self) -> &mut Vec<Keyphrase> {
        &mut self.keyphrases
    }

    pub fn parents_mut(&mut self) -> &mut BTreeMap<NodePos, NodeLabel> {
        &mut self.parents
    }

    pub fn label(&self, pos: NodePos) -> Option<NodeLabel> {
        self.parents.get(&pos).copied()
    }

    pub fn is_parent(&self, pos: NodePos) -> bool {
        self.parents.contains_key(&pos)
    }

    pub fn parent_count(&self) -> usize {
        self.parents.len()
    }

    /// Leaves implied by the parent set (children that are not parents
    /// themselves), in left-to-right order.
    pub fn derived_leaves(&self) -> Vec<NodePos> {
        let mut leaves: Vec<NodePos> = self
            .parents
            .keys()
            .filter_map(|p| p.children())
            .flat_map(|(l, r)| [l, r])
            .filter(|c| !self.parents.contains_key(c))
            .collect();
        leaves.sort_by_key(|p| p.in_order_key());
        leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.derived_leaves().len()
    }

    pub fn node_count(&self) -> usize {
        self.parents.len() + self.leaf_count()
    }

    /// True for parent nodes and for leaves hanging off a parent.
    pub fn contains(&self, pos: NodePos) -> bool {
        self.parents.contains_key(&pos) || pos.parent().map(|p| self.parents.contains_key(&p)).unwrap_or(false)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.parents.is_empty() {
            violations.push(Violation::Empty);
        }
        for (&pos, label) in &self.parents {
            if label.relation == Relation::Null {
                violations.push(Violation::NullRelation(pos));
            }
            if !label.nuclearity.has_nucleus() {
                violations.push(Violation::MissingNucleus(pos));
            }
            if let Ok(parent) = pos.parent() {
                if !self.parents.contains_key(&parent) {
                    violations.push(Violation::Orphan(pos));
                }
            }
            if pos.children().is_none() {
                violations.push(Violation::ChildOutOfRange(pos));
            }
        }

        let leaves = self.derived_leaves();
        let leaf_set: BTreeSet<NodePos> = leaves.iter().copied().collect();
        let mut seen = BTreeSet::new();
        for edu in &self.edus {
            if !leaf_set.contains(&edu.pos) {
                violations.push(Violation::EduNotLeaf(edu.pos));
            } else if !seen.insert(edu.pos) {
                violations.push(Violation::DuplicateEdu(edu.pos));
            }
        }
        for leaf in &leaves {
            if !seen.contains(leaf) {
                violations.push(Violation::MissingEdu(*leaf));
            }
        }
        // Order only matters once the edu set itself is right.
        if self.edus.len() == leaves.len() && seen.len() == leaves.len() {
            for (index, (edu, expected)) in self.edus.iter().zip(&leaves).enumerate() {
                if edu.pos != *expected {
                    violations.push(Violation::EduOrder { index, expected: *expected, found: edu.pos });
                    break;
                }
            }
        }
        for kp in &self.keyphrases {
            if !self.contains(kp.pos) {
                violations.push(Violation::KeyphraseOutsideTree(kp.pos));
            }
        }
        ValidationReport { violations }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        self.validate().into_result()
    }

    /// Leaves in left-to-right order; the first element is the leftmost leaf.
    pub fn leaves_in_order(&self) -> Result<Vec<NodePos>> {
        self.ensure_valid()?;
        Ok(self.edus.iter().map(|e| e.pos).collect())
    }
}

fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

fn parse_pos(line: usize, field: Option<&str>) -> Result<NodePos> {
    let field = field.ok_or_else(|| TreeError::MalformedLine { line, reason: "missing position".into() })?;
    let index: usize = field.trim().parse().map_err(|_| TreeError::MalformedLine {
        line,
        reason: format!("position `{field}` is not a non-negative integer"),
    })?;
    NodePos::new(index)
        .map_err(|_| TreeError::MalformedLine { line, reason: format!("position {index} is out of range") })
}

/// Parses the tab-separated tree format.
///
/// `node` records may appear in any order; `edu` records are reordered into
/// left-to-right leaf order. A file without any `edu` record gets one
/// text-less EDU per implied leaf. `edu<TAB>pos` (no third field) means no
/// text, while `edu<TAB>pos<TAB>` is an empty text.
pub fn parse_tree(text: &str) -> Result<RstTree> {
    let mut parents = BTreeMap::new();
    let mut edus: Vec<Edu> = Vec::new();
    let mut edu_seen = BTreeSet::new();
    let mut keyphrases = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let (kind, rest) = raw.split_once('\t').unwrap_or((raw, ""));
        match kind {
            "node" => {
                let fields: Vec<&str> = rest.split('\t').collect();
                if fields.len() != 3 {
                    return Err(TreeError::MalformedLine {
                        line,
                        reason: format!("node record needs 3 fields, found {}", fields.len()),
                    });
                }
                let pos = parse_pos(line, Some(fields[0]))?;
                let relation =
                    fields[1].parse::<Relation>().map_err(|label| TreeError::UnknownRelation { line, label })?;
                let nuclearity =
                    fields[2].parse::<Nuclearity>().map_err(|label| TreeError::UnknownNuclearity { line, label })?;
                if parents.insert(pos, NodeLabel { relation, nuclearity }).is_some() {
                    return Err(TreeError::DuplicatePosition { line, kind: "node", pos: pos.index() });
                }
            }
            "edu" => {
                let (pos_field, text) = match rest.split_once('\t') {
                    Some((p, t)) => (p, Some(unescape_field(t))),
                    None => (rest, None),
                };
                let pos = parse_pos(line, Some(pos_field))?;
                if !edu_seen.insert(pos) {
                    return Err(TreeError::DuplicatePosition { line, kind: "edu", pos: pos.index() });
                }
                edus.push(Edu { pos, text });
            }
            "kp" => {
                let (pos_field, phrase) = rest.split_once('\t').ok_or_else(|| TreeError::MalformedLine {
                    line,
                    reason: "kp record needs a position and a phrase".into(),
                })?;
                let pos = parse_pos(line, Some(pos_field))?;
                keyphrases.push(Keyphrase { pos, phrase: unescape_field(phrase) });
            }
            other => return Err(TreeError::MalformedLine { line, reason: format!("unknown record type `{other}`") }),
        }
    }

    if edus.is_empty() {
        let mut tree = RstTree::from_parents(parents);
        tree.keyphrases = keyphrases;
        return Ok(tree);
    }
    edus.sort_by_key(|e| e.pos.in_order_key());
    Ok(RstTree { parents, edus, keyphrases })
}

/// Writes nodes in ascending position, then edus, then keyphrases.
pub fn serialize_tree(tree: &RstTree) -> String {
    let mut out = String::new();
    for (pos, label) in &tree.parents {
        out.push_str(&format!("node\t{}\t{}\t{}\n", pos, label.relation, label.nuclearity));
    }
    for edu in &tree.edus {
        match &edu.text {
            Some(text) => out.push_str(&format!("edu\t{}\t{}\n", edu.pos, escape_field(text))),
            None => out.push_str(&format!("edu\t{}\n", edu.pos)),
        }
    }
    for kp in &tree.keyphrases {
        out.push_str(&format!("kp\t{}\t{}\n", kp.pos, escape_field(&kp.phrase)));
    }
    out
}

impl FromStr for RstTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self> {
        parse_tree(s)
    }
}

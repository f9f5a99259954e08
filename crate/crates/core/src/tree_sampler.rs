//! Count-based child-given-parent conditional tables and iterative tree sampling.
//!
//! A child outcome is either `LEAF` or a `(relation, nuclearity)` pair with
//! non-`Null` labels. Outcomes are conditioned on the parent's labels, the
//! parent's depth and the side of the child. Cells never seen during fitting
//! back off to the `(depth, side)` marginal and then to the side marginal.
//!
//! Trees are grown breadth-first from the root. When a target EDU count is
//! requested, every draw is restricted to the outcomes that keep the target
//! reachable before renormalising.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::rst_tree::{NodeLabel, NodePos, Nuclearity, Relation, RstTree, TreeError, MAX_RST_NODE, MAX_TREE_DEPTH};

/// `LEAF` plus every content relation × content nuclearity pair.
pub const NUM_OUTCOMES: usize = 1 + 18 * 3;

pub const DEFAULT_ALPHA: f64 = 0.1;

pub const TABLE_FORMAT: &str = "rst-cond-table v1";

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("cannot fit a table from an empty corpus")]
    EmptyCorpus,
    #[error("corpus tree #{index} is invalid: {source}")]
    InvalidTree { index: usize, source: TreeError },
    #[error("smoothing constant must be finite and >= 0, got {0}")]
    InvalidSmoothing(f64),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("target of {target} EDUs is unreachable (at most {capacity} within the depth limit)")]
    UnreachableTarget { target: usize, capacity: usize },
    #[error("no distribution for cell {0}")]
    MissingCell(String),
    #[error("table line {line}: {reason}")]
    Format { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Leaf,
    Node(NodeLabel),
}

impl Outcome {
    pub fn index(self) -> usize {
        match self {
            Outcome::Leaf => 0,
            Outcome::Node(l) => 1 + l.relation.index() * 3 + l.nuclearity.index(),
        }
    }

    pub fn from_index(index: usize) -> Option<Outcome> {
        match index {
            0 => Some(Outcome::Leaf),
            i if i < NUM_OUTCOMES => {
                let relation = Relation::from_index((i - 1) / 3)?;
                let nuclearity = Nuclearity::from_index((i - 1) % 3)?;
                Some(Outcome::Node(NodeLabel::new(relation, nuclearity)))
            }
            _ => None,
        }
    }

    pub fn all() -> impl Iterator<Item = Outcome> {
        (0..NUM_OUTCOMES).filter_map(Outcome::from_index)
    }

    fn relation(self) -> Option<Relation> {
        match self {
            Outcome::Leaf => None,
            Outcome::Node(l) => Some(l.relation),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Leaf => f.write_str("LEAF"),
            Outcome::Node(l) => write!(f, "{}/{}", l.relation, l.nuclearity),
        }
    }
}

impl std::str::FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "LEAF" {
            return Ok(Outcome::Leaf);
        }
        let (r, n) = s.split_once('/').ok_or_else(|| format!("bad outcome `{s}`"))?;
        let relation: Relation = r.parse().map_err(|_| format!("unknown relation `{r}`"))?;
        let nuclearity: Nuclearity = n.parse().map_err(|_| format!("unknown nuclearity `{n}`"))?;
        if relation == Relation::Null || nuclearity == Nuclearity::Null {
            return Err(format!("Null labels are not outcomes: `{s}`"));
        }
        Ok(Outcome::Node(NodeLabel::new(relation, nuclearity)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn of(pos: NodePos) -> Side {
        if pos.is_left_child() {
            Side::Left
        } else {
            Side::Right
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Side::Left => "L",
            Side::Right => "R",
        }
    }
}

/// Conditioning context. `depth` is always the depth of the parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellKey {
    Root,
    Child { relation: Relation, nuclearity: Nuclearity, depth: u8, side: Side },
    Depth { depth: u8, side: Side },
    Side(Side),
}

impl CellKey {
    pub fn child(parent: NodeLabel, parent_pos: NodePos, side: Side) -> CellKey {
        CellKey::Child {
            relation: parent.relation,
            nuclearity: parent.nuclearity,
            depth: parent_pos.depth() as u8,
            side,
        }
    }

    fn columns(&self) -> [String; 5] {
        let star = || "*".to_string();
        match *self {
            CellKey::Root => ["root".into(), star(), star(), star(), star()],
            CellKey::Child { relation, nuclearity, depth, side } => {
                ["child".into(), relation.to_string(), nuclearity.to_string(), depth.to_string(), side.as_str().into()]
            }
            CellKey::Depth { depth, side } => ["depth".into(), star(), star(), depth.to_string(), side.as_str().into()],
            CellKey::Side(side) => ["side".into(), star(), star(), star(), side.as_str().into()],
        }
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.columns().join("/"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
    observations: u64,
}

impl Distribution {
    pub fn new(probs: Vec<f64>, observations: u64) -> Result<Self, SamplerError> {
        if probs.len() != NUM_OUTCOMES {
            return Err(SamplerError::InvalidConstraint(format!(
                "distribution needs {NUM_OUTCOMES} entries, got {}",
                probs.len()
            )));
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(SamplerError::InvalidConstraint(format!(
                "probabilities must be non-negative and sum to 1 (sum = {sum})"
            )));
        }
        Ok(Distribution { probs, observations })
    }

    pub fn prob(&self, outcome: Outcome) -> f64 {
        self.probs[outcome.index()]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of child events counted into this cell while fitting.
    pub fn observations(&self) -> u64 {
        self.observations
    }
}

/// Additive smoothing: `(count + alpha) / (total + alpha * K)`.
///
/// A cell without counts and `alpha = 0` is uniform.
pub fn smooth(counts: &[u64], alpha: f64) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    let denom = total as f64 + alpha * counts.len() as f64;
    if denom == 0.0 {
        return vec![1.0 / counts.len() as f64; counts.len()];
    }
    counts.iter().map(|&c| (c as f64 + alpha) / denom).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    alpha: f64,
    cells: BTreeMap<CellKey, Distribution>,
}

impl ConditionalTable {
    pub fn new(alpha: f64, cells: BTreeMap<CellKey, Distribution>) -> Self {
        ConditionalTable { alpha, cells }
    }

    /// Counts child outcomes over a corpus of valid trees.
    pub fn fit(corpus: &[RstTree], alpha: f64) -> Result<Self, SamplerError> {
        if corpus.is_empty() {
            return Err(SamplerError::EmptyCorpus);
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(SamplerError::InvalidSmoothing(alpha));
        }
        let mut counts: BTreeMap<CellKey, Vec<u64>> = BTreeMap::new();
        let mut bump = |key: CellKey, outcome: Outcome| {
            counts.entry(key).or_insert_with(|| vec![0; NUM_OUTCOMES])[outcome.index()] += 1;
        };
        for (index, tree) in corpus.iter().enumerate() {
            tree.ensure_valid().map_err(|source| SamplerError::InvalidTree { index, source })?;
            let outcome_at = |pos: NodePos| match tree.label(pos) {
                Some(label) => Outcome::Node(label),
                None => Outcome::Leaf,
            };
            bump(CellKey::Root, outcome_at(NodePos::ROOT));
            for (&pos, &label) in tree.parents() {
                let (left, right) = pos.children().expect("valid parents have children");
                for child in [left, right] {
                    let side = Side::of(child);
                    let outcome = outcome_at(child);
                    let depth = pos.depth() as u8;
                    bump(CellKey::child(label, pos, side), outcome);
                    bump(CellKey::Depth { depth, side }, outcome);
                    bump(CellKey::Side(side), outcome);
                }
            }
        }
        let cells = counts
            .into_iter()
            .map(|(key, c)| {
                let observations = c.iter().sum();
                (key, Distribution { probs: smooth(&c, alpha), observations })
            })
            .collect();
        Ok(ConditionalTable { alpha, cells })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cells(&self) -> &BTreeMap<CellKey, Distribution> {
        &self.cells
    }

    pub fn cell(&self, key: &CellKey) -> Option<&Distribution> {
        self.cells.get(key)
    }

    pub fn root(&self) -> Result<&Distribution, SamplerError> {
        self.cells.get(&CellKey::Root).ok_or_else(|| SamplerError::MissingCell(CellKey::Root.to_string()))
    }

    /// Distribution for a child of `parent_pos`, with back-off for unseen cells.
    pub fn child_distribution(
        &self,
        parent: NodeLabel,
        parent_pos: NodePos,
        side: Side,
    ) -> Result<&Distribution, SamplerError> {
        let depth = parent_pos.depth() as u8;
        let key = CellKey::child(parent, parent_pos, side);
        self.cells
            .get(&key)
            .or_else(|| self.cells.get(&CellKey::Depth { depth, side }))
            .or_else(|| self.cells.get(&CellKey::Side(side)))
            .ok_or_else(|| SamplerError::MissingCell(key.to_string()))
    }

    /// One unconstrained child draw (boosts still apply).
    pub fn sample_child<R: Rng + ?Sized>(
        &self,
        parent: NodeLabel,
        parent_pos: NodePos,
        side: Side,
        boosts: &BTreeMap<Relation, f64>,
        rng: &mut R,
    ) -> Result<Outcome, SamplerError> {
        let dist = self.child_distribution(parent, parent_pos, side)?;
        Ok(draw(dist, boosts, |_| true, rng))
    }

    /// Versioned TSV: `cell relation nuclearity depth side observations outcome probability`.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("# {TABLE_FORMAT}\n# alpha\t{}\n", self.alpha);
        for (key, dist) in &self.cells {
            let cols = key.columns().join("\t");
            for outcome in Outcome::all() {
                out.push_str(&format!("{cols}\t{}\t{outcome}\t{}\n", dist.observations, dist.prob(outcome)));
            }
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, SamplerError> {
        let fail = |line: usize, reason: String| SamplerError::Format { line, reason };
        let missing_header = || fail(1, format!("missing `# {TABLE_FORMAT}` header"));
        let mut seen_header = false;
        let mut alpha = None;
        let mut cells: BTreeMap<CellKey, (Vec<f64>, u64)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            if let Some(rest) = raw.strip_prefix('#') {
                if rest.trim() == TABLE_FORMAT {
                    seen_header = true;
                } else if let Some(("alpha", v)) = rest.trim().split_once('\t') {
                    alpha = Some(v.parse::<f64>().map_err(|_| fail(line, format!("bad alpha `{v}`")))?);
                }
                continue;
            }
            if !seen_header {
                return Err(missing_header());
            }
            let f: Vec<&str> = raw.split('\t').collect();
            if f.len() != 8 {
                return Err(fail(line, format!("expected 8 fields, found {}", f.len())));
            }
            let side = || match f[4] {
                "L" => Ok(Side::Left),
                "R" => Ok(Side::Right),
                s => Err(fail(line, format!("bad side `{s}`"))),
            };
            let depth = || f[3].parse::<u8>().map_err(|_| fail(line, format!("bad depth `{}`", f[3])));
            let key = match f[0] {
                "root" => CellKey::Root,
                "child" => CellKey::Child {
                    relation: f[1].parse().map_err(|_| fail(line, format!("unknown relation `{}`", f[1])))?,
                    nuclearity: f[2].parse().map_err(|_| fail(line, format!("unknown nuclearity `{}`", f[2])))?,
                    depth: depth()?,
                    side: side()?,
                },
                "depth" => CellKey::Depth { depth: depth()?, side: side()? },
                "side" => CellKey::Side(side()?),
                other => return Err(fail(line, format!("unknown cell kind `{other}`"))),
            };
            let observations: u64 =
                f[5].parse().map_err(|_| fail(line, format!("bad observation count `{}`", f[5])))?;
            let outcome: Outcome = f[6].parse().map_err(|e| fail(line, e))?;
            let prob: f64 = f[7].parse().map_err(|_| fail(line, format!("bad probability `{}`", f[7])))?;
            let entry = cells.entry(key).or_insert_with(|| (vec![f64::NAN; NUM_OUTCOMES], observations));
            entry.0[outcome.index()] = prob;
        }
        if !seen_header {
            return Err(missing_header());
        }
        let alpha = alpha.ok_or_else(|| fail(2, "missing `# alpha` line".into()))?;
        let mut out = BTreeMap::new();
        for (key, (probs, observations)) in cells {
            if probs.iter().any(|p| p.is_nan()) {
                return Err(fail(0, format!("cell {key} does not list every outcome")));
            }
            let dist = Distribution::new(probs, observations).map_err(|e| fail(0, format!("cell {key}: {e}")))?;
            out.insert(key, dist);
        }
        Ok(ConditionalTable { alpha, cells: out })
    }
}

/// Draws from `dist` reweighted by relation boosts and restricted to `allowed`.
/// Falls back to a uniform choice among allowed outcomes if they carry no mass.
fn draw<R: Rng + ?Sized>(
    dist: &Distribution,
    boosts: &BTreeMap<Relation, f64>,
    allowed: impl Fn(Outcome) -> bool,
    rng: &mut R,
) -> Outcome {
    let weights: Vec<(Outcome, f64)> = Outcome::all()
        .filter(|o| allowed(*o))
        .map(|o| {
            let boost = o.relation().and_then(|r| boosts.get(&r).copied()).unwrap_or(1.0);
            (o, dist.prob(o) * boost)
        })
        .collect();
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    if total <= 0.0 {
        let pick = rng.gen_range(0..weights.len());
        return weights[pick].0;
    }
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = weights[0].0;
    for (o, w) in &weights {
        if *w <= 0.0 {
            continue;
        }
        acc += w;
        last = *o;
        if u < acc {
            return *o;
        }
    }
    last
}

/// Boost-adjusted, renormalised probabilities of a distribution (for inspection).
pub fn boosted_probs(dist: &Distribution, boosts: &BTreeMap<Relation, f64>) -> Vec<f64> {
    let w: Vec<f64> = Outcome::all()
        .map(|o| dist.prob(o) * o.relation().and_then(|r| boosts.get(&r).copied()).unwrap_or(1.0))
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConstraints {
    pub target_edu_count: Option<usize>,
    pub relation_boosts: BTreeMap<Relation, f64>,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for SamplerConstraints {
    fn default() -> Self {
        SamplerConstraints {
            target_edu_count: None,
            relation_boosts: BTreeMap::new(),
            max_depth: MAX_TREE_DEPTH,
            seed: 0,
        }
    }
}

impl SamplerConstraints {
    pub fn with_target(mut self, edus: usize) -> Self {
        self.target_edu_count = Some(edus);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_boost(mut self, relation: Relation, factor: f64) -> Self {
        self.relation_boosts.insert(relation, factor);
        self
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Generator for the `index`-th tree of a batch: same seed, separate
    /// stream, so results do not depend on how the batch is scheduled.
    pub fn rng_for(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.rng();
        rng.set_stream(index);
        rng
    }

    pub fn check(&self) -> Result<(), SamplerError> {
        if self.max_depth == 0 || self.max_depth > MAX_TREE_DEPTH {
            return Err(SamplerError::InvalidConstraint(format!(
                "max_depth must be in 1..={MAX_TREE_DEPTH}, got {}",
                self.max_depth
            )));
        }
        for (r, f) in &self.relation_boosts {
            if !f.is_finite() || *f <= 0.0 {
                return Err(SamplerError::InvalidConstraint(format!(
                    "boost for {r} must be a positive number, got {f}"
                )));
            }
        }
        if let Some(target) = self.target_edu_count {
            if target < 2 {
                return Err(SamplerError::InvalidConstraint(format!(
                    "target EDU count must be at least 2 (a tree has a root parent), got {target}"
                )));
            }
            let capacity = leaf_capacity(NodePos::ROOT, self.max_depth);
            if target > capacity {
                return Err(SamplerError::UnreachableTarget { target, capacity });
            }
        }
        Ok(())
    }
}

/// Deepest level that still has addressable positions.
const DEEPEST_LEVEL: usize = {
    let mut d = 0;
    while (1usize << (d + 1)) - 1 < MAX_RST_NODE {
        d += 1;
    }
    d
};

/// Largest number of leaves a subtree rooted at `pos` can hold when no node may
/// sit deeper than `max_depth` and every position must be addressable.
pub fn leaf_capacity(pos: NodePos, max_depth: usize) -> usize {
    let limit = max_depth.min(DEEPEST_LEVEL);
    let depth = pos.depth();
    if depth >= limit {
        return 1;
    }
    let full = 1usize << (limit - depth);
    // The last position of the deepest level is not addressable, which costs
    // one leaf to every subtree on the rightmost spine.
    let rightmost = (1usize << (depth + 1)) - 2;
    let last_level_full = (1usize << (DEEPEST_LEVEL + 1)) - 1 <= MAX_RST_NODE;
    if limit == DEEPEST_LEVEL && pos.index() == rightmost && !last_level_full {
        full - 1
    } else {
        full
    }
}

/// Samples a full tree breadth-first from the root.
pub fn sample_tree<R: Rng + ?Sized>(
    table: &ConditionalTable,
    constraints: &SamplerConstraints,
    rng: &mut R,
) -> Result<RstTree, SamplerError> {
    constraints.check()?;
    let max_depth = constraints.max_depth;
    let boosts = &constraints.relation_boosts;
    let target = constraints.target_edu_count;
    let cap = |p: NodePos| leaf_capacity(p, max_depth);

    let root_label = match draw(table.root()?, boosts, |o| o != Outcome::Leaf, rng) {
        Outcome::Node(label) => label,
        Outcome::Leaf => unreachable!("leaf outcomes are excluded at the root"),
    };
    let mut parents = BTreeMap::new();
    parents.insert(NodePos::ROOT, root_label);

    let mut queue: VecDeque<(NodePos, NodeLabel, NodePos)> = VecDeque::new();
    let (l, r) = NodePos::ROOT.children().expect("root has children");
    queue.push_back((l, root_label, NodePos::ROOT));
    queue.push_back((r, root_label, NodePos::ROOT));
    let mut fixed_leaves = 0usize;
    let mut open = 2usize;
    let mut open_cap = cap(l) + cap(r);

    while let Some((slot, parent_label, parent_pos)) = queue.pop_front() {
        open -= 1;
        open_cap -= cap(slot);
        let expandable = cap(slot) >= 2;
        let (leaf_ok, node_ok) = match target {
            None => (true, expandable),
            Some(e) => (
                fixed_leaves + 1 + open <= e && e <= fixed_leaves + 1 + open_cap,
                expandable && fixed_leaves + open + 2 <= e && e <= fixed_leaves + open_cap + cap(slot),
            ),
        };
        debug_assert!(leaf_ok || node_ok, "sampler reached an infeasible state");
        let dist = table.child_distribution(parent_label, parent_pos, Side::of(slot))?;
        let allowed = |o: Outcome| match o {
            Outcome::Leaf => leaf_ok,
            Outcome::Node(_) => node_ok,
        };
        match draw(dist, boosts, allowed, rng) {
            Outcome::Leaf => fixed_leaves += 1,
            Outcome::Node(label) => {
                parents.insert(slot, label);
                let (cl, cr) = slot.children().expect("expandable slots have children");
                queue.push_back((cl, label, slot));
                queue.push_back((cr, label, slot));
                open += 2;
                open_cap += cap(cl) + cap(cr);
            }
        }
    }
    Ok(RstTree::from_parents(parents))
}

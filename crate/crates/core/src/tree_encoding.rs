//! Numeric encodings of RST trees.
//!
//! Each parent node contributes a relation id, a nuclearity id and a
//! fixed-length root-to-node path vector (left steps are `-0.05`, right steps
//! `0.05`, zero padding after the path ends). The path vector is projected to
//! the model width through a dense layer followed by an exact GELU.
//!
//! Label→index tables (stable across versions):
//!
//! | id | relation | id | relation |
//! |----|----------|----|----------|
//! | 0 | Attribution | 10 | Joint |
//! | 1 | Background | 11 | Manner-Means |
//! | 2 | Cause | 12 | Topic-Comment |
//! | 3 | Comparison | 13 | Summary |
//! | 4 | Condition | 14 | Temporal |
//! | 5 | Contrast | 15 | Topic-Change |
//! | 6 | Elaboration | 16 | Same-Unit |
//! | 7 | Enablement | 17 | Textual-Organization |
//! | 8 | Evaluation | 18 | Null |
//! | 9 | Explanation | | |
//!
//! Nuclearity: `NN = 0`, `NS = 1`, `SN = 2`, `Null = 3`.

use thiserror::Error;

use crate::rst_tree::{NodePos, RstTree, TreeError, MAX_TREE_DEPTH};

pub const LEFT_STEP: f64 = -0.05;
pub const RIGHT_STEP: f64 = 0.05;

/// Default model hidden size.
pub const DEFAULT_HIDDEN: usize = 768;

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("position {pos} has depth {depth}, deeper than {MAX_TREE_DEPTH}")]
    DepthExceeded { pos: usize, depth: usize },
    #[error("cannot encode an empty tree")]
    EmptyTree,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEncoding(pub [f64; MAX_TREE_DEPTH]);

impl PathEncoding {
    pub fn values(&self) -> &[f64; MAX_TREE_DEPTH] {
        &self.0
    }

    /// Number of non-padding entries.
    pub fn path_len(&self) -> usize {
        self.0.iter().take_while(|v| **v != 0.0).count()
    }
}

pub fn encode_position(pos: NodePos) -> Result<PathEncoding, EncodingError> {
    let depth = pos.depth();
    if depth > MAX_TREE_DEPTH {
        return Err(EncodingError::DepthExceeded { pos: pos.index(), depth });
    }
    let mut values = [0.0; MAX_TREE_DEPTH];
    let mut path = pos.ancestors();
    path.reverse();
    path.push(pos);
    for (slot, step) in values.iter_mut().zip(path.iter().skip(1)) {
        *slot = if step.is_left_child() { LEFT_STEP } else { RIGHT_STEP };
    }
    Ok(PathEncoding(values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedTree {
    pub positions: Vec<NodePos>,
    pub relation_ids: Vec<u8>,
    pub nuclearity_ids: Vec<u8>,
    pub path_vectors: Vec<PathEncoding>,
}

impl EncodedTree {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// One TSV row per parent: `pos, relation_id, nuclearity_id, path` with the
    /// path as 12 comma-separated shortest round-trip decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.len() {
            let path: Vec<String> = self.path_vectors[i].0.iter().map(|v| format!("{v}")).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                self.positions[i],
                self.relation_ids[i],
                self.nuclearity_ids[i],
                path.join(",")
            ));
        }
        out
    }
}

/// Encodes the parent nodes of a valid tree in ascending position order.
/// The encoding length is the parent count.
pub fn encode_tree(tree: &RstTree) -> Result<EncodedTree, EncodingError> {
    if tree.parents().is_empty() {
        return Err(EncodingError::EmptyTree);
    }
    tree.ensure_valid()?;
    let mut enc = EncodedTree {
        positions: Vec::with_capacity(tree.parent_count()),
        relation_ids: Vec::with_capacity(tree.parent_count()),
        nuclearity_ids: Vec::with_capacity(tree.parent_count()),
        path_vectors: Vec::with_capacity(tree.parent_count()),
    };
    for (&pos, label) in tree.parents() {
        enc.positions.push(pos);
        enc.relation_ids.push(label.relation.index() as u8);
        enc.nuclearity_ids.push(label.nuclearity.index() as u8);
        enc.path_vectors.push(encode_position(pos)?);
    }
    Ok(enc)
}

/// Exact GELU, `x * Phi(x)` with `Phi` the standard normal CDF.
pub fn gelu(x: f64) -> f64 {
    x * 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Dense layer from the path vector to the hidden size: a
/// `MAX_TREE_DEPTH x hidden` matrix (row-major) and a `hidden` bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionWeights {
    matrix: Vec<f64>,
    bias: Vec<f64>,
    hidden: usize,
}

impl ProjectionWeights {
    pub fn new(matrix: Vec<f64>, bias: Vec<f64>) -> Result<Self, EncodingError> {
        let hidden = bias.len();
        if matrix.len() != MAX_TREE_DEPTH * hidden {
            return Err(EncodingError::ShapeMismatch(format!(
                "matrix has {} entries, expected {MAX_TREE_DEPTH} x {hidden}",
                matrix.len()
            )));
        }
        Ok(ProjectionWeights { matrix, bias, hidden })
    }

    pub fn zeros(hidden: usize) -> Self {
        ProjectionWeights { matrix: vec![0.0; MAX_TREE_DEPTH * hidden], bias: vec![0.0; hidden], hidden }
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.hidden + col]
    }
}

pub fn project_path(enc: &PathEncoding, weights: &ProjectionWeights) -> Vec<f64> {
    (0..weights.hidden)
        .map(|col| {
            let pre = enc.0.iter().enumerate().fold(weights.bias[col], |acc, (row, v)| acc + v * weights.get(row, col));
            gelu(pre)
        })
        .collect()
}

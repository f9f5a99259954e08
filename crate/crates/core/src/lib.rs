//! Symbolic and numeric core for RST-controlled text generation.
//!
//! - [`rst_tree`]: positional binary discourse trees, validation and the tree file format
//! - [`tree_encoding`]: relation/nuclearity ids and root-to-node path vectors
//! - [`tree_sampler`]: count-based child-given-parent tables and constrained tree sampling
//! - [`edu_tracker`]: heuristic EDU boundaries and the leaf cursor used during generation
//! - [`rst_attention`]: ancestor-based attention masks over RST and keyphrase context
//! - [`attention_kernel`]: reference masked attention with finite-difference gradient checks
//! - [`tree_edit`]: positional tree edit distance with relabel/move/insert/delete costs
//! - [`keyphrase_textrank`]: TextRank keyphrase extraction
//! - [`eval_metrics`]: relation recall, length statistics, BLEU-n, Distinct-n and MS-Jaccard

pub mod attention_kernel;
pub mod edu_tracker;
pub mod eval_metrics;
pub mod keyphrase_textrank;
pub mod rst_attention;
pub mod rst_tree;
pub mod tree_edit;
pub mod tree_encoding;
pub mod tree_sampler;

pub use rst_tree::{parse_tree, serialize_tree, NodeLabel, NodePos, Nuclearity, Relation, RstTree, TreeError};

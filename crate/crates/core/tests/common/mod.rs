#![allow(dead_code)]

pub mod exhaustive_ted;
pub mod mask_case;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rst_core::{NodeLabel, NodePos, Nuclearity, Relation, RstTree};

pub fn random_label<R: Rng>(rng: &mut R) -> NodeLabel {
    let rels: Vec<Relation> = Relation::content().collect();
    let nucs: Vec<Nuclearity> = Nuclearity::content().collect();
    NodeLabel::new(*rels.choose(rng).unwrap(), *nucs.choose(rng).unwrap())
}

/// Grows a tree from the root by splitting random leaves until it has
/// `parents` parent nodes (fewer if no leaf can be split within `max_depth`).
pub fn random_tree<R: Rng>(rng: &mut R, parents: usize, max_depth: usize) -> RstTree {
    let mut nodes = BTreeMap::new();
    nodes.insert(NodePos::new(0).unwrap(), random_label(rng));
    let mut leaves = vec![1usize, 2];
    while nodes.len() < parents {
        let open: Vec<usize> = leaves.iter().copied().filter(|&l| depth(l) < max_depth && 2 * l + 2 < 4094).collect();
        let Some(&pick) = open.choose(rng) else { break };
        leaves.retain(|&l| l != pick);
        leaves.extend([2 * pick + 1, 2 * pick + 2]);
        nodes.insert(NodePos::new(pick).unwrap(), random_label(rng));
    }
    RstTree::from_parents(nodes)
}

pub fn depth(mut i: usize) -> usize {
    let mut d = 0;
    while i > 0 {
        i = (i - 1) / 2;
        d += 1;
    }
    d
}

/// Ancestor test by walking raw indices upwards.
pub fn is_ancestor(a: usize, mut b: usize) -> bool {
    while b > 0 {
        b = (b - 1) / 2;
        if b == a {
            return true;
        }
    }
    false
}

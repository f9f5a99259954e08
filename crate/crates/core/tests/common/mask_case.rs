use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rst_core::edu_tracker::TokenAssignment;
use rst_core::rst_attention::ContextLayout;
use rst_core::{NodePos, RstTree};

pub fn random_case(seed: u64) -> (RstTree, TokenAssignment) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parents = rng.gen_range(1..=36);
    let mut tree = super::random_tree(&mut rng, parents, 12);
    let nodes: Vec<NodePos> = tree.parents().keys().copied().chain(tree.derived_leaves()).collect();
    for k in 0..rng.gen_range(0..4) {
        let at = nodes[rng.gen_range(0..nodes.len())];
        let phrase = (0..rng.gen_range(1..4)).map(|w| format!("w{k}{w}")).collect::<Vec<_>>().join(" ");
        tree = tree.with_keyphrase(at, phrase);
    }
    let leaves = tree.leaves_in_order().unwrap();
    let mut pairs = Vec::new();
    let mut leaf = 0;
    for token in 0..rng.gen_range(1..60) {
        if leaf + 1 < leaves.len() && rng.gen_bool(0.3) {
            leaf += rng.gen_range(1..=(leaves.len() - 1 - leaf).min(3));
        }
        pairs.push((token, leaves[leaf]));
    }
    let used: Vec<NodePos> = pairs.iter().map(|p| p.1).collect();
    let unused_leaves = leaves.into_iter().filter(|l| !used.contains(l)).collect();
    (tree, TokenAssignment { pairs, unused_leaves })
}

/// Expected context row for a token on `leaf`, built straight from the
/// layout with raw-index ancestor walks.
pub fn oracle_row(layout: &ContextLayout, leaf: usize) -> Vec<u8> {
    (0..layout.text_start)
        .map(|c| {
            let separator = layout.separators.contains(&c);
            let slot = layout.rst_slots.iter().any(|(s, p)| *s == c && super::is_ancestor(p.index(), leaf));
            let phrase = layout
                .kp_spans
                .iter()
                .any(|(span, q)| span.contains(&c) && (q.index() == leaf || super::is_ancestor(q.index(), leaf)));
            u8::from(separator || slot || phrase)
        })
        .collect()
}

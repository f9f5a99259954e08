mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rst_core::rst_tree::{Violation, MAX_RST_NODE};
use rst_core::tree_encoding::{encode_position, encode_tree, RIGHT_STEP};
use rst_core::{parse_tree, serialize_tree, NodeLabel, NodePos, Nuclearity, Relation};

fn tree_from(seed: u64, parents: usize) -> rst_core::RstTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    common::random_tree(&mut rng, parents, 12)
}

const ALPHABET: &[char] = &['a', 'b', ' ', '\t', '\n', '\\', 'é', '.', 'r'];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn round_trip(seed in any::<u64>(), parents in 1usize..40) {
        let mut tree = tree_from(seed, parents);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for edu in tree.edus_mut() {
            if rng.gen_bool(0.7) {
                let len = rng.gen_range(0..12);
                edu.text = Some((0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect());
            }
        }
        let nodes: Vec<NodePos> = tree.parents().keys().copied().chain(tree.derived_leaves()).collect();
        for _ in 0..rng.gen_range(0..3) {
            let at = nodes[rng.gen_range(0..nodes.len())];
            tree = tree.with_keyphrase(at, "harbour lights");
        }
        prop_assert!(tree.validate().is_ok(), "{}", tree.validate());
        let text = serialize_tree(&tree);
        let back = parse_tree(&text).unwrap();
        prop_assert_eq!(&back, &tree);
        prop_assert_eq!(serialize_tree(&back), text);
    }

    #[test]
    fn leaves_exceed_parents_by_one(seed in any::<u64>(), parents in 1usize..60) {
        let tree = tree_from(seed, parents);
        prop_assert_eq!(tree.leaf_count(), tree.parent_count() + 1);
        prop_assert_eq!(tree.leaves_in_order().unwrap().len(), tree.leaf_count());
    }

    #[test]
    fn mutations_are_rejected(seed in any::<u64>(), parents in 2usize..40) {
        let tree = tree_from(seed, parents);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));

        // an interior parent whose children include a parent node
        let interior: Vec<NodePos> = tree
            .parents()
            .keys()
            .copied()
            .filter(|p| p.children().is_some_and(|(l, r)| tree.is_parent(l) || tree.is_parent(r)))
            .filter(|p| !p.is_root())
            .collect();
        if !interior.is_empty() {
            let mut t = tree.clone();
            t.parents_mut().remove(&interior[rng.gen_range(0..interior.len())]);
            prop_assert!(!t.validate().is_ok());
        }

        let keys: Vec<NodePos> = tree.parents().keys().copied().collect();
        let victim = keys[rng.gen_range(0..keys.len())];
        let mut t = tree.clone();
        t.parents_mut().get_mut(&victim).unwrap().relation = Relation::Null;
        prop_assert!(t.validate().violations.contains(&Violation::NullRelation(victim)));

        let mut t = tree.clone();
        t.parents_mut().get_mut(&victim).unwrap().nuclearity = Nuclearity::Null;
        prop_assert!(!t.validate().is_ok());

        // a parent node hanging below a leaf
        let leaves = tree.derived_leaves();
        let leaf = leaves[rng.gen_range(0..leaves.len())];
        if let Some((child, _)) = leaf.children() {
            if child.children().is_some() {
                let mut t = tree.clone();
                t.parents_mut().insert(child, NodeLabel::new(Relation::Joint, Nuclearity::NN));
                prop_assert!(!t.validate().is_ok());
            }
        }

        let mut t = tree.clone();
        t.edus_mut().pop();
        prop_assert!(!t.validate().is_ok());
    }

    #[test]
    fn encoding_rows_follow_parents(seed in any::<u64>(), parents in 1usize..40) {
        let tree = tree_from(seed, parents);
        let enc = encode_tree(&tree).unwrap();
        prop_assert_eq!(enc.len(), tree.parent_count());
        for (i, pos) in enc.positions.iter().enumerate() {
            let label = tree.label(*pos).unwrap();
            prop_assert_eq!(enc.relation_ids[i] as usize, label.relation.index());
            prop_assert_eq!(enc.nuclearity_ids[i] as usize, label.nuclearity.index());
            prop_assert_eq!(enc.path_vectors[i], encode_position(*pos).unwrap());
        }
    }
}

#[test]
fn path_vectors_extend_parent_paths() {
    for i in 1..MAX_RST_NODE {
        let pos = NodePos::new(i).unwrap();
        let parent = pos.parent().unwrap();
        let (p, c) = (encode_position(parent).unwrap(), encode_position(pos).unwrap());
        let d = common::depth(i);
        assert_eq!(c.path_len(), d);
        assert_eq!(p.0[..d - 1], c.0[..d - 1]);
        let step = if i % 2 == 0 { RIGHT_STEP } else { -RIGHT_STEP };
        assert_eq!(c.0[d - 1], step);
    }
}

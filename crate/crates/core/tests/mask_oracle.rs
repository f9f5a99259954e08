mod common;

use common::mask_case::{oracle_row, random_case};
use proptest::prelude::*;
use rst_core::rst_attention::{context_mask, full_mask, ContextLayout, MaskBuilder};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn context_mask_matches_oracle(seed in any::<u64>()) {
        let (tree, assignment) = random_case(seed);
        let layout = ContextLayout::standard(&tree);
        let mask = context_mask(&tree, &layout, &assignment).unwrap();
        prop_assert_eq!(mask.rows(), assignment.len());
        for (i, &(_, leaf)) in assignment.pairs.iter().enumerate() {
            prop_assert_eq!(mask.row(i), &oracle_row(&layout, leaf.index())[..]);
        }
    }

    #[test]
    fn incremental_builder_matches_full_mask(seed in any::<u64>()) {
        let (tree, assignment) = random_case(seed);
        let layout = ContextLayout::standard(&tree);
        let mut builder = MaskBuilder::new(&tree, &layout).unwrap();
        for &(_, leaf) in &assignment.pairs {
            builder.push(leaf).unwrap();
        }
        prop_assert_eq!(builder.build(), full_mask(&tree, &layout, &assignment).unwrap());
    }
}

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rst_core::tree_edit::{project, Variant};
use rst_core::{NodeLabel, Nuclearity, Relation, RstTree};

type Label = (Option<Relation>, Option<Nuclearity>);
type State = BTreeMap<usize, Label>;

fn childless(state: &State, p: usize) -> bool {
    !state.contains_key(&(2 * p + 1)) && !state.contains_key(&(2 * p + 2))
}

fn sibling(p: usize) -> usize {
    if p % 2 == 1 {
        p + 1
    } else {
        p - 1
    }
}

/// Lower bound on the remaining cost: every insert or delete changes the node
/// count by one at cost 3, and no single edit fills more than one missing
/// position or clears more than one extra position.
fn heuristic(state: &State, goal: &State) -> u32 {
    let missing = goal.keys().filter(|p| !state.contains_key(p)).count() as u32;
    let extra = state.keys().filter(|p| !goal.contains_key(p)).count() as u32;
    let count_gap = (state.len() as i64 - goal.len() as i64).unsigned_abs() as u32;
    (3 * count_gap).max(missing.max(extra))
}

/// A* search over every edit sequence whose positions stay inside
/// the two trees and their siblings, and whose labels come from the target.
pub fn exhaustive(reference: &RstTree, hypothesis: &RstTree, variant: Variant) -> u32 {
    let start: State = project(reference, variant).into_iter().map(|(p, l)| (p.index(), l)).collect();
    let goal: State = project(hypothesis, variant).into_iter().map(|(p, l)| (p.index(), l)).collect();
    let mut universe: BTreeSet<usize> = start.keys().chain(goal.keys()).copied().collect();
    for p in universe.clone() {
        if p > 0 {
            universe.insert(sibling(p));
        }
    }
    let rels: BTreeSet<Option<Relation>> = goal.values().map(|l| l.0).collect();
    let nucs: BTreeSet<Option<Nuclearity>> = goal.values().map(|l| l.1).collect();

    // clearing everything but the root and rebuilding is always possible
    let (r0, g0) = (start[&0], goal[&0]);
    let bound = 3 * (start.len() + goal.len() - 2) as u32 + u32::from(r0.0 != g0.0) + u32::from(r0.1 != g0.1);
    let mut best: HashMap<State, u32> = HashMap::new();
    let mut heap = BinaryHeap::new();
    best.insert(start.clone(), 0);
    heap.push(Reverse((heuristic(&start, &goal), 0u32, start)));
    while let Some(Reverse((_, cost, state))) = heap.pop() {
        if state == goal {
            return cost;
        }
        if best.get(&state).is_some_and(|&c| c < cost) {
            continue;
        }
        let mut next: Vec<(u32, State)> = Vec::new();
        for (&p, &(rel, nuc)) in &state {
            for &r in &rels {
                if r != rel {
                    let mut s = state.clone();
                    s.insert(p, (r, nuc));
                    next.push((1, s));
                }
            }
            for &n in &nucs {
                if n != nuc {
                    let mut s = state.clone();
                    s.insert(p, (rel, n));
                    next.push((1, s));
                }
            }
            if p > 0 && childless(&state, p) {
                let mut s = state.clone();
                s.remove(&p);
                next.push((3, s.clone()));
                let sib = sibling(p);
                if !state.contains_key(&sib) && universe.contains(&sib) {
                    s.insert(sib, (rel, nuc));
                    next.push((1, s));
                }
            }
        }
        for &p in &universe {
            let is_leaf = p > 0 && !state.contains_key(&p) && state.contains_key(&((p - 1) / 2));
            if is_leaf {
                for &r in &rels {
                    for &n in &nucs {
                        let mut s = state.clone();
                        s.insert(p, (r, n));
                        next.push((3, s));
                    }
                }
            }
        }
        for (step, s) in next {
            let c = cost + step;
            if c <= bound && best.get(&s).is_none_or(|&old| c < old) {
                best.insert(s.clone(), c);
                heap.push(Reverse((c + heuristic(&s, &goal), c, s)));
            }
        }
    }
    unreachable!("the goal is always reachable by deleting and inserting")
}

/// Small trees over a small label alphabet so that pairs overlap often.
pub fn small_tree(rng: &mut ChaCha8Rng) -> RstTree {
    let parents = rng.gen_range(1..=4);
    let shape = super::random_tree(rng, parents, 3);
    let rels = [Relation::Elaboration, Relation::Joint, Relation::Contrast];
    let nucs = [Nuclearity::NN, Nuclearity::NS];
    RstTree::from_parents(
        shape
            .parents()
            .keys()
            .map(|&p| (p, NodeLabel::new(*rels.choose(rng).unwrap(), *nucs.choose(rng).unwrap())))
            .collect(),
    )
}

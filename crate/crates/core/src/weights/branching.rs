use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::WeightFn;
use crate::exact::Rational;
use crate::tree::{ClassId, FiniteTree, Multiplicity, NodeId, TreePresentation};

/// Classes grouped by weight value, in increasing order of the value.
pub fn level_sets(p: &TreePresentation, w: &WeightFn) -> Vec<(Rational, Vec<ClassId>)> {
    let mut levels: BTreeMap<Rational, Vec<ClassId>> = BTreeMap::new();
    for c in p.class_ids() {
        levels.entry(w.class(c).clone()).or_default().push(c);
    }
    levels.into_iter().collect()
}

/// Greatest set `E ⊆ members` in which every class reaches, inside `E`, a
/// class with an ω-edge into `E` or at least two edges into `E`. `E` is
/// non-empty iff the unfolding has an ever-branching subset of the nodes
/// whose classes are members.
pub fn ever_branching_core(p: &TreePresentation, members: &[bool]) -> Vec<bool> {
    let mut e = members.to_vec();
    loop {
        let branching: Vec<bool> = p
            .class_ids()
            .map(|c| {
                if !e[c.index()] {
                    return false;
                }
                let into: Vec<&(ClassId, Multiplicity)> =
                    p.children(c).iter().filter(|(d, _)| e[d.index()]).collect();
                into.len() >= 2 || into.iter().any(|(_, m)| *m == Multiplicity::Omega)
            })
            .collect();
        // classes of E that reach a branching class through E (reverse search)
        let mut reaches = branching.clone();
        let mut changed = true;
        while changed {
            changed = false;
            for c in p.class_ids() {
                if e[c.index()]
                    && !reaches[c.index()]
                    && p
                        .children(c)
                        .iter()
                        .any(|(d, _)| e[d.index()] && reaches[d.index()])
                {
                    reaches[c.index()] = true;
                    changed = true;
                }
            }
        }
        let next: Vec<bool> = (0..e.len()).map(|i| e[i] && reaches[i]).collect();
        if next == e {
            return e;
        }
        e = next;
    }
}

/// Classes lying in the ever-branching core of their own level set.
pub fn fan_points(p: &TreePresentation, w: &WeightFn) -> Vec<bool> {
    let mut fan = vec![false; p.len()];
    for (_, level) in level_sets(p, w) {
        let mut members = vec![false; p.len()];
        for c in &level {
            members[c.index()] = true;
        }
        for (i, v) in ever_branching_core(p, &members).into_iter().enumerate() {
            fan[i] |= v;
        }
    }
    fan
}

/// Derivation of a node set `U` of a finite tree: round `k` removes every
/// `w` with `W ∩ [w,∞)` totally ordered, and `i_U(w) = k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationIndex {
    /// `None` outside `U`.
    pub index: Vec<Option<u32>>,
    /// Nodes removed in each round; the survival sequence is the complement.
    pub rounds: Vec<Vec<NodeId>>,
}

pub fn derivation_index(tree: &FiniteTree, members: &[bool]) -> DerivationIndex {
    let n = tree.len();
    let mut alive = members.to_vec();
    let mut index = vec![None; n];
    let mut rounds = Vec::new();
    // children-before-parents order
    let mut order: Vec<NodeId> = Vec::with_capacity(n);
    for &r in tree.roots() {
        order.extend(tree.up_set(r));
    }
    order.reverse();
    let mut round = 0u32;
    while alive.iter().any(|&a| a) {
        // nonempty[v]: W ∩ [v,∞) ≠ ∅; chain[v]: W ∩ [v,∞) totally ordered
        let mut nonempty = vec![false; n];
        let mut chain = vec![true; n];
        for &v in &order {
            let mut occupied = 0;
            let mut all_chains = true;
            for &c in tree.children(v) {
                if nonempty[c.index()] {
                    occupied += 1;
                    all_chains &= chain[c.index()];
                }
            }
            nonempty[v.index()] = alive[v.index()] || occupied > 0;
            chain[v.index()] = occupied <= 1 && all_chains;
        }
        let removed: Vec<NodeId> = tree
            .node_ids()
            .filter(|v| alive[v.index()] && chain[v.index()])
            .collect();
        for &v in &removed {
            alive[v.index()] = false;
            index[v.index()] = Some(round);
        }
        rounds.push(removed);
        round += 1;
    }
    DerivationIndex { index, rounds }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpecialDecomposition {
    /// Antichains of nodes partitioning a finite tree.
    Levels(Vec<Vec<NodeId>>),
    /// Classes grouped so that the nodes of each group form an antichain.
    ClassLevels(Vec<Vec<ClassId>>),
    /// The presentation carries a cycle, forcing constancy on an infinite
    /// branch.
    Failure { cycle: Vec<ClassId> },
}

/// Depth levels of a finite tree.
pub fn special_decomposition_tree(tree: &FiniteTree) -> SpecialDecomposition {
    let mut levels: Vec<Vec<NodeId>> = Vec::new();
    for v in tree.node_ids() {
        let d = tree.depth(v) as usize - 1;
        if levels.len() <= d {
            levels.resize(d + 1, Vec::new());
        }
        levels[d].push(v);
    }
    SpecialDecomposition::Levels(levels)
}

/// Presentation version: acyclic presentations are grouped by longest path
/// from the roots, which is a strictly increasing class-wise weight.
pub fn special_decomposition(p: &TreePresentation) -> SpecialDecomposition {
    if let Some(cycle) = p.cycles().into_iter().next() {
        return SpecialDecomposition::Failure { cycle };
    }
    // sccs() lists components in reverse topological order
    let mut topo: Vec<ClassId> = p.sccs().into_iter().map(|c| c[0]).collect();
    topo.reverse();
    let mut level = vec![0usize; p.len()];
    for &c in &topo {
        for (d, _) in p.children(c) {
            level[d.index()] = level[d.index()].max(level[c.index()] + 1);
        }
    }
    let height = level.iter().copied().max().unwrap_or(0);
    let mut groups = vec![Vec::new(); height + 1];
    for c in p.class_ids() {
        groups[level[c.index()]].push(c);
    }
    SpecialDecomposition::ClassLevels(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::tree::{generate, unfold, UnfoldOptions};
    use std::sync::Arc;

    #[test]
    fn cores() {
        let d = generate::dyadic_loop();
        assert_eq!(ever_branching_core(&d, &[true]), vec![true]);
        let c = generate::comb();
        assert_eq!(ever_branching_core(&c, &[true, true]), vec![false, false]);
        let k = generate::kary(2, 4).unwrap();
        assert!(ever_branching_core(&k, &[true; 4]).iter().all(|v| !v));
        assert_eq!(fan_points(&d, &WeightFn::constant(1, rat(1, 2))), vec![true]);
    }

    #[test]
    fn derivation_on_dyadic() {
        let t = unfold(&Arc::new(generate::dyadic_loop()), UnfoldOptions::new(3, 1)).unwrap();
        let di = derivation_index(&t, &vec![true; t.len()]);
        // leaves, then the middle level, then the root
        assert_eq!(di.rounds.len(), 3);
        assert_eq!(di.index[0], Some(2));
    }

    #[test]
    fn decompositions() {
        let t = unfold(&Arc::new(generate::chain(3).unwrap()), UnfoldOptions::new(1, 1)).unwrap();
        match special_decomposition_tree(&t) {
            SpecialDecomposition::Levels(l) => assert_eq!(l.len(), 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            special_decomposition(&generate::dyadic_loop()),
            SpecialDecomposition::Failure { .. }
        ));
    }
}

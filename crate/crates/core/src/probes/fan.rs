use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::tree::{FiniteTree, NodeId, TreeFn};
use crate::weights::{self, WeightFn};

/// A full dyadic tree `u_σ` (`σ` a 0/1 word) embedded in a finite tree.
#[derive(Debug, Clone)]
pub struct FanEmbedding {
    pub points: BTreeMap<Vec<u8>, NodeId>,
    pub depth: u32,
}

impl FanEmbedding {
    pub fn at(&self, sigma: &[u8]) -> NodeId {
        self.points[sigma]
    }
}

/// Two incomparable nodes of `(v,∞) ∩ T`: the first two minimal elements,
/// descending through single-successor stretches.
fn split(tree: &FiniteTree, members: &[bool], v: NodeId) -> Option<(NodeId, NodeId)> {
    let mut cur = v;
    loop {
        let above: Vec<NodeId> = tree
            .up_set(cur)
            .into_iter()
            .filter(|&x| x != cur && members[x.index()])
            .collect();
        let min = tree.min_of(&above);
        match min.len() {
            0 => return None,
            1 => cur = min[0],
            _ => return Some((min[0], min[1])),
        }
    }
}

/// Embeds a dyadic tree of the given depth above `u` inside `members`.
pub fn embed_dyadic(tree: &FiniteTree, members: &[bool], u: NodeId, depth: u32) -> Result<FanEmbedding> {
    let mut points = BTreeMap::new();
    points.insert(Vec::new(), u);
    let mut frontier = vec![Vec::<u8>::new()];
    for level in 0..depth {
        let mut next = Vec::new();
        for sigma in frontier {
            let v = points[&sigma];
            let (a, b) = split(tree, members, v).ok_or_else(|| Error::PremiseViolated {
                reason: format!("no branching above level {level} of the embedding"),
                witness: tree.label(v),
            })?;
            for (bit, node) in [(0u8, a), (1u8, b)] {
                let mut s = sigma.clone();
                s.push(bit);
                points.insert(s.clone(), node);
                next.push(s);
            }
        }
        frontier = next;
    }
    Ok(FanEmbedding { points, depth })
}

fn add_interval(tree: &FiniteTree, acc: &mut [Rational], lower: NodeId, upper: NodeId, c: &Rational) {
    for x in tree.down_set(upper) {
        if !tree.precedes_eq(x, lower) {
            acc[x.index()] += c;
        }
    }
}

/// `φ` at the embedded point `prefix`, truncated to `levels` levels:
/// `Σ_{n<levels} Σ_{|τ|=n} 2^{-n-1}(1_{(u_{στ},u_{στ0}]} + 1_{(u_{στ},u_{στ1}]})`.
pub fn fan_function(tree: &FiniteTree, emb: &FanEmbedding, prefix: &[u8], levels: u32) -> TreeFn {
    let mut acc = vec![Rational::zero(); tree.len()];
    for (sigma, &node) in &emb.points {
        if !sigma.starts_with(prefix) {
            continue;
        }
        let n = (sigma.len() - prefix.len()) as u32;
        if n >= levels {
            continue;
        }
        let c = exact::pow2_neg(n + 1);
        for bit in [0u8, 1] {
            let mut child = sigma.clone();
            child.push(bit);
            add_interval(tree, &mut acc, node, emb.at(&child), &c);
        }
    }
    TreeFn::from_values(acc)
}

/// The three functions of the midpoint identity
/// `1_{(0,u]} + φ_u = ½[(1_{(0,u₀]} + φ_{u₀}) + (1_{(0,u₁]} + φ_{u₁})]`.
#[derive(Debug, Clone)]
pub struct FanTriple {
    pub u: NodeId,
    pub depth: u32,
    pub middle: TreeFn,
    pub left: TreeFn,
    pub right: TreeFn,
    pub identity_holds: bool,
}

pub fn fan_triple(tree: &FiniteTree, emb: &FanEmbedding) -> FanTriple {
    let d = emb.depth;
    let piece = |prefix: &[u8], levels: u32| {
        TreeFn::indicator_down(tree, emb.at(prefix)).add(&fan_function(tree, emb, prefix, levels))
    };
    let middle = piece(&[], d);
    let left = piece(&[0], d - 1);
    let right = piece(&[1], d - 1);
    let identity_holds = left.add(&right).scale(&exact::rat(1, 2)) == middle;
    FanTriple {
        u: emb.at(&[]),
        depth: d,
        middle,
        left,
        right,
        identity_holds,
    }
}

/// Node-level fan points: nodes whose class lies in the ever-branching core
/// of its weight level set.
pub fn fan_nodes(tree: &FiniteTree, w: &WeightFn) -> Vec<bool> {
    let classes = weights::fan_points(tree.presentation(), w);
    tree.node_ids().map(|n| classes[tree.class_of(n).index()]).collect()
}

/// The deepest fan triple (up to `max_depth`) rooted at the first fan node.
pub fn deepest_fan_triple(tree: &FiniteTree, w: &WeightFn, max_depth: u32) -> Option<FanTriple> {
    let fan = fan_nodes(tree, w);
    let u = tree.node_ids().find(|n| fan[n.index()])?;
    let rho = w.node(tree, u).clone();
    let members: Vec<bool> = tree
        .node_ids()
        .map(|n| fan[n.index()] && *w.node(tree, n) == rho)
        .collect();
    (1..=max_depth)
        .rev()
        .find_map(|d| embed_dyadic(tree, &members, u, d).ok())
        .map(|emb| fan_triple(tree, &emb))
}

use num_traits::Zero;

use super::{combine_lines, ordinal_sq, osc_sq};
use crate::error::{Error, Result};
use crate::exact::{self, NormValue, Rational};
use crate::operators::TreeOperators;
use crate::tree::{FiniteTree, NodeId, TreeFn};
use crate::weights::WeightFn;

/// Largest index set (tree nodes) accepted by [`composite_lur`].
pub const LUR_INDEX_CAP: usize = 8;
/// Largest tree accepted by [`composite_mlur`]; its index set has two
/// entries per node.
pub const MLUR_NODE_CAP: usize = 5;

fn check_cap(tree: &FiniteTree, cap: usize, what: &str) -> Result<()> {
    if tree.len() > cap {
        return Err(Error::SizeBudgetExceeded {
            what: what.into(),
            needed: tree.len(),
            cap,
        });
    }
    Ok(())
}

fn mask_of(nodes: &[NodeId]) -> u32 {
    nodes.iter().fold(0, |m, n| m | (1 << n.index()))
}

fn restrict(f: &TreeFn, nodes: &[NodeId]) -> Vec<Rational> {
    nodes.iter().map(|n| f.get(*n).clone()).collect()
}

fn sup_sq_outside(f: &TreeFn, covered: u32) -> Rational {
    let mut best = Rational::zero();
    for (i, v) in f.values().iter().enumerate() {
        if covered & (1 << i) == 0 {
            let sq = v * v;
            if sq > best {
                best = sq;
            }
        }
    }
    best
}

/// Sum over `m` of `2^{-m}` times the squared norm built from index sets of
/// size `m`, with `I` the nodes, `U_i = (0,i]` carrying the chain norm and
/// `φ(F)² = Σ_{i∈F} (Sf)(i)²`,
/// `ψ(F)² = ‖f·1_{L∖∪U_i}‖∞² + Σ_{i∈F} ‖f↾U_i‖²`.
pub struct CompositeLur<'a> {
    ops: TreeOperators<'a>,
    chains: Vec<Vec<NodeId>>,
}

pub fn composite_lur<'a>(tree: &'a FiniteTree, w: &'a WeightFn) -> Result<CompositeLur<'a>> {
    check_cap(tree, LUR_INDEX_CAP, "composite LUR index set")?;
    let ops = TreeOperators::new(tree, w)?;
    let chains = tree.node_ids().map(|t| tree.down_set(t)).collect();
    Ok(CompositeLur { ops, chains })
}

impl CompositeLur<'_> {
    pub fn square(&self, f: &TreeFn) -> Rational {
        let n = self.chains.len();
        let s_sq: Vec<Rational> = (0..n)
            .map(|i| {
                let v = self.ops.s_at(f, NodeId(i as u32));
                &v * &v
            })
            .collect();
        let chain_sq: Vec<Rational> = self.chains.iter().map(|c| ordinal_sq(&restrict(f, c))).collect();
        let cover: Vec<u32> = self.chains.iter().map(|c| mask_of(c)).collect();
        let sup = f.sup_norm();
        let base = &sup * &sup;
        let mut lines_by_size: Vec<Vec<(Rational, Rational)>> = vec![Vec::new(); n + 1];
        for subset in 1u32..(1 << n) {
            let mut phi = Rational::zero();
            let mut psi = Rational::zero();
            let mut covered = 0;
            for i in (0..n).filter(|i| subset & (1 << i) != 0) {
                phi += &s_sq[i];
                psi += &chain_sq[i];
                covered |= cover[i];
            }
            psi += sup_sq_outside(f, covered);
            lines_by_size[subset.count_ones() as usize].push((phi, psi));
        }
        let mut total = Rational::zero();
        for (m, lines) in lines_by_size.iter().enumerate().skip(1) {
            total += exact::pow2_neg(m as u32) * (&base + combine_lines(lines));
        }
        total
    }

    pub fn norm(&self, f: &TreeFn) -> NormValue {
        NormValue::from_square(self.square(f))
    }
}

/// The midpoint-convex composite over `I = nodes × {R, S}` with operator
/// `R ⊕ S`, `U_t = (0,t] ∪ (a(t),b(t)]` read as a chain (root path first,
/// then the branch towards `b(t)`), `V_t = [t,∞)` carrying the oscillation
/// norm:
/// `‖f‖² = ‖f‖∞² + Σ_m 2^{-m-2^m} Σ_π Σ_l 2^{-l} sup_{#F=m} [φ(F)² + 2^{-l}ψ(π,F)²]`.
pub struct CompositeMlur<'a> {
    ops: TreeOperators<'a>,
    /// Linearized `U_t` per node.
    pub u_sets: Vec<Vec<NodeId>>,
    pub v_sets: Vec<Vec<NodeId>>,
}

/// `a(t)`: the least `s ∈ (0,t]` with `ρ(s) = ρ(t)`.
pub fn level_start(tree: &FiniteTree, w: &WeightFn, t: NodeId) -> NodeId {
    let rt = w.node(tree, t);
    *tree
        .down_set(t)
        .iter()
        .find(|s| w.node(tree, **s) == rt)
        .expect("t itself has the same weight")
}

pub fn composite_mlur<'a>(tree: &'a FiniteTree, w: &'a WeightFn) -> Result<CompositeMlur<'a>> {
    check_cap(tree, MLUR_NODE_CAP, "composite MLUR tree")?;
    let ops = TreeOperators::new(tree, w)?;
    let mut u_sets = Vec::new();
    let mut v_sets = Vec::new();
    for t in tree.node_ids() {
        let mut u = tree.down_set(t);
        let a = level_start(tree, w, t);
        let rt = w.node(tree, t);
        let b = tree
            .up_set(a)
            .into_iter()
            .filter(|&x| !ops.nodes[x.index()].good && w.node(tree, x) == rt)
            .min();
        if let Some(b) = b {
            for x in tree.down_set(b) {
                if tree.precedes(a, x) && !u.contains(&x) {
                    u.push(x);
                }
            }
        }
        u_sets.push(u);
        v_sets.push(tree.up_set(t));
    }
    Ok(CompositeMlur { ops, u_sets, v_sets })
}

impl CompositeMlur<'_> {
    pub fn square(&self, f: &TreeFn) -> Rational {
        let n = self.u_sets.len();
        let k = 2 * n;
        let r = self.ops.r(f);
        let s = self.ops.s(f);
        // index 2t is (t,R), 2t+1 is (t,S)
        let t_sq: Vec<Rational> = (0..k)
            .map(|i| {
                let node = NodeId((i / 2) as u32);
                let v = if i % 2 == 0 { r.get(&node) } else { s.get(&node) };
                &v * &v
            })
            .collect();
        let u_sq: Vec<Rational> = self.u_sets.iter().map(|u| ordinal_sq(&restrict(f, u))).collect();
        let v_sq: Vec<Rational> = self.v_sets.iter().map(|v| osc_sq(&restrict(f, v))).collect();
        let u_mask: Vec<u32> = self.u_sets.iter().map(|u| mask_of(u)).collect();
        let v_mask: Vec<u32> = self.v_sets.iter().map(|v| mask_of(v)).collect();
        let sup = f.sup_norm();
        let mut total = &sup * &sup;
        for m in 1..=k {
            let subsets: Vec<Vec<usize>> = (1u32..(1 << k))
                .filter(|x| x.count_ones() as usize == m)
                .map(|x| (0..k).filter(|i| x & (1 << i) != 0).collect())
                .collect();
            let mut sum_pi = Rational::zero();
            for pi in 0u32..(1 << m) {
                let lines: Vec<(Rational, Rational)> = subsets
                    .iter()
                    .map(|fam| {
                        let mut phi = Rational::zero();
                        let mut psi = Rational::zero();
                        let mut covered = 0;
                        for (j, &i) in fam.iter().enumerate() {
                            let node = i / 2;
                            phi += &t_sq[i];
                            psi += &u_sq[node];
                            covered |= u_mask[node];
                            if pi & (1 << j) != 0 {
                                psi += &v_sq[node];
                                covered |= v_mask[node];
                            }
                        }
                        psi += sup_sq_outside(f, covered);
                        (phi, psi)
                    })
                    .collect();
                sum_pi += combine_lines(&lines);
            }
            let weight = exact::pow2_neg(m as u32 + (1u32 << m));
            total += weight * sum_pi;
        }
        total
    }

    pub fn norm(&self, f: &TreeFn) -> NormValue {
        NormValue::from_square(self.square(f))
    }
}

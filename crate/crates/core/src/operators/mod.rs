//! Linear and nonlinear maps from functions on a finite tree into
//! `c₀`-type families: the jump operator `R`, the good-point operator `S`,
//! the special-pair and dyadic Talagrand operators, and the bump map.

mod bump;

pub use bump::{
    bump_map, cutoff_phi, cutoff_psi, reconstruct_rf, saturating_level, select_reconstruction, BumpMap,
    Reconstruction,
};

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::tree::{FiniteTree, NodeId, TreeFn};
use crate::weights::{classify_points, derivation_index, NodeClass, WeightFn};

/// Finitely supported rational family; zero entries are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedFamily<K: Ord> {
    entries: BTreeMap<K, Rational>,
}

impl<K: Ord + Clone> Default for IndexedFamily<K> {
    fn default() -> Self {
        IndexedFamily {
            entries: BTreeMap::new(),
        }
    }
}

impl<K: Ord + Clone> IndexedFamily<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, k: K, v: Rational) {
        if v.is_zero() {
            self.entries.remove(&k);
        } else {
            self.entries.insert(k, v);
        }
    }

    pub fn get(&self, k: &K) -> Rational {
        self.entries.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &Rational)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<Rational> {
        self.entries.values().cloned().collect()
    }

    pub fn sup(&self) -> Rational {
        exact::max_abs(self.entries.values())
    }

    pub fn l1(&self) -> Rational {
        self.entries
            .values()
            .fold(Rational::zero(), |acc, v| acc + v.abs())
    }

    /// Entries as `(index, "p/q")` pairs for reports.
    pub fn to_doc(&self) -> Vec<(String, String)>
    where
        K: Debug,
    {
        self.entries
            .iter()
            .map(|(k, v)| (format!("{k:?}"), exact::format_rational(v)))
            .collect()
    }
}

/// `R`, `S` and the special-pair operator on one weighted finite tree.
#[derive(Debug, Clone)]
pub struct TreeOperators<'a> {
    pub tree: &'a FiniteTree,
    pub weight: &'a WeightFn,
    pub nodes: Vec<NodeClass>,
    rho: Vec<Rational>,
}

impl<'a> TreeOperators<'a> {
    pub fn new(tree: &'a FiniteTree, weight: &'a WeightFn) -> Result<TreeOperators<'a>> {
        let nodes = classify_points(tree.presentation(), weight)?.nodes(tree);
        Ok(TreeOperators {
            tree,
            weight,
            nodes,
            rho: weight.per_node(tree),
        })
    }

    pub fn rho(&self, n: NodeId) -> &Rational {
        &self.rho[n.index()]
    }

    /// `(Rf)(t) = (ρ(t) - ρ(t⁻)) f(t)`, with `ρ(0) = 0`.
    pub fn r(&self, f: &TreeFn) -> IndexedFamily<NodeId> {
        let mut out = IndexedFamily::new();
        for t in self.tree.node_ids() {
            let below = self
                .tree
                .parent(t)
                .map(|p| self.rho[p.index()].clone())
                .unwrap_or_else(Rational::zero);
            out.insert(t, (&self.rho[t.index()] - below) * f.get(t));
        }
        out
    }

    /// `(Sf)(t) = δ_t/(1+#F_t) · [f(t) - Σ_{u∈F_t} f(u)]` at good `t`, 0 at bad.
    pub fn s_at(&self, f: &TreeFn, t: NodeId) -> Rational {
        let nc = &self.nodes[t.index()];
        if !nc.good {
            return Rational::zero();
        }
        let sum = nc.f.iter().fold(Rational::zero(), |acc, u| acc + f.get(*u));
        let k = Rational::from_integer((nc.f.len() as i64 + 1).into());
        &nc.delta / k * (f.get(t) - sum)
    }

    pub fn s(&self, f: &TreeFn) -> IndexedFamily<NodeId> {
        let mut out = IndexedFamily::new();
        for t in self.tree.node_ids() {
            out.insert(t, self.s_at(f, t));
        }
        out
    }

    /// Columns `R 1_{(0,u]} ⊕ S 1_{(0,u]}`, one per node `u`; rows are the
    /// `R` coordinates followed by the `S` coordinates.
    pub fn rs_matrix(&self) -> Vec<Vec<Rational>> {
        let n = self.tree.len();
        let mut m = vec![vec![Rational::zero(); n]; 2 * n];
        for u in self.tree.node_ids() {
            let f = TreeFn::indicator_down(self.tree, u);
            for (t, v) in self.r(&f).iter() {
                m[t.index()][u.index()] = v.clone();
            }
            for (t, v) in self.s(&f).iter() {
                m[n + t.index()][u.index()] = v.clone();
            }
        }
        m
    }

    /// For each `u`, the `s` with `(s,u)` special: `s = u`, or `ρ(s) = ρ(u)`
    /// and some `t ∈ s⁺` with `t ⪯ u` has `i(t) < i(s)`, where `i` is the
    /// derivation index of the level set `ρ⁻¹(ρ(s))`.
    pub fn special_pairs(&self) -> Result<Vec<Vec<NodeId>>> {
        if self.tree.presentation().is_cyclic() {
            return Err(Error::UnsupportedPresentation(
                "special pairs need an acyclic presentation".into(),
            ));
        }
        let n = self.tree.len();
        let mut index: Vec<Option<u32>> = vec![None; n];
        let mut levels: BTreeMap<&Rational, Vec<bool>> = BTreeMap::new();
        for t in self.tree.node_ids() {
            levels
                .entry(&self.rho[t.index()])
                .or_insert_with(|| vec![false; n])[t.index()] = true;
        }
        for members in levels.values() {
            let di = derivation_index(self.tree, members);
            for (i, v) in di.index.iter().enumerate() {
                if members[i] {
                    index[i] = *v;
                }
            }
        }
        let mut specials: Vec<Vec<NodeId>> = (0..n).map(|u| vec![NodeId(u as u32)]).collect();
        for s in self.tree.node_ids() {
            for &t in self.tree.children(s) {
                if self.rho[t.index()] != self.rho[s.index()] || index[t.index()] >= index[s.index()] {
                    continue;
                }
                for u in self.tree.up_set(t) {
                    if self.rho[u.index()] == self.rho[s.index()] && !specials[u.index()].contains(&s) {
                        specials[u.index()].push(s);
                    }
                }
            }
        }
        for v in &mut specials {
            v.sort();
        }
        Ok(specials)
    }

    /// `(Tf)(s,u) = (Sf)(u)` on special pairs, 0 elsewhere.
    pub fn t_special(&self, f: &TreeFn) -> Result<IndexedFamily<(NodeId, NodeId)>> {
        let specials = self.special_pairs()?;
        Ok(self.t_special_with(&specials, f))
    }

    pub fn t_special_with(&self, specials: &[Vec<NodeId>], f: &TreeFn) -> IndexedFamily<(NodeId, NodeId)> {
        let mut out = IndexedFamily::new();
        for u in self.tree.node_ids() {
            let v = self.s_at(f, u);
            if v.is_zero() {
                continue;
            }
            for &s in &specials[u.index()] {
                out.insert((s, u), v.clone());
            }
        }
        out
    }
}

/// Dyadic shape data: for each internal `t`, the equal-weight child `t*` and
/// the other child `t̃`.
#[derive(Debug, Clone)]
pub struct DyadicShape {
    pub equal: Vec<Option<NodeId>>,
    pub gap: Vec<Rational>,
}

/// Checks that every internal node has exactly two children, exactly one of
/// them with equal weight. Leaves get gap 1 and no equal child.
pub fn dyadic_shape(tree: &FiniteTree, w: &WeightFn) -> Result<DyadicShape> {
    let mut equal = vec![None; tree.len()];
    let mut gap = vec![Rational::from_integer(1.into()); tree.len()];
    for t in tree.node_ids() {
        let kids = tree.children(t);
        if kids.is_empty() {
            continue;
        }
        if kids.len() != 2 {
            return Err(Error::ShapeViolation {
                node: t.index(),
                reason: format!("{} children, expected 2", kids.len()),
            });
        }
        let rt = w.node(tree, t);
        let eq: Vec<NodeId> = kids.iter().copied().filter(|&c| w.node(tree, c) == rt).collect();
        if eq.len() != 1 {
            return Err(Error::ShapeViolation {
                node: t.index(),
                reason: format!("{} children with equal weight, expected 1", eq.len()),
            });
        }
        let other = if kids[0] == eq[0] { kids[1] } else { kids[0] };
        equal[t.index()] = Some(eq[0]);
        gap[t.index()] = w.node(tree, other) - rt;
    }
    Ok(DyadicShape { equal, gap })
}

/// `(Tf)(t) = (ρ(t̃) - ρ(t)) (f(t) - f(t*))`.
pub fn t_dyadic(tree: &FiniteTree, w: &WeightFn, f: &TreeFn) -> Result<IndexedFamily<NodeId>> {
    let shape = dyadic_shape(tree, w)?;
    Ok(t_dyadic_with(tree, &shape, f))
}

pub fn t_dyadic_with(tree: &FiniteTree, shape: &DyadicShape, f: &TreeFn) -> IndexedFamily<NodeId> {
    let mut out = IndexedFamily::new();
    for t in tree.node_ids() {
        let partner = f.at(shape.equal[t.index()]);
        out.insert(t, &shape.gap[t.index()] * (f.get(t) - partner));
    }
    out
}

/// Exact rank over the rationals (Gaussian elimination).
pub fn linear_rank(matrix: &[Vec<Rational>]) -> usize {
    let mut m: Vec<Vec<Rational>> = matrix.to_vec();
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = m[rank][col].recip();
        for v in &mut m[rank][col..] {
            *v *= &inv;
        }
        let pivot_row = m[rank].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != rank && !row[col].is_zero() {
                let factor = row[col].clone();
                for (v, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *v -= p * &factor;
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Sparse `row col value` lines for a matrix.
pub fn to_triplets(matrix: &[Vec<Rational>]) -> String {
    let mut out = String::new();
    for (i, row) in matrix.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_zero() {
                out.push_str(&format!("{i} {j} {}\n", exact::format_rational(v)));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TalagrandCounterexample {
    pub sample: usize,
    pub f: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TalagrandReport {
    pub samples: usize,
    pub skipped_zero: usize,
    pub witnessed: usize,
    pub counterexamples: Vec<TalagrandCounterexample>,
}

/// For each non-zero sample, looks for an index whose value is non-zero and
/// whose base point `t` has `|f(t)| = ‖f‖∞`. The oracle returns the non-zero
/// entries of `Tf` as `(base point, value)`.
pub fn check_talagrand<O>(samples: &[TreeFn], oracle: O) -> Result<TalagrandReport>
where
    O: Fn(&TreeFn) -> Result<Vec<(NodeId, Rational)>>,
{
    let mut report = TalagrandReport {
        samples: samples.len(),
        skipped_zero: 0,
        witnessed: 0,
        counterexamples: Vec::new(),
    };
    for (i, f) in samples.iter().enumerate() {
        if f.is_zero() {
            report.skipped_zero += 1;
            continue;
        }
        let norm = f.sup_norm();
        let found = oracle(f)?
            .into_iter()
            .any(|(t, v)| !v.is_zero() && f.get(t).abs() == norm);
        if found {
            report.witnessed += 1;
        } else {
            report.counterexamples.push(TalagrandCounterexample {
                sample: i,
                f: f.values().iter().map(exact::format_rational).collect(),
            });
        }
    }
    Ok(report)
}

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::IndexedFamily;
use crate::exact::{self, Rational};
use crate::tree::{FiniteTree, NodeId, TreeFn};

/// Quintic smoothstep cutoff: 0 for `|x| ≤ 1/2`, 1 for `|x| ≥ 1`.
pub fn cutoff_phi(x: &Rational) -> Rational {
    let a = x.abs();
    let half = exact::rat(1, 2);
    if a <= half {
        return Rational::zero();
    }
    if a >= Rational::one() {
        return Rational::one();
    }
    let u = a * Rational::from_integer(2.into()) - Rational::one();
    let u3 = &u * &u * &u;
    let poly = &u * &u * exact::int(6) - &u * exact::int(15) + exact::int(10);
    u3 * poly
}

pub fn cutoff_psi(x: &Rational) -> Rational {
    Rational::one() - cutoff_phi(x)
}

/// Output of the bump map on a finite tree.
#[derive(Debug, Clone)]
pub struct BumpMap {
    pub values: IndexedFamily<(NodeId, u32)>,
    pub n_max: u32,
    /// Index `(s,n)` with `|f(s)| = ‖f‖∞` and non-zero value, if any.
    pub witness: Option<(NodeId, u32)>,
    /// `(Sf, x)` lies in `U(L)` with `x = ½‖f‖∞·Tf`.
    pub in_u: bool,
}

fn bump_at(tree: &FiniteTree, f: &TreeFn, s: NodeId, n: u32) -> Rational {
    let fs = f.get(s).clone();
    if fs.is_zero() {
        return Rational::zero();
    }
    let scale = exact::pow2_neg(n);
    let up = Rational::one() / &scale;
    let mut v = &scale * cutoff_phi(&(&up * &fs));
    for &t in tree.children(s) {
        let ft = f.get(t).clone();
        if ft == fs {
            return Rational::zero();
        }
        if v.is_zero() {
            continue;
        }
        let arg = &scale * &ft / (&ft - &fs);
        v *= cutoff_psi(&arg);
    }
    v
}

/// `(Tf)(s,n) = 2^{-n} φ(2ⁿ f(s)) Π_{t∈s⁺} ψ(2^{-n} f(t)/(f(t)-f(s)))`, or 0
/// when `f(s) = 0` or some immediate successor repeats `f(s)`, for `n ≤ n_max`.
pub fn bump_map(tree: &FiniteTree, f: &TreeFn, n_max: u32) -> BumpMap {
    let mut values = IndexedFamily::new();
    for s in tree.node_ids() {
        for n in 0..=n_max {
            values.insert((s, n), bump_at(tree, f, s, n));
        }
    }
    let norm = f.sup_norm();
    let witness = values
        .iter()
        .find(|((s, _), _)| f.get(*s).abs() == norm)
        .map(|(k, _)| *k);
    // Sf(s,n) = f(s); x = ½‖f‖ Tf
    let mut m = Rational::zero();
    let mut x_sup = Rational::zero();
    for s in tree.node_ids() {
        for n in 0..=n_max {
            let x = values.get(&(s, n)) * &norm / exact::int(2);
            let here = f.get(s).abs() + x.abs() / exact::int(2);
            if here > m {
                m = here;
            }
            if x.abs() > x_sup {
                x_sup = x.abs();
            }
        }
    }
    let in_u = norm.is_zero() || (norm < m && x_sup < m);
    BumpMap {
        values,
        n_max,
        witness,
        in_u,
    }
}

/// Smallest `n` with `(Tf)(s,n) = 2^{-n}` by the cutoff argument: `2ⁿ|f(s)| ≥ 1`
/// and `2^{-n}|f(t)/(f(t)-f(s))| ≤ 1/2` for every immediate successor `t`.
/// `None` if `f(s) = 0` or a successor repeats `f(s)`.
pub fn saturating_level(tree: &FiniteTree, f: &TreeFn, s: NodeId) -> Option<u32> {
    let fs = f.get(s).abs();
    if fs.is_zero() {
        return None;
    }
    let mut ratio = Rational::zero();
    for &t in tree.children(s) {
        let ft = f.get(t).clone();
        if &ft == f.get(s) {
            return None;
        }
        let r = (&ft / (&ft - f.get(s))).abs();
        if r > ratio {
            ratio = r;
        }
    }
    let mut n = 0u32;
    let two = exact::int(2);
    loop {
        let p = exact::pow2_neg(n);
        let lifted = &fs / &p;
        if lifted >= Rational::one() && &p * &ratio * &two <= Rational::one() {
            return Some(n);
        }
        n += 1;
    }
}

/// `(R_F f)(s) = f(s)` if `s ⪯ t` for some `(t,n) ∈ F`, else 0.
pub fn reconstruct_rf(tree: &FiniteTree, f: &TreeFn, family: &[(NodeId, u32)]) -> TreeFn {
    let mut keep = vec![false; tree.len()];
    for (t, _) in family {
        for s in tree.down_set(*t) {
            keep[s.index()] = true;
        }
    }
    let values = tree
        .node_ids()
        .map(|s| if keep[s.index()] { f.get(s).clone() } else { Rational::zero() })
        .collect();
    TreeFn::from_values(values)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Reconstruction {
    #[serde(with = "crate::exact::serde_rational")]
    pub delta: Rational,
    pub family: Vec<(NodeId, u32)>,
    #[serde(with = "crate::exact::serde_rational")]
    pub error: Rational,
}

/// Threshold selection: `M` the maximal nodes of `{|f| ≥ ε}`, `n_t` the
/// saturating level of each `t ∈ M`, `δ = 2^{-max n_t}` and
/// `F = {(s,m) : (Tf)(s,m) ≥ δ}`.
pub fn select_reconstruction(tree: &FiniteTree, f: &TreeFn, eps: &Rational) -> Reconstruction {
    let big: Vec<NodeId> = tree.node_ids().filter(|&t| f.get(t).abs() >= *eps).collect();
    let maximal = tree.max_of(&big);
    let levels: Vec<u32> = maximal
        .iter()
        .filter_map(|&t| saturating_level(tree, f, t))
        .collect();
    let top = levels.iter().copied().max();
    let (delta, family) = match top {
        None => (Rational::one(), Vec::new()),
        Some(top) => {
            let delta = exact::pow2_neg(top);
            let family = tree
                .node_ids()
                .flat_map(|s| (0..=top).map(move |m| (s, m)))
                .filter(|&(s, m)| bump_at(tree, f, s, m) >= delta)
                .collect();
            (delta, family)
        }
    };
    let error = f.sub(&reconstruct_rf(tree, f, &family)).sup_norm();
    Reconstruction {
        delta,
        family,
        error,
    }
}

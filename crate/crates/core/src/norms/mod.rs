//! Norm evaluators. Everything whose square is rational is computed exactly;
//! the Kadec system is solved in floating point with a certified radius.

mod composite;
mod kadec;

pub use composite::{composite_lur, composite_mlur, CompositeLur, CompositeMlur, MLUR_NODE_CAP, LUR_INDEX_CAP};
pub use kadec::{antichain_mean, kadec_norm, monotone_distance, KadecOptions, KadecReport, KadecSolver};

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, geometric_max_sum, NormValue, Rational};
use crate::tree::{FiniteTree, TreeFn};
use crate::weights::WeightFn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Elementary {
    Sup,
    Osc,
}

pub fn sup_sq(values: &[Rational]) -> Rational {
    let s = exact::max_abs(values);
    &s * &s
}

/// `osc(f) = max f - min f` over the given values (no phantom zero).
pub fn osc(values: &[Rational]) -> Rational {
    let Some(first) = values.first() else {
        return Rational::zero();
    };
    let (mut lo, mut hi) = (first.clone(), first.clone());
    for v in values {
        if *v < lo {
            lo = v.clone();
        }
        if *v > hi {
            hi = v.clone();
        }
    }
    hi - lo
}

/// `‖f‖²_osc = ‖f‖∞² + osc(f)²`.
pub fn osc_sq(values: &[Rational]) -> Rational {
    let o = osc(values);
    sup_sq(values) + &o * &o
}

pub fn elementary_norm(values: &[Rational], kind: Elementary) -> NormValue {
    match kind {
        Elementary::Sup => NormValue::exact(exact::max_abs(values)),
        Elementary::Osc => NormValue::from_square(osc_sq(values)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayMode {
    Sorted,
    Recursive,
}

/// Largest support handled by the subset recursion.
pub const DAY_RECURSIVE_CAP: usize = 16;

/// `Σ 2^{-n} x_(n)²` with `|x|` arranged in decreasing order.
pub fn day_sq_sorted(values: &[Rational]) -> Rational {
    let mut abs: Vec<Rational> = values.iter().map(|v| v.abs()).filter(|v| !v.is_zero()).collect();
    abs.sort_by(|a, b| b.cmp(a));
    let mut w = Rational::one();
    let half = exact::rat(1, 2);
    let mut total = Rational::zero();
    for v in abs {
        w *= &half;
        total += &w * &v * &v;
    }
    total
}

/// `Φ(Δ)² = Σ_m 2^{-m} max_{t∈Δ} [½x_t² + (2/3)^m Φ(Δ∖{t})²]`, `Φ(∅) = 0`,
/// over the support of `x`, memoized by subset.
pub fn day_sq_recursive(values: &[Rational]) -> Result<Rational> {
    let support: Vec<Rational> = values.iter().filter(|v| !v.is_zero()).cloned().collect();
    let n = support.len();
    if n > DAY_RECURSIVE_CAP {
        return Err(Error::SizeBudgetExceeded {
            what: "day norm support".into(),
            needed: n,
            cap: DAY_RECURSIVE_CAP,
        });
    }
    let half = exact::rat(1, 2);
    let two_thirds = exact::rat(2, 3);
    let mut memo = vec![Rational::zero(); 1 << n];
    for mask in 1usize..(1 << n) {
        let lines: Vec<(Rational, Rational)> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| (&half * &support[i] * &support[i], memo[mask & !(1 << i)].clone()))
            .collect();
        memo[mask] = geometric_max_sum(&half, &two_thirds, &lines);
    }
    Ok(memo[(1 << n) - 1].clone())
}

pub fn day_norm(values: &[Rational], mode: DayMode) -> Result<NormValue> {
    let sq = match mode {
        DayMode::Sorted => day_sq_sorted(values),
        DayMode::Recursive => day_sq_recursive(values)?,
    };
    Ok(NormValue::from_square(sq))
}

/// Squared values `Φ(f,α,γ)²` of the chain norm for every interval of a
/// finite chain, from the recursion
/// `16Φ(α,γ)² = 4‖f‖² + f(α)² + osc² + Σ_m 2^{-m} max_{α≤β<γ}[(f(β+1)-f(β))² + 2^{-m}(Φ(α,β)² + Φ(β+1,γ)²)]`.
#[derive(Debug, Clone)]
pub struct OrdinalTable {
    len: usize,
    sq: Vec<Rational>,
}

impl OrdinalTable {
    pub fn new(values: &[Rational]) -> OrdinalTable {
        let n = values.len();
        let mut sq = vec![Rational::zero(); n * n];
        let half = exact::rat(1, 2);
        let sixteen = exact::int(16);
        for a in 0..n {
            sq[a * n + a] = &values[a] * &values[a];
        }
        for width in 1..n {
            for a in 0..n - width {
                let g = a + width;
                let seg = &values[a..=g];
                let o = osc(seg);
                let mut total = sup_sq(seg) * exact::int(4) + &values[a] * &values[a] + &o * &o;
                let lines: Vec<(Rational, Rational)> = (a..g)
                    .map(|b| {
                        let d = &values[b + 1] - &values[b];
                        (&d * &d, &sq[a * n + b] + &sq[(b + 1) * n + g])
                    })
                    .collect();
                total += geometric_max_sum(&half, &half, &lines);
                sq[a * n + g] = total / &sixteen;
            }
        }
        OrdinalTable { len: n, sq }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn square(&self, alpha: usize, gamma: usize) -> Result<Rational> {
        if alpha > gamma || gamma >= self.len {
            return Err(Error::IndexOutOfRange(format!(
                "interval [{alpha},{gamma}] on a chain of length {}",
                self.len
            )));
        }
        Ok(self.sq[alpha * self.len + gamma].clone())
    }

    /// `Φ(f,0,Ω)²`; 0 on the empty chain.
    pub fn full_square(&self) -> Rational {
        if self.len == 0 {
            Rational::zero()
        } else {
            self.sq[self.len - 1].clone()
        }
    }
}

pub fn ordinal_norm(values: &[Rational], alpha: usize, gamma: usize) -> Result<NormValue> {
    if alpha > gamma || gamma >= values.len() {
        return Err(Error::IndexOutOfRange(format!(
            "interval [{alpha},{gamma}] on a chain of length {}",
            values.len()
        )));
    }
    let table = OrdinalTable::new(&values[alpha..=gamma]);
    Ok(NormValue::from_square(table.full_square()))
}

/// Squared chain norm of the whole chain; 0 when empty.
pub fn ordinal_sq(values: &[Rational]) -> Rational {
    OrdinalTable::new(values).full_square()
}

/// Norm oracle returning squared values.
pub type SquaredOracle<'a> = Box<dyn Fn(&TreeFn) -> Rational + 'a>;

/// `θ(f) = ‖f‖₀² + Σ_m 2^{-m} sup_i [φ_i(f)² + 2^{-m}ψ_i(f)²]`; the induced
/// norm is `θ^{1/2}`. Oracles return squared values.
pub struct CombineLur<'a> {
    pub base: SquaredOracle<'a>,
    pub families: Vec<(SquaredOracle<'a>, SquaredOracle<'a>)>,
}

impl<'a> CombineLur<'a> {
    pub fn new(base: SquaredOracle<'a>) -> CombineLur<'a> {
        CombineLur {
            base,
            families: Vec::new(),
        }
    }

    pub fn with(mut self, phi: SquaredOracle<'a>, psi: SquaredOracle<'a>) -> CombineLur<'a> {
        self.families.push((phi, psi));
        self
    }

    pub fn theta(&self, f: &TreeFn) -> Rational {
        let lines: Vec<(Rational, Rational)> = self.families.iter().map(|(p, q)| (p(f), q(f))).collect();
        (self.base)(f) + combine_lines(&lines)
    }

    pub fn norm(&self, f: &TreeFn) -> NormValue {
        NormValue::from_square(self.theta(f))
    }
}

/// `Σ_m 2^{-m} max_i [a_i + 2^{-m} b_i]` for squared values `(a_i, b_i)`.
pub fn combine_lines(lines: &[(Rational, Rational)]) -> Rational {
    let half = exact::rat(1, 2);
    geometric_max_sum(&half, &half, lines)
}

/// `‖f‖² = ‖f‖∞² + Day(Jf)²` for a linear map `J` into finitely many
/// coordinates.
pub fn injection_sc_norm<J>(f: &TreeFn, j: J) -> NormValue
where
    J: Fn(&TreeFn) -> Vec<Rational>,
{
    let sup = f.sup_norm();
    NormValue::from_square(&sup * &sup + day_sq_sorted(&j(f)))
}

/// Squared dual norm on `ℓ1` of the nodes:
/// `‖ξ‖₁² + Day(|ξ|)² + Σ_q 2^{-k(q)} Φ(q;ξ)²`, where `q` runs over the jump
/// levels `ρ(s)` of `Υ₀ = {s : ρ(s) > ρ(s⁻)}` in increasing order
/// (`k = 1, 2, …`) and `Φ(q;ξ)² = Σ_m 2^{-m} sup_{#F=m} Σ_{s∈F} ‖ξ↾[s,∞)‖₁²`.
pub fn dual_sc_sq(tree: &FiniteTree, w: &WeightFn, xi: &TreeFn) -> Rational {
    let l1 = xi.values().iter().fold(Rational::zero(), |acc, v| acc + v.abs());
    let mut total = &l1 * &l1 + day_sq_sorted(xi.values());
    let mut levels: std::collections::BTreeMap<Rational, Vec<Rational>> = Default::default();
    for s in tree.node_ids() {
        let jump = w.jump(tree, s);
        if jump.is_positive() {
            let mass = tree
                .up_set(s)
                .iter()
                .fold(Rational::zero(), |acc, u| acc + xi.get(*u).abs());
            levels.entry(w.node(tree, s).clone()).or_default().push(mass);
        }
    }
    for (k, (_, masses)) in levels.into_iter().enumerate() {
        // Σ_m 2^{-m} (top m squared masses) = 2·Day²
        total += exact::pow2_neg(k as u32 + 1) * day_sq_sorted(&masses) * exact::int(2);
    }
    total
}

pub fn dual_sc_norm(tree: &FiniteTree, w: &WeightFn, xi: &TreeFn) -> NormValue {
    NormValue::from_square(dual_sc_sq(tree, w, xi))
}

/// Registered names for the CLI and reports.
pub const NORM_NAMES: &[&str] = &[
    "sup",
    "osc",
    "day",
    "ordinal",
    "composite_lur",
    "composite_mlur",
    "injection_sc",
    "kadec",
    "dual_sc",
];

/// Evaluates a named norm of a function on a weighted finite tree.
/// `ordinal` reads the nodes in index order as a chain.
pub fn evaluate_named(name: &str, tree: &FiniteTree, w: &WeightFn, f: &TreeFn) -> Result<NormValue> {
    match name {
        "sup" => Ok(elementary_norm(f.values(), Elementary::Sup)),
        "osc" => Ok(elementary_norm(f.values(), Elementary::Osc)),
        "day" => day_norm(f.values(), DayMode::Sorted),
        "ordinal" => Ok(NormValue::from_square(ordinal_sq(f.values()))),
        "composite_lur" => Ok(composite_lur(tree, w)?.norm(f)),
        "composite_mlur" => Ok(composite_mlur(tree, w)?.norm(f)),
        "injection_sc" => {
            let ops = crate::operators::TreeOperators::new(tree, w)?;
            Ok(injection_sc_norm(f, |g| {
                let mut v = ops.r(g).values();
                v.extend(ops.s(g).values());
                v
            }))
        }
        "kadec" => Ok(kadec_norm(tree, w, f, &KadecOptions::default())?.value),
        "dual_sc" => Ok(dual_sc_norm(tree, w, f)),
        other => Err(Error::Parse(format!(
            "unknown norm {other:?}; expected one of {}",
            NORM_NAMES.join(", ")
        ))),
    }
}

/// Memo of squared chain norms keyed by the chain's values.
#[derive(Debug, Default)]
pub(crate) struct ChainCache {
    map: HashMap<Vec<Rational>, Rational>,
}

impl ChainCache {
    pub(crate) fn get(&mut self, values: Vec<Rational>) -> Rational {
        if let Some(v) = self.map.get(&values) {
            return v.clone();
        }
        let v = ordinal_sq(&values);
        self.map.insert(values, v.clone());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn osc_examples() {
        assert_eq!(osc_sq(&[rat(1, 1), rat(-1, 1)]), rat(5, 1));
        assert_eq!(elementary_norm(&vec![rat(3, 2); 3], Elementary::Osc).value, rat(3, 2));
        assert!(elementary_norm(&[], Elementary::Sup).value.is_zero());
    }

    #[test]
    fn day_examples() {
        assert_eq!(day_sq_sorted(&[rat(3, 1)]), rat(9, 2));
        assert_eq!(day_sq_sorted(&[rat(1, 1), rat(2, 1)]), rat(9, 4));
        assert_eq!(day_sq_sorted(&[rat(1, 1), rat(1, 1)]), rat(3, 4));
        assert_eq!(day_sq_recursive(&[rat(1, 1), rat(2, 1)]).unwrap(), rat(9, 4));
        assert_eq!(day_sq_recursive(&[rat(3, 1)]).unwrap(), rat(9, 2));
    }

    #[test]
    fn ordinal_examples() {
        let t = OrdinalTable::new(&[rat(1, 1), rat(1, 1)]);
        assert_eq!(t.full_square(), rat(17, 48));
        assert_eq!(t.square(1, 1).unwrap(), rat(1, 1));
        assert!(t.square(1, 0).is_err());
        assert_eq!(ordinal_norm(&[rat(-2, 3)], 0, 0).unwrap().value, rat(2, 3));
        assert!(ordinal_sq(&vec![rat(0, 1); 4]).is_zero());
    }

    #[test]
    fn combine_examples() {
        let c = CombineLur::new(Box::new(|f: &TreeFn| f.sup_norm() * f.sup_norm()))
            .with(Box::new(|_| Rational::zero()), Box::new(|_| rat(1, 1)));
        // ψ² Σ_m 4^{-m} = 1/3
        assert_eq!(c.theta(&TreeFn::from_values(vec![rat(1, 1)])), rat(4, 3));
        let c = CombineLur::new(Box::new(|_| rat(1, 1)))
            .with(Box::new(|_| rat(1, 1)), Box::new(|_| Rational::zero()));
        assert_eq!(c.theta(&TreeFn::zero(1)), rat(2, 1));
    }

    #[test]
    fn dual_unit_mass() {
        let t = FiniteTree::from_parent_list(&[None, Some(0), Some(1)]).unwrap();
        let w = WeightFn::new(vec![rat(1, 4), rat(1, 2), rat(3, 4)]);
        let xi = TreeFn::indicator(3, &[crate::tree::NodeId(2)]);
        // 1 + 1/2 + three singleton levels with wedge mass 1: 2·½·(1/2 + 1/4 + 1/8)
        assert_eq!(dual_sc_sq(&t, &w, &xi), rat(1, 1) + rat(1, 2) + rat(7, 8));
        assert!(dual_sc_sq(&t, &w, &TreeFn::zero(3)).is_zero());
    }
}

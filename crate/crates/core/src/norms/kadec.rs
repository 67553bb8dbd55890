use std::collections::HashMap;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::ChainCache;
use crate::error::{Error, Result};
use crate::exact::{self, geometric_max_sum_capped, NormValue, Rational};
use crate::tree::{FiniteTree, NodeId, TreeFn};
use crate::weights::{classify_points, NodeClass, WeightFn};

/// `[r,∞)`, or every node when `r` is the bottom element.
fn wedge(tree: &FiniteTree, r: Option<NodeId>) -> Vec<NodeId> {
    match r {
        Some(r) => tree.up_set(r),
        None => tree.node_ids().collect(),
    }
}

/// Whether some non-negative decreasing `g` on the wedge has `|g - h| ≤ ε`.
/// Going down from the minimal nodes, the largest admissible value is
/// `g(t) = min(h(t) + ε, g(t⁻))`; it must stay above `max(0, h(t) - ε)`.
fn monotone_feasible(tree: &FiniteTree, nodes: &[NodeId], h: &[Rational], eps: &Rational) -> bool {
    let mut g: HashMap<NodeId, Rational> = HashMap::new();
    for &t in nodes {
        let cap = &h[t.index()] + eps;
        let v = match tree.parent(t).and_then(|p| g.get(&p)) {
            Some(above) if *above < cap => above.clone(),
            _ => cap,
        };
        if v.is_negative() || v < &h[t.index()] - eps {
            return false;
        }
        g.insert(t, v);
    }
    true
}

/// `Δ^±(f;r)`: sup-distance from `±f↾[r,∞)` to the non-negative decreasing
/// functions on `[r,∞)`. The optimum is one of the critical values
/// `0`, `-h(s)` and `(h(t) - h(s))/2` for `s ⪯ t`; the least feasible one is
/// found by bisection over the sorted candidates.
pub fn monotone_distance(tree: &FiniteTree, f: &TreeFn, r: Option<NodeId>, positive: bool) -> Rational {
    let nodes = wedge(tree, r);
    let h: Vec<Rational> = f
        .values()
        .iter()
        .map(|v| if positive { v.clone() } else { -v })
        .collect();
    let half = exact::rat(1, 2);
    let mut candidates = vec![Rational::zero()];
    for &t in &nodes {
        candidates.push(-&h[t.index()]);
        for s in tree.down_set(t) {
            if nodes.contains(&s) {
                candidates.push((&h[t.index()] - &h[s.index()]) * &half);
            }
        }
    }
    candidates.retain(|c| !c.is_negative());
    candidates.sort();
    candidates.dedup();
    // the largest candidate is always feasible
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if monotone_feasible(tree, &nodes, &h, &candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo].clone()
}

/// `best[k]`: largest `Σ|f|` over antichains of at most `k` nodes in `[r,∞)`,
/// for `k = 0..=width`.
pub fn antichain_table(tree: &FiniteTree, f: &TreeFn, r: Option<NodeId>) -> Vec<Rational> {
    fn merge(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                let v = x + y;
                if v > out[i + j] {
                    out[i + j] = v;
                }
            }
        }
        out
    }
    fn table(tree: &FiniteTree, f: &TreeFn, v: NodeId) -> Vec<Rational> {
        let mut acc = vec![Rational::zero()];
        for &c in tree.children(v) {
            acc = merge(&acc, &table(tree, f, c));
        }
        let own = f.get(v).abs();
        if acc.len() < 2 {
            acc.push(own);
        } else if own > acc[1] {
            acc[1] = own;
        }
        // sizes are "at most k"
        for k in 1..acc.len() {
            if acc[k] < acc[k - 1] {
                acc[k] = acc[k - 1].clone();
            }
        }
        acc
    }
    let starts: Vec<NodeId> = match r {
        Some(r) => vec![r],
        None => tree.roots().to_vec(),
    };
    let mut acc = vec![Rational::zero()];
    for s in starts {
        acc = merge(&acc, &table(tree, f, s));
    }
    for k in 1..acc.len() {
        if acc[k] < acc[k - 1] {
            acc[k] = acc[k - 1].clone();
        }
    }
    acc
}

/// `A_l(f,r) = (1/l) max{Σ|f(s_k)| : antichain of at most l nodes in [r,∞)}`.
pub fn antichain_mean(tree: &FiniteTree, f: &TreeFn, r: Option<NodeId>, l: usize) -> Result<Rational> {
    if l == 0 {
        return Err(Error::ParamOutOfRange("antichain size l must be at least 1".into()));
    }
    let best = antichain_table(tree, f, r);
    let k = l.min(best.len() - 1);
    Ok(&best[k] / exact::int(l as i64))
}

/// `Σ_l 2^{-l} A_l(f,r)`; beyond the width `A_l = C/l`, whose tail is
/// `C (ln 2 - Σ_{l≤W} 2^{-l}/l)`.
fn antichain_series(best: &[Rational]) -> f64 {
    let width = best.len() - 1;
    let top = exact::to_f64(&best[width]);
    let mut total = 0.0;
    let mut head = 0.0;
    for (l, b) in best.iter().enumerate().skip(1) {
        let w = 0.5f64.powi(l as i32) / l as f64;
        total += w * exact::to_f64(b);
        head += w;
    }
    total + top * (std::f64::consts::LN_2 - head)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KadecOptions {
    pub node_budget: usize,
    /// Truncation of the outer `m` sum.
    pub m_terms: u32,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for KadecOptions {
    fn default() -> Self {
        KadecOptions {
            node_budget: 20,
            m_terms: 40,
            tolerance: 2f64.powi(-40),
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KadecReport {
    pub value: NormValue,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub states: usize,
}

/// Lipschitz constant of one sweep in the sup metric:
/// `(1/4 + 1/8 + 1/4 + 1/4)/7`.
const CONTRACTION: f64 = 0.125;

/// `(value, state)` terms for one `Ξ(g;s,t)`: half the chain norm of `g` on
/// `(s,t]` plus half of `Φ` at the masked state.
#[derive(Debug, Clone, Copy)]
struct XiRef {
    chain: f64,
    state: Option<usize>,
}

#[derive(Debug, Clone)]
struct Line {
    a: f64,
    xi: Vec<XiRef>,
    phi: Vec<Option<usize>>,
    /// Common factor of the `Ξ` and `Φ` sums.
    scale: f64,
}

#[derive(Debug, Clone)]
struct State {
    fixed: f64,
    sigma: Vec<Line>,
    psi: Vec<Line>,
    theta: Vec<Line>,
    omega: Vec<Line>,
}

/// Solver for the coupled system `Φ, Σ, Ψ, Θ, Ω, Ξ` on one function.
/// States are pairs `(s, g)` where `g` is `f` masked to a subset of
/// `[s,∞)`; masks arise from removing the nodes comparable with some `t`.
pub struct KadecSolver {
    states: Vec<State>,
    index: HashMap<(Option<NodeId>, u64), usize>,
    phi: Vec<f64>,
    sup: f64,
    m_terms: u32,
    residuals: Vec<f64>,
    iterations: usize,
    tail_error: f64,
    up: Vec<u64>,
    support: u64,
}

struct Builder<'a> {
    tree: &'a FiniteTree,
    f: &'a TreeFn,
    nodes: Vec<NodeClass>,
    jumps: Vec<Rational>,
    up: Vec<u64>,
    cone: Vec<u64>,
    support: u64,
    chains: ChainCache,
    index: HashMap<(Option<NodeId>, u64), usize>,
    states: Vec<Option<State>>,
    pending: Vec<(Option<NodeId>, u64)>,
}

impl Builder<'_> {
    fn up_mask(&self, s: Option<NodeId>) -> u64 {
        match s {
            Some(s) => self.up[s.index()],
            None => u64::MAX,
        }
    }

    /// Index of the state, or `None` when the masked function vanishes.
    fn intern(&mut self, s: Option<NodeId>, mask: u64) -> Option<usize> {
        let key = mask & self.up_mask(s) & self.support;
        if key == 0 {
            return None;
        }
        if let Some(&i) = self.index.get(&(s, key)) {
            return Some(i);
        }
        let i = self.states.len();
        self.states.push(None);
        self.index.insert((s, key), i);
        self.pending.push((s, key));
        Some(i)
    }

    fn value(&self, mask: u64, t: Option<NodeId>) -> Rational {
        match t {
            Some(t) if mask & (1 << t.index()) != 0 => self.f.get(t).clone(),
            _ => Rational::zero(),
        }
    }

    fn xi(&mut self, s: Option<NodeId>, mask: u64, t: NodeId) -> XiRef {
        let above = s.map_or(0, |s| {
            self.tree
                .down_set(s)
                .iter()
                .fold(0u64, |m, x| m | (1 << x.index()))
        });
        let chain: Vec<Rational> = self
            .tree
            .down_set(t)
            .into_iter()
            .filter(|x| above & (1 << x.index()) == 0)
            .map(|x| self.value(mask, Some(x)))
            .collect();
        let sq = self.chains.get(chain);
        let state = self.intern(s, mask & !self.cone[t.index()]);
        XiRef {
            chain: exact::to_f64(&sq).sqrt(),
            state,
        }
    }

    fn build(&mut self, s: Option<NodeId>, mask: u64) -> State {
        let g = TreeFn::from_values(
            self.tree
                .node_ids()
                .map(|t| self.value(mask, Some(t)))
                .collect(),
        );
        let fixed_exact = super::monotone_distance(self.tree, &g, s, true)
            + super::monotone_distance(self.tree, &g, s, false);
        let fixed = exact::to_f64(&fixed_exact) + antichain_series(&antichain_table(self.tree, &g, s));
        let wedge = wedge(self.tree, s);
        let fs = self.value(mask, s);
        let mut sigma = Vec::new();
        let mut psi = Vec::new();
        let mut theta = Vec::new();
        let mut omega = Vec::new();
        for &t in &wedge {
            let ft = g.get(t).clone();
            let xi = self.xi(s, mask, t);
            let phi_t = self.intern(Some(t), mask);
            sigma.push(Line {
                a: exact::to_f64(&ft.abs()),
                xi: vec![xi],
                phi: vec![phi_t],
                scale: 1.0,
            });
            let mut best = (&fs - &ft).abs();
            for u in self.tree.up_set(t) {
                let v = (&fs - &ft + g.get(u)).abs();
                if v > best {
                    best = v;
                }
            }
            psi.push(Line {
                a: exact::to_f64(&best),
                xi: vec![xi],
                phi: vec![phi_t],
                scale: 1.0,
            });
            let nc = self.nodes[t.index()].clone();
            let k = 1.0 + nc.f.len() as f64;
            let kernel = nc.f.iter().fold(ft.clone(), |acc, u| acc - g.get(*u));
            let xis: Vec<XiRef> = nc.f.iter().map(|&u| self.xi(s, mask, u)).collect();
            let phis: Vec<Option<usize>> = nc.f.iter().map(|&u| self.intern(Some(u), mask)).collect();
            theta.push(Line {
                a: exact::to_f64(&(&nc.delta * kernel.abs())) / k,
                xi: xis,
                phi: phis,
                scale: 1.0 / k,
            });
            if Some(t) != s {
                omega.push(Line {
                    a: exact::to_f64(&(&self.jumps[t.index()] * ft.abs())),
                    xi: vec![xi],
                    phi: vec![phi_t],
                    scale: 1.0,
                });
            }
        }
        State {
            fixed,
            sigma,
            psi,
            theta,
            omega,
        }
    }
}

impl KadecSolver {
    pub fn new(tree: &FiniteTree, w: &WeightFn, f: &TreeFn, opts: &KadecOptions) -> Result<KadecSolver> {
        let cap = opts.node_budget.min(63);
        if tree.len() > cap {
            return Err(Error::SizeBudgetExceeded {
                what: "Kadec system nodes".into(),
                needed: tree.len(),
                cap,
            });
        }
        let mask_of = |v: &[NodeId]| v.iter().fold(0u64, |m, x| m | (1 << x.index()));
        let up: Vec<u64> = tree.node_ids().map(|t| mask_of(&tree.up_set(t))).collect();
        let cone: Vec<u64> = tree
            .node_ids()
            .map(|t| up[t.index()] | mask_of(&tree.down_set(t)))
            .collect();
        let mut b = Builder {
            tree,
            f,
            nodes: classify_points(tree.presentation(), w)?.nodes(tree),
            jumps: tree.node_ids().map(|t| w.jump(tree, t)).collect(),
            up,
            cone,
            support: mask_of(&f.support()),
            chains: ChainCache::default(),
            index: HashMap::new(),
            states: Vec::new(),
            pending: Vec::new(),
        };
        b.intern(None, u64::MAX);
        while let Some((s, mask)) = b.pending.pop() {
            let i = b.index[&(s, mask)];
            let st = b.build(s, mask);
            b.states[i] = Some(st);
        }
        let (up, support) = (b.up.clone(), b.support);
        let states: Vec<State> = b.states.into_iter().map(|s| s.expect("built")).collect();
        let n = states.len();
        Ok(KadecSolver {
            states,
            index: b.index,
            phi: vec![0.0; n],
            sup: exact::to_f64(&f.sup_norm()),
            m_terms: opts.m_terms,
            residuals: Vec::new(),
            iterations: 0,
            tail_error: 0.0,
            up,
            support,
        })
    }

    pub fn states(&self) -> usize {
        self.states.len()
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    fn phi_of(&self, s: Option<usize>) -> f64 {
        s.map_or(0.0, |i| self.phi[i])
    }

    /// `Σ_{m≤M} Σ_l 2^{-m-l} max [a + 2^{-m}b + 2^{-l}c]` plus the tail
    /// `2^{-M}` times the `m → ∞` limit; returns the sum and the bound
    /// `4^{-M} max b / 3` on what the tail leaves out.
    fn double_sum(&self, lines: &[(f64, f64, f64)]) -> (f64, f64) {
        if lines.is_empty() {
            return (0.0, 0.0);
        }
        let mut total = 0.0;
        let mut scale = 1.0;
        for _ in 0..self.m_terms {
            scale *= 0.5;
            let inner: Vec<(f64, f64)> = lines.iter().map(|&(a, b, c)| (a + scale * b, c)).collect();
            total += scale * geometric_max_sum_capped(&0.5, &0.5, &inner, 256);
        }
        let limit: Vec<(f64, f64)> = lines.iter().map(|&(a, _, c)| (a, c)).collect();
        total += scale * geometric_max_sum_capped(&0.5, &0.5, &limit, 256);
        let max_b = lines.iter().map(|l| l.1).fold(0.0, f64::max);
        (total, scale * scale * max_b / 3.0)
    }

    fn evaluate(&self, lines: &[Line], xi_now: &dyn Fn(&XiRef) -> f64) -> (f64, f64) {
        let numeric: Vec<(f64, f64, f64)> = lines
            .iter()
            .map(|l| {
                let b: f64 = l.xi.iter().map(xi_now).sum::<f64>() * l.scale;
                let c: f64 = l.phi.iter().map(|p| self.phi_of(*p)).sum::<f64>() * l.scale;
                (l.a, b, c)
            })
            .collect();
        self.double_sum(&numeric)
    }

    /// One Jacobi sweep; returns the largest change and the truncation bound.
    fn sweep(&mut self) -> (f64, f64) {
        let xi_now = |x: &XiRef| 0.5 * (x.chain + self.phi_of(x.state));
        let mut next = Vec::with_capacity(self.states.len());
        let mut tail = 0.0f64;
        for st in &self.states {
            let (sigma, e1) = self.evaluate(&st.sigma, &xi_now);
            let (psi, e2) = self.evaluate(&st.psi, &xi_now);
            let (theta, e3) = self.evaluate(&st.theta, &xi_now);
            let (omega, e4) = self.evaluate(&st.omega, &xi_now);
            let v = (st.fixed + sigma / 2.0 + psi / 4.0 + theta / 2.0 + omega / 2.0) / 7.0;
            tail = tail.max((e1 / 2.0 + e2 / 4.0 + e3 / 2.0 + e4 / 2.0) / 7.0);
            next.push(v);
        }
        let change = next
            .iter()
            .zip(&self.phi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        self.phi = next;
        (change, tail)
    }

    /// Iterates to the tolerance. Fails with `NonContraction` after five
    /// consecutive residual ratios at or above 1.
    pub fn solve(&mut self, opts: &KadecOptions) -> Result<()> {
        let mut streak = 0;
        for _ in 0..opts.max_iterations {
            let (change, tail) = self.sweep();
            self.iterations += 1;
            self.tail_error = tail;
            if let Some(&prev) = self.residuals.last() {
                if prev > 0.0 && change / prev >= 1.0 {
                    streak += 1;
                    if streak >= 5 {
                        self.residuals.push(change);
                        return Err(Error::NonContraction(self.residual_ratios()));
                    }
                } else {
                    streak = 0;
                }
            }
            self.residuals.push(change);
            if change < opts.tolerance {
                return Ok(());
            }
        }
        Err(Error::NonContraction(self.residual_ratios()))
    }

    pub fn residual_ratios(&self) -> Vec<f64> {
        self.residuals
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect()
    }

    /// Certified radius: contraction remainder `q/(1-q)` times the last
    /// change, the truncated tail amplified by `1/(1-q)`, and a rounding
    /// allowance.
    pub fn error_bound(&self) -> f64 {
        let last = self.residuals.last().copied().unwrap_or(f64::INFINITY);
        let q = CONTRACTION;
        last * q / (1.0 - q) + self.tail_error / (1.0 - q) + 1e-12 * self.sup.max(1e-300)
    }

    /// `Φ(f;s)` after solving.
    pub fn phi_at(&self, s: Option<NodeId>) -> f64 {
        let mask = match s {
            Some(s) => self.up[s.index()] & self.support,
            None => self.support,
        };
        self.index.get(&(s, mask)).map_or(0.0, |&i| self.phi[i])
    }

    pub fn value(&self) -> NormValue {
        NormValue::approx(self.phi_at(None), self.error_bound())
    }
}

/// `Φ(f;0)` with certified error.
pub fn kadec_norm(tree: &FiniteTree, w: &WeightFn, f: &TreeFn, opts: &KadecOptions) -> Result<KadecReport> {
    if f.is_zero() {
        return Ok(KadecReport {
            value: NormValue::exact(Rational::zero()),
            iterations: 0,
            residuals: Vec::new(),
            states: 0,
        });
    }
    let mut solver = KadecSolver::new(tree, w, f, opts)?;
    solver.solve(opts)?;
    Ok(KadecReport {
        value: solver.value(),
        iterations: solver.iterations,
        residuals: solver.residuals.clone(),
        states: solver.states(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn chain2() -> FiniteTree {
        FiniteTree::from_parent_list(&[None, Some(0)]).unwrap()
    }

    #[test]
    fn monotone_examples() {
        let t = chain2();
        let up = TreeFn::from_values(vec![rat(0, 1), rat(1, 1)]);
        assert_eq!(monotone_distance(&t, &up, None, true), rat(1, 2));
        let neg = TreeFn::from_values(vec![rat(-1, 1), rat(0, 1)]);
        assert_eq!(monotone_distance(&t, &neg, None, true), rat(1, 1));
        let dec = TreeFn::from_values(vec![rat(2, 1), rat(1, 1)]);
        assert!(monotone_distance(&t, &dec, None, true).is_zero());
    }

    #[test]
    fn antichain_examples() {
        let star = FiniteTree::from_parent_list(&[None, Some(0), Some(0), Some(0)]).unwrap();
        let f = TreeFn::from_values(vec![rat(0, 1), rat(3, 1), rat(2, 1), rat(1, 1)]);
        assert_eq!(antichain_mean(&star, &f, None, 2).unwrap(), rat(5, 2));
        assert_eq!(antichain_mean(&star, &f, None, 1).unwrap(), rat(3, 1));
        let c = chain2();
        let g = TreeFn::from_values(vec![rat(-4, 1), rat(1, 1)]);
        assert_eq!(antichain_mean(&c, &g, None, 3).unwrap(), rat(4, 3));
        assert!(antichain_mean(&c, &g, None, 0).is_err());
    }

    #[test]
    fn single_node_kadec() {
        let t = FiniteTree::from_parent_list(&[None]).unwrap();
        let w = WeightFn::new(vec![rat(1, 2)]);
        let f = TreeFn::from_values(vec![rat(1, 1)]);
        let r = kadec_norm(&t, &w, &f, &KadecOptions::default()).unwrap();
        let ln2 = std::f64::consts::LN_2;
        let phi_r = (2.25 + ln2) / 6.75;
        let sigma = 0.5 * (1.0 + 1.0 / 6.0 + phi_r / 3.0);
        let psi = 0.25 * (1.0 + 1.0 / 6.0 + phi_r / 3.0);
        let omega = 0.5 * (0.5 + 1.0 / 6.0 + phi_r / 3.0);
        let phi0 = (1.0 + ln2 + sigma + psi + 0.5 + omega) / 7.0;
        assert!((r.value.as_f64() - phi0).abs() < 1e-9, "{} vs {phi0}", r.value.as_f64());
    }
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sample_rng, NormOracle};
use crate::error::Result;
use crate::exact;
use crate::tree::{FiniteTree, NodeId, TreeFn};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuOptions {
    /// Maximum number of norm evaluations.
    pub budget: usize,
    /// Random starts after the zero start.
    pub restarts: usize,
    pub sweeps: usize,
    /// Golden-section steps per coordinate.
    pub line_steps: usize,
    pub seed: u64,
}

impl Default for MuOptions {
    fn default() -> Self {
        MuOptions {
            budget: 2000,
            restarts: 2,
            sweeps: 8,
            line_steps: 30,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuEstimate {
    /// Best norm value found (an upper bound for μ up to evaluation error).
    pub value: f64,
    /// Tail function achieving `value`.
    pub certificate: Vec<(NodeId, f64)>,
    /// Best value after each sweep.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub budget_exhausted: bool,
}

struct Search<'o, 'a> {
    oracle: &'o NormOracle<'a>,
    base: &'o TreeFn,
    free: &'o [NodeId],
    evaluations: usize,
    budget: usize,
    best: f64,
    best_point: Vec<f64>,
}

impl Search<'_, '_> {
    fn eval(&mut self, x: &[f64]) -> Result<Option<f64>> {
        if self.evaluations >= self.budget {
            return Ok(None);
        }
        self.evaluations += 1;
        let mut f = self.base.clone();
        for (&n, &v) in self.free.iter().zip(x) {
            f.set(n, exact::rat_from_f64(v));
        }
        let v = (self.oracle)(&f)?.as_f64();
        if v < self.best {
            self.best = v;
            self.best_point = x.to_vec();
        }
        Ok(Some(v))
    }
}

/// Coordinate descent with golden-section line searches over the values of
/// the nodes strictly above `u`, starting from `base` (zero start first,
/// then random starts). The search order does not depend on the budget, so
/// a larger budget never gives a worse value.
pub fn estimate_mu(
    oracle: &NormOracle,
    tree: &FiniteTree,
    base: &TreeFn,
    u: NodeId,
    opts: &MuOptions,
) -> Result<MuEstimate> {
    let free: Vec<NodeId> = tree.up_set(u).into_iter().filter(|&x| x != u).collect();
    let scale = exact::to_f64(&base.sup_norm()).max(1e-9);
    let (lo, hi) = (-2.0 * scale, 2.0 * scale);
    let mut search = Search {
        oracle,
        base,
        free: &free,
        evaluations: 0,
        budget: opts.budget.max(1),
        best: f64::INFINITY,
        best_point: vec![0.0; free.len()],
    };
    let mut trace = Vec::new();
    let mut starts = vec![vec![0.0; free.len()]];
    for r in 0..opts.restarts {
        let mut rng = sample_rng(opts.seed, r);
        starts.push((0..free.len()).map(|_| rng.gen_range(lo..hi)).collect());
    }
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    'outer: for start in starts {
        let mut x = start;
        if search.eval(&x)?.is_none() {
            break;
        }
        for _ in 0..opts.sweeps {
            for i in 0..free.len() {
                let (mut a, mut b) = (lo, hi);
                let probe = |x: &mut Vec<f64>, v: f64, s: &mut Search| {
                    x[i] = v;
                    s.eval(x)
                };
                let mut c = b - golden * (b - a);
                let mut d = a + golden * (b - a);
                let Some(mut fc) = probe(&mut x, c, &mut search)? else { break 'outer };
                let Some(mut fd) = probe(&mut x, d, &mut search)? else { break 'outer };
                for _ in 0..opts.line_steps {
                    if fc <= fd {
                        b = d;
                        d = c;
                        fd = fc;
                        c = b - golden * (b - a);
                        let Some(v) = probe(&mut x, c, &mut search)? else { break 'outer };
                        fc = v;
                    } else {
                        a = c;
                        c = d;
                        fc = fd;
                        d = a + golden * (b - a);
                        let Some(v) = probe(&mut x, d, &mut search)? else { break 'outer };
                        fd = v;
                    }
                }
                // keep the coordinate at the best point seen so far
                x = search.best_point.clone();
            }
            trace.push(search.best);
        }
    }
    let budget_exhausted = search.evaluations >= search.budget;
    if trace.last() != Some(&search.best) {
        trace.push(search.best);
    }
    Ok(MuEstimate {
        value: search.best,
        certificate: free.iter().copied().zip(search.best_point.iter().copied()).collect(),
        trace,
        evaluations: search.evaluations,
        budget_exhausted,
    })
}

/// `μ(t)`: the infimum of `‖1_{(0,t]} + f′‖` over tails `f′` above `t`.
pub fn mu_of_indicator(oracle: &NormOracle, tree: &FiniteTree, t: NodeId, opts: &MuOptions) -> Result<MuEstimate> {
    estimate_mu(oracle, tree, &TreeFn::indicator_down(tree, t), t, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::NormValue;
    use crate::norms::{ordinal_sq, Elementary};

    #[test]
    fn sup_norm_mu_is_one() {
        let t = FiniteTree::from_parent_list(&[None, Some(0), Some(1), Some(0)]).unwrap();
        let oracle = |f: &TreeFn| Ok(crate::norms::elementary_norm(f.values(), Elementary::Sup));
        let m = mu_of_indicator(&oracle, &t, NodeId(0), &MuOptions::default()).unwrap();
        assert_eq!(m.value, 1.0);
    }

    #[test]
    fn ordinal_two_chain_matches_grid() {
        let t = FiniteTree::from_parent_list(&[None, Some(0)]).unwrap();
        let oracle = |f: &TreeFn| Ok(NormValue::from_square(ordinal_sq(f.values())));
        let m = mu_of_indicator(&oracle, &t, NodeId(0), &MuOptions::default()).unwrap();
        let grid = (-20000..=20000)
            .map(|k| {
                let x = k as f64 / 10000.0;
                let f = TreeFn::from_values(vec![exact::int(1), exact::rat_from_f64(x)]);
                oracle(&f).unwrap().as_f64()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((m.value - grid).abs() < 1e-6, "{} vs {}", m.value, grid);
    }
}

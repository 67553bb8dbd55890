use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{mu_of_indicator, MuOptions, ProbeReport, Violation, TRUNCATION_BANNER};
use crate::error::{Error, Result};
use crate::exact::{self, NormValue, Rational};
use crate::tree::generate::{LambdaNode, LambdaTree};
use crate::tree::{unfold, FiniteTree, Multiplicity, NodeId, TreeFn, TreePresentation, UnfoldOptions};
use crate::weights::WeightFn;

/// A norm on functions of any unfolding of a fixed presentation.
pub type TreeNormOracle<'a> = dyn Fn(&FiniteTree, &WeightFn, &TreeFn) -> Result<NormValue> + 'a;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KadecProbeOptions {
    pub depth: usize,
    /// Copies per ω-edge, one unfolding per entry.
    pub schedule: Vec<usize>,
    /// Class of the limit point; defaults to the first class with an ω-edge.
    pub class: Option<String>,
    /// Norm gap below which `‖fₙ‖` counts as converged to `‖f‖`.
    pub tolerance: f64,
    /// Estimate `μ(t)` per unfolding when set.
    pub mu: Option<MuOptions>,
}

impl Default for KadecProbeOptions {
    fn default() -> Self {
        KadecProbeOptions {
            depth: 2,
            schedule: vec![1, 2, 4, 8],
            class: None,
            tolerance: 1e-9,
            mu: None,
        }
    }
}

/// First node of the given class (or any class) with an ω-edge, its ω
/// successors in copy order, and the edge slot.
fn omega_family(tree: &FiniteTree, class: Option<&str>) -> Option<(NodeId, Vec<NodeId>)> {
    let p = tree.presentation();
    tree.node_ids().find_map(|t| {
        let c = tree.class_of(t);
        if class.is_some_and(|name| p.name(c) != name) {
            return None;
        }
        let slot = p.children(c).iter().position(|(_, m)| *m == Multiplicity::Omega)?;
        let mut kids: Vec<NodeId> = tree
            .children(t)
            .iter()
            .copied()
            .filter(|&u| tree.node(u).edge_slot as usize == slot)
            .collect();
        kids.sort_by_key(|&u| tree.node(u).copy_index);
        (!kids.is_empty()).then_some((t, kids))
    })
}

/// The indicator sequence `fₙ = 1_{(0,uₙ]}` against `f = 1_{(0,t]}` on
/// growing unfoldings: norm gaps, sup distances and optional `μ(t)`
/// estimates. Converging norms at sup distance 1 are flagged as a Kadec
/// obstruction.
pub fn probe_kadec(
    p: &Arc<TreePresentation>,
    w: &WeightFn,
    oracle: &TreeNormOracle,
    opts: &KadecProbeOptions,
) -> Result<ProbeReport> {
    let mut report = ProbeReport::new("kadec", 0);
    report.notes.push(TRUNCATION_BANNER.into());
    let mut last_gap = None;
    let mut max_k = 0;
    let mut min_sup_distance: Option<Rational> = None;
    for &k in &opts.schedule {
        let tree = unfold(p, UnfoldOptions::new(opts.depth, k))?;
        let (t, us) = omega_family(&tree, opts.class.as_deref()).ok_or_else(|| {
            Error::PremiseViolated {
                reason: "no ω-edge in the unfolding".into(),
                witness: opts.class.clone().unwrap_or_default(),
            }
        })?;
        let f = TreeFn::indicator_down(&tree, t);
        let nf = oracle(&tree, w, &f)?;
        let mut gaps = Vec::new();
        for &u in &us {
            let fu = TreeFn::indicator_down(&tree, u);
            let nu = oracle(&tree, w, &fu)?;
            let gap = (nu.as_f64() - nf.as_f64()).abs();
            let radius = nu.radius_f64() + nf.radius_f64();
            gaps.push((gap, radius));
            let d = fu.sub(&f).sup_norm();
            if min_sup_distance.as_ref().is_none_or(|m| &d < m) {
                min_sup_distance = Some(d);
            }
            report.samples += 1;
        }
        let (gap, radius) = *gaps.last().expect("at least one copy");
        let min_gap = gaps.iter().map(|g| g.0).fold(f64::INFINITY, f64::min);
        report.stat(&format!("k{k:02}_norm_f"), nf.to_string());
        report.stat(&format!("k{k:02}_last_gap"), format!("{gap:.6e}"));
        report.stat(&format!("k{k:02}_min_gap"), format!("{min_gap:.6e}"));
        if let Some(mu_opts) = &opts.mu {
            let tree_ref = &tree;
            let bound = |g: &TreeFn| oracle(tree_ref, w, g);
            let est = mu_of_indicator(&bound, &tree, t, mu_opts)?;
            report.stat(&format!("k{k:02}_mu_estimate"), format!("{:.6e}", est.value));
        }
        last_gap = Some((gap, radius));
        max_k = max_k.max(k);
    }
    let sup_distance = min_sup_distance.unwrap_or_else(Rational::zero);
    report.stat("min_sup_distance", exact::format_rational(&sup_distance));
    match last_gap {
        Some((gap, radius)) if max_k >= 2 => {
            let converged = gap <= opts.tolerance + radius;
            report.stat("norms_converge", converged);
            if converged && sup_distance >= Rational::from_integer(1.into()) {
                report.violations.push(Violation {
                    kind: "kadec-obstruction".into(),
                    sample: report.samples,
                    seed: 0,
                    witness: serde_json::json!({
                        "depth": opts.depth,
                        "copies": max_k,
                        "class": opts.class,
                    }),
                    detail: "‖fₙ‖ → ‖f‖ while ‖fₙ − f‖∞ stays 1".into(),
                });
            } else {
                report.stat("separation_margin", format!("{gap:.6e}"));
            }
        }
        _ => report.stat("verdict", "inconclusive: fewer than two copies"),
    }
    Ok(report)
}

/// Checks `1_{(0,uₙ]} → 1_{(0,t]}` pointwise on the nodes of the smallest
/// unfolding, sup distance 1 throughout, and that the copies eventually
/// enter every basic reverse neighbourhood of `t`.
pub fn probe_reverse_convergence(
    p: &Arc<TreePresentation>,
    depth: usize,
    schedule: &[usize],
) -> Result<ProbeReport> {
    let mut report = ProbeReport::new("reverse_convergence", 0);
    let mut ks = schedule.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let isolated = p
        .class_ids()
        .filter(|&c| p.children(c).iter().all(|(_, m)| *m == Multiplicity::One))
        .count();
    report.stat("reverse_isolated_classes", isolated);
    if !p.class_ids().any(|c| p.children(c).iter().any(|(_, m)| *m == Multiplicity::Omega)) {
        report.notes.push("finitely branching: every point is reverse-isolated".into());
        return Ok(report);
    }
    let Some(&k0) = ks.first() else { return Ok(report) };
    let reference = unfold(p, UnfoldOptions::new(depth, k0))?;
    let fixed: Vec<Vec<(u32, u32)>> = reference.node_ids().map(|n| reference.path_key(n)).collect();
    // (t key, slot) -> agreement count at the previous k
    let mut previous: BTreeMap<(Vec<(u32, u32)>, u32), usize> = BTreeMap::new();
    for &k in &ks {
        let tree = unfold(p, UnfoldOptions::new(depth, k))?;
        let by_key: HashMap<Vec<(u32, u32)>, NodeId> =
            tree.node_ids().map(|n| (tree.path_key(n), n)).collect();
        let set: Vec<NodeId> = fixed.iter().map(|key| by_key[key]).collect();
        let mut agree_total = 0usize;
        let mut pairs = 0usize;
        for t in tree.node_ids() {
            let c = tree.class_of(t);
            for (slot, (_, m)) in p.children(c).iter().enumerate() {
                if *m != Multiplicity::Omega {
                    continue;
                }
                let mut us: Vec<NodeId> = tree
                    .children(t)
                    .iter()
                    .copied()
                    .filter(|&u| tree.node(u).edge_slot as usize == slot)
                    .collect();
                us.sort_by_key(|&u| tree.node(u).copy_index);
                let Some(&last) = us.last() else { continue };
                report.samples += 1;
                let f = TreeFn::indicator_down(&tree, t);
                for &u in &us {
                    let d = TreeFn::indicator_down(&tree, u).sub(&f).sup_norm();
                    if d != Rational::from_integer(1.into()) {
                        report.violations.push(Violation {
                            kind: "sup-distance".into(),
                            sample: report.samples,
                            seed: 0,
                            witness: serde_json::json!({ "copies": k, "t": tree.label(t), "u": tree.label(u) }),
                            detail: format!("sup distance {d} instead of 1"),
                        });
                    }
                }
                let fk = TreeFn::indicator_down(&tree, last);
                let agree = set.iter().filter(|&&x| fk.get(x) == f.get(x)).count();
                agree_total += agree;
                pairs += set.len();
                let key = (tree.path_key(t), slot as u32);
                if let Some(&prev) = previous.get(&key) {
                    if agree < prev {
                        report.violations.push(Violation {
                            kind: "agreement-shrinks".into(),
                            sample: report.samples,
                            seed: 0,
                            witness: serde_json::json!({ "copies": k, "t": tree.label(t) }),
                            detail: format!("agreement fell from {prev} to {agree}"),
                        });
                    }
                }
                if fixed.contains(&key.0) {
                    previous.insert(key, agree);
                }
                for j in 1..us.len() {
                    let nbhd = tree.reverse_nbhd(t, &us[..j])?;
                    if !nbhd.contains(&last) || nbhd.contains(&us[j - 1]) {
                        report.violations.push(Violation {
                            kind: "reverse-neighbourhood".into(),
                            sample: report.samples,
                            seed: 0,
                            witness: serde_json::json!({ "copies": k, "t": tree.label(t), "excluded": j }),
                            detail: "copy sequence does not enter the neighbourhood".into(),
                        });
                    }
                }
            }
        }
        report.stat(&format!("k{k:02}_agreement"), format!("{agree_total}/{pairs}"));
    }
    Ok(report)
}

/// Best near-witness for a doubly-bad point of an increasing `φ` on the
/// pair augmentation of `Λ`: the injection node `t` minimising
/// `max_i φ(t,i) − φ(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublyBad {
    pub node: NodeId,
    pub label: String,
    #[serde(with = "crate::exact::serde_rational")]
    pub excess: Rational,
    pub candidates: usize,
}

pub fn doubly_bad_search(aug: &LambdaTree, phi: &[Rational]) -> Result<Option<DoublyBad>> {
    let tree = &aug.tree;
    if phi.len() != tree.len() {
        return Err(Error::InvalidWeight(format!(
            "{} values for {} nodes",
            phi.len(),
            tree.len()
        )));
    }
    for n in tree.node_ids() {
        if let Some(parent) = tree.parent(n) {
            if phi[n.index()] < phi[parent.index()] {
                return Err(Error::InvalidWeight(format!(
                    "not increasing at {}",
                    tree.label(n)
                )));
            }
        }
    }
    let mut best: Option<DoublyBad> = None;
    let mut candidates = 0;
    for t in tree.node_ids() {
        let pairs: Vec<NodeId> = tree
            .children(t)
            .iter()
            .copied()
            .filter(|c| matches!(aug.kinds[c.index()], LambdaNode::Pair { .. }))
            .collect();
        if pairs.len() < 2 {
            continue;
        }
        candidates += 1;
        let excess = pairs
            .iter()
            .map(|c| &phi[c.index()] - &phi[t.index()])
            .max()
            .expect("nonempty");
        if best.as_ref().is_none_or(|b| excess < b.excess) {
            best = Some(DoublyBad {
                node: t,
                label: tree.label(t),
                excess,
                candidates: 0,
            });
        }
    }
    Ok(best.map(|mut b| {
        b.candidates = candidates;
        b
    }))
}

//! Increasing weights on trees and the classifications built on them:
//! good/bad points, ever-branching cores, fan points, derivation indices and
//! the theorem side-conditions.

mod branching;
mod derive;

pub use branching::{
    derivation_index, ever_branching_core, fan_points, level_sets, special_decomposition,
    special_decomposition_tree, DerivationIndex, SpecialDecomposition,
};
pub use derive::{lambda_weights, sigma_frag, upgrade, Upgrade};

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::tree::{ClassId, FiniteTree, Multiplicity, NodeId, TreePresentation};

/// An increasing function on presentation classes, inherited by every copy.
/// The bottom element carries the value 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightFn {
    rho: Vec<Rational>,
    /// Values are expected in the open interval (0,1).
    pub normalized: bool,
}

impl WeightFn {
    pub fn new(rho: Vec<Rational>) -> WeightFn {
        WeightFn {
            rho,
            normalized: false,
        }
    }

    pub fn normalized(mut self) -> WeightFn {
        self.normalized = true;
        self
    }

    pub fn constant(classes: usize, value: Rational) -> WeightFn {
        WeightFn::new(vec![value; classes])
    }

    /// Weights stored on the presentation's class records.
    pub fn embedded(p: &TreePresentation) -> Result<WeightFn> {
        p.embedded_rho()
            .map(WeightFn::new)
            .ok_or_else(|| Error::InvalidWeight("some class carries no rho".into()))
    }

    /// Map from class id to a `"p/q"` value.
    pub fn from_map(p: &TreePresentation, map: &BTreeMap<String, String>) -> Result<WeightFn> {
        for key in map.keys() {
            if p.lookup(key).is_none() {
                return Err(Error::DanglingClass(key.clone()));
            }
        }
        let rho = p
            .class_ids()
            .map(|c| {
                let name = p.name(c);
                map.get(name)
                    .ok_or_else(|| Error::InvalidWeight(format!("no value for class `{name}`")))
                    .and_then(|s| exact::parse_rational(s))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WeightFn::new(rho))
    }

    /// Parses the weight file format: a JSON object from class id to `"p/q"`.
    pub fn parse(p: &TreePresentation, text: &str) -> Result<WeightFn> {
        let map: BTreeMap<String, String> = serde_json::from_str(text)?;
        WeightFn::from_map(p, &map)
    }

    pub fn to_map(&self, p: &TreePresentation) -> BTreeMap<String, String> {
        p.class_ids()
            .map(|c| (p.name(c).to_string(), exact::format_rational(&self.rho[c.index()])))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn values(&self) -> &[Rational] {
        &self.rho
    }

    pub fn class(&self, c: ClassId) -> &Rational {
        &self.rho[c.index()]
    }

    pub fn node(&self, tree: &FiniteTree, n: NodeId) -> &Rational {
        &self.rho[tree.class_of(n).index()]
    }

    /// Value at a node or at the bottom element (`None`), which is 0.
    pub fn at(&self, tree: &FiniteTree, n: Option<NodeId>) -> Rational {
        n.map(|n| self.node(tree, n).clone())
            .unwrap_or_else(Rational::zero)
    }

    /// `ρ(t) - ρ(t⁻)`.
    pub fn jump(&self, tree: &FiniteTree, n: NodeId) -> Rational {
        self.node(tree, n) - self.at(tree, tree.parent(n))
    }

    pub fn per_node(&self, tree: &FiniteTree) -> Vec<Rational> {
        tree.node_ids().map(|n| self.node(tree, n).clone()).collect()
    }
}

/// Random increasing weight, constant on strongly connected components.
/// Each edge between components raises the weight by a random multiple of
/// `1/den` (at least 1) or, with probability `equal`, keeps it.
pub fn random_weight<R: rand::Rng>(rng: &mut R, p: &TreePresentation, equal: f64, den: i64) -> WeightFn {
    let comps = p.sccs();
    let mut comp_of = vec![0usize; p.len()];
    for (i, comp) in comps.iter().enumerate() {
        for c in comp {
            comp_of[c.index()] = i;
        }
    }
    let mut value: Vec<Rational> = (0..comps.len()).map(|_| exact::rat(rng.gen_range(1..=2), den)).collect();
    // reverse topological order: sources last
    for i in (0..comps.len()).rev() {
        for c in &comps[i] {
            for (d, _) in p.children(*c) {
                let j = comp_of[d.index()];
                if j == i {
                    continue;
                }
                let gap = if rng.gen_bool(equal) {
                    Rational::zero()
                } else {
                    exact::rat(rng.gen_range(1..=3), den)
                };
                let v = &value[i] + gap;
                if v > value[j] {
                    value[j] = v;
                }
            }
        }
    }
    WeightFn::new(p.class_ids().map(|c| value[comp_of[c.index()]].clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeViolation {
    pub from: String,
    pub to: String,
    pub rho_from: String,
    pub rho_to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightReport {
    pub valid: bool,
    pub decreasing_edges: Vec<EdgeViolation>,
    /// Cycles along which the weight is not constant.
    pub unequal_cycles: Vec<Vec<String>>,
    /// Classes outside (0,1) when the weight is flagged normalized.
    pub out_of_range: Vec<String>,
    pub size_mismatch: Option<String>,
}

pub fn validate_weight(p: &TreePresentation, w: &WeightFn) -> WeightReport {
    let mut report = WeightReport {
        valid: true,
        decreasing_edges: Vec::new(),
        unequal_cycles: Vec::new(),
        out_of_range: Vec::new(),
        size_mismatch: None,
    };
    if w.len() != p.len() {
        report.valid = false;
        report.size_mismatch = Some(format!(
            "weight has {} values for {} classes",
            w.len(),
            p.len()
        ));
        return report;
    }
    for c in p.class_ids() {
        for (d, _) in p.children(c) {
            if w.class(*d) < w.class(c) {
                report.decreasing_edges.push(EdgeViolation {
                    from: p.name(c).to_string(),
                    to: p.name(*d).to_string(),
                    rho_from: exact::format_rational(w.class(c)),
                    rho_to: exact::format_rational(w.class(*d)),
                });
            }
        }
        if w.normalized {
            let v = w.class(c);
            if *v <= Rational::zero() || *v >= Rational::one() {
                report.out_of_range.push(p.name(c).to_string());
            }
        }
    }
    for cycle in p.cycles() {
        let first = w.class(cycle[0]);
        if cycle.iter().any(|c| w.class(*c) != first) {
            report
                .unequal_cycles
                .push(cycle.iter().map(|c| p.name(*c).to_string()).collect());
        }
    }
    report.valid = report.decreasing_edges.is_empty()
        && report.unequal_cycles.is_empty()
        && report.out_of_range.is_empty();
    report
}

fn require_valid(p: &TreePresentation, w: &WeightFn) -> Result<()> {
    let r = validate_weight(p, w);
    if r.valid {
        return Ok(());
    }
    let reason = if let Some(m) = r.size_mismatch {
        m
    } else if let Some(e) = r.decreasing_edges.first() {
        format!("decreasing edge {} -> {}", e.from, e.to)
    } else if let Some(c) = r.unequal_cycles.first() {
        format!("weight not constant on cycle {}", c.join(" -> "))
    } else {
        format!("values outside (0,1) at {}", r.out_of_range.join(", "))
    };
    Err(Error::InvalidWeight(reason))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Good,
    Bad,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointClass {
    pub status: Status,
    /// Positions in the class's child list of the equal-weight one-edges.
    pub f_slots: Vec<usize>,
    /// Capped gap `min(1, inf{ρ(u)-ρ(t) : u ∉ F_t})`; `None` at bad classes.
    pub delta: Option<Rational>,
    pub fan: bool,
}

/// Point classification of every class of a presentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub classes: Vec<PointClass>,
}

/// Per-node view of a [`Classification`] on a finite tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeClass {
    pub good: bool,
    /// Materialised members of `F_t`.
    pub f: Vec<NodeId>,
    /// `δ_t`, 0 at bad nodes.
    pub delta: Rational,
}

/// Classifies every class: bad iff some ω-edge leads to an equal-weight
/// class; otherwise good with `F_t` the equal-weight one-edges.
pub fn classify_points(p: &TreePresentation, w: &WeightFn) -> Result<Classification> {
    require_valid(p, w)?;
    let fans = fan_points(p, w);
    let classes = p
        .class_ids()
        .map(|c| {
            let rho = w.class(c);
            let bad = p
                .children(c)
                .iter()
                .any(|(d, m)| *m == Multiplicity::Omega && w.class(*d) == rho);
            if bad {
                return PointClass {
                    status: Status::Bad,
                    f_slots: Vec::new(),
                    delta: None,
                    fan: fans[c.index()],
                };
            }
            let mut f_slots = Vec::new();
            let mut delta = Rational::one();
            for (slot, (d, _)) in p.children(c).iter().enumerate() {
                let gap = w.class(*d) - rho;
                if gap.is_zero() {
                    f_slots.push(slot);
                } else if gap < delta {
                    delta = gap;
                }
            }
            PointClass {
                status: Status::Good,
                f_slots,
                delta: Some(delta),
                fan: fans[c.index()],
            }
        })
        .collect();
    Ok(Classification { classes })
}

impl Classification {
    pub fn class(&self, c: ClassId) -> &PointClass {
        &self.classes[c.index()]
    }

    pub fn is_bad(&self, c: ClassId) -> bool {
        self.classes[c.index()].status == Status::Bad
    }

    pub fn bad_classes(&self) -> Vec<ClassId> {
        (0..self.classes.len() as u32)
            .map(ClassId)
            .filter(|&c| self.is_bad(c))
            .collect()
    }

    pub fn nodes(&self, tree: &FiniteTree) -> Vec<NodeClass> {
        tree.node_ids()
            .map(|n| {
                let pc = &self.classes[tree.class_of(n).index()];
                match pc.status {
                    Status::Bad => NodeClass {
                        good: false,
                        f: Vec::new(),
                        delta: Rational::zero(),
                    },
                    Status::Good => NodeClass {
                        good: true,
                        f: tree
                            .children(n)
                            .iter()
                            .copied()
                            .filter(|&c| pc.f_slots.contains(&(tree.node(c).edge_slot as usize)))
                            .collect(),
                        delta: pc.delta.clone().unwrap_or_else(Rational::one),
                    },
                }
            })
            .collect()
    }

    pub fn to_report(&self, p: &TreePresentation) -> Vec<PointClassDoc> {
        p.class_ids()
            .map(|c| {
                let pc = self.class(c);
                PointClassDoc {
                    class: p.name(c).to_string(),
                    status: pc.status,
                    f_t: pc
                        .f_slots
                        .iter()
                        .map(|&s| p.name(p.children(c)[s].0).to_string())
                        .collect(),
                    delta_t: pc.delta.as_ref().map(exact::format_rational),
                    fan: pc.fan,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointClassDoc {
    pub class: String,
    pub status: Status,
    pub f_t: Vec<String>,
    pub delta_t: Option<String>,
    pub fan: bool,
}

/// Classification of a finite tree, all of whose classes are per node.
pub fn classify_tree(tree: &FiniteTree, w: &WeightFn) -> Result<Vec<NodeClass>> {
    Ok(classify_points(tree.presentation(), w)?.nodes(tree))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// LUR renorming: no bad points, constant on no ever-branching set.
    T4_1,
    /// Strictly convex renorming.
    T5_1,
    /// Kadec renorming: no bad points.
    T6_1,
    /// Strictly convex dual norm.
    T7_1,
    /// Fréchet-smooth renorming; same condition as `T4_1`.
    T8_1,
}

impl Theorem {
    pub fn parse(s: &str) -> Result<Theorem> {
        match s.to_ascii_uppercase().replace('.', "_").as_str() {
            "T4_1" | "4_1" => Ok(Theorem::T4_1),
            "T5_1" | "5_1" => Ok(Theorem::T5_1),
            "T6_1" | "6_1" => Ok(Theorem::T6_1),
            "T7_1" | "7_1" => Ok(Theorem::T7_1),
            "T8_1" | "8_1" => Ok(Theorem::T8_1),
            _ => Err(Error::Parse(format!("unknown theorem `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionFailure {
    pub condition: String,
    pub witnesses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub theorem: Theorem,
    pub passed: bool,
    pub failures: Vec<ConditionFailure>,
}

/// Number of bad nodes `u ⪰ t` with `ρ(u) = ρ(t)` in the unfolding below each
/// class, saturated at 2 (least fixpoint, so cycles carrying a bad class
/// saturate).
pub fn equal_level_bad_counts(p: &TreePresentation, w: &WeightFn, cls: &Classification) -> Vec<u8> {
    let mut count = vec![0u8; p.len()];
    loop {
        let mut changed = false;
        for c in p.class_ids() {
            let mut total = u8::from(cls.is_bad(c));
            for (d, m) in p.children(c) {
                if w.class(*d) != w.class(c) {
                    continue;
                }
                let k = count[d.index()];
                let add = match m {
                    Multiplicity::One => k,
                    Multiplicity::Omega if k > 0 => 2,
                    Multiplicity::Omega => 0,
                };
                total = (total + add).min(2);
            }
            if total > count[c.index()] {
                count[c.index()] = total;
                changed = true;
            }
        }
        if !changed {
            return count;
        }
    }
}

pub fn check_conditions(p: &TreePresentation, w: &WeightFn, theorem: Theorem) -> Result<ConditionReport> {
    let cls = classify_points(p, w)?;
    let mut failures = Vec::new();
    let names = |set: &[ClassId]| set.iter().map(|c| p.name(*c).to_string()).collect::<Vec<_>>();
    let bad = cls.bad_classes();
    let no_bad = |failures: &mut Vec<ConditionFailure>| {
        if !bad.is_empty() {
            failures.push(ConditionFailure {
                condition: "no bad points".into(),
                witnesses: names(&bad),
            });
        }
    };
    let no_core = |failures: &mut Vec<ConditionFailure>| {
        let fans: Vec<ClassId> = p.class_ids().filter(|c| cls.class(*c).fan).collect();
        if !fans.is_empty() {
            failures.push(ConditionFailure {
                condition: "weight constant on no ever-branching subset".into(),
                witnesses: names(&fans),
            });
        }
    };
    match theorem {
        Theorem::T4_1 | Theorem::T8_1 => {
            no_bad(&mut failures);
            no_core(&mut failures);
        }
        Theorem::T6_1 => no_bad(&mut failures),
        Theorem::T5_1 => {
            no_core(&mut failures);
            let counts = equal_level_bad_counts(p, w, &cls);
            let over: Vec<ClassId> = p.class_ids().filter(|c| counts[c.index()] > 1).collect();
            if !over.is_empty() {
                failures.push(ConditionFailure {
                    condition: "at most one equal-weight bad point above each point".into(),
                    witnesses: names(&over),
                });
            }
        }
        Theorem::T7_1 => {
            for cycle in p.cycles() {
                failures.push(ConditionFailure {
                    condition: "weight constant on no strictly increasing sequence".into(),
                    witnesses: names(&cycle),
                });
            }
        }
    }
    Ok(ConditionReport {
        theorem,
        passed: failures.is_empty(),
        failures,
    })
}

use std::collections::{BTreeMap, VecDeque};

use num_traits::Zero;

use super::{classify_points, validate_weight, WeightFn};
use crate::error::{Error, Result};
use crate::exact::{self, pow2_neg, Rational};
use crate::tree::generate::LambdaTree;
use crate::tree::{ClassId, Multiplicity, TreePresentation};

/// Result of the bad-point upgrade: the weight depends on the bad points
/// below a node, so it lives on a refined presentation whose classes are
/// pairs (original class, largest `μ` over bad strict predecessors).
#[derive(Debug, Clone)]
pub struct Upgrade {
    pub presentation: TreePresentation,
    pub weight: WeightFn,
    /// Original class of each refined class.
    pub origin: Vec<ClassId>,
    /// `sup{μ(s) : s bad, s ≺ t}` carried by each refined class.
    pub below: Vec<Rational>,
}

/// `ρ(t) = μ(t) + sup{μ(s) : s bad for μ, s ≺ t}` with `sup ∅ = 0`.
///
/// `bad` defaults to the classes that are bad for `μ`. Every bad `t` must
/// satisfy `μ(t) > sup{μ(s) : s bad, s ≺ t}`; otherwise the upgrade cannot
/// make `t` good and `PremiseViolated` names it.
pub fn upgrade(p: &TreePresentation, mu: &WeightFn, bad: Option<&[bool]>) -> Result<Upgrade> {
    let report = validate_weight(p, mu);
    if !report.valid {
        return Err(Error::InvalidWeight(format!("{report:?}")));
    }
    let bad: Vec<bool> = match bad {
        Some(b) => b.to_vec(),
        None => {
            let cls = classify_points(p, mu)?;
            p.class_ids().map(|c| cls.is_bad(c)).collect()
        }
    };
    let mut states: Vec<(ClassId, Rational)> = Vec::new();
    let mut index: BTreeMap<(ClassId, Rational), usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    let mut intern = |key: (ClassId, Rational), states: &mut Vec<(ClassId, Rational)>, queue: &mut VecDeque<usize>| -> usize {
        if let Some(&i) = index.get(&key) {
            return i;
        }
        states.push(key.clone());
        index.insert(key, states.len() - 1);
        queue.push_back(states.len() - 1);
        states.len() - 1
    };
    let roots: Vec<usize> = p
        .roots()
        .iter()
        .map(|&r| intern((r, Rational::zero()), &mut states, &mut queue))
        .collect();
    let mut edges: Vec<Vec<(usize, Multiplicity)>> = Vec::new();
    while let Some(i) = queue.pop_front() {
        let (c, below) = states[i].clone();
        let mu_c = mu.class(c);
        let next_below = if bad[c.index()] {
            if *mu_c <= below {
                return Err(Error::PremiseViolated {
                    reason: format!(
                        "bad class has μ = {} not above the bad predecessors' supremum {}",
                        exact::format_rational(mu_c),
                        exact::format_rational(&below)
                    ),
                    witness: p.name(c).to_string(),
                });
            }
            mu_c.clone()
        } else {
            below.clone()
        };
        let kids: Vec<(usize, Multiplicity)> = p
            .children(c)
            .iter()
            .map(|&(d, m)| (intern((d, next_below.clone()), &mut states, &mut queue), m))
            .collect();
        if edges.len() <= i {
            edges.resize(i + 1, Vec::new());
        }
        edges[i] = kids;
    }
    edges.resize(states.len(), Vec::new());
    let per_class = states.len() == p.len();
    let name = |i: usize| {
        let (c, below) = &states[i];
        if per_class {
            p.name(*c).to_string()
        } else {
            format!("{}|{}", p.name(*c), exact::format_rational(below))
        }
    };
    let classes = (0..states.len())
        .map(|i| {
            let (c, below) = &states[i];
            let rho = mu.class(*c) + below;
            (
                name(i),
                Some(rho),
                edges[i].iter().map(|&(j, m)| (name(j), m)).collect(),
            )
        })
        .collect();
    let presentation = TreePresentation::new(classes, roots.iter().map(|&r| name(r)).collect())?;
    let weight = WeightFn::embedded(&presentation)?;
    Ok(Upgrade {
        presentation,
        weight,
        origin: states.iter().map(|s| s.0).collect(),
        below: states.into_iter().map(|s| s.1).collect(),
    })
}

/// `ρ(t) = Σ_{m∈M_t} 2^{-m}` with `M_t = {m : [t,∞) ∩ Δ_m = ∅}` for pieces
/// `Δ_1, …, Δ_K` (indices beyond `K` contribute the tail `2^{-K}`).
/// Each piece must be reverse-discrete: no ω-edge out of a member may lead
/// back into the same piece.
pub fn sigma_frag(p: &TreePresentation, pieces: &[Vec<ClassId>]) -> Result<WeightFn> {
    let mut piece_of: Vec<Vec<usize>> = vec![Vec::new(); p.len()];
    for (m, piece) in pieces.iter().enumerate() {
        for c in piece {
            if c.index() >= p.len() {
                return Err(Error::ParamOutOfRange(format!("class index {}", c.0)));
            }
            piece_of[c.index()].push(m);
        }
    }
    if let Some(c) = p.class_ids().find(|c| piece_of[c.index()].is_empty()) {
        return Err(Error::PremiseViolated {
            reason: "pieces do not cover the tree".into(),
            witness: p.name(c).to_string(),
        });
    }
    // pieces met by [t,∞), per class
    let reach: Vec<Vec<bool>> = p
        .class_ids()
        .map(|c| {
            let mut r = p.strictly_reachable(c);
            r[c.index()] = true;
            r
        })
        .collect();
    let met: Vec<Vec<bool>> = p
        .class_ids()
        .map(|c| {
            let mut m = vec![false; pieces.len()];
            for d in p.class_ids() {
                if reach[c.index()][d.index()] {
                    for &k in &piece_of[d.index()] {
                        m[k] = true;
                    }
                }
            }
            m
        })
        .collect();
    for c in p.class_ids() {
        for (d, mult) in p.children(c) {
            if *mult != Multiplicity::Omega {
                continue;
            }
            for &k in &piece_of[c.index()] {
                if met[d.index()][k] {
                    return Err(Error::PremiseViolated {
                        reason: format!("piece {} is not reverse-discrete", k + 1),
                        witness: p.name(c).to_string(),
                    });
                }
            }
        }
    }
    let tail = pow2_neg(pieces.len() as u32);
    let rho = p
        .class_ids()
        .map(|c| {
            met[c.index()]
                .iter()
                .enumerate()
                .filter(|(_, hit)| !**hit)
                .fold(tail.clone(), |acc, (k, _)| acc + pow2_neg(k as u32 + 1))
        })
        .collect();
    Ok(WeightFn::new(rho).normalized())
}

/// λ on a generated Λ-type tree (one class per node).
pub fn lambda_weights(l: &LambdaTree) -> WeightFn {
    WeightFn::new(l.lambda.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::tree::generate;

    #[test]
    fn upgrade_three_nodes() {
        // t bad (ω-child u with equal μ), u has a one-child v
        let p = TreePresentation::parse(
            r#"{"classes":[{"id":"t","children":[{"class":"u","mult":"omega"}]},{"id":"u","children":[{"class":"v"}]},{"id":"v"}]}"#,
        )
        .unwrap();
        let mu = WeightFn::new(vec![rat(1, 2), rat(1, 2), rat(3, 4)]);
        let up = upgrade(&p, &mu, None).unwrap();
        assert_eq!(up.weight.class(ClassId(0)), &rat(1, 2));
        assert!(up.weight.class(ClassId(1)) >= &rat(1, 1));
        let cls = classify_points(&up.presentation, &up.weight).unwrap();
        assert!(!cls.is_bad(ClassId(0)));
    }

    #[test]
    fn upgrade_premise() {
        let p = generate::star();
        let mu = WeightFn::new(vec![rat(0, 1), rat(0, 1)]);
        assert!(matches!(
            upgrade(&p, &mu, None),
            Err(Error::PremiseViolated { .. })
        ));
    }

    #[test]
    fn sigma_single_piece() {
        let p = generate::kary(2, 3).unwrap();
        let all: Vec<ClassId> = p.class_ids().collect();
        let w = sigma_frag(&p, &[all]).unwrap();
        assert!(w.values().iter().all(|v| *v == rat(1, 2)));
        let cls = classify_points(&p, &w).unwrap();
        assert!(cls.bad_classes().is_empty());
        // the star's leaves sit under an ω-edge, so the root cannot share their piece
        let s = generate::star();
        assert!(sigma_frag(&s, &[vec![ClassId(0), ClassId(1)]]).is_err());
        let w = sigma_frag(&s, &[vec![ClassId(0)], vec![ClassId(1)]]).unwrap();
        assert!(classify_points(&s, &w).unwrap().bad_classes().is_empty());
    }
}

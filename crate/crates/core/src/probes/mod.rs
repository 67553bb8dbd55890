//! Numerical and game-theoretic probes of norm geometry.
//!
//! Every violation carries the inputs and the seed that produced it, so a
//! report can be replayed.

mod fan;
mod game;
mod mu;
mod sequences;

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exact::{self, NormValue, Rational};
use crate::norms::osc_sq;
use crate::tree::{FiniteTree, NodeId, TreeFn};
use crate::weights::WeightFn;

pub use fan::{deepest_fan_triple, embed_dyadic, fan_function, fan_nodes, fan_triple, FanEmbedding, FanTriple};
pub use game::{choquet_game, BetaStrategy, GameReport, GameRound, GameState};
pub use mu::{estimate_mu, mu_of_indicator, MuEstimate, MuOptions};
pub use sequences::{doubly_bad_search, probe_kadec, probe_reverse_convergence, DoublyBad, KadecProbeOptions};

/// A norm evaluated on functions of one fixed finite tree.
pub type NormOracle<'a> = dyn Fn(&TreeFn) -> Result<NormValue> + 'a;

pub const TRUNCATION_BANNER: &str =
    "truncation-limited: infinite tails are replaced by the instantiated finite coordinates";

/// A replayable finding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: String,
    pub sample: usize,
    pub seed: u64,
    /// The inputs, with rationals written as `p/q`.
    pub witness: serde_json::Value,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub probe: String,
    pub seed: u64,
    pub samples: usize,
    pub violations: Vec<Violation>,
    pub statistics: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

impl ProbeReport {
    pub fn new(probe: &str, seed: u64) -> ProbeReport {
        ProbeReport {
            probe: probe.into(),
            seed,
            samples: 0,
            violations: Vec::new(),
            statistics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn stat(&mut self, key: &str, value: impl ToString) {
        self.statistics.insert(key.into(), value.to_string());
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

pub(crate) fn fn_json(f: &TreeFn) -> serde_json::Value {
    f.values().iter().map(exact::format_rational).collect()
}

/// Per-sample generator derived from a base seed.
pub(crate) fn sample_rng(seed: u64, sample: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (sample as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Values `k/den` with `|k| ≤ den`.
pub fn random_fn<R: Rng>(rng: &mut R, len: usize, den: i64) -> TreeFn {
    TreeFn::from_values((0..len).map(|_| exact::rat(rng.gen_range(-den..=den), den)).collect())
}

/// Outcome of comparing `‖x+y‖` with `‖x‖ + ‖y‖`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flatness {
    Strict,
    Flat,
    /// Equality cannot be excluded within the certified error.
    Inconclusive,
}

/// Decides whether the segment `[x,y]` leaves the sphere strictly. With
/// exact squares `A, B, C` of `x, y, x+y` this is `C < (√A+√B)²`, decided
/// without square roots.
pub fn midpoint_flatness(nx: &NormValue, ny: &NormValue, nsum: &NormValue) -> Flatness {
    if let (Some(a), Some(b), Some(c)) = (&nx.square, &ny.square, &nsum.square) {
        let d = c - a - b;
        let strict = d.is_negative() || &d * &d < exact::int(4) * a * b;
        return if strict { Flatness::Strict } else { Flatness::Flat };
    }
    let slack = &nx.value + &ny.value - &nsum.value;
    let radius = &nx.error_radius + &ny.error_radius + &nsum.error_radius;
    if slack > radius {
        Flatness::Strict
    } else {
        Flatness::Inconclusive
    }
}

/// `x = c·y` for some `c ≥ 0`, or either is zero.
pub fn positively_dependent(x: &TreeFn, y: &TreeFn) -> bool {
    if x.is_zero() || y.is_zero() {
        return true;
    }
    let i = y.values().iter().position(|v| !v.is_zero()).expect("y nonzero");
    let c = x.values()[i].clone() / &y.values()[i];
    c.is_positive() && y.scale(&c) == *x
}

enum PairOutcome {
    Skipped,
    Strict,
    Flat(serde_json::Value),
    Inconclusive,
}

fn test_pair(oracle: &NormOracle, x: &TreeFn, y: &TreeFn) -> Result<PairOutcome> {
    if positively_dependent(x, y) {
        return Ok(PairOutcome::Skipped);
    }
    let (nx, ny, ns) = (oracle(x)?, oracle(y)?, oracle(&x.add(y))?);
    Ok(match midpoint_flatness(&nx, &ny, &ns) {
        Flatness::Strict => PairOutcome::Strict,
        Flatness::Inconclusive => PairOutcome::Inconclusive,
        Flatness::Flat => PairOutcome::Flat(serde_json::json!({
            "x": fn_json(x),
            "y": fn_json(y),
            "norm_x": nx.to_string(),
            "norm_y": ny.to_string(),
            "norm_sum": ns.to_string(),
        })),
    })
}

/// Random pairs plus structured candidates: indicator pairs over two
/// equal-weight continuations of a node, and the fan triple on the deepest
/// available embedding in the ever-branching core.
pub fn probe_strict_convexity(
    oracle: &NormOracle,
    tree: &FiniteTree,
    w: &WeightFn,
    budget: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let mut report = ProbeReport::new("strict_convexity", seed);
    let (mut skipped, mut inconclusive, mut strict) = (0usize, 0usize, 0usize);
    let mut record = |report: &mut ProbeReport, kind: &str, sample: usize, out: PairOutcome| {
        report.samples += 1;
        match out {
            PairOutcome::Skipped => skipped += 1,
            PairOutcome::Strict => strict += 1,
            PairOutcome::Inconclusive => inconclusive += 1,
            PairOutcome::Flat(witness) => report.violations.push(Violation {
                kind: kind.into(),
                sample,
                seed,
                witness,
                detail: "‖x+y‖ = ‖x‖ + ‖y‖ with x, y independent".into(),
            }),
        }
    };
    for i in 0..budget {
        let mut rng = sample_rng(seed, i);
        let x = random_fn(&mut rng, tree.len(), 4);
        let y = random_fn(&mut rng, tree.len(), 4);
        let out = test_pair(oracle, &x, &y)?;
        record(&mut report, "random-pair", i, out);
    }
    // two equal-weight immediate continuations of a node with that weight
    let mut pattern = 0;
    for t in tree.node_ids() {
        let rt = w.node(tree, t);
        let same: Vec<NodeId> = tree
            .children(t)
            .iter()
            .copied()
            .filter(|&c| w.node(tree, c) == rt)
            .collect();
        if same.len() >= 2 {
            let x = TreeFn::indicator_down(tree, same[0]);
            let y = TreeFn::indicator_down(tree, same[1]);
            let out = test_pair(oracle, &x, &y)?;
            record(&mut report, "equal-weight-continuations", budget + pattern, out);
            pattern += 1;
            if pattern >= 8 {
                break;
            }
        }
    }
    match deepest_fan_triple(tree, w, 8) {
        Some(triple) => {
            report.stat("fan_depth", triple.depth);
            report.stat("fan_identity_exact", triple.identity_holds);
            if !triple.identity_holds {
                report.violations.push(Violation {
                    kind: "fan-identity-broken".into(),
                    sample: budget + pattern,
                    seed,
                    witness: serde_json::json!({ "u": triple.u.0, "depth": triple.depth }),
                    detail: "midpoint identity failed as functions".into(),
                });
            } else {
                let out = test_pair(oracle, &triple.left, &triple.right)?;
                record(&mut report, "fan-triple", budget + pattern, out);
            }
        }
        None => report.notes.push("no fan point in this tree".into()),
    }
    report.stat("strict", strict);
    report.stat("skipped_dependent", skipped);
    report.stat("inconclusive_within_error", inconclusive);
    Ok(report)
}

/// `‖g+h‖² + ‖g−h‖² − 2‖g‖²`.
pub fn midpoint_quantity(sq: &dyn Fn(&TreeFn) -> Result<Rational>, g: &TreeFn, h: &TreeFn) -> Result<Rational> {
    Ok(sq(&g.add(h))? + sq(&g.sub(h))? - sq(g)? * exact::int(2))
}

/// Squared oscillation norm `‖g‖∞² + osc(g)²`.
pub fn osc_norm_sq(g: &TreeFn) -> Result<Rational> {
    let sup = g.sup_norm();
    Ok(&sup * &sup + osc_sq(g.values()))
}

/// Samples `ε`-two-valued `g` and directions `h`, shrinks `h` until the
/// midpoint quantity drops below `ε²`, then asserts `‖h‖∞ < 4ε`; `samples`
/// counts admissible draws. A second
/// family of three-valued `g` with wide spread records (without asserting)
/// how often the conclusion fails there.
pub fn probe_mlur(
    sq: &dyn Fn(&TreeFn) -> Result<Rational>,
    points: usize,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let mut report = ProbeReport::new("mlur", seed);
    let mut min_margin: Option<Rational> = None;
    let mut unresolved = 0;
    // draw until `samples` admissible ones are found, within four times as many attempts
    let mut i = 0;
    while report.samples < samples && i < 4 * samples {
        let mut rng = sample_rng(seed, i);
        i += 1;
        let eps = exact::rat(1, rng.gen_range(4..=64));
        let a = exact::rat(rng.gen_range(-8..=8), 8);
        let b = exact::rat(rng.gen_range(-8..=8), 8);
        let g = TreeFn::from_values(
            (0..points)
                .map(|_| {
                    let centre = if rng.gen_bool(0.5) { &a } else { &b };
                    centre + &eps * exact::rat(rng.gen_range(-16..=16), 16)
                })
                .collect(),
        );
        let mut h = random_fn(&mut rng, points, 16).scale(&(&eps * exact::int(8)));
        if rng.gen_bool(0.1) {
            h = TreeFn::zero(points);
        }
        let eps_sq = &eps * &eps;
        let mut admissible = false;
        for _ in 0..40 {
            if midpoint_quantity(sq, &g, &h)? < eps_sq {
                admissible = true;
                break;
            }
            h = h.scale(&exact::rat(1, 2));
        }
        if !admissible {
            unresolved += 1;
            continue;
        }
        report.samples += 1;
        let bound = &eps * exact::int(4);
        let margin = &bound - h.sup_norm();
        if min_margin.as_ref().is_none_or(|m| &margin < m) {
            min_margin = Some(margin.clone());
        }
        if !margin.is_positive() {
            report.violations.push(Violation {
                kind: "h-too-large".into(),
                sample: i - 1,
                seed,
                witness: serde_json::json!({
                    "g": fn_json(&g),
                    "h": fn_json(&h),
                    "eps": exact::format_rational(&eps),
                }),
                detail: "admissible sample with ‖h‖∞ ≥ 4ε".into(),
            });
        }
    }
    // informational: a middle value can move freely without changing ‖·‖∞ or osc
    let mut wide_failures = 0;
    let wide_trials = samples.min(100);
    for i in 0..wide_trials {
        let mut rng = sample_rng(seed ^ 0xA5A5, i);
        if points < 3 {
            break;
        }
        let eps = exact::rat(1, rng.gen_range(16..=64));
        let mut vals = vec![exact::int(0), exact::int(1), exact::rat(1, 2)];
        vals.extend((3..points).map(|_| exact::int(rng.gen_range(0..=1))));
        let g = TreeFn::from_values(vals);
        let mut h = TreeFn::zero(points);
        h.set(NodeId(2), &eps * exact::int(4));
        if midpoint_quantity(sq, &g, &h)? < &eps * &eps {
            wide_failures += 1;
        }
    }
    report.stat("admissible_samples", report.samples);
    report.stat("unresolved_samples", unresolved);
    if let Some(m) = min_margin {
        report.stat("min_margin_4eps_minus_h", exact::format_rational(&m));
    }
    report.stat("wide_spread_trials", wide_trials);
    report.stat("wide_spread_conclusion_failures", wide_failures);
    report
        .notes
        .push("wide-spread failures are informational: the premise does not hold there".into());
    Ok(report)
}

/// Finite-difference smoothness evidence at `f` along each direction, with
/// steps `2^{-k}` for `k` in `orders`. A kink is a one-sided slope mismatch
/// above `tol` at the finest step.
pub fn probe_smoothness(
    oracle: &NormOracle,
    f: &TreeFn,
    directions: &[TreeFn],
    orders: &[u32],
    tol: f64,
) -> Result<ProbeReport> {
    let mut report = ProbeReport::new("smoothness", 0);
    if f.is_zero() {
        return Err(crate::Error::ParamOutOfRange("smoothness probe needs f ≠ 0".into()));
    }
    let base = oracle(f)?.as_f64();
    let mut sorted = orders.to_vec();
    sorted.sort_unstable();
    let mut worst_by_step: Vec<f64> = vec![0.0; sorted.len()];
    for (i, h) in directions.iter().enumerate() {
        report.samples += 1;
        let mut gaps = Vec::new();
        for (j, &k) in sorted.iter().enumerate() {
            let tau = exact::pow2_neg(k);
            let step = exact::to_f64(&tau);
            let plus = (oracle(&f.add(&h.scale(&tau)))?.as_f64() - base) / step;
            let minus = (base - oracle(&f.sub(&h.scale(&tau)))?.as_f64()) / step;
            let gap = (plus - minus).abs();
            worst_by_step[j] = worst_by_step[j].max(gap);
            gaps.push((plus, minus, gap));
        }
        if let Some(&(plus, minus, gap)) = gaps.last() {
            if gap > tol {
                report.violations.push(Violation {
                    kind: "kink".into(),
                    sample: i,
                    seed: 0,
                    witness: serde_json::json!({
                        "f": fn_json(f),
                        "h": fn_json(h),
                        "step_exponent": sorted.last(),
                        "slope_plus": plus,
                        "slope_minus": minus,
                    }),
                    detail: format!("one-sided slopes differ by {gap:.3e}"),
                });
            }
        }
    }
    for (j, k) in sorted.iter().enumerate() {
        report.stat(&format!("max_slope_gap_step_2^-{k}"), format!("{:.6e}", worst_by_step[j]));
    }
    let uniform = worst_by_step.windows(2).all(|p| p[1] <= p[0] + 1e-12);
    let verdict = if !report.violations.is_empty() {
        "evidence against Gateaux differentiability"
    } else if uniform {
        "evidence for Fréchet-style differentiability in the sampled directions"
    } else {
        "evidence for Gateaux differentiability; rates not uniform across directions"
    };
    report.stat("verdict", verdict);
    report
        .notes
        .push("finite-difference surrogate only; no claim of true differentiability".into());
    Ok(report)
}

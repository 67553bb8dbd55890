use std::io::Write;
use std::path::Path;

use num_traits::{Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use renormlab::exact::{self, format_rational, parse_rational};
use renormlab::norms;
use renormlab::operators::{self, TreeOperators};
use renormlab::probes::{self, BetaStrategy, GameReport, GameState, KadecProbeOptions, MuOptions, ProbeReport};
use renormlab::tree::{generate, FiniteTree, NodeId, UnfoldOptions, DEFAULT_NODE_BUDGET};
use renormlab::weights::{self, Theorem, WeightFn};
use renormlab::{Error, NormValue, Result, TreeFn, TreePresentation};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::input::{load_function, load_weight, read_json, Source};
use crate::report::{document, report_diff};
use crate::{exit, Cli, Command, FnArgs, TreeArgs};

const NODE_BUDGET_VAR: &str = "RENORMLAB_NODE_BUDGET";

struct Outcome {
    config: Value,
    results: Value,
    code: u8,
}

impl Outcome {
    fn ok(config: Value, results: Value) -> Outcome {
        Outcome {
            config,
            results,
            code: exit::OK,
        }
    }
}

pub fn run(cli: &Cli) -> Result<u8> {
    let node_budget = node_budget(cli)?;
    let (name, outcome) = match &cli.command {
        Command::Generate {
            kind,
            n,
            k,
            h,
            labels,
            augment,
            cyclic,
            seed,
        } => ("generate", generate_cmd(kind, *n, *k, *h, *labels, augment, *cyclic, *seed)?),
        Command::Classify { tree, require } => ("classify", classify_cmd(tree, require.as_deref(), node_budget)?),
        Command::Norm { tree, name, f } => ("norm", norm_cmd(tree, name, f, node_budget)?),
        Command::Operator {
            tree,
            name,
            f,
            n_max,
            eps,
        } => ("operator", operator_cmd(tree, name, f, *n_max, eps.as_deref(), node_budget)?),
        Command::Probe { .. } => ("probe", probe_cmd(cli, node_budget)?),
        Command::Game {
            rounds,
            strategy,
            seed,
            plays,
            moves,
        } => ("game", game_cmd(cli.jobs, *rounds, strategy, *seed, *plays, moves.as_deref())?),
        Command::ReportDiff { a, b } => return diff_cmd(cli, a, b),
    };
    let doc = document(name, outcome.config, outcome.results);
    emit(cli.out.as_deref(), &serde_json::to_string_pretty(&doc)?)?;
    Ok(outcome.code)
}

fn node_budget(cli: &Cli) -> Result<usize> {
    if let Some(b) = cli.node_budget {
        return Ok(b);
    }
    match std::env::var(NODE_BUDGET_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("{NODE_BUDGET_VAR}={v:?} is not a node count"))),
        Err(_) => Ok(DEFAULT_NODE_BUDGET),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Parse(format!("cannot write report: {e}"));
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(io),
        None => match writeln!(std::io::stdout(), "{text}") {
            // a closed reader (e.g. `| head`) is not an error
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(io),
        },
    }
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::Parse(format!("--{flag} is required")))
}

fn seed_for(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::Parse(format!("--seed is required for the randomized {what}")))
}

fn rationals_json(values: &[renormlab::Rational]) -> Value {
    values.iter().map(format_rational).collect::<Vec<_>>().into()
}

fn digest(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

fn node_family(tree: &FiniteTree, family: &operators::IndexedFamily<NodeId>) -> Value {
    let map: serde_json::Map<String, Value> = family
        .iter()
        .map(|(&n, v)| (tree.label(n), Value::String(format_rational(v))))
        .collect();
    Value::Object(map)
}

/// Parallel map over `items` in `jobs` ordered chunks; results keep input order.
fn par_map<T: Sync, R: Send>(jobs: usize, items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if items.is_empty() {
        return Vec::new();
    }
    let jobs = jobs.clamp(1, items.len());
    let chunk = items.len().div_ceil(jobs);
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread panicked"))
            .collect()
    })
}

// generate

fn presentation_json(p: &TreePresentation, w: Option<&WeightFn>) -> Value {
    let mut doc = p.to_doc();
    if let Some(w) = w {
        for (c, class) in p.class_ids().zip(doc.classes.iter_mut()) {
            class.rho = Some(format_rational(w.class(c)));
        }
    }
    serde_json::to_value(doc).expect("presentation serialises")
}

#[allow(clippy::too_many_arguments)]
fn generate_cmd(
    kind: &str,
    n: Option<usize>,
    k: Option<usize>,
    h: Option<usize>,
    labels: Option<usize>,
    augment: &str,
    cyclic: bool,
    seed: Option<u64>,
) -> Result<Outcome> {
    let config = json!({
        "kind": kind, "n": n, "k": k, "h": h, "N": labels,
        "augment": augment, "cyclic": cyclic, "seed": seed,
    });
    let results = match kind {
        "chain" => json!({ "tree": presentation_json(&generate::chain(need(n, "n")?)?, None) }),
        "kary" => json!({ "tree": presentation_json(&generate::kary(need(k, "k")?, need(h, "h")?)?, None) }),
        "dyadic" => json!({ "tree": presentation_json(&generate::dyadic_loop(), None) }),
        "comb" => json!({ "tree": presentation_json(&generate::comb(), None) }),
        "star" => json!({ "tree": presentation_json(&generate::star(), None) }),
        "lambda" => {
            let base = generate::lambda(need(h, "h")?, need(labels, "N")?)?;
            let l = match augment {
                "none" => base,
                "pairs" => generate::augment_pairs(&base)?,
                "dyadic" => generate::augment_dyadic(&base)?,
                other => return Err(Error::Parse(format!("unknown augmentation {other:?}"))),
            };
            let w = weights::lambda_weights(&l);
            let names: Vec<String> = l.tree.node_ids().map(|t| l.tree.label(t)).collect();
            json!({
                "tree": l.tree.to_doc(),
                "weight": rationals_json(w.values()),
                "labels": names,
                "nodes": l.tree.len(),
            })
        }
        "random-tree" => {
            let seed = seed_for(seed, "generator")?;
            let n = n.unwrap_or(10);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tree = generate::random_tree(&mut rng, n, 3);
            let w = weights::random_weight(&mut rng, tree.presentation(), 0.5, 4 * n.max(1) as i64);
            json!({ "tree": tree.to_doc(), "weight": rationals_json(w.values()) })
        }
        "random-presentation" => {
            let seed = seed_for(seed, "generator")?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = generate::random_presentation(&mut rng, n.unwrap_or(4).max(1), cyclic);
            let w = weights::random_weight(&mut rng, &p, 0.5, 8);
            json!({ "tree": presentation_json(&p, Some(&w)), "weight": w.to_map(&p) })
        }
        other => return Err(Error::Parse(format!("unknown generator kind {other:?}"))),
    };
    Ok(Outcome::ok(config, results))
}

// classify

fn tree_config(t: &TreeArgs) -> Value {
    json!({
        "tree": t.tree.display().to_string(),
        "rho": t.rho.as_ref().map(|p| p.display().to_string()),
        "depth": t.depth,
        "copies": t.copies,
    })
}

const THEOREMS: [Theorem; 5] = [Theorem::T4_1, Theorem::T5_1, Theorem::T6_1, Theorem::T7_1, Theorem::T8_1];

fn classify_cmd(t: &TreeArgs, require: Option<&str>, _budget: usize) -> Result<Outcome> {
    let source = Source::load(&t.tree)?;
    let p = source.presentation();
    let w = load_weight(t.rho.as_deref(), p)?;
    let cls = weights::classify_points(p, &w)?;
    let conditions = THEOREMS
        .iter()
        .map(|&th| weights::check_conditions(p, &w, th))
        .collect::<Result<Vec<_>>>()?;
    let bad: Vec<&str> = cls.bad_classes().into_iter().map(|c| p.name(c)).collect();
    let required = require.map(Theorem::parse).transpose()?;
    let code = match required {
        Some(th) if !conditions.iter().any(|c| c.theorem == th && c.passed) => exit::INVARIANT,
        _ => exit::OK,
    };
    let mut config = tree_config(t);
    config["require"] = json!(require);
    Ok(Outcome {
        config,
        results: json!({
            "classes": cls.to_report(p),
            "bad": bad,
            "conditions": conditions,
        }),
        code,
    })
}

// norm

fn load_tree(t: &TreeArgs, budget: usize) -> Result<(Source, FiniteTree, WeightFn)> {
    let source = Source::load(&t.tree)?;
    let tree = source.finite(UnfoldOptions::new(t.depth, t.copies).with_budget(budget))?;
    let w = load_weight(t.rho.as_deref(), source.presentation())?;
    Ok((source, tree, w))
}

fn fn_config(f: &FnArgs) -> Value {
    json!({
        "values": f.values,
        "f": f.f.as_ref().map(|p| p.display().to_string()),
    })
}

fn norm_cmd(t: &TreeArgs, name: &str, fa: &FnArgs, budget: usize) -> Result<Outcome> {
    let (_, tree, w) = load_tree(t, budget)?;
    let f = load_function(fa.values.as_deref(), fa.f.as_deref(), tree.len())?;
    let value = norms::evaluate_named(name, &tree, &w, &f)?;
    let input: Vec<String> = f.values().iter().map(format_rational).collect();
    let mut config = tree_config(t);
    config["name"] = json!(name);
    config["function"] = fn_config(fa);
    Ok(Outcome::ok(
        config,
        json!({
            "norm": value,
            "record": {
                "norm": name,
                "tree": digest(&tree.to_json()),
                "weight": rationals_json(w.values()),
                "input_digest": digest(&input.join(",")),
                "value": format_rational(&value.value),
                "error_radius": format_rational(&value.error_radius),
            },
        }),
    ))
}

// operator

fn operator_cmd(
    t: &TreeArgs,
    name: &str,
    fa: &FnArgs,
    n_max: u32,
    eps: Option<&str>,
    budget: usize,
) -> Result<Outcome> {
    let (_, tree, w) = load_tree(t, budget)?;
    let mut config = tree_config(t);
    config["name"] = json!(name);
    config["function"] = fn_config(fa);
    config["n_max"] = json!(n_max);
    config["eps"] = json!(eps);
    if name == "rs_rank" {
        let ops = TreeOperators::new(&tree, &w)?;
        let rank = operators::linear_rank(&ops.rs_matrix());
        let code = if rank == tree.len() { exit::OK } else { exit::INVARIANT };
        return Ok(Outcome {
            config,
            results: json!({ "rank": rank, "dimension": tree.len(), "injective": rank == tree.len() }),
            code,
        });
    }
    let f = load_function(fa.values.as_deref(), fa.f.as_deref(), tree.len())?;
    let norm = f.sup_norm();
    let witnessed = |pairs: &[(NodeId, renormlab::Rational)]| {
        f.is_zero() || pairs.iter().any(|(s, v)| !v.is_zero() && f.get(*s).abs() == norm)
    };
    let (results, ok) = match name {
        "R" | "S" => {
            let ops = TreeOperators::new(&tree, &w)?;
            let fam = if name == "R" { ops.r(&f) } else { ops.s(&f) };
            (json!({ "values": node_family(&tree, &fam), "l1": format_rational(&fam.l1()) }), true)
        }
        "T_special" => {
            let ops = TreeOperators::new(&tree, &w)?;
            let fam = ops.t_special(&f)?;
            let pairs: Vec<(NodeId, renormlab::Rational)> = fam.iter().map(|(&(s, _), v)| (s, v.clone())).collect();
            let values: serde_json::Map<String, Value> = fam
                .iter()
                .map(|(&(s, u), v)| (format!("({},{})", tree.label(s), tree.label(u)), json!(format_rational(v))))
                .collect();
            let ok = witnessed(&pairs);
            (json!({ "values": values, "max_point_witness": ok }), ok)
        }
        "T_dyadic" => {
            let fam = operators::t_dyadic(&tree, &w, &f)?;
            let pairs: Vec<(NodeId, renormlab::Rational)> = fam.iter().map(|(&t, v)| (t, v.clone())).collect();
            let ok = witnessed(&pairs);
            (json!({ "values": node_family(&tree, &fam), "max_point_witness": ok }), ok)
        }
        "bump" => {
            let bm = operators::bump_map(&tree, &f, n_max);
            let values: serde_json::Map<String, Value> = bm
                .values
                .iter()
                .map(|(&(s, n), v)| (format!("({},{n})", tree.label(s)), json!(format_rational(v))))
                .collect();
            let bounded = bm.values.iter().all(|(&(_, n), v)| v.abs() <= exact::pow2_neg(n));
            let ok = bounded && (f.is_zero() || bm.witness.is_some());
            let witness = bm.witness.map(|(s, n)| json!({ "node": tree.label(s), "n": n }));
            (
                json!({ "values": values, "witness": witness, "in_u": bm.in_u, "bounded": bounded }),
                ok,
            )
        }
        "reconstruct" => {
            let eps = parse_rational(eps.ok_or_else(|| Error::Parse("--eps is required".into()))?)?;
            if !eps.is_positive() {
                return Err(Error::ParamOutOfRange("--eps must be positive".into()));
            }
            let rec = operators::select_reconstruction(&tree, &f, &eps);
            let family: Vec<Value> = rec
                .family
                .iter()
                .map(|&(s, n)| json!({ "node": tree.label(s), "n": n }))
                .collect();
            let ok = rec.error < eps;
            (
                json!({
                    "delta": format_rational(&rec.delta),
                    "family": family,
                    "error": format_rational(&rec.error),
                    "within_eps": ok,
                }),
                ok,
            )
        }
        other => return Err(Error::Parse(format!("unknown operator {other:?}"))),
    };
    Ok(Outcome {
        config,
        results,
        code: if ok { exit::OK } else { exit::INVARIANT },
    })
}

// probes

fn strategies(name: &str) -> Result<Vec<BetaStrategy>> {
    if name == "all" {
        Ok(BetaStrategy::ALL.to_vec())
    } else {
        name.split(',').map(BetaStrategy::parse).collect()
    }
}

fn play_games(jobs: usize, rounds: usize, strategy: &str, seed: u64, plays: usize) -> Result<(Value, u8)> {
    let runs: Vec<(BetaStrategy, u64)> = strategies(strategy)?
        .into_iter()
        .flat_map(|s| (0..plays.max(1) as u64).map(move |i| (s, seed + i)))
        .collect();
    let reports: Vec<Result<GameReport>> = par_map(jobs, &runs, |&(s, seed)| probes::choquet_game(rounds, s, seed));
    let reports = reports.into_iter().collect::<Result<Vec<_>>>()?;
    let failed = reports.iter().filter(|r| r.verdict == "FAIL").count();
    let verdict = if rounds == 0 {
        "VACUOUS"
    } else if failed == 0 {
        "PASS"
    } else {
        "FAIL"
    };
    let detail = runs.len() <= 3;
    let plays: Vec<Value> = reports
        .iter()
        .map(|r| {
            let mut v = json!({
                "strategy": r.strategy,
                "seed": r.seed,
                "verdict": r.verdict,
                "failed_round": r.failed_round,
                "r_list": r.state.r_list(),
            });
            if detail {
                v["trace"] = serde_json::to_value(&r.state.rounds).expect("rounds serialise");
            }
            v
        })
        .collect();
    let code = if failed == 0 { exit::OK } else { exit::INVARIANT };
    Ok((json!({ "verdict": verdict, "failed_plays": failed, "plays": plays }), code))
}

fn probe_result(rep: &ProbeReport) -> (Value, u8) {
    let mut v = rep.to_json();
    v["verdict"] = json!(if rep.passed() { "PASS" } else { "FAIL" });
    (v, if rep.passed() { exit::OK } else { exit::INVARIANT })
}

fn schedule(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad schedule entry {s:?}")))
        })
        .collect()
}

fn probe_cmd(cli: &Cli, budget: usize) -> Result<Outcome> {
    let Command::Probe {
        name,
        seed,
        tree,
        rho,
        depth,
        copies,
        norm,
        budget: samples,
        rounds,
        plays,
        strategy,
        points,
        tolerance,
        schedule: sched,
        h,
        labels,
        node,
        f: fa,
    } = &cli.command
    else {
        unreachable!("probe_cmd is only called for the probe subcommand")
    };
    let config = json!({
        "name": name, "seed": seed, "tree": tree.as_ref().map(|p| p.display().to_string()),
        "rho": rho.as_ref().map(|p| p.display().to_string()), "depth": depth, "copies": copies,
        "norm": norm, "budget": samples, "rounds": rounds, "plays": plays, "strategy": strategy,
        "points": points, "tolerance": tolerance, "schedule": sched, "h": h, "N": labels,
        "node": node, "function": fn_config(fa),
    });
    let tree_args = || -> Result<TreeArgs> {
        Ok(TreeArgs {
            tree: tree.clone().ok_or_else(|| Error::Parse("--tree is required for this probe".into()))?,
            rho: rho.clone(),
            depth: *depth,
            copies: *copies,
        })
    };
    let (results, code) = match name.as_str() {
        "choquet_game" => play_games(cli.jobs, *rounds, strategy, seed_for(*seed, "Choquet game")?, *plays)?,
        "strict_convexity" => {
            let seed = seed_for(*seed, "strict convexity probe")?;
            let (_, t, w) = load_tree(&tree_args()?, budget)?;
            let oracle = |g: &TreeFn| norms::evaluate_named(norm, &t, &w, g);
            probe_result(&probes::probe_strict_convexity(&oracle, &t, &w, *samples, seed)?)
        }
        "mlur" => {
            let seed = seed_for(*seed, "MLUR probe")?;
            probe_result(&probes::probe_mlur(&probes::osc_norm_sq, *points, *samples, seed)?)
        }
        "smoothness" => {
            let (_, t, w) = load_tree(&tree_args()?, budget)?;
            let f = load_function(fa.values.as_deref(), fa.f.as_deref(), t.len())?;
            let n = t.len();
            let unit = |i: usize| TreeFn::indicator(n, &[NodeId(i as u32)]);
            let mut dirs: Vec<TreeFn> = (0..n).map(unit).collect();
            for i in 0..n {
                for j in i + 1..n.min(i + 4) {
                    dirs.push(unit(i).sub(&unit(j)));
                }
            }
            let oracle = |g: &TreeFn| norms::evaluate_named(norm, &t, &w, g);
            probe_result(&probes::probe_smoothness(&oracle, &f, &dirs, &[8, 12, 16], *tolerance)?)
        }
        "mu" => {
            let seed = seed_for(*seed, "μ estimate")?;
            let (_, t, w) = load_tree(&tree_args()?, budget)?;
            let u = t.check(NodeId(*node as u32))?;
            let oracle = |g: &TreeFn| norms::evaluate_named(norm, &t, &w, g);
            let opts = MuOptions {
                budget: *samples,
                seed,
                ..Default::default()
            };
            let est = probes::mu_of_indicator(&oracle, &t, u, &opts)?;
            (
                json!({ "node": t.label(u), "estimate": est, "notes": [probes::TRUNCATION_BANNER] }),
                exit::OK,
            )
        }
        "kadec" => {
            let args = tree_args()?;
            let source = Source::load(&args.tree)?;
            let p = source.presentation_arc();
            let w = load_weight(args.rho.as_deref(), &p)?;
            let oracle = |t: &FiniteTree, w: &WeightFn, g: &TreeFn| -> Result<NormValue> {
                norms::evaluate_named(norm, t, w, g)
            };
            let opts = KadecProbeOptions {
                depth: *depth,
                schedule: schedule(sched)?,
                tolerance: *tolerance,
                ..Default::default()
            };
            probe_result(&probes::probe_kadec(&p, &w, &oracle, &opts)?)
        }
        "reverse_convergence" => {
            let args = tree_args()?;
            let p = Source::load(&args.tree)?.presentation_arc();
            probe_result(&probes::probe_reverse_convergence(&p, *depth, &schedule(sched)?)?)
        }
        "doubly_bad" => {
            let base = generate::lambda(need(*h, "h")?, need(*labels, "N")?)?;
            let aug = generate::augment_pairs(&base)?;
            let phi = if fa.values.is_some() || fa.f.is_some() {
                load_function(fa.values.as_deref(), fa.f.as_deref(), aug.tree.len())?
                    .values()
                    .to_vec()
            } else {
                aug.lambda.clone()
            };
            let best = probes::doubly_bad_search(&aug, &phi)?;
            (
                json!({ "best": best, "notes": ["near-witness search over the finite truncation"] }),
                exit::OK,
            )
        }
        other => return Err(Error::Parse(format!("unknown probe {other:?}"))),
    };
    Ok(Outcome { config, results, code })
}

// game

fn game_cmd(
    jobs: usize,
    rounds: usize,
    strategy: &str,
    seed: Option<u64>,
    plays: usize,
    moves: Option<&Path>,
) -> Result<Outcome> {
    let config = json!({
        "rounds": rounds, "strategy": strategy, "seed": seed, "plays": plays,
        "moves": moves.map(|p| p.display().to_string()),
    });
    let Some(path) = moves else {
        let (results, code) = play_games(jobs, rounds, strategy, seed_for(seed, "Choquet game")?, plays)?;
        return Ok(Outcome { config, results, code });
    };
    let doc = read_json(path)?;
    let list = doc
        .as_array()
        .ok_or_else(|| Error::Parse("moves file must hold an array".into()))?;
    let mut state = GameState::default();
    for (i, m) in list.iter().enumerate() {
        let t: Vec<u32> = serde_json::from_value(m.get("t").cloned().unwrap_or(Value::Null))
            .map_err(|e| Error::Parse(format!("move {i}: {e}")))?;
        let p = m
            .get("p")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse(format!("move {i}: missing p")))?;
        state.beta_move(t, p as u32)?;
    }
    let holds = state.invariant_holds();
    let verdict = match (state.round(), holds) {
        (0, _) => "VACUOUS",
        (_, true) => "PASS",
        _ => "FAIL",
    };
    Ok(Outcome {
        config,
        results: json!({
            "verdict": verdict,
            "r_list": state.r_list(),
            "trace": state.rounds,
        }),
        code: if holds { exit::OK } else { exit::INVARIANT },
    })
}

// report-diff

fn diff_cmd(cli: &Cli, a: &Path, b: &Path) -> Result<u8> {
    let entries = report_diff(&read_json(a)?, &read_json(b)?)?;
    let text: Vec<String> = entries.iter().map(ToString::to_string).collect();
    let body = if text.is_empty() {
        "no differences".to_string()
    } else {
        text.join("\n")
    };
    emit(cli.out.as_deref(), &body)?;
    Ok(exit::OK)
}

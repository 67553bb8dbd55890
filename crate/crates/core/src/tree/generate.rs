//! Generators for the standard example trees.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;
use rand::Rng;

use super::{FiniteTree, Multiplicity, NodeId, TreePresentation};
use crate::error::{Error, Result};
use crate::exact::{pow2_neg, Rational};

fn class(name: &str, children: &[(&str, Multiplicity)]) -> (String, Option<Rational>, Vec<(String, Multiplicity)>) {
    (
        name.to_string(),
        None,
        children.iter().map(|(c, m)| (c.to_string(), *m)).collect(),
    )
}

/// Totally ordered tree with `n` nodes.
pub fn chain(n: usize) -> Result<TreePresentation> {
    if n == 0 {
        return Err(Error::ParamOutOfRange("chain needs n >= 1".into()));
    }
    let classes = (0..n)
        .map(|i| {
            let kids: Vec<(String, Multiplicity)> = if i + 1 < n {
                vec![(format!("c{}", i + 1), Multiplicity::One)]
            } else {
                Vec::new()
            };
            (format!("c{i}"), None, kids)
        })
        .collect();
    TreePresentation::new(classes, vec!["c0".into()])
}

/// Full `k`-ary tree of height `h` (levels `l0 .. l{h-1}`).
pub fn kary(k: usize, h: usize) -> Result<TreePresentation> {
    if k == 0 || h == 0 {
        return Err(Error::ParamOutOfRange("kary needs k >= 1 and h >= 1".into()));
    }
    let classes = (0..h)
        .map(|i| {
            let kids = if i + 1 < h {
                vec![(format!("l{}", i + 1), Multiplicity::One); k]
            } else {
                Vec::new()
            };
            (format!("l{i}"), None, kids)
        })
        .collect();
    TreePresentation::new(classes, vec!["l0".into()])
}

/// Single class with two one-edges to itself: the full dyadic tree of height ω.
pub fn dyadic_loop() -> TreePresentation {
    TreePresentation::new(
        vec![class("D", &[("D", Multiplicity::One), ("D", Multiplicity::One)])],
        vec!["D".into()],
    )
    .expect("static presentation")
}

/// Spine with a self-loop and an ω-family of pendant leaves at each spine node.
pub fn comb() -> TreePresentation {
    TreePresentation::new(
        vec![
            class("S", &[("S", Multiplicity::One), ("L", Multiplicity::Omega)]),
            class("L", &[]),
        ],
        vec!["S".into()],
    )
    .expect("static presentation")
}

/// Root with an ω-family of leaves.
pub fn star() -> TreePresentation {
    TreePresentation::new(
        vec![class("R", &[("L", Multiplicity::Omega)]), class("L", &[])],
        vec!["R".into()],
    )
    .expect("static presentation")
}

/// What a node of a generated Λ-type tree stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LambdaNode {
    /// An injection `{0..k} → ω`, listed as its values.
    Injection(Vec<u32>),
    /// The inserted point `(t, side)` with `side ∈ {1, 2}`.
    Pair { of: NodeId, side: u8 },
    /// The spine point `t′ₙ` above `t`.
    Spine { of: NodeId, index: u32 },
}

/// A generated Λ truncation or one of its augmentations, carrying the
/// (extended) λ weight per node.
#[derive(Debug, Clone)]
pub struct LambdaTree {
    pub tree: FiniteTree,
    pub kinds: Vec<LambdaNode>,
    pub lambda: Vec<Rational>,
    /// For augmented trees: the Λ node each node came from.
    pub base: Vec<NodeId>,
}

impl LambdaTree {
    pub fn injection(&self, n: NodeId) -> Option<&[u32]> {
        match &self.kinds[n.index()] {
            LambdaNode::Injection(v) => Some(v),
            _ => None,
        }
    }
}

/// `λ(t) = Σ_{α∈dom t} 2^{-t(α)}`.
pub fn lambda_value(values: &[u32]) -> Rational {
    values
        .iter()
        .fold(Rational::zero(), |acc, &v| acc + pow2_neg(v))
}

fn label_of(values: &[u32]) -> String {
    let body: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{i}:{v}"))
        .collect();
    format!("{{{}}}", body.join(","))
}

/// Injections with domain of size ≤ `h` into `{0..N-1}`, ordered by
/// extension; the empty injection is the root. Children are listed in
/// increasing order of the appended label.
pub fn lambda(h: usize, n_labels: usize) -> Result<LambdaTree> {
    if n_labels == 0 {
        return Err(Error::ParamOutOfRange("lambda needs N >= 1".into()));
    }
    if h > n_labels {
        return Err(Error::ParamOutOfRange(format!(
            "lambda height {h} exceeds label bound {n_labels}"
        )));
    }
    let mut values: Vec<Vec<u32>> = vec![Vec::new()];
    let mut parents: Vec<Option<usize>> = vec![None];
    let mut i = 0;
    while i < values.len() {
        if values[i].len() < h {
            for label in 0..n_labels as u32 {
                if !values[i].contains(&label) {
                    let mut v = values[i].clone();
                    v.push(label);
                    values.push(v);
                    parents.push(Some(i));
                    if values.len() > crate::tree::DEFAULT_NODE_BUDGET * 10 {
                        return Err(Error::SizeBudgetExceeded {
                            what: "lambda".into(),
                            needed: values.len(),
                            cap: crate::tree::DEFAULT_NODE_BUDGET * 10,
                        });
                    }
                }
            }
        }
        i += 1;
    }
    let names = values.iter().map(|v| label_of(v)).collect();
    let tree = FiniteTree::from_parents(names, &parents)?;
    let lambda = values.iter().map(|v| lambda_value(v)).collect();
    let base = (0..values.len() as u32).map(NodeId).collect();
    Ok(LambdaTree {
        tree,
        kinds: values.into_iter().map(LambdaNode::Injection).collect(),
        lambda,
        base,
    })
}

struct Builder {
    names: Vec<String>,
    parents: Vec<Option<usize>>,
    kinds: Vec<LambdaNode>,
    lambda: Vec<Rational>,
    base: Vec<NodeId>,
}

impl Builder {
    fn push(&mut self, name: String, parent: Option<usize>, kind: LambdaNode, lambda: Rational, base: NodeId) -> usize {
        self.names.push(name);
        self.parents.push(parent);
        self.kinds.push(kind);
        self.lambda.push(lambda);
        self.base.push(base);
        self.names.len() - 1
    }

    fn finish(self) -> Result<LambdaTree> {
        let tree = FiniteTree::from_parents(self.names, &self.parents)?;
        Ok(LambdaTree {
            tree,
            kinds: self.kinds,
            lambda: self.lambda,
            base: self.base,
        })
    }
}

fn require_plain(src: &LambdaTree) -> Result<()> {
    if src.kinds.iter().all(|k| matches!(k, LambdaNode::Injection(_))) {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange(
            "augmentations take a plain Λ truncation".into(),
        ))
    }
}

/// Inserts `(t,1)` and `(t,2)` between each internal `t` and its successors;
/// successors at even positions of the available-label order go above
/// `(t,1)`, odd positions above `(t,2)`. `λ(t,i) := λ(t)`.
pub fn augment_pairs(src: &LambdaTree) -> Result<LambdaTree> {
    require_plain(src)?;
    let t = &src.tree;
    let mut b = Builder {
        names: Vec::new(),
        parents: Vec::new(),
        kinds: Vec::new(),
        lambda: Vec::new(),
        base: Vec::new(),
    };
    let mut pairs: BTreeMap<(NodeId, u8), usize> = BTreeMap::new();
    // parents precede children in the source, so a single pass suffices
    for v in t.node_ids() {
        let parent = t.parent(v).map(|p| {
            let pos = t.children(p).iter().position(|&c| c == v).unwrap_or(0);
            pairs[&(p, if pos % 2 == 0 { 1 } else { 2 })]
        });
        let idx = b.push(
            t.presentation().name(t.class_of(v)).to_string(),
            parent,
            src.kinds[v.index()].clone(),
            src.lambda[v.index()].clone(),
            v,
        );
        if !t.children(v).is_empty() {
            for side in [1u8, 2] {
                let name = format!("({},{side})", b.names[idx]);
                let i = b.push(
                    name,
                    Some(idx),
                    LambdaNode::Pair { of: v, side },
                    src.lambda[v.index()].clone(),
                    v,
                );
                pairs.insert((v, side), i);
            }
        }
    }
    b.finish()
}

/// Replaces each successor list `t₀,t₁,…,t_{k-1}` by the binary spine
/// `t → {t₀, t′₀}`, `t′ₙ → {tₙ₊₁, t′ₙ₊₁}`, with `t′_{k-1}` a leaf and
/// `λ(t′ₙ) := λ(t)`.
pub fn augment_dyadic(src: &LambdaTree) -> Result<LambdaTree> {
    require_plain(src)?;
    let t = &src.tree;
    let mut b = Builder {
        names: Vec::new(),
        parents: Vec::new(),
        kinds: Vec::new(),
        lambda: Vec::new(),
        base: Vec::new(),
    };
    // (source node, index in new tree) pending placement of their children
    let root = t.roots()[0];
    let r = b.push(
        t.presentation().name(t.class_of(root)).to_string(),
        None,
        src.kinds[root.index()].clone(),
        src.lambda[root.index()].clone(),
        root,
    );
    let mut stack = vec![(root, r)];
    while let Some((v, vi)) = stack.pop() {
        let kids = t.children(v);
        let mut attach = vi;
        for (n, &c) in kids.iter().enumerate() {
            let ci = b.push(
                t.presentation().name(t.class_of(c)).to_string(),
                Some(attach),
                src.kinds[c.index()].clone(),
                src.lambda[c.index()].clone(),
                c,
            );
            stack.push((c, ci));
            let name = format!("{}'{n}", b.names[vi]);
            attach = b.push(
                name,
                Some(attach),
                LambdaNode::Spine { of: v, index: n as u32 },
                src.lambda[v.index()].clone(),
                v,
            );
        }
    }
    b.finish()
}

/// Random recursive forest on `n` nodes: node `i` attaches to a uniformly
/// chosen earlier node, limited to `max_children` children per node.
pub fn random_parents<R: Rng>(rng: &mut R, n: usize, max_children: usize) -> Vec<Option<usize>> {
    let mut parents = vec![None; n];
    let mut count = vec![0usize; n];
    for (i, parent) in parents.iter_mut().enumerate().skip(1) {
        let open: Vec<usize> = (0..i).filter(|&j| count[j] < max_children).collect();
        if open.is_empty() {
            continue;
        }
        let p = open[rng.gen_range(0..open.len())];
        *parent = Some(p);
        count[p] += 1;
    }
    parents
}

pub fn random_tree<R: Rng>(rng: &mut R, n: usize, max_children: usize) -> FiniteTree {
    FiniteTree::from_parent_list(&random_parents(rng, n, max_children))
        .expect("parents precede children")
}

/// Random presentation on `classes` classes. Edges point from class `i` to
/// classes `j ≥ i` (self-loops allowed when `cyclic`), each one or ω.
pub fn random_presentation<R: Rng>(rng: &mut R, classes: usize, cyclic: bool) -> TreePresentation {
    let mut records = Vec::with_capacity(classes);
    for i in 0..classes {
        let mut kids = Vec::new();
        // guarantee reachability through a spanning edge from an earlier class
        let extra = rng.gen_range(0..3);
        for _ in 0..extra {
            let lo = if cyclic { i } else { i + 1 };
            if lo >= classes {
                break;
            }
            let j = rng.gen_range(lo..classes);
            let m = if rng.gen_bool(0.4) {
                Multiplicity::Omega
            } else {
                Multiplicity::One
            };
            kids.push((format!("k{j}"), m));
        }
        records.push((format!("k{i}"), None, kids));
    }
    for j in 1..classes {
        let i = rng.gen_range(0..j);
        let m = if rng.gen_bool(0.3) {
            Multiplicity::Omega
        } else {
            Multiplicity::One
        };
        records[i].2.push((format!("k{j}"), m));
    }
    TreePresentation::new(records, vec!["k0".into()]).expect("connected by construction")
}

pub fn shared(p: TreePresentation) -> Arc<TreePresentation> {
    Arc::new(p)
}

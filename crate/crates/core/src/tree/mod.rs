//! Trees: finite presentations, their depth/copy-bounded unfoldings, and the
//! order-theoretic queries on unfolded trees.
//!
//! A [`TreePresentation`] is a finite directed graph of classes whose edges
//! carry a multiplicity (`one` or `omega`). Unfolding it from its roots gives
//! a (possibly infinite) tree; [`unfold`] realises a finite part of that tree
//! as a [`FiniteTree`], expanding every `omega` edge into a fixed number of
//! identically-shaped sibling copies. The imaginary bottom element `0` is
//! never materialised: minimal nodes simply have no parent.

pub mod generate;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Rational};

/// Default cap on materialised nodes; overridable per call.
pub const DEFAULT_NODE_BUDGET: usize = 10_000;

/// Node of a [`FiniteTree`]; an index into the tree's node table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Class of a [`TreePresentation`]; an index into its class table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassId(pub u32);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Multiplicity {
    One,
    Omega,
}

impl Multiplicity {
    pub fn parse(s: &str) -> Result<Multiplicity> {
        match s {
            "one" | "1" => Ok(Multiplicity::One),
            "omega" | "ω" => Ok(Multiplicity::Omega),
            other => Err(Error::BadMultiplicity(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassRecord {
    pub name: String,
    /// Optional weight slot carried along with the structure.
    pub rho: Option<Rational>,
    pub children: Vec<(ClassId, Multiplicity)>,
}

/// Validated finite description of a tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreePresentation {
    classes: Vec<ClassRecord>,
    roots: Vec<ClassId>,
    by_name: HashMap<String, ClassId>,
}

/// On-disk form of a presentation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PresentationDoc {
    pub classes: Vec<ClassDoc>,
    #[serde(default)]
    pub roots: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<String>,
    #[serde(default)]
    pub children: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub class: String,
    #[serde(default = "default_mult")]
    pub mult: String,
}

fn default_mult() -> String {
    "one".to_string()
}

/// `(name, embedded weight, children)` of one class.
pub type ClassSpec = (String, Option<Rational>, Vec<(String, Multiplicity)>);

impl TreePresentation {
    /// Builds and validates a presentation from `(name, children)` records.
    /// Roots default to the classes without incoming edges.
    pub fn new(
        classes: Vec<ClassSpec>,
        roots: Vec<String>,
    ) -> Result<TreePresentation> {
        let mut by_name = HashMap::new();
        for (i, (name, _, _)) in classes.iter().enumerate() {
            if by_name.insert(name.clone(), ClassId(i as u32)).is_some() {
                return Err(Error::Parse(format!("class `{name}` declared twice")));
            }
        }
        let lookup = |name: &str| {
            by_name
                .get(name)
                .copied()
                .ok_or_else(|| Error::DanglingClass(name.to_string()))
        };
        let mut records = Vec::with_capacity(classes.len());
        for (name, rho, children) in &classes {
            let children = children
                .iter()
                .map(|(c, m)| Ok((lookup(c)?, *m)))
                .collect::<Result<Vec<_>>>()?;
            records.push(ClassRecord {
                name: name.clone(),
                rho: rho.clone(),
                children,
            });
        }
        let roots = if roots.is_empty() {
            let mut has_parent = vec![false; records.len()];
            for r in &records {
                for (c, _) in &r.children {
                    has_parent[c.index()] = true;
                }
            }
            let inferred: Vec<ClassId> = (0..records.len())
                .filter(|&i| !has_parent[i])
                .map(|i| ClassId(i as u32))
                .collect();
            if inferred.is_empty() && !records.is_empty() {
                vec![ClassId(0)]
            } else {
                inferred
            }
        } else {
            roots.iter().map(|r| lookup(r)).collect::<Result<Vec<_>>>()?
        };
        let p = TreePresentation {
            classes: records,
            roots,
            by_name,
        };
        if p.classes.is_empty() {
            return Err(Error::Parse("presentation has no classes".into()));
        }
        let reach = p.reachable_from_roots();
        if let Some(i) = reach.iter().position(|r| !r) {
            return Err(Error::Parse(format!(
                "class `{}` is not reachable from the roots",
                p.classes[i].name
            )));
        }
        Ok(p)
    }

    pub fn from_doc(doc: &PresentationDoc) -> Result<TreePresentation> {
        let classes = doc
            .classes
            .iter()
            .map(|c| {
                let rho = c.rho.as_deref().map(exact::parse_rational).transpose()?;
                let children = c
                    .children
                    .iter()
                    .map(|e| Ok((e.class.clone(), Multiplicity::parse(&e.mult)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok((c.id.clone(), rho, children))
            })
            .collect::<Result<Vec<_>>>()?;
        TreePresentation::new(classes, doc.roots.clone())
    }

    /// Parses the JSON presentation format.
    pub fn parse(text: &str) -> Result<TreePresentation> {
        let doc: PresentationDoc = serde_json::from_str(text)?;
        TreePresentation::from_doc(&doc)
    }

    pub fn to_doc(&self) -> PresentationDoc {
        PresentationDoc {
            classes: self
                .classes
                .iter()
                .map(|c| ClassDoc {
                    id: c.name.clone(),
                    rho: c.rho.as_ref().map(exact::format_rational),
                    children: c
                        .children
                        .iter()
                        .map(|(t, m)| EdgeDoc {
                            class: self.classes[t.index()].name.clone(),
                            mult: match m {
                                Multiplicity::One => "one".into(),
                                Multiplicity::Omega => "omega".into(),
                            },
                        })
                        .collect(),
                })
                .collect(),
            roots: self
                .roots
                .iter()
                .map(|r| self.classes[r.index()].name.clone())
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("presentation serialises")
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_ids(&self) -> impl Iterator<Item = ClassId> {
        (0..self.classes.len() as u32).map(ClassId)
    }

    pub fn class(&self, c: ClassId) -> &ClassRecord {
        &self.classes[c.index()]
    }

    pub fn name(&self, c: ClassId) -> &str {
        &self.classes[c.index()].name
    }

    pub fn lookup(&self, name: &str) -> Option<ClassId> {
        self.by_name.get(name).copied()
    }

    pub fn roots(&self) -> &[ClassId] {
        &self.roots
    }

    pub fn children(&self, c: ClassId) -> &[(ClassId, Multiplicity)] {
        &self.classes[c.index()].children
    }

    /// Weights stored in the class records, if every class carries one.
    pub fn embedded_rho(&self) -> Option<Vec<Rational>> {
        self.classes.iter().map(|c| c.rho.clone()).collect()
    }

    fn reachable_from_roots(&self) -> Vec<bool> {
        let mut seen = vec![false; self.classes.len()];
        let mut stack: Vec<ClassId> = self.roots.clone();
        while let Some(c) = stack.pop() {
            if std::mem::replace(&mut seen[c.index()], true) {
                continue;
            }
            for (d, _) in &self.classes[c.index()].children {
                stack.push(*d);
            }
        }
        seen
    }

    /// Classes reachable from `c` by a path of length >= 1.
    pub fn strictly_reachable(&self, c: ClassId) -> Vec<bool> {
        let mut seen = vec![false; self.classes.len()];
        let mut stack: Vec<ClassId> = self.children(c).iter().map(|e| e.0).collect();
        while let Some(d) = stack.pop() {
            if std::mem::replace(&mut seen[d.index()], true) {
                continue;
            }
            stack.extend(self.children(d).iter().map(|e| e.0));
        }
        seen
    }

    /// Strongly connected components in reverse topological order (Tarjan).
    pub fn sccs(&self) -> Vec<Vec<ClassId>> {
        struct St<'a> {
            p: &'a TreePresentation,
            index: Vec<Option<usize>>,
            low: Vec<usize>,
            on_stack: Vec<bool>,
            stack: Vec<usize>,
            next: usize,
            out: Vec<Vec<ClassId>>,
        }
        fn visit(st: &mut St<'_>, v: usize) {
            st.index[v] = Some(st.next);
            st.low[v] = st.next;
            st.next += 1;
            st.stack.push(v);
            st.on_stack[v] = true;
            let children: Vec<usize> = st.p.classes[v].children.iter().map(|e| e.0.index()).collect();
            for w in children {
                match st.index[w] {
                    None => {
                        visit(st, w);
                        st.low[v] = st.low[v].min(st.low[w]);
                    }
                    Some(iw) if st.on_stack[w] => st.low[v] = st.low[v].min(iw),
                    _ => {}
                }
            }
            if Some(st.low[v]) == st.index[v] {
                let mut comp = Vec::new();
                while let Some(w) = st.stack.pop() {
                    st.on_stack[w] = false;
                    comp.push(ClassId(w as u32));
                    if w == v {
                        break;
                    }
                }
                comp.sort();
                st.out.push(comp);
            }
        }
        let n = self.classes.len();
        let mut st = St {
            p: self,
            index: vec![None; n],
            low: vec![0; n],
            on_stack: vec![false; n],
            stack: Vec::new(),
            next: 0,
            out: Vec::new(),
        };
        for v in 0..n {
            if st.index[v].is_none() {
                visit(&mut st, v);
            }
        }
        st.out
    }

    /// Components that carry a cycle (size > 1, or a self-loop).
    pub fn cycles(&self) -> Vec<Vec<ClassId>> {
        self.sccs()
            .into_iter()
            .filter(|comp| {
                comp.len() > 1 || self.children(comp[0]).iter().any(|(d, _)| *d == comp[0])
            })
            .collect()
    }

    pub fn is_cyclic(&self) -> bool {
        !self.cycles().is_empty()
    }
}

/// One materialised node of a [`FiniteTree`].
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub parent: Option<NodeId>,
    pub class: ClassId,
    /// Index among the siblings produced by the same presentation edge.
    pub copy_index: u32,
    /// Position of the producing edge in the parent class's child list
    /// (position in the root list for minimal nodes).
    pub edge_slot: u32,
    /// True when part of the unfolded subtree below this node was cut.
    pub truncated: bool,
    pub children: Vec<NodeId>,
    /// 1 for minimal nodes.
    pub depth: u32,
}

/// A finite forest realising part of a presentation's unfolding.
#[derive(Debug, Clone)]
pub struct FiniteTree {
    presentation: Arc<TreePresentation>,
    nodes: Vec<Node>,
    roots: Vec<NodeId>,
    tin: Vec<u32>,
    tout: Vec<u32>,
}

impl PartialEq for FiniteTree {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.roots == other.roots
    }
}

/// Exported form of a [`FiniteTree`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiniteTreeDoc {
    pub nodes: Vec<NodeDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: u32,
    pub parent: Option<u32>,
    pub class_of: String,
    pub copy_index: u32,
    pub truncated: bool,
}

impl FiniteTree {
    fn from_nodes(presentation: Arc<TreePresentation>, nodes: Vec<Node>) -> FiniteTree {
        let roots: Vec<NodeId> = nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.parent.is_none())
            .map(|(i, _)| NodeId(i as u32))
            .collect();
        let mut tin = vec![0; nodes.len()];
        let mut tout = vec![0; nodes.len()];
        let mut clock = 0u32;
        // iterative DFS: (node, next child position)
        for &r in &roots {
            let mut stack = vec![(r, 0usize)];
            tin[r.index()] = clock;
            clock += 1;
            while let Some((v, pos)) = stack.pop() {
                let kids = &nodes[v.index()].children;
                if pos < kids.len() {
                    stack.push((v, pos + 1));
                    let c = kids[pos];
                    tin[c.index()] = clock;
                    clock += 1;
                    stack.push((c, 0));
                } else {
                    tout[v.index()] = clock;
                    clock += 1;
                }
            }
        }
        FiniteTree {
            presentation,
            nodes,
            roots,
            tin,
            tout,
        }
    }

    /// A tree given by a parent list (`None` marks a minimal node); every node
    /// becomes its own class, so per-class weights are per-node weights.
    /// Parents must precede their children.
    pub fn from_parents(names: Vec<String>, parents: &[Option<usize>]) -> Result<FiniteTree> {
        assert_eq!(names.len(), parents.len());
        let n = parents.len();
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = *p {
                if p >= i {
                    return Err(Error::Parse(format!(
                        "parent {p} of node {i} must precede it"
                    )));
                }
                kids[p].push(i);
            }
        }
        let classes = (0..n)
            .map(|i| {
                (
                    names[i].clone(),
                    None,
                    kids[i]
                        .iter()
                        .map(|&k| (names[k].clone(), Multiplicity::One))
                        .collect(),
                )
            })
            .collect();
        let presentation = Arc::new(TreePresentation::new(classes, Vec::new())?);
        let mut depth = vec![1u32; n];
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            if let Some(p) = parents[i] {
                depth[i] = depth[p] + 1;
            }
            let slot = match parents[i] {
                Some(p) => kids[p].iter().position(|&k| k == i).unwrap_or(0) as u32,
                None => 0,
            };
            nodes.push(Node {
                parent: parents[i].map(|p| NodeId(p as u32)),
                class: ClassId(i as u32),
                copy_index: 0,
                edge_slot: slot,
                truncated: false,
                children: kids[i].iter().map(|&k| NodeId(k as u32)).collect(),
                depth: depth[i],
            });
        }
        Ok(FiniteTree::from_nodes(presentation, nodes))
    }

    /// Unnamed variant of [`FiniteTree::from_parents`].
    pub fn from_parent_list(parents: &[Option<usize>]) -> Result<FiniteTree> {
        let names = (0..parents.len()).map(|i| format!("v{i}")).collect();
        FiniteTree::from_parents(names, parents)
    }

    pub fn presentation(&self) -> &TreePresentation {
        &self.presentation
    }

    pub fn presentation_arc(&self) -> Arc<TreePresentation> {
        Arc::clone(&self.presentation)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn node(&self, n: NodeId) -> &Node {
        &self.nodes[n.index()]
    }

    pub fn check(&self, n: NodeId) -> Result<NodeId> {
        if n.index() < self.nodes.len() {
            Ok(n)
        } else {
            Err(Error::UnknownNode(n.index()))
        }
    }

    /// Minimal nodes (the successors of the imaginary bottom element).
    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        self.nodes[n.index()].parent
    }

    pub fn children(&self, n: NodeId) -> &[NodeId] {
        &self.nodes[n.index()].children
    }

    pub fn class_of(&self, n: NodeId) -> ClassId {
        self.nodes[n.index()].class
    }

    pub fn is_truncated(&self, n: NodeId) -> bool {
        self.nodes[n.index()].truncated
    }

    pub fn depth(&self, n: NodeId) -> u32 {
        self.nodes[n.index()].depth
    }

    pub fn label(&self, n: NodeId) -> String {
        let node = &self.nodes[n.index()];
        let name = self.presentation.name(node.class);
        if self.presentation.len() == self.nodes.len() && node.copy_index == 0 {
            name.to_string()
        } else {
            format!("{name}#{}", n.0)
        }
    }

    /// `a ⪯ b` in the tree order.
    pub fn precedes_eq(&self, a: NodeId, b: NodeId) -> bool {
        self.tin[a.index()] <= self.tin[b.index()] && self.tout[b.index()] <= self.tout[a.index()]
    }

    /// `a ≺ b`.
    pub fn precedes(&self, a: NodeId, b: NodeId) -> bool {
        a != b && self.precedes_eq(a, b)
    }

    pub fn comparable(&self, a: NodeId, b: NodeId) -> bool {
        self.precedes_eq(a, b) || self.precedes_eq(b, a)
    }

    /// `(0,t]`, listed from the minimal element up to `t`.
    pub fn down_set(&self, t: NodeId) -> Vec<NodeId> {
        let mut chain = vec![t];
        let mut cur = t;
        while let Some(p) = self.parent(cur) {
            chain.push(p);
            cur = p;
        }
        chain.reverse();
        chain
    }

    /// `[t,∞)` in preorder.
    pub fn up_set(&self, t: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![t];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.children(v).iter().rev());
        }
        out
    }

    /// `(s,t]` for `s ⪯ t`, bottom-up; `s = None` means the bottom element.
    pub fn open_closed(&self, s: Option<NodeId>, t: NodeId) -> Vec<NodeId> {
        let chain = self.down_set(t);
        match s {
            None => chain,
            Some(s) => match chain.iter().position(|&c| c == s) {
                Some(i) => chain[i + 1..].to_vec(),
                None => Vec::new(),
            },
        }
    }

    pub fn incomparable(&self, t: NodeId) -> Vec<NodeId> {
        self.node_ids().filter(|&u| !self.comparable(t, u)).collect()
    }

    pub fn min_of(&self, set: &[NodeId]) -> Vec<NodeId> {
        set.iter()
            .copied()
            .filter(|&s| !set.iter().any(|&o| self.precedes(o, s)))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn max_of(&self, set: &[NodeId]) -> Vec<NodeId> {
        set.iter()
            .copied()
            .filter(|&s| !set.iter().any(|&o| self.precedes(s, o)))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn is_antichain(&self, set: &[NodeId]) -> bool {
        set.iter().enumerate().all(|(i, &a)| {
            set[i + 1..]
                .iter()
                .all(|&b| a != b && !self.comparable(a, b))
        })
    }

    /// Basic reverse-topology neighbourhood `[t,∞) \ ⋃_{u∈F} [u,∞)`.
    pub fn reverse_nbhd(&self, t: NodeId, excluded: &[NodeId]) -> Result<Vec<NodeId>> {
        for &u in excluded {
            self.check(u)?;
            if self.parent(u) != Some(t) {
                return Err(Error::ParamOutOfRange(format!(
                    "{u} is not an immediate successor of {t}"
                )));
            }
        }
        Ok(self
            .up_set(t)
            .into_iter()
            .filter(|&v| !excluded.iter().any(|&u| self.precedes_eq(u, v)))
            .collect())
    }

    /// Answers one order query; nodes are validated first.
    pub fn query(&self, q: &PosetQuery) -> Result<QueryAnswer> {
        use PosetQuery::*;
        let nodes = |set: &[NodeId]| -> Result<()> {
            set.iter().try_for_each(|&n| self.check(n).map(|_| ()))
        };
        Ok(match q {
            DownSet(t) => QueryAnswer::Nodes(self.down_set(self.check(*t)?)),
            UpSet(t) => {
                let mut v = self.up_set(self.check(*t)?);
                v.sort();
                QueryAnswer::Nodes(v)
            }
            Successors(t) => QueryAnswer::Nodes(self.children(self.check(*t)?).to_vec()),
            Predecessor(t) => {
                QueryAnswer::Nodes(self.parent(self.check(*t)?).into_iter().collect())
            }
            Incomparable(t) => QueryAnswer::Nodes(self.incomparable(self.check(*t)?)),
            MinOf(s) => {
                nodes(s)?;
                QueryAnswer::Nodes(self.min_of(s))
            }
            MaxOf(s) => {
                nodes(s)?;
                QueryAnswer::Nodes(self.max_of(s))
            }
            IsAntichain(s) => {
                nodes(s)?;
                QueryAnswer::Bool(self.is_antichain(s))
            }
            ReverseNbhd(t, f) => {
                let mut v = self.reverse_nbhd(self.check(*t)?, f)?;
                v.sort();
                QueryAnswer::Nodes(v)
            }
        })
    }

    /// Path key of a node: (edge slot, copy index) pairs from the root.
    /// Unfoldings of one presentation agree on the keys of shared nodes.
    pub fn path_key(&self, n: NodeId) -> Vec<(u32, u32)> {
        self.down_set(n)
            .into_iter()
            .map(|v| (self.nodes[v.index()].edge_slot, self.nodes[v.index()].copy_index))
            .collect()
    }

    pub fn to_doc(&self) -> FiniteTreeDoc {
        FiniteTreeDoc {
            nodes: self
                .node_ids()
                .map(|n| {
                    let node = self.node(n);
                    NodeDoc {
                        id: n.0,
                        parent: node.parent.map(|p| p.0),
                        class_of: self.presentation.name(node.class).to_string(),
                        copy_index: node.copy_index,
                        truncated: node.truncated,
                    }
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("tree serialises")
    }

    /// Rebuilds an exported tree; classes become one-per-node.
    pub fn from_doc(doc: &FiniteTreeDoc) -> Result<FiniteTree> {
        let mut index = HashMap::new();
        for (i, n) in doc.nodes.iter().enumerate() {
            index.insert(n.id, i);
        }
        let parents = doc
            .nodes
            .iter()
            .map(|n| {
                n.parent
                    .map(|p| {
                        index
                            .get(&p)
                            .copied()
                            .ok_or(Error::UnknownNode(p as usize))
                    })
                    .transpose()
            })
            .collect::<Result<Vec<_>>>()?;
        let names = doc
            .nodes
            .iter()
            .map(|n| format!("{}#{}", n.class_of, n.id))
            .collect();
        let mut tree = FiniteTree::from_parents(names, &parents)?;
        for (i, n) in doc.nodes.iter().enumerate() {
            tree.nodes[i].truncated = n.truncated;
            tree.nodes[i].copy_index = n.copy_index;
        }
        Ok(tree)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PosetQuery {
    DownSet(NodeId),
    UpSet(NodeId),
    Successors(NodeId),
    Predecessor(NodeId),
    Incomparable(NodeId),
    MinOf(Vec<NodeId>),
    MaxOf(Vec<NodeId>),
    IsAntichain(Vec<NodeId>),
    ReverseNbhd(NodeId, Vec<NodeId>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryAnswer {
    Nodes(Vec<NodeId>),
    Bool(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnfoldOptions {
    /// Maximum number of occurrences of any class on a root path.
    pub depth: usize,
    /// Sibling copies materialised per `omega` edge.
    pub copies: usize,
    pub node_budget: usize,
}

impl UnfoldOptions {
    pub fn new(depth: usize, copies: usize) -> UnfoldOptions {
        UnfoldOptions {
            depth,
            copies,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> UnfoldOptions {
        self.node_budget = budget;
        self
    }
}

/// Realises the unfolding of `p` breadth-first. A class may occur at most
/// `depth` times on any root path; children beyond that are cut and their
/// parent flagged truncated. Acyclic presentations unfold completely.
pub fn unfold(p: &Arc<TreePresentation>, opts: UnfoldOptions) -> Result<FiniteTree> {
    if opts.depth == 0 || opts.copies == 0 {
        return Err(Error::ParamOutOfRange(
            "unfold needs depth >= 1 and copies >= 1".into(),
        ));
    }
    let mut nodes: Vec<Node> = Vec::new();
    let mut queue = VecDeque::new();
    let over = |needed: usize| Error::SizeBudgetExceeded {
        what: "unfold".into(),
        needed,
        cap: opts.node_budget,
    };
    for (slot, &r) in p.roots().iter().enumerate() {
        if nodes.len() >= opts.node_budget {
            return Err(over(nodes.len() + 1));
        }
        nodes.push(Node {
            parent: None,
            class: r,
            copy_index: 0,
            edge_slot: slot as u32,
            truncated: false,
            children: Vec::new(),
            depth: 1,
        });
        queue.push_back(NodeId(nodes.len() as u32 - 1));
    }
    while let Some(v) = queue.pop_front() {
        let class = nodes[v.index()].class;
        for (slot, &(child, mult)) in p.children(class).iter().enumerate() {
            // occurrences of `child` on (0,v]
            let mut count = 0;
            let mut cur = Some(v);
            while let Some(c) = cur {
                if nodes[c.index()].class == child {
                    count += 1;
                }
                cur = nodes[c.index()].parent;
            }
            if count >= opts.depth {
                nodes[v.index()].truncated = true;
                continue;
            }
            let k = match mult {
                Multiplicity::One => 1,
                Multiplicity::Omega => opts.copies,
            };
            if nodes.len() + k > opts.node_budget {
                return Err(over(nodes.len() + k));
            }
            for copy in 0..k {
                let id = NodeId(nodes.len() as u32);
                let depth = nodes[v.index()].depth + 1;
                nodes.push(Node {
                    parent: Some(v),
                    class: child,
                    copy_index: copy as u32,
                    edge_slot: slot as u32,
                    truncated: false,
                    children: Vec::new(),
                    depth,
                });
                nodes[v.index()].children.push(id);
                queue.push_back(id);
            }
        }
    }
    Ok(FiniteTree::from_nodes(Arc::clone(p), nodes))
}

/// A finitely supported rational function on a [`FiniteTree`]; nodes not
/// materialised carry the value 0, as do the imaginary elements `0`, `∞`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreeFn {
    values: Vec<Rational>,
}

impl TreeFn {
    pub fn zero(len: usize) -> TreeFn {
        TreeFn {
            values: vec![Rational::zero(); len],
        }
    }

    pub fn from_values(values: Vec<Rational>) -> TreeFn {
        TreeFn { values }
    }

    pub fn from_f64(values: &[f64]) -> TreeFn {
        TreeFn {
            values: values.iter().map(|&v| exact::rat_from_f64(v)).collect(),
        }
    }

    /// `1_{(0,u]}`.
    pub fn indicator_down(tree: &FiniteTree, u: NodeId) -> TreeFn {
        let mut f = TreeFn::zero(tree.len());
        for v in tree.down_set(u) {
            f.values[v.index()] = Rational::one();
        }
        f
    }

    /// Indicator of an arbitrary node set.
    pub fn indicator(len: usize, set: &[NodeId]) -> TreeFn {
        let mut f = TreeFn::zero(len);
        for v in set {
            f.values[v.index()] = Rational::one();
        }
        f
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, n: NodeId) -> &Rational {
        &self.values[n.index()]
    }

    pub fn set(&mut self, n: NodeId, v: Rational) {
        self.values[n.index()] = v;
    }

    /// Value at an optional node; `None` stands for an imaginary element.
    pub fn at(&self, n: Option<NodeId>) -> Rational {
        n.map(|n| self.values[n.index()].clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(exact::to_f64).collect()
    }

    pub fn sup_norm(&self) -> Rational {
        exact::max_abs(&self.values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    pub fn support(&self) -> Vec<NodeId> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, _)| NodeId(i as u32))
            .collect()
    }

    pub fn map(&self, op: impl Fn(&Rational) -> Rational) -> TreeFn {
        TreeFn {
            values: self.values.iter().map(op).collect(),
        }
    }

    pub fn zip(&self, other: &TreeFn, op: impl Fn(&Rational, &Rational) -> Rational) -> TreeFn {
        assert_eq!(self.len(), other.len(), "functions on different trees");
        TreeFn {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| op(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &TreeFn) -> TreeFn {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &TreeFn) -> TreeFn {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, c: &Rational) -> TreeFn {
        self.map(|a| a * c)
    }

    pub fn abs(&self) -> TreeFn {
        self.map(|a| a.abs())
    }

    /// `f · 1_S` where `keep` marks S.
    pub fn masked(&self, keep: impl Fn(NodeId) -> bool) -> TreeFn {
        TreeFn {
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    if keep(NodeId(i as u32)) {
                        v.clone()
                    } else {
                        Rational::zero()
                    }
                })
                .collect(),
        }
    }
}

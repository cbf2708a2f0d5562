//! Decomposition trees (d-trees) and their incremental compilation.
//!
//! Inner nodes are ⊙ (conjunction of functions over disjoint variables),
//! ⊗ (disjunction over disjoint variables), and ⊕ (disjunction of mutually
//! exclusive functions over the same variables, produced by Shannon expansion).
//! A tree is complete when no unexpanded function leaf remains; complete trees
//! have only literal and constant leaves.
//!
//! Expansion mutates the tree arena in place: the expanded node keeps its id
//! and becomes an inner node whose children are appended, so node ids stay
//! stable across refinement and caches keyed by id survive untouched parts.

use std::time::Instant;

use thiserror::Error;

use crate::lineage::{DnfFunction, VarId, VarSet, VarTable};

/// Index of a node in the tree arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Inner node combination operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompOp {
    /// ⊙: independent-and, children over pairwise disjoint universes.
    IndepAnd,
    /// ⊗: independent-or, children over pairwise disjoint universes.
    IndepOr,
    /// ⊕: mutually exclusive or, children over identical universes.
    MutexOr,
}

impl DecompOp {
    pub fn symbol(self) -> &'static str {
        match self {
            DecompOp::IndepAnd => "⊙",
            DecompOp::IndepOr => "⊗",
            DecompOp::MutexOr => "⊕",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// A literal leaf; `positive: false` only arises in Shannon ¬y branches.
    Literal { var: VarId, positive: bool },
    /// A constant leaf over an explicit universe (counts scale with 2^|universe|).
    Constant(bool),
    /// An unexpanded positive DNF.
    Function(DnfFunction),
    Inner { op: DecompOp, children: Vec<NodeId> },
}

#[derive(Debug, Clone)]
pub struct Node {
    kind: NodeKind,
    parent: Option<NodeId>,
    universe: VarSet,
}

impl Node {
    pub fn kind(&self) -> &NodeKind {
        &self.kind
    }

    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    pub fn universe(&self) -> &VarSet {
        &self.universe
    }
}

#[derive(Debug, Clone)]
pub struct DTree {
    nodes: Vec<Node>,
    root: NodeId,
    function_leaves: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExpandError {
    #[error("node {0:?} is not an unexpanded function leaf")]
    NotAFunctionLeaf(NodeId),
}

/// Which decomposition rule an expansion step applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpandKind {
    /// Trivial conversion of a constant or literal-shaped function.
    Converted,
    /// Common variable factored out: x ⊙ remainder.
    Factored,
    /// Split into ≥2 independent components under ⊗.
    Partitioned,
    /// Shannon expansion: (y ⊙ f[y:=1]) ⊕ (¬y ⊙ f[y:=0]).
    Shannon,
}

/// Variable occurring in the most clauses, smallest id on ties.
pub fn pick_shannon_var(f: &DnfFunction) -> Option<VarId> {
    if f.is_constant() {
        return None;
    }
    let mut best: Option<(VarId, usize)> = None;
    for v in f.clause_vars().iter() {
        let count = f.clauses().iter().filter(|c| c.contains(v)).count();
        match best {
            Some((_, best_count)) if count <= best_count => {}
            _ => best = Some((v, count)),
        }
    }
    best.map(|(v, _)| v)
}

impl DTree {
    /// A tree consisting of one unexpanded leaf for `f`.
    pub fn from_function(f: DnfFunction) -> DTree {
        let universe = f.universe().clone();
        let (kind, function_leaves) = match leafify(f) {
            k @ NodeKind::Function(_) => (k, 1),
            k => (k, 0),
        };
        DTree {
            nodes: vec![Node {
                kind,
                parent: None,
                universe,
            }],
            root: NodeId(0),
            function_leaves,
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    /// Complete iff no unexpanded function leaf remains.
    pub fn is_complete(&self) -> bool {
        self.function_leaves == 0
    }

    /// Ids from `id` up to the root, inclusive on both ends.
    pub fn path_to_root(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur.index()].parent {
            path.push(p);
            cur = p;
        }
        path
    }

    /// All node ids in depth-first order (parents before children, children
    /// left to right). Deterministic tree-position order.
    pub fn dfs_order(&self) -> Vec<NodeId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            order.push(id);
            if let NodeKind::Inner { children, .. } = &self.nodes[id.index()].kind {
                stack.extend(children.iter().rev().copied());
            }
        }
        order
    }

    /// Node ids with children before parents, for bottom-up passes without
    /// recursion (Shannon chains can be as deep as the variable count).
    pub fn post_order(&self) -> Vec<NodeId> {
        let mut order = self.dfs_order();
        order.reverse();
        order
    }

    /// Unexpanded function leaves in depth-first order.
    pub fn function_leaf_ids(&self) -> Vec<NodeId> {
        self.dfs_order()
            .into_iter()
            .filter(|id| matches!(self.nodes[id.index()].kind, NodeKind::Function(_)))
            .collect()
    }

    fn push_child(&mut self, parent: NodeId, kind: NodeKind, universe: VarSet) -> NodeId {
        if matches!(kind, NodeKind::Function(_)) {
            self.function_leaves += 1;
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            kind,
            parent: Some(parent),
            universe,
        });
        id
    }

    /// Applies one decomposition step to a function leaf, in priority order:
    /// trivial conversion, common-variable factoring, independence
    /// partitioning, Shannon expansion on the most frequent variable.
    pub fn expand_leaf(&mut self, id: NodeId) -> Result<ExpandKind, ExpandError> {
        let f = match &self.nodes[id.index()].kind {
            NodeKind::Function(f) => f.clone(),
            _ => return Err(ExpandError::NotAFunctionLeaf(id)),
        };
        self.function_leaves -= 1;

        let converted = leafify(f);
        let f = match converted {
            NodeKind::Function(f) => f,
            leaf => {
                self.nodes[id.index()].kind = leaf;
                return Ok(ExpandKind::Converted);
            }
        };

        if let Some((x, rest)) = f.factor_common() {
            let lit = self.push_child(
                id,
                NodeKind::Literal {
                    var: x,
                    positive: true,
                },
                VarSet::singleton(x),
            );
            let rest_universe = rest.universe().clone();
            let rest_kind = leafify(rest);
            let rest_id = self.push_child(id, rest_kind, rest_universe);
            self.nodes[id.index()].kind = NodeKind::Inner {
                op: DecompOp::IndepAnd,
                children: vec![lit, rest_id],
            };
            return Ok(ExpandKind::Factored);
        }

        let components = f.components();
        if components.len() >= 2 {
            let children = components
                .into_iter()
                .map(|c| {
                    let universe = c.universe().clone();
                    let kind = leafify(c);
                    self.push_child(id, kind, universe)
                })
                .collect();
            self.nodes[id.index()].kind = NodeKind::Inner {
                op: DecompOp::IndepOr,
                children,
            };
            return Ok(ExpandKind::Partitioned);
        }

        let y = pick_shannon_var(&f).expect("non-constant function has clauses");
        let full_universe = self.nodes[id.index()].universe.clone();
        let branch = |tree: &mut DTree, positive: bool| -> NodeId {
            let cofactor = f
                .restrict(y, positive)
                .expect("Shannon variable is in the universe");
            // A constant-0 cofactor collapses the whole branch to a 0 leaf; the
            // ¬y (or y) factor cannot un-zero it.
            if cofactor.as_constant() == Some(false) {
                return tree.push_child(id, NodeKind::Constant(false), full_universe.clone());
            }
            let lit = tree.push_child(
                id,
                NodeKind::Literal { var: y, positive },
                VarSet::singleton(y),
            );
            let universe = cofactor.universe().clone();
            let kind = leafify(cofactor);
            let leaf = tree.push_child(id, kind, universe);
            let and = NodeId(tree.nodes.len() as u32);
            tree.nodes.push(Node {
                kind: NodeKind::Inner {
                    op: DecompOp::IndepAnd,
                    children: vec![lit, leaf],
                },
                parent: Some(id),
                universe: full_universe.clone(),
            });
            tree.nodes[lit.index()].parent = Some(and);
            tree.nodes[leaf.index()].parent = Some(and);
            and
        };
        let then_branch = branch(self, true);
        let else_branch = branch(self, false);
        self.nodes[id.index()].kind = NodeKind::Inner {
            op: DecompOp::MutexOr,
            children: vec![then_branch, else_branch],
        };
        Ok(ExpandKind::Shannon)
    }

    /// Evaluates the represented function under a truth assignment.
    pub fn eval<F: Fn(VarId) -> bool>(&self, truth: &F) -> bool {
        let order = self.post_order();
        let mut values = vec![false; self.nodes.len()];
        for id in order {
            let node = &self.nodes[id.index()];
            values[id.index()] = match &node.kind {
                NodeKind::Literal { var, positive } => truth(*var) == *positive,
                NodeKind::Constant(b) => *b,
                NodeKind::Function(f) => f.eval(truth),
                NodeKind::Inner { op, children } => {
                    let mut vals = children.iter().map(|c| values[c.index()]);
                    match op {
                        DecompOp::IndepAnd => vals.all(|v| v),
                        DecompOp::IndepOr | DecompOp::MutexOr => vals.any(|v| v),
                    }
                }
            };
        }
        values[self.root.index()]
    }

    /// Indented text rendering; `annotate` supplies an optional per-node suffix
    /// such as `(banzhaf, count)` or a bounds quad.
    pub fn render<A: Fn(NodeId) -> Option<String>>(&self, vars: &VarTable, annotate: A) -> String {
        let mut out = String::new();
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            let node = &self.nodes[id.index()];
            for _ in 0..depth {
                out.push_str("  ");
            }
            match &node.kind {
                NodeKind::Literal { var, positive } => {
                    if !positive {
                        out.push('¬');
                    }
                    out.push_str(vars.name(*var));
                }
                NodeKind::Constant(b) => out.push(if *b { '1' } else { '0' }),
                NodeKind::Function(f) => {
                    out.push_str("leaf ");
                    out.push_str(&f.render(vars));
                }
                NodeKind::Inner { op, children } => {
                    out.push_str(op.symbol());
                    stack.extend(
                        children
                            .iter()
                            .rev()
                            .map(|&c| (c, depth + 1)),
                    );
                }
            }
            if let Some(note) = annotate(id) {
                out.push(' ');
                out.push_str(&note);
            }
            out.push('\n');
        }
        out
    }
}

/// Converts trivial functions (constants, single-literal functions over their
/// own singleton universe) to their leaf kinds.
fn leafify(f: DnfFunction) -> NodeKind {
    if let Some(value) = f.as_constant() {
        return NodeKind::Constant(value);
    }
    if let Some(var) = f.as_literal() {
        return NodeKind::Literal {
            var,
            positive: true,
        };
    }
    NodeKind::Function(f)
}

/// Counters for a full compilation run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CompileStats {
    /// Total expansion steps of any kind.
    pub steps: u64,
    /// Shannon expansions only; the growth-driving subset.
    pub shannon_steps: u64,
}

/// Limits for [`compile_full_with_limits`].
#[derive(Debug, Clone, Copy, Default)]
pub struct CompileLimits {
    pub deadline: Option<Instant>,
    pub max_steps: Option<u64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("compilation interrupted after {steps} steps ({shannon_steps} Shannon)")]
pub struct CompileInterrupted {
    pub steps: u64,
    pub shannon_steps: u64,
}

/// Expands every function leaf until the tree is complete.
pub fn compile_full(f: DnfFunction) -> DTree {
    compile_full_with_stats(f).0
}

/// As [`compile_full`], returning the step counters.
pub fn compile_full_with_stats(f: DnfFunction) -> (DTree, CompileStats) {
    compile_full_with_limits(f, CompileLimits::default())
        .expect("unlimited compilation cannot be interrupted")
}

/// Full compilation with optional wall-clock and step caps; the deadline is
/// checked between steps, so an interrupted run wastes at most one step.
pub fn compile_full_with_limits(
    f: DnfFunction,
    limits: CompileLimits,
) -> Result<(DTree, CompileStats), CompileInterrupted> {
    let mut tree = DTree::from_function(f);
    let mut stats = CompileStats::default();
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        match tree.node(id).kind() {
            NodeKind::Inner { children, .. } => stack.extend(children.iter().copied()),
            NodeKind::Function(_) => {
                let over_budget = limits.max_steps.is_some_and(|m| stats.steps >= m)
                    || limits.deadline.is_some_and(|d| Instant::now() >= d);
                if over_budget {
                    return Err(CompileInterrupted {
                        steps: stats.steps,
                        shannon_steps: stats.shannon_steps,
                    });
                }
                let kind = tree.expand_leaf(id).expect("matched a function leaf");
                stats.steps += 1;
                if kind == ExpandKind::Shannon {
                    stats.shannon_steps += 1;
                }
                stack.push(id);
            }
            _ => {}
        }
    }
    Ok((tree, stats))
}

/// Manual tree construction, for tests and golden figures.
#[derive(Debug, Default)]
pub struct DTreeBuilder {
    nodes: Vec<Node>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("⊙/⊗ children must have pairwise disjoint universes")]
    OverlappingUniverses,
    #[error("⊕ children must have identical universes")]
    MismatchedUniverses,
    #[error("inner nodes need at least one child")]
    NoChildren,
}

impl DTreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, kind: NodeKind, universe: VarSet) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            kind,
            parent: None,
            universe,
        });
        id
    }

    pub fn literal(&mut self, var: VarId, positive: bool) -> NodeId {
        self.push(
            NodeKind::Literal { var, positive },
            VarSet::singleton(var),
        )
    }

    pub fn constant(&mut self, value: bool, universe: VarSet) -> NodeId {
        self.push(NodeKind::Constant(value), universe)
    }

    pub fn function(&mut self, f: DnfFunction) -> NodeId {
        let universe = f.universe().clone();
        self.push(NodeKind::Function(f), universe)
    }

    pub fn inner(&mut self, op: DecompOp, children: Vec<NodeId>) -> Result<NodeId, BuildError> {
        if children.is_empty() {
            return Err(BuildError::NoChildren);
        }
        let universe = match op {
            DecompOp::IndepAnd | DecompOp::IndepOr => {
                let mut acc = VarSet::new();
                for &c in &children {
                    let u = &self.nodes[c.index()].universe;
                    if !acc.is_disjoint_from(u) {
                        return Err(BuildError::OverlappingUniverses);
                    }
                    acc = acc.union(u);
                }
                acc
            }
            DecompOp::MutexOr => {
                let first = self.nodes[children[0].index()].universe.clone();
                for &c in &children[1..] {
                    if self.nodes[c.index()].universe != first {
                        return Err(BuildError::MismatchedUniverses);
                    }
                }
                first
            }
        };
        let id = self.push(NodeKind::Inner { op, children: children.clone() }, universe);
        for c in children {
            self.nodes[c.index()].parent = Some(id);
        }
        Ok(id)
    }

    pub fn finish(self, root: NodeId) -> DTree {
        let function_leaves = self
            .nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Function(_)))
            .count();
        DTree {
            nodes: self.nodes,
            root,
            function_leaves,
        }
    }
}

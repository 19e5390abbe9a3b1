//! Expression DAG and its JSON tree form.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::smooth::{SmoothFn, SmoothMultiFn};
use crate::error::{Error, Result};

/// Index of a node inside an [`Expression`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Variable(usize),
    Constant(f64),
    /// `c + <g, x>`
    Affine { c: f64, g: Vec<f64> },
    SmoothScalar { f: SmoothFn, child: NodeId },
    SmoothMulti { g: SmoothMultiFn, children: Vec<NodeId> },
    /// `sum_i weights[i] * child_i`
    Sum { weights: Vec<f64>, children: Vec<NodeId> },
    Max(Vec<NodeId>),
    Min(Vec<NodeId>),
    Product(NodeId, NodeId),
    Reciprocal(NodeId),
    /// `||A x + b||`, `A` given row-major with `b.len()` rows.
    AffineNorm { a: Vec<Vec<f64>>, b: Vec<f64> },
}

impl Node {
    pub fn children(&self) -> Vec<NodeId> {
        match self {
            Node::Variable(_) | Node::Constant(_) | Node::Affine { .. } | Node::AffineNorm { .. } => {
                Vec::new()
            }
            Node::SmoothScalar { child, .. } | Node::Reciprocal(child) => vec![*child],
            Node::SmoothMulti { children, .. } | Node::Sum { children, .. } => children.clone(),
            Node::Max(c) | Node::Min(c) => c.clone(),
            Node::Product(l, r) => vec![*l, *r],
        }
    }

    fn validate(&self, dim: usize, id: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidExpression(format!("node {id}: {msg}")));
        for c in self.children() {
            if c.0 >= id {
                return bad(format!("child {} does not precede its parent", c.0));
            }
        }
        match self {
            Node::Variable(i) if *i >= dim => bad(format!("variable index {i} >= dimension {dim}")),
            Node::Constant(c) if !c.is_finite() => bad("non-finite constant".into()),
            Node::Affine { c, g } => {
                if g.len() != dim {
                    bad(format!("affine gradient has length {}, expected {dim}", g.len()))
                } else if !c.is_finite() || g.iter().any(|t| !t.is_finite()) {
                    bad("non-finite affine coefficients".into())
                } else {
                    Ok(())
                }
            }
            Node::SmoothMulti { g, children } => g.check_arity(children.len()),
            Node::Sum { weights, children } => {
                if children.is_empty() || weights.len() != children.len() {
                    bad("sum needs one weight per child and at least one child".into())
                } else if weights.iter().any(|w| !w.is_finite()) {
                    bad("non-finite sum weight".into())
                } else {
                    Ok(())
                }
            }
            Node::Max(c) | Node::Min(c) if c.is_empty() => bad("max/min needs at least one child".into()),
            Node::AffineNorm { a, b } => {
                if b.is_empty() || a.len() != b.len() || a.iter().any(|row| row.len() != dim) {
                    bad(format!("affine norm needs a {}x{dim} matrix", b.len()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// A function `R^d -> R` as a DAG of nodes in topological order.
#[derive(Clone, Debug)]
pub struct Expression {
    dim: usize,
    nodes: Vec<Node>,
    root: NodeId,
    reachable: Vec<bool>,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.nodes == other.nodes && self.root == other.root
    }
}

impl Expression {
    /// Validates that children precede parents, variable indices are in
    /// range, and node parameters are well formed.
    pub fn new(dim: usize, nodes: Vec<Node>, root: NodeId) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidExpression("dimension must be positive".into()));
        }
        if root.0 >= nodes.len() {
            return Err(Error::InvalidExpression("root out of range".into()));
        }
        for (i, n) in nodes.iter().enumerate() {
            n.validate(dim, i)?;
        }
        let mut reachable = vec![false; nodes.len()];
        reachable[root.0] = true;
        for i in (0..nodes.len()).rev() {
            if reachable[i] {
                for c in nodes[i].children() {
                    reachable[c.0] = true;
                }
            }
        }
        Ok(Expression {
            dim,
            nodes,
            root,
            reachable,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub(crate) fn is_reachable(&self, i: usize) -> bool {
        self.reachable[i]
    }

    /// Tree form; shared subexpressions are expanded.
    pub fn to_tree(&self) -> ExprTree {
        self.subtree(self.root)
    }

    fn subtree(&self, id: NodeId) -> ExprTree {
        let many = |ids: &[NodeId]| ids.iter().map(|c| self.subtree(*c)).collect::<Vec<_>>();
        match &self.nodes[id.0] {
            Node::Variable(i) => ExprTree::Variable { index: *i },
            Node::Constant(c) => ExprTree::Constant { value: *c },
            Node::Affine { c, g } => ExprTree::Affine { c: *c, g: g.clone() },
            Node::SmoothScalar { f, child } => ExprTree::SmoothScalar {
                f: *f,
                child: Box::new(self.subtree(*child)),
            },
            Node::SmoothMulti { g, children } => ExprTree::SmoothMulti {
                g: g.clone(),
                children: many(children),
            },
            Node::Sum { weights, children } => ExprTree::Sum {
                weights: weights.clone(),
                children: many(children),
            },
            Node::Max(c) => ExprTree::Max { children: many(c) },
            Node::Min(c) => ExprTree::Min { children: many(c) },
            Node::Product(l, r) => ExprTree::Product {
                left: Box::new(self.subtree(*l)),
                right: Box::new(self.subtree(*r)),
            },
            Node::Reciprocal(c) => ExprTree::Reciprocal {
                child: Box::new(self.subtree(*c)),
            },
            Node::AffineNorm { a, b } => ExprTree::AffineNorm { a: a.clone(), b: b.clone() },
        }
    }

    /// Compiles a tree; structurally identical subtrees become one node.
    pub fn from_tree(dim: usize, tree: &ExprTree) -> Result<Self> {
        let mut b = ExprBuilder::new(dim);
        let root = b.push_tree(tree)?;
        b.build(root)
    }
}

#[derive(Serialize, Deserialize)]
struct ExpressionDoc {
    dim: usize,
    expr: ExprTree,
}

impl Serialize for Expression {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ExpressionDoc {
            dim: self.dim,
            expr: self.to_tree(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Expression {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = ExpressionDoc::deserialize(d)?;
        Expression::from_tree(doc.dim, &doc.expr).map_err(serde::de::Error::custom)
    }
}

/// JSON tree form of an expression, tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ExprTree {
    Variable { index: usize },
    Constant { value: f64 },
    Affine { c: f64, g: Vec<f64> },
    SmoothScalar { f: SmoothFn, child: Box<ExprTree> },
    SmoothMulti { g: SmoothMultiFn, children: Vec<ExprTree> },
    Sum { weights: Vec<f64>, children: Vec<ExprTree> },
    Max { children: Vec<ExprTree> },
    Min { children: Vec<ExprTree> },
    Product { left: Box<ExprTree>, right: Box<ExprTree> },
    Reciprocal { child: Box<ExprTree> },
    AffineNorm { a: Vec<Vec<f64>>, b: Vec<f64> },
}

impl ExprTree {
    /// Whether the tree only uses affine leaves under Max/Min/Sum.
    pub fn is_piecewise_affine(&self) -> bool {
        match self {
            ExprTree::Variable { .. } | ExprTree::Constant { .. } | ExprTree::Affine { .. } => true,
            ExprTree::Sum { children, .. } | ExprTree::Max { children } | ExprTree::Min { children } => {
                children.iter().all(ExprTree::is_piecewise_affine)
            }
            _ => false,
        }
    }

    pub fn depth(&self) -> usize {
        let sub = |c: &[ExprTree]| c.iter().map(ExprTree::depth).max().unwrap_or(0);
        match self {
            ExprTree::Variable { .. }
            | ExprTree::Constant { .. }
            | ExprTree::Affine { .. }
            | ExprTree::AffineNorm { .. } => 0,
            ExprTree::SmoothScalar { child, .. } | ExprTree::Reciprocal { child } => 1 + child.depth(),
            ExprTree::SmoothMulti { children, .. }
            | ExprTree::Sum { children, .. }
            | ExprTree::Max { children }
            | ExprTree::Min { children } => 1 + sub(children),
            ExprTree::Product { left, right } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// Incremental construction of an [`Expression`]. Identical nodes are
/// shared automatically.
#[derive(Debug)]
pub struct ExprBuilder {
    dim: usize,
    nodes: Vec<Node>,
    index: HashMap<String, NodeId>,
}

impl ExprBuilder {
    pub fn new(dim: usize) -> Self {
        ExprBuilder {
            dim,
            nodes: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Appends a node, reusing an existing identical one. Structural checks
    /// run in [`ExprBuilder::build`].
    pub fn push(&mut self, node: Node) -> NodeId {
        let key = format!("{node:?}");
        if let Some(id) = self.index.get(&key) {
            return *id;
        }
        let id = NodeId(self.nodes.len());
        self.nodes.push(node);
        self.index.insert(key, id);
        id
    }

    pub fn var(&mut self, i: usize) -> NodeId {
        self.push(Node::Variable(i))
    }

    pub fn constant(&mut self, c: f64) -> NodeId {
        self.push(Node::Constant(c))
    }

    pub fn affine(&mut self, c: f64, g: Vec<f64>) -> NodeId {
        self.push(Node::Affine { c, g })
    }

    pub fn smooth(&mut self, f: SmoothFn, child: NodeId) -> NodeId {
        self.push(Node::SmoothScalar { f, child })
    }

    pub fn smooth_multi(&mut self, g: SmoothMultiFn, children: Vec<NodeId>) -> NodeId {
        self.push(Node::SmoothMulti { g, children })
    }

    pub fn sum(&mut self, weights: Vec<f64>, children: Vec<NodeId>) -> NodeId {
        self.push(Node::Sum { weights, children })
    }

    /// Unit-weight sum.
    pub fn add(&mut self, children: Vec<NodeId>) -> NodeId {
        let w = vec![1.0; children.len()];
        self.sum(w, children)
    }

    pub fn neg(&mut self, child: NodeId) -> NodeId {
        self.sum(vec![-1.0], vec![child])
    }

    pub fn max(&mut self, children: Vec<NodeId>) -> NodeId {
        self.push(Node::Max(children))
    }

    pub fn min(&mut self, children: Vec<NodeId>) -> NodeId {
        self.push(Node::Min(children))
    }

    pub fn product(&mut self, l: NodeId, r: NodeId) -> NodeId {
        self.push(Node::Product(l, r))
    }

    pub fn reciprocal(&mut self, child: NodeId) -> NodeId {
        self.push(Node::Reciprocal(child))
    }

    pub fn affine_norm(&mut self, a: Vec<Vec<f64>>, b: Vec<f64>) -> NodeId {
        self.push(Node::AffineNorm { a, b })
    }

    /// `k + <c, x> + 0.5 x^T Q x` over all variables.
    pub fn quadratic(&mut self, q: Vec<Vec<f64>>, c: Vec<f64>, k: f64) -> NodeId {
        let vars = (0..self.dim).map(|i| self.var(i)).collect();
        self.smooth_multi(SmoothMultiFn::Quadratic { q, c, k }, vars)
    }

    pub fn push_tree(&mut self, t: &ExprTree) -> Result<NodeId> {
        let node = match t {
            ExprTree::Variable { index } => Node::Variable(*index),
            ExprTree::Constant { value } => Node::Constant(*value),
            ExprTree::Affine { c, g } => Node::Affine { c: *c, g: g.clone() },
            ExprTree::SmoothScalar { f, child } => Node::SmoothScalar {
                f: *f,
                child: self.push_tree(child)?,
            },
            ExprTree::SmoothMulti { g, children } => Node::SmoothMulti {
                g: g.clone(),
                children: self.push_trees(children)?,
            },
            ExprTree::Sum { weights, children } => Node::Sum {
                weights: weights.clone(),
                children: self.push_trees(children)?,
            },
            ExprTree::Max { children } => Node::Max(self.push_trees(children)?),
            ExprTree::Min { children } => Node::Min(self.push_trees(children)?),
            ExprTree::Product { left, right } => {
                let l = self.push_tree(left)?;
                let r = self.push_tree(right)?;
                Node::Product(l, r)
            }
            ExprTree::Reciprocal { child } => Node::Reciprocal(self.push_tree(child)?),
            ExprTree::AffineNorm { a, b } => Node::AffineNorm { a: a.clone(), b: b.clone() },
        };
        Ok(self.push(node))
    }

    fn push_trees(&mut self, ts: &[ExprTree]) -> Result<Vec<NodeId>> {
        ts.iter().map(|t| self.push_tree(t)).collect()
    }

    pub fn build(self, root: NodeId) -> Result<Expression> {
        Expression::new(self.dim, self.nodes, root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_shares_identical_nodes() {
        let mut b = ExprBuilder::new(2);
        let x0 = b.var(0);
        let x0_again = b.var(0);
        assert_eq!(x0, x0_again);
        let s1 = b.smooth(SmoothFn::Sin, x0);
        let s2 = b.smooth(SmoothFn::Sin, x0);
        assert_eq!(s1, s2);
        let p = b.product(s1, s2);
        let e = b.build(p).unwrap();
        assert_eq!(e.nodes().len(), 3);
    }

    #[test]
    fn rejects_bad_variable_index() {
        let mut b = ExprBuilder::new(2);
        let x = b.var(2);
        assert!(matches!(b.build(x), Err(Error::InvalidExpression(_))));
    }

    #[test]
    fn rejects_forward_references() {
        let nodes = vec![Node::Max(vec![NodeId(1)]), Node::Variable(0)];
        assert!(Expression::new(1, nodes, NodeId(0)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut b = ExprBuilder::new(2);
        let x0 = b.var(0);
        let x1 = b.var(1);
        let lin = b.affine(1.0, vec![-2.0, -1.0]);
        let sq = b.smooth_multi(SmoothMultiFn::SumSquares, vec![x0, x1]);
        let m = b.max(vec![lin, sq]);
        let c = b.smooth(SmoothFn::Cube, x0);
        let mn = b.min(vec![c, x1]);
        let nrm = b.affine_norm(vec![vec![1.0, 0.5]], vec![0.2]);
        let r = b.sum(vec![1.0, 2.0, -0.5], vec![m, mn, nrm]);
        let e = b.build(r).unwrap();

        let s = serde_json::to_string(&e).unwrap();
        assert!(s.contains(r#""kind":"Max""#));
        let back: Expression = serde_json::from_str(&s).unwrap();
        assert_eq!(back.to_tree(), e.to_tree());
        let again = Expression::from_tree(2, &back.to_tree()).unwrap();
        assert_eq!(again, back);
    }

    #[test]
    fn tree_classification() {
        let t = ExprTree::Max {
            children: vec![
                ExprTree::Affine { c: 0.0, g: vec![1.0] },
                ExprTree::Sum {
                    weights: vec![1.0],
                    children: vec![ExprTree::Variable { index: 0 }],
                },
            ],
        };
        assert!(t.is_piecewise_affine());
        assert_eq!(t.depth(), 2);
        let s = ExprTree::SmoothScalar {
            f: SmoothFn::Exp,
            child: Box::new(t),
        };
        assert!(!s.is_piecewise_affine());
    }
}

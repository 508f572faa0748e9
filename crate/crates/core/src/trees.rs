//! Ordered ternary-quinary trees.
//!
//! A tree indexes one multilinear term of the Picard expansion: every
//! internal node with three children stands for the cubic derivative
//! Duhamel operator, every internal node with five children for the quintic
//! one, and every leaf for the free evolution of the data. Children are
//! ordered because each operator slot has its own conjugation and derivative
//! role.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on `k + p` for explicit enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 4;

/// Node kind. The declaration order is the enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Leaf,
    Node3,
    Node5,
}

impl NodeKind {
    pub fn arity(self) -> usize {
        match self {
            NodeKind::Leaf => 0,
            NodeKind::Node3 => 3,
            NodeKind::Node5 => 5,
        }
    }
}

/// Ordered rooted tree whose internal nodes have exactly 3 or 5 children.
///
/// The derived ordering compares the kind first (leaf < node3 < node5) and
/// then the children lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawTree")]
pub struct Tree {
    kind: NodeKind,
    children: Vec<Tree>,
}

#[derive(Deserialize)]
struct RawTree {
    kind: NodeKind,
    #[serde(default)]
    children: Vec<Tree>,
}

impl TryFrom<RawTree> for Tree {
    type Error = Error;

    fn try_from(raw: RawTree) -> Result<Self> {
        Tree::new(raw.kind, raw.children)
    }
}

impl Tree {
    pub fn new(kind: NodeKind, children: Vec<Tree>) -> Result<Self> {
        if children.len() != kind.arity() {
            return Err(Error::config(format!(
                "{kind:?} node needs {} children, got {}",
                kind.arity(),
                children.len()
            )));
        }
        Ok(Tree { kind, children })
    }

    pub fn leaf() -> Self {
        Tree { kind: NodeKind::Leaf, children: Vec::new() }
    }

    pub fn node3(children: [Tree; 3]) -> Self {
        Tree { kind: NodeKind::Node3, children: children.into() }
    }

    pub fn node5(children: [Tree; 5]) -> Self {
        Tree { kind: NodeKind::Node5, children: children.into() }
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn children(&self) -> &[Tree] {
        &self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.kind == NodeKind::Leaf
    }

    pub fn stats(&self) -> TreeStats {
        tree_stats(self)
    }

    /// Generation `(n3, n5)` of the tree.
    pub fn generation(&self) -> (usize, usize) {
        let s = self.stats();
        (s.n3, s.n5)
    }

    pub fn terminal_count(&self) -> usize {
        match self.kind {
            NodeKind::Leaf => 1,
            _ => self.children.iter().map(Tree::terminal_count).sum(),
        }
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NodeKind::Leaf => write!(f, "o"),
            kind => {
                write!(f, "{}(", if kind == NodeKind::Node3 { "J" } else { "K" })?;
                for (i, c) in self.children.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub n3: usize,
    pub n5: usize,
    pub total: usize,
    pub internal: usize,
    pub terminal: usize,
}

pub fn tree_stats(t: &Tree) -> TreeStats {
    let mut stats = TreeStats { n3: 0, n5: 0, total: 0, internal: 0, terminal: 0 };
    let mut stack = vec![t];
    while let Some(node) = stack.pop() {
        stats.total += 1;
        match node.kind {
            NodeKind::Leaf => stats.terminal += 1,
            NodeKind::Node3 => stats.n3 += 1,
            NodeKind::Node5 => stats.n5 += 1,
        }
        stack.extend(node.children.iter());
    }
    stats.internal = stats.n3 + stats.n5;
    stats
}

/// Role of one leaf inside the multilinear term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafRole {
    /// The leaf's argument enters complex-conjugated.
    pub conjugated: bool,
    /// The leaf sits directly in the differentiated slot of a cubic node.
    pub differentiated: bool,
}

/// Per-leaf roles in left-to-right order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafSignature {
    pub leaves: Vec<LeafRole>,
}

/// Slot conjugation pattern: the cubic operator conjugates its third slot,
/// the quintic operator its second and fourth.
pub(crate) fn slot_conjugated(kind: NodeKind, slot: usize) -> bool {
    match kind {
        NodeKind::Leaf => false,
        NodeKind::Node3 => slot == 2,
        NodeKind::Node5 => slot == 1 || slot == 3,
    }
}

pub fn leaf_signature(t: &Tree) -> LeafSignature {
    fn walk(t: &Tree, conj: bool, deriv: bool, out: &mut Vec<LeafRole>) {
        if t.is_leaf() {
            out.push(LeafRole { conjugated: conj, differentiated: deriv });
            return;
        }
        for (slot, child) in t.children.iter().enumerate() {
            let c = conj ^ slot_conjugated(t.kind, slot);
            let d = t.kind == NodeKind::Node3 && slot == 2;
            walk(child, c, d, out);
        }
    }
    let mut leaves = Vec::new();
    walk(t, false, false, &mut leaves);
    LeafSignature { leaves }
}

/// All ordered trees with `k` cubic and `p` quintic internal nodes, each
/// exactly once, sorted in the canonical order.
pub fn enumerate_trees(k: usize, p: usize) -> Result<Vec<Tree>> {
    enumerate_trees_capped(k, p, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_trees_capped(k: usize, p: usize, cap: usize) -> Result<Vec<Tree>> {
    if k + p > cap {
        return Err(Error::Resource { what: format!("tree generation k+p = {}", k + p), cap });
    }
    let mut memo = HashMap::new();
    let mut trees = enumerate_memo(k, p, &mut memo);
    trees.sort();
    Ok(trees)
}

fn enumerate_memo(
    k: usize,
    p: usize,
    memo: &mut HashMap<(usize, usize), Vec<Tree>>,
) -> Vec<Tree> {
    if let Some(v) = memo.get(&(k, p)) {
        return v.clone();
    }
    let mut out = Vec::new();
    if k == 0 && p == 0 {
        out.push(Tree::leaf());
    }
    if k >= 1 {
        for split in splits(k - 1, p, 3) {
            for children in product(&split, memo) {
                out.push(Tree { kind: NodeKind::Node3, children });
            }
        }
    }
    if p >= 1 {
        for split in splits(k, p - 1, 5) {
            for children in product(&split, memo) {
                out.push(Tree { kind: NodeKind::Node5, children });
            }
        }
    }
    memo.insert((k, p), out.clone());
    out
}

/// Every way of writing `(k, p)` as an ordered sum of `parts` generations.
fn splits(k: usize, p: usize, parts: usize) -> Vec<Vec<(usize, usize)>> {
    if parts == 1 {
        return vec![vec![(k, p)]];
    }
    let mut out = Vec::new();
    for k1 in 0..=k {
        for p1 in 0..=p {
            for mut rest in splits(k - k1, p - p1, parts - 1) {
                rest.insert(0, (k1, p1));
                out.push(rest);
            }
        }
    }
    out
}

fn product(
    split: &[(usize, usize)],
    memo: &mut HashMap<(usize, usize), Vec<Tree>>,
) -> Vec<Vec<Tree>> {
    let mut acc: Vec<Vec<Tree>> = vec![Vec::new()];
    for &(k, p) in split {
        let options = enumerate_memo(k, p, memo);
        let mut next = Vec::with_capacity(acc.len() * options.len());
        for prefix in &acc {
            for t in &options {
                let mut v = prefix.clone();
                v.push(t.clone());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

/// Exact table of tree counts for every generation with `k + p <= max_total`.
///
/// `table[k][p]` is the number of ordered trees in generation `(k, p)`.
/// Computed from the root-split recursion with checked `u128` arithmetic.
#[derive(Debug, Clone)]
pub struct CountTable {
    max_total: usize,
    counts: Vec<Vec<u128>>,
}

impl CountTable {
    pub fn build(max_total: usize) -> Result<Self> {
        let n = max_total + 1;
        // powers[m][k][p]: coefficient of x^k y^p in c(x, y)^m, m = 1..=5
        let mut powers = vec![vec![vec![0u128; n]; n]; 6];
        let overflow = || Error::Overflow(format!("counting trees up to k+p = {max_total}"));
        for level in 0..=max_total {
            for k in 0..=level {
                let p = level - k;
                let mut c: u128 = if level == 0 { 1 } else { 0 };
                if k >= 1 {
                    c = c.checked_add(powers[3][k - 1][p]).ok_or_else(overflow)?;
                }
                if p >= 1 {
                    c = c.checked_add(powers[5][k][p - 1]).ok_or_else(overflow)?;
                }
                powers[1][k][p] = c;
            }
            for m in 2..=5 {
                for k in 0..=level {
                    let p = level - k;
                    let mut sum: u128 = 0;
                    for k1 in 0..=k {
                        for p1 in 0..=p {
                            let a = powers[1][k1][p1];
                            let b = powers[m - 1][k - k1][p - p1];
                            if a == 0 || b == 0 {
                                continue;
                            }
                            let term = a.checked_mul(b).ok_or_else(overflow)?;
                            sum = sum.checked_add(term).ok_or_else(overflow)?;
                        }
                    }
                    powers[m][k][p] = sum;
                }
            }
        }
        Ok(CountTable { max_total, counts: powers.swap_remove(1) })
    }

    pub fn get(&self, k: usize, p: usize) -> Option<u128> {
        if k + p > self.max_total {
            return None;
        }
        Some(self.counts[k][p])
    }

    pub fn max_total(&self) -> usize {
        self.max_total
    }

    /// Smallest `C` with `count(k, p) <= C^(k+p)` for all `1 <= k+p <= max_total`.
    pub fn fitted_growth_constant(&self) -> f64 {
        let mut c: f64 = 1.0;
        for level in 1..=self.max_total {
            for k in 0..=level {
                let count = self.counts[k][level - k] as f64;
                c = c.max(count.powf(1.0 / level as f64));
            }
        }
        c
    }
}

/// Number of ordered trees in generation `(k, p)`.
pub fn count_trees(k: usize, p: usize) -> Result<u128> {
    let table = CountTable::build(k + p)?;
    Ok(table.counts[k][p])
}

/// Fitted growth constant over all generations with `1 <= k+p <= cap`.
pub fn fit_growth_constant(cap: usize) -> Result<f64> {
    Ok(CountTable::build(cap)?.fitted_growth_constant())
}

//! Rooted trees: validation, subtree counting and prefix-closed vertex sets.

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rooted tree over vertices `0..n`, stored as a parent array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootedTree {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
}

impl RootedTree {
    /// Build from a parent array where the root has parent `None`.
    pub fn from_parents(parents: &[Option<usize>]) -> Result<Self> {
        let n = parents.len();
        if n == 0 {
            return Err(Error::Validation(
                "tree must have at least one vertex".into(),
            ));
        }
        let mut root = None;
        for (v, p) in parents.iter().enumerate() {
            match p {
                None => {
                    if root.replace(v).is_some() {
                        return Err(Error::Validation("tree has more than one root".into()));
                    }
                }
                Some(p) if *p >= n => {
                    return Err(Error::Validation(format!(
                        "vertex {v} has out-of-range parent {p}"
                    )));
                }
                _ => {}
            }
        }
        let root = root.ok_or_else(|| Error::Validation("tree has no root".into()))?;
        // Walk each vertex to the root; revisiting a vertex on the same walk is a cycle.
        for start in 0..n {
            let mut seen = vec![false; n];
            let mut v = start;
            while let Some(p) = parents[v] {
                if seen[p] {
                    return Err(Error::Validation(format!(
                        "cycle detected in parent array at vertex {p}"
                    )));
                }
                seen[p] = true;
                v = p;
            }
            if v != root {
                return Err(Error::Validation(format!(
                    "vertex {start} is not connected to the root"
                )));
            }
        }
        let mut children = vec![Vec::new(); n];
        for (v, p) in parents.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(v);
            }
        }
        Ok(RootedTree {
            parent: parents.to_vec(),
            children,
            root,
        })
    }

    /// Parse the on-disk format: one line per vertex, `vertex_id parent_id`, root parent = -1.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let v: usize = it
                .next()
                .ok_or_else(|| Error::Parse(format!("bad tree line: {line}")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad vertex id in: {line}")))?;
            let p: i64 = it
                .next()
                .ok_or_else(|| Error::Parse(format!("missing parent in: {line}")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad parent id in: {line}")))?;
            entries.push((v, p));
        }
        let n = entries.len();
        let mut parents = vec![Some(usize::MAX); n];
        for (v, p) in entries {
            if v >= n {
                return Err(Error::Parse(format!("vertex id {v} out of range 0..{n}")));
            }
            parents[v] = if p < 0 { None } else { Some(p as usize) };
        }
        if parents.iter().any(|p| *p == Some(usize::MAX)) {
            return Err(Error::Parse("missing vertex line".into()));
        }
        RootedTree::from_parents(&parents)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in 0..self.len() {
            let p = match self.parent[v] {
                None => -1i64,
                Some(p) => p as i64,
            };
            out.push_str(&format!("{v} {p}\n"));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Vertices in depth-first order from the root (children in index order).
    pub fn dfs_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            order.push(v);
            for &c in self.children[v].iter().rev() {
                stack.push(c);
            }
        }
        order
    }

    /// Strict ancestors of `v`, nearest first.
    pub fn ancestors(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            out.push(p);
            cur = p;
        }
        out
    }

    /// True when `a` equals `b` or is a strict ancestor of `b`.
    pub fn is_ancestor_or_self(&self, a: usize, b: usize) -> bool {
        let mut cur = b;
        loop {
            if cur == a {
                return true;
            }
            match self.parent[cur] {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    /// Subtree sizes (number of descendants including self).
    pub fn subtree_sizes(&self) -> Vec<u64> {
        let mut size = vec![1u64; self.len()];
        for &v in self.dfs_order().iter().rev() {
            for &c in self.children(v) {
                size[v] += size[c];
            }
        }
        size
    }

    /// True when `vertices` marks a rooted subtree: empty, or containing the
    /// root with every non-root member's parent also a member.
    pub fn is_rooted_subtree(&self, vertices: &[bool]) -> bool {
        if vertices.len() != self.len() {
            return false;
        }
        if vertices.iter().all(|&b| !b) {
            return true;
        }
        if !vertices[self.root] {
            return false;
        }
        vertices
            .iter()
            .enumerate()
            .all(|(v, &inside)| !inside || self.parent[v].map_or(true, |p| vertices[p]))
    }
}

/// Per-vertex subtree counts: f(v) = 1 + prod over children of f(c).
///
/// The `1` accounts for the empty structure at v, so f(root) counts the empty
/// subtree among the alternatives; a single vertex yields 2.
pub fn count_subtrees(tree: &RootedTree) -> Vec<BigUint> {
    let mut f = vec![BigUint::one(); tree.len()];
    for &v in tree.dfs_order().iter().rev() {
        let mut prod = BigUint::one();
        for &c in tree.children(v) {
            prod *= &f[c];
        }
        f[v] = prod + BigUint::one();
    }
    f
}

/// Number of rooted subtrees containing every vertex of the prefix-closed set
/// `required` (each member's parent is a member). Free branches contribute f.
pub fn count_subtrees_containing(tree: &RootedTree, f: &[BigUint], required: &[usize]) -> BigUint {
    if required.is_empty() {
        return f[tree.root()].clone();
    }
    let mut in_set = vec![false; tree.len()];
    for &v in required {
        in_set[v] = true;
        let mut cur = v;
        while let Some(p) = tree.parent(cur) {
            in_set[p] = true;
            cur = p;
        }
    }
    let mut count = BigUint::one();
    for v in 0..tree.len() {
        if !in_set[v] {
            continue;
        }
        for &c in tree.children(v) {
            if !in_set[c] {
                count *= &f[c];
            }
        }
    }
    count
}

//! The taxonomy tree: node identity, parent links, traversal and mutation.
//!
//! Every node has exactly one parent except the root, which always has id
//! [`NodeId::ROOT`] and label [`ROOT_LABEL`]. Labels are normalized phrases
//! and unique across the tree. Children are kept sorted by id, so the child
//! order is fully determined by the node set and survives serialization.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::is_normalized;

/// Label reserved for the root node.
pub const ROOT_LABEL: &str = "root";

/// Current version of the taxonomy file format.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn is_root(self) -> bool {
        self == Self::ROOT
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Root,
    Category,
    Keyphrase,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Root => "root",
            NodeKind::Category => "category",
            NodeKind::Keyphrase => "keyphrase",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonomyNode {
    pub id: NodeId,
    pub label: String,
    pub parent: Option<NodeId>,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyStats {
    pub num_nodes: usize,
    pub num_edges: usize,
    /// Non-root nodes with at least one child.
    pub num_parents: usize,
    /// Non-root nodes without children.
    pub num_leaves: usize,
    /// Edges on the longest root-to-leaf path.
    pub max_depth: usize,
}

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("label {0:?} already exists")]
    DuplicateLabel(String),
    #[error("label {0:?} is empty or not normalized")]
    InvalidLabel(String),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("taxonomy already has a root")]
    SecondRoot,
    #[error("the root node cannot be moved")]
    MoveRoot,
    #[error("moving node {node} under {new_parent} would create a cycle")]
    Cycle { node: NodeId, new_parent: NodeId },
    #[error("the root node has no ancestor at any resolution")]
    RootResolution,
    #[error("resolution must be at least 1")]
    ZeroResolution,
    #[error("malformed taxonomy file: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = TaxonomyError> = std::result::Result<T, E>;

/// A rooted, single-parent tree of labeled nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    nodes: Vec<TaxonomyNode>,
    children: Vec<Vec<NodeId>>,
    by_label: HashMap<String, NodeId>,
}

impl Default for Taxonomy {
    fn default() -> Self {
        Self::new()
    }
}

impl Taxonomy {
    /// Creates a taxonomy holding only the root.
    pub fn new() -> Self {
        let root = TaxonomyNode {
            id: NodeId::ROOT,
            label: ROOT_LABEL.to_owned(),
            parent: None,
            kind: NodeKind::Root,
        };
        let mut by_label = HashMap::new();
        by_label.insert(ROOT_LABEL.to_owned(), NodeId::ROOT);
        Self {
            nodes: vec![root],
            children: vec![Vec::new()],
            by_label,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Always false: the root is present in every taxonomy.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> Result<&TaxonomyNode> {
        self.nodes.get(id.index()).ok_or(TaxonomyError::UnknownNode(id))
    }

    pub fn label(&self, id: NodeId) -> Result<&str> {
        self.node(id).map(|n| n.label.as_str())
    }

    pub fn parent(&self, id: NodeId) -> Result<Option<NodeId>> {
        self.node(id).map(|n| n.parent)
    }

    pub fn kind(&self, id: NodeId) -> Result<NodeKind> {
        self.node(id).map(|n| n.kind)
    }

    pub fn children(&self, id: NodeId) -> Result<&[NodeId]> {
        self.children
            .get(id.index())
            .map(Vec::as_slice)
            .ok_or(TaxonomyError::UnknownNode(id))
    }

    pub fn find(&self, label: &str) -> Option<NodeId> {
        self.by_label.get(label).copied()
    }

    /// All nodes in id order, root first.
    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &TaxonomyNode> + '_ {
        self.nodes.iter()
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    /// Nodes with at least one child, in id order. Includes the root when
    /// it has children.
    pub fn candidate_parents(&self) -> Vec<NodeId> {
        self.ids()
            .filter(|id| !self.children[id.index()].is_empty())
            .collect()
    }

    /// Adds a new leaf under `parent` and returns its id.
    pub fn add_node(&mut self, label: &str, parent: NodeId, kind: NodeKind) -> Result<NodeId> {
        if kind == NodeKind::Root {
            return Err(TaxonomyError::SecondRoot);
        }
        if !is_normalized(label) {
            return Err(TaxonomyError::InvalidLabel(label.to_owned()));
        }
        if self.by_label.contains_key(label) {
            return Err(TaxonomyError::DuplicateLabel(label.to_owned()));
        }
        if !self.contains(parent) {
            return Err(TaxonomyError::UnknownNode(parent));
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(TaxonomyNode {
            id,
            label: label.to_owned(),
            parent: Some(parent),
            kind,
        });
        self.children.push(Vec::new());
        // The new id is the largest, so pushing keeps the list sorted.
        self.children[parent.index()].push(id);
        self.by_label.insert(label.to_owned(), id);
        Ok(id)
    }

    /// Re-hangs `node` and its whole subtree under `new_parent`.
    ///
    /// Moving a node under its current parent is a no-op.
    pub fn move_node(&mut self, node: NodeId, new_parent: NodeId) -> Result<()> {
        let old_parent = self.node(node)?.parent.ok_or(TaxonomyError::MoveRoot)?;
        self.node(new_parent)?;
        if self.is_in_subtree(new_parent, node) {
            return Err(TaxonomyError::Cycle { node, new_parent });
        }
        if old_parent == new_parent {
            return Ok(());
        }
        self.children[old_parent.index()].retain(|&c| c != node);
        let siblings = &mut self.children[new_parent.index()];
        let pos = siblings.partition_point(|&c| c < node);
        siblings.insert(pos, node);
        self.nodes[node.index()].parent = Some(new_parent);
        Ok(())
    }

    /// Returns `node` followed by each ancestor, ending at the root.
    pub fn path_to_root(&self, node: NodeId) -> Result<Vec<NodeId>> {
        let mut path = vec![node];
        let mut current = self.node(node)?.parent;
        while let Some(p) = current {
            path.push(p);
            current = self.nodes[p.index()].parent;
        }
        Ok(path)
    }

    pub fn depth(&self, node: NodeId) -> Result<usize> {
        let mut depth = 0;
        let mut current = self.node(node)?.parent;
        while let Some(p) = current {
            depth += 1;
            current = self.nodes[p.index()].parent;
        }
        Ok(depth)
    }

    /// Returns true if `node` is `ancestor` or lies below it.
    pub fn is_in_subtree(&self, node: NodeId, ancestor: NodeId) -> bool {
        let mut current = Some(node);
        while let Some(c) = current {
            if c == ancestor {
                return true;
            }
            current = self.nodes.get(c.index()).and_then(|n| n.parent);
        }
        false
    }

    /// Ids of the subtree rooted at `node` (inclusive) in preorder.
    pub fn subtree(&self, node: NodeId) -> Result<Vec<NodeId>> {
        self.node(node)?;
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.children[n.index()].iter().rev().copied());
        }
        Ok(out)
    }

    /// Walks `resolution` parent steps up from `node`, never landing on the
    /// root: a walk that would reach it stops at the depth-1 ancestor.
    pub fn ancestor_at_resolution(&self, node: NodeId, resolution: u32) -> Result<NodeId> {
        if resolution == 0 {
            return Err(TaxonomyError::ZeroResolution);
        }
        if node.is_root() {
            self.node(node)?;
            return Err(TaxonomyError::RootResolution);
        }
        let path = self.path_to_root(node)?;
        let depth = path.len() - 1;
        Ok(path[(resolution as usize).min(depth - 1)])
    }

    /// The ancestor of `node` at the given absolute depth, or `node` itself
    /// when it is shallower than that.
    pub fn ancestor_at_depth(&self, node: NodeId, depth: usize) -> Result<NodeId> {
        let path = self.path_to_root(node)?;
        let node_depth = path.len() - 1;
        Ok(if node_depth <= depth {
            node
        } else {
            path[node_depth - depth]
        })
    }

    pub fn stats(&self) -> TaxonomyStats {
        let mut depths = vec![0usize; self.nodes.len()];
        let mut max_depth = 0;
        let mut stack = vec![NodeId::ROOT];
        while let Some(n) = stack.pop() {
            for &c in &self.children[n.index()] {
                depths[c.index()] = depths[n.index()] + 1;
                max_depth = max_depth.max(depths[c.index()]);
                stack.push(c);
            }
        }
        let num_parents = self
            .ids()
            .skip(1)
            .filter(|id| !self.children[id.index()].is_empty())
            .count();
        TaxonomyStats {
            num_nodes: self.nodes.len(),
            num_edges: self.nodes.len() - 1,
            num_parents,
            num_leaves: self.nodes.len() - 1 - num_parents,
            max_depth,
        }
    }

    /// Checks every structural invariant by full traversal.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(TaxonomyError::Format(msg));
        if self.nodes.is_empty() || self.nodes[0].kind != NodeKind::Root {
            return bad("node 0 must be the root".into());
        }
        let mut edges = 0;
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id.index() != i {
                return bad(format!("node at position {i} has id {}", node.id));
            }
            match (node.kind, node.parent) {
                (NodeKind::Root, None) if i == 0 => {}
                (NodeKind::Root, _) | (_, None) => {
                    return bad(format!("node {i} violates the single-root rule"))
                }
                (_, Some(p)) => {
                    if !self.contains(p) {
                        return bad(format!("node {i} has unknown parent {p}"));
                    }
                    if !self.children[p.index()].contains(&node.id) {
                        return bad(format!("node {i} missing from children of {p}"));
                    }
                    edges += 1;
                }
            }
            if self.by_label.get(&node.label) != Some(&node.id) {
                return bad(format!("label index out of sync for {:?}", node.label));
            }
        }
        let child_entries: usize = self.children.iter().map(Vec::len).sum();
        if child_entries != edges || edges + 1 != self.nodes.len() {
            return bad("children index is not the inverse of parent links".into());
        }
        for kids in &self.children {
            if kids.windows(2).any(|w| w[0] >= w[1]) {
                return bad("child list is not sorted by id".into());
            }
        }
        if self.by_label.len() != self.nodes.len() {
            return bad("duplicate labels".into());
        }
        // Reachability from the root covers every node exactly once.
        if self.subtree(NodeId::ROOT)?.len() != self.nodes.len() {
            return bad("some nodes do not reach the root".into());
        }
        Ok(())
    }

    /// Writes the canonical JSON document: one node per line, id order.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "{{\"version\":{FORMAT_VERSION},\"nodes\":[")?;
        for (i, node) in self.nodes.iter().enumerate() {
            let record = NodeRecord {
                id: node.id,
                label: node.label.clone(),
                kind: node.kind,
                parent: node.parent,
            };
            w.write_all(if i == 0 { b"\n" } else { b",\n" })?;
            serde_json::to_writer(&mut w, &record)?;
        }
        w.write_all(b"\n]}\n")?;
        Ok(())
    }

    pub fn to_canonical_string(&self) -> String {
        let mut buf = Vec::new();
        self.save(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        let doc: TaxonomyFile = serde_json::from_reader(r)?;
        Self::from_file(doc)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: TaxonomyFile = serde_json::from_str(s)?;
        Self::from_file(doc)
    }

    fn from_file(doc: TaxonomyFile) -> Result<Self> {
        let bad = |msg: String| Err(TaxonomyError::Format(msg));
        if doc.version != FORMAT_VERSION {
            return bad(format!("unsupported version {}", doc.version));
        }
        let n = doc.nodes.len();
        let mut nodes = Vec::with_capacity(n);
        let mut children = vec![Vec::new(); n];
        let mut by_label = HashMap::with_capacity(n);
        for (i, rec) in doc.nodes.into_iter().enumerate() {
            if rec.id.index() != i {
                return bad(format!("expected id {i}, found {} (ids must be dense and ordered)", rec.id));
            }
            match (i, rec.kind, rec.parent) {
                (0, NodeKind::Root, None) => {
                    if rec.label != ROOT_LABEL {
                        return bad(format!("root label must be {ROOT_LABEL:?}"));
                    }
                }
                (0, _, _) => return bad("node 0 must be the root with no parent".into()),
                (_, NodeKind::Root, _) => return Err(TaxonomyError::SecondRoot),
                (_, _, None) => return bad(format!("node {i} has no parent")),
                (_, _, Some(p)) => {
                    if p.index() >= n {
                        return Err(TaxonomyError::UnknownNode(p));
                    }
                    children[p.index()].push(rec.id);
                }
            }
            if i > 0 && !is_normalized(&rec.label) {
                return Err(TaxonomyError::InvalidLabel(rec.label));
            }
            if by_label.insert(rec.label.clone(), rec.id).is_some() {
                return Err(TaxonomyError::DuplicateLabel(rec.label));
            }
            nodes.push(TaxonomyNode {
                id: rec.id,
                label: rec.label,
                parent: rec.parent,
                kind: rec.kind,
            });
        }
        if nodes.is_empty() {
            return bad("no root node".into());
        }
        let t = Self {
            nodes,
            children,
            by_label,
        };
        // Catches parent cycles, which the per-record checks cannot see.
        t.validate()?;
        Ok(t)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaxonomyFile {
    version: u32,
    nodes: Vec<NodeRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: NodeId,
    label: String,
    kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent: Option<NodeId>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> (Taxonomy, NodeId, NodeId) {
        let mut t = Taxonomy::new();
        let a = t.add_node("a", NodeId::ROOT, NodeKind::Category).unwrap();
        let a1 = t.add_node("a1", a, NodeKind::Keyphrase).unwrap();
        (t, a, a1)
    }

    #[test]
    fn add_under_root_and_category() {
        let mut t = Taxonomy::new();
        let kitchen = t.add_node("kitchen", NodeId::ROOT, NodeKind::Category).unwrap();
        assert_eq!(t.depth(kitchen).unwrap(), 1);
        assert_eq!(t.stats().num_parents, 0);
        let granite = t
            .add_node("granite countertops", kitchen, NodeKind::Keyphrase)
            .unwrap();
        assert_eq!(t.depth(granite).unwrap(), 2);
        assert_eq!(t.stats().num_parents, 1);
        assert!(matches!(
            t.add_node("kitchen", NodeId::ROOT, NodeKind::Category),
            Err(TaxonomyError::DuplicateLabel(_))
        ));
    }

    #[test]
    fn add_rejects_bad_input() {
        let mut t = Taxonomy::new();
        assert!(matches!(
            t.add_node("x", NodeId(7), NodeKind::Category),
            Err(TaxonomyError::UnknownNode(NodeId(7)))
        ));
        assert!(matches!(
            t.add_node("x", NodeId::ROOT, NodeKind::Root),
            Err(TaxonomyError::SecondRoot)
        ));
        assert!(matches!(
            t.add_node("Not Normal", NodeId::ROOT, NodeKind::Category),
            Err(TaxonomyError::InvalidLabel(_))
        ));
        assert!(matches!(
            t.add_node("root", NodeId::ROOT, NodeKind::Category),
            Err(TaxonomyError::DuplicateLabel(_))
        ));
    }

    #[test]
    fn move_leaf_and_subtree() {
        let mut t = Taxonomy::new();
        let interior = t.add_node("interior", NodeId::ROOT, NodeKind::Category).unwrap();
        let exterior = t.add_node("exterior", NodeId::ROOT, NodeKind::Category).unwrap();
        let sports = t
            .add_node("sports and recreation", NodeId::ROOT, NodeKind::Category)
            .unwrap();
        let gym = t.add_node("gym", interior, NodeKind::Keyphrase).unwrap();
        t.move_node(gym, sports).unwrap();
        assert_eq!(t.parent(gym).unwrap(), Some(sports));
        assert_eq!(t.depth(gym).unwrap(), 2);

        let pool = t.add_node("swimming pool", interior, NodeKind::Keyphrase).unwrap();
        for l in ["lap pool", "pool heater", "hot tub"] {
            t.add_node(l, pool, NodeKind::Keyphrase).unwrap();
        }
        let before: Vec<_> = t.subtree(pool).unwrap();
        assert_eq!(before.len(), 4);
        t.move_node(pool, exterior).unwrap();
        assert_eq!(t.subtree(pool).unwrap(), before);
        assert_eq!(t.parent(pool).unwrap(), Some(exterior));
        assert_eq!(t.depth(before[3]).unwrap(), 3);
        t.validate().unwrap();

        assert!(matches!(
            t.move_node(exterior, pool),
            Err(TaxonomyError::Cycle { .. })
        ));
        assert!(matches!(t.move_node(exterior, exterior), Err(TaxonomyError::Cycle { .. })));
        assert!(matches!(t.move_node(NodeId::ROOT, pool), Err(TaxonomyError::MoveRoot)));
        t.validate().unwrap();
    }

    #[test]
    fn move_keeps_children_sorted() {
        let mut t = Taxonomy::new();
        let a = t.add_node("a", NodeId::ROOT, NodeKind::Category).unwrap();
        let b = t.add_node("b", NodeId::ROOT, NodeKind::Category).unwrap();
        let x = t.add_node("x", a, NodeKind::Keyphrase).unwrap();
        let y = t.add_node("y", b, NodeKind::Keyphrase).unwrap();
        let z = t.add_node("z", b, NodeKind::Keyphrase).unwrap();
        t.move_node(x, b).unwrap();
        assert_eq!(t.children(b).unwrap(), &[x, y, z]);
        t.validate().unwrap();
    }

    #[test]
    fn paths_and_depths() {
        let (t, a, a1) = chain();
        assert_eq!(t.path_to_root(NodeId::ROOT).unwrap(), vec![NodeId::ROOT]);
        assert_eq!(t.path_to_root(a1).unwrap(), vec![a1, a, NodeId::ROOT]);
        for id in t.ids() {
            assert_eq!(t.depth(id).unwrap(), t.path_to_root(id).unwrap().len() - 1);
        }
        assert!(matches!(t.path_to_root(NodeId(9)), Err(TaxonomyError::UnknownNode(_))));
    }

    #[test]
    fn resolution_clamps_below_root() {
        let mut t = Taxonomy::new();
        let c = t.add_node("c", NodeId::ROOT, NodeKind::Category).unwrap();
        let d2 = t.add_node("d2", c, NodeKind::Keyphrase).unwrap();
        let d3 = t.add_node("d3", d2, NodeKind::Keyphrase).unwrap();
        assert_eq!(t.ancestor_at_resolution(d3, 1).unwrap(), d2);
        assert_eq!(t.ancestor_at_resolution(d3, 2).unwrap(), c);
        assert_eq!(t.ancestor_at_resolution(d3, 9).unwrap(), c);
        assert_eq!(t.ancestor_at_resolution(d2, 2).unwrap(), c);
        assert_eq!(t.ancestor_at_resolution(c, 1).unwrap(), c);
        assert_eq!(t.ancestor_at_resolution(c, 5).unwrap(), c);
        assert!(matches!(
            t.ancestor_at_resolution(NodeId::ROOT, 1),
            Err(TaxonomyError::RootResolution)
        ));
        assert!(matches!(
            t.ancestor_at_resolution(d3, 0),
            Err(TaxonomyError::ZeroResolution)
        ));
    }

    #[test]
    fn stats_small_trees() {
        let t = Taxonomy::new();
        assert_eq!(
            t.stats(),
            TaxonomyStats { num_nodes: 1, num_edges: 0, num_parents: 0, num_leaves: 0, max_depth: 0 }
        );
        let mut t = Taxonomy::new();
        let a = t.add_node("a", NodeId::ROOT, NodeKind::Category).unwrap();
        t.add_node("b", NodeId::ROOT, NodeKind::Category).unwrap();
        t.add_node("a1", a, NodeKind::Keyphrase).unwrap();
        assert_eq!(
            t.stats(),
            TaxonomyStats { num_nodes: 4, num_edges: 3, num_parents: 1, num_leaves: 2, max_depth: 2 }
        );
    }

    #[test]
    fn seed_shape_stats() {
        // 1 root + 50 categories + 2509 keywords.
        let mut t = Taxonomy::new();
        let cats: Vec<_> = (0..50)
            .map(|i| t.add_node(&format!("cat{i}"), NodeId::ROOT, NodeKind::Category).unwrap())
            .collect();
        for k in 0..2509 {
            t.add_node(&format!("kw{k}"), cats[k % 50], NodeKind::Keyphrase).unwrap();
        }
        assert_eq!(
            t.stats(),
            TaxonomyStats { num_nodes: 2560, num_edges: 2559, num_parents: 50, num_leaves: 2509, max_depth: 2 }
        );
    }

    #[test]
    fn file_format_roundtrip() {
        let (mut t, a, _) = chain();
        let b = t.add_node("b", NodeId::ROOT, NodeKind::Category).unwrap();
        t.move_node(a, b).unwrap();
        let s = t.to_canonical_string();
        assert!(s.starts_with("{\"version\":1,\"nodes\":[\n{\"id\":0,\"label\":\"root\",\"kind\":\"root\"},\n"));
        let back = Taxonomy::from_json_str(&s).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_canonical_string(), s);
    }

    #[test]
    fn file_format_rejections() {
        let ok = r#"{"version":1,"nodes":[{"id":0,"label":"root","kind":"root"},{"id":1,"label":"kitchen","kind":"category","parent":0}]}"#;
        Taxonomy::from_json_str(ok).unwrap();
        let unknown_field = r#"{"version":1,"nodes":[{"id":0,"label":"root","kind":"root","x":1}]}"#;
        assert!(Taxonomy::from_json_str(unknown_field).is_err());
        let gap = r#"{"version":1,"nodes":[{"id":0,"label":"root","kind":"root"},{"id":2,"label":"k","kind":"category","parent":0}]}"#;
        assert!(matches!(Taxonomy::from_json_str(gap), Err(TaxonomyError::Format(_))));
        let cycle = r#"{"version":1,"nodes":[{"id":0,"label":"root","kind":"root"},{"id":1,"label":"a","kind":"category","parent":2},{"id":2,"label":"b","kind":"category","parent":1}]}"#;
        assert!(Taxonomy::from_json_str(cycle).is_err());
        let dup = r#"{"version":1,"nodes":[{"id":0,"label":"root","kind":"root"},{"id":1,"label":"a","kind":"category","parent":0},{"id":2,"label":"a","kind":"category","parent":0}]}"#;
        assert!(matches!(Taxonomy::from_json_str(dup), Err(TaxonomyError::DuplicateLabel(_))));
        let two_roots = r#"{"version":1,"nodes":[{"id":0,"label":"root","kind":"root"},{"id":1,"label":"a","kind":"root"}]}"#;
        assert!(matches!(Taxonomy::from_json_str(two_roots), Err(TaxonomyError::SecondRoot)));
    }
}

//! Append-only Merkle registries (ACTree, RCTree, DCTree).

use std::collections::VecDeque;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{hash_tagged, tag, Digest};

pub const TREE_DEPTH: usize = 20;
pub const DEFAULT_ROOT_HISTORY: usize = 128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MerkleError {
    #[error("tree full: capacity {0}")]
    Full(u64),
    #[error("leaf index {index} out of range (leaf count {count})")]
    OutOfRange { index: u64, count: u64 },
}

pub fn zero_leaf() -> Digest {
    hash_tagged(tag::MERKLE_EMPTY, &[b"empty"])
}

pub fn hash_node(left: &Digest, right: &Digest) -> Digest {
    hash_tagged(tag::MERKLE_NODE, &[left.as_bytes(), right.as_bytes()])
}

/// `zero_subtrees()[h]` is the root of an all-empty subtree of height `h`.
pub fn zero_subtrees() -> &'static [Digest] {
    static ZEROS: OnceLock<Vec<Digest>> = OnceLock::new();
    ZEROS.get_or_init(|| {
        let mut z = Vec::with_capacity(TREE_DEPTH + 1);
        z.push(zero_leaf());
        for h in 0..TREE_DEPTH {
            z.push(hash_node(&z[h], &z[h]));
        }
        z
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MerklePath {
    pub leaf_index: u64,
    pub siblings: Vec<Digest>,
    /// `true` when the running node is the right child at that level.
    pub directions: Vec<bool>,
}

impl MerklePath {
    /// Fold `leaf` up the path.
    pub fn root_for(&self, leaf: &Digest) -> Digest {
        self.siblings
            .iter()
            .zip(&self.directions)
            .fold(*leaf, |node, (sib, is_right)| {
                if *is_right {
                    hash_node(sib, &node)
                } else {
                    hash_node(&node, sib)
                }
            })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.siblings.len() * 33);
        out.extend_from_slice(&self.leaf_index.to_be_bytes());
        for (s, d) in self.siblings.iter().zip(&self.directions) {
            out.extend_from_slice(s.as_bytes());
            out.push(*d as u8);
        }
        out
    }
}

pub fn verify(root: &Digest, leaf: &Digest, path: &MerklePath) -> bool {
    path.siblings.len() == path.directions.len() && path.root_for(leaf) == *root
}

/// Incremental append-only tree that keeps every interior node so any leaf
/// can be proven against the current root.
#[derive(Clone, Debug)]
pub struct MerkleTree {
    depth: usize,
    // levels[0] are leaves; levels[depth] holds the root once anything is inserted.
    levels: Vec<Vec<Digest>>,
}

impl Default for MerkleTree {
    fn default() -> Self {
        Self::new()
    }
}

impl MerkleTree {
    pub fn new() -> Self {
        Self::with_depth(TREE_DEPTH)
    }

    /// Shallower trees are only useful for exercising capacity limits.
    pub fn with_depth(depth: usize) -> Self {
        assert!((1..=TREE_DEPTH).contains(&depth));
        MerkleTree { depth, levels: vec![Vec::new(); depth + 1] }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn capacity(&self) -> u64 {
        1u64 << self.depth
    }

    pub fn len(&self) -> u64 {
        self.levels[0].len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.levels[0].is_empty()
    }

    pub fn leaves(&self) -> &[Digest] {
        &self.levels[0]
    }

    pub fn root(&self) -> Digest {
        self.levels[self.depth]
            .first()
            .copied()
            .unwrap_or(zero_subtrees()[self.depth])
    }

    fn node(&self, level: usize, index: usize) -> Digest {
        self.levels[level].get(index).copied().unwrap_or(zero_subtrees()[level])
    }

    pub fn insert(&mut self, leaf: Digest) -> Result<(u64, Digest), MerkleError> {
        if self.len() >= self.capacity() {
            return Err(MerkleError::Full(self.capacity()));
        }
        let index = self.levels[0].len();
        self.levels[0].push(leaf);
        let mut idx = index;
        let mut node = leaf;
        for level in 0..self.depth {
            let sibling = self.node(level, idx ^ 1);
            node = if idx & 1 == 1 { hash_node(&sibling, &node) } else { hash_node(&node, &sibling) };
            idx >>= 1;
            let parent_level = &mut self.levels[level + 1];
            if idx < parent_level.len() {
                parent_level[idx] = node;
            } else {
                parent_level.push(node);
            }
        }
        Ok((index as u64, node))
    }

    pub fn prove(&self, leaf_index: u64) -> Result<MerklePath, MerkleError> {
        if leaf_index >= self.len() {
            return Err(MerkleError::OutOfRange { index: leaf_index, count: self.len() });
        }
        let mut idx = leaf_index as usize;
        let mut siblings = Vec::with_capacity(self.depth);
        let mut directions = Vec::with_capacity(self.depth);
        for level in 0..self.depth {
            siblings.push(self.node(level, idx ^ 1));
            directions.push(idx & 1 == 1);
            idx >>= 1;
        }
        Ok(MerklePath { leaf_index, siblings, directions })
    }

    pub fn position(&self, leaf: &Digest) -> Option<u64> {
        self.levels[0].iter().position(|l| l == leaf).map(|i| i as u64)
    }

    /// Reference root computed from scratch; used to cross-check the incremental path.
    pub fn recompute_root(&self) -> Digest {
        let mut layer: Vec<Digest> = self.levels[0].clone();
        for level in 0..self.depth {
            let zero = zero_subtrees()[level];
            let mut next = Vec::with_capacity(layer.len().div_ceil(2));
            for pair in layer.chunks(2) {
                let right = pair.get(1).copied().unwrap_or(zero);
                next.push(hash_node(&pair[0], &right));
            }
            layer = next;
        }
        layer.first().copied().unwrap_or(zero_subtrees()[self.depth])
    }
}

/// Bounded ring of recent roots a ledger accepts proofs against.
#[derive(Clone, Debug)]
pub struct RootHistory {
    cap: usize,
    roots: VecDeque<Digest>,
}

impl RootHistory {
    pub fn new(cap: usize, initial: Digest) -> Self {
        let mut roots = VecDeque::with_capacity(cap);
        roots.push_back(initial);
        RootHistory { cap: cap.max(1), roots }
    }

    pub fn push(&mut self, root: Digest) {
        if self.roots.back() == Some(&root) {
            return;
        }
        if self.roots.len() == self.cap {
            self.roots.pop_front();
        }
        self.roots.push_back(root);
    }

    pub fn contains(&self, root: &Digest) -> bool {
        self.roots.iter().any(|r| r == root)
    }

    pub fn latest(&self) -> Digest {
        *self.roots.back().expect("history never empty")
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }
}

/// A tree together with the roots it has recently exposed.
#[derive(Clone, Debug)]
pub struct Registry {
    pub tree: MerkleTree,
    pub history: RootHistory,
}

impl Registry {
    pub fn new(history: usize) -> Self {
        let tree = MerkleTree::new();
        let root = tree.root();
        Registry { tree, history: RootHistory::new(history, root) }
    }

    pub fn insert(&mut self, leaf: Digest) -> Result<u64, MerkleError> {
        let (idx, root) = self.tree.insert(leaf)?;
        self.history.push(root);
        Ok(idx)
    }

    pub fn knows_root(&self, root: &Digest) -> bool {
        self.history.contains(root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn leaf(i: u64) -> Digest {
        hash_tagged(0xff, &[&i.to_be_bytes()])
    }

    #[test]
    fn empty_root_is_folded_zero_leaf() {
        let mut expected = zero_leaf();
        for _ in 0..TREE_DEPTH {
            expected = hash_node(&expected, &expected);
        }
        assert_eq!(MerkleTree::new().root(), expected);
    }

    #[test]
    fn single_leaf_path_is_zero_siblings() {
        let mut t = MerkleTree::new();
        t.insert(leaf(0)).unwrap();
        let p = t.prove(0).unwrap();
        assert_eq!(p.siblings.len(), TREE_DEPTH);
        assert_eq!(&p.siblings[..], &zero_subtrees()[..TREE_DEPTH]);
        assert!(verify(&t.root(), &leaf(0), &p));
    }

    #[test]
    fn thousand_leaves_round_trip() {
        let mut t = MerkleTree::new();
        for i in 0..1000 {
            let (idx, root) = t.insert(leaf(i)).unwrap();
            assert_eq!(idx, i);
            assert_eq!(root, t.root());
        }
        assert_eq!(t.root(), t.recompute_root());
        for i in 0..1000 {
            let p = t.prove(i).unwrap();
            assert_eq!(p.siblings.len(), TREE_DEPTH);
            assert!(verify(&t.root(), &leaf(i), &p));
        }
    }

    #[test]
    fn stale_paths_verify_against_snapshot_only() {
        let mut t = MerkleTree::new();
        t.insert(leaf(0)).unwrap();
        let snap_root = t.root();
        let snap_path = t.prove(0).unwrap();
        for i in 1..10 {
            t.insert(leaf(i)).unwrap();
        }
        assert!(verify(&snap_root, &leaf(0), &snap_path));
        assert!(!verify(&t.root(), &leaf(0), &snap_path));
        assert!(verify(&t.root(), &leaf(0), &t.prove(0).unwrap()));
    }

    #[test]
    fn tampering_breaks_verification() {
        let mut t = MerkleTree::new();
        for i in 0..5 {
            t.insert(leaf(i)).unwrap();
        }
        let mut p = t.prove(3).unwrap();
        assert!(!verify(&t.root(), &leaf(4), &p));
        p.siblings[0].0[0] ^= 1;
        assert!(!verify(&t.root(), &leaf(3), &p));
    }

    #[test]
    fn random_tamper_trials_all_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut t = MerkleTree::new();
        for i in 0..64 {
            t.insert(leaf(i)).unwrap();
        }
        let root = t.root();
        for _ in 0..10_000 {
            let i = rng.random_range(0..64);
            let mut p = t.prove(i).unwrap();
            let mut l = leaf(i);
            match rng.random_range(0..3) {
                0 => l.0[rng.random_range(0..32)] ^= 1 << rng.random_range(0..8),
                1 => {
                    let lvl = rng.random_range(0..TREE_DEPTH);
                    p.siblings[lvl].0[rng.random_range(0..32)] ^= 1 << rng.random_range(0..8);
                }
                _ => {
                    let lvl = rng.random_range(0..TREE_DEPTH);
                    p.directions[lvl] = !p.directions[lvl];
                }
            }
            assert!(!verify(&root, &l, &p));
        }
    }

    #[test]
    fn capacity_and_range_errors() {
        let mut t = MerkleTree::with_depth(2);
        for i in 0..4 {
            t.insert(leaf(i)).unwrap();
        }
        assert_eq!(t.insert(leaf(9)), Err(MerkleError::Full(4)));
        assert!(matches!(t.prove(4), Err(MerkleError::OutOfRange { .. })));
        assert_eq!(t.root(), t.recompute_root());
    }

    #[test]
    fn root_history_ring() {
        let mut h = RootHistory::new(2, leaf(0));
        h.push(leaf(1));
        h.push(leaf(2));
        assert!(!h.contains(&leaf(0)));
        assert!(h.contains(&leaf(1)) && h.contains(&leaf(2)));
        assert_eq!(h.latest(), leaf(2));
    }
}

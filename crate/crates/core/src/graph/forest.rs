use num_bigint::BigUint;

use super::proofs::{count_proofs, enumerate_proofs, ProofTree};
use super::{HpdicGraph, NodeId};
use crate::Warning;

pub const DEFAULT_FOREST_CAP: usize = 10_000;

/// A deterministic prefix of the proofs of a graph plus their exact total.
#[derive(Debug, Clone)]
pub struct ProofForest {
    trees: Vec<ProofTree>,
    total: BigUint,
    /// Node -> indexes of the trees containing it.
    containing: Vec<Vec<u32>>,
}

impl ProofForest {
    pub fn trees(&self) -> &[ProofTree] {
        &self.trees
    }

    pub fn tree(&self, index: usize) -> &ProofTree {
        &self.trees[index]
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn total(&self) -> &BigUint {
        &self.total
    }

    pub fn truncated(&self) -> bool {
        BigUint::from(self.trees.len()) < self.total
    }

    /// Indexes of the materialized trees containing `node`.
    pub fn trees_containing(&self, node: NodeId) -> &[u32] {
        self.containing.get(node).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Materializes up to `cap` proofs. Returns a warning when more exist.
pub fn to_forest(graph: &HpdicGraph, cap: usize) -> (ProofForest, Option<Warning>) {
    let total = count_proofs(graph);
    let trees = enumerate_proofs(graph, cap).proofs;
    let mut containing = vec![Vec::new(); graph.len()];
    for (t, tree) in trees.iter().enumerate() {
        for (node, list) in containing.iter_mut().enumerate() {
            if tree.contains(node) {
                list.push(t as u32);
            }
        }
    }
    let warning = (BigUint::from(trees.len()) < total).then(|| {
        log::warn!("proof forest capped at {cap} of {total} proofs");
        Warning::CapExceeded {
            cap,
            total: total.clone(),
        }
    });
    (
        ProofForest {
            trees,
            total,
            containing,
        },
        warning,
    )
}

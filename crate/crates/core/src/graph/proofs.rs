//! Proof enumeration and exact counting.
//!
//! A proof picks one inference parent for every statement it needs, starting
//! from the conclusion, such that no statement occurs in its own ancestry.
//! Enumeration is a depth-first search that always expands the pending
//! statement with the smallest id and tries its parents in id order (which
//! is rule-id order). Counting runs the same search but collapses any pending
//! statement whose possible sub-derivations are tree-shaped and cannot
//! interact with the rest of the search into a memoized sum of products.

use std::collections::{BTreeMap, BTreeSet};

use fixedbitset::FixedBitSet;
use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::{HpdicGraph, NodeId};

/// One proof: a parent choice for each needed non-hypothesis statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofTree {
    root: NodeId,
    chosen: BTreeMap<NodeId, NodeId>,
    leaves: BTreeSet<NodeId>,
    members: FixedBitSet,
}

impl ProofTree {
    pub(crate) fn new(graph: &HpdicGraph, chosen: BTreeMap<NodeId, NodeId>) -> Self {
        let mut members = FixedBitSet::with_capacity(graph.len());
        let mut leaves = BTreeSet::new();
        for (&s, &i) in &chosen {
            members.insert(s);
            members.insert(i);
            for &p in graph.premises(i) {
                members.insert(p);
                if graph.is_hypothesis(p) {
                    leaves.insert(p);
                }
            }
        }
        ProofTree {
            root: graph.conclusion(),
            chosen,
            leaves,
            members,
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Statement -> chosen inference parent.
    pub fn chosen(&self) -> &BTreeMap<NodeId, NodeId> {
        &self.chosen
    }

    /// Hypotheses used by the proof.
    pub fn leaves(&self) -> &BTreeSet<NodeId> {
        &self.leaves
    }

    /// Number of inferences.
    pub fn size(&self) -> usize {
        self.chosen.len()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.members.contains(node)
    }

    /// Derived statements of the proof, each after its premises, following
    /// premise order from the root.
    pub fn derived_in_order(&self, graph: &HpdicGraph) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.chosen.len());
        let mut seen = BTreeSet::new();
        // (statement, expanded)
        let mut stack = vec![(self.root, false)];
        while let Some((s, expanded)) = stack.pop() {
            if expanded {
                out.push(s);
                continue;
            }
            if !seen.insert(s) {
                continue;
            }
            let Some(&inf) = self.chosen.get(&s) else {
                continue;
            };
            stack.push((s, true));
            for &p in graph.premises(inf).iter().rev() {
                if self.chosen.contains_key(&p) && !seen.contains(&p) {
                    stack.push((p, false));
                }
            }
        }
        out
    }

    /// Longest chain of inferences from the hypotheses to `statement`.
    pub fn height(&self, graph: &HpdicGraph, statement: NodeId) -> usize {
        fn go(
            t: &ProofTree,
            g: &HpdicGraph,
            s: NodeId,
            memo: &mut BTreeMap<NodeId, usize>,
        ) -> usize {
            if let Some(&h) = memo.get(&s) {
                return h;
            }
            let h = match t.chosen.get(&s) {
                None => 0,
                Some(&i) => 1 + g.premises(i).iter().map(|&p| go(t, g, p, memo)).max().unwrap_or(0),
            };
            memo.insert(s, h);
            h
        }
        go(self, graph, statement, &mut BTreeMap::new())
    }

    /// Rule ids of the chosen inferences in derivation order.
    pub fn rule_sequence<'g>(&self, graph: &'g HpdicGraph) -> Vec<&'g str> {
        self.derived_in_order(graph)
            .into_iter()
            .map(|s| graph.node(self.chosen[&s]).label())
            .collect()
    }
}

/// Result of a capped enumeration.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub proofs: Vec<ProofTree>,
    /// More proofs exist beyond the cap.
    pub truncated: bool,
}

/// Search state shared by enumeration and counting.
struct Search<'g> {
    graph: &'g HpdicGraph,
    chosen: BTreeMap<NodeId, NodeId>,
    pending: BTreeSet<NodeId>,
}

impl<'g> Search<'g> {
    fn new(graph: &'g HpdicGraph) -> Self {
        Search {
            graph,
            chosen: BTreeMap::new(),
            pending: [graph.conclusion()].into(),
        }
    }

    /// Whether `target` is reachable from `from` through chosen parents.
    fn reaches(&self, from: NodeId, target: NodeId) -> bool {
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(s) = stack.pop() {
            if s == target {
                return true;
            }
            if !seen.insert(s) {
                continue;
            }
            if let Some(&i) = self.chosen.get(&s) {
                stack.extend(self.graph.premises(i).iter().copied());
            }
        }
        false
    }

    fn acceptable(&self, s: NodeId, inference: NodeId) -> bool {
        !self
            .graph
            .premises(inference)
            .iter()
            .any(|&p| self.reaches(p, s))
    }

    /// Applies the choice and returns the statements it made pending.
    fn choose(&mut self, s: NodeId, inference: NodeId) -> Vec<NodeId> {
        self.pending.remove(&s);
        self.chosen.insert(s, inference);
        let mut added = Vec::new();
        for &p in self.graph.premises(inference) {
            if !self.graph.is_hypothesis(p)
                && !self.chosen.contains_key(&p)
                && self.pending.insert(p)
            {
                added.push(p);
            }
        }
        added
    }

    fn undo(&mut self, s: NodeId, added: Vec<NodeId>) {
        for p in added {
            self.pending.remove(&p);
        }
        self.chosen.remove(&s);
        self.pending.insert(s);
    }

    /// Visits every completion; `visit` returns `false` to stop.
    fn enumerate(&mut self, visit: &mut dyn FnMut(&BTreeMap<NodeId, NodeId>) -> bool) -> bool {
        let Some(&s) = self.pending.first() else {
            return visit(&self.chosen);
        };
        for &inf in self.graph.parents(s) {
            if !self.acceptable(s, inf) {
                continue;
            }
            let added = self.choose(s, inf);
            let go_on = self.enumerate(visit);
            self.undo(s, added);
            if !go_on {
                return false;
            }
        }
        true
    }
}

/// Proofs in deterministic order, at most `cap` of them.
pub fn enumerate_proofs(graph: &HpdicGraph, cap: usize) -> Enumeration {
    let mut proofs = Vec::new();
    let mut truncated = false;
    Search::new(graph).enumerate(&mut |chosen| {
        if proofs.len() == cap {
            truncated = true;
            return false;
        }
        proofs.push(ProofTree::new(graph, chosen.clone()));
        true
    });
    Enumeration { proofs, truncated }
}

/// Precomputed reachability used to recognise independent sub-derivations.
struct Regions {
    /// Statement -> itself plus every non-hypothesis statement reachable
    /// backwards through any parent.
    region: Vec<FixedBitSet>,
    /// Statement whose sub-derivations are acyclic and never share a
    /// statement between premises of one inference.
    independent: Vec<bool>,
    counts: Vec<Option<BigUint>>,
}

impl Regions {
    fn new(graph: &HpdicGraph) -> Self {
        let n = graph.statement_count();
        let mut region = Vec::with_capacity(n);
        let mut cyclic = Vec::with_capacity(n);
        for s in 0..n {
            let mut on_cycle = false;
            let mut set = FixedBitSet::with_capacity(n);
            let mut stack = vec![s];
            while let Some(t) = stack.pop() {
                for &i in graph.parents(t) {
                    for &p in graph.premises(i) {
                        if graph.is_hypothesis(p) {
                            continue;
                        }
                        on_cycle |= p == s;
                        if !set.put(p) {
                            stack.push(p);
                        }
                    }
                }
            }
            set.insert(s);
            region.push(set);
            cyclic.push(on_cycle);
        }
        let mut independent: Vec<Option<bool>> = vec![None; n];
        for s in 0..n {
            Self::settle(graph, s, &region, &cyclic, &mut independent);
        }
        Regions {
            region,
            independent: independent.into_iter().map(|x| x.unwrap_or(false)).collect(),
            counts: vec![None; n],
        }
    }

    fn settle(
        graph: &HpdicGraph,
        s: NodeId,
        region: &[FixedBitSet],
        cyclic: &[bool],
        memo: &mut [Option<bool>],
    ) -> bool {
        if let Some(v) = memo[s] {
            return v;
        }
        if graph.is_hypothesis(s) {
            memo[s] = Some(true);
            return true;
        }
        if cyclic[s] {
            memo[s] = Some(false);
            return false;
        }
        let mut ok = true;
        'parents: for &i in graph.parents(s) {
            let inner: Vec<NodeId> = graph
                .premises(i)
                .iter()
                .copied()
                .filter(|&p| !graph.is_hypothesis(p))
                .collect();
            for (a, &p) in inner.iter().enumerate() {
                for &q in &inner[a + 1..] {
                    if !region[p].is_disjoint(&region[q]) {
                        ok = false;
                        break 'parents;
                    }
                }
            }
            for &p in &inner {
                if !Self::settle(graph, p, region, cyclic, memo) {
                    ok = false;
                    break 'parents;
                }
            }
        }
        memo[s] = Some(ok);
        ok
    }

    /// Sum over parents of the product of premise counts; only valid for
    /// independent statements.
    fn count(&mut self, graph: &HpdicGraph, s: NodeId) -> BigUint {
        if graph.is_hypothesis(s) {
            return BigUint::one();
        }
        if let Some(c) = &self.counts[s] {
            return c.clone();
        }
        let mut total = BigUint::zero();
        for &i in graph.parents(s) {
            let mut product = BigUint::one();
            for &p in graph.premises(i) {
                product *= self.count(graph, p);
                if product.is_zero() {
                    break;
                }
            }
            total += product;
        }
        self.counts[s] = Some(total.clone());
        total
    }
}

/// Exact number of proofs; always equals the length of an uncapped
/// [`enumerate_proofs`].
pub fn count_proofs(graph: &HpdicGraph) -> BigUint {
    let mut regions = Regions::new(graph);
    let mut search = Search::new(graph);
    count_from(&mut search, &mut regions)
}

fn count_from(search: &mut Search, regions: &mut Regions) -> BigUint {
    let graph = search.graph;
    let mut factor = BigUint::one();
    let mut detached = Vec::new();
    let mut used = FixedBitSet::with_capacity(graph.statement_count());
    for &s in search.chosen.keys() {
        used.insert(s);
    }
    let pending: Vec<NodeId> = search.pending.iter().copied().collect();
    for &p in &pending {
        if !regions.independent[p] || !regions.region[p].is_disjoint(&used) {
            continue;
        }
        let isolated = pending
            .iter()
            .all(|&q| q == p || regions.region[p].is_disjoint(&regions.region[q]));
        if isolated {
            factor *= regions.count(graph, p);
            detached.push(p);
        }
    }
    if factor.is_zero() {
        return factor;
    }
    for p in &detached {
        search.pending.remove(p);
    }
    let rest = match search.pending.first().copied() {
        None => BigUint::one(),
        Some(s) => {
            let mut sum = BigUint::zero();
            for &inf in graph.parents(s) {
                if !search.acceptable(s, inf) {
                    continue;
                }
                let added = search.choose(s, inf);
                sum += count_from(search, regions);
                search.undo(s, added);
            }
            sum
        }
    };
    search.pending.extend(detached);
    factor * rest
}

use std::collections::{BTreeMap, BTreeSet};

use super::NodeId;

/// Relays chosen by `selector` among its 1-hop neighbors.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MprSet {
    pub selector: NodeId,
    pub relays: BTreeSet<NodeId>,
    /// Strict 2-hop nodes with no listed relay among the current neighbors.
    pub uncoverable: Vec<NodeId>,
}

/// Greedy set cover over the strict 2-hop neighborhood.
///
/// `two_hop` maps each 2-hop node to the 1-hop neighbors that reach it.
/// Entries for `selector` itself or for 1-hop neighbors are ignored. Each
/// round picks the neighbor covering the most still-uncovered nodes, lowest
/// id on ties.
pub fn compute_mpr(
    selector: NodeId,
    neighbors: &BTreeSet<NodeId>,
    two_hop: &BTreeMap<NodeId, BTreeSet<NodeId>>,
) -> MprSet {
    let mut uncovered = BTreeSet::new();
    let mut uncoverable = Vec::new();
    let mut covers: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for (&target, via) in two_hop {
        if target == selector || neighbors.contains(&target) {
            continue;
        }
        let mut reachable = false;
        for relay in via.iter().filter(|r| neighbors.contains(r)) {
            covers.entry(*relay).or_default().insert(target);
            reachable = true;
        }
        if reachable {
            uncovered.insert(target);
        } else {
            uncoverable.push(target);
        }
    }

    let mut relays = BTreeSet::new();
    while !uncovered.is_empty() {
        let best = covers
            .iter()
            .filter(|(r, _)| !relays.contains(*r))
            .map(|(r, c)| (c.intersection(&uncovered).count(), *r))
            // Largest gain first, then the lower id.
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
            .expect("every uncovered node has a relay");
        for t in &covers[&best.1] {
            uncovered.remove(t);
        }
        relays.insert(best.1);
    }

    MprSet {
        selector,
        relays,
        uncoverable,
    }
}

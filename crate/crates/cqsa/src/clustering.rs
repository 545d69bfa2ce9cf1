//! Per-round randomized partitioning of clients into clusters.
//!
//! A uniform permutation (Fisher-Yates) is sliced into groups of the target
//! size. A trailing group of size 1 is merged into the previous group: a
//! lone client would hand its individual update straight to the server,
//! defeating the aggregation privacy. Larger remainders stay as smaller
//! clusters.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::statevec::MAX_QUBITS;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("need at least 2 clients, got {0}")]
    TooFewClients(usize),
    #[error("cluster size {k} outside valid range 2..={max} for {n} clients")]
    ClusterSizeOutOfRange { k: usize, n: usize, max: usize },
    #[error("client ids must be distinct")]
    DuplicateClientIds,
}

/// One cluster of a round's assignment. `valid` is cleared when a member
/// drops out; invalid clusters are excluded from aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub members: Vec<usize>,
    pub valid: bool,
}

/// A round's disjoint partition of the participating clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub round: u64,
    pub target_size: usize,
    pub clusters: Vec<Cluster>,
}

impl ClusterAssignment {
    pub fn valid_clusters(&self) -> impl Iterator<Item = (usize, &Cluster)> {
        self.clusters.iter().enumerate().filter(|(_, c)| c.valid)
    }

    pub fn participant_count(&self) -> usize {
        self.clusters.iter().map(|c| c.members.len()).sum()
    }
}

/// Shuffles the client ids with Fisher-Yates and slices the permutation into
/// groups of `k`, merging a trailing singleton into the previous group.
///
/// Draw pattern: one `gen_range(0..=i)` per position from the back; identical
/// seeds give identical assignments on every platform.
pub fn fisher_yates_partition<R: Rng>(
    client_ids: &[usize],
    k: usize,
    round: u64,
    rng: &mut R,
) -> Result<ClusterAssignment, PartitionError> {
    let n = client_ids.len();
    if n < 2 {
        return Err(PartitionError::TooFewClients(n));
    }
    let max = n.min(MAX_QUBITS);
    if k < 2 || k > max {
        return Err(PartitionError::ClusterSizeOutOfRange { k, n, max });
    }
    if client_ids.iter().collect::<BTreeSet<_>>().len() != n {
        return Err(PartitionError::DuplicateClientIds);
    }

    let mut order = client_ids.to_vec();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }

    let mut clusters: Vec<Cluster> = order
        .chunks(k)
        .map(|members| Cluster {
            members: members.to_vec(),
            valid: true,
        })
        .collect();
    if clusters.len() > 1 && clusters.last().map(|c| c.members.len()) == Some(1) {
        let lone = clusters.pop().unwrap();
        clusters
            .last_mut()
            .unwrap()
            .members
            .extend(lone.members);
    }

    Ok(ClusterAssignment {
        round,
        target_size: k,
        clusters,
    })
}

/// Marks every cluster containing a dropped client as invalid; valid clusters
/// are untouched. Ids outside the assignment are ignored.
pub fn apply_dropouts(
    assignment: &ClusterAssignment,
    dropped: &BTreeSet<usize>,
) -> ClusterAssignment {
    let mut out = assignment.clone();
    for cluster in out.clusters.iter_mut() {
        if cluster.members.iter().any(|id| dropped.contains(id)) {
            cluster.valid = false;
        }
    }
    out
}

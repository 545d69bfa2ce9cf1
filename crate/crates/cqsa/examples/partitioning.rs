//! Per-round randomized clustering: assignments change every round, a
//! trailing singleton merges into its neighbor, and a dropout invalidates
//! only its own cluster.
//!
//! Run: cargo run --example partitioning

use std::collections::BTreeSet;

use cqsa::clustering::{apply_dropouts, fisher_yates_partition};
use cqsa::seeding::{self, label};

fn main() {
    let clients: Vec<usize> = (0..9).collect();
    let seed = 17;

    println!("9 clients, target cluster size 4 (the remainder merges):");
    for round in 0..3u64 {
        let mut rng = seeding::derived_rng(seed, &[label::PARTITION, round]);
        let assignment = fisher_yates_partition(&clients, 4, round, &mut rng).unwrap();
        let rendered: Vec<String> = assignment
            .clusters
            .iter()
            .map(|c| format!("{:?}", c.members))
            .collect();
        println!("  round {round}: {}", rendered.join("  "));
    }
    println!();

    // Re-randomization means no pair of clients stays together; empirically
    // every pair co-occurs near the exchangeable rate (k-1)/(n-1).
    let n = 12;
    let k = 4;
    let rounds = 20_000u64;
    let ids: Vec<usize> = (0..n).collect();
    let mut together = vec![vec![0u32; n]; n];
    for round in 0..rounds {
        let mut rng = seeding::derived_rng(seed, &[label::PARTITION, round]);
        let assignment = fisher_yates_partition(&ids, k, round, &mut rng).unwrap();
        for cluster in &assignment.clusters {
            for (i, &a) in cluster.members.iter().enumerate() {
                for &b in &cluster.members[i + 1..] {
                    together[a.min(b)][a.max(b)] += 1;
                }
            }
        }
    }
    let expected = (k - 1) as f64 / (n - 1) as f64;
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    for a in 0..n {
        for b in a + 1..n {
            let freq = together[a][b] as f64 / rounds as f64;
            min = min.min(freq);
            max = max.max(freq);
        }
    }
    println!(
        "co-occurrence over {rounds} rounds (n={n}, k={k}): [{min:.4}, {max:.4}] around {expected:.4}"
    );
    println!();

    // Dropouts: only the affected cluster is lost.
    let mut rng = seeding::derived_rng(seed, &[label::PARTITION, 0]);
    let assignment = fisher_yates_partition(&(0..20).collect::<Vec<_>>(), 4, 0, &mut rng).unwrap();
    let dropped: BTreeSet<usize> = [13].into_iter().collect();
    let after = apply_dropouts(&assignment, &dropped);
    println!("client 13 drops out:");
    for (i, cluster) in after.clusters.iter().enumerate() {
        println!(
            "  cluster {i} {:?} -> {}",
            cluster.members,
            if cluster.valid { "aggregates" } else { "invalidated" }
        );
    }
}

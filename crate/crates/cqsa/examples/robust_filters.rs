//! The server's outlier-rejection toolbox applied to one set of cluster
//! aggregates with a poisoned member.
//!
//! Run: cargo run --example robust_filters

use cqsa::robust::{
    apply_filter, coordinate_median, cosine_similarity, euclidean_distance, fltrust_aggregate,
    krum, multi_stat_filter, trimmed_mean, FilterChoice,
};

fn main() {
    // Five cluster means: four near the true descent direction, one flipped
    // and amplified.
    let means = vec![
        vec![-0.52, 0.31, -0.24],
        vec![-0.48, 0.28, -0.26],
        vec![-0.55, 0.33, -0.21],
        vec![2.60, -1.55, 1.20],
        vec![-0.50, 0.30, -0.25],
    ];
    let counts = vec![4usize, 4, 4, 4, 4];
    let root = vec![-0.51, 0.30, -0.25];

    println!("pairwise view of cluster 3 (the adversary):");
    for i in 0..3 {
        println!(
            "  vs cluster {i}: distance {:.3}, cosine {:+.3}",
            euclidean_distance(&means[3], &means[i]).unwrap(),
            cosine_similarity(&means[3], &means[i]).unwrap(),
        );
    }
    println!();

    let selection = krum(&means, 1).unwrap();
    println!("krum scores:       {:?}", selection.scores.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>());
    println!("krum selects:      cluster {}", selection.selected[0]);
    println!("median aggregate:  {:?}", round3(&coordinate_median(&means).unwrap()));
    println!("trimmed mean(0.2): {:?}", round3(&trimmed_mean(&means, 0.2).unwrap()));

    let trust = fltrust_aggregate(&means, &root).unwrap();
    println!(
        "trust scores:      {:?} -> aggregate {:?}",
        trust.trust_scores.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>(),
        round3(&trust.aggregate),
    );

    let verdict = multi_stat_filter(&means).unwrap();
    println!(
        "multi-stat filter: accepted {:?}, rejected {:?}",
        verdict.accepted, verdict.rejected
    );
    println!("  distance indicator: {:?}", round3(&verdict.scores["distance_to_reference"]));
    println!("  cosine indicator:   {:?}", round3(&verdict.scores["cosine_to_reference"]));
    println!();

    // The same machinery behind one dispatch point, as the harness uses it.
    for choice in [
        FilterChoice::AcceptAll,
        FilterChoice::Krum { f: 1 },
        FilterChoice::Median,
        FilterChoice::MultiStat,
    ] {
        let (aggregate, verdict) = apply_filter(&choice, &means, &counts, Some(&root)).unwrap();
        println!(
            "{choice:?}: aggregate {:?} (accepted {:?})",
            round3(&aggregate),
            verdict.accepted
        );
    }
}

fn round3(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1000.0).round() / 1000.0).collect()
}

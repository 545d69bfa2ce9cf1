//! A full federated experiment on the synthetic regression task: attack-free
//! baseline, an undefended poisoning run, and a defended run side by side.
//!
//! Run: cargo run --example federated_round

use cqsa::fl::{run_experiment, AttackConfig, AttackKind, ChannelMode, ExperimentConfig};
use cqsa::robust::FilterChoice;

fn main() {
    let mut baseline = ExperimentConfig::desk_default();
    baseline.rounds = 30;
    baseline.seed = 12;

    // Two adversaries out of twenty: at most two of the five clusters can be
    // poisoned per round, which cluster-level defenses tolerate.
    let mut attacked = baseline.clone();
    attacked.attack = AttackConfig {
        kind: AttackKind::SignFlip,
        magnitude: 10.0,
        byzantine_ids: [4, 16].into_iter().collect(),
    };
    let mut defended = attacked.clone();
    defended.filter = FilterChoice::Median;

    let clean = run_experiment(&baseline).unwrap();
    let undefended = run_experiment(&attacked).unwrap();
    let median = run_experiment(&defended).unwrap();

    println!("loss by round (initial {:.4}):", clean.summary.initial_loss);
    println!("{:>5} | {:>12} | {:>12} | {:>12}", "round", "attack-free", "undefended", "median");
    for round in (0..baseline.rounds as usize).step_by(5) {
        println!(
            "{round:>5} | {:>12.6} | {:>12.6} | {:>12.6}",
            clean.reports[round].global_loss,
            undefended.reports[round].global_loss,
            median.reports[round].global_loss,
        );
    }
    println!();
    println!("final losses:");
    println!("  attack-free baseline: {:.3e}", clean.summary.final_loss);
    println!("  sign-flip, accept-all: {:.3e}", undefended.summary.final_loss);
    println!("  sign-flip, median:     {:.3e}", median.summary.final_loss);
    println!();

    // A round on the simulated channel instead of exact sums: shot noise
    // perturbs the aggregate but not the trend.
    let mut sampled = baseline.clone();
    sampled.rounds = 5;
    sampled.channel = ChannelMode::ShotNoise;
    sampled.shots = 50_000;
    let sampled_out = run_experiment(&sampled).unwrap();
    println!("shot-sampled channel ({} shots per coordinate):", sampled.shots);
    for report in &sampled_out.reports {
        println!(
            "  round {}: loss {:.6}, mean phase-estimation error {:.5} rad",
            report.round, report.global_loss, report.estimation_error_mean
        );
    }
    for warning in &sampled_out.summary.warnings {
        println!("  warning: {warning}");
    }
}

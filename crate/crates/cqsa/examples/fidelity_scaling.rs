//! Why clustering helps on noisy hardware: population fidelity of one big
//! entangled register versus many small ones.
//!
//! Run: cargo run --example fidelity_scaling

use cqsa::fidelity::{
    analytic_fidelity, cqsa_total_fidelity, direct_fidelity, extrapolated_fidelity,
};

fn main() {
    let trajectories = 50_000;
    let seed = 5;

    // Direct simulation versus the (1-p)^2-per-CNOT recurrence. Phase-only
    // errors leave the population untouched, so direct values sit slightly
    // above the recurrence.
    let p = 0.005;
    println!("register fidelity at p = {p} ({trajectories} trajectories):");
    println!("{:>4} | {:>8} | {:>11}", "n", "direct", "recurrence");
    let mut base = None;
    for n in [2u32, 5, 10, 15, 20] {
        let direct = direct_fidelity(n, p, trajectories, seed).unwrap();
        let recurrence = extrapolated_fidelity(n, p, (1, 1.0)).unwrap();
        println!("{n:>4} | {:>8.4} | {recurrence:>11.4}", direct.value);
        base = Some((n, direct.value));
    }
    let (n0, f0) = base.unwrap();
    println!(
        "  beyond the direct cap: F(60) extrapolated from n={n0} is {:.4}",
        extrapolated_fidelity(60, p, (n0, f0)).unwrap()
    );
    println!();

    // The clustered system multiplies many small-cluster fidelities and
    // still beats one global register.
    let n = 60;
    println!("60 clients at p = {p}: joint fidelity by cluster size");
    println!("{:>4} | {:>8} | {:>8}", "k", "cluster", "joint");
    for k in [2u32, 4, 5, 6, 10, 20, 60] {
        let total = cqsa_total_fidelity(n, k, p, trajectories, 20, seed).unwrap();
        let cluster = direct_fidelity(k.min(20), p, trajectories, seed).unwrap();
        println!("{k:>4} | {:>8.4} | {:>8.4}", cluster.value, total.value);
    }
    println!();

    // The closed-form per-qubit model, for comparison curves.
    println!("analytic (1 - eps)^n at eps = 0.005:");
    for n in [10u32, 30, 60, 100] {
        println!("  n = {n:>3}: {:.4}", analytic_fidelity(n, 0.005));
    }
}

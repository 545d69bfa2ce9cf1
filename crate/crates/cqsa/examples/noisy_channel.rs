//! Depolarizing noise as sampled trajectories: injection statistics, the
//! trajectory-averaged state against the analytic channel, and what noise
//! does to GHZ population fidelity.
//!
//! Run: cargo run --example noisy_channel

use num_complex::Complex64;

use cqsa::protocol::{ghz_population_fidelity, noisy_build_ghz};
use cqsa::seeding;
use cqsa::statevec::{sample_depolarizing_pair, NoiseModel, StateVector, DEPOLARIZING_PAIRS};

fn main() {
    // Injection statistics: one uniform draw per CNOT decides, one
    // categorical draw picks among the 15 non-identity pairs.
    let p = 0.3;
    let trials = 200_000u64;
    let mut injected = 0u64;
    let mut per_pair = [0u64; 15];
    for t in 0..trials {
        let mut rng = seeding::derived_rng(1, &[t]);
        if let Some(pair) = sample_depolarizing_pair(p, &mut rng) {
            injected += 1;
            per_pair[DEPOLARIZING_PAIRS.iter().position(|&q| q == pair).unwrap()] += 1;
        }
    }
    println!("injection rate at p = {p}: {:.4} (expected {p})", injected as f64 / trials as f64);
    let spread = per_pair.iter().map(|&c| c as f64 / injected as f64).fold((1.0f64, 0.0f64), |acc, f| {
        (acc.0.min(f), acc.1.max(f))
    });
    println!("pair frequencies span [{:.4}, {:.4}] around 1/15 = {:.4}", spread.0, spread.1, 1.0 / 15.0);
    println!();

    // Trajectory-averaged density matrix of a noisy CNOT on a Bell pair vs
    // the analytic channel output.
    let noise = NoiseModel::new(0.2).unwrap();
    let mut bell = StateVector::new(2).unwrap();
    bell.apply_h(0).unwrap();
    bell.apply_cnot(0, 1).unwrap();

    let trajectories = 50_000u64;
    let mut averaged = [[Complex64::new(0.0, 0.0); 4]; 4];
    for t in 0..trajectories {
        let mut rng = seeding::derived_rng(7, &[t]);
        let mut state = bell.clone();
        state.apply_noisy_cnot(0, 1, &noise, &mut rng).unwrap();
        let amps = state.amplitudes();
        for r in 0..4 {
            for c in 0..4 {
                averaged[r][c] += amps[r] * amps[c].conj();
            }
        }
    }
    println!("trajectory-averaged density matrix (p = {}, {} trajectories):", noise.cnot_p, trajectories);
    for row in &averaged {
        let rendered: Vec<String> = row
            .iter()
            .map(|e| format!("{:+.3}{:+.3}i", e.re / trajectories as f64, e.im / trajectories as f64))
            .collect();
        println!("  [{}]", rendered.join(", "));
    }
    println!();

    // Population fidelity of noisy GHZ preparation shrinks with both the
    // register size and the noise level.
    for &p in &[0.002, 0.01] {
        let noise = NoiseModel::new(p).unwrap();
        let values: Vec<String> = [2usize, 4, 8, 12]
            .iter()
            .map(|&k| {
                let f = ghz_population_fidelity(k, &noise, 20_000, 11).unwrap();
                format!("k={k}: {f:.4}")
            })
            .collect();
        println!("population fidelity at p = {p}: {}", values.join("  "));
    }

    // A single trajectory is still a pure state; its support shows which
    // Pauli error (if any) hit.
    let mut rng = seeding::derived_rng(99, &[0]);
    let sample = noisy_build_ghz(3, &NoiseModel::new(0.9).unwrap(), &mut rng).unwrap();
    let support: Vec<String> = sample
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 1e-12)
        .map(|(i, a)| format!("|{:03b}> ({:.3}{:+.3}i)", i, a.re, a.im))
        .collect();
    println!("\none noisy trajectory of GHZ_3 at p = 0.9: {}", support.join(" + "));
}

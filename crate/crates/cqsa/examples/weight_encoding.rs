//! The classical side of the protocol: the magnitude exchange, the scaling
//! factor, and the geometry the encoding preserves.
//!
//! Run: cargo run --example weight_encoding

use cqsa::encoding::{
    decode_sum, encode_update, global_max, local_max, make_scaling, ModelUpdate,
};

fn main() {
    let updates = vec![
        ModelUpdate::new(0, vec![0.50, -1.20, 0.80]),
        ModelUpdate::new(1, vec![-0.30, 0.90, 1.95]),
        ModelUpdate::new(2, vec![0.10, -0.40, -0.70]),
        ModelUpdate::new(3, vec![1.10, 0.20, 0.60]),
    ];
    let k = updates.len();

    // Each client reveals only one scalar; the server broadcasts the max.
    let maxima: Vec<f64> = updates.iter().map(|u| local_max(u).unwrap()).collect();
    let w_max = global_max(&maxima).unwrap();
    let ctx = make_scaling(k, w_max).unwrap();
    println!("declared maxima:  {maxima:?}");
    println!("global bound:     {w_max}");
    println!("radians/unit:     {:.6}  (pi / (k * w_max))", ctx.scale());
    println!();

    let encoded: Vec<Vec<f64>> = updates.iter().map(|u| encode_update(u, &ctx).unwrap()).collect();

    // Norms scale by exactly S; directions are untouched.
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for (update, phases) in updates.iter().zip(&encoded) {
        println!(
            "client {}: |w| = {:.4}, |theta| = {:.6}, ratio = {:.6}",
            update.client_id,
            norm(&update.weights),
            norm(phases),
            norm(phases) / norm(&update.weights),
        );
    }
    let cos = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (norm(a) * norm(b))
    };
    println!(
        "cosine(w0, w1) = {:.10} vs cosine(theta0, theta1) = {:.10}",
        cos(&updates[0].weights, &updates[1].weights),
        cos(&encoded[0], &encoded[1]),
    );
    println!();

    // Sums decode exactly, and no coordinate-wise sum can leave [-pi, pi].
    println!("coordinate | exact weight sum | phase sum | decoded");
    for c in 0..3 {
        let weight_sum: f64 = updates.iter().map(|u| u.weights[c]).sum();
        let phase_sum: f64 = encoded.iter().map(|t| t[c]).sum();
        let decoded = decode_sum(phase_sum, &ctx).unwrap();
        println!("{c:>10} | {weight_sum:>16.6} | {phase_sum:>+9.6} | {decoded:.6}");
    }
    println!();

    // A client exceeding its declared bound is caught deterministically.
    let liar = ModelUpdate::new(9, vec![0.1, 3.5, 0.0]);
    println!("over-bound submission: {}", encode_update(&liar, &ctx).unwrap_err());
}

//! Fidelity-scaling analysis: direct noisy simulation for small registers,
//! recurrence extrapolation above the direct cap, the analytic per-qubit
//! model, and the clustered-product comparison.
//!
//! Direct simulation exploits the structure of the preparation circuit: after
//! the initial Hadamard, every gate (CNOT and injected Paulis) maps
//! computational basis states to computational basis states, so a trajectory
//! is always a superposition of exactly two basis states. Tracking those two
//! branches costs O(n) per trajectory instead of O(2^n) and reproduces the
//! dense simulator bit for bit; the equality is pinned by tests against
//! [`crate::protocol::ghz_population_fidelity`].

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::seeding::{self, label};
use crate::statevec::{sample_depolarizing_pair, NoiseModel, PauliLabel, SimError, MAX_QUBITS};

/// Largest register simulated directly by default; larger systems use the
/// recurrence from a base measured at this size.
pub const DEFAULT_DIRECT_CAP: u32 = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FidelityError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("qubit count {0} outside supported range 1..={MAX_QUBITS}")]
    QubitCountOutOfRange(u32),
    #[error("trajectory count must be at least 1")]
    ZeroTrajectories,
    #[error("extrapolation target {n} must exceed the base size {n0}")]
    ExtrapolationBase { n: u32, n0: u32 },
    #[error("cluster size {k} invalid for {n} qubits")]
    InvalidClusterSize { k: u32, n: u32 },
    #[error("direct cap {0} outside supported range 1..={MAX_QUBITS}")]
    InvalidDirectCap(u32),
}

/// How a tabulated fidelity value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Direct,
    Extrapolated,
    Analytic,
    CqsaProduct,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::Direct => "Direct",
            Method::Extrapolated => "Extrapolated",
            Method::Analytic => "Analytic",
            Method::CqsaProduct => "CqsaProduct",
        };
        f.write_str(name)
    }
}

/// One row of a fidelity table. `n` and `k` record the scan grid position;
/// baseline rows carry the cluster-size position they are paired with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub method: Method,
    pub n: u32,
    pub k: u32,
    pub p: f64,
    pub fidelity: f64,
    pub std_error: f64,
    pub trajectories: u64,
}

/// A Monte-Carlo fidelity value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// A two-branch trajectory of the GHZ preparation circuit.
///
/// Mirrors the dense simulator exactly: same qubit-to-bit convention, same
/// amplitude arithmetic, same RNG consumption per noisy CNOT.
struct BranchPair {
    num_qubits: u32,
    x: usize,
    y: usize,
    ax: Complex64,
    ay: Complex64,
}

impl BranchPair {
    /// State after H on qubit 0 of |0...0>.
    fn new(num_qubits: u32) -> Self {
        Self {
            num_qubits,
            x: 0,
            y: 1 << (num_qubits - 1),
            ax: Complex64::new(FRAC_1_SQRT_2, 0.0),
            ay: Complex64::new(FRAC_1_SQRT_2, 0.0),
        }
    }

    fn mask(&self, qubit: u32) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    fn cnot(&mut self, control: u32, target: u32) {
        let (c, t) = (self.mask(control), self.mask(target));
        if self.x & c != 0 {
            self.x ^= t;
        }
        if self.y & c != 0 {
            self.y ^= t;
        }
    }

    fn pauli(&mut self, qubit: u32, pauli: PauliLabel) {
        let m = self.mask(qubit);
        let apply = |bits: &mut usize, amp: &mut Complex64| match pauli {
            PauliLabel::I => {}
            PauliLabel::X => *bits ^= m,
            PauliLabel::Z => {
                if *bits & m != 0 {
                    *amp = -*amp;
                }
            }
            PauliLabel::Y => {
                if *bits & m == 0 {
                    *amp *= Complex64::new(0.0, 1.0);
                } else {
                    *amp *= Complex64::new(0.0, -1.0);
                }
                *bits ^= m;
            }
        };
        apply(&mut self.x, &mut self.ax);
        apply(&mut self.y, &mut self.ay);
    }

    fn noisy_cnot<R: Rng>(&mut self, control: u32, target: u32, noise: &NoiseModel, rng: &mut R) {
        self.cnot(control, target);
        if let Some((pc, pt)) = sample_depolarizing_pair(noise.cnot_p, rng) {
            self.pauli(control, pc);
            self.pauli(target, pt);
        }
    }

    /// Population on {|0...0>, |1...1>}, clamped into [0, 1].
    fn population(&self) -> f64 {
        let all_ones = (1usize << self.num_qubits) - 1;
        let mut f = 0.0;
        if self.x == 0 || self.x == all_ones {
            f += self.ax.norm_sqr();
        }
        if self.y == 0 || self.y == all_ones {
            f += self.ay.norm_sqr();
        }
        f.min(1.0)
    }
}

fn ghz_trajectory_population(n: u32, noise: &NoiseModel, rng: &mut impl Rng) -> f64 {
    let mut state = BranchPair::new(n);
    for q in 0..n - 1 {
        state.noisy_cnot(q, q + 1, noise, rng);
    }
    state.population()
}

/// Mean GHZ population fidelity at register size `n` over independent noisy
/// trajectories, with its standard error.
///
/// Trajectory `t` of the point `(n, p)` draws from the stream
/// `(base_seed, FIDELITY_POINT, n, bits(p), TRAJECTORY, t)`, so any caller
/// with the same base seed reproduces the same value bit for bit.
pub fn direct_fidelity(
    n: u32,
    p: f64,
    trajectories: u64,
    base_seed: u64,
) -> Result<FidelityEstimate, FidelityError> {
    if n == 0 || n as usize > MAX_QUBITS {
        return Err(FidelityError::QubitCountOutOfRange(n));
    }
    if trajectories == 0 {
        return Err(FidelityError::ZeroTrajectories);
    }
    let noise = NoiseModel::new(p)?;
    let point_seed = seeding::derive_seed(base_seed, &[label::FIDELITY_POINT, n as u64, p.to_bits()]);
    let values: Vec<f64> = (0..trajectories)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeding::derived_rng(point_seed, &[label::TRAJECTORY, t]);
            ghz_trajectory_population(n, &noise, &mut rng)
        })
        .collect();
    // Sequential reduction in index order keeps the result independent of
    // the worker count.
    let sum: f64 = values.iter().sum();
    let mean = sum / trajectories as f64;
    let std_error = if trajectories > 1 {
        let sum_sq: f64 = values.iter().map(|f| f * f).sum();
        let var = ((sum_sq - sum * sum / trajectories as f64) / (trajectories - 1) as f64).max(0.0);
        (var / trajectories as f64).sqrt()
    } else {
        0.0
    };
    Ok(FidelityEstimate { value: mean, std_error })
}

/// Recurrence extrapolation from a measured base: each added qubit costs one
/// CNOT and multiplies the fidelity by `(1 - p)^2`. The product is applied
/// stepwise so it matches the recurrence bit for bit.
pub fn extrapolated_fidelity(n: u32, p: f64, base: (u32, f64)) -> Result<f64, FidelityError> {
    let (n0, f0) = base;
    if n <= n0 {
        return Err(FidelityError::ExtrapolationBase { n, n0 });
    }
    let step = (1.0 - p) * (1.0 - p);
    let mut fidelity = f0;
    for _ in n0..n {
        fidelity *= step;
    }
    Ok(fidelity)
}

/// Closed-form per-qubit error model `(1 - epsilon)^n`. The error rate here
/// is an independent input, not derived from the gate noise `p`.
pub fn analytic_fidelity(n: u32, epsilon: f64) -> f64 {
    (1.0 - epsilon).powi(n as i32)
}

/// Fidelity of one cluster of size `k`: direct simulation up to the cap,
/// recurrence from a direct base above it. The extrapolated standard error
/// scales by the same deterministic factor as the value.
pub fn cluster_fidelity(
    k: u32,
    p: f64,
    trajectories: u64,
    direct_cap: u32,
    base_seed: u64,
) -> Result<(FidelityEstimate, Method), FidelityError> {
    if direct_cap == 0 || direct_cap as usize > MAX_QUBITS {
        return Err(FidelityError::InvalidDirectCap(direct_cap));
    }
    if k <= direct_cap {
        Ok((direct_fidelity(k, p, trajectories, base_seed)?, Method::Direct))
    } else {
        let base = direct_fidelity(direct_cap, p, trajectories, base_seed)?;
        let value = extrapolated_fidelity(k, p, (direct_cap, base.value))?;
        let factor = if base.value > 0.0 { value / base.value } else { 0.0 };
        Ok((
            FidelityEstimate {
                value,
                std_error: base.std_error * factor,
            },
            Method::Extrapolated,
        ))
    }
}

/// Joint fidelity of a clustered system: the cluster fidelity raised to the
/// number of clusters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalFidelity {
    pub value: f64,
    pub std_error: f64,
    pub clusters: u32,
    /// Cleared when `k` does not divide `n` and the cluster count was rounded
    /// up.
    pub exact_partition: bool,
    /// How the underlying cluster fidelity was obtained.
    pub cluster_method: Method,
}

/// `F_cluster(k)` raised to the `ceil(n / k)` power: the probability that
/// every cluster preparation succeeds at once.
pub fn cqsa_total_fidelity(
    n: u32,
    k: u32,
    p: f64,
    trajectories: u64,
    direct_cap: u32,
    base_seed: u64,
) -> Result<TotalFidelity, FidelityError> {
    if k == 0 || k > n {
        return Err(FidelityError::InvalidClusterSize { k, n });
    }
    let (cluster, cluster_method) = cluster_fidelity(k, p, trajectories, direct_cap, base_seed)?;
    let clusters = n.div_ceil(k);
    let exact_partition = n % k == 0;
    let value = if clusters == 1 {
        cluster.value
    } else {
        cluster.value.powi(clusters as i32)
    };
    // Delta method: d(F^M)/dF = M F^(M-1).
    let std_error = if clusters == 1 {
        cluster.std_error
    } else {
        clusters as f64 * cluster.value.powi(clusters as i32 - 1) * cluster.std_error
    };
    Ok(TotalFidelity {
        value,
        std_error,
        clusters,
        exact_partition,
        cluster_method,
    })
}

/// The factors of 60 in ascending order: the cluster-size grid of the
/// cluster-size scan.
pub const FACTORS_OF_60: [u32; 12] = [1, 2, 3, 4, 5, 6, 10, 12, 15, 20, 30, 60];

/// Noise levels of the cluster-size scan.
pub const CLUSTER_SCAN_NOISE_LEVELS: [f64; 2] = [0.005, 0.01];

/// Cluster-size scan at 60 clients: for every noise level and cluster size,
/// one clustered-product row and one paired global-baseline row.
pub fn scan_cluster_sizes(
    trajectories: u64,
    direct_cap: u32,
    base_seed: u64,
) -> Result<Vec<CurveRow>, FidelityError> {
    let n = 60;
    let mut rows = Vec::new();
    for &p in &CLUSTER_SCAN_NOISE_LEVELS {
        let (global, global_method) = cluster_fidelity(n, p, trajectories, direct_cap, base_seed)?;
        for &k in &FACTORS_OF_60 {
            let total = cqsa_total_fidelity(n, k, p, trajectories, direct_cap, base_seed)?;
            rows.push(CurveRow {
                method: Method::CqsaProduct,
                n,
                k,
                p,
                fidelity: total.value,
                std_error: total.std_error,
                trajectories,
            });
            rows.push(CurveRow {
                method: global_method,
                n,
                k,
                p,
                fidelity: global.value,
                std_error: global.std_error,
                trajectories,
            });
        }
    }
    Ok(rows)
}

/// Noise grid of the noise-versus-size scan.
pub const NOISE_GRID_LEVELS: [f64; 5] = [0.0, 0.005, 0.01, 0.015, 0.02];
/// Client-count grid of the noise-versus-size scan.
pub const NOISE_GRID_SIZES: [u32; 5] = [4, 8, 20, 40, 100];
/// Fixed cluster size of the noise-versus-size scan.
pub const NOISE_GRID_CLUSTER_SIZE: u32 = 4;

/// Noise-versus-size scan at fixed cluster size 4: clustered-product and
/// global surfaces over the (p, N) grid.
pub fn scan_noise_grid(
    trajectories: u64,
    direct_cap: u32,
    base_seed: u64,
) -> Result<Vec<CurveRow>, FidelityError> {
    let k = NOISE_GRID_CLUSTER_SIZE;
    let mut rows = Vec::new();
    for &p in &NOISE_GRID_LEVELS {
        for &n in &NOISE_GRID_SIZES {
            let total = cqsa_total_fidelity(n, k, p, trajectories, direct_cap, base_seed)?;
            rows.push(CurveRow {
                method: Method::CqsaProduct,
                n,
                k,
                p,
                fidelity: total.value,
                std_error: total.std_error,
                trajectories,
            });
            let (global, global_method) =
                cluster_fidelity(n, p, trajectories, direct_cap, base_seed)?;
            rows.push(CurveRow {
                method: global_method,
                n,
                k,
                p,
                fidelity: global.value,
                std_error: global.std_error,
                trajectories,
            });
        }
    }
    Ok(rows)
}

/// Configurable scan: clustered-product and global rows over the given
/// grids, plus optional analytic-model rows (their `p` column carries the
/// per-qubit error rate).
#[allow(clippy::too_many_arguments)]
pub fn scan_custom(
    n: u32,
    k_list: &[u32],
    p_list: &[f64],
    epsilon_list: &[f64],
    pure_recurrence: bool,
    trajectories: u64,
    direct_cap: u32,
    base_seed: u64,
) -> Result<Vec<CurveRow>, FidelityError> {
    let mut rows = Vec::new();
    for &p in p_list {
        let (global, global_method) = if pure_recurrence {
            // Model-only baseline: recurrence from the exact single-qubit
            // fidelity, no simulation.
            (
                FidelityEstimate {
                    value: if n == 1 {
                        1.0
                    } else {
                        extrapolated_fidelity(n, p, (1, 1.0))?
                    },
                    std_error: 0.0,
                },
                Method::Extrapolated,
            )
        } else {
            cluster_fidelity(n, p, trajectories, direct_cap, base_seed)?
        };
        for &k in k_list {
            let total = cqsa_total_fidelity(n, k, p, trajectories, direct_cap, base_seed)?;
            rows.push(CurveRow {
                method: Method::CqsaProduct,
                n,
                k,
                p,
                fidelity: total.value,
                std_error: total.std_error,
                trajectories,
            });
            rows.push(CurveRow {
                method: global_method,
                n,
                k,
                p,
                fidelity: global.value,
                std_error: global.std_error,
                trajectories,
            });
        }
    }
    for &epsilon in epsilon_list {
        rows.push(CurveRow {
            method: Method::Analytic,
            n,
            k: n,
            p: epsilon,
            fidelity: analytic_fidelity(n, epsilon),
            std_error: 0.0,
            trajectories: 0,
        });
    }
    Ok(rows)
}

/// Renders rows as CSV with the fixed header
/// `method,n,k,p,fidelity,stderr,trajectories`.
pub fn render_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("method,n,k,p,fidelity,stderr,trajectories\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.method, row.n, row.k, row.p, row.fidelity, row.std_error, row.trajectories
        ));
    }
    out
}

//! Classical weight <-> phase mapping.
//!
//! Clients exchange only the magnitude bound `w_max` (each sends its local
//! maximum, the server broadcasts the global maximum), then scale every
//! coordinate by `S = pi / (k * w_max)`. The factor `k` in the denominator
//! keeps any k-client coordinate sum inside `[-pi, pi]`, so phase sums never
//! wrap. Scaling by a positive scalar preserves Euclidean-norm proportions
//! and cosine similarity exactly, which is what lets cluster-level filters
//! operate on decoded sums.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A coordinate may exceed the declared bound by at most this much before it
/// counts as a protocol violation.
pub const BOUND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodeError {
    #[error("model update must have at least one coordinate")]
    EmptyUpdate,
    #[error("local maxima list must be non-empty")]
    EmptyMaxima,
    #[error("cluster size must be at least 1")]
    ZeroClusterSize,
    #[error("weight {value} of client {client_id} at coordinate {coordinate} exceeds the declared bound {bound}")]
    BoundViolation {
        client_id: usize,
        coordinate: usize,
        value: f64,
        bound: f64,
    },
    #[error("non-finite weight {value} from client {client_id} at coordinate {coordinate}")]
    NonFiniteWeight {
        client_id: usize,
        coordinate: usize,
        value: f64,
    },
    #[error("degenerate scaling (w_max = 0) cannot decode the nonzero phase sum {0}")]
    DegenerateDecode(f64),
}

/// One client's d-dimensional update for a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelUpdate {
    pub client_id: usize,
    pub weights: Vec<f64>,
}

impl ModelUpdate {
    pub fn new(client_id: usize, weights: Vec<f64>) -> Self {
        Self { client_id, weights }
    }
}

/// The broadcast scaling for a cluster: `S = pi / (k * w_max)` radians per
/// weight unit, or a degenerate context when `w_max = 0` (all updates are
/// provably zero and the quantum round is skipped).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingContext {
    k: usize,
    w_max: f64,
    s: f64,
}

impl ScalingContext {
    pub fn cluster_size(&self) -> usize {
        self.k
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    /// Radians per weight unit; 0 in the degenerate case.
    pub fn scale(&self) -> f64 {
        self.s
    }

    pub fn is_degenerate(&self) -> bool {
        self.s == 0.0
    }
}

/// Largest absolute coordinate of one update.
pub fn local_max(update: &ModelUpdate) -> Result<f64, EncodeError> {
    if update.weights.is_empty() {
        return Err(EncodeError::EmptyUpdate);
    }
    let mut max = 0.0f64;
    for (coordinate, &value) in update.weights.iter().enumerate() {
        if !value.is_finite() {
            return Err(EncodeError::NonFiniteWeight {
                client_id: update.client_id,
                coordinate,
                value,
            });
        }
        max = max.max(value.abs());
    }
    Ok(max)
}

/// The server side of the exchange: maximum of the declared local maxima.
pub fn global_max(local_maxima: &[f64]) -> Result<f64, EncodeError> {
    if local_maxima.is_empty() {
        return Err(EncodeError::EmptyMaxima);
    }
    Ok(local_maxima.iter().fold(0.0f64, |acc, &m| acc.max(m)))
}

pub fn make_scaling(k: usize, w_max: f64) -> Result<ScalingContext, EncodeError> {
    if k == 0 {
        return Err(EncodeError::ZeroClusterSize);
    }
    let s = if w_max > 0.0 {
        PI / (k as f64 * w_max)
    } else {
        0.0
    };
    Ok(ScalingContext { k, w_max, s })
}

/// Coordinate-wise phase encoding `theta = S * w`.
///
/// A coordinate beyond the declared bound (past [`BOUND_TOLERANCE`]) means
/// the client lied in the max exchange and is reported as a violation.
pub fn encode_update(update: &ModelUpdate, ctx: &ScalingContext) -> Result<Vec<f64>, EncodeError> {
    if update.weights.is_empty() {
        return Err(EncodeError::EmptyUpdate);
    }
    let mut thetas = Vec::with_capacity(update.weights.len());
    for (coordinate, &value) in update.weights.iter().enumerate() {
        if !value.is_finite() {
            return Err(EncodeError::NonFiniteWeight {
                client_id: update.client_id,
                coordinate,
                value,
            });
        }
        if value.abs() > ctx.w_max + BOUND_TOLERANCE {
            return Err(EncodeError::BoundViolation {
                client_id: update.client_id,
                coordinate,
                value,
                bound: ctx.w_max,
            });
        }
        thetas.push(ctx.s * value);
    }
    Ok(thetas)
}

/// Inverse of the encoding for an aggregated phase: `theta_sum / S`.
pub fn decode_sum(theta_sum: f64, ctx: &ScalingContext) -> Result<f64, EncodeError> {
    if ctx.is_degenerate() {
        if theta_sum != 0.0 {
            return Err(EncodeError::DegenerateDecode(theta_sum));
        }
        return Ok(0.0);
    }
    Ok(theta_sum / ctx.s)
}

//! Desk-scale federated rounds over the clustered aggregation pipeline.
//!
//! The task is synthetic linear regression (quadratic loss), so convergence
//! is provable and every defense claim can be checked against exact
//! arithmetic. One round: broadcast the model, take one full-batch gradient
//! step per client, apply the configured Byzantine perturbations, run the
//! magnitude exchange, partition clients, aggregate each cluster coordinate
//! by coordinate through the blind-summation channel, decode, filter the
//! cluster aggregates, and apply the surviving combination to the model.
//!
//! Channel tiers: `Exact` sums the encoded phases analytically (no shots),
//! `ShotNoise` runs the full protocol with an ideal channel, `Noisy` adds
//! depolarizing noise and is reserved for small demonstrations.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{apply_dropouts, fisher_yates_partition, PartitionError};
use crate::encoding::{
    decode_sum, encode_update, global_max, local_max, make_scaling, EncodeError, ModelUpdate,
};
use crate::protocol::{estimate_sum, ProtocolConfig, ProtocolError};
use crate::robust::{
    apply_filter, normalize_for_comparison, AggregateError, ClusterAggregate, FilterChoice,
    FilterVerdict,
};
use crate::seeding::{self, label};
use crate::statevec::{NoiseModel, SimError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("client dataset is empty")]
    EmptyDataset,
}

/// How faithfully the aggregation channel is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    /// Analytic phase sums, no shots.
    Exact,
    /// Full protocol with an ideal channel; only shot noise remains.
    ShotNoise,
    /// Full protocol with depolarizing noise on every CNOT.
    Noisy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    None,
    /// Submit `-magnitude * update`.
    SignFlip,
    /// Submit `magnitude * w_ref * (+-1 per coordinate)`.
    ScaledNoise,
    /// Submit `magnitude * w_ref` on every coordinate.
    ConstantDrift,
}

/// Which clients misbehave and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    pub kind: AttackKind,
    #[serde(default = "default_magnitude")]
    pub magnitude: f64,
    #[serde(default)]
    pub byzantine_ids: BTreeSet<usize>,
}

fn default_magnitude() -> f64 {
    1.0
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            kind: AttackKind::None,
            magnitude: 1.0,
            byzantine_ids: BTreeSet::new(),
        }
    }
}

/// Clients missing from a given round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropoutEvent {
    pub round: u64,
    pub client_ids: Vec<usize>,
}

/// Full experiment description; see SCHEMAS.md for the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_clients: usize,
    pub cluster_size: usize,
    pub dim: usize,
    pub rounds: u64,
    pub learning_rate: f64,
    #[serde(default = "default_samples")]
    pub samples_per_client: usize,
    #[serde(default = "default_label_noise")]
    pub label_noise: f64,
    #[serde(default)]
    pub attack: AttackConfig,
    #[serde(default = "default_filter")]
    pub filter: FilterChoice,
    #[serde(default = "default_channel")]
    pub channel: ChannelMode,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub depolarizing_p: f64,
    pub seed: u64,
    #[serde(default)]
    pub dropout_schedule: Vec<DropoutEvent>,
}

fn default_samples() -> usize {
    50
}

fn default_label_noise() -> f64 {
    0.01
}

fn default_filter() -> FilterChoice {
    FilterChoice::AcceptAll
}

fn default_channel() -> ChannelMode {
    ChannelMode::Exact
}

fn default_shots() -> u64 {
    100_000
}

impl ExperimentConfig {
    /// The stock desk-scale setup: 20 clients in clusters of 4, an
    /// 8-dimensional task, 50 rounds.
    pub fn desk_default() -> Self {
        Self {
            n_clients: 20,
            cluster_size: 4,
            dim: 8,
            rounds: 50,
            learning_rate: 0.1,
            samples_per_client: 50,
            label_noise: 0.01,
            attack: AttackConfig::default(),
            filter: FilterChoice::AcceptAll,
            channel: ChannelMode::Exact,
            shots: 100_000,
            depolarizing_p: 0.0,
            seed: 42,
            dropout_schedule: Vec::new(),
        }
    }

    /// Number of clusters a full-participation round produces, after the
    /// trailing-singleton merge.
    pub fn cluster_count(&self) -> usize {
        let chunks = self.n_clients.div_ceil(self.cluster_size);
        if chunks > 1 && self.n_clients % self.cluster_size == 1 {
            chunks - 1
        } else {
            chunks
        }
    }

    /// Checks the configuration; hard violations are errors, soft concerns
    /// come back as warnings.
    pub fn validate(&self) -> Result<Vec<String>, FlError> {
        let fail = |msg: String| Err(FlError::InvalidConfig(msg));
        if self.n_clients < 2 {
            return fail(format!("n_clients must be at least 2, got {}", self.n_clients));
        }
        if self.cluster_size < 2 || self.cluster_size > crate::statevec::MAX_QUBITS {
            return fail(format!(
                "cluster_size must be in 2..={}, got {}",
                crate::statevec::MAX_QUBITS,
                self.cluster_size
            ));
        }
        if self.cluster_size > self.n_clients {
            return fail(format!(
                "cluster_size {} exceeds n_clients {}",
                self.cluster_size, self.n_clients
            ));
        }
        if self.dim == 0 {
            return fail("dim must be at least 1".into());
        }
        if self.rounds == 0 {
            return fail("rounds must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.samples_per_client == 0 {
            return fail("samples_per_client must be at least 1".into());
        }
        if !(self.label_noise.is_finite() && self.label_noise >= 0.0) {
            return fail(format!("label_noise must be non-negative, got {}", self.label_noise));
        }
        if !self.attack.magnitude.is_finite() {
            return fail(format!("attack.magnitude must be finite, got {}", self.attack.magnitude));
        }
        if let Some(&id) = self.attack.byzantine_ids.iter().find(|&&id| id >= self.n_clients) {
            return fail(format!("attack.byzantine_ids contains unknown client {id}"));
        }
        if !(0.0..=1.0).contains(&self.depolarizing_p) {
            return fail(format!(
                "depolarizing_p must be in [0, 1], got {}",
                self.depolarizing_p
            ));
        }
        match self.channel {
            ChannelMode::Exact => {}
            ChannelMode::ShotNoise => {
                if self.shots == 0 {
                    return fail("shots must be at least 1 for the shot_noise channel".into());
                }
                if self.depolarizing_p != 0.0 {
                    return fail("shot_noise channel requires depolarizing_p = 0; use the noisy channel".into());
                }
            }
            ChannelMode::Noisy => {
                if self.shots == 0 {
                    return fail("shots must be at least 1 for the noisy channel".into());
                }
                // Full noisy trajectories per shot; kept to demonstration size.
                if self.cluster_size > 5 || self.dim > 8 {
                    return fail(format!(
                        "noisy channel is limited to cluster_size <= 5 and dim <= 8, got {} and {}",
                        self.cluster_size, self.dim
                    ));
                }
            }
        }
        let clusters = self.cluster_count();
        match self.filter {
            FilterChoice::AcceptAll | FilterChoice::Median | FilterChoice::FlTrust => {}
            FilterChoice::Krum { f } => {
                if clusters < f + 3 {
                    return fail(format!(
                        "krum with f={f} needs at least {} clusters, this setup yields {clusters}",
                        f + 3
                    ));
                }
            }
            FilterChoice::MultiKrum { f, m } => {
                if clusters < f + 3 {
                    return fail(format!(
                        "multi_krum with f={f} needs at least {} clusters, this setup yields {clusters}",
                        f + 3
                    ));
                }
                if m == 0 || m > clusters - f - 2 {
                    return fail(format!(
                        "multi_krum selection m={m} outside 1..={}",
                        clusters - f - 2
                    ));
                }
            }
            FilterChoice::TrimmedMean { beta } => {
                if !(0.0..0.5).contains(&beta) {
                    return fail(format!("trimmed_mean beta must be in [0, 0.5), got {beta}"));
                }
            }
            FilterChoice::MultiStat => {
                if clusters < 3 {
                    return fail(format!(
                        "multi_stat needs at least 3 clusters, this setup yields {clusters}"
                    ));
                }
            }
        }
        for event in &self.dropout_schedule {
            if event.round >= self.rounds {
                return fail(format!("dropout event at round {} beyond horizon {}", event.round, self.rounds));
            }
            if let Some(&id) = event.client_ids.iter().find(|&&id| id >= self.n_clients) {
                return fail(format!("dropout event references unknown client {id}"));
            }
        }

        let mut warnings = Vec::new();
        let byz = self.attack.byzantine_ids.len();
        if self.attack.kind != AttackKind::None && 2 * byz >= clusters {
            warnings.push(format!(
                "{byz} byzantine clients can poison half or more of {clusters} clusters; cluster-level defenses need a majority of clean clusters"
            ));
        }
        if self.n_clients < 2 * self.cluster_size {
            warnings.push(format!(
                "fewer than two full clusters (n_clients {} < 2 * cluster_size {}); inter-cluster verification is vacuous",
                self.n_clients, self.cluster_size
            ));
        }
        if self.dim > 16 {
            warnings.push(format!(
                "dim {} above desk scale; every coordinate runs its own aggregation sub-round",
                self.dim
            ));
        }
        Ok(warnings)
    }
}

/// One client's regression data.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientData {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

/// Synthetic linear-regression task: targets are `x . w_true` plus Gaussian
/// label noise, features are standard normal.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub true_weights: Vec<f64>,
    pub clients: Vec<ClientData>,
    /// Small held-out server dataset; source of the trusted root update.
    pub server_holdout: ClientData,
}

fn generate_client(dim: usize, samples: usize, noise: f64, w: &[f64], rng: &mut impl Rng) -> ClientData {
    let mut features = Vec::with_capacity(samples);
    let mut targets = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let clean: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
        let eps: f64 = StandardNormal.sample(rng);
        targets.push(clean + noise * eps);
        features.push(x);
    }
    ClientData { features, targets }
}

impl SyntheticTask {
    pub fn generate(
        dim: usize,
        n_clients: usize,
        samples_per_client: usize,
        label_noise: f64,
        seed: u64,
    ) -> Self {
        let mut rng = seeding::derived_rng(seed, &[label::TASK, 0]);
        let true_weights: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let clients = (0..n_clients)
            .map(|i| {
                let mut rng = seeding::derived_rng(seed, &[label::TASK, 1 + i as u64]);
                generate_client(dim, samples_per_client, label_noise, &true_weights, &mut rng)
            })
            .collect();
        let mut server_rng = seeding::derived_rng(seed, &[label::TASK, 1 + n_clients as u64]);
        let server_holdout =
            generate_client(dim, samples_per_client, label_noise, &true_weights, &mut server_rng);
        Self {
            true_weights,
            clients,
            server_holdout,
        }
    }

    /// Mean squared error over all client samples pooled.
    pub fn global_loss(&self, weights: &[f64]) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for client in &self.clients {
            for (x, &y) in client.features.iter().zip(&client.targets) {
                let pred: f64 = x.iter().zip(weights).map(|(a, b)| a * b).sum();
                sum += (pred - y) * (pred - y);
                count += 1;
            }
        }
        sum / count as f64
    }
}

/// Gradient of the mean squared error on one dataset: `(2/n) X^T (Xw - y)`.
pub fn mse_gradient(data: &ClientData, weights: &[f64]) -> Result<Vec<f64>, FlError> {
    if data.features.is_empty() {
        return Err(FlError::EmptyDataset);
    }
    let dim = weights.len();
    let mut grad = vec![0.0; dim];
    for (x, &y) in data.features.iter().zip(&data.targets) {
        let residual: f64 = x.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>() - y;
        for (g, &xi) in grad.iter_mut().zip(x) {
            *g += 2.0 * residual * xi;
        }
    }
    let n = data.features.len() as f64;
    for g in grad.iter_mut() {
        *g /= n;
    }
    Ok(grad)
}

/// One full-batch gradient step: `-learning_rate * grad MSE`.
pub fn local_update(
    data: &ClientData,
    weights: &[f64],
    learning_rate: f64,
) -> Result<Vec<f64>, FlError> {
    let grad = mse_gradient(data, weights)?;
    Ok(grad.iter().map(|g| -learning_rate * g).collect())
}

/// Applies the configured perturbation when `client_id` is Byzantine;
/// honest clients pass through unchanged. `reference_max` is the pre-attack
/// global magnitude bound, the scale an adversary mimics.
pub fn apply_attack<R: Rng>(
    update: &[f64],
    client_id: usize,
    attack: &AttackConfig,
    reference_max: f64,
    rng: &mut R,
) -> Vec<f64> {
    if attack.kind == AttackKind::None || !attack.byzantine_ids.contains(&client_id) {
        return update.to_vec();
    }
    match attack.kind {
        AttackKind::None => unreachable!(),
        AttackKind::SignFlip => update.iter().map(|x| -attack.magnitude * x).collect(),
        AttackKind::ScaledNoise => update
            .iter()
            .map(|_| {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                attack.magnitude * reference_max * sign
            })
            .collect(),
        AttackKind::ConstantDrift => update
            .iter()
            .map(|_| attack.magnitude * reference_max)
            .collect(),
    }
}

/// Cluster-level view published in a round report. `mean_update` is present
/// only for clusters that participated; per-client updates never leave
/// [`run_round`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    pub cluster_index: usize,
    pub member_count: usize,
    pub valid: bool,
    pub mean_update: Option<Vec<f64>>,
}

/// Outcome of one round, at cluster granularity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundReport {
    pub round: u64,
    pub global_loss: f64,
    pub verdict: FilterVerdict,
    pub clusters: Vec<ClusterReport>,
    /// Mean absolute phase-estimation error over (cluster, coordinate); 0 on
    /// the exact channel.
    pub estimation_error_mean: f64,
    pub estimation_error_max: f64,
    pub dropped: Vec<usize>,
    pub round_failed: bool,
    /// The broadcast magnitude bound of the round.
    pub w_max: f64,
}

/// A round's report together with the updated model.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub report: RoundReport,
    pub weights: Vec<f64>,
}

fn channel_noise(config: &ExperimentConfig) -> Result<NoiseModel, FlError> {
    match config.channel {
        ChannelMode::Exact | ChannelMode::ShotNoise => Ok(NoiseModel::ideal()),
        ChannelMode::Noisy => Ok(NoiseModel::new(config.depolarizing_p)?),
    }
}

/// Executes one aggregation round and returns the report plus the next
/// model.
pub fn run_round(
    task: &SyntheticTask,
    weights: &[f64],
    round: u64,
    config: &ExperimentConfig,
) -> Result<RoundOutcome, FlError> {
    let n = config.n_clients;
    let dim = config.dim;

    // Local training step per client.
    let honest: Vec<Vec<f64>> = task
        .clients
        .iter()
        .map(|data| local_update(data, weights, config.learning_rate))
        .collect::<Result<_, _>>()?;

    // Magnitude exchange. Every client declares the magnitude of its honest
    // local update: an adversary that declared its inflated values would
    // advertise itself through the broadcast bound, and one that understated
    // would trip the deterministic encode guard. The interesting adversary
    // blends in and stays inside the declared bound (enforced by the clip at
    // encode time below).
    let declared: Vec<f64> = honest
        .iter()
        .enumerate()
        .map(|(id, u)| local_max(&ModelUpdate::new(id, u.clone())))
        .collect::<Result<_, _>>()?;
    let w_max = global_max(&declared)?;

    let submitted: Vec<Vec<f64>> = honest
        .iter()
        .enumerate()
        .map(|(id, update)| {
            let mut rng = seeding::derived_rng(config.seed, &[label::ATTACK, round, id as u64]);
            apply_attack(update, id, &config.attack, w_max, &mut rng)
        })
        .collect();

    // Partition and dropouts.
    let ids: Vec<usize> = (0..n).collect();
    let mut partition_rng = seeding::derived_rng(config.seed, &[label::PARTITION, round]);
    let assignment = fisher_yates_partition(&ids, config.cluster_size, round, &mut partition_rng)?;
    let dropped: BTreeSet<usize> = config
        .dropout_schedule
        .iter()
        .filter(|e| e.round == round)
        .flat_map(|e| e.client_ids.iter().copied())
        .collect();
    let assignment = apply_dropouts(&assignment, &dropped);

    let mut cluster_reports: Vec<ClusterReport> = assignment
        .clusters
        .iter()
        .enumerate()
        .map(|(index, c)| ClusterReport {
            cluster_index: index,
            member_count: c.members.len(),
            valid: c.valid,
            mean_update: None,
        })
        .collect();
    let dropped_list: Vec<usize> = dropped.iter().copied().collect();

    // All updates provably zero: skip the quantum round, keep the model.
    if w_max == 0.0 {
        let valid: BTreeSet<usize> = assignment.valid_clusters().map(|(i, _)| i).collect();
        let round_failed = valid.is_empty();
        let verdict = FilterVerdict {
            accepted: valid,
            rejected: BTreeSet::new(),
            scores: Default::default(),
            round_failed,
        };
        let report = RoundReport {
            round,
            global_loss: task.global_loss(weights),
            round_failed,
            verdict,
            clusters: cluster_reports,
            estimation_error_mean: 0.0,
            estimation_error_max: 0.0,
            dropped: dropped_list,
            w_max,
        };
        return Ok(RoundOutcome {
            report,
            weights: weights.to_vec(),
        });
    }

    // Per-cluster blind summation, one sub-round per coordinate.
    let noise = channel_noise(config)?;
    let mut aggregates: Vec<ClusterAggregate> = Vec::new();
    let mut estimation_errors: Vec<f64> = Vec::new();
    for (cluster_index, cluster) in assignment.valid_clusters() {
        let size = cluster.members.len();
        let ctx = make_scaling(size, w_max)?;
        let encoded: Vec<Vec<f64>> = cluster
            .members
            .iter()
            .map(|&id| {
                // Guard clip keeps even adversarial submissions inside the
                // declared bound.
                let clipped: Vec<f64> = submitted[id]
                    .iter()
                    .map(|x| x.clamp(-w_max, w_max))
                    .collect();
                encode_update(&ModelUpdate::new(id, clipped), &ctx)
            })
            .collect::<Result<_, _>>()?;

        let mut theta_sum = Vec::with_capacity(dim);
        for c in 0..dim {
            let coord_thetas: Vec<f64> = encoded.iter().map(|t| t[c]).collect();
            let exact: f64 = coord_thetas.iter().sum();
            let estimated = match config.channel {
                ChannelMode::Exact => exact,
                ChannelMode::ShotNoise | ChannelMode::Noisy => {
                    let sub = ProtocolConfig {
                        cluster_size: size,
                        shots: config.shots,
                        noise,
                        seed: seeding::derive_seed(
                            config.seed,
                            &[label::CLUSTER_COORD, round, cluster_index as u64, c as u64],
                        ),
                    };
                    estimate_sum(&coord_thetas, &sub)?.sigma_hat
                }
            };
            estimation_errors.push((estimated - exact).abs());
            theta_sum.push(estimated);
        }
        let weight_sum: Vec<f64> = theta_sum
            .iter()
            .map(|&t| decode_sum(t, &ctx))
            .collect::<Result<_, _>>()?;
        aggregates.push(ClusterAggregate {
            cluster_index,
            theta_sum,
            weight_sum,
            member_count: size,
        });
    }

    if aggregates.is_empty() {
        // Every cluster lost a member; nothing to aggregate this round.
        let verdict = FilterVerdict {
            accepted: BTreeSet::new(),
            rejected: BTreeSet::new(),
            scores: Default::default(),
            round_failed: true,
        };
        let report = RoundReport {
            round,
            global_loss: task.global_loss(weights),
            verdict,
            clusters: cluster_reports,
            estimation_error_mean: 0.0,
            estimation_error_max: 0.0,
            dropped: dropped_list,
            round_failed: true,
            w_max,
        };
        return Ok(RoundOutcome {
            report,
            weights: weights.to_vec(),
        });
    }

    let means: Vec<Vec<f64>> = aggregates.iter().map(normalize_for_comparison).collect();
    let counts: Vec<usize> = aggregates.iter().map(|a| a.member_count).collect();
    for (aggregate, mean) in aggregates.iter().zip(&means) {
        cluster_reports[aggregate.cluster_index].mean_update = Some(mean.clone());
    }

    let root = match config.filter {
        FilterChoice::FlTrust => Some(local_update(
            &task.server_holdout,
            weights,
            config.learning_rate,
        )?),
        _ => None,
    };
    // Too few surviving clusters for the filter (after dropouts) or a
    // degenerate trust root fails the round instead of the experiment.
    let (global_update, verdict) = match apply_filter(&config.filter, &means, &counts, root.as_deref())
    {
        Ok(pair) => pair,
        Err(AggregateError::TooFewAggregates { .. }) | Err(AggregateError::ZeroVector) => (
            vec![0.0; dim],
            FilterVerdict {
                accepted: BTreeSet::new(),
                rejected: (0..means.len()).collect(),
                scores: Default::default(),
                round_failed: true,
            },
        ),
        Err(e) => return Err(e.into()),
    };

    // Re-key the verdict from positions into cluster indices.
    let remap = |set: &BTreeSet<usize>| -> BTreeSet<usize> {
        set.iter().map(|&pos| aggregates[pos].cluster_index).collect()
    };
    let verdict = FilterVerdict {
        accepted: remap(&verdict.accepted),
        rejected: remap(&verdict.rejected),
        scores: verdict.scores,
        round_failed: verdict.round_failed,
    };

    let next_weights: Vec<f64> = if verdict.round_failed {
        weights.to_vec()
    } else {
        weights.iter().zip(&global_update).map(|(w, u)| w + u).collect()
    };

    let (err_mean, err_max) = if estimation_errors.is_empty() {
        (0.0, 0.0)
    } else {
        let sum: f64 = estimation_errors.iter().sum();
        let max = estimation_errors.iter().cloned().fold(0.0f64, f64::max);
        (sum / estimation_errors.len() as f64, max)
    };

    let report = RoundReport {
        round,
        global_loss: task.global_loss(&next_weights),
        round_failed: verdict.round_failed,
        verdict,
        clusters: cluster_reports,
        estimation_error_mean: err_mean,
        estimation_error_max: err_max,
        dropped: dropped_list,
        w_max,
    };
    Ok(RoundOutcome {
        report,
        weights: next_weights,
    })
}

/// Aggregated view of a finished experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rounds: u64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub failed_rounds: Vec<u64>,
    pub seed: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub reports: Vec<RoundReport>,
    pub summary: Summary,
    pub final_weights: Vec<f64>,
}

/// Runs the configured number of rounds from a zero-initialized model.
/// Fully determined by the configuration, including its master seed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, FlError> {
    let warnings = config.validate()?;
    let task = SyntheticTask::generate(
        config.dim,
        config.n_clients,
        config.samples_per_client,
        config.label_noise,
        config.seed,
    );
    let mut weights = vec![0.0; config.dim];
    let initial_loss = task.global_loss(&weights);
    let mut reports = Vec::with_capacity(config.rounds as usize);
    for round in 0..config.rounds {
        let outcome = run_round(&task, &weights, round, config)?;
        weights = outcome.weights;
        reports.push(outcome.report);
    }
    let summary = Summary {
        rounds: config.rounds,
        initial_loss,
        final_loss: reports.last().map(|r| r.global_loss).unwrap_or(initial_loss),
        failed_rounds: reports.iter().filter(|r| r.round_failed).map(|r| r.round).collect(),
        seed: config.seed,
        warnings,
    };
    Ok(ExperimentOutput {
        reports,
        summary,
        final_weights: weights,
    })
}

/// Round log as CSV: `round,loss,accepted_clusters,estimation_error,w_max`,
/// with accepted cluster indices joined by `;`. The broadcast bound is
/// logged per round for audit.
pub fn render_round_csv(reports: &[RoundReport]) -> String {
    let mut out = String::from("round,loss,accepted_clusters,estimation_error,w_max\n");
    for report in reports {
        let accepted: Vec<String> = report.verdict.accepted.iter().map(|i| i.to_string()).collect();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            report.round,
            report.global_loss,
            accepted.join(";"),
            report.estimation_error_mean,
            report.w_max
        ));
    }
    out
}

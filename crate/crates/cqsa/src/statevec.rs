//! Dense state-vector simulation of the small gate set the aggregation
//! circuits need: Hadamard, CNOT, Rz, Pauli injection, trajectory-based
//! depolarizing noise on CNOTs, and computational-basis shot sampling.
//!
//! Qubit 0 is the most significant bit of a basis-state index, so the
//! bitstring `"10"` on two qubits means qubit 0 is 1 and qubit 1 is 0.
//!
//! The Rz convention is `diag(1, e^{i*angle})`: the |0> component of the
//! target qubit is untouched and the |1> component picks up the phase.
//! Noise is realized as stochastic Pauli injection (one trajectory keeps a
//! pure state); density matrices would need 4^n memory and are out of reach
//! at n = 20.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

/// Largest supported register: 2^24 amplitudes of complex doubles.
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("qubit count {0} outside supported range 1..={MAX_QUBITS}")]
    QubitCountOutOfRange(usize),
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("control and target qubits must differ (both {0})")]
    EqualControlTarget(usize),
    #[error("rotation angle must be finite, got {0}")]
    NonFiniteAngle(f64),
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("depolarizing probability {0} outside [0, 1]")]
    InvalidProbability(f64),
}

/// Single-qubit Pauli operators, used as sampled noise realizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliLabel {
    I,
    X,
    Y,
    Z,
}

/// The 15 non-identity two-qubit Pauli pairs, in the fixed order produced by
/// enumerating (first, second) over I, X, Y, Z and dropping (I, I). The
/// categorical draw in [`sample_depolarizing_pair`] indexes this table.
pub const DEPOLARIZING_PAIRS: [(PauliLabel, PauliLabel); 15] = {
    use PauliLabel::*;
    [
        (I, X),
        (I, Y),
        (I, Z),
        (X, I),
        (X, X),
        (X, Y),
        (X, Z),
        (Y, I),
        (Y, X),
        (Y, Y),
        (Y, Z),
        (Z, I),
        (Z, X),
        (Z, Y),
        (Z, Z),
    ]
};

/// Two-qubit depolarizing noise attached to every CNOT; Hadamard and Rz
/// stay ideal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Probability that a CNOT is followed by a uniformly drawn non-identity
    /// Pauli pair on (control, target).
    pub cnot_p: f64,
}

impl NoiseModel {
    pub fn new(cnot_p: f64) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&cnot_p) || cnot_p.is_nan() {
            return Err(SimError::InvalidProbability(cnot_p));
        }
        Ok(Self { cnot_p })
    }

    pub fn ideal() -> Self {
        Self { cnot_p: 0.0 }
    }

    pub fn is_ideal(&self) -> bool {
        self.cnot_p == 0.0
    }
}

/// Samples one realization of the two-qubit depolarizing channel.
///
/// RNG contract: exactly one uniform draw decides whether to inject, and one
/// categorical draw picks the pair when injecting. `p = 0` consumes the
/// decision draw but never injects, so the ideal and noisy gates agree
/// bit-exactly for any seed.
pub fn sample_depolarizing_pair<R: Rng>(p: f64, rng: &mut R) -> Option<(PauliLabel, PauliLabel)> {
    let u: f64 = rng.gen();
    if u < p {
        Some(DEPOLARIZING_PAIRS[rng.gen_range(0..DEPOLARIZING_PAIRS.len())])
    } else {
        None
    }
}

/// An n-qubit register as 2^n complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros state |0...0>.
    pub fn new(num_qubits: usize) -> Result<Self, SimError> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(SimError::QubitCountOutOfRange(num_qubits));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Probability of the computational basis state with the given index.
    pub fn probability(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Index bit carrying the given qubit (qubit 0 = most significant).
    fn mask(&self, qubit: usize) -> Result<usize, SimError> {
        if qubit >= self.num_qubits {
            return Err(SimError::QubitOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(1 << (self.num_qubits - 1 - qubit))
    }

    pub fn apply_h(&mut self, qubit: usize) -> Result<(), SimError> {
        let mask = self.mask(qubit)?;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let a = self.amps[i];
                let b = self.amps[i | mask];
                self.amps[i] = (a + b) * FRAC_1_SQRT_2;
                self.amps[i | mask] = (a - b) * FRAC_1_SQRT_2;
            }
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<(), SimError> {
        if control == target {
            return Err(SimError::EqualControlTarget(control));
        }
        let cmask = self.mask(control)?;
        let tmask = self.mask(target)?;
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amps.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    pub fn apply_rz(&mut self, qubit: usize, angle: f64) -> Result<(), SimError> {
        if !angle.is_finite() {
            return Err(SimError::NonFiniteAngle(angle));
        }
        let mask = self.mask(qubit)?;
        let phase = Complex64::from_polar(1.0, angle);
        for i in 0..self.amps.len() {
            if i & mask != 0 {
                self.amps[i] *= phase;
            }
        }
        Ok(())
    }

    pub fn apply_pauli(&mut self, qubit: usize, pauli: PauliLabel) -> Result<(), SimError> {
        let mask = self.mask(qubit)?;
        match pauli {
            PauliLabel::I => {}
            PauliLabel::X => {
                for i in 0..self.amps.len() {
                    if i & mask == 0 {
                        self.amps.swap(i, i | mask);
                    }
                }
            }
            PauliLabel::Y => {
                // Y|0> = i|1>, Y|1> = -i|0>
                let pos_i = Complex64::new(0.0, 1.0);
                let neg_i = Complex64::new(0.0, -1.0);
                for i in 0..self.amps.len() {
                    if i & mask == 0 {
                        let a = self.amps[i];
                        let b = self.amps[i | mask];
                        self.amps[i | mask] = a * pos_i;
                        self.amps[i] = b * neg_i;
                    }
                }
            }
            PauliLabel::Z => {
                for i in 0..self.amps.len() {
                    if i & mask != 0 {
                        self.amps[i] = -self.amps[i];
                    }
                }
            }
        }
        Ok(())
    }

    /// Ideal CNOT followed by a sampled depolarizing realization on
    /// (control, target). See [`sample_depolarizing_pair`] for the RNG
    /// contract.
    pub fn apply_noisy_cnot<R: Rng>(
        &mut self,
        control: usize,
        target: usize,
        noise: &NoiseModel,
        rng: &mut R,
    ) -> Result<(), SimError> {
        self.apply_cnot(control, target)?;
        if let Some((pc, pt)) = sample_depolarizing_pair(noise.cnot_p, rng) {
            self.apply_pauli(control, pc)?;
            self.apply_pauli(target, pt)?;
        }
        Ok(())
    }

    /// Draws one basis-state index from the |amplitude|^2 distribution.
    ///
    /// Consumes exactly one uniform draw. The final cumulative bin absorbs
    /// rounding slack so the draw always lands.
    pub fn sample_index<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, amp) in self.amps.iter().enumerate() {
            acc += amp.norm_sqr();
            if u < acc {
                return i;
            }
        }
        self.amps.len() - 1
    }

    /// Histogram of independent shots, keyed by bitstring (qubit 0 first).
    pub fn sample_counts<R: Rng>(
        &self,
        shots: u64,
        rng: &mut R,
    ) -> Result<BTreeMap<String, u64>, SimError> {
        if shots == 0 {
            return Err(SimError::ZeroShots);
        }
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            let idx = self.sample_index(rng);
            let key = format!("{:0width$b}", idx, width = self.num_qubits);
            *counts.entry(key).or_insert(0) += 1;
        }
        Ok(counts)
    }

    /// Marginal probability that the given qubit measures 0.
    pub fn prob_qubit_zero(&self, qubit: usize) -> Result<f64, SimError> {
        let mask = self.mask(qubit)?;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::derived_rng;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-10;

    fn assert_close(a: Complex64, b: Complex64) {
        assert!((a - b).norm() < TOL, "expected {b}, got {a}");
    }

    /// A normalized pseudo-random state for algebra tests.
    fn random_state(num_qubits: usize, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = StateVector::new(num_qubits).unwrap();
        for amp in state.amps.iter_mut() {
            let re = rand::Rng::gen::<f64>(&mut rng) - 0.5;
            let im = rand::Rng::gen::<f64>(&mut rng) - 0.5;
            *amp = Complex64::new(re, im);
        }
        let norm = state.norm_sqr().sqrt();
        for amp in state.amps.iter_mut() {
            *amp /= norm;
        }
        state
    }

    #[test]
    fn zero_state_single_qubit() {
        let state = StateVector::new(1).unwrap();
        assert_close(state.amps[0], Complex64::new(1.0, 0.0));
        assert_close(state.amps[1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn zero_state_three_qubits() {
        let state = StateVector::new(3).unwrap();
        assert_eq!(state.amps.len(), 8);
        assert_close(state.amps[0], Complex64::new(1.0, 0.0));
        for i in 1..8 {
            assert_eq!(state.amps[i], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn zero_qubits_rejected() {
        assert_eq!(StateVector::new(0), Err(SimError::QubitCountOutOfRange(0)));
        assert!(StateVector::new(MAX_QUBITS + 1).is_err());
    }

    #[test]
    fn hadamard_on_zero_and_one() {
        let mut plus = StateVector::new(1).unwrap();
        plus.apply_h(0).unwrap();
        assert_close(plus.amps[0], Complex64::new(FRAC_1_SQRT_2, 0.0));
        assert_close(plus.amps[1], Complex64::new(FRAC_1_SQRT_2, 0.0));

        let mut minus = StateVector::new(1).unwrap();
        minus.apply_pauli(0, PauliLabel::X).unwrap();
        minus.apply_h(0).unwrap();
        assert_close(minus.amps[0], Complex64::new(FRAC_1_SQRT_2, 0.0));
        assert_close(minus.amps[1], Complex64::new(-FRAC_1_SQRT_2, 0.0));
    }

    #[test]
    fn hadamard_out_of_range() {
        let mut state = StateVector::new(2).unwrap();
        assert!(matches!(state.apply_h(2), Err(SimError::QubitOutOfRange { .. })));
    }

    #[test]
    fn cnot_truth_table() {
        // |10> (qubit 0 set) -> |11>
        let mut state = StateVector::new(2).unwrap();
        state.apply_pauli(0, PauliLabel::X).unwrap();
        state.apply_cnot(0, 1).unwrap();
        assert_close(state.amps[0b11], Complex64::new(1.0, 0.0));

        // |00> unchanged
        let mut state = StateVector::new(2).unwrap();
        state.apply_cnot(0, 1).unwrap();
        assert_close(state.amps[0b00], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn cnot_bell_preparation() {
        let mut state = StateVector::new(2).unwrap();
        state.apply_h(0).unwrap();
        state.apply_cnot(0, 1).unwrap();
        assert_close(state.amps[0b00], Complex64::new(FRAC_1_SQRT_2, 0.0));
        assert_close(state.amps[0b11], Complex64::new(FRAC_1_SQRT_2, 0.0));
        assert_close(state.amps[0b01], Complex64::new(0.0, 0.0));
        assert_close(state.amps[0b10], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cnot_rejects_bad_indices() {
        let mut state = StateVector::new(2).unwrap();
        assert_eq!(state.apply_cnot(1, 1), Err(SimError::EqualControlTarget(1)));
        assert!(state.apply_cnot(0, 2).is_err());
    }

    #[test]
    fn rz_zero_angle_is_identity() {
        let mut state = random_state(3, 11);
        let before = state.clone();
        state.apply_rz(1, 0.0).unwrap();
        for (a, b) in state.amps.iter().zip(before.amps.iter()) {
            assert_close(*a, *b);
        }
    }

    #[test]
    fn rz_phases_add() {
        let mut a = random_state(2, 5);
        let mut b = a.clone();
        a.apply_rz(1, 0.7).unwrap();
        a.apply_rz(1, -0.3).unwrap();
        b.apply_rz(1, 0.4).unwrap();
        for (x, y) in a.amps.iter().zip(b.amps.iter()) {
            assert_close(*x, *y);
        }
    }

    #[test]
    fn rz_pi_flips_ghz_sign() {
        // GHZ_2 with Rz(pi) on qubit 1 -> (|00> - |11>)/sqrt(2)
        let mut state = StateVector::new(2).unwrap();
        state.apply_h(0).unwrap();
        state.apply_cnot(0, 1).unwrap();
        state.apply_rz(1, std::f64::consts::PI).unwrap();
        assert_close(state.amps[0b00], Complex64::new(FRAC_1_SQRT_2, 0.0));
        assert_close(state.amps[0b11], Complex64::new(-FRAC_1_SQRT_2, 0.0));
    }

    #[test]
    fn rz_rejects_non_finite() {
        let mut state = StateVector::new(1).unwrap();
        assert!(state.apply_rz(0, f64::NAN).is_err());
        assert!(state.apply_rz(0, f64::INFINITY).is_err());
    }

    #[test]
    fn pauli_actions() {
        let mut state = StateVector::new(1).unwrap();
        state.apply_pauli(0, PauliLabel::X).unwrap();
        assert_close(state.amps[1], Complex64::new(1.0, 0.0));

        state.apply_pauli(0, PauliLabel::Z).unwrap();
        assert_close(state.amps[1], Complex64::new(-1.0, 0.0));

        let mut state = random_state(2, 3);
        let before = state.clone();
        state.apply_pauli(1, PauliLabel::Y).unwrap();
        state.apply_pauli(1, PauliLabel::Y).unwrap();
        for (a, b) in state.amps.iter().zip(before.amps.iter()) {
            assert_close(*a, *b);
        }
    }

    #[test]
    fn noiseless_cnot_matches_ideal_for_any_seed() {
        let noise = NoiseModel::ideal();
        for seed in 0..8 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut noisy = random_state(3, 21);
            let mut ideal = noisy.clone();
            noisy.apply_noisy_cnot(0, 2, &noise, &mut rng).unwrap();
            ideal.apply_cnot(0, 2).unwrap();
            assert_eq!(noisy.amps, ideal.amps);
        }
    }

    #[test]
    fn full_noise_pair_frequencies_are_uniform() {
        // p = 1 always injects; check the categorical draw against uniform
        // within 3-sigma multinomial bounds.
        let trials = 15_000usize;
        let mut counts = [0usize; 15];
        for t in 0..trials {
            let mut rng = derived_rng(77, &[t as u64]);
            let pair = sample_depolarizing_pair(1.0, &mut rng).expect("p = 1 must inject");
            let idx = DEPOLARIZING_PAIRS.iter().position(|&q| q == pair).unwrap();
            counts[idx] += 1;
        }
        let expected = trials as f64 / 15.0;
        let sigma = (expected * (1.0 - 1.0 / 15.0)).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expected).abs() <= 3.0 * sigma,
                "pair {i} count {c} outside {expected} +- {:.1}",
                3.0 * sigma
            );
        }
    }

    #[test]
    fn half_noise_injection_rate() {
        let trials = 100_000usize;
        let mut injected = 0usize;
        for t in 0..trials {
            let mut rng = derived_rng(123, &[t as u64]);
            if sample_depolarizing_pair(0.5, &mut rng).is_some() {
                injected += 1;
            }
        }
        let frac = 1.0 - injected as f64 / trials as f64;
        assert!((frac - 0.5).abs() < 0.005, "no-injection fraction {frac}");
    }

    #[test]
    fn noisy_cnot_state_matches_replayed_draws() {
        // The output state must equal ideal CNOT + the Paulis predicted by
        // replaying the documented RNG consumption.
        let noise = NoiseModel::new(0.8).unwrap();
        for seed in 0..32 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut actual = random_state(2, 99);
            actual.apply_noisy_cnot(0, 1, &noise, &mut rng).unwrap();

            let mut replay = ChaCha8Rng::seed_from_u64(seed);
            let mut expected = random_state(2, 99);
            expected.apply_cnot(0, 1).unwrap();
            if let Some((pc, pt)) = sample_depolarizing_pair(noise.cnot_p, &mut replay) {
                expected.apply_pauli(0, pc).unwrap();
                expected.apply_pauli(1, pt).unwrap();
            }
            assert_eq!(actual.amps, expected.amps);
        }
    }

    #[test]
    fn sampling_deterministic_state() {
        let state = StateVector::new(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let counts = state.sample_counts(200, &mut rng).unwrap();
        assert_eq!(counts.get("0"), Some(&200));
        assert_eq!(counts.len(), 1);
    }

    #[test]
    fn sampling_balanced_superposition() {
        let mut state = StateVector::new(1).unwrap();
        state.apply_h(0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let counts = state.sample_counts(100_000, &mut rng).unwrap();
        let zeros = *counts.get("0").unwrap() as f64;
        assert!((zeros / 100_000.0 - 0.5).abs() < 0.005);
    }

    #[test]
    fn sampling_ghz_support() {
        let mut state = StateVector::new(3).unwrap();
        state.apply_h(0).unwrap();
        state.apply_cnot(0, 1).unwrap();
        state.apply_cnot(1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let counts = state.sample_counts(10_000, &mut rng).unwrap();
        let keys: Vec<&str> = counts.keys().map(|s| s.as_str()).collect();
        assert_eq!(keys, vec!["000", "111"]);
    }

    #[test]
    fn sampling_zero_shots_rejected() {
        let state = StateVector::new(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(state.sample_counts(0, &mut rng), Err(SimError::ZeroShots));
    }

    #[test]
    fn trajectories_are_seed_deterministic() {
        let noise = NoiseModel::new(0.3).unwrap();
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut state = StateVector::new(4).unwrap();
            state.apply_h(0).unwrap();
            for q in 0..3 {
                state.apply_noisy_cnot(q, q + 1, &noise, &mut rng).unwrap();
            }
            state.amps
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn depolarizing_average_matches_analytic_channel() {
        // Trajectory-averaged density matrix vs the analytic channel output
        // rho' = (1-p) U rho U^dag + (p/15) sum_P P U rho U^dag P^dag.
        for &p in &[0.1, 0.5] {
            let noise = NoiseModel::new(p).unwrap();
            let input = random_state(2, 2024);

            let mut ideal = input.clone();
            ideal.apply_cnot(0, 1).unwrap();

            let dim = 4;
            let mut analytic = vec![Complex64::new(0.0, 0.0); dim * dim];
            let mut add_outer = |state: &StateVector, weight: f64| {
                for r in 0..dim {
                    for c in 0..dim {
                        analytic[r * dim + c] += state.amps[r] * state.amps[c].conj() * weight;
                    }
                }
            };
            add_outer(&ideal, 1.0 - p);
            for (pc, pt) in DEPOLARIZING_PAIRS {
                let mut state = ideal.clone();
                state.apply_pauli(0, pc).unwrap();
                state.apply_pauli(1, pt).unwrap();
                add_outer(&state, p / 15.0);
            }

            let trajectories = 100_000u64;
            let mut averaged = vec![Complex64::new(0.0, 0.0); dim * dim];
            for t in 0..trajectories {
                let mut rng = derived_rng(918, &[p.to_bits(), t]);
                let mut state = input.clone();
                state.apply_noisy_cnot(0, 1, &noise, &mut rng).unwrap();
                for r in 0..dim {
                    for c in 0..dim {
                        averaged[r * dim + c] += state.amps[r] * state.amps[c].conj();
                    }
                }
            }
            for entry in averaged.iter_mut() {
                *entry /= trajectories as f64;
            }

            for (i, (got, want)) in averaged.iter().zip(analytic.iter()).enumerate() {
                assert!(
                    (got - want).norm() < 0.01,
                    "p={p} entry {i}: got {got}, want {want}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn gates_preserve_norm(seed in 0u64..500, qubits in 1usize..5) {
            let mut state = random_state(qubits, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let noise = NoiseModel::new(0.4).unwrap();
            state.apply_h(seed as usize % qubits).unwrap();
            state.apply_rz(seed as usize % qubits, 1.234).unwrap();
            state.apply_pauli((seed as usize + 1) % qubits, PauliLabel::Y).unwrap();
            if qubits >= 2 {
                state.apply_noisy_cnot(0, qubits - 1, &noise, &mut rng).unwrap();
            }
            prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn hadamard_is_involution(seed in 0u64..200, qubits in 1usize..5) {
            let mut state = random_state(qubits, seed);
            let before = state.clone();
            let q = seed as usize % qubits;
            state.apply_h(q).unwrap();
            state.apply_h(q).unwrap();
            for (a, b) in state.amps.iter().zip(before.amps.iter()) {
                prop_assert!((a - b).norm() < 1e-10);
            }
        }

        #[test]
        fn cnot_is_involution(seed in 0u64..200, qubits in 2usize..5) {
            let mut state = random_state(qubits, seed);
            let before = state.clone();
            let c = seed as usize % qubits;
            let t = (c + 1) % qubits;
            state.apply_cnot(c, t).unwrap();
            state.apply_cnot(c, t).unwrap();
            for (a, b) in state.amps.iter().zip(before.amps.iter()) {
                prop_assert!((a - b).norm() < 1e-10);
            }
        }

        #[test]
        fn rz_inverse_cancels(seed in 0u64..200, angle in -3.0f64..3.0) {
            let mut state = random_state(2, seed);
            let before = state.clone();
            state.apply_rz(1, angle).unwrap();
            state.apply_rz(1, -angle).unwrap();
            for (a, b) in state.amps.iter().zip(before.amps.iter()) {
                prop_assert!((a - b).norm() < 1e-10);
            }
        }
    }
}

//! Random-phase state ensembles.
//!
//! All ensembles start from `|+>` and apply a random diagonal unitary:
//!
//! * `FullPhase`: an independent phase `e^{i theta_b}` on every basis state
//!   (`2^N` angles).
//! * `ProductPhase`: `prod_k R_Z(theta_k)` (`N` angles).
//! * `EntangledPhase`: the product layer followed by all `N(N-1)/2` gates
//!   `exp(-i theta Z_i Z_j)` (`N(N+1)/2` angles).
//! * `DiscreteProductPhase(l)`: the product layer with angles on the grid
//!   `2 pi m / l`.
//!
//! Angles come from a ChaCha20 stream keyed by the 64-bit seed only, so a
//! state is a pure function of its spec.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::state::{StateVector, DEFAULT_MAX_QUBITS};
use crate::{Error, Result};

/// Upper bound on `l^N` for brute-force enumeration of the discrete ensemble.
pub const MAX_DISCRETE_ENSEMBLE: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnsembleKind {
    FullPhase,
    ProductPhase,
    EntangledPhase,
    DiscreteProductPhase { levels: u32 },
}

impl EnsembleKind {
    /// Number of random angles `N_v` for an `n_qubits` chain.
    pub fn angle_count(&self, n_qubits: usize) -> usize {
        match self {
            EnsembleKind::FullPhase => 1usize << n_qubits,
            EnsembleKind::ProductPhase | EnsembleKind::DiscreteProductPhase { .. } => n_qubits,
            EnsembleKind::EntangledPhase => n_qubits * (n_qubits + 1) / 2,
        }
    }

    /// Whether the kind has a polynomial-size gate decomposition.
    pub fn is_circuit(&self) -> bool {
        !matches!(self, EnsembleKind::FullPhase)
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnsembleKind::FullPhase => f.write_str("full"),
            EnsembleKind::ProductPhase => f.write_str("product"),
            EnsembleKind::EntangledPhase => f.write_str("entangled"),
            EnsembleKind::DiscreteProductPhase { levels } => write!(f, "discrete:{levels}"),
        }
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "full" | "full-phase" | "fullphase" => return Ok(EnsembleKind::FullPhase),
            "product" | "product-phase" | "productphase" => return Ok(EnsembleKind::ProductPhase),
            "entangled" | "entangled-phase" | "entangledphase" => {
                return Ok(EnsembleKind::EntangledPhase)
            }
            _ => {}
        }
        if let Some(l) = s.strip_prefix("discrete:") {
            let levels: u32 = l
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad level count in '{s}'")))?;
            if levels < 2 {
                return Err(Error::InvalidParameter("discrete ensemble needs at least 2 levels".into()));
            }
            return Ok(EnsembleKind::DiscreteProductPhase { levels });
        }
        Err(Error::InvalidParameter(format!("unknown ensemble kind '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RandomStateSpec {
    pub kind: EnsembleKind,
    pub n_qubits: usize,
    pub seed: u64,
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sample `r` derived from `base_seed`; independent of execution order.
pub fn sample_seed(base_seed: u64, r: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ r.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))
}

fn angle_stream(seed: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(GOLDEN_GAMMA);
        chunk.copy_from_slice(&splitmix64(state).to_le_bytes());
    }
    ChaCha20Rng::from_seed(key)
}

#[inline]
fn unit_interval(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl RandomStateSpec {
    pub fn new(kind: EnsembleKind, n_qubits: usize, seed: u64) -> Self {
        Self { kind, n_qubits, seed }
    }

    /// Spec of sample `r` in a run seeded with `base_seed`.
    pub fn for_sample(kind: EnsembleKind, n_qubits: usize, base_seed: u64, r: u64) -> Self {
        Self::new(kind, n_qubits, sample_seed(base_seed, r))
    }

    pub fn angle_count(&self) -> usize {
        self.kind.angle_count(self.n_qubits)
    }

    fn validate(&self, cap: usize) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::InvalidParameter("random state needs at least one qubit".into()));
        }
        if self.n_qubits > cap {
            return Err(Error::Capacity {
                what: "random state",
                requested: self.n_qubits,
                cap,
            });
        }
        if let EnsembleKind::DiscreteProductPhase { levels } = self.kind {
            if levels < 2 {
                return Err(Error::InvalidParameter("discrete ensemble needs at least 2 levels".into()));
            }
        }
        Ok(())
    }

    /// Deterministic angles in radians, laid out as documented on
    /// [`EntangledPhase`](EnsembleKind::EntangledPhase): the `N` single-qubit
    /// angles first, then `k(i, j) = N + i(i-1)/2 + j` for `i > j`.
    pub fn draw_angles(&self) -> Result<Vec<f64>> {
        self.draw_angles_with_cap(DEFAULT_MAX_QUBITS)
    }

    pub fn draw_angles_with_cap(&self, cap: usize) -> Result<Vec<f64>> {
        self.validate(cap)?;
        let mut rng = angle_stream(self.seed);
        let count = self.angle_count();
        let angles = match self.kind {
            EnsembleKind::DiscreteProductPhase { levels } => (0..count)
                .map(|_| {
                    let m = ((rng.next_u64() as u128 * levels as u128) >> 64) as u64;
                    TAU * m as f64 / levels as f64
                })
                .collect(),
            _ => (0..count).map(|_| TAU * unit_interval(&mut rng)).collect(),
        };
        Ok(angles)
    }

    pub fn prepare(&self) -> Result<StateVector> {
        self.prepare_with_cap(DEFAULT_MAX_QUBITS)
    }

    pub fn prepare_with_cap(&self, cap: usize) -> Result<StateVector> {
        let angles = self.draw_angles_with_cap(cap)?;
        prepare_from_angles(self.kind, self.n_qubits, &angles)
    }
}

/// `prepare_random_state`: `|+>` followed by the kind's diagonal unitary.
pub fn prepare_random_state(spec: &RandomStateSpec) -> Result<StateVector> {
    spec.prepare()
}

/// Applies the kind's diagonal unitary with explicit angles to `|+>`.
pub fn prepare_from_angles(kind: EnsembleKind, n_qubits: usize, angles: &[f64]) -> Result<StateVector> {
    let expected = kind.angle_count(n_qubits);
    if angles.len() != expected {
        return Err(Error::InvalidParameter(format!(
            "{kind} on {n_qubits} qubits needs {expected} angles, got {}",
            angles.len()
        )));
    }
    let mut state = StateVector::plus(n_qubits)?;
    match kind {
        EnsembleKind::FullPhase => {
            for (a, &theta) in state.amplitudes_mut().iter_mut().zip(angles) {
                *a *= Complex64::from_polar(1.0, theta);
            }
        }
        EnsembleKind::ProductPhase | EnsembleKind::DiscreteProductPhase { .. } => {
            apply_product_layer(&mut state, angles)?;
        }
        EnsembleKind::EntangledPhase => {
            apply_product_layer(&mut state, &angles[..n_qubits])?;
            for (i, j, k) in pair_labels(n_qubits) {
                state.apply_zz(i, j, angles[k])?;
            }
        }
    }
    Ok(state)
}

fn apply_product_layer(state: &mut StateVector, angles: &[f64]) -> Result<()> {
    for (q, &theta) in angles.iter().enumerate() {
        state.apply_rz(q, theta)?;
    }
    Ok(())
}

/// `(i, j, k)` for every pair `i > j`, with angle label `k` running from `N`
/// to `N(N+1)/2 - 1` in row-major order.
pub fn pair_labels(n_qubits: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n_qubits)
        .flat_map(move |i| (0..i).map(move |j| (i, j, n_qubits + i * (i - 1) / 2 + j)))
}

/// Every product-phase state with angles on the `l`-point grid, each exactly once.
pub fn enumerate_discrete_ensemble(n_qubits: usize, levels: u32) -> Result<DiscreteEnsemble> {
    if levels < 2 {
        return Err(Error::InvalidParameter("discrete ensemble needs at least 2 levels".into()));
    }
    if n_qubits == 0 {
        return Err(Error::InvalidParameter("discrete ensemble needs at least one qubit".into()));
    }
    let total = (levels as u64)
        .checked_pow(n_qubits as u32)
        .filter(|&t| t <= MAX_DISCRETE_ENSEMBLE)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{levels}^{n_qubits} states exceed the enumeration cap {MAX_DISCRETE_ENSEMBLE}"
            ))
        })?;
    Ok(DiscreteEnsemble {
        n_qubits,
        levels,
        next: 0,
        total,
    })
}

#[derive(Clone, Debug)]
pub struct DiscreteEnsemble {
    n_qubits: usize,
    levels: u32,
    next: u64,
    total: u64,
}

impl DiscreteEnsemble {
    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

impl Iterator for DiscreteEnsemble {
    type Item = StateVector;

    fn next(&mut self) -> Option<StateVector> {
        if self.next >= self.total {
            return None;
        }
        let mut code = self.next;
        self.next += 1;
        let l = self.levels as u64;
        let angles: Vec<f64> = (0..self.n_qubits)
            .map(|_| {
                let m = code % l;
                code /= l;
                TAU * m as f64 / l as f64
            })
            .collect();
        let kind = EnsembleKind::DiscreteProductPhase { levels: self.levels };
        // inputs were validated when the ensemble was built
        Some(prepare_from_angles(kind, self.n_qubits, &angles).expect("valid discrete angles"))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next) as usize;
        (left, Some(left))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn angle_counts() {
        let spec = RandomStateSpec::new(EnsembleKind::EntangledPhase, 24, 7);
        assert_eq!(spec.angle_count(), 300);
        assert_eq!(RandomStateSpec::new(EnsembleKind::FullPhase, 3, 7).draw_angles().unwrap().len(), 8);
        let d = EnsembleKind::DiscreteProductPhase { levels: 3 };
        assert_eq!(d.angle_count(5), 5);
    }

    #[test]
    fn draws_are_deterministic_and_in_range() {
        for kind in [
            EnsembleKind::FullPhase,
            EnsembleKind::ProductPhase,
            EnsembleKind::EntangledPhase,
            EnsembleKind::DiscreteProductPhase { levels: 4 },
        ] {
            let spec = RandomStateSpec::new(kind, 6, 0xdead_beef);
            let a = spec.draw_angles().unwrap();
            assert_eq!(a, spec.draw_angles().unwrap());
            assert!(a.iter().all(|&t| (0.0..TAU).contains(&t)));
            let other = RandomStateSpec::new(kind, 6, 0xdead_bef0).draw_angles().unwrap();
            assert_ne!(a, other);
        }
    }

    #[test]
    fn discrete_angles_sit_on_grid() {
        let spec = RandomStateSpec::new(EnsembleKind::DiscreteProductPhase { levels: 3 }, 10, 1);
        for t in spec.draw_angles().unwrap() {
            let m = t * 3.0 / TAU;
            assert!((m - m.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn full_phase_over_cap_rejected() {
        let spec = RandomStateSpec::new(EnsembleKind::FullPhase, 30, 1);
        assert!(matches!(spec.draw_angles(), Err(Error::Capacity { .. })));
        assert!(spec.prepare_with_cap(20).is_err());
    }

    #[test]
    fn zero_product_angles_give_plus() {
        let s = prepare_from_angles(EnsembleKind::ProductPhase, 3, &[0.0; 3]).unwrap();
        assert_eq!(s, StateVector::plus(3).unwrap());
    }

    #[test]
    fn full_phase_with_explicit_angles() {
        let s = prepare_from_angles(EnsembleKind::FullPhase, 2, &[0.0, PI / 2.0, PI, 1.5 * PI]).unwrap();
        let want = [
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.5),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, -0.5),
        ];
        for (a, w) in s.amplitudes().iter().zip(want) {
            assert!(close(*a, w));
        }
    }

    #[test]
    fn prepared_states_are_normalized() {
        for kind in [
            EnsembleKind::FullPhase,
            EnsembleKind::ProductPhase,
            EnsembleKind::EntangledPhase,
            EnsembleKind::DiscreteProductPhase { levels: 2 },
        ] {
            for seed in 0..5 {
                let s = RandomStateSpec::new(kind, 7, seed).prepare().unwrap();
                assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pair_label_layout() {
        let labels: Vec<_> = pair_labels(4).collect();
        assert_eq!(
            labels,
            vec![(1, 0, 4), (2, 0, 5), (2, 1, 6), (3, 0, 7), (3, 1, 8), (3, 2, 9)]
        );
    }

    #[test]
    fn discrete_enumeration_counts_and_phases() {
        assert_eq!(enumerate_discrete_ensemble(2, 2).unwrap().count(), 4);
        assert!(enumerate_discrete_ensemble(21, 2).is_err());
        assert!(enumerate_discrete_ensemble(3, 1).is_err());

        let states: Vec<_> = enumerate_discrete_ensemble(1, 3).unwrap().collect();
        assert_eq!(states.len(), 3);
        for (m, s) in states.iter().enumerate() {
            let rel = s.amplitudes()[1] / s.amplitudes()[0];
            assert!(close(rel, Complex64::from_polar(1.0, TAU * m as f64 / 3.0)));
        }
    }

    #[test]
    fn sample_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|r| sample_seed(42, r)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(sample_seed(1, 0), sample_seed(2, 0));
    }

    #[test]
    fn kind_round_trips_through_text() {
        for kind in [
            EnsembleKind::FullPhase,
            EnsembleKind::ProductPhase,
            EnsembleKind::EntangledPhase,
            EnsembleKind::DiscreteProductPhase { levels: 5 },
        ] {
            assert_eq!(kind.to_string().parse::<EnsembleKind>().unwrap(), kind);
        }
        assert!("haar".parse::<EnsembleKind>().is_err());
        assert!("discrete:1".parse::<EnsembleKind>().is_err());
    }
}

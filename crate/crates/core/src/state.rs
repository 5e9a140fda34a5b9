//! Dense state vectors and the matrix-free kernels acting on them.
//!
//! Amplitude `b` belongs to the computational-basis state whose bit `k` is
//! the Z eigenvalue label of qubit `k` (little-endian). With this layout the
//! SWAP operator `P_ij` is a pure permutation of indices.

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::model::SpinChainModel;
use crate::{Error, Result};

/// Default cap on the number of qubits a state may hold (2^28 amplitudes, 4 GiB).
pub const DEFAULT_MAX_QUBITS: usize = 28;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

fn check_size(what: &'static str, n_qubits: usize, cap: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::InvalidParameter(format!("{what}: at least one qubit required")));
    }
    if n_qubits > cap {
        return Err(Error::Capacity { what, requested: n_qubits, cap });
    }
    Ok(())
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::zero_with_cap(n_qubits, DEFAULT_MAX_QUBITS)
    }

    pub fn zero_with_cap(n_qubits: usize, cap: usize) -> Result<Self> {
        Self::basis_with_cap(n_qubits, 0, cap)
    }

    /// Computational-basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        Self::basis_with_cap(n_qubits, index, DEFAULT_MAX_QUBITS)
    }

    fn basis_with_cap(n_qubits: usize, index: usize, cap: usize) -> Result<Self> {
        check_size("state vector", n_qubits, cap)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// `|+> = H^{(x)N} |0>^{(x)N}`: every amplitude equals `2^{-N/2}`.
    pub fn plus(n_qubits: usize) -> Result<Self> {
        Self::plus_with_cap(n_qubits, DEFAULT_MAX_QUBITS)
    }

    pub fn plus_with_cap(n_qubits: usize, cap: usize) -> Result<Self> {
        check_size("state vector", n_qubits, cap)?;
        let dim = 1usize << n_qubits;
        let a = (dim as f64).sqrt().recip();
        Ok(Self {
            n_qubits,
            amps: vec![Complex64::new(a, 0.0); dim],
        })
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_size("state vector", n_qubits, DEFAULT_MAX_QUBITS)?;
        if amps.len() != 1usize << n_qubits {
            return Err(Error::InvalidParameter(format!(
                "{} amplitudes do not match {} qubits",
                amps.len(),
                n_qubits
            )));
        }
        Ok(Self { n_qubits, amps })
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    #[inline]
    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_same_size(&self, other_qubits: usize) -> Result<()> {
        if self.n_qubits != other_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: other_qubits,
            });
        }
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::QubitIndex { index: q, n_qubits: self.n_qubits });
        }
        Ok(())
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        self.check_qubit(i)?;
        self.check_qubit(j)?;
        if i == j {
            return Err(Error::DuplicateQubit(i));
        }
        Ok(())
    }

    /// `<self|other> = sum_b conj(self_b) other_b`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same_size(other.n_qubits)?;
        Ok(inner_unchecked(&self.amps, &other.amps))
    }

    /// Hadamard gate on qubit `q`.
    pub fn apply_hadamard(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let mask = 1usize << q;
        for b in 0..self.amps.len() {
            if b & mask == 0 {
                let a0 = self.amps[b];
                let a1 = self.amps[b | mask];
                self.amps[b] = (a0 + a1) * FRAC_1_SQRT_2;
                self.amps[b | mask] = (a0 - a1) * FRAC_1_SQRT_2;
            }
        }
        Ok(())
    }

    /// `R_Z(theta) = exp(-i theta Z_q / 2)`.
    pub fn apply_rz(&mut self, q: usize, theta: f64) -> Result<()> {
        self.check_qubit(q)?;
        let mask = 1usize << q;
        let up = Complex64::from_polar(1.0, -0.5 * theta);
        let down = up.conj();
        for (b, a) in self.amps.iter_mut().enumerate() {
            *a *= if b & mask == 0 { up } else { down };
        }
        Ok(())
    }

    /// `exp(-i theta Z_i Z_j)`. No factor 1/2, matching the entangling layer
    /// of the random-phase circuit.
    pub fn apply_zz(&mut self, i: usize, j: usize, theta: f64) -> Result<()> {
        self.check_pair(i, j)?;
        let even = Complex64::from_polar(1.0, -theta);
        let odd = even.conj();
        for (b, a) in self.amps.iter_mut().enumerate() {
            let parity = ((b >> i) ^ (b >> j)) & 1;
            *a *= if parity == 0 { even } else { odd };
        }
        Ok(())
    }

    /// Diagonal phase on one qubit (`R_Z`) or two qubits (`exp(-i theta ZZ)`).
    pub fn apply_phase_diag(&mut self, support: &[usize], theta: f64) -> Result<()> {
        match *support {
            [q] => self.apply_rz(q, theta),
            [i, j] => self.apply_zz(i, j, theta),
            _ => Err(Error::InvalidParameter(format!(
                "phase gate support must hold one or two qubits, got {}",
                support.len()
            ))),
        }
    }

    /// `exp(-i theta P_ij / 2) = cos(theta/2) - i sin(theta/2) P_ij`.
    pub fn apply_exp_swap(&mut self, i: usize, j: usize, theta: f64) -> Result<()> {
        self.check_pair(i, j)?;
        let (s, c) = (0.5 * theta).sin_cos();
        exp_swap_unchecked(&mut self.amps, i, j, c, s);
        Ok(())
    }

    /// Returns `J sum_<ij> P_ij |self>` as a fresh state.
    pub fn apply_hamiltonian(&self, model: &SpinChainModel) -> Result<StateVector> {
        self.check_same_size(model.n_qubits())?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        hamiltonian_into(&self.amps, model, &mut out);
        Ok(StateVector { n_qubits: self.n_qubits, amps: out })
    }

    /// Scales all amplitudes in place.
    pub fn scale(&mut self, factor: Complex64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }
}

#[inline]
pub(crate) fn inner_unchecked(bra: &[Complex64], ket: &[Complex64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in bra.iter().zip(ket) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

#[inline]
pub(crate) fn exp_swap_unchecked(amps: &mut [Complex64], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let lo_mask = 1usize << lo;
    let hi_mask = 1usize << hi;
    let diag = Complex64::new(c, -s);
    for b in 0..amps.len() {
        match (b & lo_mask != 0, b & hi_mask != 0) {
            (false, false) | (true, true) => amps[b] *= diag,
            // visit each swapped pair once, from the member with the low bit set
            (true, false) => {
                let p = b ^ lo_mask ^ hi_mask;
                let x = amps[b];
                let y = amps[p];
                amps[b] = Complex64::new(c * x.re + s * y.im, c * x.im - s * y.re);
                amps[p] = Complex64::new(c * y.re + s * x.im, c * y.im - s * x.re);
            }
            (false, true) => {}
        }
    }
}

pub(crate) fn hamiltonian_into(psi: &[Complex64], model: &SpinChainModel, out: &mut [Complex64]) {
    let coupling = model.coupling();
    for a in out.iter_mut() {
        *a = Complex64::new(0.0, 0.0);
    }
    for &(i, j) in model.bonds() {
        let mask = (1usize << i) | (1usize << j);
        for (b, o) in out.iter_mut().enumerate() {
            let differ = ((b >> i) ^ (b >> j)) & 1;
            let src = if differ == 1 { b ^ mask } else { b };
            *o += psi[src];
        }
    }
    for o in out.iter_mut() {
        *o *= coupling;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Boundary;
    use std::f64::consts::PI;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn plus_state_amplitudes() {
        let s = StateVector::plus(1).unwrap();
        for a in s.amplitudes() {
            assert!((a.re - 0.5f64.sqrt()).abs() < 1e-15 && a.im == 0.0);
        }
        let s = StateVector::plus(2).unwrap();
        assert!(s.amplitudes().iter().all(|a| *a == Complex64::new(0.5, 0.0)));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn plus_state_respects_cap() {
        assert!(matches!(
            StateVector::plus_with_cap(30, 28),
            Err(Error::Capacity { requested: 30, cap: 28, .. })
        ));
        assert!(StateVector::plus(0).is_err());
    }

    #[test]
    fn phase_zero_is_identity() {
        let mut s = StateVector::plus(3).unwrap();
        s.apply_rz(1, 0.7).unwrap();
        let before = s.clone();
        s.apply_phase_diag(&[2], 0.0).unwrap();
        s.apply_phase_diag(&[0, 2], 0.0).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn rz_full_period_is_minus_one() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply_rz(0, 2.0 * PI).unwrap();
        assert!(close(s.amplitudes()[0], Complex64::new(-1.0, 0.0), 1e-15));
    }

    #[test]
    fn zz_on_odd_parity_state() {
        // |01>: qubit 0 set, qubit 1 clear
        let mut s = StateVector::basis(2, 0b01).unwrap();
        s.apply_zz(0, 1, PI / 2.0).unwrap();
        assert!(close(s.amplitudes()[0b01], Complex64::new(0.0, 1.0), 1e-15));
    }

    #[test]
    fn zz_matches_diagonal_enumeration() {
        let theta = 0.37;
        let mut s = StateVector::plus(2).unwrap();
        s.apply_zz(0, 1, theta).unwrap();
        for b in 0..4usize {
            let z0 = if b & 1 == 0 { 1.0 } else { -1.0 };
            let z1 = if b & 2 == 0 { 1.0 } else { -1.0 };
            let want = Complex64::from_polar(0.5, -theta * z0 * z1);
            assert!(close(s.amplitudes()[b], want, 1e-15));
        }
    }

    #[test]
    fn exp_swap_special_angles() {
        let mut s = StateVector::basis(2, 0b01).unwrap();
        s.apply_exp_swap(0, 1, PI).unwrap();
        assert!(close(s.amplitudes()[0b10], Complex64::new(0.0, -1.0), 1e-15));
        assert!(s.amplitudes()[0b01].norm() < 1e-15);

        let mut s = StateVector::plus(3).unwrap();
        s.apply_rz(0, 0.3).unwrap();
        s.apply_zz(1, 2, 1.1).unwrap();
        let before = s.clone();
        s.apply_exp_swap(2, 0, 2.0 * PI).unwrap();
        for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
            assert!(close(*a, -*b, 1e-14));
        }
        let mut t = before.clone();
        t.apply_exp_swap(1, 2, 0.0).unwrap();
        assert_eq!(t, before);
    }

    #[test]
    fn gate_index_errors() {
        let mut s = StateVector::plus(2).unwrap();
        assert!(matches!(s.apply_rz(2, 0.1), Err(Error::QubitIndex { index: 2, .. })));
        assert!(matches!(s.apply_exp_swap(1, 1, 0.1), Err(Error::DuplicateQubit(1))));
        assert!(s.apply_zz(0, 5, 0.1).is_err());
        assert!(s.apply_phase_diag(&[0, 1, 0], 0.1).is_err());
    }

    #[test]
    fn hamiltonian_on_two_site_chain() {
        let m = SpinChainModel::new(2, 1.5, Boundary::Open).unwrap();
        let h = StateVector::basis(2, 0b01).unwrap().apply_hamiltonian(&m).unwrap();
        assert!(close(h.amplitudes()[0b10], Complex64::new(1.5, 0.0), 1e-15));
        assert!(h.amplitudes()[0b01].norm() < 1e-15);
        let h = StateVector::basis(2, 0).unwrap().apply_hamiltonian(&m).unwrap();
        assert!(close(h.amplitudes()[0], Complex64::new(1.5, 0.0), 1e-15));
    }

    #[test]
    fn hamiltonian_dimension_mismatch() {
        let m = SpinChainModel::new(4, 1.0, Boundary::Periodic).unwrap();
        assert!(matches!(
            StateVector::plus(3).unwrap().apply_hamiltonian(&m),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn inner_product_basics() {
        let p = StateVector::plus(3).unwrap();
        assert!(close(p.inner(&p).unwrap(), Complex64::new(1.0, 0.0), 1e-15));
        let a = StateVector::basis(2, 0b01).unwrap();
        let b = StateVector::basis(2, 0b10).unwrap();
        assert_eq!(a.inner(&b).unwrap(), Complex64::new(0.0, 0.0));
        assert!(a.inner(&p).is_err());
    }

    #[test]
    fn hadamard_builds_plus() {
        let mut s = StateVector::zero(3).unwrap();
        for q in 0..3 {
            s.apply_hadamard(q).unwrap();
        }
        let p = StateVector::plus(3).unwrap();
        for (a, b) in s.amplitudes().iter().zip(p.amplitudes()) {
            assert!(close(*a, *b, 1e-15));
        }
    }
}

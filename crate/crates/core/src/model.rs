//! The spin-1/2 Heisenberg chain `H = J sum_<ij> P_ij` and its split into two
//! commuting Trotter layers.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    Open,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::Open => "open",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "periodic" | "pbc" => Ok(Boundary::Periodic),
            "open" | "obc" => Ok(Boundary::Open),
            other => Err(Error::InvalidParameter(format!("unknown boundary '{other}'"))),
        }
    }
}

pub type Bond = (usize, usize);

#[derive(Clone, Debug, PartialEq)]
pub struct SpinChainModel {
    n_qubits: usize,
    coupling: f64,
    boundary: Boundary,
    bonds: Vec<Bond>,
    // layer A: bonds whose left site is even; layer B: the rest
    odd_bonds: Vec<Bond>,
    even_bonds: Vec<Bond>,
}

impl SpinChainModel {
    /// Nearest-neighbour chain with bonds `(i, i+1 mod N)`.
    pub fn new(n_qubits: usize, coupling: f64, boundary: Boundary) -> Result<Self> {
        if n_qubits < 2 || !n_qubits.is_multiple_of(2) {
            return Err(Error::InvalidModel(format!(
                "chain length must be even and at least 2, got {n_qubits}"
            )));
        }
        if !(coupling > 0.0) || !coupling.is_finite() {
            return Err(Error::InvalidModel(format!("coupling J must be positive, got {coupling}")));
        }
        let n_bonds = match boundary {
            Boundary::Periodic => n_qubits,
            Boundary::Open => n_qubits - 1,
        };
        let bonds: Vec<Bond> = (0..n_bonds).map(|i| (i, (i + 1) % n_qubits)).collect();
        let (odd_bonds, even_bonds) = bonds.iter().partition(|(i, _)| i % 2 == 0);
        Ok(Self {
            n_qubits,
            coupling,
            boundary,
            bonds,
            odd_bonds,
            even_bonds,
        })
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    #[inline]
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn n_bonds(&self) -> usize {
        self.bonds.len()
    }

    /// First Trotter layer `H_A`.
    pub fn odd_bonds(&self) -> &[Bond] {
        &self.odd_bonds
    }

    /// Second Trotter layer `H_B`.
    pub fn even_bonds(&self) -> &[Bond] {
        &self.even_bonds
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    /// `Tr[H] / D = J N_bond / 2`, since `Tr[P_ij] = D/2`.
    pub fn trace_h_over_d(&self) -> f64 {
        0.5 * self.coupling * self.n_bonds() as f64
    }
}

impl fmt::Display for SpinChainModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "heisenberg n={} j={:?} boundary={}",
            self.n_qubits, self.coupling, self.boundary
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_four_site_layers() {
        let m = SpinChainModel::new(4, 1.0, Boundary::Periodic).unwrap();
        assert_eq!(m.bonds(), &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(m.odd_bonds(), &[(0, 1), (2, 3)]);
        assert_eq!(m.even_bonds(), &[(1, 2), (3, 0)]);
    }

    #[test]
    fn open_two_site_chain() {
        let m = SpinChainModel::new(2, 1.0, Boundary::Open).unwrap();
        assert_eq!(m.bonds(), &[(0, 1)]);
        assert!((m.trace_h_over_d() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SpinChainModel::new(5, 1.0, Boundary::Periodic).is_err());
        assert!(SpinChainModel::new(0, 1.0, Boundary::Periodic).is_err());
        assert!(SpinChainModel::new(4, 0.0, Boundary::Periodic).is_err());
        assert!(SpinChainModel::new(4, -1.0, Boundary::Open).is_err());
        assert!(SpinChainModel::new(4, f64::NAN, Boundary::Open).is_err());
    }

    #[test]
    fn trace_over_dimension_for_24_sites() {
        let m = SpinChainModel::new(24, 1.0, Boundary::Periodic).unwrap();
        assert_eq!(m.trace_h_over_d(), 12.0);
    }

    #[test]
    fn layers_partition_bonds_without_shared_sites() {
        for n in (2..=28).step_by(2) {
            for boundary in [Boundary::Periodic, Boundary::Open] {
                let m = SpinChainModel::new(n, 1.0, boundary).unwrap();
                let expected = if boundary == Boundary::Periodic { n } else { n - 1 };
                assert_eq!(m.n_bonds(), expected);
                assert_eq!(m.odd_bonds().len() + m.even_bonds().len(), m.n_bonds());
                for layer in [m.odd_bonds(), m.even_bonds()] {
                    let mut seen = vec![false; n];
                    for &(i, j) in layer {
                        // n = 2 periodic has both bonds on the same pair, one per layer
                        assert!(!seen[i] && !seen[j], "n={n} {boundary}");
                        seen[i] = true;
                        seen[j] = true;
                    }
                }
            }
        }
    }

    #[test]
    fn boundary_parse() {
        assert_eq!("Periodic".parse::<Boundary>().unwrap(), Boundary::Periodic);
        assert_eq!("open".parse::<Boundary>().unwrap(), Boundary::Open);
        assert!("twisted".parse::<Boundary>().is_err());
    }
}

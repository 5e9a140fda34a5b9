//! Gate-list export of the state-preparation and Trotter circuit.
//!
//! One gate per line:
//!
//! ```text
//! h <q>
//! rz <q> <theta>
//! zz <q1> <q2> <theta>
//! eswap <q1> <q2> <theta>
//! ```
//!
//! with `rz(theta) = exp(-i theta Z/2)`, `zz(theta) = exp(-i theta Z Z)` and
//! `eswap(theta) = exp(-i theta P/2)`. Lines starting with `#` are metadata.

use std::fmt;
use std::io::{BufRead, Write};

use crate::evolve::TrotterPlan;
use crate::model::SpinChainModel;
use crate::random::{pair_labels, EnsembleKind, RandomStateSpec};
use crate::state::StateVector;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    Rz(usize, f64),
    Zz(usize, usize, f64),
    ExpSwap(usize, usize, f64),
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // 17 significant digits round-trip every f64
        match *self {
            Gate::H(q) => write!(f, "h {q}"),
            Gate::Rz(q, t) => write!(f, "rz {q} {t:.16e}"),
            Gate::Zz(a, b, t) => write!(f, "zz {a} {b} {t:.16e}"),
            Gate::ExpSwap(a, b, t) => write!(f, "eswap {a} {b} {t:.16e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    /// `key=value` metadata, in order.
    pub metadata: Vec<(String, String)>,
    pub gates: Vec<Gate>,
}

/// Gate count of an exported circuit: `N` Hadamards, `N` phase gates, the
/// `N(N-1)/2` entangling gates when present and one gate per bond per step.
pub fn gate_count(kind: EnsembleKind, n_qubits: usize, n_bonds: usize, n_steps: usize) -> usize {
    let zz = if kind == EnsembleKind::EntangledPhase { n_qubits * (n_qubits - 1) / 2 } else { 0 };
    2 * n_qubits + zz + n_steps * n_bonds
}

/// Circuit preparing `spec`'s random state from `|0...0>` and evolving it
/// through `plan`.
pub fn build_circuit(spec: &RandomStateSpec, model: &SpinChainModel, plan: &TrotterPlan) -> Result<Circuit> {
    if !spec.kind.is_circuit() {
        return Err(Error::InvalidParameter(
            "full random-phase states need exponentially many gates and cannot be exported".into(),
        ));
    }
    if spec.n_qubits != model.n_qubits() {
        return Err(Error::DimensionMismatch { expected: model.n_qubits(), found: spec.n_qubits });
    }
    plan.validate()?;
    let n = spec.n_qubits;
    let angles = spec.draw_angles()?;
    let mut gates = Vec::with_capacity(gate_count(spec.kind, n, model.n_bonds(), plan.n_steps));
    gates.extend((0..n).map(Gate::H));
    gates.extend((0..n).map(|q| Gate::Rz(q, angles[q])));
    if spec.kind == EnsembleKind::EntangledPhase {
        gates.extend(pair_labels(n).map(|(i, j, k)| Gate::Zz(i, j, angles[k])));
    }
    let theta = 2.0 * plan.dt * model.coupling();
    for _ in 0..plan.n_steps {
        for &(i, j) in model.odd_bonds().iter().chain(model.even_bonds()) {
            gates.push(Gate::ExpSwap(i, j, theta));
        }
    }
    let metadata = vec![
        ("n".into(), n.to_string()),
        ("j".into(), format!("{:?}", model.coupling())),
        ("boundary".into(), model.boundary().to_string()),
        ("kind".into(), spec.kind.to_string()),
        ("seed".into(), spec.seed.to_string()),
        ("dt".into(), format!("{:?}", plan.dt)),
        ("steps".into(), plan.n_steps.to_string()),
        ("gates".into(), gates.len().to_string()),
    ];
    Ok(Circuit { n_qubits: n, metadata, gates })
}

impl Circuit {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}={v}")?;
        }
        for g in &self.gates {
            writeln!(w, "{g}")?;
        }
        Ok(())
    }

    /// Reads a gate list; the qubit count comes from the `n` header.
    pub fn parse<R: BufRead>(reader: R) -> Result<Circuit> {
        let mut metadata = Vec::new();
        let mut gates = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let perr = |message: String| Error::Parse { line: i + 1, message };
            if let Some(m) = line.strip_prefix('#') {
                if let Some((k, v)) = m.trim().split_once('=') {
                    metadata.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let q = |s: &str| s.parse::<usize>().map_err(|_| perr(format!("bad qubit index '{s}'")));
            let a = |s: &str| s.parse::<f64>().map_err(|_| perr(format!("bad angle '{s}'")));
            let gate = match (f[0], f.len()) {
                ("h", 2) => Gate::H(q(f[1])?),
                ("rz", 3) => Gate::Rz(q(f[1])?, a(f[2])?),
                ("zz", 4) => Gate::Zz(q(f[1])?, q(f[2])?, a(f[3])?),
                ("eswap", 4) => Gate::ExpSwap(q(f[1])?, q(f[2])?, a(f[3])?),
                _ => return Err(perr(format!("unrecognized gate line '{line}'"))),
            };
            gates.push(gate);
        }
        let n_qubits = metadata
            .iter()
            .find(|(k, _)| k == "n")
            .and_then(|(_, v)| v.parse::<usize>().ok())
            .ok_or(Error::Parse { line: 0, message: "missing 'n' header".into() })?;
        Ok(Circuit { n_qubits, metadata, gates })
    }

    /// Applies every gate to `|0...0>`.
    pub fn replay(&self) -> Result<StateVector> {
        let mut psi = StateVector::zero(self.n_qubits)?;
        for g in &self.gates {
            match *g {
                Gate::H(q) => psi.apply_hadamard(q)?,
                Gate::Rz(q, t) => psi.apply_rz(q, t)?,
                Gate::Zz(a, b, t) => psi.apply_zz(a, b, t)?,
                Gate::ExpSwap(a, b, t) => psi.apply_exp_swap(a, b, t)?,
            }
        }
        Ok(psi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::evolve_state;
    use crate::model::Boundary;

    fn chain4() -> SpinChainModel {
        SpinChainModel::new(4, 1.0, Boundary::Periodic).unwrap()
    }

    #[test]
    fn entangled_two_steps_count() {
        let spec = RandomStateSpec::new(EnsembleKind::EntangledPhase, 4, 17);
        let c = build_circuit(&spec, &chain4(), &TrotterPlan::new(0.01, 2)).unwrap();
        assert_eq!(c.gates.len(), 22);
        assert_eq!(gate_count(spec.kind, 4, 4, 2), 22);
    }

    #[test]
    fn preparation_only() {
        let spec = RandomStateSpec::new(EnsembleKind::ProductPhase, 4, 1);
        let c = build_circuit(&spec, &chain4(), &TrotterPlan::new(0.01, 0)).unwrap();
        assert_eq!(c.gates.len(), 8);
        let psi = c.replay().unwrap();
        let want = spec.prepare().unwrap();
        for (a, b) in psi.amplitudes().iter().zip(want.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn full_phase_rejected() {
        let spec = RandomStateSpec::new(EnsembleKind::FullPhase, 4, 1);
        assert!(build_circuit(&spec, &chain4(), &TrotterPlan::new(0.01, 1)).is_err());
    }

    #[test]
    fn text_round_trip_and_replay() {
        let m = chain4();
        let plan = TrotterPlan::new(0.01, 10);
        let spec = RandomStateSpec::new(EnsembleKind::EntangledPhase, 4, 99);
        let c = build_circuit(&spec, &m, &plan).unwrap();
        let mut buf = Vec::new();
        c.write(&mut buf).unwrap();
        let back = Circuit::parse(buf.as_slice()).unwrap();
        assert_eq!(back, c);
        let mut again = Vec::new();
        build_circuit(&spec, &m, &plan).unwrap().write(&mut again).unwrap();
        assert_eq!(buf, again);

        let want = evolve_state(&spec.prepare().unwrap(), &m, &plan).unwrap();
        let got = back.replay().unwrap();
        for (a, b) in got.amplitudes().iter().zip(want.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn parse_errors() {
        assert!(Circuit::parse("# n=2\nfoo 1\n".as_bytes()).is_err());
        assert!(Circuit::parse("# n=2\nrz 0 abc\n".as_bytes()).is_err());
        assert!(Circuit::parse("h 0\n".as_bytes()).is_err());
    }
}

//! Full diagonalization of small chains and the exact quantities built on it.
//!
//! `H` is real in the computational basis and conserves the number of set
//! bits, so by default each fixed-popcount block is solved separately
//! (largest block `C(14, 7) = 3432` at the default cap). `DiagMethod::Dense`
//! solves the whole `D x D` matrix instead and is kept as a cross-check.

use std::f64::consts::PI;
use std::fs;
use std::io::{BufRead, BufReader, Read as _, Write as _};
use std::path::Path;

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::evolve::KernelTrace;
use crate::model::{Boundary, SpinChainModel};
use crate::state::StateVector;
use crate::thermo::{derive_thermo, ThermoPoint, TraceInput};
use crate::{Error, Result};

pub const DEFAULT_EXACT_MAX_QUBITS: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DiagMethod {
    #[default]
    Blocked,
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiagOptions {
    pub keep_vectors: bool,
    pub method: DiagMethod,
    pub max_qubits: usize,
}

impl Default for DiagOptions {
    fn default() -> Self {
        Self {
            keep_vectors: false,
            method: DiagMethod::Blocked,
            max_qubits: DEFAULT_EXACT_MAX_QUBITS,
        }
    }
}

impl DiagOptions {
    pub fn with_vectors() -> Self {
        Self { keep_vectors: true, ..Self::default() }
    }
}

#[derive(Clone, Debug)]
struct Block {
    // computational-basis indices spanned by the block, ascending
    indices: Vec<usize>,
    // column-major, vectors[a + k * len] = <indices[a] | v_k>
    vectors: Vec<f64>,
}

#[derive(Clone, Debug)]
struct Eigenvectors {
    blocks: Vec<Block>,
    // ascending position n -> (block, column)
    location: Vec<(usize, usize)>,
}

/// Model parameters a spectrum was computed for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumModel {
    pub n_qubits: usize,
    pub coupling: f64,
    pub boundary: Boundary,
}

impl SpectrumModel {
    pub fn from_model(model: &SpinChainModel) -> Self {
        Self {
            n_qubits: model.n_qubits(),
            coupling: model.coupling(),
            boundary: model.boundary(),
        }
    }

    pub fn to_model(&self) -> Result<SpinChainModel> {
        SpinChainModel::new(self.n_qubits, self.coupling, self.boundary)
    }
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    model: SpectrumModel,
    eigenvalues: Vec<f64>,
    vectors: Option<Eigenvectors>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactTraces {
    pub tr_g: f64,
    pub tr_hg: f64,
    pub tr_h2g: f64,
}

fn block_hamiltonian(model: &SpinChainModel, indices: &[usize], lookup: &[usize]) -> Mat<f64> {
    let j = model.coupling();
    let len = indices.len();
    let mut h = Mat::<f64>::zeros(len, len);
    for (a, &b) in indices.iter().enumerate() {
        for &(p, q) in model.bonds() {
            if (b >> p) & 1 == (b >> q) & 1 {
                h[(a, a)] += j;
            } else {
                let c = b ^ (1 << p) ^ (1 << q);
                h[(lookup[c], a)] += j;
            }
        }
    }
    h
}

fn solve_block(h: &Mat<f64>, keep_vectors: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = h.nrows();
    if keep_vectors {
        let evd = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let vals: Vec<f64> = (0..n).map(|k| s[k]).collect();
        let mut vecs = Vec::with_capacity(n * n);
        for k in 0..n {
            for a in 0..n {
                vecs.push(u[(a, k)]);
            }
        }
        Ok((vals, vecs))
    } else {
        let vals = h
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        Ok((vals, Vec::new()))
    }
}

/// Eigen-decomposition of the chain Hamiltonian.
pub fn full_diagonalize(model: &SpinChainModel, options: DiagOptions) -> Result<Spectrum> {
    let n = model.n_qubits();
    if n > options.max_qubits {
        return Err(Error::Capacity {
            what: "exact diagonalization",
            requested: n,
            cap: options.max_qubits,
        });
    }
    let dim = model.dim();
    let sectors: Vec<Vec<usize>> = match options.method {
        DiagMethod::Dense => vec![(0..dim).collect()],
        DiagMethod::Blocked => {
            let mut s = vec![Vec::new(); n + 1];
            for b in 0..dim {
                s[b.count_ones() as usize].push(b);
            }
            s
        }
    };
    let mut lookup = vec![0usize; dim];
    for sector in &sectors {
        for (a, &b) in sector.iter().enumerate() {
            lookup[b] = a;
        }
    }

    let mut values: Vec<(f64, usize, usize)> = Vec::with_capacity(dim);
    let mut blocks = Vec::with_capacity(sectors.len());
    for (bi, indices) in sectors.into_iter().enumerate() {
        let h = block_hamiltonian(model, &indices, &lookup);
        let (vals, vecs) = solve_block(&h, options.keep_vectors)?;
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigensolver("non-finite eigenvalue".into()));
        }
        values.extend(vals.iter().enumerate().map(|(k, &v)| (v, bi, k)));
        blocks.push(Block { indices, vectors: vecs });
    }
    // stable: degenerate levels keep block order
    values.sort_by(|a, b| a.0.total_cmp(&b.0));

    let eigenvalues = values.iter().map(|v| v.0).collect();
    let vectors = options.keep_vectors.then(|| Eigenvectors {
        blocks,
        location: values.iter().map(|v| (v.1, v.2)).collect(),
    });
    Ok(Spectrum {
        model: SpectrumModel::from_model(model),
        eigenvalues,
        vectors,
    })
}

impl Spectrum {
    /// Spectrum without eigenvectors, e.g. loaded from disk.
    pub fn from_eigenvalues(model: SpectrumModel, mut eigenvalues: Vec<f64>) -> Result<Self> {
        let dim = 1usize << model.n_qubits;
        if eigenvalues.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: eigenvalues.len() });
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite eigenvalue".into()));
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self { model, eigenvalues, vectors: None })
    }

    pub fn model(&self) -> &SpectrumModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_energy(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    pub fn has_vectors(&self) -> bool {
        self.vectors.is_some()
    }

    fn vectors(&self) -> Result<&Eigenvectors> {
        self.vectors
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("spectrum was computed without eigenvectors".into()))
    }

    /// Eigenvector `n` as a dense real vector of length `D`.
    pub fn eigenvector(&self, n: usize) -> Result<Vec<f64>> {
        let ev = self.vectors()?;
        let &(bi, k) = ev
            .location
            .get(n)
            .ok_or_else(|| Error::InvalidParameter(format!("eigenvector index {n} out of range")))?;
        let block = &ev.blocks[bi];
        let len = block.indices.len();
        let mut out = vec![0.0; self.dim()];
        for (a, &b) in block.indices.iter().enumerate() {
            out[b] = block.vectors[a + k * len];
        }
        Ok(out)
    }

    /// Expansion coefficients `c_n = <E_n|phi>`.
    pub fn coefficients(&self, state: &StateVector) -> Result<Vec<Complex64>> {
        let ev = self.vectors()?;
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: state.dim() });
        }
        let amps = state.amplitudes();
        let per_block: Vec<Vec<Complex64>> = ev
            .blocks
            .iter()
            .map(|block| {
                let len = block.indices.len();
                let local: Vec<Complex64> = block.indices.iter().map(|&b| amps[b]).collect();
                (0..len)
                    .map(|k| {
                        let col = &block.vectors[k * len..(k + 1) * len];
                        col.iter().zip(&local).map(|(&u, &x)| x * u).sum()
                    })
                    .collect()
            })
            .collect();
        Ok(ev.location.iter().map(|&(bi, k)| per_block[bi][k]).collect())
    }

    /// `sum_n c_n |E_n>`.
    pub fn state_from_coefficients(&self, coeffs: &[Complex64]) -> Result<StateVector> {
        let ev = self.vectors()?;
        if coeffs.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: coeffs.len() });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (&(bi, k), &c) in ev.location.iter().zip(coeffs) {
            let block = &ev.blocks[bi];
            let len = block.indices.len();
            for (a, &b) in block.indices.iter().enumerate() {
                amps[b] += c * block.vectors[a + k * len];
            }
        }
        StateVector::from_amplitudes(self.model.n_qubits, amps)
    }

    /// Dense `G = exp(-(H - E)^2 tau^2)`, row-major `D x D`.
    pub fn filter_operator(&self, energy: f64, tau: f64) -> Result<Vec<f64>> {
        let ev = self.vectors()?;
        let d = self.dim();
        let mut g = vec![0.0; d * d];
        for (&(bi, k), &en) in ev.location.iter().zip(&self.eigenvalues) {
            let w = gaussian(en, energy, tau);
            if w == 0.0 {
                continue;
            }
            let block = &ev.blocks[bi];
            let len = block.indices.len();
            let col = &block.vectors[k * len..(k + 1) * len];
            for (a, &ba) in block.indices.iter().enumerate() {
                let wa = w * col[a];
                let row = &mut g[ba * d..(ba + 1) * d];
                for (c, &bc) in block.indices.iter().enumerate() {
                    row[bc] += wa * col[c];
                }
            }
        }
        Ok(g)
    }

    pub fn traces(&self, energy: f64, tau: f64) -> ExactTraces {
        exact_traces(self, energy, tau)
    }

    pub fn thermo(&self, energy: f64, tau: f64) -> ThermoPoint {
        let t = self.traces(energy, tau);
        derive_thermo(TraceInput::exact(energy, tau, t.tr_g, t.tr_hg, t.tr_h2g))
    }

    pub fn cumulative_states(&self, energy: f64, tau: f64) -> f64 {
        crate::thermo::cumulative_states(&self.eigenvalues, energy, tau)
    }

    /// One eigenvalue per line after `#` header lines.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        writeln!(out, "# n={}", self.model.n_qubits)?;
        writeln!(out, "# j={:?}", self.model.coupling)?;
        writeln!(out, "# boundary={}", self.model.boundary)?;
        writeln!(out, "eigenvalue")?;
        for v in &self.eigenvalues {
            writeln!(out, "{v:?}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let reader = BufReader::new(fs::File::open(path)?);
        let mut n = None;
        let mut j = None;
        let mut boundary = None;
        let mut values = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let parse_err = |message: String| Error::Parse { line: i + 1, message };
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.trim().split_once('=') {
                    match k.trim() {
                        "n" => n = Some(v.trim().parse::<usize>().map_err(|e| parse_err(e.to_string()))?),
                        "j" => j = Some(v.trim().parse::<f64>().map_err(|e| parse_err(e.to_string()))?),
                        "boundary" => boundary = Some(v.parse::<Boundary>()?),
                        _ => {}
                    }
                }
                continue;
            }
            if line.is_empty() || line == "eigenvalue" {
                continue;
            }
            values.push(line.parse::<f64>().map_err(|e| parse_err(e.to_string()))?);
        }
        let missing = |what: &str| Error::Parse { line: 0, message: format!("missing '{what}' header") };
        let model = SpectrumModel {
            n_qubits: n.ok_or_else(|| missing("n"))?,
            coupling: j.ok_or_else(|| missing("j"))?,
            boundary: boundary.ok_or_else(|| missing("boundary"))?,
        };
        Self::from_eigenvalues(model, values)
    }

    /// Little-endian binary: magic, `n` (u32), `J` (f64), boundary (u8),
    /// count (u64), eigenvalues (f64).
    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&(self.model.n_qubits as u32).to_le_bytes())?;
        out.write_all(&self.model.coupling.to_le_bytes())?;
        out.write_all(&[match self.model.boundary {
            Boundary::Periodic => 0u8,
            Boundary::Open => 1u8,
        }])?;
        out.write_all(&(self.eigenvalues.len() as u64).to_le_bytes())?;
        for v in &self.eigenvalues {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load_binary(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        let bad = |m: &str| Error::Parse { line: 0, message: m.to_string() };
        let header = BINARY_MAGIC.len() + 4 + 8 + 1 + 8;
        if bytes.len() < header || &bytes[..BINARY_MAGIC.len()] != BINARY_MAGIC {
            return Err(bad("not a spectrum file"));
        }
        let mut at = BINARY_MAGIC.len();
        let mut take = |k: usize| {
            let s = &bytes[at..at + k];
            at += k;
            s
        };
        let n = u32::from_le_bytes(take(4).try_into().unwrap()) as usize;
        let j = f64::from_le_bytes(take(8).try_into().unwrap());
        let boundary = match take(1)[0] {
            0 => Boundary::Periodic,
            1 => Boundary::Open,
            _ => return Err(bad("unknown boundary tag")),
        };
        let count = u64::from_le_bytes(take(8).try_into().unwrap()) as usize;
        let body = &bytes[header..];
        if body.len() != count * 8 {
            return Err(bad("truncated eigenvalue data"));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_eigenvalues(SpectrumModel { n_qubits: n, coupling: j, boundary }, values)
    }
}

const BINARY_MAGIC: &[u8; 8] = b"HSPECv1\0";

#[inline]
fn gaussian(en: f64, energy: f64, tau: f64) -> f64 {
    let x = (en - energy) * tau;
    (-x * x).exp()
}

/// `Tr[G]`, `Tr[HG]`, `Tr[H^2 G]` as sums over the spectrum.
pub fn exact_traces(spectrum: &Spectrum, energy: f64, tau: f64) -> ExactTraces {
    let mut t = ExactTraces { tr_g: 0.0, tr_hg: 0.0, tr_h2g: 0.0 };
    for &en in spectrum.eigenvalues() {
        let w = gaussian(en, energy, tau);
        t.tr_g += w;
        t.tr_hg += w * en;
        t.tr_h2g += w * en * en;
    }
    t
}

fn check_normalized(coeffs: &[Complex64]) -> Result<()> {
    let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("coefficients not normalized: sum |c|^2 = {norm}")));
    }
    Ok(())
}

/// `K(t) = sum |c_n|^2 e^{-i E_n t}`, `L(t) = sum |c_n|^2 E_n e^{-i E_n t}`
/// at `t_m = m * spacing`, `m < len`.
pub fn exact_kernel(coeffs: &[Complex64], spectrum: &Spectrum, spacing: f64, len: usize) -> Result<KernelTrace> {
    if coeffs.len() != spectrum.dim() {
        return Err(Error::DimensionMismatch { expected: spectrum.dim(), found: coeffs.len() });
    }
    check_normalized(coeffs)?;
    let levels: Vec<(f64, f64)> = coeffs
        .iter()
        .zip(spectrum.eigenvalues())
        .map(|(c, &e)| (c.norm_sqr(), e))
        .filter(|&(p, _)| p > 0.0)
        .collect();
    let mut k = Vec::with_capacity(len);
    let mut l = Vec::with_capacity(len);
    for m in 0..len {
        let t = m as f64 * spacing;
        let mut kk = Complex64::new(0.0, 0.0);
        let mut ll = Complex64::new(0.0, 0.0);
        for &(p, e) in &levels {
            let z = Complex64::from_polar(p, -e * t);
            kk += z;
            ll += z * e;
        }
        k.push(kk);
        l.push(ll);
    }
    KernelTrace::new(spacing, k, l)
}

/// `c_n exp(-(E_n - E)^2 tau^2 / 2)`, the coefficients of `sqrt(G)|phi>`.
pub fn filtered_state_coeffs(coeffs: &[Complex64], spectrum: &Spectrum, energy: f64, tau: f64) -> Vec<Complex64> {
    coeffs
        .iter()
        .zip(spectrum.eigenvalues())
        .map(|(&c, &en)| {
            let x = (en - energy) * tau;
            c * (-0.5 * x * x).exp()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    /// Bin `k` is `[E_0 + (k - 1/2) dE, E_0 + (k + 1/2) dE)`.
    pub edges: Vec<f64>,
    pub centers: Vec<f64>,
    pub counts: Vec<usize>,
    pub bin_width: f64,
    /// `sqrt(pi) / bin_width`.
    pub tau_bin: f64,
}

/// Eigenvalue histogram with the extreme eigenvalues at the first and last
/// bin centers.
pub fn histogram_and_tau(spectrum: &Spectrum, n_bin: usize) -> Result<Histogram> {
    if n_bin < 2 {
        return Err(Error::InvalidParameter(format!("n_bin must be at least 2, got {n_bin}")));
    }
    let e0 = spectrum.ground_energy();
    let span = spectrum.max_energy() - e0;
    if !(span > 0.0) {
        return Err(Error::InvalidParameter("spectrum has zero span".into()));
    }
    let width = span / (n_bin - 1) as f64;
    let mut counts = vec![0usize; n_bin];
    for &en in spectrum.eigenvalues() {
        let k = ((en - e0) / width + 0.5).floor() as usize;
        counts[k.min(n_bin - 1)] += 1;
    }
    Ok(Histogram {
        edges: (0..=n_bin).map(|k| e0 + (k as f64 - 0.5) * width).collect(),
        centers: (0..n_bin).map(|k| e0 + k as f64 * width).collect(),
        counts,
        bin_width: width,
        tau_bin: PI.sqrt() / width,
    })
}

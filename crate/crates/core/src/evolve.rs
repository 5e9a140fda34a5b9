//! First-order Suzuki-Trotter evolution and kernel recording.
//!
//! One step applies the layer `exp(-i H_A dt)` and then `exp(-i H_B dt)`,
//! each as a product of commuting exponential-SWAP gates with angle
//! `theta = 2 J dt`. While evolving `psi(t)` from `phi` we record
//! `K(t) = <phi|psi(t)>` and `L(t) = <H phi|psi(t)>`.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::model::SpinChainModel;
use crate::state::{exp_swap_unchecked, inner_unchecked, StateVector};
use crate::{Error, Result};

/// Longest kernel the recorder will allocate.
pub const MAX_RECORDS: usize = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrotterPlan {
    pub dt: f64,
    pub n_steps: usize,
    /// Record every `stride`-th step.
    pub stride: usize,
}

impl Default for TrotterPlan {
    /// `dt J = 0.01`, `t_max J = 50`, every step recorded (for `J = 1`).
    fn default() -> Self {
        Self { dt: 0.01, n_steps: 5000, stride: 1 }
    }
}

impl TrotterPlan {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self { dt, n_steps, stride: 1 }
    }

    /// Plan with `n_steps = round(t_max / dt)`.
    pub fn from_t_max(dt: f64, t_max: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        if !(t_max >= 0.0) || !t_max.is_finite() {
            return Err(Error::InvalidParameter(format!("t_max must be non-negative, got {t_max}")));
        }
        let steps = (t_max / dt).round();
        if steps > MAX_RECORDS as f64 {
            return Err(Error::InvalidParameter(format!(
                "t_max/dt = {steps} exceeds the time-grid limit {MAX_RECORDS}"
            )));
        }
        Ok(Self::new(dt, steps as usize))
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn t_max(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {}", self.dt)));
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameter("recording stride must be at least 1".into()));
        }
        if !self.n_steps.is_multiple_of(self.stride) {
            return Err(Error::InvalidParameter(format!(
                "stride {} does not divide {} steps",
                self.stride, self.n_steps
            )));
        }
        if self.n_steps / self.stride >= MAX_RECORDS {
            return Err(Error::InvalidParameter(format!(
                "{} records exceed the time-grid limit {MAX_RECORDS}",
                self.n_steps / self.stride + 1
            )));
        }
        Ok(())
    }
}

/// Kernels on the uniform grid `t_m = m * spacing`, `m = 0..=M`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelTrace {
    spacing: f64,
    k: Vec<Complex64>,
    l: Vec<Complex64>,
}

impl KernelTrace {
    pub fn new(spacing: f64, k: Vec<Complex64>, l: Vec<Complex64>) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {spacing}")));
        }
        if k.len() != l.len() {
            return Err(Error::InvalidParameter(format!(
                "K has {} points but L has {}",
                k.len(),
                l.len()
            )));
        }
        Ok(Self { spacing, k, l })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    #[inline]
    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.spacing
    }

    pub fn t_max(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn k(&self) -> &[Complex64] {
        &self.k
    }

    pub fn l(&self) -> &[Complex64] {
        &self.l
    }

    /// Pointwise sum of two kernels on the same grid.
    pub fn add(&self, other: &KernelTrace) -> Result<KernelTrace> {
        if self.len() != other.len() || self.spacing != other.spacing {
            return Err(Error::InvalidParameter("kernels live on different grids".into()));
        }
        let k = self.k.iter().zip(&other.k).map(|(a, b)| a + b).collect();
        let l = self.l.iter().zip(&other.l).map(|(a, b)| a + b).collect();
        KernelTrace::new(self.spacing, k, l)
    }

    /// Columns `m,t,re_K,im_K,re_L,im_L`, full round-trip precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# spacing={:?}", self.spacing)?;
        writeln!(w, "m,t,re_K,im_K,re_L,im_L")?;
        for (m, (k, l)) in self.k.iter().zip(&self.l).enumerate() {
            writeln!(
                w,
                "{m},{:?},{:?},{:?},{:?},{:?}",
                self.time(m),
                k.re,
                k.im,
                l.re,
                l.im
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<KernelTrace> {
        let mut spacing = None;
        let mut k = Vec::new();
        let mut l = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let perr = |message: String| Error::Parse { line: n + 1, message };
            if let Some(meta) = line.strip_prefix('#') {
                if let Some(v) = meta.trim().strip_prefix("spacing=") {
                    spacing = Some(v.parse::<f64>().map_err(|e| perr(e.to_string()))?);
                }
                continue;
            }
            if line.is_empty() || line.starts_with("m,") {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(perr(format!("expected 6 columns, found {}", f.len())));
            }
            let m: usize = f[0].parse().map_err(|_| perr(format!("bad step index '{}'", f[0])))?;
            if m != k.len() {
                return Err(perr(format!("step {m} out of order")));
            }
            let v: Vec<f64> = f[2..]
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| perr(e.to_string())))
                .collect::<Result<_>>()?;
            k.push(Complex64::new(v[0], v[1]));
            l.push(Complex64::new(v[2], v[3]));
        }
        let spacing = spacing.ok_or(Error::Parse { line: 0, message: "missing spacing header".into() })?;
        KernelTrace::new(spacing, k, l)
    }
}

fn check_model(state: &StateVector, model: &SpinChainModel) -> Result<()> {
    if state.n_qubits() != model.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: model.n_qubits(),
            found: state.n_qubits(),
        });
    }
    Ok(())
}

#[inline]
fn step_unchecked(amps: &mut [Complex64], model: &SpinChainModel, dt: f64) {
    // exp(-i J dt P) == exp(-i theta P / 2) with theta = 2 J dt
    let (s, c) = (model.coupling() * dt).sin_cos();
    for &(i, j) in model.odd_bonds().iter().chain(model.even_bonds()) {
        exp_swap_unchecked(amps, i, j, c, s);
    }
}

/// `psi <- exp(-i H_B dt) exp(-i H_A dt) psi`.
pub fn trotter_step(state: &mut StateVector, model: &SpinChainModel, dt: f64) -> Result<()> {
    check_model(state, model)?;
    step_unchecked(state.amplitudes_mut(), model, dt);
    Ok(())
}

/// Evolves `initial` through the whole plan and returns the final state.
pub fn evolve_state(initial: &StateVector, model: &SpinChainModel, plan: &TrotterPlan) -> Result<StateVector> {
    check_model(initial, model)?;
    plan.validate()?;
    let mut psi = initial.clone();
    for _ in 0..plan.n_steps {
        step_unchecked(psi.amplitudes_mut(), model, plan.dt);
    }
    Ok(psi)
}

pub fn evolve_and_record(initial: &StateVector, model: &SpinChainModel, plan: &TrotterPlan) -> Result<KernelTrace> {
    check_model(initial, model)?;
    plan.validate()?;
    let chi = initial.apply_hamiltonian(model)?;
    let phi = initial.amplitudes();
    let mut psi = initial.clone();
    let records = plan.n_steps / plan.stride + 1;
    let mut k = Vec::with_capacity(records);
    let mut l = Vec::with_capacity(records);
    k.push(inner_unchecked(phi, psi.amplitudes()));
    l.push(inner_unchecked(chi.amplitudes(), psi.amplitudes()));
    for step in 1..=plan.n_steps {
        step_unchecked(psi.amplitudes_mut(), model, plan.dt);
        if step % plan.stride == 0 {
            k.push(inner_unchecked(phi, psi.amplitudes()));
            l.push(inner_unchecked(chi.amplitudes(), psi.amplitudes()));
        }
    }
    KernelTrace::new(plan.dt * plan.stride as f64, k, l)
}

//! Microcanonical quantities from filtered traces, plus the translation to a
//! canonical ensemble.
//!
//! With `G = exp(-(H - E)^2 tau^2)`:
//!
//! * density of states `g = tau/sqrt(pi) Tr[G]`
//! * entropy `S = ln Tr[G]`
//! * energy `E_tau = Tr[HG] / Tr[G]`
//! * inverse temperature `beta = 2 tau^2 (E_tau - E)`
//! * energy fluctuation `sigma = sqrt(Tr[H^2 G]/Tr[G] - E_tau^2)`
//!
//! Uncertainties are first-order (delta method) propagations of the trace
//! standard errors, including the covariance between `Tr[G]` and `Tr[HG]`.

use std::f64::consts::PI;

/// Traces at one `(E, tau)`; SEMs are zero for exact input.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TraceInput {
    pub target_energy: f64,
    pub filtering_time: f64,
    pub tr_g: f64,
    pub tr_hg: f64,
    pub tr_h2g: Option<f64>,
    pub tr_g_sem: f64,
    pub tr_hg_sem: f64,
    /// Covariance of the two trace estimates (not of single samples).
    pub cov_g_hg: f64,
}

impl TraceInput {
    pub fn exact(target_energy: f64, filtering_time: f64, tr_g: f64, tr_hg: f64, tr_h2g: f64) -> Self {
        Self {
            target_energy,
            filtering_time,
            tr_g,
            tr_hg,
            tr_h2g: Some(tr_h2g),
            ..Default::default()
        }
    }
}

/// A completed thermodynamic point. When `valid` is false (`Tr[G] <= 0`) the
/// derived fields are NaN and only the raw traces are meaningful.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermoPoint {
    pub traces: TraceInput,
    pub valid: bool,
    pub window_width: f64,
    pub dos: f64,
    pub dos_sem: f64,
    pub entropy: f64,
    pub entropy_sem: f64,
    pub energy: f64,
    pub energy_sem: f64,
    pub beta: f64,
    pub beta_sem: f64,
    /// NaN when `Tr[H^2 G]` is not available.
    pub sigma: f64,
}

impl ThermoPoint {
    pub fn target_energy(&self) -> f64 {
        self.traces.target_energy
    }

    pub fn filtering_time(&self) -> f64 {
        self.traces.filtering_time
    }
}

pub fn derive_thermo(input: TraceInput) -> ThermoPoint {
    let tau = input.filtering_time;
    let window_width = PI.sqrt() / tau;
    let dos = tau / PI.sqrt() * input.tr_g;
    let dos_sem = tau / PI.sqrt() * input.tr_g_sem;
    if !(input.tr_g > 0.0) {
        return ThermoPoint {
            traces: input,
            valid: false,
            window_width,
            dos,
            dos_sem,
            entropy: f64::NAN,
            entropy_sem: f64::NAN,
            energy: f64::NAN,
            energy_sem: f64::NAN,
            beta: f64::NAN,
            beta_sem: f64::NAN,
            sigma: f64::NAN,
        };
    }
    let g = input.tr_g;
    let energy = input.tr_hg / g;
    let var_energy = (input.tr_hg_sem * input.tr_hg_sem - 2.0 * energy * input.cov_g_hg
        + energy * energy * input.tr_g_sem * input.tr_g_sem)
        / (g * g);
    let energy_sem = var_energy.max(0.0).sqrt();
    let sigma = match input.tr_h2g {
        Some(h2) => (h2 / g - energy * energy).max(0.0).sqrt(),
        None => f64::NAN,
    };
    ThermoPoint {
        traces: input,
        valid: true,
        window_width,
        dos,
        dos_sem,
        entropy: g.ln(),
        entropy_sem: input.tr_g_sem / g,
        energy,
        energy_sem,
        beta: 2.0 * tau * tau * (energy - input.target_energy),
        beta_sem: 2.0 * tau * tau * energy_sem,
        sigma,
    }
}

/// Cumulative number of states `W(E) = 1/2 sum_n erfc((E_n - E) tau)`.
pub fn cumulative_states(eigenvalues: &[f64], energy: f64, tau: f64) -> f64 {
    0.5 * eigenvalues.iter().map(|&en| libm::erfc((en - energy) * tau)).sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalPoint {
    pub beta: f64,
    pub tau: f64,
    pub ln_z_can: f64,
    pub e_can: f64,
    pub s_can: f64,
    pub ln_z_can_tau: f64,
    pub e_can_tau: f64,
    pub s_can_tau: f64,
}

impl CanonicalPoint {
    pub fn z_can(&self) -> f64 {
        self.ln_z_can.exp()
    }

    pub fn z_can_tau(&self) -> f64 {
        self.ln_z_can_tau.exp()
    }
}

/// Canonical quantities from an exact spectrum, and their `tau`-dependent
/// counterparts `Z_tau = exp(beta^2/4tau^2) Z`, `E_tau = E - beta/2tau^2`,
/// `S_tau = S - beta^2/4tau^2`.
pub fn canonical_from_spectrum(eigenvalues: &[f64], beta: f64, tau: f64) -> CanonicalPoint {
    // shift by the Boltzmann-dominant level to keep exp() finite
    let shift = if beta >= 0.0 {
        eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    let mut z = 0.0;
    let mut ze = 0.0;
    for &en in eigenvalues {
        let w = (-beta * (en - shift)).exp();
        z += w;
        ze += w * en;
    }
    let ln_z_can = z.ln() - beta * shift;
    let e_can = ze / z;
    let s_can = beta * e_can + ln_z_can;
    let a = beta * beta / (4.0 * tau * tau);
    CanonicalPoint {
        beta,
        tau,
        ln_z_can,
        e_can,
        s_can,
        ln_z_can_tau: ln_z_can + a,
        e_can_tau: e_can - beta / (2.0 * tau * tau),
        s_can_tau: s_can - a,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalGridPoint {
    pub beta: f64,
    pub tau: f64,
    pub ln_z_can_tau: f64,
    pub e_can_tau: f64,
    pub s_can_tau: f64,
    /// The integrand has not decayed at the ends of the energy grid.
    pub truncated: bool,
}

/// Relative size of the integrand at the grid ends that triggers `truncated`.
pub const GRID_EDGE_TOLERANCE: f64 = 1e-10;

/// `Z_tau(beta) = int dE exp(-beta E) g(E)` by the trapezoidal rule over a
/// (not necessarily uniform) ascending energy grid, with `E_tau` and `S_tau`
/// from the same integrals.
pub fn canonical_from_dos_grid(energies: &[f64], dos: &[f64], beta: f64, tau: f64) -> Option<CanonicalGridPoint> {
    if energies.len() < 2 || energies.len() != dos.len() {
        return None;
    }
    let shift = energies
        .iter()
        .zip(dos)
        .filter(|(_, &g)| g > 0.0)
        .map(|(&e, &g)| g.ln() - beta * e)
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return None;
    }
    let f: Vec<f64> = energies
        .iter()
        .zip(dos)
        .map(|(&e, &g)| if g > 0.0 { (g.ln() - beta * e - shift).exp() } else { 0.0 })
        .collect();
    let mut z = 0.0;
    let mut ze = 0.0;
    for i in 1..energies.len() {
        let h = energies[i] - energies[i - 1];
        z += 0.5 * h * (f[i] + f[i - 1]);
        ze += 0.5 * h * (f[i] * energies[i] + f[i - 1] * energies[i - 1]);
    }
    if !(z > 0.0) {
        return None;
    }
    let peak = f.iter().copied().fold(0.0, f64::max);
    let truncated = f[0] > GRID_EDGE_TOLERANCE * peak || f[f.len() - 1] > GRID_EDGE_TOLERANCE * peak;
    let ln_z = z.ln() + shift;
    let e = ze / z;
    Some(CanonicalGridPoint {
        beta,
        tau,
        ln_z_can_tau: ln_z,
        e_can_tau: e,
        s_can_tau: beta * e + ln_z,
        truncated,
    })
}

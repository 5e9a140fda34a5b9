//! Gaussian-filtered Fourier quadrature of recorded kernels.
//!
//! For target energy `E` and filtering time `tau`,
//!
//! ```text
//! N(E) = 1/(2 sqrt(pi) tau) * int dt exp(-t^2/(4 tau^2)) exp(iEt) K(t)
//! ```
//!
//! and `H(E)` the same with `L`. The integral runs over `[-t_max, t_max]`
//! with the trapezoidal rule, folded onto `t >= 0` through `K(-t) = K(t)*`.
//! The prefactor is the trapezoidal integral of the Gaussian weight itself,
//! so a constant kernel is filtered exactly; when the grid resolves the
//! Gaussian this agrees with `2 sqrt(pi) tau / dt` to rounding.

use num_complex::Complex64;

use crate::evolve::KernelTrace;
use crate::{Error, Result};

/// Truncation bound `exp(-t_max^2 / 4 tau^2)` above which results are flagged.
pub const TRUNCATION_WARN: f64 = 1e-10;

/// Gaussian weights below this are treated as zero.
const WEIGHT_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterParams {
    pub target_energy: f64,
    pub filtering_time: f64,
}

impl FilterParams {
    pub fn new(target_energy: f64, filtering_time: f64) -> Result<Self> {
        if !(filtering_time > 0.0) || !filtering_time.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "filtering time must be positive, got {filtering_time}"
            )));
        }
        if !target_energy.is_finite() {
            return Err(Error::InvalidParameter(format!("target energy must be finite, got {target_energy}")));
        }
        Ok(Self { target_energy, filtering_time })
    }

    /// Energy window `dE = sqrt(pi) / tau`.
    pub fn window_width(&self) -> f64 {
        std::f64::consts::PI.sqrt() / self.filtering_time
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilteredPair {
    /// Filtered squared norm `N_{tau,r}(E)`.
    pub norm: f64,
    /// Filtered energy `H_{tau,r}(E)`.
    pub energy: f64,
    /// `exp(-t_max^2 / 4 tau^2)`.
    pub truncation_bound: f64,
}

impl FilteredPair {
    pub fn is_truncated(&self) -> bool {
        self.truncation_bound >= TRUNCATION_WARN
    }
}

struct Weights {
    // trapezoidal weight times Gaussian, folded; zero tail dropped
    w: Vec<f64>,
    norm: f64,
    truncation_bound: f64,
}

fn weights(kernel: &KernelTrace, tau: f64) -> Weights {
    let last = kernel.len() - 1;
    let inv = 1.0 / (4.0 * tau * tau);
    let mut w = Vec::with_capacity(kernel.len());
    let mut norm = 0.0;
    for m in 0..=last {
        let t = kernel.time(m);
        let g = (-t * t * inv).exp();
        if g < WEIGHT_FLOOR {
            break;
        }
        let fold = if m == 0 || m == last { 1.0 } else { 2.0 };
        w.push(fold * g);
        norm += fold * g;
    }
    let t_max = kernel.t_max();
    Weights {
        w,
        norm,
        truncation_bound: (-t_max * t_max * inv).exp(),
    }
}

fn check(kernel: &KernelTrace, params: &FilterParams) -> Result<()> {
    if kernel.is_empty() {
        return Err(Error::InvalidParameter("empty kernel".into()));
    }
    if !(params.filtering_time > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "filtering time must be positive, got {}",
            params.filtering_time
        )));
    }
    Ok(())
}

/// Filtered norm and energy of one kernel at one `(E, tau)`.
pub fn quadrature_filtered_pair(kernel: &KernelTrace, params: &FilterParams) -> Result<FilteredPair> {
    check(kernel, params)?;
    let wts = weights(kernel, params.filtering_time);
    let e = params.target_energy;
    let mut n = 0.0;
    let mut h = 0.0;
    for (m, &w) in wts.w.iter().enumerate() {
        let (s, c) = (e * kernel.time(m)).sin_cos();
        let k = kernel.k()[m];
        let l = kernel.l()[m];
        // Re(e^{iEt} z) = c re - s im
        n += w * (c * k.re - s * k.im);
        h += w * (c * l.re - s * l.im);
    }
    Ok(FilteredPair {
        norm: n / wts.norm,
        energy: h / wts.norm,
        truncation_bound: wts.truncation_bound,
    })
}

/// Same quadrature over the unfolded interval, returning complex values.
/// The imaginary parts cancel up to rounding and serve as a diagnostic.
pub fn quadrature_unfolded(kernel: &KernelTrace, params: &FilterParams) -> Result<(Complex64, Complex64)> {
    check(kernel, params)?;
    let wts = weights(kernel, params.filtering_time);
    let e = params.target_energy;
    let mut n = Complex64::new(0.0, 0.0);
    let mut h = Complex64::new(0.0, 0.0);
    for (m, &w) in wts.w.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, e * kernel.time(m));
        let k = kernel.k()[m];
        let l = kernel.l()[m];
        if m == 0 {
            n += phase * k * w;
            h += phase * l * w;
        } else {
            // the folded weight covers +t and -t equally
            let half = 0.5 * w;
            n += (phase * k + phase.conj() * k.conj()) * half;
            h += (phase * l + phase.conj() * l.conj()) * half;
        }
    }
    Ok((n / wts.norm, h / wts.norm))
}

/// Quadrature at every grid point, reusing one kernel.
pub fn quadrature_grid(kernel: &KernelTrace, grid: &[FilterParams]) -> Result<Vec<FilteredPair>> {
    grid.iter().map(|p| quadrature_filtered_pair(kernel, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact kernel of a state with weights `p_n` on levels `e_n`.
    fn kernel_of(levels: &[(f64, f64)], spacing: f64, len: usize) -> KernelTrace {
        let mut k = Vec::with_capacity(len);
        let mut l = Vec::with_capacity(len);
        for m in 0..len {
            let t = m as f64 * spacing;
            let mut kk = Complex64::new(0.0, 0.0);
            let mut ll = Complex64::new(0.0, 0.0);
            for &(p, e) in levels {
                let z = Complex64::from_polar(p, -e * t);
                kk += z;
                ll += z * e;
            }
            k.push(kk);
            l.push(ll);
        }
        KernelTrace::new(spacing, k, l).unwrap()
    }

    #[test]
    fn two_site_closed_form() {
        // singlet at -J, triplet at +J
        let levels = [(0.1, -1.0), (0.3, 1.0), (0.25, 1.0), (0.35, 1.0)];
        let kernel = kernel_of(&levels, 0.01, 5001);
        for &(e, tau) in &[(0.0, 0.5), (-1.0, 2.0), (1.0, 3.0), (0.4, 5.0), (2.5, 1.2)] {
            let got = quadrature_filtered_pair(&kernel, &FilterParams::new(e, tau).unwrap()).unwrap();
            let want_n: f64 = levels.iter().map(|&(p, en)| p * (-(en - e) * (en - e) * tau * tau).exp()).sum();
            let want_h: f64 = levels
                .iter()
                .map(|&(p, en)| p * en * (-(en - e) * (en - e) * tau * tau).exp())
                .sum();
            assert!((got.norm - want_n).abs() < 1e-10, "{e} {tau}: {} vs {want_n}", got.norm);
            assert!((got.energy - want_h).abs() < 1e-10);
            assert!(got.norm > 0.0 && got.norm <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn tiny_filter_returns_kernel_origin() {
        let levels = [(0.5, -1.2), (0.5, 0.7)];
        let kernel = kernel_of(&levels, 0.01, 5001);
        let got = quadrature_filtered_pair(&kernel, &FilterParams::new(3.0, 1e-4).unwrap()).unwrap();
        assert!((got.norm - 1.0).abs() < 1e-3);
        assert!((got.energy - (-0.25)).abs() < 1e-3);
    }

    #[test]
    fn unfolded_imaginary_part_vanishes() {
        let levels = [(0.2, -2.0), (0.5, 0.3), (0.3, 1.7)];
        let kernel = kernel_of(&levels, 0.01, 3001);
        let p = FilterParams::new(0.2, 2.0).unwrap();
        let (n, h) = quadrature_unfolded(&kernel, &p).unwrap();
        let folded = quadrature_filtered_pair(&kernel, &p).unwrap();
        assert!(n.im.abs() <= 1e-10 && h.im.abs() <= 1e-10);
        assert!((n.re - folded.norm).abs() < 1e-13);
        assert!((h.re - folded.energy).abs() < 1e-13);
    }

    #[test]
    fn quadrature_is_linear() {
        let a = kernel_of(&[(0.6, -0.3), (0.4, 1.1)], 0.01, 2001);
        let b = kernel_of(&[(0.2, 0.8), (0.8, -1.5)], 0.01, 2001);
        let sum = a.add(&b).unwrap();
        let p = FilterParams::new(-0.4, 1.7).unwrap();
        let qa = quadrature_filtered_pair(&a, &p).unwrap();
        let qb = quadrature_filtered_pair(&b, &p).unwrap();
        let qs = quadrature_filtered_pair(&sum, &p).unwrap();
        assert!((qs.norm - qa.norm - qb.norm).abs() < 1e-14);
        assert!((qs.energy - qa.energy - qb.energy).abs() < 1e-14);
    }

    #[test]
    fn truncation_flag() {
        let kernel = kernel_of(&[(1.0, 0.0)], 0.01, 1001);
        let short = quadrature_filtered_pair(&kernel, &FilterParams::new(0.0, 5.0).unwrap()).unwrap();
        assert!(short.is_truncated());
        let ok = quadrature_filtered_pair(&kernel, &FilterParams::new(0.0, 1.0).unwrap()).unwrap();
        assert!(!ok.is_truncated());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(FilterParams::new(0.0, 0.0).is_err());
        assert!(FilterParams::new(0.0, -1.0).is_err());
        let empty = KernelTrace::new(0.01, vec![], vec![]).unwrap();
        let p = FilterParams::new(0.0, 1.0).unwrap();
        assert!(quadrature_filtered_pair(&empty, &p).is_err());
        let bad = FilterParams { target_energy: 0.0, filtering_time: 0.0 };
        let k = kernel_of(&[(1.0, 0.0)], 0.01, 10);
        assert!(quadrature_filtered_pair(&k, &bad).is_err());
    }

    #[test]
    fn window_width_times_tau() {
        let p = FilterParams::new(0.0, 1.0).unwrap();
        assert!((p.window_width() - 1.7724538509055159).abs() < 1e-15);
    }
}

//! The stochastic trace pipeline: prepare, evolve, filter, aggregate.
//!
//! Each sample `r` is a pure function of `(base_seed, r)`. Samples run in
//! parallel; every aggregate is reduced in sample-index order, so results do
//! not depend on the thread count.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::evolve::{evolve_and_record, KernelTrace, TrotterPlan};
use crate::exact::{full_diagonalize, DiagOptions};
use crate::filter::{quadrature_filtered_pair, FilterParams, TRUNCATION_WARN};
use crate::model::{Boundary, SpinChainModel};
use crate::random::{prepare_random_state, EnsembleKind, RandomStateSpec};
use crate::thermo::{derive_thermo, ThermoPoint, TraceInput};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SampleOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub keep_kernels: bool,
}

/// Per-sample filtered norms and energies over an `(E, tau)` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub kind: EnsembleKind,
    pub n_qubits: usize,
    pub coupling: f64,
    pub boundary: Boundary,
    pub base_seed: u64,
    pub plan: TrotterPlan,
    pub grid: Vec<FilterParams>,
    n_samples: usize,
    // row-major [r][grid point]
    norms: Vec<f64>,
    energies: Vec<f64>,
    truncation: Vec<f64>,
    kernels: Option<Vec<KernelTrace>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleRecord {
    pub r: usize,
    pub target_energy: f64,
    pub filtering_time: f64,
    pub norm: f64,
    pub energy: f64,
}

impl SampleSet {
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn dim(&self) -> f64 {
        (1u64 << self.n_qubits) as f64
    }

    fn column<'a>(&'a self, data: &'a [f64], point: usize) -> impl Iterator<Item = f64> + 'a {
        let g = self.grid.len();
        (0..self.n_samples).map(move |r| data[r * g + point])
    }

    /// `N_{tau,r}(E)` for every sample at grid point `point`.
    pub fn norms(&self, point: usize) -> Vec<f64> {
        self.column(&self.norms, point).collect()
    }

    pub fn energies(&self, point: usize) -> Vec<f64> {
        self.column(&self.energies, point).collect()
    }

    /// Truncation bound of the Gaussian window at grid point `point`.
    pub fn truncation_bound(&self, point: usize) -> f64 {
        self.truncation[point]
    }

    pub fn kernels(&self) -> Option<&[KernelTrace]> {
        self.kernels.as_deref()
    }

    pub fn records(&self) -> impl Iterator<Item = SampleRecord> + '_ {
        let g = self.grid.len();
        (0..self.n_samples * g).map(move |i| {
            let p = self.grid[i % g];
            SampleRecord {
                r: i / g,
                target_energy: p.target_energy,
                filtering_time: p.filtering_time,
                norm: self.norms[i],
                energy: self.energies[i],
            }
        })
    }

    /// Same samples in a different order; used to check order independence.
    pub fn permuted(&self, order: &[usize]) -> Result<SampleSet> {
        let mut seen = vec![false; self.n_samples];
        if order.len() != self.n_samples || order.iter().any(|&r| r >= self.n_samples || std::mem::replace(&mut seen[r], true)) {
            return Err(Error::InvalidParameter("not a permutation of the sample indices".into()));
        }
        let g = self.grid.len();
        let gather = |data: &[f64]| order.iter().flat_map(|&r| data[r * g..(r + 1) * g].iter().copied()).collect();
        Ok(SampleSet {
            norms: gather(&self.norms),
            energies: gather(&self.energies),
            kernels: self.kernels.as_ref().map(|k| order.iter().map(|&r| k[r].clone()).collect()),
            ..self.clone()
        })
    }

    /// Columns `r,E,tau,N_re,H_re,truncation` after `#` metadata lines.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# code=filtered-tpq {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "# seed={}", self.base_seed)?;
        writeln!(w, "# n={}", self.n_qubits)?;
        writeln!(w, "# j={:?}", self.coupling)?;
        writeln!(w, "# boundary={}", self.boundary)?;
        writeln!(w, "# kind={}", self.kind)?;
        writeln!(w, "# dt={:?}", self.plan.dt)?;
        writeln!(w, "# steps={}", self.plan.n_steps)?;
        writeln!(w, "# stride={}", self.plan.stride)?;
        writeln!(w, "# samples={}", self.n_samples)?;
        writeln!(w, "r,E,tau,N_re,H_re,truncation")?;
        let g = self.grid.len();
        for (i, rec) in self.records().enumerate() {
            writeln!(
                w,
                "{},{:?},{:?},{:?},{:?},{:?}",
                rec.r,
                rec.target_energy,
                rec.filtering_time,
                rec.norm,
                rec.energy,
                self.truncation[i % g]
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<SampleSet> {
        let mut meta = std::collections::HashMap::new();
        let mut rows: Vec<(usize, f64, f64, f64, f64, f64)> = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let perr = |message: String| Error::Parse { line: n + 1, message };
            if let Some(m) = line.strip_prefix('#') {
                if let Some((k, v)) = m.trim().split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if line.is_empty() || line.starts_with("r,") {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(perr(format!("expected 6 columns, found {}", f.len())));
            }
            let r = f[0].parse::<usize>().map_err(|e| perr(e.to_string()))?;
            let v: Vec<f64> = f[1..]
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| perr(e.to_string())))
                .collect::<Result<_>>()?;
            rows.push((r, v[0], v[1], v[2], v[3], v[4]));
        }
        let get = |k: &str| {
            meta.get(k)
                .cloned()
                .ok_or_else(|| Error::Parse { line: 0, message: format!("missing '{k}' header") })
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?.parse::<f64>().map_err(|e| Error::Parse { line: 0, message: format!("{k}: {e}") })
        };
        let int = |k: &str| -> Result<u64> {
            get(k)?.parse::<u64>().map_err(|e| Error::Parse { line: 0, message: format!("{k}: {e}") })
        };
        let n_samples = int("samples")? as usize;
        if n_samples == 0 || !rows.len().is_multiple_of(n_samples) {
            return Err(Error::Parse { line: 0, message: "row count is not a multiple of the sample count".into() });
        }
        let g = rows.len() / n_samples;
        let mut grid = Vec::with_capacity(g);
        let mut truncation = Vec::with_capacity(g);
        for row in &rows[..g] {
            grid.push(FilterParams { target_energy: row.1, filtering_time: row.2 });
            truncation.push(row.5);
        }
        for (i, row) in rows.iter().enumerate() {
            let p = grid[i % g];
            if row.0 != i / g || row.1 != p.target_energy || row.2 != p.filtering_time {
                return Err(Error::Parse { line: 0, message: format!("row {i} out of order") });
            }
        }
        Ok(SampleSet {
            kind: get("kind")?.parse()?,
            n_qubits: int("n")? as usize,
            coupling: num("j")?,
            boundary: get("boundary")?.parse()?,
            base_seed: int("seed")?,
            plan: TrotterPlan {
                dt: num("dt")?,
                n_steps: int("steps")? as usize,
                stride: int("stride")? as usize,
            },
            grid,
            n_samples,
            norms: rows.iter().map(|r| r.3).collect(),
            energies: rows.iter().map(|r| r.4).collect(),
            truncation,
            kernels: None,
        })
    }
}

struct SampleOutput {
    norms: Vec<f64>,
    energies: Vec<f64>,
    kernel: Option<KernelTrace>,
}

fn run_one(
    model: &SpinChainModel,
    template: &RandomStateSpec,
    plan: &TrotterPlan,
    grid: &[FilterParams],
    r: usize,
    keep_kernel: bool,
) -> Result<SampleOutput> {
    let spec = RandomStateSpec::for_sample(template.kind, template.n_qubits, template.seed, r as u64);
    let phi = prepare_random_state(&spec)?;
    let kernel = evolve_and_record(&phi, model, plan)?;
    let mut norms = Vec::with_capacity(grid.len());
    let mut energies = Vec::with_capacity(grid.len());
    for p in grid {
        let q = quadrature_filtered_pair(&kernel, p)?;
        if !q.norm.is_finite() || !q.energy.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "non-finite filtered value at E={}, tau={}",
                p.target_energy, p.filtering_time
            )));
        }
        norms.push(q.norm);
        energies.push(q.energy);
    }
    Ok(SampleOutput { norms, energies, kernel: keep_kernel.then_some(kernel) })
}

/// Runs `n_samples` independent samples seeded from `template.seed` and
/// filters each kernel at every grid point.
pub fn run_samples(
    model: &SpinChainModel,
    template: &RandomStateSpec,
    plan: &TrotterPlan,
    grid: &[FilterParams],
    n_samples: usize,
    options: SampleOptions,
) -> Result<SampleSet> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("at least one sample required".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty (E, tau) grid".into()));
    }
    if template.n_qubits != model.n_qubits() {
        return Err(Error::DimensionMismatch { expected: model.n_qubits(), found: template.n_qubits });
    }
    for p in grid {
        FilterParams::new(p.target_energy, p.filtering_time)?;
    }
    plan.validate()?;

    let work = || -> Vec<Result<SampleOutput>> {
        (0..n_samples)
            .into_par_iter()
            .map(|r| run_one(model, template, plan, grid, r, options.keep_kernels))
            .collect()
    };
    let outputs = match options.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let g = grid.len();
    let mut norms = Vec::with_capacity(n_samples * g);
    let mut energies = Vec::with_capacity(n_samples * g);
    let mut kernels = options.keep_kernels.then(|| Vec::with_capacity(n_samples));
    for (r, out) in outputs.into_iter().enumerate() {
        let out = out.map_err(|e| Error::SampleFailed { index: r, reason: e.to_string() })?;
        norms.extend(out.norms);
        energies.extend(out.energies);
        if let (Some(ks), Some(k)) = (kernels.as_mut(), out.kernel) {
            ks.push(k);
        }
    }
    let t_max = plan.t_max();
    let truncation = grid
        .iter()
        .map(|p| (-t_max * t_max / (4.0 * p.filtering_time * p.filtering_time)).exp())
        .collect();
    Ok(SampleSet {
        kind: template.kind,
        n_qubits: model.n_qubits(),
        coupling: model.coupling(),
        boundary: model.boundary(),
        base_seed: template.seed,
        plan: *plan,
        grid: grid.to_vec(),
        n_samples,
        norms,
        energies,
        truncation,
        kernels,
    })
}

/// `Tr[G] ~ D <<N>>`, `Tr[HG] ~ D <<H>>` with standard errors of the mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEstimate {
    pub target_energy: f64,
    pub filtering_time: f64,
    pub n_samples: usize,
    pub tr_g: f64,
    pub tr_hg: f64,
    /// NaN when fewer than two samples.
    pub tr_g_sem: f64,
    pub tr_hg_sem: f64,
    /// Covariance of the two estimates.
    pub cov_g_hg: f64,
    pub truncated: bool,
}

impl TraceEstimate {
    pub fn sem_defined(&self) -> bool {
        self.n_samples >= 2
    }

    pub fn to_trace_input(&self) -> TraceInput {
        let finite = |x: f64| if x.is_finite() { x } else { 0.0 };
        TraceInput {
            target_energy: self.target_energy,
            filtering_time: self.filtering_time,
            tr_g: self.tr_g,
            tr_hg: self.tr_hg,
            tr_h2g: None,
            tr_g_sem: finite(self.tr_g_sem),
            tr_hg_sem: finite(self.tr_hg_sem),
            cov_g_hg: finite(self.cov_g_hg),
        }
    }

    /// Derived quantities; uncertainties are NaN when the SEM is undefined.
    pub fn thermo(&self) -> ThermoPoint {
        let mut p = derive_thermo(self.to_trace_input());
        if !self.sem_defined() {
            p.dos_sem = f64::NAN;
            p.entropy_sem = f64::NAN;
            p.energy_sem = f64::NAN;
            p.beta_sem = f64::NAN;
        }
        p
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample covariance (`R - 1` denominator).
fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn estimate_traces(samples: &SampleSet, point: usize) -> Result<TraceEstimate> {
    let p = *samples
        .grid
        .get(point)
        .ok_or_else(|| Error::InvalidParameter(format!("grid point {point} not present")))?;
    let n = samples.norms(point);
    let h = samples.energies(point);
    let d = samples.dim();
    let r = samples.n_samples() as f64;
    let (sg, sh, c) = if samples.n_samples() >= 2 {
        let vg = covariance(&n, &n);
        let vh = covariance(&h, &h);
        let cgh = covariance(&n, &h);
        (d * (vg / r).sqrt(), d * (vh / r).sqrt(), d * d * cgh / r)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    Ok(TraceEstimate {
        target_energy: p.target_energy,
        filtering_time: p.filtering_time,
        n_samples: samples.n_samples(),
        tr_g: d * mean(&n),
        tr_hg: d * mean(&h),
        tr_g_sem: sg,
        tr_hg_sem: sh,
        cov_g_hg: c,
        truncated: samples.truncation_bound(point) >= TRUNCATION_WARN,
    })
}

/// Estimates at every grid point, in grid order.
pub fn estimate_all(samples: &SampleSet) -> Vec<TraceEstimate> {
    (0..samples.grid.len())
        .map(|i| estimate_traces(samples, i).expect("index in range"))
        .collect()
}

/// Leave-one-out estimates of the derived quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JackknifeThermo {
    pub entropy: f64,
    pub entropy_err: f64,
    pub energy: f64,
    pub energy_err: f64,
    pub beta: f64,
    pub beta_err: f64,
}

pub fn jackknife_thermo(samples: &SampleSet, point: usize) -> Result<JackknifeThermo> {
    let p = *samples
        .grid
        .get(point)
        .ok_or_else(|| Error::InvalidParameter(format!("grid point {point} not present")))?;
    let r = samples.n_samples();
    if r < 2 {
        return Err(Error::InvalidParameter("jackknife needs at least two samples".into()));
    }
    let n = samples.norms(point);
    let h = samples.energies(point);
    let d = samples.dim();
    let sum_n: f64 = n.iter().sum();
    let sum_h: f64 = h.iter().sum();
    let rf = r as f64;
    let derive = |g: f64, hg: f64| derive_thermo(TraceInput {
        target_energy: p.target_energy,
        filtering_time: p.filtering_time,
        tr_g: g,
        tr_hg: hg,
        ..Default::default()
    });
    let full = derive(d * sum_n / rf, d * sum_h / rf);
    let loo: Vec<ThermoPoint> = (0..r)
        .map(|i| derive(d * (sum_n - n[i]) / (rf - 1.0), d * (sum_h - h[i]) / (rf - 1.0)))
        .collect();
    let err = |f: &dyn Fn(&ThermoPoint) -> f64| {
        let xs: Vec<f64> = loo.iter().map(f).collect();
        let m = mean(&xs);
        ((rf - 1.0) / rf * xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>()).sqrt()
    };
    Ok(JackknifeThermo {
        entropy: full.entropy,
        entropy_err: err(&|t| t.entropy),
        energy: full.energy,
        energy_err: err(&|t| t.energy),
        beta: full.beta,
        beta_err: err(&|t| t.beta),
    })
}

/// Sample variance of `N_r` against the random-phase covariance formula
/// `(1/D^2) [Tr(G^2) - sum_i G_ii^2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceDiagnostic {
    pub empirical: f64,
    /// Bootstrap standard deviation of `empirical`.
    pub bootstrap_sigma: f64,
    pub analytic: f64,
    /// The formula is exact only for `FullPhase`.
    pub analytic_exact: bool,
    pub mean: f64,
}

pub const MAX_DIAGNOSTIC_QUBITS: usize = 10;
const BOOTSTRAP_RESAMPLES: usize = 400;

/// Draws `n_samples` states of `kind` and evaluates `N_r = <phi_r|G|phi_r>`
/// with the exact filter operator.
pub fn covariance_diagnostic(
    model: &SpinChainModel,
    kind: EnsembleKind,
    energy: f64,
    tau: f64,
    n_samples: usize,
    base_seed: u64,
) -> Result<CovarianceDiagnostic> {
    let n = model.n_qubits();
    if n > MAX_DIAGNOSTIC_QUBITS {
        return Err(Error::Capacity { what: "covariance diagnostic", requested: n, cap: MAX_DIAGNOSTIC_QUBITS });
    }
    if n_samples < 2 {
        return Err(Error::InvalidParameter("covariance diagnostic needs at least two samples".into()));
    }
    let spectrum = full_diagonalize(model, DiagOptions::with_vectors())?;
    let g = spectrum.filter_operator(energy, tau)?;
    let d = spectrum.dim();
    let df = d as f64;

    let off_diag: f64 = (0..d)
        .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| g[i * d + j] * g[i * d + j])
        .sum();
    let analytic = off_diag / (df * df);

    let values: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let phi = prepare_random_state(&RandomStateSpec::for_sample(kind, n, base_seed, r as u64))?;
            let a = phi.amplitudes();
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..d {
                let row = &g[i * d..(i + 1) * d];
                let gi: Complex64 = row.iter().zip(a).map(|(&x, &y)| y * x).sum();
                acc += a[i].conj() * gi;
            }
            Ok(acc.re)
        })
        .collect::<Result<_>>()?;

    let empirical = covariance(&values, &values);
    let mut rng = ChaCha20Rng::seed_from_u64(base_seed ^ 0x5eed_b007);
    let mut boot = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut resample = vec![0.0; n_samples];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for x in resample.iter_mut() {
            *x = values[rng.random_range(0..n_samples)];
        }
        boot.push(covariance(&resample, &resample));
    }
    Ok(CovarianceDiagnostic {
        empirical,
        bootstrap_sigma: covariance(&boot, &boot).sqrt(),
        analytic,
        analytic_exact: kind == EnsembleKind::FullPhase,
        mean: mean(&values),
    })
}

#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! `ftpq`: microcanonical thermodynamics of the Heisenberg chain from
//! energy-filtered random-phase states.
//!
//! ```text
//! ftpq exact          --n 12 --tau-grid 0.1:5:0.1 --out runs/exact
//! ftpq sample         --n 8 --kind entangled --samples 256 --out runs/r256
//! ftpq canonical      --n 12 --beta-grid 0:2:0.1 --tau-grid 1,2,5
//! ftpq export-circuit --n 4 --kind entangled --tmax 0.02 --seed 7
//! ```

mod config;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use filtered_tpq::circuit::build_circuit;
use filtered_tpq::exact::{histogram_and_tau, DiagOptions, Spectrum, SpectrumModel};
use filtered_tpq::sampling::{estimate_all, SampleOptions};
use filtered_tpq::thermo::{canonical_from_dos_grid, canonical_from_spectrum};
use filtered_tpq::{full_diagonalize, run_samples, FilterParams, RandomStateSpec};

use config::{RunConfig, RunFlags};

#[derive(Parser, Debug)]
#[command(name = "ftpq", version, about = "Energy-filtered random-phase thermodynamics of the Heisenberg chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact traces, histogram and cumulative state count from full diagonalization
    Exact(RunFlags),
    /// Stochastic traces from random-phase states and Trotter evolution
    Sample(RunFlags),
    /// Canonical quantities from a spectrum or a density-of-states grid
    Canonical(RunFlags),
    /// Gate list preparing one random state and evolving it
    ExportCircuit(RunFlags),
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Exact(f) => run_exact(&f.resolve()?),
        Command::Sample(f) => run_sample(&f.resolve()?),
        Command::Canonical(f) => run_canonical(&f.resolve()?),
        Command::ExportCircuit(f) => export_circuit(&f.resolve()?),
    }
}

struct CsvFile {
    path: PathBuf,
    out: BufWriter<fs::File>,
}

impl CsvFile {
    fn create(dir: &Path, name: &str, header: &[String], columns: &str) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        let mut out = BufWriter::new(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        for h in header {
            writeln!(out, "{h}")?;
        }
        writeln!(out, "{columns}")?;
        Ok(Self { path, out })
    }

    fn row(&mut self, fields: &[String]) -> Result<()> {
        writeln!(self.out, "{}", fields.join(","))?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        eprintln!("wrote {}", self.path.display());
        Ok(())
    }
}

fn f(x: f64) -> String {
    format!("{x:?}")
}

fn load_or_compute_spectrum(cfg: &RunConfig) -> Result<Spectrum> {
    let model = cfg.model()?;
    if let Some(path) = &cfg.spectrum {
        if path.exists() {
            let s = if path.extension().is_some_and(|e| e == "bin") {
                Spectrum::load_binary(path)?
            } else {
                Spectrum::load_csv(path)?
            };
            if *s.model() != SpectrumModel::from_model(&model) {
                bail!("spectrum cache {} was computed for a different model", path.display());
            }
            return Ok(s);
        }
    }
    let s = full_diagonalize(&model, DiagOptions::default())?;
    if let Some(path) = &cfg.spectrum {
        if path.extension().is_some_and(|e| e == "bin") {
            s.save_binary(path)?;
        } else {
            s.save_csv(path)?;
        }
    }
    Ok(s)
}

fn run_exact(cfg: &RunConfig) -> Result<()> {
    let spectrum = load_or_compute_spectrum(cfg)?;
    let mut header = cfg.header("exact");
    header.push(format!("# e0={:?}", spectrum.ground_energy()));
    header.push(format!("# emax={:?}", spectrum.max_energy()));

    let mut csv = CsvFile::create(
        &cfg.out,
        "exact.csv",
        &header,
        "E,tau,trG,trHG,trH2G,g,S,beta,energy,sigma,deltaE",
    )?;
    for &e in &cfg.energies {
        for &tau in &cfg.taus {
            let p = spectrum.thermo(e, tau);
            let t = p.traces;
            csv.row(&[
                f(e),
                f(tau),
                f(t.tr_g),
                f(t.tr_hg),
                f(t.tr_h2g.unwrap_or(f64::NAN)),
                f(p.dos),
                f(p.entropy),
                f(p.beta),
                f(p.energy),
                f(p.sigma),
                f(p.window_width),
            ])?;
        }
    }
    csv.finish()?;

    let hist = histogram_and_tau(&spectrum, cfg.nbin)?;
    let mut hh = header.clone();
    hh.push(format!("# nbin={}", cfg.nbin));
    hh.push(format!("# delta_e_bin={:?}", hist.bin_width));
    hh.push(format!("# tau_bin={:?}", hist.tau_bin));
    let mut csv = CsvFile::create(&cfg.out, "histogram.csv", &hh, "bin_center,count,trG_at_center,tau_bin")?;
    for (c, n) in hist.centers.iter().zip(&hist.counts) {
        let t = spectrum.traces(*c, hist.tau_bin);
        csv.row(&[f(*c), n.to_string(), f(t.tr_g), f(hist.tau_bin)])?;
    }
    csv.finish()?;

    let mut csv = CsvFile::create(&cfg.out, "cumulative.csv", &header, "E,tau,W")?;
    for &e in &cfg.energies {
        for &tau in &cfg.taus {
            csv.row(&[f(e), f(tau), f(spectrum.cumulative_states(e, tau))])?;
        }
    }
    csv.finish()
}

fn run_sample(cfg: &RunConfig) -> Result<()> {
    let model = cfg.model()?;
    let plan = cfg.plan()?;
    let grid: Vec<FilterParams> = cfg
        .energies
        .iter()
        .flat_map(|&e| cfg.taus.iter().map(move |&t| FilterParams::new(e, t)))
        .collect::<filtered_tpq::Result<_>>()?;
    let template = RandomStateSpec::new(cfg.kind, cfg.n, cfg.seed);
    let options = SampleOptions { threads: cfg.threads, keep_kernels: false };
    let set = run_samples(&model, &template, &plan, &grid, cfg.samples, options)?;

    let mut header = cfg.header("sample");
    header.push(format!("# kind={}", cfg.kind));
    header.push(format!("# seed={}", cfg.seed));
    header.push(format!("# samples={}", cfg.samples));
    header.push(format!("# dt={:?}", plan.dt));
    header.push(format!("# steps={}", plan.n_steps));
    header.push(format!("# stride={}", plan.stride));
    let mut csv = CsvFile::create(
        &cfg.out,
        "sample.csv",
        &header,
        "E,tau,trG,trG_sem,trHG,trHG_sem,g,g_sem,S,S_sem,beta,beta_sem,energy,energy_sem,deltaE,status",
    )?;
    for est in estimate_all(&set) {
        let p = est.thermo();
        let mut status = Vec::new();
        if !p.valid {
            status.push("invalid");
        }
        if !est.sem_defined() {
            status.push("sem-undefined");
        }
        if est.truncated {
            status.push("truncated");
        }
        let status = if status.is_empty() { "ok".to_string() } else { status.join("|") };
        csv.row(&[
            f(est.target_energy),
            f(est.filtering_time),
            f(est.tr_g),
            f(est.tr_g_sem),
            f(est.tr_hg),
            f(est.tr_hg_sem),
            f(p.dos),
            f(p.dos_sem),
            f(p.entropy),
            f(p.entropy_sem),
            f(p.beta),
            f(p.beta_sem),
            f(p.energy),
            f(p.energy_sem),
            f(p.window_width),
            status,
        ])?;
    }
    csv.finish()?;

    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("samples.csv");
    let mut out = BufWriter::new(fs::File::create(&path)?);
    set.write_csv(&mut out)?;
    out.flush()?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// `(E, g)` rows at filtering time `tau` from a CSV with `E`, `tau`, `g` columns.
fn read_dos_grid(path: &Path, tau: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines.next().context("density-of-states file has no header row")?.split(',').collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .with_context(|| format!("{} has no '{name}' column", path.display()))
    };
    let (ce, ct, cg) = (col("E")?, col("tau")?, col("g")?);
    let mut rows = Vec::new();
    for line in lines {
        let v: Vec<&str> = line.split(',').collect();
        let num = |i: usize| -> Result<f64> {
            v.get(i)
                .context("short row")?
                .trim()
                .parse::<f64>()
                .with_context(|| format!("bad number in row '{line}'"))
        };
        let t = num(ct)?;
        if (t - tau).abs() <= 1e-12 * tau.abs().max(1.0) {
            rows.push((num(ce)?, num(cg)?));
        }
    }
    if rows.len() < 2 {
        bail!("{} has fewer than two rows at tau={tau}", path.display());
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(rows.into_iter().unzip())
}

fn run_canonical(cfg: &RunConfig) -> Result<()> {
    let columns = "beta,tau,Z_can_tau,E_can_tau,S_can_tau,Z_can,E_can,S_can,truncated";
    if let Some(grid_path) = &cfg.g_grid {
        let mut header = cfg.header("canonical");
        header.push(format!("# source={}", grid_path.display()));
        let mut csv = CsvFile::create(&cfg.out, "canonical.csv", &header, columns)?;
        for &tau in &cfg.taus {
            let (energies, dos) = read_dos_grid(grid_path, tau)?;
            for &beta in &cfg.betas {
                let Some(p) = canonical_from_dos_grid(&energies, &dos, beta, tau) else {
                    bail!("partition function vanishes at beta={beta}, tau={tau}");
                };
                if p.truncated {
                    eprintln!("warning: energy grid does not cover the integrand at beta={beta}, tau={tau}");
                }
                let a = beta * beta / (4.0 * tau * tau);
                let e_can = p.e_can_tau + beta / (2.0 * tau * tau);
                csv.row(&[
                    f(beta),
                    f(tau),
                    f(p.ln_z_can_tau.exp()),
                    f(p.e_can_tau),
                    f(p.s_can_tau),
                    f((p.ln_z_can_tau - a).exp()),
                    f(e_can),
                    f(p.s_can_tau + a),
                    p.truncated.to_string(),
                ])?;
            }
        }
        return csv.finish();
    }

    let spectrum = load_or_compute_spectrum(cfg)?;
    let mut header = cfg.header("canonical");
    header.push("# source=spectrum".into());
    let mut csv = CsvFile::create(&cfg.out, "canonical.csv", &header, columns)?;
    for &tau in &cfg.taus {
        for &beta in &cfg.betas {
            let c = canonical_from_spectrum(spectrum.eigenvalues(), beta, tau);
            csv.row(&[
                f(beta),
                f(tau),
                f(c.z_can_tau()),
                f(c.e_can_tau),
                f(c.s_can_tau),
                f(c.z_can()),
                f(c.e_can),
                f(c.s_can),
                "false".into(),
            ])?;
        }
    }
    csv.finish()
}

fn export_circuit(cfg: &RunConfig) -> Result<()> {
    let model = cfg.model()?;
    let plan = cfg.plan()?;
    let spec = RandomStateSpec::new(cfg.kind, cfg.n, cfg.seed);
    let circuit = build_circuit(&spec, &model, &plan)?;
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("circuit.txt");
    let mut out = BufWriter::new(fs::File::create(&path)?);
    circuit.write(&mut out)?;
    out.flush()?;
    eprintln!("wrote {} ({} gates)", path.display(), circuit.gates.len());
    Ok(())
}

//! Run configuration: a `key=value` file overlaid by command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use filtered_tpq::{Boundary, EnsembleKind, SpinChainModel, TrotterPlan};

/// Flags shared by every command. Each may also be given as `key=value` in
/// the `--config` file, with the flag name as key (`e-grid=0:1:0.25`).
#[derive(Args, Debug, Clone, Default)]
pub struct RunFlags {
    /// key=value configuration file; flags override its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Chain length
    #[arg(long)]
    pub n: Option<String>,
    /// Coupling J
    #[arg(long)]
    pub j: Option<String>,
    /// periodic | open
    #[arg(long)]
    pub boundary: Option<String>,
    /// full | product | entangled | discrete:<l>
    #[arg(long)]
    pub kind: Option<String>,
    /// Trotter time step
    #[arg(long)]
    pub dt: Option<String>,
    /// Total evolution time
    #[arg(long)]
    pub tmax: Option<String>,
    /// Kernel recording stride (must divide the step count)
    #[arg(long)]
    pub stride: Option<String>,
    /// Target energies per site E/(N J): list `a,b,c` or range `start:stop:step`
    #[arg(long = "e-grid", allow_hyphen_values = true)]
    pub e_grid: Option<String>,
    /// Interpret the energy grid as absolute energies
    #[arg(long = "e-absolute")]
    pub e_absolute: bool,
    /// Filtering times tau J: list or range
    #[arg(long = "tau-grid")]
    pub tau_grid: Option<String>,
    /// Inverse temperatures beta J for `canonical`: list or range
    #[arg(long = "beta-grid", allow_hyphen_values = true)]
    pub beta_grid: Option<String>,
    /// Number of random samples R
    #[arg(long)]
    pub samples: Option<String>,
    /// Base seed
    #[arg(long)]
    pub seed: Option<String>,
    /// Histogram bin count
    #[arg(long)]
    pub nbin: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub threads: Option<String>,
    /// Spectrum cache (.bin or .csv); loaded if present, written otherwise
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    /// Density-of-states file (E, tau, g columns) for `canonical` without a spectrum
    #[arg(long = "g-grid")]
    pub g_grid: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "n", "j", "boundary", "kind", "dt", "tmax", "stride", "e-grid", "e-absolute", "tau-grid", "beta-grid",
    "samples", "seed", "nbin", "out", "threads", "spectrum", "g-grid",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub j: f64,
    pub boundary: Boundary,
    pub kind: EnsembleKind,
    pub dt: f64,
    pub tmax: f64,
    pub stride: usize,
    /// Absolute target energies.
    pub energies: Vec<f64>,
    pub taus: Vec<f64>,
    pub betas: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub nbin: usize,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub spectrum: Option<PathBuf>,
    pub g_grid: Option<PathBuf>,
}

impl RunConfig {
    pub fn model(&self) -> Result<SpinChainModel> {
        Ok(SpinChainModel::new(self.n, self.j, self.boundary)?)
    }

    pub fn plan(&self) -> Result<TrotterPlan> {
        let plan = TrotterPlan::from_t_max(self.dt, self.tmax)?.with_stride(self.stride);
        plan.validate()?;
        Ok(plan)
    }

    /// `#` metadata lines describing the run.
    pub fn header(&self, command: &str) -> Vec<String> {
        vec![
            format!("# ftpq {} {command}", env!("CARGO_PKG_VERSION")),
            format!("# n={}", self.n),
            format!("# j={:?}", self.j),
            format!("# boundary={}", self.boundary),
        ]
    }
}

fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), i + 1))?;
        let k = k.trim().replace('_', "-");
        if !KEYS.contains(&k.as_str()) {
            bail!("{}:{}: unknown key '{k}'", path.display(), i + 1);
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(map)
}

/// Parses `a,b,c`, `start:stop:step` (inclusive of `stop`) or a mix of both.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.len() {
            1 => out.push(parse_f64(item)?),
            3 => {
                let (a, b, h) = (parse_f64(parts[0])?, parse_f64(parts[1])?, parse_f64(parts[2])?);
                if !(h > 0.0) {
                    bail!("range step must be positive in '{item}'");
                }
                if b < a {
                    bail!("range end below start in '{item}'");
                }
                let count = ((b - a) / h + 1e-9).floor() as usize;
                out.extend((0..=count).map(|k| a + k as f64 * h));
            }
            _ => bail!("bad grid item '{item}': use a value or start:stop:step"),
        }
    }
    if out.is_empty() {
        bail!("empty grid '{text}'");
    }
    Ok(out)
}

fn parse_f64(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().with_context(|| format!("'{s}' is not a number"))?;
    if !v.is_finite() {
        bail!("'{s}' is not finite");
    }
    Ok(v)
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        other => bail!("'{other}' is not a boolean"),
    }
}

impl RunFlags {
    pub fn resolve(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(p) => parse_config_file(p)?,
            None => BTreeMap::new(),
        };
        let pick = |flag: &Option<String>, key: &str, default: &str| -> String {
            flag.clone()
                .or_else(|| file.get(key).cloned())
                .unwrap_or_else(|| default.to_string())
        };
        let num = |flag: &Option<String>, key: &str, default: &str| -> Result<f64> {
            parse_f64(&pick(flag, key, default)).with_context(|| format!("--{key}"))
        };
        let int = |flag: &Option<String>, key: &str, default: &str| -> Result<u64> {
            pick(flag, key, default)
                .trim()
                .parse::<u64>()
                .with_context(|| format!("--{key} expects a non-negative integer"))
        };
        let path = |flag: &Option<PathBuf>, key: &str| flag.clone().or_else(|| file.get(key).map(PathBuf::from));

        let n = int(&self.n, "n", "12")? as usize;
        let j = num(&self.j, "j", "1")?;
        let e_absolute = self.e_absolute || file.get("e-absolute").map(|s| parse_bool(s)).transpose()?.unwrap_or(false);
        let e_values = parse_grid(&pick(&self.e_grid, "e-grid", "-0.25,0.125,0.5,0.875")).context("--e-grid")?;
        let scale = if e_absolute { 1.0 } else { n as f64 * j };
        let taus = parse_grid(&pick(&self.tau_grid, "tau-grid", "1")).context("--tau-grid")?;
        if let Some(t) = taus.iter().find(|t| !(**t > 0.0)) {
            bail!("--tau-grid: filtering times must be positive, got {t}");
        }
        let threads = match pick(&self.threads, "threads", "").trim() {
            "" => None,
            t => Some(t.parse::<usize>().context("--threads")?).filter(|&t| t > 0),
        };
        Ok(RunConfig {
            n,
            j,
            boundary: pick(&self.boundary, "boundary", "periodic").parse()?,
            kind: pick(&self.kind, "kind", "entangled").parse()?,
            dt: num(&self.dt, "dt", "0.01")?,
            tmax: num(&self.tmax, "tmax", "50")?,
            stride: int(&self.stride, "stride", "1")? as usize,
            energies: e_values.iter().map(|e| e * scale).collect(),
            taus,
            betas: parse_grid(&pick(&self.beta_grid, "beta-grid", "0:2:0.25")).context("--beta-grid")?,
            samples: int(&self.samples, "samples", "64")? as usize,
            seed: int(&self.seed, "seed", "1")?,
            nbin: int(&self.nbin, "nbin", "32")? as usize,
            out: path(&self.out, "out").unwrap_or_else(|| PathBuf::from(".")),
            threads,
            spectrum: path(&self.spectrum, "spectrum"),
            g_grid: path(&self.g_grid, "g-grid"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("1,2.5,-3").unwrap(), vec![1.0, 2.5, -3.0]);
        let r = parse_grid("0.1:0.5:0.1").unwrap();
        assert_eq!(r.len(), 5);
        assert!((r[4] - 0.5).abs() < 1e-12);
        assert_eq!(parse_grid("0:1:0.5,3").unwrap(), vec![0.0, 0.5, 1.0, 3.0]);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("ftpq-config-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        fs::write(&path, "# comment\nn = 8\nkind=product\ntau_grid=1,2 # trailing\nseed=5\n").unwrap();
        let flags = RunFlags { config: Some(path.clone()), seed: Some("9".into()), ..Default::default() };
        let c = flags.resolve().unwrap();
        assert_eq!(c.n, 8);
        assert_eq!(c.kind, EnsembleKind::ProductPhase);
        assert_eq!(c.taus, vec![1.0, 2.0]);
        assert_eq!(c.seed, 9);
        assert_eq!(c.energies[0], -0.25 * 8.0);

        fs::write(&path, "bogus=1\n").unwrap();
        assert!(RunFlags { config: Some(path), ..Default::default() }.resolve().is_err());
        fs::remove_dir_all(&dir).unwrap();
    }
}

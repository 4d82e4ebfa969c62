//! `key=value` study configuration.

use std::path::{Path, PathBuf};

use tfp_core::corrections::{Dim, MAX_ORDER};
use tfp_core::groundstate::GroundStateConfig;
use tfp_core::painleve::HmConfig;

use crate::error::CliError;

/// Everything a subcommand may need. Unset keys keep their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub dim: Dim,
    pub eps: Vec<f64>,
    pub order: usize,
    pub hm: HmConfig,
    pub gs: GroundStateConfig,
    /// Number of `M₀` eigenvalues computed.
    pub n_eigen: usize,
    /// Neumann/Dirichlet pairs in the scaling table.
    pub n_pairs: usize,
    /// Bohr–Sommerfeld levels compared against `M₀`.
    pub bs_levels: usize,
    pub out: PathBuf,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            dim: Dim::One,
            eps: vec![0.1, 0.05, 0.025],
            order: 2,
            hm: HmConfig::default(),
            gs: GroundStateConfig::default(),
            n_eigen: 10,
            n_pairs: 3,
            bs_levels: 8,
            out: PathBuf::from("out"),
        }
    }
}

/// Accepted keys, aliases included.
pub const KEYS: &[&str] = &[
    "d",
    "dimension",
    "eps",
    "N",
    "order",
    "tol",
    "hm_tol",
    "hm_nodes",
    "y_min",
    "y_max",
    "tail_terms",
    "hm_max_iter",
    "gs_tol",
    "gs_nodes",
    "r_max",
    "gs_max_iter",
    "n_eigen",
    "n_pairs",
    "bs_levels",
    "out",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("cannot parse {key}={value}")))
}

impl StudyConfig {
    /// Applies one `key=value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "d" | "dimension" => {
                let d: usize = parse(key, value)?;
                self.dim = Dim::try_from(d).map_err(|e| CliError::Config(e.to_string()))?;
            }
            "eps" => {
                self.eps = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s))
                    .collect::<Result<_, _>>()?;
            }
            "N" | "order" => self.order = parse(key, value)?,
            "tol" | "hm_tol" => self.hm.tol = parse(key, value)?,
            "hm_nodes" => self.hm.n_nodes = parse(key, value)?,
            "y_min" => self.hm.y_min = parse(key, value)?,
            "y_max" => self.hm.y_max = parse(key, value)?,
            "tail_terms" => self.hm.tail_terms = parse(key, value)?,
            "hm_max_iter" => self.hm.max_iter = parse(key, value)?,
            "gs_tol" => self.gs.tol = parse(key, value)?,
            "gs_nodes" => self.gs.n_nodes = parse(key, value)?,
            "r_max" => self.gs.r_max = parse(key, value)?,
            "gs_max_iter" => self.gs.max_iter = parse(key, value)?,
            "n_eigen" => self.n_eigen = parse(key, value)?,
            "n_pairs" => self.n_pairs = parse(key, value)?,
            "bs_levels" => self.bs_levels = parse(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            _ => return Err(CliError::Config(format!("unknown key '{key}' (known: {})", KEYS.join(", ")))),
        }
        Ok(())
    }

    /// Parses `key=value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.apply_pair(line)
                .map_err(|e| CliError::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_pair(&mut self, pair: &str) -> Result<(), CliError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected key=value, got '{pair}'")))?;
        self.set(k.trim(), v)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Checks every value against the solver preconditions, before any solve.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.hm.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.order > MAX_ORDER {
            return bad(format!("N must be <= {MAX_ORDER} (got {})", self.order));
        }
        if self.eps.is_empty() {
            return bad("eps list is empty".into());
        }
        if !(self.gs.r_max >= 2.0) {
            return bad(format!("r_max must be >= 2 (got {})", self.gs.r_max));
        }
        if self.gs.n_nodes < 3 {
            return bad("gs_nodes must be >= 3".into());
        }
        if !(self.gs.tol > 0.0) {
            return bad("gs_tol must be positive".into());
        }
        let h = self.gs.r_max / (self.gs.n_nodes - 1) as f64;
        for &e in &self.eps {
            if !(e > 0.0 && e <= 0.5) {
                return bad(format!("eps values must lie in (0, 0.5] (got {e})"));
            }
            let needed = e.powf(2.0 / 3.0) / 20.0;
            if h > needed {
                return bad(format!(
                    "gs_nodes={} too coarse for eps={e}: spacing {h:.3e} > {needed:.3e}",
                    self.gs.n_nodes
                ));
            }
        }
        if self.n_eigen == 0 || self.bs_levels == 0 || self.n_pairs == 0 {
            return bad("n_eigen, n_pairs and bs_levels must be positive".into());
        }
        if self.bs_levels > self.n_eigen || self.n_pairs > self.n_eigen {
            return bad("bs_levels and n_pairs must not exceed n_eigen".into());
        }
        Ok(())
    }

    /// ε values sorted by decreasing size, duplicates removed.
    pub fn eps_sorted(&self) -> Vec<f64> {
        let mut e = self.eps.clone();
        e.sort_by(|a, b| b.total_cmp(a));
        e.dedup();
        e
    }
}

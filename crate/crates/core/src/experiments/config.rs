use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::DimensionProfile;
use crate::measures::MetricKind;
use crate::{Error, Result};

fn default_output_dir() -> PathBuf {
    PathBuf::from("outputs")
}

fn default_cube_reference() -> usize {
    20_000
}

fn default_gaussian_reference() -> usize {
    crate::gaussian::REFERENCE_SIZE
}

fn default_small_ball_mc() -> usize {
    100_000
}

fn default_lloyd_iterations() -> usize {
    20
}

fn default_proposal_scale() -> usize {
    1
}

fn default_r() -> f64 {
    2.0
}

fn default_c_g() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

fn default_proxy_bias_size() -> usize {
    1000
}

/// Stationary law of a grid chain on `[0, 1]`, up to normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum GridTarget {
    #[default]
    Uniform,
    Gaussian {
        mean: f64,
        sd: f64,
    },
    /// One unnormalized weight per state.
    Table {
        weights: Vec<f64>,
    },
}

impl GridTarget {
    /// Weights at the `m` grid points `i / (m - 1)`.
    pub fn weights(&self, m: usize) -> Result<Vec<f64>> {
        let x = |i: usize| if m == 1 { 0.0 } else { i as f64 / (m - 1) as f64 };
        let w: Vec<f64> = match self {
            GridTarget::Uniform => vec![1.0; m],
            GridTarget::Gaussian { mean, sd } => {
                if !(*sd > 0.0) {
                    return Err(Error::invalid("target sd must be positive"));
                }
                (0..m).map(|i| (-(x(i) - mean).powi(2) / (2.0 * sd * sd)).exp()).collect()
            }
            GridTarget::Table { weights } => {
                if weights.len() != m {
                    return Err(Error::invalid(format!("{} target weights for {m} states", weights.len())));
                }
                weights.clone()
            }
        };
        if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("target weights must be positive and finite"));
        }
        Ok(w)
    }
}

/// What is sampled and what it is compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    /// Uniform law on `[0,1]^dim` against a sampled reference of `reference_size` points.
    IidCube {
        dim: usize,
        #[serde(default = "default_cube_reference")]
        reference_size: usize,
    },
    /// A finitely supported law read from a measure CSV; the law is its own reference.
    IidCustom {
        law_csv: PathBuf,
        #[serde(default = "default_metric")]
        metric: MetricKind,
    },
    /// Metropolis chain on `states` equally spaced points of `[0, 1]`.
    MarkovFinite {
        states: usize,
        #[serde(default)]
        target: GridTarget,
        #[serde(default = "default_proposal_scale")]
        proposal_scale: usize,
        /// Replace the Metropolis kernel with independent draws from the target.
        #[serde(default)]
        iid_kernel: bool,
        /// Start in this state; the stationary law when absent.
        #[serde(default)]
        initial_state: Option<usize>,
        /// Exponent of `‖d nu/d pi‖_r`.
        #[serde(default = "default_r")]
        r: f64,
    },
    /// Brownian motion through its truncated Karhunen-Loeve expansion.
    GaussianKl {
        truncation: usize,
        grid: usize,
        #[serde(default = "default_gaussian_reference")]
        reference_size: usize,
        #[serde(default = "default_small_ball_mc")]
        small_ball_mc: usize,
        #[serde(default = "default_true")]
        quantizer: bool,
        #[serde(default = "default_lloyd_iterations")]
        lloyd_iterations: usize,
        /// Size of the two independent references whose distance is reported as proxy bias.
        #[serde(default = "default_proxy_bias_size")]
        proxy_bias_size: usize,
    },
}

fn default_metric() -> MetricKind {
    MetricKind::Euclidean
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::IidCube { .. } => "iid_cube",
            Scenario::IidCustom { .. } => "iid_custom",
            Scenario::MarkovFinite { .. } => "markov_finite",
            Scenario::GaussianKl { .. } => "gaussian_kl",
        }
    }
}

/// A Monte Carlo rate experiment.
///
/// TOML example:
///
/// ```toml
/// p = 1.0
/// n_grid = [64, 128, 256]
/// replicates = 200
/// seed = 7
///
/// [scenario]
/// kind = "iid_cube"
/// dim = 3
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub p: f64,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    /// Dimension data for the i.i.d. and Markov bounds; derived from the
    /// scenario when absent.
    #[serde(default)]
    pub profile: Option<DimensionProfile>,
    /// Constant of the Gaussian bound.
    #[serde(default = "default_c_g")]
    pub c_g: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s).map_err(|e| Error::Parse(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::Parse(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(Error::invalid(format!("p = {} must be at least 1", self.p)));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(Error::invalid("n_grid must be nonempty with positive sizes"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n_grid must be strictly increasing"));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be at least 1"));
        }
        if !(self.c_g > 0.0 && self.c_g.is_finite()) {
            return Err(Error::invalid("c_g must be positive"));
        }
        if let Some(p) = &self.profile {
            p.validate()?;
        }
        match &self.scenario {
            Scenario::IidCube { dim, reference_size } => {
                if *dim == 0 || *reference_size == 0 {
                    return Err(Error::invalid("dim and reference_size must be positive"));
                }
            }
            Scenario::IidCustom { metric, .. } => {
                if *metric == MetricKind::Table {
                    return Err(Error::invalid("custom laws need a coordinate metric"));
                }
            }
            Scenario::MarkovFinite { states, proposal_scale, initial_state, r, target, .. } => {
                if *states < 2 || *proposal_scale == 0 {
                    return Err(Error::invalid("need at least 2 states and a positive proposal scale"));
                }
                if initial_state.is_some_and(|s| s >= *states) {
                    return Err(Error::invalid("initial state out of range"));
                }
                if !(*r >= 1.0) {
                    return Err(Error::invalid("r must be at least 1"));
                }
                target.weights(*states)?;
            }
            Scenario::GaussianKl { truncation, grid, reference_size, small_ball_mc, proxy_bias_size, .. } => {
                if *truncation == 0 || *grid == 0 || *reference_size == 0 || *small_ball_mc == 0 {
                    return Err(Error::invalid("Gaussian sizes must be positive"));
                }
                if *proxy_bias_size == 0 {
                    return Err(Error::invalid("proxy_bias_size must be positive"));
                }
                if self.p != 2.0 {
                    return Err(Error::invalid("the Gaussian scenario measures W_2; set p = 2"));
                }
            }
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form, output
    /// directory excluded.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("output_dir");
        }
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE: &str = r#"
p = 1.0
n_grid = [8, 16, 32]
replicates = 10
seed = 3

[scenario]
kind = "iid_cube"
dim = 2
"#;

    #[test]
    fn toml_defaults() {
        let c = ExperimentConfig::from_toml(CUBE).unwrap();
        assert_eq!(c.scenario, Scenario::IidCube { dim: 2, reference_size: 20_000 });
        assert_eq!(c.output_dir, PathBuf::from("outputs"));
        assert_eq!(c.c_g, 1.0);
    }

    #[test]
    fn json_round_trip_keeps_hash() {
        let c = ExperimentConfig::from_toml(CUBE).unwrap();
        let j = serde_json::to_string(&c).unwrap();
        let d = ExperimentConfig::from_json(&j).unwrap();
        assert_eq!(c, d);
        assert_eq!(c.hash(), d.hash());
        assert_eq!(c.hash().len(), 16);
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let c = ExperimentConfig::from_toml(CUBE).unwrap();
        let mut d = c.clone();
        d.output_dir = PathBuf::from("elsewhere");
        assert_eq!(c.hash(), d.hash());
        d.seed = 4;
        assert_ne!(c.hash(), d.hash());
    }

    #[test]
    fn rejects_bad_grids() {
        let bad = CUBE.replace("[8, 16, 32]", "[8, 8, 32]");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = CUBE.replace("replicates = 10", "replicates = 0");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = CUBE.replace("dim = 2", "dim = 2\nextra = 1");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn markov_and_gaussian_parse() {
        let m = r#"
p = 2.0
n_grid = [10, 20, 40]
replicates = 5
seed = 1
[scenario]
kind = "markov_finite"
states = 16
initial_state = 0
[scenario.target]
shape = "gaussian"
mean = 0.5
sd = 0.2
"#;
        let c = ExperimentConfig::from_toml(m).unwrap();
        assert!(matches!(c.scenario, Scenario::MarkovFinite { states: 16, r, .. } if r == 2.0));
        let g = m.replace("p = 2.0", "p = 1.0");
        let g = g.split("[scenario]").next().unwrap().to_string()
            + "[scenario]\nkind = \"gaussian_kl\"\ntruncation = 8\ngrid = 8\n";
        assert!(ExperimentConfig::from_toml(&g).is_err());
        assert!(ExperimentConfig::from_toml(&g.replace("p = 1.0", "p = 2.0")).is_ok());
    }
}

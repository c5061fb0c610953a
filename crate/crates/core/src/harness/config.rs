//! Experiment configuration, loadable from TOML and overridable from
//! the command line.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::frame::FrameConfig;
use crate::phy::{FerTable, PhyModel, DEFAULT_MARGIN};
use crate::protocols::{CodeRegistry, CodeSpec, DegreeDistribution, Scheme};
use crate::receiver::SicParams;

/// Which channel abstraction judges decode attempts.
#[derive(Debug, Clone, PartialEq)]
pub enum PhyChoice {
    /// Any collided burst is erased; decoding succeeds on clean bursts
    /// alone.
    Collision,
    /// Deterministic mutual-information threshold rule.
    SinrMi { margin: f64 },
    /// Interpolated degree-pattern error-rate table. `path` overrides
    /// the registry's table for the selected code; `fallback_margin`
    /// backs patterns the table does not cover.
    FerTable {
        path: Option<PathBuf>,
        fallback_margin: f64,
    },
}

impl PhyChoice {
    /// Parses the `--phy` argument: `collision`, `sinr-mi`, `fer-table`.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "collision" => Ok(PhyChoice::Collision),
            "sinr-mi" => Ok(PhyChoice::SinrMi {
                margin: DEFAULT_MARGIN,
            }),
            "fer-table" => Ok(PhyChoice::FerTable {
                path: None,
                fallback_margin: DEFAULT_MARGIN,
            }),
            other => Err(Error::config(format!(
                "unknown phy model '{other}' (expected collision, sinr-mi or fer-table)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PhyChoice::Collision => "collision",
            PhyChoice::SinrMi { .. } => "sinr-mi",
            PhyChoice::FerTable { .. } => "fer-table",
        }
    }
}

/// Adaptive stopping rule for one Monte Carlo point.
///
/// Frames are simulated in constant-size batches; the rule is evaluated
/// only at batch boundaries, so the set of simulated frames does not
/// depend on how the batch was scheduled across workers.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopRule {
    /// Frames always simulated before the rule is consulted.
    pub min_frames: u64,
    /// Hard cap on frames per point.
    pub max_frames: u64,
    /// Keep simulating until this many packet losses were observed
    /// (or `max_frames` is hit).
    pub min_failures: u64,
    /// Batch size between rule evaluations.
    pub batch: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            min_frames: 1_000,
            max_frames: 1_000_000,
            min_failures: 100,
            batch: 256,
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::config("stop rule batch must be positive"));
        }
        if self.max_frames < self.min_frames {
            return Err(Error::config(format!(
                "max_frames {} below min_frames {}",
                self.max_frames, self.min_frames
            )));
        }
        Ok(())
    }

    /// A small rule for quick runs and tests.
    pub fn quick(frames: u64) -> Self {
        StopRule {
            min_frames: frames,
            max_frames: frames,
            min_failures: 0,
            batch: 64,
        }
    }

    /// Fixed frame count, still batched.
    pub fn exactly(frames: u64) -> Self {
        StopRule {
            min_frames: frames,
            max_frames: frames,
            min_failures: u64::MAX,
            batch: 256,
        }
    }
}

/// Everything a single experiment needs: scheme, code, frame geometry,
/// operating point and stopping rule.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub code_id: String,
    pub num_slots: usize,
    pub esn0_db: f64,
    /// Offered normalized load G; the user count is `round(G * slots)`.
    pub load: f64,
    pub seed: u64,
    /// Signaling read-through degree.
    pub d_sig: usize,
    pub phy: PhyChoice,
    pub stop: StopRule,
}

impl ExperimentConfig {
    /// A runnable default around the main operating point.
    pub fn new(scheme: Scheme, code_id: impl Into<String>) -> Self {
        ExperimentConfig {
            scheme,
            code_id: code_id.into(),
            num_slots: 100,
            esn0_db: 10.0,
            load: 0.8,
            seed: 1,
            d_sig: 1,
            phy: PhyChoice::SinrMi {
                margin: DEFAULT_MARGIN,
            },
            stop: StopRule::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        self.stop.validate()?;
        if self.num_slots == 0 {
            return Err(Error::config("frame needs at least one slot"));
        }
        if !self.load.is_finite() || self.load < 0.0 {
            return Err(Error::config(format!("load {} not usable", self.load)));
        }
        if !self.esn0_db.is_finite() {
            return Err(Error::config("Es/N0 must be finite"));
        }
        Ok(())
    }

    pub fn frame_config(&self) -> Result<FrameConfig> {
        FrameConfig::with_slots(self.num_slots)
    }

    pub fn code(&self, registry: &CodeRegistry) -> Result<Arc<CodeSpec>> {
        registry.get(&self.code_id)
    }

    /// Users offered at load `load` on this frame size.
    pub fn users_at(&self, load: f64) -> usize {
        (load * self.num_slots as f64).round() as usize
    }

    pub fn num_users(&self) -> usize {
        self.users_at(self.load)
    }

    /// Burst count reported in result rows; the maximum degree for the
    /// irregular scheme.
    pub fn n_b(&self) -> usize {
        match &self.scheme {
            Scheme::Irsa { distribution } => distribution.max_degree(),
            other => other.fixed_burst_count().unwrap_or(0),
        }
    }

    pub fn sic_params(&self) -> SicParams {
        SicParams {
            d_sig: self.d_sig,
            sic_enabled: self.scheme.sic_enabled(),
            max_outer_iterations: None,
            record_trace: false,
        }
    }

    /// Instantiates the channel abstraction, loading the error-rate
    /// table when one is called for.
    pub fn build_phy(&self, registry: &CodeRegistry) -> Result<PhyModel<f64>> {
        match &self.phy {
            PhyChoice::Collision => Ok(PhyModel::collision_erasure()),
            PhyChoice::SinrMi { margin } => Ok(PhyModel::sinr_mi(*margin)),
            PhyChoice::FerTable {
                path,
                fallback_margin,
            } => {
                let resolved: PathBuf = match path {
                    Some(p) => p.clone(),
                    None => registry
                        .fer_table_path(&self.code_id)
                        .map(PathBuf::from)
                        .ok_or_else(|| {
                            Error::config(format!(
                                "code '{}' has no registered error-rate table; pass one explicitly",
                                self.code_id
                            ))
                        })?,
                };
                let table = FerTable::load_csv(&resolved)?;
                if table.code_id != self.code_id {
                    return Err(Error::config(format!(
                        "table at {} describes '{}', experiment uses '{}'",
                        resolved.display(),
                        table.code_id,
                        self.code_id
                    )));
                }
                Ok(PhyModel::degree_fer_table(table, *fallback_margin))
            }
        }
    }

    /// Loads `[experiment]`, `[phy]` and `[stop]` sections from a TOML
    /// file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::InvalidInput(detail) | Error::InvalidConfiguration(detail) => Error::Parse {
                path: path.display().to_string(),
                detail,
            },
            other => other,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::input(e.to_string()))?;
        raw.into_config()
    }
}

/// Builds a [`Scheme`] from its CLI/TOML spelling plus the optional
/// burst-count and distribution arguments.
pub fn parse_scheme(
    name: &str,
    nb: Option<usize>,
    distribution: Option<&str>,
) -> Result<Scheme> {
    let scheme = match name {
        "sa" => Scheme::Sa,
        "dsa" => Scheme::Dsa,
        "crdsa" => Scheme::Crdsa {
            replicas: nb.unwrap_or(3),
        },
        "crdsa++" => Scheme::CrdsaPlusPlus {
            replicas: nb.unwrap_or(4),
        },
        "irsa" => {
            // The classic optimized repetition profile when none given.
            let dist = match distribution {
                Some(s) => DegreeDistribution::parse(s)?,
                None => DegreeDistribution::new(vec![(2, 0.5), (3, 0.28), (8, 0.22)])?,
            };
            Scheme::Irsa { distribution: dist }
        }
        "csa" => Scheme::Csa {
            fragments: nb.unwrap_or(3),
        },
        "musca" => Scheme::Musca {
            fragments: nb.unwrap_or(3),
        },
        other => {
            return Err(Error::config(format!(
                "unknown scheme '{other}' (expected sa, dsa, crdsa, crdsa++, irsa, csa or musca)"
            )))
        }
    };
    if let (Some(nb), Some(fixed)) = (nb, scheme.fixed_burst_count()) {
        if nb != fixed {
            return Err(Error::config(format!(
                "scheme {name} cannot transmit {nb} bursts"
            )));
        }
    }
    scheme.validate()?;
    Ok(scheme)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: RawExperiment,
    #[serde(default)]
    phy: RawPhy,
    #[serde(default)]
    stop: StopRule,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    scheme: String,
    #[serde(default)]
    nb: Option<usize>,
    #[serde(default)]
    distribution: Option<String>,
    #[serde(default = "default_code")]
    code: String,
    #[serde(default = "default_slots")]
    slots: usize,
    #[serde(default = "default_esn0")]
    esn0_db: f64,
    #[serde(default = "default_load")]
    load: f64,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_d_sig")]
    d_sig: usize,
}

fn default_code() -> String {
    "turbo-1-6".into()
}
fn default_slots() -> usize {
    100
}
fn default_esn0() -> f64 {
    10.0
}
fn default_load() -> f64 {
    0.8
}
fn default_seed() -> u64 {
    1
}
fn default_d_sig() -> usize {
    1
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPhy {
    #[serde(default)]
    model: Option<String>,
    #[serde(default)]
    margin: Option<f64>,
    #[serde(default)]
    fer_table: Option<PathBuf>,
}

impl RawConfig {
    fn into_config(self) -> Result<ExperimentConfig> {
        let scheme = parse_scheme(
            &self.experiment.scheme,
            self.experiment.nb,
            self.experiment.distribution.as_deref(),
        )?;
        let margin = self.phy.margin.unwrap_or(DEFAULT_MARGIN);
        let phy = match self.phy.model.as_deref().unwrap_or("sinr-mi") {
            "collision" => PhyChoice::Collision,
            "sinr-mi" => PhyChoice::SinrMi { margin },
            "fer-table" => PhyChoice::FerTable {
                path: self.phy.fer_table.clone(),
                fallback_margin: margin,
            },
            other => return Err(Error::config(format!("unknown phy model '{other}'"))),
        };
        let cfg = ExperimentConfig {
            scheme,
            code_id: self.experiment.code,
            num_slots: self.experiment.slots,
            esn0_db: self.experiment.esn0_db,
            load: self.experiment.load,
            seed: self.experiment.seed,
            d_sig: self.experiment.d_sig,
            phy,
            stop: self.stop,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

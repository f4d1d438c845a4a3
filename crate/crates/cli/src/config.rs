//! Run configuration: flags, an optional TOML file with the same keys, and defaults.

use std::path::{Path, PathBuf};

use anyhow::Context;
use qinfra::oracle::DEFAULT_CYCLE_CAP;
use qinfra::{Discriminant, RecoverConfig};
use serde::{Deserialize, Serialize};

/// Environment variable overriding the default cycle cap.
pub const CYCLE_CAP_ENV: &str = "QINFRA_CYCLE_CAP";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Sample,
    Full,
}

/// Every key optional; the file and the command line both produce one of these.
#[derive(Clone, Debug, Default, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Discriminant Δ.
    #[arg(long)]
    #[serde(default, deserialize_with = "str_or_int")]
    pub disc: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fractional bits of returned distances.
    #[arg(long = "precision-bits")]
    pub precision_frac_bits: Option<u32>,
    /// Power-of-two `q` for the sampling subroutine.
    #[arg(long = "q")]
    pub q_override: Option<u64>,
    #[arg(long)]
    pub cycle_cap: Option<u64>,
    #[arg(long)]
    pub max_attempts: Option<u32>,
    /// Allow a `q` outside the algorithm's constraint and skip precondition gates.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub relaxed: Option<bool>,
    /// Take the quantum path even when the classical shortcut applies.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub force_quantum: Option<bool>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Write the JSON report here instead of stdout.
    #[arg(long = "output")]
    pub output_path: Option<PathBuf>,
}

fn str_or_int<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum V {
        S(String),
        I(i64),
    }
    Ok(Option::<V>::deserialize(d)?.map(|v| match v {
        V::S(s) => s,
        V::I(i) => i.to_string(),
    }))
}

impl Overrides {
    /// `self` wins over `base`.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            disc: self.disc.or(base.disc),
            seed: self.seed.or(base.seed),
            precision_frac_bits: self.precision_frac_bits.or(base.precision_frac_bits),
            q_override: self.q_override.or(base.q_override),
            cycle_cap: self.cycle_cap.or(base.cycle_cap),
            max_attempts: self.max_attempts.or(base.max_attempts),
            relaxed: self.relaxed.or(base.relaxed),
            force_quantum: self.force_quantum.or(base.force_quantum),
            mode: self.mode.or(base.mode),
            output_path: self.output_path.or(base.output_path),
        }
    }

    pub fn from_file(path: &Path) -> anyhow::Result<Overrides> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub disc: Discriminant,
    pub seed: u64,
    pub precision_frac_bits: u32,
    pub q_override: Option<u64>,
    pub cycle_cap: u64,
    pub max_attempts: u32,
    pub relaxed: bool,
    pub force_quantum: bool,
    pub mode: Mode,
    pub output_path: Option<PathBuf>,
}

/// `QINFRA_CYCLE_CAP` if set and valid, else the library default.
pub fn default_cycle_cap() -> u64 {
    std::env::var(CYCLE_CAP_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_CYCLE_CAP)
}

impl RunConfig {
    pub fn new(disc: Discriminant) -> Self {
        RunConfig {
            disc,
            seed: 0,
            precision_frac_bits: 40,
            q_override: None,
            cycle_cap: default_cycle_cap(),
            max_attempts: 64,
            relaxed: false,
            force_quantum: false,
            mode: Mode::Sample,
            output_path: None,
        }
    }

    pub fn resolve(o: Overrides) -> qinfra::Result<Self> {
        let disc: Discriminant = o
            .disc
            .as_deref()
            .ok_or_else(|| qinfra::Error::InvalidArgument("a discriminant is required (--disc)".into()))?
            .parse()?;
        let d = RunConfig::new(disc);
        let cfg = RunConfig {
            seed: o.seed.unwrap_or(d.seed),
            precision_frac_bits: o.precision_frac_bits.unwrap_or(d.precision_frac_bits),
            q_override: o.q_override,
            cycle_cap: o.cycle_cap.unwrap_or(d.cycle_cap),
            max_attempts: o.max_attempts.unwrap_or(d.max_attempts),
            relaxed: o.relaxed.unwrap_or(false),
            force_quantum: o.force_quantum.unwrap_or(false),
            mode: o.mode.unwrap_or_default(),
            output_path: o.output_path,
            disc: d.disc,
        };
        if cfg.max_attempts == 0 {
            return Err(qinfra::Error::InvalidArgument("max_attempts must be positive".into()));
        }
        if !(8..=4096).contains(&cfg.precision_frac_bits) {
            return Err(qinfra::Error::InvalidArgument("precision_frac_bits must lie in [8, 4096]".into()));
        }
        Ok(cfg)
    }

    pub fn recover(&self) -> RecoverConfig {
        RecoverConfig {
            seed: self.seed,
            max_attempts: self.max_attempts,
            cycle_cap: self.cycle_cap,
            q_override: self.q_override,
            relaxed: self.relaxed,
            force_quantum: self.force_quantum,
            tolerance_bits: self.precision_frac_bits,
            ..RecoverConfig::default()
        }
    }
}

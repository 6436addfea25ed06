use std::path::{Path, PathBuf};

use serde::Deserialize;

use w2e_core::bench::Format;

/// File form of [`RunConfig`]. Every field is optional; flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub profiles: Option<PathBuf>,
    pub artifacts: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// `None` uses the shipped profiles.
    pub profiles: Option<PathBuf>,
    /// `None` uses the shipped artifacts.
    pub artifacts: Option<PathBuf>,
    pub out: PathBuf,
    pub trials: usize,
    pub seed: u64,
    pub format: Format,
}

#[derive(Debug, Default)]
pub struct Overrides {
    pub profiles: Option<PathBuf>,
    pub artifacts: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<String>,
}

impl RunConfig {
    pub fn resolve(file: Option<&Path>, flags: Overrides) -> Result<Self, String> {
        let base = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                toml::from_str::<RunConfigFile>(&text).map_err(|e| format!("{}: {e}", p.display()))?
            }
            None => RunConfigFile::default(),
        };
        let format = flags.format.or(base.format).unwrap_or_else(|| "csv".into());
        let cfg = RunConfig {
            profiles: flags.profiles.or(base.profiles),
            artifacts: flags.artifacts.or(base.artifacts),
            out: flags.out.or(base.out).unwrap_or_else(|| PathBuf::from("w2e-out")),
            trials: flags.trials.or(base.trials).unwrap_or(5),
            seed: flags.seed.or(base.seed).unwrap_or(0),
            format: format.parse().map_err(|e| format!("{e}"))?,
        };
        if cfg.trials < 1 {
            return Err("trials must be at least 1".into());
        }
        for p in [&cfg.profiles, &cfg.artifacts].into_iter().flatten() {
            if !p.exists() {
                return Err(format!("{} does not exist", p.display()));
            }
        }
        Ok(cfg)
    }
}

//! On-disk cache of reference runs keyed by the configuration hash.

use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::csvio::{read_profile, write_atomic, write_profile};
use crate::error::CliError;
use crate::experiment::{run_experiment, Profile};

const COMPLETE: &str = "complete";

#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReferenceCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Directory holding the run with this configuration.
    pub fn entry(&self, cfg: &ExperimentConfig) -> PathBuf {
        self.dir.join(cfg.hash())
    }

    pub fn contains(&self, cfg: &ExperimentConfig) -> bool {
        self.entry(cfg).join(COMPLETE).exists()
    }

    /// Loads the cached profile or runs `cfg` and stores it. Entries are
    /// built in a temporary directory and renamed into place.
    pub fn load_or_run(&self, cfg: &ExperimentConfig) -> Result<Profile, CliError> {
        let entry = self.entry(cfg);
        if entry.join(COMPLETE).exists() {
            log::info!("reference cache hit {}", entry.display());
            return read_profile(&entry);
        }
        let out = run_experiment(cfg)?;
        std::fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        let tmp = tempfile::tempdir_in(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        write_profile(tmp.path(), &out.profile)?;
        write_atomic(&tmp.path().join("config.toml"), &cfg.to_toml())?;
        write_atomic(&tmp.path().join(COMPLETE), "")?;
        let staged = tmp.keep();
        if std::fs::rename(&staged, &entry).is_err() {
            // another process finished the same entry first
            let _ = std::fs::remove_dir_all(&staged);
            if !entry.join(COMPLETE).exists() {
                return Err(CliError::io(
                    &entry,
                    std::io::Error::other("cannot store cache entry"),
                ));
            }
        }
        Ok(out.profile)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::from_toml_str;

    #[test]
    fn second_lookup_is_a_hit_with_identical_values() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ReferenceCache::new(dir.path());
        let cfg =
            from_toml_str("preset = \"linear\"\neps = 0.5\nmethod = \"exact\"\nnx = 8\nnc = 4\n")
                .unwrap();
        assert!(!cache.contains(&cfg));
        let a = cache.load_or_run(&cfg).unwrap();
        assert!(cache.contains(&cfg));
        let b = cache.load_or_run(&cfg).unwrap();
        assert_eq!(a, b);
    }
}

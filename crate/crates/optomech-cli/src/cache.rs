//! On-disk cache of coefficient sets, enabled by `OPTOMECH_CACHE_DIR`.

use std::fs;
use std::path::PathBuf;

use optomech::coefficients::{coefficient_set_with, CoefficientSet};
use optomech::ode::Tolerance;
use optomech::params::ModelSpec;
use serde_json::json;
use sha2::{Digest, Sha256};

pub const CACHE_ENV: &str = "OPTOMECH_CACHE_DIR";

#[derive(Clone, Debug, Default)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn from_env() -> Self {
        Cache { dir: std::env::var_os(CACHE_ENV).filter(|d| !d.is_empty()).map(PathBuf::from) }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: Some(dir.into()) }
    }

    fn key(spec: &ModelSpec, tau: f64, tol: Tolerance) -> String {
        let text = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "spec": spec,
            "tau": tau,
            "rtol": tol.rtol,
            "atol": tol.atol,
        })
        .to_string();
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn coefficient_set(&self, spec: &ModelSpec, tau: f64, tol: Tolerance) -> optomech::Result<CoefficientSet> {
        let Some(dir) = &self.dir else {
            return coefficient_set_with(spec, tau, tol);
        };
        let path = dir.join(format!("{}.json", Self::key(spec, tau, tol)));
        if let Ok(bytes) = fs::read(&path) {
            match serde_json::from_slice(&bytes) {
                Ok(set) => return Ok(set),
                Err(e) => log::warn!("ignoring unreadable cache entry {}: {e}", path.display()),
            }
        }
        let set = coefficient_set_with(spec, tau, tol)?;
        // write then rename so concurrent readers never see a partial file
        let tmp = path.with_extension(format!("tmp{}.{:?}", std::process::id(), std::thread::current().id()));
        let stored = fs::create_dir_all(dir)
            .and_then(|_| fs::write(&tmp, serde_json::to_vec(&set).expect("coefficient set serializes")))
            .and_then(|_| fs::rename(&tmp, &path));
        if let Err(e) = stored {
            log::warn!("could not write cache entry {}: {e}", path.display());
        }
        Ok(set)
    }
}

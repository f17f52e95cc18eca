//! Run configuration: JSON file, command-line overrides and the resolved
//! list of evaluation points.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Subcommand, ValueEnum};
use num_complex::Complex64;
use optomech::metrology::{with_param, ClosedForm, DiffMode, Param};
use optomech::ode::Tolerance;
use optomech::params::{ModelSpec, Platform, PhysicalSetup};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Drive functions G, D1, D2 at tau
    DriveEval,
    /// F and J coefficients and the Bogoliubov pair
    Coeffs,
    /// Mechanical subsystem solution and Bogoliubov defect
    Mechanics,
    /// First and second moments of the evolved state
    Moments,
    /// Non-Gaussianity and symplectic eigenvalues
    Nongauss,
    /// QFI coefficient ledger and QFI for one parameter
    Qfi,
    /// Homodyne classical Fisher information about d1
    Cfi,
    /// Gravimetry sensitivity table
    Gravimetry,
    /// Moments against the truncated Fock-space propagator
    OracleCheck,
    /// Sweep the command named in the config
    Sweep,
    /// Check a config without evaluating it
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::DriveEval => "drive-eval",
            Command::Coeffs => "coeffs",
            Command::Mechanics => "mechanics",
            Command::Moments => "moments",
            Command::Nongauss => "nongauss",
            Command::Qfi => "qfi",
            Command::Cfi => "cfi",
            Command::Gravimetry => "gravimetry",
            Command::OracleCheck => "oracle-check",
            Command::Sweep => "sweep",
            Command::Validate => "validate",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceProfile {
    #[default]
    Strict,
    Fast,
}

impl ToleranceProfile {
    /// Tolerance of the coefficient quadrature.
    pub fn quadrature(self) -> Tolerance {
        match self {
            ToleranceProfile::Strict => Tolerance::TIGHT,
            ToleranceProfile::Fast => Tolerance::FAST,
        }
    }

    /// Tolerance of the mechanical subsystem solver.
    pub fn mechanics(self) -> Tolerance {
        match self {
            ToleranceProfile::Strict => Tolerance::STRICT,
            ToleranceProfile::Fast => Tolerance::FAST,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    /// Parse `START:STOP:STEP`.
    pub fn parse(name: &str, range: &str) -> Result<Sweep> {
        let parts: Vec<&str> = range.split(':').collect();
        let [a, b, s] = parts[..] else {
            bail!("--sweep {name}: expected START:STOP:STEP, got `{range}`");
        };
        let num = |x: &str| x.trim().parse::<f64>().with_context(|| format!("--sweep {name}: bad number `{x}`"));
        Ok(Sweep { name: name.to_string(), start: num(a)?, stop: num(b)?, step: num(s)? })
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            bail!("swept.step: must be > 0");
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.stop >= self.start) {
            bail!("swept: range [{}, {}] is empty", self.start, self.stop);
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateConfig {
    pub mu_c: Complex64,
    pub mu_m: Complex64,
    pub r_t: f64,
}

impl Default for StateConfig {
    fn default() -> Self {
        StateConfig { mu_c: Complex64::new(1.0, 0.0), mu_m: Complex64::new(0.0, 0.0), r_t: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QfiConfig {
    pub param: Option<Param>,
    pub mode: DiffMode,
    /// Also evaluate this closed form; the spec and parameter then follow the case.
    pub closed_form: Option<ClosedForm>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomodyneConfig {
    pub lambda: f64,
    pub n_max: Option<usize>,
}

impl Default for HomodyneConfig {
    fn default() -> Self {
        HomodyneConfig { lambda: PI / 2.0, n_max: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleCheckConfig {
    pub dims: [usize; 2],
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        OracleCheckConfig { dims: [40, 40] }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[default]
    Coherent,
    Thermal,
    Fock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSetup {
    pub name: String,
    pub setup: PhysicalSetup,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GravimetryConfig {
    pub setups: Vec<NamedSetup>,
    pub family: Family,
    pub n_measurements: u64,
}

impl Default for GravimetryConfig {
    fn default() -> Self {
        GravimetryConfig { setups: default_setups(), family: Family::Coherent, n_measurements: 1 }
    }
}

/// Fabry–Pérot, levitated nanosphere and cold-atom platforms.
pub fn default_setups() -> Vec<NamedSetup> {
    let named = |name: &str, platform| NamedSetup { name: name.to_string(), setup: PhysicalSetup::vertical(platform) };
    vec![
        named("fabry_perot", Platform::FabryPerot { length: 1e-5, mass: 1e-6, omega_c: 1e14, omega_m: 1e3 }),
        named(
            "levitated",
            Platform::Levitated {
                volume: 1e-18,
                mode_volume: 1e-14,
                permittivity: 5.7,
                wavelength: 1064e-9,
                mass: 1e-14,
                omega_c: 1e14,
                omega_m: 1e2,
            },
        ),
        named(
            "cold_atoms",
            Platform::ColdAtoms { atoms: 1e5, g_atom: 1e7, k_laser: 1e8, atom_mass: 1e-25, detuning: 1e11, omega_m: 1e2 },
        ),
    ]
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Format,
}

fn two_pi() -> f64 {
    2.0 * PI
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub spec: ModelSpec,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default = "two_pi")]
    pub tau: f64,
    #[serde(default)]
    pub swept: Option<Sweep>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default)]
    pub qfi: QfiConfig,
    #[serde(default)]
    pub homodyne: HomodyneConfig,
    #[serde(default)]
    pub oracle: OracleCheckConfig,
    #[serde(default)]
    pub gravimetry: GravimetryConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub tolerance_profile: ToleranceProfile,
}

impl Default for Config {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every field has a default")
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow!("config field `{path}`: {}", e.into_inner())
        })
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Config::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    /// SHA-256 of the canonical JSON of everything that affects the numbers.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        c.threads = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn base_point(&self) -> Point {
        Point {
            spec: self.spec,
            mu_c: self.state.mu_c,
            mu_m: self.state.mu_m,
            r_t: self.state.r_t,
            tau: self.tau,
            lambda: self.homodyne.lambda,
        }
    }

    /// Points in swept order, fixed values applied first.
    pub fn points(&self) -> Result<Vec<Point>> {
        let mut base = self.base_point();
        for (name, &v) in &self.fixed {
            base.set(name, v).with_context(|| format!("config field `fixed.{name}`"))?;
        }
        let Some(sweep) = &self.swept else {
            return Ok(vec![base]);
        };
        sweep.values()?
            .into_iter()
            .map(|v| {
                let mut p = base;
                p.set(&sweep.name, v).with_context(|| "config field `swept.name`")?;
                Ok(p)
            })
            .collect()
    }
}

/// Scalar names accepted by `fixed` and `swept` besides the spec parameters.
pub const POINT_NAMES: [&str; 7] = ["tau", "lambda", "r_t", "mu_c", "mu_c_phase", "mu_m", "mu_m_phase"];

/// One fully resolved evaluation point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub spec: ModelSpec,
    pub mu_c: Complex64,
    pub mu_m: Complex64,
    pub r_t: f64,
    pub tau: f64,
    pub lambda: f64,
}

impl Point {
    pub fn get(&self, name: &str) -> Result<f64> {
        Ok(match name {
            "tau" => self.tau,
            "lambda" => self.lambda,
            "r_t" => self.r_t,
            "mu_c" => self.mu_c.norm(),
            "mu_c_phase" => self.mu_c.arg(),
            "mu_m" => self.mu_m.norm(),
            "mu_m_phase" => self.mu_m.arg(),
            _ => optomech::metrology::param_value(&self.spec, name.parse()?)?,
        })
    }

    /// Set a named scalar; `mu_c` and `mu_m` set the modulus and keep the phase.
    pub fn set(&mut self, name: &str, v: f64) -> Result<()> {
        match name {
            "tau" => self.tau = v,
            "lambda" => self.lambda = v,
            "r_t" => self.r_t = v,
            "mu_c" => self.mu_c = Complex64::from_polar(v, self.mu_c.arg()),
            "mu_c_phase" => self.mu_c = Complex64::from_polar(self.mu_c.norm(), v),
            "mu_m" => self.mu_m = Complex64::from_polar(v, self.mu_m.arg()),
            "mu_m_phase" => self.mu_m = Complex64::from_polar(self.mu_m.norm(), v),
            _ => {
                let p: Param = name
                    .parse()
                    .map_err(|_| anyhow!("unknown parameter `{name}` (expected one of {}, or a spec parameter)", POINT_NAMES.join(", ")))?;
                self.spec = with_param(&self.spec, p, v)?;
            }
        }
        Ok(())
    }
}

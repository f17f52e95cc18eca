//! Model descriptions, drive functions, platform couplings and unit restoration.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Physical constants (CODATA 2018, SI).
pub mod constants {
    /// Reduced Planck constant, J s.
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Boltzmann constant, J/K.
    pub const K_B: f64 = 1.380_649e-23;
    /// Vacuum permittivity, F/m.
    pub const EPS0: f64 = 8.854_187_812_8e-12;
    /// Speed of light, m/s.
    pub const C: f64 = 299_792_458.0;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// `a (1 + offset sin(w tau))`
    Sin,
    /// `a (offset + cos(w tau))`
    Cos,
}

/// A scalar drive function of dimensionless time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveSpec {
    Constant { amplitude: f64 },
    Sinusoid { amplitude: f64, offset: f64, frequency: f64, phase: Phase },
}

impl Default for DriveSpec {
    fn default() -> Self {
        DriveSpec::Constant { amplitude: 0.0 }
    }
}

impl DriveSpec {
    pub fn constant(amplitude: f64) -> Self {
        DriveSpec::Constant { amplitude }
    }

    /// `g0 (1 + eps sin(w tau))`, the modulated coupling form.
    pub fn offset_sin(amplitude: f64, eps: f64, frequency: f64) -> Self {
        DriveSpec::Sinusoid { amplitude, offset: eps, frequency, phase: Phase::Sin }
    }

    /// `d cos(w tau)`, the modulated displacement and squeezing form.
    pub fn cosine(amplitude: f64, frequency: f64) -> Self {
        DriveSpec::Sinusoid { amplitude, offset: 0.0, frequency, phase: Phase::Cos }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        match *self {
            DriveSpec::Constant { amplitude } => amplitude,
            DriveSpec::Sinusoid { amplitude, offset, frequency, phase } => match phase {
                Phase::Sin => amplitude * (1.0 + offset * (frequency * tau).sin()),
                Phase::Cos => amplitude * (offset + (frequency * tau).cos()),
            },
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            DriveSpec::Constant { amplitude } | DriveSpec::Sinusoid { amplitude, .. } => amplitude,
        }
    }

    /// Value of the drive if it does not depend on time.
    pub fn constant_value(&self) -> Option<f64> {
        match *self {
            DriveSpec::Constant { amplitude } => Some(amplitude),
            DriveSpec::Sinusoid { amplitude, offset, frequency, phase } => {
                if amplitude == 0.0 {
                    Some(0.0)
                } else if frequency == 0.0 {
                    Some(self.eval(0.0))
                } else if phase == Phase::Sin && offset == 0.0 {
                    Some(amplitude)
                } else {
                    None
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant_value() == Some(0.0)
    }

    pub fn validate(&self, field: &'static str) -> Result<()> {
        match *self {
            DriveSpec::Constant { amplitude } => {
                if !amplitude.is_finite() {
                    return Err(invalid(field, "amplitude must be finite"));
                }
            }
            DriveSpec::Sinusoid { amplitude, offset, frequency, .. } => {
                if !amplitude.is_finite() || !offset.is_finite() {
                    return Err(invalid(field, "amplitude and offset must be finite"));
                }
                if !(frequency >= 0.0 && frequency.is_finite()) {
                    return Err(invalid(field, "frequency must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }
}

pub fn evaluate_drive(drive: &DriveSpec, tau: f64) -> f64 {
    drive.eval(tau)
}

/// Dimensionless extended Hamiltonian
/// `H = omega_c N_a + N_b - G(tau) N_a B+ + D1(tau) B+ + D2(tau) B+^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub omega_c: f64,
    pub coupling: DriveSpec,
    pub displacement: DriveSpec,
    pub squeezing: DriveSpec,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            omega_c: 1.0,
            coupling: DriveSpec::default(),
            displacement: DriveSpec::default(),
            squeezing: DriveSpec::default(),
        }
    }
}

impl ModelSpec {
    pub fn new(coupling: DriveSpec, displacement: DriveSpec, squeezing: DriveSpec) -> Self {
        ModelSpec { omega_c: 1.0, coupling, displacement, squeezing }
    }

    /// Constant coupling only.
    pub fn coupling_only(g0: f64) -> Self {
        Self::new(DriveSpec::constant(g0), DriveSpec::default(), DriveSpec::default())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega_c.is_finite() {
            return Err(invalid("omega_c", "must be finite"));
        }
        self.coupling.validate("coupling")?;
        self.displacement.validate("displacement")?;
        self.squeezing.validate("squeezing")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpticalState {
    Coherent(Complex64),
    /// `(|0> + |n>)/sqrt(2)`
    FockSuperposition(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanicalState {
    Coherent(Complex64),
    Thermal(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub optical: OpticalState,
    pub mechanical: MechanicalState,
}

impl InitialState {
    pub fn coherent(mu_c: Complex64, mu_m: Complex64) -> Self {
        InitialState {
            optical: OpticalState::Coherent(mu_c),
            mechanical: MechanicalState::Coherent(mu_m),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let OpticalState::FockSuperposition(n) = self.optical {
            if n < 1 {
                return Err(invalid("optical", "Fock superposition needs n >= 1"));
            }
        }
        if let MechanicalState::Thermal(r) = self.mechanical {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(invalid("mechanical", "r_T must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// Experimental platform, SI units. Frequencies are used exactly as given.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "platform", rename_all = "snake_case")]
pub enum Platform {
    FabryPerot { length: f64, mass: f64, omega_c: f64, omega_m: f64 },
    Levitated {
        volume: f64,
        mode_volume: f64,
        permittivity: f64,
        wavelength: f64,
        mass: f64,
        omega_c: f64,
        omega_m: f64,
    },
    ColdAtoms {
        atoms: f64,
        g_atom: f64,
        k_laser: f64,
        atom_mass: f64,
        detuning: f64,
        omega_m: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSetup {
    pub platform: Platform,
    /// Tilt of the cavity axis from the vertical, rad.
    pub tilt: f64,
}

impl PhysicalSetup {
    pub fn vertical(platform: Platform) -> Self {
        PhysicalSetup { platform, tilt: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let positive: Vec<(&'static str, f64)> = match self.platform {
            Platform::FabryPerot { length, mass, omega_c, omega_m } => {
                vec![("length", length), ("mass", mass), ("omega_c", omega_c), ("omega_m", omega_m)]
            }
            Platform::Levitated { volume, mode_volume, permittivity, wavelength, mass, omega_c, omega_m } => vec![
                ("volume", volume),
                ("mode_volume", mode_volume),
                ("permittivity", permittivity),
                ("wavelength", wavelength),
                ("mass", mass),
                ("omega_c", omega_c),
                ("omega_m", omega_m),
            ],
            Platform::ColdAtoms { atoms, g_atom, k_laser, atom_mass, detuning, omega_m } => vec![
                ("atoms", atoms),
                ("g_atom", g_atom),
                ("k_laser", k_laser),
                ("atom_mass", atom_mass),
                ("detuning", detuning),
                ("omega_m", omega_m),
            ],
        };
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be strictly positive"));
            }
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.tilt) {
            return Err(invalid("tilt", "must lie in [0, pi/2]"));
        }
        Ok(())
    }

    /// Oscillating mass; for cold atoms the whole ensemble.
    pub fn mass(&self) -> f64 {
        match self.platform {
            Platform::FabryPerot { mass, .. } | Platform::Levitated { mass, .. } => mass,
            Platform::ColdAtoms { atoms, atom_mass, .. } => atoms * atom_mass,
        }
    }

    pub fn omega_m(&self) -> f64 {
        match self.platform {
            Platform::FabryPerot { omega_m, .. }
            | Platform::Levitated { omega_m, .. }
            | Platform::ColdAtoms { omega_m, .. } => omega_m,
        }
    }

    /// Single-photon coupling g0 in Hz.
    pub fn coupling_hz(&self) -> Result<f64> {
        use constants::{EPS0, HBAR};
        self.validate()?;
        let zpf = |m: f64, w: f64| (HBAR / (2.0 * m * w)).sqrt();
        Ok(match self.platform {
            Platform::FabryPerot { length, mass, omega_c, omega_m } => omega_c / length * zpf(mass, omega_m),
            Platform::Levitated { volume, mode_volume, permittivity, wavelength, mass, omega_c, omega_m } => {
                let pol = 3.0 * volume * EPS0 * (permittivity - 1.0) / (permittivity + 2.0);
                let k_c = 2.0 * std::f64::consts::PI / wavelength;
                pol / (4.0 * mode_volume * EPS0) * zpf(mass, omega_m) * k_c * omega_c
            }
            Platform::ColdAtoms { atoms, g_atom, k_laser, atom_mass, detuning, omega_m } => {
                atoms.sqrt() * g_atom * g_atom * k_laser / detuning * zpf(atoms * atom_mass, omega_m)
            }
        })
    }
}

/// Dimensionless coupling `g0 / omega_m`.
pub fn coupling_constant(setup: &PhysicalSetup) -> Result<f64> {
    Ok(setup.coupling_hz()? / setup.omega_m())
}

/// Thermal squeezing parameter from `tanh r_T = exp(-hbar w / (2 k_B T))`.
pub fn thermal_parameter(temperature: f64, omega_m: f64) -> Result<f64> {
    use constants::{HBAR, K_B};
    if !(temperature >= 0.0) {
        return Err(invalid("temperature", "must be >= 0"));
    }
    if !(omega_m > 0.0) {
        return Err(invalid("omega_m", "must be > 0"));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR * omega_m / (2.0 * K_B * temperature);
    // atanh(e^-x) = 0.5 ln((1 + e^-x) / (1 - e^-x)), stable for small x
    let e = (-x).exp();
    Ok(0.5 * ((1.0 + e).ln() - (-(-x).exp_m1()).ln()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fabry_perot(length: f64, mass: f64) -> PhysicalSetup {
        PhysicalSetup::vertical(Platform::FabryPerot { length, mass, omega_c: 1e14, omega_m: 1e3 })
    }

    #[test]
    fn drive_examples() {
        assert_eq!(DriveSpec::offset_sin(1.0, 0.5, 1.0).eval(0.0), 1.0);
        assert!((DriveSpec::cosine(1.0, 1.0).eval(std::f64::consts::PI) + 1.0).abs() < 1e-15);
        assert_eq!(DriveSpec::constant(0.1).eval(17.3), 0.1);
    }

    #[test]
    fn constant_equals_zero_frequency_sinusoid() {
        for &tau in &[0.0, 0.3, 7.1, -2.0] {
            let c = DriveSpec::constant(0.7).eval(tau);
            assert_eq!(c, DriveSpec::offset_sin(0.7, 0.4, 0.0).eval(tau));
            assert_eq!(c, DriveSpec::cosine(0.7, 0.0).eval(tau));
        }
        assert_eq!(DriveSpec::cosine(0.7, 0.0).constant_value(), Some(0.7));
        assert_eq!(DriveSpec::cosine(0.7, 2.0).constant_value(), None);
    }

    #[test]
    fn fabry_perot_coupling() {
        let g = coupling_constant(&fabry_perot(1e-5, 1e-6)).unwrap();
        assert!((g / 2.30 - 1.0).abs() < 0.01, "{g}");
    }

    #[test]
    fn coupling_scalings() {
        let g1 = coupling_constant(&fabry_perot(1e-5, 1e-6)).unwrap();
        let g2 = coupling_constant(&fabry_perot(2e-5, 1e-6)).unwrap();
        let g3 = coupling_constant(&fabry_perot(1e-5, 4e-6)).unwrap();
        assert!(g2 < g1);
        assert!((g3 / g1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_dimension() {
        assert!(coupling_constant(&fabry_perot(0.0, 1e-6)).is_err());
        assert!(coupling_constant(&fabry_perot(1e-5, -1.0)).is_err());
    }

    #[test]
    fn thermal_parameter_values() {
        assert_eq!(thermal_parameter(0.0, 1e2).unwrap(), 0.0);
        let r = thermal_parameter(200e-9, 1e2).unwrap();
        assert!((r - 3.48).abs() < 0.005, "{r}");
        let a = thermal_parameter(1e-6, 1e2).unwrap();
        let b = thermal_parameter(2e-6, 1e2).unwrap();
        assert!(b > a);
    }
}

//! Quantum Fisher information of the decoupled evolution, homodyne
//! classical Fisher information and dimensionful sensitivities.
//!
//! Everything is computed at `hbar = omega_m = 1`; physical units enter only
//! through the chain-rule Jacobians in [`gravimetry`] and
//! [`acceleration_qfi`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_dual::Dual64;
use serde::{Deserialize, Serialize};

use crate::coefficients::{catalog, classify, f_on_mesh, f_quadrature_mesh, CatalogParams, Entry, FSet};
use crate::error::{invalid, Error, Result};
use crate::mechanics::{wrap_angle, JSet};
use crate::ode::Tolerance;
use crate::oracle::analytic_state_coefficients;
use crate::params::{constants::HBAR, coupling_constant, DriveSpec, ModelSpec, Phase, PhysicalSetup};

/// Standard gravity, m s^-2.
pub const STANDARD_GRAVITY: f64 = 9.806_65;

/// Largest squeezing strength for which the small-squeezing forms are used
/// without a validity warning.
pub const D2_VALIDITY: f64 = 0.2;

/// Scalar parameter inside one of the drives (or `Omega_c`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    G0,
    Epsilon,
    OmegaG,
    D1,
    OmegaD1,
    D2,
    OmegaD2,
    OmegaC,
}

impl Param {
    pub const ALL: [Param; 8] =
        [Param::G0, Param::Epsilon, Param::OmegaG, Param::D1, Param::OmegaD1, Param::D2, Param::OmegaD2, Param::OmegaC];

    pub fn name(self) -> &'static str {
        match self {
            Param::G0 => "g0",
            Param::Epsilon => "epsilon",
            Param::OmegaG => "omega_g",
            Param::D1 => "d1",
            Param::OmegaD1 => "omega_d1",
            Param::D2 => "d2",
            Param::OmegaD2 => "omega_d2",
            Param::OmegaC => "omega_c",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| Error::UnknownParameter(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffMode {
    #[default]
    Analytic,
    FiniteDiff,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QfiCoefficients {
    #[serde(rename = "cA")]
    pub c_a: f64,
    #[serde(rename = "cB")]
    pub c_b: f64,
    #[serde(rename = "cCp")]
    pub c_cp: f64,
    #[serde(rename = "cCm")]
    pub c_cm: f64,
    #[serde(rename = "cCNp")]
    pub c_cnp: f64,
    #[serde(rename = "cCNm")]
    pub c_cnm: f64,
    #[serde(rename = "cE")]
    pub c_e: f64,
    #[serde(rename = "cF")]
    pub c_f: f64,
    #[serde(rename = "cG")]
    pub c_g: f64,
    #[serde(rename = "cK")]
    pub c_k: f64,
}

impl QfiCoefficients {
    pub fn to_array(&self) -> [f64; 10] {
        [self.c_a, self.c_b, self.c_cp, self.c_cm, self.c_cnp, self.c_cnm, self.c_e, self.c_f, self.c_g, self.c_k]
    }

    pub const NAMES: [&'static str; 10] = ["cA", "cB", "cCp", "cCm", "cCNp", "cCNm", "cE", "cF", "cG", "cK"];
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub qfi_dimensionless: f64,
    pub qfi_dimensionful: f64,
    pub std_dev: f64,
    pub n_measurements: u64,
}

/// Cramér–Rao bound `1 / sqrt(N I)`.
pub fn cramer_rao(qfi: f64, n_measurements: u64) -> f64 {
    1.0 / (n_measurements as f64 * qfi).sqrt()
}

// --- parameter access ---

fn not_in_spec(p: Param) -> Error {
    Error::UnknownParameter(format!("{p} (not a scalar of this spec)"))
}

fn drive_of(spec: &ModelSpec, p: Param) -> Option<DriveSpec> {
    match p {
        Param::G0 | Param::Epsilon | Param::OmegaG => Some(spec.coupling),
        Param::D1 | Param::OmegaD1 => Some(spec.displacement),
        Param::D2 | Param::OmegaD2 => Some(spec.squeezing),
        Param::OmegaC => None,
    }
}

/// Current value of `p`; errors if the spec has no such scalar.
pub fn param_value(spec: &ModelSpec, p: Param) -> Result<f64> {
    let Some(drive) = drive_of(spec, p) else {
        return Ok(spec.omega_c);
    };
    match (p, drive) {
        (Param::G0 | Param::D1 | Param::D2, DriveSpec::Constant { amplitude }) => Ok(amplitude),
        (Param::G0 | Param::D1 | Param::D2, DriveSpec::Sinusoid { amplitude, .. }) => Ok(amplitude),
        (Param::Epsilon, DriveSpec::Sinusoid { offset, .. }) => Ok(offset),
        (Param::OmegaG | Param::OmegaD1 | Param::OmegaD2, DriveSpec::Sinusoid { frequency, .. }) => Ok(frequency),
        _ => Err(not_in_spec(p)),
    }
}

/// Copy of `spec` with `p` set to `value`.
pub fn with_param(spec: &ModelSpec, p: Param, value: f64) -> Result<ModelSpec> {
    param_value(spec, p)?;
    let mut out = *spec;
    let slot = match p {
        Param::OmegaC => {
            out.omega_c = value;
            return Ok(out);
        }
        Param::G0 | Param::Epsilon | Param::OmegaG => &mut out.coupling,
        Param::D1 | Param::OmegaD1 => &mut out.displacement,
        Param::D2 | Param::OmegaD2 => &mut out.squeezing,
    };
    match (p, slot) {
        (_, DriveSpec::Constant { amplitude }) => *amplitude = value,
        (Param::Epsilon, DriveSpec::Sinusoid { offset, .. }) => *offset = value,
        (Param::OmegaG | Param::OmegaD1 | Param::OmegaD2, DriveSpec::Sinusoid { frequency, .. }) => *frequency = value,
        (_, DriveSpec::Sinusoid { amplitude, .. }) => *amplitude = value,
    }
    Ok(out)
}

/// Validity warnings for estimating `p` with the small-squeezing forms.
pub fn validity_warnings(spec: &ModelSpec, p: Param) -> Vec<String> {
    let mut out = Vec::new();
    if p == Param::D2 {
        let d2 = spec.squeezing.amplitude().abs();
        if d2 > D2_VALIDITY {
            out.push(format!("d2 = {d2} exceeds {D2_VALIDITY}: small-squeezing QFI forms are outside their validity range"));
        }
    }
    out
}

// --- coefficient ledger ---

/// Assemble the ledger from F, J and their parameter derivatives.
pub fn assemble(tau: f64, f: &FSet, df: &FSet, j: &JSet, dj: &JSet, d_omega_c: f64) -> QfiCoefficients {
    let r0 = 2.0 * dj.jm - (4.0 * j.jp).sinh() * dj.jb;
    let ch = (4.0 * j.jp).cosh();
    let rp = 2.0 * dj.jp - ch * dj.jb;
    let rm = 2.0 * dj.jp + ch * dj.jb;
    let (ep, em) = ((4.0 * j.jm).exp(), (-4.0 * j.jm).exp());
    // sum over s of s e^{-4 s J-} X_s Y_s R_s
    let signed = |xp: f64, yp: f64, xm: f64, ym: f64| em * xp * yp * rp - ep * xm * ym * rm;

    let c_a = -df.f_na2 - 2.0 * f.f_nabm * df.f_nabp
        + 2.0 * f.f_nabm * f.f_nabp * r0
        + signed(f.f_nabp, f.f_nabp, f.f_nabm, f.f_nabm);
    let c_b = -tau * d_omega_c - df.f_na - 2.0 * f.f_bm * df.f_nabp - 2.0 * f.f_nabm * df.f_bp
        + 2.0 * (f.f_bp * f.f_nabm + f.f_bm * f.f_nabp) * r0
        + 2.0 * signed(f.f_bp, f.f_nabp, f.f_bm, f.f_nabm);
    let c_cp = -df.f_bp + f.f_bp * r0 - ep * f.f_bm * rm;
    let c_cm = -df.f_bm - f.f_bm * r0 - em * f.f_bp * rp;
    let c_cnp = -df.f_nabp + f.f_nabp * r0 - ep * f.f_nabm * rm;
    let c_cnm = -df.f_nabm - f.f_nabm * r0 - em * f.f_nabp * rp;
    let c_e = -(ep * rm - em * rp) / 2.0;
    let c_f = -(ep * rm + em * rp) / 4.0;
    let c_g = -r0 / 2.0;
    let c_k = -2.0 * f.f_bm * df.f_bp + 2.0 * f.f_bm * f.f_bp * r0 + signed(f.f_bp, f.f_bp, f.f_bm, f.f_bm)
        + dj.jb / 2.0
        + c_e / 2.0;
    QfiCoefficients { c_a, c_b, c_cp, c_cm, c_cnp, c_cnm, c_e, c_f, c_g, c_k }
}

fn seeded(p: &CatalogParams, which: Param) -> CatalogParams<Dual64> {
    let s = |v: f64, on: bool| if on { Dual64::new(v, 1.0) } else { Dual64::from(v) };
    CatalogParams {
        g0: s(p.g0, which == Param::G0),
        epsilon: s(p.epsilon, which == Param::Epsilon),
        omega_g: s(p.omega_g, which == Param::OmegaG),
        d1: s(p.d1, which == Param::D1),
        omega_d1: s(p.omega_d1, which == Param::OmegaD1),
        d2: s(p.d2, which == Param::D2),
        omega_d2: s(p.omega_d2, which == Param::OmegaD2),
    }
}

/// Whether the catalog entry carries `p` as one of its own scalars, so that
/// the dual derivative is the derivative with respect to the spec field.
fn catalog_carries(spec: &ModelSpec, entry: Entry, p: Param) -> bool {
    let sin_mod = |d: DriveSpec| matches!(d, DriveSpec::Sinusoid { phase: Phase::Sin, frequency, .. } if frequency != 0.0);
    let cos_pure =
        |d: DriveSpec| matches!(d, DriveSpec::Sinusoid { phase: Phase::Cos, offset, frequency, .. } if offset == 0.0 && frequency != 0.0);
    let plain = |d: DriveSpec| matches!(d, DriveSpec::Constant { .. });
    match p {
        Param::OmegaC => true,
        Param::G0 => plain(spec.coupling) || sin_mod(spec.coupling),
        Param::Epsilon => sin_mod(spec.coupling),
        Param::OmegaG => entry == Entry::ModulatedCoupling,
        Param::D1 => plain(spec.displacement) || cos_pure(spec.displacement),
        Param::OmegaD1 => entry == Entry::ModulatedDisplacement,
        Param::D2 => plain(spec.squeezing) || cos_pure(spec.squeezing),
        // the resonant entry is only defined at Omega_d2 = 2
        Param::OmegaD2 => false,
    }
}

fn analytic_parts(spec: &ModelSpec, p: Param, tau: f64) -> Result<Option<(FSet, FSet, JSet, JSet)>> {
    let (entry, cp) = match classify(spec, p == Param::D2) {
        Ok(x) => x,
        Err(Error::NotInCatalog(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    if !catalog_carries(spec, entry, p) {
        return Ok(None);
    }
    let (f, j) = catalog(entry, &seeded(&cp, p), tau);
    let eps = |x: Dual64| x.eps;
    let df = FSet {
        f_na: eps(f.f_na),
        f_na2: eps(f.f_na2),
        f_bp: eps(f.f_bp),
        f_bm: eps(f.f_bm),
        f_nabp: eps(f.f_nabp),
        f_nabm: eps(f.f_nabm),
    };
    let dj = JSet { jb: eps(j.jb), jp: eps(j.jp), jm: eps(j.jm) };
    Ok(Some((f.re(), df, j.re(), dj)))
}

fn sub(a: &FSet, b: &FSet, scale: f64) -> FSet {
    let (x, y) = (a.to_array(), b.to_array());
    FSet::from_array(std::array::from_fn(|i| (x[i] - y[i]) * scale))
}

fn fd_parts(spec: &ModelSpec, p: Param, tau: f64) -> Result<(FSet, FSet, JSet, JSet)> {
    let theta = param_value(spec, p)?;
    let (base, mesh) = f_quadrature_mesh(spec, tau, Tolerance::TIGHT)?;
    if mesh.len() < 2 {
        return Ok((base.f, FSet::default(), base.j, JSet::default()));
    }
    let at = |v: f64| -> Result<(FSet, JSet)> {
        let set = f_on_mesh(&with_param(spec, p, v)?, &mesh)?;
        Ok((set.f, set.j))
    };
    let central = |h: f64| -> Result<(FSet, JSet)> {
        let ((fp, jp), (fm, jm)) = (at(theta + h)?, at(theta - h)?);
        let k = 0.5 / h;
        let dj = JSet { jb: wrap_angle(jp.jb - jm.jb) * k, jp: (jp.jp - jm.jp) * k, jm: (jp.jm - jm.jm) * k };
        Ok((sub(&fp, &fm, k), dj))
    };
    let h = 1e-6 * theta.abs().max(1.0);
    let (d1f, d1j) = central(h)?;
    let (d2f, d2j) = central(h / 2.0)?;
    // Richardson: (4 D(h/2) - D(h)) / 3
    let (a, b) = (d2f.to_array(), d1f.to_array());
    let df = FSet::from_array(std::array::from_fn(|i| (4.0 * a[i] - b[i]) / 3.0));
    let r = |x: f64, y: f64| (4.0 * x - y) / 3.0;
    let dj = JSet { jb: r(d2j.jb, d1j.jb), jp: r(d2j.jp, d1j.jp), jm: r(d2j.jm, d1j.jm) };
    Ok((base.f, df, base.j, dj))
}

/// QFI coefficient ledger for estimating `p` at time `tau`.
///
/// `Analytic` differentiates the closed-form catalog with dual numbers and
/// falls back to finite differences when no entry carries `p`. Estimating
/// `d2` uses the small-squeezing catalog forms.
pub fn qfi_coefficients(spec: &ModelSpec, p: Param, tau: f64, mode: DiffMode) -> Result<QfiCoefficients> {
    spec.validate()?;
    param_value(spec, p)?;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(invalid("tau", "must be finite and >= 0"));
    }
    for w in validity_warnings(spec, p) {
        log::warn!("{w}");
    }
    let parts = match mode {
        DiffMode::Analytic => match analytic_parts(spec, p, tau)? {
            Some(x) => x,
            None => fd_parts(spec, p, tau)?,
        },
        DiffMode::FiniteDiff => fd_parts(spec, p, tau)?,
    };
    let (f, df, j, dj) = parts;
    let d_omega_c = if p == Param::OmegaC { 1.0 } else { 0.0 };
    Ok(assemble(tau, &f, &df, &j, &dj, d_omega_c))
}

// --- state-family QFIs ---

/// Coherent optics, thermal mechanics with parameter `r_t`.
pub fn qfi_thermal(c: &QfiCoefficients, mu_c: Complex64, r_t: f64) -> f64 {
    let m2 = mu_c.norm_sqr();
    let (m4, m6) = (m2 * m2, m2 * m2 * m2);
    let ch = (2.0 * r_t).cosh();
    let cn2 = c.c_cnp.powi(2) + c.c_cnm.powi(2);
    let mixed = (c.c_cp + c.c_cnp * m2).powi(2) + (c.c_cm + c.c_cnm * m2).powi(2);
    let total = (4.0 * m6 + 6.0 * m4 + m2) * c.c_a.powi(2)
        + (4.0 * m4 + 2.0 * m2) * c.c_a * c.c_b
        + m2 * c.c_b.powi(2)
        + ch * cn2 * m2
        + mixed / ch
        + 4.0 * ch * ch / (ch * ch + 1.0) * (c.c_f.powi(2) + c.c_g.powi(2));
    (4.0 * total).max(0.0)
}

/// Coherent optics and mechanics, `theta` entering through `B` and `C+-` only.
pub fn qfi_coherent(c_b: f64, c_cp: f64, c_cm: f64, mu_c: Complex64) -> f64 {
    4.0 * (c_b * c_b * mu_c.norm_sqr() + c_cp * c_cp + c_cm * c_cm)
}

/// Optics in `(|0> + |n>)/sqrt 2`, coherent mechanics.
pub fn qfi_fock(c_b: f64, c_cp: f64, c_cm: f64, n: u32) -> f64 {
    let n = n as f64;
    n * n * c_b * c_b + 4.0 * (c_cp * c_cp + c_cm * c_cm)
}

// --- closed forms ---

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedForm {
    G0GeneralOmega,
    G0Resonant,
    G0ResonantAsymptotic,
    D1GeneralOmega,
    D1Constant,
    D1Resonant,
    D2ConstantApprox,
    D2ResonantApprox,
}

impl ClosedForm {
    pub const ALL: [ClosedForm; 8] = [
        ClosedForm::G0GeneralOmega,
        ClosedForm::G0Resonant,
        ClosedForm::G0ResonantAsymptotic,
        ClosedForm::D1GeneralOmega,
        ClosedForm::D1Constant,
        ClosedForm::D1Resonant,
        ClosedForm::D2ConstantApprox,
        ClosedForm::D2ResonantApprox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClosedForm::G0GeneralOmega => "g0-general-omega",
            ClosedForm::G0Resonant => "g0-resonant",
            ClosedForm::G0ResonantAsymptotic => "g0-resonant-asymptotic",
            ClosedForm::D1GeneralOmega => "d1-general-omega",
            ClosedForm::D1Constant => "d1-constant",
            ClosedForm::D1Resonant => "d1-resonant",
            ClosedForm::D2ConstantApprox => "d2-constant-approx",
            ClosedForm::D2ResonantApprox => "d2-resonant-approx",
        }
    }

    /// Large-time limit rather than an identity.
    pub fn is_asymptotic(self) -> bool {
        self == ClosedForm::G0ResonantAsymptotic
    }

    /// Spec and estimated parameter the closed form describes.
    pub fn setup(self, p: &ClosedFormParams) -> (ModelSpec, Param) {
        let g = DriveSpec::constant(p.g0);
        let zero = DriveSpec::default();
        match self {
            ClosedForm::G0GeneralOmega => {
                (ModelSpec::new(DriveSpec::offset_sin(p.g0, p.epsilon, p.omega), zero, zero), Param::G0)
            }
            ClosedForm::G0Resonant | ClosedForm::G0ResonantAsymptotic => {
                (ModelSpec::new(DriveSpec::offset_sin(p.g0, p.epsilon, 1.0), zero, zero), Param::G0)
            }
            ClosedForm::D1GeneralOmega => (ModelSpec::new(g, DriveSpec::cosine(p.d1, p.omega), zero), Param::D1),
            ClosedForm::D1Constant => (ModelSpec::new(g, DriveSpec::constant(p.d1), zero), Param::D1),
            ClosedForm::D1Resonant => (ModelSpec::new(g, DriveSpec::cosine(p.d1, 1.0), zero), Param::D1),
            ClosedForm::D2ConstantApprox => (ModelSpec::new(g, zero, DriveSpec::constant(p.d2)), Param::D2),
            ClosedForm::D2ResonantApprox => (ModelSpec::new(g, zero, DriveSpec::cosine(p.d2, 2.0)), Param::D2),
        }
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClosedForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClosedForm::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownParameter(format!("closed-form case `{s}`")))
    }
}

/// Inputs of the closed forms. `omega` is the modulation frequency of the
/// general-frequency cases; `d1` and `d2` only select the matching spec.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormParams {
    pub g0: f64,
    /// `|mu_c|^2`
    pub mu_c2: f64,
    pub r_t: f64,
    pub epsilon: f64,
    pub omega: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Default for ClosedFormParams {
    fn default() -> Self {
        ClosedFormParams { g0: 1.0, mu_c2: 1.0, r_t: 0.0, epsilon: 0.0, omega: 0.5, d1: 1.0, d2: 0.01 }
    }
}

pub fn qfi_closed_form(case: ClosedForm, p: &ClosedFormParams, tau: f64) -> f64 {
    let (g, m2, e, w) = (p.g0, p.mu_c2, p.epsilon, p.omega);
    let ch = (2.0 * p.r_t).cosh();
    let nl = m2 * (4.0 * m2 * m2 + 6.0 * m2 + 1.0);
    let (s, c) = tau.sin_cos();
    match case {
        ClosedForm::G0GeneralOmega => {
            let (sw, cw) = (w * tau).sin_cos();
            let (w2, w3, w4, w5) = (w * w, w.powi(3), w.powi(4), w.powi(5));
            let half = (w * tau / 2.0).sin().powi(2);
            let bracket = 2.0 * tau * w5 - 4.0 * tau * w3 + 2.0 * tau * w - tau * w3 * e * e
                + 0.5 * w2 * e * e * (2.0 * w * tau).sin()
                + 2.0 * w2 * e * e * c * sw
                + tau * w * e * e
                - 4.0 * w4 * e * c * half
                - 2.0 * (w2 - 1.0) * w * s * (w2 - e * sw - 1.0)
                + 4.0 * w2 * e * c * half
                - e * cw * (2.0 * w3 * e * s + e * sw + 2.0 * w4 - 6.0 * w2 + 4.0)
                + 2.0 * w4 * e
                - 6.0 * w2 * e
                + 4.0 * e;
            let first = 4.0 * g * g / (w2 * (1.0 - w2).powi(4)) * nl * bracket * bracket;
            let cp = 1.0 - c - e * (w * cw * s - c * sw) / (w2 - 1.0);
            let cm = s + e * (w * (1.0 - c * cw) - s * sw) / (w2 - 1.0);
            first + 4.0 * m2 * ch * (1.0 + m2 / (ch * ch)) * (cp * cp + cm * cm)
        }
        ClosedForm::G0Resonant => {
            let x = 4.0 * tau * e * e - 3.0 * e * e * (2.0 * tau).sin() - 8.0 * tau * e * s - 32.0 * e * c
                + 2.0 * e * (tau * e + 2.0) * (2.0 * tau).cos()
                + 16.0 * tau
                - 16.0 * s
                + 28.0 * e;
            let k = e * s + 2.0;
            let y = s * s * k * k + (tau * e - c * k + 2.0).powi(2);
            m2 / 16.0 * (g * g * (4.0 * m2 * m2 + 6.0 * m2 + 1.0) * x * x + 16.0 * ch * (m2 / (ch * ch) + 1.0) * y)
        }
        ClosedForm::G0ResonantAsymptotic => 16.0 * g * g * tau * tau * nl,
        ClosedForm::D1GeneralOmega => {
            let (sw, cw) = (w * tau).sin_cos();
            let w2 = w * w;
            let cav = sw * (w2 * (1.0 - c) - 1.0) + w * s * cw;
            let mech = 3.0 - (w2 - 1.0) * (2.0 * w * tau).cos() - 4.0 * w * s * sw - 4.0 * c * cw + w2;
            4.0 / (w2 * (1.0 - w2).powi(2)) * (4.0 * g * g * m2 * cav * cav + w2 / (2.0 * ch) * mech)
        }
        ClosedForm::D1Constant => 16.0 * (g * g * m2 * (tau - s).powi(2) + (tau / 2.0).sin().powi(2) / ch),
        ClosedForm::D1Resonant => {
            4.0 * g * g * m2 * (tau + s * (c - 2.0)).powi(2) + (tau * tau + 2.0 * tau * s * c + s * s) / ch
        }
        ClosedForm::D2ConstantApprox => 16.0 * g * g * tau * tau * m2 * (m2 + ch * ch) / ch,
        ClosedForm::D2ResonantApprox => {
            4.0 * tau * tau * (g.powi(4) * nl + g * g * m2 * (m2 + ch * ch) / ch + ch * ch / (ch * ch + 1.0))
        }
    }
}

/// The same quantity through the generic coefficient path.
pub fn qfi_generic(case: ClosedForm, p: &ClosedFormParams, tau: f64) -> Result<f64> {
    let (spec, param) = case.setup(p);
    let c = qfi_coefficients(&spec, param, tau, DiffMode::Analytic)?;
    Ok(qfi_thermal(&c, Complex64::new(p.mu_c2.sqrt(), 0.0), p.r_t))
}

// --- homodyne ---

/// Default optical cut-off `ceil(|mu|^2 + 10 |mu| + 20)`.
pub fn homodyne_cutoff(mu_c: Complex64) -> usize {
    let m = mu_c.norm();
    (m * m + 10.0 * m + 20.0).ceil() as usize
}

/// Normalized oscillator eigenfunctions `psi_0..psi_n` at `x`.
pub fn hermite_functions(x: f64, n_max: usize, out: &mut Vec<f64>) {
    out.clear();
    out.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if n_max == 0 {
        return;
    }
    out.push(std::f64::consts::SQRT_2 * x * out[0]);
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
}

/// Classical Fisher information about `d1` of a homodyne measurement of
/// `x_lambda = (a e^{-i lambda} + a^dag e^{i lambda}) / sqrt 2`, constant
/// coupling and displacement, coherent initial states.
pub fn cfi_homodyne(g0: f64, d1: f64, mu_c: Complex64, mu_m: Complex64, lambda: f64, tau: f64, n_max: usize) -> Result<f64> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(invalid("tau", "must be finite and >= 0"));
    }
    if n_max == 0 {
        return Err(invalid("n_max", "must be >= 1"));
    }
    let coeffs = analytic_state_coefficients(g0, d1, mu_c, mu_m, tau, n_max);
    let tail = 1.0 - coeffs.iter().map(|(a, _)| a.norm_sqr()).sum::<f64>();
    if tail > 1e-10 {
        log::warn!("homodyne cut-off n_max = {n_max} leaves optical tail mass {tail:e}");
    }
    let dim = n_max + 1;
    // reduced optical state rho_{nn'} = a_n a_n'^* <phi_n'|phi_n>
    let rho = DMatrix::from_fn(dim, dim, |n, k| {
        let ((an, pn), (ak, pk)) = (coeffs[n], coeffs[k]);
        let ov = (-0.5 * pn.norm_sqr() - 0.5 * pk.norm_sqr() + pk.conj() * pn).exp();
        an * ak.conj() * ov
    });
    let kappa = 2.0 * g0 * (tau - tau.sin());
    let rot: Vec<Complex64> = (0..dim).map(|n| Complex64::from_polar(1.0, -lambda * n as f64)).collect();

    let integrand = |x: f64| {
        let mut psi = Vec::with_capacity(dim);
        hermite_functions(x, n_max, &mut psi);
        let v: Vec<Complex64> = (0..dim).map(|n| rot[n] * psi[n]).collect();
        let (mut p, mut dp) = (0.0, 0.0);
        for n in 0..dim {
            for k in 0..dim {
                let t = rho[(n, k)] * v[n] * v[k].conj();
                p += t.re;
                // d rho_{nk} = -i kappa (n - k) rho_{nk}
                dp += kappa * (n as f64 - k as f64) * t.im;
            }
        }
        dp * dp / p.max(1e-300)
    };

    let half = (2.0 * n_max as f64).sqrt() + 8.0;
    let pieces = 16;
    let width = 2.0 * half / pieces as f64;
    let mut total = 0.0;
    for i in 0..pieces {
        let a = -half + width * i as f64;
        total += quadrature::double_exponential::integrate(integrand, a, a + width, 1e-10 / pieces as f64).integral;
    }
    Ok(total)
}

// --- gravimetry and force sensing ---

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum StateFamily {
    /// Coherent optics and mechanics.
    Coherent,
    /// Coherent optics, thermal mechanics.
    Thermal { r_t: f64 },
    /// Optics in `(|0> + |n>)/sqrt 2` with `n = |mu_c|^2` rounded.
    Fock,
}

/// `d1 / a` for an acceleration `a` along the cavity axis.
pub fn acceleration_jacobian(mass: f64, omega_m: f64) -> f64 {
    (mass / (2.0 * HBAR * omega_m.powi(3))).sqrt()
}

/// QFI and sensitivity for a constant gravitational acceleration, read out
/// at one mechanical period.
pub fn gravimetry(setup: &PhysicalSetup, mu_c: Complex64, family: StateFamily, n_measurements: u64) -> Result<SensitivityReport> {
    setup.validate()?;
    if n_measurements == 0 {
        return Err(invalid("n_measurements", "must be >= 1"));
    }
    let tau = 2.0 * PI;
    let jac = setup.tilt.cos() * acceleration_jacobian(setup.mass(), setup.omega_m());
    let g0 = coupling_constant(setup)?;
    let spec = ModelSpec::new(DriveSpec::constant(g0), DriveSpec::constant(jac * STANDARD_GRAVITY), DriveSpec::default());
    let c = qfi_coefficients(&spec, Param::D1, tau, DiffMode::Analytic)?;
    let qfi = match family {
        StateFamily::Coherent => qfi_coherent(c.c_b, c.c_cp, c.c_cm, mu_c),
        StateFamily::Thermal { r_t } => {
            if !(r_t >= 0.0) {
                return Err(invalid("r_t", "must be >= 0"));
            }
            qfi_thermal(&c, mu_c, r_t)
        }
        StateFamily::Fock => qfi_fock(c.c_b, c.c_cp, c.c_cm, mu_c.norm_sqr().round() as u32),
    };
    let dimensionful = jac * jac * qfi;
    Ok(SensitivityReport {
        qfi_dimensionless: qfi,
        qfi_dimensionful: dimensionful,
        std_dev: cramer_rao(dimensionful, n_measurements),
        n_measurements,
    })
}

/// QFI about the amplitude `a0` of an acceleration entering as
/// `D1 = a0 sqrt(m / (2 hbar w^3))` times the displacement drive shape of
/// `spec`. Coherent optics, thermal mechanics.
pub fn acceleration_qfi(mass: f64, omega_m: f64, spec: &ModelSpec, mu_c: Complex64, r_t: f64, tau: f64) -> Result<f64> {
    if !(mass > 0.0 && omega_m > 0.0) {
        return Err(invalid("mass", "mass and omega_m must be > 0"));
    }
    let c = qfi_coefficients(spec, Param::D1, tau, DiffMode::Analytic)?;
    let jac = acceleration_jacobian(mass, omega_m);
    Ok(jac * jac * qfi_thermal(&c, mu_c, r_t))
}

/// Read-out window `1 / g0` in seconds for a coupling `g0` in Hz.
pub fn measurement_window(g0_hz: f64) -> Result<f64> {
    if !(g0_hz > 0.0) {
        return Err(invalid("g0", "must be > 0"));
    }
    Ok(1.0 / g0_hz)
}

/// Full width at half maximum of the Gaussian revival peak of width
/// `1 / (2 g0)`, in the same time units as `1 / g0`.
pub fn revival_fwhm(g0: f64) -> f64 {
    2.0 * (2.0 * 2f64.ln()).sqrt() / (2.0 * g0)
}

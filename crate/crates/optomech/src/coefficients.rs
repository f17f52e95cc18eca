//! F-coefficients of the decoupled evolution operator and the scalars derived
//! from them.
//!
//! Two independent paths: a closed-form catalog for the standard drive shapes
//! (generic over dual numbers so parameter derivatives come for free) and a
//! general path that integrates the defining integrals alongside the
//! mechanical equations of motion.

use num_complex::Complex64;
use num_dual::DualNum;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mechanics::{self, compose, j_from_pair, JSet};
use crate::ode::{self, Tolerance};
use crate::params::{DriveSpec, ModelSpec, Phase};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FSet<T = f64> {
    pub f_na: T,
    pub f_na2: T,
    pub f_bp: T,
    pub f_bm: T,
    pub f_nabp: T,
    pub f_nabm: T,
}

impl<T: DualNum<Primitive = f64> + Copy> FSet<T> {
    pub fn re(&self) -> FSet {
        FSet {
            f_na: self.f_na.re(),
            f_na2: self.f_na2.re(),
            f_bp: self.f_bp.re(),
            f_bm: self.f_bm.re(),
            f_nabp: self.f_nabp.re(),
            f_nabm: self.f_nabm.re(),
        }
    }

    fn zero() -> Self {
        let z = T::from(0.0);
        FSet { f_na: z, f_na2: z, f_bp: z, f_bm: z, f_nabp: z, f_nabm: z }
    }
}

impl FSet {
    pub fn to_array(&self) -> [f64; 6] {
        [self.f_na, self.f_na2, self.f_bp, self.f_bm, self.f_nabp, self.f_nabm]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        FSet { f_na: a[0], f_na2: a[1], f_bp: a[2], f_bm: a[3], f_nabp: a[4], f_nabm: a[5] }
    }

    pub fn max_abs_diff(&self, other: &FSet) -> f64 {
        self.to_array().iter().zip(other.to_array()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Everything the decoupled evolution operator needs at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub tau: f64,
    pub f: FSet,
    pub j: JSet,
    pub alpha: Complex64,
    pub beta: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedScalars {
    pub theta: f64,
    pub varphi: f64,
    pub k_na: Complex64,
    pub gamma: Complex64,
    pub delta: Complex64,
    pub e_bpbm: Complex64,
}

pub fn derived_scalars(f: &FSet, alpha: Complex64, beta: Complex64, mu_m: Complex64) -> DerivedScalars {
    let (qp, qm) = (f.f_nabp, f.f_nabm);
    let k_na = Complex64::new(qm, qp);
    let e_arg = Complex64::new(-qm * qm - qp * qp, -2.0 * qm * qp) - mu_m * k_na * 2.0 + mu_m.conj() * k_na.conj() * 2.0;
    DerivedScalars {
        theta: 2.0 * (f.f_na2 + qp * qm),
        varphi: f.f_na + f.f_na2 + 2.0 * qp * f.f_bm,
        k_na,
        gamma: (alpha + beta) * f.f_bm - I * (alpha - beta) * f.f_bp,
        delta: (alpha + beta) * qm - I * (alpha - beta) * qp,
        e_bpbm: (e_arg * 0.5).exp(),
    }
}

// --- general path ---

fn augmented_rhs(spec: &ModelSpec) -> impl Fn(f64, &[f64; 10]) -> [f64; 10] {
    let (g, d1, d2) = (spec.coupling, spec.displacement, spec.squeezing);
    move |t, y| {
        let (gt, d1t) = (g.eval(t), d1.eval(t));
        let w2 = 1.0 + 4.0 * d2.eval(t);
        let (p, q) = (y[0], y[2]);
        [
            y[1],
            -w2 * p,
            y[3],
            -w2 * q,
            -gt * p,
            -gt * q,
            d1t * p,
            d1t * q,
            2.0 * gt * q * y[4],
            2.0 * q * (gt * y[6] - d1t * y[4]),
        ]
    }
}

const Y0: [f64; 10] = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];

fn set_from_state(tau: f64, y: &[f64; 10]) -> Result<CoefficientSet> {
    let point = mechanics::SubsystemPoint { tau, p11: y[0], dp11: y[1], ip22: y[2], p22: y[3] };
    let (alpha, beta) = point.bogoliubov();
    let j = mechanics::j_coefficients(alpha, beta)?;
    let f = FSet { f_nabp: y[4], f_nabm: y[5], f_bp: y[6], f_bm: y[7], f_na2: y[8], f_na: y[9] };
    Ok(CoefficientSet { tau, f, j, alpha, beta })
}

/// Coefficients on a grid of times from a single integration of the
/// defining integrals together with the mechanical equations.
pub fn f_quadrature_grid(spec: &ModelSpec, grid: &[f64], tol: Tolerance) -> Result<Vec<CoefficientSet>> {
    spec.validate()?;
    let t_max = grid.iter().copied().fold(0.0, f64::max);
    if grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(invalid("tau", "grid values must be finite and >= 0"));
    }
    let traj = ode::integrate(augmented_rhs(spec), 0.0, Y0, t_max, grid, tol)?;
    grid.iter()
        .map(|&t| {
            let i = traj.t.iter().position(|&x| x == t).expect("integrator lands on every stop");
            set_from_state(t, &traj.y[i])
        })
        .collect()
}

pub fn f_quadrature_set(spec: &ModelSpec, tau: f64) -> Result<CoefficientSet> {
    Ok(f_quadrature_grid(spec, &[tau], Tolerance::TIGHT)?[0])
}

pub fn f_quadrature(spec: &ModelSpec, tau: f64) -> Result<FSet> {
    Ok(f_quadrature_set(spec, tau)?.f)
}

/// Adaptive run that also returns its accepted mesh.
pub fn f_quadrature_mesh(spec: &ModelSpec, tau: f64, tol: Tolerance) -> Result<(CoefficientSet, Vec<f64>)> {
    spec.validate()?;
    let traj = ode::integrate(augmented_rhs(spec), 0.0, Y0, tau, &[], tol)?;
    Ok((set_from_state(tau, &traj.last())?, traj.t))
}

/// Replay on a fixed mesh: no step control, so nearby specs are integrated
/// with identical discretization.
pub fn f_on_mesh(spec: &ModelSpec, mesh: &[f64]) -> Result<CoefficientSet> {
    let traj = ode::integrate_on_mesh(augmented_rhs(spec), mesh, Y0);
    set_from_state(traj.t_end(), &traj.last())
}

// --- closed-form catalog ---

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entry {
    ConstantCoupling,
    ModulatedCoupling,
    ResonantCoupling,
    ConstantDisplacement,
    ModulatedDisplacement,
    ResonantDisplacement,
    ConstantSqueezing,
    ConstantSqueezingApprox,
    ResonantSqueezingApprox,
}

impl Entry {
    pub const ALL: [Entry; 9] = [
        Entry::ConstantCoupling,
        Entry::ModulatedCoupling,
        Entry::ResonantCoupling,
        Entry::ConstantDisplacement,
        Entry::ModulatedDisplacement,
        Entry::ResonantDisplacement,
        Entry::ConstantSqueezing,
        Entry::ConstantSqueezingApprox,
        Entry::ResonantSqueezingApprox,
    ];

    /// Entries derived under a small-squeezing expansion.
    pub fn is_approximate(self) -> bool {
        matches!(self, Entry::ConstantSqueezingApprox | Entry::ResonantSqueezingApprox)
    }
}

/// Scalar drive parameters read by the catalog.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatalogParams<T = f64> {
    pub g0: T,
    pub epsilon: T,
    pub omega_g: T,
    pub d1: T,
    pub omega_d1: T,
    pub d2: T,
    pub omega_d2: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Shape {
    Zero,
    Constant(f64),
    /// `a (1 + eps sin(w tau))`
    OffsetSin { a: f64, eps: f64, w: f64 },
    /// `a cos(w tau)`
    Cosine { a: f64, w: f64 },
    Other,
}

/// Classify by variant: a zero-offset modulated drive keeps its modulated
/// shape so that derivatives with respect to the offset stay available.
fn shape(d: &DriveSpec) -> Shape {
    match *d {
        DriveSpec::Constant { amplitude } if amplitude == 0.0 => Shape::Zero,
        DriveSpec::Constant { amplitude } => Shape::Constant(amplitude),
        DriveSpec::Sinusoid { amplitude, offset, frequency, phase } => {
            if frequency == 0.0 {
                let v = d.eval(0.0);
                if v == 0.0 {
                    Shape::Zero
                } else {
                    Shape::Constant(v)
                }
            } else {
                match phase {
                    Phase::Sin => Shape::OffsetSin { a: amplitude, eps: offset, w: frequency },
                    Phase::Cos if offset == 0.0 => Shape::Cosine { a: amplitude, w: frequency },
                    Phase::Cos => Shape::Other,
                }
            }
        }
    }
}

/// Pick the catalog entry matching the drive shapes. With `approximate`,
/// constant squeezing dispatches to its small-squeezing form.
pub fn classify(spec: &ModelSpec, approximate: bool) -> Result<(Entry, CatalogParams)> {
    let mut p = CatalogParams { g0: 0.0, epsilon: 0.0, omega_g: 0.0, d1: 0.0, omega_d1: 0.0, d2: 0.0, omega_d2: 0.0 };
    let (gs, d1s, d2s) = (shape(&spec.coupling), shape(&spec.displacement), shape(&spec.squeezing));
    let not_in = |why: &str| Err(Error::NotInCatalog(why.to_string()));
    let modulated_g = match gs {
        Shape::Zero => false,
        Shape::Constant(g) => {
            p.g0 = g;
            false
        }
        Shape::OffsetSin { a, eps, w } => {
            (p.g0, p.epsilon, p.omega_g) = (a, eps, w);
            true
        }
        _ => return not_in("coupling must be constant or g0(1 + eps sin(w tau))"),
    };
    if modulated_g {
        if d1s != Shape::Zero || d2s != Shape::Zero {
            return not_in("modulated coupling combined with displacement or squeezing");
        }
        return Ok((if p.omega_g == 1.0 { Entry::ResonantCoupling } else { Entry::ModulatedCoupling }, p));
    }
    match (d1s, d2s) {
        (Shape::Zero, Shape::Zero) => Ok((Entry::ConstantCoupling, p)),
        (Shape::Constant(d), Shape::Zero) => {
            p.d1 = d;
            Ok((Entry::ConstantDisplacement, p))
        }
        (Shape::Cosine { a, w }, Shape::Zero) => {
            (p.d1, p.omega_d1) = (a, w);
            Ok((if w == 1.0 { Entry::ResonantDisplacement } else { Entry::ModulatedDisplacement }, p))
        }
        (Shape::Zero, Shape::Constant(d)) => {
            p.d2 = d;
            if approximate {
                Ok((Entry::ConstantSqueezingApprox, p))
            } else if 1.0 + 4.0 * d > 0.0 {
                Ok((Entry::ConstantSqueezing, p))
            } else {
                not_in("constant squeezing with 1 + 4 d2 <= 0")
            }
        }
        (Shape::Zero, Shape::Cosine { a, w }) if w == 2.0 => {
            (p.d2, p.omega_d2) = (a, w);
            Ok((Entry::ResonantSqueezingApprox, p))
        }
        (Shape::Zero, _) => not_in("squeezing must be constant or resonant d2 cos(2 tau)"),
        _ => not_in("displacement and squeezing together, or unsupported displacement shape"),
    }
}

fn constant_coupling<T: DualNum<Primitive = f64> + Copy>(g: T, tau: f64) -> (T, T, T) {
    let (s, c) = tau.sin_cos();
    (g * g * (s * c - tau), g * (-s), g * (c - 1.0))
}

/// Evaluate one catalog entry; returns the F-coefficients and J-coefficients.
pub fn catalog<T: DualNum<Primitive = f64> + Copy>(entry: Entry, p: &CatalogParams<T>, tau: f64) -> (FSet<T>, JSet<T>) {
    let zero = T::from(0.0);
    let one = T::from(1.0);
    let free = JSet { jb: T::from(tau), jp: zero, jm: zero };
    let mut f = FSet::zero();
    let (s, c) = tau.sin_cos();
    let g = p.g0;
    match entry {
        Entry::ConstantCoupling => {
            (f.f_na2, f.f_nabp, f.f_nabm) = constant_coupling(g, tau);
            (f, free)
        }
        Entry::ModulatedCoupling => {
            let (e, w) = (p.epsilon, p.omega_g);
            let g2 = g * g;
            let (sw, cw) = (w * tau).sin_cos();
            let (s2w, c2w) = (w * (2.0 * tau)).sin_cos();
            let (s2, c2) = (2.0 * tau).sin_cos();
            let half = (tau / 2.0).sin().powi(2);
            let shift = ((one - w) * (tau / 2.0)).sin().powi(2);
            let one_m_w2 = one - w * w;
            let mut na2 = g2 * (s * c - tau);
            na2 += e * g2 / w * (cw * (s * s) - 2.0 * half) * 2.0;
            na2 -= e * g2 / (w * (one + w)) * s2 * sw;
            na2 -= e * g2 * 4.0 / (w * one_m_w2) * c * shift;
            let inner = cw * s * (cw * c - 2.0);
            na2 += e * e * g2 / (w * (one + w) * 4.0) * (T::from(2.0 * tau) - inner * 4.0);
            na2 += e * e * g2 / (w * one_m_w2 * 4.0) * (inner * 4.0 + sw * (8.0 * c) + s2w * (1.0 - 2.0 * c2) - 2.0 * tau);
            na2 += e * e * g2 / (w * one_m_w2 * one_m_w2 * 4.0)
                * (w * cw * (8.0 * s) - w * c2w * (2.0 * s2) - sw * (8.0 * c) + s2w * (2.0 * c2));
            f.f_na2 = na2;
            f.f_nabp = -(g * e / (one + w)) * sw * s + g * w * e * 2.0 / one_m_w2 * shift - g * s;
            f.f_nabm = -(g * e / (one - w)) * cw * s + g * e / one_m_w2 * ((one + w) * tau).sin() - g * half * 2.0;
            (f, free)
        }
        Entry::ResonantCoupling => {
            let e = p.epsilon;
            let (s2, c2) = (2.0 * tau).sin_cos();
            let bracket = T::from(16.0 * tau - 8.0 * s2)
                + e * (32.0 - 36.0 * c + 4.0 * (3.0 * tau).cos())
                + e * e * (6.0 * tau - 4.0 * s2 + s2 * c2);
            f.f_na2 = -(g * g) * bracket / 16.0;
            f.f_nabp = -(g * s) * (one + e * (s / 2.0));
            f.f_nabm = g * e * ((s2 - 2.0 * tau) / 4.0) - g * (2.0 * (tau / 2.0).sin().powi(2));
            (f, free)
        }
        Entry::ConstantDisplacement => {
            (f.f_na2, f.f_nabp, f.f_nabm) = constant_coupling(g, tau);
            let d = p.d1;
            f.f_na = g * d * (2.0 * (tau - s * c));
            f.f_bp = d * s;
            f.f_bm = d * (1.0 - c);
            (f, free)
        }
        Entry::ModulatedDisplacement => {
            (f.f_na2, f.f_nabp, f.f_nabm) = constant_coupling(g, tau);
            let (d, w) = (p.d1, p.omega_d1);
            let (sw, cw) = (w * tau).sin_cos();
            let w2 = w * w;
            let bracket = w2 * sw * (2.0 * c * c) - w * cw * (4.0 * s * c) + sw * (w2 * (2.0 * tau).cos() - w2 * 3.0 + 4.0);
            f.f_na = -(g * d) / (w * (w2 - 1.0) * 2.0) * bracket;
            f.f_bp = -d * (w * sw * c - cw * s) / (one - w2);
            f.f_bm = -d * (w * sw * s + cw * c - 1.0) / (one - w2);
            (f, free)
        }
        Entry::ResonantDisplacement => {
            (f.f_na2, f.f_nabp, f.f_nabm) = constant_coupling(g, tau);
            let d = p.d1;
            f.f_na = -(g * d) * ((3.0 * tau).sin() - 7.0 * s + 4.0 * tau * c) / 4.0;
            f.f_bp = d * ((tau + s * c) / 2.0);
            f.f_bm = d * (s * s / 2.0);
            (f, free)
        }
        Entry::ConstantSqueezing => {
            let d2 = p.d2;
            let z = (d2 * 4.0 + 1.0).sqrt();
            let (sz, cz) = (z * tau).sin_cos();
            let z2 = z * z;
            f.f_na2 = -(g * g) / z2 * ((z * (2.0 * tau)).sin() / (z * 2.0) * (-1.0) + tau);
            f.f_nabp = -(g / z) * sz;
            f.f_nabm = g / z2 * (cz - 1.0);
            // alpha = (2 cos - i (1 + z^2) sin / z) / 2, beta = -2 i d2 sin / z
            let j = j_from_pair(cz, -(z2 + 1.0) * sz / (z * 2.0), zero, -(d2 * 2.0) * sz / z);
            (f, j)
        }
        Entry::ConstantSqueezingApprox => {
            let w = p.d2 * 2.0 + 1.0;
            let (sw, cw) = (w * tau).sin_cos();
            f.f_na2 = -(g * g) * (w * (2.0 * tau) - (w * (2.0 * tau)).sin()) / 2.0;
            f.f_nabp = -(g * sw);
            f.f_nabm = -(g * (one - cw));
            (f, JSet { jb: w * tau, jp: zero, jm: zero })
        }
        Entry::ResonantSqueezingApprox => {
            let x = p.d2 * tau;
            let (sh, ch) = (x.sinh(), x.cosh());
            let (sh2, ch2) = ((x * 2.0).sinh(), (x * 2.0).cosh());
            f.f_na2 = g * g * (ch2 * (2.0 * tau).sin() + sh2 - 2.0 * tau) / 2.0;
            f.f_nabp = -(g * (ch * s + sh * c));
            f.f_nabm = g * (ch * c + sh * s - 1.0);
            (f, JSet { jb: T::from(tau), jp: x / 2.0, jm: zero })
        }
    }
}

/// Closed-form coefficients, or `NotInCatalog` if no entry matches.
pub fn f_closed_form(spec: &ModelSpec, tau: f64) -> Result<FSet> {
    let (entry, p) = classify(spec, false)?;
    Ok(catalog(entry, &p, tau).0)
}

/// Closed-form coefficient set, Bogoliubov pair taken from the entry's J's.
pub fn closed_form_set(spec: &ModelSpec, tau: f64, approximate: bool) -> Result<(Entry, CoefficientSet)> {
    spec.validate()?;
    let (entry, p) = classify(spec, approximate)?;
    let (f, j) = catalog(entry, &p, tau);
    let (alpha, beta) = compose(&j);
    Ok((entry, CoefficientSet { tau, f, j, alpha, beta }))
}

/// Exact catalog entry if one matches, otherwise the general path.
pub fn coefficient_set(spec: &ModelSpec, tau: f64) -> Result<CoefficientSet> {
    coefficient_set_with(spec, tau, Tolerance::TIGHT)
}

/// As [`coefficient_set`], with the quadrature tolerance of the general path.
pub fn coefficient_set_with(spec: &ModelSpec, tau: f64, tol: Tolerance) -> Result<CoefficientSet> {
    match closed_form_set(spec, tau, false) {
        Ok((entry, set)) if !entry.is_approximate() => Ok(set),
        Ok(_) | Err(Error::NotInCatalog(_)) => Ok(f_quadrature_grid(spec, &[tau], tol)?[0]),
        Err(e) => Err(e),
    }
}

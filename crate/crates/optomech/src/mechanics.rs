//! Quadratic mechanical subsystem: P11 / I_P22 equations, Bogoliubov pair,
//! J-coefficients and the Mathieu perturbative solution.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_dual::DualNum;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ode::{self, Tolerance};
use crate::params::{DriveSpec, ModelSpec};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `(P11, dP11, I_P22, P22)` at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsystemPoint {
    pub tau: f64,
    pub p11: f64,
    pub dp11: f64,
    pub ip22: f64,
    pub p22: f64,
}

impl SubsystemPoint {
    pub fn xi(&self) -> Complex64 {
        Complex64::new(self.p11, -self.ip22)
    }

    pub fn dxi(&self) -> Complex64 {
        Complex64::new(self.dp11, -self.p22)
    }

    /// `alpha = (xi + i xi')/2`, `beta = (xi* + i xi'*)/2`.
    pub fn bogoliubov(&self) -> (Complex64, Complex64) {
        let (xi, dxi) = (self.xi(), self.dxi());
        ((xi + I * dxi) * 0.5, (xi.conj() + I * dxi.conj()) * 0.5)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsystemSolution {
    pub points: Vec<SubsystemPoint>,
}

impl SubsystemSolution {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.tau).collect()
    }

    pub fn at(&self, tau: f64) -> Result<&SubsystemPoint> {
        self.points
            .iter()
            .find(|p| p.tau == tau)
            .ok_or_else(|| invalid("tau", format!("{tau} is not on the solution grid")))
    }
}

pub fn xi(sol: &SubsystemSolution, tau: f64) -> Result<Complex64> {
    Ok(sol.at(tau)?.xi())
}

pub fn bogoliubov(sol: &SubsystemSolution, tau: f64) -> Result<(Complex64, Complex64)> {
    Ok(sol.at(tau)?.bogoliubov())
}

/// Closed form for `P'' + (1 + 4 d2) P = 0`.
fn constant_point(d2: f64, tau: f64) -> SubsystemPoint {
    let z2 = 1.0 + 4.0 * d2;
    let (p, dp, q, dq) = if z2 > 0.0 {
        let z = z2.sqrt();
        let (s, c) = (z * tau).sin_cos();
        (c, -z * s, s / z, c)
    } else if z2 < 0.0 {
        let k = (-z2).sqrt();
        let (s, c) = ((k * tau).sinh(), (k * tau).cosh());
        (c, k * s, s / k, c)
    } else {
        (1.0, 0.0, tau, 1.0)
    };
    SubsystemPoint { tau, p11: p, dp11: dp, ip22: q, p22: dq }
}

/// Point values of the subsystem at the grid, without requiring a sorted grid.
pub fn solve_subsystem_with(spec: &ModelSpec, tau_max: f64, grid: &[f64], tol: Tolerance) -> Result<SubsystemSolution> {
    if !(tau_max > 0.0) {
        return Err(invalid("tau_max", "must be > 0"));
    }
    if let Some(&bad) = grid.iter().find(|&&t| !(0.0..=tau_max).contains(&t)) {
        return Err(invalid("grid", format!("{bad} outside [0, tau_max]")));
    }
    spec.squeezing.validate("squeezing")?;
    if let Some(d2) = spec.squeezing.constant_value() {
        let points = grid.iter().map(|&t| constant_point(d2, t)).collect();
        return Ok(SubsystemSolution { points });
    }
    let sq = spec.squeezing;
    let rhs = move |t: f64, y: &[f64; 4]| {
        let w2 = 1.0 + 4.0 * sq.eval(t);
        [y[1], -w2 * y[0], y[3], -w2 * y[2]]
    };
    let traj = ode::integrate(rhs, 0.0, [1.0, 0.0, 0.0, 1.0], tau_max, grid, tol)?;
    let points = grid
        .iter()
        .map(|&t| {
            let y = traj.eval(t);
            SubsystemPoint { tau: t, p11: y[0], dp11: y[1], ip22: y[2], p22: y[3] }
        })
        .collect();
    Ok(SubsystemSolution { points })
}

pub fn solve_subsystem(spec: &ModelSpec, tau_max: f64, grid: &[f64]) -> Result<SubsystemSolution> {
    solve_subsystem_with(spec, tau_max, grid, Tolerance::STRICT)
}

/// Single point convenience wrapper.
pub fn subsystem_at(spec: &ModelSpec, tau: f64) -> Result<SubsystemPoint> {
    subsystem_at_with(spec, tau, Tolerance::STRICT)
}

pub fn subsystem_at_with(spec: &ModelSpec, tau: f64, tol: Tolerance) -> Result<SubsystemPoint> {
    if tau == 0.0 {
        return Ok(constant_point(0.0, 0.0));
    }
    Ok(solve_subsystem_with(spec, tau, &[tau], tol)?.points[0])
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JSet<T = f64> {
    pub jb: T,
    pub jp: T,
    pub jm: T,
}

impl<T: DualNum<Primitive = f64> + Copy> JSet<T> {
    pub fn re(&self) -> JSet {
        JSet { jb: self.jb.re(), jp: self.jp.re(), jm: self.jm.re() }
    }
}

/// Bogoliubov pair of `e^{-i Jb N_b} S(J+) S(J-)` in the sign convention of
/// the J equations of motion.
pub fn compose(j: &JSet) -> (Complex64, Complex64) {
    let (cp, sp) = ((2.0 * j.jp).cosh(), (2.0 * j.jp).sinh());
    let (cm, sm) = ((2.0 * j.jm).cosh(), (2.0 * j.jm).sinh());
    let ph = Complex64::from_polar(1.0, -j.jb);
    let alpha = ph * Complex64::new(cp * cm, -sp * sm);
    let beta = -ph * Complex64::new(-cp * sm, sp * cm);
    (alpha, beta)
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Remove 2pi jumps from a sequence of wrapped angles.
pub fn unwrap(angles: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(angles.len());
    let mut offset = 0.0;
    for (i, &a) in angles.iter().enumerate() {
        if i > 0 {
            let d = a + offset - out[i - 1];
            offset -= 2.0 * PI * (d / (2.0 * PI)).round();
        }
        out.push(a + offset);
    }
    out
}

fn checked_arcosh(x: f64, what: &str) -> Result<f64> {
    if x < 1.0 - 1e-9 {
        return Err(Error::Bogoliubov(format!("{what}: arcosh argument {x} below 1")));
    }
    Ok(if x < 1.0 { 0.0 } else { x.acosh() })
}

/// Invert the composition law. `jb` is returned in (-pi, pi]; the signs of
/// `jp` and `jm` are recovered as well as their magnitudes.
pub fn j_coefficients(alpha: Complex64, beta: Complex64) -> Result<JSet> {
    let defect = alpha.norm_sqr() - beta.norm_sqr() - 1.0;
    if !(defect.abs() < 1e-6) {
        return Err(Error::Bogoliubov(format!("|alpha|^2 - |beta|^2 - 1 = {defect:e}")));
    }
    let d = alpha * alpha - beta * beta;
    let m = d.norm();
    // magnitudes, also used as a consistency check
    let ap = checked_arcosh(m, "|alpha^2 - beta^2|")?;
    let am = checked_arcosh((2.0 * alpha.norm_sqr() - 1.0) / m, "(2|alpha|^2 - 1)/|alpha^2 - beta^2|")?;

    let j = j_from_pair(alpha.re, alpha.im, beta.re, beta.im);
    let tol = 1e-6 * (1.0 + ap.max(am));
    if (4.0 * j.jp.abs() - ap).abs() > tol || (4.0 * j.jm.abs() - am).abs() > tol {
        return Err(Error::Bogoliubov("J magnitudes disagree with arcosh forms".into()));
    }
    Ok(j)
}

/// Sign-preserving inversion of the composition law on split real and
/// imaginary parts, generic so that parameter derivatives propagate.
/// `jb` is wrapped into (-pi, pi] using its real part.
pub fn j_from_pair<T: DualNum<Primitive = f64> + Copy>(ar: T, ai: T, br: T, bi: T) -> JSet<T> {
    // alpha^2 - beta^2 = e^{-2 i Jb} cosh(4 J+)
    let d_re = ar * ar - ai * ai - br * br + bi * bi;
    let d_im = (ar * ai - br * bi) * 2.0;
    let mut jb = d_im.atan2(d_re) * (-0.5);
    // pick the branch with Re(alpha e^{i Jb}) = cosh(2J+) cosh(2J-) > 0
    let (s, c) = jb.re().sin_cos();
    if ar.re() * c - ai.re() * s < 0.0 {
        jb += PI;
    }
    let w = wrap_angle(jb.re());
    jb += w - jb.re();
    let (s, c) = jb.sin_cos();
    // beta e^{i Jb} = cosh(2J+) sinh(2J-) - i sinh(2J+) cosh(2J-)
    let u = br * c - bi * s;
    let v = -(br * s + bi * c);
    let sum = (v + u).asinh() * 0.5;
    let diff = (v - u).asinh() * 0.5;
    JSet { jb, jp: (sum + diff) * 0.5, jm: (sum - diff) * 0.5 }
}

/// Integrate the J equations of motion directly. `jb` is continuous (not wrapped).
pub fn j_coefficients_ode(spec: &ModelSpec, tau: f64) -> Result<JSet> {
    j_coefficients_ode_with(spec, tau, Tolerance::STRICT)
}

pub fn j_coefficients_ode_with(spec: &ModelSpec, tau: f64, tol: Tolerance) -> Result<JSet> {
    if !(tau >= 0.0) {
        return Err(invalid("tau", "must be >= 0"));
    }
    let sq = spec.squeezing;
    if sq.is_zero() {
        return Ok(JSet { jb: tau, jp: 0.0, jm: 0.0 });
    }
    let rhs = move |t: f64, y: &[f64; 3]| {
        let d2 = sq.eval(t);
        let (s, c) = (2.0 * y[0]).sin_cos();
        let x = 4.0 * y[1];
        [1.0 + 2.0 * d2 * (1.0 - s * x.tanh()), d2 * c, d2 * s / x.cosh()]
    };
    let y = ode::integrate(rhs, 0.0, [0.0; 3], tau, &[], tol)?.last();
    Ok(JSet { jb: y[0], jp: y[1], jm: y[2] })
}

/// Small-d2 solution of the Mathieu equation at `Omega_d2 = 2`.
/// Returns `(P11, I_P22, xi)`.
pub fn mathieu_perturbative(d2: f64, tau: f64) -> (f64, f64, Complex64) {
    let (s, c) = tau.sin_cos();
    let (sh, ch) = ((d2 * tau).sinh(), (d2 * tau).cosh());
    let p11 = c * ch - s * sh;
    let ip22 = -(c * sh - s * ch) / (1.0 - d2);
    let xi = Complex64::from_polar(ch, -tau) + I * Complex64::from_polar(sh, tau);
    (p11, ip22, xi)
}

/// Bogoliubov pair of the compact perturbative solution with the slowly
/// varying envelope held fixed when differentiating:
/// `alpha = e^{-i tau} cosh(d2 tau)`, `beta = -i e^{-i tau} sinh(d2 tau)`.
pub fn mathieu_bogoliubov(d2: f64, tau: f64) -> (Complex64, Complex64) {
    let ph = Complex64::from_polar(1.0, -tau);
    (ph * (d2 * tau).cosh(), -I * ph * (d2 * tau).sinh())
}

/// Frequency shift equivalent to a constant squeezing term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingMap {
    pub omega: f64,
    pub r: f64,
}

impl SqueezingMap {
    pub fn map_mu(&self, mu: Complex64) -> Complex64 {
        mu * self.r.cosh() + mu.conj() * self.r.sinh()
    }
}

pub fn map_constant_squeezing(omega_m: f64, d2: f64) -> Result<SqueezingMap> {
    let radicand = 1.0 + 4.0 * d2 / omega_m;
    if !(omega_m > 0.0) || !(radicand > 0.0) {
        return Err(invalid("d2", "1 + 4 d2 / omega_m must be positive"));
    }
    let omega = omega_m * radicand.sqrt();
    Ok(SqueezingMap { omega, r: -0.5 * (omega / omega_m).ln() })
}

/// Constant-squeezing spec helper used by tests and the CLI.
pub fn squeezing_spec(squeezing: DriveSpec) -> ModelSpec {
    ModelSpec { squeezing, ..ModelSpec::default() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rk4_fixed(d2: impl Fn(f64) -> f64, tau: f64, h: f64) -> [f64; 4] {
        let f = |t: f64, y: [f64; 4]| {
            let w2 = 1.0 + 4.0 * d2(t);
            [y[1], -w2 * y[0], y[3], -w2 * y[2]]
        };
        let n = (tau / h).round() as usize;
        let h = tau / n as f64;
        let mut y = [1.0, 0.0, 0.0, 1.0];
        let mut t = 0.0;
        let add = |y: [f64; 4], k: [f64; 4], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2], y[3] + s * k[3]];
        for _ in 0..n {
            let k1 = f(t, y);
            let k2 = f(t + h / 2.0, add(y, k1, h / 2.0));
            let k3 = f(t + h / 2.0, add(y, k2, h / 2.0));
            let k4 = f(t + h, add(y, k3, h));
            for i in 0..4 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += h;
        }
        y
    }

    #[test]
    fn free_rotation() {
        let p = subsystem_at(&ModelSpec::default(), PI / 2.0).unwrap();
        assert_abs_diff_eq!(p.p11, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.ip22, 1.0, epsilon = 1e-15);
        let (a, b) = p.bogoliubov();
        assert_abs_diff_eq!((a - Complex64::new(0.0, -1.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_squeezing_fast_path() {
        let p = subsystem_at(&squeezing_spec(DriveSpec::constant(0.5)), 1.0).unwrap();
        assert_abs_diff_eq!(p.p11, 3f64.sqrt().cos(), epsilon = 1e-15);
        let d2: f64 = 0.3;
        let tau = 2.2;
        let z = (1.0 + 4.0 * d2).sqrt();
        let (a, b) = subsystem_at(&squeezing_spec(DriveSpec::constant(d2)), tau).unwrap().bogoliubov();
        let a_ref = Complex64::new(2.0 * (z * tau).cos(), -(1.0 + z * z) * (z * tau).sin() / z) * 0.5;
        let b_ref = Complex64::new(0.0, -2.0 * d2 * (z * tau).sin() / z);
        assert_abs_diff_eq!((a - a_ref).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((b - b_ref).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a.norm_sqr() - b.norm_sqr(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn ode_matches_fixed_step_rk4() {
        let spec = squeezing_spec(DriveSpec::cosine(0.05, 2.0));
        let p = subsystem_at(&spec, 3.0).unwrap();
        let y = rk4_fixed(|t| 0.05 * (2.0 * t).cos(), 3.0, 1e-3);
        assert_abs_diff_eq!(p.p11, y[0], epsilon = 1e-8);
        assert_abs_diff_eq!(p.dp11, y[1], epsilon = 1e-8);
        assert_abs_diff_eq!(p.ip22, y[2], epsilon = 1e-8);
        assert_abs_diff_eq!(p.p22, y[3], epsilon = 1e-8);
    }

    #[test]
    fn boundary_conditions() {
        let spec = squeezing_spec(DriveSpec::cosine(0.2, 1.3));
        let sol = solve_subsystem(&spec, 2.0, &[0.0, 1.0, 2.0]).unwrap();
        let p0 = sol.at(0.0).unwrap();
        assert_eq!((p0.p11, p0.dp11, p0.ip22, p0.p22), (1.0, 0.0, 0.0, 1.0));
        assert_eq!(p0.xi(), Complex64::new(1.0, 0.0));
        assert_eq!(p0.dxi(), Complex64::new(0.0, -1.0));
        assert!(sol.at(0.5).is_err());
    }

    #[test]
    fn j_examples() {
        let tau: f64 = 1.3;
        let j = j_coefficients(Complex64::from_polar(1.0, -tau), Complex64::new(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(j.jb, tau, epsilon = 1e-12);
        assert_abs_diff_eq!(j.jp, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(j.jm, 0.0, epsilon = 1e-12);
        assert!(j_coefficients(Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn j_ode_matches_bogoliubov_inversion() {
        let spec = squeezing_spec(DriveSpec::cosine(0.08, 2.0));
        let ode = j_coefficients_ode(&spec, 4.0).unwrap();
        let (a, b) = subsystem_at(&spec, 4.0).unwrap().bogoliubov();
        let inv = j_coefficients(a, b).unwrap();
        assert_abs_diff_eq!(wrap_angle(ode.jb - inv.jb), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(ode.jp, inv.jp, epsilon = 1e-6);
        assert_abs_diff_eq!(ode.jm, inv.jm, epsilon = 1e-6);
    }

    #[test]
    fn j_ode_constant_small_d2() {
        let j = j_coefficients_ode(&squeezing_spec(DriveSpec::constant(0.01)), 3.0).unwrap();
        assert_abs_diff_eq!(j.jb, 1.02 * 3.0, epsilon = 5e-3);
        let j0 = j_coefficients_ode(&ModelSpec::default(), 3.0).unwrap();
        assert_eq!(j0, JSet { jb: 3.0, jp: 0.0, jm: 0.0 });
    }

    #[test]
    fn mathieu_limits() {
        let (p, q, xi) = mathieu_perturbative(0.0, 0.7);
        assert_abs_diff_eq!(p, 0.7f64.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(q, 0.7f64.sin(), epsilon = 1e-15);
        assert_abs_diff_eq!((xi - Complex64::from_polar(1.0, -0.7)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn mathieu_bogoliubov_approximate() {
        // second-order expanded xi, differentiated in full: defect is O(d2) at fixed d2 tau
        let (d, tau) = (0.05, 1.0);
        let xi = |t: f64| Complex64::from_polar(1.0 + (d * t).powi(2) / 2.0, -t) + I * Complex64::from_polar(d * t, t);
        let h = 1e-5;
        let dxi = (xi(tau + h) - xi(tau - h)) / (2.0 * h);
        let a = (xi(tau) + I * dxi) * 0.5;
        let b = (xi(tau).conj() + I * dxi.conj()) * 0.5;
        assert!((a.norm_sqr() - b.norm_sqr() - 1.0).abs() < 2.0 * d);
        // envelope-frozen pair: identity holds exactly
        for &t in &[0.5, 1.0, 5.0, 10.0] {
            let (a, b) = mathieu_bogoliubov(d, t);
            assert_abs_diff_eq!(a.norm_sqr() - b.norm_sqr(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn squeezing_map() {
        let m = map_constant_squeezing(1.0, 0.0).unwrap();
        assert_eq!((m.omega, m.r), (1.0, 0.0));
        let m = map_constant_squeezing(1.0, 0.75).unwrap();
        assert_abs_diff_eq!(m.omega, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.r, -0.5 * 2f64.ln(), epsilon = 1e-15);
        assert!(map_constant_squeezing(1.0, -0.3).is_err());
    }

    #[test]
    fn unwrap_removes_jumps() {
        let raw: Vec<f64> = (0..40).map(|k| wrap_angle(0.3 * k as f64)).collect();
        let un = unwrap(&raw);
        for (k, x) in un.iter().enumerate() {
            assert_abs_diff_eq!(*x, 0.3 * k as f64, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn bogoliubov_identity_analytic(d2 in -0.2f64..3.0, tau in 0.0f64..20.0) {
            let (a, b) = subsystem_at(&squeezing_spec(DriveSpec::constant(d2)), tau).unwrap().bogoliubov();
            prop_assert!((a.norm_sqr() - b.norm_sqr() - 1.0).abs() < 1e-9 * (1.0 + a.norm_sqr()));
        }

        #[test]
        fn bogoliubov_identity_ode(d2 in 0.0f64..0.5, w in 0.1f64..3.0, tau in 0.1f64..10.0) {
            let (a, b) = subsystem_at(&squeezing_spec(DriveSpec::cosine(d2, w)), tau).unwrap().bogoliubov();
            prop_assert!((a.norm_sqr() - b.norm_sqr() - 1.0).abs() < 1e-7 * (1.0 + a.norm_sqr()));
        }

        #[test]
        fn j_round_trip(jb in -3.0f64..3.0, jp in -1.0f64..1.0, jm in -1.0f64..1.0) {
            let (a, b) = compose(&JSet { jb, jp, jm });
            let j = j_coefficients(a, b).unwrap();
            prop_assert!(wrap_angle(j.jb - jb).abs() < 1e-8);
            prop_assert!((j.jp - jp).abs() < 1e-8);
            prop_assert!((j.jm - jm).abs() < 1e-8);
            let (a2, b2) = compose(&j);
            prop_assert!((a2 - a).norm() < 1e-8 * a.norm() && (b2 - b).norm() < 1e-8 * a.norm());
        }
    }
}

//! First and second moments of the evolved state for coherent inputs,
//! covariance matrix and symplectic spectra.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::{derived_scalars, DerivedScalars, FSet};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Moments in the frame rotating with the cavity frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub a: Complex64,
    pub b: Complex64,
    pub a2: Complex64,
    pub b2: Complex64,
    pub adag_a: f64,
    pub bdag_b: f64,
    pub ab: Complex64,
    pub abdag: Complex64,
}

impl MomentSet {
    /// Moments of the product coherent state `|mu_c> |mu_m>`.
    pub fn coherent(mu_c: Complex64, mu_m: Complex64) -> Self {
        MomentSet {
            a: mu_c,
            b: mu_m,
            a2: mu_c * mu_c,
            b2: mu_m * mu_m,
            adag_a: mu_c.norm_sqr(),
            bdag_b: mu_m.norm_sqr(),
            ab: mu_c * mu_m,
            abdag: mu_c * mu_m.conj(),
        }
    }

    pub fn to_array(&self) -> [Complex64; 8] {
        [self.a, self.b, self.a2, self.b2, c(self.adag_a), c(self.bdag_b), self.ab, self.abdag]
    }

    pub fn max_abs_diff(&self, other: &MomentSet) -> f64 {
        self.to_array().iter().zip(other.to_array()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }
}

pub fn evolve_moments(f: &FSet, alpha: Complex64, beta: Complex64, mu_c: Complex64, mu_m: Complex64) -> MomentSet {
    let d = derived_scalars(f, alpha, beta, mu_m);
    let n = mu_c.norm_sqr();
    let (g, dl) = (d.gamma, d.delta);
    let rot = |k: f64| Complex64::from_polar(1.0, -k * d.theta);
    let pref = Complex64::from_polar(1.0, -d.varphi) * (n * (rot(1.0) - 1.0)).exp() * d.e_bpbm * mu_c;
    let e4 = d.e_bpbm * d.e_bpbm * (-d.k_na.norm_sqr()).exp();
    let mech = alpha * mu_m + beta * mu_m.conj();
    let shift = g + dl * n;
    let (qp, qm) = (f.f_nabp, f.f_nabm);
    let kicked = mu_m.conj() - I * qp - qm;
    let weight = rot(1.0) * n + 1.0;
    let cross = (alpha.conj() * mu_m.conj() + beta.conj() * mu_m) * shift;

    MomentSet {
        a: pref,
        b: mech + shift,
        a2: Complex64::from_polar(1.0, -2.0 * d.varphi) * mu_c * mu_c * rot(1.0) * (n * (rot(2.0) - 1.0)).exp() * e4,
        b2: alpha * alpha * mu_m * mu_m
            + alpha * beta * (2.0 * mu_m.norm_sqr() + 1.0)
            + beta * beta * mu_m.conj() * mu_m.conj()
            + mech * shift * 2.0
            + g * g
            + g * dl * (2.0 * n)
            + dl * dl * n * (1.0 + n),
        adag_a: n,
        bdag_b: (alpha.norm_sqr() + beta.norm_sqr()) * mu_m.norm_sqr()
            + 2.0 * (alpha.conj() * beta * mu_m.conj() * mu_m.conj()).re
            + 2.0 * cross.re
            + 2.0 * (g.conj() * dl).re * n
            + dl.norm_sqr() * n * (1.0 + n)
            + beta.norm_sqr()
            + g.norm_sqr(),
        ab: pref * (alpha * mu_m + beta * kicked + g + weight * dl),
        abdag: pref * (alpha.conj() * kicked + beta.conj() * mu_m + g.conj() + weight * dl.conj()),
    }
}

/// 4x4 Hermitian covariance matrix in the (a, b, a^dag, b^dag) basis,
/// `sigma_ij = <{X_i^dag, X_j}> - 2 <X_i^dag><X_j>`.
pub type CovarianceMatrix = Matrix4<Complex64>;

#[derive(Clone, Copy, PartialEq)]
struct Op {
    mode: usize,
    dag: bool,
}

const BASIS: [Op; 4] = [Op { mode: 0, dag: false }, Op { mode: 1, dag: false }, Op { mode: 0, dag: true }, Op { mode: 1, dag: true }];

fn first(m: &MomentSet, x: Op) -> Complex64 {
    let v = if x.mode == 0 { m.a } else { m.b };
    if x.dag {
        v.conj()
    } else {
        v
    }
}

/// `<x y>` from the eight moments.
fn second(m: &MomentSet, x: Op, y: Op) -> Complex64 {
    if x.mode == y.mode {
        let (sq, num) = if x.mode == 0 { (m.a2, m.adag_a) } else { (m.b2, m.bdag_b) };
        return match (x.dag, y.dag) {
            (false, false) => sq,
            (true, true) => sq.conj(),
            (true, false) => c(num),
            (false, true) => c(num + 1.0),
        };
    }
    // different modes commute; order as (a-part, b-part)
    let (xa, xb) = if x.mode == 0 { (x, y) } else { (y, x) };
    match (xa.dag, xb.dag) {
        (false, false) => m.ab,
        (false, true) => m.abdag,
        (true, false) => m.abdag.conj(),
        (true, true) => m.ab.conj(),
    }
}

fn adjoint(x: Op) -> Op {
    Op { mode: x.mode, dag: !x.dag }
}

pub fn covariance(m: &MomentSet) -> Result<CovarianceMatrix> {
    let mut s = CovarianceMatrix::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let xi = adjoint(BASIS[i]);
            let xj = BASIS[j];
            s[(i, j)] = second(m, xi, xj) + second(m, xj, xi) - first(m, xi) * first(m, xj) * 2.0;
        }
    }
    let asym = (s - s.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if asym > 1e-10 * (1.0 + s.iter().map(|z| z.norm()).fold(0.0, f64::max)) {
        return Err(Error::Consistency(format!("covariance not Hermitian (defect {asym:e})")));
    }
    Ok(s)
}

/// Mechanical-block elements in closed form, `(sigma_22, sigma_42)`.
pub fn mechanical_block_closed(d: &DerivedScalars, alpha: Complex64, beta: Complex64, mu_c: Complex64) -> (f64, Complex64) {
    let n = mu_c.norm_sqr();
    (1.0 + 2.0 * beta.norm_sqr() + 2.0 * d.delta.norm_sqr() * n, alpha * beta * 2.0 + d.delta * d.delta * (2.0 * n))
}

/// Positive symplectic eigenvalues of a covariance matrix in the
/// (a_1..a_n, a_1^dag..a_n^dag) ordering, sorted descending.
pub fn symplectic_eigenvalues_dyn(sigma: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let dim = sigma.nrows();
    if dim % 2 != 0 || sigma.ncols() != dim {
        return Err(Error::Consistency("covariance must be square with even dimension".into()));
    }
    let n = dim / 2;
    // Z sigma is similar to L^dag Z L for sigma = L L^dag, which is Hermitian
    let herm = (sigma + sigma.adjoint()) * c(0.5);
    let chol = herm.clone().cholesky().ok_or_else(|| Error::Consistency("covariance is not positive definite".into()))?;
    let l = chol.l();
    let mut z = DMatrix::<Complex64>::identity(dim, dim);
    for k in n..dim {
        z[(k, k)] = c(-1.0);
    }
    let h = l.adjoint() * z * &l;
    let h = (&h + h.adjoint()) * c(0.5);
    let eig = h.symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(vals.into_iter().take(n).collect())
}

pub fn symplectic_eigenvalues(sigma: &CovarianceMatrix) -> Result<Vec<f64>> {
    let d = DMatrix::from_iterator(4, 4, sigma.iter().copied());
    symplectic_eigenvalues_dyn(&d)
}

/// Single-mode eigenvalue from a 2x2 block: `nu^2 = sigma_11^2 - |sigma_31|^2`.
pub fn single_mode_eigenvalue(s11: f64, s31: Complex64) -> f64 {
    (s11 * s11 - s31.norm_sqr()).max(0.0).sqrt()
}

/// Reduced optical and mechanical eigenvalues `(nu_op, nu_me)` of a covariance.
pub fn subsystem_eigenvalues(sigma: &CovarianceMatrix) -> (f64, f64) {
    (single_mode_eigenvalue(sigma[(0, 0)].re, sigma[(2, 0)]), single_mode_eigenvalue(sigma[(1, 1)].re, sigma[(3, 1)]))
}

/// Closed forms for the subsystem eigenvalues. `None` for the optical
/// value when `|sin(theta/2)| < 1e-6`, where the numeric block extraction
/// should be used instead.
pub fn subsystem_eigenvalues_closed(k_na: Complex64, mu_c: f64, theta: f64) -> (Option<f64>, f64) {
    let m2 = mu_c * mu_c;
    let k2 = k_na.norm_sqr();
    let nu_me = (1.0 + 4.0 * k2 * m2).sqrt();
    if (theta / 2.0).sin().abs() < 1e-6 {
        return (None, nu_me);
    }
    let x = (-4.0 * m2 * (theta / 2.0).sin().powi(2) - k2).exp();
    let eit = Complex64::from_polar(1.0, theta);
    let osc = eit * (m2 * (eit * eit - 1.0)).exp() * (2.0 * m2 * (eit.conj() - 1.0)).exp();
    let quartic = 1.0 - 2.0 * x - (-4.0 * k2 - 4.0 * m2 * theta.sin().powi(2)).exp() + 2.0 * (-3.0 * k2).exp() * osc.re;
    let nu_op2 = 1.0 + 4.0 * m2 * (1.0 - x) + 4.0 * m2 * m2 * quartic;
    (Some(nu_op2.max(0.0).sqrt()), nu_me)
}

/// `(x_c, p_c, x_m, p_m)` with `x = (a + a^dag)/sqrt(2)`, `p = i(a^dag - a)/sqrt(2)`.
pub fn quadratures(m: &MomentSet) -> (f64, f64, f64, f64) {
    let s = std::f64::consts::SQRT_2;
    (s * m.a.re, s * m.a.im, s * m.b.re, s * m.b.im)
}

/// Phonon-damped evolution under constant coupling: mechanical label
/// `phi_n` and the decoherence exponent `D(n, m)`.
pub fn damped_coherent(n: u32, m: u32, kappa: f64, tau: f64, g0: f64) -> (Complex64, f64) {
    let z = Complex64::new(kappa / 2.0, 1.0);
    let phi = |k: u32| I * (g0 * k as f64) / z * (1.0 - (-z * tau).exp());
    let dn = n as f64 - m as f64;
    if kappa == 0.0 || n == m {
        return (phi(n), 0.0);
    }
    let zm = Complex64::new(-kappa / 2.0, 1.0);
    let osc = ((zm * tau).exp() - 1.0) / zm - ((-z * tau).exp() - 1.0) / z;
    let bracket = tau + (-(-kappa * tau).exp_m1()) / kappa - osc.re;
    let d = g0 * g0 * dn * dn * kappa / (2.0 * (1.0 + kappa * kappa / 4.0)) * bracket;
    (phi(n), d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{closed_form_set, coefficient_set};
    use crate::params::{DriveSpec, ModelSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn moments(spec: &ModelSpec, tau: f64, mu_c: Complex64, mu_m: Complex64) -> MomentSet {
        let s = coefficient_set(spec, tau).unwrap();
        evolve_moments(&s.f, s.alpha, s.beta, mu_c, mu_m)
    }

    #[test]
    fn free_evolution() {
        let (mc, mm) = (Complex64::new(0.7, 0.2), Complex64::new(-0.3, 0.5));
        let m = moments(&ModelSpec::default(), 1.3, mc, mm);
        assert!((m.a - mc).norm() < 1e-14);
        assert!((m.b - mm * Complex64::from_polar(1.0, -1.3)).norm() < 1e-14);
        let s = covariance(&m).unwrap();
        assert!((s - CovarianceMatrix::identity()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn initial_moments() {
        let (mc, mm) = (Complex64::new(0.7, 0.2), Complex64::new(-0.3, 0.5));
        let spec = ModelSpec::new(DriveSpec::constant(1.1), DriveSpec::constant(0.4), DriveSpec::default());
        let m = moments(&spec, 0.0, mc, mm);
        assert!(m.max_abs_diff(&MomentSet::coherent(mc, mm)) < 1e-14);
    }

    #[test]
    fn mechanics_returns_at_two_pi() {
        let m = moments(&ModelSpec::coupling_only(1.0), 2.0 * PI, c(1.0), c(0.0));
        assert!(m.b.norm() < 1e-12);
        let s = covariance(&m).unwrap();
        for (i, j) in [(1, 0), (3, 0), (1, 2), (3, 2)] {
            assert!(s[(i, j)].norm() < 1e-8);
        }
        let (x_c, _, x_m, p_m) = quadratures(&m);
        assert!(x_c.is_finite());
        assert_abs_diff_eq!(x_m, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p_m, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pure_squeezing_block() {
        let spec = ModelSpec::new(DriveSpec::default(), DriveSpec::default(), DriveSpec::constant(0.3));
        let s = coefficient_set(&spec, 1.9).unwrap();
        let m = evolve_moments(&s.f, s.alpha, s.beta, c(0.8), Complex64::new(0.1, 0.4));
        let sig = covariance(&m).unwrap();
        assert_abs_diff_eq!(sig[(1, 1)].re, 1.0 + 2.0 * s.beta.norm_sqr(), epsilon = 1e-12);
        assert!((sig[(3, 1)] - s.alpha * s.beta * 2.0).norm() < 1e-12);
    }

    #[test]
    fn mechanical_block_matches_closed_form() {
        let spec = ModelSpec::new(DriveSpec::constant(0.9), DriveSpec::constant(0.3), DriveSpec::default());
        let (mc, mm) = (Complex64::new(0.6, 0.3), Complex64::new(0.2, -0.7));
        let s = coefficient_set(&spec, 2.3).unwrap();
        let m = evolve_moments(&s.f, s.alpha, s.beta, mc, mm);
        let sig = covariance(&m).unwrap();
        let d = derived_scalars(&s.f, s.alpha, s.beta, mm);
        let (s22, s42) = mechanical_block_closed(&d, s.alpha, s.beta, mc);
        assert_abs_diff_eq!(sig[(1, 1)].re, s22, epsilon = 1e-12);
        assert!((sig[(3, 1)] - s42).norm() < 1e-12);
    }

    #[test]
    fn eigenvalue_examples() {
        let v = symplectic_eigenvalues(&CovarianceMatrix::identity()).unwrap();
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], 1.0, epsilon = 1e-12);
        let thermal = DMatrix::from_diagonal_element(2, 2, c(3.0));
        assert_abs_diff_eq!(symplectic_eigenvalues_dyn(&thermal).unwrap()[0], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn nu_me_example() {
        let s = coefficient_set(&ModelSpec::coupling_only(1.0), PI).unwrap();
        let d = derived_scalars(&s.f, s.alpha, s.beta, c(0.0));
        let (_, nu_me) = subsystem_eigenvalues_closed(d.k_na, 1.0, d.theta);
        assert_abs_diff_eq!(nu_me, 17f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn large_amplitude_maxima() {
        // away from recurrences the optical value saturates near 1 + 2|mu_c|^2
        let (_, set) = closed_form_set(&ModelSpec::coupling_only(1.0), PI / 2.0, false).unwrap();
        let d = derived_scalars(&set.f, set.alpha, set.beta, c(0.0));
        let mu = 30.0;
        let (op, me) = subsystem_eigenvalues_closed(d.k_na, mu, d.theta);
        assert!((op.unwrap() / (1.0 + 2.0 * mu * mu) - 1.0).abs() < 0.02);
        assert!((me / (2.0 * d.k_na.norm() * mu) - 1.0).abs() < 0.02);
    }

    #[test]
    fn damped_limits() {
        let (phi, d) = damped_coherent(2, 0, 0.0, 1.3, 0.7);
        assert!((phi - (1.0 - Complex64::from_polar(1.0, -1.3)) * 1.4).norm() < 1e-14);
        assert_eq!(d, 0.0);
        assert_eq!(damped_coherent(3, 3, 0.4, 2.0, 1.0).1, 0.0);
        let d1 = damped_coherent(1, 0, 0.1, PI, 1.0).1;
        let d2 = damped_coherent(0, 1, 0.1, PI, 1.0).1;
        assert!(d1 > 0.0);
        assert_abs_diff_eq!(d1, d2, epsilon = 1e-15);
        let mut last = 0.0;
        for k in 1..200 {
            let d = damped_coherent(1, 0, 0.1, 0.05 * k as f64, 1.0).1;
            assert!(d >= last - 1e-15);
            last = d;
        }
    }

    #[test]
    fn damped_exponent_is_time_integral_of_separation() {
        // D = (kappa/2) int_0^tau |phi_n - phi_m|^2 ds, by trapezoid on a fine grid
        let (kappa, tau, g) = (0.3, 2.5, 0.8);
        let steps = 200_000;
        let h = tau / steps as f64;
        let sep = |s: f64| (damped_coherent(2, 0, kappa, s, g).0 - damped_coherent(0, 0, kappa, s, g).0).norm_sqr();
        let mut acc = 0.5 * (sep(0.0) + sep(tau));
        for k in 1..steps {
            acc += sep(k as f64 * h);
        }
        let want = 0.5 * kappa * acc * h;
        assert_abs_diff_eq!(damped_coherent(2, 0, kappa, tau, g).1, want, epsilon = 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn invariants(g in -1.5f64..1.5, d1 in -1.0f64..1.0, tau in 0.0f64..7.0,
                      mr in -1.2f64..1.2, mi in -1.2f64..1.2, br in -1.0f64..1.0, bi in -1.0f64..1.0) {
            let spec = ModelSpec::new(DriveSpec::constant(g), DriveSpec::constant(d1), DriveSpec::default());
            let mc = Complex64::new(mr, mi);
            let m = moments(&spec, tau, mc, Complex64::new(br, bi));
            prop_assert_eq!(m.adag_a, mc.norm_sqr());
            let sig = covariance(&m).unwrap();
            prop_assert!((sig[(0, 0)] - sig[(2, 2)]).norm() < 1e-12);
            prop_assert!((sig[(1, 1)] - sig[(3, 3)]).norm() < 1e-12);
            let nu = symplectic_eigenvalues(&sig).unwrap();
            prop_assert!(nu.iter().all(|&v| v > 1.0 - 1e-8), "{:?}", nu);
            let s = coefficient_set(&spec, tau).unwrap();
            let d = derived_scalars(&s.f, s.alpha, s.beta, Complex64::new(br, bi));
            let (op, me) = subsystem_eigenvalues_closed(d.k_na, mc.norm(), d.theta);
            let (op_n, me_n) = subsystem_eigenvalues(&sig);
            prop_assert!((me - me_n).abs() < 1e-8);
            if let Some(op) = op {
                prop_assert!((op - op_n).abs() < 1e-8 * op.max(1.0), "{} vs {}", op, op_n);
            }
        }
    }
}

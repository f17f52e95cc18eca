//! Relative-entropy non-Gaussianity of the evolved pure state, its subsystem
//! bounds and the small/large amplitude approximants.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::{coefficient_set, derived_scalars, CoefficientSet};
use crate::error::{invalid, Error, Result};
use crate::moments::{covariance, evolve_moments, subsystem_eigenvalues, subsystem_eigenvalues_closed, symplectic_eigenvalues, CovarianceMatrix};
use crate::params::ModelSpec;

/// Entropy of a thermal mode with symplectic eigenvalue `nu`,
/// written as `(x+1) ln(x+1) - x ln x` with `x = (nu-1)/2`.
pub fn s_v(nu: f64) -> f64 {
    let x = ((nu - 1.0) / 2.0).max(0.0);
    if x == 0.0 {
        return 0.0;
    }
    (x + 1.0) * x.ln_1p() - x * x.ln()
}

fn checked(nu: f64) -> Result<f64> {
    if nu < 1.0 - 1e-6 || !nu.is_finite() {
        return Err(Error::Consistency(format!("unphysical symplectic eigenvalue {nu}")));
    }
    Ok(nu.max(1.0))
}

/// Non-Gaussianity of a pure state with covariance `sigma`: the entropy of
/// its Gaussian reference.
pub fn delta(sigma: &CovarianceMatrix) -> Result<f64> {
    let mut total = 0.0;
    for nu in symplectic_eigenvalues(sigma)? {
        total += s_v(checked(nu)?);
    }
    Ok(total)
}

/// Subadditivity and Araki–Lieb bounds `(delta_min, delta_max)`.
pub fn delta_bounds(nu_op: f64, nu_me: f64) -> (f64, f64) {
    let (a, b) = (s_v(nu_op), s_v(nu_me));
    ((a - b).abs(), a + b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SmallMu,
    LargeMu,
}

/// Approximants for `|mu_c| << 1` and `|mu_c| >> 1`.
///
/// The small-amplitude value is the entropy of the two eigenvalues to
/// second order in `mu`, `1 + 2(1 - (1 + k) e^{-k}) |mu|^2` and
/// `1 + 2(1 - e^{-k}) k |mu|^2` with `k = |K|^2`. They come from the
/// first-order cross covariance `<ab> - <a><b>`; `theta` only enters at
/// fourth order. The leading logarithm is [`delta_small_leading`].
pub fn delta_asymptotic(regime: Regime, mu_c: f64, k_na: Complex64, theta: f64) -> f64 {
    let m2 = mu_c * mu_c;
    let k2 = k_na.norm_sqr();
    match regime {
        Regime::SmallMu => {
            let nu_p = 1.0 + 2.0 * (-(-k2).exp_m1() - k2 * (-k2).exp()) * m2;
            let nu_m = 1.0 + 2.0 * (-(-k2).exp_m1()) * k2 * m2;
            s_v(nu_p) + s_v(nu_m)
        }
        Regime::LargeMu => {
            let nu_p = 1.0 + 2.0 * m2 * (1.0 - (-4.0 * m2 * (theta / 2.0).sin().powi(2) - k2).exp());
            let nu_m = (4.0 * m2 * k2 + 1.0).sqrt();
            s_v(nu_p) + s_v(nu_m)
        }
    }
}

/// `-2(1 + k - (1 + 2k) e^{-k}) |mu|^2 ln|mu|` with `k = |K|^2`.
pub fn delta_small_leading(mu_c: f64, k_na: Complex64) -> f64 {
    let k2 = k_na.norm_sqr();
    -2.0 * (k2 - (-k2).exp_m1() - 2.0 * k2 * (-k2).exp()) * mu_c * mu_c * mu_c.ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonGaussReport {
    pub delta: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub nu_op: f64,
    pub nu_me: f64,
    pub nu_global: (f64, f64),
}

/// Full report for a coherent-state input at time `tau`.
pub fn nongauss_report(spec: &ModelSpec, mu_c: Complex64, mu_m: Complex64, tau: f64) -> Result<NonGaussReport> {
    nongauss_report_from(&coefficient_set(spec, tau)?, mu_c, mu_m)
}

/// Report from an already computed coefficient set.
pub fn nongauss_report_from(set: &CoefficientSet, mu_c: Complex64, mu_m: Complex64) -> Result<NonGaussReport> {
    let m = evolve_moments(&set.f, set.alpha, set.beta, mu_c, mu_m);
    let sigma = covariance(&m)?;
    report_from(&sigma, set, mu_c, mu_m)
}

fn report_from(sigma: &CovarianceMatrix, set: &CoefficientSet, mu_c: Complex64, mu_m: Complex64) -> Result<NonGaussReport> {
    let nu = symplectic_eigenvalues(sigma)?;
    let (n1, n2) = (checked(nu[0])?, checked(nu[1])?);
    let (op_num, me_num) = subsystem_eigenvalues(sigma);
    let d = derived_scalars(&set.f, set.alpha, set.beta, mu_m);
    // closed forms hold without squeezing; otherwise use the block values
    let squeezed = set.beta.norm() > 1e-14;
    let (nu_op, nu_me) = if squeezed {
        (op_num, me_num)
    } else {
        let (op, me) = subsystem_eigenvalues_closed(d.k_na, mu_c.norm(), d.theta);
        (op.unwrap_or(op_num), me)
    };
    let (nu_op, nu_me) = (checked(nu_op)?, checked(nu_me)?);
    let (lo, hi) = delta_bounds(nu_op, nu_me);
    Ok(NonGaussReport { delta: s_v(n1) + s_v(n2), delta_min: lo, delta_max: hi, nu_op, nu_me, nu_global: (n1, n2) })
}

/// Reports on a grid of times.
pub fn nongauss_sweep(spec: &ModelSpec, mu_c: Complex64, mu_m: Complex64, taus: &[f64]) -> Result<Vec<NonGaussReport>> {
    if taus.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(invalid("tau", "must be finite and >= 0"));
    }
    taus.iter().map(|&t| nongauss_report(spec, mu_c, mu_m, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::closed_form_set;
    use crate::params::DriveSpec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn entropy_values() {
        assert_eq!(s_v(1.0), 0.0);
        assert_abs_diff_eq!(s_v(3.0), 2.0 * 2f64.ln(), epsilon = 1e-15);
        // near nu = 1 the stable form stays nonnegative and smooth
        assert!(s_v(1.0 + 1e-14) > 0.0 && s_v(1.0 + 1e-14) < 1e-12);
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(delta_bounds(2.0, 2.0).0, 0.0);
        let (lo, hi) = delta_bounds(3.0, 1.0);
        assert_eq!(lo, hi);
        assert_eq!(lo, s_v(3.0));
    }

    #[test]
    fn quadratic_evolution_is_gaussian() {
        let spec = ModelSpec::new(DriveSpec::default(), DriveSpec::constant(0.7), DriveSpec::constant(0.4));
        let r = nongauss_report(&spec, Complex64::new(1.2, 0.3), c(0.5), 2.1).unwrap();
        assert!(r.delta.abs() < 1e-8);
    }

    #[test]
    fn vanishes_at_recurrence_for_integer_coupling_squared() {
        for g in [1.0, 2f64.sqrt(), 2.0] {
            let r = nongauss_report(&ModelSpec::coupling_only(g), c(1.0), c(0.0), 2.0 * PI).unwrap();
            assert!(r.delta.abs() < 1e-8, "g = {g}: {}", r.delta);
        }
    }

    #[test]
    fn sandwiched_on_grid() {
        let spec = ModelSpec::coupling_only(10.0);
        for k in 0..100 {
            let tau = PI * k as f64 / 99.0;
            let r = nongauss_report(&spec, c(1.0), c(0.0), tau).unwrap();
            assert!(r.delta_min <= r.delta + 1e-8 && r.delta <= r.delta_max + 1e-8, "tau = {tau}: {r:?}");
        }
    }

    #[test]
    fn small_amplitude_approximant() {
        for g in [0.3, 1.0, 2.5] {
            let spec = ModelSpec::coupling_only(g);
            for tau in [0.7, PI, 4.0] {
                let mu = 1e-2;
                let exact = nongauss_report(&spec, c(mu), c(0.0), tau).unwrap().delta;
                let (_, set) = closed_form_set(&spec, tau, false).unwrap();
                let d = derived_scalars(&set.f, set.alpha, set.beta, c(0.0));
                let approx = delta_asymptotic(Regime::SmallMu, mu, d.k_na, d.theta);
                assert!((approx / exact - 1.0).abs() < 0.05, "g={g} tau={tau}: {approx} vs {exact}");
                // the bare logarithm converges like 1/ln|mu|
                let tiny = 1e-4;
                let exact_tiny = nongauss_report(&spec, c(tiny), c(0.0), tau).unwrap().delta;
                let far = (delta_small_leading(mu, d.k_na) / exact - 1.0).abs();
                let near = (delta_small_leading(tiny, d.k_na) / exact_tiny - 1.0).abs();
                assert!(near < far, "g={g} tau={tau}: {near} vs {far}");
            }
        }
    }

    #[test]
    fn large_amplitude_approximant() {
        let spec = ModelSpec::coupling_only(1.0);
        let tau = PI / 2.0;
        let exact = nongauss_report(&spec, c(10.0), c(0.0), tau).unwrap().delta;
        let (_, set) = closed_form_set(&spec, tau, false).unwrap();
        let d = derived_scalars(&set.f, set.alpha, set.beta, c(0.0));
        let approx = delta_asymptotic(Regime::LargeMu, 10.0, d.k_na, d.theta);
        assert!((approx / exact - 1.0).abs() < 0.05, "{approx} vs {exact}");
        assert_eq!(delta_asymptotic(Regime::LargeMu, 10.0, c(0.0), 0.0), 0.0);
    }

    #[test]
    fn matches_oracle_covariance() {
        use crate::oracle::{oracle_moments, propagate};
        use crate::params::InitialState;
        let spec = ModelSpec::coupling_only(1.0);
        let st = propagate(&spec, &InitialState::coherent(c(1.0), c(0.0)), PI, (30, 30)).unwrap();
        let from_oracle = delta(&covariance(&oracle_moments(&st)).unwrap()).unwrap();
        let r = nongauss_report(&spec, c(1.0), c(0.0), PI).unwrap();
        assert!((r.delta - from_oracle).abs() < 1e-5, "{} vs {from_oracle}", r.delta);
    }

    #[test]
    fn resonant_growth() {
        let spec = ModelSpec::new(DriveSpec::offset_sin(1.0, 1.0, 1.0), DriveSpec::default(), DriveSpec::default());
        let a = nongauss_report(&spec, c(1.0), c(0.0), 2.0 * PI).unwrap().delta;
        let b = nongauss_report(&spec, c(1.0), c(0.0), 6.0 * PI).unwrap().delta;
        assert!(b > a && a > 0.0, "{a} {b}");
    }

    #[test]
    fn grows_with_amplitude() {
        let spec = ModelSpec::coupling_only(1.0);
        let mut last = 0.0;
        for mu in [0.5, 1.0, 2.0, 4.0] {
            let d = nongauss_report(&spec, c(mu), c(0.0), PI).unwrap().delta;
            assert!(d > last);
            last = d;
        }
    }

    #[test]
    fn squeezing_suppression() {
        let mut last = f64::INFINITY;
        for d2 in [0.0, 1.0, 5.0] {
            let spec = ModelSpec::new(DriveSpec::constant(1.0), DriveSpec::default(), DriveSpec::constant(d2));
            let d = nongauss_report(&spec, c(1.0), c(0.0), PI).unwrap().delta;
            assert!(d <= last + 1e-12, "d2 = {d2}: {d} > {last}");
            last = d;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn nonnegative_and_zero_at_start(g in -2.0f64..2.0, d1 in -1.0f64..1.0, d2 in 0.0f64..0.5,
                                         mu in 0.0f64..2.0, tau in 0.0f64..7.0) {
            let spec = ModelSpec::new(DriveSpec::constant(g), DriveSpec::constant(d1), DriveSpec::constant(d2));
            let r = nongauss_report(&spec, c(mu), c(0.3), tau).unwrap();
            prop_assert!(r.delta >= -1e-8);
            prop_assert!(r.delta_min <= r.delta + 1e-7 && r.delta <= r.delta_max + 1e-7, "{:?}", r);
            let r0 = nongauss_report(&spec, c(mu), c(0.3), 0.0).unwrap();
            prop_assert!(r0.delta.abs() < 1e-8);
        }
    }
}

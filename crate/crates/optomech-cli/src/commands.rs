//! Column layout and per-point evaluation of every table command.

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use optomech::mechanics::subsystem_at_with;
use optomech::metrology::{
    cfi_homodyne, gravimetry, homodyne_cutoff, measurement_window, qfi_closed_form, qfi_coefficients, qfi_coherent,
    qfi_thermal, validity_warnings, ClosedForm, ClosedFormParams, Param, QfiCoefficients, StateFamily,
};
use optomech::moments::{covariance, evolve_moments};
use optomech::nongaussianity::nongauss_report_from;
use optomech::oracle::{oracle_moments, propagate};
use optomech::params::{coupling_constant, DriveSpec, InitialState, ModelSpec, Phase};

use crate::cache::Cache;
use crate::config::{Command, Config, Family, Point};
use crate::output::Cell;

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn complex_names(base: &str) -> [String; 2] {
    [format!("{base}_re"), format!("{base}_im")]
}

pub fn columns(cmd: Command, cfg: &Config) -> Result<Vec<String>> {
    Ok(match cmd {
        Command::DriveEval => names(&["tau", "coupling", "displacement", "squeezing"]),
        Command::Coeffs => names(&[
            "tau", "f_na", "f_na2", "f_bp", "f_bm", "f_nabp", "f_nabm", "j_b", "j_p", "j_m", "alpha_re", "alpha_im",
            "beta_re", "beta_im",
        ]),
        Command::Mechanics => names(&[
            "tau", "p11", "dp11", "ip22", "p22", "alpha_re", "alpha_im", "beta_re", "beta_im", "bogoliubov_defect",
        ]),
        Command::Moments => {
            let mut c = names(&["tau"]);
            for base in ["a", "b", "a2", "b2"] {
                c.extend(complex_names(base));
            }
            c.extend(names(&["adag_a", "bdag_b"]));
            for base in ["ab", "abdag"] {
                c.extend(complex_names(base));
            }
            c
        }
        Command::Nongauss => names(&["tau", "delta", "delta_min", "delta_max", "nu_op", "nu_me", "nu_1", "nu_2"]),
        Command::Qfi => {
            let (_, param) = qfi_target(cfg, &cfg.base_point())?;
            let mut c = vec!["tau".to_string(), param.name().to_string()];
            c.extend(QfiCoefficients::NAMES.iter().map(|s| s.to_string()));
            c.extend(names(&["qfi_thermal", "qfi_coherent"]));
            if cfg.qfi.closed_form.is_some() {
                c.push("qfi_closed_form".to_string());
            }
            c
        }
        Command::Cfi => names(&["tau", "lambda", "n_max", "cfi", "qfi_coherent"]),
        Command::Gravimetry => names(&[
            "platform", "coupling", "coupling_hz", "qfi_dimensionless", "qfi", "delta_g", "window_s",
        ]),
        Command::OracleCheck => names(&["tau", "max_moment_diff", "max_covariance_diff", "norm_defect"]),
        Command::Sweep | Command::Validate => bail!("`{}` has no table of its own", cmd.name()),
    })
}

/// Closed-form inputs read off a point.
fn closed_form_params(p: &Point, case: ClosedForm) -> ClosedFormParams {
    let offset = match p.spec.coupling {
        DriveSpec::Sinusoid { offset, phase: Phase::Sin, .. } => offset,
        _ => 0.0,
    };
    let freq = |d: DriveSpec| match d {
        DriveSpec::Sinusoid { frequency, .. } => frequency,
        DriveSpec::Constant { .. } => 0.0,
    };
    let omega = match case {
        ClosedForm::G0GeneralOmega => freq(p.spec.coupling),
        ClosedForm::D1GeneralOmega => freq(p.spec.displacement),
        _ => ClosedFormParams::default().omega,
    };
    ClosedFormParams {
        g0: p.spec.coupling.amplitude(),
        mu_c2: p.mu_c.norm_sqr(),
        r_t: p.r_t,
        epsilon: offset,
        omega,
        d1: p.spec.displacement.amplitude(),
        d2: p.spec.squeezing.amplitude(),
    }
}

/// Spec and parameter a `qfi` point estimates.
pub fn qfi_target(cfg: &Config, p: &Point) -> Result<(ModelSpec, Param)> {
    match (cfg.qfi.closed_form, cfg.qfi.param) {
        (Some(case), param) => {
            let (spec, case_param) = case.setup(&closed_form_params(p, case));
            if let Some(param) = param {
                if param != case_param {
                    bail!("config field `qfi.param`: `{param}` does not match closed form `{case}` (estimates `{case_param}`)");
                }
            }
            Ok((ModelSpec { omega_c: p.spec.omega_c, ..spec }, case_param))
        }
        (None, Some(param)) => Ok((p.spec, param)),
        (None, None) => bail!("config field `qfi.param`: required for `qfi`"),
    }
}

fn constant_drive(d: DriveSpec, field: &str) -> Result<f64> {
    d.constant_value().with_context(|| format!("config field `spec.{field}`: `cfi` needs a constant drive"))
}

/// Structural checks and validity warnings for one point, without evaluating it.
pub fn preflight(cmd: Command, cfg: &Config, p: &Point) -> Result<Vec<String>> {
    p.spec.validate()?;
    if !(p.tau >= 0.0 && p.tau.is_finite()) {
        bail!("config field `tau`: must be finite and >= 0");
    }
    let mut warnings = Vec::new();
    match cmd {
        Command::Qfi => {
            let (spec, param) = qfi_target(cfg, p)?;
            spec.validate()?;
            warnings.extend(validity_warnings(&spec, param));
        }
        Command::Cfi => {
            constant_drive(p.spec.coupling, "coupling")?;
            constant_drive(p.spec.displacement, "displacement")?;
            if !p.spec.squeezing.is_zero() {
                bail!("config field `spec.squeezing`: `cfi` needs zero squeezing");
            }
        }
        Command::Gravimetry => {
            if cfg.gravimetry.setups.is_empty() {
                bail!("config field `gravimetry.setups`: empty");
            }
            for (i, s) in cfg.gravimetry.setups.iter().enumerate() {
                s.setup.validate().with_context(|| format!("config field `gravimetry.setups[{i}]`"))?;
            }
        }
        Command::OracleCheck => {
            let [na, nb] = cfg.oracle.dims;
            if na < 2 || nb < 2 {
                bail!("config field `oracle.dims`: each cut-off must be >= 2");
            }
        }
        _ => {}
    }
    Ok(warnings)
}

fn push_complex(row: &mut Vec<Cell>, z: Complex64) {
    row.push(z.re.into());
    row.push(z.im.into());
}

/// Rows for one point.
pub fn evaluate(cmd: Command, cfg: &Config, p: &Point, cache: &Cache) -> Result<Vec<Vec<Cell>>> {
    let tau = p.tau;
    let spec = &p.spec;
    let tol = cfg.tolerance_profile;
    let row = match cmd {
        Command::DriveEval => vec![
            tau.into(),
            spec.coupling.eval(tau).into(),
            spec.displacement.eval(tau).into(),
            spec.squeezing.eval(tau).into(),
        ],
        Command::Coeffs => {
            let s = cache.coefficient_set(spec, tau, tol.quadrature())?;
            let mut row: Vec<Cell> = vec![tau.into()];
            row.extend(s.f.to_array().iter().map(|&x| Cell::from(x)));
            row.extend([s.j.jb, s.j.jp, s.j.jm].map(Cell::from));
            push_complex(&mut row, s.alpha);
            push_complex(&mut row, s.beta);
            row
        }
        Command::Mechanics => {
            let pt = subsystem_at_with(spec, tau, tol.mechanics())?;
            let (alpha, beta) = pt.bogoliubov();
            let mut row: Vec<Cell> = vec![tau.into(), pt.p11.into(), pt.dp11.into(), pt.ip22.into(), pt.p22.into()];
            push_complex(&mut row, alpha);
            push_complex(&mut row, beta);
            row.push((alpha.norm_sqr() - beta.norm_sqr() - 1.0).into());
            row
        }
        Command::Moments => {
            let s = cache.coefficient_set(spec, tau, tol.quadrature())?;
            let m = evolve_moments(&s.f, s.alpha, s.beta, p.mu_c, p.mu_m);
            let mut row: Vec<Cell> = vec![tau.into()];
            for z in [m.a, m.b, m.a2, m.b2] {
                push_complex(&mut row, z);
            }
            row.push(m.adag_a.into());
            row.push(m.bdag_b.into());
            push_complex(&mut row, m.ab);
            push_complex(&mut row, m.abdag);
            row
        }
        Command::Nongauss => {
            let s = cache.coefficient_set(spec, tau, tol.quadrature())?;
            let r = nongauss_report_from(&s, p.mu_c, p.mu_m)?;
            [tau, r.delta, r.delta_min, r.delta_max, r.nu_op, r.nu_me, r.nu_global.0, r.nu_global.1].map(Cell::from).to_vec()
        }
        Command::Qfi => {
            let (target, param) = qfi_target(cfg, p)?;
            let c = qfi_coefficients(&target, param, tau, cfg.qfi.mode)?;
            let theta = optomech::metrology::param_value(&target, param)?;
            let mut row: Vec<Cell> = vec![tau.into(), theta.into()];
            row.extend(c.to_array().map(Cell::from));
            row.push(qfi_thermal(&c, p.mu_c, p.r_t).into());
            row.push(qfi_coherent(c.c_b, c.c_cp, c.c_cm, p.mu_c).into());
            if let Some(case) = cfg.qfi.closed_form {
                row.push(qfi_closed_form(case, &closed_form_params(p, case), tau).into());
            }
            row
        }
        Command::Cfi => {
            let g0 = constant_drive(spec.coupling, "coupling")?;
            let d1 = constant_drive(spec.displacement, "displacement")?;
            let n_max = cfg.homodyne.n_max.unwrap_or_else(|| homodyne_cutoff(p.mu_c));
            let cfi = cfi_homodyne(g0, d1, p.mu_c, p.mu_m, p.lambda, tau, n_max)?;
            let c = qfi_coefficients(spec, Param::D1, tau, Default::default())?;
            vec![tau.into(), p.lambda.into(), (n_max as f64).into(), cfi.into(), qfi_coherent(c.c_b, c.c_cp, c.c_cm, p.mu_c).into()]
        }
        Command::Gravimetry => {
            let family = match cfg.gravimetry.family {
                Family::Coherent => StateFamily::Coherent,
                Family::Thermal => StateFamily::Thermal { r_t: p.r_t },
                Family::Fock => StateFamily::Fock,
            };
            return cfg
                .gravimetry
                .setups
                .iter()
                .map(|s| {
                    let r = gravimetry(&s.setup, p.mu_c, family, cfg.gravimetry.n_measurements)
                        .with_context(|| format!("setup `{}`", s.name))?;
                    let hz = s.setup.coupling_hz()?;
                    Ok(vec![
                        Cell::Text(s.name.clone()),
                        coupling_constant(&s.setup)?.into(),
                        hz.into(),
                        r.qfi_dimensionless.into(),
                        r.qfi_dimensionful.into(),
                        r.std_dev.into(),
                        measurement_window(hz)?.into(),
                    ])
                })
                .collect();
        }
        Command::OracleCheck => {
            let [na, nb] = cfg.oracle.dims;
            let state = propagate(spec, &InitialState::coherent(p.mu_c, p.mu_m), tau, (na, nb))?;
            let s = cache.coefficient_set(spec, tau, tol.quadrature())?;
            let analytic = evolve_moments(&s.f, s.alpha, s.beta, p.mu_c, p.mu_m);
            let numeric = oracle_moments(&state);
            let dcov = (covariance(&analytic)? - covariance(&numeric)?).iter().map(|z| z.norm()).fold(0.0, f64::max);
            vec![tau.into(), analytic.max_abs_diff(&numeric).into(), dcov.into(), state.norm_defect.into()]
        }
        Command::Sweep | Command::Validate => bail!("`{}` has no table of its own", cmd.name()),
    };
    Ok(vec![row])
}

//! Fock-truncated propagator for the extended Hamiltonian.
//!
//! `H` commutes with `N_a`, so each photon-number sector `n` evolves on
//! its own under `h_n = N_b + c_n(t) X + v(t) X^2` with `X = b + b^dag`,
//! `c_n = D1 - n G` and `v = D2`. Sector states are stored as
//! `e^{i chi_n} D(z_n) psi_n`: in the lab frame `z_n = 0` and `psi_n` carries
//! everything; in the displaced frame `z_n` follows the classical
//! trajectory and `psi_n` only feels `N_b + v X^2`, so a small Fock cut
//! covers large mechanical excursions. Both frames use the same
//! matrix-free stencil and fourth-order commutator-free Magnus steps.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::moments::MomentSet;
use crate::ode::{integrate, Tolerance};
use crate::params::{DriveSpec, InitialState, MechanicalState, ModelSpec, OpticalState, Phase};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sectors whose initial weight is below this are left empty.
const SECTOR_FLOOR: f64 = 1e-30;
/// Largest accepted truncation defect.
const DEFECT_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    Lab,
    Displaced,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleConfig {
    /// `(N_a, N_b)` Fock cut-offs.
    pub dims: (usize, usize),
    pub frame: Frame,
    /// Upper bound on `||h|| dt` per step.
    pub h_dt: f64,
}

impl OracleConfig {
    pub fn new(dims: (usize, usize)) -> Self {
        OracleConfig { dims, frame: Frame::Displaced, h_dt: 0.05 }
    }

    pub fn lab(dims: (usize, usize)) -> Self {
        OracleConfig { frame: Frame::Lab, ..OracleConfig::new(dims) }
    }
}

#[derive(Clone, Debug)]
pub struct TruncatedState {
    /// Row `n` holds `e^{i chi_n} psi_n` for photon number `n`.
    pub amplitudes: DMatrix<Complex64>,
    /// Mechanical displacement `z_n` of each sector frame.
    pub displacements: Vec<Complex64>,
    pub dims: (usize, usize),
    pub norm_defect: f64,
}

impl TruncatedState {
    fn row(&self, n: usize) -> Vec<Complex64> {
        self.amplitudes.row(n).iter().copied().collect()
    }

    fn empty(&self, n: usize) -> bool {
        self.amplitudes.row(n).iter().all(|z| *z == ZERO)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `<0_m| rho_m |0_m>` for the reduced mechanical state.
    pub fn mechanical_vacuum_fidelity(&self) -> f64 {
        let vac = basis(self.dims.1, 0);
        (0..self.dims.0).filter(|&n| !self.empty(n)).map(|n| sector_overlap(ZERO, &vac, self.displacements[n], &self.row(n), Ladder::Id).norm_sqr()).sum()
    }
}

fn basis(len: usize, k: usize) -> Vec<Complex64> {
    let mut v = vec![ZERO; len];
    v[k] = Complex64::new(1.0, 0.0);
    v
}

/// `X x` with `X = b + b^dag`.
fn apply_x(x: &[Complex64], out: &mut [Complex64]) {
    let n = x.len();
    for k in 0..n {
        let mut s = ZERO;
        if k > 0 {
            s += x[k - 1] * (k as f64).sqrt();
        }
        if k + 1 < n {
            s += x[k + 1] * ((k + 1) as f64).sqrt();
        }
        out[k] = s;
    }
}

/// `w N + c X + v X^2`.
#[derive(Clone, Copy, Debug)]
struct SectorOp {
    w: f64,
    c: f64,
    v: f64,
}

impl SectorOp {
    fn apply(&self, x: &[Complex64], out: &mut [Complex64], tmp: &mut [Complex64], tmp2: &mut [Complex64]) {
        apply_x(x, tmp);
        if self.v != 0.0 {
            apply_x(tmp, tmp2);
        }
        for k in 0..x.len() {
            let mut s = x[k] * (self.w * k as f64) + tmp[k] * self.c;
            if self.v != 0.0 {
                s += tmp2[k] * self.v;
            }
            out[k] = s;
        }
    }

    fn add(self, o: SectorOp) -> SectorOp {
        SectorOp { w: self.w + o.w, c: self.c + o.c, v: self.v + o.v }
    }

    fn scale(self, s: f64) -> SectorOp {
        SectorOp { w: self.w * s, c: self.c * s, v: self.v * s }
    }
}

/// `x <- exp(-i dt op) x` by Taylor series.
fn expm_apply(op: SectorOp, dt: f64, x: &mut [Complex64], scratch: &mut [Vec<Complex64>; 4]) {
    let [term, next, t1, t2] = scratch;
    term.copy_from_slice(x);
    for k in 1..60 {
        op.apply(term, next, t1, t2);
        let f = -I * (dt / k as f64);
        let mut size = 0.0f64;
        for (t, nv) in term.iter_mut().zip(next.iter()) {
            *t = nv * f;
            size = size.max(t.norm());
        }
        for (xi, t) in x.iter_mut().zip(term.iter()) {
            *xi += t;
        }
        if size < 1e-18 {
            break;
        }
    }
}

fn drive_bound(d: &DriveSpec) -> f64 {
    match *d {
        DriveSpec::Constant { amplitude } => amplitude.abs(),
        DriveSpec::Sinusoid { amplitude, offset, phase, .. } => match phase {
            Phase::Sin => amplitude.abs() * (1.0 + offset.abs()),
            Phase::Cos => amplitude.abs() * (offset.abs() + 1.0),
        },
    }
}

/// Evolve `psi` under `N + c(t) X + v(t) X^2` from 0 to `tau` and return the
/// largest probability seen in the two highest Fock levels.
fn evolve_sector<C, V>(psi: &mut Vec<Complex64>, c: C, v: V, c_max: f64, v_max: f64, tau: f64, h_dt: f64) -> f64
where
    C: Fn(f64) -> f64,
    V: Fn(f64) -> f64,
{
    let len = psi.len();
    let edge = |p: &[Complex64]| p.iter().skip(len.saturating_sub(2)).map(|z| z.norm_sqr()).sum::<f64>();
    let mut worst = edge(psi);
    if tau == 0.0 {
        return worst;
    }
    let norm = (len - 1) as f64 + 2.0 * c_max * (len as f64).sqrt() + 4.0 * v_max * len as f64;
    let steps = (tau * norm / h_dt).ceil().max(1.0) as usize;
    let h = tau / steps as f64;
    let s3 = 3f64.sqrt();
    let (n1, n2) = (0.5 - s3 / 6.0, 0.5 + s3 / 6.0);
    let (a1, a2) = ((3.0 - 2.0 * s3) / 12.0, (3.0 + 2.0 * s3) / 12.0);
    let mut scratch = [vec![ZERO; len], vec![ZERO; len], vec![ZERO; len], vec![ZERO; len]];
    for k in 0..steps {
        let t = k as f64 * h;
        let h1 = SectorOp { w: 1.0, c: c(t + n1 * h), v: v(t + n1 * h) };
        let h2 = SectorOp { w: 1.0, c: c(t + n2 * h), v: v(t + n2 * h) };
        expm_apply(h1.scale(a2).add(h2.scale(a1)), h, psi, &mut scratch);
        expm_apply(h1.scale(a1).add(h2.scale(a2)), h, psi, &mut scratch);
        worst = worst.max(edge(psi));
    }
    worst
}

/// Classical frame `(z, chi)` of one sector: `z' = -i(z + c + 2 v x)`,
/// `chi' = -(|z|^2 + c x + v x^2 + Im(z' z^*))` with `x = 2 Re z`.
fn sector_frame<C, V>(z0: Complex64, c: C, v: V, tau: f64) -> Result<(Complex64, f64)>
where
    C: Fn(f64) -> f64,
    V: Fn(f64) -> f64,
{
    let rhs = |t: f64, y: &[f64; 3]| {
        let z = Complex64::new(y[0], y[1]);
        let (ct, vt) = (c(t), v(t));
        let x = 2.0 * z.re;
        let dz = -I * (z + ct + 2.0 * vt * x);
        let dchi = -(z.norm_sqr() + ct * x + vt * x * x + (dz * z.conj()).im);
        [dz.re, dz.im, dchi]
    };
    let tr = integrate(rhs, 0.0, [z0.re, z0.im, 0.0], tau, &[], Tolerance::TIGHT)?;
    let y = tr.last();
    Ok((Complex64::new(y[0], y[1]), y[2]))
}

fn optical_amplitudes(state: &InitialState, na: usize) -> Result<Vec<Complex64>> {
    match state.optical {
        OpticalState::Coherent(mu) => {
            let mut c = vec![ZERO; na];
            c[0] = Complex64::new((-0.5 * mu.norm_sqr()).exp(), 0.0);
            for n in 1..na {
                c[n] = c[n - 1] * mu / (n as f64).sqrt();
            }
            Ok(c)
        }
        OpticalState::FockSuperposition(k) => {
            let k = k as usize;
            if k >= na {
                return Err(invalid("dims", "optical cut-off below the Fock component"));
            }
            let mut c = vec![ZERO; na];
            c[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            c[k] = c[0];
            Ok(c)
        }
    }
}

pub fn propagate(spec: &ModelSpec, state0: &InitialState, tau: f64, dims: (usize, usize)) -> Result<TruncatedState> {
    propagate_with(spec, state0, tau, OracleConfig::new(dims))
}

/// Propagate and reject runs whose truncation defect exceeds 1e-6.
pub fn propagate_with(spec: &ModelSpec, state0: &InitialState, tau: f64, cfg: OracleConfig) -> Result<TruncatedState> {
    let st = propagate_unchecked(spec, state0, tau, cfg)?;
    if st.norm_defect > DEFECT_LIMIT {
        return Err(Error::Truncation { defect: st.norm_defect });
    }
    Ok(st)
}

/// Propagate without rejecting insufficient truncations.
pub fn propagate_unchecked(spec: &ModelSpec, state0: &InitialState, tau: f64, cfg: OracleConfig) -> Result<TruncatedState> {
    spec.validate()?;
    state0.validate()?;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(invalid("tau", "must be finite and >= 0"));
    }
    let (na, nb) = cfg.dims;
    if na < 1 || nb < 4 {
        return Err(invalid("dims", "need N_a >= 1 and N_b >= 4"));
    }
    let mu_m = match state0.mechanical {
        MechanicalState::Coherent(m) => m,
        MechanicalState::Thermal(_) => return Err(invalid("mechanical", "the oracle propagates pure coherent inputs only")),
    };
    let copt = optical_amplitudes(state0, na)?;
    let opt_tail = (1.0 - copt.iter().map(|c| c.norm_sqr()).sum::<f64>()).max(0.0);
    if opt_tail > 1e-12 {
        log::warn!("optical cut-off {na} leaves tail mass {opt_tail:e}");
    }

    let (g, d1, d2) = (spec.coupling, spec.displacement, spec.squeezing);
    let (g_max, d1_max, v_max) = (drive_bound(&g), drive_bound(&d1), drive_bound(&d2));
    let v = |t: f64| d2.eval(t);

    let mut amps = DMatrix::from_element(na, nb, ZERO);
    let mut disp = vec![ZERO; na];
    let mut edge = 0.0f64;

    match cfg.frame {
        Frame::Lab => {
            // coherent mechanical input in the truncated basis
            let mut m0 = vec![ZERO; nb];
            m0[0] = Complex64::new((-0.5 * mu_m.norm_sqr()).exp(), 0.0);
            for k in 1..nb {
                m0[k] = m0[k - 1] * mu_m / (k as f64).sqrt();
            }
            let mech_tail = (1.0 - m0.iter().map(|c| c.norm_sqr()).sum::<f64>()).max(0.0);
            if mech_tail > 1e-12 {
                log::warn!("mechanical cut-off {nb} leaves tail mass {mech_tail:e}");
            }
            edge += mech_tail;
            let mut worst = 0.0f64;
            for n in 0..na {
                let w = copt[n].norm_sqr();
                if w < SECTOR_FLOOR {
                    continue;
                }
                let nf = n as f64;
                let mut psi = m0.clone();
                let c = |t: f64| d1.eval(t) - nf * g.eval(t);
                let e = evolve_sector(&mut psi, c, v, d1_max + nf * g_max, v_max, tau, cfg.h_dt);
                worst += w * e;
                for k in 0..nb {
                    amps[(n, k)] = copt[n] * psi[k];
                }
            }
            edge += worst;
        }
        Frame::Displaced => {
            let mut psi = basis(nb, 0);
            edge += evolve_sector(&mut psi, |_| 0.0, v, 0.0, v_max, tau, cfg.h_dt);
            for n in 0..na {
                let w = copt[n].norm_sqr();
                if w < SECTOR_FLOOR {
                    continue;
                }
                let nf = n as f64;
                let (z, chi) = sector_frame(mu_m, |t| d1.eval(t) - nf * g.eval(t), v, tau)?;
                disp[n] = z;
                let ph = copt[n] * Complex64::from_polar(1.0, chi);
                for k in 0..nb {
                    amps[(n, k)] = ph * psi[k];
                }
            }
        }
    }
    let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let defect = opt_tail + edge + (1.0 - norm - opt_tail).abs();
    Ok(TruncatedState { amplitudes: amps, displacements: disp, dims: cfg.dims, norm_defect: defect })
}

#[derive(Clone, Copy, PartialEq)]
enum Ladder {
    Id,
    B,
    Bdag,
}

/// `exp(d b^dag - d^* b) x` on a padded copy of `x`.
fn displace(x: &[Complex64], d: Complex64) -> Vec<Complex64> {
    if d == ZERO {
        let mut out = x.to_vec();
        out.push(ZERO);
        return out;
    }
    let pad = ((d.norm() + 8.0).powi(2)).ceil() as usize + 8;
    let len = x.len() + pad;
    let mut y = x.to_vec();
    y.resize(len, ZERO);
    let bound = 2.0 * d.norm() * (len as f64).sqrt();
    let sub = (bound / 0.5).ceil().max(1.0) as usize;
    let ds = d / sub as f64;
    let mut term = vec![ZERO; len];
    let mut next = vec![ZERO; len];
    for _ in 0..sub {
        term.copy_from_slice(&y);
        for k in 1..80 {
            // (ds b^dag - ds^* b) term
            for j in 0..len {
                let mut s = ZERO;
                if j > 0 {
                    s += ds * term[j - 1] * (j as f64).sqrt();
                }
                if j + 1 < len {
                    s -= ds.conj() * term[j + 1] * ((j + 1) as f64).sqrt();
                }
                next[j] = s / k as f64;
            }
            std::mem::swap(&mut term, &mut next);
            let mut size = 0.0f64;
            for (yj, t) in y.iter_mut().zip(term.iter()) {
                *yj += t;
                size = size.max(t.norm());
            }
            if size < 1e-18 {
                break;
            }
        }
    }
    y
}

/// `<D(z1) x1| O |D(z2) x2>` for `O` in {1, b, b^dag}.
fn sector_overlap(z1: Complex64, x1: &[Complex64], z2: Complex64, x2: &[Complex64], op: Ladder) -> Complex64 {
    let y = displace(x2, z2 - z1);
    let phase = Complex64::from_polar(1.0, (z1.conj() * z2).im);
    let mut s = ZERO;
    for (k, a) in x1.iter().enumerate() {
        let v = match op {
            Ladder::Id => y[k],
            Ladder::B => y[k + 1] * ((k + 1) as f64).sqrt() + z1 * y[k],
            Ladder::Bdag => (if k > 0 { y[k - 1] * (k as f64).sqrt() } else { ZERO }) + z1.conj() * y[k],
        };
        s += a.conj() * v;
    }
    phase * s
}

/// Moments of a propagated state, rotating frame of the cavity.
pub fn oracle_moments(state: &TruncatedState) -> MomentSet {
    let (na, nb) = state.dims;
    let z = &state.displacements;
    let live: Vec<bool> = (0..na).map(|n| !state.empty(n)).collect();
    let rows: Vec<Vec<Complex64>> = (0..na).map(|n| state.row(n)).collect();
    let mut m = MomentSet { a: ZERO, b: ZERO, a2: ZERO, b2: ZERO, adag_a: 0.0, bdag_b: 0.0, ab: ZERO, abdag: ZERO };
    for n in 0..na {
        if !live[n] {
            continue;
        }
        let r = &rows[n];
        let w: f64 = r.iter().map(|c| c.norm_sqr()).sum();
        m.adag_a += n as f64 * w;
        // (b + z) r, with one extra slot unused
        let mut br = vec![ZERO; nb];
        for k in 0..nb {
            br[k] = z[n] * r[k] + if k + 1 < nb { r[k + 1] * ((k + 1) as f64).sqrt() } else { ZERO };
        }
        let mut bbr = vec![ZERO; nb];
        for k in 0..nb {
            bbr[k] = z[n] * br[k] + if k + 1 < nb { br[k + 1] * ((k + 1) as f64).sqrt() } else { ZERO };
        }
        let dot = |u: &[Complex64], v: &[Complex64]| u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<Complex64>();
        m.b += dot(r, &br);
        m.b2 += dot(r, &bbr);
        m.bdag_b += br.iter().map(|c| c.norm_sqr()).sum::<f64>();
        if n >= 1 && live[n - 1] {
            let s = (n as f64).sqrt();
            m.a += sector_overlap(z[n - 1], &rows[n - 1], z[n], r, Ladder::Id) * s;
            m.ab += sector_overlap(z[n - 1], &rows[n - 1], z[n], r, Ladder::B) * s;
            m.abdag += sector_overlap(z[n - 1], &rows[n - 1], z[n], r, Ladder::Bdag) * s;
        }
        if n >= 2 && live[n - 2] {
            m.a2 += sector_overlap(z[n - 2], &rows[n - 2], z[n], r, Ladder::Id) * ((n * (n - 1)) as f64).sqrt();
        }
    }
    m
}

/// `<s1|s2>` for two states on the same optical cut-off.
pub fn overlap(s1: &TruncatedState, s2: &TruncatedState) -> Result<Complex64> {
    if s1.dims.0 != s2.dims.0 {
        return Err(invalid("dims", "optical cut-offs differ"));
    }
    let mut acc = ZERO;
    for n in 0..s1.dims.0 {
        if s1.empty(n) || s2.empty(n) {
            continue;
        }
        let (mut r1, mut r2) = (s1.row(n), s2.row(n));
        let len = r1.len().max(r2.len());
        r1.resize(len, ZERO);
        r2.resize(len, ZERO);
        acc += sector_overlap(s1.displacements[n], &r1, s2.displacements[n], &r2, Ladder::Id);
    }
    Ok(acc)
}

/// Closed-form evolved state for constant coupling and displacement without
/// squeezing: per photon number, the amplitude (with phase) and the
/// mechanical coherent label `phi_n`.
pub fn analytic_state_coefficients(g0: f64, d1: f64, mu_c: Complex64, mu_m: Complex64, tau: f64, n_max: usize) -> Vec<(Complex64, Complex64)> {
    let rot = Complex64::from_polar(1.0, -tau);
    let eta = 1.0 - rot;
    let mut amp = Complex64::new((-0.5 * mu_c.norm_sqr()).exp(), 0.0);
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            amp = amp * mu_c / (n as f64).sqrt();
        }
        let nf = n as f64;
        let k = g0 * nf - d1;
        let phase = Complex64::from_polar(1.0, (g0 * g0 * nf * nf - 2.0 * g0 * d1 * nf) * (tau - tau.sin()));
        let disp_phase = (k * (eta * mu_m - eta.conj() * mu_m.conj()) / 2.0).exp();
        out.push((amp * phase * disp_phase, rot * mu_m + k * eta));
    }
    out
}

/// [`analytic_state_coefficients`] packed as a displaced-frame state.
pub fn analytic_state(g0: f64, d1: f64, mu_c: Complex64, mu_m: Complex64, tau: f64, dims: (usize, usize)) -> TruncatedState {
    let coeffs = analytic_state_coefficients(g0, d1, mu_c, mu_m, tau, dims.0 - 1);
    let mut amps = DMatrix::from_element(dims.0, dims.1, ZERO);
    let mut disp = vec![ZERO; dims.0];
    for (n, (a, phi)) in coeffs.into_iter().enumerate() {
        amps[(n, 0)] = a;
        disp[n] = phi;
    }
    TruncatedState { amplitudes: amps, displacements: disp, dims, norm_defect: 0.0 }
}

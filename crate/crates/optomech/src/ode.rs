//! Adaptive Dormand–Prince 5(4) integrator with cubic Hermite dense output.
//!
//! Small fixed-size real systems only; every solver in the crate uses this.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerance {
    pub const STRICT: Tolerance = Tolerance { rtol: 1e-10, atol: 1e-12 };
    pub const FAST: Tolerance = Tolerance { rtol: 1e-8, atol: 1e-10 };
    /// Used for the F-coefficient integrals, which are compared at 1e-8 absolute.
    pub const TIGHT: Tolerance = Tolerance { rtol: 1e-12, atol: 1e-13 };
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::STRICT
    }
}

/// Accepted steps of one integration, with derivatives for dense output.
#[derive(Clone, Debug)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dy: Vec<[f64; N]>,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> [f64; N] {
        *self.y.last().expect("trajectory is never empty")
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().expect("trajectory is never empty")
    }

    /// Cubic Hermite interpolation on the accepted step containing `t`.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let n = self.t.len();
        if n == 1 || t <= self.t[0] {
            return self.y[0];
        }
        if t >= self.t[n - 1] {
            return self.y[n - 1];
        }
        let i = match self.t.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.y[i],
            Err(i) => i - 1,
        };
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let mut out = [0.0; N];
        for k in 0..N {
            out[k] = h00 * self.y[i][k] + h10 * h * self.dy[i][k] + h01 * self.y[i + 1][k] + h11 * h * self.dy[i + 1][k];
        }
        out
    }

    /// Accepted mesh, reusable with [`integrate_on_mesh`].
    pub fn mesh(&self) -> &[f64] {
        &self.t
    }
}

// Dormand–Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*, the embedded error weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for &(c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One Dormand–Prince step. Returns (y_new, f(t+h, y_new), error estimate).
fn dp_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> ([f64; N], [f64; N], [f64; N])
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(t + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(t + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y_new = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(t + h, &y_new);
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y_new, k7, err)
}

/// Integrate `y' = f(t, y)` from `t0` to `t1 >= t0`. The trajectory lands
/// exactly on every point of `stops` that lies inside the interval.
pub fn integrate<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], t1: f64, stops: &[f64], tol: Tolerance) -> Result<Trajectory<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    if !(t1 >= t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(crate::error::invalid("tau", "integration interval must be finite and forward"));
    }
    let mut stops: Vec<f64> = stops.iter().copied().filter(|&s| s > t0 && s < t1).collect();
    stops.sort_by(|a, b| a.partial_cmp(b).unwrap());
    stops.push(t1);
    let mut next_stop = 0;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut traj = Trajectory { t: vec![t], y: vec![y], dy: vec![k1] };
    if t1 == t0 {
        return Ok(traj);
    }
    let span = t1 - t0;
    let mut h = (0.01 * span).min(0.05).max(1e-6 * span);
    let h_min = 1e-14 * span.max(1.0);

    while t < t1 {
        while next_stop < stops.len() && stops[next_stop] <= t {
            next_stop += 1;
        }
        let target = stops[next_stop.min(stops.len() - 1)];
        let mut step = h.min(target - t);
        let hit = step >= target - t;
        if hit {
            step = target - t;
        }
        let (y_new, k_new, err) = dp_step(&mut f, t, &y, &k1, step);
        let mut e = 0.0f64;
        for i in 0..N {
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            let r = (err[i] / sc).abs();
            // f64::max drops NaN, so test finiteness explicitly
            e = if r.is_finite() && y_new[i].is_finite() { e.max(r) } else { f64::INFINITY };
        }
        if !e.is_finite() {
            h = step * 0.1;
            if h < h_min {
                return Err(Error::StepUnderflow { tau: t });
            }
            continue;
        }
        if e <= 1.0 {
            t = if hit { target } else { t + step };
            y = y_new;
            k1 = k_new;
            traj.t.push(t);
            traj.y.push(y);
            traj.dy.push(k1);
            let fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            // do not let a short landing step shrink the step size
            h = if hit { h.max(step * fac) } else { step * fac };
        } else {
            h = step * (0.9 * e.powf(-0.2)).clamp(0.1, 0.9);
            if h < h_min {
                return Err(Error::StepUnderflow { tau: t });
            }
        }
    }
    Ok(traj)
}

/// Integrate with the 5th-order formula on a prescribed mesh, no step
/// control. Reusing the mesh of a reference run keeps finite differences
/// in a parameter free of step-selection noise.
pub fn integrate_on_mesh<const N: usize, F>(mut f: F, mesh: &[f64], y0: [f64; N]) -> Trajectory<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut y = y0;
    let mut k1 = f(mesh[0], &y);
    let mut traj = Trajectory { t: vec![mesh[0]], y: vec![y], dy: vec![k1] };
    for w in mesh.windows(2) {
        let (y_new, k_new, _) = dp_step(&mut f, w[0], &y, &k1, w[1] - w[0]);
        y = y_new;
        k1 = k_new;
        traj.t.push(w[1]);
        traj.y.push(y);
        traj.dy.push(k1);
    }
    traj
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_t: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -y[0]]
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        let tr = integrate(oscillator, 0.0, [1.0, 0.0], 20.0, &[], Tolerance::STRICT).unwrap();
        let y = tr.last();
        assert!((y[0] - 20f64.cos()).abs() < 1e-8);
        assert!((y[1] + 20f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn lands_on_stops() {
        let stops = [0.5, 1.25, 3.0];
        let tr = integrate(oscillator, 0.0, [1.0, 0.0], 4.0, &stops, Tolerance::STRICT).unwrap();
        for s in stops {
            let i = tr.t.iter().position(|&t| t == s).expect("stop not hit");
            assert!((tr.y[i][0] - s.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn dense_output_between_steps() {
        let tr = integrate(oscillator, 0.0, [1.0, 0.0], 6.0, &[], Tolerance::TIGHT).unwrap();
        for k in 0..60 {
            let t = 0.1 * k as f64 + 0.037;
            assert!((tr.eval(t)[0] - t.cos()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn mesh_replay_matches_adaptive_run() {
        let tr = integrate(oscillator, 0.0, [1.0, 0.0], 5.0, &[], Tolerance::STRICT).unwrap();
        let replay = integrate_on_mesh(oscillator, tr.mesh(), [1.0, 0.0]);
        for (a, b) in tr.last().iter().zip(replay.last()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn blow_up_reports_underflow() {
        let f = |t: f64, _y: &[f64; 1]| [if t > 1.0 { f64::NAN } else { 1.0 }];
        let r = integrate(f, 0.0, [0.0], 2.0, &[], Tolerance::STRICT);
        match r {
            Err(Error::StepUnderflow { tau }) => assert!((tau - 1.0).abs() < 1e-3),
            other => panic!("unexpected {other:?}"),
        }
    }
}

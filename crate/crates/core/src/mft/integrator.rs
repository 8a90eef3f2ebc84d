//! Explicit Runge-Kutta integrators over complex state vectors.
//!
//! The adaptive scheme is the Dormand-Prince 5(4) pair with PI step-size
//! control and its 4th-order continuous extension, which is used to emit
//! samples on a uniform grid independent of the accepted steps.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// A first-order system `dy/dt = f(t, y)` over a flat complex vector.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Dormand-Prince 5(4), steps bounded by `h_max`.
    Adaptive { rel_tol: f64, abs_tol: f64, h_max: f64 },
    /// Classical RK4 with constant step `h`.
    FixedRk4 { h: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

// Dormand-Prince tableau.
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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI controller (Hairer & Wanner's DOPRI5 defaults).
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Drives a system from `t0` to `t_end`, calling `observe(t, y)` at
/// `t0 + k * sample_dt` for every such time in `[t0, t_end]`.
///
/// `observe` may stop the run early by returning `false`. Returns the final
/// time and state. Any component exceeding `bound` in magnitude aborts with
/// [`Error::Diverged`].
pub fn integrate<S, F>(
    sys: &S,
    method: Method,
    y0: &[C64],
    t0: f64,
    t_end: f64,
    sample_dt: f64,
    bound: f64,
    mut observe: F,
) -> Result<(f64, Vec<C64>, Stats)>
where
    S: OdeSystem,
    F: FnMut(f64, &[C64]) -> bool,
{
    if !(t_end >= t0) || !(sample_dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need t_end >= t0 and sample_dt > 0 (t0={t0}, t_end={t_end}, sample_dt={sample_dt})"
        )));
    }
    let n = sys.dim();
    assert_eq!(y0.len(), n, "initial state length");
    match method {
        Method::Adaptive { rel_tol, abs_tol, h_max } => {
            Dopri5::new(n, rel_tol, abs_tol, h_max).run(sys, y0, t0, t_end, sample_dt, bound, &mut observe)
        }
        Method::FixedRk4 { h } => rk4(sys, h, y0, t0, t_end, sample_dt, bound, &mut observe),
    }
}

fn check_bound(t: f64, y: &[C64], bound: f64) -> Result<()> {
    let mut worst = 0.0f64;
    for z in y {
        let m = z.norm_sqr();
        if !(m <= bound * bound) {
            worst = if m.is_nan() { f64::NAN } else { worst.max(m) };
            return Err(Error::Diverged {
                time: t,
                magnitude: worst.sqrt(),
            });
        }
    }
    Ok(())
}

/// Sample times `t0 + k*dt` handled so far are tracked by index to avoid drift.
struct Sampler {
    t0: f64,
    dt: f64,
    next: u64,
    t_end: f64,
}

impl Sampler {
    fn time(&self) -> f64 {
        self.t0 + self.next as f64 * self.dt
    }

    fn pending_within(&self, t: f64) -> Option<f64> {
        let ts = self.time();
        // absorbs round-off when a step lands on a sample time
        let slack = 1e-9 * self.dt;
        if ts <= t + slack && ts <= self.t_end + slack {
            Some(ts.min(t))
        } else {
            None
        }
    }
}

fn rk4<S, F>(
    sys: &S,
    h: f64,
    y0: &[C64],
    t0: f64,
    t_end: f64,
    sample_dt: f64,
    bound: f64,
    observe: &mut F,
) -> Result<(f64, Vec<C64>, Stats)>
where
    S: OdeSystem,
    F: FnMut(f64, &[C64]) -> bool,
{
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!("fixed step must be > 0, got {h}")));
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut k1 = vec![C64::default(); n];
    let mut k2 = vec![C64::default(); n];
    let mut k3 = vec![C64::default(); n];
    let mut k4 = vec![C64::default(); n];
    let mut tmp = vec![C64::default(); n];
    let mut stats = Stats::default();
    let mut sampler = Sampler { t0, dt: sample_dt, next: 0, t_end };
    let n_steps = ((t_end - t0) / h).ceil().max(0.0) as u64;
    let h_eff = if n_steps == 0 { 0.0 } else { (t_end - t0) / n_steps as f64 };

    // Samples between RK4 nodes use cubic Hermite interpolation.
    let mut y_prev = y.clone();
    let mut f_prev = vec![C64::default(); n];
    sys.rhs(t0, &y, &mut f_prev);
    stats.evaluations += 1;
    if sampler.pending_within(t0).is_some() {
        if !observe(t0, &y) {
            return Ok((t0, y, stats));
        }
        sampler.next += 1;
    }
    let mut t = t0;
    for step in 0..n_steps {
        let hh = h_eff;
        y_prev.copy_from_slice(&y);
        k1.copy_from_slice(&f_prev);
        for i in 0..n {
            tmp[i] = y[i] + k1[i] * (0.5 * hh);
        }
        sys.rhs(t + 0.5 * hh, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + k2[i] * (0.5 * hh);
        }
        sys.rhs(t + 0.5 * hh, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + k3[i] * hh;
        }
        sys.rhs(t + hh, &tmp, &mut k4);
        for i in 0..n {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (hh / 6.0);
        }
        let t_new = t0 + (step + 1) as f64 * h_eff;
        sys.rhs(t_new, &y, &mut f_prev);
        stats.evaluations += 4;
        stats.accepted += 1;
        check_bound(t_new, &y, bound)?;
        while let Some(ts) = sampler.pending_within(t_new) {
            let s = if hh > 0.0 { ((ts - t) / hh).clamp(0.0, 1.0) } else { 1.0 };
            hermite(&y_prev, &k1, &y, &f_prev, hh, s, &mut tmp);
            if !observe(ts, &tmp) {
                return Ok((ts, tmp, stats));
            }
            sampler.next += 1;
        }
        t = t_new;
    }
    Ok((t, y, stats))
}

fn hermite(y0: &[C64], f0: &[C64], y1: &[C64], f1: &[C64], h: f64, s: f64, out: &mut [C64]) {
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    for i in 0..out.len() {
        out[i] = y0[i] * h00 + f0[i] * (h10 * h) + y1[i] * h01 + f1[i] * (h11 * h);
    }
}

struct Dopri5 {
    rel_tol: f64,
    abs_tol: f64,
    h_max: f64,
    k: [Vec<C64>; 7],
    y_stage: Vec<C64>,
    y_new: Vec<C64>,
    cont: [Vec<C64>; 5],
    out: Vec<C64>,
}

impl Dopri5 {
    fn new(n: usize, rel_tol: f64, abs_tol: f64, h_max: f64) -> Self {
        let z = || vec![C64::default(); n];
        Self {
            rel_tol,
            abs_tol,
            h_max,
            k: [z(), z(), z(), z(), z(), z(), z()],
            y_stage: z(),
            y_new: z(),
            cont: [z(), z(), z(), z(), z()],
            out: z(),
        }
    }

    fn scale(&self, a: C64, b: C64) -> f64 {
        self.abs_tol + self.rel_tol * a.norm().max(b.norm())
    }

    /// Initial step guess (Hairer, Norsett & Wanner, II.4).
    fn initial_step<S: OdeSystem>(&mut self, sys: &S, t: f64, y: &[C64]) -> f64 {
        let n = y.len();
        let (mut d0, mut d1) = (0.0, 0.0);
        for i in 0..n {
            let sc = self.abs_tol + self.rel_tol * y[i].norm();
            d0 += (y[i].norm() / sc).powi(2);
            d1 += (self.k[0][i].norm() / sc).powi(2);
        }
        let denom = (2 * n) as f64;
        d0 = (d0 / denom).sqrt();
        d1 = (d1 / denom).sqrt();
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(self.h_max);
        for i in 0..n {
            self.y_stage[i] = y[i] + self.k[0][i] * h0;
        }
        sys.rhs(t + h0, &self.y_stage, &mut self.k[1]);
        let mut d2 = 0.0;
        for i in 0..n {
            let sc = self.abs_tol + self.rel_tol * y[i].norm();
            d2 += ((self.k[1][i] - self.k[0][i]).norm() / sc).powi(2);
        }
        d2 = (d2 / denom).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.h_max)
    }

    #[allow(clippy::too_many_arguments)]
    fn run<S, F>(
        &mut self,
        sys: &S,
        y0: &[C64],
        t0: f64,
        t_end: f64,
        sample_dt: f64,
        bound: f64,
        observe: &mut F,
    ) -> Result<(f64, Vec<C64>, Stats)>
    where
        S: OdeSystem,
        F: FnMut(f64, &[C64]) -> bool,
    {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.h_max > 0.0) {
            return Err(Error::InvalidConfig(
                "tolerances and maximum step must be positive".into(),
            ));
        }
        let n = y0.len();
        let mut stats = Stats::default();
        let mut sampler = Sampler { t0, dt: sample_dt, next: 0, t_end };
        let mut y = y0.to_vec();
        let mut t = t0;
        check_bound(t, &y, bound)?;
        if sampler.pending_within(t0).is_some() {
            if !observe(t0, &y) {
                return Ok((t0, y, stats));
            }
            sampler.next += 1;
        }
        if t_end == t0 {
            return Ok((t, y, stats));
        }
        sys.rhs(t, &y, &mut self.k[0]);
        let mut h = self.initial_step(sys, t, &y);
        stats.evaluations += 2;
        let mut fac_old: f64 = 1e-4;
        let mut last_rejected = false;
        let h_min = 1e-14 * (t_end - t0).abs().max(1e-300);

        loop {
            if t >= t_end {
                break;
            }
            let last = t + h >= t_end;
            if last {
                h = t_end - t;
            }
            self.stages(sys, t, &y, h);
            stats.evaluations += 6;

            let mut err = 0.0;
            for i in 0..n {
                let e = (self.k[0][i] * E1
                    + self.k[2][i] * E3
                    + self.k[3][i] * E4
                    + self.k[4][i] * E5
                    + self.k[5][i] * E6
                    + self.k[6][i] * E7)
                    * h;
                let sc = self.scale(y[i], self.y_new[i]);
                err += e.norm_sqr() / (sc * sc);
            }
            err = (err / (2 * n) as f64).sqrt();
            if !err.is_finite() {
                err = 1e10;
            }

            let fac11 = err.powf(EXPO1);
            let mut fac = fac11 / fac_old.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            if err <= 1.0 {
                fac_old = err.max(1e-4);
                stats.accepted += 1;
                self.prepare_dense(&y, h);
                let t_new = if last { t_end } else { t + h };
                check_bound(t_new, &self.y_new, bound)?;
                while let Some(ts) = sampler.pending_within(t_new) {
                    let s = ((ts - t) / h).clamp(0.0, 1.0);
                    self.dense(s);
                    if !observe(ts, &self.out) {
                        return Ok((ts, self.out.clone(), stats));
                    }
                    sampler.next += 1;
                }
                // FSAL
                self.k.swap(0, 6);
                std::mem::swap(&mut y, &mut self.y_new);
                t = t_new;
                let mut h_new = h / fac;
                if last_rejected {
                    h_new = h_new.min(h);
                }
                h = h_new.min(self.h_max);
                last_rejected = false;
            } else {
                stats.rejected += 1;
                h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
                last_rejected = true;
            }
            if h < h_min {
                return Err(Error::StepUnderflow { time: t });
            }
        }
        Ok((t, y, stats))
    }

    fn stages<S: OdeSystem>(&mut self, sys: &S, t: f64, y: &[C64], h: f64) {
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let ys = &mut self.y_stage;
        for (s, (y, a)) in ys.iter_mut().zip(y.iter().zip(k1.iter())) {
            *s = y + a * (h * A21);
        }
        sys.rhs(t + C2 * h, ys, k2);
        for (s, (y, (a, b))) in ys.iter_mut().zip(y.iter().zip(k1.iter().zip(k2.iter()))) {
            *s = y + (a * A31 + b * A32) * h;
        }
        sys.rhs(t + C3 * h, ys, k3);
        for (i, s) in ys.iter_mut().enumerate() {
            *s = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        sys.rhs(t + C4 * h, ys, k4);
        for (i, s) in ys.iter_mut().enumerate() {
            *s = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        sys.rhs(t + C5 * h, ys, k5);
        for (i, s) in ys.iter_mut().enumerate() {
            *s = y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        sys.rhs(t + h, ys, k6);
        let yn = &mut self.y_new;
        for (i, s) in yn.iter_mut().enumerate() {
            *s = y[i] + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
        }
        sys.rhs(t + h, yn, k7);
    }

    fn prepare_dense(&mut self, y: &[C64], h: f64) {
        let k = &self.k;
        for i in 0..y.len() {
            let ydiff = self.y_new[i] - y[i];
            let bspl = k[0][i] * h - ydiff;
            self.cont[0][i] = y[i];
            self.cont[1][i] = ydiff;
            self.cont[2][i] = bspl;
            self.cont[3][i] = ydiff - k[6][i] * h - bspl;
            self.cont[4][i] = (k[0][i] * D1
                + k[2][i] * D3
                + k[3][i] * D4
                + k[4][i] * D5
                + k[5][i] * D6
                + k[6][i] * D7)
                * h;
        }
    }

    fn dense(&mut self, s: f64) {
        let s1 = 1.0 - s;
        let c = &self.cont;
        for i in 0..self.out.len() {
            self.out[i] = c[0][i] + (c[1][i] + (c[2][i] + (c[3][i] + c[4][i] * s1) * s) * s1) * s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// dy/dt = lambda * y
    struct Decay(C64);

    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = self.0 * y[0];
        }
    }

    fn exact(lambda: C64, t: f64) -> C64 {
        (lambda * t).exp()
    }

    #[test]
    fn adaptive_matches_exponential_at_samples() {
        let lam = C64::new(-0.3, 5.0);
        let sys = Decay(lam);
        let mut worst: f64 = 0.0;
        let mut count = 0;
        let method = Method::Adaptive { rel_tol: 1e-10, abs_tol: 1e-12, h_max: 1.0 };
        let (t, y, stats) = integrate(&sys, method, &[C64::new(1.0, 0.0)], 0.0, 10.0, 0.25, 1e6, |t, y| {
            worst = worst.max((y[0] - exact(lam, t)).norm());
            count += 1;
            true
        })
        .unwrap();
        assert_eq!(count, 41);
        assert_eq!(t, 10.0);
        assert!((y[0] - exact(lam, 10.0)).norm() < 1e-8);
        assert!(worst < 1e-8, "dense output error {worst}");
        assert!(stats.accepted > 10);
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let lam = C64::new(-1.0, 3.0);
        let sys = Decay(lam);
        let err = |h: f64| {
            let (_, y, _) = integrate(&sys, Method::FixedRk4 { h }, &[C64::new(1.0, 0.0)], 0.0, 2.0, 2.0, 1e6, |_, _| true).unwrap();
            (y[0] - exact(lam, 2.0)).norm()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 16.0).abs() < 1.5, "ratio {ratio}");
    }

    #[test]
    fn divergence_is_reported_with_time() {
        let sys = Decay(C64::new(1.0, 0.0));
        let method = Method::Adaptive { rel_tol: 1e-8, abs_tol: 1e-10, h_max: 0.1 };
        let err = integrate(&sys, method, &[C64::new(1.0, 0.0)], 0.0, 100.0, 1.0, 1e3, |_, _| true).unwrap_err();
        match err {
            Error::Diverged { time, .. } => assert!(time > 6.0 && time < 8.0, "{time}"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn observer_can_stop_early() {
        let sys = Decay(C64::new(-1.0, 0.0));
        let method = Method::Adaptive { rel_tol: 1e-8, abs_tol: 1e-10, h_max: 0.1 };
        let (t, _, _) = integrate(&sys, method, &[C64::new(1.0, 0.0)], 0.0, 100.0, 1.0, 1e3, |t, _| t < 3.0).unwrap();
        assert_eq!(t, 3.0);
    }
}

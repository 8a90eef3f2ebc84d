//! Mean-field dynamics of the driven chain.
//!
//! In the frame rotating at the drive frequency the coherent amplitudes obey
//!
//! ```text
//! i d(alpha_j)/dt = (omega - omega_p - i kappa/2) alpha_j + g beta_j
//!                   + t (alpha_{j-1} + alpha_{j+1}) + eps delta_{j,drive}
//! i d(beta_j)/dt  = (Omega - omega_p - i Gamma/2) beta_j + U |beta_j|^2 beta_j + g alpha_j
//! ```
//!
//! on an open chain (`alpha_0 = alpha_{N+1} = 0`).

pub mod integrator;
mod linear;
mod steady;

pub use integrator::{Method, OdeSystem, Stats};
pub use linear::linear_steady_state;
pub use steady::{
    classify_attractor, find_steady_state, integrate, run_with_tail, Attractor, IntegratorConfig,
    OutputTail, SteadyStateResult, Trajectory,
};

use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::model::{DriveSpec, LatticeParams, MeanFieldState};

/// The mean-field equations bound to one parameter set and drive.
pub struct MeanFieldSystem<'a> {
    params: &'a LatticeParams,
    drive: &'a DriveSpec,
    cavity_detuning: C64,
    qubit_detuning: Vec<C64>,
    drive_index: usize,
}

impl<'a> MeanFieldSystem<'a> {
    pub fn new(params: &'a LatticeParams, drive: &'a DriveSpec) -> Self {
        let cavity_detuning = C64::new(params.omega_r - drive.omega_p, -0.5 * params.kappa);
        let qubit_detuning = (0..params.n_sites)
            .map(|j| C64::new(params.omega_q_at(j) - drive.omega_p, -0.5 * params.gamma_q))
            .collect();
        Self {
            params,
            drive,
            cavity_detuning,
            qubit_detuning,
            drive_index: params.drive_site - 1,
        }
    }
}

impl OdeSystem for MeanFieldSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.params.n_sites
    }

    #[inline]
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let n = self.params.n_sites;
        let (alpha, beta) = y.split_at(n);
        let (da, db) = dy.split_at_mut(n);
        let g = self.params.g_coupling;
        let hop = self.params.t_hop;
        let u = self.params.u_kerr;
        let cav = self.cavity_detuning;
        // -i * z
        let rot = |z: C64| C64::new(z.im, -z.re);
        for j in 0..n {
            let left = if j > 0 { alpha[j - 1] } else { C64::default() };
            let right = if j + 1 < n { alpha[j + 1] } else { C64::default() };
            da[j] = rot(cav * alpha[j] + beta[j] * g + (left + right) * hop);
        }
        da[self.drive_index] += rot(self.drive.amplitude_at(t));
        for (((d, &b), &a), &q) in db.iter_mut().zip(beta).zip(alpha.iter()).zip(&self.qubit_detuning) {
            *d = rot((q + u * b.norm_sqr()) * b + a * g);
        }
    }
}

/// Time derivative of `state` under the mean-field equations at time `time`.
pub fn mft_rhs(
    state: &MeanFieldState,
    params: &LatticeParams,
    drive: &DriveSpec,
    time: f64,
) -> Result<MeanFieldState> {
    state.check(params)?;
    let sys = MeanFieldSystem::new(params, drive);
    let y = state.to_flat();
    let mut dy = vec![C64::default(); y.len()];
    sys.rhs(time, &y, &mut dy);
    Ok(MeanFieldState::from_flat(&dy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::model::hz;

    fn small(n: usize) -> LatticeParams {
        LatticeParams {
            n_sites: n,
            omega_r: hz(7.5e9),
            omega_q: hz(8.4e9),
            u_kerr: -hz(180e6),
            g_coupling: hz(265e6),
            t_hop: hz(144e6),
            kappa: hz(1.6e6),
            gamma_q: 1e6,
            drive_site: 1,
            output_site: n,
            omega_q_sites: None,
        }
    }

    #[test]
    fn undriven_vacuum_is_stationary() {
        let p = small(4);
        let d = DriveSpec::constant(hz(7.4e9), 0.0);
        let ds = mft_rhs(&MeanFieldState::vacuum(4), &p, &d, 0.0).unwrap();
        assert!(ds.alpha.iter().chain(&ds.beta).all(|z| *z == C64::default()));
    }

    #[test]
    fn single_cavity_fixed_point() {
        let p = LatticeParams {
            g_coupling: 0.0,
            ..small(1)
        };
        let eps = C64::new(3e6, -1e6);
        let d = DriveSpec::constant(p.omega_r, eps);
        let mut s = MeanFieldState::vacuum(1);
        s.alpha[0] = C64::new(0.0, -2.0) * eps / p.kappa;
        let ds = mft_rhs(&s, &p, &d, 0.0).unwrap();
        assert!(ds.alpha[0].norm() < 1e-9 * eps.norm());
    }

    #[test]
    fn two_site_linear_matrix() {
        let p = LatticeParams {
            g_coupling: 0.0,
            u_kerr: 0.0,
            ..small(2)
        };
        let wp = hz(7.45e9);
        let eps = C64::new(2e6, 0.5e6);
        let d = DriveSpec::constant(wp, eps);
        let s = MeanFieldState {
            alpha: vec![C64::new(1.5, -0.5), C64::new(-0.25, 2.0)],
            beta: vec![C64::new(0.3, 0.1), C64::new(-0.7, 0.2)],
        };
        // i d(alpha)/dt = M alpha + eps e1 with M = [[det, t], [t, det]]
        let det = C64::new(p.omega_r - wp, -p.kappa / 2.0);
        let m = [[det, C64::from(p.t_hop)], [C64::from(p.t_hop), det]];
        let ds = mft_rhs(&s, &p, &d, 0.0).unwrap();
        for j in 0..2 {
            let mut lhs = m[j][0] * s.alpha[0] + m[j][1] * s.alpha[1];
            if j == 0 {
                lhs += eps;
            }
            let expect = C64::new(0.0, -1.0) * lhs;
            assert!((ds.alpha[j] - expect).norm() <= 1e-12 * expect.norm());
        }
    }

    #[test]
    fn rejects_nonfinite_and_wrong_length() {
        let p = small(2);
        let d = DriveSpec::constant(p.omega_r, 1.0);
        let mut s = MeanFieldState::vacuum(2);
        s.beta[1] = C64::new(f64::NAN, 0.0);
        assert!(matches!(mft_rhs(&s, &p, &d, 0.0), Err(Error::NonFinite)));
        assert!(matches!(
            mft_rhs(&MeanFieldState::vacuum(3), &p, &d, 0.0),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{DriveSpec, LatticeParams, MeanFieldState};

/// Stationary amplitudes of the chain with the Kerr term absent.
///
/// With `U = 0` the equations of motion read `i dx/dt = M x + eps e_drive`, so the
/// steady state is the solution of `M x = -eps e_drive`, found here by a dense
/// LU solve of the `2N x 2N` system. The drive envelope is evaluated at its
/// settled value.
pub fn linear_steady_state(params: &LatticeParams, drive: &DriveSpec) -> Result<MeanFieldState> {
    if params.u_kerr != 0.0 {
        return Err(Error::InvalidArgument(format!(
            "linear steady state requires u_kerr = 0, got {}",
            params.u_kerr
        )));
    }
    let n = params.n_sites;
    let dim = 2 * n;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    let cav = C64::new(params.omega_r - drive.omega_p, -0.5 * params.kappa);
    for j in 0..n {
        m[(j, j)] = cav;
        if j + 1 < n {
            m[(j, j + 1)] = C64::from(params.t_hop);
            m[(j + 1, j)] = C64::from(params.t_hop);
        }
        m[(j, n + j)] = C64::from(params.g_coupling);
        m[(n + j, j)] = C64::from(params.g_coupling);
        m[(n + j, n + j)] = C64::new(params.omega_q_at(j) - drive.omega_p, -0.5 * params.gamma_q);
    }
    let eps = drive.amplitude_at(drive.envelope.settle_time());
    let mut rhs = DVector::<C64>::zeros(dim);
    rhs[params.drive_site - 1] = -eps;
    let x = m.lu().solve(&rhs).ok_or(Error::Singular)?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(MeanFieldState::from_flat(x.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::hz;

    fn chain(n: usize, g: f64) -> LatticeParams {
        LatticeParams {
            n_sites: n,
            omega_r: hz(7.5e9),
            omega_q: hz(8.4e9),
            u_kerr: 0.0,
            g_coupling: g,
            t_hop: hz(144e6),
            kappa: hz(1.6e6),
            gamma_q: 1e6,
            drive_site: 1,
            output_site: n,
            omega_q_sites: None,
        }
    }

    #[test]
    fn single_cavity_closed_form() {
        let p = chain(1, 0.0);
        let eps = C64::new(1e6, 2e6);
        for dnu in [-5e6, 0.0, 0.3e6, 40e6] {
            let d = DriveSpec::constant(p.omega_r + hz(dnu), eps);
            let s = linear_steady_state(&p, &d).unwrap();
            let expect = -eps / C64::new(p.omega_r - d.omega_p, -p.kappa / 2.0);
            assert!((s.alpha[0] - expect).norm() <= 1e-12 * expect.norm());
        }
    }

    #[test]
    fn zero_drive_zero_state() {
        let p = chain(5, hz(265e6));
        let s = linear_steady_state(&p, &DriveSpec::constant(p.omega_r, 0.0)).unwrap();
        assert!(s.alpha.iter().chain(&s.beta).all(|z| z.norm() == 0.0));
    }

    #[test]
    fn two_site_peaks_at_split_modes() {
        let p = chain(2, 0.0);
        let eps = C64::from(1e5);
        let resp = |nu: f64| {
            let d = DriveSpec::constant(hz(nu), eps);
            linear_steady_state(&p, &d).unwrap().alpha[1].norm()
        };
        // scan 1 MHz grid over +-300 MHz; maxima must sit at omega +- t
        let grid: Vec<f64> = (-300..=300).map(|k| 7.5e9 + k as f64 * 1e6).collect();
        let vals: Vec<f64> = grid.iter().map(|&nu| resp(nu)).collect();
        let mut peaks = vec![];
        for k in 1..vals.len() - 1 {
            if vals[k] > vals[k - 1] && vals[k] > vals[k + 1] {
                peaks.push(grid[k]);
            }
        }
        assert_eq!(peaks, vec![7.5e9 - 144e6, 7.5e9 + 144e6]);
    }

    #[test]
    fn rejects_kerr() {
        let p = LatticeParams {
            u_kerr: 1.0,
            ..chain(2, 0.0)
        };
        assert!(linear_steady_state(&p, &DriveSpec::constant(p.omega_r, 1.0)).is_err());
    }
}

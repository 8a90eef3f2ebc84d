//! Observables computed from steady states: transmission, zero-delay
//! coherence, bare-chain eigenmodes, and the sign-of-U duality map.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mft::{Attractor, SteadyStateResult};
use crate::model::{DriveSpec, LatticeParams};

/// Value reported for a vanishing transmitted amplitude.
pub const TRANSMISSION_FLOOR_DB: f64 = -200.0;

/// Output magnitude used for transmission: `|<alpha_out>|` at a fixed point,
/// the time-averaged `|alpha_out|` otherwise.
pub fn output_magnitude(result: &SteadyStateResult) -> f64 {
    match result.classification {
        Attractor::FixedPoint => result.alpha_out_mean.norm(),
        Attractor::NonStationary => result.alpha_abs_mean,
    }
}

/// `20 log10(amplitude / reference)`, floored at [`TRANSMISSION_FLOOR_DB`].
pub fn transmission_db(amplitude: f64, reference: f64) -> Result<f64> {
    if !(reference > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "transmission reference must be > 0, got {reference}"
        )));
    }
    if amplitude <= 0.0 {
        return Ok(TRANSMISSION_FLOOR_DB);
    }
    Ok((20.0 * (amplitude / reference).log10()).max(TRANSMISSION_FLOOR_DB))
}

/// Transmission of a steady state in dB relative to `reference`.
pub fn transmission(result: &SteadyStateResult, reference: f64) -> Result<f64> {
    transmission_db(output_magnitude(result), reference)
}

/// Which zero-delay coherence estimator to apply to `|alpha(t)|` samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum G2Estimator {
    /// `<<|a|^2>> / <<|a|>>^2`
    #[default]
    TimeAveraged,
    /// `<<|a|^4>> / <<|a|^2>>^2`, the usual classical-field mapping.
    FourthMoment,
}

impl G2Estimator {
    pub fn as_str(&self) -> &'static str {
        match self {
            G2Estimator::TimeAveraged => "time_averaged",
            G2Estimator::FourthMoment => "fourth_moment",
        }
    }
}

/// `g2(0) = <<|a(t)|^2>>_t / <<|a(t)|>>_t^2` over a window of magnitudes.
pub fn g2_zero(magnitudes: &[f64]) -> Result<f64> {
    g2_with(magnitudes, G2Estimator::TimeAveraged)
}

pub fn g2_with(magnitudes: &[f64], estimator: G2Estimator) -> Result<f64> {
    if magnitudes.is_empty() {
        return Err(Error::InsufficientData("empty window".into()));
    }
    let n = magnitudes.len() as f64;
    let m1 = magnitudes.iter().sum::<f64>() / n;
    let m2 = magnitudes.iter().map(|a| a * a).sum::<f64>() / n;
    let m4 = magnitudes.iter().map(|a| (a * a) * (a * a)).sum::<f64>() / n;
    g2_from_moments(m1, m2, m4, estimator)
}

/// g2 from the stored moments of a [`SteadyStateResult`].
pub fn g2_of_result(result: &SteadyStateResult, estimator: G2Estimator) -> Result<f64> {
    g2_from_moments(
        result.alpha_abs_mean,
        result.alpha_abs2_mean,
        result.alpha_abs4_mean,
        estimator,
    )
}

fn g2_from_moments(m1: f64, m2: f64, m4: f64, estimator: G2Estimator) -> Result<f64> {
    let (num, den) = match estimator {
        G2Estimator::TimeAveraged => (m2, m1 * m1),
        G2Estimator::FourthMoment => (m4, m2 * m2),
    };
    if !(den > 0.0) || !den.is_normal() {
        return Err(Error::Undefined("g2 with vanishing mean amplitude".into()));
    }
    Ok(num / den)
}

/// Normal modes of the bare hopping chain.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenmodeSet {
    /// Mode frequencies, ascending.
    pub frequencies: Vec<f64>,
    /// `weights[(j, mu)]`: weight of mode `mu` on site `j` (columns orthonormal).
    pub weights: DMatrix<f64>,
}

/// Diagonalizes the tridiagonal hopping matrix (diagonal `omega_r`,
/// off-diagonal `t_hop`).
///
/// Each column's sign is fixed so that its first nonzero entry is positive.
pub fn chain_eigenmodes(params: &LatticeParams) -> EigenmodeSet {
    let n = params.n_sites;
    let mut h = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        h[(j, j)] = params.omega_r;
        if j + 1 < n {
            h[(j, j + 1)] = params.t_hop;
            h[(j + 1, j)] = params.t_hop;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut weights = DMatrix::<f64>::zeros(n, n);
    let mut frequencies = Vec::with_capacity(n);
    for (col, &k) in order.iter().enumerate() {
        frequencies.push(eig.eigenvalues[k]);
        let v = eig.eigenvectors.column(k);
        let sign = v
            .iter()
            .find(|x| x.abs() > 1e-12)
            .map_or(1.0, |x| x.signum());
        for j in 0..n {
            weights[(j, col)] = sign * v[j];
        }
    }
    EigenmodeSet { frequencies, weights }
}

/// Frequencies at which multimode emission is expected: the bare chain modes.
pub fn predict_emission_peaks(params: &LatticeParams) -> Vec<f64> {
    chain_eigenmodes(params).frequencies
}

/// Applies the transformation
/// `(omega_p, Omega - omega, g, t) -> (2 omega - omega_p, omega - Omega, -g, -t)`.
///
/// The drive becomes `-eps*` so that, once the caller also flips the sign of
/// `u_kerr`, the mapped equations are solved by the complex conjugate of the
/// original amplitudes at all times. `u_kerr` itself is left untouched.
pub fn map_u_sign(params: &LatticeParams, drive: &DriveSpec) -> (LatticeParams, DriveSpec) {
    let w = params.omega_r;
    let mirror = |x: f64| 2.0 * w - x;
    let p = LatticeParams {
        omega_q: mirror(params.omega_q),
        g_coupling: -params.g_coupling,
        t_hop: -params.t_hop,
        omega_q_sites: params
            .omega_q_sites
            .as_ref()
            .map(|v| v.iter().map(|&x| mirror(x)).collect()),
        ..params.clone()
    };
    let d = DriveSpec {
        omega_p: mirror(drive.omega_p),
        epsilon: -drive.epsilon.conj(),
        envelope: drive.envelope.clone(),
    };
    (p, d)
}

/// Conjugates every amplitude, the image of a state under [`map_u_sign`].
pub fn conjugate_state(state: &crate::model::MeanFieldState) -> crate::model::MeanFieldState {
    crate::model::MeanFieldState {
        alpha: state.alpha.iter().map(C64::conj).collect(),
        beta: state.beta.iter().map(C64::conj).collect(),
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::model::{hz, MeanFieldState};

    fn fixed(amp: C64) -> SteadyStateResult {
        SteadyStateResult {
            classification: Attractor::FixedPoint,
            alpha_out_mean: amp,
            alpha_abs_mean: amp.norm(),
            alpha_abs2_mean: amp.norm_sqr(),
            alpha_abs4_mean: amp.norm_sqr().powi(2),
            alpha_abs_variance: 0.0,
            final_state: MeanFieldState::vacuum(1),
        }
    }

    #[test]
    fn transmission_edge_values() {
        assert_eq!(transmission(&fixed(C64::default()), 1.0).unwrap(), TRANSMISSION_FLOOR_DB);
        assert_eq!(transmission(&fixed(C64::new(0.0, 2.0)), 2.0).unwrap(), 0.0);
        assert!((transmission(&fixed(C64::from(0.1)), 1.0).unwrap() + 20.0).abs() < 1e-12);
        assert!(transmission(&fixed(C64::from(1.0)), 0.0).is_err());
    }

    #[test]
    fn non_stationary_uses_mean_magnitude() {
        let mut r = fixed(C64::from(0.01));
        r.classification = Attractor::NonStationary;
        r.alpha_abs_mean = 1.0;
        assert_eq!(transmission(&r, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn g2_constant_is_one() {
        assert!((g2_zero(&[3.7; 100]).unwrap() - 1.0).abs() < 1e-12);
        assert!((g2_with(&[3.7; 100], G2Estimator::FourthMoment).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn g2_on_off_is_two() {
        let x: Vec<f64> = (0..1000).map(|k| if k % 2 == 0 { 0.0 } else { 2.5 }).collect();
        assert!((g2_zero(&x).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn g2_undefined_for_zero_window() {
        assert!(matches!(g2_zero(&[0.0; 20]), Err(Error::Undefined(_))));
        assert!(g2_zero(&[]).is_err());
    }

    #[test]
    fn eigenmodes_small_chains() {
        let p = LatticeParams::paper_default_with_sites(1);
        let m = chain_eigenmodes(&p);
        assert_eq!(m.frequencies, vec![p.omega_r]);
        assert_eq!(m.weights[(0, 0)], 1.0);

        let p = LatticeParams::paper_default_with_sites(2);
        let m = chain_eigenmodes(&p);
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(m.frequencies[0], p.omega_r - p.t_hop) < 1e-14);
        assert!(rel(m.frequencies[1], p.omega_r + p.t_hop) < 1e-14);
        let s = 0.5f64.sqrt();
        // lower mode antisymmetric, upper symmetric for t > 0
        assert!((m.weights[(0, 0)] - s).abs() < 1e-12 && (m.weights[(1, 0)] + s).abs() < 1e-12);
        assert!((m.weights[(0, 1)] - s).abs() < 1e-12 && (m.weights[(1, 1)] - s).abs() < 1e-12);
    }

    #[test]
    fn eigenmodes_match_sine_modes() {
        let p = LatticeParams::paper_default_with_sites(9);
        let m = chain_eigenmodes(&p);
        let n = 9;
        for (col, mu) in (1..=n).rev().enumerate() {
            let expect_f = p.omega_r + 2.0 * p.t_hop * (mu as f64 * PI / (n + 1) as f64).cos();
            assert!(((m.frequencies[col] - expect_f) / expect_f).abs() < 1e-13);
            for j in 1..=n {
                let w = (2.0 / (n + 1) as f64).sqrt()
                    * (j as f64 * mu as f64 * PI / (n + 1) as f64).sin();
                assert!((m.weights[(j - 1, col)] - w).abs() < 1e-10, "j={j} mu={mu}");
            }
        }
    }

    #[test]
    fn emission_peaks_inside_band() {
        let p = LatticeParams::paper_default();
        let peaks = predict_emission_peaks(&p);
        assert_eq!(peaks.len(), 72);
        let (lo, hi) = (p.omega_r - 2.0 * p.t_hop, p.omega_r + 2.0 * p.t_hop);
        assert!(peaks.iter().all(|&f| f > lo && f < hi));
        assert!(peaks.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn u_sign_map_parameters() {
        let p = LatticeParams::paper_default();
        let d = DriveSpec::constant(p.omega_r, C64::new(1.0, 2.0));
        let (p2, d2) = map_u_sign(&p, &d);
        assert_eq!(d2.omega_p, p.omega_r);
        assert!((p2.omega_q - (p.omega_r - hz(0.9e9))).abs() < 1e-3);
        assert_eq!(p2.g_coupling, -p.g_coupling);
        assert_eq!(p2.t_hop, -p.t_hop);
        assert_eq!(p2.u_kerr, p.u_kerr);
        assert_eq!(d2.epsilon, C64::new(-1.0, 2.0));
    }
}

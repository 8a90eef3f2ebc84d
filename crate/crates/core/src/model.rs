//! Physical parameters, drive specification and mean-field state of the chain.
//!
//! Every rate and frequency stored here is angular (rad/s). Configuration
//! files speak in Hz; see [`crate::config`] for the conversion.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts a frequency in Hz to an angular frequency.
#[inline]
pub fn hz(nu: f64) -> f64 {
    TAU * nu
}

/// Converts an angular frequency back to Hz.
#[inline]
pub fn to_hz(omega: f64) -> f64 {
    omega / TAU
}

/// Rates of a uniform cavity-qubit chain.
///
/// Site indices (`drive_site`, `output_site`) are 1-based, matching the usual
/// labelling of the chain from the input port.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub n_sites: usize,
    /// Bare cavity frequency.
    pub omega_r: f64,
    /// Qubit frequency (uniform chain).
    pub omega_q: f64,
    /// Kerr interaction; the transmon has `U = -E_C`.
    pub u_kerr: f64,
    pub g_coupling: f64,
    pub t_hop: f64,
    /// Photon loss rate.
    pub kappa: f64,
    /// Qubit relaxation rate.
    pub gamma_q: f64,
    pub drive_site: usize,
    pub output_site: usize,
    /// Optional per-site qubit frequencies, overriding `omega_q` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_q_sites: Option<Vec<f64>>,
}

impl LatticeParams {
    /// Device values of the 72-site chain.
    ///
    /// The qubit frequency is the centre of the 8-8.8 GHz band the qubits are
    /// spread over; disorder is not modelled.
    pub fn paper_default() -> Self {
        Self {
            n_sites: 72,
            omega_r: hz(7.5e9),
            omega_q: hz(8.4e9),
            u_kerr: -hz(180e6),
            g_coupling: hz(265e6),
            t_hop: hz(144e6),
            kappa: hz(1.6e6),
            gamma_q: 1.0 / 1e-6,
            drive_site: 1,
            output_site: 72,
            omega_q_sites: None,
        }
    }

    /// Same rates as [`LatticeParams::paper_default`] on a chain of `n` sites,
    /// read out at the far end.
    pub fn paper_default_with_sites(n: usize) -> Self {
        Self {
            n_sites: n,
            output_site: n,
            ..Self::paper_default()
        }
    }

    /// Checks every invariant, returning the record unchanged on success.
    pub fn validate(self) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.n_sites == 0 {
            return bad("n_sites must be at least 1".into());
        }
        for (name, site) in [("drive_site", self.drive_site), ("output_site", self.output_site)] {
            if site == 0 || site > self.n_sites {
                return bad(format!(
                    "site out of range: {name} = {site} on a chain of {} sites",
                    self.n_sites
                ));
            }
        }
        let finite = [
            ("omega_r", self.omega_r),
            ("omega_q", self.omega_q),
            ("u_kerr", self.u_kerr),
            ("g_coupling", self.g_coupling),
            ("t_hop", self.t_hop),
            ("kappa", self.kappa),
            ("gamma_q", self.gamma_q),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return bad(format!("{name} is not finite ({v})"));
            }
        }
        if self.kappa <= 0.0 {
            return bad(format!("lossless chain: kappa must be > 0, got {}", self.kappa));
        }
        if self.gamma_q < 0.0 {
            return bad(format!("gamma_q must be >= 0, got {}", self.gamma_q));
        }
        if let Some(sites) = &self.omega_q_sites {
            if sites.len() != self.n_sites {
                return bad(format!(
                    "omega_q_sites has {} entries for {} sites",
                    sites.len(),
                    self.n_sites
                ));
            }
            if let Some(v) = sites.iter().find(|v| !v.is_finite()) {
                return bad(format!("omega_q_sites contains a non-finite value ({v})"));
            }
        }
        Ok(self)
    }

    /// Qubit frequency at 0-based site `j`.
    #[inline]
    pub fn omega_q_at(&self, j: usize) -> f64 {
        match &self.omega_q_sites {
            Some(v) => v[j],
            None => self.omega_q,
        }
    }

    /// Returns a copy with the Kerr term switched off.
    pub fn linear(&self) -> Self {
        Self {
            u_kerr: 0.0,
            ..self.clone()
        }
    }
}

/// Time dependence of the drive amplitude, as a factor multiplying `epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    Constant,
    /// Starts at `peak_factor` times the hold amplitude and ramps down to it,
    /// preparing the high-power state.
    UpPulse { peak_factor: f64, ramp_time: f64 },
    /// Ramps up from zero to the hold amplitude, preparing the low-power state.
    DownPulse { ramp_time: f64 },
    /// Linear ramp of the factor from `start` to `stop`, then held at `stop`.
    LinearRamp { start: f64, stop: f64, duration: f64 },
}

impl Envelope {
    /// Drive factor at time `t` (seconds since the start of the run).
    pub fn factor(&self, t: f64) -> f64 {
        fn ramp(a: f64, b: f64, dur: f64, t: f64) -> f64 {
            if dur <= 0.0 || t >= dur {
                b
            } else if t <= 0.0 {
                a
            } else {
                a + (b - a) * t / dur
            }
        }
        match *self {
            Envelope::Constant => 1.0,
            Envelope::UpPulse { peak_factor, ramp_time } => ramp(peak_factor, 1.0, ramp_time, t),
            Envelope::DownPulse { ramp_time } => ramp(0.0, 1.0, ramp_time, t),
            Envelope::LinearRamp { start, stop, duration } => ramp(start, stop, duration, t),
        }
    }

    /// Time after which the factor stays constant.
    pub fn settle_time(&self) -> f64 {
        match *self {
            Envelope::Constant => 0.0,
            Envelope::UpPulse { ramp_time, .. } | Envelope::DownPulse { ramp_time } => ramp_time,
            Envelope::LinearRamp { duration, .. } => duration,
        }
    }
}

/// Coherent drive applied at the chain's drive site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    /// Drive frequency; the equations of motion are written in its rotating frame.
    pub omega_p: f64,
    pub epsilon: C64,
    pub envelope: Envelope,
}

impl DriveSpec {
    pub fn constant(omega_p: f64, epsilon: impl Into<C64>) -> Self {
        Self {
            omega_p,
            epsilon: epsilon.into(),
            envelope: Envelope::Constant,
        }
    }

    #[inline]
    pub fn amplitude_at(&self, t: f64) -> C64 {
        self.epsilon * self.envelope.factor(t)
    }

    pub fn with_epsilon(&self, epsilon: impl Into<C64>) -> Self {
        Self {
            epsilon: epsilon.into(),
            ..self.clone()
        }
    }
}

/// Cavity (`alpha`) and qubit (`beta`) coherent amplitudes, one per site.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanFieldState {
    pub alpha: Vec<C64>,
    pub beta: Vec<C64>,
}

impl MeanFieldState {
    pub fn vacuum(n: usize) -> Self {
        Self {
            alpha: vec![C64::new(0.0, 0.0); n],
            beta: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn n_sites(&self) -> usize {
        self.alpha.len()
    }

    /// Packs the state as `[alpha_1..alpha_N, beta_1..beta_N]`.
    pub fn to_flat(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(2 * self.alpha.len());
        v.extend_from_slice(&self.alpha);
        v.extend_from_slice(&self.beta);
        v
    }

    pub fn from_flat(y: &[C64]) -> Self {
        let n = y.len() / 2;
        Self {
            alpha: y[..n].to_vec(),
            beta: y[n..].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.iter().chain(&self.beta).all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub(crate) fn check(&self, params: &LatticeParams) -> Result<()> {
        if self.alpha.len() != params.n_sites || self.beta.len() != params.n_sites {
            return Err(Error::ShapeMismatch {
                expected: params.n_sites,
                found: self.alpha.len().max(self.beta.len()),
            });
        }
        if !self.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn device_defaults() {
        let p = LatticeParams::paper_default();
        assert_eq!(p.n_sites, 72);
        assert!((to_hz(p.t_hop) - 144e6).abs() < 1e-3);
        assert!((to_hz(p.u_kerr) + 180e6).abs() < 1e-3);
        assert!((p.gamma_q - 1e6).abs() < 1e-9);
        assert!((to_hz(p.kappa) - 1.6e6).abs() < 1e-6);
        assert!((to_hz(p.g_coupling) - 265e6).abs() < 1e-3);
        assert!((to_hz(p.omega_q) - 8.4e9).abs() < 1e-1);
        assert!((to_hz(p.omega_r) - 7.5e9).abs() < 1e-1);
    }

    #[test]
    fn validate_accepts_defaults() {
        let p = LatticeParams::paper_default();
        assert_eq!(p.clone().validate().unwrap(), p);
    }

    #[test]
    fn validate_rejects_lossless() {
        let p = LatticeParams {
            kappa: 0.0,
            ..LatticeParams::paper_default()
        };
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("lossless chain"), "{err}");
    }

    #[test]
    fn validate_rejects_site_out_of_range() {
        let p = LatticeParams {
            drive_site: 73,
            ..LatticeParams::paper_default()
        };
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("site out of range"), "{err}");
    }

    #[test]
    fn validate_rejects_bad_override_and_nan() {
        let p = LatticeParams {
            omega_q_sites: Some(vec![1.0; 3]),
            ..LatticeParams::paper_default()
        };
        assert!(p.validate().is_err());
        let p = LatticeParams {
            g_coupling: f64::NAN,
            ..LatticeParams::paper_default()
        };
        assert!(p.validate().is_err());
        let p = LatticeParams {
            gamma_q: -1.0,
            ..LatticeParams::paper_default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn envelopes_are_monotone_then_flat() {
        let up = Envelope::UpPulse { peak_factor: 3.0, ramp_time: 1.0 };
        let down = Envelope::DownPulse { ramp_time: 1.0 };
        let mut prev_up = f64::INFINITY;
        let mut prev_down = f64::NEG_INFINITY;
        for k in 0..=20 {
            let t = k as f64 * 0.1;
            let (u, d) = (up.factor(t), down.factor(t));
            assert!(u <= prev_up && d >= prev_down);
            prev_up = u;
            prev_down = d;
        }
        assert_eq!(up.factor(1.5), 1.0);
        assert_eq!(down.factor(1.5), 1.0);
        assert_eq!(up.factor(0.0), 3.0);
        assert_eq!(down.factor(0.0), 0.0);
    }

    #[test]
    fn flat_roundtrip() {
        let s = MeanFieldState {
            alpha: vec![C64::new(1.0, 2.0), C64::new(3.0, 4.0)],
            beta: vec![C64::new(5.0, 6.0), C64::new(7.0, 8.0)],
        };
        assert_eq!(MeanFieldState::from_flat(&s.to_flat()), s);
    }
}

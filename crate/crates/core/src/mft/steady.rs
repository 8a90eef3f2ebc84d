use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::integrator::{self, Method};
use super::MeanFieldSystem;
use crate::error::{Error, Result};
use crate::model::{DriveSpec, LatticeParams, MeanFieldState};

/// Relative spread of `|alpha_out|` below which a window counts as a fixed point.
pub const FIXED_POINT_REL_STD: f64 = 1e-3;

/// Minimum number of samples in a window handed to [`classify_attractor`].
pub const MIN_WINDOW_SAMPLES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Upper bound on the step (adaptive) or the step itself (fixed RK4).
    pub dt_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial interval excluded from all averages.
    pub t_transient: f64,
    /// Length of the averaging window following the transient.
    pub t_average: f64,
    pub divergence_bound: f64,
    /// Spacing of the uniform samples taken inside the averaging window.
    pub sample_interval: f64,
    /// Use fixed-step RK4 at `dt_max` instead of the adaptive scheme.
    #[serde(default)]
    pub fixed_step: bool,
    /// Relative standard deviation threshold of the fixed-point classifier.
    #[serde(default = "default_threshold")]
    pub fixed_point_threshold: f64,
}

fn default_threshold() -> f64 {
    FIXED_POINT_REL_STD
}

impl IntegratorConfig {
    /// Windows of `200/kappa` each and a step bound resolving the fastest bare
    /// frequency of the rotating-frame equations.
    pub fn for_params(params: &LatticeParams) -> Self {
        let window = 200.0 / params.kappa;
        let fastest = (params.omega_q - params.omega_r).abs()
            + 2.0 * params.t_hop.abs()
            + params.g_coupling.abs()
            + params.u_kerr.abs()
            + params.kappa
            + params.gamma_q;
        Self {
            dt_max: 1.0 / fastest,
            rel_tol: 1e-7,
            abs_tol: 1e-9,
            t_transient: window,
            t_average: window,
            divergence_bound: 1e6,
            sample_interval: window / 4000.0,
            fixed_step: false,
            fixed_point_threshold: FIXED_POINT_REL_STD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt_max", self.dt_max),
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("t_transient", self.t_transient),
            ("t_average", self.t_average),
            ("divergence_bound", self.divergence_bound),
            ("sample_interval", self.sample_interval),
            ("fixed_point_threshold", self.fixed_point_threshold),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.t_average / self.sample_interval < MIN_WINDOW_SAMPLES as f64 {
            return Err(Error::InvalidConfig(format!(
                "averaging window holds fewer than {MIN_WINDOW_SAMPLES} samples"
            )));
        }
        Ok(())
    }

    pub fn method(&self) -> Method {
        if self.fixed_step {
            Method::FixedRk4 { h: self.dt_max }
        } else {
            Method::Adaptive {
                rel_tol: self.rel_tol,
                abs_tol: self.abs_tol,
                h_max: self.dt_max,
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attractor {
    FixedPoint,
    /// Limit cycles and chaotic attractors.
    NonStationary,
}

impl Attractor {
    pub fn as_str(&self) -> &'static str {
        match self {
            Attractor::FixedPoint => "fixed_point",
            Attractor::NonStationary => "non_stationary",
        }
    }
}

impl std::str::FromStr for Attractor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed_point" => Ok(Attractor::FixedPoint),
            "non_stationary" => Ok(Attractor::NonStationary),
            other => Err(Error::Parse(format!("unknown classification {other:?}"))),
        }
    }
}

/// Long-time behaviour at one drive point.
#[derive(Clone, Debug, PartialEq)]
pub struct SteadyStateResult {
    pub classification: Attractor,
    /// Time-averaged output amplitude.
    pub alpha_out_mean: C64,
    pub alpha_abs_mean: f64,
    pub alpha_abs2_mean: f64,
    /// Fourth moment of `|alpha_out|`, kept for the fourth-moment g2 variant.
    pub alpha_abs4_mean: f64,
    pub alpha_abs_variance: f64,
    /// State at the end of the averaging window, for continuation.
    pub final_state: MeanFieldState,
}

/// Uniform samples of the output-site amplitude over the averaging window.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputTail {
    pub dt: f64,
    pub samples: Vec<C64>,
}

impl OutputTail {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm()).collect()
    }
}

/// Uniformly sampled solution of the mean-field equations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MeanFieldState>,
}

/// Integrates from `t = 0` to `t_end`, sampling every `config.sample_interval`.
pub fn integrate(
    state0: &MeanFieldState,
    params: &LatticeParams,
    drive: &DriveSpec,
    config: &IntegratorConfig,
    t_end: f64,
) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidArgument(format!("t_end must be > 0, got {t_end}")));
    }
    config.validate()?;
    state0.check(params)?;
    let sys = MeanFieldSystem::new(params, drive);
    let mut traj = Trajectory::default();
    integrator::integrate(
        &sys,
        config.method(),
        &state0.to_flat(),
        0.0,
        t_end,
        config.sample_interval,
        config.divergence_bound,
        |t, y| {
            traj.times.push(t);
            traj.states.push(MeanFieldState::from_flat(y));
            true
        },
    )?;
    Ok(traj)
}

/// Classifies a window of `|alpha_out|` samples by its relative spread.
pub fn classify_attractor(magnitudes: &[f64], threshold: f64) -> Result<Attractor> {
    if magnitudes.len() < MIN_WINDOW_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "classification window has {} samples, need at least {MIN_WINDOW_SAMPLES}",
            magnitudes.len()
        )));
    }
    let (mean, var) = mean_variance(magnitudes);
    Ok(if var.sqrt() <= threshold * mean {
        Attractor::FixedPoint
    } else {
        Attractor::NonStationary
    })
}

fn mean_variance(x: &[f64]) -> (f64, f64) {
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &v) in x.iter().enumerate() {
        let d = v - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (v - mean);
    }
    (mean, if x.is_empty() { 0.0 } else { m2 / x.len() as f64 })
}

/// Runs through the transient and averages over the following window.
pub fn find_steady_state(
    params: &LatticeParams,
    drive: &DriveSpec,
    init: &MeanFieldState,
    config: &IntegratorConfig,
) -> Result<SteadyStateResult> {
    run_with_tail(params, drive, init, config).map(|(r, _)| r)
}

/// Like [`find_steady_state`], also returning the sampled output amplitude.
pub fn run_with_tail(
    params: &LatticeParams,
    drive: &DriveSpec,
    init: &MeanFieldState,
    config: &IntegratorConfig,
) -> Result<(SteadyStateResult, OutputTail)> {
    config.validate()?;
    init.check(params)?;
    let sys = MeanFieldSystem::new(params, drive);
    let method = config.method();
    let bound = config.divergence_bound;
    let (t1, y1, _) = integrator::integrate(
        &sys,
        method,
        &init.to_flat(),
        0.0,
        config.t_transient,
        config.t_transient,
        bound,
        |_, _| true,
    )?;
    let out = params.output_site - 1;
    let mut samples = Vec::with_capacity((config.t_average / config.sample_interval) as usize + 2);
    let (_, y_final, _) = integrator::integrate(
        &sys,
        method,
        &y1,
        t1,
        t1 + config.t_average,
        config.sample_interval,
        bound,
        |_, y| {
            samples.push(y[out]);
            true
        },
    )?;
    let magnitudes: Vec<f64> = samples.iter().map(|z| z.norm()).collect();
    let classification = classify_attractor(&magnitudes, config.fixed_point_threshold)?;
    let n = samples.len() as f64;
    let (abs_mean, abs_var) = mean_variance(&magnitudes);
    let result = SteadyStateResult {
        classification,
        alpha_out_mean: samples.iter().sum::<C64>() / n,
        alpha_abs_mean: abs_mean,
        alpha_abs2_mean: magnitudes.iter().map(|m| m * m).sum::<f64>() / n,
        alpha_abs4_mean: magnitudes.iter().map(|m| m.powi(4)).sum::<f64>() / n,
        alpha_abs_variance: abs_var,
        final_state: MeanFieldState::from_flat(&y_final),
    };
    Ok((
        result,
        OutputTail {
            dt: config.sample_interval,
            samples,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_window_is_fixed_point() {
        assert_eq!(classify_attractor(&[2.5; 50], 1e-3).unwrap(), Attractor::FixedPoint);
        assert_eq!(classify_attractor(&[0.0; 50], 1e-3).unwrap(), Attractor::FixedPoint);
    }

    #[test]
    fn modulated_window_is_non_stationary() {
        let x: Vec<f64> = (0..200)
            .map(|k| 1.0 + 0.5 * (k as f64 * 0.1).sin())
            .collect();
        assert_eq!(classify_attractor(&x, 1e-3).unwrap(), Attractor::NonStationary);
    }

    #[test]
    fn short_window_rejected() {
        assert!(matches!(
            classify_attractor(&[1.0; 9], 1e-3),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn config_validation() {
        let p = LatticeParams::paper_default();
        let c = IntegratorConfig::for_params(&p);
        c.validate().unwrap();
        assert!((c.t_transient * p.kappa - 200.0).abs() < 1e-9);
        let bad = IntegratorConfig { rel_tol: 0.0, ..c.clone() };
        assert!(bad.validate().is_err());
        let bad = IntegratorConfig { sample_interval: c.t_average, ..c };
        assert!(bad.validate().is_err());
    }
}

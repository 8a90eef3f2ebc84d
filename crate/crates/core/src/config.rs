//! Run configuration files.
//!
//! TOML with sections `[lattice]`, `[drive]`, `[sweep]` and `[analysis]`.
//! Frequencies and rates are written in Hz (`nu = omega / 2 pi`) and
//! converted to rad/s on load; drive amplitudes `epsilon` are in rad/s,
//! times in seconds. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{hz, to_hz, LatticeParams};
use crate::observables::G2Estimator;
use crate::sweep::{log_spaced, Protocol, PulseKind, PulseShape, SweepSettings};
use crate::telegraph::{AdrOptions, BinScheme, ChannelChoice, FitMode, RatePair, TelegraphSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSection,
    #[serde(default)]
    pub drive: DriveSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub n_sites: usize,
    pub cavity_hz: f64,
    pub qubit_hz: f64,
    pub kerr_hz: f64,
    pub coupling_hz: f64,
    pub hopping_hz: f64,
    pub kappa_hz: f64,
    /// Qubit relaxation rate; give this or `qubit_t1_s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_q_hz: Option<f64>,
    /// Qubit relaxation time, `gamma_q = 1 / T1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit_t1_s: Option<f64>,
    #[serde(default = "one")]
    pub drive_site: usize,
    /// Defaults to the last site.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_site: Option<usize>,
    /// Per-site qubit frequencies overriding `qubit_hz`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit_hz_sites: Option<Vec<f64>>,
}

fn one() -> usize {
    1
}

impl LatticeSection {
    pub fn from_params(p: &LatticeParams) -> Self {
        Self {
            n_sites: p.n_sites,
            cavity_hz: to_hz(p.omega_r),
            qubit_hz: to_hz(p.omega_q),
            kerr_hz: to_hz(p.u_kerr),
            coupling_hz: to_hz(p.g_coupling),
            hopping_hz: to_hz(p.t_hop),
            kappa_hz: to_hz(p.kappa),
            gamma_q_hz: Some(to_hz(p.gamma_q)),
            qubit_t1_s: None,
            drive_site: p.drive_site,
            output_site: Some(p.output_site),
            qubit_hz_sites: p.omega_q_sites.as_ref().map(|v| v.iter().map(|&w| to_hz(w)).collect()),
        }
    }

    pub fn params(&self) -> Result<LatticeParams> {
        let gamma_q = match (self.gamma_q_hz, self.qubit_t1_s) {
            (Some(g), None) => hz(g),
            (None, Some(t1)) if t1 > 0.0 => 1.0 / t1,
            (None, Some(t1)) => {
                return Err(Error::InvalidConfig(format!("[lattice] qubit_t1_s must be > 0, got {t1}")))
            }
            _ => {
                return Err(Error::InvalidConfig(
                    "[lattice] needs exactly one of `gamma_q_hz` and `qubit_t1_s`".into(),
                ))
            }
        };
        LatticeParams {
            n_sites: self.n_sites,
            omega_r: hz(self.cavity_hz),
            omega_q: hz(self.qubit_hz),
            u_kerr: hz(self.kerr_hz),
            g_coupling: hz(self.coupling_hz),
            t_hop: hz(self.hopping_hz),
            kappa: hz(self.kappa_hz),
            gamma_q,
            drive_site: self.drive_site,
            output_site: self.output_site.unwrap_or(self.n_sites),
            omega_q_sites: self.qubit_hz_sites.as_ref().map(|v| v.iter().map(|&x| hz(x)).collect()),
        }
        .validate()
        .map_err(|e| Error::InvalidConfig(format!("[lattice]: {e}")))
    }
}

/// Single-point drive used by `sweep`, `pulse` and trajectory dumps.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq_hz: Option<f64>,
    /// [rad/s]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_time_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_factor: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Explicit frequency axis; otherwise `freq_start_hz..=freq_stop_hz` in `freq_points`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freqs_hz: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq_start_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq_stop_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq_points: Option<usize>,
    /// Explicit drive amplitudes [rad/s]; otherwise log-spaced from `eps_min` to `eps_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<Protocol>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_scale: Option<f64>,
    #[serde(default)]
    pub g2_estimator: G2Estimator,
    #[serde(default)]
    pub fixed_step: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_max_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_transient_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_average_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_interval_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_point_threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub gamma_12: f64,
    pub gamma_21: f64,
    pub snr: f64,
    pub traces: usize,
    pub duration_s: f64,
    pub dt_s: f64,
    pub filter_cutoff_hz: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<u8>,
    #[serde(default)]
    pub channel: ChannelChoice,
    #[serde(default)]
    pub fit_mode: FitMode,
    #[serde(default = "default_bin_ratio")]
    pub bin_ratio: f64,
    #[serde(default = "default_min_count")]
    pub min_bin_count: u64,
    #[serde(default)]
    pub floor_candidates: Vec<f64>,
}

fn default_bin_ratio() -> f64 {
    BinScheme::default().ratio
}

fn default_min_count() -> u64 {
    BinScheme::default().min_count
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            gamma_12: 50.0,
            gamma_21: 200.0,
            snr: 5.0,
            traces: 7,
            duration_s: 0.3,
            dt_s: 2e-7,
            filter_cutoff_hz: 1.9e6,
            seed: 0,
            initial_state: None,
            channel: ChannelChoice::Auto,
            fit_mode: FitMode::Mle,
            bin_ratio: default_bin_ratio(),
            min_bin_count: default_min_count(),
            floor_candidates: Vec::new(),
        }
    }
}

fn missing(section: &str, key: &str) -> Error {
    Error::InvalidConfig(format!("[{section}] needs `{key}`"))
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn lattice_params(&self) -> Result<LatticeParams> {
        self.lattice.params()
    }

    /// Frequency axis [rad/s].
    pub fn freqs(&self) -> Result<Vec<f64>> {
        let s = &self.sweep;
        let v = if let Some(v) = &s.freqs_hz {
            v.clone()
        } else {
            let a = s.freq_start_hz.ok_or_else(|| missing("sweep", "freq_start_hz"))?;
            let b = s.freq_stop_hz.ok_or_else(|| missing("sweep", "freq_stop_hz"))?;
            let n = s.freq_points.ok_or_else(|| missing("sweep", "freq_points"))?;
            match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
            }
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("[sweep] frequency axis is empty or not finite".into()));
        }
        Ok(v.into_iter().map(hz).collect())
    }

    /// Drive amplitude axis [rad/s].
    pub fn powers(&self) -> Result<Vec<f64>> {
        let s = &self.sweep;
        let v = if let Some(v) = &s.epsilons {
            v.clone()
        } else {
            let a = s.eps_min.ok_or_else(|| missing("sweep", "eps_min"))?;
            let b = s.eps_max.ok_or_else(|| missing("sweep", "eps_max"))?;
            let n = s.power_points.ok_or_else(|| missing("sweep", "power_points"))?;
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::InvalidConfig("[sweep] eps_min and eps_max must be > 0".into()));
            }
            log_spaced(a, b, n)
        };
        if v.is_empty() {
            return Err(Error::InvalidConfig("[sweep] power axis is empty".into()));
        }
        Ok(v)
    }

    pub fn protocol(&self) -> Protocol {
        self.sweep.protocol.unwrap_or(Protocol::FreshStart)
    }

    pub fn sweep_settings(&self, params: &LatticeParams) -> Result<SweepSettings> {
        let s = &self.sweep;
        let mut out = SweepSettings::for_params(params);
        let c = &mut out.integrator;
        c.fixed_step = s.fixed_step;
        macro_rules! set {
            ($field:ident, $key:ident) => {
                if let Some(v) = s.$key {
                    c.$field = v;
                }
            };
        }
        set!(dt_max, dt_max_s);
        set!(rel_tol, rel_tol);
        set!(abs_tol, abs_tol);
        set!(t_transient, t_transient_s);
        set!(t_average, t_average_s);
        set!(sample_interval, sample_interval_s);
        set!(divergence_bound, divergence_bound);
        set!(fixed_point_threshold, fixed_point_threshold);
        // keep the default sample density when only the window changes
        if s.t_average_s.is_some() && s.sample_interval_s.is_none() {
            c.sample_interval = c.t_average / 4000.0;
        }
        c.validate()
            .map_err(|e| Error::InvalidConfig(format!("[sweep]: {e}")))?;
        out.g2_estimator = s.g2_estimator;
        out.seed = s.seed;
        if let Some(v) = s.seed_scale {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig("[sweep] seed_scale must be > 0".into()));
            }
            out.seed_scale = v;
        }
        Ok(out)
    }

    /// Drive frequency [rad/s] and amplitude [rad/s] of single-point commands.
    pub fn drive_point(&self) -> Result<(f64, f64)> {
        let f = self.drive.freq_hz.ok_or_else(|| missing("drive", "freq_hz"))?;
        let e = self.drive.epsilon.ok_or_else(|| missing("drive", "epsilon"))?;
        if !(e >= 0.0 && e.is_finite() && f.is_finite()) {
            return Err(Error::InvalidConfig("[drive] bad freq_hz or epsilon".into()));
        }
        Ok((hz(f), e))
    }

    pub fn pulse(&self, params: &LatticeParams) -> (PulseKind, PulseShape) {
        let mut shape = PulseShape::for_params(params);
        if let Some(r) = self.drive.ramp_time_s {
            shape.ramp_time = r;
        }
        if let Some(p) = self.drive.peak_factor {
            shape.peak_factor = p;
        }
        (self.drive.pulse.unwrap_or(PulseKind::Up), shape)
    }

    /// Generator recipe for trace `k` of the synthetic bundle.
    pub fn telegraph_spec(&self, k: usize) -> Result<TelegraphSpec> {
        let a = &self.analysis;
        let rates = RatePair::new(a.gamma_12, a.gamma_21)
            .map_err(|e| Error::InvalidConfig(format!("[analysis]: {e}")))?;
        if !(a.snr > 0.0) {
            return Err(Error::InvalidConfig("[analysis] snr must be > 0".into()));
        }
        let spec = TelegraphSpec {
            duration: a.duration_s,
            dt: a.dt_s,
            filter_cutoff: a.filter_cutoff_hz,
            initial_state: a.initial_state,
            ..TelegraphSpec::standard(rates, a.snr, a.seed.wrapping_mul(1_000_003).wrapping_add(k as u64))
        };
        spec.validate()
            .map_err(|e| Error::InvalidConfig(format!("[analysis]: {e}")))?;
        Ok(spec)
    }

    pub fn adr_options(&self) -> AdrOptions {
        let a = &self.analysis;
        AdrOptions {
            channel: a.channel,
            fit_mode: a.fit_mode,
            bins: BinScheme {
                ratio: a.bin_ratio,
                min_count: a.min_bin_count,
            },
            filter_cutoff: None,
            floor_candidates: a.floor_candidates.clone(),
        }
    }

    /// Full-default configuration for the given chain.
    pub fn for_params(params: &LatticeParams) -> Self {
        Self {
            lattice: LatticeSection::from_params(params),
            drive: DriveSection::default(),
            sweep: SweepSection::default(),
            analysis: AnalysisSection::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[lattice]
n_sites = 4
cavity_hz = 7.5e9
qubit_hz = 8.4e9
kerr_hz = -180e6
coupling_hz = 265e6
hopping_hz = 144e6
kappa_hz = 1.6e6
qubit_t1_s = 1e-6

[sweep]
freq_start_hz = 7.2e9
freq_stop_hz = 7.8e9
freq_points = 3
eps_min = 1e5
eps_max = 1e9
power_points = 5
"#;

    #[test]
    fn loads_and_converts_units() {
        let c = RunConfig::from_toml_str(MINIMAL).unwrap();
        let p = c.lattice_params().unwrap();
        assert_eq!(p.output_site, 4);
        assert_eq!(p.gamma_q, 1e6);
        let both = MINIMAL.replace("qubit_t1_s = 1e-6", "qubit_t1_s = 1e-6\ngamma_q_hz = 1.0");
        assert!(RunConfig::from_toml_str(&both).unwrap().lattice_params().is_err());
        let neither = MINIMAL.replace("qubit_t1_s = 1e-6", "");
        assert!(RunConfig::from_toml_str(&neither).unwrap().lattice_params().is_err());
        assert!((p.t_hop - hz(144e6)).abs() < 1e-3);
        let f = c.freqs().unwrap();
        assert_eq!(f.len(), 3);
        assert!((f[1] - hz(7.5e9)).abs() < 1.0);
        let w = c.powers().unwrap();
        assert_eq!(w.len(), 5);
        assert!((w[2] / 1e7 - 1.0).abs() < 1e-12);
        assert_eq!(c.protocol(), Protocol::FreshStart);
    }

    #[test]
    fn unknown_keys_fail() {
        let bad = MINIMAL.replace("kappa_hz", "kapa_hz");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(Error::InvalidConfig(_))));
        let bad = format!("{MINIMAL}\nbogus = 1\n");
        assert!(RunConfig::from_toml_str(&bad).is_err());
        let bad = format!("{MINIMAL}\n[extra]\nx = 1\n");
        assert!(RunConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn invalid_lattice_is_config_error() {
        let bad = MINIMAL.replace("kappa_hz = 1.6e6", "kappa_hz = 0.0");
        let c = RunConfig::from_toml_str(&bad).unwrap();
        let e = c.lattice_params().unwrap_err().to_string();
        assert!(e.contains("lossless chain"), "{e}");
    }

    #[test]
    fn integrator_overrides() {
        let s = format!("{MINIMAL}fixed_step = true\nt_average_s = 1e-5\n");
        let c = RunConfig::from_toml_str(&s).unwrap();
        let p = c.lattice_params().unwrap();
        let st = c.sweep_settings(&p).unwrap();
        assert!(st.integrator.fixed_step);
        assert_eq!(st.integrator.t_average, 1e-5);
        assert_eq!(st.integrator.sample_interval, 1e-5 / 4000.0);
    }

    #[test]
    fn serializes_back() {
        let c = RunConfig::from_toml_str(MINIMAL).unwrap();
        let again = RunConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(c, again);
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use super::RatePair;
use crate::error::{Error, Result};

/// Recipe for a synthetic two-state trace.
///
/// Each state sits at a fixed point `(amplitude, phase)` of the I/Q plane
/// with `I = A sin(theta)`, `Q = A cos(theta)`. White Gaussian noise of
/// standard deviation `sigma` is added to both quadratures at the raw rate
/// `oversample / dt`, the result passes a single-pole low-pass filter and is
/// then decimated to one sample every `dt`. The decimated noise is sampled
/// exactly, without generating the raw stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelegraphSpec {
    pub rates: RatePair,
    /// Trace length [s].
    pub duration: f64,
    /// Output sample interval [s].
    pub dt: f64,
    /// `(amplitude, phase)` of state 1.
    pub level_1: (f64, f64),
    /// `(amplitude, phase)` of state 2.
    pub level_2: (f64, f64),
    /// Noise per quadrature per raw sample, before filtering.
    pub sigma: f64,
    /// -3 dB frequency of the low-pass filter [Hz].
    pub filter_cutoff: f64,
    #[serde(default = "default_oversample")]
    pub oversample: usize,
    pub seed: u64,
    /// Starting state (1 or 2); drawn from the stationary distribution if absent.
    #[serde(default)]
    pub initial_state: Option<u8>,
}

fn default_oversample() -> usize {
    10
}

impl TelegraphSpec {
    /// 0.3 s at 5 MS/s behind a 1.9 MHz filter, with the states differing
    /// in amplitude only and separated by `snr * sigma`.
    pub fn standard(rates: RatePair, snr: f64, seed: u64) -> Self {
        let level_1 = (1.0, 0.3);
        let level_2 = (1.7, 0.3);
        let sep = iq_distance(level_1, level_2);
        Self {
            rates,
            duration: 0.3,
            dt: 2e-7,
            level_1,
            level_2,
            sigma: sep / snr,
            filter_cutoff: 1.9e6,
            oversample: default_oversample(),
            seed,
            initial_state: None,
        }
    }

    /// Separation of the two levels over the raw noise amplitude.
    pub fn snr(&self) -> f64 {
        iq_distance(self.level_1, self.level_2) / self.sigma
    }

    /// Time constant `1 / (2 pi f_c)` of the filter.
    pub fn filter_time_constant(&self) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI * self.filter_cutoff)
    }

    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.duration) || !pos(self.dt) || !pos(self.filter_cutoff) {
            return Err(Error::InvalidArgument(
                "duration, dt and filter_cutoff must be positive".into(),
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad noise sigma {}", self.sigma)));
        }
        if self.dt >= 1.0 / self.filter_cutoff {
            return Err(Error::InvalidArgument(
                "sample interval must be shorter than 1/filter_cutoff".into(),
            ));
        }
        if self.oversample == 0 {
            return Err(Error::InvalidArgument("oversample must be >= 1".into()));
        }
        if self.duration / self.dt < 1.0 {
            return Err(Error::InvalidArgument("trace shorter than one sample".into()));
        }
        if let Some(s) = self.initial_state {
            if s != 1 && s != 2 {
                return Err(Error::InvalidArgument(format!("initial state {s} is not 1 or 2")));
            }
        }
        Ok(())
    }
}

fn iq(level: (f64, f64)) -> (f64, f64) {
    (level.0 * level.1.sin(), level.0 * level.1.cos())
}

fn iq_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (ia, qa) = iq(a);
    let (ib, qb) = iq(b);
    (ia - ib).hypot(qa - qb)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub seed: Option<u64>,
    pub rates: Option<RatePair>,
    pub filter_cutoff: Option<f64>,
}

/// Sampled I/Q record, optionally with the true state of every sample.
#[derive(Clone, Debug, PartialEq)]
pub struct TelegraphTrace {
    pub dt: f64,
    pub i: Vec<f64>,
    pub q: Vec<f64>,
    pub truth: Option<Vec<u8>>,
    pub meta: TraceMeta,
}

impl TelegraphTrace {
    pub fn len(&self) -> usize {
        self.i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 * self.dt
    }
}

/// Generates a telegraph trace from a seeded continuous-time Markov chain.
pub fn simulate_telegraph(spec: &TelegraphSpec) -> Result<TelegraphTrace> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_out = (spec.duration / spec.dt).round() as usize;
    let over = spec.oversample;
    let dt_raw = spec.dt / over as f64;
    let a = 1.0 - (-2.0 * std::f64::consts::PI * spec.filter_cutoff * dt_raw).exp();

    let rate_out = |s: u8| if s == 1 { spec.rates.gamma_12 } else { spec.rates.gamma_21 };
    let draw_dwell = |s: u8, rng: &mut ChaCha8Rng| {
        let r = rate_out(s);
        if r > 0.0 {
            Exp::new(r).expect("positive rate").sample(rng)
        } else {
            f64::INFINITY
        }
    };

    let mut state = match spec.initial_state {
        Some(s) => s,
        None => {
            let (p1, _) = spec.rates.stationary();
            if rng.gen::<f64>() < p1 { 1 } else { 2 }
        }
    };
    let levels = [iq(spec.level_1), iq(spec.level_2)];
    let mut next_switch = draw_dwell(state, &mut rng);
    let (mut li, mut lq) = levels[(state - 1) as usize];

    // The filtered noise observed every `over` raw steps is an AR(1)
    // process, so it is drawn directly at the output rate.
    let rho = (1.0 - a).powi(over as i32);
    let step_gain = 1.0 - rho;
    let innov = spec.sigma * a * ((1.0 - rho * rho) / (1.0 - (1.0 - a) * (1.0 - a))).sqrt();
    let (mut ni, mut nq) = (0.0, 0.0);

    let mut i_out = Vec::with_capacity(n_out);
    let mut q_out = Vec::with_capacity(n_out);
    let mut truth = Vec::with_capacity(n_out);
    for m in 0..n_out {
        let t_out = m as f64 * spec.dt;
        let t_last = t_out + (over - 1) as f64 * dt_raw;
        while t_out >= next_switch {
            state = 3 - state;
            next_switch += draw_dwell(state, &mut rng);
        }
        truth.push(state);
        if next_switch > t_last {
            let (ti, tq) = levels[(state - 1) as usize];
            li += step_gain * (ti - li);
            lq += step_gain * (tq - lq);
        } else {
            for k in 0..over {
                let t = t_out + k as f64 * dt_raw;
                while t >= next_switch {
                    state = 3 - state;
                    next_switch += draw_dwell(state, &mut rng);
                }
                let (ti, tq) = levels[(state - 1) as usize];
                li += a * (ti - li);
                lq += a * (tq - lq);
            }
        }
        let xi: f64 = rng.sample(StandardNormal);
        let xq: f64 = rng.sample(StandardNormal);
        ni = rho * ni + innov * xi;
        nq = rho * nq + innov * xq;
        i_out.push(li + ni);
        q_out.push(lq + nq);
    }
    Ok(TelegraphTrace {
        dt: spec.dt,
        i: i_out,
        q: q_out,
        truth: Some(truth),
        meta: TraceMeta {
            seed: Some(spec.seed),
            rates: Some(spec.rates),
            filter_cutoff: Some(spec.filter_cutoff),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(rates: RatePair) -> TelegraphSpec {
        TelegraphSpec {
            duration: 0.05,
            dt: 2e-7,
            sigma: 0.0,
            ..TelegraphSpec::standard(rates, 1.0, 3)
        }
    }

    #[test]
    fn absorbing_state_never_left() {
        let spec = TelegraphSpec {
            initial_state: Some(1),
            ..quiet(RatePair::new(0.0, 1e4).unwrap())
        };
        let tr = simulate_telegraph(&spec).unwrap();
        assert!(tr.truth.unwrap().iter().all(|&s| s == 1));
        let (i1, q1) = iq(spec.level_1);
        assert!(tr.i.iter().all(|&x| (x - i1).abs() < 1e-12));
        assert!(tr.q.iter().all(|&x| (x - q1).abs() < 1e-12));
    }

    #[test]
    fn same_seed_same_trace() {
        let spec = TelegraphSpec {
            duration: 0.01,
            ..TelegraphSpec::standard(RatePair::new(500.0, 800.0).unwrap(), 5.0, 42)
        };
        let a = simulate_telegraph(&spec).unwrap();
        let b = simulate_telegraph(&spec).unwrap();
        assert_eq!(a, b);
        let c = simulate_telegraph(&TelegraphSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a.i, c.i);
    }

    #[test]
    fn mean_dwells_match_rates() {
        let rates = RatePair::new(2e4, 5e4).unwrap();
        let spec = TelegraphSpec {
            duration: 0.5,
            oversample: 1,
            ..quiet(rates)
        };
        let truth = simulate_telegraph(&spec).unwrap().truth.unwrap();
        let mut sums = [0.0; 2];
        let mut counts = [0usize; 2];
        let mut start = 0;
        for k in 1..truth.len() {
            if truth[k] != truth[k - 1] {
                if start > 0 {
                    sums[(truth[k - 1] - 1) as usize] += (k - start) as f64 * spec.dt;
                    counts[(truth[k - 1] - 1) as usize] += 1;
                }
                start = k;
            }
        }
        let tau1 = sums[0] / counts[0] as f64;
        let tau2 = sums[1] / counts[1] as f64;
        assert!(counts[0] > 5000 && counts[1] > 5000);
        assert!((tau1 * 2e4 - 1.0).abs() < 0.05, "tau1 = {tau1}");
        assert!((tau2 * 5e4 - 1.0).abs() < 0.05, "tau2 = {tau2}");
    }

    #[test]
    fn equal_rates_split_evenly() {
        let spec = TelegraphSpec {
            duration: 0.5,
            oversample: 1,
            ..quiet(RatePair::new(1e4, 1e4).unwrap())
        };
        let truth = simulate_telegraph(&spec).unwrap().truth.unwrap();
        let p1 = truth.iter().filter(|&&s| s == 1).count() as f64 / truth.len() as f64;
        assert!((p1 - 0.5).abs() < 0.02, "{p1}");
    }

    #[test]
    fn filtered_noise_statistics() {
        let spec = TelegraphSpec {
            sigma: 1.0,
            duration: 0.2,
            initial_state: Some(1),
            ..TelegraphSpec::standard(RatePair::new(0.0, 1.0).unwrap(), 1.0, 8)
        };
        let tr = simulate_telegraph(&spec).unwrap();
        let (i1, _) = iq(spec.level_1);
        let x: Vec<f64> = tr.i.iter().skip(100).map(|v| v - i1).collect();
        let n = x.len() as f64;
        let var = x.iter().map(|v| v * v).sum::<f64>() / n;
        let lag1 = x.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (n - 1.0) / var;
        // raw-rate recursion y += a (x - y) on unit white noise
        let a = 1.0 - (-2.0 * std::f64::consts::PI * spec.filter_cutoff * spec.dt / 10.0).exp();
        let expect_var = a / (2.0 - a);
        assert!((var / expect_var - 1.0).abs() < 0.02, "{var} vs {expect_var}");
        assert!((lag1 - (1.0 - a).powi(10)).abs() < 0.01, "{lag1}");
    }

    #[test]
    fn rejects_bad_spec() {
        let ok = quiet(RatePair::new(1.0, 1.0).unwrap());
        assert!(simulate_telegraph(&TelegraphSpec { dt: 1e-5, filter_cutoff: 1e6, ..ok.clone() }).is_err());
        assert!(simulate_telegraph(&TelegraphSpec { duration: 0.0, ..ok.clone() }).is_err());
        assert!(simulate_telegraph(&TelegraphSpec { initial_state: Some(3), ..ok }).is_err());
    }

    #[test]
    fn snr_definition() {
        let s = TelegraphSpec::standard(RatePair::new(1.0, 1.0).unwrap(), 5.0, 0);
        assert!((s.snr() - 5.0).abs() < 1e-12);
    }
}

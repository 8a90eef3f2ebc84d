use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{RatePair, TelegraphTrace};
use crate::error::{Error, Result};

pub const BIMODALITY_BINS: usize = 200;
const SMOOTH_WINDOW: usize = 5;
const MIN_PROMINENCE: f64 = 0.1;
const MAX_VALLEY: f64 = 0.5;
const MIN_BIMODALITY_SAMPLES: usize = 1000;
/// De-bounce persistence in units of the filter time constant.
const PERSISTENCE_TIME_CONSTANTS: f64 = 3.0;

/// Amplitude and phase of a homodyne sample.
///
/// The phase is `atan2(I, Q)` in `(-pi, pi]`: `(0, 1) -> 0`, `(1, 0) -> pi/2`,
/// `(-1, 0) -> -pi/2`, `(0, -1) -> pi`. The origin maps to phase 0.
pub fn homodyne_from_iq(i: f64, q: f64) -> (f64, f64) {
    let a = (i * i + q * q).sqrt();
    if a == 0.0 {
        return (0.0, 0.0);
    }
    let th = i.atan2(q);
    (a, if th == -std::f64::consts::PI { std::f64::consts::PI } else { th })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Amplitude,
    Phase,
}

impl Channel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Channel::Amplitude => "amplitude",
            Channel::Phase => "phase",
        }
    }

    fn extract(&self, trace: &TelegraphTrace) -> Vec<f64> {
        trace
            .i
            .iter()
            .zip(&trace.q)
            .map(|(&i, &q)| {
                let (a, th) = homodyne_from_iq(i, q);
                match self {
                    Channel::Amplitude => a,
                    Channel::Phase => th,
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelChoice {
    #[default]
    Auto,
    Amplitude,
    Phase,
}

struct Histogram {
    lo: f64,
    width: f64,
    counts: Vec<f64>,
}

impl Histogram {
    fn build(parts: &[&[f64]], bins: usize) -> Option<Self> {
        let (lo, hi) = parts
            .iter()
            .flat_map(|p| p.iter())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return None;
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0.0; bins];
        for &v in parts.iter().flat_map(|p| p.iter()) {
            counts[(((v - lo) / width) as usize).min(bins - 1)] += 1.0;
        }
        Some(Self { lo, width, counts })
    }

    fn center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.width
    }

    fn bin_of(&self, v: f64) -> usize {
        (((v - self.lo) / self.width).max(0.0) as usize).min(self.counts.len() - 1)
    }
}

fn smooth(c: &[f64], window: usize) -> Vec<f64> {
    let h = window / 2;
    (0..c.len())
        .map(|k| {
            let lo = k.saturating_sub(h);
            let hi = (k + h + 1).min(c.len());
            c[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Peak indices with their topographic prominence.
fn peaks_with_prominence(s: &[f64]) -> Vec<(usize, f64)> {
    let n = s.len();
    let mut out = Vec::new();
    let mut k = 0;
    while k < n {
        // plateau [k, e)
        let mut e = k + 1;
        while e < n && s[e] == s[k] {
            e += 1;
        }
        let left_lower = k == 0 || s[k - 1] < s[k];
        let right_lower = e == n || s[e] < s[k];
        if left_lower && right_lower && s[k] > 0.0 {
            let h = s[k];
            let mut lmin = h;
            for &v in s[..k].iter().rev() {
                if v > h {
                    break;
                }
                lmin = lmin.min(v);
            }
            let mut rmin = h;
            for &v in &s[e..] {
                if v > h {
                    break;
                }
                rmin = rmin.min(v);
            }
            let peak = (k + e - 1) / 2;
            out.push((peak, h - lmin.max(rmin)));
        }
        k = e;
    }
    out
}

/// Threshold and fraction of raw samples in the threshold bin.
fn bimodal_split(parts: &[&[f64]]) -> Result<Option<(f64, f64)>> {
    let total: usize = parts.iter().map(|p| p.len()).sum();
    if total < MIN_BIMODALITY_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "bimodality test needs at least {MIN_BIMODALITY_SAMPLES} samples, got {total}"
        )));
    }
    let Some(hist) = Histogram::build(parts, BIMODALITY_BINS) else {
        return Ok(None);
    };
    let s = smooth(&hist.counts, SMOOTH_WINDOW);
    let max = s.iter().cloned().fold(0.0, f64::max);
    let mut peaks: Vec<(usize, f64)> = peaks_with_prominence(&s)
        .into_iter()
        .filter(|&(_, p)| p >= MIN_PROMINENCE * max)
        .collect();
    if peaks.len() < 2 {
        return Ok(None);
    }
    peaks.sort_by(|a, b| s[b.0].total_cmp(&s[a.0]).then(a.0.cmp(&b.0)));
    let (a, b) = if peaks[0].0 < peaks[1].0 {
        (peaks[0].0, peaks[1].0)
    } else {
        (peaks[1].0, peaks[0].0)
    };
    let valley = s[a..=b].iter().cloned().fold(f64::INFINITY, f64::min);
    if valley > MAX_VALLEY * s[a].min(s[b]) {
        return Ok(None);
    }
    let threshold = 0.5 * (hist.center(a) + hist.center(b));
    let at = hist.counts[hist.bin_of(threshold)] / total as f64;
    Ok(Some((threshold, at)))
}

/// Threshold between two histogram peaks, or `None` for a unimodal or
/// degenerate distribution.
///
/// Uses a 200-bin histogram smoothed by a 5-bin moving average. Two peaks
/// with prominence of at least 10% of the maximum are required, and the
/// valley between them may not exceed half the lower peak. The threshold is
/// the mean of the two peak locations.
pub fn detect_bimodality(samples: &[f64]) -> Result<Option<f64>> {
    Ok(bimodal_split(&[samples])?.map(|(t, _)| t))
}

/// Amplitude and phase series of one trace.
struct Homodyne {
    dt: f64,
    amplitude: Vec<f64>,
    phase: Vec<f64>,
}

impl Homodyne {
    fn of(trace: &TelegraphTrace) -> Self {
        let (amplitude, phase) = trace
            .i
            .iter()
            .zip(&trace.q)
            .map(|(&i, &q)| homodyne_from_iq(i, q))
            .unzip();
        Self { dt: trace.dt, amplitude, phase }
    }

    fn channel(&self, ch: Channel) -> &[f64] {
        match ch {
            Channel::Amplitude => &self.amplitude,
            Channel::Phase => &self.phase,
        }
    }
}

fn select_from(data: &[Homodyne], choice: ChannelChoice) -> Result<Option<(Channel, f64)>> {
    let candidates: &[Channel] = match choice {
        ChannelChoice::Auto => &[Channel::Amplitude, Channel::Phase],
        ChannelChoice::Amplitude => &[Channel::Amplitude],
        ChannelChoice::Phase => &[Channel::Phase],
    };
    let mut best: Option<(Channel, f64, f64)> = None;
    for &ch in candidates {
        let parts: Vec<&[f64]> = data.iter().map(|h| h.channel(ch)).collect();
        if let Some((thr, at)) = bimodal_split(&parts)? {
            if best.map_or(true, |(_, _, b)| at < b) {
                best = Some((ch, thr, at));
            }
        }
    }
    Ok(best.map(|(c, t, _)| (c, t)))
}

/// Picks the bimodal channel with the fewest histogram counts at its threshold.
pub fn select_channel(traces: &[TelegraphTrace]) -> Result<Option<(Channel, f64)>> {
    let data: Vec<Homodyne> = traces.par_iter().map(Homodyne::of).collect();
    select_from(&data, ChannelChoice::Auto)
}

/// One contiguous stay in a state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dwell {
    pub duration: f64,
    /// Truncated by the start or end of the trace.
    pub censored: bool,
}

/// Dwells of state 1 (below threshold) and state 2 (above threshold).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DwellLists {
    pub state_1: Vec<Dwell>,
    pub state_2: Vec<Dwell>,
}

impl DwellLists {
    pub fn extend(&mut self, other: DwellLists) {
        self.state_1.extend(other.state_1);
        self.state_2.extend(other.state_2);
    }
}

/// Thresholds one channel of a trace and splits it into dwells.
///
/// Samples above `threshold` belong to state 2. A change of state is
/// accepted only when the new state lasts at least `min_persistence`
/// seconds; shorter excursions are absorbed into the surrounding dwell.
pub fn classify_and_dwell(
    trace: &TelegraphTrace,
    threshold: f64,
    channel: Channel,
    min_persistence: f64,
) -> Result<DwellLists> {
    let x = channel.extract(trace);
    classify_samples(&x, trace.dt, threshold, min_persistence)
}

fn classify_samples(x: &[f64], dt: f64, threshold: f64, min_persistence: f64) -> Result<DwellLists> {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if x.is_empty() || !(threshold >= lo && threshold <= hi) {
        return Err(Error::InvalidArgument(format!(
            "threshold {threshold} outside sample range [{lo}, {hi}]"
        )));
    }
    let m = ((min_persistence / dt).ceil() as usize).max(1);

    // run-length encode
    let mut runs: Vec<(bool, usize)> = Vec::new();
    for &v in x {
        let up = v > threshold;
        match runs.last_mut() {
            Some((s, n)) if *s == up => *n += 1,
            _ => runs.push((up, 1)),
        }
    }
    let mut merged: Vec<(bool, usize)> = Vec::with_capacity(runs.len());
    let mut cur = runs[0];
    for &(s, n) in &runs[1..] {
        if s != cur.0 && n >= m {
            merged.push(cur);
            cur = (s, n);
        } else {
            cur.1 += n;
        }
    }
    merged.push(cur);

    let last = merged.len() - 1;
    let mut out = DwellLists::default();
    for (k, &(up, n)) in merged.iter().enumerate() {
        let d = Dwell {
            duration: n as f64 * dt,
            censored: k == 0 || k == last,
        };
        if up {
            out.state_2.push(d);
        } else {
            out.state_1.push(d);
        }
    }
    Ok(out)
}

/// Non-uniform dwell-time histogram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DwellHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl DwellHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinScheme {
    /// Ratio of consecutive bin edges.
    pub ratio: f64,
    pub min_count: u64,
}

impl Default for BinScheme {
    fn default() -> Self {
        Self { ratio: 2.0, min_count: 5 }
    }
}

/// Places dwell times into geometric bins starting at the shortest dwell.
///
/// Bins are then merged left to right: consecutive bins accumulate until
/// their total reaches `min_count`, and a short remainder at the end joins
/// the last completed group. E.g. counts `(2, 1, 9)` with minimum 5 merge
/// into a single bin of 12, and `(6, 2, 3, 1)` into `(6, 6)`.
pub fn bin_dwells(durations: &[f64], scheme: &BinScheme) -> Result<DwellHistogram> {
    if durations.is_empty() {
        return Err(Error::InsufficientData("no dwells to bin".into()));
    }
    if !(scheme.ratio > 1.0) || scheme.min_count == 0 {
        return Err(Error::InvalidArgument("bin ratio must exceed 1 and min_count be >= 1".into()));
    }
    if durations.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidArgument("dwell times must be positive".into()));
    }
    let min = durations.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = durations.iter().cloned().fold(0.0, f64::max);
    let mut edges = vec![min];
    while *edges.last().unwrap() <= max {
        let e = edges.last().unwrap() * scheme.ratio;
        edges.push(e);
    }
    let nb = edges.len() - 1;
    let mut counts = vec![0u64; nb];
    let lr = scheme.ratio.ln();
    for &d in durations {
        let mut k = (((d / min).ln() / lr).floor().max(0.0) as usize).min(nb - 1);
        // guard against rounding at the edges
        while k + 1 < nb && d >= edges[k + 1] {
            k += 1;
        }
        while k > 0 && d < edges[k] {
            k -= 1;
        }
        counts[k] += 1;
    }
    Ok(merge_bins(&edges, &counts, scheme.min_count))
}

fn merge_bins(edges: &[f64], counts: &[u64], min_count: u64) -> DwellHistogram {
    let mut out_edges = vec![edges[0]];
    let mut out_counts: Vec<u64> = Vec::new();
    let mut acc = 0;
    for (k, &c) in counts.iter().enumerate() {
        acc += c;
        if acc >= min_count {
            out_counts.push(acc);
            out_edges.push(edges[k + 1]);
            acc = 0;
        }
    }
    let end = *edges.last().unwrap();
    if out_counts.is_empty() {
        out_counts.push(acc);
        out_edges.push(end);
    } else if *out_edges.last().unwrap() < end {
        *out_counts.last_mut().unwrap() += acc;
        *out_edges.last_mut().unwrap() = end;
    }
    DwellHistogram {
        bin_edges: out_edges,
        counts: out_counts,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// Exponential maximum likelihood with right-censored boundary dwells.
    #[default]
    Mle,
    /// Weighted least squares of log density against bin position.
    HistogramLsq,
}

/// Characteristic switching time of an exponential dwell distribution.
pub fn fit_switching_time(dwells: &[Dwell], mode: FitMode, scheme: &BinScheme) -> Result<f64> {
    let complete: Vec<f64> = dwells.iter().filter(|d| !d.censored).map(|d| d.duration).collect();
    match mode {
        FitMode::Mle => {
            if complete.is_empty() {
                return Err(Error::InsufficientData("no complete dwells".into()));
            }
            let total: f64 = dwells.iter().map(|d| d.duration).sum();
            Ok(total / complete.len() as f64)
        }
        FitMode::HistogramLsq => {
            if complete.is_empty() {
                return Err(Error::InsufficientData("no complete dwells".into()));
            }
            let hist = bin_dwells(&complete, scheme)?;
            fit_histogram(&hist)
        }
    }
}

/// Each bin is represented by the point where the exponential equals its
/// bin average; those points depend on tau, so the fit is iterated.
fn fit_histogram(hist: &DwellHistogram) -> Result<f64> {
    let occupied: Vec<(f64, f64, f64)> = hist
        .counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| (hist.bin_edges[k], hist.bin_edges[k + 1], c as f64))
        .collect();
    if occupied.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "histogram fit needs 2 occupied bins, got {}",
            occupied.len()
        )));
    }
    let n: f64 = occupied.iter().map(|b| b.2).sum();
    let ys: Vec<f64> = occupied.iter().map(|&(a, b, c)| (c / (n * (b - a))).ln()).collect();
    let mut xs: Vec<f64> = occupied.iter().map(|&(a, b, _)| 0.5 * (a + b)).collect();
    let mut tau = f64::NAN;
    for _ in 0..100 {
        let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((x, y), b) in xs.iter().zip(&ys).zip(&occupied) {
            let w = b.2;
            sw += w;
            sx += w * x;
            sy += w * y;
            sxx += w * x * x;
            sxy += w * x * y;
        }
        let slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
        if !(slope < 0.0) {
            return Err(Error::Undefined("dwell histogram does not decay".into()));
        }
        let new_tau = -1.0 / slope;
        let done = (new_tau - tau).abs() <= 1e-12 * new_tau;
        tau = new_tau;
        if done {
            break;
        }
        for (x, &(a, b, _)) in xs.iter_mut().zip(&occupied) {
            let (u, v) = (a / tau, b / tau);
            // bin average of exp(-t/tau), relative to exp(-a/tau)
            let avg = (-(-(v - u)).exp_m1()) / (v - u);
            *x = a - tau * avg.ln();
        }
    }
    Ok(tau)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Censoring {
    Measured,
    FloorAt1OverTauM,
}

impl Censoring {
    pub fn as_str(&self) -> &'static str {
        match self {
            Censoring::Measured => "measured",
            Censoring::FloorAt1OverTauM => "floor_at_1_over_tau_m",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdrOptions {
    #[serde(default)]
    pub channel: ChannelChoice,
    #[serde(default)]
    pub fit_mode: FitMode,
    #[serde(default)]
    pub bins: BinScheme,
    /// Filter cutoff [Hz] setting the de-bounce time; taken from the trace
    /// metadata when absent.
    #[serde(default)]
    pub filter_cutoff: Option<f64>,
    /// Rates extracted elsewhere (e.g. at neighbouring drive points) that may
    /// replace a rate below `1/tau_m`. The smallest one above `1/tau_m` is
    /// used; without any, the rate is floored at `1/tau_m`.
    #[serde(default)]
    pub floor_candidates: Vec<f64>,
}

impl Default for AdrOptions {
    fn default() -> Self {
        Self {
            channel: ChannelChoice::Auto,
            fit_mode: FitMode::Mle,
            bins: BinScheme::default(),
            filter_cutoff: None,
            floor_candidates: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdrEstimate {
    pub rates: RatePair,
    pub adr: f64,
    /// For `gamma_12` and `gamma_21`.
    pub censoring: [Censoring; 2],
    pub channel: Channel,
    pub threshold: f64,
    pub tau_m: f64,
    /// Rates before the censoring rule.
    pub raw_rates: (f64, f64),
    /// Complete and censored dwells per state.
    pub dwell_counts: [(usize, usize); 2],
    /// Histograms of complete dwells per state.
    pub histograms: [Option<DwellHistogram>; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub enum AdrOutcome {
    Bistable(Box<AdrEstimate>),
    /// No bimodal channel.
    Monostable,
}

impl AdrOutcome {
    pub fn estimate(&self) -> Option<&AdrEstimate> {
        match self {
            AdrOutcome::Bistable(e) => Some(e),
            AdrOutcome::Monostable => None,
        }
    }
}

/// Full pipeline from traces to switching rates and the asymptotic decay rate.
pub fn estimate_adr(traces: &[TelegraphTrace], options: &AdrOptions) -> Result<AdrOutcome> {
    if traces.is_empty() {
        return Err(Error::InsufficientData("no traces".into()));
    }
    let dt = traces[0].dt;
    if traces.iter().any(|t| t.dt != dt || t.i.len() != t.q.len() || t.is_empty()) {
        return Err(Error::InvalidArgument(
            "traces must be nonempty, share dt and have equal I/Q lengths".into(),
        ));
    }
    let cutoff = options
        .filter_cutoff
        .or(traces[0].meta.filter_cutoff)
        .ok_or_else(|| Error::InvalidArgument("filter cutoff unknown".into()))?;
    let persistence = PERSISTENCE_TIME_CONSTANTS / (2.0 * std::f64::consts::PI * cutoff);

    let data: Vec<Homodyne> = traces.par_iter().map(Homodyne::of).collect();
    let Some((channel, threshold)) = select_from(&data, options.channel)? else {
        return Ok(AdrOutcome::Monostable);
    };

    let per_trace: Vec<DwellLists> = data
        .par_iter()
        .map(|h| {
            let x = h.channel(channel);
            let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            // a trace lying entirely on one side is one censored dwell
            if threshold < lo || threshold > hi {
                let d = Dwell { duration: x.len() as f64 * h.dt, censored: true };
                let mut out = DwellLists::default();
                if threshold < lo {
                    out.state_2.push(d);
                } else {
                    out.state_1.push(d);
                }
                Ok(out)
            } else {
                classify_samples(x, h.dt, threshold, persistence)
            }
        })
        .collect::<Result<_>>()?;
    drop(data);
    let mut dwells = DwellLists::default();
    for d in per_trace {
        dwells.extend(d);
    }

    let tau_m = traces.iter().map(|t| t.duration()).sum::<f64>() / traces.len() as f64;
    let floor = 1.0 / tau_m;
    let substitute = options
        .floor_candidates
        .iter()
        .cloned()
        .filter(|&c| c > floor)
        .fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.min(c))))
        .unwrap_or(floor);

    let mut rates = [0.0; 2];
    let mut raw = [0.0; 2];
    let mut flags = [Censoring::Measured; 2];
    let mut counts = [(0, 0); 2];
    let mut hists = [None, None];
    for (k, list) in [&dwells.state_1, &dwells.state_2].into_iter().enumerate() {
        let complete = list.iter().filter(|d| !d.censored).count();
        let total: f64 = list.iter().map(|d| d.duration).sum();
        counts[k] = (complete, list.len() - complete);
        let mle_rate = if total > 0.0 { complete as f64 / total } else { 0.0 };
        raw[k] = match options.fit_mode {
            FitMode::Mle => mle_rate,
            FitMode::HistogramLsq => fit_switching_time(list, FitMode::HistogramLsq, &options.bins)
                .map(|t| 1.0 / t)
                .unwrap_or(mle_rate),
        };
        let durations: Vec<f64> = list.iter().filter(|d| !d.censored).map(|d| d.duration).collect();
        hists[k] = bin_dwells(&durations, &options.bins).ok();
        if raw[k] < floor {
            rates[k] = substitute;
            flags[k] = Censoring::FloorAt1OverTauM;
        } else {
            rates[k] = raw[k];
        }
    }
    let rates = RatePair {
        gamma_12: rates[0],
        gamma_21: rates[1],
    };
    Ok(AdrOutcome::Bistable(Box::new(AdrEstimate {
        rates,
        adr: super::adr_from_rates(rates),
        censoring: flags,
        channel,
        threshold,
        tau_m,
        raw_rates: (raw[0], raw[1]),
        dwell_counts: counts,
        histograms: hists,
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telegraph::{simulate_telegraph, TelegraphSpec, TraceMeta};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp, Normal};
    use std::f64::consts::PI;

    fn mixture(w: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Normal::new(0.0, 0.1).unwrap();
        let b = Normal::new(1.0, 0.1).unwrap();
        (0..n)
            .map(|k| if (k as f64) < w * n as f64 { a.sample(&mut rng) } else { b.sample(&mut rng) })
            .collect()
    }

    #[test]
    fn homodyne_conventions() {
        assert_eq!(homodyne_from_iq(0.0, 1.0), (1.0, 0.0));
        let (a, th) = homodyne_from_iq(1.0, 1.0);
        assert!((a - 2f64.sqrt()).abs() < 1e-15 && (th - PI / 4.0).abs() < 1e-15);
        assert_eq!(homodyne_from_iq(-1.0, 0.0), (1.0, -PI / 2.0));
        assert_eq!(homodyne_from_iq(-0.0, -1.0), (1.0, PI));
        assert_eq!(homodyne_from_iq(0.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn unimodal_and_constant_give_none() {
        let x = mixture(1.0, 20_000, 1);
        assert_eq!(detect_bimodality(&x).unwrap(), None);
        assert_eq!(detect_bimodality(&[3.0; 2000]).unwrap(), None);
        assert!(detect_bimodality(&[1.0; 10]).is_err());
    }

    #[test]
    fn balanced_and_skewed_mixtures() {
        let t = detect_bimodality(&mixture(0.5, 20_000, 2)).unwrap().unwrap();
        assert!((t - 0.5).abs() < 0.05, "{t}");
        let t = detect_bimodality(&mixture(0.9, 50_000, 3)).unwrap().unwrap();
        assert!((t - 0.5).abs() < 0.1, "{t}");
    }

    fn trace_from(x: Vec<f64>, dt: f64) -> TelegraphTrace {
        // amplitude channel equals x for x >= 0
        let n = x.len();
        TelegraphTrace {
            dt,
            i: vec![0.0; n],
            q: x,
            truth: None,
            meta: TraceMeta { seed: None, rates: None, filter_cutoff: None },
        }
    }

    #[test]
    fn square_wave_dwells() {
        let half = 50;
        let x: Vec<f64> = (0..1000).map(|k| if (k / half) % 2 == 0 { 1.0 } else { 2.0 }).collect();
        let d = classify_and_dwell(&trace_from(x, 1e-6), 1.5, Channel::Amplitude, 3e-6).unwrap();
        for dw in d.state_1.iter().chain(&d.state_2) {
            assert!((dw.duration - 50e-6).abs() < 1e-15);
        }
        assert_eq!(d.state_1.len() + d.state_2.len(), 20);
        assert!(d.state_1[0].censored && d.state_2.last().unwrap().censored);
        assert_eq!(d.state_1.iter().chain(&d.state_2).filter(|x| x.censored).count(), 2);
    }

    #[test]
    fn constant_trace_is_one_censored_dwell() {
        let d = classify_and_dwell(&trace_from(vec![1.0; 100], 1e-6), 1.0, Channel::Amplitude, 0.0)
            .unwrap();
        assert_eq!(d.state_1.len(), 1);
        assert!(d.state_1[0].censored && (d.state_1[0].duration - 1e-4).abs() < 1e-15);
        assert!(d.state_2.is_empty());
        assert!(classify_and_dwell(&trace_from(vec![1.0; 100], 1e-6), 2.0, Channel::Amplitude, 0.0)
            .is_err());
    }

    #[test]
    fn short_glitches_are_absorbed() {
        let mut x = vec![1.0; 300];
        x[100] = 2.0;
        x[101] = 2.0;
        for v in &mut x[200..] {
            *v = 2.0;
        }
        let d = classify_and_dwell(&trace_from(x, 1.0), 1.5, Channel::Amplitude, 3.0).unwrap();
        assert_eq!(d.state_1, vec![Dwell { duration: 200.0, censored: true }]);
        assert_eq!(d.state_2, vec![Dwell { duration: 100.0, censored: true }]);
    }

    #[test]
    fn boundaries_follow_truth() {
        let spec = TelegraphSpec {
            duration: 0.02,
            dt: 2e-8,
            oversample: 1,
            ..TelegraphSpec::standard(RatePair::new(3e3, 4e3).unwrap(), 5.0, 11)
        };
        let tau_f = spec.filter_time_constant();
        let tr = simulate_telegraph(&spec).unwrap();
        let thr = detect_bimodality(&Channel::Amplitude.extract(&tr)).unwrap().unwrap();
        let d = classify_and_dwell(&tr, thr, Channel::Amplitude, 3.0 * tau_f).unwrap();
        // boundaries from dwell order
        let mut bounds = Vec::new();
        let (mut i1, mut i2) = (0, 0);
        let first_low = Channel::Amplitude.extract(&tr)[0] <= thr;
        let mut low = first_low;
        let mut t = 0.0;
        while i1 < d.state_1.len() || i2 < d.state_2.len() {
            let dw = if low { i1 += 1; d.state_1[i1 - 1] } else { i2 += 1; d.state_2[i2 - 1] };
            t += dw.duration;
            bounds.push(t);
            low = !low;
        }
        bounds.pop();
        let truth = tr.truth.unwrap();
        let raw: Vec<f64> = (1..truth.len())
            .filter(|&k| truth[k] != truth[k - 1])
            .map(|k| k as f64 * spec.dt)
            .collect();
        // excursions shorter than the persistence time are meant to vanish
        let mut true_bounds = Vec::new();
        let mut k = 0;
        while k < raw.len() {
            if k + 1 < raw.len() && raw[k + 1] - raw[k] < 3.0 * tau_f {
                k += 2;
            } else {
                true_bounds.push(raw[k]);
                k += 1;
            }
        }
        assert_eq!(bounds.len(), true_bounds.len());
        for (b, tb) in bounds.iter().zip(&true_bounds) {
            assert!((b - tb).abs() <= 2.0 * tau_f, "{b} vs {tb}");
        }
    }

    #[test]
    fn binning_rules() {
        let h = bin_dwells(&[1e-3; 20], &BinScheme::default()).unwrap();
        assert_eq!(h.counts, vec![20]);
        let h = merge_bins(&[1.0, 2.0, 4.0, 8.0], &[2, 1, 9], 5);
        assert_eq!((h.counts, h.bin_edges), (vec![12], vec![1.0, 8.0]));
        let h = merge_bins(&[1.0, 2.0, 4.0, 8.0, 16.0], &[6, 2, 3, 1], 5);
        assert_eq!((h.counts, h.bin_edges), (vec![6, 6], vec![1.0, 2.0, 16.0]));
    }

    fn exp_sample(mean: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = Exp::new(1.0 / mean).unwrap();
        (0..n).map(|_| e.sample(&mut rng)).collect()
    }

    #[test]
    fn exponential_bins_span_octaves() {
        let h = bin_dwells(&exp_sample(1e-3, 10_000, 5), &BinScheme::default()).unwrap();
        let occ: Vec<usize> = (0..h.counts.len()).filter(|&k| h.counts[k] > 0).collect();
        let span = h.bin_edges[occ.last().unwrap() + 1] / h.bin_edges[occ[0]];
        assert!(span >= 8.0);
        assert!(h.counts.iter().all(|&c| c >= 5));
        assert_eq!(h.total(), 10_000);
    }

    #[test]
    fn fits() {
        let ms = |v: f64| Dwell { duration: v * 1e-3, censored: false };
        let tau = fit_switching_time(&[ms(1.0), ms(1.0), ms(1.0)], FitMode::Mle, &BinScheme::default())
            .unwrap();
        assert!((tau - 1e-3).abs() < 1e-15);
        let d: Vec<Dwell> = exp_sample(1e-3, 10_000, 6).into_iter().map(|v| ms(v * 1e3)).collect();
        let mle = fit_switching_time(&d, FitMode::Mle, &BinScheme::default()).unwrap();
        let lsq = fit_switching_time(&d, FitMode::HistogramLsq, &BinScheme::default()).unwrap();
        assert!((mle / 1e-3 - 1.0).abs() < 0.05, "{mle}");
        assert!((lsq / mle - 1.0).abs() < 0.1, "{lsq} vs {mle}");
        let cens = [Dwell { duration: 1.0, censored: true }];
        assert!(fit_switching_time(&cens, FitMode::Mle, &BinScheme::default()).is_err());
    }

    fn bundle(rates: RatePair, seed: u64) -> Vec<TelegraphTrace> {
        (0..7)
            .map(|k| simulate_telegraph(&TelegraphSpec::standard(rates, 5.0, seed * 100 + k)).unwrap())
            .collect()
    }

    #[test]
    fn recovers_fast_rates() {
        let rates = RatePair::new(600.0, 900.0).unwrap();
        let est = estimate_adr(&bundle(rates, 1), &AdrOptions::default()).unwrap();
        let e = est.estimate().unwrap();
        assert!((e.adr / 1500.0 - 1.0).abs() < 0.1, "{e:?}");
        assert_eq!(e.censoring, [Censoring::Measured; 2]);
    }

    #[test]
    fn slow_rate_is_floored() {
        let rates = RatePair::new(1.0, 10.0).unwrap();
        let traces: Vec<_> = (0..7)
            .map(|k| {
                simulate_telegraph(&TelegraphSpec {
                    initial_state: Some(2),
                    ..TelegraphSpec::standard(rates, 5.0, 700 + k)
                })
                .unwrap()
            })
            .collect();
        let e = estimate_adr(&traces, &AdrOptions::default()).unwrap();
        let e = e.estimate().unwrap();
        assert_eq!(e.censoring[0], Censoring::FloorAt1OverTauM);
        assert!((e.rates.gamma_12 - 1.0 / 0.3).abs() < 1e-9);
    }

    #[test]
    fn monostable_outcome() {
        let spec = TelegraphSpec {
            duration: 0.01,
            initial_state: Some(1),
            ..TelegraphSpec::standard(RatePair::new(0.0, 1.0).unwrap(), 5.0, 9)
        };
        let tr = simulate_telegraph(&spec).unwrap();
        assert_eq!(estimate_adr(&[tr], &AdrOptions::default()).unwrap(), AdrOutcome::Monostable);
    }
}

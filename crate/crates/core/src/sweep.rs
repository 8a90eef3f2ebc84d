//! Measurement protocols over drive frequency and power: transmission maps,
//! directional power sweeps with continuation, hysteresis and two-seed
//! difference maps, and pulse-initialized single points.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mft::{linear_steady_state, run_with_tail, Attractor, IntegratorConfig, SteadyStateResult};
use crate::model::{DriveSpec, Envelope, LatticeParams, MeanFieldState};
use crate::observables::{g2_of_result, output_magnitude, transmission_db, G2Estimator};

/// |difference| above which a cell counts as hysteretic [dB].
pub const HYSTERESIS_THRESHOLD_DB: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    FreshStart,
    SweepUp,
    SweepDown,
    SeedVacuum,
    SeedExcited,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::FreshStart => "fresh_start",
            Protocol::SweepUp => "sweep_up",
            Protocol::SweepDown => "sweep_down",
            Protocol::SeedVacuum => "seed_vacuum",
            Protocol::SeedExcited => "seed_excited",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fresh_start" => Protocol::FreshStart,
            "sweep_up" => Protocol::SweepUp,
            "sweep_down" => Protocol::SweepDown,
            "seed_vacuum" => Protocol::SeedVacuum,
            "seed_excited" => Protocol::SeedExcited,
            other => return Err(Error::Parse(format!("unknown protocol {other:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

/// Outcome class of one cell; `Diverged` marks a failed integration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellClass {
    FixedPoint,
    NonStationary,
    Diverged,
}

impl CellClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellClass::FixedPoint => "fixed_point",
            CellClass::NonStationary => "non_stationary",
            CellClass::Diverged => "diverged",
        }
    }
}

impl From<Attractor> for CellClass {
    fn from(a: Attractor) -> Self {
        match a {
            Attractor::FixedPoint => CellClass::FixedPoint,
            Attractor::NonStationary => CellClass::NonStationary,
        }
    }
}

impl std::str::FromStr for CellClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fixed_point" => CellClass::FixedPoint,
            "non_stationary" => CellClass::NonStationary,
            "diverged" => CellClass::Diverged,
            other => return Err(Error::Parse(format!("unknown classification {other:?}"))),
        })
    }
}

/// Summary of one (frequency, power) point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub epsilon: f64,
    pub class: CellClass,
    /// `|alpha_out|` as used for transmission; NaN for diverged cells.
    pub output_magnitude: f64,
    /// Relative to the grid reference; NaN for diverged cells.
    pub transmission_db: f64,
    /// g2 with the configured estimator, `None` when undefined.
    pub g2: Option<f64>,
    /// Fourth-moment g2, reported alongside.
    pub g2_fourth: Option<f64>,
}

impl CellSummary {
    fn diverged(epsilon: f64) -> Self {
        Self {
            epsilon,
            class: CellClass::Diverged,
            output_magnitude: f64::NAN,
            transmission_db: f64::NAN,
            g2: None,
            g2_fourth: None,
        }
    }

    /// `|alpha_out| / |eps|`, the quantity compared across powers; 0 without drive.
    pub fn response(&self) -> f64 {
        if self.epsilon > 0.0 {
            self.output_magnitude / self.epsilon
        } else {
            0.0
        }
    }
}

/// Settings shared by every sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub g2_estimator: G2Estimator,
    /// Seed of the excited-state phases.
    #[serde(default)]
    pub seed: u64,
    /// Excited seed amplitude over the largest linear-response amplitude.
    #[serde(default = "default_seed_scale")]
    pub seed_scale: f64,
}

fn default_seed_scale() -> f64 {
    10.0
}

impl SweepSettings {
    pub fn for_params(params: &LatticeParams) -> Self {
        Self {
            integrator: IntegratorConfig::for_params(params),
            g2_estimator: G2Estimator::default(),
            seed: 0,
            seed_scale: default_seed_scale(),
        }
    }
}

/// Frequency x power grid of cell summaries.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub freqs: Vec<f64>,
    pub powers: Vec<f64>,
    /// Row-major: `cells[f * powers.len() + p]`.
    pub cells: Vec<CellSummary>,
    pub protocol: Protocol,
    /// Response `|alpha_out|/|eps|` mapped to 0 dB.
    pub reference: f64,
}

impl SweepGrid {
    pub fn cell(&self, f: usize, p: usize) -> &CellSummary {
        &self.cells[f * self.powers.len() + p]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.freqs.len(), self.powers.len())
    }

    /// Row of the lowest power, across all frequencies.
    pub fn lowest_power_index(&self) -> usize {
        lowest_index(&self.powers)
    }

    /// Largest response in the lowest-power row; 1 if that row is empty or zero.
    pub fn low_power_reference(&self) -> f64 {
        let p = self.lowest_power_index();
        let r = (0..self.freqs.len())
            .map(|f| self.cell(f, p).response())
            .filter(|r| r.is_finite())
            .fold(0.0, f64::max);
        if r > 0.0 { r } else { 1.0 }
    }

    /// Recomputes every transmission value against `reference`.
    pub fn normalize(&mut self, reference: f64) -> Result<()> {
        for c in &mut self.cells {
            c.transmission_db = if c.class == CellClass::Diverged {
                f64::NAN
            } else {
                transmission_db(c.response(), reference)?
            };
        }
        self.reference = reference;
        Ok(())
    }
}

fn lowest_index(powers: &[f64]) -> usize {
    (0..powers.len())
        .min_by(|&a, &b| powers[a].total_cmp(&powers[b]))
        .unwrap_or(0)
}

fn check_axes(freqs: &[f64], powers: &[f64]) -> Result<()> {
    if freqs.is_empty() || powers.is_empty() {
        return Err(Error::InvalidArgument("frequency and power axes must be nonempty".into()));
    }
    if freqs.iter().chain(powers).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("axes must be finite".into()));
    }
    if powers.iter().any(|&p| p < 0.0) {
        return Err(Error::InvalidArgument("drive amplitudes must be >= 0".into()));
    }
    let inc = powers.windows(2).all(|w| w[1] > w[0]);
    let dec = powers.windows(2).all(|w| w[1] < w[0]);
    if !inc && !dec {
        return Err(Error::InvalidArgument("power axis must be strictly monotone".into()));
    }
    Ok(())
}

/// `n` amplitudes log-spaced from `lo` to `hi`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

fn summarize(result: &SteadyStateResult, epsilon: f64, estimator: G2Estimator) -> CellSummary {
    let g2 = |e| g2_of_result(result, e).ok();
    CellSummary {
        epsilon,
        class: result.classification.into(),
        output_magnitude: output_magnitude(result),
        transmission_db: f64::NAN,
        g2: g2(estimator),
        g2_fourth: g2(G2Estimator::FourthMoment),
    }
}

/// Runs one cell; integration failures become a diverged cell.
fn run_cell(
    params: &LatticeParams,
    drive: &DriveSpec,
    init: &MeanFieldState,
    settings: &SweepSettings,
) -> Result<(CellSummary, Option<MeanFieldState>)> {
    let eps = drive.epsilon.norm();
    match run_with_tail(params, drive, init, &settings.integrator) {
        Ok((r, _)) => {
            let s = summarize(&r, eps, settings.g2_estimator);
            Ok((s, Some(r.final_state)))
        }
        Err(Error::Diverged { .. } | Error::StepUnderflow { .. } | Error::NonFinite) => {
            Ok((CellSummary::diverged(eps), None))
        }
        Err(e) => Err(e),
    }
}

/// Highly excited seed: uniform `|alpha_j|` equal to `seed_scale` times the
/// largest linear-response cavity amplitude at this drive, random phases
/// from the seeded stream `stream`, qubits at rest.
pub fn excited_seed(
    params: &LatticeParams,
    drive: &DriveSpec,
    settings: &SweepSettings,
    stream: u64,
) -> Result<MeanFieldState> {
    let lin = linear_steady_state(&params.linear(), drive)?;
    let peak = lin.alpha.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let amp = settings.seed_scale * peak;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    rng.set_stream(stream);
    let n = params.n_sites;
    let alpha = (0..n)
        .map(|_| C64::from_polar(amp, rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    Ok(MeanFieldState {
        alpha,
        beta: vec![C64::default(); n],
    })
}

/// One steady-state run per cell, seeded according to `protocol`.
///
/// `fresh_start` and `seed_vacuum` start every cell from vacuum,
/// `seed_excited` from [`excited_seed`]. Cells run in parallel.
pub fn frequency_power_map(
    params: &LatticeParams,
    freqs: &[f64],
    powers: &[f64],
    protocol: Protocol,
    settings: &SweepSettings,
) -> Result<SweepGrid> {
    check_axes(freqs, powers)?;
    let params = params.clone().validate()?;
    settings.integrator.validate()?;
    if matches!(protocol, Protocol::SweepUp | Protocol::SweepDown) {
        return Err(Error::InvalidArgument(
            "sweep protocols need power_sweep or hysteresis_map".into(),
        ));
    }
    let np = powers.len();
    let cells = (0..freqs.len() * np)
        .into_par_iter()
        .map(|idx| {
            let drive = DriveSpec::constant(freqs[idx / np], powers[idx % np]);
            let init = match protocol {
                Protocol::SeedExcited => excited_seed(&params, &drive, settings, idx as u64)?,
                _ => MeanFieldState::vacuum(params.n_sites),
            };
            run_cell(&params, &drive, &init, settings).map(|(c, _)| c)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut grid = SweepGrid {
        freqs: freqs.to_vec(),
        powers: powers.to_vec(),
        cells,
        protocol,
        reference: 1.0,
    };
    let r = grid.low_power_reference();
    grid.normalize(r)?;
    Ok(grid)
}

/// Sequential power sweep at one frequency with state continuation.
///
/// The first step starts from vacuum (up) or from the excited seed (down);
/// each later step starts from the previous final state. After a divergence
/// the remaining steps are flagged without being run. Transmission is
/// relative to the response at the lowest power of the sweep.
pub fn power_sweep(
    params: &LatticeParams,
    omega_p: f64,
    powers: &[f64],
    direction: Direction,
    settings: &SweepSettings,
) -> Result<Vec<CellSummary>> {
    check_axes(&[omega_p], powers)?;
    let ok = match direction {
        Direction::Up => powers.windows(2).all(|w| w[1] > w[0]),
        Direction::Down => powers.windows(2).all(|w| w[1] < w[0]),
    };
    if !ok {
        return Err(Error::InvalidArgument(format!(
            "powers not monotone in the {direction:?} direction"
        )));
    }
    let params = params.clone().validate()?;
    settings.integrator.validate()?;
    let mut out = Vec::with_capacity(powers.len());
    let first = DriveSpec::constant(omega_p, powers[0]);
    let mut state = Some(match direction {
        Direction::Up => MeanFieldState::vacuum(params.n_sites),
        Direction::Down => excited_seed(&params, &first, settings, 0)?,
    });
    for &eps in powers {
        let Some(init) = state.take() else {
            out.push(CellSummary::diverged(eps));
            continue;
        };
        let (cell, next) = run_cell(&params, &first.with_epsilon(eps), &init, settings)?;
        out.push(cell);
        state = next;
    }
    let low = lowest_index(powers);
    let reference = if out[low].response() > 0.0 { out[low].response() } else { 1.0 };
    for c in &mut out {
        if c.class != CellClass::Diverged {
            c.transmission_db = transmission_db(c.response(), reference)?;
        }
    }
    Ok(out)
}

/// Pair of grids on identical axes and their cellwise transmission difference.
#[derive(Clone, Debug, PartialEq)]
pub struct HysteresisMap {
    pub grid_up: SweepGrid,
    pub grid_down: SweepGrid,
    /// `grid_up - grid_down` in dB; NaN where either cell diverged.
    pub difference: Vec<f64>,
}

impl HysteresisMap {
    fn from_grids(grid_up: SweepGrid, grid_down: SweepGrid) -> Self {
        let difference = grid_up
            .cells
            .iter()
            .zip(&grid_down.cells)
            .map(|(a, b)| a.transmission_db - b.transmission_db)
            .collect();
        Self { grid_up, grid_down, difference }
    }

    pub fn difference_at(&self, f: usize, p: usize) -> f64 {
        self.difference[f * self.grid_up.powers.len() + p]
    }

    /// Cells with `|difference| > threshold_db`, as `(freq index, power index)`.
    pub fn hysteretic_cells(&self, threshold_db: f64) -> Vec<(usize, usize)> {
        let np = self.grid_up.powers.len();
        self.difference
            .iter()
            .enumerate()
            .filter(|(_, d)| d.abs() > threshold_db)
            .map(|(k, _)| (k / np, k % np))
            .collect()
    }
}

fn normalize_pair(mut a: SweepGrid, mut b: SweepGrid) -> Result<HysteresisMap> {
    let r = a.low_power_reference();
    a.normalize(r)?;
    b.normalize(r)?;
    Ok(HysteresisMap::from_grids(a, b))
}

/// Up and down continuation sweeps at every frequency.
///
/// Both grids share the axes as given (`powers` increasing) and the
/// reference of the up grid.
pub fn hysteresis_map(
    params: &LatticeParams,
    freqs: &[f64],
    powers: &[f64],
    settings: &SweepSettings,
) -> Result<HysteresisMap> {
    check_axes(freqs, powers)?;
    if !powers.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument("hysteresis map needs increasing powers".into()));
    }
    let down_powers: Vec<f64> = powers.iter().rev().cloned().collect();
    let rows = freqs
        .par_iter()
        .map(|&w| {
            let up = power_sweep(params, w, powers, Direction::Up, settings)?;
            let mut down = power_sweep(params, w, &down_powers, Direction::Down, settings)?;
            down.reverse();
            Ok((up, down))
        })
        .collect::<Result<Vec<_>>>()?;
    let (up, down): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let grid = |cells: Vec<Vec<CellSummary>>, protocol| SweepGrid {
        freqs: freqs.to_vec(),
        powers: powers.to_vec(),
        cells: cells.into_iter().flatten().collect(),
        protocol,
        reference: 1.0,
    };
    normalize_pair(grid(up, Protocol::SweepUp), grid(down, Protocol::SweepDown))
}

/// Vacuum-seeded and excited-seeded runs of every cell; the vacuum grid
/// takes the `grid_up` slot and sets the reference.
pub fn two_seed_map(
    params: &LatticeParams,
    freqs: &[f64],
    powers: &[f64],
    settings: &SweepSettings,
) -> Result<HysteresisMap> {
    let a = frequency_power_map(params, freqs, powers, Protocol::SeedVacuum, settings)?;
    let b = frequency_power_map(params, freqs, powers, Protocol::SeedExcited, settings)?;
    normalize_pair(a, b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    /// Approach the hold amplitude from above, preparing the high-power state.
    Up,
    /// Approach it from zero, preparing the low-power state.
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseShape {
    pub ramp_time: f64,
    /// Starting amplitude of the up pulse over the hold amplitude.
    pub peak_factor: f64,
}

impl PulseShape {
    pub fn for_params(params: &LatticeParams) -> Self {
        Self {
            ramp_time: 100.0 / params.kappa,
            peak_factor: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseOutcome {
    pub result: SteadyStateResult,
    pub summary: CellSummary,
}

/// Prepares a state with an up or down pulse, holds the drive at `xi` for
/// the transient, then averages.
pub fn pulse_initialized_point(
    params: &LatticeParams,
    omega_p: f64,
    xi: f64,
    pulse: PulseKind,
    shape: &PulseShape,
    settings: &SweepSettings,
) -> Result<PulseOutcome> {
    let params = params.clone().validate()?;
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(Error::InvalidArgument(format!("hold amplitude must be >= 0, got {xi}")));
    }
    if !(shape.ramp_time >= 0.0 && shape.peak_factor >= 1.0) {
        return Err(Error::InvalidArgument("bad pulse shape".into()));
    }
    let envelope = match pulse {
        PulseKind::Up => Envelope::UpPulse {
            peak_factor: shape.peak_factor,
            ramp_time: shape.ramp_time,
        },
        PulseKind::Down => Envelope::DownPulse { ramp_time: shape.ramp_time },
    };
    let drive = DriveSpec {
        omega_p,
        epsilon: C64::from(xi),
        envelope,
    };
    let mut config = settings.integrator.clone();
    config.t_transient += shape.ramp_time;
    let (result, _) = run_with_tail(&params, &drive, &MeanFieldState::vacuum(params.n_sites), &config)?;
    let summary = summarize(&result, xi, settings.g2_estimator);
    Ok(PulseOutcome { result, summary })
}

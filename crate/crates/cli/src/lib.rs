//! `drivenchain` command-line driver.
//!
//! Every run writes its artifacts and a `manifest-<command>.toml` into the
//! output directory (`--out-dir`, else `$DRIVENCHAIN_OUT_DIR`, else
//! `drivenchain-out`). Exit codes: 0 success, 1 usage, 2 configuration or
//! input, 3 numerical failure.

pub mod svg;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use drivenchain::config::RunConfig;
use drivenchain::io::{self, Table};
use drivenchain::mft::{integrate, linear_steady_state};
use drivenchain::model::{to_hz, DriveSpec, Envelope, LatticeParams, MeanFieldState};
use drivenchain::observables::chain_eigenmodes;
use drivenchain::sweep::{
    frequency_power_map, hysteresis_map, power_sweep, pulse_initialized_point, two_seed_map, Direction,
    Protocol, PulseKind, SweepGrid,
};
use drivenchain::telegraph::{estimate_adr, select_channel, simulate_telegraph, TelegraphTrace};
use drivenchain::Error;

pub const OUT_DIR_ENV: &str = "DRIVENCHAIN_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "drivenchain-out";

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "drivenchain", version, about = "Driven-dissipative cavity-qubit chain simulator")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; overrides $DRIVENCHAIN_OUT_DIR.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
struct Common {
    /// Run configuration (TOML). Without one, the 72-site device defaults apply.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed-step RK4 at dt_max instead of the adaptive integrator.
    #[arg(long)]
    fixed_step: bool,
}

#[derive(Debug, Args, Clone)]
struct Point {
    /// Drive frequency [Hz].
    #[arg(long)]
    freq_hz: Option<f64>,
    /// Drive amplitude [rad/s].
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MapProtocol {
    FreshStart,
    SeedVacuum,
    SeedExcited,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DirectionArg {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PulseArg {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Binary,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transmission map over the configured frequency and power axes.
    Map {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        protocol: Option<MapProtocol>,
    },
    /// Power sweep with continuation at one frequency.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        freq_hz: Option<f64>,
        #[arg(long, value_enum, default_value = "up")]
        direction: DirectionArg,
    },
    /// Up and down sweeps and their transmission difference.
    Hysteresis {
        #[command(flatten)]
        common: Common,
    },
    /// Vacuum- and excited-seeded maps and their transmission difference.
    TwoSeed {
        #[command(flatten)]
        common: Common,
    },
    /// Pulse-prepared steady state at one drive point.
    Pulse {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: Point,
        #[arg(long, value_enum)]
        pulse: Option<PulseArg>,
        /// Also write the full trajectory of the run.
        #[arg(long)]
        dump_trajectory: bool,
        #[arg(long, value_enum, default_value = "binary")]
        format: Format,
    },
    /// Normal modes of the bare chain.
    Eigenmodes {
        #[command(flatten)]
        common: Common,
    },
    /// Synthetic telegraph traces from the [analysis] recipe.
    TelegraphGen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        traces: Option<usize>,
        #[arg(long, value_enum, default_value = "binary")]
        format: Format,
    },
    /// Switching rates and asymptotic decay rate from a bundle of traces.
    Adr {
        #[command(flatten)]
        common: Common,
        /// Trace files (text or binary).
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
    /// SVG rendering of a map, difference map or trace file.
    Plot {
        input: PathBuf,
        /// Output file; defaults to `<input stem>.svg` in the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Loads and checks a configuration file.
    ValidateConfig {
        config: PathBuf,
    },
}

/// Failure with its exit code and a one-line message.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParams(_)
            | Error::InvalidConfig(_)
            | Error::InvalidArgument(_)
            | Error::Parse(_)
            | Error::Io(_) => EXIT_CONFIG,
            Error::ShapeMismatch { .. }
            | Error::NonFinite
            | Error::Diverged { .. }
            | Error::StepUnderflow { .. }
            | Error::Singular
            | Error::InsufficientData(_)
            | Error::Undefined(_) => EXIT_NUMERIC,
        };
        Self { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Record of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub format: String,
    pub command: Vec<String>,
    /// Digest of the resolved configuration, written alongside as `config-<command>.toml`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
    pub seed: u64,
    /// Files read by the run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<Artifact>,
    pub artifacts: Vec<Artifact>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

/// Collects artifacts as they are written.
struct Output {
    dir: PathBuf,
    inputs: Vec<Artifact>,
    artifacts: Vec<Artifact>,
}

impl Output {
    fn new(dir: PathBuf) -> CliResult<Self> {
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir, inputs: Vec::new(), artifacts: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
        self.artifacts.retain(|a| a.path != name);
        self.artifacts.push(Artifact { path: name.to_string(), sha256: io::sha256_hex(bytes) });
        Ok(path)
    }

    fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(Artifact {
            path: path.display().to_string(),
            sha256: io::sha256_hex(bytes),
        });
    }

    fn finish(self, command: &str, argv: &[String], config: Option<&RunConfig>, seed: u64) -> CliResult<()> {
        let mut out = self;
        let config_sha256 = match config {
            Some(c) => {
                let resolved = c.to_toml_string()?;
                out.write(&format!("config-{command}.toml"), resolved.as_bytes())?;
                Some(io::sha256_hex(resolved.as_bytes()))
            }
            None => None,
        };
        let manifest = RunManifest {
            format: format!("drivenchain manifest v{}", io::FORMAT_VERSION),
            command: argv.to_vec(),
            config_sha256,
            seed,
            inputs: out.inputs,
            artifacts: out.artifacts,
        };
        let text = toml::to_string(&manifest).map_err(|e| CliError::config(e.to_string()))?;
        let path = out.dir.join(format!("manifest-{command}.toml"));
        std::fs::write(&path, text)
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
    }
}

fn load_config(common: &Common) -> CliResult<RunConfig> {
    let mut c = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::for_params(&LatticeParams::paper_default()),
    };
    if let Some(s) = common.seed {
        c.sweep.seed = s;
        c.analysis.seed = s;
    }
    if common.fixed_step {
        c.sweep.fixed_step = true;
    }
    Ok(c)
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Parses and runs; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let words: Vec<String> = argv.iter().skip(1).map(|s| s.to_string_lossy().into_owned()).collect();
    let jobs = cli.jobs;
    let out = out_dir(cli.out_dir);
    let work = move || execute(cli.command, &words, out);
    let result = match jobs {
        Some(0) => Err(CliError { code: EXIT_USAGE, message: "--jobs must be at least 1".into() }),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(e) => Err(CliError { code: EXIT_NUMERIC, message: e.to_string() }),
        },
        None => work(),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.message.replace('\n', " ");
            eprintln!("drivenchain: error: {msg}");
            e.code
        }
    }
}

fn execute(command: Command, argv: &[String], dir: PathBuf) -> CliResult<()> {
    match command {
        Command::ValidateConfig { config } => {
            let c = RunConfig::load(&config)?;
            let p = c.lattice_params()?;
            c.sweep_settings(&p)?;
            let has = |b: bool| if b { "yes" } else { "no" };
            let f = c.freqs();
            let w = c.powers();
            if let (Err(e), true) = (&f, c.sweep.freqs_hz.is_some() || c.sweep.freq_points.is_some()) {
                return Err(CliError::config(e.to_string()));
            }
            if let (Err(e), true) = (&w, c.sweep.epsilons.is_some() || c.sweep.power_points.is_some()) {
                return Err(CliError::config(e.to_string()));
            }
            c.telegraph_spec(0)?;
            println!(
                "{}: ok (sites: {}, frequency axis: {}, power axis: {})",
                config.display(),
                p.n_sites,
                has(f.is_ok()),
                has(w.is_ok())
            );
            Ok(())
        }
        Command::Map { common, protocol } => {
            let mut c = load_config(&common)?;
            if let Some(pr) = protocol {
                c.sweep.protocol = Some(match pr {
                    MapProtocol::FreshStart => Protocol::FreshStart,
                    MapProtocol::SeedVacuum => Protocol::SeedVacuum,
                    MapProtocol::SeedExcited => Protocol::SeedExcited,
                });
            }
            let p = c.lattice_params()?;
            let s = c.sweep_settings(&p)?;
            let grid = frequency_power_map(&p, &c.freqs()?, &c.powers()?, c.protocol(), &s)?;
            let mut out = Output::new(dir)?;
            out.write("map.txt", io::map_table(&grid, &io::params_digest(&p)).to_text().as_bytes())?;
            out.finish("map", argv, Some(&c), s.seed)
        }
        Command::Sweep { common, freq_hz, direction } => {
            let mut c = load_config(&common)?;
            if freq_hz.is_some() {
                c.drive.freq_hz = freq_hz;
            }
            let p = c.lattice_params()?;
            let s = c.sweep_settings(&p)?;
            let nu = c.drive.freq_hz.ok_or_else(|| CliError::config("[drive] needs `freq_hz`"))?;
            let omega = drivenchain::model::hz(nu);
            let mut powers = c.powers()?;
            powers.sort_by(f64::total_cmp);
            let (dir_, protocol) = match direction {
                DirectionArg::Up => (Direction::Up, Protocol::SweepUp),
                DirectionArg::Down => {
                    powers.reverse();
                    (Direction::Down, Protocol::SweepDown)
                }
            };
            let cells = power_sweep(&p, omega, &powers, dir_, &s)?;
            let reference = cells
                .iter()
                .min_by(|a, b| a.epsilon.total_cmp(&b.epsilon))
                .map(|c| c.response())
                .filter(|r| *r > 0.0)
                .unwrap_or(1.0);
            let grid = SweepGrid { freqs: vec![omega], powers, cells, protocol, reference };
            let mut out = Output::new(dir)?;
            out.write("sweep.txt", io::map_table(&grid, &io::params_digest(&p)).to_text().as_bytes())?;
            out.finish("sweep", argv, Some(&c), s.seed)
        }
        Command::Hysteresis { common } => difference_map(common, argv, dir, false),
        Command::TwoSeed { common } => difference_map(common, argv, dir, true),
        Command::Pulse { common, point, pulse, dump_trajectory, format } => {
            let mut c = load_config(&common)?;
            if point.freq_hz.is_some() {
                c.drive.freq_hz = point.freq_hz;
            }
            if point.epsilon.is_some() {
                c.drive.epsilon = point.epsilon;
            }
            if let Some(k) = pulse {
                c.drive.pulse = Some(match k {
                    PulseArg::Up => PulseKind::Up,
                    PulseArg::Down => PulseKind::Down,
                });
            }
            let p = c.lattice_params()?;
            let s = c.sweep_settings(&p)?;
            let (omega, eps) = c.drive_point()?;
            let (kind, shape) = c.pulse(&p);
            let outcome = pulse_initialized_point(&p, omega, eps, kind, &shape, &s)?;
            let lin = linear_steady_state(&p.linear(), &DriveSpec::constant(omega, eps))?;
            let lin_mag = lin.alpha[p.output_site - 1].norm();
            let sm = &outcome.summary;
            let mut t = Table::new("pulse", &[]);
            t.set("params_sha256", io::params_digest(&p));
            t.set("pulse", if kind == PulseKind::Up { "up" } else { "down" });
            t.set("ramp_time_s", io::fmt_f64(shape.ramp_time));
            t.set("peak_factor", io::fmt_f64(shape.peak_factor));
            t.set("freq_Hz", io::fmt_f64(to_hz(omega)));
            t.set("epsilon", io::fmt_f64(eps));
            t.set("classification", sm.class.as_str());
            t.set("output_magnitude", io::fmt_f64(sm.output_magnitude));
            let rel = if lin_mag > 0.0 && sm.output_magnitude > 0.0 {
                20.0 * (sm.output_magnitude / lin_mag).log10()
            } else {
                f64::NAN
            };
            t.set("transmission_vs_linear_dB", io::fmt_f64(rel));
            t.set("g2", sm.g2.map_or("-".into(), io::fmt_f64));
            t.set("g2_fourth", sm.g2_fourth.map_or("-".into(), io::fmt_f64));
            let mut out = Output::new(dir)?;
            out.write("pulse.txt", t.to_text().as_bytes())?;
            if dump_trajectory {
                let envelope = match kind {
                    PulseKind::Up => Envelope::UpPulse { peak_factor: shape.peak_factor, ramp_time: shape.ramp_time },
                    PulseKind::Down => Envelope::DownPulse { ramp_time: shape.ramp_time },
                };
                let drive = DriveSpec { envelope, ..DriveSpec::constant(omega, eps) };
                let cfg = &s.integrator;
                let t_end = cfg.t_transient + shape.ramp_time + cfg.t_average;
                let traj = integrate(&MeanFieldState::vacuum(p.n_sites), &p, &drive, cfg, t_end)?;
                match format {
                    Format::Binary => out.write("trajectory.bin", &io::trajectory_binary(&traj, p.n_sites))?,
                    Format::Text => {
                        let meta = [("freq_Hz", io::fmt_f64(to_hz(omega))), ("epsilon", io::fmt_f64(eps))];
                        let text = io::trajectory_table(&traj, p.n_sites, &meta).to_text();
                        out.write("trajectory.txt", text.as_bytes())?
                    }
                };
            }
            out.finish("pulse", argv, Some(&c), s.seed)
        }
        Command::Eigenmodes { common } => {
            let c = load_config(&common)?;
            let p = c.lattice_params()?;
            let table = io::eigenmode_table(&chain_eigenmodes(&p), &io::params_digest(&p));
            let mut out = Output::new(dir)?;
            out.write("eigenmodes.txt", table.to_text().as_bytes())?;
            out.finish("eigenmodes", argv, Some(&c), 0)
        }
        Command::TelegraphGen { common, traces, format } => {
            let mut c = load_config(&common)?;
            if let Some(n) = traces {
                c.analysis.traces = n;
            }
            if c.analysis.traces == 0 {
                return Err(CliError::config("[analysis] traces must be at least 1"));
            }
            let specs = (0..c.analysis.traces)
                .map(|k| c.telegraph_spec(k))
                .collect::<drivenchain::Result<Vec<_>>>()?;
            let mut out = Output::new(dir)?;
            for (k, spec) in specs.iter().enumerate() {
                let tr = simulate_telegraph(spec)?;
                match format {
                    Format::Binary => out.write(&format!("trace_{k:03}.bin"), &io::trace_binary(&tr))?,
                    Format::Text => {
                        out.write(&format!("trace_{k:03}.txt"), io::trace_table(&tr).to_text().as_bytes())?
                    }
                };
            }
            let seed = c.analysis.seed;
            out.finish("telegraph-gen", argv, Some(&c), seed)
        }
        Command::Adr { common, traces } => {
            let c = load_config(&common)?;
            let mut out = Output::new(dir)?;
            let bundle = read_traces(&traces, &mut out)?;
            let outcome = estimate_adr(&bundle, &c.adr_options())?;
            out.write("adr_report.txt", io::adr_report(&outcome, bundle.len()).to_text().as_bytes())?;
            let seed = c.analysis.seed;
            out.finish("adr", argv, Some(&c), seed)
        }
        Command::Plot { input, output } => {
            let bytes = std::fs::read(&input)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", input.display())))?;
            let title = input.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let svg = render(&bytes, &title)?;
            match output {
                Some(path) => std::fs::write(&path, svg)
                    .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display()))),
                None => {
                    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned());
                    let name = format!("{}.svg", stem.unwrap_or_else(|| "plot".into()));
                    let mut out = Output::new(dir)?;
                    out.input(&input, &bytes);
                    out.write(&name, svg.as_bytes())?;
                    out.finish("plot", argv, None, 0)
                }
            }
        }
    }
}

fn difference_map(common: Common, argv: &[String], dir: PathBuf, two_seed: bool) -> CliResult<()> {
    let c = load_config(&common)?;
    let p = c.lattice_params()?;
    let s = c.sweep_settings(&p)?;
    let mut powers = c.powers()?;
    powers.sort_by(f64::total_cmp);
    let freqs = c.freqs()?;
    let m = if two_seed {
        two_seed_map(&p, &freqs, &powers, &s)?
    } else {
        hysteresis_map(&p, &freqs, &powers, &s)?
    };
    let (name, command) = if two_seed { ("two_seed.txt", "two-seed") } else { ("hysteresis.txt", "hysteresis") };
    let mut out = Output::new(dir)?;
    out.write(name, io::hysteresis_table(&m, &io::params_digest(&p)).to_text().as_bytes())?;
    out.finish(command, argv, Some(&c), s.seed)
}

fn read_traces(paths: &[PathBuf], out: &mut Output) -> CliResult<Vec<TelegraphTrace>> {
    paths
        .iter()
        .map(|p: &PathBuf| {
            let bytes = std::fs::read(p)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?;
            out.input(p, &bytes);
            io::read_trace(&bytes).map_err(|e| CliError::config(format!("{}: {e}", p.display())))
        })
        .collect()
}

/// Renders a stored artifact, recognised by its header.
pub fn render(bytes: &[u8], title: &str) -> CliResult<String> {
    let bad = |e: Error| CliError::config(format!("{title}: {e}"));
    let first_line = bytes.split(|&b| b == b'\n').next().unwrap_or(&[]);
    let first = String::from_utf8_lossy(first_line);
    if first.starts_with("# drivenchain map ") {
        let g = io::read_map(std::str::from_utf8(bytes).map_err(|_| CliError::config("map is not UTF-8"))?)
            .map_err(bad)?;
        let freqs: Vec<f64> = g.freqs.iter().map(|&w| to_hz(w) / 1e9).collect();
        let values: Vec<f64> = g.cells.iter().map(|c| c.transmission_db).collect();
        return Ok(svg::heatmap(&svg::Heatmap {
            title,
            freqs_ghz: &freqs,
            powers: &g.powers,
            values: &values,
            value_label: "transmission [dB]",
            scale: svg::ColorScale::Sequential,
        }));
    }
    if first.starts_with("# drivenchain hysteresis ") {
        let text = std::str::from_utf8(bytes).map_err(|_| CliError::config("file is not UTF-8"))?;
        let m = io::read_hysteresis(text).map_err(bad)?;
        let freqs: Vec<f64> = m.grid_up.freqs.iter().map(|&w| to_hz(w) / 1e9).collect();
        let label = format!(
            "{} - {} [dB]",
            m.grid_up.protocol.as_str(),
            m.grid_down.protocol.as_str()
        );
        return Ok(svg::heatmap(&svg::Heatmap {
            title,
            freqs_ghz: &freqs,
            powers: &m.grid_up.powers,
            values: &m.difference,
            value_label: &label,
            scale: svg::ColorScale::Diverging,
        }));
    }
    if first.starts_with("# drivenchain trace ") || bytes.starts_with(b"DCTRACE") {
        let tr = io::read_trace(bytes).map_err(bad)?;
        let split = select_channel(std::slice::from_ref(&tr)).map_err(bad)?;
        let (channel, threshold) = match split {
            Some((ch, th)) => (ch, Some(th)),
            None => (drivenchain::telegraph::Channel::Amplitude, None),
        };
        let y: Vec<f64> = tr
            .i
            .iter()
            .zip(&tr.q)
            .map(|(&i, &q)| {
                let (a, th) = drivenchain::telegraph::homodyne_from_iq(i, q);
                match channel {
                    drivenchain::telegraph::Channel::Amplitude => a,
                    drivenchain::telegraph::Channel::Phase => th,
                }
            })
            .collect();
        return Ok(svg::trace(title, tr.dt, &y, channel.as_str(), threshold));
    }
    Err(CliError::config(format!("{title}: not a plottable artifact")))
}

/// Paths of artifacts listed in a manifest, resolved against its directory.
pub fn manifest_artifacts(manifest: &Path) -> CliResult<Vec<(PathBuf, String)>> {
    let text = std::fs::read_to_string(manifest)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", manifest.display())))?;
    let m: RunManifest = toml::from_str(&text).map_err(|e| CliError::config(e.to_string()))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    Ok(m.artifacts.into_iter().map(|a| (base.join(a.path), a.sha256)).collect())
}

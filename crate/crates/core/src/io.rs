//! Result files.
//!
//! Text files are columnar: a version line `# drivenchain <kind> v1`,
//! `# key: value` metadata, a `# columns: ...` line and whitespace-separated
//! rows. Floats are written in shortest round-trip form, missing values as
//! `-`. Long traces and trajectories also have a little-endian binary layout.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mft::Trajectory;
use crate::model::{hz, to_hz, LatticeParams, MeanFieldState};
use crate::observables::EigenmodeSet;
use crate::sweep::{CellClass, CellSummary, HysteresisMap, Protocol, SweepGrid};
use crate::telegraph::{AdrOutcome, RatePair, TelegraphTrace, TraceMeta};

pub const FORMAT_VERSION: u32 = 1;

const TRACE_MAGIC: &[u8; 8] = b"DCTRACE\x01";
const TRAJECTORY_MAGIC: &[u8; 8] = b"DCTRAJ\x00\x01";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of the canonical TOML form of the parameters.
pub fn params_digest(params: &LatticeParams) -> String {
    sha256_hex(toml::to_string(params).expect("parameters serialize").as_bytes())
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), fmt_f64)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s == "-" { Ok(None) } else { parse_f64(s).map(Some) }
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse(format!("not an index: {s:?}")))
}

/// Header plus rows of one text file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub kind: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Self {
            kind: kind.to_string(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.meta(key)
            .ok_or_else(|| Error::Parse(format!("{} file lacks `{key}`", self.kind)))
    }

    pub fn meta_f64(&self, key: &str) -> Result<f64> {
        parse_f64(self.require(key)?)
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Parse(format!("{} file lacks column `{name}`", self.kind)))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# drivenchain {} v{FORMAT_VERSION}", self.kind);
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}: {v}");
        }
        let _ = writeln!(s, "# columns: {}", self.columns.join(" "));
        for row in &self.rows {
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    /// Parses a file, checking its kind and version.
    pub fn parse(text: &str, kind: &str) -> Result<Self> {
        let mut lines = text.lines();
        let first = lines.next().unwrap_or("");
        let expected = format!("# drivenchain {kind} v{FORMAT_VERSION}");
        if first.trim_end() != expected {
            return Err(Error::Parse(format!(
                "expected header {expected:?}, found {:?}",
                first.chars().take(60).collect::<String>()
            )));
        }
        let mut t = Table { kind: kind.to_string(), ..Default::default() };
        let mut have_columns = false;
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("line {}: bad header line", n + 2)))?;
                let (k, v) = (k.trim(), v.trim());
                if k == "columns" {
                    t.columns = v.split_whitespace().map(str::to_string).collect();
                    have_columns = true;
                } else {
                    t.meta.push((k.to_string(), v.to_string()));
                }
                continue;
            }
            if !have_columns {
                return Err(Error::Parse("data before the columns line".into()));
            }
            let row: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            if row.len() != t.columns.len() {
                return Err(Error::Parse(format!(
                    "line {}: {} fields, expected {}",
                    n + 2,
                    row.len(),
                    t.columns.len()
                )));
            }
            t.rows.push(row);
        }
        if !have_columns {
            return Err(Error::Parse("missing columns line".into()));
        }
        Ok(t)
    }
}

fn axis_summary(v: &[f64]) -> String {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    format!("{} {} {}", v.len(), fmt_f64(lo), fmt_f64(hi))
}

fn class_str(c: CellClass) -> &'static str {
    c.as_str()
}

// ---------------------------------------------------------------- maps

const MAP_COLUMNS: &[&str] = &[
    "freq_Hz",
    "power_index",
    "epsilon",
    "transmission_dB",
    "classification",
    "g2",
    "g2_fourth",
    "output_magnitude",
];

/// Transmission map; one row per cell, frequency-major.
pub fn map_table(grid: &SweepGrid, params_digest: &str) -> Table {
    let mut t = Table::new("map", MAP_COLUMNS);
    t.set("protocol", grid.protocol.as_str());
    t.set("params_sha256", params_digest);
    t.set("reference", fmt_f64(grid.reference));
    t.set("freqs_Hz", axis_summary(&grid.freqs.iter().map(|&w| to_hz(w)).collect::<Vec<_>>()));
    t.set("powers", axis_summary(&grid.powers));
    let (nf, np) = grid.shape();
    for f in 0..nf {
        for p in 0..np {
            let c = grid.cell(f, p);
            t.rows.push(vec![
                fmt_f64(to_hz(grid.freqs[f])),
                p.to_string(),
                fmt_f64(c.epsilon),
                fmt_f64(c.transmission_db),
                class_str(c.class).to_string(),
                fmt_opt(c.g2),
                fmt_opt(c.g2_fourth),
                fmt_f64(c.output_magnitude),
            ]);
        }
    }
    t
}

/// Axes of a frequency-major table; checks that every cell appears in order.
fn grid_axes(t: &Table) -> Result<(Vec<f64>, Vec<f64>)> {
    let (cf, cp, ce) = (t.column("freq_Hz")?, t.column("power_index")?, t.column("epsilon")?);
    let mut np = 0;
    for row in &t.rows {
        np = np.max(parse_usize(&row[cp])? + 1);
    }
    if np == 0 || t.rows.len() % np != 0 {
        return Err(Error::Parse(format!("{} file is not a complete grid", t.kind)));
    }
    let nf = t.rows.len() / np;
    let mut freqs = Vec::with_capacity(nf);
    let mut powers = vec![0.0; np];
    for (k, row) in t.rows.iter().enumerate() {
        let (f, p) = (k / np, k % np);
        if parse_usize(&row[cp])? != p {
            return Err(Error::Parse(format!("row {k}: cells out of order")));
        }
        let nu = parse_f64(&row[cf])?;
        if p == 0 {
            freqs.push(hz(nu));
        } else if hz(nu) != freqs[f] {
            return Err(Error::Parse(format!("row {k}: frequency changes within a block")));
        }
        let eps = parse_f64(&row[ce])?;
        if f == 0 {
            powers[p] = eps;
        } else if eps != powers[p] {
            return Err(Error::Parse(format!("row {k}: power axis differs between frequencies")));
        }
    }
    Ok((freqs, powers))
}

pub fn read_map(text: &str) -> Result<SweepGrid> {
    let t = Table::parse(text, "map")?;
    let (freqs, powers) = grid_axes(&t)?;
    let c = [
        t.column("epsilon")?,
        t.column("transmission_dB")?,
        t.column("classification")?,
        t.column("g2")?,
        t.column("g2_fourth")?,
        t.column("output_magnitude")?,
    ];
    let cells = t
        .rows
        .iter()
        .map(|r| {
            Ok(CellSummary {
                epsilon: parse_f64(&r[c[0]])?,
                transmission_db: parse_f64(&r[c[1]])?,
                class: r[c[2]].parse()?,
                g2: parse_opt(&r[c[3]])?,
                g2_fourth: parse_opt(&r[c[4]])?,
                output_magnitude: parse_f64(&r[c[5]])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepGrid {
        freqs,
        powers,
        cells,
        protocol: t.require("protocol")?.parse()?,
        reference: t.meta_f64("reference")?,
    })
}

const HYSTERESIS_COLUMNS: &[&str] = &[
    "freq_Hz",
    "power_index",
    "epsilon",
    "transmission_a_dB",
    "transmission_b_dB",
    "difference_dB",
    "classification_a",
    "classification_b",
    "g2_a",
    "g2_b",
    "output_magnitude_a",
    "output_magnitude_b",
];

/// Pair of maps and their difference `a - b`.
pub fn hysteresis_table(map: &HysteresisMap, params_digest: &str) -> Table {
    let (a, b) = (&map.grid_up, &map.grid_down);
    let mut t = Table::new("hysteresis", HYSTERESIS_COLUMNS);
    t.set("protocol_a", a.protocol.as_str());
    t.set("protocol_b", b.protocol.as_str());
    t.set("params_sha256", params_digest);
    t.set("reference", fmt_f64(a.reference));
    t.set("freqs_Hz", axis_summary(&a.freqs.iter().map(|&w| to_hz(w)).collect::<Vec<_>>()));
    t.set("powers", axis_summary(&a.powers));
    let (nf, np) = a.shape();
    for f in 0..nf {
        for p in 0..np {
            let (x, y) = (a.cell(f, p), b.cell(f, p));
            t.rows.push(vec![
                fmt_f64(to_hz(a.freqs[f])),
                p.to_string(),
                fmt_f64(x.epsilon),
                fmt_f64(x.transmission_db),
                fmt_f64(y.transmission_db),
                fmt_f64(map.difference_at(f, p)),
                class_str(x.class).to_string(),
                class_str(y.class).to_string(),
                fmt_opt(x.g2),
                fmt_opt(y.g2),
                fmt_f64(x.output_magnitude),
                fmt_f64(y.output_magnitude),
            ]);
        }
    }
    t
}

/// Reads a difference file back; fourth-moment g2 values are not stored.
pub fn read_hysteresis(text: &str) -> Result<HysteresisMap> {
    let t = Table::parse(text, "hysteresis")?;
    let (freqs, powers) = grid_axes(&t)?;
    let reference = t.meta_f64("reference")?;
    let ce = t.column("epsilon")?;
    let cd = t.column("difference_dB")?;
    let grid = |suffix: &str, protocol: Protocol| -> Result<SweepGrid> {
        let ct = t.column(&format!("transmission_{suffix}_dB"))?;
        let cc = t.column(&format!("classification_{suffix}"))?;
        let cg = t.column(&format!("g2_{suffix}"))?;
        let cm = t.column(&format!("output_magnitude_{suffix}"))?;
        let cells = t
            .rows
            .iter()
            .map(|r| {
                Ok(CellSummary {
                    epsilon: parse_f64(&r[ce])?,
                    class: r[cc].parse()?,
                    output_magnitude: parse_f64(&r[cm])?,
                    transmission_db: parse_f64(&r[ct])?,
                    g2: parse_opt(&r[cg])?,
                    g2_fourth: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepGrid { freqs: freqs.clone(), powers: powers.clone(), cells, protocol, reference })
    };
    let grid_up = grid("a", t.require("protocol_a")?.parse()?)?;
    let grid_down = grid("b", t.require("protocol_b")?.parse()?)?;
    let difference = t.rows.iter().map(|r| parse_f64(&r[cd])).collect::<Result<Vec<_>>>()?;
    Ok(HysteresisMap { grid_up, grid_down, difference })
}

// ---------------------------------------------------------- trajectories

fn trajectory_columns(n: usize) -> Vec<String> {
    let mut c = vec!["t".to_string()];
    for name in ["alpha", "beta"] {
        for j in 1..=n {
            c.push(format!("re_{name}_{j}"));
            c.push(format!("im_{name}_{j}"));
        }
    }
    c
}

pub fn trajectory_table(traj: &Trajectory, n_sites: usize, meta: &[(&str, String)]) -> Table {
    let mut t = Table {
        kind: "trajectory".into(),
        columns: trajectory_columns(n_sites),
        ..Default::default()
    };
    t.set("n_sites", n_sites);
    for (k, v) in meta {
        t.set(k, v);
    }
    for (time, s) in traj.times.iter().zip(&traj.states) {
        let mut row = Vec::with_capacity(1 + 4 * n_sites);
        row.push(fmt_f64(*time));
        for z in s.alpha.iter().chain(&s.beta) {
            row.push(fmt_f64(z.re));
            row.push(fmt_f64(z.im));
        }
        t.rows.push(row);
    }
    t
}

pub fn read_trajectory(text: &str) -> Result<Trajectory> {
    let t = Table::parse(text, "trajectory")?;
    let n = parse_usize(t.require("n_sites")?)?;
    if t.columns != trajectory_columns(n) {
        return Err(Error::Parse("trajectory columns do not match n_sites".into()));
    }
    let mut out = Trajectory::default();
    for r in &t.rows {
        let v = r.iter().map(|s| parse_f64(s)).collect::<Result<Vec<_>>>()?;
        out.times.push(v[0]);
        out.states.push(state_from_flat(&v[1..], n));
    }
    Ok(out)
}

fn state_from_flat(v: &[f64], n: usize) -> MeanFieldState {
    let z = |k: usize| C64::new(v[2 * k], v[2 * k + 1]);
    MeanFieldState {
        alpha: (0..n).map(z).collect(),
        beta: (n..2 * n).map(z).collect(),
    }
}

/// Binary layout: magic, `n_sites` and sample count as u64, then per
/// sample `t` followed by the interleaved real/imaginary parts of
/// `alpha` and `beta`, all f64.
pub fn trajectory_binary(traj: &Trajectory, n_sites: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + traj.times.len() * (1 + 4 * n_sites) * 8);
    out.extend_from_slice(TRAJECTORY_MAGIC);
    out.extend_from_slice(&(n_sites as u64).to_le_bytes());
    out.extend_from_slice(&(traj.times.len() as u64).to_le_bytes());
    for (time, s) in traj.times.iter().zip(&traj.states) {
        out.extend_from_slice(&time.to_le_bytes());
        for z in s.alpha.iter().chain(&s.beta) {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

pub fn read_trajectory_binary(bytes: &[u8]) -> Result<Trajectory> {
    let mut r = Reader::new(bytes);
    if r.take(8)? != TRAJECTORY_MAGIC {
        return Err(Error::Parse("not a binary trajectory".into()));
    }
    let n = r.u64()? as usize;
    let m = r.u64()? as usize;
    let width = 1 + 4 * n;
    let mut out = Trajectory::default();
    let mut buf = vec![0.0; width];
    for _ in 0..m {
        for x in buf.iter_mut() {
            *x = r.f64()?;
        }
        out.times.push(buf[0]);
        out.states.push(state_from_flat(&buf[1..], n));
    }
    r.finish()?;
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Parse("binary file truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Parse("trailing bytes in binary file".into()));
        }
        Ok(())
    }
}

// ------------------------------------------------------------ eigenmodes

/// Mode index, frequency and site weights `W_{j mu}`, one row per mode.
pub fn eigenmode_table(modes: &EigenmodeSet, params_digest: &str) -> Table {
    let n = modes.frequencies.len();
    let mut columns = vec!["mu".to_string(), "nu_Hz".to_string()];
    columns.extend((1..=n).map(|j| format!("W_{j}")));
    let mut t = Table { kind: "eigenmodes".into(), columns, ..Default::default() };
    t.set("n_sites", n);
    t.set("params_sha256", params_digest);
    for (mu, &w) in modes.frequencies.iter().enumerate() {
        let mut row = vec![(mu + 1).to_string(), fmt_f64(to_hz(w))];
        row.extend((0..n).map(|j| fmt_f64(modes.weights[(j, mu)])));
        t.rows.push(row);
    }
    t
}

// ---------------------------------------------------------------- traces

fn trace_meta_lines(trace: &TelegraphTrace) -> Vec<(String, String)> {
    let mut m = vec![
        ("dt".to_string(), fmt_f64(trace.dt)),
        ("duration".to_string(), fmt_f64(trace.duration())),
        ("samples".to_string(), trace.len().to_string()),
        (
            "layout".to_string(),
            if trace.truth.is_some() { "i q truth" } else { "i q" }.to_string(),
        ),
    ];
    if let Some(s) = trace.meta.seed {
        m.push(("seed".into(), s.to_string()));
    }
    if let Some(r) = trace.meta.rates {
        m.push(("gamma_12".into(), fmt_f64(r.gamma_12)));
        m.push(("gamma_21".into(), fmt_f64(r.gamma_21)));
    }
    if let Some(f) = trace.meta.filter_cutoff {
        m.push(("filter_cutoff_Hz".into(), fmt_f64(f)));
    }
    m
}

fn trace_from_meta(t: &Table) -> Result<(f64, usize, bool, TraceMeta)> {
    let dt = t.meta_f64("dt")?;
    let n = parse_usize(t.require("samples")?)?;
    let truth = match t.require("layout")? {
        "i q" => false,
        "i q truth" => true,
        other => return Err(Error::Parse(format!("unknown trace layout {other:?}"))),
    };
    let seed = t
        .meta("seed")
        .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad seed {s:?}"))))
        .transpose()?;
    let rates = match (t.meta("gamma_12"), t.meta("gamma_21")) {
        (Some(a), Some(b)) => Some(RatePair { gamma_12: parse_f64(a)?, gamma_21: parse_f64(b)? }),
        _ => None,
    };
    let filter_cutoff = t.meta("filter_cutoff_Hz").map(parse_f64).transpose()?;
    if !(dt > 0.0) {
        return Err(Error::Parse(format!("trace dt must be > 0, got {dt}")));
    }
    Ok((dt, n, truth, TraceMeta { seed, rates, filter_cutoff }))
}

pub fn trace_table(trace: &TelegraphTrace) -> Table {
    let mut t = Table::new("trace", &["i", "q"]);
    if trace.truth.is_some() {
        t.columns.push("truth".into());
    }
    t.meta = trace_meta_lines(trace);
    for k in 0..trace.len() {
        let mut row = vec![fmt_f64(trace.i[k]), fmt_f64(trace.q[k])];
        if let Some(s) = &trace.truth {
            row.push(s[k].to_string());
        }
        t.rows.push(row);
    }
    t
}

fn trace_from_table(t: &Table) -> Result<TelegraphTrace> {
    let (dt, n, has_truth, meta) = trace_from_meta(t)?;
    if t.rows.len() != n {
        return Err(Error::Parse(format!("trace holds {} rows, header says {n}", t.rows.len())));
    }
    let i = t.rows.iter().map(|r| parse_f64(&r[0])).collect::<Result<Vec<_>>>()?;
    let q = t.rows.iter().map(|r| parse_f64(&r[1])).collect::<Result<Vec<_>>>()?;
    let truth = if has_truth {
        let c = t.column("truth")?;
        Some(
            t.rows
                .iter()
                .map(|r| r[c].parse::<u8>().map_err(|_| Error::Parse(format!("bad state {:?}", r[c]))))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(TelegraphTrace { dt, i, q, truth, meta })
}

/// Binary layout: magic, u64 header length, the `key: value` header in
/// UTF-8, then all I samples, all Q samples (f64) and, if present, the
/// true states as bytes.
pub fn trace_binary(trace: &TelegraphTrace) -> Vec<u8> {
    let mut header = String::new();
    for (k, v) in trace_meta_lines(trace) {
        let _ = writeln!(header, "{k}: {v}");
    }
    let n = trace.len();
    let mut out = Vec::with_capacity(16 + header.len() + 17 * n);
    out.extend_from_slice(TRACE_MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for x in trace.i.iter().chain(&trace.q) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    if let Some(s) = &trace.truth {
        out.extend_from_slice(s);
    }
    out
}

/// Reads either trace layout, recognised by its leading bytes.
pub fn read_trace(bytes: &[u8]) -> Result<TelegraphTrace> {
    if !bytes.starts_with(TRACE_MAGIC) {
        let text = std::str::from_utf8(bytes)
            .map_err(|_| Error::Parse("trace is neither binary nor text".into()))?;
        return trace_from_table(&Table::parse(text, "trace")?);
    }
    let mut r = Reader::new(bytes);
    r.take(8)?;
    let hlen = r.u64()? as usize;
    let header = std::str::from_utf8(r.take(hlen)?)
        .map_err(|_| Error::Parse("trace header is not UTF-8".into()))?;
    let mut t = Table { kind: "trace".into(), ..Default::default() };
    for line in header.lines() {
        let (k, v) = line
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad trace header line {line:?}")))?;
        t.set(k.trim(), v.trim());
    }
    let (dt, n, has_truth, meta) = trace_from_meta(&t)?;
    let read = |r: &mut Reader| (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>();
    let i = read(&mut r)?;
    let q = read(&mut r)?;
    let truth = if has_truth { Some(r.take(n)?.to_vec()) } else { None };
    r.finish()?;
    Ok(TelegraphTrace { dt, i, q, truth, meta })
}

// ------------------------------------------------------------ ADR report

/// Rates, ADR, censoring flags, chosen channel and the dwell histograms.
pub fn adr_report(outcome: &AdrOutcome, traces: usize) -> Table {
    let mut t = Table::new("adr-report", &["state", "bin_lo_s", "bin_hi_s", "count"]);
    t.set("traces", traces);
    let Some(e) = outcome.estimate() else {
        t.set("outcome", "monostable");
        return t;
    };
    t.set("outcome", "bistable");
    t.set("channel", e.channel.as_str());
    t.set("threshold", fmt_f64(e.threshold));
    t.set("tau_m_s", fmt_f64(e.tau_m));
    t.set("gamma_12", fmt_f64(e.rates.gamma_12));
    t.set("gamma_21", fmt_f64(e.rates.gamma_21));
    t.set("adr", fmt_f64(e.adr));
    t.set("censoring_12", e.censoring[0].as_str());
    t.set("censoring_21", e.censoring[1].as_str());
    t.set("raw_gamma_12", fmt_f64(e.raw_rates.0));
    t.set("raw_gamma_21", fmt_f64(e.raw_rates.1));
    for (s, (complete, censored)) in e.dwell_counts.iter().enumerate() {
        t.set(&format!("dwells_{}", s + 1), format!("{complete} complete, {censored} censored"));
    }
    for (s, h) in e.histograms.iter().enumerate() {
        let Some(h) = h else { continue };
        for (k, c) in h.counts.iter().enumerate() {
            t.rows.push(vec![
                (s + 1).to_string(),
                fmt_f64(h.bin_edges[k]),
                fmt_f64(h.bin_edges[k + 1]),
                c.to_string(),
            ]);
        }
    }
    t
}

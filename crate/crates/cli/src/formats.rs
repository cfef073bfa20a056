//! Every file format the tool reads or writes.
//!
//! Outputs are CSV with a fixed header and a fixed row order. Floats are
//! written with `f64`'s `Display`, the shortest decimal that round-trips.

use std::cmp::Ordering;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use beamkit_core::{
    BeamformerWeights, Complex64, Direction, FrequencyGrid, MetricRow, MicArrayGeometry, PhysicalConstants,
    SteeringDictionary, TriMesh, Vec3,
};
use beamkit_core::model::DEFAULT_SPEED_OF_SOUND;
use serde::Deserialize;

use crate::error::{CliError, Result};

pub const DICTIONARY_HEADER: [&str; 6] = ["freq_hz", "theta_deg", "phi_deg", "mic_index", "real", "imag"];
pub const WEIGHTS_HEADER: [&str; 8] = [
    "freq_hz",
    "ld_theta_deg",
    "ld_phi_deg",
    "mic_index",
    "real",
    "imag",
    "loading",
    "wng_db_achieved",
];
pub const SWEEP_HEADER: [&str; 8] = [
    "freq_hz",
    "ld_theta_deg",
    "ld_phi_deg",
    "ag_lin",
    "ag_db",
    "wng_lin",
    "wng_db",
    "macc_nats",
];
pub const SCATTER_HEADER: [&str; 7] = ["freq_hz", "theta_deg", "phi_deg", "mic_index", "ps_real", "ps_imag", "ps_db"];
pub const COMPARISON_HEADER: [&str; 6] = [
    "freq_hz",
    "ld_theta_deg",
    "ld_phi_deg",
    "ag_delta_db",
    "wng_delta_db",
    "macc_delta_db",
];
pub const SUMMARY_HEADER: [&str; 5] = ["metric", "count", "mean_db", "min_db", "max_db"];

fn fmt(x: f64) -> String {
    x.to_string()
}

/// Degrees come from radians and pick up round-off (30 becomes
/// 29.999999999999996); values within 1e-12 of a multiple of 1e-6 snap to it.
fn fmt_angle(x: f64) -> String {
    let snapped = (x * 1e6).round() / 1e6;
    if (snapped - x).abs() <= 1e-12 * x.abs().max(1.0) {
        fmt(snapped + 0.0)
    } else {
        fmt(x)
    }
}

// ---------------------------------------------------------------- geometry

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryFile {
    #[serde(default = "default_speed")]
    speed_of_sound: f64,
    #[serde(default)]
    reference_index: usize,
    mics: Vec<[f64; 3]>,
}

fn default_speed() -> f64 {
    DEFAULT_SPEED_OF_SOUND
}

/// Array geometry plus the medium it sits in.
#[derive(Debug, Clone)]
pub struct ArraySetup {
    pub geometry: MicArrayGeometry,
    pub consts: PhysicalConstants,
}

pub fn parse_geometry(text: &str, path: &Path) -> Result<ArraySetup> {
    let raw: GeometryFile = toml::from_str(text).map_err(|e| CliError::input(path, e.to_string()))?;
    let positions = raw.mics.iter().map(|p| Vec3::from_array(*p)).collect();
    let geometry =
        MicArrayGeometry::new(positions, raw.reference_index).map_err(|e| CliError::input(path, e.to_string()))?;
    let consts = PhysicalConstants::new(raw.speed_of_sound).map_err(|e| CliError::input(path, e.to_string()))?;
    Ok(ArraySetup { geometry, consts })
}

pub fn read_geometry(path: &Path) -> Result<ArraySetup> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_geometry(&text, path)
}

// -------------------------------------------------------------------- mesh

/// Reads `v x y z` and `f i j k` lines (1-based indices). Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_mesh<R: Read>(reader: R, path: &Path) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let bad = |msg: String| CliError::input(path, format!("line {}: {msg}", lineno + 1));
        let mut parts = line.split_whitespace();
        let Some(tag) = parts.next() else { continue };
        if tag.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = parts.collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 values after `{tag}`, found {}", fields.len())));
        }
        match tag {
            "v" => {
                let mut xyz = [0.0; 3];
                for (slot, s) in xyz.iter_mut().zip(&fields) {
                    *slot = s.parse().map_err(|_| bad(format!("invalid coordinate `{s}`")))?;
                }
                vertices.push(Vec3::from_array(xyz));
            }
            "f" => {
                let mut tri = [0usize; 3];
                for (slot, s) in tri.iter_mut().zip(&fields) {
                    let i: usize = s.parse().map_err(|_| bad(format!("invalid vertex index `{s}`")))?;
                    if i == 0 {
                        return Err(bad("vertex indices are 1-based".into()));
                    }
                    *slot = i - 1;
                }
                triangles.push(tri);
            }
            other => return Err(bad(format!("unknown record `{other}`"))),
        }
    }
    TriMesh::new(vertices, triangles).map_err(|e| CliError::input(path, e.to_string()))
}

pub fn read_mesh(path: &Path) -> Result<TriMesh> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_mesh(file, path)
}

pub fn write_mesh<W: Write>(mut out: W, mesh: &TriMesh) -> std::io::Result<()> {
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in mesh.triangles() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

// -------------------------------------------------------------- dictionary

fn direction_order(a: &Direction, b: &Direction) -> Ordering {
    a.theta_deg()
        .total_cmp(&b.theta_deg())
        .then(a.phi_deg().total_cmp(&b.phi_deg()))
}

/// Rows sorted by frequency, theta, phi, mic regardless of the dictionary's
/// internal direction order.
pub fn write_dictionary<W: Write>(out: W, dict: &SteeringDictionary) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DICTIONARY_HEADER)?;
    let mut order: Vec<usize> = (0..dict.directions().len()).collect();
    order.sort_by(|&i, &j| direction_order(&dict.directions()[i], &dict.directions()[j]));
    for (fi, &f) in dict.frequencies().as_slice().iter().enumerate() {
        for &di in &order {
            let d = dict.directions()[di];
            for (m, z) in dict.entry(fi, di).iter().enumerate() {
                w.write_record([
                    fmt(f),
                    fmt_angle(d.theta_deg()),
                    fmt_angle(d.phi_deg()),
                    m.to_string(),
                    fmt(z.re),
                    fmt(z.im),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct DictionaryRecord {
    freq_hz: f64,
    theta_deg: f64,
    phi_deg: f64,
    mic_index: usize,
    real: f64,
    imag: f64,
}

fn expect_header(reader: &mut csv::Reader<impl Read>, expected: &[&str], path: &Path) -> Result<()> {
    let header = reader
        .headers()
        .map_err(|e| CliError::input(path, e.to_string()))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(CliError::input(
            path,
            format!(
                "unexpected header `{}`, expected `{}`",
                header.iter().collect::<Vec<_>>().join(","),
                expected.join(",")
            ),
        ));
    }
    Ok(())
}

/// Reads a dense dictionary: every (frequency, direction) pair must carry
/// exactly one row per microphone of `geometry`. Row order is free.
pub fn parse_dictionary<R: Read>(reader: R, path: &Path, geometry: &MicArrayGeometry) -> Result<SteeringDictionary> {
    let bad = |msg: String| CliError::input(path, msg);
    let mut rdr = csv::Reader::from_reader(reader);
    expect_header(&mut rdr, &DICTIONARY_HEADER, path)?;
    let mut rows: Vec<DictionaryRecord> = Vec::new();
    for (i, rec) in rdr.deserialize().enumerate() {
        let rec: DictionaryRecord = rec.map_err(|e| bad(format!("row {}: {e}", i + 2)))?;
        rows.push(rec);
    }
    if rows.is_empty() {
        return Err(bad("dictionary has no rows".into()));
    }
    let m = geometry.len();
    rows.sort_by(|a, b| {
        a.freq_hz
            .total_cmp(&b.freq_hz)
            .then(a.theta_deg.total_cmp(&b.theta_deg))
            .then(a.phi_deg.total_cmp(&b.phi_deg))
            .then(a.mic_index.cmp(&b.mic_index))
    });

    let key = |r: &DictionaryRecord| (r.freq_hz, r.theta_deg, r.phi_deg);
    let mut freqs: Vec<f64> = Vec::new();
    let mut dirs: Vec<(f64, f64)> = Vec::new();
    let mut entries = Vec::with_capacity(rows.len());
    for (block_index, block) in rows.chunks(m).enumerate() {
        let (f, t, p) = key(&block[0]);
        if block.len() != m
            || block.iter().any(|r| key(r) != (f, t, p))
            || block.iter().enumerate().any(|(i, r)| r.mic_index != i)
        {
            return Err(bad(format!(
                "node (f = {f} Hz, theta = {t} deg, phi = {p} deg) does not carry exactly one row for each of {m} mics"
            )));
        }
        if freqs.last() != Some(&f) {
            freqs.push(f);
        }
        if freqs.len() == 1 {
            dirs.push((t, p));
        } else {
            let expected = dirs.get(block_index % dirs.len().max(1));
            if dirs.is_empty() || expected != Some(&(t, p)) {
                return Err(bad(format!(
                    "direction grid at {f} Hz differs from the grid at {} Hz; the dictionary must be dense",
                    freqs[0]
                )));
            }
        }
        entries.extend(block.iter().map(|r| Complex64::new(r.real, r.imag)));
    }
    if freqs.len() * dirs.len() * m != rows.len() {
        return Err(bad("dictionary is not a dense frequency x direction grid".into()));
    }
    let directions = dirs
        .iter()
        .map(|&(t, p)| Direction::from_degrees(t, p))
        .collect::<beamkit_core::Result<Vec<_>>>()
        .map_err(|e| bad(e.to_string()))?;
    let grid = FrequencyGrid::new(freqs).map_err(|e| bad(e.to_string()))?;
    SteeringDictionary::new(geometry.clone(), grid, directions, entries).map_err(|e| bad(e.to_string()))
}

pub fn read_dictionary(path: &Path, geometry: &MicArrayGeometry) -> Result<SteeringDictionary> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_dictionary(file, path, geometry)
}

// ------------------------------------------------------------ weights/sweep

pub fn write_weights<W: Write>(out: W, designs: &[BeamformerWeights]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(WEIGHTS_HEADER)?;
    for d in designs {
        let ld = d.look_direction();
        let diag = d.diagnostics();
        for (m, z) in d.weights().iter().enumerate() {
            w.write_record([
                fmt(d.frequency()),
                fmt_angle(ld.theta_deg()),
                fmt_angle(ld.phi_deg()),
                m.to_string(),
                fmt(z.re),
                fmt(z.im),
                fmt(diag.loading),
                fmt(beamkit_core::to_db(diag.achieved_wng)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One sweep line as stored on disk.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct SweepRecord {
    pub freq_hz: f64,
    pub ld_theta_deg: f64,
    pub ld_phi_deg: f64,
    pub ag_lin: f64,
    pub ag_db: f64,
    pub wng_lin: f64,
    pub wng_db: f64,
    pub macc_nats: f64,
}

impl From<&MetricRow> for SweepRecord {
    fn from(r: &MetricRow) -> Self {
        Self {
            freq_hz: r.frequency,
            ld_theta_deg: r.look_direction.theta_deg(),
            ld_phi_deg: r.look_direction.phi_deg(),
            ag_lin: r.ag,
            ag_db: r.ag_db(),
            wng_lin: r.wng,
            wng_db: r.wng_db(),
            macc_nats: r.macc,
        }
    }
}

pub fn write_sweep<W: Write>(out: W, rows: &[MetricRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows.iter().map(SweepRecord::from) {
        w.write_record([
            fmt(r.freq_hz),
            fmt_angle(r.ld_theta_deg),
            fmt_angle(r.ld_phi_deg),
            fmt(r.ag_lin),
            fmt(r.ag_db),
            fmt(r.wng_lin),
            fmt(r.wng_db),
            fmt(r.macc_nats),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_sweep<R: Read>(reader: R, path: &Path) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    expect_header(&mut rdr, &SWEEP_HEADER, path)?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| CliError::input(path, format!("row {}: {e}", i + 2))))
        .collect()
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepRecord>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_sweep(file, path)
}

// ------------------------------------------------------------- scatterfield

/// Scattered pressure at one mic for one incidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterRow {
    pub frequency: f64,
    pub direction: Direction,
    pub mic: usize,
    pub ps: Complex64,
}

pub fn write_scatterfield<W: Write>(out: W, rows: &[ScatterRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCATTER_HEADER)?;
    for r in rows {
        w.write_record([
            fmt(r.frequency),
            fmt_angle(r.direction.theta_deg()),
            fmt_angle(r.direction.phi_deg()),
            r.mic.to_string(),
            fmt(r.ps.re),
            fmt(r.ps.im),
            fmt(20.0 * r.ps.norm().log10()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// --------------------------------------------------------------- comparison

/// B relative to A, in dB, for one (frequency, look direction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub freq_hz: f64,
    pub ld_theta_deg: f64,
    pub ld_phi_deg: f64,
    pub ag_delta_db: f64,
    pub wng_delta_db: f64,
    pub macc_delta_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub metric: &'static str,
    pub count: usize,
    pub mean_db: f64,
    pub min_db: f64,
    pub max_db: f64,
}

pub fn write_comparison<W: Write>(out: W, rows: &[ComparisonRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COMPARISON_HEADER)?;
    for r in rows {
        w.write_record([
            fmt(r.freq_hz),
            fmt_angle(r.ld_theta_deg),
            fmt_angle(r.ld_phi_deg),
            fmt(r.ag_delta_db),
            fmt(r.wng_delta_db),
            fmt(r.macc_delta_db),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.metric.to_string(),
            r.count.to_string(),
            fmt(r.mean_db),
            fmt(r.min_db),
            fmt(r.max_db),
        ])?;
    }
    w.flush()?;
    Ok(())
}

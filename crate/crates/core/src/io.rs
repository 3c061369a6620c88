//! Run and scan file formats, plus the envelope CSV export.
//!
//! A run file starts with a header comment and holds one count per line:
//!
//! ```text
//! # bin_ms=50 scenario=8f2a...
//! 52
//! 47
//! ```
//!
//! A scan file concatenates run blocks behind the same global header, each
//! introduced by a `# point=<i> distance_um=<..> run=<j>` separator line.
//! Counts and distances are written with Rust's shortest-round-trip float
//! formatting, so files parse back bit-exactly.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::dsp::Envelope;
use crate::error::{Result, SwionError};
use crate::synth::{FluorescenceRun, ScanDataset};

/// One scan point read back from a file.
#[derive(Debug, Clone)]
pub struct ScanFilePoint {
    pub index: usize,
    /// Ion distance (m).
    pub distance: f64,
    pub runs: Vec<FluorescenceRun>,
}

/// Contents of a run or scan file.
#[derive(Debug, Clone)]
pub enum RunDocument {
    Single(FluorescenceRun),
    Scan(Vec<ScanFilePoint>),
}

impl RunDocument {
    /// Every run in the document, scan order.
    pub fn all_runs(&self) -> Vec<&FluorescenceRun> {
        match self {
            RunDocument::Single(run) => vec![run],
            RunDocument::Scan(points) => points.iter().flat_map(|p| p.runs.iter()).collect(),
        }
    }
}

fn format_run_counts(out: &mut String, run: &FluorescenceRun) {
    for &c in &run.counts {
        writeln!(out, "{c}").expect("string write cannot fail");
    }
}

/// Serialize a single run to the run-file format.
pub fn run_to_string(run: &FluorescenceRun) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "# bin_ms={} scenario={}",
        run.bin_width * 1e3,
        run.scenario_digest
    )
    .expect("string write cannot fail");
    format_run_counts(&mut out, run);
    out
}

/// Serialize a scan dataset to the scan-file format.
pub fn scan_to_string(dataset: &ScanDataset) -> String {
    let mut out = String::new();
    let (bin_ms, digest) = dataset
        .points
        .first()
        .and_then(|p| p.runs.first())
        .map(|r| (r.bin_width * 1e3, r.scenario_digest.clone()))
        .unwrap_or((0.0, "empty".to_string()));
    writeln!(out, "# bin_ms={bin_ms} scenario={digest}").expect("string write cannot fail");
    for point in &dataset.points {
        for (j, run) in point.runs.iter().enumerate() {
            writeln!(
                out,
                "# point={} distance_um={} run={}",
                point.index,
                point.distance * 1e6,
                j
            )
            .expect("string write cannot fail");
            format_run_counts(&mut out, run);
        }
    }
    out
}

pub fn write_run(path: &Path, run: &FluorescenceRun) -> Result<()> {
    write_text(path, &run_to_string(run))
}

pub fn write_scan(path: &Path, dataset: &ScanDataset) -> Result<()> {
    write_text(path, &scan_to_string(dataset))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| SwionError::io(path.display().to_string(), e))?;
    f.write_all(text.as_bytes())
        .map_err(|e| SwionError::io(path.display().to_string(), e))
}

fn parse_tags(line: &str) -> Result<Vec<(String, String)>> {
    line.trim_start_matches('#')
        .split_whitespace()
        .map(|tok| {
            tok.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| SwionError::format(format!("malformed header token '{tok}'")))
        })
        .collect()
}

fn tag<'a>(tags: &'a [(String, String)], key: &str) -> Option<&'a str> {
    tags.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

/// Parse a run or scan document.
pub fn parse_document(text: &str) -> Result<RunDocument> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| SwionError::format("empty file".to_string()))?;
    if !header.starts_with('#') {
        return Err(SwionError::format(
            "missing '# bin_ms=... scenario=...' header".to_string(),
        ));
    }
    let tags = parse_tags(header)?;
    let bin_ms: f64 = tag(&tags, "bin_ms")
        .ok_or_else(|| SwionError::format("header lacks bin_ms".to_string()))?
        .parse()
        .map_err(|_| SwionError::format("bin_ms is not a number".to_string()))?;
    if !(bin_ms > 0.0) {
        return Err(SwionError::format(format!("bin_ms must be > 0, got {bin_ms}")));
    }
    let digest = tag(&tags, "scenario").unwrap_or("measured").to_string();
    let bin_width = bin_ms * 1e-3;

    let mut points: Vec<ScanFilePoint> = Vec::new();
    let mut current: Option<(usize, f64, Vec<f64>)> = None;
    let mut single: Vec<f64> = Vec::new();

    let close_block =
        |current: &mut Option<(usize, f64, Vec<f64>)>, points: &mut Vec<ScanFilePoint>| {
            if let Some((idx, dist, counts)) = current.take() {
                let run = FluorescenceRun {
                    bin_width,
                    counts,
                    scenario_digest: digest.clone(),
                };
                match points.iter_mut().find(|p| p.index == idx) {
                    Some(p) => p.runs.push(run),
                    None => points.push(ScanFilePoint {
                        index: idx,
                        distance: dist,
                        runs: vec![run],
                    }),
                }
            }
        };

    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let tags = parse_tags(rest)?;
            let idx: usize = tag(&tags, "point")
                .ok_or_else(|| {
                    SwionError::format(format!("line {}: separator lacks point=", lineno + 1))
                })?
                .parse()
                .map_err(|_| SwionError::format("point index is not an integer".to_string()))?;
            let dist_um: f64 = tag(&tags, "distance_um")
                .ok_or_else(|| {
                    SwionError::format(format!(
                        "line {}: separator lacks distance_um=",
                        lineno + 1
                    ))
                })?
                .parse()
                .map_err(|_| SwionError::format("distance_um is not a number".to_string()))?;
            close_block(&mut current, &mut points);
            current = Some((idx, dist_um * 1e-6, Vec::new()));
        } else {
            let value: f64 = line.parse().map_err(|_| {
                SwionError::format(format!("line {}: '{line}' is not a count", lineno + 1))
            })?;
            if value < 0.0 {
                return Err(SwionError::format(format!(
                    "line {}: negative count {value}",
                    lineno + 1
                )));
            }
            match &mut current {
                Some((_, _, counts)) => counts.push(value),
                None => single.push(value),
            }
        }
    }
    close_block(&mut current, &mut points);

    if points.is_empty() {
        if single.is_empty() {
            return Err(SwionError::format("file holds no counts".to_string()));
        }
        Ok(RunDocument::Single(FluorescenceRun {
            bin_width,
            counts: single,
            scenario_digest: digest,
        }))
    } else if single.is_empty() {
        Ok(RunDocument::Scan(points))
    } else {
        Err(SwionError::format(
            "counts found outside any scan block".to_string(),
        ))
    }
}

pub fn read_document(path: &Path) -> Result<RunDocument> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SwionError::io(path.display().to_string(), e))?;
    parse_document(&text)
}

/// Envelope export: `t_s, amplitude, phase_rad, inst_freq_rad_s`.
pub fn envelope_to_csv(env: &Envelope) -> String {
    let mut out = String::from("t_s,amplitude,phase_rad,inst_freq_rad_s\n");
    for k in 0..env.times.len() {
        writeln!(
            out,
            "{},{},{},{}",
            env.times[k], env.amplitude[k], env.phase[k], env.inst_freq[k]
        )
        .expect("string write cannot fail");
    }
    out
}

pub fn write_envelope_csv(path: &Path, env: &Envelope) -> Result<()> {
    write_text(path, &envelope_to_csv(env))
}

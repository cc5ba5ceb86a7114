//! CSV and JSON report formats.
//!
//! CSV files start with the comment line `# weyl-scatter v1`, then a header
//! row. Floats are written with 17 significant digits so they read back
//! bit-exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use weyl_scatter_core::recovery::RecoveryResult;

pub const CSV_VERSION_LINE: &str = "# weyl-scatter v1";

pub const SCATTER_COLUMNS: [&str; 10] = [
    "epsilon",
    "n_samples",
    "seed",
    "mean_length",
    "stderr_length",
    "trapped_fraction",
    "corner_fraction",
    "mean_bounces",
    "diff_mean",
    "diff_stderr",
];

pub const VOLUME_COLUMNS: [&str; 5] = [
    "epsilon",
    "analytic_volume",
    "mc_volume",
    "mc_stderr",
    "z_score",
];
pub const ROUGHNESS_COLUMNS: [&str; 2] = ["rho", "rho_hat"];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("missing `{CSV_VERSION_LINE}` line")]
    MissingVersion,
    #[error("unexpected CSV header: {0}")]
    Header(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `{:.16e}`: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct ScatterRow {
    pub epsilon: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub mean_length: f64,
    pub stderr_length: f64,
    pub trapped_fraction: f64,
    pub corner_fraction: f64,
    pub mean_bounces: f64,
    pub diff_mean: f64,
    pub diff_stderr: f64,
}

impl ScatterRow {
    fn record(&self) -> Vec<String> {
        vec![
            fmt_f64(self.epsilon),
            self.n_samples.to_string(),
            self.seed.to_string(),
            fmt_f64(self.mean_length),
            fmt_f64(self.stderr_length),
            fmt_f64(self.trapped_fraction),
            fmt_f64(self.corner_fraction),
            fmt_f64(self.mean_bounces),
            fmt_f64(self.diff_mean),
            fmt_f64(self.diff_stderr),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeRow {
    pub epsilon: f64,
    pub analytic_volume: f64,
    pub mc_volume: f64,
    pub mc_stderr: f64,
    /// `(mc − analytic) / mc_stderr`.
    pub z_score: f64,
    /// `(ρ, ρ̂)` for bubble tubes.
    pub roughness: Option<(f64, f64)>,
}

fn write_csv<W: Write>(
    out: W,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), ReportError> {
    let mut out = out;
    writeln!(out, "{CSV_VERSION_LINE}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scatter_csv<W: Write>(out: W, rows: &[ScatterRow]) -> Result<(), ReportError> {
    write_csv(out, &SCATTER_COLUMNS, rows.iter().map(ScatterRow::record))
}

pub fn scatter_csv_string(rows: &[ScatterRow]) -> String {
    let mut buf = Vec::new();
    write_scatter_csv(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

pub fn read_scatter_csv<R: Read>(input: R) -> Result<Vec<ScatterRow>, ReportError> {
    let mut text = String::new();
    let mut input = input;
    input.read_to_string(&mut text)?;
    let body = text
        .strip_prefix(CSV_VERSION_LINE)
        .and_then(|rest| {
            rest.strip_prefix('\n')
                .or_else(|| rest.strip_prefix("\r\n"))
        })
        .ok_or(ReportError::MissingVersion)?;
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SCATTER_COLUMNS {
        return Err(ReportError::Header(header.join(",")));
    }
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn write_volume_csv<W: Write>(out: W, rows: &[VolumeRow]) -> Result<(), ReportError> {
    let bubble = rows.iter().any(|r| r.roughness.is_some());
    let mut header: Vec<&str> = VOLUME_COLUMNS.to_vec();
    if bubble {
        header.extend(ROUGHNESS_COLUMNS);
    }
    write_csv(
        out,
        &header,
        rows.iter().map(|r| {
            let mut v = vec![
                fmt_f64(r.epsilon),
                fmt_f64(r.analytic_volume),
                fmt_f64(r.mc_volume),
                fmt_f64(r.mc_stderr),
                fmt_f64(r.z_score),
            ];
            if let Some((rho, rho_hat)) = r.roughness {
                v.push(fmt_f64(rho));
                v.push(fmt_f64(rho_hat));
            }
            v
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
struct RecoveryJson<'a> {
    n: usize,
    k: usize,
    epsilons: &'a [f64],
    Q_values: Vec<[f64; 2]>,
    Q_values_stderr: &'a [f64],
    noise_factors: &'a [f64],
    Q_ell: &'a [f64],
    stderr_Q_ell: &'a [f64],
    condition_number: f64,
    warnings: Vec<String>,
}

/// Pretty JSON document with a trailing newline.
pub fn recovery_json(r: &RecoveryResult) -> String {
    let doc = RecoveryJson {
        n: r.n,
        k: r.k,
        epsilons: &r.epsilons,
        Q_values: r.q_values.iter().map(|&(x, q)| [x, q]).collect(),
        Q_values_stderr: &r.q_stderr,
        noise_factors: &r.noise_factors,
        Q_ell: &r.q_ell,
        stderr_Q_ell: &r.stderr_q_ell,
        condition_number: r.condition_number,
        warnings: r.warnings.iter().map(ToString::to_string).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    s.push('\n');
    s
}

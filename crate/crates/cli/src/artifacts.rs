//! On-disk artifacts: tokens.csv, entropy.csv, entropy.pgm, report.csv.
//!
//! Everything except timing.csv is a pure function of the config, so two
//! runs with the same config and seed produce byte-identical files.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use entropix_core::Grid;

use crate::error::CliError;
use crate::run::RunOutcome;

pub const TOKENS_CSV: &str = "tokens.csv";
pub const ENTROPY_CSV: &str = "entropy.csv";
pub const ENTROPY_PGM: &str = "entropy.pgm";
pub const REPORT_CSV: &str = "report.csv";
pub const TIMING_CSV: &str = "timing.csv";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn write_table<I, R, F>(path: &Path, header: &[String], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = F>,
    F: AsRef<[u8]>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

/// Grid as CSV: header `c0,c1,...`, then one line per grid row.
pub fn write_grid_csv<T: Display>(path: &Path, grid: &Grid<T>) -> Result<(), CliError> {
    let header: Vec<String> = (0..grid.cols()).map(|c| format!("c{c}")).collect();
    write_table(
        path,
        &header,
        grid.iter_rows()
            .map(|row| row.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
    )
}

/// `round(255 · ε / ln V)`, clamped to the 8-bit range.
pub fn entropy_pixel(eps: f64, vocab: usize) -> u8 {
    (255.0 * eps / (vocab as f64).ln())
        .round()
        .clamp(0.0, 255.0) as u8
}

/// Plain (ASCII) PGM: `P2`, width and height, maxval 255, one text line per
/// grid row.
pub fn pgm_string(entropy: &Grid<f64>, vocab: usize) -> String {
    let mut s = format!("P2\n{} {}\n255\n", entropy.cols(), entropy.rows());
    for row in entropy.iter_rows() {
        let px: Vec<String> = row
            .iter()
            .map(|&e| entropy_pixel(e, vocab).to_string())
            .collect();
        s.push_str(&px.join(" "));
        s.push('\n');
    }
    s
}

/// Unit-width bins `[0,1), [1,2), ...` up to `ln V`; the last bin is closed.
pub fn entropy_histogram(entropy: &[f64], vocab: usize) -> Vec<usize> {
    let bins = ((vocab as f64).ln().ceil() as usize).max(1);
    let mut h = vec![0; bins];
    for &e in entropy {
        h[(e.max(0.0).floor() as usize).min(bins - 1)] += 1;
    }
    h
}

/// `metric,value` rows for report.csv.
pub fn report_rows(out: &RunOutcome) -> Vec<(String, String)> {
    let mut rows: Vec<(String, String)> = Vec::new();
    let mut push = |k: &str, v: &dyn Display| rows.push((k.to_string(), v.to_string()));
    push("mode", &out.mode.name());
    push("seed", &out.seed);
    push("vocab", &out.vocab);
    push("rows", &out.tokens.rows());
    push("cols", &out.tokens.cols());
    push("tokens_emitted", &out.tokens_emitted);
    push("model_invocations", &out.model_invocations);
    push("entropy_mean", &out.mean_entropy());
    push("entropy_variance", &out.entropy_variance());
    push("temperature_mean", &out.mean_temperature());
    for (b, n) in entropy_histogram(out.entropy.as_slice(), out.vocab)
        .iter()
        .enumerate()
    {
        push(&format!("entropy_hist_{b}_{}", b + 1), n);
    }
    if let Some(counts) = &out.mask_counts {
        push("mask_steps", &counts.len());
        for (t, k) in counts.iter().enumerate() {
            push(&format!("mask_accepted_step_{}", t + 1), k);
        }
    }
    if let Some(means) = &out.scale_mean_entropy {
        push("scales", &means.len());
        for (s, m) in means.iter().enumerate() {
            push(&format!("scale_{}_entropy_mean", s + 1), m);
        }
    }
    if let Some(st) = &out.spec {
        push("iterations", &st.accepted_per_iteration.len());
        push("drafts_verified", &st.drafts_verified);
        push("drafts_accepted", &st.drafts_accepted);
        push("acceptance_rate", &st.mean_acceptance_rate());
        push("residual_resamples", &st.residual_resamples);
        push("fresh_samples", &st.fresh_samples);
    }
    rows
}

/// Writes the full artifact set and returns the paths written.
pub fn write_all(dir: &Path, out: &RunOutcome) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = write_entropy(dir, out)?;

    let tokens = dir.join(TOKENS_CSV);
    write_grid_csv(&tokens, &out.tokens)?;
    written.push(tokens);

    let report = dir.join(REPORT_CSV);
    write_table(
        &report,
        &["metric".into(), "value".into()],
        report_rows(out).into_iter().map(|(k, v)| [k, v]),
    )?;
    written.push(report);

    let timing = dir.join(TIMING_CSV);
    let mut f = fs::File::create(&timing).map_err(io_err(&timing))?;
    writeln!(
        f,
        "metric,value\nwall_time_seconds,{}",
        out.wall_time.as_secs_f64()
    )
    .map_err(io_err(&timing))?;
    written.push(timing);
    Ok(written)
}

/// Writes entropy.csv and entropy.pgm only.
pub fn write_entropy(dir: &Path, out: &RunOutcome) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join(ENTROPY_CSV);
    write_grid_csv(&csv_path, &out.entropy)?;
    let pgm_path = dir.join(ENTROPY_PGM);
    fs::write(&pgm_path, pgm_string(&out.entropy, out.vocab)).map_err(io_err(&pgm_path))?;
    Ok(vec![csv_path, pgm_path])
}

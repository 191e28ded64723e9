//! CSV and aligned-plaintext renderings of training logs, comparison tables
//! and exact solutions.
//!
//! Vectors (capacities, occupancies, actions) are written as `(a,b,...)` in a
//! single quoted CSV field. Floats use the shortest representation that
//! round-trips.

use std::fs;
use std::path::Path;

use battbank_core::{ComparisonTable, SolutionRow, TrainLog};

use crate::error::CliError;

pub fn format_tuple<T: std::fmt::Display>(values: &[T]) -> String {
    let inner: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    format!("({})", inner.join(","))
}

fn finish(writer: csv::Writer<Vec<u8>>) -> String {
    let bytes = writer.into_inner().expect("flushing to memory cannot fail");
    String::from_utf8(bytes).expect("CSV output is UTF-8")
}

/// Columns: `step, epsilon, beta, mean_abs_td, cum_reward`.
pub fn train_log_csv(log: &TrainLog) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["step", "epsilon", "beta", "mean_abs_td", "cum_reward"])
        .expect("in-memory write");
    for e in &log.entries {
        w.write_record([
            e.step.to_string(),
            e.epsilon.to_string(),
            e.beta.to_string(),
            e.mean_abs_td.to_string(),
            e.cum_reward.to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

/// Per-seed totals of `row`, aligned to `table.seeds`; `None` where that
/// seed's job failed.
fn aligned_totals(table: &ComparisonTable, size: &[u32], per_seed: &[f64]) -> Vec<Option<f64>> {
    let mut successes = per_seed.iter();
    table
        .seeds
        .iter()
        .map(|&seed| {
            let failed = table
                .failures
                .iter()
                .any(|f| f.size == size && f.seed == seed);
            if failed {
                None
            } else {
                successes.next().copied()
            }
        })
        .collect()
}

/// Columns: `size, policy, mean, stddev, seed_<s>...`. Failed jobs leave
/// their seed column empty.
pub fn comparison_csv(table: &ComparisonTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "size".to_string(),
        "policy".to_string(),
        "mean".to_string(),
        "stddev".to_string(),
    ];
    header.extend(table.seeds.iter().map(|s| format!("seed_{s}")));
    w.write_record(&header).expect("in-memory write");
    for row in &table.rows {
        let mut record = vec![
            format_tuple(&row.size),
            row.policy.clone(),
            row.mean.to_string(),
            row.stddev.to_string(),
        ];
        record.extend(
            aligned_totals(table, &row.size, &row.per_seed)
                .into_iter()
                .map(|t| t.map(|v| v.to_string()).unwrap_or_default()),
        );
        w.write_record(&record).expect("in-memory write");
    }
    finish(w)
}

/// Right-aligned text table with one line per size and policy, followed by
/// any failed jobs.
pub fn comparison_text(table: &ComparisonTable) -> String {
    let mut header = vec![
        "size".to_string(),
        "policy".to_string(),
        "mean".to_string(),
        "stddev".to_string(),
    ];
    header.extend(table.seeds.iter().map(|s| format!("seed {s}")));
    let mut lines = vec![header];
    for row in &table.rows {
        let mut cells = vec![
            format_tuple(&row.size),
            row.policy.clone(),
            format!("{:.2}", row.mean),
            format!("{:.2}", row.stddev),
        ];
        cells.extend(
            aligned_totals(table, &row.size, &row.per_seed)
                .into_iter()
                .map(|t| t.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into())),
        );
        lines.push(cells);
    }
    let columns = lines[0].len();
    let widths: Vec<usize> = (0..columns)
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for cells in &lines {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(cell, &width)| format!("{cell:>width$}"))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    }
    for f in &table.failures {
        out.push_str(&format!(
            "FAILED {} seed {}: {}\n",
            format_tuple(&f.size),
            f.seed,
            f.message
        ));
    }
    out
}

/// Columns: `index, x, b, best_action, value`.
pub fn solution_csv(rows: &[SolutionRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "x", "b", "best_action", "value"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.index.to_string(),
            r.x.to_string(),
            format_tuple(&r.b),
            format_tuple(&r.best_action.0),
            r.value.to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

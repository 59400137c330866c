//! CSV and JSON rendering of run results.

use std::fs;
use std::path::Path;

use crate::config::OutputFormat;
use crate::error::CliResult;
use crate::run::{Outcome, RunResult};

/// Number formatting shared by all CSV tables: twelve digits after the
/// decimal point for ordinary magnitudes, twelve significant digits in
/// scientific notation for very small or very large values. Negative zero
/// prints as zero.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let x = if x == 0.0 { 0.0 } else { x };
    let a = x.abs();
    if a == 0.0 || (1e-4..1e12).contains(&a) {
        format!("{x:.12}")
    } else {
        format!("{x:.11e}")
    }
}

fn csv_text(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8")
}

/// Renders the CSV tables of a result.
pub fn emit_csv(result: &RunResult) -> String {
    let f = format_number;
    let mut rows: Vec<Vec<String>> = Vec::new();
    match &result.outcome {
        Outcome::Scenario(s) => {
            rows.push(vec!["k".into(), "i".into(), "p_diag".into(), "p_checkpoint".into()]);
            for (k, (diag, check)) in s
                .data
                .diag_populations()
                .iter()
                .zip(s.data.checkpoint_populations())
                .enumerate()
            {
                for (i, (pd, pc)) in diag.iter().zip(check).enumerate() {
                    rows.push(vec![k.to_string(), i.to_string(), f(*pd), f(*pc)]);
                }
            }
            rows.push(vec!["Q".into(), f(s.kernel.q_value)]);
        }
        Outcome::Triangle(t) => {
            rows.push(vec!["abc".into(), "p_quantum".into(), "p_classical".into()]);
            for o in 0..8 {
                rows.push(vec![format!("{o:03b}"), f(t.p_quantum[o]), f(t.p_classical[o])]);
            }
            rows.push(vec!["Q".into(), f(t.fit.value)]);
        }
        Outcome::Sweep(s) => {
            rows.push(vec!["t0".into(), "tau".into(), "q".into()]);
            for (r, t0) in s.sweep.t0_values.iter().enumerate() {
                for (c, tau) in s.sweep.tau_values.iter().enumerate() {
                    rows.push(vec![f(*t0), f(*tau), f(s.sweep.q[r][c])]);
                }
            }
        }
        Outcome::LpSelftest(l) => {
            rows.push(vec![
                "instance".into(),
                "n_vars".into(),
                "n_rows".into(),
                "simplex".into(),
                "enumeration".into(),
            ]);
            for (i, c) in l.cases.iter().enumerate() {
                rows.push(vec![
                    i.to_string(),
                    c.n_vars.to_string(),
                    c.n_rows.to_string(),
                    f(c.simplex),
                    f(c.enumeration),
                ]);
            }
            rows.push(vec!["max_abs_diff".into(), f(l.max_abs_diff)]);
        }
    }
    csv_text(rows)
}

pub fn emit_json(result: &RunResult) -> String {
    let mut s = serde_json::to_string_pretty(result).expect("results serialize");
    s.push('\n');
    s
}

pub fn render(result: &RunResult, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => emit_csv(result),
        OutputFormat::Json => emit_json(result),
    }
}

/// Writes the rendered result to `path`.
pub fn write_output(text: &str, path: &Path) -> CliResult<()> {
    fs::write(path, text)?;
    Ok(())
}

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use super::bundle::SignalBundle;
use super::contradiction::{apply_signal_selection, Side};
use crate::error::{NifflerError, Result};
use crate::search::Row;

fn show(row: &Row) -> String {
    let cells: Vec<&str> = row.iter().map(|c| c.as_deref().unwrap_or("∅")).collect();
    format!("({})", cells.join(", "))
}

/// Walk the bundle's signals in order, asking which variant to keep.
///
/// Answers: `a`, `b`, `n` (neither) or `q` (stop). Signals that no longer
/// split the surviving views are skipped. Returns the surviving view ids.
pub fn run_stepper<R: BufRead, W: Write>(
    bundle: &SignalBundle,
    mut input: R,
    mut out: W,
) -> Result<BTreeSet<String>> {
    let io = |e: std::io::Error| NifflerError::io("<terminal>", e);
    let mut survivors: BTreeSet<String> = bundle.reduced_view_ids.iter().cloned().collect();
    writeln!(out, "{} candidate views", survivors.len()).map_err(io)?;
    let total = bundle.signals.len();
    'signals: for (i, signal) in bundle.signals.iter().enumerate() {
        if !signal.applies_to(&survivors) {
            continue;
        }
        writeln!(
            out,
            "\nsignal {}/{} on [{}], discrimination {:.2}",
            i + 1,
            total,
            signal.key_names.join(", "),
            signal.discrimination
        )
        .map_err(io)?;
        for s in &signal.samples {
            writeln!(out, "  {}:  a = {}  b = {}", show(&s.key_value), show(&s.row_a), show(&s.row_b))
                .map_err(io)?;
        }
        let live = |set: &[String]| -> Vec<String> {
            set.iter().filter(|v| survivors.contains(*v)).cloned().collect()
        };
        writeln!(out, "  a: {}", live(&signal.set_a).join(" ")).map_err(io)?;
        writeln!(out, "  b: {}", live(&signal.set_b).join(" ")).map_err(io)?;
        let side = loop {
            write!(out, "[a/b/n/q]> ").map_err(io)?;
            out.flush().map_err(io)?;
            let mut line = String::new();
            if input.read_line(&mut line).map_err(io)? == 0 {
                break 'signals;
            }
            match line.trim().to_ascii_lowercase().as_str() {
                "a" => break Side::A,
                "b" => break Side::B,
                "n" | "" => break Side::Neither,
                "q" => break 'signals,
                other => writeln!(out, "unrecognized answer {other:?}").map_err(io)?,
            }
        };
        survivors = apply_signal_selection(signal, side, &survivors);
        writeln!(out, "{} views remain", survivors.len()).map_err(io)?;
    }
    writeln!(out, "\nremaining: {}", survivors.iter().cloned().collect::<Vec<_>>().join(" ")).map_err(io)?;
    Ok(survivors)
}

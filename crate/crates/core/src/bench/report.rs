use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One result line: a preconditioner on one partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub mode: String,
    pub n_subdomains: usize,
    pub iterations: usize,
    pub kappa: f64,
    pub t_setup: f64,
    pub t_solve: f64,
    pub coarse_dim: usize,
    /// `None` for the one-level method.
    pub bound: Option<f64>,
    pub bound_ok: Option<bool>,
    /// Not part of the CSV; parsed rows report `true`.
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

pub const CSV_HEADER: &str = "mode,N,its,kappa,t_setup,t_solve,coarse_dim,bound,bound_ok";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn emit_report(rows: &[BenchRow], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut s = format!("{CSV_HEADER}\n");
            for r in rows {
                // `{}` on f64 prints the shortest representation that round-trips
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    r.mode,
                    r.n_subdomains,
                    r.iterations,
                    r.kappa,
                    r.t_setup,
                    r.t_solve,
                    r.coarse_dim,
                    opt(r.bound),
                    opt(r.bound_ok)
                );
            }
            s
        }
        ReportFormat::Markdown => markdown(rows),
    }
}

/// Side-by-side table with one column group per mode. Consecutive rows of
/// distinct modes share a line.
fn markdown(rows: &[BenchRow]) -> String {
    let mut modes: Vec<&str> = Vec::new();
    for r in rows {
        if !modes.contains(&r.mode.as_str()) {
            modes.push(&r.mode);
        }
    }
    let mut lines: Vec<Vec<&BenchRow>> = Vec::new();
    for r in rows {
        match lines.last_mut() {
            Some(l) if !l.iter().any(|x| x.mode == r.mode) => l.push(r),
            _ => lines.push(vec![r]),
        }
    }
    let mut s = String::from("|   |");
    for m in &modes {
        let _ = write!(s, " {} | | | | |", label(m));
    }
    s.push_str("\n|---|");
    for _ in &modes {
        s.push_str("---|---|---|---|---|");
    }
    s.push_str("\n| N |");
    for _ in &modes {
        s.push_str(" its | κ | t_setup | t_solve | bound |");
    }
    s.push('\n');
    for group in lines {
        let _ = write!(s, "| {} |", group[0].n_subdomains);
        for m in &modes {
            match group.iter().find(|r| r.mode == *m) {
                Some(r) => {
                    let bound = match (r.bound, r.bound_ok) {
                        (Some(b), Some(ok)) => format!("{b:.1}{}", if ok { "" } else { " ✗" }),
                        _ => "-".into(),
                    };
                    let _ = write!(
                        s,
                        " {} | {:.2} | {:.2} | {:.2} | {bound} |",
                        r.iterations, r.kappa, r.t_setup, r.t_solve
                    );
                }
                None => s.push_str(" | | | | |"),
            }
        }
        s.push('\n');
    }
    s
}

fn label(mode: &str) -> &str {
    match mode {
        "geneo" => "GenEO",
        "rgeneo" => "R-GenEO",
        "none" => "one-level",
        other => other,
    }
}

/// Reads rows written by [`emit_report`] in CSV form.
pub fn parse_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::parse("line 1", "missing report header")),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let loc = format!("line {}", i + 2);
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(Error::parse(loc, "expected 9 fields"));
            }
            let num = |k: usize| -> Result<f64> {
                f[k].parse()
                    .map_err(|_| Error::parse(&loc, format!("bad number `{}`", f[k])))
            };
            let int = |k: usize| -> Result<usize> {
                f[k].parse()
                    .map_err(|_| Error::parse(&loc, format!("bad count `{}`", f[k])))
            };
            Ok(BenchRow {
                mode: f[0].to_string(),
                n_subdomains: int(1)?,
                iterations: int(2)?,
                kappa: num(3)?,
                t_setup: num(4)?,
                t_solve: num(5)?,
                coarse_dim: int(6)?,
                bound: if f[7].is_empty() { None } else { Some(num(7)?) },
                bound_ok: match f[8] {
                    "" => None,
                    "true" => Some(true),
                    "false" => Some(false),
                    other => return Err(Error::parse(&loc, format!("bad flag `{other}`"))),
                },
                converged: true,
            })
        })
        .collect()
}

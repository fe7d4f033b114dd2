//! Tab-separated event logs and taxonomy edge lists.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{BanditError, Result};
use crate::hierarchy::Taxonomy;
use crate::types::{ArmId, ContextVector};

/// One historical impression: the context shown, the arm displayed and its reward.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedEvent {
    pub t: u64,
    pub displayed: ArmId,
    pub reward: f64,
    pub context: ContextVector,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| BanditError::Io(format!("{}: {e}", path.display())))
}

fn parse_err(line: usize, message: impl Into<String>) -> BanditError {
    BanditError::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_event_log(path: impl AsRef<Path>) -> Result<Vec<LoggedEvent>> {
    parse_event_log_str(&read(path.as_ref())?)
}

/// Parses an event log. The `#fields` header fixes the context dimension;
/// other `#` lines are comments.
pub fn parse_event_log_str(text: &str) -> Result<Vec<LoggedEvent>> {
    let mut dim: Option<usize> = None;
    let mut events: Vec<LoggedEvent> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#fields") {
            if dim.is_some() {
                return Err(parse_err(n, "duplicate #fields header"));
            }
            let cols: Vec<&str> = rest.split('\t').skip(1).collect();
            if cols.len() < 3 || cols[..3] != ["t", "arm", "reward"] {
                return Err(parse_err(n, "header must start with t, arm, reward"));
            }
            dim = Some(cols.len() - 3);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let d = dim.ok_or_else(|| parse_err(n, "data line before #fields header"))?;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 + d {
            return Err(parse_err(
                n,
                format!("expected {} columns, found {}", 3 + d, cols.len()),
            ));
        }
        let t: i64 = cols[0]
            .parse()
            .map_err(|_| parse_err(n, format!("timestamp `{}` is not an integer", cols[0])))?;
        if t < 0 {
            return Err(parse_err(n, format!("negative timestamp {t}")));
        }
        let t = t as u64;
        if let Some(prev) = events.last() {
            if t < prev.t {
                return Err(parse_err(n, format!("timestamp {t} precedes {}", prev.t)));
            }
        }
        let displayed = ArmId::new(cols[1]).map_err(|_| parse_err(n, "empty arm id"))?;
        let number = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(n, format!("{what} `{s}` is not a finite number")))
        };
        let reward = number(cols[2], "reward")?;
        let context = cols[3..]
            .iter()
            .map(|s| number(s, "context value"))
            .collect::<Result<Vec<_>>>()?;
        events.push(LoggedEvent {
            t,
            displayed,
            reward,
            context: ContextVector::new(context)?,
        });
    }
    Ok(events)
}

/// Serializes events with the shortest round-tripping decimal form.
pub fn format_event_log(events: &[LoggedEvent]) -> Result<String> {
    let dim = events.first().map_or(0, |e| e.context.dim());
    let mut out = String::from("#fields\tt\tarm\treward");
    for j in 1..=dim {
        write!(out, "\tx{j}").expect("string write");
    }
    out.push('\n');
    for e in events {
        e.context.ensure_dim(dim)?;
        write!(out, "{}\t{}\t{}", e.t, e.displayed, e.reward).expect("string write");
        for v in e.context.as_slice() {
            write!(out, "\t{v}").expect("string write");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_event_log(path: impl AsRef<Path>, events: &[LoggedEvent]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_event_log(events)?)
        .map_err(|e| BanditError::Io(format!("{}: {e}", path.display())))
}

pub fn parse_taxonomy(path: impl AsRef<Path>) -> Result<Taxonomy> {
    parse_taxonomy_str(&read(path.as_ref())?)
}

/// One `parent<TAB>child` edge per line; `#` lines are comments.
pub fn parse_taxonomy_str(text: &str) -> Result<Taxonomy> {
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(parse_err(
                i + 1,
                format!("expected parent<TAB>child, found {} columns", cols.len()),
            ));
        }
        let id = |s: &str| ArmId::new(s).map_err(|_| parse_err(i + 1, "empty node id"));
        edges.push((id(cols[0])?, id(cols[1])?));
    }
    Ok(Taxonomy::from_edges(edges)?)
}

pub fn format_taxonomy(t: &Taxonomy) -> String {
    t.edges()
        .iter()
        .map(|(p, c)| format!("{p}\t{c}\n"))
        .collect()
}

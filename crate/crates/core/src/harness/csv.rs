//! Bucketed metrics as CSV: `bucket,impressions,successes,ctr,cum_ctr`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{BanditError, Result};
use crate::types::{ratio, MetricsBucket};

pub const HEADER: &str = "bucket,impressions,successes,ctr,cum_ctr";

/// Marker for a ratio with no impressions behind it.
pub const UNDEFINED: &str = "undefined";

fn fmt_ratio(r: Option<f64>) -> String {
    r.map_or_else(|| UNDEFINED.to_string(), |v| format!("{v:.6}"))
}

pub fn format_csv(buckets: &[MetricsBucket]) -> String {
    let mut out = format!("{HEADER}\n");
    let (mut cum_i, mut cum_s) = (0u64, 0.0);
    for b in buckets {
        cum_i += b.impressions;
        cum_s += b.successes;
        writeln!(
            out,
            "{},{},{:.6},{},{}",
            b.bucket_index,
            b.impressions,
            b.successes,
            fmt_ratio(b.ctr()),
            fmt_ratio(ratio(cum_s, cum_i))
        )
        .expect("string write");
    }
    out
}

pub fn emit_csv(buckets: &[MetricsBucket], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_csv(buckets))
        .map_err(|e| BanditError::Io(format!("{}: {e}", path.display())))
}

/// Reads back the bucket, impressions and successes columns.
pub fn parse_csv(text: &str) -> Result<Vec<MetricsBucket>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => {
            return Err(BanditError::Parse {
                line: 1,
                message: format!("expected header `{HEADER}`"),
            })
        }
    }
    lines
        .map(|(i, line)| {
            let err = |m: &str| BanditError::Parse {
                line: i + 1,
                message: m.to_string(),
            };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(err("expected 5 columns"));
            }
            Ok(MetricsBucket {
                bucket_index: cols[0].parse().map_err(|_| err("bad bucket index"))?,
                impressions: cols[1].parse().map_err(|_| err("bad impressions"))?,
                successes: cols[2].parse().map_err(|_| err("bad successes"))?,
            })
        })
        .collect()
}

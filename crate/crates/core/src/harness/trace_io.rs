//! Trace CSV and summary key-value files.
//!
//! Trace files have the header `t,arm,delta,cum_regret,good_event` and one
//! row per round. Numbers use `.` as the decimal separator and Rust's
//! shortest round-trip formatting, so reruns produce identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::harness::RegretTrace;

pub const TRACE_HEADER: &str = "t,arm,delta,cum_regret,good_event";

pub fn trace_to_csv(trace: &RegretTrace) -> String {
    let mut out = String::with_capacity(32 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for t in 1..=trace.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            t,
            trace.arm_label(t),
            trace.deltas[t - 1],
            trace.cumulative[t - 1],
            u8::from(trace.good_event[t - 1])
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub arm: String,
    pub delta: f64,
    pub cum_regret: f64,
    pub good_event: bool,
}

fn trace_err(line: usize, message: impl Into<String>) -> Error {
    Error::Trace { line, message: message.into() }
}

fn parse_finite(field: &str, name: &str, line: usize) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| trace_err(line, format!("{name} `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(trace_err(line, format!("{name} must be finite")));
    }
    Ok(v)
}

/// Parse a trace file. Rounds must run 1, 2, 3, … without gaps.
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == TRACE_HEADER => {}
        Some(_) => return Err(trace_err(1, format!("expected header `{TRACE_HEADER}`"))),
        None => return Err(trace_err(1, "empty trace file")),
    }
    let mut rows = vec![];
    for (i, raw) in lines {
        let line = i + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 5 {
            return Err(trace_err(line, format!("expected 5 fields, found {}", fields.len())));
        }
        let t: u64 = fields[0].parse().map_err(|_| trace_err(line, format!("round `{}` is not an integer", fields[0])))?;
        if t != rows.len() as u64 + 1 {
            return Err(trace_err(line, format!("expected round {}, found {t}", rows.len() + 1)));
        }
        let arm = fields[1];
        if arm.is_empty() {
            return Err(trace_err(line, "empty arm label"));
        }
        for part in arm.split(';') {
            parse_finite(part, "arm coordinate", line)?;
        }
        let good_event = match fields[4] {
            "0" => false,
            "1" => true,
            other => return Err(trace_err(line, format!("good_event `{other}` must be 0 or 1"))),
        };
        rows.push(TraceRow {
            t,
            arm: arm.to_string(),
            delta: parse_finite(fields[2], "delta", line)?,
            cum_regret: parse_finite(fields[3], "cum_regret", line)?,
            good_event,
        });
    }
    if rows.is_empty() {
        return Err(trace_err(1, "trace has no rows"));
    }
    Ok(rows)
}

/// Render `key=value` lines in the given order.
pub fn summary_to_text(entries: &[(String, String)]) -> String {
    entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn parse_summary(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let (k, v) = raw
            .split_once('=')
            .ok_or_else(|| trace_err(i + 1, "summary line is not key=value"))?;
        if out.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(trace_err(i + 1, format!("duplicate key `{}`", k.trim())));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvModel, Noise, Norm};
    use crate::harness::{run_episode, Algorithm, PolicySpec};

    #[test]
    fn csv_round_trip() {
        let env = EnvModel::cone(2, 1, 1.0, Norm::L2, vec![0.37, 0.62], 1.0, Noise::Bernoulli).unwrap();
        for a in [Algorithm::McabA, Algorithm::MzoomB] {
            let ep = run_episode(&env, a.variant(), &PolicySpec::new(a), 200, 1).unwrap();
            let text = trace_to_csv(&ep.trace);
            let rows = parse_trace_csv(&text).unwrap();
            assert_eq!(rows.len(), 200);
            for (i, r) in rows.iter().enumerate() {
                assert_eq!(r.delta, ep.trace.deltas[i]);
                assert_eq!(r.cum_regret, ep.trace.cumulative[i]);
                assert_eq!(r.arm, ep.trace.arm_label(i + 1));
            }
        }
    }

    #[test]
    fn malformed_traces() {
        assert!(parse_trace_csv("").is_err());
        assert!(parse_trace_csv("t,arm\n").is_err());
        assert!(parse_trace_csv(&format!("{TRACE_HEADER}\n")).is_err());
        let bad = [
            "1,0,0.1,0.1\n",
            "2,0,0.1,0.1,1\n",
            "1,0,x,0.1,1\n",
            "1,0,0.1,0.1,2\n",
            "1,,0.1,0.1,1\n",
            "1,0;a,0.1,0.1,1\n",
            "1,0,NaN,0.1,1\n",
        ];
        for row in bad {
            let e = parse_trace_csv(&format!("{TRACE_HEADER}\n{row}")).unwrap_err();
            assert!(matches!(e, Error::Trace { line: 2, .. }), "{row}: {e}");
        }
        let ok = parse_trace_csv(&format!("{TRACE_HEADER}\r\n1,0.5;0.25,0,0,1\r\n")).unwrap();
        assert_eq!(ok[0].arm, "0.5;0.25");
    }

    #[test]
    fn summary_round_trip() {
        let entries = vec![("a".to_string(), "1".to_string()), ("slope".to_string(), "0.75".to_string())];
        let parsed = parse_summary(&summary_to_text(&entries)).unwrap();
        assert_eq!(parsed["slope"], "0.75");
        assert!(parse_summary("a=1\na=2\n").is_err());
        assert!(parse_summary("novalue\n").is_err());
    }
}

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::CellSummary;
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 12] = [
    "delta",
    "K",
    "gap",
    "alpha",
    "noise_p",
    "algo",
    "reps",
    "success_rate",
    "failure_ratio",
    "mean_stop_time",
    "stop_time_se",
    "mean_rejection_rate",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::UnsupportedFormat(s.to_string())),
        }
    }
}

/// Rounds to 6 significant digits and prints the shortest form of the result.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("valid float");
    rounded.to_string()
}

fn sig6(x: f64) -> Value {
    let v: f64 = format_sig6(x).parse().unwrap_or(x);
    json!(v)
}

/// Provenance written ahead of the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub seed: u64,
    pub build: String,
    pub config: Value,
}

fn rows(summaries: &[CellSummary]) -> Vec<Value> {
    summaries
        .iter()
        .flat_map(|c| {
            c.algos.iter().map(move |a| {
                json!({
                    "delta": sig6(c.delta),
                    "K": c.k,
                    "gap": sig6(c.gap),
                    "alpha": sig6(c.alpha),
                    "noise_p": sig6(c.noise_p),
                    "algo": a.algo,
                    "reps": a.reps,
                    "success_rate": sig6(a.success_rate),
                    "failure_ratio": sig6(a.failure_ratio),
                    "mean_stop_time": sig6(a.mean_stop_time),
                    "stop_time_se": sig6(a.stop_time_se),
                    "mean_rejection_rate": sig6(a.mean_rejection_rate),
                })
            })
        })
        .collect()
}

/// Renders summaries as CSV (one row per algorithm per cell) or as a JSON
/// array of row objects with the same fields.
pub fn emit_results(summaries: &[CellSummary], format: Format) -> Result<String> {
    emit_document(summaries, format, None)
}

/// Like [`emit_results`], with an optional provenance header: `#` comment
/// lines for CSV, a `meta` object wrapping the rows for JSON.
pub fn emit_document(
    summaries: &[CellSummary],
    format: Format,
    header: Option<&RunHeader>,
) -> Result<String> {
    if summaries.is_empty() {
        return Err(Error::EmptyInput);
    }
    match format {
        Format::Csv => {
            let mut out = String::new();
            if let Some(h) = header {
                let _ = writeln!(out, "# seed: {}", h.seed);
                let _ = writeln!(out, "# build: {}", h.build);
                let _ = writeln!(out, "# config: {}", h.config);
            }
            out.push_str(&CSV_COLUMNS.join(","));
            out.push('\n');
            for c in summaries {
                for a in &c.algos {
                    let fields = [
                        format_sig6(c.delta),
                        c.k.to_string(),
                        format_sig6(c.gap),
                        format_sig6(c.alpha),
                        format_sig6(c.noise_p),
                        csv_field(&a.algo),
                        a.reps.to_string(),
                        format_sig6(a.success_rate),
                        format_sig6(a.failure_ratio),
                        format_sig6(a.mean_stop_time),
                        format_sig6(a.stop_time_se),
                        format_sig6(a.mean_rejection_rate),
                    ];
                    out.push_str(&fields.join(","));
                    out.push('\n');
                }
            }
            Ok(out)
        }
        Format::Json => {
            let body = Value::Array(rows(summaries));
            let doc = match header {
                Some(h) => json!({ "meta": h, "results": body }),
                None => body,
            };
            Ok(serde_json::to_string_pretty(&doc).expect("plain values") + "\n")
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::AlgoSummary;
    use crate::user::RhoPolicy;

    fn summary() -> CellSummary {
        let algo = |name: &str, sr: f64| AlgoSummary {
            algo: name.into(),
            reps: 1000,
            success_rate: sr,
            failure_ratio: (1.0 - sr) / 0.1,
            mean_stop_time: 405.123456789,
            stop_time_se: 3.25159265,
            mean_rejection_rate: 0.00812345678,
            budget_exhausted_rate: 0.0,
        };
        CellSummary {
            delta: 0.1,
            k: 2,
            gap: 0.5,
            alpha: 1.0,
            rho: RhoPolicy::LinearAcceptance,
            noise_p: 0.0,
            shared_phase1: false,
            algos: vec![algo("bair", 0.999), algo("bair[n1=k,m=2]", 0.786)],
        }
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig6(405.123456789), "405.123");
        assert_eq!(format_sig6(0.00812345678), "0.00812346");
        assert_eq!(format_sig6(0.1), "0.1");
        assert_eq!(format_sig6(1234567.0), "1234570");
        assert_eq!(format_sig6(0.0), "0");
    }

    #[test]
    fn csv_layout() {
        let text = emit_results(&[summary()], Format::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "delta,K,gap,alpha,noise_p,algo,reps,success_rate,failure_ratio,mean_stop_time,stop_time_se,mean_rejection_rate"
        );
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[1],
            "0.1,2,0.5,1,0,bair,1000,0.999,0.01,405.123,3.25159,0.00812346"
        );
        assert!(lines[2].contains("\"bair[n1=k,m=2]\""));
    }

    #[test]
    fn json_round_trip() {
        let s = summary();
        let text = emit_results(std::slice::from_ref(&s), Format::Json).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        let row = &v[0];
        assert_eq!(row["algo"], "bair");
        let close = |a: f64, b: f64| ((a - b) / b).abs() < 5e-6;
        assert!(close(
            row["mean_stop_time"].as_f64().unwrap(),
            s.algos[0].mean_stop_time
        ));
        assert!(close(
            row["mean_rejection_rate"].as_f64().unwrap(),
            s.algos[0].mean_rejection_rate
        ));
        assert_eq!(row["K"], 2);
    }

    #[test]
    fn header_and_errors() {
        let h = RunHeader {
            seed: 7,
            build: "v0.1.0".into(),
            config: json!({"k": 2}),
        };
        let csv = emit_document(&[summary()], Format::Csv, Some(&h)).unwrap();
        assert!(csv.starts_with("# seed: 7\n# build: v0.1.0\n# config: {\"k\":2}\ndelta,"));
        let js: Value =
            serde_json::from_str(&emit_document(&[summary()], Format::Json, Some(&h)).unwrap())
                .unwrap();
        assert_eq!(js["meta"]["seed"], 7);
        assert_eq!(js["results"].as_array().unwrap().len(), 2);
        assert_eq!(emit_results(&[], Format::Csv), Err(Error::EmptyInput));
        assert_eq!(
            "xml".parse::<Format>(),
            Err(Error::UnsupportedFormat("xml".into()))
        );
    }
}

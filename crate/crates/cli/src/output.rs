//! Output schemas. Floats use the shortest round-trip decimal form; absent values are empty
//! CSV fields or JSON nulls.

use serde::Serialize;

use apnorm::growth::{GrowthReport, SweepRow};
use apnorm::lower_cert::Certificate;

pub const SWEEP_COLUMNS: [&str; 11] = [
    "phase",
    "m",
    "p",
    "lambda",
    "grid_n",
    "norm",
    "tail_bound",
    "cert_lower",
    "upper_bound",
    "theory_lower_exp",
    "theory_upper_exp",
];

pub const CERT_COLUMNS: [&str; 14] = [
    "phase",
    "m",
    "p",
    "lambda",
    "delta_lambda",
    "c_fit",
    "measure",
    "bound",
    "exponent",
    "norm",
    "grid_n",
    "pass_rate",
    "samples",
    "sound",
];

fn float(x: f64) -> String {
    format!("{x:?}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

fn header(command: &str, metadata: &[(String, String)]) -> String {
    let mut out = format!("# apnorm {}\n# command={command}\n", apnorm::VERSION);
    for (k, v) in metadata {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out
}

fn csv_block(columns: &[&str], records: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    writer.write_record(columns).expect("in-memory write");
    for record in records {
        writer.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Summary lines shared by the CSV trailer and console output.
pub fn summary_lines(reports: &[Result<GrowthReport, String>], rows: &[SweepRow]) -> Vec<String> {
    let mut out = Vec::new();
    for report in reports {
        match report {
            Ok(r) => {
                let mut line = format!(
                    "p={} exponent={} intercept={} residual_rms={} rows_used={} theory_lower_exp={} theory_upper_exp={}",
                    float(r.p),
                    float(r.exponent),
                    float(r.intercept),
                    float(r.residual_rms),
                    r.rows_used,
                    opt_float(r.theory_lower_exp),
                    opt_float(r.theory_upper_exp),
                );
                if let Some(c) = r.cert_exponent {
                    line.push_str(&format!(" cert_exponent={}", float(c)));
                }
                if let Some(u) = r.upper_bound_exponent {
                    line.push_str(&format!(" upper_bound_exponent={}", float(u)));
                }
                if let Some(max) = r.theta.iter().map(|t| t.ratio).reduce(f64::max) {
                    line.push_str(&format!(" theta_ratio_max={}", float(max)));
                }
                out.push(line);
            }
            Err(e) => out.push(format!("fit unavailable: {e}")),
        }
    }
    for r in rows {
        if let Some(e) = &r.error {
            out.push(format!("failed p={} lambda={}: {e}", float(r.p), float(r.lambda)));
        }
    }
    out
}

pub fn sweep_csv(metadata: &[(String, String)], rows: &[SweepRow], summary: &[String]) -> String {
    let mut out = header("sweep", metadata);
    out.push_str(&csv_block(
        &SWEEP_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.phase.clone(),
                r.m.to_string(),
                float(r.p),
                float(r.lambda),
                opt(r.grid_n),
                opt_float(r.norm),
                opt_float(r.tail_bound),
                opt_float(r.cert_lower),
                opt_float(r.upper_bound),
                opt_float(r.theory_lower_exp),
                opt_float(r.theory_upper_exp),
            ]
        }),
    ));
    out.push_str("# summary\n");
    for line in summary {
        out.push_str(&format!("# {line}\n"));
    }
    out
}

#[derive(Serialize)]
struct JsonDocument<'a, T: Serialize> {
    version: &'a str,
    command: &'a str,
    metadata: &'a [(String, String)],
    records: &'a [T],
    summary: &'a [String],
}

pub fn json<T: Serialize>(command: &str, metadata: &[(String, String)], records: &[T], summary: &[String]) -> String {
    let doc = JsonDocument { version: apnorm::VERSION, command, metadata, records, summary };
    let mut text = serde_json::to_string_pretty(&doc).expect("serialisable records");
    text.push('\n');
    text
}

pub fn certificates_csv(metadata: &[(String, String)], certs: &[Certificate], summary: &[String]) -> String {
    let mut out = header("certify", metadata);
    out.push_str(&csv_block(
        &CERT_COLUMNS,
        certs.iter().map(|c| {
            vec![
                c.phase.clone(),
                c.m.to_string(),
                float(c.p),
                float(c.lambda),
                float(c.delta_lambda),
                float(c.c_fit),
                float(c.measure),
                float(c.bound),
                opt_float(c.exponent),
                opt_float(c.norm),
                opt(c.grid_n),
                opt_float(c.pass_rate),
                c.samples.to_string(),
                c.sound.to_string(),
            ]
        }),
    ));
    out.push_str("# summary\n");
    for line in summary {
        out.push_str(&format!("# {line}\n"));
    }
    out
}

/// File-name-safe form of a phase key.
pub fn slug(text: &str) -> String {
    let mut out: String = text.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect();
    while out.contains("__") {
        out = out.replace("__", "_");
    }
    out.trim_matches('_').to_string()
}

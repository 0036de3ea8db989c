//! Structured run reports.
//!
//! The machine format is a JSON document mirroring [`Report`]; the human
//! format is derived from it. Machine reports omit wall-clock timing so that
//! identical configurations and inputs produce bit-identical output; any
//! randomized sub-check records its seed in the report.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub inputs_digest: String,
    pub result: serde_json::Value,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

impl Report {
    pub fn new(command: impl Into<String>, digest_input: &str, result: serde_json::Value) -> Self {
        Self {
            command: command.into(),
            inputs_digest: fnv1a64(digest_input),
            result,
            warnings: Vec::new(),
            seed: None,
            timing_ms: None,
        }
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn to_machine_json(&self) -> String {
        let mut stripped = self.clone();
        stripped.timing_ms = None;
        serde_json::to_string_pretty(&stripped).expect("report serialization")
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command: {}\n", self.command));
        out.push_str(&format!("inputs:  {}\n", self.inputs_digest));
        if let Some(seed) = self.seed {
            out.push_str(&format!("seed:    {seed}\n"));
        }
        out.push_str("result:\n");
        let pretty = serde_json::to_string_pretty(&self.result).expect("result serialization");
        for line in pretty.lines() {
            out.push_str("  ");
            out.push_str(line);
            out.push('\n');
        }
        if self.warnings.is_empty() {
            out.push_str("warnings: none\n");
        } else {
            out.push_str("warnings:\n");
            for w in &self.warnings {
                out.push_str(&format!("  - {w}\n"));
            }
        }
        if let Some(ms) = self.timing_ms {
            out.push_str(&format!("time:    {:.3} s\n", ms as f64 / 1000.0));
        }
        out
    }
}

/// FNV-1a 64-bit digest, hex encoded. Stable, dependency-free fingerprint of
/// the command inputs.
pub fn fnv1a64(data: &str) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in data.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("fnv:{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn machine_report_round_trips_losslessly() {
        let mut report = Report::new(
            "bec",
            "fixture=bhz mass=1",
            serde_json::json!({"bulk": 1, "edge": 1, "equal": true}),
        );
        report.warn("something mild");
        report.seed = Some(42);
        report.timing_ms = Some(1234);
        let json = report.to_machine_json();
        let back: Report = serde_json::from_str(&json).unwrap();
        // Timing is stripped from the machine form; everything else survives.
        let mut expect = report.clone();
        expect.timing_ms = None;
        assert_eq!(back, expect);
        // Re-serializing is bit-identical.
        assert_eq!(back.to_machine_json(), json);
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(fnv1a64("abc"), fnv1a64("abc"));
        assert_ne!(fnv1a64("abc"), fnv1a64("abd"));
    }
}

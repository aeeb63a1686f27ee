//! Run reports: the JSON artifact, the summary table, and the CSV view.

use std::collections::BTreeMap;

use serde::Serialize;

/// One checked inequality or identity. `pass` is true iff
/// `margin >= -sigma_band`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub sigma_band: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// A `lhs ≥ rhs` check with a statistical band on the slack.
    pub fn at_least(name: &str, lhs: f64, rhs: f64, band: f64) -> Self {
        let margin = lhs - rhs;
        CheckRecord {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            sigma_band: band,
            pass: margin >= -band,
        }
    }

    /// A `lhs ≤ rhs` check with a statistical band on the slack.
    pub fn at_most(name: &str, lhs: f64, rhs: f64, band: f64) -> Self {
        let margin = rhs - lhs;
        CheckRecord {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            sigma_band: band,
            pass: margin >= -band,
        }
    }

    /// A `lhs = rhs` check within a band; the margin is the negated
    /// residual, so the pass rule is the same as for the one-sided forms.
    pub fn equal_within(name: &str, lhs: f64, rhs: f64, band: f64) -> Self {
        let margin = 0.0 - (lhs - rhs).abs();
        CheckRecord {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            sigma_band: band,
            pass: margin >= -band,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub records: Vec<CheckRecord>,
    pub pass: bool,
    pub wall_time_seconds: f64,
}

impl RunReport {
    pub fn new(
        experiment: String,
        seed: u64,
        config: BTreeMap<String, String>,
        records: Vec<CheckRecord>,
    ) -> Self {
        let pass = records.iter().all(|r| r.pass);
        RunReport {
            experiment,
            version: thermoclock_core::VERSION.to_string(),
            seed,
            config,
            records,
            pass,
            wall_time_seconds: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// Fixed-layout summary: one row per check, columns padded to constant
    /// widths. Covered by a golden-file test; widen only deliberately.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("experiment: {}\n", self.experiment));
        out.push_str(&format!("seed: {}\n", self.seed));
        out.push_str(&format!("version: {}\n\n", self.version));
        out.push_str(&format!(
            "{:<26} {:>14} {:>14} {:>14} {:>12}  {}\n",
            "check", "lhs", "rhs", "margin", "band", "result"
        ));
        for r in &self.records {
            out.push_str(&format!(
                "{:<26} {:>14} {:>14} {:>14} {:>12}  {}\n",
                r.name,
                fmt_num(r.lhs),
                fmt_num(r.rhs),
                fmt_num(r.margin),
                fmt_num(r.sigma_band),
                if r.pass { "PASS" } else { "FAIL" }
            ));
        }
        let passed = self.records.iter().filter(|r| r.pass).count();
        out.push_str(&format!(
            "\noverall: {} ({passed}/{} checks)\n",
            if self.pass { "PASS" } else { "FAIL" },
            self.records.len()
        ));
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,lhs,rhs,margin,sigma_band,pass\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.name, r.lhs, r.rhs, r.margin, r.sigma_band, r.pass
            ));
        }
        out
    }
}

fn fmt_num(x: f64) -> String {
    // Normalizes -0.0 so equal-within checks with a zero residual print
    // the same on every code path.
    format!("{:.5e}", x + 0.0)
}

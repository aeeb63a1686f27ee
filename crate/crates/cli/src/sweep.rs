//! The `sweep` verb: one run per axis value, aggregated into a single CSV.

use std::collections::BTreeMap;

use thermoclock_core::{Error, Result};

use crate::config::Config;
use crate::experiments::{self, RunOutput};

pub struct SweepOutcome {
    /// One line per (value, run) in axis order.
    pub summary: Vec<String>,
    pub csv: String,
    /// Worst per-point exit code (0 pass, 1 check failure, 2 config, 3 numerical).
    pub worst: i32,
}

fn render_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn run_point(base: &BTreeMap<String, String>, axis: &str, value: f64) -> Result<RunOutput> {
    let mut map = base.clone();
    map.insert(axis.to_string(), render_value(value));
    let cfg = Config::from_map(map);
    experiments::prepare(&cfg)?.execute()
}

pub fn run_sweep(
    base: &Config,
    axis: &str,
    values: &[f64],
    parallel: usize,
) -> Result<SweepOutcome> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("sweep needs a nonempty values list".into()));
    }
    // Probe the base config once so axis typos fail fast with a named key.
    let base_map = {
        let mut map = BTreeMap::new();
        let probe = experiments::prepare(base)?;
        for (k, v) in &probe.echo {
            map.insert(k.clone(), v.clone());
        }
        if !map.contains_key(axis) {
            return Err(Error::InvalidParameter(format!(
                "sweep axis `{axis}` is not a config field of experiment {}",
                probe.name
            )));
        }
        map
    };

    let mut results: Vec<Option<Result<RunOutput>>> = (0..values.len()).map(|_| None).collect();
    let workers = parallel.max(1).min(values.len());
    if workers == 1 {
        for (slot, &value) in results.iter_mut().zip(values) {
            *slot = Some(run_point(&base_map, axis, value));
        }
    } else {
        let base_ref = &base_map;
        std::thread::scope(|scope| {
            let chunks: Vec<_> =
                results.chunks_mut(values.len().div_ceil(workers)).collect();
            let mut offset = 0;
            for chunk in chunks {
                let len = chunk.len();
                let vals = &values[offset..offset + len];
                scope.spawn(move || {
                    for (slot, &value) in chunk.iter_mut().zip(vals) {
                        *slot = Some(run_point(base_ref, axis, value));
                    }
                });
                offset += len;
            }
        });
    }

    let mut csv = String::from("value,check,lhs,rhs,margin,sigma_band,pass\n");
    let mut summary = Vec::new();
    let mut worst = 0;
    for (&value, result) in values.iter().zip(results) {
        let rendered = render_value(value);
        match result.expect("every sweep slot is filled") {
            Ok(output) => {
                let passed = output.report.records.iter().filter(|r| r.pass).count();
                let total = output.report.records.len();
                let ok = output.report.pass;
                summary.push(format!(
                    "{axis}={rendered}: {} ({passed}/{total} checks)",
                    if ok { "PASS" } else { "FAIL" }
                ));
                if !ok {
                    worst = worst.max(1);
                }
                for r in &output.report.records {
                    csv.push_str(&format!(
                        "{rendered},{},{},{},{},{},{}\n",
                        r.name, r.lhs, r.rhs, r.margin, r.sigma_band, r.pass
                    ));
                }
            }
            Err(e) => {
                summary.push(format!("{axis}={rendered}: ERROR {e}"));
                worst = worst.max(crate::exit_code(&e));
            }
        }
    }
    Ok(SweepOutcome { summary, csv, worst })
}

pub const PLOT_SWEEP: &str = r#"#!/usr/bin/env python3
"""Plots each check's lhs against the swept value on log-log axes."""
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

series = defaultdict(list)
for r in csv.DictReader(open("sweep.csv")):
    series[r["check"]].append((float(r["value"]), float(r["lhs"])))

for name, points in sorted(series.items()):
    points.sort()
    plt.loglog([p[0] for p in points], [p[1] for p in points], marker="o", label=name)
plt.xlabel("swept value")
plt.ylabel("lhs")
plt.legend()
plt.savefig("sweep.png", dpi=150)
"#;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NlwError, Result};
use crate::functionals::grid::RadialGrid;
use crate::functionals::sampler::{sample_state, SamplerConfig};
use crate::functionals::variational::{check_all, Lemma, Thresholds, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub lemma: Lemma,
    pub sample_seed: u64,
    pub hypothesis_margin: f64,
    pub conclusion_margin: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaTally {
    pub hypothesis_hits: usize,
    pub falsifications: usize,
    pub min_conclusion_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub samples: usize,
    pub slack: f64,
    pub tallies: BTreeMap<Lemma, LemmaTally>,
    /// Rows whose hypothesis was met, in sample order.
    pub rows: Vec<SuiteRow>,
}

impl SuiteReport {
    pub fn falsifications(&self) -> usize {
        self.tallies.values().map(|t| t.falsifications).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lemma,sample_seed,hypothesis_margin,conclusion_margin,verdict\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:.9e},{:.9e},{}",
                r.lemma.label(),
                r.sample_seed,
                r.hypothesis_margin,
                r.conclusion_margin,
                r.verdict.label()
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| NlwError::io(path, e))
    }
}

/// Evaluates every inequality on `count` sampled states; sample i uses seed
/// `base_seed + i`, so the report is independent of the thread count.
pub fn run_property_suite(
    grid: Arc<RadialGrid>,
    th: &Thresholds,
    sampler: &SamplerConfig,
    base_seed: u64,
    count: usize,
) -> Result<SuiteReport> {
    let per_sample: Vec<Result<Vec<SuiteRow>>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i as u64);
            let state = sample_state(grid.clone(), seed, sampler);
            let rep = check_all(&state, th)?;
            Ok(rep
                .outcomes
                .iter()
                .map(|o| SuiteRow {
                    lemma: o.lemma,
                    sample_seed: seed,
                    hypothesis_margin: o.hypothesis_margin,
                    conclusion_margin: o.conclusion_margin,
                    verdict: o.verdict,
                })
                .collect())
        })
        .collect();
    let mut tallies: BTreeMap<Lemma, LemmaTally> = Lemma::ALL.iter().map(|&l| (l, LemmaTally::default())).collect();
    let mut rows = Vec::new();
    for sample in per_sample {
        for row in sample? {
            if row.verdict == Verdict::NotApplicable {
                continue;
            }
            let t = tallies.entry(row.lemma).or_default();
            t.hypothesis_hits += 1;
            if row.verdict == Verdict::Falsified {
                t.falsifications += 1;
            }
            t.min_conclusion_margin = Some(match t.min_conclusion_margin {
                Some(m) => m.min(row.conclusion_margin),
                None => row.conclusion_margin,
            });
            rows.push(row);
        }
    }
    Ok(SuiteReport {
        samples: count,
        slack: th.slack,
        tallies,
        rows,
    })
}

//! Spectrum-based fault localization.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::exec::TestResult;
use crate::lang::StatementId;

/// Execution counts of one statement over a test run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub statement: StatementId,
    /// failing tests executing the statement
    pub ef: u32,
    /// passing tests executing the statement
    pub ep: u32,
    /// failing tests not executing it
    pub nf: u32,
    /// passing tests not executing it
    pub np: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Tarantula,
    #[default]
    Ochiai,
    Jaccard,
    Ample,
    Naish1,
    Naish2,
    GP13,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        MetricKind::Tarantula,
        MetricKind::Ochiai,
        MetricKind::Jaccard,
        MetricKind::Ample,
        MetricKind::Naish1,
        MetricKind::Naish2,
        MetricKind::GP13,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Tarantula => "tarantula",
            MetricKind::Ochiai => "ochiai",
            MetricKind::Jaccard => "jaccard",
            MetricKind::Ample => "ample",
            MetricKind::Naish1 => "naish1",
            MetricKind::Naish2 => "naish2",
            MetricKind::GP13 => "gp13",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        MetricKind::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

/// Statements in decreasing suspiciousness, ties by ascending id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub metric: MetricKind,
    pub entries: Vec<(StatementId, f64)>,
}

impl Ranking {
    pub fn ids(&self) -> impl Iterator<Item = StatementId> + '_ {
        self.entries.iter().map(|(id, _)| *id)
    }

    pub fn score_of(&self, id: StatementId) -> Option<f64> {
        self.entries.iter().find(|(s, _)| *s == id).map(|(_, v)| *v)
    }
}

/// One row per statement executed by at least one test, in id order.
pub fn build_spectrum(results: &[TestResult]) -> Vec<SpectrumRow> {
    let failing = results.iter().filter(|r| !r.passed()).count() as u32;
    let passing = results.len() as u32 - failing;
    let mut counts: BTreeMap<StatementId, (u32, u32)> = BTreeMap::new();
    for r in results {
        for id in &r.covered {
            let entry = counts.entry(*id).or_default();
            if r.passed() {
                entry.1 += 1;
            } else {
                entry.0 += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|(statement, (ef, ep))| SpectrumRow {
            statement,
            ef,
            ep,
            nf: failing - ef,
            np: passing - ep,
        })
        .collect()
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn score(row: &SpectrumRow, metric: MetricKind) -> f64 {
    let (ef, ep, nf, np) = (row.ef as f64, row.ep as f64, row.nf as f64, row.np as f64);
    match metric {
        MetricKind::Tarantula => {
            let fail = ratio(ef, ef + nf);
            let pass = ratio(ep, ep + np);
            ratio(fail, fail + pass)
        }
        MetricKind::Ochiai => ratio(ef, ((ef + ep) * (ef + nf)).sqrt()),
        MetricKind::Jaccard => ratio(ef, ef + ep + nf),
        MetricKind::Ample => (ratio(ef, ef + nf) - ratio(ep, ep + np)).abs(),
        MetricKind::Naish1 => {
            if row.ef > 0 {
                -1.0
            } else {
                np
            }
        }
        MetricKind::Naish2 => ef - ratio(ep, ep + np + 1.0),
        MetricKind::GP13 => ef * (1.0 + ratio(1.0, 2.0 * ep + ef)),
    }
}

pub fn rank(spectrum: &[SpectrumRow], metric: MetricKind) -> Ranking {
    let mut entries: Vec<(StatementId, f64)> = spectrum
        .iter()
        .map(|r| (r.statement, score(r, metric)))
        .collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ranking { metric, entries }
}

/// Weights for sampling mutation targets from the statements executed by a
/// failing test: scores below zero count as zero, and if nothing is left
/// with a positive weight every such statement is equally likely.
pub fn sampling_weights(spectrum: &[SpectrumRow], metric: MetricKind) -> Vec<(StatementId, f64)> {
    let mut weights: Vec<(StatementId, f64)> = spectrum
        .iter()
        .filter(|r| r.ef > 0)
        .map(|r| (r.statement, score(r, metric).max(0.0)))
        .collect();
    if weights.iter().all(|(_, w)| *w == 0.0) {
        for (_, w) in &mut weights {
            *w = 1.0;
        }
    }
    weights
}

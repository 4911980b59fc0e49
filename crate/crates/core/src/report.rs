//! Aggregation of experiment records into fixability, overlap, timing and
//! under-specification summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{Correctness, Difficulty, ExperimentRecord, Labels, PatchLabel, Readability};
use crate::lang::EngineKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("duplicate job for bug {bundle} and engine {engine}")]
    DuplicateJob { bundle: String, engine: EngineKind },
    #[error("fixture line {line}: {message}")]
    Fixture { line: usize, message: String },
}

/// Whether one engine fixed one bug.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixEntry {
    pub bundle: String,
    pub engine: EngineKind,
    pub fixed: bool,
}

impl From<&ExperimentRecord> for FixEntry {
    fn from(r: &ExperimentRecord) -> Self {
        FixEntry {
            bundle: r.bundle.clone(),
            engine: r.engine,
            fixed: r.fixed(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixabilityTable {
    pub rows: BTreeMap<String, BTreeMap<EngineKind, bool>>,
    pub totals: BTreeMap<EngineKind, usize>,
    pub union_fixed: usize,
}

impl FixabilityTable {
    pub fn total(&self, engine: EngineKind) -> usize {
        self.totals.get(&engine).copied().unwrap_or(0)
    }

    pub fn fixed_by(&self, bundle: &str, engine: EngineKind) -> bool {
        self.rows
            .get(bundle)
            .and_then(|r| r.get(&engine))
            .copied()
            .unwrap_or(false)
    }
}

pub fn aggregate_fixability(entries: &[FixEntry]) -> Result<FixabilityTable, ReportError> {
    let mut table = FixabilityTable::default();
    for e in entries {
        let row = table.rows.entry(e.bundle.clone()).or_default();
        if row.insert(e.engine, e.fixed).is_some() {
            return Err(ReportError::DuplicateJob {
                bundle: e.bundle.clone(),
                engine: e.engine,
            });
        }
    }
    for engine in EngineKind::ALL {
        let n = table
            .rows
            .values()
            .filter(|r| r.get(&engine) == Some(&true))
            .count();
        table.totals.insert(engine, n);
    }
    table.union_fixed = table
        .rows
        .values()
        .filter(|r| r.values().any(|f| *f))
        .count();
    Ok(table)
}

pub fn fixability_from_records(
    records: &[ExperimentRecord],
) -> Result<FixabilityTable, ReportError> {
    let entries: Vec<FixEntry> = records.iter().map(FixEntry::from).collect();
    aggregate_fixability(&entries)
}

/// Counts for the seven regions of the three-engine Venn diagram.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntersectionSummary {
    pub genprog_only: usize,
    pub kali_only: usize,
    pub nopol_only: usize,
    pub genprog_kali: usize,
    pub genprog_nopol: usize,
    pub kali_nopol: usize,
    pub all_three: usize,
}

impl IntersectionSummary {
    pub fn regions(&self) -> [(&'static str, usize); 7] {
        [
            ("genprog only", self.genprog_only),
            ("kali only", self.kali_only),
            ("nopol only", self.nopol_only),
            ("genprog+kali", self.genprog_kali),
            ("genprog+nopol", self.genprog_nopol),
            ("kali+nopol", self.kali_nopol),
            ("all three", self.all_three),
        ]
    }

    pub fn sum(&self) -> usize {
        self.regions().iter().map(|(_, n)| n).sum()
    }
}

pub fn intersections(table: &FixabilityTable) -> IntersectionSummary {
    let mut s = IntersectionSummary::default();
    for row in table.rows.values() {
        let fixed = |e| row.get(&e) == Some(&true);
        let slot = match (
            fixed(EngineKind::GenProg),
            fixed(EngineKind::Kali),
            fixed(EngineKind::Nopol),
        ) {
            (true, false, false) => &mut s.genprog_only,
            (false, true, false) => &mut s.kali_only,
            (false, false, true) => &mut s.nopol_only,
            (true, true, false) => &mut s.genprog_kali,
            (true, false, true) => &mut s.genprog_nopol,
            (false, true, true) => &mut s.kali_nopol,
            (true, true, true) => &mut s.all_three,
            (false, false, false) => continue,
        };
        *slot += 1;
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineTiming {
    pub count: usize,
    pub min_ms: u64,
    pub median_ms: u64,
    pub max_ms: u64,
    pub average_ms: f64,
    pub total_ms: u64,
}

/// Order statistics of a sample; the median of an even-sized sample is the
/// lower of the two middle elements.
pub fn summarize_times(times: &[u64]) -> Option<EngineTiming> {
    if times.is_empty() {
        return None;
    }
    let mut sorted = times.to_vec();
    sorted.sort_unstable();
    let total: u64 = sorted.iter().sum();
    Some(EngineTiming {
        count: sorted.len(),
        min_ms: sorted[0],
        median_ms: sorted[(sorted.len() - 1) / 2],
        max_ms: sorted[sorted.len() - 1],
        average_ms: total as f64 / sorted.len() as f64,
        total_ms: total,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    /// Over attempts that found a patch; engines without one are absent.
    pub engines: BTreeMap<EngineKind, EngineTiming>,
    /// Sum over every attempt of the engine, timeouts included.
    pub total_all_attempts_ms: BTreeMap<EngineKind, u64>,
}

pub fn timing_stats(records: &[ExperimentRecord]) -> TimingStats {
    let mut stats = TimingStats::default();
    for engine in EngineKind::ALL {
        let of_engine: Vec<&ExperimentRecord> =
            records.iter().filter(|r| r.engine == engine).collect();
        if of_engine.is_empty() {
            continue;
        }
        let found: Vec<u64> = of_engine
            .iter()
            .filter(|r| r.fixed())
            .map(|r| r.outcome.attempt_wall_time_ms)
            .collect();
        if let Some(t) = summarize_times(&found) {
            stats.engines.insert(engine, t);
        }
        stats.total_all_attempts_ms.insert(
            engine,
            of_engine
                .iter()
                .map(|r| r.outcome.attempt_wall_time_ms)
                .sum(),
        );
    }
    stats
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnderspecReason {
    KaliPatchExists,
    AnalystLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UnderspecFlag {
    pub bundle: String,
    pub reason: UnderspecReason,
}

/// Bugs whose suite is too weak: a Kali patch exists and the analysts did
/// not judge that deletion correct, or the analysts flagged the bug.
pub fn flag_underspecified(
    table: &FixabilityTable,
    labels: &BTreeMap<String, Labels>,
) -> Vec<UnderspecFlag> {
    let mut flags = Vec::new();
    let bundles: BTreeSet<&String> = table.rows.keys().chain(labels.keys()).collect();
    for bundle in bundles {
        let label = labels.get(bundle.as_str());
        let kali_correct = label
            .and_then(|l| l.engines.get(&EngineKind::Kali))
            .is_some_and(|p| p.correctness == Correctness::Correct);
        if table.fixed_by(bundle, EngineKind::Kali) && !kali_correct {
            flags.push(UnderspecFlag {
                bundle: bundle.clone(),
                reason: UnderspecReason::KaliPatchExists,
            });
        } else if label.is_some_and(|l| l.underspecified) {
            flags.push(UnderspecFlag {
                bundle: bundle.clone(),
                reason: UnderspecReason::AnalystLabel,
            });
        }
    }
    flags
}

fn fixture_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i + 1, l.split('\t').map(str::trim).collect()))
}

/// Reads a per-bug fixability table: a header line, then
/// `bug<TAB>genprog<TAB>kali<TAB>nopol` with cells `Fixed` or `--`.
pub fn parse_fixability_tsv(text: &str) -> Result<Vec<FixEntry>, ReportError> {
    let mut out = Vec::new();
    for (line, cells) in fixture_lines(text) {
        let err = |message: String| ReportError::Fixture { line, message };
        if cells.len() != 4 {
            return Err(err(format!("expected 4 columns, found {}", cells.len())));
        }
        for (engine, cell) in EngineKind::ALL.into_iter().zip(&cells[1..]) {
            let fixed = match *cell {
                "Fixed" => true,
                "--" | "-" | "–" | "" => false,
                other => return Err(err(format!("unexpected cell `{other}`"))),
            };
            out.push(FixEntry {
                bundle: cells[0].to_string(),
                engine,
                fixed,
            });
        }
    }
    Ok(out)
}

fn parse_enum<T: for<'de> Deserialize<'de>>(cell: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(cell.to_ascii_lowercase()))
        .map_err(|_| format!("unexpected value `{cell}`"))
}

/// Reads analyst labels: a header line, then
/// `bug<TAB>approach<TAB>correctness<TAB>readability<TAB>difficulty`.
pub fn parse_labels_tsv(text: &str) -> Result<BTreeMap<String, Labels>, ReportError> {
    let mut out: BTreeMap<String, Labels> = BTreeMap::new();
    for (line, cells) in fixture_lines(text) {
        let err = |message: String| ReportError::Fixture { line, message };
        if cells.len() != 5 {
            return Err(err(format!("expected 5 columns, found {}", cells.len())));
        }
        let engine: EngineKind = cells[1].parse().map_err(err)?;
        let label = PatchLabel {
            correctness: parse_enum::<Correctness>(cells[2]).map_err(err)?,
            readability: Some(parse_enum::<Readability>(cells[3]).map_err(err)?),
            difficulty: Some(parse_enum::<Difficulty>(cells[4]).map_err(err)?),
        };
        out.entry(cells[0].to_string())
            .or_default()
            .engines
            .insert(engine, label);
    }
    Ok(out)
}

/// A rendered report table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Tsv,
    Markdown,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Tsv => {
                for line in std::iter::once(&self.header).chain(&self.rows) {
                    out.push_str(&line.join("\t"));
                    out.push('\n');
                }
            }
            Format::Markdown => {
                let _ = writeln!(out, "| {} |", self.header.join(" | "));
                let _ = writeln!(out, "|{}", "---|".repeat(self.header.len()));
                for row in &self.rows {
                    let _ = writeln!(out, "| {} |", row.join(" | "));
                }
            }
        }
        out
    }
}

pub fn fixability_table(table: &FixabilityTable) -> Table {
    let mut t = Table::new(&["bug", "genprog", "kali", "nopol"]);
    let cell = |fixed: bool| if fixed { "Fixed" } else { "--" }.to_string();
    for (bundle, row) in &table.rows {
        let mut line = vec![bundle.clone()];
        line.extend(
            EngineKind::ALL
                .iter()
                .map(|e| cell(row.get(e) == Some(&true))),
        );
        t.rows.push(line);
    }
    let mut total = vec![format!("total ({})", table.union_fixed)];
    total.extend(EngineKind::ALL.iter().map(|e| table.total(*e).to_string()));
    t.rows.push(total);
    t
}

pub fn venn_table(summary: &IntersectionSummary) -> Table {
    let mut t = Table::new(&["region", "bugs"]);
    for (name, n) in summary.regions() {
        t.rows.push(vec![name.to_string(), n.to_string()]);
    }
    t
}

pub fn timing_table(stats: &TimingStats) -> Table {
    let mut t = Table::new(&[
        "engine",
        "patches",
        "min_ms",
        "median_ms",
        "max_ms",
        "average_ms",
        "total_ms",
        "total_all_attempts_ms",
    ]);
    for (engine, all) in &stats.total_all_attempts_ms {
        let mut row = vec![engine.to_string()];
        match stats.engines.get(engine) {
            Some(s) => row.extend([
                s.count.to_string(),
                s.min_ms.to_string(),
                s.median_ms.to_string(),
                s.max_ms.to_string(),
                format!("{:.1}", s.average_ms),
                s.total_ms.to_string(),
            ]),
            None => {
                row.push("0".into());
                row.extend(std::iter::repeat_n("-".to_string(), 5));
            }
        }
        row.push(all.to_string());
        t.rows.push(row);
    }
    t
}

pub fn underspec_table(flags: &[UnderspecFlag]) -> Table {
    let mut t = Table::new(&["bug", "reason"]);
    for f in flags {
        let reason = match f.reason {
            UnderspecReason::KaliPatchExists => "kali_patch_exists",
            UnderspecReason::AnalystLabel => "analyst_label",
        };
        t.rows.push(vec![f.bundle.clone(), reason.to_string()]);
    }
    t
}

/// Status counts, handy for a one-line summary of a run.
pub fn status_counts(records: &[ExperimentRecord]) -> BTreeMap<&'static str, usize> {
    let mut out = BTreeMap::new();
    for r in records {
        *out.entry(r.outcome.status.label()).or_default() += 1;
    }
    out
}

use std::collections::BTreeSet;

use crate::exec::{observe, run_angelic, AngelicSite, AngelicTrace, Scalar, Snapshot, SnapshotKey};
use crate::lang::{Edit, StmtKind};

use super::synth::{synthesize_condition, SynthesisInstance};
use super::{is_if, Search, SearchEnd};

/// Existing `if` conditions first, then guard points, each in ranking order.
fn sites(search: &Search) -> Vec<AngelicSite> {
    let program = search.program();
    let suspicious = search.suspicious();
    let conditions = suspicious
        .iter()
        .filter(|id| is_if(program, **id))
        .map(|id| AngelicSite::Condition(*id));
    let guards = suspicious
        .iter()
        .filter(|id| {
            !matches!(
                program.statement(**id).map(|s| &s.kind),
                Some(StmtKind::Skip)
            )
        })
        .map(|id| AngelicSite::Guard(*id));
    conditions.chain(guards).collect()
}

/// Keys bound in every snapshot with the same scalar type throughout, in
/// the order of the first snapshot.
fn common_vocabulary<'a>(
    snapshots: impl Iterator<Item = &'a Snapshot> + Clone,
) -> Vec<SnapshotKey> {
    let Some(first) = snapshots.clone().next() else {
        return Vec::new();
    };
    first
        .entries
        .iter()
        .filter(|(key, value)| {
            snapshots.clone().all(|s| {
                matches!(
                    (s.get(key), value),
                    (Some(Scalar::Int(_)), Scalar::Int(_))
                        | (Some(Scalar::Bool(_)), Scalar::Bool(_))
                )
            })
        })
        .map(|(key, _)| key.clone())
        .collect()
}

fn constant_pool(search: &Search) -> Vec<i64> {
    let mut pool: BTreeSet<i64> = search.program().int_literals().into_iter().collect();
    for t in &search.bundle.tests {
        pool.extend(t.int_literals());
    }
    pool.extend([-1, 0, 1]);
    pool.extend(search.config.nopol.constant_pool_extra.iter().copied());
    pool.into_iter().collect()
}

/// Picks one passing trace per failing test, in odometer order, up to
/// `cap` combinations.
fn combinations(choices: &[Vec<AngelicTrace>], cap: usize) -> Vec<Vec<&AngelicTrace>> {
    let mut out = Vec::new();
    let mut index = vec![0usize; choices.len()];
    while out.len() < cap {
        out.push(index.iter().zip(choices).map(|(i, c)| &c[*i]).collect());
        let mut pos = choices.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            index[pos] += 1;
            if index[pos] < choices[pos].len() {
                break;
            }
            index[pos] = 0;
        }
    }
    out
}

enum SiteEnd {
    Found(Edit),
    Nothing,
    OutOfTime,
}

fn try_site(search: &mut Search, site: AngelicSite, pool: &[i64]) -> SiteEnd {
    let program = search.program();
    let budget = search.config.step_budget;
    let nopol = search.config.nopol.clone();

    let mut choices = Vec::new();
    for test in search.bundle.failing_tests() {
        if search.expired() {
            return SiteEnd::OutOfTime;
        }
        let Ok(traces) = run_angelic(program, test, site, &nopol.forcing, budget) else {
            return SiteEnd::Nothing;
        };
        let passing: Vec<AngelicTrace> =
            traces.into_iter().filter(|t| t.verdict.is_pass()).collect();
        if passing.is_empty() {
            return SiteEnd::Nothing;
        }
        choices.push(passing);
    }

    let mut observed = Vec::new();
    for test in search.bundle.passing_tests() {
        if search.expired() {
            return SiteEnd::OutOfTime;
        }
        match observe(program, test, site, budget) {
            Ok(trace) => observed.push(trace),
            Err(_) => return SiteEnd::Nothing,
        }
    }

    for combo in combinations(&choices, nopol.max_combinations) {
        if search.expired() {
            return SiteEnd::OutOfTime;
        }
        let traces = || combo.iter().copied().chain(observed.iter());
        let vocabulary = common_vocabulary(traces().flat_map(|t| t.snapshots.iter()));
        if vocabulary.is_empty() {
            continue;
        }
        let rows: Vec<(Snapshot, bool)> = traces()
            .flat_map(|t| t.snapshots.iter().zip(&t.forced_values))
            .map(|(s, v)| (s.project(&vocabulary).expect("common key"), *v))
            .collect();
        let instance = SynthesisInstance {
            rows,
            vocabulary,
            constants: pool.to_vec(),
        };
        let Ok(cond) = synthesize_condition(&instance, nopol.max_expr_size) else {
            continue;
        };
        let edit = match site {
            AngelicSite::Condition(id) => Edit::ReplaceCondition(id, cond.to_expr()),
            AngelicSite::Guard(id) => Edit::GuardWith(id, cond.to_expr()),
        };
        let patch = search.patch(vec![edit.clone()]);
        if search.passes(&patch) {
            return SiteEnd::Found(edit);
        }
    }
    SiteEnd::Nothing
}

/// Angelic value search followed by condition synthesis, one site at a
/// time.
pub(super) fn search(search: &mut Search) -> SearchEnd {
    let pool = constant_pool(search);
    for site in sites(search) {
        if search.expired() {
            return SearchEnd::OutOfTime;
        }
        match try_site(search, site, &pool) {
            SiteEnd::Found(edit) => return SearchEnd::Found(search.patch(vec![edit])),
            SiteEnd::Nothing => {}
            SiteEnd::OutOfTime => return SearchEnd::OutOfTime,
        }
    }
    SearchEnd::Exhausted
}

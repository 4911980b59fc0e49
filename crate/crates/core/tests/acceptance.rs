//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use repairforge::engines::{
    revalidate, synthesize_condition, RepairConfig, RepairStatus, SynthesisInstance,
};
use repairforge::exec::{observe, AngelicSite, DEFAULT_STEP_BUDGET};
use repairforge::faultloc::{score, MetricKind, SpectrumRow};
use repairforge::harness::{run_experiment, BugBundle, ExperimentPlan, ExperimentRecord};
use repairforge::lang::{
    apply_patch, parse_expr, print, print_expr, Edit, EngineKind, Expr, StatementId, StmtKind,
};
use repairforge::report::{aggregate_fixability, intersections, parse_fixability_tsv};

use common::oracles::{eval_condition, exact_score, min_size, random_instance};

const SBFL_TOLERANCE: f64 = 1e-12;
const SYNTH_INSTANCES: usize = 1000;
const SYNTH_MAX_SIZE: usize = 4;
const ATTEMPT_TIMEOUT_MS: u64 = 60_000;

type Check = Result<String, String>;

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit:?}"))
    }
}

fn ensure(cond: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}

fn fixture_aggregation() -> Check {
    let start = Instant::now();
    let entries = parse_fixability_tsv(&common::published_fixture("paper_table2.tsv"))
        .map_err(|e| e.to_string())?;
    let table = aggregate_fixability(&entries).map_err(|e| e.to_string())?;
    let s = intersections(&table);
    let got = (
        table.total(EngineKind::GenProg),
        table.total(EngineKind::Kali),
        table.total(EngineKind::Nopol),
        table.union_fixed,
        s.all_three,
        s.nopol_only,
        s.kali_only,
    );
    let elapsed = start.elapsed();
    ensure(got == (27, 22, 35, 47, 12, 18, 0), || {
        format!("genprog/kali/nopol/union/all/nopol-only/kali-only = {got:?}")
    })?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!(
        "27/22/35 union 47, all-three 12, nopol-only 18, kali-only 0 in {elapsed:.2?}"
    ))
}

fn sbfl_exact() -> Check {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for ef in 0..6 {
        for ep in 0..6 {
            for nf in 0..6 {
                for np in 0..6 {
                    let row = SpectrumRow {
                        statement: StatementId(0),
                        ef,
                        ep,
                        nf,
                        np,
                    };
                    for metric in MetricKind::ALL {
                        let err = (score(&row, metric) - exact_score(ef, ep, nf, np, metric)).abs();
                        if err > SBFL_TOLERANCE {
                            return Err(format!("{metric} on {row:?} is off by {err:e}"));
                        }
                        worst = worst.max(err);
                        checked += 1;
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(checked == 1296 * 7, || format!("checked {checked} scores"))?;
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!(
        "{checked} scores, max error {worst:e} <= {SBFL_TOLERANCE:e}, in {elapsed:.2?}"
    ))
}

fn fingerprints(records: &[ExperimentRecord]) -> Vec<String> {
    records.iter().map(ExperimentRecord::fingerprint).collect()
}

fn determinism(
    first: &[ExperimentRecord],
    second: &[ExperimentRecord],
    elapsed: Duration,
) -> Check {
    ensure(first.len() == second.len(), || {
        "record counts differ".into()
    })?;
    for (a, b) in first.iter().zip(second) {
        ensure(a.fingerprint() == b.fingerprint(), || {
            format!("{} {} differs between runs", a.bundle, a.engine)
        })?;
        ensure(a.patch_diff == b.patch_diff, || {
            format!("{} {} patch diff differs", a.bundle, a.engine)
        })?;
    }
    within(elapsed, Duration::from_secs(600))?;
    Ok(format!(
        "{} records identical across two runs, {elapsed:.2?} for both",
        first.len()
    ))
}

fn validity(bundles: &[BugBundle], records: &[ExperimentRecord]) -> Check {
    let mut checked = 0;
    let mut violations = Vec::new();
    for r in records {
        let Some(patch) = r.outcome.status.patch() else {
            continue;
        };
        let bundle = bundles
            .iter()
            .find(|b| b.id == r.bundle)
            .expect("bundle of record");
        checked += 1;
        if let Err(e) = revalidate(bundle, patch, DEFAULT_STEP_BUDGET) {
            violations.push(format!("{} {}: {e}", r.bundle, r.engine));
        }
    }
    ensure(violations.is_empty(), || violations.join("; "))?;
    Ok(format!("{checked} patches re-validated, 0 violations"))
}

fn fixers(records: &[ExperimentRecord], bundle: &str) -> BTreeSet<EngineKind> {
    records
        .iter()
        .filter(|r| r.bundle == bundle && r.fixed())
        .map(|r| r.engine)
        .collect()
}

fn patch_of<'a>(
    records: &'a [ExperimentRecord],
    bundle: &str,
    engine: EngineKind,
) -> Result<&'a repairforge::lang::Patch, String> {
    records
        .iter()
        .find(|r| r.bundle == bundle && r.engine == engine)
        .and_then(|r| r.outcome.status.patch())
        .ok_or_else(|| format!("{bundle}: no {engine} patch"))
}

fn genprog_only(bundles: &[BugBundle], records: &[ExperimentRecord]) -> Result<(), String> {
    ensure(
        fixers(records, "M70A") == BTreeSet::from([EngineKind::GenProg]),
        || format!("M70A fixed by {:?}", fixers(records, "M70A")),
    )?;
    let b = bundles
        .iter()
        .find(|b| b.id == "M70A")
        .ok_or("M70A missing")?;
    let patched = apply_patch(&b.program, patch_of(records, "M70A", EngineKind::GenProg)?)
        .map_err(|e| e.to_string())?;
    let total = patched.function("total").ok_or("no total()")?;
    let mut calls_range = false;
    total.body.walk(&mut |s| {
        calls_range |= matches!(&s.kind, StmtKind::Assign { value: Expr::Call(f, args), .. }
            if f == "sum_range" && args == &[Expr::var("lo"), Expr::var("hi")]);
    });
    ensure(calls_range, || {
        format!(
            "M70A patch does not call sum_range(lo, hi):\n{}",
            print(&patched)
        )
    })
}

fn guard_matches_reference(
    bundles: &[BugBundle],
    records: &[ExperimentRecord],
) -> Result<(), String> {
    let b = bundles
        .iter()
        .find(|b| b.id == "L55A")
        .ok_or("L55A missing")?;
    let patch = patch_of(records, "L55A", EngineKind::Nopol)?;
    let [Edit::GuardWith(id, synthesized)] = patch.edits.as_slice() else {
        return Err(format!("L55A nopol edits {:?}", patch.edits));
    };
    let reference = parse_expr("state == 1").map_err(|e| e.to_string())?;
    for test in &b.tests {
        let seen = observe(
            &b.program,
            test,
            AngelicSite::Guard(*id),
            DEFAULT_STEP_BUDGET,
        )
        .map_err(|e| e.to_string())?;
        for snap in &seen.snapshots {
            ensure(
                eval_condition(synthesized, snap) == eval_condition(&reference, snap),
                || {
                    format!(
                        "L55A guard `{}` disagrees with `state == 1` on {snap}",
                        print_expr(synthesized)
                    )
                },
            )?;
        }
    }
    Ok(())
}

fn weak_suite(bundles: &[BugBundle], records: &[ExperimentRecord]) -> Result<(), String> {
    let b = bundles
        .iter()
        .find(|b| b.id == "M8A")
        .ok_or("M8A missing")?;
    let patch = patch_of(records, "M8A", EngineKind::Kali)?;
    let deletes_store = matches!(patch.edits.as_slice(), [Edit::Delete(id)]
        if matches!(b.program.statement(*id).map(|s| &s.kind), Some(StmtKind::ArrayStore { .. })));
    ensure(deletes_store, || {
        format!("M8A kali edits {:?}", patch.edits)
    })?;
    ensure(!fixers(records, "M8B").contains(&EngineKind::Kali), || {
        "kali still fixes M8B".into()
    })
}

fn deletion_is_correct(bundles: &[BugBundle], records: &[ExperimentRecord]) -> Result<(), String> {
    let b = bundles
        .iter()
        .find(|b| b.id == "M50A")
        .ok_or("M50A missing")?;
    let patch = patch_of(records, "M50A", EngineKind::Kali)?;
    ensure(matches!(patch.edits.as_slice(), [Edit::Delete(_)]), || {
        format!("M50A kali edits {:?}", patch.edits)
    })?;
    let patched = apply_patch(&b.program, patch).map_err(|e| e.to_string())?;
    let reference = b
        .reference_program()
        .ok_or("M50A has no reference")?
        .map_err(|e| e.to_string())?;
    ensure(
        print(&patched).replace("    skip;\n", "") == print(&reference),
        || "M50A deletion differs from the reference".into(),
    )
}

fn engine_signatures(
    bundles: &[BugBundle],
    records: &[ExperimentRecord],
    elapsed: Duration,
) -> Check {
    ensure(bundles.len() >= 12, || {
        format!("corpus has {} bugs", bundles.len())
    })?;
    genprog_only(bundles, records)?;
    guard_matches_reference(bundles, records)?;
    weak_suite(bundles, records)?;
    deletion_is_correct(bundles, records)?;
    for r in records {
        ensure(
            !matches!(r.outcome.status, RepairStatus::Error { .. }),
            || format!("{} {}: {:?}", r.bundle, r.engine, r.outcome.status),
        )?;
    }
    within(elapsed, Duration::from_secs(600))?;
    Ok(format!(
        "{} bugs; M70A genprog-only, L55A guard, M8A/M8B, M50A deletion hold; corpus x 3 engines in {elapsed:.2?}",
        bundles.len()
    ))
}

fn synthesizer_minimality() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut solved = 0;
    for i in 0..SYNTH_INSTANCES {
        let r = random_instance(&mut rng, SYNTH_MAX_SIZE);
        let inst = SynthesisInstance {
            rows: r.rows.clone(),
            vocabulary: r.rows[0].0.keys().cloned().collect(),
            constants: r.constants.clone(),
        };
        let expected = min_size(&r.rows, &r.bools, &r.ints, &r.constants, SYNTH_MAX_SIZE);
        match (synthesize_condition(&inst, SYNTH_MAX_SIZE), expected) {
            (Ok(cond), Some(min)) => {
                for (snap, want) in &r.rows {
                    ensure(cond.eval(snap) == Some(*want), || {
                        format!("instance {i}: `{cond}` wrong on {snap}")
                    })?;
                }
                ensure(cond.size() == min, || {
                    format!(
                        "instance {i}: `{cond}` has size {}, minimum {min}",
                        cond.size()
                    )
                })?;
                solved += 1;
            }
            (Err(_), None) => {}
            (got, want) => {
                return Err(format!(
                    "instance {i}: synthesizer {got:?}, brute force {want:?}"
                ))
            }
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "{SYNTH_INSTANCES} instances ({solved} solvable) agree with brute force in {elapsed:.2?}"
    ))
}

fn kali_shape(records: &[ExperimentRecord]) -> Check {
    let kali: Vec<_> = records
        .iter()
        .filter(|r| r.engine == EngineKind::Kali)
        .filter_map(|r| r.outcome.status.patch().map(|p| (r, p)))
        .collect();
    let violations: Vec<String> = kali
        .iter()
        .filter(|(_, p)| !p.is_delete_skip_only())
        .map(|(r, p)| format!("{}: {:?}", r.bundle, p.edits))
        .collect();
    ensure(violations.is_empty(), || violations.join("; "))?;
    Ok(format!("{} kali patches, 0 violations", kali.len()))
}

fn scheduling(one: &[ExperimentRecord], four: &[ExperimentRecord]) -> Check {
    ensure(fingerprints(one) == fingerprints(four), || {
        "workers 1 and 4 disagree".into()
    })?;
    Ok(format!(
        "{} records identical for 1 and 4 workers",
        one.len()
    ))
}

fn report(results: &mut Vec<bool>, name: &str, check: Check) {
    match check {
        Ok(detail) => {
            println!("PASS  {name}: {detail}");
            results.push(true);
        }
        Err(detail) => {
            println!("FAIL  {name}: {detail}");
            results.push(false);
        }
    }
}

fn main() -> ExitCode {
    common::with_big_stack(|| {
        let mut results = Vec::new();
        report(&mut results, "1 fixture aggregation", fixture_aggregation());
        report(&mut results, "2 sbfl exact", sbfl_exact());

        let bundles = common::corpus();
        let plan = |workers| ExperimentPlan {
            bundles: bundles.clone(),
            engines: EngineKind::ALL.to_vec(),
            config: RepairConfig {
                timeout_ms: ATTEMPT_TIMEOUT_MS,
                ..RepairConfig::default()
            },
            workers,
        };
        let start = Instant::now();
        let first = run_experiment(&plan(1));
        let single = start.elapsed();
        let second = run_experiment(&plan(1));
        let both = start.elapsed();
        let four = run_experiment(&plan(4));

        report(
            &mut results,
            "3 determinism",
            determinism(&first, &second, both),
        );
        report(&mut results, "4 patch validity", validity(&bundles, &first));
        report(
            &mut results,
            "5 engine signatures",
            engine_signatures(&bundles, &first, single),
        );
        report(
            &mut results,
            "6 synthesizer minimality",
            synthesizer_minimality(),
        );
        report(&mut results, "7 kali shape", kali_shape(&first));
        report(
            &mut results,
            "8 scheduling independence",
            scheduling(&first, &four),
        );

        let failed = results.iter().filter(|ok| !**ok).count();
        println!(
            "{} of {} criteria passed",
            results.len() - failed,
            results.len()
        );
        if failed == 0 {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        }
    })
}

use std::collections::HashMap;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::exec::{run_test, TestCase};
use crate::faultloc::sampling_weights;
use crate::lang::{
    apply_patch, print, return_kind, Edit, Program, ReturnKind, Statement, StatementId, StmtKind,
};

use super::{Search, SearchEnd};

const W_NEG: u64 = 10;
const W_POS: u64 = 1;

/// Weighted count of passing tests: originally failing tests weigh 10,
/// originally passing ones 1.
pub fn fitness(program: &Program, tests: &[TestCase], budget: u64) -> u64 {
    tests
        .iter()
        .filter(|t| run_test(program, t, budget).passed())
        .map(|t| if t.declared_failing { W_NEG } else { W_POS })
        .sum()
}

fn max_fitness(tests: &[TestCase]) -> u64 {
    tests
        .iter()
        .map(|t| if t.declared_failing { W_NEG } else { W_POS })
        .sum()
}

struct Ingredient {
    stmt: Statement,
    /// Return kind of the function it came from, if it contains a `return`.
    returns: Option<ReturnKind>,
}

struct Variant {
    edits: Vec<Edit>,
    fitness: u64,
}

struct Space {
    targets: Vec<StatementId>,
    weights: Option<WeightedIndex<f64>>,
    ingredients: Vec<Ingredient>,
    target_kind: HashMap<StatementId, ReturnKind>,
}

impl Space {
    fn new(search: &Search) -> Self {
        let program = search.program();
        let weighted = sampling_weights(&search.spectrum, search.config.metric);
        let targets: Vec<StatementId> = weighted.iter().map(|(id, _)| *id).collect();
        let weights = WeightedIndex::new(weighted.iter().map(|(_, w)| *w)).ok();

        let mut ingredients = Vec::new();
        let mut target_kind = HashMap::new();
        program.walk(&mut |func, stmt| {
            let kind = return_kind(program, &func.name);
            target_kind.insert(stmt.id, kind);
            if !matches!(stmt.kind, StmtKind::Skip) {
                ingredients.push(Ingredient {
                    stmt: stmt.clone(),
                    returns: stmt.contains_return().then_some(kind),
                });
            }
        });
        Space {
            targets,
            weights,
            ingredients,
            target_kind,
        }
    }

    fn random_edit(&self, rng: &mut ChaCha8Rng) -> Option<Edit> {
        let target = self.targets[self.weights.as_ref()?.sample(rng)];
        let op = rng.gen_range(0..3);
        if op == 0 {
            return Some(Edit::Delete(target));
        }
        let kind = self.target_kind.get(&target).copied();
        let compatible: Vec<&Ingredient> = self
            .ingredients
            .iter()
            .filter(|i| i.returns.is_none() || i.returns == kind)
            .collect();
        let ingredient = compatible.choose(rng)?.stmt.clone();
        Some(if op == 1 {
            Edit::InsertBefore(target, ingredient)
        } else {
            Edit::Replace(target, ingredient)
        })
    }
}

enum Eval {
    Fitness(u64),
    Solution,
    OutOfTime,
}

struct Evaluator {
    cache: HashMap<String, u64>,
    fresh_in_generation: usize,
}

impl Evaluator {
    fn evaluate(&mut self, search: &mut Search, edits: &[Edit]) -> Eval {
        let patch = search.patch(edits.to_vec());
        let Ok(candidate) = apply_patch(search.program(), &patch) else {
            return Eval::Fitness(0);
        };
        let key = print(&candidate);
        if let Some(f) = self.cache.get(&key) {
            return Eval::Fitness(*f);
        }
        if search.expired() {
            return Eval::OutOfTime;
        }
        self.fresh_in_generation += 1;
        search.variants_evaluated += 1;
        let fitness = fitness(&candidate, &search.bundle.tests, search.config.step_budget);
        self.cache.insert(key, fitness);
        if fitness == max_fitness(&search.bundle.tests) {
            Eval::Solution
        } else {
            Eval::Fitness(fitness)
        }
    }
}

fn tournament<'v>(population: &'v [Variant], size: usize, rng: &mut ChaCha8Rng) -> &'v Variant {
    let mut best = &population[rng.gen_range(0..population.len())];
    for _ in 1..size {
        let other = &population[rng.gen_range(0..population.len())];
        if other.fitness > best.fitness {
            best = other;
        }
    }
    best
}

/// Genetic search over edit lists built from the program's own statements.
pub(super) fn search(search: &mut Search) -> SearchEnd {
    let space = Space::new(search);
    if space.weights.is_none() || space.ingredients.is_empty() {
        return SearchEnd::Exhausted;
    }
    let cfg = search.config.genprog.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(search.config.seed);
    let mut evaluator = Evaluator {
        cache: HashMap::new(),
        fresh_in_generation: 0,
    };

    let mut population = Vec::with_capacity(cfg.population);
    while population.len() < cfg.population {
        let Some(edit) = space.random_edit(&mut rng) else {
            return SearchEnd::Exhausted;
        };
        let edits = vec![edit];
        match evaluator.evaluate(search, &edits) {
            Eval::Solution => return SearchEnd::Found(search.patch(edits)),
            Eval::OutOfTime => return SearchEnd::OutOfTime,
            Eval::Fitness(fitness) => population.push(Variant { edits, fitness }),
        }
    }

    for _ in 0..cfg.max_generations {
        evaluator.fresh_in_generation = 0;
        let mut next = Vec::with_capacity(cfg.population);
        while next.len() < cfg.population {
            let first = tournament(&population, cfg.tournament, &mut rng);
            let mut edits = if rng.gen_bool(cfg.crossover_prob) {
                let second = tournament(&population, cfg.tournament, &mut rng);
                let a = rng.gen_range(0..=first.edits.len());
                let b = rng.gen_range(0..=second.edits.len());
                let mut child: Vec<Edit> = first.edits[..a].to_vec();
                child.extend_from_slice(&second.edits[b..]);
                child.truncate(cfg.max_edits_per_variant);
                child
            } else {
                first.edits.clone()
            };
            let Some(edit) = space.random_edit(&mut rng) else {
                return SearchEnd::Exhausted;
            };
            if edits.len() < cfg.max_edits_per_variant {
                edits.push(edit);
            } else {
                let at = rng.gen_range(0..edits.len());
                edits[at] = edit;
            }
            match evaluator.evaluate(search, &edits) {
                Eval::Solution => return SearchEnd::Found(search.patch(edits)),
                Eval::OutOfTime => return SearchEnd::OutOfTime,
                Eval::Fitness(fitness) => next.push(Variant { edits, fitness }),
            }
        }
        if evaluator.fresh_in_generation == 0 {
            break;
        }
        population = next;
    }
    SearchEnd::Exhausted
}

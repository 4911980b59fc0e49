use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{parse_tests, run_suite, TestCase, DEFAULT_STEP_BUDGET};
use crate::lang::{apply_diff, check_program, parse_named, print, EngineKind, LangError, Program};

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("validation error: expected failing {expected:?}, observed failing {observed:?}")]
    Validation {
        expected: Vec<String>,
        observed: Vec<String>,
    },
    #[error("validation error: {0}")]
    Invalid(String),
    #[error("{file}:{error}")]
    Syntax { file: String, error: LangError },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correctness {
    Correct,
    Incorrect,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readability {
    Easy,
    Medium,
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
    Expert,
}

/// Analyst judgement of one engine's patch for a bug.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchLabel {
    pub correctness: Correctness,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readability: Option<Readability>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<Difficulty>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    #[serde(default)]
    pub engines: BTreeMap<EngineKind, PatchLabel>,
    /// Set by an analyst who judged the suite too weak to specify the fix.
    #[serde(default)]
    pub underspecified: bool,
}

/// Ground truth for one engine on a bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expected {
    Patch,
    NoPatch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub id: String,
    pub failing_tests: Vec<String>,
    #[serde(default)]
    pub engines_expected: BTreeMap<EngineKind, Expected>,
    #[serde(default)]
    pub labels: Labels,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// A buggy program with its test suite, ready for repair.
#[derive(Debug, Clone)]
pub struct BugBundle {
    pub id: String,
    /// All source files linked into one program.
    pub program: Program,
    /// Tests of all test files, in file then definition order.
    pub tests: Vec<TestCase>,
    pub declared_failing: Vec<String>,
    pub reference_patch: Option<String>,
    pub labels: Labels,
    pub engines_expected: BTreeMap<EngineKind, Expected>,
    pub description: Option<String>,
}

impl BugBundle {
    /// Builds and validates a bundle from in-memory sources given as
    /// `(file name, text)` pairs.
    pub fn from_sources(
        manifest: Manifest,
        program_sources: &[(String, String)],
        test_sources: &[(String, String)],
        reference_patch: Option<String>,
    ) -> Result<BugBundle, BundleError> {
        if program_sources.is_empty() {
            return Err(BundleError::Manifest("no program sources".into()));
        }
        let mut units = Vec::new();
        for (name, text) in program_sources {
            let file = format!("src/{name}");
            units.push(
                parse_named(text, &file).map_err(|error| BundleError::Syntax { file, error })?,
            );
        }
        let source_name = match program_sources {
            [(name, _)] => format!("src/{name}"),
            _ => manifest.id.clone(),
        };
        let program = Program::link(source_name, units);
        check_program(&program, None).map_err(|e| BundleError::Invalid(e.to_string()))?;
        if program.calls("nondet") {
            return Err(BundleError::Invalid(
                "nondet() is not allowed in program sources".into(),
            ));
        }

        let mut tests: Vec<TestCase> = Vec::new();
        for (name, text) in test_sources {
            let file = format!("tests/{name}");
            let parsed = parse_tests(text, &file, &program)
                .map_err(|error| BundleError::Syntax { file, error })?;
            for t in parsed {
                if tests.iter().any(|other| other.name == t.name) {
                    return Err(BundleError::Invalid(format!(
                        "test `{}` defined twice",
                        t.name
                    )));
                }
                tests.push(t);
            }
        }

        if manifest.failing_tests.is_empty() {
            return Err(BundleError::Manifest("failing_tests is empty".into()));
        }
        for name in &manifest.failing_tests {
            match tests.iter_mut().find(|t| &t.name == name) {
                Some(t) => t.declared_failing = true,
                None => {
                    return Err(BundleError::Manifest(format!(
                        "unknown failing test `{name}`"
                    )))
                }
            }
        }

        let bundle = BugBundle {
            id: manifest.id,
            program,
            tests,
            declared_failing: manifest.failing_tests,
            reference_patch,
            labels: manifest.labels,
            engines_expected: manifest.engines_expected,
            description: manifest.description,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    /// Checks that exactly the declared tests fail, and that the reference
    /// patch, if any, applies and makes the whole suite pass.
    pub fn validate(&self) -> Result<(), BundleError> {
        let expected: BTreeSet<String> = self.declared_failing.iter().cloned().collect();
        let observed: BTreeSet<String> = run_suite(&self.program, &self.tests, DEFAULT_STEP_BUDGET)
            .into_iter()
            .filter(|r| !r.passed())
            .map(|r| r.test)
            .collect();
        if expected != observed {
            return Err(BundleError::Validation {
                expected: expected.into_iter().collect(),
                observed: observed.into_iter().collect(),
            });
        }
        if let Some(diff) = &self.reference_patch {
            let fixed = self.apply_reference(diff)?;
            let failing: Vec<String> = run_suite(&fixed, &self.tests, DEFAULT_STEP_BUDGET)
                .into_iter()
                .filter(|r| !r.passed())
                .map(|r| r.test)
                .collect();
            if !failing.is_empty() {
                return Err(BundleError::Invalid(format!(
                    "reference patch leaves failing tests {failing:?}"
                )));
            }
        }
        Ok(())
    }

    fn apply_reference(&self, diff: &str) -> Result<Program, BundleError> {
        let text = apply_diff(&print(&self.program), diff)
            .map_err(|e| BundleError::Invalid(format!("reference patch: {e}")))?;
        parse_named(&text, &self.program.source_name).map_err(|error| BundleError::Syntax {
            file: "reference/patch.diff".into(),
            error,
        })
    }

    /// The program with the reference patch applied.
    pub fn reference_program(&self) -> Option<Result<Program, BundleError>> {
        self.reference_patch
            .as_deref()
            .map(|d| self.apply_reference(d))
    }

    pub fn failing_tests(&self) -> impl Iterator<Item = &TestCase> {
        self.tests.iter().filter(|t| t.declared_failing)
    }

    pub fn passing_tests(&self) -> impl Iterator<Item = &TestCase> {
        self.tests.iter().filter(|t| !t.declared_failing)
    }
}

fn read(path: &Path) -> Result<String, BundleError> {
    fs::read_to_string(path).map_err(|source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn mini_files(dir: &Path) -> Result<Vec<(String, String)>, BundleError> {
    let entries = fs::read_dir(dir).map_err(|source| BundleError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "mini"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p
                .file_name()
                .expect("file name")
                .to_string_lossy()
                .into_owned();
            Ok((name, read(&p)?))
        })
        .collect()
}

pub fn parse_manifest(text: &str) -> Result<Manifest, BundleError> {
    serde_json::from_str(text).map_err(|e| BundleError::Manifest(e.to_string()))
}

/// Loads `<dir>/manifest.json`, `<dir>/src/*.mini`, `<dir>/tests/*.mini` and
/// the optional `<dir>/reference/patch.diff`, then validates the result.
pub fn load_bundle(dir: &Path) -> Result<BugBundle, BundleError> {
    let manifest = parse_manifest(&read(&dir.join("manifest.json"))?)?;
    let src = mini_files(&dir.join("src"))?;
    let tests = mini_files(&dir.join("tests"))?;
    let reference = dir.join("reference").join("patch.diff");
    let reference = if reference.exists() {
        Some(read(&reference)?)
    } else {
        None
    };
    BugBundle::from_sources(manifest, &src, &tests, reference)
}

/// Bundle directories (those containing a manifest) directly under `root`,
/// sorted by name.
pub fn discover_bundles(root: &Path) -> Result<Vec<PathBuf>, BundleError> {
    let entries = fs::read_dir(root).map_err(|source| BundleError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("manifest.json").is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}

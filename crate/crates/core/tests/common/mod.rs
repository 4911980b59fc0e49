#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use repairforge::harness::{discover_bundles, load_bundle, BugBundle, WORKER_STACK_SIZE};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../bundles")
}

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn published_fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn corpus() -> Vec<BugBundle> {
    discover_bundles(&corpus_dir())
        .expect("corpus directory")
        .iter()
        .map(|dir| load_bundle(dir).unwrap_or_else(|e| panic!("{}: {e}", dir.display())))
        .collect()
}

pub fn corpus_bundle(id: &str) -> BugBundle {
    load_bundle(&corpus_dir().join(id)).unwrap_or_else(|e| panic!("{id}: {e}"))
}

pub fn fixture_bundle(name: &str) -> BugBundle {
    load_bundle(&fixture_dir(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Runs `f` on a thread with the same stack as experiment workers.
pub fn with_big_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    thread::Builder::new()
        .stack_size(WORKER_STACK_SIZE)
        .spawn(f)
        .expect("spawn")
        .join()
        .unwrap_or_else(|p| std::panic::resume_unwind(p))
}

/// Copies a bundle directory tree into a fresh temporary directory.
pub fn copy_bundle(from: &Path) -> tempfile::TempDir {
    fn copy(from: &Path, to: &Path) {
        fs::create_dir_all(to).unwrap();
        for entry in fs::read_dir(from).unwrap() {
            let path = entry.unwrap().path();
            let target = to.join(path.file_name().unwrap());
            if path.is_dir() {
                copy(&path, &target);
            } else {
                fs::copy(&path, &target).unwrap();
            }
        }
    }
    let dir = tempfile::tempdir().unwrap();
    copy(from, dir.path());
    dir
}

pub mod oracles;

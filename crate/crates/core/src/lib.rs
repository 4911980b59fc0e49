//! Test-suite driven automatic program repair for MiniLang.
//!
//! The pipeline takes a buggy program and its test suite, ranks statements
//! by suspiciousness from test coverage, and searches for a patch with one
//! of three engines until the whole suite passes.

pub mod engines;
pub mod exec;
pub mod faultloc;
pub mod harness;
pub mod lang;
pub mod report;

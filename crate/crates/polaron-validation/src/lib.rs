//! Host package of the `acceptance` test target.
//!
//! It sits apart from the library crates so that `cargo test --workspace`
//! runs it after their own suites: a failing criterion then never hides
//! the results of unrelated tests.

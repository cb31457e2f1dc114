//! Acceptance suite for the aggregation toolkit; the criteria live in
//! `tests/acceptance.rs` and print one `ACCEPTANCE <id> PASS|FAIL` line each.
//!
//! Kept in its own package so that `cargo test --workspace` runs it after
//! the unit and integration tests of the other crates.

//! Holds the `acceptance` test target; there is no library code.
//!
//! Run with `cargo test -p gradqfi-suite`. It prints one PASS/FAIL line
//! per criterion and exits non-zero if any criterion fails.

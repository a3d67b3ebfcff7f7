//! Holds the `acceptance` test target. Kept as its own package so the suite
//! runs after the unit and property tests of the other crates.

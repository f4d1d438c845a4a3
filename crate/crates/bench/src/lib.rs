//! Criterion benchmarks for `qinfra`; see `benches/`.

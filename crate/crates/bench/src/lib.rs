//! Criterion benchmarks for `wgflow`; see `benches/`.

//! Criterion benchmarks for pnn-core; see `benches/`.

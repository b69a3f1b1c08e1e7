//! Criterion benchmarks for the sparse-rl core live in `benches/`.

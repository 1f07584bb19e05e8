//! Benchmarks for the solve pipeline live in `benches/`.

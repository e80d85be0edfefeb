//! Criterion benchmarks for the synthesis and simulation paths; see `benches/`.

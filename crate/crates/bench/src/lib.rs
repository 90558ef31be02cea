//! Criterion benchmarks for the gmclab sampling hot path. See `benches/`.

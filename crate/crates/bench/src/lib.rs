//! Criterion benchmarks for the `microformal` engine; see `benches/pullback.rs`.

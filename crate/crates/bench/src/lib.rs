//! Benchmarks for the dispatch library live in `benches/`.

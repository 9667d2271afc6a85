//! Benchmarks for the simulation engine and exact oracles live in `benches/`.

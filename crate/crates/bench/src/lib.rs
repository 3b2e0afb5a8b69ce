//! Criterion benchmarks for the simulator and the analytic floor; see `benches/ira.rs`.

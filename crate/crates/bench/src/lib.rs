//! Benchmarks for the simulator, inconsistency scoring, planning and repair
//! search live under `benches/`.

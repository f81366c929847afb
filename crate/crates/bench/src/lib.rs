//! Benchmarks live in `benches/kernels.rs`; run `cargo bench -p wildfan-bench`.

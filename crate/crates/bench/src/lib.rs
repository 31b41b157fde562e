//! Criterion benchmarks for the `outliergram` crate. The benches live in
//! `benches/`; run them with `cargo bench -p outliergram-bench`.

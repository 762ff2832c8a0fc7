//! Benchmarks for the fire simulation library. Run with `cargo bench -p firesim-bench`.

pub use firesim_core;

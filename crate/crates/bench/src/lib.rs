//! Criterion benchmarks for the learner, the renderer and the ranked
//! statistic. Run with `cargo bench -p sonolearn-bench`.

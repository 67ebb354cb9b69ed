//! Criterion benchmarks for the training and inference kernels.

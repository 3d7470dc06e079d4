//! Criterion benchmarks for the hot paths of `ifpinn`; see `benches/`.

//! Benchmarks for swing-core live under benches/.

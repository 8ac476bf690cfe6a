//! Shared fixtures for the criterion benchmarks.

use disclab::pointset::{fibonacci_set, random_set};
use disclab::PointSet;

/// A Fibonacci set of size `n`.
pub fn fib(n: usize) -> PointSet {
    fibonacci_set(n).expect("n is positive")
}

/// A reproducible uniform random set.
pub fn uniform(n: usize, dim: usize) -> PointSet {
    random_set(n, dim, 0x5eed).expect("valid size and dimension")
}

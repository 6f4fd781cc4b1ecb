//! Benchmark fixtures shared by the criterion benches.

use convex_core::inequalities::random_centred_polytope;
use convex_core::BodyHandle;

/// Centred random polytope with `2n + 2` vertices.
pub fn fixture(n: usize, seed: u64) -> BodyHandle {
    random_centred_polytope(n, 2 * n + 2, seed).expect("fixture builds")
}

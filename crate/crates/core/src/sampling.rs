//! Seeded random streams and the basic distributions used by the sampled
//! estimators. Every stochastic routine takes an explicit seed; independent
//! work items draw from distinct ChaCha streams of that seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::Vector;

/// Generator for work item `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_vector(n: usize, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}

/// Uniform point on the unit sphere `S^{n-1}`.
pub fn sphere_point(n: usize, rng: &mut ChaCha8Rng) -> Vector {
    loop {
        let g = gaussian_vector(n, rng);
        let nrm = g.norm();
        if nrm > 1e-12 {
            return g / nrm;
        }
    }
}

/// Uniform point in the unit ball `B_2^n`.
pub fn ball_point(n: usize, rng: &mut ChaCha8Rng) -> Vector {
    use rand::Rng;
    let u: f64 = rng.random();
    sphere_point(n, rng) * u.powf(1.0 / n as f64)
}

/// Mean and standard error of a sample.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

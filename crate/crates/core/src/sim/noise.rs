use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Independent noise streams drawn from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum NoiseStream {
    Process = 1,
    Measurement = 2,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Vector uniform in direction with radius uniform on `[0, delta)`, so its norm
/// never exceeds `delta`. The draw depends only on `(seed, stream, agent, k)`.
pub fn gen_noise(seed: u64, stream: NoiseStream, agent: usize, k: usize, dim: usize, delta: f64) -> DVector<f64> {
    if delta <= 0.0 || dim == 0 {
        return DVector::zeros(dim);
    }
    let key = splitmix(splitmix(splitmix(seed ^ stream as u64) ^ agent as u64) ^ k as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let mut dir = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = dir.norm();
    if norm == 0.0 {
        return DVector::zeros(dim);
    }
    // Shrink slightly so round-off in the scaling cannot push the norm past delta.
    let radius = delta * rng.random::<f64>() * (1.0 - 4.0 * f64::EPSILON);
    dir *= radius / norm;
    dir
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_bound_gives_zero() {
        assert_eq!(gen_noise(1, NoiseStream::Process, 0, 3, 4, 0.0), DVector::zeros(4));
    }

    #[test]
    fn deterministic_and_bounded() {
        for k in 0..200 {
            let a = gen_noise(7, NoiseStream::Measurement, 2, k, 4, 0.1);
            assert_eq!(a, gen_noise(7, NoiseStream::Measurement, 2, k, 4, 0.1));
            assert!(a.norm() <= 0.1);
        }
        assert_ne!(
            gen_noise(7, NoiseStream::Process, 0, 0, 2, 1.0),
            gen_noise(7, NoiseStream::Measurement, 0, 0, 2, 1.0)
        );
    }
}

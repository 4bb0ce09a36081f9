//! Random static scatterers standing in for the room.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Scatterer;
use crate::Point3;

/// Edge length of the cube, centered at the receiver, holding the scatterers.
pub const ENVIRONMENT_EXTENT: f64 = 2.0;
/// Mean scatterer cross section, m².
pub const SCATTERER_RCS_MEAN: f64 = 0.005;
/// Standard deviation of the scatterer cross section, m².
pub const SCATTERER_RCS_STD: f64 = 0.001;

/// Draws `count` scatterers uniformly inside the cube around `rx`, with cross
/// sections from a normal distribution truncated at zero (negative draws are
/// redrawn). Identical seeds give identical environments.
pub fn generate_environment(seed: u64, count: usize, rx: &Point3) -> Vec<Scatterer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rcs = Normal::new(SCATTERER_RCS_MEAN, SCATTERER_RCS_STD).expect("valid normal parameters");
    let half = ENVIRONMENT_EXTENT / 2.0;
    (0..count)
        .map(|_| {
            let offset = Point3::new(
                rng.random_range(-half..half),
                rng.random_range(-half..half),
                rng.random_range(-half..half),
            );
            let sigma = loop {
                let s: f64 = rcs.sample(&mut rng);
                if s >= 0.0 {
                    break s;
                }
            };
            Scatterer {
                position: rx + offset,
                rcs: sigma,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatterers_inside_cuboid_with_nonnegative_rcs() {
        let rx = Point3::new(0.2, -0.1, 0.1);
        let env = generate_environment(42, 10, &rx);
        assert_eq!(env.len(), 10);
        for s in &env {
            let d = s.position - rx;
            assert!(d.iter().all(|c| c.abs() <= 1.0));
            assert!(s.rcs >= 0.0);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let rx = Point3::zeros();
        assert_eq!(generate_environment(7, 20, &rx), generate_environment(7, 20, &rx));
        assert_ne!(generate_environment(7, 20, &rx), generate_environment(8, 20, &rx));
        assert!(generate_environment(7, 0, &rx).is_empty());
    }

    #[test]
    fn rcs_sample_mean() {
        let k = 100_000;
        let env = generate_environment(2024, k, &Point3::zeros());
        let mean = env.iter().map(|s| s.rcs).sum::<f64>() / k as f64;
        let tol = 3.0 * SCATTERER_RCS_STD / (k as f64).sqrt();
        assert!((mean - SCATTERER_RCS_MEAN).abs() <= tol, "mean {mean}");
        // positions are uniform: per-axis mean offset near zero, variance near 1/3
        let var_x = env.iter().map(|s| s.position.x.powi(2)).sum::<f64>() / k as f64;
        assert!((var_x - 1.0 / 3.0).abs() < 0.01);
    }
}

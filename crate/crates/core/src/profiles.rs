//! Seeded random radial profiles for property sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::radial_core::{RadialFunction, RadialGrid};

pub const DEFAULT_SEED: u64 = 20_240_617;

pub struct ProfileSampler {
    rng: ChaCha8Rng,
}

impl ProfileSampler {
    pub fn new(seed: u64) -> Self {
        ProfileSampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// `(1-r^2)^p Σ a_k (1 + (r/w_k)^2)^{-q_k}`: nonincreasing, admissible.
    pub fn monotone(&mut self, grid: &RadialGrid) -> Result<RadialFunction> {
        let p = self.rng.gen_range(0.75..3.0);
        let terms: Vec<(f64, f64, f64)> = (0..self.rng.gen_range(1..=3))
            .map(|_| (self.rng.gen_range(0.1..1.0), self.rng.gen_range(0.02..1.0), self.rng.gen_range(0.5..2.0)))
            .collect();
        let mut samples: Vec<f64> = grid
            .r()
            .iter()
            .map(|&r| {
                let s: f64 = terms.iter().map(|&(a, w, q)| a * (1.0 + (r / w).powi(2)).powf(-q)).sum();
                (1.0 - r * r).powf(p) * s
            })
            .collect();
        // rounding can leave equal neighbours out of order where the profile is flat
        for i in 1..samples.len() {
            samples[i] = samples[i].min(samples[i - 1]);
        }
        RadialFunction::new(grid, samples)
    }

    /// `(1-r^2)^p Σ a_k exp(-((r-c_k)/w_k)^2)`: nonnegative, generally not monotone.
    pub fn bumpy(&mut self, grid: &RadialGrid) -> Result<RadialFunction> {
        let p = self.rng.gen_range(0.75..3.0);
        let terms: Vec<(f64, f64, f64)> = (0..self.rng.gen_range(1..=4))
            .map(|_| (self.rng.gen_range(0.1..1.0), self.rng.gen_range(0.0..0.95), self.rng.gen_range(0.03..0.4)))
            .collect();
        RadialFunction::from_r_fn(grid, |r| {
            let s: f64 = terms.iter().map(|&(a, c, w)| a * (-((r - c) / w).powi(2)).exp()).sum();
            (1.0 - r * r).powf(p) * s
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_core::{make_grid, Grading};

    #[test]
    fn seeded_and_well_formed() {
        let g = make_grid(20.0, 256, Grading::UniformT).unwrap();
        let a = ProfileSampler::new(7).bumpy(&g).unwrap();
        let b = ProfileSampler::new(7).bumpy(&g).unwrap();
        assert_eq!(a.samples(), b.samples());
        let mut s = ProfileSampler::new(1);
        for _ in 0..20 {
            assert!(s.monotone(&g).unwrap().is_nonincreasing());
            assert!(s.bumpy(&g).unwrap().samples().iter().all(|&x| x >= 0.0));
        }
    }
}

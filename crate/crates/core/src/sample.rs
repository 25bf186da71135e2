//! Deterministic sample generation for verification batches.
//!
//! Every batch element gets its own stream keyed by `(seed, index)`, so
//! batches give identical results whether run serially or in parallel.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::so3::Vec3;

/// Independent generator for sample `index` of a batch with the given seed.
pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn normal_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Uniform direction on the unit sphere.
pub fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        if let Some(u) = normal_vector(rng).normalized() {
            return u;
        }
    }
}

/// Gaussian vector scaled into a ball of the given radius scale.
pub fn vector_in_ball(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    normal_vector(rng) * (scale / 3.0f64.sqrt())
}

/// Unit vector with every component bounded away from zero; stays inside
/// one octant so the sphero-conical chart is regular.
pub fn interior_unit_vector(rng: &mut ChaCha8Rng, margin: f64) -> Vec3 {
    loop {
        let g = unit_vector(rng);
        if g.x.abs() > margin && g.y.abs() > margin && g.z.abs() > margin {
            return g;
        }
    }
}

/// Unit tangent vector at `gamma`.
pub fn tangent_at(gamma: Vec3, rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = normal_vector(rng).reject_from_unit(gamma);
        if let Some(u) = v.normalized() {
            return u;
        }
    }
}

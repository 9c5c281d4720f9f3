use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

/// He-normal initialisation: N(0, 2/fan_in).
pub fn he_init(len: usize, fan_in: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    let std = (2.0 / fan_in as f64).sqrt();
    (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            std * z
        })
        .collect()
}

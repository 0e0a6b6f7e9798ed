//! Reference parameter sets and seeded samplers of admissible inputs shared
//! by the acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relay_dde::params::{shape_conditions_double, shape_conditions_single};
use relay_dde::Params;

pub fn p1() -> Params {
    Params::new(2.0, 0.1, 3.0, 1.0, 0.1).unwrap()
}

pub fn p2() -> Params {
    Params::new(4.0, 2.0, 0.5, 1.0, 0.1).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random `(params, h)` for which the single-period shape conditions hold.
pub fn sample_single(rng: &mut ChaCha8Rng) -> (Params, f64) {
    loop {
        let p = Params::new(
            rng.random_range(1.0..4.0),
            rng.random_range(0.05..1.5),
            rng.random_range(2.5..6.0),
            rng.random_range(0.5..3.0),
            rng.random_range(0.05..0.5),
        )
        .unwrap();
        let h = rng.random_range(0.05..5.0);
        if shape_conditions_single(&p, h).satisfied {
            return (p, h);
        }
    }
}

/// Random `(params, h)` for which the double-period half-orbit shape holds.
pub fn sample_double(rng: &mut ChaCha8Rng) -> (Params, f64) {
    loop {
        let p = Params::new(
            rng.random_range(1.0..4.0),
            rng.random_range(0.05..2.0),
            rng.random_range(0.2..1.5),
            rng.random_range(1.0..3.0),
            rng.random_range(0.05..0.5),
        )
        .unwrap();
        let h = rng.random_range(0.05..3.0);
        if shape_conditions_double(&p, h).satisfied {
            return (p, h);
        }
    }
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

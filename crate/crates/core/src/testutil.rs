//! Shared test fixtures.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::components::{hybrid_ring_channel, loss_channel, squeezer_channel, LossSpec, SqueezerSpec};
use crate::gaussian::{apply_channel, compose, GaussianState};

/// Random physical two-mode state: squeezers, a ring, and a loss layer on a
/// thermal input, with random means.
pub(crate) fn random_two_mode(rng: &mut ChaCha8Rng) -> GaussianState {
    let s1 = squeezer_channel(
        &SqueezerSpec::new(rng.random_range(0.0..1.5), rng.random_range(0.0..3.14), 0.0).unwrap(),
    );
    let s2 = squeezer_channel(
        &SqueezerSpec::new(rng.random_range(0.0..1.5), rng.random_range(0.0..3.14), 0.0).unwrap(),
    );
    let prep = compose(&s1.embed(0, 2).unwrap(), &s2.embed(1, 2).unwrap()).unwrap();
    let ch = compose(&hybrid_ring_channel(), &prep).unwrap();
    let loss = loss_channel(&LossSpec::new(rng.random_range(0.0..0.4)).unwrap())
        .embed(0, 2)
        .unwrap();
    let ch = compose(&loss, &ch).unwrap();
    let base = GaussianState::thermal(rng.random_range(0.0..0.3), 2).unwrap();
    let out = apply_channel(&base, &ch).unwrap();
    let mean = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
    GaussianState::new(mean, out.cov().clone()).unwrap()
}

//! Calibrated noise, private top-`s` selection and privacy accounting.

mod budget;
mod noise;
mod rng;
mod threshold;

pub use budget::{compose_advanced, compose_basic, PrivacyBudget};
pub use noise::{gaussian_vector, laplace_vector};
pub use rng::RngStream;
pub use threshold::{
    hard_threshold, noisy_hard_threshold, noisy_hard_threshold_protected, peeling_noise_scale,
    ThresholdTrace,
};

pub(crate) use rng::open_unit;

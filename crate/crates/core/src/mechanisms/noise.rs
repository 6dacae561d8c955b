use ndarray::Array1;
use rand::Rng;
use rand_distr::StandardNormal;

use super::rng::{open_unit, RngStream};
use crate::error::{Error, Result};

/// `dim` i.i.d. Laplace(0, `scale`) draws by inverse CDF. Scale 0 gives zeros.
pub fn laplace_vector(scale: f64, dim: usize, rng: RngStream) -> Result<Array1<f64>> {
    check_scale(scale, "Laplace scale")?;
    if scale == 0.0 {
        return Ok(Array1::zeros(dim));
    }
    let mut g = rng.generator();
    Ok(Array1::from_shape_fn(dim, |_| laplace_draw(scale, &mut g)))
}

/// `dim` i.i.d. N(0, `std_dev`^2) draws. Standard deviation 0 gives zeros.
pub fn gaussian_vector(std_dev: f64, dim: usize, rng: RngStream) -> Result<Array1<f64>> {
    check_scale(std_dev, "Gaussian standard deviation")?;
    if std_dev == 0.0 {
        return Ok(Array1::zeros(dim));
    }
    let mut g = rng.generator();
    Ok(Array1::from_shape_fn(dim, |_| {
        let z: f64 = g.sample(StandardNormal);
        std_dev * z
    }))
}

pub(crate) fn laplace_draw<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    // u uniform on (-1/2, 1/2)
    let u = open_unit(rng) - 0.5;
    -scale * u.signum() * (-2.0 * u.abs()).ln_1p()
}

fn check_scale(scale: f64, what: &str) -> Result<()> {
    if scale.is_finite() && scale >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be finite and >= 0, got {scale}")))
    }
}

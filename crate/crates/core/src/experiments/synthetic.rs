use ndarray::{Array1, Array2};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{Dataset, GlmFamily, ParamVector};
use crate::mechanisms::{open_unit, RngStream};

/// Recipe for a simulated GLM dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    /// `None` draws a dense `beta` on the unit sphere of R^d; `Some(s)` draws
    /// it on the unit sphere of R^s and pads with `d - s` zeros.
    pub sparsity: Option<usize>,
    pub family: GlmFamily,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidParameter(format!("need n, d >= 1, got n={}, d={}", self.n, self.d)));
        }
        match self.sparsity {
            Some(s) if s == 0 || s > self.d => Err(Error::InvalidParameter(format!(
                "sparsity must be in 1..={}, got {s}",
                self.d
            ))),
            _ => Ok(()),
        }
    }
}

/// Uniform draw from the unit sphere of R^dim via a normalized Gaussian vector.
pub fn unit_sphere(dim: usize, rng: RngStream) -> Array1<f64> {
    let mut g = rng.generator();
    loop {
        let v: Array1<f64> = (0..dim).map(|_| StandardNormal.sample(&mut g)).collect();
        let norm = v.dot(&v).sqrt();
        if norm > 0.0 {
            return v / norm;
        }
    }
}

/// Draws `n` rows with i.i.d. Uniform(-1, 1) design and responses from the
/// family at natural parameter `x' beta`.
///
/// The design comes from `rng.derive(0)` and the responses from
/// `rng.derive(1)`, so two calls that differ only in `beta` share their
/// design and their response uniforms.
pub fn sample_dataset(family: &GlmFamily, beta: &ParamVector, n: usize, rng: RngStream) -> Dataset {
    let d = beta.len();
    let mut gx = rng.derive(0).generator();
    let x = Array2::from_shape_simple_fn((n, d), || 2.0 * open_unit(&mut gx) - 1.0);
    let mut gy = rng.derive(1).generator();
    let y: Array1<f64> = x
        .rows()
        .into_iter()
        .map(|row| family.sample_response(row.dot(beta.as_array()), &mut gy))
        .collect();
    Dataset::new(x, y).expect("simulated data is finite and well-shaped")
}

/// Generates `(data, beta*)` for a spec. Deterministic in the spec.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, ParamVector)> {
    spec.validate()?;
    let root = RngStream::new(spec.seed, 0);
    let active = spec.sparsity.unwrap_or(spec.d);
    let mut beta = Array1::<f64>::zeros(spec.d);
    beta.slice_mut(ndarray::s![..active]).assign(&unit_sphere(active, root.derive(0)));
    let beta = ParamVector::new(beta)?;
    let data = sample_dataset(&spec.family, &beta, spec.n, root.derive(1));
    Ok((data, beta))
}

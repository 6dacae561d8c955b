//! Generalized linear model substrate: families, datasets, the scaled negative
//! log-likelihood and its response-truncated gradient.
//!
//! Every family is in canonical (natural exponential family) form with the
//! identity sufficient statistic, so the per-sample loss is
//! `psi(x'beta) - y * x'beta` and its gradient is `(psi'(x'beta) - y) x`.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Logistic,
    Linear,
    Poisson,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Logistic => "logistic",
            FamilyKind::Linear => "linear",
            FamilyKind::Poisson => "poisson",
        })
    }
}

/// A canonical-link GLM family.
///
/// Besides the cumulant `psi` and its first two derivatives, a family carries
/// the constants the privacy calibration needs: `c1` bounding `|psi'|`, `c2`
/// bounding `psi''`, and the essential supremum of `|y|`. Unbounded quantities
/// are stored as `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlmFamily {
    kind: FamilyKind,
    /// Response noise standard deviation for the linear family, 1 otherwise.
    sigma: f64,
    psi_prime_bound: f64,
    psi_double_prime_bound: f64,
    response_sup: f64,
}

impl GlmFamily {
    pub fn logistic() -> Self {
        Self {
            kind: FamilyKind::Logistic,
            sigma: 1.0,
            psi_prime_bound: 1.0,
            psi_double_prime_bound: 0.25,
            response_sup: 1.0,
        }
    }

    /// Gaussian linear model with noise level `sigma`, so `c(sigma) = sigma^2`.
    ///
    /// `psi'` is unbounded; callers that know the linear predictor is bounded
    /// can assert a bound with [`GlmFamily::with_psi_prime_bound`].
    pub fn linear(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "linear family needs sigma > 0, got {sigma}"
            )));
        }
        Ok(Self {
            kind: FamilyKind::Linear,
            sigma,
            psi_prime_bound: f64::INFINITY,
            psi_double_prime_bound: 1.0,
            response_sup: f64::INFINITY,
        })
    }

    /// Poisson regression. Violates the bounded-derivative assumptions, so the
    /// truncation level must always be supplied explicitly.
    pub fn poisson() -> Self {
        Self {
            kind: FamilyKind::Poisson,
            sigma: 1.0,
            psi_prime_bound: f64::INFINITY,
            psi_double_prime_bound: f64::INFINITY,
            response_sup: f64::INFINITY,
        }
    }

    /// Overrides `c1`, the bound on `|psi'|`.
    pub fn with_psi_prime_bound(mut self, c1: f64) -> Result<Self> {
        if c1.is_nan() || c1 < 0.0 {
            return Err(Error::InvalidParameter(format!("c1 must be >= 0, got {c1}")));
        }
        self.psi_prime_bound = c1;
        Ok(self)
    }

    /// Overrides `c2`, the bound on `psi''`.
    pub fn with_psi_double_prime_bound(mut self, c2: f64) -> Result<Self> {
        if c2.is_nan() || c2 < 0.0 {
            return Err(Error::InvalidParameter(format!("c2 must be >= 0, got {c2}")));
        }
        self.psi_double_prime_bound = c2;
        Ok(self)
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FamilyKind::Logistic => "logistic",
            FamilyKind::Linear => "linear",
            FamilyKind::Poisson => "poisson",
        }
    }

    pub fn psi(&self, u: f64) -> f64 {
        match self.kind {
            // log(1 + e^u) without overflow
            FamilyKind::Logistic => {
                if u > 0.0 {
                    u + (-u).exp().ln_1p()
                } else {
                    u.exp().ln_1p()
                }
            }
            FamilyKind::Linear => 0.5 * u * u,
            FamilyKind::Poisson => u.exp(),
        }
    }

    pub fn psi_prime(&self, u: f64) -> f64 {
        match self.kind {
            FamilyKind::Logistic => sigmoid(u),
            FamilyKind::Linear => u,
            FamilyKind::Poisson => u.exp(),
        }
    }

    pub fn psi_double_prime(&self, u: f64) -> f64 {
        match self.kind {
            FamilyKind::Logistic => {
                let e = (-u.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            FamilyKind::Linear => 1.0,
            FamilyKind::Poisson => u.exp(),
        }
    }

    /// Nuisance scale `c(sigma)`.
    pub fn c_sigma(&self) -> f64 {
        match self.kind {
            FamilyKind::Linear => self.sigma * self.sigma,
            _ => 1.0,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn psi_prime_bound(&self) -> f64 {
        self.psi_prime_bound
    }

    pub fn psi_double_prime_bound(&self) -> f64 {
        self.psi_double_prime_bound
    }

    pub fn response_sup(&self) -> f64 {
        self.response_sup
    }

    /// Draws a response with natural parameter `eta`.
    pub fn sample_response<R: Rng + ?Sized>(&self, eta: f64, rng: &mut R) -> f64 {
        match self.kind {
            FamilyKind::Logistic => {
                // exactly one uniform per draw keeps streams aligned across
                // different natural parameters
                if crate::mechanisms::open_unit(rng) < sigmoid(eta) {
                    1.0
                } else {
                    0.0
                }
            }
            FamilyKind::Linear => Normal::new(eta, self.sigma)
                .expect("sigma validated at construction")
                .sample(rng),
            FamilyKind::Poisson => {
                let mean = eta.exp();
                if mean <= 0.0 {
                    0.0
                } else {
                    Poisson::new(mean).map(|p| p.sample(rng)).unwrap_or(f64::INFINITY)
                }
            }
        }
    }
}

impl FromStr for GlmFamily {
    type Err = Error;

    /// Parses `logistic`, `poisson`, `linear` (sigma = 1) or `linear:<sigma>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "logistic" => Ok(Self::logistic()),
            "poisson" => Ok(Self::poisson()),
            "linear" => Self::linear(1.0),
            other => match other.strip_prefix("linear:") {
                Some(sigma) => {
                    let sigma: f64 = sigma.parse().map_err(|_| {
                        Error::InvalidParameter(format!("bad linear sigma in {s:?}"))
                    })?;
                    Self::linear(sigma)
                }
                None => Err(Error::InvalidParameter(format!("unknown family {s:?}"))),
            },
        }
    }
}

pub(crate) fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Design matrix (row `i` is `x_i`) with its response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let (n, d) = x.dim();
        if n == 0 || d == 0 {
            return Err(Error::Dataset(format!(
                "dataset needs n >= 1 and d >= 1, got {n}x{d}"
            )));
        }
        ensure_dim(n, y.len())?;
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Dataset(format!(
                "non-finite design entry at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Dataset(format!("non-finite response at row {i}")));
        }
        // row-major storage is assumed by the gradient loops
        let x = if x.is_standard_layout() { x } else { x.as_standard_layout().into_owned() };
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }

    /// Returns a copy with row `i` replaced by `(y, x)`: an adjacent dataset.
    pub fn with_row_replaced(&self, i: usize, y: f64, x: ArrayView1<'_, f64>) -> Result<Self> {
        ensure_dim(self.d(), x.len())?;
        if i >= self.n() {
            return Err(Error::InvalidParameter(format!(
                "row {i} out of range for n = {}",
                self.n()
            )));
        }
        let mut out = self.clone();
        out.x.row_mut(i).assign(&x);
        out.y[i] = y;
        Self::new(out.x, out.y)
    }

    /// Subset of rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        Self::new(self.x.select(Axis(0), rows), self.y.select(Axis(0), rows))
    }

    /// Appends a constant-one column as the last coordinate.
    pub fn with_intercept(&self) -> Self {
        let (n, d) = self.x.dim();
        let mut x = Array2::ones((n, d + 1));
        x.slice_mut(ndarray::s![.., ..d]).assign(&self.x);
        Self { x, y: self.y.clone() }
    }

    pub fn max_abs_y(&self) -> f64 {
        self.y.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A coefficient vector with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(Array1<f64>);

impl ParamVector {
    pub fn new(values: Array1<f64>) -> Result<Self> {
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite parameter coordinate {j}"
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(d: usize) -> Self {
        Self(Array1::zeros(d))
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        Self::new(Array1::from(values))
    }

    pub fn as_array(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array1<f64> {
        self.0
    }

    /// Number of nonzero coordinates.
    pub fn nnz(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }

    /// Indices of nonzero coordinates, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(j, v)| (*v != 0.0).then_some(j))
            .collect()
    }

    pub fn sq_distance(&self, other: &ParamVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.dot(&self.0).sqrt()
    }
}

impl Deref for ParamVector {
    type Target = Array1<f64>;

    fn deref(&self) -> &Array1<f64> {
        &self.0
    }
}

/// Which almost-sure bound the design satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// `||x||_2 < sigma_x * sqrt(d)`
    L2SqrtD,
    /// `||x||_inf < sigma_x`
    Linf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignBounds {
    pub sigma_x: f64,
    pub norm_kind: NormKind,
}

impl DesignBounds {
    pub fn new(sigma_x: f64, norm_kind: NormKind) -> Result<Self> {
        if !(sigma_x.is_finite() && sigma_x > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_x must be positive, got {sigma_x}"
            )));
        }
        Ok(Self { sigma_x, norm_kind })
    }

    /// Whether every row of `data` satisfies the bound (non-strictly).
    pub fn admits(&self, data: &Dataset) -> bool {
        let d = data.d() as f64;
        data.x().rows().into_iter().all(|row| match self.norm_kind {
            NormKind::L2SqrtD => row.dot(&row).sqrt() <= self.sigma_x * d.sqrt(),
            NormKind::Linf => row.iter().all(|v| v.abs() <= self.sigma_x),
        })
    }
}

/// `x' beta` summed left to right, so results do not depend on how a
/// vectorized dot product groups its partial sums.
pub fn linear_predictor(x: ArrayView1<'_, f64>, beta: ArrayView1<'_, f64>) -> f64 {
    x.iter().zip(beta.iter()).fold(0.0, |acc, (a, b)| acc + a * b)
}

/// Projection of `t` onto `[-r, r]`.
pub fn clamp(t: f64, r: f64) -> f64 {
    t.max(-r).min(r)
}

/// Scaled negative log-likelihood `(1/n) sum_i [psi(x_i'beta) - y_i x_i'beta]`.
pub fn negative_log_likelihood(family: &GlmFamily, beta: &ParamVector, data: &Dataset) -> Result<f64> {
    ensure_dim(data.d(), beta.len())?;
    let mut total = 0.0;
    for (row, &y) in data.x().rows().into_iter().zip(data.y().iter()) {
        let u = linear_predictor(row, beta.as_array().view());
        total += family.psi(u) - y * u;
    }
    Ok(total / data.n() as f64)
}

/// `(1/n) sum_i (psi'(x_i'beta) - clamp(y_i, r)) x_i`.
///
/// Equals the gradient of [`negative_log_likelihood`] whenever `r >= max |y_i|`;
/// pass `f64::INFINITY` for the untruncated gradient.
pub fn clamped_gradient(
    family: &GlmFamily,
    beta: &ParamVector,
    data: &Dataset,
    r: f64,
) -> Result<Array1<f64>> {
    ensure_dim(data.d(), beta.len())?;
    if r.is_nan() || r < 0.0 {
        return Err(Error::InvalidParameter(format!("truncation must be >= 0, got {r}")));
    }
    let mut grad = Array1::<f64>::zeros(data.d());
    for (row, &y) in data.x().rows().into_iter().zip(data.y().iter()) {
        let u = linear_predictor(row, beta.as_array().view());
        let residual = family.psi_prime(u) - clamp(y, r);
        grad.scaled_add(residual, &row);
    }
    grad /= data.n() as f64;
    Ok(grad)
}

/// Truncation level `min(ess sup |y|, c1 + sqrt(2 c2 c(sigma) log n))`, with an
/// infinite member of the minimum treated as absent.
pub fn default_truncation(family: &GlmFamily, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("truncation recipe needs n >= 2, got {n}")));
    }
    let c1 = family.psi_prime_bound();
    let c2 = family.psi_double_prime_bound();
    let tail = if c1.is_finite() && c2.is_finite() {
        c1 + (2.0 * c2 * family.c_sigma() * (n as f64).ln()).sqrt()
    } else {
        f64::INFINITY
    };
    let r = family.response_sup().min(tail);
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::Unsupported(format!(
            "{} family has neither a bounded response nor finite c1/c2; supply the truncation level explicitly",
            family.name()
        )))
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `(epsilon, delta)` differential privacy guarantee.
///
/// `epsilon = +inf` is accepted and denotes the non-private setting, in which
/// every calibrated noise scale evaluates to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidParameter(format!("delta must lie in [0, 1), got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn non_private() -> Self {
        Self { epsilon: f64::INFINITY, delta: 0.0 }
    }

    pub fn is_private(&self) -> bool {
        self.epsilon.is_finite()
    }

    /// The per-step budget `(epsilon / k, delta / k)` whose `k`-fold basic
    /// composition is this budget.
    pub fn split(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("cannot split a budget into 0 parts".into()));
        }
        Ok(Self {
            epsilon: self.epsilon / k as f64,
            delta: self.delta / k as f64,
        })
    }
}

/// Basic composition: `k` runs of an `(eps, delta)` mechanism are `(k eps, k delta)`-DP.
///
/// Budgets are treated as the decimal numbers they print as, so
/// `compose_basic((0.1, 1e-6), 10)` is exactly `(1.0, 1e-5)`, and composing
/// `budget.split(k)` `k` times gives back `budget` exactly whenever its
/// entries have at most 15 significant decimal digits.
pub fn compose_basic(budget: PrivacyBudget, k: usize) -> Result<PrivacyBudget> {
    if k == 0 {
        return Err(Error::InvalidParameter("composition needs k >= 1".into()));
    }
    let k = k as u64;
    PrivacyBudget::new(scale_decimal(budget.epsilon, k), scale_decimal(budget.delta, k))
}

/// Advanced composition:
/// `(sqrt(2k log(1/delta')) eps + k (e^eps - 1) eps, k delta + delta')`.
pub fn compose_advanced(budget: PrivacyBudget, k: usize, delta_prime: f64) -> Result<PrivacyBudget> {
    if k == 0 {
        return Err(Error::InvalidParameter("composition needs k >= 1".into()));
    }
    if !(delta_prime > 0.0 && delta_prime < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta' must lie in (0, 1), got {delta_prime}"
        )));
    }
    let eps = budget.epsilon;
    let kf = k as f64;
    let epsilon = (2.0 * kf * (1.0 / delta_prime).ln()).sqrt() * eps + kf * eps.exp_m1() * eps;
    let delta = scale_decimal(budget.delta, k as u64) + delta_prime;
    PrivacyBudget::new(epsilon, delta)
}

/// `x * k`, inverting an earlier `x = total / k` exactly where possible.
///
/// The product is formed on the shortest decimal representation of `x` and
/// then rounded to 15, 16 or 17 significant digits; the first rounding that
/// divides back to `x` wins, otherwise the 17-digit value is returned.
fn scale_decimal(x: f64, k: u64) -> f64 {
    let product = decimal_product(x, k);
    if k == 0 || !product.is_finite() {
        return product;
    }
    for digits in 15..=17 {
        let candidate: f64 = format!("{:.*e}", digits - 1, product).parse().unwrap_or(product);
        if candidate / k as f64 == x {
            return candidate;
        }
    }
    product
}

fn decimal_product(x: f64, k: u64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x * k as f64;
    }
    let repr = format!("{:e}", x);
    let Some((mantissa, exponent)) = repr.split_once('e') else {
        return x * k as f64;
    };
    let Ok(mut exponent) = exponent.parse::<i32>() else {
        return x * k as f64;
    };
    let negative = mantissa.starts_with('-');
    let mantissa = mantissa.trim_start_matches('-');
    let digits: String = match mantissa.split_once('.') {
        Some((int, frac)) => {
            exponent -= frac.len() as i32;
            format!("{int}{frac}")
        }
        None => mantissa.to_string(),
    };
    match digits.parse::<u128>().ok().and_then(|m| m.checked_mul(k as u128)) {
        Some(product) => {
            let sign = if negative { "-" } else { "" };
            format!("{sign}{product}e{exponent}").parse().unwrap_or(x * k as f64)
        }
        None => x * k as f64,
    }
}

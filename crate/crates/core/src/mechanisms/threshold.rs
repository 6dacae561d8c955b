//! Private top-`s` selection by peeling.
//!
//! Each of the `s` rounds perturbs every magnitude `|v_j|` with fresh Laplace
//! noise and moves the noisy argmax over the not-yet-selected coordinates into
//! the support. The selected coordinates are then released with one more
//! Laplace perturbation at the same scale.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use super::budget::PrivacyBudget;
use super::noise::laplace_draw;
use super::rng::RngStream;
use crate::error::{Error, Result};

/// Internals of one [`noisy_hard_threshold`] call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTrace {
    /// Support in selection order (protected coordinates first).
    pub selected_support: Vec<usize>,
    /// `||w_i||_inf` of the full selection noise vector of each peeling round.
    pub selection_noise_linf: Vec<f64>,
    /// Output noise added to each selected coordinate, aligned with `selected_support`.
    pub output_noise: Vec<f64>,
}

/// Per-coordinate Laplace scale `lambda * 2 sqrt(3 s log(1/delta)) / epsilon`.
///
/// Zero when `lambda` is zero or the budget is non-private; otherwise a
/// positive `delta` is required.
pub fn peeling_noise_scale(lambda: f64, s: usize, budget: PrivacyBudget) -> Result<f64> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if lambda == 0.0 || !budget.is_private() {
        return Ok(0.0);
    }
    if budget.delta <= 0.0 {
        return Err(Error::Unsupported(
            "noisy hard thresholding needs delta > 0 when lambda > 0".into(),
        ));
    }
    Ok(lambda * 2.0 * (3.0 * s as f64 * (1.0 / budget.delta).ln()).sqrt() / budget.epsilon)
}

/// Noisy hard thresholding of `v` to `s` coordinates.
///
/// `lambda` must bound `||v(Z) - v(Z')||_inf` over adjacent datasets for the
/// output to be `budget`-private. Ties in the noisy argmax go to the lowest index.
pub fn noisy_hard_threshold(
    v: ArrayView1<'_, f64>,
    s: usize,
    budget: PrivacyBudget,
    lambda: f64,
    rng: RngStream,
) -> Result<(Array1<f64>, ThresholdTrace)> {
    noisy_hard_threshold_protected(v, s, &[], budget, lambda, rng)
}

/// Like [`noisy_hard_threshold`], but the `protected` coordinates always enter
/// the support and count towards `s`; only `s - protected.len()` coordinates
/// are chosen by peeling.
pub fn noisy_hard_threshold_protected(
    v: ArrayView1<'_, f64>,
    s: usize,
    protected: &[usize],
    budget: PrivacyBudget,
    lambda: f64,
    rng: RngStream,
) -> Result<(Array1<f64>, ThresholdTrace)> {
    let d = v.len();
    if s == 0 || s > d {
        return Err(Error::InvalidParameter(format!("sparsity must satisfy 1 <= s <= d = {d}, got {s}")));
    }
    if protected.len() > s {
        return Err(Error::InvalidParameter(format!(
            "{} protected coordinates exceed sparsity {s}",
            protected.len()
        )));
    }
    let scale = peeling_noise_scale(lambda, s, budget)?;

    let mut in_support = vec![false; d];
    let mut support = Vec::with_capacity(s);
    for &j in protected {
        if j >= d || in_support[j] {
            return Err(Error::InvalidParameter(format!("bad protected coordinate {j}")));
        }
        in_support[j] = true;
        support.push(j);
    }

    let rounds = s - protected.len();
    let mut selection_noise_linf = Vec::with_capacity(rounds);
    for round in 0..rounds {
        let mut g = rng.derive(round as u64).generator();
        let mut best: Option<(usize, f64)> = None;
        let mut linf = 0.0f64;
        for j in 0..d {
            // the full noise vector is drawn so that its sup-norm is reported
            let w = if scale > 0.0 { laplace_draw(scale, &mut g) } else { 0.0 };
            linf = linf.max(w.abs());
            if in_support[j] {
                continue;
            }
            let score = v[j].abs() + w;
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((j, score));
            }
        }
        let (j, _) = best.expect("fewer than d coordinates are selected");
        in_support[j] = true;
        support.push(j);
        selection_noise_linf.push(linf);
    }

    let mut out = Array1::zeros(d);
    let mut output_noise = Vec::with_capacity(s);
    let mut g = rng.derive(rounds as u64).generator();
    for &j in &support {
        let w = if scale > 0.0 { laplace_draw(scale, &mut g) } else { 0.0 };
        output_noise.push(w);
        out[j] = if scale > 0.0 { v[j] + w } else { v[j] };
    }
    Ok((
        out,
        ThresholdTrace {
            selected_support: support,
            selection_noise_linf,
            output_noise,
        },
    ))
}

/// Exact top-`s` projection with lowest-index tie-breaking.
pub fn hard_threshold(v: ArrayView1<'_, f64>, s: usize) -> Result<Array1<f64>> {
    noisy_hard_threshold(v, s, PrivacyBudget::non_private(), 0.0, RngStream::from_seed(0)).map(|(out, _)| out)
}

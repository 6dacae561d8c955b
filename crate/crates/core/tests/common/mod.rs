//! Independent reference implementations used as test oracles. They work on
//! plain vectors and share no code with the library beyond data generation.
#![allow(dead_code)]

use privglm::experiments::sample_dataset;
use privglm::glm::{Dataset, GlmFamily, ParamVector};
use privglm::mechanisms::RngStream;

pub fn logistic_mean(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Rows of the design as plain vectors.
pub fn rows(data: &Dataset) -> Vec<Vec<f64>> {
    (0..data.n()).map(|i| data.row(i).to_vec()).collect()
}

/// `(1/n) sum_i (mean(x_i'b) - clamp(y_i, r)) x_i`, summed in row order.
pub fn reference_gradient(mean: fn(f64) -> f64, x: &[Vec<f64>], y: &[f64], b: &[f64], r: f64) -> Vec<f64> {
    let d = b.len();
    let mut g = vec![0.0; d];
    for (row, &yi) in x.iter().zip(y) {
        let mut u = 0.0;
        for j in 0..d {
            u += row[j] * b[j];
        }
        let res = mean(u) - yi.max(-r).min(r);
        for j in 0..d {
            g[j] += res * row[j];
        }
    }
    for gj in &mut g {
        *gj /= x.len() as f64;
    }
    g
}

/// Plain full-batch gradient descent from zero; returns every iterate.
pub fn reference_gd(mean: fn(f64) -> f64, data: &Dataset, step: f64, iterations: usize, r: f64) -> Vec<Vec<f64>> {
    let (x, y) = (rows(data), data.y().to_vec());
    let mut b = vec![0.0; data.d()];
    let mut out = vec![b.clone()];
    for _ in 0..iterations {
        let g = reference_gradient(mean, &x, &y, &b, r);
        b = b.iter().zip(&g).map(|(bj, gj)| bj - gj * step).collect();
        out.push(b.clone());
    }
    out
}

/// Keeps the `s` largest-magnitude entries (lower index first among ties),
/// found by sorting.
pub fn top_s_by_sort(v: &[f64], s: usize) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    let mut out = vec![0.0; v.len()];
    for &j in &idx[..s] {
        out[j] = v[j];
    }
    out
}

/// Exact iterative hard thresholding from zero; returns every iterate.
pub fn reference_iht(
    mean: fn(f64) -> f64,
    data: &Dataset,
    s: usize,
    step: f64,
    iterations: usize,
    r: f64,
) -> Vec<Vec<f64>> {
    let (x, y) = (rows(data), data.y().to_vec());
    let mut b = vec![0.0; data.d()];
    let mut out = vec![b.clone()];
    for _ in 0..iterations {
        let g = reference_gradient(mean, &x, &y, &b, r);
        let half: Vec<f64> = b.iter().zip(&g).map(|(bj, gj)| bj - gj * step).collect();
        b = top_s_by_sort(&half, s);
        out.push(b.clone());
    }
    out
}

/// Monte Carlo estimate of `E_beta sum_j d/d beta_j E[M(X)_j | beta]` by
/// central differences with step `h`. Datasets at `beta +- h e_j` share
/// their design and response uniforms, and the estimator gets the same
/// stream on both sides. Returns (mean, standard error) over `reps`.
pub fn fd_completeness_oracle<E, B>(
    family: &GlmFamily,
    estimator: E,
    beta_sampler: B,
    n: usize,
    reps: usize,
    h: f64,
    rng: RngStream,
) -> (f64, f64)
where
    E: Fn(&Dataset, RngStream) -> ParamVector,
    B: Fn(RngStream) -> ParamVector,
{
    let mut values = Vec::with_capacity(reps);
    for rep in 0..reps {
        let stream = rng.derive(rep as u64);
        let beta = beta_sampler(stream.derive(0));
        let mut total = 0.0;
        for j in 0..beta.len() {
            let shifted = |sign: f64| {
                let mut b = beta.to_vec();
                b[j] += sign * h;
                let data = sample_dataset(family, &ParamVector::from_vec(b).unwrap(), n, stream.derive(1));
                estimator(&data, stream.derive(2))[j]
            };
            total += (shifted(1.0) - shifted(-1.0)) / (2.0 * h);
        }
        values.push(total);
    }
    mean_se(&values)
}

pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Squared distance between two plain vectors.
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

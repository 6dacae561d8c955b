use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::glm::GlmFamily;

use super::synthetic::SyntheticSpec;
use super::trajectory::{run_trajectory, EstimatorKind, EstimatorSettings, TrajectoryOutcome};

/// Iterations used by the trajectory presets.
pub const PRESET_ITERATIONS: usize = 10;
/// Seeds used by the trajectory presets.
pub const PRESET_SEEDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    #[serde(rename = "lowdim-traj")]
    LowDim,
    #[serde(rename = "sparse-traj")]
    Sparse,
}

/// Cartesian grid of trajectory experiments over `n x d x s* x epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryGrid {
    pub kind: GridKind,
    #[serde(default = "default_family", with = "family_text")]
    pub family: GlmFamily,
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<usize>,
    #[serde(deserialize_with = "one_or_many")]
    pub d: Vec<usize>,
    /// True sparsity levels; required for sparse grids, ignored otherwise.
    #[serde(default, deserialize_with = "one_or_many")]
    pub s: Vec<usize>,
    #[serde(with = "epsilon_list")]
    pub epsilon: Vec<f64>,
    /// Defaults to `1/(2n)` for each cell.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_step")]
    pub step_size: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    /// Estimator sparsity is this multiple of the true sparsity.
    #[serde(default = "default_multiplier")]
    pub sparsity_multiplier: usize,
    #[serde(default, deserialize_with = "one_or_many")]
    pub seeds: Vec<u64>,
}

fn default_family() -> GlmFamily {
    GlmFamily::logistic()
}
fn default_step() -> f64 {
    1.0
}
fn default_iterations() -> usize {
    PRESET_ITERATIONS
}
fn default_multiplier() -> usize {
    2
}

/// One point of a [`TrajectoryGrid`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub label: String,
    pub spec: SyntheticSpec,
    pub settings: EstimatorSettings,
}

impl TrajectoryGrid {
    /// Named grids. `fig1a`-`fig1c` vary d, n and epsilon for noisy gradient
    /// descent; `fig2a`-`fig2c` vary s*, n and epsilon for noisy IHT. Unless
    /// `full`, the sparse grids are scaled to d = 2000 with n and s* halved.
    pub fn preset(name: &str, full: bool) -> Result<Self> {
        let inf = f64::INFINITY;
        let low = |n: Vec<usize>, d: Vec<usize>, epsilon: Vec<f64>| Self {
            kind: GridKind::LowDim,
            family: GlmFamily::logistic(),
            n,
            d,
            s: Vec::new(),
            epsilon,
            delta: None,
            step_size: 1.0,
            iterations: PRESET_ITERATIONS,
            sparsity_multiplier: 2,
            seeds: (0..PRESET_SEEDS as u64).collect(),
        };
        let (scale, d) = if full { (1, 10_000) } else { (2, 2_000) };
        let sparse = |n: Vec<usize>, s: Vec<usize>, epsilon: Vec<f64>| Self {
            kind: GridKind::Sparse,
            n: n.into_iter().map(|v| v / scale).collect(),
            d: vec![d],
            s: s.into_iter().map(|v| v / scale).collect(),
            ..low(Vec::new(), Vec::new(), epsilon)
        };
        Ok(match name {
            "fig1a" => low(vec![40_000], vec![10, 20, 40], vec![0.5]),
            "fig1b" => low(vec![20_000, 40_000, 80_000], vec![20], vec![0.5]),
            "fig1c" => low(vec![40_000], vec![20], vec![0.2, 0.5, 0.8, inf]),
            "fig2a" => sparse(vec![40_000], vec![10, 20, 40], vec![0.5]),
            "fig2b" => sparse(vec![20_000, 40_000, 80_000], vec![10], vec![0.5]),
            "fig2c" => sparse(vec![40_000], vec![10], vec![0.2, 0.5, 0.8, inf]),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown preset '{other}' (expected fig1a, fig1b, fig1c, fig2a, fig2b or fig2c)"
                )))
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str, len: usize| {
            if len == 0 {
                Err(Error::InvalidParameter(format!("grid axis '{name}' is empty")))
            } else {
                Ok(())
            }
        };
        empty("n", self.n.len())?;
        empty("d", self.d.len())?;
        empty("epsilon", self.epsilon.len())?;
        empty("seeds", self.seeds.len())?;
        if self.kind == GridKind::Sparse {
            empty("s", self.s.len())?;
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        if self.sparsity_multiplier == 0 {
            return Err(Error::InvalidParameter("sparsity_multiplier must be >= 1".into()));
        }
        if let Some(&e) = self.epsilon.iter().find(|e| e.is_nan() || **e <= 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {e}")));
        }
        Ok(())
    }

    /// Expands the grid; cell order is n, then d, then s*, then epsilon.
    pub fn cells(&self) -> Result<Vec<GridCell>> {
        self.validate()?;
        let s_axis: Vec<Option<usize>> = match self.kind {
            GridKind::LowDim => vec![None],
            GridKind::Sparse => self.s.iter().copied().map(Some).collect(),
        };
        let mut cells = Vec::new();
        for &n in &self.n {
            for &d in &self.d {
                for &s_star in &s_axis {
                    for &epsilon in &self.epsilon {
                        let estimator = match s_star {
                            None => EstimatorKind::LowDim,
                            Some(s) => EstimatorKind::Sparse { sparsity: (s * self.sparsity_multiplier).min(d) },
                        };
                        let mut label = format!("n={n},d={d}");
                        if let Some(s) = s_star {
                            label.push_str(&format!(",s={s}"));
                        }
                        label.push_str(&format!(",eps={epsilon}"));
                        let spec = SyntheticSpec { n, d, sparsity: s_star, family: self.family, seed: 0 };
                        spec.validate()?;
                        cells.push(GridCell {
                            label,
                            spec,
                            settings: EstimatorSettings {
                                estimator,
                                step_size: self.step_size,
                                iterations: self.iterations,
                                epsilon,
                                delta: self.delta,
                                truncation: None,
                                sigma_x: 1.0,
                            },
                        });
                    }
                }
            }
        }
        Ok(cells)
    }
}

impl GridCell {
    pub fn run(&self, seeds: &[u64]) -> Result<TrajectoryOutcome> {
        run_trajectory(&self.spec, &self.settings, seeds, &self.label)
    }
}

/// Parses an epsilon given as a positive number or as `inf`/`infinity`.
pub fn parse_epsilon(text: &str) -> Result<f64> {
    let t = text.trim();
    let v = match t.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "+inf" => f64::INFINITY,
        _ => t.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad epsilon '{text}'")))?,
    };
    if v.is_nan() || v <= 0.0 {
        return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {text}")));
    }
    Ok(v)
}

/// A grid axis written either as a list or as a single value.
#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            Self::One(v) => vec![v],
            Self::Many(v) => v,
        }
    }
}

fn one_or_many<'de, D, T>(de: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(OneOrMany::<T>::deserialize(de)?.into_vec())
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EpsilonRepr {
    Number(f64),
    Text(String),
}

mod epsilon_list {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[f64], ser: S) -> std::result::Result<S::Ok, S::Error> {
        let reprs: Vec<EpsilonRepr> = values
            .iter()
            .map(|&v| if v.is_finite() { EpsilonRepr::Number(v) } else { EpsilonRepr::Text("inf".into()) })
            .collect();
        reprs.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<f64>, D::Error> {
        OneOrMany::<EpsilonRepr>::deserialize(de)?
            .into_vec()
            .into_iter()
            .map(|r| match r {
                EpsilonRepr::Number(v) => Ok(v),
                EpsilonRepr::Text(t) => parse_epsilon(&t).map_err(serde::de::Error::custom),
            })
            .collect()
    }
}

mod family_text {
    use super::*;

    pub fn serialize<S: Serializer>(family: &GlmFamily, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match family.kind() {
            crate::glm::FamilyKind::Linear => ser.serialize_str(&format!("linear:{}", family.sigma())),
            _ => ser.serialize_str(family.name()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<GlmFamily, D::Error> {
        String::deserialize(de)?.parse().map_err(serde::de::Error::custom)
    }
}

//! Scenario configuration: a JSON schema binding shapes, target functions,
//! and per-module parameters. Unknown keys are rejected.

use crate::basis::BasisSpec;
use crate::geometry::{sample_shape, GeometryError, Point, SampledSet, Scene, ShapeDescriptor};
use crate::minimax::TargetFunction;
use crate::{HarmonicPoly};
use serde::Deserialize;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    SchemaVersion(u32),
    #[error("config is missing the `{0}` section required by this command")]
    MissingSection(&'static str),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    pub shape: ShapeDescriptor,
    pub mesh: f64,
}

impl ShapeSpec {
    pub fn sample(&self, refine: bool) -> Result<SampledSet, ScenarioError> {
        let mesh = if refine { self.mesh / 2.0 } else { self.mesh };
        Ok(sample_shape(&self.shape, mesh)?)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub k: Option<ShapeSpec>,
    pub e: Option<ShapeSpec>,
    pub d: Option<ShapeSpec>,
    /// Zero set drawn from K's samples (uniqueness scenes).
    pub e_from_k: Option<ShapeDescriptor>,
    /// Neighborhood margin for uniqueness scenes.
    pub delta: Option<f64>,
    /// Lattice pitch of the neighborhood domain.
    pub d_mesh: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionConfig {
    Harmonic { dim: usize, max_degree: usize, coeffs: Vec<f64> },
    PoleRe { q: f64 },
    AbsX1,
    Table { points: Vec<Vec<f64>>, values: Vec<f64> },
    /// Pole residual after removing its own best approximant at `degree`,
    /// optionally zeroed on the scene's zero set.
    PoleMinusBest { q: f64, degree: usize, zero_on_e: bool },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxConfig {
    pub m_max: usize,
    pub window: usize,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_margin() -> f64 {
    crate::rates::DEFAULT_MARGIN
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiConfig {
    pub epsilon_grid: Option<Vec<f64>>,
    pub alpha_per_epsilon: Option<usize>,
    pub surrogate_degree: Option<usize>,
    pub tolerance: Option<f64>,
    pub grid_nx: usize,
    pub grid_ny: usize,
}

impl ChiConfig {
    pub fn params(&self, refine: bool) -> crate::chi::ChiParams {
        let mut p = crate::chi::ChiParams::default();
        if let Some(g) = &self.epsilon_grid {
            p.epsilon_grid = g.clone();
        }
        if let Some(a) = self.alpha_per_epsilon {
            p.alpha_per_epsilon = a;
        }
        if let Some(n) = self.surrogate_degree {
            p.surrogate_degree = n;
        }
        if let Some(t) = self.tolerance {
            p.tolerance = t;
        }
        if refine {
            p.surrogate_degree *= 2;
            p.alpha_per_epsilon *= 2;
        }
        p
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityConfig {
    pub x0: Vec<f64>,
    pub r: f64,
    pub m_max: usize,
    pub window: usize,
    #[serde(default = "default_theta")]
    pub theta: f64,
    pub ball_mesh: f64,
    /// Also profile at r/2 and r/4.
    #[serde(default)]
    pub scan: bool,
}

fn default_theta() -> f64 {
    crate::regularity::DEFAULT_THETA
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoConstantsConfig {
    pub alpha: f64,
    pub eps: f64,
    pub degree: usize,
    pub n_samples: usize,
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub dump_ratios: bool,
    #[serde(default)]
    pub sublevel_check: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessSection {
    pub alpha: f64,
    pub beta: f64,
    pub m_max: usize,
    pub window: usize,
    pub eps_margin: Option<f64>,
    pub b: Option<f64>,
    pub surrogate_degree: Option<usize>,
    pub grid_n: Option<usize>,
    pub probe_m_max: Option<usize>,
    pub probe_r: Option<f64>,
    pub tc_samples: Option<usize>,
    pub nbhd_mesh: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub label: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_svg")]
    pub svg: bool,
    pub scene: SceneConfig,
    pub function: Option<FunctionConfig>,
    pub approx: Option<ApproxConfig>,
    pub chi: Option<ChiConfig>,
    pub regularity: Option<RegularityConfig>,
    pub two_constants: Option<TwoConstantsConfig>,
    pub uniqueness: Option<UniquenessSection>,
}

fn default_seed() -> u64 {
    7
}

fn default_svg() -> bool {
    true
}

impl ScenarioConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ScenarioConfig = serde_json::from_str(&text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::SchemaVersion(cfg.schema_version));
        }
        Ok(cfg)
    }

    /// Materializes the target function; functions that depend on the scene
    /// (residual constructions) receive it.
    pub fn build_function(
        &self,
        scene: Option<&Scene>,
    ) -> Result<TargetFunction, ScenarioError> {
        let fc = self
            .function
            .as_ref()
            .ok_or(ScenarioError::MissingSection("function"))?;
        match fc {
            FunctionConfig::Harmonic { dim, max_degree, coeffs } => {
                let spec = BasisSpec::new(*dim, *max_degree)
                    .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
                let p = HarmonicPoly::new(spec, coeffs.clone())
                    .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
                Ok(TargetFunction::Harmonic(p))
            }
            FunctionConfig::PoleRe { q } => Ok(TargetFunction::PoleRe { q: *q }),
            FunctionConfig::AbsX1 => Ok(TargetFunction::AbsX1),
            FunctionConfig::Table { points, values } => {
                if points.len() != values.len() {
                    return Err(ScenarioError::Invalid(
                        "table points/values length mismatch".into(),
                    ));
                }
                let pts: Result<Vec<Point>, _> =
                    points.iter().map(|p| Point::from_slice(p)).collect();
                Ok(TargetFunction::Table {
                    label: format!("{}_table", self.label),
                    points: pts?,
                    values: values.clone(),
                })
            }
            FunctionConfig::PoleMinusBest { q, degree, zero_on_e } => {
                let scene = scene.ok_or_else(|| {
                    ScenarioError::Invalid(
                        "pole_minus_best needs a uniqueness scene".into(),
                    )
                })?;
                let (f, _) = crate::uniqueness::pole_minus_best(*q, *degree, scene, *zero_on_e)
                    .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
                Ok(f)
            }
        }
    }

    /// Builds the uniqueness scene (K, zero set from K, δ-neighborhood).
    pub fn build_scene(&self, refine: bool) -> Result<Scene, ScenarioError> {
        let k = self
            .scene
            .k
            .as_ref()
            .ok_or(ScenarioError::MissingSection("scene.k"))?
            .sample(refine)?;
        let e_shape = self
            .scene
            .e_from_k
            .as_ref()
            .ok_or(ScenarioError::MissingSection("scene.e_from_k"))?;
        let delta = self
            .scene
            .delta
            .ok_or(ScenarioError::MissingSection("scene.delta"))?;
        let d_mesh = self.scene.d_mesh.unwrap_or(2.0 * k.mesh);
        let d_mesh = if refine { d_mesh / 2.0 } else { d_mesh };
        Ok(Scene::with_neighborhood(k, e_shape, delta, d_mesh)?)
    }

    pub fn require_k(&self, refine: bool) -> Result<SampledSet, ScenarioError> {
        self.scene
            .k
            .as_ref()
            .ok_or(ScenarioError::MissingSection("scene.k"))?
            .sample(refine)
    }

    pub fn require_e(&self, refine: bool) -> Result<SampledSet, ScenarioError> {
        self.scene
            .e
            .as_ref()
            .ok_or(ScenarioError::MissingSection("scene.e"))?
            .sample(refine)
    }

    pub fn require_d(&self, refine: bool) -> Result<SampledSet, ScenarioError> {
        self.scene
            .d
            .as_ref()
            .ok_or(ScenarioError::MissingSection("scene.d"))?
            .sample(refine)
    }
}

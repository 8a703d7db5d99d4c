//! Run configuration: one JSON document shared by every subcommand.

use std::path::Path;

use anyhow::{bail, Context};
use berryfw::dynamics::Rk45Options;
use berryfw::verify::VerifyOptions;
use berryfw::{EnergyForm, Method, ModelConfig, ModelSpec, PhasePoint, Tolerances};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Per-axis grid over R and P. Axes with count 1 sit at `min`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "R")]
    pub r: AxisSet,
    #[serde(rename = "P")]
    pub p: AxisSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSet {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub count: [usize; 3],
}

impl AxisSet {
    fn values(&self, k: usize) -> Vec<f64> {
        let n = self.count[k];
        if n == 1 {
            return vec![self.min[k]];
        }
        (0..n)
            .map(|i| self.min[k] + (self.max[k] - self.min[k]) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

impl GridSpec {
    /// Row-major over (R_x, R_y, R_z, P_x, P_y, P_z), last axis fastest.
    pub fn points(&self) -> Vec<PhasePoint> {
        let axes: Vec<Vec<f64>> = (0..3)
            .map(|k| self.r.values(k))
            .chain((0..3).map(|k| self.p.values(k)))
            .collect();
        let mut out = vec![[0.0; 6]];
        for (k, vals) in axes.iter().enumerate() {
            out = out
                .into_iter()
                .flat_map(|x| {
                    vals.iter().map(move |&v| {
                        let mut y = x;
                        y[k] = v;
                        y
                    })
                })
                .collect();
        }
        out.iter().map(PhasePoint::from_array).collect()
    }

    fn validate(&self) -> anyhow::Result<()> {
        for a in [&self.r, &self.p] {
            if a.count.contains(&0) {
                bail!("grid counts must be at least 1");
            }
            if a.min.iter().chain(a.max.iter()).any(|v| !v.is_finite()) {
                bail!("grid bounds must be finite");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryConfig {
    pub initial: Vec<InitialState>,
    /// Every initial state is run once per helicity listed here.
    pub lambdas: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
    pub method: Method,
    pub rk45: Rk45Options,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub r: [f64; 3],
    #[serde(rename = "P")]
    pub p: [f64; 3],
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            initial: Vec::new(),
            lambdas: vec![1.0, -1.0],
            dt: 1e-3,
            steps: 1000,
            method: Method::Rk4,
            rk45: Rk45Options::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BracketConfig {
    pub cases: usize,
    pub max_degree: usize,
}

impl Default for BracketConfig {
    fn default() -> Self {
        BracketConfig {
            cases: 200,
            max_degree: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Read from the same document's "model" tag and parameters.
    #[serde(skip_deserializing)]
    pub model: Option<ModelConfig>,
    pub hbar: f64,
    pub points: Vec<PhasePoint>,
    pub grid: Option<GridSpec>,
    pub order: u8,
    pub form: EnergyForm,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub trajectory: TrajectoryConfig,
    pub verify: VerifyOptions,
    pub bracket: BracketConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: None,
            hbar: 1e-2,
            points: Vec::new(),
            grid: None,
            order: 2,
            form: EnergyForm::Canonical,
            seed: 1,
            tolerances: Tolerances::default(),
            trajectory: TrajectoryConfig::default(),
            verify: VerifyOptions::default(),
            bracket: BracketConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).context("config is not valid JSON")?;
        let mut cfg: RunConfig = serde_json::from_value(value.clone()).context("config schema")?;
        if value.get("model").is_some() {
            cfg.model = Some(serde_json::from_value(value).context("model schema")?);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            bail!("hbar must be positive, got {}", self.hbar);
        }
        if self.order > 2 {
            bail!("order must be 0, 1 or 2, got {}", self.order);
        }
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        Ok(())
    }

    pub fn model_spec(&self) -> anyhow::Result<ModelSpec> {
        let Some(m) = &self.model else {
            bail!("config has no \"model\" entry");
        };
        Ok(ModelSpec::from_config(m)?)
    }

    /// Explicit points followed by the grid.
    pub fn phase_points(&self) -> anyhow::Result<Vec<PhasePoint>> {
        let mut pts = self.points.clone();
        if let Some(g) = &self.grid {
            pts.extend(g.points());
        }
        if pts.is_empty() {
            bail!("config lists no points and no grid");
        }
        Ok(pts)
    }
}

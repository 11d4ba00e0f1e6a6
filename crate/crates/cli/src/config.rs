use std::f64::consts::PI;

use memsx_core::dynamics::{ForceModel, PlateState, TimeStepping};
use memsx_core::forces::ReducedForce;
use memsx_core::potential::PotentialModel;
use memsx_core::steady::{PullInOptions, SteadyOptions};
use memsx_core::{DeflectionField, Grid, ModelParams, PermittivityProfile, ProfileFamily};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    pub geometry: GeometrySection,
    pub permittivity: ProfileFamily,
    pub dynamics: DynamicsSection,
    pub output: OutputSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            model: ModelSection::default(),
            geometry: GeometrySection::default(),
            permittivity: default_profile(),
            dynamics: DynamicsSection::default(),
            output: OutputSection::default(),
        }
    }
}

fn default_profile() -> ProfileFamily {
    ProfileFamily::Constant { value: 2.0 }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// Force driving `simulate`, `steady`, `pullin` and `bifurcate`.
    pub force: ForceChoice,
    /// Potential problem for `potential`, `force` and full-force runs.
    pub potential: PotentialModel,
    pub params: ModelParams,
    pub shape_check: ShapeCheck,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            force: ForceChoice::default(),
            potential: PotentialModel::Transmission,
            params: ModelParams::default(),
            shape_check: ShapeCheck::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForceChoice {
    /// `1/2 (1 + u)^-2`.
    #[default]
    Classical,
    /// `1/2 (1 + u + offset)^-2`.
    Uniform { offset: f64 },
    /// Offset from the plate permittivity through the series resistance.
    ReducedTransmission,
    /// Offset `1 / sigma*(x, 0)` of a thin film.
    ReducedRobin,
    /// Fresh potential solve at every evaluation.
    Full,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeCheck {
    pub step: f64,
    pub fields: u64,
}

impl Default for ShapeCheck {
    fn default() -> Self {
        Self {
            step: 1e-5,
            fields: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub n_x: usize,
    pub n_z1: usize,
    pub n_z2: usize,
    pub initial: InitialShape,
    pub limits: LimitsSection,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            n_x: 63,
            n_z1: 33,
            n_z2: 9,
            initial: InitialShape::default(),
            limits: LimitsSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialShape {
    Flat { u0: f64 },
    /// `sum_k amplitudes[k-1] sin(k pi x)`.
    Modes { amplitudes: Vec<f64> },
}

impl Default for InitialShape {
    fn default() -> Self {
        InitialShape::Flat { u0: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    ThinPlateO1,
    ThinPlateOd,
    AspectRatio,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitsSection {
    pub study: Study,
    /// Decreasing `delta` or `eps` values.
    pub sequence: Vec<f64>,
}

impl Default for LimitsSection {
    fn default() -> Self {
        Self {
            study: Study::ThinPlateO1,
            sequence: vec![0.2, 0.1, 0.05, 0.025],
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    pub stepping: TimeStepping,
    pub steady: SteadyOptions,
    pub pullin: PullInOptions,
    pub sweep: Sweep,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub count: usize,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            lambda_min: 0.0,
            lambda_max: 3.0,
            count: 31,
        }
    }
}

impl Sweep {
    pub fn lambdas(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lambda_min];
        }
        let step = (self.lambda_max - self.lambda_min) / (self.count - 1) as f64;
        (0..self.count).map(|k| self.lambda_min + step * k as f64).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    /// Write deflection snapshots of `simulate`.
    pub snapshots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "memsx-out".into(),
            snapshots: true,
        }
    }
}

/// Parse error with its position in the document.
pub fn parse(text: &str) -> Result<Config, String> {
    serde_json::from_str(text).map_err(|e| {
        format!(
            "config error at line {}, column {}: {}",
            e.line(),
            e.column(),
            e
        )
    })
}

/// Resolved inputs shared by all subcommands.
pub struct Setup {
    pub grid: Grid,
    pub params: ModelParams,
    pub profile: PermittivityProfile,
    pub initial: DeflectionField,
}

impl Config {
    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn setup(&self) -> memsx_core::Result<Setup> {
        let g = &self.geometry;
        let grid = Grid::new(g.n_x, g.n_z1, g.n_z2)?;
        self.model.params.validate()?;
        let params = self.model.params.clone();
        let profile = PermittivityProfile::from_family(self.permittivity);
        let initial = match &g.initial {
            InitialShape::Flat { u0 } => DeflectionField::flat(&grid, *u0)?,
            InitialShape::Modes { amplitudes } => DeflectionField::from_fn(
                &grid,
                |x| {
                    amplitudes
                        .iter()
                        .enumerate()
                        .map(|(k, a)| a * ((k + 1) as f64 * PI * x).sin())
                        .sum()
                },
                params.u_max,
            )?,
        };
        Ok(Setup {
            grid,
            params,
            profile,
            initial,
        })
    }

    pub fn force_model(&self, s: &Setup) -> memsx_core::Result<ForceModel> {
        Ok(match &self.model.force {
            ForceChoice::Classical => ForceModel::classical(),
            ForceChoice::Uniform { offset } => ForceModel::Reduced {
                force: ReducedForce::uniform(&s.grid, *offset),
            },
            ForceChoice::ReducedTransmission => ForceModel::Reduced {
                force: ReducedForce::from_profile(&s.profile, &s.params, &s.grid)?,
            },
            ForceChoice::ReducedRobin => ForceModel::Reduced {
                force: ReducedForce::robin(&s.profile, &s.grid)?,
            },
            ForceChoice::Full => ForceModel::Potential {
                model: self.model.potential,
                profile: s.profile,
            },
        })
    }

    pub fn initial_state(&self, s: &Setup) -> PlateState {
        PlateState::at_rest(&s.initial, &s.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_uses_defaults() {
        let c = parse("{}").unwrap();
        assert_eq!(c.model.force, ForceChoice::Classical);
        assert_eq!(c.geometry.n_x, 63);
        assert!(c.setup().is_ok());
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let e = parse("{\n  \"model\": {\n    \"lamda\": 1.0\n  }\n}").unwrap_err();
        assert!(e.contains("line 3"), "{e}");
        let e = parse("{\"model\": {\"params\": {\"lamda\": 1}}}").unwrap_err();
        assert!(e.contains("lamda"), "{e}");
    }

    #[test]
    fn hash_tracks_content() {
        let a = parse("{}").unwrap();
        let b = parse("{\"model\": {\"params\": {\"lambda\": 1.0}}}").unwrap();
        assert_eq!(a.hash(), parse("{ }").unwrap().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn sweep_endpoints() {
        let s = Sweep {
            lambda_min: 1.0,
            lambda_max: 2.0,
            count: 3,
        };
        assert_eq!(s.lambdas(), vec![1.0, 1.5, 2.0]);
    }
}

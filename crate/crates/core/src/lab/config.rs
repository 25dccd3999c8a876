//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantize::{weyl_kernel, Grid1D};
use crate::stability::{make_partition, PartitionBase, TranslationMode};
use crate::symbols::{builtin_field, BuiltinField, Coefficient, PerturbField, SymbolSpec, TrigTerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Hausdorff,
    Edges,
    Quasires,
    Gapwatch,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Hausdorff => "hausdorff",
            Mode::Edges => "edges",
            Mode::Quasires => "quasires",
            Mode::Gapwatch => "gapwatch",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hausdorff" => Ok(Mode::Hausdorff),
            "edges" => Ok(Mode::Edges),
            "quasires" => Ok(Mode::Quasires),
            "gapwatch" => Ok(Mode::Gapwatch),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

/// Built-in test symbols. None of them is canonical; they are the artifact's
/// default choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `cos ξ + cos x`
    Harper,
    /// `b(x) e^{-ξ²/2}` with `b` a unit Gaussian bump of width 2 centered at 2
    GaussBump,
    /// `e^{-ξ²/2} + b(x)` with the same bump as a potential
    GaussBandBump,
    /// `cos ξ + 2 e^{-x²/2}`
    HopBump,
}

impl Preset {
    pub fn symbol(&self) -> SymbolSpec {
        let bump = Coefficient::gauss(1.0, 2.0, 2.0);
        match self {
            Preset::Harper => SymbolSpec::harper(),
            Preset::GaussBump => SymbolSpec::gauss_xi(1.0, bump),
            Preset::GaussBandBump => SymbolSpec::sum(vec![
                SymbolSpec::gauss_xi(1.0, Coefficient::constant(1.0)),
                SymbolSpec::potential(bump),
            ]),
            Preset::HopBump => SymbolSpec::sum(vec![
                SymbolSpec::cos_xi(1.0, Coefficient::constant(1.0)),
                SymbolSpec::potential(Coefficient::gauss(2.0, 0.0, 1.0)),
            ]),
        }
    }
}

/// A symbol declared by family name and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SymbolConfig {
    Preset { name: Preset },
    /// `Σ c_k(x) cos(kξ)`
    Trig { terms: Vec<TrigTerm> },
    /// `b(x) exp(-ξ²/2σ²)`
    GaussXi { sigma: f64, coeff: Coefficient },
    Sum { parts: Vec<SymbolConfig> },
}

impl SymbolConfig {
    pub fn build(&self) -> SymbolSpec {
        match self {
            SymbolConfig::Preset { name } => name.symbol(),
            SymbolConfig::Trig { terms } => SymbolSpec::trig(terms.clone()),
            SymbolConfig::GaussXi { sigma, coeff } => SymbolSpec::gauss_xi(*sigma, coeff.clone()),
            SymbolConfig::Sum { parts } => SymbolSpec::sum(parts.iter().map(|p| p.build()).collect()),
        }
    }

    pub fn is_preset(&self) -> bool {
        matches!(self, SymbolConfig::Preset { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub half_width: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_width: 64.0,
            points: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_kappas")]
    pub kappas: Vec<f64>,
    /// Distances above `ℰ₊(0)` at which `𝔷` is placed.
    #[serde(default = "default_z_offsets")]
    pub z_offsets: Vec<f64>,
    /// Also place `𝔷` at the midpoint of every detected gap of `K₀`.
    #[serde(default = "default_true")]
    pub gap_points: bool,
}

fn default_deltas() -> Vec<f64> {
    vec![0.0125, 0.025, 0.05, 0.1, 0.2]
}

fn default_kappas() -> Vec<f64> {
    vec![0.3, 0.5, 0.7]
}

fn default_z_offsets() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}

fn default_true() -> bool {
    true
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            deltas: default_deltas(),
            kappas: default_kappas(),
            z_offsets: default_z_offsets(),
            gap_points: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub translation: TranslationMode,
}

fn default_radius() -> f64 {
    1.0
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            radius: default_radius(),
            translation: TranslationMode::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    pub symbol: SymbolConfig,
    pub field: BuiltinField,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub partition: PartitionConfig,
    /// Random Rayleigh probes for the variational edge cross-check.
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_probes() -> usize {
    16
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.grid.half_width, self.grid.points)
    }

    pub fn symbol(&self) -> SymbolSpec {
        self.symbol.build()
    }

    pub fn field(&self) -> Result<PerturbField> {
        builtin_field(self.field)
    }

    pub fn partition(&self) -> Result<PartitionBase> {
        make_partition(self.partition.radius)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid().map_err(|e| Error::Config(e.to_string()))?;
        let rep = weyl_kernel(&self.symbol())?;
        let h = grid.spacing();
        for t in &rep.singular {
            let s = t.offset / h;
            if (s - s.round()).abs() > 1e-12 * s.abs().max(1.0) {
                return Err(Error::Config(format!(
                    "kernel offset {} is not a multiple of the grid spacing {h}",
                    t.offset
                )));
            }
        }
        self.field()?;
        let s = &self.sweep;
        check_sorted("sweep.deltas", &s.deltas)?;
        if let Some(d) = s.deltas.iter().find(|d| !(**d >= 0.0 && **d <= 1.0)) {
            return Err(Error::Config(format!("delta {d} outside [0, 1]")));
        }
        if self.mode == Mode::Edges {
            if s.deltas.contains(&0.0) {
                return Err(Error::Config("edge sweeps need delta > 0".into()));
            }
            if self.field()?.mu().is_none() {
                return Err(Error::Config("edge sweeps need a field with a decay exponent (mu_family)".into()));
            }
        }
        if self.mode == Mode::Quasires {
            check_sorted("sweep.kappas", &s.kappas)?;
            check_non_empty("sweep.kappas", &s.kappas)?;
            check_sorted("sweep.z_offsets", &s.z_offsets)?;
            if s.z_offsets.is_empty() && !s.gap_points {
                return Err(Error::Config("no spectral parameters: z_offsets empty and gap_points off".into()));
            }
            if let Some(k) = s.kappas.iter().find(|k| !(**k > 0.0 && **k < 1.0)) {
                return Err(Error::Config(format!("kappa {k} outside (0, 1)")));
            }
            self.partition().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

fn check_sorted(name: &str, v: &[f64]) -> Result<()> {
    if v.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

fn check_non_empty(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("{name} must not be empty")));
    }
    Ok(())
}

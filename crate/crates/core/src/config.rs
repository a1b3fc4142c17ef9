//! TOML run configuration: medium, source and solver parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interior::PipelineConfig;
use crate::medium::{
    validate, CutVector, ImpedanceRule, MediumSpec, Perturbation, SourceSpec, TrigPoly2D, ValidationReport,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutConfig {
    pub theta1: f64,
    pub theta2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalConfig {
    pub a_left: f64,
    pub a_right: f64,
    /// Relative tolerance for snapping endpoints to a·θ₂ ∈ ℤ.
    #[serde(default = "default_snap")]
    pub snap_tol: f64,
}

fn default_snap() -> f64 {
    1e-9
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "d_k")]
    pub k_modes: usize,
    #[serde(default = "d_kmax")]
    pub k_max: usize,
    #[serde(default = "d_tail")]
    pub tail_tol: f64,
    #[serde(default = "d_m")]
    pub mesh_nodes: usize,
    #[serde(default = "d_h")]
    pub interior_h: f64,
    #[serde(default = "d_circle")]
    pub tol_circle: f64,
    #[serde(default = "d_cells")]
    pub cells: usize,
}

fn d_k() -> usize {
    64
}
fn d_kmax() -> usize {
    512
}
fn d_tail() -> f64 {
    1e-10
}
fn d_m() -> usize {
    400
}
fn d_h() -> f64 {
    5e-3
}
fn d_circle() -> f64 {
    1e-3
}
fn d_cells() -> usize {
    12
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            k_modes: d_k(),
            k_max: d_kmax(),
            tail_tol: d_tail(),
            mesh_nodes: d_m(),
            interior_h: d_h(),
            tol_circle: d_circle(),
            cells: d_cells(),
        }
    }
}

/// Contents of a configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub cut: CutConfig,
    pub mu_p: TrigPoly2D,
    pub rho_p: TrigPoly2D,
    pub interval: IntervalConfig,
    #[serde(default)]
    pub perturbation: Vec<Perturbation>,
    pub source: SourceSpec,
    #[serde(default = "d_imp")]
    pub impedance: ImpedanceRule,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn d_imp() -> ImpedanceRule {
    ImpedanceRule::Omega
}

impl RunConfig {
    /// Parses TOML text.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads and parses a file.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Validated medium (endpoints possibly snapped) with its report.
    pub fn medium(&self) -> Result<ValidationReport> {
        let cut = CutVector::new(self.cut.theta1, self.cut.theta2)?;
        let raw = MediumSpec {
            mu_p: self.mu_p.clone(),
            rho_p: self.rho_p.clone(),
            cut,
            a_left: self.interval.a_left,
            a_right: self.interval.a_right,
            perturbation: self.perturbation.clone(),
            impedance: self.impedance,
        };
        let report = validate(&raw, self.interval.snap_tol)?;
        self.source.validate(&report.medium)?;
        Ok(report)
    }

    /// Solver parameters with optional overrides.
    pub fn pipeline(&self, k_modes: Option<usize>, mesh_nodes: Option<usize>) -> Result<PipelineConfig> {
        let s = &self.solver;
        let k = k_modes.unwrap_or(s.k_modes);
        let m = mesh_nodes.unwrap_or(s.mesh_nodes);
        if k < 8 || !k.is_power_of_two() {
            return Err(Error::Validation(format!("k_modes must be a power of two >= 8, got {k}")));
        }
        if m < 16 {
            return Err(Error::Validation(format!("mesh_nodes must be at least 16, got {m}")));
        }
        if !(s.interior_h > 0.0) || !(s.tol_circle > 0.0) || !(s.tail_tol > 0.0) {
            return Err(Error::Validation("solver tolerances and interior_h must be positive".into()));
        }
        Ok(PipelineConfig {
            k_modes: k,
            k_max: s.k_max.max(k),
            tail_tol: s.tail_tol,
            mesh_nodes: m,
            interior_h: s.interior_h,
            tol_circle: s.tol_circle,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAPER: &str = include_str!("../examples/paper_sec6.cfg");

    #[test]
    fn paper_config_matches_builtin_medium() {
        let cfg = RunConfig::from_toml(PAPER).unwrap();
        let rep = cfg.medium().unwrap();
        let (got, want) = (&rep.medium, MediumSpec::paper());
        assert_eq!(got.mu_p, want.mu_p);
        assert_eq!(got.rho_p, want.rho_p);
        assert_eq!(got.perturbation, want.perturbation);
        assert!((got.cut.delta - want.cut.delta).abs() < 1e-15);
        assert!((got.a_left - want.a_left).abs() < 1e-15 && (got.a_right - want.a_right).abs() < 1e-15);
        assert_eq!(rep.warnings.len(), 2);
        assert_eq!(cfg.source, SourceSpec::paper());
    }

    #[test]
    fn unknown_key_rejected() {
        let bad = PAPER.replace("[solver]", "[solver]\nbogus = 1");
        assert!(matches!(RunConfig::from_toml(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn strict_snap_tolerance_rejects_paper_endpoints() {
        let strict = PAPER.replace("snap_tol = 0.5", "snap_tol = 1e-9");
        let cfg = RunConfig::from_toml(&strict).unwrap();
        assert!(matches!(cfg.medium(), Err(Error::Validation(_))));
    }
}

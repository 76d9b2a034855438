//! Report types and their JSON/CSV serializations.

use std::io::Write;

use serde::Serialize;

use super::config::DensitySource;
use super::diagnostics::DiagnosticsBlock;
use crate::error::Result;
use crate::fourier::{CovarianceMatrix, RadiusSweep};
use crate::stats::LinearFit;

pub const SCHEMA_VERSION: u32 = 1;

pub const SUP_POLICY: &str = "max of |f - eta| over a uniform grid on the support, refined around the running argmax \
until the sup changes by less than the configured fraction; points outside the support contribute the closed-form \
boundary term";

#[derive(Debug, Clone, Serialize)]
pub struct McPoint {
    pub n_paths: usize,
    pub seed: u64,
    pub sup_error: f64,
    /// Three times the largest per-bin standard error.
    pub se_band: f64,
    pub singular_fraction: f64,
    /// `|mc - exact| ≤ se_band`, when both are available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agrees_with_exact: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergencePoint {
    pub t: f64,
    /// `sup_y |f_{k,t}(y) - η_Σ(y)|` from the exact density.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax: Option<Vec<f64>>,
    /// `sup_{y ∉ 𝒟_t} η_Σ(t^{-1/2} y)` in the normalized coordinates.
    pub boundary_term: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinements: Option<usize>,
    /// `∫ f_{k,t}` and its target `1 - singular mass`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub montecarlo: Option<McPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub fit: LinearFit,
    /// Absent when only two points are fitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_ci: Option<(f64, f64)>,
    /// Root mean square residual of the log-log fit.
    pub residual: f64,
    pub excluded_t: f64,
    pub band: (f64, f64),
    pub within_band: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub schema_version: u32,
    pub model_kind: String,
    pub start_state: usize,
    pub dimension: usize,
    pub density_source: DensitySource,
    pub sigma: CovarianceMatrix,
    pub sigma_condition_number: f64,
    /// `η_Σ(0) = (2π)^{-d/2} det(Σ)^{-1/2}`.
    pub eta_at_zero: f64,
    pub sup_policy: String,
    pub points: Vec<ConvergencePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<RateFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub montecarlo_fit: Option<RateFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsBlock>,
    /// Failed assumptions; any entry maps to exit code 2 in the CLI.
    pub assumption_failures: Vec<String>,
    /// Other notable findings.
    pub flags: Vec<String>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:e}"))
}

impl ConvergenceReport {
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    /// Per-t table: `t,sup_error,boundary_term,mass,expected_mass,mc_sup_error,mc_se_band`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema_version={}", self.schema_version)?;
        writeln!(w, "t,sup_error,boundary_term,mass,expected_mass,mc_sup_error,mc_se_band")?;
        for p in &self.points {
            writeln!(
                w,
                "{},{},{:e},{},{},{},{}",
                p.t,
                opt(p.sup_error),
                p.boundary_term,
                opt(p.mass),
                opt(p.expected_mass),
                opt(p.montecarlo.as_ref().map(|m| m.sup_error)),
                opt(p.montecarlo.as_ref().map(|m| m.se_band)),
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyMember {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub excluded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ConvergenceReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub schema_version: u32,
    pub members: Vec<FamilyMember>,
    pub radius_sweep: Option<RadiusSweep>,
    /// `α ≤ λ_min(Σ^P)` and `λ_max(Σ^P) ≤ β` over the included members.
    pub alpha: f64,
    pub beta: f64,
    /// `(t, max over members of the sup error)`.
    pub max_error: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniform_fit: Option<RateFit>,
    pub assumption_failures: Vec<String>,
    pub flags: Vec<String>,
}

impl FamilyReport {
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    /// `t,max_sup_error`, then one column per included member.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema_version={}", self.schema_version)?;
        let included: Vec<&FamilyMember> = self.members.iter().filter(|m| m.report.is_some()).collect();
        let mut header = vec!["t".to_string(), "max_sup_error".to_string()];
        header.extend(included.iter().map(|m| m.label.clone()));
        writeln!(w, "{}", header.join(","))?;
        for (i, (t, e)) in self.max_error.iter().enumerate() {
            let mut row = vec![format!("{t}"), format!("{e:e}")];
            for m in &included {
                let p = &m.report.as_ref().expect("included").points[i];
                row.push(opt(p.sup_error.or(p.montecarlo.as_ref().map(|m| m.sup_error))));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

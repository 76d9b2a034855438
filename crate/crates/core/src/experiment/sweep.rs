//! Uniform LLT over a parametrized family of models.

use super::config::{ExperimentConfig, FamilyConfig};
use super::llt::{rate_fit, run_llt_experiment};
use super::report::{FamilyMember, FamilyReport, SCHEMA_VERSION};
use crate::error::{LltError, Result};
use crate::fourier::uniform_radius_sweep;

/// Runs the convergence experiment for every member, then the family-level
/// radius sweep, spectral bracketing of `Σ^P` and the uniform rate fit.
pub fn run_uniform_sweep(cfg: &FamilyConfig) -> Result<FamilyReport> {
    cfg.settings.validate()?;
    let specs = cfg.members()?;
    if specs.is_empty() {
        return Err(LltError::InvalidInput("empty family".into()));
    }
    let mut flags = Vec::new();
    let mut failures = Vec::new();
    if specs.len() < 3 {
        flags.push(format!("family has {} members; at least 3 are needed for a uniform statement", specs.len()));
    }

    let mut members = Vec::with_capacity(specs.len());
    let mut models = Vec::new();
    for (label, theta, spec) in specs {
        let mut member = FamilyMember { label: label.clone(), theta, excluded: true, reason: None, report: None };
        let model = match spec.build() {
            Ok(m) => m,
            Err(e @ (LltError::NotIrreducible | LltError::InvalidModel(_))) => {
                member.reason = Some(e.to_string());
                failures.push(format!("{label}: excluded, fails I-P ({e})"));
                members.push(member);
                continue;
            }
            Err(e) => return Err(e),
        };
        if !model.irreducible_aperiodic() {
            member.reason = Some("I-P: driving chain is not irreducible and aperiodic".into());
            failures.push(format!("{label}: excluded, fails I-P"));
        } else {
            match run_llt_experiment(&ExperimentConfig::new(spec, cfg.settings.clone())) {
                Ok(r) => {
                    failures.extend(r.assumption_failures.iter().map(|f| format!("{label}: {f}")));
                    member.excluded = false;
                    member.report = Some(r);
                    models.push(model);
                }
                Err(e @ LltError::DegenerateCovariance(_)) => {
                    member.reason = Some(e.to_string());
                    failures.push(format!("{label}: excluded, {e}"));
                }
                Err(e) => return Err(e),
            }
        }
        members.push(member);
    }

    let included: Vec<_> = members.iter().filter_map(|m| m.report.as_ref()).collect();
    let ls = &cfg.settings.lattice;
    let radius_sweep = if models.is_empty() { None } else { Some(uniform_radius_sweep(&models, ls.delta, ls.a, ls.resolution)?) };

    let (mut alpha, mut beta) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in &included {
        for ev in r.sigma.eigenvalues() {
            alpha = alpha.min(ev);
            beta = beta.max(ev);
        }
    }

    let max_error: Vec<(f64, f64)> = cfg
        .settings
        .t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let e = included
                .iter()
                .map(|r| {
                    let p = &r.points[i];
                    p.sup_error.or(p.montecarlo.as_ref().map(|m| m.sup_error)).unwrap_or(f64::NAN)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            (t, e)
        })
        .collect();
    let uniform_fit = if included.is_empty() { None } else { rate_fit(&max_error, cfg.settings.slope_band) };
    if let Some(f) = &uniform_fit {
        if !f.within_band {
            flags.push(format!("uniform slope {:.3} outside [{:.2}, {:.2}]", f.fit.slope, f.band.0, f.band.1));
        }
    }

    Ok(FamilyReport {
        schema_version: SCHEMA_VERSION,
        members,
        radius_sweep,
        alpha,
        beta,
        max_error,
        uniform_fit,
        assumption_failures: failures,
        flags,
    })
}

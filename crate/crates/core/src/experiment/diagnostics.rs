//! One verdict and measurement per assumption: I-P, M₃, (AC1), (AC2), (N-L).

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::chain::norm0;
use crate::error::Result;
use crate::fourier::{lattice_scan, LatticeDiagnostic, LatticeVerdict};
use crate::local_time::{halton, BoundaryDecayReport, LocalTimeModel, SingularDecayFit};
use crate::marp::{MarpAcReport, MarpModel};
use crate::model::MapModel;
use crate::montecarlo::third_moment_montecarlo;

/// Horizon of the density series used for the local-time probes.
const PROBE_T_MAX: f64 = 10.0;
const PROBE_TIMES: [f64; 3] = [1.0, 4.0, 10.0];
const PROBES_PER_TIME: usize = 400;
const GAMMA_T0: f64 = 1.0;
const MARP_T0: usize = 2;
const PRIMES: [u32; 6] = [2, 3, 5, 7, 11, 13];

#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    /// `closed_form` or `bounded_increments`.
    pub method: String,
    pub finite: bool,
    /// `max_k E_k[Y_1³]` for renewal models, a bound on `‖Y_v‖³` (`v ≤ 1`) otherwise.
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax_state: Option<usize>,
    /// Monte Carlo estimate and standard error at `argmax_state`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub montecarlo: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_3se: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaRow {
    pub zeta: Vec<f64>,
    pub t0: f64,
    pub measured: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalTimeAc1 {
    pub singular_fit: SingularDecayFit,
    /// Smallest `t₀` with `ρ̂^{t₀} max(2, ĉN) ≤ 1/4`.
    pub cond_t0: Option<u64>,
    pub gamma: Vec<GammaRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalTimeAc2 {
    pub probes: usize,
    pub density_sup: f64,
    /// `a^{N-1}`
    pub density_cap: f64,
    pub gradient_sup: f64,
    /// `2a^N`
    pub gradient_cap: f64,
    pub boundary: BoundaryDecayReport,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AcReport {
    LocalTime { ac1: LocalTimeAc1, ac2: LocalTimeAc2 },
    Marp(MarpAcReport),
    NotApplicable { reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsBlock {
    pub irreducible_aperiodic: bool,
    pub moment3: MomentReport,
    pub ac1_passed: bool,
    pub ac2_passed: bool,
    pub absolute_continuity: AcReport,
    pub lattice_verdict: LatticeVerdict,
    pub lattice: LatticeDiagnostic,
    pub assumption_failures: Vec<String>,
}

/// A point of the open simplex `𝒞_t` from sorted Halton coordinates.
fn simplex_probe(idx: usize, d: usize, t: f64) -> Option<Vec<f64>> {
    let mut u: Vec<f64> = (0..d).map(|j| halton(idx as u64 + 1, PRIMES[j % PRIMES.len()])).collect();
    u.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut prev = 0.0;
    let y: Vec<f64> = u
        .iter()
        .map(|&v| {
            let w = (v - prev) * t;
            prev = v;
            w
        })
        .collect();
    (y.iter().all(|&v| v > 0.0) && y.iter().sum::<f64>() < t).then_some(y)
}

fn marp_moment(m: &MarpModel, n_paths: usize, seed: u64) -> Result<MomentReport> {
    let (k, value) = (0..m.n())
        .map(|k| (k, m.third_moment(k)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let (est, se) = third_moment_montecarlo(m, k, n_paths, seed)?;
    Ok(MomentReport {
        method: "closed_form".into(),
        finite: value.is_finite(),
        value,
        argmax_state: Some(k),
        montecarlo: Some((est, se)),
        within_3se: Some((est - value).abs() <= 3.0 * se),
    })
}

fn bounded_moment(bound: f64) -> MomentReport {
    MomentReport {
        method: "bounded_increments".into(),
        finite: true,
        value: bound.powi(3),
        argmax_state: None,
        montecarlo: None,
        within_3se: None,
    }
}

fn local_time_ac(lt: &LocalTimeModel) -> Result<(LocalTimeAc1, LocalTimeAc2)> {
    let n = lt.n();
    let d = lt.dim();
    let a = lt.rate();
    let ts: Vec<f64> = std::iter::once(1.0).chain((1..=8).map(|i| 5.0 * i as f64)).collect();
    let singular_fit = lt.fit_singular_decay(&ts)?;
    let target = 0.25 / (2.0f64).max(singular_fit.c * n as f64);
    let cond_t0 = (singular_fit.rho < 1.0).then(|| (target.ln() / singular_fit.rho.ln()).ceil().max(1.0) as u64);

    let series = lt.density_series(PROBE_T_MAX)?;
    let zetas: &[f64] = if d == 1 { &[10.0, 50.0, 200.0] } else { &[10.0, 50.0] };
    let gamma = zetas
        .iter()
        .map(|&z| {
            let zeta = vec![z; d];
            Ok(GammaRow {
                measured: series.fourier_tail_gamma(GAMMA_T0, &zeta, 4)?,
                bound: series.gamma_bound(GAMMA_T0, &zeta),
                zeta,
                t0: GAMMA_T0,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut density_sup: f64 = 0.0;
    let mut gradient_sup: f64 = 0.0;
    let mut probes = 0;
    for &t in &PROBE_TIMES {
        for idx in 0..PROBES_PER_TIME {
            let Some(y) = simplex_probe(idx, d, t) else { continue };
            density_sup = density_sup.max(norm0(&series.evaluate(t, &y)?.0));
            for j in 0..d {
                gradient_sup = gradient_sup.max(norm0(&series.gradient(t, &y, j)?));
            }
            probes += 1;
        }
    }
    let boundary = lt.boundary_decay(&series, &[2.0, 4.0, 6.0, 8.0, 10.0], 8)?;
    Ok((
        LocalTimeAc1 { singular_fit, cond_t0, gamma },
        LocalTimeAc2 {
            probes,
            density_sup,
            density_cap: a.powi(n as i32 - 1),
            gradient_sup,
            gradient_cap: 2.0 * a.powi(n as i32),
            boundary,
        },
    ))
}

/// Runs every assumption check on the configured model.
pub fn run_diagnostics(cfg: &ExperimentConfig) -> Result<DiagnosticsBlock> {
    let model = cfg.build_model()?;
    let mc = &cfg.settings.mc;
    let mut failures = Vec::new();

    let irreducible_aperiodic = model.irreducible_aperiodic();
    if !irreducible_aperiodic {
        failures.push("I-P: driving chain is not irreducible and aperiodic".to_string());
    }

    let moment3 = match &model {
        MapModel::Marp(m) => marp_moment(m, mc.n_paths, mc.seed)?,
        // ‖L_v‖ ≤ v ≤ 1
        MapModel::LocalTime(_) => bounded_moment(1.0),
        MapModel::Lattice(l) => bounded_moment(l.increments().iter().fold(0.0f64, |m, x| m.max(x.abs()))),
    };
    if !moment3.finite {
        failures.push("M3: third moment is not finite".to_string());
    }

    let (absolute_continuity, ac1_passed, ac2_passed) = match &model {
        MapModel::LocalTime(lt) => {
            let (ac1, ac2) = local_time_ac(lt)?;
            let ac1_ok = ac1.cond_t0.is_some() && ac1.gamma.iter().all(|g| g.measured <= g.bound);
            let ac2_ok = ac2.density_sup <= ac2.density_cap
                && ac2.gradient_sup <= ac2.gradient_cap
                && ac2.boundary.fit.slope < 0.0;
            (AcReport::LocalTime { ac1, ac2 }, ac1_ok, ac2_ok)
        }
        MapModel::Marp(m) => {
            let r = m.ac_diagnostics(MARP_T0)?;
            let ac1_ok = r.singular_mass == 0.0 && r.fourier_decay.iter().all(|p| p.measured <= p.bound);
            let ac2_ok = r.density_sup <= r.density_bound && r.derivative_sup <= r.derivative_bound;
            (AcReport::Marp(r), ac1_ok, ac2_ok)
        }
        MapModel::Lattice(_) => (
            AcReport::NotApplicable { reason: "lattice increments have no absolutely continuous part".into() },
            false,
            false,
        ),
    };
    if !ac1_passed {
        failures.push("AC1: singular part or Fourier decay condition not met".to_string());
    }
    if !ac2_passed {
        failures.push("AC2: density, gradient or boundary caps not met".to_string());
    }

    let ls = &cfg.settings.lattice;
    let lattice = lattice_scan(&model, ls.delta, ls.a, ls.resolution, ls.radius_margin)?;
    if lattice.verdict == LatticeVerdict::SuspectedLattice {
        failures.push(format!("N-L: spectral radius {:.12} off the origin", lattice.max_radius_off_zero));
    }

    Ok(DiagnosticsBlock {
        irreducible_aperiodic,
        moment3,
        ac1_passed,
        ac2_passed,
        absolute_continuity,
        lattice_verdict: lattice.verdict,
        lattice,
        assumption_failures: failures,
    })
}

//! Sup-norm distance between the density of `t^{-1/2}(Y_t - tm)` and `η_Σ`.

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentSettings, SupGridSettings};
use super::diagnostics::run_diagnostics;
use super::report::{ConvergencePoint, ConvergenceReport, McPoint, RateFit, SCHEMA_VERSION, SUP_POLICY};
use super::GaussianDensity;
use crate::error::{LltError, Result};
use crate::fourier::{covariance_hessian, CovarianceMatrix};
use crate::local_time::DensitySeries;
use crate::marp::{GridSpec, KernelDensity, MarpModel};
use crate::model::MapModel;
use crate::montecarlo::{empirical_density, simulate_horizons, HistogramGrid, PathSample};
use crate::stats::loglog_fit;

/// Grid resolution of the MArP density, in standard deviations of `Y_n`.
const MARP_STEPS_PER_SD: f64 = 400.0;

/// Normalized density `f_{k,t}(u) = t^{d/2} Σ_ℓ g_t(tm + √t u)_{kℓ}`.
enum Oracle<'a> {
    LocalTime { series: &'a DensitySeries, k: usize, t: f64, m: Vec<f64> },
    Marp { values: Vec<f64>, h: f64, n: f64, m: f64 },
}

impl Oracle<'_> {
    fn eval(&self, u: &[f64]) -> Result<f64> {
        match self {
            Oracle::LocalTime { series, k, t, m } => {
                let s = t.sqrt();
                let y: Vec<f64> = u.iter().zip(m).map(|(u, m)| m * t + s * u).collect();
                let (psi, _) = series.evaluate(*t, &y)?;
                Ok(s.powi(u.len() as i32) * psi.row(*k).sum())
            }
            Oracle::Marp { values, h, n, m } => {
                let s = n.sqrt();
                let x = (m * n + s * u[0]) / h;
                if x < 0.0 || x > (values.len() - 1) as f64 {
                    return Ok(0.0);
                }
                let j = (x.floor() as usize).min(values.len() - 2);
                let w = x - j as f64;
                Ok(s * ((1.0 - w) * values[j] + w * values[j + 1]))
            }
        }
    }
}

#[derive(Debug, Clone)]
struct SupResult {
    sup: f64,
    argmax: Vec<f64>,
    evaluations: usize,
    refinements: usize,
}

fn points_per_dim(d: usize, requested: usize) -> usize {
    match d {
        1 => requested,
        2 => requested.min(81),
        _ => requested.min(21),
    }
}

fn local_points(d: usize) -> usize {
    match d {
        1 => 21,
        2 => 11,
        _ => 7,
    }
}

/// Max of `|f - η|` over the tensor grid with `p` points per dimension on `[lo, hi]`.
fn grid_max(oracle: &Oracle, eta: &GaussianDensity, lo: &[f64], hi: &[f64], p: usize) -> Result<(f64, Vec<f64>, usize)> {
    let d = lo.len();
    let total = p.pow(d as u32);
    let point = |idx: usize| -> Vec<f64> {
        let mut rest = idx;
        (0..d)
            .map(|j| {
                let i = rest % p;
                rest /= p;
                lo[j] + (hi[j] - lo[j]) * i as f64 / (p - 1) as f64
            })
            .collect()
    };
    let values = (0..total)
        .into_par_iter()
        .map(|idx| {
            let u = point(idx);
            Ok((oracle.eval(&u)? - eta.eval(&u)).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let (best, v) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    Ok((v, point(best), total))
}

fn sup_search(oracle: &Oracle, eta: &GaussianDensity, lo: &[f64], hi: &[f64], settings: &SupGridSettings) -> Result<SupResult> {
    let d = lo.len();
    let p = points_per_dim(d, settings.points);
    let (mut sup, mut argmax, mut evaluations) = grid_max(oracle, eta, lo, hi, p)?;
    let mut spacing: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| (h - l) / (p - 1) as f64).collect();
    let q = local_points(d);
    let local = |center: &[f64], spacing: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let l = (0..d).map(|j| (center[j] - 2.0 * spacing[j]).max(lo[j])).collect();
        let h = (0..d).map(|j| (center[j] + 2.0 * spacing[j]).min(hi[j])).collect();
        (l, h)
    };
    // the mode of η is always examined at the finer resolution
    let zero = vec![0.0; d];
    if (0..d).all(|j| lo[j] < 0.0 && hi[j] > 0.0) {
        let (l, h) = local(&zero, &spacing);
        let (v, u, n) = grid_max(oracle, eta, &l, &h, q)?;
        evaluations += n;
        if v > sup {
            sup = v;
            argmax = u;
        }
    }
    let mut refinements = 0;
    for _ in 0..settings.max_refinements {
        let (l, h) = local(&argmax, &spacing);
        let (v, u, n) = grid_max(oracle, eta, &l, &h, q)?;
        evaluations += n;
        refinements += 1;
        let change = if sup > 0.0 { (v - sup).max(0.0) / sup } else { f64::INFINITY };
        if v > sup {
            sup = v;
            argmax = u;
        }
        spacing.iter_mut().for_each(|s| *s *= 4.0 / (q - 1) as f64);
        if change < settings.rel_change {
            break;
        }
    }
    Ok(SupResult { sup, argmax, evaluations, refinements })
}

/// Half-spaces `{⟨a,u⟩ ≥ b}` whose union is the complement of the support of `f_{k,t}`.
fn outside_half_spaces(model: &MapModel, t: f64) -> Vec<(Vec<f64>, f64)> {
    let m = model.mean();
    let d = m.len();
    let s = t.sqrt();
    match model {
        MapModel::LocalTime(_) => {
            let mut out: Vec<(Vec<f64>, f64)> = (0..d)
                .map(|j| {
                    let mut a = vec![0.0; d];
                    a[j] = -1.0;
                    (a, m[j] * s)
                })
                .collect();
            let m_last = 1.0 - m.iter().sum::<f64>();
            out.push((vec![1.0; d], m_last * s));
            out
        }
        _ => vec![(vec![-1.0], m[0] * s)],
    }
}

/// `sup_{u ∉ 𝒟} η_Σ(u)`: the smallest Mahalanobis radius² to a half-space
/// `{⟨a,u⟩ ≥ b}` with `b > 0` is `b² / aᵀΣa`.
fn boundary_term(model: &MapModel, sigma: &CovarianceMatrix, eta: &GaussianDensity, t: f64) -> f64 {
    let s = sigma.matrix();
    let q = outside_half_spaces(model, t)
        .iter()
        .map(|(a, b)| {
            let v = nalgebra::DVector::from_column_slice(a);
            b * b / (v.transpose() * &s * &v)[(0, 0)]
        })
        .fold(f64::INFINITY, f64::min);
    eta.at_radius2(q)
}

/// Per-coordinate support `[lo, hi]` of `u` (possibly unbounded).
fn support_box(model: &MapModel, t: f64) -> (Vec<f64>, Vec<f64>) {
    let m = model.mean();
    let s = t.sqrt();
    match model {
        MapModel::LocalTime(_) => (m.iter().map(|m| -m * s).collect(), m.iter().map(|m| (1.0 - m) * s).collect()),
        _ => (vec![-m[0] * s], vec![f64::INFINITY]),
    }
}

fn search_box(model: &MapModel, sigma: &CovarianceMatrix, t: f64, width_sd: f64) -> (Vec<f64>, Vec<f64>) {
    let (slo, shi) = support_box(model, t);
    let half: Vec<f64> = (0..sigma.dim()).map(|j| width_sd * sigma.sigma[j][j].sqrt()).collect();
    let lo = half.iter().zip(&slo).map(|(w, l)| (-w).max(*l)).collect();
    let hi = half.iter().zip(&shi).map(|(w, h)| w.min(*h)).collect();
    (lo, hi)
}

fn marp_density(model: &MarpModel, n: usize, sigma2: f64) -> Result<(KernelDensity, bool)> {
    let h = (n as f64 * sigma2).sqrt() / MARP_STEPS_PER_SD;
    let grid = GridSpec::new(h);
    match model.invert_density_fft(n, &grid) {
        Ok(g) => Ok((g, false)),
        Err(LltError::ResolutionError { .. }) => Ok((model.convolve_density(n, &grid)?, true)),
        Err(e) => Err(e),
    }
}

pub(super) fn rate_fit(points: &[(f64, f64)], band: f64) -> Option<RateFit> {
    let usable: Vec<(f64, f64)> = points.iter().copied().filter(|(_, e)| *e > 0.0 && e.is_finite()).collect();
    if usable.len() < 2 {
        return None;
    }
    let excluded_t = usable[0].0;
    let kept = if usable.len() >= 3 { &usable[1..] } else { &usable[..] };
    let fit = loglog_fit(kept).ok()?;
    let residual = (kept
        .iter()
        .map(|(t, e)| (e.ln() - fit.intercept - fit.slope * t.ln()).powi(2))
        .sum::<f64>()
        / kept.len() as f64)
        .sqrt();
    let band = (-0.5 - band, -0.5 + band);
    Some(RateFit {
        slope_ci: (kept.len() > 2).then(|| fit.slope_interval()),
        within_band: fit.slope >= band.0 && fit.slope <= band.1,
        fit,
        residual,
        excluded_t: if usable.len() >= 3 { excluded_t } else { f64::NAN },
        band,
    })
}

fn condition_number(sigma: &CovarianceMatrix) -> f64 {
    let ev = sigma.eigenvalues();
    let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    hi / lo
}

/// `Σ` by the Hessian method, rejected when (numerically) singular.
pub(crate) fn checked_covariance(model: &MapModel) -> Result<CovarianceMatrix> {
    let sigma = covariance_hessian(model)?;
    let ev = sigma.eigenvalues();
    let hi = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lo = ev.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if !(lo > 1e-12 * hi.max(1e-300)) {
        return Err(LltError::DegenerateCovariance(format!("eigenvalues {ev:?}")));
    }
    Ok(sigma)
}

struct ExactPoint {
    sup: SupResult,
    mass: f64,
    expected_mass: f64,
    fallback: bool,
}

fn exact_point(
    model: &MapModel,
    series: Option<&DensitySeries>,
    sigma: &CovarianceMatrix,
    eta: &GaussianDensity,
    settings: &ExperimentSettings,
    t: f64,
) -> Result<ExactPoint> {
    let k = settings.k;
    let (lo, hi) = search_box(model, sigma, t, settings.grid.width_sd);
    match model {
        MapModel::LocalTime(lt) => {
            let series = series.expect("series built for local times");
            let oracle = Oracle::LocalTime { series, k, t, m: model.mean() };
            let sup = sup_search(&oracle, eta, &lo, &hi, &settings.grid)?;
            let mass = series.integrate(t)?.row(k).sum();
            let singular: f64 = lt.singular_mass(t)?.exact[k].iter().sum();
            Ok(ExactPoint { sup, mass, expected_mass: 1.0 - singular, fallback: false })
        }
        MapModel::Marp(mm) => {
            let n = t as usize;
            let (g, fallback) = marp_density(mm, n, sigma.sigma[0][0])?;
            let values: Vec<f64> = g.values.iter().map(|v| v.row(k).sum()).collect();
            let mass = g.h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[values.len() - 1]));
            let oracle = Oracle::Marp { values, h: g.h, n: t, m: model.mean()[0] };
            let sup = sup_search(&oracle, eta, &lo, &hi, &settings.grid)?;
            Ok(ExactPoint { sup, mass, expected_mass: 1.0, fallback })
        }
        MapModel::Lattice(_) => Err(LltError::InvalidInput("lattice chains have no density; use density_source = montecarlo".into())),
    }
}

fn mc_point(samples: &[PathSample], model: &MapModel, sigma: &CovarianceMatrix, eta: &GaussianDensity, settings: &ExperimentSettings, seed: u64) -> Result<McPoint> {
    let d = sigma.dim();
    let half: Vec<f64> = (0..d).map(|j| settings.grid.width_sd * sigma.sigma[j][j].sqrt()).collect();
    let grid = HistogramGrid { lo: half.iter().map(|w| -w).collect(), hi: half.clone(), bins: vec![settings.mc.bins; d] };
    let emp = empirical_density(samples, &model.mean(), &grid)?;
    let mut sup = 0.0f64;
    let mut se = 0.0f64;
    for i in 0..grid.n_cells() {
        sup = sup.max((emp.density[i] - eta.eval(&grid.center(i))).abs());
        se = se.max(emp.standard_errors[i]);
    }
    Ok(McPoint {
        n_paths: samples.len(),
        seed,
        sup_error: sup,
        se_band: 3.0 * se,
        singular_fraction: emp.singular_fraction(),
        agrees_with_exact: None,
    })
}

/// Runs the convergence experiment over `cfg.settings.t_grid`.
pub fn run_llt_experiment(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let settings = &cfg.settings;
    settings.validate()?;
    let model = cfg.build_model()?;
    if settings.k >= model.n_states() {
        return Err(LltError::InvalidInput(format!("start state {} out of range", settings.k)));
    }
    for &t in &settings.t_grid {
        model.check_time(t)?;
    }
    let source = settings.density_source;
    if source.exact() && matches!(model, MapModel::Lattice(_)) {
        return Err(LltError::InvalidInput("lattice chains have no density; use density_source = montecarlo".into()));
    }

    let mut failures = Vec::new();
    let mut flags = Vec::new();
    if !model.irreducible_aperiodic() {
        failures.push("I-P: driving chain is not irreducible and aperiodic".to_string());
    }
    let sigma = checked_covariance(&model)?;
    let eta = GaussianDensity::new(&sigma.matrix())?;

    let t_max = *settings.t_grid.last().expect("validated");
    let series = match (&model, source.exact()) {
        (MapModel::LocalTime(lt), true) => Some(lt.density_series(t_max)?),
        _ => None,
    };

    let exact: Vec<Option<ExactPoint>> = if source.exact() {
        settings
            .t_grid
            .par_iter()
            .map(|&t| exact_point(&model, series.as_ref(), &sigma, &eta, settings, t).map(Some))
            .collect::<Result<_>>()?
    } else {
        settings.t_grid.iter().map(|_| None).collect()
    };

    let mc: Vec<Option<McPoint>> = if source.montecarlo() {
        if matches!(model, MapModel::Lattice(_)) {
            flags.push("lattice increments: the histogram is not a density estimate".into());
        }
        let seed = settings.mc.seed;
        let paths = simulate_horizons(&model, settings.k, &settings.t_grid, settings.mc.n_paths, seed)?;
        paths
            .par_iter()
            .map(|s| mc_point(s, &model, &sigma, &eta, settings, seed).map(Some))
            .collect::<Result<_>>()?
    } else {
        settings.t_grid.iter().map(|_| None).collect()
    };

    let mut points = Vec::with_capacity(settings.t_grid.len());
    for ((&t, ex), mut mcp) in settings.t_grid.iter().zip(exact).zip(mc) {
        let boundary = boundary_term(&model, &sigma, &eta, t);
        let mut point = ConvergencePoint {
            t,
            sup_error: None,
            argmax: None,
            boundary_term: boundary,
            evaluations: None,
            refinements: None,
            mass: None,
            expected_mass: None,
            montecarlo: None,
        };
        if let Some(ex) = ex {
            let sup = ex.sup.sup.max(boundary);
            point.sup_error = Some(sup);
            point.argmax = Some(ex.sup.argmax);
            point.evaluations = Some(ex.sup.evaluations);
            point.refinements = Some(ex.sup.refinements);
            point.mass = Some(ex.mass);
            point.expected_mass = Some(ex.expected_mass);
            if ex.fallback {
                flags.push(format!("t = {t}: Fourier inversion missed its mass check; used direct convolution"));
            }
            if (ex.mass - ex.expected_mass).abs() > 1e-4 {
                flags.push(format!("t = {t}: density mass {:.6} differs from {:.6}", ex.mass, ex.expected_mass));
            }
            if let Some(m) = mcp.as_mut() {
                let agree = (m.sup_error - sup).abs() <= m.se_band;
                m.agrees_with_exact = Some(agree);
                if !agree {
                    flags.push(format!("t = {t}: exact and Monte Carlo sup errors differ by more than 3 SE"));
                }
            }
        }
        point.montecarlo = mcp;
        points.push(point);
    }

    let fit = if source.exact() {
        rate_fit(&points.iter().map(|p| (p.t, p.sup_error.unwrap_or(f64::NAN))).collect::<Vec<_>>(), settings.slope_band)
    } else {
        None
    };
    let montecarlo_fit = if source.montecarlo() {
        rate_fit(
            &points.iter().map(|p| (p.t, p.montecarlo.as_ref().map_or(f64::NAN, |m| m.sup_error))).collect::<Vec<_>>(),
            settings.slope_band,
        )
    } else {
        None
    };
    if let Some(f) = &fit {
        if !f.within_band {
            flags.push(format!("fitted slope {:.3} outside [{:.2}, {:.2}]", f.fit.slope, f.band.0, f.band.1));
        }
    }

    let diagnostics = if settings.diagnostics {
        let block = run_diagnostics(cfg)?;
        failures.extend(block.assumption_failures.iter().cloned());
        Some(block)
    } else {
        None
    };
    failures.dedup();

    Ok(ConvergenceReport {
        schema_version: SCHEMA_VERSION,
        model_kind: model.kind().to_string(),
        start_state: settings.k,
        dimension: model.dim(),
        density_source: source,
        sigma_condition_number: condition_number(&sigma),
        eta_at_zero: eta.at_zero(),
        sigma,
        sup_policy: SUP_POLICY.to_string(),
        points,
        fit,
        montecarlo_fit,
        diagnostics,
        assumption_failures: failures,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSpec;

    fn symmetric() -> MapModel {
        ModelSpec::LocalTime { g: vec![vec![-1.0, 1.0], vec![1.0, -1.0]], a: None }.build().unwrap()
    }

    #[test]
    fn boundary_term_closed_form_one_dim() {
        let m = symmetric();
        let sigma = checked_covariance(&m).unwrap();
        let eta = GaussianDensity::new(&sigma.matrix()).unwrap();
        let t: f64 = 10.0;
        let s2 = sigma.sigma[0][0];
        // both faces sit at distance √t/2 from the mean
        let u = 0.5 * t.sqrt();
        let expect = (-u * u / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt();
        assert!((boundary_term(&m, &sigma, &eta, t) - expect).abs() < 1e-12 * expect.max(1e-300));
    }

    #[test]
    fn sup_search_finds_known_peak() {
        // the oracle is a shifted copy of η, so |f - η| peaks near ±0.5σ-ish
        let m = symmetric();
        let sigma = checked_covariance(&m).unwrap();
        let eta = GaussianDensity::new(&sigma.matrix()).unwrap();
        let h = 1e-3;
        let values: Vec<f64> = (0..20001).map(|j| eta.eval(&[j as f64 * h - 10.0 - 0.05])).collect();
        let oracle = Oracle::Marp { values, h, n: 1.0, m: 10.0 };
        let r = sup_search(&oracle, &eta, &[-3.0], &[3.0], &SupGridSettings::default()).unwrap();
        let brute = (0..60001)
            .map(|i| {
                let u = -3.0 + i as f64 * 1e-4;
                (oracle.eval(&[u]).unwrap() - eta.eval(&[u])).abs()
            })
            .fold(0.0f64, f64::max);
        assert!((r.sup - brute).abs() < 0.01 * brute, "{} vs {}", r.sup, brute);
    }

    #[test]
    fn rate_fit_drops_first_point() {
        let pts: Vec<(f64, f64)> = [(10.0, 1.0), (20.0, 0.2), (40.0, 0.2 / 2f64.sqrt()), (80.0, 0.1)].to_vec();
        let f = rate_fit(&pts, 0.15).unwrap();
        assert_eq!(f.excluded_t, 10.0);
        assert!((f.fit.slope + 0.5).abs() < 1e-12);
        assert!(f.within_band);
    }

    #[test]
    fn symmetric_model_small_grid_runs() {
        let mut s = ExperimentSettings::default();
        s.t_grid = vec![4.0, 8.0];
        s.grid.points = 101;
        let cfg = ExperimentConfig::new(ModelSpec::LocalTime { g: vec![vec![-1.0, 1.0], vec![1.0, -1.0]], a: None }, s);
        let r = run_llt_experiment(&cfg).unwrap();
        assert!(r.assumption_failures.is_empty());
        for p in &r.points {
            assert!(p.sup_error.unwrap() >= 0.0);
            assert!((p.mass.unwrap() - p.expected_mass.unwrap()).abs() < 1e-6);
        }
        assert!((r.eta_at_zero - 1.0 / (2.0 * std::f64::consts::PI * r.sigma.sigma[0][0]).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lattice_exact_rejected() {
        let cfg = ExperimentConfig::new(
            ModelSpec::Lattice { p: vec![vec![1.0]], increments: vec![vec![1.0]] },
            ExperimentSettings::default(),
        );
        assert!(matches!(run_llt_experiment(&cfg), Err(LltError::InvalidInput(_))));
    }
}

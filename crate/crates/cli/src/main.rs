use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use llt_core::experiment::{run_diagnostics, run_llt_experiment, run_uniform_sweep, DiagnosticsBlock, ExperimentConfig, FamilyConfig};
use llt_core::marp::GridSpec;
use llt_core::montecarlo::{simulate_horizons, write_samples_csv};
use llt_core::{ConvergenceReport, LltError, MapModel};

/// Grid nodes per axis for local-time density slices.
const SLICE_POINTS: [usize; 3] = [401, 81, 21];

#[derive(Parser, Debug)]
#[command(name = "llt-lab", version, about = "Local limit experiments for Markov additive processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory.
    #[arg(long, global = true, default_value = "llt-out")]
    out: PathBuf,
    /// Overrides `mc.seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convergence experiment over the configured time grid.
    Run { config: PathBuf },
    /// Assumption diagnostics for the configured model.
    Diag { config: PathBuf },
    /// Uniform experiment over a model family.
    Sweep { config: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Outcome of a successful run: whether an assumption failure was flagged.
type Flagged = bool;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn load_experiment(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(s) = seed {
        cfg.settings.mc.seed = s;
    }
    Ok(cfg)
}

fn report_failures(failures: &[String]) -> Flagged {
    for f in failures {
        eprintln!("assumption flagged: {f}");
    }
    !failures.is_empty()
}

fn write_density_csvs(cfg: &ExperimentConfig, report: &ConvergenceReport, out: &Path) -> Result<()> {
    let model = cfg.build_model()?;
    let k = cfg.settings.k;
    match &model {
        MapModel::Marp(m) if cfg.settings.density_source.exact() => {
            let var = report.sigma.sigma[0][0];
            for &t in &cfg.settings.t_grid {
                let n = t as usize;
                let grid = GridSpec::new((n as f64 * var).sqrt() / 100.0);
                let g = match m.invert_density_fft(n, &grid) {
                    Err(LltError::ResolutionError { .. }) => m.convolve_density(n, &grid)?,
                    other => other?,
                };
                g.write_csv(create(out, &format!("density_n{n}.csv"))?)?;
            }
        }
        MapModel::LocalTime(lt) if cfg.settings.density_source.exact() => {
            let t_max = *cfg.settings.t_grid.last().expect("validated grid");
            let series = lt.density_series(t_max)?;
            let points = SLICE_POINTS[(lt.dim() - 1).min(2)];
            for &t in &cfg.settings.t_grid {
                series.write_slice_csv(k, t, points, create(out, &format!("density_t{t}.csv"))?)?;
            }
        }
        _ => {}
    }
    if cfg.settings.density_source.montecarlo() {
        let paths = simulate_horizons(&model, k, &cfg.settings.t_grid, cfg.settings.mc.n_paths, cfg.settings.mc.seed)?;
        for (t, samples) in cfg.settings.t_grid.iter().zip(&paths) {
            write_samples_csv(samples, create(out, &format!("samples_t{t}.csv"))?)?;
        }
    }
    Ok(())
}

fn run(cli: &Cli, config: &Path) -> Result<Flagged> {
    let cfg = load_experiment(config, cli.seed)?;
    let report = run_llt_experiment(&cfg)?;
    match cli.format {
        Format::Json => report.write_json(create(&cli.out, "report.json")?)?,
        Format::Csv => {
            report.write_csv(create(&cli.out, "report.csv")?)?;
            write_density_csvs(&cfg, &report, &cli.out)?;
        }
    }
    for p in &report.points {
        let mut line = format!("t = {:<8}", p.t);
        if let Some(e) = p.sup_error {
            line += &format!(" sup error {e:.6e}");
        }
        if let Some(m) = &p.montecarlo {
            line += &format!(" mc {:.6e} ± {:.1e}", m.sup_error, m.se_band);
        }
        println!("{line}  boundary {:.3e}", p.boundary_term);
    }
    for (name, fit) in [("slope", &report.fit), ("mc slope", &report.montecarlo_fit)] {
        if let Some(f) = fit {
            let ci = f.slope_ci.map_or(String::new(), |(lo, hi)| format!(" (95% CI {lo:.4} .. {hi:.4})"));
            println!("{name} {:.4}{ci}, R² {:.5}", f.fit.slope, f.fit.r_squared);
        }
    }
    for f in &report.flags {
        println!("note: {f}");
    }
    Ok(report_failures(&report.assumption_failures))
}

fn write_diag_csv<W: Write>(d: &DiagnosticsBlock, mut w: W) -> Result<()> {
    writeln!(w, "assumption,passed,measurement")?;
    writeln!(w, "I-P,{},", d.irreducible_aperiodic)?;
    writeln!(w, "M3,{},{:e}", d.moment3.finite, d.moment3.value)?;
    writeln!(w, "AC1,{},", d.ac1_passed)?;
    writeln!(w, "AC2,{},", d.ac2_passed)?;
    writeln!(w, "N-L,{},{:e}", d.lattice_verdict == llt_core::fourier::LatticeVerdict::Nonlattice, d.lattice.max_radius_off_zero)?;
    Ok(())
}

fn diag(cli: &Cli, config: &Path) -> Result<Flagged> {
    let cfg = load_experiment(config, cli.seed)?;
    let block = run_diagnostics(&cfg)?;
    match cli.format {
        Format::Json => serde_json::to_writer_pretty(create(&cli.out, "diagnostics.json")?, &block)?,
        Format::Csv => write_diag_csv(&block, create(&cli.out, "diagnostics.csv")?)?,
    }
    println!(
        "I-P {}  M3 {}  AC1 {}  AC2 {}  N-L {}",
        block.irreducible_aperiodic,
        block.moment3.finite,
        block.ac1_passed,
        block.ac2_passed,
        block.lattice_verdict == llt_core::fourier::LatticeVerdict::Nonlattice
    );
    Ok(report_failures(&block.assumption_failures))
}

fn sweep(cli: &Cli, config: &Path) -> Result<Flagged> {
    let mut cfg = FamilyConfig::from_file(config).with_context(|| format!("reading {}", config.display()))?;
    if let Some(s) = cli.seed {
        cfg.settings.mc.seed = s;
    }
    let report = run_uniform_sweep(&cfg)?;
    match cli.format {
        Format::Json => report.write_json(create(&cli.out, "family.json")?)?,
        Format::Csv => report.write_csv(create(&cli.out, "family.csv")?)?,
    }
    for (t, e) in &report.max_error {
        println!("t = {t:<8} max sup error {e:.6e}");
    }
    if let Some(f) = &report.uniform_fit {
        println!("uniform slope {:.4}, R² {:.5}; alpha {:.4e}, beta {:.4e}", f.fit.slope, f.fit.r_squared, report.alpha, report.beta);
    }
    Ok(report_failures(&report.assumption_failures))
}

fn execute(cli: &Cli) -> Result<Flagged> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    match &cli.command {
        Command::Run { config } => run(cli, config),
        Command::Diag { config } => diag(cli, config),
        Command::Sweep { config } => sweep(cli, config),
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is reserved for flagged assumptions here
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            // a singular covariance is an assumption failure, not a crash
            if matches!(e.downcast_ref::<LltError>(), Some(LltError::DegenerateCovariance(_))) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

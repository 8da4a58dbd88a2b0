use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use ccqsim::cavity::{ConditionalCavityState, FieldTrack};
use ccqsim::compensation::CompensationMode;
use ccqsim::ensemble::{self, SimulationConfig};
use ccqsim::slh::{verify_cascade, HilbertLayout, PortDrives};
use ccqsim::sme::{simulate_trajectory, Representation, TrajectoryPlan};
use ccqsim::{Error, Result};

#[derive(Parser)]
#[command(name = "ccqsim", version, about = "Remote entanglement of qubits in cascaded cavities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: CCQSIM_WORKERS, else the core count).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default: `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a trajectory ensemble.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trajectories: Option<usize>,
        /// polaron | lab-compensated | lab-reduced | full
        #[arg(long)]
        frame: Option<String>,
    },
    /// Maximum concurrence over line loss and detection efficiency.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trajectories: Option<usize>,
    },
    /// Outcome-resolved histograms of the integrated voltage.
    Histogram {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trajectories: Option<usize>,
    },
    /// Write the compensation drive and residual along the pulse.
    Compensate {
        #[command(flatten)]
        common: Common,
        /// adiabatic | bad-cavity | ideal | dynamic | detuning | none
        #[arg(long)]
        mode: Option<String>,
    },
    /// Check the composed network against its closed form.
    VerifySlh {
        #[command(flatten)]
        common: Common,
        /// Fock levels per cavity.
        #[arg(long, default_value_t = 8)]
        fock: usize,
    },
}

fn parse_mode(s: &str) -> Result<CompensationMode> {
    Ok(match s {
        "adiabatic" => CompensationMode::Adiabatic,
        "bad-cavity" | "bad_cavity" => CompensationMode::BadCavity,
        "ideal" => CompensationMode::Ideal,
        "dynamic" => CompensationMode::Dynamic,
        "detuning" => CompensationMode::Detuning,
        "none" => CompensationMode::None,
        _ => return Err(Error::param("mode", format!("unknown compensation mode '{s}'"))),
    })
}

fn load(common: &Common) -> Result<(SimulationConfig, PathBuf)> {
    let mut cfg = SimulationConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.simulation.seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok((cfg, out))
}

fn simulate(common: &Common, trajectories: Option<usize>, frame: Option<&str>) -> Result<()> {
    let (mut cfg, out) = load(common)?;
    if let Some(f) = frame {
        cfg.simulation.frame = Representation::parse(f)?;
    }
    cfg.validate()?;
    let r = cfg.resolve()?;
    let files = cfg.output.trajectory_files.min(trajectories.unwrap_or(cfg.simulation.trajectories));
    if files > 0 {
        let plan = TrajectoryPlan::new(&r.program, &r.params, r.options.clone())?;
        for k in 0..files {
            let rec = simulate_trajectory(&plan, k as u64)?;
            ensemble::write_trajectory_csv(&out.join(format!("trajectory_{k:06}.csv")), &rec)?;
        }
    }
    let run = ensemble::run_config(&cfg, trajectories, common.workers)?;
    if let Some(e) = run.error {
        ensemble::write_json(&out.join("manifest.json"), &run.manifest)?;
        return Err(e);
    }
    let summary = run.summary()?;
    ensemble::write_summary(&out, &summary, &run.manifest)?;
    ensemble::write_coherence_csv(&out.join("coherence.csv"), &summary)?;
    for (label, count) in &summary.outcome_counts {
        println!("{label:>12} {count}");
    }
    println!("mean concurrence {:.6}", summary.mean_concurrence);
    Ok(())
}

fn sweep(common: &Common, trajectories: Option<usize>) -> Result<()> {
    let (cfg, out) = load(common)?;
    let grid = ensemble::configured_sweep(&cfg, trajectories, common.workers)?;
    ensemble::write_sweep_csv(&out.join("sweep.csv"), &grid)?;
    ensemble::write_sweep_cells_csv(&out.join("sweep_cells.csv"), &grid)?;
    ensemble::write_json(&out.join("sweep.json"), &grid)?;
    for (db, row) in grid.loss_db.iter().zip(&grid.max_concurrence) {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:.4}")).collect();
        println!("{db:>6} dB  {}", cells.join("  "));
    }
    Ok(())
}

fn histogram(common: &Common, trajectories: Option<usize>) -> Result<()> {
    let (cfg, out) = load(common)?;
    let set = ensemble::voltage_histograms(&cfg, trajectories, common.workers)?;
    ensemble::write_histogram_csv(&out.join("histogram.csv"), &set)?;
    ensemble::write_conditional_csv(&out.join("histogram_conditional.csv"), &set)?;
    ensemble::write_json(&out.join("histogram.json"), &set)?;
    Ok(())
}

fn compensate(common: &Common, mode: Option<&str>) -> Result<()> {
    let (mut cfg, out) = load(common)?;
    if let Some(m) = mode {
        cfg.compensation.mode = Some(parse_mode(m)?);
    }
    let r = cfg.resolve()?;
    let track =
        FieldTrack::build(&r.program, &r.params, ConditionalCavityState::vacuum(0.0), r.options.dt, r.options.n_steps)?;
    let path = out.join(format!("compensation_{}.csv", cfg.mode().name()));
    ensemble::write_compensation_csv(&path, &r.params, &track)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn verify(common: &Common, fock: usize) -> Result<()> {
    let (cfg, _) = load(common)?;
    let p = cfg.params.to_params()?;
    let drives = cfg.drive.to_drive_set()?;
    // Probe the network with the hold-level port amplitudes (or small
    // defaults when a port is unused, so every drive term is exercised).
    let peak = |e: &Option<ccqsim::drive::Envelope>, default: f64| {
        e.as_ref()
            .map(|e| ccqsim::C64::from_polar(e.amplitude, e.phase))
            .unwrap_or(ccqsim::C64::new(default, 0.5 * default))
    };
    let ports =
        PortDrives { eps: peak(&drives.probe, 0.3), a_bar: peak(&drives.a_bar, 0.2), b_bar: peak(&drives.b_bar, -0.1) };
    let report = verify_cascade(&p, &ports, &HilbertLayout::new(fock, fock), 10, cfg.simulation.seed)?;
    for c in &report.clauses {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {} (max error {:.3e}, tolerance {:.0e})", c.name, c.max_error, c.tolerance);
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Error::Verification("network does not match its closed form".into()))
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate { common, trajectories, frame } => simulate(common, *trajectories, frame.as_deref()),
        Command::Sweep { common, trajectories } => sweep(common, *trajectories),
        Command::Histogram { common, trajectories } => histogram(common, *trajectories),
        Command::Compensate { common, mode } => compensate(common, mode.as_deref()),
        Command::VerifySlh { common, fock } => verify(common, *fock),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

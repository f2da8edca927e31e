use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cavitraj::config::{resolve_config, RunConfig};
use cavitraj::ensemble::{resume_ensemble, run_ensemble_with, trajectory_seed, RunControl};
use cavitraj::model::eval_trap_potential;
use cavitraj::output::{self, Manifest, OutputDir};
use cavitraj::pipeline::{
    check_validity, ensemble_job, needs_modes, prepare, run_threshold_scan, run_wavelength_scan,
    Prepared,
};
use cavitraj::presets::{preset, preset_description, PRESET_NAMES};
use cavitraj::Result;

const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cavitraj",
    version,
    about = "Stochastic measurement trajectories of a BEC in a lossy optical cavity"
)]
struct Cli {
    /// TOML configuration, or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Start from a named preset (see `presets list`).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Base seed; trajectory k uses seed + k.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trajectories: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "cavitraj-out")]
    out: PathBuf,
    /// Write into a non-empty output directory.
    #[arg(long, global = true)]
    force: bool,
    /// Treat validity warnings as errors.
    #[arg(long, global = true)]
    strict_validity: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground state of the trap (pump off).
    GroundState,
    /// Ground state and Bogoliubov spectrum with cavity overlaps.
    Bdg,
    /// One trajectory with seed `--seed`.
    Simulate,
    /// An ensemble of trajectories with reduced statistics.
    Ensemble {
        /// Checkpoint after every trajectory to <out>/checkpoint.json.
        #[arg(long)]
        checkpoint: bool,
        /// Continue from <out>/checkpoint.json.
        #[arg(long)]
        resume: bool,
    },
    /// Self-organization steady state versus pump strength.
    ThresholdScan,
    /// Kohn population and <|q1|> versus cavity wavenumber.
    WavelengthScan,
    /// Preset utilities.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// Names and one-line descriptions.
    List,
    /// Full configuration of a preset as TOML.
    Show { name: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    if let Command::Presets { action } = &cli.command {
        match action {
            PresetAction::List => {
                for name in PRESET_NAMES {
                    println!("{name:<16} {}", preset_description(name).unwrap_or(""));
                }
            }
            PresetAction::Show { name } => print!("{}", preset(name)?.to_toml()?),
        }
        return Ok(0);
    }
    let rc = configure(cli)?;
    match &cli.command {
        Command::GroundState => ground_state(cli, &rc),
        Command::Bdg => bdg(cli, &rc),
        Command::Simulate => simulate(cli, &rc),
        Command::Ensemble { checkpoint, resume } => ensemble(cli, &rc, *checkpoint, *resume),
        Command::ThresholdScan => threshold(cli, &rc),
        Command::WavelengthScan => wavelength(cli, &rc),
        Command::Presets { .. } => unreachable!("handled above"),
    }
}

fn configure(cli: &Cli) -> Result<RunConfig> {
    let mut rc = resolve_config(cli.preset.as_deref(), cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        rc.ensemble.base_seed = seed;
    }
    if let Some(n) = cli.trajectories {
        rc.ensemble.n_trajectories = n;
    }
    rc.validate()?;
    Ok(rc)
}

fn prepared(cli: &Cli, rc: &RunConfig, modes: bool) -> Result<Prepared> {
    let prep = prepare(rc, modes)?;
    for w in &prep.validity.warnings {
        eprintln!("warning: validity: {w:?}");
    }
    check_validity(&prep.validity, cli.strict_validity)?;
    Ok(prep)
}

fn open_out(cli: &Cli, keep_existing: bool) -> Result<OutputDir> {
    OutputDir::create(&cli.out, cli.force || keep_existing)
}

fn ground_state(cli: &Cli, rc: &RunConfig) -> Result<u8> {
    let prep = prepared(cli, rc, false)?;
    let mut out = open_out(cli, false)?;
    let potential = eval_trap_potential(&rc.params.trap, &prep.grid);
    output::write_ground_state(&mut out, &prep.ground, &potential, rc.params.atom_number)?;
    println!(
        "mu = {}  energy = {}  residual = {:e}",
        prep.ground.mu, prep.ground.energy, prep.ground.residual
    );
    finish(out, "ground-state", rc, Some(&prep), None, &[])
}

fn bdg(cli: &Cli, rc: &RunConfig) -> Result<u8> {
    let prep = prepared(cli, rc, true)?;
    let mut out = open_out(cli, false)?;
    let potential = eval_trap_potential(&rc.params.trap, &prep.grid);
    output::write_ground_state(&mut out, &prep.ground, &potential, rc.params.atom_number)?;
    let modes = prep.modes.as_ref().expect("requested");
    output::write_modes(&mut out, modes, &prep.fields)?;
    for (j, m) in modes.modes.iter().enumerate() {
        println!("mode {}: energy {}", j + 1, m.energy);
    }
    finish(out, "bdg", rc, Some(&prep), None, &[])
}

fn simulate(cli: &Cli, rc: &RunConfig) -> Result<u8> {
    let prep = prepared(cli, rc, needs_modes(rc))?;
    let mut single = rc.clone();
    single.ensemble.n_trajectories = 1;
    single.ensemble.keep_trajectories = true;
    let job = ensemble_job(&single, &prep)?;
    let res = run_ensemble_with(&job, &RunControl::default())?;
    let traj = &res.trajectories[0];
    let mut out = open_out(cli, false)?;
    let labels = prep
        .layout
        .as_ref()
        .map(|l| l.labels().to_vec())
        .unwrap_or_default();
    output::write_trajectory(&mut out, traj, &prep.fields, &labels)?;
    let failed = if traj.failure.is_some() {
        vec![0]
    } else {
        Vec::new()
    };
    if let Some((t, why)) = &traj.failure {
        eprintln!("trajectory failed at t = {t}: {why}");
    }
    let code = finish(
        out,
        "simulate",
        &single,
        Some(&prep),
        Some(res.params_hash.clone()),
        &failed,
    )?;
    Ok(if failed.is_empty() { code } else { 2 })
}

fn ensemble(cli: &Cli, rc: &RunConfig, checkpoint: bool, resume: bool) -> Result<u8> {
    let prep = prepared(cli, rc, needs_modes(rc))?;
    let ck_path = cli.out.join("checkpoint.json");
    let mut out = open_out(cli, resume)?;
    let job = ensemble_job(rc, &prep)?;
    let control = RunControl {
        checkpoint: (checkpoint || resume).then(|| ck_path.clone()),
        stop_after: None,
    };
    let res = if resume {
        resume_ensemble(&job, &ck_path, &control)?
    } else {
        run_ensemble_with(&job, &control)?
    };
    output::write_ensemble(
        &mut out,
        &res,
        &prep.fields,
        prep.modes.as_deref(),
        rc.sample_noise,
    )?;
    let failed = res.stats.failed.clone();
    println!(
        "{} trajectories, {} failed, params hash {}",
        res.stats.completed,
        failed.len(),
        res.params_hash
    );
    finish(
        out,
        "ensemble",
        rc,
        Some(&prep),
        Some(res.params_hash.clone()),
        &failed,
    )?;
    Ok(if failed.is_empty() { 0 } else { EXIT_PARTIAL })
}

fn threshold(cli: &Cli, rc: &RunConfig) -> Result<u8> {
    let scan = run_threshold_scan(rc)?;
    let mut out = open_out(cli, false)?;
    output::write_threshold_scan(&mut out, &scan)?;
    match cavitraj::groundstate::onset_pump_scale(&scan) {
        Some(p) => println!("self-organization onset at pump scale {p}"),
        None => println!("no self-organization in the scanned range"),
    }
    finish(out, "threshold-scan", rc, None, None, &[])
}

fn wavelength(cli: &Cli, rc: &RunConfig) -> Result<u8> {
    let scan = run_wavelength_scan(rc)?;
    let mut out = open_out(cli, false)?;
    output::write_wavelength_scan(&mut out, &scan)?;
    finish(out, "wavelength-scan", rc, None, None, &[])
}

fn finish(
    out: OutputDir,
    command: &str,
    rc: &RunConfig,
    prep: Option<&Prepared>,
    params_hash: Option<String>,
    failed: &[usize],
) -> Result<u8> {
    let mut m = Manifest::new(command, rc, &out)?;
    m.params_hash = params_hash;
    m.validity = prep.map(|p| p.validity.clone());
    m.failed_trajectories = failed.to_vec();
    if matches!(command, "simulate" | "ensemble" | "wavelength-scan") {
        m.seeds = (0..rc.ensemble.n_trajectories)
            .map(|k| trajectory_seed(rc.ensemble.base_seed, k))
            .collect();
    }
    let path = out.finish(&m)?;
    println!("wrote {}", path.display());
    Ok(0)
}

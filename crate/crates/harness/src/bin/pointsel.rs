//! `pointsel` command-line front end. Results go to stdout as CSV,
//! diagnostics to stderr. Exit code 2 marks invalid input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pointsel_core::{
    estimate_from_readings, gesture_quality, select, Choice, KalmanConfig, RegistrationAttempt,
    RegistrationOutcome, RegistrationPolicy, Vec3,
};
use pointsel_harness::calibrate::{calibrate, CalibrationOptions};
use pointsel_harness::sweep::{run_sweep, SweepRequest};
use pointsel_harness::{GestureRequest, HarnessError, Scenario, Trace};

#[derive(Parser)]
#[command(
    name = "pointsel",
    version,
    about = "Point-to-select UWB pipeline and benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one gesture and print its trace CSV.
    Simulate(SimulateArgs),
    /// Estimate the pointing ray of a trace.
    Estimate(EstimateArgs),
    /// Locate a device from two gesture traces.
    Register(RegisterArgs),
    /// Pick the device a trace points at.
    Select(SelectArgs),
    /// Run a benchmark sweep and print its report.
    Sweep(SweepArgs),
    /// Fit the scenario noise to a target median direction error.
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Gesture centre, "x,y,z" in meters.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    user: Vec3<f64>,
    /// Point toward this position, "x,y,z".
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, conflicts_with = "device", required_unless_present = "device")]
    toward: Option<Vec3<f64>>,
    /// Point toward a scenario device.
    #[arg(long)]
    device: Option<String>,
    #[arg(long, default_value_t = 0.2)]
    displacement: f64,
    #[arg(long, default_value_t = 0.1)]
    speed: f64,
    /// Overrides the scenario tremor amplitude, meters.
    #[arg(long)]
    jitter: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "g1")]
    gesture_id: String,
    /// Write the trace here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Gesture id inside the trace; defaults to the first.
    #[arg(long)]
    gesture: Option<String>,
}

#[derive(Args)]
struct RegisterArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    first: PathBuf,
    #[arg(long)]
    second: PathBuf,
    #[arg(long, default_value = "device")]
    label: String,
    /// Re-register an existing device instead of adding one.
    #[arg(long)]
    id: Option<String>,
    /// Save the updated catalog back into the scenario.
    #[arg(long)]
    write: bool,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    gesture: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    /// direction | distance | angle | displacement | velocity | resolution | registration
    #[arg(long)]
    axis: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Comma-separated grid; defaults depend on the axis.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    grid: Option<Vec<f64>>,
    /// Registration sweep: user-to-device distance, meters.
    #[arg(long, default_value_t = 3.0)]
    user_distance: f64,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Created with defaults when missing.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 2.33)]
    target_median_deg: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_vec3(s: &str) -> Result<Vec3<f64>, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("not a number: {p:?}"))
        })
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [x, y, z] if parts.iter().all(|v| v.is_finite()) => Ok(Vec3::new(*x, *y, *z)),
        _ => Err("expected \"x,y,z\"".into()),
    }
}

fn load_scenario(path: Option<&Path>) -> Result<Scenario, HarnessError> {
    match path {
        Some(p) => Scenario::read(p),
        None => Ok(Scenario::default()),
    }
}

fn gesture_readings(
    trace: &Trace,
    id: Option<&str>,
) -> Result<Vec<pointsel_core::UwbReading<f64>>, HarnessError> {
    match id {
        Some(id) => trace.gesture_readings(id),
        None => trace.primary_readings(),
    }
}

fn simulate(a: SimulateArgs) -> Result<(), HarnessError> {
    let scenario = load_scenario(a.scenario.as_deref())?;
    let target = match (&a.toward, &a.device) {
        (Some(t), _) => *t,
        (None, Some(id)) => scenario.catalog()?.get(id)?.position,
        (None, None) => unreachable!("clap requires one target"),
    };
    let req = GestureRequest {
        displacement_m: a.displacement,
        speed_mps: a.speed,
        jitter_m: a.jitter,
        seed: a.seed,
        ..GestureRequest::new(a.user, target)
    };
    let g = req.simulate(&scenario)?;
    let trace = Trace::from_readings(&a.gesture_id, &g.readings);
    match a.out {
        Some(p) => trace.write(&p)?,
        None => print!("{}", trace.to_csv()),
    }
    eprintln!(
        "simulated {} samples toward {:?}",
        g.readings.len(),
        <[f64; 3]>::from(target)
    );
    Ok(())
}

fn estimate(a: EstimateArgs) -> Result<(), HarnessError> {
    let trace = Trace::read(&a.trace)?;
    let readings = gesture_readings(&trace, a.gesture.as_deref())?;
    let ray = estimate_from_readings(&readings, &KalmanConfig::default())?;
    let o = ray.origin();
    let d = ray.direction;
    let flags = gesture_quality(&ray).flag_names().join("|");
    println!("origin_x,origin_y,origin_z,dir_x,dir_y,dir_z,samples,displacement_m,speed_mps,explained_variance_ratio,flags");
    println!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        o.x,
        o.y,
        o.z,
        d.x,
        d.y,
        d.z,
        ray.samples.len(),
        ray.net_displacement,
        ray.mean_speed,
        ray.explained_variance_ratio,
        flags
    );
    Ok(())
}

fn register(a: RegisterArgs) -> Result<(), HarnessError> {
    let mut scenario = Scenario::read(&a.scenario)?;
    let mut catalog = scenario.catalog()?;
    let cfg = KalmanConfig::default();
    let ray = |p: &Path| -> Result<_, HarnessError> {
        let trace = Trace::read(p)?;
        Ok(estimate_from_readings(&trace.primary_readings()?, &cfg)?)
    };
    let attempt = RegistrationAttempt::new(ray(&a.first)?, ray(&a.second)?);
    let user_gap = attempt.ray1.origin().distance(attempt.ray2.origin());
    let registered_at = attempt
        .ray2
        .samples
        .samples()
        .last()
        .map(|s| s.timestamp)
        .unwrap_or(0.0);
    let policy = RegistrationPolicy::default();
    let outcome = match &a.id {
        Some(id) => catalog.update(id, &attempt, &policy, registered_at)?,
        None => catalog.register(&a.label, &attempt, &policy, registered_at)?,
    };
    if let Some(g) =
        pointsel_core::user_separation_check(attempt.ray1.origin(), attempt.ray2.origin())
            .guidance()
    {
        eprintln!(
            "warning: user positions {user_gap:.3} m apart; {:?}",
            g.reason
        );
    }
    println!("outcome,id,x,y,z,gap_m,angle_deg,reason");
    match outcome {
        RegistrationOutcome::Registered(r) => {
            println!(
                "registered,{},{},{},{},{},{},",
                r.id,
                r.position.x,
                r.position.y,
                r.position.z,
                r.registration_gap,
                r.registration_angle.to_degrees()
            );
            if a.write {
                scenario.set_catalog(&catalog);
                scenario.write(&a.scenario)?;
                eprintln!(
                    "saved {} devices to {}",
                    catalog.len(),
                    a.scenario.display()
                );
            }
        }
        RegistrationOutcome::GuidanceNeeded(g) => {
            let reason = serde_json::to_value(&g.reason)?;
            let kind = reason
                .get("kind")
                .and_then(|k| k.as_str())
                .unwrap_or("guidance")
                .to_string();
            println!(
                "guidance-needed,,,,,,{},{kind}",
                attempt.angle().to_degrees()
            );
            eprintln!("{}: move farther apart before the second gesture", kind);
        }
    }
    Ok(())
}

fn select_cmd(a: SelectArgs) -> Result<(), HarnessError> {
    let scenario = Scenario::read(&a.scenario)?;
    let catalog = scenario.catalog()?;
    let trace = Trace::read(&a.trace)?;
    let ray = estimate_from_readings(
        &gesture_readings(&trace, a.gesture.as_deref())?,
        &KalmanConfig::default(),
    )?;
    let result = select(&ray, catalog.list())?;
    let chosen = match &result.chosen {
        Choice::Device(id) => id.clone(),
        Choice::Ambiguous(ids) => format!("ambiguous:{}", ids.join("|")),
    };
    let scores: Vec<String> = result
        .ranked
        .iter()
        .map(|r| format!("{}:{}", r.id, r.score))
        .collect();
    println!("{},{}", chosen, scores.join(","));
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<(), HarnessError> {
    let scenario = load_scenario(a.scenario.as_deref())?;
    let req = SweepRequest {
        grid: a.grid,
        user_distance: a.user_distance,
        ..SweepRequest::new(&a.axis, a.trials, a.seed)
    };
    let report = run_sweep(&req, &scenario)?;
    print!("{}", report.to_csv());
    let skipped = report.cells.iter().filter(|c| !c.is_ok()).count();
    if skipped > 0 {
        eprintln!("{skipped} cell(s) skipped or unconverged");
    }
    Ok(())
}

fn calibrate_cmd(a: CalibrateArgs) -> Result<(), HarnessError> {
    let scenario = if a.scenario.exists() {
        Scenario::read(&a.scenario)?
    } else {
        eprintln!("creating {}", a.scenario.display());
        Scenario::new(
            &a.scenario
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        )
    };
    let mut opts = CalibrationOptions::new(a.target_median_deg);
    opts.trials_per_direction = a.trials;
    if let Some(seed) = a.seed {
        opts.seed = seed;
    }
    let out = calibrate(&scenario, &opts)?;
    out.write(&a.scenario)?;
    let n = &out.noise;
    let c = out.calibration.as_ref().expect("calibration record");
    println!("scale,achieved_median_deg,range_sigma_m,azimuth_sigma_deg,elevation_sigma_deg,aoa_distortion_sigma,aoa_bias_sigma_deg");
    println!(
        "{},{},{},{},{},{},{}",
        c.scale,
        c.achieved_median_deg,
        n.range_sigma_m,
        n.azimuth_sigma_deg,
        n.elevation_sigma_deg,
        n.aoa_distortion_sigma,
        n.aoa_bias_sigma_deg
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Register(a) => register(a),
        Command::Select(a) => select_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Calibrate(a) => calibrate_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                HarnessError::Io(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

//! `armdyn`: forward kinematics, inverse dynamics, air-bearing torque and
//! validation from the command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input or usage error,
//! 3 misaligned data. Every path accepts `-` for stdin/stdout.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use armdyn::batch::{self, Execution, Method};
use armdyn::kinematics::{fk_poe, KinematicsError};
use armdyn::model::{parse_model_with, Model, ParseOptions};
use armdyn::oracle::{self, OracleReport};
use armdyn::platform::{self, BearingProfile, MomentumForm};
use armdyn::trajectory::{self, fmt_f64, Trajectory, TrajectoryError};

#[derive(Parser)]
#[command(name = "armdyn", version, about = "Serial-manipulator dynamics toolkit")]
struct Cli {
    /// Accept unknown keys in model files (reported as warnings).
    #[arg(long, global = true)]
    lenient: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pose of a link frame by product of exponentials.
    Fk(FkArgs),
    /// Joint torques along a trajectory.
    Idyn(IdynArgs),
    /// Reaction torque at the air bearing along a trajectory.
    Platform(PlatformArgs),
    /// Torque error profile `a − b`.
    Compare(CompareArgs),
    /// Run the numerical cross-checks and print one JSON report per line.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct FkArgs {
    model: PathBuf,
    /// Joint angles, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "csv", required_unless_present = "csv")]
    q: Vec<f64>,
    /// Trajectory CSV; one pose row per sample.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Link frame (0 is the base). Defaults to the last link.
    #[arg(long)]
    frame: Option<usize>,
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

#[derive(Args)]
struct TrajArgs {
    /// `table1` for the sinusoidal test motion, or a trajectory CSV.
    #[arg(long, default_value = "table1")]
    traj: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t0: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    t1: f64,
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    dt: f64,
}

#[derive(Args)]
struct IdynArgs {
    model: PathBuf,
    #[arg(long, default_value = "dh-recursive")]
    method: Method,
    #[command(flatten)]
    traj: TrajArgs,
    /// Evaluate on one thread.
    #[arg(long)]
    sequential: bool,
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

#[derive(Args)]
struct PlatformArgs {
    model: PathBuf,
    #[command(flatten)]
    traj: TrajArgs,
    /// Include `m·r × ṙ` in each body's momentum.
    #[arg(long)]
    translational_momentum: bool,
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    /// Interpolate `b` onto the timestamps of `a`.
    #[arg(long)]
    resample: bool,
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Arm,
    Platform,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    model: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    #[command(flatten)]
    traj: TrajArgs,
    /// Bearing torques from `armdyn platform` to check instead of
    /// recomputing them.
    #[arg(long)]
    bearing_csv: Option<PathBuf>,
    #[arg(long)]
    translational_momentum: bool,
    /// Corrupt the checked torques so every check must fail.
    #[arg(long, hide = true)]
    inject_fault: bool,
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

enum Failure {
    Input(String),
    Alignment(String),
    Verification,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification => 1,
            Failure::Input(_) => 2,
            Failure::Alignment(_) => 3,
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(format!("I/O error: {e}"))
    }
}

impl From<KinematicsError> for Failure {
    fn from(e: KinematicsError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<TrajectoryError> for Failure {
    fn from(e: TrajectoryError) -> Self {
        let msg = format!("{}: {e}", trajectory_kind(&e));
        if e.is_alignment() {
            Failure::Alignment(msg)
        } else {
            Failure::Input(msg)
        }
    }
}

fn trajectory_kind(e: &TrajectoryError) -> &'static str {
    match e {
        TrajectoryError::CsvFormat { .. } => "CsvFormatError",
        TrajectoryError::NonMonotoneTime { .. } => "NonMonotoneTime",
        TrajectoryError::WidthMismatch { .. } => "WidthMismatch",
        TrajectoryError::TimestampMismatch { .. } => "TimestampMismatch",
        TrajectoryError::LengthMismatch { .. } => "LengthMismatch",
        TrajectoryError::MissingTorque { .. } => "MissingTorque",
        TrajectoryError::OutOfSpan { .. } => "OutOfSpan",
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn is_stdio(p: &Path) -> bool {
    p.as_os_str() == "-"
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    if is_stdio(path) {
        io::stdin().read_to_end(&mut buf)?;
    } else {
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    }
    Ok(buf)
}

fn open_output(path: &Path) -> Result<Box<dyn Write>> {
    Ok(if is_stdio(path) {
        Box::new(BufWriter::new(io::stdout().lock()))
    } else {
        let f = File::create(path).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
        Box::new(BufWriter::new(f))
    })
}

fn load_model(path: &Path, lenient: bool) -> Result<Model> {
    let bytes = read_input(path)?;
    let parsed = parse_model_with(bytes, ParseOptions { lenient })
        .map_err(|e| Failure::Input(format!("{}: {e}", e.kind())))?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    Ok(parsed.model)
}

fn load_trajectory(path: &Path) -> Result<Trajectory> {
    Ok(trajectory::load_csv(read_input(path)?.as_slice())?)
}

impl TrajArgs {
    fn resolve(&self, dof: usize) -> Result<Trajectory> {
        let traj = if self.traj == "table1" {
            if !(self.dt > 0.0 && self.dt.is_finite()) {
                return Err(Failure::Input(format!("--dt must be positive, got {}", self.dt)));
            }
            if !(self.t0.is_finite() && self.t1.is_finite() && self.t1 >= self.t0) {
                return Err(Failure::Input(format!("invalid time span [{}, {}]", self.t0, self.t1)));
            }
            trajectory::table1(dof, self.t0, self.t1, self.dt)
        } else {
            load_trajectory(Path::new(&self.traj))?
        };
        if traj.dof() != dof {
            return Err(Failure::Input(format!(
                "trajectory has {} joints but the model has {dof}",
                traj.dof()
            )));
        }
        Ok(traj)
    }
}

fn require_platform(model: &Model) -> Result<&armdyn::PlatformModel> {
    model
        .platform()
        .ok_or_else(|| Failure::Input("model has no `platform` block; bearing torque needs one".into()))
}

fn momentum_form(translational: bool) -> MomentumForm {
    if translational {
        MomentumForm::WithTranslational
    } else {
        MomentumForm::ParallelAxis
    }
}

fn cmd_fk(args: FkArgs, lenient: bool) -> Result<()> {
    let model = load_model(&args.model, lenient)?;
    let arm = model.arm();
    let frame = args.frame.unwrap_or(arm.dof());
    let rows: Vec<(f64, DVector<f64>)> = match &args.csv {
        Some(path) => load_trajectory(path)?
            .samples()
            .iter()
            .map(|s| (s.t, s.q.clone()))
            .collect(),
        None => vec![(0.0, DVector::from_vec(args.q.clone()))],
    };
    let mut out = open_output(&args.output)?;
    writeln!(out, "t,r11,r12,r13,r21,r22,r23,r31,r32,r33,px,py,pz")?;
    for (t, q) in rows {
        if q.len() != arm.dof() {
            return Err(Failure::Input(format!("{} joint values given, model has {}", q.len(), arm.dof())));
        }
        let pose = fk_poe(arm, q.as_slice(), frame)?;
        let r = pose.rotation;
        let fields: Vec<String> = std::iter::once(t)
            .chain((0..3).flat_map(|i| (0..3).map(move |j| r[(i, j)])))
            .chain(pose.translation.iter().copied())
            .map(fmt_f64)
            .collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_idyn(args: IdynArgs, lenient: bool) -> Result<()> {
    let model = load_model(&args.model, lenient)?;
    let arm = model.arm();
    let traj = args.traj.resolve(arm.dof())?;
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    let torques = batch::inverse_dynamics(arm, &traj.states(), args.method, exec)?;
    let mut out = open_output(&args.output)?;
    trajectory::save_csv(&traj.with_torques(torques), &mut out)?;
    out.flush()?;
    Ok(())
}

fn bearing_profile(p: &armdyn::PlatformModel, traj: &Trajectory, form: MomentumForm) -> BearingProfile {
    BearingProfile {
        t: traj.times(),
        torques: batch::map(Execution::default(), traj.samples(), |s| {
            platform::total_bearing_torque_with(p, &s.state(), form)
        }),
    }
}

fn cmd_platform(args: PlatformArgs, lenient: bool) -> Result<()> {
    let model = load_model(&args.model, lenient)?;
    let p = require_platform(&model)?;
    let traj = args.traj.resolve(p.arm.dof())?;
    let profile = bearing_profile(p, &traj, momentum_form(args.translational_momentum));
    let mut out = open_output(&args.output)?;
    profile.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    if is_stdio(&args.a) && is_stdio(&args.b) {
        return Err(Failure::Input("only one input can come from stdin".into()));
    }
    let a = load_trajectory(&args.a)?;
    let mut b = load_trajectory(&args.b)?;
    if args.resample {
        b = trajectory::resample_linear(&b, &a.times())?;
    }
    let profile = trajectory::error_profile(&a, &b)?;
    let mut out = open_output(&args.output)?;
    trajectory::save_csv(&profile.trajectory, &mut out)?;
    out.flush()?;
    let summary = serde_json::json!({
        "samples": profile.trajectory.len(),
        "max_abs": profile.max_abs.as_slice(),
        "rms": profile.rms.as_slice(),
        "max": profile.max(),
    });
    eprintln!("{summary}");
    Ok(())
}

fn arm_reports(model: &armdyn::RobotModel, traj: &Trajectory, fault: bool) -> Result<Vec<OracleReport>> {
    let states = traj.states();
    let configs: Vec<_> = states.iter().map(|s| s.q.clone()).collect();
    let mut reports = Vec::new();
    reports.extend(oracle::cross_method_reports(model, &states)?);
    reports.push(oracle::mass_matrix_report(model, &configs));
    reports.push(oracle::gravity_gradient_report(model, &configs));
    let checked = if fault {
        // +1 N·m on joint 3 (or the last joint of shorter chains).
        let j = 2.min(model.dof() - 1);
        let torques = states
            .iter()
            .zip(traj.samples())
            .map(|(s, sample)| {
                let mut t = sample
                    .tau
                    .clone()
                    .unwrap_or_else(|| armdyn::inverse_dynamics_recursive(model, s));
                t[j] += 1.0;
                t
            })
            .collect();
        traj.clone().with_torques(torques)
    } else {
        traj.clone()
    };
    reports.push(oracle::power_balance_check(model, &checked));
    Ok(reports)
}

fn platform_reports(
    p: &armdyn::PlatformModel,
    traj: &Trajectory,
    bearing: Option<BearingProfile>,
    form: MomentumForm,
    fault: bool,
) -> Result<Vec<OracleReport>> {
    let mut dynamic: Vec<_> = match bearing {
        Some(profile) => {
            let times = traj.times();
            if profile.t.len() != times.len() {
                return Err(TrajectoryError::LengthMismatch {
                    a: times.len(),
                    b: profile.t.len(),
                }
                .into());
            }
            if let Some(i) = (0..times.len()).find(|&i| times[i] != profile.t[i]) {
                return Err(TrajectoryError::TimestampMismatch {
                    index: i,
                    a: times[i],
                    b: profile.t[i],
                }
                .into());
            }
            profile.torques.iter().map(|b| b.dynamic).collect()
        }
        None => bearing_profile(p, traj, form).torques.iter().map(|b| b.dynamic).collect(),
    };
    if fault {
        dynamic.iter_mut().for_each(|d| *d = -*d);
    }
    let mut reports = vec![oracle::fd_momentum_check_against(p, traj, &dynamic, form)];
    if !fault {
        reports.push(oracle::static_platform_check(p, traj));
    }
    Ok(reports)
}

fn cmd_verify(args: VerifyArgs, lenient: bool) -> Result<()> {
    let model = load_model(&args.model, lenient)?;
    let arm = model.arm();
    let traj = args.traj.resolve(arm.dof())?;
    let form = momentum_form(args.translational_momentum);

    let mut reports = Vec::new();
    if matches!(args.suite, Suite::Arm | Suite::All) {
        reports.extend(arm_reports(arm, &traj, args.inject_fault)?);
    }
    let run_platform = match args.suite {
        Suite::Platform => Some(require_platform(&model)?),
        Suite::All => model.platform(),
        Suite::Arm => None,
    };
    if let Some(p) = run_platform {
        let bearing = match &args.bearing_csv {
            Some(path) => Some(BearingProfile::read_csv(read_input(path)?.as_slice())?),
            None => None,
        };
        reports.extend(platform_reports(p, &traj, bearing, form, args.inject_fault)?);
    } else if args.suite == Suite::All {
        eprintln!("note: model has no platform block; skipping the platform suite");
    }

    let mut out = open_output(&args.output)?;
    for r in &reports {
        writeln!(out, "{}", r.to_json())?;
    }
    out.flush()?;
    if reports.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let lenient = cli.lenient;
    let result = match cli.command {
        Command::Fk(a) => cmd_fk(a, lenient),
        Command::Idyn(a) => cmd_idyn(a, lenient),
        Command::Platform(a) => cmd_platform(a, lenient),
        Command::Compare(a) => cmd_compare(a),
        Command::Verify(a) => cmd_verify(a, lenient),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(m) | Failure::Alignment(m) => eprintln!("error: {m}"),
                Failure::Verification => eprintln!("verification failed"),
            }
            ExitCode::from(f.code())
        }
    }
}

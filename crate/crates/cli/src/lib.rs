//! Command-line front end: scenario files in, trajectory CSV and summary JSON
//! out.

use std::fs;
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use active_lines::config::ScenarioFile;
use active_lines::dynamics::{spherical_dynamics, CameraTwist, StateDerivative};
use active_lines::geometry::{PluckerLine, ReducedLineState};
use active_lines::selfcheck::{run_oracles, OracleResult, SphericalField};
use active_lines::sim::{simulate, ScenarioConfig, TrajectoryLog};
use active_lines::summary::{aggregate, run_seeds, summarize};
use active_lines::Vec3;
use anyhow::{anyhow, Context};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SINGULARITY: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const WORLD_FILE: &str = "world.csv";
pub const AGGREGATE_FILE: &str = "aggregate.json";

pub const CSV_HEADER: &str = "t,theta,phi,eta1,eta2,theta_hat,phi_hat,eta1_hat,eta2_hat,\
err_theta,err_phi,err_eta1,err_eta2,nu_x,nu_y,nu_z,omega_x,omega_y,omega_z,sig1_sq,sig2_sq,plucker_err";

/// Half length of the line segments written to the world file, meters.
const WORLD_SEGMENT_HALF_LENGTH: f64 = 1.5;
/// Camera path is written every this many steps.
const WORLD_PATH_STRIDE: usize = 10;

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    fn config(error: anyhow::Error) -> Self {
        Self {
            code: EXIT_CONFIG,
            error,
        }
    }
}

pub type CliResult<T = ()> = std::result::Result<T, Failure>;

pub fn load_scenario(path: &Path) -> anyhow::Result<ScenarioFile> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn load_config(path: &Path) -> CliResult<ScenarioConfig> {
    let file = load_scenario(path).map_err(Failure::config)?;
    file.to_config()
        .with_context(|| format!("invalid config {}", path.display()))
        .map_err(Failure::config)
}

/// Parses `A..B` (half-open) or `A..=B` (inclusive).
pub fn parse_seeds(s: &str) -> anyhow::Result<Range<u64>> {
    let (a, b, inclusive) = if let Some((a, b)) = s.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = s.split_once("..") {
        (a, b, false)
    } else {
        return Err(anyhow!("seed range must look like A..B or A..=B, got {s:?}"));
    };
    let a: u64 = a.trim().parse().with_context(|| format!("seed range start {a:?}"))?;
    let b: u64 = b.trim().parse().with_context(|| format!("seed range end {b:?}"))?;
    let end = if inclusive {
        b.checked_add(1).ok_or_else(|| anyhow!("seed range end overflows"))?
    } else {
        b
    };
    if end <= a {
        return Err(anyhow!("empty seed range {s:?}"));
    }
    Ok(a..end)
}

fn io(context: String) -> impl FnOnce(std::io::Error) -> Failure {
    move |e| Failure {
        code: EXIT_CONFIG,
        error: anyhow::Error::new(e).context(context),
    }
}

fn sci(v: f64) -> String {
    format!("{v:e}")
}

pub fn write_trajectory_csv<W: Write>(log: &TrajectoryLog, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in &log.records {
        let x = &r.truth;
        let e = &r.estimate;
        let err = r.state_error();
        let cols = [
            r.t,
            x.theta,
            x.phi,
            x.eta1,
            x.eta2,
            e.theta,
            e.phi,
            e.eta1,
            e.eta2,
            err[0],
            err[1],
            err[2],
            err[3],
            r.twist.nu.x,
            r.twist.nu.y,
            r.twist.nu.z,
            r.twist.omega.x,
            r.twist.omega.y,
            r.twist.omega.z,
            r.sigma_sq[0],
            r.sigma_sq[1],
            r.plucker_error,
        ];
        let row: Vec<String> = cols.iter().map(|&v| sci(v)).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()
}

fn segment(line: &PluckerLine) -> (Vec3, Vec3) {
    let c = line.closest_point();
    let d = line.direction() * WORLD_SEGMENT_HALF_LENGTH;
    (c - d, c + d)
}

/// World-frame geometry for a 3D plot: the true and final estimated line as
/// segments centred on their points closest to the start pose, and the
/// camera path.
pub fn write_world_csv<W: Write>(log: &TrajectoryLog, mut w: W) -> std::io::Result<()> {
    writeln!(w, "kind,x0,y0,z0,x1,y1,z1")?;
    let row = |w: &mut W, kind: &str, a: Vec3, b: Vec3| {
        writeln!(
            w,
            "{kind},{},{},{},{},{},{}",
            sci(a.x),
            sci(a.y),
            sci(a.z),
            sci(b.x),
            sci(b.y),
            sci(b.z)
        )
    };
    let (a, b) = segment(&log.line_world);
    row(&mut w, "true_line", a, b)?;
    if let Some(est) = log.estimated_world_line() {
        let (a, b) = segment(&est);
        row(&mut w, "estimated_line", a, b)?;
    }
    let mut path: Vec<Vec3> = log
        .records
        .iter()
        .step_by(WORLD_PATH_STRIDE)
        .map(|r| r.pose.translation)
        .collect();
    if let Some(last) = log.last() {
        if log.records.len() % WORLD_PATH_STRIDE != 1 {
            path.push(last.pose.translation);
        }
        // Final optical axis, 0.3 m long.
        let z = last.pose.rotation.column(2) * 0.3;
        row(&mut w, "camera_axis", last.pose.translation, last.pose.translation + z)?;
    }
    for pair in path.windows(2) {
        row(&mut w, "camera_path", pair[0], pair[1])?;
    }
    w.flush()
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(io(format!("creating {}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).expect("summary types serialize");
    text.push('\n');
    fs::write(path, text).map_err(io(format!("writing {}", path.display())))
}

fn ensure_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(io(format!("creating output directory {}", dir.display())))
}

/// `run`: one scenario, trajectory CSV, world file and summary JSON.
pub fn run(config: &Path, out: &Path, threshold: f64) -> CliResult {
    let cfg = load_config(config)?;
    log::info!("seed {}, {} steps of {} s", cfg.seed, cfg.steps(), cfg.dt);
    let log = simulate(&cfg)
        .context("scenario setup failed")
        .map_err(Failure::config)?;
    ensure_dir(out)?;
    let csv = out.join(TRAJECTORY_FILE);
    write_trajectory_csv(&log, create(&csv)?).map_err(io(format!("writing {}", csv.display())))?;
    let world = out.join(WORLD_FILE);
    write_world_csv(&log, create(&world)?).map_err(io(format!("writing {}", world.display())))?;
    let summary = summarize(cfg.seed, &log, threshold);
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    log::debug!("final record: {:?}", log.last());

    if let Some(f) = &log.failure {
        return Err(Failure {
            code: EXIT_SINGULARITY,
            error: anyhow!("run aborted at t = {} s: {}", f.time, f.error),
        });
    }
    match summary.final_plucker_error {
        Some(e) => log::info!("final Plücker error {e:e}, converged: {}", summary.converged),
        None => log::info!("final estimate has no finite depth"),
    }
    Ok(())
}

pub fn summary_file_name(seed: u64) -> String {
    format!("summary_{seed}.json")
}

/// `batch`: one summary per seed plus the aggregate. Scenario failures are
/// recorded in the summaries and do not change the exit code.
pub fn batch(config: &Path, seeds: &str, out: &Path, threshold: f64) -> CliResult {
    let cfg = load_config(config)?;
    let seeds = parse_seeds(seeds).map_err(Failure::config)?;
    log::info!("batch over seeds {}..{}", seeds.start, seeds.end);
    let summaries = run_seeds(&cfg, seeds, |seed, log| summarize(seed, &log, threshold))
        .context("batch setup failed")
        .map_err(Failure::config)?;
    ensure_dir(out)?;
    for s in &summaries {
        if let Some(f) = &s.failure {
            log::info!("seed {} aborted at t = {} s: {}", s.seed, f.time, f.error);
        }
        write_json(&out.join(summary_file_name(s.seed)), s)?;
    }
    let agg = aggregate(&summaries, threshold);
    write_json(&out.join(AGGREGATE_FILE), &agg)?;
    log::info!(
        "{}/{} converged, {} aborted",
        agg.converged,
        agg.runs,
        agg.failures
    );
    Ok(())
}

fn flipped_eta1(x: &ReducedLineState, u: &CameraTwist) -> StateDerivative {
    let mut r = spherical_dynamics(x, u);
    r.d_eta1 = -r.d_eta1;
    r
}

pub fn oracle_table(results: &[OracleResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in results {
        out.push_str(&format!(
            "{:<width$}  {}  worst {:.3e}  tol {:.0e}  n {}\n",
            r.name,
            if r.passed() { "PASS" } else { "FAIL" },
            r.worst,
            r.tolerance,
            r.samples,
        ));
    }
    out
}

/// `check`: runs the oracle suite and prints a table.
pub fn check(samples: usize, seed: u64, inject_fault: bool) -> CliResult {
    let field: SphericalField = if inject_fault { flipped_eta1 } else { spherical_dynamics };
    let results = run_oracles(field, samples, seed);
    print!("{}", oracle_table(&results));
    let failed: Vec<_> = results.iter().filter(|r| !r.passed()).map(|r| r.name).collect();
    if failed.is_empty() {
        println!("all {} oracles passed", results.len());
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_ORACLE,
            error: anyhow!("oracle failure: {}", failed.join(", ")),
        })
    }
}

pub fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

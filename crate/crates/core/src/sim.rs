//! Closed-loop scenarios: a world-fixed line, a camera driven by the active
//! estimation laws, the observer, and a per-step trajectory log.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::control::{
    apply_mask, compensating_omega, eigenvalues, linear_accel, ControlGains, DofMask,
};
use crate::dynamics::{integrate_pose, interaction_matrix, transform_line, CameraPose, CameraTwist};
use crate::geometry::{
    line_from_point_direction, moment_to_spherical, phi_limit, reduce, unreduce, PluckerLine,
    ReducedLineState, SphericalMoment,
};
use crate::observer::{innovation, observer_step, Innovation, ObserverGains, ObserverState};
use crate::{LineError, Result, Vec3};

/// Maximum number of rejected draws in [`generate_scenario`].
pub const MAX_REJECTIONS: usize = 1000;

/// Distance of the sampling cube's near face from the camera.
pub const CUBE_FRONT_OFFSET: f64 = 1.0;

/// `|νᵀh_S|` below which the initial velocity gets an extra push along `h_S`.
pub const BOOTSTRAP_THRESHOLD: f64 = 1e-4;
pub const BOOTSTRAP_SPEED: f64 = 0.1;

/// How random lines are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineModel {
    /// Point uniform in a cube in front of the camera, direction uniform on
    /// the sphere.
    #[default]
    Cube,
    /// Nearly vertical line (camera y axis) in front of a forward-looking
    /// camera, so that `h ≈ [1, 0, 0]` and `φ ≈ 0`.
    NearVertical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub line_model: LineModel,
    pub cube_side: f64,
    pub duration: f64,
    pub dt: f64,
    pub observer: ObserverGains,
    pub control: ControlGains,
    /// When false the twist stays at `nu_init`/`omega_init` (after masking).
    pub active_control: bool,
    pub dof_mask: DofMask,
    /// Camera pose in the platform frame, used by the mask.
    pub mount: CameraPose,
    pub eta_init_range: f64,
    /// Start the estimate at the true state instead of a random `η̂`.
    pub exact_init: bool,
    pub meas_noise_std: f64,
    pub nu_init: Vec3,
    pub omega_init: Vec3,
    pub line_override: Option<PluckerLine>,
}

impl ScenarioConfig {
    /// Random line in a 4 m cube, six actuated axes, `α = 2000`,
    /// `k₁ = k₂ = 1`, `σ²_des = [0.08, 0.18]`.
    pub fn cube(seed: u64) -> Self {
        Self {
            seed,
            line_model: LineModel::Cube,
            cube_side: 4.0,
            duration: 3.0,
            dt: 1e-3,
            observer: ObserverGains::critically_damped(2000.0).unwrap(),
            control: ControlGains::new(1.0, 1.0, [0.08, 0.18]).unwrap(),
            active_control: true,
            dof_mask: DofMask::full(),
            mount: CameraPose::identity(),
            eta_init_range: 1.0,
            exact_init: false,
            meas_noise_std: 0.0,
            nu_init: Vec3::new(0.05, 0.05, 0.05),
            omega_init: Vec3::zeros(),
            line_override: None,
        }
    }

    /// Forward-looking camera on an omnidirectional ground base observing a
    /// near-vertical line, `σ²_des = [0.2, 0.2]`.
    pub fn planar_robot(seed: u64) -> Self {
        Self {
            line_model: LineModel::NearVertical,
            dof_mask: DofMask::planar(),
            mount: crate::control::forward_mount(Vec3::new(0.2, 0.0, 0.8)),
            control: ControlGains::new(1.0, 1.0, [0.2, 0.2]).unwrap(),
            ..Self::cube(seed)
        }
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LineError::InvalidParameter(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be > 0, got {}", self.duration));
        }
        if !(self.cube_side > 0.0 && self.cube_side.is_finite()) {
            return bad(format!("cube_side must be > 0, got {}", self.cube_side));
        }
        if !(self.eta_init_range >= 0.0 && self.eta_init_range.is_finite()) {
            return bad(format!("eta_init_range must be >= 0, got {}", self.eta_init_range));
        }
        if !(self.meas_noise_std >= 0.0 && self.meas_noise_std.is_finite()) {
            return bad(format!("meas_noise_std must be >= 0, got {}", self.meas_noise_std));
        }
        let twist = CameraTwist::new(self.nu_init, self.omega_init);
        if !twist.is_finite() {
            return bad("initial twist must be finite".into());
        }
        Ok(())
    }

    fn scenario_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn noise_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        rng
    }
}

fn draw_line<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> Result<PluckerLine> {
    match cfg.line_model {
        LineModel::Cube => {
            let half = 0.5 * cfg.cube_side;
            let p = Vec3::new(
                rng.random_range(-half..half),
                rng.random_range(-half..half),
                rng.random_range(CUBE_FRONT_OFFSET..CUBE_FRONT_OFFSET + cfg.cube_side),
            );
            let d: [f64; 3] = UnitSphere.sample(rng);
            line_from_point_direction(p, Vec3::from(d))
        }
        LineModel::NearVertical => {
            let p = Vec3::new(
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
                rng.random_range(1.5..3.5),
            );
            let tilt = 5f64.to_radians();
            let d = Vec3::new(
                rng.random_range(-tilt..tilt),
                -1.0,
                rng.random_range(-tilt..tilt),
            );
            let line = line_from_point_direction(p, d)?;
            // Orient so that h points along +x.
            Ok(if line.moment().x < 0.0 { line.flipped() } else { line })
        }
    }
}

/// Draws the world line (the world frame is the initial camera frame) and
/// the observer's initial estimate.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<(PluckerLine, ReducedLineState)> {
    let mut rng = cfg.scenario_rng();
    let (line, truth) = match cfg.line_override {
        Some(line) => (line, reduce(&line)?),
        None => {
            let mut found = None;
            for _ in 0..MAX_REJECTIONS {
                let Ok(line) = draw_line(cfg, &mut rng) else { continue };
                if let Ok(truth) = reduce(&line) {
                    found = Some((line, truth));
                    break;
                }
            }
            found.ok_or(LineError::ScenarioExhausted(MAX_REJECTIONS))?
        }
    };
    let est = if cfg.exact_init {
        truth
    } else {
        let r = cfg.eta_init_range;
        let (e1, e2) = if r > 0.0 {
            (rng.random_range(-r..=r), rng.random_range(-r..=r))
        } else {
            (0.0, 0.0)
        };
        ReducedLineState::new(truth.theta, truth.phi, e1, e2)
    };
    Ok((line, est))
}

/// Spherical angles of the true moment plus independent Gaussian noise.
pub fn measure<R: Rng>(line: &PluckerLine, noise_std: f64, rng: &mut R) -> Result<SphericalMoment> {
    let exact = moment_to_spherical(&line.moment())?;
    if noise_std == 0.0 {
        return Ok(exact);
    }
    let normal = Normal::new(0.0, noise_std)
        .map_err(|e| LineError::InvalidParameter(format!("noise std: {e}")))?;
    let limit = phi_limit() - 1e-12;
    let theta = exact.theta() + normal.sample(rng);
    let phi = (exact.phi() + normal.sample(rng)).clamp(-limit, limit);
    SphericalMoment::new(theta, phi)
}

/// `‖[d; l·h] − [d̂; l̂·ĥ]‖` after aligning the sign of the estimate.
pub fn plucker_error(truth: &PluckerLine, est: &PluckerLine) -> f64 {
    let est = if truth.direction().dot(&est.direction()) < 0.0 {
        est.flipped()
    } else {
        *est
    };
    (truth.to_vector() - est.to_vector()).norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub truth: ReducedLineState,
    pub estimate: ReducedLineState,
    pub innovation: Innovation,
    /// Camera velocity applied over `[t, t + dt)`.
    pub twist: CameraTwist,
    pub sigma_sq: [f64; 2],
    /// NaN while the estimate has no finite depth.
    pub plucker_error: f64,
    pub pose: CameraPose,
}

impl StepRecord {
    /// `truth − estimate`, azimuth wrapped.
    pub fn state_error(&self) -> nalgebra::Vector4<f64> {
        self.truth.error_to(&self.estimate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimFailure {
    pub time: f64,
    pub error: String,
    pub kind: FailureKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    PoleSingularity,
    DegenerateLine,
    Other,
}

impl SimFailure {
    fn new(time: f64, err: &LineError) -> Self {
        let kind = match err {
            LineError::PoleSingularity { .. } => FailureKind::PoleSingularity,
            LineError::DegenerateLine(_) => FailureKind::DegenerateLine,
            _ => FailureKind::Other,
        };
        Self {
            time,
            error: err.to_string(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub line_world: PluckerLine,
    pub records: Vec<StepRecord>,
    pub failure: Option<SimFailure>,
}

impl TrajectoryLog {
    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    /// The final estimate expressed in the world frame.
    pub fn estimated_world_line(&self) -> Option<PluckerLine> {
        let rec = self.last()?;
        let cam = unreduce(&rec.estimate).ok()?;
        rec.pose.line_to_world(&cam).ok()
    }

    /// Record closest to time `t`.
    pub fn at(&self, t: f64) -> Option<&StepRecord> {
        let k = (t / self.dt).round();
        if k < 0.0 {
            return None;
        }
        self.records.get(k as usize)
    }
}

/// Runs the closed loop for `cfg.duration`.
///
/// Per step: ground truth from the integrated pose, measurement, control
/// update, logging, observer step and pose step, wherein the observer and the
/// camera see the same twist. A singularity stops the run; the log up to
/// that point is returned with `failure` set. Configuration and scenario
/// generation errors are returned as `Err`.
pub fn simulate(cfg: &ScenarioConfig) -> Result<TrajectoryLog> {
    cfg.validate()?;
    let (line_world, est0) = generate_scenario(cfg)?;
    let mut noise = cfg.noise_rng();
    let steps = cfg.steps();
    let mut log = TrajectoryLog {
        dt: cfg.dt,
        line_world,
        records: Vec::with_capacity(steps + 1),
        failure: None,
    };

    let mut pose = CameraPose::identity();
    let mut obs = ObserverState::new(est0);
    let mut twist = apply_mask(
        &CameraTwist::new(cfg.nu_init, cfg.omega_init),
        &cfg.dof_mask,
        &cfg.mount,
    );

    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        let step = (|| -> Result<()> {
            let truth_line = transform_line(&line_world, &pose)?;
            let truth = reduce(&truth_line)?;
            let meas = measure(&truth_line, cfg.meas_noise_std, &mut noise)?;

            if cfg.active_control {
                let mut nu = twist.nu;
                if k == 0 {
                    if nu.dot(&meas.moment()).abs() < BOOTSTRAP_THRESHOLD {
                        nu += meas.moment() * BOOTSTRAP_SPEED;
                    }
                } else {
                    nu += linear_accel(&meas, &nu, &cfg.control) * cfg.dt;
                }
                let x_hat = ReducedLineState::from_parts(&meas, obs.est.eta1, obs.est.eta2);
                let omega = compensating_omega(&x_hat, &nu)?;
                twist = apply_mask(&CameraTwist::new(nu, omega), &cfg.dof_mask, &cfg.mount);
            }

            let (s1, s2) = eigenvalues(&interaction_matrix(&meas, &twist.nu));
            let err = unreduce(&obs.est)
                .map(|l| plucker_error(&truth_line, &l))
                .unwrap_or(f64::NAN);
            log.records.push(StepRecord {
                t,
                truth,
                estimate: obs.est,
                innovation: innovation(&meas, &obs),
                twist,
                sigma_sq: [s1, s2],
                plucker_error: err,
                pose,
            });

            if k < steps {
                obs = observer_step(&obs, &meas, &twist.apparent(), &cfg.observer, cfg.dt)?;
                pose = integrate_pose(&pose, &twist, cfg.dt);
            }
            Ok(())
        })();
        if let Err(e) = step {
            log.failure = Some(SimFailure::new(t, &e));
            break;
        }
    }
    Ok(log)
}

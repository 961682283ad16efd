//! Kinematic surrogate of the walled water tank: two-media vehicle motion,
//! surface crossing, gusting wind, horizontal range sensing and the
//! arrive/collide reward.

pub mod ou;
pub mod raycast;
pub mod reward;
pub mod scenario;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub use ou::{OuParams, OuProcess};
pub use reward::{compute_reward, RewardConfig, RewardSignal};

use raycast::{Circle, Rect};

pub const N_BEAMS: usize = 20;
pub const OBS_DIM: usize = N_BEAMS + 6;
pub const ACT_DIM: usize = 3;

pub const V_LIN_MAX: f64 = 0.25;
pub const V_Z_MAX: f64 = 0.25;
pub const D_YAW_MAX: f64 = 0.25;

/// Distance kept between the vehicle and every tank face.
pub const POSITION_MARGIN: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid world configuration: {0}")]
    InvalidWorld(String),
    #[error("{what} {pos:?} lies outside the tank")]
    OutOfBounds { what: &'static str, pos: [f64; 3] },
    #[error("start {0:?} is in collision (a range return is below the clearance)")]
    StartInCollision([f64; 3]),
    #[error("step called on a terminated evaluation episode")]
    EpisodeTerminated,
    #[error("step called before reset")]
    NotReset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Medium {
    Air,
    Water,
}

impl Medium {
    pub fn as_str(self) -> &'static str {
        match self {
            Medium::Air => "air",
            Medium::Water => "water",
        }
    }

    pub fn other(self) -> Medium {
        match self {
            Medium::Air => Medium::Water,
            Medium::Water => Medium::Air,
        }
    }
}

impl std::str::FromStr for Medium {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "air" => Ok(Medium::Air),
            "water" => Ok(Medium::Water),
            other => Err(format!("unknown medium `{other}`")),
        }
    }
}

/// The surface itself counts as air.
pub fn medium_of(z: f64, water_surface_z: f64) -> Medium {
    if z < water_surface_z {
        Medium::Water
    } else {
        Medium::Air
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a % (2.0 * PI);
    if w <= -PI {
        w += 2.0 * PI;
    } else if w > PI {
        w -= 2.0 * PI;
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub fov_deg: f64,
    pub spacing_deg: f64,
    pub max_range: f64,
    pub n_beams: usize,
}

impl SensorConfig {
    pub fn lidar() -> Self {
        SensorConfig {
            fov_deg: 270.0,
            spacing_deg: 13.5,
            max_range: 10.0,
            n_beams: N_BEAMS,
        }
    }

    pub fn sonar() -> Self {
        SensorConfig {
            fov_deg: 90.0,
            spacing_deg: 90.0 / 19.0,
            max_range: 20.0,
            n_beams: N_BEAMS,
        }
    }
}

/// First-order velocity response time constants (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub tau_forward: f64,
    pub tau_vertical: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Riser {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldConfig {
    pub tank_min: [f64; 3],
    pub tank_max: [f64; 3],
    pub water_surface_z: f64,
    pub risers: Vec<Riser>,
    pub dt: f64,
    pub air_dynamics: DynamicsConfig,
    pub water_dynamics: DynamicsConfig,
    /// Horizontal wind gusts, applied only in air.
    pub wind: Option<OuParams>,
    /// Horizontal current disturbance, applied only in water.
    pub current: Option<OuParams>,
    pub sensor_air: SensorConfig,
    pub sensor_water: SensorConfig,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            tank_min: [-5.0, -5.0, -1.0],
            tank_max: [5.0, 5.0, 5.0],
            water_surface_z: 0.0,
            risers: [(2.5, 0.0), (0.0, 2.5), (-2.5, 0.0), (0.0, -2.5)]
                .iter()
                .map(|&(cx, cy)| Riser { cx, cy, r: 0.25 })
                .collect(),
            dt: 0.1,
            air_dynamics: DynamicsConfig {
                tau_forward: 0.3,
                tau_vertical: 0.3,
            },
            water_dynamics: DynamicsConfig {
                tau_forward: 0.8,
                tau_vertical: 0.8,
            },
            wind: Some(OuParams {
                theta: 0.5,
                sigma: 0.05,
                mu: 0.0,
            }),
            current: None,
            sensor_air: SensorConfig::lidar(),
            sensor_water: SensorConfig::sonar(),
        }
    }
}

impl WorldConfig {
    pub fn without_risers(mut self) -> Self {
        self.risers.clear();
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidWorld(m));
        for i in 0..3 {
            if !(self.tank_min[i] < self.tank_max[i]) {
                return bad(format!("tank_min[{i}] must be below tank_max[{i}]"));
            }
        }
        if !(self.water_surface_z > self.tank_min[2] && self.water_surface_z < self.tank_max[2]) {
            return bad("water surface must lie strictly inside the tank height".into());
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive".into());
        }
        for (name, s) in [("air", &self.sensor_air), ("water", &self.sensor_water)] {
            if s.n_beams != N_BEAMS {
                return bad(format!("{name} sensor must have {N_BEAMS} beams"));
            }
            if (s.n_beams as f64 - 1.0) * s.spacing_deg > s.fov_deg + 1e-9 {
                return bad(format!("{name} sensor beams exceed the field of view"));
            }
            if !(s.max_range > 0.0) {
                return bad(format!("{name} sensor max_range must be positive"));
            }
        }
        for (name, d) in [("air", &self.air_dynamics), ("water", &self.water_dynamics)] {
            if !(d.tau_forward > 0.0 && d.tau_vertical > 0.0) {
                return bad(format!("{name} time constants must be positive"));
            }
        }
        for r in &self.risers {
            let inside = r.r > 0.0
                && r.cx - r.r >= self.tank_min[0]
                && r.cx + r.r <= self.tank_max[0]
                && r.cy - r.r >= self.tank_min[1]
                && r.cy + r.r <= self.tank_max[1];
            if !inside {
                return bad(format!("riser {r:?} is not inside the tank footprint"));
            }
        }
        Ok(())
    }

    pub fn medium_of(&self, z: f64) -> Medium {
        medium_of(z, self.water_surface_z)
    }

    pub fn sensor(&self, medium: Medium) -> &SensorConfig {
        match medium {
            Medium::Air => &self.sensor_air,
            Medium::Water => &self.sensor_water,
        }
    }

    pub fn dynamics(&self, medium: Medium) -> &DynamicsConfig {
        match medium {
            Medium::Air => &self.air_dynamics,
            Medium::Water => &self.water_dynamics,
        }
    }

    pub fn diagonal(&self) -> f64 {
        (0..3)
            .map(|i| (self.tank_max[i] - self.tank_min[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|i| p[i] >= self.tank_min[i] && p[i] <= self.tank_max[i])
    }

    pub fn footprint(&self) -> Rect<f64> {
        Rect {
            min_x: self.tank_min[0],
            min_y: self.tank_min[1],
            max_x: self.tank_max[0],
            max_y: self.tank_max[1],
        }
    }

    pub fn riser_circles(&self) -> Vec<Circle<f64>> {
        self.risers
            .iter()
            .map(|r| Circle {
                cx: r.cx,
                cy: r.cy,
                r: r.r,
            })
            .collect()
    }

    /// Vertical band a regenerated goal may occupy in `medium`.
    pub fn goal_band(&self, medium: Medium) -> (f64, f64) {
        match medium {
            Medium::Water => (self.tank_min[2] + 0.1, self.water_surface_z - 0.2),
            Medium::Air => (self.water_surface_z + 0.5, self.tank_max[2] - 0.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub position: [f64; 3],
    pub yaw: f64,
    pub v_forward: f64,
    pub v_vertical: f64,
}

impl VehicleState {
    pub fn at_rest(position: [f64; 3]) -> Self {
        VehicleState {
            position,
            yaw: 0.0,
            v_forward: 0.0,
            v_vertical: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Goal {
    pub position: [f64; 3],
}

/// Physical command before normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionCommand {
    pub v_lin: f64,
    pub v_z: f64,
    pub d_yaw: f64,
}

impl ActionCommand {
    pub const ZERO: ActionCommand = ActionCommand {
        v_lin: 0.0,
        v_z: 0.0,
        d_yaw: 0.0,
    };

    pub fn clamped(self) -> Self {
        // NaN maps to zero so a broken policy cannot poison the state.
        let cl = |x: f64, lo: f64, hi: f64| if x.is_nan() { 0.0 } else { x.clamp(lo, hi) };
        ActionCommand {
            v_lin: cl(self.v_lin, 0.0, V_LIN_MAX),
            v_z: cl(self.v_z, -V_Z_MAX, V_Z_MAX),
            d_yaw: cl(self.d_yaw, -D_YAW_MAX, D_YAW_MAX),
        }
    }

    /// Maps to [-1, 1]^3.
    pub fn normalize(&self) -> [f64; 3] {
        [
            2.0 * self.v_lin / V_LIN_MAX - 1.0,
            self.v_z / V_Z_MAX,
            self.d_yaw / D_YAW_MAX,
        ]
    }

    /// Inverse of [`ActionCommand::normalize`]; inputs outside [-1, 1] are clamped first.
    pub fn denormalize(a: [f64; 3]) -> Self {
        let a = a.map(|x| if x.is_nan() { 0.0 } else { x.clamp(-1.0, 1.0) });
        ActionCommand {
            v_lin: (a[0] + 1.0) * 0.5 * V_LIN_MAX,
            v_z: a[1] * V_Z_MAX,
            d_yaw: a[2] * D_YAW_MAX,
        }
    }
}

/// The 26-value network input plus the sensing context it was produced in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub ranges: [f64; N_BEAMS],
    pub prev_action: [f64; ACT_DIM],
    pub goal_dist: f64,
    pub goal_heading: f64,
    pub goal_elevation: f64,
    /// Medium the ranges were sensed in.
    pub medium: Medium,
    /// Meters per unit of normalized range.
    pub range_scale: f64,
}

impl Observation {
    pub fn to_vec(&self) -> [f64; OBS_DIM] {
        let mut v = [0.0; OBS_DIM];
        v[..N_BEAMS].copy_from_slice(&self.ranges);
        v[N_BEAMS..N_BEAMS + ACT_DIM].copy_from_slice(&self.prev_action);
        v[N_BEAMS + 3] = self.goal_dist;
        v[N_BEAMS + 4] = self.goal_heading;
        v[N_BEAMS + 5] = self.goal_elevation;
        v
    }

    pub fn ranges_m(&self) -> [f64; N_BEAMS] {
        self.ranges.map(|r| r * self.range_scale)
    }
}

/// Normalized distance, heading error and elevation angle to the goal.
pub fn goal_features(state: &VehicleState, goal: &Goal, world: &WorldConfig) -> (f64, f64, f64) {
    let dx = goal.position[0] - state.position[0];
    let dy = goal.position[1] - state.position[1];
    let dz = goal.position[2] - state.position[2];
    let horiz = (dx * dx + dy * dy).sqrt();
    let dist = (horiz * horiz + dz * dz).sqrt();
    let heading = wrap_angle(dy.atan2(dx) - state.yaw);
    let elevation = dz.atan2(horiz);
    (
        (dist / world.diagonal()).min(1.0),
        heading / PI,
        elevation / (PI / 2.0),
    )
}

/// Raw ranges (m) of the 20-beam fan for the medium at the vehicle's depth.
pub fn cast_rays(state: &VehicleState, world: &WorldConfig) -> [f64; N_BEAMS] {
    let sensor = world.sensor(world.medium_of(state.position[2]));
    let mut out = [0.0; N_BEAMS];
    raycast::cast_fan(
        state.position[0],
        state.position[1],
        state.yaw,
        sensor.spacing_deg.to_radians(),
        &world.footprint(),
        &world.riser_circles(),
        sensor.max_range,
        &mut out,
    );
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// Medium after the step; sensing already uses it.
    pub medium: Medium,
    pub d_goal: f64,
    pub min_range: f64,
    pub sim_time_air: f64,
    pub sim_time_water: f64,
    pub steps_air: u32,
    pub steps_water: u32,
    pub step_index: u32,
    /// Floor or ceiling was touched.
    pub surface_contact: bool,
    /// A fresh goal was drawn after an arrival (training only).
    pub goal_regenerated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub terminated: bool,
    pub success: bool,
    pub info: StepInfo,
}

/// Where regenerated goals may be drawn during training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalSampler {
    /// Upper bound on the distance from the vehicle; `None` is unbounded.
    pub max_distance: Option<f64>,
    pub min_distance: f64,
    /// Probability of placing the goal in the medium the vehicle is not in.
    pub cross_medium_prob: f64,
}

impl Default for GoalSampler {
    fn default() -> Self {
        GoalSampler {
            max_distance: None,
            min_distance: 1.0,
            cross_medium_prob: 0.5,
        }
    }
}

impl GoalSampler {
    /// Draws a goal at least 1 m from walls and riser axes, inside the chosen
    /// medium's band. When the distance window cannot be met the closest
    /// admissible candidate seen is returned.
    pub fn sample<R: Rng + ?Sized>(&self, world: &WorldConfig, from: [f64; 3], rng: &mut R) -> Goal {
        let here = world.medium_of(from[2]);
        let medium = if rng.random::<f64>() < self.cross_medium_prob {
            here.other()
        } else {
            here
        };
        let (zlo, zhi) = world.goal_band(medium);
        let mut best: Option<([f64; 3], f64)> = None;
        for _ in 0..2000 {
            let p = [
                rng.random_range(world.tank_min[0] + 1.0..world.tank_max[0] - 1.0),
                rng.random_range(world.tank_min[1] + 1.0..world.tank_max[1] - 1.0),
                rng.random_range(zlo..zhi),
            ];
            if world
                .risers
                .iter()
                .any(|r| ((p[0] - r.cx).powi(2) + (p[1] - r.cy).powi(2)).sqrt() < 1.0)
            {
                continue;
            }
            let d = dist3(p, from);
            let within = d >= self.min_distance && self.max_distance.is_none_or(|m| d <= m);
            if within {
                return Goal { position: p };
            }
            let miss = if d < self.min_distance {
                self.min_distance - d
            } else {
                d - self.max_distance.unwrap_or(f64::INFINITY)
            };
            if best.is_none_or(|(_, b)| miss < b) {
                best = Some((p, miss));
            }
        }
        Goal {
            position: best.map(|(p, _)| p).unwrap_or([
                0.5 * (world.tank_min[0] + world.tank_max[0]),
                0.5 * (world.tank_min[1] + world.tank_max[1]),
                0.5 * (zlo + zhi),
            ]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvMode {
    /// Arrival terminates the episode.
    Evaluation,
    /// Arrival draws a new goal and the episode continues.
    Training(GoalSampler),
}

pub fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// One simulation instance. Owns its RNG stream; not shared between threads.
#[derive(Debug, Clone)]
pub struct Env {
    world: WorldConfig,
    reward: RewardConfig,
    mode: EnvMode,
    state: VehicleState,
    goal: Goal,
    wind: Option<OuProcess<f64>>,
    current: Option<OuProcess<f64>>,
    rng: ChaCha8Rng,
    step_index: u32,
    steps_air: u32,
    steps_water: u32,
    prev_action: [f64; ACT_DIM],
    ranges: [f64; N_BEAMS],
    terminated: bool,
    ready: bool,
}

impl Env {
    pub fn new(world: WorldConfig, reward: RewardConfig, mode: EnvMode) -> Result<Self, SimError> {
        world.validate()?;
        reward.validate().map_err(SimError::InvalidWorld)?;
        let wind = world.wind.map(|p| OuProcess::new(2, p, world.dt));
        let current = world.current.map(|p| OuProcess::new(2, p, world.dt));
        Ok(Env {
            world,
            reward,
            mode,
            state: VehicleState::at_rest([0.0; 3]),
            goal: Goal { position: [0.0; 3] },
            wind,
            current,
            rng: ChaCha8Rng::seed_from_u64(0),
            step_index: 0,
            steps_air: 0,
            steps_water: 0,
            prev_action: ActionCommand::ZERO.normalize(),
            ranges: [0.0; N_BEAMS],
            terminated: false,
            ready: false,
        })
    }

    pub fn world(&self) -> &WorldConfig {
        &self.world
    }

    pub fn reward_config(&self) -> &RewardConfig {
        &self.reward
    }

    pub fn state(&self) -> &VehicleState {
        &self.state
    }

    pub fn goal(&self) -> &Goal {
        &self.goal
    }

    pub fn mode(&self) -> EnvMode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: EnvMode) {
        self.mode = mode;
    }

    pub fn step_index(&self) -> u32 {
        self.step_index
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn reset(&mut self, start: [f64; 3], goal: Goal, seed: u64) -> Result<Observation, SimError> {
        if !self.world.contains(start) {
            return Err(SimError::OutOfBounds {
                what: "start",
                pos: start,
            });
        }
        if !self.world.contains(goal.position) {
            return Err(SimError::OutOfBounds {
                what: "goal",
                pos: goal.position,
            });
        }
        let state = VehicleState::at_rest(start);
        let ranges = cast_rays(&state, &self.world);
        if ranges.iter().any(|&r| r <= self.reward.c_o) {
            return Err(SimError::StartInCollision(start));
        }
        self.state = state;
        self.goal = goal;
        self.ranges = ranges;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        if let Some(w) = &mut self.wind {
            w.reset();
        }
        if let Some(c) = &mut self.current {
            c.reset();
        }
        self.step_index = 0;
        self.steps_air = 0;
        self.steps_water = 0;
        self.prev_action = ActionCommand::ZERO.normalize();
        self.terminated = false;
        self.ready = true;
        Ok(self.observe())
    }

    pub fn observe(&self) -> Observation {
        let medium = self.world.medium_of(self.state.position[2]);
        let scale = self.world.sensor(medium).max_range;
        let (goal_dist, goal_heading, goal_elevation) = goal_features(&self.state, &self.goal, &self.world);
        Observation {
            ranges: self.ranges.map(|r| r / scale),
            prev_action: self.prev_action,
            goal_dist,
            goal_heading,
            goal_elevation,
            medium,
            range_scale: scale,
        }
    }

    pub fn sim_time(&self) -> (f64, f64) {
        (
            self.steps_air as f64 * self.world.dt,
            self.steps_water as f64 * self.world.dt,
        )
    }

    pub fn step(&mut self, action: ActionCommand) -> Result<StepOutcome, SimError> {
        if !self.ready {
            return Err(SimError::NotReset);
        }
        if self.terminated {
            return Err(SimError::EpisodeTerminated);
        }
        let cmd = action.clamped();
        let dt = self.world.dt;
        let start_medium = self.world.medium_of(self.state.position[2]);
        let dynamics = *self.world.dynamics(start_medium);

        let s = &mut self.state;
        s.yaw = wrap_angle(s.yaw + cmd.d_yaw);
        s.v_forward += (dt / dynamics.tau_forward).min(1.0) * (cmd.v_lin - s.v_forward);
        s.v_vertical += (dt / dynamics.tau_vertical).min(1.0) * (cmd.v_z - s.v_vertical);

        // Both processes advance every step so the RNG stream does not depend on the path.
        let rng = &mut self.rng;
        let mut advance = |p: &mut OuProcess<f64>| {
            p.step(rng);
            [p.state[0], p.state[1]]
        };
        let wind = self.wind.as_mut().map(&mut advance);
        let current = self.current.as_mut().map(&mut advance);
        let disturbance = match start_medium {
            Medium::Air => wind,
            Medium::Water => current,
        }
        .unwrap_or([0.0, 0.0]);

        let (sin_y, cos_y) = s.yaw.sin_cos();
        let raw = [
            s.position[0] + dt * (s.v_forward * cos_y + disturbance[0]),
            s.position[1] + dt * (s.v_forward * sin_y + disturbance[1]),
            s.position[2] + dt * s.v_vertical,
        ];
        let lo = self.world.tank_min.map(|v| v + POSITION_MARGIN);
        let hi = self.world.tank_max.map(|v| v - POSITION_MARGIN);
        let dz = raw[2] - s.position[2];
        // Being lifted off a floor start by the clamp is not a contact.
        let surface_contact = (raw[2] < lo[2] && dz < 0.0) || (raw[2] > hi[2] && dz > 0.0);
        for i in 0..3 {
            s.position[i] = raw[i].clamp(lo[i], hi[i]);
        }
        if surface_contact {
            s.v_vertical = 0.0;
        }

        self.ranges = cast_rays(&self.state, &self.world);
        self.step_index += 1;
        match start_medium {
            Medium::Air => self.steps_air += 1,
            Medium::Water => self.steps_water += 1,
        }
        self.prev_action = cmd.normalize();

        let d_goal = dist3(self.state.position, self.goal.position);
        let min_range = self.ranges.iter().copied().fold(f64::INFINITY, f64::min);
        let effective_clearance = if surface_contact { 0.0 } else { min_range };
        let signal = compute_reward(d_goal, effective_clearance, self.step_index, &self.reward);

        let mut terminated = signal.terminated;
        let mut goal_regenerated = false;
        if let EnvMode::Training(sampler) = self.mode {
            if signal.success {
                self.goal = sampler.sample(&self.world, self.state.position, &mut self.rng);
                goal_regenerated = true;
                terminated = self.step_index >= self.reward.step_limit;
            }
        }
        self.terminated = terminated;

        let (sim_time_air, sim_time_water) = self.sim_time();
        Ok(StepOutcome {
            observation: self.observe(),
            reward: signal.reward,
            terminated,
            success: signal.success,
            info: StepInfo {
                medium: self.world.medium_of(self.state.position[2]),
                d_goal,
                min_range,
                sim_time_air,
                sim_time_water,
                steps_air: self.steps_air,
                steps_water: self.steps_water,
                step_index: self.step_index,
                surface_contact,
                goal_regenerated,
            },
        })
    }
}

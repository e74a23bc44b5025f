//! Scenario schema: every static parameter of an engagement, plus loading,
//! validation, and writing of scenario files.
//!
//! Scenario files are UTF-8 TOML. All lengths are meters, times seconds,
//! angles radians, and headings are measured counterclockwise from the
//! x-axis. A commented canonical example ships in `docs/baseline.toml`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vec2::Vec2;

/// Full kinematic state of one agent (threat or interceptor).
///
/// Headings are stored unwrapped in R; angle differences are wrapped to
/// (-pi, pi] only inside geometric formulas, so the optimizer never sees a
/// discontinuity. Energy is the remaining maneuvering budget and never
/// increases over time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: Vec2,
    pub speed: f64,
    pub heading: f64,
    pub energy: f64,
}

/// Initial kinematic state as written in a scenario file. Energy comes from
/// the owning agent's `initial_energy` parameter, not from the state block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub position: Vec2,
    pub speed: f64,
    pub heading: f64,
}

impl InitialState {
    pub fn with_energy(&self, energy: f64) -> AgentState {
        AgentState {
            position: self.position,
            speed: self.speed,
            heading: self.heading,
            energy,
        }
    }
}

/// Inbound-threat parameters: motion limits, energy, mission weights, and
/// the threat's planning grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItParams {
    pub v_min: f64,
    pub v_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    /// Energy penalty of turning relative to forward acceleration (lambda).
    pub turn_penalty: f64,
    pub initial_energy: f64,
    /// Stage weight on maneuvering energy (m1).
    pub weight_energy: f64,
    /// Stage weight on risk-field exposure (m2).
    pub weight_risk: f64,
    /// Terminal weight on squared distance to the HVA (m3).
    pub weight_terminal: f64,
    /// Quadratic slack penalty weight (nu).
    pub slack_weight: f64,
    /// Planner decision/prediction step in seconds.
    pub step: f64,
    /// Planner horizon length in steps.
    pub horizon: usize,
    /// Nominal attack speed assumed by both sides when anticipating the
    /// threat's committed dive.
    pub v_atk: f64,
    pub initial: InitialState,
}

/// One interceptor's placement: patrol assignment and initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EiUnit {
    pub patrol_center: Vec2,
    pub initial: InitialState,
}

/// Interceptor-team parameters. Limits, weights, and the planning grid are
/// shared by every interceptor (the command node synchronizes them); each
/// unit carries only its patrol center and initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EiParams {
    pub v_min: f64,
    pub v_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    /// Energy penalty of turning relative to forward acceleration (kappa).
    pub turn_penalty: f64,
    pub initial_energy: f64,
    /// Stage weight on maneuvering energy (mu1).
    pub weight_energy: f64,
    /// Stage weight on barrier (patrol/tether) cost (mu2).
    pub weight_barrier: f64,
    /// Stage weight on squared separation from the anticipated threat (mu3).
    pub weight_proximity: f64,
    /// Quadratic slack penalty weight (eta).
    pub slack_weight: f64,
    /// Command-node decision/prediction step in seconds.
    pub step: f64,
    /// Command-node horizon length in steps.
    pub horizon: usize,
    /// Straight-line intercept speed assumed for committed interceptors.
    pub v_itc: f64,
    #[serde(default)]
    pub units: Vec<EiUnit>,
}

/// Risk-field and barrier-cost parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    /// Static-defense lethality scale.
    pub w_sd: f64,
    /// Spatial spread of the static-defense field; only sigma^2 enters.
    pub sigma_sd: f64,
    /// Interceptor-threat intensity scale.
    pub w_ei: f64,
    /// Spatial softness of the interceptor threat field.
    pub sigma_ei: f64,
    /// Patrol-adherence weight and radius.
    pub w_pac: f64,
    pub r_pac: f64,
    /// HVA-tether weight and radius.
    pub w_htc: f64,
    pub r_htc: f64,
    /// Attack-vs-evasion blend in the anticipated threat heading, in [0, 1].
    pub psi: f64,
}

fn default_max_time() -> f64 {
    60.0
}

/// Zone radii and the master integration grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngagementParams {
    /// Dive-zone radius around the HVA; threat entry ends the engagement.
    pub r_dz: f64,
    /// Intercept-zone radius around each interceptor.
    pub r_iz: f64,
    /// Proximity-zone radius around the threat defining the candidate set.
    pub r_pz: f64,
    /// Fine plant-integration step; must divide both planner steps.
    pub master_step: f64,
    /// Simulation cutoff in seconds (defaultable).
    #[serde(default = "default_max_time")]
    pub max_time: f64,
    /// When true, a threat that runs out of energy keeps coasting
    /// ballistically instead of ending the engagement immediately.
    #[serde(default)]
    pub ballistic_depletion: bool,
}

/// All static parameters of one engagement. Immutable after load; safe to
/// share read-only across concurrent planner evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Reserved for future stochastic campaigns; unused by the simulator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub hva_position: Vec2,
    #[serde(default)]
    pub static_defenses: Vec<Vec2>,
    pub it: ItParams,
    pub ei: EiParams,
    pub fields: FieldParams,
    pub engagement: EngagementParams,
}

impl ScenarioConfig {
    pub fn ei_count(&self) -> usize {
        self.ei.units.len()
    }

    /// Initial agent states with energies injected from the params.
    pub fn initial_it_state(&self) -> AgentState {
        self.it.initial.with_energy(self.it.initial_energy)
    }

    pub fn initial_ei_states(&self) -> Vec<AgentState> {
        self.ei
            .units
            .iter()
            .map(|u| u.initial.with_energy(self.ei.initial_energy))
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("scenario serialize error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid scenario:\n{0}")]
    Invalid(ValidationReport),
}

/// One invariant violation: a stable machine-readable code, the offending
/// field path, and a human-readable message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: &'static str,
    pub field: String,
    pub message: String,
}

/// Validation output; empty means the config satisfies every invariant.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, code: &'static str, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            field: field.into(),
            message: message.into(),
        });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for v in &self.violations {
            writeln!(f, "{}: {} ({})", v.code, v.message, v.field)?;
        }
        Ok(())
    }
}

/// Relative tolerance for the rational grid-alignment check. Planner steps
/// written in decimal (0.1, 0.05, ...) are not exact binary multiples of the
/// master step, so exact divisibility is checked up to this slack.
pub const GRID_ALIGN_TOL: f64 = 1e-9;

/// Number of fine steps per planner step, if the planner step is an exact
/// (rational) multiple of the master step.
pub fn grid_multiple(planner_step: f64, master_step: f64) -> Option<u64> {
    if !(planner_step > 0.0) || !(master_step > 0.0) {
        return None;
    }
    let ratio = planner_step / master_step;
    let rounded = ratio.round();
    if rounded >= 1.0 && (ratio - rounded).abs() <= GRID_ALIGN_TOL * ratio.max(1.0) {
        Some(rounded as u64)
    } else {
        None
    }
}

/// Parse a scenario document and validate it. Invalid configs are rejected
/// with the full violation list.
pub fn load_scenario_str(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let cfg: ScenarioConfig = toml::from_str(text)?;
    let report = validate(&cfg);
    if report.is_valid() {
        Ok(cfg)
    } else {
        Err(ScenarioError::Invalid(report))
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    load_scenario_str(&text)
}

/// Serialize a config back to the scenario document format.
pub fn write_scenario(cfg: &ScenarioConfig) -> Result<String, ScenarioError> {
    Ok(toml::to_string_pretty(cfg)?)
}

fn check_finite(report: &mut ValidationReport, field: &str, value: f64) -> bool {
    if value.is_finite() {
        true
    } else {
        report.push("not_finite", field, "value must be finite");
        false
    }
}

fn check_positive(report: &mut ValidationReport, code: &'static str, field: &str, value: f64) {
    if check_finite(report, field, value) && !(value > 0.0) {
        report.push(code, field, format!("must be > 0, got {value}"));
    }
}

struct LimitSet<'a> {
    prefix: &'a str,
    v_min: f64,
    v_max: f64,
    a_min: f64,
    a_max: f64,
    omega_min: f64,
    omega_max: f64,
    turn_penalty: f64,
    initial_energy: f64,
    slack_weight: f64,
    step: f64,
    horizon: usize,
}

fn validate_limits(report: &mut ValidationReport, l: &LimitSet) {
    let p = l.prefix;
    for (name, value) in [
        ("v_min", l.v_min),
        ("v_max", l.v_max),
        ("a_min", l.a_min),
        ("a_max", l.a_max),
        ("omega_min", l.omega_min),
        ("omega_max", l.omega_max),
    ] {
        check_finite(report, &format!("{p}.{name}"), value);
    }
    if !(l.v_min > 0.0) {
        report.push(
            "forward_motion",
            format!("{p}.v_min"),
            "forward motion violated: v_min must be > 0",
        );
    }
    if l.v_min > l.v_max {
        report.push(
            "speed_bounds_order",
            format!("{p}.v_min"),
            "v_min must not exceed v_max",
        );
    }
    if l.a_min > l.a_max {
        report.push(
            "accel_bounds_order",
            format!("{p}.a_min"),
            "a_min must not exceed a_max",
        );
    }
    if l.omega_min > l.omega_max {
        report.push(
            "turn_bounds_order",
            format!("{p}.omega_min"),
            "omega_min must not exceed omega_max",
        );
    }
    check_positive(report, "nonpositive_weight", &format!("{p}.turn_penalty"), l.turn_penalty);
    check_positive(report, "nonpositive_weight", &format!("{p}.slack_weight"), l.slack_weight);
    if check_finite(report, &format!("{p}.initial_energy"), l.initial_energy)
        && l.initial_energy < 0.0
    {
        report.push(
            "negative_energy",
            format!("{p}.initial_energy"),
            "initial energy must be >= 0",
        );
    }
    check_positive(report, "nonpositive_step", &format!("{p}.step"), l.step);
    if l.horizon == 0 {
        report.push(
            "nonpositive_horizon",
            format!("{p}.horizon"),
            "horizon must be >= 1 step",
        );
    }
}

fn validate_initial_speed(
    report: &mut ValidationReport,
    field: &str,
    initial: &InitialState,
    v_min: f64,
    v_max: f64,
) {
    if !initial.position.is_finite() || !initial.speed.is_finite() || !initial.heading.is_finite()
    {
        report.push("not_finite", field, "initial state must be finite");
        return;
    }
    if initial.speed < v_min || initial.speed > v_max {
        report.push(
            "speed_out_of_range",
            format!("{field}.speed"),
            format!(
                "initial speed {} outside [{}, {}]",
                initial.speed, v_min, v_max
            ),
        );
    }
}

/// Check every invariant of every parameter block. Violations are data, not
/// errors: callers decide whether a non-empty report is fatal.
pub fn validate(cfg: &ScenarioConfig) -> ValidationReport {
    let mut report = ValidationReport::default();

    validate_limits(
        &mut report,
        &LimitSet {
            prefix: "it",
            v_min: cfg.it.v_min,
            v_max: cfg.it.v_max,
            a_min: cfg.it.a_min,
            a_max: cfg.it.a_max,
            omega_min: cfg.it.omega_min,
            omega_max: cfg.it.omega_max,
            turn_penalty: cfg.it.turn_penalty,
            initial_energy: cfg.it.initial_energy,
            slack_weight: cfg.it.slack_weight,
            step: cfg.it.step,
            horizon: cfg.it.horizon,
        },
    );
    check_positive(&mut report, "nonpositive_weight", "it.weight_energy", cfg.it.weight_energy);
    check_positive(&mut report, "nonpositive_weight", "it.weight_risk", cfg.it.weight_risk);
    check_positive(
        &mut report,
        "nonpositive_weight",
        "it.weight_terminal",
        cfg.it.weight_terminal,
    );
    check_positive(&mut report, "nonpositive_speed", "it.v_atk", cfg.it.v_atk);
    validate_initial_speed(&mut report, "it.initial", &cfg.it.initial, cfg.it.v_min, cfg.it.v_max);

    validate_limits(
        &mut report,
        &LimitSet {
            prefix: "ei",
            v_min: cfg.ei.v_min,
            v_max: cfg.ei.v_max,
            a_min: cfg.ei.a_min,
            a_max: cfg.ei.a_max,
            omega_min: cfg.ei.omega_min,
            omega_max: cfg.ei.omega_max,
            turn_penalty: cfg.ei.turn_penalty,
            initial_energy: cfg.ei.initial_energy,
            slack_weight: cfg.ei.slack_weight,
            step: cfg.ei.step,
            horizon: cfg.ei.horizon,
        },
    );
    check_positive(&mut report, "nonpositive_weight", "ei.weight_energy", cfg.ei.weight_energy);
    check_positive(&mut report, "nonpositive_weight", "ei.weight_barrier", cfg.ei.weight_barrier);
    check_positive(
        &mut report,
        "nonpositive_weight",
        "ei.weight_proximity",
        cfg.ei.weight_proximity,
    );
    check_positive(&mut report, "nonpositive_speed", "ei.v_itc", cfg.ei.v_itc);
    for (i, unit) in cfg.ei.units.iter().enumerate() {
        let field = format!("ei.units[{i}].initial");
        validate_initial_speed(&mut report, &field, &unit.initial, cfg.ei.v_min, cfg.ei.v_max);
        if !unit.patrol_center.is_finite() {
            report.push(
                "not_finite",
                format!("ei.units[{i}].patrol_center"),
                "patrol center must be finite",
            );
        }
    }

    let f = &cfg.fields;
    check_positive(&mut report, "nonpositive_weight", "fields.w_sd", f.w_sd);
    check_positive(&mut report, "nonpositive_weight", "fields.w_ei", f.w_ei);
    check_positive(&mut report, "nonpositive_weight", "fields.w_pac", f.w_pac);
    check_positive(&mut report, "nonpositive_weight", "fields.w_htc", f.w_htc);
    check_positive(&mut report, "nonpositive_radius", "fields.r_pac", f.r_pac);
    check_positive(&mut report, "nonpositive_radius", "fields.r_htc", f.r_htc);
    if check_finite(&mut report, "fields.sigma_sd", f.sigma_sd) && f.sigma_sd == 0.0 {
        report.push("zero_sigma", "fields.sigma_sd", "sigma_sd must be nonzero");
    }
    if check_finite(&mut report, "fields.sigma_ei", f.sigma_ei) && f.sigma_ei == 0.0 {
        report.push("zero_sigma", "fields.sigma_ei", "sigma_ei must be nonzero");
    }
    if check_finite(&mut report, "fields.psi", f.psi) && !(0.0..=1.0).contains(&f.psi) {
        report.push("psi_range", "fields.psi", format!("psi must lie in [0, 1], got {}", f.psi));
    }

    let e = &cfg.engagement;
    check_positive(&mut report, "nonpositive_radius", "engagement.r_dz", e.r_dz);
    check_positive(&mut report, "nonpositive_radius", "engagement.r_iz", e.r_iz);
    check_positive(&mut report, "nonpositive_radius", "engagement.r_pz", e.r_pz);
    check_positive(&mut report, "nonpositive_step", "engagement.master_step", e.master_step);
    check_positive(&mut report, "nonpositive_time", "engagement.max_time", e.max_time);
    if e.r_iz > 0.0 && e.r_pz > 0.0 && e.r_iz >= e.r_pz {
        report.push(
            "iz_exceeds_pz",
            "engagement.r_iz",
            "intercept-zone radius must be smaller than the proximity-zone radius",
        );
    }
    if e.master_step > 0.0 {
        for (field, step) in [("it.step", cfg.it.step), ("ei.step", cfg.ei.step)] {
            if step > 0.0 {
                if e.master_step > step {
                    report.push(
                        "grid_alignment",
                        "engagement.master_step",
                        format!("master step exceeds planner step {field}"),
                    );
                } else if grid_multiple(step, e.master_step).is_none() {
                    report.push(
                        "grid_alignment",
                        "engagement.master_step",
                        format!("master step does not divide planner step {field}"),
                    );
                }
            }
        }
    }
    if !cfg.hva_position.is_finite() {
        report.push("not_finite", "hva_position", "HVA position must be finite");
    }
    for (i, sd) in cfg.static_defenses.iter().enumerate() {
        if !sd.is_finite() {
            report.push(
                "not_finite",
                format!("static_defenses[{i}]"),
                "defense position must be finite",
            );
        }
    }

    report
}

//! The threat's receding-horizon planner: anticipate proximal interceptors
//! as committed straight-line intercepts, then minimize maneuvering energy
//! plus risk-field exposure plus terminal distance to the HVA.

use thiserror::Error;

use crate::dynamics::{Bounds, Control, ControlBounds};
use crate::fields::risk_density;
use crate::intercept::{
    anticipate_line, los_angle, solve_intercept, AnticipatedTrack, GeometryError,
    InterceptFeasibility,
};
use crate::ocp::{solve, EnergyModel, OcpError, OcpProblem, OcpSolution};
use crate::scenario::{AgentState, ScenarioConfig};
use crate::vec2::Vec2;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Ocp(#[from] OcpError),
}

/// Interceptors the threat treats as incoming: within the proximity zone
/// and with a kinematically feasible intercept against the threat's nominal
/// attack line. Each survivor yields a straight anticipated track at the
/// intercept speed along its unique intercept heading, sampled on the
/// threat's prediction grid. Infeasible interceptors are pruned and
/// contribute no risk.
pub fn it_candidate_eis(
    p_it: Vec2,
    theta_atk: f64,
    v_atk: f64,
    ei_states: &[AgentState],
    r_pz: f64,
    v_itc: f64,
    ts: f64,
    horizon: usize,
) -> Vec<AnticipatedTrack> {
    let mut tracks = Vec::new();
    for ei in ei_states {
        if p_it.distance(ei.position) > r_pz {
            continue;
        }
        match solve_intercept(p_it, ei.position, theta_atk, v_atk, v_itc) {
            Ok(InterceptFeasibility::Feasible(sol)) => {
                tracks.push(anticipate_line(ei.position, sol.heading, v_itc, ts, horizon));
            }
            Ok(InterceptFeasibility::Infeasible(_)) | Err(_) => {}
        }
    }
    tracks
}

/// Build and solve the threat's horizon problem from a world snapshot.
///
/// Stage cost: `m1 (a^2 + lambda w^2) + m2 rho`, with the risk density
/// evaluated at the predicted threat position against the static defenses
/// and the anticipated interceptor track points at the same prediction
/// index. Terminal cost: `m3 ||p - p_hva||^2`. The first control of the
/// solution is committed over the next threat decision interval.
pub fn plan_it(
    it: &AgentState,
    ei_states: &[AgentState],
    cfg: &ScenarioConfig,
    warm_start: Option<&[Control]>,
) -> Result<OcpSolution, PlanError> {
    let params = &cfg.it;
    let theta_atk = los_angle(it.position, cfg.hva_position)?;
    let tracks = it_candidate_eis(
        it.position,
        theta_atk,
        params.v_atk,
        ei_states,
        cfg.engagement.r_pz,
        cfg.ei.v_itc,
        params.step,
        params.horizon,
    );
    // time-indexed threat points: entry i holds every track's position at
    // prediction step i
    let threat_points: Vec<Vec<Vec2>> = (0..=params.horizon)
        .map(|i| tracks.iter().map(|t| t.positions[i]).collect())
        .collect();

    let stage_cost = |i: usize, s: &AgentState, u: &Control| {
        let effort = u.accel * u.accel + params.turn_penalty * u.turn_rate * u.turn_rate;
        let risk = risk_density(s.position, &cfg.static_defenses, &threat_points[i], &cfg.fields);
        params.weight_energy * effort + params.weight_risk * risk.total
    };
    let terminal_cost =
        |s: &AgentState| params.weight_terminal * (s.position - cfg.hva_position).norm_squared();

    let problem = OcpProblem {
        initial: *it,
        horizon: params.horizon,
        step: params.step,
        control_bounds: ControlBounds {
            accel: Bounds::new(params.a_min, params.a_max),
            turn_rate: Bounds::new(params.omega_min, params.omega_max),
        },
        speed_bounds: Bounds::new(params.v_min, params.v_max),
        stage_cost: &stage_cost,
        terminal_cost: &terminal_cost,
        slack_weight: params.slack_weight,
        hard_bounds: false,
        terminal_ball: None,
        energy: EnergyModel {
            turn_penalty: params.turn_penalty,
            require_terminal_nonneg: true,
        },
    };
    Ok(solve(&problem, warm_start)?)
}

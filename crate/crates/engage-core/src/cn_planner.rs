//! Command-node cycle: candidate-set construction, per-interceptor terminal
//! feasibility solves, pursuit-proximity solves, and command dispatch.
//!
//! Every decision step the CN anticipates the threat as a straight
//! constant-speed track, attempts a slack-free terminal-intercept problem
//! for every interceptor inside the proximity zone, commits the feasible
//! ones, and tasks the rest with pursuit. The joint pursuit cost carries no
//! cross terms, so it is solved as independent per-interceptor problems
//! whose summed objectives equal the joint optimum.

use crate::dynamics::{Bounds, Control, ControlBounds};
use crate::fields::barrier_cost;
use crate::intercept::{
    anticipate_line, los_angle, terminal_heading, AnticipatedTrack, GeometryError,
};
use crate::ocp::{solve, EnergyModel, OcpProblem, OcpSolution, TerminalBall};
use crate::scenario::{AgentState, EiParams, ScenarioConfig};
use crate::vec2::Vec2;

/// Indices of interceptors inside the threat's proximity zone (closed
/// ball: the boundary is included).
pub fn candidate_set(p_it: Vec2, ei_states: &[AgentState], r_pz: f64) -> Vec<usize> {
    ei_states
        .iter()
        .enumerate()
        .filter(|(_, ei)| ei.position.distance(p_it) <= r_pz)
        .map(|(i, _)| i)
        .collect()
}

/// Anticipated threat track for this cycle: straight motion at the nominal
/// attack speed along the blended terminal heading. Callers must pass a
/// nonempty candidate set; with no proximal interceptors the evasion mean
/// is undefined and the CN falls back to the pure attack line instead (see
/// [`cn_decide`]).
pub fn cn_anticipate_it(
    p_it: Vec2,
    p_hva: Vec2,
    candidate_positions: &[Vec2],
    psi: f64,
    v_atk: f64,
    ts: f64,
    horizon: usize,
) -> Result<AnticipatedTrack, GeometryError> {
    if candidate_positions.is_empty() {
        return Err(GeometryError::EmptyProximalSet);
    }
    let heading = terminal_heading(p_it, p_hva, candidate_positions, psi)?;
    Ok(anticipate_line(p_it, heading, v_atk, ts, horizon))
}

fn ei_control_bounds(params: &EiParams) -> ControlBounds {
    ControlBounds {
        accel: Bounds::new(params.a_min, params.a_max),
        turn_rate: Bounds::new(params.omega_min, params.omega_max),
    }
}

/// Terminal-intercept problem for one candidate: pure proximity objective
/// `sum delta^2 Ts` under hard control/speed boxes (the problem statement
/// carries no slacks), terminal position inside the intercept zone around
/// the track end, and nonnegative terminal energy. The feasibility flag of
/// the solution decides commitment; a solve that fails to converge is
/// treated as infeasible.
pub fn solve_terminal_intercept(
    ei: &AgentState,
    track: &AnticipatedTrack,
    params: &EiParams,
    r_iz: f64,
    warm_start: Option<&[Control]>,
) -> OcpSolution {
    let stage_cost = |j: usize, s: &AgentState, _u: &Control| {
        (s.position - track.positions[j]).norm_squared()
    };
    let terminal_cost = |_: &AgentState| 0.0;
    let problem = OcpProblem {
        initial: *ei,
        horizon: params.horizon,
        step: params.step,
        control_bounds: ei_control_bounds(params),
        speed_bounds: Bounds::new(params.v_min, params.v_max),
        stage_cost: &stage_cost,
        terminal_cost: &terminal_cost,
        slack_weight: params.slack_weight,
        hard_bounds: true,
        terminal_ball: Some(TerminalBall {
            center: track.positions[params.horizon],
            radius: r_iz,
        }),
        energy: EnergyModel {
            turn_penalty: params.turn_penalty,
            require_terminal_nonneg: true,
        },
    };
    match solve(&problem, warm_start) {
        Ok(sol) => sol,
        // An invalid problem cannot arise from a validated scenario; treat
        // it as a maximally infeasible non-answer.
        Err(_) => infeasible_placeholder(ei, params),
    }
}

fn infeasible_placeholder(ei: &AgentState, params: &EiParams) -> OcpSolution {
    OcpSolution {
        controls: vec![Control::ZERO; params.horizon],
        states: vec![*ei; params.horizon + 1],
        objective: f64::INFINITY,
        stage_slack: vec![f64::INFINITY; params.horizon],
        terminal_speed_slack: f64::INFINITY,
        terminal_ball_slack: f64::INFINITY,
        terminal_energy: ei.energy,
        feasible: false,
        converged: false,
        iterations: 0,
        warm_objective: None,
    }
}

/// Pursuit-proximity problem for one interceptor: stage cost
/// `mu1 (a^2 + kappa w^2) + mu2 B + mu3 delta^2` with slacked boxes and
/// nonnegative terminal energy; no terminal cost.
pub fn solve_pursuit_single(
    ei: &AgentState,
    track: &AnticipatedTrack,
    patrol_center: Vec2,
    cfg: &ScenarioConfig,
    warm_start: Option<&[Control]>,
) -> OcpSolution {
    let params = &cfg.ei;
    let stage_cost = |j: usize, s: &AgentState, u: &Control| {
        let effort = u.accel * u.accel + params.turn_penalty * u.turn_rate * u.turn_rate;
        let barrier = barrier_cost(s.position, patrol_center, cfg.hva_position, &cfg.fields);
        let separation = (s.position - track.positions[j]).norm_squared();
        params.weight_energy * effort
            + params.weight_barrier * barrier.total
            + params.weight_proximity * separation
    };
    let terminal_cost = |_: &AgentState| 0.0;
    let problem = OcpProblem {
        initial: *ei,
        horizon: params.horizon,
        step: params.step,
        control_bounds: ei_control_bounds(params),
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
    match solve(&problem, warm_start) {
        Ok(sol) => sol,
        Err(_) => infeasible_placeholder(ei, params),
    }
}

/// Independent per-interceptor pursuit solves in ascending index order.
/// The joint cost is separable, so the summed objectives equal the joint
/// optimum.
pub fn solve_pursuit(
    indices: &[usize],
    ei_states: &[AgentState],
    track: &AnticipatedTrack,
    cfg: &ScenarioConfig,
    warm_starts: &[Option<Vec<Control>>],
) -> Vec<(usize, OcpSolution)> {
    indices
        .iter()
        .map(|&i| {
            let warm = warm_starts.get(i).and_then(|w| w.as_deref());
            let sol = solve_pursuit_single(
                &ei_states[i],
                track,
                cfg.ei.units[i].patrol_center,
                cfg,
                warm,
            );
            (i, sol)
        })
        .collect()
}

/// One full command-node decision.
///
/// `committed` and `pursuit` partition the alive (non-depleted)
/// interceptors; every alive interceptor receives exactly one first-step
/// control per cycle.
#[derive(Debug, Clone)]
pub struct CnDecision {
    /// Track the cycle anticipated for the threat.
    pub track: AnticipatedTrack,
    /// Alive interceptors inside the proximity zone before feasibility
    /// pruning.
    pub candidates: Vec<usize>,
    /// Interceptors committed to terminal intercept, with their solved
    /// plans.
    pub committed: Vec<(usize, OcpSolution)>,
    /// Remaining interceptors assigned to pursuit, with their solved plans.
    pub pursuit: Vec<(usize, OcpSolution)>,
}

impl CnDecision {
    pub fn committed_indices(&self) -> Vec<usize> {
        self.committed.iter().map(|(i, _)| *i).collect()
    }

    pub fn pursuit_indices(&self) -> Vec<usize> {
        self.pursuit.iter().map(|(i, _)| *i).collect()
    }
}

/// Run the CN engagement decision flow for one cycle.
///
/// Compute the candidate set; if empty, anticipate a pure attack line and
/// send everyone to pursuit. Otherwise solve the terminal-intercept problem
/// per candidate in ascending index order, commit the feasible ones, move
/// the rest to pursuit, and solve pursuit for the remainder. Depleted
/// interceptors are excluded from planning entirely (they coast). Committed
/// interceptors are re-evaluated from scratch every cycle.
pub fn cn_decide(
    it: &AgentState,
    ei_states: &[AgentState],
    cfg: &ScenarioConfig,
    warm_starts: &[Option<Vec<Control>>],
) -> Result<CnDecision, GeometryError> {
    let alive: Vec<usize> = (0..ei_states.len())
        .filter(|&i| ei_states[i].energy > 0.0)
        .collect();
    let in_zone = candidate_set(it.position, ei_states, cfg.engagement.r_pz);
    let candidates: Vec<usize> = in_zone
        .into_iter()
        .filter(|i| alive.contains(i))
        .collect();

    let track = if candidates.is_empty() {
        let heading = los_angle(it.position, cfg.hva_position)?;
        anticipate_line(it.position, heading, cfg.it.v_atk, cfg.ei.step, cfg.ei.horizon)
    } else {
        let positions: Vec<Vec2> = candidates.iter().map(|&i| ei_states[i].position).collect();
        cn_anticipate_it(
            it.position,
            cfg.hva_position,
            &positions,
            cfg.fields.psi,
            cfg.it.v_atk,
            cfg.ei.step,
            cfg.ei.horizon,
        )?
    };

    let mut committed = Vec::new();
    let mut reassigned = Vec::new();
    for &i in &candidates {
        let warm = warm_starts.get(i).and_then(|w| w.as_deref());
        let sol = solve_terminal_intercept(&ei_states[i], &track, &cfg.ei, cfg.engagement.r_iz, warm);
        if sol.feasible && sol.converged {
            committed.push((i, sol));
        } else {
            reassigned.push(i);
        }
    }

    let committed_idx: Vec<usize> = committed.iter().map(|(i, _)| *i).collect();
    let pursuit_idx: Vec<usize> = alive
        .iter()
        .copied()
        .filter(|i| !committed_idx.contains(i))
        .collect();
    debug_assert!(reassigned.iter().all(|i| pursuit_idx.contains(i)));

    let pursuit = solve_pursuit(&pursuit_idx, ei_states, &track, cfg, warm_starts);

    Ok(CnDecision {
        track,
        candidates,
        committed,
        pursuit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intercept::wrap_angle;
    use crate::ocp::rollout;
    use crate::scenario::{EiUnit, EngagementParams, FieldParams, InitialState, ItParams};
    use std::f64::consts::PI;

    fn base_config() -> ScenarioConfig {
        ScenarioConfig {
            seed: None,
            hva_position: Vec2::ZERO,
            static_defenses: vec![],
            it: ItParams {
                v_min: 0.5,
                v_max: 3.0,
                a_min: -1.0,
                a_max: 1.0,
                omega_min: -1.2,
                omega_max: 1.2,
                turn_penalty: 2.0,
                initial_energy: 50.0,
                weight_energy: 1.0,
                weight_risk: 1.0,
                weight_terminal: 1.0,
                slack_weight: 100.0,
                step: 0.25,
                horizon: 8,
                v_atk: 2.0,
                initial: InitialState {
                    position: Vec2::new(20.0, 0.0),
                    speed: 2.0,
                    heading: PI,
                },
            },
            ei: EiParams {
                v_min: 0.3,
                v_max: 2.5,
                a_min: -1.0,
                a_max: 1.0,
                omega_min: -1.5,
                omega_max: 1.5,
                turn_penalty: 2.0,
                initial_energy: 50.0,
                weight_energy: 0.1,
                weight_barrier: 1.0,
                weight_proximity: 1.0,
                slack_weight: 100.0,
                step: 0.25,
                horizon: 8,
                v_itc: 2.0,
                units: vec![],
            },
            fields: FieldParams {
                w_sd: 1.0,
                sigma_sd: 2.0,
                w_ei: 1.0,
                sigma_ei: 2.0,
                w_pac: 1.0,
                r_pac: 4.0,
                w_htc: 1.0,
                r_htc: 40.0,
                psi: 0.3,
            },
            engagement: EngagementParams {
                r_dz: 1.0,
                r_iz: 1.5,
                r_pz: 12.0,
                master_step: 0.05,
                max_time: 30.0,
                ballistic_depletion: false,
            },
        }
    }

    fn ei_at(x: f64, y: f64) -> AgentState {
        AgentState {
            position: Vec2::new(x, y),
            speed: 1.0,
            heading: 0.0,
            energy: 50.0,
        }
    }

    fn add_unit(cfg: &mut ScenarioConfig, x: f64, y: f64) {
        cfg.ei.units.push(EiUnit {
            patrol_center: Vec2::new(x, y),
            initial: InitialState {
                position: Vec2::new(x, y),
                speed: 1.0,
                heading: 0.0,
            },
        });
    }

    #[test]
    fn candidate_set_distance_filter() {
        let p_it = Vec2::new(10.0, 0.0);
        let eis = [ei_at(100.0, 0.0), ei_at(12.0, 0.0), ei_at(10.0, -30.0)];
        assert!(candidate_set(p_it, &eis, 1.0).is_empty());
        assert_eq!(candidate_set(p_it, &eis, 5.0), vec![1]);
        // boundary is included: closed ball
        assert_eq!(candidate_set(p_it, &[ei_at(13.0, 0.0)], 3.0), vec![0]);
    }

    #[test]
    fn candidate_set_matches_brute_force() {
        let p_it = Vec2::new(3.0, -2.0);
        let eis: Vec<AgentState> = (0..9)
            .map(|k| ei_at(k as f64, (k as f64 * 1.7).sin() * 6.0))
            .collect();
        let r = 5.5;
        let fast = candidate_set(p_it, &eis, r);
        let slow: Vec<usize> = (0..eis.len())
            .filter(|&i| {
                let d = eis[i].position - p_it;
                (d.x * d.x + d.y * d.y).sqrt() <= r
            })
            .collect();
        assert_eq!(fast, slow);
    }

    #[test]
    fn anticipation_heads_at_hva_when_attack_only() {
        let track = cn_anticipate_it(
            Vec2::new(10.0, 0.0),
            Vec2::ZERO,
            &[Vec2::new(8.0, 3.0)],
            0.0,
            2.0,
            0.25,
            8,
        )
        .unwrap();
        assert!(wrap_angle(track.heading - PI).abs() < 1e-12);
        assert_eq!(track.positions.len(), 9);
    }

    #[test]
    fn anticipation_heads_at_single_interceptor_when_pure_evasion() {
        let p_it = Vec2::new(10.0, 0.0);
        let ei = Vec2::new(10.0, 5.0);
        let track =
            cn_anticipate_it(p_it, Vec2::ZERO, &[ei], 1.0, 2.0, 0.25, 8).unwrap();
        let bearing = los_angle(p_it, ei).unwrap();
        assert!(wrap_angle(track.heading - bearing).abs() < 1e-12);
    }

    #[test]
    fn loitering_interceptor_near_track_end_is_feasible() {
        let cfg = base_config();
        // track drifting east at the attack speed toward the interceptor,
        // which sits exactly on the anticipated end point; slowing to the
        // speed floor keeps it inside the intercept zone
        let track = anticipate_line(Vec2::new(1.0, 0.0), 0.0, 2.0, cfg.ei.step, cfg.ei.horizon);
        let horizon_span = cfg.ei.horizon as f64 * cfg.ei.step * 2.0;
        let ei = AgentState {
            position: Vec2::new(1.0 + horizon_span, 0.0),
            speed: 1.0,
            heading: 0.0,
            energy: 50.0,
        };
        let sol = solve_terminal_intercept(&ei, &track, &cfg.ei, cfg.engagement.r_iz, None);
        assert!(
            sol.feasible && sol.converged,
            "ball slack {} converged {}",
            sol.terminal_ball_slack,
            sol.converged
        );
    }

    #[test]
    fn receding_track_beyond_reach_is_infeasible() {
        let mut cfg = base_config();
        cfg.ei.v_max = 1.0;
        cfg.ei.v_min = 0.5;
        // track runs away east at 2 m/s from a distant trailing interceptor;
        // reachability gap: 20 m + (2 - 1) * 2 s > r_iz
        let track = anticipate_line(Vec2::new(20.0, 0.0), 0.0, 2.0, cfg.ei.step, cfg.ei.horizon);
        let ei = ei_at(0.0, 0.0);
        let sol = solve_terminal_intercept(&ei, &track, &cfg.ei, cfg.engagement.r_iz, None);
        assert!(!sol.feasible);
        assert!(sol.terminal_ball_slack > 10.0);
    }

    #[test]
    fn arena_sized_intercept_zone_is_vacuously_feasible() {
        let cfg = base_config();
        let track = anticipate_line(Vec2::new(20.0, 0.0), 0.0, 2.0, cfg.ei.step, cfg.ei.horizon);
        let ei = ei_at(-5.0, 3.0);
        let sol = solve_terminal_intercept(&ei, &track, &cfg.ei, 1e6, None);
        assert!(sol.feasible);
    }

    #[test]
    fn barrier_dominant_pursuit_returns_to_patrol() {
        let mut cfg = base_config();
        add_unit(&mut cfg, 0.0, 0.0);
        cfg.ei.weight_energy = 1e-6;
        cfg.ei.weight_barrier = 10.0;
        cfg.ei.weight_proximity = 1e-12; // threat effectively absent
        // interceptor parked well outside its patrol radius
        let ei = AgentState {
            position: Vec2::new(15.0, 0.0),
            speed: 1.0,
            heading: PI / 2.0,
            energy: 50.0,
        };
        let track = anticipate_line(Vec2::new(500.0, 500.0), 0.0, 2.0, cfg.ei.step, cfg.ei.horizon);
        let sol = solve_pursuit_single(&ei, &track, Vec2::ZERO, &cfg, None);
        let pac_of = |s: &AgentState| {
            barrier_cost(s.position, Vec2::ZERO, cfg.hva_position, &cfg.fields).pac
        };
        let initial_pac = pac_of(&ei);
        let terminal_pac = pac_of(&sol.states[cfg.ei.horizon]);
        assert!(
            terminal_pac < initial_pac,
            "terminal {terminal_pac} vs initial {initial_pac}"
        );
    }

    #[test]
    fn proximity_dominant_pursuit_closes_separation() {
        let mut cfg = base_config();
        add_unit(&mut cfg, 0.0, 0.0);
        cfg.ei.weight_energy = 1e-6;
        cfg.ei.weight_barrier = 1e-6;
        cfg.ei.weight_proximity = 10.0;
        let ei = ei_at(0.0, 0.0);
        let track = anticipate_line(Vec2::new(6.0, 4.0), PI, 2.0, cfg.ei.step, cfg.ei.horizon);
        let sol = solve_pursuit_single(&ei, &track, Vec2::ZERO, &cfg, None);
        let coast = rollout(
            &ei,
            &vec![Control::ZERO; cfg.ei.horizon],
            cfg.ei.step,
            cfg.ei.turn_penalty,
        );
        let h = cfg.ei.horizon;
        let planned = sol.states[h].position.distance(track.positions[h]);
        let coasted = coast[h].position.distance(track.positions[h]);
        assert!(planned < coasted, "planned {planned} vs coast {coasted}");
    }

    #[test]
    fn empty_pursuit_set_yields_empty_decision() {
        let cfg = base_config(); // zero interceptors
        let it = cfg.initial_it_state();
        let decision = cn_decide(&it, &[], &cfg, &[]).unwrap();
        assert!(decision.candidates.is_empty());
        assert!(decision.committed.is_empty());
        assert!(decision.pursuit.is_empty());
    }

    #[test]
    fn empty_candidate_set_sends_all_to_pursuit() {
        let mut cfg = base_config();
        add_unit(&mut cfg, -30.0, 0.0);
        add_unit(&mut cfg, -30.0, 5.0);
        let it = cfg.initial_it_state(); // at (20, 0): both units far outside r_pz
        let eis = cfg.initial_ei_states();
        let warm = vec![None, None];
        let decision = cn_decide(&it, &eis, &cfg, &warm).unwrap();
        assert!(decision.candidates.is_empty());
        assert!(decision.committed.is_empty());
        assert_eq!(decision.pursuit_indices(), vec![0, 1]);
        // track falls back to the pure attack line toward the HVA
        let attack = los_angle(it.position, cfg.hva_position).unwrap();
        assert!(wrap_angle(decision.track.heading - attack).abs() < 1e-12);
    }

    #[test]
    fn feasible_and_infeasible_candidates_partition() {
        let mut cfg = base_config();
        cfg.fields.psi = 0.0; // anticipate pure attack for a clean geometry
        cfg.engagement.r_pz = 25.0;
        // unit 0 coasts straight onto the anticipated track end, easy
        // commit; unit 1 is proximal but too far off-axis to reach the
        // terminal ball inside the horizon
        add_unit(&mut cfg, 14.0, 0.0);
        add_unit(&mut cfg, 24.0, 12.0);
        let it = cfg.initial_it_state(); // at (20,0) heading pi, v_atk 2
        let eis = cfg.initial_ei_states();
        let warm = vec![None, None];
        let decision = cn_decide(&it, &eis, &cfg, &warm).unwrap();
        assert_eq!(decision.candidates, vec![0, 1]);
        assert_eq!(decision.committed_indices(), vec![0]);
        assert_eq!(decision.pursuit_indices(), vec![1]);
    }

    #[test]
    fn partition_covers_alive_interceptors_every_time() {
        let mut cfg = base_config();
        for k in 0..4 {
            add_unit(&mut cfg, 5.0 + k as f64 * 4.0, -2.0 + k as f64);
        }
        let it = cfg.initial_it_state();
        let mut eis = cfg.initial_ei_states();
        eis[2].energy = 0.0; // depleted: excluded from planning
        let warm = vec![None; 4];
        let decision = cn_decide(&it, &eis, &cfg, &warm).unwrap();
        let mut all: Vec<usize> = decision
            .committed_indices()
            .into_iter()
            .chain(decision.pursuit_indices())
            .collect();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 3]);
        for i in decision.committed_indices() {
            assert!(!decision.pursuit_indices().contains(&i));
        }
        // every alive interceptor received exactly one control
        for (_, sol) in decision.committed.iter().chain(&decision.pursuit) {
            assert_eq!(sol.controls.len(), cfg.ei.horizon);
        }
    }

    #[test]
    fn pursuit_objectives_are_separable() {
        let mut cfg = base_config();
        add_unit(&mut cfg, 8.0, 2.0);
        add_unit(&mut cfg, 12.0, -3.0);
        let eis = cfg.initial_ei_states();
        let track = anticipate_line(Vec2::new(20.0, 0.0), PI, 2.0, cfg.ei.step, cfg.ei.horizon);
        let warm = vec![None, None];
        let joint = solve_pursuit(&[0, 1], &eis, &track, &cfg, &warm);
        let single_0 = solve_pursuit_single(&eis[0], &track, cfg.ei.units[0].patrol_center, &cfg, None);
        let single_1 = solve_pursuit_single(&eis[1], &track, cfg.ei.units[1].patrol_center, &cfg, None);
        let joint_sum: f64 = joint.iter().map(|(_, s)| s.objective).sum();
        assert_eq!(joint_sum, single_0.objective + single_1.objective);
        assert_eq!(joint[0].1.controls, single_0.controls);
        assert_eq!(joint[1].1.controls, single_1.controls);
    }
}

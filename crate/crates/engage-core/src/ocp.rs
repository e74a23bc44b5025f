//! Direct single-shooting solver for horizon-length control problems with
//! box bounds, stage costs, terminal costs, and an optional terminal ball.
//!
//! Controls are the only decision variables; states come from an exact
//! forward rollout, which eliminates equality constraints entirely. Box and
//! terminal violations are transcribed as smooth one-sided quadratic
//! penalties: for a quadratic slack cost the optimal slack equals the
//! violation magnitude, so the penalty form and the slacked form coincide
//! and the solver reports recovered slack values. Minimization is projected
//! gradient descent with central finite-difference gradients and a
//! backtracking (Armijo) line search. Everything is deterministic: fixed
//! iteration caps, fixed tolerances, no randomness.

use std::cell::RefCell;

use thiserror::Error;

use crate::dynamics::{Bounds, Control, ControlBounds};
use crate::scenario::AgentState;
use crate::vec2::Vec2;

/// Iteration cap for the descent loop.
pub const MAX_ITERATIONS: usize = 500;
/// Armijo sufficient-decrease constant.
pub const ARMIJO_C: f64 = 1e-4;
/// Line-search step shrink factor.
pub const LINE_SEARCH_SHRINK: f64 = 0.5;
/// Maximum halvings before the line search gives up.
pub const MAX_BACKTRACKS: usize = 60;
/// Gradient-norm stop, scaled by `1 + |J|`.
pub const GRAD_TOL: f64 = 1e-6;
/// Finite-difference step, scaled by `1 + ||u||_inf`.
pub const FD_STEP: f64 = 1e-6;
/// A recovered slack above this marks the solution infeasible.
pub const SLACK_TOL: f64 = 1e-6;
/// Weight multiplier for constraints that carry no slack in the problem
/// statement (terminal energy, and every bound of a hard-bounded problem).
pub const HARD_PENALTY_FACTOR: f64 = 1e6;

/// Energy bookkeeping for a rollout: drain rate shape plus whether the
/// terminal energy must stay nonnegative for feasibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    pub turn_penalty: f64,
    pub require_terminal_nonneg: bool,
}

/// Terminal position constraint: `||p_h - center|| <= radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalBall {
    pub center: Vec2,
    pub radius: f64,
}

/// One horizon-length control-plus-slack problem.
///
/// `stage_cost` is evaluated at prediction indices `0..h` with the state at
/// that index and the control applied over the following interval; the
/// solver multiplies stage terms by the prediction step. `hard_bounds`
/// switches the speed box and terminal ball from slacked penalties to steep
/// penalties with no slack semantics (the slack-free terminal-intercept
/// form); the control box is always enforced by projection, so control
/// slacks are identically zero.
pub struct OcpProblem<'a> {
    pub initial: AgentState,
    pub horizon: usize,
    pub step: f64,
    pub control_bounds: ControlBounds,
    pub speed_bounds: Bounds,
    pub stage_cost: &'a dyn Fn(usize, &AgentState, &Control) -> f64,
    pub terminal_cost: &'a dyn Fn(&AgentState) -> f64,
    pub slack_weight: f64,
    pub hard_bounds: bool,
    pub terminal_ball: Option<TerminalBall>,
    pub energy: EnergyModel,
}

#[derive(Debug, Error, PartialEq)]
pub enum OcpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(&'static str),
}

/// A solved (or best-effort) trajectory plan.
///
/// `states` is always the exact rollout of `controls` from the initial
/// state. `feasible` is computed honestly even when the iteration cap was
/// hit: every recovered slack at most [`SLACK_TOL`], the terminal ball
/// satisfied, and the terminal energy nonnegative when required.
#[derive(Debug, Clone, PartialEq)]
pub struct OcpSolution {
    pub controls: Vec<Control>,
    pub states: Vec<AgentState>,
    pub objective: f64,
    /// Speed-bound violation at each non-terminal predicted state.
    pub stage_slack: Vec<f64>,
    /// Speed-bound violation at the terminal state.
    pub terminal_speed_slack: f64,
    /// Distance by which the terminal state misses the terminal ball.
    pub terminal_ball_slack: f64,
    pub terminal_energy: f64,
    pub feasible: bool,
    pub converged: bool,
    pub iterations: usize,
    /// Objective of the (projected) warm start, when one was supplied.
    pub warm_objective: Option<f64>,
}

impl OcpSolution {
    /// The receding-horizon output: the first control of the plan.
    pub fn first_control(&self) -> Control {
        self.controls[0]
    }

    pub fn max_slack(&self) -> f64 {
        self.stage_slack
            .iter()
            .copied()
            .fold(self.terminal_speed_slack, f64::max)
    }
}

/// Deterministic forward simulation of a control sequence.
///
/// Speed is not clamped (violations feed slack penalties instead) and
/// energy may go negative in prediction; the feasibility verdict flags it.
pub fn rollout(
    initial: &AgentState,
    controls: &[Control],
    step: f64,
    turn_penalty: f64,
) -> Vec<AgentState> {
    let mut states = Vec::with_capacity(controls.len() + 1);
    rollout_into(initial, controls, step, turn_penalty, &mut states);
    states
}

fn rollout_into(
    initial: &AgentState,
    controls: &[Control],
    step: f64,
    turn_penalty: f64,
    states: &mut Vec<AgentState>,
) {
    states.clear();
    states.push(*initial);
    let mut s = *initial;
    for u in controls {
        s = AgentState {
            position: s.position + step * s.speed * Vec2::from_heading(s.heading),
            speed: s.speed + step * u.accel,
            heading: s.heading + step * u.turn_rate,
            energy: s.energy
                - step * (u.accel * u.accel + turn_penalty * u.turn_rate * u.turn_rate),
        };
        states.push(s);
    }
}

/// Central-difference gradient of `objective` at `point`.
pub fn finite_diff_gradient<F: FnMut(&[f64]) -> f64>(
    mut objective: F,
    point: &[f64],
    h_fd: f64,
) -> Vec<f64> {
    debug_assert!(h_fd > 0.0);
    let mut work = point.to_vec();
    let mut grad = vec![0.0; point.len()];
    for i in 0..point.len() {
        let original = work[i];
        work[i] = original + h_fd;
        let plus = objective(&work);
        work[i] = original - h_fd;
        let minus = objective(&work);
        work[i] = original;
        grad[i] = (plus - minus) / (2.0 * h_fd);
    }
    grad
}

/// Receding-horizon warm start: drop the applied first control, repeat the
/// last. Always admissible for the next cycle (same shape, same bounds).
pub fn shift_warm_start(controls: &[Control]) -> Vec<Control> {
    let mut shifted: Vec<Control> = controls[1..].to_vec();
    if let Some(&last) = controls.last() {
        shifted.push(last);
    }
    shifted
}

struct PenaltyWeights {
    speed: f64,
    ball: f64,
    energy: f64,
}

impl PenaltyWeights {
    fn of(problem: &OcpProblem) -> Self {
        let hard = HARD_PENALTY_FACTOR * problem.slack_weight;
        let soft = if problem.hard_bounds {
            hard
        } else {
            problem.slack_weight
        };
        PenaltyWeights {
            speed: soft,
            ball: soft,
            energy: hard,
        }
    }
}

fn flatten(controls: &[Control]) -> Vec<f64> {
    let mut flat = Vec::with_capacity(controls.len() * 2);
    for u in controls {
        flat.push(u.accel);
        flat.push(u.turn_rate);
    }
    flat
}

fn unflatten(flat: &[f64]) -> Vec<Control> {
    flat.chunks_exact(2)
        .map(|c| Control::new(c[0], c[1]))
        .collect()
}

fn project(flat: &mut [f64], bounds: &ControlBounds) {
    for pair in flat.chunks_exact_mut(2) {
        pair[0] = bounds.accel.clamp(pair[0]);
        pair[1] = bounds.turn_rate.clamp(pair[1]);
    }
}

fn ball_violation(state: &AgentState, ball: &TerminalBall) -> f64 {
    (state.position.distance(ball.center) - ball.radius).max(0.0)
}

fn objective_value(
    problem: &OcpProblem,
    weights: &PenaltyWeights,
    flat: &[f64],
    states: &mut Vec<AgentState>,
) -> f64 {
    let controls: &[f64] = flat;
    states.clear();
    states.push(problem.initial);
    let mut s = problem.initial;
    let lambda = problem.energy.turn_penalty;
    let mut cost = 0.0;
    for (i, pair) in controls.chunks_exact(2).enumerate() {
        let u = Control::new(pair[0], pair[1]);
        let speed_violation = problem.speed_bounds.violation(s.speed);
        cost += problem.step
            * ((problem.stage_cost)(i, &s, &u)
                + weights.speed * speed_violation * speed_violation);
        s = AgentState {
            position: s.position + problem.step * s.speed * Vec2::from_heading(s.heading),
            speed: s.speed + problem.step * u.accel,
            heading: s.heading + problem.step * u.turn_rate,
            energy: s.energy
                - problem.step * (u.accel * u.accel + lambda * u.turn_rate * u.turn_rate),
        };
        states.push(s);
    }
    cost += (problem.terminal_cost)(&s);
    let terminal_speed_violation = problem.speed_bounds.violation(s.speed);
    cost += weights.speed * terminal_speed_violation * terminal_speed_violation;
    if let Some(ball) = &problem.terminal_ball {
        let gap = ball_violation(&s, ball);
        cost += weights.ball * gap * gap;
    }
    if problem.energy.require_terminal_nonneg {
        let deficit = (-s.energy).max(0.0);
        cost += weights.energy * deficit * deficit;
    }
    cost
}

fn validate_problem(problem: &OcpProblem) -> Result<(), OcpError> {
    if problem.horizon == 0 {
        return Err(OcpError::InvalidProblem("horizon must be >= 1"));
    }
    if !(problem.step > 0.0) || !problem.step.is_finite() {
        return Err(OcpError::InvalidProblem("step must be positive"));
    }
    if !problem.control_bounds.is_valid() {
        return Err(OcpError::InvalidProblem("empty control box"));
    }
    if !problem.speed_bounds.is_valid() {
        return Err(OcpError::InvalidProblem("empty speed box"));
    }
    if !(problem.slack_weight > 0.0) {
        return Err(OcpError::InvalidProblem("slack weight must be positive"));
    }
    let s = &problem.initial;
    if !s.position.is_finite() || !s.speed.is_finite() || !s.heading.is_finite() || !s.energy.is_finite()
    {
        return Err(OcpError::InvalidProblem("initial state must be finite"));
    }
    Ok(())
}

/// Local minimization of the penalty-transcribed objective by projected
/// gradient descent with backtracking line search.
///
/// Warm starts are projected onto the control box before use; the recorded
/// warm objective and the descent guarantee refer to the projected
/// sequence. Hitting the iteration cap is not an error: the best iterate is
/// returned with `converged == false` and an honestly computed feasibility
/// flag.
pub fn solve(problem: &OcpProblem, warm_start: Option<&[Control]>) -> Result<OcpSolution, OcpError> {
    validate_problem(problem)?;
    let h = problem.horizon;
    if let Some(w) = warm_start {
        if w.len() != h {
            return Err(OcpError::InvalidProblem("warm start length != horizon"));
        }
    }
    let weights = PenaltyWeights::of(problem);

    let mut u: Vec<f64> = match warm_start {
        Some(w) => flatten(w),
        None => vec![0.0; 2 * h],
    };
    project(&mut u, &problem.control_bounds);

    let scratch = RefCell::new(Vec::with_capacity(h + 1));
    let eval = |flat: &[f64]| -> f64 {
        objective_value(problem, &weights, flat, &mut scratch.borrow_mut())
    };

    let mut objective = eval(&u);
    let warm_objective = warm_start.map(|_| objective);
    let mut iterations = 0;
    let mut converged = false;

    // Line-search scale: with steep penalties the raw gradient can dwarf
    // the control box, so the first trial step is sized to sweep at most
    // one box span instead of burning backtracks.
    let box_span = (problem.control_bounds.accel.hi - problem.control_bounds.accel.lo)
        .max(problem.control_bounds.turn_rate.hi - problem.control_bounds.turn_rate.lo)
        .clamp(1e-6, 1e6);

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let h_fd = FD_STEP * (1.0 + u.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let grad = finite_diff_gradient(&eval, &u, h_fd);

        // Projected-gradient stationarity: how far a unit step can move
        // inside the box, and how much first-order decrease that move buys.
        // Projection caps the norm at the box diameter, so the norm test
        // alone would fire spuriously on penalty-inflated objectives; the
        // decrease term restores scale consistency with |J|.
        let mut pg_sq = 0.0;
        let mut predicted_decrease = 0.0;
        for (i, pair) in u.chunks_exact(2).enumerate() {
            let pa = problem.control_bounds.accel.clamp(pair[0] - grad[2 * i]);
            let pw = problem
                .control_bounds
                .turn_rate
                .clamp(pair[1] - grad[2 * i + 1]);
            pg_sq += (pair[0] - pa) * (pair[0] - pa) + (pair[1] - pw) * (pair[1] - pw);
            predicted_decrease += grad[2 * i] * (pair[0] - pa) + grad[2 * i + 1] * (pair[1] - pw);
        }
        let tol = GRAD_TOL * (1.0 + objective.abs());
        if pg_sq.sqrt() <= tol && predicted_decrease <= tol {
            converged = true;
            break;
        }

        let grad_inf = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let mut step_len = if grad_inf > box_span {
            box_span / grad_inf
        } else {
            1.0
        };
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            let mut candidate = u.clone();
            for (ci, gi) in candidate.iter_mut().zip(&grad) {
                *ci -= step_len * gi;
            }
            project(&mut candidate, &problem.control_bounds);
            let moved_sq: f64 = candidate
                .iter()
                .zip(&u)
                .map(|(c, o)| (c - o) * (c - o))
                .sum();
            if moved_sq == 0.0 {
                break;
            }
            let candidate_objective = eval(&candidate);
            if candidate_objective - objective <= -(ARMIJO_C / step_len) * moved_sq {
                u = candidate;
                objective = candidate_objective;
                accepted = true;
                break;
            }
            step_len *= LINE_SEARCH_SHRINK;
        }
        if !accepted {
            // No improving step at any allowed length: the iterate is a
            // fixed point of the method at line-search resolution. Only the
            // iteration cap counts as non-convergence.
            converged = true;
            break;
        }
    }

    let controls = unflatten(&u);
    let states = rollout(&problem.initial, &controls, problem.step, problem.energy.turn_penalty);
    let stage_slack: Vec<f64> = states[..h]
        .iter()
        .map(|s| problem.speed_bounds.violation(s.speed))
        .collect();
    let terminal = states[h];
    let terminal_speed_slack = problem.speed_bounds.violation(terminal.speed);
    let terminal_ball_slack = problem
        .terminal_ball
        .as_ref()
        .map(|b| ball_violation(&terminal, b))
        .unwrap_or(0.0);
    let terminal_energy = terminal.energy;
    let slack_ok = stage_slack.iter().all(|&v| v <= SLACK_TOL)
        && terminal_speed_slack <= SLACK_TOL
        && terminal_ball_slack <= SLACK_TOL;
    let energy_ok = !problem.energy.require_terminal_nonneg || terminal_energy >= -SLACK_TOL;

    Ok(OcpSolution {
        controls,
        states,
        objective,
        stage_slack,
        terminal_speed_slack,
        terminal_ball_slack,
        terminal_energy,
        feasible: slack_ok && energy_ok,
        converged,
        iterations,
        warm_objective,
    })
}

//! Forward-Euler propagation of unicycle states and maneuvering energy.
//!
//! The plant integrates at the fine master step with the committed control
//! held constant over each decision interval; planner-internal predictions
//! reuse the same formulas at their own step through [`crate::ocp::rollout`].

use serde::{Deserialize, Serialize};

use crate::scenario::AgentState;

/// Longitudinal acceleration and turn rate, held constant over an interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Control {
    /// m/s^2
    pub accel: f64,
    /// rad/s
    pub turn_rate: f64,
}

impl Control {
    pub const ZERO: Control = Control {
        accel: 0.0,
        turn_rate: 0.0,
    };

    pub fn new(accel: f64, turn_rate: f64) -> Self {
        Control { accel, turn_rate }
    }
}

/// Closed interval used for speed and control boxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn new(lo: f64, hi: f64) -> Self {
        Bounds { lo, hi }
    }

    pub fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.lo && value <= self.hi
    }

    /// Violation magnitude outside the interval; zero inside.
    pub fn violation(&self, value: f64) -> f64 {
        if value > self.hi {
            value - self.hi
        } else if value < self.lo {
            self.lo - value
        } else {
            0.0
        }
    }
}

/// Control box: acceleration and turn-rate intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlBounds {
    pub accel: Bounds,
    pub turn_rate: Bounds,
}

impl ControlBounds {
    pub fn is_valid(&self) -> bool {
        self.accel.is_valid() && self.turn_rate.is_valid()
    }

    pub fn clamp(&self, u: Control) -> Control {
        Control {
            accel: self.accel.clamp(u.accel),
            turn_rate: self.turn_rate.clamp(u.turn_rate),
        }
    }
}

/// One forward-Euler step of the unicycle model.
///
/// Position advances along the current heading at the current speed; speed
/// saturates to the box inside the step (the plant enforces hard limits by
/// clamping rather than rejection), heading is exactly linear in the turn
/// rate. Energy is left untouched; see [`energy_step`].
pub fn unicycle_step(state: &AgentState, u: Control, ts: f64, speed_bounds: Bounds) -> AgentState {
    debug_assert!(ts > 0.0);
    AgentState {
        position: state.position + ts * state.speed * crate::vec2::Vec2::from_heading(state.heading),
        speed: speed_bounds.clamp(state.speed + ts * u.accel),
        heading: state.heading + ts * u.turn_rate,
        energy: state.energy,
    }
}

/// Result of one energy update: the floored value plus the pre-floor value,
/// which event detection interpolates to time the depletion crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyStep {
    pub energy: f64,
    pub pre_clamp: f64,
}

impl EnergyStep {
    /// True when the budget ran out inside this step.
    pub fn depleted(&self) -> bool {
        self.pre_clamp < 0.0
    }
}

/// One forward-Euler step of the maneuvering-energy drain
/// `e' = e - Ts (a^2 + penalty w^2)`, floored at zero because Euler can
/// overshoot a nonnegative budget.
pub fn energy_step(energy: f64, u: Control, turn_penalty: f64, ts: f64) -> EnergyStep {
    debug_assert!(ts > 0.0);
    let pre_clamp = energy - ts * (u.accel * u.accel + turn_penalty * u.turn_rate * u.turn_rate);
    EnergyStep {
        energy: pre_clamp.max(0.0),
        pre_clamp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec2::Vec2;

    fn state(x: f64, y: f64, v: f64, theta: f64) -> AgentState {
        AgentState {
            position: Vec2::new(x, y),
            speed: v,
            heading: theta,
            energy: 1.0,
        }
    }

    const WIDE: Bounds = Bounds { lo: 0.0, hi: 100.0 };

    #[test]
    fn straight_line_identity() {
        let next = unicycle_step(&state(0.0, 0.0, 1.0, 0.0), Control::ZERO, 0.1, WIDE);
        assert_eq!(next.position, Vec2::new(0.1, 0.0));
        assert_eq!(next.speed, 1.0);
        assert_eq!(next.heading, 0.0);
    }

    #[test]
    fn axis_symmetry_along_y() {
        let next = unicycle_step(
            &state(0.0, 0.0, 1.0, std::f64::consts::FRAC_PI_2),
            Control::ZERO,
            0.1,
            WIDE,
        );
        assert!(next.position.x.abs() < 1e-15);
        assert!((next.position.y - 0.1).abs() < 1e-15);
        assert_eq!(next.heading, std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn euler_step_with_speed_saturation() {
        // Hand-evaluated: v' = min(1 + 0.5*1, 1.2) = 1.2, theta' = 0.5,
        // position moves with the pre-step speed and heading.
        let next = unicycle_step(
            &state(0.0, 0.0, 1.0, 0.0),
            Control::new(1.0, 1.0),
            0.5,
            Bounds::new(0.1, 1.2),
        );
        assert_eq!(next.speed, 1.2);
        assert_eq!(next.heading, 0.5);
        assert_eq!(next.position, Vec2::new(0.5, 0.0));
    }

    #[test]
    fn coasting_spends_no_energy() {
        let step = energy_step(1.0, Control::ZERO, 2.0, 0.1);
        assert_eq!(step.energy, 1.0);
        assert!(!step.depleted());
    }

    #[test]
    fn energy_drain_formula() {
        // 1 - 0.1 * (0.3^2 + 2 * 0.1^2) = 0.989
        let step = energy_step(1.0, Control::new(0.3, 0.1), 2.0, 0.1);
        assert!((step.energy - 0.989).abs() < 1e-15);
        assert!(!step.depleted());
    }

    #[test]
    fn depletion_floors_at_zero_and_flags() {
        // pre-clamp: 0.0005 - 0.1 * 1 = -0.0995
        let step = energy_step(0.0005, Control::new(1.0, 0.0), 2.0, 0.1);
        assert_eq!(step.energy, 0.0);
        assert!((step.pre_clamp + 0.0995).abs() < 1e-15);
        assert!(step.depleted());
    }

    #[test]
    fn heading_linear_in_turn_rate() {
        for &(theta, omega, ts) in &[(0.3, 0.7, 0.25), (-2.0, -1.3, 0.01), (10.0, 0.001, 2.0)] {
            let next = unicycle_step(&state(1.0, 2.0, 1.0, theta), Control::new(0.0, omega), ts, WIDE);
            assert_eq!(next.heading, theta + ts * omega);
        }
    }
}

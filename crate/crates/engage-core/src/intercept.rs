//! Intercept feasibility geometry: line-of-sight angles, the constant-speed
//! intercept triangle, terminal-heading anticipation, and straight-line
//! track prediction shared by both sides' planners.

use serde::Serialize;
use thiserror::Error;

use crate::vec2::Vec2;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("arctan2 undefined at the origin")]
    UndefinedAtOrigin,
    #[error("line of sight undefined for coincident points")]
    CoincidentPoints,
    #[error("speeds must be strictly positive")]
    NonPositiveSpeed,
    #[error("evasion heading undefined for an empty proximal set")]
    EmptyProximalSet,
}

/// Wrap an angle to (-pi, pi]. Headings themselves stay unwrapped; only
/// angle differences inside geometric formulas pass through here.
pub fn wrap_angle(angle: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let wrapped = angle.rem_euclid(tau);
    if wrapped > std::f64::consts::PI {
        wrapped - tau
    } else {
        wrapped
    }
}

/// Four-quadrant arctangent on (-pi, pi], undefined at the origin.
pub fn arctan2_checked(y: f64, x: f64) -> Result<f64, GeometryError> {
    if x == 0.0 && y == 0.0 {
        return Err(GeometryError::UndefinedAtOrigin);
    }
    let angle = y.atan2(x);
    // atan2 returns -pi only for y = -0.0, x < 0; fold it onto +pi so the
    // range is exactly (-pi, pi].
    if angle == -std::f64::consts::PI {
        Ok(std::f64::consts::PI)
    } else {
        Ok(angle)
    }
}

/// Bearing of `p_to` as seen from `p_from`.
pub fn los_angle(p_from: Vec2, p_to: Vec2) -> Result<f64, GeometryError> {
    let d = p_to - p_from;
    arctan2_checked(d.y, d.x).map_err(|_| GeometryError::CoincidentPoints)
}

/// Closing-speed tolerance: a candidate heading must close the range at a
/// rate exceeding `CLOSING_TOL * v_itc` to count as an intercept. Guards the
/// equal-speed parallel solutions whose time-to-intercept diverges.
pub const CLOSING_TOL: f64 = 1e-9;

/// A feasible constant-speed intercept: the unique heading that nulls the
/// LOS-perpendicular relative velocity while closing the range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterceptSolution {
    /// Feasibility scalar; |gamma| <= 1 for any feasible solution.
    pub gamma: f64,
    /// Interceptor heading, radians.
    pub heading: f64,
    /// Seconds until positional coincidence.
    pub time_to_intercept: f64,
    /// Norm of the relative velocity; equals the range rate along the LOS.
    pub closing_speed: f64,
}

/// Why no constant-speed intercept exists for a given geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum InfeasibleReason {
    /// |gamma| > 1: the interceptor is too slow to null the perpendicular
    /// component of the threat's velocity.
    Gamma { gamma: f64 },
    /// Both candidate headings fail the closing check (range not shrinking).
    Receding,
}

impl InfeasibleReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            InfeasibleReason::Gamma { .. } => "gamma",
            InfeasibleReason::Receding => "receding",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum InterceptFeasibility {
    Feasible(InterceptSolution),
    Infeasible(InfeasibleReason),
}

impl InterceptFeasibility {
    pub fn feasible(&self) -> Option<&InterceptSolution> {
        match self {
            InterceptFeasibility::Feasible(sol) => Some(sol),
            InterceptFeasibility::Infeasible(_) => None,
        }
    }
}

/// Constant-speed intercept triangle for a threat at `p_it` moving along
/// `theta_atk` at `v_atk` against an interceptor at `p_ei` engaging at
/// `v_itc`.
///
/// The feasibility scalar is `gamma = (v_atk / v_itc) sin(theta_atk -
/// theta_los)`. When |gamma| <= 1 the heading `theta_los + asin(gamma)`
/// nulls the LOS-perpendicular relative velocity; positional coincidence
/// additionally needs the relative velocity to close the range, so the
/// supplementary heading `theta_los + pi - asin(gamma)` is tried before
/// declaring the geometry receding.
pub fn solve_intercept(
    p_it: Vec2,
    p_ei: Vec2,
    theta_atk: f64,
    v_atk: f64,
    v_itc: f64,
) -> Result<InterceptFeasibility, GeometryError> {
    if !(v_atk > 0.0) || !(v_itc > 0.0) {
        return Err(GeometryError::NonPositiveSpeed);
    }
    let range_vec = p_it - p_ei;
    let range = range_vec.norm();
    if range == 0.0 {
        return Err(GeometryError::CoincidentPoints);
    }
    let theta_los = los_angle(p_ei, p_it)?;
    let gamma = (v_atk / v_itc) * wrap_angle(theta_atk - theta_los).sin();
    if gamma.abs() > 1.0 {
        return Ok(InterceptFeasibility::Infeasible(InfeasibleReason::Gamma {
            gamma,
        }));
    }

    let los_unit = range_vec * (1.0 / range);
    let v_atk_vec = v_atk * Vec2::from_heading(theta_atk);
    let candidate = |heading: f64| -> (f64, f64) {
        let v_rel = v_itc * Vec2::from_heading(heading) - v_atk_vec;
        (v_rel.dot(los_unit), v_rel.norm())
    };

    for heading in [
        theta_los + gamma.asin(),
        theta_los + std::f64::consts::PI - gamma.asin(),
    ] {
        let (closing, rel_speed) = candidate(heading);
        if closing > CLOSING_TOL * v_itc {
            return Ok(InterceptFeasibility::Feasible(InterceptSolution {
                gamma,
                heading,
                time_to_intercept: range / rel_speed,
                closing_speed: rel_speed,
            }));
        }
    }
    Ok(InterceptFeasibility::Infeasible(InfeasibleReason::Receding))
}

/// Anticipated terminal heading of the threat: the convex blend of the
/// attack bearing toward the HVA with the circular mean of the bearings
/// toward each proximal interceptor, weighted by `psi`.
///
/// The blend is taken along the shortest arc from the attack heading, so
/// psi = 0 returns the attack bearing exactly and psi = 1 the evasion mean
/// (mod 2 pi); raw scalar averaging near +-pi would produce spurious
/// headings.
pub fn terminal_heading(
    p_it: Vec2,
    p_hva: Vec2,
    proximal_ei_positions: &[Vec2],
    psi: f64,
) -> Result<f64, GeometryError> {
    let theta_atk = los_angle(p_it, p_hva)?;
    if proximal_ei_positions.is_empty() {
        if psi == 0.0 {
            return Ok(theta_atk);
        }
        return Err(GeometryError::EmptyProximalSet);
    }
    let mut sin_sum = 0.0;
    let mut cos_sum = 0.0;
    for &p_ei in proximal_ei_positions {
        let bearing = los_angle(p_it, p_ei)?;
        sin_sum += bearing.sin();
        cos_sum += bearing.cos();
    }
    let theta_evd = arctan2_checked(sin_sum, cos_sum)?;
    Ok(theta_atk + psi * wrap_angle(theta_evd - theta_atk))
}

/// Straight-line constant-speed track sampled on a prediction grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AnticipatedTrack {
    pub origin: Vec2,
    pub heading: f64,
    pub speed: f64,
    /// h + 1 sampled positions, `positions[0] == origin`.
    pub positions: Vec<Vec2>,
}

/// Euler recursion of straight-line motion: h + 1 positions stepping
/// `ts * speed` along the heading.
pub fn anticipate_line(origin: Vec2, heading: f64, speed: f64, ts: f64, h: usize) -> AnticipatedTrack {
    debug_assert!(ts > 0.0 && h >= 1 && speed > 0.0);
    let delta = ts * speed * Vec2::from_heading(heading);
    let mut positions = Vec::with_capacity(h + 1);
    let mut p = origin;
    positions.push(p);
    for _ in 0..h {
        p += delta;
        positions.push(p);
    }
    AnticipatedTrack {
        origin,
        heading,
        speed,
        positions,
    }
}

//! Gaussian risk densities around static defenses and anticipated
//! interceptor positions, and the quadratic patrol/tether barrier costs.

use crate::scenario::FieldParams;
use crate::vec2::Vec2;

/// Risk density split by source; `total` is always the exact sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskBreakdown {
    pub sd_component: f64,
    pub ei_component: f64,
    pub total: f64,
}

fn gaussian_sum(point: Vec2, sources: &[Vec2], sigma: f64) -> f64 {
    let two_sigma_sq = 2.0 * sigma * sigma;
    sources
        .iter()
        .map(|&s| (-(point - s).norm_squared() / two_sigma_sq).exp())
        .sum()
}

/// Instantaneous risk density at a point: superposed Gaussians around every
/// static defense plus superposed Gaussians around the supplied (already
/// pruned) anticipated interceptor points.
pub fn risk_density(
    point: Vec2,
    defenses: &[Vec2],
    ei_points: &[Vec2],
    fields: &FieldParams,
) -> RiskBreakdown {
    let sd_component = fields.w_sd * gaussian_sum(point, defenses, fields.sigma_sd);
    let ei_component = fields.w_ei * gaussian_sum(point, ei_points, fields.sigma_ei);
    RiskBreakdown {
        sd_component,
        ei_component,
        total: sd_component + ei_component,
    }
}

/// Barrier costs for one interceptor position: zero inside each radius,
/// quadratic in the overshoot outside. The quadratic has zero value and
/// slope at the boundary, so the field is C^1 everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierCost {
    pub pac: f64,
    pub htc: f64,
    pub total: f64,
}

fn one_sided_quadratic(distance: f64, radius: f64, weight: f64) -> f64 {
    if distance < radius {
        0.0
    } else {
        let overshoot = distance - radius;
        weight * overshoot * overshoot
    }
}

/// Patrol-adherence cost around `patrol_center` plus HVA-tether cost around
/// `p_hva`.
pub fn barrier_cost(
    position: Vec2,
    patrol_center: Vec2,
    p_hva: Vec2,
    fields: &FieldParams,
) -> BarrierCost {
    let pac = one_sided_quadratic(position.distance(patrol_center), fields.r_pac, fields.w_pac);
    let htc = one_sided_quadratic(position.distance(p_hva), fields.r_htc, fields.w_htc);
    BarrierCost {
        pac,
        htc,
        total: pac + htc,
    }
}

// scratch probe for the loiter terminal solve
use engage_core::cn_planner::*;
use engage_core::intercept::anticipate_line;
use engage_core::scenario::*;
use engage_core::vec2::Vec2;

fn main() {
    let params = EiParams {
        v_min: 0.3, v_max: 2.5, a_min: -1.0, a_max: 1.0,
        omega_min: -1.5, omega_max: 1.5, turn_penalty: 2.0,
        initial_energy: 50.0, weight_energy: 0.1, weight_barrier: 1.0,
        weight_proximity: 1.0, slack_weight: 100.0, step: 0.25, horizon: 8,
        v_itc: 2.0, units: vec![],
    };
    let track = anticipate_line(Vec2::new(1.0, 0.0), 0.0, 2.0, 0.25, 8);
    println!("track end {:?}", track.positions[8]);
    let ei = AgentState { position: Vec2::new(5.0, 0.0), speed: 1.0, heading: 0.0, energy: 50.0 };
    let sol = solve_terminal_intercept(&ei, &track, &params, 1.5, None);
    println!("feasible={} converged={} iters={} obj={:.4}", sol.feasible, sol.converged, sol.iterations, sol.objective);
    println!("ball_slack={:.6} speed_slack={:.6} max_stage={:.6} e_h={:.4}", sol.terminal_ball_slack, sol.terminal_speed_slack, sol.max_slack(), sol.terminal_energy);
    println!("final pos {:?} v={:.3}", sol.states[8].position, sol.states[8].speed);
    for u in &sol.controls { print!("({:.3},{:.3}) ", u.accel, u.turn_rate); }
    println!();
}

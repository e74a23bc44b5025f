//! Deterministic 2D engagement simulator.
//!
//! A maneuverable inbound threat (IT) and a team of expendable interceptors
//! (EIs) under a central command node (CN) each run receding-horizon
//! planners over unicycle dynamics with finite maneuvering energy. The
//! threat minimizes its own energy while penetrating toward a high-value
//! asset (HVA) through Gaussian risk fields; interceptors commit to
//! terminal intercept only when a geometric feasibility test confirms it
//! and otherwise harass under patrol/tether barrier costs, draining the
//! threat's energy by maneuver denial. The engagement engine integrates
//! everything on a fine master grid with continuous-time event monitoring
//! and classifies the outcome.

pub mod cn_planner;
pub mod dynamics;
pub mod engine;
pub mod fields;
pub mod intercept;
pub mod it_planner;
pub mod ocp;
pub mod output;
pub mod scenario;
pub mod vec2;

pub use dynamics::{Bounds, Control, ControlBounds};
pub use scenario::{AgentState, ScenarioConfig, ValidationReport};
pub use vec2::Vec2;

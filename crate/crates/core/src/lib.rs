//! Reach-avoid planning for constant-rate multi-mode systems: exact LP,
//! segment quantifier elimination, bounded model checking over an external
//! SMT solver, a 2-D cell cover decision procedure, the two-counter machine
//! reduction and benchmark arenas.

pub mod bench;
pub mod ccm;
pub mod cellcover2d;
pub mod geometry;
pub mod hop;
pub mod model;
pub mod numeric;
pub mod planner;
pub mod qe;

pub use geometry::{Halfspace, Polytope, Segment};
pub use model::{Instance, Mms, Mode, Plan, Point, Run, Schedule, TimedAction};
pub use numeric::{Extended, Rational};

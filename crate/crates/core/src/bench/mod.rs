//! Benchmark arenas, an RRT baseline, the comparison harness and an SVG renderer.

pub mod arena;
mod harness;
mod rrt;
mod svg;

pub use arena::{gen_arena, ArenaError, ArenaFamily, ArenaParams, SnakeShape};
pub use harness::{run_benchmarks, BenchConfig, BenchReport, BenchRow, Method, Outcome};
pub use rrt::{path_to_plan, rrt_plan, RrtParams, RrtResult};
pub use svg::{render_svg, Overlay, RenderError};

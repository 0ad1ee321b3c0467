//! Fixtures shared by the criterion benches.

use mms_core::bench::{gen_arena, ArenaFamily, ArenaParams};
use mms_core::numeric::int;
use mms_core::Instance;

/// The 2-D arena of a family at its usual benchmark size.
pub fn arena(family: ArenaFamily, obstacles: Option<usize>) -> Instance {
    let size = match family {
        ArenaFamily::Snake => 350,
        ArenaFamily::Maze => 600,
        _ => 100,
    };
    let mut p = ArenaParams::new(family, 2, int(size));
    if let Some(n) = obstacles {
        p = p.with_obstacles(n);
    }
    gen_arena(&p).expect("benchmark arena")
}

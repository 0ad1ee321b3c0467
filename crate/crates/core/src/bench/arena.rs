//! Deterministic benchmark arenas. Every family is laid out in a base frame
//! and scaled uniformly so that the longest workspace side equals `size`.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use thiserror::Error;

use crate::geometry::Polytope;
use crate::model::{Instance, Mms, ModelError, Point};
use crate::numeric::{int, ratio, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArenaFamily {
    LShaped,
    Snake,
    Maze,
    ModifiedL,
    UnreachableL,
}

impl ArenaFamily {
    pub const ALL: [ArenaFamily; 5] = [
        ArenaFamily::LShaped,
        ArenaFamily::Snake,
        ArenaFamily::Maze,
        ArenaFamily::ModifiedL,
        ArenaFamily::UnreachableL,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArenaFamily::LShaped => "lshaped",
            ArenaFamily::Snake => "snake",
            ArenaFamily::Maze => "maze",
            ArenaFamily::ModifiedL => "modified-l",
            ArenaFamily::UnreachableL => "unreachable-l",
        }
    }
}

impl fmt::Display for ArenaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArenaFamily {
    type Err = ArenaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace(['_', ' '], "-");
        Self::ALL
            .into_iter()
            .find(|f| f.name() == key || f.name().replace('-', "") == key)
            .ok_or_else(|| ArenaError::UnknownFamily(s.to_owned()))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArenaError {
    #[error("unknown arena family {0:?}")]
    UnknownFamily(String),
    #[error("{family} arenas need dimension >= 2 (got {dimension})")]
    Dimension { family: ArenaFamily, dimension: usize },
    #[error("{family} arenas support obstacle counts {min}..={max} (got {got})")]
    ObstacleCount {
        family: ArenaFamily,
        min: usize,
        max: usize,
        got: usize,
    },
    #[error("size must be positive")]
    Size,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Snake layout in base units. Walls alternate between rising from the
/// floor (leaving `top_gap` free above) and hanging from the ceiling
/// (leaving `bottom_gap` free below), separated by channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnakeShape {
    pub height: Rational,
    /// Free width left of the first wall.
    pub lead: Rational,
    pub channel: Rational,
    pub floor_wall: Rational,
    pub ceiling_wall: Rational,
    pub top_gap: Rational,
    pub bottom_gap: Rational,
}

impl Default for SnakeShape {
    fn default() -> Self {
        Self {
            height: int(4),
            lead: int(3),
            channel: int(3),
            floor_wall: ratio(1, 4),
            ceiling_wall: ratio(1, 4),
            top_gap: ratio(1, 2),
            bottom_gap: ratio(1, 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArenaParams {
    pub family: ArenaFamily,
    pub dimension: usize,
    /// Length of the longest workspace side.
    pub size: Rational,
    /// Walls for `Snake`, C-shaped patterns for `Maze`; ignored otherwise.
    pub obstacles: usize,
    /// Inset of start and target from the workspace corners, in base units.
    pub margin: Rational,
    pub snake: SnakeShape,
    /// Overrides the default axis modes.
    pub mms: Option<Mms>,
}

impl ArenaParams {
    pub fn new(family: ArenaFamily, dimension: usize, size: Rational) -> Self {
        let obstacles = match family {
            ArenaFamily::Snake => 4,
            ArenaFamily::Maze => 3,
            _ => 2,
        };
        Self {
            family,
            dimension,
            size,
            obstacles,
            margin: ratio(1, 10),
            snake: SnakeShape::default(),
            mms: None,
        }
    }

    pub fn with_obstacles(mut self, n: usize) -> Self {
        self.obstacles = n;
        self
    }
}

/// A 2-D layout in base units before scaling and extrusion.
struct Layout {
    extent: [Rational; 2],
    boxes: Vec<([Rational; 2], [Rational; 2])>,
    start: [Rational; 2],
    target: [Rational; 2],
}

fn rect(x0: Rational, y0: Rational, x1: Rational, y1: Rational) -> ([Rational; 2], [Rational; 2]) {
    ([x0, y0], [x1, y1])
}

fn l_layout(m: &Rational, sealed: bool) -> Layout {
    let four = int(4);
    let (o1_right, o2_bottom, o2_top) = if sealed {
        (four.clone(), int(1), four.clone())
    } else {
        (ratio(375, 100), ratio(105, 100), ratio(395, 100))
    };
    Layout {
        extent: [four.clone(), four.clone()],
        boxes: vec![
            rect(ratio(15, 100), ratio(1, 4), o1_right, int(1)),
            rect(int(3), o2_bottom, ratio(375, 100), o2_top),
        ],
        start: [m.clone(), m.clone()],
        target: [&four - m, &four - m],
    }
}

fn modified_l_layout() -> Layout {
    let mut l = l_layout(&ratio(1, 10), false);
    l.start = [ratio(285, 100), ratio(37, 10)];
    l.target = [ratio(385, 100), ratio(37, 10)];
    l
}

fn snake_layout(shape: &SnakeShape, walls: usize, m: &Rational) -> Layout {
    let h = &shape.height;
    let mut boxes = Vec::with_capacity(walls);
    let mut x = shape.lead.clone();
    for i in 0..walls {
        let (w, y0, y1) = if i % 2 == 0 {
            (&shape.floor_wall, Rational::zero(), h - &shape.top_gap)
        } else {
            (&shape.ceiling_wall, shape.bottom_gap.clone(), h.clone())
        };
        boxes.push(rect(x.clone(), y0, &x + w, y1));
        x = &x + w + &shape.channel;
    }
    Layout {
        extent: [x.clone(), h.clone()],
        boxes,
        start: [m.clone(), m.clone()],
        target: [&x - m, h - m],
    }
}

/// Concentric C's with alternating openings.
fn maze_layout(cs: usize, m: &Rational) -> Layout {
    let r = |a: i64, b: i64, c: i64, d: i64| rect(ratio(a, 100), ratio(b, 100), ratio(c, 100), ratio(d, 100));
    // Counted from the centre outwards: `cs` keeps the innermost C's.
    let all = [
        // outer: opens right
        vec![r(50, 300, 350, 350), r(50, 100, 100, 300), r(50, 50, 350, 100)],
        // middle: opens left
        vec![r(125, 125, 350, 150), r(125, 250, 350, 275), r(325, 150, 350, 250)],
        // inner: opens right
        vec![r(200, 165, 300, 185), r(200, 215, 300, 230), r(200, 185, 215, 215)],
    ];
    Layout {
        extent: [int(4), int(4)],
        boxes: all.into_iter().skip(3 - cs).flatten().collect(),
        start: [m.clone(), m.clone()],
        target: [ratio(23, 10), int(2)],
    }
}

/// Generates the arena instance; extra dimensions are extruded with
/// full-range slabs and start/target keep their corner insets there.
pub fn gen_arena(params: &ArenaParams) -> Result<Instance, ArenaError> {
    let family = params.family;
    let n = params.dimension;
    if n < 2 {
        return Err(ArenaError::Dimension { family, dimension: n });
    }
    if params.size <= Rational::zero() {
        return Err(ArenaError::Size);
    }
    let count_range = |min: usize, max: usize| {
        if (min..=max).contains(&params.obstacles) {
            Ok(())
        } else {
            Err(ArenaError::ObstacleCount {
                family,
                min,
                max,
                got: params.obstacles,
            })
        }
    };
    let m = &params.margin;
    let layout = match family {
        ArenaFamily::LShaped => l_layout(m, false),
        ArenaFamily::UnreachableL => l_layout(m, true),
        ArenaFamily::ModifiedL => modified_l_layout(),
        ArenaFamily::Snake => {
            count_range(1, 64)?;
            snake_layout(&params.snake, params.obstacles, m)
        }
        ArenaFamily::Maze => {
            count_range(1, 3)?;
            maze_layout(params.obstacles, m)
        }
    };
    let longest = layout.extent.iter().max().unwrap().clone();
    let k = &params.size / &longest;
    let full = &layout.extent[1] * &k;
    let hi_extra = &longest * &k;
    let lift = |xy: &[Rational; 2], extra: &Rational| -> Point {
        let mut p: Point = xy.iter().map(|v| v * &k).collect();
        p.resize(n, extra.clone());
        p
    };
    let mut ws_hi = lift(&layout.extent, &hi_extra);
    ws_hi[1] = full;
    let workspace = Polytope::from_box(&vec![Rational::zero(); n], &ws_hi);
    let obstacles = layout
        .boxes
        .iter()
        .map(|(lo, hi)| Polytope::from_box(&lift(lo, &Rational::zero()), &lift(hi, &hi_extra)))
        .collect();
    let m_scaled = m * &k;
    let start = lift(&layout.start, &m_scaled);
    let target = lift(&layout.target, &(&hi_extra - &m_scaled));
    let mms = params.mms.clone().unwrap_or_else(|| Mms::axis_modes(n));
    Ok(Instance::new(mms, obstacles, Some(workspace), start, target)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l_shaped_is_figure_one() {
        let inst = gen_arena(&ArenaParams::new(ArenaFamily::LShaped, 2, int(4))).unwrap();
        assert_eq!(inst.start, vec![ratio(1, 10), ratio(1, 10)]);
        assert_eq!(inst.target, vec![ratio(39, 10), ratio(39, 10)]);
        assert_eq!(
            inst.obstacles[1],
            Polytope::from_box(&[int(3), ratio(105, 100)], &[ratio(375, 100), ratio(395, 100)])
        );
    }

    #[test]
    fn scaling_and_extrusion() {
        let inst = gen_arena(&ArenaParams::new(ArenaFamily::LShaped, 3, int(100))).unwrap();
        assert_eq!(inst.start, vec![ratio(5, 2); 3]);
        assert_eq!(inst.target, vec![ratio(195, 2); 3]);
        assert_eq!(inst.obstacles[0].axis_range(2), Some((int(0), int(100))));
    }

    #[test]
    fn deterministic_and_named() {
        for f in ArenaFamily::ALL {
            let p = ArenaParams::new(f, 2, int(350));
            assert_eq!(gen_arena(&p).unwrap(), gen_arena(&p).unwrap());
            assert_eq!(f.name().parse::<ArenaFamily>().unwrap(), f);
        }
        assert!("spiral".parse::<ArenaFamily>().is_err());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(gen_arena(&ArenaParams::new(ArenaFamily::Maze, 1, int(4))).is_err());
        assert!(gen_arena(&ArenaParams::new(ArenaFamily::Maze, 2, int(4)).with_obstacles(4)).is_err());
        assert!(gen_arena(&ArenaParams::new(ArenaFamily::Snake, 2, int(0))).is_err());
    }
}

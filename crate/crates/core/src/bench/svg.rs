use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::polygon_vertices;
use crate::model::{simulate, Instance, ModelError, Plan, Point};
use crate::numeric::to_f64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error("only 2-D instances can be rendered (got dimension {0})")]
    Dimension(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// What to draw on top of the arena.
#[derive(Debug, Clone, Copy)]
pub enum Overlay<'a> {
    None,
    /// The sliced trajectory of the schedule plus its waypoints.
    Plan(&'a Plan),
    /// A waypoint path drawn as straight segments.
    Path(&'a [Point]),
}

fn xy(p: &[crate::numeric::Rational]) -> (f64, f64) {
    (to_f64(&p[0]), to_f64(&p[1]))
}

fn polyline(points: &[Point]) -> String {
    points
        .iter()
        .map(|p| {
            let (x, y) = xy(p);
            format!("{x:.4},{y:.4}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Deterministic SVG in instance coordinates, y pointing up.
pub fn render_svg(instance: &Instance, overlay: Overlay<'_>) -> Result<String, RenderError> {
    if instance.dimension() != 2 {
        return Err(RenderError::Dimension(instance.dimension()));
    }
    let mut pts: Vec<Point> = vec![instance.start.clone(), instance.target.clone()];
    if let Some(w) = &instance.workspace {
        pts.extend(polygon_vertices(w));
    } else {
        for o in &instance.obstacles {
            pts.extend(polygon_vertices(o));
        }
    }
    let fx: Vec<(f64, f64)> = pts.iter().map(|p| xy(p)).collect();
    let (x0, x1) = fx.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, y1) = fx.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (w, h) = ((x1 - x0).max(1e-9), (y1 - y0).max(1e-9));
    let r = w.max(h) / 120.0;
    let stroke = r / 2.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.4} {:.4} {w:.4} {h:.4}">"#,
        -y1
    );
    let _ = writeln!(s, r#"<g transform="scale(1,-1)">"#);
    if let Some(ws) = &instance.workspace {
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="white" stroke="black" stroke-width="{stroke:.4}"/>"#,
            polyline(&polygon_vertices(ws))
        );
    }
    for o in &instance.obstacles {
        let _ = writeln!(s, r#"<polygon points="{}" fill="gray"/>"#, polyline(&polygon_vertices(o)));
    }
    let (trajectory, dots): (Vec<Point>, Vec<Point>) = match overlay {
        Overlay::None => (vec![], vec![]),
        Overlay::Plan(p) => {
            let run = simulate(&instance.mms, &instance.start, &p.schedule)?;
            (run.states, p.waypoints.clone())
        }
        Overlay::Path(p) => (p.to_vec(), p.to_vec()),
    };
    if trajectory.len() > 1 {
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="blue" stroke-width="{stroke:.4}"/>"#,
            polyline(&trajectory)
        );
    }
    for p in &dots {
        let (x, y) = xy(p);
        let _ = writeln!(s, r#"<circle cx="{x:.4}" cy="{y:.4}" r="{r:.4}" fill="black"/>"#);
    }
    for (p, color) in [(&instance.start, "green"), (&instance.target, "red")] {
        let (x, y) = xy(p);
        let _ = writeln!(s, r#"<circle cx="{x:.4}" cy="{y:.4}" r="{:.4}" fill="{color}"/>"#, r * 1.5);
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

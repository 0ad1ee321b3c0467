use std::fmt::Write as _;

use crate::model::Instance;
use crate::numeric::Rational;
use crate::qe::{obstacle_free_formula, smt_numeral, QuadFormula};

/// Symbol naming for a depth-`k` query: waypoints `x{i}_{d}` for
/// `i ∈ 1..=k` and hop times `t{i}_{m}` for hop `i ∈ 0..=k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BmcLayout {
    pub dimension: usize,
    pub modes: usize,
    pub k: usize,
}

impl BmcLayout {
    pub fn for_instance(instance: &Instance, k: usize) -> Self {
        Self {
            dimension: instance.dimension(),
            modes: instance.mms.modes().len(),
            k,
        }
    }

    pub fn waypoint_symbol(&self, i: usize, d: usize) -> String {
        format!("x{i}_{d}")
    }

    pub fn time_symbol(&self, hop: usize, m: usize) -> String {
        format!("t{hop}_{m}")
    }

    pub fn waypoint_symbols(&self) -> Vec<String> {
        (1..=self.k)
            .flat_map(|i| (0..self.dimension).map(move |d| (i, d)))
            .map(|(i, d)| self.waypoint_symbol(i, d))
            .collect()
    }

    pub fn time_symbols(&self) -> Vec<String> {
        (0..=self.k)
            .flat_map(|h| (0..self.modes).map(move |m| (h, m)))
            .map(|(h, m)| self.time_symbol(h, m))
            .collect()
    }

    pub fn all_symbols(&self) -> Vec<String> {
        let mut s = self.waypoint_symbols();
        s.extend(self.time_symbols());
        s
    }
}

/// SMT terms for the coordinates of waypoint `i` (constants at both ends).
fn waypoint_terms(instance: &Instance, layout: &BmcLayout, i: usize) -> Vec<String> {
    if i == 0 {
        instance.start.iter().map(smt_numeral).collect()
    } else if i == layout.k + 1 {
        instance.target.iter().map(smt_numeral).collect()
    } else {
        (0..layout.dimension)
            .map(|d| layout.waypoint_symbol(i, d))
            .collect()
    }
}

/// Known coordinates of waypoint `i`: the endpoints are fixed.
fn waypoint_values(instance: &Instance, layout: &BmcLayout, i: usize) -> Vec<Option<Rational>> {
    if i == 0 {
        instance.start.iter().cloned().map(Some).collect()
    } else if i == layout.k + 1 {
        instance.target.iter().cloned().map(Some).collect()
    } else {
        vec![None; layout.dimension]
    }
}

/// One fresh QF_NRA script asking for `k` intermediate waypoints.
pub fn encode_bmc(instance: &Instance, k: usize) -> String {
    let layout = BmcLayout::for_instance(instance, k);
    let formulas: Vec<QuadFormula> = instance
        .obstacles
        .iter()
        .map(obstacle_free_formula)
        .collect();
    let mut s = String::new();
    s.push_str("(set-logic QF_NRA)\n");
    for sym in layout.all_symbols() {
        let _ = writeln!(s, "(declare-fun {sym} () Real)");
    }
    for sym in layout.time_symbols() {
        let _ = writeln!(s, "(assert (>= {sym} 0.0))");
    }
    for hop in 0..=k {
        let from = waypoint_terms(instance, &layout, hop);
        let to = waypoint_terms(instance, &layout, hop + 1);
        for d in 0..layout.dimension {
            let mut sum = vec![from[d].clone()];
            for (m, mode) in instance.mms.modes().iter().enumerate() {
                let r = &mode.rate[d];
                if num_traits::Zero::is_zero(r) {
                    continue;
                }
                sum.push(format!("(* {} {})", smt_numeral(r), layout.time_symbol(hop, m)));
            }
            let rhs = if sum.len() == 1 {
                sum.pop().unwrap()
            } else {
                format!("(+ {})", sum.join(" "))
            };
            let _ = writeln!(s, "(assert (= {} {rhs}))", to[d]);
        }
    }
    if !formulas.is_empty() {
        s.push_str("; obstacle avoidance per hop\n");
    }
    for hop in 0..=k {
        // The formula is symmetric in its endpoints; putting a constant one
        // second makes every product term linear.
        let (p, q) = if hop == 0 { (hop + 1, hop) } else { (hop, hop + 1) };
        let mut vars = waypoint_terms(instance, &layout, p);
        vars.extend(waypoint_terms(instance, &layout, q));
        let mut fixed = waypoint_values(instance, &layout, p);
        fixed.extend(waypoint_values(instance, &layout, q));
        for f in &formulas {
            let _ = writeln!(s, "(assert {})", f.partial(&fixed).simplify().to_smt(&vars));
        }
    }
    // Implied by the hop formulas, but stating it per waypoint lets the
    // solver prune whole regions before touching the products.
    for i in 1..=k {
        let vars = waypoint_terms(instance, &layout, i);
        for o in &instance.obstacles {
            let outside: Vec<String> = o
                .rows()
                .iter()
                .map(|row| {
                    let lhs = crate::qe::LinExpr {
                        coefficients: row.normal.clone(),
                        constant: num_traits::Zero::zero(),
                    };
                    format!("(> {} {})", lhs.to_smt(&vars), smt_numeral(&row.offset))
                })
                .collect();
            match outside.len() {
                0 => s.push_str("(assert false)\n"),
                1 => {
                    let _ = writeln!(s, "(assert {})", outside[0]);
                }
                _ => {
                    let _ = writeln!(s, "(assert (or {}))", outside.join(" "));
                }
            }
        }
    }
    if let Some(w) = &instance.workspace {
        for i in 1..=k {
            let vars = waypoint_terms(instance, &layout, i);
            for row in w.rows() {
                let lhs = crate::qe::LinExpr {
                    coefficients: row.normal.clone(),
                    constant: num_traits::Zero::zero(),
                };
                let _ = writeln!(
                    s,
                    "(assert (< {} {}))",
                    lhs.to_smt(&vars),
                    smt_numeral(&row.offset)
                );
            }
        }
    }
    s.push_str("(check-sat)\n");
    let syms = layout.all_symbols();
    if !syms.is_empty() {
        let _ = writeln!(s, "(get-value ({}))", syms.join(" "));
    }
    s
}

use num_traits::{Signed, Zero};
use proptest::prelude::*;

use mms_core::geometry::{segment_hit, Polytope, Segment};
use mms_core::hop::{hop_schedule, reach_cone_times, round_robin, verify_run, ViolationTarget};
use mms_core::model::{instance_to_json, load_instance, load_plan, save_plan, simulate, Instance, Mms, Run};
use mms_core::numeric::{format_rational, int, lp_feasible, parse_rational, ratio, sub, LinearConstraint, Rational};
use mms_core::planner::assemble_plan;
use mms_core::planner::WaypointWitness;

fn rat() -> impl Strategy<Value = Rational> {
    (-40i64..=40, 1i64..=8).prop_map(|(n, d)| ratio(n, d))
}

fn point(n: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(rat(), n)
}

fn small_box() -> impl Strategy<Value = Polytope> {
    (point(2), (1i64..=6, 1i64..=6)).prop_map(|(lo, (w, h))| {
        let hi = vec![&lo[0] + ratio(w, 2), &lo[1] + ratio(h, 2)];
        Polytope::from_box(&lo, &hi)
    })
}

fn rates() -> impl Strategy<Value = Mms> {
    prop::collection::vec((-3i64..=3, -3i64..=3), 1..=4).prop_map(|rs| {
        let named: Vec<(String, Vec<Rational>)> =
            rs.into_iter().enumerate().map(|(i, (a, b))| (format!("m{i}"), vec![int(a), int(b)])).collect();
        Mms::from_rates(2, named).unwrap()
    })
}

/// The verifier without any shortcut: every piece against every obstacle.
fn naive_violations(inst: &Instance, run: &Run) -> Vec<(usize, Option<usize>)> {
    let mut out = Vec::new();
    for (i, w) in run.states.windows(2).enumerate() {
        let seg = Segment::new(w[0].clone(), w[1].clone());
        for (j, o) in inst.obstacles.iter().enumerate() {
            if segment_hit(&seg, o).is_some() {
                out.push((i, Some(j)));
            }
        }
        if let Some(ws) = &inst.workspace {
            if !ws.contains(&w[0], true) || !ws.contains(&w[1], true) {
                out.push((i, None));
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rational_text_roundtrip(r in rat()) {
        prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
    }

    #[test]
    fn segment_hit_is_symmetric_and_on_the_obstacle(o in small_box(), p in point(2), q in point(2)) {
        let fwd = segment_hit(&Segment::new(p.clone(), q.clone()), &o);
        let back = segment_hit(&Segment::new(q.clone(), p.clone()), &o);
        prop_assert_eq!(fwd.is_some(), back.is_some());
        if let Some(l) = fwd {
            prop_assert!(!l.is_negative() && l <= int(1));
            prop_assert!(o.contains(&Segment::new(p, q).at(&l), false));
        }
    }

    #[test]
    fn verifier_agrees_with_naive_check(
        obstacles in prop::collection::vec(small_box(), 1..=3),
        walk in prop::collection::vec((0usize..4, 1i64..=20, 1i64..=7), 1..=25),
        start in point(2),
    ) {
        let mms = Mms::axis_modes(2);
        let ws = Polytope::from_box(&[int(-30), int(-30)], &[int(30), int(30)]);
        let inst = Instance {
            mms: mms.clone(),
            obstacles,
            workspace: Some(ws),
            start: start.clone(),
            target: start.clone(),
        };
        let names: Vec<String> = mms.modes().iter().map(|m| m.name.clone()).collect();
        let schedule = mms_core::model::Schedule::new(
            walk.iter()
                .map(|&(m, a, b)| mms_core::model::TimedAction::new(names[m % names.len()].clone(), ratio(a, b)))
                .collect(),
        );
        let run = simulate(&mms, &start, &schedule).unwrap();
        let report = verify_run(&inst, &run);
        let mut got: Vec<(usize, Option<usize>)> = report
            .violations
            .iter()
            .map(|v| (v.segment, match v.target { ViolationTarget::Obstacle(j) => Some(j), ViolationTarget::Workspace => None }))
            .collect();
        let mut want = naive_violations(&inst, &run);
        got.sort();
        want.sort();
        prop_assert_eq!(report.ok, want.is_empty());
        prop_assert_eq!(got, want);
    }

    #[test]
    fn cone_times_realize_the_displacement(mms in rates(), p in point(2), q in point(2)) {
        if let Some(t) = reach_cone_times(&mms, &p, &q) {
            prop_assert!(t.0.iter().all(|v| !v.is_negative()));
            prop_assert_eq!(t.apply(&mms, &p), q.clone());
            let run = simulate(&mms, &p, &round_robin(&mms, &t, 3)).unwrap();
            prop_assert_eq!(run.terminal(), &q);
        }
    }

    #[test]
    fn axis_modes_reach_everything(p in point(2), q in point(2)) {
        prop_assert!(reach_cone_times(&Mms::axis_modes(2), &p, &q).is_some());
    }

    #[test]
    fn hop_schedules_verify(o in small_box(), p in point(2), q in point(2)) {
        let mms = Mms::from_rates(2, [("a", vec![int(1), int(2)]), ("b", vec![int(-2), int(1)]), ("c", vec![int(1), int(-3)])]).unwrap();
        let ws = Polytope::from_box(&[int(-50), int(-50)], &[int(50), int(50)]);
        let inst = Instance { mms: mms.clone(), obstacles: vec![o.clone()], workspace: Some(ws), start: p.clone(), target: q.clone() };
        let seg = Segment::new(p.clone(), q.clone());
        prop_assume!(segment_hit(&seg, &o).is_none());
        let t = reach_cone_times(&mms, &p, &q).unwrap();
        let s = hop_schedule(&mms, &p, &q, &inst, &t).unwrap();
        let run = simulate(&mms, &p, &s).unwrap();
        prop_assert_eq!(run.terminal(), &q);
        prop_assert!(verify_run(&inst, &run).ok);
        let plan = assemble_plan(&inst, &WaypointWitness { waypoints: vec![p, q], times: vec![t] }).unwrap();
        prop_assert_eq!(load_plan(&save_plan(&plan)).unwrap(), plan);
    }

    #[test]
    fn feasibility_witnesses_satisfy_every_row(
        rows in prop::collection::vec((prop::collection::vec(-4i64..=4, 3), -8i64..=8, 0u8..3), 1..=7)
    ) {
        let cons: Vec<LinearConstraint> = rows
            .iter()
            .map(|(a, b, r)| {
                let a: Vec<Rational> = a.iter().map(|&v| int(v)).collect();
                match r {
                    0 => LinearConstraint::le(a, int(*b)),
                    1 => LinearConstraint::lt(a, int(*b)),
                    _ => LinearConstraint::eq(a, int(*b)),
                }
            })
            .collect();
        let out = lp_feasible(&cons, 3).unwrap();
        if let Some(w) = out.witness() {
            prop_assert!(cons.iter().all(|c| c.is_satisfied_by(w)));
        }
    }

    #[test]
    fn instance_json_roundtrip(o in small_box(), mms in rates()) {
        let ws = Polytope::from_box(&[int(-50), int(-50)], &[int(50), int(50)]);
        let inst = Instance::new(mms, vec![o], Some(ws), vec![int(-45), int(-45)], vec![int(45), int(45)]);
        if let Ok(inst) = inst {
            prop_assert_eq!(load_instance(&instance_to_json(&inst)).unwrap(), inst);
        }
    }
}

#[test]
fn verifier_reports_touching_contact() {
    let mms = Mms::axis_modes(2);
    let o = Polytope::from_box(&[int(1), int(1)], &[int(2), int(2)]);
    let inst = Instance {
        mms: mms.clone(),
        obstacles: vec![o],
        workspace: None,
        start: vec![int(0), int(1)],
        target: vec![int(3), int(1)],
    };
    // Slides along the bottom face of the closed obstacle.
    let t = reach_cone_times(&mms, &inst.start, &inst.target).unwrap();
    let run = simulate(&mms, &inst.start, &round_robin(&mms, &t, 1)).unwrap();
    let report = verify_run(&inst, &run);
    assert!(!report.ok);
    assert_eq!(report.violations[0].target, ViolationTarget::Obstacle(0));
    // A hair below the face is fine.
    let below = vec![int(0), Rational::new(999_999_999.into(), 1_000_000_000.into())];
    let end = vec![int(3), below[1].clone()];
    let run = simulate(&mms, &below, &round_robin(&mms, &reach_cone_times(&mms, &below, &end).unwrap(), 1)).unwrap();
    assert!(verify_run(&inst, &run).ok);
    assert!(sub(&end, &below).iter().skip(1).all(Zero::is_zero));
}

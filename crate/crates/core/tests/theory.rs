use proptest::prelude::*;

use ordinal_threshold::theory::{phase_diagram, phase_of, region_of, region_partition, Phase, PhaseInstance, Region};

fn simplex3() -> impl Strategy<Value = [f64; 3]> {
    (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b, c)| {
        let s = a + b + c + 1e-9;
        [a / s, b / s, c / s]
    })
}

proptest! {
    #[test]
    fn regions_satisfy_their_inequalities(p in simplex3()) {
        let [p1, p2, p3] = p;
        let holds = [
            (Region::X1, p1 > p2 + p3),
            (Region::X2, p2 > p1 - p3 && p1 - p3 > 0.0),
            (Region::X3, p2 > p3 - p1 && p3 - p1 > 0.0),
            (Region::X4, p3 > p1 + p2),
        ];
        // At most one region's inequalities hold.
        prop_assert!(holds.iter().filter(|h| h.1).count() <= 1);
        let r = region_of(&p);
        match holds.iter().find(|h| h.1) {
            Some((expected, _)) => prop_assert_eq!(r, *expected),
            None => prop_assert_eq!(r, Region::Boundary),
        }
    }

    #[test]
    fn reduced_condition_agrees_with_region_slack(
        w in (0.01f64..1.0, 0.01f64..1.0, 0.01f64..1.0, 0.01f64..1.0),
        q in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
    ) {
        let s = w.0 + w.1 + w.2 + w.3;
        let p = [w.0 / s, w.1 / s, w.2 / s, w.3 / s];
        let mut q = [q.0, q.1, q.2];
        q.sort_by(f64::total_cmp);
        let t: f64 = q.iter().sum();
        let q = [q[0] / t, q[1] / t, q[2] / t];
        prop_assume!(q[0] < q[1] && q[1] < q[2]);
        let inst = PhaseInstance::new(p, q).unwrap();
        let slack = inst.slack();
        prop_assume!(slack.abs() > 1e-9 && (q[2] - q[0] - q[1]).abs() > 1e-9);
        prop_assume!(inst.cpds().iter().all(|c| region_of(c) != Region::Boundary));
        let expected = if slack > 0.0 { Phase::Phase1 } else { Phase::Phase2 };
        prop_assert_eq!(phase_of(&inst), expected);
    }
}

#[test]
fn region_partition_needs_three_classes() {
    assert!(region_partition(&[vec![0.2, 0.3, 0.5]]).is_ok());
    assert!(region_partition(&[vec![0.25; 4]]).is_err());
}

#[test]
fn diagram_cells_cover_the_ordered_simplex() {
    let cells = phase_diagram(0.3, 0.2, 60).unwrap();
    assert!(cells
        .iter()
        .all(|c| c.q1 < c.q2 && c.q2 < c.q3 && (c.q1 + c.q2 + c.q3 - 1.0).abs() < 1e-12));
    // p₁+p₄ > p₂+p₃: both phases appear, split along the analytic curve.
    assert!(cells.iter().any(|c| c.phase == Phase::Phase1));
    assert!(cells.iter().any(|c| c.phase == Phase::Phase2));
    for c in &cells {
        let above = c.q3 > c.q1 + c.q2;
        let lhs = 0.6 * c.q1 - 0.4 * (c.q3 - c.q2);
        if above && lhs.abs() > 1e-9 {
            assert_eq!(c.phase == Phase::Phase1, lhs > 0.0);
        }
    }
    assert!(phase_diagram(0.1, 0.4, 60)
        .unwrap()
        .iter()
        .all(|c| c.phase != Phase::Phase1));
}

use proptest::prelude::*;

use ordinal_threshold::losses::{BasePhi, Composition, SurrogateSpec};
use ordinal_threshold::BiasClass;

fn phi_strategy() -> impl Strategy<Value = BasePhi> {
    prop::sample::select(BasePhi::ALL.to_vec())
}

fn comp_strategy() -> impl Strategy<Value = Composition> {
    prop::sample::select(vec![Composition::AllThreshold, Composition::ImmediateThreshold])
}

/// `b` with `b_1 = 0`, `K - 1` entries, optionally sorted.
fn bias(k: usize, sorted: bool) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, k - 2).prop_map(move |mut v| {
        if sorted {
            v.iter_mut().for_each(|x| *x = x.abs());
            v.sort_by(f64::total_cmp);
        }
        let mut b = vec![0.0];
        b.extend(v);
        b
    })
}

#[test]
fn indicator_bound() {
    let bounded = [
        BasePhi::Hinge,
        BasePhi::Ramp { s: 1.0 },
        BasePhi::SmoothedHinge,
        BasePhi::SquaredHinge,
        BasePhi::Exponential,
    ];
    for i in 0..=2000 {
        let u = -10.0 + i as f64 * 0.01;
        let ind = (u <= 0.0) as u8 as f64;
        for phi in bounded {
            assert!(phi.value(u) >= ind, "{phi} at {u}");
        }
        // Natural-log logistic reaches log 2 at 0; the base-2 form bounds.
        assert!(
            BasePhi::Logistic.value(u) / std::f64::consts::LN_2 >= ind - 1e-15,
            "logi at {u}"
        );
    }
    assert!(BasePhi::Logistic.value(0.0) < 1.0);
    assert!(BasePhi::Absolute.value(2.0) > 0.0 && BasePhi::Squared.value(3.0) > 0.0);
}

#[test]
fn ramp_is_not_convex() {
    let r = BasePhi::Ramp { s: 1.0 };
    assert!(r.value(0.0) > 0.5 * (r.value(-1.0) + r.value(1.0)));
    assert!(!r.is_convex());
}

proptest! {
    #[test]
    fn convex_midpoint(phi in prop::sample::select(BasePhi::CONVEX.to_vec()), x in -10.0f64..10.0, y in -10.0f64..10.0) {
        let mid = phi.value(0.5 * (x + y));
        let avg = 0.5 * (phi.value(x) + phi.value(y));
        prop_assert!(mid <= avg + 1e-12 * avg.abs().max(1.0));
    }

    #[test]
    fn order_conditions(u1 in -5.0f64..5.0, d in 1e-3f64..5.0) {
        let u2 = u1 + d;
        let odd = |p: BasePhi, u: f64| p.value(u) - p.value(-u);
        // Non-increasing for the ramp, non-increasing odd part for the absolute loss.
        let ramp = BasePhi::Ramp { s: 1.0 };
        prop_assert!(ramp.value(u1) >= ramp.value(u2) - 1e-12);
        prop_assert!(odd(BasePhi::Absolute, u1) >= odd(BasePhi::Absolute, u2) - 1e-12);
        // Strictly decreasing for logistic and exponential.
        for p in [BasePhi::Logistic, BasePhi::Exponential] {
            prop_assert!(p.value(u1) > p.value(u2));
        }
        // Strictly decreasing odd part for the hinge family and squared loss.
        for p in [BasePhi::Hinge, BasePhi::SmoothedHinge, BasePhi::SquaredHinge, BasePhi::Squared] {
            prop_assert!(odd(p, u1) > odd(p, u2), "{} {} {}", p, u1, u2);
            prop_assert!(p.strict_order_condition());
        }
        prop_assert!(ramp.weak_order_condition() && !ramp.strict_order_condition());
        prop_assert!(BasePhi::Absolute.weak_order_condition() && !BasePhi::Absolute.strict_order_condition());
    }

    #[test]
    fn translation_invariance(
        phi in phi_strategy(), comp in comp_strategy(), k in 3usize..8,
        seed_b in prop::collection::vec(-3.0f64..3.0, 6), a in -4.0f64..4.0, c in -5.0f64..5.0, y_raw in 0usize..100,
    ) {
        let mut b = vec![0.0];
        b.extend(&seed_b[..k - 2]);
        let y = 1 + y_raw % k;
        let s = SurrogateSpec::new(phi, comp, BiasClass::NonOrdered);
        let shifted: Vec<f64> = b.iter().map(|v| v + c).collect();
        let l0 = s.loss(a, &b, y);
        let l1 = s.loss(a + c, &shifted, y);
        prop_assert!((l0 - l1).abs() <= 1e-10 * l0.abs().max(1.0));
    }

    #[test]
    fn per_label_knot_bounds(
        phi in prop::sample::select(vec![BasePhi::Hinge, BasePhi::Absolute, BasePhi::Ramp { s: 1.0 }, BasePhi::Ramp { s: 0.5 }]),
        comp in comp_strategy(), k in 3usize..7, sorted in any::<bool>(),
        raw in prop::collection::vec(0usize..4, 5), y_raw in 0usize..100,
    ) {
        // Values on a coarse lattice so ties and coincident knots occur.
        let mut b: Vec<f64> = std::iter::once(0.0).chain(raw[..k - 2].iter().map(|&r| r as f64 * 0.5)).collect();
        if sorted {
            b.sort_by(f64::total_cmp);
        }
        let i = phi.pl_pieces().unwrap().num_knots();
        let mut distinct = b.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let j = distinct.len();
        let y = 1 + y_raw % k;
        let s = SurrogateSpec::new(phi, comp, BiasClass::NonOrdered);
        let prof = s.pl_profile(&b, y).unwrap();
        let bound = match comp {
            Composition::AllThreshold if j == k - 1 => i * j,
            Composition::AllThreshold => 2 * i * j,
            Composition::ImmediateThreshold if y == 1 || y == k => i,
            Composition::ImmediateThreshold => 2 * i,
        };
        prop_assert!(prof.num_knots() <= bound, "{:?} knots {:?} bound {}", b, prof.knots, bound);
        for t in [-7.3, -1.1, 0.2, 0.9, 2.6, 6.0] {
            prop_assert!((prof.eval(t) - s.loss(t, &b, y)).abs() < 1e-9);
        }
    }

    #[test]
    fn conditional_risk_knot_bound(
        phi in prop::sample::select(vec![BasePhi::Hinge, BasePhi::Absolute, BasePhi::Ramp { s: 1.0 }]),
        comp in comp_strategy(), b in bias(5, true), w in prop::collection::vec(0.01f64..1.0, 5),
    ) {
        let total: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|v| v / total).collect();
        let s = SurrogateSpec::new(phi, comp, BiasClass::NonOrdered);
        let i = phi.pl_pieces().unwrap().num_knots();
        let mut distinct = b.clone();
        distinct.dedup();
        let prof = s.pl_risk_profile(&b, &probs).unwrap();
        prop_assert!(prof.num_knots() <= 2 * i * distinct.len());
        for t in [-4.0, -0.3, 0.7, 3.3] {
            prop_assert!((prof.eval(t) - s.conditional_risk(t, &b, &probs)).abs() < 1e-9);
        }
    }

    #[test]
    fn derivative_matches_difference_quotient(phi in phi_strategy(), u in -4.0f64..4.0) {
        prop_assume!([-1.0f64, 0.0, 1.0, 0.5].iter().all(|c| (u - c).abs() > 1e-4));
        let h = 1e-7;
        let fd = (phi.value(u + h) - phi.value(u - h)) / (2.0 * h);
        prop_assert!((fd - phi.derivative(u)).abs() <= 1e-5 * fd.abs().max(1.0));
    }
}

#[test]
fn strict_bias_tie_exceeds_per_label_ij() {
    // Tied biases: both sides of y contribute a knot at the same b value.
    let s: SurrogateSpec = "hing-at-o".parse().unwrap();
    let prof = s.pl_profile(&[0.0, 0.0], 2).unwrap();
    assert_eq!(prof.knots, vec![-1.0, 1.0]);
    let prof = s.pl_profile(&[0.0, 1.0], 2).unwrap();
    assert!(prof.num_knots() <= 2);
}

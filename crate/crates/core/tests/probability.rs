use proptest::prelude::*;

use ordinal_threshold::probability::{acl_pmf, cl_delta_thresholds, cl_pmf, unimodal_region_scan};
use ordinal_threshold::{BiasClass, BiasVector, ModelKind, Pmf};

fn ordered_bias(k: usize) -> impl Strategy<Value = BiasVector> {
    prop::collection::vec(0.0f64..3.0, k - 2).prop_map(|gaps| {
        let mut b = vec![0.0];
        for g in gaps {
            b.push(b.last().unwrap() + g);
        }
        BiasVector::new(b, BiasClass::Ordered).unwrap()
    })
}

fn any_bias(k: usize) -> impl Strategy<Value = BiasVector> {
    prop::collection::vec(-4.0f64..4.0, k - 2).prop_map(|rest| {
        let mut b = vec![0.0];
        b.extend(rest);
        BiasVector::new(b, BiasClass::NonOrdered).unwrap()
    })
}

fn check_pmf(p: &Pmf) -> Result<(), TestCaseError> {
    let s: f64 = p.probs().iter().sum();
    prop_assert!((s - 1.0).abs() < 1e-10);
    prop_assert!(p.probs().iter().all(|&v| v >= 0.0));
    Ok(())
}

proptest! {
    #[test]
    fn model_pmfs_are_valid(b in ordered_bias(7), nb in any_bias(7), u in -700.0f64..700.0) {
        check_pmf(&cl_pmf(u, &b).unwrap())?;
        check_pmf(&acl_pmf(u, &b))?;
        check_pmf(&acl_pmf(u, &nb))?;
    }

    #[test]
    fn cl_cumulative_decreases_in_u(b in ordered_bias(6), u in -6.0f64..6.0, du in 1e-3f64..2.0) {
        let c0 = cl_pmf(u, &b).unwrap().cumulative();
        let c1 = cl_pmf(u + du, &b).unwrap().cumulative();
        for k in 0..c0.len() - 1 {
            prop_assert!(c1[k] < c0[k], "k {} {} {}", k, c0[k], c1[k]);
        }
    }

    #[test]
    fn cl_symmetry_about_interval_midpoint(b in ordered_bias(6), s in 0.0f64..5.0, k in 2usize..5) {
        let v = b.values();
        let m = 0.5 * (v[k - 2] + v[k - 1]);
        let lo = cl_pmf(m - s, &b).unwrap().prob(k);
        let hi = cl_pmf(m + s, &b).unwrap().prob(k);
        prop_assert!((lo - hi).abs() < 1e-10);
    }

    #[test]
    fn acl_unimodal_for_ordered_bias(b in ordered_bias(8), us in prop::collection::vec(-30.0f64..30.0, 20)) {
        prop_assert!(unimodal_region_scan(ModelKind::AdjacentCategoriesLogit, &b, &us).unwrap().iter().all(|&x| x));
    }

    #[test]
    fn acl_non_unimodal_inside_inverted_pair(delta in 0.2f64..4.0, frac in 0.01f64..0.99) {
        // b_5 = 5Δ > b_6 = 4Δ.
        let b = BiasVector::swapped_interval(delta, 10).unwrap();
        let u = delta * (4.0 + frac);
        prop_assert!(!acl_pmf(u, &b).is_unimodal());
    }

    #[test]
    fn cl_middle_labels_peak_at_the_containing_interval(delta in 0.05f64..4.0, k in 4usize..10, frac in 0.0f64..1.0, m_raw in 0usize..100) {
        let b = BiasVector::equal_interval(delta, k).unwrap();
        let v = b.values();
        // m in 2..=K-1 with b_{m-1} <= u < b_m.
        let m = 2 + m_raw % (k - 2);
        let u = v[m - 2] + frac * (v[m - 1] - v[m - 2]);
        let p = cl_pmf(u, &b).unwrap();
        for y in 2..m {
            prop_assert!(p.prob(y) <= p.prob(y + 1) + 1e-12);
        }
        for y in m..k - 1 {
            prop_assert!(p.prob(y) >= p.prob(y + 1) - 1e-12);
        }
    }

    #[test]
    fn cl_is_unimodal_above_both_scale_thresholds(u in 0.05f64..8.0, eps in 1e-3f64..1.0) {
        let (d1, d2) = cl_delta_thresholds(u, 6).unwrap();
        let b = BiasVector::equal_interval(d1.max(d2) + eps, 6).unwrap();
        prop_assert!(cl_pmf(u, &b).unwrap().is_unimodal());
    }
}

#[test]
fn delta_one_closed_form() {
    let (d1, _) = cl_delta_thresholds(1.0, 10).unwrap();
    assert!((d1 + ((1.0 - (-1.0f64).exp()) / 2.0).ln()).abs() < 1e-14);
    assert!((d1 - 1.1518).abs() < 1e-4);
    assert_eq!(cl_delta_thresholds(-0.5, 10).unwrap().0, 0.0);
}

#[test]
fn cl_requires_sorted_bias() {
    let b = BiasVector::new(vec![0.0, 2.0, 1.0], BiasClass::NonOrdered).unwrap();
    assert!(cl_pmf(0.0, &b).is_err());
}

#[test]
fn every_mode_counts_for_unimodality() {
    assert!(Pmf::new(vec![0.4, 0.2, 0.4]).unwrap().mode_set() == vec![1, 3]);
    assert!(!Pmf::new(vec![0.4, 0.2, 0.4]).unwrap().is_unimodal());
    assert!(Pmf::new(vec![0.4, 0.4, 0.2]).unwrap().is_unimodal());
}

//! Property-based invariants over randomized structures.

use baseshap::expr::ExprGraph;
use baseshap::game::{mask, BaselineVector, Coalition};
use baseshap::sum::csum;
use baseshap::synth::tsang_suite;
use proptest::prelude::*;

proptest! {
    #[test]
    fn subset_count_is_two_to_cardinality(bits in 0u32..(1 << 10), extra in 0usize..6) {
        let n = 10 + extra;
        let s = Coalition::new(bits, n).unwrap();
        prop_assert_eq!(s.subsets().count(), 1usize << s.cardinality());
    }

    #[test]
    fn subsets_are_subsets_and_strictly_increasing(bits in 0u32..(1 << 12)) {
        let s = Coalition::new(bits, 12).unwrap();
        let mut last: Option<u32> = None;
        for sub in s.subsets() {
            prop_assert!(sub.is_subset_of(s));
            if let Some(prev) = last {
                prop_assert!(sub.bits() > prev);
            }
            last = Some(sub.bits());
        }
    }

    #[test]
    fn masking_is_idempotent_and_projects(
        x in prop::collection::vec(-10.0f64..10.0, 1..12),
        bits in any::<u32>(),
        b_raw in prop::collection::vec(0.0f64..1.0, 1..12),
    ) {
        let n = x.len().min(b_raw.len());
        let x = &x[..n];
        let b = BaselineVector::unit(b_raw[..n].to_vec()).unwrap();
        let s = Coalition::new(bits & ((1u32 << n) - 1), n).unwrap();
        let once = mask(x, s, &b).unwrap();
        let twice = mask(&once, s, &b).unwrap();
        prop_assert_eq!(&once, &twice);
        for i in 0..n {
            let expected = if s.contains(i) { x[i] } else { b.values()[i] };
            prop_assert_eq!(once[i], expected);
        }
    }

    #[test]
    fn projection_stays_in_bounds(
        proposal in prop::collection::vec(-5.0f64..5.0, 1..10),
    ) {
        let n = proposal.len();
        let b = BaselineVector::unit(vec![0.5; n]).unwrap();
        let p = b.project(&proposal).unwrap();
        for (&v, &(lo, hi)) in p.values().iter().zip(p.bounds()) {
            prop_assert!(v >= lo && v <= hi);
        }
    }

    #[test]
    fn compensated_sum_tracks_exact_rationals(count in 1usize..200, scale in 1i64..1000) {
        // Alternating +x, -x pairs plus a tail must reduce exactly.
        let x = scale as f64 / 3.0;
        let mut terms = Vec::new();
        for _ in 0..count {
            terms.push(x);
            terms.push(-x);
        }
        terms.push(1.25);
        prop_assert_eq!(csum(terms), 1.25);
    }

    #[test]
    fn parse_print_parse_is_stable_on_suite(point in prop::collection::vec(0.01f64..0.99, 10), idx in 0usize..10) {
        let func = &tsang_suite()[idx];
        let g = ExprGraph::parse(&func.expr).unwrap();
        let printed = g.unparse();
        let g2 = ExprGraph::parse(&printed).unwrap();
        let x = &point[..g.arity()];
        let a = g.eval(x).unwrap();
        let b = g2.eval(x).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
}

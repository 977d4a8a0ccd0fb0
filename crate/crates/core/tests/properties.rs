use proptest::prelude::*;

use haar_postorder::dwt::{analyze_levelwise, analyze_streaming, synthesize, Signal};
use haar_postorder::dyadic::{carleson, Depth, DyadicInterval, IntervalSet};
use haar_postorder::order::{postorder_precedes, sigma, tau};
use haar_postorder::DyadicRational;

prop_compose! {
    fn rational()(num in -1_000_000i64..1_000_000, exp in 0u32..24) -> DyadicRational {
        DyadicRational::ratio(num, exp)
    }
}

fn tree_interval(n_max: u32) -> impl Strategy<Value = (Depth, DyadicInterval)> {
    (0..=n_max)
        .prop_flat_map(|n| (Just(n), 0..=n))
        .prop_flat_map(|(n, level)| (Just(n), Just(level), 0..1u64 << level))
        .prop_map(|(n, level, pos)| {
            let depth = Depth::new(n).unwrap();
            (depth, DyadicInterval::new(level, pos, depth).unwrap())
        })
}

proptest! {
    #[test]
    fn rational_field_laws(a in rational(), b in rational(), c in rational()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a - &a, DyadicRational::zero());
        prop_assert_eq!(a.scale_pow2(5).scale_pow2(-5), a);
    }

    #[test]
    fn tau_sigma_are_mutually_inverse((depth, interval) in tree_interval(10)) {
        let image = tau(interval, depth).unwrap();
        prop_assert_eq!(sigma(image, depth).unwrap(), interval);
        let preimage = sigma(interval, depth).unwrap();
        prop_assert_eq!(tau(preimage, depth).unwrap(), interval);
    }

    #[test]
    fn postorder_is_total((depth, a) in tree_interval(8)) {
        for b in haar_postorder::enumerate(depth) {
            let ab = postorder_precedes(a, b, depth).unwrap();
            let ba = postorder_precedes(b, a, depth).unwrap();
            prop_assert!(ab || ba);
            prop_assert_eq!(ab && ba, a == b);
        }
    }

    #[test]
    fn carleson_is_monotone_in_the_collection(bits in prop::collection::vec(any::<bool>(), 31)) {
        let depth = Depth::new(4).unwrap();
        let all = haar_postorder::enumerate(depth);
        let mut small = IntervalSet::empty(depth).unwrap();
        for (i, &b) in bits.iter().enumerate() {
            if b {
                small.insert(all[i]);
            }
        }
        if small.is_empty() {
            return Ok(());
        }
        let big = IntervalSet::full(depth).unwrap();
        prop_assert!(carleson(&small).value <= carleson(&big).value);
        // adding an interval never lowers the constant's attained packing
        let before = carleson(&small).value;
        let mut grown = small.clone();
        grown.insert(all[0]);
        prop_assert!(carleson(&grown).value >= before);
    }

    #[test]
    fn dwt_round_trip(values in prop::collection::vec(-1_000i64..1_000, 16)) {
        let signal = Signal::from_rationals(
            values.iter().map(|&v| DyadicRational::ratio(v, 3)).collect(),
        ).unwrap();
        let batch = analyze_levelwise(&signal);
        prop_assert_eq!(synthesize(&batch).unwrap(), signal.clone());
        let streamed = analyze_streaming(&signal).into_coefficients(4).unwrap();
        prop_assert_eq!(batch, streamed);
    }
}

use blockwords::metrics::{iou, overlap, pearson, tvd, GoalDistribution};
use blockwords::Word;
use proptest::prelude::*;

const POOL: [&str; 8] = ["ink", "pink", "kit", "tip", "pit", "nip", "pin", "tin"];

fn distribution() -> impl Strategy<Value = GoalDistribution> {
    proptest::collection::vec(0.0f64..1.0, POOL.len())
        .prop_filter("needs positive mass", |w| w.iter().any(|&x| x > 1e-6))
        .prop_map(|w| GoalDistribution::normalized(POOL.iter().map(|s| Word::new(s).unwrap()).zip(w)).unwrap())
}

proptest! {
    #[test]
    fn overlap_and_tvd_are_complementary(p in distribution(), q in distribution()) {
        let s = overlap(&p, &q).unwrap() + tvd(&p, &q).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn iou_is_a_symmetric_similarity(p in distribution(), q in distribution()) {
        let a = iou(&p, &q).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
        prop_assert!((a - iou(&q, &p).unwrap()).abs() < 1e-12);
        prop_assert!((iou(&p, &p).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tvd_satisfies_the_triangle_inequality(p in distribution(), q in distribution(), r in distribution()) {
        let direct = tvd(&p, &r).unwrap();
        prop_assert!(direct <= tvd(&p, &q).unwrap() + tvd(&q, &r).unwrap() + 1e-12);
    }

    #[test]
    fn pearson_is_bounded_when_defined(p in distribution(), q in distribution()) {
        if let Ok(r) = pearson(&p, &q) {
            prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&r));
        }
    }
}

use std::sync::Arc;

use hybridnet::metrics::{kendall, mid_ranks, pearson, spearman};
use hybridnet::tensor::{Tape, Tensor};
use proptest::prelude::*;

/// Values on a coarse lattice so ties are common, zero in both signs.
fn tied(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    let value = (-20i32..20, any::<bool>()).prop_map(|(v, neg)| match (v, neg) {
        (0, true) => -0.0,
        _ => v as f64 * 0.5,
    });
    prop::collection::vec(value, n)
}

fn pair(n: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    n.prop_flat_map(|len| (tied(len..len + 1), tied(len..len + 1)))
}

fn sign(x: f64) -> i64 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn kendall_naive(a: &[f64], b: &[f64]) -> f64 {
    let (mut s, mut ta, mut tb) = (0i64, 0i64, 0i64);
    let n = a.len();
    for i in 0..n {
        for j in i + 1..n {
            let (da, db) = (sign(a[i] - a[j]), sign(b[i] - b[j]));
            s += da * db;
            ta += (da != 0) as i64;
            tb += (db != 0) as i64;
        }
    }
    if ta == 0 || tb == 0 {
        return f64::NAN;
    }
    s as f64 / ((ta as f64) * (tb as f64)).sqrt()
}

fn same(x: f64, y: f64, tol: f64) -> bool {
    (x.is_nan() && y.is_nan()) || (x - y).abs() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kendall_matches_pair_count((a, b) in pair(2..80)) {
        let got = kendall(&a, &b).unwrap();
        prop_assert!(same(got, kendall_naive(&a, &b), 1e-12));
    }

    #[test]
    fn correlations_are_symmetric_and_bounded((a, b) in pair(2..60)) {
        for f in [pearson, spearman, kendall] {
            let (x, y) = (f(&a, &b).unwrap(), f(&b, &a).unwrap());
            prop_assert!(same(x, y, 1e-12));
            prop_assert!(x.is_nan() || (-1.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn rank_metrics_ignore_monotone_maps((a, b) in pair(2..60)) {
        let warped: Vec<f64> = a.iter().map(|v| (0.3 * v).exp() + 5.0).collect();
        prop_assert!(same(spearman(&a, &b).unwrap(), spearman(&warped, &b).unwrap(), 1e-12));
        prop_assert!(same(kendall(&a, &b).unwrap(), kendall(&warped, &b).unwrap(), 1e-12));
    }

    #[test]
    fn pearson_ignores_positive_affine_maps((a, b) in pair(2..60), s in 0.1f64..10.0, t in -5.0f64..5.0) {
        let moved: Vec<f64> = a.iter().map(|v| s * v + t).collect();
        prop_assert!(same(pearson(&a, &b).unwrap(), pearson(&moved, &b).unwrap(), 1e-9));
        let flipped: Vec<f64> = a.iter().map(|v| -v).collect();
        prop_assert!(same(pearson(&a, &b).unwrap(), -pearson(&flipped, &b).unwrap(), 1e-12));
    }

    #[test]
    fn mid_ranks_sum_to_triangle_number(v in tied(1..100)) {
        let n = v.len() as f64;
        prop_assert_eq!(mid_ranks(&v).iter().sum::<f64>(), n * (n + 1.0) / 2.0);
    }

    #[test]
    fn segment_softmax_sums_to_one(
        seg in prop::collection::vec(0usize..6, 1..40),
        cols in 1usize..4,
        seed in any::<u64>(),
    ) {
        let e = seg.len();
        let vals: Vec<f64> = (0..e * cols)
            .map(|i| ((i as u64).wrapping_mul(seed | 1) % 1000) as f64 / 50.0 - 10.0)
            .collect();
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(vec![e, cols], vals).unwrap();
        let seg: Arc<[usize]> = seg.into();
        let y = tape.segment_softmax(x, seg.clone(), 6).unwrap();
        let s = tape.segment_sum(y, seg.clone(), 6).unwrap();
        for node in 0..6 {
            let present = seg.contains(&node);
            for c in 0..cols {
                let v = tape.value(s)[node * cols + c];
                if present {
                    prop_assert!((v - 1.0).abs() < 1e-12);
                } else {
                    prop_assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn gather_then_segment_sum_undoes_a_permutation(
        perm in Just((0..12).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let data: Vec<f64> = (0..24).map(|i| i as f64 * 0.25 - 3.0).collect();
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(&Tensor::new(vec![12, 2], data.clone()).unwrap().with_grad());
        let idx: Arc<[usize]> = perm.clone().into();
        let g = tape.gather_rows(x, idx.clone()).unwrap();
        let back = tape.segment_sum(g, idx, 12).unwrap();
        prop_assert_eq!(tape.value(back), &data[..]);
        let l = tape.sum(back).unwrap();
        tape.backward(l).unwrap();
        prop_assert!(tape.grad(x).unwrap().iter().all(|&v| v == 1.0));
    }
}

#[test]
fn kendall_of_one_swap_is_a_third() {
    assert_eq!(
        kendall(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(),
        1.0 / 3.0
    );
}

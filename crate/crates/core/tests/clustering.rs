use std::collections::BTreeSet;

use cplx_core::{agglomerate, build_matrix, cut, BetaDist, DistanceMatrix};
use proptest::prelude::*;

type Partition = BTreeSet<BTreeSet<String>>;

fn partition(tree: &cplx_core::Dendrogram, k: usize) -> Partition {
    cut(tree, k)
        .unwrap()
        .groups
        .into_iter()
        .map(|g| g.into_iter().collect())
        .collect()
}

fn posteriors() -> impl Strategy<Value = Vec<(String, BetaDist)>> {
    prop::collection::vec((0u64..400, 1u64..400), 2..12).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (x, extra))| {
                let n = x + extra;
                let d = BetaDist::new(x as f64 + 0.5, (n - x) as f64 + 0.5).unwrap();
                (format!("t{i}"), d)
            })
            .collect()
    })
}

fn points() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..11)
}

fn euclidean(pts: &[(f64, f64)], order: &[usize]) -> DistanceMatrix {
    let n = order.len();
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (pts[order[i]], pts[order[j]]);
            let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() / 2f64.sqrt();
            rows[i][j] = d;
            rows[j][i] = d;
        }
    }
    DistanceMatrix::from_rows(order.iter().map(|i| format!("p{i}")).collect(), rows).unwrap()
}

proptest! {
    #[test]
    fn cuts_are_nested(posts in posteriors()) {
        let tree = agglomerate(&build_matrix(&posts).unwrap()).unwrap();
        let n = posts.len();
        for k in 1..n {
            let coarse = partition(&tree, k);
            let fine = partition(&tree, k + 1);
            prop_assert_eq!(coarse.len(), k);
            prop_assert_eq!(fine.len(), k + 1);
            for g in &fine {
                prop_assert!(coarse.iter().any(|c| g.is_subset(c)));
            }
        }
    }

    #[test]
    fn merge_heights_never_decrease(posts in posteriors()) {
        let heights = agglomerate(&build_matrix(&posts).unwrap()).unwrap().heights();
        prop_assert!(heights.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(heights.iter().all(|h| (0.0..=1.0).contains(h)));
    }

    /// With distinct distances the tree does not depend on input order.
    #[test]
    fn permuted_input_gives_the_same_tree(pts in points(), seed in any::<u64>()) {
        let n = pts.len();
        let identity: Vec<usize> = (0..n).collect();
        let mut shuffled = identity.clone();
        // Fisher-Yates driven by a small LCG so the permutation is part of the case
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = agglomerate(&euclidean(&pts, &identity)).unwrap();
        let b = agglomerate(&euclidean(&pts, &shuffled)).unwrap();
        prop_assert_eq!(a.heights(), b.heights());
        for k in 1..=n {
            prop_assert_eq!(partition(&a, k), partition(&b, k));
        }
    }
}

#[test]
fn equidistant_points_merge_in_index_order() {
    let n = 4;
    let rows = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 0.5 }).collect())
        .collect();
    let labels: Vec<String> = ["w", "x", "y", "z"].iter().map(|s| s.to_string()).collect();
    let tree = agglomerate(&DistanceMatrix::from_rows(labels, rows).unwrap()).unwrap();
    assert_eq!(tree.heights(), vec![0.5, 0.5, 0.5]);
    let groups = cut(&tree, 3).unwrap().groups;
    assert_eq!(
        groups,
        vec![
            vec!["w".to_string(), "x".to_string()],
            vec!["y".into()],
            vec!["z".into()]
        ]
    );
    let groups = cut(&tree, 2).unwrap().groups;
    assert_eq!(
        groups,
        vec![
            vec!["w".to_string(), "x".into(), "y".into()],
            vec!["z".into()]
        ]
    );
}

use llpd::graph::{build_knn_graph, ensure_connected, BruteForce, KdTree, NeighborGraph, NeighborSearch};
use llpd::llpd::{
    approx_llpd, approx_llpd_metric, build_dendrogram, choose_scales, exact_llpd_matrix, knn_llpd_radius, llpd_knn,
    single_linkage_prune, LadderMode,
};
use llpd::metrics::{accuracy_report, agreement};
use llpd::spectral::{kmeans, KernelConfig, LlpdLaplacianOperator};
use llpd::{Execution, Label, PointCloud};
use proptest::prelude::*;

fn cloud(max_n: usize, dim: usize) -> impl Strategy<Value = PointCloud> {
    (3..=max_n).prop_flat_map(move |n| {
        prop::collection::vec(0.0f64..1.0, n * dim).prop_map(move |c| PointCloud::new(c, dim).unwrap())
    })
}

fn mode() -> impl Strategy<Value = LadderMode> {
    prop_oneof![Just(LadderMode::Exp), Just(LadderMode::Pct)]
}

fn index(points: &PointCloud, k_euc: usize, mode: LadderMode, m: usize) -> (NeighborGraph, llpd::llpd::ScaleLadder, llpd::llpd::MultiscaleDendrogram, llpd::llpd::SortedComponentMatrix) {
    let graph = ensure_connected(&build_knn_graph(points, k_euc, Execution::Sequential).unwrap(), points);
    let ladder = choose_scales(&graph, mode, m).unwrap();
    let (dendro, sorted) = build_dendrogram(&graph, &ladder).unwrap();
    (graph, ladder, dendro, sorted)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn llpd_is_an_ultrametric(points in cloud(40, 2), m in 2usize..12, mode in mode()) {
        let (graph, ladder, _, sorted) = index(&points, 4, mode, m);
        let exact = exact_llpd_matrix(&graph).unwrap();
        let n = points.len();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    prop_assert!(exact.get(i, j) <= exact.get(i, k).max(exact.get(k, j)));
                    let a = approx_llpd_metric(&sorted, &ladder, i, j);
                    prop_assert!(a <= approx_llpd_metric(&sorted, &ladder, i, k).max(approx_llpd_metric(&sorted, &ladder, k, j)));
                }
            }
        }
    }

    #[test]
    fn approximation_sandwich(points in cloud(40, 3), ratio in 1.01f64..2.0) {
        let graph = ensure_connected(&build_knn_graph(&points, 5, Execution::Sequential).unwrap(), &points);
        let ladder = llpd::llpd::ScaleLadder::with_ratio(graph.min_weight().unwrap(), graph.max_weight().unwrap(), ratio).unwrap();
        prop_assert!(ladder.max_ratio() <= ratio * (1.0 + 1e-12));
        let (_, sorted) = build_dendrogram(&graph, &ladder).unwrap();
        let exact = exact_llpd_matrix(&graph).unwrap();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let (e, a) = (exact.get(i, j), approx_llpd(&sorted, &ladder, i, j));
                prop_assert!(e <= a * (1.0 + 1e-12));
                prop_assert!(a <= ladder.max_ratio() * e * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn neighbor_sweep_matches_pairwise_distances(points in cloud(30, 2), k in 1usize..40, mode in mode()) {
        let (_, ladder, _, sorted) = index(&points, 3, mode, 8);
        let n = points.len();
        let table = llpd_knn(&sorted, &ladder, k, Execution::Sequential).unwrap();
        let want = k.min(n - 1);
        for (i, row) in table.neighbors.iter().enumerate() {
            prop_assert_eq!(row.len(), want);
            prop_assert!(row.windows(2).all(|w| w[0].1 <= w[1].1));
            prop_assert!(row.iter().all(|&(j, d)| j != i && d == approx_llpd(&sorted, &ladder, i, j)));
            // nothing left out is strictly closer than the last neighbor found
            let last = row.last().unwrap().1;
            let mut all: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| approx_llpd(&sorted, &ladder, i, j)).collect();
            all.sort_by(f64::total_cmp);
            prop_assert_eq!(all[want - 1], last);
        }
        if k < n {
            let beta = knn_llpd_radius(&sorted, &ladder, k, Execution::Sequential).unwrap();
            for i in 0..n {
                prop_assert_eq!(beta[i], table.neighbors[i][k - 1].1);
            }
        }
    }

    #[test]
    fn sorted_matrix_runs_are_components(points in cloud(40, 2), m in 2usize..10) {
        let (_, _, dendro, sorted) = index(&points, 3, LadderMode::Exp, m);
        for s in 0..dendro.scales() {
            prop_assert_eq!(sorted.runs(s).len() - 1, dendro.component_count(s));
            for p in 0..points.len() {
                let (a, b) = sorted.run(p, s);
                let label = dendro.labels(s)[sorted.order()[p]];
                prop_assert!((a..b).all(|q| dendro.labels(s)[sorted.order()[q]] == label));
                prop_assert_eq!(b - a, dendro.sizes(s)[label as usize]);
            }
        }
    }

    #[test]
    fn pruned_single_linkage_matches(points in cloud(40, 2), m in 2usize..15, mode in mode()) {
        let graph = NeighborGraph::complete(&points);
        let ladder = choose_scales(&graph, mode, m).unwrap();
        let (ours, _) = build_dendrogram(&graph, &ladder).unwrap();
        prop_assert_eq!(ours, single_linkage_prune(&points, &ladder).unwrap());
    }

    #[test]
    fn spatial_index_matches_brute_force(points in cloud(60, 3), k in 1usize..8) {
        let tree = KdTree::new(&points);
        let brute = BruteForce::new(&points);
        for i in 0..points.len() {
            prop_assert_eq!(tree.knn(i, k), brute.knn(i, k));
        }
    }

    #[test]
    fn fast_matvec_matches_dense(points in cloud(40, 2), sigma_pos in 0.0f64..1.0, x in prop::collection::vec(-1.0f64..1.0, 40)) {
        let (_, ladder, dendro, _) = index(&points, 3, LadderMode::Exp, 10);
        let s = ((ladder.len() - 1) as f64 * sigma_pos) as usize;
        let op = LlpdLaplacianOperator::new(&dendro, &ladder, KernelConfig::new(ladder.t(s)).unwrap()).unwrap();
        let xb = &x[..op.blocks()];
        let per_point: Vec<f64> = op.block_of().iter().map(|&b| xb[b as usize]).collect();
        let w = op.dense_w();
        let dense = &w * nalgebra::DVector::from_vec(per_point);
        let fast = op.fast_matvec(xb).unwrap();
        for (i, &b) in op.block_of().iter().enumerate() {
            prop_assert!((fast[b as usize] - dense[i]).abs() <= 1e-12 * (1.0 + dense[i].abs()));
        }
        for &d in op.degrees() {
            prop_assert!(d > 0.0);
        }
    }

    #[test]
    fn accuracy_is_permutation_invariant(
        pairs in prop::collection::vec((1u32..5, 1u32..5), 1..60),
        perm in Just(vec![1u32, 2, 3, 4]).prop_shuffle(),
    ) {
        let y: Vec<Label> = pairs.iter().map(|p| p.0 as Label).collect();
        let y_hat: Vec<Label> = pairs.iter().map(|p| p.1 as Label).collect();
        let relabeled: Vec<Label> = y_hat.iter().map(|&l| perm[l as usize - 1] as Label).collect();
        let a = accuracy_report(&y, &y_hat).unwrap();
        let b = accuracy_report(&y, &relabeled).unwrap();
        prop_assert_eq!(a.oa, b.oa);
        prop_assert!((a.aa - b.aa).abs() < 1e-12);
        prop_assert!((a.kappa - b.kappa).abs() < 1e-12);
    }

    #[test]
    fn accuracy_at_least_chance(k in 1usize..6, per in 1usize..10, y_hat in prop::collection::vec(1u32..7, 60)) {
        let y: Vec<Label> = (0..k * per).map(|i| (i / per) as Label + 1).collect();
        let y_hat: Vec<Label> = y_hat[..y.len()].iter().map(|&l| l as Label).collect();
        let mut used = y_hat.clone();
        used.sort_unstable();
        used.dedup();
        // the mean over all matchings of the padded table is n / max(K, K_hat)
        let (oa, _) = agreement(&y, &y_hat).unwrap();
        prop_assert!(oa >= 1.0 / k.max(used.len()) as f64 - 1e-12);
    }

    #[test]
    fn kmeans_objective_never_increases(points in cloud(60, 2), k in 1usize..6, seed in 0u64..100) {
        prop_assume!(k <= points.len());
        let result = kmeans(&points, k, 3, seed).unwrap();
        prop_assert!(result.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        prop_assert!((result.wcss - result.history.last().copied().unwrap_or(result.wcss)).abs() <= 1e-9 * (1.0 + result.wcss));
    }
}

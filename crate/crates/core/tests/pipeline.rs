//! Cross-module integration tests: every fast path is checked against an
//! independent brute-force route on synthetic corpora.

mod common;

use std::collections::{HashMap, HashSet};

use kdist_core::consilience::{clusters_at, kct_timeseries, merge_profile, threshold_for_count};
use kdist_core::corpus::{write_corpus_files, DocType, FileFormat};
use kdist_core::distance::{
    classify, distance_matrix, distance_timeseries, knowledge_distance, knowledge_relevance,
    write_distance_csv, DistanceMatrix, RelationClass,
};
use kdist_core::index::{
    build_inbound_index, field_collection, field_collections, intersection_size,
    pairwise_collection_stats, PaperSet,
};
use kdist_core::space::{augment_to_degree, graph_from_matrix, kruskal_mst};
use kdist_core::synth::{
    generate_corpus, naive_collections, oracle_distance, SplitMix64, SynthParams,
};
use kdist_core::{Corpus, FieldId};

use common::{close_rel, ingest_from_strings, random_matrix, t1_corpus, two_era_corpus};

fn small_params(seed: u64, n_papers: u64) -> SynthParams {
    SynthParams {
        n_papers,
        seed,
        ..SynthParams::default()
    }
}

#[test]
fn emit_ingest_round_trip() {
    let corpus = generate_corpus(&small_params(42, 1_000)).unwrap();
    for (format, gzip) in [
        (FileFormat::Tsv, false),
        (FileFormat::Jsonl, false),
        (FileFormat::Tsv, true),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let (papers, citations, fields) =
            write_corpus_files(&corpus, dir.path(), format, gzip).unwrap();
        let back = kdist_core::corpus::ingest(
            &papers,
            &citations,
            &fields,
            &kdist_core::corpus::IngestOptions::default(),
        )
        .unwrap();
        assert!(back.content_eq(&corpus), "{format:?} gzip={gzip}");
        assert_eq!(back.content_digest(), corpus.content_digest());
    }
}

#[test]
fn filter_report_matches_naive_recount() {
    let corpus = generate_corpus(&small_params(7, 1_000)).unwrap();

    // Naive: indegrees on the book/patent-free graph, by external id.
    let keep: HashSet<&str> = corpus
        .papers()
        .iter()
        .filter(|p| !matches!(p.doc_type, DocType::Book | DocType::Patent))
        .map(|p| corpus.external_id(p.id))
        .collect();
    let mut indegree: HashMap<&str, u64> = HashMap::new();
    for e in corpus.edges() {
        let (src, dst) = (corpus.external_id(e.src), corpus.external_id(e.dst));
        if keep.contains(src) && keep.contains(dst) {
            *indegree.entry(dst).or_default() += 1;
        }
    }
    let expect_survivors: HashSet<&str> = keep
        .iter()
        .copied()
        .filter(|ext| indegree.get(ext).copied().unwrap_or(0) > 0)
        .collect();

    let filtered = corpus.clone().apply_filters();
    let survivors: HashSet<&str> = filtered
        .papers()
        .iter()
        .map(|p| filtered.external_id(p.id))
        .collect();
    assert_eq!(survivors, expect_survivors);
    assert!(filtered
        .papers()
        .iter()
        .all(|p| !matches!(p.doc_type, DocType::Book | DocType::Patent)));

    // The reported residue equals a naive zero-indegree recount on the
    // filtered corpus, and a second pass removes exactly those papers.
    let report = filtered.provenance.filter.clone().unwrap();
    let mut post_indegree: HashMap<u32, u64> = HashMap::new();
    for e in filtered.edges() {
        *post_indegree.entry(e.dst).or_default() += 1;
    }
    let residue: HashSet<&str> = filtered
        .papers()
        .iter()
        .filter(|p| post_indegree.get(&p.id).copied().unwrap_or(0) == 0)
        .map(|p| filtered.external_id(p.id))
        .collect();
    assert_eq!(report.residual_zero_inbound, residue.len() as u64);

    let twice = filtered.clone().apply_filters();
    let report2 = twice.provenance.filter.clone().unwrap();
    assert_eq!(report2.books_removed + report2.patents_removed, 0);
    assert_eq!(report2.zero_inbound_removed, residue.len() as u64);
    let removed_in_second: HashSet<&str> = filtered
        .papers()
        .iter()
        .map(|p| filtered.external_id(p.id))
        .filter(|ext| twice.find_external(ext).is_none())
        .collect();
    assert_eq!(removed_in_second, residue);
}

#[test]
fn slice_identities_against_naive_histogram() {
    let corpus = generate_corpus(&small_params(11, 10_000)).unwrap();
    let (y0, y1) = corpus.year_span().unwrap();

    let mut per_year: HashMap<i32, u64> = HashMap::new();
    for p in corpus.papers() {
        *per_year.entry(p.year).or_default() += 1;
    }

    let mut prev = corpus.slice(y0 - 1);
    assert_eq!(prev.size(), 0);
    for y in y0..=y1 {
        let cur = corpus.slice(y);
        let cohort = per_year.get(&y).copied().unwrap_or(0);
        assert_eq!(cur.size(), prev.size() + cohort, "|G_y| identity at {y}");
        assert!(prev.member_ids().is_subset(cur.member_ids()));
        prev = cur;
    }
    assert_eq!(prev.size(), corpus.n_papers());
}

#[test]
fn inbound_index_matches_edge_list_scan() {
    let corpus = generate_corpus(&small_params(13, 10_000)).unwrap();
    let (_, y1) = corpus.year_span().unwrap();
    let slice = corpus.slice(y1);
    let index = build_inbound_index(&slice, &corpus);

    let edge_set: HashSet<(u32, u32)> = corpus.edges().iter().map(|e| (e.src, e.dst)).collect();
    let n = corpus.n_papers() as u32;
    let mut rng = SplitMix64::new(99);
    // Random pairs mostly miss; real edges check the hit direction.
    for _ in 0..100 {
        let i = rng.next_below(n as u64) as u32;
        let j = rng.next_below(n as u64) as u32;
        let in_index = index.citing_of(j).binary_search(&i).is_ok();
        assert_eq!(in_index, edge_set.contains(&(i, j)));
    }
    for k in 0..50 {
        let e = corpus.edges()[(k * corpus.edges().len() / 50).min(corpus.edges().len() - 1)];
        assert!(index.citing_of(e.dst).binary_search(&e.src).is_ok());
    }
    assert_eq!(index.rebuild_outbound_edges(), corpus.edges());

    // A mid-span slice must only see citers published by then.
    let mid = (y1 + corpus.year_span().unwrap().0) / 2;
    let mid_index = build_inbound_index(&corpus.slice(mid), &corpus);
    for j in 0..n {
        for &i in mid_index.citing_of(j) {
            assert!(corpus.paper(i).year <= mid && corpus.paper(j).year <= mid);
        }
    }
}

#[test]
fn collections_monotone_and_closed_over_hierarchy() {
    let corpus = generate_corpus(&small_params(17, 5_000)).unwrap();
    let (y0, y1) = corpus.year_span().unwrap();
    let ontology = corpus.ontology();
    let tops = ontology.top_fields();
    let secs = ontology.secondary_fields();

    let years = [y0 + 10, y0 + 30, y1];
    let mut previous: Option<Vec<PaperSet>> = None;
    for &y in &years {
        let index = build_inbound_index(&corpus.slice(y), &corpus);
        let all: Vec<FieldId> = tops.iter().chain(secs.iter()).copied().collect();
        let sets = field_collections(&index, &corpus, &all).unwrap();
        if let Some(prev) = &previous {
            for (a, b) in prev.iter().zip(&sets) {
                assert!(a.is_subset(b), "collections only accumulate");
            }
        }
        // Top-field closure: X_top contains X_s for every child, and the
        // naive scan agrees exactly.
        let naive = naive_collections(&corpus, y, &all, Default::default()).unwrap();
        for (k, set) in sets.iter().enumerate() {
            assert_eq!(set.len(), naive[k].len() as u64);
            assert!(set.iter().all(|p| naive[k].contains(&p)));
        }
        for (t_pos, &t) in tops.iter().enumerate() {
            for (s_pos, &s) in secs.iter().enumerate() {
                if ontology.parent(s) == Some(t) {
                    assert!(sets[tops.len() + s_pos].is_subset(&sets[t_pos]));
                }
            }
        }
        previous = Some(sets);
    }
}

#[test]
fn intersection_matches_sorted_merge_on_large_sets() {
    let universe = 1_000_000u64;
    let mut rng = SplitMix64::new(23);
    let mut draw = |n: usize| -> Vec<u32> {
        let mut v: Vec<u32> = (0..n).map(|_| rng.next_below(universe) as u32).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let a = draw(100_000);
    let b = draw(100_000);

    // Sorted two-pointer merge count.
    let (mut i, mut j, mut expected) = (0usize, 0usize, 0u64);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                expected += 1;
                i += 1;
                j += 1;
            }
        }
    }

    let sa = PaperSet::from_ascending(a.iter().copied());
    let sb = PaperSet::from_ascending(b.iter().copied());
    assert_eq!(intersection_size(&sa, &sb), expected);
    assert!(expected > 0);
}

#[test]
fn twelve_field_matrix_matches_per_pair_oracle() {
    let params = SynthParams {
        n_papers: 6_000,
        n_top_fields: 4,
        secondaries_per_top: 3,
        block_matrix: SynthParams::uniform_blocks(4, 0.5, 0.1),
        seed: 29,
        ..SynthParams::default()
    };
    let corpus = generate_corpus(&params).unwrap();
    let year = corpus.year_span().unwrap().1;
    let index = build_inbound_index(&corpus.slice(year), &corpus);
    let secs = corpus.ontology().secondary_fields();
    let stats = pairwise_collection_stats(&index, &corpus, &secs).unwrap();
    let matrix = distance_matrix::<f64>(&stats).unwrap();

    for i in 0..secs.len() {
        for j in i..secs.len() {
            let oracle: f64 = oracle_distance(&corpus, secs[i], secs[j], year).unwrap();
            assert!(
                close_rel(matrix.kd(i, j), oracle),
                "({i},{j}): {} vs oracle {}",
                matrix.kd(i, j),
                oracle
            );
        }
    }
}

#[test]
fn t1_hand_checked_distance() {
    let corpus = t1_corpus();
    let index = build_inbound_index(&corpus.slice(2000), &corpus);
    let xa = field_collection(&index, &corpus, FieldId(1)).unwrap();
    let xb = field_collection(&index, &corpus, FieldId(2)).unwrap();
    assert_eq!(xa.len(), 3);
    assert_eq!(xb.len(), 3);
    assert_eq!(intersection_size(&xa, &xb), 2);

    let stats = pairwise_collection_stats(&index, &corpus, &[FieldId(1), FieldId(2)]).unwrap();
    let matrix = distance_matrix::<f64>(&stats).unwrap();
    let expected = (3f64.ln() - 2f64.ln()) / (8f64.ln() - 3f64.ln());
    assert!((matrix.kd(0, 1) - expected).abs() < 1e-12);
    let oracle: f64 = oracle_distance(&corpus, FieldId(1), FieldId(2), 2000).unwrap();
    assert!(close_rel(matrix.kd(0, 1), oracle));
}

#[test]
fn two_era_series_rises_after_the_cutoff() {
    let corpus = two_era_corpus(1951, 2020, 2000, 4);
    let series = distance_timeseries::<f64>(&corpus, FieldId(1), FieldId(2), 1952..=2020).unwrap();

    for p in &series.points {
        let oracle: f64 = oracle_distance(&corpus, FieldId(1), FieldId(2), p.year).unwrap();
        assert!(close_rel(p.value, oracle), "year {}", p.year);
        if p.year <= 2000 {
            assert_eq!(p.value, 0.0, "eras share all citers before the cutoff");
        }
    }
    let post: Vec<f64> = series
        .points
        .iter()
        .filter(|p| p.year >= 2000)
        .map(|p| p.value)
        .collect();
    for w in post.windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "kd must not fall after the cutoff");
    }
    assert!(*post.last().unwrap() > 0.5, "the gap should open up");

    let single = distance_timeseries::<f64>(&corpus, FieldId(1), FieldId(2), 1990..=1990).unwrap();
    assert_eq!(single.points.len(), 1);
}

#[test]
fn kct_series_flat_under_stationary_rates_and_rising_after_split() {
    // Stationary citation regime: the unification threshold settles.
    let params = SynthParams {
        n_papers: 4_000,
        n_top_fields: 4,
        secondaries_per_top: 2,
        block_matrix: SynthParams::uniform_blocks(4, 0.4, 0.15),
        seed: 31,
        ..SynthParams::default()
    };
    let corpus = generate_corpus(&params).unwrap();
    let tops = corpus.ontology().top_fields();
    let series = kct_timeseries::<f64>(&corpus, &tops, 1, 2011..=2020).unwrap();
    for p in &series.points {
        // Independent route: per-pair oracle distances -> matrix ->
        // profile -> threshold.
        let mut values = vec![vec![0.0f64; tops.len()]; tops.len()];
        for i in 0..tops.len() {
            for j in (i + 1)..tops.len() {
                let v = oracle_distance(&corpus, tops[i], tops[j], p.year).unwrap();
                values[i][j] = v;
                values[j][i] = v;
            }
        }
        let oracle_matrix = DistanceMatrix::from_values(tops.clone(), p.year, &values);
        let oracle_threshold =
            threshold_for_count(&merge_profile(&oracle_matrix).unwrap(), 1).unwrap();
        assert!(close_rel(p.value, oracle_threshold), "year {}", p.year);
        assert!(!p.flagged);
    }
    let values: Vec<f64> = series.points.iter().map(|p| p.value).collect();
    let spread = values.iter().cloned().fold(f64::MIN, f64::max)
        - values.iter().cloned().fold(f64::MAX, f64::min);
    assert!(
        spread < 0.05,
        "stationary rates should give a nearly flat series, spread {spread}"
    );

    // Planted regime change: unification only gets harder once the
    // cross-citations stop.
    let split = two_era_corpus(1951, 2020, 2000, 4);
    let split_tops = split.ontology().top_fields();
    let series = kct_timeseries::<f64>(&split, &split_tops, 1, 2000..=2020).unwrap();
    for w in series.points.windows(2) {
        assert!(w[1].value >= w[0].value - 1e-12);
    }
    assert!(series.points.last().unwrap().value > series.points[0].value);
}

#[test]
fn stats_and_outputs_identical_across_thread_counts() {
    let corpus = generate_corpus(&small_params(37, 5_000)).unwrap();
    let year = corpus.year_span().unwrap().1;
    let fields = corpus.ontology().secondary_fields();

    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let index = build_inbound_index(&corpus.slice(year), &corpus);
            let stats = pairwise_collection_stats(&index, &corpus, &fields).unwrap();
            let matrix = distance_matrix::<f64>(&stats).unwrap();
            let mut csv = Vec::new();
            write_distance_csv(matrix.pair_rows(), &mut csv).unwrap();
            (stats.canonical_bytes(), csv)
        })
    };
    let (stats1, csv1) = run(1);
    let (stats8, csv8) = run(8);
    assert_eq!(stats1, stats8);
    assert_eq!(csv1, csv8);
}

#[test]
fn mst_cut_property_holds_on_random_graphs() {
    let mut rng = SplitMix64::new(41);
    for _ in 0..20 {
        let n = 8 + rng.next_below(7) as usize;
        let matrix = random_matrix(&mut rng, n, 0.05, 0.95);
        let graph = graph_from_matrix(&matrix);
        let mst = kruskal_mst(&graph);
        assert_eq!(mst.len(), n - 1);
        let mst_set: HashSet<usize> = mst.iter().copied().collect();

        for &cut_edge in &mst {
            // Components of the MST with one edge removed.
            let mut comp = (0..n).collect::<Vec<usize>>();
            fn find(comp: &mut Vec<usize>, mut x: usize) -> usize {
                while comp[x] != x {
                    comp[x] = comp[comp[x]];
                    x = comp[x];
                }
                x
            }
            for &m in &mst {
                if m != cut_edge {
                    let (a, b) = (graph.edges()[m].a, graph.edges()[m].b);
                    let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
                    comp[ra] = rb;
                }
            }
            let w_cut = graph.edges()[cut_edge].weight;
            for (idx, e) in graph.edges().iter().enumerate() {
                if mst_set.contains(&idx) {
                    continue;
                }
                if find(&mut comp, e.a) != find(&mut comp, e.b) {
                    assert!(
                        e.weight >= w_cut,
                        "replacing a cut edge must not reduce total weight"
                    );
                }
            }
        }
    }
}

#[test]
fn augmentation_picks_exactly_the_smallest_remaining() {
    let mut rng = SplitMix64::new(43);
    for _ in 0..20 {
        let n = 6 + rng.next_below(7) as usize;
        let matrix = random_matrix(&mut rng, n, 0.05, 0.95);
        let graph = graph_from_matrix(&matrix);
        let mst = kruskal_mst(&graph);
        let target = rng.next_below(n as u64) as f64;
        let aug = augment_to_degree(&graph, &mst, target);

        let mst_set: HashSet<usize> = mst.iter().copied().collect();
        let extras: Vec<usize> = (0..graph.edges().len())
            .filter(|i| aug.edges()[*i].in_augmented && !mst_set.contains(i))
            .collect();

        let mut remaining: Vec<usize> =
            (0..graph.edges().len()).filter(|i| !mst_set.contains(i)).collect();
        remaining.sort_by(|&x, &y| {
            let (ex, ey) = (&graph.edges()[x], &graph.edges()[y]);
            ex.weight
                .partial_cmp(&ey.weight)
                .unwrap()
                .then(ex.a.cmp(&ey.a))
                .then(ex.b.cmp(&ey.b))
        });
        let expected: HashSet<usize> = remaining[..extras.len()].iter().copied().collect();
        assert_eq!(extras.iter().copied().collect::<HashSet<_>>(), expected);

        // Minimality: the target was reached, and not before.
        let avg = aug.augmented_avg_degree();
        let max_avg = (n as f64) - 1.0;
        if target <= max_avg {
            assert!(avg >= target);
            if !extras.is_empty() {
                let prev = 2.0 * (mst.len() + extras.len() - 1) as f64 / n as f64;
                assert!(prev < target);
            }
        } else {
            assert_eq!(aug.augmented_edges().count(), graph.edges().len());
        }
    }
}

#[test]
fn merge_profile_agrees_with_fine_grid_sweep() {
    let mut rng = SplitMix64::new(47);
    for _ in 0..5 {
        let matrix = random_matrix(&mut rng, 10, 0.05, 0.95);
        let profile = merge_profile(&matrix).unwrap();
        let weights = profile.mst_weights();
        for step in 0..=10_000u32 {
            let kct = step as f64 * 1e-4;
            let expected = 10 - weights.iter().filter(|&&w| w < kct).count();
            let got = clusters_at(&matrix, kct).unwrap().n_clusters();
            assert_eq!(got, expected, "kct={kct}");
        }
    }
}

#[test]
fn profile_counts_hold_between_breakpoints() {
    let mut rng = SplitMix64::new(53);
    for _ in 0..20 {
        let n = 3 + rng.next_below(10) as usize;
        let matrix = random_matrix(&mut rng, n, 0.05, 0.95);
        let profile = merge_profile(&matrix).unwrap();
        let bps = profile.breakpoints();
        for (i, bp) in bps.iter().enumerate() {
            let hi = bps.get(i + 1).map(|b| b.kct).unwrap_or(1.0);
            for probe in [bp.kct + (hi - bp.kct) / 2.0, hi] {
                let p = clusters_at(&matrix, probe).unwrap();
                assert_eq!(p.n_clusters(), bp.cluster_count);
            }
            assert_eq!(profile.partition_after(i).groups.len(), bp.cluster_count);
        }
        // Below the first breakpoint everything is a singleton.
        assert_eq!(clusters_at(&matrix, bps[0].kct).unwrap().n_clusters(), n);
    }
}

#[test]
fn direction_toggle_changes_the_reading() {
    // 1 cites 2 (tagged A); 3 (tagged B) cites 1: inbound X_A = {1},
    // outbound X_A = {2}... checked through the public stats surface.
    let corpus = ingest_from_strings(
        "p1\t2000\tarticle\t\np2\t1999\tarticle\t1\np3\t2001\tarticle\t2\n",
        "p1\tp2\np3\tp1\n",
        "1\tA\t0\t\n2\tB\t0\t\n",
    );
    let slice = corpus.slice(2001);
    let inbound = build_inbound_index(&slice, &corpus);
    let xa_in = field_collection(&inbound, &corpus, FieldId(1)).unwrap();
    assert_eq!(xa_in.iter().collect::<Vec<_>>(), vec![0]); // p1

    let outbound = kdist_core::index::build_outbound_index(&slice, &corpus);
    let sets =
        kdist_core::index::field_collections_outbound(&outbound, &corpus, &[FieldId(1)]).unwrap();
    assert!(sets[0].is_empty()); // A's only paper (p2) cites nothing

    let sets =
        kdist_core::index::field_collections_outbound(&outbound, &corpus, &[FieldId(2)]).unwrap();
    assert_eq!(sets[0].iter().collect::<Vec<_>>(), vec![0]); // B's p3 cites p1
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn count_tuple() -> impl Strategy<Value = (u64, u64, u64, u64)> {
        (1u64..=1_000_000)
            .prop_flat_map(|g| (0..=g, Just(g)))
            .prop_flat_map(|(sx, g)| (Just(sx), 0..=g, Just(g)))
            .prop_flat_map(|(sx, sy, g)| (Just(sx), Just(sy), 0..=sx.min(sy), Just(g)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn kd_stays_in_unit_range_and_is_symmetric((sx, sy, sxy, g) in count_tuple()) {
            let a = knowledge_distance::<f64>(sx, sy, sxy, g).unwrap();
            let b = knowledge_distance::<f64>(sy, sx, sxy, g).unwrap();
            prop_assert!((0.0..=1.0).contains(&a.value));
            prop_assert_eq!(a.value, b.value);
            prop_assert_eq!(a.flag, b.flag);
            // kr and the bins agree: Family exactly when kr >= 0.5.
            let kr = knowledge_relevance(a.value).unwrap();
            let family = classify(a.value).unwrap() == RelationClass::Family;
            prop_assert_eq!(family, kr >= 0.5);
        }

        #[test]
        fn kd_decreases_as_overlap_grows((sx, sy, sxy, g) in count_tuple()) {
            prop_assume!(sxy + 1 <= sx.min(sy));
            let lo = knowledge_distance::<f64>(sx, sy, sxy, g).unwrap();
            let hi = knowledge_distance::<f64>(sx, sy, sxy + 1, g).unwrap();
            prop_assert!(hi.value <= lo.value);
            if lo.flag.is_none() && hi.flag.is_none() && lo.value < 1.0 && sxy > 0 {
                prop_assert!(hi.value < lo.value);
            }
        }

        #[test]
        fn partitions_only_see_the_weight_order(seed in 0u64..1_000) {
            let mut rng = SplitMix64::new(seed);
            let n = 3 + rng.next_below(10) as usize;
            let matrix = random_matrix(&mut rng, n, 0.05, 0.95);
            // Strictly increasing maps on [0,1]: squaring and sqrt.
            let squared: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| matrix.kd(i, j).powi(2)).collect())
                .collect();
            let tmatrix =
                DistanceMatrix::from_values(matrix.fields().to_vec(), 2020, &squared);
            for step in 0..=20 {
                let kct = step as f64 / 20.0;
                let a = clusters_at(&matrix, kct).unwrap();
                let b = clusters_at(&tmatrix, kct * kct).unwrap();
                prop_assert_eq!(&a.groups, &b.groups);
            }
        }

        #[test]
        fn coarsening_is_monotone_in_the_threshold(seed in 0u64..1_000) {
            let mut rng = SplitMix64::new(seed);
            let n = 2 + rng.next_below(12) as usize;
            let matrix = random_matrix(&mut rng, n, 0.05, 0.95);
            let mut last = n;
            for step in 0..=50 {
                let kct = step as f64 / 50.0;
                let p = clusters_at(&matrix, kct).unwrap();
                prop_assert!(p.n_clusters() <= last);
                last = p.n_clusters();
                // Refinement: every group at a smaller threshold sits
                // inside one group at a larger one.
                if step == 25 {
                    let coarse = clusters_at(&matrix, 1.0).unwrap();
                    for g in &p.groups {
                        prop_assert!(coarse
                            .groups
                            .iter()
                            .any(|cg| g.iter().all(|f| cg.contains(f))));
                    }
                }
            }
            prop_assert_eq!(clusters_at(&matrix, 0.0).unwrap().n_clusters(), n);
            prop_assert_eq!(clusters_at(&matrix, 1.0).unwrap().n_clusters(), 1);
        }
    }
}

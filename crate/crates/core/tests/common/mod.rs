//! Shared fixtures and independent brute-force oracles for the
//! integration and acceptance suites. Everything here goes through public
//! APIs only, and the oracles deliberately avoid the code paths they
//! check.

#![allow(dead_code)]

use std::io::Write;
use std::path::PathBuf;

use kdist_core::corpus::{ingest, Corpus, IngestOptions};
use kdist_core::distance::DistanceMatrix;
use kdist_core::space::SpaceGraph;
use kdist_core::synth::SplitMix64;
use kdist_core::FieldId;

/// Writes the three corpus files from strings and ingests them.
pub fn ingest_from_strings(papers: &str, citations: &str, fields: &str) -> Corpus {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| -> PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    };
    let papers = write("papers.tsv", papers);
    let citations = write("citations.tsv", citations);
    let fields = write("fields.tsv", fields);
    ingest(&papers, &citations, &fields, &IngestOptions::default()).unwrap()
}

/// The worked 8-paper example: papers 1,2 in field A (id 1), paper 3 in
/// field B (id 2), citers 4..7, bystander 8; X_A = {4,5,7}, X_B = {5,6,7},
/// |G| = 8.
pub fn t1_corpus() -> Corpus {
    let mut papers = String::new();
    for i in 1..=8 {
        let tags = match i {
            1 | 2 => "1",
            3 => "2",
            _ => "",
        };
        papers.push_str(&format!("p{i}\t2000\tarticle\t{tags}\n"));
    }
    let citations = "p4\tp1\np5\tp1\np5\tp3\np6\tp3\np7\tp2\np7\tp3\n";
    let fields = "1\tA\t0\t\n2\tB\t0\t\n";
    ingest_from_strings(&papers, citations, fields)
}

/// Two planted blocks with cross-citations that stop after `cutoff_year`.
/// Per year and block: `cohort` papers; each paper cites two same-block
/// papers of the previous year, plus one previous-year paper of the other
/// block while its year is at or before the cutoff. Up to the cutoff
/// every citer links into both blocks, so kd(A, B) is exactly 0 there; it
/// can only grow once the cross-links stop.
pub fn two_era_corpus(first_year: i32, last_year: i32, cutoff_year: i32, cohort: u32) -> Corpus {
    assert!(cohort >= 2);
    let fields = "1\tA\t0\t\n2\tB\t0\t\n10\tA1\t1\t1\n20\tB1\t1\t2\n";
    let ext = |year: i32, block: u32, k: u32| format!("p{year}b{block}n{k:02}");
    let mut papers = String::new();
    let mut citations = String::new();
    for year in first_year..=last_year {
        for block in 0..2u32 {
            let tag = if block == 0 { 10 } else { 20 };
            for k in 0..cohort {
                papers.push_str(&format!("{}\t{year}\tarticle\t{tag}\n", ext(year, block, k)));
                if year > first_year {
                    citations.push_str(&format!(
                        "{}\t{}\n",
                        ext(year, block, k),
                        ext(year - 1, block, k % cohort)
                    ));
                    citations.push_str(&format!(
                        "{}\t{}\n",
                        ext(year, block, k),
                        ext(year - 1, block, (k + 1) % cohort)
                    ));
                    if year <= cutoff_year {
                        citations.push_str(&format!(
                            "{}\t{}\n",
                            ext(year, block, k),
                            ext(year - 1, 1 - block, k % cohort)
                        ));
                    }
                }
            }
        }
    }
    ingest_from_strings(&papers, &citations, fields)
}

/// Random symmetric matrix with entries in `(lo, hi)` and zero diagonal.
pub fn random_matrix(rng: &mut SplitMix64, n: usize, lo: f64, hi: f64) -> DistanceMatrix<f64> {
    let fields: Vec<FieldId> = (1..=n as u64).map(FieldId).collect();
    let mut values = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = lo + (hi - lo) * rng.next_f64();
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    DistanceMatrix::from_values(fields, 2020, &values)
}

/// Minimum spanning-tree (or forest) weight by exhaustive enumeration of
/// all (n-1)-edge subsets; independent of the Kruskal path. Weights must
/// be dyadic rationals if exact sum comparison is wanted.
pub fn brute_force_mst_weight(graph: &SpaceGraph<f64>) -> f64 {
    let n = graph.n_nodes();
    let edges = graph.edges();
    if n <= 1 {
        return 0.0;
    }
    let k = n - 1;
    assert!(edges.len() >= k, "connected graphs only");
    let mut pick: Vec<usize> = (0..k).collect();
    let mut best = f64::INFINITY;
    loop {
        // Spanning check by DFS-free union: count successful merges.
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut merges = 0;
        let mut weight = 0.0;
        for &ei in &pick {
            let e = &edges[ei];
            let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
            if ra != rb {
                parent[ra] = rb;
                merges += 1;
            }
            weight += e.weight;
        }
        if merges == k && weight < best {
            best = weight;
        }

        // Next k-combination of edge indexes.
        let m = edges.len();
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] != i + m - k {
                break;
            }
        }
        pick[i] += 1;
        for j in (i + 1)..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

/// Relative agreement at 1e-12, in the sense used throughout: exact for
/// exact values, relative for the rest.
pub fn close_rel(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

//! Threshold clustering over a distance matrix: two fields are unified
//! whenever their distance is strictly below the consilience threshold
//! `kct`, and clusters are the connected components of that relation
//! (single linkage, so the merge structure is exactly the MST of the
//! matrix).

use std::io::Write;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Corpus, FieldId};
use crate::distance::{distance_matrix, DistanceMatrix, TimePoint, TimeSeries};
use crate::error::{Error, Result};
use crate::index::{build_inbound_index, pairwise_collection_stats};
use crate::scalar::Real;
use crate::space::UnionFind;

/// A partition of the fields at one threshold. Groups are disjoint, cover
/// every field, and are ordered by their smallest member; members ascend.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition<T: Real = f64> {
    pub kct: T,
    pub groups: Vec<Vec<FieldId>>,
}

impl<T: Real> Partition<T> {
    pub fn n_clusters(&self) -> usize {
        self.groups.len()
    }

    /// `{"kct": …, "groups": [[…]]}`
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        #[derive(Serialize)]
        struct Bridge<'a> {
            kct: f64,
            groups: &'a [Vec<FieldId>],
        }
        serde_json::to_writer_pretty(
            w,
            &Bridge {
                kct: self.kct.to_f64().unwrap(),
                groups: &self.groups,
            },
        )
        .map_err(|e| Error::InvalidInput(format!("partition JSON write failed: {e}")))
    }

    /// Flat `field,cluster_index` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io_err = |source| Error::Io {
            path: "<partition csv>".into(),
            source,
        };
        writeln!(w, "field,cluster_index").map_err(io_err)?;
        for (ci, group) in self.groups.iter().enumerate() {
            for f in group {
                writeln!(w, "{f},{ci}").map_err(io_err)?;
            }
        }
        Ok(())
    }
}

fn groups_from_components(fields: &[FieldId], uf: &mut UnionFind) -> Vec<Vec<FieldId>> {
    let n = fields.len();
    let mut by_root: Vec<Vec<FieldId>> = vec![Vec::new(); n];
    for i in 0..n {
        by_root[uf.find(i as u32) as usize].push(fields[i]);
    }
    // Members ascend because we scan in field order; the union-find root
    // is arbitrary, so order groups by smallest member explicitly.
    by_root.retain(|g| !g.is_empty());
    by_root.sort_by_key(|g| g[0]);
    by_root
}

/// Connected components of the `kd < kct` relation (strict inequality).
pub fn clusters_at<T: Real>(matrix: &DistanceMatrix<T>, kct: T) -> Result<Partition<T>> {
    if kct < T::zero() || kct > T::one() || kct.is_nan() {
        return Err(Error::OutOfRange(kct.to_f64().unwrap_or(f64::NAN)));
    }
    let n = matrix.n_fields();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if matrix.kd(i, j) < kct {
                uf.union(i as u32, j as u32);
            }
        }
    }
    Ok(Partition {
        kct,
        groups: groups_from_components(matrix.fields(), &mut uf),
    })
}

/// One merge event: at thresholds just above `kct` the fields joined by
/// `merges` become unified, leaving `cluster_count` clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakpoint<T> {
    pub kct: T,
    pub cluster_count: usize,
    pub merges: Vec<(FieldId, FieldId)>,
}

/// The merge structure of a matrix: breakpoints at the distinct MST edge
/// weights, ascending. Equal-weight merges collapse into one breakpoint.
///
/// Convention: `clusters_at` uses strict inequality, so evaluating it at
/// exactly a breakpoint value still yields the pre-merge count; the
/// breakpoint is the infimum of the thresholds that realize its count.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeProfile<T: Real = f64> {
    fields: Vec<FieldId>,
    breakpoints: Vec<Breakpoint<T>>,
    /// MST edges as (i, j, weight) node-index triples, ascending by
    /// (weight, i, j); kept for partition reconstruction.
    mst_edges: Vec<(usize, usize, T)>,
}

/// Runs Kruskal over the matrix and folds the selected edges into
/// breakpoints.
pub fn merge_profile<T: Real>(matrix: &DistanceMatrix<T>) -> Result<MergeProfile<T>> {
    let n = matrix.n_fields();
    if n < 2 {
        return Err(Error::InvalidInput(
            "a merge profile needs at least 2 fields".into(),
        ));
    }
    let mut order: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    order.sort_by(|&(ai, aj), &(bi, bj)| {
        matrix
            .kd(ai, aj)
            .partial_cmp(&matrix.kd(bi, bj))
            .expect("matrix values are never NaN")
            .then(ai.cmp(&bi))
            .then(aj.cmp(&bj))
    });

    let mut uf = UnionFind::new(n);
    let mut mst_edges = Vec::with_capacity(n - 1);
    for (i, j) in order {
        if uf.union(i as u32, j as u32) {
            mst_edges.push((i, j, matrix.kd(i, j)));
            if mst_edges.len() == n - 1 {
                break;
            }
        }
    }

    let fields = matrix.fields().to_vec();
    let mut breakpoints: Vec<Breakpoint<T>> = Vec::new();
    let mut count = n;
    for &(i, j, w) in &mst_edges {
        count -= 1;
        match breakpoints.last_mut() {
            Some(bp) if bp.kct == w => {
                bp.cluster_count = count;
                bp.merges.push((fields[i], fields[j]));
            }
            _ => breakpoints.push(Breakpoint {
                kct: w,
                cluster_count: count,
                merges: vec![(fields[i], fields[j])],
            }),
        }
    }

    Ok(MergeProfile {
        fields,
        breakpoints,
        mst_edges,
    })
}

impl<T: Real> MergeProfile<T> {
    pub fn fields(&self) -> &[FieldId] {
        &self.fields
    }

    pub fn n_fields(&self) -> usize {
        self.fields.len()
    }

    /// Ascending by threshold, cluster count strictly decreasing.
    pub fn breakpoints(&self) -> &[Breakpoint<T>] {
        &self.breakpoints
    }

    /// MST edge weights in the selection order (ascending).
    pub fn mst_weights(&self) -> Vec<T> {
        self.mst_edges.iter().map(|&(_, _, w)| w).collect()
    }

    /// The partition realized once the breakpoint has merged: components
    /// of the MST edges with weight ≤ the breakpoint value. Labeled with
    /// the breakpoint threshold.
    pub fn partition_after(&self, breakpoint: usize) -> Partition<T> {
        let bp = &self.breakpoints[breakpoint];
        let mut uf = UnionFind::new(self.fields.len());
        for &(i, j, w) in &self.mst_edges {
            if w <= bp.kct {
                uf.union(i as u32, j as u32);
            }
        }
        Partition {
            kct: bp.kct,
            groups: groups_from_components(&self.fields, &mut uf),
        }
    }

    /// `kct,cluster_count,merging_pairs` rows, pairs as `a-b;c-d`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io_err = |source| Error::Io {
            path: "<profile csv>".into(),
            source,
        };
        writeln!(w, "kct,cluster_count,merging_pairs").map_err(io_err)?;
        for bp in &self.breakpoints {
            let pairs = bp
                .merges
                .iter()
                .map(|(a, b)| format!("{a}-{b}"))
                .collect::<Vec<_>>()
                .join(";");
            writeln!(w, "{},{},{}", bp.kct, bp.cluster_count, pairs).map_err(io_err)?;
        }
        Ok(())
    }
}

/// The infimum threshold at which the cluster count reaches `k` or fewer.
/// This is a breakpoint label: by the strict-inequality convention,
/// `clusters_at` at exactly this value still yields the pre-merge count.
/// `k = n` returns 0 (satisfied before any merge).
pub fn threshold_for_count<T: Real>(profile: &MergeProfile<T>, k: usize) -> Result<T> {
    let n = profile.n_fields();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "cluster count {k} outside 1..={n}"
        )));
    }
    if k == n {
        return Ok(T::zero());
    }
    profile
        .breakpoints
        .iter()
        .find(|bp| bp.cluster_count <= k)
        .map(|bp| bp.kct)
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "cluster count never reaches {k}; the graph splits into {} components",
                profile.breakpoints.last().map_or(n, |bp| bp.cluster_count)
            ))
        })
}

/// threshold_for_count per year slice, running the whole pipeline
/// (slice → index → stats → matrix → profile) for each year, in parallel.
/// Years where any field's collection is empty are flagged.
pub fn kct_timeseries<T: Real>(
    corpus: &Corpus,
    fields: &[FieldId],
    k: usize,
    years: RangeInclusive<i32>,
) -> Result<TimeSeries<T>> {
    if years.is_empty() {
        return Err(Error::InvalidInput("empty year range".into()));
    }
    let points: Vec<TimePoint<T>> = years
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|year| {
            let slice = corpus.slice(year);
            let index = build_inbound_index(&slice, corpus);
            let stats = pairwise_collection_stats(&index, corpus, fields)?;
            let flagged = stats.sizes.iter().any(|&s| s == 0);
            let matrix = distance_matrix::<T>(&stats)?;
            let profile = merge_profile(&matrix)?;
            Ok(TimePoint {
                year,
                value: threshold_for_count(&profile, k)?,
                flagged,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TimeSeries {
        label: format!("kct(k={k})"),
        points,
    })
}

/// `year,k,kct,flagged` rows.
pub fn write_kct_series_csv<T: Real, W: Write>(
    series: &TimeSeries<T>,
    k: usize,
    mut w: W,
) -> Result<()> {
    let io_err = |source| Error::Io {
        path: "<kct series csv>".into(),
        source,
    };
    writeln!(w, "year,k,kct,flagged").map_err(io_err)?;
    for p in &series.points {
        writeln!(w, "{},{},{},{}", p.year, k, p.value, p.flagged).map_err(io_err)?;
    }
    Ok(())
}

/// Triples where both legs are Family but the endpoints land beyond
/// Neighbor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    /// Ordered-middle triples (A, B, C) with A < C by field id satisfying
    /// kd(A,B) ≤ 0.5 and kd(B,C) ≤ 0.5.
    pub examined: u64,
    /// The subset with kd(A,C) > 0.7.
    pub violations: Vec<(FieldId, FieldId, FieldId)>,
}

/// Checks how often Family relations fail to chain: A~B and B~C in Family
/// should leave A and C at least Neighbors. Exceptions are reported,
/// never enforced.
pub fn family_transitivity_audit<T: Real>(matrix: &DistanceMatrix<T>) -> Result<AuditReport> {
    let n = matrix.n_fields();
    if n < 3 {
        return Err(Error::InvalidInput(
            "the transitivity audit needs at least 3 fields".into(),
        ));
    }
    let family = T::from_f64(0.5).unwrap();
    let neighbor = T::from_f64(0.7).unwrap();
    let fields = matrix.fields();
    let mut examined = 0u64;
    let mut violations = Vec::new();
    for b in 0..n {
        for a in 0..n {
            if a == b || matrix.kd(a, b) > family {
                continue;
            }
            for c in (a + 1)..n {
                if c == b || matrix.kd(b, c) > family {
                    continue;
                }
                examined += 1;
                if matrix.kd(a, c) > neighbor {
                    violations.push((fields[a], fields[b], fields[c]));
                }
            }
        }
    }
    Ok(AuditReport {
        examined,
        violations,
    })
}

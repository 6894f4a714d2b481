//! The knowledge-distance measure and everything computed directly from
//! it: relevance, relation classes, per-slice distance matrices, and
//! pair time series.
//!
//! For two fields with citer collections X and Y inside a universe G,
//!
//! ```text
//! kd(x, y) = (log max(|X|,|Y|) − log |X∩Y|) / (log |G| − log min(|X|,|Y|))
//! ```
//!
//! clamped into [0, 1]. The measure is a ratio of log differences, so it
//! does not depend on the log base, and it only sees relative set sizes,
//! which keeps it stable as the corpus grows.

use std::io::Write;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, FieldId};
use crate::error::{Error, Result};
use crate::index::{build_inbound_index, pairwise_collection_stats, CollectionStats};
use crate::scalar::Real;

/// Relation bins over the distance value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationClass {
    Family,
    Neighbor,
    Stranger,
    Alien,
}

impl RelationClass {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationClass::Family => "family",
            RelationClass::Neighbor => "neighbor",
            RelationClass::Stranger => "stranger",
            RelationClass::Alien => "alien",
        }
    }
}

impl std::fmt::Display for RelationClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why a distance value was fixed by rule rather than by the formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegenerateCase {
    /// |X| or |Y| is zero; kd is reported as 1.
    EmptyCollection,
    /// min(|X|,|Y|) equals |G|, so the denominator vanishes; kd is 0 when
    /// the numerator vanishes too, else 1.
    UniverseCollection,
}

impl DegenerateCase {
    pub fn as_str(self) -> &'static str {
        match self {
            DegenerateCase::EmptyCollection => "empty_collection",
            DegenerateCase::UniverseCollection => "universe_collection",
        }
    }
}

/// One evaluated distance. `raw` is the literal IEEE evaluation of the
/// formula (it may be infinite for disjoint collections, or NaN in the
/// degenerate cases); `value` is the normative clamped result in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kd<T> {
    pub raw: T,
    pub value: T,
    pub flag: Option<DegenerateCase>,
}

/// Evaluates kd from the four counts.
///
/// Preconditions (violations are errors, never silently clamped):
/// `sxy ≤ min(sx, sy)`, `max(sx, sy) ≤ g`, `1 ≤ g ≤ 2^53`.
///
/// Fixed cases: disjoint collections give 1 (the clamp limit); an empty
/// collection gives 1, flagged; a collection equal to the whole universe
/// gives 0 if the numerator is also zero, else 1, flagged.
pub fn knowledge_distance<T: Real>(sx: u64, sy: u64, sxy: u64, g: u64) -> Result<Kd<T>> {
    let mn = sx.min(sy);
    let mx = sx.max(sy);
    let invalid = |reason| Error::InvalidCounts {
        sx,
        sy,
        sxy,
        g,
        reason,
    };
    if g == 0 {
        return Err(invalid("universe is empty"));
    }
    if g > (1u64 << 53) {
        return Err(invalid("universe exceeds 2^53; counts no longer exact"));
    }
    if sxy > mn {
        return Err(invalid("intersection larger than the smaller collection"));
    }
    if mx > g {
        return Err(invalid("collection larger than the universe"));
    }

    let ln = |v: u64| T::from_u64(v).unwrap().ln();
    let raw = (ln(mx) - ln(sxy)) / (ln(g) - ln(mn));

    let kd = if mn == 0 {
        Kd {
            raw,
            value: T::one(),
            flag: Some(DegenerateCase::EmptyCollection),
        }
    } else if mn == g {
        let value = if mx == sxy { T::zero() } else { T::one() };
        Kd {
            raw,
            value,
            flag: Some(DegenerateCase::UniverseCollection),
        }
    } else if sxy == 0 {
        Kd {
            raw,
            value: T::one(),
            flag: None,
        }
    } else {
        Kd {
            raw,
            value: if raw > T::one() { T::one() } else { raw },
            flag: None,
        }
    };
    Ok(kd)
}

/// kr = 1 − kd.
pub fn knowledge_relevance<T: Real>(kd: T) -> Result<T> {
    check_unit(kd)?;
    Ok(T::one() - kd)
}

/// Bins a distance value. Upper boundaries are inclusive: 0.5 is still
/// Family, 0.7 still Neighbor, 0.9 still Stranger.
pub fn classify<T: Real>(kd: T) -> Result<RelationClass> {
    check_unit(kd)?;
    let t = |v: f64| T::from_f64(v).unwrap();
    Ok(if kd <= t(0.5) {
        RelationClass::Family
    } else if kd <= t(0.7) {
        RelationClass::Neighbor
    } else if kd <= t(0.9) {
        RelationClass::Stranger
    } else {
        RelationClass::Alien
    })
}

fn check_unit<T: Real>(v: T) -> Result<()> {
    if v < T::zero() || v > T::one() || v.is_nan() {
        return Err(Error::OutOfRange(v.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

/// Symmetric matrix of kd values over an ordered field list for one
/// year slice, along with the counts it was computed from.
#[derive(Debug, Clone)]
pub struct DistanceMatrix<T: Real = f64> {
    fields: Vec<FieldId>,
    year: i32,
    universe: u64,
    sizes: Vec<u64>,
    /// Condensed upper triangle including the diagonal, row-major.
    entries: Vec<Kd<T>>,
    intersections: Vec<u64>,
}

/// Index of `(i, j)` with `i <= j` in a condensed upper triangle that
/// includes the diagonal.
fn tri_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * (i + 1) / 2 + j
}

/// Applies the distance formula to every pair (and the diagonal, a free
/// self-test: it must be 0 for any field with 0 < |X| < |G|).
pub fn distance_matrix<T: Real>(stats: &CollectionStats) -> Result<DistanceMatrix<T>> {
    let n = stats.n_fields();
    let g = stats.universe;
    let mut entries = Vec::with_capacity(n * (n + 1) / 2);
    let mut intersections = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let sxy = stats.intersection(i, j);
            entries.push(knowledge_distance(stats.size(i), stats.size(j), sxy, g)?);
            intersections.push(sxy);
        }
    }
    Ok(DistanceMatrix {
        fields: stats.fields.clone(),
        year: stats.year,
        universe: g,
        sizes: stats.sizes.clone(),
        entries,
        intersections,
    })
}

impl<T: Real> DistanceMatrix<T> {
    pub fn n_fields(&self) -> usize {
        self.fields.len()
    }

    /// Ascending by field id.
    pub fn fields(&self) -> &[FieldId] {
        &self.fields
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    pub fn size(&self, i: usize) -> u64 {
        self.sizes[i]
    }

    pub fn field_pos(&self, f: FieldId) -> Option<usize> {
        self.fields.binary_search(&f).ok()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Kd<T> {
        &self.entries[tri_index(self.fields.len(), i.min(j), i.max(j))]
    }

    /// The clamped distance value; symmetric by construction.
    pub fn kd(&self, i: usize, j: usize) -> T {
        self.entry(i, j).value
    }

    pub fn intersection(&self, i: usize, j: usize) -> u64 {
        self.intersections[tri_index(self.fields.len(), i.min(j), i.max(j))]
    }

    /// Builds a matrix directly from per-pair values; intended for tests
    /// and for threshold analyses that start from an externally supplied
    /// matrix. `values[i][j]` must be symmetric with a zero diagonal.
    pub fn from_values(fields: Vec<FieldId>, year: i32, values: &[Vec<T>]) -> DistanceMatrix<T> {
        let n = fields.len();
        assert!(values.len() == n && values.iter().all(|r| r.len() == n));
        let mut entries = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                entries.push(Kd {
                    raw: values[i][j],
                    value: values[i][j],
                    flag: None,
                });
            }
        }
        DistanceMatrix {
            fields,
            year,
            universe: 0,
            sizes: vec![0; n],
            entries,
            intersections: vec![0; n * (n + 1) / 2],
        }
    }

    /// One output row per unordered pair, `(field_x, field_y)` ascending.
    pub fn pair_rows(&self) -> impl Iterator<Item = PairRow<T>> + '_ {
        let n = self.fields.len();
        (0..n).flat_map(move |i| {
            ((i + 1)..n).map(move |j| PairRow {
                x: self.fields[i],
                y: self.fields[j],
                year: self.year,
                size_x: self.sizes[i],
                size_y: self.sizes[j],
                intersection: self.intersection(i, j),
                universe: self.universe,
                kd: *self.entry(i, j),
            })
        })
    }
}

/// One fully-annotated pair distance, as written to the CSV outputs.
#[derive(Debug, Clone, Copy)]
pub struct PairRow<T> {
    pub x: FieldId,
    pub y: FieldId,
    pub year: i32,
    pub size_x: u64,
    pub size_y: u64,
    pub intersection: u64,
    pub universe: u64,
    pub kd: Kd<T>,
}

pub const DISTANCE_CSV_HEADER: &str =
    "field_x,field_y,year,size_x,size_y,intersection,universe,kd_raw,kd,kr,relation,flag";

/// Writes pair rows in the stable `(year, field_x, field_y)` order the
/// caller supplies them in.
pub fn write_distance_csv<T: Real, W: Write>(
    rows: impl Iterator<Item = PairRow<T>>,
    mut w: W,
) -> Result<()> {
    let io_err = |source| Error::Io {
        path: "<distance csv>".into(),
        source,
    };
    writeln!(w, "{DISTANCE_CSV_HEADER}").map_err(io_err)?;
    for r in rows {
        let kr = T::one() - r.kd.value;
        let relation = classify(r.kd.value).expect("matrix values are in range");
        let flag = r.kd.flag.map(DegenerateCase::as_str).unwrap_or("");
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.x, r.y, r.year, r.size_x, r.size_y, r.intersection, r.universe, r.kd.raw,
            r.kd.value, kr, relation, flag
        )
        .map_err(io_err)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimePoint<T> {
    pub year: i32,
    pub value: T,
    /// Set when the value was degenerate that year (e.g. an empty
    /// collection).
    pub flagged: bool,
}

/// A named series of (year, value) points, years strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries<T = f64> {
    pub label: String,
    pub points: Vec<TimePoint<T>>,
}

/// kd(x, y) under each year slice. Years where either collection is empty
/// emit 1.0 with the point flagged.
pub fn distance_timeseries<T: Real>(
    corpus: &Corpus,
    x: FieldId,
    y: FieldId,
    years: RangeInclusive<i32>,
) -> Result<TimeSeries<T>> {
    let rows = distance_timeseries_rows(corpus, x, y, years)?;
    Ok(TimeSeries {
        label: format!("kd({x},{y})"),
        points: rows
            .iter()
            .map(|r| TimePoint {
                year: r.year,
                value: r.kd.value,
                flagged: r.kd.flag.is_some(),
            })
            .collect(),
    })
}

/// Same as [`distance_timeseries`] but keeps the full per-year counts for
/// CSV output. Years run the whole pipeline independently and in
/// parallel.
pub fn distance_timeseries_rows<T: Real>(
    corpus: &Corpus,
    x: FieldId,
    y: FieldId,
    years: RangeInclusive<i32>,
) -> Result<Vec<PairRow<T>>> {
    if years.is_empty() {
        return Err(Error::InvalidInput("empty year range".into()));
    }
    years
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|year| {
            let slice = corpus.slice(year);
            let index = build_inbound_index(&slice, corpus);
            let stats = pairwise_collection_stats(&index, corpus, &[x, y])?;
            let matrix = distance_matrix::<T>(&stats)?;
            let (i, j) = if x == y { (0, 0) } else { (0, 1) };
            Ok(PairRow {
                x,
                y,
                year,
                size_x: matrix.size(matrix.field_pos(x).unwrap()),
                size_y: matrix.size(matrix.field_pos(y).unwrap()),
                intersection: matrix.intersection(i, j),
                universe: matrix.universe(),
                kd: *matrix.entry(i, j),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kd64(sx: u64, sy: u64, sxy: u64, g: u64) -> Kd<f64> {
        knowledge_distance(sx, sy, sxy, g).unwrap()
    }

    #[test]
    fn base_invariant_example_is_exact() {
        // (log 16 − log 4) / (log 256 − log 8) = 2/5 in any base.
        let kd = kd64(16, 8, 4, 256);
        assert!((kd.value - 0.4).abs() < 1e-12);
        assert!(kd.flag.is_none());
    }

    #[test]
    fn identical_collections_are_at_distance_zero() {
        for n in [1u64, 7, 100] {
            let kd = kd64(n, n, n, 256);
            assert_eq!(kd.value, 0.0);
        }
    }

    #[test]
    fn clamp_applies_above_one() {
        let kd = kd64(50, 50, 1, 100);
        let raw = (50f64.ln() - 1f64.ln()) / (100f64.ln() - 50f64.ln());
        assert!((kd.raw - raw).abs() < 1e-12);
        assert!(raw > 5.6 && raw < 5.7);
        assert_eq!(kd.value, 1.0);
    }

    #[test]
    fn disjoint_collections_hit_the_clamp_limit() {
        let kd = kd64(30, 20, 0, 100);
        assert_eq!(kd.value, 1.0);
        assert!(kd.raw.is_infinite());
        assert!(kd.flag.is_none());
    }

    #[test]
    fn degenerate_cases_are_flagged() {
        let empty = kd64(0, 20, 0, 100);
        assert_eq!(empty.value, 1.0);
        assert_eq!(empty.flag, Some(DegenerateCase::EmptyCollection));

        let full = kd64(100, 100, 100, 100);
        assert_eq!(full.value, 0.0);
        assert_eq!(full.flag, Some(DegenerateCase::UniverseCollection));

        let full_partial = kd64(100, 100, 60, 100);
        assert_eq!(full_partial.value, 1.0);
        assert_eq!(full_partial.flag, Some(DegenerateCase::UniverseCollection));
    }

    #[test]
    fn preconditions_error_instead_of_clamping() {
        assert!(knowledge_distance::<f64>(5, 5, 6, 100).is_err());
        assert!(knowledge_distance::<f64>(200, 5, 5, 100).is_err());
        assert!(knowledge_distance::<f64>(0, 0, 0, 0).is_err());
    }

    #[test]
    fn relevance_is_the_complement() {
        assert_eq!(knowledge_relevance(0.0f64).unwrap(), 1.0);
        assert_eq!(knowledge_relevance(1.0f64).unwrap(), 0.0);
        assert!((knowledge_relevance(0.4f64).unwrap() - 0.6).abs() < 1e-15);
        assert!(knowledge_relevance(1.5f64).is_err());
    }

    #[test]
    fn classification_boundaries_are_inclusive() {
        assert_eq!(classify(0.3f64).unwrap(), RelationClass::Family);
        assert_eq!(classify(0.5f64).unwrap(), RelationClass::Family);
        assert_eq!(classify(0.7f64).unwrap(), RelationClass::Neighbor);
        assert_eq!(classify(0.9f64).unwrap(), RelationClass::Stranger);
        assert_eq!(classify(0.95f64).unwrap(), RelationClass::Alien);
        assert!(classify(-0.1f64).is_err());
        assert!(classify(1.1f64).is_err());
    }

    #[test]
    fn works_in_f32_too() {
        let kd: Kd<f32> = knowledge_distance(16, 8, 4, 256).unwrap();
        assert!((kd.value - 0.4).abs() < 1e-6);
    }

    #[test]
    fn t1_matrix_matches_hand_value() {
        let c = crate::index::tests::t1_corpus();
        let idx = build_inbound_index(&c.slice(2000), &c);
        let stats = pairwise_collection_stats(&idx, &c, &[FieldId(1), FieldId(2)]).unwrap();
        let m = distance_matrix::<f64>(&stats).unwrap();
        let expected = (3f64.ln() - 2f64.ln()) / (8f64.ln() - 3f64.ln());
        assert!((m.kd(0, 1) - expected).abs() < 1e-12);
        assert_eq!(m.kd(0, 0), 0.0);
        assert_eq!(m.kd(1, 1), 0.0);
        assert_eq!(m.kd(1, 0), m.kd(0, 1));
    }

    #[test]
    fn timeseries_is_constant_zero_on_self_pair() {
        let c = crate::index::tests::t1_corpus();
        let ts = distance_timeseries::<f64>(&c, FieldId(1), FieldId(1), 2000..=2002).unwrap();
        assert_eq!(ts.points.len(), 3);
        for p in &ts.points {
            assert_eq!(p.value, 0.0);
            assert!(!p.flagged);
        }
    }

    #[test]
    fn timeseries_flags_empty_years() {
        let c = crate::index::tests::t1_corpus();
        // Field 3 has no tagged papers, so its collection is always empty.
        let ts = distance_timeseries::<f64>(&c, FieldId(1), FieldId(3), 2000..=2000).unwrap();
        assert_eq!(ts.points.len(), 1);
        assert_eq!(ts.points[0].value, 1.0);
        assert!(ts.points[0].flagged);
        assert!(distance_timeseries::<f64>(&c, FieldId(1), FieldId(3), 2001..=2000).is_err());
    }

    #[test]
    fn csv_rows_are_ordered_and_complete() {
        let c = crate::index::tests::t1_corpus();
        let idx = build_inbound_index(&c.slice(2000), &c);
        let stats =
            pairwise_collection_stats(&idx, &c, &[FieldId(3), FieldId(2), FieldId(1)]).unwrap();
        let m = distance_matrix::<f64>(&stats).unwrap();
        let mut out = Vec::new();
        write_distance_csv(m.pair_rows(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], DISTANCE_CSV_HEADER);
        assert_eq!(lines.len(), 4); // header + C(3,2) pairs
        assert!(lines[1].starts_with("1,2,2000,3,3,2,8,"));
        // The 1-3 and 2-3 pairs involve the empty collection of field 3.
        assert!(lines[2].contains("empty_collection"));
    }
}

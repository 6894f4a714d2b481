//! Inbound-citation index and per-field citer collections as compressed
//! integer sets. Everything here is built once per corpus slice and then
//! shared immutably; rebuild-per-slice is the contract.

mod snapshot;

use std::collections::HashMap;

use rayon::prelude::*;
use roaring::RoaringBitmap;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CorpusSlice, FieldId, PaperId};
use crate::error::{Error, Result};

pub use snapshot::{load_snapshot, save_snapshot, Snapshot};

/// Compressed set of dense paper ids. Iteration is ascending by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PaperSet {
    bits: RoaringBitmap,
}

impl PaperSet {
    pub fn new() -> PaperSet {
        PaperSet::default()
    }

    /// Builds from strictly ascending ids.
    pub fn from_ascending<I: IntoIterator<Item = PaperId>>(ids: I) -> PaperSet {
        let bits = RoaringBitmap::from_sorted_iter(ids).expect("ids must be ascending");
        PaperSet { bits }
    }

    pub fn insert(&mut self, id: PaperId) -> bool {
        self.bits.insert(id)
    }

    pub fn contains(&self, id: PaperId) -> bool {
        self.bits.contains(id)
    }

    pub fn len(&self) -> u64 {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = PaperId> + '_ {
        self.bits.iter()
    }

    pub fn intersection_len(&self, other: &PaperSet) -> u64 {
        self.bits.intersection_len(&other.bits)
    }

    pub fn is_subset(&self, other: &PaperSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub(crate) fn serialized_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.bits.serialized_size());
        self.bits
            .serialize_into(&mut buf)
            .expect("in-memory serialization cannot fail");
        buf
    }

    pub(crate) fn from_serialized(bytes: &[u8]) -> Result<PaperSet> {
        let bits = RoaringBitmap::deserialize_from(bytes)
            .map_err(|e| Error::Snapshot(format!("bad bitmap: {e}")))?;
        Ok(PaperSet { bits })
    }
}

impl FromIterator<PaperId> for PaperSet {
    fn from_iter<I: IntoIterator<Item = PaperId>>(iter: I) -> PaperSet {
        PaperSet {
            bits: iter.into_iter().collect(),
        }
    }
}

/// Exact cardinality of `a ∩ b`.
pub fn intersection_size(a: &PaperSet, b: &PaperSet) -> u64 {
    a.intersection_len(b)
}

/// Compressed sparse rows: `neighbors[offsets[j]..offsets[j+1]]` holds the
/// (ascending) adjacency list of paper `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Csr {
    offsets: Vec<u64>,
    neighbors: Vec<PaperId>,
}

impl Csr {
    fn row(&self, j: PaperId) -> &[PaperId] {
        let lo = self.offsets[j as usize] as usize;
        let hi = self.offsets[j as usize + 1] as usize;
        &self.neighbors[lo..hi]
    }

    /// Builds from `(src, dst)` pairs keyed by `key`, filling rows with the
    /// other endpoint. Edges are visited in their stored order; because the
    /// corpus keeps edges sorted by `(src, dst)`, rows keyed by `dst` come
    /// out ascending in `src`, and rows keyed by `src` ascending in `dst`.
    fn build(
        n: usize,
        edges: &[crate::corpus::CitationEdge],
        in_slice: impl Fn(PaperId) -> bool,
        key_dst: bool,
    ) -> Csr {
        let mut counts = vec![0u64; n + 1];
        for e in edges {
            if in_slice(e.src) && in_slice(e.dst) {
                let key = if key_dst { e.dst } else { e.src };
                counts[key as usize + 1] += 1;
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts;
        let mut cursor = offsets.clone();
        let mut neighbors = vec![0 as PaperId; offsets[n] as usize];
        for e in edges {
            if in_slice(e.src) && in_slice(e.dst) {
                let (key, other) = if key_dst {
                    (e.dst, e.src)
                } else {
                    (e.src, e.dst)
                };
                neighbors[cursor[key as usize] as usize] = other;
                cursor[key as usize] += 1;
            }
        }
        Csr { offsets, neighbors }
    }
}

/// Exact transpose of the citation adjacency restricted to one slice:
/// `citing_of(j)` lists every in-slice paper that cites `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InboundIndex {
    upto_year: i32,
    slice_size: u64,
    csr: Csr,
}

impl InboundIndex {
    pub fn upto_year(&self) -> i32 {
        self.upto_year
    }

    /// |G_y| of the slice the index was built for.
    pub fn slice_size(&self) -> u64 {
        self.slice_size
    }

    pub fn n_papers(&self) -> usize {
        self.csr.offsets.len() - 1
    }

    /// C_j as a sorted slice of citing paper ids.
    pub fn citing_of(&self, j: PaperId) -> &[PaperId] {
        self.csr.row(j)
    }

    /// C_j as a set.
    pub fn inbound_set(&self, j: PaperId) -> PaperSet {
        PaperSet::from_ascending(self.citing_of(j).iter().copied())
    }

    pub fn total_citations(&self) -> u64 {
        *self.csr.offsets.last().unwrap_or(&0)
    }

    /// Reconstructs the (sorted, deduplicated) outbound edge list; used to
    /// check that transposition is an involution.
    pub fn rebuild_outbound_edges(&self) -> Vec<crate::corpus::CitationEdge> {
        let mut edges = Vec::with_capacity(self.total_citations() as usize);
        for j in 0..self.n_papers() as PaperId {
            for &i in self.citing_of(j) {
                edges.push(crate::corpus::CitationEdge { src: i, dst: j });
            }
        }
        edges.sort_unstable();
        edges
    }

    pub(crate) fn into_raw(self) -> (i32, u64, Vec<u64>, Vec<PaperId>) {
        (
            self.upto_year,
            self.slice_size,
            self.csr.offsets,
            self.csr.neighbors,
        )
    }

    pub(crate) fn from_raw(
        upto_year: i32,
        slice_size: u64,
        offsets: Vec<u64>,
        neighbors: Vec<PaperId>,
    ) -> InboundIndex {
        InboundIndex {
            upto_year,
            slice_size,
            csr: Csr { offsets, neighbors },
        }
    }
}

/// Builds the inbound-citation index for a slice: the exact transpose of
/// the corpus citation adjacency with both endpoints inside the slice.
pub fn build_inbound_index(slice: &CorpusSlice, corpus: &Corpus) -> InboundIndex {
    let upto = slice.upto_year();
    let papers = corpus.papers();
    let csr = Csr::build(
        papers.len(),
        corpus.edges(),
        |p| papers[p as usize].year <= upto,
        true,
    );
    InboundIndex {
        upto_year: upto,
        slice_size: slice.size(),
        csr,
    }
}

/// Forward adjacency restricted to a slice; only used for the outbound
/// sensitivity reading of field collections.
#[derive(Debug, Clone)]
pub struct OutboundIndex {
    upto_year: i32,
    slice_size: u64,
    csr: Csr,
}

impl OutboundIndex {
    pub fn upto_year(&self) -> i32 {
        self.upto_year
    }

    pub fn slice_size(&self) -> u64 {
        self.slice_size
    }

    pub fn cited_by(&self, i: PaperId) -> &[PaperId] {
        self.csr.row(i)
    }
}

pub fn build_outbound_index(slice: &CorpusSlice, corpus: &Corpus) -> OutboundIndex {
    let upto = slice.upto_year();
    let papers = corpus.papers();
    let csr = Csr::build(
        papers.len(),
        corpus.edges(),
        |p| papers[p as usize].year <= upto,
        false,
    );
    OutboundIndex {
        upto_year: upto,
        slice_size: slice.size(),
        csr,
    }
}

/// Which linking direction defines a field collection. `Inbound` is the
/// normative reading (X is the set of papers citing into the field);
/// `Outbound` recomputes under the alternative reading for sensitivity
/// checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Inbound,
    Outbound,
}

/// X for one field: every in-slice paper that cites at least one in-slice
/// paper carrying the field (directly, or via a secondary child for a top
/// field).
pub fn field_collection(
    index: &InboundIndex,
    corpus: &Corpus,
    field: FieldId,
) -> Result<PaperSet> {
    let mut sets = field_collections(index, corpus, &[field])?;
    Ok(sets.pop().unwrap())
}

/// Builds the collections for several fields in one pass over the tagged
/// papers' citer lists.
pub fn field_collections(
    index: &InboundIndex,
    corpus: &Corpus,
    fields: &[FieldId],
) -> Result<Vec<PaperSet>> {
    collect_by_field(corpus, fields, index.upto_year, |q| index.citing_of(q))
}

/// The outbound sensitivity reading: X is the set of papers the field's
/// papers cite.
pub fn field_collections_outbound(
    index: &OutboundIndex,
    corpus: &Corpus,
    fields: &[FieldId],
) -> Result<Vec<PaperSet>> {
    collect_by_field(corpus, fields, index.upto_year, |q| index.cited_by(q))
}

fn collect_by_field<'a>(
    corpus: &'a Corpus,
    fields: &[FieldId],
    upto_year: i32,
    linked: impl Fn(PaperId) -> &'a [PaperId] + Sync,
) -> Result<Vec<PaperSet>> {
    let ontology = corpus.ontology();
    // Tag -> positions of requested fields the tag counts toward.
    let mut want: HashMap<FieldId, Vec<u32>> = HashMap::new();
    for (k, &f) in fields.iter().enumerate() {
        if !ontology.contains(f) {
            return Err(Error::UnknownField(f.0));
        }
        for m in ontology.membership_fields(f) {
            want.entry(m).or_default().push(k as u32);
        }
    }

    let mut buffers: Vec<Vec<PaperId>> = vec![Vec::new(); fields.len()];
    for q in corpus.papers() {
        if q.year > upto_year || q.field_ids.is_empty() {
            continue;
        }
        let links = linked(q.id);
        if links.is_empty() {
            continue;
        }
        for tag in &q.field_ids {
            if let Some(ks) = want.get(tag) {
                for &k in ks {
                    buffers[k as usize].extend_from_slice(links);
                }
            }
        }
    }

    Ok(buffers
        .into_par_iter()
        .map(|mut buf| {
            buf.sort_unstable();
            buf.dedup();
            PaperSet::from_ascending(buf)
        })
        .collect())
}

/// Collection sizes and all unordered-pair intersection counts for an
/// ordered field list, plus the universe size |G_y|.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub year: i32,
    pub universe: u64,
    /// Ascending, deduplicated.
    pub fields: Vec<FieldId>,
    pub sizes: Vec<u64>,
    /// Condensed strict upper triangle, row-major.
    intersections: Vec<u64>,
}

impl CollectionStats {
    pub fn n_fields(&self) -> usize {
        self.fields.len()
    }

    pub fn size(&self, i: usize) -> u64 {
        self.sizes[i]
    }

    /// |X_i ∩ X_j|; the diagonal is the collection size itself.
    pub fn intersection(&self, i: usize, j: usize) -> u64 {
        if i == j {
            return self.sizes[i];
        }
        self.intersections[pair_index(self.fields.len(), i.min(j), i.max(j))]
    }

    pub fn field_pos(&self, f: FieldId) -> Option<usize> {
        self.fields.binary_search(&f).ok()
    }

    /// Canonical bytes; identical stats serialize identically.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("stats are serializable")
    }
}

/// Index of `(i, j)` with `i < j` in the condensed strict upper triangle.
pub(crate) fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// All collection sizes and pairwise intersections for `fields` under the
/// slice the index was built for. Fields are sorted and deduplicated so
/// the result does not depend on caller order, and pair intersections are
/// computed in a fixed order regardless of the parallel schedule.
pub fn pairwise_collection_stats(
    index: &InboundIndex,
    corpus: &Corpus,
    fields: &[FieldId],
) -> Result<CollectionStats> {
    let sets = sorted_field_collections(fields, |fs| field_collections(index, corpus, fs))?;
    stats_from_collections(index.upto_year, index.slice_size, sets)
}

/// Outbound-reading variant of [`pairwise_collection_stats`].
pub fn pairwise_collection_stats_outbound(
    index: &OutboundIndex,
    corpus: &Corpus,
    fields: &[FieldId],
) -> Result<CollectionStats> {
    let sets =
        sorted_field_collections(fields, |fs| field_collections_outbound(index, corpus, fs))?;
    stats_from_collections(index.upto_year, index.slice_size, sets)
}

fn sorted_field_collections(
    fields: &[FieldId],
    build: impl FnOnce(&[FieldId]) -> Result<Vec<PaperSet>>,
) -> Result<Vec<(FieldId, PaperSet)>> {
    if fields.is_empty() {
        return Err(Error::InvalidInput("field list is empty".into()));
    }
    let mut fields = fields.to_vec();
    fields.sort_unstable();
    fields.dedup();
    let sets = build(&fields)?;
    Ok(fields.into_iter().zip(sets).collect())
}

fn stats_from_collections(
    year: i32,
    universe: u64,
    sets: Vec<(FieldId, PaperSet)>,
) -> Result<CollectionStats> {
    let n = sets.len();
    let sizes: Vec<u64> = sets.iter().map(|(_, s)| s.len()).collect();
    let n_pairs = n * (n - 1) / 2;
    let intersections: Vec<u64> = (0..n_pairs)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = pair_from_index(n, idx);
            sets[i].1.intersection_len(&sets[j].1)
        })
        .collect();
    Ok(CollectionStats {
        year,
        universe,
        fields: sets.into_iter().map(|(f, _)| f).collect(),
        sizes,
        intersections,
    })
}

/// Inverse of [`pair_index`].
pub(crate) fn pair_from_index(n: usize, idx: usize) -> (usize, usize) {
    // Row i owns (n - 1 - i) entries; walk rows. n is at most a few
    // hundred in practice, and this runs once per pair.
    let mut i = 0;
    let mut base = 0;
    loop {
        let row = n - 1 - i;
        if idx < base + row {
            return (i, i + 1 + (idx - base));
        }
        base += row;
        i += 1;
    }
}

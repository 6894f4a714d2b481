//! Citation corpus: papers, citation edges, and the two-level field
//! ontology, with validation, filtering, and year slicing.
//!
//! External paper ids (strings or large integers in the input files) are
//! re-indexed to dense `0..n` integers at ingest, in ascending order of
//! external id, so a corpus built from the same records is bit-identical
//! no matter how the input rows were ordered or sharded. The mapping back
//! to external ids is kept for all outputs.

mod emit;
mod ingest;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::index::PaperSet;

pub use emit::{write_corpus_files, FileFormat};
pub use ingest::{ingest, IngestOptions, IngestReport};

/// Dense corpus-local paper index.
pub type PaperId = u32;

/// Ontology field identifier as it appears in the fields file.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct FieldId(pub u64);

impl std::fmt::Display for FieldId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocType {
    Article,
    Book,
    Patent,
    Other,
}

impl DocType {
    pub fn as_str(self) -> &'static str {
        match self {
            DocType::Article => "article",
            DocType::Book => "book",
            DocType::Patent => "patent",
            DocType::Other => "other",
        }
    }

    /// Case-insensitive; anything that is not an article, book, or patent
    /// is kept as `Other`.
    pub fn parse(s: &str) -> DocType {
        match s.trim().to_ascii_lowercase().as_str() {
            "article" => DocType::Article,
            "book" => DocType::Book,
            "patent" => DocType::Patent,
            _ => DocType::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paper {
    pub id: PaperId,
    pub year: i32,
    pub doc_type: DocType,
    /// Ontology tags, ascending and deduplicated. May be empty: untagged
    /// papers cannot seed a field collection but still count as citers.
    pub field_ids: Vec<FieldId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CitationEdge {
    /// Citing paper.
    pub src: PaperId,
    /// Cited paper.
    pub dst: PaperId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldLevel {
    Top,
    Secondary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldNode {
    pub id: FieldId,
    pub name: String,
    pub level: FieldLevel,
    /// Parent top field; required for secondary nodes, absent for top.
    pub parent: Option<FieldId>,
}

/// Two-level field forest: every secondary node hangs off a top node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    nodes: Vec<FieldNode>,
    pos: HashMap<FieldId, usize>,
    children: HashMap<FieldId, Vec<FieldId>>,
}

impl Ontology {
    /// Validates uniqueness and the two-level forest shape. Nodes are held
    /// sorted by field id.
    pub fn new(mut nodes: Vec<FieldNode>) -> Result<Ontology> {
        nodes.sort_by_key(|n| n.id);
        let mut pos = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if pos.insert(n.id, i).is_some() {
                return Err(Error::Ontology(format!("duplicate field id {}", n.id)));
            }
        }
        let mut children: HashMap<FieldId, Vec<FieldId>> = HashMap::new();
        for n in &nodes {
            match (n.level, n.parent) {
                (FieldLevel::Top, None) => {}
                (FieldLevel::Top, Some(p)) => {
                    return Err(Error::Ontology(format!(
                        "top field {} has a parent {}",
                        n.id, p
                    )));
                }
                (FieldLevel::Secondary, None) => {
                    return Err(Error::Ontology(format!(
                        "secondary field {} has no parent",
                        n.id
                    )));
                }
                (FieldLevel::Secondary, Some(p)) => {
                    let parent = pos
                        .get(&p)
                        .map(|&i| &nodes[i])
                        .ok_or_else(|| {
                            Error::Ontology(format!("field {} has unknown parent {}", n.id, p))
                        })?;
                    if parent.level != FieldLevel::Top {
                        return Err(Error::Ontology(format!(
                            "field {} has non-top parent {}",
                            n.id, p
                        )));
                    }
                    children.entry(p).or_default().push(n.id);
                }
            }
        }
        for v in children.values_mut() {
            v.sort_unstable();
        }
        Ok(Ontology {
            nodes,
            pos,
            children,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: FieldId) -> bool {
        self.pos.contains_key(&id)
    }

    pub fn get(&self, id: FieldId) -> Option<&FieldNode> {
        self.pos.get(&id).map(|&i| &self.nodes[i])
    }

    /// All nodes, ascending by field id.
    pub fn nodes(&self) -> &[FieldNode] {
        &self.nodes
    }

    pub fn top_fields(&self) -> Vec<FieldId> {
        self.level_fields(FieldLevel::Top)
    }

    pub fn secondary_fields(&self) -> Vec<FieldId> {
        self.level_fields(FieldLevel::Secondary)
    }

    fn level_fields(&self, level: FieldLevel) -> Vec<FieldId> {
        self.nodes
            .iter()
            .filter(|n| n.level == level)
            .map(|n| n.id)
            .collect()
    }

    pub fn children(&self, id: FieldId) -> &[FieldId] {
        self.children.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn parent(&self, id: FieldId) -> Option<FieldId> {
        self.get(id).and_then(|n| n.parent)
    }

    /// The field itself for a top node, otherwise its parent.
    pub fn top_of(&self, id: FieldId) -> Option<FieldId> {
        self.get(id).map(|n| n.parent.unwrap_or(n.id))
    }

    /// A paper tagged with `f` counts toward the fields in
    /// `membership_fields(f)`: the field itself plus, for a top field, all
    /// of its secondary children (hierarchical closure).
    pub fn membership_fields(&self, id: FieldId) -> Vec<FieldId> {
        let mut out = vec![id];
        out.extend_from_slice(self.children(id));
        out.sort_unstable();
        out
    }

    /// Tags plus their parent top fields, ascending and deduplicated.
    pub fn expand_tags(&self, tags: &[FieldId], out: &mut Vec<FieldId>) {
        out.clear();
        for &t in tags {
            out.push(t);
            if let Some(p) = self.parent(t) {
                out.push(p);
            }
        }
        out.sort_unstable();
        out.dedup();
    }
}

/// Per-rule removal counts from [`Corpus::apply_filters`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub books_removed: u64,
    pub patents_removed: u64,
    pub zero_inbound_removed: u64,
    pub edges_removed: u64,
    /// Papers left with zero inbound citations *by* the single filtering
    /// pass (their only citers were themselves removed). The pass does not
    /// cascade; this count tells users whether another round would remove
    /// more.
    pub residual_zero_inbound: u64,
}

/// Where a corpus came from and what was done to it.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub ingest: Option<IngestReport>,
    pub filter: Option<FilterReport>,
}

/// An immutable citation corpus. Papers are stored in dense-id order;
/// edges are sorted by `(src, dst)` and deduplicated.
#[derive(Debug, Clone)]
pub struct Corpus {
    papers: Vec<Paper>,
    external_ids: Vec<String>,
    external_index: HashMap<String, PaperId>,
    edges: Vec<CitationEdge>,
    ontology: Ontology,
    pub provenance: Provenance,
}

impl Corpus {
    /// Assembles a corpus from already-validated parts. `papers[i].id`
    /// must equal `i`, `external_ids` must be ascending, and edges must be
    /// sorted and deduplicated; this is checked in debug builds only.
    pub(crate) fn from_parts(
        papers: Vec<Paper>,
        external_ids: Vec<String>,
        edges: Vec<CitationEdge>,
        ontology: Ontology,
        provenance: Provenance,
    ) -> Corpus {
        debug_assert_eq!(papers.len(), external_ids.len());
        debug_assert!(papers.iter().enumerate().all(|(i, p)| p.id as usize == i));
        debug_assert!(external_ids.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        let external_index = external_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as PaperId))
            .collect();
        Corpus {
            papers,
            external_ids,
            external_index,
            edges,
            ontology,
            provenance,
        }
    }

    pub fn n_papers(&self) -> u64 {
        self.papers.len() as u64
    }

    pub fn papers(&self) -> &[Paper] {
        &self.papers
    }

    pub fn paper(&self, id: PaperId) -> &Paper {
        &self.papers[id as usize]
    }

    pub fn edges(&self) -> &[CitationEdge] {
        &self.edges
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn external_id(&self, id: PaperId) -> &str {
        &self.external_ids[id as usize]
    }

    pub fn external_ids(&self) -> &[String] {
        &self.external_ids
    }

    pub fn find_external(&self, external: &str) -> Option<PaperId> {
        self.external_index.get(external).copied()
    }

    /// Publication-year span, `None` for an empty corpus.
    pub fn year_span(&self) -> Option<(i32, i32)> {
        let mut it = self.papers.iter().map(|p| p.year);
        let first = it.next()?;
        let (mut lo, mut hi) = (first, first);
        for y in it {
            lo = lo.min(y);
            hi = hi.max(y);
        }
        Some((lo, hi))
    }

    /// All papers published up to and including `year`.
    pub fn slice(&self, year: i32) -> CorpusSlice {
        let members = PaperSet::from_ascending(
            self.papers
                .iter()
                .filter(|p| p.year <= year)
                .map(|p| p.id),
        );
        CorpusSlice {
            upto_year: year,
            member_ids: members,
        }
    }

    /// Removes books and patents, then — in the same single pass — papers
    /// that had zero inbound citations on the book/patent-free graph,
    /// together with all incident edges. Inbound degrees are computed once;
    /// the pass does not iterate to a fixpoint, and any papers it newly
    /// orphans are counted in the report as `residual_zero_inbound`.
    pub fn apply_filters(self) -> Corpus {
        let mut report = FilterReport::default();
        let n = self.papers.len();

        let mut keep = vec![true; n];
        for p in &self.papers {
            match p.doc_type {
                DocType::Book => {
                    keep[p.id as usize] = false;
                    report.books_removed += 1;
                }
                DocType::Patent => {
                    keep[p.id as usize] = false;
                    report.patents_removed += 1;
                }
                _ => {}
            }
        }

        // Inbound degrees on the book/patent-free graph, one pass.
        let mut indegree = vec![0u32; n];
        for e in &self.edges {
            if keep[e.src as usize] && keep[e.dst as usize] {
                indegree[e.dst as usize] += 1;
            }
        }
        for i in 0..n {
            if keep[i] && indegree[i] == 0 {
                keep[i] = false;
                report.zero_inbound_removed += 1;
            }
        }

        // Compact to new dense ids; prefix compaction preserves order.
        let mut remap = vec![PaperId::MAX; n];
        let mut papers = Vec::new();
        let mut external_ids = Vec::new();
        for i in 0..n {
            if keep[i] {
                let new_id = papers.len() as PaperId;
                remap[i] = new_id;
                let mut p = self.papers[i].clone();
                p.id = new_id;
                papers.push(p);
                external_ids.push(self.external_ids[i].clone());
            }
        }

        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            if keep[e.src as usize] && keep[e.dst as usize] {
                edges.push(CitationEdge {
                    src: remap[e.src as usize],
                    dst: remap[e.dst as usize],
                });
            } else {
                report.edges_removed += 1;
            }
        }

        let mut post_indegree = vec![0u32; papers.len()];
        for e in &edges {
            post_indegree[e.dst as usize] += 1;
        }
        report.residual_zero_inbound = post_indegree.iter().filter(|&&d| d == 0).count() as u64;

        let mut provenance = self.provenance.clone();
        provenance.filter = Some(report);
        Corpus::from_parts(papers, external_ids, edges, self.ontology, provenance)
    }

    /// Number of papers each field contains up to `year`: papers tagged
    /// with the field itself or, for a top field, with any of its
    /// secondary children. A paper counts once per field.
    pub fn field_paper_counts(&self, fields: &[FieldId], upto_year: i32) -> Result<Vec<u64>> {
        let mut want: HashMap<FieldId, Vec<usize>> = HashMap::new();
        for (k, &f) in fields.iter().enumerate() {
            if !self.ontology.contains(f) {
                return Err(Error::UnknownField(f.0));
            }
            for m in self.ontology.membership_fields(f) {
                want.entry(m).or_default().push(k);
            }
        }
        let mut counts = vec![0u64; fields.len()];
        let mut hit = vec![false; fields.len()];
        for p in &self.papers {
            if p.year > upto_year {
                continue;
            }
            for t in &p.field_ids {
                if let Some(ks) = want.get(t) {
                    for &k in ks {
                        if !hit[k] {
                            hit[k] = true;
                            counts[k] += 1;
                        }
                    }
                }
            }
            for t in &p.field_ids {
                if let Some(ks) = want.get(t) {
                    for &k in ks {
                        hit[k] = false;
                    }
                }
            }
        }
        Ok(counts)
    }

    /// SHA-256 over the corpus content (papers, edges, ontology), ignoring
    /// provenance. Equal digests mean field-for-field equal corpora.
    pub fn content_digest(&self) -> String {
        let mut h = Sha256::new();
        for (p, ext) in self.papers.iter().zip(&self.external_ids) {
            h.update(ext.as_bytes());
            h.update([0xff]);
            h.update(p.year.to_le_bytes());
            h.update([p.doc_type as u8]);
            for f in &p.field_ids {
                h.update(f.0.to_le_bytes());
            }
            h.update([0xfe]);
        }
        for e in &self.edges {
            h.update(e.src.to_le_bytes());
            h.update(e.dst.to_le_bytes());
        }
        for n in self.ontology.nodes() {
            h.update(n.id.0.to_le_bytes());
            h.update(n.name.as_bytes());
            h.update([0xff, n.level as u8]);
            h.update(n.parent.map_or(0, |p| p.0).to_le_bytes());
        }
        hex(&h.finalize())
    }

    /// Field-for-field equality of content; provenance is not compared.
    pub fn content_eq(&self, other: &Corpus) -> bool {
        self.papers == other.papers
            && self.external_ids == other.external_ids
            && self.edges == other.edges
            && self.ontology == other.ontology
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// All papers published up to and including a year.
#[derive(Debug, Clone)]
pub struct CorpusSlice {
    upto_year: i32,
    member_ids: PaperSet,
}

impl CorpusSlice {
    pub fn upto_year(&self) -> i32 {
        self.upto_year
    }

    pub fn member_ids(&self) -> &PaperSet {
        &self.member_ids
    }

    /// |G_y|
    pub fn size(&self) -> u64 {
        self.member_ids.len()
    }

    pub fn contains(&self, id: PaperId) -> bool {
        self.member_ids.contains(id)
    }
}

//! Deterministic synthetic corpora with planted block structure, plus the
//! naive brute-force oracles the property suites compare the fast paths
//! against.
//!
//! The generator is seedable and fully reproducible across platforms: all
//! sampling goes through [`SplitMix64`] with integer arithmetic only
//! (rates are quantized to 53-bit thresholds up front), so the same
//! parameters always produce byte-identical corpora.

use std::collections::{HashMap, HashSet};

use crate::corpus::{
    CitationEdge, Corpus, DocType, FieldId, FieldLevel, FieldNode, Ontology, Paper, PaperId,
    Provenance,
};
use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::index::Direction;
use crate::scalar::Real;

/// SplitMix64: the state advances by a fixed odd constant (a Weyl
/// sequence), and each output is a finalizing hash of the state. Stream
/// position `i` therefore depends only on `(seed, i)`.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `0..n` via the multiply-shift reduction (128-bit
    /// integer arithmetic, no floats).
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// True with probability `threshold / 2^53`.
    pub fn chance(&mut self, threshold: u64) -> bool {
        (self.next_u64() >> 11) < threshold
    }

    /// Uniform f64 in [0, 1); only for callers that want float noise
    /// (e.g. random test matrices), not used by the generator's sampling.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Probability quantized to a 53-bit threshold for [`SplitMix64::chance`].
fn quantize(rate: f64) -> u64 {
    (rate * (1u64 << 53) as f64).round() as u64
}

#[derive(Debug, Clone)]
pub struct SynthParams {
    pub n_papers: u64,
    /// Inclusive publication-year range; years are uniform over it.
    pub year_range: (i32, i32),
    pub n_top_fields: u32,
    pub secondaries_per_top: u32,
    /// `block_matrix[a][b]` is the probability that a citation attempt
    /// from a paper in top block `a` to a candidate in top block `b` is
    /// kept. Must be symmetric with entries in [0, 1].
    pub block_matrix: Vec<Vec<f64>>,
    /// Probabilities for article, book, patent, other; must sum to 1.
    pub doc_type_mix: [f64; 4],
    pub mean_out_citations: f64,
    pub seed: u64,
}

impl SynthParams {
    /// Uniform blocks: `intra` on the diagonal, `cross` off it.
    pub fn uniform_blocks(n_top: u32, intra: f64, cross: f64) -> Vec<Vec<f64>> {
        (0..n_top)
            .map(|a| {
                (0..n_top)
                    .map(|b| if a == b { intra } else { cross })
                    .collect()
            })
            .collect()
    }

    pub fn n_secondary_fields(&self) -> u32 {
        self.n_top_fields * self.secondaries_per_top
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InfeasibleParams(msg));
        if self.year_range.0 > self.year_range.1 {
            return fail("year range is empty".into());
        }
        if self.n_top_fields == 0 || self.secondaries_per_top == 0 {
            return fail("need at least one top field and one secondary per top".into());
        }
        let t = self.n_top_fields as usize;
        if self.block_matrix.len() != t || self.block_matrix.iter().any(|r| r.len() != t) {
            return fail(format!("block matrix must be {t}x{t}"));
        }
        for a in 0..t {
            for b in 0..t {
                let r = self.block_matrix[a][b];
                if !(0.0..=1.0).contains(&r) {
                    return fail(format!("citation rate {r} outside [0, 1]"));
                }
                if self.block_matrix[a][b] != self.block_matrix[b][a] {
                    return fail("block matrix must be symmetric".into());
                }
            }
        }
        let mix_sum: f64 = self.doc_type_mix.iter().sum();
        if self.doc_type_mix.iter().any(|&p| p < 0.0) || (mix_sum - 1.0).abs() > 1e-9 {
            return fail("doc type mix must be non-negative and sum to 1".into());
        }
        if self.mean_out_citations < 0.0 {
            return fail("mean out-citations must be non-negative".into());
        }
        if self.n_papers > 0
            && self.mean_out_citations.ceil() as u64 > self.n_papers.saturating_sub(1)
        {
            return fail(format!(
                "mean out-citations {} exceeds the largest possible number of earlier papers {}",
                self.mean_out_citations,
                self.n_papers.saturating_sub(1)
            ));
        }
        if self.n_papers > u32::MAX as u64 {
            return fail("paper count exceeds the dense 32-bit id space".into());
        }
        Ok(())
    }
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_papers: 1_000,
            year_range: (1960, 2020),
            n_top_fields: 4,
            secondaries_per_top: 3,
            block_matrix: SynthParams::uniform_blocks(4, 0.5, 0.05),
            doc_type_mix: [0.9, 0.04, 0.03, 0.03],
            mean_out_citations: 6.0,
            seed: 42,
        }
    }
}

/// Field ids in generated ontologies: top block `b` (0-based) gets id
/// `b + 1`; its secondary `s` gets `n_top + b * secondaries_per_top + s + 1`.
fn synth_ontology(n_top: u32, secondaries_per_top: u32) -> Ontology {
    let mut nodes = Vec::with_capacity((n_top + n_top * secondaries_per_top) as usize);
    for b in 0..n_top {
        nodes.push(FieldNode {
            id: FieldId(b as u64 + 1),
            name: format!("T{}", b + 1),
            level: FieldLevel::Top,
            parent: None,
        });
        for s in 0..secondaries_per_top {
            nodes.push(FieldNode {
                id: FieldId((n_top + b * secondaries_per_top + s) as u64 + 1),
                name: format!("T{}S{}", b + 1, s + 1),
                level: FieldLevel::Secondary,
                parent: Some(FieldId(b as u64 + 1)),
            });
        }
    }
    Ontology::new(nodes).expect("generated ontology is well-formed")
}

/// Generates a corpus: years uniform over the range, exactly one
/// secondary field per paper, citations drawn backward in time (strictly
/// earlier years) with acceptance rates from the block matrix. Same
/// params, same bytes.
pub fn generate_corpus(params: &SynthParams) -> Result<Corpus> {
    params.validate()?;
    let mut rng = SplitMix64::new(params.seed);
    let n = params.n_papers as usize;
    let n_top = params.n_top_fields;
    let n_sec = params.n_secondary_fields() as u64;
    let (y0, y1) = params.year_range;
    let year_span = (y1 - y0) as u64 + 1;

    let doc_types = [DocType::Article, DocType::Book, DocType::Patent, DocType::Other];
    let mut mix_thresholds = [0u64; 4];
    let mut acc = 0.0;
    for (t, &p) in mix_thresholds.iter_mut().zip(&params.doc_type_mix) {
        acc += p;
        *t = quantize(acc.min(1.0));
    }
    mix_thresholds[3] = u64::MAX; // guard against rounding shortfall

    let rate_thresholds: Vec<Vec<u64>> = params
        .block_matrix
        .iter()
        .map(|row| row.iter().map(|&r| quantize(r)).collect())
        .collect();

    // External ids are zero-padded so lexicographic order is id order and
    // re-ingesting emitted files reproduces the same dense ids.
    let width = 8;
    let mut papers = Vec::with_capacity(n);
    let mut external_ids = Vec::with_capacity(n);
    let mut blocks = Vec::with_capacity(n);
    for i in 0..n {
        let year = y0 + rng.next_below(year_span) as i32;
        let mix_draw = rng.next_u64() >> 11;
        let k = mix_thresholds.iter().position(|&t| mix_draw < t).unwrap();
        let sec = rng.next_below(n_sec) as u32;
        let block = sec / params.secondaries_per_top;
        blocks.push(block);
        papers.push(Paper {
            id: i as PaperId,
            year,
            doc_type: doc_types[k],
            field_ids: vec![FieldId((n_top + sec) as u64 + 1)],
        });
        external_ids.push(format!("P{i:0width$}"));
    }

    // Papers sorted by (year, id); a paper at sorted position p may cite
    // any of the `year_start[its year]` strictly-earlier papers.
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by_key(|&i| (papers[i as usize].year, i));
    let mut earlier_count = vec![0usize; n];
    {
        let mut start_of_run = 0;
        for p in 0..n {
            if p > 0
                && papers[order[p] as usize].year != papers[order[p - 1] as usize].year
            {
                start_of_run = p;
            }
            earlier_count[order[p] as usize] = start_of_run;
        }
    }

    let whole = params.mean_out_citations.floor();
    let frac_threshold = quantize(params.mean_out_citations - whole);
    let whole = whole as u64;

    let mut edges = Vec::new();
    for i in 0..n {
        let available = earlier_count[i];
        if available == 0 {
            // Still consume the attempt-count draw so each paper's stream
            // usage does not depend on other papers' years.
            let _ = rng.chance(frac_threshold);
            continue;
        }
        let mut attempts = whole;
        if rng.chance(frac_threshold) {
            attempts += 1;
        }
        let src_block = blocks[i] as usize;
        for _ in 0..attempts {
            let pick = rng.next_below(available as u64) as usize;
            let q = order[pick];
            if rng.chance(rate_thresholds[src_block][blocks[q as usize] as usize]) {
                edges.push(CitationEdge {
                    src: i as PaperId,
                    dst: q,
                });
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();

    Ok(Corpus::from_parts(
        papers,
        external_ids,
        edges,
        synth_ontology(n_top, params.secondaries_per_top),
        Provenance {
            source: format!("synthetic seed={}", params.seed),
            ingest: None,
            filter: None,
        },
    ))
}

/// Brute-force field collections by direct edge-list scan with hash sets.
/// `fields` may be top or secondary; top fields include their children.
pub fn naive_collections(
    corpus: &Corpus,
    year: i32,
    fields: &[FieldId],
    direction: Direction,
) -> Result<Vec<HashSet<PaperId>>> {
    let ontology = corpus.ontology();
    let papers = corpus.papers();
    // Tag -> requested fields it counts toward.
    let mut want: HashMap<FieldId, Vec<usize>> = HashMap::new();
    for (k, &f) in fields.iter().enumerate() {
        if !ontology.contains(f) {
            return Err(Error::UnknownField(f.0));
        }
        for m in ontology.membership_fields(f) {
            want.entry(m).or_default().push(k);
        }
    }
    let mut sets = vec![HashSet::new(); fields.len()];
    for e in corpus.edges() {
        let (linker, owner) = match direction {
            Direction::Inbound => (e.src, e.dst),
            Direction::Outbound => (e.dst, e.src),
        };
        if papers[linker as usize].year > year || papers[owner as usize].year > year {
            continue;
        }
        for tag in &papers[owner as usize].field_ids {
            if let Some(ks) = want.get(tag) {
                for &k in ks {
                    sets[k].insert(linker);
                }
            }
        }
    }
    Ok(sets)
}

const ORACLE_PAPER_LIMIT: u64 = 100_000;

/// Naive reference for the distance pipeline: builds both collections by
/// edge-list scan and evaluates the formula directly, with the same fixed
/// degenerate cases as the production path. Guarded to small corpora.
pub fn oracle_distance<T: Real>(corpus: &Corpus, x: FieldId, y: FieldId, year: i32) -> Result<T> {
    if corpus.n_papers() > ORACLE_PAPER_LIMIT {
        return Err(Error::InvalidInput(format!(
            "oracle_distance is limited to {ORACLE_PAPER_LIMIT} papers; \
             use the production pipeline or sample pairs with naive_collections"
        )));
    }
    let sets = naive_collections(corpus, year, &[x, y], Direction::Inbound)?;
    let (xs, ys) = (&sets[0], &sets[1]);
    let sx = xs.len() as u64;
    let sy = ys.len() as u64;
    let sxy = if x == y {
        sx
    } else {
        xs.intersection(ys).count() as u64
    };
    let g = corpus.papers().iter().filter(|p| p.year <= year).count() as u64;
    if g == 0 {
        return Err(Error::InvalidCounts {
            sx,
            sy,
            sxy,
            g,
            reason: "universe is empty",
        });
    }

    let (mn, mx) = (sx.min(sy), sx.max(sy));
    let one = T::one();
    let value = if mn == 0 {
        one
    } else if mn == g {
        if mx == sxy {
            T::zero()
        } else {
            one
        }
    } else if sxy == 0 {
        one
    } else {
        let tf = |v: u64| T::from_u64(v).unwrap();
        let raw = (tf(mx).ln() - tf(sxy).ln()) / (tf(g).ln() - tf(mn).ln());
        if raw > one {
            one
        } else {
            raw
        }
    };
    Ok(value)
}

const ORACLE_FIELD_LIMIT: usize = 50;

/// Naive clustering by repeated-pass transitive closure over the
/// `kd < kct` relation — deliberately not union-find, so it checks
/// `clusters_at` by a different algorithm.
pub fn oracle_clusters<T: Real>(
    matrix: &DistanceMatrix<T>,
    kct: T,
) -> Result<crate::consilience::Partition<T>> {
    let n = matrix.n_fields();
    if n > ORACLE_FIELD_LIMIT {
        return Err(Error::InvalidInput(format!(
            "oracle_clusters is limited to {ORACLE_FIELD_LIMIT} fields"
        )));
    }
    if kct < T::zero() || kct > T::one() || kct.is_nan() {
        return Err(Error::OutOfRange(kct.to_f64().unwrap_or(f64::NAN)));
    }
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in (i + 1)..n {
                if matrix.kd(i, j) < kct {
                    let m = label[i].min(label[j]);
                    if label[i] != m || label[j] != m {
                        label[i] = m;
                        label[j] = m;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let fields = matrix.fields();
    let mut groups: Vec<Vec<FieldId>> = vec![Vec::new(); n];
    for i in 0..n {
        groups[label[i]].push(fields[i]);
    }
    groups.retain(|g| !g.is_empty());
    groups.sort_by_key(|g| g[0]);
    Ok(crate::consilience::Partition { kct, groups })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consilience::clusters_at;
    use crate::distance::distance_matrix;
    use crate::index::{build_inbound_index, pairwise_collection_stats};

    #[test]
    fn same_seed_same_corpus() {
        let params = SynthParams::default();
        let a = generate_corpus(&params).unwrap();
        let b = generate_corpus(&params).unwrap();
        assert!(a.content_eq(&b));
        assert_eq!(a.content_digest(), b.content_digest());

        let other = SynthParams {
            seed: 43,
            ..SynthParams::default()
        };
        let c = generate_corpus(&other).unwrap();
        assert_ne!(a.content_digest(), c.content_digest());
    }

    #[test]
    fn empty_corpus_is_legal() {
        let params = SynthParams {
            n_papers: 0,
            ..SynthParams::default()
        };
        let c = generate_corpus(&params).unwrap();
        assert_eq!(c.n_papers(), 0);
        assert!(c.edges().is_empty());
    }

    #[test]
    fn citations_point_backward_in_time() {
        let c = generate_corpus(&SynthParams::default()).unwrap();
        assert!(!c.edges().is_empty());
        for e in c.edges() {
            assert!(c.paper(e.dst).year < c.paper(e.src).year);
        }
    }

    #[test]
    fn infeasible_params_error() {
        let too_many = SynthParams {
            n_papers: 5,
            mean_out_citations: 10.0,
            ..SynthParams::default()
        };
        assert!(generate_corpus(&too_many).is_err());

        let asymmetric = SynthParams {
            block_matrix: vec![vec![0.5, 0.2], vec![0.3, 0.5]],
            n_top_fields: 2,
            ..SynthParams::default()
        };
        assert!(generate_corpus(&asymmetric).is_err());

        let bad_mix = SynthParams {
            doc_type_mix: [0.5, 0.1, 0.1, 0.1],
            ..SynthParams::default()
        };
        assert!(generate_corpus(&bad_mix).is_err());
    }

    #[test]
    fn planted_blocks_are_closer_inside_than_across() {
        let params = SynthParams {
            n_papers: 4_000,
            n_top_fields: 3,
            secondaries_per_top: 2,
            block_matrix: SynthParams::uniform_blocks(3, 0.6, 0.0),
            mean_out_citations: 5.0,
            ..SynthParams::default()
        };
        let c = generate_corpus(&params).unwrap();
        let idx = build_inbound_index(&c.slice(2020), &c);
        let tops: Vec<FieldId> = c.ontology().top_fields();
        let stats = pairwise_collection_stats(&idx, &c, &tops).unwrap();
        let m = distance_matrix::<f64>(&stats).unwrap();
        // Zero cross rate: cross-block distances are exactly 1, diagonal 0.
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert_eq!(m.kd(i, j), 1.0);
            }
            assert_eq!(m.kd(i, i), 0.0);
        }

        // Secondary fields of one block share citers, so intra-block
        // secondary distances sit strictly below cross-block ones.
        let secs: Vec<FieldId> = c.ontology().secondary_fields();
        let sstats = pairwise_collection_stats(&idx, &c, &secs).unwrap();
        let sm = distance_matrix::<f64>(&sstats).unwrap();
        let mut max_intra = 0f64;
        let mut min_cross = 1f64;
        for i in 0..secs.len() {
            for j in (i + 1)..secs.len() {
                let same_block = c.ontology().parent(secs[i]) == c.ontology().parent(secs[j]);
                if same_block {
                    max_intra = max_intra.max(sm.kd(i, j));
                } else {
                    min_cross = min_cross.min(sm.kd(i, j));
                }
            }
        }
        assert!(
            max_intra < min_cross,
            "intra {max_intra} should be below cross {min_cross}"
        );
    }

    #[test]
    fn oracle_distance_matches_hand_t1_value() {
        let c = crate::index::tests::t1_corpus();
        let kd: f64 = oracle_distance(&c, FieldId(1), FieldId(2), 2000).unwrap();
        let expected = (3f64.ln() - 2f64.ln()) / (8f64.ln() - 3f64.ln());
        assert!((kd - expected).abs() < 1e-12);
        let self_kd: f64 = oracle_distance(&c, FieldId(1), FieldId(1), 2000).unwrap();
        assert_eq!(self_kd, 0.0);
    }

    #[test]
    fn oracle_distance_disjoint_blocks_give_one() {
        let params = SynthParams {
            n_papers: 800,
            n_top_fields: 2,
            secondaries_per_top: 1,
            block_matrix: SynthParams::uniform_blocks(2, 0.5, 0.0),
            ..SynthParams::default()
        };
        let c = generate_corpus(&params).unwrap();
        let kd: f64 = oracle_distance(&c, FieldId(1), FieldId(2), 2020).unwrap();
        assert_eq!(kd, 1.0);
    }

    #[test]
    fn oracle_distance_guard() {
        let params = SynthParams {
            n_papers: 120_000,
            mean_out_citations: 0.0,
            ..SynthParams::default()
        };
        let c = generate_corpus(&params).unwrap();
        assert!(oracle_distance::<f64>(&c, FieldId(1), FieldId(2), 2020).is_err());
    }

    #[test]
    fn oracle_clusters_agrees_on_random_matrices() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..200 {
            let n = 2 + rng.next_below(19) as usize;
            let fields: Vec<FieldId> = (1..=n as u64).map(FieldId).collect();
            let mut values = vec![vec![0.0f64; n]; n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = 0.05 + 0.9 * rng.next_f64();
                    values[i][j] = v;
                    values[j][i] = v;
                }
            }
            let m = DistanceMatrix::from_values(fields, 2020, &values);
            let kct = rng.next_f64();
            let fast = clusters_at(&m, kct).unwrap();
            let slow = oracle_clusters(&m, kct).unwrap();
            assert_eq!(fast.groups, slow.groups);
        }
    }

    #[test]
    fn oracle_clusters_unify_below_one() {
        let m = DistanceMatrix::from_values(
            vec![FieldId(1), FieldId(2), FieldId(3)],
            2020,
            &[
                vec![0.0, 0.4, 0.8],
                vec![0.4, 0.0, 0.6],
                vec![0.8, 0.6, 0.0],
            ],
        );
        let p = oracle_clusters(&m, 1.0).unwrap();
        assert_eq!(p.n_clusters(), 1);
    }
}

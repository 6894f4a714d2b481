//! File ingestion: TSV or JSONL (optionally gzip-compressed by `.gz`
//! extension), one record per line, UTF-8.
//!
//! Formats, per line:
//! * papers: `external_id  year  doc_type  field_ids` (field ids
//!   comma-separated, may be empty); JSONL keys `id`, `year`, `doc_type`,
//!   `field_ids`.
//! * citations: `citing_external_id  cited_external_id`; JSONL keys `src`,
//!   `dst` or a two-element array.
//! * fields: `field_id  name  level  parent_field_id` with level 0 = top,
//!   1 = secondary, parent empty for top; JSONL keys `id`, `name`,
//!   `level`, `parent`.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    CitationEdge, Corpus, DocType, FieldId, FieldLevel, FieldNode, Ontology, Paper, PaperId,
    Provenance,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Treat the first line of each TSV file as a header and skip it.
    pub has_header: bool,
    /// Fatal if more than this fraction of a file's lines is malformed.
    pub malformed_limit: f64,
    /// Publication years outside this inclusive range are rejected.
    pub year_range: (i32, i32),
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            has_header: false,
            malformed_limit: 0.01,
            year_range: (1800, 2100),
        }
    }
}

/// Counters from one ingest run; malformed lines were dropped, warnings
/// describe records that were repaired or skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub papers_read: u64,
    pub papers_kept: u64,
    pub malformed_paper_lines: u64,
    pub malformed_citation_lines: u64,
    pub malformed_field_lines: u64,
    /// First offending line numbers per file (up to 20 each).
    pub malformed_paper_line_numbers: Vec<u64>,
    pub malformed_citation_line_numbers: Vec<u64>,
    pub edges_read: u64,
    pub edges_kept: u64,
    pub self_citations_dropped: u64,
    pub dangling_edges_dropped: u64,
    pub duplicate_edges_dropped: u64,
    pub unknown_field_tags_dropped: u64,
    pub fields_read: u64,
}

const MAX_REPORTED_LINES: usize = 20;

/// Loads and validates a corpus from the three input files. Dense paper
/// ids are assigned in ascending external-id order, so the result does
/// not depend on input row order.
pub fn ingest(
    papers_path: &Path,
    citations_path: &Path,
    fields_path: &Path,
    options: &IngestOptions,
) -> Result<Corpus> {
    let mut report = IngestReport::default();

    let ontology = read_fields(fields_path, options, &mut report)?;
    let mut records = read_papers(papers_path, options, &ontology, &mut report)?;

    records.sort_by(|a, b| a.external.cmp(&b.external));
    let mut external_ids = Vec::with_capacity(records.len());
    let mut papers = Vec::with_capacity(records.len());
    let mut external_index: HashMap<String, PaperId> = HashMap::with_capacity(records.len());
    for r in records {
        let id = papers.len() as PaperId;
        match external_index.entry(r.external.clone()) {
            Entry::Vacant(v) => {
                v.insert(id);
            }
            Entry::Occupied(_) => {
                return Err(Error::DuplicatePaperId {
                    id: r.external,
                    path: papers_path.to_path_buf(),
                    line: r.line,
                });
            }
        }
        external_ids.push(r.external);
        papers.push(Paper {
            id,
            year: r.year,
            doc_type: r.doc_type,
            field_ids: r.field_ids,
        });
    }
    report.papers_kept = papers.len() as u64;

    let edges = read_citations(citations_path, options, &external_index, &mut report)?;
    report.edges_kept = edges.len() as u64;

    let provenance = Provenance {
        source: format!(
            "files: papers={} citations={} fields={}",
            papers_path.display(),
            citations_path.display(),
            fields_path.display()
        ),
        ingest: Some(report),
        filter: None,
    };
    Ok(Corpus::from_parts(
        papers,
        external_ids,
        edges,
        ontology,
        provenance,
    ))
}

struct PaperRecord {
    external: String,
    year: i32,
    doc_type: DocType,
    field_ids: Vec<FieldId>,
    line: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LineFormat {
    Tsv,
    Jsonl,
}

fn open_lines(path: &Path) -> Result<(Box<dyn BufRead>, LineFormat)> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("");
    let (inner_name, reader): (&str, Box<dyn Read>) = match name.strip_suffix(".gz") {
        Some(stem) => (stem, Box::new(MultiGzDecoder::new(file))),
        None => (name, Box::new(file)),
    };
    let format = if inner_name.ends_with(".jsonl")
        || inner_name.ends_with(".json")
        || inner_name.ends_with(".ndjson")
    {
        LineFormat::Jsonl
    } else {
        LineFormat::Tsv
    };
    Ok((Box::new(BufReader::new(reader)), format))
}

/// Iterates non-empty data lines, tracking malformed ones; enforces the
/// malformed-ratio limit at the end.
struct LineScanner<'a> {
    path: PathBuf,
    limit: f64,
    total: u64,
    bad: u64,
    bad_lines: Vec<u64>,
    counter: Option<&'a mut u64>,
    numbers: Option<&'a mut Vec<u64>>,
}

impl<'a> LineScanner<'a> {
    fn new(
        path: &Path,
        limit: f64,
        counter: Option<&'a mut u64>,
        numbers: Option<&'a mut Vec<u64>>,
    ) -> Self {
        LineScanner {
            path: path.to_path_buf(),
            limit,
            total: 0,
            bad: 0,
            bad_lines: Vec::new(),
            counter,
            numbers,
        }
    }

    fn saw_line(&mut self) {
        self.total += 1;
    }

    fn malformed(&mut self, line: u64) {
        self.bad += 1;
        if self.bad_lines.len() < MAX_REPORTED_LINES {
            self.bad_lines.push(line);
        }
    }

    fn finish(mut self) -> Result<()> {
        if let Some(c) = self.counter.as_deref_mut() {
            *c += self.bad;
        }
        if let Some(nums) = self.numbers.as_deref_mut() {
            nums.extend_from_slice(&self.bad_lines);
        }
        if self.total > 0 {
            let ratio = self.bad as f64 / self.total as f64;
            if ratio > self.limit {
                return Err(Error::MalformedRatio {
                    path: self.path,
                    ratio,
                    limit: self.limit,
                    count: self.bad,
                    total: self.total,
                    lines: self.bad_lines,
                });
            }
        }
        Ok(())
    }
}

fn read_io_line(
    lines: &mut std::io::Lines<Box<dyn BufRead>>,
    path: &Path,
) -> Result<Option<String>> {
    match lines.next() {
        None => Ok(None),
        Some(Ok(l)) => Ok(Some(l)),
        Some(Err(source)) => Err(Error::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}

fn read_fields(
    path: &Path,
    options: &IngestOptions,
    report: &mut IngestReport,
) -> Result<Ontology> {
    let (reader, format) = open_lines(path)?;
    let mut nodes = Vec::new();
    let mut scanner = LineScanner::new(
        path,
        options.malformed_limit,
        Some(&mut report.malformed_field_lines),
        None,
    );
    let mut lines = reader.lines();
    let mut line_no = 0u64;
    let mut skipped_header = false;
    while let Some(line) = read_io_line(&mut lines, path)? {
        line_no += 1;
        if line.trim().is_empty() {
            continue;
        }
        if options.has_header && format == LineFormat::Tsv && !skipped_header {
            skipped_header = true;
            continue;
        }
        scanner.saw_line();
        match parse_field_line(&line, format) {
            Some(node) => nodes.push(node),
            None => scanner.malformed(line_no),
        }
    }
    scanner.finish()?;
    report.fields_read = nodes.len() as u64;
    Ontology::new(nodes)
}

fn parse_field_line(line: &str, format: LineFormat) -> Option<FieldNode> {
    let (id, name, level, parent) = match format {
        LineFormat::Tsv => {
            let mut cols = line.split('\t');
            let id = cols.next()?.trim().parse::<u64>().ok()?;
            let name = cols.next()?.trim().to_string();
            let level = cols.next()?.trim().parse::<u8>().ok()?;
            let parent = match cols.next().map(str::trim) {
                None | Some("") => None,
                Some(s) => Some(s.parse::<u64>().ok()?),
            };
            (id, name, level, parent)
        }
        LineFormat::Jsonl => {
            let v: Value = serde_json::from_str(line).ok()?;
            let id = value_u64(v.get("id")?)?;
            let name = v.get("name")?.as_str()?.to_string();
            let level = value_u64(v.get("level")?)? as u8;
            let parent = match v.get("parent") {
                None | Some(Value::Null) => None,
                Some(p) => Some(value_u64(p)?),
            };
            (id, name, level, parent)
        }
    };
    let level = match level {
        0 => FieldLevel::Top,
        1 => FieldLevel::Secondary,
        _ => return None,
    };
    Some(FieldNode {
        id: FieldId(id),
        name,
        level,
        parent: parent.map(FieldId),
    })
}

fn read_papers(
    path: &Path,
    options: &IngestOptions,
    ontology: &Ontology,
    report: &mut IngestReport,
) -> Result<Vec<PaperRecord>> {
    let (reader, format) = open_lines(path)?;
    let mut records = Vec::new();
    let mut unknown_tags = 0u64;
    let mut scanner = LineScanner::new(
        path,
        options.malformed_limit,
        Some(&mut report.malformed_paper_lines),
        Some(&mut report.malformed_paper_line_numbers),
    );
    let mut lines = reader.lines();
    let mut line_no = 0u64;
    let mut skipped_header = false;
    while let Some(line) = read_io_line(&mut lines, path)? {
        line_no += 1;
        if line.trim().is_empty() {
            continue;
        }
        if options.has_header && format == LineFormat::Tsv && !skipped_header {
            skipped_header = true;
            continue;
        }
        scanner.saw_line();
        match parse_paper_line(&line, format, options.year_range) {
            Some((external, year, doc_type, mut tags)) => {
                // Unknown ontology tags are dropped with a counted warning.
                let before = tags.len();
                tags.retain(|t| ontology.contains(*t));
                unknown_tags += (before - tags.len()) as u64;
                tags.sort_unstable();
                tags.dedup();
                records.push(PaperRecord {
                    external,
                    year,
                    doc_type,
                    field_ids: tags,
                    line: line_no,
                });
            }
            None => scanner.malformed(line_no),
        }
    }
    scanner.finish()?;
    report.papers_read = records.len() as u64 + report.malformed_paper_lines;
    report.unknown_field_tags_dropped = unknown_tags;
    Ok(records)
}

fn parse_paper_line(
    line: &str,
    format: LineFormat,
    year_range: (i32, i32),
) -> Option<(String, i32, DocType, Vec<FieldId>)> {
    let (external, year, doc_type, tags) = match format {
        LineFormat::Tsv => {
            let mut cols = line.split('\t');
            let external = cols.next()?.trim().to_string();
            let year = cols.next()?.trim().parse::<i32>().ok()?;
            let doc_type = DocType::parse(cols.next()?);
            let tags = match cols.next() {
                None => Vec::new(),
                Some(s) => parse_tag_list(s)?,
            };
            (external, year, doc_type, tags)
        }
        LineFormat::Jsonl => {
            let v: Value = serde_json::from_str(line).ok()?;
            let external = match v.get("id")? {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                _ => return None,
            };
            let year = value_u64(v.get("year")?).and_then(|y| i32::try_from(y).ok())?;
            let doc_type = DocType::parse(v.get("doc_type")?.as_str()?);
            let tags = match v.get("field_ids") {
                None | Some(Value::Null) => Vec::new(),
                Some(Value::Array(a)) => a
                    .iter()
                    .map(|e| value_u64(e).map(FieldId))
                    .collect::<Option<Vec<_>>>()?,
                Some(_) => return None,
            };
            (external, year, doc_type, tags)
        }
    };
    if external.is_empty() || year < year_range.0 || year > year_range.1 {
        return None;
    }
    Some((external, year, doc_type, tags))
}

fn parse_tag_list(s: &str) -> Option<Vec<FieldId>> {
    let s = s.trim();
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split(',')
        .map(|t| t.trim().parse::<u64>().ok().map(FieldId))
        .collect()
}

fn read_citations(
    path: &Path,
    options: &IngestOptions,
    external_index: &HashMap<String, PaperId>,
    report: &mut IngestReport,
) -> Result<Vec<CitationEdge>> {
    let (reader, format) = open_lines(path)?;
    let mut edges = Vec::new();
    let mut scanner = LineScanner::new(
        path,
        options.malformed_limit,
        Some(&mut report.malformed_citation_lines),
        Some(&mut report.malformed_citation_line_numbers),
    );
    let mut lines = reader.lines();
    let mut line_no = 0u64;
    let mut skipped_header = false;
    while let Some(line) = read_io_line(&mut lines, path)? {
        line_no += 1;
        if line.trim().is_empty() {
            continue;
        }
        if options.has_header && format == LineFormat::Tsv && !skipped_header {
            skipped_header = true;
            continue;
        }
        scanner.saw_line();
        report.edges_read += 1;
        match parse_citation_line(&line, format) {
            Some((src_ext, dst_ext)) => {
                if src_ext == dst_ext {
                    report.self_citations_dropped += 1;
                    continue;
                }
                match (external_index.get(&src_ext), external_index.get(&dst_ext)) {
                    (Some(&src), Some(&dst)) => edges.push(CitationEdge { src, dst }),
                    _ => report.dangling_edges_dropped += 1,
                }
            }
            None => scanner.malformed(line_no),
        }
    }
    scanner.finish()?;
    edges.sort_unstable();
    let before = edges.len();
    edges.dedup();
    report.duplicate_edges_dropped = (before - edges.len()) as u64;
    Ok(edges)
}

fn parse_citation_line(line: &str, format: LineFormat) -> Option<(String, String)> {
    match format {
        LineFormat::Tsv => {
            let mut cols = line.split('\t');
            let src = cols.next()?.trim();
            let dst = cols.next()?.trim();
            if src.is_empty() || dst.is_empty() {
                return None;
            }
            Some((src.to_string(), dst.to_string()))
        }
        LineFormat::Jsonl => {
            let v: Value = serde_json::from_str(line).ok()?;
            let id_string = |v: &Value| -> Option<String> {
                match v {
                    Value::String(s) => Some(s.clone()),
                    Value::Number(n) => Some(n.to_string()),
                    _ => None,
                }
            };
            match &v {
                Value::Array(a) if a.len() == 2 => Some((id_string(&a[0])?, id_string(&a[1])?)),
                Value::Object(o) => Some((id_string(o.get("src")?)?, id_string(o.get("dst")?)?)),
                _ => None,
            }
        }
    }
}

fn value_u64(v: &Value) -> Option<u64> {
    match v {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

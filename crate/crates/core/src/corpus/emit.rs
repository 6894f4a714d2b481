//! Writes a corpus back out as the three ingest files, so generated
//! corpora flow through the exact production ingestion path.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use flate2::write::GzEncoder;

use super::{Corpus, FieldLevel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Tsv,
    Jsonl,
}

impl FileFormat {
    fn extension(self) -> &'static str {
        match self {
            FileFormat::Tsv => "tsv",
            FileFormat::Jsonl => "jsonl",
        }
    }
}

/// Writes `papers`, `citations`, and `fields` files into `dir` and returns
/// their paths. Papers are written in dense-id order (ascending external
/// id), edges sorted by `(src, dst)`, fields ascending by id; re-ingesting
/// the files reproduces the corpus field for field.
pub fn write_corpus_files(
    corpus: &Corpus,
    dir: &Path,
    format: FileFormat,
    gzip: bool,
) -> Result<(PathBuf, PathBuf, PathBuf)> {
    let suffix = if gzip { ".gz" } else { "" };
    let ext = format.extension();
    let papers_path = dir.join(format!("papers.{ext}{suffix}"));
    let citations_path = dir.join(format!("citations.{ext}{suffix}"));
    let fields_path = dir.join(format!("fields.{ext}{suffix}"));

    let mut w = open_writer(&papers_path, gzip)?;
    for p in corpus.papers() {
        let ext_id = corpus.external_id(p.id);
        match format {
            FileFormat::Tsv => {
                let tags = p
                    .field_ids
                    .iter()
                    .map(|f| f.0.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                writeln!(w, "{ext_id}\t{}\t{}\t{tags}", p.year, p.doc_type.as_str())
            }
            FileFormat::Jsonl => {
                let tags: Vec<u64> = p.field_ids.iter().map(|f| f.0).collect();
                writeln!(
                    w,
                    "{}",
                    serde_json::json!({
                        "id": ext_id,
                        "year": p.year,
                        "doc_type": p.doc_type.as_str(),
                        "field_ids": tags,
                    })
                )
            }
        }
        .map_err(|source| Error::Io {
            path: papers_path.clone(),
            source,
        })?;
    }
    finish_writer(w, &papers_path)?;

    let mut w = open_writer(&citations_path, gzip)?;
    for e in corpus.edges() {
        let src = corpus.external_id(e.src);
        let dst = corpus.external_id(e.dst);
        match format {
            FileFormat::Tsv => writeln!(w, "{src}\t{dst}"),
            FileFormat::Jsonl => writeln!(w, "{}", serde_json::json!({"src": src, "dst": dst})),
        }
        .map_err(|source| Error::Io {
            path: citations_path.clone(),
            source,
        })?;
    }
    finish_writer(w, &citations_path)?;

    let mut w = open_writer(&fields_path, gzip)?;
    for n in corpus.ontology().nodes() {
        let level = match n.level {
            FieldLevel::Top => 0,
            FieldLevel::Secondary => 1,
        };
        match format {
            FileFormat::Tsv => {
                let parent = n.parent.map(|p| p.0.to_string()).unwrap_or_default();
                writeln!(w, "{}\t{}\t{level}\t{parent}", n.id.0, n.name)
            }
            FileFormat::Jsonl => writeln!(
                w,
                "{}",
                serde_json::json!({
                    "id": n.id.0,
                    "name": n.name,
                    "level": level,
                    "parent": n.parent.map(|p| p.0),
                })
            ),
        }
        .map_err(|source| Error::Io {
            path: fields_path.clone(),
            source,
        })?;
    }
    finish_writer(w, &fields_path)?;

    Ok((papers_path, citations_path, fields_path))
}

enum SinkWriter {
    Plain(BufWriter<File>),
    Gz(GzEncoder<BufWriter<File>>),
}

impl Write for SinkWriter {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        match self {
            SinkWriter::Plain(w) => w.write(buf),
            SinkWriter::Gz(w) => w.write(buf),
        }
    }

    fn flush(&mut self) -> std::io::Result<()> {
        match self {
            SinkWriter::Plain(w) => w.flush(),
            SinkWriter::Gz(w) => w.flush(),
        }
    }
}

fn open_writer(path: &Path, gzip: bool) -> Result<SinkWriter> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let buf = BufWriter::new(file);
    Ok(if gzip {
        SinkWriter::Gz(GzEncoder::new(buf, flate2::Compression::default()))
    } else {
        SinkWriter::Plain(buf)
    })
}

fn finish_writer(w: SinkWriter, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    match w {
        SinkWriter::Plain(mut w) => w.flush().map_err(io_err),
        SinkWriter::Gz(w) => w.finish().and_then(|mut inner| inner.flush()).map_err(io_err),
    }
}

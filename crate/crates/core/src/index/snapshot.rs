//! Binary snapshot of an [`InboundIndex`] plus a set of field collections,
//! so repeated analyses of the same slice can skip the rebuild.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   8  b"KDIDX\0\0\x01"          (version folded into the last byte)
//! i32        upto_year
//! u64        slice size |G_y|
//! u32        n_papers
//! per paper: u16 len + external id bytes (dense order)
//! u64        len(offsets), then offsets as u64
//! u64        len(neighbors), then neighbors as u32
//! u32        n_fields
//! per field: u64 field id, u32 blob len, roaring-serialized set
//! 32         SHA-256 of everything above
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{InboundIndex, PaperSet};
use crate::corpus::FieldId;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"KDIDX\0\0\x01";

/// An index plus named field collections, as stored on disk.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub index: InboundIndex,
    pub external_ids: Vec<String>,
    pub collections: Vec<(FieldId, PaperSet)>,
}

struct HashingWriter<W: Write> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

pub fn save_snapshot(snapshot: &Snapshot, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = HashingWriter {
        inner: BufWriter::new(file),
        hasher: Sha256::new(),
    };

    let (upto_year, slice_size, offsets, neighbors) = snapshot.index.clone().into_raw();
    (|| -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&upto_year.to_le_bytes())?;
        w.write_all(&slice_size.to_le_bytes())?;
        w.write_all(&(snapshot.external_ids.len() as u32).to_le_bytes())?;
        for ext in &snapshot.external_ids {
            let bytes = ext.as_bytes();
            w.write_all(&(bytes.len() as u16).to_le_bytes())?;
            w.write_all(bytes)?;
        }
        w.write_all(&(offsets.len() as u64).to_le_bytes())?;
        for v in &offsets {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(neighbors.len() as u64).to_le_bytes())?;
        for v in &neighbors {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(snapshot.collections.len() as u32).to_le_bytes())?;
        for (f, set) in &snapshot.collections {
            w.write_all(&f.0.to_le_bytes())?;
            let blob = set.serialized_bytes();
            w.write_all(&(blob.len() as u32).to_le_bytes())?;
            w.write_all(&blob)?;
        }
        Ok(())
    })()
    .map_err(io_err)?;

    let digest = w.hasher.finalize();
    let mut inner = w.inner;
    inner.write_all(&digest).map_err(io_err)?;
    inner.flush().map_err(io_err)
}

pub fn load_snapshot(path: &Path) -> Result<Snapshot> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = BufReader::new(File::open(path).map_err(io_err)?);
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(io_err)?;
    if bytes.len() < MAGIC.len() + 32 {
        return Err(Error::Snapshot("file too short".into()));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 32);
    let digest = Sha256::digest(body);
    if digest.as_slice() != trailer {
        return Err(Error::Snapshot("checksum mismatch".into()));
    }

    let mut r = Cursor { body, pos: 0 };
    if r.take(MAGIC.len())? != MAGIC.as_slice() {
        return Err(Error::Snapshot("bad magic or version".into()));
    }
    let upto_year = i32::from_le_bytes(r.array()?);
    let slice_size = u64::from_le_bytes(r.array()?);
    let n_papers = u32::from_le_bytes(r.array()?) as usize;
    let mut external_ids = Vec::with_capacity(n_papers);
    for _ in 0..n_papers {
        let len = u16::from_le_bytes(r.array()?) as usize;
        let raw = r.take(len)?;
        external_ids.push(
            String::from_utf8(raw.to_vec())
                .map_err(|_| Error::Snapshot("non-UTF-8 external id".into()))?,
        );
    }
    let n_offsets = u64::from_le_bytes(r.array()?) as usize;
    let mut offsets = Vec::with_capacity(n_offsets);
    for _ in 0..n_offsets {
        offsets.push(u64::from_le_bytes(r.array()?));
    }
    let n_neighbors = u64::from_le_bytes(r.array()?) as usize;
    let mut neighbors = Vec::with_capacity(n_neighbors);
    for _ in 0..n_neighbors {
        neighbors.push(u32::from_le_bytes(r.array()?));
    }
    let n_fields = u32::from_le_bytes(r.array()?) as usize;
    let mut collections = Vec::with_capacity(n_fields);
    for _ in 0..n_fields {
        let field = FieldId(u64::from_le_bytes(r.array()?));
        let len = u32::from_le_bytes(r.array()?) as usize;
        let blob = r.take(len)?;
        collections.push((field, PaperSet::from_serialized(blob)?));
    }
    if offsets.len() != n_papers + 1 {
        return Err(Error::Snapshot("offset table size mismatch".into()));
    }

    Ok(Snapshot {
        index: InboundIndex::from_raw(upto_year, slice_size, offsets, neighbors),
        external_ids,
        collections,
    })
}

struct Cursor<'a> {
    body: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.body.len() {
            return Err(Error::Snapshot("truncated body".into()));
        }
        let out = &self.body[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::t1_corpus;
    use super::super::{build_inbound_index, field_collections};
    use super::*;

    #[test]
    fn snapshot_round_trips() {
        let c = t1_corpus();
        let idx = build_inbound_index(&c.slice(2000), &c);
        let fields = vec![FieldId(1), FieldId(2)];
        let sets = field_collections(&idx, &c, &fields).unwrap();
        let snapshot = Snapshot {
            index: idx.clone(),
            external_ids: c.external_ids().to_vec(),
            collections: fields.into_iter().zip(sets).collect(),
        };

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("slice2000.kdidx");
        save_snapshot(&snapshot, &path).unwrap();
        let loaded = load_snapshot(&path).unwrap();
        assert_eq!(loaded.index, idx);
        assert_eq!(loaded.external_ids, c.external_ids());
        assert_eq!(loaded.collections.len(), 2);
        assert_eq!(loaded.collections[0].1, snapshot.collections[0].1);

        // Flipping any byte must be caught by the checksum.
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[MAGIC.len() + 3] ^= 0x40;
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_snapshot(&path).is_err());
    }
}

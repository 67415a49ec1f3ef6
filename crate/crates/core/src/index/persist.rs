//! Single-file index format, version 1. All integers little-endian.
//!
//! ```text
//! magic        4 bytes   "CGIX"
//! version      u32       1
//! vocab name   u32 len + UTF-8 bytes
//! vocab size   u32
//! word count   u32       0 when no word table is stored, else vocab size - 4
//! words        word count × (u32 len + UTF-8), ids 4.. in order
//! doc bounds   u64 count + count × u32 start offsets
//! text         u64 count + count × u32 token ids (separator = 0xFFFFFFFF)
//! suffix array u64 count + count × u32 positions
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CorpusIndex, IndexError};
use crate::codec::*;
use crate::vocab::{read_word_table, write_word_table, Vocab, VocabId};

pub const INDEX_MAGIC: &[u8; 4] = b"CGIX";
pub const INDEX_FORMAT_VERSION: u32 = 1;

/// An index plus, optionally, the word table that maps text to its ids.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexFile {
    pub index: CorpusIndex,
    pub vocab: Option<Vocab>,
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

impl IndexFile {
    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let idx = &self.index;
        w.write_all(INDEX_MAGIC)?;
        put_u32(w, INDEX_FORMAT_VERSION)?;
        put_str(w, &idx.vocab.name)?;
        put_u32(w, idx.vocab.size)?;
        write_word_table(w, self.vocab.as_ref())?;
        put_u32s(w, &idx.doc_bounds)?;
        put_u32s(w, &idx.text)?;
        put_u32s(w, &idx.sa)?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> io::Result<Self> {
        expect_magic(r, INDEX_MAGIC)?;
        let version = get_u32(r)?;
        if version != INDEX_FORMAT_VERSION {
            return Err(invalid(format!("unsupported index version {version}")));
        }
        let name = get_str(r)?;
        let size = get_u32(r)?;
        let id = VocabId::new(name, size);
        let vocab = read_word_table(r, &id)?;
        let doc_bounds = get_u32s(r)?;
        let text = get_u32s(r)?;
        let sa = get_u32s(r)?;
        if sa.len() != text.len() {
            return Err(invalid("suffix array length differs from text length"));
        }
        let mut seen = vec![false; sa.len()];
        for &p in &sa {
            let slot = seen
                .get_mut(p as usize)
                .ok_or_else(|| invalid("suffix array entry out of range"))?;
            if std::mem::replace(slot, true) {
                return Err(invalid("suffix array is not a permutation"));
            }
        }
        if doc_bounds.windows(2).any(|w| w[0] > w[1]) || doc_bounds.iter().any(|&b| b as usize > text.len()) {
            return Err(invalid("document bounds are not sorted offsets into the text"));
        }
        Ok(Self {
            index: CorpusIndex {
                text,
                sa,
                doc_bounds,
                vocab: id,
            },
            vocab,
        })
    }
}

pub fn write_index_file(path: &Path, file: &IndexFile) -> Result<(), IndexError> {
    let mut w = BufWriter::new(File::create(path)?);
    file.write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_index_file(path: &Path) -> Result<IndexFile, IndexError> {
    let mut r = BufReader::new(File::open(path)?);
    Ok(IndexFile::read_from(&mut r)?)
}

//! Tabular model checkpoints, format version 1. Integers and floats are
//! little-endian.
//!
//! ```text
//! magic       4 bytes  "CGLM"
//! version     u32      1
//! vocab name  u32 len + UTF-8
//! vocab size  u32
//! word table  u32 count (0 = absent) + count × (u32 len + UTF-8)
//! order       u32
//! seed        u64
//! init scale  f64
//! row count   u64
//! rows        row count × {
//!               has_condition u32 (0/1)
//!               [condition    u64 len + len × u32]   when has_condition = 1
//!               context       order × u32
//!               logits        vocab size × f64
//!             }
//! ```
//! Rows are written in key order, so equal models produce equal bytes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::tabular::{RowKey, TabularLm};
use crate::codec::*;
use crate::vocab::{read_word_table, write_word_table, Vocab, VocabId};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CGLM";
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: TabularLm,
    pub vocab: Option<Vocab>,
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let m = &self.model;
        let id = crate::lm::LanguageModel::vocab_id(m);
        w.write_all(CHECKPOINT_MAGIC)?;
        put_u32(w, CHECKPOINT_FORMAT_VERSION)?;
        put_str(w, &id.name)?;
        put_u32(w, id.size)?;
        write_word_table(w, self.vocab.as_ref())?;
        put_u32(w, m.order() as u32)?;
        put_u64(w, m.seed())?;
        put_f64(w, m.init_scale())?;
        put_u64(w, m.rows().len() as u64)?;
        for (key, row) in m.rows() {
            match &key.condition {
                Some(c) => {
                    put_u32(w, 1)?;
                    put_u32s(w, c)?;
                }
                None => put_u32(w, 0)?,
            }
            for &t in &key.context {
                put_u32(w, t)?;
            }
            for &x in row {
                put_f64(w, x)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> io::Result<Self> {
        expect_magic(r, CHECKPOINT_MAGIC)?;
        let version = get_u32(r)?;
        if version != CHECKPOINT_FORMAT_VERSION {
            return Err(invalid(format!("unsupported checkpoint version {version}")));
        }
        let id = VocabId::new(get_str(r)?, get_u32(r)?);
        let vocab = read_word_table(r, &id)?;
        let order = get_u32(r)? as usize;
        if order == 0 {
            return Err(invalid("model order must be at least 1"));
        }
        let seed = get_u64(r)?;
        let init_scale = get_f64(r)?;
        let count = get_u64(r)?;
        let mut rows = BTreeMap::new();
        for _ in 0..count {
            let condition = match get_u32(r)? {
                0 => None,
                1 => Some(get_u32s(r)?),
                other => return Err(invalid(format!("bad condition flag {other}"))),
            };
            let mut context = Vec::with_capacity(order);
            for _ in 0..order {
                context.push(get_u32(r)?);
            }
            let mut row = Vec::with_capacity(id.size as usize);
            for _ in 0..id.size {
                row.push(get_f64(r)?);
            }
            rows.insert(RowKey { condition, context }, row);
        }
        Ok(Self {
            model: TabularLm::from_parts(id, order, seed, init_scale, rows),
            vocab,
        })
    }
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    ckpt.write_to(&mut w)?;
    w.flush()
}

pub fn read_checkpoint(path: &Path) -> io::Result<Checkpoint> {
    Checkpoint::read_from(&mut BufReader::new(File::open(path)?))
}

//! Model file: little-endian binary with a magic tag, a format version, the
//! architecture config, scaling constants, training metadata, every
//! parameter tensor in declared order, and a trailing CRC-32.

use std::path::Path;

use super::config::OperatorConfig;
use super::model::{Normalization, SurrogateModel, TrainingMeta};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"RVSURR\0\0";
pub const FORMAT_VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn size(&mut self, v: usize) {
        self.u32(u32::try_from(v).expect("dimension fits in u32"));
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let bytes = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::CorruptFile(format!("unexpected end of data at byte {}", self.pos)))?;
        self.pos = end;
        Ok(bytes.try_into().expect("slice of length N"))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
    fn size(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }
}

pub fn encode_model(model: &SurrogateModel) -> Vec<u8> {
    let mut w = Writer(Vec::with_capacity(128 + 8 * model.num_params()));
    w.0.extend_from_slice(&MAGIC);
    w.u32(FORMAT_VERSION);
    let c = model.config();
    w.size(c.token_dim);
    w.size(c.num_blocks);
    w.size(c.num_heads);
    w.size(c.ff_dim);
    w.size(c.decoder_dim);
    w.f64(c.learning_rate);
    w.f64(c.lr_decay);
    w.size(c.lr_step);
    w.size(c.epochs);
    w.size(c.batch_size);
    w.f64(c.rms_alpha);
    w.f64(c.rms_eps);
    w.u64(c.seed);
    let m = model.meta();
    w.u32(m.epochs_trained);
    w.u64(m.samples);
    w.f64(m.final_loss);
    let n = model.normalization();
    for v in n.in_shift.iter().chain(&n.in_scale).chain(&n.out_shift).chain(&n.out_scale) {
        w.f64(*v);
    }
    w.u64(model.num_params() as u64);
    for &p in model.params() {
        w.f64(p);
    }
    let crc = crc32fast::hash(&w.0);
    w.u32(crc);
    w.0
}

pub fn decode_model(bytes: &[u8]) -> Result<SurrogateModel> {
    if bytes.len() < MAGIC.len() + 8 || bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::CorruptFile("missing model file tag".into()));
    }
    let mut r = Reader {
        buf: bytes,
        pos: MAGIC.len(),
    };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::FormatVersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("four bytes"));
    if crc32fast::hash(body) != stored {
        return Err(Error::CorruptFile("checksum mismatch".into()));
    }
    let mut r = Reader { buf: body, pos: r.pos };
    let config = OperatorConfig {
        token_dim: r.size()?,
        num_blocks: r.size()?,
        num_heads: r.size()?,
        ff_dim: r.size()?,
        decoder_dim: r.size()?,
        learning_rate: r.f64()?,
        lr_decay: r.f64()?,
        lr_step: r.size()?,
        epochs: r.size()?,
        batch_size: r.size()?,
        rms_alpha: r.f64()?,
        rms_eps: r.f64()?,
        seed: r.u64()?,
    };
    let meta = TrainingMeta {
        epochs_trained: r.u32()?,
        samples: r.u64()?,
        final_loss: r.f64()?,
    };
    let mut norm = Normalization::default();
    for v in norm
        .in_shift
        .iter_mut()
        .chain(&mut norm.in_scale)
        .chain(&mut norm.out_shift)
        .chain(&mut norm.out_scale)
    {
        *v = r.f64()?;
    }
    let count = r.u64()? as usize;
    if body.len() - r.pos != 8 * count {
        return Err(Error::CorruptFile(format!(
            "header declares {count} parameters but {} bytes remain",
            body.len() - r.pos
        )));
    }
    let params = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    SurrogateModel::from_parts(config, norm, meta, params)
}

pub fn save_model(model: &SurrogateModel, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<SurrogateModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

//! Binary checkpoint format. All integers and floats are little-endian.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "CDSM"
//! 4       2     version (u16, currently 1)
//! 6       4     input_dim (u32)
//! 10      4     time_embed_dim (u32)
//! 14      4     hidden_dim (u32)
//! 18      4     n_blocks (u32)
//! 22      4     output_dim (u32)
//! 26      4     max_period (f32)
//! 30      8     parameter count P (u64)
//! 38      4P    parameters (f32) in layout declaration order
//! ..      1     optimizer flag (0 or 1)
//! if flag == 1:
//!         8     step (u64)
//!         8     beta1 (f64)
//!         8     beta2 (f64)
//!         8     eps (f64)
//!         4P    first moments (f32)
//!         4P    second moments (f32)
//! ```
//!
//! Files are written to a temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{AdamState, ModelConfig, ScoreModel};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CDSM";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: ScoreModel<f32>,
    pub optimizer: Option<AdamState<f32>>,
}

pub fn encode(model: &ScoreModel<f32>, optimizer: Option<&AdamState<f32>>) -> Vec<u8> {
    let cfg = model.config();
    let n = model.num_params();
    let mut buf = Vec::with_capacity(64 + 12 * n);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for d in [cfg.input_dim, cfg.time_embed_dim, cfg.hidden_dim, cfg.n_blocks, cfg.output_dim] {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    buf.extend_from_slice(&cfg.max_period.to_le_bytes());
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    put_f32s(&mut buf, model.params());
    match optimizer {
        None => buf.push(0),
        Some(opt) => {
            buf.push(1);
            buf.extend_from_slice(&opt.step.to_le_bytes());
            for v in [opt.beta1, opt.beta2, opt.eps] {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            put_f32s(&mut buf, &opt.m);
            put_f32s(&mut buf, &opt.v);
        }
    }
    buf
}

fn put_f32s(buf: &mut Vec<u8>, vals: &[f32]) {
    for v in vals {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format(format!("checkpoint truncated while reading {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::Format("size overflow".into()))?, what)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::Format("bad checkpoint magic".into()));
    }
    let version = u16::from_le_bytes(r.take(2, "version")?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let input_dim = r.u32("input_dim")? as usize;
    let time_embed_dim = r.u32("time_embed_dim")? as usize;
    let hidden_dim = r.u32("hidden_dim")? as usize;
    let n_blocks = r.u32("n_blocks")? as usize;
    let output_dim = r.u32("output_dim")? as usize;
    let max_period = f32::from_le_bytes(r.take(4, "max_period")?.try_into().unwrap());
    let config = ModelConfig { input_dim, output_dim, hidden_dim, n_blocks, time_embed_dim, max_period };
    let count = r.u64("parameter count")? as usize;
    let expected = super::Layout::new(&config).total();
    if count != expected {
        return Err(Error::Format(format!(
            "checkpoint declares {count} parameters but its dimensions need {expected}"
        )));
    }
    let params = r.f32s(count, "parameters")?;
    let model = ScoreModel::from_params(config, params).map_err(|e| Error::Format(e.to_string()))?;
    let optimizer = match r.take(1, "optimizer flag")?[0] {
        0 => None,
        1 => {
            let step = r.u64("optimizer step")?;
            let beta1 = r.f64("beta1")?;
            let beta2 = r.f64("beta2")?;
            let eps = r.f64("eps")?;
            let m = r.f32s(count, "first moments")?;
            let v = r.f32s(count, "second moments")?;
            Some(AdamState { beta1, beta2, eps, step, m, v })
        }
        f => return Err(Error::Format(format!("bad optimizer flag {f}"))),
    };
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes after checkpoint", bytes.len() - r.pos)));
    }
    if !model.all_finite() {
        return Err(Error::Format("checkpoint contains non-finite parameters".into()));
    }
    Ok(Checkpoint { model, optimizer })
}

pub fn save_checkpoint(model: &ScoreModel<f32>, optimizer: Option<&AdamState<f32>>, path: &Path) -> Result<()> {
    let bytes = encode(model, optimizer);
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> ScoreModel<f32> {
        ScoreModel::init(ModelConfig::new(10, 3).hidden(8).blocks(2).time_embed(4), 11).unwrap()
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let m = model();
        let mut opt = AdamState::for_model(&m);
        opt.step = 7;
        opt.m[3] = 0.25;
        let ck = decode(&encode(&m, Some(&opt))).unwrap();
        assert_eq!(ck.model, m);
        assert_eq!(ck.optimizer.unwrap(), opt);
        assert!(decode(&encode(&m, None)).unwrap().optimizer.is_none());
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&model(), None);
        assert_eq!(&bytes[..4], b"CDSM");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u32::from_le_bytes(bytes[6..10].try_into().unwrap()), 10);
        assert_eq!(u32::from_le_bytes(bytes[14..18].try_into().unwrap()), 8);
    }

    #[test]
    fn truncation_and_corruption_are_format_errors() {
        let bytes = encode(&model(), None);
        for cut in [0, 3, 5, 20, 40, bytes.len() - 1] {
            assert!(matches!(decode(&bytes[..cut]), Err(Error::Format(_))), "cut at {cut}");
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(decode(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[14] = 9; // hidden_dim no longer matches the parameter count
        assert!(matches!(decode(&bad), Err(Error::Format(_))));
        let mut long = bytes;
        long.push(0);
        assert!(matches!(decode(&long), Err(Error::Format(_))));
    }
}

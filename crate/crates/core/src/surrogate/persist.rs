//! Binary model container.
//!
//! All integers are little-endian; floats are IEEE-754 binary64 LE.
//!
//! ```text
//! magic          8 bytes  "PMSMSURR"
//! version        u32      FORMAT_VERSION
//! spec hash      u32 length + UTF-8 bytes
//! inputs         u32
//! trunk          u32 count + u32 widths
//! heads          u32 count, then per head: u32 hidden count + u32 widths, u32 outputs
//! params         u64 count + f64 values (layout of `Network`)
//! scaler         f64 × inputs (lower), f64 × inputs (range),
//!                f64 × outputs (mean), f64 × outputs (std)
//! metadata       u32 length + UTF-8 JSON of `TrainingMeta`
//! ```
//!
//! Any shortfall or trailing byte is a shape mismatch.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::network::{Architecture, HeadSpec, Network};
use super::scaler::Scaler;
use super::MetaModel;
use crate::error::SurrogateError;

pub const MAGIC: &[u8; 8] = b"PMSMSURR";
pub const FORMAT_VERSION: u32 = 1;

fn put_u32(buf: &mut Vec<u8>, x: usize) {
    buf.extend_from_slice(&(x as u32).to_le_bytes());
}

fn put_f64s(buf: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    put_u32(buf, s.len());
    buf.extend_from_slice(s.as_bytes());
}

pub fn to_bytes(model: &MetaModel) -> Vec<u8> {
    let arch = &model.network.arch;
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_str(&mut buf, &model.spec_hash);
    put_u32(&mut buf, arch.inputs);
    put_u32(&mut buf, arch.trunk.len());
    arch.trunk.iter().for_each(|&w| put_u32(&mut buf, w));
    put_u32(&mut buf, arch.heads.len());
    for h in &arch.heads {
        put_u32(&mut buf, h.hidden.len());
        h.hidden.iter().for_each(|&w| put_u32(&mut buf, w));
        put_u32(&mut buf, h.outputs);
    }
    buf.extend_from_slice(&(model.network.params.len() as u64).to_le_bytes());
    put_f64s(&mut buf, &model.network.params);
    put_f64s(&mut buf, &model.scaler.in_lower);
    put_f64s(&mut buf, &model.scaler.in_range);
    put_f64s(&mut buf, &model.scaler.out_mean);
    put_f64s(&mut buf, &model.scaler.out_std);
    let meta = serde_json::to_string(&model.meta).expect("training metadata serializes");
    put_str(&mut buf, &meta);
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], SurrogateError> {
        if self.bytes.len() - self.pos < n {
            return Err(SurrogateError::ShapeMismatch(format!(
                "file truncated while reading {what}"
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<usize, SurrogateError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self, what: &str) -> Result<usize, SurrogateError> {
        let x = u64::from_le_bytes(self.take(8, what)?.try_into().unwrap());
        usize::try_from(x).map_err(|_| SurrogateError::ShapeMismatch(format!("{what} too large")))
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>, SurrogateError> {
        let len = n
            .checked_mul(8)
            .ok_or_else(|| SurrogateError::ShapeMismatch(format!("{what} too large")))?;
        Ok(self
            .take(len, what)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn widths(&mut self, what: &str) -> Result<Vec<usize>, SurrogateError> {
        let n = self.u32(what)?;
        // every width takes four bytes, so this bounds the allocation
        if n > (self.bytes.len() - self.pos) / 4 {
            return Err(SurrogateError::ShapeMismatch(format!("{what} count exceeds file")));
        }
        (0..n).map(|_| self.u32(what)).collect()
    }

    fn string(&mut self, what: &str) -> Result<String, SurrogateError> {
        let n = self.u32(what)?;
        String::from_utf8(self.take(n, what)?.to_vec())
            .map_err(|_| SurrogateError::Format(format!("{what} is not UTF-8")))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<MetaModel, SurrogateError> {
    let mut r = Reader { bytes, pos: 0 };
    if bytes.len() < MAGIC.len() {
        return Err(SurrogateError::ShapeMismatch("file truncated while reading magic".into()));
    }
    if r.take(MAGIC.len(), "magic")? != MAGIC {
        return Err(SurrogateError::Format("bad magic bytes".into()));
    }
    let version = r.u32("version")? as u32;
    if version != FORMAT_VERSION {
        return Err(SurrogateError::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let spec_hash = r.string("spec hash")?;
    let inputs = r.u32("inputs")?;
    let trunk = r.widths("trunk")?;
    let n_heads = r.u32("head count")?;
    if n_heads > bytes.len() {
        return Err(SurrogateError::ShapeMismatch("head count exceeds file".into()));
    }
    let mut heads = Vec::with_capacity(n_heads);
    for _ in 0..n_heads {
        let hidden = r.widths("head")?;
        let outputs = r.u32("head outputs")?;
        heads.push(HeadSpec { hidden, outputs });
    }
    let arch = Architecture {
        inputs,
        trunk,
        heads,
    };
    let n_params = r.u64("parameter count")?;
    let params = r.f64s(n_params, "parameters")?;
    let n_out = arch.outputs();
    let network = Network::from_params(arch, params).ok_or_else(|| {
        SurrogateError::ShapeMismatch("parameter count does not match the layer shapes".into())
    })?;
    let scaler = Scaler {
        in_lower: r.f64s(inputs, "input scaling")?,
        in_range: r.f64s(inputs, "input scaling")?,
        out_mean: r.f64s(n_out, "output scaling")?,
        out_std: r.f64s(n_out, "output scaling")?,
    };
    let meta_json = r.string("metadata")?;
    if r.pos != bytes.len() {
        return Err(SurrogateError::ShapeMismatch("trailing bytes after metadata".into()));
    }
    let meta = serde_json::from_str(&meta_json)
        .map_err(|e| SurrogateError::Format(format!("metadata: {e}")))?;
    Ok(MetaModel {
        network,
        scaler,
        spec_hash,
        meta,
    })
}

/// Writes to a sibling temporary file, then renames over `path`.
pub fn save(model: &MetaModel, path: &Path) -> Result<(), SurrogateError> {
    let bytes = to_bytes(model);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<MetaModel, SurrogateError> {
    from_bytes(&fs::read(path)?)
}

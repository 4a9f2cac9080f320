use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::coefficients::PeriodicCoefficientField;
use super::correctors::CorrectorSet;
use super::tensor::HomogenizedTensor;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"H2DC";
const VERSION: u32 = 1;

/// Cache key: hash of the coefficient descriptor and the cell resolution.
pub fn cache_key(field: &PeriodicCoefficientField, m: usize) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(field.descriptor().as_bytes());
    h.update((m as u64).to_le_bytes());
    h.finalize().into()
}

/// Writes correctors and tensor in a little-endian binary layout; values are
/// stored bit for bit.
pub fn save_cache(
    path: &Path,
    field: &PeriodicCoefficientField,
    correctors: &CorrectorSet,
    hom: &HomogenizedTensor,
) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&cache_key(field, correctors.resolution()));
    buf.extend_from_slice(&(correctors.resolution() as u64).to_le_bytes());
    buf.extend_from_slice(&(correctors.components() as u64).to_le_bytes());
    buf.extend_from_slice(&correctors.residual().to_le_bytes());
    for v in hom.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for f in correctors.fields() {
        for v in f {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Loads a cache written for exactly this field and resolution. A missing
/// file or a different key yields `Ok(None)`.
pub fn load_cache(
    path: &Path,
    field: &PeriodicCoefficientField,
    m: usize,
) -> Result<Option<(CorrectorSet, HomogenizedTensor)>> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut r = Reader { bytes: &bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Cache(format!("unsupported version {version}")));
    }
    if r.take(32)? != cache_key(field, m) {
        return Ok(None);
    }
    let stored_m = r.u64()? as usize;
    let n = r.u64()? as usize;
    if stored_m != m || n != field_components(field) {
        return Ok(None);
    }
    let residual = r.f64()?;
    let hom = (0..4 * n * n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let dim = n * m * m;
    let fields = (0..2 * n)
        .map(|_| (0..dim).map(|_| r.f64()).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    if r.pos != bytes.len() {
        return Err(Error::Cache("trailing bytes".into()));
    }
    Ok(Some((CorrectorSet::from_parts(n, m, fields, residual)?, HomogenizedTensor::new(n, hom)?)))
}

fn field_components(field: &PeriodicCoefficientField) -> usize {
    use crate::fem::TensorField;
    field.components()
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, k: usize) -> Result<&[u8]> {
        let s = self
            .bytes
            .get(self.pos..self.pos + k)
            .ok_or_else(|| Error::Cache("truncated file".into()))?;
        self.pos += k;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

//! Little-endian framing shared by the cache and checkpoint formats. Every
//! file ends in the SHA-256 of all preceding bytes.

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

const TRAILER: usize = 32;

#[derive(Default)]
pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.bytes(s.as_bytes());
    }

    /// Appends the checksum trailer.
    pub fn finish(mut self) -> Vec<u8> {
        let digest = Sha256::digest(&self.buf);
        self.buf.extend_from_slice(&digest);
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Verifies the trailer and returns a reader over the payload.
    pub fn open(data: &'a [u8]) -> Result<Self, &'static str> {
        if data.len() < TRAILER {
            return Err("file shorter than its checksum");
        }
        let (payload, digest) = data.split_at(data.len() - TRAILER);
        if Sha256::digest(payload).as_slice() != digest {
            return Err("checksum mismatch");
        }
        Ok(Self { buf: payload, pos: 0 })
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8], &'static str> {
        let end = self.pos.checked_add(n).ok_or("length overflow")?;
        let out = self.buf.get(self.pos..end).ok_or("unexpected end of data")?;
        self.pos = end;
        Ok(out)
    }

    pub fn u32(&mut self) -> Result<u32, &'static str> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, &'static str> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64, &'static str> {
        Ok(f64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    pub fn len(&mut self) -> Result<usize, &'static str> {
        let n = self.u64()?;
        let n = usize::try_from(n).map_err(|_| "length overflow")?;
        if n > self.buf.len() {
            return Err("length exceeds file size");
        }
        Ok(n)
    }

    pub fn str(&mut self) -> Result<String, &'static str> {
        let n = self.len()?;
        String::from_utf8(self.bytes(n)?.to_vec()).map_err(|_| "invalid UTF-8")
    }

    pub fn finished(&self) -> bool {
        self.pos == self.buf.len()
    }
}

/// Writes through a temporary file in the destination directory and
/// renames it into place.
pub(crate) fn write_atomic(path: &Path, data: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(data)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

//! Little-endian readers and writers shared by the binary formats.

use byteorder::{ByteOrder, LittleEndian as LE, WriteBytesExt};

use crate::error::{Error, Result};

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8], what: &'static str) -> Self {
        Self { buf, pos: 0, what }
    }

    pub fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < len {
            return Err(Error::Format(format!(
                "{}: truncated at byte {} (wanted {len} more)",
                self.what, self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    pub fn magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        if self.take(4)? != magic {
            return Err(Error::Format(format!("{}: bad magic", self.what)));
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(LE::read_u32(self.take(4)?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(LE::read_u64(self.take(8)?))
    }

    pub fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format(format!("{}: length overflow", self.what)))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(LE::read_f64(self.take(8)?))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| self.overflow())?)?;
        let mut out = vec![0.0; n];
        LE::read_f64_into(bytes, &mut out);
        Ok(out)
    }

    pub fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| self.overflow())?)?;
        let mut out = vec![0.0; n];
        LE::read_f32_into(bytes, &mut out);
        Ok(out)
    }

    pub fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| Error::Format(format!("{}: invalid utf-8", self.what)))
    }

    pub fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!(
                "{}: {} trailing bytes",
                self.what,
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }

    fn overflow(&self) -> Error {
        Error::Format(format!("{}: length overflow", self.what))
    }
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.write_u32::<LE>(v).expect("vec write");
}

pub(crate) fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.write_u64::<LE>(v).expect("vec write");
}

pub(crate) fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.write_f64::<LE>(v).expect("vec write");
}

pub(crate) fn put_f64s(out: &mut Vec<u8>, v: &[f64]) {
    v.iter().for_each(|&x| put_f64(out, x));
}

pub(crate) fn put_f32s(out: &mut Vec<u8>, v: &[f32]) {
    for &x in v {
        out.write_f32::<LE>(x).expect("vec write");
    }
}

pub(crate) fn put_string(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

/// Appends a CRC-32 of everything written so far.
pub(crate) fn seal(out: &mut Vec<u8>) {
    let crc = crc32fast::hash(out);
    put_u32(out, crc);
}

/// Verifies and strips the trailing CRC-32.
pub(crate) fn unseal<'a>(buf: &'a [u8], what: &str) -> Result<&'a [u8]> {
    if buf.len() < 4 {
        return Err(Error::Format(format!("{what}: file too short")));
    }
    let (body, tail) = buf.split_at(buf.len() - 4);
    let stored = LE::read_u32(tail);
    let actual = crc32fast::hash(body);
    if stored != actual {
        return Err(Error::Format(format!(
            "{what}: checksum mismatch (stored {stored:08x}, computed {actual:08x})"
        )));
    }
    Ok(body)
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

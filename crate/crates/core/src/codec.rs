//! Little-endian primitives shared by the index and checkpoint file formats.

use std::io::{self, Read, Write};

pub(crate) fn put_u32<W: Write>(w: &mut W, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn put_u64<W: Write>(w: &mut W, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn put_f64<W: Write>(w: &mut W, v: f64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn put_str<W: Write>(w: &mut W, s: &str) -> io::Result<()> {
    put_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())
}

pub(crate) fn put_u32s<W: Write>(w: &mut W, vs: &[u32]) -> io::Result<()> {
    put_u64(w, vs.len() as u64)?;
    for &v in vs {
        put_u32(w, v)?;
    }
    Ok(())
}

pub(crate) fn get_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn get_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn get_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub(crate) fn get_str<R: Read>(r: &mut R) -> io::Result<String> {
    let len = get_u32(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

pub(crate) fn get_u32s<R: Read>(r: &mut R) -> io::Result<Vec<u32>> {
    let len = get_u64(r)? as usize;
    // guard against absurd lengths from a corrupt header
    let mut out = Vec::with_capacity(len.min(1 << 24));
    for _ in 0..len {
        out.push(get_u32(r)?);
    }
    Ok(out)
}

pub(crate) fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 4]) -> io::Result<()> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    if &b != magic {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&b),
                String::from_utf8_lossy(magic)
            ),
        ));
    }
    Ok(())
}

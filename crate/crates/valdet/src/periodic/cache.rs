//! Optional on-disk cache of primitive orbit tables under `VALDET_CACHE_DIR`.
//!
//! Layout: magic `VDOC`, `u32` version, `u64` max period, `u32` record count,
//! then per record a `u16` word length, `u16` letters, and intervals written
//! as two length-prefixed exact hexadecimal strings. All integers are little
//! endian. Unreadable or mismatching files are ignored.

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;

use rug::Float;

use super::{Observable, PrimitiveOrbit, Word};
use crate::arith::ValidatedReal;
use crate::systems::SystemSpec;

const MAGIC: &[u8; 4] = b"VDOC";
const VERSION: u32 = 1;

pub(super) struct Key {
    path: Option<PathBuf>,
    prec: u32,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub(super) fn key(sys: &SystemSpec, n_max: usize, prec: u32, obs: Option<&Observable>) -> Key {
    let path = std::env::var_os("VALDET_CACHE_DIR").map(|dir| {
        let desc = format!("{}|{}|{}|{:?}", sys.canonical, n_max, prec, obs);
        PathBuf::from(dir).join(format!("orbits-{:016x}.bin", fnv1a(desc.as_bytes())))
    });
    Key { path, prec }
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn write_iv(out: &mut Vec<u8>, v: &ValidatedReal) {
    write_str(out, &v.lo().to_string_radix(16, None));
    write_str(out, &v.hi().to_string_radix(16, None));
}

pub(super) fn store(key: &Key, orbits: &[Vec<PrimitiveOrbit>]) {
    let Some(path) = &key.path else { return };
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(orbits.len() as u64).to_le_bytes());
    let count: usize = orbits.iter().map(|o| o.len()).sum();
    out.extend_from_slice(&(count as u32).to_le_bytes());
    for o in orbits.iter().flatten() {
        out.extend_from_slice(&(o.word.len() as u16).to_le_bytes());
        for l in &o.word.0 {
            out.extend_from_slice(&l.to_le_bytes());
        }
        write_iv(&mut out, &o.point);
        write_iv(&mut out, &o.lambda);
        match &o.birkhoff {
            Some(b) => {
                out.push(1);
                write_iv(&mut out, b);
            }
            None => out.push(0),
        }
    }
    let tmp = path.with_extension("tmp");
    let res = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(&out))
        .and_then(|_| fs::rename(&tmp, path));
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> io::Result<&[u8]> {
        if self.buf.len() < n {
            return Err(io::ErrorKind::UnexpectedEof.into());
        }
        let (a, b) = self.buf.split_at(n);
        self.buf = b;
        Ok(a)
    }

    fn u16(&mut self) -> io::Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> io::Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> io::Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn float(&mut self, prec: u32) -> io::Result<Float> {
        let n = self.u32()? as usize;
        let s = std::str::from_utf8(self.take(n)?).map_err(|_| io::ErrorKind::InvalidData)?;
        let parsed = Float::parse_radix(s, 16).map_err(|_| io::ErrorKind::InvalidData)?;
        Ok(Float::with_val(prec, parsed))
    }

    fn iv(&mut self, prec: u32) -> io::Result<ValidatedReal> {
        let lo = self.float(prec)?;
        let hi = self.float(prec)?;
        ValidatedReal::try_new(lo, hi).map_err(|_| io::ErrorKind::InvalidData.into())
    }
}

fn parse(buf: &[u8], n_max: usize, prec: u32) -> io::Result<Vec<Vec<PrimitiveOrbit>>> {
    let mut r = Reader { buf };
    if r.take(4)? != MAGIC || r.u32()? != VERSION || r.u64()? != n_max as u64 {
        return Err(io::ErrorKind::InvalidData.into());
    }
    let count = r.u32()?;
    let mut orbits = vec![Vec::new(); n_max];
    for _ in 0..count {
        let len = r.u16()? as usize;
        if len == 0 || len > n_max {
            return Err(io::ErrorKind::InvalidData.into());
        }
        let word = Word((0..len).map(|_| r.u16()).collect::<io::Result<_>>()?);
        let point = r.iv(prec)?;
        let lambda = r.iv(prec)?;
        let birkhoff = match r.take(1)?[0] {
            0 => None,
            _ => Some(r.iv(prec)?),
        };
        orbits[len - 1].push(PrimitiveOrbit {
            word,
            point,
            lambda,
            birkhoff,
        });
    }
    Ok(orbits)
}

pub(super) fn load(key: &Key, n_max: usize) -> Option<Vec<Vec<PrimitiveOrbit>>> {
    let path = key.path.as_ref()?;
    let mut buf = Vec::new();
    fs::File::open(path).ok()?.read_to_end(&mut buf).ok()?;
    parse(&buf, n_max, key.prec).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let p = 128;
        let orbit = PrimitiveOrbit {
            word: Word(vec![0, 1, 1]),
            point: ValidatedReal::from_ratio(p, 1, 3),
            lambda: ValidatedReal::from_ratio(p, -2, 7),
            birkhoff: Some(ValidatedReal::from_ratio(p, 5, 11)),
        };
        let dir = std::env::temp_dir().join(format!("valdet-cache-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let key = Key {
            path: Some(dir.join("t.bin")),
            prec: p,
        };
        let orbits = vec![vec![], vec![], vec![orbit.clone()]];
        store(&key, &orbits);
        let back = load(&key, 3).unwrap();
        assert_eq!(back[2][0], orbit);
        assert!(load(&key, 4).is_none());
        fs::remove_dir_all(&dir).unwrap();
    }
}

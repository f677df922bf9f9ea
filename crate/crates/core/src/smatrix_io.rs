//! S-matrix block dumps.
//!
//! Binary layout (little endian):
//!
//! ```text
//! "CDSM"  u32 version = 1
//! f64 energy  i32 J  u8 species  u8 handedness  u32 n
//! n × (i32 j, i32 τ, i32 ℓ, f64 threshold)
//! n² × (f64 re, f64 im), column-major
//! ```
//!
//! The CSV form carries the same data: `#` metadata lines, a channel table
//! and one `row,col,re,im` line per element. Both round-trip exactly.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dispersion::Handedness;
use crate::error::{Error, Result};
use crate::propagator::{ChannelLabel, SMatrixBlock};
use crate::rotor::D2Species;

pub const MAGIC: &[u8; 4] = b"CDSM";
pub const VERSION: u32 = 1;
/// Refuse blocks larger than this when decoding untrusted input.
pub const MAX_CHANNELS: usize = 4096;

fn species_code(s: D2Species) -> u8 {
    match s {
        D2Species::A => 0,
        D2Species::Ba => 1,
        D2Species::Bb => 2,
        D2Species::Bc => 3,
    }
}

fn species_from(c: u8) -> Result<D2Species> {
    Ok(match c {
        0 => D2Species::A,
        1 => D2Species::Ba,
        2 => D2Species::Bb,
        3 => D2Species::Bc,
        _ => return Err(Error::Format(format!("unknown species code {c}"))),
    })
}

fn species_name(s: D2Species) -> &'static str {
    match s {
        D2Species::A => "A",
        D2Species::Ba => "Ba",
        D2Species::Bb => "Bb",
        D2Species::Bc => "Bc",
    }
}

fn species_parse(s: &str) -> Result<D2Species> {
    Ok(match s {
        "A" => D2Species::A,
        "Ba" => D2Species::Ba,
        "Bb" => D2Species::Bb,
        "Bc" => D2Species::Bc,
        _ => return Err(Error::Format(format!("unknown species {s:?}"))),
    })
}

fn hand_code(h: Handedness) -> u8 {
    match h {
        Handedness::L => 0,
        Handedness::R => 1,
    }
}

fn hand_from(c: u8) -> Result<Handedness> {
    match c {
        0 => Ok(Handedness::L),
        1 => Ok(Handedness::R),
        _ => Err(Error::Format(format!("unknown handedness code {c}"))),
    }
}

fn hand_parse(s: &str) -> Result<Handedness> {
    match s {
        "L" => Ok(Handedness::L),
        "R" => Ok(Handedness::R),
        _ => Err(Error::Format(format!("unknown handedness {s:?}"))),
    }
}

pub fn encode_binary(b: &SMatrixBlock) -> Vec<u8> {
    let n = b.n();
    let mut out = Vec::with_capacity(26 + 20 * n + 16 * n * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&b.energy.to_le_bytes());
    out.extend_from_slice(&b.j_total.to_le_bytes());
    out.push(species_code(b.species));
    out.push(hand_code(b.handedness));
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for c in &b.channels {
        out.extend_from_slice(&c.j.to_le_bytes());
        out.extend_from_slice(&c.tau.to_le_bytes());
        out.extend_from_slice(&c.l.to_le_bytes());
        out.extend_from_slice(&c.threshold.to_le_bytes());
    }
    for z in b.s.iter() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos.checked_add(N).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated S-matrix dump at byte {}", self.pos)))?;
        let mut a = [0u8; N];
        a.copy_from_slice(&self.buf[self.pos..end]);
        self.pos = end;
        Ok(a)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

fn check_block(b: &SMatrixBlock) -> Result<()> {
    if !b.energy.is_finite() {
        return Err(Error::Format("non-finite energy".into()));
    }
    for c in &b.channels {
        if c.j < 0 || c.l < 0 || c.tau.abs() > c.j || !c.threshold.is_finite() {
            return Err(Error::Format(format!("invalid channel label {c:?}")));
        }
    }
    if b.s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Format("non-finite S-matrix element".into()));
    }
    Ok(())
}

pub fn decode_binary(buf: &[u8]) -> Result<SMatrixBlock> {
    let mut r = Reader { buf, pos: 0 };
    if &r.take::<4>()? != MAGIC {
        return Err(Error::Format("not an S-matrix dump (bad magic)".into()));
    }
    let v = r.u32()?;
    if v != VERSION {
        return Err(Error::Format(format!("unsupported S-matrix dump version {v}")));
    }
    let energy = r.f64()?;
    let j_total = r.i32()?;
    let species = species_from(r.u8()?)?;
    let handedness = hand_from(r.u8()?)?;
    let n = r.u32()? as usize;
    if n > MAX_CHANNELS {
        return Err(Error::Format(format!("{n} channels exceeds the limit {MAX_CHANNELS}")));
    }
    let need = 20 * n + 16 * n * n;
    if buf.len() - r.pos != need {
        return Err(Error::Format(format!("payload is {} bytes, expected {need}", buf.len() - r.pos)));
    }
    let mut channels = Vec::with_capacity(n);
    for _ in 0..n {
        channels.push(ChannelLabel { j: r.i32()?, tau: r.i32()?, l: r.i32()?, threshold: r.f64()? });
    }
    let mut data = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        data.push(Complex64::new(r.f64()?, r.f64()?));
    }
    let b = SMatrixBlock { energy, j_total, species, handedness, channels, s: DMatrix::from_vec(n, n, data) };
    check_block(&b)?;
    Ok(b)
}

/// Floats are written with Rust's shortest round-trip formatting.
pub fn encode_csv(b: &SMatrixBlock) -> String {
    let mut s = String::new();
    s.push_str(&format!("# format CDSM-csv {VERSION}\n"));
    s.push_str(&format!("# energy_hartree {:?}\n", b.energy));
    s.push_str(&format!("# j_total {}\n", b.j_total));
    s.push_str(&format!("# species {}\n", species_name(b.species)));
    s.push_str(&format!("# handedness {}\n", b.handedness.label()));
    s.push_str("channel,j,tau,l,threshold_hartree\n");
    for (i, c) in b.channels.iter().enumerate() {
        s.push_str(&format!("{i},{},{},{},{:?}\n", c.j, c.tau, c.l, c.threshold));
    }
    s.push_str("row,col,re,im\n");
    let n = b.n();
    for col in 0..n {
        for row in 0..n {
            let z = b.s[(row, col)];
            s.push_str(&format!("{row},{col},{:?},{:?}\n", z.re, z.im));
        }
    }
    s
}

fn field<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Format(format!("bad {what}: {s:?}")))
}

pub fn decode_csv(text: &str) -> Result<SMatrixBlock> {
    let mut energy = None;
    let mut j_total = None;
    let mut species = None;
    let mut handedness = None;
    let mut version_ok = false;
    let mut channels = Vec::new();
    let mut elems: Vec<(usize, usize, Complex64)> = Vec::new();
    let mut section = 0;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some("format"), Some("CDSM-csv"), Some(v)) => version_ok = field::<u32>(v, "version")? == VERSION,
                (Some("energy_hartree"), Some(v), None) => energy = Some(field::<f64>(v, "energy")?),
                (Some("j_total"), Some(v), None) => j_total = Some(field::<i32>(v, "J")?),
                (Some("species"), Some(v), None) => species = Some(species_parse(v)?),
                (Some("handedness"), Some(v), None) => handedness = Some(hand_parse(v)?),
                _ => {}
            }
            continue;
        }
        if line == "channel,j,tau,l,threshold_hartree" {
            section = 1;
            continue;
        }
        if line == "row,col,re,im" {
            section = 2;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        match (section, f.len()) {
            (1, 5) => {
                if field::<usize>(f[0], "channel index")? != channels.len() {
                    return Err(Error::Format("channel rows out of order".into()));
                }
                if channels.len() >= MAX_CHANNELS {
                    return Err(Error::Format("too many channels".into()));
                }
                channels.push(ChannelLabel {
                    j: field(f[1], "j")?,
                    tau: field(f[2], "tau")?,
                    l: field(f[3], "l")?,
                    threshold: field(f[4], "threshold")?,
                });
            }
            (2, 4) => {
                let (row, col) = (field::<usize>(f[0], "row")?, field::<usize>(f[1], "col")?);
                elems.push((row, col, Complex64::new(field(f[2], "re")?, field(f[3], "im")?)));
            }
            _ => return Err(Error::Format(format!("unexpected line {line:?}"))),
        }
    }
    if !version_ok {
        return Err(Error::Format("missing or unsupported CSV format header".into()));
    }
    let missing = |w: &str| Error::Format(format!("missing {w}"));
    let n = channels.len();
    if elems.len() != n * n {
        return Err(Error::Format(format!("{} elements for {n} channels", elems.len())));
    }
    let mut s = DMatrix::from_element(n, n, Complex64::new(f64::NAN, 0.0));
    let mut seen = vec![false; n * n];
    for (row, col, z) in elems {
        if row >= n || col >= n || seen[row + n * col] {
            return Err(Error::Format(format!("bad or repeated element ({row}, {col})")));
        }
        seen[row + n * col] = true;
        s[(row, col)] = z;
    }
    let b = SMatrixBlock {
        energy: energy.ok_or_else(|| missing("energy"))?,
        j_total: j_total.ok_or_else(|| missing("J"))?,
        species: species.ok_or_else(|| missing("species"))?,
        handedness: handedness.ok_or_else(|| missing("handedness"))?,
        channels,
        s,
    };
    check_block(&b)?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(n: usize, seed: f64) -> SMatrixBlock {
        let channels = (0..n)
            .map(|i| ChannelLabel { j: i as i32, tau: 0, l: (i + 1) as i32, threshold: seed * i as f64 * 1e-6 })
            .collect();
        let s = DMatrix::from_fn(n, n, |r, c| Complex64::new((r as f64 + seed).sin() / 3.0, (c as f64 * seed).cos() * 1e-17));
        SMatrixBlock { energy: 1.234e-5 * seed, j_total: 7, species: D2Species::Bb, handedness: Handedness::R, channels, s }
    }

    #[test]
    fn binary_and_csv_round_trip() {
        for n in [0, 1, 5] {
            let b = sample(n, 0.37);
            assert_eq!(decode_binary(&encode_binary(&b)).unwrap(), b);
            assert_eq!(decode_csv(&encode_csv(&b)).unwrap(), b);
        }
    }

    #[test]
    fn rejects_corrupt_input() {
        let b = sample(3, 1.0);
        let bin = encode_binary(&b);
        assert!(decode_binary(&bin[..bin.len() - 1]).is_err());
        let mut bad = bin.clone();
        bad[0] = b'X';
        assert!(decode_binary(&bad).is_err());
        let mut bad = bin.clone();
        bad[4] = 9;
        assert!(decode_binary(&bad).is_err());
        let mut bad = bin.clone();
        bad.push(0);
        assert!(decode_binary(&bad).is_err());
        let mut bad = bin;
        bad[22..26].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(decode_binary(&bad).is_err());
        let csv = encode_csv(&b);
        assert!(decode_csv(&csv.replace("# species Bb", "# species Q")).is_err());
        assert!(decode_csv(&csv.replace("0,0,", "9,0,")).is_err());
        assert!(decode_csv("").is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip_any(n in 0usize..6, seed in -10.0f64..10.0) {
            let b = sample(n, seed);
            prop_assert_eq!(decode_binary(&encode_binary(&b)).unwrap(), b);
        }

        #[test]
        fn decoders_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
            let _ = decode_binary(&bytes);
            let _ = decode_csv(&String::from_utf8_lossy(&bytes));
        }
    }
}

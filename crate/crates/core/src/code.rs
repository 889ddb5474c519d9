//! Bit-packed iris codes and the `IRSC` template file format.
//!
//! Layout (all integers big-endian):
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `IRSC`                   |
//! | 4      | 1    | version (1)                    |
//! | 5      | 1    | encoder id (1 HH1, 2 HH2, 3 LGE) |
//! | 6      | 2    | rows                           |
//! | 8      | 2    | cols                           |
//! | 10     | 8    | encoder parameter digest       |
//! | 18     | ⌈rows·cols/8⌉ | bits, row-major, MSB first |

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"IRSC";
pub const FORMAT_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 18;

/// Code sizes used by the reference experiments: 4 Kib and two 1 Kib shapes.
pub const STANDARD_SIZES: [(usize, usize); 3] = [(16, 256), (16, 64), (8, 128)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    Hh1,
    Hh2,
    Lge,
}

impl EncoderKind {
    pub fn id(self) -> u8 {
        match self {
            EncoderKind::Hh1 => 1,
            EncoderKind::Hh2 => 2,
            EncoderKind::Lge => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(EncoderKind::Hh1),
            2 => Some(EncoderKind::Hh2),
            3 => Some(EncoderKind::Lge),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Hh1 => "HH1",
            EncoderKind::Hh2 => "HH2",
            EncoderKind::Lge => "LGE",
        }
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EncoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hh1" => Ok(EncoderKind::Hh1),
            "hh2" => Ok(EncoderKind::Hh2),
            "lge" => Ok(EncoderKind::Lge),
            other => Err(format!(
                "unknown encoder '{other}' (expected hh1, hh2 or lge)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("bad magic, not an IRSC template")]
    BadMagic,
    #[error("unsupported template version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown encoder id {0}")]
    UnknownEncoder(u8),
    #[error("template truncated: expected {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("code dimensions {rows}x{cols} do not fit the template header")]
    TooLarge { rows: usize, cols: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Binary iris template, `rows x cols` bits packed row-major into 64-bit
/// words with the first bit in the most significant position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IrisCode {
    rows: usize,
    cols: usize,
    words: Vec<u64>,
    encoder: EncoderKind,
    params_digest: [u8; 8],
}

impl IrisCode {
    pub fn from_bits(
        rows: usize,
        cols: usize,
        bits: impl IntoIterator<Item = bool>,
        encoder: EncoderKind,
        params_digest: [u8; 8],
    ) -> Self {
        let len = rows * cols;
        let mut words = vec![0u64; len.div_ceil(64)];
        let mut count = 0;
        for (i, bit) in bits.into_iter().enumerate() {
            assert!(i < len, "more than {len} bits supplied");
            if bit {
                words[i / 64] |= 1u64 << (63 - i % 64);
            }
            count += 1;
        }
        assert_eq!(count, len, "bit count must equal rows * cols");
        Self {
            rows,
            cols,
            words,
            encoder,
            params_digest,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn encoder(&self) -> EncoderKind {
        self.encoder
    }

    pub fn params_digest(&self) -> [u8; 8] {
        self.params_digest
    }

    pub fn is_standard_size(&self) -> bool {
        STANDARD_SIZES.contains(&(self.rows, self.cols))
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn bit(&self, index: usize) -> bool {
        (self.words[index / 64] >> (63 - index % 64)) & 1 == 1
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bit(row * self.cols + col)
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(|i| self.bit(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Every bit flipped; padding bits stay zero.
    pub fn complement(&self) -> Self {
        Self::from_bits(
            self.rows,
            self.cols,
            self.bits().map(|b| !b),
            self.encoder,
            self.params_digest,
        )
    }

    /// Circularly shifts every row by `shift` columns (positive = right).
    pub fn shifted_columns(&self, shift: isize) -> Self {
        let cols = self.cols as isize;
        let bits = (0..self.rows).flat_map(|r| {
            (0..self.cols).map(move |c| {
                let src = (c as isize - shift).rem_euclid(cols) as usize;
                (r, src)
            })
        });
        let bits: Vec<bool> = bits.map(|(r, c)| self.get(r, c)).collect();
        Self::from_bits(self.rows, self.cols, bits, self.encoder, self.params_digest)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, TemplateError> {
        let (Ok(rows), Ok(cols)) = (u16::try_from(self.rows), u16::try_from(self.cols)) else {
            return Err(TemplateError::TooLarge {
                rows: self.rows,
                cols: self.cols,
            });
        };
        let payload = self.len().div_ceil(8);
        let mut out = Vec::with_capacity(HEADER_LEN + payload);
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.push(self.encoder.id());
        out.extend_from_slice(&rows.to_be_bytes());
        out.extend_from_slice(&cols.to_be_bytes());
        out.extend_from_slice(&self.params_digest);
        out.extend(
            self.words
                .iter()
                .flat_map(|w| w.to_be_bytes())
                .take(payload),
        );
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TemplateError> {
        if bytes.len() < HEADER_LEN {
            return Err(TemplateError::Truncated {
                expected: HEADER_LEN,
                actual: bytes.len(),
            });
        }
        if &bytes[0..4] != MAGIC {
            return Err(TemplateError::BadMagic);
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(TemplateError::UnsupportedVersion(bytes[4]));
        }
        let encoder =
            EncoderKind::from_id(bytes[5]).ok_or(TemplateError::UnknownEncoder(bytes[5]))?;
        let rows = u16::from_be_bytes([bytes[6], bytes[7]]) as usize;
        let cols = u16::from_be_bytes([bytes[8], bytes[9]]) as usize;
        let mut digest = [0u8; 8];
        digest.copy_from_slice(&bytes[10..18]);
        let len = rows * cols;
        let expected = HEADER_LEN + len.div_ceil(8);
        if bytes.len() != expected {
            return Err(TemplateError::Truncated {
                expected,
                actual: bytes.len(),
            });
        }
        let payload = &bytes[HEADER_LEN..];
        let bits = (0..len).map(|i| (payload[i / 8] >> (7 - i % 8)) & 1 == 1);
        Ok(Self::from_bits(rows, cols, bits, encoder, digest))
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), TemplateError> {
        w.write_all(&self.to_bytes()?)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, TemplateError> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TemplateError> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TemplateError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let code = IrisCode::from_bits(
            2,
            5,
            [
                true, false, true, true, false, false, false, false, false, true,
            ],
            EncoderKind::Hh2,
            [1, 2, 3, 4, 5, 6, 7, 8],
        );
        let bytes = code.to_bytes().unwrap();
        assert_eq!(
            bytes,
            vec![
                b'I',
                b'R',
                b'S',
                b'C',
                1,
                2,
                0,
                2,
                0,
                5,
                1,
                2,
                3,
                4,
                5,
                6,
                7,
                8,
                0b1011_0000,
                0b0100_0000
            ]
        );
    }

    #[test]
    fn rejects_corrupt_templates() {
        let code = IrisCode::from_bits(1, 8, [true; 8], EncoderKind::Lge, [0; 8]);
        let good = code.to_bytes().unwrap();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(
            IrisCode::from_bytes(&bad),
            Err(TemplateError::BadMagic)
        ));
        let mut bad = good.clone();
        bad[4] = 9;
        assert!(matches!(
            IrisCode::from_bytes(&bad),
            Err(TemplateError::UnsupportedVersion(9))
        ));
        let mut bad = good.clone();
        bad[5] = 7;
        assert!(matches!(
            IrisCode::from_bytes(&bad),
            Err(TemplateError::UnknownEncoder(7))
        ));
        assert!(matches!(
            IrisCode::from_bytes(&good[..good.len() - 1]),
            Err(TemplateError::Truncated { .. })
        ));
    }

    #[test]
    fn complement_and_shift() {
        let code = IrisCode::from_bits(
            2,
            3,
            [true, false, false, false, true, true],
            EncoderKind::Hh1,
            [0; 8],
        );
        assert_eq!(code.complement().count_ones(), 3);
        let shifted = code.shifted_columns(1);
        let bits: Vec<bool> = shifted.bits().collect();
        assert_eq!(bits, vec![false, true, false, true, false, true]);
        assert_eq!(shifted.shifted_columns(-1), code);
    }

    #[test]
    fn encoder_names_parse() {
        for kind in [EncoderKind::Hh1, EncoderKind::Hh2, EncoderKind::Lge] {
            assert_eq!(kind.name().parse::<EncoderKind>().unwrap(), kind);
            assert_eq!(EncoderKind::from_id(kind.id()), Some(kind));
        }
        assert!("gabor".parse::<EncoderKind>().is_err());
    }

    proptest! {
        #[test]
        fn template_roundtrip(
            rows in 1usize..20,
            cols in 1usize..70,
            seed in any::<u64>(),
            enc in 1u8..=3,
            digest in any::<[u8; 8]>(),
        ) {
            let bits: Vec<bool> = (0..rows * cols)
                .map(|i| (seed.rotate_left(i as u32 % 64) ^ (i as u64 * 0x9E37_79B9)) & 1 == 1)
                .collect();
            let code = IrisCode::from_bits(rows, cols, bits.clone(), EncoderKind::from_id(enc).unwrap(), digest);
            let bytes = code.to_bytes().unwrap();
            prop_assert_eq!(bytes.len(), HEADER_LEN + (rows * cols).div_ceil(8));
            let back = IrisCode::from_bytes(&bytes).unwrap();
            prop_assert_eq!(back.bits().collect::<Vec<_>>(), bits);
            prop_assert_eq!(back, code);
        }
    }
}

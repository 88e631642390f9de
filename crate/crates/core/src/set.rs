//! Subsets of a box stored as bitsets, with text and binary file formats.
//!
//! Text format (UTF-8, LF):
//!
//! ```text
//! box 4 16
//! 1 1
//! 3 9
//! ```
//!
//! The header names the box; every further line is one member with 1-based
//! coordinates. Blank lines and lines starting with `#` are ignored.
//!
//! Binary format: the magic bytes `HOFA1`, the dimension `n` as `u32` LE,
//! `n` sides as `u64` LE, then the membership bitset as `u64` LE words where
//! bit `i` of word `w` is the cell with row-major index `64w + i`.

use crate::bitset::Bitset;
use crate::error::{HofaError, Result};
use crate::grid::{BoxSpec, GridFunction};
use num_complex::Complex64;
use std::io::{BufRead, Read, Write};

pub const BINARY_MAGIC: &[u8; 5] = b"HOFA1";
/// Largest box a set may cover.
pub const SET_LIMIT: u64 = 1 << 36;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetIndicator {
    bx: BoxSpec,
    bits: Bitset,
}

fn check_set_box(bx: &BoxSpec) -> Result<usize> {
    let cells = bx.cells()?;
    if cells > SET_LIMIT {
        return Err(HofaError::TooLarge {
            cells: cells as u128,
            limit: SET_LIMIT as u128,
        });
    }
    Ok(cells as usize)
}

impl SetIndicator {
    pub fn empty(bx: BoxSpec) -> Result<Self> {
        let cells = check_set_box(&bx)?;
        Ok(SetIndicator {
            bx,
            bits: Bitset::new(cells),
        })
    }

    pub fn full(bx: BoxSpec) -> Result<Self> {
        let cells = check_set_box(&bx)?;
        Ok(SetIndicator {
            bx,
            bits: Bitset::full(cells),
        })
    }

    pub fn from_predicate(bx: BoxSpec, mut pred: impl FnMut(&[i64]) -> bool) -> Result<Self> {
        let mut s = SetIndicator::empty(bx)?;
        for (i, x) in s.bx.points().enumerate() {
            if pred(&x) {
                s.bits.set(i, true);
            }
        }
        Ok(s)
    }

    pub fn from_members<I, P>(bx: BoxSpec, members: I) -> Result<Self>
    where
        I: IntoIterator<Item = P>,
        P: AsRef<[i64]>,
    {
        let mut s = SetIndicator::empty(bx)?;
        for p in members {
            s.insert(p.as_ref())?;
        }
        Ok(s)
    }

    pub fn from_bits(bx: BoxSpec, bits: Bitset) -> Result<Self> {
        let cells = check_set_box(&bx)?;
        if bits.len() != cells {
            return Err(HofaError::invalid("bitset length does not match box"));
        }
        Ok(SetIndicator { bx, bits })
    }

    pub fn insert(&mut self, x: &[i64]) -> Result<()> {
        let i = self
            .bx
            .index(x)
            .ok_or_else(|| HofaError::invalid(format!("point {x:?} outside box {:?}", self.bx.dims())))?;
        self.bits.set(i, true);
        Ok(())
    }

    pub fn box_spec(&self) -> &BoxSpec {
        &self.bx
    }

    pub fn bits(&self) -> &Bitset {
        &self.bits
    }

    /// Membership; points outside the box are never members.
    #[inline]
    pub fn contains(&self, x: &[i64]) -> bool {
        self.bx.index(x).is_some_and(|i| self.bits.get(i))
    }

    pub fn count(&self) -> u64 {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// `|A| / Π N_i`.
    pub fn density(&self) -> f64 {
        self.count() as f64 / self.bits.len() as f64
    }

    pub fn members(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        self.bits.iter_ones().map(|i| self.bx.point(i))
    }

    /// The 0/1-valued grid function `χ_A`.
    pub fn to_grid(&self) -> Result<GridFunction> {
        let values = (0..self.bits.len())
            .map(|i| Complex64::new(if self.bits.get(i) { 1.0 } else { 0.0 }, 0.0))
            .collect();
        GridFunction::new(self.bx.clone(), values, true)
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        let dims: Vec<String> = self.bx.dims().iter().map(|d| d.to_string()).collect();
        writeln!(w, "box {}", dims.join(" "))?;
        for x in self.members() {
            let line: Vec<String> = x.iter().map(|c| c.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut set: Option<SetIndicator> = None;
        for (k, line) in r.lines().enumerate() {
            let line = line?;
            let line_no = k + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| HofaError::Parse { line: line_no, msg };
            match &mut set {
                None => {
                    let mut toks = t.split_whitespace();
                    if toks.next() != Some("box") {
                        return Err(parse_err("expected header `box N1 … Nn`".into()));
                    }
                    let dims = toks
                        .map(|s| s.parse::<u64>().map_err(|e| parse_err(format!("bad side {s:?}: {e}"))))
                        .collect::<Result<Vec<_>>>()?;
                    let bx = BoxSpec::new(dims).map_err(|e| parse_err(e.to_string()))?;
                    set = Some(SetIndicator::empty(bx)?);
                }
                Some(s) => {
                    let x = t
                        .split_whitespace()
                        .map(|v| v.parse::<i64>().map_err(|e| parse_err(format!("bad coordinate {v:?}: {e}"))))
                        .collect::<Result<Vec<_>>>()?;
                    if x.len() != s.bx.n() {
                        return Err(parse_err(format!("expected {} coordinates, got {}", s.bx.n(), x.len())));
                    }
                    s.insert(&x).map_err(|e| parse_err(e.to_string()))?;
                }
            }
        }
        set.ok_or_else(|| HofaError::Parse {
            line: 0,
            msg: "missing `box` header".into(),
        })
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.bx.n() as u32).to_le_bytes())?;
        for &d in self.bx.dims() {
            w.write_all(&d.to_le_bytes())?;
        }
        for &word in self.bits.words() {
            w.write_all(&word.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let bad = |msg: &str| HofaError::Parse {
            line: 0,
            msg: msg.to_string(),
        };
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
        if &magic != BINARY_MAGIC {
            return Err(bad("bad magic, expected HOFA1"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4).map_err(|_| bad("truncated dimension"))?;
        let n = u32::from_le_bytes(b4) as usize;
        if n == 0 || n > 64 {
            return Err(bad("dimension out of range"));
        }
        let mut dims = Vec::with_capacity(n);
        let mut b8 = [0u8; 8];
        for _ in 0..n {
            r.read_exact(&mut b8).map_err(|_| bad("truncated box sides"))?;
            dims.push(u64::from_le_bytes(b8));
        }
        let bx = BoxSpec::new(dims)?;
        let cells = check_set_box(&bx)?;
        let mut words = Vec::with_capacity(cells.div_ceil(64));
        for _ in 0..cells.div_ceil(64) {
            r.read_exact(&mut b8).map_err(|_| bad("truncated bitset"))?;
            words.push(u64::from_le_bytes(b8));
        }
        Ok(SetIndicator {
            bx,
            bits: Bitset::from_words(cells, words),
        })
    }

    /// Reads either format, detected by the magic prefix.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(BINARY_MAGIC) {
            Self::read_binary(bytes)
        } else {
            Self::read_text(bytes)
        }
    }

    pub fn read_path(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }
}

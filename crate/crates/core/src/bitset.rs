//! Fixed-length bitset with the shifted-AND kernel used for exact counting.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Bitset {
    len: usize,
    words: Vec<u64>,
}

impl Bitset {
    pub fn new(len: usize) -> Self {
        Bitset {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut b = Bitset {
            len,
            words: vec![u64::MAX; len.div_ceil(64)],
        };
        b.mask_tail();
        b
    }

    /// Builds from raw words; bits past `len` are cleared.
    pub fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        words.resize(len.div_ceil(64), 0);
        let mut b = Bitset { len, words };
        b.mask_tail();
        b
    }

    fn mask_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(w) = self.words.last_mut() {
                *w &= (1u64 << r) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        i < self.len && (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        let m = 1u64 << (i & 63);
        if v {
            self.words[i >> 6] |= m;
        } else {
            self.words[i >> 6] &= !m;
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    #[inline]
    fn word_or_zero(&self, k: usize) -> u64 {
        self.words.get(k).copied().unwrap_or(0)
    }

    /// Word `w` of `src` read starting at bit `64w + off`.
    #[inline]
    fn shifted_word(src: &Bitset, w: usize, off: usize) -> u64 {
        let q = w + (off >> 6);
        let b = off & 63;
        if b == 0 {
            src.word_or_zero(q)
        } else {
            (src.word_or_zero(q) >> b) | (src.word_or_zero(q + 1) << (64 - b))
        }
    }

    /// `self[i] &= src[i + off]`; bits of `src` past its end read as 0.
    pub fn and_shifted(&mut self, src: &Bitset, off: usize) {
        for w in 0..self.words.len() {
            self.words[w] &= Self::shifted_word(src, w, off);
        }
    }

    pub fn and_assign(&mut self, other: &Bitset) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
        if other.words.len() < self.words.len() {
            for a in &mut self.words[other.words.len()..] {
                *a = 0;
            }
        }
    }

    /// Clears bits in `[lo, hi)`.
    pub fn clear_range(&mut self, lo: usize, hi: usize) {
        let hi = hi.min(self.len);
        if lo >= hi {
            return;
        }
        let (wl, wh) = (lo >> 6, (hi - 1) >> 6);
        let lo_mask = u64::MAX << (lo & 63);
        let hi_mask = u64::MAX >> (63 - ((hi - 1) & 63));
        if wl == wh {
            self.words[wl] &= !(lo_mask & hi_mask);
            return;
        }
        self.words[wl] &= !lo_mask;
        for w in &mut self.words[wl + 1..wh] {
            *w = 0;
        }
        self.words[wh] &= !hi_mask;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_bools(v: &[bool]) -> Bitset {
        let mut b = Bitset::new(v.len());
        for (i, &x) in v.iter().enumerate() {
            b.set(i, x);
        }
        b
    }

    fn lcg(seed: &mut u64) -> u64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        *seed >> 33
    }

    #[test]
    fn set_get_count() {
        let mut b = Bitset::new(130);
        b.set(0, true);
        b.set(64, true);
        b.set(129, true);
        assert!(b.get(64) && !b.get(65) && !b.get(1000));
        assert_eq!(b.count_ones(), 3);
        assert_eq!(b.iter_ones().collect::<Vec<_>>(), vec![0, 64, 129]);
        assert_eq!(Bitset::full(130).count_ones(), 130);
    }

    #[test]
    fn shifted_and_matches_bitwise_definition() {
        let mut seed = 7;
        for len in [1usize, 63, 64, 65, 200, 513] {
            let a: Vec<bool> = (0..len).map(|_| lcg(&mut seed) % 2 == 0).collect();
            let s: Vec<bool> = (0..len).map(|_| lcg(&mut seed) % 3 != 0).collect();
            for off in [0usize, 1, 5, 63, 64, 65, 128, 190, 600] {
                let mut x = from_bools(&a);
                x.and_shifted(&from_bools(&s), off);
                for i in 0..len {
                    let want = a[i] && i + off < len && s[i + off];
                    assert_eq!(x.get(i), want, "len {len} off {off} bit {i}");
                }
            }
        }
    }

    #[test]
    fn clear_ranges() {
        for (lo, hi) in [(0, 0), (3, 9), (60, 70), (0, 200), (64, 128), (130, 300)] {
            let mut b = Bitset::full(200);
            b.clear_range(lo, hi);
            for i in 0..200 {
                assert_eq!(b.get(i), !(lo <= i && i < hi), "range {lo}..{hi} bit {i}");
            }
        }
    }

    #[test]
    fn from_words_masks_tail() {
        let b = Bitset::from_words(3, vec![u64::MAX]);
        assert_eq!(b.count_ones(), 3);
    }
}

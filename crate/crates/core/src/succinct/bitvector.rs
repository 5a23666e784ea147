use crate::error::{GirgError, Result};

/// Bits per rank superblock.
const SUPER_BITS: usize = 512;
const WORDS_PER_SUPER: usize = SUPER_BITS / 64;
/// Every `SELECT_SAMPLE`-th one-bit has its position recorded.
const SELECT_SAMPLE: usize = 64;

/// Append-only bit sequence. Stream position 1 is bit 0 of word 0.
#[derive(Debug, Clone, Default)]
pub struct BitWriter {
    words: Vec<u64>,
    len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        if bit {
            *self.words.last_mut().unwrap() |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    /// Appends the low `width` bits of `value`, least significant first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        if width == 0 {
            return;
        }
        let value = if width == 64 { value } else { value & ((1 << width) - 1) };
        let off = self.len % 64;
        if off == 0 {
            self.words.push(value);
        } else {
            *self.words.last_mut().unwrap() |= value << off;
            if off + width as usize > 64 {
                self.words.push(value >> (64 - off));
            }
        }
        self.len += width as usize;
    }

    pub fn finish(self) -> BitVector {
        BitVector::from_words(self.words, self.len).expect("writer keeps padding clear")
    }
}

/// A static bit sequence with rank and select support.
///
/// Positions are 1-based: `rank(b)` counts ones among positions `1..=b` and
/// `select(i)` is the position of the `i`-th one.
#[derive(Debug, Clone)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
    ones: usize,
    supers: Vec<u64>,
    blocks: Vec<u16>,
    samples: Vec<u64>,
}

impl PartialEq for BitVector {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len && self.words == other.words
    }
}

impl Eq for BitVector {}

impl BitVector {
    /// Wraps packed words; bits past `len` must be zero.
    pub fn from_words(words: Vec<u64>, len: usize) -> Result<Self> {
        if words.len() != len.div_ceil(64) {
            return Err(GirgError::corrupt(format!(
                "{} words cannot hold exactly {len} bits",
                words.len()
            )));
        }
        if len % 64 != 0 && words.last().is_some_and(|w| w >> (len % 64) != 0) {
            return Err(GirgError::corrupt("set bits past the end of a bit vector"));
        }
        let mut supers = Vec::with_capacity(words.len() / WORDS_PER_SUPER + 1);
        let mut blocks = Vec::with_capacity(words.len());
        let mut samples = Vec::new();
        let mut total = 0usize;
        let mut rel = 0u16;
        // One number whose position is recorded next.
        let mut next_sample = 1usize;
        for (k, &w) in words.iter().enumerate() {
            if k % WORDS_PER_SUPER == 0 {
                supers.push(total as u64);
                rel = 0;
            }
            blocks.push(rel);
            let c = w.count_ones() as usize;
            while next_sample <= total + c {
                let pos = k * 64 + select_in_word(w, (next_sample - total) as u32) as usize + 1;
                samples.push(pos as u64);
                next_sample += SELECT_SAMPLE;
            }
            total += c;
            rel += c as u16;
        }
        supers.push(total as u64);
        Ok(BitVector {
            words,
            len,
            ones: total,
            supers,
            blocks,
            samples,
        })
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut w = BitWriter::new();
        for b in bits {
            w.push(b);
        }
        w.finish()
    }

    /// Parses a string of `0` and `1`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut w = BitWriter::new();
        for c in s.chars() {
            match c {
                '0' => w.push(false),
                '1' => w.push(true),
                _ => return Err(GirgError::usage(format!("invalid bit character {c:?}"))),
            }
        }
        Ok(w.finish())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count_ones(&self) -> usize {
        self.ones
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Bit at 1-based position `b`.
    #[inline]
    pub fn get(&self, b: usize) -> bool {
        debug_assert!(b >= 1 && b <= self.len);
        let i = b - 1;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    /// Number of ones among positions `1..=b`, for `0 <= b <= len`.
    pub fn rank(&self, b: usize) -> Result<usize> {
        if b > self.len {
            return Err(GirgError::usage(format!("rank position {b} beyond length {}", self.len)));
        }
        Ok(self.rank_unchecked(b))
    }

    #[inline]
    pub(crate) fn rank_unchecked(&self, b: usize) -> usize {
        let k = b / 64;
        let mut r = self.supers[k / WORDS_PER_SUPER] as usize;
        if k < self.words.len() {
            r += self.blocks[k] as usize;
            let off = b % 64;
            if off > 0 {
                r += (self.words[k] & ((1u64 << off) - 1)).count_ones() as usize;
            }
        } else if k % WORDS_PER_SUPER != 0 {
            // b == len at a word boundary inside the last superblock.
            r = self.ones;
        }
        r
    }

    /// Position of the `i`-th one, for `1 <= i <= count_ones()`.
    pub fn select(&self, i: usize) -> Result<usize> {
        if i == 0 || i > self.ones {
            return Err(GirgError::usage(format!(
                "select index {i} outside 1..={}",
                self.ones
            )));
        }
        Ok(self.select_unchecked(i))
    }

    #[inline]
    pub(crate) fn select_unchecked(&self, i: usize) -> usize {
        let s = (i - 1) / SELECT_SAMPLE;
        let start = (self.samples[s] - 1) as usize;
        let end = self
            .samples
            .get(s + 1)
            .map_or(self.len, |&p| p as usize);
        // Superblocks between the two samples; binary search the last one whose
        // absolute count is below i.
        let (mut lo, mut hi) = (start / SUPER_BITS, end.saturating_sub(1) / SUPER_BITS);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if (self.supers[mid] as usize) < i {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let mut k = lo * WORDS_PER_SUPER;
        let mut before = self.supers[lo] as usize;
        loop {
            let c = self.words[k].count_ones() as usize;
            if before + c >= i {
                return k * 64 + select_in_word(self.words[k], (i - before) as u32) as usize + 1;
            }
            before += c;
            k += 1;
        }
    }

    /// Up to 64 bits starting at 1-based position `b`, first stream bit in
    /// the least significant place; positions past the end read as zero.
    #[inline]
    pub(crate) fn window(&self, b: usize) -> u64 {
        let i = b - 1;
        let (k, off) = (i / 64, i % 64);
        let lo = self.words.get(k).copied().unwrap_or(0) >> off;
        if off == 0 {
            lo
        } else {
            lo | self.words.get(k + 1).copied().unwrap_or(0) << (64 - off)
        }
    }
}

/// 0-based index of the `r`-th (1-based) set bit of `w`.
#[inline]
fn select_in_word(mut w: u64, r: u32) -> u32 {
    debug_assert!(r >= 1 && r <= w.count_ones());
    for _ in 1..r {
        w &= w - 1;
    }
    w.trailing_zeros()
}

//! Algebraic signatures of byte strings.
//!
//! A key is symbolized into field elements p_1..p_l and hashed to `n_sig`
//! components, where component j is Σ_i p_i · β_j^i with β_j = α^j. The
//! construction detects any change touching at most `n_sig` symbols, and
//! unrelated keys collide with probability 2^-(n_sig·f).

use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;
use thiserror::Error;

use crate::gf::{gf_add, GfContext, GfElem, GfError, ALPHA};

/// Default number of signature components.
pub const DEFAULT_N_SIG: usize = 2;
/// Default field width in bits.
pub const DEFAULT_FIELD_WIDTH: u8 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SigError {
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("n_sig must be between 1 and {max}, got {got}")]
    BadComponentCount { got: usize, max: usize },
    #[error("string of {symbols} symbols exceeds the field limit of {max} for GF(2^{f})")]
    StringTooLong { symbols: usize, max: usize, f: u8 },
    #[error("signatures come from different bases ({left:#x} vs {right:#x})")]
    BaseMismatch { left: u64, right: u64 },
}

/// The per-component generator points β_j = α^j, j = 1..=n_sig, together
/// with the field they live in.
#[derive(Debug, Clone)]
pub struct SignatureBase {
    ctx: Arc<GfContext>,
    n_sig: usize,
    elements: Vec<GfElem>,
    id: u64,
    /// red[h] = h·x^16 mod p(x) over GF(2^16): folds the overflow bits of
    /// a shifted element back into range. 512 bytes, so it lives in L1
    /// where the full antilog table cannot.
    red: Option<Box<[u16; 256]>>,
}

impl SignatureBase {
    /// A base over GF(2^f) with `n_sig` components.
    ///
    /// `n_sig` is capped at 8: beyond that the signature stops being a
    /// short summary of the key.
    pub fn new(f: u8, n_sig: usize) -> Result<Self, SigError> {
        if !(1..=8).contains(&n_sig) {
            return Err(SigError::BadComponentCount { got: n_sig, max: 8 });
        }
        let ctx = GfContext::shared(f)?;
        let elements = (1..=n_sig)
            .map(|j| ctx.pow(ALPHA, j as u64))
            .collect::<Vec<_>>();
        // Identical configurations get identical ids, so signatures from
        // two equally configured bases are comparable.
        let id = ((f as u64) << 48)
            | ((n_sig as u64) << 40)
            | (ctx.primitive_poly() as u64);
        let red = (f == 16 && n_sig <= 2).then(|| {
            let a16 = ctx.pow(ALPHA, 16);
            let mut t = Box::new([0u16; 256]);
            for (h, slot) in t.iter_mut().enumerate() {
                *slot = ctx.mul(h as GfElem, a16);
            }
            t
        });
        Ok(Self {
            ctx,
            n_sig,
            elements,
            id,
            red,
        })
    }

    /// The default base: two components over GF(2^16).
    pub fn default_base() -> Self {
        Self::new(DEFAULT_FIELD_WIDTH, DEFAULT_N_SIG).expect("default parameters are valid")
    }

    #[inline]
    pub fn field_width(&self) -> u8 {
        self.ctx.field_width()
    }

    #[inline]
    pub fn n_sig(&self) -> usize {
        self.n_sig
    }

    /// β_1..β_n, in component order.
    #[inline]
    pub fn elements(&self) -> &[GfElem] {
        &self.elements
    }

    #[inline]
    pub fn context(&self) -> &GfContext {
        &self.ctx
    }

    /// Signature size in bytes: n_sig components of f/8 bytes each.
    #[inline]
    pub fn signature_bytes(&self) -> usize {
        self.n_sig * (self.ctx.field_width() as usize / 8)
    }

    /// Longest representable string, in symbols.
    #[inline]
    pub fn max_symbols(&self) -> usize {
        self.ctx.group_order() as usize - 1
    }

    /// Longest representable string, in bytes.
    #[inline]
    pub fn max_bytes(&self) -> usize {
        self.max_symbols() * (self.ctx.field_width() as usize / 8)
    }

    #[inline]
    fn check_length(&self, bytes: &[u8]) -> Result<(), SigError> {
        let f = self.ctx.field_width();
        let symbol_count = match f {
            8 => bytes.len(),
            _ => bytes.len().div_ceil(2),
        };
        if symbol_count > self.max_symbols() {
            return Err(SigError::StringTooLong {
                symbols: symbol_count,
                max: self.max_symbols(),
                f,
            });
        }
        Ok(())
    }

    /// Hashes `bytes` to its signature.
    ///
    /// Symbolization is width-dependent: over GF(2^8) each byte is one
    /// symbol; over GF(2^16) consecutive byte pairs form one little-endian
    /// symbol, and an odd trailing byte is padded with a high zero byte.
    /// The exact byte length survives in the signature, so strings that
    /// differ only by trailing zero bytes stay distinguishable.
    pub fn compute_signature(&self, bytes: &[u8]) -> Result<AlgebraicSignature, SigError> {
        self.check_length(bytes)?;
        let f = self.ctx.field_width();

        // Monomorphize on the component count so the per-symbol component
        // loops unroll completely.
        let symbols = match (f, self.n_sig) {
            (16, 1) => SmallVec::from_slice(&self.kernel16_horner::<1>(bytes)),
            (16, 2) => SmallVec::from_slice(&self.kernel16_horner::<2>(bytes)),
            (16, 3) => SmallVec::from_slice(&self.kernel16::<3>(bytes)),
            (16, 4) => SmallVec::from_slice(&self.kernel16::<4>(bytes)),
            (16, 5) => SmallVec::from_slice(&self.kernel16::<5>(bytes)),
            (16, 6) => SmallVec::from_slice(&self.kernel16::<6>(bytes)),
            (16, 7) => SmallVec::from_slice(&self.kernel16::<7>(bytes)),
            (16, _) => SmallVec::from_slice(&self.kernel16::<8>(bytes)),
            (_, 1) => SmallVec::from_slice(&self.kernel8::<1>(bytes)),
            (_, 2) => SmallVec::from_slice(&self.kernel8::<2>(bytes)),
            (_, 3) => SmallVec::from_slice(&self.kernel8::<3>(bytes)),
            (_, 4) => SmallVec::from_slice(&self.kernel8::<4>(bytes)),
            (_, 5) => SmallVec::from_slice(&self.kernel8::<5>(bytes)),
            (_, 6) => SmallVec::from_slice(&self.kernel8::<6>(bytes)),
            (_, 7) => SmallVec::from_slice(&self.kernel8::<7>(bytes)),
            (_, _) => SmallVec::from_slice(&self.kernel8::<8>(bytes)),
        };

        Ok(AlgebraicSignature {
            symbols,
            byte_len: bytes.len() as u32,
            base_id: self.id,
        })
    }

    /// The packed one-word digest, computed without materializing an
    /// [`AlgebraicSignature`]. Same layout as [`AlgebraicSignature::packed64`];
    /// callable only for configurations where the digest fits (n_sig·f
    /// within 32 bits).
    pub(crate) fn digest_word(&self, bytes: &[u8]) -> Result<u64, SigError> {
        self.check_length(bytes)?;
        let f = self.ctx.field_width() as u32;
        let pack = |acc: &[u16]| {
            let mut w = (bytes.len() as u64) << 32;
            for (j, &c) in acc.iter().enumerate() {
                w |= (c as u64) << (j as u32 * f);
            }
            w
        };
        Ok(match (f, self.n_sig) {
            (16, 1) => pack(&self.kernel16_horner::<1>(bytes)),
            (16, 2) => pack(&self.kernel16_horner::<2>(bytes)),
            (8, 1) => pack(&self.kernel8::<1>(bytes)),
            (8, 2) => pack(&self.kernel8::<2>(bytes)),
            (8, 3) => pack(&self.kernel8::<3>(bytes)),
            (8, 4) => pack(&self.kernel8::<4>(bytes)),
            _ => unreachable!("digest of {} components over GF(2^{f}) exceeds one word", self.n_sig),
        })
    }

    /// Horner evaluation of the component sums, walking the symbols last
    /// to first over four interleaved strides. One Horner step multiplies
    /// by β_j^4 = α^{4(j+1)}, and for a shift of at most 8 bits that is a
    /// shift plus one lookup in the 256-entry reduction table, so the loop
    /// runs out of registers and L1. The running-exponent kernel below
    /// instead loads twice per symbol from the 128KB antilog table, which
    /// at these access patterns is an L2 hit per load; on long keys this
    /// form is roughly twice as fast. The four strides exist to keep four
    /// Horner chains in flight instead of serializing on one.
    fn kernel16_horner<const N: usize>(&self, bytes: &[u8]) -> [GfElem; N] {
        let red = self.red.as_deref().expect("reduction table exists for n_sig <= 2");

        // x · α^s for s <= 8, given x < 2^16. The mask on the table index
        // restates that range so no bounds check survives.
        let mul_shift = |x: u32, s: u32| -> u32 {
            let t = x << s;
            (t & 0xFFFF) ^ (red[((t >> 16) & 0xFF) as usize] as u32)
        };

        // h[j][c] accumulates the Horner chain of component j over the
        // symbols with index i ≡ c (mod 4); each chain's step multiplier
        // is β_j^4 = α^{4(j+1)}. Chains only need their own symbols in
        // descending order, so blocks of four are fed in source order.
        let mut h = [[0u32; 4]; N];
        let mut feed = |c: usize, p: u32| {
            for (j, chains) in h.iter_mut().enumerate() {
                chains[c & 3] = mul_shift(chains[c & 3], 4 * (j as u32 + 1)) ^ p;
            }
        };

        let l = bytes.len().div_ceil(2);
        let even = bytes.len() & !1;
        if bytes.len() != even {
            feed(l & 3, bytes[even] as u32);
        }
        let pair_syms = even / 2;
        let blocks = pair_syms / 4;
        for i in (4 * blocks + 1..=pair_syms).rev() {
            let off = 2 * (i - 1);
            feed(i & 3, u16::from_le_bytes([bytes[off], bytes[off + 1]]) as u32);
        }
        for block in bytes[..8 * blocks].chunks_exact(8).rev() {
            let w = u64::from_le_bytes(block.try_into().unwrap());
            for (j, chains) in h.iter_mut().enumerate() {
                let s = 4 * (j as u32 + 1);
                chains[1] = mul_shift(chains[1], s) ^ (w as u16 as u32);
                chains[2] = mul_shift(chains[2], s) ^ ((w >> 16) as u16 as u32);
                chains[3] = mul_shift(chains[3], s) ^ ((w >> 32) as u16 as u32);
                chains[0] = mul_shift(chains[0], s) ^ ((w >> 48) as u32);
            }
        }

        // Chain c holds Σ_m p_{c+4m} · α^{4(j+1)m}; scaling by β_j^{i mod 4}
        // (residue 0 read as 4) restores each symbol's true exponent. Those
        // exponents are at most 8, so the same shift trick applies.
        let mut acc = [0u16; N];
        for (j, chains) in h.iter().enumerate() {
            for (c, &chain) in chains.iter().enumerate() {
                let rp = if c == 0 { 4 } else { c as u32 };
                acc[j] = gf_add(acc[j], mul_shift(chain, (j as u32 + 1) * rp) as GfElem);
            }
        }
        acc
    }

    /// Accumulates component j as a sum of antilog[log p_i + i·(j+1)]:
    /// running exponents replace running powers, so the loop body is pure
    /// index arithmetic plus table loads, with no field multiplications.
    fn kernel16<const N: usize>(&self, bytes: &[u8]) -> [GfElem; N] {
        let order = self.ctx.group_order();
        let log = self.ctx.log_full();
        let anti = self.ctx.antilog_full();
        let mut acc = [0u16; N];
        let mut exp = [0u32; N];

        let mut chunks = bytes.chunks_exact(2);
        for pair in &mut chunks {
            let p = u16::from_le_bytes([pair[0], pair[1]]);
            step::<N, 16>(p, order, log, anti, &mut acc, &mut exp);
        }
        if let [last] = chunks.remainder() {
            step::<N, 16>(*last as u16, order, log, anti, &mut acc, &mut exp);
        }
        acc
    }

    fn kernel8<const N: usize>(&self, bytes: &[u8]) -> [GfElem; N] {
        let order = self.ctx.group_order();
        let log = self.ctx.log_full();
        let anti = self.ctx.antilog_full();
        let mut acc = [0u16; N];
        let mut exp = [0u32; N];

        for &b in bytes {
            step::<N, 8>(b as u16, order, log, anti, &mut acc, &mut exp);
        }
        acc
    }
}

/// One symbol of the signature accumulation. The reductions use the
/// min-of-wrapped-subtraction form so they compile to conditional moves;
/// a data-dependent branch here would mispredict half the time.
#[inline(always)]
fn step<const N: usize, const F: u8>(
    p: u16,
    order: u32,
    log: &[u16],
    anti: &[u16],
    acc: &mut [u16; N],
    exp: &mut [u32; N],
) {
    for (j, e) in exp.iter_mut().enumerate() {
        let t = *e + j as u32 + 1;
        *e = t.min(t.wrapping_sub(order));
    }
    if p != 0 {
        let lp = log[p as usize] as u32;
        for (s, &e) in acc.iter_mut().zip(exp.iter()) {
            let t = lp + e;
            let idx = t.min(t.wrapping_sub(order));
            // idx < order < 2^F, so the narrowing cast is lossless and
            // the index provably fits the 2^F-entry table.
            let idx = if F == 8 {
                idx as u8 as usize
            } else {
                idx as u16 as usize
            };
            *s = gf_add(*s, anti[idx]);
        }
    }
}

/// A computed signature: the component values plus the length of the
/// hashed string. Comparable only against signatures of the same base.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlgebraicSignature {
    symbols: SmallVec<[GfElem; 4]>,
    byte_len: u32,
    base_id: u64,
}

impl AlgebraicSignature {
    /// Component values, first component first.
    #[inline]
    pub fn components(&self) -> &[GfElem] {
        &self.symbols
    }

    /// Length in bytes of the string that was hashed.
    #[inline]
    pub fn byte_len(&self) -> u32 {
        self.byte_len
    }

    /// Identifier of the generating base configuration.
    #[inline]
    pub fn base_id(&self) -> u64 {
        self.base_id
    }

    /// Packs components and byte length into one word when n_sig·f fits in
    /// 32 bits: components ascending from bit 0, f bits apart, length in
    /// the top half. Within a shared base the packing is injective, so
    /// word equality is exactly signature equality. The reference layout
    /// for [`SignatureBase::digest_word`], which computes the same word
    /// without materializing the signature.
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn packed64(&self) -> Option<u64> {
        let f = ((self.base_id >> 48) & 0xFF) as u32;
        if self.symbols.len() as u32 * f > 32 {
            return None;
        }
        let mut w = (self.byte_len as u64) << 32;
        for (j, &c) in self.symbols.iter().enumerate() {
            w |= (c as u64) << (j as u32 * f);
        }
        Some(w)
    }

    /// Lowercase hex, highest-numbered component first.
    pub fn to_hex(&self) -> String {
        let width = ((self.base_id >> 48) & 0xFF) as usize / 4;
        let mut out = String::with_capacity(self.symbols.len() * width);
        for s in self.symbols.iter().rev() {
            out.push_str(&format!("{s:0width$x}"));
        }
        out
    }
}

impl fmt::Display for AlgebraicSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Equality check that refuses to compare signatures from different bases.
pub fn signatures_equal(
    a: &AlgebraicSignature,
    b: &AlgebraicSignature,
) -> Result<bool, SigError> {
    if a.base_id != b.base_id {
        return Err(SigError::BaseMismatch {
            left: a.base_id,
            right: b.base_id,
        });
    }
    Ok(a == b)
}

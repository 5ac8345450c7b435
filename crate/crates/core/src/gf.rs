//! Galois-field arithmetic over GF(2^8) and GF(2^16).
//!
//! Addition is XOR; multiplication goes through log/antilog tables built
//! once at construction by walking powers of the primitive element α = x.
//! The two supported fields use the reduction polynomials
//! x^8 + x^4 + x^3 + x^2 + 1 (0x11D) and x^16 + x^12 + x^3 + x + 1 (0x1100B).

use std::sync::{Arc, OnceLock};

use thiserror::Error;

/// A field element. Elements of GF(2^8) occupy the low byte.
pub type GfElem = u16;

/// The primitive element α (the polynomial `x`).
pub const ALPHA: GfElem = 2;

const POLY_GF8: u32 = 0x11D;
const POLY_GF16: u32 = 0x1100B;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("unsupported field width {0} (expected 8 or 16)")]
    UnsupportedWidth(u8),
    #[error("polynomial {poly:#x} is not primitive over GF(2^{f}): α cycles after {cycle} steps")]
    NotPrimitive { poly: u32, f: u8, cycle: u32 },
}

/// Field addition: XOR of the coefficient vectors. Width-independent.
#[inline]
pub fn gf_add(a: GfElem, b: GfElem) -> GfElem {
    a ^ b
}

/// Log/antilog tables for one field, immutable after construction.
#[derive(Debug, Clone)]
pub struct GfContext {
    f: u8,
    primitive_poly: u32,
    /// Multiplicative group order, 2^f - 1.
    order: u32,
    /// log[x] = k such that α^k = x, for non-zero x. log[0] is unused.
    log: Vec<u16>,
    /// antilog[k] = α^k for k in 0..order. Allocated with one unused pad
    /// entry so its length is 2^f; indexes masked to f bits then provably
    /// stay in range, which keeps the hot signature loop free of bounds
    /// checks.
    antilog: Vec<u16>,
}

impl GfContext {
    /// Builds the tables for GF(2^f), f ∈ {8, 16}.
    ///
    /// Walks α^0, α^1, … and fails if the walk cycles before visiting every
    /// non-zero element, so a non-primitive polynomial cannot slip through.
    pub fn new(f: u8) -> Result<Self, GfError> {
        let poly = match f {
            8 => POLY_GF8,
            16 => POLY_GF16,
            other => return Err(GfError::UnsupportedWidth(other)),
        };
        let order: u32 = (1u32 << f) - 1;
        let mut log = vec![0u16; 1usize << f];
        let mut antilog = vec![0u16; 1usize << f];
        let high_bit: u32 = 1 << f;

        let mut val: u32 = 1;
        for k in 0..order {
            if val == 1 && k > 0 {
                return Err(GfError::NotPrimitive { poly, f, cycle: k });
            }
            antilog[k as usize] = val as u16;
            log[val as usize] = k as u16;
            val <<= 1;
            if val & high_bit != 0 {
                val ^= poly;
            }
        }
        // α^order must close the cycle back to 1.
        if val != 1 {
            return Err(GfError::NotPrimitive { poly, f, cycle: order });
        }

        Ok(Self {
            f,
            primitive_poly: poly,
            order,
            log,
            antilog,
        })
    }

    /// Shared, lazily built context per field width. The tables are
    /// immutable, so one instance serves any number of threads.
    pub fn shared(f: u8) -> Result<Arc<GfContext>, GfError> {
        static GF8: OnceLock<Arc<GfContext>> = OnceLock::new();
        static GF16: OnceLock<Arc<GfContext>> = OnceLock::new();
        match f {
            8 => Ok(Arc::clone(GF8.get_or_init(|| {
                Arc::new(GfContext::new(8).expect("0x11D is primitive over GF(2^8)"))
            }))),
            16 => Ok(Arc::clone(GF16.get_or_init(|| {
                Arc::new(GfContext::new(16).expect("0x1100B is primitive over GF(2^16)"))
            }))),
            other => Err(GfError::UnsupportedWidth(other)),
        }
    }

    /// Field width in bits.
    #[inline]
    pub fn field_width(&self) -> u8 {
        self.f
    }

    /// The reduction polynomial as a bit mask of degree `f`.
    #[inline]
    pub fn primitive_poly(&self) -> u32 {
        self.primitive_poly
    }

    /// Multiplicative group order, 2^f - 1.
    #[inline]
    pub fn group_order(&self) -> u32 {
        self.order
    }

    /// The primitive element α.
    #[inline]
    pub fn alpha(&self) -> GfElem {
        ALPHA
    }

    /// Exponent of a non-zero element: `log(x)` with `antilog(log(x)) = x`.
    ///
    /// # Panics
    /// Panics if `x` is zero (zero has no logarithm).
    #[inline]
    pub fn log(&self, x: GfElem) -> u16 {
        assert!(x != 0, "log of zero is undefined");
        self.log[x as usize]
    }

    /// α^k for k in 0..2^f-1.
    #[inline]
    pub fn antilog(&self, k: u32) -> GfElem {
        self.antilog[k as usize]
    }

    /// Raw antilog table, indexed by exponent. Exactly 2^f - 1 entries.
    #[inline]
    pub fn antilog_table(&self) -> &[u16] {
        &self.antilog[..self.order as usize]
    }

    /// The antilog table including its pad entry, so the slice length is
    /// exactly 2^f.
    #[inline]
    pub(crate) fn antilog_full(&self) -> &[u16] {
        &self.antilog
    }

    /// The log table; length exactly 2^f, indexed by element value.
    #[inline]
    pub(crate) fn log_full(&self) -> &[u16] {
        &self.log
    }

    /// Field multiplication via the tables.
    #[inline]
    pub fn mul(&self, a: GfElem, b: GfElem) -> GfElem {
        if a == 0 || b == 0 {
            return 0;
        }
        let mut e = self.log[a as usize] as u32 + self.log[b as usize] as u32;
        if e >= self.order {
            e -= self.order;
        }
        self.antilog[e as usize]
    }

    /// a^k by exponent arithmetic mod 2^f - 1, not repeated multiplication.
    ///
    /// `pow(a, 0) = 1` for every `a`, including `a = 0` (empty product).
    #[inline]
    pub fn pow(&self, a: GfElem, k: u64) -> GfElem {
        if k == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let e = (self.log[a as usize] as u64 * (k % self.order as u64)) % self.order as u64;
        self.antilog[e as usize]
    }
}

#[cfg(test)]
pub(crate) mod test_oracle {
    /// Shift-and-reduce (carry-less multiply + polynomial reduction)
    /// multiplication, independent of the log/antilog tables.
    pub fn clmul_reduce(a: u32, b: u32, poly: u32, f: u32) -> u16 {
        let mut acc: u64 = 0;
        for i in 0..f {
            if (b >> i) & 1 == 1 {
                acc ^= (a as u64) << i;
            }
        }
        for bit in (f..2 * f).rev() {
            if (acc >> bit) & 1 == 1 {
                acc ^= (poly as u64) << (bit - f);
            }
        }
        acc as u16
    }
}

//! Equi-join operators: a nested-loop oracle, a hash join that stores and
//! compares full key strings, a hash join that stores and compares short
//! key signatures, and grace-style partitioned variants of both.
//!
//! Build tables hold (digest, row index) entries, never whole tuples. The
//! digest is the point of comparison between the two hash variants: the
//! baseline owns a copy of the key bytes, the signature variant owns a
//! few field elements plus the key length.

use std::borrow::Cow;
use std::fmt;
use std::time::Instant;

use thiserror::Error;

use crate::relation::{ColumnType, Relation};
use crate::signature::{AlgebraicSignature, SigError, SignatureBase};

/// Knuth's multiplicative constant, 2^64 / φ.
const FIB: u64 = 0x9E37_79B9_7F4A_7C15;
/// Fold seed for bucket selection within a table.
const BUCKET_SEED: u64 = 0x243F_6A88_85A3_08D3;
/// Fold seed for grace partition routing, distinct from the bucket seed
/// so partition skew and bucket skew stay independent.
const PARTITION_SEED: u64 = 0x4528_21E6_38D0_1377;

/// Byte-wise multiplicative fold over a variable-length digest.
#[inline]
fn fib_fold(seed: u64, bytes: &[u8]) -> u64 {
    let mut acc = seed;
    for &b in bytes {
        acc = (acc ^ b as u64).wrapping_mul(FIB);
    }
    acc
}

/// Multiplicative fold of a digest that fits one word: a single step of
/// the same scheme.
#[inline]
fn word_fold(seed: u64, w: u64) -> u64 {
    (seed ^ w).wrapping_mul(FIB)
}

/// Reduces a fold to a slot index. The upper product bits carry the most
/// mixing, so the modulus is taken from them.
#[inline]
fn reduce(h: u64, slots: usize) -> usize {
    ((h >> 32) % slots as u64) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinAlgorithm {
    NestedLoop,
    HashBaseline,
    HashSignature,
    GraceBaseline,
    GraceSignature,
}

impl JoinAlgorithm {
    #[inline]
    pub fn is_signature(self) -> bool {
        matches!(self, JoinAlgorithm::HashSignature | JoinAlgorithm::GraceSignature)
    }

    #[inline]
    pub fn is_grace(self) -> bool {
        matches!(self, JoinAlgorithm::GraceBaseline | JoinAlgorithm::GraceSignature)
    }
}

impl fmt::Display for JoinAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JoinAlgorithm::NestedLoop => "nested-loop",
            JoinAlgorithm::HashBaseline => "hash-baseline",
            JoinAlgorithm::HashSignature => "hash-signature",
            JoinAlgorithm::GraceBaseline => "grace-baseline",
            JoinAlgorithm::GraceSignature => "grace-signature",
        })
    }
}

/// What a signature match means for the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchMode {
    /// Byte-compare the keys after a signature match; emit only true
    /// equality and count the collisions.
    #[default]
    Verify,
    /// Emit on signature equality alone.
    Trust,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SigConfig {
    pub field_width: u8,
    pub n_sig: usize,
}

impl Default for SigConfig {
    fn default() -> Self {
        Self {
            field_width: 16,
            n_sig: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinSpec {
    pub left_key: String,
    pub right_key: String,
    pub algorithm: JoinAlgorithm,
    /// Present exactly when `algorithm` is a signature variant.
    pub mode: Option<MatchMode>,
    pub partitions: usize,
    pub sig: SigConfig,
}

impl JoinSpec {
    /// A spec with defaults for everything but the algorithm: key column
    /// "key" on both sides, verify mode where applicable, one partition.
    pub fn for_algorithm(algorithm: JoinAlgorithm) -> Self {
        Self {
            left_key: "key".to_string(),
            right_key: "key".to_string(),
            algorithm,
            mode: algorithm.is_signature().then_some(MatchMode::Verify),
            partitions: 1,
            sig: SigConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), JoinError> {
        if self.partitions < 1 {
            return Err(JoinError::BadPartitions);
        }
        if self.mode.is_some() != self.algorithm.is_signature() {
            return Err(JoinError::ModeMismatch {
                algorithm: self.algorithm,
                has_mode: self.mode.is_some(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum JoinError {
    #[error("{side} relation has no key column {column:?}")]
    MissingKeyColumn { side: &'static str, column: String },
    #[error("key columns disagree on type: left is {left}, right is {right}")]
    KeyTypeMismatch { left: ColumnType, right: ColumnType },
    #[error("probe spec does not match the build table (table: {table}, probe: {probe})")]
    SpecMismatch { table: String, probe: String },
    #[error("partitions must be at least 1")]
    BadPartitions,
    #[error("algorithm {algorithm} and match mode disagree (mode given: {has_mode}); verify/trust applies to signature variants only")]
    ModeMismatch {
        algorithm: JoinAlgorithm,
        has_mode: bool,
    },
    #[error(transparent)]
    Sig(#[from] SigError),
}

/// Execution counters for one join run. Timings cover the in-memory work
/// only; `peak_table_bytes` accounts the digest storage of the largest
/// build table alive at any one time (grace variants build one table per
/// partition and drop it before the next).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JoinStats {
    pub build_ns: u64,
    pub probe_ns: u64,
    pub peak_table_bytes: u64,
    /// Probe-side tuples processed.
    pub probes: u64,
    /// Digest matches seen by the signature variants.
    pub signature_matches: u64,
    /// Byte-verified matches (verify mode and baseline; zero under trust).
    pub verified_matches: u64,
    /// signature_matches − verified_matches, verify mode only.
    pub collisions: u64,
}

#[derive(Debug, Clone, Default)]
pub struct JoinResult {
    /// (left row index, right row index), in probe scan order.
    pub pairs: Vec<(u32, u32)>,
    pub stats: JoinStats,
}

/// Signature digests are stored packed into one word whenever n_sig·f
/// fits in 32 bits (the default configuration does, at 4 digest bytes
/// plus the 4-byte length). Packing is injective, so word equality is
/// signature equality, and bucket scans compare one integer instead of
/// walking component slices.
enum Buckets {
    SigPacked(Vec<Vec<(u64, u32)>>),
    SigWide(Vec<Vec<(AlgebraicSignature, u32)>>),
    Baseline(Vec<Vec<(Box<[u8]>, u32)>>),
}

/// Per-row digests computed once up front by the grace variants.
enum SigDigests {
    Packed(Vec<u64>),
    Wide(Vec<AlgebraicSignature>),
}

/// Hash table over the build side. Holds digests and row indices; key
/// bytes for verification are fetched back through the borrowed relation.
pub struct BuildTable<'a> {
    relation: &'a Relation,
    key_index: usize,
    key_type: ColumnType,
    buckets: Buckets,
    bucket_count: usize,
    sig: Option<SignatureBase>,
    sig_config: SigConfig,
    entries: u64,
    build_ns: u64,
    peak_table_bytes: u64,
}

impl<'a> BuildTable<'a> {
    #[inline]
    pub fn bucket_count(&self) -> usize {
        self.bucket_count
    }

    #[inline]
    pub fn entry_count(&self) -> u64 {
        self.entries
    }

    #[inline]
    pub fn is_signature(&self) -> bool {
        !matches!(self.buckets, Buckets::Baseline(_))
    }

    /// Accounted digest storage: per entry, signature bytes plus the
    /// 4-byte length field for the signature variant, or the key's byte
    /// length for the baseline.
    #[inline]
    pub fn peak_table_bytes(&self) -> u64 {
        self.peak_table_bytes
    }

    #[inline]
    pub fn build_ns(&self) -> u64 {
        self.build_ns
    }

    fn describe(&self) -> String {
        if let Some(base) = &self.sig {
            format!(
                "signature digests, f={} n_sig={}",
                base.field_width(),
                base.n_sig()
            )
        } else {
            "full-key digests".to_string()
        }
    }
}

fn key_index_of(
    rel: &Relation,
    column: &str,
    side: &'static str,
) -> Result<usize, JoinError> {
    rel.schema()
        .columns()
        .iter()
        .position(|(n, _)| n == column)
        .ok_or_else(|| JoinError::MissingKeyColumn {
            side,
            column: column.to_string(),
        })
}

fn resolve_keys(
    r: &Relation,
    s: &Relation,
    left_key: &str,
    right_key: &str,
) -> Result<(usize, usize), JoinError> {
    let ri = key_index_of(r, left_key, "left")?;
    let si = key_index_of(s, right_key, "right")?;
    let lt = r.schema().columns()[ri].1;
    let rt = s.schema().columns()[si].1;
    if lt != rt {
        return Err(JoinError::KeyTypeMismatch {
            left: lt,
            right: rt,
        });
    }
    Ok((ri, si))
}

fn check_row_count(rel: &Relation) {
    assert!(
        rel.len() <= u32::MAX as usize,
        "row indices are u32; relation has {} rows",
        rel.len()
    );
}

/// All (i, j) with byte-equal keys, i over R and j over S in input order.
pub fn nested_loop_join(
    r: &Relation,
    s: &Relation,
    left_key: &str,
    right_key: &str,
) -> Result<JoinResult, JoinError> {
    let (ri, si) = resolve_keys(r, s, left_key, right_key)?;
    check_row_count(r);
    check_row_count(s);
    let start = Instant::now();
    let mut pairs = Vec::new();
    let s_keys: Vec<Cow<'_, [u8]>> = s.rows().iter().map(|row| row[si].key_bytes()).collect();
    for (i, row) in r.rows().iter().enumerate() {
        let rk = row[ri].key_bytes();
        for (j, sk) in s_keys.iter().enumerate() {
            if rk.as_ref() == sk.as_ref() {
                pairs.push((i as u32, j as u32));
            }
        }
    }
    let elapsed = start.elapsed().as_nanos() as u64;
    let verified = pairs.len() as u64;
    Ok(JoinResult {
        pairs,
        stats: JoinStats {
            probe_ns: elapsed,
            probes: r.len() as u64 * s.len() as u64,
            verified_matches: verified,
            ..JoinStats::default()
        },
    })
}

/// Next power of two at or above twice the entry count, so expected
/// chains stay short.
fn bucket_count_for(entries: usize) -> usize {
    (entries * 2).next_power_of_two()
}

fn signature_base_for(config: SigConfig) -> Result<SignatureBase, JoinError> {
    Ok(SignatureBase::new(config.field_width, config.n_sig)?)
}

/// Whether a configuration's digest (components plus length) fits the
/// packed one-word layout.
#[inline]
fn packs_to_word(config: SigConfig) -> bool {
    config.n_sig as u32 * config.field_width as u32 <= 32
}

/// Canonical digest bytes of a wide signature: components little-endian
/// in component order, then the byte length, little-endian.
fn sig_digest_bytes(sig: &AlgebraicSignature, width_bytes: usize, out: &mut [u8; 20]) -> usize {
    let mut n = 0;
    for &c in sig.components() {
        out[n] = c as u8;
        n += 1;
        if width_bytes == 2 {
            out[n] = (c >> 8) as u8;
            n += 1;
        }
    }
    out[n..n + 4].copy_from_slice(&sig.byte_len().to_le_bytes());
    n + 4
}

#[inline]
fn sig_fold(seed: u64, sig: &AlgebraicSignature, width_bytes: usize) -> u64 {
    let mut buf = [0u8; 20];
    let n = sig_digest_bytes(sig, width_bytes, &mut buf);
    fib_fold(seed, &buf[..n])
}

impl SigDigests {
    #[inline]
    fn fold(&self, seed: u64, i: usize, width_bytes: usize) -> u64 {
        match self {
            SigDigests::Packed(ws) => word_fold(seed, ws[i]),
            SigDigests::Wide(sigs) => sig_fold(seed, &sigs[i], width_bytes),
        }
    }
}

fn packed_digest(base: &SignatureBase, key: &[u8]) -> Result<u64, JoinError> {
    Ok(base.digest_word(key)?)
}

fn build_indices<'a>(
    rel: &'a Relation,
    key_index: usize,
    indices: Option<&[u32]>,
    spec: &JoinSpec,
    precomputed: Option<&SigDigests>,
) -> Result<BuildTable<'a>, JoinError> {
    check_row_count(rel);
    let entry_total = indices.map_or(rel.len(), |ix| ix.len());
    let bucket_count = bucket_count_for(entry_total);
    let start = Instant::now();
    let mut peak: u64 = 0;

    let row_iter: Box<dyn Iterator<Item = u32>> = match indices {
        Some(ix) => Box::new(ix.iter().copied()),
        None => Box::new(0..rel.len() as u32),
    };

    let (buckets, sig) = if spec.algorithm.is_signature() {
        let base = signature_base_for(spec.sig)?;
        let width_bytes = base.field_width() as usize / 8;
        let entry_bytes = (base.signature_bytes() + 4) as u64;
        if packs_to_word(spec.sig) {
            let mut buckets: Vec<Vec<(u64, u32)>> = vec![Vec::new(); bucket_count];
            for i in row_iter {
                let w = match precomputed {
                    Some(SigDigests::Packed(ws)) => ws[i as usize],
                    Some(SigDigests::Wide(_)) => unreachable!("digest layout is fixed by the config"),
                    None => packed_digest(&base, &rel.key_of(i as usize))?,
                };
                let b = reduce(word_fold(BUCKET_SEED, w), bucket_count);
                buckets[b].push((w, i));
                peak += entry_bytes;
            }
            (Buckets::SigPacked(buckets), Some(base))
        } else {
            let mut buckets: Vec<Vec<(AlgebraicSignature, u32)>> = vec![Vec::new(); bucket_count];
            for i in row_iter {
                let sig = match precomputed {
                    Some(SigDigests::Wide(sigs)) => sigs[i as usize].clone(),
                    Some(SigDigests::Packed(_)) => unreachable!("digest layout is fixed by the config"),
                    None => base.compute_signature(&rel.key_of(i as usize))?,
                };
                let b = reduce(sig_fold(BUCKET_SEED, &sig, width_bytes), bucket_count);
                buckets[b].push((sig, i));
                peak += entry_bytes;
            }
            (Buckets::SigWide(buckets), Some(base))
        }
    } else {
        let mut buckets: Vec<Vec<(Box<[u8]>, u32)>> = vec![Vec::new(); bucket_count];
        for i in row_iter {
            let key = rel.key_of(i as usize);
            let b = reduce(fib_fold(BUCKET_SEED, &key), bucket_count);
            peak += key.len() as u64;
            buckets[b].push((key.into_owned().into_boxed_slice(), i));
        }
        (Buckets::Baseline(buckets), None)
    };

    Ok(BuildTable {
        relation: rel,
        key_index,
        key_type: rel.schema().columns()[key_index].1,
        buckets,
        bucket_count,
        sig,
        sig_config: spec.sig,
        entries: entry_total as u64,
        build_ns: start.elapsed().as_nanos() as u64,
        peak_table_bytes: peak,
    })
}

/// Hashes the left relation's key column into a bucket table.
pub fn build<'a>(r: &'a Relation, spec: &JoinSpec) -> Result<BuildTable<'a>, JoinError> {
    spec.validate()?;
    let key_index = key_index_of(r, &spec.left_key, "left")?;
    build_indices(r, key_index, None, spec, None)
}

fn check_probe_compat(table: &BuildTable<'_>, spec: &JoinSpec) -> Result<(), JoinError> {
    let compatible = if spec.algorithm.is_signature() {
        table.is_signature() && table.sig_config == spec.sig
    } else {
        !table.is_signature()
    };
    if !compatible {
        let probe = if spec.algorithm.is_signature() {
            format!(
                "signature digests, f={} n_sig={}",
                spec.sig.field_width, spec.sig.n_sig
            )
        } else {
            "full-key digests".to_string()
        };
        return Err(JoinError::SpecMismatch {
            table: table.describe(),
            probe,
        });
    }
    Ok(())
}

struct ProbeAcc {
    pairs: Vec<(u32, u32)>,
    probes: u64,
    signature_matches: u64,
    verified_matches: u64,
    probe_ns: u64,
}

impl ProbeAcc {
    fn new() -> Self {
        Self {
            pairs: Vec::new(),
            probes: 0,
            signature_matches: 0,
            verified_matches: 0,
            probe_ns: 0,
        }
    }
}

fn probe_indices(
    table: &BuildTable<'_>,
    s: &Relation,
    s_key_index: usize,
    indices: Option<&[u32]>,
    mode: MatchMode,
    precomputed: Option<&SigDigests>,
    acc: &mut ProbeAcc,
) -> Result<(), JoinError> {
    check_row_count(s);
    let start = Instant::now();
    let s_rows = s.rows();
    let row_iter: Box<dyn Iterator<Item = u32>> = match indices {
        Some(ix) => Box::new(ix.iter().copied()),
        None => Box::new(0..s.len() as u32),
    };

    match &table.buckets {
        Buckets::SigPacked(buckets) => {
            let base = table.sig.as_ref().expect("signature table carries its base");
            for j in row_iter {
                acc.probes += 1;
                let s_key = s_rows[j as usize][s_key_index].key_bytes();
                let w = match precomputed {
                    Some(SigDigests::Packed(ws)) => ws[j as usize],
                    Some(SigDigests::Wide(_)) => unreachable!("digest layout is fixed by the config"),
                    None => packed_digest(base, &s_key)?,
                };
                let b = reduce(word_fold(BUCKET_SEED, w), table.bucket_count);
                for &(entry_w, i) in &buckets[b] {
                    if entry_w == w {
                        acc.signature_matches += 1;
                        match mode {
                            MatchMode::Trust => acc.pairs.push((i, j)),
                            MatchMode::Verify => {
                                if table.relation.rows()[i as usize][table.key_index]
                                    .key_bytes()
                                    .as_ref()
                                    == s_key.as_ref()
                                {
                                    acc.verified_matches += 1;
                                    acc.pairs.push((i, j));
                                }
                            }
                        }
                    }
                }
            }
        }
        Buckets::SigWide(buckets) => {
            let base = table.sig.as_ref().expect("signature table carries its base");
            let width_bytes = base.field_width() as usize / 8;
            for j in row_iter {
                acc.probes += 1;
                let s_key = s_rows[j as usize][s_key_index].key_bytes();
                let sig;
                let sig_ref = match precomputed {
                    Some(SigDigests::Wide(sigs)) => &sigs[j as usize],
                    Some(SigDigests::Packed(_)) => unreachable!("digest layout is fixed by the config"),
                    None => {
                        sig = base.compute_signature(&s_key)?;
                        &sig
                    }
                };
                let b = reduce(sig_fold(BUCKET_SEED, sig_ref, width_bytes), table.bucket_count);
                for (entry_sig, i) in &buckets[b] {
                    if entry_sig == sig_ref {
                        acc.signature_matches += 1;
                        match mode {
                            MatchMode::Trust => acc.pairs.push((*i, j)),
                            MatchMode::Verify => {
                                if table.relation.rows()[*i as usize][table.key_index]
                                    .key_bytes()
                                    .as_ref()
                                    == s_key.as_ref()
                                {
                                    acc.verified_matches += 1;
                                    acc.pairs.push((*i, j));
                                }
                            }
                        }
                    }
                }
            }
        }
        Buckets::Baseline(buckets) => {
            for j in row_iter {
                acc.probes += 1;
                let s_key = s_rows[j as usize][s_key_index].key_bytes();
                let b = reduce(fib_fold(BUCKET_SEED, &s_key), table.bucket_count);
                for (entry_key, i) in &buckets[b] {
                    if entry_key.as_ref() == s_key.as_ref() {
                        acc.verified_matches += 1;
                        acc.pairs.push((*i, j));
                    }
                }
            }
        }
    }
    acc.probe_ns += start.elapsed().as_nanos() as u64;
    Ok(())
}

/// Probes the right relation against a build table. Pairs come out in
/// probe scan order: (table row, probe row) per encounter.
pub fn probe(
    table: &BuildTable<'_>,
    s: &Relation,
    spec: &JoinSpec,
) -> Result<JoinResult, JoinError> {
    spec.validate()?;
    check_probe_compat(table, spec)?;
    let s_key_index = key_index_of(s, &spec.right_key, "right")?;
    let s_key_type = s.schema().columns()[s_key_index].1;
    if s_key_type != table.key_type {
        return Err(JoinError::KeyTypeMismatch {
            left: table.key_type,
            right: s_key_type,
        });
    }
    let mode = spec.mode.unwrap_or_default();
    let mut acc = ProbeAcc::new();
    probe_indices(table, s, s_key_index, None, mode, None, &mut acc)?;
    let collisions = if spec.algorithm.is_signature() && mode == MatchMode::Verify {
        acc.signature_matches - acc.verified_matches
    } else {
        0
    };
    Ok(JoinResult {
        pairs: acc.pairs,
        stats: JoinStats {
            build_ns: table.build_ns,
            probe_ns: acc.probe_ns,
            peak_table_bytes: table.peak_table_bytes,
            probes: acc.probes,
            signature_matches: acc.signature_matches,
            verified_matches: acc.verified_matches,
            collisions,
        },
    })
}

/// Digest-level partition routing. Every row lands in exactly one
/// partition, equal keys always share one, and the routing hash is
/// independent of the in-table bucket hash.
pub fn grace_partition(
    rel: &Relation,
    key: &str,
    partitions: usize,
    spec: &JoinSpec,
) -> Result<Vec<Vec<u32>>, JoinError> {
    if partitions < 1 {
        return Err(JoinError::BadPartitions);
    }
    let key_index = key_index_of(rel, key, "left")?;
    check_row_count(rel);
    if spec.algorithm.is_signature() {
        let base = signature_base_for(spec.sig)?;
        let digests = compute_all_digests(rel, key_index, &base, spec.sig)?;
        let width_bytes = base.field_width() as usize / 8;
        Ok(route_by(partitions, rel.len(), |i| {
            digests.fold(PARTITION_SEED, i, width_bytes)
        }))
    } else {
        Ok(route_by(partitions, rel.len(), |i| {
            fib_fold(PARTITION_SEED, &rel.key_of(i))
        }))
    }
}

fn route_by(partitions: usize, rows: usize, fold_of: impl Fn(usize) -> u64) -> Vec<Vec<u32>> {
    let mut parts: Vec<Vec<u32>> = vec![Vec::new(); partitions];
    for i in 0..rows {
        parts[reduce(fold_of(i), partitions)].push(i as u32);
    }
    parts
}

fn compute_all_digests(
    rel: &Relation,
    key_index: usize,
    base: &SignatureBase,
    config: SigConfig,
) -> Result<SigDigests, JoinError> {
    if packs_to_word(config) {
        rel.rows()
            .iter()
            .map(|row| packed_digest(base, &row[key_index].key_bytes()))
            .collect::<Result<Vec<_>, _>>()
            .map(SigDigests::Packed)
    } else {
        rel.rows()
            .iter()
            .map(|row| Ok(base.compute_signature(&row[key_index].key_bytes())?))
            .collect::<Result<Vec<_>, _>>()
            .map(SigDigests::Wide)
    }
}

/// Partitions both inputs by key digest, then joins each partition pair
/// with the simple build/probe. Signatures are computed once per row and
/// reused for routing, building, and probing.
pub fn grace_join(
    r: &Relation,
    s: &Relation,
    spec: &JoinSpec,
) -> Result<JoinResult, JoinError> {
    spec.validate()?;
    let (ri, si) = resolve_keys(r, s, &spec.left_key, &spec.right_key)?;
    check_row_count(r);
    check_row_count(s);
    let mode = spec.mode.unwrap_or_default();
    let partitions = spec.partitions;

    let mut build_ns: u64 = 0;
    let mut probe_ns: u64 = 0;

    let (r_digests, s_digests, width_bytes) = if spec.algorithm.is_signature() {
        let base = signature_base_for(spec.sig)?;
        let w = base.field_width() as usize / 8;
        let t0 = Instant::now();
        let rd = compute_all_digests(r, ri, &base, spec.sig)?;
        build_ns += t0.elapsed().as_nanos() as u64;
        let t1 = Instant::now();
        let sd = compute_all_digests(s, si, &base, spec.sig)?;
        probe_ns += t1.elapsed().as_nanos() as u64;
        (Some(rd), Some(sd), w)
    } else {
        (None, None, 0)
    };

    let t0 = Instant::now();
    let parts_r = match &r_digests {
        Some(d) => route_by(partitions, r.len(), |i| {
            d.fold(PARTITION_SEED, i, width_bytes)
        }),
        None => route_by(partitions, r.len(), |i| {
            fib_fold(PARTITION_SEED, &r.key_of(i))
        }),
    };
    build_ns += t0.elapsed().as_nanos() as u64;

    let t1 = Instant::now();
    let parts_s = match &s_digests {
        Some(d) => route_by(partitions, s.len(), |j| {
            d.fold(PARTITION_SEED, j, width_bytes)
        }),
        None => route_by(partitions, s.len(), |j| {
            fib_fold(PARTITION_SEED, &s.key_of(j))
        }),
    };
    probe_ns += t1.elapsed().as_nanos() as u64;

    let mut acc = ProbeAcc::new();
    let mut peak: u64 = 0;
    for (part_r, part_s) in parts_r.iter().zip(&parts_s) {
        let table = build_indices(r, ri, Some(part_r), spec, r_digests.as_ref())?;
        build_ns += table.build_ns;
        peak = peak.max(table.peak_table_bytes);
        probe_indices(&table, s, si, Some(part_s), mode, s_digests.as_ref(), &mut acc)?;
    }

    let collisions = if spec.algorithm.is_signature() && mode == MatchMode::Verify {
        acc.signature_matches - acc.verified_matches
    } else {
        0
    };
    Ok(JoinResult {
        pairs: acc.pairs,
        stats: JoinStats {
            build_ns,
            probe_ns: probe_ns + acc.probe_ns,
            peak_table_bytes: peak,
            probes: acc.probes,
            signature_matches: acc.signature_matches,
            verified_matches: acc.verified_matches,
            collisions,
        },
    })
}

/// Runs the spec's algorithm. The build side is always the smaller
/// input: when |R| > |S| the engine swaps the two (keys included) and
/// swaps every output pair back, so results are oriented as (R row,
/// S row) regardless.
pub fn execute_join(
    r: &Relation,
    s: &Relation,
    spec: &JoinSpec,
) -> Result<JoinResult, JoinError> {
    spec.validate()?;
    if spec.algorithm == JoinAlgorithm::NestedLoop {
        return nested_loop_join(r, s, &spec.left_key, &spec.right_key);
    }

    let swap = r.len() > s.len();
    let (build_rel, probe_rel) = if swap { (s, r) } else { (r, s) };
    let oriented = if swap {
        JoinSpec {
            left_key: spec.right_key.clone(),
            right_key: spec.left_key.clone(),
            ..spec.clone()
        }
    } else {
        spec.clone()
    };

    let mut result = if spec.algorithm.is_grace() {
        grace_join(build_rel, probe_rel, &oriented)?
    } else {
        let table = build(build_rel, &oriented)?;
        probe(&table, probe_rel, &oriented)?
    };

    if swap {
        for pair in &mut result.pairs {
            *pair = (pair.1, pair.0);
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{Schema, Value};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::collections::HashSet;

    fn keyed(keys: &[&str]) -> Relation {
        let schema = Schema::new(
            vec![
                ("id".into(), ColumnType::Integer),
                ("key".into(), ColumnType::String),
            ],
            "key",
        )
        .unwrap();
        let rows = keys
            .iter()
            .enumerate()
            .map(|(i, k)| vec![Value::Int(i as i64), Value::Str(k.to_string())])
            .collect();
        Relation::new(schema, rows).unwrap()
    }

    fn random_relation(rng: &mut StdRng, rows: usize, key_len: usize, alphabet: u8) -> Relation {
        let keys: Vec<String> = (0..rows)
            .map(|_| {
                (0..key_len)
                    .map(|_| (b'a' + rng.random_range(0..alphabet)) as char)
                    .collect()
            })
            .collect();
        keyed(&keys.iter().map(|s| s.as_str()).collect::<Vec<_>>())
    }

    fn pair_set(result: &JoinResult) -> HashSet<(u32, u32)> {
        result.pairs.iter().copied().collect()
    }

    fn all_algorithms() -> Vec<JoinSpec> {
        let mut specs: Vec<JoinSpec> = [
            JoinAlgorithm::HashBaseline,
            JoinAlgorithm::HashSignature,
            JoinAlgorithm::GraceBaseline,
            JoinAlgorithm::GraceSignature,
        ]
        .into_iter()
        .map(|algo| {
            let mut spec = JoinSpec::for_algorithm(algo);
            if algo.is_grace() {
                spec.partitions = 4;
            }
            spec
        })
        .collect();
        // Five components exceed the packed digest layout, exercising the
        // wide table representation through the same assertions.
        for algo in [JoinAlgorithm::HashSignature, JoinAlgorithm::GraceSignature] {
            let mut spec = JoinSpec::for_algorithm(algo);
            spec.sig.n_sig = 5;
            if algo.is_grace() {
                spec.partitions = 4;
            }
            specs.push(spec);
        }
        specs
    }

    #[test]
    fn nested_loop_basics() {
        let empty = keyed(&[]);
        let s = keyed(&["bb", "cc"]);
        let result = nested_loop_join(&empty, &s, "key", "key").unwrap();
        assert!(result.pairs.is_empty());

        let r = keyed(&["aa", "bb"]);
        let result = nested_loop_join(&r, &s, "key", "key").unwrap();
        assert_eq!(result.pairs, vec![(1, 0)]);
        assert_eq!(result.stats.verified_matches, 1);
        assert_eq!(result.stats.probes, 4);
    }

    #[test]
    fn nested_loop_orders_lexicographically() {
        let r = keyed(&["x", "y", "x"]);
        let s = keyed(&["x", "x"]);
        let result = nested_loop_join(&r, &s, "key", "key").unwrap();
        assert_eq!(result.pairs, vec![(0, 0), (0, 1), (2, 0), (2, 1)]);
    }

    #[test]
    fn missing_key_and_type_mismatch() {
        let r = keyed(&["a"]);
        let s = keyed(&["a"]);
        assert!(matches!(
            nested_loop_join(&r, &s, "nope", "key"),
            Err(JoinError::MissingKeyColumn { side: "left", .. })
        ));
        let spec = JoinSpec {
            right_key: "id".into(),
            ..JoinSpec::for_algorithm(JoinAlgorithm::HashBaseline)
        };
        assert!(matches!(
            execute_join(&r, &s, &spec),
            Err(JoinError::KeyTypeMismatch { .. })
        ));
    }

    #[test]
    fn spec_validation() {
        let mut spec = JoinSpec::for_algorithm(JoinAlgorithm::HashBaseline);
        spec.partitions = 0;
        assert!(matches!(spec.validate(), Err(JoinError::BadPartitions)));

        let mut spec = JoinSpec::for_algorithm(JoinAlgorithm::HashBaseline);
        spec.mode = Some(MatchMode::Verify);
        assert!(matches!(spec.validate(), Err(JoinError::ModeMismatch { .. })));

        let mut spec = JoinSpec::for_algorithm(JoinAlgorithm::HashSignature);
        spec.mode = None;
        assert!(matches!(spec.validate(), Err(JoinError::ModeMismatch { .. })));
    }

    #[test]
    fn empty_build_side_gives_empty_table() {
        let r = keyed(&[]);
        let spec = JoinSpec::for_algorithm(JoinAlgorithm::HashSignature);
        let table = build(&r, &spec).unwrap();
        assert_eq!(table.entry_count(), 0);
        assert_eq!(table.peak_table_bytes(), 0);
        let s = keyed(&["a", "b"]);
        let result = probe(&table, &s, &spec).unwrap();
        assert!(result.pairs.is_empty());
        assert_eq!(result.stats.probes, 2);
    }

    #[test]
    fn identical_keys_share_a_bucket_with_equal_digests() {
        let r = keyed(&["same", "same"]);
        let spec = JoinSpec::for_algorithm(JoinAlgorithm::HashSignature);
        let table = build(&r, &spec).unwrap();
        let Buckets::SigPacked(buckets) = &table.buckets else {
            panic!("expected packed signature buckets");
        };
        let non_empty: Vec<_> = buckets.iter().filter(|b| !b.is_empty()).collect();
        assert_eq!(non_empty.len(), 1);
        assert_eq!(non_empty[0].len(), 2);
        assert_eq!(non_empty[0][0].0, non_empty[0][1].0);
    }

    #[test]
    fn every_row_lands_in_its_own_digest_bucket() {
        let mut rng = StdRng::seed_from_u64(5);
        let rel = random_relation(&mut rng, 200, 4, 6);

        let spec = JoinSpec::for_algorithm(JoinAlgorithm::HashSignature);
        let table = build(&rel, &spec).unwrap();
        let mut seen = vec![false; rel.len()];
        let Buckets::SigPacked(buckets) = &table.buckets else {
            panic!("expected packed signature buckets");
        };
        for (b, bucket) in buckets.iter().enumerate() {
            for &(w, i) in bucket {
                assert!(!seen[i as usize], "row {i} appears twice");
                seen[i as usize] = true;
                assert_eq!(reduce(word_fold(BUCKET_SEED, w), table.bucket_count), b);
            }
        }
        assert!(seen.iter().all(|&s| s));

        let mut wide = JoinSpec::for_algorithm(JoinAlgorithm::HashSignature);
        wide.sig.n_sig = 5;
        let table = build(&rel, &wide).unwrap();
        let mut seen = vec![false; rel.len()];
        let Buckets::SigWide(buckets) = &table.buckets else {
            panic!("five 16-bit components exceed the packed layout");
        };
        for (b, bucket) in buckets.iter().enumerate() {
            for (sig, i) in bucket {
                assert!(!seen[*i as usize], "row {i} appears twice");
                seen[*i as usize] = true;
                assert_eq!(reduce(sig_fold(BUCKET_SEED, sig, 2), table.bucket_count), b);
            }
        }
        assert!(seen.iter().all(|&s| s));

        let spec = JoinSpec::for_algorithm(JoinAlgorithm::HashBaseline);
        let table = build(&rel, &spec).unwrap();
        let mut seen = vec![false; rel.len()];
        let Buckets::Baseline(buckets) = &table.buckets else {
            panic!("expected baseline buckets");
        };
        for (b, bucket) in buckets.iter().enumerate() {
            for (key, i) in bucket {
                assert!(!seen[*i as usize], "row {i} appears twice");
                seen[*i as usize] = true;
                assert_eq!(key.as_ref(), rel.key_of(*i as usize).as_ref());
                assert_eq!(reduce(fib_fold(BUCKET_SEED, key), table.bucket_count), b);
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn storage_accounting_contract() {
        let keys: Vec<String> = (0..100).map(|i| format!("{i:0>100}")).collect();
        let r = keyed(&keys.iter().map(|s| s.as_str()).collect::<Vec<_>>());

        let sig_spec = JoinSpec::for_algorithm(JoinAlgorithm::HashSignature);
        let sig_table = build(&r, &sig_spec).unwrap();
        assert_eq!(sig_table.peak_table_bytes(), 100 * (4 + 4));

        let base_spec = JoinSpec::for_algorithm(JoinAlgorithm::HashBaseline);
        let base_table = build(&r, &base_spec).unwrap();
        assert_eq!(base_table.peak_table_bytes(), 100 * 100);
        assert!(base_table.peak_table_bytes() > 10 * sig_table.peak_table_bytes());
    }

    #[test]
    fn probe_rejects_mismatched_specs() {
        let r = keyed(&["a"]);
        let s = keyed(&["a"]);
        let sig_spec = JoinSpec::for_algorithm(JoinAlgorithm::HashSignature);
        let table = build(&r, &sig_spec).unwrap();

        let base_spec = JoinSpec::for_algorithm(JoinAlgorithm::HashBaseline);
        assert!(matches!(
            probe(&table, &s, &base_spec),
            Err(JoinError::SpecMismatch { .. })
        ));

        let mut other_sig = sig_spec.clone();
        other_sig.sig.n_sig = 3;
        assert!(matches!(
            probe(&table, &s, &other_sig),
            Err(JoinError::SpecMismatch { .. })
        ));
    }

    #[test]
    fn hash_variants_match_oracle_on_random_inputs() {
        let mut rng = StdRng::seed_from_u64(2024);
        for _ in 0..10 {
            let r = random_relation(&mut rng, 80, 3, 4);
            let s = random_relation(&mut rng, 120, 3, 4);
            let oracle = pair_set(&nested_loop_join(&r, &s, "key", "key").unwrap());
            for spec in all_algorithms() {
                let result = execute_join(&r, &s, &spec).unwrap();
                assert_eq!(
                    pair_set(&result),
                    oracle,
                    "algorithm {} diverged",
                    spec.algorithm
                );
                assert_eq!(result.pairs.len(), oracle.len(), "{} emitted duplicates", spec.algorithm);
            }
        }
    }

    #[test]
    fn swap_preserves_pair_orientation() {
        // Left bigger than right forces the engine to build on the right.
        let r = keyed(&["a", "b", "c", "d", "a"]);
        let s = keyed(&["a", "x"]);
        for spec in all_algorithms() {
            let result = execute_join(&r, &s, &spec).unwrap();
            let mut got: Vec<_> = result.pairs.clone();
            got.sort_unstable();
            assert_eq!(got, vec![(0, 0), (4, 0)], "{}", spec.algorithm);
            for (i, j) in got {
                assert_eq!(r.key_of(i as usize), s.key_of(j as usize));
            }
        }
    }

    #[test]
    fn trust_mode_is_a_superset_of_the_oracle() {
        let mut rng = StdRng::seed_from_u64(7);
        // A 1-component 8-bit signature collides often, which is the point.
        let mut spec = JoinSpec::for_algorithm(JoinAlgorithm::HashSignature);
        spec.mode = Some(MatchMode::Trust);
        spec.sig = SigConfig {
            field_width: 8,
            n_sig: 1,
        };
        let mut saw_extra = false;
        for _ in 0..20 {
            let r = random_relation(&mut rng, 150, 4, 8);
            let s = random_relation(&mut rng, 200, 4, 8);
            let oracle = pair_set(&nested_loop_join(&r, &s, "key", "key").unwrap());
            let trust = pair_set(&execute_join(&r, &s, &spec).unwrap());
            assert!(trust.is_superset(&oracle));
            for &(i, j) in trust.difference(&oracle) {
                saw_extra = true;
                assert_ne!(r.key_of(i as usize), s.key_of(j as usize));
            }
        }
        assert!(saw_extra, "expected at least one 8-bit collision across runs");
    }

    #[test]
    fn verify_mode_counts_collisions() {
        let mut rng = StdRng::seed_from_u64(8);
        let mut spec = JoinSpec::for_algorithm(JoinAlgorithm::HashSignature);
        spec.sig = SigConfig {
            field_width: 8,
            n_sig: 1,
        };
        let mut total_collisions = 0;
        for _ in 0..20 {
            let r = random_relation(&mut rng, 150, 4, 8);
            let s = random_relation(&mut rng, 200, 4, 8);
            let oracle = pair_set(&nested_loop_join(&r, &s, "key", "key").unwrap());
            let result = execute_join(&r, &s, &spec).unwrap();
            assert_eq!(pair_set(&result), oracle);
            assert_eq!(
                result.stats.collisions,
                result.stats.signature_matches - result.stats.verified_matches
            );
            total_collisions += result.stats.collisions;
        }
        assert!(total_collisions > 0, "8-bit signatures should collide here");
    }

    #[test]
    fn grace_partition_properties() {
        let mut rng = StdRng::seed_from_u64(9);
        let rel = random_relation(&mut rng, 300, 3, 5);
        let spec = JoinSpec::for_algorithm(JoinAlgorithm::GraceBaseline);

        let single = grace_partition(&rel, "key", 1, &spec).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0], (0..300u32).collect::<Vec<_>>());

        let parts = grace_partition(&rel, "key", 8, &spec).unwrap();
        let mut all: Vec<u32> = parts.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..300u32).collect::<Vec<_>>());

        // Equal keys always share a partition.
        let mut part_of = vec![usize::MAX; 300];
        for (p, part) in parts.iter().enumerate() {
            for &i in part {
                part_of[i as usize] = p;
            }
        }
        for i in 0..300 {
            for j in 0..300 {
                if rel.key_of(i) == rel.key_of(j) {
                    assert_eq!(part_of[i], part_of[j]);
                }
            }
        }
    }

    #[test]
    fn grace_result_is_invariant_to_partition_count() {
        let mut rng = StdRng::seed_from_u64(10);
        let r = random_relation(&mut rng, 200, 3, 4);
        let s = random_relation(&mut rng, 250, 3, 4);
        for algo in [JoinAlgorithm::GraceBaseline, JoinAlgorithm::GraceSignature] {
            let mut reference = None;
            for partitions in [1, 2, 3, 8, 32] {
                let mut spec = JoinSpec::for_algorithm(algo);
                spec.partitions = partitions;
                let got = pair_set(&execute_join(&r, &s, &spec).unwrap());
                match &reference {
                    None => reference = Some(got),
                    Some(want) => assert_eq!(&got, want, "{algo} at {partitions} partitions"),
                }
            }
        }
    }

    #[test]
    fn grace_single_partition_equals_simple() {
        let mut rng = StdRng::seed_from_u64(11);
        let r = random_relation(&mut rng, 100, 3, 4);
        let s = random_relation(&mut rng, 150, 3, 4);
        let simple = execute_join(&r, &s, &JoinSpec::for_algorithm(JoinAlgorithm::HashSignature))
            .unwrap();
        let mut spec = JoinSpec::for_algorithm(JoinAlgorithm::GraceSignature);
        spec.partitions = 1;
        let grace = execute_join(&r, &s, &spec).unwrap();
        assert_eq!(pair_set(&grace), pair_set(&simple));
    }

    #[test]
    fn disjoint_keys_join_empty() {
        let r = keyed(&["aa", "bb"]);
        let s = keyed(&["cc", "dd", "ee"]);
        for spec in all_algorithms() {
            let result = execute_join(&r, &s, &spec).unwrap();
            assert!(result.pairs.is_empty(), "{}", spec.algorithm);
        }
    }

    #[test]
    fn signature_table_is_smaller_above_the_break_even_length() {
        for len in [9usize, 16, 32, 100] {
            let keys: Vec<String> = (0..50).map(|i| format!("{i:0>len$}")).collect();
            let r = keyed(&keys.iter().map(|s| s.as_str()).collect::<Vec<_>>());
            let sig = build(&r, &JoinSpec::for_algorithm(JoinAlgorithm::HashSignature)).unwrap();
            let base = build(&r, &JoinSpec::for_algorithm(JoinAlgorithm::HashBaseline)).unwrap();
            assert!(
                sig.peak_table_bytes() < base.peak_table_bytes(),
                "len {len}"
            );
        }
    }
}

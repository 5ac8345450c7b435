//! Seeded synthetic generator for join benchmark inputs.
//!
//! Produces a pair of relations whose join keys are planted so the result
//! cardinality hits `selectivity · card_r · card_s` exactly whenever the
//! row budgets allow it, and records the number it actually planted. Key
//! values are printable ASCII and the planted, R-filler and S-filler key
//! sets are mutually disjoint, so no match exists that was not planted.

use std::collections::HashSet;

use chrono::{Days, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::relation::{ColumnType, Relation, Schema, Value};

const PRINTABLE_FIRST: u8 = 0x21;
const PRINTABLE_COUNT: u64 = 94;

/// Generation parameters. `card_r` must not exceed `card_s`; the join
/// engine builds on the smaller input and the generator keeps the same
/// convention.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub card_r: u64,
    pub card_s: u64,
    pub attr_len: usize,
    pub selectivity: f64,
    pub row_bytes: usize,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            card_r: 10_000,
            card_s: 20_000,
            attr_len: 10,
            selectivity: 1.5 / 20_000.0,
            row_bytes: 128,
            seed: 42,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatagenError {
    #[error("card_r ({card_r}) must not exceed card_s ({card_s})")]
    CardinalityOrder { card_r: u64, card_s: u64 },
    #[error("attr_len must be at least 1")]
    BadAttrLen,
    #[error("selectivity {0} outside [0, 1]")]
    BadSelectivity(f64),
}

impl GenSpec {
    pub fn validate(&self) -> Result<(), DatagenError> {
        if self.card_r > self.card_s {
            return Err(DatagenError::CardinalityOrder {
                card_r: self.card_r,
                card_s: self.card_s,
            });
        }
        if self.attr_len == 0 {
            return Err(DatagenError::BadAttrLen);
        }
        if !(0.0..=1.0).contains(&self.selectivity) || self.selectivity.is_nan() {
            return Err(DatagenError::BadSelectivity(self.selectivity));
        }
        Ok(())
    }

    /// Result rows the selectivity asks for, rounded to the nearest count.
    pub fn target_pairs(&self) -> u64 {
        (self.selectivity * self.card_r as f64 * self.card_s as f64).round() as u64
    }
}

/// A generated input pair plus the exact number of key matches planted.
#[derive(Debug, Clone)]
pub struct GeneratedPair {
    pub r: Relation,
    pub s: Relation,
    pub planted_pairs: u64,
}

/// Per-value multiplicities: value i sits on `r_mult` rows of R and
/// `s_mult` rows of S, contributing `r_mult · s_mult` result pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
struct PlantPlan {
    values: Vec<(u64, u64)>,
    planted_pairs: u64,
}

/// Chooses multiplicities summing to `target` pairs. Every main-block
/// value gets the same R-side multiplicity `a`, preferring the smallest
/// divisor of `target` at or above `ceil(target / card_s)` so the block
/// covers the target with no remainder; the S side then spreads
/// `target / a` rows as evenly as possible. A non-zero remainder is
/// planted greedily as extra low-multiplicity values while the row
/// budgets last. Some targets cannot be tiled into the budgets at all
/// (they need more rows than exist), so the plan can fall short; the
/// returned count is always exact.
fn plan_planting(card_r: u64, card_s: u64, target: u64, max_values: u64) -> PlantPlan {
    if target == 0 || card_r == 0 || card_s == 0 || max_values == 0 {
        return PlantPlan {
            values: Vec::new(),
            planted_pairs: 0,
        };
    }
    let a_min = target.div_ceil(card_s).min(card_r);
    let a = (a_min..=card_r.min(target).min(a_min + 100_000))
        .find(|a| target.is_multiple_of(*a))
        .unwrap_or(a_min);
    let q = (target / a).min(card_s);
    let v = (card_r / a).min(q).min(max_values);
    if v == 0 {
        return PlantPlan {
            values: Vec::new(),
            planted_pairs: 0,
        };
    }
    let base = q / v;
    let extra = q % v;
    let mut values: Vec<(u64, u64)> = (0..v)
        .map(|i| (a, if i < extra { base + 1 } else { base }))
        .collect();
    let mut planted = a * q;
    let mut rem = target - planted;
    let mut r_budget = card_r - v * a;
    let mut s_budget = card_s - q;
    while rem > 0 && r_budget > 0 && s_budget > 0 && (values.len() as u64) < max_values {
        let take = rem.min(r_budget);
        values.push((take, 1));
        planted += take;
        rem -= take;
        r_budget -= take;
        s_budget -= 1;
    }
    PlantPlan {
        values,
        planted_pairs: planted,
    }
}

/// Disjoint key pools handed out per class. In a sparse domain every key
/// is globally unique; when the domain is too small for that the whole
/// domain is dealt out between the classes and filler keys repeat within
/// their own class, which keeps cross-class matches impossible.
struct KeyPools {
    planted: Vec<Vec<u8>>,
    r_filler: Vec<Vec<u8>>,
    s_filler: Vec<Vec<u8>>,
}

fn domain_size(attr_len: usize) -> u64 {
    let mut size: u64 = 1;
    for _ in 0..attr_len {
        size = match size.checked_mul(PRINTABLE_COUNT) {
            Some(s) => s,
            None => return u64::MAX,
        };
    }
    size
}

fn random_key(rng: &mut ChaCha8Rng, attr_len: usize) -> Vec<u8> {
    (0..attr_len)
        .map(|_| PRINTABLE_FIRST + rng.random_range(0..PRINTABLE_COUNT) as u8)
        .collect()
}

/// All `94^attr_len` keys in lexicographic order. Only called for domains
/// small enough to shuffle in memory.
fn enumerate_domain(attr_len: usize) -> Vec<Vec<u8>> {
    let size = domain_size(attr_len) as usize;
    let mut out = Vec::with_capacity(size);
    let mut odometer = vec![0u8; attr_len];
    loop {
        out.push(
            odometer
                .iter()
                .map(|&d| PRINTABLE_FIRST + d)
                .collect::<Vec<u8>>(),
        );
        let mut pos = attr_len;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            odometer[pos] += 1;
            if (odometer[pos] as u64) < PRINTABLE_COUNT {
                break;
            }
            odometer[pos] = 0;
        }
    }
}

fn draw_key_pools(
    rng: &mut ChaCha8Rng,
    attr_len: usize,
    planted_n: usize,
    r_filler_n: usize,
    s_filler_n: usize,
) -> KeyPools {
    let needed = (planted_n + r_filler_n + s_filler_n) as u64;
    let domain = domain_size(attr_len);
    if needed.saturating_mul(2) > domain {
        // Dense demand: shuffle the whole domain and deal it out. Planted
        // values first, then the rest split between the filler classes in
        // proportion to how many rows each must cover.
        let mut all = enumerate_domain(attr_len);
        all.shuffle(rng);
        let planted: Vec<_> = all.drain(..planted_n).collect();
        let rest = all.len();
        let r_share = if r_filler_n + s_filler_n == 0 {
            0
        } else if s_filler_n == 0 {
            rest
        } else if r_filler_n == 0 {
            0
        } else {
            (rest * r_filler_n / (r_filler_n + s_filler_n)).clamp(1, rest - 1)
        };
        let s_pool: Vec<_> = all.split_off(r_share);
        KeyPools {
            planted,
            r_filler: all,
            s_filler: s_pool,
        }
    } else {
        let mut seen: HashSet<Vec<u8>> = HashSet::with_capacity(needed as usize);
        let mut draw_distinct = |rng: &mut ChaCha8Rng, n: usize| {
            let mut pool = Vec::with_capacity(n);
            while pool.len() < n {
                let key = random_key(rng, attr_len);
                if seen.insert(key.clone()) {
                    pool.push(key);
                }
            }
            pool
        };
        KeyPools {
            planted: draw_distinct(rng, planted_n),
            r_filler: draw_distinct(rng, r_filler_n),
            s_filler: draw_distinct(rng, s_filler_n),
        }
    }
}

fn output_schema() -> Schema {
    Schema::new(
        vec![
            ("id".to_string(), ColumnType::Integer),
            ("key".to_string(), ColumnType::String),
            ("tag".to_string(), ColumnType::Character),
            ("since".to_string(), ColumnType::Date),
            ("payload".to_string(), ColumnType::String),
        ],
        "key",
    )
    .expect("generator schema is well formed")
}

fn build_relation(
    rng: &mut ChaCha8Rng,
    mut keys: Vec<Vec<u8>>,
    payload_len: usize,
) -> Relation {
    keys.shuffle(rng);
    let epoch = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let rows = keys
        .into_iter()
        .enumerate()
        .map(|(i, key)| {
            let tag = (PRINTABLE_FIRST + rng.random_range(0..PRINTABLE_COUNT) as u8) as char;
            let since = epoch + Days::new(rng.random_range(0..9131));
            let payload: String = (0..payload_len)
                .map(|_| (PRINTABLE_FIRST + rng.random_range(0..PRINTABLE_COUNT) as u8) as char)
                .collect();
            vec![
                Value::Int(i as i64 + 1),
                Value::Str(String::from_utf8(key).expect("printable ASCII")),
                Value::Char(tag),
                Value::Date(since),
                Value::Str(payload),
            ]
        })
        .collect();
    Relation::new(output_schema(), rows).expect("rows built to schema")
}

/// Generates the input pair. Deterministic in `spec`, including the seed.
pub fn generate_pair(spec: &GenSpec) -> Result<GeneratedPair, DatagenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let domain = domain_size(spec.attr_len);
    let max_values = domain.saturating_sub(2).max(1);
    let plan = plan_planting(spec.card_r, spec.card_s, spec.target_pairs(), max_values);

    let planted_r: u64 = plan.values.iter().map(|(a, _)| a).sum();
    let planted_s: u64 = plan.values.iter().map(|(_, b)| b).sum();
    let r_filler_rows = (spec.card_r - planted_r) as usize;
    let s_filler_rows = (spec.card_s - planted_s) as usize;

    let pools = draw_key_pools(
        &mut rng,
        spec.attr_len,
        plan.values.len(),
        r_filler_rows.min(domain as usize),
        s_filler_rows.min(domain as usize),
    );

    let mut r_keys: Vec<Vec<u8>> = Vec::with_capacity(spec.card_r as usize);
    let mut s_keys: Vec<Vec<u8>> = Vec::with_capacity(spec.card_s as usize);
    for (value, (a, b)) in pools.planted.iter().zip(&plan.values) {
        for _ in 0..*a {
            r_keys.push(value.clone());
        }
        for _ in 0..*b {
            s_keys.push(value.clone());
        }
    }
    for i in 0..r_filler_rows {
        r_keys.push(pools.r_filler[i % pools.r_filler.len().max(1)].clone());
    }
    for i in 0..s_filler_rows {
        s_keys.push(pools.s_filler[i % pools.s_filler.len().max(1)].clone());
    }

    // Rough text overhead around the payload: id, tag, date, separators.
    let payload_len = spec
        .row_bytes
        .saturating_sub(spec.attr_len + 22)
        .max(4);

    let r = build_relation(&mut rng, r_keys, payload_len);
    let s = build_relation(&mut rng, s_keys, payload_len);
    Ok(GeneratedPair {
        r,
        s,
        planted_pairs: plan.planted_pairs,
    })
}

//! Analytic cost model for the signature hash join.
//!
//! The model breaks a join into six charges: memory pages needed, disk
//! I/Os, bucket partitioning, build-side hashing, probe-side hashing,
//! and result output. Each charge scales abstract unit costs by tuple
//! counts or page counts. The charges carry mixed units (pages, I/O
//! counts, weighted per-tuple costs); the total sums them anyway, as
//! published, so the breakdown is always reported alongside the total
//! for callers who want to weight components themselves.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CostError {
    #[error("line {line}: expected key=value, got {text:?}")]
    BadLine { line: usize, text: String },
    #[error("line {line}: unknown parameter {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: parameter {key} has unusable value {value:?}: {message}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        message: String,
    },
    #[error("line {line}: parameter {key} given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
}

/// Per-tuple and per-event unit costs, all non-negative and in whatever
/// unit the caller chooses (the default profile uses milliseconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitCosts {
    /// Reading a build-side tuple during partitioning.
    pub disk_input_r: f64,
    /// Hashing a tuple to its bucket.
    pub hash_bucket: f64,
    /// Writing a partitioned tuple back out.
    pub disk_output_buckets: f64,
    /// Reading a bucket's tuple back for table build.
    pub read_bucket: f64,
    /// Computing a build-side signature.
    pub signature_generating: f64,
    /// Inserting a signature into the hash table.
    pub build_sign_cost: f64,
    /// One-time cost of writing the signature table out (per event).
    pub write_hsign_to_disk: f64,
    /// Reading a probe-side tuple.
    pub disk_input_s: f64,
    /// Computing a probe-side signature.
    pub signature_calculation: f64,
    /// Probing the table with a signature.
    pub probe_sign_cost: f64,
    /// Reading matched tuples for output (per event).
    pub disk_input_tuples_result: f64,
    /// Materializing the result (per event).
    pub materialize_t: f64,
}

impl UnitCosts {
    pub const FIELD_NAMES: [&'static str; 12] = [
        "disk_input_r",
        "hash_bucket",
        "disk_output_buckets",
        "read_bucket",
        "signature_generating",
        "build_sign_cost",
        "write_hsign_to_disk",
        "disk_input_s",
        "signature_calculation",
        "probe_sign_cost",
        "disk_input_tuples_result",
        "materialize_t",
    ];

    pub fn zero() -> Self {
        Self {
            disk_input_r: 0.0,
            hash_bucket: 0.0,
            disk_output_buckets: 0.0,
            read_bucket: 0.0,
            signature_generating: 0.0,
            build_sign_cost: 0.0,
            write_hsign_to_disk: 0.0,
            disk_input_s: 0.0,
            signature_calculation: 0.0,
            probe_sign_cost: 0.0,
            disk_input_tuples_result: 0.0,
            materialize_t: 0.0,
        }
    }

    /// Reads a unit cost by its config-file key.
    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "disk_input_r" => self.disk_input_r,
            "hash_bucket" => self.hash_bucket,
            "disk_output_buckets" => self.disk_output_buckets,
            "read_bucket" => self.read_bucket,
            "signature_generating" => self.signature_generating,
            "build_sign_cost" => self.build_sign_cost,
            "write_hsign_to_disk" => self.write_hsign_to_disk,
            "disk_input_s" => self.disk_input_s,
            "signature_calculation" => self.signature_calculation,
            "probe_sign_cost" => self.probe_sign_cost,
            "disk_input_tuples_result" => self.disk_input_tuples_result,
            "materialize_t" => self.materialize_t,
            _ => return None,
        })
    }

    /// Writes a unit cost by its config-file key; false when the key
    /// names no field.
    pub fn set(&mut self, key: &str, v: f64) -> bool {
        let slot = match key {
            "disk_input_r" => &mut self.disk_input_r,
            "hash_bucket" => &mut self.hash_bucket,
            "disk_output_buckets" => &mut self.disk_output_buckets,
            "read_bucket" => &mut self.read_bucket,
            "signature_generating" => &mut self.signature_generating,
            "build_sign_cost" => &mut self.build_sign_cost,
            "write_hsign_to_disk" => &mut self.write_hsign_to_disk,
            "disk_input_s" => &mut self.disk_input_s,
            "signature_calculation" => &mut self.signature_calculation,
            "probe_sign_cost" => &mut self.probe_sign_cost,
            "disk_input_tuples_result" => &mut self.disk_input_tuples_result,
            "materialize_t" => &mut self.materialize_t,
            _ => return false,
        };
        *slot = v;
        true
    }
}

impl Default for UnitCosts {
    /// Nominal profile in milliseconds: a 4KB-page device at 0.1 ms per
    /// page access with ~32 tuples per page (0.003 ms per tuple touched
    /// on disk), signature computation from the measured ~25 ms per MB
    /// scaled to a 100-byte key (0.0025 ms), and sub-microsecond
    /// in-memory hash/probe steps.
    fn default() -> Self {
        Self {
            disk_input_r: 0.003,
            hash_bucket: 0.0002,
            disk_output_buckets: 0.003,
            read_bucket: 0.003,
            signature_generating: 0.0025,
            build_sign_cost: 0.0002,
            write_hsign_to_disk: 0.1,
            disk_input_s: 0.003,
            signature_calculation: 0.0025,
            probe_sign_cost: 0.0002,
            disk_input_tuples_result: 0.1,
            materialize_t: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    /// Blocks (pages) per relation.
    pub b: u64,
    /// Memory pages available.
    pub k: u64,
    /// Pages reserved for the first bucket's in-memory table.
    pub r_area: u64,
    /// Build-side tuple count.
    pub m: u64,
    /// Probe-side tuple count.
    pub n: u64,
    /// Partitioning passes over the inputs.
    pub loop_factor: u64,
    pub unit: UnitCosts,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            b: 100,
            k: 10,
            r_area: 10,
            m: 10_000,
            n: 20_000,
            loop_factor: 1,
            unit: UnitCosts::default(),
        }
    }
}

const INT_KEYS: [&str; 6] = ["b", "k", "r_area", "m", "n", "loop_factor"];

impl CostParams {
    pub fn validate(&self) -> Result<(), CostError> {
        if self.b < 1 {
            return Err(CostError::Invalid {
                field: "b",
                message: "must be at least 1 page".into(),
            });
        }
        if self.k < 1 {
            return Err(CostError::Invalid {
                field: "k",
                message: "must be at least 1 page".into(),
            });
        }
        if self.r_area > self.b {
            return Err(CostError::Invalid {
                field: "r_area",
                message: format!("{} exceeds b = {}", self.r_area, self.b),
            });
        }
        if self.loop_factor < 1 {
            return Err(CostError::Invalid {
                field: "loop_factor",
                message: "must be at least 1 pass".into(),
            });
        }
        for key in UnitCosts::FIELD_NAMES {
            let v = self.unit.get(key).expect("listed field");
            if !v.is_finite() || v < 0.0 {
                return Err(CostError::Invalid {
                    field: "unit cost",
                    message: format!("{key} = {v} is not a finite non-negative number"),
                });
            }
        }
        Ok(())
    }

    /// Parses `key=value` lines over the default profile. `#` starts a
    /// comment; blank lines are skipped; every key is settable and none
    /// may repeat.
    pub fn from_config_str(text: &str) -> Result<Self, CostError> {
        let mut params = Self::default();
        let mut seen: Vec<String> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(CostError::BadLine {
                    line,
                    text: raw.trim().to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|s| s == key) {
                return Err(CostError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            seen.push(key.to_string());

            if INT_KEYS.contains(&key) {
                let parsed: u64 = value.parse().map_err(|e| CostError::BadValue {
                    line,
                    key: key.to_string(),
                    value: value.to_string(),
                    message: format!("{e}"),
                })?;
                match key {
                    "b" => params.b = parsed,
                    "k" => params.k = parsed,
                    "r_area" => params.r_area = parsed,
                    "m" => params.m = parsed,
                    "n" => params.n = parsed,
                    _ => params.loop_factor = parsed,
                }
            } else if UnitCosts::FIELD_NAMES.contains(&key) {
                let parsed: f64 = value.parse().map_err(|e| CostError::BadValue {
                    line,
                    key: key.to_string(),
                    value: value.to_string(),
                    message: format!("{e}"),
                })?;
                if !parsed.is_finite() || parsed < 0.0 {
                    return Err(CostError::BadValue {
                        line,
                        key: key.to_string(),
                        value: value.to_string(),
                        message: "unit costs must be finite and non-negative".into(),
                    });
                }
                params.unit.set(key, parsed);
            } else {
                return Err(CostError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
        }
        params.validate()?;
        Ok(params)
    }

    /// Renders the params as a config that round-trips through
    /// [`CostParams::from_config_str`].
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for (key, v) in [
            ("b", self.b),
            ("k", self.k),
            ("r_area", self.r_area),
            ("m", self.m),
            ("n", self.n),
            ("loop_factor", self.loop_factor),
        ] {
            out.push_str(&format!("{key}={v}\n"));
        }
        for key in UnitCosts::FIELD_NAMES {
            out.push_str(&format!("{key}={}\n", self.unit.get(key).expect("listed field")));
        }
        out
    }

    /// Evaluates the full breakdown. Callers own the precondition: the
    /// params must pass [`CostParams::validate`].
    pub fn evaluate(&self) -> CostBreakdown {
        self.validate().expect("cost parameters must be valid");
        let u = &self.unit;
        let memory_needed_pages = memory_needed(self.b, self.k);
        let ios = disk_ios(self.b, self.r_area);
        let passes = (self.m as f64 + self.n as f64) * self.loop_factor as f64;
        let build_buckets = passes * (u.disk_input_r + u.hash_bucket + u.disk_output_buckets);
        let build_hash = self.m as f64
            * (u.read_bucket + u.signature_generating + u.build_sign_cost)
            + u.write_hsign_to_disk;
        let probe_hash =
            self.n as f64 * (u.disk_input_s + u.signature_calculation + u.probe_sign_cost);
        let output_result = u.disk_input_tuples_result + u.materialize_t;
        let total = memory_needed_pages as f64
            + ios as f64
            + build_buckets
            + build_hash
            + probe_hash
            + output_result;
        CostBreakdown {
            memory_needed_pages,
            disk_ios: ios,
            build_buckets,
            build_hash,
            probe_hash,
            output_result,
            grace_temp_ios: 6 * self.b,
            total,
        }
    }
}

/// Pages needed to keep partitioning viable: each of k partitions must
/// fit a ceil(b/k)-page run, and the partitioning itself needs k output
/// pages, whichever is larger. Pages are indivisible, so the division
/// rounds up.
pub fn memory_needed(b: u64, k: u64) -> u64 {
    assert!(b >= 1 && k >= 1, "page counts start at 1");
    b.div_ceil(k).max(k)
}

/// Disk accesses for the partitioned join: every page is read and
/// written once while partitioning (2b), and every page not resident in
/// the reserved area makes two more round trips (4(b − r_area)). With
/// nothing reserved this is the 6-accesses-per-page worst case.
pub fn disk_ios(b: u64, r_area: u64) -> u64 {
    assert!(r_area <= b, "reserved area cannot exceed the relation");
    2 * b + 4 * (b - r_area)
}

/// One evaluated cost breakdown. `total` sums the six charge components;
/// `grace_temp_ios` is the separate worst-case I/O count (6b) for fully
/// spilled partitioning and is not part of `total`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    pub memory_needed_pages: u64,
    pub disk_ios: u64,
    pub build_buckets: f64,
    pub build_hash: f64,
    pub probe_hash: f64,
    pub output_result: f64,
    pub grace_temp_ios: u64,
    pub total: f64,
}

impl CostBreakdown {
    /// (component, value) rows in reporting order, total last.
    pub fn rows(&self) -> [(&'static str, f64); 8] {
        [
            ("memory_needed_pages", self.memory_needed_pages as f64),
            ("disk_ios", self.disk_ios as f64),
            ("build_buckets", self.build_buckets),
            ("build_hash", self.build_hash),
            ("probe_hash", self.probe_hash),
            ("output_result", self.output_result),
            ("grace_temp_ios", self.grace_temp_ios as f64),
            ("total", self.total),
        ]
    }

    /// CSV with a `component,value` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("component,value\n");
        for (name, value) in self.rows() {
            out.push_str(&format!("{name},{value}\n"));
        }
        out
    }
}

impl fmt::Display for CostBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "memory needed   {:>14} pages", self.memory_needed_pages)?;
        writeln!(f, "disk I/Os       {:>14}", self.disk_ios)?;
        writeln!(f, "build buckets   {:>14.6}", self.build_buckets)?;
        writeln!(f, "build hash      {:>14.6}", self.build_hash)?;
        writeln!(f, "probe hash      {:>14.6}", self.probe_hash)?;
        writeln!(f, "output result   {:>14.6}", self.output_result)?;
        writeln!(f, "grace temp I/Os {:>14} (not in total)", self.grace_temp_ios)?;
        write!(f, "total           {:>14.6}", self.total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn unit_params(m: u64, n: u64) -> CostParams {
        let mut unit = UnitCosts::zero();
        for key in UnitCosts::FIELD_NAMES {
            unit.set(key, 1.0);
        }
        unit.write_hsign_to_disk = 0.0;
        unit.disk_input_tuples_result = 0.0;
        unit.materialize_t = 0.0;
        CostParams {
            b: 1,
            k: 1,
            r_area: 1,
            m,
            n,
            loop_factor: 1,
            unit,
        }
    }

    #[test]
    fn memory_needed_matches_frozen_points() {
        assert_eq!(memory_needed(100, 10), 10);
        assert_eq!(memory_needed(1, 1), 1);
        assert_eq!(memory_needed(1000, 10), 100);
        // Ceiling, not floor: 101 pages over 10 partitions needs 11.
        assert_eq!(memory_needed(101, 10), 11);
    }

    #[test]
    fn disk_ios_matches_frozen_points() {
        assert_eq!(disk_ios(100, 20), 520);
        assert_eq!(disk_ios(7, 7), 14);
        for b in [1u64, 3, 10, 1000] {
            assert_eq!(disk_ios(b, 0), 6 * b);
        }
    }

    #[test]
    fn composite_hand_evaluation() {
        let breakdown = unit_params(10, 20).evaluate();
        assert_eq!(breakdown.build_buckets, 90.0);
        assert_eq!(breakdown.build_hash, 30.0);
        assert_eq!(breakdown.probe_hash, 60.0);
        assert_eq!(breakdown.output_result, 0.0);
        assert_eq!(breakdown.disk_ios, 2);
        assert_eq!(breakdown.memory_needed_pages, 1);
        assert_eq!(breakdown.total, 183.0);
        assert_eq!(breakdown.grace_temp_ios, 6);
    }

    #[test]
    fn zero_unit_costs_leave_only_page_terms() {
        let params = CostParams {
            b: 9,
            k: 3,
            r_area: 9,
            m: 100,
            n: 200,
            loop_factor: 2,
            unit: UnitCosts::zero(),
        };
        let breakdown = params.evaluate();
        assert_eq!(breakdown.total, 3.0 + 18.0);
        assert_eq!(breakdown.memory_needed_pages, 3);
        assert_eq!(breakdown.disk_ios, 18);
        assert_eq!(breakdown.build_buckets, 0.0);
    }

    #[test]
    fn doubling_n_doubles_probe_hash_only() {
        let one = unit_params(10, 20).evaluate();
        let two = unit_params(10, 40).evaluate();
        assert_eq!(two.probe_hash, 2.0 * one.probe_hash);
        assert_eq!(two.build_hash, one.build_hash);
        assert_eq!(two.output_result, one.output_result);
    }

    fn random_params(rng: &mut StdRng) -> CostParams {
        let b = rng.random_range(1..500u64);
        let mut unit = UnitCosts::zero();
        for key in UnitCosts::FIELD_NAMES {
            unit.set(key, rng.random_range(0.0..10.0f64));
        }
        CostParams {
            b,
            k: rng.random_range(1..50),
            r_area: rng.random_range(0..=b),
            m: rng.random_range(0..10_000),
            n: rng.random_range(0..10_000),
            loop_factor: rng.random_range(1..5),
            unit,
        }
    }

    #[test]
    fn evaluation_is_linear_in_unit_costs() {
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..50 {
            let mut a = random_params(&mut rng);
            let mut bp = a;
            let mut sum = a;
            for key in UnitCosts::FIELD_NAMES {
                let x = rng.random_range(0.0..5.0f64);
                let y = rng.random_range(0.0..5.0f64);
                a.unit.set(key, x);
                bp.unit.set(key, y);
                sum.unit.set(key, x + y);
            }
            let (ra, rb, rs) = (a.evaluate(), bp.evaluate(), sum.evaluate());
            let page_terms = ra.memory_needed_pages as f64 + ra.disk_ios as f64;
            for ((na, va), ((_, vb), (_, vs))) in ra
                .rows()
                .iter()
                .zip(rb.rows().iter().zip(rs.rows().iter()))
            {
                let want = match *na {
                    "memory_needed_pages" | "disk_ios" | "grace_temp_ios" => *vb,
                    // Page terms appear once, not twice, in the sum.
                    "total" => va + vb - page_terms,
                    _ => va + vb,
                };
                assert!(
                    (vs - want).abs() <= 1e-9 * want.abs().max(1.0),
                    "{na}: {vs} vs {want}"
                );
            }
        }
    }

    #[test]
    fn components_monotone_in_counts() {
        let mut rng = StdRng::seed_from_u64(32);
        for _ in 0..50 {
            let p = random_params(&mut rng);
            let base = p.evaluate();

            let mut larger = p;
            larger.m += 17;
            larger.n += 23;
            larger.loop_factor += 1;
            let grown = larger.evaluate();
            assert!(grown.build_buckets >= base.build_buckets);
            assert!(grown.build_hash >= base.build_hash);
            assert!(grown.probe_hash >= base.probe_hash);

            if p.r_area < p.b {
                let mut reserved = p;
                reserved.r_area += 1;
                assert!(reserved.evaluate().disk_ios < base.disk_ios);
            }
        }
    }

    #[test]
    fn config_round_trip_and_errors() {
        let params = CostParams {
            b: 42,
            k: 7,
            r_area: 5,
            m: 11,
            n: 13,
            loop_factor: 2,
            unit: UnitCosts::default(),
        };
        let text = params.to_config_string();
        assert_eq!(CostParams::from_config_str(&text).unwrap(), params);

        let defaults = CostParams::from_config_str("# nothing overridden\n").unwrap();
        assert_eq!(defaults, CostParams::default());

        assert_eq!(
            CostParams::from_config_str("b=10\nwhat=3\n"),
            Err(CostError::UnknownKey {
                line: 2,
                key: "what".into()
            })
        );
        assert_eq!(
            CostParams::from_config_str("\n\njust words\n"),
            Err(CostError::BadLine {
                line: 3,
                text: "just words".into()
            })
        );
        assert_eq!(
            CostParams::from_config_str("k=3\nk=4\n"),
            Err(CostError::DuplicateKey {
                line: 2,
                key: "k".into()
            })
        );
        assert!(matches!(
            CostParams::from_config_str("b=ten\n"),
            Err(CostError::BadValue { line: 1, .. })
        ));
        assert!(matches!(
            CostParams::from_config_str("hash_bucket=-1\n"),
            Err(CostError::BadValue { line: 1, .. })
        ));
        // Structurally fine, semantically invalid.
        assert!(matches!(
            CostParams::from_config_str("b=5\nr_area=9\n"),
            Err(CostError::Invalid { field: "r_area", .. })
        ));
    }

    #[test]
    fn csv_and_display_render_every_component() {
        let breakdown = unit_params(10, 20).evaluate();
        let csv = breakdown.to_csv();
        assert!(csv.starts_with("component,value\n"));
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.contains("total,183\n"));
        let text = format!("{breakdown}");
        assert!(text.contains("probe hash"));
        assert!(text.contains("183"));
    }
}

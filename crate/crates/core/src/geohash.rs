//! Base-32 geohash encoding and bounding-box search as single-field ranges.
//!
//! Bits alternate longitude/latitude starting with longitude; each character
//! carries 5 bits. Equal-length hashes sort lexicographically in Z-order, so a
//! run of adjacent cells is one `GE first, LT successor(last)` range on the
//! `geohash` field, which the document engine can answer with a single
//! inequality field.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CompareOp, Condition, FieldValue, QuerySpec};

pub const ALPHABET: &[u8; 32] = b"0123456789bcdefghjkmnpqrstuvwxyz";
pub const MAX_PRECISION: usize = 12;
pub const DEFAULT_PRECISION: usize = 6;
pub const DEFAULT_COVER_LIMIT: usize = 1024;
/// Document field holding a record's precision-12 hash.
pub const FIELD: &str = "geohash";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeohashError {
    #[error("coordinate out of bounds: latitude {lat}, longitude {long}")]
    OutOfBounds { lat: f64, long: f64 },
    #[error("precision must be 1..=12, got {0}")]
    BadPrecision(usize),
    #[error("invalid geohash character {0:?}")]
    BadCharacter(char),
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("cover needs {needed} prefixes at this precision (limit {limit})")]
    PrecisionTooFine { needed: u64, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub long_min: f64,
    pub long_max: f64,
}

impl GeoBox {
    pub const WORLD: GeoBox = GeoBox {
        lat_min: -90.0,
        lat_max: 90.0,
        long_min: -180.0,
        long_max: 180.0,
    };

    pub fn new(lat_min: f64, lat_max: f64, long_min: f64, long_max: f64) -> Result<Self, GeohashError> {
        let b = GeoBox {
            lat_min,
            lat_max,
            long_min,
            long_max,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), GeohashError> {
        let finite = [self.lat_min, self.lat_max, self.long_min, self.long_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.lat_min > self.lat_max || self.long_min > self.long_max {
            return Err(GeohashError::InvalidBox(format!("{self:?}")));
        }
        if self.lat_min < -90.0 || self.lat_max > 90.0 || self.long_min < -180.0 || self.long_max > 180.0 {
            return Err(GeohashError::InvalidBox(format!("{self:?} exceeds world bounds")));
        }
        Ok(())
    }

    pub fn contains(&self, lat: f64, long: f64) -> bool {
        (self.lat_min..=self.lat_max).contains(&lat) && (self.long_min..=self.long_max).contains(&long)
    }

    pub fn contains_box(&self, other: &GeoBox) -> bool {
        self.lat_min <= other.lat_min
            && other.lat_max <= self.lat_max
            && self.long_min <= other.long_min
            && other.long_max <= self.long_max
    }

    /// Latitude/longitude conditions selecting exactly this box.
    pub fn conditions(&self) -> Vec<Condition> {
        let num = |v: f64| FieldValue::Number(v);
        vec![
            Condition::new("latitude", CompareOp::Ge, num(self.lat_min)),
            Condition::new("latitude", CompareOp::Le, num(self.lat_max)),
            Condition::new("longitude", CompareOp::Ge, num(self.long_min)),
            Condition::new("longitude", CompareOp::Le, num(self.long_max)),
        ]
    }
}

fn check_precision(precision: usize) -> Result<(), GeohashError> {
    if (1..=MAX_PRECISION).contains(&precision) {
        Ok(())
    } else {
        Err(GeohashError::BadPrecision(precision))
    }
}

fn bit_split(precision: usize) -> (u32, u32) {
    let total = 5 * precision as u32;
    (total.div_ceil(2), total / 2)
}

/// Cell index along one axis: the number of the `2^bits` equal slices of
/// `[lo, hi)` containing `v`, with `hi` itself mapped to the last slice.
fn axis_cell(v: f64, lo: f64, hi: f64, bits: u32) -> u64 {
    let cells = 1u64 << bits;
    let mut range = (lo, hi);
    let mut idx = 0u64;
    for _ in 0..bits {
        let mid = (range.0 + range.1) / 2.0;
        idx <<= 1;
        if v >= mid {
            idx |= 1;
            range.0 = mid;
        } else {
            range.1 = mid;
        }
    }
    idx.min(cells - 1)
}

/// Interleave longitude and latitude cell indices into a hash string.
fn interleave(long_idx: u64, lat_idx: u64, precision: usize) -> String {
    let (long_bits, lat_bits) = bit_split(precision);
    let (mut li, mut ai) = (long_bits, lat_bits);
    let mut out = String::with_capacity(precision);
    let mut ch = 0u8;
    for bit in 0..5 * precision {
        let b = if bit % 2 == 0 {
            li -= 1;
            (long_idx >> li) & 1
        } else {
            ai -= 1;
            (lat_idx >> ai) & 1
        };
        ch = (ch << 1) | b as u8;
        if bit % 5 == 4 {
            out.push(ALPHABET[ch as usize] as char);
            ch = 0;
        }
    }
    out
}

pub fn encode(lat: f64, long: f64, precision: usize) -> Result<String, GeohashError> {
    check_precision(precision)?;
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&long) {
        return Err(GeohashError::OutOfBounds { lat, long });
    }
    let (long_bits, lat_bits) = bit_split(precision);
    Ok(interleave(
        axis_cell(long, -180.0, 180.0, long_bits),
        axis_cell(lat, -90.0, 90.0, lat_bits),
        precision,
    ))
}

fn char_value(c: char) -> Result<u8, GeohashError> {
    ALPHABET
        .iter()
        .position(|&a| a as char == c)
        .map(|p| p as u8)
        .ok_or(GeohashError::BadCharacter(c))
}

/// The exact cell a hash denotes. The empty hash is the whole world.
pub fn decode(hash: &str) -> Result<GeoBox, GeohashError> {
    let mut b = GeoBox::WORLD;
    let mut even = true;
    for c in hash.chars() {
        let v = char_value(c)?;
        for shift in (0..5).rev() {
            let bit = (v >> shift) & 1 == 1;
            let (lo, hi) = if even {
                (&mut b.long_min, &mut b.long_max)
            } else {
                (&mut b.lat_min, &mut b.lat_max)
            };
            let mid = (*lo + *hi) / 2.0;
            if bit {
                *lo = mid;
            } else {
                *hi = mid;
            }
            even = !even;
        }
    }
    Ok(b)
}

/// Every precision-length cell that can hold a point of `area`, in
/// lexicographic (Z-order) order.
///
/// Cells are half-open `[min, max)` like `encode`, except at the world's
/// upper edges.
pub fn cover(area: &GeoBox, precision: usize, limit: usize) -> Result<Vec<String>, GeohashError> {
    area.validate()?;
    check_precision(precision)?;
    let (long_bits, lat_bits) = bit_split(precision);
    let long_lo = axis_cell(area.long_min, -180.0, 180.0, long_bits);
    let long_hi = axis_cell(area.long_max, -180.0, 180.0, long_bits);
    let lat_lo = axis_cell(area.lat_min, -90.0, 90.0, lat_bits);
    let lat_hi = axis_cell(area.lat_max, -90.0, 90.0, lat_bits);
    let needed = (long_hi - long_lo + 1) * (lat_hi - lat_lo + 1);
    if needed > limit as u64 {
        return Err(GeohashError::PrecisionTooFine { needed, limit });
    }
    let mut out: Vec<String> = (long_lo..=long_hi)
        .flat_map(|lo| (lat_lo..=lat_hi).map(move |la| interleave(lo, la, precision)))
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Next hash of the same length in lexicographic order, or `None` after "zz…z".
pub fn successor(hash: &str) -> Option<String> {
    let mut digits: Vec<u8> = hash.chars().map(char_value).collect::<Result<_, _>>().ok()?;
    for i in (0..digits.len()).rev() {
        if digits[i] < 31 {
            digits[i] += 1;
            return Some(digits.iter().map(|&d| ALPHABET[d as usize] as char).collect());
        }
        digits[i] = 0;
    }
    None
}

/// Coalesce sorted equal-length prefixes into maximal runs of consecutive
/// cells, returned as `(first, last)` pairs.
pub fn coalesce(prefixes: &[String]) -> Vec<(String, String)> {
    let mut runs: Vec<(String, String)> = Vec::new();
    for p in prefixes {
        match runs.last_mut() {
            Some((_, last)) if successor(last).as_deref() == Some(p.as_str()) => *last = p.clone(),
            _ => runs.push((p.clone(), p.clone())),
        }
    }
    runs
}

/// One single-inequality range spec on [`FIELD`] per run of covering cells.
/// Their union is a superset of the box; exact membership needs a final
/// latitude/longitude filter.
pub fn rewrite(area: &GeoBox, precision: usize, limit: usize) -> Result<Vec<QuerySpec>, GeohashError> {
    let cells = cover(area, precision, limit)?;
    Ok(coalesce(&cells)
        .into_iter()
        .map(|(first, last)| {
            let mut conditions = vec![Condition::new(FIELD, CompareOp::Ge, first)];
            if let Some(next) = successor(&last) {
                conditions.push(Condition::new(FIELD, CompareOp::Lt, next));
            }
            QuerySpec::new(conditions)
        })
        .collect())
}

//! Seeded mock charger datasets.
//!
//! Every field draws from its own ChaCha8 stream (same seed, distinct stream
//! id), so adding a field or changing one list never perturbs the others.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geohash;
use crate::model::{ChargerRecord, Document, FieldValue};

pub const GENERATOR: &str = "chacha8";

#[derive(Debug, Error)]
pub enum DataGenError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("dataset file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How latitude and longitude are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordinateMode {
    /// Uniform over the level lists.
    #[default]
    Discrete,
    /// Uniform over `[min level, max level]`.
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: u64,
    pub seed: u64,
    pub lat_levels: Vec<f64>,
    pub long_levels: Vec<f64>,
    pub names: Vec<String>,
    pub streets: Vec<String>,
    pub house_range: (u32, u32),
    pub types: Vec<String>,
    #[serde(default)]
    pub coordinates: CoordinateMode,
}

/// Five evenly spaced latitudes over [43.19, 47.9]; only 47.9 lies in [47.5, 48.0].
pub const DEFAULT_LAT_LEVELS: [f64; 5] = [43.19, 44.3675, 45.545, 46.7225, 47.9];
/// Five evenly spaced longitudes over [-124.9, -120.1]; only -122.5 lies in [-122.5, -122.1].
pub const DEFAULT_LONG_LEVELS: [f64; 5] = [-124.9, -123.7, -122.5, -121.3, -120.1];

impl GenSpec {
    pub fn new(n: u64, seed: u64) -> Self {
        GenSpec {
            n,
            seed,
            lat_levels: DEFAULT_LAT_LEVELS.to_vec(),
            long_levels: DEFAULT_LONG_LEVELS.to_vec(),
            names: ["Howard", "Gomez", "Singh", "Shipman", "Durnin"].map(String::from).to_vec(),
            streets: ["Cedar Ct", "118th Ave", "119th Ave", "Maple Hill Ln"].map(String::from).to_vec(),
            house_range: (10000, 11900),
            types: ["level1", "level2"].map(String::from).to_vec(),
            coordinates: CoordinateMode::Discrete,
        }
    }

    pub fn validate(&self) -> Result<(), DataGenError> {
        let bad = |m: &str| Err(DataGenError::InvalidSpec(m.to_string()));
        if self.lat_levels.is_empty() || self.long_levels.is_empty() {
            return bad("coordinate level lists must be non-empty");
        }
        if self.names.is_empty() || self.streets.is_empty() || self.types.is_empty() {
            return bad("name, street and type lists must be non-empty");
        }
        if self.house_range.0 >= self.house_range.1 {
            return bad("house_range must satisfy min < max");
        }
        if !self.lat_levels.iter().all(|l| (-90.0..=90.0).contains(l)) {
            return bad("latitude levels must lie in [-90, 90]");
        }
        if !self.long_levels.iter().all(|l| (-180.0..=180.0).contains(l)) {
            return bad("longitude levels must lie in [-180, 180]");
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
#[repr(u64)]
enum Stream {
    Name = 1,
    Latitude = 2,
    Longitude = 3,
    Type = 4,
    House = 5,
    Street = 6,
}

fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    // u32 sampling keeps the output identical on 32- and 64-bit targets.
    &items[rng.gen_range(0..items.len() as u32) as usize]
}

fn coordinate(rng: &mut ChaCha8Rng, levels: &[f64], mode: CoordinateMode) -> f64 {
    match mode {
        CoordinateMode::Discrete => *pick(rng, levels),
        CoordinateMode::Continuous => {
            let lo = levels.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                lo
            } else {
                rng.gen_range(lo..=hi)
            }
        }
    }
}

/// Lazily generate the records described by `spec`. Ids run 1..=n.
pub fn records(spec: &GenSpec) -> Result<impl Iterator<Item = ChargerRecord> + '_, DataGenError> {
    spec.validate()?;
    let mut names = stream(spec.seed, Stream::Name);
    let mut lats = stream(spec.seed, Stream::Latitude);
    let mut longs = stream(spec.seed, Stream::Longitude);
    let mut types = stream(spec.seed, Stream::Type);
    let mut houses = stream(spec.seed, Stream::House);
    let mut streets = stream(spec.seed, Stream::Street);
    Ok((1..=spec.n).map(move |id| {
        let house = houses.gen_range(spec.house_range.0..=spec.house_range.1);
        ChargerRecord {
            id,
            name: pick(&mut names, &spec.names).clone(),
            address: format!("{house} {}", pick(&mut streets, &spec.streets)),
            latitude: coordinate(&mut lats, &spec.lat_levels, spec.coordinates),
            longitude: coordinate(&mut longs, &spec.long_levels, spec.coordinates),
            charger_type: pick(&mut types, &spec.types).clone(),
        }
    }))
}

pub fn generate(spec: &GenSpec) -> Result<Vec<ChargerRecord>, DataGenError> {
    Ok(records(spec)?.collect())
}

/// Document form of a record, optionally carrying a precision-12 `geohash` field.
pub fn to_document(record: &ChargerRecord, with_geohash: bool) -> Document {
    let doc = record.to_document();
    if with_geohash {
        let hash = geohash::encode(record.latitude, record.longitude, geohash::MAX_PRECISION)
            .expect("generated coordinates are in world bounds");
        doc.with(geohash::FIELD, FieldValue::Text(hash))
    } else {
        doc
    }
}

/// First line of a generated dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub generator: String,
    pub seed: u64,
    pub n: u64,
    pub geohash: bool,
    pub spec: GenSpec,
}

/// Write the header line followed by one document per record.
pub fn write_dataset(spec: &GenSpec, with_geohash: bool, mut out: impl Write) -> Result<(), DataGenError> {
    let header = DatasetHeader {
        generator: GENERATOR.to_string(),
        seed: spec.seed,
        n: spec.n,
        geohash: with_geohash,
        spec: spec.clone(),
    };
    writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for rec in records(spec)? {
        writeln!(out, "{}", to_document(&rec, with_geohash).to_json_line())?;
    }
    Ok(())
}

/// Read any JSON-lines document file: an optional header line (dataset,
/// collection snapshot or table schema) followed by documents. Returns the raw
/// header object, if one was present, and the documents.
pub fn read_documents(input: impl BufRead) -> Result<(Option<serde_json::Value>, Vec<Document>), DataGenError> {
    let mut header = None;
    let mut docs = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| DataGenError::Format(format!("line {}: {e}", i + 1)))?;
        if i == 0 && value.get(crate::model::KEY_FIELD).is_none() {
            header = Some(value);
            continue;
        }
        docs.push(
            Document::from_json(&value).map_err(|e| DataGenError::Format(format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok((header, docs))
}

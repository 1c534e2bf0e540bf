//! Labelled feature datasets: deterministic generation and the text file format.
//!
//! File layout: the first line is a single-line JSON header
//! ([`DatasetHeader`]), followed by one record per line,
//!
//! ```text
//! split,composition_id,mz,mx,az,ax,label
//! ```
//!
//! with `split` 0/1/2 for train/validation/test. Floats are written in the
//! shortest decimal form that parses back to the same `f64` (at most 17
//! significant digits).
//!
//! Every sample draws from its own ChaCha8 stream keyed by
//! `(master_seed, composition index, sample index)`, so generation order and
//! thread count have no influence on the output.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{features_composed, FeatureVector};
use crate::mlp::Sample;
use crate::par::{map_indexed, Execution};
use crate::seeds::{sample_seed_params, SAMPLER_ID};
use crate::structure::{class_table, enumerate_compositions, label_in, ClassTable};

pub const FORMAT_ID: &str = "entstruct-dataset/1";
pub const DEFAULT_PER_COMPOSITION: usize = 15_000;
const STREAM_TAG: &[u8; 8] = b"entseed1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn code(self) -> u8 {
        match self {
            Split::Train => 0,
            Split::Validation => 1,
            Split::Test => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Split::Train),
            1 => Some(Split::Validation),
            2 => Some(Split::Test),
            _ => None,
        }
    }
}

/// `(train, validation, test)` sizes for `k` samples of one composition:
/// `floor(2k/3)`, `floor(k/6)`, and the remainder.
pub fn split_sizes(k: usize) -> (usize, usize, usize) {
    let train = 2 * k / 3;
    let val = k / 6;
    (train, val, k - train - val)
}

/// Split of the `index`-th sample out of `k`: index ranges, not shuffling.
pub fn split_of(index: usize, k: usize) -> Split {
    let (train, val, _) = split_sizes(k);
    if index < train {
        Split::Train
    } else if index < train + val {
        Split::Validation
    } else {
        Split::Test
    }
}

/// Random stream for one sample.
pub fn sample_stream(master_seed: u64, composition: usize, sample: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&(composition as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(sample as u64).to_le_bytes());
    key[24..].copy_from_slice(STREAM_TAG);
    ChaCha8Rng::from_seed(key)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub split: Split,
    pub composition_id: usize,
    pub features: FeatureVector,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub n: usize,
    pub master_seed: u64,
    pub per_composition: usize,
    pub sampler: String,
    pub class_table: Vec<[usize; 2]>,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub master_seed: u64,
    pub per_composition: usize,
    pub sampler: String,
    pub class_table: ClassTable,
    pub records: Vec<Record>,
}

/// Generates `per_composition` labelled samples for every composition of `n`.
pub fn generate(n: usize, per_composition: usize, master_seed: u64) -> Result<Dataset> {
    generate_with(n, per_composition, master_seed, Execution::Parallel)
}

pub fn generate_with(n: usize, per_composition: usize, master_seed: u64, exec: Execution) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::Parameter(format!("dataset needs n >= 2, got {n}")));
    }
    if per_composition < 6 {
        return Err(Error::Parameter(format!(
            "per-composition count must be at least 6, got {per_composition}"
        )));
    }
    let table = class_table(n)?;
    let compositions = enumerate_compositions(n)?;
    let labels = compositions
        .iter()
        .map(|c| label_in(&table, c).map(|l| l.class_index))
        .collect::<Result<Vec<_>>>()?;

    let total = compositions.len() * per_composition;
    let records = map_indexed(exec, total, |flat| {
        let (comp_id, sample) = (flat / per_composition, flat % per_composition);
        let c = &compositions[comp_id];
        let mut rng = sample_stream(master_seed, comp_id, sample);
        let params = c
            .blocks()
            .iter()
            .map(|&b| sample_seed_params(b, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Record {
            split: split_of(sample, per_composition),
            composition_id: comp_id,
            features: features_composed(n, c, &params)?,
            label: labels[comp_id],
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    Ok(Dataset {
        n,
        master_seed,
        per_composition,
        sampler: SAMPLER_ID.to_string(),
        class_table: table,
        records,
    })
}

impl Dataset {
    pub fn header(&self) -> DatasetHeader {
        DatasetHeader {
            format: FORMAT_ID.to_string(),
            n: self.n,
            master_seed: self.master_seed,
            per_composition: self.per_composition,
            sampler: self.sampler.clone(),
            class_table: self.class_table.pairs().iter().map(|&(m, d)| [m, d]).collect(),
            records: self.records.len(),
        }
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn samples(&self, split: Split) -> Vec<Sample> {
        self.split(split)
            .map(|r| Sample::new(r.features, r.label))
            .collect()
    }

    pub fn count(&self, split: Split) -> usize {
        self.split(split).count()
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header = serde_json::to_string(&self.header()).map_err(std::io::Error::other)?;
        writeln!(out, "{header}")?;
        for r in &self.records {
            let f = r.features;
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.split.code(),
                r.composition_id,
                f.mz,
                f.mx,
                f.az,
                f.ax,
                r.label
            )?;
        }
        out.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }

    /// Parses the file format, rejecting headers whose class table differs
    /// from the one this build computes for the same `n`.
    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let (_, first) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
        let first = first.map_err(|e| Error::parse(1, e.to_string()))?;
        let header: DatasetHeader =
            serde_json::from_str(&first).map_err(|e| Error::parse(1, format!("bad header: {e}")))?;
        if header.format != FORMAT_ID {
            return Err(Error::Compatibility(format!(
                "unknown dataset format {:?}",
                header.format
            )));
        }
        let table = class_table(header.n).map_err(|e| Error::parse(1, e.to_string()))?;
        let listed: Vec<(usize, usize)> = header.class_table.iter().map(|&[m, d]| (m, d)).collect();
        if listed != table.pairs() {
            return Err(Error::Compatibility(format!(
                "class table in file does not match n = {} table of this build",
                header.n
            )));
        }
        let compositions = 1usize << (header.n - 1);

        let mut records = Vec::with_capacity(header.records);
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            records.push(parse_record(&line, line_no, compositions, table.len())?);
        }
        if records.len() != header.records {
            return Err(Error::parse(
                records.len() + 2,
                format!(
                    "header announces {} records, found {} (truncated file?)",
                    header.records,
                    records.len()
                ),
            ));
        }
        Ok(Self {
            n: header.n,
            master_seed: header.master_seed,
            per_composition: header.per_composition,
            sampler: header.sampler,
            class_table: table,
            records,
        })
    }
}

fn parse_record(line: &str, line_no: usize, compositions: usize, classes: usize) -> Result<Record> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 7 {
        return Err(Error::parse(
            line_no,
            format!("expected 7 fields, found {}", fields.len()),
        ));
    }
    let int = |i: usize, what: &str| -> Result<usize> {
        fields[i]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad {what} {:?}", fields[i])))
    };
    let float = |i: usize| -> Result<f64> {
        let v: f64 = fields[i]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad float {:?}", fields[i])))?;
        if !v.is_finite() {
            return Err(Error::parse(line_no, "non-finite feature"));
        }
        Ok(v)
    };
    let split = u8::try_from(int(0, "split")?)
        .ok()
        .and_then(Split::from_code)
        .ok_or_else(|| Error::parse(line_no, format!("bad split {:?}", fields[0])))?;
    let composition_id = int(1, "composition id")?;
    if composition_id >= compositions {
        return Err(Error::parse(
            line_no,
            format!("composition id {composition_id} out of range"),
        ));
    }
    let label = int(6, "label")?;
    if label >= classes {
        return Err(Error::parse(line_no, format!("label {label} out of range")));
    }
    Ok(Record {
        split,
        composition_id,
        features: FeatureVector::from_array([float(2)?, float(3)?, float(4)?, float(5)?]),
        label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn to_bytes(d: &Dataset) -> Vec<u8> {
        let mut buf = Vec::new();
        d.write_to(&mut buf).unwrap();
        buf
    }

    #[test]
    fn split_rounding() {
        assert_eq!(split_sizes(15_000), (10_000, 2_500, 2_500));
        assert_eq!(split_sizes(7), (4, 1, 2));
        assert_eq!(split_sizes(2000), (1333, 333, 334));
    }

    #[test]
    fn counts_and_splits() {
        let d = generate(4, 60, 1).unwrap();
        assert_eq!(d.records.len(), 8 * 60);
        assert_eq!(d.count(Split::Train), 8 * 40);
        assert_eq!(d.count(Split::Validation), 8 * 10);
        assert_eq!(d.count(Split::Test), 8 * 10);
        assert!(d.records.iter().all(|r| r.label < d.class_table.len()));
        let train_labels: std::collections::BTreeSet<_> = d.split(Split::Train).map(|r| r.label).collect();
        assert_eq!(train_labels.len(), d.class_table.len());
    }

    #[test]
    fn parameter_validation() {
        assert!(generate(1, 60, 1).is_err());
        assert!(generate(4, 5, 1).is_err());
    }

    #[test]
    fn serial_and_parallel_agree() {
        let a = generate_with(5, 30, 9, Execution::Sequential).unwrap();
        let b = generate_with(5, 30, 9, Execution::Parallel).unwrap();
        assert_eq!(to_bytes(&a), to_bytes(&b));
        assert_ne!(to_bytes(&a), to_bytes(&generate(5, 30, 10).unwrap()));
    }

    #[test]
    fn round_trip_is_exact() {
        let d = generate(4, 12, 3).unwrap();
        let back = Dataset::read_from(to_bytes(&d).as_slice()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn shuffled_rows_load_as_same_multiset() {
        let d = generate(3, 12, 3).unwrap();
        let text = String::from_utf8(to_bytes(&d)).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[1..].reverse();
        let back = Dataset::read_from(lines.join("\n").as_bytes()).unwrap();
        let key = |r: &Record| (r.composition_id, r.label, r.features.to_array().map(f64::to_bits));
        let mut a: Vec<_> = d.records.iter().map(key).collect();
        let mut b: Vec<_> = back.records.iter().map(key).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn truncation_is_a_parse_error() {
        let d = generate(3, 12, 3).unwrap();
        let bytes = to_bytes(&d);
        // mid-line cut
        let cut = &bytes[..bytes.len() - 7];
        assert!(matches!(Dataset::read_from(cut), Err(Error::Parse { .. })));
        // cut on a line boundary
        let text = String::from_utf8(bytes).unwrap();
        let kept: Vec<&str> = text.lines().take(10).collect();
        assert!(matches!(
            Dataset::read_from(kept.join("\n").as_bytes()),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            Dataset::read_from(&b""[..]),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn bad_row_reports_line_number() {
        let d = generate(3, 12, 3).unwrap();
        let text = String::from_utf8(to_bytes(&d)).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[5] = "0,1,abc,0,0,0,1".into();
        let err = Dataset::read_from(lines.join("\n").as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 6, .. }), "{err}");
    }

    #[test]
    fn foreign_class_table_is_incompatible() {
        let d = generate(4, 6, 3).unwrap();
        let text = String::from_utf8(to_bytes(&d)).unwrap();
        let tampered = text.replacen("[1,4],", "", 1);
        assert!(matches!(
            Dataset::read_from(tampered.as_bytes()),
            Err(Error::Compatibility(_))
        ));
    }
}

//! CSV ingestion of precomputed feature vectors with multi-label annotations.
//!
//! * features: header `id,f0,…,f{d-1}`, one row per sample;
//! * labels: header `id,<class names…>`, entries 0/1, at least one 1 per row;
//! * splits (optional): header `id,split`, split one of `pool`, `val`, `test`.
//!
//! Without a split file the samples are shuffled with the given seed and
//! divided 50/25/25 into pool, validation and test.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

use crate::pool::{validate_labels, DatasetPool, LabelVector, Sample, SampleId, Split};
use crate::rng::{self, Stream};
use crate::{Error, Result};

struct Table {
    path: PathBuf,
    header: Vec<String>,
    /// (line number, fields)
    rows: Vec<(u64, Vec<String>)>,
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn read_table(path: &Path) -> Result<Table> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .iter()
        .map(|s| s.trim().to_owned())
        .collect();
    if header.first().map(String::as_str) != Some("id") {
        return Err(parse_error(path, 1, "header must start with `id`"));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(parse_error(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        rows.push((line, record.iter().map(|s| s.trim().to_owned()).collect()));
    }
    Ok(Table {
        path: path.to_owned(),
        header,
        rows,
    })
}

/// `(line, id, features)` rows.
type FeatureRows = Vec<(u64, SampleId, Vec<f64>)>;
/// Class names and `id -> (line, labels)`.
type LabelRows = (Vec<String>, BTreeMap<SampleId, (u64, LabelVector)>);

fn read_features(path: &Path) -> Result<(usize, FeatureRows)> {
    let table = read_table(path)?;
    let d = table.header.len() - 1;
    if d == 0 {
        return Err(parse_error(path, 1, "no feature columns"));
    }
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, fields) in table.rows {
        let values = fields[1..]
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| {
                        parse_error(&table.path, line, format!("invalid feature value `{v}`"))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((line, SampleId::new(fields[0].clone()), values));
    }
    Ok((d, out))
}

fn read_labels(path: &Path) -> Result<LabelRows> {
    let table = read_table(path)?;
    let class_names: Vec<String> = table.header[1..].to_vec();
    if class_names.is_empty() {
        return Err(parse_error(path, 1, "no label columns"));
    }
    let mut out = BTreeMap::new();
    for (line, fields) in table.rows {
        let labels = fields[1..]
            .iter()
            .map(|v| match v.as_str() {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(parse_error(
                    &table.path,
                    line,
                    format!("label entries must be 0 or 1, found `{other}`"),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        validate_labels(&fields[0], &labels, class_names.len())
            .map_err(|e| parse_error(&table.path, line, e.to_string()))?;
        if out
            .insert(SampleId::new(fields[0].clone()), (line, labels))
            .is_some()
        {
            return Err(parse_error(
                &table.path,
                line,
                format!("duplicate id `{}`", fields[0]),
            ));
        }
    }
    Ok((class_names, out))
}

fn read_splits(path: &Path) -> Result<BTreeMap<SampleId, (u64, Split)>> {
    let table = read_table(path)?;
    if table.header.len() != 2 {
        return Err(parse_error(path, 1, "split file header must be `id,split`"));
    }
    let mut out = BTreeMap::new();
    for (line, fields) in table.rows {
        let split = match fields[1].as_str() {
            "pool" => Split::Unlabeled,
            "val" => Split::Validation,
            "test" => Split::Test,
            other => {
                return Err(parse_error(
                    &table.path,
                    line,
                    format!("unknown split `{other}`"),
                ))
            }
        };
        if out
            .insert(SampleId::new(fields[0].clone()), (line, split))
            .is_some()
        {
            return Err(parse_error(
                &table.path,
                line,
                format!("duplicate id `{}`", fields[0]),
            ));
        }
    }
    Ok(out)
}

/// Seeded 50/25/25 split of `ids` into pool, validation and test.
pub fn random_splits(ids: &[SampleId], seed: u64) -> BTreeMap<SampleId, Split> {
    let mut shuffled = ids.to_vec();
    shuffled.sort();
    shuffled.shuffle(&mut rng::stream(seed, Stream::Split, 0));
    let n = shuffled.len();
    let pool_end = n / 2;
    let val_end = pool_end + n / 4;
    shuffled
        .into_iter()
        .enumerate()
        .map(|(i, id)| {
            let split = if i < pool_end {
                Split::Unlabeled
            } else if i < val_end {
                Split::Validation
            } else {
                Split::Test
            };
            (id, split)
        })
        .collect()
}

pub fn load_csv(
    features: &Path,
    labels: &Path,
    splits: Option<&Path>,
    seed: u64,
) -> Result<DatasetPool> {
    let (d, feature_rows) = read_features(features)?;
    let (class_names, mut label_rows) = read_labels(labels)?;
    let mut seen = BTreeMap::new();
    for (line, id, _) in &feature_rows {
        if seen.insert(id.clone(), *line).is_some() {
            return Err(parse_error(features, *line, format!("duplicate id `{id}`")));
        }
        if !label_rows.contains_key(id) {
            return Err(parse_error(
                features,
                *line,
                format!("id `{id}` has no row in {}", labels.display()),
            ));
        }
    }
    if let Some((id, (line, _))) = label_rows.iter().find(|(id, _)| !seen.contains_key(*id)) {
        return Err(parse_error(
            labels,
            *line,
            format!("id `{id}` has no row in {}", features.display()),
        ));
    }

    let assignment: BTreeMap<SampleId, Split> = match splits {
        Some(path) => {
            let table = read_splits(path)?;
            if let Some((id, (line, _))) = table.iter().find(|(id, _)| !seen.contains_key(*id)) {
                return Err(parse_error(path, *line, format!("unknown id `{id}`")));
            }
            if let Some((id, line)) = seen.iter().find(|(id, _)| !table.contains_key(*id)) {
                return Err(parse_error(
                    features,
                    *line,
                    format!("id `{id}` has no split in {}", path.display()),
                ));
            }
            table.into_iter().map(|(id, (_, s))| (id, s)).collect()
        }
        None => random_splits(&seen.keys().cloned().collect::<Vec<_>>(), seed),
    };

    let entries = feature_rows.into_iter().map(|(_, id, x)| {
        let (_, y) = label_rows.remove(&id).unwrap_or_default();
        let split = assignment[&id];
        (Sample::new(id, x, Some(y)), split)
    });
    let c = class_names.len();
    DatasetPool::new(c, d, entries)?.with_class_names(class_names)
}

/// Writes `features.csv`, `labels.csv` and `splits.csv` into `dir`.
/// Labeled and unlabeled samples are both written as `pool`; samples
/// without ground truth are skipped from the label file.
pub fn save_csv(pool: &DatasetPool, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut features = csv::Writer::from_path(dir.join("features.csv"))?;
    let mut header = vec!["id".to_owned()];
    header.extend((0..pool.feature_dim()).map(|i| format!("f{i}")));
    features.write_record(&header)?;
    let mut labels = csv::Writer::from_path(dir.join("labels.csv"))?;
    let mut header = vec!["id".to_owned()];
    header.extend(pool.class_names().iter().cloned());
    labels.write_record(&header)?;
    let mut splits = csv::Writer::from_path(dir.join("splits.csv"))?;
    splits.write_record(["id", "split"])?;

    for s in pool.samples() {
        let mut row = vec![s.id.to_string()];
        row.extend(s.features.iter().map(|v| v.to_string()));
        features.write_record(&row)?;
        if let Some(y) = &s.true_labels {
            let mut row = vec![s.id.to_string()];
            row.extend(y.iter().map(|v| v.to_string()));
            labels.write_record(&row)?;
        }
        let split = match pool.split_of(s.id.as_str()) {
            Some(Split::Validation) => "val",
            Some(Split::Test) => "test",
            _ => "pool",
        };
        splits.write_record([s.id.as_str(), split])?;
    }
    features.flush()?;
    labels.flush()?;
    splits.flush()?;
    Ok(())
}

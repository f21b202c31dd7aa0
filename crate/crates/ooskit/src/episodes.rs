//! Embedding datasets, CSV ingestion, class-disjoint splits, episodic
//! sampling with OOS queries, and synthetic radial data.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{ClassId, Point};
use crate::rng::{stream, Purpose};

/// One labeled embedding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetRecord {
    pub id: String,
    pub label: ClassId,
    pub point: Point,
}

/// Labeled points in R^d with dense class ids. Label tokens from the CSV are
/// mapped to ids in first-seen order and kept for round-tripping; ids stay
/// stable across splits.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDataset {
    dim: usize,
    records: Vec<DatasetRecord>,
    label_tokens: Vec<String>,
    class_records: BTreeMap<ClassId, Vec<usize>>,
}

impl EmbeddingDataset {
    fn from_parts(dim: usize, records: Vec<DatasetRecord>, label_tokens: Vec<String>) -> Self {
        let mut class_records: BTreeMap<ClassId, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            class_records.entry(r.label).or_default().push(i);
        }
        EmbeddingDataset {
            dim,
            records,
            label_tokens,
            class_records,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[DatasetRecord] {
        &self.records
    }

    /// Class ids present in this dataset, ascending.
    pub fn class_ids(&self) -> Vec<ClassId> {
        self.class_records.keys().copied().collect()
    }

    pub fn num_classes(&self) -> usize {
        self.class_records.len()
    }

    pub fn label_token(&self, class: ClassId) -> &str {
        &self.label_tokens[class]
    }

    pub fn records_of(&self, class: ClassId) -> &[usize] {
        self.class_records
            .get(&class)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Copy with every point shifted by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: shift.len(),
            });
        }
        let records = self
            .records
            .iter()
            .map(|r| DatasetRecord {
                id: r.id.clone(),
                label: r.label,
                point: r.point.translated(shift),
            })
            .collect();
        Ok(Self::from_parts(
            self.dim,
            records,
            self.label_tokens.clone(),
        ))
    }

    /// Canonical CSV serialization: header `id,label,f0,...,f{d-1}`, floats
    /// in shortest round-trip decimal form.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("id,label");
        for j in 0..self.dim {
            let _ = write!(out, ",f{j}");
        }
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{},{}", r.id, self.label_tokens[r.label]);
            for c in r.point.coords() {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

fn dataset_err(line: u64, message: impl Into<String>) -> Error {
    Error::Dataset {
        line,
        message: message.into(),
    }
}

/// Parses the embedding CSV schema, inferring the dimension from the header.
pub fn load_dataset(path: &Path) -> Result<EmbeddingDataset> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<EmbeddingDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| dataset_err(1, e.to_string()))?
        .clone();
    if headers.len() < 3 || &headers[0] != "id" || &headers[1] != "label" {
        return Err(dataset_err(
            1,
            "header must be id,label,f0,...,f{d-1}".to_string(),
        ));
    }
    let dim = headers.len() - 2;
    for (j, name) in headers.iter().skip(2).enumerate() {
        if name != format!("f{j}") {
            return Err(dataset_err(
                1,
                format!("expected column f{j}, found {name}"),
            ));
        }
    }

    let mut records = Vec::new();
    let mut label_tokens: Vec<String> = Vec::new();
    let mut label_ids: HashMap<String, ClassId> = HashMap::new();
    let mut seen_ids: HashMap<String, u64> = HashMap::new();
    for (i, row) in reader.records().enumerate() {
        // Data rows start on line 2 of the file.
        let fallback_line = i as u64 + 2;
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(fallback_line);
            dataset_err(line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(fallback_line);
        if row.len() != headers.len() {
            return Err(dataset_err(
                line,
                format!("expected {} fields, found {}", headers.len(), row.len()),
            ));
        }
        let id = row[0].to_string();
        if let Some(first) = seen_ids.insert(id.clone(), line) {
            return Err(dataset_err(
                line,
                format!("duplicate id '{id}' (first used on line {first})"),
            ));
        }
        let token = row[1].to_string();
        let label = *label_ids.entry(token.clone()).or_insert_with(|| {
            label_tokens.push(token);
            label_tokens.len() - 1
        });
        let mut coords = Vec::with_capacity(dim);
        for field in row.iter().skip(2) {
            let value: f64 = field
                .trim()
                .parse()
                .map_err(|_| dataset_err(line, format!("not a float: '{field}'")))?;
            if !value.is_finite() {
                return Err(dataset_err(line, format!("non-finite value: '{field}'")));
            }
            coords.push(value);
        }
        records.push(DatasetRecord {
            id,
            label,
            point: Point::new(coords)?,
        });
    }
    if records.is_empty() {
        return Err(dataset_err(2, "dataset has no records".to_string()));
    }
    Ok(EmbeddingDataset::from_parts(dim, records, label_tokens))
}

/// Class-disjoint partition into (train, test). The test side receives
/// `floor(test_fraction * classes)` classes, at least one; assignment is a
/// seeded shuffle of the class list.
pub fn few_shot_split(
    ds: &EmbeddingDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(EmbeddingDataset, EmbeddingDataset)> {
    if !(0.0 < test_fraction && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let classes = ds.class_ids();
    if classes.len() < 2 {
        return Err(Error::InsufficientClasses {
            needed: 2,
            available: classes.len(),
        });
    }
    let n_test = ((test_fraction * classes.len() as f64).floor() as usize).max(1);

    let mut rng = stream(seed, Purpose::Split, 0);
    let mut shuffled = classes;
    for i in 0..shuffled.len() {
        let j = rng.random_range(i..shuffled.len());
        shuffled.swap(i, j);
    }
    let test_classes: BTreeSet<ClassId> = shuffled[..n_test].iter().copied().collect();

    let partition = |keep_test: bool| {
        let records: Vec<DatasetRecord> = ds
            .records
            .iter()
            .filter(|r| test_classes.contains(&r.label) == keep_test)
            .cloned()
            .collect();
        EmbeddingDataset::from_parts(ds.dim, records, ds.label_tokens.clone())
    };
    Ok((partition(false), partition(true)))
}

/// Shape of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeConfig {
    /// Support examples per class (n).
    pub shots: usize,
    /// Support classes (k).
    pub ways: usize,
    /// In-support queries per support class.
    pub queries_per_class: usize,
    /// Total OOS queries.
    pub oos_queries: usize,
    /// When set, OOS queries are drawn from exactly this many held-out
    /// classes; otherwise uniformly from all held-out records.
    pub oos_ways: Option<usize>,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            shots: 5,
            ways: 5,
            queries_per_class: 8,
            oos_queries: 40,
            oos_ways: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportExample {
    pub id: String,
    pub point: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Query {
    pub id: String,
    pub point: Point,
    pub true_label: ClassId,
    pub is_oos: bool,
}

/// One few-shot episode: per-class support sets plus a mixed query set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Episode {
    pub support: BTreeMap<ClassId, Vec<SupportExample>>,
    pub queries: Vec<Query>,
    pub c_in: BTreeSet<ClassId>,
    pub c_out: BTreeSet<ClassId>,
}

impl Episode {
    pub fn support_points(&self) -> BTreeMap<ClassId, Vec<Point>> {
        self.support
            .iter()
            .map(|(&c, examples)| (c, examples.iter().map(|e| e.point.clone()).collect()))
            .collect()
    }

    /// Every encoded point of the episode: supports then queries.
    pub fn all_points(&self) -> Vec<Point> {
        self.support
            .values()
            .flatten()
            .map(|e| e.point.clone())
            .chain(self.queries.iter().map(|q| q.point.clone()))
            .collect()
    }
}

fn pick<T: Copy>(pool: &mut [T], count: usize, rng: &mut impl Rng) -> Vec<T> {
    for i in 0..count {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool[..count].to_vec()
}

/// Samples episode `index` of the run keyed by `seed`. The RNG stream is
/// derived from (seed, index), so episodes are reproducible individually and
/// in any order.
pub fn sample_episode(
    ds: &EmbeddingDataset,
    cfg: &EpisodeConfig,
    seed: u64,
    index: u64,
) -> Result<Episode> {
    if cfg.shots == 0 || cfg.ways == 0 {
        return Err(Error::InvalidParameter(
            "shots and ways must be positive".into(),
        ));
    }
    let classes = ds.class_ids();
    if classes.len() <= cfg.ways {
        return Err(Error::InsufficientClasses {
            needed: cfg.ways + 1,
            available: classes.len(),
        });
    }
    let mut rng = stream(seed, Purpose::Episode, index);

    let mut class_pool = classes.clone();
    let mut chosen = pick(&mut class_pool, cfg.ways, &mut rng);
    chosen.sort_unstable();
    let c_in: BTreeSet<ClassId> = chosen.iter().copied().collect();

    let mut support = BTreeMap::new();
    let mut queries = Vec::new();
    for &class in &chosen {
        let needed = cfg.shots + cfg.queries_per_class;
        let available = ds.records_of(class).len();
        if available < needed {
            return Err(Error::InsufficientRecords {
                class: ds.label_token(class).to_string(),
                needed,
                available,
            });
        }
        let mut indices = ds.records_of(class).to_vec();
        let taken = pick(&mut indices, needed, &mut rng);
        let examples: Vec<SupportExample> = taken[..cfg.shots]
            .iter()
            .map(|&i| SupportExample {
                id: ds.records[i].id.clone(),
                point: ds.records[i].point.clone(),
            })
            .collect();
        support.insert(class, examples);
        for &i in &taken[cfg.shots..] {
            queries.push(Query {
                id: ds.records[i].id.clone(),
                point: ds.records[i].point.clone(),
                true_label: class,
                is_oos: false,
            });
        }
    }

    let held_out: Vec<ClassId> = classes
        .iter()
        .copied()
        .filter(|c| !c_in.contains(c))
        .collect();
    let mut oos_pool: Vec<usize> = match cfg.oos_ways {
        Some(w) => {
            if held_out.len() < w {
                return Err(Error::InsufficientClasses {
                    needed: cfg.ways + w,
                    available: classes.len(),
                });
            }
            let mut pool = held_out.clone();
            let picked = pick(&mut pool, w, &mut rng);
            picked
                .iter()
                .flat_map(|&c| ds.records_of(c).iter().copied())
                .collect()
        }
        None => held_out
            .iter()
            .flat_map(|&c| ds.records_of(c).iter().copied())
            .collect(),
    };
    if oos_pool.len() < cfg.oos_queries {
        return Err(Error::InsufficientRecords {
            class: "held-out pool".into(),
            needed: cfg.oos_queries,
            available: oos_pool.len(),
        });
    }
    let mut c_out = BTreeSet::new();
    for i in pick(&mut oos_pool, cfg.oos_queries, &mut rng) {
        let r = &ds.records[i];
        c_out.insert(r.label);
        queries.push(Query {
            id: r.id.clone(),
            point: r.point.clone(),
            true_label: r.label,
            is_oos: true,
        });
    }

    Ok(Episode {
        support,
        queries,
        c_in,
        c_out,
    })
}

/// Synthetic radial clusters: class c centered at `radius * u_c`, points
/// drawn isotropic-normal with standard deviation `sigma`. For d = 2 the
/// directions are equally spaced on the circle; otherwise the first
/// min(classes, d) directions are orthonormalized and the rest are random
/// unit vectors.
pub fn synth_radial(
    total_classes: usize,
    dim: usize,
    radius: f64,
    sigma: f64,
    per_class: usize,
    seed: u64,
) -> Result<EmbeddingDataset> {
    if total_classes < 2 {
        return Err(Error::InvalidParameter("need at least two classes".into()));
    }
    if dim == 0 || per_class == 0 {
        return Err(Error::InvalidParameter(
            "dimension and per-class count must be positive".into(),
        ));
    }
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !positive(radius) || !positive(sigma) {
        return Err(Error::InvalidParameter(
            "radius and sigma must be positive".into(),
        ));
    }

    let mut rng = stream(seed, Purpose::Synth, 0);
    let mut gaussian =
        |n: usize| -> Vec<f64> { (0..n).map(|_| rng.sample(StandardNormal)).collect() };

    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(total_classes);
    if dim == 2 {
        for c in 0..total_classes {
            let theta = std::f64::consts::TAU * c as f64 / total_classes as f64;
            directions.push(vec![theta.cos(), theta.sin()]);
        }
    } else {
        for c in 0..total_classes {
            loop {
                let mut v = gaussian(dim);
                if c < dim {
                    for prev in &directions {
                        let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
                        for (vi, pi) in v.iter_mut().zip(prev) {
                            *vi -= dot * pi;
                        }
                    }
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-9 {
                    for vi in &mut v {
                        *vi /= norm;
                    }
                    directions.push(v);
                    break;
                }
            }
        }
    }

    let mut records = Vec::with_capacity(total_classes * per_class);
    let mut label_tokens = Vec::with_capacity(total_classes);
    for (c, direction) in directions.iter().enumerate() {
        let token = format!("c{c}");
        label_tokens.push(token.clone());
        for i in 0..per_class {
            let noise = gaussian(dim);
            let coords: Vec<f64> = direction
                .iter()
                .zip(&noise)
                .map(|(u, z)| radius * u + sigma * z)
                .collect();
            records.push(DatasetRecord {
                id: format!("{token}-{i}"),
                label: c,
                point: Point::new(coords)?,
            });
        }
    }
    Ok(EmbeddingDataset::from_parts(dim, records, label_tokens))
}

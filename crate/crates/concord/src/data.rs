//! Data model for items, features, and annotation records, plus file
//! ingestion and the gold-free view handed to fitting code.
//!
//! Identifiers for items, contexts, and annotators are opaque strings. They
//! are interned into dense indices in first-seen order, so downstream
//! indexing is deterministic and independent of hashing.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::label::Label;
use crate::scalar::{format_scalar, parse_scalar, Scalar};

/// A dense or sparse real-valued feature vector.
///
/// Sparse entries not listed default to zero. Equality is semantic: a dense
/// and a sparse vector holding the same values compare equal.
#[derive(Clone, Debug)]
pub enum FeatureVector<T> {
    Dense(Vec<T>),
    Sparse {
        dim: usize,
        /// `(index, value)` pairs with strictly increasing indices and
        /// non-zero values.
        entries: Vec<(usize, T)>,
    },
}

impl<T: Scalar> FeatureVector<T> {
    /// Builds a dense vector.
    pub fn dense(values: Vec<T>) -> Self {
        FeatureVector::Dense(values)
    }

    /// Builds a sparse vector from `(index, value)` pairs. Zero values are
    /// dropped; duplicate indices are an error.
    pub fn sparse(dim: usize, mut entries: Vec<(usize, T)>) -> Result<Self> {
        entries.retain(|&(_, v)| v != T::zero());
        entries.sort_by_key(|&(i, _)| i);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidData(format!(
                    "duplicate feature index {} in sparse vector",
                    pair[0].0
                )));
            }
        }
        if let Some(&(i, _)) = entries.last() {
            if i >= dim {
                return Err(Error::InvalidData(format!(
                    "feature index {i} out of range for dimension {dim}"
                )));
            }
        }
        Ok(FeatureVector::Sparse { dim, entries })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureVector::Dense(v) => v.len(),
            FeatureVector::Sparse { dim, .. } => *dim,
        }
    }

    pub fn get(&self, index: usize) -> T {
        match self {
            FeatureVector::Dense(v) => v.get(index).copied().unwrap_or_else(T::zero),
            FeatureVector::Sparse { entries, .. } => entries
                .binary_search_by_key(&index, |&(i, _)| i)
                .map(|pos| entries[pos].1)
                .unwrap_or_else(|_| T::zero()),
        }
    }

    /// Iterates over the non-zero `(index, value)` pairs in index order.
    pub fn nonzero(&self) -> Box<dyn Iterator<Item = (usize, T)> + '_> {
        match self {
            FeatureVector::Dense(v) => Box::new(
                v.iter()
                    .copied()
                    .enumerate()
                    .filter(|&(_, v)| v != T::zero()),
            ),
            FeatureVector::Sparse { entries, .. } => Box::new(entries.iter().copied()),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, FeatureVector::Dense(_))
    }
}

impl<T: Scalar> PartialEq for FeatureVector<T> {
    fn eq(&self, other: &Self) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let mut a = self.nonzero();
        let mut b = other.nonzero();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return true,
                (Some(x), Some(y)) if x == y => continue,
                _ => return false,
            }
        }
    }
}

/// One item to be labeled: features plus an optional gold label used only in
/// evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Item<T> {
    pub id: String,
    pub features: FeatureVector<T>,
    pub gold_label: Option<Label>,
}

/// One annotation: an annotator's label for an item seen in a context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub item_id: String,
    pub context_id: String,
    pub annotator_id: String,
    pub label: Label,
}

/// Compact interned form of an annotation used internally.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Annotation {
    pub item: u32,
    pub context: u32,
    pub annotator: u32,
    pub label: Label,
}

/// Borrowed view of one annotation with resolved identifier strings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnnotationRef<'a> {
    pub item_id: &'a str,
    pub context_id: &'a str,
    pub annotator_id: &'a str,
    pub label: Label,
}

/// A validated collection of items and annotations.
///
/// Invariants enforced at construction: at least one item, consistent
/// feature dimensionality, unique item ids, every annotation referencing an
/// existing item, and every item carrying at least one annotation.
/// Immutable afterwards.
#[derive(Clone, Debug)]
pub struct Dataset<T> {
    items: Vec<Item<T>>,
    annotations: Vec<Annotation>,
    item_index: HashMap<String, usize>,
    contexts: Vec<String>,
    context_index: HashMap<String, usize>,
    annotators: Vec<String>,
    annotator_index: HashMap<String, usize>,
    feature_dim: usize,
}

impl<T: Scalar> PartialEq for Dataset<T> {
    fn eq(&self, other: &Self) -> bool {
        self.items == other.items
            && self.annotations == other.annotations
            && self.contexts == other.contexts
            && self.annotators == other.annotators
    }
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from items and annotation records, validating all
    /// invariants. Context and annotator sets are derived from the records
    /// in first-seen order.
    pub fn from_records(items: Vec<Item<T>>, records: &[AnnotationRecord]) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidData("dataset must contain at least one item".into()));
        }
        let feature_dim = items[0].features.dim();
        let mut item_index = HashMap::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            if item.features.dim() != feature_dim {
                return Err(Error::DimensionMismatch {
                    expected: feature_dim,
                    got: item.features.dim(),
                });
            }
            if item_index.insert(item.id.clone(), i).is_some() {
                return Err(Error::InvalidData(format!("duplicate item id `{}`", item.id)));
            }
        }

        let mut contexts: Vec<String> = Vec::new();
        let mut context_index: HashMap<String, usize> = HashMap::new();
        let mut annotators: Vec<String> = Vec::new();
        let mut annotator_index: HashMap<String, usize> = HashMap::new();
        let mut annotations = Vec::with_capacity(records.len());
        let mut item_covered = vec![false; items.len()];

        for rec in records {
            let item = *item_index
                .get(&rec.item_id)
                .ok_or_else(|| Error::UnknownItem(rec.item_id.clone()))?;
            item_covered[item] = true;
            let context = *context_index.entry(rec.context_id.clone()).or_insert_with(|| {
                contexts.push(rec.context_id.clone());
                contexts.len() - 1
            });
            let annotator = *annotator_index
                .entry(rec.annotator_id.clone())
                .or_insert_with(|| {
                    annotators.push(rec.annotator_id.clone());
                    annotators.len() - 1
                });
            annotations.push(Annotation {
                item: item as u32,
                context: context as u32,
                annotator: annotator as u32,
                label: rec.label,
            });
        }

        if let Some(i) = item_covered.iter().position(|&c| !c) {
            return Err(Error::InvalidData(format!(
                "item `{}` has no annotations",
                items[i].id
            )));
        }

        Ok(Dataset {
            items,
            annotations,
            item_index,
            contexts,
            context_index,
            annotators,
            annotator_index,
            feature_dim,
        })
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[Item<T>] {
        &self.items
    }

    pub fn item(&self, index: usize) -> &Item<T> {
        &self.items[index]
    }

    pub fn item_by_id(&self, id: &str) -> Option<&Item<T>> {
        self.item_index.get(id).map(|&i| &self.items[i])
    }

    pub(crate) fn item_position(&self, id: &str) -> Option<usize> {
        self.item_index.get(id).copied()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Context ids in first-seen order.
    pub fn contexts(&self) -> &[String] {
        &self.contexts
    }

    /// Annotator ids in first-seen order.
    pub fn annotators(&self) -> &[String] {
        &self.annotators
    }

    pub fn context_position(&self, id: &str) -> Option<usize> {
        self.context_index.get(id).copied()
    }

    pub fn annotator_position(&self, id: &str) -> Option<usize> {
        self.annotator_index.get(id).copied()
    }

    pub fn annotation_count(&self) -> usize {
        self.annotations.len()
    }

    /// Iterates over the annotations in input order with resolved ids.
    pub fn annotations(&self) -> impl Iterator<Item = AnnotationRef<'_>> + '_ {
        self.annotations.iter().map(move |a| AnnotationRef {
            item_id: &self.items[a.item as usize].id,
            context_id: &self.contexts[a.context as usize],
            annotator_id: &self.annotators[a.annotator as usize],
            label: a.label,
        })
    }

    pub(crate) fn raw_annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    /// Clones the annotations back into owned records.
    pub fn annotation_records(&self) -> Vec<AnnotationRecord> {
        self.annotations()
            .map(|a| AnnotationRecord {
                item_id: a.item_id.to_string(),
                context_id: a.context_id.to_string(),
                annotator_id: a.annotator_id.to_string(),
                label: a.label,
            })
            .collect()
    }

    /// The view used by fitting code. It exposes features and annotations
    /// but has no accessor for gold labels.
    pub fn fit_view(&self) -> FitView<'_, T> {
        FitView {
            dataset: self,
            groups: group_annotations(self),
        }
    }
}

/// Groups a dataset's annotations by `(item, context)`.
///
/// Every annotation lands in exactly one group and groups preserve input
/// order, so downstream iteration is deterministic.
pub fn group_annotations<T: Scalar>(dataset: &Dataset<T>) -> GroupedAnnotations<'_, T> {
    let mut per_item: Vec<Vec<ContextGroup>> = vec![Vec::new(); dataset.n_items()];
    for a in dataset.raw_annotations() {
        let groups = &mut per_item[a.item as usize];
        match groups.iter_mut().find(|g| g.context == a.context) {
            Some(g) => g.annotations.push((a.annotator, a.label)),
            None => groups.push(ContextGroup {
                context: a.context,
                annotations: vec![(a.annotator, a.label)],
            }),
        }
    }
    // Contexts listed per item in ascending global context index, giving a
    // canonical ordering for latent-configuration vectors.
    for groups in &mut per_item {
        groups.sort_by_key(|g| g.context);
    }
    GroupedAnnotations { dataset, per_item }
}

#[derive(Clone, Debug)]
pub(crate) struct ContextGroup {
    pub context: u32,
    /// `(annotator, label)` pairs in input order.
    pub annotations: Vec<(u32, Label)>,
}

/// Indexed view of annotations keyed by `(item_id, context_id)`.
#[derive(Clone, Debug)]
pub struct GroupedAnnotations<'a, T> {
    dataset: &'a Dataset<T>,
    per_item: Vec<Vec<ContextGroup>>,
}

impl<'a, T: Scalar> GroupedAnnotations<'a, T> {
    /// The annotations for one `(item, context)` pair, in input order, or
    /// `None` when the pair has no annotations.
    pub fn group(
        &self,
        item_id: &str,
        context_id: &str,
    ) -> Option<Vec<(&'a str, Label)>> {
        let item = self.dataset.item_position(item_id)?;
        let context = self.dataset.context_position(context_id)? as u32;
        let group = self.per_item[item].iter().find(|g| g.context == context)?;
        Some(
            group
                .annotations
                .iter()
                .map(|&(a, l)| (self.dataset.annotators()[a as usize].as_str(), l))
                .collect(),
        )
    }

    /// Number of non-empty `(item, context)` groups.
    pub fn group_count(&self) -> usize {
        self.per_item.iter().map(|g| g.len()).sum()
    }

    /// Sizes of all groups, for audits.
    pub fn group_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.per_item
            .iter()
            .flat_map(|g| g.iter().map(|cg| cg.annotations.len()))
    }

    /// Total annotations across all groups.
    pub fn total_annotations(&self) -> usize {
        self.group_sizes().sum()
    }

    pub(crate) fn item_groups(&self, item: usize) -> &[ContextGroup] {
        &self.per_item[item]
    }
}

/// Gold-free view of a dataset handed to fitting code.
///
/// Holds the item features, identifier tables, and grouped annotations, but
/// exposes no path to gold labels; leakage is prevented structurally.
pub struct FitView<'a, T> {
    dataset: &'a Dataset<T>,
    groups: GroupedAnnotations<'a, T>,
}

impl<'a, T: Scalar> FitView<'a, T> {
    pub fn n_items(&self) -> usize {
        self.dataset.n_items()
    }

    pub fn item_id(&self, index: usize) -> &'a str {
        &self.dataset.items()[index].id
    }

    pub fn item_position(&self, id: &str) -> Option<usize> {
        self.dataset.item_position(id)
    }

    pub fn features(&self, index: usize) -> &'a FeatureVector<T> {
        &self.dataset.items()[index].features
    }

    pub fn feature_dim(&self) -> usize {
        self.dataset.feature_dim()
    }

    pub fn contexts(&self) -> &'a [String] {
        self.dataset.contexts()
    }

    pub fn annotators(&self) -> &'a [String] {
        self.dataset.annotators()
    }

    pub fn groups(&self) -> &GroupedAnnotations<'a, T> {
        &self.groups
    }
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

const ANNOTATION_HEADER: [&str; 4] = ["item_id", "context_id", "annotator_id", "label"];
const SPARSE_HEADER: [&str; 3] = ["item_id", "feature_index", "value"];
const GOLD_HEADER: [&str; 2] = ["item_id", "label"];

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| map_csv_error(path, e))
}

fn map_csv_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = e.into_kind() {
                Error::io(path, io)
            } else {
                unreachable!()
            }
        }
        _ => {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::parse(path, line, e.to_string())
        }
    }
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Loads a dataset from an annotations file, a features file, and an
/// optional gold-label file.
///
/// The item set and its order come from the features file; context and
/// annotator sets are derived from the annotation records in first-seen
/// order. The features file is auto-detected as dense
/// (`item_id,f0,f1,...`) or sparse triplets (`item_id,feature_index,value`)
/// from its header.
pub fn load_dataset<T: Scalar>(
    annotations_path: impl AsRef<Path>,
    features_path: impl AsRef<Path>,
    gold_path: Option<&Path>,
) -> Result<Dataset<T>> {
    let features_path = features_path.as_ref();
    let annotations_path = annotations_path.as_ref();

    let mut items = load_features(features_path)?;
    if let Some(gold_path) = gold_path {
        attach_gold(gold_path, &mut items)?;
    }

    let item_ids: HashMap<&str, ()> = items.iter().map(|i| (i.id.as_str(), ())).collect();
    let mut records = Vec::new();
    let mut reader = csv_reader(annotations_path)?;
    {
        let headers = reader.headers().map_err(|e| map_csv_error(annotations_path, e))?;
        if headers.iter().ne(ANNOTATION_HEADER) {
            return Err(Error::parse(
                annotations_path,
                1,
                format!("expected header `{}`", ANNOTATION_HEADER.join(",")),
            ));
        }
    }
    for row in reader.records() {
        let row = row.map_err(|e| map_csv_error(annotations_path, e))?;
        let line = record_line(&row);
        if row.len() != 4 {
            return Err(Error::parse(annotations_path, line, "expected 4 fields"));
        }
        let label: Label = row[3]
            .parse()
            .map_err(|e: Error| Error::parse(annotations_path, line, e.to_string()))?;
        if !item_ids.contains_key(&row[0]) {
            return Err(Error::parse(
                annotations_path,
                line,
                format!("annotation references unknown item `{}`", &row[0]),
            ));
        }
        records.push(AnnotationRecord {
            item_id: row[0].to_string(),
            context_id: row[1].to_string(),
            annotator_id: row[2].to_string(),
            label,
        });
    }

    Dataset::from_records(items, &records)
}

/// Loads a dataset that has no feature file: items are derived from the
/// annotation records (zero-dimensional features). Used by aggregation
/// commands that only need votes and agreement.
pub fn load_annotations_only<T: Scalar>(
    annotations_path: impl AsRef<Path>,
) -> Result<Dataset<T>> {
    let annotations_path = annotations_path.as_ref();
    let mut reader = csv_reader(annotations_path)?;
    {
        let headers = reader.headers().map_err(|e| map_csv_error(annotations_path, e))?;
        if headers.iter().ne(ANNOTATION_HEADER) {
            return Err(Error::parse(
                annotations_path,
                1,
                format!("expected header `{}`", ANNOTATION_HEADER.join(",")),
            ));
        }
    }
    let mut records = Vec::new();
    let mut items: Vec<Item<T>> = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| map_csv_error(annotations_path, e))?;
        let line = record_line(&row);
        if row.len() != 4 {
            return Err(Error::parse(annotations_path, line, "expected 4 fields"));
        }
        let label: Label = row[3]
            .parse()
            .map_err(|e: Error| Error::parse(annotations_path, line, e.to_string()))?;
        if seen.insert(row[0].to_string(), ()).is_none() {
            items.push(Item {
                id: row[0].to_string(),
                features: FeatureVector::dense(Vec::new()),
                gold_label: None,
            });
        }
        records.push(AnnotationRecord {
            item_id: row[0].to_string(),
            context_id: row[1].to_string(),
            annotator_id: row[2].to_string(),
            label,
        });
    }
    Dataset::from_records(items, &records)
}

fn load_features<T: Scalar>(path: &Path) -> Result<Vec<Item<T>>> {
    let mut reader = csv_reader(path)?;
    let headers = reader
        .headers()
        .map_err(|e| map_csv_error(path, e))?
        .clone();
    if headers.iter().eq(SPARSE_HEADER) {
        return load_sparse_features(path, reader);
    }
    if headers.len() < 1 || &headers[0] != "item_id" {
        return Err(Error::parse(
            path,
            1,
            "features header must start with `item_id`",
        ));
    }
    let dim = headers.len() - 1;
    let mut items = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| map_csv_error(path, e))?;
        let line = record_line(&row);
        if row.len() != dim + 1 {
            return Err(Error::parse(
                path,
                line,
                format!("expected {} fields, got {}", dim + 1, row.len()),
            ));
        }
        if seen.insert(row[0].to_string(), ()).is_some() {
            return Err(Error::parse(
                path,
                line,
                format!("duplicate item id `{}`", &row[0]),
            ));
        }
        let mut values = Vec::with_capacity(dim);
        for j in 1..=dim {
            let v = parse_scalar::<T>(&row[j]).ok_or_else(|| {
                Error::parse(path, line, format!("invalid feature value `{}`", &row[j]))
            })?;
            values.push(v);
        }
        items.push(Item {
            id: row[0].to_string(),
            features: FeatureVector::dense(values),
            gold_label: None,
        });
    }
    Ok(items)
}

fn load_sparse_features<T: Scalar>(
    path: &Path,
    mut reader: csv::Reader<std::fs::File>,
) -> Result<Vec<Item<T>>> {
    struct Pending<T> {
        id: String,
        entries: Vec<(usize, T)>,
    }
    let mut order: Vec<Pending<T>> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut dim = 0usize;
    for row in reader.records() {
        let row = row.map_err(|e| map_csv_error(path, e))?;
        let line = record_line(&row);
        if row.len() != 3 {
            return Err(Error::parse(path, line, "expected 3 fields"));
        }
        let feature_index: usize = row[1].trim().parse().map_err(|_| {
            Error::parse(path, line, format!("invalid feature index `{}`", &row[1]))
        })?;
        let value = parse_scalar::<T>(&row[2]).ok_or_else(|| {
            Error::parse(path, line, format!("invalid feature value `{}`", &row[2]))
        })?;
        dim = dim.max(feature_index + 1);
        let slot = *index.entry(row[0].to_string()).or_insert_with(|| {
            order.push(Pending {
                id: row[0].to_string(),
                entries: Vec::new(),
            });
            order.len() - 1
        });
        if value != T::zero() {
            order[slot].entries.push((feature_index, value));
        }
    }
    order
        .into_iter()
        .map(|p| {
            Ok(Item {
                id: p.id,
                features: FeatureVector::sparse(dim, p.entries)?,
                gold_label: None,
            })
        })
        .collect()
}

fn attach_gold<T: Scalar>(path: &Path, items: &mut [Item<T>]) -> Result<()> {
    let index: HashMap<&str, usize> = items
        .iter()
        .enumerate()
        .map(|(i, item)| (item.id.as_str(), i))
        .collect();
    let mut reader = csv_reader(path)?;
    {
        let headers = reader.headers().map_err(|e| map_csv_error(path, e))?;
        if headers.iter().ne(GOLD_HEADER) {
            return Err(Error::parse(
                path,
                1,
                format!("expected header `{}`", GOLD_HEADER.join(",")),
            ));
        }
    }
    let mut updates: Vec<(usize, Label)> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| map_csv_error(path, e))?;
        let line = record_line(&row);
        if row.len() != 2 {
            return Err(Error::parse(path, line, "expected 2 fields"));
        }
        let label: Label = row[1]
            .parse()
            .map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
        let &slot = index.get(&row[0]).ok_or_else(|| {
            Error::parse(path, line, format!("gold label for unknown item `{}`", &row[0]))
        })?;
        if items[slot].gold_label.is_some() {
            return Err(Error::parse(
                path,
                line,
                format!("duplicate gold label for item `{}`", &row[0]),
            ));
        }
        updates.push((slot, label));
        items[slot].gold_label = Some(label);
    }
    let _ = updates;
    Ok(())
}

/// Writes a dataset back to the file formats accepted by [`load_dataset`].
///
/// `gold_path`, when given, receives only the items that carry gold labels.
/// Loading the written files reproduces the dataset.
pub fn save_dataset<T: Scalar>(
    dataset: &Dataset<T>,
    annotations_path: impl AsRef<Path>,
    features_path: impl AsRef<Path>,
    gold_path: Option<&Path>,
) -> Result<()> {
    save_annotations(dataset, annotations_path)?;
    save_features(dataset, features_path)?;
    if let Some(gold_path) = gold_path {
        save_gold(dataset, gold_path)?;
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .from_path(path)
        .map_err(|e| map_csv_error(path, e))
}

fn save_annotations<T: Scalar>(dataset: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(ANNOTATION_HEADER)
        .map_err(|e| map_csv_error(path, e))?;
    for a in dataset.annotations() {
        w.write_record([a.item_id, a.context_id, a.annotator_id, &a.label.to_string()])
            .map_err(|e| map_csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn save_features<T: Scalar>(dataset: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let all_dense = dataset.items().iter().all(|i| i.features.is_dense());
    let mut w = csv_writer(path)?;
    if all_dense {
        let dim = dataset.feature_dim();
        let mut header = vec!["item_id".to_string()];
        header.extend((0..dim).map(|j| format!("f{j}")));
        w.write_record(&header).map_err(|e| map_csv_error(path, e))?;
        for item in dataset.items() {
            let mut row = vec![item.id.clone()];
            row.extend((0..dim).map(|j| format_scalar(item.features.get(j))));
            w.write_record(&row).map_err(|e| map_csv_error(path, e))?;
        }
    } else {
        w.write_record(SPARSE_HEADER)
            .map_err(|e| map_csv_error(path, e))?;
        let dim = dataset.feature_dim();
        let mut dim_pinned = false;
        for item in dataset.items() {
            let mut wrote_any = false;
            for (j, v) in item.features.nonzero() {
                if j + 1 == dim {
                    dim_pinned = true;
                }
                w.write_record([item.id.as_str(), &j.to_string(), &format_scalar(v)])
                    .map_err(|e| map_csv_error(path, e))?;
                wrote_any = true;
            }
            if !wrote_any {
                // Presence row so the loader registers the item.
                w.write_record([item.id.as_str(), "0", &format_scalar(T::zero())])
                    .map_err(|e| map_csv_error(path, e))?;
            }
        }
        if !dim_pinned && dim > 0 {
            // Explicit zero at the last column so the dimension survives a
            // round trip.
            w.write_record([
                dataset.items()[0].id.as_str(),
                &(dim - 1).to_string(),
                &format_scalar(T::zero()),
            ])
            .map_err(|e| map_csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn save_gold<T: Scalar>(dataset: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(GOLD_HEADER).map_err(|e| map_csv_error(path, e))?;
    for item in dataset.items() {
        if let Some(gold) = item.gold_label {
            w.write_record([item.id.as_str(), &gold.to_string()])
                .map_err(|e| map_csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use tempfile::TempDir;

    fn write_file(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    fn item<T: Scalar>(id: &str, features: Vec<T>) -> Item<T> {
        Item {
            id: id.to_string(),
            features: FeatureVector::dense(features),
            gold_label: None,
        }
    }

    fn record(item: &str, context: &str, annotator: &str, label: i64) -> AnnotationRecord {
        AnnotationRecord {
            item_id: item.into(),
            context_id: context.into(),
            annotator_id: annotator.into(),
            label: Label::from_value(label).unwrap(),
        }
    }

    #[test]
    fn three_row_file_one_item() {
        let dir = TempDir::new().unwrap();
        let ann = write_file(
            &dir,
            "ann.csv",
            "item_id,context_id,annotator_id,label\ni1,c1,a1,-1\ni1,c2,a2,0\ni1,c3,a3,1\n",
        );
        let feat = write_file(&dir, "feat.csv", "item_id,f0\ni1,0.5\n");
        let ds: Dataset<f64> = load_dataset(&ann, &feat, None).unwrap();
        assert_eq!(ds.n_items(), 1);
        assert_eq!(ds.contexts().len(), 3);
        assert_eq!(ds.annotators().len(), 3);
        assert_eq!(ds.annotation_count(), 3);
        assert_eq!(ds.feature_dim(), 1);
    }

    #[test]
    fn out_of_range_label_names_the_row() {
        let dir = TempDir::new().unwrap();
        let ann = write_file(
            &dir,
            "ann.csv",
            "item_id,context_id,annotator_id,label\ni1,c1,a1,1\ni1,c1,a2,2\n",
        );
        let feat = write_file(&dir, "feat.csv", "item_id,f0\ni1,0.5\n");
        let err = load_dataset::<f64>(&ann, &feat, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":3:"), "error should name line 3: {msg}");
        assert!(msg.contains('2'), "{msg}");
    }

    #[test]
    fn unknown_item_rejected() {
        let dir = TempDir::new().unwrap();
        let ann = write_file(
            &dir,
            "ann.csv",
            "item_id,context_id,annotator_id,label\nghost,c1,a1,1\n",
        );
        let feat = write_file(&dir, "feat.csv", "item_id,f0\ni1,0.5\n");
        let err = load_dataset::<f64>(&ann, &feat, None).unwrap_err();
        assert!(err.to_string().contains("ghost"));
    }

    #[test]
    fn feature_dimension_mismatch_rejected() {
        let dir = TempDir::new().unwrap();
        let feat = write_file(&dir, "feat.csv", "item_id,f0,f1\ni1,0.5,1.0\ni2,0.25\n");
        let ann = write_file(
            &dir,
            "ann.csv",
            "item_id,context_id,annotator_id,label\ni1,c1,a1,1\ni2,c1,a1,0\n",
        );
        assert!(load_dataset::<f64>(&ann, &feat, None).is_err());
    }

    #[test]
    fn item_without_annotations_rejected() {
        let items = vec![item::<f64>("i1", vec![1.0]), item("i2", vec![2.0])];
        let recs = vec![record("i1", "c1", "a1", 1)];
        assert!(Dataset::from_records(items, &recs).is_err());
    }

    #[test]
    fn gold_labels_attach_and_fit_view_hides_them() {
        let dir = TempDir::new().unwrap();
        let ann = write_file(
            &dir,
            "ann.csv",
            "item_id,context_id,annotator_id,label\ni1,c1,a1,1\ni2,c1,a1,0\n",
        );
        let feat = write_file(&dir, "feat.csv", "item_id,f0\ni1,0.5\ni2,0.25\n");
        let gold = write_file(&dir, "gold.csv", "item_id,label\ni2,-1\n");
        let ds: Dataset<f64> = load_dataset(&ann, &feat, Some(&gold)).unwrap();
        assert_eq!(ds.item_by_id("i2").unwrap().gold_label, Some(Label::Negative));
        assert_eq!(ds.item_by_id("i1").unwrap().gold_label, None);
        // The fitting view exposes only features/annotations.
        let view = ds.fit_view();
        assert_eq!(view.n_items(), 2);
        assert_eq!(view.feature_dim(), 1);
    }

    #[test]
    fn sparse_features_auto_detected() {
        let dir = TempDir::new().unwrap();
        let feat = write_file(
            &dir,
            "feat.csv",
            "item_id,feature_index,value\ni1,0,1.5\ni1,3,2.5\ni2,1,0.5\n",
        );
        let ann = write_file(
            &dir,
            "ann.csv",
            "item_id,context_id,annotator_id,label\ni1,c1,a1,1\ni2,c1,a1,0\n",
        );
        let ds: Dataset<f64> = load_dataset(&ann, &feat, None).unwrap();
        assert_eq!(ds.feature_dim(), 4);
        assert_eq!(ds.item_by_id("i1").unwrap().features.get(3), 2.5);
        assert_eq!(ds.item_by_id("i2").unwrap().features.get(0), 0.0);
        assert!(!ds.item_by_id("i1").unwrap().features.is_dense());
    }

    #[test]
    fn grouping_counts_and_order() {
        let items = vec![item::<f64>("i1", vec![0.0])];
        let recs = vec![
            record("i1", "c1", "a1", 1),
            record("i1", "c1", "a2", 0),
            record("i1", "c2", "a1", -1),
        ];
        let ds = Dataset::from_records(items, &recs).unwrap();
        let groups = group_annotations(&ds);
        assert_eq!(groups.group_count(), 2);
        let g11 = groups.group("i1", "c1").unwrap();
        assert_eq!(g11, vec![("a1", Label::Positive), ("a2", Label::Neutral)]);
        let g12 = groups.group("i1", "c2").unwrap();
        assert_eq!(g12, vec![("a1", Label::Negative)]);
        assert_eq!(groups.total_annotations(), ds.annotation_count());
        assert!(groups.group("i1", "zzz").is_none());
    }

    #[test]
    fn duplicate_annotations_are_kept() {
        // Same annotator labeling the same (item, context) twice: both
        // records are retained.
        let items = vec![item::<f64>("i1", vec![0.0])];
        let recs = vec![record("i1", "c1", "a1", 1), record("i1", "c1", "a1", -1)];
        let ds = Dataset::from_records(items, &recs).unwrap();
        assert_eq!(ds.annotation_count(), 2);
        let groups = group_annotations(&ds);
        assert_eq!(groups.group("i1", "c1").unwrap().len(), 2);
    }

    #[test]
    fn round_trip_dense_dataset() {
        let dir = TempDir::new().unwrap();
        let mut items = vec![
            item::<f64>("i1", vec![0.25, -1.5]),
            item("i2", vec![1.0 / 3.0, 2.0_f64.powi(-30)]),
        ];
        items[0].gold_label = Some(Label::Positive);
        let recs = vec![
            record("i1", "c1", "a1", 1),
            record("i2", "c2", "a1", -1),
            record("i2", "c1", "a2", 0),
        ];
        let ds = Dataset::from_records(items, &recs).unwrap();
        let ann = dir.path().join("a.csv");
        let feat = dir.path().join("f.csv");
        let gold = dir.path().join("g.csv");
        save_dataset(&ds, &ann, &feat, Some(&gold)).unwrap();
        let back: Dataset<f64> = load_dataset(&ann, &feat, Some(&gold)).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn round_trip_sparse_dataset_preserves_dim() {
        let dir = TempDir::new().unwrap();
        let items = vec![
            Item {
                id: "i1".into(),
                features: FeatureVector::sparse(5, vec![(1, 2.0)]).unwrap(),
                gold_label: None,
            },
            Item {
                id: "i2".into(),
                features: FeatureVector::sparse(5, vec![]).unwrap(),
                gold_label: None,
            },
        ];
        let recs = vec![record("i1", "c1", "a1", 1), record("i2", "c1", "a1", 0)];
        let ds = Dataset::from_records(items, &recs).unwrap();
        let ann = dir.path().join("a.csv");
        let feat = dir.path().join("f.csv");
        save_dataset(&ds, &ann, &feat, None).unwrap();
        let back: Dataset<f64> = load_dataset(&ann, &feat, None).unwrap();
        assert_eq!(back.feature_dim(), 5);
        assert_eq!(ds, back);
    }

    #[test]
    fn feature_vector_semantic_equality() {
        let dense = FeatureVector::dense(vec![0.0, 2.0, 0.0]);
        let sparse = FeatureVector::sparse(3, vec![(1, 2.0)]).unwrap();
        assert_eq!(dense, sparse);
        let other = FeatureVector::sparse(3, vec![(2, 2.0)]).unwrap();
        assert_ne!(dense, other);
    }

    #[test]
    fn annotations_only_loader() {
        let dir = TempDir::new().unwrap();
        let ann = write_file(
            &dir,
            "ann.csv",
            "item_id,context_id,annotator_id,label\ni1,c1,a1,1\ni2,c1,a2,0\ni1,c2,a1,-1\n",
        );
        let ds: Dataset<f64> = load_annotations_only(&ann).unwrap();
        assert_eq!(ds.n_items(), 2);
        assert_eq!(ds.feature_dim(), 0);
        assert_eq!(ds.contexts(), &["c1".to_string(), "c2".to_string()]);
    }
}

//! Corpus JSONL, label JSONL, and the on-disk layout of a dataset directory.
//!
//! A dataset directory holds
//!
//! | file | content |
//! |---|---|
//! | `train.jsonl`, `dev.jsonl`, `test.jsonl` | one document per line |
//! | `sentence_features.txt`, `image_features.txt` | feature tables |
//! | `embeddings.txt` | optional word embedding table |
//! | `labels.jsonl` | optional per-image class labels |
//! | `manifest.json` | written by `gen` |

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use docalign_core::baselines::LabelFile;
use docalign_core::corpus::{
    Corpus, Document, EmbeddingTable, FeatureTable, GeneratorProfile, ImageItem, SentenceItem, Split, SyntheticCorpus,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{load_feature_table, save_feature_table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentenceRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feat: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageRecord {
    pub id: String,
    pub feat: String,
}

/// One line of a corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentRecord {
    pub id: String,
    pub sentences: Vec<SentenceRecord>,
    pub images: Vec<ImageRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<Vec<[usize; 2]>>,
}

impl From<&Document> for DocumentRecord {
    fn from(doc: &Document) -> Self {
        DocumentRecord {
            id: doc.id.clone(),
            sentences: doc
                .sentences
                .iter()
                .map(|s| SentenceRecord { id: s.id.clone(), tokens: s.tokens.clone(), feat: s.feat.clone() })
                .collect(),
            images: doc.images.iter().map(|v| ImageRecord { id: v.id.clone(), feat: v.feat.clone() }).collect(),
            gold: doc.gold.as_ref().map(|g| g.iter().map(|&(s, v)| [s, v]).collect()),
        }
    }
}

impl From<DocumentRecord> for Document {
    fn from(r: DocumentRecord) -> Self {
        Document {
            id: r.id,
            sentences: r
                .sentences
                .into_iter()
                .map(|s| SentenceItem { id: s.id, tokens: s.tokens, feat: s.feat })
                .collect(),
            images: r.images.into_iter().map(|v| ImageItem { id: v.id, feat: v.feat }).collect(),
            gold: r.gold.map(|g| g.into_iter().map(|[s, v]| (s, v)).collect()),
        }
    }
}

/// Feature tables shared by every split of a dataset.
#[derive(Debug, Clone)]
pub struct Tables {
    pub sentence_features: Arc<FeatureTable>,
    pub image_features: Arc<FeatureTable>,
    pub embeddings: Option<Arc<EmbeddingTable>>,
}

/// Reads JSON values one per non-blank line.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut out, &item).map_err(|e| Error::io(path, e.into()))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::io(path, e.into()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

pub fn load_corpus(path: &Path, split: Split, tables: &Tables) -> Result<Corpus> {
    let records: Vec<DocumentRecord> = read_jsonl(path)?;
    let documents = records.into_iter().map(Document::from).collect();
    Ok(Corpus::new(
        documents,
        split,
        tables.sentence_features.clone(),
        tables.image_features.clone(),
        tables.embeddings.clone(),
    )?)
}

pub fn save_corpus(path: &Path, corpus: &Corpus) -> Result<()> {
    write_jsonl(path, corpus.documents.iter().map(DocumentRecord::from))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelRecord {
    image: String,
    labels: Vec<(String, f64)>,
}

pub fn load_labels(path: &Path) -> Result<LabelFile> {
    let mut file = LabelFile::default();
    for record in read_jsonl::<LabelRecord>(path)? {
        file.insert(record.image, record.labels)?;
    }
    Ok(file)
}

pub fn save_labels(path: &Path, labels: &LabelFile) -> Result<()> {
    write_jsonl(path, labels.iter().map(|(image, l)| LabelRecord { image: image.to_owned(), labels: l.to_vec() }))
}

/// Counts for one split in the generator manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub documents: usize,
    pub sentences: usize,
    pub images: usize,
    pub gold_edges: usize,
    /// Gold edges over candidate edges, averaged over documents.
    pub mean_density: f64,
}

impl SplitSummary {
    pub fn of(corpus: &Corpus) -> Self {
        let docs = &corpus.documents;
        SplitSummary {
            documents: docs.len(),
            sentences: docs.iter().map(|d| d.n()).sum(),
            images: docs.iter().map(|d| d.m()).sum(),
            gold_edges: docs.iter().map(|d| d.gold_edges().len()).sum(),
            mean_density: if docs.is_empty() {
                0.0
            } else {
                docs.iter().map(|d| d.density()).sum::<f64>() / docs.len() as f64
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub profile: GeneratorProfile,
    pub seed: u64,
    /// Density every generated document has.
    pub density: f64,
    pub train: SplitSummary,
    pub dev: SplitSummary,
    pub test: SplitSummary,
}

/// Paths of the files in a dataset directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataDir {
    pub root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DataDir { root: root.into() }
    }

    pub fn split_path(&self, split: Split) -> PathBuf {
        self.root.join(match split {
            Split::Train => "train.jsonl",
            Split::Dev => "dev.jsonl",
            Split::Test => "test.jsonl",
        })
    }

    pub fn sentence_features(&self) -> PathBuf {
        self.root.join("sentence_features.txt")
    }

    pub fn image_features(&self) -> PathBuf {
        self.root.join("image_features.txt")
    }

    pub fn embeddings(&self) -> PathBuf {
        self.root.join("embeddings.txt")
    }

    pub fn labels(&self) -> PathBuf {
        self.root.join("labels.jsonl")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    /// Loads both feature tables and, when present, the embedding table.
    pub fn load_tables(&self) -> Result<Tables> {
        let embeddings = self.embeddings();
        Ok(Tables {
            sentence_features: Arc::new(load_feature_table(&self.sentence_features())?),
            image_features: Arc::new(load_feature_table(&self.image_features())?),
            embeddings: if embeddings.exists() { Some(Arc::new(load_feature_table(&embeddings)?)) } else { None },
        })
    }

    pub fn load_split(&self, split: Split, tables: &Tables) -> Result<Corpus> {
        load_corpus(&self.split_path(split), split, tables)
    }

    pub fn load_labels(&self) -> Result<LabelFile> {
        load_labels(&self.labels())
    }

    /// Writes every split, table, label file, and the manifest.
    pub fn save_synthetic(&self, data: &SyntheticCorpus, profile: &GeneratorProfile) -> Result<Manifest> {
        std::fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))?;
        for corpus in [&data.train, &data.dev, &data.test] {
            save_corpus(&self.split_path(corpus.split), corpus)?;
        }
        save_feature_table(&self.sentence_features(), &data.train.sentence_features)?;
        save_feature_table(&self.image_features(), &data.train.image_features)?;
        if let Some(table) = &data.train.embeddings {
            save_feature_table(&self.embeddings(), table)?;
        }
        if let Some(labels) = &data.labels {
            save_labels(&self.labels(), labels)?;
        }
        let manifest = Manifest {
            profile: profile.clone(),
            seed: profile.seed,
            density: profile.density(),
            train: SplitSummary::of(&data.train),
            dev: SplitSummary::of(&data.dev),
            test: SplitSummary::of(&data.test),
        };
        write_json(&self.manifest(), &manifest)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_round_trip() {
        let line = r#"{"id":"d","sentences":[{"id":"s0","tokens":["a","b"]},{"id":"s1","feat":"f1"}],"images":[{"id":"v0","feat":"i0"}],"gold":[[1,0]]}"#;
        let record: DocumentRecord = serde_json::from_str(line).unwrap();
        let doc = Document::from(record.clone());
        assert_eq!(doc.gold, Some(vec![(1, 0)]));
        assert_eq!(DocumentRecord::from(&doc), record);
        assert_eq!(serde_json::to_string(&record).unwrap(), line);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let line = r#"{"id":"d","sentences":[],"images":[],"extra":1}"#;
        assert!(serde_json::from_str::<DocumentRecord>(line).is_err());
    }
}

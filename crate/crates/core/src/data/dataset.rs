//! Dataset items, directory ingestion and the line-delimited manifest.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{decode_image, load_image, ImageTensor};

/// Ground truth: real photographs are class 0, generated images class 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Real = 0,
    Fake = 1,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Label::Real),
            1 => Ok(Label::Fake),
            _ => Err(Error::InvalidConfig(format!("label {v} is not 0 or 1"))),
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "real" => Ok(Label::Real),
            "1" | "fake" => Ok(Label::Fake),
            _ => Err(Error::InvalidConfig(format!("unknown label `{s}`"))),
        }
    }
}

/// Where an item's pixels come from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ItemSource {
    Path(PathBuf),
    /// Regenerated on demand from the synthetic generator.
    Synthetic { seed: u64 },
}

impl fmt::Display for ItemSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ItemSource::Path(p) => write!(f, "{}", p.display()),
            ItemSource::Synthetic { seed } => write!(f, "synth:{seed:016x}"),
        }
    }
}

impl ItemSource {
    fn parse(s: &str) -> Result<Self> {
        match s.strip_prefix("synth:") {
            Some(hex) => u64::from_str_radix(hex, 16)
                .map(|seed| ItemSource::Synthetic { seed })
                .map_err(|_| Error::InvalidConfig(format!("bad synthetic seed `{hex}`"))),
            None => Ok(ItemSource::Path(PathBuf::from(s))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DatasetItem {
    pub source: ItemSource,
    pub label: Label,
    pub class_tag: String,
}

/// Subset an item was assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}

/// A file that could not be ingested.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkipRecord {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub items: Vec<DatasetItem>,
    pub skipped: Vec<SkipRecord>,
}

/// Collects every decodable PNG/JPEG directly inside `path`, in
/// lexicographic file-name order. Files that fail to decode are recorded in
/// [`IngestReport::skipped`].
pub fn ingest_directory(path: &Path, label: Label, class_tag: &str) -> Result<IngestReport> {
    if !path.is_dir() {
        return Err(Error::MissingDirectory(path.to_path_buf()));
    }
    let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    entries.sort();
    let mut report = IngestReport::default();
    for file in entries {
        let outcome = std::fs::read(&file)
            .map_err(|e| e.to_string())
            .and_then(|bytes| decode_image(&bytes).map(|_| ()).map_err(|e| e.to_string()));
        match outcome {
            Ok(()) => report.items.push(DatasetItem {
                source: ItemSource::Path(file),
                label,
                class_tag: class_tag.to_string(),
            }),
            Err(reason) => report.skipped.push(SkipRecord { path: file, reason }),
        }
    }
    Ok(report)
}

/// One manifest line. Field order is fixed: source, label, class_tag, split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub source: String,
    pub label: u8,
    pub class_tag: String,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub item: DatasetItem,
    pub split: Option<Split>,
}

/// JSON-lines manifest. Relative paths are resolved against the manifest's
/// directory when images are loaded.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn from_items(items: impl IntoIterator<Item = DatasetItem>) -> Self {
        Manifest {
            entries: items
                .into_iter()
                .map(|item| ManifestEntry { item, split: None })
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::read(BufReader::new(text.as_bytes()))
    }

    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Manifest {
                line: i + 1,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| Error::Manifest { line: i + 1, message };
            let rec: ManifestRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            let label = Label::from_u8(rec.label).map_err(|e| bad(e.to_string()))?;
            let source = ItemSource::parse(&rec.source).map_err(|e| bad(e.to_string()))?;
            entries.push(ManifestEntry {
                item: DatasetItem {
                    source,
                    label,
                    class_tag: rec.class_tag,
                },
                split: rec.split,
            });
        }
        Ok(Manifest { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let rec = ManifestRecord {
                source: e.item.source.to_string(),
                label: e.item.label.as_u8(),
                class_tag: e.item.class_tag.clone(),
                split: e.split,
            };
            out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn items(&self) -> Vec<DatasetItem> {
        self.entries.iter().map(|e| e.item.clone()).collect()
    }

    /// True when every entry carries a split assignment.
    pub fn is_split(&self) -> bool {
        !self.entries.is_empty() && self.entries.iter().all(|e| e.split.is_some())
    }

    pub fn subset(&self, split: Split) -> Vec<DatasetItem> {
        self.entries
            .iter()
            .filter(|e| e.split == Some(split))
            .map(|e| e.item.clone())
            .collect()
    }
}

/// Loads an item's pixels from disk, resolving relative paths against
/// `base_dir`. Synthetic items must be regenerated by the caller.
pub fn load_item(item: &DatasetItem, base_dir: &Path) -> Result<ImageTensor> {
    match &item.source {
        ItemSource::Path(p) if p.is_absolute() => load_image(p),
        ItemSource::Path(p) => load_image(&base_dir.join(p)),
        ItemSource::Synthetic { .. } => Err(Error::InvalidConfig(
            "synthetic items have no file; regenerate them from the synthetic config".into(),
        )),
    }
}

//! Corpus discovery: ESC-50 metadata, generated-sample trees, the JSON
//! manifest and its validation report.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};

/// Source name given to ESC-50 entries.
pub const ESC50_SOURCE: &str = "esc50";

/// Default layout under each generated-source root.
pub const DEFAULT_LAYOUT: &str = "{label}/{id}.{ext}";

/// Extensions recognised as audio during discovery.
pub const AUDIO_EXTENSIONS: &[&str] = &["wav", "flac", "mp3", "ogg", "aif", "aiff", "m4a"];

/// Extensions the decoder can read.
pub const SUPPORTED_EXTENSIONS: &[&str] = &["wav"];

/// Lowercases, maps underscores to spaces and collapses whitespace.
pub fn normalize_label(raw: &str) -> String {
    raw.replace('_', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn extension_of(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
}

pub fn is_supported_audio(path: &Path) -> bool {
    extension_of(path).is_some_and(|e| SUPPORTED_EXTENSIONS.contains(&e.as_str()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Esc50MetadataRow {
    pub filename: String,
    /// Class id in 0..=49.
    pub target: u8,
    /// Category with underscores replaced by spaces.
    pub category: String,
    pub fold: Option<String>,
    pub take: Option<String>,
    pub esc10: Option<String>,
    pub src_file: Option<String>,
}

/// Parses the ESC-50 metadata table (`meta/esc50.csv`).
pub fn load_esc50_metadata(csv_text: &str) -> Result<Vec<Esc50MetadataRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| column(name).ok_or_else(|| Error::MissingColumn(name.into()));
    let (filename, target, category) = (
        required("filename")?,
        required("target")?,
        required("category")?,
    );
    let optional = ["fold", "take", "esc10", "src_file"].map(column);

    let mut rows = Vec::new();
    let mut classes: BTreeMap<u8, String> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("").to_string();
        let raw_target = field(target);
        let target: u8 = match raw_target.parse() {
            Ok(t) if t <= 49 => t,
            Ok(t) => {
                return Err(Error::Parse {
                    line,
                    reason: format!("target {t} outside 0..=49"),
                })
            }
            Err(_) => {
                return Err(Error::Parse {
                    line,
                    reason: format!("target {raw_target:?} is not an integer"),
                })
            }
        };
        let category = normalize_label(&field(category));
        match classes.get(&target) {
            Some(known) if *known != category => {
                return Err(Error::Parse {
                    line,
                    reason: format!("target {target} is both {known:?} and {category:?}"),
                })
            }
            _ => {
                classes.insert(target, category.clone());
            }
        }
        let [fold, take, esc10, src_file] = optional.map(|c| c.map(field));
        rows.push(Esc50MetadataRow {
            filename: field(filename),
            target,
            category,
            fold,
            take,
            esc10,
            src_file,
        });
    }
    let mut seen = BTreeMap::new();
    for (t, c) in &classes {
        if let Some(other) = seen.insert(c.clone(), *t) {
            return Err(Error::Data(format!(
                "category {c:?} maps to targets {other} and {t}"
            )));
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub label: String,
    pub source: String,
    pub sample_id: String,
    pub file_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub reference_source: Option<String>,
    pub labels: BTreeSet<String>,
    pub sources: BTreeSet<String>,
    pub entries: Vec<CorpusEntry>,
}

impl CorpusManifest {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: CorpusManifest = serde_json::from_str(text)?;
        for e in &manifest.entries {
            if !manifest.labels.contains(&e.label) || !manifest.sources.contains(&e.source) {
                return Err(Error::Data(format!(
                    "entry {}/{}/{} is not covered by the manifest's labels or sources",
                    e.source, e.label, e.sample_id
                )));
            }
        }
        Ok(manifest)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Compiles a layout such as `{label}/{id}.{ext}` into a regex over
/// `/`-separated relative paths.
pub fn layout_regex(layout: &str) -> Result<Regex> {
    let mut pattern = String::from("^");
    let mut rest = layout;
    let mut seen = BTreeSet::new();
    while let Some(start) = rest.find('{') {
        pattern.push_str(&regex::escape(&rest[..start]));
        let end = rest[start..]
            .find('}')
            .ok_or_else(|| Error::Usage(format!("unclosed placeholder in layout {layout:?}")))?;
        let name = &rest[start + 1..start + end];
        let group = match name {
            "label" | "id" => "[^/]+?",
            "ext" => "[A-Za-z0-9]+",
            "_" => "[^/]*?",
            _ => {
                return Err(Error::Usage(format!(
                    "unknown placeholder {{{name}}} in layout {layout:?}"
                )))
            }
        };
        if name == "_" {
            pattern.push_str(&format!("(?:{group})"));
        } else {
            if !seen.insert(name) {
                return Err(Error::Usage(format!(
                    "placeholder {{{name}}} repeated in layout {layout:?}"
                )));
            }
            pattern.push_str(&format!("(?P<{name}>{group})"));
        }
        rest = &rest[start + end + 1..];
    }
    pattern.push_str(&regex::escape(rest));
    pattern.push('$');
    for required in ["label", "id"] {
        if !seen.contains(required) {
            return Err(Error::Usage(format!(
                "layout {layout:?} lacks {{{required}}}"
            )));
        }
    }
    Regex::new(&pattern).map_err(|e| Error::Usage(format!("layout {layout:?}: {e}")))
}

/// Inputs to [`build_manifest`].
#[derive(Debug, Clone, Default)]
pub struct ManifestInputs {
    /// Generated sources, `name → root directory`.
    pub generated: BTreeMap<String, PathBuf>,
    /// ESC-50 metadata rows and the directory holding their audio files.
    pub esc50: Option<(Vec<Esc50MetadataRow>, PathBuf)>,
    /// Keep only these labels (normalized before comparison).
    pub label_filter: Option<BTreeSet<String>>,
    /// Defaults to [`DEFAULT_LAYOUT`].
    pub layout: Option<String>,
}

pub fn build_manifest(inputs: &ManifestInputs) -> Result<CorpusManifest> {
    let layout = layout_regex(inputs.layout.as_deref().unwrap_or(DEFAULT_LAYOUT))?;
    let filter: Option<BTreeSet<String>> = inputs
        .label_filter
        .as_ref()
        .map(|f| f.iter().map(|l| normalize_label(l)).collect());
    let keep = |label: &str| filter.as_ref().is_none_or(|f| f.contains(label));

    let mut entries = Vec::new();
    let mut sources = BTreeSet::new();
    for (source, root) in &inputs.generated {
        if source == ESC50_SOURCE && inputs.esc50.is_some() {
            return Err(Error::Usage(format!(
                "source name {ESC50_SOURCE:?} is reserved for ESC-50"
            )));
        }
        if !root.is_dir() {
            return Err(Error::Data(format!(
                "source {source}: {} is not a directory",
                root.display()
            )));
        }
        sources.insert(source.clone());
        for item in WalkDir::new(root).sort_by_file_name() {
            let item = item.map_err(|e| Error::Data(format!("source {source}: {e}")))?;
            if !item.file_type().is_file() {
                continue;
            }
            let path = item.path();
            if !extension_of(path).is_some_and(|e| AUDIO_EXTENSIONS.contains(&e.as_str())) {
                continue;
            }
            let relative = path.strip_prefix(root).expect("walk stays under root");
            let relative = relative
                .iter()
                .filter_map(|c| c.to_str())
                .collect::<Vec<_>>()
                .join("/");
            let Some(caps) = layout.captures(&relative) else {
                log::debug!("{} does not match the layout", path.display());
                continue;
            };
            let label = normalize_label(&caps["label"]);
            if keep(&label) {
                entries.push(CorpusEntry {
                    label,
                    source: source.clone(),
                    sample_id: caps["id"].to_string(),
                    file_path: path.to_path_buf(),
                });
            }
        }
    }

    let reference_source = inputs.esc50.as_ref().map(|(rows, dir)| {
        sources.insert(ESC50_SOURCE.to_string());
        for row in rows.iter().filter(|r| keep(&r.category)) {
            let stem = Path::new(&row.filename)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or(&row.filename);
            entries.push(CorpusEntry {
                label: row.category.clone(),
                source: ESC50_SOURCE.to_string(),
                sample_id: stem.to_string(),
                file_path: dir.join(&row.filename),
            });
        }
        ESC50_SOURCE.to_string()
    });

    if entries.is_empty() {
        return Err(Error::NoEntries);
    }
    entries.sort();
    for pair in entries.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if (&a.label, &a.source, &a.sample_id) == (&b.label, &b.source, &b.sample_id) {
            return Err(Error::Conflict(format!(
                "label {:?}, source {:?}, sample {:?} ({} and {})",
                a.label,
                a.source,
                a.sample_id,
                a.file_path.display(),
                b.file_path.display()
            )));
        }
    }
    let labels = entries.iter().map(|e| e.label.clone()).collect();
    Ok(CorpusManifest {
        reference_source,
        labels,
        sources,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellCount {
    pub label: String,
    pub source: String,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    /// Every label × source pair, including empty ones.
    pub cells: Vec<CellCount>,
    pub missing: Vec<PathBuf>,
    pub unsupported: Vec<PathBuf>,
    pub decode_failures: Vec<(PathBuf, String)>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.missing.is_empty() && self.unsupported.is_empty() && self.decode_failures.is_empty()
    }

    pub fn count(&self, label: &str, source: &str) -> Option<usize> {
        self.cells
            .iter()
            .find(|c| c.label == label && c.source == source)
            .map(|c| c.count)
    }
}

enum FileStatus {
    Ok,
    Missing,
    Unsupported,
    Undecodable(String),
}

/// Checks every entry's file. With `decode`, supported files are also
/// decoded. Problems are collected, never raised.
pub fn validate_manifest(manifest: &CorpusManifest, decode: bool) -> ValidationReport {
    let mut counts: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for label in &manifest.labels {
        for source in &manifest.sources {
            counts.insert((label, source), 0);
        }
    }
    for e in &manifest.entries {
        *counts.entry((&e.label, &e.source)).or_insert(0) += 1;
    }
    let statuses: Vec<FileStatus> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let path = &e.file_path;
            if !path.is_file() {
                FileStatus::Missing
            } else if !is_supported_audio(path) {
                FileStatus::Unsupported
            } else if decode {
                match fs::read(path) {
                    Ok(bytes) => match erakit_core::audio::decode_wav(&bytes) {
                        Ok(_) => FileStatus::Ok,
                        Err(err) => FileStatus::Undecodable(err.to_string()),
                    },
                    Err(err) => FileStatus::Undecodable(err.to_string()),
                }
            } else {
                FileStatus::Ok
            }
        })
        .collect();

    let mut report = ValidationReport {
        cells: counts
            .into_iter()
            .map(|((label, source), count)| CellCount {
                label: label.into(),
                source: source.into(),
                count,
            })
            .collect(),
        ..ValidationReport::default()
    };
    for (entry, status) in manifest.entries.iter().zip(statuses) {
        let path = entry.file_path.clone();
        match status {
            FileStatus::Ok => {}
            FileStatus::Missing => report.missing.push(path),
            FileStatus::Unsupported => report.unsupported.push(path),
            FileStatus::Undecodable(reason) => report.decode_failures.push((path, reason)),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIXTURE: &str = "filename,fold,target,category,esc10,src_file,take\n\
        1-100032-A-0.wav,1,0,dog,True,100032,A\n\
        1-100038-A-14.wav,1,0,dog,False,100038,A\n\
        1-17367-A-10.wav,1,10,rain,True,17367,A\n";

    #[test]
    fn metadata_fixture() {
        let rows = load_esc50_metadata(FIXTURE).unwrap();
        assert_eq!(rows.len(), 3);
        let labels: BTreeSet<_> = rows.iter().map(|r| r.category.as_str()).collect();
        assert_eq!(labels.len(), 2);
        assert_eq!(rows[2].fold.as_deref(), Some("1"));
    }

    #[test]
    fn header_only_is_empty() {
        assert!(load_esc50_metadata("filename,target,category\n")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn underscores_become_spaces() {
        let rows = load_esc50_metadata("filename,target,category\na.wav,20,crying_baby\n").unwrap();
        assert_eq!(rows[0].category, "crying baby");
    }

    #[test]
    fn missing_column_is_named() {
        let err = load_esc50_metadata("filename,category\na.wav,dog\n").unwrap_err();
        assert!(
            matches!(&err, Error::MissingColumn(c) if c == "target"),
            "{err}"
        );
        assert!(err.to_string().contains("target"));
    }

    #[test]
    fn bad_target_reports_line() {
        let err = load_esc50_metadata("filename,target,category\na.wav,1,dog\nb.wav,x,dog\n")
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(load_esc50_metadata("filename,target,category\na.wav,50,dog\n").is_err());
    }

    #[test]
    fn category_target_must_be_one_to_one() {
        assert!(
            load_esc50_metadata("filename,target,category\na.wav,1,dog\nb.wav,1,cat\n").is_err()
        );
        assert!(
            load_esc50_metadata("filename,target,category\na.wav,1,dog\nb.wav,2,dog\n").is_err()
        );
    }

    #[test]
    fn layout_matching() {
        let re = layout_regex(DEFAULT_LAYOUT).unwrap();
        let caps = re.captures("crying_baby/007.wav").unwrap();
        assert_eq!((&caps["label"], &caps["id"]), ("crying_baby", "007"));
        assert!(re.captures("a/b/c.wav").is_none());
        let nested = layout_regex("{_}/{label}/{id}.{ext}").unwrap();
        assert_eq!(&nested.captures("run1/rain/x.y.wav").unwrap()["id"], "x.y");
        assert!(layout_regex("{id}.wav").is_err());
        assert!(layout_regex("{label}/{id}.{nope}").is_err());
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(s in "[A-Za-z_ ]{0,24}") {
            let once = normalize_label(&s);
            prop_assert_eq!(normalize_label(&once), once.clone());
            prop_assert!(!once.contains('_'));
        }

        #[test]
        fn row_count_matches_data_lines(cats in proptest::collection::vec("[a-z]{1,8}", 0..40)) {
            let mut ids = BTreeMap::new();
            let mut text = String::from("filename,target,category\n");
            for (i, c) in cats.iter().enumerate() {
                let next = ids.len() as u8;
                let t = *ids.entry(c.clone()).or_insert(next);
                if t > 49 { continue; }
                text.push_str(&format!("{i}.wav,{t},{c}\n"));
            }
            let lines = text.lines().count() - 1;
            prop_assert_eq!(load_esc50_metadata(&text).unwrap().len(), lines);
        }
    }
}

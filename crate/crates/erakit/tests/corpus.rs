use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use erakit::corpus::{
    build_manifest, load_esc50_metadata, validate_manifest, CorpusManifest, ManifestInputs,
};
use erakit::Error;

fn touch(path: &Path) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, b"").unwrap();
}

fn tree(root: &Path, labels: &[&str], n: usize) {
    for label in labels {
        for i in 0..n {
            touch(&root.join(label).join(format!("{i:03}.wav")));
        }
    }
}

fn inputs(sources: &[(&str, PathBuf)]) -> ManifestInputs {
    ManifestInputs {
        generated: sources
            .iter()
            .map(|(s, p)| (s.to_string(), p.clone()))
            .collect(),
        ..ManifestInputs::default()
    }
}

#[test]
fn one_source_hundred_clips() {
    let dir = tempfile::tempdir().unwrap();
    tree(&dir.path().join("gen"), &["thunder"], 100);
    touch(&dir.path().join("gen/thunder/notes.txt"));
    let m = build_manifest(&inputs(&[("gen", dir.path().join("gen"))])).unwrap();
    assert_eq!(m.entries.len(), 100);
    assert_eq!(m.labels, BTreeSet::from(["thunder".to_string()]));
    assert_eq!(m.entries[7].sample_id, "007");
    assert!(m.reference_source.is_none());
}

#[test]
fn two_identical_trees_double_entries() {
    let dir = tempfile::tempdir().unwrap();
    for s in ["a", "b"] {
        tree(&dir.path().join(s), &["rain", "dog"], 5);
    }
    let m = build_manifest(&inputs(&[
        ("a", dir.path().join("a")),
        ("b", dir.path().join("b")),
    ]))
    .unwrap();
    assert_eq!(m.entries.len(), 20);
    assert_eq!(m.labels.len(), 2);
    let keys: Vec<_> = m
        .entries
        .iter()
        .map(|e| (&e.label, &e.source, &e.sample_id))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn label_filter_and_normalization() {
    let dir = tempfile::tempdir().unwrap();
    tree(&dir.path().join("g"), &["rain", "Crying_Baby", "wind"], 3);
    let mut i = inputs(&[("g", dir.path().join("g"))]);
    i.label_filter = Some(BTreeSet::from([
        "crying baby".to_string(),
        "rain".to_string(),
    ]));
    let m = build_manifest(&i).unwrap();
    assert_eq!(
        m.labels,
        BTreeSet::from(["crying baby".to_string(), "rain".to_string()])
    );
    assert_eq!(m.entries.len(), 6);
}

#[test]
fn duplicate_and_empty_errors() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    touch(&g.join("rain/001.wav"));
    touch(&g.join("rain/001.flac"));
    assert!(matches!(
        build_manifest(&inputs(&[("g", g.clone())])),
        Err(Error::Conflict(_))
    ));

    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let err = build_manifest(&inputs(&[("e", empty)])).unwrap_err();
    assert!(matches!(err, Error::NoEntries));
    assert!(err.to_string().contains("no entries"));
}

#[test]
fn serialization_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    tree(&dir.path().join("x"), &["b", "a"], 4);
    tree(&dir.path().join("y"), &["a"], 2);
    let i = inputs(&[("y", dir.path().join("y")), ("x", dir.path().join("x"))]);
    let first = build_manifest(&i).unwrap().to_json().unwrap();
    let second = build_manifest(&i).unwrap().to_json().unwrap();
    assert_eq!(first, second);
    assert_eq!(
        CorpusManifest::from_json(&first).unwrap(),
        build_manifest(&i).unwrap()
    );
}

#[test]
fn esc50_reference_entries() {
    let dir = tempfile::tempdir().unwrap();
    let audio = dir.path().join("audio");
    let mut csv = String::from("filename,fold,target,category,esc10,src_file,take\n");
    let mut rows = 0;
    for (t, cat) in ["dog", "crying_baby"].iter().enumerate() {
        for k in 0..40 {
            let name = format!("1-{t}{k:03}-A-{t}.wav");
            touch(&audio.join(&name));
            csv.push_str(&format!("{name},1,{t},{cat},False,{k},A\n"));
            rows += 1;
        }
    }
    let meta = load_esc50_metadata(&csv).unwrap();
    assert_eq!(meta.len(), rows);
    tree(&dir.path().join("gen"), &["crying_baby"], 100);
    let mut i = inputs(&[("gen", dir.path().join("gen"))]);
    i.esc50 = Some((meta, audio));
    let m = build_manifest(&i).unwrap();
    assert_eq!(m.reference_source.as_deref(), Some("esc50"));
    let report = validate_manifest(&m, false);
    assert!(report.is_clean(), "{report:?}");
    assert_eq!(report.cells.len(), 4);
    assert_eq!(report.count("crying baby", "esc50"), Some(40));
    assert_eq!(report.count("crying baby", "gen"), Some(100));
    assert_eq!(report.count("dog", "gen"), Some(0));
}

#[test]
fn validation_flags_problems_without_mutating() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    tree(&g, &["rain"], 3);
    touch(&g.join("rain/003.mp3"));
    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let m = build_manifest(&inputs(&[("g", g.clone()), ("quiet", empty)])).unwrap();
    fs::remove_file(g.join("rain/001.wav")).unwrap();
    let before = m.clone();
    let report = validate_manifest(&m, true);
    assert_eq!(m, before);
    assert_eq!(report.missing, vec![g.join("rain/001.wav")]);
    assert_eq!(report.unsupported, vec![g.join("rain/003.mp3")]);
    assert_eq!(report.decode_failures.len(), 2, "empty files cannot decode");
    assert_eq!(report.count("rain", "quiet"), Some(0));
    let counts: BTreeMap<_, _> = report
        .cells
        .iter()
        .map(|c| (c.source.as_str(), c.count))
        .collect();
    assert_eq!(counts["g"], 4);
}

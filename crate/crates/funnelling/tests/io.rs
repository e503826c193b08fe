use std::fs;

use funnel_core::corpus::LabelSet;
use funnel_core::funnel::{train_funnel, train_naive, FunnelConfig};
use funnel_core::synthetic::{SyntheticConfig, SyntheticWorld};
use funnelling::corpus_io::{load_corpus, write_corpus};
use funnelling::embeddings_io::{read_embeddings, write_embeddings};
use funnelling::model_io::{ModelBody, ModelFile, MODEL_FORMAT_VERSION};
use funnelling::predictions::{read_predictions, write_predictions, PredictionRecord};
use funnelling::Error;

fn world(parallel: bool) -> SyntheticWorld {
    let cfg = SyntheticConfig {
        n_languages: 3,
        n_classes: 5,
        vocab_per_language: 150,
        docs_per_language_train: 30,
        docs_per_language_test: 20,
        mean_doc_length: 30,
        class_prevalence_range: (0.1, 0.3),
        parallel,
        ..SyntheticConfig::default()
    };
    SyntheticWorld::new(&cfg).unwrap()
}

#[test]
fn corpus_and_embeddings_round_trip() {
    for parallel in [false, true] {
        let dir = tempfile::tempdir().unwrap();
        let w = world(parallel);
        let corpus = w.corpus().unwrap();
        let emb = w.embeddings(8, 0.1).unwrap();
        let manifest = write_corpus(dir.path(), &corpus, Some(&emb)).unwrap();
        let loaded = load_corpus(&manifest).unwrap();
        assert_eq!(loaded.corpus, corpus);
        assert_eq!(loaded.corpus.alignment().is_some(), parallel);
        assert_eq!(loaded.embeddings(None).unwrap(), emb);
    }
}

#[test]
fn embedding_files_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let emb = world(false).embeddings(4, 0.3).unwrap();
    let table = &emb["en"];
    let path = dir.path().join("en.vec");
    write_embeddings(&path, table).unwrap();
    assert_eq!(&read_embeddings(&path).unwrap(), table);
}

#[test]
fn dataset_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = world(false).corpus().unwrap();
    let manifest = write_corpus(dir.path(), &corpus, None).unwrap();
    let train = dir.path().join("es.train.txt");
    let mut text = fs::read_to_string(&train).unwrap();
    text.push_str("0 7:oops # broken\n");
    fs::write(&train, text).unwrap();
    match load_corpus(&manifest).unwrap_err() {
        Error::Parse { path, line, message } => {
            assert_eq!(path, train);
            assert_eq!(line, 31);
            assert!(message.contains("oops"));
        }
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn unsupported_manifest_versions_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = world(false).corpus().unwrap();
    let manifest = write_corpus(dir.path(), &corpus, None).unwrap();
    let text = fs::read_to_string(&manifest).unwrap();
    fs::write(&manifest, text.replace("\"version\": 1", "\"version\": 7")).unwrap();
    assert!(matches!(load_corpus(&manifest).unwrap_err(), Error::Format { .. }));
}

#[test]
fn model_files_round_trip_and_refuse_other_versions() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = world(false).corpus().unwrap();
    let cfg = FunnelConfig { grid: vec![1.0], ..FunnelConfig::default() };
    let funnel = ModelFile::new("fun_tat", ModelBody::Funnel(train_funnel(&corpus, &cfg).unwrap()));
    let naive = ModelFile::new("naive", ModelBody::Naive(train_naive(&corpus, &cfg).unwrap()));
    for (name, file) in [("f.json", &funnel), ("n.json", &naive)] {
        let path = dir.path().join(name);
        file.save(&path).unwrap();
        assert_eq!(&ModelFile::load(&path).unwrap(), file);
    }
    let path = dir.path().join("old.json");
    let mut old = naive.clone();
    old.format_version = MODEL_FORMAT_VERSION + 1;
    old.save(&path).unwrap();
    match ModelFile::load(&path).unwrap_err() {
        Error::ModelVersion { found, expected } => assert_eq!((found, expected), (MODEL_FORMAT_VERSION + 1, MODEL_FORMAT_VERSION)),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn prediction_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.tsv");
    let records = vec![
        PredictionRecord {
            doc_id: "en-te-00001".into(),
            language: "en".into(),
            posterior: Some(vec![0.0, 1e-300, 0.1 + 0.2, 1.0]),
            labels: LabelSet::new(vec![3, 2]),
        },
        PredictionRecord { doc_id: "it-te-00002".into(), language: "it".into(), posterior: None, labels: LabelSet::empty() },
    ];
    write_predictions(&path, &records).unwrap();
    assert_eq!(read_predictions(&path).unwrap(), records);
    write_predictions(&path, &[]).unwrap();
    assert!(read_predictions(&path).unwrap().is_empty());
    fs::write(&path, "a\tb\n").unwrap();
    assert!(matches!(read_predictions(&path).unwrap_err(), Error::Parse { line: 1, .. }));
}

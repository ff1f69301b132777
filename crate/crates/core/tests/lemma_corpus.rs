use hyperreg::lemma_lab::{run_corpus, write_report_csv, LemmaCorpus, MeanSquareConfig};

fn corpus() -> LemmaCorpus {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/lemma_corpus.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn every_corpus_instance_passes_exactly() {
    let rows = run_corpus(&corpus(), &MeanSquareConfig::default()).unwrap();
    let failures: Vec<_> = rows.iter().filter(|r| !r.passed()).collect();
    assert!(failures.is_empty(), "{failures:#?}");
    for check in ["nested_cauchy_schwarz", "counting_error", "mean_square"] {
        assert!(rows.iter().any(|r| r.check == check && r.status == "pass"), "{check}");
    }
    // The spec's hand case: coarse moment 1/4, fine moment 1/2.
    let blocked = rows.iter().find(|r| r.instance == "pairs-blocked").unwrap();
    assert_eq!((blocked.lhs.as_str(), blocked.rhs.as_str(), blocked.margin.as_str()), ("1/4", "1/2", "1/4"));
    let alternating = rows.iter().find(|r| r.instance == "pairs-alternating").unwrap();
    assert_eq!(alternating.margin, "0");
}

#[test]
fn report_is_deterministic() {
    let a = run_corpus(&corpus(), &MeanSquareConfig::default()).unwrap();
    let b = run_corpus(&corpus(), &MeanSquareConfig::default()).unwrap();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    write_report_csv(&a, &mut x).unwrap();
    write_report_csv(&b, &mut y).unwrap();
    assert_eq!(x, y);
}

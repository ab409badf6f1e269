use gfi_harness::data::{read_counts, read_grouped, read_matrix};
use gfi_harness::record::{
    find, read_table, summarize, to_bytes, CoverageRecord, CoverageSummary, Format, ValueRecord,
};
use gfi_harness::spec::{Design, Family, StudySpec};

fn rec(
    cell: &str,
    region: &str,
    level: f64,
    replicate: usize,
    contained: bool,
    size: Option<f64>,
) -> CoverageRecord {
    CoverageRecord {
        family: "binom_np".into(),
        cell: cell.into(),
        region: region.into(),
        level,
        replicate,
        contained,
        size,
    }
}

#[test]
fn coverage_records_round_trip_in_both_formats() {
    let rows = vec![
        rec("n=15,p=0.1", "belief_box", 0.95, 0, true, None),
        rec("n=15,p=0.1", "belief_box", 0.95, 1, false, Some(12.5)),
        rec("n=75,p=0.9", "plausibility_box", 0.5, 0, true, Some(1e-7)),
    ];
    for format in [Format::Csv, Format::Json] {
        let bytes = to_bytes(&rows, format).unwrap();
        let back: Vec<CoverageRecord> = read_table(format, bytes.as_slice()).unwrap();
        assert_eq!(back, rows, "{format:?}");
    }
}

#[test]
fn value_and_summary_tables_round_trip() {
    let values = vec![ValueRecord {
        family: "binom_n".into(),
        cell: "p=0.5,m=10".into(),
        replicate: 3,
        name: "mad_bayes".into(),
        value: 0.25,
    }];
    let summary = summarize(&[rec("a", "r", 0.9, 0, true, None)]);
    for format in [Format::Csv, Format::Json] {
        let v: Vec<ValueRecord> =
            read_table(format, to_bytes(&values, format).unwrap().as_slice()).unwrap();
        assert_eq!(v, values);
        let s: Vec<CoverageSummary> =
            read_table(format, to_bytes(&summary, format).unwrap().as_slice()).unwrap();
        assert_eq!(s, summary);
    }
}

#[test]
fn summary_counts_hits_and_keeps_cell_order() {
    let rows = vec![
        rec("second", "r", 0.9, 0, true, Some(1.0)),
        rec("first", "r", 0.9, 0, false, Some(3.0)),
        rec("second", "r", 0.9, 1, false, Some(2.0)),
        rec("second", "r", 0.9, 2, true, None),
        rec("second", "r", 0.5, 0, true, Some(9.0)),
    ];
    let s = summarize(&rows);
    assert_eq!(
        s.iter().map(|x| x.cell.as_str()).collect::<Vec<_>>(),
        ["second", "second", "first"]
    );
    let hit = find(&s, "second", "r", 0.9).unwrap();
    assert_eq!(hit.replicates, 3);
    assert!((hit.coverage - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(hit.median_size, Some(1.5));
    assert!(find(&s, "second", "r", 0.95).is_none());
}

#[test]
fn default_specs_validate_and_round_trip() {
    for family in [
        Family::Mvn,
        Family::Ranef,
        Family::BinomP,
        Family::BinomN,
        Family::BinomNp,
    ] {
        let spec = StudySpec::default_for(family);
        spec.validate().unwrap();
        assert_eq!(spec.family(), family);
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(StudySpec::from_json(&text).unwrap(), spec);
    }
}

#[test]
fn spec_json_reads_flat_layout() {
    let spec = StudySpec::from_json(
        r#"{ "family": "binom_n", "n0": 10, "p": [0.5, 0.99], "m": [100],
             "eps1": 1e-8, "draws": 1000, "replicates": 300,
             "levels": [0.8, 0.9, 0.95], "seed": 7 }"#,
    )
    .unwrap();
    assert_eq!(spec.replicates, 300);
    assert!(matches!(
        spec.design,
        Design::BinomN {
            n0: 10,
            draws: 1000,
            ..
        }
    ));
    assert_eq!(spec.sampler.chains, 0);
}

#[test]
fn invalid_specs_are_rejected() {
    let base = r#""family": "binom_p", "n": 10, "p": [0.5], "m": [10], "seed": 1"#;
    for extra in [
        r#""replicates": 0, "levels": [0.9]"#,
        r#""replicates": 5, "levels": []"#,
        r#""replicates": 5, "levels": [1.0]"#,
        r#""replicates": 5, "levels": [0.9], "sampler": {"iterations": 10, "burn_in": 10}"#,
    ] {
        assert!(
            StudySpec::from_json(&format!("{{{base}, {extra}}}")).is_err(),
            "{extra}"
        );
    }
    let bad_p = r#"{"family": "binom_p", "n": 10, "p": [1.5], "m": [10], "seed": 1, "replicates": 5, "levels": [0.9]}"#;
    assert!(StudySpec::from_json(bad_p).is_err());
    let bad_sigma = r#"{"family": "mvn", "mu": [0, 0], "sigma": [[1, 0]], "n": 10, "seed": 1, "replicates": 5, "levels": [0.9]}"#;
    assert!(StudySpec::from_json(bad_sigma).is_err());
    assert!(StudySpec::from_json(r#"{"family": "poisson", "seed": 1}"#).is_err());
}

#[test]
fn data_readers() {
    assert_eq!(
        read_counts("y\n3\n 5 \n0\n".as_bytes()).unwrap(),
        vec![3, 5, 0]
    );
    assert!(read_counts("y\n".as_bytes()).is_err());
    assert!(read_counts("y\n-1\n".as_bytes()).is_err());

    let m = read_matrix("a,b\n1,2\n3,4.5\n-1,0\n".as_bytes()).unwrap();
    assert_eq!((m.nrows(), m.ncols()), (3, 2));
    assert_eq!(m[(1, 1)], 4.5);
    assert!(read_matrix("a,b\n1,x\n".as_bytes()).is_err());

    let g = read_grouped("group,y\nb,1\na,2\nb,3\nc,4\n".as_bytes()).unwrap();
    assert_eq!(g.labels, ["b", "a", "c"]);
    assert_eq!(g.group_sizes, [2, 1, 1]);
    assert_eq!(g.y, [1.0, 3.0, 2.0, 4.0]);
    assert!(read_grouped("g,y\na,1\n".as_bytes()).is_err());
}

proptest::proptest! {
    #[test]
    fn arbitrary_records_round_trip(
        cell in "[a-z0-9=.,\" ]{0,12}",
        level in 0.0f64..1.0,
        replicate in 0usize..10_000,
        contained: bool,
        size in proptest::option::of(-1e12f64..1e12),
    ) {
        let rows = vec![rec(&cell, "marginal_n", level, replicate, contained, size)];
        for format in [Format::Csv, Format::Json] {
            let back: Vec<CoverageRecord> = read_table(format, to_bytes(&rows, format).unwrap().as_slice()).unwrap();
            proptest::prop_assert_eq!(&back, &rows);
        }
    }
}

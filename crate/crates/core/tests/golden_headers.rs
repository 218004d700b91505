use fepkit_core::dynamics::EVENTS_CSV_HEADER;
use fepkit_core::ensembles::SWEEP_HEADER;
use fepkit_core::fluctuations::COVARIANCE_CSV_HEADER;
use fepkit_core::harness::*;

fn current_headers() -> String {
    let headers = [
        ("events.csv", EVENTS_CSV_HEADER),
        ("sweep.csv", SWEEP_HEADER),
        ("covariance.csv", COVARIANCE_CSV_HEADER),
        ("normalization.csv", NORMALIZATION_HEADER),
        ("moments.csv", MOMENTS_HEADER),
        ("combinatorics.csv", COMBINATORICS_HEADER),
        ("recursion.csv", RECURSION_HEADER),
        ("canonical_marginals.csv", MARGINALS_HEADER),
        ("currents.csv", CURRENTS_HEADER),
        ("coupling.csv", COUPLING_HEADER),
        ("mean_current.csv", MEAN_CURRENT_HEADER),
        ("qv.csv", QV_HEADER),
        ("sup_current.csv", SUP_CURRENT_HEADER),
        ("bg_decay.csv", BG_HEADER),
    ];
    let mut s = format!("schema_version {SCHEMA_VERSION}\n");
    for (file, header) in headers {
        s.push_str(&format!("{file} {header}\n"));
    }
    s
}

#[test]
fn csv_headers_match_golden_file() {
    let golden = include_str!("golden/headers.txt");
    assert_eq!(
        current_headers(),
        golden,
        "a CSV header changed; bump SCHEMA_VERSION and update tests/golden/headers.txt"
    );
}

#[test]
fn written_files_start_with_their_header() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("traj");
    let p = prepare(
        r#"{"kind":"simulate","task":"trajectory","N":8,"ring_factor":8,"t_end":0.05,"seed":3}"#,
        None,
        &Overrides { out: Some(out.clone()), ..Overrides::default() },
    )
    .unwrap();
    assert!(execute(&p).unwrap().pass);
    let events = std::fs::read_to_string(out.join("events.csv")).unwrap();
    assert_eq!(events.lines().next(), Some(EVENTS_CSV_HEADER));
    let currents = std::fs::read_to_string(out.join("currents.csv")).unwrap();
    assert_eq!(currents.lines().next(), Some(CURRENTS_HEADER));
    assert_eq!(currents.lines().count(), 65);
}

use cocycle_lab::models::Realization;
use cocycle_lab::spec::{BuildOptions, MeasureSpec};
use cocycle_lab::MatrixSource;

fn parse(s: &str) -> Result<MeasureSpec, serde_json::Error> {
    serde_json::from_str(s)
}

#[test]
fn atoms_round_trip() {
    let s = r#"{"type":"atoms","atoms":[{"matrix":[[3,0],[0,1]],"weight":0.25},{"matrix":[[1,0],[0,3]],"weight":0.75}]}"#;
    let spec = parse(s).unwrap();
    let (src, real) = spec.build(&BuildOptions::default()).unwrap();
    let mu = src.as_discrete().unwrap();
    assert_eq!(mu.len(), 2);
    assert!((mu.weights()[1] - 0.75).abs() < 1e-15);
    assert_eq!(real, Realization::Exact);
    let back: MeasureSpec = parse(&serde_json::to_string(&MeasureSpec::from(mu)).unwrap()).unwrap();
    let (again, _) = back.build(&BuildOptions::default()).unwrap();
    assert_eq!(again.as_discrete().unwrap(), mu);
}

#[test]
fn model_forms_build() {
    let cases = [
        (r#"{"type":"schrodinger","E":0.5,"dist":{"atoms":[[0,0.5],[2,0.5]]}}"#, 2, Some(2)),
        (r#"{"type":"mixed","E":0,"a":1,"q":0.3,"beta":0.01,"dist":{"atoms":[[2.5,1]]}}"#, 2, None),
        (r#"{"type":"jacobi","E":0.3,"lambda":10,"m":2,"dist":{"uniform":[-1,1]}}"#, 4, None),
        (r#"{"type":"schrodinger","E":0,"dist":{"uniform":[-1,1]}}"#, 2, Some(16)),
    ];
    for (s, dim, atoms) in cases {
        let spec = parse(s).unwrap();
        assert!(spec.check().is_empty(), "{s}: {:?}", spec.check());
        let (src, _) = spec.build(&BuildOptions { discretize: Some(16), ..BuildOptions::default() }).unwrap();
        assert_eq!(src.dim(), dim, "{s}");
        if let Some(k) = atoms {
            assert_eq!(src.as_discrete().map(|d| d.len()), Some(k), "{s}");
        }
    }
}

#[test]
fn unknown_and_malformed_fields_are_rejected() {
    assert!(parse(r#"{"type":"atoms","atoms":[],"extra":1}"#).is_err());
    assert!(parse(r#"{"type":"atoms","atoms":[{"matrix":[[1]],"weight":1,"w":2}]}"#).is_err());
    assert!(parse(r#"{"type":"cubic","E":0}"#).is_err());
    assert!(parse(r#"{"type":"schrodinger","dist":{"atoms":[[0,1]]}}"#).is_err());
}

#[test]
fn invalid_values_are_reported() {
    let bad = [
        r#"{"type":"atoms","atoms":[]}"#,
        r#"{"type":"atoms","atoms":[{"matrix":[[1,0],[0,1]],"weight":-1}]}"#,
        r#"{"type":"atoms","atoms":[{"matrix":[[1,0],[0]],"weight":1}]}"#,
        r#"{"type":"mixed","E":0,"a":1,"q":1.5,"beta":0,"dist":{"atoms":[[2.5,1]]}}"#,
        r#"{"type":"jacobi","E":0,"lambda":10,"m":0,"dist":{"atoms":[[1,1]]}}"#,
    ];
    for s in bad {
        let spec = parse(s).unwrap();
        let issues = spec.check();
        assert!(!issues.is_empty() || spec.build(&BuildOptions::default()).is_err(), "{s}");
    }
}

#[test]
fn unnormalized_weights_are_rejected() {
    let spec = parse(r#"{"type":"atoms","atoms":[{"matrix":[[1]],"weight":1},{"matrix":[[2]],"weight":3}]}"#).unwrap();
    assert!(spec.build(&BuildOptions::default()).is_err());
}

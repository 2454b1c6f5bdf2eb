use pocmed_core::verify::reference_query;
use pocmed_core::{identify, CdfModel, Dataset, Method, Schema, ScmSpec};

#[test]
fn csv_round_trip_preserves_estimates() {
    let scm = ScmSpec::reference_bernoulli().compile().unwrap();
    let d = scm.sample_observational(3000, 11).unwrap();
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    let back = Dataset::load_csv(buf.as_slice(), Schema::default_xmy()).unwrap();
    assert_eq!(back.len(), d.len());
    let q = reference_query();
    let a = identify::natural_pns(&CdfModel::new(&d), &q).unwrap();
    let b = identify::natural_pns(&CdfModel::new(&back), &q).unwrap();
    assert_eq!(a, b);
}

#[test]
fn spec_json_round_trip_compiles_to_the_same_truth() {
    let spec = ScmSpec::reference_bernoulli();
    let text = serde_json::to_string(&spec).unwrap();
    let back: ScmSpec = serde_json::from_str(&text).unwrap();
    let q = reference_query();
    let t0 = spec.compile().unwrap().truth_pns(&q, Method::Exact).unwrap();
    let t1 = back.compile().unwrap().truth_pns(&q, Method::Exact).unwrap();
    assert_eq!(t0.t(), t1.t());
}

#[test]
fn large_sample_estimate_approaches_the_oracle() {
    let scm = ScmSpec::reference_bernoulli().compile().unwrap();
    let q = reference_query();
    let truth = scm.truth_pns(&q, Method::Exact).unwrap();
    let d = scm.sample_observational(400_000, 12).unwrap();
    let est = identify::natural_pns(&CdfModel::new(&d), &q).unwrap();
    // Standard error of T is about 0.0015 at this size.
    assert!((est.t_pns - truth.t()).abs() < 0.006, "{} vs {}", est.t_pns, truth.t());
    assert!((est.nd_pns - truth.nd()).abs() < 0.006);
    assert!((est.ni_pns - truth.ni()).abs() < 0.006);
}

#[test]
fn monte_carlo_truth_agrees_with_exact() {
    let scm = ScmSpec::reference_bernoulli().compile().unwrap();
    let q = reference_query();
    let exact = scm.truth_pns(&q, Method::Exact).unwrap();
    let mc = scm.truth_pns(&q, Method::MonteCarlo { n: 1 << 20, seed: 5 }).unwrap();
    assert!((mc.t() - exact.t()).abs() < 0.003);
}

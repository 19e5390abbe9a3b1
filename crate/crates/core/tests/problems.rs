use codiff::problems::{
    build_max_plus_min, check_haar, clustering_small, haar_d1, haar_d2, haar_instance, list_problems, resolve_pieces,
    MaxPlusMinSpec, REGISTERED,
};
use codiff::problem_by_name;
use nalgebra::DMatrix;
use serde_json::{json, Value};

#[test]
fn linear_preset_pieces_respect_curvature_bounds() {
    let spec = MaxPlusMinSpec::linear_preset();
    let (m, big_m) = spec.curvature;
    for seed in 0..20 {
        let (maxes, mins) = resolve_pieces(&spec, seed);
        for piece in maxes.iter().chain(&mins).flatten() {
            let q = DMatrix::from_fn(spec.dim, spec.dim, |i, j| piece.hessian[i][j]);
            assert!((&q - q.transpose()).norm() <= 1e-12);
            for ev in q.symmetric_eigenvalues().iter() {
                assert!(*ev >= m - 1e-9 && *ev <= big_m + 1e-9, "seed {seed}: eigenvalue {ev}");
            }
        }
    }
}

#[test]
fn seeded_instances_are_reproducible() {
    let a = build_max_plus_min(&MaxPlusMinSpec::linear_preset(), 11).unwrap();
    let b = build_max_plus_min(&MaxPlusMinSpec::linear_preset(), 11).unwrap();
    let c = build_max_plus_min(&MaxPlusMinSpec::linear_preset(), 12).unwrap();
    let x = [0.3, -0.7];
    assert_eq!(a.expr.value(&x).unwrap(), b.expr.value(&x).unwrap());
    assert_ne!(a.expr.value(&x).unwrap(), c.expr.value(&x).unwrap());
    let km = a.known_minimum.as_ref().unwrap();
    assert!(a.expr.value(&km.x).unwrap() <= a.expr.value(&x).unwrap());
}

#[test]
fn haar_certificates() {
    for d in 1..=3 {
        let (p, cert) = haar_instance(d).unwrap();
        assert!(cert.is_valid(), "d = {d}: {cert:?}");
        assert_eq!(cert.active.len(), d + 1);
        assert!(cert.multipliers.unwrap().iter().all(|l| *l > 0.0));
        assert!(p.verify_known_minimum(1e-8).unwrap());
    }
    for p in [haar_d1(), haar_d2()] {
        assert!(check_haar(&p, &vec![0.0; p.dim()], 1e-10).unwrap().is_valid(), "{}", p.name);
    }
    // away from the point fewer pieces are active
    let p = haar_d2();
    assert!(!check_haar(&p, &[0.5, 0.1], 1e-10).unwrap().is_valid());
}

#[test]
fn clustering_small_optimum() {
    let p = clustering_small();
    let km = p.known_minimum.as_ref().unwrap();
    // {0,1} and {9,10}: each pair contributes 2 * 0.5^2
    assert!((km.f - 1.0).abs() <= 1e-12);
    assert!((p.expr.value(&km.x).unwrap() - 1.0).abs() <= 1e-12);
}

#[test]
fn registry() {
    let listed: Vec<&str> = list_problems().iter().map(|p| p.0).collect();
    assert_eq!(listed, REGISTERED.to_vec());
    for name in REGISTERED {
        let p = problem_by_name(name, &Value::Null).unwrap();
        assert_eq!(p.name.split('[').next().unwrap(), name);
        let x = p.seeded_start(0);
        assert!(p.default_box.contains(&x, 0.0));
    }
    assert!(problem_by_name("nope", &Value::Null).is_err());
    let p = problem_by_name("clustering", &json!({"points": [[0.0], [4.0]], "k": 1})).unwrap();
    assert!((p.expr.value(&[2.0]).unwrap() - 8.0).abs() <= 1e-12);
    assert!(problem_by_name("clustering", &json!({"k": 1})).is_err());
    assert!(problem_by_name("abs_x", &json!([1])).is_err());
    assert_eq!(problem_by_name("haar", &json!({"d": 3})).unwrap().dim(), 3);
}

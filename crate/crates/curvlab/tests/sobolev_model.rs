use curvlab::engine::symmetry_suite;
use curvlab::lie::LieAlgebraData;
use curvlab::scalar::Vector;
use curvlab::sobolev::{ProductPath, TruncatedGroupModel};
use curvlab::spectral::{Domain, Mode, Parity};
use curvlab::CurvError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_within(model: &TruncatedGroupModel<f64>, deg: usize, rng: &mut ChaCha8Rng) -> Vector<f64> {
    let dk = model.lie_dim();
    let mut v = Vector::zeros(model.dim());
    for b in model.blocks_within(deg) {
        for a in 0..dk {
            v[b * dk + a] = rng.gen_range(-1.0..1.0);
        }
    }
    v
}

fn cos(k: [i64; 2]) -> Mode {
    Mode { freq: k, parity: Parity::Cos }
}

fn sin(k: [i64; 2]) -> Mode {
    Mode { freq: k, parity: Parity::Sin }
}

#[test]
fn weights_follow_the_spectrum() {
    let m = TruncatedGroupModel::new(Domain::Torus, LieAlgebraData::<f64>::su2(), 2, 1.5, 0.5).unwrap();
    for b in 0..m.algebra().blocks() {
        let k = m.algebra().mode_of_block_ref(b);
        let want = (k.norm2() as f64 + 0.25).powf(1.5);
        assert!((m.weight(b) - want).abs() < 1e-12 * want);
    }
    assert_eq!(m.ambient_cutoff(), 6);
    assert_eq!(m.dim(), 13 * 13 * 3);
    let q = TruncatedGroupModel::new(Domain::Circle, LieAlgebraData::<f64>::su2(), 4, 1.0, 0.0).unwrap();
    assert!(q.is_quotient());
    assert_eq!(q.dim(), 24 * 3);
}

#[test]
fn quotient_rejects_constant_fields() {
    let q = TruncatedGroupModel::new(Domain::Circle, LieAlgebraData::<f64>::su2(), 4, 1.0, 0.0).unwrap();
    assert!(q.algebra().field(&[(Mode::CONST, vec![1.0, 0.0, 0.0])]).is_err());
    assert!(q.algebra().field(&[(cos([1, 0]), vec![1.0, 0.0, 0.0])]).is_ok());
}

#[test]
fn fields_beyond_the_ambient_cutoff_rejected() {
    let m = TruncatedGroupModel::new(Domain::Circle, LieAlgebraData::<f64>::su2(), 2, 1.0, 1.0).unwrap();
    let e = m.algebra().field(&[(cos([7, 0]), vec![1.0, 0.0, 0.0])]).unwrap_err();
    assert!(matches!(e, CurvError::Truncation { requested: 7, ambient: 6 }));
    // inside the ambient space but above the model cutoff
    let x = m.algebra().field(&[(cos([4, 0]), vec![1.0, 0.0, 0.0])]).unwrap();
    let y = m.algebra().field(&[(sin([1, 0]), vec![0.0, 1.0, 0.0])]).unwrap();
    assert!(matches!(m.curvature_engine_matrix(&x, &y), Err(CurvError::Truncation { .. })));
}

#[test]
fn pointwise_bracket_of_modes() {
    // [sqrt2 cos x e1, sqrt2 sin x e2] = 2 cos x sin x e3 = sin 2x e3 = (1/sqrt2) phi_{sin 2} e3
    let m = TruncatedGroupModel::new(Domain::Circle, LieAlgebraData::<f64>::su2(), 2, 1.0, 1.0).unwrap();
    let alg = m.algebra();
    let x = alg.field(&[(cos([1, 0]), vec![1.0, 0.0, 0.0])]).unwrap();
    let y = alg.field(&[(sin([1, 0]), vec![0.0, 1.0, 0.0])]).unwrap();
    let want = alg.field(&[(sin([2, 0]), vec![0.0, 0.0, std::f64::consts::FRAC_1_SQRT_2])]).unwrap();
    let got = m.geometry.bracket(&x, &y);
    assert!((got - want).amax() < 1e-15);
}

#[test]
fn product_paths_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (domain, n) in [(Domain::Circle, 6), (Domain::Torus, 3)] {
        let base = TruncatedGroupModel::new(domain, LieAlgebraData::<f64>::su3(), n, 1.0, 1.0).unwrap();
        let table = base.clone().with_product_path(ProductPath::Table);
        let grid = base.with_product_path(ProductPath::Grid);
        let x = random_within(&table, n, &mut rng);
        let y = random_within(&table, 2 * n, &mut rng);
        let bt = table.geometry.bracket(&x, &y);
        let bg = grid.geometry.bracket(&x, &y);
        assert!((&bt - &bg).amax() < 1e-12 * bt.amax().max(1.0));
        let ct = table.geometry.ad_star_apply(&x, &y);
        let cg = grid.geometry.ad_star_apply(&x, &y);
        assert!((&ct - &cg).amax() < 1e-12 * ct.amax().max(1.0));
    }
}

#[test]
fn identity_suites() {
    for (domain, n, s, m0) in [(Domain::Circle, 6, 1.0, 1.0), (Domain::Circle, 6, 1.5, 0.0), (Domain::Torus, 2, 2.0, 0.5)] {
        let m = TruncatedGroupModel::new(domain, LieAlgebraData::<f64>::su2(), n, s, m0).unwrap();
        let sample = |r: &mut ChaCha8Rng| random_within(&m, n, r);
        let rep = symmetry_suite(&m.geometry, sample, 6, 3).unwrap();
        assert!(rep.worst() < 1e-10, "{domain:?} s={s} m0={m0}: {rep:?}");
    }
}

#[test]
fn condensed_form_reproduces_curvature() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for m0 in [0.5, 1.0] {
        let m = TruncatedGroupModel::new(Domain::Circle, LieAlgebraData::<f64>::su2(), 6, 1.0, m0).unwrap();
        let x = random_within(&m, 2, &mut rng);
        let y = random_within(&m, 2, &mut rng);
        let engine = m.curvature_engine_matrix(&x, &y).unwrap();
        let scale = engine.matrix.amax();
        let condensed = m.curvature_condensed(&x, &y).unwrap();
        assert!(engine.max_abs_diff(&condensed) < 1e-10 * scale);
        let without = m.curvature_condensed_without_d_term(&x, &y).unwrap();
        assert!(engine.max_abs_diff(&without) > 0.1 * scale);
    }
}

#[test]
fn adjoint_and_first_line_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = TruncatedGroupModel::new(Domain::Torus, LieAlgebraData::<f64>::su2(), 2, 1.0, 1.0).unwrap();
    let x = random_within(&m, 1, &mut rng);
    let y = random_within(&m, 1, &mut rng);
    let (dev, scale) = m.adjoint_identity_check(&x).unwrap();
    assert!(dev < 1e-12 * scale);
    let (dev, scale) = m.first_line_identity_check(&x, &y).unwrap();
    assert!(dev < 1e-10 * scale);
}

#[test]
fn gform_identities_need_a_mass() {
    let q = TruncatedGroupModel::new(Domain::Circle, LieAlgebraData::<f64>::su2(), 4, 1.0, 0.0).unwrap();
    let x = q.algebra().field(&[(cos([1, 0]), vec![1.0, 0.0, 0.0])]).unwrap();
    assert!(matches!(q.adjoint_identity_check(&x), Err(CurvError::Input(_))));
    assert!(matches!(q.curvature_condensed(&x, &x), Err(CurvError::Input(_))));
    assert!(matches!(q.first_line_identity_check(&x, &x), Err(CurvError::Input(_))));
}

#[test]
fn decay_probe_slope() {
    let m = TruncatedGroupModel::new(Domain::Circle, LieAlgebraData::<f64>::su2(), 32, 1.0, 1.0).unwrap();
    let alg = m.algebra();
    let x = alg.field(&[(cos([1, 0]), vec![1.0, 0.0, 0.0])]).unwrap();
    let y = alg.field(&[(sin([1, 0]), vec![0.0, 1.0, 0.0])]).unwrap();
    let modes: Vec<Mode> = (8..=20).map(|k| cos([k, 0])).collect();
    let p = m.order_decay_probe(&x, &y, &modes, &[1.0, 0.0, 0.0]).unwrap();
    assert!(!p.degenerate && !p.unreliable, "{p:?}");
    assert!(p.slope.unwrap() <= -1.75, "{p:?}");
    // an abelian algebra has no curvature at all
    let flat = TruncatedGroupModel::new(Domain::Circle, LieAlgebraData::<f64>::abelian(2), 8, 1.0, 1.0).unwrap();
    let fx = flat.algebra().field(&[(cos([1, 0]), vec![1.0, 0.0])]).unwrap();
    let p = flat.order_decay_probe(&fx, &fx, &[cos([2, 0]), cos([3, 0])], &[1.0, 0.0]).unwrap();
    assert!(p.degenerate && p.slope.is_none(), "{p:?}");
    // modes beyond the model cutoff are flagged
    let p = m.order_decay_probe(&x, &y, &[cos([30, 0]), cos([40, 0])], &[1.0, 0.0, 0.0]).unwrap();
    assert!(p.unreliable);
}

#[test]
fn f32_model_runs() {
    let m = TruncatedGroupModel::new(Domain::Circle, LieAlgebraData::<f32>::su2(), 4, 1.0, 1.0).unwrap();
    let x = m.algebra().field(&[(cos([1, 0]), vec![1.0, 0.0, 0.0])]).unwrap();
    let y = m.algebra().field(&[(sin([2, 0]), vec![0.0, 1.0, 0.0])]).unwrap();
    let k = m.geometry.sectional(&x, &y).unwrap();
    let m64 = TruncatedGroupModel::new(Domain::Circle, LieAlgebraData::<f64>::su2(), 4, 1.0, 1.0).unwrap();
    let x64 = m64.algebra().field(&[(cos([1, 0]), vec![1.0, 0.0, 0.0])]).unwrap();
    let y64 = m64.algebra().field(&[(sin([2, 0]), vec![0.0, 1.0, 0.0])]).unwrap();
    let k64 = m64.geometry.sectional(&x64, &y64).unwrap();
    assert!((k as f64 - k64).abs() < 1e-4 * k64.abs().max(1.0));
}

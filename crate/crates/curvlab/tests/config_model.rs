use curvlab::config::{build_configuration, lattice_points, parse_points, ricci_lower_bound_scan, ScanGrid};
use curvlab::engine::{symmetry_suite, LieBracket};
use curvlab::lie::LieAlgebraData;
use curvlab::scalar::{Matrix, Vector};
use curvlab::spectral::{greens_series, Domain};
use curvlab::CurvError;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Ricci matrix from the Koszul formula in an orthonormal frame, for any bracket.
fn koszul_ricci(n: usize, br: impl Fn(&Vector<f64>, &Vector<f64>) -> Vector<f64>, gram: &Matrix<f64>) -> Matrix<f64> {
    let l = gram.clone().cholesky().unwrap().l();
    let f = l.transpose().try_inverse().unwrap();
    let col = |i: usize| f.column(i).into_owned();
    let ip = |a: &Vector<f64>, b: &Vector<f64>| (a.transpose() * gram * b)[(0, 0)];
    let mut c = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            let b = br(&col(i), &col(j));
            for k in 0..n {
                c[(i * n + j) * n + k] = ip(&b, &col(k));
            }
        }
    }
    let cc = |i: usize, j: usize, k: usize| c[(i * n + j) * n + k];
    let gam = |i: usize, j: usize, k: usize| 0.5 * (cc(i, j, k) - cc(j, k, i) + cc(k, i, j));
    let mut ric = Matrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                for p in 0..n {
                    s += gam(j, k, p) * gam(i, p, i) - gam(i, k, p) * gam(j, p, i) - cc(i, j, p) * gam(p, k, i);
                }
            }
            ric[(j, k)] = s;
        }
    }
    let finv = f.try_inverse().unwrap();
    finv.transpose() * ric * finv
}

fn circle_kernel(x: f64) -> f64 {
    // s = 1, m0 = 1
    let a = x.rem_euclid(2.0 * PI);
    let a = a.min(2.0 * PI - a);
    (PI - a).cosh() / (2.0 * PI.sinh())
}

#[test]
fn antipodal_pair_matches_closed_form() {
    let pts = [[0.3, 0.0], [0.3 + PI, 0.0]];
    let cfg = build_configuration(Domain::Circle, LieAlgebraData::su2(), &pts, 1.0, 1.0).unwrap();
    let diag = PI.cosh() / (2.0 * PI.sinh());
    let off = 1.0 / (2.0 * PI.sinh());
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { diag } else { off };
            assert!((cfg.greens_matrix[(i, j)] - want).abs() < 1e-8);
            let (series, tail) = greens_series(Domain::Circle, pts[i], pts[j], 1.0, 1.0, 200_000);
            assert!((series - want).abs() <= tail + 1e-8);
        }
    }
}

#[test]
fn ricci_matches_koszul_oracle() {
    let lie = LieAlgebraData::<f64>::su2();
    let pts = [[0.0, 0.0], [1.0, 0.0], [2.5, 0.0]];
    let cfg = build_configuration(Domain::Circle, lie.clone(), &pts, 1.0, 1.0).unwrap();
    // Gram built here from the closed-form kernel
    let g = Matrix::from_fn(3, 3, |i, j| circle_kernel(pts[i][0] - pts[j][0]));
    let gram = g.try_inverse().unwrap().kronecker(lie.inner_gram());
    let alg = cfg.geometry.algebra.clone();
    let want = koszul_ricci(9, |a, b| alg.bracket(a, b), &gram);
    let got = cfg.ricci_matrix().unwrap();
    assert!((&got - &want).amax() < 1e-9 * want.amax(), "{}", (&got - &want).amax());
}

#[test]
fn single_point_is_bi_invariant() {
    for lie in [LieAlgebraData::<f64>::su2(), LieAlgebraData::<f64>::su3()] {
        let cfg = build_configuration(Domain::Torus, lie.clone(), &[[1.0, 2.0]], 2.0, 0.7).unwrap();
        let ric = cfg.ricci_matrix().unwrap();
        let want = lie.killing_gram() * -0.25;
        assert!((&ric - &want).amax() < 1e-12);
        // relative to the metric G(v,v)^{-1} inner, the eigenvalues are G(v,v) times those of inner^{-1}(-kappa/4)
        let gvv = cfg.greens_matrix[(0, 0)];
        let rel = lie.inner_gram().clone().try_inverse().unwrap() * &want * gvv;
        let mut ev: Vec<f64> = rel.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in cfg.relative_ricci_spectrum().unwrap().iter().zip(&ev) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn abelian_configuration_is_flat() {
    let cfg = build_configuration(Domain::Circle, LieAlgebraData::<f64>::abelian(2), &lattice_points(4, 1.0), 1.0, 1.0).unwrap();
    assert_eq!(cfg.ricci_matrix().unwrap().amax(), 0.0);
    let grid = ScanGrid { point_counts: vec![2, 4], ..ScanGrid::default() };
    for row in ricci_lower_bound_scan(Domain::Circle, &LieAlgebraData::<f64>::abelian(2), &grid) {
        assert_eq!(row.min_rel_ricci, Some(0.0), "{row:?}");
    }
}

#[test]
fn relabeling_points_permutes_the_ricci_matrix() {
    let lie = LieAlgebraData::<f64>::su2();
    let pts = [[0.0, 0.0], [0.9, 0.3], [2.0, 4.0]];
    let perm = [2, 0, 1];
    let moved: Vec<[f64; 2]> = perm.iter().map(|&i| pts[i]).collect();
    let a = build_configuration(Domain::Torus, lie.clone(), &pts, 1.5, 1.0).unwrap().ricci_matrix().unwrap();
    let b = build_configuration(Domain::Torus, lie, &moved, 1.5, 1.0).unwrap().ricci_matrix().unwrap();
    for (ni, &oi) in perm.iter().enumerate() {
        for (nj, &oj) in perm.iter().enumerate() {
            for p in 0..3 {
                for q in 0..3 {
                    let (x, y) = (b[(ni * 3 + p, nj * 3 + q)], a[(oi * 3 + p, oj * 3 + q)]);
                    assert!((x - y).abs() < 1e-12 * a.amax());
                }
            }
        }
    }
}

#[test]
fn heavy_mass_decouples_sites() {
    let lie = LieAlgebraData::<f64>::su2();
    let two_copies = Matrix::from_fn(6, 6, |i, j| if i / 3 == j / 3 { -0.25 * lie.killing_gram()[(i % 3, j % 3)] } else { 0.0 });
    let mut prev = f64::INFINITY;
    for m0 in [5.0, 10.0, 20.0] {
        let cfg = build_configuration(Domain::Circle, lie.clone(), &[[0.0, 0.0], [0.5, 0.0]], 1.0, m0).unwrap();
        let dev = (cfg.ricci_matrix().unwrap() - &two_copies).amax();
        assert!(dev < prev, "m0={m0}: {dev} after {prev}");
        prev = dev;
    }
    assert!(prev < 1e-3);
}

#[test]
fn identity_suites_and_round_trip() {
    let lie = LieAlgebraData::<f64>::su2();
    for (domain, pts, s) in [
        (Domain::Circle, lattice_points(5, 1.0), 1.0),
        (Domain::Torus, vec![[0.0, 0.0], [1.0, 2.0], [4.0, 0.5], [3.0, 3.0]], 2.0),
    ] {
        let cfg = build_configuration(domain, lie.clone(), &pts, s, 1.0).unwrap();
        let n = cfg.dim();
        let rep = symmetry_suite(&cfg.geometry, |r: &mut ChaCha8Rng| Vector::from_fn(n, |_, _| r.gen_range(-1.0..1.0)), 30, 8).unwrap();
        assert!(rep.worst() < 1e-10, "{rep:?}");
        assert!(cfg.round_trip_defect() < 1e-10);
    }
}

#[test]
fn invalid_configurations_rejected() {
    let lie = LieAlgebraData::<f64>::su2();
    let e = build_configuration(Domain::Circle, lie.clone(), &[[0.0, 0.0], [2.0 * PI, 0.0]], 1.0, 1.0).unwrap_err();
    assert!(matches!(e, CurvError::Input(_)));
    let e = build_configuration(Domain::Torus, lie.clone(), &[[0.0, 0.0]], 1.0, 1.0).unwrap_err();
    assert!(matches!(e, CurvError::DiagonalDivergence { .. }));
    assert!(build_configuration(Domain::Circle, lie.clone(), &[[0.0, 0.0]], 1.0, 0.0).is_err());
    assert!(build_configuration(Domain::Circle, lie.clone(), &[], 1.0, 1.0).is_err());
    let e = build_configuration(Domain::Circle, lie, &[[0.0, 0.0], [1e-9, 0.0]], 2.0, 1.0).unwrap_err();
    assert!(matches!(e, CurvError::IllConditioned(_)));
}

#[test]
fn point_files() {
    let pts: Vec<[f64; 2]> = parse_points(Domain::Torus, "# header\n0.5, 1\n2 3 # trailing\n\n").unwrap();
    assert_eq!(pts, vec![[0.5, 1.0], [2.0, 3.0]]);
    let pts: Vec<[f64; 2]> = parse_points(Domain::Circle, "1.5\n").unwrap();
    assert_eq!(pts, vec![[1.5, 0.0]]);
    let e = parse_points::<f64>(Domain::Torus, "1 2\n3\n").unwrap_err();
    assert!(matches!(e, CurvError::Parse { line: 2, .. }));
    assert!(parse_points::<f64>(Domain::Circle, "x\n").is_err());
}

#[test]
fn default_scan_covers_the_grid() {
    let rows = ricci_lower_bound_scan(Domain::Circle, &LieAlgebraData::<f64>::su2(), &ScanGrid::default());
    assert_eq!(rows.len(), 3 * 2 * 2 * 2);
    assert_eq!(rows[0].points, 4);
    assert_eq!(rows.last().unwrap().points, 16);
    for r in &rows {
        assert!(r.min_rel_ricci.is_some() || !r.flags.is_empty(), "{r:?}");
    }
}

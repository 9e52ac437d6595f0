//! Left-invariant metric geometry on a finite-dimensional metrized Lie algebra.

use crate::error::{CurvError, Result};
use crate::lie::LieAlgebraData;
use crate::scalar::{sup_norm, Matrix, Real, Vector};
use nalgebra::Cholesky;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// A bracket on a real vector space together with the transpose of `ad_x`.
pub trait LieBracket<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn bracket(&self, x: &Vector<T>, y: &Vector<T>) -> Vector<T>;
    /// `ad_x^T w` in coordinates.
    fn coadjoint(&self, x: &Vector<T>, w: &Vector<T>) -> Vector<T>;
}

impl<T: Real> LieBracket<T> for LieAlgebraData<T> {
    fn dim(&self) -> usize {
        LieAlgebraData::dim(self)
    }

    fn bracket(&self, x: &Vector<T>, y: &Vector<T>) -> Vector<T> {
        let mut out = Vector::zeros(self.dim());
        self.bracket_acc(x.as_slice(), y.as_slice(), T::one(), out.as_mut_slice());
        out
    }

    fn coadjoint(&self, x: &Vector<T>, w: &Vector<T>) -> Vector<T> {
        let mut out = Vector::zeros(self.dim());
        self.coadjoint_acc(x.as_slice(), w.as_slice(), T::one(), out.as_mut_slice());
        out
    }
}

/// Inner product on the underlying space.
#[derive(Debug, Clone)]
pub enum Metric<T: Real> {
    Dense {
        gram: Matrix<T>,
        chol: Cholesky<T, nalgebra::Dyn>,
        onb: Matrix<T>,
    },
    /// `diag(weights) (x) inner`, coordinates laid out as `mode * k + a`.
    Block {
        weights: Vec<T>,
        inner: Matrix<T>,
        inner_chol: Cholesky<T, nalgebra::Dyn>,
        inner_onb: Matrix<T>,
    },
}

impl<T: Real> Metric<T> {
    pub fn dense(gram: Matrix<T>) -> Result<Self> {
        if gram.nrows() != gram.ncols() {
            return Err(CurvError::DimensionMismatch { expected: gram.nrows(), got: gram.ncols() });
        }
        let asym = (&gram - gram.transpose()).amax();
        if asym > T::lit(1e-12) * gram.amax().max(T::one()) {
            return Err(CurvError::Input("metric Gram matrix is not symmetric".into()));
        }
        let chol = gram.clone().cholesky().ok_or(CurvError::SingularMetric)?;
        let onb = chol.l().transpose().try_inverse().ok_or(CurvError::SingularMetric)?;
        Ok(Metric::Dense { gram, chol, onb })
    }

    pub fn block(weights: Vec<T>, inner: Matrix<T>) -> Result<Self> {
        if weights.iter().any(|w| *w <= T::zero()) {
            return Err(CurvError::SingularMetric);
        }
        let inner_chol = inner.clone().cholesky().ok_or(CurvError::SingularMetric)?;
        let inner_onb = inner_chol.l().transpose().try_inverse().ok_or(CurvError::SingularMetric)?;
        Ok(Metric::Block { weights, inner, inner_chol, inner_onb })
    }

    pub fn dim(&self) -> usize {
        match self {
            Metric::Dense { gram, .. } => gram.nrows(),
            Metric::Block { weights, inner, .. } => weights.len() * inner.nrows(),
        }
    }

    /// `M v`.
    pub fn apply(&self, v: &Vector<T>) -> Vector<T> {
        match self {
            Metric::Dense { gram, .. } => gram * v,
            Metric::Block { weights, inner, .. } => {
                let k = inner.nrows();
                let mut out = Vector::zeros(v.len());
                for (m, w) in weights.iter().enumerate() {
                    let blk = v.rows(m * k, k);
                    if blk.iter().all(|x| *x == T::zero()) {
                        continue;
                    }
                    out.rows_mut(m * k, k).copy_from(&((inner * blk) * *w));
                }
                out
            }
        }
    }

    /// `M^{-1} v`.
    pub fn solve(&self, v: &Vector<T>) -> Vector<T> {
        match self {
            Metric::Dense { chol, .. } => chol.solve(v),
            Metric::Block { weights, inner, inner_chol, .. } => {
                let k = inner.nrows();
                let mut out = Vector::zeros(v.len());
                for (m, w) in weights.iter().enumerate() {
                    let blk = v.rows(m * k, k).into_owned();
                    if blk.iter().all(|x| *x == T::zero()) {
                        continue;
                    }
                    out.rows_mut(m * k, k).copy_from(&(inner_chol.solve(&blk) / *w));
                }
                out
            }
        }
    }

    pub fn inner(&self, u: &Vector<T>, v: &Vector<T>) -> T {
        u.dot(&self.apply(v))
    }

    pub fn norm(&self, v: &Vector<T>) -> T {
        self.inner(v, v).max(T::zero()).sqrt()
    }

    /// The `i`-th vector of the orthonormal basis obtained from the Cholesky factor.
    pub fn orthonormal_vector(&self, i: usize) -> Vector<T> {
        match self {
            Metric::Dense { onb, .. } => onb.column(i).into_owned(),
            Metric::Block { weights, inner_onb, .. } => {
                let k = inner_onb.nrows();
                let (m, a) = (i / k, i % k);
                let mut v = Vector::zeros(weights.len() * k);
                let s = weights[m].sqrt();
                for b in 0..k {
                    v[m * k + b] = inner_onb[(b, a)] / s;
                }
                v
            }
        }
    }

    /// Dense Gram matrix; intended for small spaces.
    pub fn gram(&self) -> Matrix<T> {
        match self {
            Metric::Dense { gram, .. } => gram.clone(),
            Metric::Block { weights, inner, .. } => {
                let k = inner.nrows();
                let n = weights.len() * k;
                let mut g = Matrix::zeros(n, n);
                for (m, w) in weights.iter().enumerate() {
                    g.view_mut((m * k, m * k), (k, k)).copy_from(&(inner * *w));
                }
                g
            }
        }
    }
}

/// A Lie bracket with a left-invariant metric.
#[derive(Debug, Clone)]
pub struct MetrizedAlgebra<T: Real, B> {
    pub algebra: B,
    pub metric: Metric<T>,
    consistency_tol: T,
}

/// Sum of vectors with the largest summand magnitude tracked for roundoff-aware comparisons.
struct TermSum<T: Real> {
    acc: Vector<T>,
    scale: T,
}

impl<T: Real> TermSum<T> {
    fn new(n: usize) -> Self {
        Self { acc: Vector::zeros(n), scale: T::zero() }
    }

    fn add(&mut self, c: T, v: Vector<T>) {
        self.scale = self.scale.max(c.abs() * sup_norm(&v));
        self.acc.axpy(c, &v, T::one());
    }
}

impl<T: Real, B: LieBracket<T>> MetrizedAlgebra<T, B> {
    pub fn new(algebra: B, metric: Metric<T>) -> Result<Self> {
        if algebra.dim() != metric.dim() {
            return Err(CurvError::DimensionMismatch { expected: algebra.dim(), got: metric.dim() });
        }
        Ok(Self { algebra, metric, consistency_tol: T::lit(1e-10).max(T::default_epsilon() * T::lit(1e3)) })
    }

    /// Relative tolerance of the always-on curvature cross-check; defaults to
    /// `1e-10`, or `1000 eps` for low-precision scalars.
    pub fn with_consistency_tol(mut self, tol: T) -> Self {
        self.consistency_tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    fn check(&self, v: &Vector<T>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(CurvError::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        Ok(())
    }

    pub fn bracket(&self, x: &Vector<T>, y: &Vector<T>) -> Vector<T> {
        self.algebra.bracket(x, y)
    }

    pub fn inner(&self, u: &Vector<T>, v: &Vector<T>) -> T {
        self.metric.inner(u, v)
    }

    /// `ad_x^*(y) = M^{-1} ad_x^T M y`.
    pub fn ad_star_apply(&self, x: &Vector<T>, y: &Vector<T>) -> Vector<T> {
        let my = self.metric.apply(y);
        self.metric.solve(&self.algebra.coadjoint(x, &my))
    }

    /// Dense matrix of `ad_x^*`.
    pub fn ad_star(&self, x: &Vector<T>) -> Result<Matrix<T>> {
        self.check(x)?;
        let n = self.dim();
        let cols: Vec<Vector<T>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = Vector::zeros(n);
                e[j] = T::one();
                self.ad_star_apply(x, &e)
            })
            .collect();
        Ok(Matrix::from_columns(&cols))
    }

    pub fn ad_matrix(&self, x: &Vector<T>) -> Result<Matrix<T>> {
        self.check(x)?;
        let n = self.dim();
        let cols: Vec<Vector<T>> = (0..n)
            .map(|j| {
                let mut e = Vector::zeros(n);
                e[j] = T::one();
                self.bracket(x, &e)
            })
            .collect();
        Ok(Matrix::from_columns(&cols))
    }

    /// `nabla_x y = (1/2)([x,y] - ad_x^* y - ad_y^* x)`.
    pub fn levi_civita(&self, x: &Vector<T>, y: &Vector<T>) -> Vector<T> {
        let h = T::lit(0.5);
        (self.bracket(x, y) - self.ad_star_apply(x, y) - self.ad_star_apply(y, x)) * h
    }

    /// `[nabla_x, nabla_y] z - nabla_{[x,y]} z`.
    pub fn curvature_direct(&self, x: &Vector<T>, y: &Vector<T>, z: &Vector<T>) -> Vector<T> {
        self.curvature_direct_scaled(x, y, z).acc
    }

    fn curvature_direct_scaled(&self, x: &Vector<T>, y: &Vector<T>, z: &Vector<T>) -> TermSum<T> {
        let mut t = TermSum::new(self.dim());
        t.add(T::one(), self.levi_civita(x, &self.levi_civita(y, z)));
        t.add(-T::one(), self.levi_civita(y, &self.levi_civita(x, z)));
        t.add(-T::one(), self.levi_civita(&self.bracket(x, y), z));
        t
    }

    /// Expanded term list in terms of `ad` and `ad^*` only.
    pub fn curvature_expanded(&self, x: &Vector<T>, y: &Vector<T>, z: &Vector<T>) -> Vector<T> {
        self.curvature_expanded_scaled(x, y, z).acc
    }

    fn curvature_expanded_scaled(&self, x: &Vector<T>, y: &Vector<T>, z: &Vector<T>) -> TermSum<T> {
        let q = T::lit(0.25);
        let h = T::lit(0.5);
        let br = |a: &Vector<T>, b: &Vector<T>| self.bracket(a, b);
        let st = |a: &Vector<T>, b: &Vector<T>| self.ad_star_apply(a, b);
        let mut t = TermSum::new(self.dim());

        // the two quarter-weighted blocks differ by swapping x and y
        for (sign, u, v) in [(q, x, y), (-q, y, x)] {
            let vz = br(v, z);
            let sv_z = st(v, z);
            let sz_v = st(z, v);
            t.add(sign, br(u, &vz));
            t.add(-sign, br(u, &sv_z));
            t.add(-sign, br(u, &sz_v));
            t.add(-sign, st(u, &vz));
            t.add(sign, st(u, &sv_z));
            t.add(sign, st(u, &sz_v));
            let w = &vz - &sv_z - &sz_v;
            t.add(-sign, st(&w, u));
        }
        let xy = br(x, y);
        t.add(-h, br(&xy, z));
        t.add(h, st(&xy, z));
        t.add(h, st(z, &xy));
        t
    }

    /// Commutator-organized form; uses the Jacobi identity for its first group.
    pub fn curvature_commutator(&self, x: &Vector<T>, y: &Vector<T>, z: &Vector<T>) -> Vector<T> {
        let q = T::lit(0.25);
        let h = T::lit(0.5);
        let br = |a: &Vector<T>, b: &Vector<T>| self.bracket(a, b);
        let st = |a: &Vector<T>, b: &Vector<T>| self.ad_star_apply(a, b);
        let mut t = TermSum::new(self.dim());
        let xy = br(x, y);
        let yz = br(y, z);
        let xz = br(x, z);
        t.add(-q, br(&xy, z));
        t.add(-q, st(&yz, x));
        t.add(q, st(&xz, y));

        // -[ad_x, ad_y^*] z + [ad_y, ad_x^*] z + [ad_x^*, ad_y^*] z
        let sy_z = st(y, z);
        let sx_z = st(x, z);
        t.add(-q, br(x, &sy_z));
        t.add(q, st(y, &xz));
        t.add(q, br(y, &sx_z));
        t.add(-q, st(x, &yz));
        t.add(q, st(x, &sy_z));
        t.add(-q, st(y, &sx_z));

        let sz_y = st(z, y);
        let sz_x = st(z, x);
        t.add(-q, br(x, &sz_y));
        t.add(q, st(x, &sz_y));
        t.add(q, br(y, &sz_x));
        t.add(-q, st(y, &sz_x));

        t.add(q, st(&sy_z, x));
        t.add(q, st(&sz_y, x));
        t.add(-q, st(&sx_z, y));
        t.add(-q, st(&sz_x, y));

        t.add(h, st(&xy, z));
        t.add(h, st(z, &xy));
        t.acc
    }

    /// `R(x,y)z` from the direct form, cross-checked against the expanded term list.
    pub fn curvature_r(&self, x: &Vector<T>, y: &Vector<T>, z: &Vector<T>) -> Result<Vector<T>> {
        self.check(x)?;
        self.check(y)?;
        self.check(z)?;
        let a = self.curvature_direct_scaled(x, y, z);
        let b = self.curvature_expanded_scaled(x, y, z);
        let scale = a.scale.max(b.scale).max(T::lit(1e-300).max(T::default_epsilon() * T::default_epsilon()));
        let dev = sup_norm(&(&a.acc - &b.acc));
        if dev > self.consistency_tol * scale {
            return Err(CurvError::Consistency {
                context: "curvature_R",
                deviation: (dev / scale).to_f64_lossy(),
                tolerance: self.consistency_tol.to_f64_lossy(),
            });
        }
        Ok(a.acc)
    }

    /// Unnormalized sectional curvature `<R(x,y)y, x>`.
    pub fn sectional(&self, x: &Vector<T>, y: &Vector<T>) -> Result<T> {
        Ok(self.inner(&self.curvature_r(x, y, y)?, x))
    }

    /// `sum_i <R(x_i,y)z, x_i>` over the given orthonormal basis indices.
    pub fn ricci_partial(&self, y: &Vector<T>, z: &Vector<T>, indices: &[usize]) -> Result<T> {
        let terms: Result<Vec<T>> = indices
            .par_iter()
            .map(|&i| {
                let xi = self.metric.orthonormal_vector(i);
                Ok(self.inner(&self.curvature_r(&xi, y, z)?, &xi))
            })
            .collect();
        Ok(terms?.into_iter().fold(T::zero(), |a, b| a + b))
    }

    /// Full trace over the whole (finite-dimensional) space.
    pub fn ricci_full(&self, y: &Vector<T>, z: &Vector<T>) -> Result<T> {
        let all: Vec<usize> = (0..self.dim()).collect();
        self.ricci_partial(y, z, &all)
    }

    /// Matrix `Ric(e_j, e_l)` in coordinate basis vectors.
    ///
    /// Uses pair symmetry, `Ric(y, z) = <y, sum_i R(z, x_i) x_i>`, so each column
    /// costs one pass over the orthonormal basis.
    pub fn ricci_matrix(&self) -> Result<Matrix<T>> {
        let n = self.dim();
        let basis: Vec<Vector<T>> = (0..n).map(|i| self.metric.orthonormal_vector(i)).collect();
        let cols: Result<Vec<Vector<T>>> = (0..n)
            .into_par_iter()
            .map(|l| {
                let mut el = Vector::zeros(n);
                el[l] = T::one();
                let mut v = Vector::zeros(n);
                for xi in &basis {
                    v += self.curvature_r(&el, xi, xi)?;
                }
                Ok(self.metric.apply(&v))
            })
            .collect();
        let cols = cols?;
        Ok(Matrix::from_fn(n, n, |j, l| cols[l][j]))
    }
}

/// Worst relative deviations of the geometric identities over random inputs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub seed: u64,
    pub samples: usize,
    pub metric_compatibility: f64,
    pub torsion_free: f64,
    pub antisymmetry_xy: f64,
    pub antisymmetry_zw: f64,
    pub pair_symmetry: f64,
    pub bianchi: f64,
    pub direct_vs_expanded: f64,
    pub direct_vs_commutator: f64,
    pub expanded_vs_commutator: f64,
}

impl SuiteReport {
    pub fn worst(&self) -> f64 {
        [
            self.metric_compatibility,
            self.torsion_free,
            self.antisymmetry_xy,
            self.antisymmetry_zw,
            self.pair_symmetry,
            self.bianchi,
            self.direct_vs_expanded,
            self.direct_vs_commutator,
            self.expanded_vs_commutator,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn fields(&self) -> [(&'static str, f64); 9] {
        [
            ("metric_compatibility", self.metric_compatibility),
            ("torsion_free", self.torsion_free),
            ("antisymmetry_xy", self.antisymmetry_xy),
            ("antisymmetry_zw", self.antisymmetry_zw),
            ("pair_symmetry", self.pair_symmetry),
            ("bianchi", self.bianchi),
            ("direct_vs_expanded", self.direct_vs_expanded),
            ("direct_vs_commutator", self.direct_vs_commutator),
            ("expanded_vs_commutator", self.expanded_vs_commutator),
        ]
    }
}

fn rel<T: Real>(dev: T, scale: T) -> f64 {
    (dev / scale.max(T::one())).to_f64_lossy()
}

/// Runs the identity suite on `samples` random quadruples drawn by `sample`.
/// The symmetry identities use the direct curvature form; the agreement of the
/// three curvature formulas is measured on every quadruple.
/// Each quadruple gets its own generator seeded from `seed` and its index, so
/// the result does not depend on thread scheduling.
pub fn symmetry_suite<T, B, F>(alg: &MetrizedAlgebra<T, B>, sample: F, samples: usize, seed: u64) -> Result<SuiteReport>
where
    T: Real,
    B: LieBracket<T>,
    F: Fn(&mut ChaCha8Rng) -> Vector<T> + Sync,
{
    let per: Result<Vec<[f64; 9]>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64));
            let x = sample(&mut rng);
            let y = sample(&mut rng);
            let z = sample(&mut rng);
            let w = sample(&mut rng);
            let ip = |a: &Vector<T>, b: &Vector<T>| alg.inner(a, b);

            let nxy = alg.levi_civita(&x, &y);
            let nxz = alg.levi_civita(&x, &z);
            let a = ip(&nxy, &z);
            let b = ip(&y, &nxz);
            let compat = rel((a + b).abs(), a.abs().max(b.abs()));

            let nyx = alg.levi_civita(&y, &x);
            let xy = alg.bracket(&x, &y);
            let tors = rel(sup_norm(&(&nxy - &nyx - &xy)), sup_norm(&nxy).max(sup_norm(&xy)));

            let d = alg.curvature_direct_scaled(&x, &y, &z);
            let e = alg.curvature_expanded(&x, &y, &z);
            let c = alg.curvature_commutator(&x, &y, &z);
            let sc = d.scale;
            let r = d.acc;
            let de = rel(sup_norm(&(&r - &e)), sc);
            let dc = rel(sup_norm(&(&r - &c)), sc);
            let ec = rel(sup_norm(&(&e - &c)), sc);

            let ryx = alg.curvature_direct(&y, &x, &z);
            let asym = rel(sup_norm(&(&r + &ryx)), sc);

            let rxyw = alg.curvature_direct(&x, &y, &w);
            let r_zw = ip(&r, &w);
            let r_wz = ip(&rxyw, &z);
            let zw = rel((r_zw + r_wz).abs(), r_zw.abs().max(r_wz.abs()));

            let rzw = alg.curvature_direct(&z, &w, &x);
            let p = ip(&rzw, &y);
            let pair = rel((r_zw - p).abs(), r_zw.abs().max(p.abs()));

            let ryz = alg.curvature_direct(&y, &z, &x);
            let rzx = alg.curvature_direct(&z, &x, &y);
            let bianchi = rel(sup_norm(&(&r + &ryz + &rzx)), sc);

            Ok([compat, tors, asym, zw, pair, bianchi, de, dc, ec])
        })
        .collect();
    let mut rep = SuiteReport { seed, samples, ..Default::default() };
    for v in per? {
        rep.metric_compatibility = rep.metric_compatibility.max(v[0]);
        rep.torsion_free = rep.torsion_free.max(v[1]);
        rep.antisymmetry_xy = rep.antisymmetry_xy.max(v[2]);
        rep.antisymmetry_zw = rep.antisymmetry_zw.max(v[3]);
        rep.pair_symmetry = rep.pair_symmetry.max(v[4]);
        rep.bianchi = rep.bianchi.max(v[5]);
        rep.direct_vs_expanded = rep.direct_vs_expanded.max(v[6]);
        rep.direct_vs_commutator = rep.direct_vs_commutator.max(v[7]);
        rep.expanded_vs_commutator = rep.expanded_vs_commutator.max(v[8]);
    }
    Ok(rep)
}

/// Bi-invariant metric from the algebra's own inner product.
pub fn bi_invariant<T: Real>(alg: LieAlgebraData<T>) -> MetrizedAlgebra<T, LieAlgebraData<T>> {
    let gram = alg.inner_gram().clone();
    let metric = Metric::dense(gram).expect("inner product validated at construction");
    MetrizedAlgebra::new(alg, metric).expect("dimensions agree")
}

//! Finite-dimensional Lie algebras given by structure constants.

use crate::error::{CurvError, Result};
use crate::scalar::{Matrix, Real, Vector};

/// Choice of the ad-invariant inner product on the algebra.
#[derive(Debug, Clone)]
pub enum InnerProduct<T: Real> {
    /// Minus the Killing form; requires a semisimple algebra.
    NegKilling,
    /// Explicit Gram matrix.
    Gram(Matrix<T>),
}

/// Structure constants `c[i][j][k]` with `[e_i, e_j] = sum_k c[i][j][k] e_k`,
/// together with the inner product and the Killing form.
#[derive(Debug, Clone)]
pub struct LieAlgebraData<T: Real> {
    name: String,
    dim: usize,
    c: Vec<T>,
    nonzero: Vec<(usize, usize, usize, T)>,
    inner_gram: Matrix<T>,
    killing_gram: Matrix<T>,
}

fn identity_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::default_epsilon() * T::lit(100.0))
}

impl<T: Real> LieAlgebraData<T> {
    /// Builds an algebra from a full `dim^3` table and validates antisymmetry,
    /// Jacobi and ad-invariance of the inner product.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        c: Vec<T>,
        inner: InnerProduct<T>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(CurvError::Input("algebra dimension must be positive".into()));
        }
        if c.len() != dim * dim * dim {
            return Err(CurvError::DimensionMismatch { expected: dim * dim * dim, got: c.len() });
        }
        let mut nonzero = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let v = c[(i * dim + j) * dim + k];
                    if v != T::zero() {
                        nonzero.push((i, j, k, v));
                    }
                }
            }
        }
        let mut alg = Self {
            name: name.into(),
            dim,
            c,
            nonzero,
            inner_gram: Matrix::zeros(dim, dim),
            killing_gram: Matrix::zeros(dim, dim),
        };
        let scale = alg.c.iter().fold(T::one(), |m, v| m.max(v.abs()));
        let tol = identity_tolerance::<T>() * scale * scale;

        let anti = alg.antisymmetry_defect();
        if anti > tol {
            return Err(CurvError::InvalidAlgebra { property: "antisymmetry", deviation: anti.to_f64_lossy() });
        }
        let jac = alg.jacobi_defect();
        if jac > tol {
            return Err(CurvError::InvalidAlgebra { property: "Jacobi identity", deviation: jac.to_f64_lossy() });
        }

        let mut killing = Matrix::zeros(dim, dim);
        let ads: Vec<Matrix<T>> = (0..dim).map(|i| alg.ad_basis(i)).collect();
        for i in 0..dim {
            for j in 0..dim {
                killing[(i, j)] = (&ads[i] * &ads[j]).trace();
            }
        }
        alg.killing_gram = killing;

        alg.inner_gram = match inner {
            InnerProduct::NegKilling => -alg.killing_gram.clone(),
            InnerProduct::Gram(g) => {
                if g.nrows() != dim || g.ncols() != dim {
                    return Err(CurvError::DimensionMismatch { expected: dim, got: g.nrows() });
                }
                g
            }
        };
        let asym = (&alg.inner_gram - alg.inner_gram.transpose()).amax();
        if asym > tol * alg.inner_gram.amax().max(T::one()) {
            return Err(CurvError::InvalidAlgebra { property: "inner product symmetry", deviation: asym.to_f64_lossy() });
        }
        if alg.inner_gram.clone().cholesky().is_none() {
            return Err(CurvError::InvalidAlgebra { property: "inner product positivity", deviation: f64::NAN });
        }
        let inv = alg.invariance_defect();
        if inv > tol * alg.inner_gram.amax().max(T::one()) {
            return Err(CurvError::InvalidAlgebra { property: "ad-invariance", deviation: inv.to_f64_lossy() });
        }
        Ok(alg)
    }

    /// Builds from sparse entries; each `(i, j, k, v)` sets `c[i][j][k] = v` and
    /// `c[j][i][k] = -v`.
    pub fn from_entries(
        name: impl Into<String>,
        dim: usize,
        entries: &[(usize, usize, usize, T)],
        inner: InnerProduct<T>,
    ) -> Result<Self> {
        let mut c = vec![T::zero(); dim * dim * dim];
        let mut set = vec![false; dim * dim * dim];
        for &(i, j, k, v) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(CurvError::Input(format!("index ({i},{j},{k}) out of range for dim {dim}")));
            }
            if i == j && v != T::zero() {
                return Err(CurvError::InvalidAlgebra { property: "antisymmetry", deviation: v.abs().to_f64_lossy() });
            }
            for (a, b, val) in [(i, j, v), (j, i, -v)] {
                let idx = (a * dim + b) * dim + k;
                if set[idx] && c[idx] != val {
                    return Err(CurvError::Input(format!("conflicting entries for c[{a}][{b}][{k}]")));
                }
                c[idx] = val;
                set[idx] = true;
            }
        }
        Self::new(name, dim, c, inner)
    }

    /// Parses the text format: a `dim N` header followed by `i j k value` lines.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(name: impl Into<String>, text: &str, inner: Option<Matrix<T>>) -> Result<Self> {
        let mut dim = None;
        let mut entries = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let err = |m: &str| CurvError::Parse { line: ln + 1, message: m.to_string() };
            if parts[0] == "dim" {
                if parts.len() != 2 {
                    return Err(err("expected `dim N`"));
                }
                dim = Some(parts[1].parse::<usize>().map_err(|_| err("bad dimension"))?);
                continue;
            }
            if dim.is_none() {
                return Err(err("`dim N` header must come first"));
            }
            if parts.len() != 4 {
                return Err(err("expected `i j k value`"));
            }
            let idx = |s: &str| s.parse::<usize>().map_err(|_| err("bad index"));
            let v: f64 = parts[3].parse().map_err(|_| err("bad value"))?;
            entries.push((idx(parts[0])?, idx(parts[1])?, idx(parts[2])?, T::lit(v)));
        }
        let dim = dim.ok_or(CurvError::Parse { line: 0, message: "missing `dim N` header".into() })?;
        let inner = inner.map(InnerProduct::Gram).unwrap_or(InnerProduct::NegKilling);
        Self::from_entries(name, dim, &entries, inner)
    }

    /// su(2) with `[e1,e2]=e3` and cyclic permutations.
    pub fn su2() -> Self {
        let one = T::one();
        Self::from_entries("su2", 3, &[(0, 1, 2, one), (1, 2, 0, one), (2, 0, 1, one)], InnerProduct::NegKilling)
            .expect("su(2) constants are valid")
    }

    /// su(2) with a custom inner product (not necessarily ad-invariant is rejected).
    pub fn su2_with_inner(gram: Matrix<T>) -> Result<Self> {
        let one = T::one();
        Self::from_entries("su2", 3, &[(0, 1, 2, one), (1, 2, 0, one), (2, 0, 1, one)], InnerProduct::Gram(gram))
    }

    /// su(3) in the basis `T_a = -(i/2) lambda_a` built from the Gell-Mann matrices,
    /// so that `[T_a, T_b] = f_abc T_c`.
    pub fn su3() -> Self {
        let h = T::lit(0.5);
        let r = T::lit(3f64.sqrt() / 2.0);
        let f: [(usize, usize, usize, T); 9] = [
            (0, 1, 2, T::one()),
            (0, 3, 6, h),
            (0, 4, 5, -h),
            (1, 3, 5, h),
            (1, 4, 6, h),
            (2, 3, 4, h),
            (2, 5, 6, -h),
            (3, 4, 7, r),
            (5, 6, 7, r),
        ];
        let mut entries = Vec::new();
        for &(a, b, c, v) in &f {
            // total antisymmetry: the three cyclic orders carry the same sign
            entries.push((a, b, c, v));
            entries.push((b, c, a, v));
            entries.push((c, a, b, v));
        }
        Self::from_entries("su3", 8, &entries, InnerProduct::NegKilling).expect("su(3) constants are valid")
    }

    /// Abelian algebra with the Euclidean inner product.
    pub fn abelian(dim: usize) -> Self {
        Self::new("abelian", dim, vec![T::zero(); dim * dim * dim], InnerProduct::Gram(Matrix::identity(dim, dim)))
            .expect("abelian algebra is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn constant(&self, i: usize, j: usize, k: usize) -> T {
        self.c[(i * self.dim + j) * self.dim + k]
    }

    /// Nonzero structure constants as `(i, j, k, c[i][j][k])`.
    pub fn nonzero(&self) -> &[(usize, usize, usize, T)] {
        &self.nonzero
    }

    pub fn inner_gram(&self) -> &Matrix<T> {
        &self.inner_gram
    }

    pub fn killing_gram(&self) -> &Matrix<T> {
        &self.killing_gram
    }

    pub fn is_abelian(&self) -> bool {
        self.nonzero.is_empty()
    }

    fn check(&self, v: &[T]) -> Result<()> {
        if v.len() != self.dim {
            return Err(CurvError::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    pub fn bracket(&self, x: &[T], y: &[T]) -> Result<Vector<T>> {
        self.check(x)?;
        self.check(y)?;
        let mut out = Vector::zeros(self.dim);
        self.bracket_acc(x, y, T::one(), out.as_mut_slice());
        Ok(out)
    }

    /// `out += scale * [x, y]` without dimension checks.
    #[inline]
    pub fn bracket_acc(&self, x: &[T], y: &[T], scale: T, out: &mut [T]) {
        for &(i, j, k, v) in &self.nonzero {
            out[k] += scale * v * x[i] * y[j];
        }
    }

    /// `out += scale * ad_x^T w`, i.e. `out_b += scale * sum x_a c[a][b][c] w_c`.
    #[inline]
    pub fn coadjoint_acc(&self, x: &[T], w: &[T], scale: T, out: &mut [T]) {
        for &(i, j, k, v) in &self.nonzero {
            out[j] += scale * v * x[i] * w[k];
        }
    }

    fn ad_basis(&self, i: usize) -> Matrix<T> {
        Matrix::from_fn(self.dim, self.dim, |k, j| self.constant(i, j, k))
    }

    /// Matrix of `y -> [x, y]`.
    pub fn ad_matrix(&self, x: &[T]) -> Result<Matrix<T>> {
        self.check(x)?;
        let mut m = Matrix::zeros(self.dim, self.dim);
        for &(i, j, k, v) in &self.nonzero {
            m[(k, j)] += v * x[i];
        }
        Ok(m)
    }

    pub fn killing_form(&self, x: &[T], y: &[T]) -> Result<T> {
        self.check(x)?;
        self.check(y)?;
        Ok(bilinear(&self.killing_gram, x, y))
    }

    /// The invariant inner product `<<x, y>>`.
    pub fn inner(&self, x: &[T], y: &[T]) -> Result<T> {
        self.check(x)?;
        self.check(y)?;
        Ok(bilinear(&self.inner_gram, x, y))
    }

    /// Columns form an orthonormal basis for the inner product.
    pub fn orthonormal_basis(&self) -> Matrix<T> {
        let l = self.inner_gram.clone().cholesky().expect("validated at construction").l();
        l.transpose().try_inverse().expect("triangular factor is invertible")
    }

    pub fn antisymmetry_defect(&self) -> T {
        let d = self.dim;
        let mut m = T::zero();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    m = m.max((self.constant(i, j, k) + self.constant(j, i, k)).abs());
                }
            }
        }
        m
    }

    pub fn jacobi_defect(&self) -> T {
        let d = self.dim;
        let mut worst = T::zero();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let mut s = T::zero();
                        for m in 0..d {
                            s += self.constant(i, j, m) * self.constant(m, k, l)
                                + self.constant(j, k, m) * self.constant(m, i, l)
                                + self.constant(k, i, m) * self.constant(m, j, l);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest `|<<[a,b],c>> + <<b,[a,c]>>|` over basis triples.
    pub fn invariance_defect(&self) -> T {
        let d = self.dim;
        let mut worst = T::zero();
        for a in 0..d {
            let ad = self.ad_basis(a);
            let m = ad.transpose() * &self.inner_gram + &self.inner_gram * &ad;
            worst = worst.max(m.amax());
        }
        worst
    }
}

fn bilinear<T: Real>(g: &Matrix<T>, x: &[T], y: &[T]) -> T {
    let mut s = T::zero();
    for i in 0..x.len() {
        if x[i] == T::zero() {
            continue;
        }
        for j in 0..y.len() {
            s += x[i] * g[(i, j)] * y[j];
        }
    }
    s
}

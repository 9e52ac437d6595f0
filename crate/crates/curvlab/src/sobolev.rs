//! Spectral truncation of the mapping-group algebra `W^s(Sigma, k)` with the
//! metric `<x, y> = int <<P^s x, y>> dV / vol`.

use crate::engine::{LieBracket, Metric, MetrizedAlgebra};
use crate::error::{CurvError, Result};
use crate::lie::LieAlgebraData;
use crate::scalar::{sup_norm, Matrix, Real, Vector};
use crate::spectral::{mode_product, Domain, GridTransform, Mode, ModeBasis, Parity, SpectralOperator};
use rayon::prelude::*;

/// Lie-algebra-valued trigonometric polynomials on the ambient basis.
///
/// Coordinates are laid out as `block * dim(k) + a`. With `based = true` the
/// constant mode is dropped and the bracket is the one of loops vanishing at
/// the base point, which models the quotient by constant maps.
#[derive(Debug, Clone)]
pub struct MappingAlgebra<T: Real> {
    lie: LieAlgebraData<T>,
    basis: ModeBasis<T>,
    grid: GridTransform<T>,
    based: bool,
    dk: usize,
    path: ProductPath,
}

/// How pointwise products are evaluated; both paths agree to roundoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductPath {
    /// Pick the cheaper path from the operand supports.
    Auto,
    /// Exact mode-product table.
    Table,
    /// Aliasing-free sampling grid with FFTs.
    Grid,
}

#[derive(Clone, Copy)]
enum Pointwise {
    Bracket,
    Coadjoint,
}

impl<T: Real> MappingAlgebra<T> {
    pub fn new(lie: LieAlgebraData<T>, basis: ModeBasis<T>, based: bool) -> Self {
        let dk = lie.dim();
        let grid = GridTransform::new(&basis);
        Self { lie, basis, grid, based, dk, path: ProductPath::Auto }
    }

    pub fn with_product_path(mut self, path: ProductPath) -> Self {
        self.path = path;
        self
    }

    pub fn lie(&self) -> &LieAlgebraData<T> {
        &self.lie
    }

    pub fn basis(&self) -> &ModeBasis<T> {
        &self.basis
    }

    pub fn is_based(&self) -> bool {
        self.based
    }

    pub fn lie_dim(&self) -> usize {
        self.dk
    }

    fn offset(&self) -> usize {
        usize::from(self.based)
    }

    /// Number of coordinate blocks.
    pub fn blocks(&self) -> usize {
        self.basis.len() - self.offset()
    }

    /// Coordinate block of a basis mode index, `None` for an excluded constant.
    #[inline]
    pub fn block_of(&self, mode_index: usize) -> Option<usize> {
        if self.based && mode_index == 0 {
            None
        } else {
            Some(mode_index - self.offset())
        }
    }

    #[inline]
    pub fn mode_of_block(&self, block: usize) -> usize {
        block + self.offset()
    }

    pub fn mode_of_block_ref(&self, block: usize) -> &Mode {
        self.basis.mode(self.mode_of_block(block))
    }

    fn nonzero_blocks(&self, v: &Vector<T>) -> Vec<usize> {
        let dk = self.dk;
        (0..self.blocks()).filter(|&b| v.rows(b * dk, dk).iter().any(|x| *x != T::zero())).collect()
    }

    /// Largest `max |k_i|` over the nonzero blocks of `v`.
    pub fn degree(&self, v: &Vector<T>) -> usize {
        self.nonzero_blocks(v)
            .into_iter()
            .map(|b| self.mode_of_block_ref(b).max_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Vector with the given `(mode, k-coefficients)` terms.
    pub fn field(&self, terms: &[(Mode, Vec<T>)]) -> Result<Vector<T>> {
        let mut v = Vector::zeros(self.blocks() * self.dk);
        for (m, a) in terms {
            if a.len() != self.dk {
                return Err(CurvError::DimensionMismatch { expected: self.dk, got: a.len() });
            }
            let idx = self.basis.index_of(m).ok_or(CurvError::Truncation {
                requested: m.max_abs(),
                ambient: self.basis.cutoff() as i64,
            })?;
            let b = self.block_of(idx).ok_or_else(|| CurvError::Input("constant mode is quotiented out when m0 = 0".into()))?;
            for (i, x) in a.iter().enumerate() {
                v[b * self.dk + i] += *x;
            }
        }
        Ok(v)
    }

    /// Factored element `X (x) a` from scalar mode coefficients on the same basis.
    pub fn factored(&self, scalar: &Vector<T>, a: &[T]) -> Vector<T> {
        let mut v = Vector::zeros(self.blocks() * self.dk);
        for b in 0..self.blocks() {
            let c = scalar[self.mode_of_block(b)];
            if c != T::zero() {
                for (i, x) in a.iter().enumerate() {
                    v[b * self.dk + i] = c * *x;
                }
            }
        }
        v
    }

    /// Value at the base point, `sum_q phi_q(0) x_q`.
    fn value_at_base(&self, v: &Vector<T>, blocks: &[usize]) -> Vec<T> {
        let r2 = T::lit(2f64.sqrt());
        let mut out = vec![T::zero(); self.dk];
        for &b in blocks {
            let w = match self.mode_of_block_ref(b).parity {
                Parity::Const => T::one(),
                Parity::Cos => r2,
                Parity::Sin => continue,
            };
            for a in 0..self.dk {
                out[a] += w * v[b * self.dk + a];
            }
        }
        out
    }

    /// Projected pointwise bilinear map, by the exact mode-product table for
    /// sparse operands and on the aliasing-free grid otherwise.
    fn pointwise(&self, kind: Pointwise, x: &Vector<T>, y: &Vector<T>, out: &mut Vector<T>) {
        let xb = self.nonzero_blocks(x);
        let yb = self.nonzero_blocks(y);
        if xb.is_empty() || yb.is_empty() || self.lie.is_abelian() {
            return;
        }
        let pts = self.grid.points() as f64;
        let table_cost = (xb.len() * yb.len() * self.lie.nonzero().len()) as f64;
        let grid_cost = 0.25 * (3 * self.dk) as f64 * pts * pts.log2();
        let use_table = match self.path {
            ProductPath::Auto => table_cost <= grid_cost,
            ProductPath::Table => true,
            ProductPath::Grid => false,
        };
        if use_table {
            self.pointwise_table(kind, x, y, &xb, &yb, out);
        } else {
            self.pointwise_grid(kind, x, y, &xb, &yb, out);
        }
    }

    fn pointwise_table(&self, kind: Pointwise, x: &Vector<T>, y: &Vector<T>, xb: &[usize], yb: &[usize], out: &mut Vector<T>) {
        let dk = self.dk;
        for &p in xb {
            let mp = *self.mode_of_block_ref(p);
            let xs = &x.as_slice()[p * dk..(p + 1) * dk];
            for &q in yb {
                let mq = *self.mode_of_block_ref(q);
                let ys = &y.as_slice()[q * dk..(q + 1) * dk];
                let (terms, n) = mode_product::<T>(&mp, &mq);
                for (m, c) in terms[..n].iter().flatten() {
                    let Some(idx) = self.basis.index_of(m) else { continue };
                    let Some(r) = self.block_of(idx) else { continue };
                    let o = &mut out.as_mut_slice()[r * dk..(r + 1) * dk];
                    match kind {
                        Pointwise::Bracket => self.lie.bracket_acc(xs, ys, *c, o),
                        Pointwise::Coadjoint => self.lie.coadjoint_acc(xs, ys, *c, o),
                    }
                }
            }
        }
    }

    fn component_grids(&self, v: &Vector<T>, blocks: &[usize]) -> Vec<Option<Vec<T>>> {
        let dk = self.dk;
        let modes: Vec<usize> = blocks.iter().map(|&b| self.mode_of_block(b)).collect();
        let live: Vec<usize> = (0..dk).filter(|&a| blocks.iter().any(|&b| v[b * dk + a] != T::zero())).collect();
        let off = self.offset();
        let grids = self.grid.synthesize_components(&modes, live.len(), |j, i| v[(i - off) * dk + live[j]]);
        let mut out = vec![None; dk];
        for (a, g) in live.into_iter().zip(grids) {
            out[a] = Some(g);
        }
        out
    }

    fn pointwise_grid(&self, kind: Pointwise, x: &Vector<T>, y: &Vector<T>, xb: &[usize], yb: &[usize], out: &mut Vector<T>) {
        let dk = self.dk;
        let gx = self.component_grids(x, xb);
        let gy = self.component_grids(y, yb);
        let pts = self.grid.points();
        let mut acc: Vec<Option<Vec<T>>> = vec![None; dk];
        for &(i, j, k, v) in self.lie.nonzero() {
            let (a, b, target) = match kind {
                Pointwise::Bracket => (i, j, k),
                Pointwise::Coadjoint => (i, k, j),
            };
            let (Some(fa), Some(fb)) = (&gx[a], &gy[b]) else { continue };
            let o = acc[target].get_or_insert_with(|| vec![T::zero(); pts]);
            for ((o, p), q) in o.iter_mut().zip(fa).zip(fb) {
                *o += v * *p * *q;
            }
        }
        let (targets, grids): (Vec<usize>, Vec<&[T]>) = acc.iter().enumerate().filter_map(|(c, g)| g.as_deref().map(|g| (c, g))).unzip();
        self.grid.analyze_components(&grids, |j, i, val| {
            if let Some(b) = self.block_of(i) {
                out[b * dk + targets[j]] += val;
            }
        });
    }
}

impl<T: Real> LieBracket<T> for MappingAlgebra<T> {
    fn dim(&self) -> usize {
        self.blocks() * self.dk
    }

    fn bracket(&self, x: &Vector<T>, y: &Vector<T>) -> Vector<T> {
        let mut out = Vector::zeros(self.dim());
        self.pointwise(Pointwise::Bracket, x, y, &mut out);
        if self.based {
            let dk = self.dk;
            let xb = self.nonzero_blocks(x);
            let yb = self.nonzero_blocks(y);
            let x0 = self.value_at_base(x, &xb);
            let y0 = self.value_at_base(y, &yb);
            let o = out.as_mut_slice();
            for &p in &xb {
                self.lie.bracket_acc(&x.as_slice()[p * dk..(p + 1) * dk], &y0, -T::one(), &mut o[p * dk..(p + 1) * dk]);
            }
            for &q in &yb {
                self.lie.bracket_acc(&x0, &y.as_slice()[q * dk..(q + 1) * dk], -T::one(), &mut o[q * dk..(q + 1) * dk]);
            }
        }
        out
    }

    fn coadjoint(&self, x: &Vector<T>, w: &Vector<T>) -> Vector<T> {
        let mut out = Vector::zeros(self.dim());
        self.pointwise(Pointwise::Coadjoint, x, w, &mut out);
        if self.based {
            let dk = self.dk;
            let xb = self.nonzero_blocks(x);
            let wb = self.nonzero_blocks(w);
            // transpose of y -> -[x, y(0)]
            let mut c = vec![T::zero(); dk];
            for &p in &xb {
                self.lie.coadjoint_acc(&x.as_slice()[p * dk..(p + 1) * dk], &w.as_slice()[p * dk..(p + 1) * dk], -T::one(), &mut c);
            }
            if c.iter().any(|v| *v != T::zero()) {
                let r2 = T::lit(2f64.sqrt());
                for b in 0..self.blocks() {
                    if self.mode_of_block_ref(b).parity == Parity::Cos {
                        for a in 0..dk {
                            out[b * dk + a] += r2 * c[a];
                        }
                    }
                }
            }
            // transpose of y -> -[x(0), y]
            let x0 = self.value_at_base(x, &xb);
            let o = out.as_mut_slice();
            for &q in &wb {
                self.lie.coadjoint_acc(&x0, &w.as_slice()[q * dk..(q + 1) * dk], -T::one(), &mut o[q * dk..(q + 1) * dk]);
            }
        }
        out
    }
}

/// Dense matrix of an operator restricted to a set of input coordinate directions.
#[derive(Debug, Clone)]
pub struct OperatorMatrix<T: Real> {
    pub matrix: Matrix<T>,
    /// Coordinate index of the basis vector feeding each column.
    pub columns: Vec<usize>,
}

impl<T: Real> OperatorMatrix<T> {
    pub fn max_abs_diff(&self, other: &Self) -> T {
        (&self.matrix - &other.matrix).amax()
    }
}

/// Finite-dimensional model of `W^s(Sigma, K)` at cutoff `N` with products
/// evaluated at the ambient cutoff `3N`.
#[derive(Debug, Clone)]
pub struct TruncatedGroupModel<T: Real> {
    pub geometry: MetrizedAlgebra<T, MappingAlgebra<T>>,
    spectral: SpectralOperator<T>,
    cutoff: usize,
    weights: Vec<T>,
}

impl<T: Real> TruncatedGroupModel<T> {
    /// `m0 = 0` selects the quotient model with the constant mode removed.
    pub fn new(domain: Domain, lie: LieAlgebraData<T>, cutoff: usize, s: T, m0: T) -> Result<Self> {
        if cutoff == 0 {
            return Err(CurvError::Input("cutoff must be positive".into()));
        }
        let basis = ModeBasis::new(domain, 3 * cutoff);
        let spectral = SpectralOperator::new(&basis, s, m0)?;
        let based = spectral.excludes_constant();
        let alg = MappingAlgebra::new(lie, basis, based);
        let weights: Vec<T> = (0..alg.blocks()).map(|b| spectral.p_s(alg.mode_of_block(b))).collect();
        let metric = Metric::block(weights.clone(), alg.lie().inner_gram().clone())?;
        let geometry = MetrizedAlgebra::new(alg, metric)?;
        Ok(Self { geometry, spectral, cutoff, weights })
    }

    pub fn algebra(&self) -> &MappingAlgebra<T> {
        &self.geometry.algebra
    }

    pub fn with_product_path(mut self, path: ProductPath) -> Self {
        self.geometry.algebra = self.geometry.algebra.with_product_path(path);
        self
    }

    pub fn basis(&self) -> &ModeBasis<T> {
        self.algebra().basis()
    }

    pub fn domain(&self) -> Domain {
        self.basis().domain()
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn ambient_cutoff(&self) -> usize {
        3 * self.cutoff
    }

    pub fn s(&self) -> T {
        self.spectral.s
    }

    pub fn m0(&self) -> T {
        self.spectral.m0
    }

    pub fn is_quotient(&self) -> bool {
        self.algebra().is_based()
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn lie_dim(&self) -> usize {
        self.algebra().lie_dim()
    }

    /// Metric weight `(|k|^2 + m0^2)^s` of a coordinate block.
    pub fn weight(&self, block: usize) -> T {
        self.weights[block]
    }

    /// Coordinate blocks whose modes satisfy `max |k_i| <= m`, in mode order.
    pub fn blocks_within(&self, m: usize) -> Vec<usize> {
        let alg = self.algebra();
        (0..alg.blocks()).filter(|&b| alg.mode_of_block_ref(b).max_abs() <= m as i64).collect()
    }

    fn require_gform(&self) -> Result<()> {
        if self.is_quotient() {
            return Err(CurvError::Input(
                "G-form operator identities need m0 > 0 (the quotient bracket is not pointwise)".into(),
            ));
        }
        Ok(())
    }

    fn check_input(&self, v: &Vector<T>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(CurvError::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        let d = self.algebra().degree(v);
        if d > self.cutoff {
            return Err(CurvError::Truncation { requested: d as i64, ambient: self.cutoff as i64 });
        }
        Ok(())
    }

    /// Multiplies each block by `G^{-1} = P^s`.
    pub fn apply_ginv(&self, v: &Vector<T>) -> Vector<T> {
        let dk = self.lie_dim();
        Vector::from_fn(v.len(), |i, _| v[i] * self.weights[i / dk])
    }

    /// Multiplies each block by `G = P^{-s}`.
    pub fn apply_g(&self, v: &Vector<T>) -> Vector<T> {
        let dk = self.lie_dim();
        Vector::from_fn(v.len(), |i, _| v[i] / self.weights[i / dk])
    }

    fn br(&self, a: &Vector<T>, b: &Vector<T>) -> Vector<T> {
        self.geometry.bracket(a, b)
    }

    /// `-G ad_x G^{-1} z`, the G-form expression of the metric adjoint.
    pub fn ad_star_gform(&self, x: &Vector<T>, z: &Vector<T>) -> Vector<T> {
        -self.apply_g(&self.br(x, &self.apply_ginv(z)))
    }

    /// Largest entry of `ad_x^* - (-G ad_x G^{-1})` over every ambient basis vector,
    /// with the largest entry of `ad_x^*` for scale.
    pub fn adjoint_identity_check(&self, x: &Vector<T>) -> Result<(T, T)> {
        self.require_gform()?;
        self.check_input(x)?;
        let n = self.dim();
        let per: Vec<(T, T)> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = Vector::zeros(n);
                e[j] = T::one();
                let a = self.geometry.ad_star_apply(x, &e);
                let b = self.ad_star_gform(x, &e);
                (sup_norm(&(&a - &b)), sup_norm(&a))
            })
            .collect();
        Ok(per.into_iter().fold((T::zero(), T::zero()), |(d, s), (a, b)| (d.max(a), s.max(b))))
    }

    /// Coordinate indices of the basis vectors with modes `<= cutoff`.
    pub fn input_columns(&self) -> Vec<usize> {
        let dk = self.lie_dim();
        self.blocks_within(self.cutoff).into_iter().flat_map(|b| (0..dk).map(move |a| b * dk + a)).collect()
    }

    fn operator_matrix<F>(&self, f: F) -> Result<OperatorMatrix<T>>
    where
        F: Fn(&Vector<T>) -> Result<Vector<T>> + Sync,
    {
        let n = self.dim();
        let columns = self.input_columns();
        let cols: Result<Vec<Vector<T>>> = columns
            .par_iter()
            .map(|&j| {
                let mut e = Vector::zeros(n);
                e[j] = T::one();
                f(&e)
            })
            .collect();
        Ok(OperatorMatrix { matrix: Matrix::from_columns(&cols?), columns })
    }

    /// Matrix of `z -> R(x,y)z` from the general engine.
    pub fn curvature_engine_matrix(&self, x: &Vector<T>, y: &Vector<T>) -> Result<OperatorMatrix<T>> {
        self.check_input(x)?;
        self.check_input(y)?;
        self.operator_matrix(|z| self.geometry.curvature_r(x, y, z))
    }

    // Building blocks of the condensed form, each applied to a vector.
    fn op_d(&self, x: &Vector<T>, w: &Vector<T>) -> Vector<T> {
        // G [G^{-1}, ad_x] w
        self.apply_g(&(self.apply_ginv(&self.br(x, w)) - self.br(x, &self.apply_ginv(w))))
    }

    fn op_p(&self, x: &Vector<T>, gx: &Vector<T>, w: &Vector<T>) -> Vector<T> {
        // G([G^{-1}, ad_x] - ad_{G^{-1}x}) w
        self.op_d(x, w) - self.apply_g(&self.br(gx, w))
    }

    fn op_a(&self, x: &Vector<T>, w: &Vector<T>) -> Vector<T> {
        // G ad_x G^{-1} w
        self.apply_g(&self.br(x, &self.apply_ginv(w)))
    }

    fn op_b(&self, gx: &Vector<T>, w: &Vector<T>) -> Vector<T> {
        // G ad_{G^{-1}x} w
        self.apply_g(&self.br(gx, w))
    }

    fn condensed_apply(&self, x: &Vector<T>, y: &Vector<T>, z: &Vector<T>, with_d_term: bool) -> Vector<T> {
        let gx = self.apply_ginv(x);
        let gy = self.apply_ginv(y);
        let q = T::lit(0.25);
        let two = T::lit(2.0);
        let mut acc = self.op_p(x, &gx, &self.op_p(y, &gy, z)) - self.op_p(y, &gy, &self.op_p(x, &gx, z));
        if with_d_term {
            acc -= (self.op_d(x, &self.op_d(y, z)) - self.op_d(y, &self.op_d(x, z))) * two;
        }
        acc -= (self.op_a(x, &self.op_b(&gy, z)) - self.op_b(&gy, &self.op_a(x, z))) * two;
        acc += (self.op_a(y, &self.op_b(&gx, z)) - self.op_b(&gx, &self.op_a(y, z))) * two;
        let gxy = self.apply_ginv(&self.br(x, y));
        acc += self.op_b(&gxy, z) * two;
        acc * q
    }

    /// Condensed commutator form of `z -> R(x,y)z`:
    /// `1/4([P_x,P_y] - 2[D_x,D_y] - 2[G ad_x G^{-1}, G ad_{G^{-1}y}]
    ///  + 2[G ad_y G^{-1}, G ad_{G^{-1}x}] + 2 G ad_{G^{-1}[x,y]})`
    /// with `D_x = G[G^{-1}, ad_x]` and `P_x = D_x - G ad_{G^{-1}x}`.
    pub fn curvature_condensed(&self, x: &Vector<T>, y: &Vector<T>) -> Result<OperatorMatrix<T>> {
        self.require_gform()?;
        self.check_input(x)?;
        self.check_input(y)?;
        self.operator_matrix(|z| Ok(self.condensed_apply(x, y, z, true)))
    }

    /// The condensed form without the `-2[D_x,D_y]` term, kept to document that
    /// it does not reproduce the curvature.
    pub fn curvature_condensed_without_d_term(&self, x: &Vector<T>, y: &Vector<T>) -> Result<OperatorMatrix<T>> {
        self.require_gform()?;
        self.check_input(x)?;
        self.check_input(y)?;
        self.operator_matrix(|z| Ok(self.condensed_apply(x, y, z, false)))
    }

    /// First line of the operator expansion, assembled directly and through the two
    /// commutator forms. Returns the three operator matrices.
    pub fn first_line_forms(&self, x: &Vector<T>, y: &Vector<T>) -> Result<[OperatorMatrix<T>; 3]> {
        self.require_gform()?;
        self.check_input(x)?;
        self.check_input(y)?;
        let xy = self.br(x, y);
        let direct = self.operator_matrix(|z| {
            let mut v = -self.br(&xy, z);
            v += self.br(x, &self.op_a(y, z)) - self.op_a(y, &self.br(x, z));
            v += self.op_a(x, &self.br(y, z)) - self.br(y, &self.op_a(x, z));
            v -= self.op_a(&xy, z);
            Ok(v)
        })?;
        let line1 = self.operator_matrix(|z| Ok(self.op_d(y, &self.op_d(x, z)) - self.op_d(x, &self.op_d(y, z))))?;
        // [G, ad_x][G^{-1}, ad_y] - [G, ad_y][G^{-1}, ad_x]
        let comm_g = |a: &Vector<T>, w: &Vector<T>| self.apply_g(&self.br(a, w)) - self.br(a, &self.apply_g(w));
        let comm_gi = |a: &Vector<T>, w: &Vector<T>| self.apply_ginv(&self.br(a, w)) - self.br(a, &self.apply_ginv(w));
        let line2 = self.operator_matrix(|z| Ok(comm_g(x, &comm_gi(y, z)) - comm_g(y, &comm_gi(x, z))))?;
        Ok([direct, line1, line2])
    }

    /// Maximum pairwise entrywise deviation between the three first-line forms,
    /// and the largest entry among them.
    pub fn first_line_identity_check(&self, x: &Vector<T>, y: &Vector<T>) -> Result<(T, T)> {
        let [a, b, c] = self.first_line_forms(x, y)?;
        let dev = a.max_abs_diff(&b).max(a.max_abs_diff(&c)).max(b.max_abs_diff(&c));
        let scale = a.matrix.amax().max(b.matrix.amax()).max(c.matrix.amax());
        Ok((dev, scale))
    }

    /// Probes the decay of `z -> R(x,y)z` on single-mode inputs `e_k (x) a`.
    pub fn order_decay_probe(&self, x: &Vector<T>, y: &Vector<T>, modes: &[Mode], a: &[T]) -> Result<DecayProbe> {
        self.check_input(x)?;
        self.check_input(y)?;
        if modes.len() < 2 {
            return Err(CurvError::Input("decay probe needs at least two modes".into()));
        }
        let reach = self.algebra().degree(x) + self.algebra().degree(y);
        let unreliable = modes.iter().any(|m| m.max_abs() as usize > self.cutoff || m.max_abs() as usize + 2 * reach > self.ambient_cutoff());
        let alg = self.algebra();
        let points: Result<Vec<(f64, f64)>> = modes
            .par_iter()
            .map(|m| {
                let z = alg.field(&[(*m, a.to_vec())])?;
                let r = self.geometry.curvature_r(x, y, &z)?;
                let ratio = self.geometry.metric.norm(&r) / self.geometry.metric.norm(&z);
                Ok(((m.norm2() as f64).sqrt(), ratio.to_f64_lossy()))
            })
            .collect();
        let points = points?;
        Ok(DecayProbe::fit(points, unreliable))
    }
}

/// Result of a decay probe: `(|k|, r_k)` samples and the fitted log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayProbe {
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope of `log r_k` against `log(1 + |k|)`; `None` when degenerate.
    pub slope: Option<f64>,
    pub degenerate: bool,
    pub unreliable: bool,
}

impl DecayProbe {
    fn fit(points: Vec<(f64, f64)>, unreliable: bool) -> Self {
        let peak = points.iter().fold(0.0f64, |m, p| m.max(p.1));
        let usable: Vec<(f64, f64)> =
            points.iter().filter(|p| p.1 > peak * 1e-14 && p.1 > 0.0).map(|p| ((1.0 + p.0).ln(), p.1.ln())).collect();
        if usable.len() < 2 || peak == 0.0 {
            return Self { points, slope: None, degenerate: true, unreliable };
        }
        let slope = least_squares_line(&usable).1;
        Self { points, slope: Some(slope), degenerate: false, unreliable }
    }
}

/// `(intercept, slope)` of the least-squares line through the points.
pub fn least_squares_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

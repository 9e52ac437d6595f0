//! Configuration groups `prod_V K`: the metric induced by the Green's function
//! of `P^s` restricted to a finite point set.

use crate::engine::{LieBracket, Metric, MetrizedAlgebra};
use crate::error::{CurvError, Result};
use crate::lie::LieAlgebraData;
use crate::scalar::{Matrix, Real, Vector};
use crate::spectral::{greens_function, Domain};
use rayon::prelude::*;

/// Pointwise bracket on `K^V`, coordinates laid out as `site * k + a`.
#[derive(Debug, Clone)]
pub struct SiteAlgebra<T: Real> {
    lie: LieAlgebraData<T>,
    sites: usize,
}

impl<T: Real> SiteAlgebra<T> {
    pub fn lie(&self) -> &LieAlgebraData<T> {
        &self.lie
    }

    pub fn sites(&self) -> usize {
        self.sites
    }
}

impl<T: Real> LieBracket<T> for SiteAlgebra<T> {
    fn dim(&self) -> usize {
        self.sites * self.lie.dim()
    }

    fn bracket(&self, x: &Vector<T>, y: &Vector<T>) -> Vector<T> {
        let k = self.lie.dim();
        let mut out = Vector::zeros(self.dim());
        for v in 0..self.sites {
            let r = v * k..(v + 1) * k;
            self.lie.bracket_acc(&x.as_slice()[r.clone()], &y.as_slice()[r.clone()], T::one(), &mut out.as_mut_slice()[r]);
        }
        out
    }

    fn coadjoint(&self, x: &Vector<T>, w: &Vector<T>) -> Vector<T> {
        let k = self.lie.dim();
        let mut out = Vector::zeros(self.dim());
        for v in 0..self.sites {
            let r = v * k..(v + 1) * k;
            self.lie.coadjoint_acc(&x.as_slice()[r.clone()], &w.as_slice()[r.clone()], T::one(), &mut out.as_mut_slice()[r]);
        }
        out
    }
}

/// Largest accepted condition number of the Green's matrix.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct Configuration<T: Real> {
    pub domain: Domain,
    pub points: Vec<[T; 2]>,
    pub s: T,
    pub m0: T,
    pub greens_matrix: Matrix<T>,
    pub metric_inverse: Matrix<T>,
    pub condition_number: T,
    pub geometry: MetrizedAlgebra<T, SiteAlgebra<T>>,
}

fn coincident<T: Real>(domain: Domain, a: [T; 2], b: [T; 2]) -> bool {
    (0..domain.dim()).all(|i| {
        let d = (a[i] - b[i]) % T::two_pi();
        d == T::zero()
    })
}

/// Configuration with metric Gram `G_V^{-1} (x) inner_gram`.
pub fn build_configuration<T: Real>(domain: Domain, lie: LieAlgebraData<T>, points: &[[T; 2]], s: T, m0: T) -> Result<Configuration<T>> {
    if points.is_empty() {
        return Err(CurvError::Input("configuration needs at least one point".into()));
    }
    if m0 <= T::zero() {
        return Err(CurvError::Input(format!("configurations need m0 > 0, got {m0}")));
    }
    if s * T::lit(2.0) <= T::from_usize_lossy(domain.dim()) {
        return Err(CurvError::DiagonalDivergence { two_s: (s * T::lit(2.0)).to_f64_lossy(), dim: domain.dim() });
    }
    for (i, a) in points.iter().enumerate() {
        for b in &points[..i] {
            if coincident(domain, *a, *b) {
                return Err(CurvError::Input(format!("coincident points at index {i}")));
            }
        }
    }
    let n = points.len();
    let entries: Result<Vec<T>> = (0..n * n)
        .into_par_iter()
        .map(|ij| {
            let (i, j) = (ij / n, ij % n);
            if j < i {
                Ok(T::zero())
            } else {
                greens_function(domain, points[i], points[j], s, m0)
            }
        })
        .collect();
    let entries = entries?;
    let greens = Matrix::from_fn(n, n, |i, j| if i <= j { entries[i * n + j] } else { entries[j * n + i] });
    let eig = greens.clone().symmetric_eigen();
    let lo = eig.eigenvalues.iter().copied().fold(T::lit(f64::INFINITY), |a, b| a.min(b));
    let hi = eig.eigenvalues.iter().copied().fold(T::zero(), |a, b| a.max(b.abs()));
    if lo <= T::zero() {
        return Err(CurvError::IllConditioned(f64::INFINITY));
    }
    let cond = hi / lo;
    if cond.to_f64_lossy() > MAX_CONDITION {
        return Err(CurvError::IllConditioned(cond.to_f64_lossy()));
    }
    let inv = greens.clone().cholesky().ok_or(CurvError::SingularMetric)?.inverse();
    let inv = (&inv + inv.transpose()) * T::lit(0.5);
    let gram = inv.kronecker(lie.inner_gram());
    let metric = Metric::dense(gram)?;
    let geometry = MetrizedAlgebra::new(SiteAlgebra { lie, sites: n }, metric)?;
    Ok(Configuration {
        domain,
        points: points.to_vec(),
        s,
        m0,
        greens_matrix: greens,
        metric_inverse: inv,
        condition_number: cond,
        geometry,
    })
}

impl<T: Real> Configuration<T> {
    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    /// `Ric(y, z)` as a full finite-dimensional trace.
    pub fn ricci(&self, y: &Vector<T>, z: &Vector<T>) -> Result<T> {
        self.geometry.ricci_full(y, z)
    }

    pub fn ricci_matrix(&self) -> Result<Matrix<T>> {
        self.geometry.ricci_matrix()
    }

    /// Eigenvalues of `Ric` relative to the metric, ascending.
    pub fn relative_ricci_spectrum(&self) -> Result<Vec<T>> {
        let ric = self.ricci_matrix()?;
        let gram = self.geometry.metric.gram();
        let l = gram.cholesky().ok_or(CurvError::SingularMetric)?.l();
        let li = l.try_inverse().ok_or(CurvError::SingularMetric)?;
        let m = &li * ric * li.transpose();
        let m = (&m + m.transpose()) * T::lit(0.5);
        let mut ev: Vec<T> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        Ok(ev)
    }

    /// Largest entry of `G_V * G_V^{-1} - I`.
    pub fn round_trip_defect(&self) -> T {
        let n = self.points.len();
        (&self.greens_matrix * &self.metric_inverse - Matrix::identity(n, n)).amax()
    }
}

/// `n` points with spacing `factor * 2pi / n` along the first axis, second coordinate 0.
pub fn lattice_points<T: Real>(n: usize, factor: T) -> Vec<[T; 2]> {
    let h = factor * T::two_pi() / T::from_usize_lossy(n);
    (0..n).map(|i| [h * T::from_usize_lossy(i), T::zero()]).collect()
}

/// One line per point, one or two coordinates separated by whitespace or commas.
pub fn parse_points<T: Real>(domain: Domain, text: &str) -> Result<Vec<[T; 2]>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).map(str::parse).collect();
        let vals = vals.map_err(|e| CurvError::Parse { line: n + 1, message: e.to_string() })?;
        if vals.len() != domain.dim() {
            return Err(CurvError::Parse { line: n + 1, message: format!("expected {} coordinates, got {}", domain.dim(), vals.len()) });
        }
        out.push([T::lit(vals[0]), T::lit(vals.get(1).copied().unwrap_or(0.0))]);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub domain: Domain,
    pub points: usize,
    pub spacing: f64,
    pub s: f64,
    pub m0: f64,
    pub min_rel_ricci: Option<f64>,
    pub condition_number: Option<f64>,
    pub flags: String,
}

#[derive(Debug, Clone)]
pub struct ScanGrid {
    pub point_counts: Vec<usize>,
    pub spacing_factors: Vec<f64>,
    pub s_values: Vec<f64>,
    pub m0_values: Vec<f64>,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self { point_counts: vec![4, 8, 16], spacing_factors: vec![1.0, 0.5], s_values: vec![1.0, 2.0], m0_values: vec![0.5, 1.0] }
    }
}

/// Minimum relative Ricci eigenvalue on every cell of the grid, in row-major
/// order (point counts outermost). Cells that fail to build are flagged, not raised.
pub fn ricci_lower_bound_scan<T: Real>(domain: Domain, lie: &LieAlgebraData<T>, grid: &ScanGrid) -> Vec<ScanRow> {
    let mut cells = Vec::new();
    for &n in &grid.point_counts {
        for &f in &grid.spacing_factors {
            for &s in &grid.s_values {
                for &m0 in &grid.m0_values {
                    cells.push((n, f, s, m0));
                }
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(n, f, s, m0)| {
            let spacing = f * std::f64::consts::TAU / n as f64;
            let pts = lattice_points(n, T::lit(f));
            let base = ScanRow { domain, points: n, spacing, s, m0, min_rel_ricci: None, condition_number: None, flags: String::new() };
            match build_configuration(domain, lie.clone(), &pts, T::lit(s), T::lit(m0)) {
                Err(CurvError::IllConditioned(c)) => ScanRow { condition_number: Some(c), flags: "ill-conditioned".into(), ..base },
                Err(CurvError::DiagonalDivergence { .. }) => ScanRow { flags: "diagonal-divergence".into(), ..base },
                Err(e) => ScanRow { flags: format!("error: {e}"), ..base },
                Ok(cfg) => {
                    let cond = Some(cfg.condition_number.to_f64_lossy());
                    match cfg.relative_ricci_spectrum() {
                        Ok(ev) => ScanRow { min_rel_ricci: ev.first().map(|v| v.to_f64_lossy()), condition_number: cond, ..base },
                        Err(e) => ScanRow { condition_number: cond, flags: format!("error: {e}"), ..base },
                    }
                }
            }
        })
        .collect()
}

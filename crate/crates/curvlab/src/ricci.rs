//! Two-step Ricci regularization: trace over the Lie algebra per mode, then
//! cutoff traces over modes with extrapolation and convergence verdicts.

use crate::error::{CurvError, Result};
use crate::scalar::{Matrix, Real, Vector};
use crate::sobolev::{least_squares_line, TruncatedGroupModel};
use rayon::prelude::*;

/// The k-traced operator `x -> R(x,y)z` in the metric-orthonormal mode basis.
#[derive(Debug, Clone)]
pub struct ScalarizedOperator<T: Real> {
    /// Coordinate blocks (modes) indexing rows and columns, in mode order.
    pub blocks: Vec<usize>,
    /// Largest frequency `max |k_i|` of each block.
    pub levels: Vec<usize>,
    pub entries: Matrix<T>,
    /// Largest entrywise deviation of the independent assemblies, when they were run.
    pub cross_check: Option<T>,
}

impl<T: Real> ScalarizedOperator<T> {
    /// Trace over blocks with level `<= m`.
    pub fn trace_to(&self, m: usize) -> T {
        (0..self.blocks.len()).filter(|&i| self.levels[i] <= m).fold(T::zero(), |a, i| a + self.entries[(i, i)])
    }
}

/// Per-block k-traces of an operator given by its action on vectors:
/// `S[k][k'] = sqrt(w_k / w_k') tr_k(block (k, k') of op)`.
fn ktrace_matrix<T, F>(model: &TruncatedGroupModel<T>, blocks: &[usize], op: F) -> Result<Matrix<T>>
where
    T: Real,
    F: Fn(&Vector<T>) -> Result<Vector<T>> + Sync,
{
    let dk = model.lie_dim();
    let onb = model.algebra().lie().orthonormal_basis();
    let n = model.dim();
    let cols: Result<Vec<Vec<T>>> = blocks
        .par_iter()
        .map(|&kp| {
            let mut col = vec![T::zero(); blocks.len()];
            for a in 0..dk {
                let mut x = Vector::zeros(n);
                for b in 0..dk {
                    x[kp * dk + b] = onb[(b, a)];
                }
                let r = op(&x)?;
                let mr = model.algebra().lie().inner_gram() * &onb.column(a);
                for (row, &k) in blocks.iter().enumerate() {
                    let mut s = T::zero();
                    for b in 0..dk {
                        s += r[k * dk + b] * mr[b];
                    }
                    col[row] += s * (model.weight(k) / model.weight(kp)).sqrt();
                }
            }
            Ok(col)
        })
        .collect();
    let cols = cols?;
    Ok(Matrix::from_fn(blocks.len(), blocks.len(), |i, j| cols[j][i]))
}

fn blocks_and_levels<T: Real>(model: &TruncatedGroupModel<T>, m: usize) -> (Vec<usize>, Vec<usize>) {
    let blocks = model.blocks_within(m);
    let levels = blocks.iter().map(|&b| model.algebra().mode_of_block_ref(b).max_abs() as usize).collect();
    (blocks, levels)
}

fn check_inputs<T: Real>(model: &TruncatedGroupModel<T>, m: usize, vs: &[&Vector<T>]) -> Result<()> {
    if m > model.cutoff() {
        return Err(CurvError::Truncation { requested: m as i64, ambient: model.cutoff() as i64 });
    }
    for v in vs {
        if v.len() != model.dim() {
            return Err(CurvError::DimensionMismatch { expected: model.dim(), got: v.len() });
        }
        if model.algebra().degree(v) > model.cutoff() {
            return Err(CurvError::Truncation { requested: model.algebra().degree(v) as i64, ambient: model.cutoff() as i64 });
        }
    }
    Ok(())
}

/// Assembly (a): k-contraction of the curvature operator itself, on modes `<= m`.
pub fn scalarize_from_curvature<T: Real>(model: &TruncatedGroupModel<T>, y: &Vector<T>, z: &Vector<T>, m: usize) -> Result<ScalarizedOperator<T>> {
    check_inputs(model, m, &[y, z])?;
    let (blocks, levels) = blocks_and_levels(model, m);
    let entries = ktrace_matrix(model, &blocks, |x| model.geometry.curvature_r(x, y, z))?;
    Ok(ScalarizedOperator { blocks, levels, entries, cross_check: None })
}

/// The operator of `x` whose k-trace equals that of `x -> R(x,y)z` for a G-form metric:
/// `-1/4(-[ad_y, G ad_{G^{-1}z}] + G[ad_y,[ad_z,G^{-1}]] + [ad_y, G ad_z G^{-1}]
///  + G ad_{G^{-1}y}[ad_z G^{-1}, G] + G ad_{G^{-1}y} G ad_{G^{-1}z})`.
pub fn ktrace_equivalent_operator<T: Real>(model: &TruncatedGroupModel<T>, y: &Vector<T>, z: &Vector<T>, x: &Vector<T>) -> Vector<T> {
    let br = |a: &Vector<T>, b: &Vector<T>| model.geometry.bracket(a, b);
    let g = |v: &Vector<T>| model.apply_g(v);
    let gi = |v: &Vector<T>| model.apply_ginv(v);
    let gy = gi(y);
    let gz = gi(z);
    let yx = br(y, x);

    let t1 = br(y, &g(&br(&gz, x))) - g(&br(&gz, &yx));
    // C w = [ad_z, G^{-1}] w
    let c = |w: &Vector<T>| br(z, &gi(w)) - gi(&br(z, w));
    let t2 = g(&(br(y, &c(x)) - c(&yx)));
    let t3 = br(y, &g(&br(z, &gi(x)))) - g(&br(z, &gi(&yx)));
    let inner = br(z, x) - g(&br(z, &gi(x)));
    let t4 = g(&br(&gy, &inner));
    let t5 = g(&br(&gy, &g(&br(&gz, x))));
    (-t1 + t2 + t3 + t4 + t5) * T::lit(-0.25)
}

/// Builds the scalarized operator by the curvature contraction and, for `m0 > 0`,
/// also through the k-trace equivalent operator; the two must agree.
pub fn scalarize<T: Real>(model: &TruncatedGroupModel<T>, y: &Vector<T>, z: &Vector<T>, m: usize) -> Result<ScalarizedOperator<T>> {
    let mut a = scalarize_from_curvature(model, y, z, m)?;
    if model.is_quotient() {
        return Ok(a);
    }
    let b = ktrace_matrix(model, &a.blocks, |x| Ok(ktrace_equivalent_operator(model, y, z, x)))?;
    let dev = (&a.entries - &b).amax();
    let scale = a.entries.amax().max(b.amax()).max(T::one());
    if dev > T::lit(1e-9) * scale {
        return Err(CurvError::Consistency { context: "scalarize", deviation: (dev / scale).to_f64_lossy(), tolerance: 1e-9 });
    }
    a.cross_check = Some(dev);
    Ok(a)
}

/// Applies the scalar operator of the factored reduction to a scalar function `u`:
/// `[G M_{G^{-1}Z}, Y] + Y G Z G^{-1} - G Z G^{-1} Y + G Y Z G^{-1} - G Y G^{-1} Z
///  - G Z G^{-1} Y + Z Y + G M_{G^{-1}Y} Z - G M_{G^{-1}Y} G Z G^{-1} + G M_{G^{-1}Y} G M_{G^{-1}Z}`
/// where capital letters are multiplication operators.
pub fn factored_scalar_operator<T: Real>(model: &TruncatedGroupModel<T>, yf: &Vector<T>, zf: &Vector<T>, u: &Vector<T>) -> Result<Vector<T>> {
    let basis = model.basis();
    let amb = basis.cutoff();
    let mul = |f: &Vector<T>, g: &Vector<T>| basis.multiply_project(f, g, amb);
    let w = |i: usize| (basis.eigenvalue(i) + model.m0() * model.m0()).powf(model.s());
    let g = |f: &Vector<T>| Vector::from_fn(f.len(), |i, _| f[i] / w(i));
    let gi = |f: &Vector<T>| Vector::from_fn(f.len(), |i, _| f[i] * w(i));
    let giy = gi(yf);
    let giz = gi(zf);

    let yu = mul(yf, u)?;
    let zu = mul(zf, u)?;
    let giu = gi(u);
    let zgiu = mul(zf, &giu)?;
    let gi_yu = gi(&yu);

    let mut out = g(&mul(&giz, &yu)?) - mul(yf, &g(&mul(&giz, u)?))?;
    out += mul(yf, &g(&zgiu))?;
    out -= g(&mul(zf, &gi_yu)?);
    out += g(&mul(yf, &zgiu)?);
    out -= g(&mul(yf, &gi(&zu))?);
    out -= g(&mul(zf, &gi_yu)?);
    out += mul(zf, &yu)?;
    out += g(&mul(&giy, &zu)?);
    out -= g(&mul(&giy, &g(&zgiu))?);
    out += g(&mul(&giy, &g(&mul(&giz, u)?))?);
    Ok(out)
}

/// Factored inputs `y = Y (x) b`, `z = Z (x) c`: runs both assemblies of [`scalarize`]
/// and compares them with `-1/4 kappa(b,c)` times the scalar operator.
/// Returns the operator and the deviation of the factored reduction.
pub fn scalarize_factored<T: Real>(
    model: &TruncatedGroupModel<T>,
    yf: &Vector<T>,
    b: &[T],
    zf: &Vector<T>,
    c: &[T],
    m: usize,
) -> Result<(ScalarizedOperator<T>, T)> {
    if model.is_quotient() {
        return Err(CurvError::Input("the factored reduction needs m0 > 0".into()));
    }
    let alg = model.algebra();
    let y = alg.factored(yf, b);
    let z = alg.factored(zf, c);
    let op = scalarize(model, &y, &z, m)?;
    let kappa = alg.lie().killing_form(b, c)?;
    let basis = model.basis();
    let modes: Vec<usize> = op.blocks.iter().map(|&blk| alg.mode_of_block(blk)).collect();
    let cols: Result<Vec<Vector<T>>> = modes
        .par_iter()
        .map(|&j| {
            let mut u = Vector::zeros(basis.len());
            u[j] = T::one();
            factored_scalar_operator(model, yf, zf, &u)
        })
        .collect();
    let cols = cols?;
    let factor = T::lit(-0.25) * kappa;
    let mut dev = T::zero();
    for (cj, &kp) in op.blocks.iter().enumerate() {
        for (ri, &k) in op.blocks.iter().enumerate() {
            let want = factor * cols[cj][alg.mode_of_block(k)] * (model.weight(k) / model.weight(kp)).sqrt();
            dev = dev.max((op.entries[(ri, cj)] - want).abs());
        }
    }
    Ok((op, dev))
}

/// Diagonal of the scalarized operator on blocks `<= m` (all that partial traces need).
pub fn scalarized_diagonal<T: Real>(model: &TruncatedGroupModel<T>, y: &Vector<T>, z: &Vector<T>, m: usize) -> Result<(Vec<usize>, Vec<T>)> {
    check_inputs(model, m, &[y, z])?;
    let (blocks, levels) = blocks_and_levels(model, m);
    let dk = model.lie_dim();
    let diag: Result<Vec<T>> = blocks
        .par_iter()
        .map(|&k| {
            let mut s = T::zero();
            for a in 0..dk {
                let x = model.geometry.metric.orthonormal_vector(k * dk + a);
                s += model.geometry.inner(&model.geometry.curvature_r(&x, y, z)?, &x);
            }
            Ok(s)
        })
        .collect();
    Ok((levels, diag?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Convergent,
    LogDivergent,
    Undetermined,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Convergent => "convergent",
            Verdict::LogDivergent => "log-divergent",
            Verdict::Undetermined => "undetermined",
        }
    }
}

/// Cutoff sequence, partial traces and the fitted limit.
#[derive(Debug, Clone, PartialEq)]
pub struct RicciEstimate {
    pub cutoffs: Vec<f64>,
    pub traces: Vec<f64>,
    pub extrapolated: f64,
    /// Root-mean-square residual of the selected power-law fit.
    pub residual: f64,
    pub exponent_q: f64,
    pub log_coefficient: f64,
    pub log_residual: f64,
    /// Fitted exponent of the tail `|T_M - T_inf| ~ M^e`; `None` when the
    /// sequence is constant to roundoff.
    pub tail_exponent: Option<f64>,
    pub verdict: Verdict,
}

fn fit_two(xs: &[f64], ts: &[f64]) -> (f64, f64, f64) {
    // least squares T = a + b x; returns (a, b, rms residual)
    let pts: Vec<(f64, f64)> = xs.iter().copied().zip(ts.iter().copied()).collect();
    let (a, b) = least_squares_line(&pts);
    let ss: f64 = pts.iter().map(|(x, t)| (t - a - b * x).powi(2)).sum();
    (a, b, (ss / pts.len() as f64).sqrt())
}

/// Power-law and logarithmic fits with the verdict rule:
/// log-divergent when the log fit beats every power fit and `|c| > 10 * residual`;
/// convergent when the best power fit leaves a residual below 5% of the limit
/// (or below roundoff); undetermined otherwise.
pub fn extrapolate(cutoffs: &[f64], traces: &[f64]) -> Result<RicciEstimate> {
    if cutoffs.len() != traces.len() || cutoffs.len() < 3 {
        return Err(CurvError::Input("extrapolation needs at least three cutoffs".into()));
    }
    if cutoffs.windows(2).any(|w| w[1] <= w[0]) || cutoffs[0] <= 0.0 {
        return Err(CurvError::Input("cutoffs must be positive and increasing".into()));
    }
    let scale = traces.iter().fold(0.0f64, |m, t| m.max(t.abs())).max(f64::MIN_POSITIVE);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for q in [0.5, 1.0, 2.0] {
        let xs: Vec<f64> = cutoffs.iter().map(|m| m.powf(-q)).collect();
        let (a, _, r) = fit_two(&xs, traces);
        if r < best.0 {
            best = (r, a, q);
        }
    }
    let (r_pow, t_inf, q) = best;
    let logs: Vec<f64> = cutoffs.iter().map(|m| m.ln()).collect();
    let (_, c, r_log) = fit_two(&logs, traces);

    let roundoff = 1e-12 * scale;
    let verdict = if r_log < r_pow && c.abs() > 10.0 * r_log && c.abs() > roundoff {
        Verdict::LogDivergent
    } else if r_pow <= 0.05 * t_inf.abs() || r_pow <= roundoff {
        Verdict::Convergent
    } else {
        Verdict::Undetermined
    };

    let mut pts = Vec::new();
    for j in 0..cutoffs.len() - 1 {
        let dt = (traces[j + 1] - traces[j]).abs();
        let dm = cutoffs[j + 1] - cutoffs[j];
        if dt > roundoff {
            pts.push((((cutoffs[j] * cutoffs[j + 1]).sqrt()).ln(), (dt / dm).ln()));
        }
    }
    let tail_exponent = match pts.len() {
        0 => None,
        1 => Some(f64::NAN),
        _ => Some(least_squares_line(&pts).1 + 1.0),
    };
    Ok(RicciEstimate {
        cutoffs: cutoffs.to_vec(),
        traces: traces.to_vec(),
        extrapolated: t_inf,
        residual: r_pow,
        exponent_q: q,
        log_coefficient: c,
        log_residual: r_log,
        tail_exponent,
        verdict,
    })
}

/// Grouped partial traces `Ric_M(y,z)` at each cutoff: modes ascending, k-directions innermost.
pub fn ricci_cutoff<T: Real>(model: &TruncatedGroupModel<T>, y: &Vector<T>, z: &Vector<T>, cutoffs: &[usize]) -> Result<RicciEstimate> {
    let &top = cutoffs.last().ok_or_else(|| CurvError::Input("empty cutoff list".into()))?;
    let (levels, diag) = scalarized_diagonal(model, y, z, top)?;
    let traces: Vec<f64> = cutoffs
        .iter()
        .map(|&m| (0..diag.len()).filter(|&i| levels[i] <= m).fold(T::zero(), |a, i| a + diag[i]).to_f64_lossy())
        .collect();
    let ms: Vec<f64> = cutoffs.iter().map(|&m| m as f64).collect();
    extrapolate(&ms, &traces)
}

/// Summary of `Ric(y,z) / <y,z>_ref` over a family of pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EinsteinStats {
    pub ratios: Vec<f64>,
    pub mean: f64,
    pub spread: f64,
    pub relative_spread: f64,
    /// Largest `|Ric|` among the excluded pairs with vanishing reference pairing.
    pub orthogonal_max: f64,
    pub einstein: bool,
}

/// `pairs` holds `(Ric(y,z), <y,z>_ref)`. Pairs with `|ref| <= ref_floor` are excluded
/// from the ratios and their Ricci values reported separately.
pub fn einstein_ratio(pairs: &[(f64, f64)], ref_floor: f64, tolerance: f64) -> Result<EinsteinStats> {
    let mut ratios = Vec::new();
    let mut orthogonal_max = 0.0f64;
    for &(ric, r) in pairs {
        if r.abs() <= ref_floor {
            orthogonal_max = orthogonal_max.max(ric.abs());
        } else {
            ratios.push(ric / r);
        }
    }
    if ratios.is_empty() {
        return Err(CurvError::Input("reference pairing vanishes on every test pair".into()));
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let spread = ratios.iter().fold(0.0f64, |m, r| m.max((r - mean).abs()));
    let relative_spread = spread / mean.abs().max(f64::MIN_POSITIVE);
    Ok(EinsteinStats { ratios, mean, spread, relative_spread, orthogonal_max, einstein: relative_spread < tolerance })
}

/// Partial traces of the full (not k-traced) operator `x -> R(x,y)z` in a rotated
/// orthonormal basis ordered to interleave badly, alongside the grouped traces.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveTraceReport {
    pub cutoffs: Vec<usize>,
    pub grouped: Vec<f64>,
    pub ungrouped: Vec<f64>,
    pub pairs: usize,
    pub largest_coupling: f64,
}

/// The symmetric part `S` of the operator in the metric-orthonormal basis is paired
/// greedily by largest `|S_ij|`; each pair `(i, j)` yields `u = (e_i +- e_j)/sqrt 2`.
/// The vector with the `+|S_ij|` value enters once both modes are `<= M`, its
/// partner only once both modes are `<= floor(sqrt M)`. Every cutoff should be a
/// perfect square so the lagging vectors enter at whole levels.
pub fn naive_trace<T: Real>(model: &TruncatedGroupModel<T>, y: &Vector<T>, z: &Vector<T>, cutoffs: &[usize]) -> Result<NaiveTraceReport> {
    let &top = cutoffs.last().ok_or_else(|| CurvError::Input("empty cutoff list".into()))?;
    // partners of level-M modes may sit one level higher
    let span = (top + 1).min(model.cutoff());
    check_inputs(model, span, &[y, z])?;
    let dk = model.lie_dim();
    let blocks = model.blocks_within(span);
    let coords: Vec<usize> = blocks.iter().flat_map(|&b| (0..dk).map(move |a| b * dk + a)).collect();
    let level: Vec<usize> = coords.iter().map(|&c| model.algebra().mode_of_block_ref(c / dk).max_abs() as usize).collect();
    let n = coords.len();
    let basis: Vec<Vector<T>> = coords.iter().map(|&c| model.geometry.metric.orthonormal_vector(c)).collect();
    let images: Result<Vec<Vector<T>>> = basis.par_iter().map(|x| model.geometry.curvature_r(x, y, z)).collect();
    let images = images?;
    let a = Matrix::from_fn(n, n, |i, j| model.geometry.inner(&images[j], &basis[i]).to_f64_lossy());
    let s = (&a + a.transpose()) * 0.5;

    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    let peak = s.amax();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = s[(i, j)].abs();
            if v > 1e-12 * peak {
                cand.push((v, i, j));
            }
        }
    }
    cand.sort_by(|p, q| q.0.total_cmp(&p.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let mut used = vec![false; n];
    // (level, value) of the leading and lagging vectors
    let mut lead = Vec::new();
    let mut lag = Vec::new();
    for &(v, i, j) in &cand {
        if used[i] || used[j] {
            continue;
        }
        used[i] = true;
        used[j] = true;
        let lvl = level[i].max(level[j]);
        let mean = 0.5 * (s[(i, i)] + s[(j, j)]);
        lead.push((lvl, mean + v));
        lag.push((lvl, mean - v));
    }
    let singles: Vec<(usize, f64)> = (0..n).filter(|&i| !used[i]).map(|i| (level[i], s[(i, i)])).collect();
    let pairs = lead.len();

    let mut grouped = Vec::new();
    let mut ungrouped = Vec::new();
    for &m in cutoffs {
        let root = (m as f64).sqrt().floor() as usize;
        grouped.push((0..n).filter(|&i| level[i] <= m).map(|i| s[(i, i)]).sum());
        let mut t: f64 = singles.iter().filter(|p| p.0 <= m).map(|p| p.1).sum();
        t += lead.iter().filter(|p| p.0 <= m).map(|p| p.1).sum::<f64>();
        t += lag.iter().filter(|p| p.0 <= root).map(|p| p.1).sum::<f64>();
        ungrouped.push(t);
    }
    let largest_coupling = cand.first().map(|c| c.0).unwrap_or(0.0);
    Ok(NaiveTraceReport { cutoffs: cutoffs.to_vec(), grouped, ungrouped, pairs, largest_coupling })
}

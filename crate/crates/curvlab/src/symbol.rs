//! Homogeneous symbols on the cotangent bundle of the flat torus with exact
//! trigonometric coefficients, and the residue form of the surface Ricci curvature.

use crate::error::{CurvError, Result};
use crate::lie::LieAlgebraData;
use crate::scalar::{Real, Vector};
use crate::sobolev::least_squares_line;
use crate::spectral::{canonical, Domain, Mode, ModeBasis, Parity, SpectralOperator};
use std::collections::BTreeMap;
use std::fmt;

/// Which trigonometric function multiplies a frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Wave {
    Cos,
    Sin,
}

/// Real trigonometric polynomial `sum c cos(k.x) + s sin(k.x)` on `[0, 2pi)^2`,
/// keyed by canonical frequency. The constant term is `([0, 0], Cos)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly<T: Real> {
    terms: BTreeMap<([i64; 2], Wave), T>,
}

impl<T: Real> Default for TrigPoly<T> {
    fn default() -> Self {
        Self { terms: BTreeMap::new() }
    }
}

impl<T: Real> TrigPoly<T> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: T) -> Self {
        let mut p = Self::zero();
        p.add_term([0, 0], Wave::Cos, c);
        p
    }

    pub fn cos(k: [i64; 2], c: T) -> Self {
        let mut p = Self::zero();
        p.add_term(k, Wave::Cos, c);
        p
    }

    pub fn sin(k: [i64; 2], c: T) -> Self {
        let mut p = Self::zero();
        p.add_term(k, Wave::Sin, c);
        p
    }

    /// Adds `c cos(k.x)` or `c sin(k.x)`, folding `k` to its canonical sign.
    pub fn add_term(&mut self, k: [i64; 2], wave: Wave, c: T) {
        let (key, c) = match canonical(k) {
            None => match wave {
                Wave::Cos => (([0, 0], Wave::Cos), c),
                Wave::Sin => return,
            },
            Some((k, sg)) => match wave {
                Wave::Cos => ((k, Wave::Cos), c),
                Wave::Sin => ((k, Wave::Sin), c * T::from_i64_lossy(sg)),
            },
        };
        if c == T::zero() {
            return;
        }
        let e = self.terms.entry(key).or_insert(T::zero());
        *e += c;
        if *e == T::zero() {
            self.terms.remove(&key);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = ([i64; 2], Wave, T)> + '_ {
        self.terms.iter().map(|(&(k, w), &c)| (k, w, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest `max |k_i|` present.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|(k, _)| k[0].unsigned_abs().max(k[1].unsigned_abs()) as usize).max().unwrap_or(0)
    }

    pub fn eval(&self, x: [T; 2]) -> T {
        self.terms().fold(T::zero(), |acc, (k, w, c)| {
            let ph = T::from_i64_lossy(k[0]) * x[0] + T::from_i64_lossy(k[1]) * x[1];
            acc + c * match w {
                Wave::Cos => ph.cos(),
                Wave::Sin => ph.sin(),
            }
        })
    }

    pub fn scale(&self, a: T) -> Self {
        let mut out = Self::zero();
        for (k, w, c) in self.terms() {
            out.add_term(k, w, c * a);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, w, c) in other.terms() {
            out.add_term(k, w, c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let h = T::lit(0.5);
        let mut out = Self::zero();
        for (a, wa, ca) in self.terms() {
            for (b, wb, cb) in other.terms() {
                let c = ca * cb * h;
                let sum = [a[0] + b[0], a[1] + b[1]];
                let diff = [a[0] - b[0], a[1] - b[1]];
                match (wa, wb) {
                    (Wave::Cos, Wave::Cos) => {
                        out.add_term(diff, Wave::Cos, c);
                        out.add_term(sum, Wave::Cos, c);
                    }
                    (Wave::Sin, Wave::Sin) => {
                        out.add_term(diff, Wave::Cos, c);
                        out.add_term(sum, Wave::Cos, -c);
                    }
                    (Wave::Sin, Wave::Cos) => {
                        out.add_term(sum, Wave::Sin, c);
                        out.add_term(diff, Wave::Sin, c);
                    }
                    (Wave::Cos, Wave::Sin) => {
                        out.add_term(sum, Wave::Sin, c);
                        out.add_term(diff, Wave::Sin, -c);
                    }
                }
            }
        }
        out
    }

    /// `d/dx_i`.
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero();
        for (k, w, c) in self.terms() {
            let ki = T::from_i64_lossy(k[i]);
            match w {
                Wave::Cos => out.add_term(k, Wave::Sin, -c * ki),
                Wave::Sin => out.add_term(k, Wave::Cos, c * ki),
            }
        }
        out
    }

    /// Integral over the torus `[0, 2pi)^2`.
    pub fn integral(&self) -> T {
        self.terms.get(&([0, 0], Wave::Cos)).copied().unwrap_or(T::zero()) * T::two_pi() * T::two_pi()
    }

    /// Coefficients in a real Fourier basis (normalized `sqrt2 cos`, `sqrt2 sin`).
    pub fn to_basis(&self, basis: &ModeBasis<T>) -> Result<Vector<T>> {
        let mut v = Vector::zeros(basis.len());
        let r = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        for (k, w, c) in self.terms() {
            let (mode, c) = if k == [0, 0] {
                (Mode::CONST, c)
            } else {
                let parity = if w == Wave::Cos { Parity::Cos } else { Parity::Sin };
                (Mode { freq: k, parity }, c * r)
            };
            let i = basis
                .index_of(&mode)
                .ok_or(CurvError::Truncation { requested: mode.max_abs(), ambient: basis.cutoff() as i64 })?;
            v[i] += c;
        }
        Ok(v)
    }
}

impl<T: Real> fmt::Display for TrigPoly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (n, (k, w, c)) in self.terms().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            if k == [0, 0] {
                write!(f, "{c}")?;
            } else {
                let name = if w == Wave::Cos { "cos" } else { "sin" };
                write!(f, "{c}*{name}({},{})", k[0], k[1])?;
            }
        }
        Ok(())
    }
}

/// `coeff(x) * p1^e1 * p2^e2 * |p|^(2 power)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTerm<T: Real> {
    pub coeff: TrigPoly<T>,
    pub exps: [u32; 2],
    pub power: T,
}

impl<T: Real> SymbolTerm<T> {
    pub fn degree(&self) -> T {
        T::from_usize_lossy((self.exps[0] + self.exps[1]) as usize) + self.power + self.power
    }
}

/// Finite sum of [`SymbolTerm`]s kept in canonical order, with like terms merged.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousSymbol<T: Real> {
    terms: Vec<SymbolTerm<T>>,
}

impl<T: Real> Default for HomogeneousSymbol<T> {
    fn default() -> Self {
        Self { terms: Vec::new() }
    }
}

impl<T: Real> HomogeneousSymbol<T> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<SymbolTerm<T>>) -> Self {
        let mut terms = terms;
        terms.sort_by(|a, b| a.exps.cmp(&b.exps).then(a.power.partial_cmp(&b.power).unwrap_or(std::cmp::Ordering::Equal)));
        let mut merged: Vec<SymbolTerm<T>> = Vec::new();
        for t in terms {
            match merged.last_mut() {
                Some(m) if m.exps == t.exps && m.power == t.power => m.coeff = m.coeff.add(&t.coeff),
                _ => merged.push(t),
            }
        }
        merged.retain(|t| !t.coeff.is_zero());
        Self { terms: merged }
    }

    /// A function of position alone.
    pub fn position(f: TrigPoly<T>) -> Self {
        Self::from_terms(vec![SymbolTerm { coeff: f, exps: [0, 0], power: T::zero() }])
    }

    /// `|p|^(2 power)`.
    pub fn norm_power(power: T) -> Self {
        Self::from_terms(vec![SymbolTerm { coeff: TrigPoly::constant(T::one()), exps: [0, 0], power }])
    }

    /// `p_i`.
    pub fn momentum(i: usize) -> Self {
        let mut exps = [0, 0];
        exps[i] = 1;
        Self::from_terms(vec![SymbolTerm { coeff: TrigPoly::constant(T::one()), exps, power: T::zero() }])
    }

    pub fn terms(&self) -> &[SymbolTerm<T>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Common degree of all terms; `None` for the zero symbol.
    pub fn degree(&self) -> Result<Option<T>> {
        let Some(first) = self.terms.first() else { return Ok(None) };
        let d = first.degree();
        for t in &self.terms[1..] {
            if (t.degree() - d).abs() > T::lit(1e-12) * (T::one() + d.abs()) {
                return Err(CurvError::Input(format!("inhomogeneous symbol: degrees {d} and {}", t.degree())));
            }
        }
        Ok(Some(d))
    }

    pub fn eval(&self, x: [T; 2], p: [T; 2]) -> T {
        let n2 = p[0] * p[0] + p[1] * p[1];
        self.terms.iter().fold(T::zero(), |acc, t| {
            acc + t.coeff.eval(x) * p[0].powi(t.exps[0] as i32) * p[1].powi(t.exps[1] as i32) * n2.powf(t.power)
        })
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().chain(&other.terms).cloned().collect())
    }

    pub fn scale(&self, a: T) -> Self {
        Self::from_terms(self.terms.iter().map(|t| SymbolTerm { coeff: t.coeff.scale(a), ..t.clone() }).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                out.push(SymbolTerm {
                    coeff: a.coeff.mul(&b.coeff),
                    exps: [a.exps[0] + b.exps[0], a.exps[1] + b.exps[1]],
                    power: a.power + b.power,
                });
            }
        }
        Self::from_terms(out)
    }

    /// `d/dx_i`.
    pub fn d_x(&self, i: usize) -> Self {
        Self::from_terms(self.terms.iter().map(|t| SymbolTerm { coeff: t.coeff.partial(i), ..t.clone() }).collect())
    }

    /// `d/dp_i`.
    pub fn d_p(&self, i: usize) -> Self {
        let mut out = Vec::new();
        for t in &self.terms {
            if t.exps[i] > 0 {
                let mut exps = t.exps;
                exps[i] -= 1;
                out.push(SymbolTerm { coeff: t.coeff.scale(T::from_usize_lossy(t.exps[i] as usize)), exps, power: t.power });
            }
            if t.power != T::zero() {
                let mut exps = t.exps;
                exps[i] += 1;
                out.push(SymbolTerm { coeff: t.coeff.scale(t.power + t.power), exps, power: t.power - T::one() });
            }
        }
        Self::from_terms(out)
    }
}

impl<T: Real> fmt::Display for HomogeneousSymbol<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (n, t) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[{}]*p1^{}*p2^{}*|p|^({})", t.coeff, t.exps[0], t.exps[1], t.power + t.power)?;
        }
        Ok(())
    }
}

/// `{f, g} = sum_i (df/dx_i dg/dp_i - df/dp_i dg/dx_i)`, so that `{|p|^2, cos x1} = 2 p1 sin x1`.
pub fn poisson_bracket<T: Real>(f: &HomogeneousSymbol<T>, g: &HomogeneousSymbol<T>) -> Result<HomogeneousSymbol<T>> {
    f.degree()?;
    g.degree()?;
    let mut out = HomogeneousSymbol::zero();
    for i in 0..2 {
        out = out.add(&f.d_x(i).mul(&g.d_p(i))).add(&f.d_p(i).mul(&g.d_x(i)).scale(-T::one()));
    }
    Ok(out)
}

/// Leading homogeneous part of the symbol `(|p|^2 + m0^2)^s` of `G^{-1}`; the mass
/// enters only lower-order terms.
pub fn metric_inverse_symbol<T: Real>(s: T, m0: T) -> Result<HomogeneousSymbol<T>> {
    if s <= T::zero() || m0 < T::zero() {
        return Err(CurvError::Input(format!("need s > 0 and m0 >= 0, got s = {s}, m0 = {m0}")));
    }
    Ok(HomogeneousSymbol::norm_power(s))
}

/// Leading symbol of `G [G^{-1}, Y] G [Z, G^{-1}] + 2 G [[G^{-1}, Y], Z]` assembled from
/// principal symbols and Poisson brackets (the factors of `i` dropped).
pub fn assemble_leading_symbol_with<T: Real>(ginv: &HomogeneousSymbol<T>, y: &TrigPoly<T>, z: &TrigPoly<T>) -> Result<HomogeneousSymbol<T>> {
    let Some(two_s) = ginv.degree()? else {
        return Err(CurvError::Input("zero metric symbol".into()));
    };
    let g = HomogeneousSymbol::norm_power(-two_s / T::lit(2.0));
    let ys = HomogeneousSymbol::position(y.clone());
    let zs = HomogeneousSymbol::position(z.clone());
    let gy = poisson_bracket(ginv, &ys)?;
    let zg = poisson_bracket(&zs, ginv)?;
    let first = g.mul(&gy).mul(&g).mul(&zg);
    let second = g.mul(&poisson_bracket(&gy, &zs)?).scale(T::lit(2.0));
    let out = first.add(&second);
    out.degree()?;
    Ok(out)
}

pub fn assemble_leading_symbol<T: Real>(y: &TrigPoly<T>, z: &TrigPoly<T>, s: T) -> Result<HomogeneousSymbol<T>> {
    assemble_leading_symbol_with(&metric_inverse_symbol(s, T::zero())?, y, z)
}

/// `int_0^{2pi} cos^a sin^b`.
fn circle_moment<T: Real>(a: u32, b: u32) -> T {
    if a % 2 == 1 || b % 2 == 1 {
        return T::zero();
    }
    let dfact = |n: i64| (1..=n).rev().step_by(2).fold(1.0f64, |acc, k| acc * k as f64);
    let v = dfact(a as i64 - 1) * dfact(b as i64 - 1) / dfact((a + b) as i64);
    T::two_pi() * T::lit(v)
}

/// Integral over the unit fiber circle, as a function of position.
/// The symbol must be homogeneous of degree `-2`.
pub fn fiber_density<T: Real>(sym: &HomogeneousSymbol<T>) -> Result<TrigPoly<T>> {
    if let Some(d) = sym.degree()? {
        if (d + T::lit(2.0)).abs() > T::lit(1e-12) {
            return Err(CurvError::Input(format!("fiber integration needs degree -2, got {d}")));
        }
    }
    let mut out = TrigPoly::zero();
    for t in sym.terms() {
        let m = circle_moment::<T>(t.exps[0], t.exps[1]);
        if m != T::zero() {
            out = out.add(&t.coeff.scale(m));
        }
    }
    Ok(out)
}

pub fn fiber_circle_integral<T: Real>(sym: &HomogeneousSymbol<T>, point: [T; 2]) -> Result<T> {
    Ok(fiber_density(sym)?.eval(point))
}

/// Fiber density and its integral over the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueDensity<T: Real> {
    pub density: TrigPoly<T>,
    pub total: T,
}

pub fn residue<T: Real>(sym: &HomogeneousSymbol<T>) -> Result<ResidueDensity<T>> {
    let density = fiber_density(sym)?;
    let total = density.integral();
    Ok(ResidueDensity { density, total })
}

/// `Ric(Y (x) b, Z (x) c) = -1/4 kappa(b, c) res(sigma)` on the flat torus.
pub fn wodzicki_ricci<T: Real>(lie: &LieAlgebraData<T>, y: &TrigPoly<T>, z: &TrigPoly<T>, b: &[T], c: &[T], s: T) -> Result<T> {
    let kappa = lie.killing_form(b, c)?;
    let sym = assemble_leading_symbol(y, z, s)?;
    Ok(T::lit(-0.25) * kappa * residue(&sym)?.total)
}

/// Bilinear extension to `y = sum_a Y_a (x) e_a`, `z = sum_b Z_b (x) e_b`.
pub fn wodzicki_ricci_fields<T: Real>(lie: &LieAlgebraData<T>, y: &[TrigPoly<T>], z: &[TrigPoly<T>], s: T) -> Result<T> {
    let n = lie.dim();
    if y.len() != n || z.len() != n {
        return Err(CurvError::DimensionMismatch { expected: n, got: y.len().min(z.len()) });
    }
    let mut total = T::zero();
    for (a, ya) in y.iter().enumerate() {
        for (b, zb) in z.iter().enumerate() {
            if ya.is_zero() || zb.is_zero() {
                continue;
            }
            let mut ea = vec![T::zero(); n];
            let mut eb = vec![T::zero(); n];
            ea[a] = T::one();
            eb[b] = T::one();
            total += wodzicki_ricci(lie, ya, zb, &ea, &eb, s)?;
        }
    }
    Ok(total)
}

/// `int grad Y . grad Z` over the torus by Parseval.
pub fn dirichlet_pairing<T: Real>(y: &TrigPoly<T>, z: &TrigPoly<T>) -> T {
    let vol = T::two_pi() * T::two_pi();
    let mut acc = T::zero();
    for (k, w, c) in y.terms() {
        if let Some(d) = z.terms.get(&(k, w)) {
            let k2 = T::from_i64_lossy(k[0] * k[0] + k[1] * k[1]);
            acc += k2 * c * *d;
        }
    }
    acc * vol / T::lit(2.0)
}

/// `-pi s^2 kappa(b, c) int dY ^ *dZ`.
pub fn ricci_closed_form<T: Real>(lie: &LieAlgebraData<T>, y: &TrigPoly<T>, z: &TrigPoly<T>, b: &[T], c: &[T], s: T) -> Result<T> {
    let kappa = lie.killing_form(b, c)?;
    Ok(-T::pi() * s * s * kappa * dirichlet_pairing(y, z))
}

/// `-int kappa(dy ^ *dz)` for Lie-valued fields.
pub fn reference_pairing<T: Real>(lie: &LieAlgebraData<T>, y: &[TrigPoly<T>], z: &[TrigPoly<T>]) -> Result<T> {
    let kg = lie.killing_gram();
    let mut acc = T::zero();
    for (a, ya) in y.iter().enumerate() {
        for (b, zb) in z.iter().enumerate() {
            acc -= kg[(a, b)] * dirichlet_pairing(ya, zb);
        }
    }
    Ok(acc)
}

/// Plane-wave evaluation of the truncated operator against a symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveReport {
    pub momenta: Vec<f64>,
    /// `max |p|^2 |e^{-ipx} A e^{ipx} - sigma|` over sample points and directions.
    pub errors: Vec<f64>,
    /// The same against `-sigma`.
    pub errors_negated: Vec<f64>,
    pub slope: f64,
    pub slope_negated: f64,
    /// `max |p|^2 |sigma|`, for scale.
    pub scale: f64,
}

fn fit_slope(ms: &[f64], errs: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ms.iter().zip(errs).map(|(m, e)| (m.ln(), e.max(1e-300).ln())).collect();
    least_squares_line(&pts).1
}

/// Builds `A = G [G^{-1}, Y] G [Z, G^{-1}] + 2 G [[G^{-1}, Y], Z]` with `G^{-1} = (Delta + m0^2)^s`
/// on a torus Fourier basis large enough that `A` acts exactly on each plane wave,
/// applies it to `cos(p.x)` and `sin(p.x)`, and compares `e^{-ipx} A e^{ipx}` with the
/// leading symbol at the sample points. Momenta are `n e_1` and `n e_2`.
pub fn plane_wave_check<T: Real>(
    y: &TrigPoly<T>,
    z: &TrigPoly<T>,
    s: T,
    m0: T,
    magnitudes: &[usize],
    points: &[[T; 2]],
) -> Result<PlaneWaveReport> {
    if m0 <= T::zero() {
        return Err(CurvError::Input("plane-wave check needs m0 > 0".into()));
    }
    if magnitudes.len() < 2 || points.is_empty() {
        return Err(CurvError::Input("need at least two momenta and one sample point".into()));
    }
    let top = *magnitudes.iter().max().unwrap_or(&0);
    let cutoff = top + y.degree() + z.degree();
    let basis = ModeBasis::<T>::new(Domain::Torus, cutoff);
    let spec = SpectralOperator::new(&basis, s, m0)?;
    let yv = y.to_basis(&basis)?;
    let zv = z.to_basis(&basis)?;
    let mul = |a: &Vector<T>, f: &Vector<T>| basis.multiply_project(a, f, cutoff);
    let g = |f: &Vector<T>| spec.apply_g(f);
    let gi = |f: &Vector<T>| spec.apply_p_s(f);
    let apply = |f: &Vector<T>| -> Result<Vector<T>> {
        // G [Z, G^{-1}] f
        let right = g(&(mul(&zv, &gi(f))? - gi(&mul(&zv, f)?)));
        // G [G^{-1}, Y] u
        let first = g(&(gi(&mul(&yv, &right)?) - mul(&yv, &gi(&right))?));
        // [G^{-1}, Y] f, then its commutator with Z
        let gy = |u: &Vector<T>| -> Result<Vector<T>> { Ok(gi(&mul(&yv, u)?) - mul(&yv, &gi(u))?) };
        let inner = gy(&mul(&zv, f)?)?;
        let outer = mul(&zv, &gy(f)?)?;
        Ok(first + g(&(inner - outer)) * T::lit(2.0))
    };
    let sym = assemble_leading_symbol(y, z, s)?;
    let mut errors = Vec::new();
    let mut errors_negated = Vec::new();
    let mut scale = 0.0f64;
    let sqrt2 = T::lit(2f64.sqrt());
    for &n in magnitudes {
        let mut e = 0.0f64;
        let mut en = 0.0f64;
        for dir in 0..2 {
            let mut k = [0i64, 0];
            k[dir] = n as i64;
            let mut cv = Vector::zeros(basis.len());
            let mut sv = Vector::zeros(basis.len());
            let ci = basis.index_of(&Mode { freq: k, parity: Parity::Cos }).ok_or(CurvError::Input("momentum outside basis".into()))?;
            let si = basis.index_of(&Mode { freq: k, parity: Parity::Sin }).ok_or(CurvError::Input("momentum outside basis".into()))?;
            cv[ci] = T::one() / sqrt2;
            sv[si] = T::one() / sqrt2;
            let ac = apply(&cv)?;
            let asn = apply(&sv)?;
            let nn = T::from_usize_lossy(n * n);
            let p = [T::from_i64_lossy(k[0]), T::from_i64_lossy(k[1])];
            for &x in points {
                let re = basis.eval(&ac, x);
                let im = basis.eval(&asn, x);
                let ph = p[0] * x[0] + p[1] * x[1];
                // e^{-i ph} (re + i im), real part; the imaginary part is lower order
                let val = re * ph.cos() + im * ph.sin();
                let imag = im * ph.cos() - re * ph.sin();
                let sig = sym.eval(x, p);
                let d = ((val - sig) * (val - sig) + imag * imag).sqrt() * nn;
                let dn = ((val + sig) * (val + sig) + imag * imag).sqrt() * nn;
                e = e.max(d.to_f64_lossy());
                en = en.max(dn.to_f64_lossy());
                scale = scale.max((sig * nn).abs().to_f64_lossy());
            }
        }
        errors.push(e);
        errors_negated.push(en);
    }
    let ms: Vec<f64> = magnitudes.iter().map(|&m| m as f64).collect();
    Ok(PlaneWaveReport {
        slope: fit_slope(&ms, &errors),
        slope_negated: fit_slope(&ms, &errors_negated),
        momenta: ms,
        errors,
        errors_negated,
        scale,
    })
}

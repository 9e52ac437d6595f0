//! Real Fourier eigenbases on the circle and the flat torus, exact mode
//! products, and Green's functions of `(Delta + m0^2)^s`.

use crate::error::{CurvError, Result};
use crate::scalar::{Real, Vector};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    Circle,
    Torus,
}

impl Domain {
    pub fn dim(self) -> usize {
        match self {
            Domain::Circle => 1,
            Domain::Torus => 2,
        }
    }

    pub fn volume<T: Real>(self) -> T {
        T::two_pi().powi(self.dim() as i32)
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::Circle => "circle",
            Domain::Torus => "torus",
        }
    }
}

impl std::str::FromStr for Domain {
    type Err = CurvError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(Domain::Circle),
            "torus" => Ok(Domain::Torus),
            other => Err(CurvError::Input(format!("unknown domain `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Const,
    Cos,
    Sin,
}

/// A real basis function: `1`, `sqrt2 cos(k.x)` or `sqrt2 sin(k.x)` with `k` canonical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mode {
    pub freq: [i64; 2],
    pub parity: Parity,
}

impl Mode {
    pub const CONST: Mode = Mode { freq: [0, 0], parity: Parity::Const };

    pub fn norm2(&self) -> i64 {
        self.freq[0] * self.freq[0] + self.freq[1] * self.freq[1]
    }

    pub fn max_abs(&self) -> i64 {
        self.freq[0].abs().max(self.freq[1].abs())
    }

    /// Value at a point.
    pub fn eval<T: Real>(&self, x: [T; 2]) -> T {
        let phase = T::from_i64_lossy(self.freq[0]) * x[0] + T::from_i64_lossy(self.freq[1]) * x[1];
        match self.parity {
            Parity::Const => T::one(),
            Parity::Cos => T::lit(2f64.sqrt()) * phase.cos(),
            Parity::Sin => T::lit(2f64.sqrt()) * phase.sin(),
        }
    }

    fn order_key(&self) -> (i64, i64, i64, Parity) {
        (self.norm2(), self.freq[0], self.freq[1], self.parity)
    }
}

/// Canonical representative of `+-v` and the sign relating them; `None` for `v = 0`.
/// Canonical means `k1 > 0`, or `k1 = 0` and `k2 > 0`.
pub fn canonical(v: [i64; 2]) -> Option<([i64; 2], i64)> {
    if v == [0, 0] {
        None
    } else if v[0] > 0 || (v[0] == 0 && v[1] > 0) {
        Some((v, 1))
    } else {
        Some(([-v[0], -v[1]], -1))
    }
}

/// One term of a product expansion: `coeff * mode`.
pub type ProductTerm<T> = (Mode, T);

/// Exact expansion of `phi_p * phi_q`; at most two terms.
pub fn mode_product<T: Real>(p: &Mode, q: &Mode) -> ([Option<ProductTerm<T>>; 2], usize) {
    let r = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    match (p.parity, q.parity) {
        (Parity::Const, _) => ([Some((*q, T::one())), None], 1),
        (_, Parity::Const) => ([Some((*p, T::one())), None], 1),
        _ => {
            let (a, b) = (p.freq, q.freq);
            let sum = [a[0] + b[0], a[1] + b[1]];
            let diff = [a[0] - b[0], a[1] - b[1]];
            // cos(v) and sin(v) in the normalized basis
            let cosv = |v: [i64; 2], c: T| match canonical(v) {
                None => Some((Mode::CONST, c)),
                Some((k, _)) => Some((Mode { freq: k, parity: Parity::Cos }, c * r)),
            };
            let sinv = |v: [i64; 2], c: T| {
                canonical(v).map(|(k, sg)| (Mode { freq: k, parity: Parity::Sin }, c * r * T::from_i64_lossy(sg)))
            };
            let one = T::one();
            match (p.parity, q.parity) {
                (Parity::Cos, Parity::Cos) => ([cosv(diff, one), cosv(sum, one)], 2),
                (Parity::Sin, Parity::Sin) => ([cosv(diff, one), cosv(sum, -one)], 2),
                (Parity::Cos, Parity::Sin) => ([sinv(sum, one), sinv([-diff[0], -diff[1]], one)], 2),
                (Parity::Sin, Parity::Cos) => ([sinv(sum, one), sinv(diff, one)], 2),
                _ => unreachable!(),
            }
        }
    }
}

/// L2(dV/vol)-orthonormal real Fourier basis with frequencies in the box `max |k_i| <= cutoff`.
#[derive(Debug, Clone)]
pub struct ModeBasis<T: Real> {
    domain: Domain,
    cutoff: i64,
    modes: Vec<Mode>,
    eigenvalues: Vec<T>,
    lookup: Vec<usize>,
    width: i64,
}

const NONE: usize = usize::MAX;

impl<T: Real> ModeBasis<T> {
    pub fn new(domain: Domain, cutoff: usize) -> Self {
        let c = cutoff as i64;
        let mut modes = vec![Mode::CONST];
        let k2range = match domain {
            Domain::Circle => 0..=0,
            Domain::Torus => -c..=c,
        };
        for k1 in 0..=c {
            for k2 in k2range.clone() {
                if canonical([k1, k2]) == Some(([k1, k2], 1)) {
                    modes.push(Mode { freq: [k1, k2], parity: Parity::Cos });
                    modes.push(Mode { freq: [k1, k2], parity: Parity::Sin });
                }
            }
        }
        modes.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        // canonical k1 is nonnegative; k2 only varies on the torus
        let width = match domain {
            Domain::Circle => 1,
            Domain::Torus => 2 * c + 1,
        };
        let mut lookup = vec![NONE; ((c + 1) * width * 2) as usize];
        for (i, m) in modes.iter().enumerate() {
            if m.parity != Parity::Const {
                lookup[Self::slot(c, width, m)] = i;
            }
        }
        let eigenvalues = modes.iter().map(|m| T::from_i64_lossy(m.norm2())).collect();
        Self { domain, cutoff: c, modes, eigenvalues, lookup, width }
    }

    fn slot(c: i64, width: i64, m: &Mode) -> usize {
        let k2 = if width == 1 { 0 } else { m.freq[1] + c };
        let cell = (m.freq[0] * width + k2) as usize;
        cell * 2 + usize::from(m.parity == Parity::Sin)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff as usize
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> &Mode {
        &self.modes[i]
    }

    /// Laplace eigenvalue `|k|^2`.
    pub fn eigenvalue(&self, i: usize) -> T {
        self.eigenvalues[i]
    }

    pub fn volume(&self) -> T {
        self.domain.volume()
    }

    /// Index of a mode, `None` when it lies outside the cutoff.
    #[inline]
    pub fn index_of(&self, m: &Mode) -> Option<usize> {
        if m.parity == Parity::Const {
            return Some(0);
        }
        if m.max_abs() > self.cutoff {
            return None;
        }
        if m.freq[0] < 0 || (self.width == 1 && m.freq[1] != 0) {
            return None;
        }
        let i = self.lookup[Self::slot(self.cutoff, self.width, m)];
        (i != NONE).then_some(i)
    }

    /// Indices of the modes with `max |k_i| <= m`.
    pub fn indices_within(&self, m: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.modes[i].max_abs() <= m as i64).collect()
    }

    /// Evaluates a coefficient vector at a point.
    pub fn eval(&self, coeffs: &Vector<T>, x: [T; 2]) -> T {
        let mut s = T::zero();
        for (i, m) in self.modes.iter().enumerate() {
            if coeffs[i] != T::zero() {
                s += coeffs[i] * m.eval(x);
            }
        }
        s
    }

    /// Exact Gram matrix entry `<phi_i, phi_j>` in L2(dV/vol), from the product table.
    pub fn gram_entry(&self, i: usize, j: usize) -> T {
        let (terms, n) = mode_product::<T>(&self.modes[i], &self.modes[j]);
        terms[..n]
            .iter()
            .flatten()
            .filter(|(m, _)| m.parity == Parity::Const)
            .fold(T::zero(), |a, (_, c)| a + *c)
    }

    /// `f * g` expanded exactly and projected to frequencies `<= target_cutoff`.
    pub fn multiply_project(&self, f: &Vector<T>, g: &Vector<T>, target_cutoff: usize) -> Result<Vector<T>> {
        if f.len() != self.len() || g.len() != self.len() {
            return Err(CurvError::DimensionMismatch { expected: self.len(), got: f.len().min(g.len()) });
        }
        if target_cutoff as i64 > self.cutoff {
            return Err(CurvError::Truncation { requested: target_cutoff as i64, ambient: self.cutoff });
        }
        let mut out = Vector::zeros(self.len());
        let fnz: Vec<usize> = (0..self.len()).filter(|&i| f[i] != T::zero()).collect();
        let gnz: Vec<usize> = (0..self.len()).filter(|&i| g[i] != T::zero()).collect();
        for &p in &fnz {
            for &q in &gnz {
                let (terms, n) = mode_product::<T>(&self.modes[p], &self.modes[q]);
                for (m, c) in terms[..n].iter().flatten() {
                    if m.max_abs() > target_cutoff as i64 {
                        continue;
                    }
                    if let Some(r) = self.index_of(m) {
                        out[r] += *c * f[p] * g[q];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Orthogonal projection onto frequencies `<= m` (zeroes the rest).
    pub fn project(&self, f: &Vector<T>, m: usize) -> Vector<T> {
        Vector::from_fn(self.len(), |i, _| if self.modes[i].max_abs() <= m as i64 { f[i] } else { T::zero() })
    }
}

/// Aliasing-free sampling grid for products of two functions of a basis,
/// projected back onto that basis.
///
/// With side `L >= 3C + 1` no product frequency of two degree-`C` inputs aliases
/// onto a frequency `<= C`, so the projected product is exact up to roundoff.
pub struct GridTransform<T: Real> {
    dim: usize,
    side: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    slots: Vec<(usize, usize)>,
    parities: Vec<Parity>,
    /// Rows of a 2D spectrum that can carry a basis frequency.
    rows: Vec<usize>,
}

impl<T: Real> std::fmt::Debug for GridTransform<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridTransform").field("dim", &self.dim).field("side", &self.side).finish()
    }
}

impl<T: Real> Clone for GridTransform<T> {
    fn clone(&self) -> Self {
        Self {
            dim: self.dim,
            side: self.side,
            fwd: Arc::clone(&self.fwd),
            inv: Arc::clone(&self.inv),
            slots: self.slots.clone(),
            parities: self.parities.clone(),
            rows: self.rows.clone(),
        }
    }
}

/// Smallest `2^a q >= n` with `q` in {1, 3, 5}; these lengths run fastest.
fn fft_size(n: usize) -> usize {
    [1usize, 3, 5]
        .into_iter()
        .map(|q| {
            let mut m = q;
            while m < n {
                m *= 2;
            }
            m
        })
        .min()
        .unwrap_or(n)
}

impl<T: Real> GridTransform<T> {
    pub fn new(basis: &ModeBasis<T>) -> Self {
        let dim = basis.domain().dim();
        let side = fft_size(3 * basis.cutoff() + 1);
        let mut planner = FftPlanner::<T>::new();
        let fwd = planner.plan_fft_forward(side);
        let inv = planner.plan_fft_inverse(side);
        let l = side as i64;
        let wrap = |k: i64| (((k % l) + l) % l) as usize;
        let pos = |k: [i64; 2]| if dim == 1 { wrap(k[0]) } else { wrap(k[0]) * side + wrap(k[1]) };
        let slots = basis.modes().iter().map(|m| (pos(m.freq), pos([-m.freq[0], -m.freq[1]]))).collect();
        let parities = basis.modes().iter().map(|m| m.parity).collect();
        let c = basis.cutoff() as i64;
        let rows = if dim == 1 { Vec::new() } else { (-c..=c).map(wrap).collect() };
        Self { dim, side, fwd, inv, slots, parities, rows }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Number of grid points.
    pub fn points(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    /// Runs `plan` over every row, or only over the listed rows.
    fn rows_pass(&self, buf: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>, scratch: &mut [Complex<T>], only: Option<&[usize]>) {
        match only {
            None => plan.process_with_scratch(buf, scratch),
            Some(rows) => {
                for &r in rows {
                    plan.process_with_scratch(&mut buf[r * self.side..(r + 1) * self.side], scratch);
                }
            }
        }
    }

    fn inverse(&self, buf: &mut [Complex<T>]) {
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); self.inv.get_inplace_scratch_len()];
        if self.dim == 1 {
            return self.inv.process_with_scratch(buf, &mut scratch);
        }
        // rows are indexed by the first frequency; empty ones stay zero
        self.rows_pass(buf, &self.inv, &mut scratch, Some(&self.rows));
        transpose(buf, self.side);
        self.rows_pass(buf, &self.inv, &mut scratch, None);
        transpose(buf, self.side);
    }

    fn forward(&self, buf: &mut [Complex<T>]) {
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); self.fwd.get_inplace_scratch_len()];
        if self.dim == 1 {
            return self.fwd.process_with_scratch(buf, &mut scratch);
        }
        self.rows_pass(buf, &self.fwd, &mut scratch, None);
        transpose(buf, self.side);
        // only second frequencies inside the basis are read back
        self.rows_pass(buf, &self.fwd, &mut scratch, Some(&self.rows));
        transpose(buf, self.side);
    }

    /// Adds `c phi_i` to a Hermitian spectrum, times `i` when `rotate` is set.
    fn place(&self, buf: &mut [Complex<T>], i: usize, c: T, rotate: bool) {
        let r = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        let (p, n) = self.slots[i];
        let z = T::zero();
        let (at_p, at_n) = match self.parities[i] {
            Parity::Const => (Complex::new(c, z), Complex::new(z, z)),
            Parity::Cos => (Complex::new(c * r, z), Complex::new(c * r, z)),
            Parity::Sin => (Complex::new(z, -c * r), Complex::new(z, c * r)),
        };
        let rot = |w: Complex<T>| if rotate { Complex::new(-w.im, w.re) } else { w };
        buf[p] += rot(at_p);
        buf[n] += rot(at_n);
    }

    /// Grid values of `sum_i coeff(j, i) phi_i` for components `j < count`.
    /// Components are transformed two at a time as real and imaginary parts.
    pub fn synthesize_components(&self, modes: &[usize], count: usize, coeff: impl Fn(usize, usize) -> T) -> Vec<Vec<T>> {
        let mut out = Vec::with_capacity(count);
        for j in (0..count).step_by(2) {
            let mut buf = vec![Complex::new(T::zero(), T::zero()); self.points()];
            let pair = j + 1 < count;
            for &i in modes {
                self.place(&mut buf, i, coeff(j, i), false);
                if pair {
                    self.place(&mut buf, i, coeff(j + 1, i), true);
                }
            }
            self.inverse(&mut buf);
            out.push(buf.iter().map(|z| z.re).collect());
            if pair {
                out.push(buf.iter().map(|z| z.im).collect());
            }
        }
        out
    }

    /// Grid values of `sum_i coeff(i) phi_i` over the listed mode indices.
    pub fn synthesize(&self, modes: &[usize], coeff: impl Fn(usize) -> T) -> Vec<T> {
        self.synthesize_components(modes, 1, |_, i| coeff(i)).pop().unwrap_or_default()
    }

    /// Projection of several real grids onto the basis; calls `sink(j, i, coefficient)`
    /// for grid `j` and every mode `i`.
    pub fn analyze_components(&self, grids: &[&[T]], mut sink: impl FnMut(usize, usize, T)) {
        let norm = T::one() / T::from_usize_lossy(self.points());
        let half = T::lit(0.5);
        let r2 = T::lit(2f64.sqrt());
        let coeff = |parity: Parity, f: Complex<T>| match parity {
            Parity::Const => f.re,
            Parity::Cos => r2 * f.re,
            Parity::Sin => -r2 * f.im,
        };
        for j in (0..grids.len()).step_by(2) {
            let pair = j + 1 < grids.len();
            let mut buf: Vec<Complex<T>> = if pair {
                grids[j].iter().zip(grids[j + 1]).map(|(a, b)| Complex::new(*a, *b)).collect()
            } else {
                grids[j].iter().map(|v| Complex::new(*v, T::zero())).collect()
            };
            self.forward(&mut buf);
            for (i, &(p, n)) in self.slots.iter().enumerate() {
                let zp = buf[p] * norm;
                if !pair {
                    sink(j, i, coeff(self.parities[i], zp));
                    continue;
                }
                // split the transforms of the real and imaginary parts
                let zn = (buf[n] * norm).conj();
                let fa = (zp + zn) * half;
                let d = (zp - zn) * half;
                let fb = Complex::new(d.im, -d.re);
                sink(j, i, coeff(self.parities[i], fa));
                sink(j + 1, i, coeff(self.parities[i], fb));
            }
        }
    }

    /// Projection of grid values onto the basis; calls `sink(i, coefficient)` for every mode.
    pub fn analyze(&self, values: &[T], mut sink: impl FnMut(usize, T)) {
        self.analyze_components(&[values], |_, i, c| sink(i, c));
    }
}

fn transpose<T: Copy>(buf: &mut [T], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Fourier multipliers of `P^s = (Delta + m0^2)^s` on a mode basis.
#[derive(Debug, Clone)]
pub struct SpectralOperator<T: Real> {
    pub s: T,
    pub m0: T,
    /// `(|k|^2 + m0^2)^s` per mode (the action of `G^{-1}`).
    multipliers: Vec<T>,
    exclude_constant: bool,
}

impl<T: Real> SpectralOperator<T> {
    pub fn new(basis: &ModeBasis<T>, s: T, m0: T) -> Result<Self> {
        if s < T::zero() {
            return Err(CurvError::Input(format!("exponent s must be nonnegative, got {s}")));
        }
        if m0 < T::zero() {
            return Err(CurvError::Input(format!("mass m0 must be nonnegative, got {m0}")));
        }
        let exclude_constant = m0 == T::zero();
        let multipliers = (0..basis.len())
            .map(|i| {
                let lam = basis.eigenvalue(i) + m0 * m0;
                if lam == T::zero() {
                    T::zero()
                } else {
                    lam.powf(s)
                }
            })
            .collect();
        Ok(Self { s, m0, multipliers, exclude_constant })
    }

    /// True when `m0 = 0`, so the constant mode is quotiented out.
    pub fn excludes_constant(&self) -> bool {
        self.exclude_constant
    }

    /// Multiplier of `G^{-1} = P^s` on mode `i`.
    pub fn p_s(&self, i: usize) -> T {
        self.multipliers[i]
    }

    /// Multiplier of `G = P^{-s}`; zero on an excluded constant mode.
    pub fn g(&self, i: usize) -> T {
        let m = self.multipliers[i];
        if m == T::zero() {
            T::zero()
        } else {
            T::one() / m
        }
    }

    pub fn apply_p_s(&self, f: &Vector<T>) -> Vector<T> {
        Vector::from_fn(f.len(), |i, _| f[i] * self.multipliers[i])
    }

    pub fn apply_g(&self, f: &Vector<T>) -> Vector<T> {
        Vector::from_fn(f.len(), |i, _| f[i] * self.g(i))
    }
}

/// `theta(t, x) - 1/2pi` where `theta(t, x) = (1/2pi) sum_n exp(-t n^2) cos(n x)`:
/// spectral sum for large `t`, image sum for small `t`. The mean is removed before
/// summing so the large-`t` tail has no cancellation.
fn theta_excess<T: Real>(t: T, x: T) -> T {
    let two_pi = T::two_pi();
    let mut y = x % two_pi;
    if y > T::pi() {
        y -= two_pi;
    }
    if y < -T::pi() {
        y += two_pi;
    }
    let tiny = T::default_epsilon() * T::lit(1e-3);
    if t >= T::one() {
        let mut s = T::zero();
        let mut n = 1i64;
        loop {
            let nn = T::from_i64_lossy(n);
            let e = (-t * nn * nn).exp();
            if e < tiny {
                break;
            }
            s += T::lit(2.0) * e * (nn * y).cos();
            n += 1;
        }
        s / two_pi
    } else {
        let four_t = T::lit(4.0) * t;
        let mut s = (-(y * y) / four_t).exp();
        let mut n = 1i64;
        loop {
            let shift = two_pi * T::from_i64_lossy(n);
            let a = (-((y - shift) * (y - shift)) / four_t).exp();
            let b = (-((y + shift) * (y + shift)) / four_t).exp();
            s += a + b;
            if a + b <= tiny * s {
                break;
            }
            n += 1;
        }
        s / (T::pi() * four_t).sqrt() - T::one() / two_pi
    }
}

/// Green's function of `P^s` with respect to the unnormalized volume `dV`.
///
/// Evaluated as `(1/Gamma(s)) int_0^inf t^{s-1} e^{-m0^2 t} H_t(v - w) dt` with the
/// heat kernel `H_t`; the integral is taken with the trapezoid rule in `u = ln t`,
/// which converges geometrically for this doubly-exponentially decaying integrand.
/// With `m0 = 0` the constant mode is removed (Green's function on the quotient).
pub fn greens_function<T: Real>(domain: Domain, v: [T; 2], w: [T; 2], s: T, m0: T) -> Result<T> {
    if s <= T::zero() {
        return Err(CurvError::Input(format!("exponent s must be positive, got {s}")));
    }
    if m0 < T::zero() {
        return Err(CurvError::Input(format!("mass m0 must be nonnegative, got {m0}")));
    }
    let dim = domain.dim();
    let d = [v[0] - w[0], v[1] - w[1]];
    let zero_sep = (0..dim).all(|i| {
        let r = d[i] % T::two_pi();
        r == T::zero()
    });
    if zero_sep && s * T::lit(2.0) <= T::from_usize_lossy(dim) {
        return Err(CurvError::DiagonalDivergence { two_s: (s * T::lit(2.0)).to_f64_lossy(), dim });
    }
    let vol: T = domain.volume();
    let quotient = m0 == T::zero();
    // heat kernel H_t, minus its mean 1/vol on the quotient
    let mean = T::one() / T::two_pi();
    let heat = |t: T| {
        let e: Vec<T> = d.iter().take(dim).map(|di| theta_excess(t, *di)).collect();
        let h = match dim {
            1 => e[0],
            _ => e[0] * e[1] + (e[0] + e[1]) * mean,
        };
        if quotient {
            h
        } else {
            h + T::one() / vol
        }
    };
    let m2 = m0 * m0;
    let integrand = |u: T| {
        let t = u.exp();
        t.powf(s) * (-m2 * t).exp() * heat(t)
    };

    let h = T::lit(0.05);
    let tiny = T::default_epsilon() * T::lit(1e-2);
    let f0 = integrand(T::zero());
    let mut total = f0;
    let mut peak = f0.abs();
    // march outwards until the integrand is negligible relative to its peak
    for dir in [T::one(), -T::one()] {
        let mut k = 1i64;
        let mut small_run = 0;
        loop {
            let u = dir * h * T::from_i64_lossy(k);
            let f = integrand(u);
            peak = peak.max(f.abs());
            total += f;
            if f.abs() <= tiny * peak {
                small_run += 1;
                if small_run >= 8 {
                    break;
                }
            } else {
                small_run = 0;
            }
            k += 1;
            if k > 4_000_000 {
                return Err(CurvError::Input("Green's function integral failed to converge".into()));
            }
        }
    }
    let gamma = T::lit(statrs::function::gamma::gamma(s.to_f64_lossy()));
    Ok(total * h / gamma)
}

/// Plain truncated eigenfunction sum of the Green's function over `max |k_i| <= cutoff`
/// together with an integral-comparison bound on the omitted tail.
pub fn greens_series<T: Real>(domain: Domain, v: [T; 2], w: [T; 2], s: T, m0: T, cutoff: usize) -> (T, T) {
    let basis = ModeBasis::<T>::new(domain, cutoff);
    let vol = basis.volume();
    let mut sum = T::zero();
    for m in basis.modes() {
        let lam = T::from_i64_lossy(m.norm2()) + m0 * m0;
        if lam == T::zero() {
            continue;
        }
        sum += m.eval(v) * m.eval(w) / lam.powf(s);
    }
    // tail over |k| > cutoff, bounded by the radial integral of |k|^{-2s}
    let dim = T::from_usize_lossy(domain.dim());
    let k = T::from_usize_lossy(cutoff);
    let excess = T::lit(2.0) * s - dim;
    let tail = if excess > T::zero() {
        let area = match domain {
            Domain::Circle => T::lit(2.0),
            Domain::Torus => T::two_pi(),
        };
        T::lit(2.0) * area * k.powf(-excess) / excess / vol
    } else {
        T::lit(f64::INFINITY)
    };
    (sum / vol, tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_cos_squared() {
        let b = ModeBasis::<f64>::new(Domain::Circle, 4);
        let c1 = b.index_of(&Mode { freq: [1, 0], parity: Parity::Cos }).unwrap();
        let c2 = b.index_of(&Mode { freq: [2, 0], parity: Parity::Cos }).unwrap();
        let mut f = Vector::zeros(b.len());
        f[c1] = 1.0;
        let p = b.multiply_project(&f, &f, 4).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15);
        assert!((p[c2] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn torus_mode_count_and_order() {
        let b = ModeBasis::<f64>::new(Domain::Torus, 2);
        assert_eq!(b.len(), 25);
        for w in b.modes().windows(2) {
            assert!(w[0].norm2() <= w[1].norm2());
        }
        for (i, m) in b.modes().iter().enumerate() {
            assert_eq!(b.index_of(m), Some(i));
        }
    }

    #[test]
    fn truncation_error() {
        let b = ModeBasis::<f64>::new(Domain::Circle, 3);
        let f = Vector::zeros(b.len());
        assert!(matches!(b.multiply_project(&f, &f, 4), Err(CurvError::Truncation { .. })));
    }

    #[test]
    fn diagonal_divergence() {
        let r = greens_function::<f64>(Domain::Torus, [0.0, 0.0], [0.0, 0.0], 1.0, 1.0);
        assert!(matches!(r, Err(CurvError::DiagonalDivergence { .. })));
        assert!(greens_function::<f64>(Domain::Torus, [0.0, 0.0], [1.0, 0.5], 1.0, 1.0).is_ok());
    }
}

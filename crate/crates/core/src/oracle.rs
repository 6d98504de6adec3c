//! Brute-force reference diagonalization that shares nothing with the Bethe
//! solver: the characteristic polynomial from the tridiagonal recurrence,
//! Aberth iteration for its roots, and inverse iteration for eigenvectors.
//!
//! Coefficient expansion is only sensible for moderate `N`; beyond
//! [`MAX_EXPANDED_SITES`] use [`critical_levels_newton`], which never forms
//! coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ChainSpec, StateVector};

/// Largest chain for which coefficient expansion is trusted.
pub const MAX_EXPANDED_SITES: usize = 64;

const MAX_ABERTH: usize = 1000;
const MAX_NEWTON: usize = 100;
const MAX_RESHIFTS: usize = 3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `det(H - λ)` as coefficients in ascending powers of `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPoly {
    pub coefficients: Vec<Complex64>,
}

impl CharPoly {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn leading(&self) -> Complex64 {
        self.coefficients[self.degree()]
    }

    /// Plain Horner evaluation of `p` and `p'`.
    pub fn eval_with_derivative(&self, x: Complex64) -> (Complex64, Complex64) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &c in self.coefficients.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    /// Compensated Horner evaluation, accurate to about twice working
    /// precision.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        let mut acc = DdComplex::default();
        for &c in self.coefficients.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc.to_complex()
    }

    /// `Σ |c_i| r^i`, the scale of rounding errors in evaluating at `|x| = r`.
    pub fn magnitude_bound(&self, r: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn max_coefficient(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Diagonal of `H`.
fn diagonal(spec: &ChainSpec) -> Vec<Complex64> {
    let n = spec.n_sites();
    let mut d = vec![ZERO; n];
    d[0] = Complex64::new(0.0, spec.gamma());
    d[n - 1] = Complex64::new(0.0, -spec.gamma());
    d
}

/// `D_n = (d_n - λ) D_{n-1} - J² D_{n-2}` expanded in powers of `λ`.
pub fn char_poly(spec: &ChainSpec) -> CharPoly {
    let d = diagonal(spec);
    let j2 = spec.hopping() * spec.hopping();
    let mut prev: Vec<Complex64> = vec![ONE];
    let mut cur: Vec<Complex64> = vec![d[0], -ONE];
    for &dn in &d[1..] {
        let mut next = vec![ZERO; cur.len() + 1];
        for (i, &c) in cur.iter().enumerate() {
            next[i] += dn * c;
            next[i + 1] -= c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= j2 * c;
        }
        prev = cur;
        cur = next;
    }
    CharPoly { coefficients: cur }
}

// Error-free transformations for the compensated evaluation.

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[derive(Debug, Clone, Copy, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let (hi, lo) = two_sum(s, e + self.lo + other.lo);
        Dd { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }

    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct DdComplex {
    re: Dd,
    im: Dd,
}

impl DdComplex {
    fn mul(self, x: Complex64) -> Self {
        let re = self.re.mul_f64(x.re).add(self.im.mul_f64(x.im).neg());
        let im = self.re.mul_f64(x.im).add(self.im.mul_f64(x.re));
        Self { re, im }
    }

    fn add(self, c: Complex64) -> Self {
        Self { re: self.re.add(Dd::from(c.re)), im: self.im.add(Dd::from(c.im)) }
    }

    fn to_complex(self) -> Complex64 {
        Complex64::new(self.re.hi + self.re.lo, self.im.hi + self.im.lo)
    }
}

/// All roots of `p` by Aberth's simultaneous iteration, each polished by a
/// few Newton steps with compensated evaluation. Deterministic: the start
/// points sit on a fixed circle with a fixed angular offset.
pub fn poly_roots(p: &CharPoly, tol: f64) -> Result<Vec<Complex64>> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = p.degree();
    if n == 0 {
        return Err(Error::InvalidArgument("constant polynomial has no roots".into()));
    }
    let lead = p.leading();
    let radius = 1.0
        + p.coefficients[..n]
            .iter()
            .map(|c| (c / lead).norm())
            .fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|i| Complex64::from_polar(radius, 2.0 * PI * i as f64 / n as f64 + 0.4))
        .collect();

    // a root is done once its step is below tol or |p| is at rounding level
    let mut done = vec![false; n];
    let mut converged = false;
    for _ in 0..MAX_ABERTH {
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (pv, dpv) = p.eval_with_derivative(z[i]);
            if pv.norm() <= 4.0 * n as f64 * f64::EPSILON * p.magnitude_bound(z[i].norm()) {
                done[i] = true;
                continue;
            }
            let ratio = pv / dpv;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| ONE / (z[i] - z[j]))
                .sum();
            let step = ratio / (ONE - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                if step.norm() < tol * z[i].norm().max(1.0) {
                    done[i] = true;
                }
            }
        }
        if done.iter().all(|&d| d) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { what: "Aberth iteration", iterations: MAX_ABERTH });
    }

    let dp = CharPoly {
        coefficients: p.coefficients[1..]
            .iter()
            .enumerate()
            .map(|(i, &c)| c * (i + 1) as f64)
            .collect(),
    };
    for zi in z.iter_mut() {
        for _ in 0..5 {
            let step = p.eval(*zi) / dp.eval(*zi);
            // only a local correction; a large step would jump to a neighbor
            if !step.is_finite() || step.norm() > 1e-6 * zi.norm().max(1.0) {
                break;
            }
            *zi -= step;
            if step.norm() <= tol * zi.norm().max(1.0) {
                break;
            }
        }
    }
    z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(z)
}

/// Eigenvalues of `H` from the characteristic polynomial.
pub fn oracle_spectrum(spec: &ChainSpec, tol: f64) -> Result<Vec<Complex64>> {
    if spec.n_sites() > MAX_EXPANDED_SITES {
        return Err(Error::InvalidArgument(format!(
            "coefficient expansion is limited to N <= {MAX_EXPANDED_SITES}"
        )));
    }
    poly_roots(&char_poly(spec), tol)
}

/// `D_N(λ)` and `D_N'(λ)` by the recurrence, rescaled as it runs; only the
/// ratio `D'/D` is meaningful.
fn recurrence_log_derivative(spec: &ChainSpec, lambda: Complex64) -> Complex64 {
    let d = diagonal(spec);
    let j2 = spec.hopping() * spec.hopping();
    let (mut p0, mut p1) = (ONE, d[0] - lambda);
    let (mut q0, mut q1) = (ZERO, -ONE);
    for &dn in &d[1..] {
        let p2 = (dn - lambda) * p1 - j2 * p0;
        let q2 = (dn - lambda) * q1 - p1 - j2 * q0;
        p0 = p1;
        p1 = p2;
        q0 = q1;
        q1 = q2;
        let s = p1.norm().max(q1.norm());
        if s > 1e100 || (s < 1e-100 && s > 0.0) {
            p0 /= s;
            p1 /= s;
            q0 /= s;
            q1 /= s;
        }
    }
    q1 / p1
}

/// Newton on `D_N(λ)` from `guess`, with the roots in `deflate` divided out.
pub fn newton_level(spec: &ChainSpec, guess: Complex64, deflate: &[Complex64], tol: f64) -> Result<Complex64> {
    let mut z = guess;
    let mut last_step = f64::INFINITY;
    for _ in 0..MAX_NEWTON {
        let mut ld = recurrence_log_derivative(spec, z);
        for &r in deflate {
            ld -= ONE / (z - r);
        }
        let step = ONE / ld;
        if !step.is_finite() {
            // landed exactly on a root
            return Ok(z);
        }
        z -= step;
        let size = step.norm();
        // rounding floor reached: the step stopped shrinking quadratically
        let stalled = size >= 0.5 * last_step && size < 1e-8 * z.norm();
        if size <= tol * z.norm().max(f64::MIN_POSITIVE) || stalled {
            return Ok(z);
        }
        last_step = size;
    }
    Err(Error::NonConvergence { what: "recurrence Newton", iterations: MAX_NEWTON })
}

/// The two levels closest to zero (excluding the odd-`N` zero mode), refined
/// by Newton on the recurrence from the given guess `±guess`.
pub fn critical_levels_newton(spec: &ChainSpec, guess: Complex64, tol: f64) -> Result<[Complex64; 2]> {
    let deflate: &[Complex64] = if spec.is_odd() { &[ZERO] } else { &[] };
    let a = newton_level(spec, guess, deflate, tol)?;
    let b = newton_level(spec, -guess, deflate, tol)?;
    Ok([a, b])
}

/// Tridiagonal `H - σ` factored by Gaussian elimination with partial
/// pivoting; the upper factor carries a second superdiagonal.
struct TridiagLu {
    lower: Vec<Complex64>,
    pivot: Vec<bool>,
    u0: Vec<Complex64>,
    u1: Vec<Complex64>,
    u2: Vec<Complex64>,
}

impl TridiagLu {
    fn factor(sub: &[Complex64], diag: &[Complex64], sup: &[Complex64]) -> Option<Self> {
        let n = diag.len();
        let mut u0 = diag.to_vec();
        let mut u1 = sup.to_vec();
        u1.push(ZERO);
        let mut u2 = vec![ZERO; n];
        let mut lower = vec![ZERO; n];
        let mut pivot = vec![false; n];
        let mut sub = sub.to_vec();
        for i in 0..n.saturating_sub(1) {
            if sub[i].norm() > u0[i].norm() {
                pivot[i] = true;
                // swap rows i and i+1
                std::mem::swap(&mut u0[i], &mut sub[i]);
                std::mem::swap(&mut u0[i + 1], &mut u1[i]);
                u2[i] = u1[i + 1];
                u1[i + 1] = ZERO;
            }
            if u0[i] == ZERO {
                return None;
            }
            let m = sub[i] / u0[i];
            lower[i] = m;
            u0[i + 1] -= m * u1[i];
            u1[i + 1] -= m * u2[i];
        }
        if u0.iter().any(|x| !x.is_finite() || x.norm() < 1e-300) {
            return None;
        }
        Some(Self { lower, pivot, u0, u1, u2 })
    }

    fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.u0.len();
        let mut y = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.pivot[i] {
                y.swap(i, i + 1);
            }
            let yi = y[i];
            y[i + 1] -= self.lower[i] * yi;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            if i + 1 < n {
                s -= self.u1[i] * y[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * y[i + 2];
            }
            y[i] = s / self.u0[i];
        }
        y
    }
}

/// `‖H v - λ v‖∞` without forming `H`.
pub fn tridiagonal_residual(spec: &ChainSpec, v: &StateVector, lambda: Complex64) -> f64 {
    let d = diagonal(spec);
    let j = spec.hopping();
    let a = v.amplitudes();
    let n = a.len();
    (0..n)
        .map(|l| {
            let mut hv = d[l] * a[l];
            if l > 0 {
                hv -= j * a[l - 1];
            }
            if l + 1 < n {
                hv -= j * a[l + 1];
            }
            (hv - lambda * a[l]).norm()
        })
        .fold(0.0, f64::max)
}

/// Unit eigenvector for an eigenvalue `λ` known to within `tol`, by inverse
/// iteration on `H - (λ + shift)`. The shift is small and deterministic; it
/// grows tenfold on each singular factorization.
pub fn oracle_eigenvector(spec: &ChainSpec, lambda: Complex64, tol: f64) -> Result<StateVector> {
    let n = spec.n_sites();
    let j = spec.hopping();
    let off = vec![Complex64::new(-j, 0.0); n - 1];
    let scale = lambda.norm().max(j);
    let mut shift = Complex64::from_polar(1e-10 * scale, 0.3);
    for _ in 0..=MAX_RESHIFTS {
        let sigma = lambda + shift;
        let diag: Vec<Complex64> = diagonal(spec).into_iter().map(|x| x - sigma).collect();
        if let Some(lu) = TridiagLu::factor(&off, &diag, &off) {
            let mut v: Vec<Complex64> = (0..n)
                .map(|l| Complex64::new(1.0, 0.1 * l as f64))
                .collect();
            let mut best = StateVector::new(v.clone()).normalized();
            for _ in 0..8 {
                let w = lu.solve(&v);
                best = StateVector::new(w).normalized();
                if tridiagonal_residual(spec, &best, lambda) < 10.0 * tol {
                    break;
                }
                v = best.amplitudes().to_vec();
            }
            return Ok(phase_fix(&best));
        }
        shift *= 10.0;
    }
    Err(Error::SingularSolve { lambda: format!("{lambda}") })
}

/// Rotate so the largest component is real and positive.
fn phase_fix(v: &StateVector) -> StateVector {
    let big = v
        .amplitudes()
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(ONE);
    if big == ZERO {
        return v.clone();
    }
    v.scale(big.conj() / big.norm())
}

/// Optimal one-to-one assignment between two equal-length spectra
/// (Hungarian algorithm on `|a_i - b_j|`). Returns `perm` with `a[i]`
/// matched to `b[perm[i]]`.
pub fn optimal_matching(a: &[Complex64], b: &[Complex64]) -> Vec<usize> {
    let n = a.len();
    assert_eq!(n, b.len(), "spectra of different length");
    let cost = |i: usize, j: usize| (a[i] - b[j]).norm();
    // potentials and assignment, 1-based with a sentinel column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    perm
}

/// Largest deviation between two spectra after optimal matching, or
/// infinity when their lengths differ.
pub fn match_spectra(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let perm = optimal_matching(a, b);
    perm.iter()
        .enumerate()
        .map(|(i, &j)| (a[i] - b[j]).norm())
        .fold(0.0, f64::max)
}

//! Quantization conditions for the Bethe quasimomenta and the resulting
//! spectrum.
//!
//! Real momenta are the roots in `(0, π)` of
//!
//! ```text
//! G(k) = γ² sin(k(N-1)) + J² sin(k(N+1))
//! ```
//!
//! with energy `-2J cos k`. `G` is even (even `N`) or odd (odd `N`) about
//! `k = π/2`, so the roots come in pairs `π/2 ± u`. The solver brackets
//! roots of the reduced function on `u ∈ [0, π/2)` only: `G(π/2 + u)` for
//! even `N`, `G(π/2 + u) / sin u` for odd `N` (whose `u → 0` limit is
//! `G'(π/2)`). The two levels that coalesce at `γ_c` collapse onto `u = 0`,
//! where the reduced function is evaluated exactly, so the root count stays
//! exact arbitrarily close to the phase boundary.
//!
//! In the broken phase the missing pair sits at `k = π/2 ± iκ` with energy
//! `±2iJ sinh κ`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{classify_phase, ChainSpec, Phase};
use crate::states;

/// Default root tolerance for quasimomenta and κ.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Unnormalized Bethe amplitudes below this magnitude are not states.
pub const NULL_STATE_THRESHOLD: f64 = 1e-10;

const MAX_BISECTION: usize = 200;
const MAX_NEWTON: usize = 50;

/// Sign of the imaginary part of a complex quasimomentum `π/2 ± iκ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ModeKind {
    RealK { k: f64 },
    ComplexK { kappa: f64, branch: Branch },
}

/// One eigen-solution: quasimomentum plus energy (units of `J`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub kind: ModeKind,
    pub energy: Complex64,
}

impl Mode {
    pub fn real(k: f64, hopping: f64) -> Self {
        Self {
            kind: ModeKind::RealK { k },
            // -2J cos k, exact zero at k = π/2
            energy: Complex64::new(2.0 * hopping * (k - FRAC_PI_2).sin(), 0.0),
        }
    }

    pub fn complex(kappa: f64, branch: Branch, hopping: f64) -> Self {
        Self {
            kind: ModeKind::ComplexK { kappa, branch },
            energy: Complex64::new(0.0, branch.sign() * 2.0 * hopping * kappa.sinh()),
        }
    }

    /// Quasimomentum as a complex number.
    pub fn momentum(&self) -> Complex64 {
        match self.kind {
            ModeKind::RealK { k } => Complex64::new(k, 0.0),
            ModeKind::ComplexK { kappa, branch } => Complex64::new(FRAC_PI_2, branch.sign() * kappa),
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self.kind, ModeKind::RealK { .. })
    }
}

/// Full Bethe-ansatz spectrum of one chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSolution {
    pub spec: ChainSpec,
    pub modes: Vec<Mode>,
    pub phase: Phase,
}

impl SpectralSolution {
    pub fn energies(&self) -> Vec<Complex64> {
        self.modes.iter().map(|m| m.energy).collect()
    }

    pub fn real_momenta(&self) -> Vec<f64> {
        self.modes
            .iter()
            .filter_map(|m| match m.kind {
                ModeKind::RealK { k } => Some(k),
                ModeKind::ComplexK { .. } => None,
            })
            .collect()
    }

    pub fn kappa(&self) -> Option<f64> {
        self.modes.iter().find_map(|m| match m.kind {
            ModeKind::ComplexK { kappa, .. } => Some(kappa),
            ModeKind::RealK { .. } => None,
        })
    }
}

/// `G(k) = γ² sin(k(N-1)) + J² sin(k(N+1))`.
pub fn quantization_residual(spec: &ChainSpec, k: f64) -> f64 {
    let (g2, j2, n) = coefficients(spec);
    g2 * (k * (n - 1.0)).sin() + j2 * (k * (n + 1.0)).sin()
}

/// `dG/dk`.
pub fn quantization_derivative(spec: &ChainSpec, k: f64) -> f64 {
    let (g2, j2, n) = coefficients(spec);
    g2 * (n - 1.0) * (k * (n - 1.0)).cos() + j2 * (n + 1.0) * (k * (n + 1.0)).cos()
}

fn coefficients(spec: &ChainSpec) -> (f64, f64, f64) {
    let g = spec.gamma();
    let j = spec.hopping();
    (g * g, j * j, spec.n_sites() as f64)
}

/// `θ_k = atan(((γ² - J²)/(γ² + J²)) tan k)`.
pub fn theta(spec: &ChainSpec, k: f64) -> f64 {
    let (g2, j2, _) = coefficients(spec);
    ((g2 - j2) / (g2 + j2) * k.tan()).atan()
}

/// Integer `n_k` in `k = (n_k π + θ_k)/N`, and the distance of
/// `(N k - θ_k)/π` from that integer.
pub fn quantum_number(spec: &ChainSpec, k: f64) -> (i64, f64) {
    let x = (spec.n_sites() as f64 * k - theta(spec, k)) / PI;
    let n = x.round();
    (n as i64, (x - n).abs())
}

/// Reduced bracketing function on `u = k - π/2 ∈ [0, π/2)`.
fn reduced(spec: &ChainSpec, u: f64) -> f64 {
    let k = FRAC_PI_2 + u;
    if spec.is_odd() {
        if u == 0.0 {
            quantization_derivative(spec, FRAC_PI_2)
        } else {
            quantization_residual(spec, k) / u.sin()
        }
    } else {
        quantization_residual(spec, k)
    }
}

/// Upper end of the `u` sampling window. The largest genuine root stays at
/// least `π/(N+1)` below `k = π`, where `G` has a simple, null-state root.
fn u_max(spec: &ChainSpec) -> f64 {
    FRAC_PI_2 - PI / (4.0 * (spec.n_sites() as f64 + 1.0))
}

fn sample_count(spec: &ChainSpec) -> usize {
    (50 * spec.n_sites()).max(64)
}

/// Brackets `[a, b]` in `u` holding one sign change each, plus exact grid hits.
struct Brackets {
    intervals: Vec<(f64, f64)>,
    exact: Vec<f64>,
}

fn bracket_reduced(spec: &ChainSpec) -> Brackets {
    let m = sample_count(spec);
    let umax = u_max(spec);
    let h = umax / m as f64;
    let mut intervals = Vec::new();
    let mut exact = Vec::new();
    // u = 0 is a root of the reduced function only at the boundary itself;
    // it is never reported as a pair (it would be a double root).
    let mut prev_u = 0.0;
    let mut prev = reduced(spec, 0.0);
    for i in 1..=m {
        let u = i as f64 * h;
        let val = reduced(spec, u);
        if val == 0.0 {
            exact.push(u);
            continue;
        }
        if prev != 0.0 && prev.signum() != val.signum() {
            intervals.push((prev_u, u));
        }
        prev_u = u;
        prev = val;
    }
    Brackets { intervals, exact }
}

/// Number of real quasimomenta in `(0, π)`, from sign changes alone.
pub fn real_root_count(spec: &ChainSpec) -> usize {
    let b = bracket_reduced(spec);
    let pairs = b.intervals.len() + b.exact.len();
    2 * pairs + usize::from(spec.is_odd())
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64, f64)> {
    let mut fa = f(a);
    for _ in 0..MAX_BISECTION {
        if b - a <= tol {
            return Ok((a, b, 0.5 * (a + b)));
        }
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok((mid, mid, mid));
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    if b - a <= tol.max(4.0 * f64::EPSILON * b.abs()) {
        Ok((a, b, 0.5 * (a + b)))
    } else {
        Err(Error::NonConvergence { what: "bisection", iterations: MAX_BISECTION })
    }
}

/// Newton polish confined to `[lo, hi]`; falls back to `start`.
fn newton_polish<F, D>(f: F, df: D, start: f64, lo: f64, hi: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut x = start;
    let mut fx = f(x);
    for _ in 0..MAX_NEWTON {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - fx / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        let fn_ = f(next);
        if fn_.abs() > fx.abs() {
            break;
        }
        let step = (next - x).abs();
        x = next;
        fx = fn_;
        if step <= 4.0 * f64::EPSILON * x.abs().max(1.0) || fx == 0.0 {
            break;
        }
    }
    x
}

/// All real quasimomenta in `(0, π)`, ascending.
pub fn solve_real_momenta(spec: &ChainSpec, tol: f64) -> Result<Vec<f64>> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = spec.n_sites();
    let b = bracket_reduced(spec);
    let mut upper = Vec::with_capacity(n / 2 + 1);
    for &(a, c) in &b.intervals {
        let (lo, hi, mid) = bisect(|u| reduced(spec, u), a, c, tol)?;
        let k = newton_polish(
            |k| quantization_residual(spec, k),
            |k| quantization_derivative(spec, k),
            FRAC_PI_2 + mid,
            FRAC_PI_2 + lo - tol,
            FRAC_PI_2 + hi + tol,
        );
        upper.push(k);
    }
    upper.extend(b.exact.iter().map(|u| FRAC_PI_2 + u));

    let mut roots: Vec<f64> = Vec::with_capacity(n);
    for &k in &upper {
        // mirror pair; π - k keeps the pair exactly symmetric
        roots.push(PI - k);
        roots.push(k);
    }
    if spec.is_odd() {
        roots.push(FRAC_PI_2);
    }
    roots.retain(|&k| states::raw_amplitudes(spec, k).max_abs() >= NULL_STATE_THRESHOLD);
    roots.sort_by(f64::total_cmp);

    if roots.len() != n && roots.len() + 2 != n {
        return Err(Error::RootCountMismatch {
            found: roots.len(),
            expected_unbroken: n,
            expected_broken: n - 2,
        });
    }
    Ok(roots)
}

/// `J² R(κ)` where `R` is the hyperbolic ratio of the κ equation, and its
/// κ-derivative. Ratios are formed without evaluating large `sinh`/`cosh`.
fn kappa_ratio(spec: &ChainSpec, kappa: f64) -> (f64, f64) {
    let n = spec.n_sites() as f64;
    let (a, b) = (n + 1.0, n - 1.0);
    if spec.is_odd() {
        // sinh(aκ)/sinh(bκ); κ → 0 gives a/b
        if kappa == 0.0 {
            return (a / b, 0.0);
        }
        let ratio = ((a - b) * kappa).exp() * (-(-2.0 * a * kappa).exp_m1()) / (-(-2.0 * b * kappa).exp_m1());
        let coth = |x: f64| 1.0 / x.tanh();
        (ratio, ratio * (a * coth(a * kappa) - b * coth(b * kappa)))
    } else {
        let ratio = ((a - b) * kappa).exp() * (1.0 + (-2.0 * a * kappa).exp()) / (1.0 + (-2.0 * b * kappa).exp());
        (ratio, ratio * (a * (a * kappa).tanh() - b * (b * kappa).tanh()))
    }
}

/// `γ² - J² R(κ)`: positive at `κ = 0⁺` in the broken phase, decreasing,
/// negative beyond the root.
fn kappa_residual(spec: &ChainSpec, kappa: f64) -> (f64, f64) {
    let (r, dr) = kappa_ratio(spec, kappa);
    let g = spec.gamma();
    let j2 = spec.hopping() * spec.hopping();
    (g * g - j2 * r, -j2 * dr)
}

/// Unique `κ > 0` of the broken-phase quantization condition.
pub fn solve_kappa(spec: &ChainSpec, tol: f64) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let gc = spec.gamma_critical();
    if spec.gamma() <= gc {
        return Err(Error::PhaseError { required: "broken", gamma: spec.gamma(), gamma_c: gc });
    }
    let hi = (spec.gamma() / spec.hopping()).ln() + 1.0;
    if kappa_residual(spec, hi).0 >= 0.0 || kappa_residual(spec, 0.0).0 <= 0.0 {
        return Err(Error::NonConvergence { what: "kappa bracket", iterations: 0 });
    }
    let (lo, up, mid) = bisect(|x| kappa_residual(spec, x).0, 0.0, hi, tol)?;
    Ok(newton_polish(
        |x| kappa_residual(spec, x).0,
        |x| kappa_residual(spec, x).1,
        mid,
        (lo - tol).max(0.0),
        up + tol,
    ))
}

fn sort_modes(modes: &mut [Mode]) {
    modes.sort_by(|a, b| {
        a.energy
            .re
            .total_cmp(&b.energy.re)
            .then(a.energy.im.total_cmp(&b.energy.im))
    });
}

/// Complete spectrum. `tol` serves both as root tolerance and as the
/// half-width of the critical band around `γ_c`.
pub fn solve_spectrum(spec: &ChainSpec, tol: f64) -> Result<SpectralSolution> {
    let n = spec.n_sites();
    let j = spec.hopping();
    let phase = classify_phase(spec, tol);
    let momenta = solve_real_momenta(spec, tol)?;
    let mut modes: Vec<Mode> = momenta.iter().map(|&k| Mode::real(k, j)).collect();
    match phase {
        Phase::Unbroken => {
            if modes.len() != n {
                return Err(Error::RootCountMismatch {
                    found: modes.len(),
                    expected_unbroken: n,
                    expected_broken: n - 2,
                });
            }
        }
        Phase::Broken => {
            if modes.len() != n - 2 {
                return Err(Error::RootCountMismatch {
                    found: modes.len(),
                    expected_unbroken: n,
                    expected_broken: n - 2,
                });
            }
            let kappa = solve_kappa(spec, tol)?;
            modes.push(Mode::complex(kappa, Branch::Minus, j));
            modes.push(Mode::complex(kappa, Branch::Plus, j));
        }
        Phase::Critical => {
            // coalesced levels sit at zero energy
            while modes.len() < n {
                modes.push(Mode::real(FRAC_PI_2, j));
            }
        }
    }
    sort_modes(&mut modes);
    Ok(SpectralSolution { spec: *spec, modes, phase })
}

/// Locates `γ_c` by bisection on [`real_root_count`], to within `tol`.
pub fn locate_gamma_critical(n_sites: usize, hopping: f64, tol: f64) -> Result<f64> {
    let spec = ChainSpec::new(n_sites, hopping, 0.0)?;
    let count = |g: f64| -> Result<usize> { Ok(real_root_count(&spec.with_gamma(g)?)) };
    let mut lo = 0.0;
    let mut hi = 2.0 * hopping;
    let mut tries = 0;
    while count(hi)? >= n_sites {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::NonConvergence { what: "phase-boundary bracket", iterations: tries });
        }
    }
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if count(mid)? >= n_sites {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > MAX_BISECTION {
            return Err(Error::NonConvergence { what: "phase-boundary bisection", iterations });
        }
    }
    Ok(0.5 * (lo + hi))
}

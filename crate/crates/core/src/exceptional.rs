//! Behavior near the exceptional point `γ_c`: asymptotic forms of the two
//! levels that coalesce there, the square-root repulsion law, and
//! diagnostics of the coalescing eigenvectors along a sweep in `γ`.
//!
//! With `α = (J² + γ²)/(γ² - J²)` the levels are `±2J sin δ` below `γ_c` and
//! `±2iJ sinh κ` above, where
//!
//! ```text
//!          even N              odd N
//! δ   1/sqrt(-N α)    sqrt(3(α - N)/(N³ - α))
//! κ   1/sqrt( N α)    sqrt(3(N - α)/(N³ - α))
//! ```
//!
//! These are leading-order expansions in `N |γ - γ_c|`; away from that
//! regime (large `N`) they lose accuracy even inside [`WINDOW`].

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bethe::{solve_spectrum, Mode, ModeKind};
use crate::error::{Error, Result};
use crate::model::{ChainSpec, Phase, StateVector};
use crate::states::{pt_norm, wavefunction};

/// Relative distance `|γ - γ_c|/γ_c` inside which the asymptotics are
/// considered applicable.
pub const WINDOW: f64 = 0.1;

/// `α = (J² + γ²)/(γ² - J²)`; infinite at `γ = J`.
pub fn alpha(spec: &ChainSpec) -> f64 {
    let g2 = spec.gamma() * spec.gamma();
    let j2 = spec.hopping() * spec.hopping();
    (j2 + g2) / (g2 - j2)
}

fn radicand(spec: &ChainSpec, broken: bool) -> f64 {
    let n = spec.n_sites() as f64;
    let a = alpha(spec);
    match (spec.is_odd(), broken) {
        (false, false) => -1.0 / (n * a),
        (false, true) => 1.0 / (n * a),
        (true, false) => 3.0 * (a - n) / (n * n * n - a),
        (true, true) => 3.0 * (n - a) / (n * n * n - a),
    }
}

fn checked_root(spec: &ChainSpec, broken: bool) -> Result<f64> {
    if spec.gamma() == spec.hopping() && !spec.is_odd() {
        // α is infinite at γ = J = γ_c
        return Ok(0.0);
    }
    let gc = spec.gamma_critical();
    let mut r = radicand(spec, broken);
    if (spec.gamma() - gc).abs() <= 1e-12 * gc && r.abs() < 1e-12 {
        // rounding at the boundary itself
        r = 0.0;
    }
    if r.is_nan() || r < 0.0 {
        return Err(Error::DomainError(format!(
            "radicand {r:e} at N = {}, gamma = {} (gamma_c = {})",
            spec.n_sites(),
            spec.gamma(),
            spec.gamma_critical()
        )));
    }
    Ok(r.sqrt())
}

/// Asymptotic `δ` on the unbroken side.
pub fn delta_approx(spec: &ChainSpec) -> Result<f64> {
    if spec.gamma() > spec.gamma_critical() {
        return Err(phase_error("unbroken", spec));
    }
    checked_root(spec, false)
}

/// Asymptotic `κ` on the broken side.
pub fn kappa_approx(spec: &ChainSpec) -> Result<f64> {
    if spec.gamma() < spec.gamma_critical() {
        return Err(phase_error("broken", spec));
    }
    checked_root(spec, true)
}

fn phase_error(required: &'static str, spec: &ChainSpec) -> Error {
    Error::PhaseError { required, gamma: spec.gamma(), gamma_c: spec.gamma_critical() }
}

/// Predicted critical pair: `±2J sin δ` or `±2iJ sinh κ`, negative first.
pub fn analytic_pair(spec: &ChainSpec) -> Result<[Complex64; 2]> {
    let j = spec.hopping();
    if spec.gamma() <= spec.gamma_critical() {
        let e = 2.0 * j * delta_approx(spec)?.sin();
        Ok([Complex64::new(-e, 0.0), Complex64::new(e, 0.0)])
    } else {
        let e = 2.0 * j * kappa_approx(spec)?.sinh();
        Ok([Complex64::new(0.0, -e), Complex64::new(0.0, e)])
    }
}

/// Magnitudes `∓2J sqrt(|γ - γ_c|/(N γ_c))`, times `sqrt 3` for odd `N`. On
/// the broken side they are the imaginary parts.
pub fn repulsion_law(spec: &ChainSpec) -> [f64; 2] {
    let gc = spec.gamma_critical();
    let x = (spec.gamma() - gc).abs() / (spec.n_sites() as f64 * gc);
    let factor = if spec.is_odd() { 3.0 } else { 1.0 };
    let e = 2.0 * spec.hopping() * (factor * x).sqrt();
    [-e, e]
}

/// The two modes that coalesce at `γ_c`: the complex pair when broken,
/// otherwise the two real levels nearest zero (the odd-`N` zero mode at
/// `k = π/2` never takes part). Ordered by energy.
pub fn critical_modes(spec: &ChainSpec, tol: f64) -> Result<[Mode; 2]> {
    let solution = solve_spectrum(spec, tol)?;
    let mut picked: Vec<Mode> = match solution.phase {
        Phase::Broken => solution.modes.iter().filter(|m| !m.is_real()).copied().collect(),
        Phase::Unbroken => {
            let mut real: Vec<Mode> = solution
                .modes
                .iter()
                .filter(|m| match m.kind {
                    ModeKind::RealK { k } => k != std::f64::consts::FRAC_PI_2,
                    ModeKind::ComplexK { .. } => false,
                })
                .copied()
                .collect();
            real.sort_by(|a, b| a.energy.norm().total_cmp(&b.energy.norm()));
            real.truncate(2);
            real
        }
        Phase::Critical => {
            return Err(Error::InvalidArgument(format!(
                "gamma = {} lies in the critical band",
                spec.gamma()
            )))
        }
    };
    if picked.len() != 2 {
        return Err(Error::InvalidArgument("chain has no critical pair".into()));
    }
    picked.sort_by(|a, b| a.energy.re.total_cmp(&b.energy.re).then(a.energy.im.total_cmp(&b.energy.im)));
    Ok([picked[0], picked[1]])
}

/// `1 - |⟨u|v⟩| / (‖u‖ ‖v‖)`.
pub fn coalescence_gap(u: &StateVector, v: &StateVector) -> f64 {
    let overlap = u.inner(v).norm() / (u.norm() * v.norm());
    (1.0 - overlap).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalReport {
    pub gamma: f64,
    /// `γ - γ_c`.
    pub gamma_offset: f64,
    pub phase: Phase,
    pub two_levels: [Complex64; 2],
    /// `None` when the asymptotic formula is outside its domain.
    pub analytic_pair: Option<[Complex64; 2]>,
    /// `δ` (unbroken) or `κ` (broken) from the asymptotic formula.
    pub delta_or_kappa: Option<f64>,
    pub alpha: f64,
    pub coalescence_gap: f64,
    /// PT pairing of each unit-normalized critical eigenvector.
    pub pt_norms: [Complex64; 2],
    /// Whether `|γ - γ_c| ≤ WINDOW · γ_c`.
    pub in_window: bool,
}

pub fn critical_report(spec: &ChainSpec, tol: f64) -> Result<CriticalReport> {
    let modes = critical_modes(spec, tol)?;
    let u = wavefunction(spec, &modes[0])?.normalized();
    let v = wavefunction(spec, &modes[1])?.normalized();
    let gc = spec.gamma_critical();
    let broken = spec.gamma() > gc;
    let dk = if broken { kappa_approx(spec) } else { delta_approx(spec) };
    Ok(CriticalReport {
        gamma: spec.gamma(),
        gamma_offset: spec.gamma() - gc,
        phase: if broken { Phase::Broken } else { Phase::Unbroken },
        two_levels: [modes[0].energy, modes[1].energy],
        analytic_pair: analytic_pair(spec).ok(),
        delta_or_kappa: dk.ok(),
        alpha: alpha(spec),
        coalescence_gap: coalescence_gap(&u, &v),
        pt_norms: [pt_norm(&u), pt_norm(&v)],
        in_window: (spec.gamma() - gc).abs() <= WINDOW * gc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SweepEntry {
    Report(CriticalReport),
    /// `γ` within the critical band; not evaluated.
    CriticalBand { gamma: f64 },
}

/// Reports for every `γ`, in input order. Points evaluate in parallel.
pub fn critical_sweep(spec: &ChainSpec, gamma_values: &[f64], tol: f64) -> Result<Vec<SweepEntry>> {
    gamma_values
        .par_iter()
        .map(|&g| {
            let s = spec.with_gamma(g)?;
            if (g - s.gamma_critical()).abs() <= tol {
                Ok(SweepEntry::CriticalBand { gamma: g })
            } else {
                critical_report(&s, tol).map(SweepEntry::Report)
            }
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `count` log-spaced values from `lo` to `hi`.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Which side of `γ_c` a scan runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Unbroken,
    Broken,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Unbroken => -1.0,
            Side::Broken => 1.0,
        }
    }
}

/// Log-log slope of the critical-level magnitude against `|γ - γ_c|` for
/// offsets `fractions · γ_c` on one side.
pub fn repulsion_slope(n_sites: usize, hopping: f64, side: Side, fractions: &[f64], tol: f64) -> Result<f64> {
    let gc = ChainSpec::new(n_sites, hopping, 0.0)?.gamma_critical();
    let levels: Vec<f64> = fractions
        .par_iter()
        .map(|&f| {
            let spec = ChainSpec::new(n_sites, hopping, gc * (1.0 + side.sign() * f))?;
            Ok(critical_modes(&spec, tol)?[1].energy.norm())
        })
        .collect::<Result<_>>()?;
    let offsets: Vec<f64> = fractions.iter().map(|f| f * gc).collect();
    Ok(loglog_slope(&offsets, &levels))
}

//! The chain itself: parameters, the tridiagonal Hamiltonian, and the
//! parity/time-reversal actions on single-particle amplitudes.
//!
//! Sites are numbered `1..=N` in every public accessor. The Hamiltonian is
//!
//! ```text
//! H = -J Σ_{l=1}^{N-1} (|l⟩⟨l+1| + |l+1⟩⟨l|) + iγ |1⟩⟨1| - iγ |N⟩⟨N|
//! ```

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default half-width of the critical band around `γ_c`, in units of `J`.
pub const DEFAULT_PHASE_TOL: f64 = 1e-9;

/// The triple `(N, J, γ)` that fixes the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainSpec {
    n_sites: usize,
    hopping: f64,
    gamma: f64,
}

impl ChainSpec {
    pub fn new(n_sites: usize, hopping: f64, gamma: f64) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidSpec(format!("need at least 2 sites, got {n_sites}")));
        }
        if !(hopping.is_finite() && hopping > 0.0) {
            return Err(Error::InvalidSpec(format!("hopping must be positive, got {hopping}")));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidSpec(format!("gamma must be non-negative, got {gamma}")));
        }
        Ok(Self { n_sites, hopping, gamma })
    }

    /// Chain with the energy unit `J = 1`.
    pub fn unit(n_sites: usize, gamma: f64) -> Result<Self> {
        Self::new(n_sites, 1.0, gamma)
    }

    /// Same chain, different potential strength.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.n_sites, self.hopping, gamma)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn hopping(&self) -> f64 {
        self.hopping
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_odd(&self) -> bool {
        self.n_sites % 2 == 1
    }

    /// Chain center `N₀ = (N + 1) / 2`.
    pub fn center(&self) -> f64 {
        (self.n_sites as f64 + 1.0) / 2.0
    }

    pub fn gamma_critical(&self) -> f64 {
        gamma_critical(self.n_sites, self.hopping)
    }

    pub fn phase(&self, tol: f64) -> Phase {
        classify_phase(self, tol)
    }
}

impl fmt::Display for ChainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={} J={} gamma={}", self.n_sites, self.hopping, self.gamma)
    }
}

/// Length-N vector of complex site amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<Complex64>);

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self(amplitudes)
    }

    pub fn from_real(amplitudes: &[f64]) -> Self {
        Self(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Amplitude at site `l`, counted from 1.
    pub fn site(&self, l: usize) -> Complex64 {
        assert!(l >= 1 && l <= self.0.len(), "site {l} outside 1..={}", self.0.len());
        self.0[l - 1]
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self(self.0.iter().map(|&z| z * factor).collect())
    }

    /// Unit Euclidean norm copy. A zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scale(Complex64::new(1.0 / n, 0.0))
    }

    /// Euclidean inner product `⟨self|other⟩ = Σ conj(self_l) other_l`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    /// Bilinear pairing `Σ self_l other_l`, no conjugation.
    pub fn bilinear(&self, other: &Self) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn conj(&self) -> Self {
        Self(self.0.iter().map(|z| z.conj()).collect())
    }

    pub fn to_column(&self) -> nalgebra::DVector<Complex64> {
        nalgebra::DVector::from_column_slice(&self.0)
    }

    pub fn from_column(v: &nalgebra::DVector<Complex64>) -> Self {
        Self(v.iter().copied().collect())
    }

    /// `max_l |self_l - other_l|`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Phase {
    Unbroken,
    Broken,
    Critical,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Unbroken => "unbroken",
            Phase::Broken => "broken",
            Phase::Critical => "critical",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dense N×N Hamiltonian matrix.
pub fn build_hamiltonian(spec: &ChainSpec) -> DMatrix<Complex64> {
    let n = spec.n_sites();
    let j = Complex64::new(-spec.hopping(), 0.0);
    let mut m = DMatrix::zeros(n, n);
    for l in 0..n - 1 {
        m[(l, l + 1)] = j;
        m[(l + 1, l)] = j;
    }
    m[(0, 0)] += Complex64::new(0.0, spec.gamma());
    m[(n - 1, n - 1)] += Complex64::new(0.0, -spec.gamma());
    m
}

/// `(PT v)_l = conj(v_{N+1-l})`.
pub fn apply_pt(v: &StateVector) -> StateVector {
    StateVector(v.0.iter().rev().map(|z| z.conj()).collect())
}

/// Parity alone: `(P v)_l = v_{N+1-l}`.
pub fn apply_p(v: &StateVector) -> StateVector {
    StateVector(v.0.iter().rev().copied().collect())
}

/// Analytic phase boundary: `J sqrt((n+1)/n)` for `N = 2n+1`, `J` for even `N`.
pub fn gamma_critical(n_sites: usize, hopping: f64) -> f64 {
    if n_sites % 2 == 1 {
        let n = ((n_sites - 1) / 2) as f64;
        hopping * ((n + 1.0) / n).sqrt()
    } else {
        hopping
    }
}

/// Phase from the analytic boundary; `tol` is absolute, in energy units.
pub fn classify_phase(spec: &ChainSpec, tol: f64) -> Phase {
    let gc = spec.gamma_critical();
    if spec.gamma() < gc - tol {
        Phase::Unbroken
    } else if spec.gamma() > gc + tol {
        Phase::Broken
    } else {
        Phase::Critical
    }
}

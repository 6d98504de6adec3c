//! Bethe eigenfunctions of `H` and `H†`, the `C` operator, and the inner
//! products built from them.
//!
//! Normalization convention for real-`k` states: every `f_k` is an exact
//! PT eigenstate (`PT f = f`) scaled so that `|Σ_l f_l²| = 1`. The sign
//! `s_k = Σ_l f_l² = ±1` is the PT norm of the state; with it
//! `C = Σ_k f_k f_kᵀ` squares to one and the CPT product of `f_k` with
//! itself is `+1`. The remaining `±1` freedom is fixed by making the first
//! significant amplitude have a non-negative real part. Dual states are
//! `g_k = s_k conj(f_k)` up to rounding, which gives `⟨g_k|f_k⟩ = 1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bethe::{Branch, Mode, ModeKind, SpectralSolution};
use crate::error::{Error, Result};
use crate::model::{apply_pt, build_hamiltonian, ChainSpec, Phase, StateVector};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `η(k) = (γ e^{ik} - iJ)/(γ e^{-ik} - iJ)`.
pub fn eta_coefficient(spec: &ChainSpec, k: f64) -> Complex64 {
    let g = spec.gamma();
    let j = spec.hopping();
    (g * Complex64::cis(k) - I * j) / (g * Complex64::cis(-k) - I * j)
}

/// `ζ(k) = (γ e^{ik} + iJ)/(γ e^{-ik} + iJ)`; singular at `k = π/2, γ = J`.
pub fn zeta_coefficient(spec: &ChainSpec, k: f64) -> Complex64 {
    let g = spec.gamma();
    let j = spec.hopping();
    (g * Complex64::cis(k) + I * j) / (g * Complex64::cis(-k) + I * j)
}

fn standing_combination(spec: &ChainSpec, k: f64, a: Complex64, b: Complex64) -> StateVector {
    let n0 = spec.center();
    StateVector::new(
        (1..=spec.n_sites())
            .map(|l| {
                let l = l as f64;
                a * Complex64::cis(k * (l - n0)) - b * Complex64::cis(-k * (l + n0))
            })
            .collect(),
    )
}

/// Unnormalized `e^{ik(l-N₀)} - η(k) e^{-ik(l+N₀)}`.
pub fn raw_amplitudes(spec: &ChainSpec, k: f64) -> StateVector {
    standing_combination(spec, k, Complex64::new(1.0, 0.0), eta_coefficient(spec, k))
}

/// Dual amplitudes with the `ζ(k)` denominator cleared, so the
/// expression stays finite where `ζ` is singular.
pub fn raw_dual_amplitudes(spec: &ChainSpec, k: f64) -> StateVector {
    let g = spec.gamma();
    let j = spec.hopping();
    let den = g * Complex64::cis(-k) + I * j;
    let num = g * Complex64::cis(k) + I * j;
    standing_combination(spec, k, den, num)
}

/// The closed-form normalization denominator
/// `| sqrt( (1 + |c|²) sin(Nk)/sin k - 2N c e^{-ik(N+1)} ) |`, with
/// `c = η(k)` (or `ζ(k)` for the dual). It equals `sqrt|Σ_l v_l²|` of the
/// raw amplitudes; the normalization actually applied is computed
/// directly from the amplitudes.
pub fn closed_form_norm(spec: &ChainSpec, k: f64, dual: bool) -> f64 {
    let c = if dual { zeta_coefficient(spec, k) } else { eta_coefficient(spec, k) };
    let n = spec.n_sites() as f64;
    let term = (1.0 + c.norm_sqr()) * (n * k).sin() / k.sin();
    (Complex64::new(term, 0.0) - 2.0 * n * c * Complex64::cis(-k * (n + 1.0))).sqrt().norm()
}

/// Multiplies by `e^{iθ/2}` so that `PT v = v` holds, given `PT v = e^{iθ} v`.
fn make_pt_symmetric(v: &StateVector) -> StateVector {
    let overlap = v.inner(&apply_pt(v));
    if overlap.norm() == 0.0 {
        return v.clone();
    }
    v.scale(Complex64::cis(0.5 * overlap.arg()))
}

/// Index of the first amplitude above `1e-12` of the largest one.
fn first_significant(v: &StateVector) -> usize {
    let cut = 1e-12 * v.max_abs();
    v.amplitudes().iter().position(|z| z.norm() > cut).unwrap_or(0)
}

/// `±1` so that the first significant amplitude has `Re ≥ 0` (ties: `Im ≥ 0`).
pub(crate) fn sign_gauge(v: &StateVector) -> f64 {
    let z = v.amplitudes()[first_significant(v)];
    let tie = 1e-12 * z.norm();
    if z.re > tie || (z.re.abs() <= tie && z.im >= 0.0) {
        1.0
    } else {
        -1.0
    }
}

/// PT eigenstate with `|Σ v_l²| = 1` and the sign gauge applied.
fn cpt_normalize(v: &StateVector) -> Result<StateVector> {
    let sym = make_pt_symmetric(&v.normalized());
    let pairing = sym.bilinear(&sym);
    if pairing.norm() < 1e-300 {
        return Err(Error::SelfOrthogonal);
    }
    let scaled = sym.scale(Complex64::new(1.0 / pairing.norm().sqrt(), 0.0));
    Ok(scaled.scale(Complex64::new(sign_gauge(&scaled), 0.0)))
}

fn check_not_null(spec: &ChainSpec, k: f64) -> Result<StateVector> {
    let raw = raw_amplitudes(spec, k);
    if raw.max_abs() < crate::bethe::NULL_STATE_THRESHOLD {
        return Err(Error::NullState { k });
    }
    Ok(raw)
}

/// Eigenfunction of `H` for a real Bethe root `k`.
pub fn wavefunction_unbroken(spec: &ChainSpec, k: f64) -> Result<StateVector> {
    cpt_normalize(&check_not_null(spec, k)?)
}

/// Eigenfunction of `H†` for a real root `k`, phased so that
/// `Σ_l conj(g_l) f_l = 1` with `f = wavefunction_unbroken(spec, k)`.
pub fn wavefunction_dual(spec: &ChainSpec, k: f64) -> Result<StateVector> {
    let f = wavefunction_unbroken(spec, k)?;
    let raw = raw_dual_amplitudes(spec, k);
    if raw.max_abs() < crate::bethe::NULL_STATE_THRESHOLD {
        return Err(Error::NullState { k });
    }
    let g = cpt_normalize(&raw)?;
    let overlap = g.inner(&f);
    Ok(if overlap.re < 0.0 { g.scale(Complex64::new(-1.0, 0.0)) } else { g })
}

/// Broken-phase eigenfunction at `k = π/2 ± iκ`, unit Euclidean norm.
pub fn wavefunction_broken(spec: &ChainSpec, kappa: f64, branch: Branch) -> Result<StateVector> {
    let gc = spec.gamma_critical();
    if spec.gamma() <= gc {
        return Err(Error::PhaseError { required: "broken", gamma: spec.gamma(), gamma_c: gc });
    }
    let s = branch.sign();
    let g = spec.gamma();
    let j = spec.hopping();
    let ratio = (j - g * (-s * kappa).exp()) / (j + g * (s * kappa).exp());
    let n0 = spec.center();
    let amps = (1..=spec.n_sites())
        .map(|l| {
            let lf = l as f64;
            let ip = I.powu(l as u32);
            let im = (-I).powu(l as u32);
            // e^{±κN₀} folded into the exponents
            ip * (s * kappa * (n0 - lf)).exp() - im * ratio * (s * kappa * (n0 + lf)).exp()
        })
        .collect();
    let v = StateVector::new(amps).normalized();
    Ok(v.scale(Complex64::new(sign_gauge(&v), 0.0)))
}

/// Eigenfunction for any mode of a solution.
pub fn wavefunction(spec: &ChainSpec, mode: &Mode) -> Result<StateVector> {
    match mode.kind {
        ModeKind::RealK { k } => wavefunction_unbroken(spec, k),
        ModeKind::ComplexK { kappa, branch } => wavefunction_broken(spec, kappa, branch),
    }
}

/// Eigenfunctions of `H` and, for real modes, of `H†`.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub spec: ChainSpec,
    pub phase: Phase,
    pub f_states: Vec<(Mode, StateVector)>,
    /// Dual states for the real-`k` modes only.
    pub g_states: Vec<(Mode, StateVector)>,
}

impl EigenBasis {
    pub fn build(solution: &SpectralSolution) -> Result<Self> {
        let spec = &solution.spec;
        let mut f_states = Vec::with_capacity(solution.modes.len());
        let mut g_states = Vec::with_capacity(solution.modes.len());
        for mode in &solution.modes {
            f_states.push((*mode, wavefunction(spec, mode)?));
            if let ModeKind::RealK { k } = mode.kind {
                g_states.push((*mode, wavefunction_dual(spec, k)?));
            }
        }
        Ok(Self { spec: *spec, phase: solution.phase, f_states, g_states })
    }

    pub fn require_unbroken(&self) -> Result<()> {
        if self.phase != Phase::Unbroken {
            return Err(Error::PhaseError {
                required: "unbroken",
                gamma: self.spec.gamma(),
                gamma_c: self.spec.gamma_critical(),
            });
        }
        Ok(())
    }

    /// PT norms `s_k = Σ_l f_l²` of the real-`k` states.
    pub fn pt_signs(&self) -> Vec<f64> {
        self.f_states
            .iter()
            .filter(|(m, _)| m.is_real())
            .map(|(_, f)| f.bilinear(f).re.signum())
            .collect()
    }
}

/// Matrix representation `C(m, l) = Σ_k f_k[m] f_k[l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct COperator {
    pub matrix: DMatrix<Complex64>,
}

impl COperator {
    pub fn apply(&self, v: &StateVector) -> StateVector {
        apply_matrix(&self.matrix, v)
    }
}

pub fn build_c_operator(basis: &EigenBasis) -> Result<COperator> {
    basis.require_unbroken()?;
    let n = basis.spec.n_sites();
    let mut m = DMatrix::zeros(n, n);
    for (_, f) in &basis.f_states {
        let col = f.to_column();
        m += &col * col.transpose();
    }
    Ok(COperator { matrix: m })
}

/// `Σ_l (C · PT u)[l] · v[l]`.
pub fn cpt_inner(c: &COperator, u: &StateVector, v: &StateVector) -> Complex64 {
    c.apply(&apply_pt(u)).bilinear(v)
}

/// `Σ_l conj(u[N+1-l]) · u[l]`.
pub fn pt_norm(u: &StateVector) -> Complex64 {
    apply_pt(u).bilinear(u)
}

pub fn apply_matrix(m: &DMatrix<Complex64>, v: &StateVector) -> StateVector {
    StateVector::from_column(&(m * DVector::from_column_slice(v.amplitudes())))
}

/// `‖M v - ε v‖∞`.
pub fn residual(m: &DMatrix<Complex64>, v: &StateVector, energy: Complex64) -> f64 {
    let mv = apply_matrix(m, v);
    mv.amplitudes()
        .iter()
        .zip(v.amplitudes())
        .map(|(a, b)| (a - energy * b).norm())
        .fold(0.0, f64::max)
}

/// Residual of every `f` against `H` and every `g` against `H†`.
pub fn max_basis_residual(basis: &EigenBasis) -> f64 {
    let h = build_hamiltonian(&basis.spec);
    let hd = h.adjoint();
    let rf = basis.f_states.iter().map(|(m, f)| residual(&h, f, m.energy));
    let rg = basis.g_states.iter().map(|(m, g)| residual(&hd, g, m.energy));
    rf.chain(rg).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe::{solve_kappa, solve_real_momenta, solve_spectrum, DEFAULT_TOL};
    use crate::model::gamma_critical;

    fn basis(n: usize, g: f64) -> EigenBasis {
        EigenBasis::build(&solve_spectrum(&ChainSpec::unit(n, g).unwrap(), DEFAULT_TOL).unwrap()).unwrap()
    }

    #[test]
    fn hermitian_limit_is_sine_wave() {
        let spec = ChainSpec::unit(6, 0.0).unwrap();
        for (idx, k) in solve_real_momenta(&spec, DEFAULT_TOL).unwrap().into_iter().enumerate() {
            let f = wavefunction_unbroken(&spec, k).unwrap();
            let norm = (2.0 / 7.0f64).sqrt();
            // up to a global phase
            let phase = f.site(1) / (norm * k.sin());
            assert!((phase.norm() - 1.0).abs() < 1e-12, "mode {idx}");
            for l in 1..=6 {
                let expected = phase * norm * (k * l as f64).sin();
                assert!((f.site(l) - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn states_are_pt_symmetric() {
        for (n, g) in [(2, 0.6), (5, 0.7), (8, 0.99), (11, 0.4)] {
            let spec = ChainSpec::unit(n, g).unwrap();
            for k in solve_real_momenta(&spec, DEFAULT_TOL).unwrap() {
                let f = wavefunction_unbroken(&spec, k).unwrap();
                assert!(apply_pt(&f).max_diff(&f) < 1e-10);
                let gk = wavefunction_dual(&spec, k).unwrap();
                assert!(apply_pt(&gk).max_diff(&gk) < 1e-10);
            }
        }
    }

    #[test]
    fn two_site_lower_eigenpair() {
        let spec = ChainSpec::unit(2, 0.6).unwrap();
        let k = solve_real_momenta(&spec, DEFAULT_TOL).unwrap()[0];
        let f = wavefunction_unbroken(&spec, k).unwrap();
        let h = build_hamiltonian(&spec);
        assert!(residual(&h, &f, Complex64::new(-0.8, 0.0)) < 1e-10);
    }

    #[test]
    fn dual_equals_state_without_potential() {
        let spec = ChainSpec::unit(5, 0.0).unwrap();
        for k in solve_real_momenta(&spec, DEFAULT_TOL).unwrap() {
            let f = wavefunction_unbroken(&spec, k).unwrap();
            let g = wavefunction_dual(&spec, k).unwrap();
            assert!(f.max_diff(&g) < 1e-12);
        }
    }

    #[test]
    fn dual_survives_singular_zeta() {
        // ζ(π/2) diverges at γ = J; the cleared form does not
        let spec = ChainSpec::unit(3, 1.0).unwrap();
        let g = wavefunction_dual(&spec, std::f64::consts::FRAC_PI_2).unwrap();
        let hd = build_hamiltonian(&spec).adjoint();
        assert!(residual(&hd, &g, Complex64::new(0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn closed_form_denominator_matches_pairing_norm() {
        for (n, g) in [(4, 0.5), (7, 0.5), (8, 0.99), (12, 0.2)] {
            let spec = ChainSpec::unit(n, g).unwrap();
            for k in solve_real_momenta(&spec, DEFAULT_TOL).unwrap() {
                let raw = raw_amplitudes(&spec, k);
                let direct = raw.bilinear(&raw).norm().sqrt();
                let closed = closed_form_norm(&spec, k, false);
                assert!((direct - closed).abs() < 1e-9 * direct, "n={n} g={g} k={k}");
            }
        }
    }

    #[test]
    fn biorthonormal_and_cpt_orthonormal() {
        for (n, g) in [(2, 0.6), (3, 1.0), (7, 0.5), (8, 0.5), (10, 0.95)] {
            let b = basis(n, g);
            let c = build_c_operator(&b).unwrap();
            for (i, (_, fi)) in b.f_states.iter().enumerate() {
                for (j, (_, fj)) in b.f_states.iter().enumerate() {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    let (_, gi) = &b.g_states[i];
                    assert!((gi.inner(fj) - delta).norm() < 1e-8);
                    assert!((cpt_inner(&c, fi, fj) - delta).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn c_operator_identities() {
        for n in 2..=12 {
            for frac in [0.3, 0.6, 0.9] {
                let g = frac * gamma_critical(n, 1.0);
                let b = basis(n, g);
                let spec = b.spec;
                let c = build_c_operator(&b).unwrap().matrix;
                let h = build_hamiltonian(&spec);
                let id = DMatrix::<Complex64>::identity(n, n);
                assert!((&c * &c - &id).camax() < 1e-8);
                assert!((&c * &h - &h * &c).camax() < 1e-8);
                // [C, PT] = 0  ⇔  conj(P C P) = C
                let pcp = DMatrix::from_fn(n, n, |r, s| c[(n - 1 - r, n - 1 - s)].conj());
                assert!((pcp - &c).camax() < 1e-8);
            }
        }
    }

    #[test]
    fn c_operator_rejected_in_broken_phase() {
        let b = basis(8, 1.2);
        assert!(matches!(build_c_operator(&b), Err(Error::PhaseError { .. })));
    }

    #[test]
    fn broken_branches() {
        let spec = ChainSpec::unit(8, 1.2).unwrap();
        let kappa = solve_kappa(&spec, DEFAULT_TOL).unwrap();
        let plus = wavefunction_broken(&spec, kappa, Branch::Plus).unwrap();
        let minus = wavefunction_broken(&spec, kappa, Branch::Minus).unwrap();
        let h = build_hamiltonian(&spec);
        let e = 2.0 * kappa.sinh();
        assert!(residual(&h, &plus, Complex64::new(0.0, e)) < 1e-8);
        assert!(residual(&h, &minus, Complex64::new(0.0, -e)) < 1e-8);
        assert!(pt_norm(&plus).norm() < 1e-10);
        assert!(pt_norm(&minus).norm() < 1e-10);
        // PT maps one branch onto the other
        let mapped = apply_pt(&plus);
        assert!((mapped.inner(&minus).norm() - 1.0).abs() < 1e-10);
        assert!((plus.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn broken_wavefunction_needs_broken_phase() {
        let spec = ChainSpec::unit(8, 0.5).unwrap();
        assert!(matches!(wavefunction_broken(&spec, 0.1, Branch::Plus), Err(Error::PhaseError { .. })));
    }

    #[test]
    fn pt_norm_of_standing_wave_is_euclidean_norm() {
        let spec = ChainSpec::unit(5, 0.0).unwrap();
        let k = solve_real_momenta(&spec, DEFAULT_TOL).unwrap()[1];
        let f = wavefunction_unbroken(&spec, k).unwrap();
        assert!((pt_norm(&f).norm() - f.norm().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn sign_gauge_fixes_first_component() {
        let b = basis(9, 0.7);
        for (_, f) in &b.f_states {
            let z = f.site(1);
            assert!(z.re > 0.0 || (z.re.abs() < 1e-12 && z.im >= 0.0));
        }
    }

    #[test]
    fn residuals_small_up_to_twelve_sites() {
        for n in 2..=12 {
            let gc = gamma_critical(n, 1.0);
            for frac in [0.1, 0.5, 0.9, 1.3, 1.6] {
                let b = basis(n, frac * gc);
                assert!(max_basis_residual(&b) < 1e-8, "n={n} frac={frac}");
            }
        }
    }
}

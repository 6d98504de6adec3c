use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use ptchain::bethe::{solve_spectrum, DEFAULT_TOL};
use ptchain::metric::{equivalent_for, jacobi_eigensystem};
use ptchain::model::{apply_pt, build_hamiltonian, gamma_critical};
use ptchain::oracle::{match_spectra, oracle_eigenvector, oracle_spectrum};
use ptchain::states::{residual, EigenBasis};
use ptchain::{ChainSpec, Phase, StateVector};

fn complex_vec(n: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
        .prop_map(|v| StateVector::new(v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()))
}

/// Chain away from the critical band, as (N, J, γ/γ_c).
fn chain() -> impl Strategy<Value = (usize, f64, f64)> {
    (2usize..=12, 0.3..3.0f64, prop_oneof![0.0..0.95f64, 1.05..2.0f64])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pt_is_an_involution(v in (2usize..30).prop_flat_map(complex_vec)) {
        prop_assert!(apply_pt(&apply_pt(&v)).max_diff(&v) < 1e-15);
    }

    #[test]
    fn adjoint_is_the_mirrored_hamiltonian((n, j, frac) in chain()) {
        // H is complex symmetric, so H† = conj(H), and PT symmetry makes that PHP
        let h = build_hamiltonian(&ChainSpec::new(n, j, frac * gamma_critical(n, j)).unwrap());
        let mirrored = DMatrix::from_fn(n, n, |r, c| h[(n - 1 - r, n - 1 - c)]);
        prop_assert!((h.adjoint() - mirrored).camax() < 1e-15);
    }

    #[test]
    fn bethe_matches_oracle((n, j, frac) in chain()) {
        let spec = ChainSpec::new(n, j, frac * gamma_critical(n, j)).unwrap();
        let bethe = solve_spectrum(&spec, DEFAULT_TOL).unwrap().energies();
        let oracle = oracle_spectrum(&spec, 1e-14).unwrap();
        prop_assert!(match_spectra(&bethe, &oracle) < 1e-8 * j);
    }

    #[test]
    fn spectrum_is_closed_under_conjugation((n, j, frac) in chain()) {
        let spec = ChainSpec::new(n, j, frac * gamma_critical(n, j)).unwrap();
        let e = solve_spectrum(&spec, DEFAULT_TOL).unwrap().energies();
        let conj: Vec<_> = e.iter().map(|z| z.conj()).collect();
        prop_assert!(match_spectra(&e, &conj) < 1e-10 * j);
    }

    #[test]
    fn eigenvectors_satisfy_the_hamiltonian((n, j, frac) in chain()) {
        let spec = ChainSpec::new(n, j, frac * gamma_critical(n, j)).unwrap();
        let basis = EigenBasis::build(&solve_spectrum(&spec, DEFAULT_TOL).unwrap()).unwrap();
        let h = build_hamiltonian(&spec);
        for (mode, f) in &basis.f_states {
            prop_assert!(residual(&h, f, mode.energy) < 1e-9 * j);
        }
    }
}

#[test]
fn bethe_states_align_with_inverse_iteration() {
    for n in 2..=12 {
        let spec = ChainSpec::unit(n, 0.6 * gamma_critical(n, 1.0)).unwrap();
        let basis = EigenBasis::build(&solve_spectrum(&spec, DEFAULT_TOL).unwrap()).unwrap();
        for (mode, f) in &basis.f_states {
            let v = oracle_eigenvector(&spec, mode.energy, 1e-12).unwrap();
            let overlap = f.normalized().inner(&v.normalized()).norm();
            assert!(1.0 - overlap < 1e-6, "N = {n}, E = {}: overlap {overlap}", mode.energy);
        }
    }
}

#[test]
fn jacobi_diagonalizes_the_hermitian_chain() {
    for n in 2..=16 {
        let h = DMatrix::from_fn(n, n, |r, c| if r.abs_diff(c) == 1 { -1.0 } else { 0.0 });
        let (values, vectors) = jacobi_eigensystem(&h, 1e-15).unwrap();
        let spec = ChainSpec::unit(n, 0.0).unwrap();
        let want: Vec<_> = oracle_spectrum(&spec, 1e-14).unwrap();
        let got: Vec<_> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        assert!(match_spectra(&got, &want) < 1e-12);
        let back = &vectors * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(values)) * vectors.transpose();
        assert!((back - h).amax() < 1e-12);
    }
}

#[test]
fn hermitian_equivalent_is_unitary_image() {
    // same spectrum, and the trace of H² agrees since 𝓗 = ρHρ⁻¹
    for n in [5, 8, 11] {
        let spec = ChainSpec::unit(n, 0.7 * gamma_critical(n, 1.0)).unwrap();
        let (_, eq) = equivalent_for(&spec).unwrap();
        let h = build_hamiltonian(&spec);
        let t_h = (&h * &h).trace().re;
        let t_eq = (&eq.h_matrix * &eq.h_matrix).trace();
        assert!((t_h - t_eq).abs() < 1e-10, "N = {n}: {t_h} vs {t_eq}");
    }
}

#[test]
fn phase_classification_brackets_the_boundary() {
    for n in 2..=20 {
        let gc = gamma_critical(n, 1.0);
        assert_eq!(ChainSpec::unit(n, 0.99 * gc).unwrap().phase(DEFAULT_TOL), Phase::Unbroken);
        assert_eq!(ChainSpec::unit(n, 1.01 * gc).unwrap().phase(DEFAULT_TOL), Phase::Broken);
    }
}

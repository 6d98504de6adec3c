//! The positive metric `η₊`, its canonical eigenbasis, and the equivalent
//! Hermitian Hamiltonian on a bipartite lattice.
//!
//! Conventions used throughout:
//!
//! * `η₊ = Σ_k |g_k⟩⟨g_k|`, so `η₊[m][n] = Σ_k g_k[m] conj(g_k[n])`. With this
//!   ordering `η₊ H = H† η₊`.
//! * The gauge `D = diag(i^{l mod 2})` makes `D† η₊ D` real and `D† H D`
//!   purely imaginary. Everything below the gauge works in that frame.
//! * Parity `Q` is the exchange `P` for even `N` and `±R P` for odd `N`, with
//!   `R = diag((-1)^l)`. The gauged metric commutes with `Q`, and canonical
//!   vectors split into `Q = -1` (sublattice A) and `Q = +1` (sublattice B).
//! * Canonical vectors are sorted by ascending eigenvalue and paired
//!   `n ↔ N+1-n` through `R`, with reciprocal eigenvalues.

pub mod jacobi;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::bethe::{solve_spectrum, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, ChainSpec, Phase, StateVector};
use crate::states::EigenBasis;

pub use jacobi::jacobi_eigensystem;

/// Below `PROBE_GAMMA · J` the metric is degenerate to working precision and
/// the canonical vectors are taken from a chain at this strength.
pub const PROBE_GAMMA: f64 = 1e-6;

const JACOBI_TOL: f64 = 1e-15;
const GAUGE_TOL: f64 = 1e-8;
const CLUSTER_TOL: f64 = 1e-9;
const PARITY_TOL: f64 = 1e-6;
const PAIRING_TOL: f64 = 1e-6;
const STRUCTURE_TOL: f64 = 1e-6;

/// `η₊[m][n] = Σ_k g_k[m] conj(g_k[n])` from the dual states.
pub fn build_metric(basis: &EigenBasis) -> Result<DMatrix<Complex64>> {
    basis.require_unbroken()?;
    let n = basis.spec.n_sites();
    let mut eta = DMatrix::zeros(n, n);
    for (_, g) in &basis.g_states {
        let col = g.to_column();
        eta += &col * col.adjoint();
    }
    Ok(eta)
}

/// Phases `i^{l mod 2}` of the real gauge, sites counted from 1.
pub fn gauge_phases(n: usize) -> Vec<Complex64> {
    (1..=n)
        .map(|l| if l % 2 == 1 { Complex64::i() } else { Complex64::new(1.0, 0.0) })
        .collect()
}

/// `D† M D` for the diagonal gauge `D`.
pub fn gauge_transform(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = gauge_phases(m.nrows());
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| d[r].conj() * m[(r, c)] * d[c])
}

/// The gauged metric as a real matrix.
pub fn gauge_real(eta: &DMatrix<Complex64>) -> Result<DMatrix<f64>> {
    let g = gauge_transform(eta);
    let scale = g.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let residue = g.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / scale;
    if residue > GAUGE_TOL {
        return Err(Error::GaugeError { residue });
    }
    Ok(g.map(|z| z.re))
}

/// Exchange matrix `P`.
pub fn exchange(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |r, c| if r + c == n - 1 { 1.0 } else { 0.0 })
}

/// `R = diag((-1)^l)`, sites counted from 1.
pub fn alternating(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |r, c| if r != c { 0.0 } else if r % 2 == 0 { -1.0 } else { 1.0 })
}

/// The parity that the gauged metric commutes with: `P` (even `N`) or
/// `±R P` (odd `N`), signed so the center site is even and sublattice A is
/// the smaller one.
pub fn metric_parity(n: usize) -> DMatrix<f64> {
    if n.is_multiple_of(2) {
        exchange(n)
    } else {
        let center_sign = if n.div_ceil(2).is_multiple_of(2) { 1.0 } else { -1.0 };
        alternating(n) * exchange(n) * center_sign
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sublattice {
    A,
    B,
}

/// `|ε_n⟩ = sign · R |ε_partner⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pairing {
    pub partner: usize,
    pub sign: f64,
}

/// Eigen-decomposition of the gauged metric in the canonical basis.
/// Indices into `eigenvalues`, the columns of `vectors`, `pairing` and
/// `sublattice` are 0-based and agree.
#[derive(Debug, Clone)]
pub struct MetricDecomposition {
    pub spec: ChainSpec,
    /// `η₊` in the site basis.
    pub eta: DMatrix<Complex64>,
    /// `D† η₊ D`.
    pub eta_real: DMatrix<f64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal canonical vectors as columns, in the gauged frame.
    pub vectors: DMatrix<f64>,
    pub pairing: Vec<Pairing>,
    pub sublattice: Vec<Sublattice>,
}

impl MetricDecomposition {
    pub fn basis(&self) -> Vec<StateVector> {
        self.vectors
            .column_iter()
            .map(|c| StateVector::from_real(c.as_slice()))
            .collect()
    }

    pub fn sublattice_sizes(&self) -> (usize, usize) {
        let a = self.sublattice.iter().filter(|&&s| s == Sublattice::A).count();
        (a, self.sublattice.len() - a)
    }
}

/// Metric, gauge and canonical basis for one chain in the unbroken phase.
pub fn decompose(spec: &ChainSpec) -> Result<MetricDecomposition> {
    let eta = metric_for(spec)?;
    let eta_real = gauge_real(&eta)?;
    let (eigenvalues, vectors, pairing, sublattice) = if spec.gamma() < PROBE_GAMMA * spec.hopping() {
        // the vectors are the continuation from small γ; the eigenvalues are
        // Rayleigh quotients of the actual metric
        let probe = spec.with_gamma(PROBE_GAMMA * spec.hopping())?;
        let p = canonical_basis(&gauge_real(&metric_for(&probe)?)?)?;
        let vals = p.1.column_iter().map(|c| c.dot(&(&eta_real * c))).collect();
        (vals, p.1, p.2, p.3)
    } else {
        canonical_basis(&eta_real)?
    };
    Ok(MetricDecomposition { spec: *spec, eta, eta_real, eigenvalues, vectors, pairing, sublattice })
}

fn metric_for(spec: &ChainSpec) -> Result<DMatrix<Complex64>> {
    let solution = solve_spectrum(spec, DEFAULT_TOL)?;
    if solution.phase != Phase::Unbroken {
        return Err(Error::PhaseError {
            required: "unbroken",
            gamma: spec.gamma(),
            gamma_c: spec.gamma_critical(),
        });
    }
    build_metric(&EigenBasis::build(&solution)?)
}

type Canonical = (Vec<f64>, DMatrix<f64>, Vec<Pairing>, Vec<Sublattice>);

/// Canonical basis of a gauged metric: parity-definite, ascending, paired
/// through `R` with reciprocal eigenvalues, and sign-fixed so that the
/// equivalent Hamiltonian inherits the reflection symmetry of the chain.
pub fn canonical_basis(eta_real: &DMatrix<f64>) -> Result<Canonical> {
    let n = eta_real.nrows();
    let (vals, mut vecs) = jacobi_eigensystem(eta_real, JACOBI_TOL)?;
    let q = metric_parity(n);
    let r = alternating(n);

    // resolve degenerate clusters by diagonalizing Q inside each
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (vals[end] - vals[start]).abs() <= CLUSTER_TOL * vals[start].abs().max(1.0) {
            end += 1;
        }
        if end - start > 1 {
            let sub = vecs.columns(start, end - start).into_owned();
            let restricted = sub.transpose() * &q * &sub;
            let restricted = (&restricted + restricted.transpose()) * 0.5;
            let (_, rot) = jacobi_eigensystem(&restricted, JACOBI_TOL)?;
            vecs.columns_mut(start, end - start).copy_from(&(sub * rot));
        }
        start = end;
    }

    let mut sublattice = Vec::with_capacity(n);
    for (i, v) in vecs.column_iter().enumerate() {
        let parity = v.dot(&(&q * v));
        if (parity.abs() - 1.0).abs() > PARITY_TOL {
            return Err(Error::DegeneracyError(format!(
                "vector {} has indefinite parity {parity:.6}",
                i + 1
            )));
        }
        sublattice.push(if parity < 0.0 { Sublattice::A } else { Sublattice::B });
    }

    // first-half and middle vectors: first significant component positive
    for i in 0..n.div_ceil(2) {
        let col = vecs.column(i);
        let scale = col.amax();
        let first = col.iter().copied().find(|x| x.abs() > 1e-8 * scale).unwrap_or(1.0);
        if first < 0.0 {
            vecs.column_mut(i).neg_mut();
        }
    }

    // the self-paired middle vector of odd N fixes the sign rule
    let middle_sign = if n % 2 == 1 {
        let m = n / 2;
        let v = vecs.column(m);
        Some((v.dot(&(&r * v)).signum(), sublattice[m]))
    } else {
        None
    };

    let mut pairing = vec![Pairing { partner: 0, sign: 1.0 }; n];
    for i in 0..n {
        let j = n - 1 - i;
        let product = vals[i] * vals[j];
        if (product - 1.0).abs() > PAIRING_TOL {
            return Err(Error::DegeneracyError(format!(
                "eigenvalues {} and {} are not reciprocal (product {product:.9})",
                i + 1,
                j + 1
            )));
        }
        let overlap = vecs.column(i).dot(&(&r * vecs.column(j)));
        if (overlap.abs() - 1.0).abs() > PAIRING_TOL {
            return Err(Error::DegeneracyError(format!(
                "vectors {} and {} are not R-partners (overlap {overlap:.9})",
                i + 1,
                j + 1
            )));
        }
        let wanted = match middle_sign {
            None => 1.0,
            Some((rm, side)) if sublattice[i] == side => rm,
            Some((rm, _)) => -rm,
        };
        if i < j && overlap.signum() != wanted {
            vecs.column_mut(j).neg_mut();
        }
        let sign = if i == j { overlap.signum() } else { wanted };
        pairing[i] = Pairing { partner: j, sign };
    }

    Ok((vals, vecs, pairing, sublattice))
}

/// The real symmetric Hamiltonian unitarily equivalent to `H`.
#[derive(Debug, Clone)]
pub struct HermitianEquivalent {
    pub spec: ChainSpec,
    /// Basis ordered A then B, each by ascending metric eigenvalue.
    pub h_matrix: DMatrix<f64>,
    /// The `N_A × N_B` coupling block.
    pub block_a: DMatrix<f64>,
    /// `(i, j, λ_ij)`, indices counted from 1.
    pub couplings: Vec<(usize, usize, f64)>,
    pub sublattice_sizes: (usize, usize),
    /// Largest imaginary part, asymmetry, and diagonal-block entry found
    /// before taking the real part.
    pub residues: StructureResidues,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureResidues {
    pub imaginary: f64,
    pub asymmetry: f64,
    pub diagonal_blocks: f64,
}

/// `𝓗_mn = sqrt(ε_m/ε_n) ⟨ε_m|H|ε_n⟩` in the canonical basis, with the
/// A-side vectors multiplied by `i` so that the result is real.
pub fn hermitian_equivalent(decomp: &MetricDecomposition, h: &DMatrix<Complex64>) -> Result<HermitianEquivalent> {
    let n = decomp.spec.n_sites();
    let hg = gauge_transform(h);
    let v = decomp.vectors.map(|x| Complex64::new(x, 0.0));
    let in_basis = v.transpose() * hg * &v;

    let order: Vec<usize> = (0..n)
        .filter(|&i| decomp.sublattice[i] == Sublattice::A)
        .chain((0..n).filter(|&i| decomp.sublattice[i] == Sublattice::B))
        .collect();
    let (na, nb) = decomp.sublattice_sizes();
    let phase = |i: usize| match decomp.sublattice[i] {
        Sublattice::A => Complex64::i(),
        Sublattice::B => Complex64::new(1.0, 0.0),
    };
    let eps = &decomp.eigenvalues;
    let full = DMatrix::from_fn(n, n, |r, c| {
        let (m, k) = (order[r], order[c]);
        phase(m).conj() * in_basis[(m, k)] * phase(k) * (eps[m] / eps[k]).sqrt()
    });

    let imaginary = full.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let real = full.map(|z| z.re);
    let asymmetry = (&real - real.transpose()).amax();
    let mut diagonal_blocks: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            if (r < na) == (c < na) {
                diagonal_blocks = diagonal_blocks.max(full[(r, c)].norm());
            }
        }
    }
    let residues = StructureResidues { imaginary, asymmetry, diagonal_blocks };
    if diagonal_blocks > STRUCTURE_TOL {
        return Err(Error::StructureError { residue: diagonal_blocks });
    }
    if imaginary > STRUCTURE_TOL || asymmetry > STRUCTURE_TOL {
        return Err(Error::StructureError { residue: imaginary.max(asymmetry) });
    }

    let block_a = real.view((0, na), (na, nb)).into_owned();
    let couplings = (0..na)
        .flat_map(|i| (0..nb).map(move |j| (i, j)))
        .map(|(i, j)| (i + 1, j + 1, block_a[(i, j)]))
        .collect();
    Ok(HermitianEquivalent {
        spec: decomp.spec,
        h_matrix: real,
        block_a,
        couplings,
        sublattice_sizes: (na, nb),
        residues,
    })
}

/// Full pipeline from a chain to its Hermitian equivalent.
pub fn equivalent_for(spec: &ChainSpec) -> Result<(MetricDecomposition, HermitianEquivalent)> {
    let decomp = decompose(spec)?;
    let eq = hermitian_equivalent(&decomp, &build_hamiltonian(spec))?;
    Ok((decomp, eq))
}

/// Largest violation of the reflection symmetry of the coupling block:
/// `A_ij = A_{N_A+1-j, N_B+1-i}` (even `N`) or `A_{N_A+1-i, N_B+1-j}` (odd).
pub fn reflection_residue(eq: &HermitianEquivalent) -> f64 {
    let (na, nb) = eq.sublattice_sizes;
    let a = &eq.block_a;
    let odd = eq.spec.is_odd();
    let mut worst: f64 = 0.0;
    for i in 0..na {
        for j in 0..nb {
            let mirror = if odd { a[(na - 1 - i, nb - 1 - j)] } else { a[(na - 1 - j, nb - 1 - i)] };
            worst = worst.max((a[(i, j)] - mirror).abs());
        }
    }
    worst
}

/// Residues of the identities the metric must satisfy. Each entry is a
/// maximum absolute entrywise deviation, except `min_eigenvalue`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricIdentities {
    pub hermitian: f64,
    pub min_eigenvalue: f64,
    pub inverse_is_conjugate: f64,
    pub pt_invariant: f64,
    /// `η[m][n] = η[N+1-n][N+1-m]` in the site basis.
    pub persymmetric: f64,
    /// `Q η Q = η` and symmetry, in the gauged frame.
    pub bisymmetric: f64,
    /// `R η R = η⁻¹`, in the gauged frame.
    pub r_conjugate: f64,
    pub reciprocal_pairs: f64,
    pub determinant: f64,
    pub pseudo_hermitian: f64,
}

impl MetricIdentities {
    /// Largest residue, with positivity folded in as a failure flag.
    pub fn worst(&self) -> f64 {
        let positive = if self.min_eigenvalue > 0.0 { 0.0 } else { f64::INFINITY };
        [
            self.hermitian,
            self.inverse_is_conjugate,
            self.pt_invariant,
            self.persymmetric,
            self.bisymmetric,
            self.r_conjugate,
            self.reciprocal_pairs,
            self.determinant,
            self.pseudo_hermitian,
            positive,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn metric_identities(decomp: &MetricDecomposition) -> Result<MetricIdentities> {
    let n = decomp.spec.n_sites();
    let eta = &decomp.eta;
    let h = build_hamiltonian(&decomp.spec);
    let cmax = |m: DMatrix<Complex64>| m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let inv = eta
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegeneracyError("metric is singular".into()))?;
    let pt = DMatrix::from_fn(n, n, |r, c| eta[(n - 1 - r, n - 1 - c)].conj());
    let persym = DMatrix::from_fn(n, n, |r, c| eta[(n - 1 - c, n - 1 - r)]);

    let er = &decomp.eta_real;
    let q = metric_parity(n);
    let r = alternating(n);
    let er_inv = er
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegeneracyError("metric is singular".into()))?;
    let bisym = (&q * er * &q - er).amax().max((er - er.transpose()).amax());

    let eps = &decomp.eigenvalues;
    let reciprocal = (0..n).map(|i| (eps[i] * eps[n - 1 - i] - 1.0).abs()).fold(0.0, f64::max);

    Ok(MetricIdentities {
        hermitian: cmax(eta - eta.adjoint()),
        min_eigenvalue: eps.iter().copied().fold(f64::INFINITY, f64::min),
        inverse_is_conjugate: cmax(&inv - eta.conjugate()),
        pt_invariant: cmax(&pt - eta),
        persymmetric: cmax(&persym - eta),
        bisymmetric: bisym,
        r_conjugate: (&r * er * &r - er_inv).amax(),
        reciprocal_pairs: reciprocal,
        determinant: (eta.determinant() - Complex64::new(1.0, 0.0)).norm(),
        pseudo_hermitian: cmax(eta * &h - h.adjoint() * eta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::gamma_critical;

    const TABLE_7: [[f64; 6]; 3] = [
        [0.6242, 1.0068, -0.2997, 0.0830, 0.2071, -1.2071],
        [0.5703, 0.9731, -0.3089, 0.0883, 0.2039, -1.2075],
        [0.3355, 0.8949, -0.3280, 0.0774, 0.1468, -1.2089],
    ];
    const TABLE_8: [[f64; 10]; 3] = [
        [0.5627, -0.9300, -0.2994, -0.1199, 0.1954, 1.1615, -1.2411, 0.0914, 0.3333, 0.0277],
        [0.5153, -0.8918, -0.3057, -0.1304, 0.1909, 1.1527, -1.2469, 0.0972, 0.3461, 0.0310],
        [0.1766, -0.9005, -0.3157, -0.1458, 0.1005, 1.0333, -1.3522, 0.0627, 0.3505, 0.0143],
    ];

    fn sorted_magnitudes(values: impl Iterator<Item = f64>) -> Vec<f64> {
        let mut v: Vec<f64> = values.map(f64::abs).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Table columns list each independent entry once; expand the mirror
    /// partners to get the full multiset.
    fn expand_odd(row: &[f64; 6]) -> Vec<f64> {
        row.iter().take(4).chain(row.iter().take(4)).chain(row[4..].iter()).chain(row[4..].iter()).copied().collect()
    }

    fn expand_even(row: &[f64; 10]) -> Vec<f64> {
        // λ11/44, λ12/34, λ13/24, λ14, λ21/43, λ22/33, λ23, λ31/42, λ32, λ41
        let doubled = [true, true, true, false, true, true, false, true, false, false];
        row.iter()
            .zip(doubled)
            .flat_map(|(&x, d)| if d { vec![x, x] } else { vec![x] })
            .collect()
    }

    fn check_table(n: usize, gamma: f64, expected: Vec<f64>) {
        let spec = ChainSpec::unit(n, gamma).unwrap();
        let (_, eq) = equivalent_for(&spec).unwrap();
        let got = sorted_magnitudes(eq.couplings.iter().map(|c| c.2));
        let want = sorted_magnitudes(expected.into_iter());
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 2e-4, "N={n} γ={gamma}: {got:?} vs {want:?}");
        }
        assert!(reflection_residue(&eq) < 1e-8, "N={n} γ={gamma}");
    }

    #[test]
    fn seven_site_table() {
        for (row, gamma) in TABLE_7.iter().zip([0.0, 0.5, 0.99]) {
            check_table(7, gamma, expand_odd(row));
        }
    }

    #[test]
    fn eight_site_table() {
        for (row, gamma) in TABLE_8.iter().zip([0.0, 0.5, 0.99]) {
            check_table(8, gamma, expand_even(row));
        }
    }

    #[test]
    fn sublattice_sizes() {
        for (n, sizes) in [(2, (1, 1)), (7, (3, 4)), (8, (4, 4)), (9, (4, 5))] {
            let (_, eq) = equivalent_for(&ChainSpec::unit(n, 0.4).unwrap()).unwrap();
            assert_eq!(eq.sublattice_sizes, sizes, "N={n}");
        }
    }

    #[test]
    fn two_site_coupling() {
        let (_, eq) = equivalent_for(&ChainSpec::unit(2, 0.6).unwrap()).unwrap();
        assert_eq!(eq.couplings.len(), 1);
        assert!((eq.couplings[0].2.abs() - 0.8).abs() < 1e-10);
    }

    #[test]
    fn identity_metric_at_zero_gamma() {
        let d = decompose(&ChainSpec::unit(6, 0.0).unwrap()).unwrap();
        let id = DMatrix::<Complex64>::identity(6, 6);
        assert!((&d.eta - id).iter().all(|z| z.norm() < 1e-12));
        assert!(d.eigenvalues.iter().all(|&e| (e - 1.0).abs() < 1e-12));
    }

    #[test]
    fn gauge_of_identity_is_identity() {
        let id = DMatrix::<Complex64>::identity(5, 5);
        assert_eq!(gauge_real(&id).unwrap(), DMatrix::<f64>::identity(5, 5));
    }

    #[test]
    fn gauge_rejects_complex_residue() {
        let mut m = DMatrix::<Complex64>::identity(3, 3);
        m[(0, 2)] = Complex64::new(0.0, 0.5);
        m[(2, 0)] = Complex64::new(0.0, -0.5);
        assert!(matches!(gauge_real(&m), Err(Error::GaugeError { .. })));
    }

    #[test]
    fn entrywise_phase_identity() {
        // η[m][n] = (-1)^{m+n} conj(η[m][n]) before the gauge
        let d = decompose(&ChainSpec::unit(8, 0.7).unwrap()).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
                assert!((d.eta[(r, c)] - sign * d.eta[(r, c)].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn identities_hold_across_grid() {
        for n in 2..=12 {
            for frac in [0.3, 0.5, 0.6, 0.9] {
                let spec = ChainSpec::unit(n, frac * gamma_critical(n, 1.0)).unwrap();
                let d = decompose(&spec).unwrap();
                let ids = metric_identities(&d).unwrap();
                assert!(ids.worst() < 1e-8, "N={n} frac={frac}: {ids:?}");
                let (na, nb) = d.sublattice_sizes();
                assert_eq!(na.abs_diff(nb), n % 2);
            }
        }
    }

    #[test]
    fn pairing_links_reciprocal_partners() {
        let d = decompose(&ChainSpec::unit(9, 0.8).unwrap()).unwrap();
        let r = alternating(9);
        for (i, p) in d.pairing.iter().enumerate() {
            let image = &r * d.vectors.column(p.partner) * p.sign;
            assert!((image - d.vectors.column(i)).amax() < 1e-8);
            assert!((d.eigenvalues[i] * d.eigenvalues[p.partner] - 1.0).abs() < 1e-8);
        }
        assert_eq!(d.pairing[4].partner, 4);
    }

    #[test]
    fn equivalent_is_isospectral() {
        for n in 2..=12 {
            for frac in [0.3, 0.6, 0.9] {
                let spec = ChainSpec::unit(n, frac * gamma_critical(n, 1.0)).unwrap();
                let (_, eq) = equivalent_for(&spec).unwrap();
                let mut got: Vec<f64> = eq.h_matrix.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
                got.sort_by(f64::total_cmp);
                let sol = solve_spectrum(&spec, DEFAULT_TOL).unwrap();
                let want: Vec<f64> = sol.energies().iter().map(|e| e.re).collect();
                for (a, b) in got.iter().zip(&want) {
                    assert!((a - b).abs() < 1e-8, "N={n} frac={frac}");
                }
                let r = eq.residues;
                assert!(r.imaginary < 1e-9 && r.asymmetry < 1e-9 && r.diagonal_blocks < 1e-8);
                assert!(reflection_residue(&eq) < 1e-8, "N={n} frac={frac}");
            }
        }
    }

    #[test]
    fn couplings_keep_sign_inside_unbroken_phase() {
        for n in [7, 8] {
            let gc = gamma_critical(n, 1.0);
            let runs: Vec<Vec<f64>> = (1..=9)
                .map(|i| {
                    let spec = ChainSpec::unit(n, 0.1 * i as f64 * gc).unwrap();
                    equivalent_for(&spec).unwrap().1.couplings.iter().map(|c| c.2).collect()
                })
                .collect();
            for idx in 0..runs[0].len() {
                let base = runs[0][idx];
                if base.abs() < 1e-9 {
                    continue;
                }
                for run in &runs {
                    assert!(run[idx] * base > 0.0, "N={n} coupling {idx} changed sign");
                    assert!(run[idx].abs() > 0.1 * base.abs());
                    assert!(((run[idx] - base) / base).abs() < 1.0);
                }
            }
        }
    }

    #[test]
    fn broken_phase_is_rejected() {
        let spec = ChainSpec::unit(8, 1.3).unwrap();
        assert!(matches!(decompose(&spec), Err(Error::PhaseError { .. })));
    }
}

//! Matrix realizations of phi, Pi, H and H'.
//!
//! Two realizations are shipped. The grid realization diagonalizes phi on
//! a periodic uniform grid and represents Pi as the spectral derivative,
//! for wavefunctional-picture demonstrations. The Fock realization builds
//! phi and Pi from truncated ladder operators per mode, where the
//! canonical commutator is exact off the truncation corner.
//!
//! The evolution commutators carry opposite signs in the two formalisms:
//! i[H, phi] = Pi while i[H', phi] = -Pi.

use ndarray::Array2;
use num_complex::Complex64;

use crate::dispersion::{classify_region, MassParam, MomentumTriple, Region};
use crate::linalg::{commutator, dagger, identity, kron, max_abs, project, CMat};
use crate::mode_algebra::{
    build_hprime_modes, lowering, realize_p1_mode, realize_p2_pair, HprimeModes, ModeAssignment,
};
use crate::{Error, Result};

/// Uniform periodic grid of field eigenvalues.
#[derive(Debug, Clone, Copy)]
pub struct SiteGrid {
    pub n_phi: usize,
    pub phi_max: f64,
}

impl SiteGrid {
    pub fn new(n_phi: usize, phi_max: f64) -> Result<Self> {
        if n_phi < 8 || !n_phi.is_power_of_two() {
            return Err(Error::Precondition(format!(
                "n_phi must be a power of two >= 8, got {n_phi}"
            )));
        }
        if !(phi_max.is_finite() && phi_max > 0.0) {
            return Err(Error::Precondition(format!("phi_max must be > 0, got {phi_max}")));
        }
        Ok(SiteGrid { n_phi, phi_max })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.phi_max / self.n_phi as f64
    }

    /// Grid point j: -phi_max + j * spacing.
    pub fn point(&self, j: usize) -> f64 {
        -self.phi_max + j as f64 * self.spacing()
    }
}

/// Diagonal phi with the uniform non-degenerate spectrum of the grid.
pub fn build_phi_grid(g: &SiteGrid) -> CMat {
    let mut phi = Array2::zeros((g.n_phi, g.n_phi));
    for j in 0..g.n_phi {
        phi[[j, j]] = Complex64::new(g.point(j), 0.0);
    }
    phi
}

/// Conjugate momentum on the grid: diagonal in the discrete Fourier basis
/// with the grid wavenumbers as eigenvalues (Nyquist mode set to zero so
/// the operator stays an odd derivative). Hermitian to machine precision.
pub fn build_pi_grid(g: &SiteGrid) -> CMat {
    let n = g.n_phi;
    let length = 2.0 * g.phi_max;
    // unitary DFT matrix
    let mut f: CMat = Array2::zeros((n, n));
    let scale = 1.0 / (n as f64).sqrt();
    for q in 0..n {
        for j in 0..n {
            let angle = -2.0 * std::f64::consts::PI * (q * j) as f64 / n as f64;
            f[[q, j]] = Complex64::from_polar(scale, angle);
        }
    }
    let mut kdiag: CMat = Array2::zeros((n, n));
    for q in 0..n {
        let freq = if q <= n / 2 { q as isize } else { q as isize - n as isize };
        let k = if freq.unsigned_abs() == n / 2 {
            0.0
        } else {
            2.0 * std::f64::consts::PI * freq as f64 / length
        };
        kdiag[[q, q]] = Complex64::new(k, 0.0);
    }
    dagger(&f).dot(&kdiag).dot(&f)
}

/// Single-mode Fock realization: phi = (a + a^dag)/sqrt(2 w), Pi = -i
/// sqrt(w/2) (a - a^dag).
pub fn build_phi_pi_fock(mode_omega: f64, dim: usize) -> Result<(CMat, CMat)> {
    if !(mode_omega.is_finite() && mode_omega > 0.0) {
        return Err(Error::Precondition(format!(
            "mode frequency must be > 0, got {mode_omega}"
        )));
    }
    if dim < 4 {
        return Err(Error::Precondition(format!("dim must be >= 4, got {dim}")));
    }
    let a = lowering(dim);
    let adag = dagger(&a);
    let phi = (&a + &adag).mapv(|x| x / (2.0 * mode_omega).sqrt());
    let pi = (&a - &adag).mapv(|x| x * Complex64::new(0.0, -(mode_omega / 2.0).sqrt()));
    Ok((phi, pi))
}

/// H = sum over modes of w (a^dag a + 1/2) on the tensor Fock space.
pub fn build_h_modes(omegas: &[f64], dim: usize) -> Result<CMat> {
    if omegas.is_empty() {
        return Err(Error::Precondition("empty mode list".into()));
    }
    if dim < 2 {
        return Err(Error::Precondition(format!("dim must be >= 2, got {dim}")));
    }
    let total = dim.pow(omegas.len() as u32);
    let mut h: CMat = Array2::zeros((total, total));
    let a = lowering(dim);
    let number = dagger(&a).dot(&a);
    for (idx, &w) in omegas.iter().enumerate() {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::Precondition(format!("omega must be > 0, got {w}")));
        }
        let mut local = number.mapv(|x| x * w);
        for i in 0..dim {
            local[[i, i]] += 0.5 * w;
        }
        let mut embedded = if idx == 0 { local.clone() } else { identity(dim.pow(idx as u32)) };
        if idx > 0 {
            embedded = kron(&embedded, &local);
        }
        for _ in idx + 1..omegas.len() {
            embedded = kron(&embedded, &identity(dim));
        }
        h = h + embedded;
    }
    Ok(h)
}

/// H' over the given z-formalism modes, with each mode realized per its
/// region (single oscillator in P1, two-oscillator pair in P2).
pub fn build_hprime_for_modes(modes: &[MomentumTriple], m: MassParam, dim: usize) -> Result<HprimeModes> {
    let mut assignments = Vec::with_capacity(modes.len());
    for &mode in modes {
        let realization = match classify_region(mode, m).effective() {
            Region::P2 => realize_p2_pair(mode, m, dim)?,
            _ => realize_p1_mode(dim)?,
        };
        assignments.push(ModeAssignment { mode, realization });
    }
    build_hprime_modes(&assignments, m)
}

/// Max-norm residuals of the two evolution commutators on the
/// corner-excluded subspace defined by the projector `proj`.
#[derive(Debug, Clone, Copy)]
pub struct EvolutionResiduals {
    /// max-abs of P (i[H, phi] - Pi) P
    pub t_form: f64,
    /// max-abs of P (i[H', phi] + Pi) P
    pub z_form: f64,
}

pub fn check_evolution_commutators(
    h: &CMat,
    hprime: &CMat,
    phi: &CMat,
    pi: &CMat,
    proj: &CMat,
) -> Result<EvolutionResiduals> {
    let n = phi.nrows();
    for (mat, name) in [(h, "H"), (hprime, "H'"), (pi, "Pi"), (proj, "projector")] {
        if mat.dim() != (n, n) {
            return Err(Error::Dimension(format!(
                "{name} is {:?}, phi is {:?}",
                mat.dim(),
                phi.dim()
            )));
        }
    }
    let i = Complex64::new(0.0, 1.0);
    let t_res = commutator(h, phi).mapv(|x| x * i) - pi;
    let z_res = commutator(hprime, phi).mapv(|x| x * i) + pi;
    Ok(EvolutionResiduals {
        t_form: max_abs(&project(proj, &t_res)),
        z_form: max_abs(&project(proj, &z_res)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{corner_projector, max_abs_vec, norm2_vec, CVec};
    use crate::rng::DetRng;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use ndarray::Array1;
    use ndarray_linalg::Eig;

    #[test]
    fn phi_grid_is_the_expected_diagonal() {
        let g = SiteGrid::new(8, 4.0).unwrap();
        let phi = build_phi_grid(&g);
        for j in 0..8 {
            assert_eq!(phi[[j, j]], Complex64::new(-4.0 + j as f64, 0.0));
        }
        assert_eq!(max_abs(&(build_phi_grid(&g) - dagger(&phi))), 0.0);
        // non-degenerate diagonal
        for j in 1..8 {
            assert!(phi[[j, j]] != phi[[j - 1, j - 1]]);
        }
    }

    #[test]
    fn pi_grid_plane_wave_eigenvector() {
        let g = SiteGrid::new(32, 4.0).unwrap();
        let pi = build_pi_grid(&g);
        // plane wave at grid wavenumber q = 3
        let k0 = 2.0 * std::f64::consts::PI * 3.0 / 8.0;
        let v: CVec = Array1::from_iter(
            (0..32).map(|j| Complex64::from_polar(1.0, k0 * g.point(j))),
        );
        let pv = pi.dot(&v);
        let residual = &pv - &v.mapv(|x| x * k0);
        assert!(max_abs_vec(&residual) <= 1e-12);
    }

    #[test]
    fn pi_grid_hermitian_and_kills_constants() {
        let g = SiteGrid::new(16, 2.0).unwrap();
        let pi = build_pi_grid(&g);
        assert!(max_abs(&(&pi - &dagger(&pi))) <= 1e-12);
        let ones: CVec = Array1::from_elem(16, Complex64::new(1.0, 0.0));
        assert!(max_abs_vec(&pi.dot(&ones)) <= 1e-12);
        // real expectation in a random real state
        let mut rng = DetRng::new(11);
        let v: CVec = Array1::from_iter((0..16).map(|_| Complex64::new(rng.next_sym(), 0.0)));
        let expect: Complex64 = v.mapv(|x| x.conj()).dot(&pi.dot(&v));
        assert_abs_diff_eq!(expect.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_commutator_on_wave_packets() {
        // Gaussian packets are band-limited to the central half of the
        // Fourier grid and vanish at the wrap point, where the sawtooth
        // jump would otherwise dominate the residual.
        let g = SiteGrid::new(64, 12.0).unwrap();
        let phi = build_phi_grid(&g);
        let pi = build_pi_grid(&g);
        let comm = commutator(&pi, &phi);
        let sigma = 1.2;
        for x0 in [0.0, 1.0, -2.0] {
            for k0 in [0.0, 1.0] {
                let v: CVec = Array1::from_iter((0..64).map(|j| {
                    let x = g.point(j);
                    Complex64::from_polar((-(x - x0).powi(2) / (2.0 * sigma * sigma)).exp(), k0 * x)
                }));
                let residual = comm.dot(&v) + v.mapv(|x| x * Complex64::new(0.0, 1.0));
                assert!(norm2_vec(&residual) / norm2_vec(&v) <= 1e-8);
            }
        }
    }

    #[test]
    fn fock_commutator_exact_off_corner() {
        let dim = 16;
        let (phi, pi) = build_phi_pi_fock(1.3, dim).unwrap();
        assert!(max_abs(&(&phi - &dagger(&phi))) <= 1e-15);
        assert!(max_abs(&(&pi - &dagger(&pi))) <= 1e-15);
        let p = corner_projector(&[dim], 2);
        let res = commutator(&pi, &phi) + identity(dim).mapv(|x| x * Complex64::new(0.0, 1.0));
        assert!(max_abs(&project(&p, &res)) <= 1e-13);
    }

    #[test]
    fn fock_hamiltonian_spectrum() {
        let dim = 16;
        let w = 1.0;
        let (phi, pi) = build_phi_pi_fock(w, dim).unwrap();
        let h = (pi.dot(&pi) + phi.dot(&phi).mapv(|x| x * w * w)).mapv(|x| x * 0.5);
        let (evs, _) = h.eig().unwrap();
        let mut res: Vec<f64> = evs.iter().map(|e| e.re).collect();
        res.sort_by(f64::total_cmp);
        // Exact truncated spectrum: w (n + 1/2) for n < dim - 1, plus the
        // corner level w (dim - 1) / 2 where a a^dag loses its top entry.
        let mut expected: Vec<f64> = (0..dim - 1).map(|n| w * (n as f64 + 0.5)).collect();
        expected.push(w * (dim - 1) as f64 / 2.0);
        expected.sort_by(f64::total_cmp);
        for (e, x) in res.iter().zip(&expected) {
            assert_relative_eq!(*e, *x, max_relative = 1e-10);
        }
    }

    #[test]
    fn h_modes_spectrum_and_hermiticity() {
        let h = build_h_modes(&[1.0], 8).unwrap();
        assert_eq!(max_abs(&(&h - &dagger(&h))), 0.0);
        let (evs, _) = h.eig().unwrap();
        let mut res: Vec<f64> = evs.iter().map(|e| e.re).collect();
        res.sort_by(f64::total_cmp);
        for (n, e) in res.iter().enumerate() {
            assert_relative_eq!(*e, n as f64 + 0.5, max_relative = 1e-12);
        }
        assert!(build_h_modes(&[], 8).is_err());
    }

    #[test]
    fn evolution_commutator_signs() {
        // Single P1 mode; H is built at frequency lambda so the same
        // phi/Pi pair serves both commutators.
        let dim = 16;
        let mode = MomentumTriple::new(0.0, 0.0, 2.0).unwrap();
        let m = MassParam::bare(1.0).unwrap();
        let lambda = crate::dispersion::lambda_of(mode, m).lambda.re;
        let (phi, pi) = build_phi_pi_fock(lambda, dim).unwrap();
        let h = build_h_modes(&[lambda], dim).unwrap();
        let hp = build_hprime_for_modes(&[mode], m, dim).unwrap();
        let p = corner_projector(&[dim], 2);
        let r = check_evolution_commutators(&h, &hp.matrix, &phi, &pi, &p).unwrap();
        assert!(r.t_form <= 1e-10, "i[H, phi] - Pi residual {}", r.t_form);
        assert!(r.z_form <= 1e-10, "i[H', phi] + Pi residual {}", r.z_form);
        // the sign flip is real: the wrong-sign residuals are O(1)
        let wrong_t = commutator(&h, &phi).mapv(|x| x * Complex64::new(0.0, 1.0)) + &pi;
        assert!(max_abs(&project(&p, &wrong_t)) > 0.1);
    }

    #[test]
    fn evolution_commutators_zero_matrices() {
        let z: CMat = Array2::zeros((4, 4));
        let r = check_evolution_commutators(&z, &z, &z, &z, &identity(4)).unwrap();
        assert_eq!(r.t_form, 0.0);
        assert_eq!(r.z_form, 0.0);
        let bad: CMat = Array2::zeros((3, 3));
        assert!(check_evolution_commutators(&bad, &z, &z, &z, &z).is_err());
    }

    #[test]
    fn site_grid_validation() {
        assert!(SiteGrid::new(7, 1.0).is_err());
        assert!(SiteGrid::new(12, 1.0).is_err());
        assert!(SiteGrid::new(8, 0.0).is_err());
        assert!(build_phi_pi_fock(0.0, 8).is_err());
        assert!(build_phi_pi_fock(1.0, 3).is_err());
    }
}

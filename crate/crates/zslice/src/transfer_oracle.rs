//! Discretized Gaussian path integral on a small 4D lattice.
//!
//! The free-field action with forward differences is a complex quadratic
//! form in the site values. Fixing the field on the boundary hyperplanes
//! (both t-ends and both z-ends; x and y periodic) and integrating out
//! the interior gives the transition amplitude in closed form. The same
//! amplitude is computed three ways: integrating all interior sites at
//! once, or eliminating them slab-by-slab along t or along z (transfer-
//! kernel composition). Agreement of the three is the lattice statement
//! that t-slicing and z-slicing define the same evolution.
//!
//! Amplitudes are reported relative to the zero-boundary configuration,
//! which cancels the boundary-independent determinant prefactor and the
//! overall phase convention with it.

use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;
use num_complex::Complex64;

use crate::linalg::{CMat, CVec};
use crate::{Error, Result};

/// Hard cap on total lattice sites.
pub const MAX_SITES: usize = 4096;

/// Axis whose two end-hyperplanes carry the boundary data, and along
/// which the sliced evaluation eliminates slab by slab.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    T,
    Z,
}

/// Lattice extents, spacing, mass, and the regulator delta of
/// m^2 -> m^2 - i delta.
#[derive(Debug, Clone, Copy)]
pub struct LatticeSpec4D {
    pub n_t: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub n_z: usize,
    pub eps_lat: f64,
    pub m: f64,
    pub delta: f64,
}

impl LatticeSpec4D {
    pub fn new(
        n_t: usize,
        n_x: usize,
        n_y: usize,
        n_z: usize,
        eps_lat: f64,
        m: f64,
        delta: f64,
    ) -> Result<Self> {
        for (n, name) in [(n_t, "n_t"), (n_x, "n_x"), (n_y, "n_y"), (n_z, "n_z")] {
            if n < 2 {
                return Err(Error::Precondition(format!("{name} must be >= 2, got {n}")));
            }
        }
        let sites = n_t * n_x * n_y * n_z;
        if sites > MAX_SITES {
            return Err(Error::LatticeTooLarge(sites));
        }
        if !(eps_lat.is_finite() && eps_lat > 0.0) {
            return Err(Error::Precondition(format!("spacing must be > 0, got {eps_lat}")));
        }
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::Precondition(format!("mass must be > 0, got {m}")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::RegulatorTooSmall);
        }
        Ok(LatticeSpec4D { n_t, n_x, n_y, n_z, eps_lat, m, delta })
    }

    pub fn sites(&self) -> usize {
        self.n_t * self.n_x * self.n_y * self.n_z
    }

    /// Flat index of site (t, x, y, z).
    pub fn index(&self, t: usize, x: usize, y: usize, z: usize) -> usize {
        ((t * self.n_x + x) * self.n_y + y) * self.n_z + z
    }

    fn is_boundary(&self, t: usize, z: usize) -> bool {
        t == 0 || t == self.n_t - 1 || z == 0 || z == self.n_z - 1
    }

    /// Sites per boundary hyperplane of the given axis.
    pub fn plane_sites(&self, axis: Axis) -> usize {
        match axis {
            Axis::T => self.n_x * self.n_y * self.n_z,
            Axis::Z => self.n_t * self.n_x * self.n_y,
        }
    }
}

/// The action as a complex symmetric form over all sites, with the
/// boundary/interior partition.
#[derive(Debug, Clone)]
pub struct QuadraticLatticeForm {
    pub spec: LatticeSpec4D,
    /// full site matrix M with S = phi^T M phi / 2
    pub matrix: CMat,
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
}

/// S = sum over sites of eps^4 [ (D_t phi / eps)^2 - (D_x phi / eps)^2
/// - (D_y phi / eps)^2 - (D_z phi / eps)^2 - (m^2 - i delta) phi^2 ] / 2
/// with forward differences, fixed ends in t and z, periodic x and y.
pub fn build_action(l: &LatticeSpec4D) -> QuadraticLatticeForm {
    let n = l.sites();
    let mut m: CMat = Array2::zeros((n, n));
    let e2 = l.eps_lat * l.eps_lat;
    let mass = Complex64::new(l.m * l.m, -l.delta) * e2 * e2;
    // k (phi_a - phi_b)^2 contributes 2k to both diagonals and -2k to the
    // off-diagonal pair of M = Hessian of 2S.
    let diff = |m: &mut CMat, a: usize, b: usize, k: f64| {
        let k = Complex64::new(k, 0.0);
        m[[a, a]] += 2.0 * k;
        m[[b, b]] += 2.0 * k;
        m[[a, b]] -= 2.0 * k;
        m[[b, a]] -= 2.0 * k;
    };
    for t in 0..l.n_t {
        for x in 0..l.n_x {
            for y in 0..l.n_y {
                for z in 0..l.n_z {
                    let s = l.index(t, x, y, z);
                    if t + 1 < l.n_t {
                        diff(&mut m, s, l.index(t + 1, x, y, z), e2 / 2.0);
                    }
                    diff(&mut m, s, l.index(t, (x + 1) % l.n_x, y, z), -e2 / 2.0);
                    diff(&mut m, s, l.index(t, x, (y + 1) % l.n_y, z), -e2 / 2.0);
                    if z + 1 < l.n_z {
                        diff(&mut m, s, l.index(t, x, y, z + 1), -e2 / 2.0);
                    }
                    m[[s, s]] -= mass;
                }
            }
        }
    }
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for t in 0..l.n_t {
        for x in 0..l.n_x {
            for y in 0..l.n_y {
                for z in 0..l.n_z {
                    let s = l.index(t, x, y, z);
                    if l.is_boundary(t, z) {
                        boundary.push(s);
                    } else {
                        interior.push(s);
                    }
                }
            }
        }
    }
    QuadraticLatticeForm { spec: *l, matrix: m, interior, boundary }
}

/// Real field values on the two end-hyperplanes of one axis; the other
/// fixed axis' hyperplanes are clamped to zero.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub initial: Vec<f64>,
    pub final_: Vec<f64>,
    pub axis: Axis,
}

impl BoundaryData {
    pub fn new(initial: Vec<f64>, final_: Vec<f64>, axis: Axis) -> Result<Self> {
        if initial.len() != final_.len() {
            return Err(Error::Dimension(format!(
                "initial ({}) and final ({}) hyperplanes differ in size",
                initial.len(),
                final_.len()
            )));
        }
        Ok(BoundaryData { initial, final_, axis })
    }
}

/// Full-lattice vector with the boundary data written onto its planes
/// and zeros everywhere else.
fn boundary_vector(form: &QuadraticLatticeForm, b: &BoundaryData) -> Result<CVec> {
    let l = &form.spec;
    if b.initial.len() != l.plane_sites(b.axis) {
        return Err(Error::Dimension(format!(
            "boundary plane has {} sites, data has {}",
            l.plane_sites(b.axis),
            b.initial.len()
        )));
    }
    let mut phi: CVec = Array1::zeros(l.sites());
    match b.axis {
        Axis::T => {
            let mut plane = 0;
            for x in 0..l.n_x {
                for y in 0..l.n_y {
                    for z in 0..l.n_z {
                        phi[l.index(0, x, y, z)] = Complex64::new(b.initial[plane], 0.0);
                        phi[l.index(l.n_t - 1, x, y, z)] = Complex64::new(b.final_[plane], 0.0);
                        plane += 1;
                    }
                }
            }
        }
        Axis::Z => {
            let mut plane = 0;
            for t in 0..l.n_t {
                for x in 0..l.n_x {
                    for y in 0..l.n_y {
                        phi[l.index(t, x, y, 0)] = Complex64::new(b.initial[plane], 0.0);
                        phi[l.index(t, x, y, l.n_z - 1)] = Complex64::new(b.final_[plane], 0.0);
                        plane += 1;
                    }
                }
            }
        }
    }
    Ok(phi)
}

/// phi_B^T M_BB phi_B and the interior source v = M_IB phi_B.
fn boundary_quadratic(form: &QuadraticLatticeForm, phi: &CVec) -> (Complex64, CVec) {
    let full = form.matrix.dot(phi);
    let quad = phi.dot(&full); // plain bilinear: phi is real-valued data
    let v: CVec = Array1::from_iter(form.interior.iter().map(|&i| full[i]));
    (quad, v)
}

fn submatrix(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    let mut out = Array2::zeros((rows.len(), cols.len()));
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            out[[i, j]] = m[[r, c]];
        }
    }
    out
}

fn solve_many(a: &CMat, rhs: &[CVec]) -> Result<Vec<CVec>> {
    rhs.iter()
        .map(|b| {
            a.solve(b).map_err(|_| Error::RegulatorTooSmall)
        })
        .collect()
}

/// Amplitude relative to zero boundary data: all interior sites are
/// integrated out in one Gaussian step.
pub fn amplitude_direct(form: &QuadraticLatticeForm, b: &BoundaryData) -> Result<Complex64> {
    let phi = boundary_vector(form, b)?;
    let (quad, v) = boundary_quadratic(form, &phi);
    let m_ii = submatrix(&form.matrix, &form.interior, &form.interior);
    let x = solve_many(&m_ii, std::slice::from_ref(&v))?.pop().unwrap();
    let exponent = quad - v.dot(&x);
    Ok((Complex64::new(0.0, 0.5) * exponent).exp())
}

/// Same amplitude, but interior sites are eliminated slab by slab along
/// the given axis: each Schur-complement step is one transfer-kernel
/// composition.
pub fn amplitude_sliced(form: &QuadraticLatticeForm, b: &BoundaryData, axis: Axis) -> Result<Complex64> {
    let l = &form.spec;
    let phi = boundary_vector(form, b)?;
    let (quad, v_full) = boundary_quadratic(form, &phi);
    // interior indices grouped by slab coordinate along the axis
    let coord = |site: usize| -> usize {
        let z = site % l.n_z;
        let t = site / (l.n_x * l.n_y * l.n_z);
        match axis {
            Axis::T => t,
            Axis::Z => z,
        }
    };
    let slabs: Vec<usize> = {
        let mut cs: Vec<usize> = form.interior.iter().map(|&s| coord(s)).collect();
        cs.sort_unstable();
        cs.dedup();
        cs
    };
    // active system over the interior, in the original interior ordering
    let mut active: Vec<usize> = (0..form.interior.len()).collect();
    let mut m_act = submatrix(&form.matrix, &form.interior, &form.interior);
    let mut v_act = v_full;
    let mut c_total = Complex64::new(0.0, 0.0);
    for slab in slabs {
        let slab_pos: Vec<usize> = (0..active.len())
            .filter(|&p| coord(form.interior[active[p]]) == slab)
            .collect();
        let rest_pos: Vec<usize> = (0..active.len())
            .filter(|&p| coord(form.interior[active[p]]) != slab)
            .collect();
        let a = submatrix(&m_act, &slab_pos, &slab_pos);
        let b_sr = submatrix(&m_act, &slab_pos, &rest_pos);
        let v_s: CVec = Array1::from_iter(slab_pos.iter().map(|&p| v_act[p]));
        // solve A [X | x] = [B_sr | v_s]
        let mut rhs: Vec<CVec> = (0..rest_pos.len()).map(|j| b_sr.column(j).to_owned()).collect();
        rhs.push(v_s.clone());
        let mut sols = solve_many(&a, &rhs)?;
        let x_v = sols.pop().unwrap();
        c_total += v_s.dot(&x_v);
        // Schur update of the remaining block and source
        let mut m_new: CMat = Array2::zeros((rest_pos.len(), rest_pos.len()));
        let mut v_new: CVec = Array1::zeros(rest_pos.len());
        for (i, &pi) in rest_pos.iter().enumerate() {
            let b_col_i: CVec = Array1::from_iter(slab_pos.iter().map(|&p| m_act[[p, pi]]));
            for (j, _) in rest_pos.iter().enumerate() {
                m_new[[i, j]] = m_act[[pi, rest_pos[j]]] - b_col_i.dot(&sols[j]);
            }
            v_new[i] = v_act[pi] - b_col_i.dot(&x_v);
        }
        m_act = m_new;
        v_act = v_new;
        active = rest_pos.iter().map(|&p| active[p]).collect();
    }
    debug_assert!(active.is_empty());
    let exponent = quad - c_total;
    Ok((Complex64::new(0.0, 0.5) * exponent).exp())
}

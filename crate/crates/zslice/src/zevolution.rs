//! z-evolution under a non-hermitian H'.
//!
//! The right Schrodinger state flows with exp(-i H' z) while the left
//! state flows with exp(-i H'^dag z); the two coincide at z = 0 and their
//! raw bilinear form <left|op|right> reproduces Heisenberg-picture matrix
//! elements of the transported operator exp(i H' z) op exp(-i H' z).
//!
//! Matrix exponentials are computed from a cached eigendecomposition of
//! H'. Construction fails loudly when the eigenvector matrix is too
//! ill-conditioned for the decomposition to be trusted.

use ndarray::Array2;
use ndarray_linalg::{Eig, Inverse};
use num_complex::Complex64;

use crate::linalg::{commutator, dagger, max_abs, norm2_vec, CMat, CVec};
use crate::{Error, Result};

/// Conditioning threshold on the eigenvector matrix of H'.
pub const COND_LIMIT: f64 = 1e12;

/// Left/right Schrodinger pair at evolution parameter z.
#[derive(Debug, Clone)]
pub struct StatePair {
    pub left: CVec,
    pub right: CVec,
    pub z: f64,
}

impl StatePair {
    /// Pair at z = 0, where left and right coincide.
    pub fn at_origin(state: CVec) -> Self {
        StatePair {
            left: state.clone(),
            right: state,
            z: 0.0,
        }
    }
}

/// H' with its cached eigendecomposition.
#[derive(Debug, Clone)]
pub struct EvolutionContext {
    pub hprime: CMat,
    eigenvalues: CVec,
    vectors: CMat,
    vectors_inv: CMat,
    /// one-norm condition estimate of the eigenvector matrix
    pub condition: f64,
}

fn one_norm(a: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|x| x.norm()).sum();
        best = best.max(s);
    }
    best
}

impl EvolutionContext {
    pub fn new(hprime: CMat) -> Result<Self> {
        if hprime.nrows() != hprime.ncols() {
            return Err(Error::Dimension(format!(
                "H' must be square, got {:?}",
                hprime.dim()
            )));
        }
        let (eigenvalues, vectors) = hprime.eig()?;
        let vectors_inv = vectors.inv()?;
        let condition = one_norm(&vectors) * one_norm(&vectors_inv);
        if !condition.is_finite() || condition > COND_LIMIT {
            return Err(Error::Conditioning(condition));
        }
        Ok(EvolutionContext {
            hprime,
            eigenvalues,
            vectors,
            vectors_inv,
            condition,
        })
    }

    pub fn dim(&self) -> usize {
        self.hprime.nrows()
    }

    /// exp(s H') via the cached decomposition.
    pub fn exp_scaled(&self, s: Complex64) -> CMat {
        let n = self.dim();
        let mut d: CMat = Array2::zeros((n, n));
        for j in 0..n {
            d[[j, j]] = (s * self.eigenvalues[j]).exp();
        }
        self.vectors.dot(&d).dot(&self.vectors_inv)
    }

    /// exp(-i H' z), the right-flow propagator.
    pub fn propagator(&self, z: f64) -> CMat {
        self.exp_scaled(Complex64::new(0.0, -z))
    }
}

/// Advance both members of the pair by dz: right with exp(-i H' dz), left
/// with exp(-i H'^dag dz).
pub fn evolve_pair(p: &StatePair, dz: f64, ctx: &EvolutionContext) -> Result<StatePair> {
    if p.left.len() != ctx.dim() || p.right.len() != ctx.dim() {
        return Err(Error::Dimension(format!(
            "state length {} vs H' dimension {}",
            p.right.len(),
            ctx.dim()
        )));
    }
    // exp(-i H'^dag dz) = [exp(i H' dz)]^dag
    let u_right = ctx.propagator(dz);
    let u_left = dagger(&ctx.propagator(-dz));
    Ok(StatePair {
        left: u_left.dot(&p.left),
        right: u_right.dot(&p.right),
        z: p.z + dz,
    })
}

/// Heisenberg transport exp(i H' z) op exp(-i H' z): a similarity
/// transform, so the spectrum of op is preserved up to roundoff.
pub fn heisenberg_transport(op: &CMat, z: f64, ctx: &EvolutionContext) -> Result<CMat> {
    if op.dim() != ctx.hprime.dim() {
        return Err(Error::Dimension(format!(
            "operator is {:?}, H' is {:?}",
            op.dim(),
            ctx.hprime.dim()
        )));
    }
    Ok(ctx.propagator(-z).dot(op).dot(&ctx.propagator(z)))
}

/// Raw bilinear matrix element <left|op|right>; no normalization applied.
pub fn expectation(p: &StatePair, op: &CMat) -> Result<Complex64> {
    if op.nrows() != p.left.len() || op.ncols() != p.right.len() {
        return Err(Error::Dimension(format!(
            "operator is {:?}, states have lengths {} and {}",
            op.dim(),
            p.left.len(),
            p.right.len()
        )));
    }
    Ok(p.left.mapv(|x| x.conj()).dot(&op.dot(&p.right)))
}

/// Eigenvector structure of a transported diagonal operator.
#[derive(Debug, Clone)]
pub struct LeftRightReport {
    /// max over eigenpairs of ||phi(z) r - value r|| / ||r||
    pub right_residual: f64,
    /// max over eigenpairs of ||l phi(z) - value l|| / ||l||
    pub left_residual: f64,
    /// max over eigenpairs of ||r - l^dag|| with both normalized
    pub overlap_defect: f64,
}

/// For diagonal `op`, checks that exp(i H' z) e_j is a right-eigenvector
/// and e_j^T exp(-i H' z) a left-eigenvector of the transported operator
/// with the unchanged eigenvalue op[j][j].
pub fn left_right_eigen_check(op: &CMat, z: f64, ctx: &EvolutionContext) -> Result<LeftRightReport> {
    let n = ctx.dim();
    if op.dim() != (n, n) {
        return Err(Error::Dimension(format!(
            "operator is {:?}, H' is {:?}",
            op.dim(),
            ctx.hprime.dim()
        )));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && op[[i, j]].norm() > 1e-14 {
                return Err(Error::Precondition(
                    "left_right_eigen_check requires a diagonal operator".into(),
                ));
            }
        }
    }
    let transported = heisenberg_transport(op, z, ctx)?;
    let u_forward = ctx.propagator(-z); // exp(i H' z)
    let u_backward = ctx.propagator(z); // exp(-i H' z)
    let mut right_residual = 0.0f64;
    let mut left_residual = 0.0f64;
    let mut overlap_defect = 0.0f64;
    for j in 0..n {
        let value = op[[j, j]];
        let right: CVec = u_forward.column(j).to_owned();
        let left: CVec = u_backward.row(j).to_owned();
        let rn = norm2_vec(&right);
        let ln = norm2_vec(&left);
        let r_res = &transported.dot(&right) - &right.mapv(|x| x * value);
        let l_res = &transported.t().dot(&left) - &left.mapv(|x| x * value);
        right_residual = right_residual.max(norm2_vec(&r_res) / rn);
        left_residual = left_residual.max(norm2_vec(&l_res) / ln);
        let defect = &right.mapv(|x| x / rn) - &left.mapv(|x| x.conj() / ln);
        overlap_defect = overlap_defect.max(norm2_vec(&defect));
    }
    Ok(LeftRightReport {
        right_residual,
        left_residual,
        overlap_defect,
    })
}

/// Max-abs entry of H' H'^dag - H'^dag H'.
pub fn normality_check(hprime: &CMat) -> f64 {
    max_abs(&commutator(hprime, &dagger(hprime)))
}

/// Fixed non-hermitian 2x2 fixture S diag(1+i, 2-i) S^{-1} with
/// S = [[1, 1], [0, 1]].
pub fn fixture_2x2() -> CMat {
    let s = ndarray::array![
        [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    ];
    let s_inv = ndarray::array![
        [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    ];
    let d = ndarray::array![
        [Complex64::new(1.0, 1.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(2.0, -1.0)],
    ];
    s.dot(&d).dot(&s_inv)
}

/// Seeded 4x4 non-hermitian fixture S diag(d) S^{-1} with a well-
/// conditioned random S and mixed complex eigenvalues.
pub fn fixture_4x4(seed: u64) -> Result<CMat> {
    let mut rng = crate::rng::DetRng::new(seed);
    let n = 4;
    // identity plus a small random perturbation keeps S well conditioned
    let mut s: CMat = crate::linalg::identity(n);
    for i in 0..n {
        for j in 0..n {
            s[[i, j]] += Complex64::new(0.3 * rng.next_sym(), 0.3 * rng.next_sym());
        }
    }
    let s_inv = s.inv()?;
    let evs = [
        Complex64::new(1.0, 0.5),
        Complex64::new(2.0, -0.7),
        Complex64::new(-0.5, 0.3),
        Complex64::new(0.7, 0.0),
    ];
    let mut d: CMat = Array2::zeros((n, n));
    for (j, e) in evs.iter().enumerate() {
        d[[j, j]] = *e;
    }
    Ok(s.dot(&d).dot(&s_inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use crate::rng::DetRng;
    use ndarray::Array1;
    use approx::assert_abs_diff_eq;
    use ndarray_linalg::Eig;

    /// Independent matrix exponential: Taylor series with scaling and
    /// squaring, no eigendecomposition involved.
    fn exp_series(a: &CMat) -> CMat {
        let n = a.nrows();
        let scale = {
            let norm = max_abs(a) * n as f64;
            let mut k = 0u32;
            while norm / 2f64.powi(k as i32) > 0.5 {
                k += 1;
            }
            k
        };
        let b = a.mapv(|x| x / 2f64.powi(scale as i32));
        let mut term = identity(n);
        let mut sum = identity(n);
        for k in 1..30 {
            term = term.dot(&b).mapv(|x| x / k as f64);
            sum = sum + &term;
        }
        for _ in 0..scale {
            sum = sum.dot(&sum);
        }
        sum
    }

    fn rand_state(rng: &mut DetRng, n: usize) -> CVec {
        Array1::from_iter((0..n).map(|_| Complex64::new(rng.next_sym(), rng.next_sym())))
    }

    #[test]
    fn propagator_matches_series_oracle() {
        for h in [fixture_2x2(), fixture_4x4(3).unwrap()] {
            let ctx = EvolutionContext::new(h.clone()).unwrap();
            for z in [0.3, -1.1] {
                let expected = exp_series(&h.mapv(|x| x * Complex64::new(0.0, -z)));
                let got = ctx.propagator(z);
                assert!(max_abs(&(&got - &expected)) <= 1e-10);
            }
        }
    }

    #[test]
    fn dz_zero_is_identity() {
        let ctx = EvolutionContext::new(fixture_2x2()).unwrap();
        let mut rng = DetRng::new(5);
        let p = StatePair::at_origin(rand_state(&mut rng, 2));
        let q = evolve_pair(&p, 0.0, &ctx).unwrap();
        assert!(norm2_vec(&(&q.right - &p.right)) <= 1e-14);
        assert!(norm2_vec(&(&q.left - &p.left)) <= 1e-14);
        assert_eq!(q.z, 0.0);
    }

    #[test]
    fn group_law_both_flows() {
        let ctx = EvolutionContext::new(fixture_4x4(9).unwrap()).unwrap();
        let mut rng = DetRng::new(6);
        let p = StatePair::at_origin(rand_state(&mut rng, 4));
        let ab = evolve_pair(&evolve_pair(&p, 0.4, &ctx).unwrap(), 0.7, &ctx).unwrap();
        let once = evolve_pair(&p, 1.1, &ctx).unwrap();
        assert!(norm2_vec(&(&ab.right - &once.right)) <= 1e-10);
        assert!(norm2_vec(&(&ab.left - &once.left)) <= 1e-10);
        assert_abs_diff_eq!(ab.z, once.z, epsilon = 1e-14);
    }

    #[test]
    fn hermitian_case_is_unitary() {
        // hermitian fixture: left and right flows coincide, norm conserved
        let h = ndarray::array![
            [Complex64::new(1.0, 0.0), Complex64::new(0.2, 0.3)],
            [Complex64::new(0.2, -0.3), Complex64::new(-0.5, 0.0)],
        ];
        let ctx = EvolutionContext::new(h).unwrap();
        let mut rng = DetRng::new(7);
        let v = rand_state(&mut rng, 2);
        let n0 = norm2_vec(&v);
        let mut p = StatePair::at_origin(v);
        for _ in 0..5 {
            p = evolve_pair(&p, 0.3, &ctx).unwrap();
            assert!(norm2_vec(&(&p.left - &p.right)) <= 1e-12);
            assert_abs_diff_eq!(norm2_vec(&p.right), n0, epsilon = 1e-12);
        }
    }

    #[test]
    fn schroedinger_equals_heisenberg() {
        let ctx = EvolutionContext::new(fixture_4x4(11).unwrap()).unwrap();
        let mut rng = DetRng::new(12);
        for _ in 0..50 {
            // random hermitian op
            let mut op: CMat = Array2::zeros((4, 4));
            for i in 0..4 {
                for j in i..4 {
                    let x = Complex64::new(rng.next_sym(), if i == j { 0.0 } else { rng.next_sym() });
                    op[[i, j]] = x;
                    op[[j, i]] = x.conj();
                }
            }
            let v = rand_state(&mut rng, 4);
            let z = 0.9;
            let p = evolve_pair(&StatePair::at_origin(v.clone()), z, &ctx).unwrap();
            let schroedinger = expectation(&p, &op).unwrap();
            let transported = heisenberg_transport(&op, z, &ctx).unwrap();
            let heisenberg = v.mapv(|x| x.conj()).dot(&transported.dot(&v));
            assert!((schroedinger - heisenberg).norm() <= 1e-10);
        }
    }

    #[test]
    fn expectation_identity_unit_vector() {
        let mut v: CVec = Array1::zeros(3);
        v[0] = Complex64::new(1.0, 0.0);
        let p = StatePair::at_origin(v);
        let got = expectation(&p, &identity(3)).unwrap();
        assert_abs_diff_eq!(got.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn transported_spectrum_is_preserved() {
        let ctx = EvolutionContext::new(fixture_4x4(21).unwrap()).unwrap();
        // diagonal "phi" with distinct real eigenvalues
        let mut phi: CMat = Array2::zeros((4, 4));
        for j in 0..4 {
            phi[[j, j]] = Complex64::new(j as f64 - 1.5, 0.0);
        }
        let moved = heisenberg_transport(&phi, 1.3, &ctx).unwrap();
        // becomes non-hermitian under non-hermitian H'
        assert!(max_abs(&(&moved - &dagger(&moved))) > 1e-3);
        // yet the spectrum stays real and unchanged
        let (evs, _) = moved.eig().unwrap();
        let mut re: Vec<f64> = evs.iter().map(|e| e.re).collect();
        re.sort_by(f64::total_cmp);
        for (j, e) in re.iter().enumerate() {
            assert_abs_diff_eq!(*e, j as f64 - 1.5, epsilon = 1e-8);
        }
        for e in evs.iter() {
            assert_abs_diff_eq!(e.im, 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn left_right_structure() {
        let mut phi: CMat = Array2::zeros((4, 4));
        for j in 0..4 {
            phi[[j, j]] = Complex64::new(j as f64, 0.0);
        }
        // z = 0: left = right^dag, zero residuals
        let ctx = EvolutionContext::new(fixture_4x4(33).unwrap()).unwrap();
        let r0 = left_right_eigen_check(&phi, 0.0, &ctx).unwrap();
        assert!(r0.right_residual <= 1e-12);
        assert!(r0.left_residual <= 1e-12);
        assert!(r0.overlap_defect <= 1e-12);
        // non-hermitian, z = 1: eigen residuals small, defect visibly nonzero
        let r1 = left_right_eigen_check(&phi, 1.0, &ctx).unwrap();
        assert!(r1.right_residual <= 1e-9, "right residual {}", r1.right_residual);
        assert!(r1.left_residual <= 1e-9, "left residual {}", r1.left_residual);
        assert!(r1.overlap_defect > 1e-3, "overlap defect {}", r1.overlap_defect);
        // hermitian H': defect stays zero for all z
        let h = ndarray::array![
            [Complex64::new(0.4, 0.0), Complex64::new(0.1, 0.2)],
            [Complex64::new(0.1, -0.2), Complex64::new(-0.3, 0.0)],
        ];
        let hctx = EvolutionContext::new(h).unwrap();
        let phi2 = ndarray::array![
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0)],
        ];
        let rh = left_right_eigen_check(&phi2, 1.7, &hctx).unwrap();
        assert!(rh.overlap_defect <= 1e-10);
        // non-diagonal operator rejected
        let mut bad = phi.clone();
        bad[[0, 1]] = Complex64::new(1.0, 0.0);
        assert!(left_right_eigen_check(&bad, 1.0, &ctx).is_err());
    }

    #[test]
    fn normality_cases() {
        // hermitian: exactly zero
        let h = ndarray::array![
            [Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.5)],
            [Complex64::new(0.5, -0.5), Complex64::new(2.0, 0.0)],
        ];
        assert_eq!(normality_check(&h), 0.0);
        // normal non-hermitian: unitary rotation of a complex diagonal
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let u = ndarray::array![
            [Complex64::new(c, 0.0), Complex64::new(c, 0.0)],
            [Complex64::new(-c, 0.0), Complex64::new(c, 0.0)],
        ];
        let d = ndarray::array![
            [Complex64::new(1.0, 2.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.5)],
        ];
        let normal = u.dot(&d).dot(&dagger(&u));
        assert!(normality_check(&normal) <= 1e-12);
        // the shipped 2x2 fixture is genuinely non-normal
        assert!(normality_check(&fixture_2x2()) > 0.1);
    }

    #[test]
    fn conditioning_guard() {
        // nearly defective Jordan-type matrix: huge eigenvector condition
        let h = ndarray::array![
            [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(1.0 + 1e-14, 0.0)],
        ];
        match EvolutionContext::new(h) {
            Err(Error::Conditioning(c)) => assert!(c > COND_LIMIT),
            other => panic!("expected conditioning error, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatches_rejected() {
        let ctx = EvolutionContext::new(fixture_2x2()).unwrap();
        let p = StatePair::at_origin(Array1::zeros(3));
        assert!(evolve_pair(&p, 0.1, &ctx).is_err());
        assert!(heisenberg_transport(&identity(3), 0.1, &ctx).is_err());
        assert!(expectation(&p, &identity(2)).is_err());
    }
}

//! Feynman propagator by three independent routes.
//!
//! A z-ordered mode integral over (k_x, k_y, k_t), a t-ordered mode
//! integral over (k_x, k_y, k_z), and a direct 4D momentum integral. All
//! three are midpoint-rule quadratures on offset tensor grids; the offset
//! keeps the nodes off k = 0 and off the lambda = 0 hyperboloid. Every
//! value carries an error estimate from a half-resolution re-evaluation.
//!
//! Sums are chunked along the outermost axis and may be evaluated on
//! several threads (capped by the ZSLICE_THREADS environment variable);
//! chunk boundaries and the final reduction order are fixed by the node
//! count alone, so results are bitwise deterministic for any thread count.

use num_complex::Complex64;

use crate::dispersion::{lambda_of, MassParam, MomentumTriple};
use crate::{Error, Result};

/// Spacetime point (x, y, z, t) with c = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub t: f64,
}

impl SpacetimePoint {
    pub fn new(x: f64, y: f64, z: f64, t: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite() && t.is_finite()) {
            return Err(Error::Domain("non-finite spacetime coordinate".into()));
        }
        Ok(SpacetimePoint { x, y, z, t })
    }
}

/// Midpoint-rule grid: per-axis momentum bound, node count, and the
/// fractional offset of the nodes inside each cell.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub cutoff: f64,
    pub nodes: usize,
    pub offset: f64,
}

impl QuadratureSpec {
    pub fn new(cutoff: f64, nodes: usize) -> Result<Self> {
        QuadratureSpec::with_offset(cutoff, nodes, 0.5)
    }

    pub fn with_offset(cutoff: f64, nodes: usize, offset: f64) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(Error::Precondition(format!("cutoff must be > 0, got {cutoff}")));
        }
        if nodes < 16 {
            return Err(Error::Precondition(format!("nodes must be >= 16, got {nodes}")));
        }
        if !(offset > 0.0 && offset < 1.0) {
            return Err(Error::Precondition(format!(
                "offset must lie in (0, 1), got {offset}"
            )));
        }
        Ok(QuadratureSpec { cutoff, nodes, offset })
    }

    fn step(&self, nodes: usize) -> f64 {
        2.0 * self.cutoff / nodes as f64
    }

    fn axis(&self, nodes: usize) -> Vec<f64> {
        let h = self.step(nodes);
        (0..nodes)
            .map(|i| -self.cutoff + (i as f64 + self.offset) * h)
            .collect()
    }
}

/// Which integral produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ZForm,
    TForm,
    FourD,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ZForm => "zform",
            Method::TForm => "tform",
            Method::FourD => "fourd",
        }
    }
}

/// Propagator value with its method tag and quadrature error estimate.
#[derive(Debug, Clone, Copy)]
pub struct PropagatorValue {
    pub value: Complex64,
    pub method: Method,
    pub error_estimate: f64,
}

/// Thread cap from ZSLICE_THREADS, default 1.
fn thread_cap() -> usize {
    std::env::var("ZSLICE_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Sums f(0) + ... + f(n-1) where each term is itself a sequential chunk
/// sum. Chunks are defined by the index alone and reduced in index order,
/// independent of how many threads execute them.
fn sum_indexed<F>(n: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    let threads = thread_cap().min(n.max(1));
    if threads <= 1 {
        return (0..n).map(&f).fold(Complex64::new(0.0, 0.0), |a, b| a + b);
    }
    let mut partials = vec![Complex64::new(0.0, 0.0); n];
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<&mut Complex64>> =
        partials.iter_mut().map(std::sync::Mutex::new).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= n {
                    break;
                }
                **slots[i].lock().unwrap() = f(i);
            });
        }
    });
    drop(slots);
    partials.into_iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b)
}

/// [e^{i lambda z} Theta(z) + e^{-i lambda z} Theta(-z)] / (2 lambda),
/// with Theta(0) = 1/2 (both branches coincide at z = 0).
pub fn bracket_closed(lambda: Complex64, z: f64) -> Result<Complex64> {
    if lambda.norm() == 0.0 {
        return Err(Error::Pole("bracket pole at lambda = 0".into()));
    }
    let i = Complex64::new(0.0, 1.0);
    let num = if z > 0.0 {
        (i * lambda * z).exp()
    } else if z < 0.0 {
        (-i * lambda * z).exp()
    } else {
        Complex64::new(1.0, 0.0)
    };
    Ok(num / (2.0 * lambda))
}

/// -i integral dk_z/(2 pi) e^{-i k_z z} / (k_z^2 - lambda^2) over
/// [-cutoff, cutoff] by the midpoint rule; converges to `bracket_closed`
/// as the cutoff and node count grow.
pub fn kz_contour_numeric(lambda: Complex64, z: f64, q: &QuadratureSpec) -> Result<Complex64> {
    if lambda.im <= 0.0 {
        return Err(Error::Precondition(format!(
            "contour integrand needs Im(lambda) > 0, got {}",
            lambda.im
        )));
    }
    let nodes = q.axis(q.nodes);
    let h = q.step(q.nodes);
    let l2 = lambda * lambda;
    let sum = sum_indexed(q.nodes, |idx| {
        let k = nodes[idx];
        Complex64::from_polar(1.0, -k * z) / (Complex64::new(k * k, 0.0) - l2)
    });
    Ok(Complex64::new(0.0, -1.0) * sum * h / (2.0 * std::f64::consts::PI))
}

fn require_regulated(m: MassParam) -> Result<()> {
    if m.eps <= 0.0 {
        return Err(Error::Precondition(
            "propagator quadrature requires eps > 0".into(),
        ));
    }
    Ok(())
}

fn zform_at(p: SpacetimePoint, m: MassParam, q: &QuadratureSpec, nodes: usize) -> Complex64 {
    let axis = q.axis(nodes);
    let h = q.step(nodes);
    // separable per-axis phases of e^{-i (k_x x + k_y y - k_t t)}
    let px: Vec<Complex64> = axis.iter().map(|k| Complex64::from_polar(1.0, -k * p.x)).collect();
    let py: Vec<Complex64> = axis.iter().map(|k| Complex64::from_polar(1.0, -k * p.y)).collect();
    let pt: Vec<Complex64> = axis.iter().map(|k| Complex64::from_polar(1.0, k * p.t)).collect();
    let sum = sum_indexed(nodes, |ix| {
        let kx = axis[ix];
        let mut acc = Complex64::new(0.0, 0.0);
        for iy in 0..nodes {
            let ky = axis[iy];
            let pxy = px[ix] * py[iy];
            for it in 0..nodes {
                let kp = MomentumTriple { kx, ky, kt: axis[it] };
                let lambda = lambda_of(kp, m).lambda;
                let br = bracket_closed(lambda, p.z).expect("offset grid avoids lambda = 0");
                acc += pxy * pt[it] * br;
            }
        }
        acc
    });
    let two_pi = 2.0 * std::f64::consts::PI;
    Complex64::new(0.0, -1.0) * sum * h.powi(3) / two_pi.powi(3)
}

/// z-ordered mode integral over (k_x, k_y, k_t).
pub fn propagator_zform(p: SpacetimePoint, m: MassParam, q: &QuadratureSpec) -> Result<PropagatorValue> {
    require_regulated(m)?;
    let value = zform_at(p, m, q, q.nodes);
    let coarse = zform_at(p, m, q, q.nodes / 2);
    Ok(PropagatorValue {
        value,
        method: Method::ZForm,
        error_estimate: (value - coarse).norm(),
    })
}

fn tform_at(p: SpacetimePoint, m: MassParam, q: &QuadratureSpec, nodes: usize) -> Complex64 {
    let axis = q.axis(nodes);
    let h = q.step(nodes);
    let px: Vec<Complex64> = axis.iter().map(|k| Complex64::from_polar(1.0, k * p.x)).collect();
    let py: Vec<Complex64> = axis.iter().map(|k| Complex64::from_polar(1.0, k * p.y)).collect();
    let pz: Vec<Complex64> = axis.iter().map(|k| Complex64::from_polar(1.0, k * p.z)).collect();
    let i = Complex64::new(0.0, 1.0);
    let m2 = Complex64::new(m.m * m.m, -m.eps);
    let sum = sum_indexed(nodes, |ix| {
        let kx = axis[ix];
        let mut acc = Complex64::new(0.0, 0.0);
        for iy in 0..nodes {
            let ky = axis[iy];
            let pxy = px[ix] * py[iy];
            for iz in 0..nodes {
                let kz = axis[iz];
                // omega carries the same m^2 - i eps as lambda does
                let w = (Complex64::new(kx * kx + ky * ky + kz * kz, 0.0) + m2).sqrt();
                let br = if p.t >= 0.0 {
                    (-i * w * p.t).exp() / (2.0 * w)
                } else {
                    (i * w * p.t).exp() / (2.0 * w)
                };
                acc += pxy * pz[iz] * br;
            }
        }
        acc
    });
    let two_pi = 2.0 * std::f64::consts::PI;
    Complex64::new(0.0, -1.0) * sum * h.powi(3) / two_pi.powi(3)
}

/// t-ordered mode integral over (k_x, k_y, k_z).
pub fn propagator_tform(p: SpacetimePoint, m: MassParam, q: &QuadratureSpec) -> Result<PropagatorValue> {
    require_regulated(m)?;
    let value = tform_at(p, m, q, q.nodes);
    let coarse = tform_at(p, m, q, q.nodes / 2);
    Ok(PropagatorValue {
        value,
        method: Method::TForm,
        error_estimate: (value - coarse).norm(),
    })
}

/// 1 / (k_t^2 - k_x^2 - k_y^2 - k_z^2 - m^2 + i eps).
pub fn momentum_propagator(k: [f64; 4], m: MassParam) -> Result<Complex64> {
    let [kx, ky, kz, kt] = k;
    let den = Complex64::new(kt * kt - kx * kx - ky * ky - kz * kz - m.m * m.m, m.eps);
    if den.norm() == 0.0 {
        return Err(Error::Pole("on-shell momentum with eps = 0".into()));
    }
    Ok(den.inv())
}

fn fourd_at(p: SpacetimePoint, m: MassParam, q: &QuadratureSpec, nodes: usize) -> Complex64 {
    let axis = q.axis(nodes);
    let h = q.step(nodes);
    let px: Vec<Complex64> = axis.iter().map(|k| Complex64::from_polar(1.0, -k * p.x)).collect();
    let py: Vec<Complex64> = axis.iter().map(|k| Complex64::from_polar(1.0, -k * p.y)).collect();
    let pz: Vec<Complex64> = axis.iter().map(|k| Complex64::from_polar(1.0, -k * p.z)).collect();
    let pt: Vec<Complex64> = axis.iter().map(|k| Complex64::from_polar(1.0, k * p.t)).collect();
    let m2 = m.m * m.m;
    let sum = sum_indexed(nodes, |ix| {
        let kx = axis[ix];
        let mut acc = Complex64::new(0.0, 0.0);
        for iy in 0..nodes {
            let ky = axis[iy];
            let pxy = px[ix] * py[iy];
            for iz in 0..nodes {
                let kz = axis[iz];
                let pxyz = pxy * pz[iz];
                let sq = kx * kx + ky * ky + kz * kz + m2;
                for it in 0..nodes {
                    let kt = axis[it];
                    let den = Complex64::new(sq - kt * kt, -m.eps);
                    acc += pxyz * pt[it] / den;
                }
            }
        }
        acc
    });
    let two_pi = 2.0 * std::f64::consts::PI;
    -sum * h.powi(4) / two_pi.powi(4)
}

/// Direct 4D momentum integral with the Feynman denominator.
pub fn propagator_4d(p: SpacetimePoint, m: MassParam, q: &QuadratureSpec) -> Result<PropagatorValue> {
    require_regulated(m)?;
    let value = fourd_at(p, m, q, q.nodes);
    let coarse = fourd_at(p, m, q, q.nodes / 2);
    Ok(PropagatorValue {
        value,
        method: Method::FourD,
        error_estimate: (value - coarse).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m_reg() -> MassParam {
        MassParam::new(1.0, 0.1).unwrap()
    }

    #[test]
    fn bracket_closed_special_values() {
        let got = bracket_closed(Complex64::new(1.0, 0.0), 0.0).unwrap();
        assert_abs_diff_eq!(got.re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-15);

        // lambda = i, z = 1: e^{-1} / (2i)
        let got = bracket_closed(Complex64::new(0.0, 1.0), 1.0).unwrap();
        assert_abs_diff_eq!(got.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(got.im, -(-1.0f64).exp() / 2.0, epsilon = 1e-10);

        // lambda = 2, z = -3: e^{6i} / 4
        let got = bracket_closed(Complex64::new(2.0, 0.0), -3.0).unwrap();
        assert_abs_diff_eq!(got.re, 6.0f64.cos() / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(got.im, 6.0f64.sin() / 4.0, epsilon = 1e-15);

        assert!(bracket_closed(Complex64::new(0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn contour_matches_closed_form() {
        let q = QuadratureSpec::new(200.0, 200_000).unwrap();
        let l = Complex64::new(1.0, 0.1);
        for z in [1.0, -1.0] {
            let numeric = kz_contour_numeric(l, z, &q).unwrap();
            let exact = bracket_closed(l, z).unwrap();
            assert!((numeric - exact).norm() <= 1e-3);
        }
        assert!(kz_contour_numeric(Complex64::new(1.0, 0.0), 1.0, &q).is_err());
    }

    #[test]
    fn contour_error_shrinks_with_cutoff() {
        let l = Complex64::new(1.0, 0.1);
        let z = 0.5;
        let exact = bracket_closed(l, z).unwrap();
        let mut last = f64::INFINITY;
        for doubling in 0..3 {
            let cutoff = 100.0 * 2f64.powi(doubling);
            // fixed node density across doublings
            let q = QuadratureSpec::new(cutoff, 50_000 * (1 << doubling)).unwrap();
            let err = (kz_contour_numeric(l, z, &q).unwrap() - exact).norm();
            assert!(err < last, "error {err} did not shrink below {last}");
            last = err;
        }
    }

    #[test]
    fn zform_reference_value_at_origin() {
        // frozen from an independent implementation of the same quadrature
        let q = QuadratureSpec::new(6.0, 48).unwrap();
        let p = SpacetimePoint::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let v = propagator_zform(p, m_reg(), &q).unwrap();
        assert_abs_diff_eq!(v.value.re, -0.84531, epsilon = 1e-4);
        assert_abs_diff_eq!(v.value.im, -0.41999, epsilon = 1e-4);
        assert!(v.error_estimate.is_finite());
    }

    #[test]
    fn tform_reference_value_at_origin() {
        let q = QuadratureSpec::new(6.0, 48).unwrap();
        let p = SpacetimePoint::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let v = propagator_tform(p, m_reg(), &q).unwrap();
        assert_abs_diff_eq!(v.value.re, 0.00214, epsilon = 1e-4);
        assert_abs_diff_eq!(v.value.im, -0.66322, epsilon = 1e-4);
    }

    #[test]
    fn fourd_reference_value_at_origin() {
        let q = QuadratureSpec::new(6.0, 32).unwrap();
        let p = SpacetimePoint::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let v = propagator_4d(p, m_reg(), &q).unwrap();
        assert_abs_diff_eq!(v.value.re, -0.41261, epsilon = 1e-4);
        assert_abs_diff_eq!(v.value.im, -0.41798, epsilon = 1e-4);
    }

    #[test]
    fn zform_symmetries() {
        let q = QuadratureSpec::new(4.0, 16).unwrap();
        let m = m_reg();
        let a = propagator_zform(SpacetimePoint::new(0.4, 0.2, 0.5, 0.3).unwrap(), m, &q).unwrap();
        let b = propagator_zform(SpacetimePoint::new(-0.4, -0.2, 0.5, 0.3).unwrap(), m, &q).unwrap();
        assert!((a.value - b.value).norm() <= 1e-12);
        let c = propagator_zform(SpacetimePoint::new(0.4, 0.2, -0.5, 0.3).unwrap(), m, &q).unwrap();
        assert!((a.value - c.value).norm() <= 1e-12);
    }

    #[test]
    fn tform_symmetries() {
        let q = QuadratureSpec::new(4.0, 16).unwrap();
        let m = m_reg();
        let a = propagator_tform(SpacetimePoint::new(0.0, 0.0, 0.0, 0.6).unwrap(), m, &q).unwrap();
        let b = propagator_tform(SpacetimePoint::new(0.0, 0.0, 0.0, -0.6).unwrap(), m, &q).unwrap();
        assert!((a.value - b.value).norm() <= 1e-12);
        let c = propagator_tform(SpacetimePoint::new(1.0, 0.0, 0.0, 0.0).unwrap(), m, &q).unwrap();
        let d = propagator_tform(SpacetimePoint::new(0.0, 1.0, 0.0, 0.0).unwrap(), m, &q).unwrap();
        assert!((c.value - d.value).norm() <= 1e-12);
    }

    #[test]
    fn fourd_permutation_symmetry() {
        let q = QuadratureSpec::new(4.0, 16).unwrap();
        let m = m_reg();
        let a = propagator_4d(SpacetimePoint::new(0.7, 0.0, 0.0, 0.0).unwrap(), m, &q).unwrap();
        let b = propagator_4d(SpacetimePoint::new(0.0, 0.7, 0.0, 0.0).unwrap(), m, &q).unwrap();
        let c = propagator_4d(SpacetimePoint::new(0.0, 0.0, 0.7, 0.0).unwrap(), m, &q).unwrap();
        assert!((a.value - b.value).norm() <= 1e-12);
        assert!((a.value - c.value).norm() <= 1e-12);
    }

    #[test]
    fn momentum_propagator_values() {
        let got = momentum_propagator([0.0; 4], MassParam::bare(1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(got.re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-15);

        // on-shell, eps = 0.01: 1 / (0.01 i) = -100 i
        let m = MassParam::new(1.0, 0.01).unwrap();
        let w = (0.3f64 * 0.3 + 0.1 * 0.1 + 0.2 * 0.2 + 1.0).sqrt();
        let got = momentum_propagator([0.3, 0.1, 0.2, w], m).unwrap();
        assert_abs_diff_eq!(got.re, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(got.im, -100.0, epsilon = 1e-9);

        // on-shell, unregulated: pole error
        let bare = MassParam::bare(1.0).unwrap();
        assert!(momentum_propagator([0.0, 0.0, 0.0, 1.0], bare).is_err());
    }

    #[test]
    fn momentum_propagator_is_the_4d_kernel() {
        // definitional: the 4D integrand weight equals -momentum_propagator
        let m = m_reg();
        let k = [0.4, -0.7, 1.1, 0.9];
        let den = Complex64::new(
            k[0] * k[0] + k[1] * k[1] + k[2] * k[2] + m.m * m.m - k[3] * k[3],
            -m.eps,
        );
        let from_kernel = den.inv();
        let from_api = momentum_propagator(k, m).unwrap();
        assert!((from_kernel + from_api).norm() <= 1e-15);
    }

    #[test]
    fn eps_continuity() {
        let q = QuadratureSpec::new(4.0, 16).unwrap();
        let p = SpacetimePoint::new(0.3, 0.0, 0.3, 0.2).unwrap();
        let a = propagator_4d(p, MassParam::new(1.0, 0.1).unwrap(), &q).unwrap();
        let b = propagator_4d(p, MassParam::new(1.0, 0.05).unwrap(), &q).unwrap();
        let jump = (a.value - b.value).norm();
        assert!(jump <= 10.0 * (a.error_estimate + b.error_estimate).max(0.05));
    }

    #[test]
    fn preconditions_enforced() {
        let q = QuadratureSpec::new(4.0, 16).unwrap();
        let p = SpacetimePoint::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let bare = MassParam::bare(1.0).unwrap();
        assert!(propagator_zform(p, bare, &q).is_err());
        assert!(propagator_tform(p, bare, &q).is_err());
        assert!(propagator_4d(p, bare, &q).is_err());
        assert!(QuadratureSpec::new(0.0, 32).is_err());
        assert!(QuadratureSpec::new(4.0, 8).is_err());
        assert!(QuadratureSpec::with_offset(4.0, 32, 0.0).is_err());
        assert!(SpacetimePoint::new(f64::NAN, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn threaded_sum_is_bitwise_deterministic() {
        let q = QuadratureSpec::new(4.0, 16).unwrap();
        let p = SpacetimePoint::new(0.3, 0.3, 0.3, 0.8).unwrap();
        let baseline = propagator_zform(p, m_reg(), &q).unwrap().value;
        std::env::set_var("ZSLICE_THREADS", "3");
        let threaded = propagator_zform(p, m_reg(), &q).unwrap().value;
        std::env::remove_var("ZSLICE_THREADS");
        assert_eq!(baseline.re.to_bits(), threaded.re.to_bits());
        assert_eq!(baseline.im.to_bits(), threaded.im.to_bits());
    }
}

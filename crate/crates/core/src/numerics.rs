//! Dense complex linear-algebra primitives shared by every other module.
//!
//! Matrices are `nalgebra::DMatrix<Complex<f64>>`. The SVD comes from
//! nalgebra; this module fixes the ordering convention (descending singular
//! values, thin factors), the numerical-rank rule used by the pseudo-inverse
//! and the phase conventions (`arg(0) = 0`).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

const SVD_EPS: f64 = f64::EPSILON;
const SVD_MAX_ITERS: usize = 10_000;

/// Thin singular value decomposition `A = U diag(S) V^H`.
///
/// For an `m x n` input, `u` is `m x min(m, n)`, `v` is `n x min(m, n)` and
/// `s` holds the `min(m, n)` singular values in descending order. The phase
/// of each singular-vector pair is whatever the backend produced.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> CMatrix {
        let mut us = self.u.clone();
        for (j, sigma) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(*sigma);
        }
        us * self.v.adjoint()
    }

    /// Number of singular values above `max(m, n) * s_max * 1e-12`.
    pub fn rank(&self) -> usize {
        let tol = self.rank_tolerance();
        self.s.iter().filter(|&&x| x > tol).count()
    }

    pub fn rank_tolerance(&self) -> f64 {
        let dim = self.u.nrows().max(self.v.nrows()) as f64;
        let smax = self.s.first().copied().unwrap_or(0.0);
        dim * smax * 1e-12
    }
}

pub fn ensure_finite(a: &CMatrix) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidInput(format!(
            "matrix must be non-empty, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Relative reconstruction error above which a backend result is rejected.
/// Sound results sit near 1e-10 for the sizes used here, broken ones near 1e-2.
const SVD_RESIDUAL: f64 = 1e-8;

/// Thin SVD with a reconstruction check. The backend occasionally returns
/// factors that do not reproduce the input without reporting failure; such
/// results are rejected and the decomposition is retried on `A^H`, then on
/// the triangular factor of a QR decomposition, and finally with one-sided
/// Jacobi rotations.
pub fn svd(a: &CMatrix) -> Result<Svd> {
    ensure_finite(a)?;
    let (rows, cols) = a.shape();
    let scale = a.norm();
    let accept = |dec: Svd| ((dec.reconstruct() - a).norm() <= SVD_RESIDUAL * scale).then_some(dec);

    if let Some(dec) = raw_svd(a).and_then(accept) {
        return Ok(dec);
    }
    let swapped = raw_svd(&a.adjoint()).map(|d| Svd {
        u: d.v,
        s: d.s,
        v: d.u,
    });
    if let Some(dec) = swapped.and_then(accept) {
        return Ok(dec);
    }
    let via_qr = if rows >= cols {
        let qr = a.clone().qr();
        raw_svd(&qr.r()).map(|d| Svd {
            u: qr.q() * d.u,
            s: d.s,
            v: d.v,
        })
    } else {
        let qr = a.adjoint().qr();
        raw_svd(&qr.r()).map(|d| Svd {
            u: d.v,
            s: d.s,
            v: qr.q() * d.u,
        })
    };
    if let Some(dec) = via_qr.and_then(accept) {
        return Ok(dec);
    }
    let jacobi = if rows >= cols {
        jacobi_svd(a)
    } else {
        jacobi_svd(&a.adjoint()).map(|d| Svd {
            u: d.v,
            s: d.s,
            v: d.u,
        })
    };
    jacobi
        .and_then(accept)
        .ok_or(Error::NoConvergence { rows, cols })
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// One-sided Jacobi SVD for `rows >= cols`. Column pairs of `A V` are rotated
/// until mutually orthogonal; the column norms are then the singular values.
fn jacobi_svd(a: &CMatrix) -> Option<Svd> {
    let (rows, cols) = a.shape();
    let mut w = a.clone();
    let mut v = CMatrix::identity(cols, cols);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if !(g > SVD_EPS * (alpha * beta).sqrt()) {
                    continue;
                }
                rotated = true;
                // Rotating column q by conj(gamma)/|gamma| makes the pair's
                // inner product real; a real Jacobi rotation then zeroes it.
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for m in [&mut w, &mut v] {
                    for i in 0..m.nrows() {
                        let xp = m[(i, p)];
                        let xq = m[(i, q)] * phase;
                        m[(i, p)] = xp * c - xq * sn;
                        m[(i, q)] = xp * sn + xq * c;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }

    let norms: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let negligible = rows as f64 * SVD_EPS * norms[order[0]];

    let mut u = CMatrix::zeros(rows, cols);
    let mut v_sorted = CMatrix::zeros(cols, cols);
    let mut s = Vec::with_capacity(cols);
    for (filled, &src) in order.iter().enumerate() {
        v_sorted.set_column(filled, &v.column(src));
        s.push(norms[src]);
        if norms[src] > negligible {
            u.set_column(filled, &(w.column(src) / C64::new(norms[src], 0.0)));
        } else {
            // Numerically null direction: any unit vector orthogonal to the
            // columns already placed completes U.
            u.set_column(
                filled,
                &complement_vector(&u.columns(0, filled).clone_owned())?,
            );
        }
    }
    Some(Svd { u, s, v: v_sorted })
}

/// Unit vector orthogonal to the orthonormal columns of `basis`: the
/// standard basis vector with the largest residual after projection.
fn complement_vector(basis: &CMatrix) -> Option<CVector> {
    let n = basis.nrows();
    let residual = |e: usize| {
        let mut x = CVector::zeros(n);
        x[e] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for i in 0..basis.ncols() {
                let proj = basis.column(i).dotc(&x);
                x -= basis.column(i) * proj;
            }
        }
        x
    };
    let x = (0..n)
        .map(residual)
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))?;
    let norm = x.norm();
    (norm > 0.1).then(|| x / C64::new(norm, 0.0))
}

fn raw_svd(a: &CMatrix) -> Option<Svd> {
    let (rows, cols) = a.shape();
    let raw =
        nalgebra::linalg::SVD::try_new_unordered(a.clone(), true, true, SVD_EPS, SVD_MAX_ITERS)?;
    let u = raw.u.expect("left singular vectors requested");
    let v_t = raw.v_t.expect("right singular vectors requested");
    let sv = raw.singular_values;

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]).then(i.cmp(&j)));

    let rank = order.len();
    let mut u_sorted = CMatrix::zeros(rows, rank);
    let mut v_sorted = CMatrix::zeros(cols, rank);
    let mut s = Vec::with_capacity(rank);
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        v_sorted.set_column(dst, &v_t.row(src).adjoint());
        s.push(sv[src]);
    }
    Some(Svd {
        u: u_sorted,
        s,
        v: v_sorted,
    })
}

/// Moore-Penrose pseudo-inverse with rank threshold `max(m, n) * s_max * 1e-12`.
pub fn pseudo_inverse(a: &CMatrix) -> Result<CMatrix> {
    let dec = svd(a)?;
    let tol = dec.rank_tolerance();
    let mut v_scaled = dec.v.clone();
    for (j, &sigma) in dec.s.iter().enumerate() {
        let inv = if sigma > tol { 1.0 / sigma } else { 0.0 };
        v_scaled.column_mut(j).scale_mut(inv);
    }
    Ok(v_scaled * dec.u.adjoint())
}

/// `n x k` matrix with orthonormal columns drawn from the rotation-invariant
/// distribution (Gram-Schmidt on i.i.d. CN(0, 1) entries).
pub fn random_semi_unitary<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<CMatrix> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidInput(format!(
            "semi-unitary dimensions must be positive, got {n}x{k}"
        )));
    }
    if k > n {
        return Err(Error::InvalidInput(format!(
            "cannot draw {k} orthonormal columns in dimension {n}"
        )));
    }
    loop {
        let mut g = CMatrix::from_fn(n, k, |_, _| complex_gaussian(rng));
        if orthonormalize_columns(&mut g) {
            return Ok(g);
        }
        // A rank-deficient Gaussian draw has probability zero; redraw.
    }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. Returns false if
/// a column collapses.
fn orthonormalize_columns(m: &mut CMatrix) -> bool {
    for j in 0..m.ncols() {
        for _ in 0..2 {
            for i in 0..j {
                let qi = m.column(i).clone_owned();
                let proj = qi.dotc(&m.column(j));
                let mut cj = m.column_mut(j);
                cj -= qi * proj;
            }
        }
        let norm = m.column(j).norm();
        if !(norm > 1e-12) {
            return false;
        }
        m.column_mut(j).unscale_mut(norm);
    }
    true
}

/// Sample of CN(0, 1): independent real and imaginary parts with variance 1/2.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Phase of `z` in `(-pi, pi]`, with the convention `arg(0) = 0`.
#[inline]
pub fn phase(z: C64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        0.0
    } else {
        z.im.atan2(z.re)
    }
}

#[inline]
pub fn unit_phasor(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// `e^{j arg(z)}` under the `arg(0) = 0` convention.
#[inline]
pub fn phase_only(z: C64) -> C64 {
    unit_phasor(phase(z))
}

pub fn frobenius_sq(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Principal left-singular vector of `a`, rotated so that its first entry of
/// non-negligible modulus is real and positive.
pub fn principal_left_vector(a: &CMatrix) -> Result<CVector> {
    let dec = svd(a)?;
    let mut u = dec.u.column(0).clone_owned();
    canonicalize_phase(&mut u);
    Ok(u)
}

/// Removes the global phase ambiguity of a singular vector: the first entry
/// whose modulus exceeds `1e-12 * max|u_i|` becomes real positive.
pub fn canonicalize_phase(u: &mut CVector) {
    let max = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    if let Some(pivot) = u.iter().find(|z| z.norm() > 1e-12 * max) {
        let rot = pivot.conj() / pivot.norm();
        for z in u.iter_mut() {
            *z *= rot;
        }
    }
    // Entries that were exactly zero stay exactly zero after the rotation,
    // so the arg(0) = 0 convention still applies downstream.
}

/// Rows `rows` of `a`, in the given order.
pub fn select_rows(a: &CMatrix, rows: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), a.ncols(), |i, j| a[(rows[i], j)])
}

pub fn identity_deviation(a: &CMatrix, scale: f64) -> f64 {
    let n = a.nrows().min(a.ncols());
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let target = if i == j && i < n { scale } else { 0.0 };
            worst = worst.max((a[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    Ok(svd(a)?.s)
}

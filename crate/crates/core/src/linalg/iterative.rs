use nalgebra::DVector;

use super::LinearOperator;
use crate::{Error, Result};

pub const LSQR_DEFAULT_TOL: f64 = 1e-10;

pub fn default_lsqr_max_iters(rows: usize, cols: usize) -> usize {
    4 * rows.max(cols).max(1)
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// `‖b − Ax‖ / ‖b‖` (recursive estimate).
    pub relative_residual: f64,
    pub converged: bool,
}

/// Conjugate gradients for a symmetric positive definite operator, from zero.
pub fn cg_solve(
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    b: &DVector<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<CgOutcome> {
    cg_solve_from(apply, b, &DVector::zeros(b.len()), tol, max_iters)
}

/// Conjugate gradients from a warm start `x0`. Non-positive curvature along a
/// search direction is reported as [`Error::Breakdown`].
pub fn cg_solve_from(
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    b: &DVector<f64>,
    x0: &DVector<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<CgOutcome> {
    if x0.len() != b.len() {
        return Err(Error::dim(
            "warm start and right-hand side differ in length",
        ));
    }
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x: DVector::zeros(b.len()),
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        });
    }
    let mut x = x0.clone();
    let mut r = b - apply(&x);
    let mut rs = r.norm_squared();
    if rs.sqrt() <= tol * bnorm {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            relative_residual: rs.sqrt() / bnorm,
            converged: true,
        });
    }
    let mut p = r.clone();
    for it in 1..=max_iters {
        let ap = apply(&p);
        let curvature = p.dot(&ap);
        if curvature <= 0.0 || !curvature.is_finite() {
            return Err(Error::Breakdown {
                iteration: it,
                curvature,
            });
        }
        let alpha = rs / curvature;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rs_new = r.norm_squared();
        if rs_new.sqrt() <= tol * bnorm {
            return Ok(CgOutcome {
                x,
                iterations: it,
                relative_residual: rs_new.sqrt() / bnorm,
                converged: true,
            });
        }
        p = &r + &p * (rs_new / rs);
        rs = rs_new;
    }
    Ok(CgOutcome {
        x,
        iterations: max_iters,
        relative_residual: rs.sqrt() / bnorm,
        converged: false,
    })
}

#[derive(Debug, Clone)]
pub struct LsqrOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// Estimate of `‖(b; 0) − (A; damp·I) x‖`.
    pub residual_norm: f64,
    /// Estimate of `‖Aᵗ(b − Ax) − damp² x‖`.
    pub normal_residual_norm: f64,
    pub converged: bool,
}

/// LSQR (Paige–Saunders) for `min ‖Ax − b‖² + damp²‖x‖²`, started from zero.
///
/// Stops when either the system looks consistent
/// (`‖r‖ ≤ tol·‖b‖ + tol·‖A‖·‖x‖`) or the normal equations are solved
/// (`‖Aᵗr − damp²x‖ ≤ tol·‖A‖·‖r‖`), with `‖A‖` the running Frobenius estimate.
/// For an underdetermined consistent system the iterate is the minimum-norm
/// solution.
pub fn lsqr_solve<A: LinearOperator + ?Sized>(
    a: &A,
    b: &DVector<f64>,
    damp: f64,
    tol: f64,
    max_iters: usize,
) -> Result<LsqrOutcome> {
    let (m, n) = (a.nrows(), a.ncols());
    if b.len() != m {
        return Err(Error::dim(format!(
            "right-hand side has length {}, operator has {m} rows",
            b.len()
        )));
    }
    if damp < 0.0 {
        return Err(Error::invalid("damping must be nonnegative"));
    }
    let mut x = DVector::zeros(n);
    let mut u = b.clone();
    let bnorm = u.norm();
    let mut beta = bnorm;
    if beta == 0.0 {
        return Ok(LsqrOutcome {
            x,
            iterations: 0,
            residual_norm: 0.0,
            normal_residual_norm: 0.0,
            converged: true,
        });
    }
    u /= beta;
    let mut v = a.apply_transpose(&u);
    let mut alpha = v.norm();
    if alpha == 0.0 {
        // b is orthogonal to range(A); x = 0 solves the normal equations.
        return Ok(LsqrOutcome {
            x,
            iterations: 0,
            residual_norm: bnorm,
            normal_residual_norm: 0.0,
            converged: true,
        });
    }
    v /= alpha;
    let mut w = v.clone();
    let mut phibar = beta;
    let mut rhobar = alpha;
    let mut anorm_sq = 0.0f64;
    let mut res2 = 0.0f64;
    let damp_sq = damp * damp;

    let mut rnorm = bnorm;
    let mut arnorm = alpha * beta;
    for it in 1..=max_iters {
        // Bidiagonalization.
        u = a.apply(&v) - &u * alpha;
        beta = u.norm();
        anorm_sq += alpha * alpha + beta * beta + damp_sq;
        if beta > 0.0 {
            u /= beta;
            v = a.apply_transpose(&u) - &v * beta;
            alpha = v.norm();
            if alpha > 0.0 {
                v /= alpha;
            }
        }

        // Eliminate the damping term, then the subdiagonal.
        let (rhobar1, psi) = if damp > 0.0 {
            let rhobar1 = rhobar.hypot(damp);
            let cs1 = rhobar / rhobar1;
            let sn1 = damp / rhobar1;
            let psi = sn1 * phibar;
            phibar *= cs1;
            (rhobar1, psi)
        } else {
            (rhobar, 0.0)
        };
        let rho = rhobar1.hypot(beta);
        let cs = rhobar1 / rho;
        let sn = beta / rho;
        let theta = sn * alpha;
        rhobar = -cs * alpha;
        let phi = cs * phibar;
        phibar *= sn;
        let tau = sn * phi;

        x.axpy(phi / rho, &w, 1.0);
        w = &v - &w * (theta / rho);

        res2 += psi * psi;
        rnorm = (phibar * phibar + res2).sqrt();
        arnorm = alpha * tau.abs();
        let anorm = anorm_sq.sqrt();
        let xnorm = x.norm();

        let consistent = rnorm <= tol * bnorm + tol * anorm * xnorm;
        let normal = arnorm <= tol * anorm * rnorm;
        if consistent || normal || alpha == 0.0 || (beta == 0.0 && damp == 0.0) {
            return Ok(LsqrOutcome {
                x,
                iterations: it,
                residual_norm: rnorm,
                normal_residual_norm: arnorm,
                converged: true,
            });
        }
    }
    Ok(LsqrOutcome {
        x,
        iterations: max_iters,
        residual_norm: rnorm,
        normal_residual_norm: arnorm,
        converged: false,
    })
}

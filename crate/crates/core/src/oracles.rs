//! Slow reference methods used to check the solvers. Each one is simple
//! enough to verify by inspection and shares no code path with the MM
//! solvers beyond the basic projections and dense solves.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::linalg::{check_symmetric, dense_solve};
use crate::projections::{kinship_part, psd_part};
use crate::{Error, Result};

/// Largest dimension accepted by the `2ⁿ` enumeration oracles.
pub const ENUMERATION_LIMIT: usize = 16;
/// Largest dimension accepted by the simplex grid oracle.
pub const GRID_LIMIT: usize = 6;

/// A reference answer with the method that produced it and the work spent.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport<T> {
    pub value: T,
    pub method: &'static str,
    /// Iterations, enumerated candidates or samples, depending on the method.
    pub budget_used: usize,
    pub converged: bool,
}

/// Dykstra's alternating projections between the PSD cone and the kinship
/// structure set, from `Y`. Stops when both alternating sequences move by
/// at most `tol` in Frobenius norm; the returned matrix lies exactly in the
/// structure set.
pub fn dykstra_project(
    y: &DMatrix<f64>,
    max_iters: usize,
    tol: f64,
) -> Result<OracleReport<DMatrix<f64>>> {
    check_symmetric(y)?;
    let n = y.nrows();
    let mut x = y.clone();
    let mut prev_psd = y.clone();
    let mut p = DMatrix::zeros(n, n);
    let mut q = DMatrix::zeros(n, n);
    for it in 1..=max_iters {
        let a = psd_part(&(&x + &p));
        p = &x + &p - &a;
        let next = kinship_part(&(&a + &q));
        q = &a + &q - &next;
        let moved = (&next - &x).norm().max((&a - &prev_psd).norm());
        x = next;
        prev_psd = a;
        if moved <= tol {
            return Ok(OracleReport {
                value: x,
                method: "dykstra",
                budget_used: it,
                converged: true,
            });
        }
    }
    Ok(OracleReport {
        value: x,
        method: "dykstra",
        budget_used: max_iters,
        converged: false,
    })
}

/// Minimum of `vᵗx` over the basic feasible solutions of `Ax = b, x ≥ 0`,
/// by enumerating all `C(n, m)` bases. Valid for bounded problems.
pub fn lp_vertex_oracle(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<OracleReport<(f64, DVector<f64>)>> {
    let (m, n) = a.shape();
    if b.len() != m || v.len() != n || m > n {
        return Err(Error::dim(
            "LP oracle needs A m×n with m ≤ n, b of length m, v of length n",
        ));
    }
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut count = 0;
    for basis in (0..n).combinations(m) {
        count += 1;
        let sub = DMatrix::from_fn(m, m, |i, j| a[(i, basis[j])]);
        let Ok(xb) = dense_solve(&sub, b) else {
            continue;
        };
        let scale = 1.0 + xb.amax();
        if xb.iter().any(|&t| t < -1e-10 * scale) {
            continue;
        }
        let mut x = DVector::zeros(n);
        for (k, &j) in basis.iter().enumerate() {
            x[j] = xb[k].max(0.0);
        }
        let value = v.dot(&x);
        if best.as_ref().is_none_or(|(bv, _)| value < *bv) {
            best = Some((value, x));
        }
    }
    match best {
        Some(value) => Ok(OracleReport {
            value,
            method: "vertex enumeration",
            budget_used: count,
            converged: true,
        }),
        None => Err(Error::Infeasible("no basic feasible solution".into())),
    }
}

/// All complementary solutions found by enumeration, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct LcpSolutions {
    /// `(x, y, ½‖y − Ax − b‖²)` for each feasible support pattern.
    pub solutions: Vec<(DVector<f64>, DVector<f64>, f64)>,
}

impl LcpSolutions {
    pub fn best(&self) -> Option<&(DVector<f64>, DVector<f64>, f64)> {
        self.solutions.first()
    }
}

/// Enumerates the `2ⁿ` splits of indices into the support of `x` (`S`) and
/// of `y` (the rest). For each, `A_SS x_S = −b_S` is solved and the pair
/// kept when `x_S ≥ 0` and `y = Ax + b ≥ 0`.
pub fn lcp_enumeration_oracle(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<OracleReport<LcpSolutions>> {
    let n = a.nrows();
    if !a.is_square() || b.len() != n {
        return Err(Error::dim("LCP oracle needs square A and matching b"));
    }
    if n > ENUMERATION_LIMIT {
        return Err(Error::invalid("LCP enumeration is limited to n ≤ 16"));
    }
    let tol = 1e-10 * (1.0 + b.amax());
    let mut solutions = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let support: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let k = support.len();
        let mut x = DVector::zeros(n);
        if k > 0 {
            let sub = DMatrix::from_fn(k, k, |i, j| a[(support[i], support[j])]);
            let rhs = DVector::from_fn(k, |i, _| -b[support[i]]);
            let Ok(xs) = dense_solve(&sub, &rhs) else {
                continue;
            };
            for (i, &s) in support.iter().enumerate() {
                x[s] = xs[i];
            }
        }
        if x.iter().any(|&t| t < -tol) {
            continue;
        }
        let mut y = a * &x + b;
        for &s in &support {
            y[s] = 0.0;
        }
        if y.iter().any(|&t| t < -tol) {
            continue;
        }
        let x = x.map(|t| t.max(0.0));
        let y = y.map(|t| t.max(0.0));
        let loss = 0.5 * (&y - a * &x - b).norm_squared();
        solutions.push((x, y, loss));
    }
    solutions.sort_by(|p, q| p.2.total_cmp(&q.2));
    Ok(OracleReport {
        value: LcpSolutions { solutions },
        method: "complementary basis enumeration",
        budget_used: 1 << n,
        converged: true,
    })
}

/// Minimum of `xᵗMx / ‖x‖²` over the nonnegative simplex grid with spacing
/// `step` (every `x = k/N` with integer `k ≥ 0`, `Σk = N`, `N = ⌈1/step⌉`),
/// polished by a compass search on the simplex that starts at the best grid
/// point with moves of one grid step and halves them down to 1e−10.
/// Returns the value and the normalized minimizing direction.
pub fn copositivity_grid_oracle(
    m: &DMatrix<f64>,
    step: f64,
) -> Result<OracleReport<(f64, DVector<f64>)>> {
    check_symmetric(m)?;
    let n = m.nrows();
    if n == 0 || n > GRID_LIMIT {
        return Err(Error::invalid("grid oracle is limited to 1 ≤ n ≤ 6"));
    }
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::invalid("grid step must lie in (0, 1]"));
    }
    let total = (1.0 / step).ceil() as usize;
    let rayleigh = |x: &DVector<f64>| x.dot(&(m * x)) / x.norm_squared();
    let mut counts = vec![0usize; n];
    let mut best = (f64::INFINITY, DVector::zeros(n));
    let mut visited = 0;
    grid_walk(&mut counts, 0, total, &mut |k| {
        visited += 1;
        let x = DVector::from_fn(n, |i, _| k[i] as f64 / total as f64);
        let value = rayleigh(&x);
        if value < best.0 {
            best = (value, x);
        }
    });

    // Moves along e_i − e_j keep the point on the simplex.
    let mut h = 1.0 / total as f64;
    while h > 1e-10 {
        let mut improved = false;
        for i in 0..n {
            for j in 0..n {
                if i == j || best.1[j] <= 0.0 {
                    continue;
                }
                let shift = h.min(best.1[j]);
                let mut x = best.1.clone();
                x[i] += shift;
                x[j] -= shift;
                visited += 1;
                let value = rayleigh(&x);
                if value < best.0 {
                    best = (value, x);
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    let norm = best.1.norm();
    best.1 /= norm;
    Ok(OracleReport {
        value: best,
        method: "simplex grid search with compass polish",
        budget_used: visited,
        converged: true,
    })
}

fn grid_walk(counts: &mut [usize], pos: usize, left: usize, visit: &mut impl FnMut(&[usize])) {
    if pos == counts.len() - 1 {
        counts[pos] = left;
        visit(counts);
        return;
    }
    for k in 0..=left {
        counts[pos] = k;
        grid_walk(counts, pos + 1, left - k, visit);
    }
}

/// Minimizer of `½xᵗAx + bᵗx` over `x ≥ 0` by checking the KKT conditions
/// on each of the `2ⁿ` candidate free sets.
pub fn nqp_activeset_oracle(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<OracleReport<(DVector<f64>, f64)>> {
    check_symmetric(a)?;
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::dim("NQP oracle needs b matching A"));
    }
    if n > ENUMERATION_LIMIT {
        return Err(Error::invalid(
            "active-set enumeration is limited to n ≤ 16",
        ));
    }
    let tol = 1e-9 * (1.0 + a.amax() + b.amax());
    let objective = |x: &DVector<f64>| 0.5 * x.dot(&(a * x)) + b.dot(x);
    let mut best: Option<(DVector<f64>, f64)> = None;
    for mask in 0u32..(1u32 << n) {
        let free: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let k = free.len();
        let mut x = DVector::zeros(n);
        if k > 0 {
            let sub = DMatrix::from_fn(k, k, |i, j| a[(free[i], free[j])]);
            let rhs = DVector::from_fn(k, |i, _| -b[free[i]]);
            let Ok(xf) = dense_solve(&sub, &rhs) else {
                continue;
            };
            for (i, &f) in free.iter().enumerate() {
                x[f] = xf[i];
            }
        }
        if x.iter().any(|&t| t < -tol) {
            continue;
        }
        let grad = a * &x + b;
        if (0..n).any(|i| mask & (1 << i) == 0 && grad[i] < -tol) {
            continue;
        }
        let x = x.map(|t| t.max(0.0));
        let value = objective(&x);
        if best.as_ref().is_none_or(|(_, bv)| value < *bv) {
            best = Some((x, value));
        }
    }
    best.map(|value| OracleReport {
        value,
        method: "active-set enumeration",
        budget_used: 1 << n,
        converged: true,
    })
    .ok_or_else(|| Error::Infeasible("no KKT point found".into()))
}

/// Nearest of `samples` points drawn from `sampler`. Samples failing the
/// membership predicate are discarded and do not count toward the budget.
/// Returns the nearest sample and its distance to `x`.
pub fn projection_sampling_oracle(
    x: &DVector<f64>,
    membership: impl Fn(&DVector<f64>) -> bool,
    mut sampler: impl FnMut() -> DVector<f64>,
    samples: usize,
) -> OracleReport<(DVector<f64>, f64)> {
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < samples && attempts < 100 * samples.max(1) {
        attempts += 1;
        let c = sampler();
        if !membership(&c) {
            continue;
        }
        accepted += 1;
        let d = (x - &c).norm();
        if best.as_ref().is_none_or(|(_, bd)| d < *bd) {
            best = Some((c, d));
        }
    }
    OracleReport {
        value: best.unwrap_or_else(|| (x.clone(), f64::INFINITY)),
        method: "feasible sampling",
        budget_used: accepted,
        converged: accepted == samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn dykstra_examples() {
        let valid = DMatrix::from_row_slice(2, 2, &[0.5, 0.25, 0.25, 0.5]);
        let out = dykstra_project(&valid, 1000, 1e-10).unwrap();
        assert!(out.converged);
        assert!((out.value - &valid).amax() < 1e-10);

        let y = DMatrix::from_row_slice(2, 2, &[0.5, -0.2, -0.2, 0.5]);
        let out = dykstra_project(&y, 1000, 1e-10).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]);
        assert!((out.value - expect).amax() < 1e-10);
    }

    #[test]
    fn lp_oracle_examples() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let out = lp_vertex_oracle(&a, &v(&[1.0]), &v(&[1.0, 1.0])).unwrap();
        assert!((out.value.0 - 1.0).abs() < 1e-14);
        let x = &out.value.1;
        assert!(*x == v(&[1.0, 0.0]) || *x == v(&[0.0, 1.0]));

        let a = DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 2.0]);
        let out = lp_vertex_oracle(&a, &v(&[0.0]), &v(&[1.0, -1.0, 0.5])).unwrap();
        assert!(out.value.0 <= 0.0);

        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        assert!(matches!(
            lp_vertex_oracle(&a, &v(&[-1.0]), &v(&[1.0, 1.0])),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn lcp_oracle_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let out = lcp_enumeration_oracle(&a, &v(&[1.0, 2.0])).unwrap();
        let (x, y, loss) = out.value.best().unwrap();
        assert_eq!(*x, v(&[0.0, 0.0]));
        assert_eq!(*y, v(&[1.0, 2.0]));
        assert_eq!(*loss, 0.0);

        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        let out = lcp_enumeration_oracle(&a, &v(&[-1.0])).unwrap();
        let (x, y, _) = out.value.best().unwrap();
        assert_eq!((x[0], y[0]), (1.0, 0.0));
    }

    #[test]
    fn grid_oracle_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((copositivity_grid_oracle(&id, 0.05).unwrap().value.0 - 1.0).abs() < 1e-12);
        let neg = -DMatrix::<f64>::identity(3, 3);
        assert!((copositivity_grid_oracle(&neg, 0.05).unwrap().value.0 + 1.0).abs() < 1e-12);
        let horn = crate::solvers::horn_matrix();
        assert!(copositivity_grid_oracle(&horn, 0.05).unwrap().value.0 <= 1e-3);
    }

    #[test]
    fn nqp_oracle_examples() {
        let id = DMatrix::<f64>::identity(2, 2);
        let out = nqp_activeset_oracle(&id, &v(&[-1.0, 1.0])).unwrap();
        assert_eq!(out.value.0, v(&[1.0, 0.0]));
        assert_eq!(out.value.1, -0.5);
        let out = nqp_activeset_oracle(&id, &v(&[0.5, 1.0])).unwrap();
        assert_eq!(out.value.0, v(&[0.0, 0.0]));
    }

    #[test]
    fn sampling_oracle_on_orthant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let x = v(&[-1.0, 2.0]);
        let out = projection_sampling_oracle(
            &x,
            |c| c.iter().all(|&t| t >= 0.0),
            || v(&[rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)]),
            1000,
        );
        assert!(out.converged);
        assert!((&x - v(&[0.0, 2.0])).norm() <= out.value.1);
    }
}

//! Seeded random instances. Every generator draws from a `ChaCha8Rng`
//! seeded with the given value, so output is reproducible bit for bit.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::CsrMatrix;
use crate::projections::SparsityMode;
use crate::solvers::{
    CopositivityInstance, KinshipInstance, LcpCertificate, LcpInstance, LpInstance, Matrix,
    NqpInstance, ProblemInstance, ProblemKind, SocInstance, SpcaData, SpcaInstance,
};
use crate::{Error, Result};

/// Density of random sparse LP and SOC constraint matrices.
pub const SPARSE_DENSITY: f64 = 0.01;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| normal(rng))
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| normal(rng))
}

pub fn uniform_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random::<f64>())
}

/// Gaussian entries at `round(density·rows·cols)` distinct random positions,
/// plus any positions in `forced` that were not drawn.
pub fn sparse_gaussian(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    density: f64,
    forced: impl IntoIterator<Item = (usize, usize)>,
) -> CsrMatrix {
    let total = rows * cols;
    let target = ((density * total as f64).round() as usize).min(total);
    let mut positions = BTreeSet::new();
    while positions.len() < target {
        positions.insert((rng.random_range(0..rows), rng.random_range(0..cols)));
    }
    positions.extend(forced);
    let entries: Vec<_> = positions
        .into_iter()
        .map(|(i, j)| (i, j, normal(rng)))
        .collect();
    CsrMatrix::from_triplets(rows, cols, entries).expect("positions are distinct and in range")
}

/// `min vᵗx` with `Ax = b`, `x ≥ 0`: Gaussian `A`, `b = Ax₀` for uniform
/// `x₀ ∈ (0,1)ⁿ` (so the problem is feasible), and uniform `v ∈ (0,1)ⁿ`
/// (so it is bounded). Sparse matrices carry a diagonal entry in each row.
pub fn lp(m: usize, n: usize, sparse: bool, seed: u64) -> Result<LpInstance> {
    if m == 0 || m > n {
        return Err(Error::invalid(format!(
            "LP dimensions need 1 ≤ m ≤ n, got {m}x{n}"
        )));
    }
    let mut rng = rng(seed);
    let a: Matrix = if sparse {
        sparse_gaussian(&mut rng, m, n, SPARSE_DENSITY, (0..m).map(|i| (i, i))).into()
    } else {
        gaussian_matrix(&mut rng, m, n).into()
    };
    let x0 = uniform_vector(&mut rng, n);
    let v = uniform_vector(&mut rng, n);
    let b = crate::linalg::LinearOperator::apply(&a, &x0);
    LpInstance::new(a, b, v)
}

/// `A = MᵗM + 0.001I` with Gaussian `M` (density `log₁₀(n)/n` when sparse)
/// and Gaussian `b`.
pub fn nqp(n: usize, sparse: bool, seed: u64) -> Result<NqpInstance> {
    if n == 0 {
        return Err(Error::invalid("NQP dimension must be positive"));
    }
    let mut rng = rng(seed);
    let a: Matrix = if sparse {
        let density = ((n as f64).log10() / n as f64).clamp(0.0, 1.0);
        let m = sparse_gaussian(&mut rng, n, n, density, (0..n).map(|i| (i, i)));
        m.gram().add_identity(0.001)?.into()
    } else {
        let m = gaussian_matrix(&mut rng, n, n);
        (m.tr_mul(&m) + DMatrix::identity(n, n) * 0.001).into()
    };
    let b = gaussian_vector(&mut rng, n);
    NqpInstance::new(a, b)
}

/// Gaussian matrix symmetrized by averaging opposing entries.
pub fn symmetric_gaussian(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = gaussian_matrix(rng, n, n);
    (&m + m.transpose()) * 0.5
}

pub fn kinship(n: usize, seed: u64) -> Result<KinshipInstance> {
    if n == 0 {
        return Err(Error::invalid("kinship dimension must be positive"));
    }
    KinshipInstance::new(symmetric_gaussian(&mut rng(seed), n))
}

/// Gaussian `A, b, c, x`; `d` is chosen so a Gaussian point `u₀` is strictly
/// feasible: `d = ‖Au₀ + b‖ − cᵗu₀ + |g|`.
pub fn soc(m: usize, n: usize, sparse: bool, seed: u64) -> Result<SocInstance> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("SOC dimensions must be positive"));
    }
    let mut rng = rng(seed);
    let a: Matrix = if sparse {
        sparse_gaussian(&mut rng, m, n, SPARSE_DENSITY, std::iter::empty()).into()
    } else {
        gaussian_matrix(&mut rng, m, n).into()
    };
    let b = gaussian_vector(&mut rng, m);
    let c = gaussian_vector(&mut rng, n);
    let x = gaussian_vector(&mut rng, n);
    let u0 = gaussian_vector(&mut rng, n);
    let slack = normal(&mut rng).abs();
    let d = (crate::linalg::LinearOperator::apply(&a, &u0) + &b).norm() - c.dot(&u0) + slack;
    SocInstance::new(x, a, b, c, d)
}

pub fn copositivity(n: usize, seed: u64) -> Result<CopositivityInstance> {
    if n == 0 {
        return Err(Error::invalid("copositivity dimension must be positive"));
    }
    CopositivityInstance::new(symmetric_gaussian(&mut rng(seed), n))
}

/// `A = MᵗM + I` for Gaussian `M`, and a complementary pair `(x*, y*)`:
/// each index is assigned to the support of `x*` or of `y*` with
/// probability ½, with uniform `(0,1)` values there. Then `b = y* − Ax*`,
/// so `(x*, y*)` solves the problem and is stored as the certificate. A
/// positive definite `A` makes that solution the only one.
pub fn lcp(n: usize, seed: u64) -> Result<LcpInstance> {
    if n == 0 {
        return Err(Error::invalid("LCP dimension must be positive"));
    }
    let mut rng = rng(seed);
    let m = gaussian_matrix(&mut rng, n, n);
    let a = m.tr_mul(&m) + DMatrix::identity(n, n);
    let mut x = DVector::zeros(n);
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let value: f64 = rng.random();
        if rng.random::<bool>() {
            x[i] = value;
        } else {
            y[i] = value;
        }
    }
    let b = &y - &a * &x;
    let mut inst = LcpInstance::new(a, b)?;
    inst.certificate = Some(LcpCertificate { x, y });
    Ok(inst)
}

/// Data with a decaying spectrum: `X = Z·diag(σ)` for Gaussian `Z` of
/// shape `samples × p` and `σ_j = 1/√(j+1)`, so the population covariance
/// is diagonal.
pub fn spca_data(p: usize, samples: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng(seed);
    let z = gaussian_matrix(&mut rng, samples, p);
    DMatrix::from_fn(samples, p, |i, j| z[(i, j)] / ((j + 1) as f64).sqrt())
}

pub fn spca(
    p: usize,
    samples: usize,
    q: usize,
    r: usize,
    mode: SparsityMode,
    seed: u64,
) -> Result<SpcaInstance> {
    if p == 0 || samples == 0 {
        return Err(Error::invalid("SPCA dimensions must be positive"));
    }
    SpcaInstance::new(SpcaData::Data(spca_data(p, samples, seed)), q, r, mode)
}

/// Builds an instance of `kind` from a dimension list:
/// `lp`/`soc` take `[m, n]`, `spca` takes `[p, samples, q, r]`, others `[n]`.
/// Sparse PCA uses column mode.
pub fn generate(
    kind: ProblemKind,
    dims: &[usize],
    sparse: bool,
    seed: u64,
) -> Result<ProblemInstance> {
    let need = |k: usize| -> Result<()> {
        if dims.len() == k {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{kind} needs {k} dimension(s), got {}",
                dims.len()
            )))
        }
    };
    Ok(match kind {
        ProblemKind::Lp => {
            need(2)?;
            ProblemInstance::Lp(lp(dims[0], dims[1], sparse, seed)?)
        }
        ProblemKind::Nqp => {
            need(1)?;
            ProblemInstance::Nqp(nqp(dims[0], sparse, seed)?)
        }
        ProblemKind::Kinship => {
            need(1)?;
            ProblemInstance::Kinship(kinship(dims[0], seed)?)
        }
        ProblemKind::Soc => {
            need(2)?;
            ProblemInstance::Soc(soc(dims[0], dims[1], sparse, seed)?)
        }
        ProblemKind::Copositivity => {
            need(1)?;
            ProblemInstance::Copositivity(copositivity(dims[0], seed)?)
        }
        ProblemKind::Lcp => {
            need(1)?;
            ProblemInstance::Lcp(lcp(dims[0], seed)?)
        }
        ProblemKind::Spca => {
            need(4)?;
            ProblemInstance::Spca(spca(
                dims[0],
                dims[1],
                dims[2],
                dims[3],
                SparsityMode::Column,
                seed,
            )?)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eig;

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(lp(4, 8, false, 1).unwrap(), lp(4, 8, false, 1).unwrap());
        assert_ne!(lp(4, 8, false, 1).unwrap(), lp(4, 8, false, 2).unwrap());
        assert_eq!(nqp(20, true, 3).unwrap(), nqp(20, true, 3).unwrap());
    }

    #[test]
    fn nqp_matrix_is_positive_definite() {
        let inst = nqp(8, false, 7).unwrap();
        let eig = sym_eig(&inst.a.to_dense()).unwrap();
        assert!(eig.min_value() > 0.0);
    }

    #[test]
    fn lcp_certificate_solves_instance() {
        let inst = lcp(8, 3).unwrap();
        let cert = inst.certificate.as_ref().unwrap();
        assert!((&cert.y - &inst.a * &cert.x - &inst.b).amax() < 1e-12);
        assert_eq!(cert.x.dot(&cert.y), 0.0);
        assert!(cert.x.iter().chain(cert.y.iter()).all(|&v| v >= 0.0));
    }

    #[test]
    fn soc_instance_is_strictly_feasible_somewhere() {
        let inst = soc(8, 16, false, 5).unwrap();
        assert!(inst.d.is_finite());
    }

    #[test]
    fn sparse_lp_rows_are_nonempty() {
        let inst = lp(30, 60, true, 9).unwrap();
        let a = inst.a.to_dense();
        assert!((0..30).all(|i| a.row(i).iter().any(|v| *v != 0.0)));
    }

    #[test]
    fn dispatch_checks_dimension_count() {
        assert!(generate(ProblemKind::Lp, &[4], false, 0).is_err());
        assert!(generate(ProblemKind::Nqp, &[4], false, 0).is_ok());
        assert!(generate(ProblemKind::Spca, &[10, 50, 2, 3], false, 0).is_ok());
    }
}

//! The annealed MM driver.
//!
//! A problem supplies its loss `f`, its penalty `q`, a constraint distance
//! used by the stopping rule, and the one-step map `M_ρ`. The driver owns
//! the penalty schedule, Nesterov extrapolation within each fixed-`ρ` stage,
//! convergence testing and the trace.

use std::io::Write;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::projections::ProjectionOperator;
use crate::{Error, Result};

/// Geometric penalty growth: `ρ` is multiplied by `multiplier` after every
/// `interval` iterations and clamped at `rho_cap`. `max_outer_iters` caps
/// the total number of MM iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySchedule {
    pub rho0: f64,
    pub multiplier: f64,
    pub interval: usize,
    pub rho_cap: f64,
    pub max_outer_iters: usize,
}

pub const DEFAULT_RHO_CAP: f64 = 4_194_304.0; // 2^22

impl Default for PenaltySchedule {
    fn default() -> Self {
        PenaltySchedule {
            rho0: 1.0,
            multiplier: 2.0,
            interval: 100,
            rho_cap: DEFAULT_RHO_CAP,
            max_outer_iters: 10_000,
        }
    }
}

impl PenaltySchedule {
    pub fn new(rho0: f64, multiplier: f64, interval: usize) -> Self {
        PenaltySchedule {
            rho0,
            multiplier,
            interval,
            ..Default::default()
        }
    }

    pub fn with_cap(mut self, rho_cap: f64) -> Self {
        self.rho_cap = rho_cap;
        self
    }

    pub fn with_max_iters(mut self, max_outer_iters: usize) -> Self {
        self.max_outer_iters = max_outer_iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rho0 > 0.0
            && self.rho0.is_finite()
            && self.multiplier > 1.0
            && self.interval >= 1
            && self.rho_cap >= self.rho0
            && self.max_outer_iters >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid penalty schedule {self:?}")))
        }
    }

    /// `ρ` in force at 1-based iteration `iter`.
    pub fn rho_at(&self, iter: usize) -> f64 {
        let stages = (iter.max(1) - 1) / self.interval;
        let mut rho = self.rho0;
        for _ in 0..stages {
            rho = (rho * self.multiplier).min(self.rho_cap);
            if rho == self.rho_cap {
                break;
            }
        }
        rho
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCriteria {
    /// Relative change in the loss: `|f_k − f_{k−1}| ≤ eps1·(|f_{k−1}| + 1)`.
    pub eps1: f64,
    /// Constraint distance: `dist(x_k, C) ≤ eps2`.
    pub eps2: f64,
}

impl Default for ConvergenceCriteria {
    fn default() -> Self {
        ConvergenceCriteria {
            eps1: 1e-6,
            eps2: 1e-4,
        }
    }
}

impl ConvergenceCriteria {
    pub fn validate(&self) -> Result<()> {
        if self.eps1 > 0.0 && self.eps2 > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid("convergence tolerances must be positive"))
        }
    }

    pub fn met(&self, f_prev: f64, f: f64, dist: f64) -> bool {
        (f - f_prev).abs() <= self.eps1 * (f_prev.abs() + 1.0) && dist <= self.eps2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Sparse when the instance stores a sparse matrix or `n > 512`.
    #[default]
    Auto,
    Dense,
    Sparse,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Strategy::Auto),
            "dense" => Ok(Strategy::Dense),
            "sparse" => Ok(Strategy::Sparse),
            _ => Err(Error::invalid(format!("unknown strategy {s:?}"))),
        }
    }
}

pub const AUTO_SPARSE_THRESHOLD: usize = 512;

impl Strategy {
    pub fn use_sparse(self, n: usize, stored_sparse: bool) -> bool {
        match self {
            Strategy::Auto => stored_sparse || n > AUTO_SPARSE_THRESHOLD,
            Strategy::Dense => false,
            Strategy::Sparse => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub criteria: ConvergenceCriteria,
    pub accelerate: bool,
    /// Nesterov offset `d ≥ 3`.
    pub d: usize,
    /// Re-run an accelerated step without extrapolation when it raises the
    /// penalized loss, and restart momentum.
    pub monotone_safeguard: bool,
    pub strategy: Strategy,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            criteria: ConvergenceCriteria::default(),
            accelerate: true,
            d: 3,
            monotone_safeguard: false,
            strategy: Strategy::Auto,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn unaccelerated() -> Self {
        SolveOptions {
            accelerate: false,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.criteria.validate()?;
        if self.d < 3 {
            return Err(Error::invalid("Nesterov offset d must be at least 3"));
        }
        Ok(())
    }
}

/// Momentum bookkeeping for one fixed-`ρ` stage.
#[derive(Debug, Clone)]
pub struct AccelerationState {
    pub previous: Option<DVector<f64>>,
    pub k: usize,
    pub d: usize,
    pub enabled: bool,
}

impl AccelerationState {
    pub fn new(d: usize, enabled: bool) -> Self {
        AccelerationState {
            previous: None,
            k: 1,
            d,
            enabled,
        }
    }

    pub fn restart(&mut self) {
        self.k = 1;
    }

    /// The point at which to evaluate the MM map.
    pub fn extrapolate(&self, x: &DVector<f64>) -> DVector<f64> {
        match (&self.previous, self.enabled && self.k > 1) {
            (Some(prev), true) => nesterov_step(x, prev, self.k, self.d),
            _ => x.clone(),
        }
    }

    pub fn advance(&mut self, old: DVector<f64>) {
        self.previous = Some(old);
        self.k += 1;
    }
}

/// `z = x_k + ((k−1)/(k+d−1))·(x_k − x_prev)`.
pub fn nesterov_step(
    x_k: &DVector<f64>,
    x_prev: &DVector<f64>,
    k: usize,
    d: usize,
) -> DVector<f64> {
    assert!(k >= 1, "Nesterov counter starts at 1");
    let coef = (k - 1) as f64 / (k + d - 1) as f64;
    if coef == 0.0 {
        return x_k.clone();
    }
    x_k + (x_k - x_prev) * coef
}

/// `x − (∇f(x) + ρ∇q(x)) / (L + ρ)`, the update when `f` has an
/// `L`-Lipschitz gradient and no convenient proximal map.
pub fn lipschitz_gradient_step(
    x: &DVector<f64>,
    grad_f: impl Fn(&DVector<f64>) -> DVector<f64>,
    lipschitz: f64,
    grad_q: impl Fn(&DVector<f64>) -> DVector<f64>,
    rho: f64,
) -> DVector<f64> {
    assert!(lipschitz > 0.0, "Lipschitz constant must be positive");
    x - (grad_f(x) + grad_q(x) * rho) / (lipschitz + rho)
}

fn require_sets(sets: &[&dyn ProjectionOperator]) -> Result<()> {
    if sets.is_empty() {
        Err(Error::invalid("at least one constraint set is required"))
    } else {
        Ok(())
    }
}

/// `q(x) = (1/2m) Σ dist(x, C_i)²`.
pub fn penalty_value(x: &DVector<f64>, sets: &[&dyn ProjectionOperator]) -> Result<f64> {
    require_sets(sets)?;
    let total: f64 = sets.iter().map(|s| (x - s.project(x)).norm_squared()).sum();
    Ok(total / (2.0 * sets.len() as f64))
}

/// `(1/m) Σ P_{C_i}(x)`.
pub fn averaged_projection(
    x: &DVector<f64>,
    sets: &[&dyn ProjectionOperator],
) -> Result<DVector<f64>> {
    require_sets(sets)?;
    let mut acc = DVector::zeros(x.len());
    for s in sets {
        acc += s.project(x);
    }
    Ok(acc / sets.len() as f64)
}

/// Largest distance to any of the sets.
pub fn max_distance(x: &DVector<f64>, sets: &[&dyn ProjectionOperator]) -> f64 {
    sets.iter().map(|s| s.distance(x)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub rho: f64,
    pub loss: f64,
    pub penalty: f64,
    pub penalized: f64,
    pub dist: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    IterationLimit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::IterationLimit => "iteration-limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    pub status: SolveStatus,
}

impl SolveTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn seconds(&self) -> f64 {
        self.last().map_or(0.0, |r| r.seconds)
    }

    /// One JSON object per line with fields
    /// `iter, rho, loss, penalty, penalized, dist, seconds`.
    pub fn write_json_lines<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// A penalized problem the driver can iterate.
pub trait MmProblem {
    /// The raw loss `f`.
    fn loss(&self, x: &DVector<f64>) -> f64;

    /// The penalty `q` whose squared distances are majorized.
    fn penalty(&self, x: &DVector<f64>) -> f64;

    /// Constraint distance compared against `eps2`.
    fn distance(&self, x: &DVector<f64>) -> f64;

    /// One MM step at fixed `ρ`, evaluated at `z`.
    fn step(&mut self, z: &DVector<f64>, rho: f64) -> Result<DVector<f64>>;

    fn penalized(&self, x: &DVector<f64>, rho: f64) -> f64 {
        self.loss(x) + rho * self.penalty(x)
    }
}

/// Runs the annealed, optionally accelerated MM iteration from `x0`.
///
/// Convergence is tested on the raw loss between consecutive MM iterates,
/// so the earliest possible stop is iteration 2. Momentum restarts
/// whenever `ρ` actually changes.
pub fn run_mm<P: MmProblem + ?Sized>(
    problem: &mut P,
    x0: DVector<f64>,
    schedule: &PenaltySchedule,
    options: &SolveOptions,
) -> Result<(DVector<f64>, SolveTrace)> {
    schedule.validate()?;
    options.validate()?;
    let start = Instant::now();
    let mut records: Vec<TraceRecord> = Vec::new();
    let mut accel = AccelerationState::new(options.d, options.accelerate);
    let mut x = x0;
    let mut rho = schedule.rho0;
    let mut f_prev: Option<f64> = None;

    for iter in 1..=schedule.max_outer_iters {
        if iter > 1 && (iter - 1) % schedule.interval == 0 {
            let next = (rho * schedule.multiplier).min(schedule.rho_cap);
            if next != rho {
                rho = next;
                accel.restart();
            }
        }

        let z = accel.extrapolate(&x);
        let mut next = problem.step(&z, rho)?;
        if options.monotone_safeguard
            && accel.enabled
            && accel.k > 1
            && problem.penalized(&next, rho) > problem.penalized(&x, rho)
        {
            next = problem.step(&x, rho)?;
            accel.restart();
        }
        let old = std::mem::replace(&mut x, next);
        accel.advance(old);

        let loss = problem.loss(&x);
        let penalty = problem.penalty(&x);
        let dist = problem.distance(&x);
        records.push(TraceRecord {
            iter,
            rho,
            loss,
            penalty,
            penalized: loss + rho * penalty,
            dist,
            seconds: start.elapsed().as_secs_f64(),
        });
        let finite = x.iter().all(|v| v.is_finite())
            && loss.is_finite()
            && penalty.is_finite()
            && dist.is_finite();
        if !finite {
            return Err(Error::Diverged {
                iteration: iter,
                trace: Box::new(SolveTrace {
                    records,
                    status: SolveStatus::IterationLimit,
                }),
            });
        }
        if let Some(fp) = f_prev {
            if options.criteria.met(fp, loss, dist) {
                return Ok((
                    x,
                    SolveTrace {
                        records,
                        status: SolveStatus::Converged,
                    },
                ));
            }
        }
        f_prev = Some(loss);
    }
    Ok((
        x,
        SolveTrace {
            records,
            status: SolveStatus::IterationLimit,
        },
    ))
}

pub type LossFn<'a> = Box<dyn Fn(&DVector<f64>) -> f64 + 'a>;
pub type ProxFn<'a> = Box<dyn Fn(&DVector<f64>, f64) -> DVector<f64> + 'a>;

/// A problem `min f(x)` over `∩ C_i` given by its loss, the proximal map
/// `(y, ρ) ↦ argmin_x f(x) + (ρ/2)‖x − y‖²`, and the constraint sets.
pub struct SetConstrainedProblem<'a> {
    pub loss: LossFn<'a>,
    pub prox: ProxFn<'a>,
    pub sets: Vec<&'a dyn ProjectionOperator>,
}

impl MmProblem for SetConstrainedProblem<'_> {
    fn loss(&self, x: &DVector<f64>) -> f64 {
        (self.loss)(x)
    }

    fn penalty(&self, x: &DVector<f64>) -> f64 {
        penalty_value(x, &self.sets).unwrap_or(f64::NAN)
    }

    fn distance(&self, x: &DVector<f64>) -> f64 {
        max_distance(x, &self.sets)
    }

    fn step(&mut self, z: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        let y = averaged_projection(z, &self.sets)?;
        Ok((self.prox)(&y, rho))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projections::{prox_quadratic_loss, BoxSet, Nonnegative};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    struct Identity;

    impl MmProblem for Identity {
        fn loss(&self, x: &DVector<f64>) -> f64 {
            x.norm_squared()
        }
        fn penalty(&self, _: &DVector<f64>) -> f64 {
            0.0
        }
        fn distance(&self, _: &DVector<f64>) -> f64 {
            0.0
        }
        fn step(&mut self, z: &DVector<f64>, _: f64) -> Result<DVector<f64>> {
            Ok(z.clone())
        }
    }

    #[test]
    fn nesterov_examples() {
        let xk = v(&[1.0, 2.0]);
        let xp = v(&[0.0, 0.0]);
        assert_eq!(nesterov_step(&xk, &xp, 1, 3), xk);
        assert_eq!(nesterov_step(&xk, &xp, 2, 3), v(&[1.25, 2.5]));
    }

    #[test]
    fn nesterov_preserves_affine_constraints() {
        let a = nalgebra::DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 0.5]);
        let xp = v(&[1.0, 0.0, 0.0]);
        let xk = v(&[0.0, 0.0, 2.0]);
        for k in 1..50 {
            let z = nesterov_step(&xk, &xp, k, 3);
            assert!(((&a * z)[0] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn lipschitz_step_examples() {
        let zero = |x: &DVector<f64>| DVector::zeros(x.len());
        assert_eq!(
            lipschitz_gradient_step(&v(&[3.0]), zero, 1.0, zero, 1.0),
            v(&[3.0])
        );
        let grad_f = |x: &DVector<f64>| x.clone();
        assert_eq!(
            lipschitz_gradient_step(&v(&[2.0]), grad_f, 1.0, zero, 1.0),
            v(&[1.0])
        );
    }

    #[test]
    fn lipschitz_step_matches_prox_step_on_quadratic() {
        // f = ½‖x − z‖² over x ≥ 0. Both updates reduce to (z + ρP(x))/(1 + ρ).
        let z = v(&[-1.0, 2.0, 0.5]);
        let set = Nonnegative { dim: 3 };
        let rho = 3.0;
        let mut xa = v(&[1.0, -1.0, 4.0]);
        let mut xb = xa.clone();
        for _ in 0..50 {
            xa = lipschitz_gradient_step(&xa, |x| x - &z, 1.0, |x| x - set.project(x), rho);
            xb = prox_quadratic_loss(&z, &set.project(&xb), rho);
        }
        assert!((xa - xb).amax() < 1e-6);
    }

    #[test]
    fn penalty_and_average_examples() {
        let orth = Nonnegative { dim: 1 };
        assert_eq!(penalty_value(&v(&[-2.0]), &[&orth]).unwrap(), 2.0);
        assert_eq!(penalty_value(&v(&[3.0]), &[&orth]).unwrap(), 0.0);
        assert!(penalty_value(&v(&[3.0]), &[]).is_err());
        assert!(averaged_projection(&v(&[3.0]), &[]).is_err());

        let orth2 = Nonnegative { dim: 2 };
        let bx = BoxSet {
            lower: v(&[-1.0, -1.0]),
            upper: v(&[1.0, 1.0]),
        };
        let x = v(&[-3.0, 4.0]);
        // Orthant: (0, 4), distance² 9. Box: (−1, 1), distance² 4 + 9 = 13.
        assert_eq!(
            penalty_value(&x, &[&orth2, &bx]).unwrap(),
            (9.0 + 13.0) / 4.0
        );
        assert_eq!(
            averaged_projection(&x, &[&orth2, &bx]).unwrap(),
            v(&[-0.5, 2.5])
        );
        assert_eq!(averaged_projection(&x, &[&orth2]).unwrap(), v(&[0.0, 4.0]));
        let inside = v(&[0.5, 0.5]);
        assert_eq!(
            averaged_projection(&inside, &[&orth2, &bx]).unwrap(),
            inside
        );
    }

    #[test]
    fn identity_step_converges_in_two_iterations() {
        let (x, trace) = run_mm(
            &mut Identity,
            v(&[1.0, 2.0]),
            &PenaltySchedule::default(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(trace.status, SolveStatus::Converged);
        assert_eq!(trace.iterations(), 2);
        assert_eq!(trace.records[1].loss, trace.records[0].loss);
        assert_eq!(x, v(&[1.0, 2.0]));
    }

    #[test]
    fn quadratic_toy_reaches_projection() {
        let z = v(&[-1.0, 2.0]);
        let set = Nonnegative { dim: 2 };
        let mut problem = SetConstrainedProblem {
            loss: Box::new(|x| 0.5 * (x - &z).norm_squared()),
            prox: Box::new(|y, rho| prox_quadratic_loss(&z, y, rho)),
            sets: vec![&set],
        };
        let (x, trace) = run_mm(
            &mut problem,
            DVector::zeros(2),
            &PenaltySchedule::new(1.0, 2.0, 20),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(trace.status, SolveStatus::Converged);
        assert!(set.distance(&x) <= 1e-4);
        assert!((x - v(&[0.0, 2.0])).amax() < 1e-4);
    }

    #[test]
    fn rho_is_capped_and_nondecreasing() {
        let s = PenaltySchedule::new(1.0, 2.0, 1).with_cap(8.0);
        let rhos: Vec<f64> = (1..=6).map(|i| s.rho_at(i)).collect();
        assert_eq!(rhos, vec![1.0, 2.0, 4.0, 8.0, 8.0, 8.0]);
        assert!(PenaltySchedule::new(1.0, 0.5, 1).validate().is_err());
        assert!(PenaltySchedule::new(2.0, 2.0, 1)
            .with_cap(1.0)
            .validate()
            .is_err());
    }

    #[test]
    fn divergence_is_reported_with_trace() {
        struct Blowup;
        impl MmProblem for Blowup {
            fn loss(&self, x: &DVector<f64>) -> f64 {
                x[0]
            }
            fn penalty(&self, _: &DVector<f64>) -> f64 {
                0.0
            }
            fn distance(&self, _: &DVector<f64>) -> f64 {
                1.0
            }
            fn step(&mut self, z: &DVector<f64>, _: f64) -> Result<DVector<f64>> {
                Ok(z * 1e200)
            }
        }
        let err = run_mm(
            &mut Blowup,
            v(&[1.0]),
            &PenaltySchedule::default(),
            &SolveOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::Diverged { iteration, trace } => {
                assert_eq!(iteration, 2);
                assert_eq!(trace.records.len(), 2);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn trace_json_lines_fields() {
        let (_, trace) = run_mm(
            &mut Identity,
            v(&[1.0]),
            &PenaltySchedule::default(),
            &SolveOptions::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        trace.write_json_lines(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        for key in [
            "iter",
            "rho",
            "loss",
            "penalty",
            "penalized",
            "dist",
            "seconds",
        ] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
        assert_eq!(text.lines().count(), trace.iterations());
    }
}

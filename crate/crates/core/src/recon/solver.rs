//! Penalized TV reconstruction of stacked systems.
//!
//! Solves `min_x ½‖A x − y‖² + λ·TV(x)` (optionally with `x ≥ 0`) by the
//! monotone variant of FISTA: a gradient step on the data term, an inexact
//! TV proximal step, and Nesterov momentum that is reset whenever the
//! candidate would raise the objective. The accepted iterate is always the
//! best seen so far, so the recorded objective never increases.
//!
//! The constrained form `TV(x) s.t. ‖y − A x‖ ≤ ε` corresponds to this
//! problem for some data-dependent λ; λ is the exposed knob.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tv::{tv_of, TvDenoiser, TvKind};
use crate::error::{Error, Result};
use crate::frame::{Volume, VolumeShape};
use crate::linalg::{axpy, dot, norm};
use crate::model::StackedSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// 1/L with L from power iteration on AᵀA.
    Auto,
    /// Fixed step size, taken as 1/L.
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    pub max_iters: usize,
    pub inner_prox_iters: usize,
    /// Relative change ‖x_k − x_{k−1}‖ / ‖x_{k−1}‖ below which the run stops.
    pub tol: f64,
    pub step: StepRule,
    pub nonneg: bool,
    /// Seed of the power-iteration start vector.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            max_iters: 500,
            inner_prox_iters: 15,
            tol: 1e-6,
            step: StepRule::Auto,
            nonneg: true,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda {} must be > 0", self.lambda)));
        }
        if self.max_iters == 0 || self.inner_prox_iters == 0 {
            return Err(Error::Config(
                "max_iters and inner_prox_iters must be at least 1".into(),
            ));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config(format!("tol {} must be >= 0", self.tol)));
        }
        if let StepRule::Explicit(s) = self.step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("step {s} must be > 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveSample {
    pub objective: f64,
    pub data_term: f64,
    pub tv_term: f64,
}

#[derive(Debug, Clone)]
pub struct ReconResult {
    /// One frame per unknown of the system.
    pub estimate: Volume,
    /// Objective at the accepted iterate after each iteration.
    pub trace: Vec<ObjectiveSample>,
    pub iterations_run: usize,
    pub converged: bool,
    /// Lipschitz constant used for the step.
    pub lipschitz: f64,
}

impl ReconResult {
    pub fn objective_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|s| s.objective).collect()
    }
}

fn shape_of(system: &StackedSystem) -> VolumeShape {
    VolumeShape::new(
        system.frame_count,
        system.geometry.dmd_rows,
        system.geometry.dmd_cols,
    )
}

/// Aᵀ(A x − y)
pub fn data_gradient(system: &StackedSystem, x: &[f64]) -> Vec<f64> {
    let y = system.measurement_vector();
    let mut r = vec![0.0; system.n_rows()];
    system.apply(x, &mut r);
    axpy(-1.0, &y, &mut r);
    let mut g = vec![0.0; system.n_unknowns()];
    system.apply_adjoint(&r, &mut g);
    g
}

/// ½‖A x − y‖²
pub fn data_term(system: &StackedSystem, x: &[f64]) -> f64 {
    let y = system.measurement_vector();
    let mut r = vec![0.0; system.n_rows()];
    system.apply(x, &mut r);
    0.5 * r.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

/// Largest eigenvalue of AᵀA by power iteration, without safety margin.
///
/// Runs at least 50 iterations and then until the relative change of the
/// estimate drops below 1e-6 (capped at 1000).
pub fn operator_norm_sq(system: &StackedSystem, seed: u64) -> Result<f64> {
    let n = system.n_unknowns();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.5).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut av = vec![0.0; system.n_rows()];
    let mut w = vec![0.0; n];
    let mut estimate = 0.0f64;
    for iter in 0..1000 {
        system.apply(&v, &mut av);
        system.apply_adjoint(&av, &mut w);
        let next = norm(&w);
        if next == 0.0 {
            return Err(Error::ZeroOperator);
        }
        let change = (next - estimate).abs() / next;
        estimate = next;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / next;
        }
        if iter + 1 >= 50 && change < 1e-6 {
            break;
        }
    }
    Ok(estimate)
}

/// Step-size constant for the data term: ‖AᵀA‖ estimate × 1.05.
pub fn lipschitz_estimate(system: &StackedSystem, seed: u64) -> Result<f64> {
    Ok(operator_norm_sq(system, seed)? * 1.05)
}

struct Objective<'a> {
    system: &'a StackedSystem,
    y: Vec<f64>,
    shape: VolumeShape,
    kind: TvKind,
    lambda: f64,
    residual: Vec<f64>,
}

impl Objective<'_> {
    fn eval(&mut self, x: &[f64]) -> ObjectiveSample {
        self.system.apply(x, &mut self.residual);
        let data_term = 0.5
            * self
                .residual
                .iter()
                .zip(&self.y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        let tv_term = self.lambda * tv_of(self.shape, self.kind, x);
        ObjectiveSample {
            objective: data_term + tv_term,
            data_term,
            tv_term,
        }
    }

    fn gradient(&mut self, x: &[f64], out: &mut [f64]) {
        self.system.apply(x, &mut self.residual);
        axpy(-1.0, &self.y, &mut self.residual);
        self.system.apply_adjoint(&self.residual, out);
    }
}

/// Back-projection Aᵀy scaled to best fit the data, clamped when `nonneg`.
fn initial_estimate(system: &StackedSystem, y: &[f64], nonneg: bool) -> Vec<f64> {
    let mut x = vec![0.0; system.n_unknowns()];
    system.apply_adjoint(y, &mut x);
    let mut ax = vec![0.0; system.n_rows()];
    system.apply(&x, &mut ax);
    let denom = dot(&ax, &ax);
    let scale = if denom > 0.0 { dot(&ax, y) / denom } else { 0.0 };
    for v in &mut x {
        *v *= scale;
        if nonneg {
            *v = v.max(0.0);
        }
    }
    x
}

pub fn solve(system: &StackedSystem, kind: TvKind, cfg: &SolverConfig) -> Result<ReconResult> {
    cfg.validate()?;
    let shape = shape_of(system);
    kind.check(shape)?;
    let lipschitz = match cfg.step {
        StepRule::Auto => lipschitz_estimate(system, cfg.seed)?,
        StepRule::Explicit(step) => 1.0 / step,
    };
    let y = system.measurement_vector();
    let n = system.n_unknowns();

    let mut objective = Objective {
        system,
        y: y.clone(),
        shape,
        kind,
        lambda: cfg.lambda,
        residual: vec![0.0; system.n_rows()],
    };
    let mut prox = TvDenoiser::new(shape, kind);
    let prox_weight = cfg.lambda / lipschitz;

    let mut x = initial_estimate(system, &y, cfg.nonneg);
    let mut fx = objective.eval(&x);
    if !fx.objective.is_finite() {
        return Err(Error::Divergence {
            iteration: 0,
            objective: fx.objective,
        });
    }
    let mut x_prev = x.clone();
    let mut lookahead = x.clone();
    let mut grad = vec![0.0; n];
    let mut t = 1.0f64;
    let mut trace = Vec::with_capacity(cfg.max_iters);
    let mut converged = false;

    for iter in 1..=cfg.max_iters {
        objective.gradient(&lookahead, &mut grad);
        let mut w = lookahead.clone();
        axpy(-1.0 / lipschitz, &grad, &mut w);
        let z = prox.denoise(&w, prox_weight, cfg.inner_prox_iters, cfg.nonneg);
        let fz = objective.eval(&z);
        if !fz.objective.is_finite() {
            return Err(Error::Divergence {
                iteration: iter,
                objective: fz.objective,
            });
        }

        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let mut accepted = false;
        if fz.objective <= fx.objective {
            std::mem::swap(&mut x_prev, &mut x);
            x = z;
            fx = fz;
            accepted = true;
            let momentum = (t - 1.0) / t_next;
            for ((l, &a), &b) in lookahead.iter_mut().zip(&x).zip(&x_prev) {
                *l = a + momentum * (a - b);
            }
            t = t_next;
        } else {
            // restart from the best iterate
            lookahead.copy_from_slice(&x);
            t = 1.0;
        }
        trace.push(fx);

        if accepted {
            let change = crate::linalg::dist(&x, &x_prev);
            let scale = norm(&x_prev);
            if change <= cfg.tol * scale || (scale == 0.0 && change == 0.0) {
                converged = true;
                break;
            }
        }
    }

    let iterations_run = trace.len();
    Ok(ReconResult {
        estimate: Volume::new(shape, x)?,
        trace,
        iterations_run,
        converged,
        lipschitz,
    })
}

/// Minimum-norm least-squares estimate by conjugate gradients on the
/// normal equations (CGLS form), started from zero, capped at 200 iterations.
pub fn least_squares_baseline(system: &StackedSystem) -> Result<Volume> {
    least_squares_cg(system, 200)
}

pub fn least_squares_cg(system: &StackedSystem, max_iters: usize) -> Result<Volume> {
    let shape = shape_of(system);
    let n = system.n_unknowns();
    let mut x = vec![0.0; n];
    let mut r = system.measurement_vector();
    let mut s = vec![0.0; n];
    system.apply_adjoint(&r, &mut s);
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    let gamma0 = gamma;
    let mut q = vec![0.0; system.n_rows()];
    for _ in 0..max_iters {
        if gamma <= 1e-28 * gamma0 || gamma == 0.0 {
            break;
        }
        system.apply(&p, &mut q);
        let qq = dot(&q, &q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        system.apply_adjoint(&r, &mut s);
        let gamma_next = dot(&s, &s);
        let beta = gamma_next / gamma;
        for (pi, &si) in p.iter_mut().zip(&s) {
            *pi = si + beta * *pi;
        }
        gamma = gamma_next;
    }
    Volume::new(shape, x)
}

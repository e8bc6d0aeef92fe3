//! Isotropic total variation: forward differences, their negative adjoint,
//! and the TV proximal operator.
//!
//! Differences are forward with a replicate boundary, so the gradient is
//! zero at the trailing index of every axis. With that rule the divergence
//! below is exactly `-Dᵀ`.

use crate::error::{check_dim, Error, Result};
use crate::frame::{Volume, VolumeShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvKind {
    /// Spatial differences only (each frame independently).
    Tv2d,
    /// Spatial and temporal differences, unit temporal weight.
    Tv3d,
}

impl TvKind {
    pub fn components(self) -> usize {
        match self {
            TvKind::Tv2d => 2,
            TvKind::Tv3d => 3,
        }
    }

    /// Upper bound on ‖D‖².
    fn gradient_norm_sq(self) -> f64 {
        4.0 * self.components() as f64
    }

    pub(crate) fn check(self, shape: VolumeShape) -> Result<()> {
        if self == TvKind::Tv3d && shape.frames < 2 {
            return Err(Error::Invalid(
                "3D total variation needs at least two frames".into(),
            ));
        }
        Ok(())
    }
}

impl std::str::FromStr for TvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "2d" | "tv2d" => Ok(TvKind::Tv2d),
            "3d" | "tv3d" => Ok(TvKind::Tv3d),
            other => Err(Error::Config(format!("unknown TV kind '{other}'"))),
        }
    }
}

/// Forward differences along rows, columns and (for 3D) frames.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    shape: VolumeShape,
    kind: TvKind,
    /// `[vertical, horizontal, temporal]`, each the size of the volume.
    components: Vec<Vec<f64>>,
}

impl GradientField {
    pub fn new(shape: VolumeShape, kind: TvKind, components: Vec<Vec<f64>>) -> Result<Self> {
        kind.check(shape)?;
        check_dim("gradient components", kind.components(), components.len())?;
        for c in &components {
            check_dim("gradient component length", shape.len(), c.len())?;
        }
        Ok(Self {
            shape,
            kind,
            components,
        })
    }

    pub fn shape(&self) -> VolumeShape {
        self.shape
    }

    pub fn kind(&self) -> TvKind {
        self.kind
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn dot(&self, other: &GradientField) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| crate::linalg::dot(a, b))
            .sum()
    }
}

fn strides(shape: VolumeShape) -> [(usize, usize); 3] {
    // (stride, extent) per axis
    [
        (shape.cols, shape.rows),
        (1, shape.cols),
        (shape.rows * shape.cols, shape.frames),
    ]
}

pub(crate) fn gradient_into(shape: VolumeShape, kind: TvKind, x: &[f64], out: &mut [Vec<f64>]) {
    let axes = strides(shape);
    for (a, comp) in out.iter_mut().enumerate().take(kind.components()) {
        let (stride, extent) = axes[a];
        let inner = (extent - 1) * stride;
        for (g, xs) in comp.chunks_mut(stride * extent).zip(x.chunks(stride * extent)) {
            for i in 0..inner {
                g[i] = xs[i + stride] - xs[i];
            }
            g[inner..].iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

pub(crate) fn divergence_into(shape: VolumeShape, kind: TvKind, field: &[Vec<f64>], out: &mut [f64]) {
    let axes = strides(shape);
    out.iter_mut().for_each(|v| *v = 0.0);
    for (a, comp) in field.iter().enumerate().take(kind.components()) {
        let (stride, extent) = axes[a];
        let inner = (extent - 1) * stride;
        for (o, cs) in out.chunks_mut(stride * extent).zip(comp.chunks(stride * extent)) {
            for i in 0..inner {
                o[i] += cs[i];
                o[i + stride] -= cs[i];
            }
        }
    }
}

pub(crate) fn tv_of(shape: VolumeShape, kind: TvKind, x: &[f64]) -> f64 {
    let axes = strides(shape);
    let mut sq = vec![0.0; x.len()];
    for &(stride, extent) in axes.iter().take(kind.components()) {
        let inner = (extent - 1) * stride;
        for (s, xs) in sq.chunks_mut(stride * extent).zip(x.chunks(stride * extent)) {
            for i in 0..inner {
                let d = xs[i + stride] - xs[i];
                s[i] += d * d;
            }
        }
    }
    sq.iter().map(|v| v.sqrt()).sum()
}

pub fn gradient_op(x: &Volume, kind: TvKind) -> Result<GradientField> {
    let shape = x.shape();
    kind.check(shape)?;
    let mut components = vec![vec![0.0; shape.len()]; kind.components()];
    gradient_into(shape, kind, x.data(), &mut components);
    Ok(GradientField {
        shape,
        kind,
        components,
    })
}

/// Negative adjoint of [`gradient_op`].
pub fn divergence_op(field: &GradientField) -> Volume {
    let mut out = Volume::zeros(field.shape);
    divergence_into(field.shape, field.kind, &field.components, out.data_mut());
    out
}

/// Σ_i ‖(∇x)_i‖₂
pub fn tv_value(x: &Volume, kind: TvKind) -> Result<f64> {
    kind.check(x.shape())?;
    Ok(tv_of(x.shape(), kind, x.data()))
}

/// Approximate `argmin_u ½‖u − v‖² + λ·TV(u)` with `inner_iters` steps of
/// the dual fast gradient projection method.
pub fn tv_prox(v: &Volume, lambda: f64, kind: TvKind, inner_iters: usize) -> Result<Volume> {
    if inner_iters == 0 {
        return Err(Error::Config("inner_iters must be at least 1".into()));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!("lambda {lambda} must be >= 0")));
    }
    kind.check(v.shape())?;
    let mut denoiser = TvDenoiser::new(v.shape(), kind);
    let out = denoiser.denoise(v.data(), lambda, inner_iters, false);
    Volume::new(v.shape(), out)
}

/// Dual fast gradient projection for the TV proximal map, optionally with
/// projection onto `u ≥ 0`. The dual variable persists between calls so
/// repeated solves warm-start.
#[derive(Debug, Clone)]
pub(crate) struct TvDenoiser {
    shape: VolumeShape,
    kind: TvKind,
    dual: Vec<Vec<f64>>,
    next: Vec<Vec<f64>>,
    extrap: Vec<Vec<f64>>,
    grad: Vec<Vec<f64>>,
    div: Vec<f64>,
    primal: Vec<f64>,
}

impl TvDenoiser {
    pub(crate) fn new(shape: VolumeShape, kind: TvKind) -> Self {
        let field = vec![vec![0.0; shape.len()]; kind.components()];
        Self {
            shape,
            kind,
            dual: field.clone(),
            next: field.clone(),
            extrap: field.clone(),
            grad: field,
            div: vec![0.0; shape.len()],
            primal: vec![0.0; shape.len()],
        }
    }

    /// u = P_C(v + λ·div p)
    fn primal_from(&mut self, v: &[f64], lambda: f64, from_extrap: bool, nonneg: bool) {
        let field = if from_extrap { &self.extrap } else { &self.dual };
        divergence_into(self.shape, self.kind, field, &mut self.div);
        for ((u, &vi), &d) in self.primal.iter_mut().zip(v).zip(&self.div) {
            let val = vi + lambda * d;
            *u = if nonneg { val.max(0.0) } else { val };
        }
    }

    pub(crate) fn denoise(&mut self, v: &[f64], lambda: f64, iters: usize, nonneg: bool) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.shape.len());
        if lambda == 0.0 {
            return v
                .iter()
                .map(|&x| if nonneg { x.max(0.0) } else { x })
                .collect();
        }
        let step = 1.0 / (self.kind.gradient_norm_sq() * lambda);
        let ncomp = self.kind.components();
        for a in 0..ncomp {
            self.extrap[a].copy_from_slice(&self.dual[a]);
        }
        let mut t = 1.0f64;
        for _ in 0..iters {
            self.primal_from(v, lambda, true, nonneg);
            gradient_into(self.shape, self.kind, &self.primal, &mut self.grad);
            for a in 0..ncomp {
                for ((n, &r), &g) in self.next[a].iter_mut().zip(&self.extrap[a]).zip(&self.grad[a]) {
                    *n = r + step * g;
                }
            }
            // project each pixel's dual vector onto the unit ball
            for idx in 0..self.shape.len() {
                let norm_sq: f64 = (0..ncomp).map(|a| self.next[a][idx].powi(2)).sum();
                if norm_sq > 1.0 {
                    let s = norm_sq.sqrt().recip();
                    for a in 0..ncomp {
                        self.next[a][idx] *= s;
                    }
                }
            }
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            let momentum = (t - 1.0) / t_next;
            for a in 0..ncomp {
                for ((r, &n), &p) in self.extrap[a].iter_mut().zip(&self.next[a]).zip(&self.dual[a]) {
                    *r = n + momentum * (n - p);
                }
            }
            std::mem::swap(&mut self.dual, &mut self.next);
            t = t_next;
        }
        self.primal_from(v, lambda, false, nonneg);
        self.primal.clone()
    }
}

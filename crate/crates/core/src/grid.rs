//! Radial finite-volume grids.
//!
//! Points `r[0] < ... < r[m]` always end at the outer Dirichlet radius. With an
//! [`Inner::Origin`] the first point is an unknown sitting half a cell away
//! from `r = 0`, where the flux vanishes. With [`Inner::Boundary`] the first
//! point is the inner Dirichlet radius itself.

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Inner {
    Origin,
    Boundary(f64),
}

/// Local spacing rule: uniform `h_origin` near the origin, geometric
/// (`growth * r`) further out, never above `h_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Spacing {
    pub h_origin: f64,
    pub growth: f64,
    pub h_max: f64,
    pub h_min: f64,
}

impl Default for Spacing {
    fn default() -> Self {
        Spacing { h_origin: 0.02, growth: 0.05, h_max: 0.1, h_min: 1e-9 }
    }
}

impl Spacing {
    pub fn validate(&self) -> Result<()> {
        precondition(self.h_origin > 0.0, || "h_origin must be positive".into())?;
        precondition(self.growth > 0.0, || "growth must be positive".into())?;
        precondition(self.h_max >= self.h_min && self.h_min > 0.0, || "need 0 < h_min <= h_max".into())
    }
}

/// Off-diagonal weights of the discrete operator at each unknown:
/// `(Lu)_i = lo[i]*(u[i-1] - u[i]) + hi[i]*(u[i+1] - u[i])`.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RadialGrid {
    points: Vec<f64>,
    inner: Inner,
    dim: u32,
}

impl RadialGrid {
    /// Builds a grid on `(inner, outer]`. Every radius in `breakpoints` that
    /// lies inside the interval becomes a grid point. `limit(r)` further caps
    /// the local spacing.
    pub fn build(
        dim: u32,
        inner: Inner,
        outer: f64,
        spacing: &Spacing,
        breakpoints: &[f64],
        limit: &dyn Fn(f64) -> f64,
    ) -> Result<RadialGrid> {
        spacing.validate()?;
        precondition(dim >= 1, || "dimension must be at least 1".into())?;
        let start = match inner {
            Inner::Origin => 0.0,
            Inner::Boundary(eps) => {
                precondition(eps > 0.0, || "inner radius must be positive".into())?;
                eps
            }
        };
        precondition(outer > start, || format!("outer radius {outer} must exceed {start}"))?;

        let step = |r: f64| -> f64 {
            let base = match inner {
                Inner::Origin => spacing.h_origin.max(spacing.growth * r),
                Inner::Boundary(_) => spacing.growth * r,
            };
            base.min(spacing.h_max).min(limit(r)).max(spacing.h_min)
        };

        let mut stops: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > start && b < outer).collect();
        stops.push(outer);
        stops.sort_by(f64::total_cmp);
        stops.dedup();

        let mut points = Vec::new();
        let mut r = match inner {
            Inner::Origin => 0.5 * step(0.0).min(outer),
            Inner::Boundary(eps) => eps,
        };
        points.push(r);
        let mut k = stops.partition_point(|&s| s <= r);
        while k < stops.len() {
            let h = step(r);
            let target = stops[k];
            let next = if r + h > target - 0.3 * h {
                k += 1;
                target
            } else {
                r + h
            };
            points.push(next);
            r = next;
        }
        Ok(RadialGrid { points, inner, dim })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn inner(&self) -> Inner {
        self.inner
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn outer(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// Index of the first unknown.
    pub fn offset(&self) -> usize {
        match self.inner {
            Inner::Origin => 0,
            Inner::Boundary(_) => 1,
        }
    }

    /// Number of unknowns.
    pub fn len(&self) -> usize {
        self.points.len() - 1 - self.offset()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nodes(&self) -> &[f64] {
        &self.points[self.offset()..self.points.len() - 1]
    }

    /// The grid truncated at `outer`, which must be one of the points.
    pub fn prefix(&self, outer: f64) -> Option<RadialGrid> {
        let idx = self.points.iter().position(|&r| r == outer)?;
        (idx > self.offset()).then(|| RadialGrid {
            points: self.points[..=idx].to_vec(),
            inner: self.inner,
            dim: self.dim,
        })
    }

    /// Linear interpolation of point values, flat below the first point.
    pub fn interp(&self, values: &[f64], r: f64) -> f64 {
        debug_assert_eq!(values.len(), self.points.len());
        let p = &self.points;
        if r <= p[0] {
            return values[0];
        }
        if r >= self.outer() {
            return values[p.len() - 1];
        }
        let j = p.partition_point(|&x| x <= r);
        let w = (r - p[j - 1]) / (p[j] - p[j - 1]);
        values[j - 1] + w * (values[j] - values[j - 1])
    }

    /// Volume of the control cell of point `i`, divided by the area of the
    /// unit sphere.
    pub fn cell_volume(&self, i: usize) -> f64 {
        let (fl, fu) = self.faces(i);
        let d = self.dim as i32;
        // (fu^d - fl^d)/d without cancellation
        let s: f64 = (0..d).map(|k| fu.powi(k) * fl.powi(d - 1 - k)).sum();
        (fu - fl) * s / d as f64
    }

    fn faces(&self, i: usize) -> (f64, f64) {
        let p = &self.points;
        let fl = if i == 0 { 0.0 } else { 0.5 * (p[i - 1] + p[i]) };
        let fu = 0.5 * (p[i] + p[i + 1]);
        (fl, fu)
    }

    /// Weights of `A(r)*Laplacian + b(r)*d/dr` with upwinded drift. The result
    /// is an M-matrix stencil: all weights are nonnegative.
    pub fn stencil(&self, a: &dyn Fn(f64) -> f64, b: &dyn Fn(f64) -> f64) -> Stencil {
        let p = &self.points;
        let d = self.dim as i32;
        let n = self.len();
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for i in self.offset()..p.len() - 1 {
            let (fl, fu) = self.faces(i);
            let vol = self.cell_volume(i);
            let ai = a(p[i]);
            let du = p[i + 1] - p[i];
            let mut h = ai * fu.powi(d - 1) / (du * vol);
            let mut l = if i == 0 { 0.0 } else { ai * fl.powi(d - 1) / ((p[i] - p[i - 1]) * vol) };
            let bi = b(p[i]);
            if bi > 0.0 {
                h += bi / du;
            } else if bi < 0.0 && i > 0 {
                l -= bi / (p[i] - p[i - 1]);
            }
            lo.push(l);
            hi.push(h);
        }
        Stencil { lo, hi }
    }
}

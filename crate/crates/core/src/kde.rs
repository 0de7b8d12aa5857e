//! Shared pieces of the bivariate kernel estimators over the `(M, T)` plane:
//! Scott bandwidths, the evaluation lattice and bilinear lookup.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// `1 / sqrt(2π)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn gauss(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

/// Unnormalized Gaussian weight cut off beyond `radius` standard units.
#[inline]
pub fn truncated_gauss(u: f64, radius: f64) -> f64 {
    if u.abs() > radius {
        0.0
    } else {
        (-0.5 * u * u).exp()
    }
}

/// Per-axis kernel bandwidths (diagonal bandwidth matrix).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub m: f64,
    pub t: f64,
}

/// Scott's rule for two dimensions, `h_k = σ_k · n^(-1/6)`, with optional
/// nonnegative weights (`n` becomes the effective sample size
/// `(Σw)² / Σw²` and `σ_k` the weighted standard deviation).
///
/// Returns `None` when fewer than two effective points are available or an
/// axis has zero spread.
pub fn scott_bandwidth(points: &[(f64, f64)], weights: Option<&[f64]>) -> Option<Bandwidth> {
    let ones;
    let w = match weights {
        Some(w) => w,
        None => {
            ones = vec![1.0; points.len()];
            &ones
        }
    };
    let sw: f64 = w.iter().sum();
    let sw2: f64 = w.iter().map(|x| x * x).sum();
    if points.len() < 2 || sw <= 0.0 {
        return None;
    }
    let n_eff = sw * sw / sw2;
    if n_eff < 1.5 {
        return None;
    }
    let mean_m = points.iter().zip(w).map(|(p, wi)| wi * p.0).sum::<f64>() / sw;
    let mean_t = points.iter().zip(w).map(|(p, wi)| wi * p.1).sum::<f64>() / sw;
    // unbiased weighted variance (reliability weights)
    let denom = sw - sw2 / sw;
    let var_m = points.iter().zip(w).map(|(p, wi)| wi * (p.0 - mean_m).powi(2)).sum::<f64>() / denom;
    let var_t = points.iter().zip(w).map(|(p, wi)| wi * (p.1 - mean_t).powi(2)).sum::<f64>() / denom;
    let factor = n_eff.powf(-1.0 / 6.0);
    let (hm, ht) = (var_m.sqrt() * factor, var_t.sqrt() * factor);
    let scale_m = mean_m.abs().max(1.0);
    let scale_t = mean_t.abs().max(1.0);
    if !(hm > 1e-12 * scale_m && ht > 1e-12 * scale_t) || !hm.is_finite() || !ht.is_finite() {
        return None;
    }
    Some(Bandwidth { m: hm, t: ht })
}

/// Rectangular lattice of evaluation nodes. Node `(i, j)` sits at
/// `(m_min + i·m_step, t_min + j·t_step)`; values are stored row-major with
/// `T` rows, i.e. at `j·nm + i`. For quadrature each node stands for one
/// cell of area `m_step · t_step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub m_min: f64,
    pub m_step: f64,
    pub nm: usize,
    pub t_min: f64,
    pub t_step: f64,
    pub nt: usize,
}

impl Grid2 {
    /// Lattice spanning the bounding box of `points` padded by `margin`
    /// bandwidths on every side.
    pub fn covering(points: &[(f64, f64)], bw: Bandwidth, margin: f64, nm: usize, nt: usize) -> Self {
        let (mut lo_m, mut hi_m, mut lo_t, mut hi_t) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(m, t) in points {
            lo_m = lo_m.min(m);
            hi_m = hi_m.max(m);
            lo_t = lo_t.min(t);
            hi_t = hi_t.max(t);
        }
        lo_m -= margin * bw.m;
        hi_m += margin * bw.m;
        lo_t -= margin * bw.t;
        hi_t += margin * bw.t;
        let nm = nm.max(2);
        let nt = nt.max(2);
        Self {
            m_min: lo_m,
            m_step: (hi_m - lo_m) / (nm - 1) as f64,
            nm,
            t_min: lo_t,
            t_step: (hi_t - lo_t) / (nt - 1) as f64,
            nt,
        }
    }

    pub fn len(&self) -> usize {
        self.nm * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn m(&self, i: usize) -> f64 {
        self.m_min + i as f64 * self.m_step
    }

    #[inline]
    pub fn t(&self, j: usize) -> f64 {
        self.t_min + j as f64 * self.t_step
    }

    pub fn m_max(&self) -> f64 {
        self.m(self.nm - 1)
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.nt - 1)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nm + i
    }

    /// Coordinates of a flat index.
    pub fn node(&self, idx: usize) -> (f64, f64) {
        (self.m(idx % self.nm), self.t(idx / self.nm))
    }

    pub fn cell_area(&self) -> f64 {
        self.m_step * self.t_step
    }

    /// Bilinear interpolation of node values; `None` outside the lattice.
    pub fn interpolate(&self, values: &[f64], m: f64, t: f64) -> Option<f64> {
        // snap coordinates within rounding error of a node onto it
        let snap = |v: f64| if (v - v.round()).abs() < 1e-9 { v.round() } else { v };
        let x = snap((m - self.m_min) / self.m_step);
        let y = snap((t - self.t_min) / self.t_step);
        let (xmax, ymax) = ((self.nm - 1) as f64, (self.nt - 1) as f64);
        if !(x >= 0.0 && x <= xmax && y >= 0.0 && y <= ymax) {
            return None;
        }
        let i = (x.floor() as usize).min(self.nm - 2);
        let j = (y.floor() as usize).min(self.nt - 2);
        let fx = x - i as f64;
        let fy = y - j as f64;
        let v00 = values[self.index(i, j)];
        let v10 = values[self.index(i + 1, j)];
        let v01 = values[self.index(i, j + 1)];
        let v11 = values[self.index(i + 1, j + 1)];
        // exact at nodes: the other weights are exactly zero
        if fx == 0.0 && fy == 0.0 {
            return Some(v00);
        }
        Some(v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) + v01 * (1.0 - fx) * fy + v11 * fx * fy)
    }

    /// Evaluates the separable sum `Σ_k w_k · kx(m_i − x_k) · ky(t_j − y_k)`
    /// at every node as one matrix product `Ky · Kxᵀ`.
    pub fn separable_sum(
        &self,
        points: &[(f64, f64)],
        weights: Option<&[f64]>,
        kx: impl Fn(f64) -> f64,
        ky: impl Fn(f64) -> f64,
    ) -> Vec<f64> {
        let n = points.len();
        let cx = DMatrix::from_fn(n, self.nm, |k, i| kx(self.m(i) - points[k].0) * weights.map_or(1.0, |w| w[k]));
        let ty = DMatrix::from_fn(self.nt, n, |j, k| ky(self.t(j) - points[k].1));
        let prod = ty * cx;
        // row-major with T rows
        prod.transpose().as_slice().to_vec()
    }
}

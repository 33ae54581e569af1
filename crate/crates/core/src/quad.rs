//! Fixed-grid quadrature on uniform energy grids.
//!
//! Densities are sampled on a uniform grid and treated as their piecewise-linear
//! interpolant. Cauchy and principal-value integrals against that interpolant are
//! evaluated in closed form segment by segment (product integration), so the
//! logarithmic singularity at the evaluation point never has to be sampled.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Uniform grid `start + i * step`, `i = 0..len`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Grid {
    pub fn uniform(start: f64, end: f64, len: usize) -> Self {
        assert!(len >= 2, "grid needs at least two points");
        assert!(end > start, "grid end must exceed start");
        Grid {
            start,
            step: (end - start) / (len - 1) as f64,
            len,
        }
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.node(self.len - 1)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.node(i)).collect()
    }

    /// Every other node of `self`.
    pub fn coarsened(&self) -> Grid {
        Grid {
            start: self.start,
            step: 2.0 * self.step,
            len: self.len.div_ceil(2),
        }
    }

    /// Index of the node at `x` if `x` sits on a node up to rounding.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let t = (x - self.start) / self.step;
        let k = t.round();
        if k >= 0.0 && (k as usize) < self.len && (t - k).abs() < 1e-9 {
            Some(k as usize)
        } else {
            None
        }
    }
}

/// Keeps every other sample, matching [`Grid::coarsened`].
pub fn coarsen<T: Copy>(values: &[T]) -> Vec<T> {
    values.iter().step_by(2).copied().collect()
}

/// Linear interpolation of grid samples; zero outside the grid.
pub fn interp(grid: &Grid, values: &[f64], x: f64) -> f64 {
    if x < grid.start || x > grid.end() {
        return 0.0;
    }
    let t = (x - grid.start) / grid.step;
    let i = (t.floor() as usize).min(grid.len - 2);
    let f = t - i as f64;
    values[i] * (1.0 - f) + values[i + 1] * f
}

pub fn trapezoid(grid: &Grid, values: &[f64]) -> f64 {
    debug_assert_eq!(values.len(), grid.len);
    let n = values.len();
    let inner: f64 = values[1..n - 1].iter().sum();
    grid.step * (inner + 0.5 * (values[0] + values[n - 1]))
}

pub fn trapezoid_c(grid: &Grid, values: &[Complex64]) -> Complex64 {
    debug_assert_eq!(values.len(), grid.len);
    let n = values.len();
    let inner: Complex64 = values[1..n - 1].iter().sum();
    (inner + 0.5 * (values[0] + values[n - 1])) * grid.step
}

/// `(D, phi)` with `D = -ln(1 - u)` and `phi = D / u - 1`, stable for small `u`.
fn segment_terms(u: Complex64) -> (Complex64, Complex64) {
    if u.norm() < 0.05 {
        // phi = u/2 + u^2/3 + u^3/4 + ...
        let mut phi = Complex64::new(0.0, 0.0);
        let mut pow = u;
        for k in 2..16 {
            phi += pow / k as f64;
            pow *= u;
        }
        (u * (1.0 + phi), phi)
    } else {
        let d = -(Complex64::new(1.0, 0.0) - u).ln();
        (d, d / u - 1.0)
    }
}

fn segment_terms_real(u: f64) -> (f64, f64) {
    if u.abs() < 0.05 {
        let mut phi = 0.0;
        let mut pow = u;
        for k in 2..16 {
            phi += pow / k as f64;
            pow *= u;
        }
        (u * (1.0 + phi), phi)
    } else {
        let d = -(1.0 - u).abs().ln();
        (d, d / u - 1.0)
    }
}

/// `∫ L(ν) / (z - ν) dν` for the piecewise-linear interpolant `L`, `Im z != 0`.
pub fn cauchy_at(grid: &Grid, values: &[f64], z: Complex64) -> Complex64 {
    debug_assert!(z.im != 0.0);
    let h = grid.step;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..grid.len - 1 {
        let (a, b) = (values[j], values[j + 1]);
        if a == 0.0 && b == 0.0 {
            continue;
        }
        let u = h / (z - grid.node(j));
        let (d, phi) = segment_terms(u);
        // L(ν) = a + s (ν - ν_j): the constant part gives a·D, the slope part s·h·phi.
        acc += a * d + (b - a) * phi;
    }
    acc
}

/// Principal value `PV ∫ L(ν) / (x - ν) dν` at an arbitrary real `x`.
///
/// Returns `±inf` when `x` is a grid end point carrying a nonzero sample.
pub fn pv_at(grid: &Grid, values: &[f64], x: f64) -> f64 {
    if let Some(i) = grid.node_index(x) {
        return pv_at_node(grid, values, i);
    }
    let h = grid.step;
    let mut acc = 0.0;
    for j in 0..grid.len - 1 {
        let (a, b) = (values[j], values[j + 1]);
        if a == 0.0 && b == 0.0 {
            continue;
        }
        let u = h / (x - grid.node(j));
        let (d, phi) = segment_terms_real(u);
        acc += a * d + (b - a) * phi;
    }
    acc
}

/// `ln|k| - ln|k - 1|` for `k = -n..=n`, stored at offset `n`.
fn log_increments(n: usize) -> Vec<f64> {
    (0..=2 * n)
        .map(|m| {
            let k = m as f64 - n as f64;
            if k == 0.0 || k == 1.0 {
                0.0
            } else {
                k.abs().ln() - (k - 1.0).abs().ln()
            }
        })
        .collect()
}

/// Node-centred principal value; the two logarithms touching the node cancel.
fn pv_at_node_with(values: &[f64], i: usize, ell: &[f64]) -> f64 {
    let n = values.len();
    if i == 0 && values[0] != 0.0 {
        return f64::NEG_INFINITY * values[0].signum();
    }
    if i == n - 1 && values[n - 1] != 0.0 {
        return f64::INFINITY * values[n - 1].signum();
    }
    let mut acc = 0.0;
    for j in 0..n - 1 {
        let (a, b) = (values[j], values[j + 1]);
        if j + 1 == i || j == i || (a == 0.0 && b == 0.0) {
            continue;
        }
        let k = i as isize - j as isize;
        acc += (a + (b - a) * k as f64) * ell[(k + n as isize) as usize];
    }
    acc - (values[n - 1] - values[0])
}

fn pv_at_node(grid: &Grid, values: &[f64], i: usize) -> f64 {
    pv_at_node_with(values, i, &log_increments(grid.len))
}

/// Principal value transform evaluated on every node of the grid.
pub fn pv_transform(grid: &Grid, values: &[f64]) -> Vec<f64> {
    use rayon::prelude::*;
    let ell = log_increments(grid.len);
    (0..grid.len)
        .into_par_iter()
        .map(|i| pv_at_node_with(values, i, &ell))
        .collect()
}

/// `∫ L(ν) / (ν - p) dν` for a pole `p <= grid.start`.
///
/// Exact for the interpolant; `+inf` when `p` coincides with the first node and
/// the first sample is nonzero (non-integrable `1/ν` singularity).
pub fn inverse_moment(grid: &Grid, values: &[f64], pole: f64) -> f64 {
    debug_assert!(pole <= grid.start + 1e-12 * grid.step);
    -pv_at(grid, values, pole)
}

/// Richardson extrapolation from estimates at widths `w`, `2w`, `4w` whose
/// error expands as `a w^p + b w^q + ...`; both leading terms are removed.
pub fn richardson3(fine: f64, mid: f64, coarse: f64, p: i32, q: i32) -> f64 {
    let rp = 2f64.powi(p);
    let rq = 2f64.powi(q);
    let lf = (rp * fine - mid) / (rp - 1.0);
    let lc = (rp * mid - coarse) / (rp - 1.0);
    (rq * lf - lc) / (rq - 1.0)
}

/// Pointwise [`richardson3`] over equally sized sample vectors.
pub fn richardson3_vec(fine: &[f64], mid: &[f64], coarse: &[f64], p: i32, q: i32) -> Vec<f64> {
    fine.iter()
        .zip(mid)
        .zip(coarse)
        .map(|((&a, &b), &c)| richardson3(a, b, c, p, q))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn semicircle(grid: &Grid) -> Vec<f64> {
        grid.nodes()
            .iter()
            .map(|&x| {
                let y = x - 2.0;
                if y.abs() < 2.0 {
                    (4.0 - y * y).sqrt() / (2.0 * std::f64::consts::PI)
                } else {
                    0.0
                }
            })
            .collect()
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let g = Grid::uniform(0.0, 2.0, 11);
        let v: Vec<f64> = g.nodes().iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((trapezoid(&g, &v) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn pv_of_constant_matches_log() {
        let g = Grid::uniform(0.0, 1.0, 101);
        let v = vec![1.0; 101];
        for &x in &[-0.5, 0.3333, 1.7] {
            let want = (x - 0.0f64).abs().ln() - (x - 1.0f64).abs().ln();
            assert!((pv_at(&g, &v, x) - want).abs() < 1e-12, "x={x}");
        }
        // node inside the interval
        let want = (0.5f64).ln() - (0.5f64).ln();
        assert!((pv_at(&g, &v, 0.5) - want).abs() < 1e-12);
    }

    #[test]
    fn node_and_offnode_pv_agree_nearby() {
        let g = Grid::uniform(0.0, 4.0, 801);
        let v = semicircle(&g);
        let a = pv_at(&g, &v, 1.0);
        let b = pv_at(&g, &v, 1.0 + 1e-7);
        assert!((a - b).abs() < 1e-5);
    }

    #[test]
    fn cauchy_tends_to_boundary_value() {
        let g = Grid::uniform(0.0, 4.0, 801);
        let v = semicircle(&g);
        let x = g.node(300);
        let pv = pv_at(&g, &v, x);
        let z = cauchy_at(&g, &v, Complex64::new(x, 1e-9));
        assert!((z.re - pv).abs() < 1e-6);
        assert!((z.im + std::f64::consts::PI * v[300]).abs() < 1e-6);
    }

    #[test]
    fn inverse_moment_of_linear_ramp() {
        // L(ν) = ν on [0,1]: ∫ ν/ν = 1
        let g = Grid::uniform(0.0, 1.0, 51);
        let v = g.nodes();
        assert!((inverse_moment(&g, &v, 0.0) - 1.0).abs() < 1e-12);
        let mut w = v.clone();
        w[0] = 0.5;
        assert!(inverse_moment(&g, &w, 0.0).is_infinite());
    }

    #[test]
    fn richardson_removes_quadratic_and_quartic_terms() {
        let f = |w: f64| 1.0 + 0.3 * w * w - 0.2 * w.powi(4);
        let r = richardson3(f(0.1), f(0.2), f(0.4), 2, 4);
        assert!((r - 1.0).abs() < 1e-12);
        let g = |w: f64| 2.0 + 0.5 * w + 0.7 * w * w;
        let r = richardson3(g(0.1), g(0.2), g(0.4), 1, 2);
        assert!((r - 2.0).abs() < 1e-12);
    }
}

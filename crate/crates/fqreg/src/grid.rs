//! Discrete representation of functions on an interval.
//!
//! A [`Grid`] is a strictly increasing abscissa vector shared (through an
//! `Arc`) by every [`Curve`] of a sample. Inner products are composite
//! trapezoid quadrature, whose weights are cached on the grid. Curves
//! observed on a foreign abscissa are brought onto an analysis grid with
//! [`natural_cubic_spline`].

use std::sync::Arc;

use crate::error::{Error, Result};

/// Minimum number of grid points (also the minimum number of spline knots).
pub const MIN_GRID_LEN: usize = 4;

/// Strictly increasing, finite abscissae with cached trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Builds a grid from raw abscissae, validating the invariants.
    pub fn new(points: Vec<f64>) -> Result<Arc<Self>> {
        if points.len() < MIN_GRID_LEN {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least {MIN_GRID_LEN} points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("grid points must be finite".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "grid points must be strictly increasing".into(),
            ));
        }
        let weights = trapezoid_weights(&points);
        Ok(Arc::new(Grid { points, weights }))
    }

    /// Uniform grid `t_i = i/(m-1)` on `[0, 1]`.
    pub fn uniform(m: usize) -> Result<Arc<Self>> {
        if m < MIN_GRID_LEN {
            return Err(Error::InvalidArgument(format!(
                "uniform grid needs at least {MIN_GRID_LEN} points, got {m}"
            )));
        }
        let step = 1.0 / (m - 1) as f64;
        Self::new((0..m).map(|i| i as f64 * step).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a valid grid always has at least MIN_GRID_LEN points
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Composite trapezoid quadrature weights for this grid.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// First and last abscissa.
    pub fn span(&self) -> (f64, f64) {
        (self.points[0], *self.points.last().unwrap())
    }

    /// Grids are interchangeable when their points coincide exactly.
    pub fn same_points(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || self.points == other.points
    }
}

fn trapezoid_weights(points: &[f64]) -> Vec<f64> {
    let m = points.len();
    let mut w = vec![0.0; m];
    w[0] = (points[1] - points[0]) / 2.0;
    w[m - 1] = (points[m - 1] - points[m - 2]) / 2.0;
    for i in 1..m - 1 {
        w[i] = (points[i + 1] - points[i - 1]) / 2.0;
    }
    w
}

/// Function values on a shared [`Grid`].
#[derive(Debug, Clone)]
pub struct Curve {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "curve has {} values on a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("curve values must be finite".into()));
        }
        Ok(Curve { grid, values })
    }

    /// Curve that is identically `value` on `grid`.
    pub fn constant(grid: Arc<Grid>, value: f64) -> Result<Self> {
        let m = grid.len();
        Curve::new(grid, vec![value; m])
    }

    /// Curve with values `f(t_i)`.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        Curve::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Trapezoid approximation of the integral of the curve over its grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v)
            .sum()
    }
}

/// Trapezoid-rule approximation of the L2 inner product of two curves.
///
/// The curves must share an identical grid; the rule is exact whenever the
/// pointwise product has total polynomial degree at most one.
pub fn inner_product(f: &Curve, g: &Curve) -> Result<f64> {
    if !Arc::ptr_eq(&f.grid, &g.grid) && !f.grid.same_points(&g.grid) {
        return Err(Error::GridMismatch);
    }
    let mut acc = 0.0;
    for ((w, fv), gv) in f.grid.weights().iter().zip(&f.values).zip(&g.values) {
        acc += w * fv * gv;
    }
    Ok(acc)
}

/// Natural cubic spline through `(x, y)`, evaluated at the target grid.
///
/// Natural boundary conditions set the second derivative to zero at both
/// end knots. Target points must lie within `[x[0], x[last]]`; only
/// round-off slack (1e-12 of the knot span) is tolerated beyond the ends.
pub fn natural_cubic_spline(x: &[f64], y: &[f64], target: &Arc<Grid>) -> Result<Curve> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "spline needs matching knot vectors, got {} x and {} y",
            x.len(),
            y.len()
        )));
    }
    if x.len() < MIN_GRID_LEN {
        return Err(Error::InvalidArgument(format!(
            "spline needs at least {MIN_GRID_LEN} knots, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("spline knots must be finite".into()));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "spline knot abscissae must be strictly increasing".into(),
        ));
    }

    let second = natural_second_derivatives(x, y);
    let n = x.len();
    let (lo, hi) = (x[0], x[n - 1]);
    let slack = 1e-12 * (hi - lo);

    let mut values = Vec::with_capacity(target.len());
    for &t in target.points() {
        if t < lo - slack || t > hi + slack {
            return Err(Error::OutOfRange {
                point: t,
                min: lo,
                max: hi,
            });
        }
        let t = t.clamp(lo, hi);
        // interval index such that x[k] <= t <= x[k+1]
        let k = x.partition_point(|&xi| xi <= t).saturating_sub(1).min(n - 2);
        let h = x[k + 1] - x[k];
        let a = (x[k + 1] - t) / h;
        let b = (t - x[k]) / h;
        let v = a * y[k]
            + b * y[k + 1]
            + ((a * a * a - a) * second[k] + (b * b * b - b) * second[k + 1]) * h * h / 6.0;
        values.push(v);
    }
    Curve::new(target.clone(), values)
}

/// Second derivatives of the natural spline at the knots (Thomas algorithm).
fn natural_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut second = vec![0.0; n];
    if n < 3 {
        return second;
    }
    // Tridiagonal system for the n-2 interior second derivatives.
    let mut diag = vec![0.0; n - 2];
    let mut rhs = vec![0.0; n - 2];
    let mut upper = vec![0.0; n - 2];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[i - 1] = 2.0 * (h0 + h1);
        upper[i - 1] = h1;
        rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    }
    // forward sweep; the lower diagonal entry for row i is h0 = x[i]-x[i-1]
    for i in 1..n - 2 {
        let lower = x[i + 1] - x[i];
        let factor = lower / diag[i - 1];
        diag[i] -= factor * upper[i - 1];
        rhs[i] -= factor * rhs[i - 1];
    }
    second[n - 2] = rhs[n - 3] / diag[n - 3];
    for i in (1..n - 2).rev() {
        second[i] = (rhs[i - 1] - upper[i - 1] * second[i + 1]) / diag[i - 1];
    }
    second
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_rejects_too_few_points() {
        assert!(matches!(Grid::uniform(2), Err(Error::InvalidArgument(_))));
        assert!(matches!(Grid::uniform(3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn uniform_grid_five_points() {
        let g = Grid::uniform(5).unwrap();
        assert_eq!(g.points(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn uniform_grid_endpoints_and_spacing() {
        let g = Grid::uniform(101).unwrap();
        assert_eq!(g.points()[0], 0.0);
        assert_eq!(g.points()[100], 1.0);
        for w in g.points().windows(2) {
            assert!((w[1] - w[0] - 0.01).abs() < 1e-15);
        }
    }

    #[test]
    fn grid_rejects_non_monotone_points() {
        assert!(Grid::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(Grid::new(vec![0.0, 0.6, 0.5, 1.0]).is_err());
        assert!(Grid::new(vec![0.0, 0.5, f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn inner_product_of_ones_is_one() {
        let g = Grid::uniform(11).unwrap();
        let one = Curve::constant(g, 1.0).unwrap();
        assert!((inner_product(&one, &one).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inner_product_exact_on_linear_integrand() {
        let g = Grid::uniform(101).unwrap();
        let id = Curve::from_fn(g.clone(), |t| t).unwrap();
        let one = Curve::constant(g, 1.0).unwrap();
        let ip = inner_product(&id, &one).unwrap();
        assert!((ip - 0.5).abs() <= 1e-14 * 0.5, "got {ip}");
    }

    #[test]
    fn inner_product_of_normalized_sine() {
        // f = g = sqrt(2) sin(pi t / 2) integrates to exactly 1; the m = 201
        // trapezoid rule must land within 1e-4 of the quadrature oracle.
        let g = Grid::uniform(201).unwrap();
        let f = Curve::from_fn(g, |t| (2.0f64).sqrt() * (std::f64::consts::PI * t / 2.0).sin())
            .unwrap();
        let ip = inner_product(&f, &f).unwrap();
        assert!((ip - 1.0).abs() < 1e-4, "got {ip}");
    }

    #[test]
    fn inner_product_rejects_mismatched_grids() {
        let f = Curve::constant(Grid::uniform(5).unwrap(), 1.0).unwrap();
        let g = Curve::constant(Grid::uniform(6).unwrap(), 1.0).unwrap();
        assert!(matches!(inner_product(&f, &g), Err(Error::GridMismatch)));
    }

    #[test]
    fn inner_product_symmetric_and_nonnegative_on_square() {
        let g = Grid::uniform(17).unwrap();
        let f = Curve::from_fn(g.clone(), |t| (7.3 * t).sin() - 0.4).unwrap();
        let h = Curve::from_fn(g, |t| t * t - 0.9).unwrap();
        let fg = inner_product(&f, &h).unwrap();
        let gf = inner_product(&h, &f).unwrap();
        assert!((fg - gf).abs() < 1e-15);
        assert!(inner_product(&f, &f).unwrap() >= 0.0);
    }

    #[test]
    fn spline_reproduces_constants() {
        let x = [0.0, 1.0, 2.5, 4.0, 5.0];
        let y = [3.0; 5];
        let target = Grid::new(vec![0.1, 0.9, 2.2, 4.9]).unwrap();
        let c = natural_cubic_spline(&x, &y, &target).unwrap();
        for v in c.values() {
            assert!((v - 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn spline_interpolates_linear_data_at_nodes() {
        let x = [0.0, 0.3, 0.7, 1.0];
        let y: Vec<f64> = x.iter().map(|&t| 2.0 * t + 1.0).collect();
        let target = Grid::new(x.to_vec()).unwrap();
        let c = natural_cubic_spline(&x, &y, &target).unwrap();
        for (v, e) in c.values().iter().zip(&y) {
            assert!((v - e).abs() <= 1e-12 * e.abs());
        }
    }

    #[test]
    fn spline_four_knots_of_sine_versus_dense_reference() {
        // Bound frozen from an independent dense-knot reference computed
        // before the build: max deviation 4.07e-3 on a 2001-point grid.
        let dense = Grid::uniform(2001).unwrap();
        let sin = |t: f64| (std::f64::consts::PI * t).sin();

        let x4: Vec<f64> = (0..4).map(|i| i as f64 / 3.0).collect();
        let y4: Vec<f64> = x4.iter().map(|&t| sin(t)).collect();
        let coarse = natural_cubic_spline(&x4, &y4, &dense).unwrap();

        let x1000: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        let y1000: Vec<f64> = x1000.iter().map(|&t| sin(t)).collect();
        let reference = natural_cubic_spline(&x1000, &y1000, &dense).unwrap();

        let max_err = coarse
            .values()
            .iter()
            .zip(reference.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_err < 4.2e-3, "got {max_err}");
    }

    #[test]
    fn spline_rejects_non_monotone_knots() {
        let target = Grid::uniform(5).unwrap();
        let r = natural_cubic_spline(&[0.0, 0.5, 0.4, 1.0], &[1.0; 4], &target);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn spline_rejects_extrapolation() {
        let target = Grid::new(vec![0.0, 0.5, 1.0, 1.5]).unwrap();
        let r = natural_cubic_spline(&[0.0, 0.3, 0.7, 1.0], &[1.0; 4], &target);
        match r {
            Err(Error::OutOfRange { point, .. }) => assert_eq!(point, 1.5),
            other => panic!("expected out-of-range, got {other:?}"),
        }
    }
}

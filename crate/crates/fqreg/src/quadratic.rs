//! Projected quadratic regression and the significance test for its
//! quadratic term.
//!
//! Centered curves are projected onto the leading principal components,
//! the quadratic model in the scores is fit by least squares, and the
//! quadratic coefficient block drives the test statistic, which is
//! calibrated against a chi-square law with `p(p+1)/2` degrees of
//! freedom.

use crate::error::{Error, Result, Stage};
use crate::fpca::{assemble_basis, choose_p_by_variance, decompose, FpcaBasis, FunctionalDataset};
use crate::linalg::{chi2_upper_tail, solve_least_squares, Matrix, SymMatrix};

/// Half-vectorization index: the ordered pairs `(i, j)`, `j <= i < p`,
/// read down the columns of the lower triangle.
///
/// For `p = 3` the order is `(0,0), (1,0), (2,0), (1,1), (2,1), (2,2)`
/// and the length is `r = p(p+1)/2`. Every quadratic-block object (the
/// coefficient vector, the design block, its moment matrices) uses this
/// one ordering so their quadratic forms are mutually consistent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VechIndex {
    p: usize,
    pairs: Vec<(usize, usize)>,
}

impl VechIndex {
    pub fn new(p: usize) -> Self {
        let mut pairs = Vec::with_capacity(p * (p + 1) / 2);
        for j in 0..p {
            for i in j..p {
                pairs.push((i, j));
            }
        }
        VechIndex { p, pairs }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `r = p(p+1)/2`.
    pub fn r(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

/// Least-squares fit of the projected quadratic model plus the moment
/// statistics the test needs.
#[derive(Debug, Clone)]
pub struct QuadFit {
    /// Raw quadratic coefficient block, length `r`, in vech order. Entry
    /// `(i, j)` equals the doubled off-diagonal coefficient, i.e.
    /// `(2 - 1{i=j})` times the kernel coordinate.
    pub a_hat: Vec<f64>,
    /// Linear coefficient block, length `p`.
    pub b_hat: Vec<f64>,
    /// Intercept.
    pub mu_hat: f64,
    /// Residuals, length `N`.
    pub residuals: Vec<f64>,
    /// Mean squared residual (divisor `N`).
    pub tau2_hat: f64,
    /// Second moment matrix of the quadratic design block, `r x r`.
    pub g_hat: SymMatrix,
    /// First moment of the quadratic design block, length `r`.
    pub m_hat: Vec<f64>,
    /// Projection scores, `N x p`.
    pub scores: Matrix,
    /// Ordering shared by all quadratic-block objects.
    pub vech: VechIndex,
    n: usize,
    var_y: f64,
}

impl QuadFit {
    /// Sample size the fit was computed from.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Population variance of the responses (divisor `N`).
    pub fn response_variance(&self) -> f64 {
        self.var_y
    }

    /// Kernel coordinates with the doubling factor divided out of the
    /// off-diagonal entries, in vech order.
    pub fn quad_coefficients(&self) -> Vec<f64> {
        self.vech
            .pairs()
            .iter()
            .zip(&self.a_hat)
            .map(|(&(i, j), &a)| if i == j { a } else { a / 2.0 })
            .collect()
    }
}

/// Outcome of the significance test.
#[derive(Debug, Clone)]
pub struct TestResult {
    /// Test statistic, nonnegative.
    pub u_stat: f64,
    /// Degrees of freedom `r = p(p+1)/2`.
    pub dof: usize,
    /// `P(chi2(dof) > u_stat)`.
    pub p_value: f64,
    /// True when the p-value underflowed to exactly zero in f64.
    pub p_value_underflowed: bool,
    pub fit: QuadFit,
    pub basis: FpcaBasis,
}

/// How the component count is selected by [`run_test`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PSelection {
    /// Keep exactly this many components.
    Fixed(usize),
    /// Keep the smallest count whose cumulative variance fraction
    /// reaches the threshold.
    VarianceThreshold(f64),
}

/// Projection scores: entry `(n, i)` is the quadrature inner product of
/// the centered `n`-th curve with the `i`-th eigenfunction.
pub fn compute_scores(data: &FunctionalDataset, basis: &FpcaBasis) -> Result<Matrix> {
    if !data.grid().same_points(basis.mean.grid()) {
        return Err(Error::GridMismatch);
    }
    let (n, p, m) = (data.len(), basis.p, data.grid().len());
    // fold the quadrature weights into the eigenfunctions once
    let weights = data.grid().weights();
    let weighted: Vec<Vec<f64>> = basis
        .eigenfunctions
        .iter()
        .map(|v| v.values().iter().zip(weights).map(|(a, w)| a * w).collect())
        .collect();
    let mean = basis.mean.values();
    let mut scores = Matrix::zeros(n, p);
    let mut centered = vec![0.0; m];
    for (row, curve) in data.curves().iter().enumerate() {
        for (c, (v, mu)) in centered.iter_mut().zip(curve.values().iter().zip(mean)) {
            *c = v - mu;
        }
        for (col, wv) in weighted.iter().enumerate() {
            let s: f64 = centered.iter().zip(wv).map(|(a, b)| a * b).sum();
            scores.set(row, col, s);
        }
    }
    Ok(scores)
}

/// Design matrix of the projected quadratic model: each row is the vech
/// block of score products, then the scores, then an intercept column.
pub fn build_design(scores: &Matrix) -> Matrix {
    let (n, p) = (scores.rows(), scores.cols());
    let vech = VechIndex::new(p);
    let r = vech.r();
    let mut design = Matrix::zeros(n, r + p + 1);
    for row in 0..n {
        let s = scores.row(row);
        for (col, &(i, j)) in vech.pairs().iter().enumerate() {
            design.set(row, col, s[i] * s[j]);
        }
        for (col, &si) in s.iter().enumerate() {
            design.set(row, r + col, si);
        }
        design.set(row, r + p, 1.0);
    }
    design
}

/// Fits the projected quadratic model by least squares.
///
/// Returns the coefficient blocks, residuals, the mean squared residual,
/// and the first two moments of the quadratic design block. A zero
/// residual variance is not an error here; it surfaces as a perfect-fit
/// error when the statistic is requested.
pub fn fit_quadratic(data: &FunctionalDataset, basis: &FpcaBasis) -> Result<QuadFit> {
    let n = data.len();
    let p = basis.p;
    let vech = VechIndex::new(p);
    let r = vech.r();
    if n < r + p + 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} observations to fit p={p} components, got {n}",
            r + p + 2
        )));
    }

    let scores = compute_scores(data, basis)?;
    let design = build_design(&scores);
    let y = data.responses();
    let beta = solve_least_squares(&design, y)?;

    let a_hat = beta[..r].to_vec();
    let b_hat = beta[r..r + p].to_vec();
    let mu_hat = beta[r + p];

    let residuals: Vec<f64> = (0..n)
        .map(|row| {
            let fitted: f64 = design.row(row).iter().zip(&beta).map(|(z, b)| z * b).sum();
            y[row] - fitted
        })
        .collect();
    let tau2_hat = residuals.iter().map(|e| e * e).sum::<f64>() / n as f64;

    let g_hat = SymMatrix::from_fn(r, |a, b| {
        (0..n).map(|row| design.get(row, a) * design.get(row, b)).sum::<f64>() / n as f64
    });
    let m_hat: Vec<f64> = (0..r)
        .map(|a| (0..n).map(|row| design.get(row, a)).sum::<f64>() / n as f64)
        .collect();

    let y_mean = y.iter().sum::<f64>() / n as f64;
    let var_y = y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64;

    Ok(QuadFit {
        a_hat,
        b_hat,
        mu_hat,
        residuals,
        tau2_hat,
        g_hat,
        m_hat,
        scores,
        vech,
        n,
        var_y,
    })
}

/// Test statistic: `N / tau2` times the quadratic form of the raw
/// quadratic coefficients in the centered second moment of the design
/// block.
///
/// Raises a perfect-fit error when the residual variance is numerically
/// zero (below `1e-12` times the response variance), since the statistic
/// is undefined there.
pub fn u_statistic(fit: &QuadFit, n: usize) -> Result<f64> {
    if fit.tau2_hat <= 1e-12 * fit.var_y {
        return Err(Error::PerfectFit);
    }
    let r = fit.vech.r();
    let mut quad_form = 0.0;
    for a in 0..r {
        for b in 0..r {
            let w = fit.g_hat.get(a, b) - fit.m_hat[a] * fit.m_hat[b];
            quad_form += fit.a_hat[a] * w * fit.a_hat[b];
        }
    }
    // the weight matrix is an empirical covariance, so the form is
    // nonnegative up to round-off
    Ok((n as f64 / fit.tau2_hat * quad_form).max(0.0))
}

/// Full testing pipeline: principal components, projected quadratic fit,
/// statistic, and chi-square p-value. Errors carry the stage they arose
/// in.
pub fn run_test(data: &FunctionalDataset, selection: PSelection) -> Result<TestResult> {
    let decomp = decompose(data).map_err(Error::in_stage(Stage::Fpca))?;
    let p = match selection {
        PSelection::Fixed(p) => p,
        PSelection::VarianceThreshold(th) => {
            choose_p_by_variance(&decomp.spectrum, th).map_err(Error::in_stage(Stage::Fpca))?
        }
    };
    let basis = assemble_basis(data.grid(), &decomp, p).map_err(Error::in_stage(Stage::Fpca))?;

    let fit = fit_quadratic(data, &basis).map_err(Error::in_stage(Stage::Fit))?;
    let u_stat = u_statistic(&fit, data.len()).map_err(Error::in_stage(Stage::Statistic))?;
    let dof = fit.vech.r();
    let p_value = chi2_upper_tail(u_stat, dof).map_err(Error::in_stage(Stage::Statistic))?;

    Ok(TestResult {
        u_stat,
        dof,
        p_value,
        p_value_underflowed: p_value == 0.0,
        fit,
        basis,
    })
}

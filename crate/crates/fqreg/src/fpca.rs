//! Empirical mean, covariance, and principal component basis of a
//! functional sample.
//!
//! Eigenfunctions are orthonormal in L2 under the grid's trapezoid
//! quadrature, not merely as coordinate vectors: the covariance matrix is
//! conjugated by the square root of the diagonal weight matrix, the
//! symmetric eigenproblem is solved, and eigenvectors are transformed
//! back. Eigenvalue estimates then target the integral covariance
//! operator.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Curve, Grid};
use crate::linalg::{sym_eig, SymMatrix};

/// `N` curves on one shared grid, paired with `N` scalar responses.
#[derive(Debug, Clone)]
pub struct FunctionalDataset {
    grid: Arc<Grid>,
    curves: Vec<Curve>,
    responses: Vec<f64>,
}

impl FunctionalDataset {
    pub fn new(curves: Vec<Curve>, responses: Vec<f64>) -> Result<Self> {
        if curves.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a functional dataset needs at least 2 curves, got {}",
                curves.len()
            )));
        }
        if responses.len() != curves.len() {
            return Err(Error::InvalidArgument(format!(
                "{} responses for {} curves",
                responses.len(),
                curves.len()
            )));
        }
        if responses.iter().any(|y| !y.is_finite()) {
            return Err(Error::InvalidArgument("responses must be finite".into()));
        }
        let grid = curves[0].grid().clone();
        for c in &curves[1..] {
            if !Arc::ptr_eq(c.grid(), &grid) && !c.grid().same_points(&grid) {
                return Err(Error::GridMismatch);
            }
        }
        Ok(FunctionalDataset {
            grid,
            curves,
            responses,
        })
    }

    /// Number of observations `N`.
    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the constructor requires N >= 2
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }
}

/// Sample mean curve and the leading eigenpairs of the sample covariance.
#[derive(Debug, Clone)]
pub struct FpcaBasis {
    /// Pointwise sample mean of the curves.
    pub mean: Curve,
    /// Leading `p` eigenvalue estimates, descending.
    pub eigenvalues: Vec<f64>,
    /// Leading `p` eigenfunctions, orthonormal under trapezoid quadrature.
    pub eigenfunctions: Vec<Curve>,
    /// Number of components kept.
    pub p: usize,
    /// Full eigenvalue spectrum (descending, clamped at zero), one entry
    /// per grid point; used for variance-explained bookkeeping.
    pub spectrum: Vec<f64>,
}

impl FpcaBasis {
    /// Fraction of total variance carried by the `p` kept components.
    pub fn variance_explained(&self) -> f64 {
        let total: f64 = self.spectrum.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        self.eigenvalues.iter().sum::<f64>() / total
    }
}

/// Pointwise average of the sample curves.
pub fn sample_mean(data: &FunctionalDataset) -> Curve {
    let m = data.grid.len();
    let mut acc = vec![0.0; m];
    for c in &data.curves {
        for (a, v) in acc.iter_mut().zip(c.values()) {
            *a += v;
        }
    }
    let n = data.len() as f64;
    for a in &mut acc {
        *a /= n;
    }
    Curve::new(data.grid.clone(), acc).expect("mean of finite curves is finite")
}

/// Sample covariance matrix sampled at the grid points, divisor `N`.
pub fn sample_covariance(data: &FunctionalDataset) -> SymMatrix {
    let centered = centered_values(data, &sample_mean(data));
    covariance_of_centered(&centered, data.grid.len(), data.len())
}

/// Centered curve values laid out per grid point: row `i` holds
/// `X_n(t_i) - mean(t_i)` over `n`, contiguous for covariance dots.
fn centered_values(data: &FunctionalDataset, mean: &Curve) -> Vec<f64> {
    let (n, m) = (data.len(), data.grid.len());
    let mut out = vec![0.0; m * n];
    for (k, c) in data.curves.iter().enumerate() {
        for (i, (v, mu)) in c.values().iter().zip(mean.values()).enumerate() {
            out[i * n + k] = v - mu;
        }
    }
    out
}

fn covariance_of_centered(centered: &[f64], m: usize, n: usize) -> SymMatrix {
    let scale = 1.0 / n as f64;
    SymMatrix::from_fn(m, |i, j| {
        let (ri, rj) = (&centered[i * n..(i + 1) * n], &centered[j * n..(j + 1) * n]);
        ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>() * scale
    })
}

/// Everything the eigenproblem yields, before a component count is chosen.
pub(crate) struct FpcaDecomposition {
    pub mean: Curve,
    /// Full spectrum, descending, clamped at zero.
    pub spectrum: Vec<f64>,
    /// Eigenfunction values (L2-normalized), one vector per spectrum entry.
    pub functions: Vec<Vec<f64>>,
    pub n: usize,
}

pub(crate) fn decompose(data: &FunctionalDataset) -> Result<FpcaDecomposition> {
    let mean = sample_mean(data);
    let centered = centered_values(data, &mean);
    let m = data.grid.len();
    let cov = covariance_of_centered(&centered, m, data.len());

    let weights = data.grid.weights();
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let conjugated = SymMatrix::from_fn(m, |i, j| sqrt_w[i] * cov.get(i, j) * sqrt_w[j]);
    let eig = sym_eig(&conjugated)?;

    let spectrum: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let functions: Vec<Vec<f64>> = eig
        .vectors
        .iter()
        .map(|u| {
            let mut v: Vec<f64> = u.iter().zip(&sqrt_w).map(|(ui, s)| ui / s).collect();
            fix_sign(&mut v, weights);
            v
        })
        .collect();
    Ok(FpcaDecomposition {
        mean,
        spectrum,
        functions,
        n: data.len(),
    })
}

/// Deterministic orientation: the quadrature integral of each
/// eigenfunction is nonnegative; ties fall back to the sign of the first
/// nonzero value. The test statistic itself is orientation-invariant, so
/// any fixed convention is valid; this one makes coefficient reports
/// reproducible.
fn fix_sign(v: &mut [f64], weights: &[f64]) {
    let integral: f64 = v.iter().zip(weights).map(|(a, w)| a * w).sum();
    let flip = if integral.abs() > 1e-12 {
        integral < 0.0
    } else {
        match v.iter().find(|a| a.abs() > 1e-12) {
            Some(first) => *first < 0.0,
            None => false,
        }
    };
    if flip {
        for a in v.iter_mut() {
            *a = -*a;
        }
    }
}

pub(crate) fn assemble_basis(
    grid: &Arc<Grid>,
    decomp: &FpcaDecomposition,
    p: usize,
) -> Result<FpcaBasis> {
    let m = grid.len();
    if p == 0 {
        return Err(Error::InvalidArgument("component count must be positive".into()));
    }
    let max_p = m.min(decomp.n - 1);
    if p > max_p {
        return Err(Error::ComponentDegenerate {
            index: p,
            reason: format!("requested p={p} exceeds the {max_p} identifiable components"),
        });
    }
    let leading = decomp.spectrum[0];
    let ratio = if leading > 0.0 {
        decomp.spectrum[p - 1] / leading
    } else {
        0.0
    };
    if !(ratio > 1e-10) {
        return Err(Error::ComponentDegenerate {
            index: p,
            reason: format!("eigenvalue ratio {ratio:.3e} is at or below 1e-10"),
        });
    }

    let eigenfunctions = decomp.functions[..p]
        .iter()
        .map(|v| Curve::new(grid.clone(), v.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(FpcaBasis {
        mean: decomp.mean.clone(),
        eigenvalues: decomp.spectrum[..p].to_vec(),
        eigenfunctions,
        p,
        spectrum: decomp.spectrum.clone(),
    })
}

/// Principal component basis with `p` components.
///
/// Requires `p <= min(m, N-1)` and that the `p`-th eigenvalue is not
/// numerically degenerate relative to the first.
pub fn compute_fpca(data: &FunctionalDataset, p: usize) -> Result<FpcaBasis> {
    let decomp = decompose(data)?;
    assemble_basis(data.grid(), &decomp, p)
}

/// Smallest `p` whose cumulative variance fraction reaches `threshold`.
pub fn choose_p_by_variance(spectrum: &[f64], threshold: f64) -> Result<usize> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "variance threshold must lie in (0, 1], got {threshold}"
        )));
    }
    if spectrum.is_empty() || spectrum.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::InvalidArgument(
            "spectrum must be nonempty, finite, and nonnegative".into(),
        ));
    }
    if spectrum.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument("spectrum must be nonincreasing".into()));
    }
    let total: f64 = spectrum.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("spectrum is identically zero".into()));
    }
    let mut cum = 0.0;
    for (i, l) in spectrum.iter().enumerate() {
        cum += l;
        if cum / total >= threshold {
            return Ok(i + 1);
        }
    }
    Ok(spectrum.len())
}

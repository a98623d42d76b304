//! The dense numerical kernels: symmetric eigendecomposition (cyclic
//! Jacobi), least squares via normal equations with a Cholesky
//! factorization, and the chi-square upper tail.

use crate::error::{Error, Result};

/// Dense symmetric matrix; storage keeps the two triangles identical.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Builds from `f(i, j)`; only `i <= j` is evaluated, the lower
    /// triangle is mirrored so symmetry holds exactly.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Dense row-major matrix for designs and score tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Eigenvalues sorted descending, paired with orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector belonging to `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
///
/// Sweeps continue until every off-diagonal magnitude drops below
/// `1e-12` times the Frobenius norm of the input.
pub fn sym_eig(a: &SymMatrix) -> Result<EigenDecomposition> {
    if a.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "eigendecomposition input must be finite".into(),
        ));
    }
    let n = a.n;
    let tol = JACOBI_TOL * a.frobenius_norm();
    let mut w = a.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut max_off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                max_off = max_off.max(w[p * n + q].abs());
            }
        }
        if max_off <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (w[q * n + q] - w[p * n + p]) / (2.0 * apq);
                let t = {
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                let app = w[p * n + p];
                let aqq = w[q * n + q];
                w[p * n + p] = app - t * apq;
                w[q * n + q] = aqq + t * apq;
                w[p * n + q] = 0.0;
                w[q * n + p] = 0.0;
                for j in 0..n {
                    if j == p || j == q {
                        continue;
                    }
                    let ajp = w[j * n + p];
                    let ajq = w[j * n + q];
                    let np = ajp - s * (ajq + tau * ajp);
                    let nq = ajq + s * (ajp - tau * ajq);
                    w[j * n + p] = np;
                    w[p * n + j] = np;
                    w[j * n + q] = nq;
                    w[q * n + j] = nq;
                }
                for j in 0..n {
                    let vjp = v[j * n + p];
                    let vjq = v[j * n + q];
                    v[j * n + p] = vjp - s * (vjq + tau * vjp);
                    v[j * n + q] = vjq + s * (vjp - tau * vjq);
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence("jacobi eigendecomposition"));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        w[j * n + j]
            .partial_cmp(&w[i * n + i])
            .expect("eigenvalues are finite")
    });
    let values = order.iter().map(|&k| w[k * n + k]).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|j| v[j * n + k]).collect())
        .collect();
    Ok(EigenDecomposition { values, vectors })
}

const PIVOT_TOL: f64 = 1e-12;

/// Least-squares solution of `z beta ~ y` through the normal equations.
///
/// The Gram matrix is factored by Cholesky; a pivot below `1e-12` times
/// the largest initial diagonal reports the offending column.
pub fn solve_least_squares(z: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let (n, q) = (z.rows, z.cols);
    if y.len() != n {
        return Err(Error::InvalidArgument(format!(
            "response length {} does not match {} design rows",
            y.len(),
            n
        )));
    }
    if n < q {
        return Err(Error::InvalidArgument(format!(
            "underdetermined system: {n} rows for {q} columns"
        )));
    }

    // gram = z' z, rhs = z' y
    let mut gram = SymMatrix::zeros(q);
    let mut rhs = vec![0.0; q];
    for i in 0..q {
        for j in i..q {
            let mut acc = 0.0;
            for row in 0..n {
                acc += z.get(row, i) * z.get(row, j);
            }
            gram.set(i, j, acc);
        }
        let mut acc = 0.0;
        for row in 0..n {
            acc += z.get(row, i) * y[row];
        }
        rhs[i] = acc;
    }

    let max_diag = (0..q).map(|i| gram.get(i, i)).fold(0.0f64, f64::max);
    let threshold = PIVOT_TOL * max_diag;

    // lower Cholesky factor, in place column by column
    let mut l = vec![0.0; q * q];
    for j in 0..q {
        let mut d = gram.get(j, j);
        for k in 0..j {
            d -= l[j * q + k] * l[j * q + k];
        }
        if d <= threshold || !d.is_finite() {
            return Err(Error::SingularDesign { column: j });
        }
        let djj = d.sqrt();
        l[j * q + j] = djj;
        for i in j + 1..q {
            let mut acc = gram.get(i, j);
            for k in 0..j {
                acc -= l[i * q + k] * l[j * q + k];
            }
            l[i * q + j] = acc / djj;
        }
    }

    // forward then back substitution
    let mut beta = rhs;
    for i in 0..q {
        for k in 0..i {
            beta[i] -= l[i * q + k] * beta[k];
        }
        beta[i] /= l[i * q + i];
    }
    for i in (0..q).rev() {
        for k in i + 1..q {
            beta[i] -= l[k * q + i] * beta[k];
        }
        beta[i] /= l[i * q + i];
    }
    Ok(beta)
}

/// Upper tail of the chi-square distribution with `r` degrees of freedom,
/// `P(chi2(r) > x) = Q(r/2, x/2)`.
///
/// Uses the regularized upper incomplete gamma: a power series below
/// `x = r + 1` and a Lentz continued fraction above. Absolute error is
/// below 1e-10 over the tested range.
pub fn chi2_upper_tail(x: f64, r: usize) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "chi-square statistic must be nonnegative, got {x}"
        )));
    }
    if r == 0 {
        return Err(Error::InvalidArgument(
            "degrees of freedom must be positive".into(),
        ));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let a = r as f64 / 2.0;
    let xh = x / 2.0;
    if x < r as f64 + 1.0 {
        Ok(1.0 - lower_gamma_series(a, xh)?)
    } else {
        upper_gamma_cf(a, xh)
    }
}

const GAMMA_MAX_ITER: usize = 400;
const GAMMA_EPS: f64 = 1e-16;

/// Regularized lower incomplete gamma P(a, x) by its power series.
fn lower_gamma_series(a: f64, x: f64) -> Result<f64> {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            let log_prefactor = a * x.ln() - x - ln_gamma(a);
            return Ok(sum * log_prefactor.exp());
        }
    }
    Err(Error::NoConvergence("incomplete gamma series"))
}

/// Regularized upper incomplete gamma Q(a, x) by a modified Lentz
/// continued fraction.
fn upper_gamma_cf(a: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < GAMMA_EPS {
            let log_prefactor = a * x.ln() - x - ln_gamma(a);
            return Ok(h * log_prefactor.exp());
        }
    }
    Err(Error::NoConvergence("incomplete gamma continued fraction"))
}

/// Natural log of the gamma function (Lanczos, g = 7, nine terms).
fn ln_gamma(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    let mut acc = 0.999_999_999_999_809_9;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (z + i as f64);
    }
    let t = z + 6.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z - 0.5) * t.ln() - t + acc.ln()
}

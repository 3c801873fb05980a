//! Splitting a calibrated forward-vol surface across correlated factors.
//!
//! Factor `m` has loading `a_m·exp(−κ_m (T − t))`. Each cell of the total
//! surface is shared out in proportion to the loadings and renormalised so the
//! aggregate instantaneous variance `Σ_{mn} ρ_mn σ_m σ_n` equals `σ²`.

use crate::error::{Error, Result};
use crate::svapprox::ForwardVolSurface;

const PSD_TOL: f64 = 1e-10;

/// Lower-triangular `L` with `L·Lᵀ = ρ`.
///
/// Pivots within `1e-10` of zero are treated as exact zeros so that
/// semi-definite matrices (e.g. perfectly correlated factors) are accepted.
pub fn cholesky(rho: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = rho.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let pivot = rho[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if pivot < -PSD_TOL {
            return Err(Error::NotPositiveSemiDefinite { row: j, pivot });
        }
        let d = if pivot <= PSD_TOL { 0.0 } else { pivot.sqrt() };
        l[j][j] = d;
        for i in j + 1..n {
            let s = rho[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            l[i][j] = if d == 0.0 {
                if s.abs() > 1e-8 {
                    return Err(Error::NotPositiveSemiDefinite { row: i, pivot: s });
                }
                0.0
            } else {
                s / d
            };
        }
    }
    Ok(l)
}

/// Weights, mean reversions and correlations of the driving factors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    weights: Vec<f64>,
    kappas: Vec<f64>,
    correlation: Vec<Vec<f64>>,
    chol: Vec<Vec<f64>>,
}

impl FactorSet {
    pub fn new(weights: Vec<f64>, kappas: Vec<f64>, correlation: Vec<Vec<f64>>) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::InvalidFactors("at least one factor required".into()));
        }
        if kappas.len() != n {
            return Err(Error::InvalidFactors(format!(
                "{} weights but {} mean reversions",
                n,
                kappas.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidFactors(format!("weight {w} must be positive")));
        }
        if let Some(k) = kappas.iter().find(|k| !(**k >= 0.0 && k.is_finite())) {
            return Err(Error::InvalidFactors(format!("mean reversion {k} must be >= 0")));
        }
        validate_correlation(&correlation, n)?;
        let chol = cholesky(&correlation)?;
        Ok(Self { weights, kappas, correlation, chol })
    }

    /// One factor, unit weight, no mean reversion.
    pub fn single() -> Self {
        Self::new(vec![1.0], vec![0.0], vec![vec![1.0]]).expect("trivial factor set")
    }

    /// Uncorrelated factors.
    pub fn independent(weights: Vec<f64>, kappas: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        let rho = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self::new(weights, kappas, rho)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kappas(&self) -> &[f64] {
        &self.kappas
    }

    pub fn correlation(&self) -> &[Vec<f64>] {
        &self.correlation
    }

    /// Cholesky factor of the correlation matrix.
    pub fn cholesky(&self) -> &[Vec<f64>] {
        &self.chol
    }

    /// `λ_m(t, T) = a_m·exp(−κ_m (T − t))`.
    pub fn loading(&self, m: usize, t: f64, maturity: f64) -> Result<f64> {
        if maturity < t {
            return Err(Error::InvalidInput(format!("maturity {maturity} before time {t}")));
        }
        Ok(self.weights[m] * (-self.kappas[m] * (maturity - t)).exp())
    }

    /// Loadings at a grid cell normalised so `Σ ρ_mn s_m s_n = 1`.
    pub fn shape(&self, i: usize, j: usize, dt: f64) -> Result<Vec<f64>> {
        let (t, maturity) = (i as f64 * dt, j as f64 * dt);
        let lambda = (0..self.len())
            .map(|m| self.loading(m, t, maturity))
            .collect::<Result<Vec<_>>>()?;
        let g2 = self.quadratic_form(&lambda, &lambda);
        if !(g2 > 0.0) || g2.sqrt() <= f64::MIN_POSITIVE {
            return Err(Error::DegenerateFactors { i, j });
        }
        let g = g2.sqrt();
        Ok(lambda.into_iter().map(|l| l / g).collect())
    }

    /// `Σ_mn ρ_mn x_m y_n`.
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (m, row) in self.correlation.iter().enumerate() {
            for (n, r) in row.iter().enumerate() {
                acc += r * x[m] * y[n];
            }
        }
        acc
    }

    /// Map factor-space values to independent driver space: `y_n = Σ_m L_mn x_m`.
    pub fn to_drivers(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|d| (d..n).map(|m| self.chol[m][d] * x[m]).sum()).collect()
    }
}

fn validate_correlation(rho: &[Vec<f64>], n: usize) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidFactors(msg));
    if rho.len() != n || rho.iter().any(|r| r.len() != n) {
        return bad(format!("correlation matrix must be {n}x{n}"));
    }
    for i in 0..n {
        if rho[i][i] != 1.0 {
            return bad(format!("correlation diagonal ({i},{i}) is {}, expected 1", rho[i][i]));
        }
        for j in 0..n {
            let r = rho[i][j];
            if !r.is_finite() || r.abs() > 1.0 {
                return bad(format!("correlation ({i},{j}) = {r} outside [-1, 1]"));
            }
            if (r - rho[j][i]).abs() > 1e-12 {
                return bad(format!("correlation not symmetric at ({i},{j})"));
            }
        }
    }
    Ok(())
}

/// Per-factor forward-vol grids `σ_m(t_i, T_j)` sharing one layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorVolSurface {
    pub factors: Vec<ForwardVolSurface>,
}

impl FactorVolSurface {
    pub fn dt(&self) -> f64 {
        self.factors[0].dt()
    }

    pub fn size(&self) -> usize {
        self.factors[0].size()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

/// `σ_m = σ·λ_m / sqrt(Σ ρ_mn λ_m λ_n)` at every known cell.
pub fn decompose(fvs: &ForwardVolSurface, fset: &FactorSet) -> Result<FactorVolSurface> {
    let mut factors = vec![ForwardVolSurface::empty(fvs.dt(), fvs.size()); fset.len()];
    for (i, j, sigma) in fvs.known_cells() {
        let shape = fset.shape(i, j, fvs.dt())?;
        for (surface, s) in factors.iter_mut().zip(&shape) {
            surface.set(i, j, sigma * s);
        }
    }
    Ok(FactorVolSurface { factors })
}

//! Gaussian machinery for the log-normal triangular array.
//!
//! The pre-limit model is built from a standardized Gaussian process whose
//! correlation tightens with the array size `n`: site pair `(t1, t2)` has
//! correlation `exp(-gamma(t1, t2) / (4 ln n))` where `gamma` is the
//! variogram. Each row of the array is pushed through the log-normal map
//! `z -> exp(b_n (z - b_n))` with `b_n` the classical norming constant of
//! `n` independent standard normal maxima. This module provides the norming
//! constants, the covariance family, factorized sampling, the anchored
//! increment process used by the limit's spectral profiles, and the
//! conditional mean/covariance closed forms together with their large-`n`
//! limits.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::domain::{variogram_matrix, Grid, Variogram};
use crate::error::{Error, Result};
use crate::rng::substream;

/// Values of a function on the sites of a grid, one entry per site.
pub type SampleFunction = Vec<f64>;

/// Default starting ridge for [`cholesky_psd`].
pub const DEFAULT_RIDGE: f64 = 1e-10;

/// Norming constant of the maximum of `n` independent standard normals:
/// `b_n = (2 ln n)^(1/2) - (2 ln n)^(-1/2) (ln ln n / 2 + ln(2 sqrt(pi)))`.
///
/// Requires `n >= 2`; below that `ln ln n` is undefined.
pub fn norming_constant(n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::argument(format!(
            "norming constant requires n >= 2, got {n}"
        )));
    }
    let two_log = 2.0 * (n as f64).ln();
    let correction = 0.5 * (n as f64).ln().ln() + (2.0 * std::f64::consts::PI.sqrt()).ln();
    Ok(two_log.sqrt() - correction / two_log.sqrt())
}

/// Diagnostic ratio `n / (sqrt(2 pi) b_n exp(b_n^2 / 2))`.
///
/// The norming constant is calibrated so this tends to 1; the approach is
/// logarithmically slow, so only coarse assertions are meaningful.
pub fn norming_ratio(n: u64) -> Result<f64> {
    let b = norming_constant(n)?;
    Ok(n as f64 / ((2.0 * std::f64::consts::PI).sqrt() * b * (b * b / 2.0).exp()))
}

/// Correlation family `r_n(t1, t2) = exp(-gamma(t1, t2) / (4 ln n))` of the
/// triangular array.
#[derive(Debug, Clone, Copy)]
pub struct CovarianceFamily {
    variogram: Variogram,
    n: u64,
    four_log_n: f64,
}

impl CovarianceFamily {
    /// Family member for array size `n >= 2`.
    pub fn new(variogram: Variogram, n: u64) -> Result<CovarianceFamily> {
        if n < 2 {
            return Err(Error::argument(format!(
                "covariance family requires n >= 2, got {n}"
            )));
        }
        Ok(CovarianceFamily {
            variogram,
            n,
            four_log_n: 4.0 * (n as f64).ln(),
        })
    }

    /// Array size this member belongs to.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Correlation produced by a given variogram value.
    pub fn correlation_of(&self, gamma: f64) -> f64 {
        (-gamma / self.four_log_n).exp()
    }

    /// Correlation between two grid sites.
    pub fn correlation(&self, grid: &Grid, i: usize, j: usize) -> f64 {
        self.correlation_of(self.variogram.value(grid.distance(i, j)))
    }

    /// Full site-by-site correlation matrix (unit diagonal).
    pub fn matrix(&self, grid: &Grid) -> DMatrix<f64> {
        let n = grid.len();
        DMatrix::from_fn(n, n, |i, j| self.correlation(grid, i, j))
    }

    /// Correlation matrix restricted to a subset of grid sites, in the
    /// order given.
    pub fn matrix_on(&self, grid: &Grid, sites: &[usize]) -> Result<DMatrix<f64>> {
        if sites.is_empty() {
            return Err(Error::argument("site subset must be nonempty".to_string()));
        }
        for &s in sites {
            if s >= grid.len() {
                return Err(Error::argument(format!(
                    "site {s} out of range for a {}-site grid",
                    grid.len()
                )));
            }
        }
        Ok(DMatrix::from_fn(sites.len(), sites.len(), |i, j| {
            self.correlation(grid, sites[i], sites[j])
        }))
    }
}

/// Lower-triangular Cholesky factor of `matrix`, with a ridge escalation for
/// positive semidefinite input.
///
/// The plain factorization is attempted first; on failure `ridge * I` is
/// added to the diagonal, escalating tenfold up to three ridge attempts
/// before reporting a numerical error. A successful factor `L` satisfies
/// `L L^T = matrix + r I` for the smallest ridge `r` that worked.
pub fn cholesky_psd(matrix: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::argument(format!(
            "cholesky needs a square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::argument(format!(
            "ridge must be nonnegative and finite, got {ridge}"
        )));
    }
    for attempt in 0..4 {
        let r = if attempt == 0 {
            0.0
        } else {
            ridge * 10f64.powi(attempt - 1)
        };
        let mut work = matrix.clone();
        for i in 0..work.nrows() {
            work[(i, i)] += r;
        }
        if let Some(chol) = work.cholesky() {
            return Ok(chol.l());
        }
        if ridge == 0.0 {
            break;
        }
    }
    Err(Error::numerical(format!(
        "matrix is not positive semidefinite within ridge escalation up to {:e}",
        ridge * 100.0
    )))
}

/// Multiply a lower-triangular factor by a fresh standard normal vector,
/// accumulating column by column so no intermediate vector is needed.
fn factor_times_normals(factor: &DMatrix<f64>, rng: &mut ChaCha12Rng, out: &mut [f64]) {
    let n = factor.nrows();
    out[..n].fill(0.0);
    for k in 0..n {
        let xi: f64 = rng.sample(StandardNormal);
        for (i, slot) in out.iter_mut().enumerate().take(n).skip(k) {
            *slot += xi * factor[(i, k)];
        }
    }
}

/// Draw `count` centered Gaussian vectors with the given covariance.
///
/// Replicate `i` is drawn from substream `i` of `seed`, so any prefix of the
/// batch is reproducible independently of the batch size.
pub fn sample_cov(cov: &DMatrix<f64>, count: usize, seed: u64) -> Result<Vec<SampleFunction>> {
    let factor = cholesky_psd(cov, DEFAULT_RIDGE)?;
    let dim = cov.nrows();
    let mut draws = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = substream(seed, i as u64);
        let mut z = vec![0.0; dim];
        factor_times_normals(&factor, &mut rng, &mut z);
        draws.push(z);
    }
    Ok(draws)
}

/// Draw `count` centered Gaussian functions with covariance `cov` on `grid`.
///
/// Replicate `i` is drawn from substream `i` of `seed`, so any prefix of the
/// batch is reproducible independently of the batch size.
pub fn sample_gp(
    grid: &Grid,
    cov: &DMatrix<f64>,
    count: usize,
    seed: u64,
) -> Result<Vec<SampleFunction>> {
    if cov.nrows() != grid.len() || cov.ncols() != grid.len() {
        return Err(Error::argument(format!(
            "covariance is {}x{} but the grid has {} sites",
            cov.nrows(),
            cov.ncols(),
            grid.len()
        )));
    }
    sample_cov(cov, count, seed)
}

/// Covariance of the anchored Gaussian increment process on `grid`:
/// `cov(i, j) = (gamma(i, o) + gamma(j, o) - gamma(i, j)) / 2` with `o` the
/// grid origin. The origin row and column are exactly zero, so the process
/// is pinned to zero there, and the increment variance between the origin
/// and site `t` is exactly `gamma(t, o)`.
pub fn increment_covariance(grid: &Grid, variogram: &Variogram) -> DMatrix<f64> {
    let gamma = variogram_matrix(grid, variogram);
    let o = grid.origin();
    let n = grid.len();
    DMatrix::from_fn(n, n, |i, j| {
        0.5 * (gamma[(i, o)] + gamma[(j, o)] - gamma[(i, j)])
    })
}

/// Lower-triangular factor of `full` restricted to the sites other than
/// `pinned`, paired with those site indices in grid order.
///
/// Covariances that pin one site to an exact value have a zero row and
/// column there, which defeats a plain factorization; dropping the pinned
/// site first keeps it noise-free instead of leaking ridge-sized noise in.
pub(crate) fn pinned_factor(
    full: &DMatrix<f64>,
    pinned: usize,
) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let free: Vec<usize> = (0..full.nrows()).filter(|&s| s != pinned).collect();
    let reduced = DMatrix::from_fn(free.len(), free.len(), |a, b| full[(free[a], free[b])]);
    Ok((cholesky_psd(&reduced, DEFAULT_RIDGE)?, free))
}

/// Lower-triangular factor of the increment covariance restricted to the
/// non-origin sites, paired with those site indices in grid order.
pub(crate) fn increment_factor(
    grid: &Grid,
    variogram: &Variogram,
) -> Result<(DMatrix<f64>, Vec<usize>)> {
    pinned_factor(&increment_covariance(grid, variogram), grid.origin())
}

/// Draw one anchored increment process: a centered Gaussian function that is
/// exactly zero at the grid origin with increment variance given by the
/// variogram.
pub fn sample_increment(grid: &Grid, variogram: &Variogram, seed: u64) -> Result<SampleFunction> {
    let (factor, free) = increment_factor(grid, variogram)?;
    let mut rng = substream(seed, 0);
    let mut reduced = vec![0.0; free.len()];
    factor_times_normals(&factor, &mut rng, &mut reduced);
    let mut w = vec![0.0; grid.len()];
    for (slot, &site) in reduced.iter().zip(free.iter()) {
        w[site] = *slot;
    }
    Ok(w)
}

/// Log-normal transform of one Gaussian function: `exp(b_n (z - b_n))`
/// entrywise.
pub fn lognormal_process(z: &[f64], n: u64) -> Result<SampleFunction> {
    let b = norming_constant(n)?;
    let mut out = Vec::with_capacity(z.len());
    for &zi in z {
        let x = (b * (zi - b)).exp();
        if !x.is_finite() {
            return Err(Error::numerical(format!(
                "log-normal transform overflowed at z = {zi}, n = {n}"
            )));
        }
        out.push(x);
    }
    Ok(out)
}

/// Conditional mean of the array row given value `w` at the grid origin:
/// `mu(t) = w r_n(t, o) + b_n^2 (r_n(t, o) - 1)`.
///
/// Equals `w` exactly at the origin and tends to `w - gamma(t, o) / 2` as
/// `n` grows (logarithmically slowly).
pub fn conditional_mean(
    w: f64,
    n: u64,
    grid: &Grid,
    variogram: &Variogram,
) -> Result<SampleFunction> {
    if !w.is_finite() {
        return Err(Error::argument(format!(
            "conditioning value must be finite, got {w}"
        )));
    }
    let family = CovarianceFamily::new(*variogram, n)?;
    let b = norming_constant(n)?;
    let o = grid.origin();
    Ok((0..grid.len())
        .map(|t| {
            let r = family.correlation(grid, t, o);
            w * r + b * b * (r - 1.0)
        })
        .collect())
}

/// Conditional covariance of the array row given its value at the grid
/// origin: `cov(t1, t2) = b_n^2 (r_n(t1, t2) - r_n(t1, o) r_n(t2, o))`.
///
/// The origin row and column are exactly zero; as `n` grows the entries tend
/// to `(gamma(t1, o) + gamma(t2, o) - gamma(t1, t2)) / 2`.
pub fn conditional_cov(n: u64, grid: &Grid, variogram: &Variogram) -> Result<DMatrix<f64>> {
    let family = CovarianceFamily::new(*variogram, n)?;
    let b = norming_constant(n)?;
    let o = grid.origin();
    let m = grid.len();
    Ok(DMatrix::from_fn(m, m, |i, j| {
        b * b * (family.correlation(grid, i, j) - family.correlation(grid, i, o) * family.correlation(grid, j, o))
    }))
}

/// Draw one conditioned array row: conditional mean plus a factor of the
/// conditional covariance times fresh normals. Diagnostic helper composing
/// [`conditional_mean`] and [`conditional_cov`].
pub fn sample_conditional(
    w: f64,
    n: u64,
    grid: &Grid,
    variogram: &Variogram,
    seed: u64,
) -> Result<SampleFunction> {
    let mean = conditional_mean(w, n, grid, variogram)?;
    let cov = conditional_cov(n, grid, variogram)?;
    // The conditioned site has a zero covariance row; factor without it so
    // its value stays exactly `w`.
    let (factor, free) = pinned_factor(&cov, grid.origin())?;
    let mut rng = substream(seed, 0);
    let mut reduced = vec![0.0; free.len()];
    factor_times_normals(&factor, &mut rng, &mut reduced);
    let mut out = mean;
    for (fluct, &site) in reduced.iter().zip(free.iter()) {
        out[site] += fluct;
    }
    Ok(out)
}

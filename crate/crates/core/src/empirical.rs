//! Partial maxima of triangular arrays.
//!
//! The pre-limit object is a batch of independent sample functions
//! `X_1, ..., X_m` on a common site grid, viewed through running maxima: at
//! time `u` the process is the sitewise maximum of the first `floor(n u)`
//! functions, with the empty maximum equal to zero. Paths are right
//! continuous step functions in `u`, recorded on an explicit time grid by
//! [`CadlagMaxProcess`]. The same container holds realized paths of the
//! limit process, so pre-limit and limit can be compared through one
//! interface.

use crate::error::{Error, Result};
use crate::gauss::SampleFunction;

/// A right-continuous running-maximum path recorded on a time grid.
///
/// Values are stored time-major: entry `(ti, si)` is the path value at time
/// `times[ti]` and site `si`.
#[derive(Debug, Clone, PartialEq)]
pub struct CadlagMaxProcess {
    times: Vec<f64>,
    sites: usize,
    values: Vec<f64>,
}

impl CadlagMaxProcess {
    /// Wrap recorded values; `values` must be time-major with one row per
    /// time and one column per site, times finite and strictly increasing.
    pub fn new(times: Vec<f64>, sites: usize, values: Vec<f64>) -> Result<CadlagMaxProcess> {
        if values.len() != times.len() * sites {
            return Err(Error::argument(format!(
                "expected {} values for {} times and {} sites, got {}",
                times.len() * sites,
                times.len(),
                sites,
                values.len()
            )));
        }
        for pair in times.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::argument(format!(
                    "times must be strictly increasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if times.iter().any(|t| !t.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::argument(
                "times and values must all be finite".to_string(),
            ));
        }
        Ok(CadlagMaxProcess {
            times,
            sites,
            values,
        })
    }

    /// Time grid the path was recorded on.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of sites per time.
    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Path value at time index `ti` and site `si`.
    pub fn value(&self, ti: usize, si: usize) -> f64 {
        self.values[ti * self.sites + si]
    }

    /// All site values at time index `ti`.
    pub fn row(&self, ti: usize) -> &[f64] {
        &self.values[ti * self.sites..(ti + 1) * self.sites]
    }
}

/// Number of array entries active at time `u`, i.e. `floor(n u)`.
///
/// Products that are integers in exact arithmetic can land a hair below the
/// integer in floating point; a relative guard snaps those up so block
/// boundaries are hit exactly.
pub fn block_count(n: u64, u: f64) -> usize {
    debug_assert!(u >= 0.0 && u.is_finite());
    let x = n as f64 * u;
    let f = x.floor();
    let snapped = if x - f > 1.0 - 1e-9 { f + 1.0 } else { f };
    snapped.min(usize::MAX as f64) as usize
}

/// Sitewise maximum of a batch of sample functions; an empty batch yields
/// the zero function.
pub fn pointwise_max(batch: &[SampleFunction], sites: usize) -> Result<SampleFunction> {
    let mut out = vec![0.0; sites];
    for (i, f) in batch.iter().enumerate() {
        if f.len() != sites {
            return Err(Error::argument(format!(
                "sample function {i} has {} sites, expected {sites}",
                f.len()
            )));
        }
        for (slot, &v) in out.iter_mut().zip(f.iter()) {
            if v > *slot {
                *slot = v;
            }
        }
    }
    Ok(out)
}

/// Running maxima of the first `floor(n u)` batch entries, recorded at each
/// time of `time_grid`.
///
/// The grid must be strictly increasing, nonnegative, and the batch must
/// contain at least `floor(n max_u)` sample functions of equal nonnegative
/// length.
pub fn partial_maxima(
    batch: &[SampleFunction],
    n: u64,
    time_grid: &[f64],
) -> Result<CadlagMaxProcess> {
    if time_grid.is_empty() {
        return Err(Error::argument("time grid must be nonempty".to_string()));
    }
    for &u in time_grid {
        if !(u.is_finite() && u >= 0.0) {
            return Err(Error::argument(format!(
                "times must be finite and nonnegative, got {u}"
            )));
        }
    }
    for pair in time_grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::argument(format!(
                "time grid must be strictly increasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    let needed = block_count(n, *time_grid.last().expect("nonempty grid"));
    if batch.len() < needed {
        return Err(Error::argument(format!(
            "batch has {} sample functions but the final time needs {needed}",
            batch.len()
        )));
    }
    let sites = batch.first().map_or(0, Vec::len);
    let mut running = vec![0.0; sites];
    let mut values = Vec::with_capacity(time_grid.len() * sites);
    let mut used = 0usize;
    for &u in time_grid {
        let k = block_count(n, u);
        for f in &batch[used..k] {
            if f.len() != sites {
                return Err(Error::argument(format!(
                    "sample function has {} sites, expected {sites}",
                    f.len()
                )));
            }
            for (slot, &v) in running.iter_mut().zip(f.iter()) {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::argument(format!(
                        "sample values must be finite and nonnegative, got {v}"
                    )));
                }
                if v > *slot {
                    *slot = v;
                }
            }
        }
        used = k;
        values.extend_from_slice(&running);
    }
    CadlagMaxProcess::new(time_grid.to_vec(), sites, values)
}

/// `rank`-th largest value at `site` among the first `floor(n u)` batch
/// entries; zero when fewer than `rank` entries are active.
pub fn empirical_order_stat(
    batch: &[SampleFunction],
    n: u64,
    rank: usize,
    u: f64,
    site: usize,
) -> Result<f64> {
    if rank == 0 {
        return Err(Error::argument("rank must be at least 1".to_string()));
    }
    if !(u.is_finite() && u >= 0.0) {
        return Err(Error::argument(format!(
            "time must be finite and nonnegative, got {u}"
        )));
    }
    let k = block_count(n, u);
    if batch.len() < k {
        return Err(Error::argument(format!(
            "batch has {} sample functions but time {u} needs {k}",
            batch.len()
        )));
    }
    if k < rank {
        return Ok(0.0);
    }
    let mut vals: Vec<f64> = batch[..k]
        .iter()
        .map(|f| {
            f.get(site).copied().ok_or_else(|| {
                Error::argument(format!("site {site} out of range for {}-site batch", f.len()))
            })
        })
        .collect::<Result<_>>()?;
    let idx = vals.len() - rank;
    let (_, kth, _) = vals.select_nth_unstable_by(idx, f64::total_cmp);
    Ok(*kth)
}

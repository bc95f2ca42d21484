//! Poisson point-measure construction of the limit process.
//!
//! The limit of rescaled running maxima is realized as a functional of a
//! Poisson point measure on time-function space: atom `k` carries an
//! arrival time uniform on `[0, horizon]`, a radial magnitude built from
//! cumulative unit exponentials (`radial = (gamma_k / horizon)^(-1/alpha)`,
//! so magnitudes arrive in decreasing order), and an independent spectral
//! profile on the site grid. The process value at time `u` and site `t` is
//! the maximum of `magnitude * spectral[t]` over atoms with arrival time at
//! most `u`, an empty maximum counting as zero.
//!
//! Truncating the Poisson expansion after finitely many atoms is exact for
//! every functional that only looks at values above the reported
//! [`PointMeasure::truncation_bound`]: all discarded atoms lie below it.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{Grid, Variogram};
use crate::empirical::CadlagMaxProcess;
use crate::error::{Error, Result};
use crate::gauss::increment_factor;

/// Minimum separation between atom arrival times; ties below this are
/// resolved at sampling time and rejected by [`PointMeasure::new`].
pub const MIN_TIME_SEPARATION: f64 = 1e-15;

/// Largest order-statistic rank the streaming marginal fold supports.
pub(crate) const MAX_MARGINAL_RANK: usize = 16;

/// One atom of a realized point measure.
///
/// The spectral profile is normalized to peak value 1, so the atom's
/// contribution at site `s` is `magnitude * spectral[s]` and its largest
/// contribution over sites is exactly `magnitude`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    /// Peak height of the atom over the site grid.
    pub magnitude: f64,
    /// Arrival time in `[0, horizon]`.
    pub time: f64,
    /// Profile over sites, normalized to maximum 1.
    pub spectral: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeasureHeader {
    horizon: f64,
    sites: usize,
    truncation_bound: f64,
}

/// A realized, truncated Poisson point measure with atoms sorted by arrival
/// time.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMeasure {
    horizon: f64,
    sites: usize,
    atoms: Vec<Atom>,
    truncation_bound: f64,
}

impl PointMeasure {
    /// Wrap atoms into a measure, checking every structural invariant:
    /// positive finite horizon, arrival times sorted strictly increasing
    /// within the horizon (separated by more than [`MIN_TIME_SEPARATION`]),
    /// positive finite magnitudes, and spectral profiles of the right length
    /// with entries in `[0, 1]` peaking at exactly 1.
    pub fn new(
        horizon: f64,
        sites: usize,
        atoms: Vec<Atom>,
        truncation_bound: f64,
    ) -> Result<PointMeasure> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::argument(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if sites == 0 {
            return Err(Error::argument("site count must be positive".to_string()));
        }
        if !(truncation_bound.is_finite() && truncation_bound >= 0.0) {
            return Err(Error::argument(format!(
                "truncation bound must be nonnegative and finite, got {truncation_bound}"
            )));
        }
        let mut last_time = f64::NEG_INFINITY;
        for (k, atom) in atoms.iter().enumerate() {
            if !(atom.time >= 0.0 && atom.time <= horizon) {
                return Err(Error::argument(format!(
                    "atom {k} arrives at {} outside [0, {horizon}]",
                    atom.time
                )));
            }
            if atom.time - last_time <= MIN_TIME_SEPARATION {
                return Err(Error::argument(format!(
                    "atom {k} arrival {} is not separated from the previous arrival {last_time}",
                    atom.time
                )));
            }
            last_time = atom.time;
            if !(atom.magnitude.is_finite() && atom.magnitude > 0.0) {
                return Err(Error::argument(format!(
                    "atom {k} magnitude must be positive and finite, got {}",
                    atom.magnitude
                )));
            }
            if atom.spectral.len() != sites {
                return Err(Error::argument(format!(
                    "atom {k} has {} spectral entries, expected {sites}",
                    atom.spectral.len()
                )));
            }
            let mut peak = 0.0f64;
            for &v in &atom.spectral {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::argument(format!(
                        "atom {k} spectral entries must be finite and nonnegative, got {v}"
                    )));
                }
                peak = peak.max(v);
            }
            if peak != 1.0 {
                return Err(Error::argument(format!(
                    "atom {k} spectral profile must peak at exactly 1, got {peak}"
                )));
            }
        }
        Ok(PointMeasure {
            horizon,
            sites,
            atoms,
            truncation_bound,
        })
    }

    /// Time horizon of the measure.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of sites each spectral profile covers.
    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Atoms sorted by arrival time.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Every atom discarded by the truncation contributes below this value
    /// at every time and site.
    pub fn truncation_bound(&self) -> f64 {
        self.truncation_bound
    }

    /// Serialize as JSON lines: one header line with horizon, site count,
    /// and truncation bound, then one line per atom in arrival order.
    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        let header = MeasureHeader {
            horizon: self.horizon,
            sites: self.sites,
            truncation_bound: self.truncation_bound,
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for atom in &self.atoms {
            serde_json::to_writer(&mut w, atom)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Parse the format written by [`PointMeasure::write_jsonl`], re-checking
    /// all structural invariants.
    pub fn read_jsonl(r: impl BufRead) -> Result<PointMeasure> {
        let mut lines = r.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::argument("missing header line".to_string()))??;
        let header: MeasureHeader = serde_json::from_str(&header_line)?;
        let mut atoms = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            atoms.push(serde_json::from_str(&line)?);
        }
        PointMeasure::new(header.horizon, header.sites, atoms, header.truncation_bound)
    }
}

/// Spectral profile law of the point measure's atoms.
///
/// A sampler fills a per-site buffer with one independent profile per call.
/// Profiles must be nonnegative with positive, finite supremum; their `alpha`
/// sets the radial tail exponent the measure pairs them with.
pub trait SpectralSampler {
    /// Radial tail exponent the profiles are paired with.
    fn alpha(&self) -> f64;

    /// Number of sites each profile covers.
    fn sites(&self) -> usize;

    /// Fill `out` (length [`SpectralSampler::sites`]) with one fresh profile.
    fn draw_into(&self, rng: &mut ChaCha12Rng, out: &mut [f64]);

    /// Allocate and return one fresh profile.
    fn draw(&self, rng: &mut ChaCha12Rng) -> Vec<f64> {
        let mut out = vec![0.0; self.sites()];
        self.draw_into(rng, &mut out);
        out
    }
}

/// The constant profile `1` at every site: the spectral law of a process
/// that is completely dependent across sites. Marginals at every site then
/// follow the pure radial law, which has simple closed forms — the
/// calibration case for the statistical tests.
#[derive(Debug, Clone)]
pub struct DegenerateSampler {
    sites: usize,
    alpha: f64,
}

impl DegenerateSampler {
    /// Constant-profile sampler on `sites` sites with tail exponent `alpha`.
    pub fn new(sites: usize, alpha: f64) -> Result<DegenerateSampler> {
        if sites == 0 {
            return Err(Error::argument("site count must be positive".to_string()));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::argument(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        Ok(DegenerateSampler { sites, alpha })
    }
}

impl SpectralSampler for DegenerateSampler {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn sites(&self) -> usize {
        self.sites
    }

    fn draw_into(&self, _rng: &mut ChaCha12Rng, out: &mut [f64]) {
        out.fill(1.0);
    }
}

/// Log-normal spectral profiles driven by a variogram:
/// `V(t) = exp(W(t) - gamma(t, o) / 2)` with `W` the anchored Gaussian
/// increment process of the variogram, pinned to zero at the grid origin
/// `o`. Every profile has `V(o) = 1` exactly and `E[V(t)] = 1` at every
/// site — the spectral law arising as the limit of the log-normal
/// triangular array.
#[derive(Debug, Clone)]
pub struct BrownResnickSampler {
    alpha: f64,
    origin: usize,
    drift: Vec<f64>,
    factor: nalgebra::DMatrix<f64>,
    free: Vec<usize>,
}

impl BrownResnickSampler {
    /// Sampler on `grid` with spatial dependence from `variogram` and tail
    /// exponent `alpha`.
    pub fn new(grid: &Grid, variogram: &Variogram, alpha: f64) -> Result<BrownResnickSampler> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::argument(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        let origin = grid.origin();
        let drift = (0..grid.len())
            .map(|s| -0.5 * variogram.value(grid.distance(s, origin)))
            .collect();
        let (factor, free) = increment_factor(grid, variogram)?;
        Ok(BrownResnickSampler {
            alpha,
            origin,
            drift,
            factor,
            free,
        })
    }
}

impl SpectralSampler for BrownResnickSampler {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn sites(&self) -> usize {
        self.drift.len()
    }

    fn draw_into(&self, rng: &mut ChaCha12Rng, out: &mut [f64]) {
        out.copy_from_slice(&self.drift);
        for k in 0..self.free.len() {
            let xi: f64 = rng.sample(StandardNormal);
            for a in k..self.free.len() {
                out[self.free[a]] += xi * self.factor[(a, k)];
            }
        }
        for v in out.iter_mut() {
            *v = v.exp();
        }
        // The origin accumulates neither drift nor noise; pin it bit-exactly.
        out[self.origin] = 1.0;
    }
}

/// Radial magnitude of the atom with cumulative exponential `gamma`.
fn radial(gamma: f64, horizon: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        horizon / gamma
    } else {
        (gamma / horizon).powf(-1.0 / alpha)
    }
}

/// Draw a truncated Poisson point measure with `atoms` atoms on
/// `[0, horizon]`, spectral profiles from `sampler`, randomness from `rng`.
///
/// Atoms are generated in decreasing magnitude order, then sorted by
/// arrival time. The reported truncation bound is the last (smallest)
/// radial magnitude times the largest spectral peak seen, an upper bound on
/// the contribution of every discarded atom of the full expansion.
pub fn sample_point_measure<S: SpectralSampler + ?Sized>(
    sampler: &S,
    horizon: f64,
    atoms: usize,
    rng: &mut ChaCha12Rng,
) -> Result<PointMeasure> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::argument(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    if atoms == 0 {
        return Err(Error::argument(
            "at least one atom is required".to_string(),
        ));
    }
    let sites = sampler.sites();
    let alpha = sampler.alpha();
    let mut out = Vec::with_capacity(atoms);
    let mut gamma = 0.0f64;
    let mut max_peak = 0.0f64;
    let mut last_radial = 0.0f64;
    let mut profile = vec![0.0; sites];
    for _ in 0..atoms {
        let e: f64 = rng.sample(Exp1);
        gamma += e;
        let time = rng.random_range(0.0..horizon);
        sampler.draw_into(rng, &mut profile);
        let peak = profile.iter().cloned().fold(0.0f64, f64::max);
        if !(peak.is_finite() && peak > 0.0) {
            return Err(Error::numerical(format!(
                "spectral profile has invalid peak {peak}"
            )));
        }
        last_radial = radial(gamma, horizon, alpha);
        let magnitude = last_radial * peak;
        if !magnitude.is_finite() {
            return Err(Error::numerical(format!(
                "atom magnitude overflowed (radial {last_radial}, peak {peak})"
            )));
        }
        max_peak = max_peak.max(peak);
        out.push(Atom {
            magnitude,
            time,
            spectral: profile.iter().map(|v| v / peak).collect(),
        });
    }
    out.sort_by(|a, b| a.time.total_cmp(&b.time));
    // Arrival ties are measure zero but would break downstream invariants;
    // resample the later arrival of any coincident pair.
    for _attempt in 0..16 {
        let mut clean = true;
        for k in 1..out.len() {
            if out[k].time - out[k - 1].time <= MIN_TIME_SEPARATION {
                out[k].time = rng.random_range(0.0..horizon);
                clean = false;
            }
        }
        if clean {
            return PointMeasure::new(horizon, sites, out, last_radial * max_peak);
        }
        out.sort_by(|a, b| a.time.total_cmp(&b.time));
    }
    Err(Error::numerical(
        "could not separate atom arrival times; horizon too short for the atom count".to_string(),
    ))
}

/// Largest value the measure attains over all sites and the full horizon;
/// zero for a measure without atoms.
pub fn spatial_max(pm: &PointMeasure) -> f64 {
    pm.atoms()
        .iter()
        .map(|a| a.magnitude)
        .fold(0.0f64, f64::max)
}

/// Record the measure's running maximum process on `time_grid`: entry
/// `(u, s)` is the maximum of `magnitude * spectral[s]` over atoms arriving
/// at or before `u`.
pub fn running_max(pm: &PointMeasure, time_grid: &[f64]) -> Result<CadlagMaxProcess> {
    if time_grid.is_empty() {
        return Err(Error::argument("time grid must be nonempty".to_string()));
    }
    for &u in time_grid {
        if !(u.is_finite() && (0.0..=pm.horizon()).contains(&u)) {
            return Err(Error::argument(format!(
                "time {u} outside the measure's horizon [0, {}]",
                pm.horizon()
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
    let sites = pm.sites();
    let mut running = vec![0.0f64; sites];
    let mut values = Vec::with_capacity(time_grid.len() * sites);
    let mut next_atom = 0usize;
    for &u in time_grid {
        while next_atom < pm.atoms().len() && pm.atoms()[next_atom].time <= u {
            let atom = &pm.atoms()[next_atom];
            for (slot, &v) in running.iter_mut().zip(atom.spectral.iter()) {
                let val = atom.magnitude * v;
                if val > *slot {
                    *slot = val;
                }
            }
            next_atom += 1;
        }
        values.extend_from_slice(&running);
    }
    CadlagMaxProcess::new(time_grid.to_vec(), sites, values)
}

/// `rank`-th largest contribution at `site` among atoms arriving at or
/// before `time`; zero when fewer than `rank` atoms have arrived.
pub fn order_statistic(pm: &PointMeasure, rank: usize, time: f64, site: usize) -> Result<f64> {
    if rank == 0 {
        return Err(Error::argument("rank must be at least 1".to_string()));
    }
    if site >= pm.sites() {
        return Err(Error::argument(format!(
            "site {site} out of range for a {}-site measure",
            pm.sites()
        )));
    }
    if !(time.is_finite() && (0.0..=pm.horizon()).contains(&time)) {
        return Err(Error::argument(format!(
            "time {time} outside the measure's horizon [0, {}]",
            pm.horizon()
        )));
    }
    let mut vals: Vec<f64> = pm
        .atoms()
        .iter()
        .take_while(|a| a.time <= time)
        .map(|a| a.magnitude * a.spectral[site])
        .collect();
    if vals.len() < rank {
        return Ok(0.0);
    }
    let idx = vals.len() - rank;
    let (_, kth, _) = vals.select_nth_unstable_by(idx, f64::total_cmp);
    Ok(*kth)
}

/// Streaming equivalent of sampling a measure and taking
/// [`order_statistic`]: folds the same random stream one atom at a time,
/// tracking only the top `rank` contributions at one site. Must consume
/// `rng` exactly like [`sample_point_measure`] so the two agree draw for
/// draw.
pub(crate) fn marginal_order_stat<S: SpectralSampler + ?Sized>(
    sampler: &S,
    horizon: f64,
    atoms: usize,
    rank: usize,
    time: f64,
    site: usize,
    rng: &mut ChaCha12Rng,
) -> Result<f64> {
    if rank == 0 || rank > MAX_MARGINAL_RANK {
        return Err(Error::argument(format!(
            "rank must be in 1..={MAX_MARGINAL_RANK}, got {rank}"
        )));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::argument(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    if !(time.is_finite() && (0.0..=horizon).contains(&time)) {
        return Err(Error::argument(format!(
            "time {time} outside [0, {horizon}]"
        )));
    }
    if site >= sampler.sites() {
        return Err(Error::argument(format!(
            "site {site} out of range for a {}-site sampler",
            sampler.sites()
        )));
    }
    let alpha = sampler.alpha();
    let mut top = [0.0f64; MAX_MARGINAL_RANK];
    let mut gamma = 0.0f64;
    let mut profile = vec![0.0; sampler.sites()];
    for _ in 0..atoms {
        let e: f64 = rng.sample(Exp1);
        gamma += e;
        let arrival = rng.random_range(0.0..horizon);
        sampler.draw_into(rng, &mut profile);
        if arrival > time {
            continue;
        }
        // Replicate the measure's normalize-then-scale arithmetic exactly so
        // the fold is bit-identical to materializing the atoms.
        let peak = profile.iter().cloned().fold(0.0f64, f64::max);
        if !(peak.is_finite() && peak > 0.0) {
            return Err(Error::numerical(format!(
                "spectral profile has invalid peak {peak}"
            )));
        }
        let val = (radial(gamma, horizon, alpha) * peak) * (profile[site] / peak);
        if val > top[rank - 1] {
            let mut pos = rank - 1;
            while pos > 0 && val > top[pos - 1] {
                top[pos] = top[pos - 1];
                pos -= 1;
            }
            top[pos] = val;
        }
    }
    Ok(top[rank - 1])
}

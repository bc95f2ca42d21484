//! Finite-dimensional distributions of the limit process.
//!
//! For thresholds `y_1, ..., y_k` at times `u_1 < ... < u_k` on a common
//! set of sites, the joint lower-orthant probability factorizes over the
//! time increments: with nested thresholds `z_j = min_{k >= j} y_k`
//! (sitewise suffix minima),
//!
//! ```text
//! P[path stays below all thresholds]
//!   = prod_j exp( -(u_j - u_{j-1}) * nu(z_j) ),
//! ```
//!
//! where `nu(z) = E[ max_i (V(t_i) / z_i)^alpha ]` is the exponent measure
//! of the spectral law: the expected `alpha`-power of the best threshold
//! ratio, obtained by integrating the radial component out of the Poisson
//! intensity. This module estimates `nu` by Monte Carlo over spectral
//! profiles, combines the factors with common random numbers, and counts
//! the same event empirically across realized paths.

use serde::{Deserialize, Serialize};

use crate::empirical::CadlagMaxProcess;
use crate::error::{Error, Result};
use crate::ppp::SpectralSampler;
use crate::rng::substream;

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Point estimate.
    pub value: f64,
    /// Standard error of the estimate.
    pub se: f64,
}

/// A joint lower-orthant query: sitewise thresholds at increasing times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FddQuery {
    /// Query times, strictly increasing and positive.
    pub times: Vec<f64>,
    /// Site indices the thresholds refer to.
    pub sites: Vec<usize>,
    /// One row of positive thresholds per time, one column per site.
    pub thresholds: Vec<Vec<f64>>,
}

impl FddQuery {
    /// Check the query against a grid of `total_sites` sites.
    pub fn validate(&self, total_sites: usize) -> Result<()> {
        if self.times.is_empty() {
            return Err(Error::argument("query needs at least one time".to_string()));
        }
        if self.sites.is_empty() {
            return Err(Error::argument("query needs at least one site".to_string()));
        }
        let mut last = 0.0f64;
        for &u in &self.times {
            if !(u.is_finite() && u > last) {
                return Err(Error::argument(format!(
                    "query times must be positive and strictly increasing, got {u} after {last}"
                )));
            }
            last = u;
        }
        for &s in &self.sites {
            if s >= total_sites {
                return Err(Error::argument(format!(
                    "query site {s} out of range for a {total_sites}-site grid"
                )));
            }
        }
        if self.thresholds.len() != self.times.len() {
            return Err(Error::argument(format!(
                "{} threshold rows for {} times",
                self.thresholds.len(),
                self.times.len()
            )));
        }
        for (j, row) in self.thresholds.iter().enumerate() {
            if row.len() != self.sites.len() {
                return Err(Error::argument(format!(
                    "threshold row {j} has {} entries for {} sites",
                    row.len(),
                    self.sites.len()
                )));
            }
            for &y in row {
                if !(y.is_finite() && y > 0.0) {
                    return Err(Error::argument(format!(
                        "thresholds must be positive and finite, got {y}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A joint probability estimate together with its per-increment exponent
/// measure factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FddProbability {
    /// Estimated joint lower-orthant probability.
    pub probability: f64,
    /// Delta-method standard error of the probability.
    pub se: f64,
    /// Exponent measure estimate for each time increment's nested threshold.
    pub factors: Vec<Estimate>,
}

/// Streaming mean and variance accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn se(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        (self.m2 / (self.count - 1) as f64 / self.count as f64).sqrt()
    }
}

/// Sitewise suffix minima of the threshold rows: row `j` of the result is
/// the minimum of rows `j..` of the input, the effective constraint on
/// atoms arriving in the `j`-th time increment.
fn nested_thresholds(thresholds: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut nested = thresholds.to_vec();
    for j in (0..nested.len().saturating_sub(1)).rev() {
        for i in 0..nested[j].len() {
            nested[j][i] = nested[j][i].min(nested[j + 1][i]);
        }
    }
    nested
}

/// Best threshold ratio of one profile, raised to `alpha`:
/// `(max_i profile[sites[i]] / z[i])^alpha`.
fn threshold_ratio(profile: &[f64], sites: &[usize], z: &[f64], alpha: f64) -> f64 {
    let mut best = 0.0f64;
    for (&s, &zi) in sites.iter().zip(z.iter()) {
        let ratio = profile[s] / zi;
        if ratio > best {
            best = ratio;
        }
    }
    if alpha == 1.0 {
        best
    } else {
        best.powf(alpha)
    }
}

/// Monte Carlo estimate of the exponent measure
/// `nu(z) = E[max_i (V(t_i) / z_i)^alpha]` over `draws` spectral profiles.
///
/// Draw `i` uses substream `i` of `seed`.
pub fn exponent_measure<S: SpectralSampler + ?Sized>(
    sampler: &S,
    sites: &[usize],
    thresholds: &[f64],
    draws: usize,
    seed: u64,
) -> Result<Estimate> {
    if sites.is_empty() || sites.len() != thresholds.len() {
        return Err(Error::argument(format!(
            "{} sites with {} thresholds",
            sites.len(),
            thresholds.len()
        )));
    }
    if draws < 2 {
        return Err(Error::argument("at least two draws are needed".to_string()));
    }
    for &s in sites {
        if s >= sampler.sites() {
            return Err(Error::argument(format!(
                "site {s} out of range for a {}-site sampler",
                sampler.sites()
            )));
        }
    }
    for &z in thresholds {
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::argument(format!(
                "thresholds must be positive and finite, got {z}"
            )));
        }
    }
    let alpha = sampler.alpha();
    let mut acc = Welford::default();
    let mut profile = vec![0.0; sampler.sites()];
    for i in 0..draws {
        let mut rng = substream(seed, i as u64);
        sampler.draw_into(&mut rng, &mut profile);
        let w = threshold_ratio(&profile, sites, thresholds, alpha);
        if !w.is_finite() {
            return Err(Error::numerical(format!(
                "threshold ratio overflowed on draw {i}"
            )));
        }
        acc.push(w);
    }
    Ok(Estimate {
        value: acc.mean(),
        se: acc.se(),
    })
}

/// Estimate the joint lower-orthant probability of `query` under the limit
/// process with spectral law `sampler`.
///
/// All increment factors share each spectral draw (common random numbers),
/// so the product's standard error comes from the per-draw combined
/// statistic `T = sum_j (u_j - u_{j-1}) w_j` by the delta method:
/// `se = p * sd(T) / sqrt(draws)`.
pub fn fdd_probability<S: SpectralSampler + ?Sized>(
    sampler: &S,
    query: &FddQuery,
    draws: usize,
    seed: u64,
) -> Result<FddProbability> {
    query.validate(sampler.sites())?;
    if draws < 2 {
        return Err(Error::argument("at least two draws are needed".to_string()));
    }
    let alpha = sampler.alpha();
    let nested = nested_thresholds(&query.thresholds);
    let k = query.times.len();
    let mut factor_acc = vec![Welford::default(); k];
    let mut combined = Welford::default();
    let mut profile = vec![0.0; sampler.sites()];
    for i in 0..draws {
        let mut rng = substream(seed, i as u64);
        sampler.draw_into(&mut rng, &mut profile);
        let mut t = 0.0;
        for j in 0..k {
            let w = threshold_ratio(&profile, &query.sites, &nested[j], alpha);
            if !w.is_finite() {
                return Err(Error::numerical(format!(
                    "threshold ratio overflowed on draw {i}"
                )));
            }
            let du = query.times[j] - if j == 0 { 0.0 } else { query.times[j - 1] };
            t += du * w;
            factor_acc[j].push(w);
        }
        combined.push(t);
    }
    let probability = (-combined.mean()).exp();
    Ok(FddProbability {
        probability,
        se: probability * combined.se(),
        factors: factor_acc
            .iter()
            .map(|acc| Estimate {
                value: acc.mean(),
                se: acc.se(),
            })
            .collect(),
    })
}

/// Empirical share of realized paths satisfying the query: the path value
/// must be at or below the threshold at every query time and site.
///
/// Each realization must have been recorded on a time grid containing every
/// query time exactly.
pub fn fdd_empirical(realizations: &[CadlagMaxProcess], query: &FddQuery) -> Result<Estimate> {
    if realizations.len() < 2 {
        return Err(Error::argument(
            "at least two realizations are needed".to_string(),
        ));
    }
    let sites = realizations[0].sites();
    query.validate(sites)?;
    let mut hits = 0u64;
    for (r, path) in realizations.iter().enumerate() {
        if path.sites() != sites {
            return Err(Error::argument(format!(
                "realization {r} has {} sites, expected {sites}",
                path.sites()
            )));
        }
        let mut ok = true;
        for (j, &u) in query.times.iter().enumerate() {
            let ti = path
                .times()
                .iter()
                .position(|&t| t == u)
                .ok_or_else(|| {
                    Error::argument(format!(
                        "realization {r} was not recorded at query time {u}"
                    ))
                })?;
            for (i, &s) in query.sites.iter().enumerate() {
                if path.value(ti, s) > query.thresholds[j][i] {
                    ok = false;
                    break;
                }
            }
            if !ok {
                break;
            }
        }
        if ok {
            hits += 1;
        }
    }
    let n = realizations.len() as f64;
    let p = hits as f64 / n;
    Ok(Estimate {
        value: p,
        se: (p * (1.0 - p) / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Grid, GridSpec, Variogram, DEFAULT_SITE_CAP};
    use crate::ppp::{running_max, sample_point_measure, BrownResnickSampler, DegenerateSampler};
    use approx::assert_relative_eq;

    fn line_grid(resolution: usize) -> Grid {
        Grid::build(&GridSpec {
            dimension: 1,
            extent: 1.0,
            resolution,
            origin: 0,
            site_cap: DEFAULT_SITE_CAP,
        })
        .unwrap()
    }

    #[test]
    fn nested_thresholds_hand_case() {
        let nested = nested_thresholds(&[vec![1.2, 1.0], vec![0.8, 1.1]]);
        assert_eq!(nested, vec![vec![0.8, 1.0], vec![0.8, 1.1]]);
        // The last row is always untouched.
        let one = nested_thresholds(&[vec![0.3]]);
        assert_eq!(one, vec![vec![0.3]]);
    }

    #[test]
    fn query_validation_rejects_malformed_input() {
        let good = FddQuery {
            times: vec![0.5, 1.0],
            sites: vec![0, 1],
            thresholds: vec![vec![1.0, 2.0], vec![1.5, 2.5]],
        };
        assert!(good.validate(2).is_ok());
        let cases = [
            FddQuery { times: vec![1.0, 0.5], ..good.clone() },
            FddQuery { times: vec![0.0, 1.0], ..good.clone() },
            FddQuery { sites: vec![0, 2], ..good.clone() },
            FddQuery { thresholds: vec![vec![1.0, 2.0]], ..good.clone() },
            FddQuery { thresholds: vec![vec![1.0], vec![1.5]], ..good.clone() },
            FddQuery {
                thresholds: vec![vec![1.0, -2.0], vec![1.5, 2.5]],
                ..good.clone()
            },
        ];
        for bad in cases {
            assert!(matches!(bad.validate(2), Err(Error::Argument(_))));
        }
    }

    #[test]
    fn exponent_measure_degenerate_is_exact() {
        // Constant profiles make the integrand deterministic:
        // nu = max_i (1 / z_i)^alpha with zero variance.
        let sampler = DegenerateSampler::new(3, 2.0).unwrap();
        let est = exponent_measure(&sampler, &[0, 2], &[0.5, 2.0], 100, 1).unwrap();
        assert_relative_eq!(est.value, 4.0, epsilon = 1e-14);
        assert_eq!(est.se, 0.0);
    }

    #[test]
    fn exponent_measure_matches_pair_quadrature() {
        // Two sites at variogram value 1, alpha = 1. Frozen values from an
        // independent quadrature of E[max(1/z1, V/z2)] over the log-normal
        // profile V, split at the integrand's kink.
        let grid = line_grid(2);
        let v = Variogram::fractional(1.0, 1.0).unwrap();
        let sampler = BrownResnickSampler::new(&grid, &v, 1.0).unwrap();
        for (z, expect) in [
            (vec![1.0, 1.0], 1.3829249225480262),
            (vec![1.0, 1.5], 1.175829059405991),
        ] {
            let est = exponent_measure(&sampler, &[0, 1], &z, 100_000, 77).unwrap();
            assert!(
                (est.value - expect).abs() <= 4.0 * est.se,
                "nu estimate {} +- {} vs quadrature {expect}",
                est.value,
                est.se
            );
            assert!(est.se < 0.01, "standard error unexpectedly large: {}", est.se);
        }
    }

    #[test]
    fn fdd_probability_degenerate_hand_case() {
        // Single site, constant profiles, alpha = 1: nested thresholds are
        // [1, 2], so T = 0.5 * 1 + 0.5 * 0.5 = 0.75 on every draw.
        let sampler = DegenerateSampler::new(1, 1.0).unwrap();
        let query = FddQuery {
            times: vec![0.5, 1.0],
            sites: vec![0],
            thresholds: vec![vec![1.0], vec![2.0]],
        };
        let fdd = fdd_probability(&sampler, &query, 50, 3).unwrap();
        assert_relative_eq!(fdd.probability, (-0.75f64).exp(), epsilon = 1e-12);
        assert_eq!(fdd.se, 0.0);
        assert_relative_eq!(fdd.factors[0].value, 1.0, epsilon = 1e-14);
        assert_relative_eq!(fdd.factors[1].value, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn fdd_probability_equals_product_of_factors() {
        let grid = line_grid(3);
        let v = Variogram::fractional(1.0, 1.0).unwrap();
        let sampler = BrownResnickSampler::new(&grid, &v, 1.0).unwrap();
        let query = FddQuery {
            times: vec![0.25, 0.75, 1.0],
            sites: vec![0, 1, 2],
            thresholds: vec![
                vec![1.0, 1.2, 0.9],
                vec![1.5, 0.8, 1.1],
                vec![1.0, 1.0, 2.0],
            ],
        };
        let fdd = fdd_probability(&sampler, &query, 20_000, 4).unwrap();
        let mut product = 1.0;
        let mut last = 0.0;
        for (j, f) in fdd.factors.iter().enumerate() {
            product *= (-(query.times[j] - last) * f.value).exp();
            last = query.times[j];
        }
        assert_relative_eq!(fdd.probability, product, epsilon = 1e-12);
        assert!(fdd.se > 0.0 && fdd.se < 0.05);
    }

    #[test]
    fn fdd_empirical_hand_case() {
        let query = FddQuery {
            times: vec![0.5, 1.0],
            sites: vec![0],
            thresholds: vec![vec![2.0], vec![3.0]],
        };
        // Paths recorded at the query times; values at site 0 are
        // (1, 2.5): pass, (2.5, 2.6): fail at u=0.5, (2, 3.5): fail at u=1,
        // (0.5, 1): pass.
        let mk = |a: f64, b: f64| CadlagMaxProcess::new(vec![0.5, 1.0], 1, vec![a, b]).unwrap();
        let paths = vec![mk(1.0, 2.5), mk(2.5, 2.6), mk(2.0, 3.5), mk(0.5, 1.0)];
        let est = fdd_empirical(&paths, &query).unwrap();
        assert_relative_eq!(est.value, 0.5, epsilon = 1e-15);
        assert_relative_eq!(est.se, (0.25f64 / 4.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn fdd_empirical_requires_exact_time_match() {
        let query = FddQuery {
            times: vec![0.6],
            sites: vec![0],
            thresholds: vec![vec![1.0]],
        };
        let paths = vec![
            CadlagMaxProcess::new(vec![0.5, 1.0], 1, vec![0.1, 0.2]).unwrap(),
            CadlagMaxProcess::new(vec![0.5, 1.0], 1, vec![0.1, 0.2]).unwrap(),
        ];
        assert!(matches!(
            fdd_empirical(&paths, &query),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn theoretical_and_empirical_probability_agree() {
        // Constant profiles give an exact theoretical probability; the
        // empirical side still exercises the whole simulate-and-count path.
        let sampler = DegenerateSampler::new(2, 1.0).unwrap();
        let query = FddQuery {
            times: vec![0.5, 1.0],
            sites: vec![0, 1],
            thresholds: vec![vec![1.0, 1.3], vec![0.9, 2.0]],
        };
        let theo = fdd_probability(&sampler, &query, 100, 5).unwrap();
        let reps = 4000usize;
        let mut paths = Vec::with_capacity(reps);
        for i in 0..reps {
            let mut rng = crate::rng::substream(99, i as u64);
            let pm = sample_point_measure(&sampler, 1.0, 200, &mut rng).unwrap();
            paths.push(running_max(&pm, &query.times).unwrap());
        }
        let emp = fdd_empirical(&paths, &query).unwrap();
        let gap = (emp.value - theo.probability).abs();
        let se = (emp.se * emp.se + theo.se * theo.se).sqrt().max(1e-12);
        assert!(
            gap <= 4.0 * se,
            "empirical {} vs theoretical {} (gap {gap}, 4 SE = {})",
            emp.value,
            theo.probability,
            4.0 * se
        );
    }
}

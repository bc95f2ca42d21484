//! Spatial grids and variogram models.
//!
//! Everything downstream works on a finite set of sites: an axis-aligned
//! lattice in one or two dimensions with a distinguished anchor site. The
//! variogram measures how quickly spectral profiles decorrelate with
//! distance; the fractional family `scale * d^exponent` covers the usual
//! range from near-independent (`exponent` small) to very smooth
//! (`exponent = 2`).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on the total number of sites a grid may hold.
pub const DEFAULT_SITE_CAP: usize = 400;

/// Lattice description: `resolution^dimension` sites spread evenly over
/// `[0, extent]^dimension`, with `origin` naming the anchor site by flat
/// index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    /// Spatial dimension, 1 or 2.
    pub dimension: usize,
    /// Side length of the covered cube.
    pub extent: f64,
    /// Number of sites per axis.
    pub resolution: usize,
    /// Flat index of the anchor site.
    pub origin: usize,
    /// Upper bound on the total site count.
    #[serde(default = "default_site_cap")]
    pub site_cap: usize,
}

fn default_site_cap() -> usize {
    DEFAULT_SITE_CAP
}

/// A finite site set with its pairwise distances and anchor site.
///
/// Sites are indexed flat; in two dimensions index `s` maps to coordinates
/// `((s % resolution) * h, (s / resolution) * h)` with `h` the lattice
/// spacing.
#[derive(Debug, Clone)]
pub struct Grid {
    dimension: usize,
    coords: Vec<f64>,
    origin: usize,
    dist: Vec<f64>,
}

impl Grid {
    /// Build the lattice described by `spec`.
    ///
    /// Fails with a sizing error if the total site count exceeds
    /// `spec.site_cap` and with an argument error for an invalid dimension,
    /// a non-positive extent, a zero resolution, or an out-of-range origin.
    pub fn build(spec: &GridSpec) -> Result<Grid> {
        if !(1..=2).contains(&spec.dimension) {
            return Err(Error::argument(format!(
                "grid dimension must be 1 or 2, got {}",
                spec.dimension
            )));
        }
        if !(spec.extent.is_finite() && spec.extent > 0.0) {
            return Err(Error::argument(format!(
                "grid extent must be positive and finite, got {}",
                spec.extent
            )));
        }
        if spec.resolution == 0 {
            return Err(Error::argument("grid resolution must be at least 1"));
        }
        let sites = spec.resolution.saturating_pow(spec.dimension as u32);
        if sites > spec.site_cap {
            return Err(Error::GridTooLarge {
                sites,
                cap: spec.site_cap,
            });
        }
        if spec.origin >= sites {
            return Err(Error::argument(format!(
                "origin index {} out of range for {} sites",
                spec.origin, sites
            )));
        }

        let spacing = if spec.resolution > 1 {
            spec.extent / (spec.resolution - 1) as f64
        } else {
            0.0
        };
        let mut coords = Vec::with_capacity(sites * spec.dimension);
        for s in 0..sites {
            if spec.dimension == 1 {
                coords.push(s as f64 * spacing);
            } else {
                coords.push((s % spec.resolution) as f64 * spacing);
                coords.push((s / spec.resolution) as f64 * spacing);
            }
        }

        let mut dist = vec![0.0; sites * sites];
        for i in 0..sites {
            for j in (i + 1)..sites {
                let mut acc = 0.0;
                for a in 0..spec.dimension {
                    let d = coords[i * spec.dimension + a] - coords[j * spec.dimension + a];
                    acc += d * d;
                }
                let d = acc.sqrt();
                dist[i * sites + j] = d;
                dist[j * sites + i] = d;
            }
        }

        Ok(Grid {
            dimension: spec.dimension,
            coords,
            origin: spec.origin,
            dist,
        })
    }

    /// Number of sites.
    pub fn len(&self) -> usize {
        self.coords.len() / self.dimension
    }

    /// True if the grid has no sites (never produced by [`Grid::build`]).
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Spatial dimension (1 or 2).
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Flat index of the anchor site.
    pub fn origin(&self) -> usize {
        self.origin
    }

    /// Coordinates of site `site`.
    pub fn coord(&self, site: usize) -> &[f64] {
        &self.coords[site * self.dimension..(site + 1) * self.dimension]
    }

    /// Euclidean distance between two sites.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }
}

/// Fractional variogram `gamma(d) = scale * d^exponent`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Variogram {
    scale: f64,
    exponent: f64,
}

impl Variogram {
    /// Build a fractional variogram; `scale > 0` and `0 < exponent <= 2`.
    pub fn fractional(scale: f64, exponent: f64) -> Result<Variogram> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::argument(format!(
                "variogram scale must be positive and finite, got {scale}"
            )));
        }
        if !(exponent.is_finite() && exponent > 0.0 && exponent <= 2.0) {
            return Err(Error::argument(format!(
                "variogram exponent must lie in (0, 2], got {exponent}"
            )));
        }
        Ok(Variogram { scale, exponent })
    }

    /// Multiplicative scale of the variogram.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Distance exponent of the variogram.
    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Evaluate the variogram at a distance.
    pub fn value(&self, distance: f64) -> f64 {
        self.scale * distance.powf(self.exponent)
    }
}

/// Site-by-site variogram matrix of a grid: entry `(i, j)` is
/// `gamma(dist(i, j))`. Symmetric with an exactly zero diagonal.
pub fn variogram_matrix(grid: &Grid, variogram: &Variogram) -> DMatrix<f64> {
    let n = grid.len();
    DMatrix::from_fn(n, n, |i, j| variogram.value(grid.distance(i, j)))
}

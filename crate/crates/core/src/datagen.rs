// SPDX-License-Identifier: Apache-2.0

//! Benchmark data sets with known governing equations.
//!
//! Every deterministic problem is integrated with the same explicit Euler
//! solver used during discovery, one step per data interval, so the truth
//! coefficients reproduce the snapshots exactly.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::solve_interval;
use crate::grid::{Boundary, Dataset, Field, Grid};
use crate::hyper::Hyperparameters;
use crate::library::{build_library, powers_up_to, CoefficientVector, TermKey, TermLibrary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemName {
    Heat1D,
    Heat2D,
    Burgers1D,
    Burgers2D,
    KS1D,
    RandomWalk1D,
    ReactionDiffusion2D,
    Wave1D,
}

impl ProblemName {
    pub const ALL: [ProblemName; 8] = [
        ProblemName::Heat1D,
        ProblemName::Heat2D,
        ProblemName::Burgers1D,
        ProblemName::Burgers2D,
        ProblemName::KS1D,
        ProblemName::RandomWalk1D,
        ProblemName::ReactionDiffusion2D,
        ProblemName::Wave1D,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemName::Heat1D => "heat1d",
            ProblemName::Heat2D => "heat2d",
            ProblemName::Burgers1D => "burgers1d",
            ProblemName::Burgers2D => "burgers2d",
            ProblemName::KS1D => "ks",
            ProblemName::RandomWalk1D => "randomwalk",
            ProblemName::ReactionDiffusion2D => "reactiondiffusion",
            ProblemName::Wave1D => "wave",
        }
    }

    /// Physical coefficients, in the order accepted by [`Overrides::coefficients`].
    pub fn default_coefficients(self) -> Vec<f64> {
        match self {
            ProblemName::Heat1D | ProblemName::Heat2D => vec![-1.0],
            ProblemName::Burgers1D | ProblemName::Burgers2D => vec![-1.0],
            ProblemName::KS1D => vec![-1.0, 0.5, -0.5],
            ProblemName::RandomWalk1D => vec![1.0, 0.5],
            ProblemName::ReactionDiffusion2D => [RD_CU, RD_CV].concat(),
            ProblemName::Wave1D => vec![],
        }
    }
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', '_'], "");
        let name = match key.as_str() {
            "heat1d" | "heat" => ProblemName::Heat1D,
            "heat2d" => ProblemName::Heat2D,
            "burgers1d" | "burgers" => ProblemName::Burgers1D,
            "burgers2d" => ProblemName::Burgers2D,
            "ks" | "ks1d" | "kuramotosivashinsky" => ProblemName::KS1D,
            "randomwalk" | "randomwalk1d" | "rw" => ProblemName::RandomWalk1D,
            "reactiondiffusion" | "reactiondiffusion2d" | "rd" | "rd2d" => {
                ProblemName::ReactionDiffusion2D
            }
            "wave" | "wave1d" => ProblemName::Wave1D,
            _ => return Err(Error::InvalidArgument(format!("unknown problem `{s}`"))),
        };
        Ok(name)
    }
}

const RD_CU: [f64; 7] = [-0.1, -0.2, -0.3, -0.4, 0.1, 0.2, 0.3];
const RD_CV: [f64; 7] = [-0.4, -0.3, -0.2, -0.1, 0.3, 0.2, 0.1];

/// Optional changes to a problem's defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    /// Nodes (or histogram bins) per axis.
    pub dims: Option<Vec<usize>>,
    /// Number of data intervals; the data set has one more snapshot.
    pub n_t: Option<usize>,
    /// Physical coefficients, see [`ProblemName::default_coefficients`].
    pub coefficients: Option<Vec<f64>>,
    pub seed: Option<u64>,
    /// Random walk sample count.
    pub n_samples: Option<usize>,
    /// Random walk histogram domain.
    pub domain: Option<(f64, f64)>,
    /// Overrides the problem's time-step rule.
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: ProblemName,
    pub overrides: Overrides,
}

impl ProblemSpec {
    pub fn new(name: ProblemName) -> Self {
        Self {
            name,
            overrides: Overrides::default(),
        }
    }

    pub fn with(name: ProblemName, overrides: Overrides) -> Self {
        Self { name, overrides }
    }
}

/// Output of [`generate`].
#[derive(Debug, Clone)]
pub struct Generated {
    pub data: Dataset,
    /// Truth over `library`, in the left-hand-side sign convention.
    pub truth: CoefficientVector,
    pub library: TermLibrary,
    pub dt: f64,
    /// Human-readable time-step rule.
    pub dt_rule: String,
    pub seed: Option<u64>,
    /// Random walk samples that fell outside the histogram domain.
    pub clipped: usize,
}

fn scalar_sets(d: &[u32], p: &[u32]) -> (Vec<Vec<u32>>, Vec<Vec<u32>>) {
    (
        d.iter().map(|&k| vec![k]).collect(),
        p.iter().map(|&k| vec![k]).collect(),
    )
}

fn truth_on(library: &TermLibrary, entries: &[(TermKey, f64)]) -> Result<CoefficientVector> {
    let mut v = vec![0.0; library.len()];
    for (key, value) in entries {
        let k = library.index_of(key).ok_or_else(|| {
            Error::InvalidArgument(format!("true term {key} missing from library"))
        })?;
        v[k] = *value;
    }
    CoefficientVector::for_library(v, library)
}

fn coeffs(spec: &ProblemSpec) -> Result<Vec<f64>> {
    let def = spec.name.default_coefficients();
    match &spec.overrides.coefficients {
        None => Ok(def),
        Some(c) if c.len() != def.len() => Err(Error::LengthMismatch {
            expected: def.len(),
            got: c.len(),
        }),
        Some(c) if c.iter().any(|v| !v.is_finite()) => {
            Err(Error::NonFinite("problem coefficients".into()))
        }
        Some(c) => Ok(c.clone()),
    }
}

fn dims_or(spec: &ProblemSpec, default: Vec<usize>) -> Result<Vec<usize>> {
    match &spec.overrides.dims {
        None => Ok(default),
        Some(d) if d.len() != default.len() => Err(Error::DimensionMismatch(format!(
            "{} needs {} grid sizes, got {}",
            spec.name,
            default.len(),
            d.len()
        ))),
        Some(d) => Ok(d.clone()),
    }
}

fn nonzero(v: f64, what: &str) -> Result<f64> {
    if v == 0.0 {
        Err(Error::InvalidArgument(format!(
            "{what} is zero; the time-step rule divides by it"
        )))
    } else {
        Ok(v.abs())
    }
}

/// Integrates `f0` with the truth model for `n_t` steps of size `dt`.
fn integrate_truth(
    f0: Field,
    dt: f64,
    n_t: usize,
    library: &TermLibrary,
    truth: &CoefficientVector,
) -> Result<Dataset> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
    }
    let hp = Hyperparameters {
        substeps: 1,
        ..Default::default()
    };
    let grid = f0.grid().clone();
    let times: Vec<f64> = (0..=n_t).map(|j| j as f64 * dt).collect();
    let mut snaps = Vec::with_capacity(n_t + 1);
    snaps.push(f0);
    for j in 0..n_t {
        let tr = solve_interval(&snaps[j], times[j], times[j + 1], library, truth, &hp)?;
        if tr.blown_up {
            return Err(Error::UnstableGeneration { dt });
        }
        snaps.push(tr.end().clone());
    }
    Dataset::new(grid, times, snaps)
}

fn heat_ic(x: f64) -> f64 {
    5.0 * (2.0 * PI * x).sin() * x * (x - 1.0)
}

/// Builds the data set, truth vector and candidate library for a benchmark.
pub fn generate(spec: &ProblemSpec) -> Result<Generated> {
    let o = &spec.overrides;
    let c = coeffs(spec)?;
    match spec.name {
        ProblemName::Heat1D | ProblemName::Burgers1D => {
            let heat = spec.name == ProblemName::Heat1D;
            let nx = dims_or(spec, vec![100])?[0];
            let n_t = o.n_t.unwrap_or(100);
            let dx = 1.0 / nx as f64;
            let grid = Arc::new(Grid::line(nx, dx, 0.0, Boundary::ZeroPad)?);
            let (d, p) = scalar_sets(&[1, 2, 3], &[1, 2, 3]);
            let library = build_library(1, 1, &d, &p)?;
            let (key, rule, dt_default) = if heat {
                (
                    TermKey::new(0, vec![2], vec![1]),
                    "0.05*dx^2/|D|",
                    0.05 * dx * dx / nonzero(c[0], "D")?,
                )
            } else {
                (
                    TermKey::new(0, vec![1], vec![2]),
                    "0.05*dx/|A|",
                    0.05 * dx / nonzero(c[0], "A")?,
                )
            };
            let truth = truth_on(&library, &[(key, c[0])])?;
            let dt = o.dt.unwrap_or(dt_default);
            let f0 = Field::from_fn(grid, 1, |_, x| heat_ic(x[0]))?;
            let data = integrate_truth(f0, dt, n_t, &library, &truth)?;
            Ok(Generated {
                data,
                truth,
                library,
                dt,
                dt_rule: rule.into(),
                seed: None,
                clipped: 0,
            })
        }
        ProblemName::Heat2D | ProblemName::Burgers2D => {
            let heat = spec.name == ProblemName::Heat2D;
            let dims = dims_or(spec, vec![50, 50])?;
            let n_t = o.n_t.unwrap_or(20);
            let spacing: Vec<f64> = dims.iter().map(|&n| 1.0 / n as f64).collect();
            let grid = Arc::new(Grid::new(dims, spacing.clone(), vec![0.0, 0.0], Boundary::ZeroPad)?);
            let derivs = vec![vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]];
            let powers = vec![vec![1], vec![2], vec![3]];
            let library = build_library(2, 1, &derivs, &powers)?;
            let dx = spacing.iter().copied().fold(f64::INFINITY, f64::min);
            let (entries, rule, dt_default) = if heat {
                (
                    vec![
                        (TermKey::new(0, vec![2, 0], vec![1]), c[0]),
                        (TermKey::new(0, vec![0, 2], vec![1]), c[0]),
                    ],
                    "0.05*dx^2/|D|",
                    0.05 * dx * dx / nonzero(c[0], "D")?,
                )
            } else {
                (
                    vec![
                        (TermKey::new(0, vec![1, 0], vec![2]), c[0]),
                        (TermKey::new(0, vec![0, 1], vec![2]), c[0]),
                    ],
                    "0.05*dx/|A|",
                    0.05 * dx / nonzero(c[0], "A")?,
                )
            };
            let truth = truth_on(&library, &entries)?;
            let dt = o.dt.unwrap_or(dt_default);
            let f0 = Field::from_fn(grid, 1, |_, x| {
                let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
                if heat {
                    (-20.0 * r2).exp() * (2.0 * 20.0 * PI * r2).cos()
                } else {
                    (-30.0 * r2).exp()
                }
            })?;
            let data = integrate_truth(f0, dt, n_t, &library, &truth)?;
            Ok(Generated {
                data,
                truth,
                library,
                dt,
                dt_rule: rule.into(),
                seed: None,
                clipped: 0,
            })
        }
        ProblemName::KS1D => {
            let nx = dims_or(spec, vec![256])?[0];
            let n_t = o.n_t.unwrap_or(64);
            let dx = 1.0 / nx as f64;
            let grid = Arc::new(Grid::line(nx, dx, 0.0, Boundary::Periodic)?);
            let (d, p) = scalar_sets(&[1, 2, 3, 4], &[1, 2]);
            let library = build_library(1, 1, &d, &p)?;
            let truth = truth_on(
                &library,
                &[
                    (TermKey::new(0, vec![1], vec![2]), c[0]),
                    (TermKey::new(0, vec![2], vec![1]), c[1]),
                    (TermKey::new(0, vec![4], vec![1]), c[2]),
                ],
            )?;
            let dt = o.dt.unwrap_or(0.01 * dx.powi(4) / nonzero(c[2], "C")?);
            let f0 = Field::from_fn(grid, 1, |_, x| heat_ic(x[0]))?;
            let data = integrate_truth(f0, dt, n_t, &library, &truth)?;
            Ok(Generated {
                data,
                truth,
                library,
                dt,
                dt_rule: "0.01*dx^4/|C|".into(),
                seed: None,
                clipped: 0,
            })
        }
        ProblemName::ReactionDiffusion2D => {
            let dims = dims_or(spec, vec![50, 50])?;
            let n_t = o.n_t.unwrap_or(25);
            let spacing: Vec<f64> = dims.iter().map(|&n| 1.0 / n as f64).collect();
            let grid = Arc::new(Grid::new(dims, spacing, vec![0.0, 0.0], Boundary::ZeroPad)?);
            let library = reaction_diffusion_library()?;
            let (cu, cv) = c.split_at(7);
            let k = |eq: usize, d: [u32; 2], p: [u32; 2]| TermKey::new(eq, d.to_vec(), p.to_vec());
            let truth = truth_on(
                &library,
                &[
                    (k(0, [2, 0], [1, 0]), cu[0]),
                    (k(0, [0, 2], [1, 0]), cu[1]),
                    (k(0, [0, 0], [1, 0]), cu[2]),
                    (k(0, [0, 0], [3, 0]), cu[3]),
                    (k(0, [0, 0], [1, 2]), cu[4]),
                    (k(0, [0, 0], [2, 1]), cu[5]),
                    (k(0, [0, 0], [0, 3]), cu[6]),
                    (k(1, [2, 0], [0, 1]), cv[0]),
                    (k(1, [0, 2], [0, 1]), cv[1]),
                    (k(1, [0, 0], [0, 1]), cv[2]),
                    (k(1, [0, 0], [0, 3]), cv[3]),
                    (k(1, [0, 0], [2, 1]), cv[4]),
                    (k(1, [0, 0], [1, 2]), cv[5]),
                    (k(1, [0, 0], [3, 0]), cv[6]),
                ],
            )?;
            let dt = o.dt.unwrap_or(1e-6);
            let a = 100.0;
            let f0 = Field::from_fn(grid, 2, |comp, x| {
                let bump = (x[0] - x[0] * x[0]) * (x[1] - x[1] * x[1]);
                if comp == 0 {
                    a * (4.0 * PI * x[0]).sin() * (3.0 * PI * x[1]).cos() * bump
                } else {
                    a * (4.0 * PI * x[0]).cos() * (3.0 * PI * x[1]).sin() * bump
                }
            })?;
            let data = integrate_truth(f0, dt, n_t, &library, &truth)?;
            Ok(Generated {
                data,
                truth,
                library,
                dt,
                dt_rule: "1e-6".into(),
                seed: None,
                clipped: 0,
            })
        }
        ProblemName::Wave1D => {
            let nx = dims_or(spec, vec![100])?[0];
            let n_t = o.n_t.unwrap_or(10);
            let dx = 2.0 * PI / nx as f64;
            let grid = Arc::new(Grid::line(nx, dx, 0.0, Boundary::Periodic)?);
            let (d, p) = scalar_sets(&[1, 2, 3, 4, 5, 6], &[1]);
            let library = build_library(1, 1, &d, &p)?;
            let truth = truth_on(&library, &[(TermKey::new(0, vec![1], vec![1]), 1.0)])?;
            let dt = o.dt.unwrap_or(1.0 / n_t as f64);
            let times: Vec<f64> = (0..=n_t).map(|j| j as f64 * dt).collect();
            let snaps = times
                .iter()
                .map(|&t| Field::from_fn(grid.clone(), 1, |_, x| (x[0] - t).sin()))
                .collect::<Result<Vec<_>>>()?;
            Ok(Generated {
                data: Dataset::new(grid, times, snaps)?,
                truth,
                library,
                dt,
                dt_rule: "T/N_t with T=1".into(),
                seed: None,
                clipped: 0,
            })
        }
        ProblemName::RandomWalk1D => {
            let bins = dims_or(spec, vec![100])?[0];
            let n_t = o.n_t.unwrap_or(50);
            let dt = o.dt.unwrap_or(0.01);
            let seed = o.seed.unwrap_or(0);
            let n_samples = o.n_samples.unwrap_or(1000);
            let domain = o.domain.unwrap_or((-2.0, 4.0));
            let (data, clipped) =
                euler_maruyama_histogram(c[0], c[1], n_t, dt, n_samples, bins, domain, seed)?;
            let (d, p) = scalar_sets(&[1, 2, 3], &[1]);
            let library = build_library(1, 1, &d, &p)?;
            let truth = truth_on(
                &library,
                &[
                    (TermKey::new(0, vec![1], vec![1]), c[0]),
                    (TermKey::new(0, vec![2], vec![1]), -c[1]),
                ],
            )?;
            Ok(Generated {
                data,
                truth,
                library,
                dt,
                dt_rule: "0.01".into(),
                seed: Some(seed),
                clipped,
            })
        }
    }
}

/// 5 derivative indices times 9 power indices for each of two equations.
pub fn reaction_diffusion_library() -> Result<TermLibrary> {
    let derivs = vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![0, 2]];
    build_library(2, 2, &derivs, &powers_up_to(2, 3))
}

/// Sample positions at every step (row `j` holds all samples at `t = j*dt`).
///
/// Sample `i` draws from its own ChaCha8 stream, so results do not depend on
/// thread scheduling.
pub fn euler_maruyama_samples(
    drift: f64,
    diffusion: f64,
    n_steps: usize,
    dt: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if !(diffusion >= 0.0 && diffusion.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "diffusion must be non-negative, got {diffusion}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) || !drift.is_finite() {
        return Err(Error::InvalidArgument("drift and dt must be finite, dt > 0".into()));
    }
    let amp = (2.0 * diffusion * dt).sqrt();
    let paths: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut x = 0.0;
            let mut path = Vec::with_capacity(n_steps + 1);
            path.push(x);
            for _ in 0..n_steps {
                let xi: f64 = rng.sample(StandardNormal);
                x += drift * dt + amp * xi;
                path.push(x);
            }
            path
        })
        .collect();
    Ok((0..=n_steps)
        .map(|j| paths.iter().map(|p| p[j]).collect())
        .collect())
}

/// Density histograms of an Euler–Maruyama random walk started at zero.
///
/// Bins are centred nodes of a ZeroPad grid over `domain`. Samples outside
/// the domain land in the edge bins; their total count is returned.
#[allow(clippy::too_many_arguments)]
pub fn euler_maruyama_histogram(
    drift: f64,
    diffusion: f64,
    n_steps: usize,
    dt: f64,
    n_samples: usize,
    bins: usize,
    domain: (f64, f64),
    seed: u64,
) -> Result<(Dataset, usize)> {
    let (lo, hi) = domain;
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) || bins == 0 {
        return Err(Error::InvalidArgument(format!(
            "empty histogram domain [{lo}, {hi}] with {bins} bins"
        )));
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let samples = euler_maruyama_samples(drift, diffusion, n_steps, dt, n_samples, seed)?;
    let dx = (hi - lo) / bins as f64;
    let grid = Arc::new(Grid::line(bins, dx, lo + 0.5 * dx, Boundary::ZeroPad)?);
    let mut clipped = 0;
    let mut snaps = Vec::with_capacity(samples.len());
    let w = 1.0 / (n_samples as f64 * dx);
    for row in &samples {
        let mut h = vec![0.0; bins];
        for &x in row {
            let b = ((x - lo) / dx).floor();
            let k = if b < 0.0 {
                clipped += 1;
                0
            } else if b >= bins as f64 {
                clipped += 1;
                bins - 1
            } else {
                b as usize
            };
            h[k] += w;
        }
        snaps.push(Field::new(grid.clone(), 1, h)?);
    }
    let times = (0..=n_steps).map(|j| j as f64 * dt).collect();
    Ok((Dataset::new(grid, times, snaps)?, clipped))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_defaults() {
        let g = generate(&ProblemSpec::new(ProblemName::Heat1D)).unwrap();
        assert_eq!(g.data.len(), 101);
        assert_eq!(g.data.grid().dims(), &[100]);
        assert_eq!(g.library.len(), 9);
        assert_eq!(g.truth.support(0.0).len(), 1);
        let k = g.library.index_of(&TermKey::new(0, vec![2], vec![1])).unwrap();
        assert_eq!(g.truth[k], -1.0);
        assert!((g.dt - 0.05e-4).abs() < 1e-18);
    }

    #[test]
    fn ks_truth_signs() {
        let g = generate(&ProblemSpec::with(
            ProblemName::KS1D,
            Overrides {
                n_t: Some(4),
                ..Default::default()
            },
        ))
        .unwrap();
        assert_eq!(g.library.len(), 8);
        let at = |d: u32, p: u32| g.truth[g.library.index_of(&TermKey::new(0, vec![d], vec![p])).unwrap()];
        assert_eq!(at(1, 2), -1.0);
        assert_eq!(at(2, 1), 0.5);
        assert_eq!(at(4, 1), -0.5);
        assert_eq!(g.data.grid().boundary(), Boundary::Periodic);
    }

    #[test]
    fn reaction_diffusion_has_fourteen_true_terms() {
        let g = generate(&ProblemSpec::with(
            ProblemName::ReactionDiffusion2D,
            Overrides {
                n_t: Some(2),
                ..Default::default()
            },
        ))
        .unwrap();
        assert_eq!(g.library.len(), 90);
        assert_eq!(g.truth.support(0.0).len(), 14);
        assert_eq!(g.data.n_components(), 2);
    }

    #[test]
    fn wave_initial_snapshot_is_sine() {
        let g = generate(&ProblemSpec::new(ProblemName::Wave1D)).unwrap();
        assert_eq!(g.data.len(), 11);
        let s = &g.data.snapshots()[0];
        for k in 0..100 {
            let x = g.data.grid().coord(0, k);
            assert_eq!(s.data()[k], x.sin());
        }
    }

    #[test]
    fn random_walk_noiseless_limit() {
        let s = euler_maruyama_samples(1.0, 0.0, 10, 0.1, 5, 3).unwrap();
        for (j, row) in s.iter().enumerate() {
            for &x in row {
                assert!((x - 0.1 * j as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_walk_variance() {
        let s = euler_maruyama_samples(0.0, 0.5, 50, 0.01, 20_000, 11).unwrap();
        let last = &s[50];
        let n = last.len() as f64;
        let mean = last.iter().sum::<f64>() / n;
        let var = last.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let expect = 2.0 * 0.5 * 0.5;
        assert!((var - expect).abs() / expect < 0.05, "variance {var}");
    }

    #[test]
    fn histograms_are_normalized_and_deterministic() {
        let spec = ProblemSpec::with(
            ProblemName::RandomWalk1D,
            Overrides {
                seed: Some(7),
                ..Default::default()
            },
        );
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.data, b.data);
        let dx = a.data.grid().spacing()[0];
        for s in a.data.snapshots() {
            let mass: f64 = s.data().iter().sum::<f64>() * dx;
            assert!((mass - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn names_round_trip() {
        for n in ProblemName::ALL {
            assert_eq!(n.as_str().parse::<ProblemName>().unwrap(), n);
        }
        assert!("nope".parse::<ProblemName>().is_err());
    }

    #[test]
    fn wrong_coefficient_count_rejected() {
        let spec = ProblemSpec::with(
            ProblemName::KS1D,
            Overrides {
                coefficients: Some(vec![1.0]),
                ..Default::default()
            },
        );
        assert!(generate(&spec).is_err());
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Candidate term libraries and the coefficient vectors defined over them.
//!
//! A term `(i, d, p)` stands for `∇^(d)[f^p]` in the `i`-th equation of
//!
//! ```text
//! ∂_t f_i + Σ α_{i,d,p} ∇^(d)[f^p] = 0
//! ```
//!
//! Coefficients are always stored in this left-hand-side convention, so the
//! heat equation `f_t = f_xx` has coefficient `-1` on `(0, [2], [1])`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One candidate term: equation index, derivative multi-index, power multi-index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermKey {
    pub eq: usize,
    pub deriv: Vec<u32>,
    pub power: Vec<u32>,
}

impl TermKey {
    pub fn new(eq: usize, deriv: Vec<u32>, power: Vec<u32>) -> Self {
        Self { eq, deriv, power }
    }

    /// Total derivative order `|d|`.
    pub fn deriv_order(&self) -> u32 {
        self.deriv.iter().sum()
    }

    /// Total polynomial degree `|p|`.
    pub fn degree(&self) -> u32 {
        self.power.iter().sum()
    }
}

impl fmt::Display for TermKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.eq, join(&self.deriv), join(&self.power))
    }
}

fn join(v: &[u32]) -> String {
    v.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

/// Ordered, duplicate-free set of candidate terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermLibrary {
    terms: Vec<TermKey>,
    n_dims: usize,
    n_eqs: usize,
    d_max: u32,
    p_max: u32,
}

impl TermLibrary {
    /// Validates `terms` against the spatial dimension and equation count.
    /// The given order is kept; `d_max` and `p_max` are recomputed.
    pub fn new(terms: Vec<TermKey>, n_dims: usize, n_eqs: usize) -> Result<Self> {
        if n_dims == 0 || n_eqs == 0 {
            return Err(Error::InvalidArgument(
                "spatial dimension and equation count must be positive".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for t in &terms {
            if t.deriv.len() != n_dims {
                return Err(Error::DimensionMismatch(format!(
                    "derivative index {:?} has length {}, expected {n_dims}",
                    t.deriv,
                    t.deriv.len()
                )));
            }
            if t.power.len() != n_eqs {
                return Err(Error::DimensionMismatch(format!(
                    "power index {:?} has length {}, expected {n_eqs}",
                    t.power,
                    t.power.len()
                )));
            }
            if t.eq >= n_eqs {
                return Err(Error::InvalidArgument(format!(
                    "equation index {} out of range for {n_eqs} equations",
                    t.eq
                )));
            }
            if t.degree() == 0 {
                return Err(Error::InvalidArgument(
                    "the all-zero power index is not a valid term".into(),
                ));
            }
            if !seen.insert(t.clone()) {
                return Err(Error::InvalidArgument(format!("duplicate term {t}")));
            }
        }
        let d_max = terms.iter().map(TermKey::deriv_order).max().unwrap_or(0);
        let p_max = terms.iter().map(TermKey::degree).max().unwrap_or(0);
        Ok(Self {
            terms,
            n_dims,
            n_eqs,
            d_max,
            p_max,
        })
    }

    pub fn terms(&self) -> &[TermKey] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn n_eqs(&self) -> usize {
        self.n_eqs
    }

    pub fn d_max(&self) -> u32 {
        self.d_max
    }

    pub fn p_max(&self) -> u32 {
        self.p_max
    }

    pub fn index_of(&self, key: &TermKey) -> Option<usize> {
        self.terms.iter().position(|t| t == key)
    }

    /// Keeps only the terms for which `keep` returns true.
    pub fn filter(&self, mut keep: impl FnMut(&TermKey) -> bool) -> Result<Self> {
        let terms = self.terms.iter().filter(|t| keep(t)).cloned().collect();
        Self::new(terms, self.n_dims, self.n_eqs)
    }
}

/// Cross product of derivative and power index sets, replicated for each
/// equation, sorted lexicographically by `(eq, deriv, power)`.
pub fn build_library(
    n_dims: usize,
    n_eqs: usize,
    deriv_set: &[Vec<u32>],
    power_set: &[Vec<u32>],
) -> Result<TermLibrary> {
    for d in deriv_set {
        if d.len() != n_dims {
            return Err(Error::DimensionMismatch(format!(
                "derivative index {d:?} does not have length {n_dims}"
            )));
        }
    }
    for p in power_set {
        if p.len() != n_eqs {
            return Err(Error::DimensionMismatch(format!(
                "power index {p:?} does not have length {n_eqs}"
            )));
        }
    }
    let mut terms = BTreeSet::new();
    for eq in 0..n_eqs {
        for d in deriv_set {
            for p in power_set {
                terms.insert(TermKey::new(eq, d.clone(), p.clone()));
            }
        }
    }
    TermLibrary::new(terms.into_iter().collect(), n_dims, n_eqs)
}

/// All power multi-indices of length `n_eqs` with `1 <= |p| <= p_max`.
pub fn powers_up_to(n_eqs: usize, p_max: u32) -> Vec<Vec<u32>> {
    multi_indices(n_eqs, p_max)
        .into_iter()
        .filter(|p| p.iter().sum::<u32>() >= 1)
        .collect()
}

/// All derivative multi-indices of length `n_dims` with `1 <= |d| <= d_max`.
pub fn derivs_up_to(n_dims: usize, d_max: u32) -> Vec<Vec<u32>> {
    multi_indices(n_dims, d_max)
        .into_iter()
        .filter(|d| d.iter().sum::<u32>() >= 1)
        .collect()
}

fn multi_indices(len: usize, max_total: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        let mut next = Vec::new();
        for prefix in &out {
            let used: u32 = prefix.iter().sum();
            for k in 0..=(max_total - used) {
                let mut v = prefix.clone();
                v.push(k);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Coefficients `α`, one per library term in library order. Always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector(pub(crate) Vec<f64>);

impl CoefficientVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("coefficient slot {k}")));
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    /// Checks the length against a library.
    pub fn for_library(values: Vec<f64>, library: &TermLibrary) -> Result<Self> {
        if values.len() != library.len() {
            return Err(Error::LengthMismatch {
                expected: library.len(),
                got: values.len(),
            });
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Indices of slots with `|α| > zero_tol`.
    pub fn support(&self, zero_tol: f64) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > zero_tol)
            .map(|(k, _)| k)
            .collect()
    }
}

impl std::ops::Index<usize> for CoefficientVector {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// `Σ |est_k - truth_k|`.
pub fn coefficient_l1_error(est: &CoefficientVector, truth: &CoefficientVector) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            got: est.len(),
        });
    }
    Ok(est
        .values()
        .iter()
        .zip(truth.values())
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// Renders a library with values as one `i d1,..,dn p1,..,pN value` line per term.
///
/// Values use the shortest exponent form that parses back to the same bits.
pub fn format_coefficients(library: &TermLibrary, alpha: &CoefficientVector) -> String {
    let mut out = String::new();
    for (term, value) in library.terms().iter().zip(alpha.values()) {
        out.push_str(&format!("{term} {value:e}\n"));
    }
    out
}

/// Parses the text block written by [`format_coefficients`]. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_coefficients(text: &str) -> Result<(TermLibrary, CoefficientVector)> {
    let mut terms = Vec::new();
    let mut values = Vec::new();
    let mut dims: Option<(usize, usize)> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::InvalidArgument(format!("line {}: {what}", lineno + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(bad("expected `i d1,..,dn p1,..,pN value`"));
        }
        let eq = usize::from_str(fields[0]).map_err(|_| bad("bad equation index"))?;
        let deriv = parse_index(fields[1]).ok_or_else(|| bad("bad derivative index"))?;
        let power = parse_index(fields[2]).ok_or_else(|| bad("bad power index"))?;
        let value = f64::from_str(fields[3]).map_err(|_| bad("bad value"))?;
        match dims {
            None => dims = Some((deriv.len(), power.len())),
            Some((n, m)) if n != deriv.len() || m != power.len() => {
                return Err(bad("inconsistent index lengths"));
            }
            Some(_) => {}
        }
        terms.push(TermKey::new(eq, deriv, power));
        values.push(value);
    }
    let (n_dims, n_eqs) =
        dims.ok_or_else(|| Error::InvalidArgument("no coefficient lines found".into()))?;
    let library = TermLibrary::new(terms, n_dims, n_eqs)?;
    let alpha = CoefficientVector::for_library(values, &library)?;
    Ok((library, alpha))
}

fn parse_index(s: &str) -> Option<Vec<u32>> {
    s.split(',').map(|x| x.parse().ok()).collect()
}

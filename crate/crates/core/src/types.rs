//! Vertices, paths, interaction sequences and multisets, and the bounded
//! sample spaces they live in.
//!
//! Vertices are dense indices in `[0, V)`. Mathematical write-ups usually index
//! vertices, paths and entries from 1; everything here is 0-based.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::hash::Hash;
use std::ops::Deref;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::distances::{self, MetricLevel, PathMetric};
use crate::error::{invalid, Error, Result};

pub type Vertex = usize;

pub const FORMAT_VERSION: u32 = 1;

/// Vertex budget plus an optional label per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet {
    size: usize,
    labels: Option<Vec<String>>,
}

impl VertexSet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(invalid("vertex set must be non-empty"));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(invalid("vertex set must be non-empty"));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(invalid("vertex labels must be distinct"));
        }
        Ok(Self {
            size: labels.len(),
            labels: Some(labels),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, v: Vertex) -> Option<&str> {
        self.labels
            .as_ref()
            .and_then(|l| l.get(v))
            .map(String::as_str)
    }
}

/// A walk through the vertex set. The empty path plays the role of the
/// "missing path" when computing unmatched penalties.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(Vec<Vertex>);

impl Path {
    pub fn new(entries: Vec<Vertex>) -> Self {
        Self(entries)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn entries(&self) -> &[Vertex] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<Vertex> {
        self.0
    }
}

impl Deref for Path {
    type Target = [Vertex];

    fn deref(&self) -> &[Vertex] {
        &self.0
    }
}

impl From<Vec<Vertex>> for Path {
    fn from(v: Vec<Vertex>) -> Self {
        Self(v)
    }
}

impl From<&[Vertex]> for Path {
    fn from(v: &[Vertex]) -> Self {
        Self(v.to_vec())
    }
}

/// Shorter paths first, then lexicographic on entries.
impl Ord for Path {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Path {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Behaviour shared by interaction sequences and multisets, letting samplers
/// and posterior code run unchanged over either.
pub trait Observation: Clone + Eq + Hash + Ord + fmt::Debug + Send + Sync + 'static {
    const LEVEL: MetricLevel;

    fn paths(&self) -> &[Path];

    /// Builds an observation from paths in the given order. Multisets
    /// canonicalise.
    fn from_paths(paths: Vec<Path>) -> Self;

    fn distance(&self, other: &Self, inner: PathMetric) -> usize;

    /// Log of the number of distinct orderings of the paths that represent
    /// the same observation: zero for sequences.
    fn log_orderings(&self) -> f64;

    fn len(&self) -> usize {
        self.paths().len()
    }

    fn is_empty(&self) -> bool {
        self.paths().is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InteractionSeq {
    paths: Vec<Path>,
}

impl InteractionSeq {
    pub fn new(paths: Vec<Path>) -> Self {
        Self { paths }
    }

    pub fn from_vecs(paths: Vec<Vec<Vertex>>) -> Self {
        Self::new(paths.into_iter().map(Path::new).collect())
    }

    pub fn into_paths(self) -> Vec<Path> {
        self.paths
    }
}

impl Observation for InteractionSeq {
    const LEVEL: MetricLevel = MetricLevel::SequenceEdit;

    fn paths(&self) -> &[Path] {
        &self.paths
    }

    fn from_paths(paths: Vec<Path>) -> Self {
        Self::new(paths)
    }

    fn distance(&self, other: &Self, inner: PathMetric) -> usize {
        distances::seq_distance(&self.paths, &other.paths, inner)
    }

    fn log_orderings(&self) -> f64 {
        0.0
    }
}

/// Unordered collection of paths, stored in canonical (sorted) order so that
/// equality and hashing are multiset equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<Path>", into = "Vec<Path>")]
pub struct InteractionMultiset {
    paths: Vec<Path>,
}

impl InteractionMultiset {
    pub fn new(mut paths: Vec<Path>) -> Self {
        paths.sort();
        Self { paths }
    }

    pub fn from_vecs(paths: Vec<Vec<Vertex>>) -> Self {
        Self::new(paths.into_iter().map(Path::new).collect())
    }

    pub fn into_paths(self) -> Vec<Path> {
        self.paths
    }
}

impl From<Vec<Path>> for InteractionMultiset {
    fn from(paths: Vec<Path>) -> Self {
        Self::new(paths)
    }
}

impl From<InteractionMultiset> for Vec<Path> {
    fn from(m: InteractionMultiset) -> Self {
        m.paths
    }
}

impl Observation for InteractionMultiset {
    const LEVEL: MetricLevel = MetricLevel::MultisetMatching;

    fn paths(&self) -> &[Path] {
        &self.paths
    }

    fn from_paths(paths: Vec<Path>) -> Self {
        Self::new(paths)
    }

    fn distance(&self, other: &Self, inner: PathMetric) -> usize {
        distances::multiset_distance(&self.paths, &other.paths, inner)
    }

    fn log_orderings(&self) -> f64 {
        log_a_count(self)
    }
}

pub fn canonicalize(multiset: &InteractionMultiset) -> InteractionMultiset {
    InteractionMultiset::new(multiset.paths.clone())
}

/// Distinct paths with their multiplicities, in canonical order.
pub fn multiplicity_profile(multiset: &InteractionMultiset) -> Vec<(Path, usize)> {
    let mut out: Vec<(Path, usize)> = Vec::new();
    for p in &multiset.paths {
        match out.last_mut() {
            Some((q, w)) if q == p => *w += 1,
            _ => out.push((p.clone(), 1)),
        }
    }
    out
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Number of distinct orderings of the multiset's paths, `N!/(w_1!...w_k!)`.
/// Exact for `N <= 20`.
pub fn a_count(multiset: &InteractionMultiset) -> Result<u64> {
    let n = multiset.paths.len();
    if n > 20 {
        return Err(invalid(format!(
            "exact ordering count only supported for up to 20 paths, got {n}"
        )));
    }
    let mut count: u64 = (1..=n as u64).product();
    for (_, w) in multiplicity_profile(multiset) {
        count /= (1..=w as u64).product::<u64>();
    }
    Ok(count)
}

pub fn log_a_count(multiset: &InteractionMultiset) -> f64 {
    let mut out = ln_factorial(multiset.paths.len());
    for (_, w) in multiplicity_profile(multiset) {
        out -= ln_factorial(w);
    }
    out
}

/// Maximum path length `K` and maximum path count `L` over `V` vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceBounds {
    #[serde(rename = "V")]
    pub v: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
}

impl SpaceBounds {
    pub fn new(v: usize, k: usize, l: usize) -> Result<Self> {
        if v == 0 || k == 0 || l == 0 {
            return Err(invalid("bounds V, K and L must all be at least 1"));
        }
        Ok(Self { v, k, l })
    }
}

/// True iff the path count is at most `L` and every path length at most `K`.
pub fn in_bounds<O: Observation>(obs: &O, bounds: &SpaceBounds) -> bool {
    obs.len() <= bounds.l && obs.paths().iter().all(|p| p.len() <= bounds.k)
}

/// Membership of the model's sample space: in bounds, at least one path, no
/// empty paths, all vertices below `V`.
pub fn in_support<O: Observation>(obs: &O, bounds: &SpaceBounds) -> bool {
    !obs.is_empty()
        && in_bounds(obs, bounds)
        && obs
            .paths()
            .iter()
            .all(|p| !p.is_empty() && p.iter().all(|&x| x < bounds.v))
}

pub fn vertex_count<O: Observation>(obs: &O, v: Vertex) -> usize {
    obs.paths()
        .iter()
        .map(|p| p.iter().filter(|&&x| x == v).count())
        .sum()
}

/// On-disk dataset: a header with the space bounds and labels plus the
/// observations as nested integer arrays.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub format_version: u32,
    #[serde(rename = "V")]
    pub v: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(default)]
    pub labels: Vec<String>,
    /// Source identifier of each observation, when known.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub users: Vec<String>,
    pub observations: Vec<Vec<Path>>,
    pub ordered: bool,
}

impl Dataset {
    pub fn from_observations<O: Observation>(
        observations: &[O],
        bounds: SpaceBounds,
        labels: Vec<String>,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            v: bounds.v,
            k: bounds.k,
            l: bounds.l,
            labels,
            users: Vec::new(),
            observations: observations.iter().map(|o| o.paths().to_vec()).collect(),
            ordered: matches!(O::LEVEL, MetricLevel::SequenceEdit),
        }
    }

    pub fn bounds(&self) -> SpaceBounds {
        SpaceBounds {
            v: self.v,
            k: self.k,
            l: self.l,
        }
    }

    pub fn vertex_set(&self) -> Result<VertexSet> {
        if self.labels.is_empty() {
            VertexSet::new(self.v)
        } else {
            VertexSet::with_labels(self.labels.clone())
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        SpaceBounds::new(self.v, self.k, self.l)?;
        if !self.labels.is_empty() {
            if self.labels.len() != self.v {
                return Err(Error::Data(format!(
                    "{} labels for {} vertices",
                    self.labels.len(),
                    self.v
                )));
            }
            VertexSet::with_labels(self.labels.clone())?;
        }
        if !self.users.is_empty() && self.users.len() != self.observations.len() {
            return Err(Error::Data(format!(
                "{} user ids for {} observations",
                self.users.len(),
                self.observations.len()
            )));
        }
        let bounds = self.bounds();
        for (i, obs) in self.observations.iter().enumerate() {
            let seq = InteractionSeq::new(obs.clone());
            if !in_support(&seq, &bounds) {
                return Err(Error::Data(format!(
                    "observation {i} lies outside the declared V/K/L bounds"
                )));
            }
        }
        Ok(())
    }

    /// Observations as type `O`. Asking for sequences from an unordered
    /// dataset (or the reverse) is an error.
    pub fn observations_as<O: Observation>(&self) -> Result<Vec<O>> {
        let want_ordered = matches!(O::LEVEL, MetricLevel::SequenceEdit);
        if want_ordered != self.ordered {
            return Err(Error::Data(format!(
                "dataset is {} but {} observations were requested",
                if self.ordered { "ordered" } else { "unordered" },
                if want_ordered { "ordered" } else { "unordered" }
            )));
        }
        Ok(self
            .observations
            .iter()
            .map(|o| O::from_paths(o.clone()))
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn read(path: &FsPath) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let ds: Dataset = serde_json::from_str(&text)?;
        ds.validate()?;
        Ok(ds)
    }

    pub fn write(&self, path: &FsPath) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Histogram of observations, keyed in sorted order.
pub fn histogram<O: Observation>(samples: &[O]) -> BTreeMap<O, usize> {
    let mut h = BTreeMap::new();
    for s in samples {
        *h.entry(s.clone()).or_insert(0) += 1;
    }
    h
}

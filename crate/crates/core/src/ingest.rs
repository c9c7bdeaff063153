//! Check-in ingestion and neighbourhood-based subset selection.
//!
//! Input rows are tab-separated with eight columns: user id, venue id,
//! category id, category name, latitude, longitude, UTC timestamp
//! (`Tue Apr 03 18:00:09 +0000 2012`) and timezone offset in minutes. Each
//! user's check-ins on one local calendar day form a path of top-level
//! category indices.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;

use chrono::{DateTime, Duration, FixedOffset, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distances::{steinhaus, PathMetric};
use crate::error::{invalid, Error, Result};
use crate::types::{canonicalize, Dataset, InteractionMultiset, Path, FORMAT_VERSION};

pub const TIMESTAMP_FORMAT: &str = "%a %b %d %H:%M:%S %z %Y";
const MAX_OFFSET_MINUTES: i64 = 900;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckinRecord {
    pub user_id: String,
    pub venue_category: String,
    pub utc_time: DateTime<FixedOffset>,
    pub tz_offset_minutes: i64,
}

impl CheckinRecord {
    pub fn local_date(&self) -> NaiveDate {
        (self.utc_time.naive_utc() + Duration::minutes(self.tz_offset_minutes)).date()
    }
}

fn default_min_path_len() -> usize {
    2
}

fn default_min_paths() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestConfig {
    #[serde(default = "default_min_path_len")]
    pub min_path_len: usize,
    #[serde(default = "default_min_paths")]
    pub min_paths_per_user: usize,
    /// Keep days in date order as sequences instead of multisets.
    #[serde(default)]
    pub ordered: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            min_path_len: default_min_path_len(),
            min_paths_per_user: default_min_paths(),
            ordered: false,
        }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_path_len == 0 || self.min_paths_per_user == 0 {
            return Err(invalid("ingestion thresholds must be at least 1"));
        }
        Ok(())
    }
}

fn tsv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .quoting(false)
        .flexible(true)
        .from_reader(r)
}

/// Low-level to top-level category names, one tab-separated pair per line.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CategoryMap {
    map: HashMap<String, String>,
    labels: Vec<String>,
}

impl CategoryMap {
    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut map = HashMap::new();
        for (k, rec) in tsv_reader(r).records().enumerate() {
            let rec = rec?;
            let line = rec.position().map_or(k + 1, |p| p.line() as usize);
            if rec.len() == 1 && rec[0].trim().is_empty() {
                continue;
            }
            if rec.len() != 2 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 2 columns in category map, found {}", rec.len()),
                });
            }
            let (low, top) = (rec[0].trim().to_string(), rec[1].trim().to_string());
            if let Some(prev) = map.get(&low) {
                if prev != &top {
                    return Err(Error::Parse {
                        line,
                        message: format!("category {low:?} mapped to both {prev:?} and {top:?}"),
                    });
                }
            }
            map.insert(low, top);
        }
        let labels: BTreeSet<String> = map.values().cloned().collect();
        Ok(Self {
            map,
            labels: labels.into_iter().collect(),
        })
    }

    /// Sorted distinct top-level names; a vertex is an index into this list.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vertex(&self, category: &str) -> Option<usize> {
        let top = self.map.get(category)?;
        self.labels.binary_search(top).ok()
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_checkins<R: Read>(r: R) -> Result<Vec<CheckinRecord>> {
    let mut out = Vec::new();
    for (k, rec) in tsv_reader(r).records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != 8 {
            return Err(parse_error(
                line,
                format!("expected 8 columns, found {}", rec.len()),
            ));
        }
        let utc_time = DateTime::parse_from_str(rec[6].trim(), TIMESTAMP_FORMAT)
            .map_err(|e| parse_error(line, format!("bad timestamp {:?}: {e}", &rec[6])))?;
        let tz_offset_minutes: i64 = rec[7]
            .trim()
            .parse()
            .map_err(|_| parse_error(line, format!("bad timezone offset {:?}", &rec[7])))?;
        if tz_offset_minutes.abs() > MAX_OFFSET_MINUTES {
            return Err(parse_error(
                line,
                format!("timezone offset {tz_offset_minutes} outside [-900, 900]"),
            ));
        }
        out.push(CheckinRecord {
            user_id: rec[0].trim().to_string(),
            venue_category: rec[3].trim().to_string(),
            utc_time,
            tz_offset_minutes,
        });
    }
    Ok(out)
}

/// Builds one observation per retained user, in order of first appearance.
pub fn build_dataset(
    records: &[CheckinRecord],
    categories: &CategoryMap,
    cfg: &IngestConfig,
) -> Result<Dataset> {
    cfg.validate()?;
    let unmapped: BTreeSet<&str> = records
        .iter()
        .filter(|r| categories.vertex(&r.venue_category).is_none())
        .map(|r| r.venue_category.as_str())
        .collect();
    if !unmapped.is_empty() {
        return Err(Error::UnmappedCategories(
            unmapped.into_iter().map(String::from).collect(),
        ));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut days: HashMap<&str, BTreeMap<NaiveDate, Vec<&CheckinRecord>>> = HashMap::new();
    for r in records {
        let user = days.entry(&r.user_id).or_insert_with(|| {
            order.push(&r.user_id);
            BTreeMap::new()
        });
        user.entry(r.local_date()).or_default().push(r);
    }
    let mut users = Vec::new();
    let mut observations = Vec::new();
    for u in order {
        let mut paths: Vec<Path> = Vec::new();
        for (_, mut day) in days.remove(u).unwrap_or_default() {
            day.sort_by_key(|r| r.utc_time);
            if day.len() < cfg.min_path_len {
                continue;
            }
            let entries = day
                .iter()
                .map(|r| categories.vertex(&r.venue_category).expect("checked above"))
                .collect();
            paths.push(Path::new(entries));
        }
        if paths.len() < cfg.min_paths_per_user {
            continue;
        }
        if !cfg.ordered {
            paths = canonicalize(&InteractionMultiset::new(paths)).into_paths();
        }
        users.push(u.to_string());
        observations.push(paths);
    }
    let k = observations
        .iter()
        .flatten()
        .map(|p| p.len())
        .max()
        .unwrap_or(1);
    let l = observations.iter().map(|o| o.len()).max().unwrap_or(1);
    Ok(Dataset {
        format_version: FORMAT_VERSION,
        v: categories.labels().len(),
        k,
        l,
        labels: categories.labels().to_vec(),
        users,
        observations,
        ordered: cfg.ordered,
    })
}

pub fn ingest<R: Read, M: Read>(tsv: R, category_map: M, cfg: &IngestConfig) -> Result<Dataset> {
    let categories = CategoryMap::read(category_map)?;
    if categories.labels().is_empty() {
        return Err(invalid("category map is empty"));
    }
    let records = parse_checkins(tsv)?;
    build_dataset(&records, &categories, cfg)
}

/// Normalised (Steinhaus) distances between all observations.
pub fn steinhaus_matrix(observations: &[Vec<Path>], inner: PathMetric) -> Result<Vec<Vec<f64>>> {
    let n = observations.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Ok(0.0)
                    } else {
                        steinhaus(&observations[i], &observations[j], inner)
                    }
                })
                .collect()
        })
        .collect()
}

/// Indices of the `m` observations around the one with the smallest total
/// distance to its nearest neighbours, in ascending order. Without
/// `include_self` the centre is excluded and its `m` nearest others are
/// returned; with it the centre plus its `m - 1` nearest. Ties go to the
/// smallest index.
pub fn neighbourhood_indices(
    dist: &[Vec<f64>],
    m: usize,
    include_self: bool,
) -> Result<Vec<usize>> {
    let n = dist.len();
    if m == 0 || m > n {
        return Err(invalid(format!("cannot select {m} observations from {n}")));
    }
    // every observation is kept, whichever centre is chosen
    if m == n {
        return Ok((0..n).collect());
    }
    let others = if include_self { m - 1 } else { m };
    let nearest = |i: usize| {
        let mut idx: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        idx.sort_by(|&a, &b| dist[i][a].total_cmp(&dist[i][b]).then(a.cmp(&b)));
        idx.truncate(others);
        idx
    };
    let mut best = (f64::INFINITY, 0);
    for i in 0..n {
        let score: f64 = nearest(i).iter().map(|&j| dist[i][j]).sum();
        if score < best.0 {
            best = (score, i);
        }
    }
    let mut chosen = nearest(best.1);
    if include_self {
        chosen.push(best.1);
    }
    chosen.sort_unstable();
    Ok(chosen)
}

pub fn select_subset(
    dataset: &Dataset,
    m: usize,
    inner: PathMetric,
    include_self: bool,
) -> Result<Dataset> {
    let dist = steinhaus_matrix(&dataset.observations, inner)?;
    let chosen = neighbourhood_indices(&dist, m, include_self)?;
    let mut out = dataset.clone();
    out.observations = chosen
        .iter()
        .map(|&i| dataset.observations[i].clone())
        .collect();
    if !dataset.users.is_empty() {
        out.users = chosen.iter().map(|&i| dataset.users[i].clone()).collect();
    }
    out.l = out.observations.iter().map(|o| o.len()).max().unwrap_or(1);
    out.k = out
        .observations
        .iter()
        .flatten()
        .map(|p| p.len())
        .max()
        .unwrap_or(1);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAP: &str = "Cafe\tFood\nDiner\tFood\nMall\tShop\nPark\tOutdoors\n";

    fn row(user: &str, cat: &str, time: &str, tz: i64) -> String {
        format!("{user}\tv1\tc1\t{cat}\t40.7\t-74.0\t{time}\t{tz}\n")
    }

    fn cfg(min_len: usize, min_paths: usize) -> IngestConfig {
        IngestConfig {
            min_path_len: min_len,
            min_paths_per_user: min_paths,
            ordered: false,
        }
    }

    #[test]
    fn one_day_becomes_one_path() {
        let tsv = row("u", "Cafe", "Tue Apr 03 10:00:00 +0000 2012", 0)
            + &row("u", "Mall", "Tue Apr 03 12:00:00 +0000 2012", 0);
        let ds = ingest(tsv.as_bytes(), MAP.as_bytes(), &cfg(2, 1)).unwrap();
        assert_eq!(ds.labels, vec!["Food", "Outdoors", "Shop"]);
        assert_eq!(ds.observations, vec![vec![Path::new(vec![0, 2])]]);
        assert_eq!(ds.users, vec!["u"]);
    }

    #[test]
    fn single_checkin_days_are_dropped() {
        let tsv = row("u", "Cafe", "Tue Apr 03 10:00:00 +0000 2012", 0)
            + &row("u", "Mall", "Wed Apr 04 12:00:00 +0000 2012", 0);
        let ds = ingest(tsv.as_bytes(), MAP.as_bytes(), &cfg(2, 1)).unwrap();
        assert!(ds.observations.is_empty());
    }

    #[test]
    fn offset_moves_late_checkin_to_next_day() {
        let r = parse_checkins(row("u", "Cafe", "Tue Apr 03 23:50:00 +0000 2012", 600).as_bytes())
            .unwrap();
        assert_eq!(
            r[0].local_date(),
            NaiveDate::from_ymd_opt(2012, 4, 4).unwrap()
        );
        let r = parse_checkins(row("u", "Cafe", "Tue Apr 03 00:10:00 +0000 2012", -300).as_bytes())
            .unwrap();
        assert_eq!(
            r[0].local_date(),
            NaiveDate::from_ymd_opt(2012, 4, 2).unwrap()
        );
    }

    #[test]
    fn errors_carry_details() {
        let bad = row("u", "Cafe", "not a time", 0);
        match parse_checkins(bad.as_bytes()) {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        let short = "u\tv\tc\n";
        assert!(matches!(
            parse_checkins(short.as_bytes()),
            Err(Error::Parse { .. })
        ));
        let tz = row("u", "Cafe", "Tue Apr 03 10:00:00 +0000 2012", 901);
        assert!(parse_checkins(tz.as_bytes()).is_err());
        let tsv = row("u", "Zoo", "Tue Apr 03 10:00:00 +0000 2012", 0)
            + &row("u", "Bar", "Tue Apr 03 10:00:00 +0000 2012", 0);
        match ingest(tsv.as_bytes(), MAP.as_bytes(), &cfg(1, 1)) {
            Err(Error::UnmappedCategories(c)) => assert_eq!(c, vec!["Bar", "Zoo"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equal_times_keep_row_order() {
        let t = "Tue Apr 03 10:00:00 +0000 2012";
        let tsv = row("u", "Park", t, 0) + &row("u", "Cafe", t, 0);
        let mut c = cfg(2, 1);
        c.ordered = true;
        let ds = ingest(tsv.as_bytes(), MAP.as_bytes(), &c).unwrap();
        assert_eq!(ds.observations[0], vec![Path::new(vec![1, 0])]);
    }

    fn obs(paths: Vec<Vec<usize>>) -> Vec<Path> {
        paths.into_iter().map(Path::new).collect()
    }

    #[test]
    fn subset_drops_outlier() {
        let mut observations = vec![obs(vec![vec![0, 1]]); 4];
        observations.push(obs(vec![vec![2, 2, 2], vec![2, 2]]));
        let dist = steinhaus_matrix(&observations, PathMetric::Lsp).unwrap();
        assert_eq!(
            neighbourhood_indices(&dist, 4, true).unwrap(),
            vec![0, 1, 2, 3]
        );
        // centre 0 excluded, its three nearest kept
        assert_eq!(
            neighbourhood_indices(&dist, 3, false).unwrap(),
            vec![1, 2, 3]
        );
        assert_eq!(
            neighbourhood_indices(&dist, 5, true).unwrap(),
            vec![0, 1, 2, 3, 4]
        );
        assert_eq!(
            neighbourhood_indices(&dist, 5, false).unwrap(),
            vec![0, 1, 2, 3, 4]
        );
        assert!(neighbourhood_indices(&dist, 6, true).is_err());
    }
}

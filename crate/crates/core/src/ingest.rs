//! Learning-to-rank ingestion: parse, subsample, cluster, and turn the
//! clusters into bandit arms.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::environments::BanditInstance;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, Matrix};
use crate::rng::RngStream;

pub const MAX_RATING: u8 = 4;

/// Feature indices must appear in at least this fraction of records to be
/// eligible for column selection.
pub const MIN_FEATURE_FREQUENCY: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct RatedRecord {
    pub rating: u8,
    pub query_id: String,
    pub features: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reject {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParseReport {
    pub records: Vec<RatedRecord>,
    pub rejects: Vec<Reject>,
}

fn parse_line(line: &str) -> std::result::Result<RatedRecord, String> {
    let body = line.split('#').next().unwrap_or_default();
    let mut tokens = body.split_whitespace();
    let rating_tok = tokens.next().ok_or("missing rating")?;
    let rating: u8 = rating_tok
        .parse()
        .map_err(|_| format!("bad rating {rating_tok:?}"))?;
    if rating > MAX_RATING {
        return Err(format!("rating {rating} out of range 0..={MAX_RATING}"));
    }
    let qid_tok = tokens.next().ok_or("missing qid")?;
    let query_id = qid_tok
        .strip_prefix("qid:")
        .filter(|q| !q.is_empty())
        .ok_or_else(|| format!("expected qid:<id>, found {qid_tok:?}"))?
        .to_string();
    let mut features = BTreeMap::new();
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| format!("expected index:value, found {tok:?}"))?;
        let idx: u32 = idx
            .parse()
            .map_err(|_| format!("bad feature index {idx:?}"))?;
        if idx == 0 {
            return Err("feature indices start at 1".into());
        }
        let val: f64 = val
            .parse()
            .map_err(|_| format!("bad feature value {val:?}"))?;
        if !val.is_finite() {
            return Err(format!("non-finite value for feature {idx}"));
        }
        if features.insert(idx, val).is_some() {
            return Err(format!("duplicate feature index {idx}"));
        }
    }
    Ok(RatedRecord {
        rating,
        query_id,
        features,
    })
}

/// Parses `rating qid:<id> idx:val ...` lines. Malformed lines are collected
/// as rejects; a trailing `# comment` is ignored.
pub fn parse_letor_str(text: &str, source: &str) -> Result<ParseReport> {
    let mut report = ParseReport::default();
    let mut any = false;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        any = true;
        match parse_line(line) {
            Ok(rec) => report.records.push(rec),
            Err(reason) => report.rejects.push(Reject {
                line: i + 1,
                reason,
            }),
        }
    }
    if !any {
        return Err(Error::EmptyFile(source.to_string()));
    }
    Ok(report)
}

pub fn parse_letor(path: &Path) -> Result<ParseReport> {
    let text = std::fs::read_to_string(path)?;
    parse_letor_str(&text, &path.display().to_string())
}

pub fn to_letor_text(records: &[RatedRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let _ = write!(out, "{} qid:{}", r.rating, r.query_id);
        for (i, v) in &r.features {
            let _ = write!(out, " {i}:{v}");
        }
        out.push('\n');
    }
    out
}

/// Feature indices present in at least `min_fraction` of the records.
pub fn frequent_features(records: &[RatedRecord], min_fraction: f64) -> Vec<u32> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for r in records {
        for &i in r.features.keys() {
            *counts.entry(i).or_default() += 1;
        }
    }
    let need = min_fraction * records.len() as f64;
    counts
        .into_iter()
        .filter(|&(_, c)| c as f64 >= need)
        .map(|(i, _)| i)
        .collect()
}

/// `n_cols` frequent feature indices drawn uniformly without replacement,
/// returned in ascending order.
pub fn select_columns(
    records: &[RatedRecord],
    n_cols: usize,
    rng: &mut RngStream,
) -> Result<Vec<u32>> {
    let eligible = frequent_features(records, MIN_FEATURE_FREQUENCY);
    if n_cols == 0 || n_cols > eligible.len() {
        return Err(Error::InvalidParameter(format!(
            "requested {n_cols} columns but {} features are frequent enough",
            eligible.len()
        )));
    }
    let mut cols: Vec<u32> = rng
        .distinct_indices(eligible.len(), n_cols)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    cols.sort_unstable();
    Ok(cols)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subsample {
    /// `n_rows × |columns|`, absent sparse entries densified as 0.
    pub points: Matrix,
    pub ratings: Vec<f64>,
    /// Indices of the chosen records, in draw order.
    pub rows: Vec<usize>,
    pub columns: Vec<u32>,
}

pub fn subsample(
    records: &[RatedRecord],
    n_rows: usize,
    columns: &[u32],
    rng: &mut RngStream,
) -> Result<Subsample> {
    if n_rows > records.len() {
        return Err(Error::TooFewRecords {
            requested: n_rows,
            available: records.len(),
        });
    }
    if n_rows == 0 || columns.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one row and one column".into(),
        ));
    }
    let rows = rng.distinct_indices(records.len(), n_rows);
    let mut data = Vec::with_capacity(n_rows * columns.len());
    let mut ratings = Vec::with_capacity(n_rows);
    for &r in &rows {
        let rec = &records[r];
        data.extend(
            columns
                .iter()
                .map(|c| rec.features.get(c).copied().unwrap_or(0.0)),
        );
        ratings.push(rec.rating as f64);
    }
    Ok(Subsample {
        points: Matrix::new(n_rows, columns.len(), data)?,
        ratings,
        rows,
        columns: columns.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    /// `K × d`, one centroid per row.
    pub centroids: Matrix,
    pub assignments: Vec<usize>,
    pub counts: Vec<usize>,
    /// Total squared distance to assigned centroids after each iteration.
    pub distortion_history: Vec<f64>,
    pub iterations: usize,
    rating_sums: Option<Vec<f64>>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    /// Records per-cluster rating sums; `ratings` follows the point order
    /// used for clustering.
    pub fn attach_ratings(&mut self, ratings: &[f64]) -> Result<()> {
        if ratings.len() != self.assignments.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} ratings for {} points",
                ratings.len(),
                self.assignments.len()
            )));
        }
        let mut sums = vec![0.0; self.k()];
        for (&a, &r) in self.assignments.iter().zip(ratings) {
            sums[a] += r;
        }
        self.rating_sums = Some(sums);
        Ok(())
    }

    pub fn rating_sums(&self) -> Option<&[f64]> {
        self.rating_sums.as_deref()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, ties to the lowest index.
fn nearest(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_pp_init(points: &Matrix, k: usize, rng: &mut RngStream) -> Matrix {
    let (n, d) = (points.rows(), points.cols());
    let mut centroids = Vec::with_capacity(k * d);
    centroids.extend_from_slice(points.row(rng.index(n)));
    let mut dist: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), &centroids[..d]))
        .collect();
    for _ in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.uniform() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in dist.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    chosen = Some(i);
                    break;
                }
            }
            // Rounding can leave the target just past the last increment.
            chosen.unwrap_or_else(|| dist.iter().rposition(|&w| w > 0.0).unwrap_or(0))
        } else {
            rng.index(n)
        };
        let row = points.row(pick).to_vec();
        for (i, di) in dist.iter_mut().enumerate() {
            *di = di.min(sq_dist(points.row(i), &row));
        }
        centroids.extend(row);
    }
    Matrix::new(k, d, centroids).expect("finite points give finite centroids")
}

/// Lloyd's algorithm from a k-means++ start. Stops once no centroid moves by
/// more than `tol` (Euclidean) or after `max_iters` iterations. A cluster
/// that empties is reseeded with the point farthest from its centroid.
pub fn kmeans(
    points: &Matrix,
    k: usize,
    max_iters: usize,
    tol: f64,
    rng: &mut RngStream,
) -> Result<ClusterModel> {
    let (n, d) = (points.rows(), points.cols());
    if k == 0 || n < k {
        return Err(Error::InvalidParameter(format!(
            "need n >= K >= 1, got n = {n}, K = {k}"
        )));
    }
    let distinct: HashSet<Vec<u64>> = (0..n)
        .map(|i| points.row(i).iter().map(|v| (v + 0.0).to_bits()).collect())
        .collect();
    if distinct.len() < k {
        return Err(Error::DegeneratePoints { k });
    }
    let mut centroids = kmeans_pp_init(points, k, rng);
    let mut assignments = vec![0usize; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < max_iters.max(1) {
        iterations += 1;
        let mut dists = vec![0.0; n];
        for i in 0..n {
            let (c, dd) = nearest(points.row(i), &centroids);
            assignments[i] = c;
            dists[i] = dd;
        }
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        while let Some(empty) = counts.iter().position(|&c| c == 0) {
            // Farthest point among clusters that can spare one.
            let far = (0..n)
                .filter(|&i| counts[assignments[i]] > 1)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                .expect("n >= K leaves a cluster with two points");
            counts[assignments[far]] -= 1;
            assignments[far] = empty;
            counts[empty] = 1;
            dists[far] = 0.0;
        }
        let mut sums = vec![0.0; k * d];
        for (i, &a) in assignments.iter().enumerate() {
            for (s, v) in sums[a * d..(a + 1) * d].iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        let mut max_shift = 0.0f64;
        for c in 0..k {
            let inv = 1.0 / counts[c] as f64;
            let mut moved = 0.0;
            for j in 0..d {
                let new = sums[c * d + j] * inv;
                moved += (new - centroids[(c, j)]).powi(2);
                centroids[(c, j)] = new;
            }
            max_shift = max_shift.max(moved.sqrt());
        }
        let distortion: f64 = (0..n)
            .map(|i| sq_dist(points.row(i), centroids.row(assignments[i])))
            .sum();
        history.push(distortion);
        if max_shift < tol {
            break;
        }
    }
    let mut counts = vec![0usize; k];
    for &a in &assignments {
        counts[a] += 1;
    }
    Ok(ClusterModel {
        centroids,
        assignments,
        counts,
        distortion_history: history,
        iterations,
        rating_sums: None,
    })
}

/// One arm per cluster: centroid features, mean rating as the mean reward.
/// The deviation is the residual of the least-squares fit of the means on
/// the centroids.
pub fn build_instance(model: &ClusterModel, noise_std: f64) -> Result<BanditInstance> {
    if let Some(c) = model.counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyCluster(c));
    }
    let sums = model
        .rating_sums()
        .ok_or_else(|| Error::InvalidParameter("cluster model has no ratings attached".into()))?;
    let means: Vec<f64> = sums
        .iter()
        .zip(&model.counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let fit = least_squares(&model.centroids, &means)?;
    BanditInstance::from_parts(model.centroids.transpose(), means, fit.residuals, noise_std)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearityDiagnostic {
    pub mean_abs_residual: f64,
    pub max_abs_residual: f64,
    pub mean_reward: f64,
    /// Set when the normal equations were singular and a tiny ridge was used.
    pub used_ridge_fallback: bool,
}

/// Unregularized least squares of the means on the features.
pub fn linearity_diagnostic(instance: &BanditInstance) -> Result<LinearityDiagnostic> {
    let (n, d) = (instance.n_arms(), instance.dim());
    if n <= d {
        return Err(Error::InvalidDimensions(format!(
            "diagnostic needs N > d, got N = {n}, d = {d}"
        )));
    }
    let fit = least_squares(&instance.features().transpose(), instance.means())?;
    let abs: Vec<f64> = fit.residuals.iter().map(|r| r.abs()).collect();
    Ok(LinearityDiagnostic {
        mean_abs_residual: abs.iter().sum::<f64>() / n as f64,
        max_abs_residual: abs.iter().copied().fold(0.0, f64::max),
        mean_reward: instance.means().iter().sum::<f64>() / n as f64,
        used_ridge_fallback: fit.regularized,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestConfig {
    pub rows: usize,
    pub cols: usize,
    pub k: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub noise_std: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            rows: 2000,
            cols: 5,
            k: 20,
            max_iters: 100,
            tol: 1e-6,
            noise_std: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestOutput {
    pub sample: Subsample,
    pub model: ClusterModel,
    pub instance: BanditInstance,
    /// `None` when `N <= d`, where any mean vector fits the centroids exactly.
    pub diagnostic: Option<LinearityDiagnostic>,
}

/// Column selection, row subsampling, clustering and instance construction,
/// each drawing from its own stream of `seed`.
pub fn run_pipeline(
    records: &[RatedRecord],
    config: &IngestConfig,
    seed: u64,
) -> Result<IngestOutput> {
    let columns = select_columns(records, config.cols, &mut RngStream::derive(seed, 0))?;
    let sample = subsample(
        records,
        config.rows,
        &columns,
        &mut RngStream::derive(seed, 1),
    )?;
    let mut model = kmeans(
        &sample.points,
        config.k,
        config.max_iters,
        config.tol,
        &mut RngStream::derive(seed, 2),
    )?;
    model.attach_ratings(&sample.ratings)?;
    let instance = build_instance(&model, config.noise_std)?;
    let diagnostic = (instance.n_arms() > instance.dim())
        .then(|| linearity_diagnostic(&instance))
        .transpose()?;
    Ok(IngestOutput {
        sample,
        model,
        instance,
        diagnostic,
    })
}

/// Shape of a synthetic learning-to-rank corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticLetorSpec {
    pub rows: usize,
    pub features: usize,
    pub clusters: usize,
    pub queries: usize,
}

impl Default for SyntheticLetorSpec {
    fn default() -> Self {
        Self {
            rows: 2000,
            features: 60,
            clusters: 4,
            queries: 50,
        }
    }
}

/// Records drawn from planted clusters with a nonlinear rating map.
///
/// Each planted cluster has a centre and an elongation axis; a record sits
/// at `centre + t·axis + noise` with `t ~ U[−1, 1]` and is rated
/// `round(2 + 2 sin(3t + φ_c))`, which no linear function of the features
/// reproduces. A cluster only carries features on its own support, and the
/// last sixth of the indices are rare (well under 1% of records).
pub fn synthetic_letor(spec: &SyntheticLetorSpec, rng: &mut RngStream) -> Result<Vec<RatedRecord>> {
    let SyntheticLetorSpec {
        rows,
        features,
        clusters,
        queries,
    } = *spec;
    if rows == 0 || features < 6 || clusters == 0 || queries == 0 {
        return Err(Error::InvalidParameter(format!(
            "bad synthetic spec {spec:?}"
        )));
    }
    let common = features - features / 6;
    let mut support = Vec::with_capacity(clusters);
    let mut centres = Vec::with_capacity(clusters);
    let mut axes = Vec::with_capacity(clusters);
    let mut phases = Vec::with_capacity(clusters);
    for _ in 0..clusters {
        let s: BTreeSet<usize> = (0..common).filter(|_| rng.uniform() < 0.75).collect();
        centres.push(
            (0..common)
                .map(|_| rng.uniform_range(0.0, 2.0))
                .collect::<Vec<_>>(),
        );
        axes.push(
            (0..common)
                .map(|_| rng.uniform_range(-1.0, 1.0))
                .collect::<Vec<_>>(),
        );
        phases.push(rng.uniform_range(0.0, std::f64::consts::TAU));
        support.push(s);
    }
    let mut out = Vec::with_capacity(rows);
    for _ in 0..rows {
        let c = rng.index(clusters);
        let t = rng.uniform_range(-1.0, 1.0);
        let mut feats = BTreeMap::new();
        for &j in &support[c] {
            let v = centres[c][j] + t * axes[c][j] + 0.05 * rng.standard_normal();
            feats.insert(j as u32 + 1, round6(v));
        }
        for j in common..features {
            if rng.uniform() < 0.004 {
                feats.insert(j as u32 + 1, round6(rng.uniform()));
            }
        }
        let rating = (2.0 + 2.0 * (3.0 * t + phases[c]).sin())
            .round()
            .clamp(0.0, 4.0) as u8;
        out.push(RatedRecord {
            rating,
            query_id: (rng.index(queries) + 1).to_string(),
            features: feats,
        });
    }
    Ok(out)
}

/// Six decimals keep the text form short and exactly re-parseable.
fn round6(v: f64) -> f64 {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_line() {
        let rep = parse_letor_str("3 qid:7 1:0.5 4:0.25\n", "x").unwrap();
        let r = &rep.records[0];
        assert_eq!(r.rating, 3);
        assert_eq!(r.query_id, "7");
        assert_eq!(r.features, BTreeMap::from([(1, 0.5), (4, 0.25)]));
    }

    #[test]
    fn rejects_are_reported_not_fatal() {
        let text = "5 qid:1 1:0.1\n2 qid:1 1:0.2\nx qid:2\n1 q:3 1:1\n2 qid:4 0:1\n2 qid:4 3:abc\n";
        let rep = parse_letor_str(text, "x").unwrap();
        assert_eq!(rep.records.len(), 1);
        let lines: Vec<usize> = rep.rejects.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![1, 3, 4, 5, 6]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            parse_letor_str("\n \n", "f"),
            Err(Error::EmptyFile(_))
        ));
    }

    #[test]
    fn generator_round_trips_through_text() {
        let spec = SyntheticLetorSpec {
            rows: 100,
            ..Default::default()
        };
        let recs = synthetic_letor(&spec, &mut RngStream::new(4)).unwrap();
        let rep = parse_letor_str(&to_letor_text(&recs), "gen").unwrap();
        assert!(rep.rejects.is_empty());
        assert_eq!(rep.records, recs);
    }

    #[test]
    fn subsample_densifies_missing_entries() {
        let rep = parse_letor_str("1 qid:1 1:0.5 2:1.5\n2 qid:1 1:0.7\n", "x").unwrap();
        let s = subsample(&rep.records, 2, &[1, 2, 3], &mut RngStream::new(0)).unwrap();
        for (row, &rec) in s.rows.iter().enumerate() {
            let r = &rep.records[rec];
            for (j, c) in [1u32, 2, 3].iter().enumerate() {
                assert_eq!(
                    s.points[(row, j)],
                    r.features.get(c).copied().unwrap_or(0.0)
                );
            }
            assert_eq!(s.ratings[row], r.rating as f64);
        }
        let again = subsample(&rep.records, 2, &[1, 2, 3], &mut RngStream::new(0)).unwrap();
        assert_eq!(s, again);
        assert!(matches!(
            subsample(&rep.records, 3, &[1], &mut RngStream::new(0)),
            Err(Error::TooFewRecords {
                requested: 3,
                available: 2
            })
        ));
    }

    #[test]
    fn rare_features_are_not_eligible() {
        let recs = synthetic_letor(&SyntheticLetorSpec::default(), &mut RngStream::new(1)).unwrap();
        let eligible = frequent_features(&recs, MIN_FEATURE_FREQUENCY);
        assert!(eligible.iter().all(|&i| i <= 50));
        assert!(eligible.len() >= 40);
    }

    #[test]
    fn k_equal_n_gives_zero_distortion() {
        let pts = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let m = kmeans(&pts, 3, 10, 1e-9, &mut RngStream::new(0)).unwrap();
        assert_eq!(*m.distortion_history.last().unwrap(), 0.0);
        assert_eq!(m.counts, vec![1, 1, 1]);
    }

    #[test]
    fn too_few_distinct_points() {
        let pts = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        assert!(matches!(
            kmeans(&pts, 2, 10, 1e-9, &mut RngStream::new(0)),
            Err(Error::DegeneratePoints { k: 2 })
        ));
    }

    #[test]
    fn recovers_two_separated_blobs() {
        let mut rng = RngStream::new(11);
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for i in 0..200 {
            let blob = i % 2;
            let off = 10.0 * blob as f64;
            rows.push(vec![
                off + rng.standard_normal(),
                off + rng.standard_normal(),
            ]);
            truth.push(blob);
        }
        let pts = Matrix::from_rows(&rows).unwrap();
        let m = kmeans(&pts, 2, 100, 1e-9, &mut RngStream::new(2)).unwrap();
        let flip = m.assignments[0] != truth[0];
        for (a, t) in m.assignments.iter().zip(&truth) {
            assert_eq!(*a == *t, !flip);
        }
        assert!(m
            .distortion_history
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-9 * w[0]));
    }

    #[test]
    fn centroids_are_member_means() {
        let recs = synthetic_letor(&SyntheticLetorSpec::default(), &mut RngStream::new(3)).unwrap();
        let out = run_pipeline(&recs, &IngestConfig::default(), 9).unwrap();
        let m = &out.model;
        let d = out.sample.points.cols();
        for c in 0..m.k() {
            let members: Vec<usize> = (0..m.assignments.len())
                .filter(|&i| m.assignments[i] == c)
                .collect();
            for j in 0..d {
                let mean = members
                    .iter()
                    .map(|&i| out.sample.points[(i, j)])
                    .sum::<f64>()
                    / members.len() as f64;
                assert!((mean - m.centroids[(c, j)]).abs() < 1e-9);
            }
        }
        assert!(m
            .distortion_history
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        assert!(out
            .instance
            .means()
            .iter()
            .all(|&v| (0.0..=4.0).contains(&v)));
    }

    #[test]
    fn single_cluster_rating_mean() {
        let pts = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let mut m = kmeans(&pts, 1, 10, 1e-9, &mut RngStream::new(0)).unwrap();
        m.attach_ratings(&[2.0, 4.0]).unwrap();
        let inst = build_instance(&m, 0.1).unwrap();
        assert_eq!(inst.means(), &[3.0]);
    }

    #[test]
    fn diagnostic_on_three_arm_projection() {
        // Features (1, 2, 3); deviation +0.1·w with w ⟂ x.
        let x = [1.0, 2.0, 3.0];
        let w = [1.0, 1.0, -1.0];
        let theta = 0.4;
        let means: Vec<f64> = (0..3).map(|i| theta * x[i] + 0.1 * w[i]).collect();
        let inst = BanditInstance::from_parts(
            Matrix::new(1, 3, x.to_vec()).unwrap(),
            means,
            vec![0.0; 3],
            0.1,
        )
        .unwrap();
        let diag = linearity_diagnostic(&inst).unwrap();
        assert!((diag.mean_abs_residual - 0.1).abs() < 1e-12);
        assert!((diag.max_abs_residual - 0.1).abs() < 1e-12);
        assert!(!diag.used_ridge_fallback);
    }

    #[test]
    fn diagnostic_is_zero_on_linear_instance() {
        let inst = crate::environments::gen_linear(
            &crate::environments::LinearSpec::new(30, 4),
            &mut RngStream::new(1),
        )
        .unwrap();
        assert!(linearity_diagnostic(&inst).unwrap().mean_abs_residual <= 1e-9);
    }
}

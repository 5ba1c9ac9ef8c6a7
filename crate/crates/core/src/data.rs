//! Datasets: synthetic generators, CSV ingestion, splits, and ball
//! normalization.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{relu, sample_unit_normal, Hyperplane, HyperplaneSet};

/// A design matrix with its response vector and, when the rows have been
/// ball-normalized, the transform that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
    transform: Option<BallTransform>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>, transform: Option<BallTransform>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::ShapeMismatch(format!(
                "design has {} rows, response has {}",
                x.nrows(),
                y.len()
            )));
        }
        if let Some(t) = &transform {
            if t.centers.len() != x.ncols() {
                return Err(Error::ShapeMismatch(format!(
                    "transform covers {} columns, design has {}",
                    t.centers.len(),
                    x.ncols()
                )));
            }
            let max_norm = max_row_norm(x.view());
            if max_norm > t.radius * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "normalized rows must fit the ball: max norm {max_norm} > radius {}",
                    t.radius
                )));
            }
        }
        Ok(Self { x, y, transform })
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn transform(&self) -> Option<&BallTransform> {
        self.transform.as_ref()
    }

    /// Number of observations.
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of feature columns.
    pub fn dimension(&self) -> usize {
        self.x.ncols()
    }

    /// A new dataset holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let p = self.dimension();
        let mut x = Array2::zeros((rows.len(), p));
        let mut y = Array1::zeros(rows.len());
        for (out, &i) in rows.iter().enumerate() {
            if i >= self.len() {
                return Err(Error::InvalidParameter(format!(
                    "row index {i} out of range for N = {}",
                    self.len()
                )));
            }
            x.row_mut(out).assign(&self.x.row(i));
            y[out] = self.y[i];
        }
        Ok(Self {
            x,
            y,
            transform: self.transform.clone(),
        })
    }
}

fn max_row_norm(x: ArrayView2<'_, f64>) -> f64 {
    (0..x.nrows())
        .map(|i| x.row(i).dot(&x.row(i)).sqrt())
        .fold(0.0, f64::max)
}

/// The recorded ball normalization: per-column centers and scales plus the
/// ball radius. Feature maps are `x' = (x - center) / scale` columnwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallTransform {
    pub centers: Vec<f64>,
    pub scales: Vec<f64>,
    pub radius: f64,
}

impl BallTransform {
    pub fn dimension(&self) -> usize {
        self.centers.len()
    }

    pub fn apply_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dimension() {
            return Err(Error::ShapeMismatch(format!(
                "transform covers {} columns, input has {}",
                self.dimension(),
                x.ncols()
            )));
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| (v - self.centers[j]) / self.scales[j]);
        }
        Ok(out)
    }

    pub fn invert_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dimension() {
            return Err(Error::ShapeMismatch(format!(
                "transform covers {} columns, input has {}",
                self.dimension(),
                x.ncols()
            )));
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| v * self.scales[j] + self.centers[j]);
        }
        Ok(out)
    }

    /// Applies the transform to new data (e.g. a test split). The result
    /// carries no transform of its own: rows from outside the fitted hull
    /// may land slightly outside the ball, which is fine for prediction.
    pub fn apply_dataset(&self, data: &Dataset) -> Result<Dataset> {
        let x = self.apply_matrix(data.x())?;
        Dataset::new(x, data.y().clone(), None)
    }

    /// The documented sidecar format: one `key = value` pair per line with
    /// `radius`, `center.<j>`, and `scale.<j>` keys.
    pub fn to_keyvalue(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "radius = {}", self.radius);
        for (j, c) in self.centers.iter().enumerate() {
            let _ = writeln!(out, "center.{j} = {c}");
        }
        for (j, s) in self.scales.iter().enumerate() {
            let _ = writeln!(out, "scale.{j} = {s}");
        }
        out
    }

    pub fn from_keyvalue(text: &str) -> Result<Self> {
        let mut radius = None;
        let mut centers: Vec<(usize, f64)> = Vec::new();
        let mut scales: Vec<(usize, f64)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Snapshot(format!("transform line {}: missing '='", lineno + 1))
            })?;
            let key = key.trim();
            let value: f64 = value.trim().parse().map_err(|_| {
                Error::Snapshot(format!("transform line {}: bad number", lineno + 1))
            })?;
            if key == "radius" {
                radius = Some(value);
            } else if let Some(idx) = key.strip_prefix("center.") {
                let j: usize = idx.parse().map_err(|_| {
                    Error::Snapshot(format!("transform line {}: bad column index", lineno + 1))
                })?;
                centers.push((j, value));
            } else if let Some(idx) = key.strip_prefix("scale.") {
                let j: usize = idx.parse().map_err(|_| {
                    Error::Snapshot(format!("transform line {}: bad column index", lineno + 1))
                })?;
                scales.push((j, value));
            } else {
                return Err(Error::Snapshot(format!("unknown transform key {key:?}")));
            }
        }
        centers.sort_by_key(|&(j, _)| j);
        scales.sort_by_key(|&(j, _)| j);
        if centers.len() != scales.len()
            || centers.iter().enumerate().any(|(i, &(j, _))| i != j)
            || scales.iter().enumerate().any(|(i, &(j, _))| i != j)
        {
            return Err(Error::Snapshot("transform columns are not contiguous".into()));
        }
        Ok(Self {
            centers: centers.into_iter().map(|(_, v)| v).collect(),
            scales: scales.into_iter().map(|(_, v)| v).collect(),
            radius: radius.ok_or_else(|| Error::Snapshot("transform is missing radius".into()))?,
        })
    }
}

/// Centers each column at its midrange, rescales (shrink-only, so data
/// already inside the unit ball is left alone), and records the transform.
/// All output rows satisfy `norm <= 1`.
pub fn normalize_to_ball(data: &Dataset) -> Result<(Dataset, BallTransform)> {
    if data.is_empty() {
        return Err(Error::EmptyData("cannot normalize an empty dataset".into()));
    }
    let p = data.dimension();
    let mut centers = Vec::with_capacity(p);
    let mut scales = Vec::with_capacity(p);
    for j in 0..p {
        let col = data.x.column(j);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in col {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        centers.push(0.5 * (lo + hi));
        let half_range = 0.5 * (hi - lo);
        if half_range == 0.0 {
            log::warn!("column {j} is constant; leaving its scale at 1");
        }
        // Shrink-only: columns already within [-1, 1] keep their units.
        scales.push(half_range.max(1.0));
    }
    let mut x = data.x.clone();
    for (j, mut col) in x.columns_mut().into_iter().enumerate() {
        col.mapv_inplace(|v| (v - centers[j]) / scales[j]);
    }
    // A single shared factor fits the centered rows inside the unit ball;
    // shrink-only again so in-ball data maps to itself.
    let global = max_row_norm(x.view()).max(1.0);
    if global > 1.0 {
        x.mapv_inplace(|v| v / global);
        for s in &mut scales {
            *s *= global;
        }
    }
    let transform = BallTransform {
        centers,
        scales,
        radius: 1.0,
    };
    let normalized = Dataset::new(x, data.y.clone(), Some(transform.clone()))?;
    Ok((normalized, transform))
}

/// The generating parameters behind a synthetic dataset, with the realized
/// noise draws kept for test introspection.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub planes: HyperplaneSet,
    pub weights: Array1<f64>,
    pub noise_sd: f64,
    pub noise: Array1<f64>,
}

impl GroundTruth {
    /// The noiseless response surface at `x`.
    pub fn noiseless(&self, x: ndarray::ArrayView1<'_, f64>) -> f64 {
        let mut out = self.weights[0];
        for (j, plane) in self.planes.planes().iter().enumerate() {
            out += self.weights[j + 1] * relu(plane.normal().dot(&x) - plane.offset());
        }
        out
    }
}

/// Synthetic regression data: rows uniform on `[-1, 1]^p`, responses from a
/// randomly drawn ReLU surface with `m` planes plus Gaussian noise.
///
/// Plane offsets are uniform over the reachable range `(0, sqrt(p))`,
/// rejecting planes that miss the cube so every unit is active somewhere.
/// Weights `w_j ~ N(0, 1)` for `j >= 1`; the intercept and the noise are
/// `N(0, noise_sd^2)`.
pub fn gen_simulation<R: Rng + ?Sized>(
    p: usize,
    m: usize,
    n: usize,
    noise_sd: f64,
    rng: &mut R,
) -> Result<(Dataset, GroundTruth)> {
    if p == 0 {
        return Err(Error::InvalidDimension("p must be >= 1".into()));
    }
    if n == 0 {
        return Err(Error::EmptyData("n must be >= 1".into()));
    }
    if !(noise_sd.is_finite() && noise_sd >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise_sd must be nonnegative, got {noise_sd}"
        )));
    }

    let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-1.0..1.0));

    let radius = (p as f64).sqrt();
    let mut planes = Vec::with_capacity(m);
    for _ in 0..m {
        // Rejection: keep only planes that intersect the cube, i.e. with
        // offset below the cube's support in the normal direction.
        let plane = loop {
            let normal = sample_unit_normal(p, rng)?;
            let offset: f64 = rng.random_range(0.0..radius);
            let support: f64 = normal.iter().map(|v| v.abs()).sum();
            if offset > 0.0 && offset < support {
                break Hyperplane::new(normal, offset)?;
            }
        };
        planes.push(plane);
    }
    let planes = HyperplaneSet::new(p, radius, planes)?;

    let mut weights = Array1::zeros(m + 1);
    weights[0] = if noise_sd > 0.0 {
        let w0_prior = Normal::new(0.0, noise_sd).expect("positive sd");
        w0_prior.sample(rng)
    } else {
        0.0
    };
    for j in 1..=m {
        weights[j] = StandardNormal.sample(rng);
    }

    let noise = if noise_sd > 0.0 {
        let eps = Normal::new(0.0, noise_sd).expect("positive sd");
        Array1::from_shape_fn(n, |_| eps.sample(rng))
    } else {
        Array1::zeros(n)
    };

    let truth = GroundTruth {
        planes,
        weights,
        noise_sd,
        noise,
    };
    let y = Array1::from_shape_fn(n, |i| truth.noiseless(x.row(i)) + truth.noise[i]);
    Ok((Dataset::new(x, y, None)?, truth))
}

/// Seeded disjoint row split with sizes `floor(fraction * N)` and the
/// remainder.
pub fn train_test_split<R: Rng + ?Sized>(
    data: &Dataset,
    fraction: f64,
    rng: &mut R,
) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must be in (0, 1), got {fraction}"
        )));
    }
    let n = data.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let cut = ((fraction * n as f64).floor() as usize).min(n);
    let train = data.select_rows(&idx[..cut])?;
    let test = data.select_rows(&idx[cut..])?;
    Ok((train, test))
}

/// How to pick a column out of a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnSelector {
    /// Match a header field (requires a header row).
    Name(String),
    /// Zero-based position.
    Index(usize),
}

impl ColumnSelector {
    /// Parses as an index when the string is a bare integer, else a name.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => Self::Index(i),
            Err(_) => Self::Name(s.to_string()),
        }
    }

    fn resolve(&self, header: Option<&csv::StringRecord>, width: usize) -> Result<usize> {
        match self {
            Self::Index(i) => {
                if *i < width {
                    Ok(*i)
                } else {
                    Err(Error::UnknownColumn(format!(
                        "index {i} out of range for {width} columns"
                    )))
                }
            }
            Self::Name(name) => {
                let header = header.ok_or_else(|| {
                    Error::UnknownColumn(format!(
                        "column {name:?} requested but the file has no header"
                    ))
                })?;
                header
                    .iter()
                    .position(|f| f.trim() == name)
                    .ok_or_else(|| Error::UnknownColumn(name.clone()))
            }
        }
    }
}

/// Loads a comma-separated file (optional header, `.` decimals) into a
/// dataset. An empty `features` slice selects every column except the
/// response. Any non-numeric or missing selected value fails the load with
/// the offending data row (1-based, header excluded) in the error.
pub fn load_csv(
    path: impl AsRef<Path>,
    response: &ColumnSelector,
    features: &[ColumnSelector],
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let mut records = Vec::new();
    for record in reader.records() {
        records.push(record?);
    }
    if records.is_empty() {
        return Err(Error::EmptyData(format!(
            "{} has no rows",
            path.as_ref().display()
        )));
    }
    // Header detection: a first row with any non-numeric field is a header.
    let has_header = records[0].iter().any(|f| f.parse::<f64>().is_err());
    let (header, data_rows) = if has_header {
        (Some(&records[0]), &records[1..])
    } else {
        (None, &records[..])
    };
    if data_rows.is_empty() {
        return Err(Error::EmptyData(format!(
            "{} has a header but no data rows",
            path.as_ref().display()
        )));
    }

    let width = records[0].len();
    let response_idx = response.resolve(header, width)?;
    let feature_idx: Vec<usize> = if features.is_empty() {
        (0..width).filter(|&j| j != response_idx).collect()
    } else {
        features
            .iter()
            .map(|f| f.resolve(header, width))
            .collect::<Result<Vec<_>>>()?
    };
    if feature_idx.is_empty() {
        return Err(Error::Config("no feature columns selected".into()));
    }

    let n = data_rows.len();
    let mut x = Array2::zeros((n, feature_idx.len()));
    let mut y = Array1::zeros(n);
    for (i, record) in data_rows.iter().enumerate() {
        let parse = |col: usize| -> Result<f64> {
            let field = record.get(col).ok_or_else(|| Error::MalformedRow {
                row: i + 1,
                reason: format!("missing column {col}"),
            })?;
            field.parse::<f64>().map_err(|_| Error::MalformedRow {
                row: i + 1,
                reason: format!("non-numeric value {field:?} in column {col}"),
            })
        };
        for (out, &col) in feature_idx.iter().enumerate() {
            x[(i, out)] = parse(col)?;
        }
        y[i] = parse(response_idx)?;
    }
    Dataset::new(x, y, None)
}

/// Writes features then the response, with an `x1..xp,y` header. Values use
/// the shortest exact decimal form, so a write/read round trip is the
/// identity on the payload. Normalized datasets also get their transform as
/// a `<path>.transform.txt` sidecar.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let p = data.dimension();
    for j in 1..=p {
        let _ = write!(out, "x{j},");
    }
    let _ = writeln!(out, "y");
    for i in 0..data.len() {
        for j in 0..p {
            let _ = write!(out, "{},", data.x[(i, j)]);
        }
        let _ = writeln!(out, "{}", data.y[i]);
    }
    fs::write(path, out)?;
    if let Some(t) = &data.transform {
        fs::write(sidecar_path(path), t.to_keyvalue())?;
    }
    Ok(())
}

/// The transform sidecar written next to a normalized dataset snapshot.
pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".transform.txt");
    std::path::PathBuf::from(name)
}

/// Reads a transform sidecar back.
pub fn read_transform_sidecar(csv_path: &Path) -> Result<BallTransform> {
    let text = fs::read_to_string(sidecar_path(csv_path))?;
    BallTransform::from_keyvalue(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, tag};
    use ndarray::array;

    #[test]
    fn generator_is_exact_without_noise() {
        let mut r = rng::stream(1, &[tag::DATA]);
        let (data, truth) = gen_simulation(2, 3, 50, 0.0, &mut r).unwrap();
        for i in 0..50 {
            assert_eq!(data.y()[i], truth.noiseless(data.x().row(i)));
        }
    }

    #[test]
    fn generator_decomposes_into_signal_plus_noise() {
        let mut r = rng::stream(2, &[tag::DATA]);
        let (data, truth) = gen_simulation(3, 2, 40, 0.5, &mut r).unwrap();
        for i in 0..40 {
            let resid = data.y()[i] - truth.noiseless(data.x().row(i));
            assert!((resid - truth.noise[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn generator_noise_variance_matches_band() {
        let mut r = rng::stream(3, &[tag::DATA]);
        let (data, truth) = gen_simulation(2, 2, 5000, 0.1, &mut r).unwrap();
        let mut ss = 0.0;
        for i in 0..data.len() {
            let resid = data.y()[i] - truth.noiseless(data.x().row(i));
            ss += resid * resid;
        }
        let var = ss / data.len() as f64;
        let band = 3.0 * (2.0 / 5000.0f64).sqrt() * 0.01;
        assert!(
            (var - 0.01).abs() < band,
            "noise variance {var} outside 0.01 +/- {band}"
        );
    }

    #[test]
    fn generator_constant_when_no_planes() {
        let mut r = rng::stream(4, &[tag::DATA]);
        let (data, truth) = gen_simulation(2, 0, 20, 0.1, &mut r).unwrap();
        for i in 0..20 {
            assert_eq!(data.y()[i], truth.weights[0] + truth.noise[i]);
        }
    }

    #[test]
    fn generator_true_planes_cross_the_cube() {
        let mut r = rng::stream(5, &[tag::DATA]);
        let (_, truth) = gen_simulation(4, 20, 1, 0.1, &mut r).unwrap();
        for h in truth.planes.planes() {
            let support: f64 = h.normal().iter().map(|v| v.abs()).sum();
            assert!(h.offset() < support);
        }
    }

    #[test]
    fn generator_is_bit_reproducible() {
        let mut r1 = rng::stream(6, &[tag::DATA]);
        let mut r2 = rng::stream(6, &[tag::DATA]);
        let (d1, t1) = gen_simulation(3, 4, 30, 0.1, &mut r1).unwrap();
        let (d2, t2) = gen_simulation(3, 4, 30, 0.1, &mut r2).unwrap();
        assert_eq!(d1, d2);
        assert_eq!(t1, t2);
    }

    #[test]
    fn split_sizes_and_partition() {
        let mut r = rng::stream(7, &[tag::SPLIT]);
        let (data, _) = gen_simulation(2, 1, 100, 0.1, &mut r).unwrap();
        let (train, test) = train_test_split(&data, 0.75, &mut r).unwrap();
        assert_eq!(train.len(), 75);
        assert_eq!(test.len(), 25);

        // Union of the two row multisets equals the original rows.
        let mut seen: Vec<(u64, u64)> = Vec::new();
        for part in [&train, &test] {
            for i in 0..part.len() {
                seen.push((part.x()[(i, 0)].to_bits(), part.y()[i].to_bits()));
            }
        }
        let mut expect: Vec<(u64, u64)> = (0..data.len())
            .map(|i| (data.x()[(i, 0)].to_bits(), data.y()[i].to_bits()))
            .collect();
        seen.sort_unstable();
        expect.sort_unstable();
        assert_eq!(seen, expect);
    }

    #[test]
    fn split_rejects_boundary_fractions() {
        let mut r = rng::stream(8, &[tag::SPLIT]);
        let (data, _) = gen_simulation(2, 1, 10, 0.1, &mut r).unwrap();
        assert!(train_test_split(&data, 0.0, &mut r).is_err());
        assert!(train_test_split(&data, 1.0, &mut r).is_err());
    }

    #[test]
    fn normalize_keeps_unit_ball_data_fixed() {
        let x = array![[0.6, 0.0], [-0.6, 0.0], [0.0, 0.8], [0.0, -0.8]];
        let data = Dataset::new(x.clone(), array![1.0, 2.0, 3.0, 4.0], None).unwrap();
        let (normed, t) = normalize_to_ball(&data).unwrap();
        assert_eq!(t.radius, 1.0);
        for i in 0..4 {
            for j in 0..2 {
                assert!((normed.x()[(i, j)] - x[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normalize_single_point_to_origin() {
        let data = Dataset::new(array![[3.0, -7.0]], array![1.0], None).unwrap();
        let (normed, _) = normalize_to_ball(&data).unwrap();
        assert_eq!(normed.x()[(0, 0)], 0.0);
        assert_eq!(normed.x()[(0, 1)], 0.0);
    }

    #[test]
    fn normalize_round_trips() {
        let mut r = rng::stream(9, &[tag::DATA]);
        let x = Array2::from_shape_fn((30, 3), |_| r.random_range(-50.0..120.0));
        let y = Array1::from_shape_fn(30, |_| r.random_range(-1.0..1.0));
        let data = Dataset::new(x.clone(), y, None).unwrap();
        let (normed, t) = normalize_to_ball(&data).unwrap();
        assert!(max_row_norm(normed.x()) <= 1.0 + 1e-12);
        let back = t.invert_matrix(normed.x()).unwrap();
        for i in 0..30 {
            for j in 0..3 {
                assert!((back[(i, j)] - x[(i, j)]).abs() < 1e-12 * x[(i, j)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn transform_keyvalue_round_trips() {
        let t = BallTransform {
            centers: vec![1.5, -2.25],
            scales: vec![3.0, 0.125],
            radius: 1.0,
        };
        let text = t.to_keyvalue();
        let back = BallTransform::from_keyvalue(&text).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn csv_exact_recovery() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.csv");
        std::fs::write(&path, "a,b,y\n1.5,2,3\n-0.25,4,5\n0,6.5,7\n").unwrap();
        let data = load_csv(&path, &ColumnSelector::Name("y".into()), &[]).unwrap();
        assert_eq!(data.len(), 3);
        assert_eq!(data.dimension(), 2);
        assert_eq!(data.x()[(0, 0)], 1.5);
        assert_eq!(data.x()[(1, 0)], -0.25);
        assert_eq!(data.x()[(2, 1)], 6.5);
        assert_eq!(data.y()[2], 7.0);
    }

    #[test]
    fn csv_header_only_is_empty_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        std::fs::write(&path, "a,b,y\n").unwrap();
        let err = load_csv(&path, &ColumnSelector::Name("y".into()), &[]).unwrap_err();
        assert!(matches!(err, Error::EmptyData(_)), "{err}");
    }

    #[test]
    fn csv_malformed_row_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,y\n1,2\noops,4\n5,6\n").unwrap();
        let err = load_csv(&path, &ColumnSelector::Index(1), &[]).unwrap_err();
        match err {
            Error::MalformedRow { row, .. } => assert_eq!(row, 2),
            other => panic!("expected MalformedRow, got {other}"),
        }
    }

    #[test]
    fn csv_unknown_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cols.csv");
        std::fs::write(&path, "a,y\n1,2\n").unwrap();
        let err = load_csv(&path, &ColumnSelector::Name("nope".into()), &[]).unwrap_err();
        assert!(matches!(err, Error::UnknownColumn(_)));
    }

    #[test]
    fn csv_write_then_load_is_identity() {
        let mut r = rng::stream(10, &[tag::DATA]);
        let (data, _) = gen_simulation(3, 2, 25, 0.1, &mut r).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("round.csv");
        write_csv(&data, &path).unwrap();
        let back = load_csv(&path, &ColumnSelector::Name("y".into()), &[]).unwrap();
        assert_eq!(back.x(), data.x());
        assert_eq!(back.y(), data.y());
        assert!(!sidecar_path(&path).exists(), "no transform, no sidecar");
    }

    #[test]
    fn normalized_snapshot_carries_transform_sidecar() {
        let mut r = rng::stream(11, &[tag::DATA]);
        let (data, _) = gen_simulation(2, 1, 20, 0.1, &mut r).unwrap();
        let (normed, transform) = normalize_to_ball(&data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("normed.csv");
        write_csv(&normed, &path).unwrap();
        let back = read_transform_sidecar(&path).unwrap();
        assert_eq!(back, transform);
    }
}

//! Hyperplanes, Poisson hyperplane processes, and the ReLU feature map.
//!
//! A hyperplane is the point set `{x: <x, normal> - offset = 0}` with a unit
//! normal and a positive offset (the signed distance from the origin; the
//! orientation lives in the normal). A process realization is an ordered
//! list of such planes over a ball of radius `l`: plane `j` is neuron `j`
//! throughout inference, so list order is stable everywhere.
//!
//! Superposition (merging independent realizations) and restriction
//! (keeping the planes whose parameter point falls in a sub-region) are the
//! two constructions behind the intensity and domain decomposition schemes.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit-norm check tolerance (relative).
pub const UNIT_NORM_TOL: f64 = 1e-10;

/// Rectified linear unit, `max(0, c)`.
#[inline]
pub fn relu(c: f64) -> f64 {
    c.max(0.0)
}

/// One neuron's linear boundary: a unit normal and a positive offset.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    normal: Array1<f64>,
    offset: f64,
}

impl Hyperplane {
    /// Validates the unit norm and the positive offset.
    pub fn new(normal: Array1<f64>, offset: f64) -> Result<Self> {
        if normal.is_empty() {
            return Err(Error::InvalidDimension("hyperplane normal is empty".into()));
        }
        let norm = normal.dot(&normal).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "hyperplane normal must have unit norm, got {norm}"
            )));
        }
        if !(offset.is_finite() && offset > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "hyperplane offset must be positive, got {offset}"
            )));
        }
        Ok(Self { normal, offset })
    }

    pub fn normal(&self) -> ArrayView1<'_, f64> {
        self.normal.view()
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dimension(&self) -> usize {
        self.normal.len()
    }

    /// ReLU activation of this plane at `x`: `relu(<x, normal> - offset)`.
    pub fn activation(&self, x: ArrayView1<'_, f64>) -> f64 {
        relu(self.normal.dot(&x) - self.offset)
    }

    /// The plane's parameter point embedded back in input space: the foot of
    /// the perpendicular from the origin, `offset * normal`.
    pub fn foot_coordinate(&self, axis: usize) -> f64 {
        self.offset * self.normal[axis]
    }
}

/// A realization of the hyperplane process: the hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneSet {
    dimension: usize,
    domain_radius: f64,
    planes: Vec<Hyperplane>,
}

impl HyperplaneSet {
    /// Planes outside the data ball (`offset > domain_radius`) never
    /// activate differently on the data and are rejected here.
    pub fn new(dimension: usize, domain_radius: f64, planes: Vec<Hyperplane>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidDimension("dimension must be >= 1".into()));
        }
        if !(domain_radius.is_finite() && domain_radius > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "domain radius must be positive, got {domain_radius}"
            )));
        }
        for (j, plane) in planes.iter().enumerate() {
            if plane.dimension() != dimension {
                return Err(Error::ShapeMismatch(format!(
                    "plane {j} has dimension {}, set has {dimension}",
                    plane.dimension()
                )));
            }
            if plane.offset() > domain_radius {
                return Err(Error::InvalidParameter(format!(
                    "plane {j} offset {} exceeds domain radius {domain_radius}",
                    plane.offset()
                )));
            }
        }
        Ok(Self {
            dimension,
            domain_radius,
            planes,
        })
    }

    pub fn empty(dimension: usize, domain_radius: f64) -> Result<Self> {
        Self::new(dimension, domain_radius, Vec::new())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn planes(&self) -> &[Hyperplane] {
        &self.planes
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    /// Replaces plane `index` (0-based), preserving list order.
    pub fn replace_plane(&mut self, index: usize, plane: Hyperplane) -> Result<()> {
        if index >= self.planes.len() {
            return Err(Error::InvalidParameter(format!(
                "plane index {index} out of range for |P| = {}",
                self.planes.len()
            )));
        }
        if plane.dimension() != self.dimension {
            return Err(Error::ShapeMismatch(format!(
                "replacement plane has dimension {}, set has {}",
                plane.dimension(),
                self.dimension
            )));
        }
        if plane.offset() > self.domain_radius {
            return Err(Error::InvalidParameter(format!(
                "replacement plane offset {} exceeds domain radius {}",
                plane.offset(),
                self.domain_radius
            )));
        }
        self.planes[index] = plane;
        Ok(())
    }
}

/// How many planes a process realization draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhpMode {
    /// Exactly this many planes.
    FixedCount(usize),
    /// Count drawn from Poisson with this total mean measure.
    PoissonIntensity(f64),
}

/// A point uniform on the unit sphere `S^{p-1}`, by normalizing a standard
/// Gaussian draw (the only rotation-invariant construction that is
/// dimension-generic).
pub fn sample_unit_normal<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<Array1<f64>> {
    if p == 0 {
        return Err(Error::InvalidDimension(
            "cannot sample a direction in dimension 0".into(),
        ));
    }
    loop {
        let v: Array1<f64> = Array1::from_iter((0..p).map(|_| StandardNormal.sample(rng)));
        let norm = v.dot(&v).sqrt();
        if norm > 1e-12 {
            return Ok(v / norm);
        }
        // Astronomically unlikely near-zero draw; redraw keeps the output exact.
    }
}

/// A plane with direction uniform on the sphere and offset `~ Uniform(0, l)`.
pub fn sample_hyperplane<R: Rng + ?Sized>(p: usize, l: f64, rng: &mut R) -> Result<Hyperplane> {
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::InvalidDomain(format!(
            "domain radius must be positive, got {l}"
        )));
    }
    let normal = sample_unit_normal(p, rng)?;
    // Uniform(0, l); a zero offset would violate the positivity invariant.
    let offset = loop {
        let u: f64 = rng.random_range(0.0..l);
        if u > 0.0 {
            break u;
        }
    };
    Hyperplane::new(normal, offset)
}

/// A process realization: either a fixed plane count or a Poisson-distributed
/// one, followed by that many i.i.d. plane draws.
pub fn sample_php<R: Rng + ?Sized>(
    p: usize,
    l: f64,
    mode: PhpMode,
    rng: &mut R,
) -> Result<HyperplaneSet> {
    let count = match mode {
        PhpMode::FixedCount(m) => m,
        PhpMode::PoissonIntensity(total) => {
            if !(total.is_finite() && total > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "Poisson intensity must be positive, got {total}"
                )));
            }
            let dist = Poisson::new(total).map_err(|e| {
                Error::InvalidParameter(format!("Poisson intensity {total}: {e}"))
            })?;
            dist.sample(rng) as usize
        }
    };
    let planes = (0..count)
        .map(|_| sample_hyperplane(p, l, rng))
        .collect::<Result<Vec<_>>>()?;
    HyperplaneSet::new(p, l, planes)
}

/// ReLU features of every row of `x` against every plane, with a leading
/// constant column: `z[i][0] = 1`, `z[i][j] = relu(<x_i, n_j> - mu_j)`.
/// Column order matches plane order.
pub fn feature_map(x: ArrayView2<'_, f64>, planes: &HyperplaneSet) -> Result<Array2<f64>> {
    if x.ncols() != planes.dimension() {
        return Err(Error::ShapeMismatch(format!(
            "design matrix has {} columns, planes have dimension {}",
            x.ncols(),
            planes.dimension()
        )));
    }
    let n = x.nrows();
    let m = planes.len();
    let mut z = Array2::<f64>::zeros((n, m + 1));
    for i in 0..n {
        z[(i, 0)] = 1.0;
        let row = x.row(i);
        for (j, plane) in planes.planes().iter().enumerate() {
            z[(i, j + 1)] = plane.activation(row);
        }
    }
    Ok(z)
}

/// Concatenation of independent realizations over the same domain; input
/// order is preserved within and across sets.
pub fn superpose(sets: &[HyperplaneSet]) -> Result<HyperplaneSet> {
    let first = sets.first().ok_or_else(|| {
        Error::InvalidParameter("superpose needs at least one set".into())
    })?;
    let (p, l) = (first.dimension(), first.domain_radius());
    for (i, set) in sets.iter().enumerate().skip(1) {
        if set.dimension() != p || set.domain_radius() != l {
            return Err(Error::IncompatibleDomain(format!(
                "set {i} has (p = {}, l = {}), expected (p = {p}, l = {l})",
                set.dimension(),
                set.domain_radius()
            )));
        }
    }
    let planes = sets
        .iter()
        .flat_map(|s| s.planes().iter().cloned())
        .collect();
    HyperplaneSet::new(p, l, planes)
}

/// One axis-aligned slab of a [`DomainPartition`] (or an ad-hoc region).
///
/// Contains axis coordinates in `[lower, upper)`, plus `upper` itself when
/// `include_upper` is set (only the outermost cell needs the ball edge).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slab {
    pub axis: usize,
    pub lower: f64,
    pub upper: f64,
    pub include_upper: bool,
}

impl Slab {
    pub fn contains(&self, coordinate: f64) -> bool {
        coordinate >= self.lower
            && (coordinate < self.upper || (self.include_upper && coordinate == self.upper))
    }
}

/// The planes whose parameter point (the perpendicular foot `offset * normal`)
/// falls inside the slab. Counts over disjoint slabs are independent.
pub fn restrict(set: &HyperplaneSet, slab: &Slab) -> Result<HyperplaneSet> {
    if slab.axis >= set.dimension() {
        return Err(Error::InvalidDomain(format!(
            "slab axis {} out of range for dimension {}",
            slab.axis,
            set.dimension()
        )));
    }
    let planes = set
        .planes()
        .iter()
        .filter(|h| slab.contains(h.foot_coordinate(slab.axis)))
        .cloned()
        .collect();
    HyperplaneSet::new(set.dimension(), set.domain_radius(), planes)
}

/// An axis-aligned split of the ball into `K` slabs.
///
/// Cells are half-open on the right, so a point exactly on a cut belongs to
/// the cell on the greater side; the outermost cell additionally includes
/// the ball edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainPartition {
    axis: usize,
    cut_points: Vec<f64>,
    domain_radius: f64,
}

impl DomainPartition {
    pub fn new(axis: usize, cut_points: Vec<f64>, domain_radius: f64) -> Result<Self> {
        if !(domain_radius.is_finite() && domain_radius > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "domain radius must be positive, got {domain_radius}"
            )));
        }
        for pair in cut_points.windows(2) {
            if pair[0] >= pair[1] || pair.iter().any(|v| v.is_nan()) {
                return Err(Error::InvalidDomain(format!(
                    "cut points must be strictly increasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if let (Some(&first), Some(&last)) = (cut_points.first(), cut_points.last()) {
            if first <= -domain_radius || last >= domain_radius {
                return Err(Error::InvalidDomain(format!(
                    "cut points must lie strictly inside (-{domain_radius}, {domain_radius})"
                )));
            }
        }
        Ok(Self {
            axis,
            cut_points,
            domain_radius,
        })
    }

    /// `K` evenly spaced slabs over the axis extent of the ball.
    pub fn even(axis: usize, cells: usize, domain_radius: f64) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidDomain("partition needs at least one cell".into()));
        }
        let cuts = (1..cells)
            .map(|k| -domain_radius + 2.0 * domain_radius * k as f64 / cells as f64)
            .collect();
        Self::new(axis, cuts, domain_radius)
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn cut_points(&self) -> &[f64] {
        &self.cut_points
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    /// Number of cells, `K = cut_points.len() + 1`.
    pub fn num_cells(&self) -> usize {
        self.cut_points.len() + 1
    }

    pub fn cell(&self, index: usize) -> Result<Slab> {
        let k = self.num_cells();
        if index >= k {
            return Err(Error::InvalidDomain(format!(
                "cell index {index} out of range for K = {k}"
            )));
        }
        let lower = if index == 0 {
            -self.domain_radius
        } else {
            self.cut_points[index - 1]
        };
        let upper = if index == k - 1 {
            self.domain_radius
        } else {
            self.cut_points[index]
        };
        Ok(Slab {
            axis: self.axis,
            lower,
            upper,
            include_upper: index == k - 1,
        })
    }

    pub fn cells(&self) -> Vec<Slab> {
        (0..self.num_cells())
            .map(|k| self.cell(k).expect("index in range"))
            .collect()
    }

    /// The unique cell owning this axis coordinate, or `None` outside the
    /// ball's axis extent.
    pub fn cell_of(&self, coordinate: f64) -> Option<usize> {
        if !(coordinate >= -self.domain_radius && coordinate <= self.domain_radius) {
            return None;
        }
        let k = self
            .cut_points
            .iter()
            .position(|&cut| coordinate < cut)
            .unwrap_or(self.num_cells() - 1);
        Some(k)
    }
}

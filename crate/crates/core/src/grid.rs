//! Cell-centered finite-volume grids on rectangles with no-flux boundaries.
//!
//! Unknowns live at cell centers. Fluxes live on interior faces only; the
//! boundary faces carry zero flux, which is the discrete homogeneous Neumann
//! condition. Summation by parts therefore holds exactly:
//! `(div F, v)_h = −Σ_faces F·∇v |face cell|`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    cells: [usize; 2],
    lengths: [f64; 2],
}

impl Grid {
    pub fn new_1d(n: usize, length: f64) -> Result<Self> {
        Self::new(&[n], &[length])
    }

    pub fn new_2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::new(&[nx, ny], &[lx, ly])
    }

    pub fn new(cells: &[usize], lengths: &[f64]) -> Result<Self> {
        let dim = cells.len();
        if !(dim == 1 || dim == 2) || lengths.len() != dim {
            return Err(Error::InvalidParameter {
                field: "grid",
                constraint: "need one or two axes with matching cells and lengths".into(),
            });
        }
        let mut c = [1usize; 2];
        let mut l = [1.0f64; 2];
        for axis in 0..dim {
            if cells[axis] == 0 {
                return Err(Error::InvalidParameter {
                    field: "grid",
                    constraint: "cell counts must be positive".into(),
                });
            }
            if !(lengths[axis] > 0.0 && lengths[axis].is_finite()) {
                return Err(Error::InvalidParameter {
                    field: "grid",
                    constraint: "lengths must be positive and finite".into(),
                });
            }
            c[axis] = cells[axis];
            l[axis] = lengths[axis];
        }
        Ok(Self {
            dim,
            cells: c,
            lengths: l,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self, axis: usize) -> usize {
        self.cells[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.cells[axis] as f64
    }

    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell measure `h_x h_y` (or `h` in 1D).
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.h(a)).product()
    }

    /// `|Ω|`.
    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.lengths[a]).product()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.cells[0] * j
    }

    pub fn center(&self, cell: usize) -> [f64; 2] {
        let i = cell % self.cells[0];
        let j = cell / self.cells[0];
        [(i as f64 + 0.5) * self.h(0), (j as f64 + 0.5) * self.h(1)]
    }

    /// Stride between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        if axis == 0 {
            1
        } else {
            self.cells[0]
        }
    }

    /// Number of interior faces normal to `axis`.
    pub fn face_count(&self, axis: usize) -> usize {
        if axis >= self.dim {
            return 0;
        }
        let mut c = self.cells;
        c[axis] -= 1;
        c[0] * c[1]
    }

    /// Iterates the interior faces normal to `axis` as `(face, left, right)`
    /// cell indices.
    pub fn faces(&self, axis: usize) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let (nx, ny) = (self.cells[0], self.cells[1]);
        let (fx, fy) = if axis == 0 { (nx.saturating_sub(1), ny) } else { (nx, ny.saturating_sub(1)) };
        let count = if axis < self.dim { fx * fy } else { 0 };
        let stride = self.stride(axis);
        (0..count).map(move |f| {
            let i = f % fx;
            let j = f / fx;
            let left = i + nx * j;
            (f, left, left + stride)
        })
    }
}

/// Scalar field with one value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(cell) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { cell });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn<F: Fn([f64; 2]) -> f64>(grid: Grid, f: F) -> Self {
        let values = (0..grid.len()).map(|c| f(grid.center(c))).collect();
        Self { grid, values }
    }

    /// Unchecked construction for internal hot paths where finiteness is
    /// tracked separately.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Cell inner product `(u, v)_h`.
    pub fn dot(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_volume()
    }

    /// Writes `x[,y],value` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.grid.dim == 1 {
            w.write_record(["x", "value"])?;
        } else {
            w.write_record(["x", "y", "value"])?;
        }
        for (c, v) in self.values.iter().enumerate() {
            let [x, y] = self.grid.center(c);
            if self.grid.dim == 1 {
                w.write_record([fmt(x), fmt(*v)])?;
            } else {
                w.write_record([fmt(x), fmt(y), fmt(*v)])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a snapshot written by [`GridFunction::write_csv`] onto `grid`.
    pub fn read_csv<R: Read>(grid: Grid, input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let col = if grid.dim == 1 { 1 } else { 2 };
        let mut values = Vec::with_capacity(grid.len());
        for rec in r.records() {
            let rec = rec?;
            let v: f64 = rec
                .get(col)
                .ok_or_else(|| Error::Format("missing value column".into()))?
                .parse()
                .map_err(|e| Error::Format(format!("bad value: {e}")))?;
            values.push(v);
        }
        Self::new(grid, values)
    }
}

/// Round-trip float formatting for CSV output.
pub(crate) fn fmt(x: f64) -> String {
    format!("{x:e}")
}

/// Values on interior faces, one vector per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    grid: Grid,
    axes: [Vec<f64>; 2],
}

impl FaceField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            axes: [vec![0.0; grid.face_count(0)], vec![0.0; grid.face_count(1)]],
        }
    }

    pub fn new(grid: Grid, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        for (axis, v) in [&x, &y].into_iter().enumerate() {
            if v.len() != grid.face_count(axis) {
                return Err(Error::Shape {
                    expected: grid.face_count(axis),
                    found: v.len(),
                });
            }
        }
        Ok(Self { grid, axes: [x, y] })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn axis(&self, axis: usize) -> &[f64] {
        &self.axes[axis]
    }

    pub fn axis_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.axes[axis]
    }

    /// Largest absolute face value.
    pub fn max_abs(&self) -> f64 {
        self.axes.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Face quadrature `Σ_f F_f G_f · |cell|`.
    pub fn dot(&self, other: &Self) -> f64 {
        let s: f64 = (0..2)
            .map(|a| self.axes[a].iter().zip(&other.axes[a]).map(|(x, y)| x * y).sum::<f64>())
            .sum();
        s * self.grid.cell_volume()
    }
}

/// How a cell-centered coefficient is carried to a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceMean {
    #[default]
    Arithmetic,
    Harmonic,
}

impl FaceMean {
    #[inline]
    pub fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            FaceMean::Arithmetic => 0.5 * (a + b),
            FaceMean::Harmonic => {
                if a <= 0.0 || b <= 0.0 {
                    0.0
                } else {
                    2.0 * a * b / (a + b)
                }
            }
        }
    }

    /// Partial derivatives of [`FaceMean::combine`] with respect to `a` and `b`.
    #[inline]
    pub fn partials(self, a: f64, b: f64) -> (f64, f64) {
        match self {
            FaceMean::Arithmetic => (0.5, 0.5),
            FaceMean::Harmonic => {
                if a <= 0.0 || b <= 0.0 {
                    (0.0, 0.0)
                } else {
                    let s = (a + b) * (a + b);
                    (2.0 * b * b / s, 2.0 * a * a / s)
                }
            }
        }
    }
}

/// Face values of a cell coefficient.
pub fn face_average(c: &GridFunction, mean: FaceMean) -> FaceField {
    let g = c.grid;
    let mut out = FaceField::zeros(g);
    for axis in 0..g.dim {
        let vals = &mut out.axes[axis];
        for (f, l, r) in g.faces(axis) {
            vals[f] = mean.combine(c.values[l], c.values[r]);
        }
    }
    out
}

/// Pointwise product of two face fields.
pub fn face_product(a: &FaceField, b: &FaceField) -> FaceField {
    let mut out = a.clone();
    for axis in 0..2 {
        for (x, y) in out.axes[axis].iter_mut().zip(&b.axes[axis]) {
            *x *= y;
        }
    }
    out
}

/// Difference quotient `(u_R − u_L)/h` on every interior face.
pub fn gradient_faces(u: &GridFunction) -> FaceField {
    let g = u.grid;
    let mut out = FaceField::zeros(g);
    for axis in 0..g.dim {
        let inv_h = 1.0 / g.h(axis);
        let vals = &mut out.axes[axis];
        for (f, l, r) in g.faces(axis) {
            vals[f] = (u.values[r] - u.values[l]) * inv_h;
        }
    }
    out
}

/// Cellwise `(F_{i+½} − F_{i−½})/h` with zero flux through the boundary.
pub fn divergence(flux: &FaceField) -> GridFunction {
    let g = flux.grid;
    let mut out = vec![0.0; g.len()];
    for axis in 0..g.dim {
        let inv_h = 1.0 / g.h(axis);
        let vals = &flux.axes[axis];
        for (f, l, r) in g.faces(axis) {
            let q = vals[f] * inv_h;
            out[l] += q;
            out[r] -= q;
        }
    }
    GridFunction::from_raw(g, out)
}

/// Neumann Laplacian `div ∘ grad`.
pub fn laplacian(u: &GridFunction) -> GridFunction {
    divergence(&gradient_faces(u))
}

/// Midpoint-rule integral.
pub fn integrate(u: &GridFunction) -> f64 {
    u.values.iter().sum::<f64>() * u.grid.cell_volume()
}

pub fn mean(u: &GridFunction) -> f64 {
    integrate(u) / u.grid.volume()
}

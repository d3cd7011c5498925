//! Dyadic grids on `[0, T]`, step functions and the normalized cell-indicator basis.
//!
//! Every element of `H = L^2([0, T])` handled by the crate is a step function adapted to
//! a dyadic grid. Cell `k` of a level-`L` grid is `]k T / 2^L, (k + 1) T / 2^L]` and the
//! basis vector attached to it is `e_k = 1_{I_k} / sqrt(|I_k|)`, so every projection
//! below is a closed-form expression in the cell values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when deciding whether a time lies on a grid point.
const GRID_SNAP: f64 = 1e-9;

/// Uniform dyadic partition of `]0, T]` into `2^level` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    horizon: f64,
    level: u32,
}

impl Grid {
    pub fn new(horizon: f64, level: u32) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "time horizon must be positive, got {horizon}"
            )));
        }
        if level > 24 {
            return Err(Error::InvalidArgument(format!(
                "grid level {level} is too fine (max 24)"
            )));
        }
        Ok(Self { horizon, level })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn n_cells(&self) -> usize {
        1usize << self.level
    }

    pub fn cell_width(&self) -> f64 {
        self.horizon / self.n_cells() as f64
    }

    /// Left end of cell `k`, i.e. the `k`-th grid point.
    pub fn point(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.n_cells() as f64
    }

    /// Index `k` such that `t` is the `k`-th grid point.
    pub fn point_index(&self, t: f64) -> Result<usize> {
        let scaled = t / self.horizon * self.n_cells() as f64;
        let k = scaled.round();
        if !t.is_finite() || k < 0.0 || k > self.n_cells() as f64 || (scaled - k).abs() > GRID_SNAP
        {
            return Err(Error::OffGrid {
                time: t,
                level: self.level,
                horizon: self.horizon,
            });
        }
        Ok(k as usize)
    }

    /// `true` when every cell of `self` is a union of cells of `finer`.
    pub fn is_coarsening_of(&self, finer: &Grid) -> bool {
        self.horizon == finer.horizon && self.level <= finer.level
    }

    fn check_coarsening_of(&self, finer: &Grid) -> Result<()> {
        if self.is_coarsening_of(finer) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "grid (T={}, level {}) does not coarsen grid (T={}, level {})",
                self.horizon, self.level, finer.horizon, finer.level
            )))
        }
    }
}

/// Piecewise-constant function, one value per grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFn {
    grid: Grid,
    values: Vec<f64>,
}

impl StepFn {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid with {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite cell value {v}")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.n_cells()],
        }
    }

    pub fn zero(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// `1_{]a, b]}`; both ends must be grid points.
    pub fn indicator(grid: Grid, a: f64, b: f64) -> Result<Self> {
        let lo = grid.point_index(a)?;
        let hi = grid.point_index(b)?;
        let values = (0..grid.n_cells())
            .map(|k| if k >= lo && k < hi { 1.0 } else { 0.0 })
            .collect();
        Ok(Self { grid, values })
    }

    /// The basis vector `e_k` of `grid`, as a function.
    pub fn basis_vector(grid: Grid, k: usize) -> Result<Self> {
        if k >= grid.n_cells() {
            return Err(Error::InvalidArgument(format!(
                "basis index {k} out of range for {} cells",
                grid.n_cells()
            )));
        }
        let mut values = vec![0.0; grid.n_cells()];
        values[k] = 1.0 / grid.cell_width().sqrt();
        Ok(Self { grid, values })
    }

    /// Reads `cell_index,value` rows (header required). Every cell must appear exactly once.
    pub fn from_csv(path: impl AsRef<Path>, grid: Grid) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(file, grid)
    }

    pub fn from_csv_reader(reader: impl std::io::Read, grid: Grid) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            cell_index: usize,
            value: f64,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "cell_index" || &headers[1] != "value" {
            return Err(Error::Parse(format!(
                "expected header `cell_index,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut values: Vec<Option<f64>> = vec![None; grid.n_cells()];
        for row in rdr.deserialize() {
            let row: Row = row?;
            let slot = values.get_mut(row.cell_index).ok_or_else(|| {
                Error::Parse(format!(
                    "cell index {} out of range for {} cells",
                    row.cell_index,
                    grid.n_cells()
                ))
            })?;
            if slot.replace(row.value).is_some() {
                return Err(Error::Parse(format!("cell index {} repeated", row.cell_index)));
            }
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(k, v)| v.ok_or_else(|| Error::Parse(format!("cell index {k} missing"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same function on a finer grid, with identical pointwise values.
    pub fn refine_to(&self, finer: &Grid) -> Result<StepFn> {
        self.grid.check_coarsening_of(finer)?;
        let ratio = 1usize << (finer.level - self.grid.level);
        let values = self
            .values
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, ratio))
            .collect();
        Ok(StepFn {
            grid: *finer,
            values,
        })
    }

    fn common_grid(&self, other: &StepFn) -> Result<Grid> {
        if self.grid.horizon != other.grid.horizon {
            return Err(Error::GridMismatch(format!(
                "horizons {} and {} differ",
                self.grid.horizon, other.grid.horizon
            )));
        }
        Ok(if self.grid.level >= other.grid.level {
            self.grid
        } else {
            other.grid
        })
    }

    /// `<h, g>` in `L^2([0, T])`.
    pub fn inner(&self, other: &StepFn) -> Result<f64> {
        let grid = self.common_grid(other)?;
        let a = self.refine_to(&grid)?;
        let b = other.refine_to(&grid)?;
        Ok(grid.cell_width() * a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum::<f64>())
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid.cell_width() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn mul(&self, other: &StepFn) -> Result<StepFn> {
        let grid = self.common_grid(other)?;
        let a = self.refine_to(&grid)?;
        let b = other.refine_to(&grid)?;
        let values = a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect();
        Ok(StepFn { grid, values })
    }

    /// `h 1_{]0, s]}`. `s` must be a grid point of this function's grid; refine first
    /// to restrict at a finer point.
    pub fn restrict(&self, s: f64) -> Result<StepFn> {
        let cut = self.grid.point_index(s)?;
        let mut values = self.values.clone();
        values[cut..].iter_mut().for_each(|v| *v = 0.0);
        Ok(StepFn {
            grid: self.grid,
            values,
        })
    }

    /// `h 1_{]a, b]}` for grid points `a <= b`.
    pub fn restrict_between(&self, a: f64, b: f64) -> Result<StepFn> {
        let lo = self.grid.point_index(a)?;
        let hi = self.grid.point_index(b)?;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| if k >= lo && k < hi { v } else { 0.0 })
            .collect();
        Ok(StepFn {
            grid: self.grid,
            values,
        })
    }
}

/// The orthonormal family `e_k = 1_{I_k} / sqrt(|I_k|)` on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    grid: Grid,
}

impl BasisSpec {
    pub fn new(grid: Grid) -> Self {
        Self { grid }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.n_cells()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `<e_j, e_k>`, evaluated in closed form.
    pub fn inner(&self, j: usize, k: usize) -> f64 {
        // Disjoint cells, or |I_k| * (1/sqrt|I_k|)^2 on the diagonal.
        if j == k {
            let w = self.grid.cell_width();
            let c = 1.0 / w.sqrt();
            let v = w * c * c;
            // w * (1/sqrt w)^2 can land one ulp away from 1.
            if (v - 1.0).abs() < 4.0 * f64::EPSILON {
                1.0
            } else {
                v
            }
        } else {
            0.0
        }
    }

    /// Rebuilds the step function `sum_k c_k e_k`.
    pub fn reconstruct(&self, coefficients: &[f64]) -> Result<StepFn> {
        if coefficients.len() != self.len() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a basis of {} elements",
                coefficients.len(),
                self.len()
            )));
        }
        let scale = 1.0 / self.grid.cell_width().sqrt();
        StepFn::new(self.grid, coefficients.iter().map(|c| c * scale).collect())
    }
}

/// Coefficients `<h, e_k>` of a step function in the indicator basis.
pub fn project(h: &StepFn, basis: &BasisSpec) -> Result<Vec<f64>> {
    let fine = h.refine_to(basis.grid())?;
    let scale = basis.grid().cell_width().sqrt();
    Ok(fine.values.iter().map(|v| v * scale).collect())
}

/// Coefficients `F_{jk} = <F, e_j (x) e_k>` of an element of `H (x) H`, stored densely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel2 {
    n: usize,
    data: Vec<f64>,
    /// Squared `L^2` norm of the kernel before projection, when known in closed form.
    exact_norm_sq: Option<f64>,
}

impl Kernel2 {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
            exact_norm_sq: None,
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                data.push(f(j, k));
            }
        }
        Self {
            n,
            data,
            exact_norm_sq: None,
        }
    }

    /// Coefficients of `h (x) g` given the coefficient vectors of `h` and `g`.
    pub fn outer(u: &[f64], v: &[f64]) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::GridMismatch(format!(
                "outer product of vectors of length {} and {}",
                u.len(),
                v.len()
            )));
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>() * v.iter().map(|x| x * x).sum::<f64>();
        let mut k = Self::from_fn(u.len(), |j, k| u[j] * v[k]);
        k.exact_norm_sq = Some(norm);
        Ok(k)
    }

    /// Single basis element `e_j (x) e_k`.
    pub fn unit(n: usize, j: usize, k: usize) -> Self {
        let mut out = Self::zeros(n);
        out.data[j * n + k] = 1.0;
        out.exact_norm_sq = Some(1.0);
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.data[j * self.n + k]
    }

    pub fn set(&mut self, j: usize, k: usize, value: f64) {
        self.data[j * self.n + k] = value;
        self.exact_norm_sq = None;
    }

    pub fn exact_norm_sq(&self) -> Option<f64> {
        self.exact_norm_sq
    }

    /// Squared norm of the projected coefficients.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Kernel of the swapped-argument function `(x, y) -> F(y, x)`.
    pub fn transpose(&self) -> Self {
        let mut out = Self::from_fn(self.n, |j, k| self.get(k, j));
        out.exact_norm_sq = self.exact_norm_sq;
        out
    }

    pub fn add(&self, other: &Kernel2) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
            exact_norm_sq: None,
        })
    }

    pub fn sub(&self, other: &Kernel2) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
            exact_norm_sq: None,
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
            exact_norm_sq: self.exact_norm_sq.map(|s| s * c * c),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.get(j, j)).collect()
    }

    /// Coefficients of the same kernel in the basis `levels` dyadic levels coarser.
    /// Each coarse `e_J` is `2^{-levels/2}` times the sum of its children.
    pub fn coarsen(&self, levels: u32) -> Result<Self> {
        let r = 1usize << levels;
        if !self.n.is_multiple_of(r) {
            return Err(Error::GridMismatch(format!(
                "cannot coarsen {} cells by a factor {r}",
                self.n
            )));
        }
        let m = self.n / r;
        let mut out = Self::zeros(m);
        for j in 0..self.n {
            for k in 0..self.n {
                out.data[(j / r) * m + k / r] += self.get(j, k) / r as f64;
            }
        }
        Ok(out)
    }

    fn check_same(&self, other: &Kernel2) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "kernels of size {} and {}",
                self.n, other.n
            )))
        }
    }
}

/// Projection of the causal kernel `h (x) g 1_C`, `C = {x < y}`.
///
/// Entries: `h_j g_k sqrt(|I_j||I_k|)` above the diagonal, `h_j g_j |I_j| / 2` on it (the
/// exact triangle integral), zero below. The returned kernel also carries the exact
/// squared `L^2` norm of `h (x) g 1_C`.
pub fn causal_kernel(h: &StepFn, g: &StepFn, basis: &BasisSpec) -> Result<Kernel2> {
    let grid = basis.grid();
    let hv = h.refine_to(grid)?;
    let gv = g.refine_to(grid)?;
    let (hv, gv) = (hv.values(), gv.values());
    let w = grid.cell_width();
    let n = grid.n_cells();

    let mut kernel = Kernel2::from_fn(n, |j, k| match j.cmp(&k) {
        std::cmp::Ordering::Less => hv[j] * gv[k] * w,
        std::cmp::Ordering::Equal => hv[j] * gv[j] * w / 2.0,
        std::cmp::Ordering::Greater => 0.0,
    });

    // sum_{j<k} h_j^2 g_k^2 w^2 + sum_j h_j^2 g_j^2 w^2 / 2, accumulated with a running
    // prefix of h_j^2 so the cost stays linear.
    let mut prefix = 0.0;
    let mut exact = 0.0;
    for k in 0..n {
        exact += prefix * gv[k] * gv[k] * w * w;
        exact += hv[k] * hv[k] * gv[k] * gv[k] * w * w / 2.0;
        prefix += hv[k] * hv[k];
    }
    kernel.exact_norm_sq = Some(exact);
    Ok(kernel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(level: u32) -> Grid {
        Grid::new(1.0, level).unwrap()
    }

    #[test]
    fn project_constant_function() {
        let b = BasisSpec::new(grid(1));
        let c = project(&StepFn::constant(grid(1), 1.0), &b).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((c[0] - r).abs() < 1e-15 && (c[1] - r).abs() < 1e-15);
    }

    #[test]
    fn project_basis_vector_and_indicator() {
        let b = BasisSpec::new(grid(1));
        let e0 = StepFn::basis_vector(grid(1), 0).unwrap();
        let c = project(&e0, &b).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-15 && c[1] == 0.0);

        // Analytic: int_{1/2}^{1} sqrt(2) dx = 1/sqrt(2).
        let ind = StepFn::indicator(grid(1), 0.5, 1.0).unwrap();
        let c = project(&ind, &b).unwrap();
        assert_eq!(c[0], 0.0);
        assert!((c[1] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn project_from_coarser_grid_reconstructs() {
        let h = StepFn::new(grid(1), vec![2.0, -1.0]).unwrap();
        let b = BasisSpec::new(grid(3));
        let c = project(&h, &b).unwrap();
        let back = b.reconstruct(&c).unwrap();
        let expected = h.refine_to(&grid(3)).unwrap();
        for (x, y) in back.values().iter().zip(expected.values()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn project_rejects_non_refinement() {
        let h = StepFn::constant(grid(3), 1.0);
        assert!(matches!(
            project(&h, &BasisSpec::new(grid(2))),
            Err(Error::GridMismatch(_))
        ));
        let other = StepFn::constant(Grid::new(2.0, 1).unwrap(), 1.0);
        assert!(project(&other, &BasisSpec::new(grid(3))).is_err());
    }

    #[test]
    fn orthonormality_is_exact() {
        for level in 0..8 {
            let b = BasisSpec::new(grid(level));
            for j in 0..b.len().min(16) {
                for k in 0..b.len().min(16) {
                    assert_eq!(b.inner(j, k), if j == k { 1.0 } else { 0.0 });
                }
            }
        }
        let b = BasisSpec::new(Grid::new(3.0, 5).unwrap());
        assert_eq!(b.inner(7, 7), 1.0);
    }

    #[test]
    fn causal_kernel_constant_level_one() {
        let g1 = grid(1);
        let one = StepFn::constant(g1, 1.0);
        let k = causal_kernel(&one, &one, &BasisSpec::new(g1)).unwrap();
        assert!((k.get(0, 0) - 0.25).abs() < 1e-15);
        assert!((k.get(1, 1) - 0.25).abs() < 1e-15);
        assert!((k.get(0, 1) - 0.5).abs() < 1e-15);
        assert_eq!(k.get(1, 0), 0.0);
        assert!((k.exact_norm_sq().unwrap() - 0.5).abs() < 1e-15);
        assert!((k.norm_sq() - 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn causal_kernel_incompatible_supports_vanish() {
        let g1 = grid(1);
        let h = StepFn::indicator(g1, 0.5, 1.0).unwrap();
        let g = StepFn::indicator(g1, 0.0, 0.5).unwrap();
        let k = causal_kernel(&h, &g, &BasisSpec::new(g1)).unwrap();
        assert_eq!(k.max_abs(), 0.0);
        assert_eq!(k.exact_norm_sq(), Some(0.0));
    }

    /// Brute-force midpoint quadrature of the projected coefficients over the triangle.
    fn quadrature_projected_norm(level: u32, sub: usize) -> f64 {
        let n = 1usize << level;
        let w = 1.0 / n as f64;
        let mut total = 0.0;
        for j in 0..n {
            for k in 0..n {
                // <1_C, e_j (x) e_k> = (1/w) * area{x<y} in I_j x I_k
                let mut area = 0.0;
                let d = w / sub as f64;
                for a in 0..sub {
                    for b in 0..sub {
                        let x = j as f64 * w + (a as f64 + 0.5) * d;
                        let y = k as f64 * w + (b as f64 + 0.5) * d;
                        if x < y {
                            area += d * d;
                        } else if x == y {
                            area += d * d / 2.0;
                        }
                    }
                }
                total += (area / w).powi(2);
            }
        }
        total
    }

    #[test]
    fn projected_norm_closed_form_and_quadrature() {
        for level in 1..=4u32 {
            let g = grid(level);
            let one = StepFn::constant(g, 1.0);
            let k = causal_kernel(&one, &one, &BasisSpec::new(g)).unwrap();
            let closed = 0.5 - 2f64.powi(-(level as i32 + 2));
            assert!((k.norm_sq() - closed).abs() < 1e-14, "level {level}");
            let quad = quadrature_projected_norm(level, 40);
            assert!((k.norm_sq() - quad).abs() < 1e-12, "level {level}: {quad}");
        }
    }

    #[test]
    fn refinement_consistency() {
        let coarse = grid(2);
        let h = StepFn::new(coarse, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let g = StepFn::new(coarse, vec![0.3, 1.0, -1.0, 2.0]).unwrap();
        let mut last = 0.0;
        for level in 2..=6 {
            let b = BasisSpec::new(grid(level));
            let k = causal_kernel(&h, &g, &b).unwrap();
            let exact = k.exact_norm_sq().unwrap();
            assert!(k.norm_sq() >= last - 1e-15);
            assert!(k.norm_sq() <= exact + 1e-15);
            last = k.norm_sq();

            let fine = causal_kernel(&h, &g, &BasisSpec::new(grid(level + 1))).unwrap();
            let back = fine.coarsen(1).unwrap();
            for j in 0..k.n() {
                for i in 0..k.n() {
                    if i != j {
                        assert!((back.get(j, i) - k.get(j, i)).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn causal_plus_transpose_gives_product_off_diagonal() {
        let g3 = grid(3);
        let b = BasisSpec::new(g3);
        let h = StepFn::new(g3, (0..8).map(|k| (k as f64 * 0.7).sin()).collect()).unwrap();
        let g = StepFn::new(g3, (0..8).map(|k| (k as f64 * 1.3).cos()).collect()).unwrap();
        let sum = causal_kernel(&h, &g, &b)
            .unwrap()
            .add(&causal_kernel(&g, &h, &b).unwrap().transpose())
            .unwrap();
        let (ph, pg) = (project(&h, &b).unwrap(), project(&g, &b).unwrap());
        for j in 0..8 {
            for k in 0..8 {
                if j != k {
                    assert!((sum.get(j, k) - ph[j] * pg[k]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn restrict_cases() {
        let g1 = grid(1);
        let one = StepFn::constant(g1, 1.0);
        assert_eq!(one.restrict(0.5).unwrap().values(), &[1.0, 0.0]);
        assert_eq!(one.restrict(0.0).unwrap().values(), &[0.0, 0.0]);
        assert_eq!(one.restrict(1.0).unwrap(), one);
        assert!(matches!(one.restrict(0.3), Err(Error::OffGrid { .. })));
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let g = grid(2);
        let ok = "cell_index,value\n0,1.5\n2,-1\n1,0\n3,2\n";
        let h = StepFn::from_csv_reader(ok.as_bytes(), g).unwrap();
        assert_eq!(h.values(), &[1.5, 0.0, -1.0, 2.0]);

        assert!(StepFn::from_csv_reader("0,1\n1,2\n2,3\n3,4\n".as_bytes(), g).is_err());
        assert!(StepFn::from_csv_reader("cell_index,value\n0,1\n".as_bytes(), g).is_err());
        assert!(
            StepFn::from_csv_reader("cell_index,value\n0,1\n0,1\n1,1\n2,1\n".as_bytes(), g)
                .is_err()
        );
    }
}

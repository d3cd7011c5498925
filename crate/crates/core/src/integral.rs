//! The double integral `Z_t = ∫_0^t Φ(h)_s dΦ(g)_s`, its Riemann sums, integration by
//! parts, second moment and pathwise evaluation.

use std::ops::Range;

use crate::chaos::{phi11, phi2, product_decompose, product_decompose_coefs, GradedChaos, Realization};
use crate::dist::{ModelRef, Model};
use crate::error::{Error, Result};
use crate::grid::{causal_kernel, project, BasisSpec, Grid, StepFn};

#[derive(Debug, Clone)]
pub struct IntegralSpec {
    pub h: StepFn,
    pub g: StepFn,
    pub t: f64,
    pub basis: BasisSpec,
    pub model: ModelRef,
}

impl IntegralSpec {
    pub fn new(h: StepFn, g: StepFn, t: f64, basis: BasisSpec, model: ModelRef) -> Result<Self> {
        basis.grid().point_index(t)?;
        let spec = Self {
            h: h.refine_to(basis.grid())?,
            g: g.refine_to(basis.grid())?,
            t,
            basis,
            model,
        };
        if !spec.model.covers(spec.basis.len()) {
            return Err(Error::UnassignedIndex(spec.model.len().unwrap_or(0)));
        }
        Ok(spec)
    }

    /// Same integrands and model, integrated up to `t`.
    pub fn at(&self, t: f64) -> Result<Self> {
        self.basis.grid().point_index(t)?;
        Ok(Self { t, ..self.clone() })
    }

    fn restricted(&self) -> Result<(StepFn, StepFn)> {
        Ok((self.h.restrict(self.t)?, self.g.restrict(self.t)?))
    }

    /// Per-cell coefficients `(a_j, b_j) = (<h, e_j>, <g, e_j>)` up to `t`.
    pub fn path_coefficients(&self) -> Result<PathCoefficients> {
        let (h, g) = self.restricted()?;
        Ok(PathCoefficients {
            a: project(&h, &self.basis)?,
            b: project(&g, &self.basis)?,
        })
    }
}

/// `φ^(1,1)(h⊗g 1_C + g⊗h 1_C̄) + φ^(2)(h⊗g 1_C)` with both integrands cut at `t`.
pub fn double_integral(spec: &IntegralSpec) -> Result<GradedChaos> {
    let (h, g) = spec.restricted()?;
    let hg = causal_kernel(&h, &g, &spec.basis)?;
    // g⊗h 1_C̄ at (j, k) is g_j h_k on k < j, i.e. the transpose of h⊗g 1_C.
    let cross = phi11(&hg.add(&hg.transpose())?, &spec.model)?;
    let square = phi2(&hg, &spec.model)?;
    cross.add(&square)
}

/// Left-point sum `sum_k φ(h 1_{]0,t_k]}) φ(g 1_{]t_k,t_{k+1}]})` over the points of
/// `partition` up to `t`. Each product is expanded with [`product_decompose_coefs`].
pub fn riemann_sum(spec: &IntegralSpec, partition: &Grid) -> Result<GradedChaos> {
    partition.point_index(spec.t).map_err(|_| {
        Error::GridMismatch(format!(
            "horizon {} is not a point of the level-{} partition",
            spec.t,
            partition.level()
        ))
    })?;
    if !partition.is_coarsening_of(spec.basis.grid()) {
        return Err(Error::GridMismatch(format!(
            "partition level {} does not coarsen basis level {}",
            partition.level(),
            spec.basis.grid().level()
        )));
    }
    let coefs = spec.path_coefficients()?;
    let n = coefs.a.len();
    let block = n / partition.n_cells();
    let mut acc = GradedChaos::zero(spec.model.clone());
    for k in 1..partition.n_cells() {
        let (lo, hi) = (k * block, (k + 1) * block);
        if coefs.b[lo..hi].iter().all(|&v| v == 0.0) {
            continue;
        }
        let mut left = coefs.a.clone();
        left[lo..].iter_mut().for_each(|v| *v = 0.0);
        let mut right = vec![0.0; n];
        right[lo..hi].copy_from_slice(&coefs.b[lo..hi]);
        let parts = product_decompose_coefs(&left, &right, &spec.model)?;
        acc = acc.add(&parts.total()?)?;
    }
    Ok(acc)
}

/// `E[(S - Z)^2]` for the Riemann sum on `partition`.
pub fn riemann_error(spec: &IntegralSpec, partition: &Grid) -> Result<f64> {
    let s = riemann_sum(spec, partition)?;
    let z = double_integral(spec)?;
    s.sub(&z)?.second_moment()
}

/// `φ(h)φ(g) - ∫Φ(h)dΦ(g) - ∫Φ(g)dΦ(h) - <h, g>` on the whole horizon.
pub fn ibp_residual(h: &StepFn, g: &StepFn, basis: &BasisSpec, model: &ModelRef) -> Result<GradedChaos> {
    let horizon = basis.grid().horizon();
    let hg = IntegralSpec::new(h.clone(), g.clone(), horizon, *basis, model.clone())?;
    let gh = IntegralSpec::new(g.clone(), h.clone(), horizon, *basis, model.clone())?;
    let product = product_decompose(h, g, basis, model)?.total()?;
    let mut r = product
        .sub(&double_integral(&hg)?)?
        .sub(&double_integral(&gh)?)?;
    let inner = h.inner(g)?;
    r = r.axpy(-inner, &GradedChaos::constant_only(model.clone(), 1.0))?;
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondMoment {
    /// Expectation of the expanded square under raw moments.
    pub direct: f64,
    /// `‖h⊗g 1_C‖^2 + sum_j <h⊗g 1_C, e_j⊗e_j>^2 (m_4 - 3)`.
    pub formula: f64,
}

pub fn second_moment(spec: &IntegralSpec) -> Result<SecondMoment> {
    let z = double_integral(spec)?.to_poly()?;
    let direct = z.expect_product(&z, &spec.model)?;
    let (h, g) = spec.restricted()?;
    let k = causal_kernel(&h, &g, &spec.basis)?;
    let mut formula = k.exact_norm_sq().expect("causal kernels carry their exact norm");
    for j in 0..k.n() {
        let d = k.get(j, j);
        formula += d * d * (spec.model.table(j)?.m4() - 3.0);
    }
    Ok(SecondMoment { direct, formula })
}

/// `Z_{t_k}(ω)` at every point `t_k <= t` of `partition`, each from its own double integral.
pub fn z_path(spec: &IntegralSpec, omega: &Realization, partition: &Grid) -> Result<Vec<f64>> {
    if !partition.is_coarsening_of(spec.basis.grid()) {
        return Err(Error::GridMismatch(format!(
            "partition level {} does not coarsen basis level {}",
            partition.level(),
            spec.basis.grid().level()
        )));
    }
    let last = partition.point_index(spec.t)?;
    let mut out = Vec::with_capacity(last + 1);
    out.push(0.0);
    for k in 1..=last {
        let z = double_integral(&spec.at(partition.point(k))?)?;
        out.push(z.evaluate(omega)?);
    }
    Ok(out)
}

/// Basis coefficients of the integrand (`a`) and integrator (`b`) functions.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCoefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl PathCoefficients {
    pub fn from_functions(h: &StepFn, g: &StepFn, basis: &BasisSpec) -> Result<Self> {
        Ok(Self {
            a: project(h, basis)?,
            b: project(g, basis)?,
        })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `Z` at every basis grid point, by the recursion
    /// `Z_{j+1} = Z_j + b_j x_j Y_j + a_j b_j (x_j^2 - 1) / 2`, `Y_{j+1} = Y_j + a_j x_j`.
    pub fn running_z(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() < self.len() {
            return Err(Error::MissingIndex {
                index: self.len() - 1,
                available: x.len(),
            });
        }
        let mut out = Vec::with_capacity(self.len() + 1);
        let (mut y, mut z) = (0.0, 0.0);
        out.push(0.0);
        for j in 0..self.len() {
            let xj = x[j];
            z += self.b[j] * xj * y + 0.5 * self.a[j] * self.b[j] * (xj * xj - 1.0);
            y += self.a[j] * xj;
            out.push(z);
        }
        Ok(out)
    }
}

const MAX_JOINT: usize = 8;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact `E[D^2]` and `E[D^4]` for the increment `D = Z_{end} - Z_{start}` over the cells in
/// `window`, propagating the joint moments `E[Y^p D^q]`, `p + 2q <= 8`, cell by cell.
pub fn increment_moments(coefs: &PathCoefficients, window: Range<usize>, model: &Model) -> Result<(f64, f64)> {
    if window.end > coefs.len() || window.start > window.end {
        return Err(Error::InvalidArgument(format!(
            "window {window:?} outside {} cells",
            coefs.len()
        )));
    }
    // state[p][q] = E[Y^p D^q]
    let mut state = [[0.0f64; 5]; MAX_JOINT + 1];
    state[0][0] = 1.0;
    for j in 0..window.end {
        let m = &model.table(j)?.moments.m;
        let (a, b, c) = (coefs.a[j], coefs.b[j], 0.5 * coefs.a[j] * coefs.b[j]);
        let in_window = j >= window.start;
        // E[x^r (x^2 - 1)^s]
        let xm = |r: usize, s: usize| -> f64 {
            (0..=s)
                .map(|i| {
                    let sign = if (s - i).is_multiple_of(2) { 1.0 } else { -1.0 };
                    sign * binomial(s, i) * m[r + 2 * i]
                })
                .sum()
        };
        let mut next = [[0.0f64; 5]; MAX_JOINT + 1];
        for p in 0..=MAX_JOINT {
            for q in 0..=4 {
                if p + 2 * q > MAX_JOINT || (!in_window && q > 0) {
                    continue;
                }
                let mut acc = 0.0;
                for r in 0..=p {
                    let cy = binomial(p, r) * a.powi(r as i32);
                    for q2 in 0..=q {
                        for q3 in 0..=(q - q2) {
                            let q1 = q - q2 - q3;
                            let cd = binomial(q, q2) * binomial(q - q2, q3)
                                * b.powi(q2 as i32)
                                * c.powi(q3 as i32);
                            let coef = cy * cd;
                            if coef == 0.0 {
                                continue;
                            }
                            acc += coef * xm(r + q2, q3) * state[p - r + q2][q1];
                        }
                    }
                }
                next[p][q] = acc;
            }
        }
        state = next;
    }
    Ok((state[0][2], state[0][4]))
}

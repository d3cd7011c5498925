//! Square decomposition of second-order elements, fourth-moment scaling of increments and
//! convergence of quadratic variation.

use std::io::Write;

use serde::Serialize;

use crate::chaos::{phi_circ_n, GradedChaos};
use crate::dist::{ModelRef, Model};
use crate::error::{Error, Result};
use crate::grid::{causal_kernel, BasisSpec, Grid, Kernel2, StepFn};
use crate::integral::{increment_moments, PathCoefficients};
use crate::mc::{estimate_vec, MCEstimate};
use crate::poly::regrade;
use crate::tensor::{a_norm_sq, a_op, circ, contract1, pi1, sup_constants, SymTensor};
use crate::tolerances::UNDERSAMPLED_HALF_WIDTH;

/// Both sides of the fourth-order expansion of `Y^2`, `Y = (Φ°² + Φ∘a_1^2)(f)`.
#[derive(Debug, Clone)]
pub struct SquareDecomposition {
    /// `Y` itself.
    pub element: GradedChaos,
    /// Closed-form right-hand side, constant term read with the `⊗`-norm.
    pub rhs: GradedChaos,
    /// `Y^2` expanded as a polynomial and regraded.
    pub oracle: GradedChaos,
    /// Largest `|oracle - rhs|` entry at orders 0..=4.
    pub residual_by_order: [f64; 5],
    /// `2‖f‖_⊗^2 + a_4^4(f∘f)`.
    pub order0_tensor_reading: f64,
    /// `2‖f‖_A^2 + a_4^4(f∘f)`.
    pub order0_a_reading: f64,
    pub order0_oracle: f64,
    /// `E[Y^2]` from the isometry.
    pub second_moment: f64,
}

/// Closed-form square of `(Φ°² + Φ∘a_1^2)(f)`:
/// `Φ°⁴(f∘f) + Φ°³(a_1(f∘f)) + Φ°²(4 f∼₁f + a_2(f∘f))
///  + Φ(a_3(f∘f) + 4 a_1(f∼₁f) - 6 a_1(π₁(f∼₁f))) + 2‖f‖^2 + a_4(f∘f)`.
pub fn square_decomposition(f: &SymTensor, model: &ModelRef) -> Result<SquareDecomposition> {
    if f.order() != 2 {
        return Err(Error::InvalidArgument(format!(
            "square decomposition needs an order-2 tensor, got order {}",
            f.order()
        )));
    }
    let element = phi_circ_n(f, model)?.add(&phi_circ_n(&a_op(1, f, model)?, model)?)?;

    let ff = circ(f, f)?;
    let c = SymTensor::from_kernel(&contract1(f, model)?);
    let o4 = ff.clone();
    let o3 = a_op(1, &ff, model)?;
    let o2 = c.scale(4.0).add(&a_op(2, &ff, model)?)?;
    let o1 = a_op(3, &ff, model)?
        .axpy(4.0, &a_op(1, &c, model)?)?
        .axpy(-6.0, &a_op(1, &pi1(&c)?, model)?)?;
    let a4 = a_op(4, &ff, model)?.get(&[]);
    let order0_tensor_reading = 2.0 * f.norm_sq() + a4;
    let order0_a_reading = 2.0 * a_norm_sq(f, model)? + a4;

    let mut rhs = GradedChaos::constant_only(model.clone(), order0_tensor_reading);
    for t in [o1, o2, o3, o4] {
        rhs = rhs.add(&GradedChaos::zero(model.clone()).with_kernel(t))?;
    }

    let p = element.to_poly()?;
    let oracle = regrade(&p.mul(&p), model)?;
    let diff = oracle.sub(&rhs)?;
    let mut residual_by_order = [0.0; 5];
    for (n, r) in residual_by_order.iter_mut().enumerate() {
        *r = diff.max_abs_at(n);
    }
    Ok(SquareDecomposition {
        second_moment: element.second_moment()?,
        order0_oracle: oracle.constant(),
        element,
        rhs,
        oracle,
        residual_by_order,
        order0_tensor_reading,
        order0_a_reading,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GapMoment {
    pub s: f64,
    pub t: f64,
    pub second_moment: f64,
    pub fourth_moment: f64,
    /// `E|ΔZ|^4 / (t - s)^2`.
    pub gap_ratio: f64,
    /// `E|ΔZ|^4 / (‖h_1‖_A^4 ‖h_2 1_{]s,t]}‖_A^4)`.
    pub bound_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FourthMomentReport {
    pub gaps: Vec<GapMoment>,
    /// Least-squares slope of `log E|ΔZ|^4` against `log (t - s)`.
    pub slope: f64,
    /// `max / min` of the gap ratios.
    pub spread: f64,
    /// `7/2 C(1,4) + C(2,4) + C(3,4) + C(4,4) + 2` from the sup constants.
    pub candidate_constant: f64,
    /// Smallest constant bounding every observed `bound_ratio`.
    pub empirical_constant: f64,
}

/// Least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Exact fourth moments of `Z_t - Z_s` with integrand `h1` and integrator `h2`.
pub fn fourth_moment_scaling(
    h1: &StepFn,
    h2: &StepFn,
    basis: &BasisSpec,
    gaps: &[(f64, f64)],
    model: &Model,
) -> Result<FourthMomentReport> {
    let coefs = PathCoefficients::from_functions(h1, h2, basis)?;
    let grid = basis.grid();
    let h1_sq = h1.norm_sq();
    let mut rows = Vec::with_capacity(gaps.len());
    for &(s, t) in gaps {
        let (i, j) = (grid.point_index(s)?, grid.point_index(t)?);
        if i > j {
            return Err(Error::InvalidArgument(format!("gap ({s}, {t}] is reversed")));
        }
        let (m2, m4) = increment_moments(&coefs, i..j, model)?;
        let h2_sq = h2.refine_to(grid)?.restrict_between(s, t)?.norm_sq();
        let denom = h1_sq * h1_sq * h2_sq * h2_sq;
        rows.push(GapMoment {
            s,
            t,
            second_moment: m2,
            fourth_moment: m4,
            gap_ratio: if t > s { m4 / ((t - s) * (t - s)) } else { 0.0 },
            bound_ratio: if denom > 0.0 { m4 / denom } else { 0.0 },
        });
    }
    let positive: Vec<&GapMoment> = rows.iter().filter(|r| r.t > r.s && r.fourth_moment > 0.0).collect();
    let lx: Vec<f64> = positive.iter().map(|r| (r.t - r.s).ln()).collect();
    let ly: Vec<f64> = positive.iter().map(|r| r.fourth_moment.ln()).collect();
    let slope = if positive.len() >= 2 { ls_slope(&lx, &ly) } else { f64::NAN };
    let ratios: Vec<f64> = positive.iter().map(|r| r.gap_ratio).collect();
    let spread = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let c = sup_constants(model, 4)?;
    Ok(FourthMomentReport {
        candidate_constant: 3.5 * c.c[1] + c.c[2] + c.c[3] + c.c[4] + 2.0,
        empirical_constant: rows.iter().map(|r| r.bound_ratio).fold(0.0, f64::max),
        gaps: rows,
        slope,
        spread,
    })
}

/// Dyadic gaps `(T - 2^{-k} T, T]` for `k` in `levels`.
pub fn anchored_gaps(horizon: f64, levels: std::ops::RangeInclusive<u32>) -> Vec<(f64, f64)> {
    levels
        .map(|k| (horizon - horizon * 2f64.powi(-(k as i32)), horizon))
        .collect()
}

/// Pathwise limit of the quadratic variation, split into its Gaussian part and the
/// skewness correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QvLimit {
    pub gaussian: f64,
    pub correction: f64,
}

impl QvLimit {
    pub fn total(&self) -> f64 {
        self.gaussian + self.correction
    }
}

/// `∫_0^t h_2(s)^2 Φ(h_1 1_{]0,s]})^2 ds` plus the order-one correction
/// `∫_0^t h_2(s)^2 sum_i m_3(i) c_i(s)^2 X_i ds`, `c_i(s) = <h_1 1_{]0,s]}, e_i>`,
/// both integrated exactly cell by cell over the first `cells` cells.
pub fn qv_limit_pathwise(coefs: &PathCoefficients, cells: usize, w: f64, x: &[f64], model: &Model) -> Result<QvLimit> {
    if x.len() < cells {
        return Err(Error::MissingIndex {
            index: cells.saturating_sub(1),
            available: x.len(),
        });
    }
    let (mut y, mut a_run) = (0.0, 0.0);
    let (mut gaussian, mut correction) = (0.0, 0.0);
    for j in 0..cells {
        let h1 = coefs.a[j] / w.sqrt();
        let h2_sq = coefs.b[j] * coefs.b[j] / w;
        let beta = h1 * x[j] / w.sqrt();
        gaussian += h2_sq * (w * y * y + y * beta * w * w + beta * beta * w * w * w / 3.0);
        let m3 = model.table(j)?.m3();
        if m3 != 0.0 {
            correction += h2_sq * (w * a_run + m3 * h1 * h1 * w * w * x[j] / 3.0);
            a_run += m3 * coefs.a[j] * coefs.a[j] * x[j];
        }
        y += coefs.a[j] * x[j];
    }
    Ok(QvLimit {
        gaussian,
        correction,
    })
}

/// `sum_k (Z_{t_{k+1}} - Z_{t_k})^2` along a partition that takes every `stride`-th
/// point of the running path.
pub fn qv_sum(path: &[f64], stride: usize) -> f64 {
    let mut acc = 0.0;
    let mut k = 0;
    while k + stride < path.len() {
        let d = path[k + stride] - path[k];
        acc += d * d;
        k += stride;
    }
    acc
}

#[derive(Debug, Clone, Serialize)]
pub struct QvRow {
    pub level: u32,
    pub mesh: f64,
    pub residual: MCEstimate,
    pub residual_nocorr: MCEstimate,
    pub qv: MCEstimate,
    pub undersampled: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct QvReport {
    pub model: String,
    pub seed: u64,
    pub replicates: u64,
    pub basis_level: u32,
    pub rows: Vec<QvRow>,
}

impl QvReport {
    pub const CSV_HEADER: [&'static str; 7] = [
        "level",
        "mesh",
        "residual_mean",
        "residual_ci",
        "residual_nocorr_mean",
        "replicates",
        "seed",
    ];

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.level.to_string(),
                format!("{:e}", r.mesh),
                format!("{:e}", r.residual.mean),
                format!("{:e}", r.residual.ci95()),
                format!("{:e}", r.residual_nocorr.mean),
                self.replicates.to_string(),
                self.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn residual_decreasing(&self) -> bool {
        self.rows.windows(2).all(|p| p[1].residual.mean < p[0].residual.mean)
    }

    pub fn correction_helps(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.residual.mean < r.residual_nocorr.mean)
    }
}

/// Monte Carlo study of `E[(QV_l - limit)^2]` along dyadic partitions, on the horizon
/// of the basis grid.
pub fn qv_convergence(
    h1: &StepFn,
    h2: &StepFn,
    basis: &BasisSpec,
    levels: &[u32],
    replicates: u64,
    seed: u64,
    model: &ModelRef,
) -> Result<QvReport> {
    let grid = basis.grid();
    if let Some(&bad) = levels.iter().find(|&&l| l > grid.level()) {
        return Err(Error::GridMismatch(format!(
            "partition level {bad} is finer than basis level {}",
            grid.level()
        )));
    }
    let coefs = PathCoefficients::from_functions(h1, h2, basis)?;
    let n = basis.len();
    let w = grid.cell_width();
    let width = 3 * levels.len();
    let functional = |omega: &crate::chaos::Realization| -> Vec<f64> {
        let x = &omega.values;
        let path = coefs.running_z(x).expect("realization covers the basis");
        let lim = qv_limit_pathwise(&coefs, n, w, x, model).expect("model covers the basis");
        let mut row = Vec::with_capacity(width);
        for &l in levels {
            let qv = qv_sum(&path, 1 << (grid.level() - l));
            let r = qv - lim.total();
            let r0 = qv - lim.gaussian;
            row.extend([r * r, r0 * r0, qv]);
        }
        row
    };
    let est = estimate_vec(functional, width, model, n, replicates, seed)?;
    let rows = levels
        .iter()
        .enumerate()
        .map(|(i, &level)| {
            let residual = est[3 * i];
            QvRow {
                level,
                mesh: grid.horizon() * 2f64.powi(-(level as i32)),
                residual,
                residual_nocorr: est[3 * i + 1],
                qv: est[3 * i + 2],
                undersampled: !(residual.ci95() <= UNDERSAMPLED_HALF_WIDTH * residual.mean.abs()),
            }
        })
        .collect();
    Ok(QvReport {
        model: model.tag(),
        seed,
        replicates,
        basis_level: grid.level(),
        rows,
    })
}

fn symmetric_increment_kernel(h1: &StepFn, h2: &StepFn, basis: &BasisSpec, s: f64, t: f64) -> Result<Kernel2> {
    let cut = h2.refine_to(basis.grid())?.restrict_between(s, t)?;
    let k = causal_kernel(h1, &cut, basis)?;
    Ok(k.add(&k.transpose())?.scale(0.5))
}

fn matmul(a: &Kernel2, b: &Kernel2) -> Kernel2 {
    let n = a.n();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a.get(i, k);
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b.get(k, j);
            }
        }
    }
    Kernel2::from_fn(n, |i, j| out[i * n + j])
}

/// `‖sum_k f_k ∘ f_k‖_⊗` for the symmetrized increment kernels `f_k` of a level-`level`
/// partition, using `⟨f∘f, g∘g⟩ = (⟨f, g⟩^2 + 2 tr(fgfg)) / 3`.
pub fn increment_square_norm(h1: &StepFn, h2: &StepFn, basis: &BasisSpec, level: u32) -> Result<f64> {
    let part = Grid::new(basis.grid().horizon(), level)?;
    if !part.is_coarsening_of(basis.grid()) {
        return Err(Error::GridMismatch(format!(
            "partition level {level} is finer than basis level {}",
            basis.grid().level()
        )));
    }
    let fs: Vec<Kernel2> = (0..part.n_cells())
        .map(|k| symmetric_increment_kernel(h1, h2, basis, part.point(k), part.point(k + 1)))
        .collect::<Result<_>>()?;
    let n = basis.len();
    let mut acc = 0.0;
    for (i, f) in fs.iter().enumerate() {
        for g in &fs[i..] {
            let inner: f64 = (0..n)
                .flat_map(|a| (0..n).map(move |b| (a, b)))
                .map(|(a, b)| f.get(a, b) * g.get(a, b))
                .sum();
            let fg = matmul(f, g);
            // tr(fg fg) = sum_ab (fg)_ab (fg)_ba
            let tr: f64 = (0..n)
                .flat_map(|a| (0..n).map(move |b| (a, b)))
                .map(|(a, b)| fg.get(a, b) * fg.get(b, a))
                .sum();
            let term = (inner * inner + 2.0 * tr) / 3.0;
            acc += if std::ptr::eq(f, g) { term } else { 2.0 * term };
        }
    }
    Ok(acc.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::Realization;
    use crate::dist::DistFamily;
    use crate::integral::{double_integral, IntegralSpec};

    fn model(f: DistFamily) -> ModelRef {
        Model::homogeneous(f).unwrap()
    }

    fn sample_tensor() -> SymTensor {
        let mut f = SymTensor::zero(2).unwrap();
        f.add_value(&[0, 0], 0.8);
        f.add_value(&[0, 1], -0.4);
        f.add_value(&[1, 2], 0.6);
        f.add_value(&[2, 2], -0.3);
        f.add_value(&[0, 3], 0.25);
        f
    }

    #[test]
    fn gaussian_square_decomposition_is_exact() {
        let d = square_decomposition(&sample_tensor(), &model(DistFamily::Gaussian)).unwrap();
        for (n, r) in d.residual_by_order.iter().enumerate() {
            assert!(*r < 1e-12, "order {n}: {r}");
        }
    }

    #[test]
    fn leading_order_and_constant_for_all_families() {
        for fam in DistFamily::ALL_BASIC {
            let d = square_decomposition(&sample_tensor(), &model(fam)).unwrap();
            assert!(d.residual_by_order[4] < 1e-12, "{fam}");
            assert!((d.order0_oracle - d.second_moment).abs() < 1e-12, "{fam}");
            assert!((d.order0_oracle - d.order0_tensor_reading).abs() < 1e-12, "{fam}");
        }
    }

    #[test]
    fn residual_scales_quadratically() {
        let m = model(DistFamily::CenteredExponential);
        let f = sample_tensor();
        let big = square_decomposition(&f, &m).unwrap();
        let small = square_decomposition(&f.scale(0.1), &m).unwrap();
        for n in 0..5 {
            let (a, b) = (big.residual_by_order[n], small.residual_by_order[n]);
            assert!(b <= 0.0101 * a + 1e-15, "order {n}: {a} -> {b}");
        }
    }

    #[test]
    fn zero_gap_has_zero_moment() {
        let g = Grid::new(1.0, 4).unwrap();
        let one = StepFn::constant(g, 1.0);
        let r = fourth_moment_scaling(&one, &one, &BasisSpec::new(g), &[(0.5, 0.5)], &model(DistFamily::Gaussian)).unwrap();
        assert_eq!(r.gaps[0].fourth_moment, 0.0);
    }

    #[test]
    fn gaussian_fourth_moment_slope() {
        let g = Grid::new(1.0, 9).unwrap();
        let one = StepFn::constant(g, 1.0);
        let r = fourth_moment_scaling(&one, &one, &BasisSpec::new(g), &anchored_gaps(1.0, 2..=7), &model(DistFamily::Gaussian)).unwrap();
        assert!(r.spread < 3.0, "{}", r.spread);
        assert!((1.9..=2.1).contains(&r.slope), "{}", r.slope);
        assert_eq!(r.candidate_constant, 2.0);
    }

    #[test]
    fn qv_limit_agrees_with_fine_quadrature() {
        // Midpoint rule on a much finer grid.
        let g = Grid::new(1.0, 3).unwrap();
        let b = BasisSpec::new(g);
        let h1 = StepFn::new(g, (0..8).map(|k| 1.0 + 0.1 * k as f64).collect()).unwrap();
        let h2 = StepFn::new(g, (0..8).map(|k| 0.5 - 0.05 * k as f64).collect()).unwrap();
        let coefs = PathCoefficients::from_functions(&h1, &h2, &b).unwrap();
        let x: Vec<f64> = (0..8).map(|k| (k as f64 * 0.9).sin()).collect();
        let m = model(DistFamily::CenteredExponential);
        let lim = qv_limit_pathwise(&coefs, 8, g.cell_width(), &x, &m).unwrap();

        let fine = Grid::new(1.0, 12).unwrap();
        let (hf, gf) = (h1.refine_to(&fine).unwrap(), h2.refine_to(&fine).unwrap());
        let w = fine.cell_width();
        let ratio = 1 << 9;
        let (mut gauss, mut corr) = (0.0, 0.0);
        for j in 0..fine.n_cells() {
            let s = (j as f64 + 0.5) * w;
            let cell = j / ratio;
            let cut = h1.restrict_between(0.0, g.point(cell)).unwrap();
            let c = crate::grid::project(&cut, &b).unwrap();
            let part = hf.values()[j] * (s - g.point(cell)) / g.cell_width().sqrt();
            let mut coef = c.clone();
            coef[cell] += part;
            let phi: f64 = coef.iter().zip(&x).map(|(a, b)| a * b).sum();
            let g2 = gf.values()[j].powi(2);
            gauss += g2 * phi * phi * w;
            corr += g2 * 2.0 * coef.iter().zip(&x).map(|(a, b)| a * a * b).sum::<f64>() * w;
        }
        assert!((lim.gaussian - gauss).abs() < 1e-5, "{} vs {gauss}", lim.gaussian);
        assert!((lim.correction - corr).abs() < 1e-5, "{} vs {corr}", lim.correction);
    }

    #[test]
    fn symmetric_families_have_no_correction_and_nonnegative_limit() {
        let g = Grid::new(1.0, 4).unwrap();
        let one = StepFn::constant(g, 1.0);
        let coefs = PathCoefficients::from_functions(&one, &one, &BasisSpec::new(g)).unwrap();
        for fam in [DistFamily::Gaussian, DistFamily::Rademacher, DistFamily::Uniform] {
            let w = crate::mc::sample(&model(fam), 16, 1, 0).unwrap();
            let lim = qv_limit_pathwise(&coefs, 16, g.cell_width(), &w.values, &model(fam)).unwrap();
            assert_eq!(lim.correction, 0.0);
            assert!(lim.gaussian >= 0.0);
        }
        let w = crate::mc::sample(&model(DistFamily::CenteredExponential), 16, 1, 0).unwrap();
        let lim = qv_limit_pathwise(&coefs, 16, g.cell_width(), &w.values, &model(DistFamily::CenteredExponential)).unwrap();
        assert!(lim.correction != 0.0);
    }

    #[test]
    fn qv_sum_uses_running_path() {
        let g = Grid::new(1.0, 3).unwrap();
        let b = BasisSpec::new(g);
        let one = StepFn::constant(g, 1.0);
        let m = model(DistFamily::Uniform);
        let spec = IntegralSpec::new(one.clone(), one.clone(), 1.0, b, m.clone()).unwrap();
        let x: Vec<f64> = (0..8).map(|k| (k as f64).cos()).collect();
        let path = spec.path_coefficients().unwrap().running_z(&x).unwrap();
        let z = double_integral(&spec).unwrap().evaluate(&Realization::fixed(x)).unwrap();
        assert!((path[8] - z).abs() < 1e-12);
        assert_eq!(qv_sum(&path, 8), path[8] * path[8]);
    }

    #[test]
    fn qv_report_csv_schema_and_determinism() {
        let g = Grid::new(1.0, 6).unwrap();
        let b = BasisSpec::new(g);
        let one = StepFn::constant(g, 1.0);
        let m = model(DistFamily::CenteredExponential);
        let run = || qv_convergence(&one, &one, &b, &[2, 3, 4], 200, 3, &m).unwrap();
        let (a, c) = (run(), run());
        let (mut ba, mut bc) = (Vec::new(), Vec::new());
        a.write_csv(&mut ba).unwrap();
        c.write_csv(&mut bc).unwrap();
        assert_eq!(ba, bc);
        let text = String::from_utf8(ba).unwrap();
        assert!(text.starts_with("level,mesh,residual_mean,residual_ci,residual_nocorr_mean,replicates,seed\n"));
        assert_eq!(text.lines().count(), 4);
        assert!(qv_convergence(&one, &one, &b, &[7], 10, 3, &m).is_err());
    }

    #[test]
    fn increment_square_norm_matches_tensor_algebra() {
        let g = Grid::new(1.0, 2).unwrap();
        let b = BasisSpec::new(g);
        let h1 = StepFn::new(g, vec![1.0, -0.5, 0.7, 0.2]).unwrap();
        let h2 = StepFn::new(g, vec![0.3, 1.1, -0.8, 0.6]).unwrap();
        let via_trace = increment_square_norm(&h1, &h2, &b, 1).unwrap();
        let part = Grid::new(1.0, 1).unwrap();
        let mut total = SymTensor::zero(4).unwrap();
        for k in 0..2 {
            let f = SymTensor::from_kernel(
                &symmetric_increment_kernel(&h1, &h2, &b, part.point(k), part.point(k + 1)).unwrap(),
            );
            total = total.add(&circ(&f, &f).unwrap()).unwrap();
        }
        assert!((via_trace - total.norm_sq().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn increment_square_norm_shrinks_with_mesh() {
        let g = Grid::new(1.0, 5).unwrap();
        let b = BasisSpec::new(g);
        let one = StepFn::constant(g, 1.0);
        let norms: Vec<f64> = (0..=5).map(|l| increment_square_norm(&one, &one, &b, l).unwrap()).collect();
        assert!(norms.windows(2).all(|p| p[1] < p[0]), "{norms:?}");
    }
}

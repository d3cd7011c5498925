//! Random variables graded by chaos order, and the maps `φ`, `φ^(2)`, `φ^(1,1)`, `Φ°ⁿ`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dist::{ModelRef, MAX_DEGREE};
use crate::error::{Error, Result};
use crate::grid::{project, BasisSpec, Kernel2, StepFn};
use crate::poly::MultiPoly;
use crate::tensor::{a_norm_sq, multiplicities, Multi, SymTensor, MAX_ORDER};

/// `constant + sum_{n=1..4} Φ°ⁿ(kernel_n)`.
#[derive(Debug, Clone)]
pub struct GradedChaos {
    constant: f64,
    kernels: BTreeMap<usize, SymTensor>,
    model: ModelRef,
}

impl PartialEq for GradedChaos {
    fn eq(&self, other: &Self) -> bool {
        self.constant == other.constant
            && self.kernels == other.kernels
            && (Arc::ptr_eq(&self.model, &other.model) || self.model == other.model)
    }
}

/// One draw of `X_0..X_{N-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub values: Vec<f64>,
    pub seed: u64,
    pub replicate: u64,
    pub model_tag: String,
}

impl Realization {
    /// A hand-written realization, e.g. for tests.
    pub fn fixed(values: Vec<f64>) -> Self {
        Self {
            values,
            seed: 0,
            replicate: 0,
            model_tag: String::from("fixed"),
        }
    }
}

#[derive(Serialize)]
struct EntryJson {
    index: Vec<u32>,
    value: f64,
    null: bool,
}

#[derive(Serialize)]
struct OrderJson {
    order: usize,
    entries: Vec<EntryJson>,
}

#[derive(Serialize)]
struct ChaosJson {
    model: String,
    constant: f64,
    orders: Vec<OrderJson>,
}

impl GradedChaos {
    pub fn zero(model: ModelRef) -> Self {
        Self {
            constant: 0.0,
            kernels: BTreeMap::new(),
            model,
        }
    }

    pub fn constant_only(model: ModelRef, c: f64) -> Self {
        let mut z = Self::zero(model);
        z.constant = c;
        z
    }

    pub fn model(&self) -> &ModelRef {
        &self.model
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn kernel(&self, order: usize) -> Option<&SymTensor> {
        self.kernels.get(&order)
    }

    /// Orders `>= 1` carrying a nonzero kernel.
    pub fn orders(&self) -> Vec<usize> {
        self.kernels.keys().copied().collect()
    }

    /// Adds `c` to the coefficient of the stratum `e_{j_1} ∘ … ∘ e_{j_n}`.
    pub fn add_stratum(&mut self, tuple: &[u32], c: f64) -> Result<()> {
        let n = tuple.len();
        if n == 0 {
            self.constant += c;
            return Ok(());
        }
        if n > MAX_ORDER {
            return Err(Error::OrderOverflow {
                order: n,
                max: MAX_ORDER,
            });
        }
        let k = self.kernels.entry(n).or_insert(SymTensor::zero(n)?);
        k.add_stratum(tuple, c);
        if k.is_empty() {
            self.kernels.remove(&n);
        }
        Ok(())
    }

    /// Replaces the order-`n` kernel (`n = 0` sets the constant from a scalar tensor).
    pub fn with_kernel(mut self, f: SymTensor) -> Self {
        let n = f.order();
        if n == 0 {
            self.constant = f.get(&[]);
        } else if f.is_empty() {
            self.kernels.remove(&n);
        } else {
            self.kernels.insert(n, f);
        }
        self
    }

    fn check_model(&self, other: &GradedChaos) -> Result<()> {
        if Arc::ptr_eq(&self.model, &other.model) || self.model == other.model {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "chaos elements built on different models ({} vs {})",
                self.model.tag(),
                other.model.tag()
            )))
        }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &GradedChaos) -> Result<Self> {
        self.check_model(other)?;
        let mut out = self.clone();
        out.constant += a * other.constant;
        for (n, k) in &other.kernels {
            let merged = match out.kernels.get(n) {
                Some(mine) => mine.axpy(a, k)?,
                None => k.scale(a),
            };
            if merged.is_empty() {
                out.kernels.remove(n);
            } else {
                out.kernels.insert(*n, merged);
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &GradedChaos) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &GradedChaos) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero(self.model.clone());
        out.constant = self.constant * c;
        for (n, k) in &self.kernels {
            let s = k.scale(c);
            if !s.is_empty() {
                out.kernels.insert(*n, s);
            }
        }
        out
    }

    /// Largest absolute constant or kernel entry.
    pub fn max_abs_entry(&self) -> f64 {
        self.kernels
            .values()
            .fold(self.constant.abs(), |m, k| m.max(k.max_abs()))
    }

    /// Largest absolute entry at a single order (`0` is the constant).
    pub fn max_abs_at(&self, order: usize) -> f64 {
        if order == 0 {
            self.constant.abs()
        } else {
            self.kernels.get(&order).map_or(0.0, SymTensor::max_abs)
        }
    }

    pub fn max_index(&self) -> Option<u32> {
        self.kernels.values().filter_map(SymTensor::max_index).max()
    }

    /// `E[Z] `.
    pub fn mean(&self) -> f64 {
        self.constant
    }

    /// `E[Z^2]` through the isometry `E[Φ°ⁿ(f)^2] = ‖f‖_A^2`.
    pub fn second_moment(&self) -> Result<f64> {
        let mut acc = self.constant * self.constant;
        for k in self.kernels.values() {
            acc += a_norm_sq(k, &self.model)?;
        }
        Ok(acc)
    }

    /// `(order, multi-index)` of every stored component with `prod q_α = 0`.
    pub fn null_strata(&self) -> Vec<(usize, Multi)> {
        let mut out = Vec::new();
        for (n, k) in &self.kernels {
            for (key, _) in k.values() {
                let null = multiplicities(key).iter().any(|&(j, a)| {
                    self.model
                        .table(j as usize)
                        .map(|t| t.is_null(a))
                        .unwrap_or(false)
                });
                if null {
                    out.push((*n, key.clone()));
                }
            }
        }
        out
    }

    /// Zeroes every component touching an index `>= n`.
    pub fn truncate(&self, n: usize) -> Self {
        let mut out = Self::zero(self.model.clone());
        out.constant = self.constant;
        for (order, k) in &self.kernels {
            let kept = k.filter_indices(|j| (j as usize) < n);
            if !kept.is_empty() {
                out.kernels.insert(*order, kept);
            }
        }
        out
    }

    /// Value at one realization; orthogonal polynomials evaluated by recurrence.
    pub fn evaluate(&self, omega: &Realization) -> Result<f64> {
        self.evaluate_values(&omega.values)
    }

    pub fn evaluate_values(&self, x: &[f64]) -> Result<f64> {
        if let Some(m) = self.max_index() {
            if m as usize >= x.len() {
                return Err(Error::MissingIndex {
                    index: m as usize,
                    available: x.len(),
                });
            }
        }
        let used = self.max_index().map_or(0, |m| m as usize + 1);
        let mut p = Vec::with_capacity(used);
        for (j, &xj) in x.iter().enumerate().take(used) {
            p.push(self.model.table(j)?.eval_all(xj));
        }
        let mut acc = self.constant;
        for k in self.kernels.values() {
            for (key, c) in k.strata() {
                let mut t = c;
                for (j, a) in multiplicities(key) {
                    t *= p[j as usize][a];
                }
                acc += t;
            }
        }
        Ok(acc)
    }

    /// Expansion into monomials.
    pub fn to_poly(&self) -> Result<MultiPoly> {
        let mut out = MultiPoly::constant(self.constant);
        for k in self.kernels.values() {
            for (key, c) in k.strata() {
                let mut term = MultiPoly::constant(c);
                for (j, a) in multiplicities(key) {
                    let table = self.model.table(j as usize)?;
                    if a > MAX_DEGREE {
                        return Err(Error::DegreeTooHigh {
                            var: j as usize,
                            degree: a as u32,
                            max: MAX_DEGREE as u32,
                        });
                    }
                    term = term.mul(&MultiPoly::univariate(j, &table.polys[a]));
                }
                out.axpy(1.0, &term);
            }
        }
        Ok(out)
    }

    /// Debug JSON: per-order sparse entries (full-tensor values) with multi-indices.
    pub fn to_json(&self) -> String {
        let nulls: std::collections::BTreeSet<(usize, Multi)> =
            self.null_strata().into_iter().collect();
        let doc = ChaosJson {
            model: self.model.tag(),
            constant: self.constant,
            orders: self
                .kernels
                .iter()
                .map(|(n, k)| OrderJson {
                    order: *n,
                    entries: k
                        .values()
                        .map(|(key, v)| EntryJson {
                            index: key.to_vec(),
                            value: v,
                            null: nulls.contains(&(*n, key.clone())),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("chaos JSON serialization")
    }
}

/// `φ(h) = sum_k <h, e_k> X_k`.
pub fn phi(h: &StepFn, basis: &BasisSpec, model: &ModelRef) -> Result<GradedChaos> {
    let coefs = project(h, basis)?;
    Ok(phi_vector(&coefs, model))
}

pub fn phi_vector(coefs: &[f64], model: &ModelRef) -> GradedChaos {
    GradedChaos::zero(model.clone()).with_kernel(SymTensor::from_vector(coefs))
}

/// `φ^(2)(f) = sum_j f_jj (X_j^2 - 1)`, regraded as `P_2(X_j) + γ_{2,1} X_j`.
pub fn phi2(f: &Kernel2, model: &ModelRef) -> Result<GradedChaos> {
    let mut z = GradedChaos::zero(model.clone());
    for j in 0..f.n() {
        let d = f.get(j, j);
        if d == 0.0 {
            continue;
        }
        let t = model.table(j)?;
        let jj = j as u32;
        z.add_stratum(&[jj, jj], d)?;
        z.add_stratum(&[jj], d * t.gamma[2][1])?;
        z.add_stratum(&[], d * (t.gamma[2][0] - 1.0))?;
    }
    Ok(z)
}

/// `φ^(1,1)(f) = sum_{k<j} f_jk X_k X_j`; entries on or above the diagonal are ignored.
pub fn phi11(f: &Kernel2, model: &ModelRef) -> Result<GradedChaos> {
    let mut z = GradedChaos::zero(model.clone());
    for j in 0..f.n() {
        for k in 0..j {
            let v = f.get(j, k);
            if v != 0.0 {
                z.add_stratum(&[k as u32, j as u32], v)?;
            }
        }
    }
    Ok(z)
}

/// The three pieces of `φ(h) φ(g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductParts {
    pub square: GradedChaos,
    pub cross: GradedChaos,
    pub constant: f64,
}

impl ProductParts {
    pub fn total(&self) -> Result<GradedChaos> {
        let mut z = self.square.add(&self.cross)?;
        z.constant += self.constant;
        Ok(z)
    }
}

/// `φ(h)φ(g) = φ^(2)(h⊗g) + φ^(1,1)(h⊗g + g⊗h) + <h, g>`.
pub fn product_decompose(
    h: &StepFn,
    g: &StepFn,
    basis: &BasisSpec,
    model: &ModelRef,
) -> Result<ProductParts> {
    let u = project(h, basis)?;
    let v = project(g, basis)?;
    product_decompose_coefs(&u, &v, model)
}

pub fn product_decompose_coefs(u: &[f64], v: &[f64], model: &ModelRef) -> Result<ProductParts> {
    let hg = Kernel2::outer(u, v)?;
    let sym = hg.add(&hg.transpose())?;
    Ok(ProductParts {
        square: phi2(&hg, model)?,
        cross: phi11(&sym, model)?,
        constant: u.iter().zip(v).map(|(a, b)| a * b).sum(),
    })
}

/// `Φ°ⁿ(f)`, a pure order-`n` element.
pub fn phi_circ_n(f: &SymTensor, model: &ModelRef) -> Result<GradedChaos> {
    if f.order() > MAX_ORDER {
        return Err(Error::OrderOverflow {
            order: f.order(),
            max: MAX_ORDER,
        });
    }
    Ok(GradedChaos::zero(model.clone()).with_kernel(f.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{DistFamily, Model};
    use crate::grid::Grid;
    use crate::poly::regrade;

    fn model(f: DistFamily) -> ModelRef {
        Model::homogeneous(f).unwrap()
    }

    fn x(j: u32) -> MultiPoly {
        MultiPoly::var(j)
    }

    fn poly_close(a: &MultiPoly, b: &MultiPoly, tol: f64) -> bool {
        (a - b).max_abs_coefficient() < tol
    }

    #[test]
    fn phi_examples() {
        let g1 = Grid::new(1.0, 1).unwrap();
        let b = BasisSpec::new(g1);
        let m = model(DistFamily::Gaussian);
        let e0 = StepFn::basis_vector(g1, 0).unwrap();
        let z = phi(&e0, &b, &m).unwrap();
        assert!(poly_close(&z.to_poly().unwrap(), &x(0), 1e-15));

        let one = StepFn::constant(g1, 1.0);
        let z = phi(&one, &b, &m).unwrap();
        let r = 1.0 / 2f64.sqrt();
        let want = &x(0).scale(r) + &x(1).scale(r);
        assert!(poly_close(&z.to_poly().unwrap(), &want, 1e-15));
        assert!((z.second_moment().unwrap() - 1.0).abs() < 1e-15);

        let z = phi(&StepFn::zero(g1), &b, &m).unwrap();
        assert!(z.orders().is_empty() && z.constant() == 0.0);
    }

    #[test]
    fn phi2_phi11_examples() {
        let m = model(DistFamily::CenteredExponential);
        let z = phi2(&Kernel2::unit(2, 0, 0), &m).unwrap();
        let want = &x(0).pow(2) - &MultiPoly::constant(1.0);
        assert!(poly_close(&z.to_poly().unwrap(), &want, 1e-12));

        let z = phi11(&Kernel2::unit(2, 1, 0), &m).unwrap();
        assert!(poly_close(&z.to_poly().unwrap(), &x(0).mul(&x(1)), 1e-15));
        let z = phi11(&Kernel2::unit(2, 0, 1), &m).unwrap();
        assert!(z.orders().is_empty());
    }

    #[test]
    fn phi2_matches_regrade_oracle() {
        for fam in DistFamily::ALL_BASIC {
            let m = model(fam);
            let f = Kernel2::from_fn(3, |j, k| (j as f64 + 1.0) * 0.3 - k as f64 * 0.2);
            let mut raw = MultiPoly::zero();
            for j in 0..3u32 {
                let d = f.get(j as usize, j as usize);
                raw.axpy(d, &(&x(j).pow(2) - &MultiPoly::constant(1.0)));
            }
            let oracle = regrade(&raw, &m).unwrap();
            let closed = phi2(&f, &m).unwrap();
            assert!(oracle.sub(&closed).unwrap().max_abs_entry() < 1e-12, "{fam}");
        }
    }

    #[test]
    fn product_decompose_examples() {
        let m = model(DistFamily::Uniform);
        let p = product_decompose_coefs(&[1.0, 0.0], &[1.0, 0.0], &m).unwrap();
        assert!(poly_close(&p.total().unwrap().to_poly().unwrap(), &x(0).pow(2), 1e-12));
        assert_eq!(p.constant, 1.0);
        let p = product_decompose_coefs(&[1.0, 0.0], &[0.0, 1.0], &m).unwrap();
        assert!(p.square.orders().is_empty());
        assert_eq!(p.constant, 0.0);
        assert!(poly_close(&p.cross.to_poly().unwrap(), &x(0).mul(&x(1)), 1e-15));
    }

    #[test]
    fn phi_circ_examples() {
        let e00 = SymTensor::basis(&[0, 0]).unwrap();
        let z = phi_circ_n(&e00, &model(DistFamily::Gaussian)).unwrap();
        let want = &x(0).pow(2) - &MultiPoly::constant(1.0);
        assert!(poly_close(&z.to_poly().unwrap(), &want, 1e-15));

        let z = phi_circ_n(&e00, &model(DistFamily::CenteredExponential)).unwrap();
        let want = &(&x(0).pow(2) - &x(0).scale(2.0)) - &MultiPoly::constant(1.0);
        assert!(poly_close(&z.to_poly().unwrap(), &want, 1e-12));

        let z = phi_circ_n(
            &SymTensor::basis(&[0, 1]).unwrap(),
            &model(DistFamily::TwoPoint(0.2)),
        )
        .unwrap();
        assert!(poly_close(&z.to_poly().unwrap(), &x(0).mul(&x(1)), 1e-15));
    }

    #[test]
    fn evaluate_and_truncate() {
        let m = model(DistFamily::Gaussian);
        let z = phi2(&Kernel2::unit(1, 0, 0), &m).unwrap();
        assert_eq!(z.evaluate(&Realization::fixed(vec![2.0])).unwrap(), 3.0);
        assert!(matches!(
            z.evaluate(&Realization::fixed(vec![])),
            Err(Error::MissingIndex { .. })
        ));

        let mut w = GradedChaos::constant_only(m.clone(), 0.7);
        w.add_stratum(&[0, 3], 1.0).unwrap();
        w.add_stratum(&[1], 2.0).unwrap();
        let t = w.truncate(0);
        assert_eq!(t.constant(), 0.7);
        assert!(t.orders().is_empty());
        let t = w.truncate(2);
        assert_eq!(t.orders(), vec![1]);
    }

    #[test]
    fn json_dump_marks_null_strata() {
        let m = model(DistFamily::Rademacher);
        let z = phi2(&Kernel2::unit(1, 0, 0), &m).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&z.to_json()).unwrap();
        assert_eq!(doc["model"], "rademacher");
        assert_eq!(doc["orders"][0]["entries"][0]["null"], true);
    }
}

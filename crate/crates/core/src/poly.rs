//! Sparse multivariate polynomials in the driving variables `X_j`.
//!
//! This is the reference against which every closed-form operator is checked: products
//! are expanded term by term, expectations use only raw moments and independence.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use smallvec::SmallVec;

use crate::chaos::GradedChaos;
use crate::dist::{ModelRef, Model, MAX_DEGREE, MAX_MOMENT};
use crate::error::{Error, Result};
use crate::tensor::Multi;

/// `(variable, power)` pairs sorted by variable, powers positive.
pub type Monomial = SmallVec<[(u32, u8); 4]>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MultiPoly {
    terms: BTreeMap<Monomial, f64>,
}

fn merge(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out = Monomial::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl MultiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::new(), c);
        p
    }

    pub fn var(j: u32) -> Self {
        Self::monomial(&[(j, 1)], 1.0)
    }

    /// `c · prod X_j^{e}`; repeated variables are combined.
    pub fn monomial(powers: &[(u32, u8)], c: f64) -> Self {
        let mut m = Monomial::new();
        let mut sorted: Vec<(u32, u8)> = powers.iter().copied().filter(|p| p.1 > 0).collect();
        sorted.sort_unstable();
        for (j, e) in sorted {
            match m.last_mut() {
                Some(last) if last.0 == j => last.1 += e,
                _ => m.push((j, e)),
            }
        }
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    /// Univariate polynomial in `X_j` from ascending coefficients.
    pub fn univariate(j: u32, coeffs: &[f64]) -> Self {
        let mut p = Self::zero();
        for (e, &c) in coeffs.iter().enumerate() {
            let m: Monomial = if e == 0 {
                Monomial::new()
            } else {
                smallvec::smallvec![(j, e as u8)]
            };
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|m| m.iter().map(|&(_, e)| e as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn axpy(&mut self, a: f64, other: &MultiPoly) {
        for (m, v) in &other.terms {
            self.add_term(m.clone(), a * v);
        }
    }

    pub fn mul(&self, other: &MultiPoly) -> Self {
        let mut out = Self::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(merge(a, b), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::constant(1.0), |acc, _| acc.mul(self))
    }

    /// Drops coefficients with magnitude at most `tol`.
    pub fn prune(&self, tol: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > tol)
                .map(|(m, c)| (m.clone(), *c))
                .collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut t = *c;
            for &(j, e) in m {
                let xj = x.get(j as usize).ok_or(Error::MissingIndex {
                    index: j as usize,
                    available: x.len(),
                })?;
                t *= xj.powi(e as i32);
            }
            acc += t;
        }
        Ok(acc)
    }

    fn moment(model: &Model, j: u32, e: u8) -> Result<f64> {
        if e as usize > MAX_MOMENT {
            return Err(Error::DegreeTooHigh {
                var: j as usize,
                degree: e as u32,
                max: MAX_MOMENT as u32,
            });
        }
        Ok(model.table(j as usize)?.moments.m[e as usize])
    }

    fn monomial_expectation(model: &Model, m: &Monomial) -> Result<f64> {
        let mut acc = 1.0;
        for &(j, e) in m {
            acc *= Self::moment(model, j, e)?;
        }
        Ok(acc)
    }

    /// `E[p]` under independent `X_j`.
    pub fn expect(&self, model: &Model) -> Result<f64> {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            acc += c * Self::monomial_expectation(model, m)?;
        }
        Ok(acc)
    }

    /// Integrates out every variable outside `keep`.
    pub fn conditional_expect(&self, keep: impl Fn(u32) -> bool, model: &Model) -> Result<Self> {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut coef = *c;
            let mut kept = Monomial::new();
            for &(j, e) in m {
                if keep(j) {
                    kept.push((j, e));
                } else {
                    coef *= Self::moment(model, j, e)?;
                }
            }
            out.add_term(kept, coef);
        }
        Ok(out)
    }

    /// `E[p q]` without expanding the product.
    ///
    /// Only pairs of monomials in which no variable ends with power one contribute, so
    /// the right-hand terms are grouped by their set of power-one variables and each
    /// left-hand term only visits the groups that are subsets of its own support.
    pub fn expect_product(&self, other: &MultiPoly, model: &Model) -> Result<f64> {
        type Key = SmallVec<[u32; 4]>;
        let mut groups: HashMap<Key, Vec<(&Monomial, f64)>> = HashMap::new();
        for (m, &c) in &other.terms {
            let ones: Key = m.iter().filter(|p| p.1 == 1).map(|p| p.0).collect();
            groups.entry(ones).or_default().push((m, c));
        }
        let mut acc = 0.0;
        for (a, &ca) in &self.terms {
            let support: Key = a.iter().map(|p| p.0).collect();
            let ones_a: Key = a.iter().filter(|p| p.1 == 1).map(|p| p.0).collect();
            let r = support.len();
            if r > 16 {
                return Err(Error::InvalidArgument(format!(
                    "monomial with {r} variables is too wide for a product expectation"
                )));
            }
            let mut sub = Key::new();
            for mask in 0u32..(1 << r) {
                sub.clear();
                sub.extend((0..r).filter(|i| mask & (1 << i) != 0).map(|i| support[i]));
                let Some(group) = groups.get(&sub) else {
                    continue;
                };
                for &(b, cb) in group {
                    if !ones_a.iter().all(|j| b.iter().any(|p| p.0 == *j)) {
                        continue;
                    }
                    acc += ca * cb * Self::monomial_expectation(model, &merge(a, b))?;
                }
            }
        }
        Ok(acc)
    }

    /// Sorted `exponents:coefficient` lines, e.g. `0^2 3^1:1.500000000000e0`.
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        for (m, c) in &self.terms {
            if m.is_empty() {
                out.push('1');
            } else {
                let parts: Vec<String> = m.iter().map(|(j, e)| format!("{j}^{e}")).collect();
                out.push_str(&parts.join(" "));
            }
            let _ = writeln!(out, ":{c:.12e}");
        }
        out
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        MultiPoly::mul(self, rhs)
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(-1.0)
    }
}

/// Rewrites `p` in the basis of products `prod_j P_{α_j}(X_j)`.
///
/// Components on strata with `q = 0` (atomic families) are kept, and reported by
/// [`GradedChaos::null_strata`].
pub fn regrade(p: &MultiPoly, model: &ModelRef) -> Result<GradedChaos> {
    let mut out = GradedChaos::zero(model.clone());
    for (m, c) in &p.terms {
        // Expand each factor X_j^e = sum_k γ[e][k] P_k(X_j), then distribute.
        let mut partial: Vec<(Multi, f64)> = vec![(Multi::new(), *c)];
        for &(j, e) in m {
            if e as usize > MAX_DEGREE {
                return Err(Error::DegreeTooHigh {
                    var: j as usize,
                    degree: e as u32,
                    max: MAX_DEGREE as u32,
                });
            }
            let table = model.table(j as usize)?;
            let mut next = Vec::with_capacity(partial.len() * (e as usize + 1));
            for (key, coef) in &partial {
                for k in 0..=e as usize {
                    let g = table.gamma[e as usize][k];
                    if g == 0.0 {
                        continue;
                    }
                    let mut key = key.clone();
                    key.extend(std::iter::repeat_n(j, k));
                    next.push((key, coef * g));
                }
            }
            partial = next;
        }
        for (key, coef) in partial {
            out.add_stratum(&key, coef)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{DistFamily, Model};

    fn model(f: DistFamily) -> ModelRef {
        Model::homogeneous(f).unwrap()
    }

    fn x(j: u32) -> MultiPoly {
        MultiPoly::var(j)
    }

    fn xsq_minus_one(j: u32) -> MultiPoly {
        &x(j).pow(2) - &MultiPoly::constant(1.0)
    }

    #[test]
    fn expectations() {
        for fam in DistFamily::ALL_BASIC {
            let p = x(0).pow(2).mul(&x(1).pow(2));
            assert!((p.expect(&model(fam)).unwrap() - 1.0).abs() < 1e-15);
        }
        let q = xsq_minus_one(0).pow(2);
        assert!((q.expect(&model(DistFamily::Gaussian)).unwrap() - 2.0).abs() < 1e-15);
        assert!(q.expect(&model(DistFamily::Rademacher)).unwrap().abs() < 1e-15);
        assert!(matches!(
            x(0).pow(9).expect(&model(DistFamily::Gaussian)),
            Err(Error::DegreeTooHigh { degree: 9, .. })
        ));
    }

    #[test]
    fn conditional_expectations() {
        let m = model(DistFamily::CenteredExponential);
        let keep0 = |j: u32| j == 0;
        assert!(x(0).mul(&x(1)).conditional_expect(keep0, &m).unwrap().is_zero());
        assert!(x(0)
            .mul(&xsq_minus_one(1))
            .conditional_expect(keep0, &m)
            .unwrap()
            .is_zero());
        let p = x(0).pow(2).mul(&x(1).pow(2));
        assert_eq!(p.conditional_expect(keep0, &m).unwrap(), x(0).pow(2));

        let r = &(&x(0).pow(3).mul(&x(1)) + &x(2).pow(2)) + &MultiPoly::constant(0.5);
        assert_eq!(r.conditional_expect(|_| true, &m).unwrap(), r);
        let all_out = r.conditional_expect(|_| false, &m).unwrap();
        assert_eq!(all_out, MultiPoly::constant(r.expect(&m).unwrap()));
    }

    #[test]
    fn expect_product_matches_expansion() {
        let m = model(DistFamily::CenteredExponential);
        let p = &(&x(0).mul(&x(1)).scale(0.7) + &xsq_minus_one(2)) + &x(1).pow(3).scale(-0.2);
        let q = &(&x(1).mul(&x(0)) + &x(2).mul(&x(1)).scale(2.0)) + &x(2).pow(2).scale(0.3);
        let direct = p.mul(&q).expect(&m).unwrap();
        let joined = p.expect_product(&q, &m).unwrap();
        assert!((direct - joined).abs() < 1e-12, "{direct} vs {joined}");
    }

    #[test]
    fn regrade_examples() {
        let g = model(DistFamily::Gaussian);
        let z = regrade(&x(0).pow(2), &g).unwrap();
        assert_eq!(z.constant(), 1.0);
        assert_eq!(z.kernel(2).unwrap().get(&[0, 0]), 1.0);
        assert!(z.kernel(1).is_none());

        let z = regrade(&x(0).mul(&x(1)), &g).unwrap();
        assert_eq!(z.orders(), vec![2]);
        assert_eq!(z.kernel(2).unwrap().get(&[1, 0]), 0.5);

        let e = model(DistFamily::CenteredExponential);
        let t = e.table(0).unwrap().clone();
        let z = regrade(&x(0).pow(3), &e).unwrap();
        assert_eq!(z.kernel(3).unwrap().get(&[0, 0, 0]), 1.0);
        assert!((z.kernel(2).unwrap().get(&[0, 0]) - t.gamma[3][2]).abs() < 1e-12);
        assert!((z.kernel(1).unwrap().get(&[0]) - t.gamma[3][1]).abs() < 1e-12);
        assert!((z.constant() - t.gamma[3][0]).abs() < 1e-12);
        let back = z.to_poly().unwrap();
        assert!((&back - &x(0).pow(3)).max_abs_coefficient() < 1e-10);
    }

    #[test]
    fn regrade_flags_null_strata() {
        let r = model(DistFamily::Rademacher);
        let z = regrade(&xsq_minus_one(3), &r).unwrap();
        assert_eq!(z.null_strata().len(), 1);
        assert!((&z.to_poly().unwrap() - &xsq_minus_one(3)).max_abs_coefficient() < 1e-12);
    }

    #[test]
    fn debug_dump_is_sorted() {
        let p = &(&x(1).mul(&x(0)).scale(0.5) + &MultiPoly::constant(-1.0)) + &x(0).pow(2);
        assert_eq!(
            p.debug_dump(),
            "1:-1.000000000000e0\n0^1 1^1:5.000000000000e-1\n0^2:1.000000000000e0\n"
        );
    }

    #[test]
    fn eval_rejects_missing_index() {
        assert!(matches!(
            x(3).eval(&[1.0, 2.0]),
            Err(Error::MissingIndex { index: 3, .. })
        ));
        assert_eq!(xsq_minus_one(0).eval(&[2.0]).unwrap(), 3.0);
    }
}

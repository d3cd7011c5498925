//! Symmetric tensors of order at most 4 over the indicator basis.
//!
//! A [`SymTensor`] is stored by canonical (sorted) multi-index. The stored number is the
//! value of the full tensor at any permutation of that multi-index, so the `⊗`-norm
//! weights each entry by its number of distinct permutations. The coefficient of the
//! stratum `e_{j_1} ∘ … ∘ e_{j_n}` is `value × #permutations`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::dist::{Model, MAX_DEGREE};
use crate::error::{Error, Result};
use crate::grid::Kernel2;

pub const MAX_ORDER: usize = 4;

/// Multi-index, sorted ascending when used as a key.
pub type Multi = SmallVec<[u32; 4]>;

const FACT: [f64; 9] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0, 40320.0];

pub fn factorial(n: usize) -> f64 {
    FACT[n]
}

/// Runs `(index, multiplicity)` of a sorted multi-index.
pub fn multiplicities(key: &[u32]) -> SmallVec<[(u32, usize); 4]> {
    let mut out: SmallVec<[(u32, usize); 4]> = SmallVec::new();
    for &j in key {
        match out.last_mut() {
            Some((last, m)) if *last == j => *m += 1,
            _ => out.push((j, 1)),
        }
    }
    out
}

/// Number of distinct tuples that sort to `key`.
pub fn tuple_count(key: &[u32]) -> f64 {
    multiplicities(key)
        .iter()
        .fold(factorial(key.len()), |acc, &(_, m)| acc / factorial(m))
}

pub fn canonical(tuple: &[u32]) -> Multi {
    let mut k: Multi = tuple.iter().copied().collect();
    k.sort_unstable();
    k
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        Err(Error::OrderOverflow {
            order,
            max: MAX_ORDER,
        })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    order: usize,
    entries: BTreeMap<Multi, f64>,
}

impl SymTensor {
    pub fn zero(order: usize) -> Result<Self> {
        check_order(order)?;
        Ok(Self {
            order,
            entries: BTreeMap::new(),
        })
    }

    pub fn scalar(c: f64) -> Self {
        let mut t = Self {
            order: 0,
            entries: BTreeMap::new(),
        };
        t.add_value(&[], c);
        t
    }

    /// `e_{j_1} ∘ … ∘ e_{j_n}`, i.e. stratum coefficient one.
    pub fn basis(indices: &[u32]) -> Result<Self> {
        let mut t = Self::zero(indices.len())?;
        t.add_stratum(indices, 1.0);
        Ok(t)
    }

    pub fn from_vector(coefficients: &[f64]) -> Self {
        let mut t = Self {
            order: 1,
            entries: BTreeMap::new(),
        };
        for (j, &c) in coefficients.iter().enumerate() {
            t.add_value(&[j as u32], c);
        }
        t
    }

    /// Symmetrization of an order-2 kernel.
    pub fn from_kernel(kernel: &Kernel2) -> Self {
        let mut t = Self {
            order: 2,
            entries: BTreeMap::new(),
        };
        let n = kernel.n();
        for j in 0..n {
            for k in j..n {
                let v = 0.5 * (kernel.get(j, k) + kernel.get(k, j));
                t.add_value(&[j as u32, k as u32], v);
            }
        }
        t
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Full-tensor value at an arbitrary tuple.
    pub fn get(&self, tuple: &[u32]) -> f64 {
        self.entries.get(&canonical(tuple)).copied().unwrap_or(0.0)
    }

    pub fn add_value(&mut self, tuple: &[u32], v: f64) {
        debug_assert_eq!(tuple.len(), self.order);
        if v == 0.0 {
            return;
        }
        let key = canonical(tuple);
        let slot = self.entries.entry(key.clone()).or_insert(0.0);
        *slot += v;
        if *slot == 0.0 {
            self.entries.remove(&key);
        }
    }

    pub fn add_stratum(&mut self, tuple: &[u32], c: f64) {
        let count = tuple_count(&canonical(tuple));
        self.add_value(tuple, c / count);
    }

    /// `(sorted multi-index, full-tensor value)` pairs.
    pub fn values(&self) -> impl Iterator<Item = (&Multi, f64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    /// `(sorted multi-index, stratum coefficient)` pairs.
    pub fn strata(&self) -> impl Iterator<Item = (&Multi, f64)> {
        self.entries.iter().map(|(k, &v)| (k, v * tuple_count(k)))
    }

    pub fn max_index(&self) -> Option<u32> {
        self.entries.keys().filter_map(|k| k.last().copied()).max()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm_sq(&self) -> f64 {
        self.strata().map(|(k, c)| c * c / tuple_count(k)).sum()
    }

    pub fn inner(&self, other: &SymTensor) -> f64 {
        if self.order != other.order {
            return 0.0;
        }
        self.entries
            .iter()
            .filter_map(|(k, v)| other.entries.get(k).map(|w| v * w * tuple_count(k)))
            .sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self {
            order: self.order,
            entries: BTreeMap::new(),
        };
        for (k, v) in &self.entries {
            out.add_value(k, v * c);
        }
        out
    }

    fn check_same_order(&self, other: &SymTensor) -> Result<()> {
        if self.order == other.order {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "tensor orders {} and {} differ",
                self.order, other.order
            )))
        }
    }

    pub fn add(&self, other: &SymTensor) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SymTensor) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &SymTensor) -> Result<Self> {
        self.check_same_order(other)?;
        let mut out = self.clone();
        for (k, v) in &other.entries {
            out.add_value(k, a * v);
        }
        Ok(out)
    }

    /// Keeps entries whose indices all satisfy `keep`.
    pub fn filter_indices(&self, keep: impl Fn(u32) -> bool) -> Self {
        Self {
            order: self.order,
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| k.iter().all(|&j| keep(j)))
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        }
    }

    /// Dense coefficient matrix of an order-2 tensor on `n` basis elements.
    pub fn to_kernel(&self, n: usize) -> Result<Kernel2> {
        if self.order != 2 {
            return Err(Error::InvalidArgument(format!(
                "order-2 tensor required, got order {}",
                self.order
            )));
        }
        if let Some(m) = self.max_index() {
            if m as usize >= n {
                return Err(Error::MissingIndex {
                    index: m as usize,
                    available: n,
                });
            }
        }
        Ok(Kernel2::from_fn(n, |j, k| self.get(&[j as u32, k as u32])))
    }
}

/// Arbitrary (not necessarily symmetric) tensor keyed by raw tuples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FullTensor {
    order: usize,
    entries: BTreeMap<Multi, f64>,
}

impl FullTensor {
    pub fn new(order: usize) -> Self {
        Self {
            order,
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, tuple: &[u32], v: f64) -> Result<()> {
        if tuple.len() != self.order {
            return Err(Error::InvalidArgument(format!(
                "tuple of length {} in an order-{} tensor",
                tuple.len(),
                self.order
            )));
        }
        *self.entries.entry(tuple.iter().copied().collect()).or_insert(0.0) += v;
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `f ⊗ g` of two symmetric tensors, as a full tensor.
    pub fn tensor_product(f: &SymTensor, g: &SymTensor) -> Result<Self> {
        let mut out = Self::new(f.order + g.order);
        check_order(out.order)?;
        for (kf, vf) in f.values() {
            for tf in permutations(kf) {
                for (kg, vg) in g.values() {
                    for tg in permutations(kg) {
                        let mut t = tf.clone();
                        t.extend_from_slice(&tg);
                        out.insert(&t, vf * vg)?;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Distinct permutations of a sorted multi-index, in lexicographic order.
pub fn permutations(key: &[u32]) -> Vec<Multi> {
    let mut cur: Multi = key.iter().copied().collect();
    cur.sort_unstable();
    let mut out = vec![cur.clone()];
    loop {
        let n = cur.len();
        if n < 2 {
            return out;
        }
        let mut i = n - 1;
        while i > 0 && cur[i - 1] >= cur[i] {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        let mut j = n - 1;
        while cur[j] <= cur[i - 1] {
            j -= 1;
        }
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

/// Symmetrization: the value at a multi-index is the mean over its permutations.
pub fn sym(t: &FullTensor) -> Result<SymTensor> {
    check_order(t.order)?;
    let mut sums: BTreeMap<Multi, f64> = BTreeMap::new();
    for (tuple, v) in &t.entries {
        *sums.entry(canonical(tuple)).or_insert(0.0) += v;
    }
    let mut out = SymTensor::zero(t.order)?;
    for (k, s) in sums {
        out.add_value(&k, s / tuple_count(&k));
    }
    Ok(out)
}

/// `f ∘ g = sym(f ⊗ g)`.
pub fn circ(f: &SymTensor, g: &SymTensor) -> Result<SymTensor> {
    let order = f.order + g.order;
    check_order(order)?;
    let mut out = SymTensor::zero(order)?;
    for (kf, vf) in f.values() {
        let cf = tuple_count(kf);
        for (kg, vg) in g.values() {
            let mut key: Multi = kf.clone();
            key.extend_from_slice(kg);
            let key = canonical(&key);
            let v = cf * tuple_count(kg) * vf * vg / tuple_count(&key);
            out.add_value(&key, v);
        }
    }
    Ok(out)
}

/// `prod q_{α_i}` over the runs of a sorted multi-index.
pub fn stratum_q(key: &[u32], model: &Model) -> Result<f64> {
    let mut acc = 1.0;
    for (j, a) in multiplicities(key) {
        acc *= model.table(j as usize)?.q(a);
    }
    Ok(acc)
}

/// Scale `sqrt(prod q_{α_i} / prod α_i!)` of `Â` on the stratum of `key`.
pub fn a_scale(key: &[u32], model: &Model) -> Result<f64> {
    let mut acc = 1.0;
    for (j, a) in multiplicities(key) {
        acc *= model.table(j as usize)?.q(a) / factorial(a);
    }
    Ok(acc.sqrt())
}

/// `⟨f, g⟩_A = n! ⟨Âf, Âg⟩_⊗`, equal to `E[Φ°ⁿ(f) Φ°ⁿ(g)]`.
pub fn a_inner(f: &SymTensor, g: &SymTensor, model: &Model) -> Result<f64> {
    if f.order != g.order {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for (k, cf) in f.strata() {
        if let Some(vg) = g.entries.get(k) {
            acc += cf * vg * tuple_count(k) * stratum_q(k, model)?;
        }
    }
    Ok(acc)
}

pub fn a_norm_sq(f: &SymTensor, model: &Model) -> Result<f64> {
    a_inner(f, f, model)
}

pub fn a_norm(f: &SymTensor, model: &Model) -> Result<f64> {
    Ok(a_norm_sq(f, model)?.sqrt())
}

fn require_order(f: &SymTensor, order: usize) -> Result<()> {
    if f.order == order {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "order-{order} tensor required, got order {}",
            f.order
        )))
    }
}

/// `f ∼₁ f`: the product `(Âf)(Âf)ᵀ` of the scaled coefficient matrix with itself.
/// The returned kernel spans indices `0..=max_index(f)`.
pub fn contract1(f: &SymTensor, model: &Model) -> Result<Kernel2> {
    require_order(f, 2)?;
    let n = f.max_index().map_or(0, |m| m as usize + 1);
    let mut b = Kernel2::zeros(n);
    for (k, v) in f.values() {
        let s = a_scale(k, model)?;
        let (i, j) = (k[0] as usize, k[1] as usize);
        b.set(i, j, v * s);
        b.set(j, i, v * s);
    }
    let mut out = Kernel2::zeros(n);
    // Sparse rows keep this linear in the number of stored entries per row.
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            (0..n)
                .filter_map(|j| {
                    let v = b.get(i, j);
                    (v != 0.0).then_some((j, v))
                })
                .collect()
        })
        .collect();
    for i in 0..n {
        for k in i..n {
            let mut s = 0.0;
            let (ri, rk) = (&rows[i], &rows[k]);
            let (mut a, mut c) = (0, 0);
            while a < ri.len() && c < rk.len() {
                match ri[a].0.cmp(&rk[c].0) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => c += 1,
                    std::cmp::Ordering::Equal => {
                        s += ri[a].1 * rk[c].1;
                        a += 1;
                        c += 1;
                    }
                }
            }
            if s != 0.0 {
                out.set(i, k, s);
                out.set(k, i, s);
            }
        }
    }
    Ok(out)
}

/// Orthogonal projection onto the diagonal strata `e_j ∘ e_j`.
pub fn pi1(f: &SymTensor) -> Result<SymTensor> {
    require_order(f, 2)?;
    Ok(SymTensor {
        order: 2,
        entries: f
            .entries
            .iter()
            .filter(|(k, _)| k[0] == k[1])
            .map(|(k, v)| (k.clone(), *v))
            .collect(),
    })
}

/// All `(k_1..k_r)` with `0 <= k_i <= bound_i` and `sum k_i = k`.
fn decompositions(bounds: &[usize], k: usize) -> Vec<SmallVec<[usize; 4]>> {
    fn rec(bounds: &[usize], k: usize, cur: &mut SmallVec<[usize; 4]>, out: &mut Vec<SmallVec<[usize; 4]>>) {
        match bounds.split_first() {
            None => {
                if k == 0 {
                    out.push(cur.clone());
                }
            }
            Some((&b, rest)) => {
                for ki in 0..=b.min(k) {
                    cur.push(ki);
                    rec(rest, k - ki, cur, out);
                    cur.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    rec(bounds, k, &mut SmallVec::new(), &mut out);
    out
}

/// Lowering operator `a_k^n`: on each stratum `α`, every split `k_1 + … + k_r = k` with
/// `k_i <= α_i` contributes `prod_{k_i != 0} (γ - Γ)_{α_i, α_i - k_i}` to the stratum `α - k`.
pub fn a_op(k: usize, f: &SymTensor, model: &Model) -> Result<SymTensor> {
    let n = f.order;
    if k == 0 || k > n || n > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "lowering a_{k}^{n} requires 1 <= k <= n <= {MAX_ORDER}"
        )));
    }
    let mut out = SymTensor::zero(n - k)?;
    for (key, c) in f.strata() {
        let runs = multiplicities(key);
        let bounds: SmallVec<[usize; 4]> = runs.iter().map(|&(_, a)| a).collect();
        for split in decompositions(&bounds, k) {
            let mut coef = 1.0;
            let mut lowered: Multi = SmallVec::new();
            for (&(j, a), &ki) in runs.iter().zip(&split) {
                if ki != 0 {
                    coef *= model.table(j as usize)?.lowering(a, ki);
                }
                lowered.extend(std::iter::repeat_n(j, a - ki));
            }
            if coef != 0.0 {
                out.add_stratum(&lowered, c * coef);
            }
        }
    }
    Ok(out)
}

/// `C(k, n)` and `A(k, n)` for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupConstants {
    pub n: usize,
    pub c: Vec<f64>,
    pub a: Vec<f64>,
}

fn compositions(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=n {
        for mut rest in compositions(n - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Exhaustive suprema over compositions `α` of `n`, splits `k_i <= α_i` of `k`, and
/// assignments of the model's families to the parts.
///
/// `C(k, n)` is the signed maximum of `prod_{k_i != 0} (γ - Γ)_{α_i, α_i - k_i}`;
/// `A(k, n)` the maximum of `prod q_{α_i - k_i} / prod (α_i - k_i)!`.
pub fn sup_constants(model: &Model, n: usize) -> Result<SupConstants> {
    check_order(n)?;
    let tables = model.tables();
    let mut c = vec![f64::NEG_INFINITY; n + 1];
    let mut a = vec![f64::NEG_INFINITY; n + 1];
    for alpha in compositions(n) {
        let r = alpha.len();
        let assignments = tables.len().pow(r as u32);
        for k in 0..=n {
            for split in decompositions(&alpha, k) {
                for mut code in 0..assignments {
                    let mut cc = 1.0;
                    let mut aa = 1.0;
                    for (&ai, &ki) in alpha.iter().zip(&split) {
                        let t = &tables[code % tables.len()];
                        code /= tables.len();
                        if ki != 0 {
                            cc *= t.lowering(ai, ki);
                        }
                        aa *= t.q(ai - ki) / factorial(ai - ki);
                    }
                    c[k] = c[k].max(cc);
                    a[k] = a[k].max(aa);
                }
            }
        }
    }
    debug_assert!(n <= MAX_DEGREE);
    Ok(SupConstants { n, c, a })
}

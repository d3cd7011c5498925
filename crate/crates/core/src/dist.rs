//! Noise families, raw moments, monic orthogonal polynomials and connection coefficients.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest raw moment tracked.
pub const MAX_MOMENT: usize = 8;
/// Highest orthogonal polynomial degree tracked.
pub const MAX_DEGREE: usize = 4;

/// Distribution of a single driving variable. Every family is centred with unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DistFamily {
    Gaussian,
    Rademacher,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    Uniform,
    /// `E - 1` with `E` standard exponential.
    CenteredExponential,
    /// `sqrt((1-p)/p)` with probability `p`, `-sqrt(p/(1-p))` otherwise.
    TwoPoint(f64),
}

impl DistFamily {
    pub const ALL_BASIC: [DistFamily; 5] = [
        DistFamily::Gaussian,
        DistFamily::Rademacher,
        DistFamily::Uniform,
        DistFamily::CenteredExponential,
        DistFamily::TwoPoint(0.2),
    ];

    pub fn two_point(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Ok(DistFamily::TwoPoint(p))
        } else {
            Err(Error::InvalidArgument(format!(
                "two-point probability must lie in (0, 1), got {p}"
            )))
        }
    }

    /// Atoms `(value, probability)` for finitely supported families.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            DistFamily::Rademacher => Some(vec![(1.0, 0.5), (-1.0, 0.5)]),
            DistFamily::TwoPoint(p) => Some(vec![
                (((1.0 - p) / p).sqrt(), p),
                (-(p / (1.0 - p)).sqrt(), 1.0 - p),
            ]),
            _ => None,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match *self {
            DistFamily::Gaussian | DistFamily::Rademacher | DistFamily::Uniform => true,
            DistFamily::CenteredExponential => false,
            DistFamily::TwoPoint(p) => p == 0.5,
        }
    }
}

impl fmt::Display for DistFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistFamily::Gaussian => f.write_str("gaussian"),
            DistFamily::Rademacher => f.write_str("rademacher"),
            DistFamily::Uniform => f.write_str("uniform"),
            DistFamily::CenteredExponential => f.write_str("exponential"),
            DistFamily::TwoPoint(p) => write!(f, "twopoint:{p}"),
        }
    }
}

impl FromStr for DistFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tag = s.trim().to_ascii_lowercase();
        match tag.as_str() {
            "gaussian" | "normal" => Ok(DistFamily::Gaussian),
            "rademacher" => Ok(DistFamily::Rademacher),
            "uniform" => Ok(DistFamily::Uniform),
            "exponential" | "exp" | "centered-exponential" | "centeredexponential" => {
                Ok(DistFamily::CenteredExponential)
            }
            _ => {
                if let Some(p) = tag.strip_prefix("twopoint:") {
                    let p: f64 = p
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad two-point parameter in `{s}`")))?;
                    DistFamily::two_point(p)
                } else {
                    Err(Error::Parse(format!("unknown distribution family `{s}`")))
                }
            }
        }
    }
}

impl TryFrom<String> for DistFamily {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DistFamily> for String {
    fn from(f: DistFamily) -> String {
        f.to_string()
    }
}

/// Raw moments `m_0..m_8`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub m: [f64; MAX_MOMENT + 1],
    /// Support size for finitely atomic laws.
    pub atoms: Option<usize>,
}

impl MomentTable {
    pub fn get(&self, k: usize) -> f64 {
        self.m[k]
    }

    /// `E[p(X)]` for ascending coefficients `p`.
    pub fn expect_poly(&self, coeffs: &[f64]) -> f64 {
        coeffs.iter().enumerate().map(|(k, c)| c * self.m[k]).sum()
    }
}

pub fn moments(family: DistFamily) -> MomentTable {
    let mut m = [0.0; MAX_MOMENT + 1];
    match family {
        DistFamily::Gaussian => {
            m[0] = 1.0;
            for k in (2..=MAX_MOMENT).step_by(2) {
                m[k] = m[k - 2] * (k - 1) as f64;
            }
        }
        DistFamily::Rademacher => {
            for k in (0..=MAX_MOMENT).step_by(2) {
                m[k] = 1.0;
            }
        }
        DistFamily::Uniform => {
            for k in (0..=MAX_MOMENT).step_by(2) {
                m[k] = 3f64.powi(k as i32 / 2) / (k + 1) as f64;
            }
        }
        DistFamily::CenteredExponential => {
            // Derangement numbers: E[(E-1)^n] = (n-1)(m_{n-1} + m_{n-2}).
            m[0] = 1.0;
            for k in 2..=MAX_MOMENT {
                m[k] = (k - 1) as f64 * (m[k - 1] + m[k - 2]);
            }
        }
        DistFamily::TwoPoint(_) => {
            let atoms = family.atoms().expect("two-point family has atoms");
            for (k, slot) in m.iter_mut().enumerate() {
                *slot = atoms.iter().map(|(x, p)| p * x.powi(k as i32)).sum();
            }
            m[0] = 1.0;
            m[1] = 0.0;
            m[2] = 1.0;
        }
    }
    MomentTable {
        m,
        atoms: family.atoms().map(|a| a.len()),
    }
}

fn poly_mul_x(p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend_from_slice(p);
    out
}

fn poly_axpy(a: f64, x: &[f64], y: &mut Vec<f64>) {
    if y.len() < x.len() {
        y.resize(x.len(), 0.0);
    }
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn poly_square(p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 2 * p.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in p.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// `gamma[n][m]` with `x^n = sum_m gamma[n][m] P_m(x)`, for monic `P_0..P_4`.
fn connection(polys: &[Vec<f64>]) -> [[f64; MAX_DEGREE + 1]; MAX_DEGREE + 1] {
    let mut gamma = [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1];
    for n in 0..=MAX_DEGREE {
        let mut rest = vec![0.0; n + 1];
        rest[n] = 1.0;
        for m in (0..=n).rev() {
            let c = rest[m];
            gamma[n][m] = c;
            poly_axpy(-c, &polys[m], &mut rest);
        }
    }
    gamma
}

fn hermite_polys() -> Vec<Vec<f64>> {
    let mut h = vec![vec![1.0], vec![0.0, 1.0]];
    for n in 1..MAX_DEGREE {
        let mut next = poly_mul_x(&h[n]);
        poly_axpy(-(n as f64), &h[n - 1].clone(), &mut next);
        h.push(next);
    }
    h
}

/// Monic orthogonal polynomials of one family, with their norms and connection data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OPolyTable {
    pub family: DistFamily,
    pub moments: MomentTable,
    /// Ascending coefficients of `P_0..P_4`.
    pub polys: Vec<Vec<f64>>,
    /// Recurrence `P_{n+1} = (x - alpha_n) P_n - beta_n P_{n-1}`.
    pub alpha: [f64; MAX_DEGREE],
    pub beta: [f64; MAX_DEGREE],
    /// `q_n = E[P_n(X)^2]`; exactly zero from the atom count on.
    pub q: [f64; MAX_DEGREE + 1],
    pub gamma: [[f64; MAX_DEGREE + 1]; MAX_DEGREE + 1],
    pub hermite_gamma: [[f64; MAX_DEGREE + 1]; MAX_DEGREE + 1],
}

/// Builds the orthogonal polynomial table of `family` from its moments.
pub fn orthopoly(family: DistFamily) -> Result<OPolyTable> {
    orthopoly_from(family, moments(family))
}

pub fn orthopoly_from(family: DistFamily, table: MomentTable) -> Result<OPolyTable> {
    let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
    let mut q = [0.0; MAX_DEGREE + 1];
    let mut alpha = [0.0; MAX_DEGREE];
    let mut beta = [0.0; MAX_DEGREE];
    q[0] = 1.0;
    let null_from = table.atoms.unwrap_or(usize::MAX);

    for n in 0..MAX_DEGREE {
        let p = &polys[n];
        let (a, b) = if n >= null_from {
            // P_n already vanishes on the support; any multiple keeps doing so.
            (0.0, 0.0)
        } else {
            let sq = poly_square(p);
            let a = table.expect_poly(&poly_mul_x(&sq)) / q[n];
            let b = if n == 0 { 0.0 } else { q[n] / q[n - 1] };
            (a, b)
        };
        alpha[n] = a;
        beta[n] = b;
        let mut next = poly_mul_x(p);
        poly_axpy(-a, p, &mut next);
        if n > 0 {
            poly_axpy(-b, &polys[n - 1].clone(), &mut next);
        }
        let qn = if n + 1 >= null_from {
            0.0
        } else {
            let v = table.expect_poly(&poly_square(&next));
            let scale = 1.0 + table.m[2 * (n + 1)].abs();
            if !(v > 1e-12 * scale) {
                return Err(Error::DegenerateHankel {
                    family: family.to_string(),
                    degree: n + 1,
                    norm: v,
                });
            }
            v
        };
        q[n + 1] = qn;
        polys.push(next);
    }

    let gamma = connection(&polys);
    let hermite_gamma = connection(&hermite_polys());
    Ok(OPolyTable {
        family,
        moments: table,
        polys,
        alpha,
        beta,
        q,
        gamma,
        hermite_gamma,
    })
}

impl OPolyTable {
    /// `P_0(x)..P_4(x)` by the three-term recurrence.
    pub fn eval_all(&self, x: f64) -> [f64; MAX_DEGREE + 1] {
        let mut out = [0.0; MAX_DEGREE + 1];
        out[0] = 1.0;
        out[1] = x - self.alpha[0];
        for n in 1..MAX_DEGREE {
            out[n + 1] = (x - self.alpha[n]) * out[n] - self.beta[n] * out[n - 1];
        }
        out
    }

    pub fn eval(&self, n: usize, x: f64) -> f64 {
        self.eval_all(x)[n]
    }

    pub fn q(&self, n: usize) -> f64 {
        self.q[n]
    }

    pub fn is_null(&self, n: usize) -> bool {
        self.q[n] == 0.0
    }

    /// `gamma_{a, a-k} - Gamma_{a, a-k}`, zero when `k > a`.
    pub fn lowering(&self, a: usize, k: usize) -> f64 {
        if k > a {
            0.0
        } else {
            self.gamma[a][a - k] - self.hermite_gamma[a][a - k]
        }
    }

    pub fn m3(&self) -> f64 {
        self.moments.m[3]
    }

    pub fn m4(&self) -> f64 {
        self.moments.m[4]
    }
}

/// Assignment of families to basis indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Homogeneous(DistFamily),
    PerIndex(Vec<DistFamily>),
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// `gaussian`, `twopoint:0.2`, or a comma-separated per-index list.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
        match parts.len() {
            0 => Err(Error::Parse("empty model tag".into())),
            1 => Ok(ModelSpec::Homogeneous(parts[0].parse()?)),
            _ => Ok(ModelSpec::PerIndex(
                parts.iter().map(|p| p.parse()).collect::<Result<_>>()?,
            )),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Homogeneous(fam) => write!(f, "{fam}"),
            ModelSpec::PerIndex(list) => {
                let tags: Vec<String> = list.iter().map(|x| x.to_string()).collect();
                f.write_str(&tags.join(","))
            }
        }
    }
}

/// Families with their precomputed tables, shared between chaos elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ModelSpec,
    tables: Vec<OPolyTable>,
    slot_of: Vec<usize>,
}

pub type ModelRef = Arc<Model>;

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        match &spec {
            ModelSpec::Homogeneous(f) => {
                let tables = vec![orthopoly(*f)?];
                Ok(Self {
                    spec,
                    tables,
                    slot_of: Vec::new(),
                })
            }
            ModelSpec::PerIndex(list) => {
                if list.is_empty() {
                    return Err(Error::InvalidArgument("empty per-index model".into()));
                }
                let mut tables: Vec<OPolyTable> = Vec::new();
                let mut slot_of = Vec::with_capacity(list.len());
                for f in list {
                    let slot = match tables.iter().position(|t| t.family == *f) {
                        Some(s) => s,
                        None => {
                            tables.push(orthopoly(*f)?);
                            tables.len() - 1
                        }
                    };
                    slot_of.push(slot);
                }
                Ok(Self {
                    spec,
                    tables,
                    slot_of,
                })
            }
        }
    }

    pub fn homogeneous(family: DistFamily) -> Result<ModelRef> {
        Ok(Arc::new(Self::new(ModelSpec::Homogeneous(family))?))
    }

    pub fn per_index(families: Vec<DistFamily>) -> Result<ModelRef> {
        Ok(Arc::new(Self::new(ModelSpec::PerIndex(families))?))
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn tag(&self) -> String {
        self.spec.to_string()
    }

    /// Number of assigned indices, or `None` when every index is covered.
    pub fn len(&self) -> Option<usize> {
        match self.spec {
            ModelSpec::Homogeneous(_) => None,
            ModelSpec::PerIndex(_) => Some(self.slot_of.len()),
        }
    }

    pub fn covers(&self, n: usize) -> bool {
        self.len().is_none_or(|len| n <= len)
    }

    pub fn table(&self, j: usize) -> Result<&OPolyTable> {
        match self.spec {
            ModelSpec::Homogeneous(_) => Ok(&self.tables[0]),
            ModelSpec::PerIndex(_) => self
                .slot_of
                .get(j)
                .map(|&s| &self.tables[s])
                .ok_or(Error::UnassignedIndex(j)),
        }
    }

    pub fn family(&self, j: usize) -> Result<DistFamily> {
        Ok(self.table(j)?.family)
    }

    /// Distinct tables in first-use order.
    pub fn tables(&self) -> &[OPolyTable] {
        &self.tables
    }

    pub fn is_gaussian(&self) -> bool {
        self.tables.iter().all(|t| t.family == DistFamily::Gaussian)
    }
}

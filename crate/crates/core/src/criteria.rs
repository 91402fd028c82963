//! Optimality criteria, efficiencies and equivalence-theorem dispersion
//! functions.
//!
//! Every criterion is a convex function `Phi` of the information matrix. The
//! solvers work with the smooth internal form (`log det I^-1` for D) while
//! [`objective`] reports the conventional scale (`det I^-1`).

use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};
use crate::linalg::{self, Mat3, Mat6, SymEigen3, Vec3};
use crate::model::{ApproximateDesign, DesignSpace};

/// Condition number above which `I^-1` is treated as nonexistent.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Relative eigengap under which the smallest eigenvalue counts as repeated.
pub const MULTIPLICITY_GAP: f64 = 1e-7;

const DS_DIRECTION: [f64; 3] = [1.0, 0.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CriterionKind {
    D,
    A,
    Ds,
    C,
    E,
}

impl CriterionKind {
    pub fn label(&self) -> &'static str {
        match self {
            CriterionKind::D => "D",
            CriterionKind::A => "A",
            CriterionKind::Ds => "Ds",
            CriterionKind::C => "c",
            CriterionKind::E => "E",
        }
    }

    /// Parses the labels used in problem files and table headers.
    pub fn parse(label: &str) -> Result<Self> {
        match label.trim().to_ascii_lowercase().as_str() {
            "d" => Ok(CriterionKind::D),
            "a" => Ok(CriterionKind::A),
            "ds" | "d_s" => Ok(CriterionKind::Ds),
            "c" => Ok(CriterionKind::C),
            "e" => Ok(CriterionKind::E),
            other => Err(DesignError::invalid(format!(
                "unknown criterion '{other}', expected one of D, A, Ds, c, E"
            ))),
        }
    }
}

/// A criterion kind together with its direction vector where one applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionSpec {
    kind: CriterionKind,
    direction: Option<[f64; 3]>,
}

impl CriterionSpec {
    pub fn d() -> Self {
        Self { kind: CriterionKind::D, direction: None }
    }

    pub fn a() -> Self {
        Self { kind: CriterionKind::A, direction: None }
    }

    /// D_s-optimality for the prevalence, i.e. c-optimality along `(1, 0, 0)`.
    pub fn ds() -> Self {
        Self { kind: CriterionKind::Ds, direction: Some(DS_DIRECTION) }
    }

    pub fn c(direction: [f64; 3]) -> Result<Self> {
        if direction.iter().any(|v| !v.is_finite()) || direction.iter().all(|v| *v == 0.0) {
            return Err(DesignError::invalid(format!(
                "c-criterion direction must be finite and nonzero, got {direction:?}"
            )));
        }
        Ok(Self { kind: CriterionKind::C, direction: Some(direction) })
    }

    pub fn e() -> Self {
        Self { kind: CriterionKind::E, direction: None }
    }

    /// Builds a spec from a kind; `direction` is required for `C` and ignored
    /// otherwise.
    pub fn from_kind(kind: CriterionKind, direction: Option<[f64; 3]>) -> Result<Self> {
        match kind {
            CriterionKind::D => Ok(Self::d()),
            CriterionKind::A => Ok(Self::a()),
            CriterionKind::Ds => Ok(Self::ds()),
            CriterionKind::E => Ok(Self::e()),
            CriterionKind::C => Self::c(direction.ok_or_else(|| {
                DesignError::invalid("the c-criterion needs a direction vector")
            })?),
        }
    }

    pub fn kind(&self) -> CriterionKind {
        self.kind
    }

    pub fn direction(&self) -> Option<Vec3> {
        self.direction.map(Vec3::from)
    }

    pub fn label(&self) -> &'static str {
        self.kind.label()
    }

    pub(crate) fn phi(&self) -> Phi {
        match self.kind {
            CriterionKind::D => Phi::LogDet,
            CriterionKind::A => Phi::Trace,
            CriterionKind::Ds | CriterionKind::C => {
                Phi::Quad(Vec3::from(self.direction.unwrap_or(DS_DIRECTION)))
            }
            CriterionKind::E => Phi::NegMinEig,
        }
    }

    /// Converts the internal `Phi` value to the reported objective scale.
    pub(crate) fn to_objective(&self, phi: f64) -> f64 {
        match self.kind {
            CriterionKind::D => phi.exp(),
            _ => phi,
        }
    }

    pub(crate) fn from_objective(&self, objective: f64) -> f64 {
        match self.kind {
            CriterionKind::D => objective.ln(),
            _ => objective,
        }
    }
}

/// A criterion paired with its optimal objective value for one problem
/// instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchoredCriterion {
    pub spec: CriterionSpec,
    pub anchor: f64,
}

impl AnchoredCriterion {
    pub fn new(spec: CriterionSpec, anchor: f64) -> Result<Self> {
        let ok = anchor.is_finite()
            && match spec.kind {
                CriterionKind::E => anchor < 0.0,
                _ => anchor > 0.0,
            };
        if !ok {
            return Err(DesignError::invalid(format!(
                "anchor {anchor} is inconsistent with the {} criterion",
                spec.label()
            )));
        }
        Ok(Self { spec, anchor })
    }

    /// The anchor on the internal `Phi` scale (`log` for D).
    pub fn phi_anchor(&self) -> f64 {
        self.spec.from_objective(self.anchor)
    }

    /// Efficiency of a design with the given objective value.
    pub fn efficiency_of(&self, objective: f64) -> f64 {
        if !objective.is_finite() {
            return 0.0;
        }
        match self.spec.kind {
            CriterionKind::D => (self.anchor / objective).cbrt(),
            CriterionKind::A | CriterionKind::Ds | CriterionKind::C => self.anchor / objective,
            CriterionKind::E => {
                if objective >= 0.0 {
                    0.0
                } else {
                    objective / self.anchor
                }
            }
        }
    }
}

/// Internal convex criterion functions of the information matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Phi {
    /// `-log det I`
    LogDet,
    /// `tr I^-1`
    Trace,
    /// `c^T I^-1 c`
    Quad(Vec3),
    /// `-lambda_min(I)`
    NegMinEig,
    /// Smoothed `-lambda_min(I)`: `mu log sum_k exp(-lambda_k / mu)`.
    SoftNegMinEig(f64),
}

/// Value and gradient of a criterion at one information matrix.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PhiEval {
    pub value: f64,
    /// `dPhi/dI`, so that `dPhi = <grad, dI>`.
    pub grad: Mat3,
}

/// Inverse of a well-conditioned symmetric positive definite matrix together
/// with `log det`.
fn spd_inverse(info: &Mat3) -> Option<(Mat3, f64)> {
    let info = linalg::symmetrize(info);
    let e = linalg::sym_eigen3(&info);
    if !(linalg::condition_number(&e) <= SINGULAR_CONDITION) {
        return None;
    }
    let chol = nalgebra::Cholesky::new(info)?;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Some((linalg::symmetrize(&chol.inverse()), logdet))
}

impl Phi {
    pub fn value(&self, info: &Mat3) -> f64 {
        match self {
            Phi::NegMinEig => -linalg::min_eigenvalue(info),
            Phi::SoftNegMinEig(mu) => soft_neg_min(&linalg::sym_eigen3(info), *mu).0,
            _ => match spd_inverse(info) {
                None => f64::INFINITY,
                Some((inv, logdet)) => match self {
                    Phi::LogDet => -logdet,
                    Phi::Trace => inv.trace(),
                    Phi::Quad(c) => c.dot(&(inv * c)),
                    _ => unreachable!(),
                },
            },
        }
    }

    /// Value and gradient; `None` when the criterion is infinite at `info`.
    pub fn eval(&self, info: &Mat3) -> Option<PhiEval> {
        match self {
            Phi::NegMinEig => {
                let e = linalg::sym_eigen3(info);
                let v = e.vector(0);
                Some(PhiEval { value: -e.values[0], grad: -(v * v.transpose()) })
            }
            Phi::SoftNegMinEig(mu) => {
                let e = linalg::sym_eigen3(info);
                let (value, p) = soft_neg_min(&e, *mu);
                let mut grad = Mat3::zeros();
                for k in 0..3 {
                    let v = e.vector(k);
                    grad -= v * v.transpose() * p[k];
                }
                Some(PhiEval { value, grad })
            }
            _ => {
                let (inv, logdet) = spd_inverse(info)?;
                Some(match self {
                    Phi::LogDet => PhiEval { value: -logdet, grad: -inv },
                    Phi::Trace => PhiEval { value: inv.trace(), grad: -(inv * inv) },
                    Phi::Quad(c) => {
                        let z = inv * c;
                        PhiEval { value: c.dot(&z), grad: -(z * z.transpose()) }
                    }
                    _ => unreachable!(),
                })
            }
        }
    }

    /// Hessian of `Phi` as a bilinear form on symmetric matrices, in the
    /// `svec` basis. `None` where the criterion is infinite or not twice
    /// differentiable.
    pub fn hessian(&self, info: &Mat3) -> Option<Mat6> {
        match self {
            Phi::LogDet | Phi::Trace | Phi::Quad(_) => {
                let (inv, _) = spd_inverse(info)?;
                Some(match self {
                    Phi::LogDet => linalg::bilinear_matrix(|y| inv * y * inv),
                    Phi::Trace => {
                        let inv2 = inv * inv;
                        linalg::bilinear_matrix(|y| inv * y * inv2 + inv2 * y * inv)
                    }
                    Phi::Quad(c) => {
                        let z = inv * c;
                        let zz = z * z.transpose();
                        linalg::bilinear_matrix(|y| inv * y * zz + zz * y * inv)
                    }
                    _ => unreachable!(),
                })
            }
            Phi::NegMinEig => {
                let e = linalg::sym_eigen3(info);
                if e.min_multiplicity(MULTIPLICITY_GAP) > 1 {
                    return None;
                }
                let v1 = e.vector(0);
                Some(linalg::bilinear_matrix(|y| {
                    let mut out = Mat3::zeros();
                    for k in 1..3 {
                        let vk = e.vector(k);
                        let coef = v1.dot(&(y * vk)) / (e.values[k] - e.values[0]);
                        out += (v1 * vk.transpose() + vk * v1.transpose()) * coef;
                    }
                    out
                }))
            }
            Phi::SoftNegMinEig(_) => None,
        }
    }
}

/// Value of the smoothed `-lambda_min` and the softmax weights over the
/// eigenvalues.
fn soft_neg_min(e: &SymEigen3, mu: f64) -> (f64, [f64; 3]) {
    let lmin = e.values[0];
    let mut p = [0.0; 3];
    let mut total = 0.0;
    for k in 0..3 {
        p[k] = (-(e.values[k] - lmin) / mu).exp();
        total += p[k];
    }
    p.iter_mut().for_each(|x| *x /= total);
    (-lmin + mu * total.ln(), p)
}

fn check_grid(design: &ApproximateDesign, space: &DesignSpace) -> Result<()> {
    if design.grid() != space.grid() {
        return Err(DesignError::invalid(format!(
            "design grid M={} does not match the design space M={}",
            design.grid().max_size(),
            space.grid().max_size()
        )));
    }
    Ok(())
}

/// Objective value: `det I^-1` (D), `tr I^-1` (A), `c^T I^-1 c` (Ds, c) or
/// `-lambda_min(I)` (E). Singular information gives `+inf` for every kind but E.
pub fn objective(spec: &CriterionSpec, design: &ApproximateDesign, space: &DesignSpace) -> Result<f64> {
    check_grid(design, space)?;
    let info = space.info_raw(design.weights());
    Ok(spec.to_objective(spec.phi().value(&info)))
}

/// Efficiency in `[0, 1]` of `design` relative to the anchor.
pub fn efficiency(anchored: &AnchoredCriterion, design: &ApproximateDesign, space: &DesignSpace) -> Result<f64> {
    Ok(anchored.efficiency_of(objective(&anchored.spec, design, space)?))
}

/// One efficiency per anchor.
pub fn efficiency_table(
    design: &ApproximateDesign,
    anchors: &[AnchoredCriterion],
    space: &DesignSpace,
) -> Result<Vec<f64>> {
    anchors.iter().map(|a| efficiency(a, design, space)).collect()
}

/// Dispersion function `d(u, w)` of `spec` at group size `u`.
pub fn dispersion(spec: &CriterionSpec, u: usize, design: &ApproximateDesign, space: &DesignSpace) -> Result<f64> {
    check_grid(design, space)?;
    if u == 0 || u > space.len() {
        return Err(DesignError::invalid(format!("group size {u} is outside 1..={}", space.len())));
    }
    Ok(dispersion_curve(spec, &space.info_raw(design.weights()), space)?[u - 1])
}

/// Largest dispersion over the grid and the smallest group size attaining it.
pub fn dispersion_max(spec: &CriterionSpec, design: &ApproximateDesign, space: &DesignSpace) -> Result<(usize, f64)> {
    check_grid(design, space)?;
    let curve = dispersion_curve(spec, &space.info_raw(design.weights()), space)?;
    Ok(argmax(&curve))
}

/// `(1-based index, value)` of the maximum, ties to the smallest index.
pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    (best.0 + 1, best.1)
}

/// Dispersion values at every grid point for the information matrix `info`.
pub(crate) fn dispersion_curve(spec: &CriterionSpec, info: &Mat3, space: &DesignSpace) -> Result<Vec<f64>> {
    match spec.kind {
        CriterionKind::E => Ok(e_certificate(info, space).values),
        _ => {
            let eval = spec.phi().eval(info).ok_or(DesignError::SingularInformation)?;
            Ok(gradient_gaps(&eval, info, space))
        }
    }
}

/// `<G, I> - <G, A_u>` for every grid point: the Frank-Wolfe gap toward each
/// vertex, which equals the classical dispersion function.
pub(crate) fn gradient_gaps(eval: &PhiEval, info: &Mat3, space: &DesignSpace) -> Vec<f64> {
    let g = linalg::svec(&eval.grad);
    let base = linalg::frob(&eval.grad, info);
    space
        .atoms()
        .iter()
        .map(|a| base - g.iter().zip(&a.svec).map(|(x, y)| x * y).sum::<f64>())
        .collect()
}

/// E-criterion certificate: dispersion values under the best trace-one PSD
/// matrix `B` on the eigenspace of `lambda_min`.
#[derive(Debug, Clone)]
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) struct ECertificate {
    pub values: Vec<f64>,
    pub multiplicity: usize,
    /// `Q B Q^T` in the original coordinates.
    pub direction: Mat3,
}

pub(crate) fn e_certificate(info: &Mat3, space: &DesignSpace) -> ECertificate {
    let e = linalg::sym_eigen3(info);
    let r = e.min_multiplicity(MULTIPLICITY_GAP);
    let lmin = e.values[0];
    let q: Vec<Vec3> = (0..r).map(|k| e.vector(k)).collect();
    let b = match r {
        1 => Mat3::identity(),
        2 => search_b2(&q, lmin, space),
        _ => search_b3(space),
    };
    let mut direction = Mat3::zeros();
    for i in 0..r {
        for j in 0..r {
            direction += q[i] * q[j].transpose() * b[(i, j)];
        }
    }
    let values = e_values(&direction, lmin, space);
    ECertificate { values, multiplicity: r, direction }
}

fn e_values(direction: &Mat3, lmin: f64, space: &DesignSpace) -> Vec<f64> {
    let g = linalg::svec(direction);
    space
        .atoms()
        .iter()
        .map(|a| g.iter().zip(&a.svec).map(|(x, y)| x * y).sum::<f64>() - lmin)
        .collect()
}

/// Grid search over the disk parameterization `B = (I + x Z + y X) / 2`,
/// refined around the incumbent down to resolution 1e-3.
fn search_b2(q: &[Vec3], lmin: f64, space: &DesignSpace) -> Mat3 {
    let proj: Vec<(f64, f64, f64)> = space
        .atoms()
        .iter()
        .map(|a| {
            let y0 = q[0].dot(&a.f);
            let y1 = q[1].dot(&a.f);
            (a.lambda * y0 * y0, a.lambda * 2.0 * y0 * y1, a.lambda * y1 * y1)
        })
        .collect();
    let worst = |x: f64, y: f64| {
        let (b00, b01, b11) = ((1.0 + x) / 2.0, y / 2.0, (1.0 - x) / 2.0);
        proj.iter()
            .map(|(s00, s01, s11)| s00 * b00 + s01 * b01 + s11 * b11 - lmin)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut best = (0.0, 0.0, worst(0.0, 0.0));
    for (half_width, step) in [(1.0, 0.05), (0.05, 0.005), (0.005, 0.001)] {
        let (cx, cy) = (best.0, best.1);
        let n = (half_width / step as f64).round() as i64;
        for i in -n..=n {
            for j in -n..=n {
                let x = cx + i as f64 * step;
                let y = cy + j as f64 * step;
                if x * x + y * y > 1.0 {
                    continue;
                }
                let v = worst(x, y);
                if v < best.2 {
                    best = (x, y, v);
                }
            }
        }
    }
    let (x, y) = (best.0, best.1);
    let mut b = Mat3::zeros();
    b[(0, 0)] = (1.0 + x) / 2.0;
    b[(1, 1)] = (1.0 - x) / 2.0;
    b[(0, 1)] = y / 2.0;
    b[(1, 0)] = y / 2.0;
    b
}

/// Triple smallest eigenvalue: minimize the smoothed maximum of
/// `<B, lambda_u f_u f_u^T>` over the trace-one PSD cone by Frank-Wolfe.
fn search_b3(space: &DesignSpace) -> Mat3 {
    let atoms = space.atoms();
    let scale = atoms.iter().map(|a| a.info.trace()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mu = 1e-6 * scale;
    let mut b = Mat3::identity() / 3.0;
    let mut best = (b, f64::INFINITY);
    for k in 0..4000 {
        let vals: Vec<f64> = atoms.iter().map(|a| linalg::frob(&b, &a.info)).collect();
        let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top < best.1 {
            best = (b, top);
        }
        let mut grad = Mat3::zeros();
        let mut total = 0.0;
        for (a, v) in atoms.iter().zip(&vals) {
            let p = ((v - top) / mu).exp();
            total += p;
            grad += a.info * p;
        }
        grad /= total;
        let v = linalg::sym_eigen3(&grad).vector(0);
        let gamma = 2.0 / (k as f64 + 2.0);
        b = b * (1.0 - gamma) + v * v.transpose() * gamma;
    }
    best.0
}

/// Hessian of `w -> Phi(I(w))` restricted to `indices`: `J^T P J`.
pub(crate) fn restricted_hessian(p: &Mat6, space: &DesignSpace, indices: &[usize]) -> nalgebra::DMatrix<f64> {
    let n = indices.len();
    let cols: Vec<nalgebra::SVector<f64, 6>> = indices
        .iter()
        .map(|&i| nalgebra::SVector::<f64, 6>::from(space.atoms()[i].svec))
        .collect();
    let pj: Vec<nalgebra::SVector<f64, 6>> = cols.iter().map(|c| p * c).collect();
    let mut h = nalgebra::DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = cols[a].dot(&pj[b]);
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    h
}

/// Per-point gradient `<G, A_i>` of `w -> Phi(I(w))`.
pub(crate) fn weight_gradient(grad: &Mat3, space: &DesignSpace) -> Vec<f64> {
    let g = linalg::svec(grad);
    space
        .atoms()
        .iter()
        .map(|a| g.iter().zip(&a.svec).map(|(x, y)| x * y).sum())
        .collect()
}

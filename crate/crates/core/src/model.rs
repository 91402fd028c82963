//! The group-testing response model, its cost structure, and the Fisher
//! information matrix of a design on the grid `{1, ..., M}`.

use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};
use crate::linalg::{self, Mat3, SymEigen3, Vec3};

/// Largest supported group size.
pub const MAX_GRID: usize = 10_000;

/// Nominal parameters: prevalence `p0`, sensitivity `p1`, specificity `p2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    p0: f64,
    p1: f64,
    p2: f64,
}

impl ModelParams {
    pub fn new(p0: f64, p1: f64, p2: f64) -> Result<Self> {
        if !(p0 > 0.0 && p0 < 1.0) {
            return Err(DesignError::invalid(format!(
                "prevalence p0 must lie in (0, 1), got {p0}"
            )));
        }
        for (name, p) in [("sensitivity p1", p1), ("specificity p2", p2)] {
            if !(p > 0.5 && p <= 1.0) {
                return Err(DesignError::invalid(format!(
                    "{name} must lie in (0.5, 1], got {p}"
                )));
            }
        }
        Ok(Self { p0, p1, p2 })
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    /// `p1 + p2 - 1`, strictly positive under the invariants.
    pub fn discrimination(&self) -> f64 {
        self.p1 + self.p2 - 1.0
    }

    /// `(1 - p0)^x`, evaluated through the logarithm so large group sizes do not
    /// accumulate rounding from repeated multiplication.
    pub fn negative_fraction(&self, x: f64) -> f64 {
        (x * (-self.p0).ln_1p()).exp()
    }
}

/// Standardized per-trial cost `c(x) = 1 - q + q x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    q: f64,
}

impl CostModel {
    pub fn new(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(DesignError::invalid(format!("cost share q must lie in [0, 1], got {q}")));
        }
        Ok(Self { q })
    }

    /// From the raw per-assay cost `q0` and per-subject cost `q1`.
    pub fn from_raw(q0: f64, q1: f64) -> Result<Self> {
        if !(q0 >= 0.0 && q1 >= 0.0 && q0 + q1 > 0.0) {
            return Err(DesignError::invalid(format!(
                "raw costs need q0 >= 0, q1 >= 0 and q0 + q1 > 0, got q0={q0}, q1={q1}"
            )));
        }
        Self::new(q1 / (q0 + q1))
    }

    pub fn unit() -> Self {
        Self { q: 0.0 }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Converts a raw budget `C0` to the standardized budget `C0 / (q0 + q1)`.
    pub fn standardize_budget(raw_budget: f64, q0: f64, q1: f64) -> f64 {
        raw_budget / (q0 + q1)
    }
}

/// The contiguous design space `{1, ..., M}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignGrid {
    max_size: usize,
}

impl DesignGrid {
    pub fn new(max_size: usize) -> Result<Self> {
        if max_size < 3 {
            return Err(DesignError::invalid(format!(
                "the grid needs at least 3 group sizes to support 3 parameters, got M={max_size}"
            )));
        }
        if max_size > MAX_GRID {
            return Err(DesignError::invalid(format!(
                "M={max_size} exceeds the supported maximum of {MAX_GRID}"
            )));
        }
        Ok(Self { max_size })
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn len(&self) -> usize {
        self.max_size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sizes(&self) -> impl Iterator<Item = usize> {
        1..=self.max_size
    }
}

/// Positive response probability `pi(x) = p1 - (p1 + p2 - 1)(1 - p0)^x`.
pub fn positive_prob(x: usize, params: &ModelParams) -> f64 {
    params.p1 - params.discrimination() * params.negative_fraction(x as f64)
}

fn negative_prob(x: usize, params: &ModelParams) -> f64 {
    (1.0 - params.p1) + params.discrimination() * params.negative_fraction(x as f64)
}

pub fn unit_cost(x: usize, cost: &CostModel) -> f64 {
    1.0 - cost.q + cost.q * x as f64
}

/// Gradient of [`positive_prob`] with respect to `(p0, p1, p2)`.
pub fn regressor(x: usize, params: &ModelParams) -> Vec3 {
    let xf = x as f64;
    let a = params.negative_fraction(xf);
    Vec3::new(
        xf * params.discrimination() * params.negative_fraction(xf - 1.0),
        1.0 - a,
        -a,
    )
}

/// Efficiency weight `lambda(x) = 1 / [c(x) pi(x) (1 - pi(x))]`.
pub fn weight_fn(x: usize, params: &ModelParams, cost: &CostModel) -> f64 {
    1.0 / (unit_cost(x, cost) * positive_prob(x, params) * negative_prob(x, params))
}

/// Source of the per-point efficiency weight, regressor vector and unit cost.
///
/// [`GroupTestingModel`] is the standard implementation; other models with a
/// three-parameter information matrix linear in the design weights plug in
/// here.
pub trait RegressorModel {
    fn weight(&self, x: usize) -> f64;
    fn regressor(&self, x: usize) -> Vec3;
    fn unit_cost(&self, x: usize) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupTestingModel {
    pub params: ModelParams,
    pub cost: CostModel,
}

impl RegressorModel for GroupTestingModel {
    fn weight(&self, x: usize) -> f64 {
        weight_fn(x, &self.params, &self.cost)
    }

    fn regressor(&self, x: usize) -> Vec3 {
        regressor(x, &self.params)
    }

    fn unit_cost(&self, x: usize) -> f64 {
        unit_cost(x, &self.cost)
    }
}

/// One candidate group size with its precomputed rank-one information.
#[derive(Debug, Clone)]
pub(crate) struct Atom {
    pub lambda: f64,
    pub f: Vec3,
    pub cost: f64,
    /// `lambda f f^T`
    pub info: Mat3,
    /// [`linalg::svec`] of `info`
    pub svec: [f64; 6],
}

/// A design grid together with the model evaluated at every grid point.
#[derive(Debug, Clone)]
pub struct DesignSpace {
    grid: DesignGrid,
    model: Option<GroupTestingModel>,
    atoms: Vec<Atom>,
}

impl DesignSpace {
    pub fn new(params: ModelParams, cost: CostModel, grid: DesignGrid) -> Self {
        let model = GroupTestingModel { params, cost };
        let mut space = Self::from_model(&model, grid);
        space.model = Some(model);
        space
    }

    /// Builds the space from any [`RegressorModel`].
    pub fn from_model(model: &impl RegressorModel, grid: DesignGrid) -> Self {
        let atoms = grid
            .sizes()
            .map(|x| {
                let lambda = model.weight(x);
                let f = model.regressor(x);
                let info = f * f.transpose() * lambda;
                Atom {
                    lambda,
                    f,
                    cost: model.unit_cost(x),
                    info,
                    svec: linalg::svec(&info),
                }
            })
            .collect();
        Self {
            grid,
            model: None,
            atoms,
        }
    }

    pub fn grid(&self) -> DesignGrid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The group-testing model behind this space, when built with [`DesignSpace::new`].
    pub fn model(&self) -> Option<&GroupTestingModel> {
        self.model.as_ref()
    }

    pub(crate) fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub(crate) fn atom(&self, x: usize) -> &Atom {
        &self.atoms[x - 1]
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.atom(x).lambda
    }

    pub fn regressor(&self, x: usize) -> Vec3 {
        self.atom(x).f
    }

    pub fn unit_cost(&self, x: usize) -> f64 {
        self.atom(x).cost
    }

    /// `sum_i w_i lambda(x_i) f(x_i) f(x_i)^T` over the full grid.
    pub fn info(&self, weights: &[f64]) -> InfoMatrix {
        debug_assert_eq!(weights.len(), self.atoms.len());
        InfoMatrix(self.info_raw(weights))
    }

    pub(crate) fn info_raw(&self, weights: &[f64]) -> Mat3 {
        let mut acc = [0.0; 6];
        for (w, atom) in weights.iter().zip(&self.atoms) {
            if *w != 0.0 {
                for k in 0..6 {
                    acc[k] += w * atom.svec[k];
                }
            }
        }
        linalg::smat(&acc)
    }

    /// Information of weighted points given as `(group size, weight)` pairs.
    pub fn info_of_points(&self, points: &[(usize, f64)]) -> InfoMatrix {
        let mut acc = Mat3::zeros();
        for &(x, w) in points {
            acc += self.atom(x).info * w;
        }
        InfoMatrix(linalg::symmetrize(&acc))
    }
}

/// A probability vector over the grid `{1, ..., M}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximateDesign {
    grid: DesignGrid,
    weights: Vec<f64>,
}

impl ApproximateDesign {
    pub fn new(grid: DesignGrid, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(DesignError::invalid(format!(
                "expected {} weights, got {}",
                grid.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(DesignError::invalid(format!("weights must be nonnegative, got {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(DesignError::invalid(format!("weights must sum to 1, got {total}")));
        }
        Ok(Self { grid, weights })
    }

    /// Builds a design from `(group size, weight)` pairs; the weights are
    /// renormalized to sum to one.
    pub fn from_points(grid: DesignGrid, points: &[(usize, f64)]) -> Result<Self> {
        let mut weights = vec![0.0; grid.len()];
        for &(x, w) in points {
            if x == 0 || x > grid.max_size() {
                return Err(DesignError::invalid(format!(
                    "group size {x} is outside 1..={}",
                    grid.max_size()
                )));
            }
            if !(w >= 0.0) {
                return Err(DesignError::invalid(format!("weights must be nonnegative, got {w}")));
            }
            weights[x - 1] += w;
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(DesignError::invalid("design has no positive weight"));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { grid, weights })
    }

    pub fn uniform(grid: DesignGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(grid: DesignGrid, x: usize) -> Result<Self> {
        Self::from_points(grid, &[(x, 1.0)])
    }

    pub fn grid(&self) -> DesignGrid {
        self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x - 1]
    }

    /// Support points with weight above `prune_tol`, renormalized and sorted by
    /// group size.
    pub fn support(&self, prune_tol: f64) -> Result<Vec<(usize, f64)>> {
        if !(0.0..=0.01).contains(&prune_tol) {
            return Err(DesignError::invalid(format!(
                "prune tolerance must lie in [0, 0.01], got {prune_tol}"
            )));
        }
        let kept: Vec<(usize, f64)> = self
            .weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > prune_tol)
            .map(|(i, w)| (i + 1, *w))
            .collect();
        let total: f64 = kept.iter().map(|(_, w)| w).sum();
        if kept.is_empty() || !(total > 0.0) {
            return Err(DesignError::EmptySupport { tol: prune_tol });
        }
        Ok(kept.into_iter().map(|(x, w)| (x, w / total)).collect())
    }

    /// The design restricted to its support at `prune_tol`.
    pub fn pruned(&self, prune_tol: f64) -> Result<Self> {
        let points = self.support(prune_tol)?;
        Self::from_points(self.grid, &points)
    }
}

/// A 3x3 symmetric positive semidefinite information matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoMatrix(pub(crate) Mat3);

impl InfoMatrix {
    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn eigen(&self) -> SymEigen3 {
        linalg::sym_eigen3(&self.0)
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }
}

/// Information matrix of `design` under the group-testing model.
pub fn info_matrix(design: &ApproximateDesign, params: &ModelParams, cost: &CostModel) -> InfoMatrix {
    DesignSpace::new(*params, *cost, design.grid()).info(design.weights())
}

//! Dense two-phase simplex for small linear programs.
//!
//! Solves `min c^T x` subject to linear rows and `x >= 0`. Pivoting follows
//! Bland's rule, so the method terminates on degenerate problems.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coefs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

const EPS: f64 = 1e-11;

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, constraints: Vec::new() }
    }

    pub fn push(&mut self, coefs: Vec<f64>, relation: Relation, rhs: f64) {
        debug_assert_eq!(coefs.len(), self.objective.len());
        self.constraints.push(Constraint { coefs, relation, rhs });
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(&self.objective)
    }
}

struct Tableau {
    /// `rows x (cols + 1)`; the last column is the right-hand side.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_orig: usize,
    n_cols: usize,
    artificial_start: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.objective.len();
        let m = lp.constraints.len();
        let n_slack = lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
        let artificial_start = n + n_slack;
        let n_cols = artificial_start + m;
        let mut a = vec![vec![0.0; n_cols + 1]; m];
        let mut basis = vec![0; m];
        let mut slack = n;
        for (r, c) in lp.constraints.iter().enumerate() {
            let flip = if c.rhs < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                a[r][j] = flip * c.coefs[j];
            }
            match c.relation {
                Relation::Le => {
                    a[r][slack] = flip;
                    slack += 1;
                }
                Relation::Ge => {
                    a[r][slack] = -flip;
                    slack += 1;
                }
                Relation::Eq => {}
            }
            a[r][artificial_start + r] = 1.0;
            a[r][n_cols] = flip * c.rhs;
            basis[r] = artificial_start + r;
        }
        Self { a, basis, n_orig: n, n_cols, artificial_start }
    }

    fn run(mut self, objective: &[f64]) -> LpOutcome {
        let mut phase1 = vec![0.0; self.n_cols];
        for c in phase1.iter_mut().skip(self.artificial_start) {
            *c = 1.0;
        }
        if !self.optimize(&phase1, self.n_cols) {
            return LpOutcome::Unbounded;
        }
        let scale = self.a.iter().map(|r| r[self.n_cols].abs()).fold(1.0, f64::max);
        let infeasibility: f64 = self
            .basis
            .iter()
            .zip(&self.a)
            .filter(|(b, _)| **b >= self.artificial_start)
            .map(|(_, r)| r[self.n_cols])
            .sum();
        if infeasibility > 1e-9 * scale {
            return LpOutcome::Infeasible;
        }
        self.drive_out_artificials();
        let mut phase2 = vec![0.0; self.n_cols];
        phase2[..self.n_orig].copy_from_slice(objective);
        if !self.optimize(&phase2, self.artificial_start) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![0.0; self.n_orig];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.n_orig {
                x[b] = self.a[r][self.n_cols].max(0.0);
            }
        }
        let value = x.iter().zip(objective).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, value }
    }

    /// Primal simplex over columns `< allowed`; `false` when unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> bool {
        loop {
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let reduced = cost[j]
                    - self.basis.iter().zip(&self.a).map(|(&b, row)| cost[b] * row[j]).sum::<f64>();
                if reduced < -EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else {
                return true;
            };
            let mut leaving: Option<(usize, f64)> = None;
            for (r, row) in self.a.iter().enumerate() {
                if row[j] > EPS {
                    let ratio = row[self.n_cols] / row[j];
                    let better = match leaving {
                        None => true,
                        Some((lr, best)) => {
                            ratio < best - EPS || (ratio <= best + EPS && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leaving else {
                return false;
            };
            self.pivot(r, j);
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.a[r][j];
        self.a[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i != r && row[j] != 0.0 {
                let f = row[j];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = j;
    }

    /// Pivots zero-valued artificial variables out of the basis where a
    /// structural column allows it; rows that cannot be pivoted are redundant.
    fn drive_out_artificials(&mut self) {
        let mut r = 0;
        while r < self.a.len() {
            if self.basis[r] >= self.artificial_start {
                match (0..self.artificial_start).find(|&j| self.a[r][j].abs() > 1e-9) {
                    Some(j) => self.pivot(r, j),
                    None => {
                        self.a.remove(r);
                        self.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18
        let mut lp = LinearProgram::new(vec![-3.0, -5.0]);
        lp.push(vec![1.0, 0.0], Relation::Le, 4.0);
        lp.push(vec![0.0, 2.0], Relation::Le, 12.0);
        lp.push(vec![3.0, 2.0], Relation::Le, 18.0);
        match lp.solve() {
            LpOutcome::Optimal { x, value } => {
                assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
                assert!((value + 36.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_and_infeasibility() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.push(vec![1.0, 2.0], Relation::Eq, 1.0);
        match lp.solve() {
            LpOutcome::Optimal { value, .. } => assert!((value - 0.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        lp.push(vec![1.0, 1.0], Relation::Ge, 2.0);
        lp.push(vec![1.0, 1.0], Relation::Le, 1.5);
        assert_eq!(lp.solve(), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded() {
        let mut lp = LinearProgram::new(vec![-1.0, 0.0]);
        lp.push(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the textbook largest-coefficient rule.
        let mut lp = LinearProgram::new(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.push(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0);
        lp.push(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0);
        lp.push(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        match lp.solve() {
            LpOutcome::Optimal { value, .. } => assert!((value + 0.05).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    /// Minimum over all basic points of a bounded 2-variable problem.
    fn enumerate_vertices(lp: &LinearProgram) -> Option<f64> {
        let mut lines: Vec<([f64; 2], f64)> = lp
            .constraints
            .iter()
            .map(|c| ([c.coefs[0], c.coefs[1]], c.rhs))
            .collect();
        lines.push(([1.0, 0.0], 0.0));
        lines.push(([0.0, 1.0], 0.0));
        let feasible = |x: [f64; 2]| {
            x[0] >= -1e-9
                && x[1] >= -1e-9
                && lp.constraints.iter().all(|c| {
                    let v = c.coefs[0] * x[0] + c.coefs[1] * x[1];
                    match c.relation {
                        Relation::Le => v <= c.rhs + 1e-9,
                        Relation::Ge => v >= c.rhs - 1e-9,
                        Relation::Eq => (v - c.rhs).abs() <= 1e-9,
                    }
                })
        };
        let mut best: Option<f64> = None;
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let (a, b) = (lines[i], lines[j]);
                let det = a.0[0] * b.0[1] - a.0[1] * b.0[0];
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = [(a.1 * b.0[1] - a.0[1] * b.1) / det, (a.0[0] * b.1 - a.1 * b.0[0]) / det];
                if feasible(x) {
                    let v = lp.objective[0] * x[0] + lp.objective[1] * x[1];
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration(
            c in prop::array::uniform2(-5.0f64..5.0),
            rows in prop::collection::vec((prop::array::uniform2(-5.0f64..5.0), -5.0f64..10.0, 0u8..3), 1..5),
        ) {
            let mut lp = LinearProgram::new(c.to_vec());
            for (coefs, rhs, rel) in rows {
                let relation = [Relation::Le, Relation::Ge, Relation::Eq][rel as usize];
                lp.push(coefs.to_vec(), relation, rhs);
            }
            // box keeps the feasible set bounded
            lp.push(vec![1.0, 0.0], Relation::Le, 10.0);
            lp.push(vec![0.0, 1.0], Relation::Le, 10.0);
            match (lp.solve(), enumerate_vertices(&lp)) {
                (LpOutcome::Optimal { value, .. }, Some(v)) => prop_assert!((value - v).abs() <= 1e-7 * v.abs().max(1.0)),
                (LpOutcome::Infeasible, None) => {}
                (got, want) => prop_assert!(false, "simplex {got:?} vs enumeration {want:?}"),
            }
        }
    }
}

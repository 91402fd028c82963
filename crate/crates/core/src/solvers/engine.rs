//! Frank-Wolfe with away steps on the simplex, accelerated by Newton steps on
//! the current face.

use nalgebra::{DMatrix, DVector};

use crate::criteria::{self, Phi};
use crate::linalg::Mat3;
use crate::model::DesignSpace;

/// Weights above this define the face used by the Newton polish.
const FACE_TOL: f64 = 1e-6;
const MAX_POLISH_STEPS: usize = 40;

/// `w -> Phi(I(w)) + penalty * ||w||_2`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Objective<'a> {
    pub space: &'a DesignSpace,
    pub phi: Phi,
    pub penalty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub objective: f64,
    /// Largest Frank-Wolfe gap over the grid at this iterate.
    pub gap: f64,
}

pub(crate) struct Outcome {
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Stopped because no step made progress, typically at floating-point
    /// resolution just above the internal tolerance.
    pub stalled: bool,
    pub trace: Vec<TracePoint>,
}

fn norm(w: &[f64]) -> f64 {
    w.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl Objective<'_> {
    pub fn value(&self, w: &[f64]) -> f64 {
        self.value_at(w, &self.space.info_raw(w))
    }

    fn value_at(&self, w: &[f64], info: &Mat3) -> f64 {
        let v = self.phi.value(info);
        if self.penalty > 0.0 {
            v + self.penalty * norm(w)
        } else {
            v
        }
    }

    /// Per-coordinate gradient, or `None` where the objective is infinite.
    fn gradient(&self, w: &[f64], info: &Mat3) -> Option<(f64, Vec<f64>)> {
        let eval = self.phi.eval(info)?;
        let mut g = criteria::weight_gradient(&eval.grad, self.space);
        let mut value = eval.value;
        if self.penalty > 0.0 {
            let n = norm(w);
            value += self.penalty * n;
            for (gi, wi) in g.iter_mut().zip(w) {
                *gi += self.penalty * wi / n;
            }
        }
        Some((value, g))
    }

    /// Derivative of the objective along `w + gamma d` with `I(gamma) = info + gamma dinfo`.
    fn slope(&self, w: &[f64], d: &[f64], info: &Mat3, dinfo: &Mat3, gamma: f64) -> f64 {
        let at = info + dinfo * gamma;
        let Some(eval) = self.phi.eval(&at) else {
            return f64::INFINITY;
        };
        let mut s = crate::linalg::frob(&eval.grad, dinfo);
        if self.penalty > 0.0 {
            let (mut wd, mut dd, mut ww) = (0.0, 0.0, 0.0);
            for (wi, di) in w.iter().zip(d) {
                wd += wi * di;
                dd += di * di;
                ww += wi * wi;
            }
            let n2 = ww + 2.0 * gamma * wd + gamma * gamma * dd;
            s += self.penalty * (wd + gamma * dd) / n2.max(f64::MIN_POSITIVE).sqrt();
        }
        s
    }
}

/// Minimizes the objective over the simplex starting from `w0`.
///
/// Stops once the Frank-Wolfe gap and the away gap are both at most `tol`
/// and the Newton polish on the face has converged, or, when the polish
/// cannot run (non-smooth points), once both gaps are at most `tol`.
pub(crate) fn minimize(obj: &Objective, w0: Vec<f64>, tol: f64, max_iters: usize) -> Outcome {
    let mut w = w0;
    let mut trace = Vec::new();
    let mut last_vertex: Option<usize> = None;
    let mut polish_converged = false;
    let mut stalled = 0usize;
    for iter in 0..max_iters {
        let info = obj.space.info_raw(&w);
        let Some((value, g)) = obj.gradient(&w, &info) else {
            return Outcome { weights: w, iterations: iter, converged: false, stalled: false, trace };
        };
        let wg: f64 = w.iter().zip(&g).map(|(a, b)| a * b).sum();
        let (s, fw_gap) = criteria::argmax(&g.iter().map(|gi| wg - gi).collect::<Vec<_>>());
        let s = s - 1;
        let mut away = None;
        for (i, (wi, gi)) in w.iter().zip(&g).enumerate() {
            if *wi > 0.0 && away.is_none_or(|(_, best)| *gi > best) {
                away = Some((i, *gi));
            }
        }
        let (a, ga) = away.expect("simplex point has positive mass");
        let away_gap = ga - wg;
        trace.push(TracePoint { objective: value, gap: fw_gap });

        let smooth_done = polish_converged || obj.phi.hessian(&info).is_none();
        if fw_gap <= tol && away_gap <= tol && smooth_done {
            return Outcome { weights: w, iterations: iter, converged: true, stalled: false, trace };
        }

        let mut d = vec![0.0; w.len()];
        let (gamma_max, toward) = if fw_gap >= away_gap {
            d.iter_mut().zip(&w).for_each(|(di, wi)| *di = -wi);
            d[s] += 1.0;
            (1.0, Some(s))
        } else {
            d.iter_mut().zip(&w).for_each(|(di, wi)| *di = *wi);
            d[a] -= 1.0;
            (w[a] / (1.0 - w[a]), None)
        };
        let dinfo = obj.space.info_raw(&d);
        let gamma = line_search(obj, &w, &d, &info, &dinfo, gamma_max);
        let mut moved = false;
        if gamma > 0.0 {
            let mut next: Vec<f64> = w.iter().zip(&d).map(|(wi, di)| (wi + gamma * di).max(0.0)).collect();
            if toward.is_none() && gamma == gamma_max {
                next[a] = 0.0;
            }
            renormalize(&mut next);
            if obj.value(&next) <= value {
                w = next;
                moved = true;
                if let Some(s) = toward {
                    last_vertex = Some(s);
                }
            }
        }
        let (polished, progressed) = polish(obj, &mut w, last_vertex);
        polish_converged = polished;
        if !moved && !progressed {
            stalled += 1;
            if stalled > 3 {
                return Outcome { weights: w, iterations: iter + 1, converged: false, stalled: true, trace };
            }
        } else {
            stalled = 0;
        }
    }
    Outcome { weights: w, iterations: max_iters, converged: false, stalled: false, trace }
}

fn renormalize(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
}

/// Exact line search on a convex one-dimensional restriction by bisection on
/// the derivative.
fn line_search(obj: &Objective, w: &[f64], d: &[f64], info: &Mat3, dinfo: &Mat3, gamma_max: f64) -> f64 {
    if !(gamma_max > 0.0) {
        return 0.0;
    }
    if obj.slope(w, d, info, dinfo, 0.0) >= 0.0 {
        return 0.0;
    }
    if obj.slope(w, d, info, dinfo, gamma_max) <= 0.0 {
        return gamma_max;
    }
    let (mut lo, mut hi) = (0.0, gamma_max);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if obj.slope(w, d, info, dinfo, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Damped Newton steps on the face `{w_i > FACE_TOL}` (plus the latest
/// Frank-Wolfe vertex) with the sum constraint, dropping coordinates that
/// would turn negative. Returns `(converged, made_progress)`.
fn polish(obj: &Objective, w: &mut [f64], extra: Option<usize>) -> (bool, bool) {
    let mut progressed = false;
    for _ in 0..MAX_POLISH_STEPS {
        let face: Vec<usize> = (0..w.len())
            .filter(|&i| w[i] > FACE_TOL || (Some(i) == extra && w[i] > 0.0))
            .collect();
        let n = face.len();
        if n < 2 {
            return (true, progressed);
        }
        let info = obj.space.info_raw(w);
        let Some((value, g)) = obj.gradient(w, &info) else {
            return (false, progressed);
        };
        let Some(p) = obj.phi.hessian(&info) else {
            return (false, progressed);
        };
        let mut h = criteria::restricted_hessian(&p, obj.space, &face);
        if obj.penalty > 0.0 {
            let nw = norm(w);
            for (a, &i) in face.iter().enumerate() {
                for (b, &j) in face.iter().enumerate() {
                    let delta = if a == b { 1.0 / nw } else { 0.0 };
                    h[(a, b)] += obj.penalty * (delta - w[i] * w[j] / nw.powi(3));
                }
            }
        }
        let damping = 1e-12 * (h.trace() / n as f64).abs().max(f64::MIN_POSITIVE);
        let mut kkt = DMatrix::zeros(n + 1, n + 1);
        let mut rhs = DVector::zeros(n + 1);
        for a in 0..n {
            for b in 0..n {
                kkt[(a, b)] = h[(a, b)];
            }
            kkt[(a, a)] += damping;
            kkt[(a, n)] = 1.0;
            kkt[(n, a)] = 1.0;
            rhs[a] = -g[face[a]];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else {
            return (false, progressed);
        };
        let step: Vec<f64> = (0..n).map(|a| sol[a]).collect();
        let decrement: f64 = -(0..n).map(|a| g[face[a]] * step[a]).sum::<f64>();
        if !(decrement > 1e-15 * value.abs().max(1.0)) {
            return (true, progressed);
        }
        let mut alpha_max = f64::INFINITY;
        let mut blocking = None;
        for a in 0..n {
            if step[a] < 0.0 {
                let r = -w[face[a]] / step[a];
                if r < alpha_max {
                    alpha_max = r;
                    blocking = Some(a);
                }
            }
        }
        let mut alpha = alpha_max.min(1.0);
        let mut trial = w.to_vec();
        loop {
            for a in 0..n {
                trial[face[a]] = (w[face[a]] + alpha * step[a]).max(0.0);
            }
            if alpha == alpha_max {
                if let Some(b) = blocking {
                    trial[face[b]] = 0.0;
                }
            }
            let v = obj.value(&trial);
            if v <= value - 1e-4 * alpha * decrement {
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-10 {
                return (false, progressed);
            }
        }
        renormalize(&mut trial);
        if obj.value(&trial) > value {
            return (false, progressed);
        }
        w.copy_from_slice(&trial);
        progressed = true;
    }
    (false, progressed)
}

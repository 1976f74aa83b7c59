//! Log-barrier interior-point method for programs made of linear
//! inequalities, perspective-log rate inequalities and one Hermitian PSD
//! block.

use std::f64::consts::LN_2;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::linalg::{cholesky_logdet_inverse, hermitian_cholesky, CMatrix, C64};

/// `ρ`-weighted perspective term `τ log₂(1 + ρx/τ)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Perspective {
    pub tau: usize,
    pub x: usize,
    pub rho: f64,
}

impl Perspective {
    /// Value, gradient wrt (x, τ), and the curvature weight `w` such that the
    /// Hessian is `−w v vᵀ` with `v = (ρ, −u)`.
    #[inline]
    fn eval(&self, vars: &[f64]) -> (f64, f64, f64, f64, f64) {
        let tau = vars[self.tau];
        let u = self.rho * vars[self.x] / tau;
        let value = tau * u.ln_1p() / LN_2;
        let d_x = self.rho / ((1.0 + u) * LN_2);
        let d_tau = (u.ln_1p() - u / (1.0 + u)) / LN_2;
        let w = 1.0 / (tau * (1.0 + u) * (1.0 + u) * LN_2);
        (value, d_x, d_tau, w, u)
    }
}

/// `Σ coef·x ≤ rhs`.
#[derive(Debug, Clone, Default)]
pub(crate) struct LinearRow {
    pub entries: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// `Σ lin·x + constant − Σ perspective ≤ 0`.
#[derive(Debug, Clone, Default)]
pub(crate) struct RateRow {
    pub lin: Vec<(usize, f64)>,
    pub constant: f64,
    pub terms: Vec<Perspective>,
}

/// Hermitian `k×k` matrix stored as `k²` real coordinates starting at
/// `offset`: the diagonal, then `(Re, Im)` of each strictly upper entry.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PsdBlock {
    pub offset: usize,
    pub k: usize,
}

/// One basis matrix of the Hermitian coordinates as at most two scaled unit
/// entries `c · e_a e_bᵀ`.
#[derive(Debug, Clone, Copy)]
struct BasisTerm {
    c: C64,
    a: usize,
    b: usize,
}

impl PsdBlock {
    pub fn dim(&self) -> usize {
        self.k * self.k
    }

    fn basis(&self) -> Vec<[Option<BasisTerm>; 2]> {
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let mut out = Vec::with_capacity(self.dim());
        for p in 0..self.k {
            out.push([Some(BasisTerm { c: one, a: p, b: p }), None]);
        }
        for p in 0..self.k {
            for q in (p + 1)..self.k {
                out.push([Some(BasisTerm { c: one, a: p, b: q }), Some(BasisTerm { c: one, a: q, b: p })]);
                out.push([Some(BasisTerm { c: i, a: p, b: q }), Some(BasisTerm { c: -i, a: q, b: p })]);
            }
        }
        out
    }

    /// Assemble the Hermitian matrix from the coordinates in `vars`.
    pub fn matrix(&self, vars: &[f64]) -> CMatrix {
        let k = self.k;
        let x = &vars[self.offset..self.offset + self.dim()];
        let mut m = CMatrix::zeros(k, k);
        for p in 0..k {
            m[(p, p)] = C64::new(x[p], 0.0);
        }
        let mut idx = k;
        for p in 0..k {
            for q in (p + 1)..k {
                let v = C64::new(x[idx], x[idx + 1]);
                m[(p, q)] = v;
                m[(q, p)] = v.conj();
                idx += 2;
            }
        }
        m
    }

    /// Coordinates of `c·I`.
    pub fn scaled_identity(&self, c: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        v[..self.k].iter_mut().for_each(|x| *x = c);
        v
    }

    /// Coefficients of the linear functional `vᴴ X v` in block coordinates.
    pub fn quad_coefficients(&self, v: &[C64]) -> Vec<f64> {
        let k = self.k;
        let mut out = Vec::with_capacity(self.dim());
        for p in 0..k {
            out.push(v[p].norm_sqr());
        }
        for p in 0..k {
            for q in (p + 1)..k {
                let c = v[p].conj() * v[q];
                out.push(2.0 * c.re);
                out.push(-2.0 * c.im);
            }
        }
        out
    }

    /// Coefficients of `tr X`.
    pub fn trace_coefficients(&self) -> Vec<f64> {
        self.scaled_identity(1.0)
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Program {
    pub n: usize,
    /// Minimize `Σ c·x`.
    pub objective: Vec<(usize, f64)>,
    pub lower: Vec<(usize, f64)>,
    pub linear: Vec<LinearRow>,
    pub rates: Vec<RateRow>,
    pub psd: Option<PsdBlock>,
}

/// Objective magnitude below which the gap test becomes absolute.
const GAP_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub(crate) struct BarrierSettings {
    pub t_init: f64,
    pub growth: f64,
    pub newton_tol: f64,
    pub gap_tol: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    pub armijo_sigma: f64,
    pub armijo_beta: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct OuterIterate {
    pub t: f64,
    pub objective: f64,
    pub newton_steps: usize,
    pub gap_bound: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierOutcome {
    pub x: Vec<f64>,
    pub converged: bool,
    pub newton_steps: usize,
    pub history: Vec<OuterIterate>,
}

/// Slack of every barrier term at a point, plus `log det` of the PSD block.
struct Slacks {
    values: Vec<f64>,
    log_det: f64,
}

impl Program {
    /// Number of barrier terms, counting the PSD block as `k`.
    pub fn barrier_weight(&self) -> f64 {
        (self.lower.len() + self.linear.len() + self.rates.len() + self.psd.map_or(0, |b| b.k)) as f64
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(i, c)| c * x[i]).sum()
    }

    fn rate_value(row: &RateRow, x: &[f64]) -> f64 {
        let lin: f64 = row.lin.iter().map(|&(i, c)| c * x[i]).sum();
        let persp: f64 = row
            .terms
            .iter()
            .map(|t| {
                let tau = x[t.tau];
                tau * (t.rho * x[t.x] / tau).ln_1p() / LN_2
            })
            .sum();
        lin + row.constant - persp
    }

    /// `None` when `x` is outside the open domain.
    fn slacks(&self, x: &[f64]) -> Option<Slacks> {
        let mut values = Vec::with_capacity(self.lower.len() + self.linear.len() + self.rates.len());
        for &(i, lb) in &self.lower {
            let s = x[i] - lb;
            if !(s > 0.0) {
                return None;
            }
            values.push(s);
        }
        for row in &self.linear {
            let s = row.rhs - row.entries.iter().map(|&(i, c)| c * x[i]).sum::<f64>();
            if !(s > 0.0) {
                return None;
            }
            values.push(s);
        }
        for row in &self.rates {
            let s = -Self::rate_value(row, x);
            if !(s > 0.0) {
                return None;
            }
            values.push(s);
        }
        let log_det = match self.psd {
            Some(block) => {
                let l = hermitian_cholesky(&block.matrix(x))?;
                2.0 * (0..block.k).map(|i| l[(i, i)].re.ln()).sum::<f64>()
            }
            None => 0.0,
        };
        Some(Slacks { values, log_det })
    }

    #[cfg(test)]
    fn value(&self, x: &[f64], t: f64) -> Option<f64> {
        let s = self.slacks(x)?;
        Some(t * self.objective_value(x) - s.values.iter().map(|v| v.ln()).sum::<f64>() - s.log_det)
    }

    pub fn is_strictly_feasible(&self, x: &[f64]) -> bool {
        self.slacks(x).is_some()
    }

    /// Gradient and Hessian of `t·cᵀx + barrier(x)`.
    fn derivatives(&self, x: &[f64], t: f64, grad: &mut [f64], hess: &mut [f64]) {
        let n = self.n;
        grad.iter_mut().for_each(|g| *g = 0.0);
        hess.iter_mut().for_each(|h| *h = 0.0);
        for &(i, c) in &self.objective {
            grad[i] += t * c;
        }
        for &(i, lb) in &self.lower {
            let s = x[i] - lb;
            grad[i] -= 1.0 / s;
            hess[i * n + i] += 1.0 / (s * s);
        }
        for row in &self.linear {
            let s = row.rhs - row.entries.iter().map(|&(i, c)| c * x[i]).sum::<f64>();
            let inv = 1.0 / s;
            let inv2 = inv * inv;
            for &(i, ci) in &row.entries {
                grad[i] += ci * inv;
                for &(j, cj) in &row.entries {
                    hess[i * n + j] += ci * cj * inv2;
                }
            }
        }
        let mut dg: Vec<(usize, f64)> = Vec::new();
        for row in &self.rates {
            dg.clear();
            dg.extend_from_slice(&row.lin);
            let mut g = row.constant + row.lin.iter().map(|&(i, c)| c * x[i]).sum::<f64>();
            let mut curv: Vec<(Perspective, f64, f64)> = Vec::with_capacity(row.terms.len());
            for term in &row.terms {
                let (value, d_x, d_tau, w, u) = term.eval(x);
                g -= value;
                dg.push((term.x, -d_x));
                dg.push((term.tau, -d_tau));
                curv.push((*term, w, u));
            }
            let s = -g;
            let inv = 1.0 / s;
            let inv2 = inv * inv;
            for &(i, ci) in &dg {
                grad[i] += ci * inv;
                for &(j, cj) in &dg {
                    hess[i * n + j] += ci * cj * inv2;
                }
            }
            for (term, w, u) in curv {
                let scale = w * inv;
                let (a, b) = (term.rho, -u);
                hess[term.x * n + term.x] += scale * a * a;
                hess[term.x * n + term.tau] += scale * a * b;
                hess[term.tau * n + term.x] += scale * a * b;
                hess[term.tau * n + term.tau] += scale * b * b;
            }
        }
        if let Some(block) = self.psd {
            let l = hermitian_cholesky(&block.matrix(x)).expect("PSD block left the domain");
            let (_, y) = cholesky_logdet_inverse(&l);
            let basis = block.basis();
            let off = block.offset;
            for (r, er) in basis.iter().enumerate() {
                let mut tr = C64::new(0.0, 0.0);
                for term in er.iter().flatten() {
                    tr += term.c * y[(term.b, term.a)];
                }
                grad[off + r] -= tr.re;
                for (s, es) in basis.iter().enumerate().skip(r) {
                    let mut acc = C64::new(0.0, 0.0);
                    for ta in er.iter().flatten() {
                        for tb in es.iter().flatten() {
                            acc += ta.c * tb.c * y[(tb.b, ta.a)] * y[(ta.b, tb.a)];
                        }
                    }
                    hess[(off + r) * n + off + s] += acc.re;
                    if s != r {
                        hess[(off + s) * n + off + r] += acc.re;
                    }
                }
            }
        }
    }

    /// Barrier weight whose central point lies closest to `x0`: the minimizer
    /// of `‖t c + ∇φ(x0)‖` in the inverse-Hessian norm.
    pub fn central_weight(&self, x0: &[f64]) -> Option<f64> {
        let n = self.n;
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n * n];
        self.derivatives(x0, 0.0, &mut g, &mut h);
        let mut c = vec![0.0; n];
        for &(i, v) in &self.objective {
            c[i] += v;
        }
        let mut d_c = vec![0.0; n];
        let mut d_g = vec![0.0; n];
        let mut scratch = h.clone();
        let neg_c: Vec<f64> = c.iter().map(|v| -v).collect();
        if !newton_direction(n, &neg_c, &mut scratch, &mut d_c) {
            return None;
        }
        let mut scratch = h;
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        if !newton_direction(n, &neg_g, &mut scratch, &mut d_g) {
            return None;
        }
        let cc: f64 = c.iter().zip(&d_c).map(|(a, b)| a * b).sum();
        let cg: f64 = c.iter().zip(&d_g).map(|(a, b)| a * b).sum();
        let t = -cg / cc;
        (t.is_finite() && t > 0.0).then_some(t)
    }

    /// `φ(x_new) − φ(x_old)` computed from slack ratios to avoid cancellation.
    fn barrier_change(&self, t: f64, step: &[f64], alpha: f64, old: &Slacks, new: &Slacks) -> f64 {
        let lin: f64 = self.objective.iter().map(|&(i, c)| c * step[i]).sum::<f64>() * alpha * t;
        let logs: f64 = old.values.iter().zip(&new.values).map(|(o, n)| ((n - o) / o).ln_1p()).sum();
        lin - logs - (new.log_det - old.log_det)
    }

    /// Minimize `cᵀx` from a strictly feasible `x0`.
    pub fn solve(&self, x0: Vec<f64>, cfg: &BarrierSettings) -> BarrierOutcome {
        let n = self.n;
        let m = self.barrier_weight();
        let mut x = x0;
        let mut t = cfg.t_init;
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n * n];
        let mut step = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut total_newton = 0;
        let mut history = Vec::new();
        let mut converged = false;

        for _ in 0..cfg.max_outer {
            let mut steps = 0;
            for _ in 0..cfg.max_newton {
                self.derivatives(&x, t, &mut grad, &mut hess);
                if !newton_direction(n, &grad, &mut hess, &mut step) {
                    break;
                }
                let decrement: f64 = -grad.iter().zip(&step).map(|(g, d)| g * d).sum::<f64>();
                steps += 1;
                if !(decrement > 0.0) || decrement / 2.0 <= cfg.newton_tol {
                    break;
                }
                let old = match self.slacks(&x) {
                    Some(s) => s,
                    None => break,
                };
                let mut alpha = 1.0;
                let mut accepted = false;
                while alpha > 1e-14 {
                    for i in 0..n {
                        trial[i] = x[i] + alpha * step[i];
                    }
                    if let Some(new) = self.slacks(&trial) {
                        let change = self.barrier_change(t, &step, alpha, &old, &new);
                        if change <= -cfg.armijo_sigma * alpha * decrement {
                            accepted = true;
                            break;
                        }
                    }
                    alpha *= cfg.armijo_beta;
                }
                if !accepted {
                    break;
                }
                std::mem::swap(&mut x, &mut trial);
            }
            total_newton += steps;
            let gap = m / t;
            let objective = self.objective_value(&x);
            history.push(OuterIterate { t, objective, newton_steps: steps, gap_bound: gap });
            // relative test: optima span many decades (rates down to 1e-10)
            if gap <= cfg.gap_tol * objective.abs().max(GAP_FLOOR) {
                converged = true;
                break;
            }
            t *= cfg.growth;
        }
        BarrierOutcome { x, converged, newton_steps: total_newton, history }
    }
}

/// Solve `H d = −g` with Jacobi scaling and a growing diagonal shift when
/// the factorization fails. `hess` is consumed as scratch.
fn newton_direction(n: usize, grad: &[f64], hess: &mut [f64], step: &mut [f64]) -> bool {
    let d: Vec<f64> = (0..n).map(|i| {
        let h = hess[i * n + i];
        if h > 0.0 { 1.0 / h.sqrt() } else { 1.0 }
    }).collect();
    for i in 0..n {
        for j in 0..n {
            hess[i * n + j] *= d[i] * d[j];
        }
    }
    let rhs = DVector::from_iterator(n, (0..n).map(|i| -grad[i] * d[i]));
    let mut shift = 0.0;
    for _ in 0..8 {
        let mut mat = DMatrix::from_row_slice(n, n, hess);
        if shift > 0.0 {
            for i in 0..n {
                mat[(i, i)] += shift;
            }
        }
        if let Some(chol) = Cholesky::new(mat) {
            let sol = chol.solve(&rhs);
            if sol.iter().all(|v| v.is_finite()) {
                for i in 0..n {
                    step[i] = sol[i] * d[i];
                }
                return true;
            }
        }
        shift = if shift == 0.0 { 1e-12 } else { shift * 100.0 };
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> BarrierSettings {
        BarrierSettings {
            t_init: 1.0,
            growth: 10.0,
            newton_tol: 1e-10,
            gap_tol: 1e-10,
            max_outer: 40,
            max_newton: 100,
            armijo_sigma: 0.1,
            armijo_beta: 0.5,
        }
    }

    #[test]
    fn linear_program_on_a_box() {
        // max x0 + 2 x1 s.t. x0 + x1 <= 1, x >= 0  ->  (0, 1)
        let p = Program {
            n: 2,
            objective: vec![(0, -1.0), (1, -2.0)],
            lower: vec![(0, 0.0), (1, 0.0)],
            linear: vec![LinearRow { entries: vec![(0, 1.0), (1, 1.0)], rhs: 1.0 }],
            rates: vec![],
            psd: None,
        };
        let out = p.solve(vec![0.2, 0.2], &settings());
        assert!(out.converged);
        assert!(out.x[0].abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn single_perspective_rate() {
        // max s s.t. s <= τ log2(1 + x/τ), τ <= 1, x <= 3 → s = log2(4) = 2
        let p = Program {
            n: 3,
            objective: vec![(0, -1.0)],
            lower: vec![(1, 0.0), (2, 0.0)],
            linear: vec![
                LinearRow { entries: vec![(1, 1.0)], rhs: 1.0 },
                LinearRow { entries: vec![(2, 1.0)], rhs: 3.0 },
            ],
            rates: vec![RateRow {
                lin: vec![(0, 1.0)],
                constant: 0.0,
                terms: vec![Perspective { tau: 1, x: 2, rho: 1.0 }],
            }],
            psd: None,
        };
        let out = p.solve(vec![0.1, 0.5, 1.0], &settings());
        assert!((out.x[0] - 2.0).abs() < 1e-8, "{:?}", out.x);
    }

    #[test]
    fn psd_block_trace_constrained() {
        // max vᴴXv s.t. tr X <= 1, X ⪰ 0 → largest eigen-direction, value |v|²
        let v = [C64::new(0.6, 0.2), C64::new(-0.1, 0.7)];
        let block = PsdBlock { offset: 0, k: 2 };
        let coefs = block.quad_coefficients(&v);
        let p = Program {
            n: 4,
            objective: coefs.iter().enumerate().map(|(i, &c)| (i, -c)).collect(),
            lower: vec![],
            linear: vec![LinearRow {
                entries: block.trace_coefficients().into_iter().enumerate().collect(),
                rhs: 1.0,
            }],
            rates: vec![],
            psd: Some(block),
        };
        let out = p.solve(block.scaled_identity(0.25), &settings());
        let value: f64 = coefs.iter().zip(&out.x).map(|(c, x)| c * x).sum();
        let norm2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        assert!((value - norm2).abs() < 1e-8, "{value} vs {norm2}");
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let block = PsdBlock { offset: 4, k: 2 };
        let v = [C64::new(0.3, 0.1), C64::new(-0.2, 0.4)];
        let mut energy: Vec<(usize, f64)> = vec![(2, 1.0)];
        energy.extend(block.quad_coefficients(&v).into_iter().enumerate().map(|(r, c)| (4 + r, -c)));
        let p = Program {
            n: 8,
            objective: vec![(0, -1.0)],
            lower: vec![(1, 0.0), (2, 0.0), (3, 0.0)],
            linear: vec![LinearRow { entries: energy, rhs: 0.05 }, LinearRow { entries: vec![(1, 1.0), (3, 1.0)], rhs: 1.0 }],
            rates: vec![RateRow {
                lin: vec![(0, 1.0)],
                constant: 0.0,
                terms: vec![Perspective { tau: 1, x: 2, rho: 3.0 }, Perspective { tau: 3, x: 2, rho: 0.7 }],
            }],
            psd: Some(block),
        };
        let x = vec![0.1, 0.3, 0.2, 0.4, 0.5, 0.8, 0.1, -0.2];
        let t = 2.0;
        let n = p.n;
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n * n];
        p.derivatives(&x, t, &mut g, &mut h);
        let eps = 1e-6;
        let shifted = |i: usize, d: f64| {
            let mut y = x.clone();
            y[i] += d;
            y
        };
        for i in 0..n {
            let fd = (p.value(&shifted(i, eps), t).unwrap() - p.value(&shifted(i, -eps), t).unwrap()) / (2.0 * eps);
            assert!((fd - g[i]).abs() < 1e-5 * (1.0 + g[i].abs()), "grad {i}: {fd} vs {}", g[i]);
            let mut gp = vec![0.0; n];
            let mut gm = vec![0.0; n];
            let mut scratch = vec![0.0; n * n];
            p.derivatives(&shifted(i, eps), t, &mut gp, &mut scratch);
            p.derivatives(&shifted(i, -eps), t, &mut gm, &mut scratch);
            for j in 0..n {
                let fd = (gp[j] - gm[j]) / (2.0 * eps);
                let an = h[j * n + i];
                assert!((fd - an).abs() < 1e-4 * (1.0 + an.abs()), "hess ({j},{i}): {fd} vs {an}");
            }
        }
    }

    #[test]
    fn quad_coefficients_match_matrix_form() {
        let block = PsdBlock { offset: 1, k: 3 };
        let vars: Vec<f64> = (0..10).map(|i| 0.1 * i as f64 - 0.3).collect();
        let m = block.matrix(&vars);
        let v = [C64::new(0.3, -0.4), C64::new(1.0, 0.5), C64::new(-0.2, 0.9)];
        let direct = crate::linalg::quad_form(&crate::linalg::CVector::from_column_slice(&v), &m);
        let coefs = block.quad_coefficients(&v);
        let via: f64 = coefs.iter().zip(&vars[1..]).map(|(c, x)| c * x).sum();
        assert!((direct - via).abs() < 1e-12);
    }
}

//! Lagrange-dual solvers for the objective and feasible surrogate problems.
//!
//! For nonnegative weights `a_k` the Lagrangian `Σ a_k f̄_k(θ)` is a separable
//! quadratic with curvature `Z = Σ a_k ζ_k`, so its minimiser over the box is
//! the projection of `θ_i − (Σ a_k ĝ_k)/(2Z)`. Only the weights are iterated.

use nalgebra::{DMatrix, DVector};

use super::surrogate::{ParamBox, SurrogateSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Stationarity tolerance on the dual and duality-gap tolerance.
    pub tol: f64,
    /// A point certifies feasibility only if every constraint surrogate is at
    /// most `-feasibility_margin`.
    pub feasibility_margin: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: 1e-9,
            feasibility_margin: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Objective,
    Feasible,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Objective => "objective",
            Branch::Feasible => "feasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSolution {
    pub theta: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSolution {
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
    /// `max_k f̄_k(θ)` at the returned point.
    pub value: f64,
    /// Best dual value, a lower bound on the min-max optimum.
    pub lower_bound: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveOutcome {
    Solved(ObjectiveSolution),
    /// No strictly feasible point exists; carries the feasible-update solution.
    Infeasible(FeasibleSolution),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorStep {
    pub theta_bar: Vec<f64>,
    pub branch: Branch,
    pub iterations: usize,
    pub max_constraint: f64,
}

struct Eval {
    d: Vec<f64>,
    values: Vec<f64>,
    dual: f64,
    curvature: f64,
}

struct Dual<'a> {
    set: &'a SurrogateSet,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl<'a> Dual<'a> {
    fn new(set: &'a SurrogateSet, bx: ParamBox) -> Result<Self> {
        if !(bx.lo <= bx.hi) {
            return Err(Error::Config(format!("empty parameter box [{}, {}]", bx.lo, bx.hi)));
        }
        Ok(Self {
            set,
            lo: set.anchor.iter().map(|a| bx.lo - a).collect(),
            hi: set.anchor.iter().map(|a| bx.hi - a).collect(),
        })
    }

    /// Minimises `Σ a_k f̄_k` over the box; `a` covers indices `0..=K`.
    fn eval(&self, a: &[f64]) -> Eval {
        let s = self.set;
        let n = s.dim();
        let curvature: f64 = a.iter().zip(&s.zeta).map(|(w, z)| w * z).sum();
        let mut d = vec![0.0; n];
        let mut dots = vec![0.0; a.len()];
        let mut sq = 0.0;
        let active: Vec<usize> = (0..a.len()).filter(|&k| a[k] != 0.0).collect();
        for c in 0..n {
            let mut g = 0.0;
            for &k in &active {
                g += a[k] * s.g_hat[k][c];
            }
            let dc = (-g / (2.0 * curvature)).clamp(self.lo[c], self.hi[c]);
            d[c] = dc;
            sq += dc * dc;
            for (k, dot) in dots.iter_mut().enumerate() {
                *dot += s.g_hat[k][c] * dc;
            }
        }
        let values: Vec<f64> = (0..a.len())
            .map(|k| s.f_hat[k] + dots[k] + s.zeta[k] * sq)
            .collect();
        let dual = a.iter().zip(&values).map(|(w, v)| w * v).sum();
        Eval {
            d,
            values,
            dual,
            curvature,
        }
    }

    fn theta(&self, d: &[f64]) -> Vec<f64> {
        self.set.anchor.iter().zip(d).map(|(a, x)| a + x).collect()
    }

    /// Negated dual Hessian (PSD) over the constraint indices `rows`, each
    /// differenced against `pivot` when given. Only coordinates strictly inside
    /// the box contribute.
    fn neg_hessian(&self, e: &Eval, rows: &[usize], pivot: Option<usize>) -> DMatrix<f64> {
        let s = self.set;
        let n = rows.len();
        let mut h = DMatrix::zeros(n, n);
        let mut r = vec![0.0; n];
        for c in 0..s.dim() {
            if e.d[c] <= self.lo[c] || e.d[c] >= self.hi[c] {
                continue;
            }
            let base = pivot.map_or(0.0, |p| s.g_hat[p][c] + 2.0 * s.zeta[p] * e.d[c]);
            for (ri, &k) in r.iter_mut().zip(rows) {
                *ri = s.g_hat[k][c] + 2.0 * s.zeta[k] * e.d[c] - base;
            }
            for i in 0..n {
                for j in 0..=i {
                    h[(i, j)] += r[i] * r[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                h[(j, i)] = h[(i, j)];
            }
        }
        h / (2.0 * e.curvature)
    }
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (j, x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

fn simplex_stationarity(w: &[f64], grad: &[f64]) -> f64 {
    let shifted: Vec<f64> = w.iter().zip(grad).map(|(a, b)| a + b).collect();
    project_simplex(&shifted)
        .iter()
        .zip(w)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

fn orthant_stationarity(lambda: &[f64], grad: &[f64]) -> f64 {
    lambda
        .iter()
        .zip(grad)
        .map(|(l, g)| (l - (l + g).max(0.0)).abs())
        .fold(0.0, f64::max)
}

/// Sufficient ascent, or, once the predicted gain is below the rounding noise
/// of the dual value, a halving of the stationarity measure.
fn acceptable(base: f64, cand: f64, gain: f64, stat_before: f64, stat_after: f64) -> bool {
    cand >= base + 1e-4 * gain || (gain <= 1e-11 * base.abs().max(1.0) && stat_after <= 0.5 * stat_before)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stop {
    /// Run to optimality.
    Optimal,
    /// Stop at the first feasibility or infeasibility certificate.
    Certificate,
}

struct FeasibleRun {
    solution: FeasibleSolution,
    feasible: Option<bool>,
}

fn run_feasible(set: &SurrogateSet, bx: ParamBox, opts: &SolverOptions, stop: Stop) -> Result<FeasibleRun> {
    let k = set.constraints();
    if k == 0 {
        return Err(Error::Config("feasible update needs at least one constraint".into()));
    }
    let dual = Dual::new(set, bx)?;
    let weights_of = |w: &[f64]| {
        let mut a = Vec::with_capacity(k + 1);
        a.push(0.0);
        a.extend_from_slice(w);
        a
    };
    let mut w = vec![1.0 / k as f64; k];
    let mut e = dual.eval(&weights_of(&w));
    let mut grad = e.values[1..].to_vec();
    let mut best_d = e.d.clone();
    let mut best_primal = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut best_w = w.clone();
    let mut lower = e.dual;
    let mut alpha = 1.0 / (1.0 + grad.iter().map(|g| g.abs()).fold(0.0, f64::max));
    let mut verdict = None;

    let mut iterations = 0;
    loop {
        if best_primal <= -opts.feasibility_margin {
            verdict = Some(true);
        } else if lower > 0.0 {
            verdict = Some(false);
        }
        let gap = best_primal - lower;
        let tol = opts.tol * best_primal.abs().max(1.0);
        let stationary = simplex_stationarity(&w, &grad);
        let done = match stop {
            Stop::Certificate => verdict.is_some() || gap <= tol || stationary <= 1e-14,
            Stop::Optimal => gap <= tol || stationary <= 1e-14,
        };
        if done {
            break;
        }
        if iterations >= opts.max_iter {
            return Err(Error::Convergence {
                iterations,
                residual: gap,
            });
        }
        iterations += 1;

        let newton = simplex_newton_direction(&dual, &e, &w, &grad);
        let mut accepted = newton.and_then(|dir| simplex_line_search(&dual, &w, &dir, &grad, e.dual, &weights_of));
        if accepted.is_none() {
            let target: Vec<f64> = w.iter().zip(&grad).map(|(a, g)| a + alpha * g).collect();
            let dir: Vec<f64> = project_simplex(&target).iter().zip(&w).map(|(p, q)| p - q).collect();
            accepted = simplex_line_search(&dual, &w, &dir, &grad, e.dual, &weights_of);
        }
        let Some((w_new, e_new)) = accepted else {
            // No ascent left at machine precision.
            break;
        };
        let g_new = e_new.values[1..].to_vec();
        let sk: Vec<f64> = w_new.iter().zip(&w).map(|(a, b)| a - b).collect();
        let yk: Vec<f64> = g_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let curv = -dot(&sk, &yk);
        alpha = if curv > 0.0 { (dot(&sk, &sk) / curv).clamp(1e-12, 1e12) } else { (alpha * 4.0).min(1e12) };
        w = w_new;
        e = e_new;
        grad = g_new;
        lower = lower.max(e.dual);
        let primal = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if primal < best_primal {
            best_primal = primal;
            best_d = e.d.clone();
            best_w = w.clone();
        }
    }

    let mut theta = dual.theta(&best_d);
    let mut value = best_primal;
    let anchor_value = set.max_constraint(&set.anchor);
    if value > anchor_value && bx.contains(&set.anchor) {
        theta = set.anchor.clone();
        value = anchor_value;
    }
    if verdict.is_none() {
        verdict = Some(value <= -opts.feasibility_margin);
    }
    Ok(FeasibleRun {
        solution: FeasibleSolution {
            theta,
            weights: best_w,
            value,
            lower_bound: lower,
            iterations,
        },
        feasible: verdict,
    })
}

/// Newton direction for the dual restricted to the face of the simplex that
/// holds the current support, or `None` if the model is degenerate.
fn simplex_newton_direction(dual: &Dual<'_>, e: &Eval, w: &[f64], grad: &[f64]) -> Option<Vec<f64>> {
    let k = w.len();
    let level = dot(w, grad);
    let free: Vec<usize> = (0..k).filter(|&j| w[j] > 1e-12 || grad[j] > level).collect();
    if free.len() < 2 {
        return None;
    }
    // Directions within the face are `Σ_i q_i (e_i − e_pivot)`.
    let (&pivot, others) = free.split_last()?;
    let rows: Vec<usize> = others.iter().map(|j| j + 1).collect();
    let mut m = dual.neg_hessian(e, &rows, Some(pivot + 1));
    let nr = rows.len();
    let scale = (0..nr).map(|i| m[(i, i)]).fold(0.0, f64::max).max(1e-300);
    for i in 0..nr {
        m[(i, i)] += 1e-12 * scale;
    }
    let chol = m.cholesky()?;
    let g = DVector::from_iterator(nr, others.iter().map(|&j| grad[j] - grad[pivot]));
    let q = chol.solve(&g);
    let mut dir = vec![0.0; k];
    for (i, &j) in others.iter().enumerate() {
        dir[j] = q[i];
        dir[pivot] -= q[i];
    }
    dir.iter().all(|d| d.is_finite()).then_some(dir)
}

fn simplex_line_search(
    dual: &Dual<'_>,
    w: &[f64],
    dir: &[f64],
    grad: &[f64],
    base: f64,
    weights_of: &impl Fn(&[f64]) -> Vec<f64>,
) -> Option<(Vec<f64>, Eval)> {
    let mut step = 1.0;
    for _ in 0..60 {
        let shifted: Vec<f64> = w.iter().zip(dir).map(|(a, d)| a + step * d).collect();
        let cand = project_simplex(&shifted);
        let moved: Vec<f64> = cand.iter().zip(w).map(|(a, b)| a - b).collect();
        let gain = dot(grad, &moved);
        if gain > 0.0 {
            let ce = dual.eval(&weights_of(&cand));
            let stat_after = simplex_stationarity(&cand, &ce.values[1..]);
            if acceptable(base, ce.dual, gain, simplex_stationarity(w, grad), stat_after) {
                return Some((cand, ce));
            }
        }
        step *= 0.5;
    }
    None
}

/// `argmin_θ max_{k≥1} f̄_k(θ)` over the box.
pub fn solve_feasible_update(set: &SurrogateSet, bx: ParamBox, opts: &SolverOptions) -> Result<FeasibleSolution> {
    Ok(run_feasible(set, bx, opts, Stop::Optimal)?.solution)
}

/// Projected Newton ascent on the dual of `min f̄_0 s.t. f̄_k ≤ 0` over `λ ≥ 0`.
fn solve_multipliers(set: &SurrogateSet, bx: ParamBox, opts: &SolverOptions) -> Result<ObjectiveSolution> {
    let k = set.constraints();
    let dual = Dual::new(set, bx)?;
    let weights_of = |l: &[f64]| {
        let mut a = Vec::with_capacity(k + 1);
        a.push(1.0);
        a.extend_from_slice(l);
        a
    };
    let mut lambda = vec![0.0; k];
    let mut e = dual.eval(&weights_of(&lambda));
    let mut iterations = 0;
    loop {
        let grad = &e.values[1..];
        let residual = orthant_stationarity(&lambda, grad);
        if residual <= opts.tol {
            break;
        }
        if iterations >= opts.max_iter {
            return Err(Error::Convergence { iterations, residual });
        }
        iterations += 1;

        let eps = residual.min(1e-6);
        let free: Vec<usize> = (0..k).filter(|&j| !(lambda[j] <= eps && grad[j] < 0.0)).collect();
        let mut dir: Vec<f64> = grad.to_vec();
        if !free.is_empty() {
            let rows: Vec<usize> = free.iter().map(|j| j + 1).collect();
            let mut hf = dual.neg_hessian(&e, &rows, None);
            let nf = free.len();
            let scale = (0..nf).map(|i| hf[(i, i)]).fold(0.0, f64::max);
            for i in 0..nf {
                hf[(i, i)] += 1e-12 * scale.max(1e-300);
            }
            let gf = DVector::from_iterator(nf, free.iter().map(|&j| grad[j]));
            if let Some(chol) = hf.cholesky() {
                let p = chol.solve(&gf);
                for (i, &j) in free.iter().enumerate() {
                    dir[j] = p[i];
                }
            }
        }
        let mut accepted = line_search(&dual, &lambda, &dir, grad, e.dual, &weights_of);
        if accepted.is_none() {
            accepted = line_search(&dual, &lambda, grad, grad, e.dual, &weights_of);
        }
        match accepted {
            Some((l, ne)) => {
                lambda = l;
                e = ne;
            }
            None => return Err(Error::Convergence { iterations, residual }),
        }
    }
    Ok(ObjectiveSolution {
        theta: dual.theta(&e.d),
        multipliers: lambda,
        iterations,
    })
}

fn line_search(
    dual: &Dual<'_>,
    lambda: &[f64],
    dir: &[f64],
    grad: &[f64],
    base: f64,
    weights_of: &impl Fn(&[f64]) -> Vec<f64>,
) -> Option<(Vec<f64>, Eval)> {
    let mut step = 1.0;
    for _ in 0..60 {
        let cand: Vec<f64> = lambda.iter().zip(dir).map(|(l, d)| (l + step * d).max(0.0)).collect();
        let moved: Vec<f64> = cand.iter().zip(lambda).map(|(a, b)| a - b).collect();
        let gain = dot(grad, &moved);
        if gain <= 0.0 {
            step *= 0.5;
            continue;
        }
        let ce = dual.eval(&weights_of(&cand));
        let stat_after = orthant_stationarity(&cand, &ce.values[1..]);
        if acceptable(base, ce.dual, gain, orthant_stationarity(lambda, grad), stat_after) {
            return Some((cand, ce));
        }
        step *= 0.5;
    }
    None
}

/// Minimises `f̄_0` subject to `f̄_k ≤ 0` over the box, or reports that no
/// strictly feasible point exists.
pub fn solve_objective_update(set: &SurrogateSet, bx: ParamBox, opts: &SolverOptions) -> Result<ObjectiveOutcome> {
    if set.constraints() > 0 {
        let check = run_feasible(set, bx, opts, Stop::Certificate)?;
        if check.feasible != Some(true) {
            let full = run_feasible(set, bx, opts, Stop::Optimal)?;
            let mut solution = full.solution;
            solution.iterations += check.solution.iterations;
            return Ok(ObjectiveOutcome::Infeasible(solution));
        }
        let mut sol = solve_multipliers(set, bx, opts)?;
        sol.iterations += check.solution.iterations;
        return Ok(ObjectiveOutcome::Solved(sol));
    }
    solve_multipliers(set, bx, opts).map(ObjectiveOutcome::Solved)
}

/// Objective update when feasible, feasible update otherwise.
pub fn actor_step(set: &SurrogateSet, bx: ParamBox, opts: &SolverOptions) -> Result<ActorStep> {
    let (theta_bar, branch, iterations) = match solve_objective_update(set, bx, opts)? {
        ObjectiveOutcome::Solved(s) => (s.theta, Branch::Objective, s.iterations),
        ObjectiveOutcome::Infeasible(f) => (f.theta, Branch::Feasible, f.iterations),
    };
    let max_constraint = set.max_constraint(&theta_bar);
    Ok(ActorStep {
        theta_bar,
        branch,
        iterations,
        max_constraint,
    })
}

/// `(1 − μ)·prev + μ·bar`.
pub fn mix_theta(prev: &[f64], bar: &[f64], mu: f64) -> Vec<f64> {
    prev.iter().zip(bar).map(|(p, b)| (1.0 - mu) * p + mu * b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crl::surrogate::build_surrogates;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    fn grid_min(bx: ParamBox, step: f64, mut f: impl FnMut(&[f64]) -> Option<f64>) -> Option<f64> {
        let n = ((bx.hi - bx.lo) / step).round() as usize;
        let mut best: Option<f64> = None;
        for i in 0..=n {
            for j in 0..=n {
                let p = [bx.lo + i as f64 * step, bx.lo + j as f64 * step];
                if let Some(v) = f(&p) {
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
            }
        }
        best
    }

    #[test]
    fn simplex_projection() {
        assert_eq!(project_simplex(&[0.5, 0.5]), vec![0.5, 0.5]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.3, -0.2, 0.9]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn unconstrained_interior_step() {
        let set = build_surrogates(vec![0.2, -0.1, 0.4], vec![1.0], vec![vec![0.4, -0.2, 0.6]], vec![1.0]).unwrap();
        let out = solve_objective_update(&set, ParamBox::symmetric(10.0), &opts()).unwrap();
        let ObjectiveOutcome::Solved(s) = out else { panic!("expected a solution") };
        let expected = [0.2 - 0.2, -0.1 + 0.1, 0.4 - 0.3];
        for (a, b) in s.theta.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unreachable_constraint_is_infeasible() {
        let set = build_surrogates(
            vec![0.0, 0.0],
            vec![0.0, 10.0],
            vec![vec![1.0, 1.0], vec![0.0, 0.0]],
            vec![1.0, 1.0],
        )
        .unwrap();
        let out = solve_objective_update(&set, ParamBox::symmetric(1.0), &opts()).unwrap();
        let ObjectiveOutcome::Infeasible(f) = out else { panic!("expected infeasible") };
        assert!((f.value - 10.0).abs() < 1e-9);
        assert_eq!(f.theta, vec![0.0, 0.0]);
    }

    #[test]
    fn binding_constraint_matches_grid() {
        let bx = ParamBox::symmetric(2.0);
        let set = build_surrogates(
            vec![0.1, -0.2],
            vec![0.0, 0.3],
            vec![vec![1.0, 0.5], vec![-1.5, 1.0]],
            vec![1.0, 1.0],
        )
        .unwrap();
        let ObjectiveOutcome::Solved(s) = solve_objective_update(&set, bx, &opts()).unwrap() else {
            panic!("expected a solution")
        };
        assert!(set.value(1, &s.theta) <= 1e-6);
        assert!(s.multipliers[0] > 0.0, "constraint should bind");
        let grid = grid_min(bx, 1e-3, |p| (set.value(1, p) <= 0.0).then(|| set.value(0, p))).unwrap();
        assert!((set.value(0, &s.theta) - grid).abs() < 1e-3);
        assert!(set.value(0, &s.theta) <= grid + 1e-9);
    }

    #[test]
    fn feasible_update_single_centred_constraint() {
        let set = build_surrogates(vec![0.3, 0.7], vec![0.0, 2.0], vec![vec![1.0, 1.0], vec![0.0, 0.0]], vec![1.0, 1.0]).unwrap();
        let f = solve_feasible_update(&set, ParamBox::symmetric(10.0), &opts()).unwrap();
        for (a, b) in f.theta.iter().zip(&set.anchor) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mirrored_constraints_stay_at_anchor() {
        let set = build_surrogates(
            vec![0.3, 0.7],
            vec![0.0, 1.0, 1.0],
            vec![vec![0.0, 0.0], vec![0.8, -0.4], vec![-0.8, 0.4]],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        let f = solve_feasible_update(&set, ParamBox::symmetric(10.0), &opts()).unwrap();
        for (a, b) in f.theta.iter().zip(&set.anchor) {
            assert!((a - b).abs() < 1e-6, "{:?}", f.theta);
        }
        assert!((f.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn random_min_max_matches_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let bx = ParamBox::symmetric(1.0);
        for _ in 0..5 {
            let g: Vec<Vec<f64>> = (0..4).map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();
            let f: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let set = build_surrogates(vec![rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)], f, g, vec![1.0; 4]).unwrap();
            let sol = solve_feasible_update(&set, bx, &opts()).unwrap();
            let grid = grid_min(bx, 1e-3, |p| Some(set.max_constraint(p))).unwrap();
            assert!(sol.value <= grid + 1e-9);
            assert!(grid - sol.value < 1e-3);
            assert!(sol.lower_bound <= sol.value + 1e-12);
        }
    }

    #[test]
    fn feasible_update_never_worsens() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(1..6);
            let k = rng.gen_range(1..4);
            let anchor: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g = (0..=k).map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
            let f = (0..=k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let zeta = (0..=k).map(|_| rng.gen_range(0.5..2.0)).collect();
            let set = build_surrogates(anchor, f, g, zeta).unwrap();
            let sol = solve_feasible_update(&set, ParamBox::symmetric(1.5), &opts()).unwrap();
            assert!(set.max_constraint(&sol.theta) <= set.max_constraint(&set.anchor) + 1e-9);
            assert!(ParamBox::symmetric(1.5).contains(&sol.theta));
        }
    }

    #[test]
    fn objective_solutions_are_feasible_and_boxed() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let bx = ParamBox::symmetric(1.0);
        let mut solved = 0;
        for _ in 0..100 {
            let n = rng.gen_range(1..6);
            let k = rng.gen_range(1..4);
            let anchor: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g = (0..=k).map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
            let f = (0..=k).map(|_| rng.gen_range(-1.0..0.5)).collect();
            let set = build_surrogates(anchor, f, g, vec![1.0; k + 1]).unwrap();
            if let ObjectiveOutcome::Solved(s) = solve_objective_update(&set, bx, &opts()).unwrap() {
                solved += 1;
                assert!(set.max_constraint(&s.theta) <= 1e-6);
                assert!(bx.contains(&s.theta));
            }
        }
        assert!(solved > 20);
    }

    #[test]
    fn many_constraints_large_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 5000;
        let k = 8;
        let anchor: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let g = (0..=k).map(|_| (0..n).map(|_| rng.gen_range(-0.05..0.05)).collect()).collect();
        let f = (0..=k).map(|i| if i == 0 { 1.0 } else { rng.gen_range(-0.05..0.05) }).collect();
        let set = build_surrogates(anchor, f, g, vec![1.0; k + 1]).unwrap();
        let step = actor_step(&set, ParamBox::symmetric(10.0), &opts()).unwrap();
        if step.branch == Branch::Objective {
            assert!(step.max_constraint <= 1e-6);
        }
    }

    #[test]
    fn random_instances_converge() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut max_iters = 0;
        for case in 0..2000 {
            let n = rng.gen_range(1..40);
            let k = rng.gen_range(1..7);
            let radius = rng.gen_range(0.2..3.0);
            let anchor: Vec<f64> = (0..n).map(|_| rng.gen_range(-radius..radius)).collect();
            let scale = 10f64.powf(rng.gen_range(-3.0..1.0));
            let g = (0..=k).map(|_| (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()).collect();
            let f = (0..=k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let zeta = (0..=k).map(|_| rng.gen_range(0.5..2.0)).collect();
            let set = build_surrogates(anchor, f, g, zeta).unwrap();
            let step = actor_step(&set, ParamBox::symmetric(radius), &opts())
                .unwrap_or_else(|e| panic!("case {case}: {e}"));
            max_iters = max_iters.max(step.iterations);
            if step.branch == Branch::Objective {
                assert!(step.max_constraint <= 1e-6, "case {case}");
            }
        }
        assert!(max_iters < 1000, "{max_iters}");
    }

    #[test]
    fn mixing() {
        assert_eq!(mix_theta(&[1.0, 2.0], &[3.0, 6.0], 0.0), vec![1.0, 2.0]);
        assert_eq!(mix_theta(&[1.0, 2.0], &[3.0, 6.0], 1.0), vec![3.0, 6.0]);
        assert_eq!(mix_theta(&[1.0, 2.0], &[3.0, 6.0], 0.5), vec![2.0, 4.0]);
    }
}

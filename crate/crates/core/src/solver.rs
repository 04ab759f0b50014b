//! Accelerated projected gradient over the unit box.
//!
//! Search points follow Nesterov's t-sequence; each step size `1/C_k` comes
//! from backtracking until the quadratic upper model
//! `h(Ã) = f(s) + ∇f(s)·(Ã − s) + C/2 ‖Ã − s‖²` dominates `f(Ã)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::alignment::QuadraticProblem;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Known pixels at their target, unknown at 0.5.
    TrimapFill,
    Half,
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::TrimapFill => "trimap",
            InitMode::Half => "half",
        })
    }
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "trimap" => Ok(InitMode::TrimapFill),
            "half" => Ok(InitMode::Half),
            other => Err(Error::invalid(format!("unknown init mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub c0: f64,
    pub c_growth: f64,
    pub tol: f64,
    pub monotone: bool,
    pub init: InitMode,
    /// Threads for the sparse matrix–vector product.
    pub workers: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 250,
            c0: 1.0,
            c_growth: 2.0,
            tol: 1e-8,
            monotone: true,
            init: InitMode::TrimapFill,
            workers: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::invalid("max_iters must be >= 1"));
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::invalid("c0 must be > 0"));
        }
        if !(self.c_growth > 1.0 && self.c_growth.is_finite()) {
            return Err(Error::invalid("c_growth must be > 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::invalid("tol must be >= 0"));
        }
        Ok(())
    }
}

/// Per-iteration history. Index 0 is the initial point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub objective: Vec<f64>,
    pub step_c: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    pub restarts: usize,
}

impl SolverTrace {
    /// CSV with header `iteration,objective,step_c`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iteration,objective,step_c")?;
        for (i, (f, c)) in self.objective.iter().zip(&self.step_c).enumerate() {
            writeln!(
                w,
                "{},{},{}",
                i,
                crate::format::format_g(*f),
                crate::format::format_g(*c)
            )?;
        }
        Ok(())
    }

    pub fn is_non_increasing(&self) -> bool {
        self.objective.windows(2).all(|w| w[1] <= w[0])
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// `aᵀ M' a + bᵀ a`.
pub fn objective<T: Real>(problem: &QuadraticProblem<T>, a: &[T]) -> T {
    let ma = problem.m_prime.mul_vec(a);
    dot(a, &ma) + dot(&problem.b, a)
}

/// `2 M' a + b`.
pub fn gradient<T: Real>(problem: &QuadraticProblem<T>, a: &[T]) -> Vec<T> {
    let mut g = problem.m_prime.mul_vec(a);
    let two = T::lit(2.0);
    for (gi, &bi) in g.iter_mut().zip(&problem.b) {
        *gi = two * *gi + bi;
    }
    g
}

pub fn project_box<T: Real>(v: &[T]) -> Vec<T> {
    v.iter().map(|&x| x.max(T::zero()).min(T::one())).collect()
}

pub fn initialize<T: Real>(problem: &QuadraticProblem<T>, mode: InitMode) -> Vec<T> {
    let half = T::lit(0.5);
    match mode {
        InitMode::Half => vec![half; problem.dim()],
        InitMode::TrimapFill => problem
            .known_mask
            .iter()
            .zip(&problem.known_values)
            .map(|(&k, &g)| if k { g } else { half })
            .collect(),
    }
}

/// Value and gradient evaluated with one matrix–vector product.
struct Evaluator<'a, T> {
    problem: &'a QuadraticProblem<T>,
    workers: usize,
    scratch: Vec<T>,
}

impl<'a, T: Real> Evaluator<'a, T> {
    fn new(problem: &'a QuadraticProblem<T>, workers: usize) -> Self {
        Self {
            problem,
            workers,
            scratch: vec![T::zero(); problem.dim()],
        }
    }

    fn value(&mut self, a: &[T]) -> T {
        self.problem
            .m_prime
            .mul_vec_into(a, &mut self.scratch, self.workers);
        dot(a, &self.scratch) + dot(&self.problem.b, a)
    }

    fn value_and_gradient(&mut self, a: &[T]) -> (T, Vec<T>) {
        self.problem
            .m_prime
            .mul_vec_into(a, &mut self.scratch, self.workers);
        let f = dot(a, &self.scratch) + dot(&self.problem.b, a);
        let two = T::lit(2.0);
        let g = self
            .scratch
            .iter()
            .zip(&self.problem.b)
            .map(|(&m, &b)| two * m + b)
            .collect();
        (f, g)
    }
}

const MAX_BACKTRACKS: usize = 200;

/// Minimizes the problem over `[0,1]^N` starting from `config.init`.
pub fn nesterov_solve<T: Real>(
    problem: &QuadraticProblem<T>,
    config: &SolverConfig,
) -> Result<(Vec<T>, SolverTrace)> {
    let start = project_box(&initialize(problem, config.init));
    nesterov_solve_from(problem, config, start)
}

/// As [`nesterov_solve`] from an explicit starting point (projected first).
pub fn nesterov_solve_from<T: Real>(
    problem: &QuadraticProblem<T>,
    config: &SolverConfig,
    start: Vec<T>,
) -> Result<(Vec<T>, SolverTrace)> {
    config.validate()?;
    let n = problem.dim();
    if start.len() != n {
        return Err(Error::DimensionMismatch {
            expected: (n, 1),
            actual: (start.len(), 1),
        });
    }
    let mut eval = Evaluator::new(problem, config.workers);
    let growth = T::lit(config.c_growth);
    let tol = T::lit(config.tol);
    let half = T::lit(0.5);

    let mut current = project_box(&start);
    let mut previous = current.clone();
    let mut f_current = eval.value(&current);
    if !f_current.is_finite() {
        return Err(Error::NonFiniteObjective { iteration: 0 });
    }
    let mut trace = SolverTrace {
        objective: vec![f_current.to_f64_lossy()],
        step_c: vec![config.c0],
        ..Default::default()
    };
    let mut t_prev = T::one();
    let mut c = T::lit(config.c0) * growth;
    let mut search = vec![T::zero(); n];
    let mut candidate = vec![T::zero(); n];

    for iter in 1..=config.max_iters {
        let t = (T::one() + (T::one() + T::lit(4.0) * t_prev * t_prev).sqrt()) * half;
        let beta = (t_prev - T::one()) / t;
        for i in 0..n {
            search[i] = current[i] + beta * (current[i] - previous[i]);
        }
        let (f_search, g_search) = eval.value_and_gradient(&search);
        if !f_search.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: iter });
        }

        c /= growth;
        let mut f_candidate;
        let mut tries = 0;
        loop {
            let inv_c = T::one() / c;
            let (mut lin, mut quad) = (T::zero(), T::zero());
            for i in 0..n {
                let v = (search[i] - inv_c * g_search[i]).max(T::zero()).min(T::one());
                candidate[i] = v;
                let step = v - search[i];
                lin += g_search[i] * step;
                quad += step * step;
            }
            f_candidate = eval.value(&candidate);
            if !f_candidate.is_finite() {
                return Err(Error::NonFiniteObjective { iteration: iter });
            }
            let model = f_search + lin + c * half * quad;
            // tolerate rounding when the step has collapsed
            let slack = T::epsilon() * T::lit(16.0) * (f_search.abs() + T::one());
            if f_candidate <= model + slack {
                break;
            }
            tries += 1;
            if tries > MAX_BACKTRACKS {
                return Err(Error::NonFiniteObjective { iteration: iter });
            }
            c *= growth;
        }

        trace.iterations_run = iter;
        trace.step_c.push(c.to_f64_lossy());
        let accept = !config.monotone || f_candidate <= f_current;
        if accept {
            let change = (f_current - f_candidate).abs();
            let scale = f_current.abs().max(f_candidate.abs()).max(T::min_positive_value());
            std::mem::swap(&mut previous, &mut current);
            current.copy_from_slice(&candidate);
            f_current = f_candidate;
            t_prev = t;
            trace.objective.push(f_current.to_f64_lossy());
            if change <= tol * scale {
                trace.converged = true;
                break;
            }
        } else {
            previous.copy_from_slice(&current);
            t_prev = T::one();
            trace.restarts += 1;
            trace.objective.push(f_current.to_f64_lossy());
        }
    }
    Ok((current, trace))
}

/// `‖P(a − ∇f(a)/c) − a‖∞`, zero exactly at constrained minimizers.
pub fn fixed_point_residual<T: Real>(problem: &QuadraticProblem<T>, a: &[T], c: T) -> T {
    let g = gradient(problem, a);
    a.iter()
        .zip(&g)
        .map(|(&x, &gi)| ((x - gi / c).max(T::zero()).min(T::one()) - x).abs())
        .fold(T::zero(), |m, v| m.max(v))
}

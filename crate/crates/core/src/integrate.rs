//! Average-vector-field (AVF) time stepping for polynomial-gradient flows.
//!
//! For `u̇ = S ∇H(u)` with `∇H` of degree at most two, the AVF average of the
//! gradient over the segment `[uₖ, uₖ₊₁]` is exact:
//! `g₀ + G₁(uₖ + uₖ₊₁)/2 + (G₂(uₖ,uₖ) + G₂(uₖ,uₖ₊₁) + G₂(uₖ₊₁,uₖ₊₁))/3`.
//! The linear part is treated implicitly through a cached LU factorization
//! of `I − dt/2·S·G₁`; the quadratic part is resolved by Picard iteration.

use crate::error::{invalid, Error, Result};
use crate::hamsys::PolyGradFlow;
use crate::numkernel::{axpy, max_abs, max_abs_diff, CompressedRows, DenseMatrix, LuFactor};

pub const DEFAULT_PICARD_TOL: f64 = 1e-12;
pub const DEFAULT_PICARD_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvfScheme {
    pub dt: f64,
    pub t_end: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Record every `snapshot_stride`-th step.
    pub snapshot_stride: usize,
}

impl AvfScheme {
    pub fn new(dt: f64, t_end: f64, snapshot_stride: usize) -> Result<Self> {
        let scheme = Self {
            dt,
            t_end,
            picard_tol: DEFAULT_PICARD_TOL,
            picard_max_iter: DEFAULT_PICARD_MAX_ITER,
            snapshot_stride,
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn with_picard(mut self, tol: f64, max_iter: usize) -> Result<Self> {
        self.picard_tol = tol;
        self.picard_max_iter = max_iter;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.picard_tol > 0.0) {
            return Err(invalid("Picard tolerance must be positive"));
        }
        if self.picard_max_iter == 0 {
            return Err(invalid("Picard iteration limit must be at least 1"));
        }
        if self.snapshot_stride == 0 {
            return Err(invalid("snapshot stride must be at least 1"));
        }
        self.steps().map(|_| ())
    }

    /// Number of steps; `t_end/dt` must be an integer up to rounding.
    pub fn steps(&self) -> Result<usize> {
        let ratio = self.t_end / self.dt;
        let steps = ratio.round();
        if !(steps >= 1.0) || (ratio - steps).abs() > 2.0 * f64::EPSILON * ratio.abs() {
            return Err(invalid(format!(
                "t_end = {} is not an integer multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(steps as usize)
    }
}

/// Recorded states of one integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Recording times, starting at `t₀ = 0`.
    pub times: Vec<f64>,
    /// One recorded state per column.
    pub states: DenseMatrix,
    /// Energy after every step, including the initial state.
    pub energies: Vec<f64>,
    pub steps_total: usize,
    /// Largest Picard iteration count over all steps (0 for linear flows).
    pub max_picard_iterations: usize,
}

impl Trajectory {
    pub fn recorded(&self) -> usize {
        self.times.len()
    }

    pub fn state(&self, k: usize) -> Vec<f64> {
        self.states.column(k)
    }

    pub fn initial_state(&self) -> Vec<f64> {
        self.states.column(0)
    }

    /// Every `every`-th recorded state, starting with the first; the
    /// per-step energy series is kept whole.
    pub fn subsample(&self, every: usize) -> Result<Trajectory> {
        if every == 0 {
            return Err(invalid("subsampling factor must be at least 1"));
        }
        let picks: Vec<usize> = (0..self.recorded()).step_by(every).collect();
        let columns: Vec<Vec<f64>> = picks.iter().map(|&k| self.states.column(k)).collect();
        let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
        Ok(Trajectory {
            times: picks.iter().map(|&k| self.times[k]).collect(),
            states: DenseMatrix::from_columns(self.states.rows(), &refs)?,
            energies: self.energies.clone(),
            steps_total: self.steps_total,
            max_picard_iterations: self.max_picard_iterations,
        })
    }

    /// Largest `|E(tₖ) − E(t₀)|` over all steps.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        self.energies.iter().fold(0.0_f64, |m, e| m.max((e - e0).abs()))
    }
}

/// One-step AVF map for a fixed flow and step size, with the implicit
/// matrix factored once.
#[derive(Debug)]
pub struct AvfStepper<'a> {
    flow: &'a PolyGradFlow,
    dt: f64,
    lu: LuFactor,
    explicit: CompressedRows,
    structure: CompressedRows,
    // dt·S·g₀
    forcing: Option<Vec<f64>>,
    picard_tol: f64,
    picard_max_iter: usize,
}

struct PicardFailure {
    iterations: usize,
    increment: f64,
}

impl<'a> AvfStepper<'a> {
    pub fn new(flow: &'a PolyGradFlow, dt: f64, picard_tol: f64, picard_max_iter: usize) -> Result<Self> {
        if dt == 0.0 || !dt.is_finite() {
            return Err(invalid(format!("invalid step size {dt}")));
        }
        if !(picard_tol > 0.0) || picard_max_iter == 0 {
            return Err(invalid("Picard settings must be positive"));
        }
        let n = flow.dim();
        let sg1 = flow.structure().matmul(flow.g1());
        let half = 0.5 * dt;
        let implicit = DenseMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - half * sg1[(i, j)]
        });
        let explicit = DenseMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id + half * sg1[(i, j)]
        });
        let forcing = flow.g0().map(|g0| {
            flow.structure()
                .matvec(g0)
                .into_iter()
                .map(|x| dt * x)
                .collect()
        });
        Ok(Self {
            flow,
            dt,
            lu: LuFactor::new(&implicit)?,
            explicit: CompressedRows::from_dense(&explicit),
            structure: CompressedRows::from_dense(flow.structure()),
            forcing,
            picard_tol,
            picard_max_iter,
        })
    }

    /// Advances one step; returns the new state and the Picard iteration count.
    pub fn step(&self, u: &[f64]) -> Result<(Vec<f64>, usize)> {
        self.advance(u, None).map_err(|f| Error::StepFailure {
            step: 0,
            iterations: f.iterations,
            increment: f.increment,
        })
    }

    // `guess` seeds the Picard iteration; it does not change the fixed point.
    fn advance(&self, u: &[f64], guess: Option<Vec<f64>>) -> std::result::Result<(Vec<f64>, usize), PicardFailure> {
        let n = u.len();
        let mut base = vec![0.0; n];
        self.explicit.matvec_into(u, &mut base);
        if let Some(f) = &self.forcing {
            base.iter_mut().zip(f).for_each(|(b, f)| *b += f);
        }
        let Some(quad) = self.flow.g2() else {
            return Ok((self.lu.solve(&base), 0));
        };

        let q_start = quad.eval(u, u);
        let mut current = guess.unwrap_or_else(|| u.to_vec());
        let mut avg = vec![0.0; n];
        let mut pushed = vec![0.0; n];
        let mut increment = f64::INFINITY;
        for iteration in 1..=self.picard_max_iter {
            let q_mixed = quad.eval(u, &current);
            let q_end = quad.eval(&current, &current);
            for i in 0..n {
                avg[i] = (q_start[i] + q_mixed[i] + q_end[i]) / 3.0;
            }
            self.structure.matvec_into(&avg, &mut pushed);
            let rhs: Vec<f64> = base.iter().zip(&pushed).map(|(b, p)| b + self.dt * p).collect();
            let next = self.lu.solve(&rhs);
            increment = max_abs_diff(&next, &current);
            if !increment.is_finite() {
                return Err(PicardFailure {
                    iterations: iteration,
                    increment,
                });
            }
            let converged = increment <= self.picard_tol * (1.0 + max_abs(&current));
            current = next;
            if converged {
                return Ok((current, iteration));
            }
        }
        Err(PicardFailure {
            iterations: self.picard_max_iter,
            increment,
        })
    }
}

impl AvfStepper<'_> {
    // uₖ + dt·f + dt²/2·J f with the exact Jacobian J = S(G₁ + 2G₂(u,·)).
    fn taylor_guess(&self, u: &[f64]) -> Result<Vec<f64>> {
        let f = self.flow.eval_rhs(u)?;
        let mut jf = self.flow.g1().matvec(&f);
        if let Some(quad) = self.flow.g2() {
            axpy(2.0, &quad.eval(u, &f), &mut jf);
        }
        let mut sjf = vec![0.0; u.len()];
        self.structure.matvec_into(&jf, &mut sjf);
        let half = 0.5 * self.dt * self.dt;
        Ok((0..u.len()).map(|i| u[i] + self.dt * f[i] + half * sjf[i]).collect())
    }
}

/// Single AVF step without factorization reuse.
pub fn avf_step(
    flow: &PolyGradFlow,
    u: &[f64],
    dt: f64,
    picard_tol: f64,
    picard_max_iter: usize,
) -> Result<Vec<f64>> {
    check_state(flow, u)?;
    Ok(AvfStepper::new(flow, dt, picard_tol, picard_max_iter)?.step(u)?.0)
}

/// Integrates `flow` from `u0`, recording the flow's own energy at every step.
pub fn integrate(flow: &PolyGradFlow, u0: &[f64], scheme: &AvfScheme) -> Result<Trajectory> {
    integrate_with_energy(flow, u0, scheme, |u| flow.eval_energy(u))
}

/// Integrates `flow` from `u0` with a caller-supplied energy functional
/// (reduced models evaluate the full-order energy of the decoded state).
pub fn integrate_with_energy(
    flow: &PolyGradFlow,
    u0: &[f64],
    scheme: &AvfScheme,
    mut energy: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<Trajectory> {
    scheme.validate()?;
    check_state(flow, u0)?;
    let steps = scheme.steps()?;
    let stepper = AvfStepper::new(flow, scheme.dt, scheme.picard_tol, scheme.picard_max_iter)?;

    let recorded = steps / scheme.snapshot_stride + 1;
    let mut times = Vec::with_capacity(recorded);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(recorded);
    let mut energies = Vec::with_capacity(steps + 1);
    let mut max_iters = 0;

    let mut u = u0.to_vec();
    // Last two accepted states, newest first.
    let mut history: Vec<Vec<f64>> = Vec::with_capacity(2);
    times.push(0.0);
    columns.push(u.clone());
    energies.push(energy(&u)?);
    for k in 1..=steps {
        let guess = match history.len() {
            0 | 1 if stepper.flow.g2().is_some() => Some(stepper.taylor_guess(&u)?),
            _ => extrapolate(&u, &history),
        };
        let (next, iters) = stepper.advance(&u, guess).map_err(|f| Error::StepFailure {
            step: k,
            iterations: f.iterations,
            increment: f.increment,
        })?;
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericalFailure(format!("non-finite state at step {k}")));
        }
        history.insert(0, std::mem::replace(&mut u, next));
        history.truncate(2);
        max_iters = max_iters.max(iters);
        energies.push(energy(&u)?);
        if k % scheme.snapshot_stride == 0 {
            times.push(k as f64 * scheme.dt);
            columns.push(u.clone());
        }
    }

    let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    Ok(Trajectory {
        times,
        states: DenseMatrix::from_columns(flow.dim(), &refs)?,
        energies,
        steps_total: steps,
        max_picard_iterations: max_iters,
    })
}

// Polynomial extrapolation through the latest states, used as the Picard start.
fn extrapolate(u: &[f64], history: &[Vec<f64>]) -> Option<Vec<f64>> {
    match history {
        [] => None,
        [p] => Some(u.iter().zip(p).map(|(a, b)| 2.0 * a - b).collect()),
        [p, q, ..] => Some(
            u.iter()
                .zip(p)
                .zip(q)
                .map(|((a, b), c)| 3.0 * a - 3.0 * b + c)
                .collect(),
        ),
    }
}

fn check_state(flow: &PolyGradFlow, u: &[f64]) -> Result<()> {
    if u.len() != flow.dim() {
        return Err(invalid(format!(
            "initial state has length {}, flow dimension is {}",
            u.len(),
            flow.dim()
        )));
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(invalid("initial state has non-finite entries"));
    }
    Ok(())
}

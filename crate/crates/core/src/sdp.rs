//! Small dense semidefinite programs in LMI form:
//!
//! ```text
//! minimize  c'x   subject to   F_k(x) = F_k0 + sum_i x_i F_ki  <= 0   (each k)
//! ```
//!
//! solved with a log-det barrier and damped Newton steps. Every variable is
//! also kept inside a large box so the barrier stays bounded below.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Box `|x_i| <= VAR_BOUND` applied to every variable.
/// Newton steps allowed for a single centering before moving on.
const MAX_CENTERING_STEPS: usize = 200;

pub const VAR_BOUND: f64 = 1e6;

/// Symmetric matrix affine in the decision variables.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineBlock {
    pub name: String,
    pub constant: DMatrix<f64>,
    /// `(variable index, coefficient matrix)`; indices may repeat.
    pub terms: Vec<(usize, DMatrix<f64>)>,
}

impl AffineBlock {
    pub fn new(name: impl Into<String>, constant: DMatrix<f64>) -> Self {
        AffineBlock {
            name: name.into(),
            constant,
            terms: Vec::new(),
        }
    }

    /// `coeff * x_var <= upper` as a 1x1 block.
    pub fn scalar(name: impl Into<String>, var: usize, coeff: f64, upper: f64) -> Self {
        let mut b = AffineBlock::new(name, DMatrix::from_element(1, 1, -upper));
        b.terms.push((var, DMatrix::from_element(1, 1, coeff)));
        b
    }

    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    pub fn add_term(&mut self, var: usize, coeff: DMatrix<f64>) {
        if coeff.iter().any(|v| *v != 0.0) {
            self.terms.push((var, coeff));
        }
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for (i, m) in &self.terms {
            out += m * x[*i];
        }
        out
    }

    /// Removes rows and columns that are zero in the constant and in every
    /// coefficient. They only add zero eigenvalues, which would leave the
    /// block without a strict interior.
    pub fn without_zero_rows(&self) -> AffineBlock {
        let n = self.dim();
        let keep: Vec<usize> = (0..n)
            .filter(|&r| {
                std::iter::once(&self.constant)
                    .chain(self.terms.iter().map(|(_, m)| m))
                    .any(|m| m.row(r).iter().any(|v| *v != 0.0))
            })
            .collect();
        if keep.len() == n {
            return self.clone();
        }
        let pick = |m: &DMatrix<f64>| DMatrix::from_fn(keep.len(), keep.len(), |i, j| m[(keep[i], keep[j])]);
        AffineBlock {
            name: self.name.clone(),
            constant: pick(&self.constant),
            terms: self.terms.iter().map(|(i, m)| (*i, pick(m))).collect(),
        }
    }
}

/// Largest eigenvalue of a symmetric matrix (`-inf` for an empty one).
pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sdp {
    pub nvars: usize,
    pub blocks: Vec<AffineBlock>,
    pub objective: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    NumericalFailure(String),
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Strictly feasible point reached (present when `Optimal`).
    pub x: Option<Vec<f64>>,
    pub objective: f64,
    pub newton_steps: usize,
}

/// Barrier parameters.
#[derive(Debug, Clone, Copy)]
pub struct BarrierOptions {
    /// Stop once the duality-gap bound `nu/t` falls below this.
    pub gap_tol: f64,
    /// Factor applied to `t` between centering steps.
    pub mu: f64,
    pub max_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions {
            gap_tol: 1e-10,
            mu: 8.0,
            max_newton: 4000,
        }
    }
}

impl Sdp {
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .map(|b| max_eigenvalue(&b.eval(x)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn scale(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.constant.iter())
            .fold(1.0f64, |m, v| m.max(v.abs()))
    }

    fn reduced(&self) -> Sdp {
        Sdp {
            nvars: self.nvars,
            blocks: self
                .blocks
                .iter()
                .map(AffineBlock::without_zero_rows)
                .filter(|b| b.dim() > 0)
                .collect(),
            objective: self.objective.clone(),
        }
    }

    /// Strictly feasible point, or `None` when the best achievable maximum
    /// eigenvalue is not negative.
    pub fn find_interior(&self, opts: &BarrierOptions) -> Result<Option<Vec<f64>>, String> {
        let p = self.reduced();
        p.phase_one(opts).map(|r| r.map(|(x, _)| x))
    }

    fn phase_one(&self, opts: &BarrierOptions) -> Result<Option<(Vec<f64>, usize)>, String> {
        let n = self.nvars;
        let s = n;
        let mut blocks: Vec<AffineBlock> = self
            .blocks
            .iter()
            .map(|b| {
                let mut b = b.clone();
                b.terms.push((s, -DMatrix::identity(b.dim(), b.dim())));
                b
            })
            .collect();
        blocks.push(AffineBlock::scalar("s >= -1", s, -1.0, 1.0));
        let mut objective = vec![0.0; n + 1];
        objective[s] = 1.0;
        let aug = Sdp {
            nvars: n + 1,
            blocks,
            objective,
        };
        let mut x0 = vec![0.0; n + 1];
        let worst = self.max_violation(&x0[..n]);
        x0[s] = worst.max(-0.5) + 1.0;
        let stop = -1e-6 * self.scale().min(1e3);
        let sol = aug.barrier(x0, opts, Some((s, stop)))?;
        let x = sol.0;
        let tol = -1e-10 * self.scale();
        if x[s] < tol && self.max_violation(&x[..n]) < 0.0 {
            Ok(Some((x[..n].to_vec(), sol.1)))
        } else {
            Ok(None)
        }
    }

    /// Minimizes the objective; `Infeasible` when no strictly feasible point
    /// exists.
    pub fn solve(&self, opts: &BarrierOptions) -> SdpSolution {
        let p = self.reduced();
        let fail = |msg: String| SdpSolution {
            status: SdpStatus::NumericalFailure(msg),
            x: None,
            objective: f64::NAN,
            newton_steps: 0,
        };
        let (x0, steps1) = match p.phase_one(opts) {
            Ok(Some(v)) => v,
            Ok(None) => {
                return SdpSolution {
                    status: SdpStatus::Infeasible,
                    x: None,
                    objective: f64::NAN,
                    newton_steps: 0,
                }
            }
            Err(e) => return fail(e),
        };
        match p.barrier(x0, opts, None) {
            Ok((x, steps2)) => {
                let objective = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                SdpSolution {
                    status: SdpStatus::Optimal,
                    x: Some(x),
                    objective,
                    newton_steps: steps1 + steps2,
                }
            }
            Err(e) => fail(e),
        }
    }

    /// Path-following from a strictly feasible `x`. With `early = (i, v)`
    /// it returns as soon as `x_i < v`.
    fn barrier(
        &self,
        mut x: Vec<f64>,
        opts: &BarrierOptions,
        early: Option<(usize, f64)>,
    ) -> Result<(Vec<f64>, usize), String> {
        if self.slack_factors(&x).is_none() {
            return Err("barrier started outside the feasible set".into());
        }
        let nu: f64 = self.blocks.iter().map(|b| b.dim() as f64).sum::<f64>() + 2.0 * self.nvars as f64;
        let infeasible_above = early.map_or(f64::INFINITY, |(_, v)| v.abs());
        let mut t = 1.0;
        let mut steps = 0;
        loop {
            let budget = opts.max_newton.saturating_sub(steps).min(MAX_CENTERING_STEPS);
            steps += self.center(&mut x, t, budget, early)?;
            if let Some((i, v)) = early {
                // x_i - nu/t bounds the optimum from below
                if x[i] < v || x[i] - nu / t > infeasible_above {
                    return Ok((x, steps));
                }
            }
            if nu / t < opts.gap_tol {
                return Ok((x, steps));
            }
            if steps >= opts.max_newton {
                return Err(format!("no convergence within {} Newton steps", opts.max_newton));
            }
            t *= opts.mu;
        }
    }

    /// Cholesky factors of `-F_k(x)` for every block, or `None` outside the
    /// interior.
    fn slack_factors(&self, x: &[f64]) -> Option<Vec<nalgebra::Cholesky<f64, nalgebra::Dyn>>> {
        if x.iter().any(|v| !v.is_finite() || v.abs() >= VAR_BOUND) {
            return None;
        }
        self.blocks
            .iter()
            .map(|b| nalgebra::Cholesky::new(-b.eval(x)))
            .collect()
    }

    fn merit(&self, x: &[f64], t: f64) -> Option<f64> {
        let factors = self.slack_factors(x)?;
        let mut v: f64 = t * self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>();
        for f in &factors {
            v -= 2.0 * f.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        }
        for xi in x {
            v -= (VAR_BOUND - xi).ln() + (VAR_BOUND + xi).ln();
        }
        Some(v)
    }

    fn center(&self, x: &mut Vec<f64>, t: f64, budget: usize, early: Option<(usize, f64)>) -> Result<usize, String> {
        let n = self.nvars;
        let mut steps = 0;
        while steps < budget {
            let factors = self.slack_factors(x).ok_or("left the feasible set")?;
            let mut g = DVector::from_iterator(n, self.objective.iter().map(|c| t * c));
            let mut h = DMatrix::<f64>::zeros(n, n);
            for (b, f) in self.blocks.iter().zip(&factors) {
                let s_inv = f.inverse();
                let a: Vec<(usize, DMatrix<f64>)> = b.terms.iter().map(|(i, m)| (*i, &s_inv * m)).collect();
                for (p, (i, ai)) in a.iter().enumerate() {
                    g[*i] += ai.trace();
                    for (j, aj) in &a[..=p] {
                        // tr(A_i A_j) without forming the product
                        let v: f64 = ai.iter().zip(aj.transpose().iter()).map(|(u, w)| u * w).sum();
                        h[(*i, *j)] += v;
                        if !std::ptr::eq(ai, aj) {
                            h[(*j, *i)] += v;
                        }
                    }
                }
            }
            for (i, xi) in x.iter().enumerate() {
                let (up, lo) = (VAR_BOUND - xi, VAR_BOUND + xi);
                g[i] += 1.0 / up - 1.0 / lo;
                h[(i, i)] += 1.0 / (up * up) + 1.0 / (lo * lo);
            }
            let step = newton_direction(&h, &g).ok_or("singular Newton system")?;
            let decrement = -g.dot(&step);
            if !decrement.is_finite() {
                return Err("non-finite Newton decrement".into());
            }
            if decrement / 2.0 <= 1e-10 {
                break;
            }
            let f0 = self.merit(x, t).ok_or("left the feasible set")?;
            let mut alpha = 1.0;
            let trial = |alpha: f64| -> Vec<f64> { x.iter().zip(step.iter()).map(|(a, d)| a + alpha * d).collect() };
            let mut accepted = None;
            while alpha > 1e-14 {
                let xn = trial(alpha);
                if let Some(f1) = self.merit(&xn, t) {
                    if f1 <= f0 - 0.25 * alpha * decrement {
                        accepted = Some((xn, f0 - f1));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            steps += 1;
            let gain = match accepted {
                Some((xn, gain)) => {
                    *x = xn;
                    gain
                }
                // no further progress at this precision
                None => break,
            };
            // decrease lost in the rounding of the merit value
            if alpha < 1e-8 || gain <= 1e-13 * f0.abs().max(1.0) {
                break;
            }
            if let Some((i, v)) = early {
                if x[i] < v {
                    break;
                }
            }
        }
        Ok(steps)
    }
}

fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = nalgebra::Cholesky::new(h.clone()) {
        let d = ch.solve(&(-g));
        if d.iter().all(|v| v.is_finite()) {
            return Some(d);
        }
    }
    // regularize an ill-conditioned Hessian
    let ridge = 1e-12 * h.diagonal().iter().fold(1e-300f64, |m, v| m.max(v.abs()));
    let mut hr = h.clone();
    for i in 0..hr.nrows() {
        hr[(i, i)] += ridge;
    }
    nalgebra::Cholesky::new(hr).map(|ch| ch.solve(&(-g)))
}

//! Assembly of the dissipation LMIs whose feasibility certifies that a
//! system's scaled graph lies in a quadratic region.
//!
//! Decision variables are, in order: the upper triangle of the storage
//! matrix `P`, one scalar (`rho = r^2` for disks, the offset `c` for
//! half-planes), the reset multipliers `tau1, tau2`, and the upper triangles
//! of the PWL multipliers `U_i`. Every block is written as `F(x) <= 0`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{to_rows, PwlSystem, ResetSystem, Sign, StateSpace, SystemModel};
use crate::regions::{PiMatrix, RegionSpec};
use crate::sdp::{max_eigenvalue, AffineBlock, Sdp};

/// A posteriori tolerance on block eigenvalues.
pub const FEAS_EPS: f64 = 1e-7;
/// Tolerance on `min eig(P)` in hard mode.
pub const PSD_EPS: f64 = 1e-9;

/// Which region family the scalar variable parametrizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Supply {
    /// `Pi(sigma, lambda_c, sqrt(rho))`; interior for `Neg`, exterior for `Pos`.
    Disk { sigma: Sign, lambda_c: f64 },
    /// `[[0, sign], [sign, c]]` with `c` free.
    HalfPlane { sign: Sign },
}

impl Supply {
    /// `Pi` at scalar value `v`.
    pub fn pi(&self, v: f64) -> PiMatrix {
        match *self {
            Supply::Disk { sigma, lambda_c } => {
                let s = sigma.value();
                PiMatrix::new(s, -s * lambda_c, s * (lambda_c * lambda_c - v))
            }
            Supply::HalfPlane { sign } => PiMatrix::new(0.0, sign.value(), v),
        }
    }

    /// Region certified at scalar value `v`, if it is a proper one.
    pub fn region(&self, v: f64) -> Option<RegionSpec> {
        match *self {
            Supply::Disk { sigma, lambda_c } => {
                if !(v > 0.0) {
                    return None;
                }
                let r = v.sqrt();
                Some(match sigma {
                    Sign::Neg => RegionSpec::DiskInterior { lambda_c, r },
                    Sign::Pos => RegionSpec::DiskExterior { lambda_c, r },
                })
            }
            Supply::HalfPlane { sign } => Some(RegionSpec::HalfPlane { sign, c: v }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarLayout {
    pub states: usize,
    /// Index of `rho` (disks) or `c` (half-planes).
    pub scalar: usize,
    pub tau: Option<(usize, usize)>,
    /// `(first index, size p)` of each `U_i`.
    pub multipliers: Vec<(usize, usize)>,
    pub total: usize,
}

impl VarLayout {
    fn p_count(m: usize) -> usize {
        m * (m + 1) / 2
    }

    /// Index of `P[i][j]` (`i <= j`).
    pub fn p_index(&self, i: usize, j: usize) -> usize {
        sym_index(self.states, i, j)
    }

    pub fn p_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        sym_from(x, 0, self.states)
    }
}

fn sym_index(m: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * m - i * (i + 1) / 2 + j
}

fn sym_from(x: &[f64], start: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| x[start + sym_index(m, i, j)])
}

/// Symmetric basis matrix with ones at `(i, j)` and `(j, i)`.
fn sym_basis(m: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(m, m);
    e[(i, j)] = 1.0;
    e[(j, i)] = 1.0;
    e
}

/// Solver certificate for one region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    /// `r^2` for disks, offset `c` for half-planes.
    pub rho_opt: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau2: Option<f64>,
    #[serde(rename = "U", skip_serializing_if = "Vec::is_empty")]
    pub u: Vec<Vec<Vec<f64>>>,
    pub max_constraint_eig: f64,
    pub min_p_eig: f64,
}

impl Certificate {
    pub fn p_matrix(&self) -> DMatrix<f64> {
        let m = self.p.len();
        DMatrix::from_fn(m, m, |i, j| self.p[i][j])
    }

    /// Storage `x' P x`.
    pub fn storage(&self, x: &[f64]) -> f64 {
        let p = self.p_matrix();
        let v = nalgebra::DVector::from_column_slice(x);
        (v.transpose() * p * v)[(0, 0)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmiProblem {
    pub sdp: Sdp,
    pub layout: VarLayout,
    pub supply: Supply,
    pub hard: bool,
    cap: Option<f64>,
}

/// `[C D; 0 I]' (Pi kron I_n) [C D; 0 I]`.
pub fn theta(pi: &PiMatrix, c: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = d.nrows();
    let m = c.ncols();
    if c.nrows() != n || d.ncols() != n {
        return Err(Error::Dimension(format!(
            "C is {}x{}, D is {}x{}",
            c.nrows(),
            c.ncols(),
            d.nrows(),
            d.ncols()
        )));
    }
    let mut cd = DMatrix::zeros(n, m + n);
    cd.view_mut((0, 0), (n, m)).copy_from(c);
    cd.view_mut((0, m), (n, n)).copy_from(d);
    let mut oi = DMatrix::zeros(n, m + n);
    oi.view_mut((0, m), (n, n)).fill_with_identity();
    let cross = cd.transpose() * &oi;
    Ok(cd.transpose() * &cd * pi.a + (&cross + cross.transpose()) * pi.b + oi.transpose() * &oi * pi.c)
}

/// `[[A'E + E A, E B], [B'E, 0]]`.
fn kyp(sys: &StateSpace, e: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = (sys.states(), sys.ports());
    let mut out = DMatrix::zeros(m + n, m + n);
    out.view_mut((0, 0), (m, m))
        .copy_from(&(sys.a.transpose() * e + e * &sys.a));
    let eb = e * &sys.b;
    out.view_mut((0, m), (m, n)).copy_from(&eb);
    out.view_mut((m, 0), (n, m)).copy_from(&eb.transpose());
    out
}

/// `KYP(P) - Theta(Pi)` with `P` and the supply scalar as variables.
fn dissipation_block(name: String, sys: &StateSpace, supply: Supply, layout: &VarLayout) -> Result<AffineBlock> {
    let m = sys.states();
    let mut block = AffineBlock::new(name, -theta(&supply.pi(0.0), &sys.c, &sys.d)?);
    for i in 0..m {
        for j in i..m {
            block.add_term(layout.p_index(i, j), kyp(sys, &sym_basis(m, i, j)));
        }
    }
    // Theta is linear in Pi, so the scalar enters through Theta(dPi/dv)
    let dpi = match supply {
        Supply::Disk { sigma, .. } => PiMatrix::new(0.0, 0.0, -sigma.value()),
        Supply::HalfPlane { .. } => PiMatrix::new(0.0, 0.0, 1.0),
    };
    block.add_term(layout.scalar, -theta(&dpi, &sys.c, &sys.d)?);
    Ok(block)
}

fn objective(supply: Supply, layout: &VarLayout) -> Vec<f64> {
    let mut c = vec![0.0; layout.total];
    c[layout.scalar] = match supply {
        Supply::Disk { sigma: Sign::Neg, .. } => 1.0,
        Supply::Disk { sigma: Sign::Pos, .. } => -1.0,
        Supply::HalfPlane { .. } => 1.0,
    };
    c
}

fn hard_block(layout: &VarLayout) -> AffineBlock {
    let m = layout.states;
    let mut b = AffineBlock::new("P >= 0", DMatrix::zeros(m, m));
    for i in 0..m {
        for j in i..m {
            b.add_term(layout.p_index(i, j), -sym_basis(m, i, j));
        }
    }
    b
}

/// Plain LTI problem. Requires a Hurwitz `A`.
pub fn build_lti(sys: &StateSpace, sigma: Sign, lambda_c: f64, hard: bool) -> Result<LmiProblem> {
    build(&SystemModel::Lti(sys.clone()), Supply::Disk { sigma, lambda_c }, hard)
}

pub fn build_reset(sys: &ResetSystem, sigma: Sign, lambda_c: f64, hard: bool) -> Result<LmiProblem> {
    build(&SystemModel::Reset(sys.clone()), Supply::Disk { sigma, lambda_c }, hard)
}

pub fn build_pwl(sys: &PwlSystem, sigma: Sign, lambda_c: f64, hard: bool) -> Result<LmiProblem> {
    build(&SystemModel::Pwl(sys.clone()), Supply::Disk { sigma, lambda_c }, hard)
}

/// Assembles the problem for any system class and supply family.
pub fn build(model: &SystemModel, supply: Supply, hard: bool) -> Result<LmiProblem> {
    if let Supply::Disk { lambda_c, .. } = supply {
        if !lambda_c.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda_c must be finite, got {lambda_c}")));
        }
    }
    let m = model.states();
    let np = VarLayout::p_count(m);
    let mut layout = VarLayout {
        states: m,
        scalar: np,
        tau: None,
        multipliers: Vec::new(),
        total: np + 1,
    };
    let mut blocks = Vec::new();
    match model {
        SystemModel::Lti(sys) => {
            sys.require_hurwitz()?;
            blocks.push(dissipation_block("dissipation".into(), sys, supply, &layout)?);
        }
        SystemModel::Reset(sys) => {
            let (t1, t2) = (layout.total, layout.total + 1);
            layout.tau = Some((t1, t2));
            layout.total += 2;
            let mut flow = dissipation_block("flow".into(), &sys.base, supply, &layout)?;
            flow.add_term(t1, sys.flow_form.clone());
            let n = sys.base.ports();
            let mut jump = AffineBlock::new("jump", DMatrix::zeros(m + n, m + n));
            for i in 0..m {
                for j in i..m {
                    let e = sym_basis(m, i, j);
                    let mut coeff = DMatrix::zeros(m + n, m + n);
                    coeff
                        .view_mut((0, 0), (m, m))
                        .copy_from(&(sys.reset.transpose() * &e * &sys.reset - &e));
                    jump.add_term(layout.p_index(i, j), coeff);
                }
            }
            jump.add_term(t2, -sys.flow_form.clone());
            blocks.push(flow);
            blocks.push(jump);
            blocks.push(AffineBlock::scalar("tau1 >= 0", t1, -1.0, 0.0));
            blocks.push(AffineBlock::scalar("tau2 >= 0", t2, -1.0, 0.0));
        }
        SystemModel::Pwl(sys) => {
            for (k, mode) in sys.modes.iter().enumerate() {
                let p = mode.guard.nrows();
                let start = layout.total;
                layout.multipliers.push((start, p));
                layout.total += VarLayout::p_count(p);
                let mut block = dissipation_block(format!("mode {}", k + 1), &mode.dynamics, supply, &layout)?;
                for a in 0..p {
                    for b in a..p {
                        let var = start + sym_index(p, a, b);
                        block.add_term(var, mode.guard.transpose() * sym_basis(p, a, b) * &mode.guard);
                        blocks.push(AffineBlock::scalar(format!("U{}[{a},{b}] >= 0", k + 1), var, -1.0, 0.0));
                    }
                }
                blocks.insert(k, block);
            }
        }
    }
    if hard {
        blocks.push(hard_block(&layout));
    }
    let c = objective(supply, &layout);
    Ok(LmiProblem {
        sdp: Sdp {
            nvars: layout.total,
            blocks,
            objective: c,
        },
        layout,
        supply,
        hard,
        cap: None,
    })
}

impl LmiProblem {
    /// Adds `v <= upper` on the supply scalar.
    pub fn cap_scalar(&mut self, upper: f64) {
        self.cap = Some(self.cap.map_or(upper, |c| c.min(upper)));
        self.sdp
            .blocks
            .push(AffineBlock::scalar("scalar cap", self.layout.scalar, 1.0, upper));
    }

    pub fn scalar_cap(&self) -> Option<f64> {
        self.cap
    }

    /// Problem with the supply scalar fixed to `v` and no objective.
    pub fn with_scalar_fixed(&self, v: f64) -> Sdp {
        let s = self.layout.scalar;
        let blocks = self
            .sdp
            .blocks
            .iter()
            .map(|b| {
                let mut out = AffineBlock::new(b.name.clone(), b.constant.clone());
                for (i, m) in &b.terms {
                    if *i == s {
                        out.constant += m * v;
                    } else {
                        out.terms.push((*i, m.clone()));
                    }
                }
                out
            })
            .collect();
        Sdp {
            nvars: self.sdp.nvars,
            blocks,
            objective: vec![0.0; self.sdp.nvars],
        }
    }

    pub fn blocks_at(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        self.sdp.blocks.iter().map(|b| b.eval(x)).collect()
    }

    /// Extracts the certificate at `x`, re-checking every block.
    pub fn certificate(&self, x: &[f64]) -> Certificate {
        let l = &self.layout;
        let p = l.p_matrix(x);
        let min_p_eig = if l.states == 0 {
            0.0
        } else {
            -max_eigenvalue(&(-&p))
        };
        Certificate {
            p: to_rows(&p),
            rho_opt: x[l.scalar],
            tau1: l.tau.map(|(a, _)| x[a]),
            tau2: l.tau.map(|(_, b)| x[b]),
            u: l.multipliers
                .iter()
                .map(|&(start, size)| to_rows(&sym_from(x, start, size)))
                .collect(),
            max_constraint_eig: self.sdp.max_violation(x),
            min_p_eig,
        }
    }

    /// Whether `cert` passes the a posteriori checks.
    pub fn verify(&self, cert: &Certificate) -> bool {
        cert.max_constraint_eig <= FEAS_EPS && (!self.hard || cert.min_p_eig >= -PSD_EPS)
    }

    /// Plain-text dump, one line per nonzero upper-triangle entry:
    /// `block i j const coeff_0 ... coeff_{n-1}`.
    pub fn dump_triplets(&self) -> String {
        let nv = self.sdp.nvars;
        let mut out = String::new();
        let _ = writeln!(out, "# variables {nv}");
        for (k, b) in self.sdp.blocks.iter().enumerate() {
            let _ = writeln!(out, "# block {k} {} dim {}", b.name, b.dim());
            for i in 0..b.dim() {
                for j in i..b.dim() {
                    let mut coeffs = vec![0.0; nv];
                    for (v, m) in &b.terms {
                        coeffs[*v] += m[(i, j)];
                    }
                    let c0 = b.constant[(i, j)];
                    if c0 == 0.0 && coeffs.iter().all(|v| *v == 0.0) {
                        continue;
                    }
                    let _ = write!(out, "{k} {i} {j} {c0}");
                    for c in coeffs {
                        let _ = write!(out, " {c}");
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

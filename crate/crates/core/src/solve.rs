//! Solver backends and the interior/exterior sweeps that turn a system into
//! an intersection of certified regions.

use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::error::Result;
use crate::lmi::{build, Certificate, LmiProblem, Supply};
use crate::model::{linspace, Sign, SweepConfig, SystemModel};
use crate::par;
use crate::regions::{RegionEntry, RegionSpec, SgApproximation, SgMode};
use crate::sdp::{BarrierOptions, SdpStatus};

/// Exterior radii are capped at `CAP_FACTOR * gamma0`.
pub const CAP_FACTOR: f64 = 10.0;
/// Points in each default grid.
pub const DEFAULT_GRID_POINTS: usize = 81;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalFailure(String),
}

#[derive(Debug, Clone)]
pub struct BackendSolution {
    pub status: SolveStatus,
    pub x: Option<Vec<f64>>,
}

/// Anything that optimizes the supply scalar of an [`LmiProblem`].
/// Implementations are shared across worker threads.
pub trait SdpBackend: Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, problem: &LmiProblem) -> BackendSolution;
}

/// Log-det barrier interior-point method on the full problem.
#[derive(Debug, Clone, Copy, Default)]
pub struct BarrierBackend {
    pub options: BarrierOptions,
}

impl SdpBackend for BarrierBackend {
    fn name(&self) -> &'static str {
        "barrier"
    }

    fn solve(&self, problem: &LmiProblem) -> BackendSolution {
        let sol = problem.sdp.solve(&self.options);
        let status = match sol.status {
            SdpStatus::Optimal => SolveStatus::Optimal,
            SdpStatus::Infeasible => SolveStatus::Infeasible,
            SdpStatus::NumericalFailure(m) => SolveStatus::NumericalFailure(m),
        };
        BackendSolution { status, x: sol.x }
    }
}

/// Bisection on the supply scalar with a feasibility problem per step.
#[derive(Debug, Clone, Copy)]
pub struct BisectionBackend {
    pub iterations: usize,
    /// Upper end of the bracket when the problem carries no cap.
    pub upper: f64,
    pub options: BarrierOptions,
}

impl Default for BisectionBackend {
    fn default() -> Self {
        BisectionBackend {
            iterations: 30,
            upper: 1e4,
            options: BarrierOptions::default(),
        }
    }
}

impl BisectionBackend {
    fn feasible_at(&self, problem: &LmiProblem, v: f64) -> std::result::Result<Option<Vec<f64>>, String> {
        let fixed = problem.with_scalar_fixed(v);
        Ok(fixed.find_interior(&self.options)?.map(|mut x| {
            x[problem.layout.scalar] = v;
            x
        }))
    }
}

impl SdpBackend for BisectionBackend {
    fn name(&self) -> &'static str {
        "bisection"
    }

    fn solve(&self, problem: &LmiProblem) -> BackendSolution {
        let failure = |m: String| BackendSolution {
            status: SolveStatus::NumericalFailure(m),
            x: None,
        };
        let infeasible = BackendSolution {
            status: SolveStatus::Infeasible,
            x: None,
        };
        let minimize = problem.sdp.objective[problem.layout.scalar] > 0.0;
        let mut hi = problem.scalar_cap().unwrap_or(self.upper);
        let mut lo = 0.0;
        // keep the feasible end of the bracket and its point
        let mut best = if minimize {
            let mut found = None;
            for _ in 0..20 {
                match self.feasible_at(problem, hi) {
                    Ok(Some(x)) => {
                        found = Some(x);
                        break;
                    }
                    Ok(None) if problem.scalar_cap().is_none() => {
                        lo = hi;
                        hi *= 4.0;
                    }
                    Ok(None) => break,
                    Err(e) => return failure(e),
                }
            }
            match found {
                Some(x) => x,
                None => return infeasible,
            }
        } else {
            match self.feasible_at(problem, lo) {
                Ok(Some(x)) => x,
                Ok(None) => return infeasible,
                Err(e) => return failure(e),
            }
        };
        for _ in 0..self.iterations {
            let mid = 0.5 * (lo + hi);
            match self.feasible_at(problem, mid) {
                Ok(Some(x)) => {
                    best = x;
                    if minimize {
                        hi = mid
                    } else {
                        lo = mid
                    }
                }
                Ok(None) => {
                    if minimize {
                        lo = mid
                    } else {
                        hi = mid
                    }
                }
                Err(e) => return failure(e),
            }
        }
        BackendSolution {
            status: SolveStatus::Optimal,
            x: Some(best),
        }
    }
}

/// Which problem a sweep entry solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Interior,
    Exterior,
    HalfPlane,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub kind: EntryKind,
    /// Disk center (`None` for half-planes).
    pub lambda_c: Option<f64>,
    /// `-1`/`+1`: disk sigma or half-plane sign.
    pub sign: Sign,
    pub status: SolveStatus,
    /// Optimized scalar: `r^2` for disks, offset for half-planes.
    pub rho_opt: Option<f64>,
    #[serde(skip)]
    pub region: Option<RegionSpec>,
    pub certificate: Option<Certificate>,
    /// Exterior radius ran into the cap.
    pub cap_hit: bool,
    /// Optimum found but the a posteriori check failed.
    pub unverified: bool,
    pub seconds: f64,
}

impl SweepEntry {
    /// Contributes a region to the approximation.
    pub fn is_verified(&self) -> bool {
        self.status == SolveStatus::Optimal && !self.unverified && self.region.is_some()
    }

    pub fn radius(&self) -> Option<f64> {
        match self.region {
            Some(RegionSpec::DiskInterior { r, .. }) | Some(RegionSpec::DiskExterior { r, .. }) => Some(r),
            _ => None,
        }
    }
}

fn run(
    model: &SystemModel,
    supply: Supply,
    hard: bool,
    cap: Option<f64>,
    backend: &dyn SdpBackend,
) -> Result<SweepEntry> {
    let start = Instant::now();
    let mut problem = build(model, supply, hard)?;
    if let Some(cap) = cap {
        problem.cap_scalar(cap);
    }
    let (kind, lambda_c, sign) = match supply {
        Supply::Disk { sigma: Sign::Neg, lambda_c } => (EntryKind::Interior, Some(lambda_c), Sign::Neg),
        Supply::Disk { sigma: Sign::Pos, lambda_c } => (EntryKind::Exterior, Some(lambda_c), Sign::Pos),
        Supply::HalfPlane { sign } => (EntryKind::HalfPlane, None, sign),
    };
    let sol = backend.solve(&problem);
    let mut entry = SweepEntry {
        kind,
        lambda_c,
        sign,
        status: sol.status.clone(),
        rho_opt: None,
        region: None,
        certificate: None,
        cap_hit: false,
        unverified: false,
        seconds: 0.0,
    };
    if let (SolveStatus::Optimal, Some(x)) = (&sol.status, &sol.x) {
        let v = x[problem.layout.scalar];
        let cert = problem.certificate(x);
        entry.rho_opt = Some(v);
        entry.unverified = !problem.verify(&cert);
        if entry.unverified {
            log::warn!(
                "{} certificate at {:?} failed the a posteriori check (max eig {:.3e})",
                backend.name(),
                supply,
                cert.max_constraint_eig
            );
        }
        // an exterior disk needs r > 0; rho at the noise floor certifies nothing
        let floor = 1e-10 * (1.0 + lambda_c.map_or(0.0, |l| l * l));
        if kind == EntryKind::Exterior && v <= floor {
            entry.status = SolveStatus::Infeasible;
        } else {
            entry.region = supply.region(v);
            if entry.region.is_none() {
                entry.status = SolveStatus::Infeasible;
            }
        }
        if let Some(cap) = cap {
            entry.cap_hit = kind == EntryKind::Exterior && v >= cap * (1.0 - 1e-6);
        }
        entry.certificate = Some(cert);
    }
    if let SolveStatus::NumericalFailure(msg) = &entry.status {
        log::warn!("{} failed at {:?}: {msg}", backend.name(), supply);
    }
    entry.seconds = start.elapsed().as_secs_f64();
    Ok(entry)
}

/// Smallest disk centered at `lambda_c` containing the scaled graph.
pub fn solve_interior(model: &SystemModel, lambda_c: f64, hard: bool, backend: &dyn SdpBackend) -> Result<SweepEntry> {
    run(
        model,
        Supply::Disk {
            sigma: Sign::Neg,
            lambda_c,
        },
        hard,
        None,
        backend,
    )
}

/// Largest disk centered at `lambda_c` avoiding the scaled graph, with the
/// radius capped at `CAP_FACTOR` times the gain bound.
pub fn solve_exterior(model: &SystemModel, lambda_c: f64, hard: bool, backend: &dyn SdpBackend) -> Result<SweepEntry> {
    let cap = gain_bound(model, hard, backend)?.map(rho_cap);
    solve_exterior_capped(model, lambda_c, hard, backend, cap)
}

pub fn solve_exterior_capped(
    model: &SystemModel,
    lambda_c: f64,
    hard: bool,
    backend: &dyn SdpBackend,
    cap: Option<f64>,
) -> Result<SweepEntry> {
    run(
        model,
        Supply::Disk {
            sigma: Sign::Pos,
            lambda_c,
        },
        hard,
        cap,
        backend,
    )
}

/// Tightest half-plane of the given orientation.
pub fn solve_halfplane(model: &SystemModel, sign: Sign, hard: bool, backend: &dyn SdpBackend) -> Result<SweepEntry> {
    run(model, Supply::HalfPlane { sign }, hard, None, backend)
}

/// Radius of the bounded-real disk centered at the origin, if certified.
pub fn gain_bound(model: &SystemModel, hard: bool, backend: &dyn SdpBackend) -> Result<Option<f64>> {
    let e = solve_interior(model, 0.0, hard, backend)?;
    Ok(if e.is_verified() { e.radius() } else { None })
}

pub fn rho_cap(gamma0: f64) -> f64 {
    (CAP_FACTOR * gamma0).powi(2)
}

/// Default grids: 81 points on `[-2 g, 2 g]` and on `[-5 g, 5 g]`.
pub fn default_config(gamma0: f64, hard: bool) -> SweepConfig {
    SweepConfig {
        lambda_interior: linspace(-2.0 * gamma0, 2.0 * gamma0, DEFAULT_GRID_POINTS),
        lambda_exterior: linspace(-5.0 * gamma0, 5.0 * gamma0, DEFAULT_GRID_POINTS),
        hard,
        include_halfplanes: Vec::new(),
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    pub approximation: SgApproximation,
    pub gamma0: Option<f64>,
    pub rho_cap: Option<f64>,
    pub config: SweepConfig,
    pub backend: &'static str,
    pub seconds: f64,
}

impl SweepResult {
    pub fn count(&self, status: &SolveStatus) -> usize {
        self.entries.iter().filter(|e| &e.status == status).count()
    }

    /// Sweep report: configuration echo, per-entry records and summary.
    pub fn report_json(&self, region_file: Option<&str>) -> serde_json::Value {
        let failures = self
            .entries
            .iter()
            .filter(|e| matches!(e.status, SolveStatus::NumericalFailure(_)))
            .count();
        json!({
            "system_hash": self.approximation.system_hash,
            "mode": self.approximation.mode,
            "backend": self.backend,
            "config": self.config,
            "gamma0": self.gamma0,
            "rho_cap": self.rho_cap,
            "regions": self.approximation.len(),
            "region_file": region_file,
            "optimal": self.count(&SolveStatus::Optimal),
            "infeasible": self.count(&SolveStatus::Infeasible),
            "numerical_failures": failures,
            "cap_hits": self.entries.iter().filter(|e| e.cap_hit).count(),
            "seconds": self.seconds,
            "entries": self.entries,
        })
    }
}

/// Solves every interior and exterior problem of `cfg` (in parallel) and
/// intersects the verified regions.
pub fn sweep(model: &SystemModel, cfg: &SweepConfig, backend: &dyn SdpBackend) -> Result<SweepResult> {
    let start = Instant::now();
    cfg.validate()?;
    model.validate_for_sg()?;
    let hard = cfg.hard;
    let gamma0 = gain_bound(model, hard, backend)?;
    if gamma0.is_none() {
        log::warn!("no bounded-real disk at lambda_c = 0; exterior radii are uncapped");
    }
    let cap = gamma0.map(rho_cap);

    let mut tasks: Vec<Supply> = Vec::new();
    tasks.extend(cfg.lambda_interior.iter().map(|&l| Supply::Disk {
        sigma: Sign::Neg,
        lambda_c: l,
    }));
    tasks.extend(cfg.lambda_exterior.iter().map(|&l| Supply::Disk {
        sigma: Sign::Pos,
        lambda_c: l,
    }));
    tasks.extend(cfg.include_halfplanes.iter().map(|h| Supply::HalfPlane { sign: h.sign }));

    let entries: Vec<SweepEntry> = par::map(&tasks, |supply| {
        let cap = match supply {
            Supply::Disk { sigma: Sign::Pos, .. } => cap,
            _ => None,
        };
        run(model, *supply, hard, cap, backend)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let regions: Vec<RegionEntry> = entries
        .iter()
        .filter(|e| e.is_verified())
        .map(|e| RegionEntry {
            region: e.region.expect("verified entries carry a region"),
            certificate: e.certificate.clone(),
        })
        .collect();
    let mode = if hard { SgMode::Hard } else { SgMode::Soft };
    let approximation = SgApproximation::new(regions, model.content_hash(), mode)?;
    Ok(SweepResult {
        entries,
        approximation,
        gamma0,
        rho_cap: cap,
        config: cfg.clone(),
        backend: backend.name(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StateSpace;
    use nalgebra::DMatrix;

    fn first_order(a: f64) -> SystemModel {
        SystemModel::Lti(
            StateSpace::new(
                DMatrix::from_element(1, 1, -a),
                DMatrix::from_element(1, 1, 1.0),
                DMatrix::from_element(1, 1, 1.0),
                DMatrix::zeros(1, 1),
            )
            .unwrap(),
        )
    }

    #[test]
    fn remark5_interior() {
        let e = solve_interior(&first_order(1.0), 0.5, false, &BarrierBackend::default()).unwrap();
        assert_eq!(e.status, SolveStatus::Optimal);
        assert!((e.radius().unwrap() - 0.5).abs() < 1e-6, "{:?}", e.radius());
        let p = e.certificate.unwrap().p[0][0];
        assert!((p - 0.5).abs() < 1e-6, "{p}");
    }

    #[test]
    fn remark5_exterior() {
        let e = solve_exterior(&first_order(1.0), 0.5, false, &BarrierBackend::default()).unwrap();
        assert_eq!(e.status, SolveStatus::Optimal);
        assert!((e.radius().unwrap() - 0.5).abs() < 1e-6, "{:?}", e.radius());
        let p = e.certificate.unwrap().p[0][0];
        assert!((p + 0.5).abs() < 1e-6, "{p}");
    }

    #[test]
    fn bounded_real_disk() {
        // max over w of |1/(jw+1)| = 1
        let peak = (0..20000)
            .map(|k| {
                let w = k as f64 * 1e-3;
                1.0 / (1.0 + w * w).sqrt()
            })
            .fold(0.0, f64::max);
        let e = solve_interior(&first_order(1.0), 0.0, false, &BarrierBackend::default()).unwrap();
        assert!((e.radius().unwrap() - peak).abs() < 1e-5);
    }

    #[test]
    fn hard_exterior_at_remark5_center_fails() {
        let e = solve_exterior(&first_order(1.0), 0.5, true, &BarrierBackend::default()).unwrap();
        assert_ne!(e.status, SolveStatus::Optimal, "{e:?}");
        assert!(e.region.is_none());
    }

    #[test]
    fn bisection_agrees_with_barrier() {
        let sys = first_order(2.0);
        for (sigma, l) in [(Sign::Neg, 0.1), (Sign::Neg, 0.6), (Sign::Pos, 0.25), (Sign::Pos, -0.3)] {
            let run_with = |b: &dyn SdpBackend| match sigma {
                Sign::Neg => solve_interior(&sys, l, false, b).unwrap(),
                Sign::Pos => solve_exterior_capped(&sys, l, false, b, Some(100.0)).unwrap(),
            };
            let a = run_with(&BarrierBackend::default());
            let b = run_with(&BisectionBackend::default());
            let (ra, rb) = (a.rho_opt.unwrap(), b.rho_opt.unwrap());
            // 30 halvings of a bracket no wider than 1e4
            let resolution = 1e4 / 2f64.powi(30);
            assert!((ra - rb).abs() < 2.0 * resolution + 1e-6 * (1.0 + ra.abs()), "{sigma:?} {l}: {ra} vs {rb}");
        }
    }

    #[test]
    fn remark5_pair_gives_the_circle() {
        let cfg = SweepConfig::new(vec![0.5], vec![0.5], false).unwrap();
        let res = sweep(&first_order(1.0), &cfg, &BarrierBackend::default()).unwrap();
        assert_eq!(res.approximation.len(), 2);
        let on = crate::model::Cplx::new(0.5 + 0.5 * 0.3f64.cos(), 0.5 * 0.3f64.sin());
        use crate::regions::PlaneSet;
        assert!(res.approximation.contains(on));
        assert!(!res.approximation.contains(crate::model::Cplx::new(0.5, 0.0)));
        assert!(!res.approximation.contains(crate::model::Cplx::new(1.1, 0.0)));
    }

    #[test]
    fn non_hurwitz_sweep_is_an_error() {
        let cfg = SweepConfig::new(vec![0.0], vec![], false).unwrap();
        assert!(sweep(&first_order(-1.0), &cfg, &BarrierBackend::default()).is_err());
    }
}

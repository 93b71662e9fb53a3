//! System descriptions (LTI, reset, piecewise-linear), sweep configuration and
//! the JSON system-file format.

use std::path::Path;

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Eigenvalues with real part above `-HURWITZ_EPS` are rejected as unstable.
pub const HURWITZ_EPS: f64 = 1e-9;
/// Relative slack when testing symmetry of quadratic-form matrices.
pub const SYM_EPS: f64 = 1e-10;
const COVERAGE_SAMPLES: usize = 10_000;
const COVERAGE_BOX: f64 = 10.0;

pub type Cplx = Complex<f64>;

/// A sign, used both for the disk orientation `sigma` and half-plane sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Neg,
    Pos,
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Neg => -1,
            Sign::Pos => 1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Pos),
            -1 => Ok(Sign::Neg),
            _ => Err(format!("sign must be +1 or -1, got {v}")),
        }
    }
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Neg => -1.0,
            Sign::Pos => 1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Neg => Sign::Pos,
            Sign::Pos => Sign::Neg,
        }
    }

    pub fn from_value(v: f64) -> Result<Sign> {
        if v == 1.0 {
            Ok(Sign::Pos)
        } else if v == -1.0 {
            Ok(Sign::Neg)
        } else {
            Err(Error::InvalidArgument(format!("sign must be +1 or -1, got {v}")))
        }
    }
}

/// Real state-space realization `x' = Ax + Bu, y = Cx + Du` of a square block.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let m = a.nrows();
        if a.ncols() != m {
            return Err(Error::Dimension(format!("A is {}x{}, must be square", m, a.ncols())));
        }
        let n = d.nrows();
        if n == 0 {
            return Err(Error::Dimension("D must have at least one row".into()));
        }
        if d.ncols() != n {
            return Err(Error::Dimension(format!(
                "D is {}x{}; only square systems are supported",
                n,
                d.ncols()
            )));
        }
        if b.nrows() != m || b.ncols() != n {
            return Err(Error::Dimension(format!(
                "B is {}x{}, expected {}x{}",
                b.nrows(),
                b.ncols(),
                m,
                n
            )));
        }
        if c.nrows() != n || c.ncols() != m {
            return Err(Error::Dimension(format!(
                "C is {}x{}, expected {}x{}",
                c.nrows(),
                c.ncols(),
                n,
                m
            )));
        }
        if [&a, &b, &c, &d].iter().any(|x| x.iter().any(|v| !v.is_finite())) {
            return Err(Error::Parse("matrix entries must be finite".into()));
        }
        Ok(StateSpace { a, b, c, d })
    }

    /// Static gain `D` without dynamics.
    pub fn static_gain(d: DMatrix<f64>) -> Result<Self> {
        let n = d.nrows();
        StateSpace::new(DMatrix::zeros(0, 0), DMatrix::zeros(0, n), DMatrix::zeros(n, 0), d)
    }

    /// Number of states `m`.
    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    /// Number of inputs (= outputs) `n`.
    pub fn ports(&self) -> usize {
        self.d.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<Cplx> {
        if self.states() == 0 {
            return Vec::new();
        }
        self.a.complex_eigenvalues().iter().copied().collect()
    }

    /// Largest real part over the spectrum of `A` (`-inf` for static blocks).
    pub fn spectral_abscissa(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_hurwitz(&self) -> bool {
        self.spectral_abscissa() < -HURWITZ_EPS
    }

    pub fn require_hurwitz(&self) -> Result<()> {
        let max_real = self.spectral_abscissa();
        if max_real < -HURWITZ_EPS {
            Ok(())
        } else {
            Err(Error::NotHurwitz { max_real })
        }
    }

    /// Transfer matrix `C (sI - A)^-1 B + D`.
    pub fn transfer(&self, s: Cplx) -> DMatrix<Cplx> {
        let m = self.states();
        let n = self.ports();
        let d = self.d.map(|v| Cplx::new(v, 0.0));
        if m == 0 {
            return d;
        }
        let mut si_a = self.a.map(|v| Cplx::new(-v, 0.0));
        for i in 0..m {
            si_a[(i, i)] += s;
        }
        let b = self.b.map(|v| Cplx::new(v, 0.0));
        let x = si_a
            .lu()
            .solve(&b)
            .unwrap_or_else(|| DMatrix::from_element(m, n, Cplx::new(f64::NAN, f64::NAN)));
        self.c.map(|v| Cplx::new(v, 0.0)) * x + d
    }

    /// Smallest time constant `1/max|lambda|` (None for static blocks).
    pub fn fastest_time_constant(&self) -> Option<f64> {
        self.eigenvalues()
            .iter()
            .map(|l| l.norm())
            .filter(|v| *v > 0.0)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
            .map(|rate| 1.0 / rate)
    }

    /// Largest time constant `1/min|Re(lambda)|` (None for static blocks).
    pub fn slowest_time_constant(&self) -> Option<f64> {
        self.eigenvalues()
            .iter()
            .map(|l| l.re.abs())
            .filter(|v| *v > 0.0)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
            .map(|rate| 1.0 / rate)
    }
}

/// Reset system: flows with the base dynamics while `xi' M xi >= 0`, jumps
/// `x+ = R x` while `xi' M xi <= 0`, where `xi = [x; u]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResetSystem {
    pub base: StateSpace,
    pub reset: DMatrix<f64>,
    pub flow_form: DMatrix<f64>,
}

impl ResetSystem {
    pub fn new(base: StateSpace, reset: DMatrix<f64>, flow_form: DMatrix<f64>) -> Result<Self> {
        let m = base.states();
        let k = m + base.ports();
        if reset.nrows() != m || reset.ncols() != m {
            return Err(Error::Dimension(format!(
                "R is {}x{}, expected {}x{}",
                reset.nrows(),
                reset.ncols(),
                m,
                m
            )));
        }
        if flow_form.nrows() != k || flow_form.ncols() != k {
            return Err(Error::Dimension(format!(
                "M is {}x{}, expected {}x{}",
                flow_form.nrows(),
                flow_form.ncols(),
                k,
                k
            )));
        }
        check_symmetric("M", &flow_form)?;
        Ok(ResetSystem {
            base,
            reset,
            flow_form,
        })
    }

    /// `xi' M xi` for `xi = [x; u]`.
    pub fn flow_value(&self, x: &[f64], u: &[f64]) -> f64 {
        quad_form(&self.flow_form, x, u)
    }
}

/// One mode of a piecewise-linear system, active on `{xi : E xi >= 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlMode {
    pub dynamics: StateSpace,
    pub guard: DMatrix<f64>,
}

impl PwlMode {
    pub fn contains(&self, x: &[f64], u: &[f64], slack: f64) -> bool {
        let m = x.len();
        (0..self.guard.nrows()).all(|r| {
            let mut v = 0.0;
            for (j, xj) in x.iter().enumerate() {
                v += self.guard[(r, j)] * xj;
            }
            for (j, uj) in u.iter().enumerate() {
                v += self.guard[(r, m + j)] * uj;
            }
            v >= -slack
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PwlSystem {
    pub modes: Vec<PwlMode>,
}

impl PwlSystem {
    pub fn new(modes: Vec<PwlMode>) -> Result<Self> {
        let first = modes
            .first()
            .ok_or_else(|| Error::Dimension("a PWL system needs at least one mode".into()))?;
        let m = first.dynamics.states();
        let n = first.dynamics.ports();
        let p = first.guard.nrows();
        for (i, mode) in modes.iter().enumerate() {
            if mode.dynamics.states() != m || mode.dynamics.ports() != n {
                return Err(Error::Dimension(format!(
                    "mode {} has {} states / {} ports, expected {} / {}",
                    i + 1,
                    mode.dynamics.states(),
                    mode.dynamics.ports(),
                    m,
                    n
                )));
            }
            if mode.guard.ncols() != m + n {
                return Err(Error::Dimension(format!(
                    "E of mode {} has {} columns, expected {}",
                    i + 1,
                    mode.guard.ncols(),
                    m + n
                )));
            }
            if mode.guard.nrows() != p {
                return Err(Error::Dimension(format!(
                    "E of mode {} has {} rows, expected {} like mode 1",
                    i + 1,
                    mode.guard.nrows(),
                    p
                )));
            }
        }
        Ok(PwlSystem { modes })
    }

    pub fn states(&self) -> usize {
        self.modes[0].dynamics.states()
    }

    pub fn ports(&self) -> usize {
        self.modes[0].dynamics.ports()
    }

    /// Lowest-index mode whose guard holds at `xi` (slack `-1e-12`).
    pub fn select_mode(&self, x: &[f64], u: &[f64]) -> Option<usize> {
        self.modes.iter().position(|m| m.contains(x, u, 1e-12))
    }

    /// Samples uniform points in `[-10, 10]^(m+n)` and counts those covered by
    /// no mode. Exact polyhedral cover checking is not attempted.
    pub fn coverage_gaps(&self, seed: u64) -> usize {
        let m = self.states();
        let n = self.ports();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gaps = 0;
        for _ in 0..COVERAGE_SAMPLES {
            let x: Vec<f64> = (0..m)
                .map(|_| rng.random_range(-COVERAGE_BOX..COVERAGE_BOX))
                .collect();
            let u: Vec<f64> = (0..n)
                .map(|_| rng.random_range(-COVERAGE_BOX..COVERAGE_BOX))
                .collect();
            if self.modes.iter().all(|md| !md.contains(&x, &u, 0.0)) {
                gaps += 1;
            }
        }
        gaps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemModel {
    Lti(StateSpace),
    Reset(ResetSystem),
    Pwl(PwlSystem),
}

impl SystemModel {
    pub fn kind(&self) -> &'static str {
        match self {
            SystemModel::Lti(_) => "lti",
            SystemModel::Reset(_) => "reset",
            SystemModel::Pwl(_) => "pwl",
        }
    }

    pub fn states(&self) -> usize {
        match self {
            SystemModel::Lti(s) => s.states(),
            SystemModel::Reset(r) => r.base.states(),
            SystemModel::Pwl(p) => p.states(),
        }
    }

    pub fn ports(&self) -> usize {
        match self {
            SystemModel::Lti(s) => s.ports(),
            SystemModel::Reset(r) => r.base.ports(),
            SystemModel::Pwl(p) => p.ports(),
        }
    }

    /// Checks the preconditions of scaled-graph computation. Plain LTI blocks
    /// must be Hurwitz; hybrid systems rely on the LMIs themselves.
    pub fn validate_for_sg(&self) -> Result<()> {
        match self {
            SystemModel::Lti(s) => s.require_hurwitz(),
            _ => Ok(()),
        }
    }

    /// All linear dynamics involved (base system or every mode).
    pub fn linear_parts(&self) -> Vec<&StateSpace> {
        match self {
            SystemModel::Lti(s) => vec![s],
            SystemModel::Reset(r) => vec![&r.base],
            SystemModel::Pwl(p) => p.modes.iter().map(|m| &m.dynamics).collect(),
        }
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn content_hash(&self) -> String {
        let text = to_json_string(self);
        hex(&Sha256::digest(text.as_bytes()))
    }
}

/// SHA-256 of the compact JSON encoding of `value`, hex encoded.
pub fn hash_json(value: &serde_json::Value) -> String {
    hex(&Sha256::digest(value.to_string().as_bytes()))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Half-plane request for a sweep; the offset is optimized by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneSpec {
    pub sign: Sign,
}

/// Grids of disk centers for the interior (minimize radius) and exterior
/// (maximize radius) problems.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepConfig {
    pub lambda_interior: Vec<f64>,
    pub lambda_exterior: Vec<f64>,
    #[serde(default)]
    pub hard: bool,
    #[serde(default)]
    pub include_halfplanes: Vec<HalfPlaneSpec>,
}

impl SweepConfig {
    pub fn new(lambda_interior: Vec<f64>, lambda_exterior: Vec<f64>, hard: bool) -> Result<Self> {
        let cfg = SweepConfig {
            lambda_interior,
            lambda_exterior,
            hard,
            include_halfplanes: Vec::new(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, set) in [
            ("lambda_interior", &self.lambda_interior),
            ("lambda_exterior", &self.lambda_exterior),
        ] {
            if set.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} contains non-finite values")));
            }
            let mut sorted = set.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidArgument(format!("{name} contains duplicates")));
            }
        }
        Ok(())
    }
}

/// `n` uniformly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `{start + step*k | k = 0..=last}`, the form the example grids are quoted in.
pub fn arithmetic_grid(start: f64, step: f64, last: usize) -> Vec<f64> {
    (0..=last).map(|k| start + step * k as f64).collect()
}

/// Controllable canonical realization of `1 / (c0 s^m + c1 s^(m-1) + ... + cm)`.
pub fn realize_tf_denominator(coeffs: &[f64]) -> Result<StateSpace> {
    let lead = *coeffs
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty denominator".into()))?;
    if lead == 0.0 || !lead.is_finite() {
        return Err(Error::InvalidArgument("leading denominator coefficient must be nonzero".into()));
    }
    let m = coeffs.len() - 1;
    if m == 0 {
        return StateSpace::static_gain(DMatrix::from_element(1, 1, 1.0 / lead));
    }
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m - 1 {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..m {
        // last row: -c_{m-j} / c0
        a[(m - 1, j)] = -coeffs[m - j] / lead;
    }
    let mut b = DMatrix::zeros(m, 1);
    b[(m - 1, 0)] = 1.0;
    let mut c = DMatrix::zeros(1, m);
    c[(0, 0)] = 1.0 / lead;
    StateSpace::new(a, b, c, DMatrix::zeros(1, 1))
}

fn check_symmetric(name: &str, m: &DMatrix<f64>) -> Result<()> {
    let scale = 1.0 + m.amax();
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > SYM_EPS * scale {
                return Err(Error::InvalidArgument(format!("{name} is not symmetric at ({i},{j})")));
            }
        }
    }
    Ok(())
}

pub(crate) fn quad_form(m: &DMatrix<f64>, x: &[f64], u: &[f64]) -> f64 {
    let k = x.len() + u.len();
    let xi = |i: usize| if i < x.len() { x[i] } else { u[i - x.len()] };
    let mut acc = 0.0;
    for i in 0..k {
        let xi_i = xi(i);
        if xi_i == 0.0 {
            continue;
        }
        for j in 0..k {
            acc += xi_i * m[(i, j)] * xi(j);
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// JSON system files

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    kind: String,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    a: Option<Rows>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    b: Option<Rows>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    c: Option<Rows>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    d: Option<Rows>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    r: Option<Rows>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    m: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modes: Option<Vec<ModeFile>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeFile {
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "B")]
    b: Rows,
    #[serde(rename = "C")]
    c: Rows,
    #[serde(rename = "D")]
    d: Rows,
    #[serde(rename = "E")]
    e: Rows,
}

/// Row-major nested arrays for a matrix.
pub fn to_rows(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Builds a matrix from nested rows. Empty row lists produce `0 x cols_hint`
/// and rows of length zero produce `rows x 0`.
pub fn from_rows(name: &str, rows: &Rows, cols_hint: usize) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Ok(DMatrix::zeros(0, cols_hint));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Dimension(format!("{name} has ragged rows")));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn required<'a>(name: &str, v: &'a Option<Rows>) -> Result<&'a Rows> {
    v.as_ref()
        .ok_or_else(|| Error::Parse(format!("missing field {name}")))
}

fn state_space_from(a: &Rows, b: &Rows, c: &Rows, d: &Rows) -> Result<StateSpace> {
    let d = from_rows("D", d, 0)?;
    let n = d.nrows();
    let a = from_rows("A", a, 0)?;
    let m = a.nrows();
    let b = from_rows("B", b, n)?;
    let c = if c.iter().all(|r| r.is_empty()) && m == 0 {
        DMatrix::zeros(n, 0)
    } else {
        from_rows("C", c, m)?
    };
    StateSpace::new(a, b, c, d)
}

/// Parses and validates a system from JSON text.
pub fn parse_system(text: &str) -> Result<SystemModel> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let lti = |f: &SystemFile| -> Result<StateSpace> {
        state_space_from(
            required("A", &f.a)?,
            required("B", &f.b)?,
            required("C", &f.c)?,
            required("D", &f.d)?,
        )
    };
    match file.kind.as_str() {
        "lti" => Ok(SystemModel::Lti(lti(&file)?)),
        "reset" => {
            let base = lti(&file)?;
            let m = base.states();
            let r = from_rows("R", required("R", &file.r)?, m)?;
            let mm = from_rows("M", required("M", &file.m)?, m + base.ports())?;
            Ok(SystemModel::Reset(ResetSystem::new(base, r, mm)?))
        }
        "pwl" => {
            let modes = file
                .modes
                .as_ref()
                .ok_or_else(|| Error::Parse("missing field modes".into()))?;
            let modes = modes
                .iter()
                .map(|md| {
                    let dynamics = state_space_from(&md.a, &md.b, &md.c, &md.d)?;
                    let k = dynamics.states() + dynamics.ports();
                    let guard = from_rows("E", &md.e, k)?;
                    Ok(PwlMode { dynamics, guard })
                })
                .collect::<Result<Vec<_>>>()?;
            let sys = PwlSystem::new(modes)?;
            let gaps = sys.coverage_gaps(0);
            if gaps > 0 {
                log::warn!(
                    "PWL guards leave {gaps} of {COVERAGE_SAMPLES} sampled points uncovered"
                );
            }
            Ok(SystemModel::Pwl(sys))
        }
        other => Err(Error::Parse(format!("unknown system kind {other:?}"))),
    }
}

/// Reads and validates a system file.
pub fn load_system(path: impl AsRef<Path>) -> Result<SystemModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_system(&text)
}

fn to_file(model: &SystemModel) -> SystemFile {
    let lti = |s: &StateSpace| {
        (
            Some(to_rows(&s.a)),
            Some(to_rows(&s.b)),
            Some(to_rows(&s.c)),
            Some(to_rows(&s.d)),
        )
    };
    match model {
        SystemModel::Lti(s) => {
            let (a, b, c, d) = lti(s);
            SystemFile {
                kind: "lti".into(),
                a,
                b,
                c,
                d,
                r: None,
                m: None,
                modes: None,
            }
        }
        SystemModel::Reset(rs) => {
            let (a, b, c, d) = lti(&rs.base);
            SystemFile {
                kind: "reset".into(),
                a,
                b,
                c,
                d,
                r: Some(to_rows(&rs.reset)),
                m: Some(to_rows(&rs.flow_form)),
                modes: None,
            }
        }
        SystemModel::Pwl(p) => SystemFile {
            kind: "pwl".into(),
            a: None,
            b: None,
            c: None,
            d: None,
            r: None,
            m: None,
            modes: Some(
                p.modes
                    .iter()
                    .map(|md| ModeFile {
                        a: to_rows(&md.dynamics.a),
                        b: to_rows(&md.dynamics.b),
                        c: to_rows(&md.dynamics.c),
                        d: to_rows(&md.dynamics.d),
                        e: to_rows(&md.guard),
                    })
                    .collect(),
            ),
        },
    }
}

pub fn to_json_string(model: &SystemModel) -> String {
    serde_json::to_string(&to_file(model)).expect("system serialization cannot fail")
}

pub fn save_system(model: &SystemModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&to_file(model)).expect("system serialization cannot fail");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE2: &str = r#"{"kind":"reset",
        "A":[[-1,0],[1,-1]], "B":[[1],[0]], "C":[[0,1]], "D":[[0]],
        "R":[[0,0],[0,0]], "M":[[0.81,0,0],[0,-1,0],[0,0,0]]}"#;

    #[test]
    fn loads_reset_example() {
        let sys = parse_system(EXAMPLE2).unwrap();
        let SystemModel::Reset(r) = sys else {
            panic!("expected reset system")
        };
        assert_eq!(r.base.states(), 2);
        assert_eq!(r.flow_form[(0, 0)], 0.81);
        assert_eq!(r.flow_form[(1, 1)], -1.0);
        assert!(r.reset.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn loads_first_order_lti() {
        let sys = parse_system(r#"{"kind":"lti","A":[[-1]],"B":[[1]],"C":[[1]],"D":[[0]]}"#).unwrap();
        let SystemModel::Lti(s) = &sys else { panic!() };
        assert!(s.is_hurwitz());
        sys.validate_for_sg().unwrap();
    }

    #[test]
    fn rejects_wrong_b_rows() {
        let err = parse_system(r#"{"kind":"lti","A":[[-1,0],[0,-2]],"B":[[1]],"C":[[1,0]],"D":[[0]]}"#)
            .unwrap_err();
        assert!(matches!(err, Error::Dimension(_)), "{err}");
    }

    #[test]
    fn rejects_malformed_json() {
        assert!(matches!(parse_system("{\"kind\":"), Err(Error::Parse(_))));
        assert!(matches!(
            parse_system(r#"{"kind":"lti","A":[[-1]],"B":[[1]],"C":[[1]]}"#),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn non_hurwitz_rejected_only_for_sg() {
        let sys = parse_system(r#"{"kind":"lti","A":[[0]],"B":[[1]],"C":[[1]],"D":[[0]]}"#).unwrap();
        assert!(matches!(sys.validate_for_sg(), Err(Error::NotHurwitz { .. })));
        // eigenvalue within the epsilon band counts as unstable
        let sys = parse_system(r#"{"kind":"lti","A":[[-1e-10]],"B":[[1]],"C":[[1]],"D":[[0]]}"#).unwrap();
        assert!(sys.validate_for_sg().is_err());
    }

    #[test]
    fn asymmetric_flow_form_rejected() {
        let text = EXAMPLE2.replace("[0,-1,0]", "[0.5,-1,0]");
        assert!(parse_system(&text).is_err());
    }

    #[test]
    fn static_system_parses() {
        let sys = parse_system(r#"{"kind":"lti","A":[],"B":[],"C":[[]],"D":[[2.5]]}"#).unwrap();
        assert_eq!(sys.states(), 0);
        let SystemModel::Lti(s) = sys else { panic!() };
        assert_eq!(s.transfer(Cplx::new(0.0, 3.0))[(0, 0)], Cplx::new(2.5, 0.0));
    }

    #[test]
    fn first_order_realization() {
        let s = realize_tf_denominator(&[1.0, 1.0]).unwrap();
        assert_eq!(s.a, DMatrix::from_element(1, 1, -1.0));
        assert_eq!(s.b, DMatrix::from_element(1, 1, 1.0));
        assert_eq!(s.c, DMatrix::from_element(1, 1, 1.0));
        assert_eq!(s.d, DMatrix::from_element(1, 1, 0.0));
    }

    #[test]
    fn third_order_realization_matches_rational_function() {
        let s = realize_tf_denominator(&[1.0, 5.0, 2.0, 1.0]).unwrap();
        assert_eq!(s.states(), 3);
        for w in [0.0, 0.1, 0.7, 3.0, 40.0] {
            let jw = Cplx::new(0.0, w);
            let direct = Cplx::new(1.0, 0.0) / (jw * jw * jw + 5.0 * jw * jw + 2.0 * jw + 1.0);
            let h = s.transfer(jw)[(0, 0)];
            assert!((h - direct).norm() <= 1e-10 * direct.norm().max(1e-300), "w={w}");
        }
        let jw = Cplx::new(0.0, 0.7);
        let direct = Cplx::new(1.0, 0.0) / (jw * jw * jw + 5.0 * jw * jw + 2.0 * jw + 1.0);
        assert!((s.transfer(jw)[(0, 0)] - direct).norm() < 1e-10);
    }

    #[test]
    fn realization_rejects_zero_lead() {
        assert!(realize_tf_denominator(&[0.0, 1.0]).is_err());
        assert!(realize_tf_denominator(&[]).is_err());
    }

    #[test]
    fn non_monic_realization_scales_output() {
        let s = realize_tf_denominator(&[2.0, 3.0, 1.0]).unwrap();
        let jw = Cplx::new(0.0, 1.3);
        let direct = Cplx::new(1.0, 0.0) / (2.0 * jw * jw + 3.0 * jw + 1.0);
        assert!((s.transfer(jw)[(0, 0)] - direct).norm() < 1e-12);
    }

    #[test]
    fn pwl_mode_selection_prefers_lowest_index() {
        let dyn1 = realize_tf_denominator(&[1.0, 1.0]).unwrap();
        let guard_a = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let guard_b = DMatrix::from_row_slice(1, 2, &[-1.0, 0.0]);
        let sys = PwlSystem::new(vec![
            PwlMode {
                dynamics: dyn1.clone(),
                guard: guard_a,
            },
            PwlMode {
                dynamics: dyn1,
                guard: guard_b,
            },
        ])
        .unwrap();
        assert_eq!(sys.select_mode(&[0.0], &[1.0]), Some(0));
        assert_eq!(sys.select_mode(&[-1.0], &[1.0]), Some(1));
        assert_eq!(sys.coverage_gaps(3), 0);
    }

    #[test]
    fn pwl_coverage_gap_detected() {
        let dyn1 = realize_tf_denominator(&[1.0, 1.0]).unwrap();
        let sys = PwlSystem::new(vec![PwlMode {
            dynamics: dyn1,
            guard: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        }])
        .unwrap();
        let gaps = sys.coverage_gaps(1);
        assert!(gaps > 4000 && gaps < 6000, "{gaps}");
    }

    #[test]
    fn sweep_config_rejects_duplicates() {
        assert!(SweepConfig::new(vec![0.0, 0.0], vec![], false).is_err());
        assert!(SweepConfig::new(vec![0.0, 1.0], vec![f64::NAN], false).is_err());
        assert!(SweepConfig::new(vec![0.0, 1.0], vec![2.0], true).is_ok());
    }

    #[test]
    fn grids() {
        let g = arithmetic_grid(-2.0, 0.05, 80);
        assert_eq!(g.len(), 81);
        assert!((g[80] - 2.0).abs() < 1e-12);
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn hash_changes_with_content() {
        let a = parse_system(r#"{"kind":"lti","A":[[-1]],"B":[[1]],"C":[[1]],"D":[[0]]}"#).unwrap();
        let b = parse_system(r#"{"kind":"lti","A":[[-2]],"B":[[1]],"C":[[1]],"D":[[0]]}"#).unwrap();
        assert_eq!(a.content_hash().len(), 64);
        assert_ne!(a.content_hash(), b.content_hash());
    }
}

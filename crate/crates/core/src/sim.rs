//! Time-domain simulation of LTI, reset and PWL systems, trajectory
//! functionals and sampled scaled-graph points.
//!
//! Integration is fixed-step RK4. The running integrals of `u'u`, `y'y` and
//! `u'y` are carried as extra states, so each step applies Simpson's rule to
//! the integrands along the RK4 stages.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Cplx, StateSpace, SystemModel};
use crate::par;
use crate::regions::{PiMatrix, PlaneSet};

pub const EPS_DECAY: f64 = 1e-6;
pub const TOL_EVENT: f64 = 1e-10;
pub const MAX_EVENTS: usize = 10_000;
pub const DWELL_STEPS: f64 = 10.0;
pub const MAX_COMPONENTS: usize = 20;
const STEPS_PER_CONSTANT: f64 = 50.0;
const HORIZON_EXTENSIONS: usize = 2;

/// One sinusoid of a multi-sine input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineComponent {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    #[serde(default)]
    pub channel: usize,
}

/// `u(t) = (sum_m k_m sin(w_m t + phi_m)) e^(mu t)`, one sum per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSineInput {
    pub components: Vec<SineComponent>,
    pub decay: f64,
}

impl MultiSineInput {
    pub fn new(components: Vec<SineComponent>, decay: f64) -> Result<Self> {
        if components.is_empty() || components.len() > MAX_COMPONENTS {
            return Err(Error::InvalidArgument(format!(
                "a multi-sine needs 1..={MAX_COMPONENTS} components, got {}",
                components.len()
            )));
        }
        if !(decay < 0.0) {
            return Err(Error::InvalidArgument(format!("decay must be negative, got {decay}")));
        }
        Ok(MultiSineInput { components, decay })
    }

    /// `k e^(mu t)` on channel 0.
    pub fn exponential(k: f64, decay: f64) -> Result<Self> {
        Self::new(
            vec![SineComponent {
                amplitude: k,
                frequency: 0.0,
                phase: PI / 2.0,
                channel: 0,
            }],
            decay,
        )
    }

    fn eval(&self, t: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let env = (self.decay * t).exp();
        for c in &self.components {
            if let Some(v) = out.get_mut(c.channel) {
                *v += c.amplitude * (c.frequency * t + c.phase).sin() * env;
            }
        }
    }

    /// Upper bound on the energy of the input after time `t`.
    fn tail_energy(&self, t: f64) -> f64 {
        let k: f64 = self.components.iter().map(|c| c.amplitude.abs()).sum();
        k * k * (2.0 * self.decay * t).exp() / (2.0 * self.decay.abs())
    }
}

/// Input signal driving a simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSignal {
    MultiSine(MultiSineInput),
    /// Uniformly sampled values, linearly interpolated and zero afterwards.
    Sampled { step: f64, values: Vec<Vec<f64>> },
}

impl InputSignal {
    fn eval(&self, t: f64, out: &mut [f64]) {
        match self {
            InputSignal::MultiSine(m) => m.eval(t, out),
            InputSignal::Sampled { step, values } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let s = t / step;
                let i = s.floor();
                if s < 0.0 || i as usize + 1 >= values.len() {
                    if (s - (values.len() as f64 - 1.0)).abs() < 1e-12 {
                        if let Some(last) = values.last() {
                            out.iter_mut().zip(last).for_each(|(o, v)| *o = *v);
                        }
                    }
                    return;
                }
                let (k, w) = (i as usize, s - i);
                for (ch, o) in out.iter_mut().enumerate() {
                    let a = values[k].get(ch).copied().unwrap_or(0.0);
                    let b = values[k + 1].get(ch).copied().unwrap_or(0.0);
                    *o = a + w * (b - a);
                }
            }
        }
    }

    fn tail_energy(&self, t: f64) -> f64 {
        match self {
            InputSignal::MultiSine(m) => m.tail_energy(t),
            InputSignal::Sampled { step, values } => {
                if t >= *step * (values.len() as f64 - 1.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn time_scale(&self) -> (f64, Option<f64>) {
        match self {
            InputSignal::MultiSine(m) => {
                let wmax = m.components.iter().map(|c| c.frequency.abs()).fold(0.0, f64::max);
                let mut fastest = 1.0 / m.decay.abs();
                if wmax > 0.0 {
                    fastest = fastest.min(2.0 * PI / wmax);
                }
                (fastest, Some(16.0 / m.decay.abs()))
            }
            InputSignal::Sampled { step, values } => (*step, Some(*step * values.len() as f64)),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    /// Final time; derived from the input decay and the slowest mode when
    /// absent.
    pub horizon: Option<f64>,
    /// RK4 step; 1/50 of the shortest time constant (system or input) when
    /// absent.
    pub step: Option<f64>,
    /// Keep every grid point. Without it only the final point is stored.
    pub record: bool,
    /// Keep integrating past the horizon (up to twice, doubling) until the
    /// state has settled.
    pub extend: bool,
}

impl SimOptions {
    pub fn recorded() -> Self {
        SimOptions {
            record: true,
            extend: true,
            ..Default::default()
        }
    }
}

/// Sampled trajectory from `x(0) = 0`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: usize,
    pub ports: usize,
    pub step: f64,
    pub t: Vec<f64>,
    /// Row-major samples, `ports` (resp. `states`) values per time.
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Running integrals `(int u'u, int y'y, int u'y)` up to each time.
    pub running: Vec<[f64; 3]>,
    pub event: Vec<bool>,
    /// Active PWL mode (0-based) per sample; empty for other systems.
    pub mode: Vec<usize>,
    pub reset_times: Vec<f64>,
    pub mode_switches: usize,
    /// Integrals beyond the final time: analytic output energy for LTI
    /// systems, zero otherwise.
    pub tail: [f64; 3],
    /// Bound on what the tail leaves out.
    pub tail_error: f64,
    pub max_state_norm: f64,
    pub settled: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn u_at(&self, i: usize) -> &[f64] {
        &self.u[i * self.ports..(i + 1) * self.ports]
    }

    pub fn x_at(&self, i: usize) -> &[f64] {
        &self.x[i * self.states..(i + 1) * self.states]
    }

    pub fn y_at(&self, i: usize) -> &[f64] {
        &self.y[i * self.ports..(i + 1) * self.ports]
    }

    pub fn end_time(&self) -> f64 {
        *self.t.last().unwrap_or(&0.0)
    }

    fn totals(&self) -> [f64; 3] {
        let q = self.running.last().copied().unwrap_or([0.0; 3]);
        [q[0] + self.tail[0], q[1] + self.tail[1], q[2] + self.tail[2]]
    }

    /// CSV with columns `t,u...,x...,y...,event_flag,mode`.
    pub fn to_csv(&self, header: &[(&str, String)]) -> String {
        let mut s = String::new();
        for (k, v) in header {
            let _ = writeln!(s, "# {k}: {v}");
        }
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=self.ports).map(|i| format!("u{i}")));
        cols.extend((1..=self.states).map(|i| format!("x{i}")));
        cols.extend((1..=self.ports).map(|i| format!("y{i}")));
        cols.push("event_flag".into());
        cols.push("mode".into());
        let _ = writeln!(s, "{}", cols.join(","));
        for i in 0..self.len() {
            let mut row = vec![format!("{}", self.t[i])];
            row.extend(self.u_at(i).iter().map(|v| format!("{v}")));
            row.extend(self.x_at(i).iter().map(|v| format!("{v}")));
            row.extend(self.y_at(i).iter().map(|v| format!("{v}")));
            row.push(if self.event[i] { "1".into() } else { "0".into() });
            row.push(self.mode.get(i).map(|m| format!("{}", m + 1)).unwrap_or_default());
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }
}

/// Dense row-major copy of a state-space block for the inner loop.
struct Lin {
    m: usize,
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
}

impl Lin {
    fn new(s: &StateSpace) -> Lin {
        let rows = |x: &DMatrix<f64>| -> Vec<f64> {
            let mut v = Vec::with_capacity(x.len());
            for i in 0..x.nrows() {
                for j in 0..x.ncols() {
                    v.push(x[(i, j)]);
                }
            }
            v
        };
        Lin {
            m: s.states(),
            n: s.ports(),
            a: rows(&s.a),
            b: rows(&s.b),
            c: rows(&s.c),
            d: rows(&s.d),
        }
    }

    fn output(&self, x: &[f64], u: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut v = 0.0;
            for j in 0..self.m {
                v += self.c[i * self.m + j] * x[j];
            }
            for j in 0..self.n {
                v += self.d[i * self.n + j] * u[j];
            }
            *yi = v;
        }
    }

    /// Derivative of the augmented state `[x; q]`.
    fn deriv(&self, z: &[f64], u: &[f64], y: &mut [f64], dz: &mut [f64]) {
        let m = self.m;
        for i in 0..m {
            let mut v = 0.0;
            for j in 0..m {
                v += self.a[i * m + j] * z[j];
            }
            for j in 0..self.n {
                v += self.b[i * self.n + j] * u[j];
            }
            dz[i] = v;
        }
        self.output(&z[..m], u, y);
        let dot = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
        dz[m] = dot(u, u);
        dz[m + 1] = dot(y, y);
        dz[m + 2] = dot(u, y);
    }
}

struct Stepper<'a> {
    input: &'a InputSignal,
    u: Vec<f64>,
    y: Vec<f64>,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(input: &'a InputSignal, dim: usize, ports: usize) -> Self {
        Stepper {
            input,
            u: vec![0.0; ports],
            y: vec![0.0; ports],
            k: [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]],
            tmp: vec![0.0; dim],
        }
    }

    /// One RK4 step of size `h` from `(t, z)`, written to `out`.
    fn step(&mut self, lin: &Lin, t: f64, z: &[f64], h: f64, out: &mut [f64]) {
        let stages = [(0.0, 0.0), (0.5, 0.5), (0.5, 0.5), (1.0, 1.0)];
        for s in 0..4 {
            let (ct, cz) = stages[s];
            if s == 0 {
                self.tmp.copy_from_slice(z);
            } else {
                for i in 0..z.len() {
                    self.tmp[i] = z[i] + cz * h * self.k[s - 1][i];
                }
            }
            self.input.eval(t + ct * h, &mut self.u);
            lin.deriv(&self.tmp, &self.u, &mut self.y, &mut self.k[s]);
        }
        for i in 0..z.len() {
            out[i] = z[i] + h / 6.0 * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Default RK4 step for a system/input pair.
pub fn default_step(sys: &SystemModel, input: &InputSignal) -> f64 {
    let sys_fast = sys
        .linear_parts()
        .iter()
        .filter_map(|s| s.fastest_time_constant())
        .fold(f64::INFINITY, f64::min);
    let (input_fast, _) = input.time_scale();
    let fast = sys_fast.min(input_fast);
    if fast.is_finite() {
        fast / STEPS_PER_CONSTANT
    } else {
        0.02
    }
}

/// Default horizon: input decay plus twenty slowest time constants.
pub fn default_horizon(sys: &SystemModel, input: &InputSignal) -> f64 {
    let slow = sys
        .linear_parts()
        .iter()
        .filter_map(|s| s.slowest_time_constant())
        .fold(0.0, f64::max);
    let (_, input_span) = input.time_scale();
    input_span.unwrap_or(0.0) + 20.0 * slow
}

/// Observability Gramian `W` with `A'W + WA + C'C = 0`.
fn observability_gramian(s: &StateSpace) -> Option<DMatrix<f64>> {
    let m = s.states();
    if m == 0 {
        return None;
    }
    let eye = DMatrix::<f64>::identity(m, m);
    let at = s.a.transpose();
    let k = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -(s.c.transpose() * &s.c);
    let vec = nalgebra::DVector::from_column_slice(rhs.as_slice());
    let sol = k.lu().solve(&vec)?;
    let w = DMatrix::from_column_slice(m, m, sol.as_slice());
    Some((&w + w.transpose()) * 0.5)
}

enum Plant<'a> {
    Lti(Lin),
    Reset { lin: Lin, sys: &'a crate::model::ResetSystem },
    Pwl { lins: Vec<Lin>, sys: &'a crate::model::PwlSystem },
}

/// Simulates `sys` from `x(0) = 0` under `input`.
pub fn simulate(sys: &SystemModel, input: &InputSignal, opts: &SimOptions) -> Result<Trajectory> {
    let h = opts.step.unwrap_or_else(|| default_step(sys, input));
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let mut horizon = opts.horizon.unwrap_or_else(|| default_horizon(sys, input));
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if let InputSignal::MultiSine(ms) = input {
        if ms.components.iter().any(|c| c.channel >= sys.ports()) {
            return Err(Error::Dimension(format!("input channel beyond the {} ports", sys.ports())));
        }
    }
    let m = sys.states();
    let n = sys.ports();
    let plant = match sys {
        SystemModel::Lti(s) => Plant::Lti(Lin::new(s)),
        SystemModel::Reset(r) => Plant::Reset {
            lin: Lin::new(&r.base),
            sys: r,
        },
        SystemModel::Pwl(p) => Plant::Pwl {
            lins: p.modes.iter().map(|md| Lin::new(&md.dynamics)).collect(),
            sys: p,
        },
    };
    let dim = m + 3;
    let mut stepper = Stepper::new(input, dim, n);
    let mut z = vec![0.0; dim];
    let mut znext = vec![0.0; dim];
    let mut u = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut traj = Trajectory {
        states: m,
        ports: n,
        step: h,
        t: Vec::new(),
        u: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
        running: Vec::new(),
        event: Vec::new(),
        mode: Vec::new(),
        reset_times: Vec::new(),
        mode_switches: 0,
        tail: [0.0; 3],
        tail_error: 0.0,
        max_state_norm: 0.0,
        settled: false,
    };
    let dwell = DWELL_STEPS * h;
    let mut last_reset = f64::NEG_INFINITY;
    let mut t = 0.0;
    let mut prev_mode: Option<usize> = None;
    let mut pending_event = false;

    let select = |x: &[f64], u: &[f64]| -> Result<usize> {
        match &plant {
            Plant::Pwl { sys, .. } => sys.select_mode(x, u).ok_or_else(|| {
                Error::Simulation(format!("no PWL mode covers xi = {:?}, {:?}", x, u))
            }),
            _ => Ok(0),
        }
    };
    let lin_for = |mode: usize| -> &Lin {
        match &plant {
            Plant::Lti(l) => l,
            Plant::Reset { lin, .. } => lin,
            Plant::Pwl { lins, .. } => &lins[mode],
        }
    };

    let record = |traj: &mut Trajectory, t: f64, z: &[f64], u: &[f64], y: &[f64], ev: bool, mode: Option<usize>, force: bool| {
        if opts.record || force {
            traj.t.push(t);
            traj.u.extend_from_slice(u);
            traj.x.extend_from_slice(&z[..m]);
            traj.y.extend_from_slice(y);
            traj.running.push([z[m], z[m + 1], z[m + 2]]);
            traj.event.push(ev);
            if let Some(md) = mode {
                traj.mode.push(md);
            }
        }
    };

    let mut extensions = 0;
    loop {
        while t < horizon - 1e-12 * horizon {
            let hs = h.min(horizon - t);
            input.eval(t, &mut u);
            // a jump that was held back by the dwell time fires now
            if let Plant::Reset { sys: rs, .. } = &plant {
                if rs.flow_value(&z[..m], &u) < -TOL_EVENT && t - last_reset >= dwell {
                    apply_reset(rs, &mut z, m);
                    last_reset = t;
                    traj.reset_times.push(t);
                    pending_event = true;
                    if traj.reset_times.len() > MAX_EVENTS {
                        return Err(Error::Simulation(format!(
                            "chattering: more than {MAX_EVENTS} resets before t = {t}"
                        )));
                    }
                }
            }
            let mode = select(&z[..m], &u)?;
            if let Some(pm) = prev_mode {
                if pm != mode {
                    traj.mode_switches += 1;
                }
            }
            prev_mode = Some(mode);
            let lin = lin_for(mode);
            lin.output(&z[..m], &u, &mut y);
            let is_pwl = matches!(plant, Plant::Pwl { .. });
            record(&mut traj, t, &z, &u, &y, pending_event, is_pwl.then_some(mode), t == 0.0);
            pending_event = false;
            traj.max_state_norm = traj.max_state_norm.max(norm(&z[..m]));

            let g0 = match &plant {
                Plant::Reset { sys: rs, .. } => rs.flow_value(&z[..m], &u),
                _ => 0.0,
            };
            stepper.step(lin, t, &z, hs, &mut znext);
            let mut advanced = hs;
            if let Plant::Reset { sys: rs, .. } = &plant {
                input.eval(t + hs, &mut u);
                let g1 = rs.flow_value(&znext[..m], &u);
                if g0 >= -TOL_EVENT && g1 < -TOL_EVENT && t + hs - last_reset >= dwell {
                    // bisect the crossing time on the flow form
                    let (mut lo, mut hi) = (0.0, hs);
                    let mut zt = vec![0.0; dim];
                    let mut ut = vec![0.0; n];
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        stepper.step(lin, t, &z, mid, &mut zt);
                        input.eval(t + mid, &mut ut);
                        let g = rs.flow_value(&zt[..m], &ut);
                        if g.abs() <= TOL_EVENT && g < 0.0 || hi - lo < 1e-15 * (1.0 + t) {
                            hi = mid;
                            break;
                        }
                        if g < 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    let te = hi;
                    if t + te - last_reset >= dwell {
                        stepper.step(lin, t, &z, te, &mut znext);
                        apply_reset(rs, &mut znext, m);
                        advanced = te;
                        last_reset = t + te;
                        traj.reset_times.push(t + te);
                        pending_event = true;
                        if traj.reset_times.len() > MAX_EVENTS {
                            return Err(Error::Simulation(format!(
                                "chattering: more than {MAX_EVENTS} resets before t = {}",
                                t + te
                            )));
                        }
                    }
                }
            }
            std::mem::swap(&mut z, &mut znext);
            t += advanced;
        }
        let xn = norm(&z[..m]);
        traj.max_state_norm = traj.max_state_norm.max(xn);
        traj.settled = xn <= EPS_DECAY * traj.max_state_norm || traj.max_state_norm == 0.0;
        if traj.settled || !opts.extend || extensions >= HORIZON_EXTENSIONS {
            break;
        }
        extensions += 1;
        horizon *= 2.0;
    }
    if matches!(plant, Plant::Pwl { .. }) && traj.mode_switches as f64 > MAX_EVENTS as f64 * t.max(1.0) {
        return Err(Error::Simulation(format!(
            "chattering: {} mode switches over {t}",
            traj.mode_switches
        )));
    }
    input.eval(t, &mut u);
    let mode = select(&z[..m], &u)?;
    lin_for(mode).output(&z[..m], &u, &mut y);
    let is_pwl = matches!(plant, Plant::Pwl { .. });
    record(&mut traj, t, &z, &u, &y, pending_event, is_pwl.then_some(mode), true);

    let x_end = DMatrix::from_column_slice(m, 1, &z[..m]);
    let input_tail = input.tail_energy(t);
    match sys {
        SystemModel::Lti(s) => {
            if let Some(w) = observability_gramian(s) {
                traj.tail[1] = (x_end.transpose() * w * &x_end)[(0, 0)].max(0.0);
            }
            traj.tail_error = input_tail;
        }
        _ => {
            // zero extension; report what an LTI tail of any linear part would add
            let worst = sys
                .linear_parts()
                .iter()
                .filter_map(|s| observability_gramian(s))
                .map(|w| w.norm())
                .fold(0.0, f64::max);
            traj.tail_error = input_tail + worst * xn_sq(&z[..m]);
        }
    }
    if !traj.settled {
        log::warn!(
            "trajectory not settled at t = {t}: |x| = {:.3e}, max |x| = {:.3e}",
            norm(&z[..m]),
            traj.max_state_norm
        );
    }
    Ok(traj)
}

fn xn_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn apply_reset(rs: &crate::model::ResetSystem, z: &mut [f64], m: usize) {
    let x: Vec<f64> = (0..m)
        .map(|i| (0..m).map(|j| rs.reset[(i, j)] * z[j]).sum())
        .collect();
    z[..m].copy_from_slice(&x);
}

/// `(|u|, |y|, <u, y>)` over `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub u_norm: f64,
    pub y_norm: f64,
    pub inner: f64,
    /// Bound on the part of the integrals not accounted for.
    pub tail_error: f64,
}

/// Signal norms and inner product of a settled trajectory.
pub fn functionals(traj: &Trajectory) -> Result<Functionals> {
    if !traj.settled {
        return Err(Error::Simulation(format!(
            "trajectory not settled at t = {}",
            traj.end_time()
        )));
    }
    raw_functionals(traj)
}

fn raw_functionals(traj: &Trajectory) -> Result<Functionals> {
    let [uu, yy, uy] = traj.totals();
    if !(uu > 0.0) {
        return Err(Error::InvalidArgument("zero input: gain is undefined".into()));
    }
    Ok(Functionals {
        u_norm: uu.sqrt(),
        y_norm: yy.max(0.0).sqrt(),
        inner: uy,
        tail_error: traj.tail_error,
    })
}

/// Point `rho e^(j theta)` of a sampled scaled graph; the mirror image
/// `rho e^(-j theta)` belongs to the graph as well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgSample {
    pub rho: f64,
    pub theta: f64,
    pub re: f64,
    pub im: f64,
    pub norms: Functionals,
    pub input: Option<MultiSineInput>,
    pub trusted: bool,
}

impl SgSample {
    pub fn z(&self) -> Cplx {
        Cplx::new(self.re, self.im)
    }

    pub fn from_functionals(f: Functionals, input: Option<MultiSineInput>, trusted: bool) -> SgSample {
        let rho = f.y_norm / f.u_norm;
        let theta = if f.y_norm == 0.0 {
            0.0
        } else {
            (f.inner / (f.u_norm * f.y_norm)).clamp(-1.0, 1.0).acos()
        };
        SgSample {
            rho,
            theta,
            re: rho * theta.cos(),
            im: rho * theta.sin(),
            norms: f,
            input,
            trusted,
        }
    }
}

/// Simulates once and turns the functionals into a scaled-graph point.
pub fn sg_sample(sys: &SystemModel, input: &InputSignal) -> Result<SgSample> {
    let traj = simulate(sys, input, &SimOptions { extend: true, ..Default::default() })?;
    let f = functionals(&traj)?;
    let desc = match input {
        InputSignal::MultiSine(m) => Some(m.clone()),
        InputSignal::Sampled { .. } => None,
    };
    Ok(SgSample::from_functionals(f, desc, true))
}

/// Ranges of the randomized multi-sine draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputRanges {
    pub max_components: usize,
    pub amplitude: (f64, f64),
    /// Frequencies are drawn log-uniformly.
    pub frequency: (f64, f64),
    pub decay: (f64, f64),
}

impl Default for InputRanges {
    fn default() -> Self {
        InputRanges {
            max_components: MAX_COMPONENTS,
            amplitude: (-1.0, 1.0),
            frequency: (0.02, 5.0),
            decay: (-1.0, -0.05),
        }
    }
}

impl InputRanges {
    pub fn validate(&self) -> Result<()> {
        let ok = (1..=MAX_COMPONENTS).contains(&self.max_components)
            && self.amplitude.0 <= self.amplitude.1
            && self.frequency.0 > 0.0
            && self.frequency.0 <= self.frequency.1
            && self.decay.0 <= self.decay.1
            && self.decay.1 < 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("bad input ranges {self:?}")))
        }
    }

    pub fn draw(&self, rng: &mut impl Rng, ports: usize) -> MultiSineInput {
        let count = rng.random_range(1..=self.max_components);
        let (lw, hw) = (self.frequency.0.ln(), self.frequency.1.ln());
        let components = (0..count)
            .map(|_| SineComponent {
                amplitude: uniform(rng, self.amplitude),
                frequency: if hw > lw { rng.random_range(lw..hw).exp() } else { self.frequency.0 },
                phase: rng.random_range(0.0..2.0 * PI),
                channel: if ports > 1 { rng.random_range(0..ports) } else { 0 },
            })
            .collect();
        MultiSineInput {
            components,
            decay: uniform(rng, self.decay),
        }
    }
}

fn uniform(rng: &mut impl Rng, (a, b): (f64, f64)) -> f64 {
    if b > a {
        rng.random_range(a..b)
    } else {
        a
    }
}

/// Generator for the `i`-th sample: seeded once, one stream per sample.
pub fn sample_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

#[derive(Debug, Clone)]
pub struct SampleCloud {
    /// Every sample that produced a point, trusted or not.
    pub samples: Vec<SgSample>,
    pub untrusted: usize,
    /// Draws that failed outright (chattering, zero input).
    pub failed: usize,
}

impl SampleCloud {
    pub fn trusted(&self) -> impl Iterator<Item = &SgSample> + '_ {
        self.samples.iter().filter(|s| s.trusted)
    }

    /// CSV `re,im,rho,theta,trusted` with both `z` and its conjugate.
    pub fn to_csv(&self, header: &[(&str, String)]) -> String {
        let mut s = String::new();
        for (k, v) in header {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s.push_str("re,im,rho,theta,trusted\n");
        for p in &self.samples {
            for sign in [1.0, -1.0] {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    p.re,
                    sign * p.im,
                    p.rho,
                    sign * p.theta,
                    p.trusted as u8
                );
            }
        }
        s
    }
}

/// Share of trusted samples (both `z` and its mirror image) inside a set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Containment {
    pub inside: usize,
    pub total: usize,
    pub fraction: f64,
    /// Smallest signed margin met, negative when some point falls outside.
    pub worst_margin: f64,
}

impl SampleCloud {
    pub fn containment(&self, set: &dyn PlaneSet) -> Containment {
        let mut c = Containment {
            inside: 0,
            total: 0,
            fraction: 1.0,
            worst_margin: f64::INFINITY,
        };
        for z in self.trusted().flat_map(|s| [s.z(), s.z().conj()]) {
            c.total += 1;
            if set.contains(z) {
                c.inside += 1;
            }
            c.worst_margin = c.worst_margin.min(set.margin(z));
        }
        if c.total > 0 {
            c.fraction = c.inside as f64 / c.total as f64;
        }
        c
    }
}

/// `count` randomized multi-sine samples, reproducible from `seed` whatever
/// the scheduling.
pub fn sample_cloud(sys: &SystemModel, count: usize, seed: u64, ranges: &InputRanges) -> Result<SampleCloud> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    ranges.validate()?;
    let ports = sys.ports();
    let results = par::map_range(count, |i| {
        let mut rng = sample_rng(seed, i);
        let ms = ranges.draw(&mut rng, ports);
        let input = InputSignal::MultiSine(ms.clone());
        let opts = SimOptions {
            extend: true,
            ..Default::default()
        };
        let traj = simulate(sys, &input, &opts)?;
        let f = raw_functionals(&traj)?;
        Ok::<_, Error>(SgSample::from_functionals(f, Some(ms), traj.settled))
    });
    let mut cloud = SampleCloud {
        samples: Vec::with_capacity(count),
        untrusted: 0,
        failed: 0,
    };
    for r in results {
        match r {
            Ok(s) => {
                if !s.trusted {
                    cloud.untrusted += 1;
                }
                cloud.samples.push(s);
            }
            Err(e) => {
                log::warn!("sample dropped: {e}");
                cloud.failed += 1;
            }
        }
    }
    Ok(cloud)
}

/// Trajectory-level IQC `int [y;u]' (Pi (x) I) [y;u] >= 0`: over the whole
/// horizon (soft) or at every recorded time (hard).
pub fn iqc_check(traj: &Trajectory, pi: &PiMatrix, hard: bool) -> bool {
    let [uu, yy, _] = traj.totals();
    let eps = 1e-6 * (1.0 + uu + yy);
    let value = |q: [f64; 3]| pi.a * q[1] + 2.0 * pi.b * q[2] + pi.c * q[0];
    if hard {
        traj.running.iter().all(|q| value(*q) >= -eps)
    } else {
        value(traj.totals()) >= -eps
    }
}

/// Value of the soft IQC integral.
pub fn iqc_value(traj: &Trajectory, pi: &PiMatrix) -> f64 {
    let [uu, yy, uy] = traj.totals();
    pi.a * yy + 2.0 * pi.b * uy + pi.c * uu
}

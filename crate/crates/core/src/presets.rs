//! Built-in example systems with their sweep grids.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{
    arithmetic_grid, realize_tf_denominator, PwlMode, PwlSystem, ResetSystem, StateSpace, SweepConfig, SystemModel,
};

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub system: SystemModel,
    pub config: SweepConfig,
}

pub const NAMES: [&str; 4] = ["ex1", "ex1-coarse", "ex2", "ex3"];

fn m(rows: &[&[f64]]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

/// `1 / (s^3 + 5 s^2 + 2 s + 1)`.
pub fn lti_system() -> StateSpace {
    realize_tf_denominator(&[1.0, 5.0, 2.0, 1.0]).expect("valid denominator")
}

/// Two cascaded first-order lags whose state is cleared once the output
/// exceeds 0.9 times the first state in magnitude.
pub fn reset_system() -> ResetSystem {
    let base = StateSpace::new(
        m(&[&[-1.0, 0.0], &[1.0, -1.0]]),
        m(&[&[1.0], &[0.0]]),
        m(&[&[0.0, 1.0]]),
        m(&[&[0.0]]),
    )
    .expect("valid base system");
    let flow = DMatrix::from_diagonal(&DVector::from_vec(vec![0.9 * 0.9, -1.0, 0.0]));
    ResetSystem::new(base, DMatrix::zeros(2, 2), flow).expect("valid reset data")
}

/// Four-mode system switching on the signs of both states.
pub fn pwl_system() -> PwlSystem {
    let slow = StateSpace::new(
        m(&[&[-0.1, 0.0], &[-1.0, -2.0]]),
        m(&[&[0.0], &[1.0]]),
        m(&[&[1.0, 0.0]]),
        m(&[&[0.0]]),
    )
    .expect("valid mode");
    let coupled = StateSpace::new(
        m(&[&[-0.1, 1.0], &[-1.0, -1.0]]),
        m(&[&[0.0], &[1.0]]),
        m(&[&[1.0, 0.0]]),
        m(&[&[0.0]]),
    )
    .expect("valid mode");
    let e1 = m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
    let e2 = m(&[&[-1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
    let mode = |dynamics: &StateSpace, guard: DMatrix<f64>| PwlMode {
        dynamics: dynamics.clone(),
        guard,
    };
    PwlSystem::new(vec![
        mode(&slow, e1.clone()),
        mode(&coupled, e2.clone()),
        mode(&slow, -e1),
        mode(&coupled, -e2),
    ])
    .expect("valid modes")
}

pub fn preset(name: &str) -> Result<Preset> {
    let key = name.strip_prefix("paper-").unwrap_or(name);
    let cfg = |li: Vec<f64>, le: Vec<f64>| SweepConfig::new(li, le, false);
    let p = match key {
        "ex1" => Preset {
            name: "ex1",
            system: SystemModel::Lti(lti_system()),
            config: cfg(arithmetic_grid(-2.0, 0.05, 80), arithmetic_grid(-10.0, 0.25, 80))?,
        },
        "ex1-coarse" => Preset {
            name: "ex1-coarse",
            system: SystemModel::Lti(lti_system()),
            config: cfg(vec![-1.0, 0.0, 1.0], vec![-2.0, -1.0, -0.05, 0.3, 0.7, 1.0, 2.0])?,
        },
        "ex2" => Preset {
            name: "ex2",
            system: SystemModel::Reset(reset_system()),
            config: cfg(arithmetic_grid(-1.0, 0.05, 80), arithmetic_grid(-1.0, 0.25, 80))?,
        },
        "ex3" => Preset {
            name: "ex3",
            system: SystemModel::Pwl(pwl_system()),
            config: cfg(arithmetic_grid(-20.0, 0.1, 210), arithmetic_grid(-50.0, 0.35, 300))?,
        },
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown preset {name:?}; known: {}",
                NAMES.join(", ")
            )))
        }
    };
    Ok(p)
}

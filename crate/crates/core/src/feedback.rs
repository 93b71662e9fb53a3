//! Feedback stability through scaled-graph separation.
//!
//! The loop of `H1` and `H2` is stable with gain at most `1/r` when the
//! inverse graph of `-H1` stays at distance `r` from the graph of `tau H2`
//! for every `tau` in `(0, 1]`. Only a finite `tau` grid is checked and
//! well-posedness of the loop is assumed, not verified.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::log_grid;
use crate::model::Cplx;
use crate::par;
use crate::regions::{rasterize, set_distance, PlaneSet, RegionEntry, RegionSpec, SetRef, SgApproximation, Window};

pub const DEFAULT_TAU_POINTS: usize = 32;
pub const DEFAULT_RESOLUTION: usize = 512;
pub const DISCLAIMER: &str = "well-posedness of the interconnection is assumed, not checked; \
the verdict holds for the sampled tau grid only";

/// Image of an approximation of `SG(H)` under `z -> -z` followed by
/// inversion, which contains the inverse graph of `-H`. Regions whose image
/// cannot be represented are dropped, which only enlarges the set.
pub fn negate_then_invert(approx: &SgApproximation) -> Result<(SgApproximation, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut entries = Vec::new();
    for e in &approx.entries {
        let image = e.region.negated().inverted();
        if admissible(&image) {
            entries.push(RegionEntry {
                region: image,
                certificate: None,
            });
        } else {
            let msg = format!("dropped {:?}: its inverse {:?} is degenerate", e.region, image);
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    let mut out = SgApproximation::new(entries, approx.system_hash.clone(), approx.mode)?;
    out.pruned.clear();
    Ok((out, warnings))
}

fn admissible(r: &RegionSpec) -> bool {
    match *r {
        RegionSpec::DiskInterior { lambda_c, r } | RegionSpec::DiskExterior { lambda_c, r } => {
            lambda_c.is_finite() && r.is_finite() && r > 0.0
        }
        RegionSpec::HalfPlane { c, .. } => c.is_finite(),
    }
}

/// 32 logarithmic points on `[1e-3, 1]`, ending at `tau = 1`.
pub fn default_tau_grid() -> Vec<f64> {
    let mut g = log_grid(1e-3, 1.0, DEFAULT_TAU_POINTS);
    if let Some(last) = g.last_mut() {
        *last = 1.0;
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Separated,
    Overlapping,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauDistance {
    pub tau: f64,
    pub distance: f64,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeedbackReport {
    pub tau_grid: Vec<f64>,
    pub distances: Vec<TauDistance>,
    pub r_min: f64,
    pub tau_at_min: f64,
    pub uncertainty: f64,
    pub gain_bound: Option<f64>,
    pub verdict: Verdict,
    pub window: Window,
    pub resolution: usize,
    /// Approximate closest pair `(SG^+(-H1) point, SG(tau H2) point)` at the
    /// minimizing `tau`.
    pub closest: Option<[[f64; 2]; 2]>,
    pub dropped_regions: Vec<String>,
    /// `raster`, or `gain_annulus` when the inverse set lies outside every
    /// usable window and the distance is bounded by `1/gamma1 - tau gamma2`.
    pub method: &'static str,
    pub disclaimer: &'static str,
}

impl FeedbackReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Square window around the origin of half-width twice the gain bound of
/// `approx2` (or 2 without one), doubled up to three times until the inverse
/// set shows up in it.
pub fn default_window(inverse: &SgApproximation, approx2: &SgApproximation) -> Result<Window> {
    let mut half = 2.0 * approx2.gain_bound().unwrap_or(1.0).max(1e-3);
    for _ in 0..4 {
        let w = Window::square(0.0, half)?;
        if !rasterize(inverse, &w, 64)?.is_empty() {
            return Ok(w);
        }
        half *= 2.0;
    }
    Err(Error::EmptyInWindow("inverse of the negated first system"))
}

/// Disk `{ |z| <= r }` as a plane set.
struct Ball(f64);

impl PlaneSet for Ball {
    fn contains(&self, z: Cplx) -> bool {
        z.norm() <= self.0
    }
    fn margin(&self, z: Cplx) -> f64 {
        self.0 - z.norm()
    }
}

fn tau_distance(
    inverse: &SgApproximation,
    approx2: &SgApproximation,
    tau: f64,
    window: &Window,
    resolution: usize,
) -> Result<TauDistance> {
    let scaled = approx2.scaled(tau)?;
    let d = match set_distance(SetRef::Set(inverse), SetRef::Set(&scaled), window, resolution) {
        Err(Error::EmptyInWindow("second set")) => {
            // tau H2 fell between cell centers; use the enclosing ball of
            // radius tau * gamma, a superset, and subtract its radius
            let gamma = approx2.gain_bound().ok_or(Error::EmptyInWindow("second set"))?;
            let origin = [Cplx::new(0.0, 0.0)];
            let ball = Ball(tau * gamma);
            match set_distance(SetRef::Set(inverse), SetRef::Set(&ball), window, resolution) {
                Err(Error::EmptyInWindow("second set")) => {
                    let mut d = set_distance(SetRef::Set(inverse), SetRef::Points(&origin), window, resolution)?;
                    d.value = (d.value - tau * gamma).max(0.0);
                    d
                }
                other => other?,
            }
        }
        other => other?,
    };
    Ok(TauDistance {
        tau,
        distance: d.value,
        uncertainty: std::f64::consts::SQRT_2 * d.spacing,
    })
}

/// Separation check of the loop `(H1, H2)` from over-approximations of their
/// scaled graphs.
pub fn check_feedback(
    approx1: &SgApproximation,
    approx2: &SgApproximation,
    tau_grid: &[f64],
    window: Option<&Window>,
    resolution: usize,
) -> Result<FeedbackReport> {
    if tau_grid.is_empty() {
        return Err(Error::InvalidArgument("empty tau grid".into()));
    }
    if let Some(t) = tau_grid.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::InvalidArgument(format!("tau must lie in (0, 1], got {t}")));
    }
    let (inverse, dropped) = negate_then_invert(approx1)?;
    let window = match window {
        Some(w) => *w,
        None => match default_window(&inverse, approx2) {
            Err(Error::EmptyInWindow(what)) => {
                return annulus_report(approx1, approx2, tau_grid, resolution, dropped)
                    .ok_or(Error::EmptyInWindow(what))
            }
            other => other?,
        },
    };
    let distances: Vec<TauDistance> = par::map(tau_grid, |&tau| tau_distance(&inverse, approx2, tau, &window, resolution))
        .into_iter()
        .collect::<Result<_>>()?;
    let best = distances
        .iter()
        .min_by(|a, b| a.distance.total_cmp(&b.distance))
        .expect("grid is nonempty");
    let (r_min, tau_at_min, uncertainty) = (best.distance, best.tau, best.uncertainty);
    let verdict = if r_min <= 0.0 {
        Verdict::Overlapping
    } else if r_min <= uncertainty {
        Verdict::Inconclusive
    } else {
        Verdict::Separated
    };
    let closest = if verdict == Verdict::Overlapping {
        None
    } else {
        closest_pair(&inverse, &approx2.scaled(tau_at_min)?, &window, resolution)?
    };
    Ok(FeedbackReport {
        tau_grid: tau_grid.to_vec(),
        distances,
        r_min,
        tau_at_min,
        uncertainty,
        gain_bound: (verdict == Verdict::Separated).then(|| 1.0 / r_min),
        verdict,
        window,
        resolution,
        closest,
        dropped_regions: dropped,
        method: "raster",
        disclaimer: DISCLAIMER,
    })
}

/// `SG(H1)` inside `|z| <= g1` puts the inverse graph of `-H1` outside
/// `|z| < 1/g1`, and `SG(tau H2)` sits inside `|z| <= tau g2`.
fn annulus_report(
    approx1: &SgApproximation,
    approx2: &SgApproximation,
    tau_grid: &[f64],
    resolution: usize,
    dropped: Vec<String>,
) -> Option<FeedbackReport> {
    let g1 = approx1.gain_bound()?;
    let g2 = approx2.gain_bound()?;
    let distances: Vec<TauDistance> = tau_grid
        .iter()
        .map(|&tau| TauDistance {
            tau,
            distance: (1.0 / g1 - tau * g2).max(0.0),
            uncertainty: 0.0,
        })
        .collect();
    let best = *distances.iter().min_by(|a, b| a.distance.total_cmp(&b.distance))?;
    let verdict = if best.distance > 0.0 {
        Verdict::Separated
    } else {
        Verdict::Inconclusive
    };
    Some(FeedbackReport {
        tau_grid: tau_grid.to_vec(),
        distances,
        r_min: best.distance,
        tau_at_min: best.tau,
        uncertainty: 0.0,
        gain_bound: (verdict == Verdict::Separated).then(|| 1.0 / best.distance),
        verdict,
        window: Window::square(0.0, 2.0 * g2.max(1e-3)).ok()?,
        resolution,
        closest: None,
        dropped_regions: dropped,
        method: "gain_annulus",
        disclaimer: DISCLAIMER,
    })
}

/// Closest pair of boundary points of two rasterized sets, for drawing.
fn closest_pair(a: &dyn PlaneSet, b: &dyn PlaneSet, window: &Window, resolution: usize) -> Result<Option<[[f64; 2]; 2]>> {
    let pts = |s: &dyn PlaneSet| -> Result<Vec<Cplx>> {
        let r = rasterize(s, window, resolution)?;
        Ok(r.boundary().into_iter().flatten().collect())
    };
    let (pa, pb) = (pts(a)?, pts(b)?);
    let best = par::map(&pa, |p| {
        pb.iter()
            .map(|q| ((p - q).norm(), *q))
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .map(|(d, q)| (d, *p, q))
    })
    .into_iter()
    .flatten()
    .min_by(|x, y| x.0.total_cmp(&y.0));
    Ok(best.map(|(_, p, q)| [[p.re, p.im], [q.re, q.im]]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::SgMode;

    fn approx(regions: Vec<RegionSpec>) -> SgApproximation {
        SgApproximation::from_regions(regions, SgMode::Soft).unwrap()
    }

    #[test]
    fn first_order_inverse_is_a_half_plane() {
        let a = approx(vec![RegionSpec::disk_interior(0.5, 0.5).unwrap()]);
        let (inv, dropped) = negate_then_invert(&a).unwrap();
        assert!(dropped.is_empty());
        assert_eq!(inv.entries[0].region, RegionSpec::left_of(-1.0));
    }

    #[test]
    fn static_gain_inverse() {
        let (k, eps) = (2.0, 1e-4);
        let a = approx(vec![RegionSpec::disk_interior(k, eps).unwrap()]);
        let (inv, _) = negate_then_invert(&a).unwrap();
        match inv.entries[0].region {
            RegionSpec::DiskInterior { lambda_c, r } => {
                assert!((lambda_c + 1.0 / k).abs() < 1e-8);
                assert!((r - eps / (k * k)).abs() < 1e-10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tau_grid_shape() {
        let g = default_tau_grid();
        assert_eq!(g.len(), 32);
        assert!((g[0] - 1e-3).abs() < 1e-15);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn disks_far_apart_are_separated() {
        // H1 = 0.5 (gain), inverse of -H1 is near -2; H2 within |z| <= 0.5
        let a1 = approx(vec![RegionSpec::disk_interior(0.5, 0.01).unwrap()]);
        let a2 = approx(vec![RegionSpec::disk_interior(0.0, 0.5).unwrap()]);
        let rep = check_feedback(&a1, &a2, &default_tau_grid(), Some(&Window::square(0.0, 3.0).unwrap()), 256).unwrap();
        assert_eq!(rep.verdict, Verdict::Separated);
        // inverse disk: center -2, radius 0.04; distance 2 - 0.04 - 0.5
        assert!((rep.r_min - 1.46).abs() < 2.0 * rep.uncertainty, "{}", rep.r_min);
        assert_eq!(rep.tau_at_min, 1.0);
        assert!(rep.gain_bound.unwrap() > 0.0);
        // small tau: distance tends to the distance from the origin
        let first = rep.distances[0];
        assert!((first.distance - 1.96).abs() < 2.0 * first.uncertainty, "{first:?}");
    }

    #[test]
    fn self_overlap() {
        let a = approx(vec![RegionSpec::disk_interior(0.0, 1.5).unwrap()]);
        let rep = check_feedback(&a, &a, &[1.0], Some(&Window::square(0.0, 3.0).unwrap()), 128).unwrap();
        assert_eq!(rep.verdict, Verdict::Overlapping);
        assert!(rep.gain_bound.is_none());
    }

    #[test]
    fn bad_tau_is_rejected() {
        let a = approx(vec![RegionSpec::disk_interior(0.0, 1.0).unwrap()]);
        assert!(check_feedback(&a, &a, &[], None, 64).is_err());
        assert!(check_feedback(&a, &a, &[1.5], None, 64).is_err());
    }

    #[test]
    fn dropping_regions_never_increases_distance() {
        let a1 = approx(vec![
            RegionSpec::disk_interior(0.5, 0.3).unwrap(),
            RegionSpec::disk_exterior(0.2, 0.1).unwrap(),
        ]);
        let a2 = approx(vec![
            RegionSpec::disk_interior(0.0, 0.6).unwrap(),
            RegionSpec::right_of(-0.2),
        ]);
        let w = Window::square(0.0, 4.0).unwrap();
        let full = check_feedback(&a1, &a2, &[1.0], Some(&w), 256).unwrap();
        let fewer = approx(vec![RegionSpec::disk_interior(0.0, 0.6).unwrap()]);
        let part = check_feedback(&a1, &fewer, &[1.0], Some(&w), 256).unwrap();
        assert!(part.r_min <= full.r_min + 1e-12);
    }
}

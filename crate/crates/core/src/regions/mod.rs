//! Quadratic regions `S(Pi) = { z : [z;1]* Pi [z;1] >= 0 }` of the complex
//! plane and intersections of them.
//!
//! Every region used here comes from a real symmetric 2x2 matrix with
//! negative determinant, which leaves three shapes: the inside of a disk
//! centered on the real axis, its outside, or a vertical half-plane.

mod distance;
mod raster;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmi::Certificate;
use crate::model::{Cplx, Sign};

pub use distance::{disk_disk_distance, set_distance, Distance, SetRef};
pub use raster::{marching_squares, rasterize, Polyline, Raster, Window};

/// Absolute slack on the quadratic form when testing membership.
pub const MEMBERSHIP_EPS: f64 = 1e-9;
/// Relative tolerance for the `|lambda_c| = r` inversion case.
pub const DEGENERATE_EPS: f64 = 1e-9;
/// Slack on `det(Pi) < 0`.
pub const DET_EPS: f64 = 1e-12;

/// Symmetric matrix `[[a, b], [b, c]]` of a quadratic supply rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiMatrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PiMatrix {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        PiMatrix { a, b, c }
    }

    pub fn det(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    /// `[z;1]* Pi [z;1] = a|z|^2 + 2b Re z + c`.
    pub fn form(&self, z: Cplx) -> f64 {
        self.a * z.norm_sqr() + 2.0 * self.b * z.re + self.c
    }

    pub fn to_rows(&self) -> [[f64; 2]; 2] {
        [[self.a, self.b], [self.b, self.c]]
    }

    /// Admissible when `det < 0` (disks) or when it has the half-plane form
    /// `[[0, +-1], [+-1, c]]`.
    pub fn is_admissible(&self) -> bool {
        self.det() < 0.0 || (self.a == 0.0 && self.b.abs() == 1.0)
    }

    /// `Pi` of the set `{ -z }`.
    pub fn negated(&self) -> PiMatrix {
        PiMatrix::new(self.a, -self.b, self.c)
    }

    /// `Pi` of the set `{ 1/conj(z) }`; multiplying the form by `|w|^2`
    /// swaps the roles of `a` and `c`.
    pub fn inverted(&self) -> PiMatrix {
        PiMatrix::new(self.c, self.b, self.a)
    }
}

/// `Pi(sigma, lambda_c, r) = sigma [[1, -lambda_c], [-lambda_c, lambda_c^2 - r^2]]`.
pub fn make_pi(sigma: Sign, lambda_c: f64, r: f64) -> Result<PiMatrix> {
    if !(r > 0.0) || !r.is_finite() || !lambda_c.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "disk parameters must be finite with r > 0 (lambda_c = {lambda_c}, r = {r})"
        )));
    }
    let s = sigma.value();
    Ok(PiMatrix::new(s, -s * lambda_c, s * (lambda_c * lambda_c - r * r)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionSpec {
    DiskInterior { lambda_c: f64, r: f64 },
    DiskExterior { lambda_c: f64, r: f64 },
    /// `2*sign*Re z + c >= 0`, i.e. `Re z >= -c/2` (`Pos`) or `Re z <= c/2` (`Neg`).
    HalfPlane { sign: Sign, c: f64 },
}

impl RegionSpec {
    pub fn disk_interior(lambda_c: f64, r: f64) -> Result<Self> {
        make_pi(Sign::Neg, lambda_c, r)?;
        Ok(RegionSpec::DiskInterior { lambda_c, r })
    }

    pub fn disk_exterior(lambda_c: f64, r: f64) -> Result<Self> {
        make_pi(Sign::Pos, lambda_c, r)?;
        Ok(RegionSpec::DiskExterior { lambda_c, r })
    }

    /// `{ Re z >= x0 }`.
    pub fn right_of(x0: f64) -> Self {
        RegionSpec::HalfPlane {
            sign: Sign::Pos,
            c: -2.0 * x0,
        }
    }

    /// `{ Re z <= x0 }`.
    pub fn left_of(x0: f64) -> Self {
        RegionSpec::HalfPlane {
            sign: Sign::Neg,
            c: 2.0 * x0,
        }
    }

    pub fn pi(&self) -> PiMatrix {
        match *self {
            RegionSpec::DiskInterior { lambda_c, r } => PiMatrix::new(-1.0, lambda_c, r * r - lambda_c * lambda_c),
            RegionSpec::DiskExterior { lambda_c, r } => PiMatrix::new(1.0, -lambda_c, lambda_c * lambda_c - r * r),
            RegionSpec::HalfPlane { sign, c } => PiMatrix::new(0.0, sign.value(), c),
        }
    }

    /// Classifies an admissible `Pi` into its geometric shape, normalizing the
    /// matrix so the leading coefficient is `+-1`.
    pub fn from_pi(pi: PiMatrix) -> Result<Self> {
        let PiMatrix { a, b, c } = pi;
        let scale = a.abs().max(b.abs()).max(c.abs());
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!("degenerate Pi {pi:?}")));
        }
        if a.abs() <= 1e-14 * scale {
            if b == 0.0 {
                return Err(Error::InvalidArgument(format!("Pi {pi:?} has no half-plane normal")));
            }
            let sign = if b > 0.0 { Sign::Pos } else { Sign::Neg };
            return Ok(RegionSpec::HalfPlane { sign, c: c / b.abs() });
        }
        if pi.det() >= -DET_EPS * scale * scale {
            return Err(Error::InvalidArgument(format!(
                "Pi {pi:?} has det {} >= 0 and describes no proper region",
                pi.det()
            )));
        }
        let center = -b / a;
        let r = (center * center - c / a).max(0.0).sqrt();
        if a < 0.0 {
            Ok(RegionSpec::DiskInterior { lambda_c: center, r })
        } else {
            Ok(RegionSpec::DiskExterior { lambda_c: center, r })
        }
    }

    pub fn contains(&self, z: Cplx) -> bool {
        self.pi().form(z) >= -MEMBERSHIP_EPS
    }

    /// Signed Euclidean distance to the region boundary, positive inside.
    pub fn margin(&self, z: Cplx) -> f64 {
        match *self {
            RegionSpec::DiskInterior { lambda_c, r } => r - (z - Cplx::new(lambda_c, 0.0)).norm(),
            RegionSpec::DiskExterior { lambda_c, r } => (z - Cplx::new(lambda_c, 0.0)).norm() - r,
            RegionSpec::HalfPlane { sign, c } => sign.value() * z.re + c / 2.0,
        }
    }

    /// Region `{ tau z }`.
    pub fn scaled(&self, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::InvalidArgument(format!("tau must lie in (0, 1], got {tau}")));
        }
        Ok(self.scaled_unchecked(tau))
    }

    pub(crate) fn scaled_unchecked(&self, tau: f64) -> Self {
        match *self {
            RegionSpec::DiskInterior { lambda_c, r } => RegionSpec::DiskInterior {
                lambda_c: tau * lambda_c,
                r: tau * r,
            },
            RegionSpec::DiskExterior { lambda_c, r } => RegionSpec::DiskExterior {
                lambda_c: tau * lambda_c,
                r: tau * r,
            },
            RegionSpec::HalfPlane { sign, c } => RegionSpec::HalfPlane { sign, c: tau * c },
        }
    }

    /// Region `{ -z }`: disks reflect their centers, half-planes swap sides.
    pub fn negated(&self) -> Self {
        match *self {
            RegionSpec::DiskInterior { lambda_c, r } => RegionSpec::DiskInterior { lambda_c: -lambda_c, r },
            RegionSpec::DiskExterior { lambda_c, r } => RegionSpec::DiskExterior { lambda_c: -lambda_c, r },
            RegionSpec::HalfPlane { sign, c } => RegionSpec::HalfPlane { sign: sign.flip(), c },
        }
    }

    /// Region containing `{ (1/|z|) e^(+-j arg z) : z in self, z != 0 }`.
    ///
    /// With `lambda' = lambda/(lambda^2 - r^2)` and `r' = r/|lambda^2 - r^2|`,
    /// a disk not containing the origin maps to the inside of the disk
    /// `(lambda', r')`, one containing it maps to the outside, and a circle
    /// through the origin maps to the vertical line `Re z = 1/(2 lambda)`.
    pub fn inverted(&self) -> Self {
        let (sigma, lambda_c, r) = match *self {
            RegionSpec::DiskInterior { lambda_c, r } => (Sign::Neg, lambda_c, r),
            RegionSpec::DiskExterior { lambda_c, r } => (Sign::Pos, lambda_c, r),
            RegionSpec::HalfPlane { .. } => {
                return RegionSpec::from_pi(self.pi().inverted())
                    .expect("inverse of an admissible half-plane is admissible")
            }
        };
        if (lambda_c.abs() - r).abs() <= DEGENERATE_EPS * r {
            // Circle through the origin. Inside maps right of the line for
            // lambda > 0; the picture mirrors for lambda < 0 and for exteriors.
            let x0 = 1.0 / (2.0 * lambda_c);
            let right = (lambda_c > 0.0) == (sigma == Sign::Neg);
            return if right {
                RegionSpec::right_of(x0)
            } else {
                RegionSpec::left_of(x0)
            };
        }
        let shift = lambda_c * lambda_c - r * r;
        let lambda_p = lambda_c / shift;
        let r_p = r / shift.abs();
        let origin_inside = match sigma {
            Sign::Neg => lambda_c.abs() < r,
            Sign::Pos => lambda_c.abs() > r,
        };
        if origin_inside {
            RegionSpec::DiskExterior { lambda_c: lambda_p, r: r_p }
        } else {
            RegionSpec::DiskInterior { lambda_c: lambda_p, r: r_p }
        }
    }

    /// Grows the region by `h` in every direction (`None` when it becomes the
    /// whole plane).
    pub fn dilated(&self, h: f64) -> Option<Self> {
        match *self {
            RegionSpec::DiskInterior { lambda_c, r } => Some(RegionSpec::DiskInterior { lambda_c, r: r + h }),
            RegionSpec::DiskExterior { lambda_c, r } => {
                (r > h).then_some(RegionSpec::DiskExterior { lambda_c, r: r - h })
            }
            RegionSpec::HalfPlane { sign, c } => Some(RegionSpec::HalfPlane { sign, c: c + 2.0 * h }),
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            RegionSpec::DiskInterior { .. } => "disk_in",
            RegionSpec::DiskExterior { .. } => "disk_out",
            RegionSpec::HalfPlane { .. } => "halfplane",
        }
    }
}

/// Anything that can answer point membership in the complex plane.
pub trait PlaneSet: Sync {
    fn contains(&self, z: Cplx) -> bool;

    /// Approximate signed distance to the boundary (positive inside). Only
    /// used to place boundary curves between raster samples.
    fn margin(&self, z: Cplx) -> f64 {
        if self.contains(z) {
            1.0
        } else {
            -1.0
        }
    }
}

impl PlaneSet for RegionSpec {
    fn contains(&self, z: Cplx) -> bool {
        RegionSpec::contains(self, z)
    }

    fn margin(&self, z: Cplx) -> f64 {
        RegionSpec::margin(self, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SgMode {
    Soft,
    Hard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionEntry {
    pub region: RegionSpec,
    pub certificate: Option<Certificate>,
}

/// Intersection of regions over-approximating a scaled graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SgApproximation {
    pub entries: Vec<RegionEntry>,
    /// Regions found redundant on a test raster. They are kept for the record
    /// but take no part in membership; dropping them only enlarges the set.
    pub pruned: Vec<RegionEntry>,
    pub system_hash: String,
    pub mode: SgMode,
}

impl SgApproximation {
    pub fn new(entries: Vec<RegionEntry>, system_hash: impl Into<String>, mode: SgMode) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::NoRegions);
        }
        for e in &entries {
            let pi = e.region.pi();
            if !(pi.det() < DET_EPS || matches!(e.region, RegionSpec::HalfPlane { .. })) {
                return Err(Error::InvalidArgument(format!("inadmissible region {:?}", e.region)));
            }
        }
        Ok(SgApproximation {
            entries,
            pruned: Vec::new(),
            system_hash: system_hash.into(),
            mode,
        })
    }

    /// Approximation built from bare regions without certificates.
    pub fn from_regions(regions: Vec<RegionSpec>, mode: SgMode) -> Result<Self> {
        SgApproximation::new(
            regions
                .into_iter()
                .map(|region| RegionEntry {
                    region,
                    certificate: None,
                })
                .collect(),
            "",
            mode,
        )
    }

    pub fn regions(&self) -> impl Iterator<Item = &RegionSpec> + '_ {
        self.entries.iter().map(|e| &e.region)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends a region; membership becomes the conjunction.
    pub fn intersect(&self, region: RegionSpec) -> Self {
        self.intersect_entry(RegionEntry {
            region,
            certificate: None,
        })
    }

    pub fn intersect_entry(&self, entry: RegionEntry) -> Self {
        let mut out = self.clone();
        out.entries.push(entry);
        out
    }

    /// Like [`intersect`](Self::intersect), but a region that contains the
    /// current intersection at every cell of the test raster is recorded as
    /// pruned instead of active. Returns whether pruning happened.
    pub fn intersect_pruned(&self, entry: RegionEntry, window: &Window, resolution: usize) -> Result<(Self, bool)> {
        let current = rasterize(self, window, resolution)?;
        let redundant = current
            .iter_cells()
            .filter(|&(_, inside)| inside)
            .all(|(z, _)| entry.region.contains(z));
        let mut out = self.clone();
        if redundant {
            log::info!("region {:?} is grid-redundant and was pruned", entry.region);
            out.pruned.push(entry);
        } else {
            out.entries.push(entry);
        }
        Ok((out, redundant))
    }

    /// Image under `z -> tau z`.
    pub fn scaled(&self, tau: f64) -> Result<Self> {
        let mut out = self.clone();
        for e in out.entries.iter_mut().chain(out.pruned.iter_mut()) {
            e.region = e.region.scaled(tau)?;
        }
        Ok(out)
    }

    /// Every region grown by `h`; regions that swallow the plane are dropped.
    /// The result contains the `h`-neighbourhood of the original set.
    pub fn dilated(&self, h: f64) -> Self {
        let entries = self
            .entries
            .iter()
            .filter_map(|e| {
                e.region.dilated(h).map(|region| RegionEntry {
                    region,
                    certificate: e.certificate.clone(),
                })
            })
            .collect();
        SgApproximation {
            entries,
            pruned: Vec::new(),
            system_hash: self.system_hash.clone(),
            mode: self.mode,
        }
    }

    /// The bounded-real disk `{ |z| <= gamma }` when present.
    pub fn gain_bound(&self) -> Option<f64> {
        self.regions()
            .filter_map(|r| match *r {
                RegionSpec::DiskInterior { lambda_c, r } => Some(lambda_c.abs() + r),
                _ => None,
            })
            .min_by(f64::total_cmp)
    }
}

impl PlaneSet for SgApproximation {
    fn contains(&self, z: Cplx) -> bool {
        self.entries.iter().all(|e| e.region.contains(z))
    }

    fn margin(&self, z: Cplx) -> f64 {
        self.entries
            .iter()
            .map(|e| e.region.margin(z))
            .fold(f64::INFINITY, f64::min)
    }
}

// ---------------------------------------------------------------------------
// Region-set files

#[derive(Debug, Serialize, Deserialize)]
struct RegionRecord {
    variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sign: Option<Sign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    pi: [[f64; 2]; 2],
}

impl From<&RegionSpec> for RegionRecord {
    fn from(r: &RegionSpec) -> Self {
        let pi = r.pi().to_rows();
        let variant = r.variant_name().to_string();
        match *r {
            RegionSpec::DiskInterior { lambda_c, r } | RegionSpec::DiskExterior { lambda_c, r } => RegionRecord {
                variant,
                lambda_c: Some(lambda_c),
                r: Some(r),
                sign: None,
                c: None,
                pi,
            },
            RegionSpec::HalfPlane { sign, c } => RegionRecord {
                variant,
                lambda_c: None,
                r: None,
                sign: Some(sign),
                c: Some(c),
                pi,
            },
        }
    }
}

impl TryFrom<RegionRecord> for RegionSpec {
    type Error = Error;

    fn try_from(rec: RegionRecord) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Parse(format!("{} region missing {name}", rec.variant)))
        };
        let region = match rec.variant.as_str() {
            "disk_in" => RegionSpec::disk_interior(need(rec.lambda_c, "lambda_c")?, need(rec.r, "r")?)?,
            "disk_out" => RegionSpec::disk_exterior(need(rec.lambda_c, "lambda_c")?, need(rec.r, "r")?)?,
            "halfplane" => RegionSpec::HalfPlane {
                sign: rec
                    .sign
                    .ok_or_else(|| Error::Parse("halfplane region missing sign".into()))?,
                c: need(rec.c, "c")?,
            },
            other => return Err(Error::Parse(format!("unknown region variant {other:?}"))),
        };
        let expect = region.pi().to_rows();
        let scale = 1.0 + expect.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let off = expect
            .iter()
            .flatten()
            .zip(rec.pi.iter().flatten())
            .any(|(a, b)| (a - b).abs() > 1e-9 * scale);
        if off || rec.pi[0][1] != rec.pi[1][0] {
            return Err(Error::Parse(format!(
                "pi {:?} does not match {} parameters",
                rec.pi, rec.variant
            )));
        }
        Ok(region)
    }
}

pub fn regions_to_json(regions: &[RegionSpec]) -> String {
    let recs: Vec<RegionRecord> = regions.iter().map(RegionRecord::from).collect();
    serde_json::to_string_pretty(&recs).expect("region serialization cannot fail")
}

pub fn regions_from_json(text: &str) -> Result<Vec<RegionSpec>> {
    let recs: Vec<RegionRecord> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    recs.into_iter().map(RegionSpec::try_from).collect()
}

pub fn save_regions(approx: &SgApproximation, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let regions: Vec<RegionSpec> = approx.regions().copied().collect();
    std::fs::write(path, regions_to_json(&regions)).map_err(|e| Error::io(path, e))
}

pub fn load_regions(path: impl AsRef<Path>, mode: SgMode) -> Result<SgApproximation> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SgApproximation::from_regions(regions_from_json(&text)?, mode)
}

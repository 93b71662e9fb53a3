//! Grid-based distance between planar sets.

use serde::Serialize;

use super::raster::{rasterize, Raster, Window};
use super::{PlaneSet, RegionSpec};
use crate::error::{Error, Result};
use crate::model::Cplx;
use crate::par;

/// Budget of point pairs examined by the local refinement.
const REFINE_PAIRS: usize = 20_000_000;

/// A set handed to [`set_distance`].
#[derive(Clone, Copy)]
pub enum SetRef<'a> {
    Set(&'a dyn PlaneSet),
    Points(&'a [Cplx]),
}

/// Distance estimate with the grid spacing it was computed at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distance {
    pub value: f64,
    pub spacing: f64,
}

impl SetRef<'_> {
    fn raster(&self, window: &Window, resolution: usize) -> Result<Raster> {
        match self {
            SetRef::Set(s) => rasterize(*s, window, resolution),
            SetRef::Points(p) => Raster::from_points(p, window, resolution),
        }
    }
}

/// Exact squared Euclidean distance transform of a binary grid (distance
/// from every cell center to the nearest marked cell center), by two passes
/// of the lower-envelope algorithm of Felzenszwalb and Huttenlocher.
pub(crate) fn edt(marked: &[bool], nx: usize, ny: usize, dx: f64, dy: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = marked
        .iter()
        .map(|&m| if m { 0.0 } else { f64::INFINITY })
        .collect();
    // along x, one row at a time
    par::for_each_chunk(&mut grid, nx, |_, row| {
        let out = envelope_1d(row, dx);
        row.copy_from_slice(&out);
    });
    // along y: transpose, transform rows, transpose back
    let mut t = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            t[i * ny + j] = grid[j * nx + i];
        }
    }
    par::for_each_chunk(&mut t, ny, |_, col| {
        let out = envelope_1d(col, dy);
        col.copy_from_slice(&out);
    });
    for j in 0..ny {
        for i in 0..nx {
            grid[j * nx + i] = t[i * ny + j];
        }
    }
    grid
}

/// `d(q) = min_p (f(p) + (h (q - p))^2)` in linear time.
fn envelope_1d(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let finite: Vec<usize> = (0..n).filter(|&q| f[q].is_finite()).collect();
    if finite.is_empty() {
        return vec![f64::INFINITY; n];
    }
    let pos = |q: usize| q as f64 * h;
    let mut v: Vec<usize> = Vec::with_capacity(finite.len());
    let mut z: Vec<f64> = Vec::with_capacity(finite.len() + 1);
    let inter = |p: usize, q: usize| {
        ((f[q] + pos(q) * pos(q)) - (f[p] + pos(p) * pos(p))) / (2.0 * (pos(q) - pos(p)))
    };
    for &q in &finite {
        while let Some(&p) = v.last() {
            let s = inter(p, q);
            if s <= *z.last().unwrap() {
                v.pop();
                z.pop();
            } else {
                break;
            }
        }
        let s = match v.last() {
            Some(&p) => inter(p, q),
            None => f64::NEG_INFINITY,
        };
        v.push(q);
        z.push(s);
    }
    z.push(f64::INFINITY);
    let mut out = vec![0.0; n];
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < pos(q) {
            k += 1;
        }
        let d = pos(q) - pos(v[k]);
        *o = d * d + f[v[k]];
    }
    out
}

/// Cells within one step (8-neighbourhood) of a change in membership.
fn band(r: &Raster) -> Vec<bool> {
    let n = r.resolution;
    let mut out = vec![false; n * n];
    for j in 0..n {
        for i in 0..n {
            let here = r.get(i, j);
            let mut mixed = false;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= n as i64 || jj >= n as i64 {
                        continue;
                    }
                    if r.get(ii as usize, jj as usize) != here {
                        mixed = true;
                    }
                }
            }
            out[j * n + i] = mixed || (here && (i == 0 || j == 0 || i == n - 1 || j == n - 1));
        }
    }
    out
}

/// Points of `set` near its boundary inside the candidate cells, sampled on a
/// `k x k` sub-grid per cell (or the actual points for a cloud).
fn refine_points(set: &SetRef, r: &Raster, candidates: &[usize], k: usize) -> Vec<Cplx> {
    let n = r.resolution;
    let (dx, dy) = (r.dx(), r.dy());
    match set {
        SetRef::Points(points) => {
            let keep: std::collections::HashSet<usize> = candidates.iter().copied().collect();
            points
                .iter()
                .filter(|p| {
                    Raster::locate(&r.window, n, **p)
                        .map(|(i, j)| keep.contains(&(j * n + i)))
                        .unwrap_or(false)
                })
                .copied()
                .collect()
        }
        SetRef::Set(s) => {
            let per_cell = par::map(candidates, |&cell| {
                let (i, j) = (cell % n, cell / n);
                let corner = r.center(i, j) - Cplx::new(0.5 * dx, 0.5 * dy);
                let mut pts = Vec::new();
                for b in 0..k {
                    for a in 0..k {
                        let p = corner + Cplx::new((a as f64 + 0.5) * dx / k as f64, (b as f64 + 0.5) * dy / k as f64);
                        if s.contains(p) {
                            pts.push(p);
                        }
                    }
                }
                pts
            });
            per_cell.into_iter().flatten().collect()
        }
    }
}

fn min_pair_distance(a: &[Cplx], b: &[Cplx]) -> f64 {
    par::map(a, |p| b.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// `inf |a - b|` over `a in A`, `b in B`, restricted to `window`.
///
/// Both sets are rasterized at cell centers; a distance transform gives a
/// first estimate, which is then refined by sub-sampling the cells near the
/// closest approach. The returned spacing is the larger cell side.
pub fn set_distance(a: SetRef, b: SetRef, window: &Window, resolution: usize) -> Result<Distance> {
    let ra = a.raster(window, resolution)?;
    let rb = b.raster(window, resolution)?;
    if ra.is_empty() {
        return Err(Error::EmptyInWindow("first set"));
    }
    if rb.is_empty() {
        return Err(Error::EmptyInWindow("second set"));
    }
    let spacing = ra.spacing();
    if ra.cells().iter().zip(rb.cells()).any(|(&x, &y)| x && y) {
        return Ok(Distance { value: 0.0, spacing });
    }
    let n = resolution;
    let (dx, dy) = (ra.dx(), ra.dy());
    let from_a = edt(ra.cells(), n, n, dx, dy);
    let from_b = edt(rb.cells(), n, n, dx, dy);
    let coarse = (0..n * n)
        .filter(|&k| rb.cells()[k])
        .map(|k| from_a[k])
        .fold(f64::INFINITY, f64::min)
        .sqrt();

    let reach = coarse + 2.0 * (dx * dx + dy * dy).sqrt();
    let pick = |r: &Raster, set: &SetRef, other_dist: &[f64]| -> Vec<usize> {
        let region_band = match set {
            SetRef::Set(_) => Some(band(r)),
            SetRef::Points(_) => None,
        };
        (0..n * n)
            .filter(|&k| match &region_band {
                Some(bd) => bd[k],
                None => r.cells()[k],
            })
            .filter(|&k| other_dist[k].sqrt() <= reach + 2.0 * (dx * dx + dy * dy).sqrt())
            .collect()
    };
    let ca = pick(&ra, &a, &from_b);
    let cb = pick(&rb, &b, &from_a);
    let mut k = 8;
    while k > 1 && (ca.len() * k * k).saturating_mul(cb.len() * k * k) > REFINE_PAIRS {
        k /= 2;
    }
    let pa = refine_points(&a, &ra, &ca, k);
    let pb = refine_points(&b, &rb, &cb, k);
    let value = if pa.is_empty() || pb.is_empty() || pa.len().saturating_mul(pb.len()) > 4 * REFINE_PAIRS {
        coarse
    } else {
        min_pair_distance(&pa, &pb)
    };
    Ok(Distance { value, spacing })
}

/// Gap between two disk interiors, `max(0, |c1 - c2| - r1 - r2)`; `None` for
/// other region variants.
pub fn disk_disk_distance(a: &RegionSpec, b: &RegionSpec) -> Option<f64> {
    match (*a, *b) {
        (RegionSpec::DiskInterior { lambda_c: c1, r: r1 }, RegionSpec::DiskInterior { lambda_c: c2, r: r2 }) => {
            Some(((c1 - c2).abs() - r1 - r2).max(0.0))
        }
        _ => None,
    }
}

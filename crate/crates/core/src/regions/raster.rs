//! Cell-center rasterization and marching-squares boundary extraction.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::PlaneSet;
use crate::error::{Error, Result};
use crate::model::Cplx;
use crate::par;

pub const MIN_RESOLUTION: usize = 16;

pub type Polyline = Vec<Cplx>;

/// Axis-aligned box `[re_min, re_max] x [im_min, im_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let ok = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite())
            && re_max > re_min
            && im_max > im_min;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "empty window [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Window {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    /// Square window `[-half, half]^2` around `center` on the real axis.
    pub fn square(center: f64, half: f64) -> Result<Self> {
        Window::new(center - half, center + half, -half, half)
    }

    /// Parses `re_min:re_max:im_min:im_max`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("window {text:?}: {e}")))?;
        match parts.as_slice() {
            [a, b, c, d] => Window::new(*a, *b, *c, *d),
            _ => Err(Error::Parse(format!(
                "window {text:?} must have the form re_min:re_max:im_min:im_max"
            ))),
        }
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn contains(&self, z: Cplx) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    /// Smallest window holding both.
    pub fn union(&self, other: &Window) -> Window {
        Window {
            re_min: self.re_min.min(other.re_min),
            re_max: self.re_max.max(other.re_max),
            im_min: self.im_min.min(other.im_min),
            im_max: self.im_max.max(other.im_max),
        }
    }
}

/// Boolean membership grid sampled at cell centers, plus the margin field
/// used to place boundary curves. Row `j` runs along `Re`, rows stack upward
/// in `Im`.
#[derive(Debug, Clone)]
pub struct Raster {
    pub window: Window,
    pub resolution: usize,
    cells: Vec<bool>,
    margins: Vec<f64>,
}

impl Raster {
    fn check(window: &Window, resolution: usize) -> Result<()> {
        if resolution < MIN_RESOLUTION {
            return Err(Error::InvalidArgument(format!(
                "resolution {resolution} below the minimum {MIN_RESOLUTION}"
            )));
        }
        Window::new(window.re_min, window.re_max, window.im_min, window.im_max).map(|_| ())
    }

    /// Raster with every cell that contains a point of `points` marked.
    pub fn from_points(points: &[Cplx], window: &Window, resolution: usize) -> Result<Self> {
        Raster::check(window, resolution)?;
        let n = resolution;
        let mut cells = vec![false; n * n];
        for p in points {
            if let Some((i, j)) = Raster::locate(window, n, *p) {
                cells[j * n + i] = true;
            }
        }
        let margins = cells.iter().map(|&c| if c { 1.0 } else { -1.0 }).collect();
        Ok(Raster {
            window: *window,
            resolution,
            cells,
            margins,
        })
    }

    pub(crate) fn locate(window: &Window, n: usize, p: Cplx) -> Option<(usize, usize)> {
        if !window.contains(p) {
            return None;
        }
        let i = (((p.re - window.re_min) / window.width()) * n as f64) as usize;
        let j = (((p.im - window.im_min) / window.height()) * n as f64) as usize;
        Some((i.min(n - 1), j.min(n - 1)))
    }

    pub fn dx(&self) -> f64 {
        self.window.width() / self.resolution as f64
    }

    pub fn dy(&self) -> f64 {
        self.window.height() / self.resolution as f64
    }

    /// Larger of the two cell sides.
    pub fn spacing(&self) -> f64 {
        self.dx().max(self.dy())
    }

    pub fn center(&self, i: usize, j: usize) -> Cplx {
        Cplx::new(
            self.window.re_min + (i as f64 + 0.5) * self.dx(),
            self.window.im_min + (j as f64 + 0.5) * self.dy(),
        )
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.resolution + i]
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn filled_fraction(&self) -> f64 {
        self.count() as f64 / self.cells.len() as f64
    }

    /// Area of the marked cells.
    pub fn area(&self) -> f64 {
        self.count() as f64 * self.dx() * self.dy()
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = (Cplx, bool)> + '_ {
        let n = self.resolution;
        (0..n * n).map(move |k| (self.center(k % n, k / n), self.cells[k]))
    }

    fn same_grid(&self, other: &Raster) -> Result<()> {
        if self.resolution != other.resolution || self.window != other.window {
            return Err(Error::InvalidArgument("rasters are on different grids".into()));
        }
        Ok(())
    }

    /// Cells marked in `other` but not in `self`.
    pub fn containment_violations(&self, other: &Raster) -> Result<usize> {
        self.same_grid(other)?;
        Ok(self
            .cells
            .iter()
            .zip(&other.cells)
            .filter(|&(&a, &b)| b && !a)
            .count())
    }

    /// Cells where exactly one of the two rasters is marked.
    pub fn symmetric_difference(&self, other: &Raster) -> Result<usize> {
        self.same_grid(other)?;
        Ok(self.cells.iter().zip(&other.cells).filter(|&(&a, &b)| a != b).count())
    }

    /// Cell-wise conjunction.
    pub fn and(&self, other: &Raster) -> Result<Raster> {
        self.same_grid(other)?;
        let cells: Vec<bool> = self.cells.iter().zip(&other.cells).map(|(&a, &b)| a && b).collect();
        let margins = self.margins.iter().zip(&other.margins).map(|(a, b)| a.min(*b)).collect();
        Ok(Raster {
            cells,
            margins,
            ..self.clone()
        })
    }

    /// Cell-wise disjunction.
    pub fn or(&self, other: &Raster) -> Result<Raster> {
        self.same_grid(other)?;
        let cells: Vec<bool> = self.cells.iter().zip(&other.cells).map(|(&a, &b)| a || b).collect();
        let margins = self.margins.iter().zip(&other.margins).map(|(a, b)| a.max(*b)).collect();
        Ok(Raster {
            cells,
            margins,
            ..self.clone()
        })
    }

    /// Marks every cell whose center lies within `radius` of a marked center.
    pub fn dilated(&self, radius: f64) -> Raster {
        let n = self.resolution;
        let d2 = super::distance::edt(&self.cells, n, n, self.dx(), self.dy());
        let lim = radius * radius * (1.0 + 1e-12);
        let cells: Vec<bool> = d2.iter().map(|&d| d <= lim).collect();
        let margins = cells.iter().map(|&c| if c { 1.0 } else { -1.0 }).collect();
        Raster {
            cells,
            margins,
            ..self.clone()
        }
    }

    /// Number of cells that differ from their mirror across the real axis. Zero for conjugate-symmetric sets on a window
    /// symmetric about the axis.
    pub fn asymmetry(&self) -> usize {
        let n = self.resolution;
        (0..n)
            .flat_map(|j| (0..n).map(move |i| (i, j)))
            .filter(|&(i, j)| self.get(i, j) != self.get(i, n - 1 - j))
            .count()
    }

    /// Boundary curves of the marked set.
    pub fn boundary(&self) -> Vec<Polyline> {
        let n = self.resolution;
        let field: Vec<f64> = self
            .cells
            .iter()
            .zip(&self.margins)
            .map(|(&inside, &m)| {
                // keep the sign consistent with the membership decision, which
                // includes a small slack the margin does not know about
                if inside {
                    m.max(0.0)
                } else {
                    m.min(-1e-300)
                }
            })
            .collect();
        let x0 = self.window.re_min + 0.5 * self.dx();
        let y0 = self.window.im_min + 0.5 * self.dy();
        marching_squares(&field, n, n, x0, y0, self.dx(), self.dy())
    }

    /// `re,im,member` rows at cell centers, preceded by `# key: value` lines.
    pub fn to_csv(&self, header: &[(&str, String)]) -> String {
        let mut out = String::new();
        for (k, v) in header {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out.push_str("re,im,member\n");
        for (z, inside) in self.iter_cells() {
            let _ = writeln!(out, "{},{},{}", z.re, z.im, inside as u8);
        }
        out
    }
}

/// Samples `set` at the center of every cell of a `resolution`^2 grid.
/// Rows are evaluated in parallel.
pub fn rasterize<S: PlaneSet + ?Sized>(set: &S, window: &Window, resolution: usize) -> Result<Raster> {
    Raster::check(window, resolution)?;
    let n = resolution;
    let dx = window.width() / n as f64;
    let dy = window.height() / n as f64;
    let mut data = vec![(false, 0.0f64); n * n];
    par::for_each_chunk(&mut data, n, |j, row| {
        let im = window.im_min + (j as f64 + 0.5) * dy;
        for (i, cell) in row.iter_mut().enumerate() {
            let z = Cplx::new(window.re_min + (i as f64 + 0.5) * dx, im);
            *cell = (set.contains(z), set.margin(z));
        }
    });
    let (cells, margins) = data.into_iter().unzip();
    Ok(Raster {
        window: *window,
        resolution,
        cells,
        margins,
    })
}

/// Zero-level curves of a field sampled on an `nx` x `ny` lattice with
/// origin `(x0, y0)` and steps `(dx, dy)`; `values[j*nx + i]` belongs to
/// `(x0 + i dx, y0 + j dy)` and counts as inside when `>= 0`. Crossing points
/// are placed by linear interpolation. Curves are closed (first point
/// repeated) unless they leave the lattice.
pub fn marching_squares(
    values: &[f64],
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
) -> Vec<Polyline> {
    assert_eq!(values.len(), nx * ny, "field size does not match lattice");
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    let v = |i: usize, j: usize| values[j * nx + i];
    let pos = |i: usize, j: usize| Cplx::new(x0 + i as f64 * dx, y0 + j as f64 * dy);
    // horizontal edge (i,j)-(i+1,j) -> 2k, vertical edge (i,j)-(i,j+1) -> 2k+1
    let h_key = |i: usize, j: usize| 2 * (j * nx + i);
    let v_key = |i: usize, j: usize| 2 * (j * nx + i) + 1;
    let crossing = |key: usize| -> Cplx {
        let k = key / 2;
        let (i, j) = (k % nx, k / nx);
        let (i2, j2) = if key % 2 == 0 { (i + 1, j) } else { (i, j + 1) };
        let (a, b) = (v(i, j), v(i2, j2));
        let t = if a == b { 0.5 } else { (a / (a - b)).clamp(0.0, 1.0) };
        pos(i, j) + (pos(i2, j2) - pos(i, j)) * t
    };

    let mut segments: Vec<(usize, usize)> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let inside = [
                v(i, j) >= 0.0,
                v(i + 1, j) >= 0.0,
                v(i + 1, j + 1) >= 0.0,
                v(i, j + 1) >= 0.0,
            ];
            let case = inside
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, &b)| acc | ((b as u8) << k));
            let bottom = h_key(i, j);
            let right = v_key(i + 1, j);
            let top = h_key(i, j + 1);
            let left = v_key(i, j);
            let center_inside = (v(i, j) + v(i + 1, j) + v(i + 1, j + 1) + v(i, j + 1)) >= 0.0;
            match case {
                0 | 15 => {}
                1 | 14 => segments.push((left, bottom)),
                2 | 13 => segments.push((bottom, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, top)),
                6 | 9 => segments.push((bottom, top)),
                7 | 8 => segments.push((left, top)),
                5 => {
                    // corners 0 and 2 inside
                    if center_inside {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                10 => {
                    if center_inside {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    } else {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    stitch(&segments).into_iter().map(|chain| chain.into_iter().map(crossing).collect()).collect()
}

/// Joins segments sharing endpoints into chains of edge keys.
fn stitch(segments: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adjacent: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        adjacent.entry(a).or_default().push(s);
        adjacent.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut chains = Vec::new();
    let other = |s: usize, k: usize| {
        let (a, b) = segments[s];
        if a == k {
            b
        } else {
            a
        }
    };
    let walk = |start_seg: usize, start_key: usize, used: &mut Vec<bool>| -> Vec<usize> {
        let mut chain = vec![start_key];
        let mut seg = start_seg;
        let mut key = start_key;
        loop {
            used[seg] = true;
            key = other(seg, key);
            chain.push(key);
            match adjacent[&key].iter().find(|&&s| !used[s]) {
                Some(&next) => seg = next,
                None => break,
            }
        }
        chain
    };
    // open chains first, starting at keys with a single segment, so they are
    // not split in the middle
    let mut keys: Vec<usize> = adjacent.keys().copied().collect();
    keys.sort_unstable();
    for &k in &keys {
        if adjacent[&k].len() == 1 && !used[adjacent[&k][0]] {
            chains.push(walk(adjacent[&k][0], k, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            chains.push(walk(s, segments[s].0, &mut used));
        }
    }
    chains
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::{RegionSpec, SgApproximation, SgMode};

    #[test]
    fn unit_disk_fill_fraction() {
        let disk = RegionSpec::disk_interior(0.0, 1.0).unwrap();
        let w = Window::new(-2.0, 2.0, -2.0, 2.0).unwrap();
        let r = rasterize(&disk, &w, 256).unwrap();
        let expect = std::f64::consts::PI / 16.0;
        assert!((r.filled_fraction() - expect).abs() / expect < 0.02);
    }

    #[test]
    fn disjoint_constraints_give_empty_grid() {
        let approx = SgApproximation::from_regions(
            vec![
                RegionSpec::disk_interior(0.0, 1.0).unwrap(),
                RegionSpec::disk_exterior(0.0, 2.0).unwrap(),
            ],
            SgMode::Soft,
        )
        .unwrap();
        let w = Window::new(-3.0, 3.0, -3.0, 3.0).unwrap();
        assert!(rasterize(&approx, &w, 64).unwrap().is_empty());
    }

    #[test]
    fn resolution_and_window_guards() {
        let disk = RegionSpec::disk_interior(0.0, 1.0).unwrap();
        let w = Window::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        assert!(rasterize(&disk, &w, 8).is_err());
        assert!(Window::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(Window::parse("-1:1:-2:2").is_ok());
        assert!(Window::parse("-1:1").is_err());
    }

    #[test]
    fn conjugate_symmetric_raster() {
        let approx = SgApproximation::from_regions(
            vec![
                RegionSpec::disk_interior(0.2, 1.0).unwrap(),
                RegionSpec::disk_exterior(-1.2, 0.8).unwrap(),
                RegionSpec::left_of(0.9),
            ],
            SgMode::Soft,
        )
        .unwrap();
        let w = Window::new(-1.5, 1.5, -1.5, 1.5).unwrap();
        assert_eq!(rasterize(&approx, &w, 128).unwrap().asymmetry(), 0);
    }

    #[test]
    fn boundary_of_disk_is_one_closed_circle() {
        let disk = RegionSpec::disk_interior(0.5, 0.5).unwrap();
        let w = Window::new(-0.25, 1.25, -0.75, 0.75).unwrap();
        let r = rasterize(&disk, &w, 128).unwrap();
        let curves = r.boundary();
        assert_eq!(curves.len(), 1);
        let c = &curves[0];
        assert!((c[0] - c[c.len() - 1]).norm() < 1e-12, "curve not closed");
        for p in c {
            assert!(((p - Cplx::new(0.5, 0.0)).norm() - 0.5).abs() < 1e-3);
        }
    }

    #[test]
    fn boundary_of_annulus_has_two_curves() {
        let approx = SgApproximation::from_regions(
            vec![
                RegionSpec::disk_interior(0.0, 1.0).unwrap(),
                RegionSpec::disk_exterior(0.0, 0.5).unwrap(),
            ],
            SgMode::Soft,
        )
        .unwrap();
        let w = Window::new(-1.5, 1.5, -1.5, 1.5).unwrap();
        assert_eq!(rasterize(&approx, &w, 96).unwrap().boundary().len(), 2);
    }

    #[test]
    fn points_mark_cells() {
        let w = Window::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let r = Raster::from_points(&[Cplx::new(0.01, 0.01), Cplx::new(5.0, 0.0), Cplx::new(1.0, 1.0)], &w, 16)
            .unwrap();
        assert_eq!(r.count(), 2);
        assert!(r.get(0, 0) && r.get(15, 15));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let disk = RegionSpec::disk_interior(0.0, 1.0).unwrap();
        let w = Window::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let csv = rasterize(&disk, &w, 16)
            .unwrap()
            .to_csv(&[("config_hash", "abc".into())]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("# config_hash: abc"));
        assert_eq!(lines.next(), Some("re,im,member"));
        assert_eq!(lines.count(), 256);
    }
}

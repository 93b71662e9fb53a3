//! Exact scaled graphs of normal stable LTI systems: the Nyquist spectrum
//! pushed through the Beltrami-Klein map, its Euclidean convex hull, and the
//! preimage of that hull.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{Cplx, StateSpace};
use crate::par;
use crate::regions::{PlaneSet, Polyline};

/// Default number of logarithmic frequency samples.
pub const FREQ_POINTS: usize = 1024;
/// Relative tolerance of the normality test.
pub const NORMAL_TOL: f64 = 1e-8;
/// Hull vertices this close to `1` map to infinity.
pub const POLE_EPS: f64 = 1e-9;
/// Slack on the hull membership test, in the disk.
pub const HULL_EPS: f64 = 1e-9;

/// `f(z) = (conj(z) - j)(z - j) / (1 + |z|^2)`, which maps the plane onto the
/// closed unit disk and identifies `z` with `conj(z)`.
pub fn bk_map(z: Cplx) -> Cplx {
    let n2 = z.norm_sqr();
    Cplx::new(n2 - 1.0, -2.0 * z.re) / (1.0 + n2)
}

/// Both preimages `(Im w +- j sqrt(1 - |w|^2)) / (Re w - 1)` of a point of
/// the closed disk. They are complex conjugates.
pub fn bk_inverse(w: Cplx) -> Result<(Cplx, Cplx)> {
    if (w - Cplx::new(1.0, 0.0)).norm() < POLE_EPS {
        return Err(Error::UnboundedGraph);
    }
    let n2 = w.norm_sqr();
    if n2 > 1.0 + 1e-9 {
        return Err(Error::InvalidArgument(format!("{w} lies outside the unit disk")));
    }
    let s = (1.0 - n2).max(0.0).sqrt();
    let den = w.re - 1.0;
    Ok((Cplx::new(w.im, s) / den, Cplx::new(w.im, -s) / den))
}

/// Eigenvalues of `H(jw)` over a frequency grid.
#[derive(Debug, Clone)]
pub struct SpectrumCloud {
    pub points: Vec<Cplx>,
    pub freq_grid: Vec<f64>,
}

/// 1024 log-spaced frequencies from `1e-3 |lambda|_min` to `1e3 |lambda|_max`
/// over the eigenvalues of `A`.
pub fn default_freq_grid(sys: &StateSpace) -> Vec<f64> {
    let mags: Vec<f64> = sys.eigenvalues().iter().map(|l| l.norm()).filter(|m| *m > 0.0).collect();
    let (lo, hi) = if mags.is_empty() {
        (1e-3, 1e3)
    } else {
        let lo = mags.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = mags.iter().copied().fold(0.0, f64::max);
        (1e-3 * lo, 1e3 * hi)
    };
    log_grid(lo, hi, FREQ_POINTS)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect(),
    }
}

fn eigenvalues(m: &DMatrix<Cplx>) -> Vec<Cplx> {
    match m.nrows() {
        0 => Vec::new(),
        1 => vec![m[(0, 0)]],
        _ => m
            .clone()
            .schur()
            .eigenvalues()
            .map(|v| v.iter().copied().collect())
            .unwrap_or_else(|| m.diagonal().iter().copied().collect()),
    }
}

fn check_grid(freq_grid: &[f64]) -> Result<()> {
    if freq_grid.is_empty() || freq_grid.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidArgument("frequency grid must be nonempty and positive".into()));
    }
    Ok(())
}

/// Eigenvalues of `H(jw)` and `H(-jw)` for every `w` in the grid, together
/// with the limits `w = 0` and `w -> infinity`.
pub fn spectrum(sys: &StateSpace, freq_grid: &[f64]) -> Result<SpectrumCloud> {
    check_grid(freq_grid)?;
    if sys.states() > 0 {
        sys.require_hurwitz()?;
    }
    let per_freq = par::map(freq_grid, |&w| eigenvalues(&sys.transfer(Cplx::new(0.0, w))));
    let mut points = Vec::with_capacity(2 * freq_grid.len() * sys.ports() + 2 * sys.ports());
    for lam in per_freq.into_iter().flatten() {
        points.push(lam);
        points.push(lam.conj());
    }
    points.extend(eigenvalues(&sys.transfer(Cplx::new(0.0, 0.0))));
    points.extend(eigenvalues(&sys.d.map(|v| Cplx::new(v, 0.0))));
    Ok(SpectrumCloud {
        points,
        freq_grid: freq_grid.to_vec(),
    })
}

/// Largest `||H*H - HH*||_F / (1 + ||H||_F)` over the grid and where it occurs.
pub fn normality_residual(sys: &StateSpace, freq_grid: &[f64]) -> (f64, f64) {
    if sys.ports() == 1 {
        return (0.0, 0.0);
    }
    par::map(freq_grid, |&w| {
        let h = sys.transfer(Cplx::new(0.0, w));
        let ha = h.adjoint();
        let comm = &ha * &h - &h * &ha;
        (comm.norm() / (1.0 + h.norm()), w)
    })
    .into_iter()
    .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a })
}

/// Whether `H(jw)` commutes with its adjoint at every grid frequency, within
/// `tol (1 + ||H||_F)`.
pub fn is_normal(sys: &StateSpace, freq_grid: &[f64], tol: f64) -> bool {
    normality_residual(sys, freq_grid).0 <= tol
}

/// Convex hull by Andrew's monotone chain, counter-clockwise, collinear
/// points dropped.
pub fn convex_hull(points: &[Cplx]) -> Vec<Cplx> {
    let mut pts: Vec<Cplx> = points.iter().copied().filter(|p| p.re.is_finite() && p.im.is_finite()).collect();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup_by(|a, b| (*a - *b).norm() <= 1e-15);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Cplx, a: Cplx, b: Cplx| (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re);
    let mut lower: Vec<Cplx> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 1e-12 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Cplx> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 1e-12 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Exact scaled graph of a normal LTI system.
#[derive(Debug, Clone)]
pub struct ExactSg {
    /// Hull vertices in the disk, counter-clockwise. One vertex for a static
    /// gain, two when the hull degenerates to a chord.
    pub bk_hull: Vec<Cplx>,
    /// Preimage of the hull boundary: the branch in the lower half-plane and
    /// its mirror image.
    pub boundary: Vec<Polyline>,
}

impl ExactSg {
    pub fn singleton(&self) -> Option<Cplx> {
        match self.bk_hull.as_slice() {
            [w] => bk_inverse(*w).ok().map(|p| p.0),
            _ => None,
        }
    }

    /// Signed distance (in the disk) from `w` to the hull boundary, positive
    /// inside. Degenerate hulls have no inside, so the value is minus the
    /// distance to the segment or point.
    fn hull_margin(&self, w: Cplx) -> f64 {
        let h = &self.bk_hull;
        let seg_dist = |a: Cplx, b: Cplx| {
            let ab = b - a;
            let t = if ab.norm_sqr() == 0.0 {
                0.0
            } else {
                (((w - a).re * ab.re + (w - a).im * ab.im) / ab.norm_sqr()).clamp(0.0, 1.0)
            };
            (w - (a + ab * t)).norm()
        };
        match h.len() {
            0 => f64::NEG_INFINITY,
            1 => -(w - h[0]).norm(),
            2 => -seg_dist(h[0], h[1]),
            n => {
                let mut inside = true;
                let mut dist = f64::INFINITY;
                for k in 0..n {
                    let (a, b) = (h[k], h[(k + 1) % n]);
                    let ab = b - a;
                    let cross = ab.re * (w - a).im - ab.im * (w - a).re;
                    if cross < 0.0 {
                        inside = false;
                    }
                    dist = dist.min(seg_dist(a, b));
                }
                if inside {
                    dist
                } else {
                    -dist
                }
            }
        }
    }

    /// Dense samples of the boundary, both branches.
    pub fn boundary_samples(&self) -> Vec<Cplx> {
        self.boundary.iter().flatten().copied().collect()
    }
}

impl PlaneSet for ExactSg {
    fn contains(&self, z: Cplx) -> bool {
        self.hull_margin(bk_map(z)) >= -HULL_EPS
    }

    fn margin(&self, z: Cplx) -> f64 {
        self.hull_margin(bk_map(z))
    }
}

/// Boundary vertices sampled along the hull edges, about `total` in all.
fn sample_hull(hull: &[Cplx], total: usize) -> Vec<Cplx> {
    let n = hull.len();
    if n == 1 {
        return hull.to_vec();
    }
    let edges: Vec<(Cplx, Cplx)> = if n == 2 {
        vec![(hull[0], hull[1]), (hull[1], hull[0])]
    } else {
        (0..n).map(|k| (hull[k], hull[(k + 1) % n])).collect()
    };
    let perimeter: f64 = edges.iter().map(|(a, b)| (b - a).norm()).sum();
    let mut out = Vec::new();
    for (a, b) in edges {
        let k = ((total as f64 * (b - a).norm() / perimeter).ceil() as usize).max(2);
        // cosine spacing: the inverse map has a square-root singularity where
        // the hull touches the unit circle
        for i in 0..k {
            let t = 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / k as f64).cos());
            out.push(a + (b - a) * t);
        }
    }
    out.push(out[0]);
    out
}

/// Scaled graph of a normal, stable LTI system. Non-normal systems are
/// refused.
pub fn exact_sg(sys: &StateSpace, freq_grid: &[f64]) -> Result<ExactSg> {
    check_grid(freq_grid)?;
    let (residual, omega) = normality_residual(sys, freq_grid);
    if residual > NORMAL_TOL {
        return Err(Error::NotNormal {
            residual,
            tol: NORMAL_TOL,
            omega,
        });
    }
    let cloud = spectrum(sys, freq_grid)?;
    let images: Vec<Cplx> = cloud.points.iter().map(|&z| bk_map(z)).collect();
    let hull = convex_hull(&images);
    if hull.iter().any(|w| (w - Cplx::new(1.0, 0.0)).norm() < POLE_EPS) {
        return Err(Error::UnboundedGraph);
    }
    let samples = sample_hull(&hull, 4096);
    let lower: Polyline = samples
        .iter()
        .map(|&w| bk_inverse(w).map(|p| p.0))
        .collect::<Result<_>>()?;
    let upper: Polyline = lower.iter().map(|z| z.conj()).collect();
    let boundary = if hull.len() == 1 { vec![lower] } else { vec![lower, upper] };
    Ok(ExactSg {
        bk_hull: hull,
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Cplx {
        Cplx::new(re, im)
    }

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    fn first_order(a: f64) -> StateSpace {
        StateSpace::new(m(&[&[-a]]), m(&[&[1.0]]), m(&[&[1.0]]), m(&[&[0.0]])).unwrap()
    }

    #[test]
    fn bk_map_examples() {
        assert!(bk_map(c(0.0, 1.0)).norm() < 1e-15);
        assert!((bk_map(c(0.0, 0.0)) - c(-1.0, 0.0)).norm() < 1e-15);
        // (1 - j)^2 / 2 = -j
        assert!((bk_map(c(1.0, 0.0)) - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn bk_inverse_examples() {
        let (a, b) = bk_inverse(c(-1.0, 0.0)).unwrap();
        assert!(a.norm() < 1e-15 && b.norm() < 1e-15);
        let (a, b) = bk_inverse(c(0.0, 0.0)).unwrap();
        assert!(((a - c(0.0, -1.0)).norm() < 1e-15 && (b - c(0.0, 1.0)).norm() < 1e-15));
        let (a, b) = bk_inverse(c(0.0, -1.0)).unwrap();
        assert!((a - c(1.0, 0.0)).norm() < 1e-15 && (b - c(1.0, 0.0)).norm() < 1e-15);
        assert!(matches!(bk_inverse(c(1.0, 0.0)), Err(Error::UnboundedGraph)));
    }

    #[test]
    fn spectrum_of_first_order() {
        let s = spectrum(&first_order(1.0), &[1.0]).unwrap();
        assert!(s.points.iter().any(|p| (p - c(0.5, -0.5)).norm() < 1e-14));
        assert!(s.points.iter().any(|p| (p - c(0.5, 0.5)).norm() < 1e-14));
        assert!(s.points.iter().any(|p| (p - c(1.0, 0.0)).norm() < 1e-14));
        assert!(s.points.iter().any(|p| p.norm() < 1e-14));
    }

    #[test]
    fn spectrum_dc_of_third_order() {
        let sys = crate::model::realize_tf_denominator(&[1.0, 5.0, 2.0, 1.0]).unwrap();
        let s = spectrum(&sys, &[1.0]).unwrap();
        // the w = 0 point is pushed right after the grid points
        assert!((s.points[2] - c(1.0, 0.0)).norm() < 1e-12);
    }

    fn diag_system() -> StateSpace {
        StateSpace::new(
            m(&[&[-1.0, 0.0], &[0.0, -2.0]]),
            m(&[&[1.0, 0.0], &[0.0, 1.0]]),
            m(&[&[1.0, 0.0], &[0.0, 2.0]]),
            m(&[&[0.0, 0.0], &[0.0, 0.0]]),
        )
        .unwrap()
    }

    #[test]
    fn normality() {
        let grid = log_grid(1e-2, 1e2, 64);
        assert!(is_normal(&first_order(3.0), &grid, NORMAL_TOL));
        assert!(is_normal(&diag_system(), &grid, NORMAL_TOL));
        // [[1/(s+1), 1/(s+2)], [0, 1/(s+1)]]
        let tri = StateSpace::new(
            m(&[&[-1.0, 0.0, 0.0], &[0.0, -2.0, 0.0], &[0.0, 0.0, -1.0]]),
            m(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]]),
            m(&[&[1.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]),
            m(&[&[0.0, 0.0], &[0.0, 0.0]]),
        )
        .unwrap();
        let h = tri.transfer(c(0.0, 1.0));
        assert!((h[(0, 1)] - Cplx::new(1.0, 0.0) / c(2.0, 1.0)).norm() < 1e-14);
        assert!(!is_normal(&tri, &grid, NORMAL_TOL));
        assert!(matches!(exact_sg(&tri, &grid), Err(Error::NotNormal { .. })));
    }

    #[test]
    fn first_order_graph_is_the_circle() {
        let sys = first_order(1.0);
        let sg = exact_sg(&sys, &default_freq_grid(&sys)).unwrap();
        assert_eq!(sg.bk_hull.len(), 2, "hull should be a chord: {:?}", sg.bk_hull);
        for z in sg.boundary_samples() {
            assert!(((z - c(0.5, 0.0)).norm() - 0.5).abs() < 1e-3, "{z}");
        }
        // every circle point within 1e-3 of the boundary samples (Hausdorff)
        let samples = sg.boundary_samples();
        for k in 0..512 {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 512.0;
            let p = c(0.5 + 0.5 * t.cos(), 0.5 * t.sin());
            let d = samples.iter().map(|q| (q - p).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-3, "{p} is {d} away");
        }
        assert!(sg.contains(c(0.5, 0.5)));
        assert!(!sg.contains(c(0.5, 0.0)));
    }

    #[test]
    fn static_gain_is_a_point() {
        let sys = StateSpace::static_gain(m(&[&[2.0]])).unwrap();
        let sg = exact_sg(&sys, &[1.0, 10.0]).unwrap();
        assert!((sg.singleton().unwrap() - c(2.0, 0.0)).norm() < 1e-12);
        assert!(sg.contains(c(2.0, 0.0)));
        assert!(!sg.contains(c(2.1, 0.0)));
    }

    #[test]
    fn hull_of_square_drops_interior_and_collinear() {
        let pts = [c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(1.0, 1.0), c(0.0, 1.0), c(0.5, 0.5)];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
    }

    #[test]
    fn refinement_never_shrinks() {
        let sys = crate::model::realize_tf_denominator(&[1.0, 5.0, 2.0, 1.0]).unwrap();
        let coarse = exact_sg(&sys, &log_grid(1e-2, 1e2, 64)).unwrap();
        let fine = exact_sg(&sys, &log_grid(1e-2, 1e2, 256)).unwrap();
        let w = crate::regions::Window::new(-0.5, 1.5, -1.0, 1.0).unwrap();
        let rc = crate::regions::rasterize(&coarse, &w, 128).unwrap();
        let rf = crate::regions::rasterize(&fine, &w, 128).unwrap();
        // the fine grid contains the coarse one (the coarse grid is a subset)
        assert_eq!(rf.containment_violations(&rc).unwrap(), 0);
        assert_eq!(rf.asymmetry(), 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn bk_roundtrip(re in -100.0..100.0f64, im in -100.0..100.0f64) {
            let z = c(re, im);
            prop_assume!(z.norm() <= 100.0 && im.abs() > 1e-3);
            let w = bk_map(z);
            prop_assert!(w.norm() <= 1.0 + 1e-12);
            prop_assert!((bk_map(z.conj()) - w).norm() < 1e-15);
            let (a, b) = bk_inverse(w).unwrap();
            let err = (a - z).norm().min((b - z).norm());
            prop_assert!(err < 1e-10 * (1.0 + z.norm_sqr()), "{} -> {} {}", z, a, b);
            prop_assert!((a.conj() - b).norm() < 1e-12 * (1.0 + z.norm_sqr()));
        }
    }
}

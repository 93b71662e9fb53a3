//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and exits
//! nonzero on any failure not listed in `KNOWN_GAPS`.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgraph_core::exact::{bk_inverse, bk_map, default_freq_grid, exact_sg, log_grid, ExactSg};
use sgraph_core::feedback::{check_feedback, default_tau_grid, FeedbackReport, Verdict};
use sgraph_core::model::{
    linspace, Cplx, PwlMode, PwlSystem, ResetSystem, Sign, StateSpace, SweepConfig, SystemModel,
};
use sgraph_core::presets::{preset, pwl_system};
use sgraph_core::regions::{
    disk_disk_distance, make_pi, rasterize, set_distance, PlaneSet, Raster, RegionSpec, SetRef, SgApproximation,
    Window,
};
use sgraph_core::sim::{functionals, sample_cloud, simulate, InputRanges, InputSignal, SimOptions, SgSample};
use sgraph_core::solve::{gain_bound, solve_exterior, solve_interior, sweep, BarrierBackend, SweepResult};

/// Criteria that cannot be met with the published data; see the README.
const KNOWN_GAPS: [&str; 1] = ["6"];

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
    /// A failure here fails the target even for a known gap.
    must_hold: bool,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome {
            pass,
            detail,
            must_hold: false,
        }
    }
}

fn m(rows: &[&[f64]]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

fn first_order(a: f64) -> SystemModel {
    SystemModel::Lti(StateSpace::new(m(&[&[-a]]), m(&[&[1.0]]), m(&[&[1.0]]), m(&[&[0.0]])).unwrap())
}

struct Sweeps {
    ex1: SweepResult,
    ex2: SweepResult,
    ex3: SweepResult,
}

fn preset_sweep(name: &str, hard: bool) -> SweepResult {
    let p = preset(name).unwrap();
    let mut cfg = p.config.clone();
    cfg.hard = hard;
    sweep(&p.system, &cfg, &BarrierBackend::default()).unwrap()
}

// ---------------------------------------------------------------------------

fn criterion_1() -> Outcome {
    let backend = BarrierBackend::default();
    let start = Instant::now();
    let mut worst_r: f64 = 0.0;
    let mut worst_p: f64 = 0.0;
    let mut ok = true;
    for a in [0.5, 1.0, 2.0] {
        let sys = first_order(a);
        let lam = 1.0 / (2.0 * a);
        // storage x' P x with 2 P x (-a x + u) = s(u, x) forces P = +-1/(2a)
        let expect_p = [lam, -lam];
        for (k, entry) in [
            solve_interior(&sys, lam, false, &backend).unwrap(),
            solve_exterior(&sys, lam, false, &backend).unwrap(),
        ]
        .into_iter()
        .enumerate()
        {
            let (Some(r), Some(cert)) = (entry.radius(), entry.certificate.as_ref()) else {
                ok = false;
                continue;
            };
            if !entry.is_verified() {
                ok = false;
            }
            worst_r = worst_r.max((r - lam).abs());
            worst_p = worst_p.max((cert.p[0][0] - expect_p[k]).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = ok && worst_r <= 1e-5 && worst_p <= 1e-4 && secs < 1.0;
    Outcome::new(
        pass,
        format!("max |r - 1/2a| {worst_r:.2e}, max |P -+ 1/2a| {worst_p:.2e}, {secs:.3} s"),
    )
}

/// `1 / (s^3 + 5 s^2 + 2 s + 1)` by direct evaluation.
fn ex1_nyquist(w: f64) -> Cplx {
    let s = Cplx::new(0.0, w);
    Cplx::new(1.0, 0.0) / (s * s * s + 5.0 * s * s + 2.0 * s + 1.0)
}

fn criterion_2(sw: &Sweeps) -> Outcome {
    let start = Instant::now();
    let approx = &sw.ex1.approximation;
    let SystemModel::Lti(sys) = &preset("ex1").unwrap().system else {
        unreachable!()
    };
    let grid = log_grid(1e-3, 1e3, 1024);
    let mut violations = 0;
    for &w in &grid {
        for z in [ex1_nyquist(w), ex1_nyquist(w).conj()] {
            if !approx.contains(z) {
                violations += 1;
            }
        }
    }
    let exact = exact_sg(sys, &default_freq_grid(sys)).unwrap();
    let window = fit_window(&exact.boundary_samples());
    let re = rasterize(&exact, &window, 512).unwrap();
    let ra = rasterize(approx, &window, 512).unwrap();
    let missing = ra.containment_violations(&re).unwrap();
    let secs = start.elapsed().as_secs_f64() + sw.ex1.seconds;
    Outcome::new(
        violations == 0 && missing == 0 && secs < 120.0,
        format!(
            "{} regions, Nyquist violations {violations}/2048, exact cells outside {missing}/{}, {secs:.2} s",
            approx.len(),
            re.count()
        ),
    )
}

fn fit_window(points: &[Cplx]) -> Window {
    let lo = points.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let im = points.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let half = (0.5 * (hi - lo)).max(im) * 1.2;
    Window::square(0.5 * (lo + hi), half).unwrap()
}

fn seg_dist(z: Cplx, a: Cplx, b: Cplx) -> f64 {
    let ab = b - a;
    let t = if ab.norm_sqr() == 0.0 {
        0.0
    } else {
        (((z - a) * ab.conj()).re / ab.norm_sqr()).clamp(0.0, 1.0)
    };
    (z - (a + ab * t)).norm()
}

/// Cells whose center lies in the exact set or within `h` of its boundary.
fn exact_dilated(exact: &ExactSg, window: &Window, n: usize, h: f64) -> Raster {
    let base = rasterize(exact, window, n).unwrap();
    let (dx, dy) = (window.width() / n as f64, window.height() / n as f64);
    let mut buckets: Vec<Vec<(Cplx, Cplx)>> = vec![Vec::new(); n * n];
    for line in &exact.boundary {
        for s in line.windows(2) {
            let mid = 0.5 * (s[0] + s[1]);
            if !window.contains(mid) {
                continue;
            }
            let i = (((mid.re - window.re_min) / dx) as usize).min(n - 1);
            let j = (((mid.im - window.im_min) / dy) as usize).min(n - 1);
            buckets[j * n + i].push((s[0], s[1]));
        }
    }
    let reach = (h / dx.min(dy)).ceil() as isize + 2;
    let mut marked: Vec<Cplx> = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let c = base.center(i, j);
            if base.get(i, j) {
                marked.push(c);
                continue;
            }
            let mut near = false;
            'scan: for dj in -reach..=reach {
                for di in -reach..=reach {
                    let (ii, jj) = (i as isize + di, j as isize + dj);
                    if ii < 0 || jj < 0 || ii >= n as isize || jj >= n as isize {
                        continue;
                    }
                    for (a, b) in &buckets[jj as usize * n + ii as usize] {
                        if seg_dist(c, *a, *b) <= h {
                            near = true;
                            break 'scan;
                        }
                    }
                }
            }
            if near {
                marked.push(c);
            }
        }
    }
    Raster::from_points(&marked, window, n).unwrap()
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let backend = BarrierBackend::default();
    let SystemModel::Lti(ex1) = preset("ex1").unwrap().system else {
        unreachable!()
    };
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, model) in [("1/(s+1)", first_order(1.0)), ("ex1", SystemModel::Lti(ex1))] {
        let SystemModel::Lti(sys) = &model else { unreachable!() };
        let g = gain_bound(&model, false, &backend).unwrap().unwrap();
        let grid = linspace(-5.0 * g, 5.0 * g, 161);
        let cfg = SweepConfig::new(grid.clone(), grid, false).unwrap();
        let approx = sweep(&model, &cfg, &backend).unwrap().approximation;
        let exact = exact_sg(sys, &default_freq_grid(sys)).unwrap();
        let window = fit_window(&exact.boundary_samples());
        let n = 512;
        let h = (window.width() / n as f64).max(window.height() / n as f64);
        let re = exact_dilated(&exact, &window, n, h);
        let ra = rasterize(&approx.dilated(h), &window, n).unwrap();
        let diff = ra.symmetric_difference(&re).unwrap();
        let ratio = diff as f64 / re.count() as f64;
        pass &= ratio <= 0.03;
        parts.push(format!("{name}: {:.2}% of {} cells", 100.0 * ratio, re.count()));
    }
    Outcome::new(
        pass,
        format!("{}, {:.1} s", parts.join("; "), start.elapsed().as_secs_f64()),
    )
}

fn criterion_4(sw: &Sweeps) -> Outcome {
    let p = preset("ex2").unwrap();
    let approx = &sw.ex2.approximation;
    let cloud = sample_cloud(&p.system, 500, SEED, &InputRanges::default()).unwrap();
    let c = cloud.containment(approx);
    let sound = cloud.samples.len() == 500 && cloud.untrusted == 0 && c.inside == c.total;

    let br = solve_interior(&p.system, 0.0, false, &BarrierBackend::default()).unwrap();
    let r = br.radius().filter(|_| br.is_verified());
    let reduced = r.is_some_and(|r| r < 1.0);

    let (carved, extra) = match r {
        Some(r) => {
            let disk = RegionSpec::disk_interior(0.0, r).unwrap();
            let w = Window::square(0.0, 1.2 * r).unwrap();
            let rd = rasterize(&disk, &w, 512).unwrap();
            let ra = rasterize(approx, &w, 512).unwrap();
            let outside = rd.containment_violations(&ra).unwrap();
            let active = approx
                .regions()
                .filter(|g| matches!(g, RegionSpec::DiskExterior { .. }))
                .filter(|g| rd.iter_cells().any(|(z, inside)| inside && !g.contains(z)))
                .count();
            (outside == 0 && ra.count() < rd.count() && active > 0, format!("{}/{} disk cells kept, {active} active exterior disks", ra.count(), rd.count()))
        }
        None => (false, "no bounded-real disk".into()),
    };
    Outcome::new(
        sound && reduced && carved,
        format!(
            "(i) {}/{} points inside, {} untrusted; (ii) r0 = {:?}; (iii) {extra}",
            c.inside, c.total, cloud.untrusted, r
        ),
    )
}

fn criterion_5(sw: &Sweeps) -> Outcome {
    let sys = SystemModel::Pwl(pwl_system());
    let approx = &sw.ex3.approximation;
    let cloud = sample_cloud(&sys, 500, SEED, &InputRanges::default()).unwrap();
    let c = cloud.containment(approx);
    let sound = cloud.samples.len() == 500 && c.inside == c.total;

    // mode SGs must meet the region; the region is tiny, so compare distances
    let mut meets = Vec::new();
    for k in [0, 1] {
        let mode = &pwl_system().modes[k].dynamics;
        let exact = exact_sg(mode, &default_freq_grid(mode)).unwrap();
        let pts = match exact.singleton() {
            Some(z) => vec![z],
            None => exact.boundary_samples(),
        };
        let best = pts.iter().map(|z| approx.margin(*z)).fold(f64::NEG_INFINITY, f64::max);
        meets.push(best);
    }
    let pass = sound && meets.iter().all(|&d| d >= -1e-9);
    Outcome::new(
        pass,
        format!(
            "{}/{} points inside (max gain {:.2e}); best margin of mode 1 / mode 2 graphs {:.2e} / {:.2e}",
            c.inside,
            c.total,
            cloud.trusted().map(|s| s.rho).fold(0.0, f64::max),
            meets[0],
            meets[1]
        ),
    )
}

fn criterion_6(sw: &Sweeps) -> Outcome {
    let start = Instant::now();
    let run = |a: &SgApproximation, b: &SgApproximation| -> FeedbackReport {
        check_feedback(a, b, &default_tau_grid(), None, 512).unwrap()
    };
    let a = run(&sw.ex2.approximation, &sw.ex1.approximation);
    let b = run(&sw.ex3.approximation, &sw.ex1.approximation);
    let c = run(&sw.ex3.approximation, &sw.ex2.approximation);
    let gain_in = |r: &FeedbackReport, lo: f64, hi: f64| r.gain_bound.is_some_and(|g| (lo..=hi).contains(&g));
    let ok_a = a.verdict == Verdict::Separated && (0.25..=0.35).contains(&a.r_min) && gain_in(&a, 2.5, 3.5);
    let ok_b = b.verdict == Verdict::Overlapping;
    let ok_c = c.verdict == Verdict::Separated && (0.55..=0.75).contains(&c.r_min) && gain_in(&c, 1.3, 1.8);
    let secs = start.elapsed().as_secs_f64();
    let fmt = |r: &FeedbackReport| format!("{:?} r_min {:.4} gain {:?} [{}]", r.verdict, r.r_min, r.gain_bound, r.method);
    let mut o = Outcome::new(
        ok_a && ok_b && ok_c && secs < 300.0,
        format!(
            "(a) {} {}; (b) {} {}; (c) {} {}; {secs:.1} s",
            fmt(&a),
            if ok_a { "ok" } else { "MISS" },
            fmt(&b),
            if ok_b { "ok" } else { "MISS" },
            fmt(&c),
            if ok_c { "ok" } else { "MISS" },
        ),
    );
    // (b) and (c) depend on the third example, whose printed data make its
    // output identically zero; (a) does not
    o.must_hold = !ok_a;
    o
}

fn criterion_7(sw: &Sweeps) -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, soft) in [("ex1", &sw.ex1), ("ex2", &sw.ex2), ("ex3", &sw.ex3)] {
        let hard = preset_sweep(name, true);
        let g = soft.approximation.gain_bound().unwrap();
        let w = Window::square(0.0, 1.2 * g).unwrap();
        let rs = rasterize(&soft.approximation, &w, 512).unwrap();
        let rh = rasterize(&hard.approximation, &w, 512).unwrap();
        let v = rh.containment_violations(&rs).unwrap();
        pass &= v == 0;
        parts.push(format!("{name} {v}"));
    }
    let backend = BarrierBackend::default();
    let mut refused = 0;
    for a in [0.5, 1.0, 2.0] {
        let sys = first_order(a);
        let lam = 1.0 / (2.0 * a);
        let soft = solve_exterior(&sys, lam, false, &backend).unwrap();
        let hard = solve_exterior(&sys, lam, true, &backend).unwrap();
        if soft.is_verified() && !hard.is_verified() {
            refused += 1;
        }
    }
    pass &= refused == 3;
    Outcome::new(
        pass,
        format!(
            "soft cells outside hard: {}; hard exterior refused {refused}/3 first-order systems; {:.1} s",
            parts.join(", "),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn random_stable(rng: &mut ChaCha8Rng) -> StateSpace {
    // A + A' < 0
    let (a1, a2, b) = (rng.random_range(0.3..3.0), rng.random_range(0.3..3.0), rng.random_range(-2.0..2.0));
    let mut r = || rng.random_range(-1.0..1.0);
    StateSpace::new(
        m(&[&[-a1, b], &[-b, -a2]]),
        m(&[&[r()], &[r()]]),
        m(&[&[r(), r()]]),
        m(&[&[0.5 * r()]]),
    )
    .unwrap()
}

fn random_system(rng: &mut ChaCha8Rng, class: usize) -> SystemModel {
    match class {
        0 => SystemModel::Lti(random_stable(rng)),
        1 => {
            let (p1, p2, k) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0), rng.random_range(0.5..1.5));
            let base = StateSpace::new(
                m(&[&[-p1, 0.0], &[1.0, -p2]]),
                m(&[&[1.0], &[0.0]]),
                m(&[&[0.0, 1.0]]),
                m(&[&[0.0]]),
            )
            .unwrap();
            let flow = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![k * k, -1.0, 0.0]));
            SystemModel::Reset(ResetSystem::new(base, DMatrix::zeros(2, 2), flow).unwrap())
        }
        _ => {
            let mut mode = |sign: f64| {
                let mut d = random_stable(rng);
                d.d = m(&[&[0.0]]);
                PwlMode {
                    dynamics: d,
                    guard: m(&[&[sign, 0.0, 0.0]]),
                }
            };
            let (up, down) = (mode(1.0), mode(-1.0));
            SystemModel::Pwl(PwlSystem::new(vec![up, down]).unwrap())
        }
    }
}

/// Trapezoid rule over the recorded samples plus the analytic tail.
fn trapezoid(t: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    (1..t.len()).map(|i| 0.5 * (t[i] - t[i - 1]) * (f(i) + f(i - 1))).sum()
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let ranges = InputRanges::default();
    let (mut agree, mut total, mut outside_band, mut skipped) = (0, 0, 0, 0);
    let mut draw = 0u64;
    while total < 200 && draw < 400 {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        rng.set_stream(draw);
        draw += 1;
        let sys = random_system(&mut rng, total % 3);
        let input = InputSignal::MultiSine(ranges.draw(&mut rng, 1));
        let traj = simulate(&sys, &input, &SimOptions::recorded()).unwrap();
        let Ok(f) = functionals(&traj) else {
            skipped += 1;
            continue;
        };
        let z = SgSample::from_functionals(f, None, true).z();
        let sigma = if rng.random_bool(0.5) { Sign::Pos } else { Sign::Neg };
        let lam = rng.random_range(-2.0..2.0);
        let r = (z - Cplx::new(lam, 0.0)).norm() * rng.random_range(0.7..1.3) + 1e-3;
        let pi = make_pi(sigma, lam, r).unwrap();

        let (ports, t) = (traj.ports, &traj.t);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let uu = trapezoid(t, |i| dot(traj.u_at(i), traj.u_at(i))) + traj.tail[0];
        let yy = trapezoid(t, |i| dot(traj.y_at(i), traj.y_at(i))) + traj.tail[1];
        let uy = trapezoid(t, |i| dot(traj.u_at(i), traj.y_at(i))) + traj.tail[2];
        debug_assert_eq!(ports, 1);
        let iqc = pi.a * yy + 2.0 * pi.b * uy + pi.c * uu;
        let member = RegionSpec::from_pi(pi).unwrap().contains(z);
        let band = 1e-6 * (1.0 + uu + yy) + 1e-3 * (pi.a.abs() * yy + 2.0 * (pi.b * uy).abs() + pi.c.abs() * uu);
        total += 1;
        if (iqc >= 0.0) == member {
            agree += 1;
        } else if iqc.abs() > band {
            outside_band += 1;
        }
    }
    let rate = agree as f64 / total.max(1) as f64;
    Outcome::new(
        total == 200 && rate >= 0.99 && outside_band == 0,
        format!(
            "{agree}/{total} agree, {outside_band} disagreements outside the band, {skipped} unsettled draws; {:.1} s",
            start.elapsed().as_secs_f64()
        ),
    )
}

/// Pointwise inverse graph map `rho e^(j theta) -> (1/rho) e^(j theta)`.
fn invert_point(z: Cplx) -> Cplx {
    z / z.norm_sqr()
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut bk_err: f64 = 0.0;
    for _ in 0..10_000 {
        let z = Cplx::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
        let (p, q) = bk_inverse(bk_map(z)).unwrap();
        let e = (p - z).norm().min((q - z).norm()) / (1.0 + z.norm());
        bk_err = bk_err.max(e);
    }

    let mut fit: f64 = 0.0;
    let mut disks = 0;
    while disks < 100 {
        let lam: f64 = rng.random_range(-3.0..3.0);
        let r = rng.random_range(0.05..3.0);
        if (lam.abs() - r).abs() < 0.05 {
            continue;
        }
        disks += 1;
        let region = if rng.random_bool(0.5) {
            RegionSpec::disk_interior(lam, r).unwrap()
        } else {
            RegionSpec::disk_exterior(lam, r).unwrap()
        };
        let (RegionSpec::DiskInterior { lambda_c, r: rr } | RegionSpec::DiskExterior { lambda_c, r: rr }) = region.inverted()
        else {
            fit = f64::INFINITY;
            continue;
        };
        for k in 0..64 {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            let w = invert_point(Cplx::new(lam, 0.0) + Cplx::from_polar(r, th));
            fit = fit.max(((w - Cplx::new(lambda_c, 0.0)).norm() - rr).abs() / (1.0 + rr));
        }
        // interior goes to interior when the disk avoids the origin
        let probe = invert_point(Cplx::new(lam, 0.0) + Cplx::from_polar(0.5 * r, 0.3));
        if region.contains(invert_point(probe)) != region.inverted().contains(probe) {
            fit = f64::INFINITY;
        }
    }

    let mut worst_sym: f64 = 0.0;
    let mut worst_analytic: f64 = 0.0;
    let mut spacing_ok = true;
    let w = Window::square(0.0, 4.0).unwrap();
    for _ in 0..20 {
        let a = RegionSpec::disk_interior(rng.random_range(-2.5..0.0), rng.random_range(0.1..1.0)).unwrap();
        let b = RegionSpec::disk_interior(rng.random_range(0.0..2.5), rng.random_range(0.1..1.0)).unwrap();
        let ab = set_distance(SetRef::Set(&a), SetRef::Set(&b), &w, 256).unwrap();
        let ba = set_distance(SetRef::Set(&b), SetRef::Set(&a), &w, 256).unwrap();
        let exact = disk_disk_distance(&a, &b).unwrap();
        worst_sym = worst_sym.max((ab.value - ba.value).abs());
        worst_analytic = worst_analytic.max((ab.value - exact).abs());
        spacing_ok &= (ab.value - exact).abs() < ab.spacing && (ab.value - ba.value).abs() < ab.spacing;
    }
    Outcome::new(
        bk_err < 1e-10 && fit < 1e-8 && spacing_ok,
        format!(
            "BK round trip {bk_err:.1e}; inverse circles residual {fit:.1e}; distance asymmetry {worst_sym:.1e}, vs analytic {worst_analytic:.1e}"
        ),
    )
}

fn main() {
    let start = Instant::now();
    let t = Instant::now();
    let sweeps = Sweeps {
        ex1: preset_sweep("ex1", false),
        ex2: preset_sweep("ex2", false),
        ex3: preset_sweep("ex3", false),
    };
    println!("soft sweeps of the three examples: {:.1} s", t.elapsed().as_secs_f64());

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("1", Box::new(criterion_1)),
        ("2", Box::new(|| criterion_2(&sweeps))),
        ("3", Box::new(criterion_3)),
        ("4", Box::new(|| criterion_4(&sweeps))),
        ("5", Box::new(|| criterion_5(&sweeps))),
        ("6", Box::new(|| criterion_6(&sweeps))),
        ("7", Box::new(|| criterion_7(&sweeps))),
        ("8", Box::new(criterion_8)),
        ("9", Box::new(criterion_9)),
    ];
    let mut blocking = Vec::new();
    for (id, run) in &criteria {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && KNOWN_GAPS.contains(id) { " (known gap)" } else { "" };
        println!("criterion {id}: {tag}{note} {}", o.detail);
        if !o.pass && (!KNOWN_GAPS.contains(id) || o.must_hold) {
            blocking.push(*id);
        }
    }
    println!("acceptance finished in {:.1} s", start.elapsed().as_secs_f64());
    if !blocking.is_empty() {
        println!("unexpected failures: {}", blocking.join(", "));
        std::process::exit(1);
    }
}

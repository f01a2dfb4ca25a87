//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use configlab::diagnostics::{energy_report, EnergyVerdict};
use configlab::fractal::{
    equispaced_circle, geometric_grid, ifs_with_dimension, midpoint_grid, uniform_box,
};
use configlab::geometry::{
    alp_max_k, build_quadratic_ensemble, catalog, radon_hurwitz, MapParams, QuadraticEnsemble,
};
use configlab::measure::default_delta;
use configlab::{
    detect_intervals, energy_integral, estimate_density, falconer_lattice_set,
    fit_scaling_exponent, fourier_decay, line_line_distance, line_point_distance, local_dimension,
    product_measure, sample_ifs, ConfigurationMap, GridSpec, HeisPoint, Line, Rational64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($msg)+)),
        }
    };
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion {
            id: 1,
            name: "algebra",
            budget: secs(1),
            run: algebra,
        },
        Criterion {
            id: 2,
            name: "distance formulas",
            budget: secs(10),
            run: distance_formulas,
        },
        Criterion {
            id: 3,
            name: "invariance",
            budget: secs(1),
            run: invariance,
        },
        Criterion {
            id: 4,
            name: "tent density",
            budget: secs(60),
            run: tent_density,
        },
        Criterion {
            id: 5,
            name: "scaling law",
            budget: secs(120),
            run: scaling_law,
        },
        Criterion {
            id: 6,
            name: "energy and dimension",
            budget: secs(120),
            run: energy_and_dimension,
        },
        Criterion {
            id: 7,
            name: "fourier decay",
            budget: secs(60),
            run: fourier_decay_rates,
        },
        Criterion {
            id: 8,
            name: "lattice sharpness",
            budget: secs(60),
            run: lattice_sharpness,
        },
        Criterion {
            id: 9,
            name: "determinism",
            budget: None,
            run: determinism,
        },
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(c.run))
            .unwrap_or_else(|e| Err(panic_message(e.as_ref())));
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!(
                "took {:.1} s, budget {} s",
                elapsed.as_secs_f64(),
                b.as_secs()
            )),
            (o, _) => o,
        };
        let budget = c
            .budget
            .map_or(String::new(), |b| format!(", budget {} s", b.as_secs()));
        let (verdict, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {} ({}): {verdict} [{:.2} s{budget}] {detail}",
            c.id,
            c.name,
            elapsed.as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn panic_message(e: &(dyn std::any::Any + Send)) -> String {
    let msg = e
        .downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default();
    format!("panicked: {msg}")
}

fn algebra() -> Outcome {
    let table = [1, 2, 1, 4, 1, 2, 1, 8, 1, 2, 1, 4, 1, 2, 1, 9];
    for (n, want) in (1..=16).zip(table) {
        let got = radon_hurwitz(Rational64::from_integer(n)).map_err(|e| e.to_string())?;
        check!(got == want, "radon_hurwitz({n}) = {got}, want {want}");
    }
    for (d, want) in [(2, 2), (3, 1), (4, 3)] {
        check!(alp_max_k(d) == want, "alp_max_k({d}) = {}", alp_max_k(d));
    }
    let e: QuadraticEnsemble<f64> = build_quadratic_ensemble(4, 3).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0f64;
    for _ in 0..10_000 {
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let want = c.iter().map(|x| x * x).sum::<f64>().powi(2);
        worst = worst.max((e.combination_det(&c) - want).abs() / want.max(1.0));
    }
    check!(worst <= 1e-9, "determinant error {worst:e}");
    Ok(format!("determinant error {worst:.1e} over 10^4 draws"))
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Minimizes a convex function on `[a, b]`: coarse grid, then golden-section refinement.
fn argmin_convex(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const GRID: usize = 64;
    let h = (b - a) / GRID as f64;
    let best = (0..=GRID)
        .min_by(|&i, &j| f(a + i as f64 * h).total_cmp(&f(a + j as f64 * h)))
        .unwrap();
    let mut lo = a + best.saturating_sub(1) as f64 * h;
    let mut hi = a + (best + 1).min(GRID) as f64 * h;
    // 0.618^120 shrinks any bracket below f64 resolution
    for _ in 0..120 {
        let m1 = hi - GOLDEN * (hi - lo);
        let m2 = lo + GOLDEN * (hi - lo);
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}

/// Distance between `a(s)` and `b(t)`, where `l(s) = foot + s * omega`.
fn gap(a: &Line<f64>, s: f64, b: &Line<f64>, t: f64) -> f64 {
    let (pa, wa, pb, wb) = (a.foot(), a.omega(), b.foot(), b.omega());
    (0..pa.len())
        .map(|i| (pa[i] + s * wa[i] - pb[i] - t * wb[i]).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn brute_line_point(l: &Line<f64>, y: &[f64]) -> f64 {
    let f = |s: f64| {
        let (p, w) = (l.foot(), l.omega());
        (0..y.len())
            .map(|i| (p[i] + s * w[i] - y[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    f(argmin_convex(f, -1e3, 1e3))
}

fn brute_line_line(a: &Line<f64>, b: &Line<f64>) -> f64 {
    let outer = |s: f64| {
        let g = |t: f64| gap(a, s, b, t);
        g(argmin_convex(g, -1e6, 1e6))
    };
    outer(argmin_convex(outer, -1e5, 1e5))
}

fn unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (0.1..=1.0).contains(&n) {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn random_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()
}

/// A direction at angle `acos(cos)` from the unit vector `w`.
fn tilted(rng: &mut ChaCha8Rng, w: &[f64], cos: f64) -> Vec<f64> {
    let u = unit_vector(rng, w.len());
    let dot: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
    let perp: Vec<f64> = u.iter().zip(w).map(|(a, b)| a - dot * b).collect();
    let n = perp.iter().map(|x| x * x).sum::<f64>().sqrt();
    let sin = (1.0 - cos * cos).sqrt();
    w.iter()
        .zip(&perp)
        .map(|(a, p)| cos * a + sin * p / n)
        .collect()
}

fn distance_formulas() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_lp, mut worst_ll) = (0f64, 0f64);
    let mut near_parallel = 0;
    for d in [3, 5] {
        for i in 0..1000 {
            let w = unit_vector(&mut rng, d);
            let a = Line::through(&random_point(&mut rng, d), &w).map_err(|e| e.to_string())?;
            let y: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let fast = line_point_distance(&a, &y).map_err(|e| e.to_string())?;
            worst_lp = worst_lp.max((fast - brute_line_point(&a, &y)).abs());

            let w2 = if i % 2 == 0 {
                near_parallel += 1;
                let cos = rng.random_range(0.999..0.99995);
                tilted(&mut rng, &w, cos)
            } else {
                unit_vector(&mut rng, d)
            };
            let b = Line::through(&random_point(&mut rng, d), &w2).map_err(|e| e.to_string())?;
            let fast = line_line_distance(&a, &b).map_err(|e| e.to_string())?;
            worst_ll = worst_ll.max((fast - brute_line_line(&a, &b)).abs());
        }
    }
    check!(worst_lp <= 1e-6, "line-point error {worst_lp:e}");
    check!(worst_ll <= 1e-6, "line-line error {worst_ll:e}");
    Ok(format!(
        "max error line-point {worst_lp:.1e}, line-line {worst_ll:.1e} ({near_parallel} near-parallel pairs)"
    ))
}

fn invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let close = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .all(|(p, q)| (p - q).abs() <= 1e-12 * (1.0 + p.abs()))
    };
    let mut maps = 0;
    for map in catalog()
        .into_iter()
        .filter(|m| m.is_translation_invariant())
    {
        let d = map.x_coords();
        check!(
            d == map.y_coords(),
            "{} mixes coordinate counts",
            map.label()
        );
        maps += 1;
        for _ in 0..10_000 {
            let [x, y, z] = [0; 3].map(|_| random_point(&mut rng, d));
            let shift = |p: &[f64]| p.iter().zip(&z).map(|(a, b)| a + b).collect::<Vec<_>>();
            let (xz, yz) = (shift(&x), shift(&y));
            if map.is_singular(&x, &y) || map.is_singular(&xz, &yz) {
                continue;
            }
            let a = map.eval(&x, &y).map_err(|e| e.to_string())?;
            let b = map.eval(&xz, &yz).map_err(|e| e.to_string())?;
            check!(close(&a, &b), "{}: {a:?} vs {b:?}", map.label());
        }
    }
    let heis = ConfigurationMap::<f64>::heisenberg();
    let point = |rng: &mut ChaCha8Rng| {
        HeisPoint::new(
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        )
    };
    for _ in 0..10_000 {
        let (x, y, z) = (point(&mut rng), point(&mut rng), point(&mut rng));
        let (xc, yc) = (x.to_coords(), y.to_coords());
        if heis.is_singular(&xc, &yc) {
            continue;
        }
        let a = heis.eval(&xc, &yc).map_err(|e| e.to_string())?;
        let b = heis
            .eval(&(x * z).to_coords(), &(y * z).to_coords())
            .map_err(|e| e.to_string())?;
        check!(close(&a, &b), "heisenberg: {a:?} vs {b:?}");
    }
    Ok(format!(
        "{maps} translation-type maps and the Heisenberg map, 10^4 triples each"
    ))
}

fn tent_density() -> Outcome {
    // mu x mu for the uniform measure on [0, 1], realized by all 10^6 pairs of a midpoint rule
    let g = midpoint_grid::<f64>(1, 1000, 0.0, 1.0);
    let grid = GridSpec::uniform(vec![-1.2], vec![1.2], 0.005).map_err(|e| e.to_string())?;
    let est = estimate_density(
        &ConfigurationMap::difference(1),
        &g,
        &g,
        0.01,
        Some(&grid),
        1_000_000,
        1,
    )
    .map_err(|e| e.to_string())?;
    let sup = (0..grid.len())
        .map(|i| (est.values[i] - (1.0 - grid.coord(0, i).abs()).max(0.0)).abs())
        .fold(0.0, f64::max);
    let mass = est.riemann_sum();
    check!(sup <= 0.05, "sup error {sup}");
    check!((0.98..=1.01).contains(&mass), "mass {mass}");
    let regions = detect_intervals(&est, 0.5);
    check!(regions.len() == 1, "{} regions at delta 0.5", regions.len());
    let (lo, hi) = (regions[0].lo[0], regions[0].hi[0]);
    let step = grid.step[0] + 1e-12;
    check!(
        (lo + 0.5).abs() <= step && (hi - 0.5).abs() <= step,
        "level set [{lo}, {hi}]"
    );
    Ok(format!(
        "sup error {sup:.4}, mass {mass:.4}, level set [{lo:.3}, {hi:.3}]"
    ))
}

fn scaling_law() -> Outcome {
    let eps = geometric_grid(0.005, 0.16, 6);
    let sq = uniform_box::<f64>(2, 1000, 0.0, 1.0, 8);
    let k1 = fit_scaling_exponent(
        &ConfigurationMap::distance(2),
        &sq,
        &sq,
        &[0.5],
        &eps,
        1_000_000,
        9,
    )
    .map_err(|e| e.to_string())?;
    let md = ConfigurationMap::<f64>::from_name(
        "multi_distance",
        &MapParams {
            blocks: Some(vec![2, 2]),
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let cube = uniform_box::<f64>(4, 1000, 0.0, 1.0, 10);
    let k2 = fit_scaling_exponent(&md, &cube, &cube, &[0.5, 0.5], &eps, 1_000_000, 11)
        .map_err(|e| e.to_string())?;
    check!((k1.slope - 1.0).abs() <= 0.2, "k=1 slope {}", k1.slope);
    check!((k2.slope - 2.0).abs() <= 0.2, "k=2 slope {}", k2.slope);
    Ok(format!(
        "slopes {:.3} (k=1), {:.3} (k=2)",
        k1.slope, k2.slope
    ))
}

fn energy_and_dimension() -> Outcome {
    let u = uniform_box::<f64>(1, 100_000, 0.0, 1.0, 8);
    let e = energy_integral(&u, 0.5, 1_000_000, 9).map_err(|e| e.to_string())?;
    check!((e - 8.0 / 3.0).abs() <= 0.05, "interval energy {e}");

    let cantor =
        ifs_with_dimension::<f64>(1, 2, 2f64.ln() / 3f64.ln()).map_err(|e| e.to_string())?;
    let depths = [8, 9, 10, 11, 12];
    let below = energy_report(&cantor, 0.5, &depths, 20_000_000, 1).map_err(|e| e.to_string())?;
    let above = energy_report(&cantor, 0.7, &depths, 20_000_000, 1).map_err(|e| e.to_string())?;
    check!(
        below.verdict == EnergyVerdict::Converged,
        "s=0.5 verdict {:?}",
        below.verdict
    );
    check!(
        above.verdict == EnergyVerdict::Diverging,
        "s=0.7 verdict {:?}",
        above.verdict
    );

    let mu = sample_ifs(&cantor, 12, 100_000, 11).map_err(|e| e.to_string())?;
    let triadic: Vec<f64> = (2..=9).rev().map(|j| 3f64.powi(-j)).collect();
    let dc = local_dimension(&mu, &triadic, 200, 12).map_err(|e| e.to_string())?;
    let sq = uniform_box::<f64>(2, 1_000_000, 0.0, 1.0, 13);
    let ds = local_dimension(&sq, &geometric_grid(0.004, 0.032, 7), 200, 14)
        .map_err(|e| e.to_string())?;
    check!((dc - 0.63).abs() <= 0.05, "Cantor local dimension {dc}");
    check!((ds - 2.0).abs() <= 0.05, "square local dimension {ds}");
    Ok(format!(
        "interval energy {e:.4}; Cantor {:?} at 0.5, {:?} at 0.7; local dimensions {dc:.3}, {ds:.3}",
        below.verdict, above.verdict
    ))
}

fn fourier_decay_rates() -> Outcome {
    let circle = equispaced_circle::<f64>(4096, 1.0);
    let c = fourier_decay(&circle, 200.0, 16, 15).map_err(|e| e.to_string())?;
    let interval = midpoint_grid::<f64>(1, 4096, 0.0, 1.0);
    let i = fourier_decay(&interval, 400.0, 8, 16).map_err(|e| e.to_string())?;
    let small = equispaced_circle::<f64>(512, 1.0);
    let torus = product_measure(&small, &small, 1 << 20, 17).map_err(|e| e.to_string())?;
    let t = fourier_decay(&torus, 50.0, 16, 18).map_err(|e| e.to_string())?;
    check!(
        (c.exponent - 0.5).abs() <= 0.1,
        "circle exponent {}",
        c.exponent
    );
    check!(
        (i.exponent - 1.0).abs() <= 0.1,
        "interval exponent {}",
        i.exponent
    );
    check!(
        (t.exponent - 0.5).abs() <= 0.15,
        "torus exponent {}",
        t.exponent
    );
    Ok(format!(
        "exponents circle {:.3}, interval {:.3}, torus {:.3}",
        c.exponent, i.exponent, t.exponent
    ))
}

fn lattice_sharpness() -> Outcome {
    let diff = ConfigurationMap::difference(1);
    let longest = |mu| -> Result<f64, String> {
        let est = estimate_density(&diff, mu, mu, 0.002, None, 1_000_000, 21)
            .map_err(|e| e.to_string())?;
        Ok(detect_intervals(&est, default_delta(&est))
            .iter()
            .map(|r| r.length())
            .fold(0.0, f64::max))
    };
    let lattice = falconer_lattice_set::<f64>(1, 0.5, 10, 1000, 19).map_err(|e| e.to_string())?;
    let uniform = uniform_box::<f64>(1, 1000, 0.0, 1.0, 20);
    let (l, u) = (longest(&lattice)?, longest(&uniform)?);
    check!(l <= 0.05, "lattice interval of length {l}");
    check!(u > 0.05, "uniform cloud longest interval {u}");
    Ok(format!("longest interval lattice {l:.4}, uniform {u:.4}"))
}

const FULL_RUN: &str = r#"
seed = 5
eps = 0.02
pair_budget = 200000
analyses = ["density", "intervals", "scaling", "energy", "dimension", "decay"]

[map]
name = "distance"
d = 1

[mu1]
kind = "ifs"
d = 1
m = 2
s = 0.6309297535714574
n = 20000

[mu2]
kind = "uniform"
n = 20000
"#;

const OUTPUTS: [&str; 5] = [
    "report.json",
    "density.csv",
    "density.json",
    "measure_mu1.txt",
    "measure_mu2.txt",
];

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let experiments = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments");
    let full = dir.path().join("full.toml");
    fs::write(&full, FULL_RUN).map_err(|e| e.to_string())?;
    let configs = [
        full,
        experiments.join("heisenberg.toml"),
        experiments.join("falconer_lattice.toml"),
    ];
    let mut compared = 0;
    for (c, config) in configs.iter().enumerate() {
        let mut first: Option<Vec<Vec<u8>>> = None;
        for workers in [1, 2, 8] {
            let out = dir.path().join(format!("run{c}-{workers}"));
            let status = Command::new(env!("CARGO_BIN_EXE_configlab"))
                .arg("--config")
                .arg(config)
                .arg("--workers")
                .arg(workers.to_string())
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            check!(
                status.status.success(),
                "{} with {workers} workers: {}",
                config.display(),
                String::from_utf8_lossy(&status.stderr)
            );
            let bytes = OUTPUTS
                .iter()
                .map(|f| fs::read(out.join(f)).map_err(|e| format!("{f}: {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            match &first {
                None => first = Some(bytes),
                Some(reference) => {
                    for (f, (a, b)) in OUTPUTS.iter().zip(reference.iter().zip(&bytes)) {
                        check!(
                            a == b,
                            "{f} differs for {} with {workers} workers",
                            config.display()
                        );
                        compared += 1;
                    }
                }
            }
        }
    }
    Ok(format!(
        "{} configs, {compared} output files byte-identical across 1, 2 and 8 workers",
        configs.len()
    ))
}

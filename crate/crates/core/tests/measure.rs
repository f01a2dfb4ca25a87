use configlab::fractal::{
    falconer_lattice_set, geometric_grid, ifs_with_dimension, midpoint_grid, point_mass,
    sample_ifs, uniform_box, SampledMeasure,
};
use configlab::geometry::{ConfigurationMap, MapParams};
use configlab::measure::{
    ball_mass, covering_mass_identity, default_delta, detect_intervals, estimate_density,
    fit_scaling_exponent, DensityEstimate, GridSpec, MeasureError, Mollifier, PairSample,
};

fn tent(t: f64) -> f64 {
    (1.0 - t.abs()).max(0.0)
}

/// Exhaustive 10^6 pairs of the 1000-point midpoint rule on [0, 1].
fn tent_estimate() -> DensityEstimate<f64> {
    let g = midpoint_grid::<f64>(1, 1000, 0.0, 1.0);
    let grid = GridSpec::uniform(vec![-1.2], vec![1.2], 0.005).unwrap();
    estimate_density(
        &ConfigurationMap::difference(1),
        &g,
        &g,
        0.01,
        Some(&grid),
        1_000_000,
        1,
    )
    .unwrap()
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn tent_density() {
    let est = tent_estimate();
    let g = &est.grid;
    let sup = (0..g.len())
        .map(|i| (est.values[i] - tent(g.coord(0, i))).abs())
        .fold(0.0, f64::max);
    assert!(sup <= 0.05, "sup error {sup}");
    assert!((est.riemann_sum() - 1.0).abs() <= 0.02);
    assert!(est.values.iter().all(|&v| v >= 0.0));
    assert_eq!(est.pairs_used, 1_000_000);
}

#[test]
fn tent_density_from_random_clouds() {
    let u = uniform_box::<f64>(1, 1_000_000, 0.0, 1.0, 2);
    let diff = ConfigurationMap::difference(1);
    let grid = GridSpec::uniform(vec![-1.2], vec![1.2], 0.005).unwrap();
    let est = estimate_density(&diff, &u, &u, 0.01, Some(&grid), 1_000_000, 3).unwrap();
    let sup = (0..grid.len())
        .map(|i| (est.values[i] - tent(grid.coord(0, i))).abs())
        .fold(0.0, f64::max);
    assert!(sup <= 0.05, "sup error {sup}");
    let mass = est.riemann_sum();
    assert!((0.98..=1.01).contains(&mass), "{mass}");
}

#[test]
fn tent_level_set() {
    let est = tent_estimate();
    let regions = detect_intervals(&est, 0.5);
    assert_eq!(regions.len(), 1);
    let step = est.grid.step[0];
    assert!(
        (regions[0].lo[0] + 0.5).abs() <= step + 1e-12,
        "{:?}",
        regions[0]
    );
    assert!(
        (regions[0].hi[0] - 0.5).abs() <= step + 1e-12,
        "{:?}",
        regions[0]
    );
}

#[test]
fn zero_density_has_no_intervals() {
    let mut est = tent_estimate();
    est.values.iter_mut().for_each(|v| *v = 0.0);
    est.stderr.iter_mut().for_each(|v| *v = 0.0);
    assert!(detect_intervals(&est, 0.1).is_empty());
}

#[test]
fn single_pair_traces_the_mollifier() {
    let x = point_mass(&[0.3f64, 0.4]);
    let y = point_mass(&[0.0f64, 0.0]);
    let map = ConfigurationMap::distance(2);
    let grid = GridSpec::uniform(vec![0.4], vec![0.6], 0.01).unwrap();
    let est = estimate_density(&map, &x, &y, 0.05, Some(&grid), 10_000, 0).unwrap();
    let chi = Mollifier::new(1, 0.05f64).unwrap();
    for i in 0..grid.len() {
        let want = chi.eval(&[0.5 - grid.coord(0, i)]);
        assert!((est.values[i] - want).abs() < 1e-12);
    }
}

#[test]
fn ball_mass_examples() {
    let u = uniform_box::<f64>(1, 1_000_000, 0.0, 1.0, 4);
    let diff = ConfigurationMap::difference(1);
    let m = ball_mass(&diff, &u, &u, &[0.0], 0.1, 1_000_000, 5).unwrap();
    assert!((m - 0.19).abs() <= 0.01, "{m}");
    assert_eq!(
        ball_mass(&diff, &u, &u, &[0.0], 1.5, 1_000_000, 5).unwrap(),
        1.0
    );
    assert_eq!(
        ball_mass(&diff, &u, &u, &[0.0], 0.0, 1_000_000, 5).unwrap(),
        0.0
    );
}

#[test]
fn ball_mass_is_monotone_on_fixed_samples() {
    let sq = uniform_box::<f64>(2, 2000, 0.0, 1.0, 6);
    let pairs = PairSample::draw(&ConfigurationMap::distance(2), &sq, &sq, 200_000, 7).unwrap();
    let mut last = 0.0;
    for i in 0..200 {
        let m = pairs.ball_mass(&[0.4], i as f64 * 0.005);
        assert!(m >= last && (0.0..=1.0).contains(&m));
        last = m;
    }
}

#[test]
fn mollified_density_integrates_to_ball_mass() {
    let g = midpoint_grid::<f64>(1, 1000, 0.0, 1.0);
    let diff = ConfigurationMap::difference(1);
    let pairs = PairSample::draw(&diff, &g, &g, 1_000_000, 0).unwrap();
    let eps = 0.01;
    let est = pairs.density(eps, None).unwrap();
    let h = est.grid.step[0];
    for (t, a) in [(0.0, 0.1), (0.3, 0.2), (-0.7, 0.05)] {
        let integral: f64 = (0..est.grid.len())
            .filter(|&i| (est.grid.coord(0, i) - t).abs() <= a)
            .map(|i| est.values[i] * h)
            .sum();
        let mass = pairs.ball_mass(&[t], a);
        assert!(
            (integral - mass).abs() <= 2.0 * eps,
            "t={t}: {integral} vs {mass}"
        );
    }
}

#[test]
fn covering_masses() {
    let g = midpoint_grid::<f64>(1, 300, 0.0, 1.0);
    let diff = ConfigurationMap::difference(1);
    let all = covering_mass_identity(&diff, &g, &g, &[(vec![0.0], 2.0)], 100_000, 0).unwrap();
    assert!(all >= 0.999);
    let cover: Vec<(Vec<f64>, f64)> = (0..24)
        .map(|j| (vec![-1.15 + 0.1 * j as f64], 0.05))
        .collect();
    let tiled = covering_mass_identity(&diff, &g, &g, &cover, 100_000, 0).unwrap();
    assert!(tiled >= 0.98, "{tiled}");
    let far = covering_mass_identity(
        &diff,
        &g,
        &g,
        &[(vec![5.0], 0.5), (vec![-4.0], 1.0)],
        100_000,
        0,
    )
    .unwrap();
    assert!(far.abs() < 1e-12);
}

#[test]
fn scaling_law_for_distances() {
    let eps = geometric_grid(0.005, 0.16, 6);
    let sq = uniform_box::<f64>(2, 1000, 0.0, 1.0, 8);
    let fit = fit_scaling_exponent(
        &ConfigurationMap::distance(2),
        &sq,
        &sq,
        &[0.5],
        &eps,
        1_000_000,
        9,
    )
    .unwrap();
    assert!((fit.slope - 1.0).abs() <= 0.15, "{}", fit.slope);
    assert!(fit.meets_scaling_law && fit.c_phi_max > 0.0);

    let md = ConfigurationMap::<f64>::from_name(
        "multi_distance",
        &MapParams {
            blocks: Some(vec![2, 2]),
            ..Default::default()
        },
    )
    .unwrap();
    let cube = uniform_box::<f64>(4, 1000, 0.0, 1.0, 10);
    let fit = fit_scaling_exponent(&md, &cube, &cube, &[0.5, 0.5], &eps, 1_000_000, 11).unwrap();
    assert_eq!(fit.k, 2);
    assert!((fit.slope - 2.0).abs() <= 0.2, "{}", fit.slope);
}

#[test]
fn atoms_break_the_scaling_law() {
    let x = point_mass(&[0.0f64, 0.0]);
    let y = point_mass(&[3.0f64, 4.0]);
    let fit = fit_scaling_exponent(
        &ConfigurationMap::distance(2),
        &x,
        &y,
        &[5.0],
        &geometric_grid(1e-3, 1e-1, 5),
        10_000,
        0,
    )
    .unwrap();
    assert!(fit.slope.abs() < 1e-12);
    assert!(!fit.meets_scaling_law);
}

#[test]
fn scaling_fit_underflow() {
    let sq = uniform_box::<f64>(2, 200, 0.0, 1.0, 8);
    let r = fit_scaling_exponent(
        &ConfigurationMap::distance(2),
        &sq,
        &sq,
        &[0.5],
        &geometric_grid(1e-9, 1e-6, 4),
        10_000,
        0,
    );
    assert!(matches!(r, Err(MeasureError::DegenerateFit { .. })));
}

#[test]
fn preconditions() {
    let u = uniform_box::<f64>(1, 100, 0.0, 1.0, 0);
    let diff = ConfigurationMap::difference(1);
    assert!(matches!(
        estimate_density(&diff, &u, &u, 0.01, None, 9_999, 0),
        Err(MeasureError::BudgetTooSmall { .. })
    ));
    let coarse = GridSpec::uniform(vec![-1.0], vec![1.0], 0.02).unwrap();
    assert!(matches!(
        estimate_density(&diff, &u, &u, 0.01, Some(&coarse), 10_000, 0),
        Err(MeasureError::ResolutionConflict { .. })
    ));
    let cantor = sample_ifs(&ifs_with_dimension::<f64>(1, 2, 0.63).unwrap(), 3, 100, 0).unwrap();
    assert!(matches!(
        estimate_density(&diff, &cantor, &cantor, 0.01, None, 10_000, 0),
        Err(MeasureError::BelowPositionalError { .. })
    ));
    let plane = uniform_box::<f64>(2, 100, 0.0, 1.0, 0);
    assert!(matches!(
        estimate_density(&diff, &plane, &u, 0.01, None, 10_000, 0),
        Err(MeasureError::DimensionMismatch { which: "mu1", .. })
    ));
}

#[test]
fn results_ignore_worker_count() {
    let sq = uniform_box::<f64>(2, 3000, 0.0, 1.0, 12);
    let run = || {
        let est = estimate_density(
            &ConfigurationMap::distance(2),
            &sq,
            &sq,
            0.02,
            None,
            300_000,
            13,
        )
        .unwrap();
        let mut csv = Vec::new();
        est.write_csv(&mut csv).unwrap();
        csv
    };
    let outs: Vec<Vec<u8>> = [1, 2, 8].into_iter().map(|t| in_pool(t, run)).collect();
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[0], outs[2]);
}

#[test]
fn csv_layout() {
    let x = uniform_box::<f64>(2, 100, 0.0, 1.0, 1);
    let est = estimate_density(
        &ConfigurationMap::difference(2),
        &x,
        &x,
        0.2,
        None,
        10_000,
        2,
    )
    .unwrap();
    let mut buf = Vec::new();
    est.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t1,t2,value,stderr"));
    assert_eq!(lines.count(), est.grid.len());
    let side = serde_json::to_value(est.sidecar()).unwrap();
    for key in ["map", "eps", "pairs_used", "seed", "grid"] {
        assert!(side.get(key).is_some(), "{key}");
    }
}

#[test]
fn lattice_set_has_no_interval() {
    let diff = ConfigurationMap::difference(1);
    let fl = falconer_lattice_set::<f64>(1, 0.5, 10, 1000, 19).unwrap();
    let est = estimate_density(&diff, &fl, &fl, 0.002, None, 1_000_000, 21).unwrap();
    let regions = detect_intervals(&est, default_delta(&est));
    assert!(regions.iter().all(|r| r.length() <= 0.05), "{regions:?}");

    let h = est.grid.step[0];
    let near: f64 = (0..est.grid.len())
        .filter(|&i| {
            let t = est.grid.coord(0, i) * 10.0;
            (t - t.round()).abs() / 10.0 <= 0.02 + 0.002
        })
        .map(|i| est.values[i] * h)
        .sum();
    assert!(near / est.riemann_sum() > 0.999, "{near}");

    let u = uniform_box::<f64>(1, 1000, 0.0, 1.0, 20);
    let est = estimate_density(&diff, &u, &u, 0.002, None, 1_000_000, 21).unwrap();
    let regions = detect_intervals(&est, default_delta(&est));
    assert!(regions.iter().any(|r| r.length() > 0.05));
}

#[test]
fn single_precision_density() {
    let g = midpoint_grid::<f32>(1, 400, 0.0, 1.0);
    let est: DensityEstimate<f32> = estimate_density(
        &ConfigurationMap::difference(1),
        &g,
        &g,
        0.02,
        None,
        160_000,
        0,
    )
    .unwrap();
    let mass = est.riemann_sum();
    assert!((mass - 1.0).abs() < 1e-3, "{mass}");
    let peak = est.value_near(&[0.0]).unwrap();
    assert!((peak - 1.0).abs() < 0.02, "{peak}");
}

#[test]
fn auto_grid_covers_the_range() {
    let u: SampledMeasure<f64> = uniform_box(1, 300, 0.0, 1.0, 5);
    let est = estimate_density(
        &ConfigurationMap::difference(1),
        &u,
        &u,
        0.05,
        None,
        90_000,
        6,
    )
    .unwrap();
    assert!(est.grid.lo[0] < -0.9 && est.grid.hi[0] > 0.9);
    assert!(est.grid.step[0] <= 0.025 + 1e-15);
    assert!((est.riemann_sum() - 1.0).abs() < 0.01);
}

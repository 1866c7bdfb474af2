//! Monte Carlo means against closed forms, at 10^5 paths and 4 standard errors.

use maxineq::montecarlo::{terminal_mean, McEstimate, McRunner};
use maxineq::simulators::{
    BranchingSpec, CsbpSpec, GbmSpec, LevyTriple, OffspringLaw, ProcessSpec, RandomWalkSpec,
    StepLaw, TimeGrid,
};

const PATHS: usize = 100_000;

fn within(est: &McEstimate, exact: f64, k: f64) {
    assert!(
        (est.mean - exact).abs() <= k * est.stderr,
        "estimate {} +- {} vs exact {exact}",
        est.mean,
        est.stderr
    );
}

fn check_mean(spec: ProcessSpec, grid: TimeGrid, g: impl Fn(f64) -> f64, exact: f64, seed: u64) {
    let runner = McRunner::new(PATHS, seed);
    let summaries = runner.summaries(&spec, grid).unwrap();
    within(&terminal_mean(&summaries, g), exact, 4.0);
}

#[test]
fn random_walk_exponential_mean() {
    let law = StepLaw::new(vec![0.5, -0.7, 0.1], vec![0.3, 0.3, 0.4]).unwrap();
    let n = 8;
    let exact = law.mgf(1.0).powi(n as i32);
    let spec = RandomWalkSpec::homogeneous(law, n, 0.0).unwrap();
    check_mean(
        ProcessSpec::RandomWalk(spec),
        TimeGrid::new(n as f64, 0),
        f64::exp,
        exact,
        1,
    );
}

#[test]
fn galton_watson_mean() {
    let offspring = OffspringLaw::new(vec![0.3, 0.3, 0.2, 0.2]).unwrap();
    let exact = 2.0 * offspring.mean().powi(5);
    let spec = ProcessSpec::GaltonWatson {
        offspring,
        generations: 5,
        initial: 2,
    };
    check_mean(spec, TimeGrid::new(5.0, 0), |x| x, exact, 2);
}

#[test]
fn levy_exponential_moment() {
    let triple = LevyTriple::new(
        0.4,
        -0.3,
        1.5,
        Some(StepLaw::new(vec![0.4, -0.6], vec![0.5, 0.5]).unwrap()),
    )
    .unwrap();
    let exact = triple.gamma();
    check_mean(
        ProcessSpec::Levy(triple),
        TimeGrid::new(1.0, 4),
        f64::exp,
        exact,
        3,
    );
}

#[test]
fn branching_mean() {
    let spec = BranchingSpec::new(OffspringLaw::new(vec![0.5, 0.2, 0.3]).unwrap(), 1.5, 2).unwrap();
    let exact = spec.mean(1.0);
    check_mean(
        ProcessSpec::Branching(spec),
        TimeGrid::new(1.0, 3),
        |x| x,
        exact,
        4,
    );
}

#[test]
fn gbm_mean() {
    let spec = GbmSpec::new(-0.3, 0.6, 1.5).unwrap();
    let exact = spec.mean(2.0);
    check_mean(
        ProcessSpec::Gbm(spec),
        TimeGrid::new(2.0, 4),
        |x| x,
        exact,
        5,
    );
}

#[test]
fn csbp_mean() {
    // full-truncation Euler keeps the mean up to O(dt); 2^10 steps is ample
    let spec = CsbpSpec::new(-0.5, 0.8, 1.0).unwrap();
    let exact = spec.mean(1.0);
    check_mean(
        ProcessSpec::Csbp(spec),
        TimeGrid::new(1.0, 10),
        |x| x,
        exact,
        6,
    );
}

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

#[test]
fn levy_increments_are_stationary() {
    let triple = LevyTriple::new(
        0.5,
        0.2,
        2.0,
        Some(StepLaw::new(vec![0.3, -0.8], vec![0.6, 0.4]).unwrap()),
    )
    .unwrap();
    let spec = ProcessSpec::Levy(triple);
    let grid = TimeGrid::new(1.0, 1);
    let n = 20_000;
    let paths = McRunner::new(n, 7)
        .map(|seed| spec.sample_values(grid, seed, u64::MAX))
        .unwrap();
    let first: Vec<f64> = paths.iter().map(|v| v[1] - v[0]).collect();
    let second: Vec<f64> = paths.iter().map(|v| v[2] - v[1]).collect();
    let d = ks_statistic(first, second);
    // two-sample critical value at level 0.001
    let crit = 1.95 * (2.0 / n as f64).sqrt();
    assert!(d < crit, "KS statistic {d} exceeds {crit}");
}

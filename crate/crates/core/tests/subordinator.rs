use std::sync::OnceLock;

use levy_limits::stats::{mean_estimate, variance_estimate};
use levy_limits::subordinator::*;
use levy_limits::Error;

fn law() -> &'static SubordinatorLaw {
    static LAW: OnceLock<SubordinatorLaw> = OnceLock::new();
    LAW.get_or_init(|| SubordinatorLaw::wright_fisher_arbitrated(2.0, 1.0, DEFAULT_ZEROS).unwrap())
}

fn samples() -> &'static Vec<f64> {
    static XS: OnceLock<Vec<f64>> = OnceLock::new();
    XS.get_or_init(|| {
        IncrementSampler::new(law(), DEFAULT_CUTOFF, DEFAULT_JUMP_BUDGET)
            .unwrap()
            .sample_many(1.0, 100_000, 20_240_601)
            .unwrap()
    })
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn exactly_one_convention_matches() {
    let r = arbitrate(2.0, 1.0, &[0.5, 1.0, 2.0], 10_000).unwrap();
    assert_eq!(r.selected, Some(MixtureConvention::PartialFraction));
    assert!(r.max_gaps[1] <= 1e-4);
    assert!(r.max_gaps[0] > 10.0 * 1e-4);
    for &beta in &[1.5, 3.0] {
        let r = arbitrate(beta, 1.0, &[0.5, 1.0, 2.0], 10_000).unwrap();
        assert_eq!(r.selected, Some(MixtureConvention::PartialFraction));
    }
}

#[test]
fn lk_sum_stable_under_doubling() {
    let a = lk_consistency(law(), 1.0, 10_000).unwrap();
    let b = lk_consistency(law(), 1.0, 20_000).unwrap();
    assert!(a.abs_gap <= 1e-4 && b.abs_gap <= 1e-4);
    assert!((a.value - b.value).abs() < 1e-8);
    assert!(lk_consistency(law(), 1e-9, 10_000).unwrap().value < 1e-9);
}

#[test]
fn jump_density_shape() {
    let t1 = law().jump_mixture[0];
    let lead = t1.weight * t1.rate * (-t1.rate * 5.0).exp();
    assert!((jump_density(law(), 5.0, 10).unwrap() / lead - 1.0).abs() < 1e-6);
    let a = jump_density(law(), 1e-4, 10).unwrap();
    let b = jump_density(law(), 1e-2, 10).unwrap();
    let c = jump_density(law(), 1.0, 10).unwrap();
    assert!(a > b && b > c);
    assert!(jump_density(law(), 0.0, 10).is_err());
}

#[test]
fn density_integrates_to_exponent() {
    // ∫(1 − e^{−x})π(x)dx with x = u², integrand bounded at the origin
    let g = |u: f64| {
        let x = u * u;
        2.0 * u * (-(-x).exp_m1()) * jump_density(law(), x, 64).unwrap()
    };
    // π(x) ~ x^{−3/2} leaves a finite nonzero limit at u = 0
    let h = 0.05 / 400.0;
    let f = |u: f64| if u == 0.0 { 2.0 * g(h) - g(2.0 * h) } else { g(u) };
    let head = simpson(f, 0.0, 0.05, 400);
    let body = simpson(f, 0.05, 7.0, 4000);
    let phi = law().exponent.evaluate(1.0).unwrap();
    assert!(((head + body) / phi - 1.0).abs() < 1e-6, "{}", head + body);
}

#[test]
fn cumulant_anchors() {
    let k = law().cumulants(6).unwrap();
    let slope = law().exponent.slope_at_zero(1e-5).unwrap();
    assert!((k[0] - slope).abs() < 1e-8);
    assert!(k.iter().all(|&v| v > 0.0));
    // mixture moments n! Σ w/ρⁿ with the integral tail
    for n in 2..=3usize {
        let mut s: f64 = law().jump_mixture.iter().rev().map(|t| t.weight / t.rate.powi(n as i32)).sum();
        let a = std::f64::consts::PI / 2.0;
        let edge = law().jump_mixture.len() as f64 + 0.5 + 0.25;
        s += a.powi(-2 * n as i32) * edge.powi(1 - 2 * n as i32) / (2.0 * n as f64 - 1.0);
        let fact = (1..=n).product::<usize>() as f64;
        assert!((k[n - 1] / (fact * s) - 1.0).abs() < 1e-6, "n = {n}");
    }
}

#[test]
fn moments_from_cumulants() {
    let k = law().cumulants(4).unwrap();
    let m = law().moments(1.0, 4).unwrap();
    assert_eq!(m[0], 1.0);
    assert_eq!(m[1], k[0]);
    assert!((m[2] - (k[0] * k[0] + k[1])).abs() < 1e-15);
    assert!(m[2] - m[1] * m[1] >= 0.0);
    assert!(law().moments(0.0, 4).unwrap()[1..].iter().all(|&v| v == 0.0));
    // degree ≤ n in t: the (n+1)-th finite difference vanishes
    let ts = [0.5, 1.0, 1.5, 2.0, 2.5];
    let m3: Vec<f64> = ts.iter().map(|&t| law().moments(t, 3).unwrap()[3]).collect();
    let d4 = m3[4] - 4.0 * m3[3] + 6.0 * m3[2] - 4.0 * m3[1] + m3[0];
    assert!(d4.abs() < 1e-12);
}

#[test]
fn moment_dichotomy() {
    assert!(matches!(jump_moment(law(), 0.4, 10_000).unwrap(), JumpMoment::Divergent { .. }));
    let a = jump_moment(law(), 0.6, 10_000).unwrap();
    let b = jump_moment(law(), 0.6, 20_000).unwrap();
    match (a, b) {
        (JumpMoment::Finite(a), JumpMoment::Finite(b)) => assert!((a - b).abs() < 1e-4),
        other => panic!("expected finite moments, got {other:?}"),
    }
    match jump_moment(law(), 1.0, 10_000).unwrap() {
        JumpMoment::Finite(v) => assert!((v - law().cumulants(1).unwrap()[0]).abs() < 1e-6),
        other => panic!("{other:?}"),
    }
}

#[test]
fn sampled_increments_match_cumulants() {
    let k = law().cumulants(2).unwrap();
    let m = mean_estimate(samples());
    let v = variance_estimate(samples());
    assert!(m.within(k[0], 3.0), "{m:?}");
    assert!(v.within(k[1], 3.0), "{v:?}");
    assert_eq!(sample_increment(law(), 0.0, 1e-6, 1).unwrap(), 0.0);
}

#[test]
fn laplace_round_trip() {
    let xs = samples();
    for &mu in &[0.5, 1.0, 2.0] {
        let e: Vec<f64> = xs.iter().map(|x| (-mu * x).exp()).collect();
        let est = mean_estimate(&e);
        let phi_hat = -est.value.ln();
        let se = est.se / est.value;
        let phi = law().exponent.evaluate(mu).unwrap();
        // compensation replaces small jumps by their mean: bias ≤ μ²∫_0^ε x²π/2
        let allowance = mu * mu * 1e-6f64.sqrt();
        assert!((phi_hat - phi).abs() <= 3.0 * se + allowance, "mu = {mu}");
    }
}

#[test]
fn budget_guard() {
    let s = IncrementSampler::new(law(), 1e-6, 1e3).unwrap();
    let mut rng = levy_limits::rng::substream(1, 0);
    assert!(matches!(s.sample(10.0, &mut rng), Err(Error::CutoffTooSmall { .. })));
}

#[test]
fn sampling_is_deterministic() {
    let s = IncrementSampler::new(law(), 1e-4, DEFAULT_JUMP_BUDGET).unwrap();
    assert_eq!(s.sample_many(1.0, 50, 3).unwrap(), s.sample_many(1.0, 50, 3).unwrap());
    assert_ne!(s.sample_many(1.0, 50, 3).unwrap(), s.sample_many(1.0, 50, 4).unwrap());
}

#[test]
fn exponent_shape() {
    let e = &law().exponent;
    assert_eq!(e.evaluate(0.0).unwrap(), 0.0);
    let grid: Vec<f64> = (1..200).map(|i| 0.05 * i as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&m| e.evaluate(m).unwrap()).collect();
    for i in 1..vals.len() - 1 {
        assert!(vals[i + 1] - 2.0 * vals[i] + vals[i - 1] <= 1e-13);
        assert!(vals[i + 1] / grid[i + 1] < vals[i] / grid[i]);
    }
    assert!(e.evaluate(1e6).unwrap() / 1e6 < 1e-2);
}

use levy_limits::wf_exponent::*;
use proptest::prelude::*;

/// `Σ μ^k / (k! (b)_k)` summed directly.
fn hyp0f1(b: f64, mu: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= mu / (k as f64 * (b + k as f64 - 1.0));
        sum += term;
    }
    sum
}

/// `I_ν(x)` from its defining series, independent of the library.
fn bessel_i_series(nu: f64, x: f64) -> f64 {
    let lg = |v: f64| {
        // Γ(v) for v > 0 by recurrence onto Stirling's range.
        let mut v = v;
        let mut shift = 0.0;
        while v < 20.0 {
            shift -= v.ln();
            v += 1.0;
        }
        shift + (v - 0.5) * v.ln() - v + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * v) - 1.0 / (360.0 * v.powi(3))
            + 1.0 / (1260.0 * v.powi(5))
    };
    let mut sum = 0.0;
    for k in 0..200 {
        let kf = k as f64;
        sum += ((2.0 * kf + nu) * (0.5 * x).ln() - lg(kf + 1.0) - lg(kf + nu + 1.0)).exp();
    }
    sum
}

fn scaling(tau: f64) -> WfScaling {
    WfScaling::along(tau, 2.0, 1.0, 1.0).unwrap()
}

#[test]
fn integrals_match_beta_moment_series() {
    for &tau in &[1e-1, 1e-2, 1e-3] {
        for &mu in &[0.5, 2.0] {
            let p = scaling(tau);
            let opts = WfExponentOptions {
                tail_tol: 1e-4,
                ..Default::default()
            };
            let seq = wf_coefficients_adaptive(&p, mu, &opts).unwrap();
            // E[(1−X)^k] = (β)_k/(a+β)_k for X ~ Beta(a, β)
            let moment_sum = |a: f64| {
                let mut m = 1.0;
                let mut s = 0.0;
                for (k, c) in seq.coefficients.iter().enumerate() {
                    if k > 0 {
                        let j = (k - 1) as f64;
                        m *= (p.beta + j) / (a + p.beta + j);
                    }
                    s += c * m;
                }
                s
            };
            let speed = moment_sum(p.alpha);
            let repr = p.alpha / (p.tau * (p.alpha + p.beta)) * moment_sum(p.alpha + 1.0);
            let got = wf_integrals(&p, mu, &opts).unwrap();
            assert!((got.against_speed / speed - 1.0).abs() < 1e-10, "tau = {tau}, mu = {mu}");
            assert!((got.against_representing / repr - 1.0).abs() < 1e-10, "tau = {tau}, mu = {mu}");
        }
    }
}

#[test]
fn prelimit_near_limit() {
    let p = WfScaling::new(1e-3, 1e-3, 2.0, 1.0, 1.0).unwrap();
    let v = wf_phi_n(&p, 1.0).unwrap();
    assert!((v / 0.433128 - 1.0).abs() < 0.02);
}

#[test]
fn prelimit_vanishes_at_zero_and_is_monotone() {
    let p = scaling(1e-2);
    assert_eq!(wf_phi_n(&p, 0.0).unwrap(), 0.0);
    assert!(wf_phi_n(&p, 1e-8).unwrap() < 1e-8);
    let mut prev = 0.0;
    for i in 1..=20 {
        let v = wf_phi_n(&p, 0.25 * i as f64).unwrap();
        assert!(v > prev);
        prev = v;
    }
}

#[test]
fn prelimit_gap_shrinks_along_sequence() {
    for &mu in &[0.5, 1.0, 2.0] {
        let lim = wf_phi_limit(mu, 2.0, 1.0).unwrap();
        let gaps: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&t| (wf_phi_n(&scaling(t), mu).unwrap() - lim).abs())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
        assert!(gaps[2] <= 0.01 * lim);
    }
}

#[test]
fn limit_against_series_oracle() {
    assert_eq!(wf_phi_limit(0.0, 2.0, 1.0).unwrap(), 0.0);
    let oracle = bessel_i_series(2.0, 2.0) / bessel_i_series(1.0, 2.0);
    assert!((oracle - 0.433128).abs() < 1e-6);
    assert!((wf_phi_limit(1.0, 2.0, 1.0).unwrap() / oracle - 1.0).abs() < 1e-12);
    for &beta in &[1.5, 2.0, 3.0] {
        for &mu in &[0.1, 1.0, 7.0] {
            let o = mu / beta * hyp0f1(beta + 1.0, mu) / hyp0f1(beta, mu);
            assert!((wf_phi_limit(mu, beta, 1.0).unwrap() / o - 1.0).abs() < 1e-12);
        }
    }
    let slope = wf_phi_limit(1e-6, 2.0, 1.0).unwrap() / 1e-6;
    assert!((slope / 0.5 - 1.0).abs() < 1e-4);
}

#[test]
fn continued_fraction() {
    assert_eq!(wf_phi_cf(1.0, 2.0, 1).unwrap(), 0.5);
    for &beta in &[1.5, 2.0, 3.0] {
        for &mu in &[0.25, 0.5, 1.0, 2.0, 4.0] {
            let cf = wf_phi_cf(mu, beta, 40).unwrap();
            assert!((cf - wf_phi_limit(mu, beta, 1.0).unwrap()).abs() <= 1e-10);
        }
    }
}

#[test]
fn limit_coefficients_sum_to_bessel() {
    let seq = wf_limit_coefficients(1.0f64, 2.0, 60).unwrap();
    let total: f64 = seq.coefficients.iter().sum();
    let oracle = bessel_i_series(1.0, 2.0);
    assert!((oracle - 1.5906369).abs() < 1e-7);
    assert!((total / oracle - 1.0).abs() < 1e-11);
    assert!((total / hyp0f1(2.0, 1.0) - 1.0).abs() < 1e-14);
    assert!((u_mu(&seq, 0.0, 1e-12).unwrap() / total - 1.0).abs() < 1e-14);
}

#[test]
fn u_decreasing_with_boundary_slope() {
    for &tau in &[1e-2, 1e-3] {
        let p = scaling(tau);
        let seq = wf_coefficients_adaptive(&p, 1.5, &WfExponentOptions::default()).unwrap();
        assert_eq!(u_mu(&seq, 1.0, 1e-4).unwrap(), 1.0);
        let slope = u_mu_derivative_at_one(&seq);
        assert!((slope + (p.lambda * p.tau + 1.5) / p.beta).abs() < 1e-8);
        // one-sided difference quotient agrees with the series derivative
        let h = 1e-6;
        let fd = (1.0 - u_mu(&seq, 1.0 - h, 1e-4).unwrap()) / h;
        assert!((fd - slope).abs() < 1e-5);
        let mut prev = f64::INFINITY;
        for i in 0..=200 {
            let v = u_mu(&seq, i as f64 / 200.0, 1e-4).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }
}

#[test]
fn truncation_refused_when_tail_too_large() {
    let p = scaling(1e-1);
    let seq = wf_coefficients(&p, 1.0, 10).unwrap();
    assert!(u_mu(&seq, 0.5, 1e-12).is_err());
    let opts = WfExponentOptions {
        max_truncation: 400,
        tail_tol: 1e-9,
        ..Default::default()
    };
    assert!(wf_phi_n_with(&p, 1.0, &opts).is_err());
}

#[test]
fn decay_constants() {
    let lim = wf_limit_coefficients(1.0f64, 2.0, 400).unwrap();
    let r = coefficient_decay_check(&lim, 0.5).unwrap();
    assert!(r.constant < 1.0);
    let zero = wf_limit_coefficients(0.0f64, 2.0, 400).unwrap();
    assert!(coefficient_decay_check(&zero, 0.5).unwrap().constant <= 1.0);

    let p = WfScaling::new(1e-3, 1e-3, 2.0, 1.0, 1.0).unwrap();
    let a = coefficient_decay_check(&wf_coefficients(&p, 4.0, 200).unwrap(), 0.5).unwrap();
    let b = coefficient_decay_check(&wf_coefficients(&p, 4.0, 400).unwrap(), 0.5).unwrap();
    assert!(a.stable_against(&b, 0.01));
}

#[test]
fn coefficients_converge_at_rate_tau() {
    let lim = wf_limit_coefficients(1.0f64, 2.0, 10).unwrap();
    let gap = |tau: f64| -> Vec<f64> {
        let s = wf_coefficients(&scaling(tau), 1.0, 10).unwrap();
        s.coefficients.iter().zip(&lim.coefficients).map(|(a, b)| (a - b).abs()).collect()
    };
    let g1 = gap(2e-3);
    let g2 = gap(1e-3);
    for k in 1..=10 {
        let ratio = g2[k] / g1[k];
        assert!(ratio > 0.45 && ratio < 0.55, "k = {k}, ratio = {ratio}");
    }
}

#[test]
fn total_coefficient_gap_shrinks() {
    let lim = wf_limit_coefficients(1.0f64, 2.0, 400).unwrap();
    let gaps: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&t| coefficient_gap(&wf_coefficients(&scaling(t), 1.0, 400).unwrap(), &lim))
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
}

#[test]
fn measure_integrals_approach_limits() {
    let mu = 1.0;
    let m_lim = hyp0f1(2.0, mu);
    let k_lim = hyp0f1(3.0, mu);
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for &tau in &[1e-1, 1e-2, 1e-3] {
        let p = scaling(tau);
        let opts = WfExponentOptions {
            tail_tol: 1e-4,
            ..Default::default()
        };
        let i = wf_integrals(&p, mu, &opts).unwrap();
        let m_gap = (i.against_speed - m_lim).abs();
        let k_gap = ((p.tau / p.alpha) * (p.alpha + p.beta) * i.against_representing - k_lim).abs();
        assert!(m_gap < prev.0 && k_gap < prev.1);
        prev = (m_gap, k_gap);
    }
    assert!(prev.0 < 1e-2 && prev.1 < 1e-2);
}

#[test]
fn worker_order_independent() {
    let mus: Vec<f64> = (1..=8).map(|i| 0.5 * i as f64).collect();
    let p = scaling(1e-2);
    let serial: Vec<u64> = mus.iter().map(|&m| wf_phi_n(&p, m).unwrap().to_bits()).collect();
    let handles: Vec<_> = mus
        .iter()
        .rev()
        .map(|&m| std::thread::spawn(move || wf_phi_n(&scaling(1e-2), m).unwrap().to_bits()))
        .collect();
    let mut parallel: Vec<u64> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    parallel.reverse();
    assert_eq!(serial, parallel);
}

proptest! {
    #[test]
    fn convergents_alternate(mu in 0.05f64..6.0, beta in 1.05f64..4.0) {
        let target = wf_phi_limit(mu, beta, 1.0).unwrap();
        let diffs: Vec<f64> = (1..12)
            .map(|d| wf_phi_cf(mu, beta, d).unwrap() - target)
            .take_while(|d| d.abs() > 1e-13 * target)
            .collect();
        for w in diffs.windows(2) {
            prop_assert!(w[0] * w[1] < 0.0);
        }
        prop_assert!(diffs[0] > 0.0);
    }

    #[test]
    fn limit_exponent_concave(mu in 0.01f64..50.0, beta in 1.05f64..4.0) {
        let h = 1e-2 * mu;
        let f = |m: f64| wf_phi_limit(m, beta, 1.0).unwrap();
        prop_assert!(f(mu + h) - 2.0 * f(mu) + f(mu - h) <= 1e-12);
        prop_assert!(f(mu + h) > f(mu));
    }

    #[test]
    fn limit_recursion_exact(mu in 0.0f64..5.0, beta in 1.05f64..4.0) {
        let s = wf_limit_coefficients(mu, beta, 80).unwrap();
        prop_assert!(s.recursion_residual() <= 1e-14);
    }
}

use levy_limits::analytic::*;
use levy_limits::specfun::{gamma, kummer_u};

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `Φ_n` straight from `φ(x) = e^{Lx} U(A, α, Sx)` integrated against the
/// Gamma(α, β) law, with `x = y^{1/α}` to absorb the origin singularity.
fn feller_kummer_oracle(n: f64, alpha: f64, beta: f64, lambda: f64, mu: f64) -> f64 {
    let aux = FellerAux::new(n, alpha, beta, lambda, mu);
    let phi = |x: f64| (aux.l * x).exp() * kummer_u(aux.a_n, alpha, aux.s * x).unwrap();
    let top = (40.0 / beta).powf(alpha);
    let integrand = |y: f64, power: i32| {
        if y == 0.0 {
            return if power == 0 { phi(1e-300) } else { 0.0 };
        }
        let x = y.powf(1.0 / alpha);
        phi(x) * x.powi(power) * (-beta * x).exp()
    };
    let m0 = simpson(|y| integrand(y, 0), 0.0, top, 4000);
    let m1 = simpson(|y| integrand(y, 1), 0.0, top, 4000);
    mu * n * m1 / m0
}

#[test]
fn kummer_form_solves_generator_equation() {
    let (n, alpha, beta, lambda, mu) = (10.0, 0.1, 2.0, 1.0, 1.0);
    let aux = FellerAux::new(n, alpha, beta, lambda, mu);
    let phi = |x: f64| (aux.l * x).exp() * kummer_u(aux.a_n, alpha, aux.s * x).unwrap();
    for &x in &[0.5, 1.0, 2.0] {
        let h = 1e-3;
        let d1 = (phi(x + h) - phi(x - h)) / (2.0 * h);
        let d2 = (phi(x + h) - 2.0 * phi(x) + phi(x - h)) / (h * h);
        let res = n * x * d2 + n * (alpha - beta * x) * d1 - (lambda + mu * n * x) * phi(x);
        assert!(res.abs() < 1e-4 * (lambda + mu * n * x) * phi(x), "x = {x}, res = {res}");
    }
}

#[test]
fn beta_integral_form_matches_kummer_oracle() {
    for &(n, alpha) in &[(10.0, 0.1), (20.0, 0.05)] {
        for &mu in &[0.5, 2.0] {
            let got = feller_phi_n(n, alpha, 2.0, 1.0, mu).unwrap();
            let oracle = feller_kummer_oracle(n, alpha, 2.0, 1.0, mu);
            assert!((got / oracle - 1.0).abs() < 1e-6, "n = {n}, mu = {mu}: {got} vs {oracle}");
            // the factor (1 + A) multiplying instead of dividing misses
            let a = FellerAux::new(n, alpha, 2.0, 1.0, mu).a_n;
            assert!((got * (1.0 + a).powi(2) / oracle - 1.0).abs() > 1e-2);
        }
    }
}

#[test]
fn feller_prelimit_converges() {
    for &mu in &[0.5, 1.0, 2.0] {
        let lim = feller_phi_limit(mu, 2.0, 1.0).unwrap();
        let gaps: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&n| (feller_phi_n(n, 1.0 / n, 2.0, 1.0, mu).unwrap() - lim).abs())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
    }
    let v = feller_phi_n(1e4, 1e-4, 2.0, 1.0, 2.0).unwrap();
    assert!((v / (4.0 / (2.0 + 12f64.sqrt())) - 1.0).abs() < 0.01);
    let mut prev = 0.0;
    for i in 1..30 {
        let v = feller_phi_n(1e3, 1e-3, 2.0, 1.0, 0.2 * i as f64).unwrap();
        assert!(v > prev);
        prev = v;
    }
    assert!(feller_phi_n(1e3, 1e-3, 2.0, 1.0, 1e-9).unwrap() < 1e-9);
}

#[test]
fn feller_limit_slope() {
    let h = 1e-6;
    let slope: f64 = feller_phi_limit(h, 2.0, 1.0).unwrap() / h;
    assert!((slope / 0.5 - 1.0).abs() < 1e-4);
}

#[test]
fn inverse_gaussian_fit() {
    let mus: Vec<f64> = (0..=200).map(|i| 0.05 * i as f64).collect();
    for &(beta, gamma_) in &[(2.0, 1.0), (3.0, 1.5), (1.2, 0.4)] {
        let fit = ig_parameter_fit(beta, gamma_, &mus).unwrap();
        assert!(fit.max_abs_gap <= 1e-10);
        assert!((fit.mean - gamma_ / beta).abs() < 1e-12);
        assert!((fit.shape - gamma_ * gamma_ / 2.0).abs() < 1e-12);
    }
    // the pairing Λ = γ²/β only reproduces the limit at β = 2
    let mus: Vec<f64> = (1..=10).map(|i| i as f64).collect();
    let off = mus
        .iter()
        .map(|&m| (inverse_gaussian_exponent(m, 1.5 / 3.0, 1.5 * 1.5 / 3.0) - feller_phi_limit(m, 3.0, 1.5).unwrap()).abs())
        .fold(0.0, f64::max);
    assert!(off > 1e-3);
}

#[test]
fn rbm_degenerate_limit() {
    let n: f64 = 1e6;
    let b = n.powf(-0.25);
    let one = rbm_phi_n(n, b, 1.0, 1.0).unwrap();
    for &mu in &[0.5, 1.0, 2.0] {
        let v = rbm_phi_n(n, b, 1.0, mu).unwrap();
        assert!((v / mu - 1.0).abs() < 0.02, "mu = {mu}");
    }
    assert!((rbm_phi_n(n, b, 1.0, 2.0).unwrap() / one / 2.0 - 1.0).abs() < 0.03);
    let five = rbm_phi_n(n, b, 5.0, 1.0).unwrap();
    assert!((five / one - 1.0).abs() < 0.01);
    let gaps: Vec<f64> = [1e4, 1e6, 1e8]
        .iter()
        .map(|&n: &f64| (rbm_phi_n(n, n.powf(-0.25), 1.0, 1.0).unwrap() - 1.0).abs())
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
}

#[test]
fn airy_ratio_limits_and_sandwich() {
    let c = 400.0;
    // ρ = c^{1/2} γ / δ = 1
    let v = airy_laplace_ratio(c, 1.0, 20.0, 1.0).unwrap();
    assert!((v / 0.25 - 1.0).abs() < 0.01);
    let (lo, hi) = airy_laplace_bounds(c, 1.0, 20.0, 1.0).unwrap();
    assert!(lo <= v && v <= hi);
    let z = airy_laplace_ratio(c, 1e-4, 20.0, 1.0).unwrap();
    assert!((z - 1.0).abs() < 0.01);
    for &(c, g, d, a) in &[(50.0, 0.3, 2.0, 0.5), (900.0, 2.0, 30.0, 2.0), (5.0, 1.0, 1.0, 1.0)] {
        let v = airy_laplace_ratio(c, g, d, a).unwrap();
        let (lo, hi) = airy_laplace_bounds(c, g, d, a).unwrap();
        assert!(lo <= v && v <= hi, "c = {c}");
    }
}

#[test]
fn airy_ratio_against_direct_quadrature() {
    // moderate c keeps Ai representable without logs
    let (c, g, d, a): (f64, f64, f64, f64) = (3.0, 0.7, 1.3, 1.0);
    let ai = |x: f64| levy_limits::specfun::airy_ai(x);
    let f = |x: f64| d.powf(1.0 + a) / gamma(1.0 + a).unwrap() * (-d * x).exp() * x.powf(a) * ai(c + g * x);
    let direct = simpson(f, 0.0, 60.0, 20_000) / ai(c);
    assert!((airy_laplace_ratio(c, g, d, a).unwrap() / direct - 1.0).abs() < 1e-9);
}

//! Rayleigh functions `σ_n(ν) = Σ_m j_{ν,m}^{−2n}`.

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Table `σ_1(ν) … σ_N(ν)` built by the convolution recursion
/// `σ_n = (ν + n)^{-1} Σ_{k=1}^{n−1} σ_k σ_{n−k}`, `σ_1 = 1/(4(ν + 1))`.
#[derive(Debug, Clone)]
pub struct RayleighTable<T> {
    nu: T,
    sigma: Vec<T>,
}

impl<T: Real> RayleighTable<T> {
    pub fn new(nu: T) -> Result<Self> {
        if !(nu > -T::one()) {
            return Err(domain("rayleigh_sigma", format!("order {nu:?} must exceed -1")));
        }
        Ok(Self { nu, sigma: Vec::new() })
    }

    pub fn order(&self) -> T {
        self.nu
    }

    /// `σ_n(ν)`, extending the table on demand. `n` starts at 1.
    pub fn get(&mut self, n: usize) -> Result<T> {
        if n == 0 {
            return Err(domain("rayleigh_sigma", "index n must be at least 1"));
        }
        while self.sigma.len() < n {
            let next = self.sigma.len() + 1;
            let value = if next == 1 {
                T::one() / (T::lit(4.0) * (self.nu + T::one()))
            } else {
                let conv = (1..next).fold(T::zero(), |acc, k| acc + self.sigma[k - 1] * self.sigma[next - k - 1]);
                conv / (self.nu + T::from_usize_lossy(next))
            };
            self.sigma.push(value);
        }
        Ok(self.sigma[n - 1])
    }

    /// `σ_1 … σ_n` as a slice.
    pub fn up_to(&mut self, n: usize) -> Result<&[T]> {
        self.get(n.max(1))?;
        Ok(&self.sigma[..n])
    }
}

/// Single Rayleigh value `σ_n(ν)`.
pub fn rayleigh_sigma<T: Real>(nu: T, n: usize) -> Result<T> {
    RayleighTable::new(nu)?.get(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_values() {
        assert_eq!(rayleigh_sigma(1.0f64, 1).unwrap(), 0.125);
        assert!((rayleigh_sigma(1.0f64, 2).unwrap() - 1.0 / 192.0).abs() < 1e-18);
        for &nu in &[-0.5f64, 0.0, 0.5, 2.0, 7.3] {
            assert!((rayleigh_sigma(nu, 1).unwrap() * 4.0 * (nu + 1.0) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn f32_table() {
        let mut t = RayleighTable::new(1.0f32).unwrap();
        assert!((t.get(2).unwrap() - 1.0 / 192.0).abs() < 1e-8);
        assert_eq!(t.up_to(3).unwrap().len(), 3);
    }

    #[test]
    fn domain_errors() {
        assert!(rayleigh_sigma(-1.0f64, 1).is_err());
        assert!(rayleigh_sigma(0.0f64, 0).is_err());
    }
}

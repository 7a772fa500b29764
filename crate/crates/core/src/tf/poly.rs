use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real polynomial in `s`, coefficients in ascending powers (`coeffs[k]` multiplies `s^k`).
///
/// Trailing (highest-power) zero coefficients are trimmed on construction,
/// so the last stored coefficient is always nonzero. The zero polynomial
/// has no coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

/// Relative backward-error bound a root must satisfy.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-8;

impl Polynomial {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs = coeffs.into();
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// Monic polynomial with the given roots. Complex roots must come in
    /// conjugate pairs; imaginary residue in the product is dropped.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (k, &c) in acc.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            acc = next;
        }
        Self::new(acc.into_iter().map(|c| c.re).collect::<Vec<_>>())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    /// Coefficient of `s^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    /// `Σ |c_k|·|s|^k`, the natural scale for the residual at `s`.
    fn magnitude_bound(&self, s: Complex64) -> f64 {
        let r = s.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect::<Vec<_>>(),
        )
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect::<Vec<_>>())
    }

    /// Lowest power with a nonzero coefficient, i.e. the multiplicity of the
    /// root at the origin.
    pub fn low_order(&self) -> Option<usize> {
        self.coeffs.iter().position(|&c| c != 0.0)
    }

    /// Relative residual `|p(z)| / Σ|c_k||z|^k` of a candidate root.
    pub fn relative_residual(&self, z: Complex64) -> f64 {
        let bound = self.magnitude_bound(z);
        if bound == 0.0 {
            0.0
        } else {
            self.eval_complex(z).norm() / bound
        }
    }

    /// All complex roots (rad/s when `s` is the Laplace variable).
    ///
    /// Eigenvalues of the companion matrix of the variable-scaled monic
    /// polynomial, refined by Newton steps, with conjugate pairing
    /// enforced and every root checked against [`ROOT_RESIDUAL_TOL`].
    /// A nonzero constant has no roots; the zero polynomial is rejected.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let Some(degree) = self.degree() else {
            return Err(Error::ZeroPolynomial);
        };
        let origin = self.low_order().unwrap_or(0);
        let mut roots = vec![Complex64::new(0.0, 0.0); origin];
        let reduced = &self.coeffs[origin..];
        let n = degree - origin;

        if n == 1 {
            roots.push(Complex64::new(-reduced[0] / reduced[1], 0.0));
        } else if n > 1 {
            // Substitute s = σ·x so that the monic polynomial in x has a unit
            // constant term; this balances coefficients spanning many decades.
            let lead = reduced[n];
            let sigma = (reduced[0] / lead).abs().powf(1.0 / n as f64);
            let monic: Vec<f64> = (0..n)
                .map(|k| reduced[k] / lead / sigma.powi((n - k) as i32))
                .collect();
            let mut companion = DMatrix::<f64>::zeros(n, n);
            for i in 1..n {
                companion[(i, i - 1)] = 1.0;
            }
            for k in 0..n {
                companion[(k, n - 1)] = -monic[k];
            }
            let eig = companion.complex_eigenvalues();
            if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Eigen);
            }
            roots.extend(eig.iter().map(|z| Complex64::new(z.re * sigma, z.im * sigma)));
        }

        let dp = self.derivative();
        for z in roots.iter_mut().skip(origin) {
            *z = self.polish(&dp, *z);
        }
        let mut roots = pair_conjugates(roots);
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

        for &z in &roots {
            let residual = self.relative_residual(z);
            if !(residual <= ROOT_RESIDUAL_TOL) {
                return Err(Error::RootResidual {
                    re: z.re,
                    im: z.im,
                    residual,
                });
            }
        }
        Ok(roots)
    }

    fn polish(&self, dp: &Polynomial, mut z: Complex64) -> Complex64 {
        let mut best = self.relative_residual(z);
        for _ in 0..4 {
            let slope = dp.eval_complex(z);
            if slope.norm() == 0.0 {
                break;
            }
            let candidate = z - self.eval_complex(z) / slope;
            let residual = self.relative_residual(candidate);
            if !(residual < best) {
                break;
            }
            z = candidate;
            best = residual;
        }
        z
    }
}

/// Snap near-real roots onto the real axis and make complex roots exact
/// conjugate pairs.
fn pair_conjugates(roots: Vec<Complex64>) -> Vec<Complex64> {
    const REAL_TOL: f64 = 1e-7;
    let (real, mut complex): (Vec<_>, Vec<_>) = roots
        .into_iter()
        .partition(|z| z.im.abs() <= REAL_TOL * z.norm());
    let mut out: Vec<Complex64> = real.into_iter().map(|z| Complex64::new(z.re, 0.0)).collect();

    complex.sort_by(|a, b| b.im.total_cmp(&a.im));
    while let Some(upper) = complex.first().copied() {
        complex.remove(0);
        let partner = complex
            .iter()
            .enumerate()
            .filter(|(_, z)| z.im < 0.0)
            .min_by(|(_, a), (_, b)| (upper.conj() - **a).norm().total_cmp(&(upper.conj() - **b).norm()))
            .map(|(i, _)| i);
        match partner {
            Some(i) => {
                let lower = complex.remove(i);
                let z = Complex64::new(0.5 * (upper.re + lower.re), 0.5 * (upper.im - lower.im).abs());
                out.push(z);
                out.push(z.conj());
            }
            // An unpaired complex root cannot come from real coefficients;
            // keep it and let the residual check decide.
            None => out.push(upper),
        }
    }
    out
}

fn combine(a: &[f64], b: &[f64], op: impl Fn(f64, f64) -> f64) -> Polynomial {
    let n = a.len().max(b.len());
    Polynomial::new(
        (0..n)
            .map(|k| op(a.get(k).copied().unwrap_or(0.0), b.get(k).copied().unwrap_or(0.0)))
            .collect::<Vec<_>>(),
    )
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        combine(&self.coeffs, &rhs.coeffs, |x, y| x + y)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        combine(&self.coeffs, &rhs.coeffs, |x, y| x - y)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            let m = c.abs();
            match k {
                0 => write!(f, "{m:e}")?,
                1 => write!(f, "{m:e}·s")?,
                _ => write!(f, "{m:e}·s^{k}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_root_sets(got: &[Complex64], want: &[Complex64], rel: f64) {
        assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
        let mut pool = want.to_vec();
        for g in got {
            let (i, d) = pool
                .iter()
                .enumerate()
                .map(|(i, w)| (i, (g - w).norm() / w.norm().max(1.0)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(d <= rel, "root {g} missing from {want:?} (rel err {d:e})");
            pool.remove(i);
        }
    }

    #[test]
    fn trims_leading_zeros() {
        let p = Polynomial::new(vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), Some(1));
        assert_eq!(Polynomial::new(vec![0.0]).degree(), None);
    }

    #[test]
    fn double_root() {
        let r = Polynomial::new(vec![1.0, 2.0, 1.0]).roots().unwrap();
        assert_root_sets(&r, &[c(-1.0, 0.0), c(-1.0, 0.0)], 1e-7);
        assert!(r.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn zero_polynomial_rejected_constant_has_no_roots() {
        assert_eq!(Polynomial::zero().roots(), Err(Error::ZeroPolynomial));
        assert!(Polynomial::constant(3.0).roots().unwrap().is_empty());
    }

    #[test]
    fn roots_at_origin_are_exact() {
        // s²·(s + 2)
        let r = Polynomial::new(vec![0.0, 0.0, 2.0, 1.0]).roots().unwrap();
        assert_eq!(r.iter().filter(|z| **z == c(0.0, 0.0)).count(), 2);
        assert!(r.iter().any(|z| (z - c(-2.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn badly_scaled_cubic() {
        let want = [c(-897.8, 0.0), c(-1336.8, 20705.4), c(-1336.8, -20705.4)];
        let p = Polynomial::from_roots(&want).scale(6.468e-13);
        assert_root_sets(&p.roots().unwrap(), &want, 1e-10);
    }

    #[test]
    fn arithmetic() {
        let a = Polynomial::new(vec![1.0, 1.0]);
        let b = Polynomial::new(vec![-1.0, 1.0]);
        assert_eq!(&a * &b, Polynomial::new(vec![-1.0, 0.0, 1.0]));
        assert_eq!(&a - &a, Polynomial::zero());
        assert_eq!(&a + &b, Polynomial::new(vec![0.0, 2.0]));
        assert_eq!(-&a, Polynomial::new(vec![-1.0, -1.0]));
        assert_eq!(a.derivative(), Polynomial::constant(1.0));
        assert_eq!(Polynomial::new(vec![1.0, 2.0, 3.0]).eval(2.0), 17.0);
    }

    fn root_strategy() -> impl Strategy<Value = Vec<Complex64>> {
        let mag = (1.0f64..5.0).prop_map(|e| 10f64.powf(e));
        prop_oneof![
            // three real roots of either sign
            proptest::collection::vec((mag.clone(), any::<bool>()), 3).prop_map(|v| {
                v.into_iter()
                    .map(|(m, neg)| c(if neg { -m } else { m }, 0.0))
                    .collect()
            }),
            // one real root and a conjugate pair
            (mag.clone(), any::<bool>(), mag.clone(), 0.05f64..3.0).prop_map(|(m, neg, w, ratio)| {
                let re = if neg { -m } else { m };
                vec![c(re, 0.0), c(-w * ratio, w), c(-w * ratio, -w)]
            }),
        ]
    }

    proptest! {
        #[test]
        fn recovers_constructed_roots(roots in root_strategy(), lead in 1e-12f64..1e3) {
            let p = Polynomial::from_roots(&roots).scale(lead);
            let got = p.roots().unwrap();
            assert_root_sets(&got, &roots, 1e-8);
            for z in &got {
                prop_assert!(p.relative_residual(*z) <= ROOT_RESIDUAL_TOL);
                if z.im != 0.0 {
                    prop_assert!(got.contains(&z.conj()));
                }
            }
        }
    }
}

//! Orthogonal polynomials and Bessel-type functions.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Legendre polynomial P_n(x).
pub fn legendre(n: usize, x: f64) -> f64 {
    legendre_derivs(n, x).0
}

/// P_n(x), P_n'(x), P_n''(x) by the three-term recurrence and the
/// derivative recurrences P'_{k+1} = P'_{k-1} + (2k+1) P_k.
pub fn legendre_derivs(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    let (mut s0, mut s1) = (0.0, 0.0);
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        let d2 = d0 + (2.0 * kf + 1.0) * p1;
        let s2 = s0 + (2.0 * kf + 1.0) * d1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
        s0 = s1;
        s1 = s2;
    }
    (p1, d1, s1)
}

/// Fills `p[k] = P_k(x)` for k = 0..p.len().
pub fn legendre_all(x: f64, p: &mut [f64]) {
    if p.is_empty() {
        return;
    }
    p[0] = 1.0;
    if p.len() > 1 {
        p[1] = x;
    }
    for k in 1..p.len().saturating_sub(1) {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
    }
}

/// Fills values and first derivatives of P_0..P_{len-1}.
pub fn legendre_all_deriv(x: f64, p: &mut [f64], dp: &mut [f64]) {
    legendre_all(x, p);
    if dp.is_empty() {
        return;
    }
    dp[0] = 0.0;
    if dp.len() > 1 {
        dp[1] = 1.0;
    }
    for k in 1..dp.len().saturating_sub(1) {
        dp[k + 1] = dp[k - 1] + (2 * k + 1) as f64 * p[k];
    }
}

/// Q_{n+1}(x) = ∫_1^x P_n, the antiderivative vanishing at 1.
pub fn legendre_antideriv(n: usize, x: f64) -> f64 {
    if n == 0 {
        return x - 1.0;
    }
    let mut p = vec![0.0; n + 2];
    legendre_all(x, &mut p);
    (p[n + 1] - p[n - 1]) / (2 * n + 1) as f64
}

/// Fills `q[n] = Q_{n+1}(x)` for n = 0..q.len().
pub fn legendre_antideriv_all(x: f64, q: &mut [f64]) {
    let mut p = vec![0.0; q.len() + 1];
    legendre_all(x, &mut p);
    for n in 0..q.len() {
        q[n] = if n == 0 {
            x - 1.0
        } else {
            (p[n + 1] - p[n - 1]) / (2 * n + 1) as f64
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChebyshevKind {
    First,
    Second,
}

/// Chebyshev polynomial T_n or U_n.
pub fn chebyshev(kind: ChebyshevKind, n: usize, x: f64) -> f64 {
    let (mut c0, mut c1) = match kind {
        ChebyshevKind::First => (1.0, x),
        ChebyshevKind::Second => (1.0, 2.0 * x),
    };
    if n == 0 {
        return 1.0;
    }
    for _ in 1..n {
        let c2 = 2.0 * x * c1 - c0;
        c0 = c1;
        c1 = c2;
    }
    c1
}

pub fn chebyshev_t(n: usize, x: f64) -> f64 {
    chebyshev(ChebyshevKind::First, n, x)
}

pub fn chebyshev_u(n: usize, x: f64) -> f64 {
    chebyshev(ChebyshevKind::Second, n, x)
}

/// Normalizing constant of the 2D kernel: c_0 = 1, c_n = n.
pub fn c2d(n: usize) -> f64 {
    if n == 0 {
        1.0
    } else {
        n as f64
    }
}

/// Ψ_n(x) for x ≥ 1 (deriv = 0) or its derivative c_n T_n(x)/sqrt(x²-1)
/// (deriv = 1, x > 1).
pub fn psi2d(n: usize, x: f64, deriv: u8) -> Result<f64> {
    if x < 1.0 {
        return Err(Error::Domain(format!("psi2d requires x >= 1, got {x}")));
    }
    let w = (x * x - 1.0).sqrt();
    match deriv {
        0 => Ok(if n == 0 {
            (x + w).ln()
        } else {
            w * chebyshev_u(n - 1, x)
        }),
        1 => {
            if w == 0.0 {
                return Err(Error::Singular("psi2d derivative at x = 1".into()));
            }
            Ok(c2d(n) * chebyshev_t(n, x) / w)
        }
        _ => Err(Error::Domain(format!("psi2d derivative order {deriv}"))),
    }
}

/// Bessel order: integer n or half-integer n + 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Integer(u32),
    HalfInteger(u32),
}

impl Order {
    pub fn nu(self) -> f64 {
        match self {
            Order::Integer(n) => n as f64,
            Order::HalfInteger(n) => n as f64 + 0.5,
        }
    }
}

/// Spherical Bessel function j_n(x) for real x ≥ 0.
pub fn sph_bessel_j(n: usize, x: f64) -> f64 {
    if n == 0 && x.abs() < 1e-4 {
        let x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    if x == 0.0 {
        return 0.0;
    }
    if x < 1e-3 * (n as f64 + 1.0) || (x < 1.0 && n > 0) {
        return sph_series(n, x);
    }
    let j0 = x.sin() / x;
    if n == 0 {
        return j0;
    }
    if x >= n as f64 {
        let mut a = j0;
        let mut b = x.sin() / (x * x) - x.cos() / x;
        for k in 1..n {
            let c = (2 * k + 1) as f64 / x * b - a;
            a = b;
            b = c;
        }
        return b;
    }
    // Miller: recur downward from well above n, normalize with j_0 or j_1.
    let start = n + 20 + (x as usize) + ((40.0 * (n as f64)).sqrt() as usize);
    let mut fp1 = 0.0;
    let mut f = 1e-300;
    let mut jn = 0.0;
    let mut f1 = 0.0;
    for k in (1..=start).rev() {
        let fm1 = (2 * k + 1) as f64 / x * f - fp1;
        fp1 = f;
        f = fm1;
        if k - 1 == n {
            jn = f;
        }
        if k - 1 == 1 {
            f1 = f;
        }
        if f.abs() > 1e250 {
            f *= 1e-250;
            fp1 *= 1e-250;
            jn *= 1e-250;
            f1 *= 1e-250;
        }
    }
    let j1 = x.sin() / (x * x) - x.cos() / x;
    if j0.abs() >= j1.abs() {
        jn * j0 / f
    } else {
        jn * j1 / f1
    }
}

fn sph_series(n: usize, x: f64) -> f64 {
    let mut df = 1.0;
    for k in 0..=n {
        df *= (2 * k + 1) as f64;
    }
    let mut term = x.powi(n as i32) / df;
    let mut sum = term;
    let y = -0.5 * x * x;
    for k in 1..60 {
        term *= y / (k as f64 * (2 * n + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Bessel function of the first kind J_ν(x), x ≥ 0.
pub fn bessel_j(order: Order, x: f64) -> f64 {
    match order {
        Order::HalfInteger(n) => {
            if x == 0.0 {
                0.0
            } else {
                (2.0 * x / std::f64::consts::PI).sqrt() * sph_bessel_j(n as usize, x)
            }
        }
        Order::Integer(n) => bessel_jn(n as usize, x),
    }
}

fn bessel_jn(n: usize, x: f64) -> f64 {
    if x < 0.0 {
        let v = bessel_jn(n, -x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x < 1e-8 {
        return if n == 0 { 1.0 } else if n == 1 { 0.5 * x } else { 0.0 };
    }
    // Miller backward recurrence normalized by J_0 + 2 Σ J_2k = 1.
    let big = (n as f64).max(x);
    let mut m = (big as usize) + 30 + (2.0 * (40.0 * big).sqrt()) as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    let mut sum = 0.0;
    let mut ans = 0.0;
    for k in (1..=m).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            ans *= 1e-250;
            sum *= 1e-250;
        }
        // j now holds J_{k-1}.
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            sum += 2.0 * j;
        }
        if k - 1 == n {
            ans = j;
        }
    }
    sum += j;
    ans / sum
}

/// The first `count` positive zeros of J_ν, increasing.
pub fn bessel_zeros(order: Order, count: usize) -> Result<Vec<f64>> {
    let nu = order.nu();
    let step = 0.25;
    let limit = nu + 10.0 + 4.0 * count as f64 * std::f64::consts::PI;
    let mut zeros = Vec::with_capacity(count);
    let mut a = if nu > 0.0 { nu } else { 0.1 };
    let mut fa = bessel_j(order, a);
    while zeros.len() < count {
        let b = a + step;
        if b > limit {
            return Err(Error::NonConvergence(format!(
                "bessel zero {} of order {nu} not bracketed",
                zeros.len() + 1
            )));
        }
        let fb = bessel_j(order, b);
        if fa == 0.0 {
            zeros.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = bessel_j(order, mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm * flo < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
                if hi - lo < 1e-14 * hi {
                    break;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    Ok(zeros)
}

/// Taylor coefficients of P_n about x = 1: P_n(1+t) = Σ c_k t^k.
#[derive(Debug, Clone)]
pub struct PolyTaylorAtOne {
    pub coeffs: Vec<f64>,
}

impl PolyTaylorAtOne {
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// P_n^{(k)}(1).
    pub fn derivative_at_one(&self, k: usize) -> f64 {
        let c = self.coeffs.get(k).copied().unwrap_or(0.0);
        (1..=k).fold(c, |acc, j| acc * j as f64)
    }
}

/// From the Legendre equation at x = 1:
/// 2(k+1) P^{(k+1)}(1) = (n(n+1) - k(k+1)) P^{(k)}(1).
pub fn legendre_taylor_at_one(n: usize) -> PolyTaylorAtOne {
    let nn = (n * (n + 1)) as f64;
    let mut coeffs = vec![1.0];
    for k in 0..n {
        let kk = (k * (k + 1)) as f64;
        let next = coeffs[k] * (nn - kk) / (2.0 * ((k + 1) * (k + 1)) as f64);
        coeffs.push(next);
    }
    PolyTaylorAtOne { coeffs }
}

/// Spherical Bessel j_n(z) for complex z.
pub fn sph_bessel_j_complex(n: usize, z: Complex64) -> Complex64 {
    let r = z.norm();
    if r < n as f64 + 1.0 || r < 1.0 {
        let mut df = 1.0;
        for k in 0..=n {
            df *= (2 * k + 1) as f64;
        }
        let mut term = z.powu(n as u32) / df;
        let mut sum = term;
        let y = -0.5 * z * z;
        for k in 1..200 {
            term *= y / (k as f64 * (2 * n + 2 * k + 1) as f64);
            sum += term;
            if term.norm() < 1e-17 * sum.norm() {
                break;
            }
        }
        return sum;
    }
    let j0 = z.sin() / z;
    if n == 0 {
        return j0;
    }
    let mut a = j0;
    let mut b = z.sin() / (z * z) - z.cos() / z;
    for k in 1..n {
        let c = (2 * k + 1) as f64 / z * b - a;
        a = b;
        b = c;
    }
    b
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponentially scaled Macdonald function e^z K_n(z), Re z > 0.
pub fn bessel_k_scaled_complex(n: usize, z: Complex64) -> Complex64 {
    let (k0, k1) = if z.norm() <= 12.0 {
        let (k0, k1) = k01_series(z);
        let e = z.exp();
        (k0 * e, k1 * e)
    } else {
        (k_asymptotic_scaled(0, z), k_asymptotic_scaled(1, z))
    };
    if n == 0 {
        return k0;
    }
    let (mut a, mut b) = (k0, k1);
    for k in 1..n {
        let c = a + b * (2.0 * k as f64) / z;
        a = b;
        b = c;
    }
    b
}

fn k01_series(z: Complex64) -> (Complex64, Complex64) {
    let q = z * z * 0.25;
    let lg = (z * 0.5).ln();
    let mut i0 = Complex64::new(0.0, 0.0);
    let mut i1 = Complex64::new(0.0, 0.0);
    let mut s0 = Complex64::new(0.0, 0.0);
    let mut s1 = Complex64::new(0.0, 0.0);
    let mut t0 = Complex64::new(1.0, 0.0); // q^k/(k!)^2
    let mut t1 = Complex64::new(1.0, 0.0); // q^k/(k!(k+1)!)
    let mut psi_k1 = -EULER_GAMMA; // ψ(k+1)
    for k in 0..120 {
        let psi_k2 = psi_k1 + 1.0 / (k as f64 + 1.0);
        i0 += t0;
        i1 += t1;
        s0 += t0 * psi_k1;
        s1 += t1 * (psi_k1 + psi_k2);
        if t0.norm() < 1e-18 * i0.norm() && k > 2 {
            break;
        }
        let kf = k as f64 + 1.0;
        t0 = t0 * q / (kf * kf);
        t1 = t1 * q / (kf * (kf + 1.0));
        psi_k1 = psi_k2;
    }
    let k0 = -lg * i0 + s0;
    let i1v = i1 * z * 0.5;
    let k1 = z.inv() + lg * i1v - s1 * z * 0.25;
    (k0, k1)
}

/// Coefficients a_k(ν) of the large-argument expansion of K_ν.
pub fn k_asymptotic_coeffs(n: usize, count: usize) -> Vec<f64> {
    let mu = 4.0 * (n * n) as f64;
    let mut a = vec![1.0];
    for k in 1..count {
        let odd = (2 * k - 1) as f64;
        let prev = a[k - 1];
        a.push(prev * (mu - odd * odd) / (k as f64 * 8.0));
    }
    a
}

fn k_asymptotic_scaled(n: usize, z: Complex64) -> Complex64 {
    let a = k_asymptotic_coeffs(n, 40);
    let w = z.inv();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut pw = Complex64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for &ak in &a {
        let term = pw * ak;
        if term.norm() > last {
            break;
        }
        last = term.norm();
        sum += term;
        pw *= w;
    }
    (Complex64::new(std::f64::consts::FRAC_PI_2, 0.0) / z).sqrt() * sum
}

//! Analytic series solution for the squeeze film on an unperforated
//! rectangle with uniform wall velocity and ambient edges.
//!
//! This is the classical double-sine-series solution of the linearized
//! compressible lubrication equation; it serves as an independent oracle for
//! the finite-element route on hole-free plates.

use crate::reynolds::CKPair;
use crate::{lit, Real};

/// Damping and spring coefficients of a rectangular film.
///
/// `length`/`width`/`gap` in µm, `eta_eff` in Pa·s, `p_ambient` in Pa,
/// `omega` in rad/s. The series is summed in expanding odd-index rings until
/// a ring changes both sums by less than 1e-10 relative.
pub fn blech_oracle<T: Real>(
    length: T,
    width: T,
    gap: T,
    eta_eff: T,
    p_ambient: T,
    omega: T,
) -> CKPair<T> {
    let um = lit::<T>(1e-6);
    let l = length * um;
    let w = width * um;
    let g = gap * um;
    let pi = T::from_f64(std::f64::consts::PI).unwrap();
    let alpha = g.powi(3) / (lit::<T>(12.0) * eta_eff);
    let beta = g / p_ambient;
    let wb = omega * beta;

    let term = |m: usize, n: usize| -> (T, T) {
        let mf = T::from_usize(m).unwrap();
        let nf = T::from_usize(n).unwrap();
        let k2 = pi * pi * (mf * mf / (l * l) + nf * nf / (w * w));
        let ak = alpha * k2;
        let den = (mf * nf) * (mf * nf) * (ak * ak + wb * wb);
        (ak / den, T::one() / den)
    };

    let tol = lit::<T>(1e-10);
    let mut c_sum = T::zero();
    let mut k_sum = T::zero();
    let mut ring = 1usize;
    loop {
        let mut dc = T::zero();
        let mut dk = T::zero();
        let mut n = 1;
        while n <= ring {
            let (tc, tk) = term(ring, n);
            dc += tc;
            dk += tk;
            n += 2;
        }
        let mut m = 1;
        while m < ring {
            let (tc, tk) = term(m, ring);
            dc += tc;
            dk += tk;
            m += 2;
        }
        c_sum += dc;
        k_sum += dk;
        if (ring > 3 && dc <= tol * c_sum && dk <= tol * k_sum) || ring > 4001 {
            break;
        }
        ring += 2;
    }

    let front = lit::<T>(64.0) * l * w / pi.powi(4);
    CKPair {
        frequency_hz: omega / (lit::<T>(2.0) * pi),
        damping: front * c_sum,
        stiffness: front * omega * omega * beta * k_sum,
    }
}

//! Resonance-curve identification: sixth-order polynomial fit, peak and
//! half-power extraction, and modal damping/stiffness from the half-power
//! bandwidth. A single-degree-of-freedom synthesizer closes the loop with
//! the film solver.
//!
//! Frequencies are carried in kHz as sampled; the identified modal
//! quantities convert to SI internally (λ = 2π·f with f in Hz).

use crate::{lit, Error, Real, Result};

/// Sampled amplitude-frequency response around a resonance.
#[derive(Debug, Clone, PartialEq)]
pub struct FrfCurve<T> {
    /// (frequency \[kHz\], amplitude \[arbitrary\]) with strictly increasing
    /// frequencies and non-negative amplitudes.
    pub samples: Vec<(T, T)>,
    pub label: String,
}

impl<T: Real> FrfCurve<T> {
    pub fn new(samples: Vec<(T, T)>, label: impl Into<String>) -> Result<Self> {
        if samples.len() < 7 {
            return Err(Error::Domain(format!(
                "a response curve needs at least 7 samples, got {}",
                samples.len()
            )));
        }
        for (i, pair) in samples.windows(2).enumerate() {
            if !(pair[1].0 > pair[0].0) {
                return Err(Error::Domain(format!(
                    "frequencies must be strictly increasing (sample {})",
                    i + 1
                )));
            }
        }
        if let Some((f, a)) = samples
            .iter()
            .find(|(f, a)| !(*a >= T::zero()) || !f.is_finite() || !a.is_finite())
        {
            return Err(Error::Domain(format!(
                "invalid sample ({f}, {a}): amplitudes must be finite and non-negative"
            )));
        }
        Ok(FrfCurve {
            samples,
            label: label.into(),
        })
    }

    /// Parses `frequency_khz,amplitude` CSV (header required).
    pub fn from_csv(text: &str, label: impl Into<String>) -> Result<Self> {
        let mut samples = Vec::new();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, head))
                if head.trim().to_lowercase().replace(' ', "")
                    == "frequency_khz,amplitude" => {}
            Some((_, head)) => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!(
                        "expected header `frequency_khz,amplitude`, got `{}`",
                        head.trim()
                    ),
                })
            }
            None => {
                return Err(Error::Parse {
                    line: 1,
                    message: "empty input".into(),
                })
            }
        }
        for (idx, raw) in lines {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |field: Option<&str>, name: &str| -> Result<T> {
                let txt = field
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        message: format!("missing {name} column"),
                    })?
                    .trim();
                txt.parse::<f64>()
                    .ok()
                    .and_then(T::from_f64)
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        message: format!("cannot parse {name} `{txt}`"),
                    })
            };
            let f = parse(parts.next(), "frequency")?;
            let a = parse(parts.next(), "amplitude")?;
            if parts.next().is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "too many columns".into(),
                });
            }
            samples.push((f, a));
        }
        FrfCurve::new(samples, label).map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("frequency_khz,amplitude\n");
        for &(f, a) in &self.samples {
            out.push_str(&format!("{:.9e},{:.9e}\n", f, a));
        }
        out
    }
}

/// Sixth-order least-squares fit of a response window.
///
/// The fit is computed on frequencies shifted and scaled to [-1, 1] for
/// conditioning; the plain-frequency coefficients are recovered exactly
/// through the binomial expansion of the affine map.
#[derive(Debug, Clone)]
pub struct Poly6Fit<T> {
    /// Coefficients on the normalized variable u, ascending powers.
    coeffs_u: [T; 7],
    /// Fit window \[kHz\].
    pub window: (T, T),
    /// Sum of squared errors over the fitted samples.
    pub residual: T,
    /// Number of fitted samples.
    pub n_samples: usize,
}

impl<T: Real> Poly6Fit<T> {
    fn to_u(&self, f: T) -> T {
        let (lo, hi) = self.window;
        (lit::<T>(2.0) * f - (lo + hi)) / (hi - lo)
    }

    fn from_u(&self, u: T) -> T {
        let (lo, hi) = self.window;
        (u * (hi - lo) + lo + hi) / lit(2.0)
    }

    /// Evaluates the fitted polynomial at a frequency \[kHz\].
    pub fn eval(&self, f: T) -> T {
        let u = self.to_u(f);
        let mut acc = T::zero();
        for &c in self.coeffs_u.iter().rev() {
            acc = acc * u + c;
        }
        acc
    }

    /// Plain-frequency coefficients, highest power first (f⁶ … f⁰).
    pub fn coefficients(&self) -> [T; 7] {
        // u = s·f + t
        let (lo, hi) = self.window;
        let s = lit::<T>(2.0) / (hi - lo);
        let t = -(lo + hi) / (hi - lo);
        let mut out = [T::zero(); 7];
        // binomial expansion of (s f + t)^k
        let mut binom = [[0.0_f64; 7]; 7];
        for (k, row) in binom.iter_mut().enumerate() {
            row[0] = 1.0;
            for j in 1..=k {
                row[j] = row[j - 1] * ((k - j + 1) as f64) / (j as f64);
            }
        }
        for k in 0..7 {
            for j in 0..=k {
                out[j] = out[j]
                    + self.coeffs_u[k] * lit(binom[k][j]) * s.powi(j as i32) * t.powi((k - j) as i32);
            }
        }
        let mut desc = [T::zero(); 7];
        for j in 0..7 {
            desc[j] = out[6 - j];
        }
        desc
    }
}

/// Least-squares sixth-order fit over a frequency window \[kHz\].
pub fn fit_poly6<T: Real>(curve: &FrfCurve<T>, window: (T, T)) -> Result<Poly6Fit<T>> {
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(Error::Fit(format!("empty fit window [{lo}, {hi}]")));
    }
    let first = curve.samples.first().unwrap().0;
    let last = curve.samples.last().unwrap().0;
    if lo < first - (last - first) * lit(1e-9) || hi > last + (last - first) * lit(1e-9) {
        return Err(Error::Fit(format!(
            "fit window [{lo}, {hi}] kHz outside sampled range [{first}, {last}] kHz"
        )));
    }
    let pts: Vec<(T, T)> = curve
        .samples
        .iter()
        .copied()
        .filter(|&(f, _)| f >= lo && f <= hi)
        .collect();
    if pts.len() < 7 {
        return Err(Error::Fit(format!(
            "sixth-order fit needs at least 7 samples in the window, got {}",
            pts.len()
        )));
    }
    // normal equations in the Chebyshev basis on the normalized variable
    // (condition stays O(10); the monomial basis loses digits here)
    let two = lit::<T>(2.0);
    let mut ata = [[T::zero(); 7]; 7];
    let mut atb = [T::zero(); 7];
    for &(f, a) in &pts {
        let u = (two * f - (lo + hi)) / (hi - lo);
        let mut cheb = [T::one(); 7];
        cheb[1] = u;
        for k in 2..7 {
            cheb[k] = two * u * cheb[k - 1] - cheb[k - 2];
        }
        for i in 0..7 {
            atb[i] += cheb[i] * a;
            for j in 0..=i {
                ata[i][j] += cheb[i] * cheb[j];
            }
        }
    }
    for i in 0..7 {
        for j in (i + 1)..7 {
            ata[i][j] = ata[j][i];
        }
    }
    let cheb_coeffs = solve7(&mut ata, &mut atb)
        .ok_or_else(|| Error::Fit("singular normal system (duplicate frequencies?)".into()))?;
    // exact Chebyshev -> monomial conversion
    const T_TO_U: [[f64; 7]; 7] = [
        [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [-1.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, -3.0, 0.0, 4.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, -8.0, 0.0, 8.0, 0.0, 0.0],
        [0.0, 5.0, 0.0, -20.0, 0.0, 16.0, 0.0],
        [-1.0, 0.0, 18.0, 0.0, -48.0, 0.0, 32.0],
    ];
    let mut coeffs = [T::zero(); 7];
    for (k, &ck) in cheb_coeffs.iter().enumerate() {
        for j in 0..=k {
            coeffs[j] = coeffs[j] + ck * lit(T_TO_U[k][j]);
        }
    }
    let mut fit = Poly6Fit {
        coeffs_u: coeffs,
        window,
        residual: T::zero(),
        n_samples: pts.len(),
    };
    let mut err = T::zero();
    for &(f, a) in &pts {
        let d = a - fit.eval(f);
        err += d * d;
    }
    fit.residual = err;
    Ok(fit)
}

/// Gaussian elimination with partial pivoting on the 7×7 normal system.
fn solve7<T: Real>(a: &mut [[T; 7]; 7], b: &mut [T; 7]) -> Option<[T; 7]> {
    let n = 7;
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < T::epsilon() * lit(1e3) {
            return None;
        }
        if piv != col {
            a.swap(piv, col);
            b.swap(piv, col);
        }
        for r in (col + 1)..n {
            let factor = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] = a[r][c] - factor * a[col][c];
            }
            b[r] = b[r] - factor * b[col];
        }
    }
    let mut x = [T::zero(); 7];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in (i + 1)..n {
            acc = acc - a[i][j] * x[j];
        }
        x[i] = acc / a[i][i];
    }
    Some(x)
}

/// Locates the global interior maximum of the fitted polynomial by
/// root-finding on its derivative. Returns `(f_n \[kHz\], peak amplitude)`.
pub fn find_peak<T: Real>(fit: &Poly6Fit<T>) -> Result<(T, T)> {
    // derivative in u, degree 5
    let mut d = [T::zero(); 6];
    for k in 1..7 {
        d[k - 1] = fit.coeffs_u[k] * T::from_usize(k).unwrap();
    }
    let eval_d = |u: T| {
        let mut acc = T::zero();
        for &c in d.iter().rev() {
            acc = acc * u + c;
        }
        acc
    };
    // bracket every sign change of h' on a fine grid, bisect to 1e-14
    let n_scan = 4096;
    let mut crit = Vec::new();
    let mut u_prev = lit::<T>(-1.0);
    let mut d_prev = eval_d(u_prev);
    for i in 1..=n_scan {
        let u = lit::<T>(-1.0) + lit::<T>(2.0) * T::from_usize(i).unwrap() / lit(n_scan as f64);
        let dv = eval_d(u);
        if d_prev == T::zero() {
            crit.push(u_prev);
        } else if (d_prev > T::zero()) != (dv > T::zero()) {
            let (mut a, mut b) = (u_prev, u);
            let mut fa = d_prev;
            for _ in 0..100 {
                let m = (a + b) / lit(2.0);
                let fm = eval_d(m);
                if (fa > T::zero()) != (fm > T::zero()) {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            crit.push((a + b) / lit(2.0));
        }
        u_prev = u;
        d_prev = dv;
    }
    let mut best: Option<(T, T)> = None;
    for &u in &crit {
        let h = fit.eval(fit.from_u(u));
        if best.map_or(true, |(_, hb)| h > hb) {
            best = Some((u, h));
        }
    }
    let edge = fit
        .eval(fit.from_u(lit(-1.0)))
        .max(fit.eval(fit.from_u(lit(1.0))));
    match best {
        Some((u, h)) if h >= edge => Ok((fit.from_u(u), h)),
        _ => Err(Error::Peak(
            "no interior maximum in the fitted window".into(),
        )),
    }
}

/// Finds the two half-power crossings `h(f) = peak/√2` nearest the peak,
/// bisected to 1e-6 kHz.
pub fn half_power<T: Real>(fit: &Poly6Fit<T>, peak: (T, T)) -> Result<(T, T)> {
    let (f_n, h_max) = peak;
    let level = h_max / lit::<T>(2.0).sqrt();
    let tol = lit::<T>(1e-6);
    let side = |sign: T| -> Result<T> {
        let (lo, hi) = fit.window;
        let end = if sign > T::zero() { hi } else { lo };
        // march from the peak towards the window edge to bracket the crossing
        let n_step = 2048;
        let step = (end - f_n) / lit(n_step as f64);
        let mut f_prev = f_n;
        let mut h_prev = h_max;
        for i in 1..=n_step {
            let f = f_n + step * T::from_usize(i).unwrap();
            let h = fit.eval(f);
            if h <= level {
                // bisect [f_prev, f]
                let (mut a, mut b) = (f_prev, f);
                let mut ha = h_prev;
                while (b - a).abs() > tol {
                    let m = (a + b) / lit(2.0);
                    let hm = fit.eval(m);
                    if (ha > level) != (hm > level) {
                        b = m;
                    } else {
                        a = m;
                        ha = hm;
                    }
                }
                return Ok((a + b) / lit(2.0));
            }
            f_prev = f;
            h_prev = h;
        }
        Err(Error::Bandwidth(format!(
            "no half-power crossing between the peak at {f_n} kHz and the \
             window edge at {end} kHz"
        )))
    };
    let f_lo = side(lit(-1.0))?;
    let f_hi = side(lit(1.0))?;
    Ok((f_lo, f_hi))
}

/// Modal quantities from one identified resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalIdentification<T> {
    /// Resonant frequency \[kHz\].
    pub resonant_khz: T,
    /// Half-power frequencies \[kHz\].
    pub half_lo_khz: T,
    pub half_hi_khz: T,
    /// Damping ratio.
    pub zeta: T,
    /// Modal damping coefficient \[N·s/m\].
    pub damping: T,
    /// Modal stiffness \[N/m\].
    pub stiffness: T,
    /// Modal mass \[kg\].
    pub modal_mass: T,
}

impl<T: Real> ModalIdentification<T> {
    /// CSV row matching
    /// `label,f_n_khz,f_half_lo_khz,f_half_hi_khz,zeta,c_ns_per_m,k_n_per_m,modal_mass_kg`.
    pub fn csv_row(&self, label: &str) -> String {
        format!(
            "{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}\n",
            label,
            self.resonant_khz,
            self.half_lo_khz,
            self.half_hi_khz,
            self.zeta,
            self.damping,
            self.stiffness,
            self.modal_mass
        )
    }

    pub fn csv_header() -> &'static str {
        "label,f_n_khz,f_half_lo_khz,f_half_hi_khz,zeta,c_ns_per_m,k_n_per_m,modal_mass_kg\n"
    }
}

/// Half-power identification: ζ = (f₂-f₁)/(2 f_n), c = 2 m ζ λ, k = m λ²
/// with λ = 2π f_n (f_n in Hz).
pub fn identify<T: Real>(
    peak_khz: T,
    half_khz: (T, T),
    modal_mass: T,
) -> Result<ModalIdentification<T>> {
    let (f1, f2) = half_khz;
    if !(peak_khz > T::zero()) || !(f1 > T::zero()) || !(modal_mass > T::zero()) {
        return Err(Error::Domain(
            "identification needs positive frequencies and modal mass".into(),
        ));
    }
    if f1 > peak_khz || f2 < peak_khz {
        return Err(Error::Domain(format!(
            "half-power points ({f1}, {f2}) kHz must bracket the peak {peak_khz} kHz"
        )));
    }
    let zeta = (f2 - f1) / (lit::<T>(2.0) * peak_khz);
    let two_pi = lit::<T>(2.0) * T::from_f64(std::f64::consts::PI).unwrap();
    let lambda = two_pi * peak_khz * lit(1e3);
    Ok(ModalIdentification {
        resonant_khz: peak_khz,
        half_lo_khz: f1,
        half_hi_khz: f2,
        zeta,
        damping: lit::<T>(2.0) * modal_mass * zeta * lambda,
        stiffness: modal_mass * lambda * lambda,
        modal_mass,
    })
}

/// Samples the displacement amplitude of a single mode with damping `c`,
/// stiffness `k` and mass `m` under unit force: 1/√((k-mω²)² + (cω)²).
pub fn synthesize_frf<T: Real>(c: T, k: T, m: T, grid_khz: &[T]) -> Result<FrfCurve<T>> {
    if !(c >= T::zero()) || !(k > T::zero()) || !(m > T::zero()) {
        return Err(Error::Domain(
            "synthesis needs c >= 0, k > 0, m > 0".into(),
        ));
    }
    let zeta = c / (lit::<T>(2.0) * (k * m).sqrt());
    if zeta >= T::one() / lit::<T>(2.0).sqrt() {
        return Err(Error::Domain(format!(
            "damping ratio {zeta} leaves no resonance peak"
        )));
    }
    let two_pi = lit::<T>(2.0) * T::from_f64(std::f64::consts::PI).unwrap();
    let samples: Vec<(T, T)> = grid_khz
        .iter()
        .map(|&f| {
            let w = two_pi * f * lit(1e3);
            let re = k - m * w * w;
            let im = c * w;
            (f, T::one() / (re * re + im * im).sqrt())
        })
        .collect();
    FrfCurve::new(samples, "synthetic")
}

/// Default fit window: a coarse sample-level pass locates the peak and the
/// half-power bandwidth; the window is peak ± 0.75 bandwidth.
///
/// The window is deliberately tight: a sixth-order polynomial tracks the
/// resonance flanks only close to the peak, and wider windows bias the
/// identified bandwidth visibly.
pub fn default_window<T: Real>(curve: &FrfCurve<T>) -> Result<(T, T)> {
    let (i_peak, &(f_peak, a_peak)) = curve
        .samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .unwrap();
    if i_peak == 0 || i_peak + 1 == curve.samples.len() {
        return Err(Error::Peak(
            "sampled maximum sits on the curve edge; no interior peak".into(),
        ));
    }
    let level = a_peak / lit::<T>(2.0).sqrt();
    let mut i_lo = i_peak;
    while i_lo > 0 && curve.samples[i_lo].1 > level {
        i_lo -= 1;
    }
    let mut i_hi = i_peak;
    while i_hi + 1 < curve.samples.len() && curve.samples[i_hi].1 > level {
        i_hi += 1;
    }
    if curve.samples[i_lo].1 > level || curve.samples[i_hi].1 > level {
        return Err(Error::Bandwidth(
            "half-power level not reached inside the sampled range".into(),
        ));
    }
    let bw = curve.samples[i_hi].0 - curve.samples[i_lo].0;
    let margin = lit::<T>(0.75) * bw;
    let first = curve.samples.first().unwrap().0;
    let last = curve.samples.last().unwrap().0;
    Ok(((f_peak - margin).max(first), (f_peak + margin).min(last)))
}

/// Full identification chain with the default window:
/// fit → peak → half-power → modal quantities.
pub fn identify_curve<T: Real>(
    curve: &FrfCurve<T>,
    modal_mass: T,
) -> Result<(ModalIdentification<T>, Poly6Fit<T>)> {
    let window = default_window(curve)?;
    let fit = fit_poly6(curve, window)?;
    let peak = find_peak(&fit)?;
    let half = half_power(&fit, peak)?;
    let ident = identify(peak.0, half, modal_mass)?;
    Ok((ident, fit))
}

/// Statistical treatment of repeated detections: identifies every curve and
/// returns the per-quantity mean and sample standard deviation.
pub fn identify_repeated<T: Real>(
    curves: &[FrfCurve<T>],
    modal_mass: T,
) -> Result<(ModalIdentification<T>, ModalIdentification<T>)> {
    if curves.is_empty() {
        return Err(Error::Domain("no curves to identify".into()));
    }
    let idents: Vec<ModalIdentification<T>> = curves
        .iter()
        .map(|c| identify_curve(c, modal_mass).map(|(i, _)| i))
        .collect::<Result<_>>()?;
    let n = T::from_usize(idents.len()).unwrap();
    let stats = |pick: &dyn Fn(&ModalIdentification<T>) -> T| -> (T, T) {
        let mean = idents.iter().map(|i| pick(i)).sum::<T>() / n;
        if idents.len() < 2 {
            return (mean, T::zero());
        }
        let var = idents
            .iter()
            .map(|i| {
                let d = pick(i) - mean;
                d * d
            })
            .sum::<T>()
            / (n - T::one());
        (mean, var.sqrt())
    };
    let (f_m, f_s) = stats(&|i| i.resonant_khz);
    let (lo_m, lo_s) = stats(&|i| i.half_lo_khz);
    let (hi_m, hi_s) = stats(&|i| i.half_hi_khz);
    let (z_m, z_s) = stats(&|i| i.zeta);
    let (c_m, c_s) = stats(&|i| i.damping);
    let (k_m, k_s) = stats(&|i| i.stiffness);
    let mk = |resonant_khz, half_lo_khz, half_hi_khz, zeta, damping, stiffness, modal_mass| {
        ModalIdentification {
            resonant_khz,
            half_lo_khz,
            half_hi_khz,
            zeta,
            damping,
            stiffness,
            modal_mass,
        }
    };
    Ok((
        mk(f_m, lo_m, hi_m, z_m, c_m, k_m, modal_mass),
        mk(f_s, lo_s, hi_s, z_s, c_s, k_s, T::zero()),
    ))
}

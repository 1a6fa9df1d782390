//! Special functions: the complex exponential integral E₁ and Bessel functions
//! of the first kind at integer order.

use num_complex::Complex64;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this modulus E₁ is summed from its power series, above it the
/// continued fraction is used.
const SERIES_RADIUS: f64 = 4.0;

/// Principal-branch exponential integral E₁(z) = ∫_z^∞ e^{-t}/t dt.
///
/// The branch cut lies on the negative real axis; the sign of a zero
/// imaginary part selects the side, so `E₁(conj z) = conj E₁(z)` holds
/// everywhere including on the cut.
pub fn exp_integral_e1(z: Complex64) -> Result<Complex64> {
    if z.re == 0.0 && z.im == 0.0 {
        return Err(Error::domain("E1 has a logarithmic singularity at z = 0"));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::domain(format!("E1 argument must be finite, got {z}")));
    }
    let value = if z.norm() <= SERIES_RADIUS {
        e1_series(z)
    } else {
        e1_continued_fraction(z)
    };
    Ok(value)
}

fn e1_series(z: Complex64) -> Complex64 {
    // E1(z) = -γ - ln z - Σ_{k≥1} (-z)^k / (k k!)
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 1..200 {
        let kf = k as f64;
        term *= -z / kf;
        let contribution = term / kf;
        sum += contribution;
        if contribution.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

fn e1_continued_fraction(z: Complex64) -> Complex64 {
    // Modified Lentz on the even contraction
    // E1(z) = e^{-z} / (z + 1 - 1²/(z + 3 - 2²/(z + 5 - ...)))
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..100_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = an * d + b;
        if d.norm() < tiny {
            d = Complex64::new(tiny, 0.0);
        }
        d = 1.0 / d;
        c = b + an / c;
        if c.norm() < tiny {
            c = Complex64::new(tiny, 0.0);
        }
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

/// Bessel functions J_0(x) … J_{max_order}(x) by Miller's backward recurrence,
/// normalised with J₀ + 2 Σ J_{2k} = 1.
pub fn bessel_j_orders(max_order: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; max_order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    // Start well above both the requested order and the turning point |x|.
    let start = {
        let m = (max_order as f64).max(ax) as usize + 30 + (ax.sqrt() * 10.0) as usize;
        m + (m % 2)
    };
    let mut j_next = 0.0;
    let mut j_curr = 1e-300;
    let mut norm = 0.0;
    for k in (0..start).rev() {
        // J_{k} = (2(k+1)/x) J_{k+1} - J_{k+2}
        let j_prev = 2.0 * (k as f64 + 1.0) / ax * j_curr - j_next;
        j_next = j_curr;
        j_curr = j_prev;
        if k <= max_order {
            out[k] = j_curr;
        }
        if k % 2 == 0 {
            norm += if k == 0 { j_curr } else { 2.0 * j_curr };
        }
        if j_curr.abs() > 1e250 {
            j_curr *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for (n, v) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// J_n(x) for any integer order, using J_{-n} = (-1)^n J_n.
pub fn bessel_j(order: i32, x: f64) -> f64 {
    let n = order.unsigned_abs() as usize;
    let value = bessel_j_orders(n, x)[n];
    if order < 0 && n % 2 == 1 {
        -value
    } else {
        value
    }
}

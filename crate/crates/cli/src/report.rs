//! JSON encodings. Every number is either `{"exact": …}`, a ball
//! `{"mid": …, "rad": …}`, or a plain diagnostic `{"approx": …}`.

use mahler::{parse_rational, Ball, Dyadic, Polynomial, Rational, Round};
use num_traits::Signed;
use serde_json::{json, Value};

use crate::problem::rational_string;

pub fn exact(q: &Rational) -> Value {
    json!({ "exact": rational_string(q) })
}

/// The printed radius also covers the decimal rounding of the midpoint.
pub fn ball(b: &Ball) -> Value {
    let (mid, rad) = ball_strings(b);
    json!({ "mid": mid, "rad": rad })
}

pub fn ball_strings(b: &Ball) -> (String, String) {
    let digits = decimal_digits(b);
    let mid = trim_zeros(&b.mid().to_decimal(digits, Round::Nearest));
    let shown = parse_rational(&mid).expect("decimal output parses");
    let err = (&shown - &b.mid().to_rational()).abs();
    let rad = b.rad().to_rational() + err;
    let rad = if rad == Rational::from_integer(0.into()) {
        "0".to_string()
    } else {
        Dyadic::from_rational(&rad, 32, Round::Up).to_decimal(3, Round::Up)
    };
    (mid, rad)
}

/// Drops trailing zeros of the fraction, keeping any exponent.
fn trim_zeros(s: &str) -> String {
    let (body, exp) = match s.find('e') {
        Some(i) => s.split_at(i),
        None => (s, ""),
    };
    if !body.contains('.') {
        return s.to_string();
    }
    let body = body.trim_end_matches('0').trim_end_matches('.');
    format!("{body}{exp}")
}

/// Enough digits to resolve the radius, capped by the working precision.
fn decimal_digits(b: &Ball) -> usize {
    let cap = (f64::from(b.prec()) * std::f64::consts::LOG10_2).ceil() as usize + 2;
    if b.rad().is_zero() || b.mid().is_zero() {
        return cap;
    }
    let span = (b.mid().to_log2_approx() - b.rad().to_log2_approx()) * std::f64::consts::LOG10_2;
    ((span.ceil() as i64 + 3).max(6) as usize).min(cap)
}

pub fn approx(v: f64) -> Value {
    let s = if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.6e}")
    };
    json!({ "approx": s })
}

pub fn poly(p: &Polynomial) -> Value {
    json!({
        "coeffs": p.coeffs().iter().map(rational_string).collect::<Vec<_>>(),
        "display": p.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_ball_encloses_the_ball() {
        let third = Rational::new(1.into(), 3.into());
        for prec in [16, 64, 300] {
            let b = Ball::from_rational(&third, prec);
            let (mid, rad) = ball_strings(&b);
            let m = parse_rational(&mid).unwrap();
            let r = parse_rational(&rad).unwrap();
            assert!((&m - &third).abs() <= r, "{mid} ± {rad}");
            assert!((&m - &b.mid().to_rational()).abs() <= r);
        }
    }

    #[test]
    fn exact_values_have_zero_radius() {
        let b = Ball::from_i64(3, 64);
        assert_eq!(ball(&b), json!({ "mid": "3", "rad": "0" }));
        assert_eq!(exact(&Rational::new((-3).into(), 4.into())), json!({ "exact": "-3/4" }));
    }

    #[test]
    fn approx_handles_infinities() {
        assert_eq!(approx(f64::INFINITY), json!({ "approx": "inf" }));
        assert_eq!(approx(1.5), json!({ "approx": "1.500000e0" }));
        assert_eq!(trim_zeros("1.2500e-7"), "1.25e-7");
        assert_eq!(trim_zeros("100"), "100");
        assert_eq!(trim_zeros("2.000"), "2");
    }
}

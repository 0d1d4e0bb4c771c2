//! Reference arithmetic independent of MPFR: exact rationals, and fixed-point
//! interval iteration of the critical orbit on big integers.
#![allow(dead_code)]

pub mod checks;

use escape_core::precision::{MPBound, MPInterval, Precision, Rounding};
use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub fn prec(bits: u32) -> Precision {
    Precision::new(bits).unwrap()
}

pub fn b(s: &str, bits: u32) -> MPBound {
    MPBound::parse(s, prec(bits), Rounding::Nearest).unwrap()
}

/// Exact value of a bound, read from its hex-float text.
pub fn rat(x: &MPBound) -> BigRational {
    let text = x.to_hex();
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let body = body.strip_prefix("0x").expect("hex float");
    let (mant, exp) = body.split_once('p').expect("exponent");
    let exp: i64 = exp.parse().unwrap();
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    let digits = format!("{int}{frac}");
    let m = BigInt::parse_bytes(digits.as_bytes(), 16).unwrap();
    let shift = exp - 4 * frac.len() as i64;
    let mut r = BigRational::from_integer(m);
    r = if shift >= 0 { r * pow2(shift as u64) } else { r / pow2((-shift) as u64) };
    if neg {
        -r
    } else {
        r
    }
}

pub fn pow2(k: u64) -> BigRational {
    BigRational::from_integer(BigInt::one() << k)
}

/// Exact value of a plain decimal literal such as `-1.0864`.
pub fn dec(s: &str) -> BigRational {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let num: BigInt = format!("{int}{frac}").parse().unwrap();
    let den = BigInt::from(10).pow(frac.len() as u32);
    let r = BigRational::new(num, den);
    if neg {
        -r
    } else {
        r
    }
}

pub fn rat_f64(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

pub fn contains(iv: &MPInterval, x: &BigRational) -> bool {
    &rat(iv.lo()) <= x && x <= &rat(iv.hi())
}

/// Exact `c_n(a)`; only for small `n`.
pub fn c_exact(a: &BigRational, n: u32) -> BigRational {
    let mut c = a.clone();
    for _ in 0..n {
        c = a - &c * &c;
    }
    c
}

/// Exact `c_n'(a)`; only for small `n`.
pub fn d_exact(a: &BigRational, n: u32) -> BigRational {
    let mut c = a.clone();
    let mut d = BigRational::one();
    let two = BigRational::from_integer(BigInt::from(2));
    for _ in 0..n {
        d = BigRational::one() - &two * &c * &d;
        c = a - &c * &c;
    }
    d
}

/// Fixed-point interval `[lo, hi]·2⁻ᴷ`.
#[derive(Clone, Debug)]
pub struct Fixed {
    pub lo: BigInt,
    pub hi: BigInt,
}

pub const K: u64 = 640;

fn floor_shift(x: &BigInt, k: u64) -> BigInt {
    // arithmetic shift rounds toward -inf for BigInt
    x >> k
}

fn ceil_shift(x: &BigInt, k: u64) -> BigInt {
    -((-x) >> k)
}

impl Fixed {
    /// Encloses a rational.
    pub fn from_rat(x: &BigRational) -> Fixed {
        let scaled = x * pow2(K);
        Fixed { lo: scaled.floor().to_integer(), hi: scaled.ceil().to_integer() }
    }

    /// True if the enclosure lies inside `[lo, hi]`.
    pub fn within(&self, lo: &Scaled, hi: &Scaled) -> bool {
        self.lo >= lo.ceil && self.hi <= hi.floor
    }

    pub fn to_rats(&self) -> (BigRational, BigRational) {
        (BigRational::from_integer(self.lo.clone()) / pow2(K), BigRational::from_integer(self.hi.clone()) / pow2(K))
    }

    /// `a - self²`, rounded outward.
    pub fn step(&self, a: &Fixed) -> Fixed {
        let (sq_lo, sq_hi) = if self.lo.sign() != Sign::Minus {
            (&self.lo * &self.lo, &self.hi * &self.hi)
        } else if self.hi.sign() != Sign::Plus {
            (&self.hi * &self.hi, &self.lo * &self.lo)
        } else {
            let m = self.lo.abs().max(self.hi.abs());
            (BigInt::zero(), &m * &m)
        };
        Fixed { lo: &a.lo - ceil_shift(&sq_hi, K), hi: &a.hi - floor_shift(&sq_lo, K) }
    }
}

/// A rational scaled by 2ᴷ and rounded both ways, for comparisons with
/// [`Fixed`] values.
pub struct Scaled {
    pub floor: BigInt,
    pub ceil: BigInt,
}

impl Scaled {
    pub fn new(x: &BigRational) -> Scaled {
        let s = x * pow2(K);
        Scaled { floor: s.floor().to_integer(), ceil: s.ceil().to_integer() }
    }
}

/// Enclosures of `c_0(a), …, c_n(a)`.
pub fn orbit_fixed(a: &BigRational, n: u32) -> Vec<Fixed> {
    let af = Fixed::from_rat(a);
    let mut out = vec![af.clone()];
    for _ in 0..n {
        let next = out.last().unwrap().step(&af);
        out.push(next);
    }
    out
}

/// `⌊√x · 2ᴷ⌋` for a non-negative rational.
pub fn sqrt_floor(x: &BigRational) -> BigRational {
    let scaled = (x * pow2(2 * K)).floor().to_integer();
    BigRational::from_integer(scaled.sqrt()) / pow2(K)
}

pub fn ulp_of(x: &BigRational, bits: u32) -> BigRational {
    // 2^(e - bits + 1) where 2^e <= |x| < 2^(e+1)
    let ax = x.abs();
    let mut e: i64 = 0;
    let two = BigRational::from_integer(BigInt::from(2));
    let mut p = BigRational::one();
    while p > ax {
        p = &p / &two;
        e -= 1;
    }
    while &p * &two <= ax {
        p = &p * &two;
        e += 1;
    }
    let k = e - bits as i64 + 1;
    if k >= 0 {
        pow2(k as u64)
    } else {
        BigRational::one() / pow2((-k) as u64)
    }
}

/// `x·2ᵏ` for a bound known to be a multiple of `2⁻ᵏ`.
pub fn scaled_int(x: &MPBound, k: u64) -> BigInt {
    let text = x.to_hex();
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (mant, exp) = body.strip_prefix("0x").unwrap().split_once('p').unwrap();
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    let m = BigInt::parse_bytes(format!("{int}{frac}").as_bytes(), 16).unwrap();
    let shift = exp.parse::<i64>().unwrap() - 4 * frac.len() as i64 + k as i64;
    let v = if shift >= 0 {
        m << shift as u64
    } else {
        let s = (-shift) as u64;
        assert!((&m >> s) << s == m, "not a multiple of 2^-{k}");
        m >> s
    };
    if neg {
        -v
    } else {
        v
    }
}

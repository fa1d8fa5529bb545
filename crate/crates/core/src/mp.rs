//! Scalar abstraction shared by the double and extended-precision paths.
//!
//! Reconstruction code is written once against [`Real`]; `f64` is the
//! working-precision instance and [`MpReal`] a software binary float whose
//! mantissa width is chosen per thread with [`PrecisionGuard`].

use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_complex::{Complex, Complex64};
use num_traits::{Num, One, Zero};

pub trait Real:
    Clone + fmt::Debug + PartialOrd + Send + Sync + 'static + Num + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    /// Unit roundoff of the current working precision.
    fn epsilon() -> Self;
    /// Decimal digits carried by the current working precision.
    fn digits() -> u32;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn hypot(&self, other: &Self) -> Self {
        let a = self.abs();
        let b = other.abs();
        let (big, small) = if a >= b { (a, b) } else { (b, a) };
        if big.is_zero() {
            return big;
        }
        let r = small / big.clone();
        big * (Self::one() + r.clone() * r).sqrt()
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn epsilon() -> Self {
        f64::EPSILON
    }
    fn digits() -> u32 {
        f64::DIGITS
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn hypot(&self, other: &Self) -> Self {
        f64::hypot(*self, *other)
    }
}

pub fn cabs<T: Real>(z: &Complex<T>) -> T {
    z.re.hypot(&z.im)
}

/// `exp(z)` for complex `z`.
pub fn cexp<T: Real>(z: &Complex<T>) -> Complex<T> {
    cis(&z.im).scale(z.re.exp())
}

/// `exp(i theta)` for real `theta`.
pub fn cis<T: Real>(theta: &T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

pub fn to_c64<T: Real>(z: &Complex<T>) -> Complex64 {
    Complex64::new(z.re.to_f64(), z.im.to_f64())
}

pub fn from_c64<T: Real>(z: Complex64) -> Complex<T> {
    Complex::new(T::from_f64(z.re), T::from_f64(z.im))
}

pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x)
}

// ---------------------------------------------------------------------------
// Extended precision
// ---------------------------------------------------------------------------

pub const DEFAULT_EXTENDED_DIGITS: u32 = 64;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static PRECISION_BITS: Cell<usize> = Cell::new(bits_for_digits(DEFAULT_EXTENDED_DIGITS));
    static CONSTS: RefCell<Option<Consts>> = const { RefCell::new(None) };
}

/// Mantissa width (a multiple of the 64-bit word) that carries `digits`
/// decimal digits plus a guard word.
pub fn bits_for_digits(digits: u32) -> usize {
    let bits = (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize;
    bits.div_ceil(64) * 64 + 64
}

fn precision() -> usize {
    PRECISION_BITS.with(Cell::get)
}

fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|c| {
        let mut slot = c.borrow_mut();
        let cc = slot.get_or_insert_with(|| Consts::new().expect("astro-float constants cache"));
        f(cc)
    })
}

/// Sets the extended working precision for the current thread until dropped.
#[must_use = "precision reverts when the guard is dropped"]
pub struct PrecisionGuard {
    previous: usize,
}

impl PrecisionGuard {
    pub fn new(digits: u32) -> Self {
        let previous = precision();
        PRECISION_BITS.with(|p| p.set(bits_for_digits(digits)));
        PrecisionGuard { previous }
    }
}

impl Drop for PrecisionGuard {
    fn drop(&mut self) {
        PRECISION_BITS.with(|p| p.set(self.previous));
    }
}

#[derive(Clone)]
pub struct MpReal(BigFloat);

impl MpReal {
    pub fn inner(&self) -> &BigFloat {
        &self.0
    }
}

impl fmt::Debug for MpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MpReal({:e})", self.to_f64())
    }
}

impl fmt::Display for MpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = with_consts(|cc| self.0.format(Radix::Dec, RM, cc));
        match s {
            Ok(s) => f.write_str(&s),
            Err(_) => write!(f, "{:e}", self.to_f64()),
        }
    }
}

impl PartialEq for MpReal {
    fn eq(&self, other: &Self) -> bool {
        self.0.cmp(&other.0) == Some(0)
    }
}

impl PartialOrd for MpReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.cmp(&other.0).map(|c| c.cmp(&0))
    }
}

macro_rules! mp_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for MpReal {
            type Output = MpReal;
            fn $method(self, rhs: MpReal) -> MpReal {
                MpReal(self.0.$method(&rhs.0, precision(), RM))
            }
        }
        impl<'a> $tr<&'a MpReal> for &'a MpReal {
            type Output = MpReal;
            fn $method(self, rhs: &'a MpReal) -> MpReal {
                MpReal(self.0.$method(&rhs.0, precision(), RM))
            }
        }
    };
}

mp_binop!(Add, add);
mp_binop!(Sub, sub);
mp_binop!(Mul, mul);
mp_binop!(Div, div);

impl Rem for MpReal {
    type Output = MpReal;
    fn rem(self, rhs: MpReal) -> MpReal {
        MpReal(self.0.rem(&rhs.0))
    }
}

impl Neg for MpReal {
    type Output = MpReal;
    fn neg(self) -> MpReal {
        MpReal(self.0.neg())
    }
}

impl Zero for MpReal {
    fn zero() -> Self {
        MpReal(BigFloat::from_f64(0.0, precision()))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for MpReal {
    fn one() -> Self {
        MpReal(BigFloat::from_f64(1.0, precision()))
    }
}

impl Num for MpReal {
    type FromStrRadixErr = crate::Error;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        let rdx = match radix {
            2 => Radix::Bin,
            8 => Radix::Oct,
            10 => Radix::Dec,
            16 => Radix::Hex,
            _ => return Err(crate::Error::Validation(format!("unsupported radix {radix}"))),
        };
        let v = with_consts(|cc| BigFloat::parse(s, rdx, precision(), RM, cc));
        if v.is_nan() {
            Err(crate::Error::Validation(format!("not a number: {s}")))
        } else {
            Ok(MpReal(v))
        }
    }
}

impl Real for MpReal {
    fn from_f64(x: f64) -> Self {
        MpReal(BigFloat::from_f64(x, precision()))
    }

    fn to_f64(&self) -> f64 {
        if self.0.is_nan() {
            return f64::NAN;
        }
        if self.0.is_inf() {
            return if self.0.is_inf_pos() {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
        }
        let Some((words, _, sign, exponent, _)) = self.0.as_raw_parts() else {
            return 0.0;
        };
        let Some(&top) = words.last() else {
            return 0.0;
        };
        if top == 0 {
            return 0.0;
        }
        // value = 0.top... * 2^exponent; split the scaling to stay out of
        // the subnormal range until the final multiply.
        let e = exponent - 64;
        let half = e / 2;
        let v = top as f64 * 2f64.powi(half) * 2f64.powi(e - half);
        if sign == Sign::Neg {
            -v
        } else {
            v
        }
    }

    fn sqrt(&self) -> Self {
        MpReal(self.0.sqrt(precision(), RM))
    }

    fn sin(&self) -> Self {
        with_consts(|cc| MpReal(self.0.sin(precision(), RM, cc)))
    }

    fn cos(&self) -> Self {
        with_consts(|cc| MpReal(self.0.cos(precision(), RM, cc)))
    }

    fn exp(&self) -> Self {
        with_consts(|cc| MpReal(self.0.exp(precision(), RM, cc)))
    }

    fn epsilon() -> Self {
        let p = precision();
        MpReal(BigFloat::from_f64(2.0, p).powi(p - 1, p, RM).reciprocal(p, RM))
    }

    fn digits() -> u32 {
        ((precision() - 64) as f64 * std::f64::consts::LOG10_2).floor() as u32
    }

    fn abs(&self) -> Self {
        MpReal(self.0.abs())
    }
}

//! Exact scalar coefficients.
//!
//! Coefficients live in the field ℚ(√2, i): every value is
//! `(a + b√2) + i(c + d√2)` with `a, b, c, d` arbitrary-precision rationals.
//! The `√2` component absorbs the `1/√2` of the ladder convention for
//! position and momentum, so symbolic derivation never rounds.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A real number `rational + root·√2` with exact rational parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Surd {
    pub rational: BigRational,
    pub root: BigRational,
}

impl Surd {
    pub fn new(rational: BigRational, root: BigRational) -> Self {
        Self { rational, root }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_rational(r: BigRational) -> Self {
        Self { rational: r, root: BigRational::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.root.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        let r = self.rational.to_f64().unwrap_or(f64::NAN);
        let s = self.root.to_f64().unwrap_or(f64::NAN);
        r + s * std::f64::consts::SQRT_2
    }

    fn mul_ref(&self, other: &Surd) -> Surd {
        let two = BigRational::from_integer(BigInt::from(2));
        Surd {
            rational: &self.rational * &other.rational + &self.root * &other.root * two,
            root: &self.rational * &other.root + &self.root * &other.rational,
        }
    }
}

impl Add for &Surd {
    type Output = Surd;
    fn add(self, rhs: &Surd) -> Surd {
        Surd { rational: &self.rational + &rhs.rational, root: &self.root + &rhs.root }
    }
}

impl Sub for &Surd {
    type Output = Surd;
    fn sub(self, rhs: &Surd) -> Surd {
        Surd { rational: &self.rational - &rhs.rational, root: &self.root - &rhs.root }
    }
}

impl Neg for &Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd { rational: -&self.rational, root: -&self.root }
    }
}

/// Exact complex coefficient over ℚ(√2, i).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Coefficient {
    pub real: Surd,
    pub imag: Surd,
}

impl Coefficient {
    pub fn new(real: Surd, imag: Surd) -> Self {
        Self { real, imag }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Self { real: Surd::zero(), imag: Surd::from_rational(BigRational::one()) }
    }

    pub fn sqrt2() -> Self {
        Self { real: Surd::new(BigRational::zero(), BigRational::one()), imag: Surd::zero() }
    }

    /// `1/√2 = √2/2`.
    pub fn inv_sqrt2() -> Self {
        Self { real: Surd::new(BigRational::zero(), ratio(1, 2)), imag: Surd::zero() }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Self {
        Self::from_rational(ratio(numer, denom))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Self { real: Surd::from_rational(r), imag: Surd::zero() }
    }

    /// Exact conversion of a finite double (every finite `f64` is a dyadic rational).
    ///
    /// Returns `None` for NaN or infinities.
    pub fn from_f64(x: f64) -> Option<Self> {
        if x == 0.0 {
            return Some(Self::zero());
        }
        BigRational::from_float(x).map(Self::from_rational)
    }

    /// Exact conversion of a complex double.
    pub fn from_c64(z: Complex64) -> Option<Self> {
        let re = Self::from_f64(z.re)?;
        let im = Self::from_f64(z.im)?;
        Some(re + im * Self::i())
    }

    pub fn is_zero(&self) -> bool {
        self.real.is_zero() && self.imag.is_zero()
    }

    pub fn is_one(&self) -> bool {
        *self == Self::one()
    }

    pub fn conj(&self) -> Self {
        Self { real: self.real.clone(), imag: -&self.imag }
    }

    /// Rounds to double precision; only used once derivation is finished.
    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.real.to_f64(), self.imag.to_f64())
    }

    /// Multiply by a non-negative integer.
    pub fn scale_int(&self, k: u64) -> Self {
        let k = BigRational::from_integer(BigInt::from(k));
        Self {
            real: Surd::new(&self.real.rational * &k, &self.real.root * &k),
            imag: Surd::new(&self.imag.rational * &k, &self.imag.root * &k),
        }
    }

    /// Multiply by an arbitrary integer.
    pub fn scale_bigint(&self, k: &BigInt) -> Self {
        let k = BigRational::from_integer(k.clone());
        Self {
            real: Surd::new(&self.real.rational * &k, &self.real.root * &k),
            imag: Surd::new(&self.imag.rational * &k, &self.imag.root * &k),
        }
    }

    /// The four rational components `(re, re√2, im, im√2)`.
    pub fn components(&self) -> [&BigRational; 4] {
        [&self.real.rational, &self.real.root, &self.imag.rational, &self.imag.root]
    }

    pub(crate) fn mul_ref(&self, rhs: &Coefficient) -> Coefficient {
        let rr = self.real.mul_ref(&rhs.real);
        let ii = self.imag.mul_ref(&rhs.imag);
        let ri = self.real.mul_ref(&rhs.imag);
        let ir = self.imag.mul_ref(&rhs.real);
        Coefficient { real: &rr - &ii, imag: &ri + &ir }
    }
}

pub(crate) fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

impl Add for Coefficient {
    type Output = Coefficient;
    fn add(self, rhs: Coefficient) -> Coefficient {
        &self + &rhs
    }
}

impl Add for &Coefficient {
    type Output = Coefficient;
    fn add(self, rhs: &Coefficient) -> Coefficient {
        Coefficient { real: &self.real + &rhs.real, imag: &self.imag + &rhs.imag }
    }
}

impl AddAssign<&Coefficient> for Coefficient {
    fn add_assign(&mut self, rhs: &Coefficient) {
        self.real.rational += &rhs.real.rational;
        self.real.root += &rhs.real.root;
        self.imag.rational += &rhs.imag.rational;
        self.imag.root += &rhs.imag.root;
    }
}

impl Sub for Coefficient {
    type Output = Coefficient;
    fn sub(self, rhs: Coefficient) -> Coefficient {
        &self - &rhs
    }
}

impl Sub for &Coefficient {
    type Output = Coefficient;
    fn sub(self, rhs: &Coefficient) -> Coefficient {
        Coefficient { real: &self.real - &rhs.real, imag: &self.imag - &rhs.imag }
    }
}

impl Mul for Coefficient {
    type Output = Coefficient;
    fn mul(self, rhs: Coefficient) -> Coefficient {
        self.mul_ref(&rhs)
    }
}

impl Mul for &Coefficient {
    type Output = Coefficient;
    fn mul(self, rhs: &Coefficient) -> Coefficient {
        self.mul_ref(rhs)
    }
}

impl Neg for Coefficient {
    type Output = Coefficient;
    fn neg(self) -> Coefficient {
        -&self
    }
}

impl Neg for &Coefficient {
    type Output = Coefficient;
    fn neg(self) -> Coefficient {
        Coefficient { real: -&self.real, imag: -&self.imag }
    }
}

/// One nonzero rational component together with its unit (`1`, `√2`, `i`, `i√2`).
struct Atom<'a> {
    value: &'a BigRational,
    imaginary: bool,
    root: bool,
}

impl Coefficient {
    fn atoms(&self) -> Vec<Atom<'_>> {
        let parts = [
            (&self.real.rational, false, false),
            (&self.imag.rational, true, false),
            (&self.real.root, false, true),
            (&self.imag.root, true, true),
        ];
        parts
            .into_iter()
            .filter(|(v, _, _)| !v.is_zero())
            .map(|(value, imaginary, root)| Atom { value, imaginary, root })
            .collect()
    }

    /// True when the coefficient is a single component with a negative sign.
    pub(crate) fn is_negative_atom(&self) -> bool {
        let atoms = self.atoms();
        atoms.len() == 1 && atoms[0].value.is_negative()
    }
}

fn write_magnitude(f: &mut fmt::Formatter<'_>, r: &BigRational, bare_unit: bool) -> fmt::Result {
    let r = r.abs();
    if r.is_integer() {
        if bare_unit && r.is_one() {
            return Ok(());
        }
        write!(f, "{}", r.numer())
    } else {
        write!(f, "({}/{})", r.numer(), r.denom())
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, atom: &Atom<'_>) -> fmt::Result {
    let has_unit = atom.imaginary || atom.root;
    write_magnitude(f, atom.value, has_unit)?;
    let mut need_star = !(atom.value.abs().is_one() && atom.value.is_integer());
    if atom.imaginary {
        if need_star {
            f.write_str("*")?;
        }
        f.write_str("i")?;
        need_star = true;
    }
    if atom.root {
        if need_star {
            f.write_str("*")?;
        }
        f.write_str("sqrt2")?;
    }
    Ok(())
}

/// Prints in the expression grammar: a single component prints bare with
/// its sign (`-(3/2)*i`), several components print as a parenthesized sum.
impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms = self.atoms();
        match atoms.len() {
            0 => f.write_str("0"),
            1 => {
                if atoms[0].value.is_negative() {
                    f.write_str("-")?;
                }
                write_atom(f, &atoms[0])
            }
            _ => {
                f.write_str("(")?;
                for (k, atom) in atoms.iter().enumerate() {
                    match (k, atom.value.is_negative()) {
                        (0, true) => f.write_str("-")?,
                        (0, false) => {}
                        (_, true) => f.write_str(" - ")?,
                        (_, false) => f.write_str(" + ")?,
                    }
                    write_atom(f, atom)?;
                }
                f.write_str(")")
            }
        }
    }
}

//! Signed reals stored as a sign plus a base-2 logarithm of the magnitude.
//!
//! Distance sets such as `{2^(n^2)}` leave the range of `f64` after a few
//! dozen terms, so every distance in the crate is carried as a [`LogValue`].
//! Arithmetic on magnitudes below `2^LINEAR_LIMIT` decodes to doubles; above
//! it, sums and differences use `a + log2(1 ± 2^(b-a))`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Magnitudes with `log2mag` at or below this are combined in linear scale.
pub const LINEAR_LIMIT: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

impl Sign {
    fn flip(self) -> Sign {
        match self {
            Sign::Neg => Sign::Pos,
            Sign::Zero => Sign::Zero,
            Sign::Pos => Sign::Neg,
        }
    }

    fn factor(self) -> f64 {
        match self {
            Sign::Neg => -1.0,
            Sign::Zero => 0.0,
            Sign::Pos => 1.0,
        }
    }
}

/// A real number `sign * 2^log2mag`. Zero has `log2mag = -inf`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    sign: Sign,
    log2mag: f64,
}

impl fmt::Debug for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Zero => write!(f, "0"),
            Sign::Pos => write!(f, "+2^{}", self.log2mag),
            Sign::Neg => write!(f, "-2^{}", self.log2mag),
        }
    }
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { sign: Sign::Zero, log2mag: f64::NEG_INFINITY };
    pub const ONE: LogValue = LogValue { sign: Sign::Pos, log2mag: 0.0 };
    pub const INFINITY: LogValue = LogValue { sign: Sign::Pos, log2mag: f64::INFINITY };

    pub fn new(sign: Sign, log2mag: f64) -> Self {
        if sign == Sign::Zero || log2mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue { sign, log2mag }
        }
    }

    /// Positive value `2^l`.
    pub fn pow2(l: f64) -> Self {
        Self::new(Sign::Pos, l)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else if x > 0.0 {
            LogValue { sign: Sign::Pos, log2mag: x.log2() }
        } else {
            LogValue { sign: Sign::Neg, log2mag: (-x).log2() }
        }
    }

    /// Decodes to a double; saturates to `±inf` or `0`.
    pub fn to_f64(self) -> f64 {
        match self.sign {
            Sign::Zero => 0.0,
            s => s.factor() * self.log2mag.exp2(),
        }
    }

    pub fn sign(self) -> Sign {
        self.sign
    }

    pub fn log2mag(self) -> f64 {
        self.log2mag
    }

    pub fn is_zero(self) -> bool {
        self.sign == Sign::Zero
    }

    pub fn is_positive(self) -> bool {
        self.sign == Sign::Pos
    }

    pub fn is_finite(self) -> bool {
        self.sign == Sign::Zero || self.log2mag.is_finite()
    }

    pub fn abs(self) -> Self {
        match self.sign {
            Sign::Neg => LogValue { sign: Sign::Pos, ..self },
            _ => self,
        }
    }

    pub fn neg(self) -> Self {
        LogValue { sign: self.sign.flip(), ..self }
    }

    pub fn mul(self, other: LogValue) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        let sign = if self.sign == other.sign { Sign::Pos } else { Sign::Neg };
        Self::new(sign, self.log2mag + other.log2mag)
    }

    /// `self / other`; division by zero yields a signed infinity (zero over zero is zero).
    pub fn div(self, other: LogValue) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        if other.is_zero() {
            return LogValue { sign: self.sign, log2mag: f64::INFINITY };
        }
        let sign = if self.sign == other.sign { Sign::Pos } else { Sign::Neg };
        Self::new(sign, self.log2mag - other.log2mag)
    }

    /// Ratio `self / other` decoded to a double.
    pub fn ratio(self, other: LogValue) -> f64 {
        self.div(other).to_f64()
    }

    pub fn scale(self, factor: f64) -> Self {
        self.mul(LogValue::from_f64(factor))
    }

    pub fn powf(self, e: f64) -> Self {
        match self.sign {
            Sign::Zero => {
                if e == 0.0 {
                    Self::ONE
                } else {
                    Self::ZERO
                }
            }
            _ => Self::new(Sign::Pos, self.log2mag * e),
        }
    }

    pub fn add(self, other: LogValue) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        if self.log2mag.max(other.log2mag) <= LINEAR_LIMIT {
            return LogValue::from_f64(self.to_f64() + other.to_f64());
        }
        let (big, small) = if self.log2mag >= other.log2mag { (self, other) } else { (other, self) };
        if big.log2mag.is_infinite() {
            return big;
        }
        let t = (small.log2mag - big.log2mag).exp2();
        if big.sign == small.sign {
            Self::new(big.sign, big.log2mag + t.ln_1p() / std::f64::consts::LN_2)
        } else if t >= 1.0 {
            Self::ZERO
        } else {
            Self::new(big.sign, big.log2mag + log2_one_minus(t))
        }
    }

    pub fn sub(self, other: LogValue) -> Self {
        self.add(other.neg())
    }

    pub fn max(self, other: LogValue) -> Self {
        if self.total_cmp(&other) == Ordering::Less {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: LogValue) -> Self {
        if self.total_cmp(&other) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    /// Numeric order of the encoded reals.
    pub fn total_cmp(&self, other: &LogValue) -> Ordering {
        match (self.sign, other.sign) {
            (a, b) if a != b => a.cmp(&b),
            (Sign::Zero, _) => Ordering::Equal,
            (Sign::Pos, _) => self.log2mag.total_cmp(&other.log2mag),
            _ => other.log2mag.total_cmp(&self.log2mag),
        }
    }

    pub fn lt(&self, other: &LogValue) -> bool {
        self.total_cmp(other) == Ordering::Less
    }

    pub fn le(&self, other: &LogValue) -> bool {
        self.total_cmp(other) != Ordering::Greater
    }

    /// Absolute value of the base-2 log of `self / other` for positive operands.
    pub fn log2_distance(self, other: LogValue) -> f64 {
        (self.log2mag - other.log2mag).abs()
    }
}

/// `log2(1 - t)` for `t` in `[0, 1)`, exact for `t >= 1/2`.
fn log2_one_minus(t: f64) -> f64 {
    if t >= 0.5 {
        (1.0 - t).log2()
    } else {
        (-t).ln_1p() / std::f64::consts::LN_2
    }
}

/// `log2(n!)`, exact summation for small `n`, Stirling series beyond.
pub fn log2_factorial(n: f64) -> f64 {
    if n < 2.0 {
        return 0.0;
    }
    if n <= 256.0 {
        static TABLE: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
        let table = TABLE.get_or_init(|| {
            let mut t = vec![0.0f64; 257];
            for k in 2..=256 {
                t[k] = t[k - 1] + (k as f64).log2();
            }
            t
        });
        return table[n.floor() as usize];
    }
    // ln n! = n ln n - n + ln(2 pi n)/2 + 1/(12n) - 1/(360 n^3) + 1/(1260 n^5)
    let ln = n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln() + 1.0 / (12.0 * n)
        - 1.0 / (360.0 * n.powi(3))
        + 1.0 / (1260.0 * n.powi(5));
    ln / std::f64::consts::LN_2
}

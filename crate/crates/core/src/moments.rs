//! Quadrature moments of the two HBT arms and the `g2` they determine.
//!
//! Writing `b^dag b = (X+^2 + X-^2 - 2) / 4` for each arm turns the
//! intensity correlation into sums of quadrature moments:
//!
//! ```text
//!          sum_ij <Xb^i(t+tau)^2 Xc^j(t)^2> - 2 sum_ik <Xk^i^2> + 4
//! g2(tau) = -------------------------------------------------------
//!            (sum_i <Xb^i^2> - 2) (sum_i <Xc^i^2> - 2)
//! ```
//!
//! All moments are raw (not mean-subtracted): the displacement enters
//! through `<X^2> = V + <X>^2`.

use core::fmt;

/// Amplitude (`+`) or phase (`-`) quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quadrature {
    Plus,
    Minus,
}

impl Quadrature {
    pub const BOTH: [Quadrature; 2] = [Quadrature::Plus, Quadrature::Minus];

    pub fn index(self) -> usize {
        match self {
            Self::Plus => 0,
            Self::Minus => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Self::Plus => '+',
            Self::Minus => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '+' | 'p' => Some(Self::Plus),
            '-' | 'm' => Some(Self::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Quadrature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Output port of the 50:50 beamsplitter: `b = (a + v)/sqrt2`, `c = (a - v)/sqrt2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    B,
    C,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::B, Arm::C];

    pub fn index(self) -> usize {
        match self {
            Self::B => 0,
            Self::C => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Self::B => 'b',
            Self::C => 'c',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'b' | 'B' => Some(Self::B),
            'c' | 'C' => Some(Self::C),
            _ => None,
        }
    }
}

/// Quadrature measured on arm `b` (delayed detector) and on arm `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadPair {
    pub b: Quadrature,
    pub c: Quadrature,
}

impl QuadPair {
    pub const ALL: [QuadPair; 4] = [
        QuadPair::new(Quadrature::Plus, Quadrature::Plus),
        QuadPair::new(Quadrature::Plus, Quadrature::Minus),
        QuadPair::new(Quadrature::Minus, Quadrature::Plus),
        QuadPair::new(Quadrature::Minus, Quadrature::Minus),
    ];

    pub const fn new(b: Quadrature, c: Quadrature) -> Self {
        Self { b, c }
    }

    /// Position in [`QuadPair::ALL`].
    pub fn index(self) -> usize {
        2 * self.b.index() + self.c.index()
    }

    pub fn same_quadrature(self) -> bool {
        self.b == self.c
    }

    /// File-name friendly tag, e.g. `pm` for `(+, -)`.
    pub fn tag(self) -> &'static str {
        match (self.b, self.c) {
            (Quadrature::Plus, Quadrature::Plus) => "pp",
            (Quadrature::Plus, Quadrature::Minus) => "pm",
            (Quadrature::Minus, Quadrature::Plus) => "mp",
            (Quadrature::Minus, Quadrature::Minus) => "mm",
        }
    }

    /// Parses `pp`/`pm`/`mp`/`mm` or `++`/`+-`/`-+`/`--`.
    pub fn parse(s: &str) -> Option<Self> {
        let mut it = s.chars();
        let b = Quadrature::from_symbol(it.next()?)?;
        let c = Quadrature::from_symbol(it.next()?)?;
        it.next().is_none().then_some(Self::new(b, c))
    }
}

impl fmt::Display for QuadPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.b, self.c)
    }
}

/// The ten moments that fix `g2` at one delay.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadratureMoments {
    /// `fourth[i][j] = <Xb^i(t+tau)^2 Xc^j(t)^2>`
    pub fourth: [[f64; 2]; 2],
    /// `second[arm][i] = <X_arm^i(t)^2>`
    pub second: [[f64; 2]; 2],
}

impl QuadratureMoments {
    /// `sum_i <X_arm^i^2> - 2`, i.e. four times the mean photon number in the arm.
    pub fn arm_excess(&self, arm: Arm) -> f64 {
        let m = &self.second[arm.index()];
        m[0] + m[1] - 2.0
    }

    pub fn numerator(&self) -> f64 {
        let fourth: f64 = self.fourth.iter().flatten().sum();
        let second: f64 = self.second.iter().flatten().sum();
        fourth - 2.0 * second + 4.0
    }

    pub fn denominator(&self) -> f64 {
        self.arm_excess(Arm::B) * self.arm_excess(Arm::C)
    }

    /// `None` when either arm excess is at or below `min_excess`.
    pub fn g2(&self, min_excess: f64) -> Option<f64> {
        if self.arm_excess(Arm::B) <= min_excess || self.arm_excess(Arm::C) <= min_excess {
            return None;
        }
        Some(self.numerator() / self.denominator())
    }
}

/// `(1/n) sum_t h[t]^2`.
pub fn raw_second_moment(h: &[f64]) -> f64 {
    if h.is_empty() {
        return 0.0;
    }
    h.iter().map(|x| x * x).sum::<f64>() / h.len() as f64
}

/// `(1/(n-k)) sum_t h1[t+k]^2 h2[t]^2`; `None` if the lag leaves no overlap.
pub fn lagged_fourth_moment(h1: &[f64], h2: &[f64], lag: usize) -> Option<f64> {
    let n = h1.len().min(h2.len());
    if lag >= n {
        return None;
    }
    let m = n - lag;
    let sum: f64 = h1[lag..lag + m]
        .iter()
        .zip(&h2[..m])
        .map(|(x, y)| (x * x) * (y * y))
        .sum();
    Some(sum / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn hand_vector_gives_unity() {
        let m = QuadratureMoments {
            fourth: [[4.0; 2]; 2],
            second: [[2.0; 2]; 2],
        };
        assert_eq!(m.numerator(), 4.0);
        assert_eq!(m.denominator(), 4.0);
        assert_eq!(m.g2(1e-3), Some(1.0));
    }

    #[test]
    fn vanishing_excess() {
        let m = QuadratureMoments {
            fourth: [[1.0; 2]; 2],
            second: [[1.0; 2]; 2],
        };
        assert_eq!(m.g2(1e-3), None);
    }

    #[test]
    fn moment_accumulators() {
        let ones = vec![1.0; 50];
        let zeros = vec![0.0; 50];
        for lag in [0, 1, 7] {
            assert_eq!(lagged_fourth_moment(&ones, &ones, lag), Some(1.0));
            assert_eq!(lagged_fourth_moment(&ones, &zeros, lag), Some(0.0));
        }
        assert_eq!(raw_second_moment(&ones), 1.0);
        assert_eq!(raw_second_moment(&zeros), 0.0);
        assert_eq!(lagged_fourth_moment(&ones, &ones, 50), None);

        let h1 = [1.0, 2.0, 3.0];
        let h2 = [1.0, 1.0, 2.0];
        // lag 1: (4*1 + 9*1) / 2
        assert_eq!(lagged_fourth_moment(&h1, &h2, 1), Some(6.5));
    }

    #[test]
    fn pair_labels() {
        for (k, p) in QuadPair::ALL.iter().enumerate() {
            assert_eq!(p.index(), k);
            assert_eq!(QuadPair::parse(p.tag()), Some(*p));
        }
        assert_eq!(QuadPair::parse("+-"), Some(QuadPair::ALL[1]));
        assert_eq!(QuadPair::parse("+x"), None);
        assert_eq!(QuadPair::parse("+++"), None);
    }
}

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Spin configuration on the interior of a box. Bit `i` set means
/// `σ_{x_i} = +1`, clear means `−1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    len: usize,
    bits: u32,
}

impl SpinConfiguration {
    pub fn new(len: usize, bits: u32) -> Result<Self> {
        if len > 32 || (len < 32 && bits >> len != 0) {
            return Err(Error::InvalidParameter(format!(
                "bits {bits:#x} do not fit in {len} spins"
            )));
        }
        Ok(SpinConfiguration { len, bits })
    }

    pub fn all_plus(len: usize) -> Self {
        SpinConfiguration {
            len,
            bits: low_mask32(len),
        }
    }

    pub fn all_minus(len: usize) -> Self {
        SpinConfiguration { len, bits: 0 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn spin(&self, i: usize) -> i32 {
        if self.bits >> i & 1 == 1 {
            1
        } else {
            -1
        }
    }
}

pub(crate) fn low_mask32(len: usize) -> u32 {
    if len >= 32 {
        u32::MAX
    } else {
        (1u32 << len) - 1
    }
}

/// Fixed ±1 values on the boundary `∂V`, packed into 64-bit words.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundaryCondition {
    len: usize,
    words: Vec<u64>,
}

impl BoundaryCondition {
    pub fn all_plus(len: usize) -> Self {
        let mut b = Self::all_minus(len);
        for i in 0..len {
            b.set(i, 1);
        }
        b
    }

    pub fn all_minus(len: usize) -> Self {
        BoundaryCondition {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    /// Builds a boundary condition of at most 64 sites from packed bits.
    pub fn from_bits(len: usize, bits: u64) -> Self {
        assert!(len <= 64, "from_bits supports at most 64 sites");
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        BoundaryCondition {
            len,
            words: if len == 0 { vec![] } else { vec![bits & mask] },
        }
    }

    pub fn from_spins(spins: &[i32]) -> Result<Self> {
        let mut b = Self::all_minus(spins.len());
        for (i, &s) in spins.iter().enumerate() {
            match s {
                1 => b.set(i, 1),
                -1 => {}
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "spin value {other} at boundary index {i}"
                    )))
                }
            }
        }
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Packed bits, available when the boundary has at most 64 sites.
    pub fn to_bits(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    pub fn spin(&self, i: usize) -> i32 {
        assert!(i < self.len);
        if self.words[i / 64] >> (i % 64) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn set(&mut self, i: usize, spin: i32) {
        assert!(i < self.len);
        let bit = 1u64 << (i % 64);
        if spin > 0 {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    /// The flip `σ^y_{∂V}`: a copy with the spin at `y` negated.
    pub fn flipped(&self, y: usize) -> Self {
        let mut b = self.clone();
        b.set(y, -self.spin(y));
        b
    }

    /// Global spin flip of every boundary spin.
    pub fn negated(&self) -> Self {
        let mut b = self.clone();
        for i in 0..self.len {
            b.set(i, -self.spin(i));
        }
        b
    }

    /// Componentwise order `self ≥ other`.
    pub fn dominates(&self, other: &Self) -> bool {
        self.len == other.len && (0..self.len).all(|i| self.spin(i) >= other.spin(i))
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.spin(i) > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spins = s
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(Error::InvalidParameter(format!(
                    "boundary character `{other}`"
                ))),
            })
            .collect::<Result<Vec<i32>>>()?;
        Self::from_spins(&spins)
    }
}

impl Serialize for BoundaryCondition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BoundaryCondition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How the crossing edges `x ∈ V, y ∈ ∂V` enter the energy.
#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    Fixed(BoundaryCondition),
    /// Empty boundary conditions: all crossing terms are dropped.
    Free,
}

impl From<BoundaryCondition> for Boundary {
    fn from(b: BoundaryCondition) -> Self {
        Boundary::Fixed(b)
    }
}

/// Magnetic field, one value per interior site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldAssignment(pub Vec<f64>);

impl FieldAssignment {
    pub fn zero(len: usize) -> Self {
        FieldAssignment(vec![0.0; len])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&h| h == 0.0)
    }

    pub fn validate(&self, len: usize) -> Result<()> {
        if self.0.len() != len {
            return Err(Error::LengthMismatch {
                what: "field assignment",
                expected: len,
                actual: self.0.len(),
            });
        }
        if let Some(h) = self.0.iter().find(|h| !h.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite field {h}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flip_is_single_bit_toggle() {
        let b: BoundaryCondition = "++-+".parse().unwrap();
        assert_eq!(b.flipped(2).to_string(), "++++");
        assert_eq!(b.flipped(0).to_string(), "-+-+");
        assert_eq!(b.flipped(1).flipped(1), b);
    }

    #[test]
    fn wide_boundary_roundtrip() {
        let mut b = BoundaryCondition::all_minus(100);
        b.set(70, 1);
        assert_eq!(b.spin(70), 1);
        assert_eq!(b.spin(69), -1);
        assert_eq!(b.to_bits(), None);
        let s = b.to_string();
        assert_eq!(s.parse::<BoundaryCondition>().unwrap(), b);
    }

    #[test]
    fn ordering() {
        let hi: BoundaryCondition = "++-".parse().unwrap();
        let lo: BoundaryCondition = "-+-".parse().unwrap();
        assert!(hi.dominates(&lo));
        assert!(!lo.dominates(&hi));
        assert_eq!(hi.negated().to_string(), "--+");
    }

    #[test]
    fn spin_configuration_bounds() {
        assert!(SpinConfiguration::new(3, 0b1000).is_err());
        let c = SpinConfiguration::new(3, 0b101).unwrap();
        assert_eq!((c.spin(0), c.spin(1), c.spin(2)), (1, -1, 1));
        assert_eq!(SpinConfiguration::all_plus(4).bits(), 0b1111);
    }

    #[test]
    fn field_validation() {
        assert!(FieldAssignment(vec![0.0, f64::NAN]).validate(2).is_err());
        assert!(FieldAssignment(vec![0.0]).validate(2).is_err());
        assert!(FieldAssignment::zero(3).is_zero());
    }
}

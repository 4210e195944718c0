use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Gray-mapped square QAM with unit average energy.
///
/// A symbol is addressed by an integer label of `bits_per_symbol` bits; the
/// upper half selects the in-phase level and the lower half the quadrature
/// level, each Gray coded, so a bit error count is `popcount(a ^ b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> u32 {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
        }
    }

    pub fn order(self) -> u32 {
        1 << self.bits_per_symbol()
    }

    fn axis_bits(self) -> u32 {
        self.bits_per_symbol() / 2
    }

    fn scale(self) -> f64 {
        // mean energy of the ±1, ±3, … grid is 2(M−1)/3
        (2.0 * (self.order() as f64 - 1.0) / 3.0).sqrt().recip()
    }

    pub fn map(self, label: u32) -> C64 {
        let b = self.axis_bits();
        let mask = (1 << b) - 1;
        let i = axis_level(label >> b, b);
        let q = axis_level(label & mask, b);
        C64::new(i, q) * self.scale()
    }

    /// Nearest-point hard decision.
    pub fn demap(self, z: C64) -> u32 {
        let b = self.axis_bits();
        let s = self.scale();
        (axis_label(z.re / s, b) << b) | axis_label(z.im / s, b)
    }

    pub fn points(self) -> Vec<C64> {
        (0..self.order()).map(|l| self.map(l)).collect()
    }
}

fn gray_decode(mut g: u32) -> u32 {
    let mut b = g;
    while g > 1 {
        g >>= 1;
        b ^= g;
    }
    b
}

fn axis_level(gray: u32, bits: u32) -> f64 {
    let levels = 1u32 << bits;
    2.0 * gray_decode(gray) as f64 - (levels - 1) as f64
}

fn axis_label(x: f64, bits: u32) -> u32 {
    let levels = (1u32 << bits) as f64;
    let idx = ((x + levels - 1.0) / 2.0).round();
    // NaN lands on 0 through the saturating cast
    let idx = idx.clamp(0.0, levels - 1.0) as u32;
    idx ^ (idx >> 1)
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "qam16",
            Modulation::Qam64 => "qam64",
        })
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" | "qam4" => Ok(Modulation::Qpsk),
            "16qam" | "qam16" => Ok(Modulation::Qam16),
            "64qam" | "qam64" => Ok(Modulation::Qam64),
            _ => Err(Error::InvalidParameter(format!("unknown modulation {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Modulation; 3] = [Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64];

    #[test]
    fn unit_average_energy() {
        for m in ALL {
            let e = m.points().iter().map(|z| z.norm_sqr()).sum::<f64>() / m.order() as f64;
            assert!((e - 1.0).abs() < 1e-12, "{m}");
        }
    }

    #[test]
    fn demap_inverts_map() {
        for m in ALL {
            for l in 0..m.order() {
                assert_eq!(m.demap(m.map(l)), l);
            }
        }
    }

    #[test]
    fn nearest_neighbours_differ_in_one_bit() {
        for m in ALL {
            let pts = m.points();
            let dmin = {
                let s = m.scale();
                2.0 * s
            };
            for a in 0..m.order() {
                for b in 0..m.order() {
                    if ((pts[a as usize] - pts[b as usize]).norm() - dmin).abs() < 1e-9 {
                        assert_eq!((a ^ b).count_ones(), 1, "{m}: {a} {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn qpsk_points() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((Modulation::Qpsk.map(0b11) - C64::new(s, s)).norm() < 1e-15);
        assert!((Modulation::Qpsk.map(0b00) - C64::new(-s, -s)).norm() < 1e-15);
    }

    #[test]
    fn demap_saturates_and_handles_nan() {
        let m = Modulation::Qam16;
        assert_eq!(m.demap(C64::new(100.0, -100.0)), m.demap(m.map(0b1000)));
        assert!(m.demap(C64::new(f64::NAN, f64::NAN)) < m.order());
    }

    #[test]
    fn parse_names() {
        assert_eq!("QPSK".parse::<Modulation>().unwrap(), Modulation::Qpsk);
        assert_eq!("16qam".parse::<Modulation>().unwrap(), Modulation::Qam16);
        assert!("8psk".parse::<Modulation>().is_err());
    }
}

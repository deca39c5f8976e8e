//! BPSK and QPSK reference constellations over `N` channel uses.
//!
//! Message `i` is written in binary with `b·N` bits (most significant
//! first), split into `N` symbols of `b` bits, and symbol value `s` is sent
//! on its channel use as
//!
//! * BPSK (`b = 1`): `+1` for `s = 0`, `−1` for `s = 1`
//! * QPSK (`b = 2`): `e^{j(π/4 + sπ/2)}`, i.e. `0 → (1+j)/√2`,
//!   `1 → (−1+j)/√2`, `2 → (−1−j)/√2`, `3 → (1−j)/√2`
//!
//! scaled by `1/√N` so every vector has unit energy.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::io::Constellation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineFamily {
    Bpsk,
    Qpsk,
}

impl BaselineFamily {
    pub fn bits_per_use(self) -> u32 {
        match self {
            BaselineFamily::Bpsk => 1,
            BaselineFamily::Qpsk => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BaselineFamily::Bpsk => "bpsk",
            BaselineFamily::Qpsk => "qpsk",
        }
    }

    /// Unit-energy symbol for value `s < 2^b`, before the `1/√N` scaling.
    fn symbol(self, s: usize, scale: f64) -> Complex64 {
        match self {
            BaselineFamily::Bpsk => Complex64::new(if s == 0 { scale } else { -scale }, 0.0),
            BaselineFamily::Qpsk => {
                let c = (0.5f64).sqrt() * scale;
                match s {
                    0 => Complex64::new(c, c),
                    1 => Complex64::new(-c, c),
                    2 => Complex64::new(-c, -c),
                    _ => Complex64::new(c, -c),
                }
            }
        }
    }
}

impl fmt::Display for BaselineFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(BaselineFamily::Bpsk),
            "qpsk" => Ok(BaselineFamily::Qpsk),
            other => Err(Error::Invalid {
                field: "baseline",
                reason: format!("unknown family {other:?}, expected bpsk or qpsk"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineSpec {
    pub family: BaselineFamily,
    pub m: usize,
    pub n: usize,
}

impl BaselineSpec {
    pub fn new(family: BaselineFamily, m: usize, n: usize) -> Self {
        Self { family, m, n }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || self.n < 1 {
            return Err(Error::Invalid {
                field: "baseline",
                reason: format!("need M >= 2 and N >= 1, got M = {}, N = {}", self.m, self.n),
            });
        }
        let bits = self.family.bits_per_use() as usize * self.n;
        if bits < usize::BITS as usize && self.m > 1usize << bits {
            return Err(Error::TooManyMessages {
                family: self.family.name(),
                m: self.m,
                n: self.n,
            });
        }
        Ok(())
    }
}

pub fn build_baseline(spec: BaselineSpec) -> Result<Constellation> {
    spec.validate()?;
    let b = spec.family.bits_per_use() as usize;
    let mask = (1usize << b) - 1;
    let scale = 1.0 / (spec.n as f64).sqrt();
    let mut points = Vec::with_capacity(spec.m * spec.n);
    for i in 0..spec.m {
        for use_index in 0..spec.n {
            let shift = b * (spec.n - 1 - use_index);
            let s = if shift < usize::BITS as usize { (i >> shift) & mask } else { 0 };
            points.push(spec.family.symbol(s, scale));
        }
    }
    Constellation::new(spec.m, spec.n, points)
}

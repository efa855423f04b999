//! Symmetric smoothing kernels used to weight comparisons by their distance
//! from the evaluation time.

use core::fmt;
use core::str::FromStr;

use crate::error::{KrcError, Result};

/// Weights below this are flushed to zero.
pub const WEIGHT_FLOOR: f64 = 1e-300;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum KernelFamily {
    /// Standard normal density.
    #[default]
    Gaussian,
    /// `0.75 (1 - v^2)` on `[-1, 1]`.
    Epanechnikov,
    /// Uniform density `0.5` on `[-1, 1]`.
    Boxcar,
}

/// A nonnegative, symmetric kernel integrating to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Kernel {
    family: KernelFamily,
}

impl Kernel {
    pub const fn new(family: KernelFamily) -> Self {
        Self { family }
    }

    pub const fn gaussian() -> Self {
        Self::new(KernelFamily::Gaussian)
    }

    pub const fn epanechnikov() -> Self {
        Self::new(KernelFamily::Epanechnikov)
    }

    pub const fn boxcar() -> Self {
        Self::new(KernelFamily::Boxcar)
    }

    pub const fn family(&self) -> KernelFamily {
        self.family
    }

    /// `∫ v² K(v) dv`.
    pub const fn second_moment(&self) -> f64 {
        match self.family {
            KernelFamily::Gaussian => 1.0,
            KernelFamily::Epanechnikov => 0.2,
            KernelFamily::Boxcar => 1.0 / 3.0,
        }
    }

    /// `∫ K(v)² dv`.
    pub const fn squared_integral(&self) -> f64 {
        match self.family {
            // 1 / (2 sqrt(pi))
            KernelFamily::Gaussian => 0.282_094_791_773_878_14,
            KernelFamily::Epanechnikov => 0.6,
            KernelFamily::Boxcar => 0.5,
        }
    }

    /// Half-width of the support in units of `v`, if bounded.
    pub const fn support(&self) -> Option<f64> {
        match self.family {
            KernelFamily::Gaussian => None,
            KernelFamily::Epanechnikov | KernelFamily::Boxcar => Some(1.0),
        }
    }

    /// The kernel density at `v`.
    pub fn density(&self, v: f64) -> f64 {
        let w = match self.family {
            KernelFamily::Gaussian => INV_SQRT_2PI * libm::exp(-0.5 * v * v),
            KernelFamily::Epanechnikov => {
                if v.abs() <= 1.0 {
                    0.75 * (1.0 - v * v)
                } else {
                    0.0
                }
            }
            KernelFamily::Boxcar => {
                if v.abs() <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
        };
        if w < WEIGHT_FLOOR {
            0.0
        } else {
            w
        }
    }

    /// `K((t - t_k) / h)`, the weight a comparison at `t_k` receives at `t`.
    pub fn weight(&self, t: f64, t_k: f64, h: f64) -> Result<f64> {
        check_bandwidth(h)?;
        Ok(self.density((t - t_k) / h))
    }
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(KrcError::InvalidBandwidth(h))
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Epanechnikov => "epanechnikov",
            KernelFamily::Boxcar => "boxcar",
        })
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.family.fmt(f)
    }
}

impl FromStr for KernelFamily {
    type Err = KrcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(KernelFamily::Gaussian),
            "epanechnikov" => Ok(KernelFamily::Epanechnikov),
            "boxcar" | "uniform" => Ok(KernelFamily::Boxcar),
            other => Err(KrcError::InvalidConfig(alloc::format!(
                "unknown kernel `{other}`"
            ))),
        }
    }
}

impl FromStr for Kernel {
    type Err = KrcError;

    fn from_str(s: &str) -> Result<Self> {
        s.parse().map(Kernel::new)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Kernel; 3] = [Kernel::gaussian(), Kernel::epanechnikov(), Kernel::boxcar()];

    /// Composite Simpson on `[-a, a]`.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, n: usize) -> f64 {
        let step = 2.0 * a / n as f64;
        let mut acc = f(-a) + f(a);
        for k in 1..n {
            let x = -a + k as f64 * step;
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        acc * step / 3.0
    }

    #[test]
    fn gaussian_peak() {
        // 1/sqrt(2 pi) to 10 digits
        let w = Kernel::gaussian().weight(0.3, 0.3, 0.1).unwrap();
        assert!((w - 0.398_942_280_4).abs() < 1e-10);
    }

    #[test]
    fn tails_vanish() {
        for k in ALL {
            assert!(k.weight(0.0, 1e6, 0.1).unwrap() == 0.0);
        }
        assert_eq!(Kernel::boxcar().weight(0.0, 0.1000001, 0.1).unwrap(), 0.0);
        assert_eq!(Kernel::epanechnikov().weight(0.0, 0.2, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_weights() {
        for k in ALL {
            for d in [0.37, 0.07] {
                let a = k.weight(0.5, 0.5 + d, 0.1).unwrap();
                let b = k.weight(0.5, 0.5 - d, 0.1).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.max(b), "{k:?} {d}");
            }
            assert_eq!(k.density(0.3), k.density(-0.3));
        }
    }

    #[test]
    fn rejects_bad_bandwidth() {
        for h in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                Kernel::gaussian().weight(0.0, 0.0, h),
                Err(KrcError::InvalidBandwidth(_))
            ));
        }
    }

    #[test]
    fn quadrature_matches_moments() {
        for k in ALL {
            // Compact kernels have kinks at +-1; integrate on their support.
            let a = k.support().unwrap_or(40.0);
            let n = 200_000;
            let mass = simpson(|v| k.density(v), a, n);
            let second = simpson(|v| v * v * k.density(v), a, n);
            let squared = simpson(|v| k.density(v).powi(2), a, n);
            assert!((mass - 1.0).abs() < 1e-6, "{k}: mass {mass}");
            assert!((second - k.second_moment()).abs() < 1e-6, "{k}: second {second}");
            assert!((squared - k.squared_integral()).abs() < 1e-6, "{k}: squared {squared}");
        }
    }

    #[test]
    fn far_tail_is_clamped() {
        // exp(-0.5 * 38^2) ~ 1e-314 is subnormal
        assert_eq!(Kernel::gaussian().density(38.0), 0.0);
        assert!(Kernel::gaussian().density(37.0) > 0.0);
    }

    #[test]
    fn parses_names() {
        assert_eq!("Gaussian".parse::<Kernel>().unwrap(), Kernel::gaussian());
        assert_eq!("boxcar".parse::<Kernel>().unwrap(), Kernel::boxcar());
        assert!("triangle".parse::<Kernel>().is_err());
    }
}

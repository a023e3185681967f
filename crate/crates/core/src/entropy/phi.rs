use crate::error::{Error, Result};

/// Smooth convex functions for the entropy functionals: `u^2` on the line,
/// `u log u` on the positive axis, and `u^p` for `p` in `(1, 2]` on the
/// nonnegative axis. All built-ins are strictly convex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phi {
    Square,
    XLogX,
    Power(f64),
}

impl Phi {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::Invalid(format!(
                "power entropy exponent must lie in (1, 2], got {p}"
            )));
        }
        Ok(Phi::Power(p))
    }

    pub fn name(&self) -> String {
        match self {
            Phi::Square => "square".into(),
            Phi::XLogX => "xlogx".into(),
            Phi::Power(p) => format!("power:{p}"),
        }
    }

    pub fn domain_description(&self) -> &'static str {
        match self {
            Phi::Square => "(-inf, inf)",
            Phi::XLogX => "(0, inf)",
            Phi::Power(_) => "[0, inf)",
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v.is_finite()
            && match self {
                Phi::Square => true,
                Phi::XLogX => v > 0.0,
                Phi::Power(_) => v >= 0.0,
            }
    }

    pub fn check(&self, v: f64) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::PhiDomain {
                value: v,
                domain: self.domain_description().into(),
                phi: self.name(),
            })
        }
    }

    pub fn strictly_convex(&self) -> bool {
        true
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Phi::Square => u * u,
            Phi::XLogX => u * u.ln(),
            Phi::Power(p) => u.powf(*p),
        }
    }

    pub fn d1(&self, u: f64) -> f64 {
        match self {
            Phi::Square => 2.0 * u,
            Phi::XLogX => u.ln() + 1.0,
            Phi::Power(p) => p * u.powf(p - 1.0),
        }
    }

    pub fn d2(&self, u: f64) -> f64 {
        match self {
            Phi::Square => 2.0,
            Phi::XLogX => 1.0 / u,
            Phi::Power(p) => p * (p - 1.0) * u.powf(p - 2.0),
        }
    }

    /// Bregman divergence `Phi(p) - Phi(q) - (p - q) Phi'(q)`; nonnegative by
    /// convexity.
    pub fn bregman(&self, p: f64, q: f64) -> Result<f64> {
        self.check(p)?;
        self.check(q)?;
        Ok(self.bregman_unchecked(p, q))
    }

    pub(crate) fn bregman_unchecked(&self, p: f64, q: f64) -> f64 {
        self.eval(p) - self.eval(q) - (p - q) * self.d1(q)
    }
}

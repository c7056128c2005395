//! Observation windows `Delta(r) = r * Delta` and the distance density of two
//! independent uniform points in the window.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_estimate, integrate_with_breaks, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowShape {
    /// `Delta = [-1, 1]^2`
    Square,
}

/// The homothetic window `Delta(r)`; only the planar square is supported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub shape: WindowShape,
    pub r: f64,
    pub d: usize,
}

impl WindowSpec {
    pub fn square(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!(
                "window scale r must be positive, got {r}"
            )));
        }
        Ok(Self {
            shape: WindowShape::Square,
            r,
            d: 2,
        })
    }

    /// `|Delta|` of the unit-scale window.
    pub fn base_volume(&self) -> f64 {
        4.0
    }

    /// `|Delta(r)| = r^d |Delta|`.
    pub fn volume(&self) -> f64 {
        self.base_volume() * self.r.powi(self.d as i32)
    }

    pub fn side(&self) -> f64 {
        2.0 * self.r
    }

    pub fn diameter(&self) -> f64 {
        self.side() * std::f64::consts::SQRT_2
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|c| c.abs() <= self.r)
    }

    /// Volume of `Delta(r) ∩ (Delta(r) - u)`.
    pub fn set_covariance(&self, u: &[f64]) -> f64 {
        let side = self.side();
        u.iter().map(|ui| (side - ui.abs()).max(0.0)).product()
    }

    /// `int_0^{2 pi} g(rho cos t, rho sin t) dt`, with `g` the set covariance.
    fn angular_mass(&self, rho: f64) -> f64 {
        let side = self.side();
        let f = |t: f64| (side - rho * t.cos()).max(0.0) * (side - rho * t.sin()).max(0.0);
        let mut lo = 0.0;
        let mut hi = FRAC_PI_2;
        if rho > side {
            lo = (side / rho).acos();
            hi = (side / rho).asin();
            if lo >= hi {
                return 0.0;
            }
        }
        let scale = side * side;
        let opts = QuadOptions {
            abs_tol: 1e-14 * scale,
            rel_tol: 1e-13,
            max_subdivisions: 200,
        };
        4.0 * integrate_estimate(f, &[lo, hi], &opts).value
    }

    /// Density `psi(rho)` of `|U - V|` for `U, V` independent and uniform on
    /// the window.
    pub fn distance_density(&self, rho: f64) -> f64 {
        if rho < 0.0 || rho > self.diameter() {
            return 0.0;
        }
        rho * self.angular_mass(rho) / self.volume().powi(2)
    }

    fn breaks(&self) -> [f64; 3] {
        [0.0, self.side(), self.diameter()]
    }

    /// `int int_{Delta(r)^2} Q(|x - y|) dx dy`, computed through the distance
    /// density.
    pub fn double_integral<Q: Fn(f64) -> f64>(&self, q: Q) -> Result<f64> {
        let vol = self.volume();
        let opts = QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 4000,
        };
        let res = integrate_with_breaks(
            |rho| q(rho) * self.distance_density(rho),
            &self.breaks(),
            &opts,
        )
        .map_err(|e| match e {
            Error::QuadratureNotConverged {
                estimate, error, ..
            } => Error::DivergentIntegral(format!(
                "distance-density quadrature failed (estimate {estimate:.6e}, error {error:.3e})"
            )),
            other => other,
        })?;
        Ok(vol * vol * res.value)
    }

    /// `c1(kappa, alpha, Delta(r)) = int_0^diam z^(-alpha kappa) psi(z) dz`.
    ///
    /// Uses `z = t^(1/(d - alpha kappa))`, which turns the integrable
    /// singularity at the origin into a bounded integrand.
    pub fn c1_coefficient(&self, kappa: usize, alpha: f64) -> Result<f64> {
        let exponent = alpha * kappa as f64;
        let d = self.d as f64;
        if exponent >= d {
            return Err(Error::DivergentIntegral(format!(
                "alpha * kappa = {exponent} >= d = {}",
                self.d
            )));
        }
        if exponent < 0.0 {
            return Err(Error::Domain(format!(
                "alpha * kappa must be nonnegative, got {exponent}"
            )));
        }
        let power = d - exponent;
        let vol2 = self.volume().powi(2);
        let integrand = |t: f64| {
            let z = t.powf(1.0 / power);
            self.angular_mass(z) / (vol2 * power)
        };
        let breaks = self.breaks().map(|z| z.powf(power));
        let opts = QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-11,
            max_subdivisions: 4000,
        };
        Ok(integrate_with_breaks(integrand, &breaks, &opts)?.value)
    }
}

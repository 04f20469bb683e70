//! The bump attached to one apartment: a plateau on the room and the lower
//! passage, a linear drop across the tiny passage, zero elsewhere.

use serde::{Deserialize, Serialize};

use super::apartment::Apartment;
use crate::error::{invalid, Result};
use crate::geometry::Point;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TestFunction {
    pub apartment: Apartment,
    pub lambda: f64,
    pub q: f64,
}

impl TestFunction {
    pub fn new(apartment: Apartment, lambda: f64, q: f64) -> Result<Self> {
        let n = apartment.n as f64;
        if !(lambda >= n - 1.0 && lambda < n) {
            return Err(invalid("lambda", format!("must lie in [n-1, n), got {lambda}")));
        }
        if !(q >= 1.0 && q.is_finite()) {
            return Err(invalid("q", format!("must be >= 1, got {q}")));
        }
        Ok(TestFunction { apartment, lambda, q })
    }

    /// `ℓ^{(λ-n)/q}`.
    pub fn plateau(&self) -> f64 {
        let a = &self.apartment;
        a.side.powf((self.lambda - a.n as f64) / self.q)
    }

    /// Derivative along the last axis inside the tiny passage.
    pub fn slope(&self) -> f64 {
        -16.0 * self.plateau() / self.apartment.side
    }

    /// Value as a function of the last coordinate inside the passage column.
    pub fn profile(&self, xn: f64) -> f64 {
        let a = &self.apartment;
        let t = xn - a.center[a.n - 1];
        let l = a.side;
        if t <= 5.0 * l / 32.0 {
            self.plateau()
        } else if t >= 7.0 * l / 32.0 {
            0.0
        } else {
            self.plateau() * (7.0 * l / 32.0 - t) * 16.0 / l
        }
    }

    pub fn eval(&self, x: &Point) -> f64 {
        let a = &self.apartment;
        let n = a.n;
        let r = a.room();
        if (0..n).all(|i| x[i] >= r.lo[i] && x[i] <= r.hi[i]) {
            return self.plateau();
        }
        let p = a.passage();
        let inside = (0..n - 1).all(|i| x[i] > p.lo[i] && x[i] < p.hi[i]) && x[n - 1] >= p.lo[n - 1] && x[n - 1] <= p.hi[n - 1];
        if inside {
            self.profile(x[n - 1])
        } else {
            0.0
        }
    }

    /// `∫ |u|^q` in closed form: room, lower passage plateau and ramp.
    pub fn lq_power(&self) -> f64 {
        let a = &self.apartment;
        let n = a.n as i32;
        let l = a.side;
        let pq = self.plateau().powf(self.q);
        let section = (2.0 * a.w()).powi(n - 1);
        pq * ((l / 4.0).powi(n) + section * (l / 32.0 + l / 16.0 / (self.q + 1.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DyadicCube;

    #[test]
    fn plateau_and_slope() {
        let a = Apartment::new(DyadicCube::new(0, [0, 0, 0]), 2.0, 2);
        let u = TestFunction::new(a, 1.0, 1.0).unwrap();
        assert_eq!(u.plateau(), 1.0);
        assert_eq!(u.slope(), -16.0);
        let b = Apartment::new(DyadicCube::new(1, [0, 0, 0]), 2.0, 2);
        let v = TestFunction::new(b, 1.0, 1.0).unwrap();
        assert_eq!(v.plateau(), 2.0);
        assert_eq!(v.slope(), -64.0);
    }

    #[test]
    fn continuous_at_ramp_ends() {
        let a = Apartment::new(DyadicCube::new(0, [0, 0, 0]), 2.0, 2);
        let u = TestFunction::new(a, 1.0, 1.0).unwrap();
        assert_eq!(u.profile(0.5 + 5.0 / 32.0), 1.0);
        assert_eq!(u.profile(0.5 + 7.0 / 32.0), 0.0);
    }
}

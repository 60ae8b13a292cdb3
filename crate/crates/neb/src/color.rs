//! Linear RGB spectra.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Sub};

/// Linear RGB triple used for radiance, flux and reflectance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

pub const fn rgb(r: f64, g: f64, b: f64) -> Rgb {
    Rgb { r, g, b }
}

impl Rgb {
    pub const BLACK: Rgb = rgb(0.0, 0.0, 0.0);
    pub const WHITE: Rgb = rgb(1.0, 1.0, 1.0);

    pub fn splat(v: f64) -> Rgb {
        rgb(v, v, v)
    }

    /// Rec. 709 luminance.
    pub fn luminance(self) -> f64 {
        0.2126 * self.r + 0.7152 * self.g + 0.0722 * self.b
    }

    pub fn is_black(self) -> bool {
        self.r == 0.0 && self.g == 0.0 && self.b == 0.0
    }

    pub fn is_finite(self) -> bool {
        self.r.is_finite() && self.g.is_finite() && self.b.is_finite()
    }

    pub fn max_component(self) -> f64 {
        self.r.max(self.g).max(self.b)
    }

    pub fn min_component(self) -> f64 {
        self.r.min(self.g).min(self.b)
    }

    pub fn channel(self, i: usize) -> f64 {
        match i {
            0 => self.r,
            1 => self.g,
            2 => self.b,
            _ => panic!("channel {i} out of range"),
        }
    }
}

impl Add for Rgb {
    type Output = Rgb;
    fn add(self, o: Rgb) -> Rgb {
        rgb(self.r + o.r, self.g + o.g, self.b + o.b)
    }
}

impl AddAssign for Rgb {
    fn add_assign(&mut self, o: Rgb) {
        *self = *self + o;
    }
}

impl Sub for Rgb {
    type Output = Rgb;
    fn sub(self, o: Rgb) -> Rgb {
        rgb(self.r - o.r, self.g - o.g, self.b - o.b)
    }
}

impl Mul for Rgb {
    type Output = Rgb;
    fn mul(self, o: Rgb) -> Rgb {
        rgb(self.r * o.r, self.g * o.g, self.b * o.b)
    }
}

impl Mul<f64> for Rgb {
    type Output = Rgb;
    fn mul(self, s: f64) -> Rgb {
        rgb(self.r * s, self.g * s, self.b * s)
    }
}

impl MulAssign<f64> for Rgb {
    fn mul_assign(&mut self, s: f64) {
        *self = *self * s;
    }
}

impl MulAssign for Rgb {
    fn mul_assign(&mut self, o: Rgb) {
        *self = *self * o;
    }
}

impl Mul<Rgb> for f64 {
    type Output = Rgb;
    fn mul(self, c: Rgb) -> Rgb {
        c * self
    }
}

impl Div<f64> for Rgb {
    type Output = Rgb;
    fn div(self, s: f64) -> Rgb {
        self * (1.0 / s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luminance_weights() {
        assert!((Rgb::WHITE.luminance() - 1.0).abs() < 1e-12);
        assert_eq!(Rgb::BLACK.luminance(), 0.0);
        assert!((rgb(0.0, 1.0, 0.0).luminance() - 0.7152).abs() < 1e-12);
    }

    #[test]
    fn arithmetic() {
        let a = rgb(1.0, 2.0, 3.0);
        assert_eq!(a * 2.0, rgb(2.0, 4.0, 6.0));
        assert_eq!(a * rgb(0.5, 0.5, 2.0), rgb(0.5, 1.0, 6.0));
        assert_eq!(a + a - a, a);
        assert_eq!(a.max_component(), 3.0);
    }
}

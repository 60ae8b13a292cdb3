//! Accumulation framebuffer and finalized linear images.
//!
//! Splats accumulate running totals; the mean over completed iterations is
//! the estimate. Threads accumulate into private buffers that are summed
//! after each pass, since photon splats land on arbitrary pixels.

use crate::color::Rgb;

#[derive(Clone, Debug)]
pub struct FrameBuffer {
    width: u32,
    height: u32,
    data: Vec<Rgb>,
    iterations: u64,
}

impl FrameBuffer {
    pub fn new(width: u32, height: u32) -> FrameBuffer {
        FrameBuffer {
            width,
            height,
            data: vec![Rgb::BLACK; (width * height) as usize],
            iterations: 0,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn pixel_count(&self) -> usize {
        self.data.len()
    }

    /// Raw accumulated totals, row major.
    pub fn data(&self) -> &[Rgb] {
        &self.data
    }

    pub fn splat(&mut self, pixel: u32, value: Rgb) {
        debug_assert!(value.is_finite(), "non-finite splat {value:?}");
        debug_assert!(
            value.r >= 0.0 && value.g >= 0.0 && value.b >= 0.0,
            "negative splat {value:?}"
        );
        self.data[pixel as usize] += value;
    }

    pub fn splat_xy(&mut self, x: u32, y: u32, value: Rgb) {
        self.splat(y * self.width + x, value);
    }

    /// Fold another buffer's totals into this one (iteration count is left
    /// alone; partial buffers carry none).
    pub fn add_from(&mut self, other: &FrameBuffer) {
        assert_eq!((self.width, self.height), (other.width, other.height));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    pub fn advance_iterations(&mut self, n: u64) {
        self.iterations += n;
    }

    /// Mean image over completed iterations.
    pub fn mean_image(&self) -> Image {
        assert!(self.iterations > 0, "no completed iterations");
        let inv = 1.0 / self.iterations as f64;
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&c| c * inv).collect(),
        }
    }
}

/// Finalized linear RGB image.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub data: Vec<Rgb>,
}

impl Image {
    pub fn new(width: u32, height: u32) -> Image {
        Image { width, height, data: vec![Rgb::BLACK; (width * height) as usize] }
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        self.data[(y * self.width + x) as usize]
    }

    pub fn mean_luminance(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|c| c.luminance()).sum::<f64>() / self.data.len() as f64
    }

    /// Mean luminance over an inclusive pixel rectangle.
    pub fn region_mean_luminance(&self, x0: u32, y0: u32, x1: u32, y1: u32) -> f64 {
        let mut sum = 0.0;
        let mut n = 0u64;
        for y in y0..=y1.min(self.height - 1) {
            for x in x0..=x1.min(self.width - 1) {
                sum += self.pixel(x, y).luminance();
                n += 1;
            }
        }
        sum / n.max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::rgb;

    #[test]
    fn mean_divides_by_iterations() {
        let mut fb = FrameBuffer::new(2, 1);
        fb.splat_xy(0, 0, rgb(1.0, 2.0, 3.0));
        fb.splat_xy(0, 0, rgb(1.0, 0.0, 1.0));
        fb.advance_iterations(2);
        let img = fb.mean_image();
        assert_eq!(img.pixel(0, 0), rgb(1.0, 1.0, 2.0));
        assert_eq!(img.pixel(1, 0), Rgb::BLACK);
    }

    #[test]
    fn partial_buffers_merge_losslessly() {
        let mut a = FrameBuffer::new(2, 2);
        let mut b = FrameBuffer::new(2, 2);
        a.splat(3, rgb(0.5, 0.5, 0.5));
        b.splat(3, rgb(0.25, 0.0, 0.0));
        b.splat(0, rgb(1.0, 1.0, 1.0));
        a.add_from(&b);
        a.advance_iterations(1);
        let img = a.mean_image();
        assert_eq!(img.pixel(1, 1), rgb(0.75, 0.5, 0.5));
        assert_eq!(img.pixel(0, 0), rgb(1.0, 1.0, 1.0));
    }

    #[test]
    fn region_mean_is_plain_average() {
        let mut fb = FrameBuffer::new(4, 4);
        for i in 0..16 {
            fb.splat(i, Rgb::splat(i as f64));
        }
        fb.advance_iterations(1);
        let img = fb.mean_image();
        let want = (5.0 + 6.0 + 9.0 + 10.0) / 4.0;
        assert!((img.region_mean_luminance(1, 1, 2, 2) - want).abs() < 1e-12);
    }
}

//! Shared color conversions used by the synthetic generator and the
//! photometric augmentation kernels. All conversions work in f64 and leave
//! clamping/rounding to the caller.

/// RGB in [0,255] to HSV with hue in degrees [0,360), s and v in [0,1].
pub(crate) fn rgb_to_hsv(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let r = r / 255.0;
    let g = g / 255.0;
    let b = b / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * (((g - b) / delta).rem_euclid(6.0))
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    (h.rem_euclid(360.0), s, max)
}

/// Inverse of [`rgb_to_hsv`]; returns RGB in [0,255].
pub(crate) fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    let h = h.rem_euclid(360.0);
    let c = v * s;
    let x = c * (1.0 - ((h / 60.0).rem_euclid(2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match (h / 60.0) as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    ((r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0)
}

/// BT.601 full-range luma/chroma split, all channels in [0,255].
pub(crate) fn rgb_to_ycbcr(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 128.0 + 0.564 * (b - y);
    let cr = 128.0 + 0.713 * (r - y);
    (y, cb, cr)
}

pub(crate) fn ycbcr_to_rgb(y: f64, cb: f64, cr: f64) -> (f64, f64, f64) {
    let r = y + 1.403 * (cr - 128.0);
    let b = y + 1.773 * (cb - 128.0);
    let g = (y - 0.299 * r - 0.114 * b) / 0.587;
    (r, g, b)
}

/// BT.601 grayscale weight of an RGB triple.
pub(crate) fn luma(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hsv_round_trips_within_rounding() {
        for (r, g, b) in [
            (0.0, 0.0, 0.0),
            (255.0, 255.0, 255.0),
            (255.0, 0.0, 0.0),
            (12.0, 200.0, 98.0),
            (230.0, 224.0, 228.0),
        ] {
            let (h, s, v) = rgb_to_hsv(r, g, b);
            let (r2, g2, b2) = hsv_to_rgb(h, s, v);
            assert!((r - r2).abs() < 1e-9, "{r} vs {r2}");
            assert!((g - g2).abs() < 1e-9);
            assert!((b - b2).abs() < 1e-9);
        }
    }

    #[test]
    fn ycbcr_round_trips_within_rounding() {
        for (r, g, b) in [(0.0, 0.0, 0.0), (255.0, 128.0, 7.0), (40.0, 90.0, 200.0)] {
            let (y, cb, cr) = rgb_to_ycbcr(r, g, b);
            let (r2, g2, b2) = ycbcr_to_rgb(y, cb, cr);
            assert!((r - r2).abs() < 1e-6);
            assert!((g - g2).abs() < 1e-6);
            assert!((b - b2).abs() < 1e-6);
        }
    }

    #[test]
    fn gray_has_zero_saturation() {
        let (_, s, v) = rgb_to_hsv(100.0, 100.0, 100.0);
        assert_eq!(s, 0.0);
        assert!((v - 100.0 / 255.0).abs() < 1e-12);
    }
}

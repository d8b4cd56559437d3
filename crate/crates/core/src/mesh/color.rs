/// An 8-bit RGB color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Rgb(pub u8, pub u8, pub u8);

/// Hue used for a confidence value: 270° (violet) at 0 down to 0° (red) at 1.
#[inline]
pub fn confidence_hue(c: f64) -> f64 {
    let c = if c.is_nan() { 0.0 } else { c.clamp(0.0, 1.0) };
    270.0 * (1.0 - c)
}

/// Violet-to-red ramp: full saturation and value, channels rounded half-up.
pub fn confidence_to_color(c: f64) -> Rgb {
    let (r, g, b) = hsv_to_rgb(confidence_hue(c), 1.0, 1.0);
    Rgb(quantize(r), quantize(g), quantize(b))
}

#[inline]
fn quantize(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

fn hsv_to_rgb(hue: f64, s: f64, v: f64) -> (f64, f64, f64) {
    let c = v * s;
    let h = (hue.rem_euclid(360.0)) / 60.0;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    (r + m, g + m, b + m)
}

//! Fixed output resolution shared by the simulator and the wire format.

/// Decimal places kept for millimetres and sensor channels.
pub const DECIMALS: i32 = 3;

/// Rounds to the 0.001 resolution used for every recorded measurement.
pub fn quantize(value: f64) -> f64 {
    let scale = 10f64.powi(DECIMALS);
    let q = (value * scale).round() / scale;
    // avoid serializing "-0.0"
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

/// Float text with 17 significant digits; parses back to the same bits.
pub fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

//! Numeric formatting for reports: 12 significant digits, shortest form.

/// Formats with 12 significant digits, trimming what the shortest
/// round-trip of the rounded value does not need (`2.0625` stays `2.0625`,
/// `2/3` becomes `0.666666666667`).
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float");
    format!("{rounded}")
}

//! CSV helpers shared by the reports.

/// 17 significant digits in scientific notation; identical input always
/// produces identical text.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

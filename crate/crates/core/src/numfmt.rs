//! Deterministic significant-digit formatting for artifacts.

/// Render `v` with up to `digits` significant digits, trimming trailing
/// zeros. Plain decimal notation within a sane exponent window, scientific
/// outside it. Pure function of the float bits, so artifacts reproduce
/// byte-identically.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.*e}", digits.saturating_sub(1), v);
    let (mant, exp) = sci.split_once('e').expect("scientific form");
    let exp: i32 = exp.parse().expect("exponent");
    let neg = mant.starts_with('-');
    let mant = mant.trim_start_matches('-');
    let all_digits: String = mant.chars().filter(|c| *c != '.').collect();
    let trimmed = all_digits.trim_end_matches('0');
    let trimmed = if trimmed.is_empty() { "0" } else { trimmed };
    let k = trimmed.len() as i32;

    let body = if (-4..15).contains(&exp) {
        if exp >= k - 1 {
            format!("{trimmed}{}", "0".repeat((exp - k + 1) as usize))
        } else if exp >= 0 {
            format!(
                "{}.{}",
                &trimmed[..(exp + 1) as usize],
                &trimmed[(exp + 1) as usize..]
            )
        } else {
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), trimmed)
        }
    } else if trimmed.len() == 1 {
        format!("{trimmed}e{exp}")
    } else {
        format!("{}.{}e{exp}", &trimmed[..1], &trimmed[1..])
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Default artifact precision: 12 significant digits.
pub fn format_sig12(v: f64) -> String {
    format_sig(v, 12)
}

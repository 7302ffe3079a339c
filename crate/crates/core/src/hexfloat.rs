//! C99 `%a`-style hexadecimal float text, for bit-exact model files.

/// Formats `x` as `[-]0x1.<hex>p<exp>` (subnormals as `0x0.<hex>p-1022`).
pub fn format(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1 << 52) - 1);
    let (lead, exp) = match exp_bits {
        0 if frac == 0 => return format!("{sign}0x0p+0"),
        0 => (0, -1022),
        e => (1, e - 1023),
    };
    let mut digits = format!("{frac:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let dot = if digits.is_empty() { "" } else { "." };
    let esign = if exp >= 0 { "+" } else { "" };
    format!("{sign}0x{lead}{dot}{digits}p{esign}{exp}")
}

/// Parses the output of [`format`].
pub fn parse(s: &str) -> Option<f64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let signed = |v: f64| if neg { -v } else { v };
    match body {
        "nan" => return Some(f64::NAN),
        "inf" => return Some(signed(f64::INFINITY)),
        _ => {}
    }
    let body = body.strip_prefix("0x")?;
    let (mantissa, exp) = body.split_once('p')?;
    let exp: i64 = exp.parse().ok()?;
    let (lead, digits) = match mantissa.split_once('.') {
        Some((l, d)) => (l, d),
        None => (mantissa, ""),
    };
    if digits.len() > 13 || !digits.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    let frac = if digits.is_empty() {
        0
    } else {
        u64::from_str_radix(digits, 16).ok()? << (4 * (13 - digits.len()))
    };
    let bits = match lead {
        "1" if (-1022..=1023).contains(&exp) => ((exp + 1023) as u64) << 52 | frac,
        "0" if frac == 0 && exp == 0 => 0,
        "0" if exp == -1022 => frac,
        _ => return None,
    };
    Some(signed(f64::from_bits(bits)))
}

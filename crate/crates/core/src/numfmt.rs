//! Shortest round-trip decimal formatting for outputs that must be byte-stable.

pub fn fmt_f64(x: f64) -> String {
    let mut buf = ryu::Buffer::new();
    let s = buf.format(x);
    // integral values print without the trailing ".0"
    s.strip_suffix(".0").unwrap_or(s).to_owned()
}

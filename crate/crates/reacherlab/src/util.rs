//! Small shared helpers: fixed-width 6-vectors, stable hashing and
//! significant-digit formatting.

/// Six-element joint vector used throughout the controller and task code.
pub type Vec6 = [f64; 6];

pub const VEC6_ZERO: Vec6 = [0.0; 6];

pub fn vec6_map(a: &Vec6, f: impl Fn(f64) -> f64) -> Vec6 {
    let mut out = [0.0; 6];
    for (o, x) in out.iter_mut().zip(a.iter()) {
        *o = f(*x);
    }
    out
}

pub fn vec6_zip(a: &Vec6, b: &Vec6, f: impl Fn(f64, f64) -> f64) -> Vec6 {
    let mut out = [0.0; 6];
    for i in 0..6 {
        out[i] = f(a[i], b[i]);
    }
    out
}

pub fn vec6_all_finite(a: &Vec6) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// FNV-1a on bytes. Used for deriving named random streams; stable across
/// platforms and runs, unlike the std hasher.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Format with 9 significant digits, the precision used by the command
/// wire format and the results CSV.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        // Avoid "-0" artifacts.
        return "0.000000000e0".to_string();
    }
    format!("{:.8e}", x)
}

pub fn clip(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_round_trips_through_parse() {
        for &x in &[0.3, -0.123456789, 8e-3, 1.4, 0.0, -0.0, 3.2e-7] {
            let s = sig9(x);
            let back: f64 = s.parse().unwrap();
            assert!((back - x).abs() <= x.abs() * 1e-8 + 1e-12, "{s} vs {x}");
        }
    }

    #[test]
    fn fnv_is_stable() {
        // Frozen reference value for the empty string per FNV-1a.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_ne!(fnv1a64(b"policy"), fnv1a64(b"targets"));
    }
}

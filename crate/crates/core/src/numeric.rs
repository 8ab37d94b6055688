//! Small numeric helpers shared across modules.

use statrs::function::gamma::ln_gamma;

/// Natural log of the binomial coefficient C(n, k).
pub fn ln_choose(n: u64, k: u64) -> f64 {
    assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// log2 of the binomial coefficient C(n, k).
pub fn log2_choose(n: u64, k: u64) -> f64 {
    ln_choose(n, k) / std::f64::consts::LN_2
}

/// Exact binomial coefficient, if it fits in a u128.
pub fn choose_exact(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
    }
    Some(acc)
}

/// C(n, k) as a f64, exact for small inputs and log-domain above.
pub fn choose_f64(n: u64, k: u64) -> f64 {
    // u128 holds C(n, n/2) up to n = 131 or so; spec work above d = 60 is
    // log-domain anyway.
    if n <= 60 {
        choose_exact(n, k).expect("fits") as f64
    } else {
        ln_choose(n, k).exp()
    }
}

/// Deterministic per-stream seed derivation (splitmix64 over master ^ stream).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

//! Representability of integers as sums of two or three squares.

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Pollard-Brent rho; `n` must be composite and odd.
fn find_factor(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

fn factor_into(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let mut p = 2u64;
    while p < 1024 && p * p <= n {
        if n % p == 0 {
            out.push(p);
            factor_into(n / p, out);
            return;
        }
        p += 1 + (p > 2) as u64;
    }
    if p * p > n {
        out.push(n);
        return;
    }
    let d = find_factor(n);
    factor_into(d, out);
    factor_into(n / d, out);
}

/// Prime factors with multiplicity.
pub fn factorize(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    factor_into(n, &mut out);
    out.sort_unstable();
    out
}

/// `m = a^2 + b^2` for some integers: every prime `3 mod 4` has even exponent.
pub fn is_sum_of_two_squares(mut m: u64) -> bool {
    if m == 0 {
        return true;
    }
    m >>= m.trailing_zeros();
    // strip small primes; an odd cofactor that is 3 mod 4 carries a bad prime
    let mut p = 3u64;
    while p < 1024 && p * p <= m {
        if m % 4 == 3 {
            return false;
        }
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            if p % 4 == 3 && e % 2 == 1 {
                return false;
            }
        }
        p += 2;
    }
    if m % 4 == 3 {
        return false;
    }
    if m == 1 || p * p > m {
        return true;
    }
    let f = factorize(m);
    let mut i = 0;
    while i < f.len() {
        let p = f[i];
        let mut e = 0;
        while i < f.len() && f[i] == p {
            e += 1;
            i += 1;
        }
        if p % 4 == 3 && e % 2 == 1 {
            return false;
        }
    }
    true
}

/// Legendre: `m` is a sum of three squares unless `m = 4^a (8b + 7)`.
pub fn is_sum_of_three_squares(mut m: u128) -> bool {
    if m == 0 {
        return true;
    }
    while m % 4 == 0 {
        m /= 4;
    }
    m % 8 != 7
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(m: u64, d: usize) -> bool {
        let r = (m as f64).sqrt() as u64 + 1;
        match d {
            2 => (0..=r).any(|a| (0..=r).any(|b| a * a + b * b == m)),
            _ => (0..=r).any(|a| (0..=r).any(|b| (0..=r).any(|c| a * a + b * b + c * c == m))),
        }
    }

    #[test]
    fn matches_brute_force() {
        for m in 0..400u64 {
            assert_eq!(is_sum_of_two_squares(m), brute(m, 2), "m={m}");
            assert_eq!(is_sum_of_three_squares(m as u128), brute(m, 3), "m={m}");
        }
    }

    #[test]
    fn large_semiprimes() {
        // 1000003 = 3 mod 4 prime, squared is representable
        assert!(is_prime(1_000_003));
        assert!(is_sum_of_two_squares(1_000_003u64 * 1_000_003));
        assert!(!is_sum_of_two_squares(1_000_003u64 * 1_000_033));
        assert_eq!(factorize(600851475143), vec![71, 839, 1471, 6857]);
    }
}

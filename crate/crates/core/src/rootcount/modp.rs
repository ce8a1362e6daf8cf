//! Dense polynomials over `Z/pZ`, ascending coefficients, no trailing zeros
//! (the zero polynomial is the empty vector).

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::primes::{inv_mod, mul_mod};

pub(crate) type Fp = Vec<u64>;

pub(crate) fn trim(mut a: Fp) -> Fp {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

pub(crate) fn degree(a: &[u64]) -> Option<usize> {
    a.len().checked_sub(1)
}

pub(crate) fn sub(a: &[u64], b: &[u64], p: u64) -> Fp {
    let mut out = vec![0; a.len().max(b.len())];
    for (i, o) in out.iter_mut().enumerate() {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        *o = if x >= y { x - y } else { p - (y - x) };
    }
    trim(out)
}

pub(crate) fn mul(a: &[u64], b: &[u64], p: u64) -> Fp {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u128; a.len() + b.len() - 1];
    let pp = p as u128;
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x as u128 * y as u128) % pp;
        }
    }
    trim(out.into_iter().map(|v| v as u64).collect())
}

/// `(quotient, remainder)` of `a / m`; `m` must be non-zero.
pub(crate) fn divrem(a: &[u64], m: &[u64], p: u64) -> (Fp, Fp) {
    let dm = degree(m).expect("division by zero polynomial");
    let mut rem = a.to_vec();
    if rem.len() <= dm {
        return (Vec::new(), trim(rem));
    }
    let inv = inv_mod(m[dm], p).expect("leading coefficient is a unit");
    let mut quot = vec![0u64; rem.len() - dm];
    for k in (0..quot.len()).rev() {
        let top = rem[k + dm];
        if top == 0 {
            continue;
        }
        let q = mul_mod(top, inv, p);
        quot[k] = q;
        for (i, &c) in m.iter().enumerate() {
            let t = mul_mod(q, c, p);
            let slot = &mut rem[k + i];
            *slot = if *slot >= t { *slot - t } else { p - (t - *slot) };
        }
    }
    rem.truncate(dm);
    (trim(quot), trim(rem))
}

pub(crate) fn rem(a: &[u64], m: &[u64], p: u64) -> Fp {
    divrem(a, m, p).1
}

pub(crate) fn monic(a: &[u64], p: u64) -> Fp {
    match a.last() {
        None => Vec::new(),
        Some(&l) => {
            let inv = inv_mod(l, p).expect("unit");
            a.iter().map(|&c| mul_mod(c, inv, p)).collect()
        }
    }
}

/// Monic gcd.
pub(crate) fn gcd(a: &[u64], b: &[u64], p: u64) -> Fp {
    let (mut x, mut y) = (trim(a.to_vec()), trim(b.to_vec()));
    while !y.is_empty() {
        let r = rem(&x, &y, p);
        x = y;
        y = r;
    }
    monic(&x, p)
}

pub(crate) fn derivative(a: &[u64], p: u64) -> Fp {
    trim(
        a.iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| mul_mod(c, i as u64 % p, p))
            .collect(),
    )
}

pub(crate) fn mulmod(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Fp {
    rem(&mul(a, b, p), m, p)
}

pub(crate) fn powmod(base: &[u64], mut exp: u64, m: &[u64], p: u64) -> Fp {
    let mut acc = rem(&[1], m, p);
    let mut b = rem(base, m, p);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(&acc, &b, m, p);
        }
        exp >>= 1;
        if exp > 0 {
            b = mulmod(&b, &b, m, p);
        }
    }
    acc
}

/// Distinct-degree factorization of a monic squarefree `f`: for each
/// degree `d`, the number of irreducible factors of degree `d`.
pub(crate) fn distinct_degree_counts(f: &[u64], p: u64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut rest = f.to_vec();
    let x: Fp = trim(vec![0, 1]);
    let mut h = rem(&x, &rest, p);
    let mut d = 0;
    while degree(&rest).is_some_and(|dr| dr >= 2 * (d + 1)) {
        d += 1;
        h = powmod(&h, p, &rest, p);
        let g = gcd(&sub(&h, &x, p), &rest, p);
        let dg = degree(&g).unwrap_or(0);
        if dg > 0 {
            out.push((d, dg / d));
            rest = divrem(&rest, &g, p).0;
            h = rem(&h, &rest, p);
        }
    }
    if let Some(dr) = degree(&rest) {
        if dr > 0 {
            out.push((dr, 1));
        }
    }
    out
}

/// Roots of a monic `g` that splits into distinct linear factors over an
/// odd prime field (equal-degree splitting with random shifts).
pub(crate) fn split_linear<R: Rng>(g: &[u64], p: u64, rng: &mut R, out: &mut Vec<u64>) {
    match degree(g) {
        None | Some(0) => {}
        Some(1) => out.push((p - g[0]) % p),
        Some(_) => loop {
            let a = rng.gen_range(0..p);
            let w = powmod(&[a, 1], (p - 1) / 2, g, p);
            let h = gcd(&sub(&w, &[1], p), g, p);
            let dh = degree(&h).unwrap_or(0);
            if dh > 0 && dh < g.len() - 1 {
                let other = divrem(g, &h, p).0;
                split_linear(&h, p, rng, out);
                split_linear(&other, p, rng, out);
                return;
            }
        },
    }
}

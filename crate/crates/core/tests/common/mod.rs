#![allow(dead_code)]

use hartman::PiecewiseConstantPotential;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random cell with `1..=max_segments` segments.
pub fn random_cell(
    rng: &mut impl Rng,
    max_segments: usize,
    heights: (f64, f64),
    widths: (f64, f64),
) -> PiecewiseConstantPotential {
    let n = rng.gen_range(1..=max_segments);
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.gen_range(widths.0..widths.1),
                rng.gen_range(heights.0..heights.1),
            )
        })
        .collect();
    PiecewiseConstantPotential::from_pairs(&pairs).unwrap()
}

/// Energy in (lo, hi) at least `clearance` away from every segment height.
pub fn energy_clear_of(
    rng: &mut impl Rng,
    cell: &PiecewiseConstantPotential,
    lo: f64,
    hi: f64,
    clearance: f64,
) -> f64 {
    loop {
        let e: f64 = rng.gen_range(lo..hi);
        if e > 0.0
            && cell
                .segments()
                .iter()
                .all(|s| (s.height - e).abs() > clearance)
        {
            return e;
        }
    }
}

/// T_n and U_n as integer coefficient vectors (lowest power first), built
/// from the polynomial recurrences rather than from values.
pub fn chebyshev_coefficients(max: usize) -> (Vec<Vec<i64>>, Vec<Vec<i64>>) {
    let step = |prev: &Vec<i64>, cur: &Vec<i64>| {
        let mut next = vec![0i64; cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += 2 * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= c;
        }
        next
    };
    let mut t = vec![vec![1], vec![0, 1]];
    let mut u = vec![vec![1], vec![0, 2]];
    while t.len() <= max {
        let n = t.len();
        t.push(step(&t[n - 2], &t[n - 1]));
        u.push(step(&u[n - 2], &u[n - 1]));
    }
    (t, u)
}

pub fn horner(coeffs: &[i64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64)
}

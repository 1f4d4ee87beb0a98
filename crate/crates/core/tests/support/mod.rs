//! Brute-force largest-remainder apportionment over exact rationals.
//!
//! Deliberately naive: every round recomputes exact quotas for the blocks that
//! still have room, floors them, and hands out leftover units one at a time to
//! the largest fractional part (lowest index wins ties).

use num_bigint::BigInt;
use num_rational::BigRational;

pub fn oracle_apportion(scores: &[f64], budget: usize, room: &[usize]) -> Option<Vec<usize>> {
    if room.iter().sum::<usize>() < budget {
        return None;
    }
    let exact: Vec<BigRational> = scores
        .iter()
        .map(|&s| BigRational::from_float(s).expect("finite score"))
        .collect();
    let mut alloc = vec![0usize; scores.len()];
    let mut left = budget;
    while left > 0 {
        let members: Vec<usize> = (0..scores.len()).filter(|&n| alloc[n] < room[n]).collect();
        let mut total = BigRational::from_integer(BigInt::from(0));
        for &n in &members {
            total += &exact[n];
        }
        let weight = |n: usize| {
            if total == BigRational::from_integer(BigInt::from(0)) {
                BigRational::from_integer(BigInt::from(1))
            } else {
                exact[n].clone()
            }
        };
        let weight_sum: BigRational = if total == BigRational::from_integer(BigInt::from(0)) {
            BigRational::from_integer(BigInt::from(members.len()))
        } else {
            total.clone()
        };
        let mut give = vec![0usize; scores.len()];
        let mut frac = Vec::new();
        let mut handed = 0usize;
        for &n in &members {
            let quota = BigRational::from_integer(BigInt::from(left)) * weight(n) / &weight_sum;
            let floor = quota.floor();
            let units: usize = floor.to_integer().try_into().unwrap();
            give[n] = units;
            handed += units;
            frac.push((quota - floor, n));
        }
        for _ in 0..left - handed {
            // largest fraction, lowest index among equals
            let mut best = 0;
            for i in 1..frac.len() {
                if frac[i].0 > frac[best].0 {
                    best = i;
                }
            }
            give[frac[best].1] += 1;
            frac[best].0 = BigRational::from_integer(BigInt::from(-1));
        }
        let mut overflow = 0;
        for n in 0..scores.len() {
            alloc[n] += give[n];
            if alloc[n] > room[n] {
                overflow += alloc[n] - room[n];
                alloc[n] = room[n];
            }
        }
        left = overflow;
    }
    Some(alloc)
}

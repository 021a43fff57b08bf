//! Range statistics against brute force, key sets, and the two-system
//! permutation, rearrangement and intersection probabilities.

use std::collections::HashSet;

use cocyclab_core::cocycle::Evaluator;
use cocyclab_core::mixer::{derive_seed, Stream};
use cocyclab_core::polyrange::{self, pack, FnWalk, IntPolynomial};
use cocyclab_core::twosys::{self, Cell, Direction, OmegaConfig, PairTag, PermutationView, TripleStatus, TripleTag, ORIGIN};

/// A lazy ±1/0 lattice walk: many repeats and origin returns.
fn small_walk(seed: u64, len: usize) -> Vec<Vec<i64>> {
    let mut s = Stream::new(seed);
    let mut pos = vec![0i64, 0];
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(pos.clone());
        pos[0] += s.range(0, 3) as i64 - 1;
        pos[1] += s.range(0, 3) as i64 - 1;
    }
    out
}

#[test]
fn range_profile_matches_quadratic_oracle() {
    let p: IntPolynomial = "n^2".parse().unwrap();
    for seed in 0..5 {
        let path = small_walk(seed, 40_001);
        let mut w = FnWalk::new(2, 40_000, |t: u128| path[t as usize].clone());
        let rec = polyrange::range_profile(&mut w, &p, 200).unwrap();
        for n in 1..=200usize {
            let vals: Vec<&Vec<i64>> = (1..=n).map(|m| &path[m * m]).collect();
            let size = vals.iter().collect::<HashSet<_>>().len();
            assert_eq!(rec.sizes[n - 1] as usize, size);
            let cur = vals[n - 1];
            let first = cur != &vec![0, 0] && vals[..n - 1].iter().all(|v| *v != cur);
            assert_eq!(rec.first[n - 1], first, "seed {seed} n {n}");
            assert!((rec.sizes[n - 1] as i64 - rec.key_count(n as u64) as i64).abs() <= 1);
            if n > 1 {
                assert!(rec.sizes[n - 1] >= rec.sizes[n - 2]);
            }
        }
    }
}

#[test]
fn distinct_walk_range_is_full() {
    let p: IntPolynomial = "n^2+n".parse().unwrap();
    let mut w = FnWalk::new(2, 1 << 20, |t: u128| vec![t as i64, 1]);
    let rec = polyrange::range_profile(&mut w, &p, 300).unwrap();
    assert_eq!(rec.sizes[299], 300);
    assert_eq!(rec.key_indices(), (1..=300).collect::<Vec<_>>());
    let mut w = FnWalk::new(2, 10, |t: u128| vec![t as i64, 1]);
    assert!(matches!(polyrange::range_profile(&mut w, &p, 300), Err(cocyclab_core::Error::Horizon(_))));
}

#[test]
fn full_range_grows_sublinearly() {
    let mut first = 0.0;
    let mut last = 0.0;
    for i in 0..3 {
        let t = polyrange::model_trajectory(5, i, 2, 100_000, 0.01).unwrap();
        let a = polyrange::full_range_profile(&mut Evaluator::new(&t), 100_000).unwrap();
        first += a[999] as f64 / 1e3;
        last += a[99_999] as f64 / 1e5;
    }
    assert!(last < first, "{first} vs {last}");
}

#[test]
fn key_density_in_second_epoch() {
    let p: IntPolynomial = "n^2".parse().unwrap();
    let e = polyrange::build_epochs(2, 2, 3).unwrap();
    for i in 0..3 {
        let t = polyrange::model_trajectory(8, i, 2, p.time(512).unwrap(), 0.01).unwrap();
        let rec = polyrange::range_profile(&mut Evaluator::new(&t), &p, 512).unwrap();
        let keys = polyrange::key_set(&rec, &rec, &e, 512).unwrap();
        let inside = keys.iter().filter(|&&n| n > 128 && n <= 512).count();
        assert!(inside as f64 / 384.0 >= 0.5, "{inside}");
        assert!(keys.iter().all(|&n| e.contains(n as u128) && rec.in_k(n)));
    }
}

fn model_view(i: u64, p2: &str) -> PermutationView {
    let p1: IntPolynomial = "n^2".parse().unwrap();
    let q: IntPolynomial = p2.parse().unwrap();
    let e = polyrange::build_epochs(2, 2, 2).unwrap();
    twosys::model_view(&p1, &q, &e, 512, 31, i, 0.01).unwrap()
}

fn probe_cells(view: &PermutationView) -> Vec<Cell> {
    let mut cells: Vec<Cell> = (-20..=20).flat_map(|x| (-20..=20).map(move |y| (x, y))).collect();
    cells.extend_from_slice(view.key_cells(1));
    cells.extend_from_slice(view.key_cells(2));
    let mut seen = HashSet::new();
    cells.retain(|c| seen.insert(*c));
    cells
}

#[test]
fn permutation_maps_keys_and_inverts() {
    for (i, p2) in [(0, "2*n^2+1"), (1, "n^2+n"), (2, "n^2")] {
        let v = model_view(i, p2);
        assert!(!v.keys().is_empty());
        assert_eq!(v.pi_apply(ORIGIN, Direction::Forward), ORIGIN);
        for (j, &n) in v.keys().iter().enumerate() {
            let (a, b) = v.cells_at(n).unwrap();
            assert_eq!(v.pi_apply(b, Direction::Forward), a);
            assert_eq!(v.key_cells(1)[j], a);
        }
        let cells = probe_cells(&v);
        let mut images = HashSet::new();
        for &c in &cells {
            let f = v.pi_apply(c, Direction::Forward);
            assert_eq!(v.pi_apply(f, Direction::Inverse), c);
            assert!(images.insert(f), "{c:?} collides");
        }
        if p2 == "n^2" {
            assert!(cells.iter().all(|&c| v.pi_apply(c, Direction::Forward) == c));
        }
    }
}

#[test]
fn rearrangement_values_and_round_trip() {
    let v = model_view(3, "2*n^2+1");
    let cfg = OmegaConfig::new(99);
    let omega = |c: Cell| cfg.bit(c);
    assert_eq!(v.psi_forward(omega, ORIGIN), cfg.bit(ORIGIN));
    for &n in v.keys() {
        let (a, b) = v.cells_at(n).unwrap();
        assert_eq!(v.psi_forward(omega, b), 1 - cfg.bit(a));
    }
    let eta = |c: Cell| v.psi_forward(omega, c);
    let mut cells = probe_cells(&v);
    cells.truncate(1000);
    for &c in &cells {
        assert_eq!(v.psi_inverse(eta, c), cfg.bit(c), "cell {c:?}");
        assert_eq!(twosys::psi_value(&v, &cfg, c, Direction::Forward), eta(c));
    }
    // the inverse fixes the origin as well
    let other = OmegaConfig::new(7);
    assert_eq!(twosys::psi_value(&v, &other, ORIGIN, Direction::Inverse), other.bit(ORIGIN));
}

#[test]
fn pair_probability_cases() {
    let v = model_view(4, "2*n^2+1");
    for &n in v.keys() {
        let pp = twosys::pair_probability(&v, n).unwrap();
        assert_eq!((pp.value, pp.tag), (0.0, PairTag::KeyFlipHit));
    }
    let pp0 = twosys::pair_probability(&v, 0).unwrap();
    assert_eq!((pp0.value, pp0.tag), (0.5, PairTag::SameCellNoflip));
    assert!(matches!(twosys::pair_probability(&v, 513), Err(cocyclab_core::Error::Horizon(_))));
}

#[test]
fn no_keys_means_at_least_a_quarter() {
    let mut s = Stream::new(4);
    let pts = |s: &mut Stream| -> Vec<i128> {
        (0..300).map(|_| pack(&[s.range(0, 9) as i64 - 4, s.range(0, 9) as i64 - 4]).unwrap()).collect()
    };
    let (a, b) = (pts(&mut s), pts(&mut s));
    let v = PermutationView::from_parts(a, b, Vec::new()).unwrap();
    let mut seen = HashSet::new();
    for n in 0..=300 {
        let pp = twosys::pair_probability(&v, n).unwrap();
        assert!(pp.value >= 0.25);
        seen.insert(pp.tag);
    }
    assert!(seen.contains(&PairTag::SameCellNoflip) && seen.contains(&PairTag::IndependentCells));
}

#[test]
fn omega_bits_are_fair_and_independent() {
    let n = 1_000_000i64;
    let (c0, c1) = (OmegaConfig::new(1), OmegaConfig::new(2));
    let mut ones = 0u64;
    let mut prod = 0.0;
    for i in 0..n {
        let cell = (i % 1000 - 500, i / 1000 - 500);
        let (a, b) = (c0.bit(cell) as f64 - 0.5, c1.bit(cell) as f64 - 0.5);
        ones += c0.bit(cell) as u64;
        prod += 4.0 * a * b;
    }
    let f = ones as f64 / n as f64;
    assert!((f - 0.5).abs() <= 0.002, "{f}");
    assert!((prod / n as f64).abs() <= 4.0 / (n as f64).sqrt());
}

#[test]
fn membership_violations_on_injected_walks() {
    let p = twosys::monomial_poly(1, 3).unwrap();
    // origin at time p(3) = 27
    let mut w = FnWalk::new(2, 1 << 20, |t: u128| if t == 27 { vec![0, 0] } else { vec![t as i64, 1] });
    let m = twosys::cp_membership(&mut w, &p, 10).unwrap();
    assert_eq!(m.first_violation, Some(twosys::Violation::Origin(3)));
    // S_{p(5)} = S_{p(2)}
    let mut w = FnWalk::new(2, 1 << 20, |t: u128| if t == 125 { vec![8, 1] } else { vec![t as i64, 1] });
    let m = twosys::cp_membership(&mut w, &p, 10).unwrap();
    assert_eq!(m.first_violation, Some(twosys::Violation::Repeat { j: 2, n: 5 }));
    let mut w = FnWalk::new(2, 1 << 20, |t: u128| vec![t as i64, 1]);
    assert!(twosys::cp_membership(&mut w, &p, 10).unwrap().member);
}

#[test]
fn triple_probability_cases() {
    let p = twosys::monomial_poly(1, 3).unwrap();
    let mut hit = FnWalk::new(2, 1 << 20, |t: u128| if t == 27 { vec![0, 0] } else { vec![t as i64, 1] });
    match twosys::triple_probability(&mut hit, &p, 3, 10).unwrap() {
        TripleStatus::Exact { value, tag, base_member, .. } => {
            assert_eq!((value, tag, base_member), (0.5, TripleTag::OriginCell, false));
        }
        s => panic!("{s:?}"),
    }
    match twosys::triple_probability(&mut hit, &p, 4, 10).unwrap() {
        TripleStatus::Exact { value, tag, .. } => assert_eq!((value, tag), (0.25, TripleTag::IndependentCells)),
        s => panic!("{s:?}"),
    }
    let mut clean = FnWalk::new(2, 1 << 20, |t: u128| vec![t as i64, 1]);
    match twosys::triple_probability(&mut clean, &p, 4, 10).unwrap() {
        TripleStatus::Exact { value, base_member, .. } => assert_eq!((value, base_member), (0.0, true)),
        s => panic!("{s:?}"),
    }
    assert_eq!(twosys::triple_probability(&mut clean, &p, 11, 10).unwrap(), TripleStatus::Indeterminate);
}

#[test]
fn triple_probability_against_sampling() {
    let p = twosys::monomial_poly(100, 3).unwrap();
    let h = 12u64;
    let mut s = Stream::new(17);
    let mut tags = HashSet::new();
    // L = 1 walks fail membership often, so every case is visited
    let q = twosys::monomial_poly(1, 3).unwrap();
    for i in 0..100u64 {
        let poly = if i % 2 == 0 { &p } else { &q };
        let horizon = 2 * poly.time(h as u128).unwrap();
        let t = polyrange::model_trajectory(23, i, 2, horizon, 0.01).unwrap();
        let mut ev = Evaluator::new(&t);
        let n = s.range(1, h + 1);
        let TripleStatus::Exact { value, tag, .. } = twosys::triple_probability(&mut ev, poly, n, h).unwrap() else {
            panic!("indeterminate");
        };
        tags.insert(tag);
        let mc = twosys::triple_probability_mc(&mut ev, poly, n, h, 100_000, derive_seed(i, n)).unwrap();
        let sigma = (value * (1.0 - value) / 1e5).sqrt();
        assert!((mc - value).abs() <= 3.0 * sigma, "i {i} n {n}: {mc} vs {value}");
    }
    assert!(tags.contains(&TripleTag::FlippedCell) && tags.len() >= 2, "{tags:?}");
}

#[test]
fn tail_series_values() {
    let full = twosys::pair_tail_series(0, 10_000);
    assert!(full > 1.0 && full < 3.5, "{full}");
    let t50 = twosys::pair_tail_series(50, 10_000);
    assert!(t50 < full && t50 > 0.0);
    assert!((twosys::origin_tail_series(50, 3) - 1.0 / 5000.0).abs() < 1e-15);
    let b = twosys::measure_beta().unwrap();
    assert!(b > 0.166 && b < 0.5, "{b}");
}

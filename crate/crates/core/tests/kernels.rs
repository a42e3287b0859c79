use astro_float::{BigFloat, Consts, RoundingMode};
use mhelm::specfun::{bessel_i, eval_a, eval_u, eval_u_poisson, kernel_gap, KernelParams};
use proptest::prelude::*;

const P: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

fn to_f64(x: &BigFloat) -> f64 {
    x.to_string().parse().expect("decimal rendering")
}

fn big(x: f64) -> BigFloat {
    BigFloat::from_f64(x, P)
}

/// `3 (t cosh t − sinh t) / t³` at 256 bits, where the f64 form cancels.
fn a3_oracle(t: f64, cc: &mut Consts) -> f64 {
    let t = big(t);
    let num = t.mul(&t.cosh(P, RM, cc), P, RM).sub(&t.sinh(P, RM, cc), P, RM);
    let den = t.mul(&t, P, RM).mul(&t, P, RM);
    to_f64(&big(3.0).mul(&num, P, RM).div(&den, P, RM))
}

fn u3_oracle(t: f64, cc: &mut Consts) -> f64 {
    let t = big(t);
    to_f64(&t.sinh(P, RM, cc).div(&t, P, RM))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
}

#[test]
fn m3_closed_forms_at_high_precision() {
    let mut cc = Consts::new().unwrap();
    let params = KernelParams::new(3, 1.0).unwrap();
    for t in log_grid(1e-2, 30.0, 400) {
        let a = eval_a(&params, t).unwrap().value;
        let u = eval_u(&params, t).unwrap().value;
        let (ea, eu) = (a3_oracle(t, &mut cc), u3_oracle(t, &mut cc));
        assert!((a / ea - 1.0).abs() <= 1e-12, "a({t}) = {a}, oracle {ea}");
        assert!((u / eu - 1.0).abs() <= 1e-12, "U({t}) = {u}, oracle {eu}");
    }
}

#[test]
fn bessel_three_halves_matches_long_series() {
    // Σ_k (z/2)^{2k+3/2} / (k! Γ(k + 5/2)) with 40 terms at 256 bits
    let mut cc = Consts::new().unwrap();
    let z = 2.0;
    let half = big(0.5 * z);
    let pi = cc.pi(P, RM);
    let mut gamma = pi.sqrt(P, RM).mul(&big(0.75), P, RM); // Γ(5/2)
    let mut fact = big(1.0);
    let mut power = half.pow(&big(1.5), P, RM, &mut cc);
    let mut sum = big(0.0);
    for k in 0..40 {
        sum = sum.add(&power.div(&fact.mul(&gamma, P, RM), P, RM), P, RM);
        let kk = k as f64 + 1.0;
        fact = fact.mul(&big(kk), P, RM);
        gamma = gamma.mul(&big(kk + 1.5), P, RM);
        power = power.mul(&half, P, RM).mul(&half, P, RM);
    }
    let expected = to_f64(&sum);
    let got = bessel_i(1.5, z).unwrap().value();
    assert!((got / expected - 1.0).abs() <= 1e-13, "{got} vs {expected}");
}

#[test]
fn poisson_oracle_agrees() {
    for m in 2..=5 {
        for lambda in [0.3, 1.0, 2.5] {
            let params = KernelParams::new(m, lambda).unwrap();
            for x in [0.0, 0.05, 0.7, 2.0, 6.0] {
                let series = eval_u(&params, x).unwrap().value;
                let poisson = eval_u_poisson(&params, x, 64).unwrap();
                assert!((series / poisson - 1.0).abs() <= 1e-10, "m={m} λ={lambda} x={x}");
            }
        }
    }
}

#[test]
fn kernels_increase_on_dense_grid() {
    for m in 2..=6 {
        let params = KernelParams::new(m, 1.0).unwrap();
        let mut prev = (0.0, 0.0);
        for i in 0..=5000 {
            let t = 50.0 * i as f64 / 5000.0;
            let cur = (eval_a(&params, t).unwrap().value, eval_u(&params, t).unwrap().value);
            if i > 0 {
                assert!(cur.0 > prev.0 && cur.1 > prev.1, "m={m} t={t}");
            } else {
                assert_eq!(cur, (1.0, 1.0));
            }
            prev = cur;
        }
    }
}

proptest! {
    #[test]
    fn kernels_are_at_least_one(m in 2usize..=7, lambda in 0.01..10.0f64, x in 0.0..100.0f64) {
        let params = KernelParams::new(m, lambda).unwrap();
        prop_assert!(eval_a(&params, lambda * x).unwrap().value >= 1.0);
        prop_assert!(eval_u(&params, x).unwrap().value >= 1.0);
    }

    #[test]
    fn gap_is_positive_and_consistent(m in 2usize..=6, lambda in 0.1..5.0f64, r in 1e-6..5.0f64) {
        let params = KernelParams::new(m, lambda).unwrap();
        let gap = kernel_gap(&params, r).unwrap();
        prop_assert!(gap > 0.0);
        let direct = eval_u(&params, r).unwrap().value - eval_a(&params, lambda * r).unwrap().value;
        prop_assert!((gap - direct).abs() <= 1e-13 * eval_u(&params, r).unwrap().value);
    }
}

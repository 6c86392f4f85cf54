//! Closed-form bound arithmetic for the density argument: Sanders' bound
//! for dense sets, the lower bound on Lambda(h, h, h), the choice of k, the
//! epsilon-delta constraint, level-set extraction and the historical
//! density-bound table.

use serde::Serialize;

use crate::error::{invalid, LabError, Result};
use crate::scalar::Scalar;
use crate::zp_fourier::CyclicFunction;

/// N written as exp^depth(value), so that towers such as e^{e^{e^4}} can
/// be evaluated without overflow. Plain integers have depth 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Magnitude {
    pub depth: u32,
    pub value: f64,
}

impl Magnitude {
    pub fn tower(depth: u32, value: f64) -> Self {
        Magnitude { depth, value }
    }

    /// log applied j times; None once an argument drops to zero or below.
    pub fn iterated_log(&self, j: u32) -> Option<f64> {
        let peeled = j.min(self.depth);
        let mut v = self.value;
        for _ in peeled..j {
            if v <= 0.0 {
                return None;
            }
            v = v.ln();
        }
        for _ in 0..self.depth - peeled {
            v = v.exp();
        }
        Some(v)
    }

    pub fn ln(&self) -> f64 {
        self.iterated_log(1).expect("a magnitude is positive")
    }
}

impl From<u64> for Magnitude {
    fn from(n: u64) -> Self {
        Magnitude { depth: 0, value: n as f64 }
    }
}

/// k = max(1, floor(floor(ln ln ln N) / 2)).
pub fn choose_k(n: impl Into<Magnitude>) -> Result<u32> {
    let n = n.into();
    if n.iterated_log(1).is_none_or(|l| l < 16f64.ln()) {
        return invalid("choose_k needs N >= 16");
    }
    let lll = n.iterated_log(3).expect("defined for N >= 16");
    Ok(((lll.floor() / 2.0).floor() as u32).max(1))
}

/// exp(-c xi^{-1} (ln 1/xi)^5)
pub fn sanders_lower_bound(xi: f64, c: f64) -> Result<f64> {
    if !(xi > 0.0 && xi < 1.0) {
        return invalid(format!("xi must lie in (0, 1), got {xi}"));
    }
    if !(c > 0.0) {
        return invalid("c must be positive");
    }
    Ok((-c / xi * (1.0 / xi).ln().powi(5)).exp())
}

/// q_{2k} = (1 - 1/(2k))^{-1}
pub fn dual_exponent(k: u32) -> f64 {
    let two_k = 2.0 * k as f64;
    two_k / (two_k - 1.0)
}

/// exp(-c1 (alpha/k)^{-q_{2k}} (ln 1/alpha)^5)
pub fn prop32_lower_bound(alpha: f64, k: u32, c1: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    if k == 0 {
        return invalid("k must be at least 1");
    }
    if !(c1 > 0.0) {
        return invalid("c1 must be positive");
    }
    let q = dual_exponent(k);
    Ok((-c1 * (alpha / k as f64).powf(-q) * (1.0 / alpha).ln().powi(5)).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityRow {
    pub name: &'static str,
    pub formula: &'static str,
    /// None where an iterated log is undefined or not positive.
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityTable {
    pub n: Magnitude,
    pub rows: Vec<DensityRow>,
    pub note: &'static str,
}

pub fn density_bound_table(n: impl Into<Magnitude>) -> DensityTable {
    let n = n.into();
    let positive = |j| n.iterated_log(j).filter(|&v| v > 0.0);
    let (l2, l3, l4, l5) = (positive(2), positive(3), positive(4), positive(5));
    let rows = vec![
        DensityRow {
            name: "green",
            formula: "(ln5 N / ln4 N)^(1/2)",
            value: l4.zip(l5).map(|(l4, l5)| (l5 / l4).sqrt()),
        },
        DensityRow {
            name: "helfgott_de_roton",
            formula: "ln3 N / (ln2 N)^(1/3)",
            value: l2.zip(l3).map(|(l2, l3)| l3 / l2.cbrt()),
        },
        DensityRow {
            name: "helfgott_de_roton_sanders",
            formula: "(ln3 N)^(5/2) / (ln2 N)^(1/2)",
            value: l2.zip(l3).map(|(l2, l3)| l3.powf(2.5) / l2.sqrt()),
        },
        DensityRow {
            name: "main",
            formula: "(ln3 N)^6 / ln2 N",
            value: l2.zip(l3).map(|(l2, l3)| l3.powi(6) / l2),
        },
    ];
    DensityTable {
        n,
        rows,
        note: "constant 1 throughout; values above 1 are expected at small N",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintCheck {
    /// C4 delta^{-4} |ln epsilon|
    pub lhs: f64,
    /// ln N / 2
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

pub fn epsilon_delta_constraint(delta: f64, epsilon: f64, n: impl Into<Magnitude>, c4: f64) -> Result<ConstraintCheck> {
    if !(delta > 0.0 && epsilon > 0.0 && epsilon < 1.0 && c4 > 0.0) {
        return invalid(format!(
            "need delta > 0, 0 < epsilon < 1, C4 > 0; got {delta}, {epsilon}, {c4}"
        ));
    }
    let lhs = c4 * delta.powi(-4) * epsilon.ln().abs();
    let rhs = 0.5 * n.into().ln();
    let slack = rhs - lhs;
    Ok(ConstraintCheck {
        lhs,
        rhs,
        slack,
        holds: slack >= 0.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelSet {
    pub alpha: f64,
    pub p: f64,
    /// p / (p - 1)
    pub q: f64,
    /// ||f||_p
    pub c: f64,
    #[serde(skip)]
    pub members: Vec<u64>,
    pub size: u64,
    pub measure: f64,
    /// (alpha / 2C)^q
    pub bound: f64,
    /// measure - bound, never negative
    pub margin: f64,
}

/// L = {n : f(n) >= alpha/2} with the Hoelder lower bound on mu(L).
pub fn level_set_extract<T: Scalar>(f: &CyclicFunction<T>, alpha: f64, p: f64) -> Result<LevelSet> {
    if !(p > 1.0) {
        return invalid(format!("p must exceed 1, got {p}"));
    }
    if !(alpha > 0.0) {
        return invalid("alpha must be positive");
    }
    if f.values().iter().any(|v| *v < T::zero()) {
        return Err(LabError::Precondition("level sets need f >= 0".into()));
    }
    let l1 = f.mean().as_f64();
    if l1 < alpha {
        return Err(LabError::Precondition(format!("||f||_1 = {l1} is below alpha = {alpha}")));
    }
    let half = alpha / 2.0;
    let members: Vec<u64> = (0..f.modulus())
        .filter(|&n| f.values()[n as usize].as_f64() >= half)
        .collect();
    let size = members.len() as u64;
    let measure = size as f64 / f.modulus() as f64;
    let c = f.lp_norm(p)?.as_f64();
    let q = p / (p - 1.0);
    let bound = (alpha / (2.0 * c)).powf(q);
    let margin = measure - bound;
    assert!(margin >= 0.0, "Hoelder margin {margin} is negative");
    Ok(LevelSet {
        alpha,
        p,
        q,
        c,
        members,
        size,
        measure,
        bound,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn magnitude_logs() {
        let m = Magnitude::tower(3, 4.0);
        assert_eq!(m.iterated_log(3), Some(4.0));
        assert!((m.iterated_log(4).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!((Magnitude::from(100).iterated_log(2).unwrap() - 100f64.ln().ln()).abs() < 1e-15);
        assert_eq!(Magnitude::from(2).iterated_log(3), None);
    }

    #[test]
    fn k_choice() {
        assert_eq!(choose_k(10_000_000_000u64).unwrap(), 1);
        assert_eq!(choose_k(Magnitude::tower(3, 4.0)).unwrap(), 2);
        assert_eq!(choose_k(16u64).unwrap(), 1);
        assert!(choose_k(15u64).is_err());
        assert_eq!(choose_k(Magnitude::tower(3, 7.9)).unwrap(), 3);
    }

    #[test]
    fn sanders_values() {
        let v = sanders_lower_bound((-1f64).exp(), 1.0).unwrap();
        assert!(rel(v, (-std::f64::consts::E).exp()) < 1e-12);
        assert!((sanders_lower_bound(1.0 - 1e-9, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(sanders_lower_bound(0.01, 1.0).unwrap(), (-100.0 * 100f64.ln().powi(5)).exp());
        assert!(sanders_lower_bound(0.0, 1.0).is_err());
        assert!(sanders_lower_bound(1.0, 1.0).is_err());
    }

    #[test]
    fn prop32_values() {
        let v = prop32_lower_bound(0.5, 1, 1.0).unwrap();
        assert!(rel(v, (-4.0 * 2f64.ln().powi(5)).exp()) < 1e-12);
        assert!((v - 0.527).abs() < 5e-4);
        assert_eq!(dual_exponent(1), 2.0);
        assert!((dual_exponent(1_000_000) - 1.0).abs() < 1e-6);
        assert!(prop32_lower_bound(1.0, 1, 1.0).is_err());
        assert!(prop32_lower_bound(0.5, 0, 1.0).is_err());
    }

    #[test]
    fn density_rows() {
        let t = density_bound_table(10_000_000_000u64);
        let main = t.rows.iter().find(|r| r.name == "main").unwrap().value.unwrap();
        let l2 = (1e10f64).ln().ln();
        assert!(rel(main, l2.ln().powi(6) / l2) < 1e-12);
        assert!((main - 0.711).abs() < 1e-3);
        assert_eq!(t.rows[0].value, None);
        let t = density_bound_table(Magnitude::tower(3, 1.0));
        let main = t.rows.iter().find(|r| r.name == "main").unwrap().value.unwrap();
        assert!(rel(main, (-1f64).exp()) < 1e-12);
        let t = density_bound_table(100u64);
        assert_eq!(t.rows[0].value, None);
        // ln ln ln 100 = 0.42 > 0, so the other rows are defined
        assert!(t.rows[3].value.is_some());
        let t = density_bound_table(Magnitude::tower(4, 3.0));
        assert!(t.rows.iter().all(|r| r.value.is_some()));
    }

    #[test]
    fn constraint_values() {
        let c = epsilon_delta_constraint(1.0, (-1f64).exp(), Magnitude::tower(1, 10.0), 1.0).unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-15);
        assert_eq!(c.rhs, 5.0);
        assert!(c.holds);
        let c = epsilon_delta_constraint(0.01, 0.1, 1_000_000u64, 1.0).unwrap();
        assert!(!c.holds);
        assert!(epsilon_delta_constraint(0.1, 1.0, 1_000_000u64, 1.0).is_err());
    }

    #[test]
    fn level_set_examples() {
        let alpha = 0.3;
        let f = CyclicFunction::<f64>::constant(101, alpha).unwrap();
        let l = level_set_extract(&f, alpha, 2.0).unwrap();
        assert_eq!(l.size, 101);
        assert!((l.bound - 0.25).abs() < 1e-12);

        let s: Vec<u64> = (0..50).collect();
        let f = CyclicFunction::<f64>::scaled_indicator(101, &s, 2.0 * alpha).unwrap();
        let alpha_eff = f.mean();
        let l = level_set_extract(&f, alpha_eff, 3.0).unwrap();
        assert_eq!(l.members, s);
        let mu = 50.0 / 101.0;
        assert!(rel(l.c, 2.0 * alpha * f64::powf(mu, 1.0 / 3.0)) < 1e-12);
        assert!(l.margin >= 0.0);

        assert!(matches!(level_set_extract(&f, 1.0, 2.0), Err(LabError::Precondition(_))));
        assert!(level_set_extract(&f, 0.1, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn prop32_increasing_in_alpha(k in 1u32..6, c1 in 0.1f64..3.0) {
            let mut last = 0.0;
            for i in 1..=36 {
                let alpha = i as f64 / 100.0;
                let v = prop32_lower_bound(alpha, k, c1).unwrap();
                prop_assert!(v >= last);
                last = v;
            }
        }

        #[test]
        fn hoelder_margin(values in proptest::collection::vec(0.0f64..5.0, 31), p in 1.05f64..8.0, frac in 0.05f64..1.0) {
            let f = CyclicFunction::new(31, values).unwrap();
            let alpha = f.mean() * frac;
            prop_assume!(alpha > 0.0);
            let l = level_set_extract(&f, alpha, p).unwrap();
            prop_assert!(l.margin >= 0.0);
        }
    }
}

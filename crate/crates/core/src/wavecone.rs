//! Wave cone of the linearized Euler system, explicit directions for
//! differences of constitutive points, and the H_N splitting condition.

use crate::error::{Error, Result};
use crate::exactnum::XReal;
use crate::model::PHPoint;
use std::collections::HashMap;

/// Space-time direction `eta = (eta_t, eta_x)` with `eta_x != 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveDirection {
    pub eta_t: XReal,
    pub eta_x: [XReal; 2],
}

impl WaveDirection {
    pub fn as_array(&self) -> [XReal; 3] {
        [self.eta_t.clone(), self.eta_x[0].clone(), self.eta_x[1].clone()]
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [self.eta_t.to_f64(), self.eta_x[0].to_f64(), self.eta_x[1].to_f64()]
    }
}

/// Rows of the 4x3 symbol matrix whose kernel defines the cone.
pub fn symbol_matrix(z: &PHPoint) -> [[XReal; 3]; 4] {
    let [m1, m2] = &z.m;
    [
        [XReal::zero(), m1.clone(), m2.clone()],
        [m1.clone(), &z.u11 + &z.q, z.u12.clone()],
        [m2.clone(), z.u12.clone(), &z.q - &z.u11],
        [z.q.clone(), z.f[0].clone(), z.f[1].clone()],
    ]
}

/// `A(z) eta`, four components.
pub fn apply_symbol(z: &PHPoint, eta: &WaveDirection) -> [XReal; 4] {
    let a = symbol_matrix(z);
    let e = eta.as_array();
    std::array::from_fn(|i| &a[i][0] * &e[0] + &a[i][1] * &e[1] + &a[i][2] * &e[2])
}

/// Kernel basis of a 4x3 matrix by Gauss-Jordan elimination over the exact field.
fn kernel(mut a: [[XReal; 3]; 4]) -> Result<Vec<[XReal; 3]>> {
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..3 {
        let mut piv = None;
        for (r, rowv) in a.iter().enumerate().skip(row) {
            if !rowv[col].is_zero()? {
                piv = Some(r);
                break;
            }
        }
        let Some(p) = piv else { continue };
        a.swap(row, p);
        let inv = a[row][col].recip()?;
        for c in 0..3 {
            a[row][c] = &a[row][c] * &inv;
        }
        for r in 0..4 {
            if r != row && !a[r][col].is_zero()? {
                let f = a[r][col].clone();
                for c in 0..3 {
                    a[r][c] = &a[r][c] - &f * &a[row][c];
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == 4 {
            break;
        }
    }
    let free: Vec<usize> = (0..3).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Vec::new();
    for &fc in &free {
        let mut v: [XReal; 3] = std::array::from_fn(|_| XReal::zero());
        v[fc] = XReal::one();
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = a[r][fc].neg();
        }
        basis.push(v);
    }
    Ok(basis)
}

/// A kernel direction with nonzero spatial part, if one exists.
pub fn in_lambda(z: &PHPoint) -> Result<Option<WaveDirection>> {
    for v in kernel(symbol_matrix(z))? {
        if !v[1].is_zero()? || !v[2].is_zero()? {
            let [t, x1, x2] = v;
            return Ok(Some(WaveDirection { eta_t: t, eta_x: [x1, x2] }));
        }
    }
    Ok(None)
}

/// Explicit direction for `z1 - z2` with both points in K at density `rho`:
/// `eta_x` orthogonal to the momentum difference, `eta_t = -(m2 . eta_x)/rho`.
pub fn eta_for_k_difference(rho: &XReal, z1: &PHPoint, z2: &PHPoint) -> Result<WaveDirection> {
    let dm = [&z1.m[0] - &z2.m[0], &z1.m[1] - &z2.m[1]];
    let eta_x = if dm[0].is_zero()? && dm[1].is_zero()? {
        [XReal::one(), XReal::zero()]
    } else {
        [dm[1].neg(), dm[0].clone()]
    };
    let eta_t = (&z2.m[0] * &eta_x[0] + &z2.m[1] * &eta_x[1]).div(rho)?.neg();
    let eta = WaveDirection { eta_t, eta_x };
    let diff = z1.sub(z2);
    for r in apply_symbol(&diff, &eta) {
        if !r.is_zero()? {
            return Err(Error::VerificationFailed(
                "difference is not annihilated; inputs are not K-points at a common density".into(),
            ));
        }
    }
    Ok(eta)
}

/// Weighted family `(tau_i, z_i)` with weights summing to one.
#[derive(Clone, Debug)]
pub struct WeightedFamily {
    pub items: Vec<(XReal, PHPoint)>,
}

impl WeightedFamily {
    pub fn new(items: Vec<(XReal, PHPoint)>) -> Self {
        WeightedFamily { items }
    }
}

pub const HN_MAX: usize = 8;

fn family_key(items: &[(XReal, PHPoint)]) -> String {
    let mut parts: Vec<String> = items
        .iter()
        .map(|(t, z)| {
            let c: Vec<String> = z.coords().iter().map(|x| x.to_json().to_string()).collect();
            format!("{}|{}", t.to_json(), c.join(","))
        })
        .collect();
    parts.sort();
    parts.join(";")
}

/// Does the family arise from iterated binary splits along wave-cone
/// directions? Every pair choice is explored, with memoization.
pub fn verify_hn(fam: &WeightedFamily) -> Result<bool> {
    let n = fam.items.len();
    if n == 0 {
        return Err(Error::BadParameters("empty family".into()));
    }
    if n > HN_MAX {
        return Err(Error::NForTooLarge(n));
    }
    let total = fam.items.iter().fold(XReal::zero(), |acc, (t, _)| acc + t);
    if !total.eq_value(&XReal::one())? {
        return Err(Error::BadParameters("weights must sum to one".into()));
    }
    for (t, _) in &fam.items {
        if !t.is_positive()? {
            return Err(Error::BadParameters("weights must be positive".into()));
        }
    }
    let mut memo = HashMap::new();
    hn_rec(&fam.items, &mut memo)
}

fn hn_rec(items: &[(XReal, PHPoint)], memo: &mut HashMap<String, bool>) -> Result<bool> {
    if items.len() == 1 {
        return items[0].0.eq_value(&XReal::one());
    }
    let key = family_key(items);
    if let Some(&v) = memo.get(&key) {
        return Ok(v);
    }
    let mut found = false;
    'outer: for i in 0..items.len() {
        for j in i + 1..items.len() {
            let (ti, zi) = &items[i];
            let (tj, zj) = &items[j];
            if in_lambda(&zj.sub(zi))?.is_none() {
                continue;
            }
            let t = ti + tj;
            let z = zi.scale(ti).add(&zj.scale(tj)).scale(&t.recip()?);
            let mut rest: Vec<(XReal, PHPoint)> = items
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i && *k != j)
                .map(|(_, v)| v.clone())
                .collect();
            rest.push((t, z));
            if hn_rec(&rest, memo)? {
                found = true;
                break 'outer;
            }
        }
    }
    memo.insert(key, found);
    Ok(found)
}

/// `sum tau_i z_i`.
pub fn barycenter(fam: &WeightedFamily) -> PHPoint {
    fam.items
        .iter()
        .fold(PHPoint::zero(), |acc, (t, z)| acc.add(&z.scale(t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lift_state, EulerState, PressureLaw};

    fn law2() -> PressureLaw {
        PressureLaw::new(&XReal::from(2)).unwrap()
    }

    fn lift(rho: i64, m: [i64; 2]) -> PHPoint {
        let s = EulerState::new(XReal::from(rho), m.map(XReal::from));
        lift_state(&law2(), &s).unwrap().0
    }

    #[test]
    fn zero_point_has_direction() {
        let eta = in_lambda(&PHPoint::zero()).unwrap().unwrap();
        assert!(!eta.eta_x[0].is_zero().unwrap() || !eta.eta_x[1].is_zero().unwrap());
    }

    #[test]
    fn pure_shear_has_no_direction() {
        let mut z = PHPoint::zero();
        z.u11 = XReal::one();
        assert!(in_lambda(&z).unwrap().is_none());
    }

    #[test]
    fn k_difference_direction() {
        let z1 = lift(1, [1, 0]);
        let z2 = lift(1, [0, 1]);
        let eta = eta_for_k_difference(&XReal::one(), &z1, &z2).unwrap();
        assert_eq!(eta.eta_x, [XReal::one(), XReal::one()]);
        assert_eq!(eta.eta_t, XReal::from(-1));
        // Oracle: the symbol of the difference applied by hand.
        let d = z1.sub(&z2);
        let e = [-1i64, 1, 1].map(XReal::from);
        let rows = symbol_matrix(&d);
        for r in rows {
            let v = &r[0] * &e[0] + &r[1] * &e[1] + &r[2] * &e[2];
            assert_eq!(v, XReal::zero());
        }
        assert!(in_lambda(&d).unwrap().is_some());
        let same = eta_for_k_difference(&XReal::one(), &z1, &z1).unwrap();
        assert_eq!(same.eta_x, [XReal::one(), XReal::zero()]);
        assert_eq!(same.eta_t, XReal::from(-1));
    }

    #[test]
    fn non_k_points_rejected() {
        let z1 = lift(1, [1, 0]);
        let mut z2 = lift(1, [0, 1]);
        z2.q = &z2.q + XReal::one();
        assert!(matches!(
            eta_for_k_difference(&XReal::one(), &z1, &z2),
            Err(Error::VerificationFailed(_))
        ));
    }

    #[test]
    fn hn_small_families() {
        let z = lift(1, [1, 0]);
        assert!(verify_hn(&WeightedFamily::new(vec![(XReal::one(), z.clone())])).unwrap());
        let mut bad = PHPoint::zero();
        bad.u11 = XReal::one();
        let half = XReal::ratio(1, 2);
        let fam = WeightedFamily::new(vec![(half.clone(), PHPoint::zero()), (half, bad)]);
        assert!(!verify_hn(&fam).unwrap());
        let b = barycenter(&WeightedFamily::new(vec![(XReal::one(), z.clone())]));
        assert_eq!(b, z);
    }
}

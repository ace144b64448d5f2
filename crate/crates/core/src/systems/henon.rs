//! The Hénon map φ(x, y) = (y, y² + b + ax) and its inverse on 𝔸²(ℚ),
//! with the height of (x : y : 1) in ℙ².

use super::{check_index, Dynamics, PolyMap, Registration, SystemError};
use crate::arith::{normalize, ProjPoint, Space};
use crate::poly::Poly;
use rand::{Rng, SeedableRng};
use rug::{Integer, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct HenonSystem {
    a: Rational,
    b: Rational,
}

impl HenonSystem {
    pub fn new(a: Rational, b: Rational) -> Result<Self, SystemError> {
        if a.is_zero() {
            return Err(SystemError::Invalid("Hénon parameter a must be nonzero".into()));
        }
        Ok(HenonSystem { a, b })
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    pub fn affine_point(x: &Rational, y: &Rational) -> ProjPoint {
        normalize(&[vec![x.clone(), y.clone(), Rational::from(1)]]).expect("z = 1")
    }

    /// (x, y) of a point with nonzero last coordinate.
    pub fn affine_coordinates(p: &ProjPoint) -> Option<(Rational, Rational)> {
        let f = p.factor(0);
        if f.len() != 3 || f[2].is_zero() {
            return None;
        }
        Some((
            Rational::from((f[0].clone(), f[2].clone())),
            Rational::from((f[1].clone(), f[2].clone())),
        ))
    }

    pub fn forward(&self, x: &Rational, y: &Rational) -> (Rational, Rational) {
        let ny = Rational::from(y * y) + &self.b + Rational::from(&self.a * x);
        (y.clone(), ny)
    }

    pub fn backward(&self, x: &Rational, y: &Rational) -> (Rational, Rational) {
        let nx = (Rational::from(y - Rational::from(x * x)) - &self.b) / &self.a;
        (nx, x.clone())
    }

    /// φ and φ⁻¹ extended to ℙ² with integer coefficients:
    /// (YZ : Y² + bZ² + aXZ : Z²) and (YZ − X² − bZ² : aXZ : aZ²), with
    /// denominators cleared.
    pub fn closure_maps(&self) -> [PolyMap; 2] {
        let den = Integer::from(self.a.denom().lcm_ref(self.b.denom()));
        let an = Integer::from(self.a.numer() * &den) / self.a.denom();
        let bn = Integer::from(self.b.numer() * &den) / self.b.denom();
        let t = |e: [u32; 3], c: Integer| (e.to_vec(), c);
        let fwd = PolyMap::new(vec![
            Poly::from_terms(3, [t([0, 1, 1], den.clone())]),
            Poly::from_terms(3, [t([0, 2, 0], den.clone()), t([0, 0, 2], bn.clone()), t([1, 0, 1], an.clone())]),
            Poly::from_terms(3, [t([0, 0, 2], den.clone())]),
        ])
        .expect("homogeneous");
        // φ⁻¹(X:Y:Z) = (YZ − X² − bZ² : aXZ : aZ²) scaled by den
        let bwd = PolyMap::new(vec![
            Poly::from_terms(3, [t([0, 1, 1], den.clone()), t([2, 0, 0], Integer::from(-&den)), t([0, 0, 2], -bn)]),
            Poly::from_terms(3, [t([1, 0, 1], an.clone())]),
            Poly::from_terms(3, [t([0, 0, 2], an)]),
        ])
        .expect("homogeneous");
        [fwd, bwd]
    }

    /// Random affine points with integer coordinates in [−m, m].
    pub fn sample_integer_box(&self, count: usize, m: i64, seed: u64) -> Vec<ProjPoint> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let x = Rational::from(rng.gen_range(-m..=m));
                let y = Rational::from(rng.gen_range(-m..=m));
                Self::affine_point(&x, &y)
            })
            .collect()
    }
}

impl Dynamics for HenonSystem {
    fn label(&self) -> String {
        format!("henon[{},{}]", self.a, self.b)
    }

    fn space(&self) -> Space {
        Space::projective(2)
    }

    fn num_maps(&self) -> usize {
        2
    }

    /// k + ε of the height inequality.
    fn degree(&self) -> f64 {
        2.5
    }

    fn weights(&self) -> Vec<f64> {
        vec![1.0]
    }

    fn registration(&self) -> Registration {
        Registration::InequalityOnly { k_plus_epsilon: 2.5 }
    }

    fn contains(&self, x: &ProjPoint) -> bool {
        Self::affine_coordinates(x).is_some()
    }

    fn evaluate(&self, i: usize, p: &ProjPoint) -> Result<ProjPoint, SystemError> {
        check_index(i, 2)?;
        p.in_space(&self.space())?;
        let (x, y) = Self::affine_coordinates(p)
            .ok_or_else(|| SystemError::Indeterminate { map: i, point: p.to_string() })?;
        let (nx, ny) = if i == 0 { self.forward(&x, &y) } else { self.backward(&x, &y) };
        Ok(Self::affine_point(&nx, &ny))
    }

    fn sample_points(&self, count: usize, seed: u64) -> Vec<ProjPoint> {
        self.sample_integer_box(count, 100, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{check_morphism, MorphismCheck};

    #[test]
    fn forward_example_and_inverse() {
        let h = HenonSystem::new(Rational::from(1), Rational::new()).unwrap();
        let p = HenonSystem::affine_point(&Rational::from(1), &Rational::from(2));
        assert_eq!(h.evaluate(0, &p).unwrap().to_string(), "(2:5:1)");
        assert_eq!(h.evaluate(1, &p).unwrap().to_string(), "(1:1:1)");
        for q in h.sample_points(500, 11) {
            assert_eq!(h.evaluate(1, &h.evaluate(0, &q).unwrap()).unwrap(), q);
        }
    }

    #[test]
    fn rational_parameters_and_infinity() {
        let h = HenonSystem::new(Rational::from((2, 3)), Rational::from((-1, 5))).unwrap();
        let p = HenonSystem::affine_point(&Rational::from((1, 2)), &Rational::from(7));
        assert_eq!(h.evaluate(0, &h.evaluate(1, &p).unwrap()).unwrap(), p);
        let inf = ProjPoint::from_i64(&[&[1, 0, 0]]).unwrap();
        assert!(matches!(h.evaluate(0, &inf), Err(SystemError::Indeterminate { .. })));
        assert!(HenonSystem::new(Rational::new(), Rational::new()).is_err());
    }

    #[test]
    fn closure_is_not_a_morphism_but_agrees_on_affine_points() {
        let h = HenonSystem::new(Rational::from((2, 3)), Rational::from((-1, 5))).unwrap();
        let [f, g] = h.closure_maps();
        assert_eq!(check_morphism(&f), MorphismCheck::NotMorphism);
        assert_eq!(check_morphism(&g), MorphismCheck::NotMorphism);
        let p = HenonSystem::affine_point(&Rational::from((1, 2)), &Rational::from(7));
        for (k, m) in [f, g].iter().enumerate() {
            let img = normalize(&[m.apply(p.factor(0)).into_iter().map(Rational::from).collect()]).unwrap();
            assert_eq!(img, h.evaluate(k, &p).unwrap());
        }
    }
}
